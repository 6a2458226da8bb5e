//! Every tunable threshold of the pipeline, in one flat serializable struct.
//!
//! Lengths are either absolute pixels (a JSON number) or multiples of the
//! page's dominant line height (a string such as `"0.8L"`). They become
//! pixels once a line height is known; see [`DecompositionConfig::resolve`].

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::{Map, Value};

use crate::edge::CannyParams;
use crate::error::{Error, Result};

/// A length in pixels or in multiples of the dominant line height.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Length {
    Px(f64),
    Lines(f64),
}

impl Length {
    pub fn px(&self, line_height: f64) -> f64 {
        match *self {
            Length::Px(v) => v,
            Length::Lines(k) => k * line_height,
        }
    }
}

impl fmt::Display for Length {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Length::Px(v) => write!(f, "{v}"),
            Length::Lines(k) => write!(f, "{k}L"),
        }
    }
}

impl FromStr for Length {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let s = s.trim();
        let parse = |t: &str| {
            t.trim()
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| format!("`{s}` is neither a pixel count nor a multiple like \"0.8L\""))
        };
        match s.strip_suffix(['L', 'l']) {
            Some(k) => parse(k).map(Length::Lines),
            None => parse(s.strip_suffix("px").unwrap_or(s)).map(Length::Px),
        }
    }
}

impl Serialize for Length {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Length::Px(v) => s.serialize_f64(*v),
            Length::Lines(_) => s.serialize_str(&self.to_string()),
        }
    }
}

impl<'de> Deserialize<'de> for Length {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Num(f64),
            Text(String),
        }
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(Length::Px(v)),
            Repr::Text(t) => t.parse().map_err(serde::de::Error::custom),
        }
    }
}

/// How the orientation test picks the text line it measures.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OrientationLineMode {
    /// First text line, or the last one when the top of the page has none.
    FirstLine,
    /// Mean over all text lines.
    Mean,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DecompositionConfig {
    // edges
    pub canny_low: f32,
    pub canny_high: f32,
    pub canny_sigma: f32,
    pub blur_radius: usize,

    /// Luminance below this is ink.
    pub binarize_threshold: u8,
    /// Rows with more than `alpha * width` black pixels belong to a line band.
    pub line_band_alpha: f64,
    /// Line height assumed when the edge map shows no line bands.
    pub fallback_line_height: f64,

    // smearing and separators
    pub smear_h: Length,
    pub smear_v: Length,
    pub smear_final_h: Length,
    pub min_h_gap: Length,
    pub min_v_gap: Length,
    /// Components whose box is smaller than this side squared are noise.
    pub min_block_side: Length,

    // text labels
    pub gap1: Length,
    pub gap2: Length,
    pub x1: Length,
    pub x2: Length,
    pub x3: Length,

    // image filters
    pub img_min_w: Length,
    pub img_min_h: Length,
    pub img_density_min: f64,
    pub img_density_max: f64,
    pub img_aspect_min: f64,
    pub img_aspect_max: f64,

    // skew and orientation
    pub skew_half_range: f64,
    pub skew_coarse_step: f64,
    pub skew_fine_step: f64,
    /// The last line is used when no text line starts in this top fraction.
    pub fallback_top_fraction: f64,
    /// A band is a text line when its matra row holds at least this many
    /// times the band's median row count.
    pub matra_peak_ratio: f64,
    pub orientation_line_mode: OrientationLineMode,

    pub iou_min: f64,
}

impl Default for DecompositionConfig {
    fn default() -> Self {
        let canny = CannyParams::default();
        Self {
            canny_low: canny.low,
            canny_high: canny.high,
            canny_sigma: canny.sigma,
            blur_radius: canny.radius,
            binarize_threshold: 128,
            line_band_alpha: 0.05,
            fallback_line_height: 20.0,
            smear_h: Length::Lines(1.0),
            smear_v: Length::Lines(0.8),
            smear_final_h: Length::Lines(0.5),
            min_h_gap: Length::Lines(0.4),
            min_v_gap: Length::Lines(0.6),
            min_block_side: Length::Lines(0.5),
            gap1: Length::Lines(0.8),
            gap2: Length::Lines(0.3),
            x1: Length::Lines(1.2),
            x2: Length::Lines(2.0),
            x3: Length::Lines(2.0),
            img_min_w: Length::Lines(3.0),
            img_min_h: Length::Lines(3.0),
            img_density_min: 0.02,
            img_density_max: 0.15,
            img_aspect_min: 0.2,
            img_aspect_max: 5.0,
            skew_half_range: 10.0,
            skew_coarse_step: 0.5,
            skew_fine_step: 0.1,
            fallback_top_fraction: 0.3,
            matra_peak_ratio: 2.0,
            orientation_line_mode: OrientationLineMode::FirstLine,
            iou_min: 0.5,
        }
    }
}

fn invalid(key: &str, message: impl Into<String>) -> Error {
    Error::InvalidConfig {
        key: key.to_string(),
        message: message.into(),
    }
}

/// Pulls the offending field name out of a serde error message.
fn key_of(err: &serde_json::Error) -> Option<String> {
    err.to_string().split('`').nth(1).map(str::to_string)
}

/// serde_json type errors do not say which field failed, so retry each
/// top-level key alone to find the culprit.
fn offending_key(text: &str, err: &serde_json::Error) -> String {
    if let Some(k) = key_of(err) {
        return k;
    }
    if let Ok(Value::Object(map)) = serde_json::from_str::<Value>(text) {
        for (k, v) in map {
            let mut single = Map::new();
            single.insert(k.clone(), v);
            if serde_json::from_value::<DecompositionConfig>(Value::Object(single)).is_err() {
                return k;
            }
        }
    }
    "<config>".to_string()
}

impl DecompositionConfig {
    pub fn from_json_str(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| invalid(&offending_key(text, &e), e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json_str(&text)
    }

    /// Overlays `overrides` (field name to JSON value) onto this config.
    pub fn with_overrides(&self, overrides: &Map<String, Value>) -> Result<Self> {
        let mut base = match serde_json::to_value(self).expect("config serializes") {
            Value::Object(m) => m,
            _ => unreachable!(),
        };
        for (k, v) in overrides {
            if !base.contains_key(k) {
                return Err(invalid(k, "unknown field"));
            }
            base.insert(k.clone(), v.clone());
        }
        let merged = Value::Object(base);
        let cfg: Self = serde_json::from_value(merged.clone())
            .map_err(|e| invalid(&offending_key(&merged.to_string(), &e), e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn canny(&self) -> CannyParams {
        CannyParams {
            low: self.canny_low,
            high: self.canny_high,
            sigma: self.canny_sigma,
            radius: self.blur_radius,
        }
    }

    /// Checks the invariants that do not depend on a line height, and the
    /// length orderings at the fallback line height.
    pub fn validate(&self) -> Result<()> {
        if !(self.canny_low > 0.0 && self.canny_low < self.canny_high) {
            return Err(invalid("canny_low", "need 0 < canny_low < canny_high"));
        }
        if !(self.canny_sigma > 0.0) {
            return Err(invalid("canny_sigma", "must be positive"));
        }
        if self.blur_radius < 1 {
            return Err(invalid("blur_radius", "must be at least 1"));
        }
        if !(self.line_band_alpha > 0.0 && self.line_band_alpha < 1.0) {
            return Err(invalid("line_band_alpha", "must lie in (0, 1)"));
        }
        if !(self.fallback_line_height >= 2.0) {
            return Err(invalid("fallback_line_height", "must be at least 2"));
        }
        if !(self.img_density_min < self.img_density_max) {
            return Err(invalid("img_density_min", "must be below img_density_max"));
        }
        if !(0.0..=1.0).contains(&self.img_density_min) || !(0.0..=1.0).contains(&self.img_density_max) {
            return Err(invalid("img_density_max", "densities are fractions in [0, 1]"));
        }
        if !(self.img_aspect_min > 0.0 && self.img_aspect_min < self.img_aspect_max) {
            return Err(invalid("img_aspect_min", "need 0 < img_aspect_min < img_aspect_max"));
        }
        if !(self.skew_half_range > 0.0 && self.skew_half_range <= 15.0) {
            return Err(invalid("skew_half_range", "must lie in (0, 15]"));
        }
        if !(self.skew_fine_step > 0.0 && self.skew_fine_step <= self.skew_coarse_step) {
            return Err(invalid("skew_fine_step", "need 0 < skew_fine_step <= skew_coarse_step"));
        }
        if !(self.fallback_top_fraction > 0.0 && self.fallback_top_fraction <= 1.0) {
            return Err(invalid("fallback_top_fraction", "must lie in (0, 1]"));
        }
        if !(self.matra_peak_ratio >= 1.0) {
            return Err(invalid("matra_peak_ratio", "must be at least 1"));
        }
        if !(self.iou_min > 0.0 && self.iou_min <= 1.0) {
            return Err(invalid("iou_min", "must lie in (0, 1]"));
        }
        for (key, len) in [
            ("smear_h", self.smear_h),
            ("smear_v", self.smear_v),
            ("smear_final_h", self.smear_final_h),
            ("min_h_gap", self.min_h_gap),
            ("min_v_gap", self.min_v_gap),
            ("min_block_side", self.min_block_side),
            ("gap1", self.gap1),
            ("gap2", self.gap2),
            ("x1", self.x1),
            ("x2", self.x2),
            ("x3", self.x3),
            ("img_min_w", self.img_min_w),
            ("img_min_h", self.img_min_h),
        ] {
            if !(len.px(1.0) > 0.0) {
                return Err(invalid(key, "must be positive"));
            }
        }
        self.resolve(self.fallback_line_height).map(|_| ())
    }

    /// Converts every length to pixels for a page whose dominant line
    /// height is `line_height`, and checks the label-threshold ordering.
    pub fn resolve(&self, line_height: f64) -> Result<Resolved> {
        let l = line_height;
        let px = |len: Length| len.px(l);
        let whole = |len: Length| (len.px(l).round() as usize).max(1);
        let r = Resolved {
            line_height: l,
            smear_h: whole(self.smear_h),
            smear_v: whole(self.smear_v),
            smear_final_h: whole(self.smear_final_h),
            min_h_gap: whole(self.min_h_gap),
            min_v_gap: whole(self.min_v_gap),
            min_block_area: whole(self.min_block_side).pow(2),
            gap1: px(self.gap1),
            gap2: px(self.gap2),
            x1: px(self.x1),
            x2: px(self.x2),
            x3: px(self.x3),
            img_min_w: px(self.img_min_w),
            img_min_h: px(self.img_min_h),
        };
        if !(r.x1 < r.x2) {
            return Err(invalid("x1", "need x1 < x2"));
        }
        if !(r.x2 <= r.x3) {
            return Err(invalid("x2", "need x2 <= x3"));
        }
        if !(r.gap2 <= r.gap1) {
            return Err(invalid("gap2", "need gap2 <= gap1"));
        }
        Ok(r)
    }
}

/// Pixel values of the length thresholds for one line height.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Resolved {
    pub line_height: f64,
    pub smear_h: usize,
    pub smear_v: usize,
    pub smear_final_h: usize,
    pub min_h_gap: usize,
    pub min_v_gap: usize,
    pub min_block_area: usize,
    pub gap1: f64,
    pub gap2: f64,
    pub x1: f64,
    pub x2: f64,
    pub x3: f64,
    pub img_min_w: f64,
    pub img_min_h: f64,
}
