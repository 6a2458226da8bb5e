//! Seeded synthetic newspaper pages with ground truth.
//!
//! Text lines imitate matra-bearing script: each word carries a solid
//! headstroke on the line's top rows, and every character cell hangs a
//! stem down to the line's bottom row plus a random curved stroke. Lines
//! are justified, so a column's ink fills its box exactly. Photos are dark
//! rectangles covered in overlapping light and dark blotches.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::classify::ElementLabel;
use crate::error::{Error, Result};
use crate::raster::{rotate_by_angle, BBox, GrayImage};

/// Placement of a photo as fractions `[x0, y0, x1, y1]` of the content area
/// (the page minus its margins). Horizontally the photo snaps to the
/// columns whose centers it covers. A photo starting at `y0 < 0.05` sits
/// above the headline; any other photo is pushed below the headline block.
pub type FracBox = [f64; 4];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PageSpec {
    pub width: usize,
    pub height: usize,
    pub seed: u64,
    pub body_line_height: usize,
    pub column_count: usize,
    pub headline_present: bool,
    pub subheadline_present: bool,
    #[serde(default)]
    pub image_blocks: Vec<FracBox>,
    /// Degrees, counter-clockwise.
    #[serde(default)]
    pub skew: f64,
    /// Counter-clockwise quarter turns applied before the skew.
    #[serde(default)]
    pub turns: u8,
    #[serde(default)]
    pub noise_density: f64,
}

impl PageSpec {
    /// A plain page: `columns` columns of body text, nothing else.
    pub fn plain(seed: u64, columns: usize) -> Self {
        Self {
            width: 720,
            height: 960,
            seed,
            body_line_height: 18,
            column_count: columns,
            headline_present: false,
            subheadline_present: false,
            image_blocks: Vec::new(),
            skew: 0.0,
            turns: 0,
            noise_density: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, message: &str| {
            Err(Error::InvalidPageSpec {
                field: field.to_string(),
                message: message.to_string(),
            })
        };
        if self.width < 400 {
            return bad("width", "must be at least 400");
        }
        if self.height < 400 {
            return bad("height", "must be at least 400");
        }
        if self.body_line_height < 8 {
            return bad("body_line_height", "must be at least 8");
        }
        if self.column_count < 1 {
            return bad("column_count", "must be at least 1");
        }
        if !(0.0..0.01).contains(&self.noise_density) {
            return bad("noise_density", "must lie in [0, 0.01)");
        }
        if self.turns > 3 {
            return bad("turns", "must be 0..=3");
        }
        if !self.skew.is_finite() || self.skew.abs() > 45.0 {
            return bad("skew", "must lie in [-45, 45]");
        }
        for b in &self.image_blocks {
            let ok = b.iter().all(|v| (0.0..=1.0).contains(v)) && b[0] < b[2] && b[1] < b[3];
            if !ok {
                return bad("image_blocks", "fractions must satisfy 0 <= x0 < x1 <= 1 and 0 <= y0 < y1 <= 1");
            }
        }
        Ok(())
    }
}

fn spec_error(field: impl Into<String>, message: impl Into<String>) -> Error {
    Error::InvalidPageSpec {
        field: field.into(),
        message: message.into(),
    }
}

/// Finds the key of `obj` that fails to deserialize, by grafting keys one
/// at a time onto a valid spec.
fn failing_key(obj: &serde_json::Map<String, serde_json::Value>, err: &serde_json::Error) -> String {
    let msg = err.to_string();
    if let Some(k) = msg.split('`').nth(1) {
        return k.to_string();
    }
    let Ok(serde_json::Value::Object(base)) = serde_json::to_value(PageSpec::plain(0, 1)) else {
        return "<spec>".into();
    };
    for (k, v) in obj {
        let mut probe = base.clone();
        probe.insert(k.clone(), v.clone());
        if serde_json::from_value::<PageSpec>(serde_json::Value::Object(probe)).is_err() {
            return k.clone();
        }
    }
    "<spec>".into()
}

/// Parses a JSON array of page specs, validating each. Errors name the
/// offending field, prefixed by the page spec's index in the list.
pub fn parse_page_specs(text: &str) -> Result<Vec<PageSpec>> {
    let value: serde_json::Value = serde_json::from_str(text).map_err(|e| spec_error("<file>", e.to_string()))?;
    let serde_json::Value::Array(items) = value else {
        return Err(spec_error("<file>", "expected a JSON array of page specs"));
    };
    items
        .into_iter()
        .enumerate()
        .map(|(i, item)| {
            let obj = match &item {
                serde_json::Value::Object(m) => m.clone(),
                _ => return Err(spec_error(format!("[{i}]"), "expected an object")),
            };
            let spec: PageSpec = serde_json::from_value(item)
                .map_err(|e| spec_error(format!("[{i}].{}", failing_key(&obj, &e)), e.to_string()))?;
            spec.validate().map_err(|e| match e {
                Error::InvalidPageSpec { field, message } => spec_error(format!("[{i}].{field}"), message),
                other => other,
            })?;
            Ok(spec)
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TruthRegion {
    pub label: ElementLabel,
    pub bbox: BBox,
}

/// Regions in the upright frame plus the distortion applied afterwards.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    /// Upright page size.
    pub width: usize,
    pub height: usize,
    pub regions: Vec<TruthRegion>,
    pub skew: f64,
    pub turns: u8,
}

struct Canvas {
    img: GrayImage,
}

impl Canvas {
    fn fill_rect(&mut self, x0: usize, y0: usize, x1: usize, y1: usize, v: u8) {
        for y in y0..=y1 {
            for x in x0..=x1 {
                self.img.set(x, y, v);
            }
        }
    }

    /// Square brush of side `width`, clipped to `clip`.
    fn dab(&mut self, cx: f64, cy: f64, width: usize, v: u8, clip: BBox) {
        let half = (width as f64 - 1.0) / 2.0;
        let x0 = (cx - half).round().max(clip.x0 as f64) as usize;
        let y0 = (cy - half).round().max(clip.y0 as f64) as usize;
        let x1 = ((cx - half).round() as isize + width as isize - 1).min(clip.x1 as isize);
        let y1 = ((cy - half).round() as isize + width as isize - 1).min(clip.y1 as isize);
        if x1 < x0 as isize || y1 < y0 as isize {
            return;
        }
        self.fill_rect(x0, y0, x1 as usize, y1 as usize, v);
    }

    /// Quadratic Bezier stroke.
    fn curve(&mut self, p0: (f64, f64), p1: (f64, f64), p2: (f64, f64), width: usize, v: u8, clip: BBox) {
        let len = (p1.0 - p0.0).hypot(p1.1 - p0.1) + (p2.0 - p1.0).hypot(p2.1 - p1.1);
        let steps = (len * 2.0).ceil().max(2.0) as usize;
        for i in 0..=steps {
            let t = i as f64 / steps as f64;
            let a = (1.0 - t) * (1.0 - t);
            let b = 2.0 * t * (1.0 - t);
            let c = t * t;
            self.dab(a * p0.0 + b * p1.0 + c * p2.0, a * p0.1 + b * p1.1 + c * p2.1, width, v, clip);
        }
    }
}

/// Draws one justified text line covering exactly `x0..=x1` and
/// `top..top+h`.
fn draw_line(canvas: &mut Canvas, rng: &mut ChaCha8Rng, x0: usize, x1: usize, top: usize, h: usize) {
    let hf = h as f64;
    let bar = ((0.12 * hf).round() as usize).max(2);
    let stem = ((0.1 * hf).round() as usize).max(2);
    let word_gap = ((0.35 * hf).round() as usize).max(2);
    let min_cell = ((0.45 * hf).round() as usize).max(stem + 2);
    let max_cell = ((0.75 * hf).round() as usize).max(min_cell + 1);
    let bottom = top + h - 1;
    let ink: u8 = rng.gen_range(10..=50);

    let mut x = x0;
    while x <= x1 {
        let chars = rng.gen_range(2..=6);
        let cells: Vec<usize> = (0..chars).map(|_| rng.gen_range(min_cell..=max_cell)).collect();
        let mut end = x + cells.iter().sum::<usize>() - 1;
        // no room for another word: stretch this one to the margin
        if end + word_gap + 2 * max_cell > x1 {
            end = x1;
        }
        canvas.fill_rect(x, top, end, top + bar - 1, ink);

        let mut cx = x;
        for (i, &cw) in cells.iter().enumerate() {
            if cx > end {
                break;
            }
            let last = i + 1 == cells.len();
            let cell_end = if last { end } else { (cx + cw - 1).min(end) };
            let clip = BBox::new(cx, top + bar, cell_end, bottom);
            let span = cell_end + 1 - cx;
            let sx = if last {
                cell_end + 1 - stem
            } else {
                cx + rng.gen_range(0..=span.saturating_sub(stem))
            };
            canvas.fill_rect(sx, top + bar, sx + stem - 1, bottom, ink);

            // one curved stroke per cell, kept clear of the bottom row
            let fx = |t: f64| cx as f64 + t * (span as f64 - 1.0);
            let fy = |t: f64| (top + bar) as f64 + t * (bottom - top - bar) as f64;
            let p0 = (fx(rng.gen_range(0.0..0.4)), fy(rng.gen_range(0.1..0.5)));
            let p1 = (fx(rng.gen_range(0.0..1.0)), fy(rng.gen_range(0.0..1.0)));
            let p2 = (fx(rng.gen_range(0.6..1.0)), fy(rng.gen_range(0.4..0.9)));
            canvas.curve(p0, p1, p2, stem, ink, clip);
            cx = cell_end + 1;
        }
        x = end + 1 + word_gap;
    }
}

fn draw_photo(canvas: &mut Canvas, rng: &mut ChaCha8Rng, r: BBox) {
    let base: u8 = rng.gen_range(50..=100);
    canvas.fill_rect(r.x0, r.y0, r.x1, r.y1, base);
    let inner = BBox::new(r.x0 + 2, r.y0 + 2, r.x1 - 2, r.y1 - 2);
    let (w, h) = (inner.width() as f64, inner.height() as f64);
    // overlapping blotches, enough of them that no stretch of the photo is flat
    let count = ((w * h) / 900.0).ceil() as usize + 4;
    for _ in 0..count {
        let cx = inner.x0 as f64 + rng.gen_range(0.0..w);
        let cy = inner.y0 as f64 + rng.gen_range(0.0..h);
        let rx = rng.gen_range(10.0..40.0f64).min(w / 2.0);
        let ry = rng.gen_range(10.0..40.0f64).min(h / 2.0);
        let v = if rng.gen_bool(0.5) {
            base.saturating_sub(rng.gen_range(40..=50))
        } else {
            base.saturating_add(rng.gen_range(60..=130))
        };
        let (ya, yb) = ((cy - ry).max(inner.y0 as f64) as usize, (cy + ry).min(inner.y1 as f64) as usize);
        let (xa, xb) = ((cx - rx).max(inner.x0 as f64) as usize, (cx + rx).min(inner.x1 as f64) as usize);
        for y in ya..=yb {
            for x in xa..=xb {
                let dx = (x as f64 - cx) / rx;
                let dy = (y as f64 - cy) / ry;
                if dx * dx + dy * dy <= 1.0 {
                    canvas.img.set(x, y, v);
                }
            }
        }
    }
}

struct Layout {
    margin: usize,
    columns: Vec<(usize, usize)>,
    content: BBox,
}

impl Layout {
    fn new(spec: &PageSpec) -> Result<Self> {
        let l = spec.body_line_height;
        let margin = 2 * l;
        let gutter = (1.5 * l as f64).round() as usize;
        let n = spec.column_count;
        let content_w = spec.width - 2 * margin;
        let needed = n * 6 * l + (n - 1) * gutter;
        if needed > content_w {
            return Err(Error::LayoutDoesNotFit(format!(
                "{n} columns need {needed} px but the content area is {content_w} px wide"
            )));
        }
        let col_w = (content_w - (n - 1) * gutter) / n;
        let columns = (0..n)
            .map(|i| {
                let x0 = margin + i * (col_w + gutter);
                (x0, x0 + col_w - 1)
            })
            .collect();
        Ok(Self {
            margin,
            columns,
            content: BBox::new(margin, margin, spec.width - margin - 1, spec.height - margin - 1),
        })
    }

    /// Indices of the columns whose centers fall in the fraction range,
    /// or the one nearest its middle.
    fn columns_for(&self, fx0: f64, fx1: f64) -> (usize, usize) {
        let w = self.content.width() as f64;
        let lo = self.content.x0 as f64 + fx0 * w;
        let hi = self.content.x0 as f64 + fx1 * w;
        let centers: Vec<f64> = self.columns.iter().map(|&(a, b)| (a + b) as f64 / 2.0).collect();
        let covered: Vec<usize> = (0..centers.len()).filter(|&i| (lo..=hi).contains(&centers[i])).collect();
        match (covered.first(), covered.last()) {
            (Some(&a), Some(&b)) => (a, b),
            _ => {
                let mid = (lo + hi) / 2.0;
                let i = (0..centers.len())
                    .min_by(|&a, &b| (centers[a] - mid).abs().total_cmp(&(centers[b] - mid).abs()))
                    .expect("at least one column");
                (i, i)
            }
        }
    }
}

/// Renders the page described by `spec` and its ground truth.
pub fn synth_page(spec: &PageSpec) -> Result<(GrayImage, GroundTruth)> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let layout = Layout::new(spec)?;
    let l = spec.body_line_height;
    let gap = (1.5 * l as f64).round() as usize;
    let line_gap = ((0.35 * l as f64).round() as usize).max(2);
    let pitch = l + line_gap;
    let content = layout.content;
    let mut canvas = Canvas {
        img: GrayImage::new(spec.width, spec.height, 255),
    };
    let mut regions = Vec::new();
    let too_small = |what: &str| Error::LayoutDoesNotFit(format!("{what} does not fit on the page"));

    let frac_y = |f: f64| content.y0 + (f * (content.height() - 1) as f64).round() as usize;

    // photos anchored at the top come first and push the headline down
    let mut photos: Vec<BBox> = Vec::new();
    let mut cursor = content.y0;
    for b in spec.image_blocks.iter().filter(|b| b[1] < 0.05) {
        let (ca, cb) = layout.columns_for(b[0], b[2]);
        let r = BBox::new(layout.columns[ca].0, content.y0, layout.columns[cb].1, frac_y(b[3]));
        cursor = cursor.max(r.y1 + 1 + gap);
        photos.push(r);
    }

    for (present, scale) in [(spec.headline_present, 2.2), (spec.subheadline_present, 1.5)] {
        if !present {
            continue;
        }
        let h = (scale * l as f64).round() as usize;
        let frac = rng.gen_range(0.55..=1.0);
        let x1 = content.x0 + ((content.width() as f64 * frac) as usize).max(6 * h) - 1;
        let x1 = x1.min(content.x1);
        if cursor + h > content.y1 {
            return Err(too_small("headline"));
        }
        draw_line(&mut canvas, &mut rng, content.x0, x1, cursor, h);
        let label = if scale > 2.0 {
            ElementLabel::Headline
        } else {
            ElementLabel::SubHeadline
        };
        regions.push(TruthRegion {
            label,
            bbox: BBox::new(content.x0, cursor, x1, cursor + h - 1),
        });
        cursor += h + gap;
    }
    let column_top = cursor;

    for b in spec.image_blocks.iter().filter(|b| b[1] >= 0.05) {
        let (ca, cb) = layout.columns_for(b[0], b[2]);
        let y0 = frac_y(b[1]).max(column_top);
        let y1 = frac_y(b[3]);
        if y1 < y0 + 4 * l {
            return Err(too_small("image block"));
        }
        let r = BBox::new(layout.columns[ca].0, y0, layout.columns[cb].1, y1);
        if photos.iter().any(|p| p.intersects(&r)) {
            return Err(Error::InvalidPageSpec {
                field: "image_blocks".into(),
                message: "image blocks overlap after layout".into(),
            });
        }
        photos.push(r);
    }
    for p in &photos {
        if p.height() < 4 * l {
            return Err(too_small("image block"));
        }
        draw_photo(&mut canvas, &mut rng, *p);
        regions.push(TruthRegion {
            label: ElementLabel::Image,
            bbox: *p,
        });
    }

    // body text flows around the photos, column by column
    for &(cx0, cx1) in &layout.columns {
        let mut blocked: Vec<(usize, usize)> = photos
            .iter()
            .filter(|p| p.x0 <= cx1 && cx0 <= p.x1)
            .map(|p| (p.y0.saturating_sub(gap), p.y1 + gap))
            .collect();
        blocked.sort_unstable();
        let mut free = Vec::new();
        let mut y = column_top;
        for (b0, b1) in blocked {
            if b0 > y {
                free.push((y, b0 - 1));
            }
            y = y.max(b1 + 1);
        }
        if y <= content.y1 {
            free.push((y, content.y1));
        }
        for (f0, f1) in free {
            let span = f1 + 1 - f0;
            let lines = (span + line_gap) / pitch;
            if lines < 2 {
                continue;
            }
            for i in 0..lines {
                draw_line(&mut canvas, &mut rng, cx0, cx1, f0 + i * pitch, l);
            }
            regions.push(TruthRegion {
                label: ElementLabel::Column,
                bbox: BBox::new(cx0, f0, cx1, f0 + (lines - 1) * pitch + l - 1),
            });
        }
    }
    debug_assert!(layout.margin > 0);

    regions.sort_by_key(|r| (r.bbox.y0, r.bbox.x0));
    let truth = GroundTruth {
        width: spec.width,
        height: spec.height,
        regions,
        skew: spec.skew,
        turns: spec.turns,
    };

    let mut img = canvas.img.rotate_quarter(spec.turns);
    if spec.skew != 0.0 {
        img = rotate_by_angle(&img, spec.skew, 255);
    }
    if spec.noise_density > 0.0 {
        for v in img.data_mut() {
            if rng.gen_bool(spec.noise_density) {
                *v = if rng.gen_bool(0.5) { 0 } else { 255 };
            }
        }
    }
    Ok((img, truth))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn full_spec(seed: u64) -> PageSpec {
        PageSpec {
            headline_present: true,
            subheadline_present: true,
            image_blocks: vec![[0.4, 0.3, 1.0, 0.6]],
            noise_density: 0.002,
            ..PageSpec::plain(seed, 3)
        }
    }

    #[test]
    fn deterministic() {
        let a = synth_page(&full_spec(5)).unwrap();
        let b = synth_page(&full_spec(5)).unwrap();
        assert_eq!(a.0, b.0);
        assert_eq!(a.1, b.1);
        let c = synth_page(&full_spec(6)).unwrap();
        assert_ne!(a.0, c.0);
    }

    #[test]
    fn plain_page_has_only_columns() {
        let (_, truth) = synth_page(&PageSpec::plain(1, 1)).unwrap();
        assert_eq!(truth.regions.len(), 1);
        assert_eq!(truth.regions[0].label, ElementLabel::Column);
    }

    #[test]
    fn records_distortion() {
        let spec = PageSpec {
            skew: 3.7,
            turns: 2,
            ..PageSpec::plain(2, 2)
        };
        let (img, truth) = synth_page(&spec).unwrap();
        assert_eq!((truth.skew, truth.turns), (3.7, 2));
        assert!(img.width() > spec.width);
    }

    #[test]
    fn regions_are_disjoint_and_inside() {
        let (img, truth) = synth_page(&full_spec(9)).unwrap();
        let labels: Vec<_> = truth.regions.iter().map(|r| r.label).collect();
        assert!(labels.contains(&ElementLabel::Headline));
        assert!(labels.contains(&ElementLabel::SubHeadline));
        assert!(labels.contains(&ElementLabel::Image));
        for (i, a) in truth.regions.iter().enumerate() {
            a.bbox.check_within(img.width(), img.height()).unwrap();
            for b in &truth.regions[i + 1..] {
                assert!(!a.bbox.intersects(&b.bbox), "{a:?} {b:?}");
            }
        }
    }

    #[test]
    fn truth_boxes_are_tight() {
        let (img, truth) = synth_page(&PageSpec {
            headline_present: true,
            ..PageSpec::plain(4, 2)
        })
        .unwrap();
        for r in &truth.regions {
            let b = r.bbox;
            let dark = |x: usize, y: usize| img.get(x, y) < 128;
            assert!((b.x0..=b.x1).any(|x| dark(x, b.y0)), "top {r:?}");
            assert!((b.x0..=b.x1).any(|x| dark(x, b.y1)), "bottom {r:?}");
            assert!((b.y0..=b.y1).any(|y| dark(b.x0, y)), "left {r:?}");
            assert!((b.y0..=b.y1).any(|y| dark(b.x1, y)), "right {r:?}");
        }
    }

    #[test]
    fn spec_lists_name_the_bad_field() {
        let ok = serde_json::to_string(&vec![PageSpec::plain(3, 2)]).unwrap();
        assert_eq!(parse_page_specs(&ok).unwrap(), vec![PageSpec::plain(3, 2)]);
        let field = |text: &str| match parse_page_specs(text) {
            Err(Error::InvalidPageSpec { field, .. }) => field,
            other => panic!("{other:?}"),
        };
        let mut v = serde_json::to_value(PageSpec::plain(3, 2)).unwrap();
        v["turns"] = serde_json::json!("two");
        assert_eq!(field(&format!("[{{}}, {v}]")), "[0].width");
        assert_eq!(field(&format!("[{v}]")), "[0].turns");
        v["turns"] = serde_json::json!(1);
        v["width"] = serde_json::json!(100);
        assert_eq!(field(&format!("[{v}]")), "[0].width");
        v["width"] = serde_json::json!(720);
        v["colour"] = serde_json::json!(1);
        assert_eq!(field(&format!("[{v}]")), "[0].colour");
        assert_eq!(field("{}"), "<file>");
    }

    #[test]
    fn rejects_bad_specs() {
        let too_many = PageSpec::plain(1, 9);
        assert!(matches!(synth_page(&too_many), Err(Error::LayoutDoesNotFit(_))));
        let small = PageSpec {
            width: 300,
            ..PageSpec::plain(1, 1)
        };
        assert!(matches!(
            synth_page(&small),
            Err(Error::InvalidPageSpec { field, .. }) if field == "width"
        ));
        let noisy = PageSpec {
            noise_density: 0.02,
            ..PageSpec::plain(1, 1)
        };
        assert!(synth_page(&noisy).is_err());
    }
}
