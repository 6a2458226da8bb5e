//! End-to-end decomposition of one page.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::classify::{self, line_metrics, mode, Region};
use crate::config::{DecompositionConfig, Resolved};
use crate::edge::canny;
use crate::error::Result;
use crate::orient::{auto_orient, OrientFlag, OrientationDecision, SkewEstimate};
use crate::raster::{BinaryMap, GrayImage};
use crate::segment::{connected_black_boxes, cut_blocks};
use crate::smear::smear;

/// Wall-clock milliseconds per stage.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct StageTimings {
    pub orient_ms: f64,
    pub edges_ms: f64,
    pub smear_ms: f64,
    pub segment_ms: f64,
    pub classify_ms: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PageFlag {
    NoContent,
    OrientationUndecidable,
    NoTextLines,
}

impl From<OrientFlag> for PageFlag {
    fn from(f: OrientFlag) -> Self {
        match f {
            OrientFlag::NoContent => PageFlag::NoContent,
            OrientFlag::OrientationUndecidable => PageFlag::OrientationUndecidable,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrientationReport {
    pub skew: Option<SkewEstimate>,
    pub decision: Option<OrientationDecision>,
}

impl OrientationReport {
    pub fn skew_degrees(&self) -> f64 {
        self.skew.map_or(0.0, |s| s.angle)
    }

    pub fn turns_applied(&self) -> u8 {
        self.decision.map_or(0, |d| d.turns)
    }
}

#[derive(Clone, Debug)]
pub struct Decomposition {
    /// The page the regions refer to (corrected when orientation ran).
    pub page: GrayImage,
    pub edges: BinaryMap,
    pub smeared: BinaryMap,
    /// `None` when orientation was not requested.
    pub orientation: Option<OrientationReport>,
    /// Line height estimated from the edge map, used for smearing,
    /// segmentation and the image filters.
    pub estimated_line_height: f64,
    pub layout_thresholds: Resolved,
    pub dominant_line_height: Option<usize>,
    pub label_thresholds: Option<Resolved>,
    pub regions: Vec<Region>,
    pub flags: Vec<PageFlag>,
    pub timings: StageTimings,
}

/// Bands this short are slivers, typically the outer edge of a thin
/// headstroke split off from its line by resampling.
const MIN_ESTIMATE_BAND: usize = 4;

/// Modal band height of the edge map's horizontal projection, ignoring
/// slivers shorter than four rows.
pub fn estimate_line_height(edges: &BinaryMap, alpha: f64) -> Option<usize> {
    mode(
        line_metrics(edges, alpha)
            .iter()
            .map(|m| m.line_height)
            .filter(|&h| h >= MIN_ESTIMATE_BAND),
    )
}

fn ms_since(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

/// Orient (optionally), detect edges, smear, cut blocks and label them.
pub fn decompose(page: &GrayImage, cfg: &DecompositionConfig, orient: bool) -> Result<Decomposition> {
    let mut timings = StageTimings::default();
    let mut flags = Vec::new();

    let t = Instant::now();
    let (page, orientation) = if orient {
        let out = auto_orient(page, cfg);
        flags.extend(out.flags.iter().map(|&f| PageFlag::from(f)));
        let report = OrientationReport {
            skew: out.skew,
            decision: out.decision,
        };
        (out.page, Some(report))
    } else {
        (page.clone(), None)
    };
    timings.orient_ms = ms_since(t);

    let t = Instant::now();
    let edges = canny(&page, &cfg.canny())?;
    let line_height = estimate_line_height(&edges, cfg.line_band_alpha)
        .map_or(cfg.fallback_line_height, |h| h as f64);
    let layout = cfg.resolve(line_height)?;
    timings.edges_ms = ms_since(t);

    let t = Instant::now();
    let smeared = smear(&edges, layout.smear_h, layout.smear_v, layout.smear_final_h);
    timings.smear_ms = ms_since(t);

    let t = Instant::now();
    let blocks = connected_black_boxes(&smeared, layout.min_block_area);
    let cut = cut_blocks(&page, &edges, &smeared, &blocks)?;
    timings.segment_ms = ms_since(t);

    let t = Instant::now();
    let labels = classify::classify_page(&cut, cfg, &layout)?;
    timings.classify_ms = ms_since(t);
    if labels.dominant_line_height.is_none() && !flags.contains(&PageFlag::NoContent) {
        flags.push(PageFlag::NoTextLines);
    }

    Ok(Decomposition {
        page,
        edges,
        smeared,
        orientation,
        estimated_line_height: line_height,
        layout_thresholds: layout,
        dominant_line_height: labels.dominant_line_height,
        label_thresholds: labels.thresholds,
        regions: labels.regions,
        flags,
        timings,
    })
}
