//! Skew estimation and correction, then quarter-turn orientation from
//! headstroke (matra) statistics of a text line.
//!
//! Angles are in degrees, counter-clockwise positive as displayed. A page
//! whose content is tilted by `+a` yields a [`SkewEstimate`] of `+a` and is
//! corrected by rotating `-a`. Quarter turns count counter-clockwise.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classify::{binarize_block, line_metrics, LineMetrics};
use crate::config::{DecompositionConfig, OrientationLineMode};
use crate::error::{Error, Result};
use crate::raster::{rotate_by_angle, BinaryMap, GrayImage};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SkewEstimate {
    /// Content tilt, counter-clockwise positive.
    pub angle: f64,
    /// Profile variance at `angle`.
    pub score: f64,
    /// Quarter-turn variant of the ink map that produced the estimate.
    pub source_turns: u8,
}

/// Ink pixel coordinates relative to the leftmost ink column.
struct InkPoints {
    points: Vec<(u32, u32)>,
    width: usize,
    height: usize,
}

impl InkPoints {
    fn new(ink: &BinaryMap) -> Result<Self> {
        let x_min = (0..ink.width())
            .find(|&x| (0..ink.height()).any(|y| ink.get(x, y)))
            .ok_or(Error::NoContent)?;
        let mut points = Vec::new();
        for y in 0..ink.height() {
            for (x, &b) in ink.row(y).iter().enumerate() {
                if b {
                    points.push(((x - x_min) as u32, y as u32));
                }
            }
        }
        Ok(Self {
            points,
            width: ink.width() - x_min,
            height: ink.height(),
        })
    }
}

/// Variance of the horizontal projection after shearing rows by
/// `y' = y + x * tan(angle)`. The bin range is fixed by `half_range` so
/// scores at different angles are comparable.
struct ShearObjective {
    ink: InkPoints,
    shift: f64,
    bins: usize,
}

impl ShearObjective {
    fn new(ink: InkPoints, half_range: f64) -> Self {
        let reach = (ink.width as f64 * half_range.to_radians().tan()).ceil() + 1.0;
        let bins = ink.height + 2 * reach as usize + 1;
        Self {
            ink,
            shift: reach,
            bins,
        }
    }

    fn score(&self, degrees: f64) -> f64 {
        let t = degrees.to_radians().tan();
        let mut profile = vec![0u32; self.bins];
        for &(x, y) in &self.ink.points {
            let bin = (y as f64 + x as f64 * t + self.shift).round() as usize;
            profile[bin] += 1;
        }
        let n = self.ink.points.len() as f64;
        let b = self.bins as f64;
        let sum_sq: f64 = profile.iter().map(|&p| (p as f64) * (p as f64)).sum();
        sum_sq / b - (n / b) * (n / b)
    }
}

fn better(cand: (f64, f64), best: (f64, f64)) -> bool {
    let (a, s) = cand;
    let (ba, bs) = best;
    s > bs || (s == bs && (a.abs() < ba.abs() || (a.abs() == ba.abs() && a < ba)))
}

/// Projection-profile skew search: a coarse sweep over
/// `[-half_range, half_range]`, then a fine sweep within one coarse step of
/// the coarse optimum. Ties go to the smaller absolute angle.
pub fn skew_angle(ink: &BinaryMap, half_range: f64, coarse_step: f64, fine_step: f64) -> Result<SkewEstimate> {
    assert!(fine_step > 0.0 && fine_step <= coarse_step);
    let objective = ShearObjective::new(InkPoints::new(ink)?, half_range);

    let coarse_n = (half_range / coarse_step).floor() as i64;
    let mut best = (0.0, f64::NEG_INFINITY);
    for i in -coarse_n..=coarse_n {
        let a = i as f64 * coarse_step;
        let cand = (a, objective.score(a));
        if better(cand, best) {
            best = cand;
        }
    }

    let center = best.0;
    let fine_n = (coarse_step / fine_step).round() as i64;
    for k in -fine_n..=fine_n {
        let a = center + k as f64 * fine_step;
        if a.abs() > half_range + 1e-9 {
            continue;
        }
        let cand = (a, objective.score(a));
        if better(cand, best) {
            best = cand;
        }
    }

    Ok(SkewEstimate {
        angle: refine(&objective, best, fine_step, half_range),
        score: best.1,
        source_turns: 0,
    })
}

/// Vertex of the parabola through the best grid angle and its two
/// neighbours, kept within half a step of the grid optimum.
fn refine(objective: &ShearObjective, (a, s): (f64, f64), step: f64, half_range: f64) -> f64 {
    if a.abs() + step > half_range + 1e-9 {
        return a;
    }
    let (lo, hi) = (objective.score(a - step), objective.score(a + step));
    let curvature = lo - 2.0 * s + hi;
    if curvature >= 0.0 {
        return a;
    }
    let offset = (0.5 * (lo - hi) / curvature).clamp(-0.5, 0.5);
    a + offset * step
}

/// Variance objective at one angle; exposed for diagnostics and tests.
pub fn skew_objective(ink: &BinaryMap, half_range: f64, degrees: f64) -> Result<f64> {
    Ok(ShearObjective::new(InkPoints::new(ink)?, half_range).score(degrees))
}

/// Estimates skew on the ink map and its three quarter-turn rotations and
/// keeps the estimate with the largest absolute angle (ties to the lowest
/// turn count). Content that defeats one orientation's profile, such as a
/// photograph at the top of the page, cannot pull the result toward zero.
pub fn four_way_skew(ink: &BinaryMap, cfg: &DecompositionConfig) -> Result<SkewEstimate> {
    let estimates: Vec<Result<SkewEstimate>> = (0u8..4)
        .into_par_iter()
        .map(|turns| {
            skew_angle(
                &ink.rotate_quarter(turns),
                cfg.skew_half_range,
                cfg.skew_coarse_step,
                cfg.skew_fine_step,
            )
            .map(|e| SkewEstimate {
                source_turns: turns,
                ..e
            })
        })
        .collect();
    let mut best: Option<SkewEstimate> = None;
    for est in estimates {
        let est = est?;
        if best.is_none_or(|b| est.angle.abs() > b.angle.abs()) {
            best = Some(est);
        }
    }
    Ok(best.expect("four estimates"))
}

/// Rotates the page by `-est.angle` on a white canvas; angles below
/// `fine_step` are left alone.
pub fn deskew(page: &GrayImage, est: &SkewEstimate, fine_step: f64) -> GrayImage {
    if est.angle.abs() < fine_step {
        page.clone()
    } else {
        rotate_by_angle(page, -est.angle, 255)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrientationDecision {
    /// Counter-clockwise quarter turns that make the page upright.
    pub turns: u8,
    /// Headstroke pixels per line height in the page as given.
    pub pixel_ratio_0: f64,
    /// The same for the page turned 90° clockwise.
    pub pixel_ratio_90: f64,
    /// The headstroke sits in the upper half of the measured line.
    pub matra_test_passed: bool,
    /// The measured line was the last one because no text line starts
    /// near the top.
    pub used_last_line: bool,
}

/// Text-line statistics of one view of the page.
#[derive(Clone, Copy, Debug, PartialEq)]
struct ViewStats {
    pixel_ratio: f64,
    upright: bool,
    used_last_line: bool,
}

fn is_text_band(m: &LineMetrics, peak_ratio: f64) -> bool {
    m.matra_black as f64 >= peak_ratio * m.median_black.max(1) as f64
}

fn upright(m: &LineMetrics) -> bool {
    (m.matra_index as f64) < m.line_height as f64 / 2.0
}

fn view_stats(ink: &BinaryMap, cfg: &DecompositionConfig) -> Option<ViewStats> {
    let bands: Vec<LineMetrics> = line_metrics(ink, cfg.line_band_alpha)
        .into_iter()
        .filter(|m| is_text_band(m, cfg.matra_peak_ratio))
        .collect();
    let first = bands.first()?;
    let ratio = |m: &LineMetrics| m.matra_black as f64 / m.line_height as f64;
    match cfg.orientation_line_mode {
        OrientationLineMode::FirstLine => {
            let near_top = (first.band_top as f64) < cfg.fallback_top_fraction * ink.height() as f64;
            let line = if near_top { first } else { bands.last().expect("non-empty") };
            Some(ViewStats {
                pixel_ratio: ratio(line),
                upright: upright(line),
                used_last_line: !near_top,
            })
        }
        OrientationLineMode::Mean => {
            let n = bands.len() as f64;
            let up = bands.iter().filter(|m| upright(m)).count();
            Some(ViewStats {
                pixel_ratio: bands.iter().map(ratio).sum::<f64>() / n,
                upright: 2 * up >= bands.len(),
                used_last_line: false,
            })
        }
    }
}

/// Chooses between the page and its 90° clockwise turn by the larger
/// headstroke pixel ratio, then checks whether the headstroke lies above
/// the middle of the line. Upright text needs no turn (or one clockwise
/// turn, i.e. three counter-clockwise, in the rotated view); inverted text
/// needs a half turn more.
pub fn decide_rotation(ink: &BinaryMap, cfg: &DecompositionConfig) -> Result<OrientationDecision> {
    let rotated = ink.rotate_quarter(3);
    let s0 = view_stats(ink, cfg);
    let s90 = view_stats(&rotated, cfg);
    let r0 = s0.map_or(0.0, |s| s.pixel_ratio);
    let r90 = s90.map_or(0.0, |s| s.pixel_ratio);
    let (stats, base_turns) = match (s0, s90) {
        (None, None) => return Err(Error::OrientationUndecidable),
        (Some(a), Some(b)) => {
            if b.pixel_ratio > a.pixel_ratio {
                (b, 3)
            } else {
                (a, 0)
            }
        }
        (Some(a), None) => (a, 0),
        (None, Some(b)) => (b, 3),
    };
    let turns = if stats.upright { base_turns } else { (base_turns + 2) % 4 };
    Ok(OrientationDecision {
        turns,
        pixel_ratio_0: r0,
        pixel_ratio_90: r90,
        matra_test_passed: stats.upright,
        used_last_line: stats.used_last_line,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OrientFlag {
    NoContent,
    OrientationUndecidable,
}

#[derive(Clone, Debug)]
pub struct OrientOutcome {
    pub page: GrayImage,
    pub skew: Option<SkewEstimate>,
    pub decision: Option<OrientationDecision>,
    pub flags: Vec<OrientFlag>,
}

impl OrientOutcome {
    pub fn skew_degrees(&self) -> f64 {
        self.skew.map_or(0.0, |s| s.angle)
    }

    pub fn turns_applied(&self) -> u8 {
        self.decision.map_or(0, |d| d.turns)
    }
}

/// Binarize, estimate skew four ways, de-skew, decide the quarter turn on
/// the de-skewed page, and apply it. Failures become flags; the page is
/// then returned with whatever correction was possible.
pub fn auto_orient(page: &GrayImage, cfg: &DecompositionConfig) -> OrientOutcome {
    let ink = binarize_block(page, cfg.binarize_threshold);
    let skew = match four_way_skew(&ink, cfg) {
        Ok(est) => est,
        Err(_) => {
            return OrientOutcome {
                page: page.clone(),
                skew: None,
                decision: None,
                flags: vec![OrientFlag::NoContent],
            }
        }
    };
    let straight = deskew(page, &skew, cfg.skew_fine_step);
    let straight_ink = binarize_block(&straight, cfg.binarize_threshold);
    match decide_rotation(&straight_ink, cfg) {
        Ok(decision) => OrientOutcome {
            page: straight.rotate_quarter(decision.turns),
            skew: Some(skew),
            decision: Some(decision),
            flags: Vec::new(),
        },
        Err(_) => OrientOutcome {
            page: straight,
            skew: Some(skew),
            decision: None,
            flags: vec![OrientFlag::OrientationUndecidable],
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Text-like rows: a solid headstroke and periodic stems below it.
    fn lines_page(w: usize, h: usize) -> GrayImage {
        GrayImage::from_fn(w, h, |x, y| {
            let inside = (20..w - 20).contains(&x) && (20..h - 20).contains(&y);
            let ly = y % 24;
            let ink = inside && (ly < 2 || (ly < 16 && x % 9 < 2));
            if ink {
                0
            } else {
                255
            }
        })
    }

    #[test]
    fn blank_ink_has_no_content() {
        let ink = BinaryMap::new(30, 30, false);
        assert!(matches!(skew_angle(&ink, 10.0, 0.5, 0.1), Err(Error::NoContent)));
    }

    #[test]
    fn upright_lines_have_zero_skew() {
        let ink = binarize_block(&lines_page(300, 200), 128);
        let est = skew_angle(&ink, 10.0, 0.5, 0.1).unwrap();
        assert!(est.angle.abs() <= 0.1, "{est:?}");
    }

    #[test]
    fn tilted_lines_are_measured() {
        let page = rotate_by_angle(&lines_page(300, 200), 3.7, 255);
        let ink = binarize_block(&page, 128);
        let est = skew_angle(&ink, 10.0, 0.5, 0.1).unwrap();
        assert!((est.angle - 3.7).abs() <= 0.2, "{est:?}");
        let peak = skew_objective(&ink, 10.0, 3.7).unwrap();
        let off = skew_objective(&ink, 10.0, 8.7).unwrap();
        assert!(peak > off);
    }

    #[test]
    fn objective_ignores_horizontal_shift() {
        let ink = binarize_block(&rotate_by_angle(&lines_page(200, 150), 2.0, 255), 128);
        let shifted = BinaryMap::from_fn(ink.width() + 13, ink.height(), |x, y| x >= 13 && ink.get(x - 13, y));
        for a in [-4.0, 0.0, 1.5, 2.0, 7.3] {
            assert_eq!(
                skew_objective(&ink, 10.0, a).unwrap(),
                skew_objective(&shifted, 10.0, a).unwrap()
            );
        }
    }

    #[test]
    fn deskew_below_fine_step_is_identity() {
        let page = lines_page(100, 80);
        let est = SkewEstimate {
            angle: 0.05,
            score: 0.0,
            source_turns: 0,
        };
        assert_eq!(deskew(&page, &est, 0.1), page);
    }

    #[test]
    fn rotation_decisions_for_all_quarter_turns() {
        let cfg = DecompositionConfig::default();
        let upright = binarize_block(&lines_page(240, 200), 128);
        for k in 0..4u8 {
            let d = decide_rotation(&upright.rotate_quarter(k), &cfg).unwrap();
            assert_eq!(d.turns, (4 - k) % 4, "k={k}: {d:?}");
        }
        let d = decide_rotation(&upright, &cfg).unwrap();
        assert!(d.pixel_ratio_0 > d.pixel_ratio_90);
        assert!(d.matra_test_passed);
    }

    #[test]
    fn undecidable_without_lines() {
        let cfg = DecompositionConfig::default();
        assert!(matches!(
            decide_rotation(&BinaryMap::new(50, 50, false), &cfg),
            Err(Error::OrientationUndecidable)
        ));
    }

    #[test]
    fn blank_page_is_flagged() {
        let out = auto_orient(&GrayImage::new(60, 60, 255), &DecompositionConfig::default());
        assert_eq!(out.flags, vec![OrientFlag::NoContent]);
        assert_eq!(out.turns_applied(), 0);
    }
}
