//! Whole-pipeline runs over synthetic corpora.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classify::Region;
use crate::config::DecompositionConfig;
use crate::harness::eval::{match_regions, EvalReport};
use crate::harness::synth::{synth_page, GroundTruth, PageSpec};
use crate::pipeline::decompose;
use crate::raster::{BBox, GrayImage};

/// Largest skew error, in degrees, that still counts as recovered.
pub const SKEW_TOLERANCE: f64 = 0.3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PageOutcome {
    pub index: usize,
    pub truth_skew: f64,
    pub truth_turns: u8,
    pub estimated_skew: Option<f64>,
    pub turns_applied: Option<u8>,
    /// `estimated_skew - truth_skew`.
    pub skew_error: Option<f64>,
    pub turns_correct: bool,
    pub fully_corrected: bool,
    pub eval: Option<EvalReport>,
    pub error: Option<String>,
}

impl PageOutcome {
    fn failed(index: usize, skew: f64, turns: u8, error: String) -> Self {
        Self {
            index,
            truth_skew: skew,
            truth_turns: turns,
            estimated_skew: None,
            turns_applied: None,
            skew_error: None,
            turns_correct: false,
            fully_corrected: false,
            eval: None,
            error: Some(error),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SkewStats {
    pub pages: usize,
    pub mean_abs_error: f64,
    pub max_abs_error: f64,
    pub within_tolerance: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorpusReport {
    pub pages: Vec<PageOutcome>,
    pub eval: EvalReport,
    pub skew: SkewStats,
    pub rotation_correct: usize,
    pub rotation_accuracy: f64,
    pub fully_corrected: usize,
    pub failed_pages: usize,
}

impl CorpusReport {
    /// Folds per-page outcomes, in the order given.
    pub fn from_pages(pages: Vec<PageOutcome>, iou_min: f64) -> Self {
        let eval = EvalReport::aggregate(iou_min, pages.iter().filter_map(|p| p.eval.as_ref()));
        let errors: Vec<f64> = pages.iter().filter_map(|p| p.skew_error).map(f64::abs).collect();
        let skew = SkewStats {
            pages: errors.len(),
            mean_abs_error: if errors.is_empty() {
                0.0
            } else {
                errors.iter().sum::<f64>() / errors.len() as f64
            },
            max_abs_error: errors.iter().copied().fold(0.0, f64::max),
            within_tolerance: errors.iter().filter(|&&e| e <= SKEW_TOLERANCE + 1e-9).count(),
        };
        let rotation_correct = pages.iter().filter(|p| p.turns_correct).count();
        Self {
            rotation_accuracy: if pages.is_empty() {
                0.0
            } else {
                rotation_correct as f64 / pages.len() as f64
            },
            rotation_correct,
            fully_corrected: pages.iter().filter(|p| p.fully_corrected).count(),
            failed_pages: pages.iter().filter(|p| p.error.is_some()).count(),
            skew,
            eval,
            pages,
        }
    }
}

/// Shifts boxes on a corrected page back into the upright frame of size
/// `width x height`. Both rotations keep content centered, so the offset
/// is half the size difference. Boxes falling entirely outside are dropped.
pub fn to_truth_frame(regions: &[Region], page: &GrayImage, width: usize, height: usize) -> Vec<Region> {
    let dx = (page.width() as f64 - width as f64) / 2.0;
    let dy = (page.height() as f64 - height as f64) / 2.0;
    let map = |v: usize, d: f64, max: usize| (v as f64 - d).round().clamp(0.0, (max - 1) as f64) as usize;
    regions
        .iter()
        .filter_map(|r| {
            let b = r.bbox;
            let x1 = b.x1 as f64 - dx;
            let y1 = b.y1 as f64 - dy;
            if x1 < 0.0 || y1 < 0.0 || b.x0 as f64 - dx > (width - 1) as f64 || b.y0 as f64 - dy > (height - 1) as f64 {
                return None;
            }
            Some(Region {
                bbox: BBox::new(map(b.x0, dx, width), map(b.y0, dy, height), map(b.x1, dx, width), map(b.y1, dy, height)),
                ..r.clone()
            })
        })
        .collect()
}

/// Runs the full pipeline (with orientation) on one page and scores it.
pub fn evaluate_page(index: usize, page: &GrayImage, truth: &GroundTruth, cfg: &DecompositionConfig, iou_min: f64) -> PageOutcome {
    let dec = match decompose(page, cfg, true) {
        Ok(d) => d,
        Err(e) => return PageOutcome::failed(index, truth.skew, truth.turns, e.to_string()),
    };
    let orientation = dec.orientation.as_ref();
    let estimated_skew = orientation.and_then(|o| o.skew).map(|s| s.angle);
    let turns_applied = orientation.and_then(|o| o.decision).map(|d| d.turns);
    let skew_error = estimated_skew.map(|a| a - truth.skew);
    let turns_correct = turns_applied == Some((4 - truth.turns % 4) % 4);
    let skew_ok = skew_error.is_some_and(|e| e.abs() <= SKEW_TOLERANCE + 1e-9);
    let regions = to_truth_frame(&dec.regions, &dec.page, truth.width, truth.height);
    PageOutcome {
        index,
        truth_skew: truth.skew,
        truth_turns: truth.turns,
        estimated_skew,
        turns_applied,
        skew_error,
        turns_correct,
        fully_corrected: turns_correct && skew_ok,
        eval: Some(match_regions(&regions, truth, iou_min)),
        error: None,
    }
}

/// Evaluates `n` pages on a pool of `workers` threads; `page(i)` produces
/// page `i` and its truth. Outcomes come back in index order whatever the
/// scheduling.
pub fn run_pages<F>(n: usize, workers: usize, cfg: &DecompositionConfig, iou_min: f64, page: F) -> CorpusReport
where
    F: Fn(usize) -> Result<(GrayImage, GroundTruth), (f64, u8, String)> + Sync,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .expect("thread pool");
    let outcomes: Vec<PageOutcome> = pool.install(|| {
        (0..n)
            .into_par_iter()
            .map(|i| match page(i) {
                Ok((img, truth)) => evaluate_page(i, &img, &truth, cfg, iou_min),
                Err((skew, turns, msg)) => PageOutcome::failed(i, skew, turns, msg),
            })
            .collect()
    });
    CorpusReport::from_pages(outcomes, iou_min)
}

/// Synthesizes and evaluates every spec.
pub fn run_corpus(specs: &[PageSpec], cfg: &DecompositionConfig, iou_min: f64, workers: usize) -> CorpusReport {
    run_pages(specs.len(), workers, cfg, iou_min, |i| {
        let spec = &specs[i];
        synth_page(spec).map_err(|e| (spec.skew, spec.turns, e.to_string()))
    })
}

fn base_spec(rng: &mut ChaCha8Rng) -> PageSpec {
    PageSpec {
        seed: rng.gen(),
        body_line_height: rng.gen_range(16..=20),
        column_count: rng.gen_range(1..=3),
        headline_present: rng.gen_bool(0.5),
        subheadline_present: false,
        ..PageSpec::plain(0, 1)
    }
}

/// Text pages skewed uniformly in `[-10, 10]` degrees, upright.
pub fn deskew_corpus(seed: u64, pages: usize) -> Vec<PageSpec> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..pages)
        .map(|_| PageSpec {
            skew: rng.gen_range(-10.0..=10.0),
            ..base_spec(&mut rng)
        })
        .collect()
}

/// Skewed and quarter-turned pages; every third page opens with a large
/// photo across the top.
pub fn rotation_corpus(seed: u64, pages: usize) -> Vec<PageSpec> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..pages)
        .map(|i| {
            let mut spec = PageSpec {
                skew: rng.gen_range(-10.0..=10.0),
                turns: rng.gen_range(0..4),
                ..base_spec(&mut rng)
            };
            if i % 3 == 0 {
                let h = rng.gen_range(0.3..=0.4);
                let w = rng.gen_range(0.6..=1.0);
                spec.image_blocks = vec![[0.0, 0.0, w, h]];
            }
            spec
        })
        .collect()
}

/// Upright pages mixing columns, headlines, sub-headlines and up to two
/// photos.
pub fn layout_corpus(seed: u64, pages: usize) -> Vec<PageSpec> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..pages)
        .map(|_| {
            let columns = rng.gen_range(1..=4);
            let mut spec = PageSpec {
                body_line_height: rng.gen_range(16..=18),
                column_count: columns,
                headline_present: rng.gen_bool(0.7),
                subheadline_present: rng.gen_bool(0.5),
                ..base_spec(&mut rng)
            };
            let images = rng.gen_range(0..=2);
            let mut y = 0.3;
            for _ in 0..images {
                if columns == 1 {
                    // a photo would leave no text beside it
                    break;
                }
                let x0: f64 = rng.gen_range(0.0..0.5);
                let h = rng.gen_range(0.15..0.25);
                spec.image_blocks.push([x0, y, (x0 + rng.gen_range(0.3..0.5)).min(1.0), y + h]);
                y += h + 0.15;
            }
            spec
        })
        .collect()
}
