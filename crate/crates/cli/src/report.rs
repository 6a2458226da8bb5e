//! Output documents and images written by the subcommands.

use std::path::Path;

use docdecomp::config::Resolved;
use docdecomp::harness::CorpusReport;
use docdecomp::pipeline::{PageFlag, StageTimings};
use docdecomp::{BBox, DecompositionConfig, Decomposition, ElementLabel, GrayImage};
use image::{Rgb, RgbImage};
use serde::{Deserialize, Serialize};

use crate::{Failure, CliResult};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PageSize {
    pub width: usize,
    pub height: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrientationSummary {
    pub skew_degrees: f64,
    pub turns_applied: u8,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegionEntry {
    pub id: usize,
    pub label: ElementLabel,
    pub bbox: BBox,
    pub line_height: Option<usize>,
}

/// Contents of `regions.json`. Boxes refer to the page after orientation
/// correction, with inclusive corners.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegionsDoc {
    pub page: PageSize,
    pub orientation: Option<OrientationSummary>,
    pub regions: Vec<RegionEntry>,
}

impl RegionsDoc {
    pub fn from_decomposition(d: &Decomposition) -> Self {
        Self {
            page: PageSize {
                width: d.page.width(),
                height: d.page.height(),
            },
            orientation: d.orientation.as_ref().map(|o| OrientationSummary {
                skew_degrees: o.skew_degrees(),
                turns_applied: o.turns_applied(),
            }),
            regions: d
                .regions
                .iter()
                .enumerate()
                .map(|(id, r)| RegionEntry {
                    id,
                    label: r.label,
                    bbox: r.bbox,
                    line_height: r.line_height,
                })
                .collect(),
        }
    }
}

/// Everything needed to reproduce a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub input: String,
    pub tool_version: String,
    pub command: String,
    pub config: DecompositionConfig,
    /// Pixel thresholds used for smearing, segmentation and the image
    /// filters.
    pub layout_thresholds: Option<Resolved>,
    /// Pixel thresholds used for text labels.
    pub label_thresholds: Option<Resolved>,
    pub flags: Vec<PageFlag>,
    pub timings: Option<StageTimings>,
}

impl RunManifest {
    pub fn new(command: &str, input: &Path, config: &DecompositionConfig) -> Self {
        Self {
            input: input.display().to_string(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            config: config.clone(),
            layout_thresholds: None,
            label_thresholds: None,
            flags: Vec::new(),
            timings: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeskewReport {
    pub skew_degrees: f64,
    pub turns_applied: u8,
    pub pixel_ratio_0: Option<f64>,
    pub pixel_ratio_90: Option<f64>,
    pub flags: Vec<String>,
}

/// `report.json` of the eval command.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalDoc {
    pub corpus: String,
    /// Page files in evaluation order; `report.pages[i]` belongs to `files[i]`.
    pub files: Vec<String>,
    /// Pages left out because their truth file was missing.
    pub skipped: Vec<String>,
    pub report: CorpusReport,
}

pub fn label_color(label: ElementLabel) -> Rgb<u8> {
    match label {
        ElementLabel::Image => Rgb([220, 30, 30]),
        ElementLabel::Headline => Rgb([30, 70, 230]),
        ElementLabel::SubHeadline => Rgb([20, 160, 50]),
        ElementLabel::Column => Rgb([245, 140, 0]),
    }
}

/// The page in color with a 2-pixel outline around each region.
pub fn overlay(page: &GrayImage, doc: &RegionsDoc) -> RgbImage {
    let mut img = RgbImage::from_fn(page.width() as u32, page.height() as u32, |x, y| {
        let v = page.get(x as usize, y as usize);
        Rgb([v, v, v])
    });
    for r in &doc.regions {
        let c = label_color(r.label);
        let b = r.bbox;
        for t in 0..2 {
            let (x0, y0) = (b.x0 + t, b.y0 + t);
            let (Some(x1), Some(y1)) = (b.x1.checked_sub(t), b.y1.checked_sub(t)) else {
                break;
            };
            if x0 > x1 || y0 > y1 {
                break;
            }
            for x in x0..=x1 {
                img.put_pixel(x as u32, y0 as u32, c);
                img.put_pixel(x as u32, y1 as u32, c);
            }
            for y in y0..=y1 {
                img.put_pixel(x0 as u32, y as u32, c);
                img.put_pixel(x1 as u32, y as u32, c);
            }
        }
    }
    img
}

pub fn save_rgb(img: &RgbImage, path: &Path) -> CliResult<()> {
    img.save_with_format(path, image::ImageFormat::Png)
        .map_err(|e| Failure(format!("cannot write {}: {e}", path.display())))
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serializes");
    s.push('\n');
    s
}
