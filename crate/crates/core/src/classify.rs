//! Block labeling: three image filters, then headline / sub-headline /
//! column by comparing each block's line height with the page's dominant
//! (body text) line height.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::config::{DecompositionConfig, Resolved};
use crate::error::{Error, Result};
use crate::raster::{BBox, BinaryMap, GrayImage};
use crate::segment::Block;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ElementLabel {
    Image,
    Headline,
    #[serde(rename = "subheadline")]
    SubHeadline,
    Column,
}

impl ElementLabel {
    /// Report order: images, headlines, sub-headlines, columns.
    pub const ALL: [ElementLabel; 4] = [
        ElementLabel::Image,
        ElementLabel::Headline,
        ElementLabel::SubHeadline,
        ElementLabel::Column,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ElementLabel::Image => "image",
            ElementLabel::Headline => "headline",
            ElementLabel::SubHeadline => "subheadline",
            ElementLabel::Column => "column",
        }
    }

    /// Plural heading used in report tables.
    pub fn table_name(self) -> &'static str {
        match self {
            ElementLabel::Image => "Images",
            ElementLabel::Headline => "Headlines",
            ElementLabel::SubHeadline => "Sub-headlines",
            ElementLabel::Column => "Columns",
        }
    }
}

impl fmt::Display for ElementLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ElementLabel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        ElementLabel::ALL
            .into_iter()
            .find(|l| l.as_str() == s)
            .ok_or_else(|| format!("unknown label `{s}`"))
    }
}

/// Statistics of one horizontal text-line band.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LineMetrics {
    pub band_top: usize,
    pub band_bottom: usize,
    pub line_height: usize,
    /// Densest row of the band (the headstroke of matra-bearing scripts).
    pub matra_row: usize,
    /// `matra_row - band_top`.
    pub matra_index: usize,
    pub matra_black: usize,
    /// Median black count over the band's rows.
    pub median_black: usize,
}

/// `true` where luminance is below `threshold`.
pub fn binarize_block(img: &GrayImage, threshold: u8) -> BinaryMap {
    img.map(|v| v < threshold)
}

pub fn row_profile(ink: &BinaryMap) -> Vec<usize> {
    (0..ink.height())
        .map(|y| ink.row(y).iter().filter(|&&b| b).count())
        .collect()
}

/// Text-line bands of the horizontal projection profile: maximal runs of
/// rows holding more than `alpha * width` black pixels, at least two rows
/// tall.
pub fn line_metrics(ink: &BinaryMap, alpha: f64) -> Vec<LineMetrics> {
    line_metrics_from_profile(&row_profile(ink), alpha * ink.width() as f64)
}

pub fn line_metrics_from_profile(profile: &[usize], floor: f64) -> Vec<LineMetrics> {
    let mut out = Vec::new();
    let mut y = 0;
    while y < profile.len() {
        if profile[y] as f64 <= floor {
            y += 1;
            continue;
        }
        let top = y;
        while y < profile.len() && profile[y] as f64 > floor {
            y += 1;
        }
        let bottom = y - 1;
        if bottom - top + 1 < 2 {
            continue;
        }
        let band = &profile[top..=bottom];
        // first maximum wins ties
        let (offset, &matra_black) = band
            .iter()
            .enumerate()
            .fold((0, &band[0]), |best, cur| if cur.1 > best.1 { cur } else { best });
        let mut sorted = band.to_vec();
        sorted.sort_unstable();
        out.push(LineMetrics {
            band_top: top,
            band_bottom: bottom,
            line_height: bottom - top + 1,
            matra_row: top + offset,
            matra_index: offset,
            matra_black,
            median_black: sorted[sorted.len() / 2],
        });
    }
    out
}

/// Most frequent value; ties go to the smaller value.
pub fn mode(values: impl IntoIterator<Item = usize>) -> Option<usize> {
    let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
    for v in values {
        *counts.entry(v).or_default() += 1;
    }
    // ascending keys: a larger value replaces the best only on a strictly
    // higher count
    counts
        .into_iter()
        .fold(None, |best: Option<(usize, usize)>, (v, c)| match best {
            Some((_, bc)) if bc >= c => best,
            _ => Some((v, c)),
        })
        .map(|(v, _)| v)
}

/// Modal line height over every line of every block.
pub fn dominant_line_height(blocks: &[Vec<LineMetrics>]) -> Result<usize> {
    mode(blocks.iter().flatten().map(|m| m.line_height)).ok_or(Error::NoTextLines)
}

/// The three image filters: size, edge density, and height/width aspect.
pub fn is_image_block(block: &Block, cfg: &DecompositionConfig, thresholds: &Resolved) -> bool {
    let (w, h) = (block.bbox.width() as f64, block.bbox.height() as f64);
    let big_enough = w > thresholds.img_min_w && h > thresholds.img_min_h;
    let density = block.edge_density();
    let textured = (cfg.img_density_min..=cfg.img_density_max).contains(&density);
    let aspect = h / w;
    let shaped = (cfg.img_aspect_min..=cfg.img_aspect_max).contains(&aspect);
    big_enough && textured && shaped
}

/// Labels a text block from its modal line height `h` and `d = h - dominant`:
/// headline when `d > gap1` and `h >= x3`, otherwise sub-headline when
/// `d > gap2` and `x1 < h < x2`, otherwise column.
pub fn label_text_block(metrics: &[LineMetrics], dominant: usize, thresholds: &Resolved) -> ElementLabel {
    let Some(h) = mode(metrics.iter().map(|m| m.line_height)) else {
        return ElementLabel::Column;
    };
    let h = h as f64;
    let d = h - dominant as f64;
    if d > thresholds.gap1 && h >= thresholds.x3 {
        ElementLabel::Headline
    } else if d > thresholds.gap2 && thresholds.x1 < h && h < thresholds.x2 {
        ElementLabel::SubHeadline
    } else {
        ElementLabel::Column
    }
}

/// One labeled page element.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Region {
    pub label: ElementLabel,
    pub bbox: BBox,
    /// Modal line height of a text region; `None` for images and for text
    /// blocks without a detectable line.
    pub line_height: Option<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PageLabels {
    pub regions: Vec<Region>,
    /// Body-text line height; `None` when no text line was found.
    pub dominant_line_height: Option<usize>,
    pub thresholds: Option<Resolved>,
}

/// Labels every block of a page.
///
/// Images are detected first (with `image_thresholds`, resolved from the
/// pre-classification line height estimate). The dominant line height is
/// then taken over the remaining blocks only, and each of them is labeled
/// as headline, sub-headline or column.
pub fn classify_page(
    blocks: &[(Block, GrayImage)],
    cfg: &DecompositionConfig,
    image_thresholds: &Resolved,
) -> Result<PageLabels> {
    let is_image: Vec<bool> = blocks
        .iter()
        .map(|(b, _)| is_image_block(b, cfg, image_thresholds))
        .collect();

    let metrics: Vec<Vec<LineMetrics>> = blocks
        .iter()
        .zip(&is_image)
        .map(|((_, crop), &img)| {
            if img {
                Vec::new()
            } else {
                line_metrics(&binarize_block(crop, cfg.binarize_threshold), cfg.line_band_alpha)
            }
        })
        .collect();

    let dominant = dominant_line_height(&metrics).ok();
    let thresholds = dominant.map(|d| cfg.resolve(d as f64)).transpose()?;

    let regions = blocks
        .iter()
        .zip(is_image.iter().zip(&metrics))
        .map(|((block, _), (&img, m))| {
            if img {
                return Region {
                    label: ElementLabel::Image,
                    bbox: block.bbox,
                    line_height: None,
                };
            }
            let label = match (dominant, &thresholds) {
                (Some(d), Some(t)) => label_text_block(m, d, t),
                _ => ElementLabel::Column,
            };
            Region {
                label,
                bbox: block.bbox,
                line_height: mode(m.iter().map(|l| l.line_height)),
            }
        })
        .collect();

    Ok(PageLabels {
        regions,
        dominant_line_height: dominant,
        thresholds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lines(heights: &[usize]) -> Vec<LineMetrics> {
        heights
            .iter()
            .map(|&h| LineMetrics {
                band_top: 0,
                band_bottom: h - 1,
                line_height: h,
                matra_row: 0,
                matra_index: 0,
                matra_black: 1,
                median_black: 1,
            })
            .collect()
    }

    fn defaults(l: f64) -> (DecompositionConfig, Resolved) {
        let cfg = DecompositionConfig::default();
        let r = cfg.resolve(l).unwrap();
        (cfg, r)
    }

    #[test]
    fn label_round_trip() {
        for l in ElementLabel::ALL {
            assert_eq!(l.as_str().parse::<ElementLabel>().unwrap(), l);
            let json = serde_json::to_string(&l).unwrap();
            assert_eq!(json, format!("\"{}\"", l.as_str()));
        }
    }

    #[test]
    fn binarize_boundary() {
        let img = GrayImage::from_vec(4, 1, vec![0, 127, 128, 255]).unwrap();
        assert_eq!(binarize_block(&img, 128).data(), &[true, true, false, false]);
        assert_eq!(binarize_block(&GrayImage::new(3, 3, 255), 128).count_true(), 0);
        assert_eq!(binarize_block(&GrayImage::new(3, 3, 0), 128).count_true(), 9);
    }

    #[test]
    fn line_metrics_solid_band() {
        assert!(line_metrics(&BinaryMap::new(20, 30, false), 0.1).is_empty());
        let ink = BinaryMap::from_fn(20, 30, |_, y| (4..=9).contains(&y));
        let m = line_metrics(&ink, 0.1);
        assert_eq!(m.len(), 1);
        let m = m[0];
        assert_eq!((m.band_top, m.band_bottom, m.line_height), (4, 9, 6));
        assert_eq!((m.matra_row, m.matra_index, m.matra_black), (4, 0, 20));
    }

    #[test]
    fn line_metrics_finds_headstroke() {
        // bar on row 5, sparse strokes on rows 6..=14
        let ink = BinaryMap::from_fn(40, 20, |x, y| y == 5 || ((6..=14).contains(&y) && x % 7 == 0));
        let m = line_metrics(&ink, 0.05);
        assert_eq!(m.len(), 1);
        assert_eq!((m[0].band_top, m[0].band_bottom), (5, 14));
        assert_eq!((m[0].matra_row, m[0].matra_index, m[0].matra_black), (5, 0, 40));
        assert_eq!(m[0].median_black, 6);
    }

    #[test]
    fn single_row_bands_are_dropped() {
        let ink = BinaryMap::from_fn(10, 10, |_, y| y == 3 || y == 6 || y == 7);
        let m = line_metrics(&ink, 0.1);
        assert_eq!(m.len(), 1);
        assert_eq!(m[0].band_top, 6);
    }

    #[test]
    fn dominant_height_cases() {
        assert_eq!(dominant_line_height(&[lines(&[20, 20, 20, 41, 20])]).unwrap(), 20);
        assert_eq!(dominant_line_height(&[lines(&[20])]).unwrap(), 20);
        assert_eq!(dominant_line_height(&[lines(&[40, 20]), lines(&[40, 20])]).unwrap(), 20);
        assert!(matches!(dominant_line_height(&[vec![]]), Err(Error::NoTextLines)));
    }

    #[test]
    fn text_label_rules() {
        let (_, t) = defaults(20.0);
        assert_eq!(label_text_block(&lines(&[20]), 20, &t), ElementLabel::Column);
        assert_eq!(label_text_block(&lines(&[44]), 20, &t), ElementLabel::Headline);
        assert_eq!(label_text_block(&lines(&[30]), 20, &t), ElementLabel::SubHeadline);
        // tall enough for x3 but at exactly x3 the headline rule holds
        assert_eq!(label_text_block(&lines(&[40]), 20, &t), ElementLabel::Headline);
        // d = 5 < gap2
        assert_eq!(label_text_block(&lines(&[25]), 20, &t), ElementLabel::Column);
        assert_eq!(label_text_block(&[], 20, &t), ElementLabel::Column);
    }

    fn block(w: usize, h: usize, density: f64) -> Block {
        let bbox = BBox::new(0, 0, w - 1, h - 1);
        Block {
            bbox,
            black_pixel_count: bbox.area(),
            edge_pixel_count: (density * bbox.area() as f64).round() as usize,
        }
    }

    #[test]
    fn image_filters() {
        let cfg = DecompositionConfig {
            img_min_w: crate::config::Length::Px(50.0),
            img_min_h: crate::config::Length::Px(50.0),
            ..DecompositionConfig::default()
        };
        let t = cfg.resolve(20.0).unwrap();
        assert!(!is_image_block(&block(10, 10, 0.08), &cfg, &t));
        assert!(is_image_block(&block(200, 150, 0.08), &cfg, &t));
        // density outside the band
        assert!(!is_image_block(&block(200, 150, 0.01), &cfg, &t));
        assert!(!is_image_block(&block(200, 150, 0.5), &cfg, &t));
        // a single text line
        assert!(!is_image_block(&block(400, 20, 0.08), &cfg, &t));
        // too elongated
        assert!(!is_image_block(&block(60, 400, 0.08), &cfg, &t));
    }

    #[test]
    fn mode_ties_prefer_smaller() {
        assert_eq!(mode([3, 1, 3, 1]), Some(1));
        assert_eq!(mode([5]), Some(5));
        assert_eq!(mode(std::iter::empty()), None);
    }
}
