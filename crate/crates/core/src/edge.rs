//! Canny edge detection: Gaussian smoothing, Sobel gradients, non-maximum
//! suppression over four quantized directions, and hysteresis.

use std::collections::VecDeque;
use std::f32::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::{BinaryMap, GrayImage};

/// Canny thresholds on the 0..=255 magnitude scale.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CannyParams {
    pub low: f32,
    pub high: f32,
    pub sigma: f32,
    /// Half-width of the blur kernel.
    pub radius: usize,
}

impl Default for CannyParams {
    fn default() -> Self {
        Self {
            low: 50.0,
            high: 150.0,
            sigma: 1.4,
            radius: blur_radius_for(1.4),
        }
    }
}

/// Default kernel half-width for a given sigma (3 for sigma 1.4).
pub fn blur_radius_for(sigma: f32) -> usize {
    ((2.0 * sigma).ceil() as usize).max(1)
}

/// Normalized 1-D Gaussian of length `2 * radius + 1`.
pub fn gaussian_kernel(sigma: f32, radius: usize) -> Vec<f32> {
    let r = radius as isize;
    let denom = 2.0 * sigma * sigma;
    let raw: Vec<f32> = (-r..=r).map(|i| (-((i * i) as f32) / denom).exp()).collect();
    let sum: f32 = raw.iter().sum();
    raw.into_iter().map(|v| v / sum).collect()
}

/// Separable Gaussian blur, horizontal pass then vertical, with clamped
/// borders. The intermediate stays in floating point; the result is rounded
/// once.
pub fn gaussian_blur(img: &GrayImage, sigma: f32, radius: usize) -> GrayImage {
    assert!(sigma > 0.0 && radius >= 1, "blur needs sigma > 0 and radius >= 1");
    let kernel = gaussian_kernel(sigma, radius);
    let (w, h) = (img.width(), img.height());
    let r = radius as isize;
    let clamp = |v: isize, n: usize| v.clamp(0, n as isize - 1) as usize;

    let mut tmp = vec![0f32; w * h];
    for y in 0..h {
        let row = img.row(y);
        for x in 0..w {
            tmp[y * w + x] = kernel
                .iter()
                .enumerate()
                .map(|(k, &kv)| kv * row[clamp(x as isize + k as isize - r, w)] as f32)
                .sum();
        }
    }

    GrayImage::from_fn(w, h, |x, y| {
        let v: f32 = kernel
            .iter()
            .enumerate()
            .map(|(k, &kv)| kv * tmp[clamp(y as isize + k as isize - r, h) * w + x])
            .sum();
        v.round().clamp(0.0, 255.0) as u8
    })
}

/// Sobel responses for every pixel. Border pixels carry zeros.
#[derive(Clone, Debug)]
pub struct GradientField {
    pub width: usize,
    pub height: usize,
    pub gx: Vec<f32>,
    pub gy: Vec<f32>,
    pub magnitude: Vec<f32>,
    /// `atan2(gy, gx)` in radians.
    pub direction: Vec<f32>,
}

impl GradientField {
    #[inline]
    pub fn index(&self, x: usize, y: usize) -> usize {
        y * self.width + x
    }
}

pub fn sobel(img: &GrayImage) -> Result<GradientField> {
    let (w, h) = (img.width(), img.height());
    if w < 3 || h < 3 {
        return Err(Error::TooSmall {
            width: w,
            height: h,
        });
    }
    let n = w * h;
    let mut gx = vec![0f32; n];
    let mut gy = vec![0f32; n];
    let mut magnitude = vec![0f32; n];
    let mut direction = vec![0f32; n];
    let p = |x: usize, y: usize| img.get(x, y) as f32;
    for y in 1..h - 1 {
        for x in 1..w - 1 {
            let sx = (p(x + 1, y - 1) + 2.0 * p(x + 1, y) + p(x + 1, y + 1))
                - (p(x - 1, y - 1) + 2.0 * p(x - 1, y) + p(x - 1, y + 1));
            let sy = (p(x - 1, y + 1) + 2.0 * p(x, y + 1) + p(x + 1, y + 1))
                - (p(x - 1, y - 1) + 2.0 * p(x, y - 1) + p(x + 1, y - 1));
            let i = y * w + x;
            gx[i] = sx;
            gy[i] = sy;
            magnitude[i] = sx.hypot(sy);
            direction[i] = sy.atan2(sx);
        }
    }
    Ok(GradientField {
        width: w,
        height: h,
        gx,
        gy,
        magnitude,
        direction,
    })
}

/// Gradient direction folded into one of four bins: 0°, 45°, 90°, 135°.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DirectionBin {
    Deg0,
    Deg45,
    Deg90,
    Deg135,
}

impl DirectionBin {
    pub fn from_radians(theta: f32) -> Self {
        let mut deg = theta * 180.0 / PI;
        if deg < 0.0 {
            deg += 180.0;
        }
        if !(22.5..157.5).contains(&deg) {
            Self::Deg0
        } else if deg < 67.5 {
            Self::Deg45
        } else if deg < 112.5 {
            Self::Deg90
        } else {
            Self::Deg135
        }
    }

    /// Pixel offset of the neighbor along the gradient; the opposite neighbor
    /// is the negation. With y pointing down, 45° points to (+1, +1).
    pub fn offset(self) -> (isize, isize) {
        match self {
            Self::Deg0 => (1, 0),
            Self::Deg45 => (1, 1),
            Self::Deg90 => (0, 1),
            Self::Deg135 => (-1, 1),
        }
    }
}

/// Keeps magnitudes that are local maxima along the quantized gradient.
/// Ties are broken toward the pixel with the smaller offset so a plateau
/// keeps exactly one pixel across the gradient.
///
/// Neighbors with a different direction bin can survive on both sides of
/// a maximum. A second raster pass drops the weaker of the two (the
/// forward one on a tie), so no survivor keeps survivors on both sides
/// along its own gradient.
pub fn non_maximum_suppression(field: &GradientField) -> Vec<f32> {
    let (w, h) = (field.width, field.height);
    let mut out = vec![0f32; w * h];
    let neighbors = |x: usize, y: usize| {
        let (dx, dy) = DirectionBin::from_radians(field.direction[field.index(x, y)]).offset();
        let fwd = field.index((x as isize + dx) as usize, (y as isize + dy) as usize);
        let back = field.index((x as isize - dx) as usize, (y as isize - dy) as usize);
        (fwd, back)
    };
    for y in 1..h - 1 {
        for x in 1..w - 1 {
            let i = field.index(x, y);
            let m = field.magnitude[i];
            if m == 0.0 {
                continue;
            }
            let (fwd, back) = neighbors(x, y);
            if m > field.magnitude[back] && m >= field.magnitude[fwd] {
                out[i] = m;
            }
        }
    }
    for y in 1..h - 1 {
        for x in 1..w - 1 {
            if out[field.index(x, y)] == 0.0 {
                continue;
            }
            let (fwd, back) = neighbors(x, y);
            if out[fwd] > 0.0 && out[back] > 0.0 {
                let weaker = if out[back] < out[fwd] { back } else { fwd };
                out[weaker] = 0.0;
            }
        }
    }
    out
}

/// Double threshold plus breadth-first hysteresis over 8-neighbors.
/// Magnitudes are clamped to 255 before comparison.
pub fn hysteresis(thinned: &[f32], width: usize, height: usize, low: f32, high: f32) -> BinaryMap {
    let mut out = BinaryMap::new(width, height, false);
    let level = |i: usize| thinned[i].min(255.0);
    let mut queue = VecDeque::new();
    for i in 0..width * height {
        if level(i) >= high && !out.data()[i] {
            out.data_mut()[i] = true;
            queue.push_back(i);
            while let Some(j) = queue.pop_front() {
                let (x, y) = ((j % width) as isize, (j / width) as isize);
                for dy in -1..=1 {
                    for dx in -1..=1 {
                        let (nx, ny) = (x + dx, y + dy);
                        if nx < 0 || ny < 0 || nx >= width as isize || ny >= height as isize {
                            continue;
                        }
                        let k = ny as usize * width + nx as usize;
                        if !out.data()[k] && thinned[k] > 0.0 && level(k) >= low {
                            out.data_mut()[k] = true;
                            queue.push_back(k);
                        }
                    }
                }
            }
        }
    }
    out
}

/// Full Canny pipeline; `true` marks an edge pixel.
pub fn canny(img: &GrayImage, params: &CannyParams) -> Result<BinaryMap> {
    assert!(
        0.0 < params.low && params.low < params.high,
        "canny needs 0 < low < high"
    );
    let blurred = gaussian_blur(img, params.sigma, params.radius);
    let field = sobel(&blurred)?;
    let thinned = non_maximum_suppression(&field);
    Ok(hysteresis(
        &thinned,
        img.width(),
        img.height(),
        params.low,
        params.high,
    ))
}
