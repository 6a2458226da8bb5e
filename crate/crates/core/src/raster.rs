//! Raster containers and the geometric transforms shared by every stage.
//!
//! Coordinates: x grows right, y grows down, origin at the top-left pixel.
//! Images are row-major; `GrayImage` stores luminance (0 = black, 255 =
//! white) and `BinaryMap` stores `true` for ink/edge pixels.

use std::fs;
use std::io::Cursor;
use std::path::Path;

use image::{DynamicImage, ImageFormat, ImageReader};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A row-major single-channel raster.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Raster<T> {
    width: usize,
    height: usize,
    data: Vec<T>,
}

/// 8-bit luminance raster.
pub type GrayImage = Raster<u8>;

/// Boolean raster; `true` is black (ink, edge, smeared element).
pub type BinaryMap = Raster<bool>;

impl<T> std::fmt::Debug for Raster<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Raster({}x{})", self.width, self.height)
    }
}

impl<T: Copy> Raster<T> {
    pub fn new(width: usize, height: usize, fill: T) -> Self {
        Self {
            width,
            height,
            data: vec![fill; width * height],
        }
    }

    /// Wraps row-major data; returns `None` when the length does not match.
    pub fn from_vec(width: usize, height: usize, data: Vec<T>) -> Option<Self> {
        (data.len() == width * height).then_some(Self {
            width,
            height,
            data,
        })
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self {
            width,
            height,
            data,
        }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn data(&self) -> &[T] {
        &self.data
    }

    #[inline]
    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> T {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: T) {
        self.data[y * self.width + x] = value;
    }

    #[inline]
    pub fn row(&self, y: usize) -> &[T] {
        &self.data[y * self.width..(y + 1) * self.width]
    }

    /// Box covering the whole raster.
    pub fn full_box(&self) -> BBox {
        BBox::new(0, 0, self.width - 1, self.height - 1)
    }

    pub fn map<U: Copy>(&self, f: impl Fn(T) -> U) -> Raster<U> {
        Raster {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.height, self.width, |x, y| self.get(y, x))
    }

    /// Rotates by `turns` quarter-turns counter-clockwise (as displayed).
    /// Lossless; odd turns swap the dimensions.
    pub fn rotate_quarter(&self, turns: u8) -> Self {
        let (w, h) = (self.width, self.height);
        match turns % 4 {
            0 => self.clone(),
            // out(X, Y) = in(w-1-Y, X)
            1 => Self::from_fn(h, w, |x, y| self.get(w - 1 - y, x)),
            2 => Self::from_fn(w, h, |x, y| self.get(w - 1 - x, h - 1 - y)),
            // out(X, Y) = in(Y, h-1-X)
            _ => Self::from_fn(h, w, |x, y| self.get(y, h - 1 - x)),
        }
    }

    /// Copies the pixels inside `bbox` (inclusive corners).
    pub fn crop(&self, bbox: BBox) -> Result<Self> {
        bbox.check_within(self.width, self.height)?;
        let w = bbox.width();
        let mut data = Vec::with_capacity(w * bbox.height());
        for y in bbox.y0..=bbox.y1 {
            let start = y * self.width + bbox.x0;
            data.extend_from_slice(&self.data[start..start + w]);
        }
        Ok(Self {
            width: w,
            height: bbox.height(),
            data,
        })
    }
}

impl BinaryMap {
    pub fn count_true(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }

    /// Number of `true` pixels inside `bbox`; the box must be valid.
    pub fn count_in(&self, bbox: BBox) -> usize {
        (bbox.y0..=bbox.y1)
            .map(|y| self.row(y)[bbox.x0..=bbox.x1].iter().filter(|&&b| b).count())
            .sum()
    }

    /// Renders as a gray image: ink black, background white.
    pub fn to_gray(&self) -> GrayImage {
        self.map(|b| if b { 0 } else { 255 })
    }
}

/// Axis-aligned box with inclusive corners. Serialized as `[x0, y0, x1, y1]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(from = "[usize; 4]", into = "[usize; 4]")]
pub struct BBox {
    pub x0: usize,
    pub y0: usize,
    pub x1: usize,
    pub y1: usize,
}

impl From<[usize; 4]> for BBox {
    fn from([x0, y0, x1, y1]: [usize; 4]) -> Self {
        Self { x0, y0, x1, y1 }
    }
}

impl From<BBox> for [usize; 4] {
    fn from(b: BBox) -> Self {
        [b.x0, b.y0, b.x1, b.y1]
    }
}

impl BBox {
    pub const fn new(x0: usize, y0: usize, x1: usize, y1: usize) -> Self {
        Self { x0, y0, x1, y1 }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.x1 + 1 - self.x0
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.y1 + 1 - self.y0
    }

    #[inline]
    pub fn area(&self) -> usize {
        self.width() * self.height()
    }

    pub fn contains(&self, x: usize, y: usize) -> bool {
        (self.x0..=self.x1).contains(&x) && (self.y0..=self.y1).contains(&y)
    }

    pub fn contains_box(&self, other: &BBox) -> bool {
        self.x0 <= other.x0 && self.y0 <= other.y0 && other.x1 <= self.x1 && other.y1 <= self.y1
    }

    pub fn intersects(&self, other: &BBox) -> bool {
        self.x0 <= other.x1 && other.x0 <= self.x1 && self.y0 <= other.y1 && other.y0 <= self.y1
    }

    pub fn intersection(&self, other: &BBox) -> Option<BBox> {
        self.intersects(other).then(|| {
            BBox::new(
                self.x0.max(other.x0),
                self.y0.max(other.y0),
                self.x1.min(other.x1),
                self.y1.min(other.y1),
            )
        })
    }

    pub fn union(&self, other: &BBox) -> BBox {
        BBox::new(
            self.x0.min(other.x0),
            self.y0.min(other.y0),
            self.x1.max(other.x1),
            self.y1.max(other.y1),
        )
    }

    /// Intersection over union of the two pixel sets.
    pub fn iou(&self, other: &BBox) -> f64 {
        let inter = self.intersection(other).map_or(0, |b| b.area());
        let union = self.area() + other.area() - inter;
        inter as f64 / union as f64
    }

    pub fn check_within(&self, width: usize, height: usize) -> Result<()> {
        if self.x0 <= self.x1 && self.y0 <= self.y1 && self.x1 < width && self.y1 < height {
            Ok(())
        } else {
            Err(Error::BoxOutOfBounds {
                x0: self.x0,
                y0: self.y0,
                x1: self.x1,
                y1: self.y1,
                width,
                height,
            })
        }
    }
}

/// ITU-R BT.601 luma, rounded to the nearest level.
#[inline]
pub fn luminance(r: u8, g: u8, b: u8) -> u8 {
    (0.299 * r as f64 + 0.587 * g as f64 + 0.114 * b as f64)
        .round()
        .clamp(0.0, 255.0) as u8
}

/// Loads a PNG or binary PGM (P5) page as luminance. Color is reduced with
/// [`luminance`]; alpha is dropped.
pub fn load_page(path: impl AsRef<Path>) -> Result<GrayImage> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    decode_page(&bytes).map_err(|e| match e {
        DecodeFailure::Unsupported => Error::UnsupportedFormat {
            path: path.to_path_buf(),
        },
        DecodeFailure::Empty(width, height) => Error::EmptyImage {
            path: path.to_path_buf(),
            width,
            height,
        },
        DecodeFailure::Codec(message) => Error::Decode {
            path: path.to_path_buf(),
            message,
        },
    })
}

enum DecodeFailure {
    Unsupported,
    Empty(u32, u32),
    Codec(String),
}

fn decode_page(bytes: &[u8]) -> Result<GrayImage, DecodeFailure> {
    let format = if bytes.starts_with(b"\x89PNG\r\n\x1a\n") {
        ImageFormat::Png
    } else if bytes.starts_with(b"P5") {
        ImageFormat::Pnm
    } else {
        return Err(DecodeFailure::Unsupported);
    };
    let img = ImageReader::with_format(Cursor::new(bytes), format)
        .decode()
        .map_err(|e| DecodeFailure::Codec(e.to_string()))?;
    let (w, h) = (img.width(), img.height());
    if w == 0 || h == 0 {
        return Err(DecodeFailure::Empty(w, h));
    }
    let (w, h) = (w as usize, h as usize);
    let data = match img {
        DynamicImage::ImageLuma8(buf) => buf.into_raw(),
        DynamicImage::ImageLumaA8(buf) => buf.pixels().map(|p| p.0[0]).collect(),
        other => other
            .to_rgb8()
            .pixels()
            .map(|p| luminance(p.0[0], p.0[1], p.0[2]))
            .collect(),
    };
    Ok(GrayImage::from_vec(w, h, data).expect("decoder returned w*h pixels"))
}

/// Writes `img` as PNG, or as binary PGM when the extension is `.pgm`.
pub fn save_image(img: &GrayImage, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let is_pgm = path
        .extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("pgm"));
    let bytes = if is_pgm {
        encode_pgm(img)
    } else {
        encode_png(img).map_err(|message| Error::Encode {
            path: path.to_path_buf(),
            message,
        })?
    };
    fs::write(path, bytes).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn encode_pgm(img: &GrayImage) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", img.width(), img.height()).into_bytes();
    out.extend_from_slice(img.data());
    out
}

pub fn encode_png(img: &GrayImage) -> Result<Vec<u8>, String> {
    let buf = image::GrayImage::from_raw(img.width() as u32, img.height() as u32, img.data().to_vec())
        .expect("raster length matches dimensions");
    let mut out = Cursor::new(Vec::new());
    buf.write_to(&mut out, ImageFormat::Png)
        .map_err(|e| e.to_string())?;
    Ok(out.into_inner())
}

/// Rotates counter-clockwise by `degrees` about the image center.
///
/// The canvas grows to hold the whole rotated source. Each output pixel is
/// inverse-mapped into the source and sampled bilinearly; samples that fall
/// outside the source take `fill`. A zero angle returns an exact copy.
pub fn rotate_by_angle(img: &GrayImage, degrees: f64, fill: u8) -> GrayImage {
    if degrees == 0.0 {
        return img.clone();
    }
    let (sin, cos) = degrees.to_radians().sin_cos();
    let (w, h) = (img.width() as f64, img.height() as f64);
    let out_w = expanded_extent(w * cos.abs() + h * sin.abs());
    let out_h = expanded_extent(w * sin.abs() + h * cos.abs());

    let (cx, cy) = ((w - 1.0) / 2.0, (h - 1.0) / 2.0);
    let (ocx, ocy) = ((out_w as f64 - 1.0) / 2.0, (out_h as f64 - 1.0) / 2.0);
    let fillf = fill as f64;

    GrayImage::from_fn(out_w, out_h, |ox, oy| {
        let dx = ox as f64 - ocx;
        let dy = oy as f64 - ocy;
        let sx = dx * cos - dy * sin + cx;
        let sy = dx * sin + dy * cos + cy;
        sample_bilinear(img, sx, sy, fillf)
    })
}

fn expanded_extent(v: f64) -> usize {
    ((v - 1e-6).ceil() as usize).max(1)
}

fn sample_bilinear(img: &GrayImage, x: f64, y: f64, fill: f64) -> u8 {
    let (w, h) = (img.width() as isize, img.height() as isize);
    if x <= -1.0 || y <= -1.0 || x >= w as f64 || y >= h as f64 {
        return fill as u8;
    }
    let x0 = x.floor() as isize;
    let y0 = y.floor() as isize;
    let fx = x - x0 as f64;
    let fy = y - y0 as f64;
    let at = |xx: isize, yy: isize| -> f64 {
        if xx < 0 || yy < 0 || xx >= w || yy >= h {
            fill
        } else {
            img.get(xx as usize, yy as usize) as f64
        }
    };
    let top = at(x0, y0) * (1.0 - fx) + at(x0 + 1, y0) * fx;
    let bottom = at(x0, y0 + 1) * (1.0 - fx) + at(x0 + 1, y0 + 1) * fx;
    (top * (1.0 - fy) + bottom * fy).round().clamp(0.0, 255.0) as u8
}
