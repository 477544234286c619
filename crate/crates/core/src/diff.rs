//! Grayscale pixel-difference verification and screen identity hashing.

use std::collections::HashSet;
use std::fmt;

use image::RgbImage;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::BBox;

/// Luma weights (BT.601).
pub const LUMA_R: f64 = 0.299;
pub const LUMA_G: f64 = 0.587;
pub const LUMA_B: f64 = 0.114;

/// Per-pixel intensity change that counts as "changed".
pub const DEFAULT_DELTA: f64 = 0.02;
/// Changed-pixel ratio at which a swipe counts as effective.
pub const DEFAULT_TAU: f64 = 0.005;
/// Full-screen changed ratio at which a click counts as a navigation.
pub const DEFAULT_TAU_SCREEN: f64 = 0.01;
/// Default Hamming radius for "already visited" screens.
pub const DEFAULT_HAMMING_MAX: u32 = 4;

const HASH_TIE_EPS: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DiffError {
    #[error("invalid image: {0}")]
    InvalidImage(String),
    #[error("shape mismatch: {0}x{1} vs {2}x{3}")]
    Shape(u32, u32, u32, u32),
    #[error("empty region of interest {0:?}")]
    EmptyRoi(BBox),
    #[error("region of interest {roi:?} exceeds {width}x{height} image")]
    RoiOutOfBounds { roi: BBox, width: u32, height: u32 },
    #[error("invalid diff config: {0}")]
    InvalidConfig(String),
}

/// Row-major intensities in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    width: u32,
    height: u32,
    data: Vec<f32>,
}

impl GrayImage {
    pub fn new(width: u32, height: u32, data: Vec<f32>) -> Result<Self, DiffError> {
        if width == 0 || height == 0 {
            return Err(DiffError::InvalidImage("zero dimension".into()));
        }
        if data.len() != width as usize * height as usize {
            return Err(DiffError::InvalidImage(format!(
                "{} values for {width}x{height}",
                data.len()
            )));
        }
        if data.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(DiffError::InvalidImage("intensity outside [0,1]".into()));
        }
        Ok(Self { width, height, data })
    }

    pub fn filled(width: u32, height: u32, value: f32) -> Result<Self, DiffError> {
        Self::new(width, height, vec![value; width as usize * height as usize])
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn get(&self, x: u32, y: u32) -> f32 {
        self.data[y as usize * self.width as usize + x as usize]
    }

    /// The whole image as a half-open pixel box.
    pub fn full_roi(&self) -> BBox {
        BBox::new(0, 0, self.width as i32, self.height as i32)
    }
}

pub fn to_gray(img: &RgbImage) -> Result<GrayImage, DiffError> {
    if img.width() == 0 || img.height() == 0 {
        return Err(DiffError::InvalidImage("empty image".into()));
    }
    let data = img
        .pixels()
        .map(|p| {
            let [r, g, b] = p.0;
            ((LUMA_R * r as f64 + LUMA_G * g as f64 + LUMA_B * b as f64) / 255.0).clamp(0.0, 1.0) as f32
        })
        .collect();
    GrayImage::new(img.width(), img.height(), data)
}

/// Thresholds for verification.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiffConfig {
    pub delta: f64,
    pub tau: f64,
    pub tau_screen: f64,
}

impl Default for DiffConfig {
    fn default() -> Self {
        Self { delta: DEFAULT_DELTA, tau: DEFAULT_TAU, tau_screen: DEFAULT_TAU_SCREEN }
    }
}

impl DiffConfig {
    pub fn validate(&self) -> Result<(), DiffError> {
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(DiffError::InvalidConfig(format!("delta {} not in (0,1)", self.delta)));
        }
        if !(self.tau > 0.0 && self.tau <= 1.0) {
            return Err(DiffError::InvalidConfig(format!("tau {} not in (0,1]", self.tau)));
        }
        if !(self.tau_screen > 0.0 && self.tau_screen <= 1.0) {
            return Err(DiffError::InvalidConfig(format!("tau_screen {} not in (0,1]", self.tau_screen)));
        }
        Ok(())
    }
}

/// Fraction of pixels inside `roi` (half-open: `x1 <= x < x2`) whose absolute
/// intensity difference exceeds `delta`.
pub fn changed_ratio(a: &GrayImage, b: &GrayImage, roi: &BBox, delta: f64) -> Result<f64, DiffError> {
    if a.width != b.width || a.height != b.height {
        return Err(DiffError::Shape(a.width, a.height, b.width, b.height));
    }
    if roi.x1 < 0 || roi.y1 < 0 || roi.x2 > a.width as i32 || roi.y2 > a.height as i32 {
        return Err(DiffError::RoiOutOfBounds { roi: *roi, width: a.width, height: a.height });
    }
    if roi.x2 <= roi.x1 || roi.y2 <= roi.y1 {
        return Err(DiffError::EmptyRoi(*roi));
    }
    let stride = a.width as usize;
    let (x1, x2) = (roi.x1 as usize, roi.x2 as usize);
    let mut changed = 0u64;
    for y in roi.y1 as usize..roi.y2 as usize {
        let row = y * stride;
        changed += a.data[row + x1..row + x2]
            .iter()
            .zip(&b.data[row + x1..row + x2])
            .filter(|(p, q)| (**p as f64 - **q as f64).abs() > delta)
            .count() as u64;
    }
    let total = roi.area() as f64;
    Ok(changed as f64 / total)
}

pub fn is_effective(a: &GrayImage, b: &GrayImage, roi: &BBox, cfg: &DiffConfig) -> Result<bool, DiffError> {
    Ok(changed_ratio(a, b, roi, cfg.delta)? >= cfg.tau)
}

/// Average hash of an 8x8 block-mean downscale.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ScreenHash(pub u64);

impl ScreenHash {
    pub fn hamming(self, other: ScreenHash) -> u32 {
        (self.0 ^ other.0).count_ones()
    }
}

impl fmt::Display for ScreenHash {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:016x}", self.0)
    }
}

fn cell_range(i: u32, size: u32) -> (u32, u32) {
    let start = (i as u64 * size as u64 / 8) as u32;
    let end = (((i + 1) as u64 * size as u64) / 8) as u32;
    let start = start.min(size - 1);
    (start, end.max(start + 1).min(size))
}

/// Cells above the mean set their bit; a cell equal to the mean clears it.
/// Bits are packed row-major, most significant first.
pub fn screen_hash(img: &GrayImage) -> ScreenHash {
    let mut cells = [0f64; 64];
    for r in 0..8u32 {
        let (y0, y1) = cell_range(r, img.height);
        for c in 0..8u32 {
            let (x0, x1) = cell_range(c, img.width);
            let mut sum = 0f64;
            for y in y0..y1 {
                for x in x0..x1 {
                    sum += img.get(x, y) as f64;
                }
            }
            cells[(r * 8 + c) as usize] = sum / ((y1 - y0) as f64 * (x1 - x0) as f64);
        }
    }
    let mean = cells.iter().sum::<f64>() / 64.0;
    let bits = cells
        .iter()
        .fold(0u64, |acc, &v| (acc << 1) | u64::from(v > mean + HASH_TIE_EPS));
    ScreenHash(bits)
}

pub fn is_new_screen_hash(hash: ScreenHash, visited: &HashSet<ScreenHash>, hamming_max: u32) -> bool {
    !visited.iter().any(|v| v.hamming(hash) <= hamming_max)
}

pub fn is_new_screen(img: &GrayImage, visited: &HashSet<ScreenHash>, hamming_max: u32) -> bool {
    is_new_screen_hash(screen_hash(img), visited, hamming_max)
}

/// Nearest visited hash within `hamming_max`, if any.
pub fn match_visited(hash: ScreenHash, visited: &HashSet<ScreenHash>, hamming_max: u32) -> Option<ScreenHash> {
    visited
        .iter()
        .map(|v| (v.hamming(hash), *v))
        .filter(|(d, _)| *d <= hamming_max)
        .min()
        .map(|(_, v)| v)
}
