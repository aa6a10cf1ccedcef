//! Detection of the red calibration grid and estimation of its pitch.
//!
//! The grid is found through a normalized red-dominance index, rectified and
//! thresholded at a configurable fraction of an Otsu level. Pitch (pixels per
//! millimeter) comes from the spacing of projection peaks of the mask.

use crate::error::{Error, Result};
use crate::raster::{BinaryImage, IndexImage, RgbImage};
use crate::stats::median;

/// Histogram resolution for thresholding real-valued index images.
pub const DEFAULT_OTSU_BINS: usize = 256;

/// Fraction of the Otsu level used by [`grid_mask`].
pub const DEFAULT_MASK_SCALE: f64 = 0.5;

/// Minimum detectable grid lines per axis for a pitch estimate.
pub const MIN_GRID_LINES: usize = 10;

/// Maximum relative difference between horizontal and vertical pitch.
pub const SQUARE_GRID_TOLERANCE: f64 = 0.15;

/// Red-dominance index per pixel: (R - G/2 - B/2) / (R + G/2 + B/2).
///
/// The ratio is scale-free, near 1 for pure red, 0 for any gray, and negative
/// where green/blue dominate. The all-black pixel is defined as 0: black is
/// trace ink, not grid, and must never enter the grid mask.
pub fn color_index(img: &RgbImage) -> IndexImage {
    let mut data = Vec::with_capacity(img.width * img.height);
    for px in img.data.chunks_exact(3) {
        let r = px[0] as f64;
        let gb = (px[1] as f64 + px[2] as f64) / 2.0;
        let den = r + gb;
        data.push(if den == 0.0 { 0.0 } else { (r - gb) / den });
    }
    IndexImage::new(img.width, img.height, data)
}

/// Per-pixel max(x, 0).
pub fn relu_rectify(img: &IndexImage) -> IndexImage {
    IndexImage::new(
        img.width,
        img.height,
        img.data.iter().map(|&v| v.max(0.0)).collect(),
    )
}

/// Between-class-variance threshold over a quantization of [0, 1].
///
/// Values are binned into `bins` equal-width bins (clamped at the ends), the
/// cut maximizing between-class variance is found, and the returned level is
/// the center of the first above-cut bin. Cuts that tie exactly are averaged,
/// which keeps the level centered between well-separated clusters instead of
/// hugging the lower one.
pub fn otsu_threshold_real(img: &IndexImage, bins: usize) -> Result<f64> {
    assert!(bins >= 2, "need at least two bins");
    let mut hist = vec![0u64; bins];
    for &v in &img.data {
        let b = ((v * bins as f64).floor() as i64).clamp(0, bins as i64 - 1);
        hist[b as usize] += 1;
    }
    let cut = otsu_mean_cut(&hist)?;
    Ok((cut + 0.5) / bins as f64)
}

/// Mean of the exactly tied between-class-variance argmax cuts.
///
/// Cut `t` puts bins `0..t` in the low class and `t..` in the high class.
/// Class weights and sums are accumulated in integer arithmetic, so the
/// per-cut score is a deterministic function of the histogram alone and an
/// exhaustive re-computation produces bit-identical values.
pub(crate) fn otsu_mean_cut(hist: &[u64]) -> Result<f64> {
    if hist.iter().filter(|&&c| c > 0).count() < 2 {
        return Err(Error::DegenerateHistogram);
    }
    let total_n: u64 = hist.iter().sum();
    let total_s: u64 = hist.iter().enumerate().map(|(b, &c)| b as u64 * c).sum();
    let mut w0 = 0u64;
    let mut s0 = 0u64;
    let mut best = f64::NEG_INFINITY;
    let mut tied_sum = 0usize;
    let mut tied_n = 0usize;
    for t in 1..hist.len() {
        w0 += hist[t - 1];
        s0 += (t as u64 - 1) * hist[t - 1];
        let w1 = total_n - w0;
        if w0 == 0 || w1 == 0 {
            continue;
        }
        let s1 = total_s - s0;
        // sigma_B is proportional to (s0*w1 - s1*w0)^2 / (w0*w1).
        let a = s0 as f64 * w1 as f64 - s1 as f64 * w0 as f64;
        let score = a * a / (w0 as f64 * w1 as f64);
        if score > best {
            best = score;
            tied_sum = t;
            tied_n = 1;
        } else if score == best {
            tied_sum += t;
            tied_n += 1;
        }
    }
    Ok(tied_sum as f64 / tied_n as f64)
}

/// Grid mask at the default scale: pixel true iff its rectified index is at
/// least [`DEFAULT_MASK_SCALE`] times the Otsu level of the whole image.
pub fn grid_mask(idx_rectified: &IndexImage) -> Result<BinaryImage> {
    grid_mask_with_scale(idx_rectified, DEFAULT_MASK_SCALE)
}

/// Grid mask with an explicit scale factor on the Otsu level.
pub fn grid_mask_with_scale(idx_rectified: &IndexImage, scale: f64) -> Result<BinaryImage> {
    let level = match otsu_threshold_real(idx_rectified, DEFAULT_OTSU_BINS) {
        Ok(level) => level,
        // A single-valued index image means no colored grid is present.
        Err(Error::DegenerateHistogram) => return Err(Error::NoGridDetected),
        Err(e) => return Err(e),
    };
    let cut = scale * level;
    Ok(BinaryImage::new(
        idx_rectified.width,
        idx_rectified.height,
        idx_rectified.data.iter().map(|&v| v >= cut).collect(),
    ))
}

/// Grid geometry recovered from mask projections.
#[derive(Debug, Clone, PartialEq)]
pub struct GridEstimate {
    /// Mean of the two pitches; the image's resolution, since the grid period
    /// is one millimeter.
    pub px_per_mm: f64,
    /// Median column spacing between vertical grid lines.
    pub h_pitch_px: f64,
    /// Median row spacing between horizontal grid lines.
    pub v_pitch_px: f64,
    /// Vertical lines used for the horizontal pitch.
    pub n_lines_h: usize,
    /// Horizontal lines used for the vertical pitch.
    pub n_lines_v: usize,
}

/// Estimates grid pitch from per-axis projections of the grid mask.
///
/// A grid line shows up as a projection peak; the pitch along each axis is
/// the median spacing of consecutive peaks. Fewer than [`MIN_GRID_LINES`]
/// peaks on an axis or a pitch mismatch beyond [`SQUARE_GRID_TOLERANCE`]
/// (a rotated or anisotropic scan) is an error.
pub fn estimate_pitch(mask: &BinaryImage) -> Result<GridEstimate> {
    let (w, h) = (mask.width, mask.height);
    let mut col_proj = vec![0.0f64; w];
    let mut row_proj = vec![0.0f64; h];
    for (row, row_sum) in row_proj.iter_mut().enumerate() {
        for (col, col_sum) in col_proj.iter_mut().enumerate() {
            if mask.get(row, col) {
                *col_sum += 1.0;
                *row_sum += 1.0;
            }
        }
    }
    let col_peaks = projection_peaks(&col_proj);
    let row_peaks = projection_peaks(&row_proj);
    if col_peaks.len() < MIN_GRID_LINES {
        return Err(Error::TooFewGridLines {
            axis: "vertical",
            found: col_peaks.len(),
            need: MIN_GRID_LINES,
        });
    }
    if row_peaks.len() < MIN_GRID_LINES {
        return Err(Error::TooFewGridLines {
            axis: "horizontal",
            found: row_peaks.len(),
            need: MIN_GRID_LINES,
        });
    }
    let h_pitch = median(&spacings(&col_peaks));
    let v_pitch = median(&spacings(&row_peaks));
    let px_per_mm = (h_pitch + v_pitch) / 2.0;
    if (h_pitch - v_pitch).abs() / px_per_mm > SQUARE_GRID_TOLERANCE {
        return Err(Error::NonSquareGrid {
            h_pitch,
            v_pitch,
        });
    }
    Ok(GridEstimate {
        px_per_mm,
        h_pitch_px: h_pitch,
        v_pitch_px: v_pitch,
        n_lines_h: col_peaks.len(),
        n_lines_v: row_peaks.len(),
    })
}

/// Peaks of a projection: indices at least half the global maximum that are
/// strictly greater than everything else within a 3-px window. A run of equal
/// values counts as one candidate at its middle index, so 2-px-wide lines do
/// not suppress themselves.
pub(crate) fn projection_peaks(proj: &[f64]) -> Vec<usize> {
    const WINDOW: usize = 3;
    let max = proj.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if proj.is_empty() || max <= 0.0 {
        return Vec::new();
    }
    let floor = 0.5 * max;
    let mut peaks = Vec::new();
    let mut i = 0;
    while i < proj.len() {
        if proj[i] < floor {
            i += 1;
            continue;
        }
        let mut j = i;
        while j + 1 < proj.len() && proj[j + 1] == proj[i] {
            j += 1;
        }
        let lo = i.saturating_sub(WINDOW);
        let hi = (j + WINDOW).min(proj.len() - 1);
        let is_peak = (lo..i).all(|k| proj[k] < proj[i]) && (j + 1..=hi).all(|k| proj[k] < proj[i]);
        if is_peak {
            peaks.push((i + j) / 2);
        }
        i = j + 1;
    }
    peaks
}

fn spacings(peaks: &[usize]) -> Vec<f64> {
    peaks.windows(2).map(|p| (p[1] - p[0]) as f64).collect()
}
