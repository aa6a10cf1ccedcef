//! Grayscale thresholding that turns the grid-free page into a binary image
//! whose active pixels are the plotted ink.

use crate::error::{Error, Result};
use crate::gridmask::otsu_mean_cut;
use crate::raster::{BinaryImage, GrayImage};

/// Between-class-variance threshold over the 8-bit histogram.
///
/// Threshold `t` puts values `< t` in the low class. Exactly tied thresholds
/// are averaged (and rounded), mirroring [`crate::gridmask::otsu_threshold_real`],
/// so well-separated ink and paper clusters get a mid-gap level.
pub fn otsu_threshold_u8(img: &GrayImage) -> Result<u8> {
    let mut hist = [0u64; 256];
    for &v in &img.data {
        hist[v as usize] += 1;
    }
    let cut = otsu_mean_cut(&hist)?;
    Ok(cut.round() as u8)
}

/// Binarizes a grid-free grayscale page so that dark ink is active.
///
/// The complement is folded in: a pixel is active iff its value is below the
/// Otsu threshold. A single-valued page (nothing plotted) is an error, and so
/// is a threshold that marks most of the page: plotted traces are sparse, so
/// an ink majority means the page holds no curve and the split found only
/// paper texture.
pub fn binarize_trace(gray_no_grid: &GrayImage) -> Result<BinaryImage> {
    let level = otsu_threshold_u8(gray_no_grid)?;
    let out = BinaryImage::new(
        gray_no_grid.width,
        gray_no_grid.height,
        gray_no_grid.data.iter().map(|&v| v < level).collect(),
    );
    let fraction = out.count_true() as f64 / out.data.len().max(1) as f64;
    if fraction > 0.5 {
        return Err(Error::InkMajority {
            percent: fraction * 100.0,
        });
    }
    Ok(out)
}
