//! Curve isolation and reduction to one row per column.

use crate::error::{Error, Result};
use crate::morphology::{close, label, retain_labels, Disk};
use crate::raster::BinaryImage;
use crate::stats::median;

/// One row value per column of a stripe, plus the column of the first sample
/// in the stripe the trace was cut from.
#[derive(Debug, Clone, PartialEq)]
pub struct ColumnTrace {
    pub rows: Vec<Option<f64>>,
    pub col_offset: usize,
}

/// Keeps only the largest connected blob after a closing that heals pen
/// skips, then restores the original pixels under it.
pub fn clean_curve(img: &BinaryImage, px_per_mm: f64) -> Result<BinaryImage> {
    clean_curve_with(img, px_per_mm, 1.0)
}

/// [`clean_curve`] with an explicit closing radius in mm.
pub fn clean_curve_with(img: &BinaryImage, px_per_mm: f64, close_mm: f64) -> Result<BinaryImage> {
    assert!(px_per_mm > 0.0, "pixel pitch must be positive");
    assert!(close_mm >= 0.0, "closing radius must be nonnegative");
    let radius = (close_mm * px_per_mm).round() as u32;
    let fused = close(img, Disk::new(radius));
    let (labels, blobs) = label(&fused);
    let largest = blobs.first().ok_or(Error::EmptyStripe)?;
    retain_labels(img, &labels, largest.label)
}

/// Inclusive bounding box (row_start, row_end, col_start, col_end) of the
/// active pixels, or `None` for a blank image.
pub fn active_box(img: &BinaryImage) -> Option<(usize, usize, usize, usize)> {
    let mut r0 = usize::MAX;
    let mut r1 = 0usize;
    let mut c0 = usize::MAX;
    let mut c1 = 0usize;
    for row in 0..img.height {
        for col in 0..img.width {
            if img.get(row, col) {
                r0 = r0.min(row);
                r1 = r1.max(row);
                c0 = c0.min(col);
                c1 = c1.max(col);
            }
        }
    }
    (r0 != usize::MAX).then_some((r0, r1, c0, c1))
}

/// Crops to the bounding box of the active pixels.
pub fn tight_bounds(img: &BinaryImage) -> Result<BinaryImage> {
    let (r0, r1, c0, c1) = active_box(img).ok_or(Error::EmptyImage)?;
    Ok(img.crop_rows(r0, r1).crop_cols(c0, c1))
}

/// Reduces each column to its topmost active row; columns with no active
/// pixel become `None`.
pub fn thin_topmost(img: &BinaryImage, col_offset: usize) -> ColumnTrace {
    let rows = (0..img.width)
        .map(|col| (0..img.height).find(|&row| img.get(row, col)).map(|r| r as f64))
        .collect();
    ColumnTrace { rows, col_offset }
}

/// Fills missing columns with the median of originally valid rows nearby.
///
/// For each gap column the window `[c - w, c + w]` is searched among the
/// columns that were valid before filling; an empty window doubles `w` until
/// it captures a value. Fails if no column is valid at all.
pub fn fill_gaps(trace: &ColumnTrace, window: usize) -> Result<ColumnTrace> {
    assert!(window >= 1, "window must be at least one column");
    let n = trace.rows.len();
    if trace.rows.iter().all(|r| r.is_none()) {
        return Err(Error::NoValidColumns);
    }
    let mut rows = trace.rows.clone();
    for (c, slot) in rows.iter_mut().enumerate() {
        if slot.is_some() {
            continue;
        }
        let mut w = window;
        loop {
            let lo = c.saturating_sub(w);
            let hi = (c + w).min(n - 1);
            let near: Vec<f64> = trace.rows[lo..=hi].iter().filter_map(|&r| r).collect();
            if !near.is_empty() {
                *slot = Some(median(&near));
                break;
            }
            w *= 2;
        }
    }
    Ok(ColumnTrace { rows, col_offset: trace.col_offset })
}
