//! Page segmentation: horizontal stripes (one per plotted curve) from the
//! row-mean projection, and a per-stripe column region of interest from the
//! column-wise edge count.

use crate::error::{Error, Result};
use crate::raster::BinaryImage;

/// Tunables for stripe and ROI detection.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentParams {
    /// A stripe maximum must reach this fraction of the smoothed projection's
    /// global maximum; lower bumps are treated as noise.
    pub prominence_fraction: f64,
    /// Columns before `width * left_fraction` form the left band searched for
    /// the last blank run (calibration marks, lead labels).
    pub left_fraction: f64,
    /// Columns in `[width * left_fraction, width * middle_fraction]` form the
    /// middle band whose first blank run ends the region of interest.
    pub middle_fraction: f64,
}

impl Default for SegmentParams {
    fn default() -> Self {
        Self {
            prominence_fraction: 0.25,
            left_fraction: 1.0 / 3.0,
            middle_fraction: 2.0 / 3.0,
        }
    }
}

impl SegmentParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.prominence_fraction > 0.0 && self.prominence_fraction <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "prominence fraction must be in (0, 1], got {}",
                self.prominence_fraction
            )));
        }
        if !(self.left_fraction > 0.0
            && self.left_fraction < self.middle_fraction
            && self.middle_fraction <= 1.0)
        {
            return Err(Error::InvalidConfig(format!(
                "need 0 < left fraction < middle fraction <= 1, got {} and {}",
                self.left_fraction, self.middle_fraction
            )));
        }
        Ok(())
    }
}

/// Per-row mean of active pixels, in [0, 1].
pub fn row_projection(img: &BinaryImage) -> Vec<f64> {
    let (w, h) = (img.width, img.height);
    (0..h)
        .map(|row| (0..w).filter(|&col| img.get(row, col)).count() as f64 / w as f64)
        .collect()
}

/// Splits the page into one row interval per plotted curve.
///
/// The projection is smoothed by a centered moving average about one grid
/// pitch wide; curve centers are smoothed-projection maxima that dominate a
/// two-pitch neighborhood, and each pair of consecutive maxima is separated
/// at the minimum between them.
pub fn find_stripes(proj: &[f64], pitch_px: f64) -> Result<Vec<(usize, usize)>> {
    find_stripes_with(proj, pitch_px, &SegmentParams::default())
}

/// [`find_stripes`] with explicit parameters.
pub fn find_stripes_with(
    proj: &[f64],
    pitch_px: f64,
    params: &SegmentParams,
) -> Result<Vec<(usize, usize)>> {
    assert!(pitch_px > 0.0, "pitch must be positive");
    params.validate()?;
    if proj.is_empty() {
        return Err(Error::NoCurves);
    }
    let smoothed = moving_average(proj, odd_window(pitch_px));
    let max = smoothed.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if max <= 0.0 {
        return Err(Error::NoCurves);
    }
    let floor = params.prominence_fraction * max;
    let reach = ((2.0 * pitch_px).round() as usize).max(1);

    let mut maxima = Vec::new();
    let mut i = 0;
    while i < smoothed.len() {
        if smoothed[i] < floor {
            i += 1;
            continue;
        }
        let mut j = i;
        while j + 1 < smoothed.len() && smoothed[j + 1] == smoothed[i] {
            j += 1;
        }
        let lo = i.saturating_sub(reach);
        let hi = (j + reach).min(smoothed.len() - 1);
        let dominant = (lo..i).all(|k| smoothed[k] < smoothed[i])
            && (j + 1..=hi).all(|k| smoothed[k] < smoothed[i]);
        if dominant {
            maxima.push((i + j) / 2);
        }
        i = j + 1;
    }
    if maxima.is_empty() {
        return Err(Error::NoCurves);
    }

    let mut breaks = Vec::new();
    for pair in maxima.windows(2) {
        let (p, q) = (pair[0], pair[1]);
        let min = smoothed[p + 1..q].iter().cloned().fold(f64::INFINITY, f64::min);
        let first = (p + 1..q).find(|&k| smoothed[k] == min).unwrap();
        let last = (p + 1..q).rev().find(|&k| smoothed[k] == min).unwrap();
        breaks.push((first + last) / 2);
    }

    let mut stripes = Vec::with_capacity(breaks.len() + 1);
    let mut start = 0;
    for &b in &breaks {
        stripes.push((start, b));
        start = b + 1;
    }
    stripes.push((start, proj.len() - 1));
    Ok(stripes)
}

fn odd_window(pitch_px: f64) -> usize {
    let w = (pitch_px.round() as usize).max(1);
    if w.is_multiple_of(2) {
        w + 1
    } else {
        w
    }
}

// Centered moving average with the window clipped at the edges.
fn moving_average(values: &[f64], window: usize) -> Vec<f64> {
    let half = window / 2;
    let n = values.len();
    (0..n)
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half).min(n - 1);
            let sum: f64 = values[lo..=hi].iter().sum();
            sum / (hi - lo + 1) as f64
        })
        .collect()
}

/// One crop per plotted curve, ordered top to bottom.
#[derive(Debug, Clone, PartialEq)]
pub struct Stripe {
    pub row_start: usize,
    pub row_end: usize,
    pub image: BinaryImage,
    /// Ordinal from the top of the page, 0-based.
    pub lead_index: usize,
}

/// Materializes stripe crops from the bounds returned by [`find_stripes`].
pub fn extract_stripes(page: &BinaryImage, bounds: &[(usize, usize)]) -> Vec<Stripe> {
    bounds
        .iter()
        .enumerate()
        .map(|(lead_index, &(row_start, row_end))| Stripe {
            row_start,
            row_end,
            image: page.crop_rows(row_start, row_end),
            lead_index,
        })
        .collect()
}

/// Inclusive column interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ColumnRoi {
    pub col_start: usize,
    pub col_end: usize,
}

/// Per-column count of vertical active/inactive transitions.
pub fn edge_projection(img: &BinaryImage) -> Vec<u32> {
    let (w, h) = (img.width, img.height);
    let mut proj = vec![0u32; w];
    for (col, p) in proj.iter_mut().enumerate() {
        for row in 0..h.saturating_sub(1) {
            if img.get(row, col) != img.get(row + 1, col) {
                *p += 1;
            }
        }
    }
    proj
}

/// Finds the column span holding the curve, cutting away the label band on
/// the left and anything after the first blank band in the page's middle.
pub fn find_roi_columns(eproj: &[u32], pitch_px: f64) -> Result<ColumnRoi> {
    find_roi_columns_with(eproj, pitch_px, &SegmentParams::default())
}

/// [`find_roi_columns`] with explicit parameters.
///
/// A blank run is at least round(pitch/2) consecutive zero columns, so pen
/// skips a few pixels wide never split the region. The span starts after the
/// last blank run ending in the left band and stops before the first blank
/// run starting in the middle band; missing runs fall back to the page edges.
pub fn find_roi_columns_with(
    eproj: &[u32],
    pitch_px: f64,
    params: &SegmentParams,
) -> Result<ColumnRoi> {
    assert!(pitch_px > 0.0, "pitch must be positive");
    params.validate()?;
    let w = eproj.len();
    if eproj.iter().all(|&e| e == 0) {
        return Err(Error::EmptyRoi);
    }
    let min_len = ((pitch_px / 2.0).round() as usize).max(1);
    let mut runs: Vec<(usize, usize)> = Vec::new();
    let mut start = None;
    for (i, &e) in eproj.iter().enumerate() {
        match (e == 0, start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                if i - s >= min_len {
                    runs.push((s, i - 1));
                }
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        if w - s >= min_len {
            runs.push((s, w - 1));
        }
    }

    let left_end = (w as f64 * params.left_fraction).floor() as usize;
    let middle_lo = left_end;
    let middle_hi = (w as f64 * params.middle_fraction).floor() as usize;

    let col_start = runs
        .iter()
        .rev()
        .find(|&&(_, b)| b < left_end)
        .map(|&(_, b)| b + 1)
        .unwrap_or(0);
    let col_end = runs
        .iter()
        .find(|&&(a, _)| a >= middle_lo && a <= middle_hi)
        .map(|&(a, _)| a.saturating_sub(1))
        .unwrap_or(w - 1);

    if col_start > col_end {
        return Err(Error::EmptyRoi);
    }
    Ok(ColumnRoi { col_start, col_end })
}

/// Column-sliced copy of the image.
pub fn crop_roi(img: &BinaryImage, roi: ColumnRoi) -> Result<BinaryImage> {
    if roi.col_start > roi.col_end || roi.col_end >= img.width {
        return Err(Error::RoiOutOfRange {
            start: roi.col_start,
            end: roi.col_end,
            width: img.width,
        });
    }
    Ok(img.crop_cols(roi.col_start, roi.col_end))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn projection_of_full_image_is_all_ones() {
        let img = BinaryImage::filled(4, 2, true);
        assert_eq!(row_projection(&img), vec![1.0, 1.0]);
    }

    #[test]
    fn projection_counts_fractions() {
        let mut img = BinaryImage::filled(4, 1, false);
        img.set(0, 2, true);
        assert_eq!(row_projection(&img), vec![0.25]);
    }

    #[test]
    fn empty_image_projects_to_zero() {
        let img = BinaryImage::filled(3, 3, false);
        assert_eq!(row_projection(&img), vec![0.0; 3]);
    }

    fn gaussian_bump(center: f64, sigma: f64, n: usize) -> Vec<f64> {
        (0..n)
            .map(|r| {
                let d = (r as f64 - center) / sigma;
                (-d * d).exp()
            })
            .collect()
    }

    #[test]
    fn two_bumps_split_at_the_valley() {
        let n = 400;
        let proj: Vec<f64> = gaussian_bump(100.0, 30.0, n)
            .iter()
            .zip(&gaussian_bump(300.0, 30.0, n))
            .map(|(a, b)| a + b)
            .collect();
        let stripes = find_stripes(&proj, 24.0).unwrap();
        assert_eq!(stripes, vec![(0, 200), (201, 399)]);
    }

    #[test]
    fn single_bump_is_one_whole_page_stripe() {
        let proj = gaussian_bump(120.0, 25.0, 300);
        assert_eq!(find_stripes(&proj, 24.0).unwrap(), vec![(0, 299)]);
    }

    #[test]
    fn flat_zero_projection_has_no_curves() {
        assert!(matches!(
            find_stripes(&vec![0.0; 256], 24.0),
            Err(Error::NoCurves)
        ));
    }

    #[test]
    fn low_bumps_below_prominence_are_ignored() {
        let n = 400;
        let proj: Vec<f64> = gaussian_bump(100.0, 30.0, n)
            .iter()
            .zip(&gaussian_bump(300.0, 12.0, n))
            .map(|(a, b)| a + 0.05 * b)
            .collect();
        assert_eq!(find_stripes(&proj, 24.0).unwrap(), vec![(0, n - 1)]);
    }

    #[test]
    fn stripes_partition_the_page() {
        let n = 600;
        let proj: Vec<f64> = (0..n)
            .map(|r| {
                gaussian_bump(100.0, 28.0, n)[r]
                    + gaussian_bump(300.0, 28.0, n)[r]
                    + gaussian_bump(500.0, 28.0, n)[r]
            })
            .collect();
        let stripes = find_stripes(&proj, 23.0).unwrap();
        assert_eq!(stripes.len(), 3);
        assert_eq!(stripes[0].0, 0);
        assert_eq!(stripes[2].1, n - 1);
        for pair in stripes.windows(2) {
            assert_eq!(pair[0].1 + 1, pair[1].0);
        }
    }

    #[test]
    fn extraction_crops_the_right_rows() {
        let mut page = BinaryImage::filled(3, 6, false);
        page.set(1, 0, true);
        page.set(4, 2, true);
        let stripes = extract_stripes(&page, &[(0, 2), (3, 5)]);
        assert_eq!(stripes.len(), 2);
        assert_eq!(stripes[0].lead_index, 0);
        assert_eq!(stripes[0].image.height, 3);
        assert!(stripes[0].image.get(1, 0));
        assert!(stripes[1].image.get(1, 2));
    }

    fn column_image(col: &[bool]) -> BinaryImage {
        BinaryImage::new(1, col.len(), col.to_vec())
    }

    #[test]
    fn edge_count_examples() {
        assert_eq!(edge_projection(&column_image(&[false, true, true, false])), vec![2]);
        assert_eq!(edge_projection(&column_image(&[false; 4])), vec![0]);
        assert_eq!(edge_projection(&column_image(&[true, false, true, false])), vec![3]);
    }

    #[test]
    fn roi_from_constructed_projection() {
        let mut eproj = vec![2u32; 900];
        for e in eproj[0..100].iter_mut() {
            *e = 0;
        }
        for e in eproj[450..530].iter_mut() {
            *e = 0;
        }
        let roi = find_roi_columns(&eproj, 24.0).unwrap();
        assert_eq!(roi, ColumnRoi { col_start: 100, col_end: 449 });
    }

    #[test]
    fn no_blank_runs_fall_back_to_full_width() {
        let eproj = vec![1u32; 300];
        let roi = find_roi_columns(&eproj, 24.0).unwrap();
        assert_eq!(roi, ColumnRoi { col_start: 0, col_end: 299 });
    }

    #[test]
    fn all_zero_projection_is_an_empty_roi() {
        assert!(matches!(
            find_roi_columns(&vec![0u32; 300], 24.0),
            Err(Error::EmptyRoi)
        ));
    }

    #[test]
    fn short_zero_runs_do_not_split_the_region() {
        // Pen skips much narrower than half a pitch are not blank bands.
        let mut eproj = vec![3u32; 600];
        for e in eproj[250..255].iter_mut() {
            *e = 0;
        }
        let roi = find_roi_columns(&eproj, 24.0).unwrap();
        assert_eq!(roi, ColumnRoi { col_start: 0, col_end: 599 });
    }

    #[test]
    fn crop_identities() {
        let mut img = BinaryImage::filled(5, 2, false);
        img.set(0, 3, true);
        let full = crop_roi(&img, ColumnRoi { col_start: 0, col_end: 4 }).unwrap();
        assert_eq!(full, img);
        let one = crop_roi(&img, ColumnRoi { col_start: 3, col_end: 3 }).unwrap();
        assert_eq!(one.width, 1);
        assert!(one.get(0, 0));
        assert!(matches!(
            crop_roi(&img, ColumnRoi { col_start: 2, col_end: 5 }),
            Err(Error::RoiOutOfRange { .. })
        ));
    }

    // Run-length reference: edges = 2*runs - starts_active - ends_active.
    fn edge_count_oracle(col: &[bool]) -> u32 {
        let mut runs = 0u32;
        for i in 0..col.len() {
            if col[i] && (i == 0 || !col[i - 1]) {
                runs += 1;
            }
        }
        2 * runs - col.first().map_or(0, |&b| b as u32) - col.last().map_or(0, |&b| b as u32)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn edge_projection_matches_run_length_oracle(
            col in proptest::collection::vec(any::<bool>(), 1..64),
        ) {
            let img = column_image(&col);
            prop_assert_eq!(edge_projection(&img), vec![edge_count_oracle(&col)]);
        }

        #[test]
        fn breaking_rows_sit_at_or_below_their_neighbors(
            centers in proptest::collection::vec(80.0f64..520.0, 2..5),
            sigma in 15.0f64..35.0,
        ) {
            let n = 600usize;
            let mut proj = vec![0.0; n];
            for &c in &centers {
                for (r, v) in proj.iter_mut().enumerate() {
                    let d = (r as f64 - c) / sigma;
                    *v += (-d * d).exp();
                }
            }
            if let Ok(stripes) = find_stripes(&proj, 24.0) {
                let smoothed = moving_average(&proj, odd_window(24.0));
                for pair in stripes.windows(2) {
                    let b = pair[0].1;
                    // The break is never higher than the smoothed values at
                    // the adjacent stripe interiors' maxima.
                    let left_max = smoothed[pair[0].0..=pair[0].1]
                        .iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                    let right_max = smoothed[pair[1].0..=pair[1].1]
                        .iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                    prop_assert!(smoothed[b] <= left_max && smoothed[b] <= right_max);
                }
            }
        }

        #[test]
        fn roi_is_stable_under_short_right_padding(
            pitch in 8.0f64..40.0,
            left_zeros in 20usize..60,
            curve_len in 300usize..500,
            middle_zeros in 20usize..60,
            tail_len in 300usize..500,
        ) {
            // A realistic layout: blank label margin, curve, blank band,
            // trailing content through the last column. Blank runs are kept
            // clear of the left/middle band boundaries, which shift a little
            // when the vector grows.
            let min_len = ((pitch / 2.0).round() as usize).max(1);
            prop_assume!(left_zeros >= min_len && middle_zeros >= min_len);
            let mut eproj = Vec::new();
            eproj.extend(std::iter::repeat_n(0u32, left_zeros));
            eproj.extend(std::iter::repeat_n(2u32, curve_len));
            eproj.extend(std::iter::repeat_n(0u32, middle_zeros));
            eproj.extend(std::iter::repeat_n(1u32, tail_len));
            let w = eproj.len();
            let margin = pitch.ceil() as usize;
            prop_assume!(left_zeros + margin < w / 3);
            prop_assume!(left_zeros + curve_len > w / 3 + margin);
            prop_assume!(left_zeros + curve_len + margin < 2 * w / 3);

            let expect = ColumnRoi {
                col_start: left_zeros,
                col_end: left_zeros + curve_len - 1,
            };
            prop_assert_eq!(find_roi_columns(&eproj, pitch).unwrap(), expect);
            let pad = ((pitch / 2.0).ceil() as usize).saturating_sub(1);
            eproj.extend(std::iter::repeat_n(0u32, pad));
            prop_assert_eq!(find_roi_columns(&eproj, pitch).unwrap(), expect);
        }
    }
}
