//! End-to-end pipeline behavior on rendered sheets: lead naming, debug
//! artifacts, stage-tagged errors, pitch overrides, and gap healing.

mod common;

use common::*;
use ecg_digitize::error::Error;
use ecg_digitize::pipeline::{digitize_page, digitize_page_with_debug, PitchSource, RunConfig};
use ecg_digitize::raster::RgbImage;
use ecg_digitize::synth::render_sheet;

#[test]
fn three_lead_sheet_gets_numbered_lead_names() {
    let spec = left_margin_spec(3);
    let (img, _) = render_sheet(&spec).expect("render");
    let page = digitize_page(&img, &RunConfig::default()).expect("digitize");

    assert_eq!(page.px_per_mm_source, PitchSource::Estimated);
    assert_eq!(page.px_per_mm, 24.0);
    let names: Vec<&str> = page.leads.iter().map(|l| l.name.as_str()).collect();
    assert_eq!(names, ["lead_1", "lead_2", "lead_3"]);
    for (k, lead) in page.leads.iter().enumerate() {
        assert_eq!(lead.lead_index, k);
        assert!(lead.signal.len() > 1000, "lead {k} has {} samples", lead.signal.len());
        // Uniform time base at the estimated resolution.
        let dt = 40.0 / page.px_per_mm;
        for (i, &t) in lead.signal.t_ms.iter().enumerate() {
            assert!((t - i as f64 * dt).abs() < 1e-9);
        }
    }
    // Stripes are reported top to bottom without overlap.
    for pair in page.leads.windows(2) {
        assert!(pair[0].row_end < pair[1].row_start);
    }
}

#[test]
fn six_lead_sheet_gets_limb_lead_names() {
    let spec = glyphless_spec(6, 23.622, 700);
    let (img, _) = render_sheet(&spec).expect("render");
    let page = digitize_page(&img, &RunConfig::default()).expect("digitize");
    let names: Vec<&str> = page.leads.iter().map(|l| l.name.as_str()).collect();
    assert_eq!(names, ["I", "II", "III", "aVR", "aVL", "aVF"]);
}

#[test]
fn debug_mode_dumps_every_stage() {
    let spec = glyphless_spec(2, 23.622, 500);
    let (img, _) = render_sheet(&spec).expect("render");
    let dir = tempfile::tempdir().expect("tempdir");
    let debug = dir.path().join("stages");
    digitize_page_with_debug(&img, &RunConfig::default(), Some(&debug)).expect("digitize");

    for name in [
        "01_color_index",
        "02_relu_rectified",
        "03_grid_mask",
        "04_grid_removed",
        "05_binarized",
    ] {
        assert!(debug.join(format!("{name}.png")).is_file(), "missing {name}");
    }
    for k in 0..2 {
        for stage in ["raw", "roi", "nochar", "clean", "trace"] {
            let name = format!(
                "{:02}_stripe{k}_{stage}.png",
                6 + ["raw", "roi", "nochar", "clean", "trace"]
                    .iter()
                    .position(|s| *s == stage)
                    .unwrap()
            );
            assert!(debug.join(&name).is_file(), "missing {name}");
        }
    }
}

#[test]
fn blank_page_fails_at_the_grid_mask_stage() {
    let img = RgbImage::filled(400, 300, [252, 250, 248]);
    let err = digitize_page(&img, &RunConfig::default()).unwrap_err();
    assert_eq!(err.stage(), Some("grid_mask"));
}

#[test]
fn grid_without_any_curve_fails_at_binarization() {
    // A bare grid: the mask removes everything, leaving nothing to threshold.
    let mut img = RgbImage::filled(480, 360, [252, 250, 248]);
    for row in 0..360 {
        for col in 0..480 {
            if row % 24 == 0 || col % 24 == 0 {
                img.set_pixel(row, col, [244, 188, 188]);
            }
        }
    }
    let err = digitize_page(&img, &RunConfig::default()).unwrap_err();
    assert_eq!(err.stage(), Some("binarize_trace"));
    assert!(matches!(err, Error::Stage { .. }));
}

#[test]
fn resolution_override_skips_estimation() {
    let spec = glyphless_spec(1, 23.622, 500);
    let (img, _) = render_sheet(&spec).expect("render");
    let cfg = RunConfig {
        px_per_mm: Some(23.622),
        ..RunConfig::default()
    };
    let page = digitize_page(&img, &cfg).expect("digitize");
    assert_eq!(page.px_per_mm_source, PitchSource::Override);
    assert_eq!(page.px_per_mm, 23.622);
    assert!(page.warnings.is_empty());
}

#[test]
fn implausible_estimated_pitch_is_reported_as_a_warning() {
    let spec = glyphless_spec(1, 6.0, 500);
    let (img, truth) = render_sheet(&spec).expect("render");
    assert_eq!(truth.px_per_mm, 6.0);
    let page = digitize_page(&img, &RunConfig::default()).expect("digitize");
    assert_eq!(page.px_per_mm_source, PitchSource::Estimated);
    assert!(
        page.warnings.iter().any(|w| w.contains("plausible")),
        "warnings: {:?}",
        page.warnings
    );
}

#[test]
fn a_short_pen_skip_is_healed() {
    let spec = glyphless_spec(1, 23.622, 800);
    let (mut img, truth) = render_sheet(&spec).expect("render");

    // Paint a paper-colored band through the curve: a 6 px pen skip the
    // trace closing must bridge. Hosted on the flattest stretch of the
    // middle third so the gap-filled columns have a well-defined level.
    let st = &truth.stripes[0];
    let rows = &st.centerline_rows;
    let third = rows.len() / 3;
    let flat = (third..2 * third)
        .min_by(|&a, &b| {
            let span = |i: usize| {
                let w = &rows[i..i + 12];
                let lo = w.iter().cloned().fold(f64::INFINITY, f64::min);
                let hi = w.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                hi - lo
            };
            span(a).partial_cmp(&span(b)).unwrap()
        })
        .unwrap();
    for col in st.col_start + flat + 3..st.col_start + flat + 9 {
        for row in st.row_start..=st.row_end {
            img.set_pixel(row, col, [252, 250, 248]);
        }
    }

    let page = digitize_page(&img, &RunConfig::default()).expect("digitize");
    assert_eq!(page.leads.len(), 1);
    let cmp = compare_lead(&page.leads[0], st, page.px_per_mm, 0.1);
    assert!(
        cmp.n_overlap as f64 >= 0.95 * cmp.truth_len as f64,
        "trace truncated at the skip: {} of {}",
        cmp.n_overlap,
        cmp.truth_len
    );
    assert!(cmp.rmse_mv < 0.025, "rmse {:.4} mV after healing", cmp.rmse_mv);
}
