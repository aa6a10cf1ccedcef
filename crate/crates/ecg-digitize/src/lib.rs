//! Digitizes paper electrocardiogram scans into calibrated signals.
//!
//! A color scan of ECG chart paper goes in; per-lead signals in milliseconds
//! and millivolts come out. The page flows through [`pipeline::digitize_page`]
//! as: red-dominance color index, grid mask and pitch estimate, grid removal,
//! trace binarization, stripe segmentation, printed-label removal, curve
//! cleaning, gap filling, and calibration. Each stage lives in its own module
//! and is usable on its own.
//!
//! The [`synth`] module renders synthetic sheets with exact ground truth
//! (plus scan-defect distortions), which is how the pipeline's accuracy is
//! scored in this crate's tests.
//!
//! ```
//! use ecg_digitize::pipeline::{digitize_page, RunConfig};
//! use ecg_digitize::synth::{render_sheet, LeadSpec, SheetSpec};
//!
//! // One lead: 500 samples of a wandering test signal, 2 ms apart.
//! let samples: Vec<f64> = (0..500)
//!     .map(|i| {
//!         let t = i as f64;
//!         0.12 * (t / 19.0).sin() + 0.1 * (t / 7.3).sin() + 0.08 * (t / 2.9).sin()
//!     })
//!     .collect();
//! let mut spec = SheetSpec::with_leads(vec![LeadSpec {
//!     name: "I".into(),
//!     samples_mv: samples,
//!     ms_per_sample: 2.0,
//! }]);
//! spec.label_glyphs = false;
//! let (page, _truth) = render_sheet(&spec)?;
//!
//! let digitized = digitize_page(&page, &RunConfig::default())?;
//! assert_eq!(digitized.leads.len(), 1);
//! assert!(digitized.leads[0].signal.v_mv.len() > 400);
//! # Ok::<(), ecg_digitize::Error>(())
//! ```

pub mod binarize;
pub mod calibrate;
pub mod charclean;
pub mod error;
pub mod gridmask;
pub mod morphology;
pub mod pipeline;
pub mod raster;
pub mod segment;
mod stats;
pub mod synth;
pub mod trace;

pub use error::{Error, Result};
