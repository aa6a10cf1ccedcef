//! End-to-end page digitization and batch processing.
//!
//! The per-page flow: color index, grid mask, pitch estimate, grid removal,
//! trace binarization, stripe segmentation, per-stripe label removal, curve
//! cleanup, thinning, gap fill, and calibration to physical units. Every
//! stage failure is wrapped with the stage's name so batch logs say where a
//! page died.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::binarize;
use crate::calibrate::{self, Calibration, Signal};
use crate::charclean::{self, CharFilterConfig};
use crate::error::{Error, Result};
use crate::gridmask;
use crate::morphology::{close, label, Disk};
use crate::raster::{self, BinaryImage, GrayImage, IndexImage, RgbImage};
use crate::segment::{self, SegmentParams};
use crate::trace;

/// Version tag written into every manifest.
pub const SCHEMA_VERSION: u32 = 1;

/// Grid pitches outside this range draw a warning: scans are rarely coarser
/// than 200 dpi or finer than 1000 dpi.
pub const PLAUSIBLE_PX_PER_MM: (f64, f64) = (8.0, 40.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

/// Everything a batch run needs to know.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub out_dir: PathBuf,
    pub mv_per_mm: f64,
    pub ms_per_mm: f64,
    /// Skips grid pitch estimation when set.
    pub px_per_mm: Option<f64>,
    /// Scale on the Otsu level for the grid mask threshold.
    pub otsu_scale: f64,
    pub char_filter: CharFilterConfig,
    /// Closing radius healing pen skips before blob selection, mm.
    pub trace_close_mm: f64,
    /// Half-width of the gap fill median window, mm.
    pub fill_window_mm: f64,
    pub segment: SegmentParams,
    pub debug_images: bool,
    pub format: OutputFormat,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            out_dir: PathBuf::from("."),
            mv_per_mm: calibrate::DEFAULT_MV_PER_MM,
            ms_per_mm: calibrate::DEFAULT_MS_PER_MM,
            px_per_mm: None,
            otsu_scale: gridmask::DEFAULT_MASK_SCALE,
            char_filter: CharFilterConfig::default(),
            trace_close_mm: 1.0,
            fill_window_mm: 2.0,
            segment: SegmentParams::default(),
            debug_images: false,
            format: OutputFormat::Csv,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("mV per mm", self.mv_per_mm), ("ms per mm", self.ms_per_mm)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidConfig(format!("{name} must be positive, got {v}")));
            }
        }
        if let Some(p) = self.px_per_mm {
            if !(p > 0.0 && p.is_finite()) {
                return Err(Error::InvalidConfig(format!(
                    "px per mm override must be positive, got {p}"
                )));
            }
        }
        if !(self.otsu_scale > 0.0 && self.otsu_scale.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "otsu scale must be positive, got {}",
                self.otsu_scale
            )));
        }
        if self.trace_close_mm < 0.0 {
            return Err(Error::InvalidConfig(format!(
                "trace close radius must be nonnegative, got {} mm",
                self.trace_close_mm
            )));
        }
        if !(self.fill_window_mm > 0.0 && self.fill_window_mm.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "fill window must be positive, got {} mm",
                self.fill_window_mm
            )));
        }
        self.char_filter.validate()?;
        self.segment.validate()?;
        Ok(())
    }
}

/// How the page's resolution was determined.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PitchSource {
    Estimated,
    Override,
}

impl PitchSource {
    pub fn as_str(self) -> &'static str {
        match self {
            PitchSource::Estimated => "estimated",
            PitchSource::Override => "override",
        }
    }
}

/// One digitized lead with its location on the page.
#[derive(Debug, Clone)]
pub struct DigitizedLead {
    pub name: String,
    pub lead_index: usize,
    /// Stripe rows on the page, inclusive.
    pub row_start: usize,
    pub row_end: usize,
    /// Page column of the signal's first sample.
    pub col_start: usize,
    pub signal: Signal,
}

/// A fully digitized page.
#[derive(Debug, Clone)]
pub struct DigitizedPage {
    pub px_per_mm: f64,
    pub px_per_mm_source: PitchSource,
    pub warnings: Vec<String>,
    pub leads: Vec<DigitizedLead>,
}

/// Conventional limb lead names for a six-stripe page; positional names
/// otherwise.
pub fn lead_names(count: usize) -> Vec<String> {
    if count == 6 {
        ["I", "II", "III", "aVR", "aVL", "aVF"]
            .iter()
            .map(|s| s.to_string())
            .collect()
    } else {
        (1..=count).map(|k| format!("lead_{k}")).collect()
    }
}

/// Digitizes one page image.
pub fn digitize_page(img: &RgbImage, cfg: &RunConfig) -> Result<DigitizedPage> {
    digitize_page_with_debug(img, cfg, None)
}

/// [`digitize_page`], optionally dumping each stage's intermediate image
/// into `debug_dir` for visual inspection.
pub fn digitize_page_with_debug(
    img: &RgbImage,
    cfg: &RunConfig,
    debug_dir: Option<&Path>,
) -> Result<DigitizedPage> {
    cfg.validate()?;
    if let Some(dir) = debug_dir {
        fs::create_dir_all(dir).map_err(|e| Error::Unwritable {
            path: dir.to_path_buf(),
            detail: e.to_string(),
        })?;
    }

    let index = gridmask::color_index(img);
    dump_index(debug_dir, "01_color_index", &index)?;
    let rectified = gridmask::relu_rectify(&index);
    dump_index(debug_dir, "02_relu_rectified", &rectified)?;

    let grid = gridmask::grid_mask_with_scale(&rectified, cfg.otsu_scale)
        .map_err(|e| e.at_stage("grid_mask"))?;
    dump_binary(debug_dir, "03_grid_mask", &grid)?;

    let mut warnings = Vec::new();
    let (px_per_mm, source) = match cfg.px_per_mm {
        Some(p) => (p, PitchSource::Override),
        None => {
            let est = gridmask::estimate_pitch(&grid).map_err(|e| e.at_stage("estimate_pitch"))?;
            let (lo, hi) = PLAUSIBLE_PX_PER_MM;
            if est.px_per_mm < lo || est.px_per_mm > hi {
                warnings.push(format!(
                    "estimated grid pitch {:.2} px/mm is outside the plausible range \
                     {lo:.0}..{hi:.0}; rerun with an explicit resolution if the scan \
                     dpi is known",
                    est.px_per_mm
                ));
                log::warn!("{}", warnings.last().unwrap());
            }
            (est.px_per_mm, PitchSource::Estimated)
        }
    };

    let gray = raster::to_grayscale(img);
    let cleared = raster::whiteout(&gray, &grid).map_err(|e| e.at_stage("whiteout"))?;
    dump_gray(debug_dir, "04_grid_removed", &cleared)?;
    let ink = binarize::binarize_trace(&cleared).map_err(|e| e.at_stage("binarize_trace"))?;
    dump_binary(debug_dir, "05_binarized", &ink)?;

    let projection = segment::row_projection(&ink);
    let bounds = segment::find_stripes_with(&projection, px_per_mm, &cfg.segment)
        .map_err(|e| e.at_stage("find_stripes"))?;
    let stripes = segment::extract_stripes(&ink, &bounds);
    let names = lead_names(stripes.len());

    let cal = Calibration {
        px_per_mm,
        mv_per_mm: cfg.mv_per_mm,
        ms_per_mm: cfg.ms_per_mm,
    };
    let fill_window = ((cfg.fill_window_mm * px_per_mm).round() as usize).max(1);

    let mut leads = Vec::with_capacity(stripes.len());
    for stripe in &stripes {
        let k = stripe.lead_index;
        dump_binary(debug_dir, &format!("06_stripe{k}_raw"), &stripe.image)?;

        let edges = segment::edge_projection(&stripe.image);
        let roi = segment::find_roi_columns_with(&edges, px_per_mm, &cfg.segment)
            .map_err(|e| e.at_stage("find_roi_columns"))?;
        let cropped = segment::crop_roi(&stripe.image, roi).map_err(|e| e.at_stage("crop_roi"))?;
        dump_binary(debug_dir, &format!("07_stripe{k}_roi"), &cropped)?;

        let lettered = charclean::remove_characters(&cropped, px_per_mm, &cfg.char_filter)
            .map_err(|e| e.at_stage("remove_characters"))?;
        dump_binary(debug_dir, &format!("08_stripe{k}_nochar"), &lettered)?;

        let cleaned = trace::clean_curve_with(&lettered, px_per_mm, cfg.trace_close_mm)
            .map_err(|e| e.at_stage("clean_curve"))?;
        dump_binary(debug_dir, &format!("09_stripe{k}_clean"), &cleaned)?;

        let (r0, r1, c0, c1) = trace::active_box(&cleaned)
            .ok_or(Error::EmptyImage)
            .map_err(|e| e.at_stage("tight_bounds"))?;
        let tight = cleaned.crop_rows(r0, r1).crop_cols(c0, c1);
        let col_start = roi.col_start + c0;

        let thin = trace::thin_topmost(&tight, col_start);
        let filled = trace::fill_gaps(&thin, fill_window).map_err(|e| e.at_stage("fill_gaps"))?;
        dump_trace(debug_dir, &format!("10_stripe{k}_trace"), &filled, tight.height)?;

        let signal = calibrate::to_signal(&filled, &cal).map_err(|e| e.at_stage("to_signal"))?;
        leads.push(DigitizedLead {
            name: names[k].clone(),
            lead_index: k,
            row_start: stripe.row_start,
            row_end: stripe.row_end,
            col_start,
            signal,
        });
    }

    Ok(DigitizedPage { px_per_mm, px_per_mm_source: source, warnings, leads })
}

fn dump_index(dir: Option<&Path>, name: &str, img: &IndexImage) -> Result<()> {
    let Some(dir) = dir else { return Ok(()) };
    let data = img
        .data
        .iter()
        .map(|&v| (v.clamp(0.0, 1.0) * 255.0).round() as u8)
        .collect();
    GrayImage::new(img.width, img.height, data).save(&dir.join(format!("{name}.png")))
}

fn dump_gray(dir: Option<&Path>, name: &str, img: &GrayImage) -> Result<()> {
    let Some(dir) = dir else { return Ok(()) };
    img.save(&dir.join(format!("{name}.png")))
}

fn dump_binary(dir: Option<&Path>, name: &str, img: &BinaryImage) -> Result<()> {
    let Some(dir) = dir else { return Ok(()) };
    img.save(&dir.join(format!("{name}.png")))
}

fn dump_trace(dir: Option<&Path>, name: &str, tr: &trace::ColumnTrace, height: usize) -> Result<()> {
    let Some(dir) = dir else { return Ok(()) };
    let mut img = BinaryImage::filled(tr.rows.len(), height.max(1), false);
    for (col, row) in tr.rows.iter().enumerate() {
        if let Some(r) = row {
            let r = (r.round() as usize).min(img.height - 1);
            img.set(r, col, true);
        }
    }
    img.save(&dir.join(format!("{name}.png")))
}

#[derive(Serialize)]
struct ManifestLead {
    name: String,
    lead_index: usize,
    row_start: usize,
    row_end: usize,
    col_start: usize,
    samples: usize,
    file: String,
}

#[derive(Serialize)]
struct Manifest<'a> {
    schema_version: u32,
    input: String,
    px_per_mm: f64,
    px_per_mm_source: &'a str,
    warnings: &'a [String],
    leads: Vec<ManifestLead>,
}

/// Digitizes one file and writes its signal files plus a manifest into
/// `cfg.out_dir`. Returns the manifest path.
pub fn process_input(input: &Path, cfg: &RunConfig) -> Result<PathBuf> {
    cfg.validate()?;
    fs::create_dir_all(&cfg.out_dir).map_err(|e| Error::Unwritable {
        path: cfg.out_dir.clone(),
        detail: e.to_string(),
    })?;
    let stem = input
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "page".into());

    let img = raster::load_image(input).map_err(|e| e.at_stage("load"))?;
    let debug_dir = cfg.debug_images.then(|| cfg.out_dir.join(format!("{stem}_debug")));
    let page = digitize_page_with_debug(&img, cfg, debug_dir.as_deref())?;

    let mut leads = Vec::with_capacity(page.leads.len());
    for lead in &page.leads {
        let ext = match cfg.format {
            OutputFormat::Csv => "csv",
            OutputFormat::Json => "json",
        };
        let file = format!("{stem}_{}.{ext}", lead.name);
        let path = cfg.out_dir.join(&file);
        match cfg.format {
            OutputFormat::Csv => write_signal_csv(&path, &lead.signal)?,
            OutputFormat::Json => write_signal_json(&path, &lead.name, &lead.signal)?,
        }
        leads.push(ManifestLead {
            name: lead.name.clone(),
            lead_index: lead.lead_index,
            row_start: lead.row_start,
            row_end: lead.row_end,
            col_start: lead.col_start,
            samples: lead.signal.len(),
            file,
        });
    }

    let manifest = Manifest {
        schema_version: SCHEMA_VERSION,
        input: input.to_string_lossy().into_owned(),
        px_per_mm: page.px_per_mm,
        px_per_mm_source: page.px_per_mm_source.as_str(),
        warnings: &page.warnings,
        leads,
    };
    let manifest_path = cfg.out_dir.join(format!("{stem}_manifest.json"));
    let body = serde_json::to_vec_pretty(&manifest).expect("manifest serializes");
    write_atomic(&manifest_path, &body)?;
    Ok(manifest_path)
}

/// Outcome of a batch run.
#[derive(Debug)]
pub struct RunSummary {
    pub processed: usize,
    pub failures: Vec<(PathBuf, Error)>,
}

impl RunSummary {
    pub fn all_ok(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Processes every input, continuing past failures so one bad scan never
/// sinks a batch.
pub fn run(inputs: &[PathBuf], cfg: &RunConfig) -> RunSummary {
    let mut summary = RunSummary { processed: 0, failures: Vec::new() };
    for input in inputs {
        log::info!("digitizing {}", input.display());
        match process_input(input, cfg) {
            Ok(manifest) => {
                log::info!("wrote {}", manifest.display());
                summary.processed += 1;
            }
            Err(e) => {
                log::debug!("{}: {e}", input.display());
                summary.failures.push((input.clone(), e));
            }
        }
    }
    summary
}

fn write_signal_csv(path: &Path, signal: &Signal) -> Result<()> {
    let mut body = String::with_capacity(signal.len() * 24 + 16);
    body.push_str("t_ms,v_mv\n");
    for (t, v) in signal.t_ms.iter().zip(signal.v_mv.iter()) {
        body.push_str(&format!("{t:.6},{v:.6}\n"));
    }
    write_atomic(path, body.as_bytes())
}

fn write_signal_json(path: &Path, name: &str, signal: &Signal) -> Result<()> {
    #[derive(Serialize)]
    struct SignalFile<'a> {
        name: &'a str,
        t_ms: &'a [f64],
        v_mv: &'a [f64],
    }
    let body = serde_json::to_vec_pretty(&SignalFile {
        name,
        t_ms: &signal.t_ms,
        v_mv: &signal.v_mv,
    })
    .expect("signal serializes");
    write_atomic(path, &body)
}

// Readers of a crashed run see either the old file or the new one, never a
// truncated hybrid.
fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let unwritable = |detail: String| Error::Unwritable { path: path.to_path_buf(), detail };
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    let tmp = dir.join(format!(
        ".{}.tmp",
        path.file_name().map(|n| n.to_string_lossy()).unwrap_or_default()
    ));
    let mut f = fs::File::create(&tmp).map_err(|e| unwritable(e.to_string()))?;
    f.write_all(bytes).map_err(|e| unwritable(e.to_string()))?;
    f.sync_all().map_err(|e| unwritable(e.to_string()))?;
    drop(f);
    fs::rename(&tmp, path).map_err(|e| unwritable(e.to_string()))
}

/// Blob statistics of one stripe, as the glyph filter sees it (after the
/// fusing close, before any removal), in CSV form.
pub fn feature_stats(img: &RgbImage, cfg: &RunConfig, stripe_index: usize) -> Result<String> {
    cfg.validate()?;
    let index = gridmask::color_index(img);
    let rectified = gridmask::relu_rectify(&index);
    let grid = gridmask::grid_mask_with_scale(&rectified, cfg.otsu_scale)
        .map_err(|e| e.at_stage("grid_mask"))?;
    let px_per_mm = match cfg.px_per_mm {
        Some(p) => p,
        None => {
            gridmask::estimate_pitch(&grid)
                .map_err(|e| e.at_stage("estimate_pitch"))?
                .px_per_mm
        }
    };
    let gray = raster::to_grayscale(img);
    let cleared = raster::whiteout(&gray, &grid).map_err(|e| e.at_stage("whiteout"))?;
    let ink = binarize::binarize_trace(&cleared).map_err(|e| e.at_stage("binarize_trace"))?;
    let projection = segment::row_projection(&ink);
    let bounds = segment::find_stripes_with(&projection, px_per_mm, &cfg.segment)
        .map_err(|e| e.at_stage("find_stripes"))?;
    if stripe_index >= bounds.len() {
        return Err(Error::StripeIndexOutOfRange { index: stripe_index, count: bounds.len() });
    }
    let (row_start, row_end) = bounds[stripe_index];
    let stripe = ink.crop_rows(row_start, row_end);

    let radius = (cfg.char_filter.close_radius_mm * px_per_mm).round() as u32;
    let fused = close(&stripe, Disk::new(radius));
    let (_, blobs) = label(&fused);

    let mut out = String::from("label,area,width,height,aspect_ratio,centroid_row,centroid_col\n");
    for b in &blobs {
        out.push_str(&format!(
            "{},{},{},{},{:.6},{:.6},{:.6}\n",
            b.label, b.area, b.width, b.height, b.aspect_ratio, b.centroid.0, b.centroid.1
        ));
    }
    Ok(out)
}
