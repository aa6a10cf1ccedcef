//! `ecgd`: batch digitizer for paper electrocardiogram scans, with a
//! synthetic sheet renderer for end-to-end accuracy checks.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use ecg_digitize::pipeline::{self, OutputFormat, RunConfig};
use ecg_digitize::raster;
use ecg_digitize::synth::{self, SheetSpec, StripeTruth};

#[derive(Parser)]
#[command(
    name = "ecgd",
    version,
    about = "Digitizes paper electrocardiogram scans into calibrated signals"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Convert scan images into per-lead signal files plus a manifest.
    Digitize {
        /// Input images (PNG or binary PPM).
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        /// Output directory.
        #[arg(long, value_name = "DIR")]
        out: PathBuf,
        /// Vertical calibration: millivolts per grid millimeter.
        #[arg(long, default_value_t = 0.1)]
        mv_per_mm: f64,
        /// Horizontal calibration: milliseconds per grid millimeter.
        #[arg(long, default_value_t = 40.0)]
        ms_per_mm: f64,
        /// Scan resolution override; skips grid pitch estimation.
        #[arg(long)]
        px_per_mm: Option<f64>,
        /// Scale applied to the Otsu level when thresholding the grid mask.
        #[arg(long, default_value_t = 0.5)]
        otsu_scale: f64,
        /// Dump every stage's intermediate image next to the outputs.
        #[arg(long)]
        debug_images: bool,
        /// Signal file format.
        #[arg(long, value_enum, default_value_t = FormatArg::Csv)]
        format: FormatArg,
    },
    /// Render a synthetic sheet and its ground truth from a JSON spec.
    Synth {
        /// Sheet description (JSON).
        #[arg(long, value_name = "FILE")]
        spec: PathBuf,
        /// Gaussian blur sigma in pixels, applied after rotation.
        #[arg(long)]
        blur: Option<f64>,
        /// Desaturation fraction in [0, 1], applied last.
        #[arg(long)]
        desaturate: Option<f64>,
        /// Rotation in degrees about the page center, applied first.
        #[arg(long)]
        rotate: Option<f64>,
        /// Output directory.
        #[arg(long, value_name = "DIR")]
        out: PathBuf,
    },
    /// Print blob statistics for one stripe of a scan as CSV.
    FeatureStats {
        input: PathBuf,
        /// Stripe index from the top of the page, 0-based.
        #[arg(long)]
        stripe: usize,
        /// Scan resolution override; skips grid pitch estimation.
        #[arg(long)]
        px_per_mm: Option<f64>,
        /// Scale applied to the Otsu level when thresholding the grid mask.
        #[arg(long, default_value_t = 0.5)]
        otsu_scale: f64,
    },
}

#[derive(Copy, Clone, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

impl From<FormatArg> for OutputFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Csv => OutputFormat::Csv,
            FormatArg::Json => OutputFormat::Json,
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter("ECGD_LOG")).init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    match cli.command {
        Command::Digitize {
            inputs,
            out,
            mv_per_mm,
            ms_per_mm,
            px_per_mm,
            otsu_scale,
            debug_images,
            format,
        } => {
            let cfg = RunConfig {
                out_dir: out,
                mv_per_mm,
                ms_per_mm,
                px_per_mm,
                otsu_scale,
                debug_images,
                format: format.into(),
                ..RunConfig::default()
            };
            let summary = pipeline::run(&inputs, &cfg);
            for (path, e) in &summary.failures {
                eprintln!("error: {}: {e}", path.display());
            }
            Ok(if summary.all_ok() { ExitCode::SUCCESS } else { ExitCode::FAILURE })
        }
        Command::Synth { spec, blur, desaturate, rotate, out } => {
            synth_command(&spec, rotate, blur, desaturate, &out)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::FeatureStats { input, stripe, px_per_mm, otsu_scale } => {
            let cfg = RunConfig { px_per_mm, otsu_scale, ..RunConfig::default() };
            let img = raster::load_image(&input)?;
            let csv = pipeline::feature_stats(&img, &cfg, stripe)?;
            print!("{csv}");
            Ok(ExitCode::SUCCESS)
        }
    }
}

#[derive(Serialize)]
struct TruthFile<'a> {
    px_per_mm: f64,
    stripes: &'a [StripeTruth],
}

fn synth_command(
    spec_path: &Path,
    rotate: Option<f64>,
    blur: Option<f64>,
    desaturate: Option<f64>,
    out: &Path,
) -> anyhow::Result<()> {
    let body = fs::read_to_string(spec_path)
        .with_context(|| format!("cannot read spec {}", spec_path.display()))?;
    let spec = SheetSpec::from_json_str(&body)?;
    let (mut page, truth) = synth::render_sheet(&spec)?;
    if let Some(degrees) = rotate {
        page = synth::rotate(&page, degrees, spec.paper_color);
    }
    if let Some(sigma) = blur {
        page = synth::blur(&page, sigma)?;
    }
    if let Some(fraction) = desaturate {
        page = synth::desaturate(&page, fraction)?;
    }

    fs::create_dir_all(out)
        .with_context(|| format!("cannot create output directory {}", out.display()))?;
    let stem = spec_path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "sheet".into());

    let sheet_path = out.join(format!("{stem}_sheet.png"));
    page.save(&sheet_path)?;
    let truth_path = out.join(format!("{stem}_truth.json"));
    let json = serde_json::to_vec_pretty(&TruthFile {
        px_per_mm: truth.px_per_mm,
        stripes: &truth.stripes,
    })?;
    fs::write(&truth_path, &json)
        .with_context(|| format!("cannot write {}", truth_path.display()))?;

    println!("{}", sheet_path.display());
    println!("{}", truth_path.display());
    Ok(())
}
