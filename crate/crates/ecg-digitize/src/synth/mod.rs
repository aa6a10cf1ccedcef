//! Synthetic sheet renderer: draws a page the way a chart recorder would
//! and reports exactly where everything landed, so a reconstruction can be
//! scored against a known answer. Also provides scan-defect distortions.

pub mod font;

use crate::error::{Error, Result};
use crate::raster::{BinaryImage, RgbImage};
use serde::{Deserialize, Serialize};

/// Chart speed baked into rendering: 25 mm/s, so one mm is 40 ms.
pub const RENDER_MS_PER_MM: f64 = 40.0;
/// Chart gain baked into rendering: one mm is 0.1 mV.
pub const RENDER_MV_PER_MM: f64 = 0.1;

/// Where a stripe's lead label is printed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GlyphPlacement {
    /// Just below the curve's first samples.
    #[default]
    BelowCurveStart,
    /// In the left margin, vertically centered on the stripe.
    LeftMargin,
}

/// One lead to plot: uniform samples in mV.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LeadSpec {
    pub name: String,
    pub samples_mv: Vec<f64>,
    pub ms_per_sample: f64,
}

/// Full description of a sheet to render. Every field except `leads` has a
/// conventional default, so a minimal spec is just the leads.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SheetSpec {
    #[serde(default = "default_px_per_mm")]
    pub px_per_mm: f64,
    #[serde(default = "default_paper_color")]
    pub paper_color: [u8; 3],
    #[serde(default = "default_grid_color")]
    pub grid_color: [u8; 3],
    #[serde(default = "default_heavy_grid_color")]
    pub heavy_grid_color: [u8; 3],
    #[serde(default = "default_heavy_every_mm")]
    pub heavy_every_mm: u32,
    #[serde(default = "default_ink_color")]
    pub ink_color: [u8; 3],
    #[serde(default = "default_stroke_width_px")]
    pub stroke_width_px: u32,
    #[serde(default = "default_stripe_height_mm")]
    pub stripe_height_mm: f64,
    #[serde(default = "default_label_glyphs")]
    pub label_glyphs: bool,
    #[serde(default)]
    pub glyph_placement: GlyphPlacement,
    #[serde(default = "default_glyph_offset_y_mm")]
    pub glyph_offset_y_mm: f64,
    #[serde(default = "default_glyph_height_mm")]
    pub glyph_height_mm: f64,
    #[serde(default = "default_margin_mm")]
    pub left_margin_mm: f64,
    #[serde(default = "default_margin_mm")]
    pub right_margin_mm: f64,
    pub leads: Vec<LeadSpec>,
}

fn default_px_per_mm() -> f64 {
    // 600 dpi.
    23.622
}
fn default_paper_color() -> [u8; 3] {
    [252, 250, 248]
}
fn default_grid_color() -> [u8; 3] {
    [244, 188, 188]
}
fn default_heavy_grid_color() -> [u8; 3] {
    [236, 130, 130]
}
fn default_heavy_every_mm() -> u32 {
    5
}
fn default_ink_color() -> [u8; 3] {
    [20, 20, 20]
}
fn default_stroke_width_px() -> u32 {
    3
}
fn default_stripe_height_mm() -> f64 {
    25.0
}
fn default_label_glyphs() -> bool {
    true
}
fn default_glyph_offset_y_mm() -> f64 {
    3.0
}
fn default_glyph_height_mm() -> f64 {
    2.4
}
fn default_margin_mm() -> f64 {
    5.0
}

impl SheetSpec {
    /// A spec with conventional defaults for everything but the leads.
    pub fn with_leads(leads: Vec<LeadSpec>) -> Self {
        Self {
            px_per_mm: default_px_per_mm(),
            paper_color: default_paper_color(),
            grid_color: default_grid_color(),
            heavy_grid_color: default_heavy_grid_color(),
            heavy_every_mm: default_heavy_every_mm(),
            ink_color: default_ink_color(),
            stroke_width_px: default_stroke_width_px(),
            stripe_height_mm: default_stripe_height_mm(),
            label_glyphs: default_label_glyphs(),
            glyph_placement: GlyphPlacement::default(),
            glyph_offset_y_mm: default_glyph_offset_y_mm(),
            glyph_height_mm: default_glyph_height_mm(),
            left_margin_mm: default_margin_mm(),
            right_margin_mm: default_margin_mm(),
            leads,
        }
    }

    /// Parses a spec from JSON, applying defaults for omitted fields.
    pub fn from_json_str(json: &str) -> Result<Self> {
        let spec: SheetSpec =
            serde_json::from_str(json).map_err(|e| Error::InvalidSpec(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.px_per_mm > 0.0 && self.px_per_mm.is_finite()) {
            return Err(Error::InvalidSpec(format!(
                "px_per_mm must be positive, got {}",
                self.px_per_mm
            )));
        }
        if self.stroke_width_px == 0 {
            return Err(Error::InvalidSpec("stroke_width_px must be at least 1".into()));
        }
        if !(self.stripe_height_mm > 0.0 && self.stripe_height_mm.is_finite()) {
            return Err(Error::InvalidSpec(format!(
                "stripe_height_mm must be positive, got {}",
                self.stripe_height_mm
            )));
        }
        if self.heavy_every_mm == 0 {
            return Err(Error::InvalidSpec("heavy_every_mm must be at least 1".into()));
        }
        if !(self.glyph_height_mm > 0.0 && self.glyph_height_mm.is_finite())
            || self.glyph_offset_y_mm < 0.0
        {
            return Err(Error::InvalidSpec(
                "glyph height must be positive and offset nonnegative".into(),
            ));
        }
        if self.left_margin_mm < 0.0 || self.right_margin_mm < 0.0 {
            return Err(Error::InvalidSpec("margins must be nonnegative".into()));
        }
        if self.leads.is_empty() {
            return Err(Error::InvalidSpec("at least one lead is required".into()));
        }
        for lead in &self.leads {
            if lead.samples_mv.len() < 2 {
                return Err(Error::InvalidSpec(format!(
                    "lead {:?} needs at least two samples",
                    lead.name
                )));
            }
            if !(lead.ms_per_sample > 0.0 && lead.ms_per_sample.is_finite()) {
                return Err(Error::InvalidSpec(format!(
                    "lead {:?} needs a positive sample interval",
                    lead.name
                )));
            }
            if lead.samples_mv.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidSpec(format!(
                    "lead {:?} has a non-finite sample",
                    lead.name
                )));
            }
            if self.label_glyphs {
                if let Some(c) = lead.name.chars().find(|&c| font::glyph_pattern(c).is_none()) {
                    return Err(Error::InvalidSpec(format!(
                        "no glyph for {c:?} in lead name {:?}",
                        lead.name
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Where one lead's stripe and true curve sit on the rendered page.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StripeTruth {
    pub name: String,
    pub lead_index: usize,
    pub row_start: usize,
    /// Inclusive.
    pub row_end: usize,
    /// Page column of `centerline_rows[0]`.
    pub col_start: usize,
    /// Exact (sub-pixel) stroke center row per page column.
    pub centerline_rows: Vec<f64>,
}

/// Everything known about a rendered page.
#[derive(Debug, Clone)]
pub struct GroundTruth {
    pub px_per_mm: f64,
    pub stripes: Vec<StripeTruth>,
    /// Pixels stamped by curve strokes.
    pub trace_mask: BinaryImage,
    /// Pixels covered by label glyph dots.
    pub glyph_mask: BinaryImage,
    /// Grid pixels not covered by any ink.
    pub grid_mask: BinaryImage,
}

/// Renders a sheet and its ground truth.
///
/// Layout: one stripe per lead, stacked top to bottom, each
/// `stripe_height_mm` tall; curves start after the left margin and share a
/// common time origin. The millimeter grid covers the whole page, heavier
/// every `heavy_every_mm` lines. A signal too tall for its stripe or a
/// stroke landing on a label glyph is an error, so accuracy tests never
/// silently score a corrupted page.
pub fn render_sheet(spec: &SheetSpec) -> Result<(RgbImage, GroundTruth)> {
    spec.validate()?;
    let ppm = spec.px_per_mm;
    let sh_px = (spec.stripe_height_mm * ppm).round().max(1.0) as usize;
    let n_leads = spec.leads.len();
    let height = sh_px * n_leads;

    let max_curve_mm = spec
        .leads
        .iter()
        .map(|l| (l.samples_mv.len() - 1) as f64 * l.ms_per_sample / RENDER_MS_PER_MM)
        .fold(0.0, f64::max);
    let width = ((spec.left_margin_mm + max_curve_mm + spec.right_margin_mm) * ppm)
        .round()
        .max(1.0) as usize;

    let mut page = RgbImage::filled(width, height, spec.paper_color);
    let mut grid_mask = BinaryImage::filled(width, height, false);
    let mut glyph_mask = BinaryImage::filled(width, height, false);
    let mut trace_mask = BinaryImage::filled(width, height, false);

    draw_grid(spec, &mut page, &mut grid_mask);

    let curve_start = (spec.left_margin_mm * ppm).round() as usize;
    if spec.label_glyphs {
        for (k, lead) in spec.leads.iter().enumerate() {
            let center = (k * sh_px) as f64 + sh_px as f64 / 2.0;
            draw_label(spec, lead, center, curve_start, &mut page, &mut glyph_mask);
        }
    }

    let radius = (spec.stroke_width_px / 2) as i64;
    let mut stripes = Vec::with_capacity(n_leads);
    for (k, lead) in spec.leads.iter().enumerate() {
        let row_start = k * sh_px;
        let row_end = row_start + sh_px - 1;
        let center = row_start as f64 + sh_px as f64 / 2.0;
        let scale = ppm / RENDER_MV_PER_MM;
        let ys: Vec<f64> = lead.samples_mv.iter().map(|v| center - v * scale).collect();

        for (v, y) in lead.samples_mv.iter().zip(ys.iter()) {
            let yr = y.round() as i64;
            if yr - radius < row_start as i64 || yr + radius > row_end as i64 {
                return Err(Error::SignalClipped {
                    lead: lead.name.clone(),
                    needed_mm: v.abs() / RENDER_MV_PER_MM + radius as f64 / ppm,
                    avail_mm: spec.stripe_height_mm / 2.0,
                });
            }
        }

        let px_per_sample = lead.ms_per_sample / RENDER_MS_PER_MM * ppm;
        stamp_polyline(
            curve_start as f64,
            px_per_sample,
            &ys,
            radius,
            spec.ink_color,
            &mut page,
            &mut trace_mask,
            &glyph_mask,
        )?;

        stripes.push(StripeTruth {
            name: lead.name.clone(),
            lead_index: k,
            row_start,
            row_end,
            col_start: curve_start,
            centerline_rows: centerline(curve_start, px_per_sample, &ys, width),
        });
    }

    // Ink wins over grid wherever they touch.
    for i in 0..grid_mask.data.len() {
        if trace_mask.data[i] || glyph_mask.data[i] {
            grid_mask.data[i] = false;
        }
    }

    let truth = GroundTruth {
        px_per_mm: ppm,
        stripes,
        trace_mask,
        glyph_mask,
        grid_mask,
    };
    Ok((page, truth))
}

fn draw_grid(spec: &SheetSpec, page: &mut RgbImage, grid_mask: &mut BinaryImage) {
    let (w, h) = (page.width, page.height);
    let ppm = spec.px_per_mm;
    let color = |k: usize| {
        if (k as u32).is_multiple_of(spec.heavy_every_mm) {
            spec.heavy_grid_color
        } else {
            spec.grid_color
        }
    };
    for k in 0.. {
        let col = (k as f64 * ppm).round() as usize;
        if col >= w {
            break;
        }
        for row in 0..h {
            page.set_pixel(row, col, color(k));
            grid_mask.set(row, col, true);
        }
    }
    for k in 0.. {
        let row = (k as f64 * ppm).round() as usize;
        if row >= h {
            break;
        }
        for col in 0..w {
            page.set_pixel(row, col, color(k));
            grid_mask.set(row, col, true);
        }
    }
}

fn draw_label(
    spec: &SheetSpec,
    lead: &LeadSpec,
    stripe_center: f64,
    curve_start: usize,
    page: &mut RgbImage,
    glyph_mask: &mut BinaryImage,
) {
    let ppm = spec.px_per_mm;
    let dot = ((spec.glyph_height_mm * ppm / font::GLYPH_ROWS as f64).round() as usize).max(1);
    let kerning = 2 * dot;
    let (x0, y0) = match spec.glyph_placement {
        GlyphPlacement::BelowCurveStart => (
            curve_start,
            (stripe_center + spec.glyph_offset_y_mm * ppm).round() as i64,
        ),
        GlyphPlacement::LeftMargin => (
            ppm.round() as usize,
            (stripe_center - (font::GLYPH_ROWS * dot) as f64 / 2.0).round() as i64,
        ),
    };
    let mut x = x0 as i64;
    for c in lead.name.chars() {
        let dots = match font::glyph_dots(c) {
            Some(d) => d,
            None => continue,
        };
        for (gr, gc) in dots {
            for dy in 0..dot {
                for dx in 0..dot {
                    let row = y0 + (gr * dot + dy) as i64;
                    let col = x + (gc * dot + dx) as i64;
                    if row >= 0 && col >= 0 && (row as usize) < page.height && (col as usize) < page.width
                    {
                        page.set_pixel(row as usize, col as usize, spec.ink_color);
                        glyph_mask.set(row as usize, col as usize, true);
                    }
                }
            }
        }
        x += (font::GLYPH_COLS * dot + kerning) as i64;
    }
}

#[allow(clippy::too_many_arguments)]
fn stamp_polyline(
    x_start: f64,
    px_per_sample: f64,
    ys: &[f64],
    radius: i64,
    ink: [u8; 3],
    page: &mut RgbImage,
    trace_mask: &mut BinaryImage,
    glyph_mask: &BinaryImage,
) -> Result<()> {
    for i in 0..ys.len() - 1 {
        let (x0, y0) = (x_start + i as f64 * px_per_sample, ys[i]);
        let (x1, y1) = (x_start + (i + 1) as f64 * px_per_sample, ys[i + 1]);
        let steps = (x1 - x0).abs().max((y1 - y0).abs()).ceil() as usize + 1;
        for s in 0..steps {
            let t = if steps == 1 { 0.0 } else { s as f64 / (steps - 1) as f64 };
            let x = (x0 + t * (x1 - x0)).round() as i64;
            let y = (y0 + t * (y1 - y0)).round() as i64;
            stamp_disk(x, y, radius, ink, page, trace_mask, glyph_mask)?;
        }
    }
    Ok(())
}

fn stamp_disk(
    x: i64,
    y: i64,
    radius: i64,
    ink: [u8; 3],
    page: &mut RgbImage,
    trace_mask: &mut BinaryImage,
    glyph_mask: &BinaryImage,
) -> Result<()> {
    for dy in -radius..=radius {
        for dx in -radius..=radius {
            if dx * dx + dy * dy > radius * radius {
                continue;
            }
            let (row, col) = (y + dy, x + dx);
            if row < 0 || col < 0 || row as usize >= page.height || col as usize >= page.width {
                continue;
            }
            let (row, col) = (row as usize, col as usize);
            if glyph_mask.get(row, col) {
                return Err(Error::GlyphOverlap { row, col });
            }
            page.set_pixel(row, col, ink);
            trace_mask.set(row, col, true);
        }
    }
    Ok(())
}

// Sub-pixel stroke center per page column, linear between samples.
fn centerline(curve_start: usize, px_per_sample: f64, ys: &[f64], page_width: usize) -> Vec<f64> {
    let n = ys.len();
    let last_x = curve_start as f64 + (n - 1) as f64 * px_per_sample;
    let last_col = (last_x.floor() as usize).min(page_width - 1);
    (curve_start..=last_col)
        .map(|c| {
            let u = (c - curve_start) as f64 / px_per_sample;
            let i = u.floor() as usize;
            if i >= n - 1 {
                ys[n - 1]
            } else {
                let frac = u - i as f64;
                ys[i] + frac * (ys[i + 1] - ys[i])
            }
        })
        .collect()
}

/// Gaussian blur with replicate borders; `sigma` in pixels, zero is identity.
pub fn blur(img: &RgbImage, sigma: f64) -> Result<RgbImage> {
    if sigma < 0.0 || sigma.is_nan() {
        return Err(Error::NegativeSigma(sigma));
    }
    if sigma == 0.0 {
        return Ok(img.clone());
    }
    let radius = (3.0 * sigma).ceil() as i64;
    let mut weights = Vec::with_capacity(2 * radius as usize + 1);
    for k in -radius..=radius {
        weights.push((-((k * k) as f64) / (2.0 * sigma * sigma)).exp());
    }
    let sum: f64 = weights.iter().sum();
    for w in &mut weights {
        *w /= sum;
    }

    let (w, h) = (img.width, img.height);
    let clamp = |v: i64, hi: usize| v.clamp(0, hi as i64 - 1) as usize;
    // Horizontal pass, then vertical, accumulating in f64.
    let mut mid = vec![0.0f64; w * h * 3];
    for row in 0..h {
        for col in 0..w {
            let mut acc = [0.0f64; 3];
            for (wi, k) in (-radius..=radius).enumerate() {
                let p = img.pixel(row, clamp(col as i64 + k, w));
                for ch in 0..3 {
                    acc[ch] += weights[wi] * p[ch] as f64;
                }
            }
            let base = (row * w + col) * 3;
            mid[base..base + 3].copy_from_slice(&acc);
        }
    }
    let mut out = RgbImage::filled(w, h, [0, 0, 0]);
    for row in 0..h {
        for col in 0..w {
            let mut acc = [0.0f64; 3];
            for (wi, k) in (-radius..=radius).enumerate() {
                let base = (clamp(row as i64 + k, h) * w + col) * 3;
                for ch in 0..3 {
                    acc[ch] += weights[wi] * mid[base + ch];
                }
            }
            let px = [
                acc[0].round().clamp(0.0, 255.0) as u8,
                acc[1].round().clamp(0.0, 255.0) as u8,
                acc[2].round().clamp(0.0, 255.0) as u8,
            ];
            out.set_pixel(row, col, px);
        }
    }
    Ok(out)
}

/// Pulls every channel toward the pixel's luma by `fraction` in [0, 1].
pub fn desaturate(img: &RgbImage, fraction: f64) -> Result<RgbImage> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(Error::BadDesaturation(fraction));
    }
    let mut out = img.clone();
    for i in (0..out.data.len()).step_by(3) {
        let l = crate::raster::luma(out.data[i], out.data[i + 1], out.data[i + 2]) as f64;
        for ch in 0..3 {
            let c = out.data[i + ch] as f64;
            out.data[i + ch] = (c + fraction * (l - c)).round().clamp(0.0, 255.0) as u8;
        }
    }
    Ok(out)
}

/// Rotates the content about the image center, bilinear, keeping dimensions;
/// areas swinging in from outside take `fill`.
pub fn rotate(img: &RgbImage, degrees: f64, fill: [u8; 3]) -> RgbImage {
    let theta = degrees.to_radians();
    let (sin, cos) = theta.sin_cos();
    let (w, h) = (img.width, img.height);
    let (cx, cy) = ((w as f64 - 1.0) / 2.0, (h as f64 - 1.0) / 2.0);
    let sample = |x: i64, y: i64| -> [f64; 3] {
        if x < 0 || y < 0 || x as usize >= w || y as usize >= h {
            [fill[0] as f64, fill[1] as f64, fill[2] as f64]
        } else {
            let p = img.pixel(y as usize, x as usize);
            [p[0] as f64, p[1] as f64, p[2] as f64]
        }
    };
    let mut out = RgbImage::filled(w, h, fill);
    for row in 0..h {
        for col in 0..w {
            let (dx, dy) = (col as f64 - cx, row as f64 - cy);
            let sx = cos * dx + sin * dy + cx;
            let sy = -sin * dx + cos * dy + cy;
            let (fx, fy) = (sx.floor(), sy.floor());
            let (tx, ty) = (sx - fx, sy - fy);
            let (x0, y0) = (fx as i64, fy as i64);
            let mut px = [0u8; 3];
            for (ch, out_ch) in px.iter_mut().enumerate() {
                let v00 = sample(x0, y0)[ch];
                let v10 = sample(x0 + 1, y0)[ch];
                let v01 = sample(x0, y0 + 1)[ch];
                let v11 = sample(x0 + 1, y0 + 1)[ch];
                let v = v00 * (1.0 - tx) * (1.0 - ty)
                    + v10 * tx * (1.0 - ty)
                    + v01 * (1.0 - tx) * ty
                    + v11 * tx * ty;
                *out_ch = v.round().clamp(0.0, 255.0) as u8;
            }
            out.set_pixel(row, col, px);
        }
    }
    out
}
