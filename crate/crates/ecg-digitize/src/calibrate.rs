//! Conversion from pixel-space traces to physical units.

use crate::error::{Error, Result};
use crate::stats::median;
use crate::trace::ColumnTrace;

/// Physical meaning of one pixel, derived from the grid pitch and the
/// recorder's standard paper speeds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Calibration {
    pub px_per_mm: f64,
    pub mv_per_mm: f64,
    pub ms_per_mm: f64,
}

/// Standard recorder gain: one small 1 mm division is 0.1 mV.
pub const DEFAULT_MV_PER_MM: f64 = 0.1;
/// Standard recorder speed 25 mm/s: one small division is 40 ms.
pub const DEFAULT_MS_PER_MM: f64 = 40.0;

impl Calibration {
    /// Standard gain and speed at the given scan resolution.
    pub fn standard(px_per_mm: f64) -> Self {
        Self { px_per_mm, mv_per_mm: DEFAULT_MV_PER_MM, ms_per_mm: DEFAULT_MS_PER_MM }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("px per mm", self.px_per_mm),
            ("mV per mm", self.mv_per_mm),
            ("ms per mm", self.ms_per_mm),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidConfig(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

/// A digitized lead: sample times in ms and voltages in mV, same length.
#[derive(Debug, Clone, PartialEq)]
pub struct Signal {
    pub t_ms: Vec<f64>,
    pub v_mv: Vec<f64>,
}

impl Signal {
    pub fn len(&self) -> usize {
        self.t_ms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t_ms.is_empty()
    }
}

/// Converts a gap-free trace to physical units.
///
/// Time starts at zero on the trace's first column. Voltage is the negated
/// row scaled to mV, re-centered so the signal's median sits on the isoline;
/// paper position carries no absolute voltage reference, and the median is
/// robust to large transient deflections.
pub fn to_signal(trace: &ColumnTrace, cal: &Calibration) -> Result<Signal> {
    cal.validate()?;
    if trace.rows.is_empty() {
        return Err(Error::MissingValues);
    }
    let ms_per_px = cal.ms_per_mm / cal.px_per_mm;
    let mv_per_px = cal.mv_per_mm / cal.px_per_mm;
    let mut raw = Vec::with_capacity(trace.rows.len());
    for r in &trace.rows {
        match r {
            Some(row) => raw.push(-row * mv_per_px),
            None => return Err(Error::MissingValues),
        }
    }
    let isoline = median(&raw);
    let t_ms = (0..raw.len()).map(|i| i as f64 * ms_per_px).collect();
    let v_mv = raw.iter().map(|v| v - isoline).collect();
    Ok(Signal { t_ms, v_mv })
}
