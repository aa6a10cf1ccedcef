//! Shared fixtures for the integration suites: a tiny deterministic RNG,
//! ECG-shaped waveform generators, sheet-spec builders, and signal metrics.

#![allow(dead_code)]

use ecg_digitize::calibrate::Signal;
use ecg_digitize::pipeline::DigitizedLead;
use ecg_digitize::synth::{GlyphPlacement, LeadSpec, SheetSpec, StripeTruth};

/// xorshift64* generator. Hand-rolled so the suites stay dependency-free and
/// every draw is reproducible from the literal seed in the test.
pub struct XorShift64 {
    state: u64,
}

impl XorShift64 {
    pub fn new(seed: u64) -> Self {
        Self {
            state: seed | 1, // the all-zero state is a fixed point
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        let mut x = self.state;
        x ^= x << 13;
        x ^= x >> 7;
        x ^= x << 17;
        self.state = x;
        x.wrapping_mul(0x2545_f491_4f6c_dd1d)
    }

    /// Uniform draw from `lo..=hi`. Modulo bias is irrelevant at test scale.
    pub fn range(&mut self, lo: u64, hi: u64) -> u64 {
        assert!(lo <= hi);
        lo + self.next_u64() % (hi - lo + 1)
    }

    pub fn f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    pub fn bool(&mut self, p_true: f64) -> bool {
        self.f64() < p_true
    }
}

/// Piecewise-linear QRS-like spike train with an 800 ms period: a small Q
/// dip, a 0.7 mV R peak, and an S dip. `phase_ms` shifts the whole train.
fn qrs_train(t_ms: f64, phase_ms: f64) -> f64 {
    let ph = (t_ms + phase_ms).rem_euclid(800.0);
    if (80.0..100.0).contains(&ph) {
        -0.05 * (1.0 - (ph - 90.0).abs() / 10.0)
    } else if (100.0..160.0).contains(&ph) {
        0.7 * (1.0 - (ph - 130.0).abs() / 30.0)
    } else if (160.0..185.0).contains(&ph) {
        -0.1 * (1.0 - (ph - 172.5).abs() / 12.5)
    } else {
        0.0
    }
}

/// R-peaks only, same period. Keeps the trace above the stripe midline so
/// below-curve label glyphs stay well clear of the ink.
fn r_train(t_ms: f64, phase_ms: f64) -> f64 {
    let ph = (t_ms + phase_ms).rem_euclid(800.0);
    if (100.0..160.0).contains(&ph) {
        0.7 * (1.0 - (ph - 130.0).abs() / 30.0)
    } else {
        0.0
    }
}

/// Sum of five sinusoids (1.1 to 39 Hz) plus the QRS train; peak magnitude
/// is about 1.05 mV. `seed` shifts the phases so each lead looks different.
pub fn ecg_like_signal(seed: u32, n: usize, dt_ms: f64) -> Vec<f64> {
    const FREQS_HZ: [f64; 5] = [1.1, 3.0, 8.0, 18.0, 39.0];
    const AMPS_MV: [f64; 5] = [0.12, 0.08, 0.06, 0.05, 0.04];
    let s = f64::from(seed);
    (0..n)
        .map(|i| {
            let t = i as f64 * dt_ms;
            let sines: f64 = FREQS_HZ
                .iter()
                .zip(AMPS_MV)
                .enumerate()
                .map(|(k, (&f, a))| {
                    a * (2.0 * std::f64::consts::PI * f * t / 1000.0 + (k + 1) as f64 * s).sin()
                })
                .sum();
            sines + qrs_train(t, 120.0 * s)
        })
        .collect()
}

/// Two gentle sinusoids plus R-peaks; stays within roughly -0.06 to +0.76 mV.
pub fn gentle_signal(seed: u32, n: usize, dt_ms: f64) -> Vec<f64> {
    let s = f64::from(seed);
    (0..n)
        .map(|i| {
            let t = i as f64 * dt_ms;
            let v = 0.04 * (2.0 * std::f64::consts::PI * t / 900.0 + s).sin()
                + 0.02 * (2.0 * std::f64::consts::PI * t / 333.0 + 2.0 * s).sin();
            v + r_train(t, 120.0 * s)
        })
        .collect()
}

pub fn lead(name: &str, samples_mv: Vec<f64>, ms_per_sample: f64) -> LeadSpec {
    LeadSpec {
        name: name.to_string(),
        samples_mv,
        ms_per_sample,
    }
}

pub const LIMB_LEADS: [&str; 6] = ["I", "II", "III", "aVR", "aVL", "aVF"];

/// Unlabeled sheet carrying `n_leads` full ECG-like waveforms; this is the
/// end-to-end fixture (nothing on the page but grid and curves).
pub fn glyphless_spec(n_leads: usize, px_per_mm: f64, n_samples: usize) -> SheetSpec {
    let leads = (0..n_leads)
        .map(|k| {
            let name = LIMB_LEADS.get(k).copied().unwrap_or("v");
            lead(name, ecg_like_signal(k as u32 + 1, n_samples, 2.0), 2.0)
        })
        .collect();
    let mut spec = SheetSpec::with_leads(leads);
    spec.px_per_mm = px_per_mm;
    spec.label_glyphs = false;
    spec
}

/// Labeled sheet with the lead names printed in the left margin, clear of
/// the curves. Used by the segmentation / ROI fixtures.
pub fn left_margin_spec(n_leads: usize) -> SheetSpec {
    let leads = (0..n_leads)
        .map(|k| {
            let name = LIMB_LEADS[k];
            lead(name, ecg_like_signal(k as u32 + 1, 1100, 2.0), 2.0)
        })
        .collect();
    let mut spec = SheetSpec::with_leads(leads);
    spec.glyph_placement = GlyphPlacement::LeftMargin;
    spec.left_margin_mm = 12.0;
    spec
}

/// Labeled sheet with the default glyph placement (below the curve start)
/// and gentle waveforms that leave the glyph band untouched.
pub fn below_start_spec(n_leads: usize) -> SheetSpec {
    let leads = (0..n_leads)
        .map(|k| {
            let name = LIMB_LEADS[k];
            lead(name, gentle_signal(k as u32 + 1, 1100, 2.0), 2.0)
        })
        .collect();
    SheetSpec::with_leads(leads)
}

pub fn rmse(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    assert!(!a.is_empty());
    let ss: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    (ss / a.len() as f64).sqrt()
}

pub fn pearson(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut va = 0.0;
    let mut vb = 0.0;
    for (x, y) in a.iter().zip(b) {
        cov += (x - ma) * (y - mb);
        va += (x - ma) * (x - ma);
        vb += (y - mb) * (y - mb);
    }
    cov / (va.sqrt() * vb.sqrt())
}

pub fn median(values: &[f64]) -> f64 {
    assert!(!values.is_empty());
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

pub struct LeadComparison {
    pub rmse_mv: f64,
    pub pearson: f64,
    pub n_overlap: usize,
    pub truth_len: usize,
}

/// Compares a digitized lead against the rendered centerline on the columns
/// both cover. The reference is the centerline converted with the pipeline's
/// own calibration and shifted by its median, mirroring the isoline removal,
/// so the comparison is sensitive to shape and scale but not to the arbitrary
/// vertical offset of the stripe.
pub fn compare_lead(
    lead: &DigitizedLead,
    truth: &StripeTruth,
    px_per_mm: f64,
    mv_per_mm: f64,
) -> LeadComparison {
    let got_start = lead.col_start;
    let got_end = got_start + lead.signal.len(); // exclusive
    let ref_start = truth.col_start;
    let ref_end = ref_start + truth.centerline_rows.len();
    let start = got_start.max(ref_start);
    let end = got_end.min(ref_end);
    assert!(start < end, "digitized lead does not overlap the truth");

    let reference_raw: Vec<f64> = (start..end)
        .map(|c| -truth.centerline_rows[c - ref_start] * mv_per_mm / px_per_mm)
        .collect();
    let offset = median(&reference_raw);
    let reference: Vec<f64> = reference_raw.iter().map(|v| v - offset).collect();
    let got: Vec<f64> = (start..end)
        .map(|c| lead.signal.v_mv[c - got_start])
        .collect();

    LeadComparison {
        rmse_mv: rmse(&got, &reference),
        pearson: pearson(&got, &reference),
        n_overlap: end - start,
        truth_len: truth.centerline_rows.len(),
    }
}

/// Largest per-sample deviation of a signal's time base from a uniform grid.
pub fn time_base_step(signal: &Signal) -> f64 {
    signal
        .t_ms
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(0.0f64, f64::max)
}
