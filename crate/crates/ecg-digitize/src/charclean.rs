//! Removal of printed lead labels and annotation glyphs from a stripe so
//! only the plotted curve survives.

use crate::error::{Error, Result};
use crate::morphology::{close, label, Blob, Disk};
use crate::raster::BinaryImage;

/// Geometry limits separating text glyphs from the plotted curve.
#[derive(Debug, Clone, PartialEq)]
pub struct CharFilterConfig {
    /// Radius of the closing that fuses glyph dots before labeling, mm.
    pub close_radius_mm: f64,
    /// Glyphs are at most this tall, mm.
    pub max_height_mm: f64,
    /// Glyphs are at most this wide, mm.
    pub max_width_mm: f64,
    /// Accepted glyph width/height ratio, inclusive.
    pub aspect_min: f64,
    pub aspect_max: f64,
    /// A glyph's centroid sits at least this far from the curve's own row, mm.
    pub min_centroid_offset_mm: f64,
    /// A glyph-shaped blob is spared when other ink sits within this vertical
    /// distance in one of its columns, mm. Fragments of a broken curve chain
    /// toward their neighbors; printed text floats clear. Zero disables the
    /// check.
    pub continuity_prox_mm: f64,
}

impl Default for CharFilterConfig {
    fn default() -> Self {
        Self {
            close_radius_mm: 0.15,
            max_height_mm: 4.0,
            max_width_mm: 4.0,
            aspect_min: 0.2,
            aspect_max: 3.0,
            min_centroid_offset_mm: 2.0,
            continuity_prox_mm: 1.0,
        }
    }
}

impl CharFilterConfig {
    pub fn validate(&self) -> Result<()> {
        if self.close_radius_mm < 0.0 {
            return Err(Error::InvalidConfig(format!(
                "glyph close radius must be nonnegative, got {} mm",
                self.close_radius_mm
            )));
        }
        if self.max_height_mm <= 0.0 || self.max_width_mm <= 0.0 {
            return Err(Error::InvalidConfig(
                "glyph size limits must be positive".into(),
            ));
        }
        if !(self.aspect_min > 0.0 && self.aspect_min <= self.aspect_max) {
            return Err(Error::InvalidConfig(format!(
                "need 0 < aspect min <= aspect max, got {} and {}",
                self.aspect_min, self.aspect_max
            )));
        }
        if self.min_centroid_offset_mm < 0.0 {
            return Err(Error::InvalidConfig(format!(
                "centroid offset must be nonnegative, got {} mm",
                self.min_centroid_offset_mm
            )));
        }
        if !(self.continuity_prox_mm >= 0.0 && self.continuity_prox_mm.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "continuity distance must be nonnegative, got {} mm",
                self.continuity_prox_mm
            )));
        }
        Ok(())
    }
}

/// Deletes small text-shaped blobs that sit well off the curve's row.
///
/// A lightly closed working copy fuses each glyph's dots into one blob. The
/// largest blob is taken as the curve; any other blob small enough, with a
/// print-like aspect ratio, and vertically far from the curve's median row is
/// erased from the original pixels. A candidate is spared when other ink sits
/// vertically nearby in one of its own columns: a blurred or perforated curve
/// breaks into glyph-sized beads, but those beads chain toward the strokes
/// around them, while printed text keeps a clear moat. Returns the cleaned
/// original image.
pub fn remove_characters(
    img: &BinaryImage,
    px_per_mm: f64,
    cfg: &CharFilterConfig,
) -> Result<BinaryImage> {
    assert!(px_per_mm > 0.0, "pixel pitch must be positive");
    cfg.validate()?;
    let radius = (cfg.close_radius_mm * px_per_mm).round() as u32;
    let work = close(img, Disk::new(radius));
    let (labels, blobs) = label(&work);
    if blobs.is_empty() {
        return Err(Error::EmptyStripe);
    }

    // Blobs arrive largest first; the curve dwarfs any glyph.
    let curve = &blobs[0];
    let curve_row = median_row(&work, &labels.data, curve.label);

    let max_h = cfg.max_height_mm * px_per_mm;
    let max_w = cfg.max_width_mm * px_per_mm;
    let min_offset = cfg.min_centroid_offset_mm * px_per_mm;
    let prox = (cfg.continuity_prox_mm * px_per_mm).round() as usize;
    let doomed: Vec<u32> = blobs[1..]
        .iter()
        .filter(|b| is_character(b, curve_row, max_h, max_w, min_offset, cfg))
        .map(|b| b.label)
        .filter(|&l| !chains_vertically(img, &labels.data, l, prox))
        .collect();

    let mut out = img.clone();
    if !doomed.is_empty() {
        let doomed: std::collections::HashSet<u32> = doomed.into_iter().collect();
        for (i, &l) in labels.data.iter().enumerate() {
            if l != 0 && doomed.contains(&l) {
                out.data[i] = false;
            }
        }
    }
    Ok(out)
}

fn is_character(
    b: &Blob,
    curve_row: f64,
    max_h: f64,
    max_w: f64,
    min_offset: f64,
    cfg: &CharFilterConfig,
) -> bool {
    (b.height as f64) <= max_h
        && (b.width as f64) <= max_w
        && b.aspect_ratio >= cfg.aspect_min
        && b.aspect_ratio <= cfg.aspect_max
        && (b.centroid.0 - curve_row).abs() >= min_offset
}

// True when some ink pixel of the blob has ink from another blob within
// `prox` rows in its own column. Labels are taken from the closed working
// image; the scan looks at original ink only, so a closing halo never
// connects anything by itself.
fn chains_vertically(img: &BinaryImage, labels: &[u32], target: u32, prox: usize) -> bool {
    if prox == 0 {
        return false;
    }
    let w = img.width;
    for (i, &l) in labels.iter().enumerate() {
        if l != target || !img.data[i] {
            continue;
        }
        let (row, col) = (i / w, i % w);
        let lo = row.saturating_sub(prox);
        let hi = (row + prox).min(img.height - 1);
        for r in lo..=hi {
            let j = r * w + col;
            if img.data[j] && labels[j] != target {
                return true;
            }
        }
    }
    false
}

// Median row over one blob's pixels.
fn median_row(img: &BinaryImage, labels: &[u32], target: u32) -> f64 {
    let mut rows: Vec<f64> = Vec::new();
    for (i, &l) in labels.iter().enumerate() {
        if l == target {
            rows.push((i / img.width) as f64);
        }
    }
    crate::stats::median(&rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    const PX_PER_MM: f64 = 23.622;

    fn horizontal_curve(width: usize, height: usize, row: usize) -> BinaryImage {
        let mut img = BinaryImage::filled(width, height, false);
        for col in 0..width {
            for dr in 0..3 {
                img.set(row + dr, col, true);
            }
        }
        img
    }

    fn stamp_block(img: &mut BinaryImage, r0: usize, c0: usize, h: usize, w: usize) {
        for r in r0..r0 + h {
            for c in c0..c0 + w {
                img.set(r, c, true);
            }
        }
    }

    #[test]
    fn curve_alone_is_untouched() {
        let img = horizontal_curve(600, 200, 90);
        let out = remove_characters(&img, PX_PER_MM, &CharFilterConfig::default()).unwrap();
        assert_eq!(out, img);
    }

    #[test]
    fn far_glyph_block_is_erased() {
        let mut img = horizontal_curve(600, 300, 60);
        // A 1.7 mm square block about 4 mm below the curve.
        let side = (1.7 * PX_PER_MM) as usize;
        stamp_block(&mut img, 160, 100, side, side);
        let out = remove_characters(&img, PX_PER_MM, &CharFilterConfig::default()).unwrap();
        assert!(!out.get(160 + side / 2, 100 + side / 2));
        for col in 0..600 {
            assert!(out.get(61, col), "curve lost at column {col}");
        }
    }

    #[test]
    fn block_near_curve_height_is_kept() {
        let mut img = horizontal_curve(600, 300, 60);
        // Glyph-sized and glyph-shaped, but its centroid is only ~1.2 mm
        // below the curve row: could be a detached deflection, so the
        // offset rule protects it.
        stamp_block(&mut img, 75, 300, 30, 30);
        let out = remove_characters(&img, PX_PER_MM, &CharFilterConfig::default()).unwrap();
        assert!(out.get(80, 310));
    }

    #[test]
    fn oversized_block_is_kept() {
        let mut img = horizontal_curve(800, 400, 40);
        // Taller than any glyph: a second curve fragment, not text.
        let h = (6.0 * PX_PER_MM) as usize;
        stamp_block(&mut img, 200, 100, h, 12);
        let out = remove_characters(&img, PX_PER_MM, &CharFilterConfig::default()).unwrap();
        assert!(out.get(210, 103));
    }

    #[test]
    fn extreme_aspect_is_kept() {
        let mut img = horizontal_curve(800, 400, 40);
        // A long thin horizontal dash: aspect ratio far above the glyph band.
        stamp_block(&mut img, 300, 100, 5, 80);
        let out = remove_characters(&img, PX_PER_MM, &CharFilterConfig::default()).unwrap();
        assert!(out.get(302, 140));
    }

    #[test]
    fn blank_stripe_is_an_error() {
        let img = BinaryImage::filled(100, 100, false);
        assert!(matches!(
            remove_characters(&img, PX_PER_MM, &CharFilterConfig::default()),
            Err(Error::EmptyStripe)
        ));
    }

    #[test]
    fn output_is_a_subset_of_the_input() {
        let mut img = horizontal_curve(600, 300, 80);
        stamp_block(&mut img, 200, 50, 40, 40);
        stamp_block(&mut img, 10, 400, 20, 25);
        let out = remove_characters(&img, PX_PER_MM, &CharFilterConfig::default()).unwrap();
        for i in 0..img.data.len() {
            assert!(!out.data[i] || img.data[i]);
        }
    }

    #[test]
    fn cleaning_is_idempotent() {
        let mut img = horizontal_curve(600, 300, 60);
        stamp_block(&mut img, 180, 100, 40, 40);
        let once = remove_characters(&img, PX_PER_MM, &CharFilterConfig::default()).unwrap();
        let twice = remove_characters(&once, PX_PER_MM, &CharFilterConfig::default()).unwrap();
        assert_eq!(once, twice);
    }

    #[test]
    fn dotted_glyph_fuses_and_dies_as_one_blob() {
        let mut img = horizontal_curve(600, 300, 50);
        // Dot-matrix style glyph: isolated dots 2 px apart fused by the
        // closing, centered well below the curve.
        for r in (170..200).step_by(3) {
            for c in (100..125).step_by(3) {
                img.set(r, c, true);
            }
        }
        let out = remove_characters(&img, PX_PER_MM, &CharFilterConfig::default()).unwrap();
        for r in (170..200).step_by(3) {
            for c in (100..125).step_by(3) {
                assert!(!out.get(r, c), "dot survived at ({r},{c})");
            }
        }
    }

    #[test]
    fn detached_peak_fragment_chains_to_its_stroke_and_survives() {
        let mut img = horizontal_curve(600, 300, 150);
        // A tall excursion broken by grid whiteout: the apex cap is a
        // glyph-sized blob 4 mm off the curve row, but a stroke fragment
        // runs up toward it in the same columns, 9 px short of touching
        // either the cap or the curve.
        stamp_block(&mut img, 50, 294, 12, 15); // apex cap
        stamp_block(&mut img, 70, 299, 72, 3); // rising stroke, aspect-exempt
        // A genuine label block with a clear moat on all sides.
        stamp_block(&mut img, 220, 100, 40, 40);
        let out = remove_characters(&img, PX_PER_MM, &CharFilterConfig::default()).unwrap();
        assert!(out.get(55, 300), "apex cap was deleted");
        assert!(out.get(100, 300), "stroke fragment was deleted");
        assert!(!out.get(240, 120), "label block survived");
    }

    #[test]
    fn invalid_config_is_rejected() {
        let img = horizontal_curve(100, 100, 40);
        let cfg = CharFilterConfig { aspect_min: 0.0, ..CharFilterConfig::default() };
        assert!(matches!(
            remove_characters(&img, PX_PER_MM, &cfg),
            Err(Error::InvalidConfig(_))
        ));
    }
}
