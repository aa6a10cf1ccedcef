//! Raster value types and lossless image I/O shared by every pipeline stage.
//!
//! Four buffer types cover the whole pipeline: [`RgbImage`] for scans,
//! [`GrayImage`] for luma, [`BinaryImage`] for masks, and [`IndexImage`]
//! for real-valued per-pixel scores. All are row-major and indexed as
//! (row, col). Files are read and written as PNG or as binary PPM (P6);
//! both round-trip pixel-exactly.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

/// 8-bit RGB image, interleaved channels, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RgbImage {
    pub width: usize,
    pub height: usize,
    /// `width * height * 3` bytes, R G B per pixel.
    pub data: Vec<u8>,
}

impl RgbImage {
    pub fn new(width: usize, height: usize, data: Vec<u8>) -> Self {
        assert_eq!(data.len(), width * height * 3, "RGB buffer length");
        Self {
            width,
            height,
            data,
        }
    }

    pub fn filled(width: usize, height: usize, color: [u8; 3]) -> Self {
        let mut data = Vec::with_capacity(width * height * 3);
        for _ in 0..width * height {
            data.extend_from_slice(&color);
        }
        Self {
            width,
            height,
            data,
        }
    }

    #[inline]
    pub fn pixel(&self, row: usize, col: usize) -> [u8; 3] {
        let i = (row * self.width + col) * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    #[inline]
    pub fn set_pixel(&mut self, row: usize, col: usize, color: [u8; 3]) {
        let i = (row * self.width + col) * 3;
        self.data[i..i + 3].copy_from_slice(&color);
    }

    /// Writes the image to `path` as PNG or PPM, chosen by extension.
    pub fn save(&self, path: &Path) -> Result<()> {
        match extension(path)?.as_str() {
            "png" => save_png_rgb(self, path),
            "ppm" => write_bytes(path, &encode_ppm(self.width, self.height, &self.data)),
            ext => Err(Error::UnsupportedFormat {
                path: path.into(),
                detail: format!("cannot write .{ext} files"),
            }),
        }
    }
}

/// 8-bit grayscale image, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    pub width: usize,
    pub height: usize,
    pub data: Vec<u8>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, data: Vec<u8>) -> Self {
        assert_eq!(data.len(), width * height, "gray buffer length");
        Self {
            width,
            height,
            data,
        }
    }

    pub fn filled(width: usize, height: usize, value: u8) -> Self {
        Self {
            width,
            height,
            data: vec![value; width * height],
        }
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> u8 {
        self.data[row * self.width + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: u8) {
        self.data[row * self.width + col] = value;
    }

    /// Writes the image as grayscale PNG, or as PPM with replicated channels.
    pub fn save(&self, path: &Path) -> Result<()> {
        match extension(path)?.as_str() {
            "png" => save_png_gray(self, path),
            "ppm" => {
                let rgb: Vec<u8> = self.data.iter().flat_map(|&v| [v, v, v]).collect();
                write_bytes(path, &encode_ppm(self.width, self.height, &rgb))
            }
            ext => Err(Error::UnsupportedFormat {
                path: path.into(),
                detail: format!("cannot write .{ext} files"),
            }),
        }
    }
}

/// Boolean mask, row-major. `true` is the active/foreground state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryImage {
    pub width: usize,
    pub height: usize,
    pub data: Vec<bool>,
}

impl BinaryImage {
    pub fn new(width: usize, height: usize, data: Vec<bool>) -> Self {
        assert_eq!(data.len(), width * height, "binary buffer length");
        Self {
            width,
            height,
            data,
        }
    }

    pub fn filled(width: usize, height: usize, value: bool) -> Self {
        Self {
            width,
            height,
            data: vec![value; width * height],
        }
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> bool {
        self.data[row * self.width + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: bool) {
        self.data[row * self.width + col] = value;
    }

    pub fn count_true(&self) -> usize {
        self.data.iter().filter(|&&v| v).count()
    }

    /// Owned crop of rows `row_start..=row_end` (inclusive, in range).
    pub fn crop_rows(&self, row_start: usize, row_end: usize) -> BinaryImage {
        assert!(row_start <= row_end && row_end < self.height, "row range");
        let data = self.data[row_start * self.width..(row_end + 1) * self.width].to_vec();
        BinaryImage::new(self.width, row_end - row_start + 1, data)
    }

    /// Owned crop of columns `col_start..=col_end` (inclusive, in range).
    pub fn crop_cols(&self, col_start: usize, col_end: usize) -> BinaryImage {
        assert!(col_start <= col_end && col_end < self.width, "column range");
        let w = col_end - col_start + 1;
        let mut data = Vec::with_capacity(w * self.height);
        for row in 0..self.height {
            let base = row * self.width;
            data.extend_from_slice(&self.data[base + col_start..base + col_end + 1]);
        }
        BinaryImage::new(w, self.height, data)
    }

    /// Writes the mask with active pixels as 255 and inactive as 0.
    pub fn save(&self, path: &Path) -> Result<()> {
        let gray = GrayImage::new(
            self.width,
            self.height,
            self.data.iter().map(|&v| if v { 255 } else { 0 }).collect(),
        );
        gray.save(path)
    }
}

/// Real-valued image, row-major. Holds per-pixel scores such as the
/// red-dominance index.
#[derive(Debug, Clone, PartialEq)]
pub struct IndexImage {
    pub width: usize,
    pub height: usize,
    pub data: Vec<f64>,
}

impl IndexImage {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), width * height, "index buffer length");
        Self {
            width,
            height,
            data,
        }
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.width + col]
    }
}

/// Rec. 601 luma: `round(0.299 R + 0.587 G + 0.114 B)` per pixel.
pub fn to_grayscale(img: &RgbImage) -> GrayImage {
    let data = img
        .data
        .chunks_exact(3)
        .map(|px| luma(px[0], px[1], px[2]))
        .collect();
    GrayImage::new(img.width, img.height, data)
}

#[inline]
pub(crate) fn luma(r: u8, g: u8, b: u8) -> u8 {
    let y = 0.299 * f64::from(r) + 0.587 * f64::from(g) + 0.114 * f64::from(b);
    y.round().clamp(0.0, 255.0) as u8
}

/// Logical negation of every pixel.
pub fn complement(img: &BinaryImage) -> BinaryImage {
    BinaryImage::new(
        img.width,
        img.height,
        img.data.iter().map(|&v| !v).collect(),
    )
}

/// Forces every masked pixel to white (255). Dimensions must match.
pub fn whiteout(gray: &GrayImage, mask: &BinaryImage) -> Result<GrayImage> {
    if gray.width != mask.width || gray.height != mask.height {
        return Err(Error::DimensionMismatch(
            gray.width,
            gray.height,
            mask.width,
            mask.height,
        ));
    }
    let data = gray
        .data
        .iter()
        .zip(&mask.data)
        .map(|(&v, &m)| if m { 255 } else { v })
        .collect();
    Ok(GrayImage::new(gray.width, gray.height, data))
}

/// Reads a PNG or PPM (P6) file into an RGB image.
///
/// RGBA input is accepted with alpha dropped and grayscale input is
/// promoted by channel replication. Samples other than 8-bit are
/// rejected.
pub fn load_image(path: &Path) -> Result<RgbImage> {
    let bytes = fs::read(path).map_err(|source| Error::Unreadable {
        path: path.into(),
        source,
    })?;
    if bytes.starts_with(&[0x89, b'P', b'N', b'G']) {
        decode_png(&bytes, path)
    } else if bytes.starts_with(b"P6") {
        decode_ppm(&bytes, path)
    } else {
        Err(Error::UnsupportedFormat {
            path: path.into(),
            detail: "unrecognized magic bytes (expected PNG or P6 PPM)".into(),
        })
    }
}

fn decode_png(bytes: &[u8], path: &Path) -> Result<RgbImage> {
    let decoded = image::load_from_memory_with_format(bytes, image::ImageFormat::Png).map_err(
        |err| match err {
            image::ImageError::Unsupported(u) => Error::UnsupportedBitDepth {
                path: path.into(),
                detail: u.to_string(),
            },
            other => Error::CorruptStream {
                path: path.into(),
                detail: other.to_string(),
            },
        },
    )?;
    use image::DynamicImage as D;
    let rgb = match decoded {
        D::ImageRgb8(buf) => buf,
        img @ (D::ImageRgba8(_) | D::ImageLuma8(_) | D::ImageLumaA8(_)) => img.to_rgb8(),
        other => {
            return Err(Error::UnsupportedBitDepth {
                path: path.into(),
                detail: format!("{:?} samples are not supported", other.color()),
            })
        }
    };
    let (w, h) = (rgb.width() as usize, rgb.height() as usize);
    Ok(RgbImage::new(w, h, rgb.into_raw()))
}

fn save_png_rgb(img: &RgbImage, path: &Path) -> Result<()> {
    let buf: image::RgbImage =
        image::ImageBuffer::from_raw(img.width as u32, img.height as u32, img.data.clone())
            .expect("buffer length checked by constructor");
    buf.save_with_format(path, image::ImageFormat::Png)
        .map_err(|e| Error::Unwritable {
            path: path.into(),
            detail: e.to_string(),
        })
}

fn save_png_gray(img: &GrayImage, path: &Path) -> Result<()> {
    let buf: image::GrayImage =
        image::ImageBuffer::from_raw(img.width as u32, img.height as u32, img.data.clone())
            .expect("buffer length checked by constructor");
    buf.save_with_format(path, image::ImageFormat::Png)
        .map_err(|e| Error::Unwritable {
            path: path.into(),
            detail: e.to_string(),
        })
}

// P6 grammar: magic "P6", then width, height and maxval as ASCII decimals
// separated by whitespace or #-comments, one whitespace byte, then
// width*height RGB triplets.
fn decode_ppm(bytes: &[u8], path: &Path) -> Result<RgbImage> {
    let corrupt = |detail: &str| Error::CorruptStream {
        path: path.into(),
        detail: detail.into(),
    };
    let mut pos = 2usize;
    let width = read_ppm_number(bytes, &mut pos).ok_or_else(|| corrupt("bad width field"))?;
    let height = read_ppm_number(bytes, &mut pos).ok_or_else(|| corrupt("bad height field"))?;
    let maxval = read_ppm_number(bytes, &mut pos).ok_or_else(|| corrupt("bad maxval field"))?;
    if maxval != 255 {
        return Err(Error::UnsupportedBitDepth {
            path: path.into(),
            detail: format!("maxval {maxval} (only 255 is supported)"),
        });
    }
    if width == 0 || height == 0 || width > 1 << 20 || height > 1 << 20 {
        return Err(corrupt("implausible dimensions"));
    }
    // Exactly one whitespace byte separates the header from the payload.
    match bytes.get(pos) {
        Some(b) if b.is_ascii_whitespace() => pos += 1,
        _ => return Err(corrupt("missing separator after maxval")),
    }
    let need = width * height * 3;
    if bytes.len() - pos != need {
        return Err(corrupt(&format!(
            "payload holds {} bytes, header promises {need}",
            bytes.len() - pos
        )));
    }
    Ok(RgbImage::new(width, height, bytes[pos..].to_vec()))
}

fn read_ppm_number(bytes: &[u8], pos: &mut usize) -> Option<usize> {
    loop {
        match bytes.get(*pos)? {
            b if b.is_ascii_whitespace() => *pos += 1,
            b'#' => {
                while *bytes.get(*pos)? != b'\n' {
                    *pos += 1;
                }
            }
            _ => break,
        }
    }
    let start = *pos;
    while bytes.get(*pos).is_some_and(u8::is_ascii_digit) {
        *pos += 1;
    }
    if *pos == start {
        return None;
    }
    std::str::from_utf8(&bytes[start..*pos]).ok()?.parse().ok()
}

fn encode_ppm(width: usize, height: usize, rgb: &[u8]) -> Vec<u8> {
    let mut out = format!("P6\n{width} {height}\n255\n").into_bytes();
    out.extend_from_slice(rgb);
    out
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::Unwritable {
        path: path.into(),
        detail: e.to_string(),
    })
}

fn extension(path: &Path) -> Result<String> {
    path.extension()
        .and_then(|e| e.to_str())
        .map(|e| e.to_ascii_lowercase())
        .ok_or_else(|| Error::UnsupportedFormat {
            path: path.into(),
            detail: "missing file extension".into(),
        })
}
