//! Grayscale glyph rasters and their PGM file form.
//!
//! Pixels are `f64` in `[0, 1]` with ink = 1. Files hold 8-bit samples with
//! maxval 255; a sample `v` maps to `v / 255` and a pixel `p` is written as
//! `round(255 p)` with halves rounded away from zero.

use std::io::Cursor;
use std::path::Path;

use image::codecs::pnm::{PnmEncoder, PnmSubtype, SampleEncoding};
use image::{ExtendedColorType, ImageEncoder, ImageFormat};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct GlyphImage {
    height: usize,
    width: usize,
    pixels: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PgmEncoding {
    /// `P2`
    Ascii,
    /// `P5`
    #[default]
    Binary,
}

impl GlyphImage {
    pub fn new(height: usize, width: usize, pixels: Vec<f64>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::InvalidParameter(
                "image dimensions must be positive".into(),
            ));
        }
        if pixels.len() != height * width {
            return Err(Error::LengthMismatch {
                expected: height * width,
                actual: pixels.len(),
            });
        }
        if let Some(p) = pixels.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(Error::InvalidParameter(format!("pixel {p} outside [0, 1]")));
        }
        Ok(Self {
            height,
            width,
            pixels,
        })
    }

    pub fn filled(height: usize, width: usize, value: f64) -> Result<Self> {
        Self::new(height, width, vec![value; height * width])
    }

    pub fn from_fn(height: usize, width: usize, f: impl Fn(usize, usize) -> f64) -> Result<Self> {
        let pixels = (0..height)
            .flat_map(|i| (0..width).map(move |j| (i, j)))
            .map(|(i, j)| f(i, j))
            .collect();
        Self::new(height, width, pixels)
    }

    pub(crate) fn from_raw(height: usize, width: usize, pixels: Vec<f64>) -> Self {
        debug_assert_eq!(pixels.len(), height * width);
        Self {
            height,
            width,
            pixels,
        }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.pixels[row * self.width + col]
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        self.pixels
            .iter()
            .map(|p| (255.0 * p).round().clamp(0.0, 255.0) as u8)
            .collect()
    }

    pub fn from_bytes(height: usize, width: usize, bytes: &[u8]) -> Result<Self> {
        Self::new(
            height,
            width,
            bytes.iter().map(|&b| f64::from(b) / 255.0).collect(),
        )
    }

    pub fn encode_pgm(&self, encoding: PgmEncoding) -> Result<Vec<u8>> {
        let sample = match encoding {
            PgmEncoding::Ascii => SampleEncoding::Ascii,
            PgmEncoding::Binary => SampleEncoding::Binary,
        };
        let mut out = Vec::new();
        PnmEncoder::new(&mut out)
            .with_subtype(PnmSubtype::Graymap(sample))
            .write_image(
                &self.to_bytes(),
                self.width as u32,
                self.height as u32,
                ExtendedColorType::L8,
            )?;
        Ok(out)
    }

    pub fn decode_pgm(bytes: &[u8]) -> Result<Self> {
        let img = image::load(Cursor::new(bytes), ImageFormat::Pnm)?.into_luma8();
        let (w, h) = img.dimensions();
        Self::from_bytes(h as usize, w as usize, img.as_raw())
    }

    pub fn read_pgm(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::decode_pgm(&bytes).map_err(|e| Error::in_file(path, e))
    }
}
