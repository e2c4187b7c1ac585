//! In-memory images and binary PGM/PPM (P5/P6, 8-bit) I/O.

use std::path::Path;

use crate::error::{OcxError, Result};

/// `height × width × channels` image, channel-last, row-major, values on
/// the 0–255 scale.
#[derive(Clone, Debug, PartialEq)]
pub struct Image {
    pub height: usize,
    pub width: usize,
    pub channels: usize,
    pub data: Vec<f64>,
}

impl Image {
    pub fn new(height: usize, width: usize, channels: usize, data: Vec<f64>) -> Result<Self> {
        if height * width * channels != data.len() || channels == 0 {
            return Err(OcxError::Shape(format!(
                "{height}x{width}x{channels} image cannot hold {} values",
                data.len()
            )));
        }
        Ok(Image {
            height,
            width,
            channels,
            data,
        })
    }

    pub fn filled(height: usize, width: usize, channels: usize, value: f64) -> Self {
        Image {
            height,
            width,
            channels,
            data: vec![value; height * width * channels],
        }
    }

    #[inline]
    pub fn index(&self, row: usize, col: usize, ch: usize) -> usize {
        (row * self.width + col) * self.channels + ch
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize, ch: usize) -> f64 {
        self.data[self.index(row, col, ch)]
    }

    /// Unweighted mean over channels.
    pub fn to_gray(&self) -> Image {
        if self.channels == 1 {
            return self.clone();
        }
        let data = self
            .data
            .chunks_exact(self.channels)
            .map(|px| px.iter().sum::<f64>() / self.channels as f64)
            .collect();
        Image {
            height: self.height,
            width: self.width,
            channels: 1,
            data,
        }
    }

    /// Rectangular crop.
    pub fn crop(&self, top: usize, left: usize, height: usize, width: usize) -> Result<Image> {
        if top + height > self.height || left + width > self.width {
            return Err(OcxError::Shape("crop window exceeds image".into()));
        }
        let mut data = Vec::with_capacity(height * width * self.channels);
        for r in top..top + height {
            let start = self.index(r, left, 0);
            data.extend_from_slice(&self.data[start..start + width * self.channels]);
        }
        Image::new(height, width, self.channels, data)
    }

    /// Decodes a binary PGM (P5) or PPM (P6) with maxval ≤ 255.
    pub fn decode_pnm(bytes: &[u8]) -> Result<Image> {
        let mut pos = 0usize;
        let mut next_token = || -> Result<String> {
            loop {
                while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                    pos += 1;
                }
                if pos < bytes.len() && bytes[pos] == b'#' {
                    while pos < bytes.len() && bytes[pos] != b'\n' {
                        pos += 1;
                    }
                    continue;
                }
                break;
            }
            let start = pos;
            while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if start == pos {
                return Err(OcxError::Parse("truncated PNM header".into()));
            }
            Ok(String::from_utf8_lossy(&bytes[start..pos]).into_owned())
        };
        let magic = next_token()?;
        let channels = match magic.as_str() {
            "P5" => 1,
            "P6" => 3,
            other => {
                return Err(OcxError::Parse(format!(
                    "unsupported image format {other:?}, expected P5 or P6"
                )))
            }
        };
        let mut num = |what: &str| -> Result<usize> {
            next_token()?
                .parse::<usize>()
                .map_err(|_| OcxError::Parse(format!("bad PNM {what}")))
        };
        let width = num("width")?;
        let height = num("height")?;
        let maxval = num("maxval")?;
        if maxval == 0 || maxval > 255 {
            return Err(OcxError::Parse(format!(
                "only 8-bit images are supported (maxval {maxval})"
            )));
        }
        // exactly one whitespace byte separates the header from the raster
        let raster = pos + 1;
        let len = width * height * channels;
        if bytes.len() < raster + len {
            return Err(OcxError::Parse("truncated PNM raster".into()));
        }
        let data = bytes[raster..raster + len]
            .iter()
            .map(|&b| b as f64)
            .collect();
        Image::new(height, width, channels, data)
    }

    /// Encodes as P5 (one channel) or P6 (three channels). Values are
    /// rounded and clamped to 0–255.
    pub fn encode_pnm(&self) -> Result<Vec<u8>> {
        let magic = match self.channels {
            1 => "P5",
            3 => "P6",
            c => {
                return Err(OcxError::Shape(format!(
                    "cannot write a {c}-channel image as PNM"
                )))
            }
        };
        let mut out = format!("{magic}\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend(self.data.iter().map(|v| v.round().clamp(0.0, 255.0) as u8));
        Ok(out)
    }

    pub fn read_pnm(path: impl AsRef<Path>) -> Result<Image> {
        Image::decode_pnm(&std::fs::read(path)?)
    }
}
