//! Binary portable graymap (P5, maxval 255) masks.
//!
//! On disk, object pixels are 255 and background is 0; [`MaskRaster::to_bitmask`]
//! converts to logical bits.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::maskgeom::BitMask;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MaskRaster {
    pub width: u32,
    pub height: u32,
    /// Row-major, each byte 0 or 255.
    pub pixels: Vec<u8>,
}

impl MaskRaster {
    pub fn new(width: u32, height: u32, pixels: Vec<u8>) -> Result<Self> {
        let raster = Self { width, height, pixels };
        raster.validate()?;
        Ok(raster)
    }

    fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            return Err(Error::validation("mask raster dimensions must be positive"));
        }
        let expected = self.width as usize * self.height as usize;
        if self.pixels.len() != expected {
            return Err(Error::validation(format!(
                "mask raster has {} pixels, expected {expected}",
                self.pixels.len()
            )));
        }
        if let Some((i, v)) = self.pixels.iter().enumerate().find(|(_, &v)| v != 0 && v != 255) {
            return Err(Error::validation(format!("pixel {i} has value {v}; masks may only hold 0 or 255")));
        }
        Ok(())
    }

    pub fn from_bitmask(mask: &BitMask) -> Self {
        Self {
            width: mask.width(),
            height: mask.height(),
            pixels: mask.bits().iter().map(|&b| if b { 255 } else { 0 }).collect(),
        }
    }

    pub fn to_bitmask(&self) -> BitMask {
        BitMask::from_bits(self.width, self.height, self.pixels.iter().map(|&p| p == 255).collect())
            .expect("validated raster")
    }
}

struct Header<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Header<'_> {
    fn skip_space_and_comments(&mut self) {
        while let Some(&c) = self.bytes.get(self.pos) {
            if c == b'#' {
                while let Some(&c) = self.bytes.get(self.pos) {
                    self.pos += 1;
                    if c == b'\n' || c == b'\r' {
                        break;
                    }
                }
            } else if c.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn number(&mut self, what: &str) -> Result<u32> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self.bytes.get(self.pos).is_some_and(u8::is_ascii_digit) {
            self.pos += 1;
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::Format(format!("PGM header: bad {what}")))
    }
}

pub fn decode_pgm(bytes: &[u8]) -> Result<MaskRaster> {
    if bytes.len() < 2 || &bytes[..2] != b"P5" {
        let magic = String::from_utf8_lossy(&bytes[..bytes.len().min(2)]).into_owned();
        return Err(Error::Format(format!("expected binary PGM magic \"P5\", found {magic:?}")));
    }
    let mut hdr = Header { bytes, pos: 2 };
    let width = hdr.number("width")?;
    let height = hdr.number("height")?;
    let maxval = hdr.number("maxval")?;
    if maxval != 255 {
        return Err(Error::Format(format!("PGM maxval must be 255, found {maxval}")));
    }
    if !bytes.get(hdr.pos).is_some_and(u8::is_ascii_whitespace) {
        return Err(Error::Format("PGM header must end with a single whitespace byte".into()));
    }
    let data = &bytes[hdr.pos + 1..];
    let expected = (width as u64) * (height as u64);
    if data.len() as u64 != expected {
        return Err(Error::Format(format!("PGM body has {} bytes, expected {expected}", data.len())));
    }
    MaskRaster::new(width, height, data.to_vec())
}

pub fn encode_pgm(mask: &MaskRaster) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", mask.width, mask.height).into_bytes();
    out.extend_from_slice(&mask.pixels);
    out
}

pub fn read_mask_raster(path: impl AsRef<Path>) -> Result<MaskRaster> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_pgm(&bytes)
}

pub fn write_mask_raster(mask: &MaskRaster, path: impl AsRef<Path>) -> Result<()> {
    mask.validate()?;
    let path = path.as_ref();
    fs::write(path, encode_pgm(mask)).map_err(|e| Error::io(path, e))
}
