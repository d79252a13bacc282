//! Grayscale images and binary PGM (P5) I/O.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Square image with row-major intensities in [0, 1]. The side length is
/// not required to be a power of two here; FRQI checks that itself.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrayImage {
    side: usize,
    pixels: Vec<f64>,
}

impl GrayImage {
    pub fn new(side: usize, pixels: Vec<f64>) -> Result<Self> {
        if side == 0 || pixels.len() != side * side {
            return Err(Error::Image(format!("{} pixels for side {side}", pixels.len())));
        }
        if let Some(p) = pixels.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(Error::Image(format!("intensity {p} outside [0, 1]")));
        }
        Ok(Self { side, pixels })
    }

    pub fn filled(side: usize, value: f64) -> Result<Self> {
        Self::new(side, vec![value; side * side])
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    pub fn into_pixels(self) -> Vec<f64> {
        self.pixels
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.pixels[y * self.side + x]
    }

    pub fn mean_abs_error(&self, other: &GrayImage) -> f64 {
        debug_assert_eq!(self.side, other.side);
        self.pixels.iter().zip(&other.pixels).map(|(a, b)| (a - b).abs()).sum::<f64>() / self.pixels.len() as f64
    }

    pub fn max_abs_error(&self, other: &GrayImage) -> f64 {
        self.pixels.iter().zip(&other.pixels).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }

    /// 8-bit quantization used by PGM and IDX dumps.
    pub fn to_bytes(&self) -> Vec<u8> {
        self.pixels.iter().map(|p| (p * 255.0).round() as u8).collect()
    }

    pub fn from_bytes(side: usize, bytes: &[u8]) -> Result<Self> {
        Self::new(side, bytes.iter().map(|&b| f64::from(b) / 255.0).collect())
    }

    pub fn write_pgm<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        write!(w, "P5\n{} {}\n255\n", self.side, self.side)?;
        w.write_all(&self.to_bytes())
    }

    pub fn save_pgm(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write_pgm(&mut f)?;
        f.flush()?;
        Ok(())
    }

    /// Reads an 8-bit square P5 image.
    pub fn read_pgm<R: Read>(mut r: R) -> Result<Self> {
        let mut buf = Vec::new();
        r.read_to_end(&mut buf)?;
        parse_pgm(&buf)
    }

    pub fn load_pgm(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        parse_pgm(&std::fs::read(path)?).map_err(|e| match e {
            Error::Image(reason) => Error::Format { path: path.to_owned(), reason },
            other => other,
        })
    }
}

fn parse_pgm(buf: &[u8]) -> Result<GrayImage> {
    let bad = |m: &str| Error::Image(format!("PGM: {m}"));
    let mut pos = 0;
    let mut fields = Vec::with_capacity(4);
    while fields.len() < 4 {
        // skip whitespace and comments
        while pos < buf.len() && (buf[pos].is_ascii_whitespace() || buf[pos] == b'#') {
            if buf[pos] == b'#' {
                while pos < buf.len() && buf[pos] != b'\n' {
                    pos += 1;
                }
            } else {
                pos += 1;
            }
        }
        let start = pos;
        while pos < buf.len() && !buf[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(bad("truncated header"));
        }
        fields.push(std::str::from_utf8(&buf[start..pos]).map_err(|_| bad("non-ascii header"))?);
    }
    if fields[0] != "P5" {
        return Err(bad(&format!("unsupported magic {:?}", fields[0])));
    }
    let parse = |s: &str| s.parse::<usize>().map_err(|_| bad(&format!("bad number {s:?}")));
    let (w, h, maxval) = (parse(fields[1])?, parse(fields[2])?, parse(fields[3])?);
    if w != h {
        return Err(bad(&format!("non-square {w}x{h}")));
    }
    if maxval == 0 || maxval > 255 {
        return Err(bad(&format!("unsupported maxval {maxval}")));
    }
    pos += 1; // single whitespace byte after maxval
    let data = buf.get(pos..pos + w * h).ok_or_else(|| bad("truncated raster"))?;
    GrayImage::new(w, data.iter().map(|&b| f64::from(b) / maxval as f64).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validates_shape_and_range() {
        assert!(GrayImage::new(2, vec![0.0; 3]).is_err());
        assert!(GrayImage::new(1, vec![1.5]).is_err());
        assert!(GrayImage::new(1, vec![f64::NAN]).is_err());
        assert!(GrayImage::new(2, vec![0.0, 0.25, 0.5, 1.0]).is_ok());
    }

    #[test]
    fn pgm_layout_and_read_back() {
        let img = GrayImage::new(2, vec![0.0, 1.0, 0.5, 0.2]).unwrap();
        let mut buf = Vec::new();
        img.write_pgm(&mut buf).unwrap();
        assert_eq!(&buf[..11], b"P5\n2 2\n255\n");
        assert_eq!(&buf[11..], &[0, 255, 128, 51]);
        let back = GrayImage::read_pgm(&buf[..]).unwrap();
        assert!(back.max_abs_error(&img) <= 0.5 / 255.0 + 1e-12);
    }

    #[test]
    fn pgm_header_comments_and_errors() {
        let ok = b"P5\n# made by hand\n1 1\n255\n\xff";
        assert_eq!(GrayImage::read_pgm(&ok[..]).unwrap().pixels(), &[1.0]);
        assert!(GrayImage::read_pgm(&b"P2\n1 1\n255\n0"[..]).is_err());
        assert!(GrayImage::read_pgm(&b"P5\n2 2\n255\n\x00"[..]).is_err());
    }
}
