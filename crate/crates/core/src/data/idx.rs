//! IDX container format (big-endian; magic 0x00000803 for u8 image
//! tensors, 0x00000801 for u8 label vectors).

use std::path::Path;

use crate::{Error, Result};

pub const IMAGES_MAGIC: u32 = 0x0000_0803;
pub const LABELS_MAGIC: u32 = 0x0000_0801;

/// One image as stored, intensities mapped to [0, 1] by v/255.
#[derive(Debug, Clone, PartialEq)]
pub struct RawImage {
    pub rows: usize,
    pub cols: usize,
    pub pixels: Vec<f64>,
}

impl RawImage {
    pub fn transposed(&self) -> RawImage {
        let mut pixels = vec![0.0; self.pixels.len()];
        for r in 0..self.rows {
            for c in 0..self.cols {
                pixels[c * self.rows + r] = self.pixels[r * self.cols + c];
            }
        }
        RawImage { rows: self.cols, cols: self.rows, pixels }
    }
}

fn be_u32(buf: &[u8], offset: usize) -> Result<u32> {
    let bytes = buf.get(offset..offset + 4).ok_or(Error::IdxTruncated { needed: offset + 4, have: buf.len() })?;
    Ok(u32::from_be_bytes(bytes.try_into().unwrap()))
}

fn check_magic(buf: &[u8], expected: u32) -> Result<()> {
    let found = be_u32(buf, 0)?;
    if found != expected {
        return Err(Error::IdxMagic { offset: 0, found, expected });
    }
    Ok(())
}

pub fn parse_images(buf: &[u8]) -> Result<Vec<RawImage>> {
    check_magic(buf, IMAGES_MAGIC)?;
    let count = be_u32(buf, 4)? as usize;
    let rows = be_u32(buf, 8)? as usize;
    let cols = be_u32(buf, 12)? as usize;
    let needed = 16 + count * rows * cols;
    if buf.len() < needed {
        return Err(Error::IdxTruncated { needed, have: buf.len() });
    }
    Ok(buf[16..needed]
        .chunks_exact((rows * cols).max(1))
        .take(count)
        .map(|px| RawImage { rows, cols, pixels: px.iter().map(|&v| f64::from(v) / 255.0).collect() })
        .collect())
}

pub fn parse_labels(buf: &[u8]) -> Result<Vec<u8>> {
    check_magic(buf, LABELS_MAGIC)?;
    let count = be_u32(buf, 4)? as usize;
    let needed = 8 + count;
    if buf.len() < needed {
        return Err(Error::IdxTruncated { needed, have: buf.len() });
    }
    Ok(buf[8..needed].to_vec())
}

/// Read an image file and its label file, as stored (no transpose).
pub fn load_idx(images_path: impl AsRef<Path>, labels_path: impl AsRef<Path>) -> Result<Vec<(RawImage, u8)>> {
    let images = parse_images(&std::fs::read(images_path)?)?;
    let labels = parse_labels(&std::fs::read(labels_path)?)?;
    if images.len() != labels.len() {
        return Err(Error::IdxCountMismatch { images: images.len(), labels: labels.len() });
    }
    Ok(images.into_iter().zip(labels).collect())
}

pub fn encode_images(rows: usize, cols: usize, images: &[Vec<u8>]) -> Result<Vec<u8>> {
    let mut out = Vec::with_capacity(16 + images.len() * rows * cols);
    out.extend(IMAGES_MAGIC.to_be_bytes());
    out.extend((images.len() as u32).to_be_bytes());
    out.extend((rows as u32).to_be_bytes());
    out.extend((cols as u32).to_be_bytes());
    for img in images {
        if img.len() != rows * cols {
            return Err(Error::Shape(format!("{} bytes for a {rows}x{cols} image", img.len())));
        }
        out.extend_from_slice(img);
    }
    Ok(out)
}

pub fn encode_labels(labels: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 + labels.len());
    out.extend(LABELS_MAGIC.to_be_bytes());
    out.extend((labels.len() as u32).to_be_bytes());
    out.extend_from_slice(labels);
    out
}
