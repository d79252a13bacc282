//! Character datasets: IDX ingestion, label mapping, 16×16 rescaling,
//! class-balanced splits and image degradations.

pub mod augment;
pub mod glyphs;
pub mod idx;
mod resize;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::image::GrayImage;
use crate::{rng, Error, Result};

pub use idx::{load_idx, RawImage};
pub use resize::{resize_bilinear, to_16x16};

pub const NUM_PRIVATE: usize = 36;
pub const NUM_PUBLIC: usize = 2;
pub const NUM_DIGITS: usize = 10;
pub const SIDE: usize = 16;

/// 0 = number, 1 = letter.
pub fn public_label(private: usize) -> usize {
    usize::from(private >= NUM_DIGITS)
}

pub fn class_char(private: usize) -> char {
    match private {
        0..=9 => (b'0' + private as u8) as char,
        10..=35 => (b'A' + (private - 10) as u8) as char,
        _ => '?',
    }
}

fn private_from_char(c: char) -> Option<usize> {
    match c {
        '0'..='9' => Some(c as usize - '0' as usize),
        'A'..='Z' => Some(c as usize - 'A' as usize + 10),
        _ => None,
    }
}

/// Dataset label byte to character code, as in the EMNIST `*-mapping.txt`
/// files ("<label> <ascii>" per line).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelMap {
    ascii: BTreeMap<u8, u32>,
}

const BALANCED_LOWERCASE: [u8; 11] = *b"abdefghnqrt";

impl LabelMap {
    /// The 47-class balanced split: digits, uppercase, then 11 lowercase.
    pub fn emnist_balanced() -> Self {
        let chars = (b'0'..=b'9').chain(b'A'..=b'Z').chain(BALANCED_LOWERCASE);
        LabelMap { ascii: chars.enumerate().map(|(i, c)| (i as u8, u32::from(c))).collect() }
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut ascii = BTreeMap::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let bad = || Error::Config(format!("mapping line {}: {line:?}", n + 1));
            let mut parts = line.split_whitespace();
            let label: u8 = parts.next().and_then(|s| s.parse().ok()).ok_or_else(bad)?;
            let code: u32 = parts.next().and_then(|s| s.parse().ok()).ok_or_else(bad)?;
            if parts.next().is_some() || ascii.insert(label, code).is_some() {
                return Err(bad());
            }
        }
        Ok(LabelMap { ascii })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn to_text(&self) -> String {
        self.ascii.iter().map(|(l, c)| format!("{l} {c}\n")).collect()
    }

    pub fn char_for(&self, label: u8) -> Option<char> {
        self.ascii.get(&label).and_then(|&c| char::from_u32(c))
    }

    /// Private class of a raw label; `None` for classes outside 0-9/A-Z.
    pub fn private_label(&self, label: u8) -> Option<usize> {
        self.char_for(label).and_then(private_from_char)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledImage {
    pub image: GrayImage,
    pub private_label: usize,
    pub public_label: usize,
}

impl LabeledImage {
    pub fn new(image: GrayImage, private_label: usize) -> Result<Self> {
        if image.side() != SIDE {
            return Err(Error::Image(format!("expected {SIDE}x{SIDE}, got side {}", image.side())));
        }
        if private_label >= NUM_PRIVATE {
            return Err(Error::Config(format!("private label {private_label} out of range")));
        }
        Ok(LabeledImage { image, private_label, public_label: public_label(private_label) })
    }
}

/// Upright 28×28 glyph to a labeled 16×16 image. Intensities are quantized
/// to 8 bits so the result survives an IDX round trip unchanged.
pub fn labeled_from_raw(raw: &RawImage, private_label: usize) -> Result<LabeledImage> {
    let img = to_16x16(raw)?;
    LabeledImage::new(GrayImage::from_bytes(SIDE, &img.to_bytes())?, private_label)
}

/// Load an EMNIST-layout IDX pair: transpose to upright, keep 0-9/A-Z, rescale.
pub fn ingest_emnist(images: impl AsRef<Path>, labels: impl AsRef<Path>, map: &LabelMap) -> Result<Vec<LabeledImage>> {
    load_idx(images, labels)?
        .into_iter()
        .filter_map(|(raw, label)| map.private_label(label).map(|p| (raw, p)))
        .map(|(raw, p)| labeled_from_raw(&raw.transposed(), p))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSizes {
    pub train: usize,
    pub val: usize,
    pub test: usize,
}

impl Default for SplitSizes {
    fn default() -> Self {
        SplitSizes { train: 20_000, val: 2_000, test: 2_000 }
    }
}

/// Split membership as indices into the source pool.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitManifest {
    pub seed: u64,
    pub source_len: usize,
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetSplit {
    pub train: Vec<LabeledImage>,
    pub val: Vec<LabeledImage>,
    pub test: Vec<LabeledImage>,
    pub seed: u64,
}

/// Per-class share of `total`; the remainder goes to the classes starting
/// at `offset` so successive parts spread their extras.
fn quota(total: usize, class: usize, offset: usize) -> usize {
    let rank = (class + NUM_PRIVATE - offset % NUM_PRIVATE) % NUM_PRIVATE;
    total / NUM_PRIVATE + usize::from(rank < total % NUM_PRIVATE)
}

/// Class-balanced, disjoint split of `pool`. Within each part, class counts
/// differ by at most one.
pub fn balanced_split(pool: &[LabeledImage], sizes: SplitSizes, seed: u64) -> Result<(DatasetSplit, SplitManifest)> {
    let mut by_class = vec![Vec::new(); NUM_PRIVATE];
    for (i, item) in pool.iter().enumerate() {
        by_class[item.private_label].push(i);
    }
    let mut m = SplitManifest { seed, source_len: pool.len(), train: vec![], val: vec![], test: vec![] };
    for (class, idx) in by_class.iter_mut().enumerate() {
        let a = quota(sizes.train, class, 0);
        let b = quota(sizes.val, class, sizes.train);
        let c = quota(sizes.test, class, sizes.train + sizes.val);
        if idx.len() < a + b + c {
            return Err(Error::Config(format!(
                "class {} has {} samples, split needs {}",
                class_char(class),
                idx.len(),
                a + b + c
            )));
        }
        idx.shuffle(&mut rng::rng(rng::derive(seed, "split", class as u64)));
        m.train.extend(&idx[..a]);
        m.val.extend(&idx[a..a + b]);
        m.test.extend(&idx[a + b..a + b + c]);
    }
    let mut order = rng::rng(rng::derive(seed, "split-order", 0));
    for part in [&mut m.train, &mut m.val, &mut m.test] {
        part.shuffle(&mut order);
    }
    let take = |ix: &[usize]| ix.iter().map(|&i| pool[i].clone()).collect();
    let split = DatasetSplit { train: take(&m.train), val: take(&m.val), test: take(&m.test), seed };
    Ok((split, m))
}

fn part_paths(dir: &Path, part: &str) -> (PathBuf, PathBuf) {
    (dir.join(format!("{part}-images-idx3-ubyte")), dir.join(format!("{part}-labels-idx1-ubyte")))
}

/// Write each part as a 16×16 IDX pair with private labels, plus `split.json`.
pub fn save_split(dir: impl AsRef<Path>, split: &DatasetSplit, manifest: &SplitManifest) -> Result<()> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir)?;
    for (part, items) in [("train", &split.train), ("val", &split.val), ("test", &split.test)] {
        let (ip, lp) = part_paths(dir, part);
        let bytes: Vec<Vec<u8>> = items.iter().map(|it| it.image.to_bytes()).collect();
        std::fs::write(ip, idx::encode_images(SIDE, SIDE, &bytes)?)?;
        let labels: Vec<u8> = items.iter().map(|it| it.private_label as u8).collect();
        std::fs::write(lp, idx::encode_labels(&labels))?;
    }
    std::fs::write(dir.join("split.json"), serde_json::to_string_pretty(manifest)?)?;
    Ok(())
}

pub fn load_split(dir: impl AsRef<Path>) -> Result<(DatasetSplit, SplitManifest)> {
    let dir = dir.as_ref();
    let manifest: SplitManifest = serde_json::from_str(&std::fs::read_to_string(dir.join("split.json"))?)?;
    let part = |name: &str| -> Result<Vec<LabeledImage>> {
        let (ip, lp) = part_paths(dir, name);
        load_idx(ip, lp)?
            .into_iter()
            .map(|(raw, label)| {
                if raw.rows != SIDE || raw.cols != SIDE {
                    return Err(Error::Image(format!("{name}: {}x{} image in split", raw.rows, raw.cols)));
                }
                LabeledImage::new(GrayImage::new(SIDE, raw.pixels)?, usize::from(label))
            })
            .collect()
    };
    let split = DatasetSplit { train: part("train")?, val: part("val")?, test: part("test")?, seed: manifest.seed };
    Ok((split, manifest))
}

/// File names written by [`write_synthetic`].
#[derive(Debug, Clone)]
pub struct SyntheticFiles {
    pub images: PathBuf,
    pub labels: PathBuf,
    pub mapping: PathBuf,
}

/// Render `per_class` glyphs of each class and store them the way EMNIST
/// ships: transposed 28×28 IDX images, labels 0..35, and a mapping file.
pub fn write_synthetic(dir: impl AsRef<Path>, per_class: usize, seed: u64) -> Result<SyntheticFiles> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir)?;
    let mut items: Vec<(usize, u64)> =
        (0..NUM_PRIVATE).flat_map(|c| (0..per_class as u64).map(move |k| (c, k))).collect();
    items.shuffle(&mut rng::rng(rng::derive(seed, "synthetic-order", 0)));
    let side = glyphs::GLYPH_SIDE;
    let mut images = Vec::with_capacity(items.len());
    let mut labels = Vec::with_capacity(items.len());
    for &(class, k) in &items {
        let mut r = rng::rng(rng::derive(seed, "glyph", (class as u64) << 32 | k));
        let upright = glyphs::render(class, &mut r);
        let mut stored = vec![0u8; side * side];
        for y in 0..side {
            for x in 0..side {
                stored[x * side + y] = upright[y * side + x];
            }
        }
        images.push(stored);
        labels.push(class as u8);
    }
    let files = SyntheticFiles {
        images: dir.join("synthetic-images-idx3-ubyte"),
        labels: dir.join("synthetic-labels-idx1-ubyte"),
        mapping: dir.join("synthetic-mapping.txt"),
    };
    std::fs::write(&files.images, idx::encode_images(side, side, &images)?)?;
    std::fs::write(&files.labels, idx::encode_labels(&labels))?;
    let map: String = (0..NUM_PRIVATE).map(|c| format!("{c} {}\n", class_char(c) as u32)).collect();
    std::fs::write(&files.mapping, map)?;
    Ok(files)
}

/// Synthetic pool through the full file path: write, then ingest.
pub fn synthetic_pool(dir: impl AsRef<Path>, per_class: usize, seed: u64) -> Result<Vec<LabeledImage>> {
    let files = write_synthetic(dir, per_class, seed)?;
    ingest_emnist(&files.images, &files.labels, &LabelMap::load(&files.mapping)?)
}
