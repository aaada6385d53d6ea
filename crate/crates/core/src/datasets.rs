//! MNIST-family IDX files and CIFAR-10 binary batches.
//!
//! Gzip-compressed files are detected by their magic bytes and inflated
//! transparently.

use std::io::Read;
use std::path::{Path, PathBuf};

use flate2::read::GzDecoder;

use crate::error::{Error, Result};
use crate::numerics::{Real, RngStream};
use crate::pyramid::{binarize, BinarizeMode, Image};

pub const IDX_IMAGES_MAGIC: u32 = 0x0000_0803;
pub const IDX_LABELS_MAGIC: u32 = 0x0000_0801;
pub const CIFAR_RECORD_BYTES: usize = 3073;
pub const NUM_CLASSES: usize = 10;

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset<T> {
    pub name: String,
    pub images: Vec<Image<T>>,
    pub labels: Option<Vec<u8>>,
    pub side: usize,
}

impl<T: Real> Dataset<T> {
    pub fn new(name: impl Into<String>, images: Vec<Image<T>>, labels: Option<Vec<u8>>) -> Result<Self> {
        let side = images.first().map(Image::side).unwrap_or(0);
        if images.iter().any(|i| i.side() != side) {
            return Err(Error::Consistency("images do not share one side".into()));
        }
        if let Some(l) = &labels {
            if l.len() != images.len() {
                return Err(Error::Consistency(format!(
                    "{} labels for {} images",
                    l.len(),
                    images.len()
                )));
            }
            if let Some(bad) = l.iter().find(|&&c| c as usize >= NUM_CLASSES) {
                return Err(Error::Consistency(format!("class id {bad} outside 0..=9")));
            }
        }
        Ok(Self {
            name: name.into(),
            images,
            labels,
            side,
        })
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    pub fn labels(&self) -> Result<&[u8]> {
        self.labels
            .as_deref()
            .ok_or_else(|| Error::precondition(format!("dataset {} has no labels", self.name)))
    }

    /// Items at `indices`, in that order.
    pub fn select(&self, indices: &[usize]) -> Self {
        Self {
            name: self.name.clone(),
            images: indices.iter().map(|&i| self.images[i].clone()).collect(),
            labels: self
                .labels
                .as_ref()
                .map(|l| indices.iter().map(|&i| l[i]).collect()),
            side: self.side,
        }
    }

    /// The first `n` items (or all, if fewer).
    pub fn head(&self, n: usize) -> Self {
        let idx: Vec<usize> = (0..n.min(self.len())).collect();
        self.select(&idx)
    }

    /// `n` items drawn without replacement by a seeded shuffle.
    pub fn shuffled_head(&self, n: usize, seed: u64) -> Self {
        let mut idx: Vec<usize> = (0..self.len()).collect();
        RngStream::new(seed, 0).shuffle(&mut idx);
        idx.truncate(n.min(self.len()));
        self.select(&idx)
    }

    pub fn pixel_vectors(&self) -> Vec<Vec<T>> {
        self.images.iter().map(|i| i.pixels().to_vec()).collect()
    }

    pub fn binarized(&self, mode: BinarizeMode, threshold: f64, rng: &mut RngStream) -> Result<Vec<Vec<u8>>> {
        self.images
            .iter()
            .map(|i| binarize(i, mode, threshold, rng))
            .collect()
    }
}

fn read_file(path: &Path) -> Result<Vec<u8>> {
    let raw = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    if raw.starts_with(&[0x1f, 0x8b]) {
        let mut out = Vec::new();
        GzDecoder::new(raw.as_slice())
            .read_to_end(&mut out)
            .map_err(|e| Error::format(path, format!("gzip: {e}")))?;
        Ok(out)
    } else {
        Ok(raw)
    }
}

fn be_u32(bytes: &[u8], at: usize) -> u32 {
    u32::from_be_bytes(bytes[at..at + 4].try_into().unwrap())
}

fn pixel<T: Real>(b: u8) -> T {
    T::of(b as f64 / 255.0)
}

pub fn parse_idx_images<T: Real>(bytes: &[u8], path: &Path) -> Result<Vec<Image<T>>> {
    if bytes.len() < 16 {
        return Err(Error::format(path, "truncated IDX image header"));
    }
    let magic = be_u32(bytes, 0);
    if magic != IDX_IMAGES_MAGIC {
        return Err(Error::format(
            path,
            format!("bad IDX image magic {magic:#010x}, expected {IDX_IMAGES_MAGIC:#010x}"),
        ));
    }
    let (n, rows, cols) = (
        be_u32(bytes, 4) as usize,
        be_u32(bytes, 8) as usize,
        be_u32(bytes, 12) as usize,
    );
    if rows != cols || rows == 0 {
        return Err(Error::format(path, format!("images must be square, got {rows}x{cols}")));
    }
    let need = 16 + n * rows * cols;
    if bytes.len() < need {
        return Err(Error::format(
            path,
            format!("truncated: {} bytes for {n} images, need {need}", bytes.len()),
        ));
    }
    bytes[16..need]
        .chunks_exact(rows * cols)
        .map(|c| Image::new(rows, c.iter().map(|&b| pixel(b)).collect()))
        .collect()
}

pub fn parse_idx_labels(bytes: &[u8], path: &Path) -> Result<Vec<u8>> {
    if bytes.len() < 8 {
        return Err(Error::format(path, "truncated IDX label header"));
    }
    let magic = be_u32(bytes, 0);
    if magic != IDX_LABELS_MAGIC {
        return Err(Error::format(
            path,
            format!("bad IDX label magic {magic:#010x}, expected {IDX_LABELS_MAGIC:#010x}"),
        ));
    }
    let n = be_u32(bytes, 4) as usize;
    if bytes.len() < 8 + n {
        return Err(Error::format(path, format!("truncated: need {n} labels")));
    }
    Ok(bytes[8..8 + n].to_vec())
}

pub fn load_idx<T: Real>(images_path: &Path, labels_path: Option<&Path>) -> Result<Dataset<T>> {
    let images = parse_idx_images(&read_file(images_path)?, images_path)?;
    let labels = match labels_path {
        Some(p) => {
            let l = parse_idx_labels(&read_file(p)?, p)?;
            if l.len() != images.len() {
                return Err(Error::Consistency(format!(
                    "{} has {} labels but {} has {} images",
                    p.display(),
                    l.len(),
                    images_path.display(),
                    images.len()
                )));
            }
            Some(l)
        }
        None => None,
    };
    let name = images_path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    Dataset::new(name, images, labels)
}

/// ITU-R BT.601 luma, rounded half up: `round(0.299 r + 0.587 g + 0.114 b)`.
pub fn rgb_to_gray(r: u8, g: u8, b: u8) -> u8 {
    ((299 * r as u32 + 587 * g as u32 + 114 * b as u32 + 500) / 1000) as u8
}

/// Concatenates CIFAR-10 batches into one grayscale 32×32 dataset.
pub fn load_cifar10<T: Real>(batch_paths: &[PathBuf]) -> Result<Dataset<T>> {
    let mut images = Vec::new();
    let mut labels = Vec::new();
    for path in batch_paths {
        let bytes = read_file(path)?;
        if bytes.is_empty() || bytes.len() % CIFAR_RECORD_BYTES != 0 {
            return Err(Error::format(
                path,
                format!("size {} is not a multiple of {CIFAR_RECORD_BYTES}", bytes.len()),
            ));
        }
        for rec in bytes.chunks_exact(CIFAR_RECORD_BYTES) {
            labels.push(rec[0]);
            let (r, rest) = rec[1..].split_at(1024);
            let (g, b) = rest.split_at(1024);
            let px = (0..1024).map(|i| pixel(rgb_to_gray(r[i], g[i], b[i]))).collect();
            images.push(Image::new(32, px)?);
        }
    }
    Dataset::new("cifar10", images, Some(labels))
}

/// Ten datasets, one per class id, preserving order within each class.
pub fn split_by_class<T: Real>(ds: &Dataset<T>) -> Result<Vec<Dataset<T>>> {
    let labels = ds.labels()?;
    Ok((0..NUM_CLASSES as u8)
        .map(|c| {
            let idx: Vec<usize> = (0..ds.len()).filter(|&i| labels[i] == c).collect();
            let mut part = ds.select(&idx);
            part.name = format!("{}[{c}]", ds.name);
            part
        })
        .collect())
}
