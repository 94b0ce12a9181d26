//! Reader for the big-endian IDX files the MNIST digits ship in.
//!
//! Layout: a 4-byte magic (`0x00000803` for images, `0x00000801` for labels),
//! one big-endian `u32` per dimension, then raw `u8` data. Images must be
//! 28×28. Every parse error names the byte offset at which it was detected.

use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

pub const IMAGE_MAGIC: u32 = 0x0000_0803;
pub const LABEL_MAGIC: u32 = 0x0000_0801;
pub const ROWS: usize = 28;
pub const COLS: usize = 28;
pub const PIXELS: usize = ROWS * COLS;

pub const TRAIN_IMAGES: &str = "train-images-idx3-ubyte";
pub const TRAIN_LABELS: &str = "train-labels-idx1-ubyte";
pub const TEST_IMAGES: &str = "t10k-images-idx3-ubyte";
pub const TEST_LABELS: &str = "t10k-labels-idx1-ubyte";

/// Labelled images with raw pixel bytes; [`MnistDataset::image`] scales to `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct MnistDataset {
    pixels: Vec<u8>,
    labels: Vec<u8>,
}

impl MnistDataset {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn label(&self, i: usize) -> u8 {
        self.labels[i]
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn raw_image(&self, i: usize) -> &[u8] {
        &self.pixels[i * PIXELS..(i + 1) * PIXELS]
    }

    /// Writes image `i` scaled by 1/255 into `out`.
    pub fn image(&self, i: usize, out: &mut [f64; PIXELS]) {
        for (o, &p) in out.iter_mut().zip(self.raw_image(i)) {
            *o = p as f64 / 255.0;
        }
    }

    /// Keeps the first `n` items.
    pub fn truncate(&mut self, n: usize) {
        self.labels.truncate(n);
        self.pixels.truncate(n * PIXELS);
    }

    pub fn train(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        load_mnist(dir.join(TRAIN_IMAGES), dir.join(TRAIN_LABELS))
    }

    pub fn test(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        load_mnist(dir.join(TEST_IMAGES), dir.join(TEST_LABELS))
    }
}

fn idx_error(path: &Path, offset: usize, reason: impl Into<String>) -> Error {
    Error::Idx {
        path: PathBuf::from(path),
        offset: offset as u64,
        reason: reason.into(),
    }
}

fn read_u32(bytes: &[u8], offset: usize) -> u32 {
    u32::from_be_bytes(bytes[offset..offset + 4].try_into().expect("4 bytes"))
}

fn check_header(bytes: &[u8], path: &Path, magic: u32, dims: usize) -> Result<Vec<usize>> {
    let header = 4 + 4 * dims;
    if bytes.len() < header {
        return Err(idx_error(
            path,
            bytes.len(),
            format!("truncated header: need {header} bytes, file has {}", bytes.len()),
        ));
    }
    let found = read_u32(bytes, 0);
    if found != magic {
        return Err(idx_error(
            path,
            0,
            format!("wrong magic: expected 0x{magic:08x}, found 0x{found:08x}"),
        ));
    }
    Ok((0..dims).map(|d| read_u32(bytes, 4 + 4 * d) as usize).collect())
}

fn check_body(bytes: &[u8], path: &Path, header: usize, expected: usize) -> Result<()> {
    let have = bytes.len() - header;
    if have < expected {
        return Err(idx_error(
            path,
            bytes.len(),
            format!("truncated data: header promises {expected} bytes, found {have}"),
        ));
    }
    if have > expected {
        return Err(idx_error(
            path,
            header + expected,
            format!("{} trailing bytes after declared data", have - expected),
        ));
    }
    Ok(())
}

/// Parses an image file held in memory; returns the count and pixel bytes.
pub fn parse_idx_images(bytes: &[u8], path: &Path) -> Result<(usize, Vec<u8>)> {
    let dims = check_header(bytes, path, IMAGE_MAGIC, 3)?;
    let (n, rows, cols) = (dims[0], dims[1], dims[2]);
    if rows != ROWS || cols != COLS {
        return Err(idx_error(
            path,
            8,
            format!("unexpected image dimensions {rows}x{cols}, expected {ROWS}x{COLS}"),
        ));
    }
    check_body(bytes, path, 16, n * PIXELS)?;
    Ok((n, bytes[16..].to_vec()))
}

/// Parses a label file held in memory.
pub fn parse_idx_labels(bytes: &[u8], path: &Path) -> Result<Vec<u8>> {
    let n = check_header(bytes, path, LABEL_MAGIC, 1)?[0];
    check_body(bytes, path, 8, n)?;
    let labels = bytes[8..].to_vec();
    if let Some(i) = labels.iter().position(|&l| l > 9) {
        return Err(idx_error(
            path,
            8 + i,
            format!("label {} out of range 0..=9", labels[i]),
        ));
    }
    Ok(labels)
}

fn read(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| Error::io(path, e))
}

pub fn load_mnist(images_path: impl AsRef<Path>, labels_path: impl AsRef<Path>) -> Result<MnistDataset> {
    let (images_path, labels_path) = (images_path.as_ref(), labels_path.as_ref());
    let (n, pixels) = parse_idx_images(&read(images_path)?, images_path)?;
    let labels = parse_idx_labels(&read(labels_path)?, labels_path)?;
    if labels.len() != n {
        return Err(idx_error(
            labels_path,
            4,
            format!("count mismatch: {} labels for {n} images", labels.len()),
        ));
    }
    Ok(MnistDataset { pixels, labels })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn images(n: u32, rows: u32) -> Vec<u8> {
        let mut b = IMAGE_MAGIC.to_be_bytes().to_vec();
        for d in [n, rows, 28] {
            b.extend(d.to_be_bytes());
        }
        b.extend((0..n as usize * rows as usize * 28).map(|i| (i % 256) as u8));
        b
    }

    fn offset_of(e: Error) -> (u64, String) {
        match e {
            Error::Idx { offset, reason, .. } => (offset, reason),
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn parses_small_file() {
        let (n, px) = parse_idx_images(&images(2, 28), Path::new("x")).unwrap();
        assert_eq!(n, 2);
        assert_eq!(px.len(), 2 * PIXELS);
        assert_eq!(px[300], 44);
    }

    #[test]
    fn empty_file_is_truncated_header() {
        let (off, reason) = offset_of(parse_idx_images(&[], Path::new("x")).unwrap_err());
        assert_eq!(off, 0);
        assert!(reason.contains("truncated header"));
    }

    #[test]
    fn label_magic_in_image_slot() {
        let mut b = images(1, 28);
        b[3] = 0x01;
        let (off, reason) = offset_of(parse_idx_images(&b, Path::new("x")).unwrap_err());
        assert_eq!(off, 0);
        assert!(reason.contains("wrong magic"));
    }

    #[test]
    fn truncated_body_and_bad_dims() {
        let mut b = images(2, 28);
        b.truncate(b.len() - 1);
        let (off, reason) = offset_of(parse_idx_images(&b, Path::new("x")).unwrap_err());
        assert_eq!(off as usize, b.len());
        assert!(reason.contains("truncated data"));
        let (off, _) = offset_of(parse_idx_images(&images(1, 27), Path::new("x")).unwrap_err());
        assert_eq!(off, 8);
    }

    #[test]
    fn labels_out_of_range() {
        let mut b = LABEL_MAGIC.to_be_bytes().to_vec();
        b.extend(3u32.to_be_bytes());
        b.extend([1, 12, 3]);
        let (off, _) = offset_of(parse_idx_labels(&b, Path::new("y")).unwrap_err());
        assert_eq!(off, 9);
    }
}
