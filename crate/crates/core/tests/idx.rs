use std::path::{Path, PathBuf};

use synsample::mnist::{
    MnistDataset, IMAGE_MAGIC, LABEL_MAGIC, PIXELS, TEST_IMAGES, TEST_LABELS, TRAIN_IMAGES, TRAIN_LABELS,
};
use synsample::Error;

fn image_file(n: u32) -> Vec<u8> {
    let mut b = IMAGE_MAGIC.to_be_bytes().to_vec();
    for d in [n, 28, 28] {
        b.extend(d.to_be_bytes());
    }
    b.extend((0..n as usize * PIXELS).map(|i| (i * 31 % 256) as u8));
    b
}

fn label_file(n: u32) -> Vec<u8> {
    let mut b = LABEL_MAGIC.to_be_bytes().to_vec();
    b.extend(n.to_be_bytes());
    b.extend((0..n).map(|i| (i % 10) as u8));
    b
}

fn fixture(train: (Vec<u8>, Vec<u8>), test: (Vec<u8>, Vec<u8>)) -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    for (name, bytes) in [
        (TRAIN_IMAGES, train.0),
        (TRAIN_LABELS, train.1),
        (TEST_IMAGES, test.0),
        (TEST_LABELS, test.1),
    ] {
        std::fs::write(dir.path().join(name), bytes).unwrap();
    }
    dir
}

fn idx_error(e: Error) -> (PathBuf, u64, String) {
    match e {
        Error::Idx { path, offset, reason } => (path, offset, reason),
        other => panic!("expected an IDX error, got {other}"),
    }
}

#[test]
fn well_formed_directory_loads_both_splits() {
    let dir = fixture((image_file(6), label_file(6)), (image_file(4), label_file(4)));
    let train = MnistDataset::train(dir.path()).unwrap();
    let test = MnistDataset::test(dir.path()).unwrap();
    assert_eq!((train.len(), test.len()), (6, 4));
    assert_eq!(train.labels(), &[0, 1, 2, 3, 4, 5]);
    assert_eq!(train.raw_image(1)[0], (PIXELS * 31 % 256) as u8);
}

#[test]
fn corrupted_magic_names_file_and_offset() {
    let mut bad = image_file(3);
    bad[3] = 0x01;
    let dir = fixture((bad, label_file(3)), (image_file(1), label_file(1)));
    let (path, offset, reason) = idx_error(MnistDataset::train(dir.path()).unwrap_err());
    assert_eq!(path, dir.path().join(TRAIN_IMAGES));
    assert_eq!(offset, 0);
    assert!(reason.contains("magic"), "{reason}");
}

#[test]
fn inflated_count_is_truncated_data() {
    let mut bad = label_file(5);
    bad[4..8].copy_from_slice(&50u32.to_be_bytes());
    let dir = fixture((image_file(5), bad), (image_file(1), label_file(1)));
    let (_, offset, reason) = idx_error(MnistDataset::train(dir.path()).unwrap_err());
    assert_eq!(offset, 13);
    assert!(reason.contains("truncated"), "{reason}");
}

#[test]
fn wrong_image_shape_is_rejected() {
    let mut bad = image_file(2);
    bad[8..12].copy_from_slice(&32u32.to_be_bytes());
    let dir = fixture((image_file(1), label_file(1)), (bad, label_file(2)));
    let (_, offset, reason) = idx_error(MnistDataset::test(dir.path()).unwrap_err());
    assert_eq!(offset, 8);
    assert!(reason.contains("dimensions"), "{reason}");
}

#[test]
fn image_label_count_mismatch() {
    let dir = fixture((image_file(4), label_file(3)), (image_file(1), label_file(1)));
    let (path, offset, reason) = idx_error(MnistDataset::train(dir.path()).unwrap_err());
    assert_eq!(path, dir.path().join(TRAIN_LABELS));
    assert_eq!(offset, 4);
    assert!(reason.contains("mismatch"), "{reason}");
}

#[test]
fn missing_file_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    assert!(matches!(MnistDataset::train(dir.path()), Err(Error::Io { .. })));
}

fn canonical_dir() -> Option<PathBuf> {
    let dir = std::env::var_os("MNIST_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/mnist"));
    dir.join(TRAIN_IMAGES).exists().then_some(dir)
}

#[test]
fn canonical_files_when_present() {
    let Some(dir) = canonical_dir() else {
        eprintln!("MNIST files not found; skipping");
        return;
    };
    let train = MnistDataset::train(&dir).unwrap();
    let test = MnistDataset::test(&dir).unwrap();
    assert_eq!((train.len(), test.len()), (60_000, 10_000));
    // first labels of the canonical splits
    assert_eq!(&train.labels()[..5], &[5, 0, 4, 1, 9]);
    assert_eq!(&test.labels()[..5], &[7, 2, 1, 0, 4]);
}
