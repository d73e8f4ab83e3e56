//! IDX-format dataset ingestion with transparent gzip decompression.

use std::fs;
use std::io::Read;
use std::path::Path;

use flate2::read::GzDecoder;

use crate::error::Error;
use crate::federated::Dataset;
use crate::Result;

const IMAGE_MAGIC: u32 = 0x0000_0803;
const LABEL_MAGIC: u32 = 0x0000_0801;

/// Reads a file, gunzipping it when it carries the gzip signature.
fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    let raw = fs::read(path)?;
    if raw.starts_with(&[0x1f, 0x8b]) {
        let mut out = Vec::new();
        GzDecoder::new(raw.as_slice()).read_to_end(&mut out)?;
        return Ok(out);
    }
    Ok(raw)
}

fn be_u32(bytes: &[u8], at: usize) -> u32 {
    u32::from_be_bytes(bytes[at..at + 4].try_into().unwrap())
}

fn require_len(path: &Path, bytes: &[u8], expected: usize) -> Result<()> {
    if bytes.len() < expected {
        return Err(Error::TruncatedFile {
            path: path.to_path_buf(),
            expected,
            actual: bytes.len(),
        });
    }
    Ok(())
}

fn require_magic(path: &Path, bytes: &[u8], expected: u32) -> Result<()> {
    let found = be_u32(bytes, 0);
    if found != expected {
        return Err(Error::BadMagic {
            path: path.to_path_buf(),
            found,
            expected,
        });
    }
    Ok(())
}

/// Loads an IDX image/label file pair into a flat dataset.
///
/// Pixels are scaled to [0, 1]. Either file may be gzip-compressed; the
/// signature, not the extension, decides. Any malformed input fails before a
/// partial dataset is built.
pub fn load_mnist_idx(image_path: &Path, label_path: &Path) -> Result<Dataset> {
    let img = read_bytes(image_path)?;
    require_len(image_path, &img, 4)?;
    require_magic(image_path, &img, IMAGE_MAGIC)?;
    require_len(image_path, &img, 16)?;
    let n_images = be_u32(&img, 4) as usize;
    let rows = be_u32(&img, 8) as usize;
    let cols = be_u32(&img, 12) as usize;
    let n_features = rows * cols;
    require_len(image_path, &img, 16 + n_images * n_features)?;

    let lbl = read_bytes(label_path)?;
    require_len(label_path, &lbl, 4)?;
    require_magic(label_path, &lbl, LABEL_MAGIC)?;
    require_len(label_path, &lbl, 8)?;
    let n_labels = be_u32(&lbl, 4) as usize;
    require_len(label_path, &lbl, 8 + n_labels)?;

    if n_images != n_labels {
        return Err(Error::CountMismatch {
            images: n_images,
            labels: n_labels,
        });
    }

    let features = img[16..16 + n_images * n_features]
        .iter()
        .map(|&b| b as f32 / 255.0)
        .collect();
    let labels = lbl[8..8 + n_labels].to_vec();
    Ok(Dataset {
        features,
        labels,
        n_features,
    })
}
