use std::path::Path;

use super::Dataset;
use crate::error::{Error, Result};
use crate::numerics::Mat;

const IMAGES_MAGIC: u32 = 0x0000_0803;
const LABELS_MAGIC: u32 = 0x0000_0801;

fn be_u32(bytes: &[u8], at: usize) -> Option<u32> {
    bytes
        .get(at..at + 4)
        .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
}

/// Parses an IDX3 image file into `(rows, cols, pixels / 255)`.
pub fn parse_idx_images(bytes: &[u8]) -> std::result::Result<(usize, usize, Vec<f64>), String> {
    let magic = be_u32(bytes, 0).ok_or("file shorter than header")?;
    if magic != IMAGES_MAGIC {
        return Err(format!(
            "bad magic 0x{magic:08x}, expected 0x{IMAGES_MAGIC:08x}"
        ));
    }
    let header = (1..4)
        .map(|i| be_u32(bytes, 4 * i).map(|v| v as usize))
        .collect::<Option<Vec<_>>>()
        .ok_or("file shorter than header")?;
    let (count, rows, cols) = (header[0], header[1], header[2]);
    let expected = count * rows * cols;
    let body = &bytes[16..];
    if body.len() < expected {
        return Err(format!(
            "truncated: expected {expected} pixel bytes, found {}",
            body.len()
        ));
    }
    let pixels = body[..expected].iter().map(|&p| p as f64 / 255.0).collect();
    Ok((count, rows * cols, pixels))
}

/// Parses an IDX1 label file.
pub fn parse_idx_labels(bytes: &[u8]) -> std::result::Result<Vec<usize>, String> {
    let magic = be_u32(bytes, 0).ok_or("file shorter than header")?;
    if magic != LABELS_MAGIC {
        return Err(format!(
            "bad magic 0x{magic:08x}, expected 0x{LABELS_MAGIC:08x}"
        ));
    }
    let count = be_u32(bytes, 4).ok_or("file shorter than header")? as usize;
    let body = &bytes[8..];
    if body.len() < count {
        return Err(format!(
            "truncated: expected {count} labels, found {}",
            body.len()
        ));
    }
    Ok(body[..count].iter().map(|&l| l as usize).collect())
}

/// Loads an MNIST-style image/label pair. Pixels are scaled by 1/255 and
/// flattened row-major.
pub fn load_idx(images: &Path, labels: &Path) -> Result<Dataset> {
    let img_bytes = std::fs::read(images)?;
    let lbl_bytes = std::fs::read(labels)?;
    let idx_err = |path: &Path, message: String| Error::Idx {
        path: path.to_path_buf(),
        message,
    };
    let (count, dim, pixels) = parse_idx_images(&img_bytes).map_err(|m| idx_err(images, m))?;
    let labels_v = parse_idx_labels(&lbl_bytes).map_err(|m| idx_err(labels, m))?;
    if labels_v.len() != count {
        return Err(idx_err(
            labels,
            format!("{} labels for {count} images", labels_v.len()),
        ));
    }
    let classes = labels_v.iter().max().map_or(0, |&m| m + 1).max(2);
    Ok(Dataset {
        features: Mat::from_vec(count, dim, pixels)?,
        labels: labels_v,
        classes,
    })
}
