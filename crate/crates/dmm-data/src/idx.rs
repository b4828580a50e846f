//! Parser for the IDX format used by the original MNIST files.

use crate::error::{DmmError, Result};

const IMAGE_MAGIC: u32 = 0x0000_0803;
const LABEL_MAGIC: u32 = 0x0000_0801;

fn parse_err(offset: usize, message: impl Into<String>) -> DmmError {
    DmmError::Parse {
        offset,
        message: message.into(),
    }
}

fn read_u32(bytes: &[u8], offset: usize) -> Result<u32> {
    let end = offset + 4;
    let slice = bytes
        .get(offset..end)
        .ok_or_else(|| parse_err(offset, format!("need 4 bytes, have {}", bytes.len() - offset.min(bytes.len()))))?;
    Ok(u32::from_be_bytes(slice.try_into().unwrap()))
}

/// Parses an IDX image file: magic 0x00000803, then big-endian counts
/// (n, rows, cols), then n·rows·cols raw grayscale bytes.
pub fn parse_idx_images(bytes: &[u8]) -> Result<(Vec<Vec<u8>>, usize, usize)> {
    let magic = read_u32(bytes, 0)?;
    if magic != IMAGE_MAGIC {
        return Err(parse_err(0, format!("bad magic {magic:#010x}, expected {IMAGE_MAGIC:#010x} for images")));
    }
    let n = read_u32(bytes, 4)? as usize;
    let rows = read_u32(bytes, 8)? as usize;
    let cols = read_u32(bytes, 12)? as usize;
    let per_image = rows
        .checked_mul(cols)
        .ok_or_else(|| parse_err(8, format!("image size {rows}x{cols} overflows")))?;
    let payload = n
        .checked_mul(per_image)
        .ok_or_else(|| parse_err(4, format!("{n} images of {per_image} bytes overflows")))?;
    let body = &bytes[16..];
    if body.len() != payload {
        return Err(parse_err(
            16,
            format!("payload has {} bytes, header promises {payload}", body.len()),
        ));
    }
    let images = body.chunks_exact(per_image).map(|c| c.to_vec()).collect();
    Ok((images, rows, cols))
}

/// Parses an IDX label file: magic 0x00000801, count, then raw bytes.
pub fn parse_idx_labels(bytes: &[u8]) -> Result<Vec<u8>> {
    let magic = read_u32(bytes, 0)?;
    if magic != LABEL_MAGIC {
        return Err(parse_err(0, format!("bad magic {magic:#010x}, expected {LABEL_MAGIC:#010x} for labels")));
    }
    let n = read_u32(bytes, 4)? as usize;
    let body = &bytes[8..];
    if body.len() != n {
        return Err(parse_err(
            8,
            format!("payload has {} bytes, header promises {n}", body.len()),
        ));
    }
    Ok(body.to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn image_file(n: u32, rows: u32, cols: u32, body: &[u8]) -> Vec<u8> {
        let mut v = Vec::new();
        v.extend_from_slice(&IMAGE_MAGIC.to_be_bytes());
        v.extend_from_slice(&n.to_be_bytes());
        v.extend_from_slice(&rows.to_be_bytes());
        v.extend_from_slice(&cols.to_be_bytes());
        v.extend_from_slice(body);
        v
    }

    #[test]
    fn minimal_image_file_parses() {
        let body: Vec<u8> = (0..784u32).map(|i| (i % 251) as u8).collect();
        let (images, rows, cols) = parse_idx_images(&image_file(1, 28, 28, &body)).unwrap();
        assert_eq!((images.len(), rows, cols), (1, 28, 28));
        assert_eq!(images[0], body);
    }

    #[test]
    fn wrong_magic_rejected_with_offset() {
        let mut f = image_file(1, 28, 28, &[0u8; 784]);
        f[3] = 0x02;
        let err = parse_idx_images(&f).unwrap_err().to_string();
        assert!(err.contains("byte 0") && err.contains("bad magic"), "{err}");
    }

    #[test]
    fn truncated_payload_rejected() {
        let f = image_file(2, 28, 28, &[0u8; 784]); // promises 2 images, has 1
        let err = parse_idx_images(&f).unwrap_err().to_string();
        assert!(err.contains("byte 16"), "{err}");
    }

    #[test]
    fn labels_parse_and_validate_magic() {
        let mut v = Vec::new();
        v.extend_from_slice(&LABEL_MAGIC.to_be_bytes());
        v.extend_from_slice(&3u32.to_be_bytes());
        v.extend_from_slice(&[7, 0, 9]);
        assert_eq!(parse_idx_labels(&v).unwrap(), vec![7, 0, 9]);

        v[3] = 0x03; // image magic in a label file
        assert!(parse_idx_labels(&v).is_err());
    }
}
