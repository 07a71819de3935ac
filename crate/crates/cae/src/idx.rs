//! IDX containers (the MNIST distribution format).
//!
//! Layout: big-endian `u32` magic, one big-endian `u32` per dimension, then raw `u8` payload.
//! Images use magic `0x00000803` with dimensions `(count, rows, cols)`; labels use
//! `0x00000801` with a single `count`.

use std::io::{Cursor, Read};

use byteorder::{BigEndian, ReadBytesExt, WriteBytesExt};
use cae_core::dataset::ImageSet;

use crate::error::{Error, Result};

pub const IMAGE_MAGIC: u32 = 0x0000_0803;
pub const LABEL_MAGIC: u32 = 0x0000_0801;

fn header(cur: &mut Cursor<&[u8]>, magic: u32, what: &str, dims: usize) -> Result<Vec<usize>> {
    let found = cur
        .read_u32::<BigEndian>()
        .map_err(|_| Error::Format(format!("truncated IDX header: not {what}")))?;
    if found != magic {
        return Err(Error::Format(format!(
            "not {what}: magic {found:#010x}, expected {magic:#010x}"
        )));
    }
    (0..dims)
        .map(|_| {
            cur.read_u32::<BigEndian>()
                .map(|d| d as usize)
                .map_err(|_| Error::Format("truncated IDX header".into()))
        })
        .collect()
}

fn payload(cur: &mut Cursor<&[u8]>, len: usize) -> Result<Vec<u8>> {
    let start = cur.position() as usize;
    let available = cur.get_ref().len() - start;
    if available < len {
        return Err(Error::Format(format!(
            "truncated IDX payload: {available} bytes, expected {len}"
        )));
    }
    if available > len {
        return Err(Error::Format(format!(
            "{} trailing bytes after IDX payload",
            available - len
        )));
    }
    let mut buf = vec![0; len];
    cur.read_exact(&mut buf)?;
    Ok(buf)
}

pub fn load_idx_images(bytes: &[u8]) -> Result<ImageSet> {
    let mut cur = Cursor::new(bytes);
    let dims = header(&mut cur, IMAGE_MAGIC, "an image file", 3)?;
    let (count, rows, cols) = (dims[0], dims[1], dims[2]);
    let len = count
        .checked_mul(rows)
        .and_then(|v| v.checked_mul(cols))
        .ok_or_else(|| Error::Format("IDX dimensions overflow".into()))?;
    let pixels = payload(&mut cur, len)?;
    Ok(ImageSet::new(count, rows, cols, pixels)?)
}

pub fn load_idx_labels(bytes: &[u8]) -> Result<Vec<u8>> {
    let mut cur = Cursor::new(bytes);
    let dims = header(&mut cur, LABEL_MAGIC, "a label file", 1)?;
    payload(&mut cur, dims[0])
}

pub fn save_idx_images(set: &ImageSet) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 + set.pixels().len());
    for v in [IMAGE_MAGIC, set.count() as u32, set.height() as u32, set.width() as u32] {
        out.write_u32::<BigEndian>(v).unwrap();
    }
    out.extend_from_slice(set.pixels());
    out
}

pub fn save_idx_labels(labels: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 + labels.len());
    out.write_u32::<BigEndian>(LABEL_MAGIC).unwrap();
    out.write_u32::<BigEndian>(labels.len() as u32).unwrap();
    out.extend_from_slice(labels);
    out
}

/// Checks that an image file and a label file describe the same number of items.
pub fn check_paired(images: &ImageSet, labels: &[u8]) -> Result<()> {
    if images.count() != labels.len() {
        return Err(Error::Format(format!(
            "{} images but {} labels",
            images.count(),
            labels.len()
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn minimal_image_file() {
        let bytes = [0, 0, 8, 3, 0, 0, 0, 1, 0, 0, 0, 2, 0, 0, 0, 2, 0, 128, 255, 64];
        let set = load_idx_images(&bytes).unwrap();
        assert_eq!((set.count(), set.height(), set.width()), (1, 2, 2));
        assert_eq!(set.pixels(), &[0, 128, 255, 64]);
    }

    #[test]
    fn label_magic_is_not_an_image() {
        let bytes = [0, 0, 8, 1, 0, 0, 0, 1, 0, 0, 0, 1, 0, 0, 0, 1, 7];
        let err = load_idx_images(&bytes).unwrap_err().to_string();
        assert!(err.contains("not an image file"), "{err}");
    }

    #[test]
    fn truncated_and_trailing() {
        let mut bytes = vec![0, 0, 8, 3, 0, 0, 0, 1, 0, 0, 0, 2, 0, 0, 0, 2, 0, 128, 255];
        assert!(load_idx_images(&bytes).unwrap_err().to_string().contains("truncated"));
        bytes.extend([1, 2]);
        assert!(load_idx_images(&bytes).unwrap_err().to_string().contains("trailing"));
        assert!(load_idx_images(&bytes[..6]).is_err());
    }

    #[test]
    fn labels() {
        assert_eq!(load_idx_labels(&[0, 0, 8, 1, 0, 0, 0, 1, 7]).unwrap(), vec![7]);
        assert!(load_idx_labels(&[0, 0, 8, 3, 0, 0, 0, 1, 7]).is_err());
        let set = ImageSet::new(2, 1, 1, vec![3, 4]).unwrap();
        assert!(check_paired(&set, &[7]).is_err());
        assert!(check_paired(&set, &[7, 1]).is_ok());
    }

    proptest! {
        #[test]
        fn bytes_round_trip(count in 0usize..4, rows in 1usize..5, cols in 1usize..5, seed in any::<u8>()) {
            let pixels: Vec<u8> = (0..count * rows * cols).map(|i| (i as u8).wrapping_mul(31) ^ seed).collect();
            let set = ImageSet::new(count, rows, cols, pixels).unwrap();
            let bytes = save_idx_images(&set);
            let back = load_idx_images(&bytes).unwrap();
            prop_assert_eq!(save_idx_images(&back), bytes);
            prop_assert_eq!(back, set);
        }
    }
}
