//! Binary greyscale PGM (P5), 8 bits per pixel.

use cae_core::{Shape, Tensor};

use crate::error::{Error, Result};

/// Single-channel image in [0, 1], stored as `round(x * 255)`.
pub fn encode(image: &Tensor<f64>) -> Result<Vec<u8>> {
    let s = image.shape();
    if s.channels != 1 {
        return Err(Error::Format(format!("PGM needs one channel, got {s}")));
    }
    let mut out = format!("P5\n{} {}\n255\n", s.width, s.height).into_bytes();
    out.extend(
        image
            .as_slice()
            .iter()
            .map(|&v| (v.clamp(0.0, 1.0) * 255.0).round() as u8),
    );
    Ok(out)
}

/// Reads the files written by [`encode`]: `P5`, width, height, maxval 255, one whitespace
/// byte, then the raster. Comments are not supported.
pub fn decode(bytes: &[u8]) -> Result<Tensor<f64>> {
    let bad = |m: &str| Error::Format(format!("bad PGM: {m}"));
    let mut fields = Vec::new();
    let mut pos = 0;
    while fields.len() < 4 {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(bad("truncated header"));
        }
        fields.push(std::str::from_utf8(&bytes[start..pos]).map_err(|_| bad("header is not ASCII"))?);
    }
    if fields[0] != "P5" {
        return Err(bad("not P5"));
    }
    let num = |s: &str| s.parse::<usize>().map_err(|_| bad("non-numeric header field"));
    let (w, h, max) = (num(fields[1])?, num(fields[2])?, num(fields[3])?);
    if max != 255 {
        return Err(bad("only maxval 255 is supported"));
    }
    let raster = bytes.get(pos + 1..).ok_or_else(|| bad("missing raster"))?;
    if raster.len() != w * h {
        return Err(bad("raster size does not match header"));
    }
    Ok(Tensor::from_vec(
        Shape::new(1, h, w),
        raster.iter().map(|&b| b as f64 / 255.0).collect(),
    )?)
}
