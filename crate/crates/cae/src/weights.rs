//! CAEW parameter files.
//!
//! ```text
//! "CAEW"  u8 version (1)  u32 bank count
//! per bank: u32 out, u32 in, u32 kh, u32 kw, u32 bias length
//! per bank: weights then biases, f32
//! ```
//! All integers and floats are little-endian.

use std::io::{Cursor, Read};

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use cae_core::model::{build_table1_network, NetworkSpec, Parameters};
use cae_core::ops::KernelBank;

use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"CAEW";
pub const VERSION: u8 = 1;

pub fn encode(params: &Parameters<f64>) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.push(VERSION);
    out.write_u32::<LittleEndian>(params.banks().len() as u32).unwrap();
    for bank in params.banks() {
        for d in bank.dims() {
            out.write_u32::<LittleEndian>(d as u32).unwrap();
        }
        out.write_u32::<LittleEndian>(bank.bias().len() as u32).unwrap();
    }
    for bank in params.banks() {
        for &v in bank.weights().iter().chain(bank.bias()) {
            out.write_f32::<LittleEndian>(v as f32).unwrap();
        }
    }
    out
}

fn bad(msg: impl Into<String>) -> Error {
    Error::Format(format!("bad weights file: {}", msg.into()))
}

pub fn decode(bytes: &[u8]) -> Result<Parameters<f64>> {
    let mut cur = Cursor::new(bytes);
    let mut magic = [0u8; 4];
    cur.read_exact(&mut magic).map_err(|_| bad("too short"))?;
    if &magic != MAGIC {
        return Err(bad("missing CAEW magic"));
    }
    let version = cur.read_u8().map_err(|_| bad("too short"))?;
    if version != VERSION {
        return Err(bad(format!("unsupported version {version}")));
    }
    let count = cur.read_u32::<LittleEndian>().map_err(|_| bad("truncated header"))? as usize;
    if count > 1024 {
        return Err(bad(format!("implausible layer count {count}")));
    }
    let mut dims = Vec::with_capacity(count);
    for _ in 0..count {
        let mut d = [0usize; 4];
        for v in &mut d {
            *v = cur.read_u32::<LittleEndian>().map_err(|_| bad("truncated header"))? as usize;
        }
        let bias = cur.read_u32::<LittleEndian>().map_err(|_| bad("truncated header"))? as usize;
        if bias != d[0] {
            return Err(bad(format!("bias length {bias} for {} output channels", d[0])));
        }
        dims.push(d);
    }
    let floats: usize = dims.iter().map(|d| d.iter().product::<usize>() + d[0]).sum();
    let remaining = bytes.len() - cur.position() as usize;
    if remaining != floats * 4 {
        return Err(bad(format!("{remaining} payload bytes, expected {}", floats * 4)));
    }
    let mut banks = Vec::with_capacity(count);
    for d in dims {
        let mut read =
            |n: usize| -> Vec<f64> { (0..n).map(|_| cur.read_f32::<LittleEndian>().unwrap() as f64).collect() };
        let weights = read(d.iter().product());
        let bias = read(d[0]);
        banks.push(KernelBank::new(d, weights, bias)?);
    }
    Ok(Parameters::from_banks(banks))
}

/// The network a weights file was trained for, read off its output-channel counts.
pub fn network_for(params: &Parameters<f64>) -> Result<NetworkSpec> {
    let profile: Vec<usize> = params.banks().iter().map(|b| b.out_channels()).collect();
    let spec = build_table1_network(&profile)?;
    params.check_against(&spec)?;
    Ok(spec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use cae_core::model::{init_parameters, DEFAULT_PROFILE};

    #[test]
    fn round_trip_through_f32() {
        let spec = build_table1_network(&DEFAULT_PROFILE).unwrap();
        let p = init_parameters(&spec, 1);
        let bytes = encode(&p);
        assert_eq!(&bytes[..5], b"CAEW\x01");
        assert_eq!(&bytes[5..9], &7u32.to_le_bytes());
        let q = decode(&bytes).unwrap();
        let expect = p.map(|&v| v as f32 as f64);
        assert_eq!(q, expect);
        assert_eq!(encode(&q), bytes);
        assert_eq!(network_for(&q).unwrap(), spec);
    }

    #[test]
    fn layout_of_a_single_bank() {
        let bank = KernelBank::new([1, 1, 1, 2], vec![1.0, -2.0], vec![0.5]).unwrap();
        let bytes = encode(&Parameters::from_banks(vec![bank]));
        let mut expect = b"CAEW\x01".to_vec();
        for v in [1u32, 1, 1, 1, 2, 1] {
            expect.extend(v.to_le_bytes());
        }
        for v in [1.0f32, -2.0, 0.5] {
            expect.extend(v.to_le_bytes());
        }
        assert_eq!(bytes, expect);
    }

    #[test]
    fn corrupt_files() {
        let spec = build_table1_network(&DEFAULT_PROFILE).unwrap();
        let bytes = encode(&init_parameters(&spec, 1));
        assert!(decode(&bytes[..bytes.len() - 1]).is_err());
        assert!(decode(b"CAEX\x01").is_err());
        let mut v2 = bytes.clone();
        v2[4] = 2;
        assert!(decode(&v2).unwrap_err().to_string().contains("version"));
        let mut extra = bytes;
        extra.push(0);
        assert!(decode(&extra).is_err());
    }
}
