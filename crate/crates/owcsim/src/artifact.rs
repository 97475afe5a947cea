//! Binary channel artifact.
//!
//! Layout, all integers and floats little-endian:
//!
//! | offset | size          | field                                    |
//! |--------|---------------|------------------------------------------|
//! | 0      | 8             | magic `OWCCHAN\0`                        |
//! | 8      | 4             | format version, `u32` = 1                |
//! | 12     | 16            | dims `[locations, branches, aps, λ]` u32 |
//! | 28     | 8             | illumination scale, `f64`                |
//! | 36     | 32            | SHA-256 channel fingerprint              |
//! | 68     | 8 · L·F·A·W   | `R`, `f64`, row-major                    |
//! | ...    | 8 · L·F·A·W   | `N`, `f64`, row-major                    |

use std::fs;
use std::path::Path;

use owcsim_core::channel::ChannelTensor;
use owcsim_core::Tensor4;

use crate::error::{Error, Result};

pub const MAGIC: &[u8; 8] = b"OWCCHAN\0";
pub const VERSION: u32 = 1;
const HEADER_LEN: usize = 68;

pub fn encode(channel: &ChannelTensor, fingerprint: &[u8; 32]) -> Vec<u8> {
    let dims = channel.dims();
    let len = dims.iter().product::<usize>();
    let mut out = Vec::with_capacity(HEADER_LEN + 16 * len);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    for d in dims {
        out.extend_from_slice(&u32::try_from(d).expect("dimension fits u32").to_le_bytes());
    }
    out.extend_from_slice(&channel.illumination_scale.to_le_bytes());
    out.extend_from_slice(fingerprint);
    for v in channel.r.as_slice().iter().chain(channel.n.as_slice()) {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

fn corrupt(msg: &str) -> Error {
    Error::Config(format!("channel artifact: {msg}"))
}

pub fn decode(bytes: &[u8]) -> Result<(ChannelTensor, [u8; 32])> {
    if bytes.len() < HEADER_LEN {
        return Err(corrupt("truncated header"));
    }
    if &bytes[..8] != MAGIC {
        return Err(corrupt("bad magic"));
    }
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap());
    let f64_at = |o: usize| f64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
    if u32_at(8) != VERSION {
        return Err(corrupt("unsupported version"));
    }
    let dims = [u32_at(12) as usize, u32_at(16) as usize, u32_at(20) as usize, u32_at(24) as usize];
    let scale = f64_at(28);
    let fingerprint: [u8; 32] = bytes[36..68].try_into().unwrap();
    let len = dims.iter().product::<usize>();
    if bytes.len() != HEADER_LEN + 16 * len {
        return Err(corrupt("payload length does not match dims"));
    }
    let read = |start: usize| (0..len).map(|i| f64_at(start + 8 * i)).collect::<Vec<_>>();
    let r = Tensor4::from_vec(dims, read(HEADER_LEN)).expect("length checked");
    let n = Tensor4::from_vec(dims, read(HEADER_LEN + 8 * len)).expect("length checked");
    Ok((ChannelTensor { r, n, illumination_scale: scale }, fingerprint))
}

pub fn write(path: &Path, channel: &ChannelTensor, fingerprint: &[u8; 32]) -> Result<()> {
    fs::write(path, encode(channel, fingerprint)).map_err(|e| Error::io(path, e))
}

pub fn read(path: &Path) -> Result<(ChannelTensor, [u8; 32])> {
    decode(&fs::read(path).map_err(|e| Error::io(path, e))?)
}

/// Fingerprint stored in an artifact, without decoding the payload.
pub fn read_fingerprint(path: &Path) -> Option<[u8; 32]> {
    let bytes = fs::read(path).ok()?;
    (bytes.len() >= HEADER_LEN && &bytes[..8] == MAGIC).then(|| bytes[36..68].try_into().unwrap())
}
