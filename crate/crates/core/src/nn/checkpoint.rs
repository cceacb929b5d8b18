//! Binary checkpoint container.
//!
//! Layout (all integers little-endian):
//!
//! | bytes | content                                         |
//! |-------|-------------------------------------------------|
//! | 8     | magic `CUKENET\0`                               |
//! | 4     | format version (`1`)                            |
//! | 4     | header length `n`                               |
//! | n     | UTF-8 JSON header: scalar name, config, shapes  |
//! | rest  | parameters in layer order, raw little-endian    |

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::NetworkConfig;
use super::network::Network;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

const MAGIC: &[u8; 8] = b"CUKENET\0";
const VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Header {
    scalar: String,
    config: NetworkConfig,
    shapes: Vec<Vec<usize>>,
}

pub fn to_bytes<T: Scalar>(network: &Network<T>) -> Vec<u8> {
    let header = Header {
        scalar: T::NAME.to_string(),
        config: network.config().clone(),
        shapes: network.params().map(|p| p.value.shape().to_vec()).collect(),
    };
    let json = serde_json::to_vec(&header).expect("header serializes");
    let mut out = Vec::with_capacity(16 + json.len() + network.param_count() * T::BYTES);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(json.len() as u32).to_le_bytes());
    out.extend_from_slice(&json);
    for p in network.params() {
        for &v in p.value.data() {
            v.write_le(&mut out);
        }
    }
    out
}

pub fn from_bytes<T: Scalar>(bytes: &[u8], origin: &Path) -> Result<Network<T>> {
    let bad = |msg: &str| Error::format(origin, msg);
    if bytes.len() < 16 || &bytes[..8] != MAGIC {
        return Err(bad("not a checkpoint (bad magic)"));
    }
    let version = u32::from_le_bytes(bytes[8..12].try_into().unwrap());
    if version != VERSION {
        return Err(bad(&format!("unsupported checkpoint version {version}")));
    }
    let hlen = u32::from_le_bytes(bytes[12..16].try_into().unwrap()) as usize;
    let body = bytes
        .get(16..16 + hlen)
        .ok_or_else(|| bad("truncated header"))?;
    let header: Header = serde_json::from_slice(body)?;
    if header.scalar != T::NAME {
        return Err(bad(&format!(
            "checkpoint holds {} parameters, requested {}",
            header.scalar,
            T::NAME
        )));
    }
    let mut network = Network::<T>::new(&header.config)?;
    let shapes: Vec<Vec<usize>> = network.params().map(|p| p.value.shape().to_vec()).collect();
    if shapes != header.shapes {
        return Err(bad("parameter shapes disagree with the stored config"));
    }
    let mut raw = &bytes[16 + hlen..];
    let expected = network.param_count() * T::BYTES;
    if raw.len() != expected {
        return Err(bad(&format!(
            "parameter block is {} bytes, expected {expected}",
            raw.len()
        )));
    }
    for p in network.params_mut() {
        for v in p.value.data_mut() {
            *v = T::read_le(raw);
            raw = &raw[T::BYTES..];
        }
    }
    Ok(network)
}

pub fn save<T: Scalar>(network: &Network<T>, path: &Path) -> Result<()> {
    std::fs::write(path, to_bytes(network)).map_err(|e| Error::io(path, e))
}

pub fn load<T: Scalar>(path: &Path) -> Result<Network<T>> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    from_bytes(&bytes, path)
}
