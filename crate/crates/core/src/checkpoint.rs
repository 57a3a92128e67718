//! Binary checkpoint format for [`ModelParams`].
//!
//! ```text
//! magic    "GVCK"
//! version  u32 = 1
//! repeated until end of file:
//!   name_len u32, name (UTF-8), rank u32, dims u32 × rank, values f64 × Π dims
//! ```
//!
//! All integers and floats are little-endian. A rank-0 array holds one value.
//! Arrays are written in the order `gcn.{l}.weight`, `gcn.{l}.bias` for each
//! layer, then `attention.weight`, `attention.bias`, `dropout`.

use std::collections::BTreeMap;
use std::path::Path;

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};
use crate::model::{Layer, ModelParams};

pub const MAGIC: [u8; 4] = *b"GVCK";
pub const FORMAT_VERSION: u32 = 1;

fn put_u32(out: &mut Vec<u8>, v: u32) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn put_array(out: &mut Vec<u8>, name: &str, dims: &[usize], values: &[f64]) {
    put_u32(out, name.len() as u32);
    out.extend_from_slice(name.as_bytes());
    put_u32(out, dims.len() as u32);
    for &d in dims {
        put_u32(out, d as u32);
    }
    for v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
}

pub fn to_bytes(params: &ModelParams) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(&MAGIC);
    put_u32(&mut out, FORMAT_VERSION);
    for (name, dims, values) in params.tensors() {
        put_array(&mut out, &name, &dims, values);
    }
    put_array(&mut out, "dropout", &[], &[params.dropout]);
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8]> {
        if self.pos + n > self.bytes.len() {
            return Err(Error::Truncated {
                expected: self.pos + n,
                found: self.bytes.len(),
            });
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        let b = self.take(4)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }
}

pub fn from_bytes(bytes: &[u8]) -> Result<ModelParams> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(4)? != MAGIC {
        return Err(Error::BadMagic("checkpoint".into()));
    }
    let version = r.u32()?;
    if version != FORMAT_VERSION {
        return Err(Error::UnsupportedVersion {
            found: version,
            expected: FORMAT_VERSION,
        });
    }
    let mut arrays: BTreeMap<String, (Vec<usize>, Vec<f64>)> = BTreeMap::new();
    while r.pos < bytes.len() {
        let len = r.u32()? as usize;
        let name = std::str::from_utf8(r.take(len)?)
            .map_err(|e| Error::parse("checkpoint", format!("array name: {e}")))?
            .to_string();
        let rank = r.u32()? as usize;
        let dims = (0..rank).map(|_| r.u32().map(|d| d as usize)).collect::<Result<Vec<_>>>()?;
        let count: usize = dims.iter().product();
        let values = r
            .take(count * 8)?
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect();
        arrays.insert(name, (dims, values));
    }

    let mut take = |name: &str| {
        arrays
            .remove(name)
            .ok_or_else(|| Error::parse("checkpoint", format!("missing array {name}")))
    };
    let mut layers = Vec::new();
    for l in 0.. {
        let key = format!("gcn.{l}.weight");
        let Ok((dims, values)) = take(&key) else { break };
        if dims.len() != 2 {
            return Err(Error::Shape(format!("{key} has rank {}", dims.len())));
        }
        let weight = Array2::from_shape_vec((dims[0], dims[1]), values).map_err(|e| Error::Shape(e.to_string()))?;
        let (bdims, bias) = take(&format!("gcn.{l}.bias"))?;
        if bdims.len() != 1 {
            return Err(Error::Shape(format!("gcn.{l}.bias has rank {}", bdims.len())));
        }
        layers.push(Layer {
            weight,
            bias: Array1::from_vec(bias),
        });
    }
    let (adims, attention) = take("attention.weight")?;
    if adims.len() != 1 {
        return Err(Error::Shape("attention.weight must be a vector".into()));
    }
    let scalar = |(dims, values): (Vec<usize>, Vec<f64>), name: &str| {
        if dims.is_empty() && values.len() == 1 {
            Ok(values[0])
        } else {
            Err(Error::Shape(format!("{name} must be a scalar")))
        }
    };
    let attention_bias = scalar(take("attention.bias")?, "attention.bias")?;
    let dropout = scalar(take("dropout")?, "dropout")?;
    let params = ModelParams {
        layers,
        attention: Array1::from_vec(attention),
        attention_bias,
        dropout,
    };
    params.validate()?;
    Ok(params)
}

pub fn write_params(params: &ModelParams, path: &Path) -> Result<()> {
    std::fs::write(path, to_bytes(params)).map_err(|e| Error::io(path, e))
}

pub fn read_params(path: &Path) -> Result<ModelParams> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    from_bytes(&bytes)
}
