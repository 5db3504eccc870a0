//! On-disk format for one party's model shares.
//!
//! JSON files hold everything. Files ending in `.bin` hold a JSON metadata
//! header followed by raw layers:
//!
//! ```text
//! b"S2PW" | u32 version | u64 header_len | header (JSON, no layers)
//! u64 layer_count | per layer: u64 rows, u64 cols, rows*cols f64
//! ```
//!
//! All integers and reals are little-endian.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::RealMatrix;
use crate::netsim::PartyId;

use super::{check_layer_dims, ModelShares};

const MAGIC: &[u8; 4] = b"S2PW";
const VERSION: u32 = 1;

/// Per-column standardization fitted on training data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scaling {
    pub columns: Vec<String>,
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub party: PartyId,
    pub dims: Vec<usize>,
    pub classes: Vec<String>,
    /// Standardization of the columns this party owns.
    pub scaling: Scaling,
    #[serde(default)]
    pub layers: Vec<RealMatrix>,
}

#[derive(Serialize, Deserialize)]
struct Header {
    party: PartyId,
    dims: Vec<usize>,
    classes: Vec<String>,
    scaling: Scaling,
}

impl ModelFile {
    pub fn shares(&self) -> ModelShares {
        ModelShares {
            layers: self.layers.clone(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_layer_dims(&self.layers, &self.dims)?;
        let s = &self.scaling;
        if s.mean.len() != s.columns.len() || s.scale.len() != s.columns.len() {
            return Err(Error::usage("scaling vectors do not match column list"));
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        self.validate()?;
        if is_binary(path) {
            fs::write(path, self.to_binary()?)?;
        } else {
            let mut f = fs::File::create(path)?;
            serde_json::to_writer(&mut f, self)?;
            f.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = fs::read(path)?;
        let file = if is_binary(path) {
            Self::from_binary(&bytes)?
        } else {
            serde_json::from_slice(&bytes)?
        };
        file.validate()?;
        Ok(file)
    }

    pub fn to_binary(&self) -> Result<Vec<u8>> {
        let header = serde_json::to_vec(&Header {
            party: self.party,
            dims: self.dims.clone(),
            classes: self.classes.clone(),
            scaling: self.scaling.clone(),
        })?;
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&(header.len() as u64).to_le_bytes());
        out.extend_from_slice(&header);
        out.extend_from_slice(&(self.layers.len() as u64).to_le_bytes());
        for w in &self.layers {
            out.extend_from_slice(&(w.rows() as u64).to_le_bytes());
            out.extend_from_slice(&(w.cols() as u64).to_le_bytes());
            for x in w.as_slice() {
                out.extend_from_slice(&x.to_le_bytes());
            }
        }
        Ok(out)
    }

    pub fn from_binary(bytes: &[u8]) -> Result<Self> {
        let mut r = bytes;
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::usage("not a model share file"));
        }
        let version = read_u32(&mut r)?;
        if version != VERSION {
            return Err(Error::usage(format!(
                "unsupported model file version {version}"
            )));
        }
        let header_len = read_len(&mut r)?;
        if header_len > r.len() {
            return Err(Error::usage("truncated model header"));
        }
        let header: Header = serde_json::from_slice(&r[..header_len])?;
        r = &r[header_len..];
        let count = read_len(&mut r)?;
        let mut layers = Vec::with_capacity(count.min(64));
        for _ in 0..count {
            let rows = read_len(&mut r)?;
            let cols = read_len(&mut r)?;
            let len = rows
                .checked_mul(cols)
                .filter(|&n| n.checked_mul(8).is_some_and(|b| b <= r.len()))
                .ok_or_else(|| Error::usage("truncated layer data"))?;
            let mut data = Vec::with_capacity(len);
            for _ in 0..len {
                let mut b = [0u8; 8];
                r.read_exact(&mut b)?;
                data.push(f64::from_le_bytes(b));
            }
            layers.push(RealMatrix::from_vec(rows, cols, data)?);
        }
        Ok(Self {
            party: header.party,
            dims: header.dims,
            classes: header.classes,
            scaling: header.scaling,
            layers,
        })
    }
}

fn is_binary(path: &Path) -> bool {
    path.extension().is_some_and(|e| e == "bin")
}

fn read_u32(r: &mut &[u8]) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_len(r: &mut &[u8]) -> Result<usize> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    usize::try_from(u64::from_le_bytes(b)).map_err(|_| Error::usage("length overflows usize"))
}
