//! Named parameter tensors and the flat binary parameter container.
//!
//! A container is two files: `<stem>.bin` holding every tensor as
//! little-endian `f64` values back to back, and `<stem>.json`, a manifest of
//! `{name, shape, offset}` records where `offset` counts `f64` values.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A read-only view of one named tensor.
pub struct Tensor<'a> {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: &'a [f64],
}

pub struct TensorMut<'a> {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: &'a mut [f64],
}

/// Anything that owns trainable tensors, visited in a fixed order.
pub trait Parameterized {
    fn tensors(&self) -> Vec<Tensor<'_>>;
    fn tensors_mut(&mut self) -> Vec<TensorMut<'_>>;

    fn num_parameters(&self) -> usize {
        self.tensors().iter().map(|t| t.data.len()).sum()
    }

    fn to_flat(&self) -> Vec<f64> {
        self.tensors().iter().flat_map(|t| t.data.iter().copied()).collect()
    }

    fn load_flat(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.num_parameters() {
            return Err(Error::ShapeMismatch(format!(
                "{} values for {} parameters",
                flat.len(),
                self.num_parameters()
            )));
        }
        let mut offset = 0;
        for t in self.tensors_mut() {
            let len = t.data.len();
            t.data.copy_from_slice(&flat[offset..offset + len]);
            offset += len;
        }
        Ok(())
    }

    /// Name of the tensor holding flat parameter `index`, with the element
    /// offset inside it.
    fn locate(&self, mut index: usize) -> Option<(String, usize)> {
        for t in self.tensors() {
            if index < t.data.len() {
                return Some((t.name, index));
            }
            index -= t.data.len();
        }
        None
    }

    fn zero(&mut self) {
        for t in self.tensors_mut() {
            t.data.fill(0.0);
        }
    }
}

pub(crate) fn prefixed<'a>(prefix: &str, tensors: Vec<Tensor<'a>>) -> Vec<Tensor<'a>> {
    tensors
        .into_iter()
        .map(|t| Tensor {
            name: format!("{prefix}.{}", t.name),
            ..t
        })
        .collect()
}

pub(crate) fn prefixed_mut<'a>(prefix: &str, tensors: Vec<TensorMut<'a>>) -> Vec<TensorMut<'a>> {
    tensors
        .into_iter()
        .map(|t| TensorMut {
            name: format!("{prefix}.{}", t.name),
            ..t
        })
        .collect()
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct ManifestEntry {
    pub name: String,
    pub shape: Vec<usize>,
    pub offset: usize,
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct Manifest {
    pub dtype: String,
    pub tensors: Vec<ManifestEntry>,
}

pub fn manifest(params: &impl Parameterized) -> Manifest {
    let mut offset = 0;
    let tensors = params
        .tensors()
        .into_iter()
        .map(|t| {
            let entry = ManifestEntry {
                name: t.name,
                shape: t.shape,
                offset,
            };
            offset += t.data.len();
            entry
        })
        .collect();
    Manifest {
        dtype: "f64-le".into(),
        tensors,
    }
}

/// Writes `<stem>.bin` and `<stem>.json`.
pub fn save_parameters(params: &impl Parameterized, stem: &Path) -> Result<()> {
    let bytes: Vec<u8> = params.to_flat().iter().flat_map(|x| x.to_le_bytes()).collect();
    fs::write(stem.with_extension("bin"), bytes)?;
    let json = serde_json::to_string_pretty(&manifest(params)).expect("manifest serializes");
    fs::write(stem.with_extension("json"), json)?;
    Ok(())
}

/// Fills `params` from a container whose manifest must match its layout.
pub fn load_parameters(params: &mut impl Parameterized, stem: &Path) -> Result<()> {
    let text = fs::read_to_string(stem.with_extension("json"))?;
    let found: Manifest = serde_json::from_str(&text).map_err(|e| Error::Parse(e.to_string()))?;
    if found != manifest(params) {
        return Err(Error::ShapeMismatch(
            "parameter manifest does not match the model".into(),
        ));
    }
    let bytes = fs::read(stem.with_extension("bin"))?;
    if bytes.len() != 8 * params.num_parameters() {
        return Err(Error::Parse(format!(
            "{} bytes for {} parameters",
            bytes.len(),
            params.num_parameters()
        )));
    }
    let flat: Vec<f64> = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    params.load_flat(&flat)
}
