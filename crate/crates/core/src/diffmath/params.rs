use rand::Rng;
use serde::{Deserialize, Serialize};

use super::Array;
use crate::error::{Error, Result};

/// Learning-rate group of a parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ParamGroup {
    /// Token, position and numeric embeddings.
    Embedding,
    /// Encoder layers.
    Body,
    /// Output heads.
    Head,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ParamId(pub(crate) usize);

impl ParamId {
    pub fn index(self) -> usize {
        self.0
    }
}

/// Name, shape and group of a stored parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamInfo {
    pub name: String,
    pub shape: [usize; 2],
    pub group: ParamGroup,
}

/// Owns every trainable tensor of a model.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParamStore {
    infos: Vec<ParamInfo>,
    values: Vec<Array>,
}

impl ParamStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, name: impl Into<String>, value: Array, group: ParamGroup) -> ParamId {
        let id = ParamId(self.values.len());
        self.infos.push(ParamInfo {
            name: name.into(),
            shape: value.shape(),
            group,
        });
        self.values.push(value);
        id
    }

    /// Adds a `rows × cols` matrix with Glorot-uniform entries.
    pub fn add_glorot(
        &mut self,
        name: impl Into<String>,
        rows: usize,
        cols: usize,
        group: ParamGroup,
        rng: &mut impl Rng,
    ) -> ParamId {
        let limit = (6.0 / (rows + cols) as f64).sqrt();
        let data = (0..rows * cols)
            .map(|_| rng.random_range(-limit..limit))
            .collect();
        self.add(name, Array::from_vec(rows, cols, data).unwrap(), group)
    }

    /// Adds a matrix with `N(0, std²)` entries.
    pub fn add_normal(
        &mut self,
        name: impl Into<String>,
        rows: usize,
        cols: usize,
        std: f64,
        group: ParamGroup,
        rng: &mut impl Rng,
    ) -> ParamId {
        use rand_distr::{Distribution, Normal};
        let normal = Normal::new(0.0, std).unwrap();
        let data = (0..rows * cols).map(|_| normal.sample(rng)).collect();
        self.add(name, Array::from_vec(rows, cols, data).unwrap(), group)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, id: ParamId) -> &Array {
        &self.values[id.0]
    }

    pub fn get_mut(&mut self, id: ParamId) -> &mut Array {
        &mut self.values[id.0]
    }

    pub fn info(&self, id: ParamId) -> &ParamInfo {
        &self.infos[id.0]
    }

    pub fn infos(&self) -> &[ParamInfo] {
        &self.infos
    }

    pub fn ids(&self) -> impl Iterator<Item = ParamId> {
        (0..self.values.len()).map(ParamId)
    }

    pub fn find(&self, name: &str) -> Option<ParamId> {
        self.infos.iter().position(|i| i.name == name).map(ParamId)
    }

    pub fn scalar_count(&self) -> usize {
        self.values.iter().map(Array::len).sum()
    }

    /// All parameters concatenated as little-endian f64 bytes.
    pub fn to_le_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.scalar_count() * 8);
        for v in &self.values {
            for x in v.data() {
                out.extend_from_slice(&x.to_le_bytes());
            }
        }
        out
    }

    /// Overwrites all parameters from a payload written by [`to_le_bytes`].
    ///
    /// [`to_le_bytes`]: ParamStore::to_le_bytes
    pub fn load_le_bytes(&mut self, bytes: &[u8]) -> Result<()> {
        if bytes.len() != self.scalar_count() * 8 {
            return Err(Error::Config(format!(
                "parameter payload has {} bytes, expected {}",
                bytes.len(),
                self.scalar_count() * 8
            )));
        }
        let mut chunks = bytes.chunks_exact(8);
        for v in &mut self.values {
            for x in v.data_mut() {
                let c = chunks.next().unwrap();
                *x = f64::from_le_bytes(c.try_into().unwrap());
            }
        }
        Ok(())
    }
}

/// Gradient accumulator aligned with a [`ParamStore`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    grads: Vec<Array>,
}

impl Gradients {
    pub fn zeros_like(params: &ParamStore) -> Self {
        Self {
            grads: params
                .values
                .iter()
                .map(|v| Array::zeros(v.rows(), v.cols()))
                .collect(),
        }
    }

    pub fn get(&self, id: ParamId) -> &Array {
        &self.grads[id.0]
    }

    pub fn get_mut(&mut self, id: ParamId) -> &mut Array {
        &mut self.grads[id.0]
    }

    pub fn iter(&self) -> impl Iterator<Item = (ParamId, &Array)> {
        self.grads.iter().enumerate().map(|(i, g)| (ParamId(i), g))
    }

    pub fn global_norm(&self) -> f64 {
        self.grads.iter().map(Array::sum_squares).sum::<f64>().sqrt()
    }

    pub fn scale(&mut self, s: f64) {
        for g in &mut self.grads {
            g.scale_assign(s);
        }
    }

    pub fn clear(&mut self) {
        for g in &mut self.grads {
            g.data_mut().fill(0.0);
        }
    }

    pub fn is_finite(&self) -> bool {
        self.grads.iter().all(Array::is_finite)
    }
}
