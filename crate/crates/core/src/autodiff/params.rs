use indexmap::IndexMap;
use rand::Rng;

use super::Tensor;
use crate::error::{Error, Result};

/// Named trainable tensors, kept in insertion order so that iteration (and
/// therefore serialization and optimizer updates) is deterministic.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ParamStore {
    tensors: IndexMap<String, Tensor>,
}

impl ParamStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: impl Into<String>, tensor: Tensor) {
        self.tensors.insert(name.into(), tensor);
    }

    pub fn get(&self, name: &str) -> Result<&Tensor> {
        self.tensors
            .get(name)
            .ok_or_else(|| Error::UnboundInput(name.to_string()))
    }

    pub fn get_mut(&mut self, name: &str) -> Result<&mut Tensor> {
        self.tensors
            .get_mut(name)
            .ok_or_else(|| Error::UnboundInput(name.to_string()))
    }

    /// A copy without `name`, keeping the order of the rest.
    pub fn without(&self, name: &str) -> Self {
        let mut tensors = self.tensors.clone();
        tensors.shift_remove(name);
        Self { tensors }
    }

    pub fn contains(&self, name: &str) -> bool {
        self.tensors.contains_key(name)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Tensor)> {
        self.tensors.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = (&str, &mut Tensor)> {
        self.tensors.iter_mut().map(|(k, v)| (k.as_str(), v))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.tensors.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    /// Total number of scalar parameters.
    pub fn numel(&self) -> usize {
        self.tensors.values().map(Tensor::len).sum()
    }

    /// Glorot-uniform matrix: entries drawn from ±sqrt(6 / (fan_in + fan_out)).
    pub fn insert_glorot<R: Rng + ?Sized>(
        &mut self,
        name: impl Into<String>,
        rows: usize,
        cols: usize,
        rng: &mut R,
    ) {
        let limit = (6.0 / (rows + cols) as f64).sqrt();
        let data = (0..rows * cols)
            .map(|_| rng.random_range(-limit..=limit))
            .collect();
        self.insert(name, Tensor::new(vec![rows, cols], data).expect("shape"));
    }
}

/// Gradient accumulators keyed by parameter name. Shapes mirror the
/// parameters they belong to.
#[derive(Clone, Debug, Default)]
pub struct Gradients {
    by_name: IndexMap<String, Tensor>,
}

impl Gradients {
    pub fn zeros_like(params: &ParamStore) -> Self {
        Self {
            by_name: params
                .iter()
                .map(|(k, t)| (k.to_string(), Tensor::zeros(t.shape())))
                .collect(),
        }
    }

    pub fn get(&self, name: &str) -> Option<&Tensor> {
        self.by_name.get(name)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Tensor)> {
        self.by_name.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub(crate) fn accumulate(&mut self, name: &str, grad: &Tensor) {
        match self.by_name.get_mut(name) {
            Some(acc) => acc.add_assign(grad),
            None => {
                self.by_name.insert(name.to_string(), grad.clone());
            }
        }
    }

    /// Adds another gradient map scaled by `weight`.
    pub fn merge_scaled(&mut self, other: &Gradients, weight: f64) {
        for (name, g) in other.iter() {
            let scaled = g.map(|v| v * weight);
            self.accumulate(name, &scaled);
        }
    }

    pub fn global_norm(&self) -> f64 {
        self.by_name
            .values()
            .map(Tensor::squared_norm)
            .sum::<f64>()
            .sqrt()
    }

    pub fn scale(&mut self, factor: f64) {
        for g in self.by_name.values_mut() {
            for v in g.data_mut() {
                *v *= factor;
            }
        }
    }
}
