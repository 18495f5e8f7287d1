//! Named parameter collections shared by models and the optimizer.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::math;
use crate::tensor::Tensor;

/// Ordered set of named parameter tensors.
///
/// The registration order is the contract between a model, the tape (which
/// receives the tensors as gradient targets in the same order), the
/// optimizer, and checkpoint files.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamSet {
    names: Vec<String>,
    tensors: Vec<Tensor>,
}

impl ParamSet {
    pub fn new() -> Self {
        Self { names: Vec::new(), tensors: Vec::new() }
    }

    pub fn push(&mut self, name: &str, tensor: Tensor) -> usize {
        self.names.push(name.to_string());
        self.tensors.push(tensor);
        self.tensors.len() - 1
    }

    /// Register a `rows×cols` tensor drawn uniformly from
    /// `[-1/sqrt(fan_in), +1/sqrt(fan_in)]`.
    pub fn push_uniform(
        &mut self,
        name: &str,
        rows: usize,
        cols: usize,
        fan_in: usize,
        rng: &mut ChaCha8Rng,
    ) -> usize {
        let scale = 1.0 / math::sqrt(fan_in.max(1) as f64);
        let data = (0..rows * cols)
            .map(|_| (2.0 * rng.gen::<f64>() - 1.0) * scale)
            .collect();
        self.push(name, Tensor::new(rows, cols, data))
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    pub fn name(&self, i: usize) -> &str {
        &self.names[i]
    }

    pub fn tensors(&self) -> &[Tensor] {
        &self.tensors
    }

    pub fn tensors_mut(&mut self) -> &mut [Tensor] {
        &mut self.tensors
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Tensor)> {
        self.names.iter().map(String::as_str).zip(self.tensors.iter())
    }

    /// Total number of scalar parameters.
    pub fn scalar_count(&self) -> usize {
        self.tensors.iter().map(Tensor::len).sum()
    }
}

impl Default for ParamSet {
    fn default() -> Self {
        Self::new()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    #[test]
    fn uniform_init_respects_fan_in_bound() {
        let mut rng = rng::seeded(3);
        let mut set = ParamSet::new();
        set.push_uniform("w", 16, 16, 16, &mut rng);
        let bound = 0.25;
        assert!(set.tensors()[0].data().iter().all(|v| v.abs() <= bound));
        assert!(set.tensors()[0].data().iter().any(|v| v.abs() > bound * 0.5));
    }

    #[test]
    fn registration_order_is_stable() {
        let mut set = ParamSet::new();
        set.push("a", Tensor::zeros(1, 1));
        set.push("b", Tensor::zeros(2, 2));
        assert_eq!(set.name(0), "a");
        assert_eq!(set.name(1), "b");
        assert_eq!(set.scalar_count(), 5);
    }
}
