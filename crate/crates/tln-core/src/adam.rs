//! Adam optimizer with bias correction.

use alloc::string::ToString;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;
use crate::params::ParamSet;
use crate::tensor::Tensor;

pub const DEFAULT_BETA1: f64 = 0.9;
pub const DEFAULT_BETA2: f64 = 0.999;
pub const DEFAULT_EPSILON: f64 = 1e-8;

/// Optimizer state: first/second moment accumulators per parameter plus the
/// step counter used for bias correction. Moments start at zero and are
/// allocated on the first step.
#[derive(Debug, Clone)]
pub struct Adam {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    step: u64,
    first_moment: Vec<Tensor>,
    second_moment: Vec<Tensor>,
}

impl Adam {
    pub fn new(learning_rate: f64) -> Self {
        Self {
            learning_rate,
            beta1: DEFAULT_BETA1,
            beta2: DEFAULT_BETA2,
            epsilon: DEFAULT_EPSILON,
            step: 0,
            first_moment: Vec::new(),
            second_moment: Vec::new(),
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// One Adam update. `grads` must align with `params` (same order, same
    /// shapes). A NaN/Inf gradient aborts before touching any state.
    pub fn step(&mut self, params: &mut ParamSet, grads: &[Tensor]) -> Result<()> {
        assert_eq!(params.len(), grads.len(), "adam: {} params vs {} grads", params.len(), grads.len());
        for (i, g) in grads.iter().enumerate() {
            if !g.all_finite() {
                return Err(Error::NonFiniteGradient { param: params.name(i).to_string() });
            }
        }
        if self.first_moment.is_empty() {
            self.first_moment = params
                .tensors()
                .iter()
                .map(|t| Tensor::zeros(t.rows(), t.cols()))
                .collect();
            self.second_moment = self.first_moment.clone();
        }

        self.step += 1;
        let t = self.step as i32;
        let bias1 = 1.0 - math::powi(self.beta1, t);
        let bias2 = 1.0 - math::powi(self.beta2, t);

        for ((p, g), (m, v)) in params
            .tensors_mut()
            .iter_mut()
            .zip(grads)
            .zip(self.first_moment.iter_mut().zip(self.second_moment.iter_mut()))
        {
            assert_eq!(p.shape(), g.shape(), "adam: parameter/gradient shape mismatch");
            for ((pv, &gv), (mv, vv)) in p
                .data_mut()
                .iter_mut()
                .zip(g.data())
                .zip(m.data_mut().iter_mut().zip(v.data_mut().iter_mut()))
            {
                *mv = self.beta1 * *mv + (1.0 - self.beta1) * gv;
                *vv = self.beta2 * *vv + (1.0 - self.beta2) * gv * gv;
                let m_hat = *mv / bias1;
                let v_hat = *vv / bias2;
                *pv -= self.learning_rate * m_hat / (math::sqrt(v_hat) + self.epsilon);
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single_param(value: f64) -> ParamSet {
        let mut set = ParamSet::new();
        set.push("w", Tensor::scalar(value));
        set
    }

    #[test]
    fn zero_gradient_leaves_params_and_moments_untouched() {
        let mut params = single_param(1.5);
        let mut adam = Adam::new(0.01);
        adam.step(&mut params, &[Tensor::scalar(0.0)]).unwrap();
        assert_eq!(params.tensors()[0].scalar_value(), 1.5);
        assert_eq!(adam.first_moment[0].scalar_value(), 0.0);
        assert_eq!(adam.second_moment[0].scalar_value(), 0.0);
        assert_eq!(adam.step_count(), 1);
    }

    #[test]
    fn first_step_moves_by_learning_rate() {
        // Bias-corrected first step: m_hat = g, v_hat = g², so the update is
        // lr·g/(|g|+eps) ≈ lr.
        let mut params = single_param(1.0);
        let mut adam = Adam::new(0.01);
        adam.step(&mut params, &[Tensor::scalar(1.0)]).unwrap();
        let moved = 1.0 - params.tensors()[0].scalar_value();
        assert!((moved - 0.01).abs() < 1e-9, "moved {moved}");
    }

    #[test]
    fn two_steps_move_strictly_further_than_one() {
        let mut one = single_param(1.0);
        let mut a1 = Adam::new(0.01);
        a1.step(&mut one, &[Tensor::scalar(1.0)]).unwrap();

        let mut two = single_param(1.0);
        let mut a2 = Adam::new(0.01);
        a2.step(&mut two, &[Tensor::scalar(1.0)]).unwrap();
        a2.step(&mut two, &[Tensor::scalar(1.0)]).unwrap();

        let d1 = 1.0 - one.tensors()[0].scalar_value();
        let d2 = 1.0 - two.tensors()[0].scalar_value();
        assert!(d2 > d1);
    }

    #[test]
    fn non_finite_gradient_reports_parameter_name() {
        let mut params = single_param(1.0);
        let mut adam = Adam::new(0.01);
        let err = adam.step(&mut params, &[Tensor::scalar(f64::NAN)]).unwrap_err();
        assert_eq!(err, Error::NonFiniteGradient { param: "w".into() });
        // state untouched
        assert_eq!(adam.step_count(), 0);
        assert_eq!(params.tensors()[0].scalar_value(), 1.0);
    }
}
