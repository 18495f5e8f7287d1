//! Central finite-difference gradient checking.

use crate::params::ParamSet;
use crate::tensor::Tensor;

/// Compare analytic gradients against central finite differences of `f`.
///
/// Returns the maximum over all parameter coordinates of
/// `|analytic - numeric| / max(1e-12, |analytic| + |numeric|)`.
/// `f` must be deterministic; `step` must be positive.
pub fn finite_difference_check<F>(
    f: F,
    params: &ParamSet,
    analytic: &[Tensor],
    step: f64,
) -> f64
where
    F: Fn(&ParamSet) -> f64,
{
    assert!(step > 0.0, "finite_difference_check: step must be > 0");
    assert_eq!(params.len(), analytic.len(), "analytic gradient count mismatch");
    let mut work = params.clone();
    let mut worst: f64 = 0.0;
    for p in 0..params.len() {
        assert_eq!(params.tensors()[p].shape(), analytic[p].shape());
        for i in 0..params.tensors()[p].len() {
            let original = params.tensors()[p].data()[i];
            work.tensors_mut()[p].data_mut()[i] = original + step;
            let plus = f(&work);
            work.tensors_mut()[p].data_mut()[i] = original - step;
            let minus = f(&work);
            work.tensors_mut()[p].data_mut()[i] = original;
            let numeric = (plus - minus) / (2.0 * step);
            let exact = analytic[p].data()[i];
            let rel = (exact - numeric).abs() / (exact.abs() + numeric.abs()).max(1e-12);
            if rel > worst {
                worst = rel;
            }
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_quadratic_matches_closely() {
        let mut params = ParamSet::new();
        params.push("x", Tensor::scalar(3.0));
        let f = |p: &ParamSet| {
            let x = p.tensors()[0].scalar_value();
            x * x
        };
        let analytic = [Tensor::scalar(6.0)];
        let err = finite_difference_check(f, &params, &analytic, 1e-5);
        assert!(err < 1e-8, "relative error {err}");
    }

    #[test]
    fn constant_function_has_zero_error() {
        let mut params = ParamSet::new();
        params.push("x", Tensor::new(1, 3, vec![1.0, 2.0, 3.0]));
        let f = |_: &ParamSet| 42.0;
        let analytic = [Tensor::zeros(1, 3)];
        let err = finite_difference_check(f, &params, &analytic, 1e-5);
        assert_eq!(err, 0.0);
    }

    #[test]
    fn detects_wrong_gradient() {
        let mut params = ParamSet::new();
        params.push("x", Tensor::scalar(2.0));
        let f = |p: &ParamSet| p.tensors()[0].scalar_value().powi(2);
        let analytic = [Tensor::scalar(1.0)]; // wrong on purpose
        let err = finite_difference_check(f, &params, &analytic, 1e-5);
        assert!(err > 0.5);
    }
}
