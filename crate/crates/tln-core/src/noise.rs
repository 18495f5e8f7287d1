//! Temporal label-noise functions.
//!
//! A noise function maps a time step `t` to a row-stochastic, diagonally
//! dominant `C×C` matrix whose `(i, j)` entry is the probability of
//! observing noisy label `j` given clean label `i`. Parametric families
//! (static, linear, decay, growth, periodic, and a mixed per-class regime)
//! produce a per-class flip rate `rho_i(t)` which is split uniformly over
//! the `C-1` off-diagonal entries of row `i`.
//!
//! Every family is evaluated as `offset + amplitude · shape(t)` and clamped
//! into `[RHO_MIN, RHO_MAX]`, which keeps the raw textbook forms (e.g. a
//! sine spanning [0, 1]) inside the diagonally dominant regime.

use alloc::format;
use alloc::vec::Vec;

use crate::data::{sample_categorical, SequenceDataset};
use crate::error::{Error, Result};
use crate::math;
use crate::rng;
use crate::tensor::Tensor;

/// Lower clamp for off-diagonal flip rates.
pub const RHO_MIN: f64 = 0.01;
/// Upper clamp; keeps rows strictly diagonally dominant.
pub const RHO_MAX: f64 = 0.49;
/// Row sums must match 1 within this tolerance.
pub const ROW_SUM_TOL: f64 = 1e-9;

// ---------------------------------------------------------------------------
// Matrix validation
// ---------------------------------------------------------------------------

/// A single violated matrix constraint.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    NotSquare { rows: usize, cols: usize },
    NonFinite { row: usize, col: usize, value: f64 },
    EntryOutOfRange { row: usize, col: usize, value: f64 },
    RowSumNotOne { row: usize, sum: f64 },
    NotDiagonallyDominant { row: usize, col: usize, diagonal: f64, entry: f64 },
}

impl core::fmt::Display for Violation {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            Violation::NotSquare { rows, cols } => write!(f, "matrix is {rows}x{cols}, not square"),
            Violation::NonFinite { row, col, value } => {
                write!(f, "entry ({row},{col}) is not finite: {value}")
            }
            Violation::EntryOutOfRange { row, col, value } => {
                write!(f, "entry ({row},{col}) = {value} outside [0, 1]")
            }
            Violation::RowSumNotOne { row, sum } => write!(f, "row {row} sums to {sum}"),
            Violation::NotDiagonallyDominant { row, col, diagonal, entry } => write!(
                f,
                "row {row} not diagonally dominant: diagonal {diagonal} <= entry ({row},{col}) = {entry}"
            ),
        }
    }
}

/// Check the noise-matrix invariants: entries in `[0, 1]`, rows summing to
/// one within [`ROW_SUM_TOL`], and a strictly dominant diagonal. Returns
/// every violation found.
pub fn validate_matrix(matrix: &Tensor) -> core::result::Result<(), Vec<Violation>> {
    let mut violations = Vec::new();
    let (rows, cols) = matrix.shape();
    if rows != cols || rows < 2 {
        violations.push(Violation::NotSquare { rows, cols });
        return Err(violations);
    }
    for i in 0..rows {
        let row = matrix.row(i);
        let mut sum = 0.0;
        for (j, &v) in row.iter().enumerate() {
            if !v.is_finite() {
                violations.push(Violation::NonFinite { row: i, col: j, value: v });
            } else if !(0.0..=1.0).contains(&v) {
                violations.push(Violation::EntryOutOfRange { row: i, col: j, value: v });
            }
            sum += v;
        }
        if (sum - 1.0).abs() > ROW_SUM_TOL {
            violations.push(Violation::RowSumNotOne { row: i, sum });
        }
        let diag = row[i];
        for (j, &v) in row.iter().enumerate() {
            if j != i && diag <= v {
                violations.push(Violation::NotDiagonallyDominant {
                    row: i,
                    col: j,
                    diagonal: diag,
                    entry: v,
                });
            }
        }
    }
    if violations.is_empty() {
        Ok(())
    } else {
        Err(violations)
    }
}

/// Row-stochastic, diagonally dominant `C×C` noise matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseMatrix {
    entries: Tensor,
}

impl NoiseMatrix {
    /// Validate and wrap a matrix.
    pub fn new(entries: Tensor) -> core::result::Result<Self, Vec<Violation>> {
        validate_matrix(&entries)?;
        Ok(Self { entries })
    }

    /// Build a matrix from per-row flip rates: row `i` has diagonal
    /// `1 - rho[i]` and `rho[i] / (C-1)` on every off-diagonal entry.
    /// Rates must already lie in `[RHO_MIN, RHO_MAX]`.
    pub fn from_row_rhos(rhos: &[f64]) -> Self {
        let c = rhos.len();
        debug_assert!(c >= 2);
        let mut entries = Tensor::zeros(c, c);
        for (i, &rho) in rhos.iter().enumerate() {
            debug_assert!((RHO_MIN..=RHO_MAX).contains(&rho), "rho {rho} outside clamp band");
            let off = rho / (c - 1) as f64;
            for j in 0..c {
                *entries.at_mut(i, j) = if i == j { 1.0 - rho } else { off };
            }
        }
        Self { entries }
    }

    pub fn classes(&self) -> usize {
        self.entries.rows()
    }

    pub fn entries(&self) -> &Tensor {
        &self.entries
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.entries.at(i, j)
    }

    pub fn into_entries(self) -> Tensor {
        self.entries
    }
}

/// Blend a row toward the identity row just enough to restore strict
/// diagonal dominance with a 0.01 gap. No-op for rows that already
/// dominate by that margin.
pub fn repair_dominance(row: &mut [f64], class: usize) {
    const MARGIN: f64 = 0.01;
    let diag = row[class];
    let worst_gap = row
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != class)
        .map(|(_, &v)| diag - v)
        .fold(f64::INFINITY, f64::min);
    if worst_gap >= MARGIN {
        return;
    }
    // (1-beta)*gap + beta*(1+0) >= MARGIN at the worst entry
    let beta = ((MARGIN - worst_gap) / (1.0 - worst_gap)).clamp(0.0, 1.0);
    for (j, v) in row.iter_mut().enumerate() {
        *v = (1.0 - beta) * *v + if j == class { beta } else { 0.0 };
    }
}

// ---------------------------------------------------------------------------
// Parametric families
// ---------------------------------------------------------------------------

/// Family label carried by a spec; determines how configs map onto
/// per-class shapes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseFamily {
    Static,
    Linear,
    Decay,
    Growth,
    Periodic,
    Mixed,
}

impl NoiseFamily {
    pub fn as_str(&self) -> &'static str {
        match self {
            NoiseFamily::Static => "static",
            NoiseFamily::Linear => "linear",
            NoiseFamily::Decay => "decay",
            NoiseFamily::Growth => "growth",
            NoiseFamily::Periodic => "periodic",
            NoiseFamily::Mixed => "mixed",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        Ok(match name {
            "static" => NoiseFamily::Static,
            "linear" => NoiseFamily::Linear,
            "decay" => NoiseFamily::Decay,
            "growth" => NoiseFamily::Growth,
            "periodic" => NoiseFamily::Periodic,
            "mixed" => NoiseFamily::Mixed,
            other => return Err(Error::InvalidSpec(format!("unknown noise family `{other}`"))),
        })
    }

    pub const ALL: [NoiseFamily; 6] = [
        NoiseFamily::Static,
        NoiseFamily::Linear,
        NoiseFamily::Decay,
        NoiseFamily::Growth,
        NoiseFamily::Periodic,
        NoiseFamily::Mixed,
    ];
}

/// Flip-rate curve for one class (one matrix row).
#[derive(Debug, Clone, PartialEq)]
pub enum RowShape {
    /// Constant `rho`.
    Static { rho: f64 },
    /// Linear interpolation from `rho_start` at `t = 1` to `rho_end` at `t = T`.
    Linear { rho_start: f64, rho_end: f64 },
    /// `offset + amplitude * exp(-rate * t)`.
    Decay { offset: f64, amplitude: f64, rate: f64 },
    /// `offset + amplitude / (1 + exp(-rate * (t - inflection)))`.
    Growth { offset: f64, amplitude: f64, rate: f64, inflection: f64 },
    /// `offset + amplitude * sin(frequency * t + phase)`.
    Periodic { offset: f64, amplitude: f64, frequency: f64, phase: f64 },
}

impl RowShape {
    /// Raw (unclamped) flip rate at real-valued time `t`.
    pub fn rho_raw(&self, t: f64, horizon: usize) -> f64 {
        match *self {
            RowShape::Static { rho } => rho,
            RowShape::Linear { rho_start, rho_end } => {
                if horizon <= 1 {
                    rho_start
                } else {
                    rho_start + (rho_end - rho_start) * (t - 1.0) / (horizon as f64 - 1.0)
                }
            }
            RowShape::Decay { offset, amplitude, rate } => offset + amplitude * math::exp(-rate * t),
            RowShape::Growth { offset, amplitude, rate, inflection } => {
                offset + amplitude / (1.0 + math::exp(-rate * (t - inflection)))
            }
            RowShape::Periodic { offset, amplitude, frequency, phase } => {
                offset + amplitude * math::sin(frequency * t + phase)
            }
        }
    }

    /// Flip rate clamped into `[RHO_MIN, RHO_MAX]`.
    pub fn rho(&self, t: f64, horizon: usize) -> f64 {
        self.rho_raw(t, horizon).clamp(RHO_MIN, RHO_MAX)
    }

    fn params_finite(&self) -> bool {
        match *self {
            RowShape::Static { rho } => rho.is_finite(),
            RowShape::Linear { rho_start, rho_end } => rho_start.is_finite() && rho_end.is_finite(),
            RowShape::Decay { offset, amplitude, rate } => {
                offset.is_finite() && amplitude.is_finite() && rate.is_finite()
            }
            RowShape::Growth { offset, amplitude, rate, inflection } => {
                offset.is_finite() && amplitude.is_finite() && rate.is_finite() && inflection.is_finite()
            }
            RowShape::Periodic { offset, amplitude, frequency, phase } => {
                offset.is_finite() && amplitude.is_finite() && frequency.is_finite() && phase.is_finite()
            }
        }
    }
}

/// A parametric temporal noise function: one flip-rate curve per class over
/// a horizon of `T` integer steps.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseFunctionSpec {
    pub classes: usize,
    pub horizon: usize,
    pub family: NoiseFamily,
    pub rows: Vec<RowShape>,
}

impl NoiseFunctionSpec {
    fn uniform(family: NoiseFamily, classes: usize, horizon: usize, shape: RowShape) -> Self {
        Self { classes, horizon, family, rows: alloc::vec![shape; classes] }
    }

    pub fn statical(classes: usize, horizon: usize, rho: f64) -> Self {
        Self::uniform(NoiseFamily::Static, classes, horizon, RowShape::Static { rho })
    }

    pub fn linear(classes: usize, horizon: usize, rho_start: f64, rho_end: f64) -> Self {
        Self::uniform(NoiseFamily::Linear, classes, horizon, RowShape::Linear { rho_start, rho_end })
    }

    pub fn decay(classes: usize, horizon: usize, offset: f64, amplitude: f64, rate: f64) -> Self {
        Self::uniform(NoiseFamily::Decay, classes, horizon, RowShape::Decay { offset, amplitude, rate })
    }

    pub fn growth(
        classes: usize,
        horizon: usize,
        offset: f64,
        amplitude: f64,
        rate: f64,
        inflection: f64,
    ) -> Self {
        Self::uniform(
            NoiseFamily::Growth,
            classes,
            horizon,
            RowShape::Growth { offset, amplitude, rate, inflection },
        )
    }

    pub fn periodic(
        classes: usize,
        horizon: usize,
        offset: f64,
        amplitude: f64,
        frequency: f64,
        phase: f64,
    ) -> Self {
        Self::uniform(
            NoiseFamily::Periodic,
            classes,
            horizon,
            RowShape::Periodic { offset, amplitude, frequency, phase },
        )
    }

    /// Mixed regime: class 0 noise grows, class 1 noise decays, remaining
    /// classes static.
    pub fn mixed(
        classes: usize,
        horizon: usize,
        growth: RowShape,
        decay: RowShape,
        static_rho: f64,
    ) -> Self {
        let mut rows = Vec::with_capacity(classes);
        rows.push(growth);
        rows.push(decay);
        for _ in 2..classes {
            rows.push(RowShape::Static { rho: static_rho });
        }
        Self { classes, horizon, family: NoiseFamily::Mixed, rows }
    }

    /// Benchmark regime for `family` with roughly 30% mean noise over the
    /// horizon, matching the shapes used for the comparative experiments.
    pub fn benchmark_regime(family: NoiseFamily, classes: usize, horizon: usize) -> Self {
        let t = horizon as f64;
        let growth = RowShape::Growth {
            offset: 0.15,
            amplitude: 0.3,
            rate: 8.0 / t,
            inflection: t / 2.0,
        };
        let decay = RowShape::Decay { offset: 0.2, amplitude: 0.29, rate: 3.0 / t };
        match family {
            NoiseFamily::Static => Self::statical(classes, horizon, 0.3),
            NoiseFamily::Linear => Self::linear(classes, horizon, 0.4, 0.2),
            NoiseFamily::Decay => Self::uniform(family, classes, horizon, decay),
            NoiseFamily::Growth => Self::uniform(family, classes, horizon, growth),
            NoiseFamily::Periodic => {
                // two full periods across the horizon, mean 0.3
                Self::periodic(classes, horizon, 0.3, 0.2, 4.0 * core::f64::consts::PI / t, 0.0)
            }
            NoiseFamily::Mixed => Self::mixed(classes, horizon, growth, decay, 0.3),
        }
    }

    /// Identity-like corruption: constant minimal flip rate.
    pub fn near_identity(classes: usize, horizon: usize) -> Self {
        Self::statical(classes, horizon, RHO_MIN)
    }

    pub fn validate(&self) -> Result<()> {
        if self.classes < 2 {
            return Err(Error::InvalidSpec("noise spec needs >= 2 classes".into()));
        }
        if self.horizon == 0 {
            return Err(Error::InvalidSpec("noise spec needs horizon >= 1".into()));
        }
        if self.rows.len() != self.classes {
            return Err(Error::InvalidSpec(format!(
                "noise spec has {} row shapes for {} classes",
                self.rows.len(),
                self.classes
            )));
        }
        if self.rows.iter().any(|r| !r.params_finite()) {
            return Err(Error::InvalidSpec("noise parameters must be finite".into()));
        }
        Ok(())
    }

    /// How many `(row, t)` cells get clamped into the admissible band, plus
    /// the first offender; used by the harness to warn once per spec.
    pub fn clamp_summary(&self) -> Option<ClampSummary> {
        let mut count = 0usize;
        let mut first = None;
        for t in 1..=self.horizon {
            for (row, shape) in self.rows.iter().enumerate() {
                let raw = shape.rho_raw(t as f64, self.horizon);
                if !(RHO_MIN..=RHO_MAX).contains(&raw) {
                    count += 1;
                    if first.is_none() {
                        first = Some((t, row));
                    }
                }
            }
        }
        first.map(|(t, row)| ClampSummary { clamped_cells: count, first_step: t, first_row: row })
    }
}

/// Clamping report for a spec; emitted (once) as a warning by callers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ClampSummary {
    pub clamped_cells: usize,
    pub first_step: usize,
    pub first_row: usize,
}

// ---------------------------------------------------------------------------
// Evaluation and application
// ---------------------------------------------------------------------------

/// Noise matrix at integer step `t ∈ [1, T]`.
pub fn eval_noise(spec: &NoiseFunctionSpec, t: usize) -> NoiseMatrix {
    assert!(
        t >= 1 && t <= spec.horizon,
        "eval_noise: step {t} outside [1, {}]",
        spec.horizon
    );
    let rhos: Vec<f64> = spec.rows.iter().map(|r| r.rho(t as f64, spec.horizon)).collect();
    NoiseMatrix::from_row_rhos(&rhos)
}

/// The full path `{Q_t}` for `t = 1..=T`.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseTrajectory {
    matrices: Vec<NoiseMatrix>,
}

impl NoiseTrajectory {
    pub fn from_matrices(matrices: Vec<NoiseMatrix>) -> Self {
        assert!(!matrices.is_empty(), "trajectory must cover at least one step");
        let c = matrices[0].classes();
        assert!(matrices.iter().all(|m| m.classes() == c), "trajectory class counts differ");
        Self { matrices }
    }

    /// The same matrix repeated at every step.
    pub fn constant(matrix: NoiseMatrix, horizon: usize) -> Self {
        Self::from_matrices(alloc::vec![matrix; horizon])
    }

    pub fn identity(classes: usize, horizon: usize) -> Self {
        let m = NoiseMatrix::new(Tensor::identity(classes)).expect("identity is valid");
        Self::constant(m, horizon)
    }

    pub fn horizon(&self) -> usize {
        self.matrices.len()
    }

    pub fn classes(&self) -> usize {
        self.matrices[0].classes()
    }

    /// Matrix at 1-based step `t`.
    pub fn at_step(&self, t: usize) -> &NoiseMatrix {
        &self.matrices[t - 1]
    }

    pub fn matrices(&self) -> &[NoiseMatrix] {
        &self.matrices
    }
}

/// Tabulate the spec over its horizon.
pub fn sample_trajectory(spec: &NoiseFunctionSpec) -> NoiseTrajectory {
    NoiseTrajectory::from_matrices((1..=spec.horizon).map(|t| eval_noise(spec, t)).collect())
}

/// Entrywise mean of the trajectory with rows renormalized (a no-op up to
/// rounding, since every summand row sums to one).
pub fn average_noise(spec: &NoiseFunctionSpec) -> NoiseMatrix {
    let c = spec.classes;
    let mut mean = Tensor::zeros(c, c);
    for t in 1..=spec.horizon {
        let q = eval_noise(spec, t);
        for (m, &v) in mean.data_mut().iter_mut().zip(q.entries().data()) {
            *m += v;
        }
    }
    let scale = 1.0 / spec.horizon as f64;
    for v in mean.data_mut() {
        *v *= scale;
    }
    for i in 0..c {
        let sum: f64 = mean.row(i).iter().sum();
        for v in mean.row_mut(i) {
            *v /= sum;
        }
    }
    NoiseMatrix::new(mean).expect("mean of valid matrices is valid")
}

/// Corrupt the clean labels of every sequence: at each step the noisy label
/// is drawn from row `y_t` of `Q_t`, independently. Clean labels are kept.
/// Each sequence uses its own seed-derived stream.
pub fn corrupt_labels(
    dataset: &SequenceDataset,
    spec: &NoiseFunctionSpec,
    seed: u64,
) -> Result<SequenceDataset> {
    spec.validate()?;
    if dataset.classes() != spec.classes {
        return Err(Error::ClassCountMismatch { expected: spec.classes, found: dataset.classes() });
    }
    if dataset.horizon() != spec.horizon {
        return Err(Error::DimensionMismatch {
            what: "dataset horizon vs noise spec horizon",
            left: (dataset.horizon(), 1),
            right: (spec.horizon, 1),
        });
    }
    let trajectory = sample_trajectory(spec);
    let mut corrupted = dataset.clone();
    for (i, seq) in corrupted.sequences_mut().iter_mut().enumerate() {
        let mut stream = rng::derive(seed, i as u64);
        let noisy = seq
            .clean_labels
            .iter()
            .enumerate()
            .map(|(t0, &y)| {
                let q = trajectory.at_step(t0 + 1);
                sample_categorical(q.entries().row(y as usize), &mut stream)
            })
            .collect();
        seq.noisy_labels = Some(noisy);
    }
    corrupted.provenance.source = format!(
        "{} + noise({}, seed={seed})",
        corrupted.provenance.source,
        spec.family.as_str()
    );
    Ok(corrupted)
}

/// Time-averaged entrywise mean absolute difference between two
/// trajectories, as a fraction in `[0, 1]`.
pub fn approximation_error(truth: &NoiseTrajectory, estimate: &NoiseTrajectory) -> Result<f64> {
    if truth.horizon() != estimate.horizon() || truth.classes() != estimate.classes() {
        return Err(Error::DimensionMismatch {
            what: "trajectory shapes",
            left: (truth.horizon(), truth.classes()),
            right: (estimate.horizon(), estimate.classes()),
        });
    }
    let cells = (truth.horizon() * truth.classes() * truth.classes()) as f64;
    let mut total = 0.0;
    for (q, q_hat) in truth.matrices().iter().zip(estimate.matrices()) {
        for (&a, &b) in q.entries().data().iter().zip(q_hat.entries().data()) {
            total += (a - b).abs();
        }
    }
    Ok(total / cells)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{generate_hmm, HmmSpec};

    #[test]
    fn static_family_yields_constant_matrix() {
        let spec = NoiseFunctionSpec::statical(2, 10, 0.3);
        for t in [1usize, 5, 10] {
            let q = eval_noise(&spec, t);
            assert_eq!(q.entries().data(), &[0.7, 0.3, 0.3, 0.7]);
        }
        let traj = sample_trajectory(&spec);
        assert!(traj.matrices().iter().all(|m| m == traj.at_step(1)));
    }

    #[test]
    fn raw_periodic_form_clamps_at_sine_trough() {
        // offset 1/2, amplitude 1/2: at phase -pi/2 the raw rate is 0 and
        // clamps to RHO_MIN.
        let shape = RowShape::Periodic {
            offset: 0.5,
            amplitude: 0.5,
            frequency: 0.0,
            phase: -core::f64::consts::FRAC_PI_2,
        };
        assert!(shape.rho_raw(1.0, 10).abs() < 1e-12);
        assert_eq!(shape.rho(1.0, 10), RHO_MIN);
        let spec = NoiseFunctionSpec {
            classes: 2,
            horizon: 10,
            family: NoiseFamily::Periodic,
            rows: alloc::vec![shape; 2],
        };
        let q = eval_noise(&spec, 1);
        assert!((q.at(0, 1) - RHO_MIN).abs() < 1e-12);
        assert!(spec.clamp_summary().is_some());
    }

    #[test]
    fn decay_at_time_zero_equals_amplitude() {
        let shape = RowShape::Decay { offset: 0.0, amplitude: 0.4, rate: 0.05 };
        assert!((shape.rho_raw(0.0, 50) - 0.4).abs() < 1e-12);
    }

    #[test]
    fn linear_family_is_strictly_decreasing() {
        let spec = NoiseFunctionSpec::linear(2, 20, 0.4, 0.2);
        let traj = sample_trajectory(&spec);
        for t in 2..=20 {
            assert!(traj.at_step(t).at(0, 1) < traj.at_step(t - 1).at(0, 1));
        }
        assert!((traj.at_step(1).at(0, 1) - 0.4).abs() < 1e-12);
        assert!((traj.at_step(20).at(0, 1) - 0.2).abs() < 1e-12);
    }

    #[test]
    fn periodic_with_integer_periods_averages_to_offset() {
        let horizon = 40;
        let spec = NoiseFunctionSpec::periodic(
            2,
            horizon,
            0.29,
            0.15,
            2.0 * core::f64::consts::PI * 2.0 / horizon as f64,
            0.0,
        );
        // numeric summation oracle over the same grid
        let oracle: f64 = (1..=horizon)
            .map(|t| spec.rows[0].rho(t as f64, horizon))
            .sum::<f64>()
            / horizon as f64;
        let avg = average_noise(&spec);
        assert!((avg.at(0, 1) - oracle).abs() < 1e-12);
        assert!((oracle - 0.29).abs() < 1.0 / horizon as f64);
    }

    #[test]
    fn average_of_linear_is_midpoint_within_half_step() {
        let t = 25;
        let spec = NoiseFunctionSpec::linear(2, t, 0.4, 0.2);
        let avg = average_noise(&spec);
        assert!((avg.at(0, 1) - 0.3).abs() < 1.0 / (2.0 * t as f64));
        assert!((avg.at(0, 0) - 0.7).abs() < 1.0 / (2.0 * t as f64));
    }

    #[test]
    fn validate_matrix_flags_each_violation() {
        assert!(validate_matrix(&Tensor::identity(3)).is_ok());

        let not_dominant = Tensor::new(2, 2, vec![0.4, 0.6, 0.3, 0.7]);
        let violations = validate_matrix(&not_dominant).unwrap_err();
        assert!(violations
            .iter()
            .any(|v| matches!(v, Violation::NotDiagonallyDominant { row: 0, .. })));

        let bad_sums = Tensor::new(2, 2, vec![0.8, 0.1, 0.2, 0.8]);
        let violations = validate_matrix(&bad_sums).unwrap_err();
        assert!(violations.iter().all(|v| matches!(v, Violation::RowSumNotOne { row: 0, .. })));
        assert_eq!(violations.len(), 1);

        let rect = Tensor::zeros(2, 3);
        assert!(matches!(
            validate_matrix(&rect).unwrap_err()[0],
            Violation::NotSquare { rows: 2, cols: 3 }
        ));
    }

    #[test]
    fn every_family_produces_valid_matrices_everywhere() {
        for family in NoiseFamily::ALL {
            for classes in [2usize, 3, 5] {
                let spec = NoiseFunctionSpec::benchmark_regime(family, classes, 60);
                spec.validate().unwrap();
                for t in 1..=60 {
                    let q = eval_noise(&spec, t);
                    validate_matrix(q.entries()).unwrap_or_else(|v| {
                        panic!("{family:?} C={classes} t={t}: {v:?}");
                    });
                }
            }
        }
    }

    #[test]
    fn corruption_is_reproducible_and_keeps_clean_labels() {
        let data = generate_hmm(&HmmSpec::new(50, 2, 12, 2, 3)).unwrap();
        let spec = NoiseFunctionSpec::statical(2, 12, 0.3);
        let a = corrupt_labels(&data, &spec, 11).unwrap();
        let b = corrupt_labels(&data, &spec, 11).unwrap();
        assert_eq!(a, b);
        let c = corrupt_labels(&data, &spec, 12).unwrap();
        assert_ne!(a, c);
        for (orig, noisy) in data.sequences().iter().zip(a.sequences()) {
            assert_eq!(orig.clean_labels, noisy.clean_labels);
            assert!(noisy.noisy_labels.is_some());
        }
    }

    #[test]
    fn corruption_rejects_class_mismatch() {
        let data = generate_hmm(&HmmSpec::new(10, 2, 6, 2, 3)).unwrap();
        let spec = NoiseFunctionSpec::statical(3, 6, 0.3);
        assert!(matches!(
            corrupt_labels(&data, &spec, 0),
            Err(Error::ClassCountMismatch { expected: 3, found: 2 })
        ));
    }

    #[test]
    fn minimal_noise_flip_rate_is_near_epsilon() {
        // rho == RHO_MIN, n*T = 1e5 draws: empirical flip rate 0.01 ± 0.003
        let data = generate_hmm(&HmmSpec::new(5000, 1, 20, 2, 21)).unwrap();
        let spec = NoiseFunctionSpec::near_identity(2, 20);
        let noisy = corrupt_labels(&data, &spec, 5).unwrap();
        let mut flips = 0usize;
        let mut total = 0usize;
        for s in noisy.sequences() {
            for (y, z) in s.clean_labels.iter().zip(s.noisy_labels.as_ref().unwrap()) {
                flips += (y != z) as usize;
                total += 1;
            }
        }
        let rate = flips as f64 / total as f64;
        assert!((rate - 0.01).abs() < 0.003, "rate {rate}");
    }

    #[test]
    fn static_per_step_flip_rates_within_three_sigma() {
        let n = 10_000;
        let horizon = 10;
        let data = generate_hmm(&HmmSpec::new(n, 1, horizon, 2, 77)).unwrap();
        let spec = NoiseFunctionSpec::statical(2, horizon, 0.3);
        let noisy = corrupt_labels(&data, &spec, 6).unwrap();
        let mut ok = 0usize;
        for t in 0..horizon {
            let mut flips = 0usize;
            for s in noisy.sequences() {
                flips +=
                    (s.clean_labels[t] != s.noisy_labels.as_ref().unwrap()[t]) as usize;
            }
            let rate = flips as f64 / n as f64;
            let sigma = (0.3 * 0.7 / n as f64).sqrt();
            if (rate - 0.3).abs() < 3.0 * sigma {
                ok += 1;
            }
        }
        assert!(ok >= horizon - 1, "{ok}/{horizon} steps within bounds");
    }

    #[test]
    fn mixed_regime_class_zero_noise_grows() {
        let n = 10_000;
        let horizon = 30;
        let data = generate_hmm(&HmmSpec::new(n, 1, horizon, 2, 123)).unwrap();
        let spec = NoiseFunctionSpec::benchmark_regime(NoiseFamily::Mixed, 2, horizon);
        let noisy = corrupt_labels(&data, &spec, 9).unwrap();
        let flip_rate_class0 = |t: usize| {
            let mut flips = 0usize;
            let mut count = 0usize;
            for s in noisy.sequences() {
                if s.clean_labels[t] == 0 {
                    count += 1;
                    flips += (s.noisy_labels.as_ref().unwrap()[t] != 0) as usize;
                }
            }
            flips as f64 / count as f64
        };
        assert!(flip_rate_class0(horizon - 1) > flip_rate_class0(0));
    }

    #[test]
    fn approximation_error_basics() {
        let truth = sample_trajectory(&NoiseFunctionSpec::statical(2, 10, 0.3));
        assert_eq!(approximation_error(&truth, &truth).unwrap(), 0.0);

        let coarser = sample_trajectory(&NoiseFunctionSpec::statical(2, 10, 0.4));
        let err = approximation_error(&truth, &coarser).unwrap();
        assert!((err - 0.1).abs() < 1e-12);
        // symmetry
        let rev = approximation_error(&coarser, &truth).unwrap();
        assert_eq!(err, rev);

        let other = sample_trajectory(&NoiseFunctionSpec::statical(2, 5, 0.3));
        assert!(approximation_error(&truth, &other).is_err());
    }

    #[test]
    fn periodic_truth_vs_time_average_matches_mean_abs_sine() {
        // amplitude 0.2 with integer periods: MAE to the time-average is
        // (2/pi)*0.2 ≈ 0.127 up to grid discretization.
        let horizon = 100;
        let spec = NoiseFunctionSpec::periodic(
            2,
            horizon,
            0.29,
            0.2,
            2.0 * core::f64::consts::PI * 2.0 / horizon as f64,
            0.0,
        );
        let truth = sample_trajectory(&spec);
        let static_avg = NoiseTrajectory::constant(average_noise(&spec), horizon);
        let err = approximation_error(&truth, &static_avg).unwrap();
        let expected = 2.0 / core::f64::consts::PI * 0.2;
        assert!((err - expected).abs() < 0.005, "err {err} vs {expected}");
    }

    #[test]
    fn repair_dominance_blends_toward_identity() {
        let mut row = [0.4, 0.6];
        repair_dominance(&mut row, 0);
        assert!((row[0] + row[1] - 1.0).abs() < 1e-12);
        assert!(row[0] - row[1] >= 0.01 - 1e-12);

        let mut fine = [0.8, 0.2];
        repair_dominance(&mut fine, 0);
        assert_eq!(fine, [0.8, 0.2]);
    }

    #[test]
    fn benchmark_regimes_average_near_thirty_percent() {
        for family in NoiseFamily::ALL {
            let spec = NoiseFunctionSpec::benchmark_regime(family, 2, 50);
            let avg = average_noise(&spec);
            for row in 0..2 {
                let off = avg.at(row, 1 - row);
                assert!((off - 0.3).abs() < 0.02, "{family:?} row {row}: mean {off}");
            }
        }
    }
}
