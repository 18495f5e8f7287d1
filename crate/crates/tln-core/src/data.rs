//! Sequence datasets: synthetic HMM generation and train/test splitting.
//!
//! Labels are 0-based in memory (`0..C`); the 1-based convention of dataset
//! files is handled entirely by the loader. Feature matrices are stored
//! `T×d`, one row per time step.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::math;
use crate::rng;
use crate::tensor::Tensor;

/// Default emission variance of the synthetic HMM generator.
pub const DEFAULT_EMISSION_VARIANCE: f64 = 1.5;

/// One labeled sequence: features `T×d`, clean labels, optional noisy labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Sequence {
    pub id: String,
    /// Row `t` holds the feature vector observed at step `t+1`.
    pub features: Tensor,
    pub clean_labels: Vec<u32>,
    pub noisy_labels: Option<Vec<u32>>,
}

impl Sequence {
    pub fn horizon(&self) -> usize {
        self.features.rows()
    }

    pub fn dim(&self) -> usize {
        self.features.cols()
    }

    fn check(&self, classes: usize) -> Result<()> {
        if self.clean_labels.len() != self.horizon() {
            return Err(Error::DimensionMismatch {
                what: "sequence labels vs features",
                left: (self.clean_labels.len(), 1),
                right: (self.horizon(), self.dim()),
            });
        }
        if let Some(noisy) = &self.noisy_labels {
            if noisy.len() != self.horizon() {
                return Err(Error::DimensionMismatch {
                    what: "noisy labels vs features",
                    left: (noisy.len(), 1),
                    right: (self.horizon(), self.dim()),
                });
            }
        }
        for &l in self.clean_labels.iter().chain(self.noisy_labels.iter().flatten()) {
            if l as usize >= classes {
                return Err(Error::LabelOutOfRange { label: l, classes });
            }
        }
        Ok(())
    }
}

/// Where a dataset came from, for report provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct Provenance {
    pub source: String,
    pub seed: Option<u64>,
}

/// Homogeneous collection of sequences (shared `d`, `T`, `C`).
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceDataset {
    classes: usize,
    sequences: Vec<Sequence>,
    pub provenance: Provenance,
}

impl SequenceDataset {
    pub fn new(classes: usize, sequences: Vec<Sequence>, provenance: Provenance) -> Result<Self> {
        if classes < 2 {
            return Err(Error::InvalidSpec("class count must be >= 2".into()));
        }
        if sequences.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let (t, d) = (sequences[0].horizon(), sequences[0].dim());
        for s in &sequences {
            if s.horizon() != t || s.dim() != d {
                return Err(Error::DimensionMismatch {
                    what: "sequence shapes within dataset",
                    left: (t, d),
                    right: (s.horizon(), s.dim()),
                });
            }
            s.check(classes)?;
        }
        Ok(Self { classes, sequences, provenance })
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn len(&self) -> usize {
        self.sequences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sequences.is_empty()
    }

    pub fn horizon(&self) -> usize {
        self.sequences[0].horizon()
    }

    pub fn dim(&self) -> usize {
        self.sequences[0].dim()
    }

    pub fn sequences(&self) -> &[Sequence] {
        &self.sequences
    }

    pub(crate) fn sequences_mut(&mut self) -> &mut [Sequence] {
        &mut self.sequences
    }

    /// Estimator-facing view of this dataset: features and noisy labels
    /// only. Training code cannot see clean labels by construction.
    pub fn noisy_view(&self) -> Result<TrainSet<'_>> {
        let items = self
            .sequences
            .iter()
            .map(|s| {
                s.noisy_labels
                    .as_deref()
                    .map(|labels| NoisySequence { features: &s.features, labels })
                    .ok_or(Error::MissingNoisyLabels)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(TrainSet { classes: self.classes, items })
    }

    /// Training view that uses the clean labels as targets (for clean-label
    /// reference models).
    pub fn clean_view(&self) -> TrainSet<'_> {
        let items = self
            .sequences
            .iter()
            .map(|s| NoisySequence { features: &s.features, labels: &s.clean_labels })
            .collect();
        TrainSet { classes: self.classes, items }
    }
}

/// One sequence as seen by an estimator: no clean track.
#[derive(Debug, Clone, Copy)]
pub struct NoisySequence<'a> {
    pub features: &'a Tensor,
    pub labels: &'a [u32],
}

/// Estimator input: the only thing training procedures ever receive.
#[derive(Debug, Clone)]
pub struct TrainSet<'a> {
    pub classes: usize,
    pub items: Vec<NoisySequence<'a>>,
}

impl<'a> TrainSet<'a> {
    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn horizon(&self) -> usize {
        self.items[0].features.rows()
    }

    pub fn dim(&self) -> usize {
        self.items[0].features.cols()
    }
}

/// Synthetic HMM generator: uniform transition matrix, Gaussian emissions
/// with per-class mean equal to the 1-based class index.
#[derive(Debug, Clone, PartialEq)]
pub struct HmmSpec {
    pub n: usize,
    pub dim: usize,
    pub horizon: usize,
    pub classes: usize,
    pub emission_variance: f64,
    /// Row-stochastic `C×C` state transition matrix.
    pub transition: Tensor,
    pub seed: u64,
}

impl HmmSpec {
    pub fn new(n: usize, dim: usize, horizon: usize, classes: usize, seed: u64) -> Self {
        Self {
            n,
            dim,
            horizon,
            classes,
            emission_variance: DEFAULT_EMISSION_VARIANCE,
            transition: Tensor::filled(classes, classes, 1.0 / classes as f64),
            seed,
        }
    }

    pub fn with_variance(mut self, variance: f64) -> Self {
        self.emission_variance = variance;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.dim == 0 || self.horizon == 0 {
            return Err(Error::InvalidSpec("n, d, T must all be positive".into()));
        }
        if self.classes < 2 {
            return Err(Error::InvalidSpec("class count must be >= 2".into()));
        }
        if !(self.emission_variance > 0.0) {
            return Err(Error::InvalidSpec(format!(
                "emission variance must be > 0, got {}",
                self.emission_variance
            )));
        }
        if self.transition.shape() != (self.classes, self.classes) {
            return Err(Error::InvalidSpec("transition matrix must be CxC".into()));
        }
        for r in 0..self.classes {
            let sum: f64 = self.transition.row(r).iter().sum();
            if (sum - 1.0).abs() > 1e-9 || self.transition.row(r).iter().any(|&v| v < 0.0) {
                return Err(Error::InvalidSpec(format!("transition row {r} is not a distribution")));
            }
        }
        Ok(())
    }
}

/// Draw from a categorical distribution given its probability row.
pub(crate) fn sample_categorical(probs: &[f64], rng: &mut rand_chacha::ChaCha8Rng) -> u32 {
    let u: f64 = rng.gen();
    let mut cum = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        cum += p;
        if u < cum {
            return i as u32;
        }
    }
    (probs.len() - 1) as u32
}

/// Generate a dataset from the HMM spec. Each sequence draws from its own
/// seed-derived stream, so generation order does not affect content.
pub fn generate_hmm(spec: &HmmSpec) -> Result<SequenceDataset> {
    spec.validate()?;
    let std_dev = math::sqrt(spec.emission_variance);
    let uniform_init = alloc::vec![1.0 / spec.classes as f64; spec.classes];
    let sequences = (0..spec.n)
        .map(|i| {
            let mut stream = rng::derive(spec.seed, i as u64);
            let mut labels = Vec::with_capacity(spec.horizon);
            let mut state = sample_categorical(&uniform_init, &mut stream);
            let mut features = Tensor::zeros(spec.horizon, spec.dim);
            for t in 0..spec.horizon {
                if t > 0 {
                    state = sample_categorical(spec.transition.row(state as usize), &mut stream);
                }
                labels.push(state);
                // class c (1-based) emits N(c, variance) per feature
                let normal = Normal::new(state as f64 + 1.0, std_dev).expect("finite std dev");
                for f in features.row_mut(t) {
                    *f = normal.sample(&mut stream);
                }
            }
            Sequence {
                id: format!("hmm-{i:05}"),
                features,
                clean_labels: labels,
                noisy_labels: None,
            }
        })
        .collect();
    SequenceDataset::new(
        spec.classes,
        sequences,
        Provenance {
            source: format!(
                "hmm(n={}, d={}, T={}, C={}, var={})",
                spec.n, spec.dim, spec.horizon, spec.classes, spec.emission_variance
            ),
            seed: Some(spec.seed),
        },
    )
}

/// Random sequence-level partition into train and test.
///
/// `|test| = round(test_fraction · n)`; both sides keep the original
/// dataset order. Deterministic in `seed`.
pub fn split(
    dataset: &SequenceDataset,
    test_fraction: f64,
    seed: u64,
) -> Result<(SequenceDataset, SequenceDataset)> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::InvalidFraction(test_fraction));
    }
    let n = dataset.len();
    if n < 2 {
        return Err(Error::DatasetTooSmall { needed: 2, found: n });
    }
    let test_count = ((test_fraction * n as f64).round() as usize).min(n);
    let mut indices: Vec<usize> = (0..n).collect();
    let mut stream = rng::seeded(seed);
    indices.shuffle(&mut stream);
    let mut is_test = alloc::vec![false; n];
    for &i in &indices[..test_count] {
        is_test[i] = true;
    }
    let mut train = Vec::with_capacity(n - test_count);
    let mut test = Vec::with_capacity(test_count);
    for (i, s) in dataset.sequences.iter().enumerate() {
        if is_test[i] {
            test.push(s.clone());
        } else {
            train.push(s.clone());
        }
    }
    let side = |name: &str, seqs: Vec<Sequence>| {
        SequenceDataset::new(
            dataset.classes,
            seqs,
            Provenance {
                source: format!("{}[{name}]", dataset.provenance.source),
                seed: dataset.provenance.seed,
            },
        )
    };
    Ok((side("train", train)?, side("test", test)?))
}

/// Build a dataset directly from parts (mainly for tests and file loading).
pub fn dataset_from_parts(
    classes: usize,
    sequences: Vec<Sequence>,
    source: &str,
    seed: Option<u64>,
) -> Result<SequenceDataset> {
    SequenceDataset::new(classes, sequences, Provenance { source: source.to_string(), seed })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::collections::BTreeSet;

    #[test]
    fn generator_is_deterministic() {
        let spec = HmmSpec::new(20, 3, 10, 2, 7);
        let a = generate_hmm(&spec).unwrap();
        let b = generate_hmm(&spec).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn class_frequencies_are_uniform_within_binomial_bounds() {
        let spec = HmmSpec::new(2000, 2, 8, 2, 123);
        let data = generate_hmm(&spec).unwrap();
        let n = data.len() as f64;
        let bound = 3.0 * (0.25 / n).sqrt();
        for t in 0..8 {
            let ones = data
                .sequences()
                .iter()
                .filter(|s| s.clean_labels[t] == 1)
                .count() as f64
                / n;
            assert!((ones - 0.5).abs() < bound, "t={t}: freq {ones}");
        }
    }

    #[test]
    fn per_class_feature_means_match_class_index() {
        let spec = HmmSpec::new(800, 3, 10, 2, 5);
        let data = generate_hmm(&spec).unwrap();
        for class in 0..2u32 {
            let mut sum = 0.0;
            let mut count = 0usize;
            for s in data.sequences() {
                for t in 0..s.horizon() {
                    if s.clean_labels[t] == class {
                        sum += s.features.row(t).iter().sum::<f64>();
                        count += s.dim();
                    }
                }
            }
            let mean = sum / count as f64;
            let expected = class as f64 + 1.0;
            let bound = 3.0 * (DEFAULT_EMISSION_VARIANCE / count as f64).sqrt();
            assert!((mean - expected).abs() < bound, "class {class}: mean {mean}");
        }
    }

    #[test]
    fn split_is_a_partition_and_deterministic() {
        let spec = HmmSpec::new(10, 2, 4, 2, 1);
        let data = generate_hmm(&spec).unwrap();
        let (train, test) = split(&data, 0.2, 42).unwrap();
        assert_eq!(train.len(), 8);
        assert_eq!(test.len(), 2);

        let ids = |d: &SequenceDataset| {
            d.sequences().iter().map(|s| s.id.clone()).collect::<BTreeSet<_>>()
        };
        let union: BTreeSet<_> = ids(&train).union(&ids(&test)).cloned().collect();
        assert_eq!(union, ids(&data));
        assert!(ids(&train).is_disjoint(&ids(&test)));

        let (train2, test2) = split(&data, 0.2, 42).unwrap();
        assert_eq!(train, train2);
        assert_eq!(test, test2);
    }

    #[test]
    fn split_rejects_tiny_datasets_and_bad_fractions() {
        let spec = HmmSpec::new(1, 2, 4, 2, 1);
        let data = generate_hmm(&spec).unwrap();
        assert!(matches!(split(&data, 0.5, 0), Err(Error::DatasetTooSmall { .. })));
        let spec = HmmSpec::new(4, 2, 4, 2, 1);
        let data = generate_hmm(&spec).unwrap();
        assert!(matches!(split(&data, 0.0, 0), Err(Error::InvalidFraction(_))));
        assert!(matches!(split(&data, 1.0, 0), Err(Error::InvalidFraction(_))));
    }

    #[test]
    fn state_marginals_pass_chi_square_at_every_step() {
        // Uniform transitions from a uniform start keep marginals uniform;
        // chi-square with C-1=2 dof should stay below the alpha=0.001
        // critical value (13.816) at every step.
        let spec = HmmSpec::new(3000, 1, 12, 3, 9);
        let data = generate_hmm(&spec).unwrap();
        let n = data.len() as f64;
        for t in 0..12 {
            let mut counts = [0usize; 3];
            for s in data.sequences() {
                counts[s.clean_labels[t] as usize] += 1;
            }
            let expected = n / 3.0;
            let chi2: f64 = counts
                .iter()
                .map(|&c| {
                    let d = c as f64 - expected;
                    d * d / expected
                })
                .sum();
            assert!(chi2 < 13.816, "t={t}: chi2 {chi2}");
        }
    }

    #[test]
    fn noisy_view_requires_noisy_labels() {
        let spec = HmmSpec::new(3, 2, 4, 2, 1);
        let data = generate_hmm(&spec).unwrap();
        assert!(matches!(data.noisy_view(), Err(Error::MissingNoisyLabels)));
        assert_eq!(data.clean_view().len(), 3);
    }
}
