//! Seeded randomness and the two standard private primitives: Laplace
//! perturbation and exponential-mechanism selection, plus bounded
//! statistical queries.
//!
//! All randomness flows through `NoiseSource`. A given seed and split-label
//! sequence reproduces draws bit-for-bit on every platform; the `Zero`
//! variant returns deterministic midpoints so threshold logic can be tested
//! without noise.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Deterministic noise supply.
///
/// `Seeded` draws from a keyed stream cipher; `Zero` returns 0 for every
/// noise sample and 1/2 for every uniform, turning randomized algorithms
/// into their noiseless skeletons.
#[derive(Debug, Clone)]
pub enum NoiseSource {
    Seeded { key: [u8; 32], rng: ChaCha12Rng },
    Zero,
}

impl NoiseSource {
    /// Noise keyed by a seed.
    pub fn seeded(seed: u64) -> NoiseSource {
        let mut hasher = Sha256::new();
        hasher.update(b"noise-root");
        hasher.update(seed.to_le_bytes());
        let key: [u8; 32] = hasher.finalize().into();
        NoiseSource::Seeded { key, rng: ChaCha12Rng::from_seed(key) }
    }

    /// The zero-noise test hook.
    pub fn zero() -> NoiseSource {
        NoiseSource::Zero
    }

    /// Independent substream derived from this source's key and a label.
    ///
    /// Derivation depends only on (key, label), never on draw history, so
    /// components seeded from the same root stay reproducible regardless of
    /// the order they consume randomness in.
    pub fn split(&self, label: &str) -> NoiseSource {
        match self {
            NoiseSource::Zero => NoiseSource::Zero,
            NoiseSource::Seeded { key, .. } => {
                let mut hasher = Sha256::new();
                hasher.update(key);
                hasher.update(label.as_bytes());
                let child: [u8; 32] = hasher.finalize().into();
                NoiseSource::Seeded { key: child, rng: ChaCha12Rng::from_seed(child) }
            }
        }
    }

    /// Uniform draw in the open interval (0, 1).
    pub fn uniform01(&mut self) -> f64 {
        match self {
            NoiseSource::Zero => 0.5,
            NoiseSource::Seeded { rng, .. } => loop {
                let v: f64 = rng.gen();
                if v > 0.0 {
                    return v;
                }
            },
        }
    }

    /// Centered Laplace draw with the given scale, by inverse CDF.
    ///
    /// The uniform is kept away from 0 and 1, so the result is always
    /// finite.
    pub fn laplace(&mut self, scale: f64) -> f64 {
        if let NoiseSource::Zero = self {
            return 0.0;
        }
        if scale == 0.0 {
            return 0.0;
        }
        let u = self.uniform01() - 0.5;
        -scale * u.signum() * (1.0 - 2.0 * u.abs()).ln()
    }
}

/// Laplace scale for a query of the given sensitivity at privacy level
/// `epsilon`.
pub fn laplace_scale(sensitivity: f64, epsilon: f64) -> Result<f64> {
    if !(epsilon > 0.0) {
        return Err(Error::InvalidParams(format!("epsilon must be positive, got {epsilon}")));
    }
    if !(sensitivity >= 0.0) {
        return Err(Error::InvalidParams(format!(
            "sensitivity must be nonnegative, got {sensitivity}"
        )));
    }
    Ok(sensitivity / epsilon)
}

/// Adds calibrated Laplace noise to each value. Zero sensitivity means the
/// values pass through exactly.
pub fn laplace_mechanism(
    values: &[f64],
    sensitivity: f64,
    epsilon: f64,
    noise: &mut NoiseSource,
) -> Result<Vec<f64>> {
    let scale = laplace_scale(sensitivity, epsilon)?;
    if scale == 0.0 {
        return Ok(values.to_vec());
    }
    Ok(values.iter().map(|&v| v + noise.laplace(scale)).collect())
}

/// Selects the index of a candidate with probability proportional to
/// `exp(epsilon * utility / (2 * sensitivity))`.
///
/// Utilities are shifted by their maximum before exponentiation; the shift
/// leaves selection probabilities unchanged and keeps weights in (0, 1].
/// `epsilon = 0` degenerates to a uniform choice.
pub fn exponential_mechanism(
    utilities: &[f64],
    sensitivity: f64,
    epsilon: f64,
    noise: &mut NoiseSource,
) -> Result<usize> {
    if utilities.is_empty() {
        return Err(Error::EmptyRange);
    }
    if !(sensitivity > 0.0) {
        return Err(Error::InvalidParams(format!(
            "utility sensitivity must be positive, got {sensitivity}"
        )));
    }
    if !(epsilon >= 0.0) {
        return Err(Error::InvalidParams(format!("epsilon must be nonnegative, got {epsilon}")));
    }
    if utilities.iter().any(|u| !u.is_finite()) {
        return Err(Error::InvalidParams("utilities must be finite".into()));
    }
    let top = utilities.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = utilities
        .iter()
        .map(|&u| (epsilon * (u - top) / (2.0 * sensitivity)).exp())
        .collect();
    let total: f64 = weights.iter().sum();
    let t = noise.uniform01() * total;
    let mut acc = 0.0;
    for (i, &w) in weights.iter().enumerate() {
        acc += w;
        if t <= acc {
            return Ok(i);
        }
    }
    Ok(weights.len() - 1)
}

/// A bounded per-record score averaged over a dataset. Scores must lie in
/// [0, 1], which fixes the query's sensitivity at `1/n`.
pub struct StatQuery<R> {
    score: Box<dyn Fn(&R) -> f64 + Send + Sync>,
}

impl<R> std::fmt::Debug for StatQuery<R> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("StatQuery")
    }
}

impl StatQuery<usize> {
    /// Query given as a score table over a finite universe; records are
    /// universe indices. Scores are validated here.
    pub fn from_scores(scores: Vec<f64>) -> Result<StatQuery<usize>> {
        for (i, &s) in scores.iter().enumerate() {
            if !(0.0..=1.0).contains(&s) {
                return Err(Error::InvalidParams(format!(
                    "score {s} at index {i} falls outside [0, 1]"
                )));
            }
        }
        Ok(StatQuery {
            score: Box::new(move |&i: &usize| scores.get(i).copied().unwrap_or(f64::NAN)),
        })
    }
}

impl<R> StatQuery<R> {
    /// Query given as a closure over record fields. Each evaluated score is
    /// checked against [0, 1] at query time.
    pub fn from_fn(f: impl Fn(&R) -> f64 + Send + Sync + 'static) -> StatQuery<R> {
        StatQuery { score: Box::new(f) }
    }

    /// Mean score over the dataset. Errors on an empty dataset or any score
    /// outside [0, 1].
    pub fn eval(&self, data: &[R]) -> Result<f64> {
        if data.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let mut sum = 0.0;
        for r in data {
            let s = (self.score)(r);
            if !(0.0..=1.0).contains(&s) {
                return Err(Error::InvalidParams(format!("record score {s} falls outside [0, 1]")));
            }
            sum += s;
        }
        Ok(sum / data.len() as f64)
    }
}

/// Sensitivity of a statistical query over `n` records.
pub fn stat_query_sensitivity(n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::EmptyDataset);
    }
    Ok(1.0 / n as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_reproduces_draws() {
        let mut a = NoiseSource::seeded(7);
        let mut b = NoiseSource::seeded(7);
        for _ in 0..100 {
            assert_eq!(a.laplace(1.0).to_bits(), b.laplace(1.0).to_bits());
        }
    }

    #[test]
    fn split_streams_are_order_independent() {
        let root = NoiseSource::seeded(3);
        let mut first = root.split("alpha");
        let mut sibling = root.split("beta");
        let _ = sibling.laplace(1.0);
        let mut second = root.split("alpha");
        assert_eq!(first.laplace(1.0).to_bits(), second.laplace(1.0).to_bits());
    }

    #[test]
    fn different_labels_differ() {
        let root = NoiseSource::seeded(3);
        let a = root.split("alpha").laplace(1.0);
        let b = root.split("beta").laplace(1.0);
        assert_ne!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn zero_source_is_silent() {
        let mut z = NoiseSource::zero();
        assert_eq!(z.laplace(123.0), 0.0);
        assert_eq!(z.split("x").laplace(1.0), 0.0);
    }

    #[test]
    fn laplace_draws_are_always_finite() {
        let mut n = NoiseSource::seeded(11);
        for _ in 0..200_000 {
            assert!(n.laplace(1.0).is_finite());
        }
    }

    #[test]
    fn laplace_variance_matches_two_scale_squared() {
        // Var of Laplace(b) is 2 b^2; with b = 1 over 1e6 draws the sample
        // variance should land within [1.98, 2.02].
        let mut n = NoiseSource::seeded(42);
        let count = 1_000_000;
        let mut sum = 0.0;
        let mut sumsq = 0.0;
        for _ in 0..count {
            let z = n.laplace(1.0);
            sum += z;
            sumsq += z * z;
        }
        let mean = sum / count as f64;
        let var = sumsq / count as f64 - mean * mean;
        assert!((1.98..=2.02).contains(&var), "sample variance {var}");
    }

    #[test]
    fn laplace_kolmogorov_smirnov_distance_is_small() {
        let mut n = NoiseSource::seeded(5);
        let count = 1_000_000;
        let mut draws: Vec<f64> = (0..count).map(|_| n.laplace(1.0)).collect();
        draws.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let cdf = |z: f64| {
            if z < 0.0 {
                0.5 * z.exp()
            } else {
                1.0 - 0.5 * (-z).exp()
            }
        };
        let mut ks = 0.0f64;
        for (i, &z) in draws.iter().enumerate() {
            let f = cdf(z);
            let lo = i as f64 / count as f64;
            let hi = (i + 1) as f64 / count as f64;
            ks = ks.max((f - lo).abs()).max((f - hi).abs());
        }
        assert!(ks < 0.002, "KS distance {ks}");
    }

    #[test]
    fn scale_arithmetic() {
        // Sensitivity 1/100 at epsilon 0.5 gives scale 0.02.
        assert_eq!(laplace_scale(0.01, 0.5).unwrap(), 0.02);
        assert!(laplace_scale(0.01, 0.0).is_err());
    }

    #[test]
    fn zero_sensitivity_passes_values_through() {
        let mut n = NoiseSource::seeded(1);
        let vals = vec![0.25, 0.5];
        let out = laplace_mechanism(&vals, 0.0, 1.0, &mut n).unwrap();
        assert_eq!(out, vals);
    }

    #[test]
    fn exponential_mechanism_rejects_empty() {
        let mut n = NoiseSource::seeded(1);
        assert!(matches!(
            exponential_mechanism(&[], 1.0, 1.0, &mut n).unwrap_err(),
            Error::EmptyRange
        ));
    }

    #[test]
    fn exponential_mechanism_is_shift_invariant_at_fixed_seed() {
        // Exactly representable utilities keep the shifted weights bitwise
        // identical, so the same seed must pick the same indices.
        let base = vec![0.25, 0.5, 1.0, 0.75];
        let shifted: Vec<f64> = base.iter().map(|u| u + 4.0).collect();
        let mut a = NoiseSource::seeded(9);
        let mut b = NoiseSource::seeded(9);
        for _ in 0..200 {
            let i = exponential_mechanism(&base, 1.0, 2.0, &mut a).unwrap();
            let j = exponential_mechanism(&shifted, 1.0, 2.0, &mut b).unwrap();
            assert_eq!(i, j);
        }
    }

    #[test]
    fn exponential_mechanism_two_point_odds() {
        // Utilities 0 and 1 at sensitivity 1, epsilon 2: the exponent gap is
        // epsilon * du / 2 = 1, so odds are e : 1 and the better point wins
        // with probability e/(1+e) ~ 0.7311.
        let mut n = NoiseSource::seeded(13);
        let trials = 100_000;
        let mut hits = 0usize;
        for _ in 0..trials {
            if exponential_mechanism(&[0.0, 1.0], 1.0, 2.0, &mut n).unwrap() == 1 {
                hits += 1;
            }
        }
        let p = hits as f64 / trials as f64;
        let expected = std::f64::consts::E / (1.0 + std::f64::consts::E);
        assert!((p - expected).abs() < 0.006, "frequency {p}, expected {expected}");
    }

    #[test]
    fn exponential_mechanism_uniform_at_zero_epsilon() {
        let mut n = NoiseSource::seeded(17);
        let trials = 100_000;
        let k = 4;
        let mut counts = vec![0usize; k];
        for _ in 0..trials {
            counts[exponential_mechanism(&[5.0, -1.0, 2.0, 0.0], 1.0, 0.0, &mut n).unwrap()] += 1;
        }
        // Chi-squared against uniform, 3 degrees of freedom; 16.27 is the
        // 0.001 critical value.
        let expected = trials as f64 / k as f64;
        let chi2: f64 = counts
            .iter()
            .map(|&c| (c as f64 - expected).powi(2) / expected)
            .sum();
        assert!(chi2 < 16.27, "chi-squared {chi2}, counts {counts:?}");
    }

    #[test]
    fn stat_query_counts_fractions() {
        let q = StatQuery::from_fn(|&x: &f64| if x > 0.5 { 1.0 } else { 0.0 });
        let data = vec![0.1, 0.9, 0.7, 0.2, 0.3, 0.6, 0.55, 0.05, 0.2, 0.4];
        assert!((q.eval(&data).unwrap() - 0.4).abs() < 1e-15);
    }

    #[test]
    fn stat_query_rejects_empty_dataset() {
        let q = StatQuery::from_fn(|&_x: &f64| 1.0);
        assert!(matches!(q.eval(&[]).unwrap_err(), Error::EmptyDataset));
    }

    #[test]
    fn stat_query_rejects_out_of_range_scores() {
        let err = StatQuery::from_scores(vec![0.5, 1.5]).unwrap_err();
        assert!(matches!(err, Error::InvalidParams(_)));
        let q = StatQuery::from_fn(|&x: &f64| x * 2.0);
        assert!(matches!(q.eval(&[0.9]).unwrap_err(), Error::InvalidParams(_)));
    }

    #[test]
    fn stat_query_sensitivity_is_reciprocal_size() {
        assert_eq!(stat_query_sensitivity(100).unwrap(), 0.01);
        assert!(stat_query_sensitivity(0).is_err());
    }
}
