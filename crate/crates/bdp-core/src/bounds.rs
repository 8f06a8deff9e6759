//! Sample-size requirements for valid holdout reuse, information-leakage
//! bounds on adaptively chosen analyses, and an exact empirical
//! max-information calculator for finite pairs.

use serde::Serialize;

use crate::calibration::{h_markov_unchecked, ChainConversion, QuiltOption};
use crate::error::{Error, Result};
use crate::joint::JointTable;

/// Base-2 logarithm of e; converts nats to bits.
const LOG2_E: f64 = std::f64::consts::LOG2_E;

/// A sample-size requirement, or infeasibility with the node (and quilt)
/// that blocks. When feasible, the witness names the binding node, if the
/// budget term rather than the concentration term decides.
#[derive(Debug, Clone, Serialize)]
pub struct SampleBound {
    pub samples: Option<u64>,
    pub witness_node: Option<usize>,
    pub witness_quilt: Option<Vec<usize>>,
}

impl SampleBound {
    /// True when a finite requirement exists.
    pub fn feasible(&self) -> bool {
        self.samples.is_some()
    }
}

fn check_tau_beta(tau: f64, beta: f64) -> Result<()> {
    if !(tau > 0.0 && tau <= 1.0) {
        return Err(Error::InvalidParams(format!("tolerance {tau} outside (0, 1]")));
    }
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::InvalidParams(format!("failure probability {beta} outside (0, 1)")));
    }
    Ok(())
}

fn ceil_to_u64(x: f64) -> u64 {
    let c = x.ceil();
    if c >= u64::MAX as f64 {
        u64::MAX
    } else if c <= 0.0 {
        0
    } else {
        c as u64
    }
}

/// Holdout size needed for answers within `tau` of the population with
/// probability `1 - beta`, from per-node blanket coefficients:
/// `ceil(max(9 ln(4/beta) / tau^2, max_i 9 B / (4 sigma (tau/3 - 4 a_i))))`.
///
/// A node with `a_i >= tau/12` makes the requirement infeasible.
pub fn n_star(
    coefficients: &[f64],
    budget: u32,
    sigma: f64,
    tau: f64,
    beta: f64,
) -> Result<SampleBound> {
    check_tau_beta(tau, beta)?;
    if !(sigma > 0.0) {
        return Err(Error::InvalidParams(format!("noise scale must be positive, got {sigma}")));
    }
    for (i, &a) in coefficients.iter().enumerate() {
        if a.is_nan() || a < 0.0 {
            return Err(Error::InvalidParams(format!("coefficient {i} is {a}")));
        }
    }
    let concentration = 9.0 * (4.0 / beta).ln() / (tau * tau);
    let mut requirement = concentration;
    let mut witness = None;
    for (i, &a) in coefficients.iter().enumerate() {
        let slack = tau / 3.0 - 4.0 * a;
        if slack <= 0.0 {
            return Ok(SampleBound { samples: None, witness_node: Some(i), witness_quilt: None });
        }
        let term = 9.0 * budget as f64 / (4.0 * sigma * slack);
        if term > requirement {
            requirement = term;
            witness = Some(i);
        }
    }
    Ok(SampleBound {
        samples: Some(ceil_to_u64(requirement)),
        witness_node: witness,
        witness_quilt: None,
    })
}

/// As `n_star`, but each node picks its cheapest quilt option:
/// per-node term `min_options 9 B (|nearby| + 1) / (4 sigma (tau/3 - 4 b))`,
/// options with no slack excluded. A node whose options all lack slack makes
/// the requirement infeasible; a node with no options at all is an error.
pub fn n_pound(
    options: &[Vec<QuiltOption>],
    budget: u32,
    sigma: f64,
    tau: f64,
    beta: f64,
) -> Result<SampleBound> {
    check_tau_beta(tau, beta)?;
    if !(sigma > 0.0) {
        return Err(Error::InvalidParams(format!("noise scale must be positive, got {sigma}")));
    }
    let concentration = 9.0 * (4.0 / beta).ln() / (tau * tau);
    let mut requirement = concentration;
    let mut witness: Option<(usize, Vec<usize>)> = None;
    for (node, opts) in options.iter().enumerate() {
        if opts.is_empty() {
            return Err(Error::EmptyCandidateSet { node });
        }
        let mut node_term: Option<(f64, Vec<usize>)> = None;
        for opt in opts {
            if opt.coefficient.is_nan() || opt.coefficient < 0.0 {
                return Err(Error::InvalidParams(format!(
                    "node {node} has coefficient {}",
                    opt.coefficient
                )));
            }
            let slack = tau / 3.0 - 4.0 * opt.coefficient;
            if slack <= 0.0 {
                continue;
            }
            let term =
                9.0 * budget as f64 * (opt.nearby_size as f64 + 1.0) / (4.0 * sigma * slack);
            if node_term.as_ref().map_or(true, |(t, _)| term < *t) {
                node_term = Some((term, opt.quilt.iter().copied().collect()));
            }
        }
        match node_term {
            None => {
                let tightest = opts
                    .iter()
                    .enumerate()
                    .min_by(|(_, a), (_, b)| {
                        a.coefficient.partial_cmp(&b.coefficient).unwrap()
                    })
                    .map(|(_, o)| o.quilt.iter().copied().collect())
                    .unwrap();
                return Ok(SampleBound {
                    samples: None,
                    witness_node: Some(node),
                    witness_quilt: Some(tightest),
                });
            }
            Some((term, quilt)) => {
                if term > requirement {
                    requirement = term;
                    witness = Some((node, quilt));
                }
            }
        }
    }
    let (witness_node, witness_quilt) = match witness {
        Some((n, q)) => (Some(n), Some(q)),
        None => (None, None),
    };
    Ok(SampleBound { samples: Some(ceil_to_u64(requirement)), witness_node, witness_quilt })
}

/// Noise scale and threshold for answering `m` queries within `tau` at
/// failure probability `beta`, split by a constant in (0, 1):
/// `sigma = (1-c) tau / (12 ln(4m/beta))`, `T = (1+c) tau / 2`.
pub fn threshold_params(tau: f64, m: u64, beta: f64, c: f64) -> Result<(f64, f64)> {
    check_tau_beta(tau, beta)?;
    if m == 0 {
        return Err(Error::InvalidParams("query count must be positive".into()));
    }
    if !(c > 0.0 && c < 1.0) {
        return Err(Error::InvalidConstant(format!("split constant {c} outside (0, 1)")));
    }
    let sigma = (1.0 - c) * tau / (12.0 * (4.0 * m as f64 / beta).ln());
    let threshold = (1.0 + c) * tau / 2.0;
    Ok((sigma, threshold))
}

/// Holdout size sufficient for `m` adaptively chosen queries at tolerance
/// `tau` and failure probability `beta`: the quilt requirement evaluated at
/// the threshold calibration's noise scale, tolerance `(1-c) tau / 4`, and
/// failure share `beta / (2m)`.
pub fn adaptive_sample_bound(
    options: &[Vec<QuiltOption>],
    budget: u32,
    tau: f64,
    m: u64,
    beta: f64,
    c: f64,
) -> Result<SampleBound> {
    let (sigma, _) = threshold_params(tau, m, beta, c)?;
    n_pound(
        options,
        budget,
        sigma,
        (1.0 - c) * tau / 4.0,
        beta / (2.0 * m as f64),
    )
}

/// Asymptotic chain variant of `adaptive_sample_bound`, labeled as such.
///
/// The per-node optimization is replaced by the spectral closed form at
/// target `(1-c) tau / 12`: an estimate for long chains, not a certified
/// constant.
#[derive(Debug, Clone, Serialize)]
pub struct ChainSampleEstimate {
    pub asymptotic: bool,
    pub conversion: ChainConversion,
    pub samples: u64,
}

/// Estimates the holdout size for `m` adaptive queries over chain-shaped
/// data with the given spectral parameters.
pub fn adaptive_chain_estimate(
    budget: u32,
    tau: f64,
    m: u64,
    beta: f64,
    c: f64,
    gap: f64,
    min_stationary: f64,
    chain_constant: f64,
) -> Result<ChainSampleEstimate> {
    let (sigma, _) = threshold_params(tau, m, beta, c)?;
    let tau_eff = (1.0 - c) * tau / 4.0;
    let beta_eff = beta / (2.0 * m as f64);
    let conversion = h_markov_unchecked(tau_eff / 3.0, gap, min_stationary, chain_constant)?;
    let concentration = 9.0 * (4.0 / beta_eff).ln() / (tau_eff * tau_eff);
    let budget_term = 9.0 * budget as f64 / (4.0 * sigma * conversion.h);
    let floor = 2.0 * conversion.d as f64;
    let samples = ceil_to_u64(concentration.max(budget_term).max(floor));
    Ok(ChainSampleEstimate { asymptotic: true, conversion, samples })
}

/// Bits of information any adaptively chosen analysis can extract from `n`
/// records through a mechanism at Bayesian level `epsilon`, at confidence
/// slack `beta`: `(2 eps^2 n + eps sqrt(2 n ln(2/beta))) log2(e)`.
pub fn maxinfo_bound_bdp(epsilon: f64, n: u64, beta: f64) -> Result<f64> {
    if !(epsilon >= 0.0) {
        return Err(Error::InvalidParams(format!("epsilon must be nonnegative, got {epsilon}")));
    }
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::InvalidParams(format!("confidence slack {beta} outside (0, 1)")));
    }
    let n = n as f64;
    Ok((2.0 * epsilon * epsilon * n + epsilon * (2.0 * n * (2.0 / beta).ln()).sqrt()) * LOG2_E)
}

/// The slack-free max-information bound: `eps n log2(e)` bits.
pub fn maxinfo_bound_simple(epsilon: f64, n: u64) -> Result<f64> {
    if !(epsilon >= 0.0) {
        return Err(Error::InvalidParams(format!("epsilon must be nonnegative, got {epsilon}")));
    }
    Ok(epsilon * n as f64 * LOG2_E)
}

/// Tail bound on a calibrated session answer drifting `tau` from the
/// population mean: `min(1, 4 exp(-tau^2 / (9 n delta^2)))` for a query of
/// sensitivity `delta` over `n` records.
pub fn generalization_tail(tau: f64, n: u64, delta: f64) -> Result<f64> {
    if !(tau > 0.0) {
        return Err(Error::InvalidParams(format!("tolerance must be positive, got {tau}")));
    }
    if n == 0 {
        return Err(Error::InvalidParams("record count must be positive".into()));
    }
    if !(delta > 0.0) {
        return Err(Error::InvalidParams(format!("sensitivity must be positive, got {delta}")));
    }
    let exponent = tau * tau / (9.0 * n as f64 * delta * delta);
    Ok(f64::min(1.0, 4.0 * (-exponent).exp()))
}

/// Exact empirical max-information of a two-variable joint at slack `beta`.
#[derive(Debug, Clone, Serialize)]
pub struct MaxInfoEstimate {
    /// Bits; infinite when an outcome set of zero product probability has
    /// joint probability above `beta`.
    pub bits: f64,
    /// Atom indices (row-major) of the maximizing outcome set, ascending.
    pub witness: Vec<usize>,
}

/// Computes `log2 max_O (P[O] - beta) / Q[O]` over outcome sets `O` with
/// `P[O] > beta`, where `P` is the joint and `Q` the product of marginals.
///
/// Only ratio-superlevel sets can be optimal: an optimal set's value is at
/// most its smallest included atom ratio, so extending it to the full prefix
/// of the ratio ranking never lowers the value. The sweep therefore scans
/// prefixes of atoms ordered by decreasing `p/q`, evaluating each candidate
/// by index-ascending summation.
pub fn empirical_max_info(joint: &JointTable, beta: f64) -> Result<MaxInfoEstimate> {
    if joint.n() != 2 {
        return Err(Error::InvalidParams(format!(
            "pairwise max-information needs exactly 2 variables, got {}",
            joint.n()
        )));
    }
    if !(0.0..1.0).contains(&beta) {
        return Err(Error::InvalidParams(format!("slack {beta} outside [0, 1)")));
    }
    let p = joint.probs();
    let mx = joint.marginal(&[0])?;
    let my = joint.marginal(&[1])?;
    let ky = joint.domain().size(1);
    let q: Vec<f64> = (0..p.len())
        .map(|idx| mx.prob(idx / ky) * my.prob(idx % ky))
        .collect();

    // Rank atoms by p/q descending, index ascending on ties; q = 0 with
    // p > 0 ranks first, p = 0 ranks last.
    let mut order: Vec<usize> = (0..p.len()).collect();
    let ratio = |i: usize| -> f64 {
        if p[i] == 0.0 {
            0.0
        } else if q[i] == 0.0 {
            f64::INFINITY
        } else {
            p[i] / q[i]
        }
    };
    order.sort_by(|&a, &b| {
        ratio(b).partial_cmp(&ratio(a)).unwrap().then(a.cmp(&b))
    });

    let mut best: Option<(f64, Vec<usize>)> = None;
    for take in 1..=order.len() {
        let mut atoms: Vec<usize> = order[..take].to_vec();
        atoms.sort_unstable();
        let mut sp = 0.0;
        let mut sq = 0.0;
        for &i in &atoms {
            sp += p[i];
            sq += q[i];
        }
        if sp <= beta {
            continue;
        }
        let value = if sq == 0.0 { f64::INFINITY } else { (sp - beta) / sq };
        if best.as_ref().map_or(true, |(v, _)| value > *v) {
            best = Some((value, atoms));
        }
    }
    match best {
        None => Err(Error::NoFeasibleSubset),
        Some((value, witness)) => Ok(MaxInfoEstimate { bits: value.log2(), witness }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::joint::Domain;
    use std::collections::BTreeSet;

    fn opt(coefficient: f64, nearby_size: usize) -> QuiltOption {
        QuiltOption { quilt: BTreeSet::new(), nearby_size, coefficient }
    }

    #[test]
    fn independent_requirement_matches_hand_computation() {
        // a = 0, B = 5, sigma = 0.05, tau = 0.3, beta = 0.05:
        // max(9 ln 80 / 0.09, 45 / (0.02)) = max(438.2, 2250) = 2250.
        let b = n_star(&[0.0], 5, 0.05, 0.3, 0.05).unwrap();
        assert_eq!(b.samples, Some(2250));
        assert_eq!(b.witness_node, Some(0));
    }

    #[test]
    fn concentration_term_dominates_without_budget() {
        // B = 0 leaves only the concentration term: ceil(9 ln(80) / 0.0001).
        let b = n_star(&[0.0], 0, 0.05, 0.01, 0.05).unwrap();
        let expected = (9.0 * (4.0f64 / 0.05).ln() / 0.0001).ceil() as u64;
        assert_eq!(b.samples, Some(expected));
        assert_eq!(b.witness_node, None);
    }

    #[test]
    fn correlated_requirement_pin() {
        // tau = 0.3, beta = 0.05, B = 5, sigma = 0.05, a = 0.02:
        // slack = 0.1 - 0.08 = 0.02, budget term = 45/(0.2*0.02) = 11250.
        let b = n_star(&[0.02], 5, 0.05, 0.3, 0.05).unwrap();
        // Float dust in the slack can push the ceiling one step past the
        // exact-arithmetic 11250.
        let samples = b.samples.unwrap() as i64;
        assert!((samples - 11250).abs() <= 1, "samples {samples}");
    }

    #[test]
    fn coefficient_at_slack_boundary_is_infeasible() {
        // a = tau/12 exactly zeroes the slack.
        let b = n_star(&[0.025], 5, 0.05, 0.3, 0.05).unwrap();
        assert_eq!(b.samples, None);
        assert_eq!(b.witness_node, Some(0));
    }

    #[test]
    fn requirement_shrinks_as_failure_probability_grows() {
        let strict = n_star(&[0.0], 0, 0.05, 0.05, 0.01).unwrap().samples.unwrap();
        let loose = n_star(&[0.0], 0, 0.05, 0.05, 0.2).unwrap().samples.unwrap();
        assert!(strict > loose);
    }

    #[test]
    fn blanket_options_reproduce_blanket_requirement() {
        let coeffs = [0.0, 0.01, 0.005];
        let options: Vec<Vec<QuiltOption>> =
            coeffs.iter().map(|&a| vec![opt(a, 0)]).collect();
        let via_options = n_pound(&options, 5, 0.05, 0.3, 0.05).unwrap();
        let via_blankets = n_star(&coeffs, 5, 0.05, 0.3, 0.05).unwrap();
        assert_eq!(via_options.samples, via_blankets.samples);
    }

    #[test]
    fn wider_quilt_halves_nothing_but_doubles_cost() {
        // Same zero coefficient, nearby 1 instead of 0: term doubles.
        let narrow = n_pound(&[vec![opt(0.0, 0)]], 5, 0.05, 0.3, 0.05).unwrap();
        let wide = n_pound(&[vec![opt(0.0, 1)]], 5, 0.05, 0.3, 0.05).unwrap();
        assert_eq!(narrow.samples, Some(2250));
        assert_eq!(wide.samples, Some(4500));
    }

    #[test]
    fn extra_options_never_hurt() {
        let base = vec![vec![opt(0.02, 0)]];
        let more = vec![vec![opt(0.02, 0), opt(0.0, 1)]];
        let b1 = n_pound(&base, 5, 0.05, 0.3, 0.05).unwrap();
        let b2 = n_pound(&more, 5, 0.05, 0.3, 0.05).unwrap();
        assert!(b2.samples.unwrap() <= b1.samples.unwrap());
    }

    #[test]
    fn infeasible_node_reports_witness_quilt() {
        let options = vec![vec![QuiltOption {
            quilt: [7usize].into_iter().collect(),
            nearby_size: 0,
            coefficient: 0.5,
        }]];
        let b = n_pound(&options, 5, 0.05, 0.3, 0.05).unwrap();
        assert_eq!(b.samples, None);
        assert_eq!(b.witness_node, Some(0));
        assert_eq!(b.witness_quilt, Some(vec![7]));
    }

    #[test]
    fn threshold_params_pin() {
        // tau = 0.2, m = 100, beta = 0.05, c = 0.5:
        // sigma = 0.1 / (12 ln 8000), T = 0.15.
        let (sigma, t) = threshold_params(0.2, 100, 0.05, 0.5).unwrap();
        let expected_sigma = 0.1 / (12.0 * 8000.0f64.ln());
        assert!((sigma - expected_sigma).abs() < 1e-15);
        assert!((sigma - 9.27245e-4).abs() < 1e-9);
        assert!((t - 0.15).abs() < 1e-15);
    }

    #[test]
    fn threshold_sits_between_half_and_full_tolerance() {
        for &c in &[0.1, 0.5, 0.9] {
            let (_, t) = threshold_params(0.4, 10, 0.1, c).unwrap();
            assert!(t > 0.2 && t < 0.4);
        }
    }

    #[test]
    fn threshold_params_reject_unit_constant() {
        assert!(matches!(
            threshold_params(0.2, 100, 0.05, 1.0).unwrap_err(),
            Error::InvalidConstant(_)
        ));
    }

    #[test]
    fn adaptive_bound_matches_manual_substitution() {
        let options = vec![vec![opt(0.0, 0)], vec![opt(0.001, 1)]];
        let (tau, m, beta, c, budget) = (0.2, 50u64, 0.1, 0.5, 3u32);
        let direct = adaptive_sample_bound(&options, budget, tau, m, beta, c).unwrap();
        let (sigma, _) = threshold_params(tau, m, beta, c).unwrap();
        let manual =
            n_pound(&options, budget, sigma, (1.0 - c) * tau / 4.0, beta / (2.0 * m as f64))
                .unwrap();
        assert_eq!(direct.samples, manual.samples);
    }

    #[test]
    fn adaptive_bound_grows_with_query_count() {
        let options = vec![vec![opt(0.0, 0)]];
        let few = adaptive_sample_bound(&options, 3, 0.2, 10, 0.1, 0.5).unwrap();
        let many = adaptive_sample_bound(&options, 3, 0.2, 10_000, 0.1, 0.5).unwrap();
        assert!(many.samples.unwrap() > few.samples.unwrap());
    }

    #[test]
    fn halving_tolerance_quadruples_requirement() {
        // Both terms scale as 1/tau^2 at fixed m, so the ratio sits at 4 up
        // to rounding.
        let options = vec![vec![opt(0.0, 0)]];
        let coarse = adaptive_sample_bound(&options, 3, 0.2, 1000, 0.1, 0.5)
            .unwrap()
            .samples
            .unwrap() as f64;
        let fine = adaptive_sample_bound(&options, 3, 0.1, 1000, 0.1, 0.5)
            .unwrap()
            .samples
            .unwrap() as f64;
        let ratio = fine / coarse;
        assert!((3.9..=4.1).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn chain_estimate_is_labeled_and_respects_window_floor() {
        let est = adaptive_chain_estimate(3, 0.2, 100, 0.1, 0.5, 0.3, 1.0 / 3.0, 0.1).unwrap();
        assert!(est.asymptotic);
        assert!(est.samples >= 2 * est.conversion.d);
        assert!(est.conversion.h > 0.0);
    }

    #[test]
    fn maxinfo_bound_pins() {
        // eps = 0.05, n = 10^4, beta = 0.05.
        let b = maxinfo_bound_bdp(0.05, 10_000, 0.05).unwrap();
        let expected = (2.0 * 0.0025 * 1e4
            + 0.05 * (2.0 * 1e4 * (2.0f64 / 0.05).ln()).sqrt())
            * LOG2_E;
        assert!((b - expected).abs() < 1e-10);
        assert!((b - 91.73).abs() < 0.1);
        let simple = maxinfo_bound_simple(0.05, 10_000).unwrap();
        assert!((simple - 721.35).abs() < 0.1);
    }

    #[test]
    fn maxinfo_bounds_vanish_without_privacy_loss() {
        assert_eq!(maxinfo_bound_bdp(0.0, 1000, 0.1).unwrap(), 0.0);
        assert_eq!(maxinfo_bound_simple(0.0, 1000).unwrap(), 0.0);
    }

    #[test]
    fn quadratic_bound_wins_at_small_epsilon() {
        // For eps well under 1/sqrt(n) the quadratic term is negligible and
        // the slack bound beats the simple one.
        let n = 1_000_000u64;
        let eps = 1e-5;
        let bdp = maxinfo_bound_bdp(eps, n, 0.05).unwrap();
        let simple = maxinfo_bound_simple(eps, n).unwrap();
        assert!(bdp < simple);
    }

    #[test]
    fn generalization_tail_clamps_to_one() {
        // tau = 0.3, n = 100, delta = 0.01: exponent is exactly 1, so the
        // raw bound 4/e exceeds 1 and the clamp engages.
        let t = generalization_tail(0.3, 100, 0.01).unwrap();
        assert_eq!(t, 1.0);
    }

    #[test]
    fn generalization_tail_at_smaller_sensitivity() {
        // tau = 0.3, n = 100, delta = 0.005: exponent 4.
        let t = generalization_tail(0.3, 100, 0.005).unwrap();
        assert!((t - 4.0 * (-4.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn generalization_tail_specializes_to_mean_queries() {
        // delta = 1/n gives exponent n tau^2 / 9.
        let t = generalization_tail(0.3, 100, 0.01).unwrap();
        let direct = f64::min(1.0, 4.0 * (-(100.0 * 0.09) / 9.0f64).exp());
        assert_eq!(t, direct);
    }

    fn pair_table(probs: Vec<f64>, kx: usize, ky: usize) -> JointTable {
        let d = Domain::from_sizes(&[kx, ky]).unwrap();
        JointTable::new(d, probs).unwrap()
    }

    #[test]
    fn independent_pair_carries_no_information() {
        let t = pair_table(vec![0.06, 0.14, 0.24, 0.56], 2, 2);
        let est = empirical_max_info(&t, 0.0).unwrap();
        assert!(est.bits.abs() < 1e-12);
    }

    #[test]
    fn perfect_copy_carries_one_bit() {
        let t = pair_table(vec![0.5, 0.0, 0.0, 0.5], 2, 2);
        let est = empirical_max_info(&t, 0.0).unwrap();
        assert!((est.bits - 1.0).abs() < 1e-12);
        // The one-atom prefix {0} already attains the ratio 0.5 / 0.25;
        // the sweep keeps the first maximizing prefix.
        assert_eq!(est.witness, vec![0]);
    }

    #[test]
    fn slack_discounts_the_copy() {
        let t = pair_table(vec![0.5, 0.0, 0.0, 0.5], 2, 2);
        let est = empirical_max_info(&t, 0.2).unwrap();
        // Best set is still the diagonal: (1 - 0.2) / 0.5.
        assert!((est.bits - (0.8f64 / 0.5).log2()).abs() < 1e-12);
    }

    #[test]
    fn more_slack_never_raises_the_value() {
        let t = pair_table(vec![0.4, 0.1, 0.05, 0.45], 2, 2);
        let mut last = f64::INFINITY;
        for &beta in &[0.0, 0.01, 0.05, 0.1, 0.3] {
            let est = empirical_max_info(&t, beta).unwrap();
            assert!(est.bits <= last + 1e-12);
            last = est.bits;
        }
    }

    #[test]
    fn zero_marginal_states_are_ignored() {
        // State 2 of x never occurs: its atoms have zero joint and zero
        // product mass, so they must not disturb the copy structure.
        let probs = vec![
            0.5, 0.0, //
            0.0, 0.5, //
            0.0, 0.0,
        ];
        let t = pair_table(probs, 3, 2);
        // Atom (2, y) has marginal-x zero: q = 0 everywhere in row 2 and
        // p = 0 too, so it is ignored; the copy structure dominates.
        let est = empirical_max_info(&t, 0.0).unwrap();
        assert!((est.bits - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_non_pair_tables() {
        let d = Domain::from_sizes(&[2, 2, 2]).unwrap();
        let t = JointTable::new(d, vec![0.125; 8]).unwrap();
        assert!(empirical_max_info(&t, 0.1).is_err());
    }

    #[test]
    fn rejects_unit_slack() {
        let t = pair_table(vec![0.25; 4], 2, 2);
        assert!(empirical_max_info(&t, 1.0).is_err());
    }
}
