//! Converting a Bayesian privacy target into a classical mechanism level.
//!
//! Correlation makes a mechanism leak more to informed adversaries than its
//! classical level suggests, so the mechanism must be run at a stricter
//! level. Three routes compute that level: per-node blanket coefficients,
//! per-node quilt candidates (pick the best partition per node), and a
//! closed form for reversible ergodic chains that needs only the spectral
//! gap and the minimum stationary probability.

use std::collections::BTreeSet;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::DependencyGraph;
use crate::influence::{blanket_coefficient, quilt_coefficient, InfluenceResult};
use crate::joint::JointTable;

/// Outcome of a conversion: the classical level to run at, or infeasibility
/// with the node that blocks.
#[derive(Debug, Clone, PartialEq)]
pub enum Converted {
    Feasible { epsilon_dp: f64, witness_node: usize },
    Infeasible { witness_node: usize },
}

impl Converted {
    /// The classical level, when one exists.
    pub fn epsilon_dp(&self) -> Option<f64> {
        match self {
            Converted::Feasible { epsilon_dp, .. } => Some(*epsilon_dp),
            Converted::Infeasible { .. } => None,
        }
    }

    /// Node whose coefficient binds the conversion.
    pub fn witness_node(&self) -> usize {
        match self {
            Converted::Feasible { witness_node, .. } | Converted::Infeasible { witness_node } => {
                *witness_node
            }
        }
    }
}

/// Classical level sufficient for a Bayesian target, from per-node blanket
/// influence coefficients: `min_i (eps - 4 a_i)`.
///
/// Infeasible when the minimum is not strictly positive, including any
/// infinite coefficient.
pub fn dp_for_bdp_blanket(coefficients: &[f64], epsilon_bdp: f64) -> Result<Converted> {
    if !(epsilon_bdp > 0.0) {
        return Err(Error::InvalidParams(format!(
            "bayesian epsilon must be positive, got {epsilon_bdp}"
        )));
    }
    if coefficients.is_empty() {
        return Err(Error::InvalidParams("need at least one coefficient".into()));
    }
    for (i, &a) in coefficients.iter().enumerate() {
        if a.is_nan() || a < 0.0 {
            return Err(Error::InvalidParams(format!("coefficient {i} is {a}")));
        }
    }
    let mut best = f64::INFINITY;
    let mut witness = 0;
    for (i, &a) in coefficients.iter().enumerate() {
        let e = epsilon_bdp - 4.0 * a;
        if e < best {
            best = e;
            witness = i;
        }
    }
    if best > 0.0 {
        Ok(Converted::Feasible { epsilon_dp: best, witness_node: witness })
    } else {
        Ok(Converted::Infeasible { witness_node: witness })
    }
}

/// One quilt option for a node: its influence coefficient and how many nodes
/// the quilt leaves nearby.
#[derive(Debug, Clone)]
pub struct QuiltOption {
    pub quilt: BTreeSet<usize>,
    pub nearby_size: usize,
    pub coefficient: f64,
}

/// Result of the quilt conversion for one node: its best option.
#[derive(Debug, Clone, Serialize)]
pub struct NodeConversion {
    pub node: usize,
    /// Separating set of the chosen option.
    pub quilt: Vec<usize>,
    pub nearby_size: usize,
    pub coefficient: f64,
    /// This node's level `(eps - 4 b) / (|nearby| + 1)`; negative when the
    /// node cannot meet the target through any option.
    pub epsilon_dp: f64,
}

/// Classical level from per-node quilt options:
/// `min_i max_options (eps - 4 b) / (|nearby| + 1)`.
///
/// Every node must offer at least one option. Returns the per-node choices
/// alongside the overall result; infeasible when some node's best option is
/// not strictly positive.
pub fn dp_for_bdp_quilts(
    options: &[Vec<QuiltOption>],
    epsilon_bdp: f64,
) -> Result<(Converted, Vec<NodeConversion>)> {
    if !(epsilon_bdp > 0.0) {
        return Err(Error::InvalidParams(format!(
            "bayesian epsilon must be positive, got {epsilon_bdp}"
        )));
    }
    if options.is_empty() {
        return Err(Error::InvalidParams("need at least one node".into()));
    }
    let mut per_node = Vec::with_capacity(options.len());
    for (node, opts) in options.iter().enumerate() {
        if opts.is_empty() {
            return Err(Error::EmptyCandidateSet { node });
        }
        let mut chosen: Option<NodeConversion> = None;
        for opt in opts {
            if opt.coefficient.is_nan() || opt.coefficient < 0.0 {
                return Err(Error::InvalidParams(format!(
                    "node {node} has coefficient {}",
                    opt.coefficient
                )));
            }
            let e = if opt.coefficient.is_infinite() {
                f64::NEG_INFINITY
            } else {
                (epsilon_bdp - 4.0 * opt.coefficient) / (opt.nearby_size as f64 + 1.0)
            };
            if chosen.as_ref().map_or(true, |c| e > c.epsilon_dp) {
                chosen = Some(NodeConversion {
                    node,
                    quilt: opt.quilt.iter().copied().collect(),
                    nearby_size: opt.nearby_size,
                    coefficient: opt.coefficient,
                    epsilon_dp: e,
                });
            }
        }
        per_node.push(chosen.unwrap());
    }
    let (witness, bound) = per_node
        .iter()
        .enumerate()
        .min_by(|(_, a), (_, b)| a.epsilon_dp.partial_cmp(&b.epsilon_dp).unwrap())
        .map(|(i, c)| (i, c.epsilon_dp))
        .unwrap();
    let converted = if bound > 0.0 {
        Converted::Feasible { epsilon_dp: bound, witness_node: witness }
    } else {
        Converted::Infeasible { witness_node: witness }
    };
    Ok((converted, per_node))
}

/// Blanket coefficients of every node, computed exhaustively from the joint.
pub fn blanket_coefficients(
    joint: &JointTable,
    graph: &DependencyGraph,
) -> Result<Vec<(f64, BTreeSet<usize>)>> {
    (0..graph.n())
        .map(|i| blanket_coefficient(joint, graph, i).map(|(r, b)| (r.value, b)))
        .collect()
}

/// Quilt options of every node from an enumerated family, with coefficients
/// computed exhaustively from the joint.
pub fn quilt_options(
    joint: &JointTable,
    families: &[Vec<crate::graph::QuiltPartition>],
    nearby_cap: usize,
) -> Result<Vec<Vec<QuiltOption>>> {
    families
        .iter()
        .map(|family| {
            family
                .iter()
                .map(|q| {
                    let InfluenceResult { value, .. } = quilt_coefficient(joint, q, nearby_cap)?;
                    Ok(QuiltOption {
                        quilt: q.quilt.clone(),
                        nearby_size: q.nearby.len(),
                        coefficient: value,
                    })
                })
                .collect()
        })
        .collect()
}

/// Terms of the chain conversion: window sizes `d` and `s` from the spectral
/// parameters, and the resulting classical level `h`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ChainConversion {
    pub gap: f64,
    pub min_stationary: f64,
    pub constant: f64,
    pub d: u64,
    pub s: u64,
    pub h: f64,
}

/// Classical level for a reversible ergodic chain of length `n`, from the
/// spectral gap `gap`, minimum stationary probability `min_stationary`, a
/// tuning constant in (0, 1/6), and the Bayesian target.
///
/// `d` counts steps until a changed state's influence decays below a
/// fraction of the target; `s` is the matching floor-rounded window for the
/// second term. Requires `n >= 2 d`.
pub fn h_markov(
    epsilon_bdp: f64,
    gap: f64,
    min_stationary: f64,
    constant: f64,
    n: usize,
) -> Result<ChainConversion> {
    let (d_real, conv) = h_markov_terms(epsilon_bdp, gap, min_stationary, constant)?;
    if 2.0 * d_real > n as f64 {
        let need = (2.0 * d_real).ceil();
        let need = if need > usize::MAX as f64 { usize::MAX } else { need as usize };
        return Err(Error::ChainTooShort { n, need });
    }
    Ok(conv)
}

/// As `h_markov` without the chain-length requirement, for asymptotic
/// reporting where `n` is the unknown being solved for.
pub fn h_markov_unchecked(
    epsilon_bdp: f64,
    gap: f64,
    min_stationary: f64,
    constant: f64,
) -> Result<ChainConversion> {
    Ok(h_markov_terms(epsilon_bdp, gap, min_stationary, constant)?.1)
}

fn h_markov_terms(
    epsilon_bdp: f64,
    gap: f64,
    min_stationary: f64,
    constant: f64,
) -> Result<(f64, ChainConversion)> {
    if !(epsilon_bdp > 0.0) {
        return Err(Error::InvalidParams(format!(
            "bayesian epsilon must be positive, got {epsilon_bdp}"
        )));
    }
    if !(gap > 0.0 && gap <= 1.0) {
        return Err(Error::InvalidParams(format!("spectral gap {gap} outside (0, 1]")));
    }
    if !(min_stationary > 0.0 && min_stationary <= 1.0) {
        return Err(Error::InvalidParams(format!(
            "minimum stationary probability {min_stationary} outside (0, 1]"
        )));
    }
    if !(constant > 0.0 && constant < 1.0 / 6.0) {
        return Err(Error::InvalidConstant(format!(
            "chain constant {constant} outside (0, 1/6)"
        )));
    }
    let window = |eps: f64| -> f64 {
        let e = eps.exp();
        ((e + 1.0) / (min_stationary * (e - 1.0))).ln() / gap
    };
    let d_real = window(constant * epsilon_bdp);
    let d = d_real.ceil();
    let s = window(epsilon_bdp / 6.0).floor();
    let h = f64::min(
        (1.0 - 6.0 * constant) * epsilon_bdp / (2.0 * d - 1.0),
        (1.0 / 3.0 - 2.0 * constant) * epsilon_bdp / (d + s),
    );
    let conv = ChainConversion {
        gap,
        min_stationary,
        constant,
        d: d as u64,
        s: s as u64,
        h,
    };
    Ok((d_real, conv))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn independent_data_converts_one_to_one() {
        let c = dp_for_bdp_blanket(&[0.0, 0.0, 0.0], 1.0).unwrap();
        assert_eq!(c.epsilon_dp(), Some(1.0));
    }

    #[test]
    fn blanket_conversion_takes_worst_node() {
        let c = dp_for_bdp_blanket(&[0.1, 0.05], 1.0).unwrap();
        assert!((c.epsilon_dp().unwrap() - 0.6).abs() < 1e-15);
        assert_eq!(c.witness_node(), 0);
    }

    #[test]
    fn strong_coupling_is_infeasible() {
        let c = dp_for_bdp_blanket(&[0.3], 1.0).unwrap();
        assert!(matches!(c, Converted::Infeasible { witness_node: 0 }));
    }

    #[test]
    fn infinite_coefficient_is_infeasible() {
        let c = dp_for_bdp_blanket(&[f64::INFINITY], 10.0).unwrap();
        assert!(matches!(c, Converted::Infeasible { witness_node: 0 }));
    }

    #[test]
    fn quilt_conversion_picks_best_option_per_node() {
        // Options for one node: blanket-like (b = 0.1, nearby 0) gives 0.6;
        // wider cut (b = 0.025, nearby 2) gives 0.3; the node takes 0.6.
        let options = vec![vec![
            QuiltOption { quilt: BTreeSet::new(), nearby_size: 0, coefficient: 0.1 },
            QuiltOption { quilt: BTreeSet::new(), nearby_size: 2, coefficient: 0.025 },
        ]];
        let (c, per_node) = dp_for_bdp_quilts(&options, 1.0).unwrap();
        assert!((c.epsilon_dp().unwrap() - 0.6).abs() < 1e-15);
        assert_eq!(per_node[0].nearby_size, 0);
    }

    #[test]
    fn quilt_conversion_requires_options_everywhere() {
        let options = vec![vec![QuiltOption {
            quilt: BTreeSet::new(),
            nearby_size: 0,
            coefficient: 0.0,
        }], vec![]];
        let err = dp_for_bdp_quilts(&options, 1.0).unwrap_err();
        assert!(matches!(err, Error::EmptyCandidateSet { node: 1 }));
    }

    #[test]
    fn quilt_conversion_with_blanket_options_matches_blanket_conversion() {
        let coeffs = [0.12, 0.07, 0.02];
        let options: Vec<Vec<QuiltOption>> = coeffs
            .iter()
            .map(|&a| {
                vec![QuiltOption { quilt: BTreeSet::new(), nearby_size: 0, coefficient: a }]
            })
            .collect();
        let (via_quilts, _) = dp_for_bdp_quilts(&options, 1.0).unwrap();
        let via_blankets = dp_for_bdp_blanket(&coeffs, 1.0).unwrap();
        assert_eq!(via_quilts.epsilon_dp(), via_blankets.epsilon_dp());
    }

    #[test]
    fn infinite_option_loses_to_finite_one() {
        let options = vec![vec![
            QuiltOption { quilt: BTreeSet::new(), nearby_size: 0, coefficient: f64::INFINITY },
            QuiltOption { quilt: BTreeSet::new(), nearby_size: 1, coefficient: 0.05 },
        ]];
        let (c, _) = dp_for_bdp_quilts(&options, 1.0).unwrap();
        assert!((c.epsilon_dp().unwrap() - 0.4).abs() < 1e-15);
    }

    #[test]
    fn chain_conversion_matches_hand_computation() {
        // gap 0.3, min stationary 1/3, constant 0.1, target 1: d = 14,
        // s = 11, h = min(0.4/27, (1/3 - 0.2)/25).
        let conv = h_markov(1.0, 0.3, 1.0 / 3.0, 0.1, 100).unwrap();
        assert_eq!(conv.d, 14);
        assert_eq!(conv.s, 11);
        let expected = f64::min(0.4 / 27.0, (1.0 / 3.0 - 0.2) / 25.0);
        assert!((conv.h - expected).abs() < 1e-15);
        assert!((conv.h - 5.333333333333333e-3).abs() < 1e-12);
    }

    #[test]
    fn chain_conversion_rejects_short_chains() {
        let err = h_markov(1.0, 0.3, 1.0 / 3.0, 0.1, 10).unwrap_err();
        assert!(matches!(err, Error::ChainTooShort { n: 10, need: 28 }));
    }

    #[test]
    fn chain_conversion_rejects_bad_constant() {
        assert!(matches!(
            h_markov(1.0, 0.3, 0.3, 1.0 / 6.0, 100).unwrap_err(),
            Error::InvalidConstant(_)
        ));
        assert!(matches!(
            h_markov(1.0, 0.3, 0.3, 0.0, 100).unwrap_err(),
            Error::InvalidConstant(_)
        ));
    }

    #[test]
    fn chain_conversion_is_monotone_in_target() {
        // A stricter Bayesian target never yields a looser mechanism level.
        let mut last = 0.0;
        for i in 1..=30 {
            let eps = 0.2 * i as f64;
            let conv = h_markov_unchecked(eps, 0.3, 1.0 / 3.0, 0.1).unwrap();
            assert!(conv.h >= last - 1e-15, "h dropped at eps {eps}");
            last = conv.h;
        }
    }

    #[test]
    fn chain_conversion_is_strictly_tighter_than_target() {
        for &(eps, gap, rho) in
            &[(0.5, 0.2, 0.1), (1.0, 0.3, 1.0 / 3.0), (2.0, 0.9, 0.5), (4.0, 0.05, 0.01)]
        {
            let conv = h_markov_unchecked(eps, gap, rho, 0.1).unwrap();
            assert!(conv.h > 0.0);
            assert!(conv.h < eps);
        }
    }
}
