//! Max-influence of one variable on a set of others: the worst-case log-ratio
//! of observed-set conditionals under a change of the influencing variable,
//! optionally conditioned on a third set.
//!
//! The value is zero exactly when the observed set is conditionally
//! independent of the influencing variable, and infinite when a state change
//! can turn a possible observation into an impossible one. Computation is
//! exhaustive over dense marginals; nothing is sampled.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::graph::{DependencyGraph, QuiltPartition};
use crate::joint::JointTable;

/// Default cap on the nearby-set size in quilt coefficients; the subset
/// enumeration is exponential in it.
pub const DEFAULT_NEARBY_CAP: usize = 20;

/// Assignment pair witnessing a maximal ratio.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InfluenceWitness {
    /// Assignment of the observed set, as `(node, state)` pairs.
    pub observed: Vec<(usize, usize)>,
    /// Influencing state in the ratio numerator.
    pub target_state: usize,
    /// Influencing state in the ratio denominator.
    pub target_alt: usize,
    /// Assignment of the conditioning set, as `(node, state)` pairs.
    pub conditioned: Vec<(usize, usize)>,
}

/// Value of a max-influence computation, with the witness achieving it.
///
/// `value` is `0.0` with no witness when every admissible ratio equals one;
/// it is `f64::INFINITY` when some possible observation becomes impossible.
#[derive(Debug, Clone)]
pub struct InfluenceResult {
    pub value: f64,
    pub witness: Option<InfluenceWitness>,
}

/// Max-influence of `target` on the set `observed`.
pub fn max_influence(
    joint: &JointTable,
    observed: &[usize],
    target: usize,
) -> Result<InfluenceResult> {
    max_influence_cond(joint, observed, target, &[])
}

/// Max-influence of `target` on `observed`, conditioned on `conditioned`.
///
/// All three node sets must be disjoint. Influencing states whose joint
/// probability with the conditioning assignment is zero are excluded (the
/// conditional is undefined there); ratios `0/0` are treated as one and
/// excluded from the maximum. Ties in the maximum resolve to the
/// lexicographically first assignment in `(observed, target_state,
/// target_alt, conditioned)` order, observed and conditioned sets ascending.
pub fn max_influence_cond(
    joint: &JointTable,
    observed: &[usize],
    target: usize,
    conditioned: &[usize],
) -> Result<InfluenceResult> {
    let n = joint.n();
    let mut seen = BTreeSet::new();
    for &v in observed.iter().chain(conditioned.iter()).chain([&target]) {
        if v >= n {
            return Err(Error::IndexOutOfRange { index: v, n });
        }
        if !seen.insert(v) {
            return Err(Error::InvalidParams(format!(
                "node {v} appears in more than one of observed/target/conditioned"
            )));
        }
    }
    if observed.is_empty() {
        return Ok(InfluenceResult { value: 0.0, witness: None });
    }

    let mut obs: Vec<usize> = observed.to_vec();
    obs.sort_unstable();
    let mut cond: Vec<usize> = conditioned.to_vec();
    cond.sort_unstable();

    // Marginal over (observed, target, conditioned) in that index order, and
    // over (target, conditioned) for the conditioning events.
    let mut order = obs.clone();
    order.push(target);
    order.extend(cond.iter().copied());
    let full = joint.marginal(&order)?;
    let mut ik_order = vec![target];
    ik_order.extend(cond.iter().copied());
    let marg = joint.marginal(&ik_order)?;

    let k_target = joint.domain().size(target);
    let obs_sizes: Vec<usize> = obs.iter().map(|&v| joint.domain().size(v)).collect();
    let cond_sizes: Vec<usize> = cond.iter().map(|&v| joint.domain().size(v)).collect();
    let obs_space: usize = obs_sizes.iter().product();
    let cond_space: usize = cond_sizes.iter().product();

    let mut best = InfluenceResult { value: 0.0, witness: None };
    let mut obs_assign = vec![0usize; obs.len()];
    for s_idx in 0..obs_space {
        decode_into(s_idx, &obs_sizes, &mut obs_assign);
        for xi in 0..k_target {
            for xj in 0..k_target {
                if xi == xj {
                    continue;
                }
                let mut cond_assign = vec![0usize; cond.len()];
                for k_idx in 0..cond_space {
                    decode_into(k_idx, &cond_sizes, &mut cond_assign);
                    // full index layout: ((s_idx * k_target) + x) * cond_space + k_idx
                    let p_i = marg.prob(xi * cond_space + k_idx);
                    let p_j = marg.prob(xj * cond_space + k_idx);
                    if p_i == 0.0 || p_j == 0.0 {
                        continue;
                    }
                    let num = full.prob((s_idx * k_target + xi) * cond_space + k_idx) * p_j;
                    let den = full.prob((s_idx * k_target + xj) * cond_space + k_idx) * p_i;
                    let value = if num == 0.0 && den == 0.0 {
                        continue;
                    } else if den == 0.0 {
                        f64::INFINITY
                    } else {
                        (num / den).ln()
                    };
                    if value > best.value {
                        best = InfluenceResult {
                            value,
                            witness: Some(InfluenceWitness {
                                observed: obs.iter().copied().zip(obs_assign.iter().copied()).collect(),
                                target_state: xi,
                                target_alt: xj,
                                conditioned: cond
                                    .iter()
                                    .copied()
                                    .zip(cond_assign.iter().copied())
                                    .collect(),
                            }),
                        };
                        if best.value.is_infinite() {
                            return Ok(best);
                        }
                    }
                }
            }
        }
    }
    Ok(best)
}

fn decode_into(mut idx: usize, sizes: &[usize], out: &mut [usize]) {
    for pos in (0..sizes.len()).rev() {
        out[pos] = idx % sizes[pos];
        idx /= sizes[pos];
    }
}

/// Influence of node `i` on its Markov blanket: the per-node coefficient of
/// the blanket conversion. Returns the blanket alongside the result.
pub fn blanket_coefficient(
    joint: &JointTable,
    graph: &DependencyGraph,
    target: usize,
) -> Result<(InfluenceResult, BTreeSet<usize>)> {
    if graph.n() != joint.n() {
        return Err(Error::InvalidParams(format!(
            "graph has {} nodes, joint has {}",
            graph.n(),
            joint.n()
        )));
    }
    let blanket = graph.markov_blanket(target)?;
    let nodes: Vec<usize> = blanket.iter().copied().collect();
    let result = max_influence(joint, &nodes, target)?;
    Ok((result, blanket))
}

/// Influence of the quilt's target on its separating set, maximized over all
/// subsets of the nearby set as conditioning: the per-quilt coefficient of
/// the quilt conversion.
///
/// Exponential in `|nearby|`; sizes above `nearby_cap` are rejected.
pub fn quilt_coefficient(
    joint: &JointTable,
    quilt: &QuiltPartition,
    nearby_cap: usize,
) -> Result<InfluenceResult> {
    if quilt.nearby.len() > nearby_cap {
        return Err(Error::CapExceeded {
            needed: quilt.nearby.len() as u128,
            cap: nearby_cap as u128,
        });
    }
    let q_nodes: Vec<usize> = quilt.quilt.iter().copied().collect();
    let n_nodes: Vec<usize> = quilt.nearby.iter().copied().collect();
    let mut best = InfluenceResult { value: 0.0, witness: None };
    for mask in 0u64..(1u64 << n_nodes.len()) {
        let subset: Vec<usize> = n_nodes
            .iter()
            .enumerate()
            .filter(|(pos, _)| mask >> pos & 1 == 1)
            .map(|(_, &v)| v)
            .collect();
        let r = max_influence_cond(joint, &q_nodes, quilt.target, &subset)?;
        if r.value > best.value {
            best = r;
            if best.value.is_infinite() {
                break;
            }
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::MarkovChainSpec;
    use crate::joint::{for_each_outcome, Domain};

    fn lazy_chain_joint(n: usize) -> JointTable {
        MarkovChainSpec::new(vec![vec![0.9, 0.1], vec![0.2, 0.8]], vec![0.5, 0.5], n)
            .unwrap()
            .joint_table(1 << 22)
            .unwrap()
    }

    fn product_joint(marginals: &[Vec<f64>]) -> JointTable {
        let sizes: Vec<usize> = marginals.iter().map(|m| m.len()).collect();
        let domain = Domain::from_sizes(&sizes).unwrap();
        let mut probs = Vec::new();
        for_each_outcome(&sizes, |_, assign| {
            probs.push(
                assign
                    .iter()
                    .enumerate()
                    .map(|(v, &s)| marginals[v][s])
                    .product(),
            );
        });
        JointTable::new(domain, probs).unwrap()
    }

    /// Joint where variable 1 copies variable 0 exactly.
    fn copy_pair() -> JointTable {
        let d = Domain::from_sizes(&[2, 2]).unwrap();
        JointTable::new(d, vec![0.5, 0.0, 0.0, 0.5]).unwrap()
    }

    #[test]
    fn empty_observed_set_has_no_influence() {
        let t = lazy_chain_joint(2);
        let r = max_influence(&t, &[], 0).unwrap();
        assert_eq!(r.value, 0.0);
        assert!(r.witness.is_none());
    }

    #[test]
    fn independent_variables_have_no_influence() {
        let t = product_joint(&[vec![0.3, 0.7], vec![0.6, 0.4]]);
        let r = max_influence(&t, &[1], 0).unwrap();
        assert!(r.value.abs() < 1e-12);
        assert!(r.witness.is_none());
    }

    #[test]
    fn chain_pair_influence_is_ln_eight() {
        // The supremum ranges over both orderings of the target pair:
        // P(x1=1 | x0=1) / P(x1=1 | x0=0) = 0.8 / 0.1 beats 0.9 / 0.2.
        let t = lazy_chain_joint(2);
        let r = max_influence(&t, &[1], 0).unwrap();
        assert!((r.value - 8.0f64.ln()).abs() < 1e-12);
        let w = r.witness.unwrap();
        assert_eq!(w.observed, vec![(1, 1)]);
        assert_eq!((w.target_state, w.target_alt), (1, 0));
    }

    #[test]
    fn deterministic_copy_has_infinite_influence() {
        let t = copy_pair();
        let r = max_influence(&t, &[1], 0).unwrap();
        assert!(r.value.is_infinite());
        assert!(r.witness.is_some());
    }

    #[test]
    fn conditioning_on_separator_kills_influence() {
        // On a 3-chain, x2 is independent of x0 given x1.
        let t = lazy_chain_joint(3);
        let r = max_influence_cond(&t, &[2], 0, &[1]).unwrap();
        assert!(r.value.abs() < 1e-12);
    }

    #[test]
    fn empty_conditioning_matches_unconditional() {
        let t = lazy_chain_joint(3);
        let a = max_influence_cond(&t, &[2], 0, &[]).unwrap();
        let b = max_influence(&t, &[2], 0).unwrap();
        assert_eq!(a.value, b.value);
    }

    #[test]
    fn two_step_influence_matches_squared_transition() {
        // P(x2 | x0) is the two-step transition [[0.83, 0.17], [0.34, 0.66]];
        // the extreme ratio is 0.66 / 0.17.
        let t = lazy_chain_joint(3);
        let r = max_influence(&t, &[2], 0).unwrap();
        assert!((r.value - (0.66f64 / 0.17).ln()).abs() < 1e-12);
    }

    #[test]
    fn influence_is_symmetric_under_state_relabeling() {
        // Swapping both states of the target flips numerator and denominator
        // roles but preserves the maximum.
        let d = Domain::from_sizes(&[2, 2]).unwrap();
        let t = JointTable::new(d.clone(), vec![0.45, 0.05, 0.10, 0.40]).unwrap();
        let swapped = JointTable::new(d, vec![0.10, 0.40, 0.45, 0.05]).unwrap();
        let a = max_influence(&t, &[1], 0).unwrap();
        let b = max_influence(&swapped, &[1], 0).unwrap();
        assert!((a.value - b.value).abs() < 1e-12);
    }

    #[test]
    fn blanket_coefficient_on_two_chain() {
        let t = lazy_chain_joint(2);
        let g = DependencyGraph::path(2).unwrap();
        let (r, blanket) = blanket_coefficient(&t, &g, 0).unwrap();
        assert_eq!(blanket, [1usize].into_iter().collect());
        assert!((r.value - 8.0f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn blanket_coefficient_interior_node() {
        // Blanket of node 1 on a 3-chain is {0, 2}.
        let t = lazy_chain_joint(3);
        let g = DependencyGraph::path(3).unwrap();
        let (r, blanket) = blanket_coefficient(&t, &g, 1).unwrap();
        assert_eq!(blanket, [0usize, 2].into_iter().collect());
        assert!(r.value > 0.0 && r.value.is_finite());
    }

    #[test]
    fn quilt_coefficient_of_blanket_quilt_equals_blanket_coefficient() {
        let t = lazy_chain_joint(3);
        let g = DependencyGraph::path(3).unwrap();
        let quilts = crate::graph::enumerate_chain_quilts(3, 1).unwrap();
        let blanket_quilt = quilts
            .iter()
            .find(|q| q.nearby.is_empty() && q.quilt.len() == 2)
            .unwrap();
        let qc = quilt_coefficient(&t, blanket_quilt, DEFAULT_NEARBY_CAP).unwrap();
        let (bc, _) = blanket_coefficient(&t, &g, 1).unwrap();
        assert!((qc.value - bc.value).abs() < 1e-12);
    }

    #[test]
    fn quilt_coefficient_conditions_on_worst_nearby_subset() {
        // Quilt {2} for target 0 with nearby {1}: conditioning on x1 cannot
        // help the adversary less than ignoring it, so the coefficient is at
        // least the unconditional influence on {2}.
        let t = lazy_chain_joint(3);
        let quilts = crate::graph::enumerate_chain_quilts(3, 0).unwrap();
        let q = quilts
            .iter()
            .find(|q| q.quilt == [2usize].into_iter().collect() && q.nearby == [1usize].into_iter().collect())
            .unwrap();
        let qc = quilt_coefficient(&t, q, DEFAULT_NEARBY_CAP).unwrap();
        let unconditional = max_influence(&t, &[2], 0).unwrap();
        assert!(qc.value >= unconditional.value - 1e-15);
        // Conditioning on the in-between node makes the cut a separator, so
        // the subset {1} contributes zero and the max comes from the empty
        // subset.
        assert!((qc.value - unconditional.value).abs() < 1e-12);
    }

    #[test]
    fn quilt_coefficient_rejects_oversized_nearby() {
        let t = lazy_chain_joint(3);
        let quilts = crate::graph::enumerate_chain_quilts(3, 0).unwrap();
        let wide = quilts.iter().find(|q| q.nearby.len() == 2).unwrap();
        let err = quilt_coefficient(&t, wide, 1).unwrap_err();
        assert!(matches!(err, Error::CapExceeded { .. }));
    }

    #[test]
    fn empty_quilt_has_zero_coefficient() {
        let t = lazy_chain_joint(3);
        let quilts = crate::graph::enumerate_chain_quilts(3, 0).unwrap();
        let empty = quilts.iter().find(|q| q.quilt.is_empty()).unwrap();
        let r = quilt_coefficient(&t, empty, DEFAULT_NEARBY_CAP).unwrap();
        assert_eq!(r.value, 0.0);
    }

    #[test]
    fn witness_reproduces_reported_value() {
        let t = lazy_chain_joint(3);
        let r = max_influence(&t, &[1, 2], 0).unwrap();
        let w = r.witness.as_ref().unwrap();
        let p_num = t
            .conditional(&w.observed, &[(0, w.target_state)])
            .unwrap();
        let p_den = t.conditional(&w.observed, &[(0, w.target_alt)]).unwrap();
        assert!((r.value - (p_num / p_den).ln()).abs() < 1e-12);
    }
}
