//! Slow, independent re-derivations used as cross-checks: subset
//! enumeration behind the max-information sweep, direct verification of
//! conditional independence, and a deterministic self-test battery that
//! exercises the fast paths against these oracles.

use crate::bounds::MaxInfoEstimate;
use crate::calibration::{blanket_coefficients, dp_for_bdp_blanket, Converted};
use crate::error::{Error, Result};
use crate::graph::DependencyGraph;
use crate::influence::max_influence_cond;
use crate::joint::{for_each_outcome, Domain, JointTable};
use crate::leakage::{bdpl_bruteforce, dp_leakage_bruteforce, DiscreteMechanism};
use crate::noise::NoiseSource;

/// Largest atom count whose full power set is enumerated.
pub const SUBSET_ENUMERATION_CAP: usize = 20;

/// Max-information by explicit enumeration of every nonempty outcome set.
/// Sums run in ascending atom order, the same order the sweep uses, so a
/// set common to both paths accumulates bit-identically.
pub fn max_info_bruteforce(joint: &JointTable, beta: f64) -> Result<MaxInfoEstimate> {
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
    let atoms = p.len();
    if atoms > SUBSET_ENUMERATION_CAP {
        return Err(Error::CapExceeded {
            needed: 1u128 << atoms,
            cap: 1u128 << SUBSET_ENUMERATION_CAP,
        });
    }
    let mx = joint.marginal(&[0])?;
    let my = joint.marginal(&[1])?;
    let ky = joint.domain().size(1);
    let q: Vec<f64> = (0..atoms).map(|idx| mx.prob(idx / ky) * my.prob(idx % ky)).collect();

    let mut best: Option<(f64, Vec<usize>)> = None;
    for mask in 1u32..(1u32 << atoms) {
        let mut sp = 0.0;
        let mut sq = 0.0;
        for (i, (pi, qi)) in p.iter().zip(&q).enumerate() {
            if mask & (1 << i) != 0 {
                sp += pi;
                sq += qi;
            }
        }
        if sp <= beta {
            continue;
        }
        let value = if sq == 0.0 { f64::INFINITY } else { (sp - beta) / sq };
        if best.as_ref().map_or(true, |(v, _)| value > *v) {
            let atoms_of_mask = (0..atoms).filter(|i| mask & (1 << i) != 0).collect();
            best = Some((value, atoms_of_mask));
        }
    }
    match best {
        None => Err(Error::NoFeasibleSubset),
        Some((value, witness)) => Ok(MaxInfoEstimate { bits: value.log2(), witness }),
    }
}

/// Checks `X_left` independent of `X_right` given `X_given` directly on the
/// table: every conditional product identity within `tol`, over conditioning
/// events of positive probability.
pub fn conditional_independence_check(
    joint: &JointTable,
    left: &[usize],
    right: usize,
    given: &[usize],
    tol: f64,
) -> Result<bool> {
    let mut all: Vec<usize> = left.to_vec();
    all.push(right);
    all.extend_from_slice(given);
    let m_all = joint.marginal(&all)?;
    let left_given: Vec<usize> = left.iter().copied().chain(given.iter().copied()).collect();
    let m_lk = joint.marginal(&left_given)?;
    let right_given: Vec<usize> = std::iter::once(right).chain(given.iter().copied()).collect();
    let m_rk = joint.marginal(&right_given)?;
    let m_k = if given.is_empty() { None } else { Some(joint.marginal(given)?) };

    let sizes: Vec<usize> = all.iter().map(|&v| joint.domain().size(v)).collect();
    let nl = left.len();
    let mut ok = true;
    for_each_outcome(&sizes, |_, assign| {
        if !ok {
            return;
        }
        let (lr, k) = assign.split_at(nl + 1);
        let (l, r) = lr.split_at(nl);
        let pk = match &m_k {
            None => 1.0,
            Some(m) => m.prob(m.index_of(k)),
        };
        if pk == 0.0 {
            return;
        }
        let p_all = m_all.prob(m_all.index_of(assign)) / pk;
        let lk: Vec<usize> = l.iter().chain(k.iter()).copied().collect();
        let rk: Vec<usize> = r.iter().chain(k.iter()).copied().collect();
        let p_l = m_lk.prob(m_lk.index_of(&lk)) / pk;
        let p_r = m_rk.prob(m_rk.index_of(&rk)) / pk;
        if (p_all - p_l * p_r).abs() > tol {
            ok = false;
        }
    });
    Ok(ok)
}

/// One named check of the battery.
#[derive(Debug, Clone)]
pub struct SelfTestOutcome {
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

/// Runs the whole battery with fixed internal seeds; the outcome list is
/// deterministic.
pub fn selftest() -> Vec<SelfTestOutcome> {
    vec![
        run("max-information sweep equals subset enumeration", maxinfo_sweep_vs_enumeration),
        run("influence vanishes exactly across a separator", influence_vanishes_when_separated),
        run("bayesian and classical leakage coincide for independent tuples", leakage_levels_agree),
        run("blanket conversion never under-protects", conversion_soundness),
        run("laplace sampler moments", laplace_moments),
    ]
}

fn run(name: &'static str, f: impl FnOnce() -> Result<(bool, String)>) -> SelfTestOutcome {
    match f() {
        Ok((pass, detail)) => SelfTestOutcome { name, pass, detail },
        Err(e) => SelfTestOutcome { name, pass: false, detail: e.to_string() },
    }
}

/// Exponential spacings normalized to a strictly positive distribution.
fn random_simplex(noise: &mut NoiseSource, len: usize) -> Vec<f64> {
    let mut v: Vec<f64> = (0..len).map(|_| -(1.0 - noise.uniform01()).ln()).collect();
    let sum: f64 = v.iter().sum();
    v.iter_mut().for_each(|e| *e /= sum);
    v
}

/// Random 3-node binary chain joint: P(a,b,c) = p(a) t1[a][b] t2[b][c].
fn random_binary_chain_joint(noise: &mut NoiseSource) -> Result<JointTable> {
    let p0 = random_simplex(noise, 2);
    let t1 = [random_simplex(noise, 2), random_simplex(noise, 2)];
    let t2 = [random_simplex(noise, 2), random_simplex(noise, 2)];
    let mut probs = Vec::with_capacity(8);
    for a in 0..2 {
        for b in 0..2 {
            for c in 0..2 {
                probs.push(p0[a] * t1[a][b] * t2[b][c]);
            }
        }
    }
    JointTable::new(Domain::from_sizes(&[2, 2, 2])?, probs)
}

fn maxinfo_sweep_vs_enumeration() -> Result<(bool, String)> {
    let mut noise = NoiseSource::seeded(101);
    let shapes = [(2, 2), (2, 3), (3, 3), (2, 4), (3, 4)];
    let mut compared = 0;
    for round in 0..30 {
        let (kx, ky) = shapes[round % shapes.len()];
        let probs = random_simplex(&mut noise, kx * ky);
        let joint = JointTable::new(Domain::from_sizes(&[kx, ky])?, probs)?;
        for beta in [0.0, 0.05] {
            let sweep = crate::bounds::empirical_max_info(&joint, beta)?;
            let brute = max_info_bruteforce(&joint, beta)?;
            if sweep.bits != brute.bits {
                return Ok((
                    false,
                    format!(
                        "round {round} beta {beta}: sweep {} bits, enumeration {} bits",
                        sweep.bits, brute.bits
                    ),
                ));
            }
            compared += 1;
        }
    }
    Ok((true, format!("{compared} exact agreements")))
}

fn influence_vanishes_when_separated() -> Result<(bool, String)> {
    let mut noise = NoiseSource::seeded(102);
    let mut max_conditional: f64 = 0.0;
    let mut max_unconditional: f64 = 0.0;
    for _ in 0..20 {
        let joint = random_binary_chain_joint(&mut noise)?;
        let conditional = max_influence_cond(&joint, &[2], 0, &[1])?.value;
        max_conditional = max_conditional.max(conditional);
        let unconditional = max_influence_cond(&joint, &[2], 0, &[])?.value;
        max_unconditional = max_unconditional.max(unconditional);
        if !conditional_independence_check(&joint, &[2], 0, &[1], 1e-12)? {
            return Ok((false, "separator failed the direct product identity".into()));
        }
    }
    let pass = max_conditional <= 1e-9 && max_unconditional > 1e-3;
    Ok((
        pass,
        format!(
            "conditional influence <= {max_conditional:.2e}, unconditional reaches \
             {max_unconditional:.3}"
        ),
    ))
}

fn leakage_levels_agree() -> Result<(bool, String)> {
    let mut noise = NoiseSource::seeded(103);
    let mut worst: f64 = 0.0;
    for _ in 0..15 {
        let px = random_simplex(&mut noise, 2);
        let py = random_simplex(&mut noise, 2);
        let probs: Vec<f64> =
            (0..4).map(|idx| px[idx / 2] * py[idx % 2]).collect();
        let prior = JointTable::new(Domain::from_sizes(&[2, 2])?, probs)?;
        let rows: Vec<Vec<f64>> = (0..4).map(|_| random_simplex(&mut noise, 2)).collect();
        let mech = DiscreteMechanism::new(
            prior.domain().clone(),
            vec!["0".into(), "1".into()],
            rows,
        )?;
        let dp = dp_leakage_bruteforce(&mech)?;
        let bdpl = bdpl_bruteforce(&mech, &prior)?;
        worst = worst.max((dp - bdpl).abs());
    }
    Ok((worst <= 1e-9, format!("largest discrepancy {worst:.2e}")))
}

fn conversion_soundness() -> Result<(bool, String)> {
    let mut noise = NoiseSource::seeded(104);
    let graph = DependencyGraph::path(3)?;
    let mut worst_excess: f64 = f64::NEG_INFINITY;
    for _ in 0..10 {
        let joint = random_binary_chain_joint(&mut noise)?;
        let coeffs: Vec<f64> = blanket_coefficients(&joint, &graph)?
            .into_iter()
            .map(|(a, _)| a)
            .collect();
        let a_max = coeffs.iter().cloned().fold(0.0, f64::max);
        // Pick the target so the conversion is feasible by construction.
        let epsilon_bdp = 4.0 * a_max + 1.0 + noise.uniform01();
        let epsilon_dp = match dp_for_bdp_blanket(&coeffs, epsilon_bdp)? {
            Converted::Feasible { epsilon_dp, .. } => epsilon_dp,
            Converted::Infeasible { .. } => {
                return Ok((false, "construction should be feasible".into()))
            }
        };
        let flip = 1.0 / (1.0 + epsilon_dp.exp());
        for tuple in 0..3 {
            let mech = response_on_tuple(3, tuple, flip)?;
            let dp = dp_leakage_bruteforce(&mech)?;
            if (dp - epsilon_dp).abs() > 1e-9 {
                return Ok((false, format!("mechanism level {dp} missed target {epsilon_dp}")));
            }
            let bdpl = bdpl_bruteforce(&mech, &joint)?;
            worst_excess = worst_excess.max(bdpl - epsilon_bdp);
        }
    }
    Ok((
        worst_excess <= 1e-9,
        format!("largest bayesian excess over target {worst_excess:.2e}"),
    ))
}

/// Randomized response applied to one tuple of an n-bit database.
fn response_on_tuple(n: usize, tuple: usize, flip: f64) -> Result<DiscreteMechanism> {
    let domain = Domain::from_sizes(&vec![2; n])?;
    let stride = 1usize << (n - 1 - tuple);
    let rows = (0..1usize << n)
        .map(|x| {
            let bit = (x / stride) % 2;
            if bit == 0 {
                vec![1.0 - flip, flip]
            } else {
                vec![flip, 1.0 - flip]
            }
        })
        .collect();
    DiscreteMechanism::new(domain, vec!["0".into(), "1".into()], rows)
}

fn laplace_moments() -> Result<(bool, String)> {
    let mut noise = NoiseSource::seeded(105);
    let draws = 100_000;
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for _ in 0..draws {
        let x = noise.laplace(1.0);
        sum += x;
        sum_sq += x * x;
    }
    let mean = sum / draws as f64;
    let var = sum_sq / draws as f64 - mean * mean;
    let pass = mean.abs() < 0.02 && (1.94..=2.06).contains(&var);
    Ok((pass, format!("mean {mean:.4}, variance {var:.4}")))
}
