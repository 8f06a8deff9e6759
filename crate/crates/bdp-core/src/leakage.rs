//! Exact leakage measurement for discrete mechanisms over small databases.
//!
//! Two quantities, both computed by exhaustive enumeration: the classical
//! worst-case log-ratio over neighboring databases, and the Bayesian variant
//! where an adversary knows some tuples exactly and holds the prior over the
//! rest. Singleton outputs suffice for both, because a ratio of set
//! probabilities is bounded by its largest atom ratio.

use crate::error::{Error, Result};
use crate::joint::{for_each_outcome, Domain, JointTable, PROB_TOLERANCE};

/// Work cap for the brute-force enumerations (outcome pairs times outputs).
pub const ENUMERATION_CAP: u128 = 100_000_000;

/// A randomized mechanism over a finite database domain, given as one output
/// distribution per database instantiation.
///
/// Rows are indexed by the domain's row-major outcome index and each must be
/// a probability vector over the shared output alphabet.
#[derive(Debug, Clone)]
pub struct DiscreteMechanism {
    domain: Domain,
    outputs: Vec<String>,
    rows: Vec<Vec<f64>>,
}

impl DiscreteMechanism {
    /// Validates one row per database instantiation. Rows must sum to one
    /// within tolerance; nothing is renormalized.
    pub fn new(domain: Domain, outputs: Vec<String>, rows: Vec<Vec<f64>>) -> Result<Self> {
        if outputs.is_empty() {
            return Err(Error::InvalidParams("mechanism needs at least one output".into()));
        }
        let mut unique = outputs.clone();
        unique.sort();
        unique.dedup();
        if unique.len() != outputs.len() {
            return Err(Error::InvalidParams("output labels repeat".into()));
        }
        let len = domain.table_len(usize::MAX >> 1)?;
        if rows.len() != len {
            return Err(Error::InvalidDistribution(format!(
                "mechanism has {} rows, domain has {len} instantiations",
                rows.len()
            )));
        }
        for (x, row) in rows.iter().enumerate() {
            if row.len() != outputs.len() {
                return Err(Error::InvalidDistribution(format!(
                    "row {x} has {} entries, expected {}",
                    row.len(),
                    outputs.len()
                )));
            }
            let mut sum = 0.0;
            for (y, &p) in row.iter().enumerate() {
                if !p.is_finite() || p < 0.0 {
                    return Err(Error::InvalidDistribution(format!("row {x} entry {y} is {p}")));
                }
                sum += p;
            }
            if (sum - 1.0).abs() > PROB_TOLERANCE {
                return Err(Error::InvalidDistribution(format!("row {x} sums to {sum}")));
            }
        }
        Ok(DiscreteMechanism { domain, outputs, rows })
    }

    /// Randomized response on a single bit: flip with probability `flip`.
    pub fn randomized_response_bit(flip: f64) -> Result<DiscreteMechanism> {
        if !(0.0..=1.0).contains(&flip) {
            return Err(Error::InvalidParams(format!("flip probability {flip} outside [0, 1]")));
        }
        let domain = Domain::from_sizes(&[2])?;
        DiscreteMechanism::new(
            domain,
            vec!["0".into(), "1".into()],
            vec![vec![1.0 - flip, flip], vec![flip, 1.0 - flip]],
        )
    }

    /// Independent randomized response on every tuple of an `n`-bit database.
    pub fn randomized_response_tuplewise(n: usize, flip: f64) -> Result<DiscreteMechanism> {
        if !(0.0..=1.0).contains(&flip) {
            return Err(Error::InvalidParams(format!("flip probability {flip} outside [0, 1]")));
        }
        let domain = Domain::from_sizes(&vec![2; n])?;
        let len = domain.table_len(1 << 22)?;
        let sizes = vec![2usize; n];
        let mut outcomes: Vec<Vec<usize>> = Vec::with_capacity(len);
        for_each_outcome(&sizes, |_, assign| outcomes.push(assign.to_vec()));
        let outputs: Vec<String> = outcomes
            .iter()
            .map(|a| a.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(""))
            .collect();
        let rows: Vec<Vec<f64>> = outcomes
            .iter()
            .map(|x| {
                outcomes
                    .iter()
                    .map(|y| {
                        x.iter()
                            .zip(y)
                            .map(|(a, b)| if a == b { 1.0 - flip } else { flip })
                            .product()
                    })
                    .collect()
            })
            .collect();
        DiscreteMechanism::new(domain, outputs, rows)
    }

    /// The database domain.
    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    /// Output labels.
    pub fn outputs(&self) -> &[String] {
        &self.outputs
    }

    /// Output distribution for the database at a row-major index.
    pub fn row(&self, x: usize) -> &[f64] {
        &self.rows[x]
    }
}

/// Worst-case log-ratio of output probabilities over databases differing in
/// exactly one tuple. Infinite when a neighbor turns a possible output
/// impossible; ratios `0/0` are skipped.
pub fn dp_leakage_bruteforce(mech: &DiscreteMechanism) -> Result<f64> {
    let domain = mech.domain();
    let sizes = domain.sizes();
    let len: usize = sizes.iter().product();
    let neighbor_count: u128 = sizes.iter().map(|&k| (k - 1) as u128).sum();
    let work = len as u128 * neighbor_count * mech.outputs().len() as u128;
    if work > ENUMERATION_CAP {
        return Err(Error::CapExceeded { needed: work, cap: ENUMERATION_CAP });
    }

    let mut strides = vec![0usize; sizes.len()];
    let mut acc = 1usize;
    for pos in (0..sizes.len()).rev() {
        strides[pos] = acc;
        acc *= sizes[pos];
    }

    let mut sup = 0.0f64;
    let mut assign = vec![0usize; sizes.len()];
    for x in 0..len {
        decode_into(x, &sizes, &mut assign);
        for (node, &k) in sizes.iter().enumerate() {
            for alt in 0..k {
                if alt == assign[node] {
                    continue;
                }
                let neighbor = x - assign[node] * strides[node] + alt * strides[node];
                for y in 0..mech.outputs().len() {
                    let p = mech.row(x)[y];
                    let q = mech.row(neighbor)[y];
                    if p == 0.0 && q == 0.0 {
                        continue;
                    }
                    if q == 0.0 {
                        return Ok(f64::INFINITY);
                    }
                    let r = (p / q).ln();
                    if r > sup {
                        sup = r;
                    }
                }
            }
        }
    }
    Ok(sup)
}

/// Bayesian leakage: the worst-case log-ratio of posterior output
/// probabilities over adversaries who fix any tuple subset exactly, know the
/// prior over the rest, and compare two states of one unknown tuple.
///
/// Conditioning events of probability zero are skipped (the posterior is
/// undefined there), and `0/0` output ratios are skipped. The supremum runs
/// over singleton outputs.
pub fn bdpl_bruteforce(mech: &DiscreteMechanism, prior: &JointTable) -> Result<f64> {
    if mech.domain() != prior.domain() {
        return Err(Error::InvalidParams(
            "mechanism and prior are defined over different domains".into(),
        ));
    }
    let n = prior.n();
    if n > 16 {
        return Err(Error::CapExceeded { needed: n as u128, cap: 16 });
    }
    let sizes = prior.domain().sizes();
    let len: usize = sizes.iter().product();
    let n_out = mech.outputs().len();
    let work = (1u128 << (n - 1)) * n as u128 * len as u128 * n_out as u128;
    if work > ENUMERATION_CAP {
        return Err(Error::CapExceeded { needed: work, cap: ENUMERATION_CAP });
    }

    let mut sup = 0.0f64;
    for target in 0..n {
        let others: Vec<usize> = (0..n).filter(|&v| v != target).collect();
        for mask in 0u32..(1u32 << others.len()) {
            let known: Vec<usize> = others
                .iter()
                .enumerate()
                .filter(|(pos, _)| mask >> pos & 1 == 1)
                .map(|(_, &v)| v)
                .collect();

            // Conditioning space: (target state, states of known tuples).
            let k_target = sizes[target];
            let known_space: usize = known.iter().map(|&v| sizes[v]).product();
            let cells = k_target * known_space;
            let mut mass = vec![0.0f64; cells];
            let mut out_mass = vec![0.0f64; cells * n_out];
            let probs = prior.probs();
            for_each_outcome(&sizes, |idx, assign| {
                let mut cell = assign[target];
                for &v in &known {
                    cell = cell * sizes[v] + assign[v];
                }
                let p = probs[idx];
                if p == 0.0 {
                    return;
                }
                mass[cell] += p;
                let row = mech.row(idx);
                for y in 0..n_out {
                    out_mass[cell * n_out + y] += p * row[y];
                }
            });

            for obs in 0..known_space {
                for xi in 0..k_target {
                    for xj in 0..k_target {
                        if xi == xj {
                            continue;
                        }
                        let ci = xi * known_space + obs;
                        let cj = xj * known_space + obs;
                        if mass[ci] == 0.0 || mass[cj] == 0.0 {
                            continue;
                        }
                        for y in 0..n_out {
                            let p = out_mass[ci * n_out + y] * mass[cj];
                            let q = out_mass[cj * n_out + y] * mass[ci];
                            if p == 0.0 && q == 0.0 {
                                continue;
                            }
                            if q == 0.0 {
                                return Ok(f64::INFINITY);
                            }
                            let r = (p / q).ln();
                            if r > sup {
                                sup = r;
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(sup)
}

fn decode_into(mut idx: usize, sizes: &[usize], out: &mut [usize]) {
    for pos in (0..sizes.len()).rev() {
        out[pos] = idx % sizes[pos];
        idx /= sizes[pos];
    }
}
