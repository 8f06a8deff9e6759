//! Dense joint distributions over tuples of finite-domain variables.
//!
//! Probabilities live in one flat row-major table: variable 0 is the most
//! significant index, the last variable the least. Tables larger than the
//! entry cap are rejected outright; nothing in this module approximates.

use crate::error::{Error, Result};

/// Probability vectors must sum to one within this tolerance. Violations are
/// rejected, never renormalized.
pub const PROB_TOLERANCE: f64 = 1e-12;

/// Default hard cap on dense table entries.
pub const DEFAULT_TABLE_CAP: usize = 1 << 22;

/// Ordered finite domains for a tuple of variables, with per-state labels.
///
/// Labels are unique within each variable and double as the key alphabet for
/// mechanism tables.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Domain {
    states: Vec<Vec<String>>,
}

impl Domain {
    /// Builds a domain from explicit state labels, one list per variable.
    pub fn new(states: Vec<Vec<String>>) -> Result<Self> {
        if states.is_empty() {
            return Err(Error::InvalidParams("domain needs at least one variable".into()));
        }
        for (i, labels) in states.iter().enumerate() {
            if labels.is_empty() {
                return Err(Error::InvalidParams(format!("variable {i} has no states")));
            }
            let mut seen = labels.clone();
            seen.sort();
            seen.dedup();
            if seen.len() != labels.len() {
                return Err(Error::InvalidParams(format!("variable {i} repeats a state label")));
            }
        }
        Ok(Domain { states })
    }

    /// Builds a domain with numeric labels `"0"..` from per-variable sizes.
    pub fn from_sizes(sizes: &[usize]) -> Result<Self> {
        let states = sizes
            .iter()
            .map(|&k| (0..k).map(|s| s.to_string()).collect())
            .collect();
        Domain::new(states)
    }

    /// Number of variables.
    pub fn n(&self) -> usize {
        self.states.len()
    }

    /// Number of states of variable `i`.
    pub fn size(&self, i: usize) -> usize {
        self.states[i].len()
    }

    /// State labels of variable `i`.
    pub fn labels(&self, i: usize) -> &[String] {
        &self.states[i]
    }

    /// Per-variable sizes.
    pub fn sizes(&self) -> Vec<usize> {
        self.states.iter().map(|s| s.len()).collect()
    }

    /// Resolves a state label of variable `i` to its index.
    pub fn state_index(&self, i: usize, label: &str) -> Option<usize> {
        self.states[i].iter().position(|l| l == label)
    }

    /// Table length `prod_i size(i)`, checked against `cap`.
    pub fn table_len(&self, cap: usize) -> Result<usize> {
        let mut len: u128 = 1;
        for s in &self.states {
            len = len.saturating_mul(s.len() as u128);
            if len > cap as u128 {
                return Err(Error::CapExceeded { needed: len, cap: cap as u128 });
            }
        }
        Ok(len as usize)
    }

    fn check_node(&self, i: usize) -> Result<()> {
        if i >= self.n() {
            return Err(Error::IndexOutOfRange { index: i, n: self.n() });
        }
        Ok(())
    }
}

/// Visits every outcome of the product space `sizes` in row-major order,
/// passing the linear index and the current assignment.
pub(crate) fn for_each_outcome(sizes: &[usize], mut f: impl FnMut(usize, &[usize])) {
    let len: usize = sizes.iter().product();
    let mut assign = vec![0usize; sizes.len()];
    for idx in 0..len {
        f(idx, &assign);
        for pos in (0..sizes.len()).rev() {
            assign[pos] += 1;
            if assign[pos] < sizes[pos] {
                break;
            }
            assign[pos] = 0;
        }
    }
}

/// A marginal of a joint table, restricted to an ordered list of variables.
///
/// Indexing is row-major in the order the variables were requested, which
/// need not be ascending.
#[derive(Debug, Clone)]
pub struct SubTable {
    nodes: Vec<usize>,
    sizes: Vec<usize>,
    strides: Vec<usize>,
    probs: Vec<f64>,
}

impl SubTable {
    /// Variables of this marginal, in index order of `probs`.
    pub fn nodes(&self) -> &[usize] {
        &self.nodes
    }

    /// Per-variable sizes, aligned with `nodes`.
    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    /// Linear index of an assignment given in the same order as `nodes`.
    pub fn index_of(&self, states: &[usize]) -> usize {
        states.iter().zip(&self.strides).map(|(s, st)| s * st).sum()
    }

    /// Probability at a linear index.
    pub fn prob(&self, idx: usize) -> f64 {
        self.probs[idx]
    }

    /// Flat probability table.
    pub fn probs(&self) -> &[f64] {
        &self.probs
    }
}

/// A joint distribution stored densely.
#[derive(Debug, Clone)]
pub struct JointTable {
    domain: Domain,
    probs: Vec<f64>,
}

impl JointTable {
    /// Validates and wraps a flat row-major table under the default cap.
    pub fn new(domain: Domain, probs: Vec<f64>) -> Result<Self> {
        JointTable::with_cap(domain, probs, DEFAULT_TABLE_CAP)
    }

    /// Validates and wraps a flat row-major table under an explicit cap.
    pub fn with_cap(domain: Domain, probs: Vec<f64>, cap: usize) -> Result<Self> {
        let len = domain.table_len(cap)?;
        if probs.len() != len {
            return Err(Error::InvalidDistribution(format!(
                "table has {} entries, domain needs {len}",
                probs.len()
            )));
        }
        let mut sum = 0.0;
        for (i, &p) in probs.iter().enumerate() {
            if !p.is_finite() || p < 0.0 {
                return Err(Error::InvalidDistribution(format!("entry {i} is {p}")));
            }
            sum += p;
        }
        if (sum - 1.0).abs() > PROB_TOLERANCE {
            return Err(Error::InvalidDistribution(format!("entries sum to {sum}")));
        }
        Ok(JointTable { domain, probs })
    }

    /// The domain of the distribution.
    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    /// Number of variables.
    pub fn n(&self) -> usize {
        self.domain.n()
    }

    /// Flat row-major probabilities.
    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Probability of the outcome at a linear index.
    pub fn prob(&self, idx: usize) -> f64 {
        self.probs[idx]
    }

    /// Decodes a linear index into a full assignment.
    pub fn decode(&self, mut idx: usize) -> Vec<usize> {
        let sizes = self.domain.sizes();
        let mut assign = vec![0usize; sizes.len()];
        for pos in (0..sizes.len()).rev() {
            assign[pos] = idx % sizes[pos];
            idx /= sizes[pos];
        }
        assign
    }

    /// Marginal over `nodes`, indexed in the order given.
    ///
    /// Nodes must be distinct and in range. Cost is one pass over the full
    /// table.
    pub fn marginal(&self, nodes: &[usize]) -> Result<SubTable> {
        for &v in nodes {
            self.domain.check_node(v)?;
        }
        let mut distinct = nodes.to_vec();
        distinct.sort_unstable();
        distinct.dedup();
        if distinct.len() != nodes.len() {
            return Err(Error::InvalidParams("marginal nodes must be distinct".into()));
        }

        let sizes: Vec<usize> = nodes.iter().map(|&v| self.domain.size(v)).collect();
        let mut strides = vec![0usize; nodes.len()];
        let mut acc = 1usize;
        for pos in (0..nodes.len()).rev() {
            strides[pos] = acc;
            acc *= sizes[pos];
        }
        let mut probs = vec![0.0; acc.max(1)];
        let full_sizes = self.domain.sizes();
        let table = &self.probs;
        for_each_outcome(&full_sizes, |idx, assign| {
            let sub: usize = nodes
                .iter()
                .zip(&strides)
                .map(|(&v, &st)| assign[v] * st)
                .sum();
            probs[sub] += table[idx];
        });
        Ok(SubTable { nodes: nodes.to_vec(), sizes, strides, probs })
    }

    /// Probability of a partial assignment `(node, state)*`.
    pub fn event_prob(&self, assignment: &[(usize, usize)]) -> Result<f64> {
        self.check_assignment(assignment)?;
        let full_sizes = self.domain.sizes();
        let mut total = 0.0;
        let table = &self.probs;
        for_each_outcome(&full_sizes, |idx, assign| {
            if assignment.iter().all(|&(v, s)| assign[v] == s) {
                total += table[idx];
            }
        });
        Ok(total)
    }

    /// Conditional probability `P(target | given)` of disjoint partial
    /// assignments, by exact summation.
    ///
    /// Errors with `ZeroConditioningEvent` when `P(given) = 0`.
    pub fn conditional(
        &self,
        target: &[(usize, usize)],
        given: &[(usize, usize)],
    ) -> Result<f64> {
        self.check_assignment(target)?;
        self.check_assignment(given)?;
        for &(v, _) in target {
            if given.iter().any(|&(w, _)| w == v) {
                return Err(Error::InvalidParams(format!(
                    "node {v} appears in both target and conditioning assignments"
                )));
            }
        }
        let full_sizes = self.domain.sizes();
        let mut p_given = 0.0;
        let mut p_both = 0.0;
        let table = &self.probs;
        for_each_outcome(&full_sizes, |idx, assign| {
            if given.iter().all(|&(v, s)| assign[v] == s) {
                p_given += table[idx];
                if target.iter().all(|&(v, s)| assign[v] == s) {
                    p_both += table[idx];
                }
            }
        });
        if p_given == 0.0 {
            return Err(Error::ZeroConditioningEvent);
        }
        Ok(p_both / p_given)
    }

    fn check_assignment(&self, assignment: &[(usize, usize)]) -> Result<()> {
        let mut seen = Vec::with_capacity(assignment.len());
        for &(v, s) in assignment {
            self.domain.check_node(v)?;
            if s >= self.domain.size(v) {
                return Err(Error::IndexOutOfRange { index: s, n: self.domain.size(v) });
            }
            if seen.contains(&v) {
                return Err(Error::InvalidParams(format!("node {v} assigned twice")));
            }
            seen.push(v);
        }
        Ok(())
    }
}
