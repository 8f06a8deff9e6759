//! Homogeneous finite-state Markov chains: joint-table expansion and the
//! mixing parameters (spectral gap, minimum stationary probability) used by
//! the chain calibration route.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::joint::{Domain, JointTable, PROB_TOLERANCE};

/// Detailed balance must hold within this tolerance for the spectral route.
pub const REVERSIBILITY_TOLERANCE: f64 = 1e-9;

/// A stationary Markov chain over `k` states observed for `n` steps.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkovChainSpec {
    transition: Vec<Vec<f64>>,
    initial: Vec<f64>,
    n: usize,
}

impl MarkovChainSpec {
    /// Validates a row-stochastic transition matrix and an initial
    /// distribution. Rows must sum to one within tolerance; nothing is
    /// renormalized.
    pub fn new(transition: Vec<Vec<f64>>, initial: Vec<f64>, n: usize) -> Result<Self> {
        let k = transition.len();
        if k == 0 {
            return Err(Error::InvalidParams("chain needs at least one state".into()));
        }
        if n == 0 {
            return Err(Error::InvalidParams("chain length must be positive".into()));
        }
        for (i, row) in transition.iter().enumerate() {
            if row.len() != k {
                return Err(Error::InvalidDistribution(format!(
                    "transition row {i} has {} entries, expected {k}",
                    row.len()
                )));
            }
            check_distribution(row, &format!("transition row {i}"))?;
        }
        if initial.len() != k {
            return Err(Error::InvalidDistribution(format!(
                "initial distribution has {} entries, expected {k}",
                initial.len()
            )));
        }
        check_distribution(&initial, "initial distribution")?;
        Ok(MarkovChainSpec { transition, initial, n })
    }

    /// Number of states.
    pub fn k(&self) -> usize {
        self.transition.len()
    }

    /// Chain length (number of observed variables).
    pub fn n(&self) -> usize {
        self.n
    }

    /// Transition matrix rows.
    pub fn transition(&self) -> &[Vec<f64>] {
        &self.transition
    }

    /// Initial state distribution.
    pub fn initial(&self) -> &[f64] {
        &self.initial
    }

    /// Expands the chain into the dense joint table over all `n` steps, with
    /// numeric state labels. Fails fast when `k^n` exceeds `cap`.
    pub fn joint_table(&self, cap: usize) -> Result<JointTable> {
        let domain = Domain::from_sizes(&vec![self.k(); self.n])?;
        self.joint_table_with_domain(domain, cap)
    }

    /// As `joint_table`, with caller-supplied state labels shared by every
    /// step.
    pub fn joint_table_with_domain(&self, domain: Domain, cap: usize) -> Result<JointTable> {
        if domain.n() != self.n {
            return Err(Error::InvalidParams(format!(
                "domain has {} variables, chain has length {}",
                domain.n(),
                self.n
            )));
        }
        for i in 0..domain.n() {
            if domain.size(i) != self.k() {
                return Err(Error::InvalidParams(format!(
                    "domain variable {i} has {} states, chain has {}",
                    domain.size(i),
                    self.k()
                )));
            }
        }
        domain.table_len(cap)?;
        let k = self.k();
        let mut probs = self.initial.clone();
        for _ in 1..self.n {
            let mut next = vec![0.0; probs.len() * k];
            for (prefix, &p) in probs.iter().enumerate() {
                let last = prefix % k;
                for s in 0..k {
                    next[prefix * k + s] = p * self.transition[last][s];
                }
            }
            probs = next;
        }
        JointTable::with_cap(domain, probs, cap)
    }

    /// Unique positive stationary distribution of the transition matrix.
    ///
    /// Errors with `NotErgodic` when the linear system is singular or the
    /// solution is not strictly positive.
    pub fn stationary(&self) -> Result<Vec<f64>> {
        let k = self.k();
        if k == 1 {
            return Ok(vec![1.0]);
        }
        // pi^T P = pi^T with sum(pi) = 1: rows of (P^T - I), last replaced by ones.
        let mut a = DMatrix::zeros(k, k);
        for i in 0..k {
            for j in 0..k {
                a[(i, j)] = self.transition[j][i] - if i == j { 1.0 } else { 0.0 };
            }
        }
        for j in 0..k {
            a[(k - 1, j)] = 1.0;
        }
        let mut b = DVector::zeros(k);
        b[k - 1] = 1.0;
        let pi = a
            .lu()
            .solve(&b)
            .ok_or_else(|| Error::NotErgodic("no unique stationary distribution".into()))?;
        if pi.iter().any(|&p| p <= 0.0 || !p.is_finite()) {
            return Err(Error::NotErgodic("stationary distribution is not strictly positive".into()));
        }
        Ok(pi.iter().copied().collect())
    }

    /// Spectral gap `1 - max |second eigenvalue|` and minimum stationary
    /// probability of a reversible ergodic chain.
    ///
    /// Reversibility makes the similarity transform symmetric, so eigenvalues
    /// are real and the gap uses their absolute values. Detailed balance is
    /// checked within `REVERSIBILITY_TOLERANCE`; a zero gap (periodic or
    /// reducible chain) is reported as `NotErgodic`.
    pub fn spectral_params(&self) -> Result<(f64, f64)> {
        let k = self.k();
        let pi = self.stationary()?;
        if k == 1 {
            return Ok((1.0, 1.0));
        }
        for i in 0..k {
            for j in (i + 1)..k {
                let flow = pi[i] * self.transition[i][j];
                let back = pi[j] * self.transition[j][i];
                if (flow - back).abs() > REVERSIBILITY_TOLERANCE {
                    return Err(Error::NotReversible { i, j });
                }
            }
        }
        // S = D^{1/2} P D^{-1/2} shares P's spectrum and is symmetric under
        // detailed balance; symmetrize to wash out float asymmetry.
        let mut s = DMatrix::zeros(k, k);
        for i in 0..k {
            for j in 0..k {
                s[(i, j)] = (pi[i] / pi[j]).sqrt() * self.transition[i][j];
            }
        }
        let s = (&s + s.transpose()) * 0.5;
        let eigen = s.symmetric_eigen();
        let mut values: Vec<f64> = eigen.eigenvalues.iter().copied().collect();
        values.sort_by(|a, b| b.partial_cmp(a).unwrap());
        if (values[0] - 1.0).abs() > 1e-8 {
            return Err(Error::NotErgodic(format!(
                "leading eigenvalue is {} instead of 1",
                values[0]
            )));
        }
        let second = values[1..]
            .iter()
            .map(|v| v.abs())
            .fold(0.0f64, f64::max);
        let gap = 1.0 - second;
        if gap <= 1e-9 {
            return Err(Error::NotErgodic("spectral gap is zero".into()));
        }
        let rho = pi.iter().copied().fold(f64::INFINITY, f64::min);
        Ok((gap, rho))
    }
}

fn check_distribution(p: &[f64], what: &str) -> Result<()> {
    let mut sum = 0.0;
    for (i, &v) in p.iter().enumerate() {
        if !v.is_finite() || v < 0.0 {
            return Err(Error::InvalidDistribution(format!("{what}: entry {i} is {v}")));
        }
        sum += v;
    }
    if (sum - 1.0).abs() > PROB_TOLERANCE {
        return Err(Error::InvalidDistribution(format!("{what}: entries sum to {sum}")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lazy_chain(n: usize) -> MarkovChainSpec {
        MarkovChainSpec::new(
            vec![vec![0.9, 0.1], vec![0.2, 0.8]],
            vec![0.5, 0.5],
            n,
        )
        .unwrap()
    }

    #[test]
    fn rejects_non_stochastic_row() {
        let err = MarkovChainSpec::new(
            vec![vec![0.9, 0.2], vec![0.2, 0.8]],
            vec![0.5, 0.5],
            2,
        )
        .unwrap_err();
        assert!(matches!(err, Error::InvalidDistribution(_)));
    }

    #[test]
    fn two_step_joint_table() {
        let t = lazy_chain(2).joint_table(1 << 22).unwrap();
        let expected = [0.45, 0.05, 0.10, 0.40];
        for (i, &e) in expected.iter().enumerate() {
            assert!((t.prob(i) - e).abs() < 1e-15, "entry {i}");
        }
    }

    #[test]
    fn uniform_symmetric_chain_gives_uniform_joint() {
        let c = MarkovChainSpec::new(
            vec![vec![0.5, 0.5], vec![0.5, 0.5]],
            vec![0.5, 0.5],
            3,
        )
        .unwrap();
        let t = c.joint_table(1 << 22).unwrap();
        for i in 0..8 {
            assert!((t.prob(i) - 0.125).abs() < 1e-15);
        }
    }

    #[test]
    fn joint_table_respects_cap() {
        let err = lazy_chain(24).joint_table(1 << 22).unwrap_err();
        assert!(matches!(err, Error::CapExceeded { .. }));
    }

    #[test]
    fn stationary_of_lazy_chain() {
        let pi = lazy_chain(2).stationary().unwrap();
        assert!((pi[0] - 2.0 / 3.0).abs() < 1e-12);
        assert!((pi[1] - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn spectral_params_of_lazy_chain() {
        // Eigenvalues are 1 and 0.7, stationary (2/3, 1/3).
        let (g, rho) = lazy_chain(2).spectral_params().unwrap();
        assert!((g - 0.3).abs() < 1e-12);
        assert!((rho - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn spectral_params_of_uniform_chain() {
        let c = MarkovChainSpec::new(
            vec![vec![0.5, 0.5], vec![0.5, 0.5]],
            vec![0.5, 0.5],
            2,
        )
        .unwrap();
        let (g, rho) = c.spectral_params().unwrap();
        assert!((g - 1.0).abs() < 1e-12);
        assert!((rho - 0.5).abs() < 1e-12);
    }

    #[test]
    fn identity_chain_is_not_ergodic() {
        let c = MarkovChainSpec::new(
            vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            vec![0.5, 0.5],
            2,
        )
        .unwrap();
        assert!(matches!(c.spectral_params().unwrap_err(), Error::NotErgodic(_)));
    }

    #[test]
    fn periodic_chain_is_not_ergodic() {
        let c = MarkovChainSpec::new(
            vec![vec![0.0, 1.0], vec![1.0, 0.0]],
            vec![0.5, 0.5],
            2,
        )
        .unwrap();
        assert!(matches!(c.spectral_params().unwrap_err(), Error::NotErgodic(_)));
    }

    #[test]
    fn irreversible_three_cycle_is_rejected() {
        // Strongly biased 3-cycle: ergodic but detailed balance fails.
        let c = MarkovChainSpec::new(
            vec![
                vec![0.1, 0.8, 0.1],
                vec![0.1, 0.1, 0.8],
                vec![0.8, 0.1, 0.1],
            ],
            vec![1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0],
            2,
        )
        .unwrap();
        assert!(matches!(c.spectral_params().unwrap_err(), Error::NotReversible { .. }));
    }

    #[test]
    fn chain_joint_satisfies_markov_property() {
        let t = lazy_chain(3).joint_table(1 << 22).unwrap();
        for s2 in 0..2 {
            for s1 in 0..2 {
                let with_past = t.conditional(&[(2, 0)], &[(1, s1), (0, s2)]).unwrap();
                let without = t.conditional(&[(2, 0)], &[(1, s1)]).unwrap();
                assert!((with_past - without).abs() < 1e-12);
            }
        }
    }
}
