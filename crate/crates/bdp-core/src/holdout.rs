//! A reusable holdout: statistical queries are answered from the training
//! set while they generalize, and from the holdout, with calibrated noise
//! and a budget, once they drift.
//!
//! Per query: if the budget is spent the answer is `Bottom` (no evaluation,
//! no noise). Otherwise the train/holdout gap plus fresh Laplace noise is
//! compared against a noisy threshold; under it, the training value is
//! returned exactly. Over it, the budget drops by one, the noisy threshold
//! is redrawn, and the holdout value is released with noise of four times
//! the base scale. The comparison noise uses twice the base scale. Draw
//! order is fixed: comparison, threshold refresh, release.

use serde::Serialize;

use crate::calibration::{
    blanket_coefficients, dp_for_bdp_blanket, dp_for_bdp_quilts, h_markov, quilt_options,
    ChainConversion, NodeConversion,
};
use crate::chain::MarkovChainSpec;
use crate::error::{Error, Result};
use crate::graph::{enumerate_chain_quilts, enumerate_graph_quilts, DependencyGraph};
use crate::joint::JointTable;
use crate::noise::{NoiseSource, StatQuery};

/// Where an answer came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    /// Returned exactly from the training set.
    Training,
    /// Returned from the holdout with release noise.
    HoldoutNoisy,
    /// Budget exhausted; no value.
    Bottom,
}

/// Answer to one query.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Answer {
    Value { value: f64, provenance: Provenance },
    Bottom,
}

impl Answer {
    /// The numeric value, unless the budget was exhausted.
    pub fn value(&self) -> Option<f64> {
        match self {
            Answer::Value { value, .. } => Some(*value),
            Answer::Bottom => None,
        }
    }
}

/// One transcript line: query index, where the answer came from, its value,
/// and the budget after answering.
#[derive(Debug, Clone, Serialize)]
pub struct TranscriptEntry {
    pub index: usize,
    pub provenance: Provenance,
    pub value: Option<f64>,
    pub budget_after: u32,
}

/// A holdout session. Owns both datasets and all noise; queries are answered
/// strictly in sequence.
pub struct HoldoutSession<R> {
    holdout: Vec<R>,
    training: Vec<R>,
    sigma: f64,
    threshold: f64,
    budget0: u32,
    budget: u32,
    noisy_threshold: f64,
    noise: NoiseSource,
    transcript: Vec<TranscriptEntry>,
}

impl<R> HoldoutSession<R> {
    /// Opens a session with base noise scale `sigma`, threshold, and an
    /// overfitting budget. The initial noisy threshold is drawn here.
    pub fn new(
        holdout: Vec<R>,
        training: Vec<R>,
        sigma: f64,
        threshold: f64,
        budget: u32,
        mut noise: NoiseSource,
    ) -> Result<Self> {
        if holdout.is_empty() || training.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if !(sigma > 0.0) {
            return Err(Error::InvalidParams(format!("noise scale must be positive, got {sigma}")));
        }
        if !(threshold > 0.0) {
            return Err(Error::InvalidParams(format!("threshold must be positive, got {threshold}")));
        }
        let noisy_threshold = threshold + noise.laplace(sigma);
        Ok(HoldoutSession {
            holdout,
            training,
            sigma,
            threshold,
            budget0: budget,
            budget,
            noisy_threshold,
            noise,
            transcript: Vec::new(),
        })
    }

    /// Answers the next query.
    pub fn answer(&mut self, query: &StatQuery<R>) -> Result<Answer> {
        let index = self.transcript.len();
        if self.budget < 1 {
            self.transcript.push(TranscriptEntry {
                index,
                provenance: Provenance::Bottom,
                value: None,
                budget_after: self.budget,
            });
            return Ok(Answer::Bottom);
        }
        let on_holdout = query.eval(&self.holdout)?;
        let on_training = query.eval(&self.training)?;
        let gap_noise = self.noise.laplace(2.0 * self.sigma);
        let answer = if (on_holdout - on_training).abs() + gap_noise > self.noisy_threshold {
            self.budget -= 1;
            self.noisy_threshold = self.threshold + self.noise.laplace(self.sigma);
            Answer::Value {
                value: on_holdout + self.noise.laplace(4.0 * self.sigma),
                provenance: Provenance::HoldoutNoisy,
            }
        } else {
            Answer::Value { value: on_training, provenance: Provenance::Training }
        };
        let (provenance, value) = match answer {
            Answer::Value { value, provenance } => (provenance, Some(value)),
            Answer::Bottom => unreachable!(),
        };
        self.transcript.push(TranscriptEntry {
            index,
            provenance,
            value,
            budget_after: self.budget,
        });
        Ok(answer)
    }

    /// Remaining overfitting budget.
    pub fn budget(&self) -> u32 {
        self.budget
    }

    /// Budget the session opened with.
    pub fn initial_budget(&self) -> u32 {
        self.budget0
    }

    /// Holdout size.
    pub fn holdout_len(&self) -> usize {
        self.holdout.len()
    }

    /// Base noise scale.
    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// Classical privacy level of everything this session will ever release,
    /// by budget-capped composition over the holdout.
    pub fn dp_epsilon(&self) -> f64 {
        session_dp_epsilon(self.budget0, self.holdout.len(), self.sigma)
    }

    /// All answers so far.
    pub fn transcript(&self) -> &[TranscriptEntry] {
        &self.transcript
    }

    /// Transcript as JSON lines, one object per answer.
    pub fn transcript_jsonl(&self) -> String {
        let mut out = String::new();
        for entry in &self.transcript {
            out.push_str(&serde_json::to_string(entry).expect("transcript serializes"));
            out.push('\n');
        }
        out
    }
}

/// Classical level of a session with initial budget `budget`, holdout size
/// `n`, and base noise scale `sigma`: `9 B / (4 n sigma)`.
///
/// The three noise scales compose to `B (1/s + 1/(4s) + 2/(2s)) / n`.
pub fn session_dp_epsilon(budget: u32, n: usize, sigma: f64) -> f64 {
    if n == 0 || sigma <= 0.0 {
        return f64::INFINITY;
    }
    9.0 * budget as f64 / (4.0 * n as f64 * sigma)
}

/// How tuples of the protected data depend on one another, for calibration.
pub enum CorrelationModel<'a> {
    /// Tuples are independent: the Bayesian and classical levels coincide.
    Independent,
    /// Dependency graph plus exact joint; per-node blanket coefficients.
    GraphBlanket { graph: &'a DependencyGraph, joint: &'a JointTable },
    /// Dependency graph plus exact joint; per-node quilt search with
    /// separating sets up to `max_quilt` nodes.
    GraphQuilts {
        graph: &'a DependencyGraph,
        joint: &'a JointTable,
        max_quilt: usize,
        nearby_cap: usize,
    },
    /// Chain-shaped data with exact joint; the two-sided cut family.
    ChainQuilts { joint: &'a JointTable, nearby_cap: usize },
    /// Chain-shaped data by mixing analysis; needs only the transition
    /// matrix, not the joint. `constant` lies in (0, 1/6).
    ChainMixing { chain: &'a MarkovChainSpec, constant: f64 },
}

/// Everything a calibration decided, for reporting.
#[derive(Debug, Clone, Serialize)]
pub struct SessionCalibration {
    pub epsilon_bdp: f64,
    pub epsilon_dp: f64,
    pub sigma: f64,
    pub budget: u32,
    pub holdout_size: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub per_node: Option<Vec<NodeConversion>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub chain: Option<ChainConversion>,
}

/// Noise scale for a session that must keep Bayesian leakage below
/// `epsilon_bdp` against the given correlation model: convert to a
/// classical level, then invert the session's composition bound.
///
/// Errors with `InfeasibleCalibration` when no positive classical level
/// meets the target.
pub fn calibrate_session_for_bdp(
    epsilon_bdp: f64,
    model: &CorrelationModel,
    budget: u32,
    n_holdout: usize,
) -> Result<SessionCalibration> {
    if n_holdout == 0 {
        return Err(Error::EmptyDataset);
    }
    if budget == 0 {
        return Err(Error::InvalidParams("budget must be at least one".into()));
    }
    let mut per_node = None;
    let mut chain_terms = None;
    let epsilon_dp = match model {
        CorrelationModel::Independent => {
            if !(epsilon_bdp > 0.0) {
                return Err(Error::InvalidParams(format!(
                    "bayesian epsilon must be positive, got {epsilon_bdp}"
                )));
            }
            epsilon_bdp
        }
        CorrelationModel::GraphBlanket { graph, joint } => {
            let coeffs: Vec<f64> = blanket_coefficients(joint, graph)?
                .into_iter()
                .map(|(a, _)| a)
                .collect();
            dp_for_bdp_blanket(&coeffs, epsilon_bdp)?
                .epsilon_dp()
                .ok_or_else(|| infeasible(epsilon_bdp))?
        }
        CorrelationModel::GraphQuilts { graph, joint, max_quilt, nearby_cap } => {
            let families: Vec<_> = (0..graph.n())
                .map(|i| enumerate_graph_quilts(graph, i, *max_quilt))
                .collect::<Result<_>>()?;
            let options = quilt_options(joint, &families, *nearby_cap)?;
            let (converted, nodes) = dp_for_bdp_quilts(&options, epsilon_bdp)?;
            per_node = Some(nodes);
            converted.epsilon_dp().ok_or_else(|| infeasible(epsilon_bdp))?
        }
        CorrelationModel::ChainQuilts { joint, nearby_cap } => {
            let n = joint.n();
            let families: Vec<_> = (0..n)
                .map(|i| enumerate_chain_quilts(n, i))
                .collect::<Result<_>>()?;
            let options = quilt_options(joint, &families, *nearby_cap)?;
            let (converted, nodes) = dp_for_bdp_quilts(&options, epsilon_bdp)?;
            per_node = Some(nodes);
            converted.epsilon_dp().ok_or_else(|| infeasible(epsilon_bdp))?
        }
        CorrelationModel::ChainMixing { chain, constant } => {
            let (gap, min_stationary) = chain.spectral_params()?;
            let conv = h_markov(epsilon_bdp, gap, min_stationary, *constant, n_holdout)?;
            chain_terms = Some(conv);
            conv.h
        }
    };
    // Invert eps = 9 B / (4 n sigma) for sigma.
    let sigma = 9.0 * budget as f64 / (4.0 * n_holdout as f64 * epsilon_dp);
    Ok(SessionCalibration {
        epsilon_bdp,
        epsilon_dp,
        sigma,
        budget,
        holdout_size: n_holdout,
        per_node,
        chain: chain_terms,
    })
}

fn infeasible(epsilon_bdp: f64) -> Error {
    Error::InfeasibleCalibration(format!(
        "no positive mechanism level meets the bayesian target {epsilon_bdp}"
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::joint::Domain;

    fn indicator_above(cut: f64) -> StatQuery<f64> {
        StatQuery::from_fn(move |&x: &f64| if x > cut { 1.0 } else { 0.0 })
    }

    fn session_zero_noise(budget: u32) -> HoldoutSession<f64> {
        // Holdout mean of indicator(> 0.5) is 0.5; training mean is 0.25.
        let holdout = vec![0.1, 0.2, 0.8, 0.9];
        let training = vec![0.1, 0.2, 0.3, 0.9];
        HoldoutSession::new(holdout, training, 0.05, 0.2, budget, NoiseSource::zero()).unwrap()
    }

    #[test]
    fn below_threshold_returns_training_value_exactly() {
        let mut s = session_zero_noise(3);
        // Indicator(> 0.85): holdout 0.25, training 0.25, gap 0 under 0.2.
        let a = s.answer(&indicator_above(0.85)).unwrap();
        assert_eq!(
            a,
            Answer::Value { value: 0.25, provenance: Provenance::Training }
        );
        assert_eq!(s.budget(), 3);
    }

    #[test]
    fn above_threshold_returns_holdout_and_spends_budget() {
        let mut s = session_zero_noise(3);
        // Indicator(> 0.5): gap |0.5 - 0.25| = 0.25 over threshold 0.2.
        let a = s.answer(&indicator_above(0.5)).unwrap();
        assert_eq!(
            a,
            Answer::Value { value: 0.5, provenance: Provenance::HoldoutNoisy }
        );
        assert_eq!(s.budget(), 2);
    }

    #[test]
    fn exhausted_budget_answers_bottom_forever() {
        let mut s = session_zero_noise(1);
        assert!(matches!(s.answer(&indicator_above(0.5)).unwrap(), Answer::Value { .. }));
        assert_eq!(s.budget(), 0);
        for _ in 0..3 {
            assert_eq!(s.answer(&indicator_above(0.5)).unwrap(), Answer::Bottom);
        }
        assert_eq!(s.transcript().len(), 4);
        assert_eq!(s.transcript()[1].provenance, Provenance::Bottom);
        assert_eq!(s.transcript()[1].value, None);
    }

    #[test]
    fn zero_budget_session_only_bottoms() {
        let mut s = session_zero_noise(0);
        assert_eq!(s.answer(&indicator_above(0.9)).unwrap(), Answer::Bottom);
    }

    #[test]
    fn same_seed_replays_identically() {
        let run = |seed: u64| -> Vec<Option<f64>> {
            let holdout: Vec<f64> = (0..50).map(|i| (i as f64 * 0.37) % 1.0).collect();
            let training: Vec<f64> = (0..50).map(|i| (i as f64 * 0.61) % 1.0).collect();
            let mut s = HoldoutSession::new(
                holdout,
                training,
                0.02,
                0.1,
                5,
                NoiseSource::seeded(seed),
            )
            .unwrap();
            (0..20)
                .map(|i| {
                    s.answer(&indicator_above(i as f64 / 20.0)).unwrap().value()
                })
                .collect()
        };
        let a = run(77);
        let b = run(77);
        assert_eq!(a, b);
        // Bit-identical, not merely close.
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.map(f64::to_bits), y.map(f64::to_bits));
        }
    }

    #[test]
    fn transcript_counts_holdout_answers_against_budget() {
        let mut s = session_zero_noise(2);
        let cuts = [0.85, 0.5, 0.85, 0.45, 0.5, 0.5];
        for &c in &cuts {
            let _ = s.answer(&indicator_above(c)).unwrap();
        }
        let spent: usize = s
            .transcript()
            .iter()
            .filter(|e| e.provenance == Provenance::HoldoutNoisy)
            .count();
        assert_eq!(spent as u32, s.initial_budget() - s.budget());
        let bottoms: usize = s
            .transcript()
            .iter()
            .filter(|e| e.provenance == Provenance::Bottom)
            .count();
        assert_eq!(bottoms, 2);
    }

    #[test]
    fn transcript_lines_parse_back() {
        let mut s = session_zero_noise(1);
        let _ = s.answer(&indicator_above(0.85)).unwrap();
        let _ = s.answer(&indicator_above(0.5)).unwrap();
        let _ = s.answer(&indicator_above(0.5)).unwrap();
        let jsonl = s.transcript_jsonl();
        let lines: Vec<&str> = jsonl.lines().collect();
        assert_eq!(lines.len(), 3);
        let parsed: serde_json::Value = serde_json::from_str(lines[0]).unwrap();
        assert_eq!(parsed["index"], 0);
        assert_eq!(parsed["provenance"], "training");
        assert_eq!(parsed["budget_after"], 1);
        let last: serde_json::Value = serde_json::from_str(lines[2]).unwrap();
        assert_eq!(last["provenance"], "bottom");
        assert_eq!(last["value"], serde_json::Value::Null);
    }

    #[test]
    fn session_level_arithmetic() {
        // B = 5, n = 100, sigma = 0.05: 9 * 5 / (4 * 100 * 0.05) = 2.25.
        assert!((session_dp_epsilon(5, 100, 0.05) - 2.25).abs() < 1e-15);
        assert_eq!(session_dp_epsilon(0, 100, 0.05), 0.0);
    }

    #[test]
    fn session_level_matches_componentwise_composition() {
        for &sigma in &[0.01, 0.05, 0.3, 2.0] {
            let per_trip = 1.0 / sigma + 1.0 / (4.0 * sigma) + 2.0 / (2.0 * sigma);
            let budget = 7u32;
            let n = 50usize;
            let direct = session_dp_epsilon(budget, n, sigma);
            let composed = budget as f64 * per_trip / n as f64;
            assert!((direct - composed).abs() < 1e-12 * direct);
        }
    }

    #[test]
    fn calibrate_independent_inverts_composition() {
        // eps 5, B 25, n 1000: sigma = 9 * 25 / (4 * 1000 * 5) = 0.01125.
        let cal =
            calibrate_session_for_bdp(5.0, &CorrelationModel::Independent, 25, 1000).unwrap();
        assert!((cal.sigma - 0.01125).abs() < 1e-15);
        assert!((session_dp_epsilon(25, 1000, cal.sigma) - 5.0).abs() < 1e-12);
    }

    #[test]
    fn calibrate_chain_mixing_uses_conversion_level() {
        let chain = MarkovChainSpec::new(
            vec![vec![0.9, 0.1], vec![0.2, 0.8]],
            vec![2.0 / 3.0, 1.0 / 3.0],
            100,
        )
        .unwrap();
        let model = CorrelationModel::ChainMixing { chain: &chain, constant: 0.1 };
        let cal = calibrate_session_for_bdp(1.0, &model, 1, 100).unwrap();
        let conv = h_markov(1.0, 0.3, 1.0 / 3.0, 0.1, 100).unwrap();
        assert!((cal.epsilon_dp - conv.h).abs() < 1e-15);
        let expected_sigma = 9.0 / (4.0 * 100.0 * conv.h);
        assert!((cal.sigma - expected_sigma).abs() < 1e-12);
        assert_eq!(cal.chain.unwrap().d, 14);
    }

    #[test]
    fn calibrate_blanket_route_on_deterministic_copy_is_infeasible() {
        let domain = Domain::from_sizes(&[2, 2]).unwrap();
        let joint = JointTable::new(domain, vec![0.5, 0.0, 0.0, 0.5]).unwrap();
        let graph = DependencyGraph::path(2).unwrap();
        let model = CorrelationModel::GraphBlanket { graph: &graph, joint: &joint };
        let err = calibrate_session_for_bdp(10.0, &model, 1, 2).unwrap_err();
        assert!(matches!(err, Error::InfeasibleCalibration(_)));
    }

    #[test]
    fn calibrate_chain_quilts_beats_or_matches_blanket_on_loose_target() {
        let chain = MarkovChainSpec::new(
            vec![vec![0.9, 0.1], vec![0.2, 0.8]],
            vec![0.5, 0.5],
            3,
        )
        .unwrap();
        let joint = chain.joint_table(1 << 22).unwrap();
        let graph = DependencyGraph::path(3).unwrap();
        // 4 a_1 is just over 14 for the middle node, so 15 is feasible on
        // both routes.
        let eps = 15.0;
        let quilt_cal = calibrate_session_for_bdp(
            eps,
            &CorrelationModel::ChainQuilts { joint: &joint, nearby_cap: 20 },
            1,
            3,
        )
        .unwrap();
        let blanket_cal = calibrate_session_for_bdp(
            eps,
            &CorrelationModel::GraphBlanket { graph: &graph, joint: &joint },
            1,
            3,
        )
        .unwrap();
        // The quilt family includes the blanket, so it can only do better.
        assert!(quilt_cal.epsilon_dp >= blanket_cal.epsilon_dp - 1e-12);
    }
}
