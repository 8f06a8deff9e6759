//! Synthetic overfitting study: adaptive variable selection over correlated
//! binary data, run once against the raw holdout and once through the
//! budgeted session, with analytic ground truth for the overfitting counter.
//!
//! Data is ±1-valued. Each attribute of a row copies the label with
//! probability `signal_strength`, otherwise copies a shared per-row latent
//! factor with probability `attr_correlation`, otherwise is noise; an
//! optional Markov chain walked down the rows biases that noise, making rows
//! correlated. Selection ranks attributes by averaged train/holdout label
//! correlation and classifies by the sign-weighted sum of the top k.

use serde::{Deserialize, Serialize};

use crate::chain::MarkovChainSpec;
use crate::error::{Error, Result};
use crate::holdout::{
    calibrate_session_for_bdp, Answer, CorrelationModel, HoldoutSession, SessionCalibration,
};
use crate::noise::{NoiseSource, StatQuery};

/// How rows of a synthetic sample depend on one another.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum RowModel {
    /// Rows are drawn independently.
    Independent,
    /// A latent state walks this chain down the rows and biases the noise
    /// component of every attribute: state `z` of `k` adds
    /// `shift * (2z/(k-1) - 1)` to the probability of drawing +1.
    Chain { transition: Vec<Vec<f64>>, initial: Vec<f64>, shift: f64 },
}

/// Generator settings for one synthetic trial. Unset document fields fall
/// back to the default study's values.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticConfig {
    pub n_train: usize,
    pub n_holdout: usize,
    pub n_fresh: usize,
    /// Attribute count.
    pub d: usize,
    /// Probability that an attribute copies the label.
    pub signal_strength: f64,
    /// Probability that an attribute copies the shared per-row factor.
    pub attr_correlation: f64,
    pub rows: RowModel,
    pub seed: u64,
}

impl SyntheticConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_train == 0 || self.n_holdout == 0 || self.n_fresh == 0 {
            return Err(Error::InvalidParams("every split needs at least one row".into()));
        }
        if self.d == 0 {
            return Err(Error::InvalidParams("need at least one attribute".into()));
        }
        for (name, p) in
            [("signal_strength", self.signal_strength), ("attr_correlation", self.attr_correlation)]
        {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidParams(format!("{name} must lie in [0, 1], got {p}")));
            }
        }
        if let RowModel::Chain { transition, initial, shift } = &self.rows {
            if transition.len() < 2 {
                return Err(Error::InvalidParams(
                    "row chain needs at least two states to shift anything".into(),
                ));
            }
            if !(0.0..=0.5).contains(shift) {
                return Err(Error::InvalidParams(format!(
                    "row shift must lie in [0, 0.5], got {shift}"
                )));
            }
            // Borrows the chain validator for the stochasticity checks.
            MarkovChainSpec::new(transition.clone(), initial.clone(), 1)?;
        }
        Ok(())
    }
}

/// One record: ±1 attributes and a ±1 label.
#[derive(Debug, Clone)]
pub struct Example {
    pub x: Vec<f64>,
    pub y: f64,
}

/// A materialized sample: `n` rows of `d` attributes, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    n: usize,
    d: usize,
    x: Vec<f64>,
    y: Vec<f64>,
}

impl Dataset {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.x[i * self.d..(i + 1) * self.d]
    }

    pub fn label(&self, i: usize) -> f64 {
        self.y[i]
    }

    /// Owned rows, the shape a holdout session consumes.
    pub fn rows(&self) -> Vec<Example> {
        (0..self.n).map(|i| Example { x: self.row(i).to_vec(), y: self.y[i] }).collect()
    }
}

/// The three splits of one trial. Selection never touches `fresh`.
#[derive(Debug, Clone)]
pub struct TrialData {
    pub train: Dataset,
    pub holdout: Dataset,
    pub fresh: Dataset,
}

/// Draws all three splits from dedicated substreams of `noise`, so a fixed
/// seed reproduces every bit regardless of later draw-order changes.
pub fn gen_data(cfg: &SyntheticConfig, noise: &NoiseSource) -> Result<TrialData> {
    cfg.validate()?;
    Ok(TrialData {
        train: gen_split(cfg, cfg.n_train, &mut noise.split("train")),
        holdout: gen_split(cfg, cfg.n_holdout, &mut noise.split("holdout")),
        fresh: gen_split(cfg, cfg.n_fresh, &mut noise.split("fresh")),
    })
}

fn gen_split(cfg: &SyntheticConfig, n: usize, noise: &mut NoiseSource) -> Dataset {
    let d = cfg.d;
    let mut x = Vec::with_capacity(n * d);
    let mut y = Vec::with_capacity(n);
    // Latent chain state; None before the first row and when rows are
    // independent.
    let mut state: Option<usize> = None;
    for _ in 0..n {
        let label = sign_bit(noise.uniform01() < 0.5);
        let latent = sign_bit(noise.uniform01() < 0.5);
        let mut noise_plus = 0.5;
        if let RowModel::Chain { transition, initial, shift } = &cfg.rows {
            let dist = match state {
                None => initial.as_slice(),
                Some(s) => transition[s].as_slice(),
            };
            let z = sample_categorical(dist, noise.uniform01());
            let direction = 2.0 * z as f64 / (transition.len() as f64 - 1.0) - 1.0;
            noise_plus = 0.5 + shift * direction;
            state = Some(z);
        }
        y.push(label);
        for _ in 0..d {
            let u = noise.uniform01();
            let value = if u < cfg.signal_strength {
                label
            } else if u < cfg.signal_strength + (1.0 - cfg.signal_strength) * cfg.attr_correlation {
                latent
            } else {
                sign_bit(noise.uniform01() < noise_plus)
            };
            x.push(value);
        }
    }
    Dataset { n, d, x, y }
}

fn sign_bit(plus: bool) -> f64 {
    if plus {
        1.0
    } else {
        -1.0
    }
}

/// Index of the cumulative bucket containing `u`; the last bucket absorbs
/// rounding slack.
fn sample_categorical(dist: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    for (i, p) in dist.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    dist.len() - 1
}

/// Which holdout-access pathway produced a report row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Naive,
    Bdp,
}

impl Mode {
    pub fn as_str(&self) -> &'static str {
        match self {
            Mode::Naive => "naive",
            Mode::Bdp => "bdp",
        }
    }
}

/// One measurement row. `acc_holdout` is absent when the session refused the
/// accuracy query; `budget` is absent in naive mode.
#[derive(Debug, Clone, Serialize)]
pub struct ReportRow {
    pub round: usize,
    pub k: usize,
    pub mode: Mode,
    pub acc_train: f64,
    pub acc_holdout: Option<f64>,
    pub acc_fresh: f64,
    pub budget: Option<u32>,
    pub z: u32,
}

/// Running count of training-side answers drifting from the analytic truth
/// by at least `c * tau`; nondecreasing by construction.
pub fn overfit_counter(answers: &[f64], truths: &[f64], c: f64, tau: f64) -> Result<Vec<u32>> {
    if answers.len() != truths.len() {
        return Err(Error::InvalidParams(format!(
            "{} answers against {} truths",
            answers.len(),
            truths.len()
        )));
    }
    if !(c > 0.0) || !(tau > 0.0) {
        return Err(Error::InvalidParams(format!(
            "counter threshold needs positive c and tau, got c={c}, tau={tau}"
        )));
    }
    let mut count = 0u32;
    let mut trace = Vec::with_capacity(answers.len());
    for (a, t) in answers.iter().zip(truths) {
        if (a - t).abs() >= c * tau {
            count += 1;
        }
        trace.push(count);
    }
    Ok(trace)
}

/// Sign-weighted threshold classifier over a fixed attribute subset. A zero
/// sum predicts +1.
#[derive(Debug, Clone)]
struct Classifier {
    weights: Vec<(usize, f64)>,
}

impl Classifier {
    fn top_k(order: &[usize], scores: &[f64], k: usize) -> Classifier {
        let weights = order[..k]
            .iter()
            .map(|&j| (j, if scores[j] >= 0.0 { 1.0 } else { -1.0 }))
            .collect();
        Classifier { weights }
    }

    fn predict(&self, row: &[f64]) -> f64 {
        let s: f64 = self.weights.iter().map(|&(j, w)| w * row[j]).sum();
        sign_bit(s >= 0.0)
    }

    fn accuracy(&self, data: &Dataset) -> f64 {
        let hits = (0..data.n()).filter(|&i| self.predict(data.row(i)) == data.label(i)).count();
        hits as f64 / data.n() as f64
    }
}

/// Mean of per-row label agreement for every attribute.
fn correlations(data: &Dataset) -> Vec<f64> {
    let mut sums = vec![0.0; data.d()];
    for i in 0..data.n() {
        let row = data.row(i);
        let y = data.label(i);
        for (s, v) in sums.iter_mut().zip(row) {
            *s += v * y;
        }
    }
    sums.iter_mut().for_each(|s| *s /= data.n() as f64);
    sums
}

/// Attribute order by descending score magnitude, index-ascending on ties.
fn rank_by_magnitude(scores: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&i, &j| {
        scores[j].abs().partial_cmp(&scores[i].abs()).expect("finite scores").then(i.cmp(&j))
    });
    order
}

fn check_ks(ks: &[usize], d: usize) -> Result<()> {
    if ks.is_empty() {
        return Err(Error::InvalidParams("need at least one classifier size".into()));
    }
    for &k in ks {
        if k > d {
            return Err(Error::InvalidParams(format!("classifier size {k} exceeds {d} attributes")));
        }
    }
    Ok(())
}

/// Common-practice protocol: scores average the train and raw holdout
/// correlations, and every reported accuracy reads the data directly.
pub fn select_and_classify_naive(
    data: &TrialData,
    ks: &[usize],
    correlation_truth: f64,
    z_c: f64,
    z_tau: f64,
    round: usize,
) -> Result<Vec<ReportRow>> {
    check_ks(ks, data.train.d())?;
    let c_train = correlations(&data.train);
    let c_holdout = correlations(&data.holdout);
    let z = counter_over_correlations(&c_train, correlation_truth, z_c, z_tau)?;
    let scores: Vec<f64> =
        c_train.iter().zip(&c_holdout).map(|(t, h)| (t + h) / 2.0).collect();
    let order = rank_by_magnitude(&scores);
    let rows = ks
        .iter()
        .map(|&k| {
            let clf = Classifier::top_k(&order, &scores, k);
            ReportRow {
                round,
                k,
                mode: Mode::Naive,
                acc_train: clf.accuracy(&data.train),
                acc_holdout: Some(clf.accuracy(&data.holdout)),
                acc_fresh: clf.accuracy(&data.fresh),
                budget: None,
                z,
            }
        })
        .collect();
    Ok(rows)
}

/// Session protocol: the same selection and classifiers, but every holdout
/// access goes through `session.answer`. A refused answer falls back to the
/// train-side score and leaves the holdout accuracy cell empty.
pub fn select_and_classify_bdp(
    data: &TrialData,
    session: &mut HoldoutSession<Example>,
    ks: &[usize],
    correlation_truth: f64,
    z_c: f64,
    z_tau: f64,
    round: usize,
) -> Result<Vec<ReportRow>> {
    check_ks(ks, data.train.d())?;
    let c_train = correlations(&data.train);
    let z = counter_over_correlations(&c_train, correlation_truth, z_c, z_tau)?;
    let mut scores = Vec::with_capacity(c_train.len());
    for (j, &c_t) in c_train.iter().enumerate() {
        let query = StatQuery::from_fn(move |e: &Example| (e.x[j] * e.y + 1.0) / 2.0);
        let score = match session.answer(&query)? {
            // Answers live on the [0,1] mean-query scale; map back to a
            // correlation before averaging.
            Answer::Value { value, .. } => (c_t + (2.0 * value - 1.0)) / 2.0,
            Answer::Bottom => c_t,
        };
        scores.push(score);
    }
    let order = rank_by_magnitude(&scores);
    let mut rows = Vec::with_capacity(ks.len());
    for &k in ks {
        let clf = Classifier::top_k(&order, &scores, k);
        let acc_query = {
            let clf = clf.clone();
            StatQuery::from_fn(move |e: &Example| {
                if clf.predict(&e.x) == e.y {
                    1.0
                } else {
                    0.0
                }
            })
        };
        let acc_holdout = match session.answer(&acc_query)? {
            // Released values carry additive noise; clamping is free
            // post-processing and keeps the report on the accuracy scale.
            Answer::Value { value, .. } => Some(value.clamp(0.0, 1.0)),
            Answer::Bottom => None,
        };
        rows.push(ReportRow {
            round,
            k,
            mode: Mode::Bdp,
            acc_train: clf.accuracy(&data.train),
            acc_holdout,
            acc_fresh: clf.accuracy(&data.fresh),
            budget: Some(session.budget()),
            z,
        });
    }
    Ok(rows)
}

/// Final counter value over the correlation phase. Only those queries have
/// an analytic truth; accuracy queries are excluded from the count.
fn counter_over_correlations(
    c_train: &[f64],
    correlation_truth: f64,
    z_c: f64,
    z_tau: f64,
) -> Result<u32> {
    let answers: Vec<f64> = c_train.iter().map(|c| (c + 1.0) / 2.0).collect();
    let truths = vec![correlation_truth; answers.len()];
    let trace = overfit_counter(&answers, &truths, z_c, z_tau)?;
    Ok(trace.last().copied().unwrap_or(0))
}

/// Full study settings: generator, protocol, and session calibration.
/// Unset document fields fall back to the default study's values.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub data: SyntheticConfig,
    /// Classifier sizes, one report row each per mode and trial.
    pub ks: Vec<usize>,
    pub trials: usize,
    pub epsilon_bdp: f64,
    pub budget: u32,
    pub threshold: f64,
    /// Mixing-route constant, used only when rows follow a chain.
    pub chain_constant: f64,
    pub z_c: f64,
    pub z_tau: f64,
}

impl Default for SyntheticConfig {
    fn default() -> SyntheticConfig {
        ExperimentConfig::default_study(0).data
    }
}

impl Default for ExperimentConfig {
    fn default() -> ExperimentConfig {
        ExperimentConfig::default_study(0)
    }
}

impl ExperimentConfig {
    /// The documented default study: no-signal data at the scale where the
    /// naive protocol visibly overfits within minutes of compute.
    pub fn default_study(seed: u64) -> ExperimentConfig {
        ExperimentConfig {
            data: SyntheticConfig {
                n_train: 2000,
                n_holdout: 2000,
                n_fresh: 2000,
                d: 500,
                signal_strength: 0.0,
                attr_correlation: 0.2,
                rows: RowModel::Independent,
                seed,
            },
            ks: vec![0, 10, 20, 30, 40, 50],
            trials: 20,
            epsilon_bdp: 5.0,
            budget: 30,
            threshold: 0.06,
            chain_constant: 0.1,
            z_c: 0.5,
            z_tau: 0.04,
        }
    }

    fn validate(&self) -> Result<()> {
        self.data.validate()?;
        check_ks(&self.ks, self.data.d)?;
        if self.trials == 0 {
            return Err(Error::InvalidParams("need at least one trial".into()));
        }
        if !(self.threshold > 0.0) {
            return Err(Error::InvalidParams(format!(
                "threshold must be positive, got {}",
                self.threshold
            )));
        }
        Ok(())
    }
}

/// Session noise calibration for the configured row model.
pub fn calibrate_experiment(cfg: &ExperimentConfig) -> Result<SessionCalibration> {
    cfg.validate()?;
    match &cfg.data.rows {
        RowModel::Independent => calibrate_session_for_bdp(
            cfg.epsilon_bdp,
            &CorrelationModel::Independent,
            cfg.budget,
            cfg.data.n_holdout,
        ),
        RowModel::Chain { transition, initial, .. } => {
            let chain =
                MarkovChainSpec::new(transition.clone(), initial.clone(), cfg.data.n_holdout)?;
            calibrate_session_for_bdp(
                cfg.epsilon_bdp,
                &CorrelationModel::ChainMixing { chain: &chain, constant: cfg.chain_constant },
                cfg.budget,
                cfg.data.n_holdout,
            )
        }
    }
}

/// Per-(mode, k) aggregates over trials. Gap statistics cover only trials
/// whose holdout accuracy was answered.
#[derive(Debug, Clone, Serialize)]
pub struct GroupSummary {
    pub mode: Mode,
    pub k: usize,
    pub mean_train: f64,
    pub se_train: f64,
    pub mean_holdout: Option<f64>,
    pub se_holdout: Option<f64>,
    pub mean_fresh: f64,
    pub se_fresh: f64,
    pub mean_gap: Option<f64>,
    pub se_gap: Option<f64>,
    pub holdout_answered: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub trials: usize,
    pub calibration: SessionCalibration,
    pub groups: Vec<GroupSummary>,
    pub notes: Vec<String>,
}

impl Summary {
    /// One line per mode: the largest holdout-minus-fresh drift and where.
    pub fn gap_headline(&self) -> String {
        let mut parts = Vec::new();
        for mode in [Mode::Naive, Mode::Bdp] {
            let best = self
                .groups
                .iter()
                .filter(|g| g.mode == mode)
                .filter_map(|g| g.mean_gap.map(|gap| (gap, g.k)))
                .max_by(|a, b| a.0.abs().partial_cmp(&b.0.abs()).expect("finite gaps"));
            match best {
                Some((gap, k)) => {
                    parts.push(format!("{}: holdout-fresh gap {:+.4} at k={}", mode.as_str(), gap, k))
                }
                None => parts.push(format!("{}: no holdout answers", mode.as_str())),
            }
        }
        parts.join("; ")
    }
}

/// Everything one study produces: per-row measurements plus aggregates.
#[derive(Debug, Clone, Serialize)]
pub struct ExperimentReport {
    pub rows: Vec<ReportRow>,
    pub summary: Summary,
}

/// Runs the full study: per trial, one shared dataset triple, a naive pass,
/// and a fresh calibrated session for the budgeted pass.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let calibration = calibrate_experiment(cfg)?;
    let root = NoiseSource::seeded(cfg.data.seed);
    let truth = (cfg.data.signal_strength + 1.0) / 2.0;
    let mut rows = Vec::new();
    for trial in 0..cfg.trials {
        let data = gen_data(&cfg.data, &root.split(&format!("trial-{trial}-data")))?;
        rows.extend(select_and_classify_naive(
            &data,
            &cfg.ks,
            truth,
            cfg.z_c,
            cfg.z_tau,
            trial,
        )?);
        let mut session = HoldoutSession::new(
            data.holdout.rows(),
            data.train.rows(),
            calibration.sigma,
            cfg.threshold,
            cfg.budget,
            root.split(&format!("trial-{trial}-session")),
        )?;
        rows.extend(select_and_classify_bdp(
            &data,
            &mut session,
            &cfg.ks,
            truth,
            cfg.z_c,
            cfg.z_tau,
            trial,
        )?);
    }
    let summary = summarize(cfg, calibration, &rows);
    Ok(ExperimentReport { rows, summary })
}

fn summarize(cfg: &ExperimentConfig, calibration: SessionCalibration, rows: &[ReportRow]) -> Summary {
    let mut groups = Vec::new();
    for mode in [Mode::Naive, Mode::Bdp] {
        for &k in &cfg.ks {
            let cell: Vec<&ReportRow> =
                rows.iter().filter(|r| r.mode == mode && r.k == k).collect();
            if cell.is_empty() {
                continue;
            }
            let (mean_train, se_train) = mean_se(cell.iter().map(|r| r.acc_train));
            let (mean_fresh, se_fresh) = mean_se(cell.iter().map(|r| r.acc_fresh));
            let answered: Vec<(f64, f64)> = cell
                .iter()
                .filter_map(|r| r.acc_holdout.map(|h| (h, r.acc_fresh)))
                .collect();
            let (mean_holdout, se_holdout, mean_gap, se_gap) = if answered.is_empty() {
                (None, None, None, None)
            } else {
                let (mh, sh) = mean_se(answered.iter().map(|&(h, _)| h));
                let (mg, sg) = mean_se(answered.iter().map(|&(h, f)| h - f));
                (Some(mh), Some(sh), Some(mg), Some(sg))
            };
            groups.push(GroupSummary {
                mode,
                k,
                mean_train,
                se_train,
                mean_holdout,
                se_holdout,
                mean_fresh,
                se_fresh,
                mean_gap,
                se_gap,
                holdout_answered: answered.len(),
            });
        }
    }
    Summary {
        trials: cfg.trials,
        calibration,
        groups,
        notes: vec![format!(
            "attribute-correlation loading {} is a modeling default of this harness, not an \
             externally fixed constant",
            cfg.data.attr_correlation
        )],
    }
}

/// Sample mean and standard error (n-1 variance; zero for a single value).
fn mean_se(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let v: Vec<f64> = values.collect();
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (mean, 0.0);
    }
    let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Fixed-column CSV artifact; empty cells for refused or inapplicable
/// values.
pub fn report_csv(rows: &[ReportRow]) -> String {
    let mut out = String::from("round,k,mode,acc_train,acc_holdout,acc_fresh,budget,Z\n");
    for r in rows {
        let holdout = r.acc_holdout.map(|v| format!("{v:.6}")).unwrap_or_default();
        let budget = r.budget.map(|b| b.to_string()).unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{:.6},{},{:.6},{},{}\n",
            r.round,
            r.k,
            r.mode.as_str(),
            r.acc_train,
            holdout,
            r.acc_fresh,
            budget,
            r.z
        ));
    }
    out
}
