//! Command-line surface over the library: model ingestion, calibration,
//! sample-size bounds, leakage measurement, max-information, budgeted
//! holdout sessions, the overfitting study, and the self-test battery.
//!
//! Every subcommand is a pure function of its files, flags, and seed, so a
//! rerun is byte-identical. Failures exit 2 with a single-line JSON record
//! on stderr; mathematically infeasible results still print their report
//! and exit 3.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::json;

use bdp_core::calibration::QuiltOption;
use bdp_core::holdout::CorrelationModel;
use bdp_core::{
    adaptive_chain_estimate, adaptive_sample_bound, bdpl_bruteforce, blanket_coefficients,
    calibrate_session_for_bdp, dp_leakage_bruteforce, empirical_max_info, enumerate_chain_quilts,
    enumerate_graph_quilts, maxinfo_bound_bdp, maxinfo_bound_simple, n_pound, n_star,
    parse_mechanism, quilt_options, report_csv, run_experiment, selftest, threshold_params,
    ChainSampleEstimate, Error, ExperimentConfig, HoldoutSession, MarkovChainSpec, Model,
    NoiseSource, SampleBound, StatQuery, DEFAULT_NEARBY_CAP, DEFAULT_TABLE_CAP,
};

/// Privacy-calibrated adaptive reuse of a holdout over correlated data.
#[derive(Parser)]
#[command(name = "bdp", version, disable_help_subcommand = true)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Noise calibration for a holdout session at a Bayesian leakage target.
    Calibrate(CalibrateArgs),
    /// Sample-size requirements for accurate adaptive reuse.
    Complexity(ComplexityArgs),
    /// Empirical max-information of a pair model and the closed-form caps.
    Maxinfo(MaxinfoArgs),
    /// Brute-force classical and Bayesian leakage of a mechanism document.
    Bdpl(BdplArgs),
    /// Run a budgeted holdout session over datasets and a query list.
    Holdout(HoldoutArgs),
    /// Run the synthetic overfitting study and write its report files.
    Experiment(ExperimentArgs),
    /// Cross-check fast paths against brute-force oracles.
    Selftest,
}

/// How tuple correlation is modeled during conversion.
#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Route {
    /// Tuples are independent; the target passes through unchanged.
    Independent,
    /// Per-node blanket influence on the exact joint.
    Blanket,
    /// Per-node separating-set search on the exact joint.
    Quilts,
    /// Spectral mixing analysis; chains only, any length.
    Markov,
}

#[derive(Args)]
struct CalibrateArgs {
    /// Model document (JSON); optional only for --route independent.
    #[arg(long)]
    model: Option<PathBuf>,
    /// Bayesian leakage target.
    #[arg(long = "epsilon-bdp")]
    epsilon_bdp: f64,
    #[arg(long, value_enum)]
    route: Route,
    /// Session overfitting budget.
    #[arg(long, visible_alias = "B", default_value_t = 25)]
    budget: u32,
    /// Protected-data length; defaults to the model's n. Routes that read
    /// the exact joint always use the model's n.
    #[arg(long = "holdout-size")]
    holdout_size: Option<usize>,
    /// Mixing-route constant in (0, 1/6).
    #[arg(long = "markov-c", default_value_t = 0.1)]
    markov_c: f64,
    /// Largest separating set searched on a general graph.
    #[arg(long = "quilt-cap", default_value_t = 3)]
    quilt_cap: usize,
    /// Most nodes a candidate may leave nearby.
    #[arg(long = "nearby-cap", default_value_t = DEFAULT_NEARBY_CAP)]
    nearby_cap: usize,
    /// Densest table a model may expand to, in cells.
    #[arg(long = "table-cap", default_value_t = DEFAULT_TABLE_CAP)]
    table_cap: usize,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ComplexityArgs {
    /// Model document (JSON); omitted means independent tuples.
    #[arg(long)]
    model: Option<PathBuf>,
    /// Session overfitting budget.
    #[arg(long = "B")]
    budget: u32,
    /// Accuracy tolerance.
    #[arg(long)]
    tau: f64,
    /// Failure probability.
    #[arg(long)]
    beta: f64,
    /// Adaptive query count.
    #[arg(long = "m")]
    m: u64,
    /// Threshold split constant in (0, 1).
    #[arg(long = "c")]
    c: f64,
    /// Noise-scale override; defaults to the threshold calibration's scale.
    #[arg(long)]
    sigma: Option<f64>,
    /// Mixing-route constant in (0, 1/6), for chain models.
    #[arg(long = "markov-c", default_value_t = 0.1)]
    markov_c: f64,
    #[arg(long = "quilt-cap", default_value_t = 3)]
    quilt_cap: usize,
    #[arg(long = "nearby-cap", default_value_t = DEFAULT_NEARBY_CAP)]
    nearby_cap: usize,
    #[arg(long = "table-cap", default_value_t = DEFAULT_TABLE_CAP)]
    table_cap: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct MaxinfoArgs {
    /// Two-variable joint model over an (input, output) pair.
    #[arg(long)]
    model: Option<PathBuf>,
    /// Confidence slack in [0, 1).
    #[arg(long, default_value_t = 0.05)]
    beta: f64,
    /// Mechanism level for the closed-form caps.
    #[arg(long)]
    epsilon: Option<f64>,
    /// Record count for the closed-form caps.
    #[arg(long)]
    records: Option<u64>,
    #[arg(long = "table-cap", default_value_t = DEFAULT_TABLE_CAP)]
    table_cap: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BdplArgs {
    /// Model document giving the tuple prior.
    #[arg(long)]
    model: PathBuf,
    /// Mechanism document: output labels plus one row per assignment.
    #[arg(long)]
    mechanism: PathBuf,
    #[arg(long = "table-cap", default_value_t = DEFAULT_TABLE_CAP)]
    table_cap: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct HoldoutArgs {
    /// Holdout dataset (JSON: {"rows": [[...], ...]}).
    #[arg(long)]
    holdout: PathBuf,
    /// Training dataset, same shape.
    #[arg(long)]
    train: PathBuf,
    /// Query list (JSON array; see the query document format).
    #[arg(long)]
    queries: PathBuf,
    /// Base noise scale.
    #[arg(long)]
    sigma: f64,
    /// Decision threshold.
    #[arg(long)]
    threshold: f64,
    /// Overfitting budget.
    #[arg(long, visible_alias = "B")]
    budget: u32,
    /// Root seed for every draw this session makes.
    #[arg(long)]
    seed: u64,
    /// Write the transcript here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ExperimentArgs {
    /// Study settings (JSON); omitted fields use the default study.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Root seed; overrides any seed in the config file.
    #[arg(long)]
    seed: u64,
    /// Output stem: writes <out>.csv and <out>.json.
    #[arg(long)]
    out: String,
}

/// (kind, message) of a failure bound for the stderr record.
type Failure = (String, String);

/// Prints without panicking when the pipe closes early.
fn write_stdout(text: &str) {
    use std::io::Write;
    let _ = std::io::stdout().write_all(text.as_bytes());
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            if e.use_stderr() {
                let line = e
                    .to_string()
                    .lines()
                    .find(|l| !l.trim().is_empty())
                    .unwrap_or("bad arguments")
                    .trim_start_matches("error: ")
                    .to_string();
                return fail(&("usage".into(), line));
            }
            // --help and --version land here; they are not failures.
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
    };
    let result = match cli.cmd {
        Cmd::Calibrate(a) => run_calibrate(a),
        Cmd::Complexity(a) => run_complexity(a),
        Cmd::Maxinfo(a) => run_maxinfo(a),
        Cmd::Bdpl(a) => run_bdpl(a),
        Cmd::Holdout(a) => run_holdout(a),
        Cmd::Experiment(a) => run_experiment_cmd(a),
        Cmd::Selftest => run_selftest(),
    };
    match result {
        Ok(code) => code,
        Err(f) => fail(&f),
    }
}

fn fail(failure: &Failure) -> ExitCode {
    use std::io::Write;
    let (kind, message) = failure;
    let record = json!({ "error": kind, "message": message.replace('\n', " ") });
    let _ = writeln!(std::io::stderr(), "{record}");
    ExitCode::from(2)
}

fn core_failure(e: Error) -> Failure {
    (error_kind(&e).to_string(), e.to_string())
}

fn usage(message: impl Into<String>) -> Failure {
    ("usage".into(), message.into())
}

fn error_kind(e: &Error) -> &'static str {
    match e {
        Error::CapExceeded { .. } => "cap_exceeded",
        Error::CyclicGraph => "cyclic_graph",
        Error::IndexOutOfRange { .. } => "index_out_of_range",
        Error::NotASeparator { .. } => "not_a_separator",
        Error::ZeroConditioningEvent => "zero_conditioning_event",
        Error::NotErgodic(_) => "not_ergodic",
        Error::NotReversible { .. } => "not_reversible",
        Error::ChainTooShort { .. } => "chain_too_short",
        Error::InvalidConstant(_) => "invalid_constant",
        Error::InvalidParams(_) => "invalid_params",
        Error::InvalidDistribution(_) => "invalid_distribution",
        Error::EmptyCandidateSet { .. } => "empty_candidate_set",
        Error::EmptyDataset => "empty_dataset",
        Error::EmptyRange => "empty_range",
        Error::NoFeasibleSubset => "no_feasible_subset",
        Error::InfeasibleCalibration(_) => "infeasible_calibration",
        Error::Document(_) => "document",
    }
}

fn read_file(path: &PathBuf) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| ("io".into(), format!("{}: {e}", path.display())))
}

fn read_model(path: &PathBuf) -> Result<Model, Failure> {
    Model::from_json(&read_file(path)?).map_err(core_failure)
}

/// Writes `text` to `--out` or stdout. Reports end in exactly one newline.
fn emit(out: &Option<PathBuf>, text: &str) -> Result<(), Failure> {
    match out {
        Some(path) => fs::write(path, text)
            .map_err(|e| ("io".into(), format!("{}: {e}", path.display()))),
        None => {
            write_stdout(text);
            Ok(())
        }
    }
}

fn pretty(value: &serde_json::Value) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("report serializes");
    text.push('\n');
    text
}

fn run_calibrate(args: CalibrateArgs) -> Result<ExitCode, Failure> {
    let model = match &args.model {
        Some(path) => Some(read_model(path)?),
        None => None,
    };
    let need_model =
        || model.as_ref().ok_or_else(|| usage("this route needs --model <file>"));
    // Joint-reading routes protect exactly the modeled tuples, so n is the
    // model's; the mixing route extends the transition to any length.
    let calibrated = match args.route {
        Route::Independent => {
            let n = args
                .holdout_size
                .or_else(|| model.as_ref().map(|m| m.n()))
                .ok_or_else(|| usage("--route independent needs --holdout-size or --model"))?;
            calibrate_session_for_bdp(
                args.epsilon_bdp,
                &CorrelationModel::Independent,
                args.budget,
                n,
            )
        }
        Route::Blanket => {
            let model = need_model()?;
            let joint = model.joint(args.table_cap).map_err(core_failure)?;
            let graph = model.graph().map_err(core_failure)?;
            calibrate_session_for_bdp(
                args.epsilon_bdp,
                &CorrelationModel::GraphBlanket { graph: &graph, joint: &joint },
                args.budget,
                model.n(),
            )
        }
        Route::Quilts => {
            let model = need_model()?;
            let joint = model.joint(args.table_cap).map_err(core_failure)?;
            let correlation = if model.chain().is_some() {
                CorrelationModel::ChainQuilts { joint: &joint, nearby_cap: args.nearby_cap }
            } else {
                CorrelationModel::GraphQuilts {
                    graph: &model.graph().map_err(core_failure)?,
                    joint: &joint,
                    max_quilt: args.quilt_cap,
                    nearby_cap: args.nearby_cap,
                }
            };
            calibrate_session_for_bdp(args.epsilon_bdp, &correlation, args.budget, model.n())
        }
        Route::Markov => {
            let model = need_model()?;
            let chain = model
                .chain()
                .ok_or_else(|| usage("--route markov needs a chain model"))?;
            let n = args.holdout_size.unwrap_or(chain.n());
            let chain = MarkovChainSpec::new(
                chain.transition().to_vec(),
                chain.initial().to_vec(),
                n,
            )
            .map_err(core_failure)?;
            calibrate_session_for_bdp(
                args.epsilon_bdp,
                &CorrelationModel::ChainMixing { chain: &chain, constant: args.markov_c },
                args.budget,
                n,
            )
        }
    };
    match calibrated {
        Ok(calibration) => {
            let report = json!({ "feasible": true, "calibration": calibration });
            emit(&args.out, &pretty(&report))?;
            Ok(ExitCode::SUCCESS)
        }
        // No mechanism level can meet the target on this model: a result,
        // not a usage error, so the report still prints.
        Err(e @ (Error::InfeasibleCalibration(_) | Error::ChainTooShort { .. })) => {
            let report = json!({
                "feasible": false,
                "epsilon_bdp": args.epsilon_bdp,
                "reason": e.to_string(),
            });
            emit(&args.out, &pretty(&report))?;
            Ok(ExitCode::from(3))
        }
        Err(e) => Err(core_failure(e)),
    }
}

/// One sample-size requirement with the inputs that produced it.
#[derive(Serialize)]
struct BoundReport {
    inputs: serde_json::Value,
    value: Option<u64>,
    feasible: bool,
    witness_node: Option<usize>,
    witness_quilt: Option<Vec<usize>>,
}

impl BoundReport {
    fn new(inputs: serde_json::Value, bound: SampleBound) -> BoundReport {
        BoundReport {
            inputs,
            feasible: bound.feasible(),
            value: bound.samples,
            witness_node: bound.witness_node,
            witness_quilt: bound.witness_quilt,
        }
    }
}

fn run_complexity(args: ComplexityArgs) -> Result<ExitCode, Failure> {
    let (sigma_cal, threshold) =
        threshold_params(args.tau, args.m, args.beta, args.c).map_err(core_failure)?;
    let sigma = args.sigma.unwrap_or(sigma_cal);
    let model = match &args.model {
        Some(path) => Some(read_model(path)?),
        None => None,
    };

    // Blanket coefficients and quilt families, exhaustively, when the joint
    // is materializable; long chains fall back to the spectral estimate.
    let mut exhaustive = None;
    let mut chain_estimate: Option<ChainSampleEstimate> = None;
    match &model {
        None => {
            // Independent tuples: one representative node, zero influence.
            let blanket = vec![0.0];
            let options =
                vec![vec![QuiltOption { quilt: Default::default(), nearby_size: 0, coefficient: 0.0 }]];
            exhaustive = Some((blanket, options));
        }
        Some(model) => {
            match model.joint(args.table_cap) {
                Ok(joint) => {
                    let graph = model.graph().map_err(core_failure)?;
                    let blanket: Vec<f64> = blanket_coefficients(&joint, &graph)
                        .map_err(core_failure)?
                        .into_iter()
                        .map(|(a, _)| a)
                        .collect();
                    let families = (0..graph.n())
                        .map(|i| {
                            if model.chain().is_some() {
                                enumerate_chain_quilts(graph.n(), i)
                            } else {
                                enumerate_graph_quilts(&graph, i, args.quilt_cap)
                            }
                        })
                        .collect::<Result<Vec<_>, _>>()
                        .map_err(core_failure)?;
                    let options =
                        quilt_options(&joint, &families, args.nearby_cap).map_err(core_failure)?;
                    exhaustive = Some((blanket, options));
                }
                Err(Error::CapExceeded { .. }) if model.chain().is_some() => {}
                Err(e) => return Err(core_failure(e)),
            }
            if let Some(chain) = model.chain() {
                let (gap, min_stationary) = chain.spectral_params().map_err(core_failure)?;
                chain_estimate = Some(
                    adaptive_chain_estimate(
                        args.budget,
                        args.tau,
                        args.m,
                        args.beta,
                        args.c,
                        gap,
                        min_stationary,
                        args.markov_c,
                    )
                    .map_err(core_failure)?,
                );
            }
        }
    }

    let mut feasible = true;
    let mut report = json!({
        "sigma": sigma,
        "threshold": threshold,
    });
    if let Some((blanket, options)) = exhaustive {
        let base = json!({
            "budget": args.budget, "sigma": sigma, "tau": args.tau, "beta": args.beta,
        });
        let star = BoundReport::new(
            base.clone(),
            n_star(&blanket, args.budget, sigma, args.tau, args.beta).map_err(core_failure)?,
        );
        let pound = BoundReport::new(
            base,
            n_pound(&options, args.budget, sigma, args.tau, args.beta).map_err(core_failure)?,
        );
        let adaptive = BoundReport::new(
            json!({
                "budget": args.budget, "tau": args.tau, "beta": args.beta,
                "m": args.m, "c": args.c,
            }),
            adaptive_sample_bound(&options, args.budget, args.tau, args.m, args.beta, args.c)
                .map_err(core_failure)?,
        );
        feasible = star.feasible && pound.feasible && adaptive.feasible;
        let obj = report.as_object_mut().expect("report is an object");
        obj.insert("n_star".into(), serde_json::to_value(&star).expect("bound serializes"));
        obj.insert("n_pound".into(), serde_json::to_value(&pound).expect("bound serializes"));
        obj.insert("adaptive".into(), serde_json::to_value(&adaptive).expect("bound serializes"));
    }
    if let Some(estimate) = chain_estimate {
        report.as_object_mut().expect("report is an object").insert(
            "chain_estimate".into(),
            serde_json::to_value(&estimate).expect("estimate serializes"),
        );
    }
    emit(&args.out, &pretty(&report))?;
    Ok(if feasible { ExitCode::SUCCESS } else { ExitCode::from(3) })
}

fn run_maxinfo(args: MaxinfoArgs) -> Result<ExitCode, Failure> {
    let closed_form = match (args.epsilon, args.records) {
        (Some(epsilon), Some(records)) => Some((epsilon, records)),
        (None, None) => None,
        _ => return Err(usage("the closed-form caps need both --epsilon and --records")),
    };
    if args.model.is_none() && closed_form.is_none() {
        return Err(usage("maxinfo needs --model and/or --epsilon with --records"));
    }
    let mut report = json!({ "beta": args.beta });
    let obj = report.as_object_mut().expect("report is an object");
    let mut feasible = true;
    if let Some(path) = &args.model {
        let joint = read_model(path)?.joint(args.table_cap).map_err(core_failure)?;
        match empirical_max_info(&joint, args.beta) {
            Ok(estimate) => {
                obj.insert(
                    "empirical".into(),
                    serde_json::to_value(&estimate).expect("estimate serializes"),
                );
            }
            // Every outcome set sits below the slack: nothing to report
            // but the infeasibility itself.
            Err(Error::NoFeasibleSubset) => {
                obj.insert("empirical".into(), serde_json::Value::Null);
                feasible = false;
            }
            Err(e) => return Err(core_failure(e)),
        }
    }
    if let Some((epsilon, records)) = closed_form {
        let bdp = maxinfo_bound_bdp(epsilon, records, args.beta).map_err(core_failure)?;
        let simple = maxinfo_bound_simple(epsilon, records).map_err(core_failure)?;
        obj.insert("bound_bdp".into(), json!(bdp));
        obj.insert("bound_simple".into(), json!(simple));
    }
    emit(&args.out, &pretty(&report))?;
    Ok(if feasible { ExitCode::SUCCESS } else { ExitCode::from(3) })
}

fn run_bdpl(args: BdplArgs) -> Result<ExitCode, Failure> {
    let joint = read_model(&args.model)?.joint(args.table_cap).map_err(core_failure)?;
    let mechanism =
        parse_mechanism(&read_file(&args.mechanism)?, joint.domain()).map_err(core_failure)?;
    let dp = dp_leakage_bruteforce(&mechanism).map_err(core_failure)?;
    let bdpl = bdpl_bruteforce(&mechanism, &joint).map_err(core_failure)?;
    let report = json!({ "dp_leakage": dp, "bdpl": bdpl });
    emit(&args.out, &pretty(&report))?;
    Ok(ExitCode::SUCCESS)
}

/// Rows of ±anything; queries decide how records score.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct DatasetDoc {
    rows: Vec<Vec<f64>>,
}

/// One statistical query over a feature column.
#[derive(Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
enum QueryDoc {
    /// Mean of the column; every value must already lie in [0, 1].
    Mean { feature: usize },
    /// Fraction of rows whose column is at least the threshold.
    IndicatorGe { feature: usize, threshold: f64 },
}

impl QueryDoc {
    fn feature(&self) -> usize {
        match self {
            QueryDoc::Mean { feature } | QueryDoc::IndicatorGe { feature, .. } => *feature,
        }
    }

    fn build(&self) -> StatQuery<Vec<f64>> {
        match *self {
            QueryDoc::Mean { feature } => StatQuery::from_fn(move |r: &Vec<f64>| r[feature]),
            QueryDoc::IndicatorGe { feature, threshold } => StatQuery::from_fn(
                move |r: &Vec<f64>| if r[feature] >= threshold { 1.0 } else { 0.0 },
            ),
        }
    }
}

fn read_dataset(path: &PathBuf) -> Result<Vec<Vec<f64>>, Failure> {
    let doc: DatasetDoc = serde_json::from_str(&read_file(path)?)
        .map_err(|e| ("document".into(), format!("{}: {e}", path.display())))?;
    if doc.rows.is_empty() {
        return Err(("document".into(), format!("{}: no rows", path.display())));
    }
    let width = doc.rows[0].len();
    for (i, row) in doc.rows.iter().enumerate() {
        if row.len() != width {
            return Err((
                "document".into(),
                format!("{}: row {i} has {} values, expected {width}", path.display(), row.len()),
            ));
        }
    }
    Ok(doc.rows)
}

fn run_holdout(args: HoldoutArgs) -> Result<ExitCode, Failure> {
    let holdout = read_dataset(&args.holdout)?;
    let train = read_dataset(&args.train)?;
    let queries: Vec<QueryDoc> = serde_json::from_str(&read_file(&args.queries)?)
        .map_err(|e| ("document".into(), format!("{}: {e}", args.queries.display())))?;
    let width = holdout[0].len().min(train[0].len());
    for (i, q) in queries.iter().enumerate() {
        if q.feature() >= width {
            return Err((
                "document".into(),
                format!("query {i} reads feature {} but rows have {width}", q.feature()),
            ));
        }
    }
    let mut session = HoldoutSession::new(
        holdout,
        train,
        args.sigma,
        args.threshold,
        args.budget,
        NoiseSource::seeded(args.seed),
    )
    .map_err(core_failure)?;
    for query in &queries {
        session.answer(&query.build()).map_err(core_failure)?;
    }
    emit(&args.out, &session.transcript_jsonl())?;
    Ok(ExitCode::SUCCESS)
}

fn run_experiment_cmd(args: ExperimentArgs) -> Result<ExitCode, Failure> {
    let mut cfg = match &args.config {
        Some(path) => serde_json::from_str::<ExperimentConfig>(&read_file(path)?)
            .map_err(|e| ("document".into(), format!("{}: {e}", path.display())))?,
        None => ExperimentConfig::default_study(args.seed),
    };
    cfg.data.seed = args.seed;
    let report = match run_experiment(&cfg) {
        Ok(report) => report,
        Err(e @ (Error::InfeasibleCalibration(_) | Error::ChainTooShort { .. })) => {
            let record = json!({
                "feasible": false,
                "epsilon_bdp": cfg.epsilon_bdp,
                "reason": e.to_string(),
            });
            write_stdout(&pretty(&record));
            return Ok(ExitCode::from(3));
        }
        Err(e) => return Err(core_failure(e)),
    };
    let csv_path = PathBuf::from(format!("{}.csv", args.out));
    let json_path = PathBuf::from(format!("{}.json", args.out));
    emit(&Some(csv_path), &report_csv(&report.rows))?;
    let summary = serde_json::to_value(&report.summary).expect("summary serializes");
    emit(&Some(json_path), &pretty(&summary))?;
    write_stdout(&format!("{}\n", report.summary.gap_headline()));
    Ok(ExitCode::SUCCESS)
}

fn run_selftest() -> Result<ExitCode, Failure> {
    let outcomes = selftest();
    let mut all_pass = true;
    let mut lines = String::new();
    for o in &outcomes {
        if o.pass {
            lines.push_str(&format!("{}: PASS\n", o.name));
        } else {
            all_pass = false;
            lines.push_str(&format!("{}: FAIL ({})\n", o.name, o.detail));
        }
    }
    write_stdout(&lines);
    Ok(if all_pass { ExitCode::SUCCESS } else { ExitCode::from(1) })
}
