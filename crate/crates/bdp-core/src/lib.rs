//! Privacy-calibrated adaptive reuse of a holdout dataset for correlated
//! samples.
//!
//! The adversary model is Bayesian: it knows the joint distribution of the
//! protected tuples and may already hold some of them, so correlation
//! amplifies what a mechanism's output reveals. This crate measures that
//! amplification on exact discrete models, converts a Bayesian leakage
//! target into the classical mechanism level that survives it, and runs a
//! budgeted holdout engine at the converted level so adaptive analyses
//! cannot silently overfit.
//!
//! Module map: `joint`, `graph`, and `chain` hold the exact models;
//! `influence` computes worst-case conditional log-ratios; `leakage`
//! measures mechanisms by enumeration; `calibration` converts targets along
//! blanket, quilt, and mixing routes; `holdout` answers budgeted statistical
//! queries; `bounds` gives sample-size and max-information guarantees;
//! `experiments` reproduces the overfitting study; `document` parses model
//! and mechanism files; `oracle` re-derives key quantities the slow way for
//! cross-checking.

pub mod bounds;
pub mod calibration;
pub mod chain;
pub mod document;
pub mod error;
pub mod experiments;
pub mod graph;
pub mod holdout;
pub mod influence;
pub mod joint;
pub mod leakage;
pub mod noise;
pub mod oracle;

pub use crate::bounds::{
    adaptive_chain_estimate, adaptive_sample_bound, empirical_max_info, generalization_tail,
    maxinfo_bound_bdp, maxinfo_bound_simple, n_pound, n_star, threshold_params,
    ChainSampleEstimate, MaxInfoEstimate, SampleBound,
};
pub use crate::calibration::{
    blanket_coefficients, dp_for_bdp_blanket, dp_for_bdp_quilts, h_markov, h_markov_unchecked,
    quilt_options, ChainConversion, Converted, NodeConversion, QuiltOption,
};
pub use crate::chain::MarkovChainSpec;
pub use crate::document::{assignment_key, parse_mechanism, Model};
pub use crate::error::{Error, Result};
pub use crate::experiments::{
    calibrate_experiment, gen_data, overfit_counter, report_csv, run_experiment,
    select_and_classify_bdp, select_and_classify_naive, Dataset, Example, ExperimentConfig,
    ExperimentReport, GroupSummary, Mode, ReportRow, RowModel, Summary, SyntheticConfig,
    TrialData,
};
pub use crate::graph::{
    enumerate_chain_quilts, enumerate_graph_quilts, validate_quilt, DependencyGraph,
    QuiltPartition,
};
pub use crate::holdout::{
    calibrate_session_for_bdp, session_dp_epsilon, Answer, CorrelationModel, HoldoutSession,
    Provenance, SessionCalibration, TranscriptEntry,
};
pub use crate::influence::{
    blanket_coefficient, max_influence, max_influence_cond, quilt_coefficient, InfluenceResult,
    InfluenceWitness, DEFAULT_NEARBY_CAP,
};
pub use crate::joint::{Domain, JointTable, SubTable, DEFAULT_TABLE_CAP, PROB_TOLERANCE};
pub use crate::leakage::{
    bdpl_bruteforce, dp_leakage_bruteforce, DiscreteMechanism, ENUMERATION_CAP,
};
pub use crate::noise::{
    exponential_mechanism, laplace_mechanism, laplace_scale, stat_query_sensitivity, NoiseSource,
    StatQuery,
};
pub use crate::oracle::{
    conditional_independence_check, max_info_bruteforce, selftest, SelfTestOutcome,
};
