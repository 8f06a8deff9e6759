//! JSON ingestion for model and mechanism files.
//!
//! A model document is one object with a `type` discriminator; each type
//! has a fixed set of required fields and rejects everything else, so a
//! file that silently mixes shapes cannot parse. Node ids are 0-based
//! everywhere.

use std::collections::BTreeMap;

use serde::Deserialize;

use crate::chain::MarkovChainSpec;
use crate::error::{Error, Result};
use crate::graph::DependencyGraph;
use crate::joint::{for_each_outcome, Domain, JointTable, DEFAULT_TABLE_CAP};
use crate::leakage::DiscreteMechanism;

/// Every field any model type may carry; per-type validation decides which
/// must be present and which are contradictions.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModel {
    #[serde(rename = "type")]
    kind: String,
    n: Option<usize>,
    domains: Option<Vec<Vec<String>>>,
    transition: Option<Vec<Vec<f64>>>,
    initial: Option<Vec<f64>>,
    edges: Option<Vec<[usize; 2]>>,
    probabilities: Option<Vec<f64>>,
}

/// A parsed data model: how the protected tuples are distributed.
#[derive(Debug, Clone)]
pub enum Model {
    /// A stationary chain observed for `n` steps.
    Chain(MarkovChainSpec),
    /// An explicit joint table with no dependency structure attached.
    Joint(JointTable),
    /// Undirected dependency structure plus the exact joint.
    MarkovNetwork { graph: DependencyGraph, joint: JointTable },
    /// Directed acyclic dependency structure plus the exact joint.
    BayesNetwork { graph: DependencyGraph, joint: JointTable },
}

impl Model {
    /// Parses a model document, enforcing per-type field discipline.
    pub fn from_json(text: &str) -> Result<Model> {
        let raw: RawModel =
            serde_json::from_str(text).map_err(|e| Error::Document(e.to_string()))?;
        match raw.kind.as_str() {
            "chain" => {
                forbid(&raw, "chain", &["domains", "edges", "probabilities"])?;
                let n = require(raw.n, "chain", "n")?;
                let transition = require(raw.transition, "chain", "transition")?;
                let initial = require(raw.initial, "chain", "initial")?;
                Ok(Model::Chain(MarkovChainSpec::new(transition, initial, n)?))
            }
            "joint" => {
                forbid(&raw, "joint", &["transition", "initial", "edges"])?;
                Ok(Model::Joint(joint_of(&raw, "joint")?))
            }
            "markov_network" => {
                forbid(&raw, "markov_network", &["transition", "initial"])?;
                let joint = joint_of(&raw, "markov_network")?;
                let edges = require(raw.edges, "markov_network", "edges")?;
                let graph = graph_of(&edges, joint.n(), false)?;
                Ok(Model::MarkovNetwork { graph, joint })
            }
            "bayes_net" => {
                forbid(&raw, "bayes_net", &["transition", "initial"])?;
                let joint = joint_of(&raw, "bayes_net")?;
                let edges = require(raw.edges, "bayes_net", "edges")?;
                let graph = graph_of(&edges, joint.n(), true)?;
                if !graph.is_acyclic() {
                    return Err(Error::CyclicGraph);
                }
                Ok(Model::BayesNetwork { graph, joint })
            }
            other => Err(Error::Document(format!(
                "unknown model type {other:?}; expected chain, joint, markov_network, or bayes_net"
            ))),
        }
    }

    /// Number of protected tuples.
    pub fn n(&self) -> usize {
        match self {
            Model::Chain(c) => c.n(),
            Model::Joint(j) => j.n(),
            Model::MarkovNetwork { joint, .. } | Model::BayesNetwork { joint, .. } => joint.n(),
        }
    }

    /// The exact joint, expanding a chain up to `cap` table cells.
    pub fn joint(&self, cap: usize) -> Result<JointTable> {
        match self {
            Model::Chain(c) => c.joint_table(cap),
            Model::Joint(j) => Ok(j.clone()),
            Model::MarkovNetwork { joint, .. } | Model::BayesNetwork { joint, .. } => {
                Ok(joint.clone())
            }
        }
    }

    /// Dependency structure; a chain is its path graph, a bare joint has
    /// none.
    pub fn graph(&self) -> Result<DependencyGraph> {
        match self {
            Model::Chain(c) => DependencyGraph::path(c.n()),
            Model::Joint(_) => Err(Error::Document(
                "a bare joint carries no dependency structure; use a markov_network, \
                 bayes_net, or chain model"
                    .into(),
            )),
            Model::MarkovNetwork { graph, .. } | Model::BayesNetwork { graph, .. } => {
                Ok(graph.clone())
            }
        }
    }

    /// The chain itself, when the model is one.
    pub fn chain(&self) -> Option<&MarkovChainSpec> {
        match self {
            Model::Chain(c) => Some(c),
            _ => None,
        }
    }
}

fn require<T>(field: Option<T>, kind: &str, name: &str) -> Result<T> {
    field.ok_or_else(|| Error::Document(format!("model type {kind:?} requires field {name:?}")))
}

fn forbid(raw: &RawModel, kind: &str, names: &[&str]) -> Result<()> {
    for &name in names {
        let present = match name {
            "domains" => raw.domains.is_some(),
            "transition" => raw.transition.is_some(),
            "initial" => raw.initial.is_some(),
            "edges" => raw.edges.is_some(),
            "probabilities" => raw.probabilities.is_some(),
            _ => unreachable!("unchecked field name {name}"),
        };
        if present {
            return Err(Error::Document(format!(
                "model type {kind:?} does not take field {name:?}"
            )));
        }
    }
    Ok(())
}

fn joint_of(raw: &RawModel, kind: &str) -> Result<JointTable> {
    let domains = require(raw.domains.clone(), kind, "domains")?;
    let probabilities = require(raw.probabilities.clone(), kind, "probabilities")?;
    let domain = Domain::new(domains)?;
    if let Some(n) = raw.n {
        if n != domain.n() {
            return Err(Error::Document(format!(
                "field n is {n} but domains lists {} variables",
                domain.n()
            )));
        }
    }
    JointTable::new(domain, probabilities)
}

fn graph_of(edges: &[[usize; 2]], n: usize, directed: bool) -> Result<DependencyGraph> {
    let pairs: Vec<(usize, usize)> = edges.iter().map(|e| (e[0], e[1])).collect();
    DependencyGraph::new(n, &pairs, directed)
}

/// Output labels plus one conditional row per database instantiation, keyed
/// by comma-joined state labels in node order.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMechanism {
    outputs: Vec<String>,
    rows: BTreeMap<String, Vec<f64>>,
}

/// Key of one full database assignment under `domain`.
pub fn assignment_key(domain: &Domain, assign: &[usize]) -> String {
    assign
        .iter()
        .enumerate()
        .map(|(i, &s)| domain.labels(i)[s].as_str())
        .collect::<Vec<_>>()
        .join(",")
}

/// Parses a mechanism document against the database domain it must cover:
/// every instantiation exactly once, no strays.
pub fn parse_mechanism(text: &str, domain: &Domain) -> Result<DiscreteMechanism> {
    let raw: RawMechanism =
        serde_json::from_str(text).map_err(|e| Error::Document(e.to_string()))?;
    let len = domain.table_len(DEFAULT_TABLE_CAP)?;
    let mut rows = Vec::with_capacity(len);
    let mut missing = Vec::new();
    let mut seen = 0usize;
    let sizes = domain.sizes();
    for_each_outcome(&sizes, |_, assign| {
        let key = assignment_key(domain, assign);
        match raw.rows.get(&key) {
            Some(row) => {
                rows.push(row.clone());
                seen += 1;
            }
            None => missing.push(key),
        }
    });
    if let Some(key) = missing.first() {
        return Err(Error::Document(format!(
            "mechanism is missing a row for assignment {key:?} ({} missing in total)",
            missing.len()
        )));
    }
    if raw.rows.len() != seen {
        let mut valid = std::collections::BTreeSet::new();
        for_each_outcome(&sizes, |_, assign| {
            valid.insert(assignment_key(domain, assign));
        });
        let stray = raw.rows.keys().find(|k| !valid.contains(*k)).cloned().unwrap_or_default();
        return Err(Error::Document(format!(
            "mechanism lists {} rows for {} assignments; first stray key {stray:?}",
            raw.rows.len(),
            len
        )));
    }
    DiscreteMechanism::new(domain.clone(), raw.outputs, rows)
}
