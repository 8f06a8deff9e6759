//! Dependency graphs over tuple indices: moralization, Markov blankets, and
//! quilt partitions (separating set / nearby / remote).
//!
//! Indices are 0-based throughout. Directed graphs must be acyclic where an
//! operation relies on it; the check happens in the operation so that the
//! failure names the operation's contract.

use std::collections::BTreeSet;

use crate::error::{Error, Result};

/// A dependency structure over `n` tuple variables, directed or undirected.
///
/// Self-loops are rejected. Parallel edges collapse.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DependencyGraph {
    n: usize,
    directed: bool,
    /// Directed: out-neighbors. Undirected: all neighbors.
    succ: Vec<BTreeSet<usize>>,
    /// Directed: in-neighbors. Undirected: mirrors `succ`.
    pred: Vec<BTreeSet<usize>>,
}

impl DependencyGraph {
    /// Builds a graph from an edge list. For undirected graphs each pair is
    /// stored symmetrically.
    pub fn new(n: usize, edges: &[(usize, usize)], directed: bool) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParams("graph needs at least one node".into()));
        }
        let mut succ = vec![BTreeSet::new(); n];
        let mut pred = vec![BTreeSet::new(); n];
        for &(u, v) in edges {
            if u >= n {
                return Err(Error::IndexOutOfRange { index: u, n });
            }
            if v >= n {
                return Err(Error::IndexOutOfRange { index: v, n });
            }
            if u == v {
                return Err(Error::InvalidParams(format!("self-loop at node {u}")));
            }
            succ[u].insert(v);
            pred[v].insert(u);
            if !directed {
                succ[v].insert(u);
                pred[u].insert(v);
            }
        }
        Ok(DependencyGraph { n, directed, succ, pred })
    }

    /// Path graph `0 - 1 - ... - (n-1)`, the structure of chain-shaped data.
    pub fn path(n: usize) -> Result<Self> {
        let edges: Vec<(usize, usize)> = (1..n).map(|i| (i - 1, i)).collect();
        DependencyGraph::new(n, &edges, false)
    }

    /// Number of nodes.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Whether edges carry direction.
    pub fn is_directed(&self) -> bool {
        self.directed
    }

    /// Out-neighbors (directed) or neighbors (undirected).
    pub fn successors(&self, i: usize) -> &BTreeSet<usize> {
        &self.succ[i]
    }

    /// In-neighbors (directed) or neighbors (undirected).
    pub fn predecessors(&self, i: usize) -> &BTreeSet<usize> {
        &self.pred[i]
    }

    /// Edge list in ascending order, deduplicated. Undirected edges are
    /// reported once with the smaller endpoint first.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for u in 0..self.n {
            for &v in &self.succ[u] {
                if self.directed || u < v {
                    out.push((u, v));
                }
            }
        }
        out
    }

    fn check_node(&self, i: usize) -> Result<()> {
        if i >= self.n {
            return Err(Error::IndexOutOfRange { index: i, n: self.n });
        }
        Ok(())
    }

    /// True when the directed graph has a topological order.
    pub fn is_acyclic(&self) -> bool {
        let mut indeg: Vec<usize> = (0..self.n).map(|v| self.pred[v].len()).collect();
        let mut queue: Vec<usize> = (0..self.n).filter(|&v| indeg[v] == 0).collect();
        let mut seen = 0;
        while let Some(v) = queue.pop() {
            seen += 1;
            for &w in &self.succ[v] {
                indeg[w] -= 1;
                if indeg[w] == 0 {
                    queue.push(w);
                }
            }
        }
        seen == self.n
    }

    /// Moral graph: drops edge directions and marries parents that share a
    /// child. Undirected input is returned as-is, so the operation is
    /// idempotent.
    ///
    /// Errors with `CyclicGraph` when a directed input has a cycle.
    pub fn moralize(&self) -> Result<DependencyGraph> {
        if !self.directed {
            return Ok(self.clone());
        }
        if !self.is_acyclic() {
            return Err(Error::CyclicGraph);
        }
        let mut edges: Vec<(usize, usize)> = self.edges();
        for child in 0..self.n {
            let parents: Vec<usize> = self.pred[child].iter().copied().collect();
            for a in 0..parents.len() {
                for b in (a + 1)..parents.len() {
                    edges.push((parents[a], parents[b]));
                }
            }
        }
        DependencyGraph::new(self.n, &edges, false)
    }

    /// Markov blanket of node `i`: neighbors in an undirected graph; parents,
    /// children, and co-parents in a directed one.
    pub fn markov_blanket(&self, i: usize) -> Result<BTreeSet<usize>> {
        self.check_node(i)?;
        if !self.directed {
            return Ok(self.succ[i].clone());
        }
        let mut blanket: BTreeSet<usize> = self.pred[i].iter().copied().collect();
        for &child in &self.succ[i] {
            blanket.insert(child);
            for &coparent in &self.pred[child] {
                if coparent != i {
                    blanket.insert(coparent);
                }
            }
        }
        Ok(blanket)
    }

    /// Nodes reachable from `i` in the undirected view while never entering
    /// `blocked`. `i` itself is included.
    fn reachable_avoiding(&self, i: usize, blocked: &BTreeSet<usize>) -> BTreeSet<usize> {
        let mut seen = BTreeSet::new();
        let mut stack = vec![i];
        seen.insert(i);
        while let Some(v) = stack.pop() {
            for &w in self.succ[v].iter().chain(self.pred[v].iter()) {
                if !seen.contains(&w) && !blocked.contains(&w) {
                    seen.insert(w);
                    stack.push(w);
                }
            }
        }
        seen
    }
}

/// A partition of all other nodes around a target: a separating set (the
/// quilt), the nearby nodes it fails to shield, and the remote rest.
///
/// Nodes in no set would break the partition, so construction is checked.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuiltPartition {
    /// The shielded node.
    pub target: usize,
    /// Separating set between `target` and `remote` in the moral graph.
    pub quilt: BTreeSet<usize>,
    /// Nodes whose dependence on `target` is not shielded.
    pub nearby: BTreeSet<usize>,
    /// Nodes conditionally independent of `target` given the quilt.
    pub remote: BTreeSet<usize>,
}

impl QuiltPartition {
    fn assemble(
        n: usize,
        target: usize,
        quilt: BTreeSet<usize>,
        nearby: BTreeSet<usize>,
    ) -> QuiltPartition {
        let remote = (0..n)
            .filter(|v| *v != target && !quilt.contains(v) && !nearby.contains(v))
            .collect();
        QuiltPartition { target, quilt, nearby, remote }
    }
}

/// Checks a claimed quilt against the moral graph: `quilt` must block every
/// path from `target` into the complement of `quilt ∪ nearby ∪ {target}`.
///
/// Nodes in components disconnected from `target` are remote; an empty quilt
/// is valid exactly when `nearby` absorbs the whole component of `target`.
pub fn validate_quilt(
    graph: &DependencyGraph,
    target: usize,
    quilt: &BTreeSet<usize>,
    nearby: &BTreeSet<usize>,
) -> Result<QuiltPartition> {
    if target >= graph.n() {
        return Err(Error::IndexOutOfRange { index: target, n: graph.n() });
    }
    for &v in quilt.iter().chain(nearby.iter()) {
        if v >= graph.n() {
            return Err(Error::IndexOutOfRange { index: v, n: graph.n() });
        }
        if v == target {
            return Err(Error::InvalidParams(format!("target {target} cannot sit in its own quilt")));
        }
    }
    if quilt.intersection(nearby).next().is_some() {
        return Err(Error::InvalidParams("quilt and nearby sets overlap".into()));
    }
    let moral = graph.moralize()?;
    let partition = QuiltPartition::assemble(graph.n(), target, quilt.clone(), nearby.clone());
    let reached = moral.reachable_avoiding(target, &partition.quilt);
    if let Some(&r) = reached.intersection(&partition.remote).next() {
        return Err(Error::NotASeparator { target, reached: r });
    }
    Ok(partition)
}

/// Quilt family of a chain node: cut the line at one node on each side.
///
/// For target `i` the quilt is `{i-a, i+b} ∩ {0..n-1}` with `a, b >= 1`;
/// indices falling off either end are dropped, which shrinks the quilt and
/// grows the nearby set. The Markov blanket appears as the `a = b = 1` member.
/// Duplicate partitions collapse; order is deterministic.
pub fn enumerate_chain_quilts(n: usize, target: usize) -> Result<Vec<QuiltPartition>> {
    if target >= n {
        return Err(Error::IndexOutOfRange { index: target, n });
    }
    let mut out: Vec<QuiltPartition> = Vec::new();
    for a in 1..=(target + 1) {
        for b in 1..=(n - target) {
            let mut quilt = BTreeSet::new();
            let mut nearby = BTreeSet::new();
            let left_start = if a <= target { target - a + 1 } else { 0 };
            if a <= target {
                quilt.insert(target - a);
            }
            for v in left_start..target {
                nearby.insert(v);
            }
            if target + b <= n - 1 {
                quilt.insert(target + b);
            }
            for v in (target + 1)..(target + b).min(n) {
                nearby.insert(v);
            }
            let p = QuiltPartition::assemble(n, target, quilt, nearby);
            if !out.contains(&p) {
                out.push(p);
            }
        }
    }
    Ok(out)
}

/// All quilts of `target` with separating sets up to `max_quilt` nodes, in a
/// general graph.
///
/// For each candidate set `Q` the nearby set is the component of `target` in
/// the moral graph with `Q` removed, which is the smallest valid choice.
/// Enumeration order is deterministic (subset size, then lexicographic).
pub fn enumerate_graph_quilts(
    graph: &DependencyGraph,
    target: usize,
    max_quilt: usize,
) -> Result<Vec<QuiltPartition>> {
    if target >= graph.n() {
        return Err(Error::IndexOutOfRange { index: target, n: graph.n() });
    }
    let moral = graph.moralize()?;
    let n = graph.n();
    let others: Vec<usize> = (0..n).filter(|&v| v != target).collect();
    let cap: usize = 1 << 20;
    let mut count: u128 = 0;
    for size in 0..=max_quilt.min(others.len()) {
        count += binomial(others.len(), size);
        if count > cap as u128 {
            return Err(Error::CapExceeded { needed: count, cap: cap as u128 });
        }
    }

    let mut out = Vec::new();
    for size in 0..=max_quilt.min(others.len()) {
        let mut picks = vec![0usize; size];
        enumerate_combinations(&others, size, &mut picks, 0, 0, &mut |combo| {
            let quilt: BTreeSet<usize> = combo.iter().copied().collect();
            let reached = moral.reachable_avoiding(target, &quilt);
            let nearby: BTreeSet<usize> =
                reached.iter().copied().filter(|&v| v != target).collect();
            out.push(QuiltPartition::assemble(n, target, quilt, nearby));
        });
    }
    Ok(out)
}

fn binomial(n: usize, k: usize) -> u128 {
    let mut acc: u128 = 1;
    for j in 0..k {
        acc = acc.saturating_mul((n - j) as u128) / (j + 1) as u128;
    }
    acc
}

fn enumerate_combinations(
    pool: &[usize],
    size: usize,
    picks: &mut Vec<usize>,
    depth: usize,
    start: usize,
    visit: &mut impl FnMut(&[usize]),
) {
    if depth == size {
        visit(picks);
        return;
    }
    for pos in start..pool.len() {
        picks[depth] = pool[pos];
        enumerate_combinations(pool, size, picks, depth + 1, pos + 1, visit);
    }
}
