//! Ontology graph: parsing of AudioSet-style ontology JSON, structural
//! validation, and the single-parent propagation chains used by HLP.
//!
//! The ontology file is an array of objects:
//!
//! ```json
//! [{"id": "/m/0jbk", "name": "Animal", "child_ids": ["/m/068hy"], "restrictions": []}]
//! ```
//!
//! Only `id`, `name`, `child_ids` and `restrictions` are read. A node is
//! abstract when `restrictions` contains `"abstract"` and blacklisted when it
//! contains `"blacklist"`.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap};

use log::warn;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::labelset::ClassVocabulary;

#[derive(Debug, Error, PartialEq)]
pub enum OntologyError {
    #[error("malformed ontology JSON: {0}")]
    MalformedJson(String),

    #[error("ontology node with empty id at position {0}")]
    EmptyMid(usize),

    #[error("duplicate ontology id '{0}'")]
    DuplicateMid(String),

    #[error("node '{parent}' lists unknown child '{child}'")]
    UnknownChild { parent: String, child: String },

    #[error("ontology contains a cycle: {}", .0.join(" -> "))]
    CycleDetected(Vec<String>),

    #[error("vocabulary class '{0}' is not in the ontology")]
    UnknownVocabMid(String),
}

/// One class of the ontology.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OntologyNode {
    pub mid: String,
    pub display_name: String,
    /// Children in file order, duplicates removed.
    pub child_mids: Vec<String>,
    pub is_abstract: bool,
    pub is_blacklisted: bool,
}

#[derive(Deserialize)]
struct RawNode {
    id: String,
    #[serde(default)]
    name: String,
    #[serde(default)]
    child_ids: Vec<String>,
    #[serde(default)]
    restrictions: Vec<String>,
}

#[derive(Serialize)]
struct RawNodeOut<'a> {
    id: &'a str,
    name: &'a str,
    child_ids: &'a [String],
    restrictions: Vec<&'static str>,
}

/// Validated, immutable ontology DAG.
///
/// Nodes are addressed by dense indices in file order. Parent lists are the
/// exact inverse of the child lists.
#[derive(Debug, Clone, PartialEq)]
pub struct OntologyGraph {
    nodes: Vec<OntologyNode>,
    index: HashMap<String, usize>,
    children: Vec<Vec<usize>>,
    parents: Vec<Vec<usize>>,
    child_first: Vec<usize>,
}

impl OntologyGraph {
    /// Parses ontology JSON bytes.
    pub fn parse(raw: &[u8]) -> Result<Self, OntologyError> {
        let raw_nodes: Vec<RawNode> =
            serde_json::from_slice(raw).map_err(|e| OntologyError::MalformedJson(e.to_string()))?;
        let nodes = raw_nodes
            .into_iter()
            .map(|r| OntologyNode {
                is_abstract: r.restrictions.iter().any(|s| s == "abstract"),
                is_blacklisted: r.restrictions.iter().any(|s| s == "blacklist"),
                mid: r.id,
                display_name: r.name,
                child_mids: r.child_ids,
            })
            .collect();
        Self::from_nodes(nodes)
    }

    /// Builds a graph from nodes, validating ids, child references and
    /// acyclicity. Repeated child entries are collapsed.
    pub fn from_nodes(mut nodes: Vec<OntologyNode>) -> Result<Self, OntologyError> {
        let mut index = HashMap::with_capacity(nodes.len());
        for (i, node) in nodes.iter().enumerate() {
            if node.mid.is_empty() {
                return Err(OntologyError::EmptyMid(i));
            }
            if index.insert(node.mid.clone(), i).is_some() {
                return Err(OntologyError::DuplicateMid(node.mid.clone()));
            }
        }

        let n = nodes.len();
        let mut children = vec![Vec::new(); n];
        let mut parents = vec![Vec::new(); n];
        for (p, node) in nodes.iter_mut().enumerate() {
            let mut kept = Vec::with_capacity(node.child_mids.len());
            for child in &node.child_mids {
                let c = *index.get(child).ok_or_else(|| OntologyError::UnknownChild {
                    parent: node.mid.clone(),
                    child: child.clone(),
                })?;
                if children[p].contains(&c) {
                    warn!(
                        "ontology node '{}' lists child '{}' more than once",
                        node.mid, child
                    );
                    continue;
                }
                children[p].push(c);
                parents[c].push(p);
                kept.push(child.clone());
            }
            node.child_mids = kept;
        }

        let child_first = child_first_order(&nodes, &children, &parents)?;
        Ok(Self {
            nodes,
            index,
            children,
            parents,
            child_first,
        })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[OntologyNode] {
        &self.nodes
    }

    pub fn node(&self, idx: usize) -> &OntologyNode {
        &self.nodes[idx]
    }

    pub fn index_of(&self, mid: &str) -> Option<usize> {
        self.index.get(mid).copied()
    }

    pub fn children(&self, idx: usize) -> &[usize] {
        &self.children[idx]
    }

    pub fn parents(&self, idx: usize) -> &[usize] {
        &self.parents[idx]
    }

    /// The unique parent of `idx`, or `None` for roots and multi-parent nodes.
    pub fn single_parent(&self, idx: usize) -> Option<usize> {
        match self.parents[idx].as_slice() {
            [p] => Some(*p),
            _ => None,
        }
    }

    /// Every node exactly once, each after all of its descendants. Ties are
    /// broken by ascending mid bytes.
    pub fn child_first_order(&self) -> &[usize] {
        &self.child_first
    }

    /// Serializes back to ontology JSON (fields `id`, `name`, `child_ids`,
    /// `restrictions`).
    pub fn to_json(&self) -> String {
        let out: Vec<RawNodeOut<'_>> = self
            .nodes
            .iter()
            .map(|n| {
                let mut restrictions = Vec::new();
                if n.is_abstract {
                    restrictions.push("abstract");
                }
                if n.is_blacklisted {
                    restrictions.push("blacklist");
                }
                RawNodeOut {
                    id: &n.mid,
                    name: &n.display_name,
                    child_ids: &n.child_mids,
                    restrictions,
                }
            })
            .collect();
        let mut s = serde_json::to_string_pretty(&out).expect("ontology serialization");
        s.push('\n');
        s
    }

    /// Structural summary of the graph.
    pub fn validate(&self) -> ValidationReport {
        let n = self.nodes.len();
        // Longest root-to-node path, in edges. Parents precede children when
        // walking child_first in reverse.
        let mut depth = vec![0usize; n];
        for &v in self.child_first.iter().rev() {
            for &c in &self.children[v] {
                depth[c] = depth[c].max(depth[v] + 1);
            }
        }
        ValidationReport {
            node_count: n,
            edge_count: self.children.iter().map(Vec::len).sum(),
            root_count: self.parents.iter().filter(|p| p.is_empty()).count(),
            abstract_count: self.nodes.iter().filter(|n| n.is_abstract).count(),
            blacklisted_count: self.nodes.iter().filter(|n| n.is_blacklisted).count(),
            multi_parent_count: self.parents.iter().filter(|p| p.len() > 1).count(),
            max_depth: depth.into_iter().max().unwrap_or(0),
            blacklisted: self
                .nodes
                .iter()
                .filter(|n| n.is_blacklisted)
                .map(|n| n.mid.clone())
                .collect(),
        }
    }
}

/// Kahn's algorithm over reversed edges: a node becomes ready once all of its
/// children are emitted. The ready set is a min-heap on mid.
fn child_first_order(
    nodes: &[OntologyNode],
    children: &[Vec<usize>],
    parents: &[Vec<usize>],
) -> Result<Vec<usize>, OntologyError> {
    let n = nodes.len();
    let mut pending: Vec<usize> = children.iter().map(Vec::len).collect();
    let mut ready: BinaryHeap<Reverse<(&[u8], usize)>> = (0..n)
        .filter(|&i| pending[i] == 0)
        .map(|i| Reverse((nodes[i].mid.as_bytes(), i)))
        .collect();
    let mut order = Vec::with_capacity(n);
    while let Some(Reverse((_, v))) = ready.pop() {
        order.push(v);
        for &p in &parents[v] {
            pending[p] -= 1;
            if pending[p] == 0 {
                ready.push(Reverse((nodes[p].mid.as_bytes(), p)));
            }
        }
    }
    if order.len() == n {
        return Ok(order);
    }

    // Every node left with pending > 0 has a child that is also left, so
    // following unfinished children from any of them must close a cycle.
    let start = (0..n).find(|&i| pending[i] > 0).expect("unfinished node");
    let mut pos = vec![usize::MAX; n];
    let mut path = Vec::new();
    let mut v = start;
    loop {
        if pos[v] != usize::MAX {
            let cycle = path[pos[v]..]
                .iter()
                .chain(std::iter::once(&v))
                .map(|&i: &usize| nodes[i].mid.clone())
                .collect();
            return Err(OntologyError::CycleDetected(cycle));
        }
        pos[v] = path.len();
        path.push(v);
        v = *children[v]
            .iter()
            .find(|&&c| pending[c] > 0)
            .expect("unfinished node has an unfinished child");
    }
}

/// Structural counts for an ontology.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub node_count: usize,
    pub edge_count: usize,
    pub root_count: usize,
    pub abstract_count: usize,
    pub blacklisted_count: usize,
    pub multi_parent_count: usize,
    pub max_depth: usize,
    pub blacklisted: Vec<String>,
}

impl ValidationReport {
    pub fn to_text(&self) -> String {
        let mut s = format!(
            "Nodes: {}\nEdges: {}\nRoots: {}\nAbstract: {}\nBlacklisted: {}\nMulti-parent nodes: {}\nMax depth: {}\n",
            self.node_count,
            self.edge_count,
            self.root_count,
            self.abstract_count,
            self.blacklisted_count,
            self.multi_parent_count,
            self.max_depth,
        );
        for mid in &self.blacklisted {
            s.push_str(&format!("  blacklisted: {mid}\n"));
        }
        s
    }
}

/// Which nodes may appear inside a propagation chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum TraversalPolicy {
    /// Chains walk the whole ontology; consumers drop members outside their
    /// output vocabulary when emitting.
    #[default]
    ThroughAllNodes,
    /// A node outside the labelable vocabulary ends the chain and is not
    /// itself part of it.
    LabelableOnly,
}

impl std::str::FromStr for TraversalPolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "through-all" | "through-all-nodes" => Ok(Self::ThroughAllNodes),
            "labelable-only" => Ok(Self::LabelableOnly),
            other => Err(format!(
                "unknown traversal policy '{other}' (expected through-all or labelable-only)"
            )),
        }
    }
}

/// Per-node ancestor chains along single-parent links.
///
/// `chain(c)` is empty unless `c` has exactly one parent `p`, in which case it
/// is `[p]` followed by `chain(p)`.
#[derive(Debug, Clone)]
pub struct PropagationMap<'g> {
    graph: &'g OntologyGraph,
    chains: Vec<Vec<usize>>,
    policy: TraversalPolicy,
}

impl<'g> PropagationMap<'g> {
    /// Builds the chains. `vocab` restricts traversal under
    /// [`TraversalPolicy::LabelableOnly`] and is required there; under
    /// [`TraversalPolicy::ThroughAllNodes`] it is only checked against the graph.
    pub fn build(
        graph: &'g OntologyGraph,
        policy: TraversalPolicy,
        vocab: Option<&ClassVocabulary>,
    ) -> Result<Self, OntologyError> {
        let mut labelable = vec![policy == TraversalPolicy::ThroughAllNodes; graph.len()];
        if let Some(vocab) = vocab {
            for entry in vocab.entries() {
                let idx = graph
                    .index_of(&entry.mid)
                    .ok_or_else(|| OntologyError::UnknownVocabMid(entry.mid.clone()))?;
                labelable[idx] = true;
            }
        }

        let mut chains: Vec<Vec<usize>> = vec![Vec::new(); graph.len()];
        // Parents before children.
        for &c in graph.child_first_order().iter().rev() {
            if let Some(p) = graph.single_parent(c) {
                if labelable[p] {
                    let mut chain = Vec::with_capacity(chains[p].len() + 1);
                    chain.push(p);
                    chain.extend_from_slice(&chains[p]);
                    chains[c] = chain;
                }
            }
        }
        Ok(Self {
            graph,
            chains,
            policy,
        })
    }

    pub fn graph(&self) -> &'g OntologyGraph {
        self.graph
    }

    pub fn policy(&self) -> TraversalPolicy {
        self.policy
    }

    /// Ancestor node indices reached from `idx`, nearest first.
    pub fn chain(&self, idx: usize) -> &[usize] {
        &self.chains[idx]
    }

    /// Chain of `mid` as mids.
    pub fn chain_mids(&self, mid: &str) -> Option<Vec<&'g str>> {
        let idx = self.graph.index_of(mid)?;
        Some(
            self.chains[idx]
                .iter()
                .map(|&i| self.graph.node(i).mid.as_str())
                .collect(),
        )
    }
}
