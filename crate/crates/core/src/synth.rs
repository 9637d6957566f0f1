//! Seeded synthetic ontologies, label/score matrices, and a naive reference
//! implementation of label propagation.
//!
//! # Random stream
//!
//! All generators draw from xoshiro256++ whose 256-bit state is filled from
//! the 64-bit seed by SplitMix64 (the reference `seed_from_u64` expansion).
//! Each generator uses its own stream:
//!
//! | generator | stream seed |
//! |-----------|-------------|
//! | ontology  | `seed` |
//! | labels    | `seed ^ 0x4c41_4245_4c53` |
//! | scores    | `seed ^ 0x5343_4f52_4553` |
//!
//! Values are derived from raw 64-bit outputs `x`:
//!
//! * uniform f64 in `[0, 1)`: `(x >> 11) * 2^-53`
//! * uniform f32 in `[0, 1)`: `(x >> 40) * 2^-24`
//! * integer in `[0, n)`: `(x * n) >> 64` using 128-bit multiplication
//!
//! Test vectors (seed 0, first three raw outputs):
//! `0x53175d61490b23df`, `0x61da6f3dc380d507`, `0x5c0fdf91ec9a7bfc`.

use std::collections::{BTreeSet, HashMap};

use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::labelset::{ClassVocabulary, LabelMatrix, ScoreMatrix};
use crate::ontology::{OntologyGraph, OntologyNode, TraversalPolicy};

const LABEL_STREAM: u64 = 0x4c41_4245_4c53;
const SCORE_STREAM: u64 = 0x5343_4f52_4553;

#[derive(Debug, Error, PartialEq)]
pub enum SynthError {
    #[error("invalid synthetic config: {0}")]
    InvalidConfig(String),
}

/// Deterministic random stream used by every generator.
pub struct SynthRng(Xoshiro256PlusPlus);

impl SynthRng {
    pub fn new(seed: u64) -> Self {
        Self(Xoshiro256PlusPlus::seed_from_u64(seed))
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }

    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn uniform_f32(&mut self) -> f32 {
        (self.next_u64() >> 40) as f32 * (1.0 / (1u32 << 24) as f32)
    }

    pub fn below(&mut self, n: usize) -> usize {
        ((self.next_u64() as u128 * n as u128) >> 64) as usize
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub seed: u64,
    pub n_nodes: usize,
    pub max_children: usize,
    pub multi_parent_prob: f64,
    pub n_clips: usize,
    /// Expected positives per clip.
    pub label_density: f64,
    /// Chance that a node is marked abstract, i.e. left out of the label
    /// vocabulary.
    pub abstract_prob: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            n_nodes: 50,
            max_children: 4,
            multi_parent_prob: 0.2,
            n_clips: 100,
            label_density: 2.0,
            abstract_prob: 0.0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: &str| Err(SynthError::InvalidConfig(m.to_string()));
        if self.n_nodes == 0 || self.max_children == 0 || self.n_clips == 0 {
            return bad("n_nodes, max_children and n_clips must be at least 1");
        }
        for (name, p) in [
            ("multi_parent_prob", self.multi_parent_prob),
            ("abstract_prob", self.abstract_prob),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(SynthError::InvalidConfig(format!("{name} must be in [0, 1]")));
            }
        }
        if !(self.label_density >= 0.0 && self.label_density.is_finite()) {
            return bad("label_density must be a non-negative finite number");
        }
        Ok(())
    }
}

fn synth_mid(i: usize) -> String {
    format!("/synth/{i:05}")
}

/// Random DAG. Node `i` picks one parent uniformly among earlier nodes that
/// still have room under `max_children` and, with `multi_parent_prob`, a
/// second distinct one. Node 0 and nodes with no eligible parent are roots.
///
/// Draw order per node: parent index (if any eligible), second-parent coin
/// and index (if at least two eligible), then the abstract coin.
pub fn gen_ontology(cfg: &SynthConfig) -> OntologyGraph {
    let mut rng = SynthRng::new(cfg.seed);
    let mut nodes: Vec<OntologyNode> = Vec::with_capacity(cfg.n_nodes);
    for i in 0..cfg.n_nodes {
        let eligible: Vec<usize> = (0..i)
            .filter(|&j| nodes[j].child_mids.len() < cfg.max_children)
            .collect();
        let mid = synth_mid(i);
        if !eligible.is_empty() {
            let k = rng.below(eligible.len());
            nodes[eligible[k]].child_mids.push(mid.clone());
            if eligible.len() >= 2 && rng.uniform() < cfg.multi_parent_prob {
                let mut k2 = rng.below(eligible.len() - 1);
                if k2 >= k {
                    k2 += 1;
                }
                nodes[eligible[k2]].child_mids.push(mid.clone());
            }
        }
        let is_abstract = rng.uniform() < cfg.abstract_prob;
        nodes.push(OntologyNode {
            display_name: format!("Class {i}"),
            mid,
            child_mids: Vec::new(),
            is_abstract,
            is_blacklisted: false,
        });
    }
    OntologyGraph::from_nodes(nodes).expect("generated graphs are acyclic")
}

/// Non-abstract nodes in graph order.
pub fn labelable_vocab(graph: &OntologyGraph) -> ClassVocabulary {
    ClassVocabulary::new(
        graph
            .nodes()
            .iter()
            .filter(|n| !n.is_abstract)
            .map(|n| (n.mid.clone(), n.display_name.clone())),
    )
    .expect("ontology mids are unique")
}

fn clip_ids(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("synth{i:08}")).collect()
}

/// Bernoulli labels over [`labelable_vocab`], one draw per (clip, class) in
/// row-major order at rate `label_density / classes` (capped at 1).
pub fn gen_labels(cfg: &SynthConfig, graph: &OntologyGraph) -> LabelMatrix {
    let vocab = labelable_vocab(graph);
    let width = vocab.len();
    let rate = if width == 0 {
        0.0
    } else {
        (cfg.label_density / width as f64).min(1.0)
    };
    let mut rng = SynthRng::new(cfg.seed ^ LABEL_STREAM);
    let rows = (0..cfg.n_clips)
        .map(|_| {
            (0..width as u32)
                .filter(|_| rng.uniform() < rate)
                .collect::<Vec<u32>>()
        })
        .collect();
    LabelMatrix::from_rows(clip_ids(cfg.n_clips), vocab, rows, None).expect("in-range labels")
}

/// Uniform `[0, 1)` scores over [`labelable_vocab`], row-major.
pub fn gen_scores(cfg: &SynthConfig, graph: &OntologyGraph) -> ScoreMatrix {
    let vocab = labelable_vocab(graph);
    let mut rng = SynthRng::new(cfg.seed ^ SCORE_STREAM);
    let values = (0..cfg.n_clips * vocab.len())
        .map(|_| rng.uniform_f32())
        .collect();
    ScoreMatrix::new(clip_ids(cfg.n_clips), vocab, values).expect("finite scores")
}

/// Reference propagation through all nodes.
pub fn oracle_propagate(labels: &LabelMatrix, graph: &OntologyGraph) -> LabelMatrix {
    oracle_propagate_with_policy(labels, graph, TraversalPolicy::ThroughAllNodes)
}

/// Reference propagation: for every positive node with exactly one parent,
/// add the parent; repeat until a pass adds nothing. Parents come from
/// inverting the raw child lists, not from the graph's parent index. Under
/// `LabelableOnly`, parents outside the label vocabulary are never added. The
/// result keeps only classes of the label vocabulary.
pub fn oracle_propagate_with_policy(
    labels: &LabelMatrix,
    graph: &OntologyGraph,
    policy: TraversalPolicy,
) -> LabelMatrix {
    let vocab = labels.vocab();
    let mut parents: HashMap<&str, Vec<&str>> = HashMap::new();
    for node in graph.nodes() {
        for child in &node.child_mids {
            parents.entry(child.as_str()).or_default().push(node.mid.as_str());
        }
    }
    let parents_of = |mid: &str| -> &[&str] { parents.get(mid).map_or(&[], Vec::as_slice) };
    let rows = labels
        .rows()
        .map(|row| {
            let mut positive: BTreeSet<&str> = row.iter().map(|&c| vocab.mid(c as usize)).collect();
            loop {
                let mut added = false;
                for mid in positive.clone() {
                    if let [parent] = *parents_of(mid) {
                        let allowed = policy == TraversalPolicy::ThroughAllNodes || vocab.contains(parent);
                        if allowed && positive.insert(parent) {
                            added = true;
                        }
                    }
                }
                if !added {
                    break;
                }
            }
            positive
                .into_iter()
                .filter_map(|m| vocab.index_of(m).map(|i| i as u32))
                .collect()
        })
        .collect();
    LabelMatrix::from_rows(
        labels.clip_ids().to_vec(),
        vocab.clone(),
        rows,
        labels.segment_times().map(<[_]>::to_vec),
    )
    .expect("vocabulary indices")
}
