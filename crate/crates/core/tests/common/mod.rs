//! Fixtures and independent reference computations shared by the
//! integration tests.
#![allow(dead_code)]

pub mod props;

use hlp::labelset::{ClassVocabulary, LabelMatrix, ScoreMatrix};
use hlp::ontology::{OntologyGraph, TraversalPolicy};
use hlp::synth::{self, SynthConfig, SynthRng};

/// Animal > Domestic animals > {Cat, Dog}, with Growling under both Cat and Dog.
pub const PETS_ONTOLOGY: &str = r#"[
  {"id": "/m/0jbk", "name": "Animal", "child_ids": ["/m/068hy"], "restrictions": []},
  {"id": "/m/068hy", "name": "Domestic animals, pets", "child_ids": ["/m/01yrx", "/m/0bt9lr"], "restrictions": []},
  {"id": "/m/01yrx", "name": "Cat", "child_ids": ["/m/0ghcn6"], "restrictions": []},
  {"id": "/m/0bt9lr", "name": "Dog", "child_ids": ["/m/0ghcn6"], "restrictions": []},
  {"id": "/m/0ghcn6", "name": "Growling", "child_ids": [], "restrictions": []}
]"#;

pub const PETS_CLASS_INDEX: &str = "index,mid,display_name
0,/m/0jbk,\"Animal\"
1,/m/068hy,\"Domestic animals, pets\"
2,/m/01yrx,\"Cat\"
3,/m/0bt9lr,\"Dog\"
4,/m/0ghcn6,\"Growling\"
";

pub const ANIMAL: &str = "/m/0jbk";
pub const DOMESTIC: &str = "/m/068hy";
pub const CAT: &str = "/m/01yrx";
pub const DOG: &str = "/m/0bt9lr";
pub const GROWLING: &str = "/m/0ghcn6";

/// One clip whose positives are Domestic animals and Growling.
pub const PETS_SEGMENTS: &str = "# YTID, start_seconds, end_seconds, positive_labels
petsclip000, 0.000, 10.000, \"/m/068hy,/m/0ghcn6\"
";

pub fn pets() -> (OntologyGraph, ClassVocabulary) {
    (
        OntologyGraph::parse(PETS_ONTOLOGY.as_bytes()).unwrap(),
        ClassVocabulary::parse_class_index_csv(PETS_CLASS_INDEX.as_bytes()).unwrap(),
    )
}

/// Applies `s[p] = max(s[p], s[c])` over every single-parent edge in file
/// order, sweeping until nothing changes. Ontology classes missing from the
/// score vocabulary start at −∞; under `LabelableOnly` edges into them are
/// ignored.
pub fn iterate_scores_to_fixed_point(
    scores: &ScoreMatrix,
    graph: &OntologyGraph,
    policy: TraversalPolicy,
) -> ScoreMatrix {
    let vocab = scores.vocab();
    let mut edges = Vec::new();
    for (p, node) in graph.nodes().iter().enumerate() {
        for child in &node.child_mids {
            let c = graph.index_of(child).unwrap();
            let n_parents = graph
                .nodes()
                .iter()
                .filter(|n| n.child_mids.contains(child))
                .count();
            let parent_ok = policy == TraversalPolicy::ThroughAllNodes || vocab.contains(&node.mid);
            if n_parents == 1 && parent_ok {
                edges.push((c, p));
            }
        }
    }
    let mut out = Vec::with_capacity(scores.values().len());
    for i in 0..scores.n_clips() {
        let mut s = vec![f32::NEG_INFINITY; graph.len()];
        for (k, e) in vocab.entries().iter().enumerate() {
            s[graph.index_of(&e.mid).unwrap()] = scores.get(i, k);
        }
        loop {
            let mut changed = false;
            for &(c, p) in &edges {
                if s[c] > s[p] {
                    s[p] = s[c];
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        out.extend(vocab.entries().iter().map(|e| s[graph.index_of(&e.mid).unwrap()]));
    }
    ScoreMatrix::new(scores.clip_ids().to_vec(), vocab.clone(), out).unwrap()
}

/// AP straight from the definition: for every positive item, the fraction
/// of positives among the items ranked at or above it, where `j` ranks at or
/// above `i` when `s[j] > s[i]`, or the scores tie and `j <= i`.
pub fn brute_force_ap(scores: &[f64], labels: &[bool]) -> Option<f64> {
    let n = scores.len();
    let n_pos = labels.iter().filter(|&&l| l).count();
    if n_pos == 0 {
        return None;
    }
    let at_or_above = |j: usize, i: usize| scores[j] > scores[i] || (scores[j] == scores[i] && j <= i);
    let mut total = 0.0;
    for i in (0..n).filter(|&i| labels[i]) {
        let mut ranked = 0usize;
        let mut ranked_pos = 0usize;
        for (j, &pos) in labels.iter().enumerate() {
            if at_or_above(j, i) {
                ranked += 1;
                if pos {
                    ranked_pos += 1;
                }
            }
        }
        total += ranked_pos as f64 / ranked as f64;
    }
    Some(total / n_pos as f64)
}

/// Positive mids of one row.
pub fn row_mids(m: &LabelMatrix, i: usize) -> Vec<String> {
    m.row(i)
        .iter()
        .map(|&c| m.vocab().mid(c as usize).to_string())
        .collect()
}

/// Thresholds a 0/1 score matrix at 0.5 into per-row class lists.
pub fn threshold_rows(s: &ScoreMatrix) -> Vec<Vec<u32>> {
    (0..s.n_clips())
        .map(|i| {
            s.row(i)
                .iter()
                .enumerate()
                .filter(|(_, &v)| v > 0.5)
                .map(|(k, _)| k as u32)
                .collect()
        })
        .collect()
}

/// The `seed`-th random instance of the oracle comparison: up to 200 nodes and
/// 500 clips.
pub fn oracle_instance(seed: u64) -> (SynthConfig, OntologyGraph, LabelMatrix) {
    let mut rng = SynthRng::new(seed ^ 0xfeed);
    let cfg = SynthConfig {
        seed,
        n_nodes: 1 + rng.below(200),
        max_children: 1 + rng.below(6),
        multi_parent_prob: [0.0, 0.2, 0.5][seed as usize % 3],
        n_clips: 1 + rng.below(500),
        label_density: 0.5 + 4.0 * rng.uniform(),
        abstract_prob: [0.0, 0.15][(seed as usize / 3) % 2],
    };
    let graph = synth::gen_ontology(&cfg);
    let labels = synth::gen_labels(&cfg, &graph);
    (cfg, graph, labels)
}
