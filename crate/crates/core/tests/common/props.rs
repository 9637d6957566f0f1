//! Algebraic properties of label and score propagation over random
//! synthetic ontologies, runnable from both the test harness and the
//! acceptance runner.

use hlp::labelset::{LabelMatrix, ScoreMatrix};
use hlp::ontology::{OntologyGraph, PropagationMap, TraversalPolicy};
use hlp::propagate::{propagate_labels, propagate_scores_threaded};
use hlp::synth::{self, SynthConfig};
use proptest::prelude::*;
use proptest::test_runner::{Config, TestCaseError, TestRunner};

pub const CASES: u32 = 500;

pub fn config() -> impl Strategy<Value = SynthConfig> {
    (
        any::<u64>(),
        1usize..80,
        1usize..5,
        prop::sample::select(vec![0.0, 0.2, 0.5, 0.9]),
        1usize..25,
        0.5f64..6.0,
        prop::sample::select(vec![0.0, 0.2]),
    )
        .prop_map(
            |(seed, n_nodes, max_children, multi_parent_prob, n_clips, label_density, abstract_prob)| {
                SynthConfig {
                    seed,
                    n_nodes,
                    max_children,
                    multi_parent_prob,
                    n_clips,
                    label_density,
                    abstract_prob,
                }
            },
        )
}

pub fn policy() -> impl Strategy<Value = TraversalPolicy> {
    prop::sample::select(vec![
        TraversalPolicy::ThroughAllNodes,
        TraversalPolicy::LabelableOnly,
    ])
}

fn propagate(graph: &OntologyGraph, labels: &LabelMatrix, policy: TraversalPolicy) -> LabelMatrix {
    let pmap = PropagationMap::build(graph, policy, Some(labels.vocab())).unwrap();
    propagate_labels(labels, &pmap, labels.vocab()).unwrap()
}

fn propagate_s(graph: &OntologyGraph, scores: &ScoreMatrix, policy: TraversalPolicy) -> ScoreMatrix {
    propagate_scores_threaded(scores, graph, policy, scores.vocab(), 1).unwrap()
}

fn is_subset(a: &[u32], b: &[u32]) -> bool {
    a.iter().all(|x| b.binary_search(x).is_ok())
}

type Outcome = Result<(), TestCaseError>;

pub fn labels_only_grow((cfg, policy): (SynthConfig, TraversalPolicy)) -> Outcome {
    let graph = synth::gen_ontology(&cfg);
    let labels = synth::gen_labels(&cfg, &graph);
    let out = propagate(&graph, &labels, policy);
    prop_assert_eq!(out.clip_ids(), labels.clip_ids());
    for (before, after) in labels.rows().zip(out.rows()) {
        prop_assert!(is_subset(before, after));
    }
    Ok(())
}

pub fn label_idempotence((cfg, policy): (SynthConfig, TraversalPolicy)) -> Outcome {
    let graph = synth::gen_ontology(&cfg);
    let labels = synth::gen_labels(&cfg, &graph);
    let once = propagate(&graph, &labels, policy);
    let twice = propagate(&graph, &once, policy);
    prop_assert_eq!(once, twice);
    Ok(())
}

pub fn label_monotonicity((cfg, policy, keep): (SynthConfig, TraversalPolicy, Vec<bool>)) -> Outcome {
    let graph = synth::gen_ontology(&cfg);
    let big = synth::gen_labels(&cfg, &graph);
    let mut k = 0;
    let small_rows = big
        .rows()
        .map(|row| {
            row.iter()
                .copied()
                .filter(|_| {
                    k += 1;
                    keep[k % keep.len()]
                })
                .collect()
        })
        .collect();
    let small =
        LabelMatrix::from_rows(big.clip_ids().to_vec(), big.vocab().clone(), small_rows, None).unwrap();
    let p_small = propagate(&graph, &small, policy);
    let p_big = propagate(&graph, &big, policy);
    for (a, b) in p_small.rows().zip(p_big.rows()) {
        prop_assert!(is_subset(a, b));
    }
    Ok(())
}

pub fn score_idempotence((cfg, policy): (SynthConfig, TraversalPolicy)) -> Outcome {
    let graph = synth::gen_ontology(&cfg);
    let scores = synth::gen_scores(&cfg, &graph);
    let once = propagate_s(&graph, &scores, policy);
    let twice = propagate_s(&graph, &once, policy);
    prop_assert_eq!(once, twice);
    Ok(())
}

pub fn parent_dominance((cfg, policy): (SynthConfig, TraversalPolicy)) -> Outcome {
    let graph = synth::gen_ontology(&cfg);
    let scores = synth::gen_scores(&cfg, &graph);
    let out = propagate_s(&graph, &scores, policy);
    let vocab = out.vocab();
    for e in vocab.entries() {
        let node = graph.index_of(&e.mid).unwrap();
        let Some(parent) = graph.single_parent(node) else {
            continue;
        };
        let Some(p) = vocab.index_of(&graph.node(parent).mid) else {
            continue;
        };
        for i in 0..out.n_clips() {
            prop_assert!(out.get(i, p) >= out.get(i, e.index));
        }
    }
    Ok(())
}

pub fn scores_never_decrease((cfg, policy): (SynthConfig, TraversalPolicy)) -> Outcome {
    let graph = synth::gen_ontology(&cfg);
    let scores = synth::gen_scores(&cfg, &graph);
    let out = propagate_s(&graph, &scores, policy);
    for (after, before) in out.values().iter().zip(scores.values()) {
        prop_assert!(after >= before);
    }
    Ok(())
}

pub fn commutes_with_increasing_maps(
    (cfg, policy, which, scale, shift): (SynthConfig, TraversalPolicy, usize, f32, f32),
) -> Outcome {
    let graph = synth::gen_ontology(&cfg);
    // Spread scores out to logit-like values first.
    let scores = synth::gen_scores(&cfg, &graph)
        .map_values(|v| 8.0 * v - 4.0)
        .unwrap();
    let g = move |v: f32| -> f32 {
        match which {
            0 => scale * v + shift,
            1 => (1.0 / (1.0 + (-(v as f64)).exp())) as f32,
            _ => (v as f64).atan() as f32,
        }
    };
    let mapped_first = propagate_s(&graph, &scores.map_values(g).unwrap(), policy);
    let mapped_after = propagate_s(&graph, &scores, policy).map_values(g).unwrap();
    prop_assert_eq!(mapped_first, mapped_after);
    Ok(())
}

fn runner(cases: u32) -> TestRunner {
    TestRunner::new(Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    })
}

/// Runs one named property for `cases` cases.
pub fn run(name: &str, cases: u32) -> Result<(), String> {
    let mut r = runner(cases);
    let result: Result<(), String> = match name {
        "labels_only_grow" => r
            .run(&(config(), policy()), labels_only_grow)
            .map_err(|e| e.to_string()),
        "label_idempotence" => r
            .run(&(config(), policy()), label_idempotence)
            .map_err(|e| e.to_string()),
        "label_monotonicity" => r
            .run(
                &(config(), policy(), prop::collection::vec(any::<bool>(), 64)),
                label_monotonicity,
            )
            .map_err(|e| e.to_string()),
        "score_idempotence" => r
            .run(&(config(), policy()), score_idempotence)
            .map_err(|e| e.to_string()),
        "parent_dominance" => r
            .run(&(config(), policy()), parent_dominance)
            .map_err(|e| e.to_string()),
        "scores_never_decrease" => r
            .run(&(config(), policy()), scores_never_decrease)
            .map_err(|e| e.to_string()),
        "commutes_with_increasing_maps" => r
            .run(
                &(config(), policy(), 0usize..3, 0.1f32..10.0, -5.0f32..5.0),
                commutes_with_increasing_maps,
            )
            .map_err(|e| e.to_string()),
        other => return Err(format!("unknown property {other}")),
    };
    result.map_err(|e| format!("{name}: {e}"))
}

pub const ALL: [&str; 7] = [
    "labels_only_grow",
    "label_idempotence",
    "label_monotonicity",
    "score_idempotence",
    "parent_dominance",
    "scores_never_decrease",
    "commutes_with_increasing_maps",
];
