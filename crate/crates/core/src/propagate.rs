//! Upward propagation of binary labels and of scores.
//!
//! Labels: each positive class also makes every member of its single-parent
//! ancestor chain positive. Scores: for every child `c` with exactly one
//! parent `p`, `s[p] = max(s[p], s[c])`, applied over a child-first order so a
//! single pass reaches the fixed point.
//!
//! Both run row-parallel when given more than one thread. Rows are processed
//! in fixed-size blocks and reassembled in input order, so output does not
//! depend on the thread count.

use std::ops::Range;

use rayon::prelude::*;
use thiserror::Error;

use crate::labelset::{ClassVocabulary, LabelMatrix, ScoreMatrix};
use crate::ontology::{OntologyGraph, PropagationMap, TraversalPolicy};

#[derive(Debug, Error, PartialEq)]
pub enum PropagateError {
    #[error("class '{0}' is not in the ontology")]
    UnknownMid(String),

    #[error("output class '{0}' is not in the score matrix")]
    MissingScoreClass(String),

    #[error("non-finite score for clip '{clip}', class '{class}'")]
    NonFiniteValue { clip: String, class: String },

    #[error("score matrix vocabulary differs from the one the propagator was built for")]
    VocabMismatch,

    #[error("could not start worker pool: {0}")]
    ThreadPool(String),
}

const BLOCK_ROWS: usize = 8192;

/// Runs `f` over consecutive row blocks, returning block results in order.
fn map_blocks<T, F>(n_rows: usize, threads: usize, f: F) -> Result<Vec<T>, PropagateError>
where
    T: Send,
    F: Fn(Range<usize>) -> T + Sync + Send,
{
    let blocks: Vec<Range<usize>> = (0..n_rows)
        .step_by(BLOCK_ROWS)
        .map(|s| s..(s + BLOCK_ROWS).min(n_rows))
        .collect();
    if threads <= 1 {
        return Ok(blocks.into_iter().map(f).collect());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| PropagateError::ThreadPool(e.to_string()))?;
    Ok(pool.install(|| blocks.into_par_iter().map(f).collect()))
}

/// Single-threaded [`propagate_labels_threaded`].
pub fn propagate_labels(
    labels: &LabelMatrix,
    pmap: &PropagationMap<'_>,
    output_vocab: &ClassVocabulary,
) -> Result<LabelMatrix, PropagateError> {
    propagate_labels_threaded(labels, pmap, output_vocab, 1)
}

/// Adds every chain ancestor of every positive label, keeping only classes in
/// `output_vocab`. Input classes outside `output_vocab` are dropped from the
/// output rows. Clip ids and segment times are carried over.
pub fn propagate_labels_threaded(
    labels: &LabelMatrix,
    pmap: &PropagationMap<'_>,
    output_vocab: &ClassVocabulary,
    threads: usize,
) -> Result<LabelMatrix, PropagateError> {
    let graph = pmap.graph();
    // Graph node -> output column.
    let mut out_col = vec![None; graph.len()];
    for e in output_vocab.entries() {
        let node = graph
            .index_of(&e.mid)
            .ok_or_else(|| PropagateError::UnknownMid(e.mid.clone()))?;
        out_col[node] = Some(e.index as u32);
    }

    // Input class -> sorted output classes it implies (itself included).
    let expansions = labels
        .vocab()
        .entries()
        .iter()
        .map(|e| {
            let node = graph
                .index_of(&e.mid)
                .ok_or_else(|| PropagateError::UnknownMid(e.mid.clone()))?;
            let mut cols: Vec<u32> = std::iter::once(node)
                .chain(pmap.chain(node).iter().copied())
                .filter_map(|n| out_col[n])
                .collect();
            cols.sort_unstable();
            cols.dedup();
            Ok(cols)
        })
        .collect::<Result<Vec<_>, PropagateError>>()?;

    let blocks = map_blocks(labels.n_clips(), threads, |rows| {
        let mut offsets = Vec::with_capacity(rows.len());
        let mut classes = Vec::with_capacity(rows.len() * 3);
        for i in rows {
            let start = classes.len();
            for &c in labels.row(i) {
                classes.extend_from_slice(&expansions[c as usize]);
            }
            let row = &mut classes[start..];
            row.sort_unstable();
            let mut kept = 0;
            for r in 0..row.len() {
                if kept == 0 || row[r] != row[kept - 1] {
                    row[kept] = row[r];
                    kept += 1;
                }
            }
            classes.truncate(start + kept);
            offsets.push(classes.len());
        }
        (offsets, classes)
    })?;

    let mut offsets = Vec::with_capacity(labels.n_clips() + 1);
    offsets.push(0);
    let mut classes = Vec::with_capacity(blocks.iter().map(|b| b.1.len()).sum());
    for (block_offsets, block_classes) in blocks {
        let base = classes.len();
        offsets.extend(block_offsets.into_iter().map(|o| o + base));
        classes.extend(block_classes);
    }

    Ok(LabelMatrix::from_parts(
        labels.clip_ids().to_vec(),
        output_vocab.clone(),
        offsets,
        classes,
        labels.segment_times().map(<[_]>::to_vec),
    ))
}

/// Precomputed max-propagation over an ontology for one score vocabulary.
#[derive(Debug, Clone)]
pub struct ScorePropagator {
    n_nodes: usize,
    /// (child, parent) node pairs in child-first order.
    edges: Vec<(u32, u32)>,
    /// Score column -> node.
    input_nodes: Vec<usize>,
    /// Output column -> node.
    output_nodes: Vec<usize>,
    score_vocab: ClassVocabulary,
    output_vocab: ClassVocabulary,
}

impl ScorePropagator {
    /// `score_vocab` and `output_vocab` must be ontology classes and
    /// `output_vocab` a subset of `score_vocab`. Under
    /// [`TraversalPolicy::LabelableOnly`], propagation never enters a node
    /// outside `score_vocab`.
    pub fn new(
        graph: &OntologyGraph,
        policy: TraversalPolicy,
        score_vocab: &ClassVocabulary,
        output_vocab: &ClassVocabulary,
    ) -> Result<Self, PropagateError> {
        let node_of = |mid: &str| {
            graph
                .index_of(mid)
                .ok_or_else(|| PropagateError::UnknownMid(mid.to_string()))
        };
        let input_nodes = score_vocab
            .entries()
            .iter()
            .map(|e| node_of(&e.mid))
            .collect::<Result<Vec<_>, _>>()?;
        let output_nodes = output_vocab
            .entries()
            .iter()
            .map(|e| {
                if !score_vocab.contains(&e.mid) {
                    return Err(PropagateError::MissingScoreClass(e.mid.clone()));
                }
                node_of(&e.mid)
            })
            .collect::<Result<Vec<_>, _>>()?;

        let mut labelable = vec![policy == TraversalPolicy::ThroughAllNodes; graph.len()];
        for &n in &input_nodes {
            labelable[n] = true;
        }
        let edges = graph
            .child_first_order()
            .iter()
            .filter_map(|&c| {
                let p = graph.single_parent(c)?;
                labelable[p].then_some((c as u32, p as u32))
            })
            .collect();

        Ok(Self {
            n_nodes: graph.len(),
            edges,
            input_nodes,
            output_nodes,
            score_vocab: score_vocab.clone(),
            output_vocab: output_vocab.clone(),
        })
    }

    /// Propagates one row. `buf` is scratch space of at least `n_nodes`.
    fn propagate_row(&self, row: &[f32], buf: &mut [f32], out: &mut Vec<f32>) {
        buf.fill(f32::NEG_INFINITY);
        for (&node, &v) in self.input_nodes.iter().zip(row) {
            buf[node] = v;
        }
        for &(c, p) in &self.edges {
            let (c, p) = (c as usize, p as usize);
            if buf[c] > buf[p] {
                buf[p] = buf[c];
            }
        }
        out.extend(self.output_nodes.iter().map(|&n| buf[n]));
    }

    pub fn apply(&self, scores: &ScoreMatrix, threads: usize) -> Result<ScoreMatrix, PropagateError> {
        if scores.vocab() != &self.score_vocab {
            return Err(PropagateError::VocabMismatch);
        }
        if let Some(pos) = scores.values().iter().position(|v| !v.is_finite()) {
            let c = scores.vocab().len();
            return Err(PropagateError::NonFiniteValue {
                clip: scores.clip_ids()[pos / c].clone(),
                class: scores.vocab().mid(pos % c).to_string(),
            });
        }
        let width = self.output_nodes.len();
        let blocks = map_blocks(scores.n_clips(), threads, |rows| {
            let mut buf = vec![f32::NEG_INFINITY; self.n_nodes];
            let mut out = Vec::with_capacity(rows.len() * width);
            for i in rows {
                self.propagate_row(scores.row(i), &mut buf, &mut out);
            }
            out
        })?;
        let values: Vec<f32> = blocks.concat();
        ScoreMatrix::new(scores.clip_ids().to_vec(), self.output_vocab.clone(), values).map_err(|e| match e {
            crate::labelset::LabelsetError::NonFiniteValue { clip, class } => {
                PropagateError::NonFiniteValue { clip, class }
            }
            other => unreachable!("propagated matrix has valid shape: {other}"),
        })
    }
}

/// Max-propagates scores through the whole ontology, single-threaded.
/// Ontology classes absent from `scores` act as −∞: they relay values from
/// below but never contribute one of their own.
pub fn propagate_scores(
    scores: &ScoreMatrix,
    graph: &OntologyGraph,
    output_vocab: &ClassVocabulary,
) -> Result<ScoreMatrix, PropagateError> {
    propagate_scores_threaded(scores, graph, TraversalPolicy::ThroughAllNodes, output_vocab, 1)
}

pub fn propagate_scores_threaded(
    scores: &ScoreMatrix,
    graph: &OntologyGraph,
    policy: TraversalPolicy,
    output_vocab: &ClassVocabulary,
    threads: usize,
) -> Result<ScoreMatrix, PropagateError> {
    ScorePropagator::new(graph, policy, scores.vocab(), output_vocab)?.apply(scores, threads)
}
