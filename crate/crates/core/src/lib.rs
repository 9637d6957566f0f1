//! Hierarchical label propagation (HLP) for ontology-structured multi-label
//! datasets.
//!
//! Positive labels are propagated up an ontology along single-parent links:
//! a class with exactly one parent makes that parent positive too, and so on
//! up the chain. Classes with several parents stop propagation, since the
//! positive label cannot be attributed to one of them. The same rule applies
//! to model scores by taking `max(parent, child)`.
//!
//! * [`ontology`]: ontology JSON parsing, validation, propagation chains
//! * [`labelset`]: class-index, segment CSV and score file formats
//! * [`propagate`]: label and score propagation
//! * [`metrics`]: class-wise AP, mAP, shared vocabularies
//! * [`stats`]: before/after label statistics
//! * [`synth`]: seeded synthetic data and a reference propagation
//! * [`cli`]: the `hlp` command

pub mod cli;
pub mod labelset;
pub mod metrics;
pub mod ontology;
pub mod propagate;
pub mod stats;
pub mod synth;

pub use labelset::{ClassVocabulary, LabelMatrix, ScoreMatrix};
pub use metrics::{average_precision, mean_average_precision, restrict_to_shared_vocab, EvalReport};
pub use ontology::{OntologyGraph, PropagationMap, TraversalPolicy};
pub use propagate::{propagate_labels, propagate_scores};
pub use stats::{diff_label_matrices, HlpReport};
