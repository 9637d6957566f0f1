//! Class-wise average precision and macro mAP.
//!
//! AP of one class: sort clips by descending score (ties keep the original
//! clip order), then average precision@k over the ranks k that hold a positive.
//! Classes with no positives have undefined AP and are left out of the mean.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::labelset::{ClassVocabulary, LabelMatrix, ScoreMatrix};

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("{scores} scores but {labels} labels")]
    LengthMismatch { scores: usize, labels: usize },

    #[error("non-finite score at position {0}")]
    NonFiniteValue(usize),

    #[error("score and label clip ids differ (first difference at row {0})")]
    ClipMismatch(usize),

    #[error("no classes to evaluate")]
    EmptySubset,

    #[error("evaluation class '{0}' is missing from the scores or the labels")]
    SubsetMid(String),

    #[error("could not start worker pool: {0}")]
    ThreadPool(String),
}

/// AP of a single ranking, or `None` when there are no positives.
pub fn average_precision(scores: &[f64], labels: &[bool]) -> Result<Option<f64>, MetricsError> {
    if scores.len() != labels.len() {
        return Err(MetricsError::LengthMismatch {
            scores: scores.len(),
            labels: labels.len(),
        });
    }
    if let Some(pos) = scores.iter().position(|s| !s.is_finite()) {
        return Err(MetricsError::NonFiniteValue(pos));
    }
    let n_pos = labels.iter().filter(|&&l| l).count();
    if n_pos == 0 {
        return Ok(None);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    // Stable: equal scores stay in index order.
    order.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).expect("finite scores"));

    let mut hits = 0usize;
    let mut sum = 0.0;
    for (rank, &i) in order.iter().enumerate() {
        if labels[i] {
            hits += 1;
            sum += hits as f64 / (rank + 1) as f64;
        }
    }
    Ok(Some(sum / n_pos as f64))
}

/// Classes present in both vocabularies, in `a`'s order, reindexed from 0.
pub fn restrict_to_shared_vocab(a: &ClassVocabulary, b: &ClassVocabulary) -> ClassVocabulary {
    ClassVocabulary::new(
        a.entries()
            .iter()
            .filter(|e| b.contains(&e.mid))
            .map(|e| (e.mid.clone(), e.display_name.clone())),
    )
    .expect("subset of a valid vocabulary")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassAp {
    pub mid: String,
    pub ap: Option<f64>,
    pub positives: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub per_class: Vec<ClassAp>,
    /// Mean of the defined APs; `None` when no class has a positive.
    pub map: Option<f64>,
    pub classes_evaluated: usize,
    pub classes_skipped: usize,
}

impl EvalReport {
    pub fn from_per_class(per_class: Vec<ClassAp>) -> Self {
        let defined: Vec<f64> = per_class.iter().filter_map(|c| c.ap).collect();
        let map = (!defined.is_empty()).then(|| defined.iter().sum::<f64>() / defined.len() as f64);
        Self {
            classes_evaluated: defined.len(),
            classes_skipped: per_class.len() - defined.len(),
            per_class,
            map,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serialization");
        s.push('\n');
        s
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        match self.map {
            Some(m) => {
                let _ = writeln!(s, "mAP: {m:.6}");
            }
            None => s.push_str("mAP: undefined\n"),
        }
        let _ = writeln!(
            s,
            "Classes evaluated: {}\nClasses skipped (no positives): {}\n",
            self.classes_evaluated, self.classes_skipped
        );
        let _ = writeln!(s, "{:<16} {:>10} {:>10}", "mid", "AP", "positives");
        for c in &self.per_class {
            let ap = c.ap.map_or_else(|| "-".to_string(), |v| format!("{v:.6}"));
            let _ = writeln!(s, "{:<16} {:>10} {:>10}", c.mid, ap, c.positives);
        }
        s
    }
}

/// Single-threaded [`mean_average_precision_threaded`].
pub fn mean_average_precision(
    scores: &ScoreMatrix,
    labels: &LabelMatrix,
    class_subset: Option<&ClassVocabulary>,
) -> Result<EvalReport, MetricsError> {
    mean_average_precision_threaded(scores, labels, class_subset, 1)
}

/// Per-class AP over all clips and their macro mean. Without a subset, the
/// classes shared by both vocabularies are evaluated, in label order.
pub fn mean_average_precision_threaded(
    scores: &ScoreMatrix,
    labels: &LabelMatrix,
    class_subset: Option<&ClassVocabulary>,
    threads: usize,
) -> Result<EvalReport, MetricsError> {
    if scores.clip_ids() != labels.clip_ids() {
        let first = scores
            .clip_ids()
            .iter()
            .zip(labels.clip_ids())
            .position(|(a, b)| a != b)
            .unwrap_or_else(|| scores.n_clips().min(labels.n_clips()));
        return Err(MetricsError::ClipMismatch(first));
    }

    let subset = match class_subset {
        Some(s) => s.clone(),
        None => restrict_to_shared_vocab(labels.vocab(), scores.vocab()),
    };
    if subset.is_empty() {
        return Err(MetricsError::EmptySubset);
    }
    let columns = subset
        .entries()
        .iter()
        .map(
            |e| match (scores.vocab().index_of(&e.mid), labels.vocab().index_of(&e.mid)) {
                (Some(s), Some(l)) => Ok((s, l)),
                _ => Err(MetricsError::SubsetMid(e.mid.clone())),
            },
        )
        .collect::<Result<Vec<_>, _>>()?;

    // Positive clips per label class.
    let mut positives: Vec<Vec<usize>> = vec![Vec::new(); labels.vocab().len()];
    for (i, row) in labels.rows().enumerate() {
        for &c in row {
            positives[c as usize].push(i);
        }
    }

    let n = scores.n_clips();
    let eval = |&(s_col, l_col): &(usize, usize)| -> ClassAp {
        let column: Vec<f64> = scores.column(s_col).into_iter().map(f64::from).collect();
        let mut truth = vec![false; n];
        for &i in &positives[l_col] {
            truth[i] = true;
        }
        let ap = average_precision(&column, &truth).expect("validated matrix");
        ClassAp {
            mid: labels.vocab().mid(l_col).to_string(),
            ap,
            positives: positives[l_col].len(),
        }
    };

    let per_class: Vec<ClassAp> = if threads <= 1 {
        columns.iter().map(eval).collect()
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| MetricsError::ThreadPool(e.to_string()))?
            .install(|| columns.par_iter().map(eval).collect())
    };
    Ok(EvalReport::from_per_class(per_class))
}
