//! Label-distribution changes between two revisions of a label matrix.

use std::cmp::Ordering;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::labelset::LabelMatrix;

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("clip ids differ between the two label sets (first difference at row {0})")]
    ClipMismatch(usize),

    #[error("the two label sets use different class vocabularies")]
    VocabMismatch,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub total_before: usize,
    pub total_after: usize,
    pub avg_before: f64,
    pub avg_after: f64,
    pub affected_classes: usize,
    pub affected_clips: usize,
    pub clip_count: usize,
}

impl Summary {
    /// (after − before) / before over label totals; `None` when before is 0.
    pub fn relative_growth(&self) -> Option<f64> {
        (self.total_before > 0)
            .then(|| (self.total_after as f64 - self.total_before as f64) / self.total_before as f64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassChange {
    pub mid: String,
    pub name: String,
    pub before: usize,
    pub after: usize,
    /// after / before; `None` when before is 0.
    pub ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HlpReport {
    pub summary: Summary,
    pub per_class: Vec<ClassChange>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Text,
    Json,
    Csv,
}

impl std::str::FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "text" => Ok(Self::Text),
            "json" => Ok(Self::Json),
            "csv" => Ok(Self::Csv),
            other => Err(format!(
                "unknown report format '{other}' (expected text, json or csv)"
            )),
        }
    }
}

/// Compares two label matrices over the same clips and vocabulary.
pub fn diff_label_matrices(before: &LabelMatrix, after: &LabelMatrix) -> Result<HlpReport, StatsError> {
    if before.clip_ids() != after.clip_ids() {
        let first = before
            .clip_ids()
            .iter()
            .zip(after.clip_ids())
            .position(|(a, b)| a != b)
            .unwrap_or_else(|| before.n_clips().min(after.n_clips()));
        return Err(StatsError::ClipMismatch(first));
    }
    if before.vocab() != after.vocab() {
        return Err(StatsError::VocabMismatch);
    }

    let clip_count = before.n_clips();
    let affected_clips = before.rows().zip(after.rows()).filter(|(a, b)| a != b).count();
    let counts_before = before.class_counts();
    let counts_after = after.class_counts();

    let mut per_class: Vec<ClassChange> = before
        .vocab()
        .entries()
        .iter()
        .map(|e| {
            let (b, a) = (counts_before[e.index], counts_after[e.index]);
            ClassChange {
                mid: e.mid.clone(),
                name: e.display_name.clone(),
                before: b,
                after: a,
                ratio: (b > 0).then(|| a as f64 / b as f64),
            }
        })
        .collect();
    per_class.sort_by(|x, y| {
        let by_ratio = match (x.ratio, y.ratio) {
            (Some(a), Some(b)) => b.partial_cmp(&a).unwrap_or(Ordering::Equal),
            (Some(_), None) => Ordering::Less,
            (None, Some(_)) => Ordering::Greater,
            (None, None) => Ordering::Equal,
        };
        by_ratio.then_with(|| x.mid.cmp(&y.mid))
    });

    let total_before = before.total_labels();
    let total_after = after.total_labels();
    let avg = |total: usize| {
        if clip_count == 0 {
            0.0
        } else {
            total as f64 / clip_count as f64
        }
    };
    Ok(HlpReport {
        summary: Summary {
            total_before,
            total_after,
            avg_before: avg(total_before),
            avg_after: avg(total_after),
            affected_classes: per_class.iter().filter(|c| c.before != c.after).count(),
            affected_clips,
            clip_count,
        },
        per_class,
    })
}

/// Label totals in millions with two decimals ("3.85M").
pub fn millions(count: usize) -> String {
    format!("{:.2}M", count as f64 / 1e6)
}

impl HlpReport {
    pub fn render(&self, format: ReportFormat) -> Vec<u8> {
        match format {
            ReportFormat::Text => self.to_text().into_bytes(),
            ReportFormat::Json => self.to_json().into_bytes(),
            ReportFormat::Csv => self.to_csv(),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serialization");
        s.push('\n');
        s
    }

    pub fn from_json(raw: &str) -> serde_json::Result<Self> {
        serde_json::from_str(raw)
    }

    pub fn to_text(&self) -> String {
        let s = &self.summary;
        let growth = s
            .relative_growth()
            .map_or_else(|| "n/a".to_string(), |g| format!("{:+.1}%", g * 100.0));
        let mut out = String::new();
        let _ = writeln!(out, "Clips: {}", s.clip_count);
        let _ = writeln!(out, "Affected classes: {}", s.affected_classes);
        let _ = writeln!(out, "Affected clips: {}", s.affected_clips);
        let _ = writeln!(
            out,
            "Total labels: {} -> {} ({} -> {}, {})",
            s.total_before,
            s.total_after,
            millions(s.total_before),
            millions(s.total_after),
            growth
        );
        let _ = writeln!(
            out,
            "Avg. labels / clip: {:.2} -> {:.2}",
            s.avg_before, s.avg_after
        );
        out.push('\n');

        let name_width = self
            .per_class
            .iter()
            .map(|c| c.name.chars().count())
            .max()
            .unwrap_or(0)
            .max(4);
        let _ = writeln!(
            out,
            "{:<16} {:<name_width$} {:>10} {:>10} {:>8}",
            "mid", "name", "before", "after", "ratio"
        );
        for c in &self.per_class {
            let ratio = c.ratio.map_or_else(|| "-".to_string(), |r| format!("x{r:.2}"));
            let _ = writeln!(
                out,
                "{:<16} {:<name_width$} {:>10} {:>10} {:>8}",
                c.mid, c.name, c.before, c.after, ratio
            );
        }
        out
    }

    /// Summary as `# key=value` comment lines, then one CSV row per class.
    pub fn to_csv(&self) -> Vec<u8> {
        let s = &self.summary;
        let mut out = format!(
            "# clip_count={}\n# total_before={}\n# total_after={}\n# avg_before={}\n# avg_after={}\n# affected_classes={}\n# affected_clips={}\n",
            s.clip_count,
            s.total_before,
            s.total_after,
            s.avg_before,
            s.avg_after,
            s.affected_classes,
            s.affected_clips
        )
        .into_bytes();
        let mut writer = csv::Writer::from_writer(Vec::new());
        writer
            .write_record(["mid", "name", "before", "after", "ratio"])
            .expect("in-memory csv");
        for c in &self.per_class {
            writer
                .write_record([
                    c.mid.clone(),
                    c.name.clone(),
                    c.before.to_string(),
                    c.after.to_string(),
                    c.ratio.map(|r| r.to_string()).unwrap_or_default(),
                ])
                .expect("in-memory csv");
        }
        out.extend(writer.into_inner().expect("in-memory csv"));
        out
    }
}
