//! Dataset-side types and file formats.
//!
//! * class-index CSV (`index,mid,display_name`)
//! * AudioSet segment CSVs (`YTID, start_seconds, end_seconds, "mid1,mid2"`)
//! * score matrices as CSV or the `HLPSCOR1` binary format
//!
//! HLPS layout, all integers little-endian:
//!
//! ```text
//! b"HLPSCOR1" | u32 clips N | u32 classes C
//! C x (u16 len, utf-8 mid) | N x (u16 len, utf-8 clip id)
//! N*C x f32, row-major
//! ```

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::io::Write as _;

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum LabelsetError {
    #[error("class index is missing the 'index,mid,display_name' header")]
    MissingHeader,

    #[error("line {line}: expected class index {expected}, found {found}")]
    NonContiguousIndices {
        line: usize,
        expected: usize,
        found: String,
    },

    #[error("duplicate class '{0}'")]
    DuplicateMid(String),

    #[error("clip '{clip}': unknown class '{mid}'")]
    UnknownMid { clip: String, mid: String },

    #[error("line {line}: {reason}")]
    MalformedRow { line: usize, reason: String },

    #[error("not an HLPS score file (bad magic)")]
    BadMagic,

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("non-finite score for clip '{clip}', class '{class}'")]
    NonFiniteValue { clip: String, class: String },

    #[error("class index {index} out of range for a vocabulary of {len}")]
    ClassOutOfRange { index: usize, len: usize },

    #[error("identifier longer than 65535 bytes: '{0}…'")]
    FieldTooLong(String),

    #[error("input is not valid UTF-8")]
    InvalidUtf8,
}

/// One vocabulary entry. `index` equals its position.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassEntry {
    pub index: usize,
    pub mid: String,
    pub display_name: String,
}

/// Ordered class list with a mid → index lookup.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ClassVocabulary {
    entries: Vec<ClassEntry>,
    mid_to_index: HashMap<String, usize>,
}

impl ClassVocabulary {
    /// Builds a vocabulary from `(mid, display_name)` pairs in order.
    pub fn new<I, M, N>(pairs: I) -> Result<Self, LabelsetError>
    where
        I: IntoIterator<Item = (M, N)>,
        M: Into<String>,
        N: Into<String>,
    {
        let mut vocab = Self::default();
        for (mid, name) in pairs {
            vocab.push(mid.into(), name.into())?;
        }
        Ok(vocab)
    }

    /// Vocabulary with empty display names.
    pub fn from_mids<I, M>(mids: I) -> Result<Self, LabelsetError>
    where
        I: IntoIterator<Item = M>,
        M: Into<String>,
    {
        Self::new(mids.into_iter().map(|m| (m, String::new())))
    }

    fn push(&mut self, mid: String, display_name: String) -> Result<(), LabelsetError> {
        let index = self.entries.len();
        if self.mid_to_index.contains_key(&mid) {
            return Err(LabelsetError::DuplicateMid(mid));
        }
        self.mid_to_index.insert(mid.clone(), index);
        self.entries.push(ClassEntry {
            index,
            mid,
            display_name,
        });
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[ClassEntry] {
        &self.entries
    }

    pub fn mid(&self, index: usize) -> &str {
        &self.entries[index].mid
    }

    pub fn index_of(&self, mid: &str) -> Option<usize> {
        self.mid_to_index.get(mid).copied()
    }

    pub fn contains(&self, mid: &str) -> bool {
        self.mid_to_index.contains_key(mid)
    }

    /// Parses an AudioSet `class_labels_indices.csv`.
    pub fn parse_class_index_csv(raw: &[u8]) -> Result<Self, LabelsetError> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .flexible(true)
            .from_reader(raw);
        let mut records = reader.records();
        let header = match records.next() {
            Some(Ok(h)) => h,
            Some(Err(e)) => return Err(csv_error(e)),
            None => return Err(LabelsetError::MissingHeader),
        };
        let header: Vec<&str> = header.iter().map(str::trim).collect();
        if header != ["index", "mid", "display_name"] {
            return Err(LabelsetError::MissingHeader);
        }

        let mut vocab = Self::default();
        for record in records {
            let record = record.map_err(csv_error)?;
            let line = record.position().map_or(0, |p| p.line() as usize);
            if record.len() != 3 {
                return Err(LabelsetError::MalformedRow {
                    line,
                    reason: format!("expected 3 fields, found {}", record.len()),
                });
            }
            let expected = vocab.len();
            let found = record[0].trim();
            if found.parse::<usize>().ok() != Some(expected) {
                return Err(LabelsetError::NonContiguousIndices {
                    line,
                    expected,
                    found: found.to_string(),
                });
            }
            vocab.push(record[1].trim().to_string(), record[2].to_string())?;
        }
        Ok(vocab)
    }

    /// Parses an FSD50K `vocabulary.csv` (headerless `index,display_name,mid`).
    pub fn parse_fsd50k_vocabulary_csv(raw: &[u8]) -> Result<Self, LabelsetError> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .flexible(true)
            .from_reader(raw);
        let mut vocab = Self::default();
        for record in reader.records() {
            let record = record.map_err(csv_error)?;
            let line = record.position().map_or(0, |p| p.line() as usize);
            if record.len() != 3 {
                return Err(LabelsetError::MalformedRow {
                    line,
                    reason: format!("expected 3 fields, found {}", record.len()),
                });
            }
            let expected = vocab.len();
            let found = record[0].trim();
            if found.parse::<usize>().ok() != Some(expected) {
                return Err(LabelsetError::NonContiguousIndices {
                    line,
                    expected,
                    found: found.to_string(),
                });
            }
            vocab.push(record[2].trim().to_string(), record[1].to_string())?;
        }
        Ok(vocab)
    }

    /// Writes the class-index CSV dialect read by [`Self::parse_class_index_csv`].
    pub fn to_class_index_csv(&self) -> String {
        let mut out = String::from("index,mid,display_name\n");
        for e in &self.entries {
            let _ = writeln!(
                out,
                "{},{},\"{}\"",
                e.index,
                e.mid,
                e.display_name.replace('"', "\"\"")
            );
        }
        out
    }
}

fn csv_error(e: csv::Error) -> LabelsetError {
    let line = e.position().map_or(0, |p| p.line() as usize);
    match e.kind() {
        csv::ErrorKind::Utf8 { .. } => LabelsetError::InvalidUtf8,
        _ => LabelsetError::MalformedRow {
            line,
            reason: e.to_string(),
        },
    }
}

/// Sparse clip × class binary label matrix, stored row-compressed.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelMatrix {
    clip_ids: Vec<String>,
    vocab: ClassVocabulary,
    offsets: Vec<usize>,
    classes: Vec<u32>,
    segment_times: Option<Vec<(f64, f64)>>,
}

impl LabelMatrix {
    pub fn empty(vocab: ClassVocabulary) -> Self {
        Self {
            clip_ids: Vec::new(),
            vocab,
            offsets: vec![0],
            classes: Vec::new(),
            segment_times: None,
        }
    }

    /// Builds a matrix from per-clip class index lists. Rows are sorted and
    /// deduplicated.
    pub fn from_rows(
        clip_ids: Vec<String>,
        vocab: ClassVocabulary,
        rows: Vec<Vec<u32>>,
        segment_times: Option<Vec<(f64, f64)>>,
    ) -> Result<Self, LabelsetError> {
        if rows.len() != clip_ids.len() {
            return Err(LabelsetError::DimensionMismatch(format!(
                "{} clip ids but {} label rows",
                clip_ids.len(),
                rows.len()
            )));
        }
        if let Some(times) = &segment_times {
            if times.len() != clip_ids.len() {
                return Err(LabelsetError::DimensionMismatch(format!(
                    "{} clip ids but {} segment times",
                    clip_ids.len(),
                    times.len()
                )));
            }
        }
        let mut offsets = Vec::with_capacity(rows.len() + 1);
        offsets.push(0);
        let mut classes = Vec::new();
        for mut row in rows {
            row.sort_unstable();
            row.dedup();
            if let Some(&last) = row.last() {
                if last as usize >= vocab.len() {
                    return Err(LabelsetError::ClassOutOfRange {
                        index: last as usize,
                        len: vocab.len(),
                    });
                }
            }
            classes.extend_from_slice(&row);
            offsets.push(classes.len());
        }
        Ok(Self {
            clip_ids,
            vocab,
            offsets,
            classes,
            segment_times,
        })
    }

    /// Assembles a matrix from already-normalized compressed parts.
    pub(crate) fn from_parts(
        clip_ids: Vec<String>,
        vocab: ClassVocabulary,
        offsets: Vec<usize>,
        classes: Vec<u32>,
        segment_times: Option<Vec<(f64, f64)>>,
    ) -> Self {
        debug_assert_eq!(offsets.len(), clip_ids.len() + 1);
        debug_assert!(offsets
            .windows(2)
            .all(|w| classes[w[0]..w[1]].windows(2).all(|p| p[0] < p[1])));
        Self {
            clip_ids,
            vocab,
            offsets,
            classes,
            segment_times,
        }
    }

    pub fn n_clips(&self) -> usize {
        self.clip_ids.len()
    }

    pub fn clip_ids(&self) -> &[String] {
        &self.clip_ids
    }

    pub fn vocab(&self) -> &ClassVocabulary {
        &self.vocab
    }

    pub fn segment_times(&self) -> Option<&[(f64, f64)]> {
        self.segment_times.as_deref()
    }

    /// Positive class indices of clip `i`, ascending.
    pub fn row(&self, i: usize) -> &[u32] {
        &self.classes[self.offsets[i]..self.offsets[i + 1]]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[u32]> + '_ {
        self.offsets.windows(2).map(|w| &self.classes[w[0]..w[1]])
    }

    pub fn total_labels(&self) -> usize {
        self.classes.len()
    }

    pub fn contains(&self, clip: usize, class: u32) -> bool {
        self.row(clip).binary_search(&class).is_ok()
    }

    /// Positive count per class.
    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0usize; self.vocab.len()];
        for &c in &self.classes {
            counts[c as usize] += 1;
        }
        counts
    }

    /// Copy of this matrix with segment times attached.
    pub fn with_segment_times(mut self, times: Option<Vec<(f64, f64)>>) -> Self {
        self.segment_times = times;
        self
    }
}

/// Options for [`parse_segments_csv`].
#[derive(Debug, Clone, Copy, Default)]
pub struct SegmentParseOptions {
    /// Drop and count labels missing from the vocabulary instead of failing.
    pub lenient: bool,
}

/// A parsed segments file plus the labels lenient mode dropped.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedSegments {
    pub labels: LabelMatrix,
    /// Unknown mid → number of occurrences dropped.
    pub dropped: BTreeMap<String, usize>,
}

impl ParsedSegments {
    pub fn dropped_total(&self) -> usize {
        self.dropped.values().sum()
    }
}

/// Parses an AudioSet segments CSV against `vocab`.
pub fn parse_segments_csv(
    raw: &[u8],
    vocab: &ClassVocabulary,
    opts: SegmentParseOptions,
) -> Result<ParsedSegments, LabelsetError> {
    let text = std::str::from_utf8(raw).map_err(|_| LabelsetError::InvalidUtf8)?;
    let mut clip_ids = Vec::new();
    let mut times = Vec::new();
    let mut offsets = vec![0usize];
    let mut classes: Vec<u32> = Vec::new();
    let mut dropped = BTreeMap::new();

    for (lineno, line) in text.lines().enumerate() {
        let line_no = lineno + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let malformed = |reason: &str| LabelsetError::MalformedRow {
            line: line_no,
            reason: reason.to_string(),
        };
        let mut fields = trimmed.splitn(4, ',');
        let (Some(id), Some(start), Some(end), Some(rest)) =
            (fields.next(), fields.next(), fields.next(), fields.next())
        else {
            return Err(malformed("expected 'YTID, start, end, \"labels\"'"));
        };
        let id = id.trim();
        if id.is_empty() {
            return Err(malformed("empty clip id"));
        }
        let parse_time = |s: &str| {
            s.trim()
                .parse::<f64>()
                .ok()
                .filter(|t| t.is_finite())
                .ok_or_else(|| malformed(&format!("invalid time '{}'", s.trim())))
        };
        let start = parse_time(start)?;
        let end = parse_time(end)?;

        let rest = rest.trim();
        let inner = match rest.strip_prefix('"') {
            Some(r) => r
                .strip_suffix('"')
                .ok_or_else(|| malformed("unterminated quoted label list"))?,
            None => rest,
        };

        let row_start = classes.len();
        for mid in inner.split(',').map(str::trim).filter(|m| !m.is_empty()) {
            match vocab.index_of(mid) {
                Some(idx) => classes.push(idx as u32),
                None if opts.lenient => *dropped.entry(mid.to_string()).or_insert(0) += 1,
                None => {
                    return Err(LabelsetError::UnknownMid {
                        clip: id.to_string(),
                        mid: mid.to_string(),
                    })
                }
            }
        }
        let row = &mut classes[row_start..];
        row.sort_unstable();
        let kept = dedup_sorted(row);
        classes.truncate(row_start + kept);

        clip_ids.push(id.to_string());
        times.push((start, end));
        offsets.push(classes.len());
    }

    Ok(ParsedSegments {
        labels: LabelMatrix::from_parts(clip_ids, vocab.clone(), offsets, classes, Some(times)),
        dropped,
    })
}

/// In-place dedup of a sorted slice; returns the number of unique values kept
/// at the front.
fn dedup_sorted(row: &mut [u32]) -> usize {
    if row.is_empty() {
        return 0;
    }
    let mut w = 1;
    for r in 1..row.len() {
        if row[r] != row[w - 1] {
            row[w] = row[r];
            w += 1;
        }
    }
    w
}

fn format_time(t: f64) -> String {
    let s = format!("{t:.3}");
    if s.parse::<f64>() == Ok(t) {
        s
    } else {
        t.to_string()
    }
}

/// Writes `labels` in the AudioSet segments dialect.
pub fn write_segments_csv(labels: &LabelMatrix) -> Vec<u8> {
    let mut out = Vec::with_capacity(64 + labels.n_clips() * 48);
    let _ = writeln!(
        out,
        "# num_segs={}, num_positive_labels={}",
        labels.n_clips(),
        labels.total_labels()
    );
    out.extend_from_slice(b"# YTID, start_seconds, end_seconds, positive_labels\n");
    let times = labels.segment_times();
    for (i, row) in labels.rows().enumerate() {
        out.extend_from_slice(labels.clip_ids[i].as_bytes());
        match times {
            Some(t) => {
                let (start, end) = t[i];
                let _ = write!(out, ", {}, {}, \"", format_time(start), format_time(end));
            }
            None => out.extend_from_slice(b", 0.000, 10.000, \""),
        }
        for (k, &c) in row.iter().enumerate() {
            if k > 0 {
                out.push(b',');
            }
            out.extend_from_slice(labels.vocab.mid(c as usize).as_bytes());
        }
        out.extend_from_slice(b"\"\n");
    }
    out
}

/// Dense clip × class matrix of finite scores.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreMatrix {
    clip_ids: Vec<String>,
    vocab: ClassVocabulary,
    scores: Vec<f32>,
}

impl ScoreMatrix {
    pub fn new(
        clip_ids: Vec<String>,
        vocab: ClassVocabulary,
        scores: Vec<f32>,
    ) -> Result<Self, LabelsetError> {
        if scores.len() != clip_ids.len() * vocab.len() {
            return Err(LabelsetError::DimensionMismatch(format!(
                "{} scores for {} clips x {} classes",
                scores.len(),
                clip_ids.len(),
                vocab.len()
            )));
        }
        if let Some(pos) = scores.iter().position(|v| !v.is_finite()) {
            let c = vocab.len();
            return Err(LabelsetError::NonFiniteValue {
                clip: clip_ids[pos / c].clone(),
                class: vocab.mid(pos % c).to_string(),
            });
        }
        Ok(Self {
            clip_ids,
            vocab,
            scores,
        })
    }

    pub fn n_clips(&self) -> usize {
        self.clip_ids.len()
    }

    pub fn clip_ids(&self) -> &[String] {
        &self.clip_ids
    }

    pub fn vocab(&self) -> &ClassVocabulary {
        &self.vocab
    }

    pub fn values(&self) -> &[f32] {
        &self.scores
    }

    pub fn row(&self, i: usize) -> &[f32] {
        let c = self.vocab.len();
        &self.scores[i * c..(i + 1) * c]
    }

    pub fn get(&self, clip: usize, class: usize) -> f32 {
        self.scores[clip * self.vocab.len() + class]
    }

    /// Scores of one class across all clips.
    pub fn column(&self, class: usize) -> Vec<f32> {
        let c = self.vocab.len();
        self.scores
            .iter()
            .skip(class)
            .step_by(c.max(1))
            .copied()
            .collect()
    }

    /// Applies `f` elementwise, re-validating finiteness.
    pub fn map_values(&self, f: impl Fn(f32) -> f32) -> Result<Self, LabelsetError> {
        Self::new(
            self.clip_ids.clone(),
            self.vocab.clone(),
            self.scores.iter().map(|&v| f(v)).collect(),
        )
    }

    /// 0/1 score matrix from a label matrix.
    pub fn from_labels(labels: &LabelMatrix) -> Self {
        let c = labels.vocab().len();
        let mut scores = vec![0.0f32; labels.n_clips() * c];
        for (i, row) in labels.rows().enumerate() {
            for &k in row {
                scores[i * c + k as usize] = 1.0;
            }
        }
        Self {
            clip_ids: labels.clip_ids().to_vec(),
            vocab: labels.vocab().clone(),
            scores,
        }
    }
}

/// On-disk score formats.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScoreFormat {
    Csv,
    Hlps,
}

pub const HLPS_MAGIC: &[u8; 8] = b"HLPSCOR1";

impl ScoreFormat {
    /// HLPS when the bytes start with the magic, CSV otherwise.
    pub fn sniff(raw: &[u8]) -> Self {
        if raw.starts_with(HLPS_MAGIC) {
            Self::Hlps
        } else {
            Self::Csv
        }
    }

    /// CSV for a `.csv` extension, HLPS otherwise.
    pub fn from_path(path: &std::path::Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => Self::Csv,
            _ => Self::Hlps,
        }
    }
}

impl std::str::FromStr for ScoreFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(Self::Csv),
            "hlps" => Ok(Self::Hlps),
            other => Err(format!("unknown score format '{other}' (expected csv or hlps)")),
        }
    }
}

pub fn read_scores(raw: &[u8], format: ScoreFormat) -> Result<ScoreMatrix, LabelsetError> {
    match format {
        ScoreFormat::Csv => read_scores_csv(raw),
        ScoreFormat::Hlps => read_scores_hlps(raw),
    }
}

pub fn write_scores(scores: &ScoreMatrix, format: ScoreFormat) -> Result<Vec<u8>, LabelsetError> {
    match format {
        ScoreFormat::Csv => Ok(write_scores_csv(scores)),
        ScoreFormat::Hlps => write_scores_hlps(scores),
    }
}

fn read_scores_csv(raw: &[u8]) -> Result<ScoreMatrix, LabelsetError> {
    let text = std::str::from_utf8(raw).map_err(|_| LabelsetError::InvalidUtf8)?;
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or(LabelsetError::MissingHeader)?;
    let mut cols = header.split(',').map(str::trim);
    if cols.next() != Some("clip_id") {
        return Err(LabelsetError::MissingHeader);
    }
    let vocab = ClassVocabulary::from_mids(cols)?;
    let width = vocab.len();

    let mut clip_ids = Vec::new();
    let mut scores = Vec::new();
    for (lineno, line) in lines {
        let mut fields = line.split(',');
        let clip = fields.next().unwrap_or_default().trim().to_string();
        let before = scores.len();
        for (k, field) in fields.enumerate() {
            if k >= width {
                break;
            }
            let v: f32 = field.trim().parse().map_err(|_| LabelsetError::MalformedRow {
                line: lineno + 1,
                reason: format!("invalid score '{}'", field.trim()),
            })?;
            if !v.is_finite() {
                return Err(LabelsetError::NonFiniteValue {
                    clip,
                    class: vocab.mid(k).to_string(),
                });
            }
            scores.push(v);
        }
        let got = line.split(',').count() - 1;
        if got != width {
            return Err(LabelsetError::DimensionMismatch(format!(
                "line {}: {} scores for {} classes",
                lineno + 1,
                got,
                width
            )));
        }
        debug_assert_eq!(scores.len() - before, width);
        clip_ids.push(clip);
    }
    ScoreMatrix::new(clip_ids, vocab, scores)
}

fn write_scores_csv(scores: &ScoreMatrix) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(b"clip_id");
    for e in scores.vocab.entries() {
        out.push(b',');
        out.extend_from_slice(e.mid.as_bytes());
    }
    out.push(b'\n');
    for (i, clip) in scores.clip_ids.iter().enumerate() {
        out.extend_from_slice(clip.as_bytes());
        for v in scores.row(i) {
            let _ = write!(out, ",{v}");
        }
        out.push(b'\n');
    }
    out
}

fn write_scores_hlps(scores: &ScoreMatrix) -> Result<Vec<u8>, LabelsetError> {
    let mut out = Vec::with_capacity(16 + scores.scores.len() * 4);
    out.extend_from_slice(HLPS_MAGIC);
    let n = u32::try_from(scores.n_clips())
        .map_err(|_| LabelsetError::DimensionMismatch("more than u32::MAX clips".into()))?;
    let c = u32::try_from(scores.vocab.len())
        .map_err(|_| LabelsetError::DimensionMismatch("more than u32::MAX classes".into()))?;
    out.extend_from_slice(&n.to_le_bytes());
    out.extend_from_slice(&c.to_le_bytes());
    let strings = scores
        .vocab
        .entries()
        .iter()
        .map(|e| e.mid.as_str())
        .chain(scores.clip_ids.iter().map(String::as_str));
    for s in strings {
        let len =
            u16::try_from(s.len()).map_err(|_| LabelsetError::FieldTooLong(s.chars().take(32).collect()))?;
        out.extend_from_slice(&len.to_le_bytes());
        out.extend_from_slice(s.as_bytes());
    }
    for v in &scores.scores {
        out.extend_from_slice(&v.to_le_bytes());
    }
    Ok(out)
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], LabelsetError> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.buf.len())
            .ok_or_else(|| LabelsetError::DimensionMismatch("truncated HLPS file".into()))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32, LabelsetError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn string(&mut self) -> Result<String, LabelsetError> {
        let len = u16::from_le_bytes(self.take(2)?.try_into().unwrap()) as usize;
        let bytes = self.take(len)?;
        String::from_utf8(bytes.to_vec()).map_err(|_| LabelsetError::InvalidUtf8)
    }
}

fn read_scores_hlps(raw: &[u8]) -> Result<ScoreMatrix, LabelsetError> {
    if !raw.starts_with(HLPS_MAGIC) {
        return Err(LabelsetError::BadMagic);
    }
    let mut cur = Cursor { buf: raw, pos: 8 };
    let n = cur.u32()? as usize;
    let c = cur.u32()? as usize;
    let mids = (0..c).map(|_| cur.string()).collect::<Result<Vec<_>, _>>()?;
    let vocab = ClassVocabulary::from_mids(mids)?;
    let clip_ids = (0..n).map(|_| cur.string()).collect::<Result<Vec<_>, _>>()?;
    let payload = &raw[cur.pos..];
    let expected = n
        .checked_mul(c)
        .and_then(|v| v.checked_mul(4))
        .ok_or_else(|| LabelsetError::DimensionMismatch("header dimensions overflow".into()))?;
    if payload.len() != expected {
        return Err(LabelsetError::DimensionMismatch(format!(
            "payload has {} bytes, expected {} for {} x {} float32",
            payload.len(),
            expected,
            n,
            c
        )));
    }
    let scores = payload
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes(b.try_into().unwrap()))
        .collect();
    ScoreMatrix::new(clip_ids, vocab, scores)
}
