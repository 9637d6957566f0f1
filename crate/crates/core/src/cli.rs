//! `hlp` command-line interface.
//!
//! Exit codes: 0 on success, 1 for usage errors, 2 for data or validation
//! errors. Files are written through a temporary file in the destination
//! directory and renamed into place.

use std::ffi::OsString;
use std::fmt::Display;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use crate::labelset::{
    parse_segments_csv, read_scores, write_scores, write_segments_csv, ClassVocabulary, LabelMatrix,
    ScoreFormat, SegmentParseOptions,
};
use crate::metrics::{mean_average_precision_threaded, restrict_to_shared_vocab};
use crate::ontology::{OntologyGraph, PropagationMap, TraversalPolicy};
use crate::propagate::{propagate_labels_threaded, propagate_scores_threaded};
use crate::stats::{diff_label_matrices, ReportFormat};
use crate::synth::{gen_labels, gen_ontology, gen_scores, labelable_vocab, SynthConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;

#[derive(Parser, Debug)]
#[command(
    name = "hlp",
    version,
    about = "Hierarchical label propagation for ontology-labelled datasets"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Debug)]
struct Threads {
    /// Worker threads for row-parallel stages; output does not depend on it.
    #[arg(long, env = "HLP_THREADS", value_parser = clap::value_parser!(u32).range(1..))]
    threads: Option<u32>,
}

impl Threads {
    fn get(&self) -> usize {
        self.threads.map_or_else(
            || std::thread::available_parallelism().map_or(1, |n| n.get()),
            |t| t as usize,
        )
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Policy {
    ThroughAll,
    LabelableOnly,
}

impl From<Policy> for TraversalPolicy {
    fn from(p: Policy) -> Self {
        match p {
            Policy::ThroughAll => TraversalPolicy::ThroughAllNodes,
            Policy::LabelableOnly => TraversalPolicy::LabelableOnly,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum TextOrJson {
    Text,
    Json,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum StatsFormat {
    Text,
    Json,
    Csv,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ScoreFileFormat {
    Csv,
    Hlps,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum VocabFormat {
    /// `index,mid,display_name` with header
    ClassIndex,
    /// FSD50K `vocabulary.csv`: headerless `index,display_name,mid`
    Fsd50k,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Print structural counts for an ontology.
    Validate {
        #[arg(long)]
        ontology: PathBuf,
        #[arg(long, value_enum, default_value = "text")]
        format: TextOrJson,
    },
    /// Propagate positive labels of a segments CSV up the ontology.
    PropagateLabels {
        #[arg(long)]
        ontology: PathBuf,
        #[arg(long)]
        class_index: PathBuf,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "through-all")]
        policy: Policy,
        /// Drop (and report) labels missing from the class index.
        #[arg(long)]
        lenient: bool,
        #[command(flatten)]
        threads: Threads,
    },
    /// Max-propagate model scores up the ontology.
    PropagateScores {
        #[arg(long)]
        ontology: PathBuf,
        /// Score file, CSV or HLPS (detected from content).
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Output format; defaults to csv for a .csv extension, hlps otherwise.
        #[arg(long, value_enum)]
        out_format: Option<ScoreFileFormat>,
        #[arg(long, value_enum, default_value = "through-all")]
        policy: Policy,
        #[command(flatten)]
        threads: Threads,
    },
    /// Summarize label changes between two segments CSVs.
    Stats {
        #[arg(long)]
        before: PathBuf,
        #[arg(long)]
        after: PathBuf,
        #[arg(long)]
        class_index: PathBuf,
        #[arg(long, value_enum, default_value = "text")]
        format: StatsFormat,
        #[arg(long)]
        lenient: bool,
        /// Write the report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Class-wise AP and mAP of scores against labels.
    Eval {
        #[arg(long)]
        scores: PathBuf,
        #[arg(long)]
        labels: PathBuf,
        #[arg(long)]
        class_index: PathBuf,
        /// Evaluate only these classes (e.g. the output of shared-classes).
        #[arg(long)]
        subset_class_index: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "text")]
        format: TextOrJson,
        #[arg(long)]
        lenient: bool,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        threads: Threads,
    },
    /// Write the classes shared by two vocabularies as a class-index CSV.
    SharedClasses {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "class-index")]
        a_format: VocabFormat,
        #[arg(long, value_enum, default_value = "class-index")]
        b_format: VocabFormat,
    },
    /// Generate a synthetic ontology, labels and scores.
    Synth {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 50)]
        nodes: usize,
        #[arg(long, default_value_t = 100)]
        clips: usize,
        #[arg(long, default_value_t = 4)]
        max_children: usize,
        #[arg(long, default_value_t = 0.2)]
        multi_parent_prob: f64,
        #[arg(long, default_value_t = 2.0)]
        density: f64,
        #[arg(long, default_value_t = 0.0)]
        abstract_prob: f64,
        /// Skip generating scores.hlps.
        #[arg(long)]
        no_scores: bool,
        #[arg(long)]
        out: PathBuf,
    },
}

/// A data error, already formatted with its file context.
#[derive(Debug)]
struct Failure(String);

fn fail(path: &Path, err: impl Display) -> Failure {
    Failure(format!("{}: {err}", path.display()))
}

fn read(path: &Path) -> Result<Vec<u8>, Failure> {
    std::fs::read(path).map_err(|e| fail(path, e))
}

/// Writes `bytes` to a temporary file next to `path`, then renames it.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

fn write_out(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    write_atomic(path, bytes).map_err(|e| fail(path, e))
}

fn load_ontology(path: &Path) -> Result<OntologyGraph, Failure> {
    OntologyGraph::parse(&read(path)?).map_err(|e| fail(path, e))
}

fn load_vocab(path: &Path, format: VocabFormat) -> Result<ClassVocabulary, Failure> {
    let raw = read(path)?;
    match format {
        VocabFormat::ClassIndex => ClassVocabulary::parse_class_index_csv(&raw),
        VocabFormat::Fsd50k => ClassVocabulary::parse_fsd50k_vocabulary_csv(&raw),
    }
    .map_err(|e| fail(path, e))
}

fn load_segments(
    path: &Path,
    vocab: &ClassVocabulary,
    lenient: bool,
    stderr: &mut dyn Write,
) -> Result<LabelMatrix, Failure> {
    let parsed = parse_segments_csv(&read(path)?, vocab, SegmentParseOptions { lenient })
        .map_err(|e| fail(path, e))?;
    if !parsed.dropped.is_empty() {
        let _ = writeln!(
            stderr,
            "{}: dropped {} labels with {} unknown classes",
            path.display(),
            parsed.dropped_total(),
            parsed.dropped.len()
        );
        for (mid, count) in &parsed.dropped {
            let _ = writeln!(stderr, "  {mid}: {count}");
        }
    }
    Ok(parsed.labels)
}

fn emit(out: Option<&Path>, bytes: &[u8], stdout: &mut dyn Write) -> Result<(), Failure> {
    match out {
        Some(path) => write_out(path, bytes),
        None => stdout
            .write_all(bytes)
            .map_err(|e| Failure(format!("stdout: {e}"))),
    }
}

/// Runs the CLI on `args` (including the program name) with the process's
/// standard streams.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_with(args, &mut stdout.lock(), &mut stderr.lock())
}

pub fn run_with<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let rendered = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = stdout.write_all(rendered.as_bytes());
                    EXIT_OK
                }
                _ => {
                    let _ = stderr.write_all(rendered.as_bytes());
                    EXIT_USAGE
                }
            };
        }
    };
    match execute(cli.command, stdout, stderr) {
        Ok(()) => EXIT_OK,
        Err(Failure(msg)) => {
            let _ = writeln!(stderr, "error: {msg}");
            EXIT_DATA
        }
    }
}

fn execute(command: Command, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<(), Failure> {
    match command {
        Command::Validate { ontology, format } => {
            let report = load_ontology(&ontology)?.validate();
            let text = match format {
                TextOrJson::Text => report.to_text(),
                TextOrJson::Json => {
                    serde_json::to_string_pretty(&report).expect("report serialization") + "\n"
                }
            };
            emit(None, text.as_bytes(), stdout)
        }

        Command::PropagateLabels {
            ontology,
            class_index,
            input,
            out,
            policy,
            lenient,
            threads,
        } => {
            let graph = load_ontology(&ontology)?;
            let vocab = load_vocab(&class_index, VocabFormat::ClassIndex)?;
            let labels = load_segments(&input, &vocab, lenient, stderr)?;
            let pmap = PropagationMap::build(&graph, policy.into(), Some(&vocab))
                .map_err(|e| fail(&class_index, e))?;
            let propagated = propagate_labels_threaded(&labels, &pmap, &vocab, threads.get())
                .map_err(|e| fail(&input, e))?;
            write_out(&out, &write_segments_csv(&propagated))
        }

        Command::PropagateScores {
            ontology,
            input,
            out,
            out_format,
            policy,
            threads,
        } => {
            let graph = load_ontology(&ontology)?;
            let raw = read(&input)?;
            let scores = read_scores(&raw, ScoreFormat::sniff(&raw)).map_err(|e| fail(&input, e))?;
            let propagated =
                propagate_scores_threaded(&scores, &graph, policy.into(), scores.vocab(), threads.get())
                    .map_err(|e| fail(&input, e))?;
            let format = match out_format {
                Some(ScoreFileFormat::Csv) => ScoreFormat::Csv,
                Some(ScoreFileFormat::Hlps) => ScoreFormat::Hlps,
                None => ScoreFormat::from_path(&out),
            };
            let bytes = write_scores(&propagated, format).map_err(|e| fail(&out, e))?;
            write_out(&out, &bytes)
        }

        Command::Stats {
            before,
            after,
            class_index,
            format,
            lenient,
            out,
        } => {
            let vocab = load_vocab(&class_index, VocabFormat::ClassIndex)?;
            let b = load_segments(&before, &vocab, lenient, stderr)?;
            let a = load_segments(&after, &vocab, lenient, stderr)?;
            let report = diff_label_matrices(&b, &a).map_err(|e| fail(&after, e))?;
            let format = match format {
                StatsFormat::Text => ReportFormat::Text,
                StatsFormat::Json => ReportFormat::Json,
                StatsFormat::Csv => ReportFormat::Csv,
            };
            emit(out.as_deref(), &report.render(format), stdout)
        }

        Command::Eval {
            scores,
            labels,
            class_index,
            subset_class_index,
            format,
            lenient,
            out,
            threads,
        } => {
            let raw = read(&scores)?;
            let score_matrix = read_scores(&raw, ScoreFormat::sniff(&raw)).map_err(|e| fail(&scores, e))?;
            let vocab = load_vocab(&class_index, VocabFormat::ClassIndex)?;
            let label_matrix = load_segments(&labels, &vocab, lenient, stderr)?;
            let subset = subset_class_index
                .as_deref()
                .map(|p| load_vocab(p, VocabFormat::ClassIndex))
                .transpose()?;
            let report =
                mean_average_precision_threaded(&score_matrix, &label_matrix, subset.as_ref(), threads.get())
                    .map_err(|e| fail(&scores, e))?;
            let text = match format {
                TextOrJson::Text => report.to_text(),
                TextOrJson::Json => report.to_json(),
            };
            emit(out.as_deref(), text.as_bytes(), stdout)
        }

        Command::SharedClasses {
            a,
            b,
            out,
            a_format,
            b_format,
        } => {
            let va = load_vocab(&a, a_format)?;
            let vb = load_vocab(&b, b_format)?;
            let shared = restrict_to_shared_vocab(&va, &vb);
            write_out(&out, shared.to_class_index_csv().as_bytes())?;
            let _ = writeln!(stderr, "{} shared classes", shared.len());
            Ok(())
        }

        Command::Synth {
            seed,
            nodes,
            clips,
            max_children,
            multi_parent_prob,
            density,
            abstract_prob,
            no_scores,
            out,
        } => {
            let cfg = SynthConfig {
                seed,
                n_nodes: nodes,
                max_children,
                multi_parent_prob,
                n_clips: clips,
                label_density: density,
                abstract_prob,
            };
            cfg.validate().map_err(|e| Failure(e.to_string()))?;
            std::fs::create_dir_all(&out).map_err(|e| fail(&out, e))?;
            let graph = gen_ontology(&cfg);
            let labels = gen_labels(&cfg, &graph);
            let config_json = serde_json::to_string_pretty(&cfg).expect("config serialization") + "\n";
            write_out(&out.join("config.json"), config_json.as_bytes())?;
            write_out(&out.join("ontology.json"), graph.to_json().as_bytes())?;
            write_out(
                &out.join("class_labels_indices.csv"),
                labelable_vocab(&graph).to_class_index_csv().as_bytes(),
            )?;
            write_out(&out.join("segments.csv"), &write_segments_csv(&labels))?;
            if no_scores {
                return Ok(());
            }
            let scores = gen_scores(&cfg, &graph);
            let hlps = write_scores(&scores, ScoreFormat::Hlps).map_err(|e| Failure(e.to_string()))?;
            write_out(&out.join("scores.hlps"), &hlps)
        }
    }
}
