//! The `iacsmell` command line.

mod records;

use std::collections::{BTreeMap, BTreeSet};
use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Duration;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::dataset::{
    self, build_prompt, dedup_files, dedup_snippets, label_oracle_detections, make_splits, mine_candidates,
    parse_teacher_response, read_instances, write_instances, SplitSpec,
};
use crate::eval::{self, load_oracle, CorpusFiles};
use crate::ir::{line_count, Technology};
use crate::parsers::load_corpus;
use crate::pruner::{
    prune, rank_findings, train_builtin, BuiltinModel, BuiltinScorer, ExternalScorer, PassthroughScorer, Scorer,
    TargetedSmellSet, TrainParams, DEFAULT_BATCH_SIZE,
};
use crate::rules::{detect, RuleConfig, SmellType};

pub use records::{read_records, Record, Status};

pub const EXIT_CLEAN: i32 = 0;
pub const EXIT_FINDINGS: i32 = 1;
pub const EXIT_ERROR: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "iacsmell", version, about = "Security smell detection for Puppet, Ansible and Chef")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Detect, prune and rank smells under a directory or file.
    Analyze(AnalyzeArgs),
    /// Score predictions against a line-level oracle.
    Eval(EvalArgs),
    /// Build pseudo-label datasets.
    #[command(subcommand)]
    Dataset(DatasetCommand),
    /// Train the builtin false-positive classifier.
    TrainBuiltin(TrainArgs),
}

#[derive(Debug, Clone, PartialEq)]
pub enum ScorerSpec {
    Passthrough,
    Builtin(PathBuf),
    External(String),
}

impl FromStr for ScorerSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "passthrough" {
            Ok(ScorerSpec::Passthrough)
        } else if let Some(p) = s.strip_prefix("builtin:").filter(|p| !p.is_empty()) {
            Ok(ScorerSpec::Builtin(PathBuf::from(p)))
        } else if let Some(c) = s.strip_prefix("external:").filter(|c| !c.trim().is_empty()) {
            Ok(ScorerSpec::External(c.to_string()))
        } else {
            Err(format!("expected passthrough, builtin:<model> or external:<command>, got '{s}'"))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Table,
    Records,
}

fn parse_threshold(s: &str) -> Result<f64, String> {
    let t: f64 = s.parse().map_err(|_| format!("'{s}' is not a number"))?;
    if (0.0..=1.0).contains(&t) {
        Ok(t)
    } else {
        Err(format!("threshold {t} is outside [0, 1]"))
    }
}

#[derive(Debug, Args)]
pub struct RuleArgs {
    /// Rule keyword configuration; defaults to the built-in lists.
    #[arg(long, env = "IACSMELL_CONFIG")]
    pub config: Option<PathBuf>,
}

impl RuleArgs {
    fn load(&self) -> Result<RuleConfig> {
        match &self.config {
            Some(p) => Ok(RuleConfig::load(p)?),
            None => Ok(RuleConfig::default()),
        }
    }
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    pub root: PathBuf,
    /// Parse every file as this technology instead of sniffing.
    #[arg(long)]
    pub tech: Option<Technology>,
    #[command(flatten)]
    pub rules: RuleArgs,
    #[arg(long, default_value = "passthrough")]
    pub scorer: ScorerSpec,
    #[arg(long, default_value_t = 0.5, value_parser = parse_threshold)]
    pub fp_threshold: f64,
    #[arg(long, value_enum, default_value_t = OutputFormat::Table)]
    pub format: OutputFormat,
    /// List dropped findings in table output.
    #[arg(long)]
    pub show_dropped: bool,
    /// Seconds to wait for an external scorer reply.
    #[arg(long, default_value_t = 30)]
    pub scorer_timeout: u64,
    #[arg(long, default_value_t = DEFAULT_BATCH_SIZE)]
    pub batch_size: usize,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub oracle: PathBuf,
    /// Records produced by `analyze --format records`.
    #[arg(long)]
    pub predictions: PathBuf,
    /// The analyzed corpus, used for technologies and line counts.
    #[arg(long)]
    pub corpus: PathBuf,
    /// Override the line count of a single-technology corpus.
    #[arg(long)]
    pub total_loc: Option<usize>,
    #[arg(long)]
    pub tech: Option<Technology>,
    /// Write the summary as JSON instead of tables.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Subcommand)]
pub enum DatasetCommand {
    /// Emit unlabeled instances for targeted findings in qualifying files.
    Mine {
        corpus: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        rules: RuleArgs,
        #[arg(long, default_value_t = dataset::DEFAULT_MIN_WARNINGS)]
        min_warnings: usize,
        #[arg(long, default_value_t = dataset::DEFAULT_MAX_LINES)]
        max_lines: usize,
    },
    /// Drop candidate files whose bytes equal an oracle file or an earlier candidate.
    DedupFiles {
        #[arg(long, required = true, num_args = 1..)]
        candidates: Vec<PathBuf>,
        #[arg(long, num_args = 0..)]
        oracle: Vec<PathBuf>,
    },
    /// Remove train/val snippets already present in a higher-priority split.
    Dedup {
        #[arg(long)]
        train: PathBuf,
        #[arg(long)]
        val: PathBuf,
        #[arg(long)]
        oracle: Option<PathBuf>,
        #[arg(long)]
        out_train: PathBuf,
        #[arg(long)]
        out_val: PathBuf,
    },
    /// Stratified train/validation split with backfilling.
    Split {
        input: PathBuf,
        #[arg(long)]
        out_train: PathBuf,
        #[arg(long)]
        out_val: PathBuf,
        #[arg(long)]
        oracle: Option<PathBuf>,
        /// Per-stratum total, as `Technology:Smell=N`; repeatable.
        #[arg(long = "target")]
        targets: Vec<String>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Label analyzer findings on a corpus by exact oracle match.
    Label {
        corpus: PathBuf,
        #[arg(long)]
        oracle: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        rules: RuleArgs,
    },
    /// Write the teacher prompt of each instance as JSON lines `{id, prompt}`.
    Prompt {
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Attach teacher verdicts (JSON lines `{id, response}`) to instances.
    Ingest {
        input: PathBuf,
        #[arg(long)]
        responses: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write the generated pseudo-label set.
    Synth {
        #[arg(long)]
        out_train: PathBuf,
        #[arg(long)]
        out_val: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub train: PathBuf,
    #[arg(long)]
    pub val: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = TrainParams::default().epochs)]
    pub epochs: usize,
    #[arg(long, default_value_t = TrainParams::default().learning_rate)]
    pub learning_rate: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

/// Parses `args` and runs the command, returning the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { EXIT_CLEAN };
            let rendered = e.render().to_string();
            let _ = if e.use_stderr() { err.write_all(rendered.as_bytes()) } else { out.write_all(rendered.as_bytes()) };
            return code;
        }
    };
    match execute(cli.command, out, err) {
        Ok(code) => code,
        Err(e) => {
            // a closed stdout (`| head`) is not worth reporting
            let broken_pipe = e
                .downcast_ref::<std::io::Error>()
                .is_some_and(|io| io.kind() == std::io::ErrorKind::BrokenPipe);
            if !broken_pipe {
                let _ = writeln!(err, "error: {e:#}");
            }
            EXIT_ERROR
        }
    }
}

fn execute(command: Command, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    match command {
        Command::Analyze(a) => analyze(&a, out, err),
        Command::Eval(a) => evaluate(&a, out),
        Command::Dataset(d) => dataset_cmd(d, out, err).map(|_| EXIT_CLEAN),
        Command::TrainBuiltin(a) => train(&a, out).map(|_| EXIT_CLEAN),
    }
}

fn open_scorer(spec: &ScorerSpec, timeout: Duration) -> Result<Box<dyn Scorer>> {
    Ok(match spec {
        ScorerSpec::Passthrough => Box::new(PassthroughScorer),
        ScorerSpec::Builtin(path) => Box::new(BuiltinScorer::new(BuiltinModel::load(path)?)),
        ScorerSpec::External(cmd) => Box::new(ExternalScorer::spawn(cmd, timeout)?),
    })
}

fn analyze(a: &AnalyzeArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    let config = a.rules.load()?;
    let corpus = load_corpus(&a.root, a.tech)?;
    for (file, reason) in &corpus.failures {
        writeln!(err, "warning: skipped {file}: {reason}")?;
    }
    let findings = detect(&corpus.project, &config);
    let targeted = TargetedSmellSet::default();
    let mut scorer = open_scorer(&a.scorer, Duration::from_secs(a.scorer_timeout))?;
    let outcome = prune(&findings, &corpus.sources, scorer.as_mut(), &targeted, a.fp_threshold, a.batch_size)?;
    let kept = rank_findings(outcome.kept);
    let dropped = rank_findings(outcome.dropped);

    match a.format {
        OutputFormat::Records => {
            for (sf, status) in kept
                .iter()
                .map(|s| (s, Status::Kept))
                .chain(dropped.iter().map(|s| (s, Status::Dropped)))
            {
                let line = serde_json::to_string(&Record::from_scored(sf, status))?;
                writeln!(out, "{line}")?;
            }
        }
        OutputFormat::Table => {
            if !kept.is_empty() {
                write_table(out, &kept)?;
            }
            if a.show_dropped && !dropped.is_empty() {
                writeln!(out, "dropped:")?;
                write_table(out, &dropped)?;
            }
        }
    }
    writeln!(err, "{} kept, {} dropped", kept.len(), dropped.len())?;
    Ok(if kept.is_empty() { EXIT_CLEAN } else { EXIT_FINDINGS })
}

fn write_table(out: &mut dyn Write, rows: &[crate::pruner::ScoredFinding]) -> std::io::Result<()> {
    let locations: Vec<String> = rows
        .iter()
        .map(|s| format!("{}:{}", s.finding.file_path, s.finding.line))
        .collect();
    let width = locations.iter().map(String::len).max().unwrap_or(0).max(8);
    writeln!(out, "{:>4}  {:<10}  {:<18}  {:<width$}  rationale", "rank", "confidence", "smell", "location")?;
    for (i, (s, loc)) in rows.iter().zip(&locations).enumerate() {
        writeln!(
            out,
            "{:>4}  {:<10.3}  {:<18}  {:<width$}  {}",
            i + 1,
            s.smell_confidence,
            s.finding.smell.name(),
            loc,
            s.finding.rationale
        )?;
    }
    Ok(())
}

fn evaluate(a: &EvalArgs, out: &mut dyn Write) -> Result<i32> {
    let oracle = load_oracle(&a.oracle)?;
    let records = read_records(&a.predictions)?;
    let corpus = load_corpus(&a.corpus, a.tech)?;
    let mut files = CorpusFiles::default();
    for (path, text) in &corpus.sources {
        files.files.insert(path.clone(), (corpus.technologies[path], line_count(text)));
    }
    if let Some((path, _)) = corpus.failures.first() {
        bail!("corpus file {path} could not be parsed");
    }

    let kept: Vec<_> = records
        .into_iter()
        .filter(|r| r.status == Status::Kept)
        .map(|r| r.into_scored(&files))
        .collect::<Result<_>>()?;
    let ranking: Vec<_> = rank_findings(kept).into_iter().map(|s| s.finding).collect();

    let mut summary = eval::summarize(&ranking, &oracle, &files);
    if let Some(total) = a.total_loc {
        if summary.technologies.len() != 1 {
            bail!("--total-loc needs a single-technology corpus");
        }
        if total == 0 {
            bail!("--total-loc must be positive");
        }
        let tech = summary.technologies[0].technology;
        let preds: Vec<_> = ranking.iter().filter(|f| files.technology_of(&f.file_path).unwrap_or(f.technology) == tech).collect();
        let t = &mut summary.technologies[0];
        t.total_loc = total;
        t.effort_at_60_recall = eval::effort_at_recall(preds.iter().copied(), &oracle, 0.60, total).ok();
        t.f1_at_1_percent_loc = eval::f1_at_loc(preds.iter().copied(), &oracle, 0.01, total).ok();
    }

    let counts = eval::match_findings(&ranking, &oracle);
    let (clean, smelly) = files.partition_clean(&oracle);
    let rows = eval::per_smell_report(&counts, &clean, &smelly, &ranking);
    if a.json {
        let value = serde_json::json!({ "summary": summary, "per_smell": rows });
        writeln!(out, "{}", serde_json::to_string_pretty(&value)?)?;
    } else {
        out.write_all(eval::summary_table(&summary).as_bytes())?;
        writeln!(out)?;
        out.write_all(eval::report_table(&rows).as_bytes())?;
    }
    Ok(EXIT_CLEAN)
}

fn parse_target(s: &str) -> Result<((Technology, SmellType), usize)> {
    let (stratum, n) = s.split_once('=').ok_or_else(|| anyhow!("target '{s}' lacks '=N'"))?;
    let (tech, smell) = stratum
        .split_once(':')
        .ok_or_else(|| anyhow!("target '{s}' should look like Technology:Smell=N"))?;
    let tech = Technology::from_str(tech.trim())?;
    let smell = SmellType::from_str(smell.trim())?;
    let n = n.trim().parse().with_context(|| format!("bad count in target '{s}'"))?;
    Ok(((tech, smell), n))
}

fn read_optional(path: Option<&Path>) -> Result<Vec<dataset::Instance>> {
    Ok(match path {
        Some(p) => read_instances(p)?,
        None => Vec::new(),
    })
}

fn dataset_cmd(cmd: DatasetCommand, out: &mut dyn Write, err: &mut dyn Write) -> Result<()> {
    match cmd {
        DatasetCommand::Mine { corpus, out: path, rules, min_warnings, max_lines } => {
            let config = rules.load()?;
            let targeted: BTreeSet<SmellType> = TargetedSmellSet::default().0;
            let mined = mine_candidates(&corpus, &config, &targeted, min_warnings, max_lines)?;
            for (file, reason) in &mined.warnings {
                writeln!(err, "warning: skipped {file}: {reason}")?;
            }
            write_instances(&path, &mined.instances)?;
            writeln!(out, "{} instances", mined.instances.len())?;
        }
        DatasetCommand::DedupFiles { candidates, oracle } => {
            for p in dedup_files(&candidates, &oracle)? {
                writeln!(out, "{}", p.display())?;
            }
        }
        DatasetCommand::Dedup { train, val, oracle, out_train, out_val } => {
            let oracle = read_optional(oracle.as_deref())?;
            let d = dedup_snippets(read_instances(&train)?, read_instances(&val)?, &oracle);
            write_instances(&out_train, &d.train)?;
            write_instances(&out_val, &d.val)?;
            writeln!(
                out,
                "train {} (removed {}), val {} (removed {})",
                d.train.len(),
                d.removed_train.len(),
                d.val.len(),
                d.removed_val.len()
            )?;
        }
        DatasetCommand::Split { input, out_train, out_val, oracle, targets, seed } => {
            let mut spec = SplitSpec::default();
            for t in &targets {
                let (stratum, n) = parse_target(t)?;
                spec.per_technology_targets.insert(stratum, n);
            }
            let oracle = read_optional(oracle.as_deref())?;
            let split = make_splits(&read_instances(&input)?, &spec, seed, &oracle);
            write_instances(&out_train, &split.train)?;
            write_instances(&out_val, &split.val)?;
            writeln!(out, "train {}, val {}, removed {}", split.train.len(), split.val.len(), split.removed.len())?;
            for s in &split.shortfalls {
                writeln!(
                    err,
                    "shortfall {}:{} train {} val {}",
                    s.technology, s.smell, s.train_missing, s.val_missing
                )?;
            }
        }
        DatasetCommand::Label { corpus, oracle, out: path, rules } => {
            let config = rules.load()?;
            let loaded = load_corpus(&corpus, None)?;
            let findings = detect(&loaded.project, &config);
            let labeled = label_oracle_detections(&findings, &load_oracle(&oracle)?, &loaded.sources);
            write_instances(&path, &labeled)?;
            writeln!(out, "{} instances", labeled.len())?;
        }
        DatasetCommand::Prompt { input, out: path } => {
            let mut text = String::new();
            for inst in read_instances(&input)? {
                let rec = serde_json::json!({ "id": inst.id, "prompt": build_prompt(&inst) });
                text.push_str(&serde_json::to_string(&rec)?);
                text.push('\n');
            }
            fs::write(&path, text).with_context(|| format!("cannot write {}", path.display()))?;
        }
        DatasetCommand::Ingest { input, responses, out: path } => {
            let text = fs::read_to_string(&responses).with_context(|| format!("cannot read {}", responses.display()))?;
            let mut verdicts = BTreeMap::new();
            for (n, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
                let v: serde_json::Value =
                    serde_json::from_str(line).with_context(|| format!("{} line {}", responses.display(), n + 1))?;
                let (Some(id), Some(body)) = (v["id"].as_str(), v["response"].as_str()) else {
                    bail!("{} line {}: expected string fields id and response", responses.display(), n + 1);
                };
                verdicts.insert(id.to_string(), body.to_string());
            }
            let mut labeled = Vec::new();
            let mut unparseable = 0;
            for inst in read_instances(&input)? {
                let Some(body) = verdicts.get(&inst.id) else { continue };
                match parse_teacher_response(body) {
                    Ok(label) => labeled.push(inst.with_label(label)),
                    Err(e) => {
                        unparseable += 1;
                        writeln!(err, "warning: {}: {e}", inst.id)?;
                    }
                }
            }
            write_instances(&path, &labeled)?;
            writeln!(out, "{} labeled, {} unparseable", labeled.len(), unparseable)?;
        }
        DatasetCommand::Synth { out_train, out_val, seed } => {
            let (train, val) = dataset::synthetic::pseudo_label_set(seed);
            write_instances(&out_train, &train)?;
            write_instances(&out_val, &val)?;
            writeln!(out, "train {}, val {}", train.len(), val.len())?;
        }
    }
    Ok(())
}

fn train(a: &TrainArgs, out: &mut dyn Write) -> Result<()> {
    let train = read_instances(&a.train)?;
    let val = read_optional(a.val.as_deref())?;
    let params = TrainParams {
        epochs: a.epochs,
        learning_rate: a.learning_rate,
        seed: a.seed,
    };
    let report = train_builtin(&train, &val, params)?;
    report.model.save(&a.out)?;
    writeln!(out, "best epoch {} validation f1 {:.4}", report.best_epoch, report.best_val_f1)?;
    Ok(())
}
