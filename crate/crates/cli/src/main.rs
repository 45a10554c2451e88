mod interactive;

use std::fs::{self, File};
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use ner_audit_core::corpus::{parse_corpus, serialize_corpus, ColumnFormat, CorpusError, Strictness};
use ner_audit_core::detector::{cross_validated_flags, flag_partition, mention_type_pairs, pair_candidates, Profile};
use ner_audit_core::diff::diff_corpora;
use ner_audit_core::rules::{scan_all, DecisionLog, Replayer, RuleSet};
use ner_audit_core::score::{compare_reports, render_deltas, score, LabeledDelta, ScoreReport};
use ner_audit_core::{compare, Candidate, Corpus, EditProposal, EntityType};
use ner_audit_service::{Session, SessionConfig};
use serde::Serialize;

#[derive(Parser)]
#[command(name = "ner-audit", version, about = "Audit BIO-tagged NER corpora for annotation errors")]
struct Cli {
    /// Column layout, e.g. `token=0,tag=last,sep=tab,doc=#`.
    #[arg(long, global = true, default_value = "token=0,tag=last,sep=whitespace")]
    format: ColumnFormat,
    /// Repair BIO violations instead of rejecting the input.
    #[arg(long, global = true)]
    repair: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate a corpus file and print violations as JSON lines.
    ParseCheck { file: PathBuf },
    /// Flag suspicious mentions from token-frequency profiles.
    Detect(DetectArgs),
    /// Count ⟨surface, type⟩ mention pairs (TSV on stdout).
    Pairs(PairsArgs),
    /// Guideline rules: scan, apply a decision log, or review in the terminal.
    Rules {
        #[command(subcommand)]
        command: RulesCommand,
    },
    /// Mention-level comparison of two versions of a corpus.
    Diff(DiffArgs),
    /// Exact-match span scoring, or comparison of two scores.
    Score(ScoreArgs),
    /// Run the review HTTP service.
    Serve(ServeArgs),
}

#[derive(Args)]
struct DetectArgs {
    #[arg(long)]
    train: PathBuf,
    /// Partition to flag against the whole training profile.
    #[arg(long, conflicts_with = "cv", required_unless_present = "cv")]
    target: Option<PathBuf>,
    /// Flag the training partition itself with k-fold cross-validation.
    #[arg(long)]
    cv: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct PairsArgs {
    #[arg(long = "in")]
    input: PathBuf,
    /// Comma-separated entity types to keep.
    #[arg(long, value_delimiter = ',')]
    types: Option<Vec<String>>,
    #[arg(long)]
    top: Option<usize>,
    /// Also write the listed pairs as review candidates.
    #[arg(long)]
    candidates_out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum RulesCommand {
    /// Write edit proposals (and review candidates) for a corpus.
    Scan {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Comma-separated rule ids; all built-in rules by default.
        #[arg(long, value_delimiter = ',')]
        rules: Option<Vec<String>>,
        /// Mentions a rule matched but would not edit on its own.
        #[arg(long)]
        review_out: Option<PathBuf>,
    },
    /// Replay a decision log and write the corrected corpus.
    Apply {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        proposals: PathBuf,
        #[arg(long)]
        log: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        report: Option<PathBuf>,
        /// Candidate files whose ids may appear in the log.
        #[arg(long)]
        candidates: Vec<PathBuf>,
    },
    /// Review pending proposals one by one on the terminal.
    Interactive {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        proposals: PathBuf,
        #[arg(long)]
        log: PathBuf,
        #[arg(long, default_value = "reviewer")]
        actor: String,
    },
}

#[derive(Args)]
struct DiffArgs {
    #[arg(long)]
    old: PathBuf,
    #[arg(long)]
    new: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also print the category and per-type tables.
    #[arg(long)]
    table: bool,
}

#[derive(Args)]
#[command(args_conflicts_with_subcommands = true)]
struct ScoreArgs {
    #[command(subcommand)]
    compare: Option<ScoreCommand>,
    #[arg(long)]
    gold: Option<PathBuf>,
    #[arg(long)]
    pred: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum ScoreCommand {
    /// Delta and error reduction between two score files or two F1 values.
    Compare {
        #[arg(long, required_unless_present = "old_f1")]
        old: Option<PathBuf>,
        #[arg(long, required_unless_present = "new_f1")]
        new: Option<PathBuf>,
        #[arg(long, conflicts_with = "old")]
        old_f1: Option<f64>,
        #[arg(long, conflicts_with = "new")]
        new_f1: Option<f64>,
        #[arg(long)]
        per_type: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct ServeArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    candidates: Option<PathBuf>,
    #[arg(long)]
    proposals: Option<PathBuf>,
    #[arg(long)]
    log: PathBuf,
    #[arg(long, default_value_t = 8640)]
    port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    host: std::net::IpAddr,
    /// Directory for corrected.conll and report.json; next to the corpus by default.
    #[arg(long)]
    export_dir: Option<PathBuf>,
    /// Built review UI assets to serve at `/`.
    #[arg(long)]
    static_dir: Option<PathBuf>,
    #[arg(long, default_value = "reviewer")]
    actor: String,
}

fn open(path: &Path) -> Result<BufReader<File>> {
    Ok(BufReader::new(File::open(path).with_context(|| format!("cannot open {}", path.display()))?))
}

fn load(path: &Path, fmt: &ColumnFormat) -> Result<Corpus> {
    let (corpus, violations) = parse_corpus(open(path)?, fmt).with_context(|| format!("cannot parse {}", path.display()))?;
    if !violations.is_empty() {
        eprintln!("{}: repaired {} violation(s)", path.display(), violations.len());
    }
    Ok(corpus)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    Ok(BufWriter::new(File::create(path).with_context(|| format!("cannot create {}", path.display()))?))
}

fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<()> {
    let mut w = create(path)?;
    for item in items {
        serde_json::to_writer(&mut w, item)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

fn read_jsonl<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let mut out = Vec::new();
    for (i, line) in open(path)?.lines().enumerate() {
        let line = line?;
        if !line.trim().is_empty() {
            out.push(serde_json::from_str(&line).with_context(|| format!("{}:{}", path.display(), i + 1))?);
        }
    }
    Ok(out)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

fn parse_check(file: &Path, fmt: &ColumnFormat) -> Result<ExitCode> {
    let (violations, failed) = match parse_corpus(open(file)?, fmt) {
        Ok((_, v)) => (v, false),
        Err(CorpusError::Invalid(v)) => (v, true),
        Err(e) => return Err(e.into()),
    };
    let mut out = io::stdout().lock();
    for v in &violations {
        serde_json::to_writer(&mut out, v)?;
        out.write_all(b"\n")?;
    }
    Ok(if failed { ExitCode::FAILURE } else { ExitCode::SUCCESS })
}

fn detect(a: &DetectArgs, fmt: &ColumnFormat) -> Result<()> {
    let train = load(&a.train, fmt)?;
    let candidates = match (&a.target, a.cv) {
        (Some(target), _) => flag_partition(&load(target, fmt)?, &Profile::build(&train))?,
        (None, Some(k)) => cross_validated_flags(&train, k, a.seed)?,
        (None, None) => bail!("either --target or --cv is required"),
    };
    write_jsonl(&a.out, &candidates)?;
    let occurrences: usize = candidates.iter().map(|c| c.occurrences.len()).sum();
    eprintln!("{} candidates ({occurrences} occurrences) written to {}", candidates.len(), a.out.display());
    Ok(())
}

fn pairs(a: &PairsArgs, fmt: &ColumnFormat) -> Result<()> {
    let corpus = load(&a.input, fmt)?;
    let types: Option<Vec<EntityType>> = a.types.as_ref().map(|ts| ts.iter().map(|t| EntityType::new(t.trim())).collect());
    let mut list = mention_type_pairs(&corpus, types.as_deref())?;
    if let Some(n) = a.top {
        list.truncate(n);
    }
    let mut out = io::stdout().lock();
    for p in &list {
        writeln!(out, "{}\t{}\t{}", p.surface, p.etype, p.count)?;
    }
    if let Some(path) = &a.candidates_out {
        write_jsonl(path, &pair_candidates(&corpus, &list)?)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct ApplyReport<'a> {
    replay: &'a ner_audit_core::rules::ReplayReport,
    diff: &'a ner_audit_core::DiffReport,
}

fn rules(cmd: &RulesCommand, fmt: &ColumnFormat) -> Result<()> {
    match cmd {
        RulesCommand::Scan { input, out, rules, review_out } => {
            let corpus = load(input, fmt)?;
            let set = match rules {
                Some(ids) => RuleSet::from_ids(ids)?,
                None => RuleSet::builtin(),
            };
            let found = scan_all(&corpus, &set)?;
            write_jsonl(out, &found.proposals)?;
            if let Some(path) = review_out {
                write_jsonl(path, &found.review)?;
            }
            eprintln!("{} proposals, {} review items", found.proposals.len(), found.review.len());
        }
        RulesCommand::Apply { input, proposals, log, out, report, candidates } => {
            let corpus = load(input, fmt)?;
            let proposals: Vec<EditProposal> = read_jsonl(proposals)?;
            let mut review_ids = Vec::new();
            for path in candidates {
                review_ids.extend(read_jsonl::<Candidate>(path)?.into_iter().map(|c| c.id));
            }
            let decisions = ner_audit_core::rules::read_decisions(open(log)?)?;
            let (fixed, replay) = Replayer::new(&proposals).with_review_ids(review_ids).run(&corpus, &decisions)?;
            let strict = fmt.clone().with_strictness(Strictness::Strict);
            let mut w = create(out)?;
            w.write_all(serialize_corpus(&fixed, &strict).as_bytes())?;
            w.flush()?;
            let diff = diff_corpora(&corpus, &fixed)?;
            if let Some(path) = report {
                write_json(path, &ApplyReport { replay: &replay, diff: &diff })?;
            }
            for s in &replay.skipped {
                eprintln!("skipped {}: {}", s.proposal_id, s.reason);
            }
            eprintln!("{} edits applied ({} already present, {} skipped)", replay.applied, replay.already_applied, replay.skipped.len());
        }
        RulesCommand::Interactive { input, proposals, log, actor } => {
            let corpus = load(input, fmt)?;
            let proposals: Vec<EditProposal> = read_jsonl(proposals)?;
            let log = DecisionLog::open(log)?;
            interactive::run(&corpus, &proposals, &log, actor, io::stdin().lock(), io::stdout().lock())?;
        }
    }
    Ok(())
}

fn diff(a: &DiffArgs, fmt: &ColumnFormat) -> Result<()> {
    let report = diff_corpora(&load(&a.old, fmt)?, &load(&a.new, fmt)?)?;
    if let Some(path) = &a.out {
        write_json(path, &report)?;
    }
    if a.table || a.out.is_none() {
        print!("{}", report.render_tables());
    }
    Ok(())
}

fn score_cmd(a: &ScoreArgs, fmt: &ColumnFormat) -> Result<()> {
    if let Some(ScoreCommand::Compare { old, new, old_f1, new_f1, per_type, out }) = &a.compare {
        let rows: Vec<LabeledDelta> = match (old, new, old_f1, new_f1) {
            (_, _, Some(o), Some(n)) => vec![LabeledDelta { label: "overall".into(), delta: compare(*o, *n)? }],
            (Some(o), Some(n), None, None) => {
                let old: ScoreReport = serde_json::from_reader(open(o)?).with_context(|| format!("{}", o.display()))?;
                let new: ScoreReport = serde_json::from_reader(open(n)?).with_context(|| format!("{}", n.display()))?;
                compare_reports(&old, &new, *per_type)?
            }
            _ => bail!("give --old/--new score files or --old-f1/--new-f1 values"),
        };
        print!("{}", render_deltas(&rows));
        if let Some(path) = out {
            write_json(path, &rows)?;
        }
        return Ok(());
    }
    let (Some(gold), Some(pred)) = (&a.gold, &a.pred) else {
        bail!("score needs --gold and --pred");
    };
    let report = score(&load(gold, fmt)?, &load(pred, fmt)?)?;
    print!("{}", report.render_table());
    if let Some(path) = &a.out {
        write_json(path, &report)?;
    }
    Ok(())
}

fn serve(a: &ServeArgs, fmt: &ColumnFormat) -> Result<()> {
    let mut cfg = SessionConfig::new(&a.corpus, &a.log);
    cfg.format = fmt.clone();
    cfg.candidates = a.candidates.clone();
    cfg.proposals = a.proposals.clone();
    cfg.actor = a.actor.clone();
    if let Some(dir) = &a.export_dir {
        cfg.export_dir = dir.clone();
    }
    let session = Session::load(cfg)?;
    let addr = SocketAddr::new(a.host, a.port);
    eprintln!("serving {} candidates on http://{addr}/api/v1", session.candidates().len());
    let rt = tokio::runtime::Builder::new_multi_thread().enable_all().build()?;
    rt.block_on(ner_audit_service::serve(session, addr, a.static_dir.clone())).with_context(|| format!("cannot serve on {addr}"))?;
    Ok(())
}

fn run(cli: Cli) -> Result<ExitCode> {
    let mut fmt = cli.format;
    if cli.repair {
        fmt.strictness = Strictness::Repair;
    }
    match &cli.command {
        Command::ParseCheck { file } => return parse_check(file, &fmt),
        Command::Detect(a) => detect(a, &fmt)?,
        Command::Pairs(a) => pairs(a, &fmt)?,
        Command::Rules { command } => rules(command, &fmt)?,
        Command::Diff(a) => diff(a, &fmt)?,
        Command::Score(a) => score_cmd(a, &fmt)?,
        Command::Serve(a) => serve(a, &fmt)?,
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
