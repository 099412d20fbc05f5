use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use debunk_core::config::Objective;
use debunk_core::data::{
    label_counts, load_claims, load_corpus, read_jsonl, segment_corpus, write_claims, write_jsonl, Claim, ClaimFormat,
};
use debunk_core::debunker::{calibrate_and_classify, score_claims, select_evidence, ClaimScore, PipelineRun, Verdict};
use debunk_core::eval::{
    ablation_filtering, emit_ablation_report, emit_report, file_checksum, write_run_artifacts, DatasetInfo,
    ReportInputs,
};
use debunk_core::filter::{aggregate_evidence, audit_records, EvidenceSet, FilterConfig};
use debunk_core::lm::{
    self, BridgeEndpoint, ExternalScorer, GroundingConfig, NgramScorer, Scorer, ScorerKind, Smoothing,
};
use debunk_core::retrieval::TfIdfIndex;
use debunk_core::{CalibrationResult, Error, RunConfig};
use serde::{Deserialize, Serialize};

#[derive(Parser)]
#[command(name = "debunk", version, about = "Flag false claims by the perplexity of an evidence-grounded language model")]
struct Cli {
    /// JSON run configuration; explicit flags take precedence over it.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Cap on worker threads.
    #[arg(long, global = true, value_name = "N")]
    jobs: Option<usize>,

    /// Log more (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Load claims and corpus, report label counts, write normalized copies.
    Ingest {
        #[command(flatten)]
        inputs: InputArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Build or query a sentence-level TF-IDF index.
    #[command(subcommand)]
    Index(IndexCommand),
    /// Retrieve and filter evidence for every claim.
    Retrieve {
        #[command(flatten)]
        inputs: InputArgs,
        /// Prebuilt index to use instead of indexing the corpus.
        #[arg(long, value_name = "FILE")]
        index: Option<PathBuf>,
        /// Candidates retrieved per claim before filtering.
        #[arg(long)]
        k: Option<usize>,
        #[command(flatten)]
        terms: TermArgs,
        #[command(flatten)]
        filter: FilterArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Ground a scorer on the aggregated evidence.
    Ground {
        #[command(flatten)]
        scorer: ScorerArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Compute the perplexity of every claim under the grounded scorer.
    Score {
        #[arg(long, value_name = "FILE")]
        claims: Option<PathBuf>,
        #[arg(long, env = "DEBUNK_BRIDGE_ADDR", value_name = "ADDR")]
        bridge: Option<String>,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Choose thresholds by cross-validation and classify the scored claims.
    Calibrate {
        #[command(flatten)]
        calibration: CalibrationArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Run the whole chain and write a report.
    Evaluate {
        #[command(flatten)]
        chain: ChainArgs,
    },
    /// Compare results with and without evidence filtering.
    Ablate {
        #[command(flatten)]
        chain: ChainArgs,
    },
    /// Rebuild the report from stage artifacts.
    Report {
        #[command(flatten)]
        out: OutArgs,
    },
}

#[derive(Subcommand)]
enum IndexCommand {
    Build {
        #[arg(long, value_name = "FILE")]
        corpus: PathBuf,
        /// Where to write the index.
        #[arg(long, value_name = "FILE", default_value = "index.json")]
        index: PathBuf,
        #[command(flatten)]
        terms: TermArgs,
    },
    Query {
        #[arg(long, value_name = "FILE", default_value = "index.json")]
        index: PathBuf,
        #[arg(long)]
        text: String,
        #[arg(long, default_value_t = 10)]
        k: usize,
    },
}

#[derive(Args, Clone, Default)]
struct InputArgs {
    #[arg(long, value_name = "FILE")]
    claims: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    corpus: Option<PathBuf>,
    /// Claim file format (jsonl or tsv); guessed from the extension otherwise.
    #[arg(long)]
    format: Option<ClaimFormat>,
}

#[derive(Args, Clone)]
struct OutArgs {
    /// Directory holding stage artifacts.
    #[arg(long, value_name = "DIR", default_value = "out")]
    out: PathBuf,
}

#[derive(Args, Clone, Default)]
struct TermArgs {
    #[arg(long)]
    stem: bool,
    #[arg(long)]
    remove_stop_words: bool,
}

#[derive(Args, Clone, Default)]
struct FilterArgs {
    /// Disable every filtering rule (plain top-3 evidence).
    #[arg(long, conflicts_with = "filter_config")]
    no_filter: bool,
    #[arg(long, value_name = "FILE")]
    filter_config: Option<PathBuf>,
}

#[derive(Args, Clone, Default)]
struct ScorerArgs {
    #[arg(long)]
    scorer: Option<ScorerKind>,
    /// tcp:HOST:PORT or stdio:COMMAND for the external scorer.
    #[arg(long, env = "DEBUNK_BRIDGE_ADDR", value_name = "ADDR")]
    bridge: Option<String>,
    #[arg(long)]
    epochs: Option<u32>,
    #[arg(long)]
    learning_rate: Option<f64>,
    /// n-gram order of the built-in scorer.
    #[arg(long)]
    order: Option<usize>,
    #[arg(long)]
    smoothing: Option<Smoothing>,
}

#[derive(Args, Clone, Default)]
struct CalibrationArgs {
    /// Number of cross-validation folds.
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    objective: Option<Objective>,
    /// Comma-separated per-fold thresholds; skips the search.
    #[arg(long, value_delimiter = ',', value_name = "TH,...")]
    thresholds: Option<Vec<f64>>,
    /// Classify every claim with one fixed threshold.
    #[arg(long, conflicts_with = "thresholds")]
    threshold: Option<f64>,
}

#[derive(Args, Clone)]
struct ChainArgs {
    #[command(flatten)]
    inputs: InputArgs,
    /// Candidates retrieved per claim before filtering.
    #[arg(long)]
    top_k: Option<usize>,
    #[command(flatten)]
    terms: TermArgs,
    #[command(flatten)]
    filter: FilterArgs,
    #[command(flatten)]
    scorer: ScorerArgs,
    #[command(flatten)]
    calibration: CalibrationArgs,
    /// Ground a separate model on each fold's evidence.
    #[arg(long)]
    ground_per_fold: bool,
    #[command(flatten)]
    out: OutArgs,
}

enum Failure {
    Usage(String),
    Core(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Usage(_) | Failure::Core(Error::InvalidConfig(_)) => 1,
            Failure::Core(Error::Bridge(_)) => 3,
            Failure::Core(_) => 2,
        }
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

/// What `ground` leaves behind for `score` and `report`.
#[derive(Serialize, Deserialize)]
struct GroundingArtifact {
    kind: ScorerKind,
    grounding: GroundingConfig,
    perplexity_unit: String,
    evidence: Vec<String>,
}

const CONFIG_FILE: &str = "config.json";
const MODEL_FILE: &str = "model.json";

/// Base configuration: `--config`, else the one saved in the output
/// directory by an earlier stage, else defaults.
fn base_config(explicit: Option<&Path>, out: &Path) -> CliResult<RunConfig> {
    match explicit {
        Some(path) => Ok(RunConfig::load(path)?),
        None if out.join(CONFIG_FILE).is_file() => Ok(RunConfig::load(&out.join(CONFIG_FILE))?),
        None => Ok(RunConfig::default()),
    }
}

fn apply_inputs(cfg: &mut RunConfig, a: &InputArgs) {
    if let Some(p) = &a.claims {
        cfg.claims = Some(p.clone());
    }
    if let Some(p) = &a.corpus {
        cfg.corpus = Some(p.clone());
    }
}

fn apply_terms(cfg: &mut RunConfig, a: &TermArgs) {
    cfg.retrieval.stem |= a.stem;
    cfg.retrieval.remove_stop_words |= a.remove_stop_words;
}

fn apply_filter(cfg: &mut RunConfig, a: &FilterArgs) -> CliResult<()> {
    if a.no_filter {
        cfg.filter = FilterConfig::disabled();
    } else if let Some(path) = &a.filter_config {
        cfg.filter = FilterConfig::load(path)?;
    }
    Ok(())
}

fn apply_scorer(cfg: &mut RunConfig, a: &ScorerArgs) -> CliResult<()> {
    if let Some(kind) = a.scorer {
        cfg.scorer.kind = kind;
    }
    if let Some(addr) = &a.bridge {
        cfg.scorer.bridge = Some(BridgeEndpoint::parse(addr).map_err(|e| Failure::Usage(e.to_string()))?);
    }
    let g = &mut cfg.grounding;
    if let Some(v) = a.epochs {
        g.epochs = v;
    }
    if let Some(v) = a.learning_rate {
        g.learning_rate = v;
    }
    if let Some(v) = a.order {
        g.ngram_order = v;
    }
    if let Some(v) = a.smoothing {
        g.smoothing = v;
    }
    Ok(())
}

fn apply_calibration(cfg: &mut RunConfig, a: &CalibrationArgs) {
    let c = &mut cfg.calibration;
    if let Some(k) = a.k {
        c.k = k;
    }
    if a.seed.is_some() {
        c.seed = a.seed;
    }
    if let Some(o) = a.objective {
        c.objective = o;
    }
    if let Some(t) = &a.thresholds {
        c.preset_thresholds = Some(t.clone());
        c.fixed_threshold = None;
    }
    if a.threshold.is_some() {
        c.fixed_threshold = a.threshold;
        c.preset_thresholds = None;
    }
}

fn require_seed(cfg: &RunConfig) -> CliResult<()> {
    if cfg.calibration.seed.is_none() {
        return Err(Failure::Usage("--seed is required (no hidden randomness)".into()));
    }
    Ok(())
}

fn required<'a>(path: &'a Option<PathBuf>, flag: &str) -> CliResult<&'a Path> {
    path.as_deref()
        .ok_or_else(|| Failure::Usage(format!("{flag} is required (flag or config)")))
}

fn read_claims(cfg: &RunConfig, format: Option<ClaimFormat>) -> CliResult<Vec<Claim>> {
    let path = required(&cfg.claims, "--claims")?;
    Ok(load_claims(path, format.unwrap_or_else(|| ClaimFormat::from_path(path)))?)
}

fn finish_config(cfg: &RunConfig, out: &Path) -> CliResult<()> {
    cfg.validate()?;
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    cfg.save(&out.join(CONFIG_FILE))?;
    Ok(())
}

fn make_scorer(cfg: &RunConfig) -> CliResult<Box<dyn Scorer>> {
    match cfg.scorer.kind {
        ScorerKind::Ngram => Ok(Box::new(NgramScorer::new())),
        ScorerKind::External => {
            let endpoint = cfg
                .scorer
                .bridge
                .as_ref()
                .ok_or_else(|| Failure::Usage("--bridge (or DEBUNK_BRIDGE_ADDR) is required for --scorer external".into()))?;
            Ok(Box::new(ExternalScorer::connect(endpoint)?))
        }
    }
}

fn datasets(cfg: &RunConfig, claims: usize, docs: usize) -> CliResult<Vec<DatasetInfo>> {
    let mut out = Vec::new();
    for (name, path, records) in [("claims", &cfg.claims, claims), ("corpus", &cfg.corpus, docs)] {
        if let Some(path) = path {
            if path.is_file() {
                out.push(DatasetInfo {
                    name: name.into(),
                    path: path.clone(),
                    sha256: file_checksum(path)?,
                    records,
                });
            }
        }
    }
    Ok(out)
}

fn save_model(out: &Path, cfg: &RunConfig, unit: String, evidence: Vec<String>) -> CliResult<()> {
    let artifact = GroundingArtifact {
        kind: cfg.scorer.kind,
        grounding: cfg.grounding.clone(),
        perplexity_unit: unit,
        evidence,
    };
    let path = out.join(MODEL_FILE);
    let json = serde_json::to_string_pretty(&artifact).expect("model serialization");
    fs::write(&path, json + "\n").map_err(|e| Error::io(&path, e))?;
    Ok(())
}

fn load_model(out: &Path) -> CliResult<GroundingArtifact> {
    let path = out.join(MODEL_FILE);
    if !path.is_file() {
        return Err(Error::NotGrounded.into());
    }
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::parse(&path, e.line(), e.to_string()).into())
}

fn ingest(cli: &Cli, inputs: &InputArgs, out: &Path) -> CliResult<()> {
    let mut cfg = base_config(cli.config.as_deref(), out)?;
    apply_inputs(&mut cfg, inputs);
    let claims = read_claims(&cfg, inputs.format)?;
    let counts = label_counts(&claims);
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    write_claims(&out.join("claims.jsonl"), &claims)?;
    println!(
        "claims: {} ({} False, {} True, {} unlabeled)",
        claims.len(),
        counts.false_count,
        counts.true_count,
        counts.unlabeled
    );
    if let Some(corpus) = &cfg.corpus {
        let docs = load_corpus(corpus)?;
        let sentences = segment_corpus(&docs);
        write_jsonl(&out.join("sentences.jsonl"), &sentences)?;
        println!("corpus: {} documents, {} sentences", docs.len(), sentences.len());
    }
    finish_config(&cfg, out)
}

fn index(command: &IndexCommand) -> CliResult<()> {
    match command {
        IndexCommand::Build { corpus, index, terms } => {
            let mut cfg = RunConfig::default();
            apply_terms(&mut cfg, terms);
            let docs = load_corpus(corpus)?;
            let built = TfIdfIndex::build(segment_corpus(&docs), cfg.retrieval.term_options())?;
            built.save(index)?;
            println!("indexed {} sentences, {} terms", built.sentences().len(), built.vocabulary().len());
        }
        IndexCommand::Query { index, text, k } => {
            let loaded = TfIdfIndex::load(index)?;
            for hit in loaded.query(text, *k) {
                println!("{}", serde_json::to_string(&hit).expect("candidate serialization"));
            }
        }
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn retrieve(
    cli: &Cli,
    inputs: &InputArgs,
    prebuilt: Option<&Path>,
    k: Option<usize>,
    terms: &TermArgs,
    filter: &FilterArgs,
    out: &Path,
) -> CliResult<()> {
    let mut cfg = base_config(cli.config.as_deref(), out)?;
    apply_inputs(&mut cfg, inputs);
    apply_terms(&mut cfg, terms);
    apply_filter(&mut cfg, filter)?;
    if let Some(k) = k {
        cfg.retrieval.k = k;
    }
    finish_config(&cfg, out)?;

    let claims = read_claims(&cfg, inputs.format)?;
    let index = match prebuilt {
        Some(path) => TfIdfIndex::load(path)?,
        None => {
            let docs = load_corpus(required(&cfg.corpus, "--corpus")?)?;
            TfIdfIndex::build(segment_corpus(&docs), cfg.retrieval.term_options())?
        }
    };
    let sets = select_evidence(&claims, &index, &cfg);
    write_jsonl(&out.join("evidence.jsonl"), &sets)?;
    let audit: Vec<_> = sets.iter().flat_map(audit_records).collect();
    write_jsonl(&out.join("audit.jsonl"), &audit)?;
    let empty = sets.iter().filter(|s| s.is_empty()).count();
    println!("evidence for {} claims ({} without evidence)", sets.len(), empty);
    Ok(())
}

fn ground(cli: &Cli, args: &ScorerArgs, out: &Path) -> CliResult<()> {
    let mut cfg = base_config(cli.config.as_deref(), out)?;
    apply_scorer(&mut cfg, args)?;
    finish_config(&cfg, out)?;
    let sets: Vec<EvidenceSet> = read_jsonl(&out.join("evidence.jsonl"))?;
    let evidence = aggregate_evidence(&sets)?;
    let mut scorer = make_scorer(&cfg)?;
    lm::ground(scorer.as_mut(), &evidence, &cfg.grounding)?;
    println!("grounded {} scorer on {} evidence sentences", cfg.scorer.kind, evidence.len());
    save_model(out, &cfg, scorer.perplexity_unit(), evidence)
}

fn score(cli: &Cli, claims: Option<&PathBuf>, bridge: Option<&str>, out: &Path) -> CliResult<()> {
    let mut cfg = base_config(cli.config.as_deref(), out)?;
    if let Some(p) = claims {
        cfg.claims = Some(p.clone());
    }
    if let Some(addr) = bridge {
        cfg.scorer.bridge = Some(BridgeEndpoint::parse(addr).map_err(|e| Failure::Usage(e.to_string()))?);
    }
    let model = load_model(out)?;
    cfg.scorer.kind = model.kind;
    cfg.grounding = model.grounding.clone();
    finish_config(&cfg, out)?;

    let claims = read_claims(&cfg, None)?;
    let sets: Vec<EvidenceSet> = read_jsonl(&out.join("evidence.jsonl"))?;
    // grounding is replayed from the stored evidence: exact for the n-gram
    // scorer, and the bridge is expected to be deterministic
    let mut scorer = make_scorer(&cfg)?;
    lm::ground(scorer.as_mut(), &model.evidence, &model.grounding)?;
    let scores = score_claims(&claims, &sets, scorer.as_ref())?;
    write_jsonl(&out.join("scores.jsonl"), &scores)?;
    println!("scored {} claims", scores.len());
    Ok(())
}

fn write_calibration(out: &Path, calibration: Option<&CalibrationResult>, verdicts: &[Verdict]) -> CliResult<()> {
    write_jsonl(&out.join("verdicts.jsonl"), verdicts)?;
    let path = out.join("calibration.json");
    match calibration {
        Some(cal) => {
            let json = serde_json::to_string_pretty(cal).expect("calibration serialization");
            fs::write(&path, json + "\n").map_err(|e| Error::io(&path, e))?;
        }
        None if path.exists() => fs::remove_file(&path).map_err(|e| Error::io(&path, e))?,
        None => {}
    }
    Ok(())
}

fn calibrate(cli: &Cli, args: &CalibrationArgs, out: &Path) -> CliResult<()> {
    let mut cfg = base_config(cli.config.as_deref(), out)?;
    apply_calibration(&mut cfg, args);
    require_seed(&cfg)?;
    finish_config(&cfg, out)?;
    let scores: Vec<ClaimScore> = read_jsonl(&out.join("scores.jsonl"))?;
    let (calibration, verdicts) = calibrate_and_classify(&scores, &cfg)?;
    write_calibration(out, calibration.as_ref(), &verdicts)?;
    match &calibration {
        Some(cal) => println!(
            "k = {}: thresholds {:?}, accuracy {:.3}, F1-macro {:.3}, F1-binary {:.3}",
            cal.k,
            cal.per_fold_threshold,
            cal.averaged_metrics.accuracy,
            cal.averaged_metrics.f1_macro,
            cal.averaged_metrics.f1_binary_false
        ),
        None => println!("classified {} claims with a fixed threshold", verdicts.len()),
    }
    Ok(())
}

fn chain_config(cli: &Cli, chain: &ChainArgs) -> CliResult<RunConfig> {
    let out = &chain.out.out;
    let mut cfg = match cli.config.as_deref() {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    apply_inputs(&mut cfg, &chain.inputs);
    apply_terms(&mut cfg, &chain.terms);
    apply_filter(&mut cfg, &chain.filter)?;
    apply_scorer(&mut cfg, &chain.scorer)?;
    apply_calibration(&mut cfg, &chain.calibration);
    if let Some(k) = chain.top_k {
        cfg.retrieval.k = k;
    }
    cfg.calibration.ground_per_fold |= chain.ground_per_fold;
    cfg.out_dir = Some(out.clone());
    if cli.jobs.is_some() {
        cfg.jobs = cli.jobs;
    }
    require_seed(&cfg)?;
    finish_config(&cfg, out)?;
    Ok(cfg)
}

fn evaluate(cli: &Cli, chain: &ChainArgs) -> CliResult<()> {
    let cfg = chain_config(cli, chain)?;
    let out = &chain.out.out;
    let claims = read_claims(&cfg, chain.inputs.format)?;
    let docs = load_corpus(required(&cfg.corpus, "--corpus")?)?;
    let mut scorer = make_scorer(&cfg)?;
    let run = debunk_core::run_pipeline(&claims, &docs, &cfg, scorer.as_mut())?;
    write_run_artifacts(out, &run)?;
    if run.grounding_batches.len() == 1 {
        save_model(out, &cfg, run.perplexity_unit.clone(), run.grounding_batches[0].clone())?;
    }
    let datasets = datasets(&cfg, claims.len(), docs.len())?;
    emit_report(out, &ReportInputs { config: &cfg, run: &run, datasets, ablation: None })?;
    print_summary(&run)?;
    println!("report written to {}", out.join("report.md").display());
    Ok(())
}

fn print_summary(run: &PipelineRun) -> CliResult<()> {
    if run.labeled_scores().is_empty() {
        println!("{} claims classified (no gold labels)", run.verdicts.len());
        return Ok(());
    }
    let m = run.summary()?;
    println!(
        "accuracy {:.3}, F1-macro {:.3}, F1-binary {:.3} over {} claims",
        m.accuracy,
        m.f1_macro,
        m.f1_binary_false,
        run.verdicts.len()
    );
    Ok(())
}

fn ablate(cli: &Cli, chain: &ChainArgs) -> CliResult<()> {
    let cfg = chain_config(cli, chain)?;
    let out = &chain.out.out;
    let claims = read_claims(&cfg, chain.inputs.format)?;
    let docs = load_corpus(required(&cfg.corpus, "--corpus")?)?;
    let mut scorer = make_scorer(&cfg)?;
    let (ablation, before, after) = ablation_filtering(&claims, &docs, &cfg, scorer.as_mut())?;
    let datasets = datasets(&cfg, claims.len(), docs.len())?;
    let mut unfiltered = cfg.clone();
    unfiltered.filter = FilterConfig::disabled();
    for (name, run, run_cfg) in [("before", &before, &unfiltered), ("after", &after, &cfg)] {
        let dir = out.join(name);
        write_run_artifacts(&dir, run)?;
        emit_report(&dir, &ReportInputs { config: run_cfg, run, datasets: datasets.clone(), ablation: None })?;
    }
    emit_ablation_report(out, &cfg, &ablation)?;
    let d = &ablation.delta;
    println!(
        "filtering delta: accuracy {:+.3}, F1-macro {:+.3}, F1-binary {:+.3}",
        d.accuracy, d.f1_macro, d.f1_binary_false
    );
    println!("ablation written to {}", out.join("ablation.md").display());
    Ok(())
}

fn report(cli: &Cli, out: &Path) -> CliResult<()> {
    let cfg = base_config(cli.config.as_deref(), out)?;
    let model = load_model(out)?;
    let evidence_sets: Vec<EvidenceSet> = read_jsonl(&out.join("evidence.jsonl"))?;
    let scores: Vec<ClaimScore> = read_jsonl(&out.join("scores.jsonl"))?;
    let verdicts: Vec<Verdict> = read_jsonl(&out.join("verdicts.jsonl"))?;
    let cal_path = out.join("calibration.json");
    let calibration: Option<CalibrationResult> = if cal_path.is_file() {
        let text = fs::read_to_string(&cal_path).map_err(|e| Error::io(&cal_path, e))?;
        Some(serde_json::from_str(&text).map_err(|e| Error::parse(&cal_path, e.line(), e.to_string()))?)
    } else {
        None
    };
    let run = PipelineRun {
        evidence_sets,
        grounding_batches: vec![model.evidence],
        scores,
        calibration,
        verdicts,
        perplexity_unit: model.perplexity_unit,
    };
    let claims = run.scores.len();
    let docs = match &cfg.corpus {
        Some(p) if p.is_file() => load_corpus(p)?.len(),
        _ => 0,
    };
    let datasets = datasets(&cfg, claims, docs)?;
    emit_report(out, &ReportInputs { config: &cfg, run: &run, datasets, ablation: None })?;
    print_summary(&run)?;
    Ok(())
}

fn dispatch(cli: &Cli) -> CliResult<()> {
    match &cli.command {
        Command::Ingest { inputs, out } => ingest(cli, inputs, &out.out),
        Command::Index(command) => index(command),
        Command::Retrieve { inputs, index, k, terms, filter, out } => {
            retrieve(cli, inputs, index.as_deref(), *k, terms, filter, &out.out)
        }
        Command::Ground { scorer, out } => ground(cli, scorer, &out.out),
        Command::Score { claims, bridge, out } => score(cli, claims.as_ref(), bridge.as_deref(), &out.out),
        Command::Calibrate { calibration, out } => calibrate(cli, calibration, &out.out),
        Command::Evaluate { chain } => evaluate(cli, chain),
        Command::Ablate { chain } => ablate(cli, chain),
        Command::Report { out } => report(cli, &out.out),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    if let Some(n) = cli.jobs {
        if n == 0 {
            eprintln!("error: --jobs must be positive");
            return ExitCode::from(1);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            log::warn!("could not size the worker pool: {e}");
        }
    }

    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            match &failure {
                Failure::Usage(msg) => eprintln!("error: {msg}"),
                Failure::Core(e) => eprintln!("error: {e}"),
            }
            ExitCode::from(failure.exit_code())
        }
    }
}
