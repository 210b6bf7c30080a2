use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context as _, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use log::warn;
use serde_json::json;

use logmap::data::load_data;
use logmap::embeddings::load_embeddings;
use logmap::qfg_file::{read_qfg, write_qfg};
use logmap::querylog::read_log;
use logmap::schema::load_schema;
use logmap::tasks::{load_benchmark, load_tasks};
use logmap_core::catalog::{SchemaGraph, ValueIndex};
use logmap_core::eval::{cross_validate, EvalParams, EvalReport};
use logmap_core::join::{infer_joins, WeightMode};
use logmap_core::mapper::{BagItem, MapperParams, DEFAULT_KAPPA, DEFAULT_LAMBDA, DEFAULT_MAX_CONFIGS};
use logmap_core::qfg::QueryFragmentGraph;
use logmap_core::sim::SimilarityModel;
use logmap_core::sql::ObscurityLevel;
use logmap_core::translate::{translate, TranslateParams};

#[derive(Parser)]
#[command(name = "logmap", version, about = "Query-log driven keyword mapping and join inference for NL-to-SQL")]
struct Cli {
    /// Emit JSON instead of text.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Mine a SQL log into a query fragment graph file.
    BuildQfg {
        #[arg(long)]
        log: PathBuf,
        #[arg(long)]
        qfg: PathBuf,
        #[arg(long, value_enum, default_value_t = Obscurity::Noconstop)]
        obscurity: Obscurity,
    },
    /// Summarize a QFG file.
    InspectQfg {
        #[arg(long)]
        qfg: PathBuf,
        /// How many of the most frequent fragments to list.
        #[arg(long, default_value_t = 10)]
        top: usize,
    },
    /// Translate keyword tasks into ranked SQL.
    Translate {
        #[command(flatten)]
        catalog: CatalogArgs,
        #[command(flatten)]
        log: LogArgs,
        #[command(flatten)]
        tuning: Tuning,
        /// JSON task file.
        #[arg(long)]
        tasks: PathBuf,
        /// Candidates printed per record.
        #[arg(long, default_value_t = 3)]
        top: usize,
    },
    /// Rank join paths for a comma-separated bag such as `publication.title,domain.name`.
    InferJoins {
        #[arg(long)]
        schema: PathBuf,
        #[command(flatten)]
        log: LogArgs,
        #[arg(long)]
        bag: String,
        #[arg(long, value_enum, default_value_t = Weights::Log)]
        weights: Weights,
        #[arg(long, default_value_t = 3)]
        k_paths: usize,
    },
    /// Cross-validate a benchmark.
    Evaluate {
        #[command(flatten)]
        catalog: CatalogArgs,
        #[command(flatten)]
        tuning: Tuning,
        #[arg(long)]
        benchmark: PathBuf,
        #[arg(long, default_value_t = 4)]
        folds: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = Obscurity::Noconstop)]
        obscurity: Obscurity,
        /// Also write the report here.
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

#[derive(Args)]
struct CatalogArgs {
    #[arg(long)]
    schema: PathBuf,
    /// Directory of `<relation>.csv` files.
    #[arg(long)]
    data: PathBuf,
    /// Word vectors; lexical similarity when absent.
    #[arg(long)]
    embeddings: Option<PathBuf>,
}

#[derive(Args)]
struct LogArgs {
    /// A QFG file from `build-qfg`.
    #[arg(long, conflicts_with = "log")]
    qfg: Option<PathBuf>,
    /// A SQL log, mined on the fly.
    #[arg(long)]
    log: Option<PathBuf>,
    /// Obscurity used when mining `--log`.
    #[arg(long = "log-obscurity", value_enum, default_value_t = Obscurity::Noconstop)]
    obscurity: Obscurity,
}

#[derive(Args)]
struct Tuning {
    #[arg(long, default_value_t = DEFAULT_KAPPA)]
    kappa: usize,
    #[arg(long, default_value_t = DEFAULT_LAMBDA)]
    lambda: f64,
    #[arg(long, default_value_t = 3)]
    k_paths: usize,
    #[arg(long, value_enum, default_value_t = Weights::Log)]
    weights: Weights,
}

#[derive(Clone, Copy, ValueEnum)]
enum Obscurity {
    Full,
    Noconst,
    Noconstop,
}

impl From<Obscurity> for ObscurityLevel {
    fn from(o: Obscurity) -> Self {
        match o {
            Obscurity::Full => ObscurityLevel::Full,
            Obscurity::Noconst => ObscurityLevel::NoConst,
            Obscurity::Noconstop => ObscurityLevel::NoConstOp,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Weights {
    Default,
    Log,
}

impl From<Weights> for WeightMode {
    fn from(w: Weights) -> Self {
        match w {
            Weights::Default => WeightMode::Default,
            Weights::Log => WeightMode::Log,
        }
    }
}

impl Tuning {
    fn params(&self) -> Result<TranslateParams> {
        if self.kappa < 1 {
            bail!("--kappa must be at least 1");
        }
        if !(0.0..=1.0).contains(&self.lambda) {
            bail!("--lambda must lie in [0, 1]");
        }
        Ok(TranslateParams {
            mapper: MapperParams { kappa: self.kappa, lambda: self.lambda, max_configs: DEFAULT_MAX_CONFIGS },
            k_paths: self.k_paths.max(1),
            weights: self.weights.into(),
        })
    }

    fn needs_log(&self) -> bool {
        self.lambda < 1.0 || matches!(self.weights, Weights::Log)
    }
}

impl LogArgs {
    fn load(&self) -> Result<Option<QueryFragmentGraph>> {
        if let Some(path) = &self.qfg {
            return Ok(Some(read_qfg(path)?));
        }
        let Some(path) = &self.log else { return Ok(None) };
        let log = read_log(path)?;
        for (n, reason) in &log.skipped {
            warn!("{}: statement {n} skipped: {reason}", path.display());
        }
        Ok(Some(log.to_qfg(self.obscurity.into())?))
    }
}

fn load_catalog(args: &CatalogArgs) -> Result<(SchemaGraph, ValueIndex, SimilarityModel)> {
    let schema = load_schema(&args.schema)?;
    let index = load_data(&schema, &args.data)?;
    let sim = match &args.embeddings {
        Some(p) => load_embeddings(p)?,
        None => SimilarityModel::Lexical,
    };
    Ok((schema, index, sim))
}

fn build_qfg_cmd(log: &Path, qfg: &Path, level: ObscurityLevel, as_json: bool) -> Result<()> {
    let parsed = read_log(log)?;
    for (n, reason) in &parsed.skipped {
        warn!("{}: statement {n} skipped: {reason}", log.display());
    }
    let g = parsed.to_qfg(level)?;
    if g.queries() == 0 {
        warn!("{}: no usable queries, the graph is empty", log.display());
    }
    write_qfg(&g, qfg)?;
    let (queries, fragments, pairs, skipped) =
        (g.queries(), g.occurrences().len(), g.cooccurrences().len(), parsed.skipped.len());
    if as_json {
        println!("{}", json!({"queries": queries, "fragments": fragments, "pairs": pairs, "skipped": skipped}));
    } else {
        println!("queries {queries}\nfragments {fragments}\npairs {pairs}\nskipped {skipped}");
    }
    Ok(())
}

fn inspect_qfg_cmd(path: &Path, top: usize, as_json: bool) -> Result<()> {
    let g = read_qfg(path)?;
    let mut frequent: Vec<_> = g.occurrences().iter().collect();
    frequent.sort_by(|a, b| b.1.cmp(a.1).then_with(|| a.0.cmp(b.0)));
    frequent.truncate(top);
    if as_json {
        let list: Vec<_> = frequent
            .iter()
            .map(|(f, n)| json!({"context": f.context.as_str(), "expression": f.expression, "count": n}))
            .collect();
        let doc = json!({
            "obscurity": g.obscurity().as_str(),
            "queries": g.queries(),
            "fragments": g.occurrences().len(),
            "pairs": g.cooccurrences().len(),
            "top": list,
        });
        println!("{doc}");
    } else {
        println!("obscurity {}", g.obscurity());
        println!("queries {}\nfragments {}\npairs {}", g.queries(), g.occurrences().len(), g.cooccurrences().len());
        for (f, n) in frequent {
            println!("{n:>6}  {f}");
        }
    }
    Ok(())
}

fn translate_cmd(catalog: &CatalogArgs, log: &LogArgs, tuning: &Tuning, tasks: &Path, top: usize, as_json: bool) -> Result<()> {
    let params = tuning.params()?;
    let (schema, index, sim) = load_catalog(catalog)?;
    let qfg = log.load()?;
    if qfg.is_none() && tuning.needs_log() {
        bail!("--lambda below 1 and --weights log need a query log: pass --qfg or --log");
    }
    let file = load_tasks(tasks)?;
    let mut out = std::io::stdout().lock();
    let mut docs = Vec::new();
    for (i, record) in file.records.iter().enumerate() {
        let result = record
            .keywords
            .iter()
            .map(|k| k.to_task())
            .collect::<Result<Vec<_>, _>>()
            .map_err(anyhow::Error::msg)
            .and_then(|t| Ok(translate(&schema, &index, qfg.as_ref(), &sim, &t, &params)?));
        match result {
            Ok(o) => {
                let shown = &o.candidates[..o.candidates.len().min(top)];
                if as_json {
                    let c: Vec<_> = shown.iter().map(|t| json!({"sql": t.sql, "score": t.score})).collect();
                    docs.push(json!({"record": i, "nlq": record.nlq, "tie": o.tie, "candidates": c}));
                } else {
                    writeln!(out, "#{i} {}{}", record.nlq, if o.tie { "  [tie]" } else { "" })?;
                    for t in shown {
                        writeln!(out, "  {:.6}  {}", t.score, t.sql)?;
                    }
                }
            }
            Err(e) => {
                if as_json {
                    docs.push(json!({"record": i, "nlq": record.nlq, "error": e.to_string()}));
                } else {
                    writeln!(out, "#{i} {}\n  ERROR {e}", record.nlq)?;
                }
            }
        }
    }
    if as_json {
        writeln!(out, "{}", serde_json::to_string_pretty(&docs)?)?;
    }
    Ok(())
}

fn infer_joins_cmd(schema: &Path, log: &LogArgs, bag: &str, weights: Weights, k: usize, as_json: bool) -> Result<()> {
    let schema = load_schema(schema)?;
    let qfg = log.load()?;
    if qfg.is_none() && matches!(weights, Weights::Log) {
        bail!("--weights log needs a query log: pass --qfg or --log");
    }
    let items: Vec<BagItem> = bag
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| BagItem::parse(s).with_context(|| format!("bad bag element {s:?}")))
        .collect::<Result<_>>()?;
    let paths = infer_joins(&schema, qfg.as_ref(), &items, weights.into(), k.max(1))?;
    if as_json {
        let docs: Vec<_> = paths
            .iter()
            .map(|p| {
                json!({
                    "relations": p.vertices.iter().map(ToString::to_string).collect::<Vec<_>>(),
                    "edges": p.labels(),
                    "weight": p.total_weight,
                    "score": p.score,
                    "likelihood": p.likelihood(),
                })
            })
            .collect();
        println!("{}", serde_json::to_string_pretty(&docs)?);
    } else {
        for (i, p) in paths.iter().enumerate() {
            let rels: Vec<String> = p.vertices.iter().map(ToString::to_string).collect();
            println!(
                "{}. {}  weight {:.4}  likelihood {:.4}",
                i + 1,
                rels.join(" - "),
                p.total_weight,
                p.likelihood()
            );
            for l in p.labels() {
                println!("     {l}");
            }
        }
    }
    Ok(())
}

fn report_text(r: &EvalReport) -> String {
    let mut s = format!("benchmark {}\nfold  train  test  ingested    KW%     FQ%\n", r.benchmark);
    for t in &r.trials {
        s.push_str(&format!(
            "{:>4}  {:>5}  {:>4}  {:>8}  {:>6.2}  {:>6.2}\n",
            t.fold,
            t.train.len(),
            t.test.len(),
            t.queries_ingested,
            t.kw_accuracy(),
            t.fq_accuracy()
        ));
    }
    s.push_str(&format!(
        "all   records {}  KW {}/{} = {:.2}%  FQ {}/{} = {:.2}%\n",
        r.records(),
        r.kw_correct(),
        r.records(),
        r.kw_accuracy(),
        r.fq_correct(),
        r.records(),
        r.fq_accuracy()
    ));
    s
}

fn report_json(r: &EvalReport) -> serde_json::Value {
    let trials: Vec<_> = r
        .trials
        .iter()
        .map(|t| {
            let outcomes: Vec<_> = t
                .outcomes
                .iter()
                .map(|o| {
                    json!({"record": o.index, "kw": o.kw_correct, "fq": o.fq_correct, "tie": o.tie,
                           "predicted": o.predicted, "error": o.error})
                })
                .collect();
            json!({"fold": t.fold, "train": t.train, "test": t.test, "queries_ingested": t.queries_ingested,
                   "kw_accuracy": t.kw_accuracy(), "fq_accuracy": t.fq_accuracy(), "outcomes": outcomes})
        })
        .collect();
    json!({"benchmark": r.benchmark, "records": r.records(), "kw_correct": r.kw_correct(),
           "fq_correct": r.fq_correct(), "kw_accuracy": r.kw_accuracy(), "fq_accuracy": r.fq_accuracy(),
           "trials": trials})
}

#[allow(clippy::too_many_arguments)]
fn evaluate_cmd(
    catalog: &CatalogArgs,
    tuning: &Tuning,
    benchmark: &Path,
    folds: usize,
    seed: u64,
    obscurity: Obscurity,
    output: Option<&Path>,
    as_json: bool,
) -> Result<()> {
    if folds < 2 {
        bail!("--folds must be at least 2");
    }
    let params = EvalParams { folds, seed, obscurity: obscurity.into(), translate: tuning.params()? };
    let (schema, index, sim) = load_catalog(catalog)?;
    let bench = load_benchmark(benchmark)?;
    let report = cross_validate(&bench, &schema, &index, &sim, &params)?;
    let text = if as_json { serde_json::to_string_pretty(&report_json(&report))? + "\n" } else { report_text(&report) };
    print!("{text}");
    if let Some(path) = output {
        std::fs::write(path, &text).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    let as_json = cli.json;
    match cli.command {
        Command::BuildQfg { log, qfg, obscurity } => build_qfg_cmd(&log, &qfg, obscurity.into(), as_json),
        Command::InspectQfg { qfg, top } => inspect_qfg_cmd(&qfg, top, as_json),
        Command::Translate { catalog, log, tuning, tasks, top } => {
            translate_cmd(&catalog, &log, &tuning, &tasks, top, as_json)
        }
        Command::InferJoins { schema, log, bag, weights, k_paths } => {
            infer_joins_cmd(&schema, &log, &bag, weights, k_paths, as_json)
        }
        Command::Evaluate { catalog, tuning, benchmark, folds, seed, obscurity, output } => {
            evaluate_cmd(&catalog, &tuning, &benchmark, folds, seed, obscurity, output.as_deref(), as_json)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
