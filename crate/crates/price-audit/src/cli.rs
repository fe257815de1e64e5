//! Command-line interface. [`run`] holds the whole program so it can be
//! driven in-process by tests.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use price_audit_core::decision::PaddingMode;
use price_audit_core::{cost_time, Catalog, CostProfile, ModeKind, Strategy};
use thiserror::Error;

use crate::catalog::{load_catalog, load_static_table};
use crate::config::RunConfig;
use crate::eval::{evaluate, load_labels, rows_to_csv, sweep, Grid, PaddingChoice, SetName};
use crate::gateway::{BackendConfig, BackendKind, Gateway};
use crate::pipeline::{to_jsonl, AssessmentRecord, BatchItem, DecisionMode, Pipeline};
use crate::plot::write_plot;

#[derive(Debug, Parser)]
#[command(name = "price-audit", version, about = "Explainable price-outlier auditing over a product catalog")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Generic,
    Static,
    Dynamic,
    WeightedDynamic,
}

impl From<ModeArg> for ModeKind {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Generic => ModeKind::Generic,
            ModeArg::Static => ModeKind::StaticCategory,
            ModeArg::Dynamic => ModeKind::Dynamic,
            ModeArg::WeightedDynamic => ModeKind::WeightedDynamic,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StrategyArg {
    Veto,
    Voting,
}

impl From<StrategyArg> for Strategy {
    fn from(s: StrategyArg) -> Self {
        match s {
            StrategyArg::Veto => Strategy::Veto,
            StrategyArg::Voting => Strategy::Voting,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PaddingModeArg {
    Fixed,
    Llm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DecisionModeArg {
    Deterministic,
    Llm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ProfileArg {
    Agent,
    Human,
}

#[derive(Debug, Clone, Default, Args)]
pub struct GlobalArgs {
    /// TOML run configuration; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Line-delimited JSON product catalog.
    #[arg(long, global = true)]
    pub catalog: Option<PathBuf>,
    /// Line-delimited JSON label file.
    #[arg(long, global = true)]
    pub labels: Option<PathBuf>,
    /// Static attribute table (`{category, attributes}` lines).
    #[arg(long, global = true)]
    pub static_table: Option<PathBuf>,
    /// Neighbors retrieved and judged per target
    #[arg(long, global = true)]
    pub k: Option<usize>,
    /// Relative price margin, as a fraction
    #[arg(long, global = true)]
    pub price_padding: Option<f64>,
    /// Net-utility band treated as similar
    #[arg(long, global = true)]
    pub utility_padding: Option<u32>,
    #[arg(long, global = true, value_enum)]
    pub padding_mode: Option<PaddingModeArg>,
    #[arg(long, global = true, value_enum)]
    pub attribute_mode: Option<ModeArg>,
    /// Attributes per comparison in the dynamic modes (at least 3)
    #[arg(long, global = true)]
    pub top_n: Option<usize>,
    #[arg(long, global = true, value_enum)]
    pub strategy: Option<StrategyArg>,
    #[arg(long, global = true, value_enum)]
    pub decision_mode: Option<DecisionModeArg>,
    /// Use the offline deterministic backend.
    #[arg(long, global = true)]
    pub mock: bool,
    /// Chat-completion URL for the http backend
    #[arg(long, global = true)]
    pub endpoint: Option<String>,
    /// Model name sent to the http backend
    #[arg(long, global = true)]
    pub model: Option<String>,
    /// Backend calls in flight per target
    #[arg(long, global = true)]
    pub max_concurrency: Option<usize>,
    /// Leave wall-clock durations out of records.
    #[arg(long, global = true)]
    pub no_timing: bool,
    /// Output file (stdout when absent).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Validate a catalog and report counts.
    Ingest,
    /// Print the top-k candidate neighbors of a product.
    Neighbors {
        #[arg(long)]
        target: String,
    },
    /// Assess one product and emit its record.
    Assess {
        #[arg(long)]
        target: String,
    },
    /// Assess several products (all when no ids are given), one record per line.
    Batch {
        #[arg(long, value_delimiter = ',')]
        targets: Vec<String>,
        /// File with one product id per line.
        #[arg(long)]
        targets_file: Option<PathBuf>,
    },
    /// Score the current configuration against the label file.
    Eval,
    /// Evaluate a grid of configurations.
    Sweep {
        /// Fractions, or `llm` for LLM-proposed padding.
        #[arg(long, value_delimiter = ',')]
        paddings: Vec<String>,
        #[arg(long, value_delimiter = ',')]
        ks: Vec<usize>,
        #[arg(long, value_delimiter = ',', value_enum)]
        modes: Vec<ModeArg>,
        #[arg(long, value_delimiter = ',', value_enum)]
        strategies: Vec<StrategyArg>,
    },
    /// Audit time and cost for n products.
    Cost {
        #[arg(long, allow_negative_numbers = true)]
        n: f64,
        #[arg(long, value_enum, default_value = "agent")]
        profile: ProfileArg,
    },
    /// Draw the quadrant chart of one assessment (SVG plus JSON twin).
    Plot {
        #[arg(long)]
        target: Option<String>,
        /// Plot a stored record instead of assessing.
        #[arg(long)]
        record: Option<PathBuf>,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Ingest => "ingest",
            Command::Neighbors { .. } => "neighbors",
            Command::Assess { .. } => "assess",
            Command::Batch { .. } => "batch",
            Command::Eval => "eval",
            Command::Sweep { .. } => "sweep",
            Command::Cost { .. } => "cost",
            Command::Plot { .. } => "plot",
        }
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("input error: {0}")]
    Input(String),
    #[error("backend error: {0}")]
    Backend(String),
    #[error("pipeline error: {0}")]
    Pipeline(String),
    #[error("io error: {0}")]
    Io(String),
}

fn io_err(e: impl std::fmt::Display) -> CliError {
    CliError::Io(e.to_string())
}

/// Applies file values then flags over defaults.
pub fn resolve(global: &GlobalArgs) -> Result<RunConfig, CliError> {
    let mut cfg = match &global.config {
        Some(p) => RunConfig::load(p).map_err(|e| CliError::Config(e.to_string()))?,
        None => RunConfig::default(),
    };
    let p = &mut cfg.pipeline;
    if let Some(v) = &global.catalog {
        cfg.catalog = Some(v.clone());
    }
    if let Some(v) = &global.labels {
        cfg.labels = Some(v.clone());
    }
    if let Some(v) = &global.static_table {
        cfg.static_table = Some(v.clone());
    }
    if let Some(v) = global.k {
        p.k = v;
    }
    if let Some(v) = global.price_padding {
        p.padding.price_padding = v;
    }
    if let Some(v) = global.utility_padding {
        p.padding.utility_padding = v;
    }
    if let Some(v) = global.padding_mode {
        p.padding.padding_mode = match v {
            PaddingModeArg::Fixed => PaddingMode::Fixed,
            PaddingModeArg::Llm => PaddingMode::Llm,
        };
    }
    if let Some(v) = global.attribute_mode {
        p.attribute_mode.mode = v.into();
    }
    if let Some(v) = global.top_n {
        p.attribute_mode.top_n = v;
    }
    if let Some(v) = global.strategy {
        p.strategy = v.into();
    }
    if let Some(v) = global.decision_mode {
        p.decision_mode = match v {
            DecisionModeArg::Deterministic => DecisionMode::Deterministic,
            DecisionModeArg::Llm => DecisionMode::Llm,
        };
    }
    if global.mock {
        p.backend = BackendConfig { kind: BackendKind::Mock, model_name: "mock".into(), ..p.backend.clone() };
    }
    if let Some(v) = &global.endpoint {
        p.backend.endpoint = Some(v.clone());
    }
    if let Some(v) = &global.model {
        p.backend.model_name = v.clone();
    }
    if let Some(v) = global.max_concurrency {
        p.max_concurrency = v;
    }
    if global.no_timing {
        p.record_timing = false;
    }
    if let Some(path) = &cfg.static_table {
        let table = load_static_table(path).map_err(|e| CliError::Input(e.to_string()))?;
        cfg.pipeline.attribute_mode.static_table.extend(table);
    }
    cfg.pipeline.validate().map_err(|e| CliError::Config(e.to_string()))?;
    Ok(cfg)
}

/// `1234567.891` -> `1,234,567.89`.
pub fn group_thousands(x: f64) -> String {
    let s = format!("{:.2}", x.abs());
    let (int, frac) = s.split_once('.').unwrap_or((&s, "00"));
    let mut grouped = String::new();
    for (i, ch) in int.chars().enumerate() {
        if i > 0 && (int.len() - i) % 3 == 0 {
            grouped.push(',');
        }
        grouped.push(ch);
    }
    format!("{}{grouped}.{frac}", if x < 0.0 { "-" } else { "" })
}

struct Ctx<'a> {
    cfg: RunConfig,
    out: &'a mut dyn Write,
    err: &'a mut dyn Write,
    out_path: Option<PathBuf>,
}

impl Ctx<'_> {
    fn catalog(&self) -> Result<Catalog, CliError> {
        let path = self.cfg.catalog.as_ref().ok_or_else(|| CliError::Config("no catalog given (use --catalog or the config file)".into()))?;
        load_catalog(path).map_err(|e| CliError::Input(e.to_string()))
    }

    fn pipeline(&self) -> Result<Pipeline, CliError> {
        let gateway = Gateway::from_config(&self.cfg.pipeline.backend).map_err(|e| CliError::Config(e.to_string()))?;
        Pipeline::with_gateway(self.cfg.pipeline.clone(), Arc::new(gateway)).map_err(|e| CliError::Config(e.to_string()))
    }

    /// Writes to `--out` when given, else stdout.
    fn emit(&mut self, text: &str) -> Result<(), CliError> {
        match &self.out_path {
            Some(p) => {
                std::fs::write(p, text).map_err(io_err)?;
                writeln!(self.err, "wrote {}", p.display()).map_err(io_err)
            }
            None => self.out.write_all(text.as_bytes()).map_err(io_err),
        }
    }
}

fn run_command(cmd: &Command, ctx: &mut Ctx<'_>) -> Result<(), CliError> {
    match cmd {
        Command::Ingest => {
            let c = ctx.catalog()?;
            let mut categories: BTreeMap<&str, usize> = BTreeMap::new();
            for p in c.products() {
                *categories.entry(p.category.as_str()).or_default() += 1;
            }
            let mut text = format!(
                "products: {}\ncategories: {}\nsupplied embeddings: {}\nvector dim: {}\n",
                c.len(),
                categories.len(),
                c.supplied_embeddings(),
                match (c.embedding_dim(), c.products().first()) {
                    (Some(d), _) => format!("{d} (supplied)"),
                    (None, Some(p)) => format!("{} (title fallback)", c.vector(&p.id).map_or(0, |v| v.len())),
                    (None, None) => "none".to_owned(),
                }
            );
            for (cat, n) in categories {
                text.push_str(&format!("  {}: {n}\n", if cat.is_empty() { "(none)" } else { cat }));
            }
            ctx.emit(&text)
        }
        Command::Neighbors { target } => {
            let c = ctx.catalog()?;
            let ns = c.neighbors(target, ctx.cfg.pipeline.k).map_err(|e| CliError::Input(e.to_string()))?;
            let mut text = String::from("rank\tid\tsimilarity\tprice\ttitle\n");
            for n in ns {
                let p = c.get(&n.product_id).expect("neighbor in catalog");
                text.push_str(&format!("{}\t{}\t{:.5}\t{:.2}\t{}\n", n.rank, p.id, n.similarity, p.price, p.title));
            }
            ctx.emit(&text)
        }
        Command::Assess { target } => {
            let c = ctx.catalog()?;
            let r = ctx.pipeline()?.assess_target(&c, target).map_err(|e| CliError::Pipeline(e.to_string()))?;
            ctx.emit(&to_jsonl(&[r]))
        }
        Command::Batch { targets, targets_file } => {
            let c = ctx.catalog()?;
            let mut ids = targets.clone();
            if let Some(f) = targets_file {
                let text = std::fs::read_to_string(f).map_err(|e| CliError::Input(format!("{}: {e}", f.display())))?;
                ids.extend(text.lines().map(str::trim).filter(|l| !l.is_empty()).map(str::to_owned));
            }
            if ids.is_empty() && targets_file.is_none() {
                ids = c.products().iter().map(|p| p.id.clone()).collect();
            }
            let items = ctx.pipeline()?.assess_batch(&c, &ids);
            let failed = items.iter().filter(|i| matches!(i, BatchItem::Failed { .. })).count();
            ctx.emit(&to_jsonl(&items))?;
            writeln!(ctx.err, "assessed {} target(s), {failed} failed", items.len() - failed).map_err(io_err)
        }
        Command::Eval => {
            let c = ctx.catalog()?;
            let sets = labels(ctx)?;
            let row = evaluate(&c, &sets, &ctx.pipeline()?);
            if let Some(k) = sets.get(SetName::Silver).and_then(|s| s.annotator_kappa()) {
                match k {
                    Ok(k) => writeln!(ctx.err, "silver annotator kappa: {k:.3}"),
                    Err(e) => writeln!(ctx.err, "silver annotator kappa unavailable: {e}"),
                }
                .map_err(io_err)?;
            }
            let text = match ctx.out_path.as_deref().and_then(Path::extension).and_then(|e| e.to_str()) {
                Some("json" | "jsonl") => to_jsonl(&[row]),
                _ => rows_to_csv(&[row]),
            };
            ctx.emit(&text)
        }
        Command::Sweep { paddings, ks, modes, strategies } => {
            let c = ctx.catalog()?;
            let sets = labels(ctx)?;
            let base = &ctx.cfg.pipeline;
            let grid = Grid {
                paddings: if paddings.is_empty() {
                    vec![PaddingChoice::of(&base.padding)]
                } else {
                    paddings.iter().map(|s| parse_padding_choice(s)).collect::<Result<_, _>>()?
                },
                ks: if ks.is_empty() { vec![base.k] } else { ks.clone() },
                modes: if modes.is_empty() { vec![base.attribute_mode.mode] } else { modes.iter().map(|&m| m.into()).collect() },
                strategies: if strategies.is_empty() { vec![base.strategy] } else { strategies.iter().map(|&s| s.into()).collect() },
            };
            let gateway = Gateway::from_config(&base.backend).map_err(|e| CliError::Config(e.to_string()))?;
            let rows = sweep(&c, &sets, base, &grid, Arc::new(gateway)).map_err(|e| CliError::Config(e.to_string()))?;
            if let Some(p) = &ctx.out_path {
                let twin = p.with_extension("jsonl");
                std::fs::write(&twin, to_jsonl(&rows)).map_err(io_err)?;
                writeln!(ctx.err, "wrote {}", twin.display()).map_err(io_err)?;
            }
            ctx.emit(&rows_to_csv(&rows))
        }
        Command::Cost { n, profile } => {
            let profile = match profile {
                ProfileArg::Agent => CostProfile::AGENT,
                ProfileArg::Human => CostProfile::HUMAN,
            };
            let est = cost_time(*n, &profile).map_err(|e| CliError::Input(e.to_string()))?;
            ctx.emit(&format!("{} h / ${}\n", group_thousands(est.hours), group_thousands(est.cost)))
        }
        Command::Plot { target, record } => {
            let rec: AssessmentRecord = match (record, target) {
                (Some(path), _) => {
                    let text = std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
                    let line = text.lines().find(|l| !l.trim().is_empty()).unwrap_or_default();
                    serde_json::from_str(line).map_err(|e| CliError::Input(format!("{}: not an assessment record: {e}", path.display())))?
                }
                (None, Some(t)) => {
                    let c = ctx.catalog()?;
                    ctx.pipeline()?.assess_target(&c, t).map_err(|e| CliError::Pipeline(e.to_string()))?
                }
                (None, None) => return Err(CliError::Config("plot needs --target or --record".into())),
            };
            let svg = ctx.out_path.clone().unwrap_or_else(|| PathBuf::from(format!("{}.svg", rec.target_id)));
            let twin = write_plot(&rec, &svg).map_err(io_err)?;
            writeln!(ctx.out, "{}\n{}", svg.display(), twin.display()).map_err(io_err)?;
            writeln!(ctx.err, "verdict {} with {} point(s)", rec.decision.verdict.as_str(), rec.points.len()).map_err(io_err)
        }
    }
}

fn labels(ctx: &Ctx<'_>) -> Result<crate::eval::LabeledSets, CliError> {
    let path = ctx.cfg.labels.as_ref().ok_or_else(|| CliError::Config("no label file given (use --labels or the config file)".into()))?;
    load_labels(path).map_err(|e| CliError::Input(e.to_string()))
}

fn parse_padding_choice(s: &str) -> Result<PaddingChoice, CliError> {
    if s.trim().eq_ignore_ascii_case("llm") {
        return Ok(PaddingChoice::Llm);
    }
    s.trim()
        .parse::<f64>()
        .map(PaddingChoice::Fixed)
        .map_err(|_| CliError::Config(format!("padding `{s}` is neither a fraction nor `llm`")))
}

/// Parses `args` (program name first) and runs the command. Returns the
/// process exit status: 0 success, 2 usage error, 1 anything else.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let rendered = e.render().to_string();
            if e.use_stderr() {
                let _ = write!(err, "{rendered}");
            } else {
                let _ = write!(out, "{rendered}");
            }
            return code;
        }
    };
    let cfg = match resolve(&cli.global) {
        Ok(c) => c,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return 1;
        }
    };
    let header = serde_json::to_string(&cfg).unwrap_or_default();
    let _ = writeln!(err, "# price-audit {} | config {header}", cli.command.name());
    let out_path = cli.global.out.clone();
    let mut ctx = Ctx { cfg, out, err, out_path };
    match run_command(&cli.command, &mut ctx) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(ctx.err, "error: {e}");
            1
        }
    }
}
