//! Subcommand definitions and their implementations.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use gpca_core::dataset::{import_citation_corpus, load_dir, planetoid_split, write_dir, write_features, FeatureFormat, GraphDataset};
use gpca_core::gpca::{fit, GpcaConfig};
use gpca_core::gpcanet::{export_gcn_init, layer_specs};

use crate::config::{ConfigMap, ExperimentConfig, Method};
use crate::experiment::{default_init, plan, run_all, run_config, select, summarize, CellSummary, Experiment};
use crate::records::{InitKind, RunConfig, RunRecord, Sink};

#[derive(Parser, Debug)]
#[command(name = "gpca", version, about = "Graph-regularized PCA and GPCANet experiments")]
pub struct Cli {
    /// Worker threads for runs and kernels (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Import a `.content`/`.cites` corpus and write a dataset directory.
    PrepareData(PrepareArgs),
    /// Fit GPCA and save the projection and embedding.
    Embed(EmbedArgs),
    /// Train a method over a grid and seeds, then select by validation.
    Train(GridArgs),
    /// Layers × α accuracy matrix for stacked GPCANet.
    SweepFig2(GridArgs),
    /// Save GPCANet-derived initial weights for an L-layer GCN.
    InitExport(InitExportArgs),
    /// Xavier versus GPCANet initialization of GCNs over depths.
    InitCompare(InitCompareArgs),
}

#[derive(Args, Debug, Clone, Default)]
pub struct CommonArgs {
    #[arg(long)]
    pub dataset_dir: Option<PathBuf>,
    /// `key = value` file; flags override its entries.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Comma-separated seeds or a range such as `0..5`.
    #[arg(long)]
    pub seeds: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Power-method iterations.
    #[arg(long = "T")]
    pub t: Option<usize>,
}

#[derive(Args, Debug, Clone, Default)]
pub struct GridArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long)]
    pub method: Option<String>,
    #[arg(long)]
    pub alpha: Option<String>,
    #[arg(long)]
    pub beta: Option<String>,
    #[arg(long)]
    pub layers: Option<String>,
    #[arg(long)]
    pub hidden: Option<String>,
    #[arg(long)]
    pub dropout: Option<String>,
    #[arg(long)]
    pub weight_decay: Option<String>,
    #[arg(long)]
    pub lr: Option<String>,
    #[arg(long)]
    pub epochs: Option<String>,
    #[arg(long)]
    pub patience: Option<String>,
    #[arg(long)]
    pub row_normalize: Option<String>,
    #[arg(long)]
    pub mlp_layers: Option<String>,
    #[arg(long)]
    pub init_seed: Option<String>,
    /// `decoupled` or `l2`.
    #[arg(long)]
    pub decay: Option<String>,
}

#[derive(Args, Debug, Clone)]
pub struct PrepareArgs {
    #[arg(long)]
    pub content: PathBuf,
    #[arg(long)]
    pub cites: PathBuf,
    /// Output dataset directory.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 20)]
    pub per_class: usize,
    #[arg(long, default_value_t = 500)]
    pub val: usize,
    #[arg(long, default_value_t = 1000)]
    pub test: usize,
    #[arg(long, default_value_t = 0)]
    pub split_seed: u64,
    #[arg(long, value_enum, default_value_t = Format::Coo)]
    pub format: Format,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Bin,
    Tsv,
    Coo,
}

impl From<Format> for FeatureFormat {
    fn from(f: Format) -> FeatureFormat {
        match f {
            Format::Bin => FeatureFormat::Bin,
            Format::Tsv => FeatureFormat::Tsv,
            Format::Coo => FeatureFormat::Coo,
        }
    }
}

#[derive(Args, Debug, Clone)]
pub struct EmbedArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, default_value_t = 10.0)]
    pub alpha: f64,
    #[arg(long, default_value_t = 0.0)]
    pub beta: f64,
    #[arg(long, default_value_t = 128)]
    pub k: usize,
    #[arg(long)]
    pub row_normalize: bool,
    /// Also write the embedding as TSV.
    #[arg(long)]
    pub embedding: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct InitExportArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long)]
    pub layers: usize,
    #[arg(long, default_value_t = 128)]
    pub hidden: usize,
    #[arg(long, default_value_t = 0)]
    pub init_seed: u64,
    #[arg(long)]
    pub row_normalize: bool,
}

#[derive(Args, Debug, Clone, Default)]
pub struct InitCompareArgs {
    #[command(flatten)]
    pub grid: GridArgs,
    /// Run seeds `0..N` instead of `--seeds`.
    #[arg(long)]
    pub repeats: Option<u64>,
}

/// Runs a parsed command line. Returns the process exit code.
pub fn run(cli: Cli) -> Result<i32> {
    #[cfg(feature = "parallel")]
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the worker pool")?;
    }
    #[cfg(not(feature = "parallel"))]
    if cli.threads.is_some_and(|n| n > 1) {
        log::warn!("built without the parallel feature; --threads ignored");
    }
    let sink = Sink::from_env()?;
    match cli.command {
        Command::PrepareData(a) => prepare_data(&a).map(|_| 0),
        Command::Embed(a) => embed(&a).map(|_| 0),
        Command::Train(a) => train(&a, &sink).map(|r| exit_code(&r)),
        Command::SweepFig2(a) => sweep_fig2(&a, &sink).map(|r| exit_code(&r)),
        Command::InitExport(a) => init_export(&a).map(|_| 0),
        Command::InitCompare(a) => init_compare(&a, &sink).map(|r| exit_code(&r)),
    }
}

fn exit_code(records: &[RunRecord]) -> i32 {
    if records.iter().all(|r| r.ok) {
        0
    } else {
        1
    }
}

fn config_map(args: &GridArgs) -> Result<ConfigMap> {
    let c = &args.common;
    let mut map = match &c.config {
        Some(p) => ConfigMap::load(p)?,
        None => ConfigMap::default(),
    };
    if let Some(d) = &c.dataset_dir {
        map.set("dataset_dir", d.display().to_string());
    }
    let flags: [(&str, &Option<String>); 15] = [
        ("seeds", &c.seeds),
        ("method", &args.method),
        ("alpha", &args.alpha),
        ("beta", &args.beta),
        ("layers", &args.layers),
        ("hidden", &args.hidden),
        ("dropout", &args.dropout),
        ("weight_decay", &args.weight_decay),
        ("lr", &args.lr),
        ("epochs", &args.epochs),
        ("patience", &args.patience),
        ("row_normalize", &args.row_normalize),
        ("mlp_layers", &args.mlp_layers),
        ("init_seed", &args.init_seed),
        ("decay", &args.decay),
    ];
    for (k, v) in flags {
        if let Some(v) = v {
            map.set(k, v.clone());
        }
    }
    if let Some(t) = c.t {
        map.set("T", t.to_string());
    }
    Ok(map)
}

fn dataset_dir(common: &CommonArgs) -> Result<&Path> {
    common
        .dataset_dir
        .as_deref()
        .context("--dataset-dir is required")
}

fn k_max(cfg: &ExperimentConfig) -> usize {
    cfg.grid.hidden.iter().copied().max().unwrap_or(0)
}

fn execute(exp: &Experiment, cfg: &ExperimentConfig, command: &str, runs: &[(RunConfig, u64)], sink: &Sink) -> Vec<RunRecord> {
    log::info!("{command}: {} runs on {} -> {}", runs.len(), exp.name, sink.target());
    run_all(exp, command, runs, k_max(cfg), cfg.mlp_layers, cfg.init_seed, sink)
}

fn pct(x: f64) -> String {
    format!("{:.2}", 100.0 * x)
}

const SUMMARY_HEADER: &str = "method\tlayers\thidden\talpha\tbeta\tdropout\tweight_decay\tinit\truns\tfailures\tval_mean\tval_std\ttest_mean\ttest_std\tselected";

fn summary_row(s: &CellSummary, selected: bool) -> String {
    let c = &s.config.cell;
    let init = match s.config.init {
        InitKind::Xavier => "xavier",
        InitKind::Gpcanet => "gpcanet",
    };
    format!(
        "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
        s.config.method,
        c.layers,
        c.hidden,
        c.alpha,
        c.beta,
        c.dropout,
        c.weight_decay,
        init,
        s.runs,
        s.failures,
        pct(s.val_mean),
        pct(s.val_std),
        pct(s.test_mean),
        pct(s.test_std),
        u8::from(selected)
    )
}

fn write_out(path: Option<&Path>, text: &str) -> Result<()> {
    if let Some(p) = path {
        fs::write(p, text).with_context(|| format!("writing {}", p.display()))?;
        log::info!("wrote {}", p.display());
    }
    Ok(())
}

pub fn prepare_data(a: &PrepareArgs) -> Result<GraphDataset> {
    let corpus = import_citation_corpus(&a.content, &a.cites)?;
    let labels: Vec<Option<usize>> = corpus.labels.iter().map(|&l| Some(l)).collect();
    let c = corpus.class_names.len();
    let masks = planetoid_split(&labels, c, a.per_class, a.val, a.test, a.split_seed)?;
    let ds = GraphDataset::new(corpus.graph, corpus.features, labels, c, masks)?;
    write_dir(&a.out, &ds, a.format.into())?;
    let kept = ds.graph.num_edges();
    eprintln!(
        "nodes {}  features {}  classes {}  citation lines {}  dangling {}  undirected edges {} ({:+} vs lines)",
        ds.num_nodes(),
        ds.num_features(),
        c,
        corpus.raw_edge_lines,
        corpus.dangling_citations,
        kept,
        kept as i64 - corpus.raw_edge_lines as i64
    );
    eprintln!("classes: {}", corpus.class_names.join(", "));
    Ok(ds)
}

pub fn embed(a: &EmbedArgs) -> Result<()> {
    let dir = dataset_dir(&a.common)?;
    let mut ds = load_dir(dir)?;
    if a.row_normalize {
        ds = ds.with_row_normalized_features();
    }
    let mut cfg = GpcaConfig::new(a.alpha, a.k).with_beta(a.beta);
    if let Some(t) = a.common.t {
        cfg = cfg.with_iterations(t);
    }
    let sol = fit(&ds, &cfg)?;
    let ev = &sol.eigenvalues;
    eprintln!(
        "k {}  eigenvalues: first {:.6e}  last {:.6e}  sum {:.6e}",
        sol.k(),
        ev.first().copied().unwrap_or(f64::NAN),
        ev.last().copied().unwrap_or(f64::NAN),
        ev.iter().sum::<f64>()
    );
    if let Some(p) = &a.common.out {
        sol.save(p, true)?;
        log::info!("wrote {}", p.display());
    }
    if let Some(p) = &a.embedding {
        write_features(p, sol.embedding()?, FeatureFormat::Tsv)?;
    }
    Ok(())
}

pub fn init_export(a: &InitExportArgs) -> Result<()> {
    let dir = dataset_dir(&a.common)?;
    let out = a.common.out.as_deref().context("--out is required")?;
    let mut ds = load_dir(dir)?;
    if a.row_normalize {
        ds = ds.with_row_normalized_features();
    }
    let specs = layer_specs(ds.num_features(), a.hidden, ds.num_classes, a.layers);
    let wf = export_gcn_init(&ds, &specs, a.init_seed)?;
    wf.save(out)?;
    eprintln!(
        "exported {} layers: {}",
        specs.len(),
        specs
            .iter()
            .map(|s| format!("{}x{}", s.in_dim, s.out_dim))
            .collect::<Vec<_>>()
            .join(" ")
    );
    Ok(())
}

fn report_selection(label: &str, summaries: &[CellSummary]) {
    match select(summaries) {
        Some(s) => {
            let c = &s.config.cell;
            eprintln!(
                "{label}: selected layers={} hidden={} alpha={} beta={} dropout={} wd={}  val {} ({})  test {} ({})  over {} seeds",
                c.layers,
                c.hidden,
                c.alpha,
                c.beta,
                c.dropout,
                c.weight_decay,
                pct(s.val_mean),
                pct(s.val_std),
                pct(s.test_mean),
                pct(s.test_std),
                s.runs
            );
        }
        None => eprintln!("{label}: no configuration completed"),
    }
}

pub fn train(a: &GridArgs, sink: &Sink) -> Result<Vec<RunRecord>> {
    let cfg = ExperimentConfig::from_map(&config_map(a)?)?;
    let exp = Experiment::load(&cfg.dataset_dir, cfg.row_normalize)?;
    let runs = plan(&cfg);
    let records = execute(&exp, &cfg, "train", &runs, sink);
    let summaries = summarize(&records);
    report_selection(&cfg.method.to_string(), &summaries);
    let chosen = select(&summaries).map(|s| s.config.clone());
    let mut text = String::from(SUMMARY_HEADER);
    text.push('\n');
    for s in &summaries {
        let _ = writeln!(text, "{}", summary_row(s, chosen.as_ref() == Some(&s.config)));
    }
    write_out(a.common.out.as_deref(), &text)?;
    Ok(records)
}

fn with_default(map: &mut ConfigMap, key: &str, value: &str) {
    if map.get(key).is_none() {
        map.set(key, value);
    }
}

pub const FIG2_LAYERS: &str = "2,4,6,8,10";
pub const FIG2_ALPHA: &str = "0.1,0.5,1,2,5,10";

/// Each (layers, α) cell reports the configuration with the best mean
/// validation accuracy among the remaining axes.
pub fn sweep_fig2(a: &GridArgs, sink: &Sink) -> Result<Vec<RunRecord>> {
    let mut map = config_map(a)?;
    with_default(&mut map, "method", "gpcanet");
    with_default(&mut map, "layers", FIG2_LAYERS);
    with_default(&mut map, "alpha", FIG2_ALPHA);
    with_default(&mut map, "hidden", "128");
    let cfg = ExperimentConfig::from_map(&map)?;
    if cfg.method != Method::Gpcanet {
        bail!("sweep-fig2 runs the gpcanet method, got {}", cfg.method);
    }
    let exp = Experiment::load(&cfg.dataset_dir, cfg.row_normalize)?;
    let runs = plan(&cfg);
    let records = execute(&exp, &cfg, "sweep-fig2", &runs, sink);
    let summaries = summarize(&records);

    let mut text = String::from("layers\talpha\thidden\tdropout\tweight_decay\truns\tval_mean\tval_std\ttest_mean\ttest_std\n");
    let mut header = String::from("layers\\alpha");
    for al in &cfg.grid.alpha {
        let _ = write!(header, "\t{al}");
    }
    let mut matrix = vec![header];
    for &l in &cfg.grid.layers {
        let mut row = l.to_string();
        for &al in &cfg.grid.alpha {
            let cell: Vec<CellSummary> = summaries
                .iter()
                .filter(|s| s.config.cell.layers == l && s.config.cell.alpha == al)
                .cloned()
                .collect();
            match select(&cell) {
                Some(s) => {
                    let c = &s.config.cell;
                    let _ = writeln!(
                        text,
                        "{l}\t{al}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
                        c.hidden,
                        c.dropout,
                        c.weight_decay,
                        s.runs,
                        pct(s.val_mean),
                        pct(s.val_std),
                        pct(s.test_mean),
                        pct(s.test_std)
                    );
                    let _ = write!(row, "\t{}", pct(s.test_mean));
                }
                None => {
                    let _ = writeln!(text, "{l}\t{al}\t\t\t\t0\tnan\tnan\tnan\tnan");
                    row.push_str("\tnan");
                }
            }
        }
        matrix.push(row);
    }
    eprintln!("test accuracy, layers x alpha:\n{}", matrix.join("\n"));
    write_out(a.common.out.as_deref(), &text)?;
    Ok(records)
}

pub const COMPARE_LAYERS: &str = "2,3,5,10,15";

pub fn init_compare(a: &InitCompareArgs, sink: &Sink) -> Result<Vec<RunRecord>> {
    let mut map = config_map(&a.grid)?;
    with_default(&mut map, "layers", COMPARE_LAYERS);
    if let Some(n) = a.repeats {
        if n == 0 {
            bail!("--repeats must be >= 1");
        }
        map.set("seeds", format!("0..{n}"));
    }
    map.set("method", "gcn");
    let cfg = ExperimentConfig::from_map(&map)?;
    let g = &cfg.grid;
    if g.hidden.len() > 1 || g.dropout.len() > 1 || g.weight_decay.len() > 1 {
        bail!("init-compare takes a single hidden, dropout and weight_decay value");
    }
    let exp = Experiment::load(&cfg.dataset_dir, cfg.row_normalize)?;
    let mut runs = Vec::new();
    for cell in cfg.cells() {
        for method in [Method::Gcn, Method::GcnGpcainit] {
            let mc = ExperimentConfig {
                method,
                ..cfg.clone()
            };
            let rc = run_config(&mc, cell, default_init(method));
            runs.extend(cfg.seeds.iter().map(|&s| (rc.clone(), s)));
        }
    }
    let records = execute(&exp, &cfg, "init-compare", &runs, sink);
    let summaries = summarize(&records);

    let mut text = String::from("layers\txavier_mean\txavier_std\tgpcanet_mean\tgpcanet_std\tgap\n");
    for &l in &g.layers {
        let find = |init: InitKind| {
            summaries
                .iter()
                .find(|s| s.config.cell.layers == l && s.config.init == init)
        };
        let (Some(x), Some(p)) = (find(InitKind::Xavier), find(InitKind::Gpcanet)) else {
            continue;
        };
        let _ = writeln!(
            text,
            "{l}\t{}\t{}\t{}\t{}\t{}",
            pct(x.test_mean),
            pct(x.test_std),
            pct(p.test_mean),
            pct(p.test_std),
            pct(p.test_mean - x.test_mean)
        );
    }
    eprint!("{text}");
    write_out(a.grid.common.out.as_deref(), &text)?;
    Ok(records)
}
