//! The `gnb` command line.
//!
//! Every command writes `manifest.txt` into its output directory. The
//! manifest records the resolved configuration and the exact argument list,
//! and `gnb replay` re-runs it.

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::dataset::GraphDataset;
use crate::error::{Error, Result};
use crate::features::{make_ws, make_ws_gamma, WsFamily};
use crate::io::{import_external, load_dataset, save_dataset};
use crate::kv::KvFile;
use crate::nn::{save_checkpoint, ModelKind};
use crate::report::{render_svg, render_table};
use crate::split::{NodeSplitPolicy, SplitRatios};
use crate::sweep::{
    feature_study, gamma_study, tune, SearchSpace, StudyKind, StudyPoint, StudyReport,
    TuneOptions,
};
use crate::train::{run_model_trials, ModelSpec, SplitSpec, Task, TrainConfig, TrialPlan};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Parser, Debug)]
#[command(name = "gnb", version, about = "Synthetic graph benchmarks and feature-leakage studies")]
pub struct Cli {
    /// Default for every seed flag.
    #[arg(long, global = true, env = "GNB_SEED", default_value_t = 0)]
    pub seed: u64,

    /// Worker threads for trials and sweep evaluations.
    #[arg(long, global = true, default_value_t = 1)]
    pub jobs: usize,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate a WS1000 dataset.
    Synth(SynthArgs),
    /// Train one model for several trials.
    Train(TrainArgs),
    /// Random-search hyperparameters for one model.
    Sweep(SweepArgs),
    /// Feature-prefix or parental-dependence study.
    Study(StudyArgs),
    /// Tables and plots from report CSVs.
    Report(ReportArgs),
    /// Convert an external dataset into the native layout.
    Import(ImportArgs),
    /// Re-run the command recorded in a manifest.
    Replay(ReplayArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Family {
    Ws1000,
    Ws1000Gamma,
}

#[derive(Args, Debug, Clone)]
pub struct FamilyArgs {
    #[arg(long)]
    pub graph_seed: Option<u64>,
    #[arg(long)]
    pub feature_seed: Option<u64>,
    /// Seed for the BFS root; defaults to the graph seed.
    #[arg(long)]
    pub root_seed: Option<u64>,
    #[arg(long, default_value_t = 1000)]
    pub nodes: usize,
    #[arg(long, default_value_t = 4)]
    pub k: usize,
    #[arg(long, default_value_t = 0.5)]
    pub beta: f64,
    #[arg(long, default_value_t = 1000)]
    pub dim: usize,
}

impl FamilyArgs {
    fn family(&self, seed: u64) -> WsFamily {
        let graph_seed = self.graph_seed.unwrap_or(seed);
        WsFamily {
            n: self.nodes,
            k: self.k,
            beta: self.beta,
            dim: self.dim,
            graph_seed,
            feature_seed: self.feature_seed.unwrap_or(seed),
            root_seed: self.root_seed.unwrap_or(graph_seed),
        }
    }
}

#[derive(Args, Debug)]
pub struct SynthArgs {
    #[arg(long, value_enum, default_value = "ws1000")]
    pub family: Family,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[command(flatten)]
    pub ws: FamilyArgs,
    #[arg(long)]
    pub out: PathBuf,
}

/// Split, trial and training-loop settings shared by train, sweep and study.
#[derive(Args, Debug, Clone)]
pub struct RunArgs {
    #[arg(long, default_value = "link")]
    pub task: Task,
    /// `key=value` plan file; flags given on the command line take precedence.
    #[arg(long)]
    pub plan: Option<PathBuf>,
    #[arg(long)]
    pub trials: Option<usize>,
    /// Split seed; defaults to the global seed.
    #[arg(long)]
    pub split_seed: Option<u64>,
    /// Draw a fresh split for every trial.
    #[arg(long)]
    pub resplit: bool,
    /// Link split fractions `train,val,test`.
    #[arg(long, value_delimiter = ',', num_args = 3)]
    pub link_split: Option<Vec<f64>>,
    /// Training nodes per class (node task).
    #[arg(long)]
    pub per_class: Option<usize>,
    /// Validation nodes (node task).
    #[arg(long)]
    pub val_nodes: Option<usize>,
    /// Use ratio node splits `train,val` instead of per-class counts.
    #[arg(long, value_delimiter = ',', num_args = 2)]
    pub node_ratio: Option<Vec<f64>>,
    #[arg(long)]
    pub max_epochs: Option<usize>,
    #[arg(long)]
    pub patience: Option<usize>,
    #[arg(long)]
    pub eval_every: Option<usize>,
    /// Z-score feature columns.
    #[arg(long)]
    pub standardize: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    #[arg(long)]
    pub model: ModelKind,
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub weight_decay: Option<f64>,
    #[arg(long)]
    pub dropout: Option<f64>,
    #[arg(long)]
    pub hidden: Option<usize>,
    /// Weight layers (an MLP has one fewer hidden layer).
    #[arg(long)]
    pub layers: Option<usize>,
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Args, Debug, Clone)]
pub struct SearchArgs {
    #[arg(long)]
    pub budget: Option<usize>,
    /// Trials per configuration during the search.
    #[arg(long)]
    pub search_trials: Option<usize>,
    /// Search seed; defaults to the global seed.
    #[arg(long)]
    pub search_seed: Option<u64>,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    #[arg(long)]
    pub model: ModelKind,
    #[arg(long)]
    pub data: PathBuf,
    #[command(flatten)]
    pub search: SearchArgs,
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum StudyKindArg {
    Features,
    Gamma,
}

#[derive(Args, Debug)]
pub struct StudyArgs {
    #[arg(long, value_enum)]
    pub kind: StudyKindArg,
    #[arg(long, value_delimiter = ',', default_value = "mlp,gcn")]
    pub models: Vec<ModelKind>,
    /// Dataset for a features study.
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub increment: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    pub gammas: Option<Vec<f64>>,
    #[command(flatten)]
    pub ws: FamilyArgs,
    #[command(flatten)]
    pub search: SearchArgs,
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Args, Debug)]
pub struct ReportArgs {
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    /// Write an SVG line plot here.
    #[arg(long)]
    pub plot: Option<PathBuf>,
    /// Write the table here instead of stdout.
    #[arg(long)]
    pub table: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ImportArgs {
    #[arg(long)]
    pub edges: PathBuf,
    #[arg(long)]
    pub features: PathBuf,
    #[arg(long)]
    pub labels: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct ReplayArgs {
    pub manifest: PathBuf,
    /// Output directory for the replay; defaults to the recorded one.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Record of one command invocation, written as `manifest.txt`.
pub struct RunManifest {
    pub command: String,
    pub argv: Vec<String>,
    pub config: KvFile,
    pub outputs: Vec<PathBuf>,
}

impl RunManifest {
    fn new(command: &str, argv: &[String]) -> Self {
        Self {
            command: command.into(),
            argv: argv.to_vec(),
            config: KvFile::new(),
            outputs: Vec::new(),
        }
    }

    fn write(&self, dir: &Path, wall: f64) -> Result<()> {
        let mut kv = KvFile::new();
        kv.push("command", &self.command);
        kv.push("tool_version", VERSION);
        for (i, a) in self.argv.iter().enumerate() {
            kv.push(format!("argv.{i}"), a);
        }
        for (k, v) in self.config.entries() {
            kv.push(format!("config.{k}"), v);
        }
        for (i, p) in self.outputs.iter().enumerate() {
            kv.push(format!("output.{i}"), p.display());
        }
        kv.push("wall_time_secs", format!("{wall:.3}"));
        kv.write(&dir.join("manifest.txt"))
    }

    /// Recorded argument list.
    pub fn read_argv(path: &Path) -> Result<Vec<String>> {
        let kv = KvFile::read(path)?;
        let argv: Vec<String> = (0..)
            .map_while(|i| kv.get(&format!("argv.{i}")).map(str::to_string))
            .collect();
        if argv.is_empty() {
            return Err(Error::format(path, "manifest has no argv entries"));
        }
        Ok(argv)
    }
}

fn plan_of(run: &RunArgs) -> Result<Option<(KvFile, PathBuf)>> {
    run.plan
        .as_ref()
        .map(|p| KvFile::read(p).map(|kv| (kv, p.clone())))
        .transpose()
}

/// Flag, then plan key, then default.
fn pick<T: std::str::FromStr>(
    flag: Option<T>,
    plan: &Option<(KvFile, PathBuf)>,
    key: &str,
    default: T,
) -> Result<T> {
    if let Some(v) = flag {
        return Ok(v);
    }
    if let Some((kv, path)) = plan {
        if let Some(v) = kv.parsed(key, path)? {
            return Ok(v);
        }
    }
    Ok(default)
}

fn split_spec(run: &RunArgs, plan: &Option<(KvFile, PathBuf)>) -> Result<SplitSpec> {
    let mut spec = SplitSpec::default();
    let link = match &run.link_split {
        Some(v) => Some(v.clone()),
        None => match plan {
            Some((kv, p)) => kv.parsed_list::<f64>("link_split", p)?,
            None => None,
        },
    };
    if let Some(v) = link {
        if v.len() != 3 {
            return Err(Error::param("link split needs three fractions"));
        }
        spec.link = SplitRatios { train: v[0], val: v[1], test: v[2] };
        spec.link.validate()?;
    }
    if let Some(v) = &run.node_ratio {
        spec.node = NodeSplitPolicy::Ratio { train: v[0], val: v[1] };
    } else if let NodeSplitPolicy::PerClass { per_class, val } = spec.node {
        spec.node = NodeSplitPolicy::PerClass {
            per_class: pick(run.per_class, plan, "per_class", per_class)?,
            val: pick(run.val_nodes, plan, "val_nodes", val)?,
        };
    }
    Ok(spec)
}

fn split_kv(kv: &mut KvFile, s: &SplitSpec) {
    kv.push("link_split", format!("{},{},{}", s.link.train, s.link.val, s.link.test));
    match s.node {
        NodeSplitPolicy::PerClass { per_class, val } => {
            kv.push("node_split", format!("per_class:{per_class},val:{val}"))
        }
        NodeSplitPolicy::Ratio { train, val } => {
            kv.push("node_split", format!("ratio:{train},{val}"))
        }
    }
}

fn tune_options(
    seed: u64,
    search: &SearchArgs,
    run: &RunArgs,
    plan: &Option<(KvFile, PathBuf)>,
) -> Result<TuneOptions> {
    let mut space = SearchSpace::default();
    if let Some((kv, p)) = plan {
        space.apply_plan(kv, p)?;
    }
    space.max_epochs = run.max_epochs.unwrap_or(space.max_epochs);
    space.patience = run.patience.unwrap_or(space.patience);
    space.validate()?;
    let d = TuneOptions::default();
    let opts = TuneOptions {
        task: run.task,
        space,
        budget: pick(search.budget, plan, "budget", d.budget)?,
        search_seed: pick(search.search_seed, plan, "search_seed", seed)?,
        search_trials: pick(search.search_trials, plan, "search_trials", d.search_trials)?,
        final_trials: pick(run.trials, plan, "trials", d.final_trials)?,
        base_seed: seed,
        split_seed: pick(run.split_seed, plan, "split_seed", seed)?,
        resplit: run.resplit,
        splits: split_spec(run, plan)?,
        eval_every: pick(run.eval_every, plan, "eval_every", 1)?,
        standardize: run.standardize,
    };
    if opts.search_trials == 0 || opts.final_trials == 0 {
        return Err(Error::param("trial counts must be positive"));
    }
    Ok(opts)
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write_file(path: &Path, body: &str, m: &mut RunManifest) -> Result<()> {
    std::fs::write(path, body).map_err(|e| Error::io(path, e))?;
    m.outputs.push(path.to_path_buf());
    Ok(())
}

fn cmd_synth(seed: u64, a: &SynthArgs, m: &mut RunManifest) -> Result<PathBuf> {
    let family = a.ws.family(seed);
    let ds = match (a.family, a.gamma) {
        (Family::Ws1000, None) => make_ws(&family)?,
        (Family::Ws1000, Some(_)) => {
            return Err(Error::param("--gamma applies to --family ws1000-gamma"))
        }
        (Family::Ws1000Gamma, Some(g)) => make_ws_gamma(&family, g)?,
        (Family::Ws1000Gamma, None) => return Err(Error::param("ws1000-gamma needs --gamma")),
    };
    save_dataset(&ds, &a.out)?;
    family_kv(&mut m.config, &family);
    if let Some(g) = a.gamma {
        m.config.push("gamma", g);
    }
    m.outputs.push(a.out.clone());
    log::info!("wrote {} ({} nodes, {} edges) to {}", ds.name, ds.num_nodes(), ds.graph.num_edges(), a.out.display());
    Ok(a.out.clone())
}

fn family_kv(kv: &mut KvFile, f: &WsFamily) {
    kv.push("ws_n", f.n);
    kv.push("ws_k", f.k);
    kv.push("ws_beta", f.beta);
    kv.push("feature_dim", f.dim);
    kv.push("graph_seed", f.graph_seed);
    kv.push("feature_seed", f.feature_seed);
    kv.push("root_seed", f.root_seed);
}

fn single_point_report(
    ds: &GraphDataset,
    task: Task,
    budget: usize,
    point: StudyPoint,
) -> StudyReport {
    StudyReport {
        kind: StudyKind::Train,
        dataset: ds.name.clone(),
        task,
        budget,
        points: vec![point],
    }
}

fn cmd_train(seed: u64, a: &TrainArgs, m: &mut RunManifest) -> Result<PathBuf> {
    let plan = plan_of(&a.run)?;
    let ds = load_dataset(&a.data)?;
    let base = ModelSpec::new(a.model);
    let spec = ModelSpec {
        hidden_dim: pick(a.hidden, &plan, "hidden_dim", base.hidden_dim)?,
        num_layers: pick(a.layers, &plan, "num_layers", base.num_layers)?,
        ..base
    };
    let d = TrainConfig::default();
    let tc = TrainConfig {
        task: a.run.task,
        max_epochs: pick(a.run.max_epochs, &plan, "max_epochs", d.max_epochs)?,
        patience: pick(a.run.patience, &plan, "patience", d.patience)?,
        lr: pick(a.lr, &plan, "lr", d.lr)?,
        weight_decay: pick(a.weight_decay, &plan, "weight_decay", d.weight_decay)?,
        dropout: pick(a.dropout, &plan, "dropout", d.dropout)?,
        seed,
        eval_every: pick(a.run.eval_every, &plan, "eval_every", d.eval_every)?,
        standardize: a.run.standardize,
    };
    let splits = split_spec(&a.run, &plan)?;
    let trial_plan = TrialPlan {
        n_trials: pick(a.run.trials, &plan, "trials", 5)?,
        base_seed: seed,
        split_seed: pick(a.run.split_seed, &plan, "split_seed", seed)?,
        resplit: a.run.resplit,
    };
    let out = run_model_trials(&ds, &spec, &tc, &splits, &trial_plan)?;

    let dir = &a.run.out;
    ensure_dir(dir)?;
    m.config.push("data", a.data.display());
    m.config.push("dataset", &ds.name);
    m.config.push("trials", trial_plan.n_trials);
    m.config.push("base_seed", trial_plan.base_seed);
    m.config.push("split_seed", trial_plan.split_seed);
    m.config.push("resplit", trial_plan.resplit);
    split_kv(&mut m.config, &splits);
    for (k, v) in out.reports[0].to_kv().entries() {
        if !matches!(k.as_str(), "best_val" | "test_at_best_val" | "best_epoch" | "epochs_run" | "wall_time_secs" | "seed") {
            m.config.push(k, v);
        }
    }

    let metric = tc.task.metric();
    let mut report = KvFile::new();
    report.push("dataset", &ds.name);
    report.push("model", a.model);
    report.push("task", tc.task.name());
    report.push("trials", out.test.n_trials);
    report.push(format!("test_{metric}_mean"), out.test.mean);
    report.push(format!("test_{metric}_std"), out.test.std);
    report.push(format!("val_{metric}_mean"), out.val.mean);
    report.push(format!("val_{metric}_std"), out.val.std);
    for (t, r) in out.reports.iter().enumerate() {
        report.push(format!("trial.{t}.seed"), r.config.seed);
        report.push(format!("trial.{t}.test_{metric}"), r.test_at_best);
        report.push(format!("trial.{t}.val_{metric}"), r.best_val);
        report.push(format!("trial.{t}.best_epoch"), r.best_epoch);
        report.push(format!("trial.{t}.epochs_run"), r.epochs_run);
        let curve = dir.join(format!("curve_{t}.csv"));
        write_file(&curve, &r.curve_csv(), m)?;
    }
    let report_path = dir.join("report.txt");
    write_file(&report_path, &report.render(), m)?;
    let ckpt = dir.join("checkpoint");
    save_checkpoint(&ckpt, &out.reports[0].model_config, &out.reports[0].best_params)?;
    m.outputs.push(ckpt);

    let best = crate::sweep::HyperConfig {
        lr: tc.lr,
        weight_decay: tc.weight_decay,
        dropout: tc.dropout,
        hidden_dim: spec.hidden_dim,
        num_layers: spec.num_layers,
    };
    let study = single_point_report(
        &ds,
        tc.task,
        0,
        StudyPoint {
            x: ds.features.cols() as f64,
            model: a.model,
            test: out.test.clone(),
            val_mean: out.val.mean,
            best,
        },
    );
    write_file(&dir.join("study.csv"), &study.to_csv(), m)?;
    println!(
        "{} {} {}: test {metric} {:.4} ± {:.4} over {} trials",
        ds.name, a.model, tc.task.name(), out.test.mean, out.test.std, out.test.n_trials
    );
    Ok(dir.clone())
}

fn cmd_sweep(seed: u64, a: &SweepArgs, m: &mut RunManifest) -> Result<PathBuf> {
    let plan = plan_of(&a.run)?;
    let ds = load_dataset(&a.data)?;
    let opts = tune_options(seed, &a.search, &a.run, &plan)?;
    let tuned = tune(&ds, a.model, &opts)?;
    let dir = &a.run.out;
    ensure_dir(dir)?;
    m.config.push("data", a.data.display());
    m.config.push("dataset", &ds.name);
    m.config.push("model", a.model);
    opts.to_kv(&mut m.config);
    split_kv(&mut m.config, &opts.splits);

    write_file(&dir.join("leaderboard.csv"), &tuned.search.to_csv(), m)?;
    let metric = opts.task.metric();
    let mut best = KvFile::new();
    best.push("model", a.model);
    best.push("budget", opts.budget);
    best.push("best_index", tuned.search.best_index);
    best.push("lr", tuned.best.lr);
    best.push("weight_decay", tuned.best.weight_decay);
    best.push("dropout", tuned.best.dropout);
    best.push("hidden_dim", tuned.best.hidden_dim);
    best.push("num_layers", tuned.best.num_layers);
    best.push("trials", tuned.result.test.n_trials);
    best.push(format!("test_{metric}_mean"), tuned.result.test.mean);
    best.push(format!("test_{metric}_std"), tuned.result.test.std);
    best.push(format!("val_{metric}_mean"), tuned.result.val.mean);
    write_file(&dir.join("best.txt"), &best.render(), m)?;
    let study = single_point_report(
        &ds,
        opts.task,
        opts.budget,
        StudyPoint {
            x: ds.features.cols() as f64,
            model: a.model,
            test: tuned.result.test.clone(),
            val_mean: tuned.result.val.mean,
            best: tuned.best.clone(),
        },
    );
    write_file(&dir.join("study.csv"), &study.to_csv(), m)?;
    println!(
        "{} {} tuned over {} configs: test {metric} {:.4} ± {:.4}",
        ds.name, a.model, opts.budget, tuned.result.test.mean, tuned.result.test.std
    );
    Ok(dir.clone())
}

fn cmd_study(seed: u64, a: &StudyArgs, m: &mut RunManifest) -> Result<PathBuf> {
    let plan = plan_of(&a.run)?;
    let opts = tune_options(seed, &a.search, &a.run, &plan)?;
    let models = match &plan {
        Some((kv, p)) if !m.argv.iter().any(|s| s == "--models") => {
            kv.parsed_list::<ModelKind>("models", p)?.unwrap_or_else(|| a.models.clone())
        }
        _ => a.models.clone(),
    };
    let report = match a.kind {
        StudyKindArg::Features => {
            let data = a
                .data
                .as_ref()
                .ok_or_else(|| Error::param("features study needs --data"))?;
            let ds = load_dataset(data)?;
            let increment = pick(a.increment, &plan, "increment", 100)?;
            m.config.push("data", data.display());
            m.config.push("increment", increment);
            feature_study(&ds, increment, &models, &opts)?
        }
        StudyKindArg::Gamma => {
            let gammas = match (&a.gammas, &plan) {
                (Some(g), _) => g.clone(),
                (None, Some((kv, p))) => kv.parsed_list("gammas", p)?.unwrap_or_default(),
                (None, None) => Vec::new(),
            };
            let gammas = if gammas.is_empty() {
                vec![0.0, 0.2, 0.4, 0.6, 0.8, 1.0]
            } else {
                gammas
            };
            let family = a.ws.family(seed);
            family_kv(&mut m.config, &family);
            m.config.push(
                "gammas",
                gammas.iter().map(f64::to_string).collect::<Vec<_>>().join(","),
            );
            gamma_study(&family, &gammas, &models, &opts)?
        }
    };
    m.config.push(
        "models",
        models.iter().map(|k| k.name()).collect::<Vec<_>>().join(","),
    );
    opts.to_kv(&mut m.config);
    split_kv(&mut m.config, &opts.splits);
    let dir = &a.run.out;
    ensure_dir(dir)?;
    write_file(&dir.join("study.csv"), &report.to_csv(), m)?;
    let table = render_table(std::slice::from_ref(&report))?;
    write_file(&dir.join("table.txt"), &table, m)?;
    write_file(&dir.join("plot.svg"), &render_svg(std::slice::from_ref(&report))?, m)?;
    print!("{table}");
    Ok(dir.clone())
}

fn cmd_report(a: &ReportArgs, m: &mut RunManifest) -> Result<Option<PathBuf>> {
    let reports = a
        .inputs
        .iter()
        .map(|p| StudyReport::read_csv(p))
        .collect::<Result<Vec<_>>>()?;
    let table = render_table(&reports)?;
    match &a.table {
        Some(p) => write_file(p, &table, m)?,
        None => print!("{table}"),
    }
    if let Some(p) = &a.plot {
        write_file(p, &render_svg(&reports)?, m)?;
    }
    m.config.push(
        "inputs",
        a.inputs.iter().map(|p| p.display().to_string()).collect::<Vec<_>>().join(","),
    );
    let dir = a
        .plot
        .as_ref()
        .or(a.table.as_ref())
        .and_then(|p| p.parent())
        .map(|p| if p.as_os_str().is_empty() { Path::new(".") } else { p })
        .map(Path::to_path_buf);
    Ok(dir)
}

fn cmd_import(a: &ImportArgs, m: &mut RunManifest) -> Result<PathBuf> {
    let ds = import_external(&a.edges, &a.features, a.labels.as_deref())?;
    save_dataset(&ds, &a.out)?;
    m.config.push("edges", a.edges.display());
    m.config.push("features", a.features.display());
    if let Some(l) = &a.labels {
        m.config.push("labels", l.display());
    }
    m.outputs.push(a.out.clone());
    println!(
        "imported {} ({} nodes, {} edges, {} features)",
        ds.name,
        ds.num_nodes(),
        ds.graph.num_edges(),
        ds.features.cols()
    );
    Ok(a.out.clone())
}

fn replay_argv(a: &ReplayArgs) -> Result<Vec<String>> {
    let mut argv = RunManifest::read_argv(&a.manifest)?;
    if argv.iter().skip(1).any(|s| s == "replay") {
        return Err(Error::param("refusing to replay a replay manifest"));
    }
    if let Some(out) = &a.out {
        let out = out.display().to_string();
        let mut replaced = false;
        for i in 1..argv.len() {
            if argv[i - 1] == "--out" {
                argv[i] = out.clone();
                replaced = true;
            } else if argv[i].starts_with("--out=") {
                argv[i] = format!("--out={out}");
                replaced = true;
            }
        }
        if !replaced {
            return Err(Error::param("recorded command has no --out to redirect"));
        }
    }
    // Replays run single-threaded.
    argv.retain(|s| !s.starts_with("--jobs="));
    while let Some(i) = argv.iter().position(|s| s == "--jobs") {
        argv.drain(i..(i + 2).min(argv.len()));
    }
    Ok(argv)
}

/// Runs a parsed command line inside a pool of `cli.jobs` threads.
pub fn execute(cli: Cli, argv: &[String]) -> Result<()> {
    if let Command::Replay(a) = &cli.command {
        let argv = replay_argv(a)?;
        let replayed = Cli::try_parse_from(&argv)
            .map_err(|e| Error::format(&a.manifest, format!("recorded argv does not parse: {e}")))?;
        return execute(replayed, &argv);
    }
    if cli.jobs == 0 {
        return Err(Error::param("--jobs must be at least 1"));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.jobs)
        .build()
        .map_err(|e| Error::param(format!("thread pool: {e}")))?;
    let seed = cli.seed;
    let start = Instant::now();
    let name = match &cli.command {
        Command::Synth(_) => "synth",
        Command::Train(_) => "train",
        Command::Sweep(_) => "sweep",
        Command::Study(_) => "study",
        Command::Report(_) => "report",
        Command::Import(_) => "import",
        Command::Replay(_) => unreachable!(),
    };
    let mut m = RunManifest::new(name, argv);
    m.config.push("seed", seed);
    m.config.push("jobs", cli.jobs);
    let dir = pool.install(|| -> Result<Option<PathBuf>> {
        Ok(match &cli.command {
            Command::Synth(a) => Some(cmd_synth(seed, a, &mut m)?),
            Command::Train(a) => Some(cmd_train(seed, a, &mut m)?),
            Command::Sweep(a) => Some(cmd_sweep(seed, a, &mut m)?),
            Command::Study(a) => Some(cmd_study(seed, a, &mut m)?),
            Command::Report(a) => cmd_report(a, &mut m)?,
            Command::Import(a) => Some(cmd_import(a, &mut m)?),
            Command::Replay(_) => unreachable!(),
        })
    })?;
    if let Some(dir) = dir {
        m.write(&dir, start.elapsed().as_secs_f64())?;
    }
    Ok(())
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<String> = args
        .into_iter()
        .map(|a| a.into().to_string_lossy().into_owned())
        .collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli, &argv) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("gnb: {} error: {e}", e.category());
            e.exit_code()
        }
    }
}
