//! Random hyperparameter search and the two study pipelines built on it:
//! feature-prefix studies and parental-dependence (γ) studies.

use std::fmt::Write as _;
use std::path::Path;

use rand::seq::IndexedRandom;
use rand::Rng;
use rayon::prelude::*;

use crate::dataset::{slice_features, GraphDataset};
use crate::error::{Error, Result};
use crate::features::{make_ws_gamma, WsFamily};
use crate::kv::KvFile;
use crate::nn::ModelKind;
use crate::rng::{self, Domain};
use crate::train::{
    run_model_trials, MetricSummary, ModelSpec, SplitSpec, Task, TrainConfig, TrialPlan,
};

/// Domains sampled by [`random_search`].
#[derive(Clone, Debug, PartialEq)]
pub struct SearchSpace {
    /// Log-uniform.
    pub lr: (f64, f64),
    /// Log-uniform, except that 0 is drawn with `weight_decay_zero_prob`.
    pub weight_decay: (f64, f64),
    pub weight_decay_zero_prob: f64,
    /// Uniform.
    pub dropout: (f64, f64),
    pub hidden_dims: Vec<usize>,
    pub layers: Vec<usize>,
    pub max_epochs: usize,
    pub patience: usize,
}

impl Default for SearchSpace {
    fn default() -> Self {
        Self {
            lr: (1e-4, 1e-1),
            weight_decay: (1e-6, 1e-2),
            weight_decay_zero_prob: 0.25,
            dropout: (0.0, 0.7),
            hidden_dims: vec![16, 64, 128, 256],
            layers: vec![1, 2, 3],
            max_epochs: 2000,
            patience: 100,
        }
    }
}

/// One sampled point of a [`SearchSpace`].
#[derive(Clone, Debug, PartialEq)]
pub struct HyperConfig {
    pub lr: f64,
    pub weight_decay: f64,
    pub dropout: f64,
    pub hidden_dim: usize,
    pub num_layers: usize,
}

impl HyperConfig {
    /// Model and training settings for this point, keeping the non-searched
    /// fields of `base`.
    pub fn apply(&self, kind: ModelKind, base: &TrainConfig) -> (ModelSpec, TrainConfig) {
        let spec = ModelSpec {
            hidden_dim: self.hidden_dim,
            num_layers: self.num_layers,
            ..ModelSpec::new(kind)
        };
        let tc = TrainConfig {
            lr: self.lr,
            weight_decay: self.weight_decay,
            dropout: self.dropout,
            ..base.clone()
        };
        (spec, tc)
    }
}

fn log_uniform<R: Rng>(rng: &mut R, (lo, hi): (f64, f64)) -> f64 {
    if lo == hi {
        return lo;
    }
    rng.random_range(lo.ln()..hi.ln()).exp()
}

impl SearchSpace {
    pub fn validate(&self) -> Result<()> {
        let ordered = |(lo, hi): (f64, f64)| lo.is_finite() && hi.is_finite() && lo <= hi;
        if !ordered(self.lr) || self.lr.0 <= 0.0 {
            return Err(Error::param(format!("lr range {:?} must be positive and ordered", self.lr)));
        }
        if !ordered(self.weight_decay) || self.weight_decay.0 <= 0.0 {
            return Err(Error::param(format!(
                "weight decay range {:?} must be positive and ordered",
                self.weight_decay
            )));
        }
        if !(0.0..=1.0).contains(&self.weight_decay_zero_prob) {
            return Err(Error::param("weight_decay_zero_prob outside [0,1]"));
        }
        if !ordered(self.dropout) || self.dropout.0 < 0.0 || self.dropout.1 >= 1.0 {
            return Err(Error::param(format!("dropout range {:?} must lie in [0,1)", self.dropout)));
        }
        if self.hidden_dims.is_empty() || self.hidden_dims.contains(&0) {
            return Err(Error::param("hidden_dims must be a non-empty list of positive sizes"));
        }
        if self.layers.is_empty() || self.layers.contains(&0) {
            return Err(Error::param("layers must be a non-empty list of positive counts"));
        }
        if self.max_epochs == 0 || self.patience > self.max_epochs {
            return Err(Error::param("need 0 < patience <= max_epochs"));
        }
        Ok(())
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> HyperConfig {
        let lr = log_uniform(rng, self.lr);
        let weight_decay = if rng.random::<f64>() < self.weight_decay_zero_prob {
            0.0
        } else {
            log_uniform(rng, self.weight_decay)
        };
        let dropout = if self.dropout.0 == self.dropout.1 {
            self.dropout.0
        } else {
            rng.random_range(self.dropout.0..self.dropout.1)
        };
        HyperConfig {
            lr,
            weight_decay,
            dropout,
            hidden_dim: *self.hidden_dims.choose(rng).unwrap(),
            num_layers: *self.layers.choose(rng).unwrap(),
        }
    }

    /// Overrides fields from plan keys (`lr_min`, `lr_max`, `weight_decay_min`,
    /// `weight_decay_max`, `weight_decay_zero_prob`, `dropout_min`,
    /// `dropout_max`, `hidden_dims`, `layers`, `max_epochs`, `patience`).
    pub fn apply_plan(&mut self, plan: &KvFile, origin: &Path) -> Result<()> {
        let f = |k: &str| plan.parsed::<f64>(k, origin);
        if let Some(v) = f("lr_min")? {
            self.lr.0 = v;
        }
        if let Some(v) = f("lr_max")? {
            self.lr.1 = v;
        }
        if let Some(v) = f("weight_decay_min")? {
            self.weight_decay.0 = v;
        }
        if let Some(v) = f("weight_decay_max")? {
            self.weight_decay.1 = v;
        }
        if let Some(v) = f("weight_decay_zero_prob")? {
            self.weight_decay_zero_prob = v;
        }
        if let Some(v) = f("dropout_min")? {
            self.dropout.0 = v;
        }
        if let Some(v) = f("dropout_max")? {
            self.dropout.1 = v;
        }
        if let Some(v) = plan.parsed_list("hidden_dims", origin)? {
            self.hidden_dims = v;
        }
        if let Some(v) = plan.parsed_list("layers", origin)? {
            self.layers = v;
        }
        if let Some(v) = plan.parsed("max_epochs", origin)? {
            self.max_epochs = v;
        }
        if let Some(v) = plan.parsed("patience", origin)? {
            self.patience = v;
        }
        self.validate()
    }

    pub fn to_kv(&self, kv: &mut KvFile) {
        kv.push("lr_min", self.lr.0);
        kv.push("lr_max", self.lr.1);
        kv.push("weight_decay_min", self.weight_decay.0);
        kv.push("weight_decay_max", self.weight_decay.1);
        kv.push("weight_decay_zero_prob", self.weight_decay_zero_prob);
        kv.push("dropout_min", self.dropout.0);
        kv.push("dropout_max", self.dropout.1);
        kv.push("hidden_dims", join(&self.hidden_dims));
        kv.push("layers", join(&self.layers));
        kv.push("max_epochs", self.max_epochs);
        kv.push("patience", self.patience);
    }
}

fn join<T: ToString>(xs: &[T]) -> String {
    xs.iter().map(T::to_string).collect::<Vec<_>>().join(",")
}

/// The `budget` configurations a search with `seed` evaluates. Sample `i`
/// comes from its own stream, so it does not depend on the budget.
pub fn sample_configs(space: &SearchSpace, budget: usize, seed: u64) -> Vec<HyperConfig> {
    (0..budget)
        .map(|i| space.sample(&mut rng::stream(seed, Domain::Search, i as u64)))
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct Evaluation {
    pub val: MetricSummary,
    pub test: MetricSummary,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LeaderboardEntry {
    pub index: usize,
    pub config: HyperConfig,
    /// `Err` holds the divergence diagnostic.
    pub result: std::result::Result<Evaluation, String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SearchOutcome {
    pub best_index: usize,
    /// In sample order.
    pub leaderboard: Vec<LeaderboardEntry>,
}

impl SearchOutcome {
    pub fn best(&self) -> &LeaderboardEntry {
        &self.leaderboard[self.best_index]
    }

    pub fn best_evaluation(&self) -> &Evaluation {
        self.best().result.as_ref().expect("best entry succeeded")
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "index,lr,weight_decay,dropout,hidden_dim,num_layers,val_mean,val_std,test_mean,test_std,status\n",
        );
        for e in &self.leaderboard {
            let c = &e.config;
            let _ = write!(
                out,
                "{},{},{},{},{},{},",
                e.index, c.lr, c.weight_decay, c.dropout, c.hidden_dim, c.num_layers
            );
            match &e.result {
                Ok(ev) => {
                    let _ = writeln!(
                        out,
                        "{},{},{},{},ok",
                        ev.val.mean, ev.val.std, ev.test.mean, ev.test.std
                    );
                }
                Err(msg) => {
                    let _ = writeln!(out, ",,,,\"{}\"", msg.replace('"', "'"));
                }
            }
        }
        out
    }
}

/// Evaluates `budget` sampled configurations and returns the one with the
/// highest mean validation metric (earliest sample on ties).
///
/// Evaluations run on the current rayon pool; the leaderboard is always in
/// sample order. Diverged configurations stay on the leaderboard as
/// failures; any other error aborts the search.
pub fn random_search<F>(
    space: &SearchSpace,
    budget: usize,
    seed: u64,
    objective: F,
) -> Result<SearchOutcome>
where
    F: Fn(usize, &HyperConfig) -> Result<Evaluation> + Sync,
{
    if budget == 0 {
        return Err(Error::param("search budget must be at least 1"));
    }
    space.validate()?;
    let configs = sample_configs(space, budget, seed);
    let leaderboard: Vec<LeaderboardEntry> = configs
        .into_par_iter()
        .enumerate()
        .map(|(index, config)| {
            let result = match objective(index, &config) {
                Ok(ev) => Ok(ev),
                Err(e @ Error::Divergence { .. }) => Err(e.to_string()),
                Err(e) => return Err(e),
            };
            Ok(LeaderboardEntry {
                index,
                config,
                result,
            })
        })
        .collect::<Result<_>>()?;
    let mut best: Option<(usize, f64)> = None;
    for e in &leaderboard {
        if let Ok(ev) = &e.result {
            if best.is_none_or(|(_, v)| ev.val.mean > v) {
                best = Some((e.index, ev.val.mean));
            }
        }
    }
    match best {
        Some((best_index, _)) => Ok(SearchOutcome {
            best_index,
            leaderboard,
        }),
        None => {
            let first = leaderboard
                .iter()
                .find_map(|e| e.result.as_ref().err())
                .cloned()
                .unwrap_or_default();
            Err(Error::Sweep(format!(
                "all {budget} configurations diverged; first failure: {first}"
            )))
        }
    }
}

/// Settings shared by tuning runs and studies.
#[derive(Clone, Debug, PartialEq)]
pub struct TuneOptions {
    pub task: Task,
    pub space: SearchSpace,
    pub budget: usize,
    pub search_seed: u64,
    /// Trials per configuration during the search.
    pub search_trials: usize,
    /// Trials for the reported summary at the chosen configuration.
    pub final_trials: usize,
    pub base_seed: u64,
    pub split_seed: u64,
    pub resplit: bool,
    pub splits: SplitSpec,
    pub eval_every: usize,
    pub standardize: bool,
}

impl Default for TuneOptions {
    fn default() -> Self {
        Self {
            task: Task::Link,
            space: SearchSpace::default(),
            budget: 60,
            search_seed: 0,
            search_trials: 1,
            final_trials: 5,
            base_seed: 0,
            split_seed: 0,
            resplit: false,
            splits: SplitSpec::default(),
            eval_every: 1,
            standardize: false,
        }
    }
}

impl TuneOptions {
    fn base_train(&self) -> TrainConfig {
        TrainConfig {
            task: self.task,
            max_epochs: self.space.max_epochs,
            patience: self.space.patience,
            eval_every: self.eval_every,
            standardize: self.standardize,
            ..TrainConfig::default()
        }
    }

    fn plan(&self, n_trials: usize) -> TrialPlan {
        TrialPlan {
            n_trials,
            base_seed: self.base_seed,
            split_seed: self.split_seed,
            resplit: self.resplit,
        }
    }

    pub fn to_kv(&self, kv: &mut KvFile) {
        kv.push("task", self.task.name());
        kv.push("budget", self.budget);
        kv.push("search_seed", self.search_seed);
        kv.push("search_trials", self.search_trials);
        kv.push("trials", self.final_trials);
        kv.push("base_seed", self.base_seed);
        kv.push("split_seed", self.split_seed);
        kv.push("resplit", self.resplit);
        let r = self.splits.link;
        kv.push("link_split", format!("{},{},{}", r.train, r.val, r.test));
        kv.push("eval_every", self.eval_every);
        kv.push("standardize", self.standardize);
        self.space.to_kv(kv);
    }
}

/// Result of tuning one model on one dataset.
#[derive(Clone, Debug, PartialEq)]
pub struct Tuned {
    pub search: SearchOutcome,
    pub best: HyperConfig,
    /// `final_trials`-trial summary at the best configuration.
    pub result: Evaluation,
}

/// Tunes `kind` on `ds` by random search, then reports the chosen
/// configuration over `final_trials` trials.
pub fn tune(ds: &GraphDataset, kind: ModelKind, opts: &TuneOptions) -> Result<Tuned> {
    let base = opts.base_train();
    let evaluate = |config: &HyperConfig, trials: usize| -> Result<Evaluation> {
        let (spec, tc) = config.apply(kind, &base);
        let out = run_model_trials(ds, &spec, &tc, &opts.splits, &opts.plan(trials))?;
        Ok(Evaluation {
            val: out.val,
            test: out.test,
        })
    };
    let search = random_search(&opts.space, opts.budget, opts.search_seed, |_, c| {
        evaluate(c, opts.search_trials)
    })?;
    let best = search.best().config.clone();
    let result = if opts.final_trials == opts.search_trials {
        search.best_evaluation().clone()
    } else {
        evaluate(&best, opts.final_trials)?
    };
    Ok(Tuned {
        search,
        best,
        result,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StudyKind {
    Features,
    Gamma,
    Train,
}

impl StudyKind {
    pub fn name(self) -> &'static str {
        match self {
            StudyKind::Features => "features",
            StudyKind::Gamma => "gamma",
            StudyKind::Train => "train",
        }
    }
}

impl std::str::FromStr for StudyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "features" => Ok(StudyKind::Features),
            "gamma" => Ok(StudyKind::Gamma),
            "train" => Ok(StudyKind::Train),
            other => Err(Error::param(format!("unknown study kind {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StudyPoint {
    pub x: f64,
    pub model: ModelKind,
    pub test: MetricSummary,
    pub val_mean: f64,
    pub best: HyperConfig,
}

/// Per-(point, model) summaries of a study.
#[derive(Clone, Debug, PartialEq)]
pub struct StudyReport {
    pub kind: StudyKind,
    pub dataset: String,
    pub task: Task,
    pub budget: usize,
    pub points: Vec<StudyPoint>,
}

pub const STUDY_CSV_HEADER: &str = "kind,dataset,task,metric,x,model,mean,std,n_trials,values,val_mean,budget,lr,weight_decay,dropout,hidden_dim,num_layers";

impl StudyReport {
    /// Distinct x values in order of first appearance.
    pub fn xs(&self) -> Vec<f64> {
        let mut xs: Vec<f64> = Vec::new();
        for p in &self.points {
            if !xs.contains(&p.x) {
                xs.push(p.x);
            }
        }
        xs
    }

    pub fn models(&self) -> Vec<ModelKind> {
        let mut ms: Vec<ModelKind> = self.points.iter().map(|p| p.model).collect();
        ms.sort();
        ms.dedup();
        ms
    }

    pub fn series(&self, model: ModelKind) -> Vec<&StudyPoint> {
        self.points.iter().filter(|p| p.model == model).collect()
    }

    /// Each model's x values are strictly increasing and appear once.
    pub fn validate(&self) -> Result<()> {
        for m in self.models() {
            let s = self.series(m);
            if s.windows(2).any(|w| w[0].x >= w[1].x) {
                return Err(Error::param(format!("{m} series x values are not strictly increasing")));
            }
        }
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(STUDY_CSV_HEADER);
        out.push('\n');
        for p in &self.points {
            let values: Vec<String> = p.test.values.iter().map(f64::to_string).collect();
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                self.kind.name(),
                self.dataset.replace(',', ";"),
                self.task.name(),
                self.task.metric(),
                p.x,
                p.model,
                p.test.mean,
                p.test.std,
                p.test.n_trials,
                values.join(";"),
                p.val_mean,
                self.budget,
                p.best.lr,
                p.best.weight_decay,
                p.best.dropout,
                p.best.hidden_dim,
                p.best.num_layers
            );
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }

    pub fn parse_csv(text: &str, origin: &Path) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, h)) if h.trim() == STUDY_CSV_HEADER => {}
            _ => return Err(Error::format(origin, "line 1: not a study report header")),
        }
        let mut report: Option<StudyReport> = None;
        for (i, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let lineno = i + 1;
            let bad = |what: &str| Error::format(origin, format!("line {lineno}: bad {what}"));
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() != 17 {
                return Err(Error::format(
                    origin,
                    format!("line {lineno}: expected 17 columns, found {}", cols.len()),
                ));
            }
            let kind: StudyKind = cols[0].parse().map_err(|_| bad("kind"))?;
            let task: Task = cols[2].parse().map_err(|_| bad("task"))?;
            let num = |j: usize, what: &str| cols[j].parse::<f64>().map_err(|_| bad(what));
            let int = |j: usize, what: &str| cols[j].parse::<usize>().map_err(|_| bad(what));
            let values = cols[9]
                .split(';')
                .map(|v| v.parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|_| bad("values"))?;
            let mut test = MetricSummary::from_values(values).map_err(|_| bad("values"))?;
            test.mean = num(6, "mean")?;
            test.std = num(7, "std")?;
            let point = StudyPoint {
                x: num(4, "x")?,
                model: cols[5].parse().map_err(|_| bad("model"))?,
                test,
                val_mean: num(10, "val_mean")?,
                best: HyperConfig {
                    lr: num(12, "lr")?,
                    weight_decay: num(13, "weight_decay")?,
                    dropout: num(14, "dropout")?,
                    hidden_dim: int(15, "hidden_dim")?,
                    num_layers: int(16, "num_layers")?,
                },
            };
            let r = report.get_or_insert_with(|| StudyReport {
                kind,
                dataset: cols[1].to_string(),
                task,
                budget: cols[11].parse().unwrap_or(0),
                points: Vec::new(),
            });
            r.points.push(point);
        }
        report.ok_or_else(|| Error::format(origin, "no rows"))
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_csv(&text, path)
    }
}

/// Feature counts `increment, 2·increment, …` below `cols`, then `cols`.
pub fn feature_grid(cols: usize, increment: usize) -> Result<Vec<usize>> {
    if increment == 0 || increment > cols {
        return Err(Error::param(format!("increment {increment} outside 1..={cols}")));
    }
    let mut grid: Vec<usize> = (1..).map(|k| k * increment).take_while(|&n| n < cols).collect();
    grid.push(cols);
    Ok(grid)
}

fn study_points<F>(xs: &[f64], models: &[ModelKind], opts: &TuneOptions, dataset_at: F) -> Result<Vec<StudyPoint>>
where
    F: Fn(usize) -> Result<GraphDataset> + Sync,
{
    let mut points = Vec::new();
    for (i, &x) in xs.iter().enumerate() {
        let ds = dataset_at(i)?;
        for &model in models {
            let tuned = tune(&ds, model, opts)?;
            log::info!(
                "{} {model}: test {:.4} ± {:.4} (val {:.4})",
                ds.name,
                tuned.result.test.mean,
                tuned.result.test.std,
                tuned.result.val.mean
            );
            points.push(StudyPoint {
                x,
                model,
                val_mean: tuned.result.val.mean,
                test: tuned.result.test,
                best: tuned.best,
            });
        }
    }
    Ok(points)
}

/// Tunes each model on prefix slices of the features: widths
/// [`feature_grid`]`(cols, increment)`.
pub fn feature_study(
    ds: &GraphDataset,
    increment: usize,
    models: &[ModelKind],
    opts: &TuneOptions,
) -> Result<StudyReport> {
    if models.is_empty() {
        return Err(Error::param("feature study needs at least one model"));
    }
    let grid = feature_grid(ds.features.cols(), increment)?;
    let xs: Vec<f64> = grid.iter().map(|&n| n as f64).collect();
    let points = study_points(&xs, models, opts, |i| slice_features(ds, grid[i]))?;
    let report = StudyReport {
        kind: StudyKind::Features,
        dataset: ds.name.clone(),
        task: opts.task,
        budget: opts.budget,
        points,
    };
    report.validate()?;
    Ok(report)
}

/// Tunes each model on the parental-dependence family over one shared
/// graph, one point per γ (sorted ascending).
pub fn gamma_study(
    family: &WsFamily,
    gammas: &[f64],
    models: &[ModelKind],
    opts: &TuneOptions,
) -> Result<StudyReport> {
    if gammas.is_empty() || models.is_empty() {
        return Err(Error::param("gamma study needs at least one γ and one model"));
    }
    if gammas.iter().any(|g| !g.is_finite()) {
        return Err(Error::param("γ values must be finite"));
    }
    let mut xs = gammas.to_vec();
    xs.sort_by(f64::total_cmp);
    if xs.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::param("γ values must be distinct"));
    }
    let points = study_points(&xs, models, opts, |i| make_ws_gamma(family, xs[i]))?;
    let (g, _) = family.graph()?;
    let report = StudyReport {
        kind: StudyKind::Gamma,
        dataset: format!("WS{}-{}edges", family.n, g.num_edges()),
        task: opts.task,
        budget: opts.budget,
        points,
    };
    report.validate()?;
    Ok(report)
}
