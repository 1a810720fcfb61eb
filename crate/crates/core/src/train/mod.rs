//! Full-batch training with early stopping, and multi-trial aggregation.

mod fit;
mod metrics;

use std::fmt::Write as _;
use std::path::Path;
use std::time::Duration;

use rayon::prelude::*;

pub use fit::{evaluate_link, evaluate_node, train_link, train_node};
pub use metrics::{accuracy, argmax_rows, roc_auc, MetricSummary};

use crate::dataset::GraphDataset;
use crate::error::{Error, Result};
use crate::kv::KvFile;
use crate::nn::{GcnConfig, MlpConfig, ModelConfig, ModelKind, Params};
use crate::split::{link_split, node_split, NodeSplitPolicy, SplitRatios};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Task {
    Link,
    Node,
}

impl Task {
    pub fn name(self) -> &'static str {
        match self {
            Task::Link => "link",
            Task::Node => "node",
        }
    }

    /// Name of the metric reported for the task.
    pub fn metric(self) -> &'static str {
        match self {
            Task::Link => "roc_auc",
            Task::Node => "accuracy",
        }
    }
}

impl std::str::FromStr for Task {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "link" => Ok(Task::Link),
            "node" => Ok(Task::Node),
            other => Err(Error::param(format!("unknown task {other:?} (expected link or node)"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub task: Task,
    pub max_epochs: usize,
    /// Epochs without a validation improvement before stopping.
    pub patience: usize,
    pub lr: f64,
    pub weight_decay: f64,
    pub dropout: f64,
    pub seed: u64,
    pub eval_every: usize,
    /// Z-score feature columns before training.
    pub standardize: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            task: Task::Link,
            max_epochs: 2000,
            patience: 100,
            lr: 0.01,
            weight_decay: 0.0,
            dropout: 0.0,
            seed: 0,
            eval_every: 1,
            standardize: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_epochs == 0 || self.eval_every == 0 {
            return Err(Error::param("max_epochs and eval_every must be positive"));
        }
        if self.patience > self.max_epochs {
            return Err(Error::param(format!(
                "patience {} exceeds max_epochs {}",
                self.patience, self.max_epochs
            )));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::param(format!("learning rate {} must be positive", self.lr)));
        }
        if !(self.weight_decay >= 0.0 && self.weight_decay.is_finite()) {
            return Err(Error::param("weight decay must be non-negative"));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::param(format!("dropout {} outside [0,1)", self.dropout)));
        }
        Ok(())
    }
}

/// Architecture choices shared by both encoders. `num_layers` counts weight
/// layers, so an MLP has `num_layers - 1` hidden layers.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelSpec {
    pub kind: ModelKind,
    pub hidden_dim: usize,
    pub num_layers: usize,
    pub self_loops: bool,
    pub bias: bool,
}

impl ModelSpec {
    pub fn new(kind: ModelKind) -> Self {
        Self {
            kind,
            hidden_dim: 64,
            num_layers: match kind {
                ModelKind::Mlp => 3,
                ModelKind::Gcn => 2,
            },
            self_loops: true,
            bias: true,
        }
    }

    pub fn config(&self, in_dim: usize, out_dim: usize, dropout: f64) -> ModelConfig {
        match self.kind {
            ModelKind::Mlp => ModelConfig::Mlp(MlpConfig {
                in_dim,
                hidden_dims: vec![self.hidden_dim; self.num_layers.saturating_sub(1)],
                out_dim,
                dropout,
                activation: Default::default(),
                weight_init: Default::default(),
                bias: self.bias,
            }),
            ModelKind::Gcn => ModelConfig::Gcn(GcnConfig {
                in_dim,
                hidden_dim: self.hidden_dim,
                out_dim,
                num_layers: self.num_layers,
                dropout,
                self_loops: self.self_loops,
                bias: self.bias,
            }),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub loss: f64,
    pub val: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct TrainReport {
    pub model: ModelSpec,
    pub config: TrainConfig,
    pub model_config: ModelConfig,
    pub best_val: f64,
    /// Test metric of the parameters that achieved `best_val`.
    pub test_at_best: f64,
    pub best_epoch: usize,
    pub epochs_run: usize,
    pub curve: Vec<EpochRecord>,
    pub best_params: Params,
    pub wall_time: Duration,
}

impl PartialEq for TrainReport {
    /// Everything except wall time.
    fn eq(&self, other: &Self) -> bool {
        self.model == other.model
            && self.config == other.config
            && self.model_config == other.model_config
            && self.best_val.to_bits() == other.best_val.to_bits()
            && self.test_at_best.to_bits() == other.test_at_best.to_bits()
            && self.best_epoch == other.best_epoch
            && self.epochs_run == other.epochs_run
            && self.curve == other.curve
            && self.best_params == other.best_params
    }
}

impl TrainReport {
    pub fn to_kv(&self) -> KvFile {
        let mut kv = KvFile::new();
        kv.push("model", self.model.kind);
        kv.push("task", self.config.task.name());
        kv.push("metric", self.config.task.metric());
        kv.push("hidden_dim", self.model.hidden_dim);
        kv.push("num_layers", self.model.num_layers);
        kv.push("self_loops", self.model.self_loops);
        kv.push("lr", self.config.lr);
        kv.push("weight_decay", self.config.weight_decay);
        kv.push("dropout", self.config.dropout);
        kv.push("seed", self.config.seed);
        kv.push("max_epochs", self.config.max_epochs);
        kv.push("patience", self.config.patience);
        kv.push("eval_every", self.config.eval_every);
        kv.push("standardize", self.config.standardize);
        kv.push("best_val", self.best_val);
        kv.push("test_at_best_val", self.test_at_best);
        kv.push("best_epoch", self.best_epoch);
        kv.push("epochs_run", self.epochs_run);
        kv.push("wall_time_secs", format!("{:.3}", self.wall_time.as_secs_f64()));
        kv
    }

    pub fn curve_csv(&self) -> String {
        let mut out = String::from("epoch,loss,val\n");
        for r in &self.curve {
            let val = r.val.map(|v| v.to_string()).unwrap_or_default();
            let _ = writeln!(out, "{},{},{}", r.epoch, r.loss, val);
        }
        out
    }

    pub fn write_curve(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.curve_csv()).map_err(|e| Error::io(path, e))
    }
}

/// How data is partitioned for each task.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SplitSpec {
    pub link: SplitRatios,
    pub node: NodeSplitPolicy,
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self {
            link: SplitRatios::default(),
            node: NodeSplitPolicy::PerClass {
                per_class: 20,
                val: 500,
            },
        }
    }
}

/// Repetition settings. Trial `t` trains with seed `base_seed + t`; the split
/// uses `split_seed`, or `split_seed + t` when `resplit` is set.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrialPlan {
    pub n_trials: usize,
    pub base_seed: u64,
    pub split_seed: u64,
    pub resplit: bool,
}

impl TrialPlan {
    pub fn new(n_trials: usize, base_seed: u64) -> Self {
        Self {
            n_trials,
            base_seed,
            split_seed: base_seed,
            resplit: false,
        }
    }
}

#[derive(Clone, Debug)]
pub struct TrialsOutcome {
    pub val: MetricSummary,
    pub test: MetricSummary,
    pub reports: Vec<TrainReport>,
}

/// Runs `job(trial)` for every trial (in parallel on the current rayon pool)
/// and summarizes validation and test metrics.
pub fn run_trials<F>(n_trials: usize, job: F) -> Result<TrialsOutcome>
where
    F: Fn(usize) -> Result<TrainReport> + Sync,
{
    if n_trials == 0 {
        return Err(Error::param("need at least one trial"));
    }
    let reports: Vec<TrainReport> = (0..n_trials)
        .into_par_iter()
        .map(&job)
        .collect::<Result<_>>()?;
    Ok(TrialsOutcome {
        val: MetricSummary::from_values(reports.iter().map(|r| r.best_val).collect())?,
        test: MetricSummary::from_values(reports.iter().map(|r| r.test_at_best).collect())?,
        reports,
    })
}

/// Trains `model` on `ds` for every trial of `plan`.
pub fn run_model_trials(
    ds: &GraphDataset,
    model: &ModelSpec,
    tc: &TrainConfig,
    splits: &SplitSpec,
    plan: &TrialPlan,
) -> Result<TrialsOutcome> {
    tc.validate()?;
    let split_seed = |t: usize| {
        if plan.resplit {
            plan.split_seed.wrapping_add(t as u64)
        } else {
            plan.split_seed
        }
    };
    let with_seed = |t: usize| TrainConfig {
        seed: plan.base_seed.wrapping_add(t as u64),
        ..tc.clone()
    };
    match tc.task {
        Task::Link => {
            let shared = if plan.resplit {
                None
            } else {
                Some(link_split(ds, splits.link, plan.split_seed)?)
            };
            run_trials(plan.n_trials, |t| {
                let own;
                let split = match &shared {
                    Some(s) => s,
                    None => {
                        own = link_split(ds, splits.link, split_seed(t))?;
                        &own
                    }
                };
                train_link(model, ds, split, &with_seed(t))
            })
        }
        Task::Node => {
            let shared = if plan.resplit {
                None
            } else {
                Some(node_split(ds, splits.node, plan.split_seed)?)
            };
            run_trials(plan.n_trials, |t| {
                let own;
                let split = match &shared {
                    Some(s) => s,
                    None => {
                        own = node_split(ds, splits.node, split_seed(t))?;
                        &own
                    }
                };
                train_node(model, ds, split, &with_seed(t))
            })
        }
    }
}
