use std::collections::HashSet;
use std::time::Instant;

use crate::dataset::GraphDataset;
use crate::error::{Error, Result};
use crate::nn::{
    encode, forward, normalize_adjacency, AdamConfig, AdamState, ModelConfig, ModelKind, NormAdj,
    Params, Tape, Tensor2,
};
use crate::rng::{self, Domain};
use crate::split::{sample_non_edges, LinkSplit, NodeSplit};
use crate::train::metrics::{accuracy, argmax_rows, roc_auc};
use crate::train::{EpochRecord, ModelSpec, Task, TrainConfig, TrainReport};

fn feature_tensor(ds: &GraphDataset, standardize: bool) -> Tensor2 {
    let f = if standardize {
        ds.features.standardized()
    } else {
        ds.features.clone()
    };
    let (rows, cols) = (f.rows(), f.cols());
    Tensor2 {
        rows,
        cols,
        data: f.into_data(),
    }
}

fn adjacency_for(cfg: &ModelConfig, graph: &crate::graph::Graph) -> Option<NormAdj> {
    match cfg {
        ModelConfig::Gcn(g) => Some(normalize_adjacency(graph, g.self_loops)),
        ModelConfig::Mlp(_) => None,
    }
}

/// Shared epoch loop: `step` runs one optimization step and returns the
/// loss, `evaluate` returns `(val, test)` for the current parameters.
struct Loop<'a> {
    tc: &'a TrainConfig,
    cfg: &'a ModelConfig,
    spec: &'a ModelSpec,
}

impl Loop<'_> {
    fn run<S, E>(&self, mut params: Params, mut step: S, evaluate: E) -> Result<TrainReport>
    where
        S: FnMut(&Params, usize) -> Result<(f64, Vec<Tensor2>)>,
        E: Fn(&Params) -> Result<(f64, f64)>,
    {
        let start = Instant::now();
        let tc = self.tc;
        let adam_cfg = AdamConfig::new(tc.lr).with_weight_decay(tc.weight_decay);
        let mut adam = AdamState::new(adam_cfg, &params.tensors);
        let mut best: Option<(f64, f64, usize, Params)> = None;
        let mut since_best = 0;
        let mut curve = Vec::new();
        let mut epochs_run = 0;
        for epoch in 1..=tc.max_epochs {
            let (loss, grads) = step(&params, epoch)?;
            if !loss.is_finite() {
                return Err(Error::Divergence {
                    epoch,
                    lr: tc.lr,
                    msg: format!("training loss is {loss}"),
                });
            }
            adam.step(&mut params.tensors, &grads)?;
            if !params.is_finite() {
                return Err(Error::Divergence {
                    epoch,
                    lr: tc.lr,
                    msg: "parameters became non-finite".into(),
                });
            }
            epochs_run = epoch;
            let mut record = EpochRecord {
                epoch,
                loss,
                val: None,
            };
            if epoch % tc.eval_every == 0 {
                let (val, test) = evaluate(&params).map_err(|e| diverged(e, epoch, tc.lr))?;
                record.val = Some(val);
                if best.as_ref().is_none_or(|b| val > b.0) {
                    best = Some((val, test, epoch, params.clone()));
                    since_best = 0;
                } else {
                    since_best += tc.eval_every;
                }
            }
            curve.push(record);
            if best.is_some() && since_best >= tc.patience {
                break;
            }
        }
        let (best_val, test_at_best, best_epoch, best_params) = match best {
            Some(b) => b,
            None => {
                let (val, test) = evaluate(&params)?;
                (val, test, epochs_run, params)
            }
        };
        Ok(TrainReport {
            model: self.spec.clone(),
            config: tc.clone(),
            model_config: self.cfg.clone(),
            best_val,
            test_at_best,
            best_epoch,
            epochs_run,
            curve,
            best_params,
            wall_time: start.elapsed(),
        })
    }
}

fn diverged(e: Error, epoch: usize, lr: f64) -> Error {
    match e {
        Error::Metric(msg) if msg.contains("NaN") => Error::Divergence { epoch, lr, msg },
        e => e,
    }
}

fn collect_grads(grads: &mut crate::nn::Gradients, vars: &[crate::nn::Var], params: &Params) -> Vec<Tensor2> {
    vars.iter()
        .zip(&params.tensors)
        .map(|(&v, p)| grads.take(v).unwrap_or_else(|| Tensor2::zeros(p.rows, p.cols)))
        .collect()
}

fn pair_scores(z: &Tensor2, pos: &[(usize, usize)], neg: &[(usize, usize)]) -> Result<f64> {
    let mut scores = crate::nn::link_logits(z, pos)?;
    scores.extend(crate::nn::link_logits(z, neg)?);
    let labels: Vec<bool> = (0..pos.len() + neg.len()).map(|i| i < pos.len()).collect();
    roc_auc(&scores, &labels)
}

/// Validation and test ROC AUC of `params` on a link split.
pub fn evaluate_link(
    cfg: &ModelConfig,
    params: &Params,
    ds: &GraphDataset,
    split: &LinkSplit,
    standardize: bool,
) -> Result<(f64, f64)> {
    let x = feature_tensor(ds, standardize);
    let adj = adjacency_for(cfg, &split.message_graph);
    let z = forward(cfg, params, adj.as_ref(), &x, None)?;
    Ok((
        pair_scores(&z, &split.val_pos, &split.val_neg)?,
        pair_scores(&z, &split.test_pos, &split.test_neg)?,
    ))
}

/// Trains an encoder for link prediction with a dot-product decoder.
///
/// Every epoch draws fresh negatives (one per training edge) uniformly from
/// node pairs that are not message-graph edges. The GCN propagates over the
/// message graph only. Validation ROC AUC drives early stopping.
pub fn train_link(
    spec: &ModelSpec,
    ds: &GraphDataset,
    split: &LinkSplit,
    tc: &TrainConfig,
) -> Result<TrainReport> {
    tc.validate()?;
    if tc.task != Task::Link {
        return Err(Error::param("train_link called with a node task config"));
    }
    if split.message_graph.num_nodes() != ds.num_nodes() {
        return Err(Error::param("split does not belong to this dataset"));
    }
    let x = feature_tensor(ds, tc.standardize);
    let cfg = spec.config(x.cols, spec.hidden_dim, tc.dropout);
    cfg.validate()?;
    let adj = adjacency_for(&cfg, &split.message_graph);
    let params = cfg.init_params(tc.seed)?;
    let n_train = split.train_pos.len();
    let mut targets = vec![1.0; n_train];
    targets.extend(std::iter::repeat_n(0.0, n_train));

    let step = |params: &Params, epoch: usize| -> Result<(f64, Vec<Tensor2>)> {
        let mut neg_rng = rng::stream(tc.seed, Domain::Negatives, epoch as u64);
        let negatives = sample_non_edges(&split.message_graph, n_train, &mut HashSet::new(), &mut neg_rng)?;
        let mut pairs = split.train_pos.clone();
        pairs.extend(negatives);
        let mut drop_rng = rng::stream(tc.seed, Domain::Dropout, epoch as u64);
        let mut tape = Tape::new();
        let vars = params.bind(&mut tape);
        let xv = tape.constant(&x);
        let z = encode(&cfg, &mut tape, &vars, params.bias, xv, adj.as_ref(), Some(&mut drop_rng))?;
        let logits = tape.pair_dot(z, &pairs)?;
        let loss = tape.bce_with_logits(logits, &targets)?;
        let loss_value = tape.value(loss).data[0];
        if !loss_value.is_finite() {
            return Ok((loss_value, Vec::new()));
        }
        let mut grads = tape.backward(loss)?;
        Ok((loss_value, collect_grads(&mut grads, &vars, params)))
    };
    let evaluate = |params: &Params| -> Result<(f64, f64)> {
        let z = forward(&cfg, params, adj.as_ref(), &x, None)?;
        Ok((
            pair_scores(&z, &split.val_pos, &split.val_neg)?,
            pair_scores(&z, &split.test_pos, &split.test_neg)?,
        ))
    };
    Loop {
        tc,
        cfg: &cfg,
        spec,
    }
    .run(params, step, evaluate)
}

fn labels_at(labels: &[usize], ids: &[usize]) -> Vec<usize> {
    ids.iter().map(|&i| labels[i]).collect()
}

/// Validation and test accuracy of `params` on a node split.
pub fn evaluate_node(
    cfg: &ModelConfig,
    params: &Params,
    ds: &GraphDataset,
    split: &NodeSplit,
    standardize: bool,
) -> Result<(f64, f64)> {
    let labels = ds.labels.as_ref().ok_or_else(|| Error::param("dataset has no labels"))?;
    let x = feature_tensor(ds, standardize);
    let adj = adjacency_for(cfg, &ds.graph);
    let out = forward(cfg, params, adj.as_ref(), &x, None)?;
    node_metrics(&out, labels, split)
}

fn node_metrics(out: &Tensor2, labels: &[usize], split: &NodeSplit) -> Result<(f64, f64)> {
    let pred = argmax_rows(&out.data, out.cols);
    let score = |ids: &[usize]| {
        if ids.is_empty() {
            return Ok(0.0);
        }
        accuracy(&labels_at(&pred, ids), &labels_at(labels, ids))
    };
    Ok((score(&split.val_ids)?, score(&split.test_ids)?))
}

/// Trains a node classifier with softmax cross-entropy on the training ids;
/// validation accuracy drives early stopping.
pub fn train_node(
    spec: &ModelSpec,
    ds: &GraphDataset,
    split: &NodeSplit,
    tc: &TrainConfig,
) -> Result<TrainReport> {
    tc.validate()?;
    if tc.task != Task::Node {
        return Err(Error::param("train_node called with a link task config"));
    }
    let labels = ds.labels.as_ref().ok_or_else(|| Error::param("dataset has no labels"))?;
    if split.train_ids.is_empty() {
        return Err(Error::param("node split has no training nodes"));
    }
    let classes = ds.num_classes().unwrap_or(0).max(1);
    let x = feature_tensor(ds, tc.standardize);
    let cfg = spec.config(x.cols, classes, tc.dropout);
    cfg.validate()?;
    let adj = if spec.kind == ModelKind::Gcn {
        adjacency_for(&cfg, &ds.graph)
    } else {
        None
    };
    let params = cfg.init_params(tc.seed)?;
    let train_labels = labels_at(labels, &split.train_ids);

    let step = |params: &Params, epoch: usize| -> Result<(f64, Vec<Tensor2>)> {
        let mut drop_rng = rng::stream(tc.seed, Domain::Dropout, epoch as u64);
        let mut tape = Tape::new();
        let vars = params.bind(&mut tape);
        let xv = tape.constant(&x);
        let out = encode(&cfg, &mut tape, &vars, params.bias, xv, adj.as_ref(), Some(&mut drop_rng))?;
        let loss = tape.softmax_cross_entropy(out, &split.train_ids, &train_labels)?;
        let loss_value = tape.value(loss).data[0];
        if !loss_value.is_finite() {
            return Ok((loss_value, Vec::new()));
        }
        let mut grads = tape.backward(loss)?;
        Ok((loss_value, collect_grads(&mut grads, &vars, params)))
    };
    let evaluate = |params: &Params| -> Result<(f64, f64)> {
        let out = forward(&cfg, params, adj.as_ref(), &x, None)?;
        node_metrics(&out, labels, split)
    };
    Loop {
        tc,
        cfg: &cfg,
        spec,
    }
    .run(params, step, evaluate)
}
