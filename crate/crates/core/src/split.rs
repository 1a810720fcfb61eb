//! Train/validation/test partitions for link prediction and node
//! classification.

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::dataset::GraphDataset;
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::rng::{self, Domain};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SplitRatios {
    pub train: f64,
    pub val: f64,
    pub test: f64,
}

impl Default for SplitRatios {
    fn default() -> Self {
        Self {
            train: 0.85,
            val: 0.05,
            test: 0.10,
        }
    }
}

impl SplitRatios {
    pub fn validate(&self) -> Result<()> {
        let all = [self.train, self.val, self.test];
        if all.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
            return Err(Error::param(format!("split ratios {all:?} must be positive")));
        }
        if ((self.train + self.val + self.test) - 1.0).abs() > 1e-9 {
            return Err(Error::param(format!("split ratios {all:?} must sum to 1")));
        }
        Ok(())
    }
}

/// Edge partition with frozen validation/test negatives.
#[derive(Clone, Debug, PartialEq)]
pub struct LinkSplit {
    pub train_pos: Vec<(usize, usize)>,
    pub val_pos: Vec<(usize, usize)>,
    pub test_pos: Vec<(usize, usize)>,
    pub val_neg: Vec<(usize, usize)>,
    pub test_neg: Vec<(usize, usize)>,
    /// Graph over the training positives only.
    pub message_graph: Graph,
    pub ratios: SplitRatios,
    pub seed: u64,
}

/// Draws `count` distinct node pairs `(u, v)`, `u < v`, that are not edges of
/// `graph` and not in `exclude`. Gives up after `100 * count` draws.
pub fn sample_non_edges<R: Rng>(
    graph: &Graph,
    count: usize,
    exclude: &mut HashSet<(usize, usize)>,
    rng: &mut R,
) -> Result<Vec<(usize, usize)>> {
    let n = graph.num_nodes();
    if count == 0 {
        return Ok(Vec::new());
    }
    if n < 2 {
        return Err(Error::Sampling("fewer than two nodes".into()));
    }
    let budget = 100 * count;
    let mut out = Vec::with_capacity(count);
    let mut attempts = 0;
    while out.len() < count {
        if attempts == budget {
            return Err(Error::Sampling(format!(
                "found {} of {count} non-edges after {budget} attempts; graph too dense",
                out.len()
            )));
        }
        attempts += 1;
        let a = rng.random_range(0..n);
        let b = rng.random_range(0..n);
        if a == b {
            continue;
        }
        let pair = (a.min(b), a.max(b));
        if graph.has_edge(pair.0, pair.1) || !exclude.insert(pair) {
            continue;
        }
        out.push(pair);
    }
    Ok(out)
}

/// Uniform random edge partition. Validation and test each get as many
/// negatives as positives, sampled from non-edges of the full graph and
/// disjoint from one another.
pub fn link_split(ds: &GraphDataset, ratios: SplitRatios, seed: u64) -> Result<LinkSplit> {
    ratios.validate()?;
    let graph = &ds.graph;
    let m = graph.num_edges();
    let n_val = (m as f64 * ratios.val).round() as usize;
    let n_test = (m as f64 * ratios.test).round() as usize;
    if n_val + n_test >= m {
        return Err(Error::param(format!(
            "{m} edges leave nothing for training at ratios {ratios:?}"
        )));
    }
    let mut rng = rng::stream(seed, Domain::Split, 0);
    let mut edges = graph.edges().to_vec();
    edges.shuffle(&mut rng);
    let test_pos = edges[..n_test].to_vec();
    let val_pos = edges[n_test..n_test + n_val].to_vec();
    let mut train_pos = edges[n_test + n_val..].to_vec();
    train_pos.sort_unstable();

    let mut seen = HashSet::new();
    let val_neg = sample_non_edges(graph, n_val, &mut seen, &mut rng)?;
    let test_neg = sample_non_edges(graph, n_test, &mut seen, &mut rng)?;
    let message_graph = Graph::from_edges(graph.num_nodes(), &train_pos)?;
    Ok(LinkSplit {
        train_pos,
        val_pos,
        test_pos,
        val_neg,
        test_neg,
        message_graph,
        ratios,
        seed,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum NodeSplitPolicy {
    /// `per_class` training nodes from every class, `val` validation nodes
    /// overall, everything else test.
    PerClass { per_class: usize, val: usize },
    /// Uniform split by fraction; the remainder is test.
    Ratio { train: f64, val: f64 },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NodeSplit {
    pub train_ids: Vec<usize>,
    pub val_ids: Vec<usize>,
    pub test_ids: Vec<usize>,
}

pub fn node_split(ds: &GraphDataset, policy: NodeSplitPolicy, seed: u64) -> Result<NodeSplit> {
    let labels = ds
        .labels
        .as_ref()
        .ok_or_else(|| Error::param("node split needs labels"))?;
    let n = labels.len();
    let mut rng = rng::stream(seed, Domain::Split, 1);
    let (mut train, mut val, mut test) = match policy {
        NodeSplitPolicy::PerClass { per_class, val } => {
            let classes = ds.num_classes().unwrap_or(0);
            let mut train = Vec::new();
            let mut rest = Vec::new();
            for c in 0..classes {
                let mut members: Vec<usize> = (0..n).filter(|&i| labels[i] == c).collect();
                if members.len() < per_class {
                    return Err(Error::param(format!(
                        "class {c} has {} nodes, fewer than {per_class}",
                        members.len()
                    )));
                }
                members.shuffle(&mut rng);
                train.extend_from_slice(&members[..per_class]);
                rest.extend_from_slice(&members[per_class..]);
            }
            rest.sort_unstable();
            rest.shuffle(&mut rng);
            if val > rest.len() {
                return Err(Error::param(format!(
                    "{val} validation nodes requested but only {} remain",
                    rest.len()
                )));
            }
            let test = rest.split_off(val);
            (train, rest, test)
        }
        NodeSplitPolicy::Ratio { train, val } => {
            if !(train > 0.0 && val >= 0.0 && train + val < 1.0) {
                return Err(Error::param(format!("bad node split ratios {train}/{val}")));
            }
            let mut ids: Vec<usize> = (0..n).collect();
            ids.shuffle(&mut rng);
            let n_train = (n as f64 * train).round() as usize;
            let n_val = (n as f64 * val).round() as usize;
            let test = ids.split_off(n_train + n_val);
            let val = ids.split_off(n_train);
            (ids, val, test)
        }
    };
    train.sort_unstable();
    val.sort_unstable();
    test.sort_unstable();
    Ok(NodeSplit {
        train_ids: train,
        val_ids: val,
        test_ids: test,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Provenance;
    use crate::features::FeatureMatrix;
    use crate::graph::{watts_strogatz, WsParams};

    fn ws_dataset() -> GraphDataset {
        let g = watts_strogatz(WsParams { n: 1000, k: 4, beta: 0.5, seed: 1 }).unwrap();
        GraphDataset::new("ws", g, FeatureMatrix::zeros(1000, 1), None, Provenance::default()).unwrap()
    }

    #[test]
    fn link_split_sizes_and_disjointness() {
        let ds = ws_dataset();
        let s = link_split(&ds, SplitRatios::default(), 4).unwrap();
        assert_eq!((s.train_pos.len(), s.val_pos.len(), s.test_pos.len()), (1700, 100, 200));
        assert_eq!((s.val_neg.len(), s.test_neg.len()), (100, 200));
        let mut all: Vec<_> = s.train_pos.iter().chain(&s.val_pos).chain(&s.test_pos).copied().collect();
        all.sort_unstable();
        assert_eq!(all, ds.graph.edges());
        for &(u, v) in s.val_neg.iter().chain(&s.test_neg) {
            assert!(!ds.graph.has_edge(u, v));
        }
        let negs: HashSet<_> = s.val_neg.iter().chain(&s.test_neg).collect();
        assert_eq!(negs.len(), 300);
        assert_eq!(s.message_graph.num_edges(), 1700);
        assert_eq!(s, link_split(&ds, SplitRatios::default(), 4).unwrap());
    }

    #[test]
    fn bad_ratios() {
        let ds = ws_dataset();
        let r = SplitRatios { train: 0.5, val: 0.5, test: 0.5 };
        assert!(link_split(&ds, r, 0).is_err());
        let r = SplitRatios { train: 1.0, val: 0.0, test: 0.0 };
        assert!(link_split(&ds, r, 0).is_err());
    }

    #[test]
    fn dense_graph_exhausts_negatives() {
        let edges: Vec<_> = (0..5).flat_map(|u| (u + 1..5).map(move |v| (u, v))).collect();
        let g = Graph::from_edges(5, &edges).unwrap();
        let mut rng = rng::stream(0, Domain::Negatives, 0);
        let err = sample_non_edges(&g, 1, &mut HashSet::new(), &mut rng).unwrap_err();
        assert!(matches!(err, Error::Sampling(_)));
    }

    fn labeled(n: usize, classes: usize) -> GraphDataset {
        let g = Graph::from_edges(n, &[]).unwrap();
        let labels = (0..n).map(|i| i % classes).collect();
        GraphDataset::new("l", g, FeatureMatrix::zeros(n, 1), Some(labels), Provenance::default()).unwrap()
    }

    #[test]
    fn per_class_split() {
        let ds = labeled(1000, 3);
        let p = NodeSplitPolicy::PerClass { per_class: 20, val: 30 };
        let s = node_split(&ds, p, 1).unwrap();
        assert_eq!((s.train_ids.len(), s.val_ids.len(), s.test_ids.len()), (60, 30, 910));
        let mut all: Vec<_> = s.train_ids.iter().chain(&s.val_ids).chain(&s.test_ids).copied().collect();
        all.sort_unstable();
        all.dedup();
        assert_eq!(all.len(), 1000);
        for c in 0..3 {
            assert_eq!(s.train_ids.iter().filter(|&&i| i % 3 == c).count(), 20);
        }
        assert_eq!(s, node_split(&ds, p, 1).unwrap());
    }

    #[test]
    fn per_class_too_small() {
        let ds = labeled(10, 3);
        let p = NodeSplitPolicy::PerClass { per_class: 4, val: 0 };
        assert!(matches!(node_split(&ds, p, 0), Err(Error::Param(_))));
    }

    #[test]
    fn ratio_split() {
        let ds = labeled(100, 2);
        let s = node_split(&ds, NodeSplitPolicy::Ratio { train: 0.6, val: 0.2 }, 3).unwrap();
        assert_eq!((s.train_ids.len(), s.val_ids.len(), s.test_ids.len()), (60, 20, 20));
    }
}
