//! Node-feature synthesis: i.i.d. Gaussian features and the breadth-first
//! parental family, plus the WS1000 dataset builders.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::dataset::{GraphDataset, Provenance};
use crate::error::{Error, Result};
use crate::graph::{self, Graph, WsParams};
use crate::io::quantize_f32;
use crate::rng::{self, Domain};

/// Dense row-major `rows x cols` matrix of node features.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl FeatureMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Shape(format!(
                "feature buffer of length {} cannot be {rows}x{cols}",
                data.len()
            )));
        }
        if let Some(i) = data.iter().position(|x| !x.is_finite()) {
            return Err(Error::param(format!(
                "non-finite feature at row {}, column {}",
                i / cols.max(1),
                i % cols.max(1)
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    /// First `n` columns of every row.
    pub fn column_prefix(&self, n: usize) -> Self {
        let n = n.min(self.cols);
        let mut data = Vec::with_capacity(self.rows * n);
        for i in 0..self.rows {
            data.extend_from_slice(&self.row(i)[..n]);
        }
        Self {
            rows: self.rows,
            cols: n,
            data,
        }
    }

    /// Rows selected by `ids`, in the given order.
    pub fn select_rows(&self, ids: &[usize]) -> Self {
        let mut data = Vec::with_capacity(ids.len() * self.cols);
        for &i in ids {
            data.extend_from_slice(self.row(i));
        }
        Self {
            rows: ids.len(),
            cols: self.cols,
            data,
        }
    }

    /// Column-wise z-scoring; constant columns are only centered.
    pub fn standardized(&self) -> Self {
        let mut out = self.clone();
        if self.rows == 0 {
            return out;
        }
        let n = self.rows as f64;
        for j in 0..self.cols {
            let mean = (0..self.rows).map(|i| self.get(i, j)).sum::<f64>() / n;
            let var = (0..self.rows)
                .map(|i| (self.get(i, j) - mean).powi(2))
                .sum::<f64>()
                / n;
            let scale = if var > 0.0 { var.sqrt().recip() } else { 1.0 };
            for i in 0..self.rows {
                out.data[i * self.cols + j] = (self.get(i, j) - mean) * scale;
            }
        }
        out
    }
}

/// Isotropic standard Gaussian `N(0, I_dim)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GaussianSpec {
    pub dim: usize,
}

impl GaussianSpec {
    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::param("feature dimension must be at least 1"));
        }
        Ok(Self { dim })
    }

    /// Draws one vector from the stream for `(seed, node)`.
    fn draw_into(&self, seed: u64, node: usize, out: &mut [f64]) {
        let mut rng = rng::stream(seed, Domain::Features, node as u64);
        for x in out.iter_mut() {
            *x = rng.sample(StandardNormal);
        }
    }
}

/// Parameters of the parental feature family.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SynthParams {
    pub dist: GaussianSpec,
    pub root: usize,
    pub gamma: f64,
    pub nu: f64,
    pub seed: u64,
}

/// Samples `n` i.i.d. feature vectors. Row `i` comes from its own stream
/// keyed by `(seed, i)`.
pub fn sample_iid_features(n: usize, dist: GaussianSpec, seed: u64) -> Result<FeatureMatrix> {
    if n == 0 {
        return Err(Error::param("need at least one row"));
    }
    if dist.dim == 0 {
        return Err(Error::param("feature dimension must be at least 1"));
    }
    let mut m = FeatureMatrix::zeros(n, dist.dim);
    for i in 0..n {
        dist.draw_into(seed, i, m.row_mut(i));
    }
    Ok(m)
}

/// Samples features with breadth-first parental dependence.
///
/// The root gets a plain draw `z_root`. Walking the BFS levels outward,
/// every node `j` with parent `p` gets `x_j = gamma * x_p + nu * z_j`, where
/// `z_j` is the node's own stream draw.
pub fn synthesize_parametric(graph: &Graph, params: &SynthParams) -> Result<FeatureMatrix> {
    let n = graph.num_nodes();
    if params.dist.dim == 0 {
        return Err(Error::param("feature dimension must be at least 1"));
    }
    if !params.gamma.is_finite() || !params.nu.is_finite() {
        return Err(Error::param("gamma and nu must be finite"));
    }
    if params.root >= n {
        return Err(Error::param(format!("root {} outside 0..{n}", params.root)));
    }
    let tree = graph::bfs(graph, params.root)?;
    if tree.reachable() != n {
        return Err(Error::Structure(format!(
            "graph is disconnected: {} of {n} nodes reachable from root {}; reduce it to its giant component first",
            tree.reachable(),
            params.root
        )));
    }
    let d = params.dist.dim;
    let mut m = FeatureMatrix::zeros(n, d);
    params.dist.draw_into(params.seed, params.root, m.row_mut(params.root));
    let mut z = vec![0.0; d];
    for level in tree.levels.iter().skip(1) {
        for &j in level {
            let p = tree.parent[j].expect("non-root reachable node has a parent");
            params.dist.draw_into(params.seed, j, &mut z);
            let (parent_row, row) = two_rows(&mut m, p, j);
            for ((x, &xp), &zj) in row.iter_mut().zip(parent_row.iter()).zip(z.iter()) {
                *x = params.gamma * xp + params.nu * zj;
            }
        }
    }
    if m.data.iter().any(|x| !x.is_finite()) {
        return Err(Error::param(format!(
            "gamma={} overflowed the feature range",
            params.gamma
        )));
    }
    Ok(m)
}

fn two_rows(m: &mut FeatureMatrix, read: usize, write: usize) -> (&[f64], &mut [f64]) {
    let c = m.cols;
    if read < write {
        let (a, b) = m.data.split_at_mut(write * c);
        (&a[read * c..(read + 1) * c], &mut b[..c])
    } else {
        let (a, b) = m.data.split_at_mut(read * c);
        (&b[..c], &mut a[write * c..(write + 1) * c])
    }
}

/// Graph and feature settings shared by the WS1000 family.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WsFamily {
    pub n: usize,
    pub k: usize,
    pub beta: f64,
    pub dim: usize,
    pub graph_seed: u64,
    pub feature_seed: u64,
    pub root_seed: u64,
}

impl WsFamily {
    /// `N = 1000`, `K = 4`, `beta = 0.5`, `d = 1000`.
    pub fn ws1000(graph_seed: u64, feature_seed: u64) -> Self {
        Self {
            n: 1000,
            k: 4,
            beta: 0.5,
            dim: 1000,
            graph_seed,
            feature_seed,
            root_seed: graph_seed,
        }
    }

    pub fn with_root_seed(mut self, root_seed: u64) -> Self {
        self.root_seed = root_seed;
        self
    }

    fn ws_params(&self) -> WsParams {
        WsParams {
            n: self.n,
            k: self.k,
            beta: self.beta,
            seed: self.graph_seed,
        }
    }

    /// Samples the shared graph, reduced to its giant component when the
    /// sample is disconnected.
    pub fn graph(&self) -> Result<(Graph, Provenance)> {
        let raw = graph::watts_strogatz(self.ws_params())?;
        let mut prov = Provenance::default();
        prov.push("ws_n", self.n);
        prov.push("ws_k", self.k);
        prov.push("ws_beta", self.beta);
        prov.push("graph_seed", self.graph_seed);
        prov.push("ws_edges", raw.num_edges());
        if graph::is_connected(&raw) {
            prov.push("giant_component_dropped", 0);
            return Ok((raw, prov));
        }
        let (g, _) = graph::giant_component(&raw)?;
        log::warn!(
            "Watts-Strogatz sample (seed {}) is disconnected; keeping giant component with {} of {} nodes",
            self.graph_seed,
            g.num_nodes(),
            raw.num_nodes()
        );
        prov.push("giant_component_dropped", raw.num_nodes() - g.num_nodes());
        Ok((g, prov))
    }

    /// Root `v0` drawn uniformly from the nodes of `graph`.
    pub fn root(&self, graph: &Graph) -> usize {
        rng::stream(self.root_seed, Domain::Root, 0).random_range(0..graph.num_nodes())
    }
}

/// The dataset with i.i.d. standard-normal features over the shared graph.
/// Features are rounded to storage precision so that a saved copy loads back
/// identical.
pub fn make_ws(family: &WsFamily) -> Result<GraphDataset> {
    let (g, mut prov) = family.graph()?;
    let dist = GaussianSpec::new(family.dim)?;
    let features = quantize_f32(sample_iid_features(g.num_nodes(), dist, family.feature_seed)?);
    prov.push("family", "ws1000");
    prov.push("feature_dim", family.dim);
    prov.push("feature_seed", family.feature_seed);
    let name = if family.n == 1000 && family.dim == 1000 {
        "WS1000".to_string()
    } else {
        format!("WS{}", family.n)
    };
    GraphDataset::new(name, g, features, None, prov)
}

/// One member of the parental family over the shared graph, with `nu = 1`.
pub fn make_ws_gamma(family: &WsFamily, gamma: f64) -> Result<GraphDataset> {
    if !gamma.is_finite() {
        return Err(Error::param("gamma must be finite"));
    }
    let (g, mut prov) = family.graph()?;
    let root = family.root(&g);
    let params = SynthParams {
        dist: GaussianSpec::new(family.dim)?,
        root,
        gamma,
        nu: 1.0,
        seed: family.feature_seed,
    };
    let features = quantize_f32(synthesize_parametric(&g, &params)?);
    prov.push("family", "ws1000-gamma");
    prov.push("feature_dim", family.dim);
    prov.push("feature_seed", family.feature_seed);
    prov.push("root_seed", family.root_seed);
    prov.push("root", root);
    prov.push("gamma", gamma);
    prov.push("nu", 1.0);
    let base = if family.n == 1000 && family.dim == 1000 {
        "WS1000".to_string()
    } else {
        format!("WS{}", family.n)
    };
    GraphDataset::new(format!("{base}_γ={gamma}"), g, features, None, prov)
}

/// WS1000: `WS(1000, 4, 0.5)` with `N(0, I_1000)` features.
pub fn make_ws1000(graph_seed: u64, feature_seed: u64) -> Result<GraphDataset> {
    make_ws(&WsFamily::ws1000(graph_seed, feature_seed))
}

/// WS1000_γ sharing the WS1000 graph for `graph_seed`.
pub fn make_ws1000_gamma(
    graph_seed: u64,
    feature_seed: u64,
    root_seed: u64,
    gamma: f64,
) -> Result<GraphDataset> {
    make_ws_gamma(
        &WsFamily::ws1000(graph_seed, feature_seed).with_root_seed(root_seed),
        gamma,
    )
}
