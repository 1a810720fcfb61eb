//! Reference computations shared by the oracle and acceptance targets.
#![allow(dead_code)]

use gnb::features::{synthesize_parametric, GaussianSpec, SynthParams};
use gnb::nn::{
    bce_with_logits, encode, forward, link_logits, normalize_adjacency, GcnConfig, MlpConfig,
    ModelConfig, NormAdj, Params, Tape, Tensor2,
};
use gnb::Graph;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn random_graph(rng: &mut ChaCha8Rng, n: usize, p: f64) -> Graph {
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if rng.random::<f64>() < p {
                edges.push((u, v));
            }
        }
    }
    Graph::from_edges(n, &edges).unwrap()
}

pub fn floyd_warshall(g: &Graph) -> Vec<Vec<Option<usize>>> {
    let n = g.num_nodes();
    let inf = usize::MAX / 4;
    let mut d = vec![vec![inf; n]; n];
    for (i, row) in d.iter_mut().enumerate() {
        row[i] = 0;
    }
    for &(u, v) in g.edges() {
        d[u][v] = 1;
        d[v][u] = 1;
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if d[i][k] + d[k][j] < d[i][j] {
                    d[i][j] = d[i][k] + d[k][j];
                }
            }
        }
    }
    d.into_iter()
        .map(|r| r.into_iter().map(|x| (x < inf).then_some(x)).collect())
        .collect()
}

pub fn brute_auc(scores: &[f64], labels: &[bool]) -> f64 {
    let mut twice = 0u64;
    let (mut p, mut n) = (0u64, 0u64);
    for (i, &li) in labels.iter().enumerate() {
        if !li {
            n += 1;
            continue;
        }
        p += 1;
        for (j, &lj) in labels.iter().enumerate() {
            if !lj {
                twice += match scores[i].partial_cmp(&scores[j]).unwrap() {
                    std::cmp::Ordering::Greater => 2,
                    std::cmp::Ordering::Equal => 1,
                    std::cmp::Ordering::Less => 0,
                };
            }
        }
    }
    twice as f64 / (2 * p * n) as f64
}

pub fn dense_norm_adj(g: &Graph, self_loops: bool) -> Vec<Vec<f64>> {
    let n = g.num_nodes();
    let mut a = vec![vec![0.0; n]; n];
    for &(u, v) in g.edges() {
        a[u][v] = 1.0;
        a[v][u] = 1.0;
    }
    if self_loops {
        for (i, row) in a.iter_mut().enumerate() {
            row[i] += 1.0;
        }
    }
    let d: Vec<f64> = a.iter().map(|r| r.iter().sum()).collect();
    let mut out = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            if a[i][j] != 0.0 {
                out[i][j] = a[i][j] / d[i].sqrt() / d[j].sqrt();
            }
        }
    }
    out
}

pub fn toy_problem(seed: u64) -> (Graph, Tensor2, Vec<(usize, usize)>, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(8..=20);
    let g = random_graph(&mut rng, n, 0.3);
    let d = rng.random_range(2..=8);
    let x = Tensor2::from_vec(n, d, (0..n * d).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap();
    let pairs: Vec<(usize, usize)> = (0..12).map(|_| (rng.random_range(0..n), rng.random_range(0..n))).collect();
    let targets: Vec<f64> = (0..12).map(|i| f64::from((i % 2) as u8)).collect();
    (g, x, pairs, targets)
}

pub fn loss_value(cfg: &ModelConfig, p: &Params, adj: Option<&NormAdj>, x: &Tensor2, pairs: &[(usize, usize)], t: &[f64]) -> f64 {
    let z = forward(cfg, p, adj, x, None).unwrap();
    bce_with_logits(&link_logits(&z, pairs).unwrap(), t).unwrap()
}

/// Largest relative deviation between tape gradients and central
/// differences with step 1e-6.
pub fn gradient_error(cfg: &ModelConfig, seed: u64, g: &Graph, x: &Tensor2, pairs: &[(usize, usize)], t: &[f64]) -> f64 {
    let adj = match cfg {
        ModelConfig::Gcn(_) => Some(normalize_adjacency(g, true)),
        ModelConfig::Mlp(_) => None,
    };
    let mut params = cfg.init_params(seed).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xb1a5);
    for k in (1..params.tensors.len()).step_by(2) {
        for b in &mut params.tensors[k].data {
            *b = rng.random_range(-0.3..0.3);
        }
    }
    let analytic: Vec<Tensor2> = {
        let mut tape = Tape::new();
        let vars = params.bind(&mut tape);
        let xv = tape.constant(x);
        let z = encode(cfg, &mut tape, &vars, params.bias, xv, adj.as_ref(), None).unwrap();
        let logits = tape.pair_dot(z, pairs).unwrap();
        let loss = tape.bce_with_logits(logits, t).unwrap();
        let grads = tape.backward(loss).unwrap();
        vars.iter().map(|&v| grads.get(v).unwrap().clone()).collect()
    };
    let h = 1e-6;
    let mut worst = 0.0f64;
    for ti in 0..params.tensors.len() {
        for k in 0..params.tensors[ti].data.len() {
            let orig = params.tensors[ti].data[k];
            params.tensors[ti].data[k] = orig + h;
            let up = loss_value(cfg, &params, adj.as_ref(), x, pairs, t);
            params.tensors[ti].data[k] = orig - h;
            let down = loss_value(cfg, &params, adj.as_ref(), x, pairs, t);
            params.tensors[ti].data[k] = orig;
            let numeric = (up - down) / (2.0 * h);
            let a = analytic[ti].data[k];
            let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-4);
            worst = worst.max(rel);
        }
    }
    worst
}

/// Monte-Carlo variance per BFS distance on a 10-node path rooted at 0.
pub fn path_variances(gamma: f64, resyntheses: u64, dim: usize) -> Vec<f64> {
    let edges: Vec<(usize, usize)> = (0..9).map(|i| (i, i + 1)).collect();
    let g = Graph::from_edges(10, &edges).unwrap();
    let mut sums = [0.0f64; 10];
    let mut sq = [0.0f64; 10];
    for seed in 0..resyntheses {
        let p = SynthParams { dist: GaussianSpec::new(dim).unwrap(), root: 0, gamma, nu: 1.0, seed };
        let m = synthesize_parametric(&g, &p).unwrap();
        for t in 0..10 {
            for &x in m.row(t) {
                sums[t] += x;
                sq[t] += x * x;
            }
        }
    }
    let n = (resyntheses as usize * dim) as f64;
    (0..10).map(|t| sq[t] / n - (sums[t] / n).powi(2)).collect()
}

pub fn toy_mlp(in_dim: usize) -> ModelConfig {
    ModelConfig::Mlp(MlpConfig {
        in_dim,
        hidden_dims: vec![5, 4],
        out_dim: 3,
        dropout: 0.0,
        activation: Default::default(),
        weight_init: Default::default(),
        bias: true,
    })
}

pub fn toy_gcn(in_dim: usize) -> ModelConfig {
    ModelConfig::Gcn(GcnConfig { in_dim, hidden_dim: 5, out_dim: 3, num_layers: 2, dropout: 0.0, self_loops: true, bias: true })
}
