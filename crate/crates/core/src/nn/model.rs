//! The two reference encoders: a feature-only MLP and a GCN.
//!
//! Both share one parameter layout (a weight and optional bias per layer),
//! so an MLP and a GCN with the same layer sizes can run on identical
//! weights. Hidden layers apply ReLU then dropout; the last layer is a
//! plain affine map (MLP) or propagation plus affine map (GCN).

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::nn::tape::{Tape, Var};
use crate::nn::{NormAdj, Tensor2};
use crate::rng::{self, Domain};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ModelKind {
    Mlp,
    Gcn,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Mlp => "mlp",
            ModelKind::Gcn => "gcn",
        }
    }
}

impl std::str::FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mlp" => Ok(ModelKind::Mlp),
            "gcn" => Ok(ModelKind::Gcn),
            other => Err(Error::param(format!("unknown model {other:?} (expected mlp or gcn)"))),
        }
    }
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Activation {
    #[default]
    Relu,
}

/// Uniform `±sqrt(6 / (fan_in + fan_out))` weights, zero biases.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum WeightInit {
    #[default]
    GlorotUniform,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MlpConfig {
    pub in_dim: usize,
    pub hidden_dims: Vec<usize>,
    pub out_dim: usize,
    pub dropout: f64,
    pub activation: Activation,
    pub weight_init: WeightInit,
    pub bias: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GcnConfig {
    pub in_dim: usize,
    pub hidden_dim: usize,
    pub out_dim: usize,
    pub num_layers: usize,
    pub dropout: f64,
    pub self_loops: bool,
    pub bias: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub enum ModelConfig {
    Mlp(MlpConfig),
    Gcn(GcnConfig),
}

impl ModelConfig {
    pub fn kind(&self) -> ModelKind {
        match self {
            ModelConfig::Mlp(_) => ModelKind::Mlp,
            ModelConfig::Gcn(_) => ModelKind::Gcn,
        }
    }

    /// `[in, hidden.., out]`
    pub fn layer_dims(&self) -> Vec<usize> {
        match self {
            ModelConfig::Mlp(c) => {
                let mut d = vec![c.in_dim];
                d.extend(&c.hidden_dims);
                d.push(c.out_dim);
                d
            }
            ModelConfig::Gcn(c) => {
                let mut d = vec![c.in_dim];
                d.extend(std::iter::repeat_n(c.hidden_dim, c.num_layers - 1));
                d.push(c.out_dim);
                d
            }
        }
    }

    pub fn dropout(&self) -> f64 {
        match self {
            ModelConfig::Mlp(c) => c.dropout,
            ModelConfig::Gcn(c) => c.dropout,
        }
    }

    pub fn bias(&self) -> bool {
        match self {
            ModelConfig::Mlp(c) => c.bias,
            ModelConfig::Gcn(c) => c.bias,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let ModelConfig::Gcn(c) = self {
            if c.num_layers == 0 {
                return Err(Error::param("GCN needs at least one layer"));
            }
        }
        if self.layer_dims().contains(&0) {
            return Err(Error::param(format!("layer sizes {:?} must be >= 1", self.layer_dims())));
        }
        let p = self.dropout();
        if !(0.0..1.0).contains(&p) {
            return Err(Error::param(format!("dropout {p} outside [0,1)")));
        }
        Ok(())
    }

    pub fn init_params(&self, seed: u64) -> Result<Params> {
        self.validate()?;
        Ok(Params::glorot(&self.layer_dims(), self.bias(), seed))
    }
}

/// Layer parameters stored as `[W0, b0, W1, b1, ..]` (weights only when the
/// model has no bias).
#[derive(Clone, Debug, PartialEq)]
pub struct Params {
    pub tensors: Vec<Tensor2>,
    pub bias: bool,
}

impl Params {
    pub fn glorot(dims: &[usize], bias: bool, seed: u64) -> Self {
        let mut tensors = Vec::new();
        for (l, w) in dims.windows(2).enumerate() {
            let (fan_in, fan_out) = (w[0], w[1]);
            let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
            let mut rng = rng::stream(seed, Domain::Init, l as u64);
            let data = (0..fan_in * fan_out)
                .map(|_| rng.random_range(-bound..bound))
                .collect();
            tensors.push(Tensor2 {
                rows: fan_in,
                cols: fan_out,
                data,
            });
            if bias {
                tensors.push(Tensor2::zeros(1, fan_out));
            }
        }
        Self { tensors, bias }
    }

    pub fn num_layers(&self) -> usize {
        self.tensors.len() / self.stride()
    }

    fn stride(&self) -> usize {
        1 + usize::from(self.bias)
    }

    pub fn weight(&self, layer: usize) -> &Tensor2 {
        &self.tensors[layer * self.stride()]
    }

    pub fn bias_of(&self, layer: usize) -> Option<&Tensor2> {
        self.bias.then(|| &self.tensors[layer * 2 + 1])
    }

    pub fn is_finite(&self) -> bool {
        self.tensors.iter().all(Tensor2::is_finite)
    }

    fn check_against(&self, cfg: &ModelConfig) -> Result<()> {
        let dims = cfg.layer_dims();
        if self.bias != cfg.bias() || self.num_layers() != dims.len() - 1 {
            return Err(Error::Shape(format!(
                "{} parameter tensors do not fit layer sizes {dims:?}",
                self.tensors.len()
            )));
        }
        for l in 0..self.num_layers() {
            let w = self.weight(l);
            if w.shape() != (dims[l], dims[l + 1]) {
                return Err(Error::Shape(format!(
                    "layer {l} weight is {}x{}, expected {}x{}",
                    w.rows,
                    w.cols,
                    dims[l],
                    dims[l + 1]
                )));
            }
            if let Some(b) = self.bias_of(l) {
                if b.shape() != (1, dims[l + 1]) {
                    return Err(Error::Shape(format!("layer {l} bias has wrong shape")));
                }
            }
        }
        Ok(())
    }

    /// Puts every tensor on the tape as a parameter.
    pub fn bind<'a>(&'a self, tape: &mut Tape<'a>) -> Vec<Var> {
        self.tensors.iter().map(|t| tape.param(t)).collect()
    }
}

/// Records the encoder forward pass on `tape`. `adj` is required for GCN and
/// ignored for MLP. Dropout is active only when `train_rng` is given.
pub fn encode<'a>(
    cfg: &ModelConfig,
    tape: &mut Tape<'a>,
    vars: &[Var],
    bias: bool,
    x: Var,
    adj: Option<&'a NormAdj>,
    mut train_rng: Option<&mut ChaCha8Rng>,
) -> Result<Var> {
    let dims = cfg.layer_dims();
    let layers = dims.len() - 1;
    let stride = 1 + usize::from(bias);
    if vars.len() != layers * stride {
        return Err(Error::Shape(format!(
            "{} parameter variables for {layers} layers",
            vars.len()
        )));
    }
    let in_cols = tape.value(x).cols;
    if in_cols != dims[0] {
        return Err(Error::Shape(format!("input has {in_cols} columns, model expects {}", dims[0])));
    }
    let adj = match cfg {
        ModelConfig::Gcn(_) => {
            let adj = adj.ok_or_else(|| Error::param("GCN forward needs an adjacency"))?;
            if adj.dim() != tape.value(x).rows {
                return Err(Error::Shape(format!(
                    "adjacency is {0}x{0} but input has {1} rows",
                    adj.dim(),
                    tape.value(x).rows
                )));
            }
            Some(adj)
        }
        ModelConfig::Mlp(_) => None,
    };
    let mut h = x;
    for l in 0..layers {
        h = tape.matmul(h, vars[l * stride])?;
        if let Some(adj) = adj {
            h = tape.propagate(adj, h)?;
        }
        if bias {
            h = tape.add_row(h, vars[l * stride + 1])?;
        }
        if l + 1 < layers {
            h = tape.relu(h);
            if let Some(rng) = train_rng.as_deref_mut() {
                h = tape.dropout(h, cfg.dropout(), rng);
            }
        }
    }
    Ok(h)
}

/// Convenience forward pass that returns the output matrix.
pub fn forward(
    cfg: &ModelConfig,
    params: &Params,
    adj: Option<&NormAdj>,
    x: &Tensor2,
    train_rng: Option<&mut ChaCha8Rng>,
) -> Result<Tensor2> {
    params.check_against(cfg)?;
    let mut tape = Tape::new();
    let vars = params.bind(&mut tape);
    let xv = tape.constant(x);
    let out = encode(cfg, &mut tape, &vars, params.bias, xv, adj, train_rng)?;
    Ok(tape.value(out).clone())
}

pub fn mlp_forward(
    cfg: &MlpConfig,
    params: &Params,
    x: &Tensor2,
    train_rng: Option<&mut ChaCha8Rng>,
) -> Result<Tensor2> {
    forward(&ModelConfig::Mlp(cfg.clone()), params, None, x, train_rng)
}

pub fn gcn_forward(
    cfg: &GcnConfig,
    params: &Params,
    adj: &NormAdj,
    x: &Tensor2,
    train_rng: Option<&mut ChaCha8Rng>,
) -> Result<Tensor2> {
    forward(&ModelConfig::Gcn(cfg.clone()), params, Some(adj), x, train_rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Graph;
    use crate::nn::normalize_adjacency;

    fn mlp(hidden: Vec<usize>) -> MlpConfig {
        MlpConfig {
            in_dim: 3,
            hidden_dims: hidden,
            out_dim: 2,
            dropout: 0.0,
            activation: Activation::Relu,
            weight_init: WeightInit::GlorotUniform,
            bias: true,
        }
    }

    #[test]
    fn zero_hidden_layers_is_affine() {
        let cfg = mlp(vec![]);
        let p = ModelConfig::Mlp(cfg.clone()).init_params(3).unwrap();
        let x = Tensor2::from_vec(2, 3, vec![1.0, -2.0, 0.5, 0.0, 3.0, 1.0]).unwrap();
        let mut p = p;
        p.tensors[1] = Tensor2::from_vec(1, 2, vec![0.25, -1.0]).unwrap();
        let y = mlp_forward(&cfg, &p, &x, None).unwrap();
        let mut want = x.matmul(p.weight(0)).unwrap();
        for i in 0..2 {
            want.data[i * 2] += 0.25;
            want.data[i * 2 + 1] -= 1.0;
        }
        assert!(y.max_abs_diff(&want) < 1e-15);
    }

    #[test]
    fn glorot_bounds() {
        let p = Params::glorot(&[10, 6], true, 1);
        let bound = (6.0f64 / 16.0).sqrt();
        assert!(p.weight(0).data.iter().all(|w| w.abs() <= bound));
        assert!(p.bias_of(0).unwrap().data.iter().all(|&b| b == 0.0));
    }

    #[test]
    fn shape_mismatch_reported() {
        let cfg = mlp(vec![4]);
        let p = ModelConfig::Mlp(cfg.clone()).init_params(0).unwrap();
        let x = Tensor2::zeros(2, 5);
        assert!(matches!(mlp_forward(&cfg, &p, &x, None), Err(Error::Shape(_))));
        let other = ModelConfig::Mlp(mlp(vec![5])).init_params(0).unwrap();
        assert!(matches!(mlp_forward(&cfg, &other, &Tensor2::zeros(2, 3), None), Err(Error::Shape(_))));
    }

    #[test]
    fn gcn_needs_matching_adjacency() {
        let cfg = GcnConfig { in_dim: 3, hidden_dim: 4, out_dim: 2, num_layers: 2, dropout: 0.0, self_loops: true, bias: true };
        let p = ModelConfig::Gcn(cfg.clone()).init_params(0).unwrap();
        let adj = normalize_adjacency(&Graph::from_edges(3, &[]).unwrap(), true);
        assert!(gcn_forward(&cfg, &p, &adj, &Tensor2::zeros(4, 3), None).is_err());
        assert!(gcn_forward(&cfg, &p, &adj, &Tensor2::zeros(3, 3), None).is_ok());
    }

    #[test]
    fn invalid_configs() {
        let mut c = mlp(vec![4]);
        c.dropout = 1.0;
        assert!(ModelConfig::Mlp(c).validate().is_err());
        let g = GcnConfig { in_dim: 3, hidden_dim: 4, out_dim: 2, num_layers: 0, dropout: 0.0, self_loops: true, bias: true };
        assert!(ModelConfig::Gcn(g).validate().is_err());
    }
}
