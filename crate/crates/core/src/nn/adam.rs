use crate::error::{Error, Result};
use crate::nn::Tensor2;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    /// L2 penalty folded into the gradient before the moment updates.
    pub weight_decay: f64,
}

impl AdamConfig {
    pub fn new(lr: f64) -> Self {
        Self {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay: 0.0,
        }
    }

    pub fn with_weight_decay(mut self, wd: f64) -> Self {
        self.weight_decay = wd;
        self
    }
}

/// Bias-corrected Adam moments for a fixed list of parameter tensors.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState {
    pub config: AdamConfig,
    pub m: Vec<Tensor2>,
    pub v: Vec<Tensor2>,
    pub t: u64,
}

impl AdamState {
    pub fn new(config: AdamConfig, params: &[Tensor2]) -> Self {
        let zeros: Vec<Tensor2> = params.iter().map(|p| Tensor2::zeros(p.rows, p.cols)).collect();
        Self {
            config,
            m: zeros.clone(),
            v: zeros,
            t: 0,
        }
    }

    pub fn step(&mut self, params: &mut [Tensor2], grads: &[Tensor2]) -> Result<()> {
        if params.len() != self.m.len() || grads.len() != params.len() {
            return Err(Error::Shape(format!(
                "adam tracks {} tensors, got {} params and {} grads",
                self.m.len(),
                params.len(),
                grads.len()
            )));
        }
        for (i, (p, g)) in params.iter().zip(grads).enumerate() {
            if p.shape() != g.shape() || p.shape() != self.m[i].shape() {
                return Err(Error::Shape(format!("adam tensor {i} shape mismatch")));
            }
        }
        self.t += 1;
        let AdamConfig {
            lr,
            beta1,
            beta2,
            eps,
            weight_decay,
        } = self.config;
        let c1 = 1.0 - beta1.powi(self.t as i32);
        let c2 = 1.0 - beta2.powi(self.t as i32);
        for ((p, g), (m, v)) in params
            .iter_mut()
            .zip(grads)
            .zip(self.m.iter_mut().zip(self.v.iter_mut()))
        {
            for k in 0..p.data.len() {
                let gk = g.data[k] + weight_decay * p.data[k];
                m.data[k] = beta1 * m.data[k] + (1.0 - beta1) * gk;
                v.data[k] = beta2 * v.data[k] + (1.0 - beta2) * gk * gk;
                let m_hat = m.data[k] / c1;
                let v_hat = v.data[k] / c2;
                p.data[k] -= lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
        Ok(())
    }
}
