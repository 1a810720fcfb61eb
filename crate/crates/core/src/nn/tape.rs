//! Reverse-mode differentiation over dense matrices.
//!
//! A [`Tape`] records every operation of a forward pass as a node holding its
//! value. [`Tape::backward`] walks the nodes in reverse and accumulates
//! gradients for every node that depends on a parameter.

use std::borrow::Cow;

use rand::Rng;

use crate::error::{Error, Result};
use crate::nn::loss;
use crate::nn::tensor::gemm;
use crate::nn::{NormAdj, Tensor2};

/// Handle to a node on a [`Tape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Var(usize);

enum Op<'a> {
    Leaf,
    MatMul(Var, Var),
    Propagate(&'a NormAdj, Var),
    AddRow(Var, Var),
    Relu(Var),
    Mask(Var, Vec<f64>),
    Mul(Var, Var),
    Sum(Var),
    PairDot(Var, Vec<(usize, usize)>),
    Bce(Var, Vec<f64>),
    SoftmaxXent(Var, Vec<usize>, Vec<usize>),
}

struct Node<'a> {
    value: Cow<'a, Tensor2>,
    op: Op<'a>,
    needs_grad: bool,
}

#[derive(Default)]
pub struct Tape<'a> {
    nodes: Vec<Node<'a>>,
}

/// Gradients produced by [`Tape::backward`], indexed by [`Var`].
pub struct Gradients {
    grads: Vec<Option<Tensor2>>,
}

impl Gradients {
    /// Gradient for `v`, or `None` when `v` does not influence the loss.
    pub fn get(&self, v: Var) -> Option<&Tensor2> {
        self.grads.get(v.0).and_then(Option::as_ref)
    }

    pub fn take(&mut self, v: Var) -> Option<Tensor2> {
        self.grads.get_mut(v.0).and_then(Option::take)
    }
}

fn shape_err(what: &str, a: (usize, usize), b: (usize, usize)) -> Error {
    Error::Shape(format!("{what}: {}x{} vs {}x{}", a.0, a.1, b.0, b.1))
}

impl<'a> Tape<'a> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, value: Cow<'a, Tensor2>, op: Op<'a>, needs_grad: bool) -> Var {
        self.nodes.push(Node {
            value,
            op,
            needs_grad,
        });
        Var(self.nodes.len() - 1)
    }

    fn needs(&self, v: Var) -> bool {
        self.nodes[v.0].needs_grad
    }

    pub fn value(&self, v: Var) -> &Tensor2 {
        &self.nodes[v.0].value
    }

    /// Borrowed input that receives no gradient.
    pub fn constant(&mut self, t: &'a Tensor2) -> Var {
        self.push(Cow::Borrowed(t), Op::Leaf, false)
    }

    /// Borrowed parameter; gradients flow into it.
    pub fn param(&mut self, t: &'a Tensor2) -> Var {
        self.push(Cow::Borrowed(t), Op::Leaf, true)
    }

    /// Owned parameter.
    pub fn param_owned(&mut self, t: Tensor2) -> Var {
        self.push(Cow::Owned(t), Op::Leaf, true)
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let out = self.value(a).matmul(self.value(b))?;
        let ng = self.needs(a) || self.needs(b);
        Ok(self.push(Cow::Owned(out), Op::MatMul(a, b), ng))
    }

    /// `Â · h`
    pub fn propagate(&mut self, adj: &'a NormAdj, h: Var) -> Result<Var> {
        let hv = self.value(h);
        if hv.rows != adj.dim() {
            return Err(shape_err("propagate", (adj.dim(), adj.dim()), hv.shape()));
        }
        let out = adj.spmm(hv);
        let ng = self.needs(h);
        Ok(self.push(Cow::Owned(out), Op::Propagate(adj, h), ng))
    }

    /// Adds the `1 x cols` row `b` to every row of `x`.
    pub fn add_row(&mut self, x: Var, b: Var) -> Result<Var> {
        let (xv, bv) = (self.value(x), self.value(b));
        if bv.rows != 1 || bv.cols != xv.cols {
            return Err(shape_err("add_row", xv.shape(), bv.shape()));
        }
        let mut out = xv.clone();
        for i in 0..out.rows {
            for (o, bj) in out.row_mut(i).iter_mut().zip(&bv.data) {
                *o += bj;
            }
        }
        let ng = self.needs(x) || self.needs(b);
        Ok(self.push(Cow::Owned(out), Op::AddRow(x, b), ng))
    }

    pub fn relu(&mut self, x: Var) -> Var {
        let mut out = self.value(x).clone();
        for v in &mut out.data {
            *v = v.max(0.0);
        }
        let ng = self.needs(x);
        self.push(Cow::Owned(out), Op::Relu(x), ng)
    }

    /// Inverted dropout: zeroes entries with probability `p` and scales the
    /// survivors by `1 / (1 - p)`.
    pub fn dropout<R: Rng>(&mut self, x: Var, p: f64, rng: &mut R) -> Var {
        if p <= 0.0 {
            return x;
        }
        let keep = 1.0 / (1.0 - p);
        let xv = self.value(x);
        let mask: Vec<f64> = (0..xv.data.len())
            .map(|_| if rng.random::<f64>() < p { 0.0 } else { keep })
            .collect();
        let mut out = xv.clone();
        for (o, m) in out.data.iter_mut().zip(&mask) {
            *o *= m;
        }
        let ng = self.needs(x);
        self.push(Cow::Owned(out), Op::Mask(x, mask), ng)
    }

    /// Elementwise product.
    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (av, bv) = (self.value(a), self.value(b));
        if av.shape() != bv.shape() {
            return Err(shape_err("mul", av.shape(), bv.shape()));
        }
        let data = av.data.iter().zip(&bv.data).map(|(x, y)| x * y).collect();
        let out = Tensor2::from_vec(av.rows, av.cols, data)?;
        let ng = self.needs(a) || self.needs(b);
        Ok(self.push(Cow::Owned(out), Op::Mul(a, b), ng))
    }

    /// Sum of all entries as a `1 x 1` node.
    pub fn sum(&mut self, x: Var) -> Var {
        let s = self.value(x).data.iter().sum();
        let ng = self.needs(x);
        self.push(Cow::Owned(Tensor2::scalar(s)), Op::Sum(x), ng)
    }

    /// Row dot products `⟨z_u, z_v⟩` for each pair, as a `pairs x 1` column.
    pub fn pair_dot(&mut self, z: Var, pairs: &[(usize, usize)]) -> Result<Var> {
        let logits = loss::link_logits(self.value(z), pairs)?;
        let out = Tensor2::from_vec(pairs.len(), 1, logits)?;
        let ng = self.needs(z);
        Ok(self.push(Cow::Owned(out), Op::PairDot(z, pairs.to_vec()), ng))
    }

    /// Mean binary cross-entropy of a column of logits against 0/1 targets.
    pub fn bce_with_logits(&mut self, logits: Var, targets: &[f64]) -> Result<Var> {
        let lv = self.value(logits);
        if lv.cols != 1 {
            return Err(Error::Shape(format!("bce expects a column, got {}x{}", lv.rows, lv.cols)));
        }
        let l = loss::bce_with_logits(&lv.data, targets)?;
        let ng = self.needs(logits);
        Ok(self.push(Cow::Owned(Tensor2::scalar(l)), Op::Bce(logits, targets.to_vec()), ng))
    }

    /// Mean softmax cross-entropy over the selected `rows` of `logits`.
    pub fn softmax_cross_entropy(
        &mut self,
        logits: Var,
        rows: &[usize],
        labels: &[usize],
    ) -> Result<Var> {
        let l = loss::softmax_cross_entropy_rows(self.value(logits), rows, labels)?;
        let ng = self.needs(logits);
        Ok(self.push(
            Cow::Owned(Tensor2::scalar(l)),
            Op::SoftmaxXent(logits, rows.to_vec(), labels.to_vec()),
            ng,
        ))
    }

    /// Reverse pass from a scalar node.
    pub fn backward(&self, loss: Var) -> Result<Gradients> {
        if self.nodes.is_empty() {
            return Err(Error::State("backward called on an empty tape".into()));
        }
        let Some(node) = self.nodes.get(loss.0) else {
            return Err(Error::State(format!("variable {} is not on this tape", loss.0)));
        };
        if node.value.shape() != (1, 1) {
            return Err(Error::State(format!(
                "backward needs a scalar, got {}x{}",
                node.value.rows, node.value.cols
            )));
        }
        let mut grads: Vec<Option<Tensor2>> = vec![None; loss.0 + 1];
        grads[loss.0] = Some(Tensor2::scalar(1.0));
        for idx in (0..=loss.0).rev() {
            let Some(g) = grads[idx].take() else { continue };
            let node = &self.nodes[idx];
            if !node.needs_grad {
                continue;
            }
            self.propagate_grad(node, &g, &mut grads);
            grads[idx] = Some(g);
        }
        Ok(Gradients { grads })
    }

    fn propagate_grad(&self, node: &Node<'a>, g: &Tensor2, grads: &mut [Option<Tensor2>]) {
        macro_rules! slot {
            ($v:expr) => {{
                let v: Var = $v;
                if self.needs(v) {
                    let (r, c) = self.value(v).shape();
                    Some(grads[v.0].get_or_insert_with(|| Tensor2::zeros(r, c)))
                } else {
                    None
                }
            }};
        }
        match &node.op {
            Op::Leaf => {}
            Op::MatMul(a, b) => {
                let (av, bv) = (self.value(*a), self.value(*b));
                if let Some(ga) = slot!(*a) {
                    gemm(1.0, g, false, bv, true, 1.0, ga);
                }
                if let Some(gb) = slot!(*b) {
                    gemm(1.0, av, true, g, false, 1.0, gb);
                }
            }
            Op::Propagate(adj, h) => {
                if let Some(gh) = slot!(*h) {
                    adj.spmm_t_acc(g, gh);
                }
            }
            Op::AddRow(x, b) => {
                if let Some(gx) = slot!(*x) {
                    for (o, d) in gx.data.iter_mut().zip(&g.data) {
                        *o += d;
                    }
                }
                if let Some(gb) = slot!(*b) {
                    for i in 0..g.rows {
                        for (o, d) in gb.data.iter_mut().zip(g.row(i)) {
                            *o += d;
                        }
                    }
                }
            }
            Op::Relu(x) => {
                let xv = self.value(*x);
                if let Some(gx) = slot!(*x) {
                    for ((o, d), v) in gx.data.iter_mut().zip(&g.data).zip(&xv.data) {
                        if *v > 0.0 {
                            *o += d;
                        }
                    }
                }
            }
            Op::Mask(x, mask) => {
                if let Some(gx) = slot!(*x) {
                    for ((o, d), m) in gx.data.iter_mut().zip(&g.data).zip(mask) {
                        *o += d * m;
                    }
                }
            }
            Op::Mul(a, b) => {
                let (av, bv) = (self.value(*a), self.value(*b));
                if let Some(ga) = slot!(*a) {
                    for ((o, d), y) in ga.data.iter_mut().zip(&g.data).zip(&bv.data) {
                        *o += d * y;
                    }
                }
                if let Some(gb) = slot!(*b) {
                    for ((o, d), x) in gb.data.iter_mut().zip(&g.data).zip(&av.data) {
                        *o += d * x;
                    }
                }
            }
            Op::Sum(x) => {
                let s = g.data[0];
                if let Some(gx) = slot!(*x) {
                    for o in &mut gx.data {
                        *o += s;
                    }
                }
            }
            Op::PairDot(z, pairs) => {
                let zv = self.value(*z);
                if let Some(gz) = slot!(*z) {
                    let c = zv.cols;
                    for (k, &(u, v)) in pairs.iter().enumerate() {
                        let w = g.data[k];
                        for j in 0..c {
                            let (zu, zvv) = (zv.data[u * c + j], zv.data[v * c + j]);
                            gz.data[u * c + j] += w * zvv;
                            gz.data[v * c + j] += w * zu;
                        }
                    }
                }
            }
            Op::Bce(x, targets) => {
                let xv = self.value(*x);
                let scale = g.data[0] / targets.len() as f64;
                if let Some(gx) = slot!(*x) {
                    for ((o, l), y) in gx.data.iter_mut().zip(&xv.data).zip(targets) {
                        *o += scale * (loss::sigmoid(*l) - y);
                    }
                }
            }
            Op::SoftmaxXent(x, rows, labels) => {
                let xv = self.value(*x);
                let scale = g.data[0] / rows.len() as f64;
                if let Some(gx) = slot!(*x) {
                    for (&r, &y) in rows.iter().zip(labels) {
                        let p = loss::softmax(xv.row(r));
                        for (j, (o, pj)) in gx.row_mut(r).iter_mut().zip(&p).enumerate() {
                            let target = if j == y { 1.0 } else { 0.0 };
                            *o += scale * (pj - target);
                        }
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_gradient() {
        let mut tape = Tape::new();
        let w = tape.param_owned(Tensor2::scalar(3.0));
        let sq = tape.mul(w, w).unwrap();
        let f = tape.sum(sq);
        let g = tape.backward(f).unwrap();
        assert_eq!(g.get(w).unwrap().data, vec![6.0]);
    }

    #[test]
    fn backward_state_errors() {
        let tape = Tape::new();
        assert!(matches!(tape.backward(Var(0)), Err(Error::State(_))));
        let mut tape = Tape::new();
        let w = tape.param_owned(Tensor2::zeros(2, 2));
        assert!(matches!(tape.backward(w), Err(Error::State(_))));
        assert!(matches!(tape.backward(Var(5)), Err(Error::State(_))));
    }

    #[test]
    fn constants_get_no_gradient() {
        let x = Tensor2::from_vec(1, 2, vec![1.0, 2.0]).unwrap();
        let mut tape = Tape::new();
        let c = tape.constant(&x);
        let w = tape.param_owned(Tensor2::from_vec(2, 1, vec![0.5, -1.0]).unwrap());
        let y = tape.matmul(c, w).unwrap();
        let s = tape.sum(y);
        let g = tape.backward(s).unwrap();
        assert!(g.get(c).is_none());
        assert_eq!(g.get(w).unwrap().data, vec![1.0, 2.0]);
    }

    #[test]
    fn dropout_mask_scales_survivors() {
        use rand::SeedableRng;
        let x = Tensor2::from_vec(1, 1000, vec![1.0; 1000]).unwrap();
        let mut tape = Tape::new();
        let v = tape.param(&x);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let d = tape.dropout(v, 0.5, &mut rng);
        let out = tape.value(d);
        assert!(out.data.iter().all(|&y| y == 0.0 || y == 2.0));
        let kept = out.data.iter().filter(|&&y| y > 0.0).count();
        assert!((400..600).contains(&kept), "{kept}");
        let same = tape.dropout(v, 0.0, &mut rng);
        assert_eq!(same, v);
    }
}
