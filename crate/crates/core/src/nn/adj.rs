use crate::graph::Graph;
use crate::nn::Tensor2;

/// Symmetrically normalized adjacency `D^-1/2 (A [+ I]) D^-1/2` in CSR form.
#[derive(Clone, Debug, PartialEq)]
pub struct NormAdj {
    n: usize,
    offsets: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

pub fn normalize_adjacency(graph: &Graph, self_loops: bool) -> NormAdj {
    let n = graph.num_nodes();
    let extra = usize::from(self_loops);
    let deg: Vec<usize> = (0..n).map(|u| graph.degree(u) + extra).collect();
    let weight = |u: usize, v: usize| ((deg[u] * deg[v]) as f64).sqrt().recip();
    let mut offsets = Vec::with_capacity(n + 1);
    let mut cols = Vec::with_capacity(graph.csr_targets().len() + n * extra);
    let mut vals = Vec::with_capacity(cols.capacity());
    offsets.push(0);
    for u in 0..n {
        let mut diag_done = !self_loops;
        for &v in graph.neighbors(u) {
            if !diag_done && v > u {
                cols.push(u);
                vals.push(weight(u, u));
                diag_done = true;
            }
            cols.push(v);
            vals.push(weight(u, v));
        }
        if !diag_done {
            cols.push(u);
            vals.push(weight(u, u));
        }
        offsets.push(cols.len());
    }
    NormAdj {
        n,
        offsets,
        cols,
        vals,
    }
}

impl NormAdj {
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// Nonzeros of row `i` as `(column, value)`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.offsets[i]..self.offsets[i + 1];
        self.cols[r.clone()].iter().copied().zip(self.vals[r].iter().copied())
    }

    /// `Â · h`
    pub fn spmm(&self, h: &Tensor2) -> Tensor2 {
        assert_eq!(h.rows, self.n, "spmm row count");
        let mut out = Tensor2::zeros(self.n, h.cols);
        for i in 0..self.n {
            let dst = &mut out.data[i * h.cols..(i + 1) * h.cols];
            for (j, w) in self.row(i) {
                for (o, x) in dst.iter_mut().zip(h.row(j)) {
                    *o += w * x;
                }
            }
        }
        out
    }

    /// `acc += Âᵀ · g`
    pub fn spmm_t_acc(&self, g: &Tensor2, acc: &mut Tensor2) {
        assert_eq!(g.rows, self.n, "spmm_t row count");
        for i in 0..self.n {
            let src = g.row(i);
            for (j, w) in self.row(i) {
                for (o, x) in acc.row_mut(j).iter_mut().zip(src) {
                    *o += w * x;
                }
            }
        }
    }

    pub fn dense(&self) -> Tensor2 {
        let mut out = Tensor2::zeros(self.n, self.n);
        for i in 0..self.n {
            for (j, w) in self.row(i) {
                out.data[i * self.n + j] = w;
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_node_with_self_loop() {
        let g = Graph::from_edges(1, &[]).unwrap();
        assert_eq!(normalize_adjacency(&g, true).dense().data, vec![1.0]);
        assert_eq!(normalize_adjacency(&g, false).dense().data, vec![0.0]);
    }

    #[test]
    fn single_edge() {
        let g = Graph::from_edges(2, &[(0, 1)]).unwrap();
        let a = normalize_adjacency(&g, true).dense();
        assert_eq!(a.data, vec![0.5, 0.5, 0.5, 0.5]);
        let a = normalize_adjacency(&g, false).dense();
        assert_eq!(a.data, vec![0.0, 1.0, 1.0, 0.0]);
    }

    #[test]
    fn columns_sorted_per_row() {
        let g = Graph::from_edges(4, &[(0, 3), (1, 2), (2, 3), (0, 1)]).unwrap();
        let a = normalize_adjacency(&g, true);
        for i in 0..4 {
            let cols: Vec<_> = a.row(i).map(|(j, _)| j).collect();
            assert!(cols.windows(2).all(|w| w[0] < w[1]), "{cols:?}");
        }
        assert_eq!(a.nnz(), 8 + 4);
    }
}
