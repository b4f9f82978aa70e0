//! Minimal reverse-mode automatic differentiation over dense matrices.
//!
//! Every operation appends a node holding its value and, when gradients are
//! enabled, a backward closure. The graph is append-only; `mark`/`truncate`
//! let inference rollouts discard per-step intermediates so memory stays
//! proportional to one decode step instead of the whole trajectory.

use ndarray::{s, Array2, Axis};

/// Handle to a node in a [`Graph`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Var(usize);

type BackFn = Box<dyn Fn(&Array2<f64>, &[Array2<f64>], &mut [Array2<f64>]) + Send>;

/// Gradients produced by [`Graph::backward`], indexed by variable.
pub struct Grads(Vec<Array2<f64>>);

impl Grads {
    pub fn get(&self, v: Var) -> &Array2<f64> {
        &self.0[v.0]
    }
}

pub struct Graph {
    vals: Vec<Array2<f64>>,
    backs: Vec<Option<BackFn>>,
    grad: bool,
}

impl Graph {
    pub fn new(grad_enabled: bool) -> Self {
        Graph {
            vals: Vec::new(),
            backs: Vec::new(),
            grad: grad_enabled,
        }
    }

    pub fn grad_enabled(&self) -> bool {
        self.grad
    }

    pub fn value(&self, v: Var) -> &Array2<f64> {
        &self.vals[v.0]
    }

    pub fn len(&self) -> usize {
        self.vals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vals.is_empty()
    }

    /// Watermark for [`Graph::truncate`].
    pub fn mark(&self) -> usize {
        self.vals.len()
    }

    /// Drops all nodes created after `mark`. Only valid when gradients are
    /// disabled; handles issued after the mark become invalid.
    pub fn truncate(&mut self, mark: usize) {
        debug_assert!(!self.grad, "cannot truncate a recording graph");
        self.vals.truncate(mark);
        self.backs.truncate(mark);
    }

    fn push(&mut self, val: Array2<f64>, back: Option<BackFn>) -> Var {
        self.vals.push(val);
        self.backs.push(if self.grad { back } else { None });
        Var(self.vals.len() - 1)
    }

    /// A differentiable input (parameter tensor).
    pub fn leaf(&mut self, val: Array2<f64>) -> Var {
        self.push(val, None)
    }

    /// A non-differentiable input (features, masks-as-data, advantages).
    pub fn constant(&mut self, val: Array2<f64>) -> Var {
        self.push(val, None)
    }

    /// Runs reverse accumulation from `root` (which must be 1x1).
    pub fn backward(&mut self, root: Var) -> Grads {
        assert!(self.grad, "backward on a non-recording graph");
        assert_eq!(self.vals[root.0].len(), 1, "backward root must be scalar");
        let mut grads: Vec<Array2<f64>> = self
            .vals
            .iter()
            .map(|v| Array2::zeros(v.raw_dim()))
            .collect();
        grads[root.0].fill(1.0);
        for i in (0..self.vals.len()).rev() {
            if let Some(back) = &self.backs[i] {
                let g = std::mem::replace(&mut grads[i], Array2::zeros((0, 0)));
                back(&g, &self.vals, &mut grads);
                grads[i] = g;
            }
        }
        Grads(grads)
    }

    // ---- arithmetic ----

    pub fn matmul(&mut self, a: Var, b: Var) -> Var {
        let val = mm(&self.vals[a.0], &self.vals[b.0]);
        self.push(
            val,
            Some(Box::new(move |g, vals, grads| {
                grads[a.0] = &grads[a.0] + &g.dot(&vals[b.0].t());
                grads[b.0] = &grads[b.0] + &vals[a.0].t().dot(g);
            })),
        )
    }

    /// `a @ b^T`
    pub fn matmul_nt(&mut self, a: Var, b: Var) -> Var {
        let val = mm_nt(&self.vals[a.0], &self.vals[b.0]);
        self.push(
            val,
            Some(Box::new(move |g, vals, grads| {
                grads[a.0] = &grads[a.0] + &g.dot(&vals[b.0]);
                grads[b.0] = &grads[b.0] + &g.t().dot(&vals[a.0]);
            })),
        )
    }

    pub fn add(&mut self, a: Var, b: Var) -> Var {
        let val = &self.vals[a.0] + &self.vals[b.0];
        self.push(
            val,
            Some(Box::new(move |g, _, grads| {
                grads[a.0] = &grads[a.0] + g;
                grads[b.0] = &grads[b.0] + g;
            })),
        )
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Var {
        let val = &self.vals[a.0] - &self.vals[b.0];
        self.push(
            val,
            Some(Box::new(move |g, _, grads| {
                grads[a.0] = &grads[a.0] + g;
                grads[b.0] = &grads[b.0] - g;
            })),
        )
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Var {
        let val = &self.vals[a.0] * &self.vals[b.0];
        self.push(
            val,
            Some(Box::new(move |g, vals, grads| {
                grads[a.0] = &grads[a.0] + &(g * &vals[b.0]);
                grads[b.0] = &grads[b.0] + &(g * &vals[a.0]);
            })),
        )
    }

    pub fn scale(&mut self, a: Var, c: f64) -> Var {
        let val = &self.vals[a.0] * c;
        self.push(
            val,
            Some(Box::new(move |g, _, grads| {
                grads[a.0] = &grads[a.0] + &(g * c);
            })),
        )
    }

    // ---- broadcasts (row: 1xC against RxC; col: Rx1 against RxC) ----

    pub fn add_row(&mut self, x: Var, row: Var) -> Var {
        let val = &self.vals[x.0] + &self.vals[row.0];
        self.push(
            val,
            Some(Box::new(move |g, _, grads| {
                grads[x.0] = &grads[x.0] + g;
                grads[row.0] = &grads[row.0] + &g.sum_axis(Axis(0)).insert_axis(Axis(0));
            })),
        )
    }

    pub fn sub_row(&mut self, x: Var, row: Var) -> Var {
        let val = &self.vals[x.0] - &self.vals[row.0];
        self.push(
            val,
            Some(Box::new(move |g, _, grads| {
                grads[x.0] = &grads[x.0] + g;
                grads[row.0] = &grads[row.0] - &g.sum_axis(Axis(0)).insert_axis(Axis(0));
            })),
        )
    }

    pub fn mul_row(&mut self, x: Var, row: Var) -> Var {
        let val = &self.vals[x.0] * &self.vals[row.0];
        self.push(
            val,
            Some(Box::new(move |g, vals, grads| {
                grads[x.0] = &grads[x.0] + &(g * &vals[row.0]);
                grads[row.0] = &grads[row.0]
                    + &(g * &vals[x.0]).sum_axis(Axis(0)).insert_axis(Axis(0));
            })),
        )
    }

    pub fn div_row(&mut self, x: Var, row: Var) -> Var {
        let val = &self.vals[x.0] / &self.vals[row.0];
        self.push(
            val,
            Some(Box::new(move |g, vals, grads| {
                grads[x.0] = &grads[x.0] + &(g / &vals[row.0]);
                let r2 = &vals[row.0] * &vals[row.0];
                grads[row.0] = &grads[row.0]
                    - &((g * &vals[x.0] / &r2).sum_axis(Axis(0)).insert_axis(Axis(0)));
            })),
        )
    }

    pub fn add_col(&mut self, x: Var, col: Var) -> Var {
        let val = &self.vals[x.0] + &self.vals[col.0];
        self.push(
            val,
            Some(Box::new(move |g, _, grads| {
                grads[x.0] = &grads[x.0] + g;
                grads[col.0] = &grads[col.0] + &g.sum_axis(Axis(1)).insert_axis(Axis(1));
            })),
        )
    }

    // ---- shape ----

    pub fn transpose(&mut self, a: Var) -> Var {
        let val = self.vals[a.0].t().to_owned();
        self.push(
            val,
            Some(Box::new(move |g, _, grads| {
                grads[a.0] = &grads[a.0] + &g.t();
            })),
        )
    }

    pub fn reshape(&mut self, a: Var, rows: usize, cols: usize) -> Var {
        let orig = self.vals[a.0].raw_dim();
        let val = self.vals[a.0]
            .clone()
            .into_shape_with_order((rows, cols))
            .expect("reshape size mismatch");
        self.push(
            val,
            Some(Box::new(move |g, _, grads| {
                let back = g.clone().into_shape_with_order(orig).unwrap();
                grads[a.0] = &grads[a.0] + &back;
            })),
        )
    }

    pub fn concat_rows(&mut self, parts: &[Var]) -> Var {
        let views: Vec<_> = parts.iter().map(|v| self.vals[v.0].view()).collect();
        let val = ndarray::concatenate(Axis(0), &views).expect("concat_rows shape mismatch");
        let parts: Vec<Var> = parts.to_vec();
        self.push(
            val,
            Some(Box::new(move |g, vals, grads| {
                let mut offset = 0;
                for p in &parts {
                    let rows = vals[p.0].nrows();
                    let slice = g.slice(s![offset..offset + rows, ..]).to_owned();
                    grads[p.0] = &grads[p.0] + &slice;
                    offset += rows;
                }
            })),
        )
    }

    pub fn concat_cols(&mut self, parts: &[Var]) -> Var {
        let views: Vec<_> = parts.iter().map(|v| self.vals[v.0].view()).collect();
        let val = ndarray::concatenate(Axis(1), &views).expect("concat_cols shape mismatch");
        let parts: Vec<Var> = parts.to_vec();
        self.push(
            val,
            Some(Box::new(move |g, vals, grads| {
                let mut offset = 0;
                for p in &parts {
                    let cols = vals[p.0].ncols();
                    let slice = g.slice(s![.., offset..offset + cols]).to_owned();
                    grads[p.0] = &grads[p.0] + &slice;
                    offset += cols;
                }
            })),
        )
    }

    pub fn slice_cols(&mut self, a: Var, lo: usize, hi: usize) -> Var {
        let val = self.vals[a.0].slice(s![.., lo..hi]).to_owned();
        self.push(
            val,
            Some(Box::new(move |g, _, grads| {
                let mut region = grads[a.0].slice_mut(s![.., lo..hi]);
                region += g;
            })),
        )
    }

    pub fn gather_rows(&mut self, a: Var, idx: &[usize]) -> Var {
        let src = &self.vals[a.0];
        let mut val = Array2::zeros((idx.len(), src.ncols()));
        for (out, &i) in idx.iter().enumerate() {
            val.row_mut(out).assign(&src.row(i));
        }
        let idx: Vec<usize> = idx.to_vec();
        self.push(
            val,
            Some(Box::new(move |g, _, grads| {
                for (out, &i) in idx.iter().enumerate() {
                    let mut row = grads[a.0].row_mut(i);
                    row += &g.row(out);
                }
            })),
        )
    }

    /// Picks one scalar per listed `(row, col)` position, returning kx1.
    pub fn pick(&mut self, a: Var, coords: &[(usize, usize)]) -> Var {
        let src = &self.vals[a.0];
        let mut val = Array2::zeros((coords.len(), 1));
        for (out, &(r, c)) in coords.iter().enumerate() {
            val[[out, 0]] = src[[r, c]];
        }
        let coords: Vec<(usize, usize)> = coords.to_vec();
        self.push(
            val,
            Some(Box::new(move |g, _, grads| {
                for (out, &(r, c)) in coords.iter().enumerate() {
                    grads[a.0][[r, c]] += g[[out, 0]];
                }
            })),
        )
    }

    // ---- nonlinearities ----

    pub fn relu(&mut self, a: Var) -> Var {
        let val = self.vals[a.0].mapv(|x| x.max(0.0));
        self.push(
            val,
            Some(Box::new(move |g, vals, grads| {
                let gate = vals[a.0].mapv(|x| if x > 0.0 { 1.0 } else { 0.0 });
                grads[a.0] = &grads[a.0] + &(g * &gate);
            })),
        )
    }

    pub fn leaky_relu(&mut self, a: Var, slope: f64) -> Var {
        let val = self.vals[a.0].mapv(|x| if x > 0.0 { x } else { slope * x });
        self.push(
            val,
            Some(Box::new(move |g, vals, grads| {
                let gate = vals[a.0].mapv(|x| if x > 0.0 { 1.0 } else { slope });
                grads[a.0] = &grads[a.0] + &(g * &gate);
            })),
        )
    }

    pub fn tanh_op(&mut self, a: Var) -> Var {
        let val = self.vals[a.0].mapv(f64::tanh);
        let out = self.push(
            val,
            Some(Box::new(move |_, _, _| unreachable!("patched below"))),
        );
        // The derivative needs the output value, so the closure captures the
        // output id rather than recomputing tanh.
        self.backs[out.0] = if self.grad {
            Some(Box::new(move |g, vals, grads| {
                let y = &vals[out.0];
                grads[a.0] = &grads[a.0] + &(g * &y.mapv(|t| 1.0 - t * t));
            }))
        } else {
            None
        };
        out
    }

    /// `sqrt(x + eps)`, used by normalization layers.
    pub fn sqrt_eps(&mut self, a: Var, eps: f64) -> Var {
        let val = self.vals[a.0].mapv(|x| (x + eps).sqrt());
        let out = self.push(val, None);
        self.backs[out.0] = if self.grad {
            Some(Box::new(move |g, vals, grads| {
                let y = &vals[out.0];
                grads[a.0] = &grads[a.0] + &(g * &y.mapv(|s| 0.5 / s));
            }))
        } else {
            None
        };
        out
    }

    pub fn mean_rows(&mut self, a: Var) -> Var {
        let rows = self.vals[a.0].nrows() as f64;
        let val = self.vals[a.0]
            .mean_axis(Axis(0))
            .unwrap()
            .insert_axis(Axis(0));
        self.push(
            val,
            Some(Box::new(move |g, _, grads| {
                let spread = g / rows;
                let target = &mut grads[a.0];
                for mut row in target.rows_mut() {
                    row += &spread.row(0);
                }
            })),
        )
    }

    // ---- softmax family ----

    /// Row-wise softmax; entries where `mask` is false get probability
    /// exactly zero and receive no gradient. Rows must have at least one
    /// unmasked entry.
    pub fn softmax_rows(&mut self, a: Var, mask: Option<&Array2<bool>>) -> Var {
        let val = softmax_values(&self.vals[a.0], mask);
        let out = self.push(val, None);
        self.backs[out.0] = if self.grad {
            Some(Box::new(move |g, vals, grads| {
                let p = &vals[out.0];
                let weighted = (g * p).sum_axis(Axis(1)).insert_axis(Axis(1));
                grads[a.0] = &grads[a.0] + &(p * &(g - &weighted));
            }))
        } else {
            None
        };
        out
    }

    /// Row-wise log-softmax with masking; masked entries hold -inf.
    pub fn log_softmax_rows(&mut self, a: Var, mask: Option<&Array2<bool>>) -> Var {
        let x = &self.vals[a.0];
        let (rows, cols) = (x.nrows(), x.ncols());
        let mut val = Array2::from_elem((rows, cols), f64::NEG_INFINITY);
        for r in 0..rows {
            let active = |c: usize| mask.map(|m| m[[r, c]]).unwrap_or(true);
            let mut max = f64::NEG_INFINITY;
            for c in 0..cols {
                if active(c) {
                    max = max.max(x[[r, c]]);
                }
            }
            debug_assert!(max.is_finite(), "log_softmax row {r} fully masked");
            let mut total = 0.0;
            for c in 0..cols {
                if active(c) {
                    total += (x[[r, c]] - max).exp();
                }
            }
            let log_total = total.ln();
            for c in 0..cols {
                if active(c) {
                    val[[r, c]] = x[[r, c]] - max - log_total;
                }
            }
        }
        let mask_data = mask.cloned();
        let out = self.push(val, None);
        self.backs[out.0] = if self.grad {
            Some(Box::new(move |g, vals, grads| {
                let logp = &vals[out.0];
                let rows = logp.nrows();
                let cols = logp.ncols();
                let mut dx = Array2::zeros((rows, cols));
                for r in 0..rows {
                    let active = |c: usize| mask_data.as_ref().map(|m| m[[r, c]]).unwrap_or(true);
                    let mut gsum = 0.0;
                    for c in 0..cols {
                        if active(c) {
                            gsum += g[[r, c]];
                        }
                    }
                    for c in 0..cols {
                        if active(c) {
                            dx[[r, c]] = g[[r, c]] - logp[[r, c]].exp() * gsum;
                        }
                    }
                }
                grads[a.0] = &grads[a.0] + &dx;
            }))
        } else {
            None
        };
        out
    }
}

// Hand-rolled products for small operands: the BLAS-style kernel behind
// `.dot()` carries a fixed dispatch cost that dominates on the tiny
// matrices decode steps produce. Shapes choose the path, so results stay
// deterministic run to run.
const MM_DIRECT_LIMIT: usize = 1 << 14;

fn mm(a: &Array2<f64>, b: &Array2<f64>) -> Array2<f64> {
    let (m, k) = a.dim();
    let n = b.ncols();
    if m * n * k > MM_DIRECT_LIMIT {
        return a.dot(b);
    }
    let mut out = Array2::zeros((m, n));
    for i in 0..m {
        for p in 0..k {
            let av = a[[i, p]];
            for j in 0..n {
                out[[i, j]] += av * b[[p, j]];
            }
        }
    }
    out
}

fn mm_nt(a: &Array2<f64>, b: &Array2<f64>) -> Array2<f64> {
    let (m, k) = a.dim();
    let n = b.nrows();
    if m * n * k > MM_DIRECT_LIMIT {
        return a.dot(&b.t());
    }
    let mut out = Array2::zeros((m, n));
    for i in 0..m {
        for j in 0..n {
            let mut acc = 0.0;
            for p in 0..k {
                acc += a[[i, p]] * b[[j, p]];
            }
            out[[i, j]] = acc;
        }
    }
    out
}

fn softmax_values(x: &Array2<f64>, mask: Option<&Array2<bool>>) -> Array2<f64> {
    let (rows, cols) = (x.nrows(), x.ncols());
    let mut out = Array2::zeros((rows, cols));
    for r in 0..rows {
        let active = |c: usize| mask.map(|m| m[[r, c]]).unwrap_or(true);
        let mut max = f64::NEG_INFINITY;
        for c in 0..cols {
            if active(c) {
                max = max.max(x[[r, c]]);
            }
        }
        debug_assert!(max.is_finite(), "softmax row {r} fully masked");
        let mut total = 0.0;
        for c in 0..cols {
            if active(c) {
                let e = (x[[r, c]] - max).exp();
                out[[r, c]] = e;
                total += e;
            }
        }
        for c in 0..cols {
            if active(c) {
                out[[r, c]] /= total;
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    /// Central finite differences over every op used by the model.
    #[test]
    fn op_gradients_match_finite_differences() {
        let builders: Vec<(&str, fn(&mut Graph, Var, Var) -> Var)> = vec![
            ("matmul", |g, a, b| g.matmul(a, b)),
            ("matmul_nt", |g, a, b| {
                let bt = g.transpose(b);
                g.matmul_nt(a, bt)
            }),
            ("add", |g, a, b| g.add(a, b)),
            ("sub", |g, a, b| g.sub(a, b)),
            ("mul", |g, a, b| g.mul(a, b)),
            ("composite", |g, a, b| {
                let t = g.tanh_op(a);
                let l = g.leaky_relu(b, 0.2);
                let s = g.add(t, l);
                let r = g.relu(s);
                let m = g.mean_rows(r);
                let q = g.mul(m, m);
                g.sqrt_eps(q, 1e-3)
            }),
            ("softmax", |g, a, b| {
                let s = g.softmax_rows(a, None);
                g.mul(s, b)
            }),
            ("log_softmax", |g, a, b| {
                let s = g.log_softmax_rows(a, None);
                g.mul(s, b)
            }),
            ("broadcast", |g, a, b| {
                let row = g.mean_rows(b);
                let x = g.add_row(a, row);
                let y = g.mul_row(x, row);
                let pos = g.sqrt_eps(row, 1.5);
                g.div_row(y, pos)
            }),
        ];
        let a0 = array![[0.3, -0.7, 1.2], [0.9, 0.1, -0.4], [-1.1, 0.6, 0.2]];
        let b0 = array![[0.5, 0.2, -0.3], [-0.8, 1.0, 0.7], [0.4, -0.6, 0.9]];

        for (name, build) in builders {
            let loss = |aa: &Array2<f64>, bb: &Array2<f64>| -> f64 {
                let mut g = Graph::new(false);
                let a = g.leaf(aa.clone());
                let b = g.leaf(bb.clone());
                let out = build(&mut g, a, b);
                // Weighted sum so every output entry matters.
                g.value(out)
                    .indexed_iter()
                    .map(|((r, c), v)| v * ((r + 2 * c + 1) as f64))
                    .sum()
            };
            let mut g = Graph::new(true);
            let a = g.leaf(a0.clone());
            let b = g.leaf(b0.clone());
            let out = build(&mut g, a, b);
            let weights = Array2::from_shape_fn(g.value(out).raw_dim(), |(r, c)| {
                (r + 2 * c + 1) as f64
            });
            let w = g.constant(weights);
            let prod = g.mul(out, w);
            let ones_shape = g.value(prod).raw_dim();
            let ones = g.constant(Array2::ones((1, ones_shape[0])));
            let rowsum = g.matmul(ones, prod);
            let colones = g.constant(Array2::ones((ones_shape[1], 1)));
            let total = g.matmul(rowsum, colones);
            let grads = g.backward(total);

            let h = 1e-6;
            for (var, base) in [(a, &a0), (b, &b0)] {
                for r in 0..3 {
                    for c in 0..3 {
                        let mut up = base.clone();
                        up[[r, c]] += h;
                        let mut down = base.clone();
                        down[[r, c]] -= h;
                        let (fa, fb) = if var == a { (&up, &b0) } else { (&a0, &up) };
                        let (da, db) = if var == a { (&down, &b0) } else { (&a0, &down) };
                        let fd = (loss(fa, fb) - loss(da, db)) / (2.0 * h);
                        let an = grads.get(var)[[r, c]];
                        assert!(
                            (fd - an).abs() <= 1e-5 * (1.0 + fd.abs().max(an.abs())),
                            "{name}: grad mismatch at ({r},{c}): fd={fd}, analytic={an}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn masked_softmax_zeroes_masked_entries() {
        let mut g = Graph::new(false);
        let x = g.constant(array![[1.0, 5.0, 2.0]]);
        let mask = array![[true, false, true]];
        let p = g.softmax_rows(x, Some(&mask));
        assert_eq!(g.value(p)[[0, 1]], 0.0);
        let total: f64 = g.value(p).sum();
        assert!((total - 1.0).abs() < 1e-12);
        let lp = g.log_softmax_rows(x, Some(&mask));
        assert_eq!(g.value(lp)[[0, 1]], f64::NEG_INFINITY);
    }

    #[test]
    fn truncate_discards_step_intermediates() {
        let mut g = Graph::new(false);
        let x = g.constant(Array2::ones((4, 4)));
        let mark = g.mark();
        for _ in 0..10 {
            let y = g.matmul(x, x);
            let _ = g.relu(y);
            g.truncate(mark);
        }
        assert_eq!(g.len(), 1);
    }
}
