//! Tape-based reverse-mode automatic differentiation.
//!
//! Every operation appends a node holding its forward value, so node ids
//! are already in topological order. [`Graph::backward`] walks the tape
//! once in reverse and adds the resulting leaf gradients into the
//! persistent gradient buffers.

use std::rc::Rc;

use super::ops::{self, EmptyRow, LayerNormCache, PROB_FLOOR};
use super::params::{ParamId, ParamStore};
use super::tensor::Tensor;
use crate::error::{shape_err, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(usize);

impl NodeId {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone)]
enum Op {
    Leaf,
    MatMul(NodeId, NodeId),
    /// `a · bᵀ`
    MatMulNt(NodeId, NodeId),
    Add(NodeId, NodeId),
    AddRow(NodeId, NodeId),
    Mul(NodeId, NodeId),
    Scale(NodeId, f64),
    Relu(NodeId),
    Softmax(NodeId),
    LayerNorm {
        x: NodeId,
        gain: NodeId,
        bias: NodeId,
        cache: LayerNormCache,
    },
    LnClamped(NodeId),
    Sum(NodeId),
    GatherRows(NodeId, Rc<[usize]>),
    GatherCols(NodeId, Rc<[usize]>),
    Pick(NodeId, Rc<[usize]>),
    NormalizeRows(NodeId),
    MeanRows(NodeId),
    ConcatRows(Vec<NodeId>),
    SliceRows(NodeId, usize),
    StopDistribution(NodeId, Rc<[bool]>),
}

#[derive(Debug, Clone)]
struct Node {
    value: Tensor,
    op: Op,
    requires_grad: bool,
    /// Accumulated gradient, kept for leaves only.
    grad: Option<Tensor>,
    param: Option<ParamId>,
}

/// A single forward computation recorded for differentiation.
#[derive(Debug, Default)]
pub struct Graph {
    nodes: Vec<Node>,
}

impl Graph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, id: NodeId) -> &Tensor {
        &self.nodes[id.0].value
    }

    pub fn requires_grad(&self, id: NodeId) -> bool {
        self.nodes[id.0].requires_grad
    }

    /// Gradient accumulated on a leaf, if it requires one.
    pub fn grad(&self, id: NodeId) -> Option<&Tensor> {
        self.nodes[id.0].grad.as_ref()
    }

    pub fn zero_grad(&mut self) {
        for n in &mut self.nodes {
            if let Some(g) = &mut n.grad {
                g.values_mut().fill(0.0);
            }
        }
    }

    fn push(&mut self, value: Tensor, op: Op, inputs: &[NodeId]) -> NodeId {
        let requires_grad = inputs.iter().any(|i| self.nodes[i.0].requires_grad);
        self.nodes.push(Node {
            value,
            op,
            requires_grad,
            grad: None,
            param: None,
        });
        NodeId(self.nodes.len() - 1)
    }

    pub fn constant(&mut self, value: Tensor) -> NodeId {
        self.push(value, Op::Leaf, &[])
    }

    /// Differentiable leaf not bound to any parameter store.
    pub fn variable(&mut self, value: Tensor) -> NodeId {
        let grad = Some(Tensor::zeros(value.shape()));
        self.nodes.push(Node {
            value,
            op: Op::Leaf,
            requires_grad: true,
            grad,
            param: None,
        });
        NodeId(self.nodes.len() - 1)
    }

    /// Leaf holding a copy of a stored parameter; see [`Graph::accumulate_into`].
    pub fn param(&mut self, store: &ParamStore, id: ParamId) -> NodeId {
        let n = self.variable(store.value(id).clone());
        self.nodes[n.0].param = Some(id);
        n
    }

    pub fn matmul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let v = ops::matmul(self.value(a), self.value(b))?;
        Ok(self.push(v, Op::MatMul(a, b), &[a, b]))
    }

    pub fn matmul_nt(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let v = ops::matmul_nt(self.value(a), self.value(b))?;
        Ok(self.push(v, Op::MatMulNt(a, b), &[a, b]))
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let (va, vb) = (self.value(a), self.value(b));
        if va.dims2() != vb.dims2() {
            return Err(shape_err(
                "add",
                format!("{:?} vs {:?}", va.shape(), vb.shape()),
            ));
        }
        let mut v = va.clone();
        v.add_assign(vb);
        Ok(self.push(v, Op::Add(a, b), &[a, b]))
    }

    /// Adds a length-`cols` row vector to every row of `a`.
    pub fn add_row(&mut self, a: NodeId, row: NodeId) -> Result<NodeId> {
        let (va, vr) = (self.value(a), self.value(row));
        let c = va.cols();
        if vr.len() != c {
            return Err(shape_err(
                "add_row",
                format!("row of {} for {c} columns", vr.len()),
            ));
        }
        let mut v = va.clone();
        for chunk in v.values_mut().chunks_mut(c) {
            for (x, b) in chunk.iter_mut().zip(vr.values()) {
                *x += b;
            }
        }
        Ok(self.push(v, Op::AddRow(a, row), &[a, row]))
    }

    pub fn mul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let (va, vb) = (self.value(a), self.value(b));
        if va.len() != vb.len() {
            return Err(shape_err(
                "mul",
                format!("{:?} vs {:?}", va.shape(), vb.shape()),
            ));
        }
        let vals = va
            .values()
            .iter()
            .zip(vb.values())
            .map(|(x, y)| x * y)
            .collect();
        let v = Tensor::new(va.shape().to_vec(), vals)?;
        Ok(self.push(v, Op::Mul(a, b), &[a, b]))
    }

    pub fn scale(&mut self, a: NodeId, s: f64) -> NodeId {
        let v = self.value(a).map(|x| x * s);
        self.push(v, Op::Scale(a, s), &[a])
    }

    pub fn relu(&mut self, a: NodeId) -> NodeId {
        let v = self.value(a).map(|x| x.max(0.0));
        self.push(v, Op::Relu(a), &[a])
    }

    pub fn softmax(&mut self, a: NodeId) -> Result<NodeId> {
        let v = ops::softmax(self.value(a))?;
        Ok(self.push(v, Op::Softmax(a), &[a]))
    }

    /// Row softmax restricted to `mask`; rows with nothing to attend come
    /// out as zeros.
    pub fn masked_softmax(&mut self, a: NodeId, mask: &[bool]) -> Result<NodeId> {
        let v = ops::masked_softmax(self.value(a), Some(mask), EmptyRow::Zero)?;
        // Masked entries are exactly zero, so the plain softmax backward applies.
        Ok(self.push(v, Op::Softmax(a), &[a]))
    }

    pub fn layer_norm(&mut self, x: NodeId, gain: NodeId, bias: NodeId) -> Result<NodeId> {
        let (v, cache) =
            ops::layer_norm_with_cache(self.value(x), self.value(gain), self.value(bias))?;
        Ok(self.push(
            v,
            Op::LayerNorm {
                x,
                gain,
                bias,
                cache,
            },
            &[x, gain, bias],
        ))
    }

    /// `ln(clamp(x, 1e-12, 1))` elementwise.
    pub fn ln_clamped(&mut self, a: NodeId) -> NodeId {
        let v = self.value(a).map(|x| x.clamp(PROB_FLOOR, 1.0).ln());
        self.push(v, Op::LnClamped(a), &[a])
    }

    pub fn sum(&mut self, a: NodeId) -> NodeId {
        let v = Tensor::scalar(self.value(a).values().iter().sum());
        self.push(v, Op::Sum(a), &[a])
    }

    pub fn mean(&mut self, a: NodeId) -> NodeId {
        let n = self.value(a).len() as f64;
        let s = self.sum(a);
        self.scale(s, 1.0 / n)
    }

    /// Embedding lookup: rows of `table` at `ids`.
    pub fn gather_rows(&mut self, table: NodeId, ids: &[usize]) -> Result<NodeId> {
        let t = self.value(table);
        let (r, c) = t.dims2();
        if let Some(&bad) = ids.iter().find(|&&i| i >= r) {
            return Err(shape_err("gather_rows", format!("row {bad} of {r}")));
        }
        let mut vals = Vec::with_capacity(ids.len() * c);
        for &i in ids {
            vals.extend_from_slice(t.row(i));
        }
        let v = Tensor::matrix(ids.len(), c, vals)?;
        Ok(self.push(v, Op::GatherRows(table, ids.into()), &[table]))
    }

    /// `out[i][k] = x[i][cols[k]]`.
    pub fn gather_cols(&mut self, x: NodeId, cols: &[usize]) -> Result<NodeId> {
        let t = self.value(x);
        let (r, c) = t.dims2();
        if let Some(&bad) = cols.iter().find(|&&j| j >= c) {
            return Err(shape_err("gather_cols", format!("column {bad} of {c}")));
        }
        let mut vals = Vec::with_capacity(r * cols.len());
        for i in 0..r {
            let row = t.row(i);
            vals.extend(cols.iter().map(|&j| row[j]));
        }
        let v = Tensor::matrix(r, cols.len(), vals)?;
        Ok(self.push(v, Op::GatherCols(x, cols.into()), &[x]))
    }

    /// Flat-index selection producing a vector.
    pub fn pick(&mut self, x: NodeId, flat: &[usize]) -> Result<NodeId> {
        let t = self.value(x);
        if let Some(&bad) = flat.iter().find(|&&i| i >= t.len()) {
            return Err(shape_err("pick", format!("index {bad} of {}", t.len())));
        }
        let v = Tensor::vector(flat.iter().map(|&i| t.values()[i]).collect());
        Ok(self.push(v, Op::Pick(x, flat.into()), &[x]))
    }

    /// Divides each row by its sum; all-zero rows stay zero.
    pub fn normalize_rows(&mut self, x: NodeId) -> NodeId {
        let t = self.value(x);
        let c = t.cols();
        let mut v = t.clone();
        for row in v.values_mut().chunks_mut(c) {
            let s: f64 = row.iter().sum();
            if s != 0.0 {
                row.iter_mut().for_each(|r| *r /= s);
            }
        }
        self.push(v, Op::NormalizeRows(x), &[x])
    }

    pub fn mean_rows(&mut self, x: NodeId) -> NodeId {
        let v = self.value(x).mean_rows();
        self.push(v, Op::MeanRows(x), &[x])
    }

    pub fn concat_rows(&mut self, parts: &[NodeId]) -> Result<NodeId> {
        if parts.is_empty() {
            return Err(shape_err("concat_rows", "nothing to concatenate"));
        }
        let tensors: Vec<&Tensor> = parts.iter().map(|&p| self.value(p)).collect();
        let v = Tensor::concat_rows(&tensors)?;
        Ok(self.push(v, Op::ConcatRows(parts.to_vec()), parts))
    }

    pub fn slice_rows(&mut self, x: NodeId, start: usize, end: usize) -> Result<NodeId> {
        let t = self.value(x);
        if start >= end || end > t.rows() {
            return Err(shape_err(
                "slice_rows",
                format!("[{start},{end}) of {}", t.rows()),
            ));
        }
        let v = t.slice_rows(start, end);
        Ok(self.push(v, Op::SliceRows(x, start), &[x]))
    }

    /// Probability of stopping first at each step, from a `(T, 2)` policy
    /// matrix with columns (wait, stop).
    ///
    /// `P[T] = Π_{t<T} w_t · s_T` where `w_t` is the wait probability, or 1
    /// when `forced[t]` is set, and `s_T` is the stop probability except at
    /// the final step where it is 1.
    pub fn stop_distribution(&mut self, pi: NodeId, forced: &[bool]) -> Result<NodeId> {
        let t = self.value(pi);
        let (steps, c) = t.dims2();
        if c != 2 || forced.len() != steps {
            return Err(shape_err(
                "stop_distribution",
                format!("policy {:?}, mask of {}", t.shape(), forced.len()),
            ));
        }
        let v = Tensor::vector(stop_probabilities(t, forced));
        Ok(self.push(v, Op::StopDistribution(pi, forced.into()), &[pi]))
    }

    /// Reverse pass from a scalar `loss`. Leaf gradients accumulate across
    /// calls until [`Graph::zero_grad`].
    pub fn backward(&mut self, loss: NodeId) -> Result<()> {
        let lv = self.value(loss);
        if lv.len() != 1 {
            return Err(Error::NonScalarLoss(lv.shape().to_vec()));
        }
        let mut grads: Vec<Option<Tensor>> = vec![None; loss.0 + 1];
        grads[loss.0] = Some(Tensor::full(lv.shape(), 1.0));
        for idx in (0..=loss.0).rev() {
            let Some(g) = grads[idx].take() else { continue };
            if !self.nodes[idx].requires_grad {
                continue;
            }
            if let Op::Leaf = self.nodes[idx].op {
                if let Some(acc) = &mut self.nodes[idx].grad {
                    acc.add_assign(&g);
                }
                continue;
            }
            for (input, contribution) in self.input_grads(idx, &g)? {
                if !self.nodes[input.0].requires_grad {
                    continue;
                }
                match &mut grads[input.0] {
                    Some(acc) => acc.add_assign(&contribution),
                    slot => *slot = Some(contribution),
                }
            }
        }
        Ok(())
    }

    /// Adds leaf gradients of parameter-bound nodes into `store`.
    pub fn accumulate_into(&self, store: &mut ParamStore) {
        for n in &self.nodes {
            if let (Some(pid), Some(g)) = (n.param, &n.grad) {
                store.accumulate_grad(pid, g);
            }
        }
    }

    fn input_grads(&self, idx: usize, g: &Tensor) -> Result<Vec<(NodeId, Tensor)>> {
        let node = &self.nodes[idx];
        let val = |id: NodeId| &self.nodes[id.0].value;
        let out = &node.value;
        Ok(match &node.op {
            Op::Leaf => Vec::new(),
            Op::MatMul(a, b) => vec![
                (*a, reshape_like(ops::matmul_nt(g, val(*b))?, val(*a))),
                (*b, reshape_like(ops::matmul_tn(val(*a), g)?, val(*b))),
            ],
            Op::MatMulNt(a, b) => vec![
                (*a, reshape_like(ops::matmul(g, val(*b))?, val(*a))),
                (*b, reshape_like(ops::matmul_tn(g, val(*a))?, val(*b))),
            ],
            Op::Add(a, b) => vec![
                (*a, reshape_like(g.clone(), val(*a))),
                (*b, reshape_like(g.clone(), val(*b))),
            ],
            Op::AddRow(a, row) => {
                let c = g.cols();
                let mut db = vec![0.0; c];
                for r in g.values().chunks(c) {
                    db.iter_mut().zip(r).for_each(|(d, x)| *d += x);
                }
                let db = Tensor::new(val(*row).shape().to_vec(), db)?;
                vec![(*a, g.clone()), (*row, db)]
            }
            Op::Mul(a, b) => {
                let ga = zip_map(g, val(*b), |x, y| x * y);
                let gb = zip_map(g, val(*a), |x, y| x * y);
                vec![
                    (*a, reshape_like(ga, val(*a))),
                    (*b, reshape_like(gb, val(*b))),
                ]
            }
            Op::Scale(a, s) => vec![(*a, g.map(|x| x * s))],
            Op::Relu(a) => vec![(
                *a,
                zip_map(g, val(*a), |d, x| if x > 0.0 { d } else { 0.0 }),
            )],
            Op::Softmax(a) => {
                let c = out.cols();
                let mut dx = vec![0.0; out.len()];
                for ((dr, yr), gr) in dx
                    .chunks_mut(c)
                    .zip(out.values().chunks(c))
                    .zip(g.values().chunks(c))
                {
                    let dot: f64 = yr.iter().zip(gr).map(|(y, d)| y * d).sum();
                    for j in 0..c {
                        dr[j] = yr[j] * (gr[j] - dot);
                    }
                }
                vec![(*a, Tensor::new(out.shape().to_vec(), dx)?)]
            }
            Op::LayerNorm {
                x,
                gain,
                bias,
                cache,
            } => {
                let (r, c) = out.dims2();
                let gv = val(*gain).values();
                let xhat = cache.normalized.values();
                let mut dx = vec![0.0; r * c];
                let mut dgain = vec![0.0; c];
                let mut dbias = vec![0.0; c];
                let n = c as f64;
                for i in 0..r {
                    let gr = &g.values()[i * c..(i + 1) * c];
                    let xr = &xhat[i * c..(i + 1) * c];
                    let mut sum_d = 0.0;
                    let mut sum_dx = 0.0;
                    for j in 0..c {
                        dgain[j] += gr[j] * xr[j];
                        dbias[j] += gr[j];
                        let d = gr[j] * gv[j];
                        sum_d += d;
                        sum_dx += d * xr[j];
                    }
                    let inv = cache.inv_std[i];
                    for j in 0..c {
                        let d = gr[j] * gv[j];
                        dx[i * c + j] = inv / n * (n * d - sum_d - xr[j] * sum_dx);
                    }
                }
                vec![
                    (*x, Tensor::new(val(*x).shape().to_vec(), dx)?),
                    (*gain, Tensor::new(val(*gain).shape().to_vec(), dgain)?),
                    (*bias, Tensor::new(val(*bias).shape().to_vec(), dbias)?),
                ]
            }
            Op::LnClamped(a) => vec![(
                *a,
                zip_map(g, val(*a), |d, x| if x >= PROB_FLOOR { d / x } else { 0.0 }),
            )],
            Op::Sum(a) => {
                let d = g.values()[0];
                vec![(*a, Tensor::full(val(*a).shape(), d))]
            }
            Op::GatherRows(table, ids) => {
                let t = val(*table);
                let c = t.cols();
                let mut dt = Tensor::zeros(t.shape());
                for (k, &i) in ids.iter().enumerate() {
                    let dst = &mut dt.values_mut()[i * c..(i + 1) * c];
                    dst.iter_mut().zip(g.row(k)).for_each(|(d, x)| *d += x);
                }
                vec![(*table, dt)]
            }
            Op::GatherCols(x, cols) => {
                let t = val(*x);
                let (r, c) = t.dims2();
                let mut dt = Tensor::zeros(t.shape());
                for i in 0..r {
                    for (k, &j) in cols.iter().enumerate() {
                        dt.values_mut()[i * c + j] += g.values()[i * cols.len() + k];
                    }
                }
                vec![(*x, dt)]
            }
            Op::Pick(x, flat) => {
                let mut dt = Tensor::zeros(val(*x).shape());
                for (k, &i) in flat.iter().enumerate() {
                    dt.values_mut()[i] += g.values()[k];
                }
                vec![(*x, dt)]
            }
            Op::NormalizeRows(x) => {
                let xin = val(*x);
                let c = xin.cols();
                let mut dx = vec![0.0; xin.len()];
                for ((dr, (xr, yr)), gr) in dx
                    .chunks_mut(c)
                    .zip(xin.values().chunks(c).zip(out.values().chunks(c)))
                    .zip(g.values().chunks(c))
                {
                    let s: f64 = xr.iter().sum();
                    if s == 0.0 {
                        continue;
                    }
                    let dot: f64 = yr.iter().zip(gr).map(|(y, d)| y * d).sum();
                    for j in 0..c {
                        dr[j] = (gr[j] - dot) / s;
                    }
                }
                vec![(*x, Tensor::new(xin.shape().to_vec(), dx)?)]
            }
            Op::MeanRows(x) => {
                let xin = val(*x);
                let r = xin.rows() as f64;
                let row: Vec<f64> = g.values().iter().map(|d| d / r).collect();
                let vals = row.repeat(xin.rows());
                vec![(*x, Tensor::new(xin.shape().to_vec(), vals)?)]
            }
            Op::ConcatRows(parts) => {
                let mut start = 0;
                let mut res = Vec::with_capacity(parts.len());
                for p in parts {
                    let rows = val(*p).rows();
                    let piece = g.slice_rows(start, start + rows);
                    res.push((*p, reshape_like(piece, val(*p))));
                    start += rows;
                }
                res
            }
            Op::SliceRows(x, start) => {
                let xin = val(*x);
                let c = xin.cols();
                let mut dt = Tensor::zeros(xin.shape());
                dt.values_mut()[start * c..start * c + g.len()].copy_from_slice(g.values());
                vec![(*x, dt)]
            }
            Op::StopDistribution(pi, forced) => {
                let p = val(*pi);
                let steps = p.rows();
                let wait = |t: usize| if forced[t] { 1.0 } else { p.get(t, 0) };
                let stop = |t: usize| {
                    if t + 1 == steps {
                        1.0
                    } else if forced[t] {
                        0.0
                    } else {
                        p.get(t, 1)
                    }
                };
                let mut dp = Tensor::zeros(p.shape());
                for big_t in 0..steps {
                    let d = g.values()[big_t];
                    if d == 0.0 {
                        continue;
                    }
                    let prefix: f64 = (0..big_t).map(wait).product();
                    if big_t + 1 < steps && !forced[big_t] {
                        dp.values_mut()[big_t * 2 + 1] += d * prefix;
                    }
                    let s = stop(big_t);
                    for t in (0..big_t).filter(|&t| !forced[t]) {
                        let others: f64 = (0..big_t).filter(|&u| u != t).map(wait).product();
                        dp.values_mut()[t * 2] += d * others * s;
                    }
                }
                vec![(*pi, dp)]
            }
        })
    }
}

/// Stopping-time distribution for a `(T, 2)` policy; see
/// [`Graph::stop_distribution`].
pub fn stop_probabilities(pi: &Tensor, forced: &[bool]) -> Vec<f64> {
    let steps = pi.rows();
    let mut out = Vec::with_capacity(steps);
    let mut prefix = 1.0;
    for (t, &f) in forced.iter().enumerate().take(steps) {
        let stop = if t + 1 == steps {
            1.0
        } else if f {
            0.0
        } else {
            pi.get(t, 1)
        };
        out.push(prefix * stop);
        prefix *= if f { 1.0 } else { pi.get(t, 0) };
    }
    out
}

fn zip_map(a: &Tensor, b: &Tensor, f: impl Fn(f64, f64) -> f64) -> Tensor {
    let vals = a
        .values()
        .iter()
        .zip(b.values())
        .map(|(x, y)| f(*x, *y))
        .collect();
    Tensor::new(a.shape().to_vec(), vals).expect("same length")
}

fn reshape_like(t: Tensor, like: &Tensor) -> Tensor {
    if t.shape() == like.shape() {
        t
    } else {
        Tensor::new(like.shape().to_vec(), t.into_values()).expect("same element count")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sum_gradient_is_all_ones() {
        let mut g = Graph::new();
        let x = g.variable(Tensor::matrix(2, 3, vec![0.1, -2.0, 3.0, 4.0, 5.0, 6.0]).unwrap());
        let s = g.sum(x);
        g.backward(s).unwrap();
        assert_eq!(g.grad(x).unwrap().values(), &[1.0; 6]);
    }

    #[test]
    fn square_gradient() {
        let mut g = Graph::new();
        let x = g.variable(Tensor::scalar(3.0));
        let y = g.mul(x, x).unwrap();
        g.backward(y).unwrap();
        assert_eq!(g.grad(x).unwrap().values(), &[6.0]);
    }

    #[test]
    fn backward_twice_accumulates() {
        let mut g = Graph::new();
        let x = g.variable(Tensor::scalar(3.0));
        let y = g.mul(x, x).unwrap();
        g.backward(y).unwrap();
        g.backward(y).unwrap();
        assert_eq!(g.grad(x).unwrap().values(), &[12.0]);
        g.zero_grad();
        g.backward(y).unwrap();
        assert_eq!(g.grad(x).unwrap().values(), &[6.0]);
    }

    #[test]
    fn non_scalar_loss_is_rejected() {
        let mut g = Graph::new();
        let x = g.variable(Tensor::vector(vec![1.0, 2.0]));
        assert!(matches!(g.backward(x), Err(Error::NonScalarLoss(_))));
    }

    #[test]
    fn constants_receive_no_gradient() {
        let mut g = Graph::new();
        let c = g.constant(Tensor::scalar(2.0));
        let x = g.variable(Tensor::scalar(5.0));
        let y = g.mul(c, x).unwrap();
        g.backward(y).unwrap();
        assert!(g.grad(c).is_none());
        assert_eq!(g.grad(x).unwrap().values(), &[2.0]);
    }

    #[test]
    fn stop_distribution_constant_half() {
        let pi = Tensor::from_rows(&[vec![0.5, 0.5], vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap();
        assert_eq!(stop_probabilities(&pi, &[false; 3]), vec![0.5, 0.25, 0.25]);
    }
}
