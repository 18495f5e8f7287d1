//! Reverse-mode automatic differentiation on a flat operation tape.
//!
//! A [`Tape`] records primitive operations eagerly: every builder method
//! computes the output value immediately and appends a node. Nodes are in
//! topological order by construction, so [`Tape::backward`] is a single
//! reverse sweep that accumulates one gradient buffer per node.
//!
//! Parameter nodes (inserted with [`Tape::param`]) are the gradient
//! targets; `backward` returns their gradients in registration order.
//! Graphs are rebuilt per mini-batch and dropped afterwards.

use alloc::vec;
use alloc::vec::Vec;

use crate::math;
use crate::tensor::{self, Tensor};

/// Inputs to `ln` (and probability denominators elsewhere) are clamped to
/// this floor so `-log` terms never produce infinities.
pub const LOG_EPS: f64 = 1e-12;

/// Handle to a node on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NodeId(u32);

impl NodeId {
    #[inline]
    fn idx(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug)]
enum Op {
    Leaf,
    MatMul(NodeId, NodeId),
    Add(NodeId, NodeId),
    Sub(NodeId, NodeId),
    Mul(NodeId, NodeId),
    /// Broadcast-add a `1×n` row vector to every row.
    AddRow(NodeId, NodeId),
    Scale(NodeId, f64),
    AddScalar(NodeId),
    Sigmoid(NodeId),
    Tanh(NodeId),
    Exp(NodeId),
    /// Natural log of the input clamped to `>= LOG_EPS`.
    Ln(NodeId),
    SoftmaxRows(NodeId),
    SumAll(NodeId),
    MeanAll(NodeId),
    FrobeniusNorm(NodeId),
    SliceRows(NodeId, usize),
    SliceCols(NodeId, usize, usize),
    ConcatRows(Vec<NodeId>),
    /// `out[r] = in[r, idx[r]]` as an `R×1` column.
    PickPerRow(NodeId, Vec<u32>),
    ClampMin(NodeId, f64),
    Reshape(NodeId),
}

struct Node {
    op: Op,
    value: Tensor,
    needs_grad: bool,
}

/// Eagerly evaluated computation tape.
pub struct Tape {
    nodes: Vec<Node>,
    params: Vec<NodeId>,
}

impl Tape {
    pub fn new() -> Self {
        Self { nodes: Vec::new(), params: Vec::new() }
    }

    fn push(&mut self, op: Op, value: Tensor, needs_grad: bool) -> NodeId {
        let id = NodeId(self.nodes.len() as u32);
        self.nodes.push(Node { op, value, needs_grad });
        id
    }

    #[inline]
    fn needs(&self, id: NodeId) -> bool {
        self.nodes[id.idx()].needs_grad
    }

    /// Value of a node.
    #[inline]
    pub fn value(&self, id: NodeId) -> &Tensor {
        &self.nodes[id.idx()].value
    }

    /// Scalar value of a `1×1` node.
    #[inline]
    pub fn scalar(&self, id: NodeId) -> f64 {
        self.value(id).scalar_value()
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// Insert a tensor that does not require a gradient.
    pub fn constant(&mut self, value: Tensor) -> NodeId {
        self.push(Op::Leaf, value, false)
    }

    /// Insert a gradient target. `backward` reports gradients in the order
    /// params were inserted.
    pub fn param(&mut self, value: Tensor) -> NodeId {
        let id = self.push(Op::Leaf, value, true);
        self.params.push(id);
        id
    }

    pub fn param_ids(&self) -> &[NodeId] {
        &self.params
    }

    pub fn matmul(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let value = tensor::matmul(self.value(a), self.value(b));
        let ng = self.needs(a) || self.needs(b);
        self.push(Op::MatMul(a, b), value, ng)
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let value = self.zip(a, b, "add", |x, y| x + y);
        let ng = self.needs(a) || self.needs(b);
        self.push(Op::Add(a, b), value, ng)
    }

    pub fn sub(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let value = self.zip(a, b, "sub", |x, y| x - y);
        let ng = self.needs(a) || self.needs(b);
        self.push(Op::Sub(a, b), value, ng)
    }

    pub fn mul(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let value = self.zip(a, b, "mul", |x, y| x * y);
        let ng = self.needs(a) || self.needs(b);
        self.push(Op::Mul(a, b), value, ng)
    }

    /// `a + row` where `row` is `1×n` and `a` is `m×n`.
    pub fn add_row(&mut self, a: NodeId, row: NodeId) -> NodeId {
        let (ar, ac) = self.value(a).shape();
        let (rr, rc) = self.value(row).shape();
        assert!(
            rr == 1 && rc == ac,
            "add_row: incompatible shapes {ar}x{ac} and {rr}x{rc}"
        );
        let mut value = self.value(a).clone();
        {
            let row_v = self.nodes[row.idx()].value.data();
            for out_row in value.data_mut().chunks_exact_mut(ac) {
                for (o, &r) in out_row.iter_mut().zip(row_v) {
                    *o += r;
                }
            }
        }
        let ng = self.needs(a) || self.needs(row);
        self.push(Op::AddRow(a, row), value, ng)
    }

    pub fn scale(&mut self, a: NodeId, k: f64) -> NodeId {
        let value = self.map(a, |x| k * x);
        let ng = self.needs(a);
        self.push(Op::Scale(a, k), value, ng)
    }

    pub fn add_scalar(&mut self, a: NodeId, k: f64) -> NodeId {
        let value = self.map(a, |x| x + k);
        let ng = self.needs(a);
        self.push(Op::AddScalar(a), value, ng)
    }

    pub fn sigmoid(&mut self, a: NodeId) -> NodeId {
        let value = self.map(a, math::sigmoid);
        let ng = self.needs(a);
        self.push(Op::Sigmoid(a), value, ng)
    }

    pub fn tanh(&mut self, a: NodeId) -> NodeId {
        let value = self.map(a, math::tanh);
        let ng = self.needs(a);
        self.push(Op::Tanh(a), value, ng)
    }

    pub fn exp(&mut self, a: NodeId) -> NodeId {
        let value = self.map(a, math::exp);
        let ng = self.needs(a);
        self.push(Op::Exp(a), value, ng)
    }

    /// `ln(max(x, LOG_EPS))` elementwise.
    pub fn ln(&mut self, a: NodeId) -> NodeId {
        let value = self.map(a, |x| math::ln(x.max(LOG_EPS)));
        let ng = self.needs(a);
        self.push(Op::Ln(a), value, ng)
    }

    pub fn softmax_rows(&mut self, a: NodeId) -> NodeId {
        let value = tensor::softmax_rows(self.value(a));
        let ng = self.needs(a);
        self.push(Op::SoftmaxRows(a), value, ng)
    }

    pub fn sum_all(&mut self, a: NodeId) -> NodeId {
        let s: f64 = self.value(a).data().iter().sum();
        let ng = self.needs(a);
        self.push(Op::SumAll(a), Tensor::scalar(s), ng)
    }

    pub fn mean_all(&mut self, a: NodeId) -> NodeId {
        let n = self.value(a).len();
        assert!(n > 0, "mean_all: empty tensor");
        let s: f64 = self.value(a).data().iter().sum();
        let ng = self.needs(a);
        self.push(Op::MeanAll(a), Tensor::scalar(s / n as f64), ng)
    }

    pub fn frobenius_norm(&mut self, a: NodeId) -> NodeId {
        let v = tensor::frobenius_norm(self.value(a));
        let ng = self.needs(a);
        self.push(Op::FrobeniusNorm(a), Tensor::scalar(v), ng)
    }

    pub fn slice_rows(&mut self, a: NodeId, r0: usize, r1: usize) -> NodeId {
        let (rows, cols) = self.value(a).shape();
        assert!(r0 < r1 && r1 <= rows, "slice_rows: [{r0},{r1}) out of {rows} rows");
        let data = self.value(a).data()[r0 * cols..r1 * cols].to_vec();
        let ng = self.needs(a);
        self.push(Op::SliceRows(a, r0), Tensor::new(r1 - r0, cols, data), ng)
    }

    pub fn slice_cols(&mut self, a: NodeId, c0: usize, c1: usize) -> NodeId {
        let (rows, cols) = self.value(a).shape();
        assert!(c0 < c1 && c1 <= cols, "slice_cols: [{c0},{c1}) out of {cols} cols");
        let w = c1 - c0;
        let mut data = Vec::with_capacity(rows * w);
        for row in self.value(a).data().chunks_exact(cols) {
            data.extend_from_slice(&row[c0..c1]);
        }
        let ng = self.needs(a);
        self.push(Op::SliceCols(a, c0, c1), Tensor::new(rows, w, data), ng)
    }

    /// Stack tensors with identical column counts on top of each other.
    pub fn concat_rows(&mut self, parts: &[NodeId]) -> NodeId {
        assert!(!parts.is_empty(), "concat_rows: no inputs");
        let cols = self.value(parts[0]).cols();
        let total: usize = parts.iter().map(|&p| self.value(p).rows()).sum();
        let mut data = Vec::with_capacity(total * cols);
        let mut ng = false;
        for &p in parts {
            assert_eq!(self.value(p).cols(), cols, "concat_rows: column mismatch");
            data.extend_from_slice(self.value(p).data());
            ng |= self.needs(p);
        }
        self.push(Op::ConcatRows(parts.to_vec()), Tensor::new(total, cols, data), ng)
    }

    /// Column vector `out[r] = a[r, indices[r]]`.
    pub fn pick_per_row(&mut self, a: NodeId, indices: &[u32]) -> NodeId {
        let (rows, cols) = self.value(a).shape();
        assert_eq!(rows, indices.len(), "pick_per_row: {} rows vs {} indices", rows, indices.len());
        let mut data = Vec::with_capacity(rows);
        for (row, &ix) in self.value(a).data().chunks_exact(cols).zip(indices) {
            assert!((ix as usize) < cols, "pick_per_row: index {ix} out of {cols} columns");
            data.push(row[ix as usize]);
        }
        let ng = self.needs(a);
        self.push(Op::PickPerRow(a, indices.to_vec()), Tensor::new(rows, 1, data), ng)
    }

    pub fn clamp_min(&mut self, a: NodeId, floor: f64) -> NodeId {
        let value = self.map(a, |x| x.max(floor));
        let ng = self.needs(a);
        self.push(Op::ClampMin(a, floor), value, ng)
    }

    pub fn reshape(&mut self, a: NodeId, rows: usize, cols: usize) -> NodeId {
        let value = self.value(a).clone().reshaped(rows, cols);
        let ng = self.needs(a);
        self.push(Op::Reshape(a), value, ng)
    }

    fn map(&self, a: NodeId, f: impl Fn(f64) -> f64) -> Tensor {
        let src = self.value(a);
        let (r, c) = src.shape();
        Tensor::new(r, c, src.data().iter().map(|&x| f(x)).collect())
    }

    fn zip(&self, a: NodeId, b: NodeId, name: &str, f: impl Fn(f64, f64) -> f64) -> Tensor {
        let (ta, tb) = (self.value(a), self.value(b));
        assert_eq!(
            ta.shape(),
            tb.shape(),
            "{name}: incompatible shapes {}x{} and {}x{}",
            ta.rows(),
            ta.cols(),
            tb.rows(),
            tb.cols()
        );
        let (r, c) = ta.shape();
        Tensor::new(
            r,
            c,
            ta.data().iter().zip(tb.data()).map(|(&x, &y)| f(x, y)).collect(),
        )
    }

    /// Reverse sweep from a scalar `root`; returns gradients for each
    /// parameter node in registration order. Panics if `root` is not `1×1`.
    pub fn backward(&self, root: NodeId) -> Vec<Tensor> {
        assert!(
            self.value(root).is_scalar(),
            "backward: root must be scalar, got {}x{}",
            self.value(root).rows(),
            self.value(root).cols()
        );
        let mut grads: Vec<Option<Tensor>> = vec![None; self.nodes.len()];
        if self.needs(root) {
            grads[root.idx()] = Some(Tensor::scalar(1.0));
        }

        for i in (0..=root.idx()).rev() {
            let Some(g) = grads[i].take() else { continue };
            let node = &self.nodes[i];
            match &node.op {
                Op::Leaf => {
                    // Park the gradient back for param collection below.
                    grads[i] = Some(g);
                }
                Op::MatMul(a, b) => {
                    if self.needs(*a) {
                        let ga = self.slot(&mut grads, *a);
                        tensor::matmul_nt_acc(ga, &g, &self.nodes[b.idx()].value);
                    }
                    if self.needs(*b) {
                        let gb = self.slot(&mut grads, *b);
                        tensor::matmul_tn_acc(gb, &self.nodes[a.idx()].value, &g);
                    }
                }
                Op::Add(a, b) => {
                    if self.needs(*a) {
                        acc(self.slot(&mut grads, *a), g.data(), 1.0);
                    }
                    if self.needs(*b) {
                        acc(self.slot(&mut grads, *b), g.data(), 1.0);
                    }
                }
                Op::Sub(a, b) => {
                    if self.needs(*a) {
                        acc(self.slot(&mut grads, *a), g.data(), 1.0);
                    }
                    if self.needs(*b) {
                        acc(self.slot(&mut grads, *b), g.data(), -1.0);
                    }
                }
                Op::Mul(a, b) => {
                    if self.needs(*a) {
                        let bv = self.nodes[b.idx()].value.data();
                        mul_acc(self.slot(&mut grads, *a), g.data(), bv);
                    }
                    if self.needs(*b) {
                        let av = self.nodes[a.idx()].value.data();
                        mul_acc(self.slot(&mut grads, *b), g.data(), av);
                    }
                }
                Op::AddRow(a, row) => {
                    if self.needs(*a) {
                        acc(self.slot(&mut grads, *a), g.data(), 1.0);
                    }
                    if self.needs(*row) {
                        let cols = g.cols();
                        let gr = self.slot(&mut grads, *row);
                        for chunk in g.data().chunks_exact(cols) {
                            for (o, &v) in gr.data_mut().iter_mut().zip(chunk) {
                                *o += v;
                            }
                        }
                    }
                }
                Op::Scale(a, k) => {
                    if self.needs(*a) {
                        acc(self.slot(&mut grads, *a), g.data(), *k);
                    }
                }
                Op::AddScalar(a) | Op::ClampMin(a, _) | Op::Ln(a) => {
                    // Handled jointly: derivative is 1, masked for clamp/ln.
                    if self.needs(*a) {
                        let ga = self.slot(&mut grads, *a);
                        match &node.op {
                            Op::AddScalar(_) => acc(ga, g.data(), 1.0),
                            Op::ClampMin(_, floor) => {
                                let xv = self.nodes[a.idx()].value.data();
                                for ((o, &gv), &x) in
                                    ga.data_mut().iter_mut().zip(g.data()).zip(xv)
                                {
                                    if x >= *floor {
                                        *o += gv;
                                    }
                                }
                            }
                            Op::Ln(_) => {
                                let xv = self.nodes[a.idx()].value.data();
                                for ((o, &gv), &x) in
                                    ga.data_mut().iter_mut().zip(g.data()).zip(xv)
                                {
                                    if x >= LOG_EPS {
                                        *o += gv / x;
                                    }
                                }
                            }
                            _ => unreachable!(),
                        }
                    }
                }
                Op::Sigmoid(a) => {
                    if self.needs(*a) {
                        let yv = node.value.data();
                        let ga = self.slot(&mut grads, *a);
                        for ((o, &gv), &y) in ga.data_mut().iter_mut().zip(g.data()).zip(yv) {
                            *o += gv * y * (1.0 - y);
                        }
                    }
                }
                Op::Tanh(a) => {
                    if self.needs(*a) {
                        let yv = node.value.data();
                        let ga = self.slot(&mut grads, *a);
                        for ((o, &gv), &y) in ga.data_mut().iter_mut().zip(g.data()).zip(yv) {
                            *o += gv * (1.0 - y * y);
                        }
                    }
                }
                Op::Exp(a) => {
                    if self.needs(*a) {
                        let yv = node.value.data();
                        mul_acc(self.slot(&mut grads, *a), g.data(), yv);
                    }
                }
                Op::SoftmaxRows(a) => {
                    if self.needs(*a) {
                        let cols = node.value.cols();
                        let yv = node.value.data();
                        let ga = self.slot(&mut grads, *a);
                        for ((orow, grow), yrow) in ga
                            .data_mut()
                            .chunks_exact_mut(cols)
                            .zip(g.data().chunks_exact(cols))
                            .zip(yv.chunks_exact(cols))
                        {
                            let inner = tensor::dot(grow, yrow);
                            for ((o, &gv), &y) in orow.iter_mut().zip(grow).zip(yrow) {
                                *o += y * (gv - inner);
                            }
                        }
                    }
                }
                Op::SumAll(a) => {
                    if self.needs(*a) {
                        let gv = g.scalar_value();
                        for o in self.slot(&mut grads, *a).data_mut() {
                            *o += gv;
                        }
                    }
                }
                Op::MeanAll(a) => {
                    if self.needs(*a) {
                        let n = self.nodes[a.idx()].value.len() as f64;
                        let gv = g.scalar_value() / n;
                        for o in self.slot(&mut grads, *a).data_mut() {
                            *o += gv;
                        }
                    }
                }
                Op::FrobeniusNorm(a) => {
                    if self.needs(*a) {
                        let norm = node.value.scalar_value().max(LOG_EPS);
                        let gv = g.scalar_value() / norm;
                        let xv = self.nodes[a.idx()].value.data();
                        let ga = self.slot(&mut grads, *a);
                        for (o, &x) in ga.data_mut().iter_mut().zip(xv) {
                            *o += gv * x;
                        }
                    }
                }
                Op::SliceRows(a, r0) => {
                    if self.needs(*a) {
                        let cols = node.value.cols();
                        let ga = self.slot(&mut grads, *a);
                        let base = r0 * cols;
                        for (o, &v) in ga.data_mut()[base..base + g.len()]
                            .iter_mut()
                            .zip(g.data())
                        {
                            *o += v;
                        }
                    }
                }
                Op::SliceCols(a, c0, c1) => {
                    if self.needs(*a) {
                        let w = c1 - c0;
                        let src_cols = self.nodes[a.idx()].value.cols();
                        let ga = self.slot(&mut grads, *a);
                        for (orow, grow) in ga
                            .data_mut()
                            .chunks_exact_mut(src_cols)
                            .zip(g.data().chunks_exact(w))
                        {
                            for (o, &v) in orow[*c0..*c1].iter_mut().zip(grow) {
                                *o += v;
                            }
                        }
                    }
                }
                Op::ConcatRows(parts) => {
                    let mut offset = 0usize;
                    let cols = node.value.cols();
                    for &p in parts {
                        let rows = self.nodes[p.idx()].value.rows();
                        if self.needs(p) {
                            let gp = self.slot(&mut grads, p);
                            let block = &g.data()[offset * cols..(offset + rows) * cols];
                            acc(gp, block, 1.0);
                        }
                        offset += rows;
                    }
                }
                Op::PickPerRow(a, indices) => {
                    if self.needs(*a) {
                        let ga = self.slot(&mut grads, *a);
                        for (r, (&ix, &gv)) in indices.iter().zip(g.data()).enumerate() {
                            *ga.at_mut(r, ix as usize) += gv;
                        }
                    }
                }
                Op::Reshape(a) => {
                    if self.needs(*a) {
                        acc(self.slot(&mut grads, *a), g.data(), 1.0);
                    }
                }
            }
        }

        self.params
            .iter()
            .map(|&p| {
                grads[p.idx()].take().unwrap_or_else(|| {
                    let (r, c) = self.value(p).shape();
                    Tensor::zeros(r, c)
                })
            })
            .collect()
    }

    /// Gradient buffer for `id`, created zeroed on first touch.
    fn slot<'g>(&self, grads: &'g mut [Option<Tensor>], id: NodeId) -> &'g mut Tensor {
        let slot = &mut grads[id.idx()];
        if slot.is_none() {
            let (r, c) = self.value(id).shape();
            *slot = Some(Tensor::zeros(r, c));
        }
        slot.as_mut().unwrap()
    }
}

impl Default for Tape {
    fn default() -> Self {
        Self::new()
    }
}

#[inline]
fn acc(out: &mut Tensor, src: &[f64], k: f64) {
    debug_assert_eq!(out.len(), src.len());
    for (o, &v) in out.data_mut().iter_mut().zip(src) {
        *o += k * v;
    }
}

#[inline]
fn mul_acc(out: &mut Tensor, g: &[f64], other: &[f64]) {
    debug_assert_eq!(out.len(), g.len());
    for ((o, &gv), &x) in out.data_mut().iter_mut().zip(g).zip(other) {
        *o += gv * x;
    }
}
