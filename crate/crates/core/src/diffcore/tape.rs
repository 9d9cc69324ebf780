//! Reverse-mode differentiation over a recorded sequence of vector operations.
//!
//! A [`Tape`] is filled during a forward pass through [`Var`] handles. Every
//! node stores its forward value, so [`Tape::backward`] only walks the record
//! once in reverse. Forward values are computed by the same routine used by
//! [`Tape::replay`], which is what makes replays bit-identical.

use std::cell::{Cell, Ref, RefCell};
use std::collections::HashMap;
use std::fmt;
use std::ops::{Add, Mul, Sub};

use super::tensor::Tensor;
use crate::{Error, Result};

pub type NodeId = usize;

/// Primitive operations understood by the tape.
#[derive(Debug, Clone, PartialEq)]
pub enum Op {
    Leaf,
    Add(NodeId, NodeId),
    Sub(NodeId, NodeId),
    /// Elementwise product.
    Mul(NodeId, NodeId),
    /// Multiply by a constant.
    Scale(NodeId, f64),
    /// Add a constant.
    Offset(NodeId, f64),
    /// Vector times a single-element node.
    ScaleBy(NodeId, NodeId),
    /// Vector divided by a single-element node.
    DivBy(NodeId, NodeId),
    /// Row-major matrix `[rows, cols]` times a vector of length `cols`.
    MatVec(NodeId, NodeId),
    Tanh(NodeId),
    Sigmoid(NodeId),
    Softplus(NodeId),
    /// `max(x, 0)` elementwise.
    ClampNonneg(NodeId),
    Sum(NodeId),
    Slice { src: NodeId, start: usize, len: usize },
    Concat(Vec<NodeId>),
}

impl Op {
    pub fn name(&self) -> &'static str {
        match self {
            Op::Leaf => "leaf",
            Op::Add(..) => "add",
            Op::Sub(..) => "sub",
            Op::Mul(..) => "multiply",
            Op::Scale(..) => "scale",
            Op::Offset(..) => "offset",
            Op::ScaleBy(..) => "scale_by",
            Op::DivBy(..) => "div_by",
            Op::MatVec(..) => "matvec",
            Op::Tanh(_) => "tanh",
            Op::Sigmoid(_) => "sigmoid",
            Op::Softplus(_) => "softplus",
            Op::ClampNonneg(_) => "clamp_nonneg",
            Op::Sum(_) => "sum",
            Op::Slice { .. } => "slice",
            Op::Concat(_) => "concat",
        }
    }

    fn inputs(&self) -> Vec<NodeId> {
        match self {
            Op::Leaf => vec![],
            Op::Add(a, b)
            | Op::Sub(a, b)
            | Op::Mul(a, b)
            | Op::ScaleBy(a, b)
            | Op::DivBy(a, b)
            | Op::MatVec(a, b) => vec![*a, *b],
            Op::Scale(a, _)
            | Op::Offset(a, _)
            | Op::Tanh(a)
            | Op::Sigmoid(a)
            | Op::Softplus(a)
            | Op::ClampNonneg(a)
            | Op::Sum(a) => vec![*a],
            Op::Slice { src, .. } => vec![*src],
            Op::Concat(parts) => parts.clone(),
        }
    }
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

/// Inverse of [`softplus`] for positive arguments.
pub fn softplus_inverse(y: f64) -> f64 {
    y + (-(-y).exp_m1()).ln()
}

#[derive(Debug, Clone)]
struct Node {
    op: Op,
    value: Vec<f64>,
    /// Column count for matrix leaves, zero for vectors.
    cols: usize,
}

/// The computation record.
///
/// Confined to one thread while it is being built; nothing here is `Sync`.
#[derive(Default)]
pub struct Tape {
    nodes: RefCell<Vec<Node>>,
    fault: Cell<Option<(NodeId, &'static str)>>,
}

impl fmt::Debug for Tape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Tape").field("nodes", &self.len()).finish()
    }
}

/// Handle to one node of a [`Tape`].
#[derive(Clone, Copy)]
pub struct Var<'t> {
    tape: &'t Tape,
    id: NodeId,
}

impl fmt::Debug for Var<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Var#{}({:?})", self.id, &*self.value())
    }
}

fn compute(op: &Op, nodes: &[Node]) -> Vec<f64> {
    let v = |id: NodeId| nodes[id].value.as_slice();
    let zip = |a: NodeId, b: NodeId, f: fn(f64, f64) -> f64| {
        v(a).iter().zip(v(b)).map(|(&x, &y)| f(x, y)).collect()
    };
    let map = |a: NodeId, f: &dyn Fn(f64) -> f64| v(a).iter().map(|&x| f(x)).collect();
    match op {
        Op::Leaf => unreachable!("leaves carry their own value"),
        Op::Add(a, b) => zip(*a, *b, |x, y| x + y),
        Op::Sub(a, b) => zip(*a, *b, |x, y| x - y),
        Op::Mul(a, b) => zip(*a, *b, |x, y| x * y),
        Op::Scale(a, c) => map(*a, &|x| x * c),
        Op::Offset(a, c) => map(*a, &|x| x + c),
        Op::ScaleBy(a, s) => {
            let s = v(*s)[0];
            map(*a, &|x| x * s)
        }
        Op::DivBy(a, s) => {
            let s = v(*s)[0];
            map(*a, &|x| x / s)
        }
        Op::MatVec(w, x) => {
            let x = v(*x);
            let cols = x.len();
            v(*w)
                .chunks_exact(cols)
                .map(|row| row.iter().zip(x).fold(0.0, |acc, (&a, &b)| acc + a * b))
                .collect()
        }
        Op::Tanh(a) => map(*a, &f64::tanh),
        Op::Sigmoid(a) => map(*a, &sigmoid),
        Op::Softplus(a) => map(*a, &softplus),
        Op::ClampNonneg(a) => map(*a, &|x| x.max(0.0)),
        Op::Sum(a) => vec![v(*a).iter().sum()],
        Op::Slice { src, start, len } => v(*src)[*start..*start + *len].to_vec(),
        Op::Concat(parts) => parts.iter().flat_map(|&p| v(p).iter().copied()).collect(),
    }
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.borrow().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Record an input tensor. Matrices keep their column count for `matvec`.
    pub fn leaf(&self, tensor: &Tensor) -> Var<'_> {
        let cols = match tensor.shape() {
            [_, c] => *c,
            _ => 0,
        };
        self.push_node(Node {
            op: Op::Leaf,
            value: tensor.data().to_vec(),
            cols,
        })
    }

    pub fn vector(&self, data: &[f64]) -> Var<'_> {
        self.push_node(Node {
            op: Op::Leaf,
            value: data.to_vec(),
            cols: 0,
        })
    }

    pub fn scalar(&self, value: f64) -> Var<'_> {
        self.vector(&[value])
    }

    /// Wrap an existing node id after checking it belongs to this tape.
    pub fn var(&self, id: NodeId) -> Result<Var<'_>> {
        if id < self.len() {
            Ok(Var { tape: self, id })
        } else {
            Err(Error::UnknownNode(id))
        }
    }

    fn push_node(&self, node: Node) -> Var<'_> {
        let mut nodes = self.nodes.borrow_mut();
        let id = nodes.len();
        if self.fault.get().is_none() && node.value.iter().any(|x| !x.is_finite()) {
            self.fault.set(Some((id, node.op.name())));
        }
        nodes.push(node);
        Var { tape: self, id }
    }

    fn push(&self, op: Op) -> Var<'_> {
        let value = compute(&op, &self.nodes.borrow());
        self.push_node(Node { op, value, cols: 0 })
    }

    /// Fails with the first operation that produced a non-finite value.
    pub fn check_finite(&self) -> Result<()> {
        match self.fault.get() {
            None => Ok(()),
            Some((node, op)) => Err(Error::numerical(
                op,
                format!("node {node} produced a non-finite value"),
            )),
        }
    }

    pub fn value(&self, id: NodeId) -> Result<Vec<f64>> {
        self.nodes
            .borrow()
            .get(id)
            .map(|n| n.value.clone())
            .ok_or(Error::UnknownNode(id))
    }

    /// True when every operation only reads nodes recorded before it.
    pub fn is_topologically_ordered(&self) -> bool {
        self.nodes
            .borrow()
            .iter()
            .enumerate()
            .all(|(id, n)| n.op.inputs().iter().all(|&i| i < id))
    }

    pub fn op(&self, id: NodeId) -> Result<Op> {
        self.nodes
            .borrow()
            .get(id)
            .map(|n| n.op.clone())
            .ok_or(Error::UnknownNode(id))
    }

    /// Recompute every node from the leaves, substituting `overrides` for the
    /// listed leaf values. Returns all node values in record order.
    pub fn replay(&self, overrides: &HashMap<NodeId, Vec<f64>>) -> Result<Vec<Vec<f64>>> {
        let recorded = self.nodes.borrow();
        let mut fresh: Vec<Node> = Vec::with_capacity(recorded.len());
        for (id, node) in recorded.iter().enumerate() {
            let value = match &node.op {
                Op::Leaf => match overrides.get(&id) {
                    Some(v) if v.len() != node.value.len() => {
                        return Err(Error::Dimension(format!(
                            "override for leaf {id} has {} values, expected {}",
                            v.len(),
                            node.value.len()
                        )))
                    }
                    Some(v) => v.clone(),
                    None => node.value.clone(),
                },
                op => compute(op, &fresh),
            };
            fresh.push(Node {
                op: node.op.clone(),
                value,
                cols: node.cols,
            });
        }
        Ok(fresh.into_iter().map(|n| n.value).collect())
    }

    /// Gradient of `seed · output` with respect to every node recorded up to `output`.
    pub fn backward(&self, output: NodeId, seed: &[f64]) -> Result<Gradients> {
        let nodes = self.nodes.borrow();
        let out = nodes.get(output).ok_or(Error::UnknownNode(output))?;
        if out.value.len() != seed.len() {
            return Err(Error::Dimension(format!(
                "seed has {} values, output node {output} has {}",
                seed.len(),
                out.value.len()
            )));
        }
        let mut grads: Vec<Option<Vec<f64>>> = vec![None; output + 1];
        grads[output] = Some(seed.to_vec());

        fn acc<'g>(grads: &'g mut [Option<Vec<f64>>], id: NodeId, len: usize) -> &'g mut [f64] {
            grads[id].get_or_insert_with(|| vec![0.0; len])
        }

        for id in (0..=output).rev() {
            let node = &nodes[id];
            if matches!(node.op, Op::Leaf) {
                continue;
            }
            let Some(g) = grads[id].take() else { continue };
            let val = |i: NodeId| nodes[i].value.as_slice();
            let n = |i: NodeId| nodes[i].value.len();
            match &node.op {
                Op::Leaf => unreachable!(),
                Op::Add(a, b) => {
                    for (d, gi) in acc(&mut grads, *a, n(*a)).iter_mut().zip(&g) {
                        *d += gi;
                    }
                    for (d, gi) in acc(&mut grads, *b, n(*b)).iter_mut().zip(&g) {
                        *d += gi;
                    }
                }
                Op::Sub(a, b) => {
                    for (d, gi) in acc(&mut grads, *a, n(*a)).iter_mut().zip(&g) {
                        *d += gi;
                    }
                    for (d, gi) in acc(&mut grads, *b, n(*b)).iter_mut().zip(&g) {
                        *d -= gi;
                    }
                }
                Op::Mul(a, b) => {
                    let (va, vb) = (val(*a), val(*b));
                    for ((d, gi), y) in acc(&mut grads, *a, va.len()).iter_mut().zip(&g).zip(vb) {
                        *d += gi * y;
                    }
                    for ((d, gi), x) in acc(&mut grads, *b, vb.len()).iter_mut().zip(&g).zip(va) {
                        *d += gi * x;
                    }
                }
                Op::Scale(a, c) => {
                    for (d, gi) in acc(&mut grads, *a, n(*a)).iter_mut().zip(&g) {
                        *d += gi * c;
                    }
                }
                Op::Offset(a, _) => {
                    for (d, gi) in acc(&mut grads, *a, n(*a)).iter_mut().zip(&g) {
                        *d += gi;
                    }
                }
                Op::ScaleBy(a, s) => {
                    let sv = val(*s)[0];
                    let dot: f64 = g.iter().zip(val(*a)).map(|(gi, x)| gi * x).sum();
                    for (d, gi) in acc(&mut grads, *a, n(*a)).iter_mut().zip(&g) {
                        *d += gi * sv;
                    }
                    acc(&mut grads, *s, 1)[0] += dot;
                }
                Op::DivBy(a, s) => {
                    let sv = val(*s)[0];
                    let dot: f64 = g.iter().zip(&node.value).map(|(gi, y)| gi * y).sum();
                    for (d, gi) in acc(&mut grads, *a, n(*a)).iter_mut().zip(&g) {
                        *d += gi / sv;
                    }
                    acc(&mut grads, *s, 1)[0] -= dot / sv;
                }
                Op::MatVec(w, x) => {
                    let xv = val(*x);
                    let wv = val(*w);
                    let cols = xv.len();
                    {
                        let gw = acc(&mut grads, *w, wv.len());
                        for (row, gi) in gw.chunks_exact_mut(cols).zip(&g) {
                            for (d, xj) in row.iter_mut().zip(xv) {
                                *d += gi * xj;
                            }
                        }
                    }
                    let gx = acc(&mut grads, *x, cols);
                    for (row, gi) in wv.chunks_exact(cols).zip(&g) {
                        for (d, wj) in gx.iter_mut().zip(row) {
                            *d += gi * wj;
                        }
                    }
                }
                Op::Tanh(a) => {
                    for ((d, gi), y) in acc(&mut grads, *a, n(*a)).iter_mut().zip(&g).zip(&node.value) {
                        *d += gi * (1.0 - y * y);
                    }
                }
                Op::Sigmoid(a) => {
                    for ((d, gi), y) in acc(&mut grads, *a, n(*a)).iter_mut().zip(&g).zip(&node.value) {
                        *d += gi * y * (1.0 - y);
                    }
                }
                Op::Softplus(a) => {
                    let xs = val(*a);
                    for ((d, gi), x) in acc(&mut grads, *a, xs.len()).iter_mut().zip(&g).zip(xs) {
                        *d += gi * sigmoid(*x);
                    }
                }
                Op::ClampNonneg(a) => {
                    let xs = val(*a);
                    for ((d, gi), x) in acc(&mut grads, *a, xs.len()).iter_mut().zip(&g).zip(xs) {
                        if *x > 0.0 {
                            *d += gi;
                        }
                    }
                }
                Op::Sum(a) => {
                    for d in acc(&mut grads, *a, n(*a)).iter_mut() {
                        *d += g[0];
                    }
                }
                Op::Slice { src, start, len } => {
                    let gs = acc(&mut grads, *src, n(*src));
                    for (d, gi) in gs[*start..*start + *len].iter_mut().zip(&g) {
                        *d += gi;
                    }
                }
                Op::Concat(parts) => {
                    let mut offset = 0;
                    for &p in parts {
                        let len = n(p);
                        for (d, gi) in acc(&mut grads, p, len).iter_mut().zip(&g[offset..offset + len]) {
                            *d += gi;
                        }
                        offset += len;
                    }
                }
            }
        }
        Ok(Gradients { grads })
    }
}

/// Accumulated derivatives from one reverse sweep.
#[derive(Debug, Clone)]
pub struct Gradients {
    grads: Vec<Option<Vec<f64>>>,
}

impl Gradients {
    /// Gradient for a node; zero when the node does not influence the output.
    pub fn wrt(&self, var: Var<'_>) -> Vec<f64> {
        self.wrt_id(var.id, var.len())
    }

    pub fn wrt_id(&self, id: NodeId, len: usize) -> Vec<f64> {
        self.grads
            .get(id)
            .and_then(|g| g.clone())
            .unwrap_or_else(|| vec![0.0; len])
    }
}

/// Reverse sweep from `output` seeded with `seed`.
pub fn reverse_grad(record: &Tape, output: NodeId, seed: &Tensor) -> Result<Gradients> {
    record.backward(output, seed.data())
}

impl<'t> Var<'t> {
    pub fn id(&self) -> NodeId {
        self.id
    }

    pub fn tape(&self) -> &'t Tape {
        self.tape
    }

    pub fn value(&self) -> Ref<'t, [f64]> {
        Ref::map(self.tape.nodes.borrow(), |n| n[self.id].value.as_slice())
    }

    pub fn to_vec(&self) -> Vec<f64> {
        self.value().to_vec()
    }

    /// First element, for single-value nodes.
    pub fn item(&self) -> f64 {
        self.value()[0]
    }

    pub fn len(&self) -> usize {
        self.tape.nodes.borrow()[self.id].value.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn cols(&self) -> usize {
        self.tape.nodes.borrow()[self.id].cols
    }

    /// Column count when this node is a matrix leaf.
    pub fn matrix_cols(&self) -> Option<usize> {
        Some(self.cols()).filter(|&c| c > 0)
    }

    fn same_len(&self, other: &Var<'t>, what: &str) {
        assert!(
            std::ptr::eq(self.tape, other.tape),
            "{what}: operands live on different tapes"
        );
        assert_eq!(self.len(), other.len(), "{what}: operand lengths differ");
    }

    pub fn scale(self, c: f64) -> Var<'t> {
        self.tape.push(Op::Scale(self.id, c))
    }

    pub fn offset(self, c: f64) -> Var<'t> {
        self.tape.push(Op::Offset(self.id, c))
    }

    /// Multiply every element by the single value held in `s`.
    pub fn scale_by(self, s: Var<'t>) -> Var<'t> {
        assert_eq!(s.len(), 1, "scale_by: scalar operand must have one element");
        self.tape.push(Op::ScaleBy(self.id, s.id))
    }

    pub fn div_by(self, s: Var<'t>) -> Var<'t> {
        assert_eq!(s.len(), 1, "div_by: scalar operand must have one element");
        self.tape.push(Op::DivBy(self.id, s.id))
    }

    /// `self` must be a matrix leaf whose column count equals `x.len()`.
    pub fn matvec(self, x: Var<'t>) -> Var<'t> {
        let cols = self.cols();
        assert!(
            cols > 0 && cols == x.len(),
            "matvec: matrix has {cols} columns, vector has {} entries",
            x.len()
        );
        self.tape.push(Op::MatVec(self.id, x.id))
    }

    pub fn tanh(self) -> Var<'t> {
        self.tape.push(Op::Tanh(self.id))
    }

    pub fn sigmoid(self) -> Var<'t> {
        self.tape.push(Op::Sigmoid(self.id))
    }

    pub fn softplus(self) -> Var<'t> {
        self.tape.push(Op::Softplus(self.id))
    }

    pub fn clamp_nonneg(self) -> Var<'t> {
        self.tape.push(Op::ClampNonneg(self.id))
    }

    pub fn sum(self) -> Var<'t> {
        self.tape.push(Op::Sum(self.id))
    }

    pub fn slice(self, start: usize, len: usize) -> Var<'t> {
        assert!(start + len <= self.len(), "slice out of range");
        self.tape.push(Op::Slice {
            src: self.id,
            start,
            len,
        })
    }

    pub fn at(self, index: usize) -> Var<'t> {
        self.slice(index, 1)
    }

    pub fn concat(parts: &[Var<'t>]) -> Var<'t> {
        assert!(!parts.is_empty(), "concat of nothing");
        let tape = parts[0].tape;
        tape.push(Op::Concat(parts.iter().map(|p| p.id).collect()))
    }
}

impl<'t> Add for Var<'t> {
    type Output = Var<'t>;
    fn add(self, rhs: Var<'t>) -> Var<'t> {
        self.same_len(&rhs, "add");
        self.tape.push(Op::Add(self.id, rhs.id))
    }
}

impl<'t> Sub for Var<'t> {
    type Output = Var<'t>;
    fn sub(self, rhs: Var<'t>) -> Var<'t> {
        self.same_len(&rhs, "sub");
        self.tape.push(Op::Sub(self.id, rhs.id))
    }
}

impl<'t> Mul for Var<'t> {
    type Output = Var<'t>;
    fn mul(self, rhs: Var<'t>) -> Var<'t> {
        self.same_len(&rhs, "multiply");
        self.tape.push(Op::Mul(self.id, rhs.id))
    }
}

/// Scalar arithmetic shared by plain `f64` code and recorded code.
///
/// Routines written against this trait perform the same floating-point
/// operations in the same order for both implementations, so a recorded
/// evaluation reproduces the plain one bit for bit.
pub trait Real: Copy + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> {
    fn value(&self) -> f64;
    fn scale(self, c: f64) -> Self;
    fn clamp_nonneg(self) -> Self;
    fn div(self, rhs: Self) -> Self;
}

impl Real for f64 {
    fn value(&self) -> f64 {
        *self
    }
    fn scale(self, c: f64) -> Self {
        self * c
    }
    fn clamp_nonneg(self) -> Self {
        self.max(0.0)
    }
    fn div(self, rhs: Self) -> Self {
        self / rhs
    }
}

impl Real for Var<'_> {
    fn value(&self) -> f64 {
        self.item()
    }
    fn scale(self, c: f64) -> Self {
        Var::scale(self, c)
    }
    fn clamp_nonneg(self) -> Self {
        Var::clamp_nonneg(self)
    }
    fn div(self, rhs: Self) -> Self {
        self.div_by(rhs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_map_gradient() {
        let tape = Tape::new();
        let x = tape.scalar(1.7);
        let y = x.scale(3.0);
        let g = reverse_grad(&tape, y.id(), &Tensor::scalar(1.0)).unwrap();
        assert_eq!(g.wrt(x), vec![3.0]);
    }

    #[test]
    fn sigmoid_slope_at_zero() {
        let tape = Tape::new();
        let x = tape.scalar(0.0);
        let y = x.sigmoid();
        assert_eq!(y.item(), 0.5);
        let g = tape.backward(y.id(), &[1.0]).unwrap();
        assert_eq!(g.wrt(x), vec![0.25]);
    }

    #[test]
    fn unreachable_leaf_gets_zero() {
        let tape = Tape::new();
        let x = tape.vector(&[1.0, 2.0]);
        let unused = tape.vector(&[5.0, 6.0, 7.0]);
        let y = (x * x).sum();
        let g = tape.backward(y.id(), &[1.0]).unwrap();
        assert_eq!(g.wrt(x), vec![2.0, 4.0]);
        assert_eq!(g.wrt(unused), vec![0.0; 3]);
    }

    #[test]
    fn lookup_and_seed_errors() {
        let tape = Tape::new();
        let x = tape.vector(&[1.0, 2.0]);
        assert!(matches!(tape.backward(9, &[1.0]), Err(Error::UnknownNode(9))));
        assert!(matches!(tape.var(9), Err(Error::UnknownNode(9))));
        assert!(matches!(
            tape.backward(x.id(), &[1.0]),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn non_finite_forward_value_names_the_op() {
        let tape = Tape::new();
        let x = tape.scalar(0.0);
        let one = tape.scalar(1.0);
        let _ = one.div_by(x);
        match tape.check_finite() {
            Err(Error::Numerical { op, .. }) => assert_eq!(op, "div_by"),
            other => panic!("expected numerical error, got {other:?}"),
        }
    }

    #[test]
    fn matvec_against_hand_arithmetic() {
        let tape = Tape::new();
        let w = tape.leaf(&Tensor::new(vec![2, 3], vec![1., 2., 3., 4., 5., 6.]).unwrap());
        let x = tape.vector(&[1.0, -1.0, 2.0]);
        let y = w.matvec(x);
        assert_eq!(y.to_vec(), vec![5.0, 11.0]);
        let g = tape.backward(y.id(), &[1.0, 10.0]).unwrap();
        assert_eq!(g.wrt(w), vec![1., -1., 2., 10., -10., 20.]);
        assert_eq!(g.wrt(x), vec![41.0, 52.0, 63.0]);
    }

    #[test]
    fn softplus_helpers() {
        assert!((softplus(0.0) - 2f64.ln()).abs() < 1e-15);
        assert!(softplus(-800.0) >= 0.0);
        assert!((softplus(800.0) - 800.0).abs() < 1e-12);
        let raw = softplus_inverse(0.1);
        assert!((softplus(raw) - 0.1).abs() < 1e-15);
    }

    #[test]
    fn replay_reproduces_forward_values() {
        let tape = Tape::new();
        let w = tape.leaf(&Tensor::new(vec![2, 2], vec![0.3, -0.7, 1.1, 0.2]).unwrap());
        let x = tape.vector(&[0.4, -0.9]);
        let h = w.matvec(x).tanh();
        let s = h.sum().softplus();
        let out = Var::concat(&[h, s]).div_by(s);
        assert!(tape.is_topologically_ordered());
        let replayed = tape.replay(&HashMap::new()).unwrap();
        for id in 0..tape.len() {
            let original = tape.value(id).unwrap();
            assert_eq!(
                original.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
                replayed[id].iter().map(|v| v.to_bits()).collect::<Vec<_>>()
            );
        }
        let mut over = HashMap::new();
        over.insert(x.id(), vec![0.0, 0.0]);
        let changed = tape.replay(&over).unwrap();
        assert_eq!(changed[out.id()][0], 0.0);
    }
}
