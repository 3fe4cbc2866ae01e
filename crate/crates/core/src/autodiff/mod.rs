// Copyright 2026 The jumpgrad Authors
// SPDX-License-Identifier: Apache-2.0

//! Eager reverse-mode automatic differentiation over complex values.
//!
//! Every op is evaluated when it is recorded, so the graph shape can depend
//! on run-time data such as random jump decisions. A tape is built once per
//! trajectory and differentiated with [`Tape::backward`].

mod check;
mod ops;
mod value;

pub use check::gradient_check;
pub use ops::{Op, OpKind};
pub use value::Value;

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::linalg::ComplexMatrix;

/// Index of a node on its tape.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(pub(crate) usize);

impl NodeId {
    pub fn index(self) -> usize {
        self.0
    }
}

/// One recorded operation.
#[derive(Clone, Debug)]
pub struct Node {
    pub op: Op,
    pub inputs: Vec<NodeId>,
    pub value: Value,
    /// True when some leaf reaches this node.
    pub needs_grad: bool,
}

/// Operand of [`Tape::record`]: an existing node or a constant.
#[derive(Clone, Debug)]
pub enum Input {
    Node(NodeId),
    Const(Value),
}

impl From<NodeId> for Input {
    fn from(id: NodeId) -> Self {
        Input::Node(id)
    }
}

impl From<f64> for Input {
    fn from(x: f64) -> Self {
        Input::Const(x.into())
    }
}

impl From<C64> for Input {
    fn from(z: C64) -> Self {
        Input::Const(z.into())
    }
}

impl From<ComplexMatrix> for Input {
    fn from(m: ComplexMatrix) -> Self {
        Input::Const(m.into())
    }
}

/// Append-only computational graph in topological order.
#[derive(Clone, Debug, Default)]
pub struct Tape {
    nodes: Vec<Node>,
    leaves: Vec<NodeId>,
}

/// Adjoints of every leaf after a backward pass.
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients {
    leaves: Vec<NodeId>,
    adjoints: Vec<Value>,
}

impl Gradients {
    pub fn get(&self, leaf: NodeId) -> Option<&Value> {
        self.leaves.iter().position(|&l| l == leaf).map(|k| &self.adjoints[k])
    }

    /// Adjoint of a scalar leaf; the real part for real leaves.
    pub fn scalar(&self, leaf: NodeId) -> C64 {
        self.get(leaf).and_then(Value::as_scalar).unwrap_or_default()
    }

    /// `∂C/∂x` for a real scalar leaf `x`.
    pub fn real(&self, leaf: NodeId) -> f64 {
        self.scalar(leaf).re
    }

    pub fn iter(&self) -> impl Iterator<Item = (NodeId, &Value)> {
        self.leaves.iter().copied().zip(self.adjoints.iter())
    }
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id.0]
    }

    pub fn value(&self, id: NodeId) -> &Value {
        &self.nodes[id.0].value
    }

    pub fn scalar(&self, id: NodeId) -> C64 {
        self.value(id).as_scalar().expect("scalar node")
    }

    pub fn matrix(&self, id: NodeId) -> &ComplexMatrix {
        self.value(id).as_matrix().expect("matrix node")
    }

    pub fn leaves(&self) -> &[NodeId] {
        &self.leaves
    }

    fn push(&mut self, node: Node) -> NodeId {
        self.nodes.push(node);
        NodeId(self.nodes.len() - 1)
    }

    pub fn constant(&mut self, v: impl Into<Value>) -> NodeId {
        self.push(Node { op: Op::Const, inputs: Vec::new(), value: v.into(), needs_grad: false })
    }

    /// A real differentiable scalar.
    pub fn leaf_real(&mut self, x: f64) -> NodeId {
        self.leaf(Value::from(x), true)
    }

    /// A complex differentiable value; its adjoint carries both the real and
    /// imaginary partial derivatives.
    pub fn leaf_complex(&mut self, v: impl Into<Value>) -> NodeId {
        self.leaf(v.into(), false)
    }

    fn leaf(&mut self, value: Value, real: bool) -> NodeId {
        let id = self.push(Node { op: Op::Leaf { real }, inputs: Vec::new(), value, needs_grad: true });
        self.leaves.push(id);
        id
    }

    fn resolve(&mut self, input: Input) -> Result<NodeId> {
        match input {
            Input::Node(id) if id.0 < self.nodes.len() => Ok(id),
            Input::Node(id) => Err(Error::IndexOutOfRange { index: id.0, len: self.nodes.len() }),
            Input::Const(v) => Ok(self.constant(v)),
        }
    }

    /// Record an op by kind. `SCALE` takes a constant scalar followed by the
    /// operand; parametrized slicing ops need [`Tape::record_op`].
    pub fn record(&mut self, kind: OpKind, inputs: &[Input]) -> Result<NodeId> {
        let op = match kind {
            OpKind::Const | OpKind::Leaf => {
                return Err(Error::InvalidParameter(format!("{kind} is created with constant()/leaf_*()")))
            }
            OpKind::Entry | OpKind::Column => {
                return Err(Error::InvalidParameter(format!("{kind} needs indices; use record_op")))
            }
            OpKind::Scale => {
                let c = match inputs.first() {
                    Some(Input::Const(Value::Scalar(c))) if inputs.len() == 2 => *c,
                    _ => {
                        return Err(Error::ShapeMismatch {
                            op: "scale",
                            detail: "expected (constant scalar, operand)".into(),
                        })
                    }
                };
                return self.record_op(Op::Scale(c), &inputs[1..]);
            }
            OpKind::Add => Op::Add,
            OpKind::Sub => Op::Sub,
            OpKind::Mul => Op::Mul,
            OpKind::Div => Op::Div,
            OpKind::Exp => Op::Exp,
            OpKind::MatMul => Op::MatMul,
            OpKind::Trace => Op::Trace,
            OpKind::Transpose => Op::Transpose,
            OpKind::Conjugate => Op::Conjugate,
            OpKind::Adjoint => Op::Adjoint,
            OpKind::Inner => Op::Inner,
            OpKind::AbsSq => Op::AbsSq,
            OpKind::Norm => Op::Norm,
            OpKind::Real => Op::Real,
            OpKind::Imag => Op::Imag,
            OpKind::Sum => Op::Sum,
            OpKind::Stack => Op::Stack,
        };
        self.record_op(op, inputs)
    }

    /// Record an op with explicit parameters, evaluating it immediately.
    pub fn record_op(&mut self, op: Op, inputs: &[Input]) -> Result<NodeId> {
        if matches!(op, Op::Const | Op::Leaf { .. }) {
            return Err(Error::InvalidParameter("use constant()/leaf_*() for leaves".into()));
        }
        let ids = inputs.iter().cloned().map(|i| self.resolve(i)).collect::<Result<Vec<_>>>()?;
        let value = {
            let vals: Vec<&Value> = ids.iter().map(|id| &self.nodes[id.0].value).collect();
            ops::forward(&op, &vals)?
        };
        let needs_grad = ids.iter().any(|id| self.nodes[id.0].needs_grad);
        Ok(self.push(Node { op, inputs: ids, value, needs_grad }))
    }

    fn op2(&mut self, op: Op, a: impl Into<Input>, b: impl Into<Input>) -> Result<NodeId> {
        self.record_op(op, &[a.into(), b.into()])
    }

    fn op1(&mut self, op: Op, a: impl Into<Input>) -> Result<NodeId> {
        self.record_op(op, &[a.into()])
    }

    pub fn add(&mut self, a: impl Into<Input>, b: impl Into<Input>) -> Result<NodeId> {
        self.op2(Op::Add, a, b)
    }

    pub fn sub(&mut self, a: impl Into<Input>, b: impl Into<Input>) -> Result<NodeId> {
        self.op2(Op::Sub, a, b)
    }

    pub fn mul(&mut self, a: impl Into<Input>, b: impl Into<Input>) -> Result<NodeId> {
        self.op2(Op::Mul, a, b)
    }

    pub fn div(&mut self, a: impl Into<Input>, b: impl Into<Input>) -> Result<NodeId> {
        self.op2(Op::Div, a, b)
    }

    pub fn scale(&mut self, c: C64, a: impl Into<Input>) -> Result<NodeId> {
        self.op1(Op::Scale(c), a)
    }

    pub fn exp(&mut self, a: impl Into<Input>) -> Result<NodeId> {
        self.op1(Op::Exp, a)
    }

    pub fn matmul(&mut self, a: impl Into<Input>, b: impl Into<Input>) -> Result<NodeId> {
        self.op2(Op::MatMul, a, b)
    }

    pub fn trace(&mut self, a: impl Into<Input>) -> Result<NodeId> {
        self.op1(Op::Trace, a)
    }

    pub fn transpose(&mut self, a: impl Into<Input>) -> Result<NodeId> {
        self.op1(Op::Transpose, a)
    }

    pub fn conjugate(&mut self, a: impl Into<Input>) -> Result<NodeId> {
        self.op1(Op::Conjugate, a)
    }

    pub fn adjoint(&mut self, a: impl Into<Input>) -> Result<NodeId> {
        self.op1(Op::Adjoint, a)
    }

    pub fn inner(&mut self, u: impl Into<Input>, v: impl Into<Input>) -> Result<NodeId> {
        self.op2(Op::Inner, u, v)
    }

    pub fn abs_sq(&mut self, a: impl Into<Input>) -> Result<NodeId> {
        self.op1(Op::AbsSq, a)
    }

    pub fn norm(&mut self, a: impl Into<Input>) -> Result<NodeId> {
        self.op1(Op::Norm, a)
    }

    pub fn real(&mut self, a: impl Into<Input>) -> Result<NodeId> {
        self.op1(Op::Real, a)
    }

    pub fn imag(&mut self, a: impl Into<Input>) -> Result<NodeId> {
        self.op1(Op::Imag, a)
    }

    pub fn sum(&mut self, a: impl Into<Input>) -> Result<NodeId> {
        self.op1(Op::Sum, a)
    }

    pub fn entry(&mut self, a: impl Into<Input>, i: usize, j: usize) -> Result<NodeId> {
        self.op1(Op::Entry(i, j), a)
    }

    pub fn column(&mut self, a: impl Into<Input>, j: usize) -> Result<NodeId> {
        self.op1(Op::Column(j), a)
    }

    pub fn stack(&mut self, items: &[NodeId]) -> Result<NodeId> {
        let inputs: Vec<Input> = items.iter().map(|&i| Input::Node(i)).collect();
        self.record_op(Op::Stack, &inputs)
    }

    /// Sum of several nodes, folded left to right.
    pub fn add_all(&mut self, items: &[NodeId]) -> Result<NodeId> {
        let (&first, rest) = items.split_first().ok_or(Error::Empty("add_all inputs"))?;
        rest.iter().try_fold(first, |acc, &x| self.add(acc, x))
    }

    /// `|⟨u|v⟩|²` as a real scalar node.
    pub fn overlap_sq(&mut self, u: impl Into<Input>, v: impl Into<Input>) -> Result<NodeId> {
        let z = self.inner(u, v)?;
        self.abs_sq(z)
    }

    /// `x / ‖x‖`.
    pub fn normalize(&mut self, x: NodeId) -> Result<NodeId> {
        let n = self.norm(x)?;
        self.div(x, n)
    }

    /// Reverse pass from a real scalar cost node.
    pub fn backward(&self, cost: NodeId) -> Result<Gradients> {
        let v = self.value(cost);
        let z = v.as_scalar().ok_or(Error::NonScalarCost)?;
        if z.im.abs() > 1e-12 * (1.0 + z.re.abs()) {
            return Err(Error::NonScalarCost);
        }
        self.backward_seeded(&[(cost, vec![C64::new(1.0, 0.0)])])
    }

    /// Reverse pass from arbitrary seed adjoints (row-major, shaped like the
    /// seeded node values). Used when a tape is one stage of a larger real
    /// cost whose outer derivatives are already known.
    pub fn backward_seeded(&self, seeds: &[(NodeId, Vec<C64>)]) -> Result<Gradients> {
        let mut adj: Vec<Option<Vec<C64>>> = vec![None; self.nodes.len()];
        let mut last = 0;
        for (id, seed) in seeds {
            let node = self.nodes.get(id.0).ok_or(Error::IndexOutOfRange { index: id.0, len: self.nodes.len() })?;
            if seed.len() != node.value.len() {
                return Err(Error::ShapeMismatch {
                    op: "backward",
                    detail: format!("seed of length {} for value of shape {:?}", seed.len(), node.value.shape()),
                });
            }
            let slot = adj[id.0].get_or_insert_with(|| vec![C64::new(0.0, 0.0); seed.len()]);
            slot.iter_mut().zip(seed).for_each(|(a, s)| *a += s);
            last = last.max(id.0);
        }
        for idx in (0..=last.min(self.nodes.len().saturating_sub(1))).rev() {
            let node = &self.nodes[idx];
            if !node.needs_grad || node.inputs.is_empty() {
                continue;
            }
            let Some(ybar) = adj[idx].take() else { continue };
            let mut bufs: Vec<Option<Vec<C64>>> = node
                .inputs
                .iter()
                .map(|id| {
                    let n = &self.nodes[id.0];
                    n.needs_grad.then(|| adj[id.0].take().unwrap_or_else(|| vec![C64::new(0.0, 0.0); n.value.len()]))
                })
                .collect();
            // Repeated inputs (x*x) must share one buffer.
            let mut dup_fix: Vec<(usize, usize)> = Vec::new();
            for a in 0..node.inputs.len() {
                for b in 0..a {
                    if node.inputs[a] == node.inputs[b] && bufs[b].is_some() {
                        dup_fix.push((a, b));
                        bufs[a] = Some(vec![C64::new(0.0, 0.0); self.nodes[node.inputs[a].0].value.len()]);
                        break;
                    }
                }
            }
            let vals: Vec<&Value> = node.inputs.iter().map(|id| &self.nodes[id.0].value).collect();
            {
                let mut refs: Vec<Option<&mut Vec<C64>>> = bufs.iter_mut().map(|b| b.as_mut()).collect();
                ops::backward(&node.op, &vals, &node.value, &ybar, &mut refs);
            }
            for &(a, b) in dup_fix.iter().rev() {
                let extra = bufs[a].take().unwrap();
                let target = bufs[b].as_mut().unwrap();
                target.iter_mut().zip(extra).for_each(|(t, e)| *t += e);
            }
            for (k, buf) in bufs.into_iter().enumerate() {
                if let Some(buf) = buf {
                    adj[node.inputs[k].0] = Some(buf);
                }
            }
        }
        let adjoints = self
            .leaves
            .iter()
            .map(|&id| {
                let node = &self.nodes[id.0];
                let real = matches!(node.op, Op::Leaf { real: true });
                let mut data = adj[id.0].take().unwrap_or_else(|| vec![C64::new(0.0, 0.0); node.value.len()]);
                if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                    return Err(Error::GradientBlowup);
                }
                if real {
                    data.iter_mut().for_each(|z| z.im = 0.0);
                }
                Ok(node.value.with_entries(data))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Gradients { leaves: self.leaves.clone(), adjoints })
    }

    /// Re-evaluate every node with some leaf values replaced, keeping the
    /// recorded graph shape. Returns the new value of `target`.
    pub fn replay(&self, overrides: &[(NodeId, Value)], target: NodeId) -> Result<Value> {
        let mut vals: Vec<Option<Value>> = vec![None; target.0 + 1];
        for (idx, node) in self.nodes.iter().enumerate().take(target.0 + 1) {
            let v = if let Some((_, v)) = overrides.iter().find(|(id, _)| id.0 == idx) {
                v.clone()
            } else if node.inputs.is_empty() || !node.needs_grad {
                node.value.clone()
            } else {
                let ins: Vec<&Value> =
                    node.inputs.iter().map(|id| vals[id.0].as_ref().expect("topological order")).collect();
                ops::forward(&node.op, &ins)?
            };
            vals[idx] = Some(v);
        }
        Ok(vals[target.0].take().expect("target evaluated"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn record_add_and_exp() {
        let mut t = Tape::new();
        let n = t.record(OpKind::Add, &[2.0.into(), 3.0.into()]).unwrap();
        assert_eq!(t.scalar(n), C64::new(5.0, 0.0));
        let e = t.record(OpKind::Exp, &[1.0.into()]).unwrap();
        assert!((t.scalar(e).re - std::f64::consts::E).abs() < 1e-15);
    }

    #[test]
    fn matmul_identity() {
        let mut t = Tape::new();
        let m = ComplexMatrix::from_fn(3, 3, |i, j| C64::new(i as f64, j as f64));
        let n = t.record(OpKind::MatMul, &[ComplexMatrix::identity(3).into(), m.clone().into()]).unwrap();
        assert_eq!(t.matrix(n).to_row_major(), m.to_row_major());
    }

    #[test]
    fn unknown_op_names() {
        assert_eq!("matmul".parse::<OpKind>().unwrap(), OpKind::MatMul);
        assert_eq!("DET".parse::<OpKind>(), Err(Error::UnknownOp("DET".into())));
    }

    #[test]
    fn division_by_zero_is_singular() {
        let mut t = Tape::new();
        let x = t.leaf_real(1.0);
        assert!(matches!(t.div(x, 0.0), Err(Error::SingularOp(_))));
    }

    #[test]
    fn square_plus_exp_gradient() {
        // C = 2 x1² + exp(x1 x2) at (1, 0)
        let mut t = Tape::new();
        let x1 = t.leaf_real(1.0);
        let x2 = t.leaf_real(0.0);
        let sq = t.mul(x1, x1).unwrap();
        let a = t.scale(C64::new(2.0, 0.0), sq).unwrap();
        let p = t.mul(x1, x2).unwrap();
        let e = t.exp(p).unwrap();
        let c = t.add(a, e).unwrap();
        let g = t.backward(c).unwrap();
        assert!((g.real(x1) - 4.0).abs() < 1e-15);
        assert!((g.real(x2) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn identity_graph_gradient_is_one() {
        let mut t = Tape::new();
        let x = t.leaf_real(0.3);
        assert_eq!(t.backward(x).unwrap().real(x), 1.0);
    }

    #[test]
    fn non_scalar_cost_rejected() {
        let mut t = Tape::new();
        let x = t.leaf_complex(ComplexMatrix::identity(2));
        assert_eq!(t.backward(x).unwrap_err(), Error::NonScalarCost);
        let z = t.leaf_complex(C64::new(1.0, 1.0));
        assert_eq!(t.backward(z).unwrap_err(), Error::NonScalarCost);
    }

    #[test]
    fn unreachable_leaf_gets_zero() {
        let mut t = Tape::new();
        let x = t.leaf_real(2.0);
        let y = t.leaf_real(5.0);
        let c = t.mul(x, 3.0).unwrap();
        let g = t.backward(c).unwrap();
        assert_eq!(g.real(x), 3.0);
        assert_eq!(g.real(y), 0.0);
    }

    #[test]
    fn replay_reevaluates_with_override() {
        let mut t = Tape::new();
        let x = t.leaf_real(2.0);
        let sq = t.mul(x, x).unwrap();
        let v = t.replay(&[(x, 3.0.into())], sq).unwrap();
        assert_eq!(v.as_scalar().unwrap().re, 9.0);
        // Recorded values untouched.
        assert_eq!(t.scalar(sq).re, 4.0);
    }
}
