// Copyright 2026 The jumpgrad Authors
// SPDX-License-Identifier: Apache-2.0

//! Forward evaluation and adjoint rules for every registered op.
//!
//! Adjoints follow the convention `x̄ = ∂L/∂Re x + i ∂L/∂Im x` for a real
//! loss `L`. For a holomorphic `y = f(x)` this gives `x̄ += conj(f'(x)) ȳ`.
//! For `Y = A B` the rule is `Ā += Ȳ B†`, `B̄ += A† Ȳ`; the bare products
//! `Ȳ B` and `A Ȳ` sometimes quoted for this op fail finite-difference
//! checks as soon as the factors are not square or not Hermitian.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64 as C64;

use super::Value;
use crate::error::{Error, Result};
use crate::linalg::ComplexMatrix;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// Names of the registered operations.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum OpKind {
    Const,
    Leaf,
    Add,
    Sub,
    Mul,
    Div,
    Scale,
    Exp,
    MatMul,
    Trace,
    Transpose,
    Conjugate,
    Adjoint,
    Inner,
    AbsSq,
    Norm,
    Real,
    Imag,
    Sum,
    Entry,
    Column,
    Stack,
}

impl OpKind {
    pub const ALL: [OpKind; 22] = [
        OpKind::Const,
        OpKind::Leaf,
        OpKind::Add,
        OpKind::Sub,
        OpKind::Mul,
        OpKind::Div,
        OpKind::Scale,
        OpKind::Exp,
        OpKind::MatMul,
        OpKind::Trace,
        OpKind::Transpose,
        OpKind::Conjugate,
        OpKind::Adjoint,
        OpKind::Inner,
        OpKind::AbsSq,
        OpKind::Norm,
        OpKind::Real,
        OpKind::Imag,
        OpKind::Sum,
        OpKind::Entry,
        OpKind::Column,
        OpKind::Stack,
    ];

    pub fn name(self) -> &'static str {
        match self {
            OpKind::Const => "CONST",
            OpKind::Leaf => "LEAF",
            OpKind::Add => "ADD",
            OpKind::Sub => "SUB",
            OpKind::Mul => "MUL",
            OpKind::Div => "DIV",
            OpKind::Scale => "SCALE",
            OpKind::Exp => "EXP",
            OpKind::MatMul => "MATMUL",
            OpKind::Trace => "TRACE",
            OpKind::Transpose => "TRANSPOSE",
            OpKind::Conjugate => "CONJUGATE",
            OpKind::Adjoint => "ADJOINT",
            OpKind::Inner => "INNER",
            OpKind::AbsSq => "ABS_SQ",
            OpKind::Norm => "NORM",
            OpKind::Real => "REAL",
            OpKind::Imag => "IMAG",
            OpKind::Sum => "SUM",
            OpKind::Entry => "ENTRY",
            OpKind::Column => "COLUMN",
            OpKind::Stack => "STACK",
        }
    }
}

impl fmt::Display for OpKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for OpKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let upper = s.to_ascii_uppercase();
        OpKind::ALL.iter().copied().find(|k| k.name() == upper).ok_or_else(|| Error::UnknownOp(s.to_string()))
    }
}

/// A recorded operation together with its static parameters.
#[derive(Clone, Debug, PartialEq)]
pub enum Op {
    Const,
    /// Differentiable input. Real leaves report `Re` of their adjoint.
    Leaf {
        real: bool,
    },
    Add,
    Sub,
    /// Scalar·scalar or scalar·matrix (either order).
    Mul,
    /// Scalar/scalar or matrix/scalar.
    Div,
    /// Multiplication by a fixed constant.
    Scale(C64),
    Exp,
    MatMul,
    Trace,
    Transpose,
    Conjugate,
    Adjoint,
    /// `Σ_i conj(u_i) v_i` over all entries of two equally shaped values.
    Inner,
    /// Elementwise `|x|²`.
    AbsSq,
    /// Frobenius (2-) norm.
    Norm,
    Real,
    Imag,
    Sum,
    Entry(usize, usize),
    Column(usize),
    /// Scalars into an n×1 column, or n×1 columns into an n×m matrix.
    Stack,
}

impl Op {
    pub fn kind(&self) -> OpKind {
        match self {
            Op::Const => OpKind::Const,
            Op::Leaf { .. } => OpKind::Leaf,
            Op::Add => OpKind::Add,
            Op::Sub => OpKind::Sub,
            Op::Mul => OpKind::Mul,
            Op::Div => OpKind::Div,
            Op::Scale(_) => OpKind::Scale,
            Op::Exp => OpKind::Exp,
            Op::MatMul => OpKind::MatMul,
            Op::Trace => OpKind::Trace,
            Op::Transpose => OpKind::Transpose,
            Op::Conjugate => OpKind::Conjugate,
            Op::Adjoint => OpKind::Adjoint,
            Op::Inner => OpKind::Inner,
            Op::AbsSq => OpKind::AbsSq,
            Op::Norm => OpKind::Norm,
            Op::Real => OpKind::Real,
            Op::Imag => OpKind::Imag,
            Op::Sum => OpKind::Sum,
            Op::Entry(..) => OpKind::Entry,
            Op::Column(_) => OpKind::Column,
            Op::Stack => OpKind::Stack,
        }
    }
}

fn shape_err(op: &'static str, detail: String) -> Error {
    Error::ShapeMismatch { op, detail }
}

fn arity(op: &'static str, inputs: &[&Value], n: usize) -> Result<()> {
    if inputs.len() != n {
        return Err(shape_err(op, format!("expected {n} inputs, got {}", inputs.len())));
    }
    Ok(())
}

fn map_value(v: &Value, f: impl Fn(C64) -> C64) -> Value {
    match v {
        Value::Scalar(z) => Value::Scalar(f(*z)),
        Value::Matrix(m) => {
            let (r, c) = m.shape();
            let data = m.to_row_major().into_iter().map(f).collect();
            Value::Matrix(ComplexMatrix::from_row_major(r, c, data).expect("finite"))
        }
    }
}

fn check_finite(v: Value, op: &'static str) -> Result<Value> {
    let ok = match &v {
        Value::Scalar(z) => z.re.is_finite() && z.im.is_finite(),
        Value::Matrix(m) => m.entries().all(|(_, _, z)| z.re.is_finite() && z.im.is_finite()),
    };
    if ok {
        Ok(v)
    } else {
        Err(Error::NonFinite(op))
    }
}

/// Evaluate `op` on already computed input values.
pub(crate) fn forward(op: &Op, inputs: &[&Value]) -> Result<Value> {
    use Value::{Matrix as M, Scalar as S};
    match op {
        Op::Const | Op::Leaf { .. } => Err(shape_err("leaf", "leaves have no inputs".into())),
        Op::Add | Op::Sub => {
            arity("add", inputs, 2)?;
            let sign = if matches!(op, Op::Add) { 1.0 } else { -1.0 };
            match (inputs[0], inputs[1]) {
                (S(a), S(b)) => Ok(S(a + b * sign)),
                (M(a), M(b)) => Ok(M(a.add_scaled(b, C64::new(sign, 0.0))?)),
                (a, b) => Err(shape_err("add", format!("{:?} and {:?}", a.shape(), b.shape()))),
            }
        }
        Op::Mul => {
            arity("mul", inputs, 2)?;
            match (inputs[0], inputs[1]) {
                (S(a), S(b)) => Ok(S(a * b)),
                (S(s), M(x)) | (M(x), S(s)) => Ok(M(x.scale(*s))),
                (M(a), M(b)) => {
                    Err(shape_err("mul", format!("{:?} * {:?}; use MATMUL for matrices", a.shape(), b.shape())))
                }
            }
        }
        Op::Div => {
            arity("div", inputs, 2)?;
            let b = match inputs[1] {
                S(b) => *b,
                M(m) => return Err(shape_err("div", format!("divisor must be scalar, got {:?}", m.shape()))),
            };
            if b == ZERO {
                return Err(Error::SingularOp("division by zero".into()));
            }
            check_finite(map_value(inputs[0], |a| a / b), "div")
        }
        Op::Scale(c) => {
            arity("scale", inputs, 1)?;
            Ok(match inputs[0] {
                S(a) => S(a * c),
                M(m) => M(m.scale(*c)),
            })
        }
        Op::Exp => {
            arity("exp", inputs, 1)?;
            match inputs[0] {
                S(a) => check_finite(S(a.exp()), "exp"),
                M(_) => {
                    Err(shape_err("exp", "EXP is scalar only; build matrix exponentials from MATMUL/ADD/SCALE".into()))
                }
            }
        }
        Op::MatMul => {
            arity("matmul", inputs, 2)?;
            match (inputs[0], inputs[1]) {
                (M(a), M(b)) => Ok(M(a.matmul(b)?)),
                (a, b) => Err(shape_err("matmul", format!("{:?} x {:?}", a.shape(), b.shape()))),
            }
        }
        Op::Trace => {
            arity("trace", inputs, 1)?;
            match inputs[0] {
                S(a) => Ok(S(*a)),
                M(m) if m.is_square() => Ok(S(m.trace())),
                M(m) => Err(shape_err("trace", format!("non-square {:?}", m.shape()))),
            }
        }
        Op::Transpose | Op::Conjugate | Op::Adjoint => {
            arity("transpose", inputs, 1)?;
            Ok(match (op, inputs[0]) {
                (Op::Transpose, S(a)) => S(*a),
                (_, S(a)) => S(a.conj()),
                (Op::Transpose, M(m)) => M(m.transpose()),
                (Op::Conjugate, M(m)) => M(m.conj()),
                (_, M(m)) => M(m.adjoint()),
            })
        }
        Op::Inner => {
            arity("inner", inputs, 2)?;
            if inputs[0].shape() != inputs[1].shape() {
                return Err(shape_err("inner", format!("{:?} vs {:?}", inputs[0].shape(), inputs[1].shape())));
            }
            let u = inputs[0].to_vec();
            let v = inputs[1].to_vec();
            Ok(S(u.iter().zip(&v).map(|(a, b)| a.conj() * b).sum()))
        }
        Op::AbsSq => {
            arity("abs_sq", inputs, 1)?;
            Ok(map_value(inputs[0], |z| C64::new(z.norm_sqr(), 0.0)))
        }
        Op::Norm => {
            arity("norm", inputs, 1)?;
            Ok(S(C64::new(inputs[0].to_vec().iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt(), 0.0)))
        }
        Op::Real => {
            arity("real", inputs, 1)?;
            Ok(map_value(inputs[0], |z| C64::new(z.re, 0.0)))
        }
        Op::Imag => {
            arity("imag", inputs, 1)?;
            Ok(map_value(inputs[0], |z| C64::new(z.im, 0.0)))
        }
        Op::Sum => {
            arity("sum", inputs, 1)?;
            Ok(S(inputs[0].to_vec().into_iter().sum()))
        }
        Op::Entry(i, j) => {
            arity("entry", inputs, 1)?;
            let (r, c) = inputs[0].shape();
            if *i >= r || *j >= c {
                return Err(Error::IndexOutOfRange { index: i * c + j, len: r * c });
            }
            Ok(match inputs[0] {
                S(a) => S(*a),
                M(m) => S(m.get(*i, *j)),
            })
        }
        Op::Column(j) => {
            arity("column", inputs, 1)?;
            match inputs[0] {
                M(m) if *j < m.cols() => Ok(M(ComplexMatrix::from_fn(m.rows(), 1, |i, _| m.get(i, *j)))),
                v => Err(Error::IndexOutOfRange { index: *j, len: v.shape().1 }),
            }
        }
        Op::Stack => {
            if inputs.is_empty() {
                return Err(Error::Empty("stack inputs"));
            }
            if inputs.iter().all(|v| v.is_scalar()) {
                let col: Vec<C64> = inputs.iter().map(|v| v.as_scalar().unwrap()).collect();
                return Ok(M(ComplexMatrix::column(&col)));
            }
            let rows = inputs[0].shape().0;
            if inputs.iter().any(|v| v.is_scalar() || v.shape() != (rows, 1)) {
                return Err(shape_err("stack", "inputs must all be scalars or all n×1 columns".into()));
            }
            let cols: Vec<Vec<C64>> = inputs.iter().map(|v| v.to_vec()).collect();
            Ok(M(ComplexMatrix::from_fn(rows, cols.len(), |i, j| cols[j][i])))
        }
    }
}

/// Accumulate input adjoints for one node.
///
/// `ybar` is the row-major adjoint of the node's output. `grads[k]` is
/// `Some` only for inputs that need a gradient.
pub(crate) fn backward(op: &Op, inputs: &[&Value], output: &Value, ybar: &[C64], grads: &mut [Option<&mut Vec<C64>>]) {
    use Value::{Matrix as M, Scalar as S};
    let acc = |g: &mut Vec<C64>, k: usize, z: C64| g[k] += z;
    match op {
        Op::Const | Op::Leaf { .. } => {}
        Op::Add | Op::Sub => {
            if let Some(g) = grads[0].as_deref_mut() {
                g.iter_mut().zip(ybar).for_each(|(a, y)| *a += y);
            }
            if let Some(g) = grads[1].as_deref_mut() {
                if matches!(op, Op::Add) {
                    g.iter_mut().zip(ybar).for_each(|(a, y)| *a += y);
                } else {
                    g.iter_mut().zip(ybar).for_each(|(a, y)| *a -= y);
                }
            }
        }
        Op::Mul => match (inputs[0], inputs[1]) {
            (S(a), S(b)) => {
                if let Some(g) = grads[0].as_deref_mut() {
                    g[0] += b.conj() * ybar[0];
                }
                if let Some(g) = grads[1].as_deref_mut() {
                    g[0] += a.conj() * ybar[0];
                }
            }
            (S(s), M(x)) | (M(x), S(s)) => {
                let (si, xi) = if inputs[0].is_scalar() { (0, 1) } else { (1, 0) };
                let cols = x.cols();
                if grads[si].is_some() {
                    let mut sum = ZERO;
                    for (i, j, v) in x.entries() {
                        sum += v.conj() * ybar[i * cols + j];
                    }
                    acc(grads[si].as_deref_mut().unwrap(), 0, sum);
                }
                if let Some(g) = grads[xi].as_deref_mut() {
                    let sc = s.conj();
                    g.iter_mut().zip(ybar).for_each(|(a, y)| *a += sc * y);
                }
            }
            _ => unreachable!("validated in forward"),
        },
        Op::Div => {
            let b = inputs[1].as_scalar().expect("validated");
            if let Some(g) = grads[0].as_deref_mut() {
                let inv = 1.0 / b.conj();
                g.iter_mut().zip(ybar).for_each(|(a, y)| *a += y * inv);
            }
            if let Some(g) = grads[1].as_deref_mut() {
                let y = output.to_vec();
                let s: C64 = y.iter().zip(ybar).map(|(yv, yb)| (yv / b).conj() * yb).sum();
                g[0] -= s;
            }
        }
        Op::Scale(c) => {
            if let Some(g) = grads[0].as_deref_mut() {
                let cc = c.conj();
                g.iter_mut().zip(ybar).for_each(|(a, y)| *a += cc * y);
            }
        }
        Op::Exp => {
            if let Some(g) = grads[0].as_deref_mut() {
                g[0] += output.as_scalar().unwrap().conj() * ybar[0];
            }
        }
        Op::MatMul => {
            let (a, b) = match (inputs[0], inputs[1]) {
                (M(a), M(b)) => (a, b),
                _ => unreachable!("validated in forward"),
            };
            let (m, k, n) = (a.rows(), a.cols(), b.cols());
            if let Some(g) = grads[0].as_deref_mut() {
                // Ā[i,l] += Σ_j Ȳ[i,j] conj(B[l,j])
                for (l, j, bv) in b.entries() {
                    let bc = bv.conj();
                    for i in 0..m {
                        g[i * k + l] += ybar[i * n + j] * bc;
                    }
                }
            }
            if let Some(g) = grads[1].as_deref_mut() {
                // B̄ = A† Ȳ, one column at a time.
                let mut ycol = vec![ZERO; m];
                let mut out = vec![ZERO; k];
                for j in 0..n {
                    for i in 0..m {
                        ycol[i] = ybar[i * n + j];
                    }
                    out.iter_mut().for_each(|z| *z = ZERO);
                    a.apply_adjoint_add(&ycol, &mut out);
                    for l in 0..k {
                        g[l * n + j] += out[l];
                    }
                }
            }
        }
        Op::Trace => {
            if let Some(g) = grads[0].as_deref_mut() {
                let (r, c) = inputs[0].shape();
                for i in 0..r.min(c) {
                    g[i * c + i] += ybar[0];
                }
            }
        }
        Op::Transpose | Op::Conjugate | Op::Adjoint => {
            if let Some(g) = grads[0].as_deref_mut() {
                let (r, c) = inputs[0].shape();
                for i in 0..r {
                    for j in 0..c {
                        let k = i * c + j;
                        let kt = j * r + i;
                        g[k] += match op {
                            Op::Transpose => ybar[kt],
                            Op::Conjugate => ybar[k].conj(),
                            _ => ybar[kt].conj(),
                        };
                    }
                }
            }
        }
        Op::Inner => {
            let y = ybar[0];
            if let Some(g) = grads[0].as_deref_mut() {
                let v = inputs[1].to_vec();
                g.iter_mut().zip(&v).for_each(|(a, vi)| *a += vi * y.conj());
            }
            if let Some(g) = grads[1].as_deref_mut() {
                let u = inputs[0].to_vec();
                g.iter_mut().zip(&u).for_each(|(a, ui)| *a += ui * y);
            }
        }
        Op::AbsSq => {
            if let Some(g) = grads[0].as_deref_mut() {
                let x = inputs[0].to_vec();
                for ((a, xi), y) in g.iter_mut().zip(&x).zip(ybar) {
                    *a += xi * (2.0 * y.re);
                }
            }
        }
        Op::Norm => {
            if let Some(g) = grads[0].as_deref_mut() {
                let n = output.as_scalar().unwrap().re;
                if n > 0.0 {
                    let x = inputs[0].to_vec();
                    let w = ybar[0].re / n;
                    g.iter_mut().zip(&x).for_each(|(a, xi)| *a += xi * w);
                }
            }
        }
        Op::Real => {
            if let Some(g) = grads[0].as_deref_mut() {
                g.iter_mut().zip(ybar).for_each(|(a, y)| *a += C64::new(y.re, 0.0));
            }
        }
        Op::Imag => {
            if let Some(g) = grads[0].as_deref_mut() {
                g.iter_mut().zip(ybar).for_each(|(a, y)| *a += C64::new(0.0, y.re));
            }
        }
        Op::Sum => {
            if let Some(g) = grads[0].as_deref_mut() {
                g.iter_mut().for_each(|a| *a += ybar[0]);
            }
        }
        Op::Entry(i, j) => {
            if let Some(g) = grads[0].as_deref_mut() {
                let c = inputs[0].shape().1;
                g[i * c + j] += ybar[0];
            }
        }
        Op::Column(j) => {
            if let Some(g) = grads[0].as_deref_mut() {
                let c = inputs[0].shape().1;
                for (i, y) in ybar.iter().enumerate() {
                    g[i * c + j] += y;
                }
            }
        }
        Op::Stack => {
            let n = inputs.len();
            for (k, g) in grads.iter_mut().enumerate() {
                if let Some(g) = g.as_deref_mut() {
                    if inputs[k].is_scalar() {
                        g[0] += ybar[k];
                    } else {
                        for (i, a) in g.iter_mut().enumerate() {
                            *a += ybar[i * n + k];
                        }
                    }
                }
            }
        }
    }
}
