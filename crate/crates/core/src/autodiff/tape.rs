use std::collections::HashMap;

use rand::Rng;

use super::tensor::{sigmoid, softmax};
use super::{Gradients, ParamStore, Tensor};
use crate::error::{Error, Result};

/// Handle to a node recorded on a [`Tape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Var(pub(crate) usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Clone, Debug)]
enum Op {
    Input,
    Param(String),
    MatMul(Var, Var),
    MatVec(Var, Var),
    Transpose(Var),
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    Scale(Var, f64),
    Sigmoid(Var),
    Tanh(Var),
    Softmax(Var),
    Slice(Var, usize, usize),
    Row(Var, usize),
    Concat(Vec<Var>),
    StackRows(Vec<Var>),
    Dot(Var, Var),
    Sum(Var),
    Mean(Var),
}

#[derive(Clone, Debug)]
struct Node {
    op: Op,
    value: Tensor,
}

/// Define-by-run computation record for reverse-mode differentiation.
///
/// Every op evaluates eagerly and appends a node, so nodes are stored in
/// topological order and [`Tape::backward`] simply walks them in reverse.
#[derive(Debug, Default)]
pub struct Tape {
    nodes: Vec<Node>,
    inputs: HashMap<String, Var>,
    params: HashMap<String, Var>,
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

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    fn push(&mut self, op: Op, value: Tensor, name: &'static str) -> Result<Var> {
        if !value.is_finite() {
            return Err(Error::NonFinite(name));
        }
        self.nodes.push(Node { op, value });
        Ok(Var(self.nodes.len() - 1))
    }

    /// Records a constant leaf.
    pub fn constant(&mut self, value: Tensor) -> Result<Var> {
        self.push(Op::Input, value, "constant")
    }

    /// Records a named input leaf, retrievable later through [`Tape::input`].
    pub fn bind_input(&mut self, name: impl Into<String>, value: Tensor) -> Result<Var> {
        let v = self.push(Op::Input, value, "input")?;
        self.inputs.insert(name.into(), v);
        Ok(v)
    }

    pub fn input(&self, name: &str) -> Result<Var> {
        self.inputs
            .get(name)
            .copied()
            .ok_or_else(|| Error::UnboundInput(name.to_string()))
    }

    /// Leaf for a trainable parameter. Repeated requests for the same name
    /// return the same node, so gradients from every use are summed.
    pub fn param(&mut self, store: &ParamStore, name: &str) -> Result<Var> {
        if let Some(&v) = self.params.get(name) {
            return Ok(v);
        }
        let value = store.get(name)?.clone();
        let v = self.push(Op::Param(name.to_string()), value, "param")?;
        self.params.insert(name.to_string(), v);
        Ok(v)
    }

    /// `[m,k] x [k,n] -> [m,n]`
    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (ta, tb) = (self.value(a), self.value(b));
        let ((m, k), (k2, n)) = match (ta.dims2(), tb.dims2()) {
            (Some(x), Some(y)) => (x, y),
            _ => return Err(Error::shape("matmul", "operands must be matrices")),
        };
        if k != k2 {
            return Err(Error::shape(
                "matmul",
                format!("[{m},{k}] x [{k2},{n}]"),
            ));
        }
        let out = matmul_raw(ta.data(), tb.data(), m, k, n);
        self.push(Op::MatMul(a, b), Tensor::new(vec![m, n], out)?, "matmul")
    }

    /// `[m,k] x [k] -> [m]`
    pub fn matvec(&mut self, a: Var, x: Var) -> Result<Var> {
        let (ta, tx) = (self.value(a), self.value(x));
        let (m, k) = ta
            .dims2()
            .ok_or_else(|| Error::shape("matvec", "left operand must be a matrix"))?;
        if tx.shape() != [k] {
            return Err(Error::shape(
                "matvec",
                format!("[{m},{k}] x {:?}", tx.shape()),
            ));
        }
        let (ad, xd) = (ta.data(), tx.data());
        let out: Vec<f64> = (0..m)
            .map(|i| dot_raw(&ad[i * k..(i + 1) * k], xd))
            .collect();
        self.push(Op::MatVec(a, x), Tensor::vector(out), "matvec")
    }

    pub fn transpose(&mut self, a: Var) -> Result<Var> {
        let ta = self.value(a);
        let (m, n) = ta
            .dims2()
            .ok_or_else(|| Error::shape("transpose", "operand must be a matrix"))?;
        let out = transpose_raw(ta.data(), m, n);
        self.push(Op::Transpose(a), Tensor::new(vec![n, m], out)?, "transpose")
    }

    fn check_same(&self, op: &'static str, a: Var, b: Var) -> Result<()> {
        let (ta, tb) = (self.value(a), self.value(b));
        if ta.same_shape(tb) {
            Ok(())
        } else {
            Err(Error::shape(
                op,
                format!("{:?} vs {:?}", ta.shape(), tb.shape()),
            ))
        }
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.check_same("add", a, b)?;
        let out = self.value(a).zip(self.value(b), |x, y| x + y);
        self.push(Op::Add(a, b), out, "add")
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        self.check_same("sub", a, b)?;
        let out = self.value(a).zip(self.value(b), |x, y| x - y);
        self.push(Op::Sub(a, b), out, "sub")
    }

    /// Elementwise product.
    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.check_same("mul", a, b)?;
        let out = self.value(a).zip(self.value(b), |x, y| x * y);
        self.push(Op::Mul(a, b), out, "mul")
    }

    pub fn scale(&mut self, a: Var, factor: f64) -> Result<Var> {
        let out = self.value(a).map(|x| x * factor);
        self.push(Op::Scale(a, factor), out, "scale")
    }

    pub fn sigmoid(&mut self, a: Var) -> Result<Var> {
        let out = self.value(a).map(sigmoid);
        self.push(Op::Sigmoid(a), out, "sigmoid")
    }

    pub fn tanh(&mut self, a: Var) -> Result<Var> {
        let out = self.value(a).map(f64::tanh);
        self.push(Op::Tanh(a), out, "tanh")
    }

    /// Softmax over a non-empty vector.
    pub fn softmax(&mut self, a: Var) -> Result<Var> {
        let ta = self.value(a);
        if ta.rank() != 1 || ta.is_empty() {
            return Err(Error::shape(
                "softmax",
                format!("expected non-empty vector, got {:?}", ta.shape()),
            ));
        }
        let out = Tensor::vector(softmax(ta.data()));
        self.push(Op::Softmax(a), out, "softmax")
    }

    /// `a[start..start + len]` of a vector.
    pub fn slice(&mut self, a: Var, start: usize, len: usize) -> Result<Var> {
        let ta = self.value(a);
        if ta.rank() != 1 || start + len > ta.len() {
            return Err(Error::shape(
                "slice",
                format!("[{start}..{}] of {:?}", start + len, ta.shape()),
            ));
        }
        let out = Tensor::vector(ta.data()[start..start + len].to_vec());
        self.push(Op::Slice(a, start, len), out, "slice")
    }

    /// Row `i` of a matrix, as a vector.
    pub fn row(&mut self, a: Var, i: usize) -> Result<Var> {
        let ta = self.value(a);
        let (m, n) = ta
            .dims2()
            .ok_or_else(|| Error::shape("row", "operand must be a matrix"))?;
        if i >= m {
            return Err(Error::shape("row", format!("row {i} of [{m},{n}]")));
        }
        let out = Tensor::vector(ta.data()[i * n..(i + 1) * n].to_vec());
        self.push(Op::Row(a, i), out, "row")
    }

    /// Concatenates vectors end to end.
    pub fn concat(&mut self, parts: &[Var]) -> Result<Var> {
        if parts.is_empty() {
            return Err(Error::shape("concat", "no operands"));
        }
        let mut out = Vec::new();
        for &p in parts {
            let t = self.value(p);
            if t.rank() != 1 {
                return Err(Error::shape("concat", "operands must be vectors"));
            }
            out.extend_from_slice(t.data());
        }
        self.push(Op::Concat(parts.to_vec()), Tensor::vector(out), "concat")
    }

    /// Stacks equal-length vectors as the rows of a matrix.
    pub fn stack_rows(&mut self, rows: &[Var]) -> Result<Var> {
        let first = rows
            .first()
            .ok_or_else(|| Error::shape("stack_rows", "no operands"))?;
        let width = self.value(*first).len();
        let mut out = Vec::with_capacity(width * rows.len());
        for &r in rows {
            let t = self.value(r);
            if t.shape() != [width] {
                return Err(Error::shape(
                    "stack_rows",
                    format!("row {:?} vs width {width}", t.shape()),
                ));
            }
            out.extend_from_slice(t.data());
        }
        let value = Tensor::new(vec![rows.len(), width], out)?;
        self.push(Op::StackRows(rows.to_vec()), value, "stack_rows")
    }

    pub fn dot(&mut self, a: Var, b: Var) -> Result<Var> {
        self.check_same("dot", a, b)?;
        let out = dot_raw(self.value(a).data(), self.value(b).data());
        self.push(Op::Dot(a, b), Tensor::scalar(out), "dot")
    }

    pub fn sum(&mut self, a: Var) -> Result<Var> {
        let out = self.value(a).data().iter().sum();
        self.push(Op::Sum(a), Tensor::scalar(out), "sum")
    }

    pub fn mean(&mut self, a: Var) -> Result<Var> {
        let t = self.value(a);
        if t.is_empty() {
            return Err(Error::shape("mean", "empty operand"));
        }
        let out = t.data().iter().sum::<f64>() / t.len() as f64;
        self.push(Op::Mean(a), Tensor::scalar(out), "mean")
    }

    /// Inverted dropout. In train mode each element is zeroed with
    /// probability `rate` and survivors are scaled by `1 / (1 - rate)`; one
    /// uniform draw per element, in element order. Eval mode (or rate 0)
    /// returns `a` unchanged without recording anything.
    pub fn dropout<R: Rng + ?Sized>(
        &mut self,
        a: Var,
        rate: f64,
        train: bool,
        rng: &mut R,
    ) -> Result<Var> {
        if !(0.0..1.0).contains(&rate) {
            return Err(Error::invalid(format!("dropout rate {rate} outside [0, 1)")));
        }
        if !train || rate == 0.0 {
            return Ok(a);
        }
        let keep = 1.0 / (1.0 - rate);
        let shape = self.value(a).shape().to_vec();
        let data = (0..self.value(a).len())
            .map(|_| if rng.random::<f64>() < rate { 0.0 } else { keep })
            .collect();
        let mask = Tensor::new(shape, data)?;
        let m = self.constant(mask)?;
        self.mul(a, m)
    }

    /// Reverse sweep from `output`, seeded with `seed` (same shape as the
    /// output). Returns gradients for every parameter leaf on the tape.
    pub fn backward(&self, output: Var, seed: &Tensor) -> Result<Gradients> {
        Ok(self.backward_full(output, seed)?.0)
    }

    /// Like [`Tape::backward`] but also returns the per-node adjoints, so
    /// gradients with respect to inputs can be read with [`Adjoints::of`].
    pub fn backward_full(&self, output: Var, seed: &Tensor) -> Result<(Gradients, Adjoints)> {
        if self.nodes.is_empty() || output.0 >= self.nodes.len() {
            return Err(Error::BackwardBeforeForward);
        }
        let out_shape = self.value(output).shape();
        if seed.shape() != out_shape {
            return Err(Error::shape(
                "backward",
                format!("seed {:?} vs output {:?}", seed.shape(), out_shape),
            ));
        }

        let mut adj: Vec<Option<Tensor>> = vec![None; output.0 + 1];
        adj[output.0] = Some(seed.clone());
        let mut grads = Gradients::default();

        for idx in (0..=output.0).rev() {
            let Some(g) = adj[idx].take() else { continue };
            let node = &self.nodes[idx];
            let mut send = |v: Var, t: Tensor| match &mut adj[v.0] {
                Some(acc) => acc.add_assign(&t),
                slot @ None => *slot = Some(t),
            };
            match &node.op {
                Op::Input => {}
                Op::Param(name) => grads.accumulate(name, &g),
                Op::MatMul(a, b) => {
                    let (ta, tb) = (self.value(*a), self.value(*b));
                    let (m, k) = ta.dims2().unwrap();
                    let n = tb.dims2().unwrap().1;
                    let bt = transpose_raw(tb.data(), k, n);
                    let at = transpose_raw(ta.data(), m, k);
                    let da = matmul_raw(g.data(), &bt, m, n, k);
                    let db = matmul_raw(&at, g.data(), k, m, n);
                    send(*a, Tensor::new(vec![m, k], da)?);
                    send(*b, Tensor::new(vec![k, n], db)?);
                }
                Op::MatVec(a, x) => {
                    let (ta, tx) = (self.value(*a), self.value(*x));
                    let (m, k) = ta.dims2().unwrap();
                    let (ad, xd, gd) = (ta.data(), tx.data(), g.data());
                    let mut da = vec![0.0; m * k];
                    let mut dx = vec![0.0; k];
                    for i in 0..m {
                        let gi = gd[i];
                        let row = &ad[i * k..(i + 1) * k];
                        let drow = &mut da[i * k..(i + 1) * k];
                        for j in 0..k {
                            drow[j] = gi * xd[j];
                            dx[j] += gi * row[j];
                        }
                    }
                    send(*a, Tensor::new(vec![m, k], da)?);
                    send(*x, Tensor::vector(dx));
                }
                Op::Transpose(a) => {
                    let (m, n) = self.value(*a).dims2().unwrap();
                    // g is [n, m]
                    send(*a, Tensor::new(vec![m, n], transpose_raw(g.data(), n, m))?);
                }
                Op::Add(a, b) => {
                    send(*a, g.clone());
                    send(*b, g.clone());
                }
                Op::Sub(a, b) => {
                    send(*a, g.clone());
                    send(*b, g.map(|v| -v));
                }
                Op::Mul(a, b) => {
                    let da = g.zip(self.value(*b), |gv, bv| gv * bv);
                    let db = g.zip(self.value(*a), |gv, av| gv * av);
                    send(*a, da);
                    send(*b, db);
                }
                Op::Scale(a, factor) => send(*a, g.map(|v| v * factor)),
                Op::Sigmoid(a) => send(*a, g.zip(&node.value, |gv, y| gv * y * (1.0 - y))),
                Op::Tanh(a) => send(*a, g.zip(&node.value, |gv, y| gv * (1.0 - y * y))),
                Op::Softmax(a) => {
                    let y = &node.value;
                    let inner = dot_raw(g.data(), y.data());
                    send(*a, g.zip(y, |gv, yv| yv * (gv - inner)));
                }
                Op::Slice(a, start, len) => {
                    let mut full = Tensor::zeros(self.value(*a).shape());
                    full.data_mut()[*start..start + len].copy_from_slice(g.data());
                    send(*a, full);
                }
                Op::Row(a, i) => {
                    let mut full = Tensor::zeros(self.value(*a).shape());
                    let n = g.len();
                    full.data_mut()[i * n..(i + 1) * n].copy_from_slice(g.data());
                    send(*a, full);
                }
                Op::Concat(parts) => {
                    let mut offset = 0;
                    for &p in parts {
                        let n = self.value(p).len();
                        send(p, Tensor::vector(g.data()[offset..offset + n].to_vec()));
                        offset += n;
                    }
                }
                Op::StackRows(rows) => {
                    let width = node.value.dims2().unwrap().1;
                    for (i, &r) in rows.iter().enumerate() {
                        send(r, Tensor::vector(g.data()[i * width..(i + 1) * width].to_vec()));
                    }
                }
                Op::Dot(a, b) => {
                    let gv = g.data()[0];
                    send(*a, self.value(*b).map(|v| v * gv));
                    send(*b, self.value(*a).map(|v| v * gv));
                }
                Op::Sum(a) => {
                    let gv = g.data()[0];
                    send(*a, Tensor::full(self.value(*a).shape(), gv));
                }
                Op::Mean(a) => {
                    let t = self.value(*a);
                    let gv = g.data()[0] / t.len() as f64;
                    send(*a, Tensor::full(t.shape(), gv));
                }
            }
            adj[idx] = Some(g);
        }
        Ok((grads, Adjoints(adj)))
    }
}

/// Per-node adjoints from a reverse sweep.
#[derive(Debug)]
pub struct Adjoints(Vec<Option<Tensor>>);

impl Adjoints {
    /// Gradient with respect to `v`, or `None` if `v` does not influence
    /// the output.
    pub fn of(&self, v: Var) -> Option<&Tensor> {
        self.0.get(v.0).and_then(Option::as_ref)
    }
}

pub(crate) fn dot_raw(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn matmul_raw(a: &[f64], b: &[f64], m: usize, k: usize, n: usize) -> Vec<f64> {
    let mut out = vec![0.0; m * n];
    for i in 0..m {
        for p in 0..k {
            let aip = a[i * k + p];
            if aip == 0.0 {
                continue;
            }
            let brow = &b[p * n..(p + 1) * n];
            let orow = &mut out[i * n..(i + 1) * n];
            for j in 0..n {
                orow[j] += aip * brow[j];
            }
        }
    }
    out
}

fn transpose_raw(a: &[f64], m: usize, n: usize) -> Vec<f64> {
    let mut out = vec![0.0; m * n];
    for i in 0..m {
        for j in 0..n {
            out[j * m + i] = a[i * n + j];
        }
    }
    out
}
