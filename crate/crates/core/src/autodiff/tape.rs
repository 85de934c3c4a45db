//! Reverse-mode differentiation over a flat computation tape.
//!
//! Values live in one arena; every op appends a node recording its inputs.
//! `backward` sweeps the tape once per call and adds leaf gradients into the
//! parameter store, so repeated calls accumulate additively.
//!
//! Shape mismatches are programming errors and panic with both shapes named;
//! any op producing a non-finite value panics as well. Data-dependent
//! failures (non-scalar loss, empty sequences) are returned as errors.

use std::collections::HashMap;

use thiserror::Error;

use super::params::{ParamId, ParamStore};
use super::tensor::Tensor;

#[derive(Debug, Error)]
pub enum TapeError {
    #[error("loss must be a scalar, got shape {0:?}")]
    NonScalarLoss(Vec<usize>),
    #[error("sequence ops need at least one element")]
    EmptySequence,
}

/// Handle to a tape node.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Var(u32);

/// Node shape: vectors of length n, or row-major matrices.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Shape {
    Vector(usize),
    Matrix(usize, usize),
}

impl Shape {
    pub fn len(&self) -> usize {
        match *self {
            Shape::Vector(n) => n,
            Shape::Matrix(r, c) => r * c,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn dims(&self) -> Vec<usize> {
        match *self {
            Shape::Vector(n) => vec![n],
            Shape::Matrix(r, c) => vec![r, c],
        }
    }
}

#[derive(Debug, Clone)]
enum Op {
    /// Copy of a parameter tensor; gradient flows back to the store.
    Param(ParamId),
    /// One row of a matrix parameter (an embedding lookup).
    ParamRow(ParamId, usize),
    Constant,
    Add(Var, Var),
    AddN(Vec<Var>),
    Mul(Var, Var),
    /// Vector scaled by a scalar node.
    ScaleBy(Var, Var),
    /// Elementwise `mul * x + add` with constant coefficients.
    AffineMap(Var, f64, f64),
    MatVec(Var, Var),
    /// `v^T M` for v of length r and M of shape (r, c).
    VecMat(Var, Var),
    StackRows(Vec<Var>),
    Concat(Vec<Var>),
    SliceVec(Var, usize),
    Relu(Var),
    Tanh(Var),
    Sigmoid(Var),
    SoftmaxVec(Var),
    Dot(Var, Var),
    SumElems(Var),
    MeanN(Vec<Var>),
    /// Mean binary cross entropy over logits with constant labels.
    BceWithLogitsMean(Var, Vec<f64>),
}

impl Op {
    fn name(&self) -> &'static str {
        match self {
            Op::Param(_) => "param",
            Op::ParamRow(..) => "param_row",
            Op::Constant => "constant",
            Op::Add(..) => "add",
            Op::AddN(_) => "add_n",
            Op::Mul(..) => "mul",
            Op::ScaleBy(..) => "scale_by",
            Op::AffineMap(..) => "affine_map",
            Op::MatVec(..) => "matvec",
            Op::VecMat(..) => "vecmat",
            Op::StackRows(_) => "stack_rows",
            Op::Concat(_) => "concat",
            Op::SliceVec(..) => "slice_vec",
            Op::Relu(_) => "relu",
            Op::Tanh(_) => "tanh",
            Op::Sigmoid(_) => "sigmoid",
            Op::SoftmaxVec(_) => "softmax",
            Op::Dot(..) => "dot",
            Op::SumElems(_) => "sum",
            Op::MeanN(_) => "mean_n",
            Op::BceWithLogitsMean(..) => "bce_with_logits",
        }
    }
}

struct Node {
    op: Op,
    shape: Shape,
    offset: usize,
}

/// A single-use computation graph.
#[derive(Default)]
pub struct Tape {
    nodes: Vec<Node>,
    values: Vec<f64>,
    grads: Vec<f64>,
    param_cache: HashMap<ParamId, Var>,
    row_cache: HashMap<(ParamId, usize), Var>,
}

impl Tape {
    pub fn new() -> Tape {
        Tape::default()
    }

    pub fn shape(&self, var: Var) -> Shape {
        self.nodes[var.0 as usize].shape
    }

    pub fn value(&self, var: Var) -> &[f64] {
        let node = &self.nodes[var.0 as usize];
        &self.values[node.offset..node.offset + node.shape.len()]
    }

    pub fn scalar_value(&self, var: Var) -> f64 {
        let v = self.value(var);
        assert_eq!(v.len(), 1, "scalar_value on shape {:?}", self.shape(var));
        v[0]
    }

    fn push(&mut self, op: Op, shape: Shape, values: Vec<f64>) -> Var {
        debug_assert_eq!(shape.len(), values.len());
        let name = op.name();
        if values.iter().any(|v| !v.is_finite()) {
            panic!("non-finite value produced by op {name}");
        }
        let offset = self.values.len();
        self.values.extend_from_slice(&values);
        self.nodes.push(Node { op, shape, offset });
        Var((self.nodes.len() - 1) as u32)
    }

    /// Leaf copying a parameter tensor; cached, so each parameter
    /// contributes one leaf per tape.
    pub fn param(&mut self, store: &ParamStore, id: ParamId) -> Var {
        if let Some(&var) = self.param_cache.get(&id) {
            return var;
        }
        let p = store.get(id);
        let shape = match p.value.shape() {
            [n] => Shape::Vector(*n),
            [r, c] => Shape::Matrix(*r, *c),
            other => panic!("unsupported parameter rank {other:?}"),
        };
        let var = self.push(Op::Param(id), shape, p.value.data().to_vec());
        self.param_cache.insert(id, var);
        var
    }

    /// One row of a matrix parameter, as a vector leaf (embedding lookup).
    pub fn param_row(&mut self, store: &ParamStore, id: ParamId, row: usize) -> Var {
        if let Some(&var) = self.row_cache.get(&(id, row)) {
            return var;
        }
        let p = store.get(id);
        let [rows, cols] = p.value.shape() else {
            panic!("param_row needs a matrix, got {:?}", p.value.shape());
        };
        assert!(row < *rows, "row {row} out of {rows}");
        let var = self.push(
            Op::ParamRow(id, row),
            Shape::Vector(*cols),
            p.value.row(row).to_vec(),
        );
        self.row_cache.insert((id, row), var);
        var
    }

    pub fn constant(&mut self, tensor: &Tensor) -> Var {
        let shape = match tensor.shape() {
            [n] => Shape::Vector(*n),
            [r, c] => Shape::Matrix(*r, *c),
            other => panic!("unsupported constant rank {other:?}"),
        };
        self.push(Op::Constant, shape, tensor.data().to_vec())
    }

    pub fn constant_vector(&mut self, data: Vec<f64>) -> Var {
        let shape = Shape::Vector(data.len());
        self.push(Op::Constant, shape, data)
    }

    pub fn zeros(&mut self, len: usize) -> Var {
        self.constant_vector(vec![0.0; len])
    }

    pub fn add(&mut self, a: Var, b: Var) -> Var {
        let (sa, sb) = (self.shape(a), self.shape(b));
        assert_eq!(sa, sb, "add shape mismatch: {sa:?} vs {sb:?}");
        let data = self
            .value(a)
            .iter()
            .zip(self.value(b))
            .map(|(x, y)| x + y)
            .collect();
        self.push(Op::Add(a, b), sa, data)
    }

    /// Sum of same-shape vectors; summation order is the argument order.
    pub fn add_n(&mut self, vars: &[Var]) -> Result<Var, TapeError> {
        let (&first, rest) = vars.split_first().ok_or(TapeError::EmptySequence)?;
        let shape = self.shape(first);
        let mut data = self.value(first).to_vec();
        for &v in rest {
            let sv = self.shape(v);
            assert_eq!(shape, sv, "add_n shape mismatch: {shape:?} vs {sv:?}");
            for (acc, x) in data.iter_mut().zip(self.value(v)) {
                *acc += x;
            }
        }
        Ok(self.push(Op::AddN(vars.to_vec()), shape, data))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Var {
        let (sa, sb) = (self.shape(a), self.shape(b));
        assert_eq!(sa, sb, "mul shape mismatch: {sa:?} vs {sb:?}");
        let data = self
            .value(a)
            .iter()
            .zip(self.value(b))
            .map(|(x, y)| x * y)
            .collect();
        self.push(Op::Mul(a, b), sa, data)
    }

    /// Vector times scalar node.
    pub fn scale_by(&mut self, vec: Var, scalar: Var) -> Var {
        let ss = self.shape(scalar);
        assert_eq!(ss.len(), 1, "scale_by needs a scalar, got {ss:?}");
        let s = self.value(scalar)[0];
        let shape = self.shape(vec);
        let data = self.value(vec).iter().map(|x| x * s).collect();
        self.push(Op::ScaleBy(vec, scalar), shape, data)
    }

    /// Elementwise `mul * x + add` with constant coefficients.
    pub fn affine_map(&mut self, a: Var, mul: f64, add: f64) -> Var {
        let shape = self.shape(a);
        let data = self.value(a).iter().map(|x| mul * x + add).collect();
        self.push(Op::AffineMap(a, mul, add), shape, data)
    }

    pub fn matvec(&mut self, m: Var, v: Var) -> Var {
        let (sm, sv) = (self.shape(m), self.shape(v));
        let Shape::Matrix(rows, cols) = sm else {
            panic!("matvec needs a matrix, got {sm:?} vs {sv:?}");
        };
        assert_eq!(
            Shape::Vector(cols),
            sv,
            "matvec shape mismatch: {sm:?} vs {sv:?}"
        );
        let mv = self.value(m);
        let vv = self.value(v);
        let mut data = vec![0.0; rows];
        for r in 0..rows {
            let row = &mv[r * cols..(r + 1) * cols];
            let mut acc = 0.0;
            for (w, x) in row.iter().zip(vv) {
                acc += w * x;
            }
            data[r] = acc;
        }
        self.push(Op::MatVec(m, v), Shape::Vector(rows), data)
    }

    /// `v^T M`: weights a matrix's rows by a vector and sums them.
    pub fn vecmat(&mut self, v: Var, m: Var) -> Var {
        let (sv, sm) = (self.shape(v), self.shape(m));
        let Shape::Matrix(rows, cols) = sm else {
            panic!("vecmat needs a matrix, got {sv:?} vs {sm:?}");
        };
        assert_eq!(
            Shape::Vector(rows),
            sv,
            "vecmat shape mismatch: {sv:?} vs {sm:?}"
        );
        let vv = self.value(v);
        let mv = self.value(m);
        let mut data = vec![0.0; cols];
        for r in 0..rows {
            let w = vv[r];
            let row = &mv[r * cols..(r + 1) * cols];
            for (acc, x) in data.iter_mut().zip(row) {
                *acc += w * x;
            }
        }
        self.push(Op::VecMat(v, m), Shape::Vector(cols), data)
    }

    /// Stacks same-length vectors into a matrix, one per row.
    pub fn stack_rows(&mut self, vars: &[Var]) -> Result<Var, TapeError> {
        let (&first, rest) = vars.split_first().ok_or(TapeError::EmptySequence)?;
        let Shape::Vector(cols) = self.shape(first) else {
            panic!("stack_rows needs vectors, got {:?}", self.shape(first));
        };
        let mut data = self.value(first).to_vec();
        for &v in rest {
            let sv = self.shape(v);
            assert_eq!(
                Shape::Vector(cols),
                sv,
                "stack_rows shape mismatch: {:?} vs {sv:?}",
                Shape::Vector(cols)
            );
            data.extend_from_slice(self.value(v));
        }
        Ok(self.push(
            Op::StackRows(vars.to_vec()),
            Shape::Matrix(vars.len(), cols),
            data,
        ))
    }

    pub fn concat(&mut self, vars: &[Var]) -> Result<Var, TapeError> {
        if vars.is_empty() {
            return Err(TapeError::EmptySequence);
        }
        let mut data = Vec::new();
        for &v in vars {
            let sv = self.shape(v);
            assert!(
                matches!(sv, Shape::Vector(_)),
                "concat needs vectors, got {sv:?}"
            );
            data.extend_from_slice(self.value(v));
        }
        let shape = Shape::Vector(data.len());
        Ok(self.push(Op::Concat(vars.to_vec()), shape, data))
    }

    pub fn slice_vec(&mut self, a: Var, start: usize, len: usize) -> Var {
        let sa = self.shape(a);
        let Shape::Vector(n) = sa else {
            panic!("slice_vec needs a vector, got {sa:?}");
        };
        assert!(
            start + len <= n,
            "slice {start}..{} out of vector length {n}",
            start + len
        );
        let data = self.value(a)[start..start + len].to_vec();
        self.push(Op::SliceVec(a, start), Shape::Vector(len), data)
    }

    pub fn relu(&mut self, a: Var) -> Var {
        let shape = self.shape(a);
        let data = self.value(a).iter().map(|x| x.max(0.0)).collect();
        self.push(Op::Relu(a), shape, data)
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        let shape = self.shape(a);
        let data = self.value(a).iter().map(|x| x.tanh()).collect();
        self.push(Op::Tanh(a), shape, data)
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        let shape = self.shape(a);
        let data = self.value(a).iter().map(|x| sigmoid(*x)).collect();
        self.push(Op::Sigmoid(a), shape, data)
    }

    /// Numerically stable softmax over a vector.
    pub fn softmax(&mut self, a: Var) -> Var {
        let sa = self.shape(a);
        assert!(
            matches!(sa, Shape::Vector(_)),
            "softmax needs a vector, got {sa:?}"
        );
        let v = self.value(a);
        let max = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<f64> = v.iter().map(|x| (x - max).exp()).collect();
        let sum: f64 = exps.iter().sum();
        let data = exps.iter().map(|e| e / sum).collect();
        self.push(Op::SoftmaxVec(a), sa, data)
    }

    pub fn dot(&mut self, a: Var, b: Var) -> Var {
        let (sa, sb) = (self.shape(a), self.shape(b));
        assert_eq!(sa, sb, "dot shape mismatch: {sa:?} vs {sb:?}");
        let acc = self
            .value(a)
            .iter()
            .zip(self.value(b))
            .map(|(x, y)| x * y)
            .sum();
        self.push(Op::Dot(a, b), Shape::Vector(1), vec![acc])
    }

    pub fn sum_elems(&mut self, a: Var) -> Var {
        let acc = self.value(a).iter().sum();
        self.push(Op::SumElems(a), Shape::Vector(1), vec![acc])
    }

    /// Elementwise mean of same-shape vectors, summed in argument order.
    pub fn mean_n(&mut self, vars: &[Var]) -> Result<Var, TapeError> {
        let (&first, rest) = vars.split_first().ok_or(TapeError::EmptySequence)?;
        let shape = self.shape(first);
        let mut data = self.value(first).to_vec();
        for &v in rest {
            let sv = self.shape(v);
            assert_eq!(shape, sv, "mean_n shape mismatch: {shape:?} vs {sv:?}");
            for (acc, x) in data.iter_mut().zip(self.value(v)) {
                *acc += x;
            }
        }
        let k = vars.len() as f64;
        data.iter_mut().for_each(|x| *x /= k);
        Ok(self.push(Op::MeanN(vars.to_vec()), shape, data))
    }

    /// Affine layer `W x + b`.
    pub fn affine(&mut self, w: Var, x: Var, b: Var) -> Var {
        let wx = self.matvec(w, x);
        self.add(wx, b)
    }

    /// Mean binary cross entropy of `sigmoid(logits)` against 0/1 labels,
    /// computed in the numerically stable logits form.
    pub fn bce_with_logits_mean(&mut self, logits: Var, labels: &[f64]) -> Var {
        let sl = self.shape(logits);
        assert_eq!(
            sl,
            Shape::Vector(labels.len()),
            "bce shape mismatch: {sl:?} vs {:?} labels",
            labels.len()
        );
        let v = self.value(logits);
        let n = labels.len() as f64;
        let mut acc = 0.0;
        for (s, y) in v.iter().zip(labels) {
            acc += s.max(0.0) - s * y + (-s.abs()).exp().ln_1p();
        }
        self.push(
            Op::BceWithLogitsMean(logits, labels.to_vec()),
            Shape::Vector(1),
            vec![acc / n],
        )
    }

    /// Sweeps the tape in reverse and adds leaf gradients into the store's
    /// parameter grads. Each call performs a full fresh sweep, so calling
    /// twice doubles the accumulated parameter gradients.
    pub fn backward(&mut self, loss: Var, store: &mut ParamStore) -> Result<(), TapeError> {
        let loss_node = &self.nodes[loss.0 as usize];
        if loss_node.shape.len() != 1 {
            return Err(TapeError::NonScalarLoss(loss_node.shape.dims()));
        }
        self.grads.clear();
        self.grads.resize(self.values.len(), 0.0);
        self.grads[loss_node.offset] = 1.0;

        for i in (0..=loss.0 as usize).rev() {
            self.propagate(i, store);
        }
        Ok(())
    }

    /// Gradient of a node from the latest `backward` sweep.
    pub fn grad(&self, var: Var) -> &[f64] {
        let node = &self.nodes[var.0 as usize];
        &self.grads[node.offset..node.offset + node.shape.len()]
    }

    fn propagate(&mut self, i: usize, store: &mut ParamStore) {
        let (offset, len) = {
            let n = &self.nodes[i];
            (n.offset, n.shape.len())
        };
        // Move the op descriptor out to keep the borrow checker happy while
        // writing gradients; restored below.
        let op = std::mem::replace(&mut self.nodes[i].op, Op::Constant);
        match &op {
            Op::Constant => {}
            Op::Param(id) => {
                let p = store.get_mut(*id);
                for (g, d) in p.grad.data_mut().iter_mut().zip(&self.grads[offset..offset + len]) {
                    *g += d;
                }
            }
            Op::ParamRow(id, row) => {
                let p = store.get_mut(*id);
                let cols = p.value.shape()[1];
                let dst = &mut p.grad.data_mut()[row * cols..(row + 1) * cols];
                for (g, d) in dst.iter_mut().zip(&self.grads[offset..offset + len]) {
                    *g += d;
                }
            }
            Op::Add(a, b) => {
                self.add_grad_from(*a, offset, 1.0);
                self.add_grad_from(*b, offset, 1.0);
            }
            Op::AddN(vars) => {
                for &v in vars {
                    self.add_grad_from(v, offset, 1.0);
                }
            }
            Op::MeanN(vars) => {
                let k = vars.len() as f64;
                for &v in vars {
                    self.add_grad_from(v, offset, 1.0 / k);
                }
            }
            Op::Mul(a, b) => {
                let (ao, bo) = (self.offset_of(*a), self.offset_of(*b));
                for j in 0..len {
                    let d = self.grads[offset + j];
                    let av = self.values[ao + j];
                    let bv = self.values[bo + j];
                    self.grads[ao + j] += d * bv;
                    self.grads[bo + j] += d * av;
                }
            }
            Op::ScaleBy(vec, scalar) => {
                let (vo, so) = (self.offset_of(*vec), self.offset_of(*scalar));
                let s = self.values[so];
                let mut ds = 0.0;
                for j in 0..len {
                    let d = self.grads[offset + j];
                    ds += d * self.values[vo + j];
                    self.grads[vo + j] += d * s;
                }
                self.grads[so] += ds;
            }
            Op::AffineMap(a, mul, _) => {
                self.add_grad_from(*a, offset, *mul);
            }
            Op::MatVec(m, v) => {
                let (mo, vo) = (self.offset_of(*m), self.offset_of(*v));
                let Shape::Matrix(rows, cols) = self.nodes[m.0 as usize].shape else {
                    unreachable!()
                };
                for r in 0..rows {
                    let d = self.grads[offset + r];
                    if d == 0.0 {
                        continue;
                    }
                    for c in 0..cols {
                        self.grads[mo + r * cols + c] += d * self.values[vo + c];
                        self.grads[vo + c] += d * self.values[mo + r * cols + c];
                    }
                }
            }
            Op::VecMat(v, m) => {
                let (vo, mo) = (self.offset_of(*v), self.offset_of(*m));
                let Shape::Matrix(rows, cols) = self.nodes[m.0 as usize].shape else {
                    unreachable!()
                };
                for r in 0..rows {
                    let w = self.values[vo + r];
                    let mut dv = 0.0;
                    for c in 0..cols {
                        let d = self.grads[offset + c];
                        dv += d * self.values[mo + r * cols + c];
                        self.grads[mo + r * cols + c] += d * w;
                    }
                    self.grads[vo + r] += dv;
                }
            }
            Op::StackRows(vars) | Op::Concat(vars) => {
                let mut part_off = offset;
                for &v in vars {
                    let (vo, vlen) = {
                        let n = &self.nodes[v.0 as usize];
                        (n.offset, n.shape.len())
                    };
                    for j in 0..vlen {
                        self.grads[vo + j] += self.grads[part_off + j];
                    }
                    part_off += vlen;
                }
            }
            Op::SliceVec(a, start) => {
                let ao = self.offset_of(*a);
                for j in 0..len {
                    self.grads[ao + start + j] += self.grads[offset + j];
                }
            }
            Op::Relu(a) => {
                let ao = self.offset_of(*a);
                for j in 0..len {
                    if self.values[ao + j] > 0.0 {
                        self.grads[ao + j] += self.grads[offset + j];
                    }
                }
            }
            Op::Tanh(a) => {
                let ao = self.offset_of(*a);
                for j in 0..len {
                    let y = self.values[offset + j];
                    self.grads[ao + j] += self.grads[offset + j] * (1.0 - y * y);
                }
            }
            Op::Sigmoid(a) => {
                let ao = self.offset_of(*a);
                for j in 0..len {
                    let y = self.values[offset + j];
                    self.grads[ao + j] += self.grads[offset + j] * y * (1.0 - y);
                }
            }
            Op::SoftmaxVec(a) => {
                let ao = self.offset_of(*a);
                let mut weighted = 0.0;
                for j in 0..len {
                    weighted += self.grads[offset + j] * self.values[offset + j];
                }
                for j in 0..len {
                    let y = self.values[offset + j];
                    self.grads[ao + j] += y * (self.grads[offset + j] - weighted);
                }
            }
            Op::Dot(a, b) => {
                let d = self.grads[offset];
                let (ao, bo) = (self.offset_of(*a), self.offset_of(*b));
                let alen = self.nodes[a.0 as usize].shape.len();
                for j in 0..alen {
                    self.grads[ao + j] += d * self.values[bo + j];
                    self.grads[bo + j] += d * self.values[ao + j];
                }
            }
            Op::SumElems(a) => {
                let d = self.grads[offset];
                let (ao, alen) = {
                    let n = &self.nodes[a.0 as usize];
                    (n.offset, n.shape.len())
                };
                for j in 0..alen {
                    self.grads[ao + j] += d;
                }
            }
            Op::BceWithLogitsMean(logits, labels) => {
                let d = self.grads[offset];
                let lo = self.offset_of(*logits);
                let n = labels.len() as f64;
                for (j, y) in labels.iter().enumerate() {
                    let s = self.values[lo + j];
                    self.grads[lo + j] += d * (sigmoid(s) - y) / n;
                }
            }
        }
        self.nodes[i].op = op;
    }

    fn offset_of(&self, var: Var) -> usize {
        self.nodes[var.0 as usize].offset
    }

    fn add_grad_from(&mut self, child: Var, parent_offset: usize, coeff: f64) {
        let (co, clen) = {
            let n = &self.nodes[child.0 as usize];
            (n.offset, n.shape.len())
        };
        for j in 0..clen {
            self.grads[co + j] += coeff * self.grads[parent_offset + j];
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

#[cfg(test)]
mod tests {
    use super::*;

    fn store_with(name: &str, t: Tensor) -> (ParamStore, ParamId) {
        let mut store = ParamStore::new();
        let id = store.add(name, t, true);
        (store, id)
    }

    #[test]
    fn identity_affine_is_identity() {
        let mut store = ParamStore::new();
        let w = store.add(
            "w",
            Tensor::matrix(2, 2, vec![1.0, 0.0, 0.0, 1.0]),
            true,
        );
        let b = store.add("b", Tensor::vector(vec![0.0, 0.0]), true);
        let mut tape = Tape::new();
        let wv = tape.param(&store, w);
        let bv = tape.param(&store, b);
        let x = tape.constant_vector(vec![3.0, -1.5]);
        let y = tape.affine(wv, x, bv);
        assert_eq!(tape.value(y), &[3.0, -1.5]);
    }

    #[test]
    fn sigmoid_of_zero_is_half() {
        let mut tape = Tape::new();
        let x = tape.constant_vector(vec![0.0]);
        let y = tape.sigmoid(x);
        assert_eq!(tape.value(y), &[0.5]);
    }

    #[test]
    fn singleton_softmax_is_one() {
        let mut tape = Tape::new();
        let x = tape.constant_vector(vec![42.0]);
        let y = tape.softmax(x);
        assert_eq!(tape.value(y), &[1.0]);
    }

    #[test]
    fn softmax_sums_to_one() {
        let mut tape = Tape::new();
        let x = tape.constant_vector(vec![1.0, -4.0, 2.5, 0.0, 100.0]);
        let y = tape.softmax(x);
        let total: f64 = tape.value(y).iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert!(tape.value(y).iter().all(|&p| p > 0.0 && p < 1.0 + 1e-12));
    }

    #[test]
    fn grad_of_sum_is_ones() {
        let (mut store, id) = store_with("x", Tensor::vector(vec![1.0, 2.0, 3.0]));
        let mut tape = Tape::new();
        let x = tape.param(&store, id);
        let loss = tape.sum_elems(x);
        tape.backward(loss, &mut store).unwrap();
        assert_eq!(store.get(id).grad.data(), &[1.0, 1.0, 1.0]);
    }

    #[test]
    fn grad_of_dot_with_self_is_twice_x() {
        let (mut store, id) = store_with("x", Tensor::vector(vec![1.0, -2.0, 0.5]));
        let mut tape = Tape::new();
        let x = tape.param(&store, id);
        let loss = tape.dot(x, x);
        tape.backward(loss, &mut store).unwrap();
        assert_eq!(store.get(id).grad.data(), &[2.0, -4.0, 1.0]);
    }

    #[test]
    fn repeated_backward_accumulates_additively() {
        let (mut store, id) = store_with("x", Tensor::vector(vec![1.0, 2.0]));
        let mut tape = Tape::new();
        let x = tape.param(&store, id);
        let loss = tape.sum_elems(x);
        tape.backward(loss, &mut store).unwrap();
        tape.backward(loss, &mut store).unwrap();
        assert_eq!(store.get(id).grad.data(), &[2.0, 2.0]);
    }

    #[test]
    fn non_scalar_loss_is_an_error() {
        let (mut store, id) = store_with("x", Tensor::vector(vec![1.0, 2.0]));
        let mut tape = Tape::new();
        let x = tape.param(&store, id);
        let y = tape.relu(x);
        assert!(matches!(
            tape.backward(y, &mut store),
            Err(TapeError::NonScalarLoss(_))
        ));
    }

    #[test]
    fn bce_at_half_probability_is_ln_two() {
        let mut tape = Tape::new();
        // logit 0 -> p = 0.5 for one positive and one negative label.
        let logits = tape.constant_vector(vec![0.0, 0.0]);
        let loss = tape.bce_with_logits_mean(logits, &[1.0, 0.0]);
        assert!((tape.scalar_value(loss) - std::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    #[should_panic(expected = "shape mismatch")]
    fn shape_mismatch_names_both_shapes() {
        let mut tape = Tape::new();
        let a = tape.constant_vector(vec![1.0, 2.0]);
        let b = tape.constant_vector(vec![1.0, 2.0, 3.0]);
        let _ = tape.add(a, b);
    }

    #[test]
    #[should_panic(expected = "non-finite")]
    fn non_finite_values_trip_a_panic() {
        let mut tape = Tape::new();
        let a = tape.constant_vector(vec![1e308]);
        let b = tape.constant_vector(vec![1e308]);
        let s = tape.add(a, b); // overflows to +inf
        let _ = s;
    }
}
