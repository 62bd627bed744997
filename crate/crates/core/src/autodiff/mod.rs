//! Reverse-mode automatic differentiation over dense matrices.
//!
//! A [`Tape`] records primitive applications in evaluation order; every
//! recorded value is a 2-D matrix. [`Tape::backward`] walks the tape once in
//! reverse and returns the adjoint of every node that the loss depends on.
//!
//! The primitive set is exactly what the encoders, decoders and the loss
//! need: matrix product, sums, scaling, ReLU, sigmoid, constant masks,
//! sparse-times-dense products, row gather, row broadcast, column
//! concatenation and selection, row-wise dot products, reductions and a
//! fused weighted binary cross-entropy on logits.

mod gradcheck;
mod sparse;

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::AddAssign;
use std::sync::Arc;

use ndarray::{s, Array2, ArrayView2, Axis, LinalgScalar, ScalarOperand, Zip};
use num_traits::{Float, FromPrimitive};
use rand::Rng;

use crate::error::{Error, Result};

pub use gradcheck::{grad_check, GradCheckConfig, GradCheckReport, ParamCheck};
pub use sparse::{relation_mean_aggregate, SparseMatrix};

/// Floating point element type of a tape (`f32` for training, `f64` for
/// gradient checks).
pub trait Real:
    LinalgScalar
    + Float
    + FromPrimitive
    + ScalarOperand
    + AddAssign
    + Sum
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    fn from_f64_lossy(x: f64) -> Self {
        Self::from_f64(x).expect("representable float")
    }
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().expect("float converts to f64")
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// A dense matrix whose entries are all finite.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor<T>(Array2<T>);

impl<T: Real> Tensor<T> {
    pub fn new(values: Array2<T>) -> Result<Self> {
        if let Some(bad) = values.iter().find(|x| !x.is_finite()) {
            return Err(Error::NonFinite(format!(
                "tensor of shape {:?} contains {bad}",
                values.dim()
            )));
        }
        Ok(Self(values))
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self(Array2::zeros((rows, cols)))
    }

    pub fn shape(&self) -> (usize, usize) {
        self.0.dim()
    }

    pub fn values(&self) -> &Array2<T> {
        &self.0
    }

    pub fn into_inner(self) -> Array2<T> {
        self.0
    }
}

/// Handle to a value recorded on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

enum Op<T> {
    Leaf,
    Constant,
    MatMul(Var, Var),
    Add(Var, Var),
    AddN(Vec<Var>),
    Scale(Var, T),
    Relu(Var),
    Sigmoid(Var),
    Mask(Var, Arc<Array2<T>>),
    Spmm(Arc<SparseMatrix<T>>, Var),
    Gather(Var, Arc<Vec<usize>>),
    Broadcast(Var),
    ConcatCols(Vec<Var>),
    ConcatRows(Vec<Var>),
    SelectCols(Var, Arc<Vec<usize>>),
    RowDot(Var, Var),
    SumAll(Var),
    MeanAll(Var),
    Bce {
        logits: Var,
        labels: Arc<Vec<T>>,
        weights: Arc<Vec<T>>,
    },
}

struct Node<T> {
    value: Array2<T>,
    op: Op<T>,
}

/// Recorded computation.
pub struct Tape<T: Real> {
    nodes: Vec<Node<T>>,
}

impl<T: Real> Default for Tape<T> {
    fn default() -> Self {
        Self::new()
    }
}

fn shape_err(op: &'static str, detail: String) -> Error {
    Error::Shape { op, detail }
}

impl<T: Real> Tape<T> {
    pub fn new() -> Self {
        Self { nodes: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, value: Array2<T>, op: Op<T>) -> Var {
        self.nodes.push(Node { value, op });
        Var(self.nodes.len() - 1)
    }

    /// Records an input (parameter or data).
    pub fn leaf(&mut self, t: Tensor<T>) -> Var {
        self.push(t.0, Op::Leaf)
    }

    /// Records an input without the finiteness check.
    pub fn leaf_array(&mut self, a: Array2<T>) -> Var {
        self.push(a, Op::Leaf)
    }

    /// Records data that never needs a gradient. Products involving it skip
    /// the corresponding half of their backward pass.
    pub fn constant(&mut self, a: Array2<T>) -> Var {
        self.push(a, Op::Constant)
    }

    fn is_constant(&self, v: Var) -> bool {
        matches!(self.nodes[v.0].op, Op::Constant)
    }

    pub fn value(&self, v: Var) -> &Array2<T> {
        &self.nodes[v.0].value
    }

    pub fn shape(&self, v: Var) -> (usize, usize) {
        self.nodes[v.0].value.dim()
    }

    /// The single entry of a `1 x 1` value.
    pub fn scalar(&self, v: Var) -> T {
        self.nodes[v.0].value[[0, 0]]
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (sa, sb) = (self.shape(a), self.shape(b));
        if sa.1 != sb.0 {
            return Err(shape_err("matmul", format!("{sa:?} x {sb:?}")));
        }
        let out = self.value(a).dot(self.value(b));
        Ok(self.push(out, Op::MatMul(a, b)))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        if self.shape(a) != self.shape(b) {
            return Err(shape_err(
                "add",
                format!("{:?} + {:?}", self.shape(a), self.shape(b)),
            ));
        }
        let out = self.value(a) + self.value(b);
        Ok(self.push(out, Op::Add(a, b)))
    }

    /// Sum of one or more equally shaped values.
    pub fn add_n(&mut self, terms: &[Var]) -> Result<Var> {
        let first = *terms
            .first()
            .ok_or_else(|| shape_err("add_n", "no terms".into()))?;
        if terms.len() == 1 {
            return Ok(first);
        }
        let shape = self.shape(first);
        let mut out = self.value(first).clone();
        for &t in &terms[1..] {
            if self.shape(t) != shape {
                return Err(shape_err("add_n", format!("{shape:?} vs {:?}", self.shape(t))));
            }
            out += self.value(t);
        }
        Ok(self.push(out, Op::AddN(terms.to_vec())))
    }

    pub fn scale(&mut self, a: Var, c: T) -> Var {
        let out = self.value(a) * c;
        self.push(out, Op::Scale(a, c))
    }

    pub fn relu(&mut self, a: Var) -> Var {
        let out = self.value(a).mapv(|x| if x > T::zero() { x } else { T::zero() });
        self.push(out, Op::Relu(a))
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        let out = self.value(a).mapv(sigmoid);
        self.push(out, Op::Sigmoid(a))
    }

    /// Elementwise product with a constant matrix.
    pub fn mask(&mut self, a: Var, mask: Arc<Array2<T>>) -> Result<Var> {
        if self.shape(a) != mask.dim() {
            return Err(shape_err(
                "mask",
                format!("{:?} vs mask {:?}", self.shape(a), mask.dim()),
            ));
        }
        let out = self.value(a) * &*mask;
        Ok(self.push(out, Op::Mask(a, mask)))
    }

    /// Inverted dropout: in training mode each entry is zeroed with
    /// probability `p` and survivors are scaled by `1 / (1 - p)`; otherwise
    /// the identity.
    pub fn dropout<R: Rng + ?Sized>(
        &mut self,
        a: Var,
        p: f64,
        training: bool,
        rng: &mut R,
    ) -> Result<Var> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidArgument(format!(
                "dropout probability {p} outside [0, 1]"
            )));
        }
        if !training || p == 0.0 {
            return Ok(a);
        }
        if p >= 1.0 {
            return Err(Error::InvalidArgument(
                "feature dropout requires p < 1 in training mode".into(),
            ));
        }
        let (r, c) = self.shape(a);
        let keep = T::from_f64_lossy(1.0 / (1.0 - p));
        let mask = Array2::from_shape_simple_fn((r, c), || {
            if rng.random::<f64>() < p {
                T::zero()
            } else {
                keep
            }
        });
        self.mask(a, Arc::new(mask))
    }

    /// `S · x` for a constant sparse `S`.
    pub fn spmm(&mut self, s: Arc<SparseMatrix<T>>, x: Var) -> Result<Var> {
        if s.ncols() != self.shape(x).0 {
            return Err(shape_err(
                "spmm",
                format!("sparse {}x{} times {:?}", s.nrows(), s.ncols(), self.shape(x)),
            ));
        }
        let out = s.mul_dense(self.value(x).view());
        Ok(self.push(out, Op::Spmm(s, x)))
    }

    /// Rows `idx` of `a`, in order, repetitions allowed.
    pub fn gather_rows(&mut self, a: Var, idx: Arc<Vec<usize>>) -> Result<Var> {
        let n = self.shape(a).0;
        if let Some(&bad) = idx.iter().find(|&&i| i >= n) {
            return Err(Error::IndexOutOfRange(format!("row {bad} of {n}")));
        }
        let out = self.value(a).select(Axis(0), &idx);
        Ok(self.push(out, Op::Gather(a, idx)))
    }

    /// Repeats a `1 x d` row `n` times.
    pub fn broadcast_rows(&mut self, a: Var, n: usize) -> Result<Var> {
        let (r, c) = self.shape(a);
        if r != 1 {
            return Err(shape_err("broadcast_rows", format!("expected 1 row, got {r}")));
        }
        let out = self
            .value(a)
            .broadcast((n, c))
            .expect("1-row broadcast")
            .to_owned();
        Ok(self.push(out, Op::Broadcast(a)))
    }

    pub fn concat_cols(&mut self, parts: &[Var]) -> Result<Var> {
        if parts.is_empty() {
            return Err(shape_err("concat_cols", "no parts".into()));
        }
        if parts.len() == 1 {
            return Ok(parts[0]);
        }
        let rows = self.shape(parts[0]).0;
        if parts.iter().any(|&p| self.shape(p).0 != rows) {
            return Err(shape_err("concat_cols", "row counts differ".into()));
        }
        let views: Vec<ArrayView2<T>> = parts.iter().map(|&p| self.value(p).view()).collect();
        let out = ndarray::concatenate(Axis(1), &views).expect("checked shapes");
        Ok(self.push(out, Op::ConcatCols(parts.to_vec())))
    }

    pub fn concat_rows(&mut self, parts: &[Var]) -> Result<Var> {
        if parts.is_empty() {
            return Err(shape_err("concat_rows", "no parts".into()));
        }
        if parts.len() == 1 {
            return Ok(parts[0]);
        }
        let cols = self.shape(parts[0]).1;
        if parts.iter().any(|&p| self.shape(p).1 != cols) {
            return Err(shape_err("concat_rows", "column counts differ".into()));
        }
        let views: Vec<ArrayView2<T>> = parts.iter().map(|&p| self.value(p).view()).collect();
        let out = ndarray::concatenate(Axis(0), &views).expect("checked shapes");
        Ok(self.push(out, Op::ConcatRows(parts.to_vec())))
    }

    /// Columns `cols` of `a`, in order.
    pub fn select_cols(&mut self, a: Var, cols: Arc<Vec<usize>>) -> Result<Var> {
        let n = self.shape(a).1;
        if let Some(&bad) = cols.iter().find(|&&i| i >= n) {
            return Err(Error::IndexOutOfRange(format!("column {bad} of {n}")));
        }
        let out = self.value(a).select(Axis(1), &cols);
        Ok(self.push(out, Op::SelectCols(a, cols)))
    }

    /// Row-wise dot product: `n x d`, `n x d` -> `n x 1`.
    pub fn row_dot(&mut self, a: Var, b: Var) -> Result<Var> {
        if self.shape(a) != self.shape(b) {
            return Err(shape_err(
                "row_dot",
                format!("{:?} . {:?}", self.shape(a), self.shape(b)),
            ));
        }
        let prod = self.value(a) * self.value(b);
        let out = prod.sum_axis(Axis(1)).insert_axis(Axis(1));
        Ok(self.push(out, Op::RowDot(a, b)))
    }

    pub fn sum(&mut self, a: Var) -> Var {
        let out = Array2::from_elem((1, 1), self.value(a).sum());
        self.push(out, Op::SumAll(a))
    }

    pub fn mean(&mut self, a: Var) -> Result<Var> {
        let n = self.value(a).len();
        if n == 0 {
            return Err(shape_err("mean", "empty value".into()));
        }
        let out = Array2::from_elem((1, 1), self.value(a).sum() / T::from_usize(n).unwrap());
        Ok(self.push(out, Op::MeanAll(a)))
    }

    /// `Σ_i w_i · [softplus(s_i) − y_i · s_i]`, the weighted binary
    /// cross-entropy of logits `s` (an `n x 1` column) against labels `y`.
    pub fn bce_with_logits(
        &mut self,
        logits: Var,
        labels: Arc<Vec<T>>,
        weights: Arc<Vec<T>>,
    ) -> Result<Var> {
        let (n, c) = self.shape(logits);
        if c != 1 || labels.len() != n || weights.len() != n {
            return Err(shape_err(
                "bce_with_logits",
                format!("logits {n}x{c}, {} labels, {} weights", labels.len(), weights.len()),
            ));
        }
        let s = self.value(logits);
        let mut total = T::zero();
        for i in 0..n {
            let x = s[[i, 0]];
            if !x.is_finite() {
                return Err(Error::NonFinite(format!("logit {i} is {x}")));
            }
            total += weights[i] * (softplus(x) - labels[i] * x);
        }
        let out = Array2::from_elem((1, 1), total);
        Ok(self.push(
            out,
            Op::Bce {
                logits,
                labels,
                weights,
            },
        ))
    }

    /// Adjoints of every node with respect to the `1 x 1` value `loss`.
    pub fn backward(&self, loss: Var) -> Result<Gradients<T>> {
        if self.shape(loss) != (1, 1) {
            return Err(shape_err(
                "backward",
                format!("loss must be 1x1, got {:?}", self.shape(loss)),
            ));
        }
        let mut grads: Vec<Option<Array2<T>>> = vec![None; loss.0 + 1];
        grads[loss.0] = Some(Array2::from_elem((1, 1), T::one()));
        for i in (0..=loss.0).rev() {
            let node = &self.nodes[i];
            if matches!(node.op, Op::Leaf | Op::Constant) {
                continue;
            }
            let Some(g) = grads[i].take() else { continue };
            self.propagate(node, &g, &mut grads);
        }
        Ok(Gradients { grads })
    }

    fn propagate(&self, node: &Node<T>, g: &Array2<T>, grads: &mut [Option<Array2<T>>]) {
        let val = |v: Var| &self.nodes[v.0].value;
        match &node.op {
            Op::Leaf | Op::Constant => {}
            Op::MatMul(a, b) => {
                if !self.is_constant(*a) {
                    accumulate(grads, *a, g.dot(&val(*b).t()));
                }
                if !self.is_constant(*b) {
                    accumulate(grads, *b, val(*a).t().dot(g));
                }
            }
            Op::Add(a, b) => {
                accumulate(grads, *a, g.clone());
                accumulate(grads, *b, g.clone());
            }
            Op::AddN(terms) => {
                for &t in terms {
                    accumulate(grads, t, g.clone());
                }
            }
            Op::Scale(a, c) => accumulate(grads, *a, g * *c),
            Op::Relu(a) => {
                let mut d = g.clone();
                Zip::from(&mut d).and(val(*a)).for_each(|d, &x| {
                    if x <= T::zero() {
                        *d = T::zero();
                    }
                });
                accumulate(grads, *a, d);
            }
            Op::Sigmoid(a) => {
                let mut d = g.clone();
                Zip::from(&mut d)
                    .and(&node.value)
                    .for_each(|d, &y| *d = *d * y * (T::one() - y));
                accumulate(grads, *a, d);
            }
            Op::Mask(a, m) => accumulate(grads, *a, g * &**m),
            Op::Spmm(s, x) => {
                if !self.is_constant(*x) {
                    accumulate(grads, *x, s.transpose_mul_dense(g.view()));
                }
            }
            Op::Gather(a, idx) => {
                let mut d = Array2::zeros(val(*a).dim());
                for (k, &i) in idx.iter().enumerate() {
                    let mut row = d.row_mut(i);
                    row += &g.row(k);
                }
                accumulate(grads, *a, d);
            }
            Op::Broadcast(a) => {
                accumulate(grads, *a, g.sum_axis(Axis(0)).insert_axis(Axis(0)));
            }
            Op::ConcatCols(parts) => {
                let mut start = 0;
                for &p in parts {
                    let w = val(p).ncols();
                    accumulate(grads, p, g.slice(s![.., start..start + w]).to_owned());
                    start += w;
                }
            }
            Op::ConcatRows(parts) => {
                let mut start = 0;
                for &p in parts {
                    let h = val(p).nrows();
                    accumulate(grads, p, g.slice(s![start..start + h, ..]).to_owned());
                    start += h;
                }
            }
            Op::SelectCols(a, cols) => {
                let mut d = Array2::zeros(val(*a).dim());
                for (k, &c) in cols.iter().enumerate() {
                    let mut col = d.column_mut(c);
                    col += &g.column(k);
                }
                accumulate(grads, *a, d);
            }
            Op::RowDot(a, b) => {
                let gcol = g.column(0).insert_axis(Axis(1));
                accumulate(grads, *a, val(*b) * &gcol);
                accumulate(grads, *b, val(*a) * &gcol);
            }
            Op::SumAll(a) => {
                accumulate(grads, *a, Array2::from_elem(val(*a).dim(), g[[0, 0]]));
            }
            Op::MeanAll(a) => {
                let n = T::from_usize(val(*a).len()).unwrap();
                accumulate(grads, *a, Array2::from_elem(val(*a).dim(), g[[0, 0]] / n));
            }
            Op::Bce {
                logits,
                labels,
                weights,
            } => {
                let s = val(*logits);
                let up = g[[0, 0]];
                let d = Array2::from_shape_fn(s.dim(), |(i, _)| {
                    up * weights[i] * (sigmoid(s[[i, 0]]) - labels[i])
                });
                accumulate(grads, *logits, d);
            }
        }
    }
}

fn accumulate<T: Real>(grads: &mut [Option<Array2<T>>], v: Var, d: Array2<T>) {
    match &mut grads[v.0] {
        Some(acc) => *acc += &d,
        slot @ None => *slot = Some(d),
    }
}

pub fn sigmoid<T: Real>(x: T) -> T {
    if x >= T::zero() {
        T::one() / (T::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (T::one() + e)
    }
}

/// `ln(1 + e^x)` without overflow.
pub fn softplus<T: Real>(x: T) -> T {
    x.max(T::zero()) + (-x.abs()).exp().ln_1p()
}

/// Adjoints produced by [`Tape::backward`].
pub struct Gradients<T> {
    grads: Vec<Option<Array2<T>>>,
}

impl<T: Real> Gradients<T> {
    /// Gradient of the loss with respect to `v`; `None` if the loss does not
    /// depend on it.
    pub fn get(&self, v: Var) -> Option<&Array2<T>> {
        self.grads.get(v.0).and_then(Option::as_ref)
    }

    /// Gradient with zeros substituted for unreachable values.
    pub fn get_or_zeros(&self, v: Var, shape: (usize, usize)) -> Array2<T> {
        self.get(v).cloned().unwrap_or_else(|| Array2::zeros(shape))
    }
}
