//! Reverse-mode differentiation over a linear record of tensor ops.

use super::params::{ParamId, ParamSet};
use super::tensor::Tensor;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Handle to a value recorded on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(usize);

#[derive(Debug, Clone)]
enum Op<T> {
    Constant,
    Param(ParamId),
    MatMul(Var, Var),
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    AddRow(Var, Var),
    MulCol(Var, Var),
    Scale(Var, T),
    Tanh(Var),
    Relu(Var),
    Square(Var),
    SoftmaxRows(Var),
    ConcatCols(Var, Var),
    SliceCols(Var, usize),
    MeanRows(Var),
    Sum(Var),
}

#[derive(Debug, Clone)]
struct Node<T> {
    value: Tensor<T>,
    op: Op<T>,
}

#[derive(Debug, Clone, Default)]
pub struct Tape<T> {
    nodes: Vec<Node<T>>,
}

/// Adjoints of every recorded value with respect to one scalar output.
#[derive(Debug, Clone)]
pub struct Gradients<T> {
    adjoints: Vec<Option<Tensor<T>>>,
    params: Vec<(Var, ParamId)>,
}

impl<T: Scalar> Gradients<T> {
    /// Adjoint of `v`; `None` if the output does not depend on it.
    pub fn get(&self, v: Var) -> Option<&Tensor<T>> {
        self.adjoints.get(v.0).and_then(Option::as_ref)
    }

    /// Overwrites the gradient slots of `params`. Parameters the output does
    /// not reach get zero.
    pub fn write_to(&self, params: &mut ParamSet<T>) {
        params.zero_grad();
        self.accumulate_into(params);
    }

    pub fn accumulate_into(&self, params: &mut ParamSet<T>) {
        for (var, id) in &self.params {
            if let Some(g) = self.get(*var) {
                params.grad_mut(*id).add_assign(g);
            }
        }
    }
}

impl<T: Scalar> Tape<T> {
    pub fn new() -> Self {
        Self { nodes: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn clear(&mut self) {
        self.nodes.clear();
    }

    pub fn value(&self, v: Var) -> &Tensor<T> {
        &self.nodes[v.0].value
    }

    fn push(&mut self, value: Tensor<T>, op: Op<T>) -> Var {
        self.nodes.push(Node { value, op });
        Var(self.nodes.len() - 1)
    }

    /// A value that receives an adjoint but no parameter gradient.
    pub fn constant(&mut self, value: Tensor<T>) -> Var {
        self.push(value, Op::Constant)
    }

    pub fn param(&mut self, params: &ParamSet<T>, id: ParamId) -> Var {
        self.push(params.value(id).clone(), Op::Param(id))
    }

    /// Records a parameter either as trainable or frozen.
    pub fn weight(&mut self, params: &ParamSet<T>, id: ParamId, trainable: bool) -> Var {
        if trainable {
            self.param(params, id)
        } else {
            self.constant(params.value(id).clone())
        }
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let v = self.value(a).matmul(self.value(b))?;
        Ok(self.push(v, Op::MatMul(a, b)))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        let v = self.value(a).zip_map(self.value(b), "add", |x, y| x + y)?;
        Ok(self.push(v, Op::Add(a, b)))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        let v = self.value(a).zip_map(self.value(b), "sub", |x, y| x - y)?;
        Ok(self.push(v, Op::Sub(a, b)))
    }

    /// Elementwise product.
    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        let v = self.value(a).zip_map(self.value(b), "mul", |x, y| x * y)?;
        Ok(self.push(v, Op::Mul(a, b)))
    }

    /// `a + 1 bias^T`: adds a `1 x c` row to every row of `a`.
    pub fn add_row(&mut self, a: Var, bias: Var) -> Result<Var> {
        let v = self.value(a).add_row(self.value(bias))?;
        Ok(self.push(v, Op::AddRow(a, bias)))
    }

    /// Scales row `i` of `a` by `col[i]`, `col` being `r x 1`.
    pub fn mul_col(&mut self, a: Var, col: Var) -> Result<Var> {
        let (x, c) = (self.value(a), self.value(col));
        if c.cols() != 1 || c.rows() != x.rows() {
            return Err(Error::shape(
                "mul_col",
                format!("column {:?} for {:?}", c.shape(), x.shape()),
            ));
        }
        let mut v = x.clone();
        let cols = x.cols();
        for (i, s) in c.data().iter().enumerate() {
            for e in &mut v.data_mut()[i * cols..(i + 1) * cols] {
                *e = *e * *s;
            }
        }
        Ok(self.push(v, Op::MulCol(a, col)))
    }

    pub fn scale(&mut self, a: Var, s: T) -> Var {
        let v = self.value(a).map(|x| x * s);
        self.push(v, Op::Scale(a, s))
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        let v = self.value(a).map(T::tanh);
        self.push(v, Op::Tanh(a))
    }

    pub fn relu(&mut self, a: Var) -> Var {
        let v = self.value(a).map(|x| x.max(T::zero()));
        self.push(v, Op::Relu(a))
    }

    pub fn square(&mut self, a: Var) -> Var {
        let v = self.value(a).map(|x| x * x);
        self.push(v, Op::Square(a))
    }

    pub fn softmax_rows(&mut self, a: Var) -> Var {
        let v = self.value(a).softmax_rows();
        self.push(v, Op::SoftmaxRows(a))
    }

    pub fn concat_cols(&mut self, a: Var, b: Var) -> Result<Var> {
        let v = self.value(a).concat_cols(self.value(b))?;
        Ok(self.push(v, Op::ConcatCols(a, b)))
    }

    pub fn slice_cols(&mut self, a: Var, start: usize, len: usize) -> Result<Var> {
        let v = self.value(a).slice_cols(start, len)?;
        Ok(self.push(v, Op::SliceCols(a, start)))
    }

    /// Mean over rows, giving `1 x c`.
    pub fn mean_rows(&mut self, a: Var) -> Result<Var> {
        let x = self.value(a);
        if x.rows() == 0 {
            return Err(Error::shape("mean_rows", "no rows"));
        }
        let n = T::of(x.rows() as f64);
        let v = x.sum_rows().map(|s| s / n);
        Ok(self.push(v, Op::MeanRows(a)))
    }

    pub fn sum(&mut self, a: Var) -> Var {
        let v = Tensor::scalar(self.value(a).sum());
        self.push(v, Op::Sum(a))
    }

    /// Adjoints of every recorded value with respect to the scalar `root`.
    pub fn backward(&self, root: Var) -> Result<Gradients<T>> {
        if self.nodes.is_empty() || root.0 >= self.nodes.len() {
            return Err(Error::NoForward);
        }
        if self.value(root).shape() != [1, 1] {
            return Err(Error::shape(
                "backward",
                format!("root must be 1x1, got {:?}", self.value(root).shape()),
            ));
        }
        let mut adj: Vec<Option<Tensor<T>>> = vec![None; root.0 + 1];
        adj[root.0] = Some(Tensor::scalar(T::one()));
        let mut params = Vec::new();

        fn acc<T: Scalar>(adj: &mut [Option<Tensor<T>>], v: Var, g: Tensor<T>) {
            match &mut adj[v.0] {
                Some(a) => a.add_assign(&g),
                slot => *slot = Some(g),
            }
        }

        for i in (0..=root.0).rev() {
            let Some(g) = adj[i].take() else { continue };
            let node = &self.nodes[i];
            match &node.op {
                Op::Constant => {}
                Op::Param(id) => params.push((Var(i), *id)),
                Op::MatMul(a, b) => {
                    let da = g.matmul(&self.value(*b).transpose())?;
                    let db = self.value(*a).transpose().matmul(&g)?;
                    acc(&mut adj, *a, da);
                    acc(&mut adj, *b, db);
                }
                Op::Add(a, b) => {
                    acc(&mut adj, *a, g.clone());
                    acc(&mut adj, *b, g.clone());
                }
                Op::Sub(a, b) => {
                    acc(&mut adj, *a, g.clone());
                    acc(&mut adj, *b, g.map(|x| -x));
                }
                Op::Mul(a, b) => {
                    let da = g.zip_map(self.value(*b), "mul", |x, y| x * y)?;
                    let db = g.zip_map(self.value(*a), "mul", |x, y| x * y)?;
                    acc(&mut adj, *a, da);
                    acc(&mut adj, *b, db);
                }
                Op::AddRow(a, bias) => {
                    acc(&mut adj, *bias, g.sum_rows());
                    acc(&mut adj, *a, g.clone());
                }
                Op::MulCol(a, col) => {
                    let x = self.value(*a);
                    let c = self.value(*col);
                    let cols = x.cols();
                    let mut da = g.clone();
                    let mut dc = Tensor::zeros(c.rows(), 1);
                    for r in 0..x.rows() {
                        let s = c.get(r, 0);
                        let mut dot = T::zero();
                        for k in 0..cols {
                            dot = dot + g.get(r, k) * x.get(r, k);
                            da.set(r, k, g.get(r, k) * s);
                        }
                        dc.set(r, 0, dot);
                    }
                    acc(&mut adj, *a, da);
                    acc(&mut adj, *col, dc);
                }
                Op::Scale(a, s) => {
                    let s = *s;
                    acc(&mut adj, *a, g.map(|x| x * s));
                }
                Op::Tanh(a) => {
                    let d = g.zip_map(&node.value, "tanh", |g, y| g * (T::one() - y * y))?;
                    acc(&mut adj, *a, d);
                }
                Op::Relu(a) => {
                    let d = g.zip_map(self.value(*a), "relu", |g, x| {
                        if x > T::zero() {
                            g
                        } else {
                            T::zero()
                        }
                    })?;
                    acc(&mut adj, *a, d);
                }
                Op::Square(a) => {
                    let two = T::of(2.0);
                    let d = g.zip_map(self.value(*a), "square", |g, x| two * g * x)?;
                    acc(&mut adj, *a, d);
                }
                Op::SoftmaxRows(a) => {
                    let y = &node.value;
                    let mut d = Tensor::zeros(y.rows(), y.cols());
                    for r in 0..y.rows() {
                        let dot = g
                            .row(r)
                            .iter()
                            .zip(y.row(r))
                            .fold(T::zero(), |s, (g, y)| s + *g * *y);
                        for c in 0..y.cols() {
                            d.set(r, c, y.get(r, c) * (g.get(r, c) - dot));
                        }
                    }
                    acc(&mut adj, *a, d);
                }
                Op::ConcatCols(a, b) => {
                    let ca = self.value(*a).cols();
                    let cb = self.value(*b).cols();
                    acc(&mut adj, *a, g.slice_cols(0, ca)?);
                    acc(&mut adj, *b, g.slice_cols(ca, cb)?);
                }
                Op::SliceCols(a, start) => {
                    let x = self.value(*a);
                    let mut d = Tensor::zeros(x.rows(), x.cols());
                    for r in 0..g.rows() {
                        for c in 0..g.cols() {
                            d.set(r, start + c, g.get(r, c));
                        }
                    }
                    acc(&mut adj, *a, d);
                }
                Op::MeanRows(a) => {
                    let x = self.value(*a);
                    let n = T::of(x.rows() as f64);
                    let mut d = Tensor::zeros(x.rows(), x.cols());
                    for r in 0..x.rows() {
                        for c in 0..x.cols() {
                            d.set(r, c, g.get(0, c) / n);
                        }
                    }
                    acc(&mut adj, *a, d);
                }
                Op::Sum(a) => {
                    let x = self.value(*a);
                    acc(&mut adj, *a, Tensor::filled(x.rows(), x.cols(), g.item()));
                }
            }
            adj[i] = Some(g);
        }
        Ok(Gradients {
            adjoints: adj,
            params,
        })
    }
}
