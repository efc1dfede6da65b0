use rand::Rng;

use super::params::{ParamId, ParamSet};
use super::tape::{Tape, Var};
use super::tensor::Tensor;
use crate::error::{Error, Result};
use crate::network::Adjacency;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Tanh,
    Identity,
}

impl Activation {
    pub fn apply<T: Scalar>(self, x: T) -> T {
        match self {
            Activation::Relu => x.max(T::zero()),
            Activation::Tanh => x.tanh(),
            Activation::Identity => x,
        }
    }

    pub fn record<T: Scalar>(self, tape: &mut Tape<T>, x: Var) -> Var {
        match self {
            Activation::Relu => tape.relu(x),
            Activation::Tanh => tape.tanh(x),
            Activation::Identity => x,
        }
    }
}

/// `D^-1/2 (A + I) D^-1/2` with `D` the degree matrix of `A + I`.
pub fn normalized_adjacency<T: Scalar>(adj: &Adjacency) -> Result<Tensor<T>> {
    if !adj.is_symmetric() {
        return Err(Error::invalid("adjacency must be symmetric"));
    }
    if adj.has_self_loops() {
        return Err(Error::invalid("adjacency must have a zero diagonal"));
    }
    let n = adj.len();
    let deg: Vec<f64> = (0..n)
        .map(|i| 1.0 + adj.neighbors(i).count() as f64)
        .collect();
    let mut out = Tensor::zeros(n, n);
    for i in 0..n {
        out.set(i, i, T::of(1.0 / deg[i]));
        for j in adj.neighbors(i) {
            out.set(i, j, T::of(1.0 / (deg[i] * deg[j]).sqrt()));
        }
    }
    Ok(out)
}

/// `act(a_norm * f * w)`.
pub fn gcn_forward<T: Scalar>(
    w: &Tensor<T>,
    act: Activation,
    a_norm: &Tensor<T>,
    f: &Tensor<T>,
) -> Result<Tensor<T>> {
    if a_norm.rows() != a_norm.cols() || a_norm.cols() != f.rows() {
        return Err(Error::shape(
            "gcn_forward",
            format!(
                "adjacency {:?} for features {:?}",
                a_norm.shape(),
                f.shape()
            ),
        ));
    }
    Ok(a_norm.matmul(f)?.matmul(w)?.map(|v| act.apply(v)))
}

/// `act(x * w + b)` applied row-wise.
pub fn fc_forward<T: Scalar>(
    w: &Tensor<T>,
    b: &Tensor<T>,
    x: &Tensor<T>,
    act: Activation,
) -> Result<Tensor<T>> {
    Ok(x.matmul(w)?.add_row(b)?.map(|v| act.apply(v)))
}

/// Softmax of a vector.
pub fn softmax<T: Scalar>(x: &[T]) -> Vec<T> {
    Tensor::from_vec(1, x.len(), x.to_vec())
        .expect("sized by construction")
        .softmax_rows()
        .into_data()
}

/// Fully-connected layer over per-node feature rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Dense {
    pub w: ParamId,
    pub b: ParamId,
    pub act: Activation,
    pub in_dim: usize,
    pub out_dim: usize,
}

impl Dense {
    pub fn new<T: Scalar, R: Rng + ?Sized>(
        params: &mut ParamSet<T>,
        name: &str,
        in_dim: usize,
        out_dim: usize,
        act: Activation,
        rng: &mut R,
    ) -> Self {
        let w = params.add_xavier(format!("{name}.w"), in_dim, out_dim, rng);
        let b = params.add(format!("{name}.b"), Tensor::zeros(1, out_dim));
        Self {
            w,
            b,
            act,
            in_dim,
            out_dim,
        }
    }

    pub fn forward<T: Scalar>(&self, params: &ParamSet<T>, x: &Tensor<T>) -> Result<Tensor<T>> {
        fc_forward(params.value(self.w), params.value(self.b), x, self.act)
    }

    pub fn record<T: Scalar>(
        &self,
        tape: &mut Tape<T>,
        params: &ParamSet<T>,
        x: Var,
        trainable: bool,
    ) -> Result<Var> {
        let w = tape.weight(params, self.w, trainable);
        let b = tape.weight(params, self.b, trainable);
        let xw = tape.matmul(x, w)?;
        let z = tape.add_row(xw, b)?;
        Ok(self.act.record(tape, z))
    }
}

/// Graph convolution without bias; the weight is shared by every node, so
/// its size does not depend on the graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GcnLayer {
    pub w: ParamId,
    pub act: Activation,
    pub in_dim: usize,
    pub out_dim: usize,
}

impl GcnLayer {
    pub fn new<T: Scalar, R: Rng + ?Sized>(
        params: &mut ParamSet<T>,
        name: &str,
        in_dim: usize,
        out_dim: usize,
        act: Activation,
        rng: &mut R,
    ) -> Self {
        let w = params.add_xavier(format!("{name}.w"), in_dim, out_dim, rng);
        Self {
            w,
            act,
            in_dim,
            out_dim,
        }
    }

    pub fn forward<T: Scalar>(
        &self,
        params: &ParamSet<T>,
        a_norm: &Tensor<T>,
        f: &Tensor<T>,
    ) -> Result<Tensor<T>> {
        gcn_forward(params.value(self.w), self.act, a_norm, f)
    }

    pub fn record<T: Scalar>(
        &self,
        tape: &mut Tape<T>,
        params: &ParamSet<T>,
        a_norm: Var,
        f: Var,
        trainable: bool,
    ) -> Result<Var> {
        let w = tape.weight(params, self.w, trainable);
        let af = tape.matmul(a_norm, f)?;
        let z = tape.matmul(af, w)?;
        Ok(self.act.record(tape, z))
    }
}
