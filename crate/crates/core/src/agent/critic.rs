use rand::Rng;

use crate::env::ActionRatios;
use crate::error::{Error, Result};
use crate::network::Adjacency;
use crate::nn::{normalized_adjacency, Activation, Dense, GcnLayer, ParamSet, Tape, Tensor, Var};
use crate::scalar::Scalar;

/// One input branch: per-node FC, then a graph convolution.
#[derive(Debug, Clone, Copy)]
struct Branch {
    fc: Dense,
    gcn: GcnLayer,
}

impl Branch {
    fn new<T: Scalar, R: Rng + ?Sized>(
        p: &mut ParamSet<T>,
        name: &str,
        input: usize,
        hidden: usize,
        rng: &mut R,
    ) -> Self {
        Self {
            fc: Dense::new(
                p,
                &format!("{name}.fc"),
                input,
                hidden,
                Activation::Relu,
                rng,
            ),
            gcn: GcnLayer::new(
                p,
                &format!("{name}.gcn"),
                hidden,
                hidden,
                Activation::Relu,
                rng,
            ),
        }
    }

    fn record<T: Scalar>(
        &self,
        tape: &mut Tape<T>,
        p: &ParamSet<T>,
        a_norm: Var,
        x: Var,
        trainable: bool,
    ) -> Result<Var> {
        let h = self.fc.record(tape, p, x, trainable)?;
        self.gcn.record(tape, p, a_norm, h, trainable)
    }
}

/// State, power and sub-array branches, concatenated per node, averaged
/// over nodes, then a shared two-layer head to a scalar Q.
#[derive(Debug, Clone)]
pub struct Critic<T> {
    params: ParamSet<T>,
    features: usize,
    bands: usize,
    state: Branch,
    power: Branch,
    subarray: Branch,
    shared: Dense,
    out: Dense,
}

impl<T: Scalar> Critic<T> {
    pub fn new<R: Rng + ?Sized>(features: usize, bands: usize, hidden: usize, rng: &mut R) -> Self {
        let mut p = ParamSet::new();
        let state = Branch::new(&mut p, "critic.state", features, hidden, rng);
        let power = Branch::new(&mut p, "critic.power", bands, hidden, rng);
        let subarray = Branch::new(&mut p, "critic.sub", 2, hidden, rng);
        let shared = Dense::new(
            &mut p,
            "critic.shared",
            3 * hidden,
            hidden,
            Activation::Relu,
            rng,
        );
        let out = Dense::new(&mut p, "critic.out", hidden, 1, Activation::Identity, rng);
        Self {
            params: p,
            features,
            bands,
            state,
            power,
            subarray,
            shared,
            out,
        }
    }

    pub fn params(&self) -> &ParamSet<T> {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParamSet<T> {
        &mut self.params
    }

    /// Records `Q(s, a)` as a `1 x 1` value.
    pub fn record(
        &self,
        tape: &mut Tape<T>,
        a_norm: Var,
        x: Var,
        power: Var,
        subarray: Var,
        trainable: bool,
    ) -> Result<Var> {
        let (xs, ps, ss) = (
            tape.value(x).shape(),
            tape.value(power).shape(),
            tape.value(subarray).shape(),
        );
        if xs[1] != self.features
            || ps[1] != self.bands
            || ss[1] != 2
            || ps[0] != xs[0]
            || ss[0] != xs[0]
        {
            return Err(Error::shape(
                "critic",
                format!("state {xs:?}, power {ps:?}, sub-array {ss:?}"),
            ));
        }
        let p = &self.params;
        let hs = self.state.record(tape, p, a_norm, x, trainable)?;
        let hp = self.power.record(tape, p, a_norm, power, trainable)?;
        let ha = self.subarray.record(tape, p, a_norm, subarray, trainable)?;
        let cat = tape.concat_cols(hs, hp)?;
        let cat = tape.concat_cols(cat, ha)?;
        let pooled = tape.mean_rows(cat)?;
        let h = self.shared.record(tape, p, pooled, trainable)?;
        self.out.record(tape, p, h, trainable)
    }

    pub fn q(&self, features: &Tensor<T>, graph: &Adjacency, action: &ActionRatios) -> Result<T> {
        let mut tape = Tape::new();
        let a = tape.constant(normalized_adjacency(graph)?);
        let x = tape.constant(features.clone());
        let (pw, sa) = ratio_tensors(action)?;
        let pw = tape.constant(pw);
        let sa = tape.constant(sa);
        let q = self.record(&mut tape, a, x, pw, sa, false)?;
        Ok(tape.value(q).item())
    }
}

/// Power (`N x K`) and sub-array (`N x 2`) ratio matrices.
pub fn ratio_tensors<T: Scalar>(action: &ActionRatios) -> Result<(Tensor<T>, Tensor<T>)> {
    let n = action.len();
    let k = action.power.first().map_or(0, Vec::len);
    let power = Tensor::from_vec(
        n,
        k,
        action.power.iter().flatten().map(|v| T::of(*v)).collect(),
    )?;
    let sub = Tensor::from_vec(
        n,
        2,
        action
            .subarray
            .iter()
            .flatten()
            .map(|v| T::of(*v))
            .collect(),
    )?;
    Ok((power, sub))
}
