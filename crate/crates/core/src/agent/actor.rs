use rand::Rng;

use crate::env::RawHeads;
use crate::error::{Error, Result};
use crate::network::Adjacency;
use crate::nn::{normalized_adjacency, Activation, Dense, GcnLayer, ParamSet, Tape, Tensor, Var};
use crate::scalar::Scalar;

/// Tape handles of one actor pass.
#[derive(Debug, Clone, Copy)]
pub struct ActorPass {
    pub power_used: Var,
    pub power_dist: Var,
    pub sub_used: Var,
    pub sub_split: Var,
    /// `used * distribution`, `N x K`.
    pub power_ratio: Var,
    /// `used * (Tx, Rx)`, `N x 2`.
    pub sub_ratio: Var,
}

/// Multi-task actor: a shared two-layer GCN stack, an optional two-layer
/// per-node FC stack, and one head per resource.
#[derive(Debug, Clone)]
pub struct Actor<T> {
    params: ParamSet<T>,
    features: usize,
    bands: usize,
    hidden: usize,
    gcn: [GcnLayer; 2],
    self_node: Option<[Dense; 2]>,
    power_hidden: Dense,
    power_used: Dense,
    power_dist: Dense,
    sub_hidden: Dense,
    sub_used: Dense,
    sub_split: Dense,
}

impl<T: Scalar> Actor<T> {
    /// `self_node = false` gives the GNN-only ablation.
    pub fn new<R: Rng + ?Sized>(
        features: usize,
        bands: usize,
        hidden: usize,
        self_node: bool,
        rng: &mut R,
    ) -> Self {
        let mut p = ParamSet::new();
        let tanh = Activation::Tanh;
        let id = Activation::Identity;
        let gcn = [
            GcnLayer::new(&mut p, "actor.gcn0", features, hidden, tanh, rng),
            GcnLayer::new(&mut p, "actor.gcn1", hidden, hidden, tanh, rng),
        ];
        let self_node = self_node.then(|| {
            [
                Dense::new(&mut p, "actor.fc0", features, hidden, tanh, rng),
                Dense::new(&mut p, "actor.fc1", hidden, hidden, tanh, rng),
            ]
        });
        let width = if self_node.is_some() {
            2 * hidden
        } else {
            hidden
        };
        let power_hidden = Dense::new(&mut p, "actor.power", width, hidden, tanh, rng);
        let power_used = Dense::new(&mut p, "actor.power_used", hidden, 2, id, rng);
        let power_dist = Dense::new(&mut p, "actor.power_dist", hidden, bands, id, rng);
        let sub_hidden = Dense::new(&mut p, "actor.sub", width, hidden, tanh, rng);
        let sub_used = Dense::new(&mut p, "actor.sub_used", hidden, 2, id, rng);
        let sub_split = Dense::new(&mut p, "actor.sub_split", hidden, 2, id, rng);
        Self {
            params: p,
            features,
            bands,
            hidden,
            gcn,
            self_node,
            power_hidden,
            power_used,
            power_dist,
            sub_hidden,
            sub_used,
            sub_split,
        }
    }

    pub fn params(&self) -> &ParamSet<T> {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParamSet<T> {
        &mut self.params
    }

    pub fn has_self_node(&self) -> bool {
        self.self_node.is_some()
    }

    pub fn features(&self) -> usize {
        self.features
    }

    pub fn bands(&self) -> usize {
        self.bands
    }

    pub fn hidden(&self) -> usize {
        self.hidden
    }

    /// Sets the used/unused head biases to `[logit(target), 0]`, so a
    /// zero hidden state uses `target` of each resource; distribution heads
    /// get zero bias.
    pub fn safe_init(&mut self, target: f64) -> Result<()> {
        if !(target > 0.0 && target < 1.0) {
            return Err(Error::invalid(format!(
                "safe-init target must lie in (0, 1), got {target}"
            )));
        }
        let logit = T::of((target / (1.0 - target)).ln());
        for head in [self.power_used, self.sub_used] {
            let b = self.params.value_mut(head.b);
            b.set(0, 0, logit);
            b.set(0, 1, T::zero());
        }
        for head in [self.power_dist, self.sub_split] {
            self.params
                .value_mut(head.b)
                .data_mut()
                .iter_mut()
                .for_each(|v| *v = T::zero());
        }
        Ok(())
    }

    /// Records a forward pass. `a_norm` is the normalized adjacency and `x`
    /// the `N x features` observation.
    pub fn record(
        &self,
        tape: &mut Tape<T>,
        a_norm: Var,
        x: Var,
        trainable: bool,
    ) -> Result<ActorPass> {
        let cols = tape.value(x).cols();
        if cols != self.features {
            return Err(Error::shape(
                "actor",
                format!("{cols} features, expected {}", self.features),
            ));
        }
        let p = &self.params;
        let g0 = self.gcn[0].record(tape, p, a_norm, x, trainable)?;
        let g1 = self.gcn[1].record(tape, p, a_norm, g0, trainable)?;
        let shared = match &self.self_node {
            Some([fc0, fc1]) => {
                let f0 = fc0.record(tape, p, x, trainable)?;
                let f1 = fc1.record(tape, p, f0, trainable)?;
                tape.concat_cols(g1, f1)?
            }
            None => g1,
        };
        let ph = self.power_hidden.record(tape, p, shared, trainable)?;
        let pu = self.power_used.record(tape, p, ph, trainable)?;
        let pd = self.power_dist.record(tape, p, ph, trainable)?;
        let sh = self.sub_hidden.record(tape, p, shared, trainable)?;
        let su = self.sub_used.record(tape, p, sh, trainable)?;
        let ss = self.sub_split.record(tape, p, sh, trainable)?;
        let power_used = tape.softmax_rows(pu);
        let power_dist = tape.softmax_rows(pd);
        let sub_used = tape.softmax_rows(su);
        let sub_split = tape.softmax_rows(ss);
        let pu_col = tape.slice_cols(power_used, 0, 1)?;
        let su_col = tape.slice_cols(sub_used, 0, 1)?;
        let power_ratio = tape.mul_col(power_dist, pu_col)?;
        let sub_ratio = tape.mul_col(sub_split, su_col)?;
        Ok(ActorPass {
            power_used,
            power_dist,
            sub_used,
            sub_split,
            power_ratio,
            sub_ratio,
        })
    }

    /// Policy heads for one observation.
    pub fn heads(&self, features: &Tensor<T>, graph: &Adjacency) -> Result<RawHeads> {
        let mut tape = Tape::new();
        let a = tape.constant(normalized_adjacency(graph)?);
        let x = tape.constant(features.clone());
        let pass = self.record(&mut tape, a, x, false)?;
        let rows = |v: Var| -> Vec<Vec<f64>> {
            let t = tape.value(v);
            (0..t.rows())
                .map(|r| t.row(r).iter().map(|x| x.as_f64()).collect())
                .collect()
        };
        let pair =
            |v: Vec<Vec<f64>>| -> Vec<[f64; 2]> { v.into_iter().map(|r| [r[0], r[1]]).collect() };
        Ok(RawHeads {
            power_used: pair(rows(pass.power_used)),
            power_dist: rows(pass.power_dist),
            sub_used: pair(rows(pass.sub_used)),
            sub_split: pair(rows(pass.sub_split)),
        })
    }
}
