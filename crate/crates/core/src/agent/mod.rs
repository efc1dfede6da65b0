//! GLOVE actor and critic, safe initialization and exploration, the
//! on-policy training step, and a uniform-allocation baseline.

mod actor;
mod critic;
mod explore;

use rand::Rng;

use crate::env::{
    feature_count, ActionRatios, Env, Observation, ResourceAction, StepOutcome, Transition,
};
use crate::error::Result;
use crate::harness::ScenarioConfig;
use crate::nn::{normalized_adjacency, Adam, Direction, ParamSet, Tape, Tensor};
use crate::scalar::Scalar;

pub use actor::{Actor, ActorPass};
pub use critic::{ratio_tensors, Critic};
pub use explore::safe_explore;

/// Full power spread evenly over the sub-bands and every sub-array in use,
/// split evenly between Tx and Rx.
pub fn uniform_baseline(uavs: usize, bands: usize) -> ActionRatios {
    ActionRatios {
        power: vec![vec![1.0 / bands as f64; bands]; uavs],
        subarray: vec![[0.5, 0.5]; uavs],
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainDiagnostics {
    pub critic_loss: f64,
    /// `Q(s, a)` before the update.
    pub q: f64,
    pub target: f64,
    /// Exploration groups whose noise was discarded.
    pub discarded: usize,
}

/// Everything one training step produced.
#[derive(Debug, Clone)]
pub struct TrainStep {
    /// Allocation executed this slot, made for the pre-step topology.
    pub action: ResourceAction,
    pub outcome: StepOutcome,
    pub transition: Transition,
    pub diagnostics: TrainDiagnostics,
}

/// Hyperparameters of the agent proper.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AgentSettings {
    pub hidden: usize,
    pub self_node: bool,
    pub lr_actor: f64,
    pub lr_critic: f64,
    pub kappa: f64,
    pub noise_scale: f64,
    pub safe_init: f64,
}

impl AgentSettings {
    pub fn from_config(cfg: &ScenarioConfig) -> Self {
        Self {
            hidden: cfg.hidden,
            self_node: !cfg.ablation,
            lr_actor: cfg.lr_actor,
            lr_critic: cfg.lr_critic,
            kappa: cfg.kappa,
            noise_scale: cfg.noise_scale,
            safe_init: cfg.safe_init,
        }
    }
}

fn to_t<T: Scalar>(obs: &Observation) -> Tensor<T> {
    obs.features.cast()
}

/// Actor, critic and their optimizers.
#[derive(Debug, Clone)]
pub struct Glove<T> {
    pub actor: Actor<T>,
    pub critic: Critic<T>,
    actor_opt: Adam<T>,
    critic_opt: Adam<T>,
    settings: AgentSettings,
}

impl<T: Scalar> Glove<T> {
    /// Freshly initialized agent, already safe-initialized.
    pub fn new<R: Rng + ?Sized>(
        bands: usize,
        settings: AgentSettings,
        rng: &mut R,
    ) -> Result<Self> {
        let features = feature_count(bands);
        let mut actor = Actor::new(features, bands, settings.hidden, settings.self_node, rng);
        actor.safe_init(settings.safe_init)?;
        let critic = Critic::new(features, bands, settings.hidden, rng);
        Ok(Self {
            actor,
            critic,
            actor_opt: Adam::new(T::of(settings.lr_actor)),
            critic_opt: Adam::new(T::of(settings.lr_critic)),
            settings,
        })
    }

    /// Agent for a scenario, initialized from the seed's init stream.
    pub fn from_config(cfg: &ScenarioConfig) -> Result<Self> {
        let mut rng = crate::rng::stream(cfg.seed, crate::rng::Stream::Init);
        Self::new(cfg.k, AgentSettings::from_config(cfg), &mut rng)
    }

    pub fn settings(&self) -> &AgentSettings {
        &self.settings
    }

    pub fn parameter_count(&self) -> usize {
        self.actor.params().scalar_count() + self.critic.params().scalar_count()
    }

    /// Actor then critic parameters, in checkpoint order.
    pub fn export_params(&self) -> ParamSet<T> {
        let mut all = self.actor.params().clone();
        for p in self.critic.params().iter() {
            all.add(p.name.clone(), p.value.clone());
        }
        all
    }

    pub fn import_params(&mut self, all: &ParamSet<T>) -> Result<()> {
        let na = self.actor.params().len();
        if all.len() != na + self.critic.params().len() {
            return Err(crate::Error::Checkpoint(format!(
                "{} parameters in checkpoint, architecture has {}",
                all.len(),
                na + self.critic.params().len()
            )));
        }
        let mut actor = ParamSet::new();
        let mut critic = ParamSet::new();
        for (idx, p) in all.iter().enumerate() {
            let dst = if idx < na { &mut actor } else { &mut critic };
            dst.add(p.name.clone(), p.value.clone());
        }
        self.actor
            .params_mut()
            .assign(&actor)
            .and_then(|_| self.critic.params_mut().assign(&critic))
            .map_err(|e| crate::Error::Checkpoint(format!("architecture mismatch: {e}")))
    }

    /// Deterministic policy ratios.
    pub fn act(&self, obs: &Observation) -> Result<ActionRatios> {
        Ok(self.actor.heads(&to_t(obs), &obs.graph)?.ratios())
    }

    /// One step of on-policy training: act with exploration noise, advance
    /// the environment, then one actor ascent and one critic descent on
    /// this transition alone.
    pub fn train_step<R: Rng + ?Sized>(
        &mut self,
        env: &mut Env,
        explore_rng: &mut R,
    ) -> Result<TrainStep> {
        let state = env.observe();
        let policy = self.act(&state)?;
        let mut taken = policy.clone();
        let discarded = safe_explore(&mut taken, self.settings.noise_scale, explore_rng);
        let action = env.allocate(&taken)?;
        let outcome = env.step(&action)?;
        let next = outcome.observation.clone();

        let next_action = self.act(&next)?;
        let q_next = self.critic.q(&to_t(&next), &next.graph, &next_action)?;
        let target = T::of(outcome.reward.r) + T::of(self.settings.kappa) * q_next;

        let x: Tensor<T> = to_t(&state);
        let a_norm: Tensor<T> = normalized_adjacency(&state.graph)?;
        let (taken_p, taken_s) = ratio_tensors::<T>(&taken)?;

        // Actor: ascend Q(s, pi(s)) with the critic frozen.
        {
            let mut tape = Tape::new();
            let av = tape.constant(a_norm.clone());
            let xv = tape.constant(x.clone());
            let pass = self.actor.record(&mut tape, av, xv, true)?;
            let q =
                self.critic
                    .record(&mut tape, av, xv, pass.power_ratio, pass.sub_ratio, false)?;
            tape.backward(q)?.write_to(self.actor.params_mut());
            self.actor_opt
                .step(self.actor.params_mut(), Direction::Ascend);
        }

        // Critic: descend (y - Q(s, a))^2 with y held fixed.
        let (q_now, loss) = {
            let mut tape = Tape::new();
            let av = tape.constant(a_norm);
            let xv = tape.constant(x);
            let p = tape.constant(taken_p);
            let s = tape.constant(taken_s);
            let q = self.critic.record(&mut tape, av, xv, p, s, true)?;
            let y = tape.constant(Tensor::scalar(target));
            let diff = tape.sub(y, q)?;
            let sq = tape.square(diff);
            let loss = tape.sum(sq);
            tape.backward(loss)?.write_to(self.critic.params_mut());
            self.critic_opt
                .step(self.critic.params_mut(), Direction::Descend);
            (tape.value(q).item(), tape.value(loss).item())
        };

        let transition = Transition {
            state,
            action: taken,
            reward: outcome.reward.r,
            next_state: next,
        };
        Ok(TrainStep {
            action,
            outcome,
            transition,
            diagnostics: TrainDiagnostics {
                critic_loss: loss.as_f64(),
                q: q_now.as_f64(),
                target: target.as_f64(),
                discarded,
            },
        })
    }
}
