use glove::agent::{uniform_baseline, AgentSettings, Glove};
use glove::env::{check_constraints, Env};
use glove::harness::ScenarioConfig;
use glove::nn::{normalized_adjacency, numeric_gradient, ParamSet, Tape, Tensor};
use glove::rng::{stream, Stream};

fn small(overrides: &[&str]) -> ScenarioConfig {
    let mut all = vec!["N=5", "steps=10", "seed=4"];
    all.extend_from_slice(overrides);
    let owned: Vec<String> = all.iter().map(|s| s.to_string()).collect();
    ScenarioConfig::load(None, &owned).unwrap()
}

fn flat(p: &ParamSet<f64>) -> Vec<f64> {
    p.iter().flat_map(|x| x.value.data().to_vec()).collect()
}

#[test]
fn zero_learning_rates_leave_parameters_unchanged() {
    let cfg = small(&["lr_actor=0", "lr_critic=0"]);
    let mut env = Env::new(&cfg).unwrap();
    let mut agent = Glove::<f64>::from_config(&cfg).unwrap();
    let before = agent.export_params();
    let mut rng = stream(cfg.seed, Stream::Exploration);
    for _ in 0..3 {
        agent.train_step(&mut env, &mut rng).unwrap();
    }
    assert_eq!(env.slot(), 3);
    assert_eq!(flat(&agent.export_params()), flat(&before));
}

#[test]
fn critic_step_reduces_td_loss_on_its_transition() {
    let cfg = small(&["lr_critic=1e-3"]);
    let mut env = Env::new(&cfg).unwrap();
    let mut agent = Glove::<f64>::from_config(&cfg).unwrap();
    let mut rng = stream(cfg.seed, Stream::Exploration);
    for _ in 0..5 {
        let out = agent.train_step(&mut env, &mut rng).unwrap();
        let t = &out.transition;
        let q_after = agent
            .critic
            .q(&t.state.features, &t.state.graph, &t.action)
            .unwrap();
        let after = (out.diagnostics.target - q_after).powi(2);
        assert!(
            after < out.diagnostics.critic_loss,
            "{after} vs {}",
            out.diagnostics.critic_loss
        );
    }
}

#[test]
fn actor_step_follows_policy_gradient_of_q() {
    // Tiny actor (about fifty parameters), frozen critic, no noise.
    let cfg = small(&["K=2", "N=4", "lr_critic=0", "noise_scale=0"]);
    let settings = AgentSettings {
        hidden: 2,
        self_node: false,
        lr_actor: 1e-4,
        lr_critic: 0.0,
        kappa: cfg.kappa,
        noise_scale: 0.0,
        safe_init: cfg.safe_init,
    };
    let mut agent = Glove::<f64>::new(2, settings, &mut stream(9, Stream::Init)).unwrap();
    let count = agent.actor.params().scalar_count();
    assert!((40..=70).contains(&count), "{count}");
    let mut env = Env::new(&cfg).unwrap();
    let obs = env.observe();
    let critic = agent.critic.clone();
    let actor = agent.actor.clone();
    let a_norm: Tensor<f64> = normalized_adjacency(&obs.graph).unwrap();
    let grad = numeric_gradient(actor.params(), 1e-6, |p| {
        let mut local = actor.clone();
        local.params_mut().assign(p)?;
        let mut tape = Tape::new();
        let av = tape.constant(a_norm.clone());
        let xv = tape.constant(obs.features.clone());
        let pass = local.record(&mut tape, av, xv, false)?;
        let q = critic.record(&mut tape, av, xv, pass.power_ratio, pass.sub_ratio, false)?;
        Ok(tape.value(q).item())
    })
    .unwrap();
    let before = flat(actor.params());
    agent
        .train_step(&mut env, &mut stream(1, Stream::Exploration))
        .unwrap();
    let after = flat(agent.actor.params());
    let g: Vec<f64> = grad.iter().flat_map(|t| t.data().to_vec()).collect();
    let dot: f64 = g
        .iter()
        .zip(before.iter().zip(&after))
        .map(|(g, (b, a))| g * (a - b))
        .sum();
    assert!(dot > 0.0, "update against the gradient: {dot}");
}

#[test]
fn zero_reward_zero_noise_runs_repeat_exactly() {
    let cfg = small(&["chi1=0", "chi2=0", "chi3=0", "noise_scale=0"]);
    let run = || {
        let mut env = Env::new(&cfg).unwrap();
        let mut agent = Glove::<f64>::from_config(&cfg).unwrap();
        let mut rng = stream(cfg.seed, Stream::Exploration);
        let mut qs = Vec::new();
        for _ in 0..4 {
            let out = agent.train_step(&mut env, &mut rng).unwrap();
            assert_eq!(out.outcome.reward.r, 0.0);
            qs.push(out.diagnostics.q);
        }
        (qs, flat(&agent.export_params()))
    };
    assert_eq!(run(), run());
}

#[test]
fn parameter_count_does_not_depend_on_fleet_size() {
    let counts: Vec<usize> = [5, 25]
        .iter()
        .map(|n| {
            Glove::<f64>::from_config(&small(&[&format!("N={n}")]))
                .unwrap()
                .parameter_count()
        })
        .collect();
    assert_eq!(counts[0], counts[1]);
    assert!((40_000..=70_000).contains(&counts[0]), "{}", counts[0]);
}

#[test]
fn checkpoint_round_trip_and_architecture_check() {
    let cfg = small(&[]);
    let agent = Glove::<f64>::from_config(&cfg).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ck.txt");
    glove::nn::checkpoint::save(&agent.export_params(), &path).unwrap();
    let loaded = glove::nn::checkpoint::load::<f64>(&path).unwrap();

    let mut other = Glove::<f64>::from_config(&small(&["seed=99"])).unwrap();
    assert_ne!(flat(&other.export_params()), flat(&agent.export_params()));
    other.import_params(&loaded).unwrap();
    assert_eq!(flat(&other.export_params()), flat(&agent.export_params()));

    let mut ablated = Glove::<f64>::from_config(&small(&["ablation=true"])).unwrap();
    assert!(ablated.import_params(&loaded).is_err());
    let mut wide = Glove::<f64>::from_config(&small(&["hidden=32"])).unwrap();
    assert!(wide.import_params(&loaded).is_err());
}

#[test]
fn safe_init_covers_offered_load_at_slot_zero() {
    // Default scenario, deterministic traffic and interference.
    let cfg =
        ScenarioConfig::load(None, &["sigma_tr=0".into(), "interference_std=0".into()]).unwrap();
    let mut env = Env::new(&cfg).unwrap();
    let agent = Glove::<f64>::from_config(&cfg).unwrap();
    let obs = env.observe();
    let action = env.allocate(&agent.act(&obs).unwrap()).unwrap();
    let topo = env.topology().clone();
    let out = env.step(&action).unwrap();
    let bits = cfg.packet_bits();
    for i in 0..topo.len() {
        if topo.next_hop[i].is_some() {
            let load = obs.expected_packets[i] * bits / cfg.dt;
            assert!(
                out.rates[i] >= load,
                "uav {i}: rate {:.3e} < load {:.3e}",
                out.rates[i],
                load
            );
        }
    }
    assert_eq!(out.traffic.lost, 0);
}

#[test]
fn uniform_baseline_uses_full_power() {
    let cfg = ScenarioConfig::load(None, &["N=8".into()]).unwrap();
    let env = Env::new(&cfg).unwrap();
    let action = env.allocate(&uniform_baseline(8, cfg.k)).unwrap();
    assert!(check_constraints(&action, env.topology(), env.budget()).is_empty());
    for i in 0..8 {
        if env.topology().next_hop[i].is_some() {
            assert!(
                action.power[i].iter().all(|w| (w - 0.2).abs() < 1e-12),
                "{:?}",
                action.power[i]
            );
        }
    }
}
