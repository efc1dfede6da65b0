//! Randomized gradient-check cases: layers, softmax heads, and full actor
//! and critic passes, each compared against central differences.

use glove::agent::{Actor, Critic};
use glove::network::Adjacency;
use glove::nn::{
    check_gradients, normalized_adjacency, Activation, Dense, GcnLayer, GradCheckReport, ParamSet,
    Tape, Tensor, Var,
};
use glove::Result;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const EPS: f64 = 1e-5;
const FLOOR: f64 = 1e-6;
pub const TOL: f64 = 1e-4;

fn random_tensor<R: Rng>(rows: usize, cols: usize, rng: &mut R) -> Tensor<f64> {
    Tensor::from_vec(
        rows,
        cols,
        (0..rows * cols)
            .map(|_| rng.random_range(-1.0..1.0))
            .collect(),
    )
    .unwrap()
}

fn random_graph<R: Rng>(n: usize, rng: &mut R) -> Adjacency {
    let mut a = Adjacency::empty(n);
    for i in 0..n {
        for j in i + 1..n {
            if rng.random_bool(0.45) {
                a.connect(i, j);
            }
        }
    }
    a
}

fn random_act<R: Rng>(rng: &mut R) -> Activation {
    [Activation::Relu, Activation::Tanh, Activation::Identity][rng.random_range(0..3)]
}

/// `sum(w .* y)` with fixed random `w`, so every output entry matters.
fn weighted_sum(tape: &mut Tape<f64>, y: Var, w: &Tensor<f64>) -> Result<Var> {
    let w = tape.constant(w.clone());
    let p = tape.mul(y, w)?;
    Ok(tape.sum(p))
}

/// Fills gradients by one backward pass of `f`, then compares.
fn run_case(
    params: &mut ParamSet<f64>,
    f: impl Fn(&ParamSet<f64>, &mut Tape<f64>) -> Result<Var>,
) -> GradCheckReport {
    let mut tape = Tape::new();
    let root = f(params, &mut tape).unwrap();
    tape.backward(root).unwrap().write_to(params);
    check_gradients(params, EPS, FLOOR, |p| {
        let mut t = Tape::new();
        let r = f(p, &mut t)?;
        Ok(t.value(r).item())
    })
    .unwrap()
}

/// A case passes when something was checked and every checked
/// coordinate is within tolerance.
pub fn passes(report: &GradCheckReport) -> bool {
    report.checked > 0 && report.max_rel_error < TOL
}

pub fn gcn(seed: u64, count: usize) -> Vec<GradCheckReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let n = rng.random_range(1..=8);
        let (fin, fout) = (rng.random_range(1..6), rng.random_range(1..6));
        let mut params = ParamSet::new();
        let layer = GcnLayer::new(&mut params, "g", fin, fout, random_act(&mut rng), &mut rng);
        let a = normalized_adjacency::<f64>(&random_graph(n, &mut rng)).unwrap();
        let x = random_tensor(n, fin, &mut rng);
        let w = random_tensor(n, fout, &mut rng);
        let report = run_case(&mut params, |p, tape| {
            let av = tape.constant(a.clone());
            let xv = tape.constant(x.clone());
            let y = layer.record(tape, p, av, xv, true)?;
            weighted_sum(tape, y, &w)
        });
        out.push(report);
    }
    out
}

pub fn dense(seed: u64, count: usize) -> Vec<GradCheckReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let n = rng.random_range(1..=6);
        let dims = [
            rng.random_range(1..6),
            rng.random_range(1..6),
            rng.random_range(1..6),
        ];
        let mut params = ParamSet::new();
        let l0 = Dense::new(
            &mut params,
            "d0",
            dims[0],
            dims[1],
            random_act(&mut rng),
            &mut rng,
        );
        let l1 = Dense::new(
            &mut params,
            "d1",
            dims[1],
            dims[2],
            random_act(&mut rng),
            &mut rng,
        );
        for id in params.ids().collect::<Vec<_>>() {
            let v = params.value(id).shape();
            *params.value_mut(id) = random_tensor(v[0], v[1], &mut rng);
        }
        let x = random_tensor(n, dims[0], &mut rng);
        let w = random_tensor(n, dims[2], &mut rng);
        let report = run_case(&mut params, |p, tape| {
            let xv = tape.constant(x.clone());
            let h = l0.record(tape, p, xv, true)?;
            let y = l1.record(tape, p, h, true)?;
            weighted_sum(tape, y, &w)
        });
        out.push(report);
    }
    out
}

pub fn softmax(seed: u64, count: usize) -> Vec<GradCheckReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let n = rng.random_range(1..=6);
        let (fin, k) = (rng.random_range(1..6), rng.random_range(2..6));
        let mut params = ParamSet::new();
        let used = Dense::new(&mut params, "u", fin, 2, Activation::Identity, &mut rng);
        let dist = Dense::new(&mut params, "k", fin, k, Activation::Identity, &mut rng);
        let x = random_tensor(n, fin, &mut rng);
        let w = random_tensor(n, k, &mut rng);
        let wm = random_tensor(1, k, &mut rng);
        let report = run_case(&mut params, |p, tape| {
            let xv = tape.constant(x.clone());
            let u = used.record(tape, p, xv, true)?;
            let u = tape.softmax_rows(u);
            let d = dist.record(tape, p, xv, true)?;
            let d = tape.softmax_rows(d);
            let col = tape.slice_cols(u, 0, 1)?;
            let r = tape.mul_col(d, col)?;
            let a = weighted_sum(tape, r, &w)?;
            let m = tape.mean_rows(r)?;
            let b = weighted_sum(tape, m, &wm)?;
            let sq = tape.square(b);
            tape.add(a, sq)
        });
        out.push(report);
    }
    out
}

pub fn actor(seed: u64, count: usize) -> Vec<GradCheckReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let n = rng.random_range(1..=6);
        let k = rng.random_range(2..=5);
        let self_node = rng.random_bool(0.7);
        let actor = Actor::<f64>::new(k + 6, k, 6, self_node, &mut rng);
        let mut params = actor.params().clone();
        let a = normalized_adjacency::<f64>(&random_graph(n, &mut rng)).unwrap();
        let x = random_tensor(n, k + 6, &mut rng);
        let wp = random_tensor(n, k, &mut rng);
        let ws = random_tensor(n, 2, &mut rng);
        let report = run_case(&mut params, |p, tape| {
            let mut local = actor.clone();
            local.params_mut().assign(p)?;
            let av = tape.constant(a.clone());
            let xv = tape.constant(x.clone());
            let pass = local.record(tape, av, xv, true)?;
            let lp = weighted_sum(tape, pass.power_ratio, &wp)?;
            let ls = weighted_sum(tape, pass.sub_ratio, &ws)?;
            tape.add(lp, ls)
        });
        out.push(report);
    }
    out
}

pub fn critic(seed: u64, count: usize) -> Vec<GradCheckReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let n = rng.random_range(1..=6);
        let k = rng.random_range(2..=5);
        let critic = Critic::<f64>::new(k + 6, k, 6, &mut rng);
        let mut params = critic.params().clone();
        let a = normalized_adjacency::<f64>(&random_graph(n, &mut rng)).unwrap();
        let x = random_tensor(n, k + 6, &mut rng);
        let pw = random_tensor(n, k, &mut rng).map(f64::abs);
        let sa = random_tensor(n, 2, &mut rng).map(f64::abs);
        let report = run_case(&mut params, |p, tape| {
            let mut local = critic.clone();
            local.params_mut().assign(p)?;
            let av = tape.constant(a.clone());
            let xv = tape.constant(x.clone());
            let pv = tape.constant(pw.clone());
            let sv = tape.constant(sa.clone());
            local.record(tape, av, xv, pv, sv, true)
        });
        out.push(report);
    }
    out
}

pub fn critic_action(seed: u64, count: usize) -> Vec<GradCheckReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let n = rng.random_range(1..=6);
        let k = rng.random_range(2..=5);
        let critic = Critic::<f64>::new(k + 6, k, 6, &mut rng);
        let a = normalized_adjacency::<f64>(&random_graph(n, &mut rng)).unwrap();
        let x = random_tensor(n, k + 6, &mut rng);
        let mut actions = ParamSet::new();
        let pid = actions.add("power", random_tensor(n, k, &mut rng).map(f64::abs));
        let sid = actions.add("sub", random_tensor(n, 2, &mut rng).map(f64::abs));
        let report = run_case(&mut actions, |p, tape| {
            let av = tape.constant(a.clone());
            let xv = tape.constant(x.clone());
            let pv = tape.param(p, pid);
            let sv = tape.param(p, sid);
            critic.record(tape, av, xv, pv, sv, false)
        });
        out.push(report);
    }
    out
}

/// Every family with its default seed and count.
pub fn all() -> Vec<(&'static str, Vec<GradCheckReport>)> {
    vec![
        ("gcn", gcn(11, 30)),
        ("dense", dense(12, 30)),
        ("softmax", softmax(13, 25)),
        ("actor", actor(14, 25)),
        ("critic", critic(15, 25)),
        ("critic_action", critic_action(16, 15)),
    ]
}
