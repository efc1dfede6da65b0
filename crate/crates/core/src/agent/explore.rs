//! Zero-sum Gaussian exploration on resource ratios.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::env::ActionRatios;

fn total(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |a, b| a + b)
}

fn next_toward(x: f64, up: bool) -> f64 {
    if x == 0.0 {
        return if up {
            f64::from_bits(1)
        } else {
            -f64::from_bits(1)
        };
    }
    let bits = x.to_bits();
    let step_away = (x > 0.0) == up;
    f64::from_bits(if step_away { bits + 1 } else { bits - 1 })
}

/// Perturbs one group in place. Returns `false` (leaving it untouched) when
/// the perturbation would make a component negative or break the exact sum.
fn perturb_group<R: Rng + ?Sized>(group: &mut [f64], scale: f64, rng: &mut R) -> bool {
    let m = group.len();
    if m < 2 || scale == 0.0 {
        return true;
    }
    let target = total(group);
    let noise: Vec<f64> = group
        .iter()
        .map(|v| scale * v * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, rng))
        .collect();
    let mean = total(&noise) / m as f64;
    let mut out: Vec<f64> = group
        .iter()
        .zip(&noise)
        .map(|(v, e)| v + (e - mean))
        .collect();

    // Absorb rounding in the last component so the sum is bit-identical.
    let head = total(&out[..m - 1]);
    out[m - 1] = target - head;
    for _ in 0..64 {
        let s = total(&out);
        if s == target {
            break;
        }
        out[m - 1] = next_toward(out[m - 1], s < target);
    }
    if total(&out) != target || out.iter().any(|v| *v < 0.0) {
        return false;
    }
    group.copy_from_slice(&out);
    true
}

/// Adds zero-sum noise with per-component std `scale * value` to every
/// power group and every sub-array pair. A group whose perturbation would
/// go negative keeps its original values. Returns the number of such
/// discarded groups.
pub fn safe_explore<R: Rng + ?Sized>(ratios: &mut ActionRatios, scale: f64, rng: &mut R) -> usize {
    let mut discarded = 0;
    for i in 0..ratios.len() {
        if !perturb_group(&mut ratios.power[i], scale, rng) {
            discarded += 1;
        }
        if !perturb_group(&mut ratios.subarray[i], scale, rng) {
            discarded += 1;
        }
    }
    discarded
}
