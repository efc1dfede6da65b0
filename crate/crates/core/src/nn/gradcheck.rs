//! Central finite differences against reverse-mode gradients.

use super::params::{ParamId, ParamSet};
use super::tensor::Tensor;
use crate::error::Result;
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    /// Parameter and flat index of the worst coordinate.
    pub worst: Option<(String, usize)>,
    pub checked: usize,
    /// Coordinates skipped because the step straddled a kink (the one-sided
    /// slopes disagree), where no finite difference is meaningful.
    pub kinks: usize,
}

/// `|a - n| / max(|a|, |n|, floor)`.
pub fn relative_error(analytic: f64, numeric: f64, floor: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(floor)
}

/// Central-difference gradient of `f` for every parameter.
pub fn numeric_gradient<T: Scalar>(
    params: &ParamSet<T>,
    eps: f64,
    mut f: impl FnMut(&ParamSet<T>) -> Result<T>,
) -> Result<Vec<Tensor<T>>> {
    let mut work = params.clone();
    let mut out = Vec::with_capacity(params.len());
    for id in params.ids() {
        let mut g = Tensor::zeros(params.value(id).rows(), params.value(id).cols());
        for i in 0..g.len() {
            let (plus, minus, _) = probe(&mut work, id, i, eps, &mut f)?;
            g.data_mut()[i] = T::of((plus - minus) / (2.0 * eps));
        }
        out.push(g);
    }
    Ok(out)
}

fn probe<T: Scalar>(
    work: &mut ParamSet<T>,
    id: ParamId,
    i: usize,
    eps: f64,
    f: &mut impl FnMut(&ParamSet<T>) -> Result<T>,
) -> Result<(f64, f64, f64)> {
    let orig = work.value(id).data()[i];
    work.value_mut(id).data_mut()[i] = T::of(orig.as_f64() + eps);
    let plus = f(work)?.as_f64();
    work.value_mut(id).data_mut()[i] = T::of(orig.as_f64() - eps);
    let minus = f(work)?.as_f64();
    work.value_mut(id).data_mut()[i] = orig;
    let center = f(work)?.as_f64();
    Ok((plus, minus, center))
}

/// Compares the gradient slots of `params` (already filled by a backward
/// pass of `f`) with central differences.
pub fn check_gradients<T: Scalar>(
    params: &ParamSet<T>,
    eps: f64,
    floor: f64,
    mut f: impl FnMut(&ParamSet<T>) -> Result<T>,
) -> Result<GradCheckReport> {
    let mut work = params.clone();
    let mut report = GradCheckReport {
        max_rel_error: 0.0,
        worst: None,
        checked: 0,
        kinks: 0,
    };
    for id in params.ids() {
        for i in 0..params.value(id).len() {
            let (plus, minus, center) = probe(&mut work, id, i, eps, &mut f)?;
            let right = (plus - center) / eps;
            let left = (center - minus) / eps;
            let central = (plus - minus) / (2.0 * eps);
            let analytic = params.grad(id).data()[i].as_f64();
            let err = relative_error(analytic, central, floor);
            // Smooth coordinates have one-sided slopes within O(eps) of each
            // other; a jump means a relu switched inside the stencil.
            if err >= 1e-6 && relative_error(right, left, floor) > 1e-2 {
                report.kinks += 1;
                continue;
            }
            report.checked += 1;
            if err > report.max_rel_error {
                report.max_rel_error = err;
                report.worst = Some((params.name(id).to_string(), i));
            }
        }
    }
    Ok(report)
}
