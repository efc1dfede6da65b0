//! Exact fractional Gaussian noise by circulant embedding (Davies–Harte).

use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Autocovariance of unit-variance fGn at integer lag `k`.
pub fn autocovariance(hurst: f64, k: usize) -> f64 {
    let h2 = 2.0 * hurst;
    let k = k as f64;
    0.5 * ((k + 1.0).powf(h2) - 2.0 * k.powf(h2) + (k - 1.0).abs().powf(h2))
}

/// Generator of unit-variance fGn paths of a fixed length.
pub struct FgnGenerator {
    len: usize,
    sqrt_eig: Vec<f64>,
    fft: Arc<dyn Fft<f64>>,
    ifft: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for FgnGenerator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FgnGenerator")
            .field("len", &self.len)
            .finish()
    }
}

impl FgnGenerator {
    pub fn new(hurst: f64, len: usize) -> Result<Self> {
        if !(0.5..1.0).contains(&hurst) {
            return Err(Error::invalid(format!(
                "Hurst exponent must lie in [0.5, 1), got {hurst}"
            )));
        }
        let len = len.max(1);
        // Circulant of size 2*len: [g0, g1, .., g_len, g_{len-1}, .., g1].
        let m = 2 * len;
        let mut row: Vec<Complex<f64>> = (0..m)
            .map(|j| {
                let lag = if j <= len { j } else { m - j };
                Complex::new(autocovariance(hurst, lag), 0.0)
            })
            .collect();
        let mut planner = FftPlanner::new();
        let fft = planner.plan_fft_forward(m);
        let ifft = planner.plan_fft_inverse(m);
        fft.process(&mut row);
        let mut sqrt_eig = Vec::with_capacity(m);
        for z in &row {
            // Non-negative for H in [0.5, 1); clip rounding noise.
            if z.re < -1e-8 {
                return Err(Error::invalid(
                    "circulant embedding is not non-negative definite",
                ));
            }
            sqrt_eig.push(z.re.max(0.0).sqrt());
        }
        Ok(Self {
            len,
            sqrt_eig,
            fft,
            ifft,
        })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// One path: `C^{1/2} z` for real white `z`, truncated to `len`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let m = self.sqrt_eig.len();
        let mut buf: Vec<Complex<f64>> = (0..m)
            .map(|_| Complex::new(rng.sample::<f64, _>(StandardNormal), 0.0))
            .collect();
        self.fft.process(&mut buf);
        for (z, s) in buf.iter_mut().zip(&self.sqrt_eig) {
            *z *= *s;
        }
        self.ifft.process(&mut buf);
        let scale = 1.0 / m as f64;
        buf.iter().take(self.len).map(|z| z.re * scale).collect()
    }
}
