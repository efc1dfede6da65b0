//! Line-of-sight THz link budget: steering vectors, spreading and absorption
//! loss, beam misalignment, beamformed gain, SINR and multi-band capacity.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::SPEED_OF_LIGHT;

/// Sub-band layout shared by every link.
#[derive(Debug, Clone, PartialEq)]
pub struct BandPlan {
    bandwidth: f64,
    carriers: Vec<f64>,
    absorption: Vec<f64>,
}

impl BandPlan {
    pub fn new(bandwidth: f64, carriers: Vec<f64>, absorption: Vec<f64>) -> Result<Self> {
        if carriers.is_empty() {
            return Err(Error::invalid("band plan needs at least one sub-band"));
        }
        if !(bandwidth > 0.0 && bandwidth.is_finite()) {
            return Err(Error::invalid(format!(
                "bandwidth must be positive, got {bandwidth}"
            )));
        }
        if carriers.len() != absorption.len() {
            return Err(Error::invalid(
                "one absorption coefficient per carrier is required",
            ));
        }
        if carriers.iter().any(|f| !(*f > 0.0 && f.is_finite())) {
            return Err(Error::invalid("carrier frequencies must be positive"));
        }
        if carriers.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid(
                "carrier frequencies must be strictly increasing",
            ));
        }
        if absorption.iter().any(|g| !(*g >= 0.0 && g.is_finite())) {
            return Err(Error::invalid(
                "absorption coefficients must be non-negative",
            ));
        }
        Ok(Self {
            bandwidth,
            carriers,
            absorption,
        })
    }

    /// `k` adjacent sub-bands of width `bandwidth` starting at `low_edge`,
    /// carriers at the sub-band centres, one absorption coefficient for all.
    pub fn contiguous(low_edge: f64, k: usize, bandwidth: f64, absorption: f64) -> Result<Self> {
        let carriers = (0..k)
            .map(|i| low_edge + (i as f64 + 0.5) * bandwidth)
            .collect();
        Self::new(bandwidth, carriers, vec![absorption; k])
    }

    pub fn len(&self) -> usize {
        self.carriers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.carriers.is_empty()
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    pub fn carrier(&self, k: usize) -> f64 {
        self.carriers[k]
    }

    pub fn carriers(&self) -> &[f64] {
        &self.carriers
    }

    pub fn absorption(&self, k: usize) -> f64 {
        self.absorption[k]
    }

    pub fn wavelength(&self, k: usize) -> f64 {
        SPEED_OF_LIGHT / self.carriers[k]
    }
}

/// Planar sub-array geometry and element gains (amplitude, linear).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArraySpec {
    pub mx: usize,
    pub my: usize,
    pub spacing: f64,
    pub s_max: usize,
    pub g_tx: f64,
    pub g_rx: f64,
}

impl ArraySpec {
    pub fn validate(&self) -> Result<()> {
        if self.mx == 0 || self.my == 0 {
            return Err(Error::invalid(
                "sub-array needs at least one antenna per axis",
            ));
        }
        if !(self.spacing > 0.0) {
            return Err(Error::invalid("antenna spacing must be positive"));
        }
        if self.s_max < 2 {
            return Err(Error::invalid(
                "at least two sub-arrays per UAV are required",
            ));
        }
        if !(self.g_tx > 0.0 && self.g_rx > 0.0) {
            return Err(Error::invalid("element gains must be positive"));
        }
        Ok(())
    }

    /// Antennas per sub-array.
    pub fn elements(&self) -> usize {
        self.mx * self.my
    }
}

/// Planar-array steering vector, element `(m_x, m_y)` stored at index
/// `m_x * M_y + m_y`. The phase carries no `sin(theta) sin(phi)` term for
/// the y axis; it follows the printed model as is.
pub fn steering_vector(
    spec: &ArraySpec,
    wavelength: f64,
    phi: f64,
    theta: f64,
) -> Result<Vec<Complex64>> {
    if !(wavelength > 0.0 && wavelength.is_finite()) {
        return Err(Error::invalid(format!(
            "wavelength must be positive, got {wavelength}"
        )));
    }
    if !phi.is_finite() || !theta.is_finite() {
        return Err(Error::invalid("steering angles must be finite"));
    }
    let norm = 1.0 / (spec.elements() as f64).sqrt();
    let k = 2.0 * PI * spec.spacing / wavelength;
    let ux = theta.sin() * phi.cos();
    let uy = theta.cos();
    let mut out = Vec::with_capacity(spec.elements());
    for mx in 0..spec.mx {
        for my in 0..spec.my {
            let phase = k * (mx as f64 * ux + my as f64 * uy);
            out.push(Complex64::from_polar(norm, phase));
        }
    }
    Ok(out)
}

/// Spreading loss times absorption over a straight path of length `d`.
pub fn path_gain(band: &BandPlan, k: usize, d: f64) -> Result<f64> {
    if !(d > 0.0 && d.is_finite()) {
        return Err(Error::Geometry(format!(
            "link distance must be positive, got {d}"
        )));
    }
    let spread = SPEED_OF_LIGHT / (4.0 * PI * band.carrier(k) * d);
    Ok(spread * spread * (-band.absorption(k) * d).exp())
}

/// Pointing-error model: radial offset `r ~ Rayleigh(sigma_p)` on a Gaussian
/// beam footprint of equivalent width `w_eq`, peak fraction `a0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Misalignment {
    pub sigma_p: f64,
    pub w_eq: f64,
    pub a0: f64,
}

impl Misalignment {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_p >= 0.0) {
            return Err(Error::invalid("pointing-error sigma must be non-negative"));
        }
        if !(self.w_eq > 0.0) {
            return Err(Error::invalid("beam width must be positive"));
        }
        if !(self.a0 > 0.0 && self.a0 <= 1.0) {
            return Err(Error::invalid(
                "misalignment peak fraction must lie in (0, 1]",
            ));
        }
        Ok(())
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        misalignment_gain(rng, self.sigma_p, self.w_eq, self.a0)
    }
}

pub fn misalignment_gain<R: Rng + ?Sized>(rng: &mut R, sigma_p: f64, w_eq: f64, a0: f64) -> f64 {
    if sigma_p == 0.0 {
        return a0;
    }
    // |(X, Y)| with X, Y ~ N(0, sigma_p^2) is Rayleigh(sigma_p).
    let normal = Normal::new(0.0, sigma_p).expect("sigma_p validated");
    let x: f64 = normal.sample(rng);
    let y: f64 = normal.sample(rng);
    let r2 = x * x + y * y;
    a0 * (-2.0 * r2 / (w_eq * w_eq)).exp()
}

/// |h|^2 under LoS-matched analog beamforming with unit-norm digital stages.
pub fn beamformed_gain(
    tx_subarrays: usize,
    rx_subarrays: usize,
    spec: &ArraySpec,
    alpha_sq: f64,
    g_m: f64,
) -> Result<f64> {
    if tx_subarrays == 0 || rx_subarrays == 0 {
        return Err(Error::invalid(
            "a link needs at least one transmit and one receive sub-array",
        ));
    }
    let m = spec.elements() as f64;
    let array = (tx_subarrays as f64 * m) * (rx_subarrays as f64 * m);
    let elements = spec.g_tx * spec.g_tx * spec.g_rx * spec.g_rx;
    Ok(array * elements * alpha_sq * g_m * g_m)
}

pub fn sinr(power: f64, h_sq: f64, interference: f64, noise: f64) -> Result<f64> {
    if !(noise > 0.0) {
        return Err(Error::invalid("noise power must be positive"));
    }
    if power < 0.0 || h_sq < 0.0 || interference < 0.0 {
        return Err(Error::invalid(
            "power, gain and interference must be non-negative",
        ));
    }
    Ok(power * h_sq / (interference + noise))
}

/// Shannon capacity summed over sub-bands (bit/s).
pub fn link_rate(gammas: &[f64], bandwidth: f64) -> f64 {
    gammas.iter().map(|g| bandwidth * (1.0 + g).log2()).sum()
}

/// Thermal noise power per sub-band.
pub fn thermal_noise(temperature: f64, bandwidth: f64) -> f64 {
    crate::BOLTZMANN * temperature * bandwidth
}

/// Residual interference after cancellation: `max(0, N(mean, std^2))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interference {
    pub mean: f64,
    pub std: f64,
}

impl Interference {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        if self.std == 0.0 {
            return self.mean.max(0.0);
        }
        let n = Normal::new(self.mean, self.std).expect("interference std validated");
        n.sample(rng).max(0.0)
    }
}

/// Everything a link needs to be realized for one slot.
#[derive(Debug, Clone)]
pub struct LinkInput<'a> {
    pub from: usize,
    pub to: usize,
    pub distance: f64,
    /// Radial closing speed (m/s); only feeds the Doppler phase.
    pub radial_speed: f64,
    /// Transmit power per sub-band (W).
    pub power: &'a [f64],
    pub tx_subarrays: usize,
    pub rx_subarrays: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    pub from: usize,
    pub to: usize,
    pub path_gain: Vec<f64>,
    pub misalignment_gain: Vec<f64>,
    pub beamformed_gain: Vec<f64>,
    pub interference: Vec<f64>,
    pub sinr: Vec<f64>,
    pub rate: f64,
    pub doppler_phase: Complex64,
}

/// Static radio parameters shared by all links of a scenario.
#[derive(Debug, Clone)]
pub struct RadioModel {
    pub bands: BandPlan,
    pub array: ArraySpec,
    /// Noise power per sub-band (W).
    pub noise: f64,
    pub interference: Interference,
    pub misalignment: Misalignment,
}

impl RadioModel {
    /// Draws misalignment once per link, interference once per sub-band.
    pub fn realize<R: Rng + ?Sized>(
        &self,
        link: &LinkInput<'_>,
        rng: &mut R,
    ) -> Result<ChannelRealization> {
        let k = self.bands.len();
        if link.power.len() != k {
            return Err(Error::shape(
                "realize",
                format!("{} power entries for {k} sub-bands", link.power.len()),
            ));
        }
        let g_m = self.misalignment.sample(rng);
        let mut out = ChannelRealization {
            from: link.from,
            to: link.to,
            path_gain: Vec::with_capacity(k),
            misalignment_gain: vec![g_m; k],
            beamformed_gain: Vec::with_capacity(k),
            interference: Vec::with_capacity(k),
            sinr: Vec::with_capacity(k),
            rate: 0.0,
            doppler_phase: Complex64::new(1.0, 0.0),
        };
        for band in 0..k {
            let alpha_sq = path_gain(&self.bands, band, link.distance)?;
            let h_sq = beamformed_gain(
                link.tx_subarrays,
                link.rx_subarrays,
                &self.array,
                alpha_sq,
                g_m,
            )?;
            let i_s = self.interference.sample(rng);
            let gamma = sinr(link.power[band], h_sq, i_s, self.noise)?;
            out.path_gain.push(alpha_sq);
            out.beamformed_gain.push(h_sq);
            out.interference.push(i_s);
            out.sinr.push(gamma);
        }
        out.rate = link_rate(&out.sinr, self.bands.bandwidth());
        let centre = self.bands.carrier(k / 2);
        let doppler = link.radial_speed * centre / SPEED_OF_LIGHT;
        let delay = link.distance / SPEED_OF_LIGHT;
        out.doppler_phase = Complex64::from_polar(1.0, 2.0 * PI * doppler * delay);
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Stream};
    use approx::assert_relative_eq;

    fn spec(mx: usize, my: usize) -> ArraySpec {
        ArraySpec {
            mx,
            my,
            spacing: 0.5e-3,
            s_max: 64,
            g_tx: 1.0,
            g_rx: 1.0,
        }
    }

    fn single_band(f: f64, g_abs: f64) -> BandPlan {
        BandPlan::new(5e9, vec![f], vec![g_abs]).unwrap()
    }

    #[test]
    fn band_plan_rejects_bad_layouts() {
        assert!(BandPlan::new(5e9, vec![], vec![]).is_err());
        assert!(BandPlan::new(0.0, vec![1.0], vec![0.0]).is_err());
        assert!(BandPlan::new(1.0, vec![2.0, 1.0], vec![0.0, 0.0]).is_err());
        assert!(BandPlan::new(1.0, vec![1.0], vec![-0.1]).is_err());
        let plan = BandPlan::contiguous(287.5e9, 5, 5e9, 0.005).unwrap();
        assert_eq!(plan.carriers(), &[290e9, 295e9, 300e9, 305e9, 310e9]);
    }

    #[test]
    fn single_element_steering_vector_is_one() {
        let a = steering_vector(&spec(1, 1), 1e-3, 0.3, 1.1).unwrap();
        assert_eq!(a, vec![Complex64::new(1.0, 0.0)]);
    }

    #[test]
    fn steering_vector_has_constant_modulus_and_unit_norm() {
        let a = steering_vector(&spec(4, 4), 1e-3, 0.7, 0.4).unwrap();
        assert_eq!(a.len(), 16);
        for z in &a {
            assert_relative_eq!(z.norm(), 0.25, epsilon = 1e-15);
        }
        let norm: f64 = a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        assert_relative_eq!(norm, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn half_wavelength_broadside_pattern() {
        // theta = pi/2, phi = 0: phase = pi * m_x (cos(pi/2) ~ 6e-17 on y).
        let lambda = 1e-3;
        let s = ArraySpec {
            spacing: lambda / 2.0,
            ..spec(2, 2)
        };
        let a = steering_vector(&s, lambda, 0.0, PI / 2.0).unwrap();
        for mx in 0..2 {
            for my in 0..2 {
                let phase = PI * (mx as f64 * (PI / 2.0).sin() + my as f64 * (PI / 2.0).cos());
                let expect = Complex64::from_polar(0.5, phase);
                let got = a[mx * 2 + my];
                assert!((got - expect).norm() < 1e-15);
            }
        }
        // Element (1, *) flips sign relative to (0, *).
        assert!((a[2] + a[0]).norm() < 1e-12);
    }

    #[test]
    fn steering_rejects_non_finite() {
        assert!(steering_vector(&spec(2, 2), 1e-3, f64::NAN, 0.0).is_err());
        assert!(steering_vector(&spec(2, 2), 0.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn path_gain_reference_value() {
        // (c / (4 pi 3e11 100))^2 evaluated independently.
        let expect = {
            let x = 299_792_458.0_f64 / (4.0 * std::f64::consts::PI * 3e13);
            x * x
        };
        let g = path_gain(&single_band(300e9, 0.0), 0, 100.0).unwrap();
        assert_relative_eq!(g, expect, max_relative = 1e-14);
        // The usual hand figure 6.333e-13 (-121.98 dB) takes c = 3e8, which
        // is 0.07% off the exact constant; the gain is squared.
        assert_relative_eq!(g, 6.3325e-13, max_relative = 2e-3);
        assert_relative_eq!(10.0 * g.log10(), -121.98, epsilon = 0.02);
    }

    #[test]
    fn path_gain_inverse_square() {
        let band = single_band(287.0e9, 0.0);
        for d in [1.0, 17.0, 250.0] {
            let r = path_gain(&band, 0, 2.0 * d).unwrap() / path_gain(&band, 0, d).unwrap();
            assert_relative_eq!(r, 0.25, max_relative = 1e-14);
        }
    }

    #[test]
    fn path_gain_with_absorption() {
        let band = single_band(300e9, 0.005);
        let spread = path_gain(&single_band(300e9, 0.0), 0, 500.0).unwrap();
        let g = path_gain(&band, 0, 500.0).unwrap();
        // e^-2.5 to 17 digits.
        assert_relative_eq!(g / spread, 0.082_084_998_623_898_8, max_relative = 1e-14);
    }

    #[test]
    fn path_gain_rejects_degenerate_distance() {
        let band = single_band(300e9, 0.0);
        assert!(matches!(path_gain(&band, 0, 0.0), Err(Error::Geometry(_))));
        assert!(path_gain(&band, 0, -1.0).is_err());
    }

    #[test]
    fn misalignment_deterministic_mode() {
        let mut rng = stream(1, Stream::Channel);
        assert_eq!(misalignment_gain(&mut rng, 0.0, 0.1, 1.0), 1.0);
        assert_eq!(misalignment_gain(&mut rng, 0.0, 0.1, 0.8), 0.8);
    }

    #[test]
    fn misalignment_matches_monte_carlo_of_same_formula() {
        // Oracle: inverse-CDF Rayleigh draws r = s sqrt(-2 ln U).
        let (sigma, w, a0) = (0.05, 0.1, 1.0);
        let n = 100_000;
        let mut rng = stream(11, Stream::Channel);
        let mean: f64 = (0..n)
            .map(|_| misalignment_gain(&mut rng, sigma, w, a0))
            .sum::<f64>()
            / n as f64;
        let mut oracle_rng = stream(12, Stream::Channel);
        let oracle: f64 = (0..n)
            .map(|_| {
                let u: f64 = 1.0 - oracle_rng.random::<f64>();
                let r = sigma * (-2.0 * u.ln()).sqrt();
                a0 * (-2.0 * r * r / (w * w)).exp()
            })
            .sum::<f64>()
            / n as f64;
        // Closed form E[exp(-2 r^2 / w^2)] = 1 / (1 + 4 sigma^2 / w^2) = 0.5.
        assert_relative_eq!(oracle, 0.5, max_relative = 0.01);
        assert_relative_eq!(mean, oracle, max_relative = 0.01);
    }

    #[test]
    fn beamformed_gain_identity_array() {
        let g = beamformed_gain(1, 1, &spec(1, 1), 3.5e-12, 1.0).unwrap();
        assert_eq!(g, 3.5e-12);
    }

    #[test]
    fn beamformed_gain_linear_in_subarrays() {
        let s = spec(4, 4);
        let one = beamformed_gain(3, 5, &s, 1e-13, 0.9).unwrap();
        assert_relative_eq!(
            beamformed_gain(6, 5, &s, 1e-13, 0.9).unwrap(),
            2.0 * one,
            max_relative = 1e-15
        );
        assert_relative_eq!(
            beamformed_gain(3, 10, &s, 1e-13, 0.9).unwrap(),
            2.0 * one,
            max_relative = 1e-15
        );
    }

    #[test]
    fn beamformed_gain_reference_product() {
        let g = 10f64.powf(5.0 / 20.0);
        let s = ArraySpec {
            g_tx: g,
            g_rx: g,
            ..spec(4, 4)
        };
        // (4*16)(2*16) * g^4 * 1e-13 * 0.81, with g^4 = 10.
        let expect = 64.0 * 32.0 * 10.0 * 1e-13 * 0.81;
        let got = beamformed_gain(4, 2, &s, 1e-13, 0.9).unwrap();
        assert_relative_eq!(got, expect, max_relative = 1e-14);
    }

    #[test]
    fn beamformed_gain_matches_explicit_matched_filter() {
        // |c^H H w|^2 with H = sqrt(prefactor) a_rx a_tx^H alpha G_m,
        // w = a_tx, c = a_rx, built element by element.
        let s = ArraySpec {
            g_tx: 1.7,
            g_rx: 1.3,
            ..spec(3, 2)
        };
        let lambda = 1.0e-3;
        let a_tx = steering_vector(&s, lambda, 0.4, 1.2).unwrap();
        let a_rx = steering_vector(&s, lambda, 2.1, 0.9).unwrap();
        let (st, sr) = (5usize, 3usize);
        let m = s.elements() as f64;
        let alpha = Complex64::new(2e-7, -1e-7);
        let gm = 0.8;
        let pre = ((st as f64 * m) * (sr as f64 * m)).sqrt() * s.g_tx * s.g_rx;
        let doppler = Complex64::from_polar(1.0, 0.37);
        let mut h = Complex64::new(0.0, 0.0);
        for ar in &a_rx {
            for at in &a_tx {
                let entry = doppler * ar * at.conj() * alpha * gm * pre;
                h += ar.conj() * entry * at;
            }
        }
        let got = beamformed_gain(st, sr, &s, alpha.norm_sqr(), gm).unwrap();
        assert_relative_eq!(h.norm_sqr(), got, max_relative = 1e-12);
    }

    #[test]
    fn beamformed_gain_needs_both_ends() {
        assert!(beamformed_gain(0, 1, &spec(1, 1), 1.0, 1.0).is_err());
        assert!(beamformed_gain(1, 0, &spec(1, 1), 1.0, 1.0).is_err());
    }

    #[test]
    fn sinr_cases() {
        assert_eq!(sinr(0.0, 1e-9, 0.0, 1e-12).unwrap(), 0.0);
        assert_relative_eq!(sinr(1.0, 1e-12, 0.0, 1e-12).unwrap(), 1.0);
        assert!(sinr(1.0, 1.0, 0.0, 0.0).is_err());
        let mut last = -1.0;
        for p in [0.0, 0.1, 0.5, 1.0, 2.0] {
            let g = sinr(p, 1e-10, 1e-13, 1e-12).unwrap();
            assert!(g > last);
            last = g;
        }
    }

    #[test]
    fn link_rate_cases() {
        assert_eq!(link_rate(&[0.0; 5], 5e9), 0.0);
        assert_eq!(link_rate(&[1.0; 5], 5e9), 25e9);
        assert_eq!(link_rate(&[3.0, 1.0], 1.0), 3.0);
    }

    #[test]
    fn realization_is_reproducible() {
        let model = RadioModel {
            bands: BandPlan::contiguous(287.5e9, 5, 5e9, 0.005).unwrap(),
            array: ArraySpec {
                g_tx: 10f64.powf(0.25),
                g_rx: 10f64.powf(0.25),
                ..spec(4, 4)
            },
            noise: thermal_noise(296.0, 5e9),
            interference: Interference {
                mean: 2e-12,
                std: 1e-12,
            },
            misalignment: Misalignment {
                sigma_p: 0.02,
                w_eq: 0.1,
                a0: 1.0,
            },
        };
        let power = [0.2; 5];
        let link = LinkInput {
            from: 0,
            to: 1,
            distance: 320.0,
            radial_speed: 12.0,
            power: &power,
            tx_subarrays: 30,
            rx_subarrays: 20,
        };
        let a = model
            .realize(&link, &mut stream(3, Stream::Channel))
            .unwrap();
        let b = model
            .realize(&link, &mut stream(3, Stream::Channel))
            .unwrap();
        assert_eq!(a, b);
        assert!(a.rate > 0.0);
        assert_relative_eq!(a.doppler_phase.norm(), 1.0, epsilon = 1e-15);
        assert!(a.interference.iter().all(|i| *i >= 0.0));
    }
}
