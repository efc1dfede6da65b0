//! Scenario configuration.
//!
//! Plain text, one `key = value` per line; `#` starts a comment. Every key
//! is optional and falls back to the defaults below. Keys:
//!
//! | key | default | meaning |
//! |-----|---------|---------|
//! | `N` | 25 | number of UAVs |
//! | `x_max`, `y_max` | 1000 | mission region (m) |
//! | `altitude` | 100 | common flight altitude (m) |
//! | `v_max` | 100 | maximal speed (m/s) |
//! | `d_max` | 500 | maximal link distance (m) |
//! | `placement_attempts` | 1000 | draws allowed to find a connected start |
//! | `K` | 5 | sub-bands |
//! | `bandwidth` | 5e9 | sub-band width (Hz) |
//! | `band_low` | 287.5e9 | lower edge of the first sub-band (Hz) |
//! | `g_abs` | 0.005 | absorption coefficient, all bands (1/m) |
//! | `mx`, `my` | 4 | antennas per sub-array axis |
//! | `spacing` | half wavelength at 300 GHz | antenna spacing (m) |
//! | `s_max` | 64 | sub-arrays per UAV |
//! | `gain_dbi` | 5 | Tx and Rx antenna gain (dBi) |
//! | `p_max_dbm` | 30 | transmit power budget (dBm) |
//! | `noise_temp` | 296 | noise temperature (K) |
//! | `buffer` | 500000 | buffer capacity (packets) |
//! | `packet_bytes` | 2000 | packet size (bytes) |
//! | `dt` | 0.1 | slot length (s) |
//! | `mean_rate` | 10e9 | mean offered load per UAV (bit/s) |
//! | `hurst` | 0.8 | Hurst exponent of the traffic, in [0.5, 1) |
//! | `sigma_tr` | 0.1 | traffic std as a fraction of the mean slot volume |
//! | `sigma_p` | 0 | pointing-error std (m); 0 disables misalignment |
//! | `w_eq` | 0.1 | equivalent beam width at the receiver (m) |
//! | `a0` | 1 | peak fraction of the misalignment gain |
//! | `interference_mean` | 0.1 | residual interference mean, fraction of noise |
//! | `interference_std` | 0.05 | residual interference std, fraction of noise |
//! | `hop_weight`, `loss_weight` | 1, 1 | routing edge cost weights |
//! | `chi1`, `chi2`, `chi3` | 10, 5000, 0.1 | reward weights |
//! | `kappa` | 0.5 | discount in the TD target (1 means undiscounted) |
//! | `lr_actor`, `lr_critic` | 2e-5, 1e-2 | Adam learning rates |
//! | `noise_scale` | 0.05 | exploration std as a fraction of each ratio |
//! | `safe_init` | 0.95 | initial used share of both resources |
//! | `hidden` | 64 | hidden width of actor and critic |
//! | `steps` | 1000 | training steps |
//! | `seed` | 1 | master seed |
//! | `ablation` | false | drop the self-node path (GNN-DDPG) |
//! | `t_max`, `l_max` | unset | report-only latency and loss thresholds |

use std::path::Path;
use std::str::FromStr;

use crate::channel::{ArraySpec, BandPlan, Interference, Misalignment, RadioModel};
use crate::error::{Error, Result};
use crate::network::{Region, RoutingWeights};
use crate::traffic::TrafficModel;
use crate::{BOLTZMANN, SPEED_OF_LIGHT};

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub n: usize,
    pub x_max: f64,
    pub y_max: f64,
    pub altitude: f64,
    pub v_max: f64,
    pub d_max: f64,
    pub placement_attempts: usize,
    pub k: usize,
    pub bandwidth: f64,
    pub band_low: f64,
    pub g_abs: f64,
    pub mx: usize,
    pub my: usize,
    pub spacing: f64,
    pub s_max: usize,
    pub gain_dbi: f64,
    pub p_max_dbm: f64,
    pub noise_temp: f64,
    pub buffer: usize,
    pub packet_bytes: f64,
    pub dt: f64,
    pub mean_rate: f64,
    pub hurst: f64,
    pub sigma_tr: f64,
    pub sigma_p: f64,
    pub w_eq: f64,
    pub a0: f64,
    pub interference_mean: f64,
    pub interference_std: f64,
    pub hop_weight: f64,
    pub loss_weight: f64,
    pub chi1: f64,
    pub chi2: f64,
    pub chi3: f64,
    pub kappa: f64,
    pub lr_actor: f64,
    pub lr_critic: f64,
    pub noise_scale: f64,
    pub safe_init: f64,
    pub hidden: usize,
    pub steps: usize,
    pub seed: u64,
    pub ablation: bool,
    pub t_max: Option<f64>,
    pub l_max: Option<f64>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            n: 25,
            x_max: 1000.0,
            y_max: 1000.0,
            altitude: 100.0,
            v_max: 100.0,
            d_max: 500.0,
            placement_attempts: 1000,
            k: 5,
            bandwidth: 5e9,
            band_low: 287.5e9,
            g_abs: 0.005,
            mx: 4,
            my: 4,
            spacing: SPEED_OF_LIGHT / 300e9 / 2.0,
            s_max: 64,
            gain_dbi: 5.0,
            p_max_dbm: 30.0,
            noise_temp: 296.0,
            buffer: 500_000,
            packet_bytes: 2000.0,
            dt: 0.1,
            mean_rate: 10e9,
            hurst: 0.8,
            sigma_tr: 0.1,
            sigma_p: 0.0,
            w_eq: 0.1,
            a0: 1.0,
            interference_mean: 0.1,
            interference_std: 0.05,
            hop_weight: 1.0,
            loss_weight: 1.0,
            chi1: 10.0,
            chi2: 5000.0,
            chi3: 0.1,
            kappa: 0.5,
            lr_actor: 2e-5,
            lr_critic: 1e-2,
            noise_scale: 0.05,
            safe_init: 0.95,
            hidden: 64,
            steps: 1000,
            seed: 1,
            ablation: false,
            t_max: None,
            l_max: None,
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::config(key, format!("cannot parse `{value}`")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value.to_ascii_lowercase().as_str() {
        "1" | "true" | "yes" | "on" => Ok(true),
        "0" | "false" | "no" | "off" => Ok(false),
        _ => Err(Error::config(
            key,
            format!("expected a boolean, got `{value}`"),
        )),
    }
}

fn parse_opt(key: &str, value: &str) -> Result<Option<f64>> {
    if value.is_empty() || value.eq_ignore_ascii_case("none") {
        Ok(None)
    } else {
        parse(key, value).map(Some)
    }
}

impl ScenarioConfig {
    /// Applies one `key=value` assignment.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key.trim() {
            "N" | "n" => self.n = parse(key, v)?,
            "x_max" => self.x_max = parse(key, v)?,
            "y_max" => self.y_max = parse(key, v)?,
            "altitude" => self.altitude = parse(key, v)?,
            "v_max" => self.v_max = parse(key, v)?,
            "d_max" => self.d_max = parse(key, v)?,
            "placement_attempts" => self.placement_attempts = parse(key, v)?,
            "K" | "k" => self.k = parse(key, v)?,
            "bandwidth" => self.bandwidth = parse(key, v)?,
            "band_low" => self.band_low = parse(key, v)?,
            "g_abs" => self.g_abs = parse(key, v)?,
            "mx" => self.mx = parse(key, v)?,
            "my" => self.my = parse(key, v)?,
            "spacing" => self.spacing = parse(key, v)?,
            "s_max" => self.s_max = parse(key, v)?,
            "gain_dbi" => self.gain_dbi = parse(key, v)?,
            "p_max_dbm" => self.p_max_dbm = parse(key, v)?,
            "noise_temp" => self.noise_temp = parse(key, v)?,
            "buffer" => self.buffer = parse(key, v)?,
            "packet_bytes" => self.packet_bytes = parse(key, v)?,
            "dt" => self.dt = parse(key, v)?,
            "mean_rate" => self.mean_rate = parse(key, v)?,
            "hurst" => self.hurst = parse(key, v)?,
            "sigma_tr" => self.sigma_tr = parse(key, v)?,
            "sigma_p" => self.sigma_p = parse(key, v)?,
            "w_eq" => self.w_eq = parse(key, v)?,
            "a0" => self.a0 = parse(key, v)?,
            "interference_mean" => self.interference_mean = parse(key, v)?,
            "interference_std" => self.interference_std = parse(key, v)?,
            "hop_weight" => self.hop_weight = parse(key, v)?,
            "loss_weight" => self.loss_weight = parse(key, v)?,
            "chi1" => self.chi1 = parse(key, v)?,
            "chi2" => self.chi2 = parse(key, v)?,
            "chi3" => self.chi3 = parse(key, v)?,
            "kappa" => self.kappa = parse(key, v)?,
            "lr_actor" => self.lr_actor = parse(key, v)?,
            "lr_critic" => self.lr_critic = parse(key, v)?,
            "noise_scale" => self.noise_scale = parse(key, v)?,
            "safe_init" => self.safe_init = parse(key, v)?,
            "hidden" => self.hidden = parse(key, v)?,
            "steps" => self.steps = parse(key, v)?,
            "seed" => self.seed = parse(key, v)?,
            "ablation" => self.ablation = parse_bool(key, v)?,
            "t_max" => self.t_max = parse_opt(key, v)?,
            "l_max" => self.l_max = parse_opt(key, v)?,
            other => return Err(Error::config(other, "unknown key")),
        }
        Ok(())
    }

    /// Applies a `key=value` string.
    pub fn apply_override(&mut self, assignment: &str) -> Result<()> {
        let (key, value) = assignment
            .split_once('=')
            .ok_or_else(|| Error::config(assignment.trim(), "expected key=value"))?;
        self.set(key, value)
    }

    /// Applies every assignment in a config text, without validating.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for line in text.lines() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            self.apply_override(line)?;
        }
        Ok(())
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        cfg.apply_text(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Defaults, then the file (if any), then the overrides; validated.
    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self> {
        let mut cfg = Self::default();
        if let Some(path) = path {
            let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            cfg.apply_text(&text)?;
        }
        for o in overrides {
            cfg.apply_override(o)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        fn positive(key: &str, v: f64) -> Result<()> {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::config(key, format!("must be positive, got {v}")))
            }
        }
        fn non_negative(key: &str, v: f64) -> Result<()> {
            if v >= 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::config(key, format!("must be non-negative, got {v}")))
            }
        }
        if self.n == 0 {
            return Err(Error::config("N", "need at least one UAV"));
        }
        positive("x_max", self.x_max)?;
        positive("y_max", self.y_max)?;
        non_negative("altitude", self.altitude)?;
        non_negative("v_max", self.v_max)?;
        positive("d_max", self.d_max)?;
        if self.k == 0 {
            return Err(Error::config("K", "need at least one sub-band"));
        }
        positive("bandwidth", self.bandwidth)?;
        positive("band_low", self.band_low)?;
        non_negative("g_abs", self.g_abs)?;
        if self.mx == 0 {
            return Err(Error::config("mx", "must be at least 1"));
        }
        if self.my == 0 {
            return Err(Error::config("my", "must be at least 1"));
        }
        positive("spacing", self.spacing)?;
        if self.s_max < 2 {
            return Err(Error::config("s_max", "must be at least 2"));
        }
        if self.s_max < self.n {
            // A UAV may need one Rx sub-array per in-link plus one Tx.
            return Err(Error::config(
                "s_max",
                format!("must be at least N = {}", self.n),
            ));
        }
        if !self.gain_dbi.is_finite() {
            return Err(Error::config("gain_dbi", "must be finite"));
        }
        if !self.p_max_dbm.is_finite() {
            return Err(Error::config("p_max_dbm", "must be finite"));
        }
        positive("noise_temp", self.noise_temp)?;
        if self.buffer == 0 {
            return Err(Error::config("buffer", "must be at least 1"));
        }
        positive("packet_bytes", self.packet_bytes)?;
        positive("dt", self.dt)?;
        non_negative("mean_rate", self.mean_rate)?;
        if !(0.5..1.0).contains(&self.hurst) {
            return Err(Error::config(
                "hurst",
                format!("must lie in [0.5, 1), got {}", self.hurst),
            ));
        }
        non_negative("sigma_tr", self.sigma_tr)?;
        non_negative("sigma_p", self.sigma_p)?;
        positive("w_eq", self.w_eq)?;
        if !(self.a0 > 0.0 && self.a0 <= 1.0) {
            return Err(Error::config(
                "a0",
                format!("must lie in (0, 1], got {}", self.a0),
            ));
        }
        non_negative("interference_mean", self.interference_mean)?;
        non_negative("interference_std", self.interference_std)?;
        non_negative("hop_weight", self.hop_weight)?;
        non_negative("loss_weight", self.loss_weight)?;
        if self.hop_weight == 0.0 && self.loss_weight == 0.0 {
            return Err(Error::config(
                "hop_weight",
                "routing weights cannot both be zero",
            ));
        }
        non_negative("chi1", self.chi1)?;
        non_negative("chi2", self.chi2)?;
        non_negative("chi3", self.chi3)?;
        if !(0.0..=1.0).contains(&self.kappa) {
            return Err(Error::config(
                "kappa",
                format!("must lie in [0, 1], got {}", self.kappa),
            ));
        }
        non_negative("lr_actor", self.lr_actor)?;
        non_negative("lr_critic", self.lr_critic)?;
        non_negative("noise_scale", self.noise_scale)?;
        if !(self.safe_init > 0.0 && self.safe_init < 1.0) {
            return Err(Error::config(
                "safe_init",
                format!("must lie in (0, 1), got {}", self.safe_init),
            ));
        }
        if self.hidden == 0 {
            return Err(Error::config("hidden", "must be at least 1"));
        }
        if let Some(t) = self.t_max {
            positive("t_max", t)?;
        }
        if let Some(l) = self.l_max {
            non_negative("l_max", l)?;
        }
        Ok(())
    }

    /// Serializes every key, in the order of the table above.
    pub fn to_text(&self) -> String {
        let opt = |v: Option<f64>| v.map_or_else(|| "none".to_string(), |x| x.to_string());
        let pairs: Vec<(&str, String)> = vec![
            ("N", self.n.to_string()),
            ("x_max", self.x_max.to_string()),
            ("y_max", self.y_max.to_string()),
            ("altitude", self.altitude.to_string()),
            ("v_max", self.v_max.to_string()),
            ("d_max", self.d_max.to_string()),
            ("placement_attempts", self.placement_attempts.to_string()),
            ("K", self.k.to_string()),
            ("bandwidth", self.bandwidth.to_string()),
            ("band_low", self.band_low.to_string()),
            ("g_abs", self.g_abs.to_string()),
            ("mx", self.mx.to_string()),
            ("my", self.my.to_string()),
            ("spacing", self.spacing.to_string()),
            ("s_max", self.s_max.to_string()),
            ("gain_dbi", self.gain_dbi.to_string()),
            ("p_max_dbm", self.p_max_dbm.to_string()),
            ("noise_temp", self.noise_temp.to_string()),
            ("buffer", self.buffer.to_string()),
            ("packet_bytes", self.packet_bytes.to_string()),
            ("dt", self.dt.to_string()),
            ("mean_rate", self.mean_rate.to_string()),
            ("hurst", self.hurst.to_string()),
            ("sigma_tr", self.sigma_tr.to_string()),
            ("sigma_p", self.sigma_p.to_string()),
            ("w_eq", self.w_eq.to_string()),
            ("a0", self.a0.to_string()),
            ("interference_mean", self.interference_mean.to_string()),
            ("interference_std", self.interference_std.to_string()),
            ("hop_weight", self.hop_weight.to_string()),
            ("loss_weight", self.loss_weight.to_string()),
            ("chi1", self.chi1.to_string()),
            ("chi2", self.chi2.to_string()),
            ("chi3", self.chi3.to_string()),
            ("kappa", self.kappa.to_string()),
            ("lr_actor", self.lr_actor.to_string()),
            ("lr_critic", self.lr_critic.to_string()),
            ("noise_scale", self.noise_scale.to_string()),
            ("safe_init", self.safe_init.to_string()),
            ("hidden", self.hidden.to_string()),
            ("steps", self.steps.to_string()),
            ("seed", self.seed.to_string()),
            ("ablation", self.ablation.to_string()),
            ("t_max", opt(self.t_max)),
            ("l_max", opt(self.l_max)),
        ];
        pairs
            .into_iter()
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect()
    }

    pub fn region(&self) -> Region {
        Region {
            x_max: self.x_max,
            y_max: self.y_max,
            altitude: self.altitude,
        }
    }

    /// Transmit power budget (W).
    pub fn p_max(&self) -> f64 {
        10f64.powf((self.p_max_dbm - 30.0) / 10.0)
    }

    pub fn packet_bits(&self) -> f64 {
        self.packet_bytes * 8.0
    }

    /// Amplitude gain of the antenna elements.
    pub fn element_gain(&self) -> f64 {
        10f64.powf(self.gain_dbi / 20.0)
    }

    /// Thermal noise per sub-band (W).
    pub fn noise_power(&self) -> f64 {
        BOLTZMANN * self.noise_temp * self.bandwidth
    }

    /// Expected locally generated packets per UAV per slot.
    pub fn mean_packets(&self) -> f64 {
        self.mean_rate * self.dt / self.packet_bits()
    }

    pub fn routing(&self) -> RoutingWeights {
        RoutingWeights {
            hop: self.hop_weight,
            loss: self.loss_weight,
        }
    }

    pub fn band_plan(&self) -> Result<BandPlan> {
        BandPlan::contiguous(self.band_low, self.k, self.bandwidth, self.g_abs)
    }

    pub fn array(&self) -> ArraySpec {
        let g = self.element_gain();
        ArraySpec {
            mx: self.mx,
            my: self.my,
            spacing: self.spacing,
            s_max: self.s_max,
            g_tx: g,
            g_rx: g,
        }
    }

    pub fn radio(&self) -> Result<RadioModel> {
        let noise = self.noise_power();
        let misalignment = Misalignment {
            sigma_p: self.sigma_p,
            w_eq: self.w_eq,
            a0: self.a0,
        };
        misalignment.validate()?;
        let array = self.array();
        array.validate()?;
        Ok(RadioModel {
            bands: self.band_plan()?,
            array,
            noise,
            interference: Interference {
                mean: self.interference_mean * noise,
                std: self.interference_std * noise,
            },
            misalignment,
        })
    }

    pub fn traffic(&self) -> TrafficModel {
        TrafficModel {
            mean_rate: self.mean_rate,
            hurst: self.hurst,
            sigma: self.sigma_tr * self.mean_rate * self.dt,
            packet_bits: self.packet_bits(),
        }
    }
}
