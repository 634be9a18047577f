//! Scenario configuration as read from TOML or the command line.
//!
//! Powers and thresholds are given in dB/dBm and angles in degrees here;
//! [`ScenarioConfig::system_params`] converts them once.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::SystemParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    /// Closed-form receive placement.
    RxClosedForm,
    BtBfs,
    BtDfs,
    MmRgp,
    RandomInitRgp,
    Ulah,
    Ulaf,
}

impl Scheme {
    pub fn name(self) -> &'static str {
        match self {
            Scheme::RxClosedForm => "rx-closed-form",
            Scheme::BtBfs => "bt-bfs",
            Scheme::BtDfs => "bt-dfs",
            Scheme::MmRgp => "mm-rgp",
            Scheme::RandomInitRgp => "random-init-rgp",
            Scheme::Ulah => "ulah",
            Scheme::Ulaf => "ulaf",
        }
    }

    pub fn moves_tx(self) -> bool {
        matches!(
            self,
            Scheme::BtBfs | Scheme::BtDfs | Scheme::MmRgp | Scheme::RandomInitRgp
        )
    }
}

/// Which array the scenario treats as movable. The other one is a
/// half-wavelength uniform array, and the ULA baselines replace the movable
/// one(s).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Movable {
    Rx,
    #[default]
    Tx,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepAxis {
    Gamma,
    Aperture,
    Ntx,
    Nrx,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::Gamma => "gamma_db",
            SweepAxis::Aperture => "aperture",
            SweepAxis::Ntx => "n_tx",
            SweepAxis::Nrx => "n_rx",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub axis: SweepAxis,
    pub values: Vec<f64>,
}

impl Default for SweepSpec {
    fn default() -> Self {
        SweepSpec {
            axis: SweepAxis::Gamma,
            values: (0..=6).map(|i| 5.0 * i as f64).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub n_tx: usize,
    pub n_rx: usize,
    pub d_min: f64,
    pub aperture_tx: f64,
    pub aperture_rx: f64,
    pub power_dbm: f64,
    pub noise_comm_dbm: f64,
    pub noise_radar_dbm: f64,
    pub gamma_db: f64,
    pub frame_len: usize,
    /// Target reflection coefficient `[re, im]`.
    pub reflect: [f64; 2],
    pub target_angle_deg: f64,
    /// Number of transmit paths `L_t`.
    pub paths: usize,
    /// Rician factor (linear).
    pub kappa: f64,
    /// Fixed AoD of the first path in degrees; drawn per trial when absent.
    pub los_aod_deg: Option<f64>,
    pub seed: u64,
    pub trials: usize,
    pub movable: Movable,
    pub schemes: Vec<Scheme>,
    pub quantize_step: Option<f64>,
    pub sweep: SweepSpec,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            n_tx: 18,
            n_rx: 20,
            d_min: 0.5,
            aperture_tx: 13.55,
            aperture_rx: 13.55,
            power_dbm: 20.0,
            noise_comm_dbm: 0.0,
            noise_radar_dbm: 0.0,
            gamma_db: 10.0,
            frame_len: 30,
            reflect: [1.0, 0.0],
            target_angle_deg: 0.0,
            paths: 18,
            kappa: 3.0,
            los_aod_deg: None,
            seed: 0,
            trials: 100,
            movable: Movable::Tx,
            schemes: vec![Scheme::MmRgp, Scheme::Ulah, Scheme::Ulaf],
            quantize_step: None,
            sweep: SweepSpec::default(),
        }
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(v: f64) -> f64 {
    10.0 * v.log10()
}

/// Default transmit and receive arrays hold 18 and 20 elements in 13.55λ.
const BASE_APERTURE: f64 = 13.55;
const BASE_TX: usize = 18;
const BASE_RX: usize = 20;

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ScenarioConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.check()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).unwrap_or_default()
    }

    /// The default scenario with fewer antennas and both apertures shrunk in
    /// proportion to the antenna count.
    pub fn scaled(n_tx: usize, n_rx: usize) -> Self {
        ScenarioConfig {
            n_tx,
            n_rx,
            aperture_tx: scaled_aperture(n_tx, BASE_TX),
            aperture_rx: scaled_aperture(n_rx, BASE_RX),
            ..ScenarioConfig::default()
        }
    }

    pub fn check(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if self.paths == 0 {
            return Err(Error::Config("need at least one path".into()));
        }
        if !(self.kappa >= 0.0) {
            return Err(Error::Config("kappa must be >= 0".into()));
        }
        if let Some(q) = self.quantize_step {
            if !(q > 0.0) {
                return Err(Error::Config("quantize_step must be positive".into()));
            }
        }
        if self.schemes.is_empty() {
            return Err(Error::Config("no schemes selected".into()));
        }
        let p = self.system_params();
        p.validate_geometry()
            .map_err(|e| Error::Config(e.to_string()))?;
        if !(p.power > 0.0 && p.noise_comm > 0.0 && p.noise_radar > 0.0) || p.frame_len == 0 {
            return Err(Error::Config(
                "powers and frame length must be positive".into(),
            ));
        }
        Ok(())
    }

    pub fn system_params(&self) -> SystemParams {
        SystemParams {
            d_min: self.d_min,
            aperture_tx: self.aperture_tx,
            aperture_rx: self.aperture_rx,
            n_tx: self.n_tx,
            n_rx: self.n_rx,
            power: db_to_linear(self.power_dbm),
            noise_comm: db_to_linear(self.noise_comm_dbm),
            noise_radar: db_to_linear(self.noise_radar_dbm),
            snr_threshold: db_to_linear(self.gamma_db),
            frame_len: self.frame_len,
            reflect: Complex64::new(self.reflect[0], self.reflect[1]),
            target_angle: self.target_angle_deg.to_radians(),
        }
    }

    /// Copy with one sweep coordinate applied. Aperture values go to every
    /// movable array.
    pub fn at(&self, axis: SweepAxis, value: f64) -> Result<Self> {
        let mut c = self.clone();
        match axis {
            SweepAxis::Gamma => c.gamma_db = value,
            SweepAxis::Aperture => {
                if matches!(c.movable, Movable::Tx | Movable::Both) {
                    c.aperture_tx = value;
                }
                if matches!(c.movable, Movable::Rx | Movable::Both) {
                    c.aperture_rx = value;
                }
            }
            SweepAxis::Ntx | SweepAxis::Nrx => {
                if !(value >= 1.0 && value.fract() == 0.0) {
                    return Err(Error::Config(format!(
                        "antenna count {value} is not a positive integer"
                    )));
                }
                if axis == SweepAxis::Ntx {
                    c.n_tx = value as usize;
                } else {
                    c.n_rx = value as usize;
                }
            }
        }
        Ok(c)
    }
}

pub fn scaled_aperture(n: usize, base: usize) -> f64 {
    BASE_APERTURE * (n.saturating_sub(1)) as f64 / (base - 1) as f64
}
