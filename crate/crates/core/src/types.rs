//! Core value types shared by every solver.
//!
//! All lengths are in wavelengths (λ = 1). Powers are linear.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Tolerance used when checking spacing and aperture constraints.
pub const FEAS_TOL: f64 = 1e-9;

/// Physical and algorithmic constants of one scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemParams {
    /// Minimum spacing between neighbouring antennas.
    pub d_min: f64,
    pub aperture_tx: f64,
    pub aperture_rx: f64,
    pub n_tx: usize,
    pub n_rx: usize,
    pub power: f64,
    pub noise_comm: f64,
    pub noise_radar: f64,
    /// User SNR threshold Γ (linear).
    pub snr_threshold: f64,
    pub frame_len: usize,
    pub reflect: Complex64,
    /// Target azimuth θ in radians.
    pub target_angle: f64,
}

impl Default for SystemParams {
    fn default() -> Self {
        // P_T = 20 dBm and σ² = 0 dBm expressed in mW.
        SystemParams {
            d_min: 0.5,
            aperture_tx: 13.55,
            aperture_rx: 13.55,
            n_tx: 18,
            n_rx: 20,
            power: 100.0,
            noise_comm: 1.0,
            noise_radar: 1.0,
            snr_threshold: 1.0,
            frame_len: 30,
            reflect: Complex64::new(1.0, 0.0),
            target_angle: 0.0,
        }
    }
}

impl SystemParams {
    /// Checks every scenario invariant.
    pub fn validate(&self) -> Result<()> {
        self.validate_geometry()?;
        if !(self.power > 0.0 && self.noise_comm > 0.0 && self.noise_radar > 0.0) {
            return Err(Error::InvalidInput("powers must be positive".into()));
        }
        if !(self.snr_threshold >= 0.0) || !self.snr_threshold.is_finite() {
            return Err(Error::InvalidInput(
                "SNR threshold must be finite and >= 0".into(),
            ));
        }
        if self.frame_len <= self.n_tx {
            return Err(Error::InvalidInput(format!(
                "frame length {} must exceed N_t = {}",
                self.frame_len, self.n_tx
            )));
        }
        if self.n_rx <= self.n_tx {
            return Err(Error::InvalidInput(format!(
                "N_r = {} must exceed N_t = {}",
                self.n_rx, self.n_tx
            )));
        }
        if self.reflect.norm() == 0.0 {
            return Err(Error::InvalidInput(
                "reflection coefficient must be nonzero".into(),
            ));
        }
        if !(self.target_angle.abs() < std::f64::consts::FRAC_PI_2) {
            return Err(Error::InvalidInput(
                "target angle must lie in (-pi/2, pi/2)".into(),
            ));
        }
        Ok(())
    }

    /// Spacing and aperture checks only; the solvers that touch a single
    /// array use this instead of [`SystemParams::validate`].
    pub fn validate_geometry(&self) -> Result<()> {
        if !(self.d_min > 0.0) || !self.d_min.is_finite() {
            return Err(Error::InvalidGeometry("d_min must be positive".into()));
        }
        if self.n_tx == 0 || self.n_rx == 0 {
            return Err(Error::InvalidGeometry("antenna counts must be >= 1".into()));
        }
        let need_tx = (self.n_tx - 1) as f64 * self.d_min;
        if self.aperture_tx < need_tx - FEAS_TOL {
            return Err(Error::InvalidGeometry(format!(
                "D_x = {} < (N_t-1) d = {}",
                self.aperture_tx, need_tx
            )));
        }
        let need_rx = (self.n_rx - 1) as f64 * self.d_min;
        if self.aperture_rx < need_rx - FEAS_TOL {
            return Err(Error::InvalidGeometry(format!(
                "D_y = {} < (N_r-1) d = {}",
                self.aperture_rx, need_rx
            )));
        }
        Ok(())
    }
}

/// Antenna position vector: strictly increasing coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct Apv {
    positions: Vec<f64>,
}

impl Apv {
    /// Builds an APV, rejecting empty, non-finite or non-increasing input.
    pub fn new(positions: Vec<f64>) -> Result<Self> {
        if positions.is_empty() {
            return Err(Error::InvalidGeometry("empty position vector".into()));
        }
        if positions.iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidGeometry("non-finite position".into()));
        }
        if positions.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidGeometry(
                "positions must be strictly increasing".into(),
            ));
        }
        Ok(Apv { positions })
    }

    /// Builds an APV that must also meet the spacing and aperture limits.
    pub fn with_constraints(positions: Vec<f64>, d_min: f64, aperture: f64) -> Result<Self> {
        let apv = Apv::new(positions)?;
        if !apv.is_feasible(d_min, aperture, FEAS_TOL) {
            return Err(Error::InvalidGeometry(format!(
                "positions violate spacing {d_min} or aperture {aperture}"
            )));
        }
        Ok(apv)
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn span(&self) -> f64 {
        self.positions[self.positions.len() - 1] - self.positions[0]
    }

    pub fn min_gap(&self) -> f64 {
        self.positions
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::INFINITY, f64::min)
    }

    pub fn is_feasible(&self, d_min: f64, aperture: f64, tol: f64) -> bool {
        self.positions
            .windows(2)
            .all(|w| w[1] - w[0] >= d_min - tol)
            && self.span() <= aperture + tol
    }

    /// Shifts so that the first antenna sits at 0.
    pub fn anchored(&self) -> Apv {
        let x0 = self.positions[0];
        Apv {
            positions: self.positions.iter().map(|p| p - x0).collect(),
        }
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.positions
    }
}

/// Multipath description of the transmitter-to-user link.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelPaths {
    gains: Vec<Complex64>,
    aods: Vec<f64>,
}

impl ChannelPaths {
    pub fn new(gains: Vec<Complex64>, aods: Vec<f64>) -> Result<Self> {
        if gains.is_empty() {
            return Err(Error::InvalidInput("at least one path is required".into()));
        }
        if gains.len() != aods.len() {
            return Err(Error::InvalidInput(format!(
                "{} gains but {} departure angles",
                gains.len(),
                aods.len()
            )));
        }
        Ok(ChannelPaths { gains, aods })
    }

    /// Unit-gain single path.
    pub fn los(aod: f64) -> Self {
        ChannelPaths {
            gains: vec![Complex64::new(1.0, 0.0)],
            aods: vec![aod],
        }
    }

    pub fn gains(&self) -> &[Complex64] {
        &self.gains
    }

    pub fn aods(&self) -> &[f64] {
        &self.aods
    }

    pub fn num_paths(&self) -> usize {
        self.gains.len()
    }
}

/// Transmit beamforming vector.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamVector {
    weights: Vec<Complex64>,
}

impl BeamVector {
    pub fn new(weights: Vec<Complex64>) -> Self {
        BeamVector { weights }
    }

    /// Rejects vectors whose energy exceeds the budget.
    pub fn with_budget(weights: Vec<Complex64>, power: f64) -> Result<Self> {
        let bv = BeamVector { weights };
        let e = bv.norm_sqr();
        if e > power * (1.0 + 1e-9) + 1e-12 {
            return Err(Error::InvalidInput(format!(
                "beam energy {e} exceeds budget {power}"
            )));
        }
        Ok(bv)
    }

    pub fn weights(&self) -> &[Complex64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.weights.iter().map(|w| w.norm_sqr()).sum()
    }
}

/// Angle-estimation bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrbValue {
    /// Variance bound in rad².
    pub crb: f64,
    /// Square root in rad.
    pub root_crb: f64,
}

impl CrbValue {
    pub fn new(crb: f64) -> Self {
        CrbValue {
            crb,
            root_crb: crb.sqrt(),
        }
    }

    pub fn root_crb_deg(&self) -> f64 {
        self.root_crb.to_degrees()
    }
}
