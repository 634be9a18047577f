//! Closed-form dual-function beamformer and its trigonometric form.
//!
//! For fixed positions the beamformer maximizing `|aᴴw|²` under
//! `‖w‖² = P` and `|hᴴw|² ≥ Γσ_C²` is either the matched beam toward the
//! target or, when that beam starves the user, a combination of the user
//! direction and the component of `a` orthogonal to it.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::signal::{inner, norm_sqr};
use crate::types::{BeamVector, SystemParams};

/// Slack allowed before an out-of-range cosine/sine argument is an error.
pub const CLAMP_TOL: f64 = 1e-9;

/// Which closed form produced the beamformer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    /// Matched beam toward the target; SNR constraint inactive.
    Matched,
    /// SNR constraint active.
    Split,
}

#[derive(Debug, Clone)]
pub struct Beamformer {
    pub w: BeamVector,
    pub branch: Branch,
}

/// Angles υ and φ with `cos υ = |hᴴa|/(‖h‖‖a‖)` and
/// `sin φ = √(Γσ_C²/(P‖h‖²))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrigState {
    pub upsilon: f64,
    pub phi: f64,
}

fn required(params: &SystemParams) -> f64 {
    params.snr_threshold * params.noise_comm
}

fn check_feasible(hn2: f64, params: &SystemParams) -> Result<()> {
    let req = required(params);
    let ach = params.power * hn2;
    if !(hn2 > 0.0) || req > ach {
        return Err(Error::Infeasible {
            required: req,
            achievable: ach,
        });
    }
    Ok(())
}

fn unit_phase(z: Complex64) -> Complex64 {
    let n = z.norm();
    if n > 0.0 {
        z / n
    } else {
        Complex64::new(1.0, 0.0)
    }
}

/// Unit-norm clamp of a cosine/sine argument; arguments beyond `1 + CLAMP_TOL`
/// are reported as errors.
pub fn clamp_unit(v: f64, what: &str) -> Result<f64> {
    if !(v >= -CLAMP_TOL) || v > 1.0 + CLAMP_TOL {
        return Err(Error::InvalidInput(format!("{what} = {v} outside [0, 1]")));
    }
    Ok(v.clamp(0.0, 1.0))
}

/// True when the matched beam already meets the SNR target strictly.
pub fn matched_branch(h: &[Complex64], a: &[Complex64], params: &SystemParams) -> bool {
    params.power * inner(h, a).norm_sqr() > norm_sqr(a) * required(params)
}

pub fn optimal_beamformer(
    h: &[Complex64],
    a: &[Complex64],
    params: &SystemParams,
) -> Result<Beamformer> {
    if h.len() != a.len() {
        return Err(Error::InvalidInput("h and a differ in length".into()));
    }
    let an2 = norm_sqr(a);
    if !(an2 > 0.0) {
        return Err(Error::InvalidInput("steering vector is zero".into()));
    }
    let hn2 = norm_sqr(h);
    check_feasible(hn2, params)?;
    let p = params.power;

    if matched_branch(h, a, params) {
        let s = (p / an2).sqrt();
        return Ok(Beamformer {
            w: BeamVector::new(a.iter().map(|z| z * s).collect()),
            branch: Branch::Matched,
        });
    }

    let hn = hn2.sqrt();
    let u1: Vec<Complex64> = h.iter().map(|z| z / hn).collect();
    let proj = inner(&u1, a);
    let resid: Vec<Complex64> = a.iter().zip(&u1).map(|(ai, ui)| ai - proj * ui).collect();
    let rn2 = norm_sqr(&resid);
    let c1_mag = (required(params) / hn2).sqrt();
    let c2_mag = (p - required(params) / hn2).max(0.0).sqrt();

    let w: Vec<Complex64> = if rn2 <= 1e-24 * an2 {
        // a ∥ h: the orthogonal component vanishes and all power follows h.
        let s = p.sqrt();
        u1.iter().map(|z| z * s).collect()
    } else {
        let rn = rn2.sqrt();
        let au: Vec<Complex64> = resid.iter().map(|z| z / rn).collect();
        let c1 = unit_phase(proj) * c1_mag;
        let c2 = unit_phase(inner(&au, a)) * c2_mag;
        u1.iter().zip(&au).map(|(x, y)| c1 * x + c2 * y).collect()
    };
    Ok(Beamformer {
        w: BeamVector::new(w),
        branch: Branch::Split,
    })
}

pub fn trig_state(h: &[Complex64], a: &[Complex64], params: &SystemParams) -> Result<TrigState> {
    let hn2 = norm_sqr(h);
    check_feasible(hn2, params)?;
    let an2 = norm_sqr(a);
    let cos_u = clamp_unit(inner(h, a).norm() / (hn2 * an2).sqrt(), "cos(upsilon)")?;
    let sin_p = clamp_unit((required(params) / (params.power * hn2)).sqrt(), "sin(phi)")?;
    Ok(TrigState {
        upsilon: cos_u.acos(),
        phi: sin_p.asin(),
    })
}

/// Target gain `|aᴴw|` of the split beamformer written directly in terms of
/// `h` and `a`.
pub fn ft_direct(h: &[Complex64], a: &[Complex64], params: &SystemParams) -> Result<f64> {
    let hn2 = norm_sqr(h);
    check_feasible(hn2, params)?;
    let an2 = norm_sqr(a);
    let ha2 = inner(h, a).norm_sqr();
    let req = required(params);
    Ok(req.sqrt() / hn2 * ha2.sqrt()
        + (params.power - req / hn2).max(0.0).sqrt() * ((hn2 * an2 - ha2).max(0.0) / hn2).sqrt())
}

/// Same quantity in the form `√(N P) sin(υ + φ)`.
pub fn ft_value(h: &[Complex64], a: &[Complex64], params: &SystemParams) -> Result<f64> {
    let ts = trig_state(h, a, params)?;
    Ok((norm_sqr(a) * params.power).sqrt() * (ts.upsilon + ts.phi).sin())
}

/// SNR threshold up to which the matched beam still serves the user:
/// `P |hᴴa|² / (N σ_C²)`.
pub fn gamma0(h: &[Complex64], a: &[Complex64], params: &SystemParams) -> f64 {
    params.power * inner(h, a).norm_sqr() / (norm_sqr(a) * params.noise_comm)
}

/// Increase of that threshold in dB when moving from one array to another:
/// `20 lg(|hᴴa|_new / |hᴴa|_ref)`.
pub fn gamma0_gain_db(
    h_new: &[Complex64],
    a_new: &[Complex64],
    h_ref: &[Complex64],
    a_ref: &[Complex64],
) -> f64 {
    20.0 * (inner(h_new, a_new).norm() / inner(h_ref, a_ref).norm()).log10()
}
