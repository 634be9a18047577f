//! Transmit-array placement under multipath channels.
//!
//! The problem splits on whether some layout lets the matched beam meet the
//! SNR target (`p₁(x) > (N/P)Γσ_C²`). [`mm_sp1`] climbs `p₁` by
//! minorize-maximize steps and stops at the first such layout. If none is
//! found, [`rgp`] minimizes `p₂ = υ + φ` by gradient projection from the MM
//! end point.

mod projection;
mod rgp;
mod surrogate;

use num_complex::Complex64;

pub use projection::{isotonic, project_chain, projection_kkt_residual, solve_chain_qp};
pub use rgp::{
    active_rows, projector, random_feasible_apv, rgp, RgpOptions, RgpResult, RgpStatus, RgpStep,
};
pub use surrogate::{
    alphas, grad_p1, hta, p1, p1_slice, pbar1, pbar1_hess_diag, psi, surrogate, SurrogateState,
};

use crate::beamforming::{clamp_unit, optimal_beamformer, Branch};
use crate::error::{Error, Result};
use crate::los::solve_los;
use crate::receive::ulah_positions;
use crate::signal::{channel, crb_simplified, norm_sqr, steering};
use crate::types::{Apv, BeamVector, ChannelPaths, CrbValue, SystemParams};

/// One MM update: projection of `xⁱ + ∇p̄₁/δ₁` onto the feasible chain.
pub fn solve_qp_step(x: &Apv, surr: &SurrogateState, params: &SystemParams) -> Result<Apv> {
    let v: Vec<f64> = x
        .positions()
        .iter()
        .zip(&surr.grad)
        .map(|(xi, g)| xi + g / surr.delta1)
        .collect();
    let out = project_chain(&v, params.d_min, params.aperture_tx);
    Apv::new(out)
}

/// `(N/P)Γσ_C²`: `p₁` above this lets the matched beam serve the user.
pub fn sp1_threshold(n: usize, params: &SystemParams) -> f64 {
    n as f64 / params.power * params.snr_threshold * params.noise_comm
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MmStatus {
    /// An iterate satisfies the SNR condition with the matched beam.
    Feasible,
    /// Converged without meeting it.
    NotFound,
    IterationCap,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MmOutcome {
    pub status: MmStatus,
    pub x: Apv,
    pub p1_trace: Vec<f64>,
    pub delta_trace: Vec<f64>,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MmOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for MmOptions {
    fn default() -> Self {
        MmOptions {
            tol: 1e-3,
            max_iter: 500,
        }
    }
}

pub fn mm_sp1(
    x0: &Apv,
    paths: &ChannelPaths,
    params: &SystemParams,
    theta: f64,
    opts: MmOptions,
) -> Result<MmOutcome> {
    if !x0.is_feasible(params.d_min, params.aperture_tx, 1e-9) {
        return Err(Error::InvalidGeometry(
            "MM start point is infeasible".into(),
        ));
    }
    let thresh = sp1_threshold(x0.len(), params);
    let mut x = x0.clone();
    let mut p = p1(&x, paths, theta);
    let mut p1_trace = vec![p];
    let mut delta_trace = Vec::new();
    if p > thresh {
        return Ok(MmOutcome {
            status: MmStatus::Feasible,
            x,
            p1_trace,
            delta_trace,
            iterations: 0,
        });
    }
    for it in 1..=opts.max_iter {
        let surr = surrogate(&x, paths, theta);
        delta_trace.push(surr.delta1);
        let xn = solve_qp_step(&x, &surr, params)?;
        let pn = p1(&xn, paths, theta);
        p1_trace.push(pn);
        let done = (pn - p).abs() < opts.tol;
        x = xn;
        p = pn;
        if p > thresh {
            return Ok(MmOutcome {
                status: MmStatus::Feasible,
                x,
                p1_trace,
                delta_trace,
                iterations: it,
            });
        }
        if done {
            return Ok(MmOutcome {
                status: MmStatus::NotFound,
                x,
                p1_trace,
                delta_trace,
                iterations: it,
            });
        }
    }
    Ok(MmOutcome {
        status: MmStatus::IterationCap,
        x,
        p1_trace,
        delta_trace,
        iterations: opts.max_iter,
    })
}

/// `‖h(x)‖²` from the multipath sum.
pub fn channel_norm_sqr(x: &[f64], paths: &ChannelPaths) -> f64 {
    let betas: Vec<f64> = paths
        .aods()
        .iter()
        .map(|t| 2.0 * std::f64::consts::PI * t.sin())
        .collect();
    x.iter()
        .map(|&xk| {
            paths
                .gains()
                .iter()
                .zip(&betas)
                .map(|(s, &b)| s.conj() * Complex64::from_polar(1.0, -b * xk))
                .sum::<Complex64>()
                .norm_sqr()
        })
        .sum()
}

fn grad_channel_norm_sqr(x: &[f64], paths: &ChannelPaths) -> Vec<f64> {
    let betas: Vec<f64> = paths
        .aods()
        .iter()
        .map(|t| 2.0 * std::f64::consts::PI * t.sin())
        .collect();
    x.iter()
        .map(|&xk| {
            let mut c = Complex64::new(0.0, 0.0);
            let mut dc = Complex64::new(0.0, 0.0);
            for (s, &b) in paths.gains().iter().zip(&betas) {
                let e = s.conj() * Complex64::from_polar(1.0, -b * xk);
                c += e;
                dc += Complex64::new(0.0, -b) * e;
            }
            2.0 * (c.conj() * dc).re
        })
        .collect()
}

fn p2_parts(
    x: &[f64],
    paths: &ChannelPaths,
    params: &SystemParams,
    theta: f64,
) -> Result<(f64, f64, f64, f64)> {
    let n = x.len() as f64;
    let hn2 = channel_norm_sqr(x, paths);
    let req = params.snr_threshold * params.noise_comm;
    if !(hn2 > 0.0) || req > params.power * hn2 {
        return Err(Error::Infeasible {
            required: req,
            achievable: params.power * hn2,
        });
    }
    let pp = p1_slice(x, paths, theta);
    let u = pp / (n * hn2);
    let v = req / (params.power * hn2);
    Ok((pp, hn2, u, v))
}

pub fn p2_slice(x: &[f64], paths: &ChannelPaths, params: &SystemParams, theta: f64) -> Result<f64> {
    let (_, _, u, v) = p2_parts(x, paths, params, theta)?;
    let cu = clamp_unit(u.sqrt(), "cos(upsilon)")?;
    let sv = clamp_unit(v.sqrt(), "sin(phi)")?;
    Ok(cu.acos() + sv.asin())
}

/// `arccos √(p₁/(N‖h‖²)) + arcsin √(Γσ_C²/(P‖h‖²))`.
pub fn p2(x: &Apv, paths: &ChannelPaths, params: &SystemParams, theta: f64) -> Result<f64> {
    p2_slice(x.positions(), paths, params, theta)
}

/// Endpoint margin below which the arccos/arcsin derivatives are unusable.
const ARG_MARGIN: f64 = 1e-12;

pub fn grad_p2_slice(
    x: &[f64],
    paths: &ChannelPaths,
    params: &SystemParams,
    theta: f64,
) -> Result<Vec<f64>> {
    let n = x.len() as f64;
    let (pp, hn2, u, v) = p2_parts(x, paths, params, theta)?;
    if !(u > ARG_MARGIN && u < 1.0 - ARG_MARGIN) {
        return Err(Error::DegenerateArg(format!("cos^2(upsilon) = {u}")));
    }
    let gamma_on = params.snr_threshold > 0.0;
    if gamma_on && v > 1.0 - ARG_MARGIN {
        return Err(Error::DegenerateArg(format!("sin^2(phi) = {v}")));
    }
    let dp = grad_p1(x, paths, theta);
    let dh = grad_channel_norm_sqr(x, paths);
    // d arccos(√u) = −du / (2√u √(1−u)).
    let cu = -1.0 / (2.0 * (u * (1.0 - u)).sqrt());
    let req = params.snr_threshold * params.noise_comm;
    let cv = if gamma_on {
        1.0 / (2.0 * (v * (1.0 - v)).sqrt())
    } else {
        0.0
    };
    Ok(dp
        .iter()
        .zip(&dh)
        .map(|(dpi, dhi)| {
            let du = (dpi * hn2 - pp * dhi) / (n * hn2 * hn2);
            let dv = -req / (params.power * hn2 * hn2) * dhi;
            cu * du + cv * dv
        })
        .collect())
}

pub fn grad_p2(
    x: &Apv,
    paths: &ChannelPaths,
    params: &SystemParams,
    theta: f64,
) -> Result<Vec<f64>> {
    grad_p2_slice(x.positions(), paths, params, theta)
}

/// Where the MM stage starts when no explicit point is given.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NlosInit {
    /// Line-of-sight optimum for the strongest path.
    #[default]
    LosOptimal,
    Ulah,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct NlosOptions {
    pub mm: MmOptions,
    pub rgp: RgpOptions,
    pub init: NlosInit,
}

/// Start point for [`solve_transmit_nlos`]. The line-of-sight optimum falls
/// back to the half-wavelength array if the boundary search fails.
pub fn default_start(paths: &ChannelPaths, params: &SystemParams, init: NlosInit) -> Result<Apv> {
    let ulah = || ulah_positions(params.n_tx, params.d_min);
    match init {
        NlosInit::Ulah => ulah(),
        NlosInit::LosOptimal => {
            let strongest = paths
                .gains()
                .iter()
                .zip(paths.aods())
                .max_by(|a, b| a.0.norm_sqr().total_cmp(&b.0.norm_sqr()))
                .map(|(_, &aod)| aod)
                .unwrap_or(0.0);
            match solve_los(params, strongest, params.target_angle) {
                Ok(s) => Ok(s.apv),
                Err(Error::DegenerateCoefficient { .. }) => ulah(),
                Err(e) => Err(e),
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct NlosSolution {
    pub x: Apv,
    pub w: BeamVector,
    pub crb: CrbValue,
    pub branch: Branch,
    pub mm: MmOutcome,
    pub rgp: Option<RgpResult>,
}

/// MM first; if it cannot serve the user with the matched beam, gradient
/// projection from the MM end point. `rx` is the receive array used in the
/// CRB; `x0` overrides the start chosen by `opts.init`.
pub fn solve_transmit_nlos(
    paths: &ChannelPaths,
    params: &SystemParams,
    rx: &Apv,
    x0: Option<&Apv>,
    opts: NlosOptions,
) -> Result<NlosSolution> {
    let theta = params.target_angle;
    if paths.gains().iter().all(|g| g.norm() == 0.0) {
        return Err(Error::Infeasible {
            required: params.snr_threshold * params.noise_comm,
            achievable: 0.0,
        });
    }
    let start = match x0 {
        Some(x) => x.clone(),
        None => default_start(paths, params, opts.init)?,
    };
    let mm = mm_sp1(&start, paths, params, theta, opts.mm)?;
    let (x, rgp_out) = if mm.status == MmStatus::Feasible {
        (mm.x.clone(), None)
    } else {
        let r = rgp(&mm.x, paths, params, theta, opts.rgp)?;
        (r.x.clone(), Some(r))
    };
    let h = channel(&x, paths);
    if !(norm_sqr(&h) > 0.0) {
        return Err(Error::Infeasible {
            required: params.snr_threshold * params.noise_comm,
            achievable: 0.0,
        });
    }
    let a = steering(&x, theta);
    let bf = optimal_beamformer(&h, &a, params)?;
    let crb = crb_simplified(&x, rx, &bf.w, params)?;
    Ok(NlosSolution {
        x,
        w: bf.w,
        crb,
        branch: bf.branch,
        mm,
        rgp: rgp_out,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::beamforming::trig_state;
    use crate::oracle::fd_gradient;
    use crate::signal::crb_floor;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn params(n: usize, gamma: f64) -> SystemParams {
        SystemParams {
            n_tx: n,
            n_rx: n + 2,
            aperture_tx: (n - 1) as f64 * 0.5 + 2.0,
            aperture_rx: (n + 1) as f64 * 0.5,
            snr_threshold: gamma,
            ..SystemParams::default()
        }
    }

    fn random_paths(rng: &mut ChaCha8Rng, l: usize) -> ChannelPaths {
        ChannelPaths::new(
            (0..l)
                .map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
                .collect(),
            (0..l).map(|_| rng.random::<f64>() * 3.0 - 1.5).collect(),
        )
        .unwrap()
    }

    #[test]
    fn p2_examples() {
        // One antenna: h ∥ a always.
        let x = Apv::new(vec![0.0]).unwrap();
        let p = params(1, 0.0);
        assert!(p2(&x, &ChannelPaths::los(0.4), &p, 0.0).unwrap().abs() < 1e-7);
        // h ⟂ a: two antennas at spacing 0.5 with sin θ_t + sin θ = 1.
        let x = Apv::new(vec![0.0, 0.5]).unwrap();
        let p = params(2, 0.0);
        let v = p2(&x, &ChannelPaths::los(std::f64::consts::FRAC_PI_2), &p, 0.0).unwrap();
        assert!((v - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
    }

    #[test]
    fn p2_matches_trig_state() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let paths = random_paths(&mut rng, 4);
        let p = params(5, 2.0);
        let x = random_feasible_apv(&p, &mut rng).unwrap();
        let h = channel(&x, &paths);
        let a = steering(&x, 0.0);
        let ts = trig_state(&h, &a, &p).unwrap();
        let v = p2(&x, &paths, &p, 0.0).unwrap();
        assert!((v - ts.upsilon - ts.phi).abs() < 1e-12);
        assert!(
            (channel_norm_sqr(x.positions(), &paths) - norm_sqr(&h)).abs() < 1e-12 * norm_sqr(&h)
        );
    }

    #[test]
    fn grad_p2_matches_fd() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for l in [1, 4, 18] {
            let paths = random_paths(&mut rng, l);
            let p = params(6, 0.3);
            let x = random_feasible_apv(&p, &mut rng).unwrap();
            let Ok(g) = grad_p2(&x, &paths, &p, 0.1) else {
                continue;
            };
            let fd = fd_gradient(
                |v| p2_slice(v, &paths, &p, 0.1).unwrap(),
                x.positions(),
                1e-6,
            );
            let scale = fd.iter().map(|v| v * v).sum::<f64>().sqrt();
            for (a, b) in g.iter().zip(&fd) {
                assert!((a - b).abs() < 1e-5 * scale.max(1e-3), "{a} vs {b}");
            }
        }
    }

    #[test]
    fn single_path_gradient_sums_to_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let paths = ChannelPaths::new(vec![Complex64::new(0.8, 0.3)], vec![0.9]).unwrap();
        let p = params(5, 1.0);
        let x = random_feasible_apv(&p, &mut rng).unwrap();
        assert!(grad_channel_norm_sqr(x.positions(), &paths)
            .iter()
            .all(|v| v.abs() < 1e-12));
        let g = grad_p2(&x, &paths, &p, 0.2).unwrap();
        assert!(g.iter().sum::<f64>().abs() < 1e-8);
    }

    #[test]
    fn zero_threshold_feasible_at_start() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let paths = random_paths(&mut rng, 3);
        let p = params(4, 0.0);
        let x0 = ulah_positions(4, 0.5).unwrap();
        let out = mm_sp1(&x0, &paths, &p, 0.0, MmOptions::default()).unwrap();
        assert_eq!(out.status, MmStatus::Feasible);
        assert_eq!(out.iterations, 0);
    }

    #[test]
    fn mm_is_monotone() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..20 {
            let paths = random_paths(&mut rng, 5);
            let p = params(6, 1e6);
            let x0 = ulah_positions(6, 0.5).unwrap();
            let out = mm_sp1(&x0, &paths, &p, 0.0, MmOptions::default()).unwrap();
            assert_ne!(out.status, MmStatus::Feasible);
            for w in out.p1_trace.windows(2) {
                assert!(w[1] >= w[0] - 1e-9);
            }
        }
    }

    #[test]
    fn low_threshold_reaches_crb_floor() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let paths = random_paths(&mut rng, 4);
        let p = params(5, 0.01);
        let rx = ulah_positions(7, 0.5).unwrap();
        let sol = solve_transmit_nlos(&paths, &p, &rx, None, NlosOptions::default()).unwrap();
        assert_eq!(sol.branch, Branch::Matched);
        let floor = crb_floor(&sol.x, &rx, &p).unwrap();
        assert!((sol.crb.crb - floor.crb).abs() < 1e-9 * floor.crb);
    }

    #[test]
    fn zero_gains_are_infeasible() {
        let paths = ChannelPaths::new(vec![Complex64::new(0.0, 0.0)], vec![0.3]).unwrap();
        let p = params(3, 1.0);
        let rx = ulah_positions(5, 0.5).unwrap();
        assert!(matches!(
            solve_transmit_nlos(&paths, &p, &rx, None, NlosOptions::default()),
            Err(Error::Infeasible { .. })
        ));
    }
}
