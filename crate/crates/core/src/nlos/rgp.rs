//! Rosen gradient projection for `min p₂(x)` over the chain polytope.
//!
//! Constraint rows are `x_i − x_{i+1} ≤ −d` for `i < N` and
//! `x_N − x_1 ≤ D`. Rows 0-based: `0..N−1` are gaps, `N−1` is the aperture.

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use super::projection::project_chain;
use super::{grad_p2_slice, p2_slice};
use crate::error::{Error, Result};
use crate::types::{Apv, ChannelPaths, SystemParams};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RgpOptions {
    /// Stop when the projected gradient norm falls below this.
    pub tol: f64,
    pub max_iter: usize,
    pub armijo: f64,
    pub shrink: f64,
    pub max_backtracks: usize,
}

impl Default for RgpOptions {
    fn default() -> Self {
        RgpOptions {
            tol: 1e-3,
            max_iter: 500,
            armijo: 1e-4,
            shrink: 0.5,
            max_backtracks: 50,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RgpStatus {
    /// Projected gradient below tolerance with non-negative multipliers.
    Stationary,
    IterationCap,
    LineSearchFailed,
    /// The gradient is undefined at the iterate (`h ∥ a` or `h ⟂ a`).
    DegenerateGradient,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RgpStep {
    /// Iterate the step starts from.
    pub x: Vec<f64>,
    pub p2: f64,
    pub proj_grad_norm: f64,
    pub step: f64,
    pub active: Vec<usize>,
    pub dropped: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RgpResult {
    pub x: Apv,
    pub p2: f64,
    pub status: RgpStatus,
    pub iterations: usize,
    pub trace: Vec<RgpStep>,
}

fn row(r: usize, n: usize) -> Vec<f64> {
    let mut v = vec![0.0; n];
    if r + 1 < n {
        v[r] = 1.0;
        v[r + 1] = -1.0;
    } else {
        v[n - 1] = 1.0;
        v[0] = -1.0;
    }
    v
}

fn row_dot(r: usize, x: &[f64]) -> f64 {
    let n = x.len();
    if r + 1 < n {
        x[r] - x[r + 1]
    } else {
        x[n - 1] - x[0]
    }
}

fn row_bound(r: usize, n: usize, d: f64, aperture: f64) -> f64 {
    if r + 1 < n {
        -d
    } else {
        aperture
    }
}

/// Rows within `eps` of equality. When every row is active the aperture row
/// is left out, since the full set is linearly dependent.
pub fn active_rows(x: &[f64], d: f64, aperture: f64, eps: f64) -> Vec<usize> {
    let n = x.len();
    if n < 2 {
        return vec![];
    }
    let mut act: Vec<usize> = (0..n)
        .filter(|&r| row_bound(r, n, d, aperture) - row_dot(r, x) <= eps)
        .collect();
    if act.len() == n {
        act.pop();
    }
    act
}

fn matrix(rows: &[usize], n: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(rows.len(), n);
    for (k, &r) in rows.iter().enumerate() {
        for (j, v) in row(r, n).into_iter().enumerate() {
            m[(k, j)] = v;
        }
    }
    m
}

/// `I − Mᵀ(MMᵀ)⁻¹M` for the given rows.
pub fn projector(rows: &[usize], n: usize) -> Result<DMatrix<f64>> {
    let eye = DMatrix::identity(n, n);
    if rows.is_empty() {
        return Ok(eye);
    }
    let m = matrix(rows, n);
    let gram = (&m * m.transpose())
        .try_inverse()
        .ok_or(Error::SingularActiveGram)?;
    Ok(eye - m.transpose() * gram * m)
}

fn multipliers(rows: &[usize], n: usize, grad: &DVector<f64>) -> Result<DVector<f64>> {
    let m = matrix(rows, n);
    let gram = (&m * m.transpose())
        .try_inverse()
        .ok_or(Error::SingularActiveGram)?;
    Ok(-(gram * (m * grad)))
}

/// A point drawn uniformly from the feasible set up to translation: the
/// `N − 1` gap slacks and the aperture slack are uniform on the simplex of
/// total `D − (N−1)d`.
pub fn random_feasible_apv<R: Rng + ?Sized>(params: &SystemParams, rng: &mut R) -> Result<Apv> {
    let n = params.n_tx;
    let d = params.d_min;
    let b = params.aperture_tx - (n as f64 - 1.0) * d;
    if n == 0 || b < 0.0 {
        return Err(Error::InvalidGeometry(format!(
            "aperture {} cannot hold {n} antennas",
            params.aperture_tx
        )));
    }
    let mut cuts: Vec<f64> = (0..n.saturating_sub(1))
        .map(|_| rng.random::<f64>() * b)
        .collect();
    cuts.sort_by(f64::total_cmp);
    let mut x = vec![0.0];
    let mut prev = 0.0;
    for c in cuts.iter().take(n - 1) {
        let last = *x.last().unwrap();
        x.push(last + d + (c - prev));
        prev = *c;
    }
    Apv::new(x)
}

fn norm(v: &DVector<f64>) -> f64 {
    v.norm()
}

/// Minimizes `p₂` from a feasible start. Failure to make progress is reported
/// through [`RgpStatus`]; the best iterate is always returned.
pub fn rgp(
    x0: &Apv,
    paths: &ChannelPaths,
    params: &SystemParams,
    theta: f64,
    opts: RgpOptions,
) -> Result<RgpResult> {
    let d = params.d_min;
    let ap = params.aperture_tx;
    if !x0.is_feasible(d, ap, 1e-9) {
        return Err(Error::InvalidGeometry(
            "gradient projection start is infeasible".into(),
        ));
    }
    let n = x0.len();
    let eps = 1e-9 * ap.abs().max(1.0);
    let mut x = x0.positions().to_vec();
    let mut f = p2_slice(&x, paths, params, theta)?;
    let mut trace = Vec::new();
    let finish = |x: Vec<f64>, f, status, iterations, trace| -> Result<RgpResult> {
        Ok(RgpResult {
            x: Apv::new(x)?,
            p2: f,
            status,
            iterations,
            trace,
        })
    };
    for it in 0..opts.max_iter {
        let g = match grad_p2_slice(&x, paths, params, theta) {
            Ok(g) => DVector::from_vec(g),
            Err(Error::DegenerateArg(_)) => {
                return finish(x, f, RgpStatus::DegenerateGradient, it, trace)
            }
            Err(e) => return Err(e),
        };
        let mut act = active_rows(&x, d, ap, eps);
        let mut dropped = Vec::new();
        let s = loop {
            let pg = projector(&act, n)? * &g;
            if norm(&pg) >= opts.tol {
                break -pg;
            }
            if act.is_empty() {
                trace.push(RgpStep {
                    x: x.clone(),
                    p2: f,
                    proj_grad_norm: norm(&pg),
                    step: 0.0,
                    active: act,
                    dropped,
                });
                return finish(x, f, RgpStatus::Stationary, it, trace);
            }
            let u = multipliers(&act, n, &g)?;
            let (k, umin) =
                u.iter().enumerate().fold(
                    (0, f64::INFINITY),
                    |b, (k, &v)| if v < b.1 { (k, v) } else { b },
                );
            if umin >= 0.0 {
                trace.push(RgpStep {
                    x: x.clone(),
                    p2: f,
                    proj_grad_norm: norm(&pg),
                    step: 0.0,
                    active: act,
                    dropped,
                });
                return finish(x, f, RgpStatus::Stationary, it, trace);
            }
            dropped.push(act.remove(k));
        };
        let slope = s.norm_squared();
        // Largest step keeping the rows outside the working set satisfied.
        let mut alpha_max = f64::INFINITY;
        for r in (0..n).filter(|r| !act.contains(r)) {
            let us = row_dot(r, s.as_slice());
            if us > 0.0 {
                let slack = (row_bound(r, n, d, ap) - row_dot(r, &x)).max(0.0);
                alpha_max = alpha_max.min(slack / us);
            }
        }
        let mut alpha = alpha_max.min(1.0);
        let mut accepted = None;
        for _ in 0..=opts.max_backtracks {
            let cand: Vec<f64> = x.iter().zip(s.iter()).map(|(a, b)| a + alpha * b).collect();
            let cand = project_chain(&cand, d, ap);
            if let Ok(fc) = p2_slice(&cand, paths, params, theta) {
                if fc <= f - opts.armijo * alpha * slope {
                    accepted = Some((cand, fc));
                    break;
                }
            }
            alpha *= opts.shrink;
        }
        trace.push(RgpStep {
            x: x.clone(),
            p2: f,
            proj_grad_norm: slope.sqrt(),
            step: if accepted.is_some() { alpha } else { 0.0 },
            active: act,
            dropped,
        });
        match accepted {
            Some((xn, fn_)) => {
                x = xn;
                f = fn_;
            }
            None => return finish(x, f, RgpStatus::LineSearchFailed, it + 1, trace),
        }
    }
    finish(x, f, RgpStatus::IterationCap, opts.max_iter, trace)
}
