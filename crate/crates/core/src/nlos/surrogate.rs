//! `p₁(x) = |hᴴa|²` and its separable quadratic minorant.
//!
//! Writing `ψ_p(x) = Σ_i exp(−j α_p x_i)` with `α_p = 2π(sin θ_p + sin θ)`
//! gives `hᴴa = σᴴψ` and `p₁ = ψᴴ σσᴴ ψ`. Convexity of the quadratic form
//! gives the tangent bound `p₁(x) ≥ p₁(xⁱ) + 2(p̄₁(x) − p̄₁(xⁱ))` with
//! `p̄₁(x) = Re(zᴴψ(x))`, `z = σσᴴψ(xⁱ)`. The Hessian of `p̄₁` is diagonal and
//! bounded by `δ₁ = Σ_p α_p² |z_p|`.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::types::{Apv, ChannelPaths};

/// Floor on the curvature bound so the quadratic step stays finite.
pub const DELTA_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct SurrogateState {
    pub z: Vec<Complex64>,
    pub grad: Vec<f64>,
    pub hess_diag: Vec<f64>,
    pub delta1: f64,
    pub alphas: Vec<f64>,
}

pub fn alphas(paths: &ChannelPaths, theta: f64) -> Vec<f64> {
    let st = theta.sin();
    paths
        .aods()
        .iter()
        .map(|t| 2.0 * PI * (t.sin() + st))
        .collect()
}

pub fn psi(x: &[f64], alphas: &[f64]) -> Vec<Complex64> {
    alphas
        .iter()
        .map(|&a| {
            x.iter()
                .map(|&xi| Complex64::from_polar(1.0, -a * xi))
                .sum()
        })
        .collect()
}

/// `σᴴψ(x)`, which equals `hᴴa`.
pub fn hta(x: &[f64], paths: &ChannelPaths, theta: f64) -> Complex64 {
    let al = alphas(paths, theta);
    paths
        .gains()
        .iter()
        .zip(psi(x, &al))
        .map(|(s, p)| s.conj() * p)
        .sum()
}

pub fn p1_slice(x: &[f64], paths: &ChannelPaths, theta: f64) -> f64 {
    hta(x, paths, theta).norm_sqr()
}

/// `|h(x)ᴴa(x)|²`.
pub fn p1(x: &Apv, paths: &ChannelPaths, theta: f64) -> f64 {
    p1_slice(x.positions(), paths, theta)
}

/// Gradient of `p₁` in the positions.
pub fn grad_p1(x: &[f64], paths: &ChannelPaths, theta: f64) -> Vec<f64> {
    let al = alphas(paths, theta);
    let v = hta(x, paths, theta);
    x.iter()
        .map(|&xi| {
            let dv: Complex64 = paths
                .gains()
                .iter()
                .zip(&al)
                .map(|(s, &a)| {
                    s.conj() * Complex64::new(0.0, -a) * Complex64::from_polar(1.0, -a * xi)
                })
                .sum();
            2.0 * (v.conj() * dv).re
        })
        .collect()
}

/// `p̄₁(x) = Re(zᴴψ(x))` for a fixed `z`.
pub fn pbar1(x: &[f64], z: &[Complex64], alphas: &[f64]) -> f64 {
    z.iter()
        .zip(alphas)
        .map(|(zp, &a)| {
            x.iter()
                .map(|&xi| zp.re * (a * xi).cos() - zp.im * (a * xi).sin())
                .sum::<f64>()
        })
        .sum()
}

/// Diagonal Hessian of `p̄₁` at `x` for a fixed `z`.
pub fn pbar1_hess_diag(x: &[f64], z: &[Complex64], alphas: &[f64]) -> Vec<f64> {
    x.iter()
        .map(|&xi| {
            z.iter()
                .zip(alphas)
                .map(|(zp, &a)| -zp.re * a * a * (a * xi).cos() + zp.im * a * a * (a * xi).sin())
                .sum()
        })
        .collect()
}

pub fn surrogate(x: &Apv, paths: &ChannelPaths, theta: f64) -> SurrogateState {
    let xs = x.positions();
    let al = alphas(paths, theta);
    let ps = psi(xs, &al);
    let v: Complex64 = paths
        .gains()
        .iter()
        .zip(&ps)
        .map(|(s, p)| s.conj() * p)
        .sum();
    let z: Vec<Complex64> = paths.gains().iter().map(|s| s * v).collect();
    let grad = xs
        .iter()
        .map(|&xi| {
            z.iter()
                .zip(&al)
                .map(|(zp, &a)| -zp.re * a * (a * xi).sin() - zp.im * a * (a * xi).cos())
                .sum()
        })
        .collect();
    let delta1 = z
        .iter()
        .zip(&al)
        .map(|(zp, &a)| a * a * zp.norm())
        .sum::<f64>()
        .max(DELTA_FLOOR);
    SurrogateState {
        hess_diag: pbar1_hess_diag(xs, &z, &al),
        z,
        grad,
        delta1,
        alphas: al,
    }
}
