//! Steering vectors, channel model, user SNR, angle CRB and beampatterns.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::types::{Apv, BeamVector, ChannelPaths, CrbValue, SystemParams};

/// `aᴴb`.
pub fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn norm_sqr(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum()
}

/// Entry i is `exp(-j 2π x_i sin(angle))`.
pub fn steering(apv: &Apv, angle: f64) -> Vec<Complex64> {
    let s = angle.sin();
    apv.positions()
        .iter()
        .map(|&x| Complex64::from_polar(1.0, -2.0 * PI * x * s))
        .collect()
}

/// Field-response matrix stored row-major: row p is the response of path p
/// across all antennas.
pub fn field_response(apv: &Apv, paths: &ChannelPaths) -> Vec<Vec<Complex64>> {
    paths.aods().iter().map(|&t| steering(apv, t)).collect()
}

/// Channel vector h with `hᴴ = σᴴ G(x)`.
pub fn channel(apv: &Apv, paths: &ChannelPaths) -> Vec<Complex64> {
    let mut h = vec![Complex64::new(0.0, 0.0); apv.len()];
    for (g, &t) in paths.gains().iter().zip(paths.aods()) {
        let s = t.sin();
        for (hk, &x) in h.iter_mut().zip(apv.positions()) {
            *hk += g * Complex64::from_polar(1.0, 2.0 * PI * x * s);
        }
    }
    h
}

/// `|hᴴw|² / σ_C²`.
pub fn user_snr(h: &[Complex64], w: &BeamVector, noise_comm: f64) -> f64 {
    inner(h, w.weights()).norm_sqr() / noise_comm
}

/// Receive-array spread `Σy² − (Σy)²/N`, computed about the mean.
pub fn spread(y: &Apv) -> f64 {
    let n = y.len() as f64;
    let mean = y.positions().iter().sum::<f64>() / n;
    y.positions().iter().map(|v| (v - mean).powi(2)).sum()
}

fn check_dims(x: &Apv, w: &BeamVector) -> Result<()> {
    if x.len() != w.len() {
        return Err(Error::InvalidInput(format!(
            "{} transmit antennas but beam vector of length {}",
            x.len(),
            w.len()
        )));
    }
    Ok(())
}

fn crb_scale(params: &SystemParams) -> f64 {
    params.noise_radar / (2.0 * params.reflect.norm_sqr() * params.frame_len as f64)
}

/// The four trace terms `tr(AᴴA R)`, `tr(ȦᴴA R)`, `tr(ȦᴴȦ R)` evaluated in
/// closed form from `s = aᴴw` and `t = ȧᴴw`.
#[derive(Debug, Clone, Copy)]
pub struct Traces {
    pub t_aa: f64,
    pub t_da: Complex64,
    pub t_dd: Complex64,
}

pub fn traces(x: &Apv, y: &Apv, w: &BeamVector, angle: f64) -> Traces {
    let k = 2.0 * PI * angle.cos();
    let a = steering(x, angle);
    let s = inner(&a, w.weights());
    let t: Complex64 = a
        .iter()
        .zip(x.positions())
        .zip(w.weights())
        .map(|((ai, &xi), wi)| (Complex64::new(0.0, -k * xi) * ai).conj() * wi)
        .sum();
    let nr = y.len() as f64;
    let sy: f64 = y.positions().iter().sum();
    let syy: f64 = y.positions().iter().map(|v| v * v).sum();
    let s2 = s.norm_sqr();
    let j = Complex64::new(0.0, 1.0);
    let t_aa = nr * s2;
    let t_da = j * k * sy * s2 + nr * s * t.conj();
    let t_dd = k * k * s2 * syy + j * k * sy * (t * s.conj() - s * t.conj()) + nr * t.norm_sqr();
    Traces { t_aa, t_da, t_dd }
}

/// CRB from the Fisher information of the angle with the nuisance
/// reflection coefficient eliminated.
pub fn crb_general(x: &Apv, y: &Apv, w: &BeamVector, params: &SystemParams) -> Result<CrbValue> {
    check_dims(x, w)?;
    let tr = traces(x, y, w, params.target_angle);
    let det = tr.t_dd.re * tr.t_aa - tr.t_da.norm_sqr();
    if !(tr.t_aa > 0.0) || !(det > 1e-12 * tr.t_dd.re.abs() * tr.t_aa) {
        return Err(Error::DegenerateGeometry(format!(
            "Fisher determinant {det:.3e} below floor"
        )));
    }
    Ok(CrbValue::new(crb_scale(params) * tr.t_aa / det))
}

/// `σ_R² / (2|α|² L k² |aᴴw|² f(y))` with `k = 2π cos θ`.
pub fn crb_simplified(x: &Apv, y: &Apv, w: &BeamVector, params: &SystemParams) -> Result<CrbValue> {
    check_dims(x, w)?;
    let theta = params.target_angle;
    let k = 2.0 * PI * theta.cos();
    let a = steering(x, theta);
    let gain = inner(&a, w.weights()).norm_sqr();
    let f = spread(y);
    let syy: f64 = y.positions().iter().map(|v| v * v).sum();
    if !(gain > 1e-18 * x.len() as f64 * w.norm_sqr()) || gain == 0.0 {
        return Err(Error::DegenerateGeometry(
            "no power toward the target".into(),
        ));
    }
    if !(f > 1e-12 * syy) || f == 0.0 {
        return Err(Error::DegenerateGeometry(
            "receive array has zero spread".into(),
        ));
    }
    if !(k.abs() > 1e-12) {
        return Err(Error::DegenerateGeometry("target at endfire".into()));
    }
    Ok(CrbValue::new(crb_scale(params) / (k * k * gain * f)))
}

/// CRB of the matched beamformer `√P a/‖a‖`, the smallest value any
/// beamformer can reach for fixed positions.
pub fn crb_floor(x: &Apv, y: &Apv, params: &SystemParams) -> Result<CrbValue> {
    let theta = params.target_angle;
    let k = 2.0 * PI * theta.cos();
    let f = spread(y);
    let denom = k * k * params.power * x.len() as f64 * f;
    if !(denom > 0.0) {
        return Err(Error::DegenerateGeometry(
            "zero spread or endfire target".into(),
        ));
    }
    Ok(CrbValue::new(crb_scale(params) / denom))
}

/// `|a(φ)ᴴw|²` for every angle in `grid`.
pub fn beampattern(apv: &Apv, w: &BeamVector, grid: &[f64]) -> Vec<f64> {
    grid.iter()
        .map(|&phi| inner(&steering(apv, phi), w.weights()).norm_sqr())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{DMatrix, DVector};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
        (a - b).norm() < tol
    }

    fn params_with(theta: f64) -> SystemParams {
        SystemParams {
            target_angle: theta,
            ..SystemParams::default()
        }
    }

    fn random_apv(rng: &mut ChaCha8Rng, n: usize) -> Apv {
        let mut x = 0.0;
        let mut v = Vec::with_capacity(n);
        for _ in 0..n {
            v.push(x);
            x += 0.5 + rng.random::<f64>() * 1.5;
        }
        Apv::new(v).unwrap()
    }

    fn random_beam(rng: &mut ChaCha8Rng, n: usize) -> BeamVector {
        BeamVector::new(
            (0..n)
                .map(|_| c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
                .collect(),
        )
    }

    #[test]
    fn steering_examples() {
        let a = steering(&Apv::new(vec![0.0]).unwrap(), 0.7);
        assert!(close(a[0], c(1.0, 0.0), 1e-15));
        let x = Apv::new(vec![0.0, 0.5]).unwrap();
        let a = steering(&x, PI / 2.0);
        assert!(close(a[1], c(-1.0, 0.0), 1e-14));
        let a = steering(&x, 0.0);
        assert!(close(a[1], c(1.0, 0.0), 1e-15));
    }

    #[test]
    fn field_response_two_paths() {
        let x = Apv::new(vec![0.0, 0.5]).unwrap();
        let paths = ChannelPaths::new(vec![c(1.0, 0.0), c(1.0, 0.0)], vec![0.0, PI / 2.0]).unwrap();
        let g = field_response(&x, &paths);
        assert!(close(g[0][1], c(1.0, 0.0), 1e-14));
        assert!(close(g[1][1], c(-1.0, 0.0), 1e-14));
    }

    #[test]
    fn single_unit_path_channel_is_steering() {
        let x = Apv::new(vec![0.0, 0.7, 1.9]).unwrap();
        let h = channel(&x, &ChannelPaths::los(0.4));
        let a = steering(&x, 0.4);
        // hᴴ = σᴴ g, so h is the conjugate of the field response row.
        for (hk, ak) in h.iter().zip(&a) {
            assert!(close(*hk, ak.conj(), 1e-14));
        }
    }

    #[test]
    fn zero_gains_give_zero_channel() {
        let x = Apv::new(vec![0.0, 0.7]).unwrap();
        let paths = ChannelPaths::new(vec![c(0.0, 0.0); 3], vec![0.1, 0.2, 0.3]).unwrap();
        assert!(channel(&x, &paths).iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn channel_matches_row_combination() {
        // hᴴ = σᴴ G evaluated as an explicit vector-matrix product.
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = random_apv(&mut rng, 5);
        let gains: Vec<_> = (0..4).map(|_| c(rng.random(), rng.random())).collect();
        let aods: Vec<_> = (0..4).map(|_| rng.random::<f64>() * 3.0 - 1.5).collect();
        let paths = ChannelPaths::new(gains.clone(), aods).unwrap();
        let g = field_response(&x, &paths);
        let h = channel(&x, &paths);
        for k in 0..5 {
            let hk_conj: Complex64 = (0..4).map(|p| gains[p].conj() * g[p][k]).sum();
            assert!(close(h[k].conj(), hk_conj, 1e-12));
        }
        // ‖h‖² as a term-by-term sum of |Σ_p σ_p* e^{-j2π sinθ_p x_k}|².
        let direct: f64 = (0..5)
            .map(|k| {
                let s: Complex64 = (0..4)
                    .map(|p| {
                        gains[p].conj()
                            * Complex64::from_polar(
                                1.0,
                                -2.0 * PI * paths.aods()[p].sin() * x.positions()[k],
                            )
                    })
                    .sum();
                s.norm_sqr()
            })
            .sum();
        assert!((norm_sqr(&h) - direct).abs() < 1e-12 * direct);
    }

    #[test]
    fn user_snr_examples() {
        let h = vec![c(1.0, 0.0), c(0.0, 0.0)];
        let w = BeamVector::new(vec![c(1.0, 0.0), c(0.0, 0.0)]);
        assert!((user_snr(&h, &w, 1.0) - 1.0).abs() < 1e-15);
        let w_perp = BeamVector::new(vec![c(0.0, 0.0), c(1.0, 0.0)]);
        assert_eq!(user_snr(&h, &w_perp, 1.0), 0.0);
        let w3 = BeamVector::new(vec![c(3.0, 0.0), c(0.0, 0.0)]);
        assert!((user_snr(&h, &w3, 1.0) - 9.0).abs() < 1e-12);
    }

    #[test]
    fn crb_single_rx_antenna_is_degenerate() {
        let x = Apv::new(vec![0.0, 0.5]).unwrap();
        let y = Apv::new(vec![0.0]).unwrap();
        let w = BeamVector::new(vec![c(1.0, 0.0); 2]);
        let p = params_with(0.3);
        assert!(matches!(
            crb_general(&x, &y, &w, &p),
            Err(Error::DegenerateGeometry(_))
        ));
        assert!(matches!(
            crb_simplified(&x, &y, &w, &p),
            Err(Error::DegenerateGeometry(_))
        ));
    }

    #[test]
    fn crb_beam_orthogonal_to_target_is_degenerate() {
        // θ = π/6: a = [1, e^{-jπ/2}]; w ⟂ a.
        let x = Apv::new(vec![0.0, 0.5]).unwrap();
        let y = Apv::new(vec![0.0, 0.5, 1.0]).unwrap();
        let a = steering(&x, PI / 6.0);
        let w = BeamVector::new([a[1], -a[0]].iter().map(|z| z.conj()).collect());
        assert!(inner(&a, w.weights()).norm() < 1e-15);
        let p = params_with(PI / 6.0);
        assert!(crb_general(&x, &y, &w, &p).is_err());
        assert!(crb_simplified(&x, &y, &w, &p).is_err());
    }

    #[test]
    fn matched_beam_reaches_floor() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let x = random_apv(&mut rng, 4);
        let y = random_apv(&mut rng, 6);
        let p = params_with(0.2);
        let a = steering(&x, 0.2);
        let scale = (p.power / norm_sqr(&a)).sqrt();
        let w = BeamVector::new(a.iter().map(|z| z * scale).collect());
        let crb = crb_simplified(&x, &y, &w, &p).unwrap();
        let floor = crb_floor(&x, &y, &p).unwrap();
        assert!((crb.crb - floor.crb).abs() < 1e-12 * floor.crb);
        // Closed form of the floor written out directly.
        let k = 2.0 * PI * 0.2f64.cos();
        let expect =
            p.noise_radar / (2.0 * p.frame_len as f64 * k * k * p.power * 4.0 * spread(&y));
        assert!((floor.crb - expect).abs() < 1e-12 * expect);
    }

    #[test]
    fn doubling_rx_aperture_quarters_crb() {
        let x = Apv::new(vec![0.0, 0.5]).unwrap();
        let y = Apv::new(vec![0.0, 0.5, 1.5, 2.0]).unwrap();
        let y2 = Apv::new(y.positions().iter().map(|v| 2.0 * v).collect()).unwrap();
        let w = BeamVector::new(vec![c(1.0, 0.0), c(0.5, 0.2)]);
        let p = params_with(0.1);
        let c1 = crb_simplified(&x, &y, &w, &p).unwrap().crb;
        let c2 = crb_simplified(&x, &y2, &w, &p).unwrap().crb;
        assert!((c1 / c2 - 4.0).abs() < 1e-12);
    }

    /// Traces computed with explicit A = b aᴴ, Ȧ and R = wwᴴ.
    pub(crate) fn explicit_traces(x: &Apv, y: &Apv, w: &BeamVector, theta: f64) -> Traces {
        let k = 2.0 * PI * theta.cos();
        let a = DVector::from_vec(steering(x, theta));
        let b = DVector::from_vec(steering(y, theta));
        let ad = DVector::from_iterator(
            x.len(),
            x.positions()
                .iter()
                .zip(a.iter())
                .map(|(xi, ai)| c(0.0, -k * xi) * ai),
        );
        let bd = DVector::from_iterator(
            y.len(),
            y.positions()
                .iter()
                .zip(b.iter())
                .map(|(yi, bi)| c(0.0, -k * yi) * bi),
        );
        let wv = DVector::from_vec(w.weights().to_vec());
        let r: DMatrix<Complex64> = &wv * wv.adjoint();
        let am: DMatrix<Complex64> = &b * a.adjoint();
        let adm: DMatrix<Complex64> = &bd * a.adjoint() + &b * ad.adjoint();
        let t_aa = (am.adjoint() * &am * &r).trace();
        let t_da = (adm.adjoint() * &am * &r).trace();
        let t_dd = (adm.adjoint() * &adm * &r).trace();
        Traces {
            t_aa: t_aa.re,
            t_da,
            t_dd,
        }
    }

    #[test]
    fn trace_identities_match_explicit_matrices() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..50 {
            let nt = rng.random_range(1..=6);
            let nr = rng.random_range(2..=8);
            let x = random_apv(&mut rng, nt);
            let y = random_apv(&mut rng, nr);
            let w = random_beam(&mut rng, nt);
            let theta = rng.random::<f64>() * 2.8 - 1.4;
            let fast = traces(&x, &y, &w, theta);
            let slow = explicit_traces(&x, &y, &w, theta);
            assert!((fast.t_aa - slow.t_aa).abs() <= 1e-10 * slow.t_aa.abs());
            assert!((fast.t_da - slow.t_da).norm() <= 1e-10 * slow.t_da.norm().max(1.0));
            assert!((fast.t_dd - slow.t_dd).norm() <= 1e-10 * slow.t_dd.norm());
        }
    }

    #[test]
    fn beampattern_examples() {
        let x = Apv::new(vec![0.0, 0.5]).unwrap();
        let s = 1.0 / 2f64.sqrt();
        let w = BeamVector::new(vec![c(s, 0.0), c(s, 0.0)]);
        let bp = beampattern(&x, &w, &[PI / 2.0, 0.0]);
        // Direct phasor sum: |1·s + e^{jπ}·s|² = 0.
        let direct = (c(s, 0.0) + Complex64::from_polar(1.0, PI) * s).norm_sqr();
        assert!((bp[0] - direct).abs() < 1e-15);
        assert!(bp[0] < 1e-15);
        assert!((bp[1] - 2.0).abs() < 1e-12);

        let zero = BeamVector::new(vec![c(0.0, 0.0); 2]);
        assert!(beampattern(&x, &zero, &[0.0, 0.3])
            .iter()
            .all(|&v| v == 0.0));
    }

    #[test]
    fn matched_beam_peaks_at_target() {
        let x = Apv::new(vec![0.0, 0.6, 1.3, 2.5]).unwrap();
        let theta = 0.3;
        let a = steering(&x, theta);
        let pw = 10.0;
        let scale = (pw / norm_sqr(&a)).sqrt();
        let w = BeamVector::new(a.iter().map(|z| z * scale).collect());
        let grid: Vec<f64> = (0..=400).map(|i| -1.5 + 3.0 * i as f64 / 400.0).collect();
        let bp = beampattern(&x, &w, &grid);
        let peak = beampattern(&x, &w, &[theta])[0];
        assert!((peak - 4.0 * pw).abs() < 1e-10);
        assert!(bp.iter().all(|&v| v <= peak + 1e-9));
    }

    proptest! {
        #[test]
        fn steering_unit_modulus(pos in proptest::collection::vec(0.5f64..3.0, 1..10), ang in -1.55f64..1.55) {
            let mut acc = 0.0;
            let v: Vec<f64> = pos.iter().map(|g| { acc += g; acc }).collect();
            let a = steering(&Apv::new(v).unwrap(), ang);
            for z in a {
                prop_assert!((z.norm() - 1.0).abs() < 1e-14);
            }
        }

        #[test]
        fn general_equals_simplified(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let nt = rng.random_range(1..=6);
            let nr = rng.random_range(2..=8);
            let x = random_apv(&mut rng, nt);
            let y = random_apv(&mut rng, nr);
            let w = random_beam(&mut rng, nt);
            let p = params_with(rng.random::<f64>() * 2.8 - 1.4);
            let g = crb_general(&x, &y, &w, &p);
            let s = crb_simplified(&x, &y, &w, &p);
            if let (Ok(g), Ok(s)) = (g, s) {
                prop_assert!((g.crb - s.crb).abs() <= 1e-10 * s.crb);
            }
        }

        #[test]
        fn crb_decreases_with_target_gain(seed in any::<u64>(), scale in 1.01f64..5.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let x = random_apv(&mut rng, 3);
            let y = random_apv(&mut rng, 5);
            let w = random_beam(&mut rng, 3);
            let w2 = BeamVector::new(w.weights().iter().map(|z| z * scale).collect());
            let p = params_with(0.4);
            if let (Ok(a), Ok(b)) = (crb_simplified(&x, &y, &w, &p), crb_simplified(&x, &y, &w2, &p)) {
                prop_assert!(b.crb < a.crb);
                prop_assert!(a.crb > 0.0);
            }
        }
    }
}
