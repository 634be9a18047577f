//! Receive-array placement: spread metric, closed-form optimum and the gain
//! it buys over uniform arrays.

use crate::error::{Error, Result};
use crate::types::{Apv, SystemParams, FEAS_TOL};

pub use crate::signal::spread as spread_metric;

/// Which block receives the middle antenna when `N_r` is odd.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TieChoice {
    #[default]
    Left,
    Right,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RxSolution {
    pub apv: Apv,
    pub spread: f64,
    pub tie_choice: TieChoice,
}

/// Two tightly packed blocks pushed to both ends of the aperture.
pub fn optimal_rx_positions(params: &SystemParams, tie: TieChoice) -> Result<RxSolution> {
    let n = params.n_rx;
    let d = params.d_min;
    let aperture = params.aperture_rx;
    if n < 2 {
        return Err(Error::InvalidGeometry(
            "need at least two receive antennas".into(),
        ));
    }
    if !(d > 0.0) {
        return Err(Error::InvalidGeometry("d_min must be positive".into()));
    }
    if aperture < (n - 1) as f64 * d - FEAS_TOL {
        return Err(Error::InvalidGeometry(format!(
            "D_y = {aperture} < (N_r-1) d = {}",
            (n - 1) as f64 * d
        )));
    }
    let half = n / 2;
    let mut y = Vec::with_capacity(n);
    let left = if n % 2 == 1 && tie == TieChoice::Left {
        half + 1
    } else {
        half
    };
    for i in 0..left {
        y.push(i as f64 * d);
    }
    let right = n - left;
    for j in (0..right).rev() {
        y.push(aperture - j as f64 * d);
    }
    // With D_y = (N_r-1)d the blocks touch; clean up the tiny overlap from
    // rounding so the APV stays strictly increasing.
    for i in 1..n {
        if y[i] <= y[i - 1] {
            y[i] = y[i - 1] + d;
        }
    }
    let apv = Apv::new(y)?;
    Ok(RxSolution {
        spread: spread_metric(&apv),
        apv,
        tie_choice: tie,
    })
}

/// Uniform array with spacing `d` starting at 0.
pub fn ulah_positions(n: usize, d: f64) -> Result<Apv> {
    if n == 0 {
        return Err(Error::InvalidGeometry("empty array".into()));
    }
    Apv::new((0..n).map(|i| i as f64 * d).collect())
}

/// Uniform array spanning `[0, aperture]`.
pub fn ulaf_positions(n: usize, aperture: f64) -> Result<Apv> {
    if n == 0 {
        return Err(Error::InvalidGeometry("empty array".into()));
    }
    if n == 1 {
        return Apv::new(vec![0.0]);
    }
    let step = aperture / (n - 1) as f64;
    Apv::new((0..n).map(|i| i as f64 * step).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct GainRatio {
    /// `f(y_opt)/f(y_ULAF)` from the closed form; `None` for odd `N_r`.
    pub closed_form: Option<f64>,
    /// Same ratio from direct spread evaluations.
    pub direct: f64,
    /// `f(y_ULAF)/f(y_ULAH) = D²/((N_r−1)²d²)`.
    pub ulaf_over_ulah: f64,
    /// Upper bound `3(N_r−1)/(N_r+1)` on the ratio.
    pub bound: f64,
}

impl GainRatio {
    pub fn direct_db(&self) -> f64 {
        10.0 * self.direct.log10()
    }
}

/// Closed-form ratio for even `N_r`, with `q = (N_r−1)d/D_y`:
/// `(N−2)/(N+1)·q(q−3) + 3(N−1)/(N+1)`.
pub fn closed_form_ratio(n: usize, d: f64, aperture: f64) -> Result<f64> {
    if n % 2 == 1 {
        return Err(Error::OddNrUnsupported(n));
    }
    let nf = n as f64;
    let q = (nf - 1.0) * d / aperture;
    Ok((nf - 2.0) / (nf + 1.0) * q * (q - 3.0) + 3.0 * (nf - 1.0) / (nf + 1.0))
}

pub fn crb_gain_ratio(params: &SystemParams) -> Result<GainRatio> {
    let n = params.n_rx;
    let opt = optimal_rx_positions(params, TieChoice::Left)?;
    let ulaf = ulaf_positions(n, params.aperture_rx)?;
    let direct = opt.spread / spread_metric(&ulaf);
    let nf = n as f64;
    let closed_form = match closed_form_ratio(n, params.d_min, params.aperture_rx) {
        Ok(r) => Some(r),
        Err(Error::OddNrUnsupported(_)) => None,
        Err(e) => return Err(e),
    };
    Ok(GainRatio {
        closed_form,
        direct,
        ulaf_over_ulah: (params.aperture_rx / ((nf - 1.0) * params.d_min)).powi(2),
        bound: 3.0 * (nf - 1.0) / (nf + 1.0),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rx(n: usize, d: f64, aperture: f64) -> SystemParams {
        SystemParams {
            n_rx: n,
            d_min: d,
            aperture_rx: aperture,
            ..SystemParams::default()
        }
    }

    fn apv(v: &[f64]) -> Apv {
        Apv::new(v.to_vec()).unwrap()
    }

    #[test]
    fn spread_examples() {
        assert!((spread_metric(&apv(&[0.0, 3.0])) - 4.5).abs() < 1e-14);
        // 0 + 0.25 + 2.25 + 4 − 16/4 = 2.5
        assert!((spread_metric(&apv(&[0.0, 0.5, 1.5, 2.0])) - 2.5).abs() < 1e-14);
    }

    #[test]
    fn even_layout() {
        let s = optimal_rx_positions(&rx(4, 0.5, 2.0), TieChoice::Left).unwrap();
        assert_eq!(s.apv.positions(), &[0.0, 0.5, 1.5, 2.0]);
        let s = optimal_rx_positions(&rx(2, 0.5, 3.7), TieChoice::Left).unwrap();
        assert_eq!(s.apv.positions(), &[0.0, 3.7]);
    }

    #[test]
    fn odd_layout_and_tie() {
        let l = optimal_rx_positions(&rx(5, 0.5, 3.0), TieChoice::Left).unwrap();
        assert_eq!(l.apv.positions(), &[0.0, 0.5, 1.0, 2.5, 3.0]);
        let r = optimal_rx_positions(&rx(5, 0.5, 3.0), TieChoice::Right).unwrap();
        assert_eq!(r.apv.positions(), &[0.0, 0.5, 2.0, 2.5, 3.0]);
        assert!((l.spread - r.spread).abs() < 1e-12);
    }

    #[test]
    fn rejects_small_aperture() {
        assert!(matches!(
            optimal_rx_positions(&rx(5, 0.5, 1.5), TieChoice::Left),
            Err(Error::InvalidGeometry(_))
        ));
    }

    #[test]
    fn minimal_aperture_collapses_to_ula() {
        let s = optimal_rx_positions(&rx(6, 0.5, 2.5), TieChoice::Left).unwrap();
        let u = ulah_positions(6, 0.5).unwrap();
        for (a, b) in s.apv.positions().iter().zip(u.positions()) {
            assert!((a - b).abs() < 1e-12);
        }
        let g = crb_gain_ratio(&rx(6, 0.5, 2.5)).unwrap();
        assert!((g.direct - 1.0).abs() < 1e-12);
        assert!((g.closed_form.unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn gain_ratio_example() {
        let g = crb_gain_ratio(&rx(4, 0.5, 2.0)).unwrap();
        // f(opt) = 2.5, f(ULAF on [0,2]) = 20/9.
        assert!((g.direct - 2.5 / (20.0 / 9.0)).abs() < 1e-12);
        assert!((g.closed_form.unwrap() - 1.125).abs() < 1e-12);
        assert!(g.direct < g.bound && g.bound < 3.0);
        assert!((g.ulaf_over_ulah - (2.0f64 / 1.5).powi(2)).abs() < 1e-12);
    }

    #[test]
    fn odd_closed_form_unsupported() {
        let g = crb_gain_ratio(&rx(5, 0.5, 3.0)).unwrap();
        assert!(g.closed_form.is_none());
        assert!(matches!(
            closed_form_ratio(5, 0.5, 3.0),
            Err(Error::OddNrUnsupported(5))
        ));
    }

    #[test]
    fn uniform_baselines() {
        assert_eq!(
            ulah_positions(3, 0.5).unwrap().positions(),
            &[0.0, 0.5, 1.0]
        );
        assert_eq!(
            ulaf_positions(3, 2.0).unwrap().positions(),
            &[0.0, 1.0, 2.0]
        );
        assert_eq!(
            ulaf_positions(4, 1.5).unwrap().positions(),
            ulah_positions(4, 0.5).unwrap().positions()
        );
    }

    fn gaps_to_apv(gaps: &[f64]) -> Apv {
        let mut acc = 0.0;
        let mut v = vec![0.0];
        for g in gaps {
            acc += g;
            v.push(acc);
        }
        Apv::new(v).unwrap()
    }

    proptest! {
        #[test]
        fn shift_invariance(gaps in proptest::collection::vec(0.1f64..2.0, 1..9), shift in -50.0f64..50.0) {
            let y = gaps_to_apv(&gaps);
            let ys = Apv::new(y.positions().iter().map(|v| v + shift).collect()).unwrap();
            prop_assert!((spread_metric(&y) - spread_metric(&ys)).abs() < 1e-12 * spread_metric(&y).max(1.0) * 10.0);
        }

        #[test]
        fn reflection_symmetry(gaps in proptest::collection::vec(0.1f64..2.0, 1..9)) {
            let y = gaps_to_apv(&gaps);
            let d = y.span();
            let r = Apv::new(y.positions().iter().rev().map(|v| d - v).collect()).unwrap();
            prop_assert!((spread_metric(&y) - spread_metric(&r)).abs() < 1e-12 * spread_metric(&y).max(1.0));
        }

        #[test]
        fn layout_structure(n in 2usize..12, d in 0.3f64..1.0, extra in 0.0f64..5.0, right in any::<bool>()) {
            let aperture = (n - 1) as f64 * d + extra;
            let tie = if right { TieChoice::Right } else { TieChoice::Left };
            let s = optimal_rx_positions(&rx(n, d, aperture), tie).unwrap();
            let y = s.apv.positions();
            let h = n / 2;
            for i in 0..h.saturating_sub(1) {
                prop_assert!((y[i + 1] - y[i] - d).abs() < 1e-9);
                prop_assert!((y[n - 1 - i] - y[n - 2 - i] - d).abs() < 1e-9);
            }
            prop_assert!((s.apv.span() - aperture).abs() < 1e-9);
            prop_assert!(s.apv.is_feasible(d, aperture, 1e-9));
        }

        #[test]
        fn interior_perturbation_never_beats_optimum(n in 3usize..8, seed in any::<u64>()) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let d = 0.5;
            let aperture = (n - 1) as f64 * d + 2.0;
            let opt = optimal_rx_positions(&rx(n, d, aperture), TieChoice::Left).unwrap();
            // Random feasible layout: slack split randomly over the gaps.
            let mut w: Vec<f64> = (0..n - 1).map(|_| rng.random::<f64>()).collect();
            let tot: f64 = w.iter().sum::<f64>() + rng.random::<f64>();
            for v in w.iter_mut() { *v = d + 2.0 * *v / tot; }
            let y = gaps_to_apv(&w);
            prop_assert!(spread_metric(&y) <= opt.spread + 1e-12);
        }

        #[test]
        fn closed_form_below_bound(half in 2usize..7, d in 0.2f64..1.0, extra in 0.0f64..20.0) {
            let n = 2 * half;
            let aperture = (n - 1) as f64 * d + extra;
            let g = crb_gain_ratio(&rx(n, d, aperture)).unwrap();
            let cf = g.closed_form.unwrap();
            prop_assert!((cf - g.direct).abs() < 1e-10 * g.direct);
            prop_assert!(cf < g.bound);
        }
    }
}
