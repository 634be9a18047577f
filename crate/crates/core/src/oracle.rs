//! Brute-force references used to certify the solvers on small instances.
//!
//! Nothing here shares numerical kernels with the solvers beyond the plain
//! objective evaluators.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::types::{Apv, SystemParams};

/// Regular grid over the feasible positions, anchored at `x_1 = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub step: f64,
    /// Optional extra per-coordinate box `[lo, hi]`; empty means none.
    pub bounds: Vec<(f64, f64)>,
    pub max_points: u128,
}

impl GridSpec {
    pub fn new(step: f64) -> Self {
        GridSpec {
            step,
            bounds: vec![],
            max_points: 50_000_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridResult {
    pub apv: Apv,
    pub value: f64,
    pub points: u128,
}

/// Candidate values of one coordinate: grid multiples of `step`, plus the
/// exact aperture end for the last antenna.
fn candidates(lo: f64, hi: f64, step: f64, last: bool, aperture: f64) -> Vec<f64> {
    let mut v = Vec::new();
    let eps = 1e-9 * step;
    let mut k = ((lo - eps) / step).ceil() as i64;
    loop {
        let x = k as f64 * step;
        if x > hi + eps {
            break;
        }
        v.push(x.max(lo).min(hi));
        k += 1;
    }
    if last && (v.last().is_none_or(|&x| aperture - x > eps)) && aperture >= lo {
        v.push(aperture);
    }
    v
}

struct Scan<'a> {
    n: usize,
    d: f64,
    aperture: f64,
    grid: &'a GridSpec,
}

impl Scan<'_> {
    fn range(&self, i: usize, prev: f64) -> (f64, f64) {
        let mut lo = prev + self.d;
        let mut hi = self.aperture - (self.n - 1 - i) as f64 * self.d;
        if let Some(&(a, b)) = self.grid.bounds.get(i) {
            lo = lo.max(a);
            hi = hi.min(b);
        }
        (lo, hi)
    }

    fn count(&self, i: usize, prev: f64) -> u128 {
        if i == self.n {
            return 1;
        }
        let (lo, hi) = self.range(i, prev);
        if lo > hi + 1e-12 {
            return 0;
        }
        // Counts depend only on the previous coordinate, so the recursion is
        // short for small N; cap early to keep the estimate itself cheap.
        let mut total: u128 = 0;
        for x in candidates(lo, hi, self.grid.step, i == self.n - 1, self.aperture) {
            total += self.count(i + 1, x);
            if total > self.grid.max_points {
                return total;
            }
        }
        total
    }

    fn best<F: Fn(&[f64]) -> f64>(&self, x: &mut Vec<f64>, f: &F, best: &mut (f64, Vec<f64>)) {
        let i = x.len();
        if i == self.n {
            let v = f(x);
            if v > best.0 {
                *best = (v, x.clone());
            }
            return;
        }
        let (lo, hi) = self.range(i, x[i - 1]);
        if lo > hi + 1e-12 {
            return;
        }
        for c in candidates(lo, hi, self.grid.step, i == self.n - 1, self.aperture) {
            x.push(c);
            self.best(x, f, best);
            x.pop();
        }
    }
}

/// Exhaustive maximization of `f` over grid layouts with gaps ≥ d and span ≤ D.
pub fn grid_search<F>(n: usize, d: f64, aperture: f64, grid: &GridSpec, f: F) -> Result<GridResult>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    if !(grid.step > 0.0) {
        return Err(Error::InvalidInput("grid step must be positive".into()));
    }
    if n == 0 || aperture < (n - 1) as f64 * d - 1e-12 {
        return Err(Error::InvalidGeometry("no feasible layout".into()));
    }
    if n == 1 {
        let x = vec![0.0];
        let v = f(&x);
        return Ok(GridResult {
            apv: Apv::new(x)?,
            value: v,
            points: 1,
        });
    }
    let scan = Scan {
        n,
        d,
        aperture,
        grid,
    };
    let points = scan.count(1, 0.0);
    if points > grid.max_points {
        return Err(Error::GridTooLarge {
            estimated: points,
            cap: grid.max_points,
        });
    }
    let (lo, hi) = scan.range(1, 0.0);
    let firsts = candidates(lo, hi, grid.step, n == 2, aperture);
    let partial: Vec<(f64, Vec<f64>)> = firsts
        .par_iter()
        .map(|&x2| {
            let mut best = (f64::NEG_INFINITY, vec![]);
            let mut x = vec![0.0, x2];
            scan.best(&mut x, &f, &mut best);
            best
        })
        .collect();
    // Deterministic reduction in grid order.
    let mut best = (f64::NEG_INFINITY, vec![]);
    for p in partial {
        if p.0 > best.0 {
            best = p;
        }
    }
    if best.1.is_empty() {
        return Err(Error::InvalidGeometry(
            "grid contains no feasible layout".into(),
        ));
    }
    Ok(GridResult {
        apv: Apv::new(best.1)?,
        value: best.0,
        points,
    })
}

/// Grid maximization of the receive spread.
pub fn grid_search_rx(params: &SystemParams, grid: &GridSpec) -> Result<GridResult> {
    grid_search(params.n_rx, params.d_min, params.aperture_rx, grid, |y| {
        let n = y.len() as f64;
        let mean = y.iter().sum::<f64>() / n;
        y.iter().map(|v| (v - mean).powi(2)).sum()
    })
}

/// Grid maximization of the line-of-sight gain `g`.
pub fn grid_search_tx_los(
    params: &SystemParams,
    theta_t: f64,
    theta: f64,
    grid: &GridSpec,
) -> Result<GridResult> {
    let s = theta_t.sin() + theta.sin();
    let k = 2.0 * std::f64::consts::PI * s;
    grid_search(params.n_tx, params.d_min, params.aperture_tx, grid, |x| {
        let (re, im) = x.iter().fold((0.0, 0.0), |(re, im), &xi| {
            (re + (k * xi).cos(), im - (k * xi).sin())
        });
        (re * re + im * im).sqrt()
    })
}

/// Central differences `(f(x + h e_i) − f(x − h e_i)) / 2h`.
pub fn fd_gradient<F: Fn(&[f64]) -> f64>(f: F, x: &[f64], h: f64) -> Vec<f64> {
    let mut xp = x.to_vec();
    (0..x.len())
        .map(|i| {
            xp[i] = x[i] + h;
            let fp = f(&xp);
            xp[i] = x[i] - h;
            let fm = f(&xp);
            xp[i] = x[i];
            (fp - fm) / (2.0 * h)
        })
        .collect()
}

/// Largest sampled gradient norm of `f` over random feasible layouts.
pub fn estimate_lipschitz<F: Fn(&[f64]) -> f64>(
    f: F,
    n: usize,
    d: f64,
    aperture: f64,
    samples: usize,
    seed: u64,
) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let slack = aperture - (n.saturating_sub(1)) as f64 * d;
    let mut lip: f64 = 0.0;
    for _ in 0..samples {
        let mut w: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        let tot: f64 = w.iter().sum();
        w.iter_mut().for_each(|v| *v *= slack / tot);
        let mut x = vec![0.0];
        for wi in w.iter().take(n.saturating_sub(1)) {
            let last = *x.last().unwrap();
            x.push(last + d + wi);
        }
        let g = fd_gradient(&f, &x, 1e-6);
        lip = lip.max(g.iter().map(|v| v * v).sum::<f64>().sqrt());
    }
    lip
}

/// Slack for comparing a continuous optimum with a grid optimum.
pub fn grid_slack(lipschitz: f64, step: f64, n: usize) -> f64 {
    lipschitz * step * (n as f64).sqrt()
}

fn chain_residual(x: &[f64], d: f64, aperture: f64) -> Vec<f64> {
    let n = x.len();
    let mut r: Vec<f64> = (0..n - 1).map(|i| x[i] - x[i + 1] + d).collect();
    r.push(x[n - 1] - x[0] - aperture);
    r
}

/// Reference maximizer of `−(δ/2)xᵀx + bᵀx` subject to `x_{i+1} − x_i ≥ d`
/// and `x_N − x_1 ≤ D`, by accelerated projected gradient on the dual.
///
/// Returns once the KKT residual (constraint violation plus complementarity)
/// falls below `tol`.
pub fn qp_reference(
    delta: f64,
    linear: &[f64],
    d: f64,
    aperture: f64,
    tol: f64,
) -> Result<Vec<f64>> {
    let n = linear.len();
    if !(delta > 0.0) {
        return Err(Error::InvalidInput("curvature must be positive".into()));
    }
    if n < 2 {
        return Ok(linear.iter().map(|b| b / delta).collect());
    }
    let v: Vec<f64> = linear.iter().map(|b| b / delta).collect();
    // x = v − Uᵀλ; gradient of the dual in λ is Ux − l.
    let primal = |lam: &[f64]| {
        let mut x = v.clone();
        for i in 0..n - 1 {
            x[i] -= lam[i];
            x[i + 1] += lam[i];
        }
        x[n - 1] -= lam[n - 1];
        x[0] += lam[n - 1];
        x
    };
    let step = 0.25;
    let mut lam = vec![0.0; n];
    let mut y = lam.clone();
    let mut t: f64 = 1.0;
    let max_iter = 2_000_000;
    for it in 0..max_iter {
        let x = primal(&y);
        let g = chain_residual(&x, d, aperture);
        let next: Vec<f64> = y
            .iter()
            .zip(&g)
            .map(|(yi, gi)| (yi + step * gi).max(0.0))
            .collect();
        let t_next = (1.0 + (1.0 + 4.0 * t * t).sqrt()) / 2.0;
        let mom = (t - 1.0) / t_next;
        y = next
            .iter()
            .zip(&lam)
            .map(|(a, b)| (a + mom * (a - b)).max(0.0))
            .collect();
        lam = next;
        t = t_next;
        if it % 50 == 0 {
            // Restart momentum when it stalls; keeps the method monotone in practice.
            let x = primal(&lam);
            let r = chain_residual(&x, d, aperture);
            let viol = r.iter().fold(0.0f64, |m, &ri| m.max(ri));
            let comp = lam
                .iter()
                .zip(&r)
                .fold(0.0f64, |m, (l, ri)| m.max((l * ri).abs()));
            if viol.max(comp) < tol {
                return Ok(x);
            }
            if it % 1000 == 0 {
                y = lam.clone();
                t = 1.0;
            }
        }
    }
    Err(Error::IterationCap(max_iter))
}
