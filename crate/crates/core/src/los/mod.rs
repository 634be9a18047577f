//! Transmit-array placement under a single line-of-sight path.
//!
//! With one path the design reduces to maximizing
//! `g(x) = |Σ_i exp(−j2π s x_i)|`, `s = sin θ_t + sin θ`, over positions with
//! gaps ≥ d and span ≤ D. Constraint rows are numbered 1..N: row i < N is the
//! gap between antennas i and i+1, row N is the aperture. Fixing a set of rows
//! to equality merges antennas into rigid blocks, and each block acts as one
//! phasor with coefficient `r_i`. The blocks can then be phase-aligned in
//! closed form whenever the aperture allows it.

mod search;

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::types::{Apv, SystemParams};

pub use search::{bt_bfs, bt_bfs_with, bt_dfs, solve_los, BfsOptions};

/// Magnitude below which a block coefficient has no usable phase.
pub const COEFF_FLOOR: f64 = 1e-12;
/// Distance to an integer below which the ceiling snaps to that integer.
pub const CEIL_TOL: f64 = 1e-10;

/// Set of constraint rows held with equality (1-based, strictly increasing).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ActiveSet {
    indices: Vec<usize>,
}

impl ActiveSet {
    pub fn new(mut indices: Vec<usize>, n_tx: usize) -> Result<Self> {
        indices.sort_unstable();
        indices.dedup();
        if indices.iter().any(|&i| i == 0 || i > n_tx) {
            return Err(Error::InvalidInput(format!(
                "active rows must lie in 1..={n_tx}"
            )));
        }
        if indices.len() >= n_tx && n_tx > 0 {
            return Err(Error::InvalidInput(
                "all rows active leaves no degrees of freedom".into(),
            ));
        }
        Ok(ActiveSet { indices })
    }

    pub fn empty() -> Self {
        ActiveSet { indices: vec![] }
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn size(&self) -> usize {
        self.indices.len()
    }

    pub fn contains(&self, row: usize) -> bool {
        self.indices.binary_search(&row).is_ok()
    }

    /// Aperture row active.
    pub fn is_case_two(&self, n_tx: usize) -> bool {
        self.indices.last() == Some(&n_tx)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LosCase {
    /// Aperture row inactive.
    One,
    /// Aperture row active; a d-spaced tail block is pinned to `x_1 + D`.
    Two,
}

/// Problem left after merging the active rows.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedProblem {
    /// Effective coefficient of each free block.
    pub r: Vec<Complex64>,
    /// Number of merged gaps inside each free block (block size − 1).
    pub n: Vec<usize>,
    /// 0-based index of the first antenna of each free block.
    pub starts: Vec<usize>,
    pub case: LosCase,
    /// For case two: last antenna (1-based) before the pinned tail.
    pub l_split: Option<usize>,
    /// Number of antennas in the pinned tail (0 in case one).
    pub tail_len: usize,
    /// `|sin θ_t + sin θ|`.
    pub slope: f64,
    pub n_tx: usize,
}

/// Per-solution record returned by the searches.
#[derive(Debug, Clone, PartialEq)]
pub struct LosSolution {
    pub apv: Apv,
    pub objective: f64,
    pub active_set: ActiveSet,
    pub d_min_used: f64,
    pub layer: usize,
    /// Active sets evaluated, including the unconstrained check.
    pub evaluated: usize,
    /// Active sets skipped because a block coefficient vanished.
    pub skipped_degenerate: Vec<ActiveSet>,
    /// Permutation seed for the depth-first search.
    pub seed: Option<u64>,
}

/// Signed phase slope `sin θ_t + sin θ`.
pub fn phase_slope(theta_t: f64, theta: f64) -> f64 {
    theta_t.sin() + theta.sin()
}

pub fn g_objective(x: &Apv, theta_t: f64, theta: f64) -> f64 {
    let s = phase_slope(theta_t, theta);
    x.positions()
        .iter()
        .map(|&xi| Complex64::from_polar(1.0, -2.0 * PI * s * xi))
        .sum::<Complex64>()
        .norm()
}

fn geometric(count: usize, kappa: f64, d: f64) -> Complex64 {
    (0..count)
        .map(|p| Complex64::from_polar(1.0, -kappa * p as f64 * d))
        .sum()
}

/// Maximal runs of antennas joined by active gap rows among antennas
/// `0..upto` (0-based, exclusive); returns (start, size).
fn blocks(active: &ActiveSet, upto: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut start = 0;
    for i in 0..upto {
        // Row i+1 joins antenna i and i+1.
        let joined = i + 1 < upto && active.contains(i + 1);
        if !joined {
            out.push((start, i + 1 - start));
            start = i + 1;
        }
    }
    out
}

pub fn reduce(
    active: &ActiveSet,
    params: &SystemParams,
    theta_t: f64,
    theta: f64,
) -> Result<ReducedProblem> {
    let n_tx = params.n_tx;
    let d = params.d_min;
    let slope = phase_slope(theta_t, theta).abs();
    if !(slope > 0.0) {
        return Err(Error::InvalidInput(
            "zero phase slope: every layout is optimal".into(),
        ));
    }
    let kappa = 2.0 * PI * slope;
    let (case, l_split, tail_len, head) = if active.is_case_two(n_tx) {
        let mut l = n_tx - 1;
        while l >= 1 && active.contains(l) {
            l -= 1;
        }
        (LosCase::Two, Some(l), n_tx - l, l)
    } else {
        (LosCase::One, None, 0, n_tx)
    };
    let bl = blocks(active, head);
    let mut r: Vec<Complex64> = bl.iter().map(|&(_, sz)| geometric(sz, kappa, d)).collect();
    if case == LosCase::Two {
        let aperture = params.aperture_tx;
        let tail: Complex64 = (0..tail_len)
            .map(|j| Complex64::from_polar(1.0, -kappa * (aperture - j as f64 * d)))
            .sum();
        r[0] += tail;
    }
    for (i, ri) in r.iter().enumerate() {
        if ri.norm() < COEFF_FLOOR {
            return Err(Error::DegenerateCoefficient {
                index: i + 1,
                magnitude: ri.norm(),
            });
        }
    }
    Ok(ReducedProblem {
        r,
        n: bl.iter().map(|&(_, sz)| sz - 1).collect(),
        starts: bl.iter().map(|&(st, _)| st).collect(),
        case,
        l_split,
        tail_len,
        slope,
        n_tx,
    })
}

fn phase_step(reduced: &ReducedProblem, i: usize) -> f64 {
    (reduced.r[i + 1].arg() - reduced.r[i].arg()) / (2.0 * PI)
}

/// Smallest integers that keep each aligned gap at least `(n_i + 1) d`.
pub fn min_k(reduced: &ReducedProblem, params: &SystemParams) -> Vec<i64> {
    let d = params.d_min;
    (0..reduced.r.len().saturating_sub(1))
        .map(|i| {
            let arg = reduced.slope * (reduced.n[i] + 1) as f64 * d - phase_step(reduced, i);
            let near = arg.round();
            if (arg - near).abs() < CEIL_TOL {
                near as i64
            } else {
                arg.ceil() as i64
            }
        })
        .collect()
}

fn aligned_gaps(reduced: &ReducedProblem, k: &[i64], d: f64) -> Vec<f64> {
    k.iter()
        .enumerate()
        .map(|(i, &ki)| {
            let gap = (ki as f64 + phase_step(reduced, i)) / reduced.slope;
            // Guard against the ceiling snap leaving a gap a hair short.
            gap.max((reduced.n[i] + 1) as f64 * d)
        })
        .collect()
}

/// Smallest aperture that admits the aligned layout.
pub fn d_min(reduced: &ReducedProblem, k: &[i64], params: &SystemParams) -> f64 {
    let d = params.d_min;
    let gaps: f64 = aligned_gaps(reduced, k, d).iter().sum();
    let last = *reduced.n.last().unwrap_or(&0) as f64 * d;
    gaps + last + reduced.tail_len as f64 * d
}

/// Start of each free block with the first at 0, all block phasors aligned.
pub fn aligned_positions(
    reduced: &ReducedProblem,
    k: &[i64],
    params: &SystemParams,
) -> Result<Vec<f64>> {
    let need = d_min(reduced, k, params);
    if need > params.aperture_tx + 1e-12 {
        return Err(Error::ApertureTooSmall {
            aperture: params.aperture_tx,
            required: need,
        });
    }
    let mut x = vec![0.0];
    for g in aligned_gaps(reduced, k, params.d_min) {
        let last = *x.last().unwrap();
        x.push(last + g);
    }
    Ok(x)
}

/// Re-inserts the merged antennas (and the pinned tail) around the block starts.
pub fn expand_positions(
    x_reduced: &[f64],
    reduced: &ReducedProblem,
    params: &SystemParams,
) -> Result<Apv> {
    let d = params.d_min;
    let mut x = Vec::with_capacity(reduced.n_tx);
    for (xi, &ni) in x_reduced.iter().zip(&reduced.n) {
        for p in 0..=ni {
            x.push(xi + p as f64 * d);
        }
    }
    if reduced.case == LosCase::Two {
        let x1 = x_reduced[0];
        for j in (0..reduced.tail_len).rev() {
            x.push(x1 + params.aperture_tx - j as f64 * d);
        }
    }
    Apv::new(x)
}

/// Sum of block magnitudes, the best value reachable for this active set.
pub fn aligned_value(reduced: &ReducedProblem) -> f64 {
    reduced.r.iter().map(|z| z.norm()).sum()
}

/// Unconstrained optimum: uniform spacing with every phasor aligned.
pub fn unconstrained(params: &SystemParams, theta_t: f64, theta: f64) -> Result<(Apv, f64)> {
    let reduced = reduce(&ActiveSet::empty(), params, theta_t, theta)?;
    let k = min_k(&reduced, params);
    let need = d_min(&reduced, &k, params);
    let x = expand_positions(&aligned_positions(&reduced, &k, params)?, &reduced, params)?;
    Ok((x, need))
}
