//! Breadth-first and depth-first traversal of the constraint boundaries.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{
    aligned_positions, aligned_value, d_min, expand_positions, g_objective, min_k, phase_slope,
    reduce, unconstrained, ActiveSet, LosSolution,
};
use crate::error::{Error, Result};
use crate::receive::ulah_positions;
use crate::types::SystemParams;

/// Phase slopes below this are treated as zero (every layout is optimal).
const SLOPE_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BfsOptions {
    /// Layers searched after the first layer that produced a feasible point.
    pub extra_layers: usize,
    /// Deepest layer to visit; `None` means `N_t − 1`.
    pub max_layer: Option<usize>,
}

impl Default for BfsOptions {
    fn default() -> Self {
        BfsOptions {
            extra_layers: 1,
            max_layer: None,
        }
    }
}

enum Outcome {
    Feasible(LosSolution),
    TooWide,
    Degenerate,
}

fn evaluate(
    active: &ActiveSet,
    params: &SystemParams,
    theta_t: f64,
    theta: f64,
) -> Result<Outcome> {
    let reduced = match reduce(active, params, theta_t, theta) {
        Ok(r) => r,
        Err(Error::DegenerateCoefficient { .. }) => return Ok(Outcome::Degenerate),
        Err(e) => return Err(e),
    };
    let k = min_k(&reduced, params);
    let need = d_min(&reduced, &k, params);
    if need > params.aperture_tx + 1e-12 {
        return Ok(Outcome::TooWide);
    }
    let xr = aligned_positions(&reduced, &k, params)?;
    let apv = expand_positions(&xr, &reduced, params)?;
    debug_assert!((g_objective(&apv, theta_t, theta) - aligned_value(&reduced)).abs() < 1e-6);
    Ok(Outcome::Feasible(LosSolution {
        objective: g_objective(&apv, theta_t, theta),
        apv,
        active_set: active.clone(),
        d_min_used: need,
        layer: active.size(),
        evaluated: 0,
        skipped_degenerate: vec![],
        seed: None,
    }))
}

/// Shared first step: zero slope, or an aperture wide enough for the
/// uniform aligned array.
fn shortcut(params: &SystemParams, theta_t: f64, theta: f64) -> Result<Option<LosSolution>> {
    params.validate_geometry()?;
    let n = params.n_tx;
    if phase_slope(theta_t, theta).abs() < SLOPE_FLOOR || n == 1 {
        let apv = ulah_positions(n, params.d_min)?;
        return Ok(Some(LosSolution {
            objective: g_objective(&apv, theta_t, theta),
            apv,
            active_set: ActiveSet::empty(),
            d_min_used: (n - 1) as f64 * params.d_min,
            layer: 0,
            evaluated: 1,
            skipped_degenerate: vec![],
            seed: None,
        }));
    }
    let reduced = reduce(&ActiveSet::empty(), params, theta_t, theta)?;
    let k = min_k(&reduced, params);
    let need = d_min(&reduced, &k, params);
    if need <= params.aperture_tx + 1e-12 {
        let (apv, _) = unconstrained(params, theta_t, theta)?;
        return Ok(Some(LosSolution {
            objective: g_objective(&apv, theta_t, theta),
            apv,
            active_set: ActiveSet::empty(),
            d_min_used: need,
            layer: 0,
            evaluated: 1,
            skipped_degenerate: vec![],
            seed: None,
        }));
    }
    Ok(None)
}

/// All `c`-subsets of `1..=n` in lexicographic order.
fn combinations(n: usize, c: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if c == 0 || c > n {
        return out;
    }
    let mut idx: Vec<usize> = (1..=c).collect();
    loop {
        out.push(idx.clone());
        let mut i = c;
        while i > 0 && idx[i - 1] == n - c + i {
            i -= 1;
        }
        if i == 0 {
            return out;
        }
        idx[i - 1] += 1;
        for j in i..c {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Global search over active sets layer by layer with the default options.
pub fn bt_bfs(params: &SystemParams, theta_t: f64, theta: f64) -> Result<LosSolution> {
    bt_bfs_with(params, theta_t, theta, BfsOptions::default())
}

pub fn bt_bfs_with(
    params: &SystemParams,
    theta_t: f64,
    theta: f64,
    opts: BfsOptions,
) -> Result<LosSolution> {
    if let Some(s) = shortcut(params, theta_t, theta)? {
        return Ok(s);
    }
    let n = params.n_tx;
    let last = opts.max_layer.unwrap_or(n - 1).min(n - 1);
    let mut best: Option<LosSolution> = None;
    let mut evaluated = 1;
    let mut skipped = Vec::new();
    let mut stop_after: Option<usize> = None;
    for c in 1..=last {
        let sets = combinations(n, c);
        let results: Vec<Result<(ActiveSet, Outcome)>> = sets
            .into_par_iter()
            .map(|idx| {
                let a = ActiveSet::new(idx, n)?;
                let o = evaluate(&a, params, theta_t, theta)?;
                Ok((a, o))
            })
            .collect();
        // Reduce in lexicographic order; only strict improvements replace.
        for r in results {
            let (a, o) = r?;
            evaluated += 1;
            match o {
                Outcome::Feasible(sol) => {
                    if best.as_ref().is_none_or(|b| sol.objective > b.objective) {
                        best = Some(sol);
                    }
                }
                Outcome::Degenerate => skipped.push(a),
                Outcome::TooWide => {}
            }
        }
        if stop_after.is_none() {
            if let Some(b) = &best {
                stop_after = Some(b.layer + opts.extra_layers);
            }
        }
        if stop_after.is_some_and(|s| c >= s) {
            break;
        }
    }
    match best {
        Some(mut b) => {
            b.evaluated = evaluated;
            b.skipped_degenerate = skipped;
            Ok(b)
        }
        None => Err(Error::NoFeasibleBoundary),
    }
}

/// Activates rows one at a time along a seeded random order and returns the
/// first boundary point that fits the aperture.
pub fn bt_dfs(params: &SystemParams, theta_t: f64, theta: f64, seed: u64) -> Result<LosSolution> {
    if let Some(mut s) = shortcut(params, theta_t, theta)? {
        s.seed = Some(seed);
        return Ok(s);
    }
    let n = params.n_tx;
    let mut order: Vec<usize> = (1..=n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut evaluated = 1;
    let mut skipped = Vec::new();
    for c in 1..n {
        let a = ActiveSet::new(order[..c].to_vec(), n)?;
        evaluated += 1;
        match evaluate(&a, params, theta_t, theta)? {
            Outcome::Feasible(mut sol) => {
                sol.evaluated = evaluated;
                sol.skipped_degenerate = skipped;
                sol.seed = Some(seed);
                return Ok(sol);
            }
            Outcome::Degenerate => skipped.push(a),
            Outcome::TooWide => {}
        }
    }
    Err(Error::NoFeasibleBoundary)
}

/// Breadth-first search with the uniform half-spacing array as fallback when
/// no boundary admits an aligned layout.
pub fn solve_los(params: &SystemParams, theta_t: f64, theta: f64) -> Result<LosSolution> {
    match bt_bfs(params, theta_t, theta) {
        Err(Error::NoFeasibleBoundary) => {
            let apv = ulah_positions(params.n_tx, params.d_min)?;
            Ok(LosSolution {
                objective: g_objective(&apv, theta_t, theta),
                apv,
                active_set: ActiveSet::empty(),
                d_min_used: (params.n_tx - 1) as f64 * params.d_min,
                layer: params.n_tx,
                evaluated: (1 << params.n_tx.min(62)) - 1,
                skipped_degenerate: vec![],
                seed: None,
            })
        }
        other => other,
    }
}
