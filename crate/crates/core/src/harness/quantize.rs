//! Snapping positions to a discrete grid.

use crate::error::{Error, Result};
use crate::types::Apv;

const SNAP_TOL: f64 = 1e-9;

/// Rounds every position to the nearest multiple of `step`, then repairs the
/// spacing constraints: gaps are pushed apart left to right, then the last
/// element is pulled in to fit the aperture and its neighbours follow right
/// to left.
pub fn quantize_apv(x: &Apv, step: f64, d_min: f64, aperture: f64) -> Result<Apv> {
    if !(step > 0.0) || !step.is_finite() {
        return Err(Error::InvalidInput(format!("quantization step {step}")));
    }
    // Work in integer grid units to avoid drift.
    let gap = (d_min / step - SNAP_TOL).ceil() as i64;
    let span = (aperture / step + SNAP_TOL).floor() as i64;
    let mut k: Vec<i64> = x
        .positions()
        .iter()
        .map(|v| (v / step).round() as i64)
        .collect();
    let n = k.len();
    for i in 1..n {
        if k[i] - k[i - 1] < gap {
            k[i] = k[i - 1] + gap;
        }
    }
    if n > 1 && k[n - 1] - k[0] > span {
        k[n - 1] = k[0] + span;
        for i in (1..n - 1).rev() {
            if k[i + 1] - k[i] < gap {
                k[i] = k[i + 1] - gap;
            }
        }
        if k[1] - k[0] < gap {
            return Err(Error::RepairFailed { step });
        }
    }
    Apv::new(k.iter().map(|&v| v as f64 * step).collect())
}
