//! Monte Carlo sweeps, beampatterns and CSV output.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use super::channel::{generate_channel, trial_rng};
use super::config::{linear_to_db, Movable, ScenarioConfig, Scheme, SweepAxis};
use super::quantize::quantize_apv;
use crate::beamforming::optimal_beamformer;
use crate::error::{Error, Result};
use crate::los::{bt_dfs, g_objective, solve_los};
use crate::nlos::{p2, random_feasible_apv, rgp, solve_transmit_nlos, NlosOptions, RgpOptions};
use crate::receive::{
    optimal_rx_positions, spread_metric, ulaf_positions, ulah_positions, TieChoice,
};
use crate::signal::{channel, crb_simplified, inner, steering};
use crate::types::{Apv, BeamVector, ChannelPaths, CrbValue, SystemParams};

/// Stream offset separating the random-start draws from the channel draws.
const INIT_STREAM: u64 = 1 << 32;

#[derive(Debug, Clone, PartialEq)]
pub struct SchemeOutcome {
    pub tx: Apv,
    pub rx: Apv,
    pub w: BeamVector,
    pub crb: CrbValue,
    pub achieved_snr: f64,
    /// Spread for receive placement, array gain `g` for the LoS searches,
    /// `p₂` for the gradient-projection schemes, `NaN` for baselines.
    pub objective: f64,
}

fn ula(scheme: Scheme, n: usize, d: f64, aperture: f64) -> Result<Apv> {
    if scheme == Scheme::Ulaf {
        ulaf_positions(n, aperture)
    } else {
        ulah_positions(n, d)
    }
}

fn snap(x: Apv, step: Option<f64>, d: f64, aperture: f64) -> Result<Apv> {
    match step {
        Some(s) => quantize_apv(&x, s, d, aperture),
        None => Ok(x),
    }
}

/// Places both arrays for `scheme`, forms the beamformer and evaluates the
/// CRB. `trial` keys the random start of [`Scheme::RandomInitRgp`] and the
/// DFS order.
pub fn evaluate_scheme(
    scheme: Scheme,
    cfg: &ScenarioConfig,
    params: &SystemParams,
    paths: &ChannelPaths,
    trial: u64,
) -> Result<SchemeOutcome> {
    let d = params.d_min;
    let q = cfg.quantize_step;
    let theta = params.target_angle;
    let baseline = matches!(scheme, Scheme::Ulah | Scheme::Ulaf);
    let rx_moves =
        scheme == Scheme::RxClosedForm || (scheme.moves_tx() && cfg.movable == Movable::Both);
    let rx = if rx_moves {
        snap(
            optimal_rx_positions(params, TieChoice::Left)?.apv,
            q,
            d,
            params.aperture_rx,
        )?
    } else if baseline && cfg.movable != Movable::Tx {
        ula(scheme, params.n_rx, d, params.aperture_rx)?
    } else {
        ulah_positions(params.n_rx, d)?
    };
    let los_aod = paths.aods()[0];
    let mut objective = f64::NAN;
    let tx = match scheme {
        Scheme::BtBfs => {
            let s = solve_los(params, los_aod, theta)?;
            objective = s.objective;
            s.apv
        }
        Scheme::BtDfs => match bt_dfs(params, los_aod, theta, cfg.seed ^ trial) {
            Ok(s) => {
                objective = s.objective;
                s.apv
            }
            Err(Error::NoFeasibleBoundary) => {
                let x = ulah_positions(params.n_tx, d)?;
                objective = g_objective(&x, los_aod, theta);
                x
            }
            Err(e) => return Err(e),
        },
        Scheme::MmRgp => solve_transmit_nlos(paths, params, &rx, None, NlosOptions::default())?.x,
        Scheme::RandomInitRgp => {
            let mut rng = trial_rng(cfg.seed, INIT_STREAM + trial);
            let x0 = random_feasible_apv(params, &mut rng)?;
            rgp(&x0, paths, params, theta, RgpOptions::default())?.x
        }
        Scheme::Ulah | Scheme::Ulaf if cfg.movable != Movable::Rx => {
            ula(scheme, params.n_tx, d, params.aperture_tx)?
        }
        _ => ulah_positions(params.n_tx, d)?,
    };
    let tx = if scheme.moves_tx() {
        snap(tx, q, d, params.aperture_tx)?
    } else {
        tx
    };
    if matches!(scheme, Scheme::MmRgp | Scheme::RandomInitRgp) {
        objective = p2(&tx, paths, params, theta).unwrap_or(f64::NAN);
    }
    if scheme == Scheme::RxClosedForm {
        objective = spread_metric(&rx);
    }
    let h = channel(&tx, paths);
    let a = steering(&tx, theta);
    let w = optimal_beamformer(&h, &a, params)?.w;
    let crb = crb_simplified(&tx, &rx, &w, params)?;
    let achieved_snr = inner(&h, w.weights()).norm_sqr() / params.noise_comm;
    Ok(SchemeOutcome {
        tx,
        rx,
        w,
        crb,
        achieved_snr,
        objective,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub axis: &'static str,
    pub value: f64,
    pub trial: u64,
    pub scheme: &'static str,
    pub root_crb_rad: f64,
    pub root_crb_deg: f64,
    pub achieved_snr_db: f64,
    pub objective: f64,
    pub status: String,
    pub seed: u64,
}

impl SweepRow {
    pub fn is_ok(&self) -> bool {
        self.status == "ok"
    }
}

fn status_of(e: &Error) -> String {
    match e {
        Error::Infeasible { .. } => "infeasible".into(),
        Error::RepairFailed { .. } => "repair-failed".into(),
        Error::NoFeasibleBoundary => "no-feasible-boundary".into(),
        other => format!("error: {other}"),
    }
}

/// One row per (axis value, trial, scheme). Trials run in parallel; the
/// output order is value, then trial, then scheme as listed in the config.
/// Solver failures become the row status.
pub fn run_sweep(cfg: &ScenarioConfig) -> Result<Vec<SweepRow>> {
    cfg.check()?;
    let axis = cfg.sweep.axis;
    let mut rows = Vec::new();
    for &value in &cfg.sweep.values {
        let cv = cfg.at(axis, value)?;
        let params = cv.system_params();
        params
            .validate_geometry()
            .map_err(|e| Error::Config(format!("{} = {value}: {e}", axis.name())))?;
        let per_trial: Vec<Vec<SweepRow>> = (0..cv.trials as u64)
            .into_par_iter()
            .map(|trial| {
                let paths = generate_channel(&cv, trial);
                cv.schemes
                    .iter()
                    .map(|&s| row_for(axis, value, trial, s, &cv, &params, &paths))
                    .collect()
            })
            .collect();
        rows.extend(per_trial.into_iter().flatten());
    }
    Ok(rows)
}

fn row_for(
    axis: SweepAxis,
    value: f64,
    trial: u64,
    scheme: Scheme,
    cfg: &ScenarioConfig,
    params: &SystemParams,
    paths: &ChannelPaths,
) -> SweepRow {
    let base = SweepRow {
        axis: axis.name(),
        value,
        trial,
        scheme: scheme.name(),
        root_crb_rad: f64::NAN,
        root_crb_deg: f64::NAN,
        achieved_snr_db: f64::NAN,
        objective: f64::NAN,
        status: "ok".into(),
        seed: cfg.seed,
    };
    match evaluate_scheme(scheme, cfg, params, paths, trial) {
        Ok(o) => SweepRow {
            root_crb_rad: o.crb.root_crb,
            root_crb_deg: o.crb.root_crb_deg(),
            achieved_snr_db: linear_to_db(o.achieved_snr),
            objective: o.objective,
            ..base
        },
        Err(e) => SweepRow {
            status: status_of(&e),
            ..base
        },
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub value: f64,
    pub scheme: &'static str,
    pub mean_root_crb_rad: f64,
    pub ok_trials: usize,
    pub failed_trials: usize,
}

/// Mean root-CRB per (value, scheme) over the successful trials.
pub fn summarize(rows: &[SweepRow]) -> Vec<SummaryRow> {
    let mut out: Vec<SummaryRow> = Vec::new();
    for r in rows {
        let idx = match out
            .iter()
            .position(|s| s.value == r.value && s.scheme == r.scheme)
        {
            Some(i) => i,
            None => {
                out.push(SummaryRow {
                    value: r.value,
                    scheme: r.scheme,
                    mean_root_crb_rad: 0.0,
                    ok_trials: 0,
                    failed_trials: 0,
                });
                out.len() - 1
            }
        };
        let s = &mut out[idx];
        if r.is_ok() {
            s.mean_root_crb_rad += r.root_crb_rad;
            s.ok_trials += 1;
        } else {
            s.failed_trials += 1;
        }
    }
    for s in &mut out {
        s.mean_root_crb_rad = if s.ok_trials > 0 {
            s.mean_root_crb_rad / s.ok_trials as f64
        } else {
            f64::NAN
        };
    }
    out
}

/// Writes the resolved configuration as `# config:` comment lines.
pub fn write_config_header<W: Write>(cfg: &ScenarioConfig, out: &mut W) -> Result<()> {
    for line in cfg.to_toml().lines() {
        writeln!(out, "# config: {line}")?;
    }
    Ok(())
}

pub fn write_csv<W: Write, R: Serialize>(
    cfg: &ScenarioConfig,
    rows: &[R],
    mut out: W,
) -> Result<()> {
    write_config_header(cfg, &mut out)?;
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BeamRow {
    pub angle_deg: f64,
    pub scheme: &'static str,
    pub power: f64,
}

/// `|a(φ)ᴴw|²` over `angles_deg` for every configured scheme, using the
/// trial-0 channel.
pub fn run_beampattern(cfg: &ScenarioConfig, angles_deg: &[f64]) -> Result<Vec<BeamRow>> {
    cfg.check()?;
    let params = cfg.system_params();
    let paths = generate_channel(cfg, 0);
    let grid: Vec<f64> = angles_deg.iter().map(|a| a.to_radians()).collect();
    let mut rows = Vec::new();
    for &s in &cfg.schemes {
        let o = evaluate_scheme(s, cfg, &params, &paths, 0)?;
        let pat = crate::signal::beampattern(&o.tx, &o.w, &grid);
        rows.extend(
            angles_deg
                .iter()
                .zip(pat)
                .map(|(&angle_deg, power)| BeamRow {
                    angle_deg,
                    scheme: s.name(),
                    power,
                }),
        );
    }
    Ok(rows)
}

/// `n` angles (degrees) equally spaced in `sin φ` over `(−1, 1)`.
pub fn sine_grid_deg(n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| (-1.0 + (2 * i + 1) as f64 / n as f64).asin().to_degrees())
        .collect()
}
