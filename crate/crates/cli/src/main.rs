use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use maisac::beamforming::optimal_beamformer;
use maisac::harness::config::scaled_aperture;
use maisac::harness::{
    evaluate_scheme, generate_channel, linear_to_db, run_beampattern, run_sweep, sine_grid_deg,
    summarize, write_csv, Movable, ScenarioConfig, Scheme, SweepAxis, SweepSpec,
};
use maisac::los::bt_bfs;
use maisac::nlos::{grad_p2, p2_slice, pbar1, solve_chain_qp, surrogate};
use maisac::oracle::{
    fd_gradient, grid_search_rx, grid_search_tx_los, grid_slack, qp_reference, GridSpec,
};
use maisac::receive::{
    crb_gain_ratio, optimal_rx_positions, ulaf_positions, ulah_positions, TieChoice,
};
use maisac::signal::{channel, crb_simplified, inner, steering};
use maisac::{Apv, Error};

#[derive(Parser)]
#[command(
    name = "maisac",
    version,
    about = "Movable-antenna array placement and beamforming for angle estimation under a user SNR target"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// CRB of given (or half-wavelength) arrays with the optimal beamformer.
    Crb {
        #[command(flatten)]
        common: Common,
        /// Transmit positions in wavelengths, comma separated.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        tx: Option<Vec<f64>>,
        /// Receive positions in wavelengths, comma separated.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        rx: Option<Vec<f64>>,
        /// Trial whose channel is used.
        #[arg(long, default_value_t = 0)]
        trial: u64,
    },
    /// Closed-form receive placement.
    OptimizeRx {
        #[command(flatten)]
        common: Common,
    },
    /// Transmit placement for one channel draw.
    OptimizeTx {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value_t = Mode::MmRgp)]
        mode: Mode,
        #[arg(long, default_value_t = 0)]
        trial: u64,
    },
    /// Monte Carlo sweep written as CSV.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        axis: Option<Axis>,
        /// Sweep values, comma separated. Defaults to the config's sweep.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        values: Option<Vec<f64>>,
    },
    /// Transmit beampattern of every scheme for the trial-0 channel, as CSV.
    Beampattern {
        #[command(flatten)]
        common: Common,
        /// Number of angles, equally spaced in sine.
        #[arg(long, default_value_t = 721)]
        points: usize,
    },
    /// Cross-checks a solver against a brute-force reference.
    Oracle {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        check: Check,
        /// Grid step in wavelengths for the grid checks.
        #[arg(long, default_value_t = 0.05)]
        step: f64,
    },
}

#[derive(Args)]
struct Common {
    /// TOML scenario file; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Snap movable arrays to this grid step (wavelengths).
    #[arg(long)]
    quantize: Option<f64>,
    /// Transmit antennas. Without --aperture-tx the aperture scales with the count.
    #[arg(long)]
    ntx: Option<usize>,
    /// Receive antennas. Without --aperture-rx the aperture scales with the count.
    #[arg(long)]
    nrx: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    gamma_db: Option<f64>,
    #[arg(long)]
    aperture_tx: Option<f64>,
    #[arg(long)]
    aperture_rx: Option<f64>,
    #[arg(long)]
    d_min: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    power_dbm: Option<f64>,
    /// Number of transmit paths; 1 gives a line-of-sight channel.
    #[arg(long)]
    paths: Option<usize>,
    #[arg(long)]
    kappa: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    target_deg: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    los_aod_deg: Option<f64>,
    #[arg(long, value_enum)]
    movable: Option<MovableArg>,
    #[arg(long, value_enum, value_delimiter = ',')]
    schemes: Option<Vec<SchemeArg>>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Bfs,
    Dfs,
    MmRgp,
}

#[derive(Clone, Copy, ValueEnum)]
enum Axis {
    Gamma,
    Aperture,
    Ntx,
    Nrx,
}

#[derive(Clone, Copy, ValueEnum)]
enum Check {
    Rx,
    TxLos,
    Grad,
    Qp,
}

#[derive(Clone, Copy, ValueEnum)]
enum MovableArg {
    Rx,
    Tx,
    Both,
}

#[derive(Clone, Copy, ValueEnum)]
enum SchemeArg {
    RxClosedForm,
    BtBfs,
    BtDfs,
    MmRgp,
    RandomInitRgp,
    Ulah,
    Ulaf,
}

impl From<SchemeArg> for Scheme {
    fn from(s: SchemeArg) -> Self {
        match s {
            SchemeArg::RxClosedForm => Scheme::RxClosedForm,
            SchemeArg::BtBfs => Scheme::BtBfs,
            SchemeArg::BtDfs => Scheme::BtDfs,
            SchemeArg::MmRgp => Scheme::MmRgp,
            SchemeArg::RandomInitRgp => Scheme::RandomInitRgp,
            SchemeArg::Ulah => Scheme::Ulah,
            SchemeArg::Ulaf => Scheme::Ulaf,
        }
    }
}

impl From<Axis> for SweepAxis {
    fn from(a: Axis) -> Self {
        match a {
            Axis::Gamma => SweepAxis::Gamma,
            Axis::Aperture => SweepAxis::Aperture,
            Axis::Ntx => SweepAxis::Ntx,
            Axis::Nrx => SweepAxis::Nrx,
        }
    }
}

/// Failure classes mapped to exit codes.
enum Failure {
    Core(Error),
    Oracle(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Core(e.into())
    }
}

type CliResult = Result<(), Failure>;

impl Common {
    fn resolve(&self) -> Result<ScenarioConfig, Error> {
        let mut cfg = match &self.config {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| Error::Config(format!("{}: {e}", p.display())))?;
                ScenarioConfig::from_toml(&text)?
            }
            None => ScenarioConfig::default(),
        };
        if let Some(n) = self.ntx {
            cfg.n_tx = n;
            cfg.aperture_tx = scaled_aperture(n, 18);
        }
        if let Some(n) = self.nrx {
            cfg.n_rx = n;
            cfg.aperture_rx = scaled_aperture(n, 20);
        }
        macro_rules! set {
            ($($field:ident => $target:ident),*) => {
                $(if let Some(v) = self.$field { cfg.$target = v; })*
            };
        }
        set!(seed => seed, trials => trials, gamma_db => gamma_db, aperture_tx => aperture_tx,
             aperture_rx => aperture_rx, d_min => d_min, power_dbm => power_dbm, paths => paths,
             kappa => kappa, target_deg => target_angle_deg);
        if self.quantize.is_some() {
            cfg.quantize_step = self.quantize;
        }
        if self.los_aod_deg.is_some() {
            cfg.los_aod_deg = self.los_aod_deg;
        }
        if let Some(m) = self.movable {
            cfg.movable = match m {
                MovableArg::Rx => Movable::Rx,
                MovableArg::Tx => Movable::Tx,
                MovableArg::Both => Movable::Both,
            };
        }
        if let Some(s) = &self.schemes {
            cfg.schemes = s.iter().map(|&v| v.into()).collect();
        }
        cfg.check()?;
        Ok(cfg)
    }

    fn writer(&self) -> io::Result<Box<dyn Write>> {
        Ok(match &self.out {
            Some(p) => Box::new(BufWriter::new(File::create(p)?)),
            None => Box::new(BufWriter::new(io::stdout().lock())),
        })
    }
}

fn fmt_positions(x: &Apv) -> String {
    x.positions()
        .iter()
        .map(|v| format!("{v:.6}"))
        .collect::<Vec<_>>()
        .join(",")
}

fn crb(common: &Common, tx: Option<&[f64]>, rx: Option<&[f64]>, trial: u64) -> CliResult {
    let cfg = common.resolve()?;
    let mut p = cfg.system_params();
    let tx = match tx {
        Some(v) => Apv::new(v.to_vec())?,
        None => ulah_positions(p.n_tx, p.d_min)?,
    };
    let rx = match rx {
        Some(v) => Apv::new(v.to_vec())?,
        None => ulah_positions(p.n_rx, p.d_min)?,
    };
    p.n_tx = tx.len();
    p.n_rx = rx.len();
    let paths = generate_channel(&cfg, trial);
    let h = channel(&tx, &paths);
    let bf = optimal_beamformer(&h, &steering(&tx, p.target_angle), &p)?;
    let c = crb_simplified(&tx, &rx, &bf.w, &p)?;
    let snr = inner(&h, bf.w.weights()).norm_sqr() / p.noise_comm;
    let mut out = common.writer()?;
    writeln!(out, "tx = {}", fmt_positions(&tx))?;
    writeln!(out, "rx = {}", fmt_positions(&rx))?;
    writeln!(out, "branch = {:?}", bf.branch)?;
    writeln!(out, "root_crb_rad = {:.6e}", c.root_crb)?;
    writeln!(out, "root_crb_deg = {:.6e}", c.root_crb_deg())?;
    writeln!(out, "snr_db = {:.4}", linear_to_db(snr))?;
    out.flush()?;
    Ok(())
}

fn optimize_rx(common: &Common) -> CliResult {
    let cfg = common.resolve()?;
    let p = cfg.system_params();
    let s = optimal_rx_positions(&p, TieChoice::Left)?;
    let ratio = crb_gain_ratio(&p)?;
    let mut out = common.writer()?;
    writeln!(out, "rx = {}", fmt_positions(&s.apv))?;
    writeln!(out, "spread = {:.6}", s.spread)?;
    writeln!(out, "crb_gain_vs_ulah = {:.6}", ratio.direct)?;
    out.flush()?;
    Ok(())
}

fn optimize_tx(common: &Common, mode: Mode, trial: u64) -> CliResult {
    let cfg = common.resolve()?;
    let p = cfg.system_params();
    let scheme = match mode {
        Mode::Bfs => Scheme::BtBfs,
        Mode::Dfs => Scheme::BtDfs,
        Mode::MmRgp => Scheme::MmRgp,
    };
    let paths = generate_channel(&cfg, trial);
    let o = evaluate_scheme(scheme, &cfg, &p, &paths, trial)?;
    let mut out = common.writer()?;
    writeln!(out, "scheme = {}", scheme.name())?;
    writeln!(out, "tx = {}", fmt_positions(&o.tx))?;
    writeln!(out, "rx = {}", fmt_positions(&o.rx))?;
    writeln!(out, "objective = {:.6e}", o.objective)?;
    writeln!(out, "root_crb_rad = {:.6e}", o.crb.root_crb)?;
    writeln!(out, "root_crb_deg = {:.6e}", o.crb.root_crb_deg())?;
    writeln!(out, "snr_db = {:.4}", linear_to_db(o.achieved_snr))?;
    out.flush()?;
    Ok(())
}

fn sweep(common: &Common, axis: Option<Axis>, values: Option<&[f64]>) -> CliResult {
    let mut cfg = common.resolve()?;
    let axis = axis.map(SweepAxis::from).unwrap_or(cfg.sweep.axis);
    let values = match values {
        Some(v) => v.to_vec(),
        None if axis == cfg.sweep.axis => cfg.sweep.values.clone(),
        None => {
            return Err(Error::Config(format!(
                "--values is required when sweeping {}",
                axis.name()
            ))
            .into())
        }
    };
    cfg.sweep = SweepSpec { axis, values };
    let rows = run_sweep(&cfg)?;
    write_csv(&cfg, &rows, common.writer()?)?;
    let mut err = io::stderr().lock();
    for s in summarize(&rows) {
        writeln!(
            err,
            "{} = {:>8.3}  {:<16} mean root-CRB {:.4e} rad ({} ok, {} failed)",
            axis.name(),
            s.value,
            s.scheme,
            s.mean_root_crb_rad,
            s.ok_trials,
            s.failed_trials
        )?;
    }
    Ok(())
}

fn beampattern(common: &Common, points: usize) -> CliResult {
    let cfg = common.resolve()?;
    if points == 0 {
        return Err(Error::Config("--points must be positive".into()).into());
    }
    let rows = run_beampattern(&cfg, &sine_grid_deg(points))?;
    write_csv(&cfg, &rows, common.writer()?)?;
    Ok(())
}

fn rel_norm(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a
        .iter()
        .zip(b)
        .map(|(x, y)| (x - y).powi(2))
        .sum::<f64>()
        .sqrt();
    let den: f64 = b.iter().map(|y| y * y).sum::<f64>().sqrt();
    num / den.max(1e-300)
}

fn oracle(common: &Common, check: Check, step: f64) -> CliResult {
    let cfg = common.resolve()?;
    let p = cfg.system_params();
    let mut out = common.writer()?;
    let mut failures = Vec::new();
    match check {
        Check::Rx => {
            let s = optimal_rx_positions(&p, TieChoice::Left)?;
            let g = grid_search_rx(&p, &GridSpec::new(step))?;
            // The spread has gradient norm at most 2·sqrt(N)·D.
            let slack = grid_slack(2.0 * (p.n_rx as f64).sqrt() * p.aperture_rx, step, p.n_rx);
            writeln!(
                out,
                "closed_form = {:.9}  grid = {:.9}  points = {}",
                s.spread, g.value, g.points
            )?;
            if g.value > s.spread + slack {
                failures.push(format!(
                    "grid spread {} exceeds closed form {}",
                    g.value, s.spread
                ));
            }
        }
        Check::TxLos => {
            for t in 0..cfg.trials as u64 {
                let aod = generate_channel(&cfg, t).aods()[0];
                let b = bt_bfs(&p, aod, p.target_angle)?;
                let g = grid_search_tx_los(&p, aod, p.target_angle, &GridSpec::new(step))?;
                let k = 2.0 * std::f64::consts::PI * (aod.sin() + p.target_angle.sin()).abs();
                let slack = grid_slack(k * (p.n_tx as f64).sqrt(), step, p.n_tx);
                writeln!(
                    out,
                    "trial {t}: bfs = {:.9}  grid = {:.9}",
                    b.objective, g.value
                )?;
                if b.objective < g.value - slack {
                    failures.push(format!(
                        "trial {t}: bfs {} below grid {}",
                        b.objective, g.value
                    ));
                }
            }
        }
        Check::Grad => {
            let x = ulaf_positions(p.n_tx, p.aperture_tx)?;
            let (mut worst_s, mut worst_p, mut skipped) = (0.0f64, 0.0f64, 0);
            for t in 0..cfg.trials as u64 {
                let paths = generate_channel(&cfg, t);
                let s = surrogate(&x, &paths, p.target_angle);
                let fd = fd_gradient(|v| pbar1(v, &s.z, &s.alphas), x.positions(), 1e-6);
                worst_s = worst_s.max(rel_norm(&s.grad, &fd));
                match grad_p2(&x, &paths, &p, p.target_angle) {
                    Ok(g) => {
                        let fd = fd_gradient(
                            |v| p2_slice(v, &paths, &p, p.target_angle).unwrap_or(f64::NAN),
                            x.positions(),
                            1e-6,
                        );
                        if fd.iter().all(|v| v.is_finite()) {
                            worst_p = worst_p.max(rel_norm(&g, &fd));
                        } else {
                            skipped += 1;
                        }
                    }
                    Err(_) => skipped += 1,
                }
            }
            writeln!(out, "surrogate max relative error = {worst_s:.3e}")?;
            writeln!(
                out,
                "p2 max relative error = {worst_p:.3e} ({skipped} degenerate points skipped)"
            )?;
            if worst_s > 1e-5 || worst_p > 1e-5 {
                failures.push("finite differences disagree with the analytic gradient".into());
            }
        }
        Check::Qp => {
            let x = ulaf_positions(p.n_tx, p.aperture_tx)?;
            let mut worst = 0.0f64;
            for t in 0..cfg.trials as u64 {
                let paths = generate_channel(&cfg, t);
                let s = surrogate(&x, &paths, p.target_angle);
                let b: Vec<f64> = x
                    .positions()
                    .iter()
                    .zip(&s.grad)
                    .map(|(xi, g)| s.delta1 * xi + g)
                    .collect();
                let fast = solve_chain_qp(s.delta1, &b, p.d_min, p.aperture_tx);
                let reference = qp_reference(s.delta1, &b, p.d_min, p.aperture_tx, 1e-10)?;
                let e = fast
                    .iter()
                    .zip(&reference)
                    .fold(0.0f64, |m, (a, r)| m.max((a - r).abs()));
                worst = worst.max(e);
            }
            writeln!(out, "max |projection - reference| = {worst:.3e}")?;
            if worst > 1e-6 {
                failures.push(format!("QP step differs from the reference by {worst:.3e}"));
            }
        }
    }
    out.flush()?;
    if failures.is_empty() {
        Ok(())
    } else {
        Err(Failure::Oracle(failures.join("; ")))
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_)
        | Error::InvalidInput(_)
        | Error::InvalidGeometry(_)
        | Error::GridTooLarge { .. } => 2,
        Error::Infeasible { .. } | Error::ApertureTooSmall { .. } | Error::RepairFailed { .. } => 3,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Crb {
            common,
            tx,
            rx,
            trial,
        } => crb(common, tx.as_deref(), rx.as_deref(), *trial),
        Command::OptimizeRx { common } => optimize_rx(common),
        Command::OptimizeTx {
            common,
            mode,
            trial,
        } => optimize_tx(common, *mode, *trial),
        Command::Sweep {
            common,
            axis,
            values,
        } => sweep(common, *axis, values.as_deref()),
        Command::Beampattern { common, points } => beampattern(common, *points),
        Command::Oracle {
            common,
            check,
            step,
        } => oracle(common, *check, *step),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Core(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
        Err(Failure::Oracle(msg)) => {
            eprintln!("oracle check failed: {msg}");
            ExitCode::from(4)
        }
    }
}
