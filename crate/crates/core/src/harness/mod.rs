//! Scenario configuration, channel draws, baselines and Monte Carlo sweeps.

pub mod channel;
pub mod config;
pub mod quantize;
pub mod sweep;

pub use channel::{generate_channel, trial_rng};
pub use config::{
    db_to_linear, linear_to_db, Movable, ScenarioConfig, Scheme, SweepAxis, SweepSpec,
};
pub use quantize::quantize_apv;
pub use sweep::{
    evaluate_scheme, run_beampattern, run_sweep, sine_grid_deg, summarize, write_csv, BeamRow,
    SchemeOutcome, SummaryRow, SweepRow,
};
