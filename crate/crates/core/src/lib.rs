//! Joint antenna-position and beamformer optimization for a movable-antenna
//! sensing-and-communication base station.
//!
//! Lengths are in wavelengths throughout. The crate is organised bottom-up:
//! [`signal`] evaluates steering vectors, channels and the angle CRB,
//! [`beamforming`] gives the closed-form beamformer, [`receive`] places the
//! receive array, [`los`] and [`nlos`] place the transmit array, [`oracle`]
//! holds brute-force references, and [`harness`] runs Monte Carlo sweeps.

pub mod beamforming;
pub mod error;
pub mod harness;
pub mod los;
pub mod nlos;
pub mod oracle;
pub mod receive;
pub mod signal;
pub mod types;

pub use error::{Error, Result};
pub use types::{Apv, BeamVector, ChannelPaths, CrbValue, SystemParams};
