//! Rician multipath channel draws.

use std::f64::consts::FRAC_PI_2;

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::config::ScenarioConfig;
use crate::types::ChannelPaths;

/// Generator for trial `trial`: stream `trial` of the ChaCha8 keyed by the
/// seed, so draws do not depend on the order trials run in.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    use rand::SeedableRng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// Circularly symmetric complex Gaussian with variance `var`.
pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R, var: f64) -> Complex64 {
    let s = (var / 2.0).sqrt();
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re * s, im * s)
}

/// First path `CN(0, κ/(κ+1))`, the rest `CN(0, 1/((κ+1)(L_t−1)))`, AoDs
/// uniform on `[−π/2, π/2]` unless the first one is pinned.
pub fn draw_paths<R: Rng + ?Sized>(cfg: &ScenarioConfig, rng: &mut R) -> ChannelPaths {
    let l = cfg.paths.max(1);
    let k = cfg.kappa;
    let mut gains = Vec::with_capacity(l);
    let mut aods = Vec::with_capacity(l);
    gains.push(complex_normal(rng, k / (k + 1.0)));
    let rest = if l > 1 {
        1.0 / ((k + 1.0) * (l - 1) as f64)
    } else {
        0.0
    };
    for _ in 1..l {
        gains.push(complex_normal(rng, rest));
    }
    for _ in 0..l {
        aods.push(rng.random_range(-FRAC_PI_2..=FRAC_PI_2));
    }
    if let Some(deg) = cfg.los_aod_deg {
        aods[0] = deg.to_radians();
    }
    ChannelPaths::new(gains, aods).expect("gains and AoDs have equal length")
}

pub fn generate_channel(cfg: &ScenarioConfig, trial: u64) -> ChannelPaths {
    draw_paths(cfg, &mut trial_rng(cfg.seed, trial))
}
