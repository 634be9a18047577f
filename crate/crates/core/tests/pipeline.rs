use maisac::harness::{
    generate_channel, run_sweep, summarize, Movable, ScenarioConfig, Scheme, SweepAxis, SweepSpec,
};
use maisac::nlos::{p1, p2, solve_transmit_nlos, sp1_threshold, MmStatus, NlosInit, NlosOptions};
use maisac::receive::ulah_positions;
use maisac::signal::{channel, crb_floor, user_snr};

#[test]
fn nlos_solution_meets_the_snr_target() {
    let cfg = ScenarioConfig::scaled(8, 10);
    for gamma_db in [0.0, 15.0, 25.0] {
        let cfg = ScenarioConfig {
            gamma_db,
            ..cfg.clone()
        };
        let p = cfg.system_params();
        let rx = ulah_positions(p.n_rx, p.d_min).unwrap();
        for t in 0..10 {
            let paths = generate_channel(&cfg, t);
            let Ok(s) = solve_transmit_nlos(&paths, &p, &rx, None, NlosOptions::default()) else {
                continue;
            };
            assert!(s.x.is_feasible(p.d_min, p.aperture_tx, 1e-9));
            let snr = user_snr(&channel(&s.x, &paths), &s.w, p.noise_comm);
            assert!(snr >= p.snr_threshold * (1.0 - 1e-9));
            let floor = crb_floor(&s.x, &rx, &p).unwrap().crb;
            assert!(s.crb.crb >= floor * (1.0 - 1e-9));
            if s.mm.status == MmStatus::Feasible {
                assert!(p1(&s.x, &paths, p.target_angle) > sp1_threshold(p.n_tx, &p));
                assert!((s.crb.crb - floor).abs() <= 1e-9 * floor);
            }
        }
    }
}

#[test]
fn both_starts_give_valid_layouts() {
    let cfg = ScenarioConfig {
        gamma_db: 20.0,
        ..ScenarioConfig::scaled(6, 8)
    };
    let p = cfg.system_params();
    let rx = ulah_positions(p.n_rx, p.d_min).unwrap();
    let paths = generate_channel(&cfg, 3);
    for init in [NlosInit::LosOptimal, NlosInit::Ulah] {
        let s = solve_transmit_nlos(
            &paths,
            &p,
            &rx,
            None,
            NlosOptions {
                init,
                ..NlosOptions::default()
            },
        )
        .unwrap();
        assert!(s.x.is_feasible(p.d_min, p.aperture_tx, 1e-9));
        if let Some(r) = &s.rgp {
            assert!((p2(&s.x, &paths, &p, 0.0).unwrap() - r.p2).abs() < 1e-12);
        }
    }
}

#[test]
fn aperture_sweep_helps_the_movable_array() {
    let cfg = ScenarioConfig {
        trials: 8,
        paths: 1,
        gamma_db: 20.0,
        schemes: vec![Scheme::BtBfs, Scheme::Ulah],
        sweep: SweepSpec {
            axis: SweepAxis::Aperture,
            values: vec![3.0, 6.0],
        },
        movable: Movable::Tx,
        ..ScenarioConfig::scaled(6, 8)
    };
    let summary = summarize(&run_sweep(&cfg).unwrap());
    let get = |v: f64, s: &str| {
        summary
            .iter()
            .find(|r| r.value == v && r.scheme == s)
            .unwrap()
            .mean_root_crb_rad
    };
    assert!(get(6.0, "bt-bfs") <= get(3.0, "bt-bfs") * (1.0 + 1e-9));
    for v in [3.0, 6.0] {
        assert!(get(v, "bt-bfs") <= get(v, "ulah") * (1.0 + 1e-9));
    }
}

#[test]
fn antenna_count_sweep_changes_array_size() {
    let cfg = ScenarioConfig {
        trials: 2,
        schemes: vec![Scheme::Ulah],
        sweep: SweepSpec {
            axis: SweepAxis::Nrx,
            values: vec![4.0, 12.0],
        },
        ..ScenarioConfig::scaled(6, 12)
    };
    let rows = run_sweep(&cfg).unwrap();
    let at = |v: f64| rows.iter().find(|r| r.value == v).unwrap().root_crb_rad;
    assert!(at(12.0) < at(4.0));
    let bad = ScenarioConfig {
        sweep: SweepSpec {
            axis: SweepAxis::Nrx,
            values: vec![2.5],
        },
        ..cfg
    };
    assert!(run_sweep(&bad).is_err());
}
