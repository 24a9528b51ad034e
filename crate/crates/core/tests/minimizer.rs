use std::f64::consts::PI;

use approx::assert_relative_eq;
use drops2d::energy::{self, Potential};
use drops2d::geometry::{shapes, Vec2};
use drops2d::minimizer::{
    asymptotic_sweep, default_sweep_seed, flow_step, initial_state, rescaled_ball_distance, run_flow, sweep_template,
    FlowConfig, SweepReport, Termination,
};
use drops2d::Error;
use proptest::prelude::*;

fn ellipse() -> drops2d::Region {
    shapes::ellipse_with_area(Vec2::ZERO, PI, 1.2, 128)
}

#[test]
fn a_ball_is_already_critical() {
    let cfg = FlowConfig::new(1.0, PI, Potential::Zero);
    let state = run_flow(&cfg, &shapes::disk(Vec2::new(0.3, -0.2), 1.0, 128)).unwrap();
    assert_eq!(state.termination, Some(Termination::Converged));
    assert!(state.iteration <= 1, "{} iterations", state.iteration);
    assert!(state.criticality() <= cfg.eps_stop);
}

#[test]
fn first_step_on_an_ellipse_lowers_the_energy_at_fixed_area() {
    let cfg = FlowConfig::new(1.0, PI, Potential::Zero);
    let s0 = initial_state(&ellipse(), &cfg).unwrap();
    assert_relative_eq!(s0.region.area(), PI, max_relative = 1e-12);
    let s1 = flow_step(&s0, &cfg).unwrap();
    assert!(
        s1.report.energy < s0.report.energy,
        "{} -> {}",
        s0.report.energy,
        s1.report.energy
    );
    assert_relative_eq!(s1.region.area(), PI, max_relative = 1e-12);
    assert_eq!(s1.iteration, 1);
    let rec = &s1.history[0];
    assert_eq!(rec.energy, s1.report.energy);
    assert!(rec.area_drift.abs() < 0.01);
    assert!(rec.dt <= cfg.dt());
    // the flow rounds the ellipse
    assert!(rescaled_ball_distance(&s1.region) < rescaled_ball_distance(&s0.region));
}

#[test]
fn zero_budget_returns_the_rescaled_seed() {
    let mut cfg = FlowConfig::new(0.5, 2.0, Potential::Zero);
    cfg.max_iters = 0;
    let state = run_flow(&cfg, &ellipse()).unwrap();
    assert_eq!(state.termination, Some(Termination::Budget));
    assert_eq!(state.iteration, 0);
    assert!(state.history.is_empty());
    assert_relative_eq!(state.region.area(), 2.0, max_relative = 1e-12);
    assert!(state.region.centroid().norm() < 1e-12);
}

#[test]
fn refreshing_every_other_move_still_descends() {
    let mut cfg = FlowConfig::new(1.0, PI, Potential::Zero);
    cfg.refresh = 2;
    let s0 = initial_state(&ellipse(), &cfg).unwrap();
    let s1 = flow_step(&s0, &cfg).unwrap();
    assert!(s1.report.energy < s0.report.energy);
    assert_relative_eq!(s1.region.area(), PI, max_relative = 1e-12);
}

#[test]
fn history_csv_has_one_line_per_step() {
    let mut cfg = FlowConfig::new(1.0, PI, Potential::Zero);
    cfg.max_iters = 2;
    cfg.eps_stop = 1e-9;
    let state = run_flow(&cfg, &ellipse()).unwrap();
    assert_eq!(state.termination, Some(Termination::Budget));
    let energies: Vec<f64> = state.history.iter().map(|r| r.energy).collect();
    assert!(energies.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-6)));
    let path = std::env::temp_dir().join(format!("drops2d-flow-{}.csv", std::process::id()));
    state.write_history_csv(&path).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    std::fs::remove_file(&path).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "iteration,energy,max_residual,area_drift,dt,rejections"
    );
    assert_eq!(lines.count(), 2);
}

#[test]
fn flow_settings_are_validated() {
    let m = PI;
    let ok = FlowConfig::new(1.0, m, Potential::Zero);
    assert!(ok.validate().is_ok());
    let lc = energy::lambda_c(m);
    for cfg in [
        FlowConfig::new(lc, m, Potential::Zero),
        FlowConfig::new(1.01 * lc, m, Potential::Zero),
        FlowConfig::new(-1.0, m, Potential::Zero),
        FlowConfig::new(1.0, 0.0, Potential::Zero),
        FlowConfig {
            beta: 0.3,
            ..ok.clone()
        },
        FlowConfig {
            beta: 0.0,
            ..ok.clone()
        },
        FlowConfig {
            refresh: 0,
            ..ok.clone()
        },
        FlowConfig {
            eps_stop: 0.0,
            ..ok.clone()
        },
        FlowConfig {
            h: Some(0.06),
            hb: Some(0.1),
            ..ok.clone()
        },
    ] {
        assert!(matches!(cfg.validate(), Err(Error::InvalidParameter(_))), "{cfg:?}");
        assert!(matches!(run_flow(&cfg, &ellipse()), Err(Error::InvalidParameter(_))));
    }
}

#[test]
fn sweep_inputs_are_validated() {
    let g = Potential::Quadratic {
        a: 1.0,
        x0: Vec2::new(1.0, 1.0),
    };
    let seed = default_sweep_seed();
    let t = sweep_template();
    let masses = [0.16 * PI, 0.04 * PI];
    for ratio in [-0.1, 1.0, 1.5] {
        assert!(matches!(
            asymptotic_sweep(&masses, ratio, &g, &seed, &t),
            Err(Error::InvalidParameter(_))
        ));
    }
    assert!(matches!(
        asymptotic_sweep(&masses, 0.5, &Potential::Zero, &seed, &t),
        Err(Error::InvalidParameter(_))
    ));
    for bad in [[0.04 * PI, 0.16 * PI], [0.04 * PI, 0.04 * PI]] {
        assert!(matches!(
            asymptotic_sweep(&bad, 0.5, &g, &seed, &t),
            Err(Error::InvalidParameter(_))
        ));
    }
}

#[test]
fn sweep_rows_record_budget_exhaustion() {
    let g = Potential::Quadratic {
        a: 1.0,
        x0: Vec2::new(1.0, 1.0),
    };
    let mut t = sweep_template();
    t.max_iters = 1;
    let rep = asymptotic_sweep(&[0.04 * PI], 0.5, &g, &default_sweep_seed(), &t).unwrap();
    let row = &rep.rows[0];
    assert_relative_eq!(row.radius, 0.2, max_relative = 1e-14);
    assert_relative_eq!(row.lambda, 0.5 * energy::lambda_c(0.04 * PI), max_relative = 1e-14);
    assert_eq!(row.termination, Some(Termination::Budget));
    assert_eq!(row.iterations, 1);
    assert!(row.error.is_none());
    assert!(row.centroid_distance.unwrap() < row.radius);
}

#[test]
fn nonincreasing_columns() {
    assert!(SweepReport::nonincreasing(&[3.0, 2.0, 2.0, 1.0], 0.0));
    assert!(!SweepReport::nonincreasing(&[3.0, 2.0, 2.1], 0.0));
    assert!(SweepReport::nonincreasing(&[3.0, 2.0, 2.1], 0.1));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn ball_distance_ignores_position_and_size(
        cx in -5.0f64..5.0, cy in -5.0f64..5.0, r in 0.05f64..10.0, e in 1.0f64..2.0,
    ) {
        let disk = shapes::disk(Vec2::new(cx, cy), r, 512);
        prop_assert!(rescaled_ball_distance(&disk) < 1e-3);
        let base = rescaled_ball_distance(&shapes::ellipse_with_area(Vec2::ZERO, PI, e, 256));
        let moved = rescaled_ball_distance(&shapes::ellipse_with_area(Vec2::new(cx, cy), PI * r * r, e, 256));
        prop_assert!((base - moved).abs() < 1e-9);
    }

    #[test]
    fn spacing_ratio_gate(m in 0.01f64..10.0, hb in 0.01f64..0.5, k in 0.1f64..1.0) {
        let cfg = FlowConfig { h: Some(k * hb), hb: Some(hb), ..FlowConfig::new(0.0, m, Potential::Zero) };
        prop_assert_eq!(cfg.validate().is_ok(), k <= 0.5);
    }
}
