use gradheat::estimates::{
    check_hypotheses, fit_bound, liouville_probe, max_time_derivative, probe_data, subcritical_threshold,
    universal_bound_check, universality_ratio, BoundTemplate, HypothesisOptions, ProbeConfig, Trend,
};
use gradheat::grid::{BoundaryCondition, Grid, InitialData, Solver, SolverConfig, Termination, Trajectory};
use gradheat::{Error, ProblemParams};

fn params(p: (i64, i64), q: (i64, i64), m: f64) -> ProblemParams {
    ProblemParams::from_parts(1, p, q, m).unwrap()
}

fn zero_trajectory() -> Trajectory {
    let grid = Grid::ball(1, &[0.0], 2.0, 0.05).unwrap();
    let snaps = (0..20).map(|k| grid.zeros(k as f64 * 0.01)).collect();
    Trajectory::from_snapshots(grid, snaps, Termination::CompletedT).unwrap()
}

fn run(params: &ProblemParams, data: InitialData, radius: f64, h: f64, t_final: f64) -> Trajectory {
    let grid = Grid::ball(1, &[0.0], radius, h).unwrap();
    let cfg = SolverConfig::stable(&grid, t_final, BoundaryCondition::DirichletZero, 0.9).with_stride(10);
    Solver::new(&grid, params, &cfg).unwrap().solve(data.field(&grid)).unwrap()
}

#[test]
fn zero_solution_is_trivial_everywhere() {
    let traj = zero_trajectory();
    let sub = params((3, 1), (6, 5), 1.0);
    let h = check_hypotheses(&traj, &sub, &BoundTemplate::Subcritical, &HypothesisOptions::default()).unwrap();
    assert!(h.all_pass());
    assert_eq!(h.max_ut, 0.0);
    assert_eq!(fit_bound(&traj, &sub, &BoundTemplate::Subcritical, None).unwrap().fitted_c, 0.0);
    let crit = params((3, 1), (3, 2), 1.0);
    assert_eq!(universal_bound_check(&traj, &crit).unwrap().fitted_c, 0.0);
}

#[test]
fn growing_data_fails_monotonicity() {
    let grid = Grid::ball(1, &[0.0], 1.0, 0.05).unwrap();
    let snaps = (0..6).map(|k| grid.sample(k as f64 * 0.1, |x| (1.0 + k as f64) * 1e-4 * (1.0 - x[0] * x[0]))).collect();
    let traj = Trajectory::from_snapshots(grid, snaps, Termination::CompletedT).unwrap();
    let sub = params((3, 1), (6, 5), 1.0);
    let h = check_hypotheses(&traj, &sub, &BoundTemplate::Subcritical, &HypothesisOptions::default()).unwrap();
    assert!(h.max_ut > 0.0);
    assert!(!h.monotone_pass && !h.all_pass());
}

#[test]
fn data_at_ninety_percent_of_threshold_passes_with_ten_percent_margin() {
    let sub = params((3, 1), (6, 5), 1.0);
    let th = subcritical_threshold(&sub, None);
    let traj = run(&sub, InitialData::Paraboloid { amplitude: 0.9 * th }, 2.0, 0.02, 0.1);
    let h = check_hypotheses(&traj, &sub, &BoundTemplate::Subcritical, &HypothesisOptions::default()).unwrap();
    assert!(h.all_pass(), "{h:?}");
    let ratio = h.bound_margin / th;
    assert!((0.1..0.15).contains(&ratio), "margin ratio {ratio}");
    assert!(max_time_derivative(&traj).unwrap() <= 1e-10);
}

#[test]
fn template_regime_is_enforced() {
    let traj = zero_trajectory();
    let crit = params((3, 1), (3, 2), 1.0);
    assert!(matches!(
        fit_bound(&traj, &crit, &BoundTemplate::Subcritical, None),
        Err(Error::TemplateMismatch { .. })
    ));
    let sub = params((3, 1), (6, 5), 1.0);
    assert!(universal_bound_check(&traj, &sub).is_err());
}

#[test]
fn universal_bound_on_small_data() {
    let mut reports = Vec::new();
    for m in [1e-3, 1e-2, 1e-1] {
        let crit = params((3, 1), (3, 2), m);
        let data = [InitialData::Paraboloid { amplitude: 0.01 }, InitialData::Gaussian { amplitude: 0.01, width: 0.5 }];
        let pair: Vec<_> = data
            .into_iter()
            .map(|d| universal_bound_check(&run(&crit, d, 2.0, 0.04, 8.0), &crit).unwrap())
            .collect();
        for r in &pair {
            assert_eq!(r.violation_count, 0);
            assert!(r.fitted_c > 0.0);
            assert!(r.centre_margin > 10.0, "M = {m}: centre margin {}", r.centre_margin);
            assert!(r.envelope_fit.slope >= -1.0 / 2.0 - 0.15, "M = {m}: envelope {}", r.envelope_fit.slope);
        }
        let ratio = universality_ratio(&pair[0], &pair[1]);
        assert!((1.0..=10.0).contains(&ratio), "M = {m}: ratio {ratio}");
        reports.push(pair);
    }
    assert_eq!(reports.len(), 3);
}

#[test]
fn probe_gates() {
    let base = ProbeConfig {
        params: params((3, 1), (6, 5), 1.0),
        radius: 4.0,
        horizon: 4.0,
        h: 0.25,
        data: InitialData::Zero,
        constant: None,
        monotone_rel_tol: 1e-9,
    };
    let zero = liouville_probe(&base).unwrap();
    assert_eq!(zero.trend, Trend::Decaying);
    assert_eq!(zero.ratio, 0.0);

    let sub = params((3, 1), (6, 5), 1.0);
    let too_big = ProbeConfig { data: probe_data(10.0 * subcritical_threshold(&sub, None)), ..base.clone() };
    assert_eq!(liouville_probe(&too_big).unwrap().trend, Trend::NotApplicable);

    let sup = ProbeConfig { params: params((3, 1), (2, 1), 1.0), data: probe_data(1e-6), ..base.clone() };
    assert_eq!(liouville_probe(&sup).unwrap().trend, Trend::NotApplicable);

    let weak = ProbeConfig { params: params((3, 1), (3, 2), 1.0), data: probe_data(1e-9), ..base };
    assert_eq!(liouville_probe(&weak).unwrap().trend, Trend::NotApplicable);
}
