use gradheat::bernstein::{
    absorption_term, bochner_residual, operator_l_residual, transform, AuxiliaryFunction, Cutoff, LemmaOptions,
};
use gradheat::grid::{BoundaryCondition, Grid, InitialData, Solver, SolverConfig, Termination, Trajectory};
use gradheat::params::bernstein_gamma;
use gradheat::stats::loglog_slope;
use gradheat::ProblemParams;

#[test]
fn power_shift_endpoint_values() {
    for (n, q) in [(1, 1.5), (2, 1.2), (3, 1.9)] {
        let gamma = bernstein_gamma(n, q);
        let f = AuxiliaryFunction::power_shift(0.7, gamma).unwrap();
        let end = 2f64.powf(1.0 / gamma) - 1.0;
        assert!((f.domain_end() - end).abs() < 1e-15);
        // u = 0 maps to the far end, u = m to the origin
        assert!((f.inverse(0.0).unwrap() - end).abs() < 1e-14);
        assert_eq!(f.inverse(-0.7).unwrap(), 0.0);
    }
}

#[test]
fn cutoff_constants_do_not_depend_on_radius() {
    let measured: Vec<_> = [1.0, 2.0, 4.0]
        .iter()
        .map(|&r| {
            let grid = Grid::ball(1, &[0.0], r, r / 4000.0).unwrap();
            Cutoff::on_grid(&grid, 0.6, 5.0).unwrap().measure_bounds(&grid)
        })
        .collect();
    for b in &measured {
        assert!(b.gradient_constant.is_finite() && b.hessian_constant.is_finite());
        assert!(b.gradient_constant > 0.0 && b.hessian_constant > 0.0);
        let g0 = measured[0].gradient_constant;
        let h0 = measured[0].hessian_constant;
        assert!((b.gradient_constant / g0 - 1.0).abs() < 0.05);
        assert!((b.hessian_constant / h0 - 1.0).abs() < 0.05);
    }
}

#[test]
fn bochner_residual_converges_on_sine() {
    let hs = [0.04, 0.02, 0.01, 0.005];
    let res: Vec<f64> = hs
        .iter()
        .map(|&h| {
            let g = Grid::ball(1, &[0.0], 1.0, h).unwrap();
            bochner_residual(&g, &g.sample(0.0, |x| (2.0 * x[0]).sin()))
        })
        .collect();
    let slope = loglog_slope(&hs, &res).slope;
    assert!((slope - 2.0).abs() <= 0.2, "slope {slope:.3}");
    let g = Grid::ball(1, &[0.0], 1.0, 0.01).unwrap();
    assert_eq!(bochner_residual(&g, &g.zeros(0.0)), 0.0);
}

#[test]
fn zero_solution_gives_zero_z() {
    let params = ProblemParams::from_parts(1, (3, 1), (6, 5), 1.0).unwrap();
    let grid = Grid::ball(1, &[0.0], 2.0, 0.05).unwrap();
    let snaps = (0..12).map(|k| grid.zeros(k as f64 * 0.01)).collect();
    let traj = Trajectory::from_snapshots(grid.clone(), snaps, Termination::CompletedT).unwrap();
    let f = AuxiliaryFunction::for_params(&params, 1.0).unwrap();
    let cutoff = Cutoff::on_grid(&grid, 0.5, 4.0).unwrap();
    let (fields, rep) = operator_l_residual(&traj, &f, &cutoff, &params, 5, &LemmaOptions::default(), None).unwrap();
    assert!(fields.z.values.iter().all(|z| *z == 0.0));
    assert_eq!(rep.included, 0);
    assert!(rep.max_residual <= 0.0);
}

#[test]
fn gradient_coefficient_enters_through_absorption_and_cutoff_drift() {
    let p1 = ProblemParams::from_parts(1, (3, 1), (6, 5), 1.0).unwrap();
    let p0 = p1.with_m(0.0).unwrap();
    let grid = Grid::ball(1, &[0.0], 2.0, 0.02).unwrap();
    let cfg = SolverConfig::stable(&grid, 0.2, BoundaryCondition::DirichletZero, 0.9).with_stride(5);
    let traj = Solver::new(&grid, &p1, &cfg)
        .unwrap()
        .solve(InitialData::Paraboloid { amplitude: 0.0015 }.field(&grid))
        .unwrap();
    let sup = traj.snapshots()[0].max_over(&grid);
    let f = AuxiliaryFunction::for_params(&p1, sup).unwrap();
    let cutoff = Cutoff::on_grid(&grid, 0.5, 4.0).unwrap();
    let opts = LemmaOptions::default();
    let index = traj.len() / 2;
    let (with_m, _) = operator_l_residual(&traj, &f, &cutoff, &p1, index, &opts, None).unwrap();
    let (without, _) = operator_l_residual(&traj, &f, &cutoff, &p0, index, &opts, None).unwrap();
    let q = p1.q_f64();
    let mut compared = 0;
    for i in grid.nodes() {
        let (a, b) = (with_m.rhs.values[i], without.rhs.values[i]);
        let w = with_m.w.values[i];
        if a.is_nan() || b.is_nan() || w <= 0.0 {
            continue;
        }
        let v = with_m.v.values[i];
        let c = cutoff.eval(&grid.coords(i));
        let absorption = absorption_term(&f, &p1, v, w, c.eta);
        assert!(absorption < 0.0);
        // the drift M q (f′)^{q−1} w^{(q−2)/2} ∇v meets ∇η
        let grad_eta = c.grad[0].hypot(c.grad[1]);
        let drift = q * f.df(v).powf(q - 1.0) * grad_eta * w.powf((q + 1.0) / 2.0);
        let expected = absorption + drift;
        assert!((a - b - expected).abs() <= 1e-9 * (a.abs() + b.abs()), "node {i}");
        compared += 1;
    }
    assert!(compared > 50);
}

#[test]
fn identity_transform_negates() {
    let grid = Grid::ball(2, &[0.0, 0.0], 1.0, 0.125).unwrap();
    let u = grid.sample(0.0, |x| 1.0 + x[0] * x[1]);
    let v = transform(&grid, &u, &AuxiliaryFunction::Identity).unwrap();
    assert!(grid.nodes().all(|i| v.values[i] == -u.values[i]));
}
