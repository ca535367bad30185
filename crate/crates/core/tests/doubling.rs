use gradheat::doubling::{
    find_doubling_point, grid_instance, m_at, m_field, parabolic_distance, random_instance, rescaling_frame, Metric,
    ParabolicPoint,
};
use gradheat::grid::{BoundaryCondition, Grid, InitialData, Solver, SolverConfig, Termination, Trajectory};
use gradheat::ProblemParams;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn params() -> ProblemParams {
    ProblemParams::from_parts(1, (3, 1), (3, 2), 1.0).unwrap()
}

fn run() -> Trajectory {
    let grid = Grid::ball(1, &[0.0], 2.0, 0.05).unwrap();
    let cfg = SolverConfig::stable(&grid, 0.5, BoundaryCondition::DirichletZero, 0.9).with_stride(10);
    Solver::new(&grid, &params(), &cfg)
        .unwrap()
        .solve(InitialData::Gaussian { amplitude: 0.5, width: 0.5 }.field(&grid))
        .unwrap()
}

#[test]
fn triangle_inequality_on_random_triples() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let point = |rng: &mut ChaCha8Rng| {
        ParabolicPoint::new(vec![rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0)], rng.gen_range(0.0..10.0))
    };
    for _ in 0..10_000 {
        let (a, b, c) = (point(&mut rng), point(&mut rng), point(&mut rng));
        let direct = parabolic_distance(&a, &c);
        let via = parabolic_distance(&a, &b) + parabolic_distance(&b, &c);
        assert!(direct <= via * (1.0 + 1e-14), "{a:?} {b:?} {c:?}");
    }
}

#[test]
fn every_hop_more_than_doubles() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut walked = 0;
    for _ in 0..200 {
        let n = rng.gen_range(2..=60);
        let k = rng.gen_range(0.05..2.0);
        let inst = random_instance(&mut rng, n, 2, 0.2, k, Metric::Parabolic);
        for start in inst.admissible_starts() {
            let r = find_doubling_point(&inst, start).unwrap();
            for w in r.path.windows(2) {
                let (a, b) = (inst.m[w[0]].unwrap(), inst.m[w[1]].unwrap());
                assert!(b > 2.0 * a);
            }
            assert!(r.hops <= r.hop_bound);
            walked += r.hops;
        }
    }
    assert!(walked > 0);
}

#[test]
fn m_at_nodes_matches_nodal_values() {
    let traj = run();
    let grid = traj.grid();
    let j = traj.len() / 2;
    let snap = &traj.snapshots()[j];
    let nodal = m_field(grid, snap, 3.0);
    for i in grid.nodes().filter(|&i| grid.dist_to_boundary(i) > 0.2).step_by(7) {
        let x = grid.coords(i)[..1].to_vec();
        let interp = m_at(&traj, &params(), &ParabolicPoint::new(x, snap.t)).unwrap();
        assert!((interp - nodal[i]).abs() <= 1e-12 * nodal[i].max(1.0), "node {i}");
    }
}

#[test]
fn unit_frame_on_constant_one() {
    let grid = Grid::ball(1, &[0.0], 2.0, 0.05).unwrap();
    let snaps = (0..=20).map(|k| grid.sample(k as f64 * 0.1, |_| 1.0)).collect();
    let traj = Trajectory::from_snapshots(grid, snaps, Termination::CompletedT).unwrap();
    let frame = rescaling_frame(&traj, &params(), &ParabolicPoint::new(vec![0.3], 1.0), 1.0, 0.5).unwrap();
    assert_eq!(frame.normalization, 1.0);
    assert!(frame.values.iter().all(|(_, _, v)| *v == 1.0));
}

#[test]
fn frame_at_a_doubling_point_is_normalised() {
    let traj = run();
    let k = 0.1;
    let inst = grid_instance(&traj, &params(), k, 1, Metric::Parabolic).unwrap();
    let starts = inst.admissible_starts();
    assert!(!starts.is_empty());
    let mut checked = 0;
    for &start in starts.iter().step_by(starts.len() / 10 + 1) {
        let r = find_doubling_point(&inst, start).unwrap();
        let frame = rescaling_frame(&traj, &params(), &r.point, 1.0 / r.m, k).unwrap();
        assert!((frame.normalization - 1.0).abs() <= 0.05, "normalization {}", frame.normalization);
        assert!(frame.max_m <= 2.0 + 1e-12, "max M {}", frame.max_m);
        assert!(frame.samples > 0);
        checked += 1;
    }
    assert!(checked >= 5);
}
