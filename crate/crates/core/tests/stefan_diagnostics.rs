//! Positivity spread and initial continuity measured on similarity runs
//! resampled to a fixed physical grid.

use stefan_core::stefan1d::{similarity_oracle, StefanSpec1D};
use stefan_core::verify::{continuity_violation, delta_of_t, initial_continuity_metric};
use stefan_core::{solve_stefan, CellMask, Grid};

#[test]
fn delta_tracks_the_front_advance() {
    let mut spec = StefanSpec1D::similarity(1.0, 0.25, 1.0, 100);
    spec.snapshots = 20;
    let run = solve_stefan(&spec).unwrap();
    let sim = similarity_oracle(1.0).unwrap();
    let grid = Grid::cells(&[0.0], &[1.5], &[300]).unwrap();
    let h = grid.spacing(0);
    let traj = run.physical_trajectory(&grid).unwrap();
    let b = sim.front(0.25);
    let g0 = CellMask::from_fn(&grid, |p| p[0] < b);
    let deltas = delta_of_t(&traj, &g0, &traj.times()).unwrap();
    assert!(deltas[0].1 <= h);
    for w in deltas.windows(2) {
        assert!(w[1].1 >= w[0].1, "delta decreased: {w:?}");
    }
    for (t, d) in deltas {
        let expect = (sim.front(t) - b).max(0.0);
        assert!((d - expect).abs() <= 1.5 * h, "t = {t}: delta {d}, front advance {expect}");
    }
}

#[test]
fn continuity_metric_vanishes_toward_the_start() {
    let mut spec = StefanSpec1D::similarity(1.0, 0.25, 0.3, 200);
    spec.snapshots = 50;
    let run = solve_stefan(&spec).unwrap();
    let sim = similarity_oracle(1.0).unwrap();
    let grid = Grid::cells(&[0.0], &[1.0], &[400]).unwrap();
    let traj = run.physical_trajectory(&grid).unwrap();
    let b = sim.front(0.25);
    let outside = CellMask::from_fn(&grid, |p| p[0] > b);
    // compatible initial heat: the solution does not change off the initial liquid region
    let m = initial_continuity_metric(&traj, &vec![0.0; grid.len()], &outside).unwrap();
    let scale = m.iter().fold(0.0f64, |a, (_, v)| a.max(*v));
    assert!(scale > 0.0);
    let slack = 10.0 * (grid.spacing(0).powi(2) + traj.dt()) * scale;
    assert!(continuity_violation(&m, slack) == 0.0, "{m:?}");
    assert!(m[0].1 < m[m.len() - 1].1);
}
