//! Desk-scale 2-d smoke runs exercising the dimension-generic paths of both
//! solvers and their equivalence.

use rqhd_lab::kg::{kg_solve, plane_wave, stable_dt_bound, Branch, Params};
use rqhd_lab::limits::kg_picard_discrepancy;
use rqhd_lab::madelung::{kg_to_hydro, Phase};
use rqhd_lab::rqhd::{picard_solve, PicardOptions, ReformInit};
use rqhd_lab::spectral::{RealField, SpectralGrid};

#[test]
fn kg_2d_diagonal_plane_wave_is_exact() {
    let grid = SpectralGrid::unit(&[32, 32]).unwrap();
    let params = Params::new(1.0, 1.0, 0.01, 0.01).unwrap();
    let state = plane_wave(&grid, &[1, 1], 0.1, &params, Branch::Plus).unwrap();
    let kmag = 2.0f64.sqrt();
    let omega = rqhd_lab::kg::dispersion_omega(kmag, &params, Branch::Plus).unwrap();
    let dt = stable_dt_bound(&grid, &params).unwrap();
    let steps = 40;
    let run = kg_solve(&state, &params, dt * steps as f64, dt).unwrap();
    let t = dt * steps as f64;
    let expect = state
        .phi
        .scale(rustfft::num_complex::Complex64::from_polar(1.0, -omega * t));
    let err = run.trajectory.last().phi.sub(&expect).l2_norm() / expect.l2_norm();
    assert!(err < 1e-8, "2d plane-wave error {err}");

    // Madelung image has the diagonal lattice winding
    let h = kg_to_hydro(run.trajectory.last(), &params).unwrap();
    assert_eq!(h.winding, vec![1, 1]);
}

#[test]
fn picard_2d_matches_the_kg_oracle() {
    let grid = SpectralGrid::unit(&[32, 32]).unwrap();
    let params = Params::new(1.0, 1.0, 1.0, 1.0).unwrap();
    let n0 = RealField::from_fn(&grid, |x| 1.0 + 0.01 * x[0].sin() + 0.005 * (x[1]).cos());
    let z = RealField::zeros(&grid);
    let init = ReformInit::from_hydro(&n0, &z, &Phase::flat(z.clone()), &z, &params).unwrap();
    let opts = PicardOptions { tol: 1e-11, max_iter: 60, ..PicardOptions::default() };

    let (_, report, estimates) = picard_solve(&init, &params, 0.05, 2.5e-3, &opts).unwrap();
    assert!(report.converged);
    assert!(estimates.t_star > 0.0 && estimates.t_star <= 1.0);

    let run = kg_picard_discrepancy(&init, &params, 0.05, 2.5e-3, &opts).unwrap();
    assert!(
        run.discrepancy < 1e-6,
        "2d picard-vs-kg distance {}",
        run.discrepancy
    );
}
