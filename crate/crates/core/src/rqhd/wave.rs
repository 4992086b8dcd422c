//! Linear wave marching u″ − c²Δu = F by per-Fourier-mode variation of
//! constants: the homogeneous rotation is exact, the Duhamel integral is
//! quadrated by the trapezoid rule (second order). The k = 0 mode integrates
//! û″ = F̂₀ by nested trapezoids.

use crate::error::{Error, Result};
use crate::spectral::RealField;
use crate::trajectory::Trajectory;
use rustfft::num_complex::Complex64;

/// Solution samples (u, u′) on the forcing's time grid.
pub fn linear_wave_solve(
    u0: &RealField,
    u1: &RealField,
    forcing: &Trajectory<RealField>,
) -> Result<Trajectory<(RealField, RealField)>> {
    linear_wave_solve_with_speed(u0, u1, forcing, 1.0)
}

/// Same propagator with wave speed `c` (the ψ/Ψ equations run at c = 1/υ).
pub fn linear_wave_solve_with_speed(
    u0: &RealField,
    u1: &RealField,
    forcing: &Trajectory<RealField>,
    speed: f64,
) -> Result<Trajectory<(RealField, RealField)>> {
    let grid = u0.grid().clone();
    grid.check_same(u1.grid(), "u0 vs u1")?;
    for f in forcing.iter() {
        grid.check_same(f.grid(), "forcing vs data")?;
    }
    if !(speed > 0.0) || !speed.is_finite() {
        return Err(Error::validation("wave speed", "must be positive and finite"));
    }
    let dt = forcing.dt();
    let steps = forcing.steps();
    let len = grid.len();

    // per-mode angular frequency and one-step rotation
    let mut omega = vec![0.0f64; len];
    grid.for_each_mode(|flat, k| {
        let k2: f64 = k.iter().map(|v| v * v).sum();
        omega[flat] = speed * k2.sqrt();
    });
    let cos_dt: Vec<f64> = omega.iter().map(|w| (w * dt).cos()).collect();
    let sin_dt: Vec<f64> = omega.iter().map(|w| (w * dt).sin()).collect();
    // sin(ω dt)/ω with the dt limit at ω = 0
    let sinc_dt: Vec<f64> =
        omega.iter().zip(&sin_dt).map(|(&w, &s)| if w > 0.0 { s / w } else { dt }).collect();

    let forcing_modes: Vec<Vec<Complex64>> = forcing.iter().map(RealField::to_modes).collect();
    let mut u = u0.to_modes();
    let mut ut = u1.to_modes();

    let mut out = Vec::with_capacity(steps + 1);
    out.push((u0.clone(), u1.clone()));
    for i in 0..steps {
        let fi = &forcing_modes[i];
        let fj = &forcing_modes[i + 1];
        let mut u_next = vec![Complex64::default(); len];
        let mut ut_next = vec![Complex64::default(); len];
        for m in 0..len {
            if omega[m] > 0.0 {
                u_next[m] = u[m] * cos_dt[m] + ut[m] * sinc_dt[m] + fi[m] * (0.5 * dt * sinc_dt[m]);
                ut_next[m] = -u[m] * (omega[m] * sin_dt[m])
                    + ut[m] * cos_dt[m]
                    + (fi[m] * cos_dt[m] + fj[m]) * (0.5 * dt);
            } else {
                ut_next[m] = ut[m] + (fi[m] + fj[m]) * (0.5 * dt);
                u_next[m] = u[m] + (ut[m] + ut_next[m]) * (0.5 * dt);
            }
        }
        u = u_next;
        ut = ut_next;
        out.push((
            RealField::from_modes(&grid, u.clone()),
            RealField::from_modes(&grid, ut.clone()),
        ));
    }
    Trajectory::new(dt, out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::SpectralGrid;

    #[test]
    fn homogeneous_standing_wave_is_exact() {
        let grid = SpectralGrid::unit(&[32]).unwrap();
        let u0 = RealField::from_fn(&grid, |x| x[0].sin());
        let u1 = RealField::zeros(&grid);
        let dt = 0.05;
        let steps = 40;
        let zero = RealField::zeros(&grid);
        let forcing = Trajectory::new(dt, vec![zero; steps + 1]).unwrap();
        let sol = linear_wave_solve(&u0, &u1, &forcing).unwrap();
        for i in 0..=steps {
            let t = dt * i as f64;
            let expect = RealField::from_fn(&grid, |x| t.cos() * x[0].sin());
            let (u, _) = sol.state(i);
            assert!(u.sub(&expect).max_abs() < 1e-13, "node {i}");
        }
    }

    #[test]
    fn constant_forcing_drives_zero_mode_quadratically() {
        let grid = SpectralGrid::unit(&[16]).unwrap();
        let c0 = 0.7;
        let dt = 0.01;
        let steps = 100;
        let f = RealField::constant(&grid, c0);
        let forcing = Trajectory::new(dt, vec![f; steps + 1]).unwrap();
        let z = RealField::zeros(&grid);
        let sol = linear_wave_solve(&z, &z, &forcing).unwrap();
        let t = dt * steps as f64;
        let mean = sol.last().0.mean();
        assert!((mean - 0.5 * c0 * t * t).abs() < 1e-12, "mean {mean}");
    }

    #[test]
    fn zero_data_zero_forcing_stays_zero() {
        let grid = SpectralGrid::unit(&[16]).unwrap();
        let z = RealField::zeros(&grid);
        let forcing = Trajectory::new(0.1, vec![z.clone(); 5]).unwrap();
        let sol = linear_wave_solve(&z, &z, &forcing).unwrap();
        assert!(sol.last().0.max_abs() == 0.0);
        assert!(sol.last().1.max_abs() == 0.0);
    }

    #[test]
    fn speed_rescales_the_dispersion() {
        let grid = SpectralGrid::unit(&[32]).unwrap();
        let u0 = RealField::from_fn(&grid, |x| (2.0 * x[0]).cos());
        let u1 = RealField::zeros(&grid);
        let dt = 0.01;
        let steps = 50;
        let zero = RealField::zeros(&grid);
        let forcing = Trajectory::new(dt, vec![zero; steps + 1]).unwrap();
        let c = 2.5;
        let sol = linear_wave_solve_with_speed(&u0, &u1, &forcing, c).unwrap();
        let t = dt * steps as f64;
        let expect = RealField::from_fn(&grid, |x| (c * 2.0 * t).cos() * (2.0 * x[0]).cos());
        assert!(sol.last().0.sub(&expect).max_abs() < 1e-12);
    }

    #[test]
    fn oscillatory_forcing_converges_second_order() {
        // u'' + u = sin(2t) on the k=1 mode; compare against the closed form
        let grid = SpectralGrid::unit(&[16]).unwrap();
        let err_at = |dt: f64| {
            let steps = (2.0 / dt).round() as usize;
            let states: Vec<RealField> = (0..=steps)
                .map(|i| {
                    let t = dt * i as f64;
                    RealField::from_fn(&grid, move |x| (2.0 * t).sin() * x[0].sin())
                })
                .collect();
            let forcing = Trajectory::new(dt, states).unwrap();
            let z = RealField::zeros(&grid);
            let sol = linear_wave_solve(&z, &z, &forcing).unwrap();
            let t = dt * steps as f64;
            // particular + homogeneous: u = (2 sin t - sin 2t)/3
            let expect =
                RealField::from_fn(&grid, |x| (2.0 * t.sin() - (2.0 * t).sin()) / 3.0 * x[0].sin());
            sol.last().0.sub(&expect).max_abs()
        };
        let e1 = err_at(0.02);
        let e2 = err_at(0.01);
        let ratio = e1 / e2;
        assert!((3.3..4.7).contains(&ratio), "ratio {ratio} ({e1:.2e}/{e2:.2e})");
    }
}
