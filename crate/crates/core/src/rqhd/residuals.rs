//! Pointwise residuals of the hydrodynamic system on a stored trajectory,
//! the two algebraic forms of the quantum and relativistic terms, and the
//! conserved charge.
//!
//! Time derivatives use second-order centered differences (one-sided at the
//! trajectory endpoints); spatial derivatives are spectral and nonlinear
//! products are dealiased.

use crate::error::{Error, Result};
use crate::kg::Params;
use crate::madelung::HydroState;
use crate::spectral::{RealField, VectorField};
use crate::trajectory::Trajectory;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QuantumForm {
    /// (ε²/2) n ∇(Δ√n / √n)
    Potential,
    /// (ε²/4) div( n (∇⊗∇) log n )
    Tensor,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RelativisticForm {
    /// (ε²υ²/2) n ∇(∂_tt √n / √n)
    Potential,
    /// (ε²υ²/4) ∂_t( n ∇ ∂_t log n )
    Flux,
}

fn check_index(traj: &Trajectory<HydroState>, index: usize) -> Result<()> {
    let last = traj.len() - 1;
    if index == 0 || index >= last {
        return Err(Error::Index { index, last });
    }
    Ok(())
}

fn check_vacuum(n: &RealField, params: &Params) -> Result<()> {
    let min_n = n.min();
    if min_n < params.n_floor {
        return Err(Error::Vacuum { min_density: min_n, floor: params.n_floor });
    }
    Ok(())
}

/// Centered time derivative of `field(i)` at node `index`; one-sided
/// second-order stencils at the ends.
fn ddt<T>(states: &[T], index: usize, dt: f64, field: impl Fn(&T) -> RealField) -> RealField {
    let last = states.len() - 1;
    if index == 0 {
        field(&states[0])
            .scale(-3.0)
            .add(&field(&states[1]).scale(4.0))
            .sub(&field(&states[2]))
            .scale(1.0 / (2.0 * dt))
    } else if index == last {
        field(&states[last])
            .scale(3.0)
            .sub(&field(&states[last - 1]).scale(4.0))
            .add(&field(&states[last - 2]))
            .scale(1.0 / (2.0 * dt))
    } else {
        field(&states[index + 1])
            .sub(&field(&states[index - 1]))
            .scale(1.0 / (2.0 * dt))
    }
}

/// ∂_t n + div(n ∇S) − υ² ∂_t(n S_t) at the given interior node.
pub fn residual_continuity(
    traj: &Trajectory<HydroState>,
    index: usize,
    params: &Params,
) -> Result<RealField> {
    check_index(traj, index)?;
    let states = traj.states();
    for s in [&states[index - 1], &states[index], &states[index + 1]] {
        check_vacuum(&s.n, params)?;
    }
    let dt = traj.dt();
    let here = &states[index];
    let n_t = ddt(states, index, dt, |s| s.n.clone());
    let flux = here.grad_s.mul_field(&here.n).dealias().divergence();
    let relativistic = ddt(states, index, dt, |s| s.n.mul(&s.s_t).dealias());
    Ok(n_t
        .add(&flux)
        .sub(&relativistic.scale(params.upsilon * params.upsilon)))
}

/// Momentum residual: ∂_t(n∇S) + div(n∇S⊗∇S) − quantum + n∇V − relativistic.
pub fn residual_momentum(
    traj: &Trajectory<HydroState>,
    index: usize,
    params: &Params,
) -> Result<VectorField> {
    check_index(traj, index)?;
    let states = traj.states();
    for s in [&states[index - 1], &states[index], &states[index + 1]] {
        check_vacuum(&s.n, params)?;
    }
    let dt = traj.dt();
    let here = &states[index];
    let dim = here.grid().dim();
    let ups2 = params.upsilon * params.upsilon;

    let quantum = quantum_stress_divergence(&here.n, params, QuantumForm::Potential)?;
    let grad_v = here.v.gradient();
    let relativistic = relativistic_term(traj, index, params, RelativisticForm::Flux)?;

    let mut comps = Vec::with_capacity(dim);
    for a in 0..dim {
        // ∂_t (n ∂_a S)
        let momentum_t = ddt(states, index, dt, |s| {
            s.n.mul(s.grad_s.component(a)).dealias()
        });
        // Σ_b ∂_b ( n ∂_a S ∂_b S )
        let mut tensor_div = RealField::zeros(here.grid());
        for b in 0..dim {
            let t_ab = here
                .n
                .mul(here.grad_s.component(a))
                .dealias()
                .mul(here.grad_s.component(b))
                .dealias();
            tensor_div = tensor_div.add(&t_ab.derivative(b));
        }
        // 2 ∂_t ( S_t ∂_a S n )
        let transport_t = ddt(states, index, dt, |s| {
            s.s_t.mul(s.grad_s.component(a)).dealias().mul(&s.n).dealias()
        })
        .scale(2.0);

        let comp = momentum_t
            .add(&tensor_div)
            .sub(quantum.component(a))
            .add(&grad_v.component(a).mul(&here.n).dealias())
            .sub(&transport_t.scale(0.5 * ups2))
            .add(relativistic.component(a));
        comps.push(comp);
    }
    VectorField::from_components(comps)
}

/// Either side of the quantum-stress identity
/// (ε²/2) n ∇(Δ√n/√n) = (ε²/4) div(n (∇⊗∇) log n).
pub fn quantum_stress_divergence(
    n: &RealField,
    params: &Params,
    form: QuantumForm,
) -> Result<VectorField> {
    check_vacuum(n, params)?;
    let eps2 = params.epsilon * params.epsilon;
    let grid = n.grid().clone();
    match form {
        QuantumForm::Potential => {
            let root = n.map(f64::sqrt);
            let bohm = root.laplacian().zip(&root, |a, b| a / b).dealias();
            Ok(bohm.gradient().mul_field(n).scale(0.5 * eps2))
        }
        QuantumForm::Tensor => {
            let log_n = n.map(f64::ln);
            let grad_log = log_n.gradient();
            let dim = grid.dim();
            let mut comps = Vec::with_capacity(dim);
            for a in 0..dim {
                let mut div = RealField::zeros(&grid);
                for b in 0..dim {
                    let hess_ab = grad_log.component(a).derivative(b);
                    div = div.add(&n.mul(&hess_ab).dealias().derivative(b));
                }
                comps.push(div.scale(0.25 * eps2));
            }
            VectorField::from_components(comps)
        }
    }
}

/// Either side of the relativistic-term identity
/// (ε²υ²/2) n ∇(∂_tt√n/√n) = (ε²υ²/4) ∂_t(n ∇ ∂_t log n).
pub fn relativistic_term(
    traj: &Trajectory<HydroState>,
    index: usize,
    params: &Params,
    form: RelativisticForm,
) -> Result<VectorField> {
    check_index(traj, index)?;
    let states = traj.states();
    for s in [&states[index - 1], &states[index], &states[index + 1]] {
        check_vacuum(&s.n, params)?;
    }
    let dt = traj.dt();
    let here = &states[index];
    let pref = 0.25 * params.epsilon * params.epsilon * params.upsilon * params.upsilon;
    if pref == 0.0 {
        return Ok(VectorField::zeros(here.grid()));
    }
    match form {
        RelativisticForm::Potential => {
            let root = |s: &HydroState| s.n.map(f64::sqrt);
            let r_tt = root(&states[index + 1])
                .add(&root(&states[index - 1]))
                .sub(&root(here).scale(2.0))
                .scale(1.0 / (dt * dt));
            let ratio = r_tt.zip(&root(here), |a, b| a / b).dealias();
            Ok(ratio.gradient().mul_field(&here.n).scale(2.0 * pref))
        }
        RelativisticForm::Flux => {
            // flux(i) = n ∇(∂_t log n) at node i, inner derivative centered
            let flux_at = |i: usize| -> VectorField {
                let dlog = ddt(states, i, dt, |s| s.n.map(f64::ln));
                dlog.gradient().mul_field(&states[i].n).dealias()
            };
            let outer = flux_at(index + 1)
                .sub(&flux_at(index - 1))
                .scale(1.0 / (2.0 * dt));
            Ok(outer.scale(pref))
        }
    }
}

/// Q = ∫ (n − υ² n S_t) dx by the spectral (mean × volume) quadrature.
pub fn conserved_charge(state: &HydroState, params: &Params) -> f64 {
    let ups2 = params.upsilon * params.upsilon;
    let integrand = state.n.zip(&state.s_t, |n, st| n - ups2 * n * st);
    integrand.integral()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kg::{kg_solve, plane_wave, stable_dt_bound, Branch, Params};
    use crate::madelung::kg_to_hydro;
    use crate::spectral::{solve_poisson_projected, SpectralGrid, TWO_PI};
    use std::sync::Arc;

    fn steady_traj(g: &Arc<SpectralGrid>, nodes: usize) -> Trajectory<HydroState> {
        let n = RealField::constant(g, 1.0);
        let state = HydroState {
            n: n.clone(),
            n_t: RealField::zeros(g),
            s_periodic: RealField::zeros(g),
            winding: vec![0; g.dim()],
            grad_s: VectorField::zeros(g),
            s_t: RealField::zeros(g),
            v: RealField::zeros(g),
            time: 0.0,
        };
        Trajectory::new(0.01, vec![state; nodes]).unwrap()
    }

    #[test]
    fn steady_state_residuals_vanish()
    {
        let g = SpectralGrid::unit(&[32]).unwrap();
        let p = Params::new(1.0, 1.0, 1.0, 1.0).unwrap();
        let traj = steady_traj(&g, 5);
        assert!(residual_continuity(&traj, 2, &p).unwrap().max_abs() <= 1e-12);
        assert!(residual_momentum(&traj, 2, &p).unwrap().max_abs() <= 1e-12);
    }

    #[test]
    fn endpoint_indices_are_rejected() {
        let g = SpectralGrid::unit(&[32]).unwrap();
        let p = Params::new(1.0, 1.0, 1.0, 1.0).unwrap();
        let traj = steady_traj(&g, 5);
        assert!(matches!(residual_continuity(&traj, 0, &p), Err(Error::Index { .. })));
        assert!(matches!(residual_continuity(&traj, 4, &p), Err(Error::Index { .. })));
    }

    fn plane_wave_hydro(
        g: &Arc<SpectralGrid>,
        p: &Params,
        nodes: usize,
        dt: f64,
    ) -> Trajectory<HydroState> {
        // n = A², ∇S = ε k e1, S_t = −εω: all residual terms are constant
        let omega = crate::kg::dispersion_omega(1.0, p, Branch::Plus).unwrap();
        let states: Vec<HydroState> = (0..nodes)
            .map(|i| HydroState {
                n: RealField::constant(g, 1.0),
                n_t: RealField::zeros(g),
                s_periodic: RealField::zeros(g),
                winding: vec![1],
                grad_s: VectorField::constant(g, &[p.epsilon]),
                s_t: RealField::constant(g, -p.epsilon * omega),
                v: RealField::zeros(g),
                time: i as f64 * dt,
            })
            .collect();
        Trajectory::new(dt, states).unwrap()
    }

    #[test]
    fn plane_wave_residuals_are_round_off() {
        let g = SpectralGrid::unit(&[32]).unwrap();
        let p = Params::new(1.0, 1.0, 1.0, 1.0).unwrap();
        let traj = plane_wave_hydro(&g, &p, 5, 0.01);
        assert!(residual_continuity(&traj, 2, &p).unwrap().max_abs() <= 1e-11);
        assert!(residual_momentum(&traj, 2, &p).unwrap().max_abs() <= 1e-11);
    }

    fn kg_madelung_traj(dt: f64, p: &Params) -> Trajectory<HydroState> {
        let g = SpectralGrid::unit(&[64]).unwrap();
        let n0 = RealField::from_fn(&g, |x| 1.0 + 0.02 * x[0].sin());
        let phi0 = n0.map(f64::sqrt).to_complex();
        let init = crate::kg::KGState::new(phi0, crate::spectral::ComplexField::zeros(&g), 0.0)
            .unwrap();
        let run = kg_solve(&init, p, 0.04, dt).unwrap();
        run.trajectory.try_map(|s| kg_to_hydro(s, p)).unwrap()
    }

    #[test]
    fn kg_image_residuals_decay_second_order() {
        let p = Params::new(1.0, 1.0, 1.0, 1.0).unwrap();
        let res_at = |dt: f64| {
            let traj = kg_madelung_traj(dt, &p);
            let mid = traj.len() / 2;
            let rc = residual_continuity(&traj, mid, &p).unwrap().l2_norm();
            let rm = residual_momentum(&traj, mid, &p).unwrap().l2_norm();
            (rc, rm)
        };
        let (c1, m1) = res_at(0.004);
        let (c2, m2) = res_at(0.002);
        let rc = c1 / c2;
        let rm = m1 / m2;
        assert!((3.5..4.5).contains(&rc), "continuity ratio {rc} ({c1:.2e}/{c2:.2e})");
        assert!((3.5..4.5).contains(&rm), "momentum ratio {rm} ({m1:.2e}/{m2:.2e})");
    }

    #[test]
    fn quantum_stress_forms_agree() {
        let p = Params::new(1.0, 1.0, 1.0, 1.0).unwrap();
        let g = SpectralGrid::unit(&[64]).unwrap();
        let n_const = RealField::constant(&g, 2.0);
        assert!(quantum_stress_divergence(&n_const, &p, QuantumForm::Potential)
            .unwrap()
            .max_abs()
            < 1e-12);
        assert!(quantum_stress_divergence(&n_const, &p, QuantumForm::Tensor)
            .unwrap()
            .max_abs()
            < 1e-12);

        let n1 = RealField::from_fn(&g, |x| 1.0 + 0.1 * x[0].sin());
        let a = quantum_stress_divergence(&n1, &p, QuantumForm::Potential).unwrap();
        let b = quantum_stress_divergence(&n1, &p, QuantumForm::Tensor).unwrap();
        let rel = a.sub(&b).max_abs() / a.max_abs();
        assert!(rel <= 1e-8, "1d agreement {rel}");

        let nfun = |x: &[f64]| 1.0 + 0.3 * x[0].sin() + 0.2 * (2.0 * x[1]).cos();
        let g2 = SpectralGrid::unit(&[128, 128]).unwrap();
        let n2 = RealField::from_fn(&g2, nfun);
        let a = quantum_stress_divergence(&n2, &p, QuantumForm::Potential).unwrap();
        let b = quantum_stress_divergence(&n2, &p, QuantumForm::Tensor).unwrap();
        let rel = a.sub(&b).max_abs() / a.max_abs();
        assert!(rel <= 1e-7, "2d agreement {rel}");

        // cross-check at doubled resolution: agreement does not degrade
        let g2f = SpectralGrid::unit(&[256, 256]).unwrap();
        let n2f = RealField::from_fn(&g2f, nfun);
        let af = quantum_stress_divergence(&n2f, &p, QuantumForm::Potential).unwrap();
        let bf = quantum_stress_divergence(&n2f, &p, QuantumForm::Tensor).unwrap();
        let rel_fine = af.sub(&bf).max_abs() / af.max_abs();
        assert!(rel_fine <= 1e-7, "2x-resolution agreement {rel_fine}");
    }

    fn analytic_density_traj(
        g: &Arc<SpectralGrid>,
        dt: f64,
        nodes: usize,
    ) -> Trajectory<HydroState> {
        let states: Vec<HydroState> = (0..nodes)
            .map(|i| {
                let t = dt * i as f64;
                let n = RealField::from_fn(g, move |x| 1.0 + 0.1 * x[0].sin() * t.cos());
                HydroState {
                    n: n.clone(),
                    n_t: RealField::zeros(g),
                    s_periodic: RealField::zeros(g),
                    winding: vec![0],
                    grad_s: VectorField::zeros(g),
                    s_t: RealField::zeros(g),
                    v: solve_poisson_projected(&n.add_scalar(-1.0)).potential,
                    time: t,
                }
            })
            .collect();
        Trajectory::new(dt, states).unwrap()
    }

    #[test]
    fn relativistic_forms_agree_at_second_order() {
        let g = SpectralGrid::unit(&[64]).unwrap();
        let p = Params::new(1.0, 1.0, 1.0, 1.0).unwrap();
        let agreement = |dt: f64| {
            let traj = analytic_density_traj(&g, dt, 7);
            let a = relativistic_term(&traj, 3, &p, RelativisticForm::Potential).unwrap();
            let b = relativistic_term(&traj, 3, &p, RelativisticForm::Flux).unwrap();
            a.sub(&b).max_abs()
        };
        let e1 = agreement(0.01);
        let e2 = agreement(0.005);
        let ratio = e1 / e2;
        assert!((3.5..4.5).contains(&ratio), "ratio {ratio} ({e1:.2e}/{e2:.2e})");
    }

    #[test]
    fn relativistic_term_switches_off() {
        let g = SpectralGrid::unit(&[32]).unwrap();
        let p0 = Params::new(1.0, 0.0, 1.0, 1.0).unwrap();
        let traj = analytic_density_traj(&g, 0.01, 5);
        let a = relativistic_term(&traj, 2, &p0, RelativisticForm::Potential).unwrap();
        let b = relativistic_term(&traj, 2, &p0, RelativisticForm::Flux).unwrap();
        assert!(a.max_abs() == 0.0);
        assert!(b.max_abs() == 0.0);

        // time-constant density: both forms vanish for any parameters
        let p = Params::new(1.0, 1.0, 1.0, 1.0).unwrap();
        let steady = steady_traj(&g, 5);
        assert!(relativistic_term(&steady, 2, &p, RelativisticForm::Potential)
            .unwrap()
            .max_abs()
            < 1e-12);
        assert!(relativistic_term(&steady, 2, &p, RelativisticForm::Flux)
            .unwrap()
            .max_abs()
            < 1e-12);
    }

    #[test]
    fn residual_switches_reproduce_limit_systems() {
        // υ = 0 removes exactly the relativistic correction, ε = 0 exactly
        // the quantum stress: switched residuals equal term subtraction
        let p = Params::new(1.0, 1.0, 1.0, 1.0).unwrap();
        let p_nr = Params::new(1.0, 0.0, 1.0, 1.0).unwrap();
        let p_sc = Params::new(0.0, 1.0, 1.0, 1.0).unwrap();
        let traj = kg_madelung_traj(0.004, &p);
        let mid = traj.len() / 2;

        let full = residual_continuity(&traj, mid, &p).unwrap();
        let nr = residual_continuity(&traj, mid, &p_nr).unwrap();
        let dt = traj.dt();
        let states = traj.states();
        let rel = ddt(states, mid, dt, |s| s.n.mul(&s.s_t).dealias());
        assert!(full.add(&rel).sub(&nr).max_abs() < 1e-13);

        let full_m = residual_momentum(&traj, mid, &p).unwrap();
        let sc_m = residual_momentum(&traj, mid, &p_sc).unwrap();
        let q = quantum_stress_divergence(&states[mid].n, &p, QuantumForm::Potential).unwrap();
        let r = relativistic_term(&traj, mid, &p, RelativisticForm::Flux).unwrap();
        // ε = 0 drops the quantum stress and the ε²-scaled relativistic flux
        let rebuilt = full_m.add(&q).sub(&r);
        assert!(rebuilt.sub(&sc_m).max_abs() < 1e-12);
    }

    #[test]
    fn charge_examples() {
        let g = SpectralGrid::unit(&[32]).unwrap();
        let p = Params::new(1.0, 1.0, 1.0, 1.0).unwrap();
        let steady = steady_traj(&g, 3);
        let q = conserved_charge(steady.state(0), &p);
        assert!((q - TWO_PI).abs() < 1e-13);

        let pw = plane_wave_hydro(&g, &p, 3, 0.01);
        let omega = 2.0f64.sqrt() - 1.0;
        let q = conserved_charge(pw.state(0), &p);
        assert!((q - TWO_PI * (1.0 + omega)).abs() < 1e-12);
    }

    #[test]
    fn charge_drift_along_kg_trajectory_is_small() {
        let g = SpectralGrid::unit(&[64]).unwrap();
        let p = Params::new(1.0, 1.0, 1.0, 1.0).unwrap();
        let pw = plane_wave(&g, &[1], 1.0, &p, Branch::Plus).unwrap();
        let dt = stable_dt_bound(&g, &p).unwrap() * 0.5;
        let steps = 50;
        let run = kg_solve(&pw, &p, dt * steps as f64, dt).unwrap();
        let hydro = run.trajectory.try_map(|s| kg_to_hydro(s, &p)).unwrap();
        let q0 = conserved_charge(hydro.state(0), &p);
        let q1 = conserved_charge(hydro.last(), &p);
        let drift = (q1 - q0).abs() / q0.abs() / hydro.horizon();
        assert!(drift <= 1e-8, "drift per unit time {drift}");
    }
}
