//! Right-hand sides of the iteration's two wave equations and one Poisson
//! equation, assembled per time slice from the previous iterate.
//!
//! With n = (Ψ+√n̄)² the sources read, for general ε > 0 and υ > 0,
//!
//!   f = [ ∂_t n · (1 − υ² ψ′) + ∇n · ∇ψ ] / (υ² n)
//!   g = (Ψ+√n̄) · [ υ² (ψ′)² − 2ψ′ − |∇ψ|² − 2Φ ] / (ε² υ²)
//!   h = n − b₀
//!
//! driving ψ″ − (1/υ²)Δψ = f, Ψ″ − (1/υ²)ΔΨ = g, ΔΦ = h. At ε = υ = 1 these
//! coincide with the unit-speed forms whose right-hand sides carry
//! [−ψ′(n)′ + (n)′ + ∇n·∇ψ]/n and ((ψ′)² − 2ψ′ − |∇ψ|² − 2Φ)(Ψ+√n̄).
//! The time derivative ∂_t n = 2(Ψ+√n̄)Ψ′ comes from the stored jets, so no
//! finite differencing enters the assembly.

use super::reform::ReformState;
use crate::error::{Error, Result};
use crate::kg::Params;
use crate::spectral::RealField;
use crate::trajectory::Trajectory;

#[derive(Clone, Debug)]
pub struct SourceTriple {
    /// f_p, forcing of the phase wave equation.
    pub phase: Trajectory<RealField>,
    /// g_p, forcing of the amplitude wave equation.
    pub amplitude: Trajectory<RealField>,
    /// h_p, right-hand side of the Poisson equation.
    pub potential_rhs: Trajectory<RealField>,
}

/// Assemble (f_p, g_p, h_p) on the iterate's time grid. Nonlinear products
/// are dealiased by the 2/3 rule; so are the assembled sources.
pub fn assemble_sources(u: &Trajectory<ReformState>, params: &Params) -> Result<SourceTriple> {
    params.require_positive_epsilon()?;
    params.require_positive_upsilon()?;
    let b0 = params.background.constant_value().ok_or_else(|| {
        Error::Precondition("the iteration supports only a constant background b0".into())
    })?;
    let mut fs = Vec::with_capacity(u.len());
    let mut gs = Vec::with_capacity(u.len());
    let mut hs = Vec::with_capacity(u.len());
    for state in u.iter() {
        state.check_division_scale(params)?;
        let (f, g, h) = slice_sources(state, params, b0);
        fs.push(f);
        gs.push(g);
        hs.push(h);
    }
    Ok(SourceTriple {
        phase: Trajectory::new(u.dt(), fs)?,
        amplitude: Trajectory::new(u.dt(), gs)?,
        potential_rhs: Trajectory::new(u.dt(), hs)?,
    })
}

/// Sources at a single slice; usable directly on initial data for the
/// cross-path check at t = 0.
pub fn slice_sources(
    state: &ReformState,
    params: &Params,
    b0: f64,
) -> (RealField, RealField, RealField) {
    let eps = params.epsilon;
    let ups = params.upsilon;
    let ups2 = ups * ups;
    let root = params.nbar.sqrt();

    let big_r = state.sqrt_dev.add_scalar(root);
    let n = big_r.mul(&big_r);
    let n_t = big_r.mul(&state.sqrt_dev_t).scale(2.0);

    // f = [ n_t (1 − υ² ψ') + ∇n·∇ψ ] / (υ² n)
    let damp = state.phase_t.map(|v| 1.0 - ups2 * v);
    let advect = n.gradient().dot(&state.phase.gradient()).dealias();
    let f = n_t
        .mul(&damp)
        .dealias()
        .add(&advect)
        .zip(&n, |num, den| num / den)
        .scale(1.0 / ups2)
        .dealias();

    // g = R [ υ²(ψ')² − 2ψ' − |∇ψ|² − 2Φ ] / (ε²υ²)
    let psi_t_sq = state.phase_t.mul(&state.phase_t).dealias();
    let grad_psi = state.phase.gradient();
    let grad_sq = grad_psi.dot(&grad_psi).dealias();
    let bracket = psi_t_sq
        .scale(ups2)
        .sub(&state.phase_t.scale(2.0))
        .sub(&grad_sq)
        .sub(&state.potential.scale(2.0));
    let g = big_r.mul(&bracket).scale(1.0 / (eps * eps * ups2)).dealias();

    let h = n.add_scalar(-b0);
    (f, g, h)
}
