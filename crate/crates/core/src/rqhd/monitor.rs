//! Monitored well-posedness quantities: the constants a0, I0, M0, M1, T*
//! from the local-existence argument, the per-step Sobolev-norm table, and
//! the energy-inequality ratio for the amplitude wave equation.
//!
//! Generic constants N and C are configuration inputs; the monitor reports
//! ratios rather than asserting the analyst's inequalities.

use super::reform::{ReformInit, ReformState};
use super::sources::assemble_sources;
use crate::error::Result;
use crate::kg::Params;
use crate::spectral::RealField;
use crate::trajectory::Trajectory;
use serde::Serialize;
use std::io::Write;

#[derive(Clone, Copy, Debug, Serialize)]
pub struct NormRow {
    pub t: f64,
    pub psi_h4: f64,
    pub psit_h3: f64,
    pub psitt_h2: f64,
    pub dev_h4: f64,
    pub devt_h3: f64,
    pub devtt_h2: f64,
    pub phi_h4: f64,
    pub min_n: f64,
    pub charge: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct WellposednessEstimates {
    pub a0: f64,
    pub i0: f64,
    pub m0: f64,
    pub m1: f64,
    pub t_star: f64,
    pub delta: f64,
    /// sup-t (‖Ψ′‖ + ‖Ψ‖_{H¹}) over C·(‖Ψ1‖ + ‖Ψ0‖_{H¹} + ∫‖g‖dt).
    pub lemma5_ratio: f64,
    #[serde(skip)]
    pub norm_history: Vec<NormRow>,
}

/// a0 = (1 + max(Ψ0+√n̄))^m / min(Ψ0+√n̄)^m with m = 6.
pub fn amplitude_ratio_a0(dev0: &RealField, nbar: f64) -> f64 {
    let root = nbar.sqrt();
    let hi = dev0.max() + root;
    let lo = dev0.min() + root;
    ((1.0 + hi) / lo).powi(6)
}

/// I0 = ‖(Ψ0+√n̄)² − b0‖_{L²} + ‖ψ1‖_{H³} + ‖Ψ1‖_{H³} + ‖ψ0‖_{H⁴} + ‖Ψ0‖_{H⁴}.
pub fn initial_norm_i0(init: &ReformInit, params: &Params) -> Result<f64> {
    let b0 = params.background.mean();
    let root = params.nbar.sqrt();
    let h0 = init.sqrt_dev0.map(|d| {
        let r = d + root;
        r * r - b0
    });
    Ok(h0.l2_norm()
        + init.phase1.sobolev_norm(3)?
        + init.sqrt_dev1.sobolev_norm(3)?
        + init.phase0.sobolev_norm(4)?
        + init.sqrt_dev0.sobolev_norm(4)?)
}

/// T* = min{1, T, I0/(N·C·a0·M1(M0+M1)), I0/(C·N·(M0+M1+2I0²M1)³)};
/// ratio terms with vanishing denominators are skipped.
pub fn existence_time(
    i0: f64,
    a0: f64,
    m0: f64,
    m1: f64,
    n_const: f64,
    c_const: f64,
    horizon: f64,
) -> f64 {
    let mut t = 1.0f64.min(horizon);
    let d1 = n_const * c_const * a0 * m1 * (m0 + m1);
    if d1 > 0.0 {
        t = t.min(i0 / d1);
    }
    let d2 = c_const * n_const * (m0 + m1 + 2.0 * i0 * i0 * m1).powi(3);
    if d2 > 0.0 {
        t = t.min(i0 / d2);
    }
    t
}

/// Energy-inequality ratio for a wave-equation run: LHS is the sup over time
/// of ‖u′‖_{L²} + ‖u‖_{H¹}, RHS is C·(‖u1‖_{L²} + ‖u0‖_{H¹} + ∫₀ᵀ‖F‖_{L²} dt).
pub fn energy_inequality_ratio(
    nodes: &[(RealField, RealField)],
    u0: &RealField,
    u1: &RealField,
    forcing: &Trajectory<RealField>,
    c_const: f64,
) -> Result<f64> {
    let mut lhs: f64 = 0.0;
    for (u, ut) in nodes {
        lhs = lhs.max(ut.l2_norm() + u.sobolev_norm(1)?);
    }
    // trapezoid in time for the source integral
    let dt = forcing.dt();
    let mut integral = 0.0;
    for i in 0..forcing.len() {
        let w = if i == 0 || i == forcing.len() - 1 { 0.5 } else { 1.0 };
        integral += w * forcing.state(i).l2_norm() * dt;
    }
    let rhs = c_const * (u1.l2_norm() + u0.sobolev_norm(1)? + integral);
    Ok(if rhs > 0.0 { lhs / rhs } else { 0.0 })
}

fn ddt_norm(states: &[ReformState], i: usize, dt: f64, pick: impl Fn(&ReformState) -> &RealField, order: usize) -> Result<f64> {
    let last = states.len() - 1;
    if last < 2 {
        return Ok(0.0);
    }
    let d = if i == 0 {
        pick(&states[0])
            .scale(-3.0)
            .add(&pick(&states[1]).scale(4.0))
            .sub(pick(&states[2]))
            .scale(1.0 / (2.0 * dt))
    } else if i == last {
        pick(&states[last])
            .scale(3.0)
            .sub(&pick(&states[last - 1]).scale(4.0))
            .add(pick(&states[last - 2]))
            .scale(1.0 / (2.0 * dt))
    } else {
        pick(&states[i + 1]).sub(pick(&states[i - 1])).scale(1.0 / (2.0 * dt))
    };
    d.sobolev_norm(order)
}

/// Assemble the monitor for a (converged) trajectory.
pub fn monitor_estimates(
    traj: &Trajectory<ReformState>,
    init: &ReformInit,
    params: &Params,
    n_const: f64,
    c_const: f64,
    horizon: f64,
) -> Result<WellposednessEstimates> {
    let a0 = amplitude_ratio_a0(&init.sqrt_dev0, params.nbar);
    let i0 = initial_norm_i0(init, params)?;
    let m0 = 4.0 * n_const * i0;
    let m1 = m0;
    let t_star = existence_time(i0, a0, m0, m1, n_const, c_const, horizon);

    let root = params.nbar.sqrt();
    let ups2 = params.upsilon * params.upsilon;
    let dt = traj.dt();
    let states = traj.states();
    let mut rows = Vec::with_capacity(traj.len());
    for (i, s) in states.iter().enumerate() {
        let n = s.density(params);
        let charge = n
            .zip(&s.phase_t, |nn, st| nn - ups2 * nn * st)
            .integral();
        rows.push(NormRow {
            t: traj.time(i),
            psi_h4: s.phase.sobolev_norm(4)?,
            psit_h3: s.phase_t.sobolev_norm(3)?,
            psitt_h2: ddt_norm(states, i, dt, |s| &s.phase_t, 2)?,
            dev_h4: s.sqrt_dev.sobolev_norm(4)?,
            devt_h3: s.sqrt_dev_t.sobolev_norm(3)?,
            devtt_h2: ddt_norm(states, i, dt, |s| &s.sqrt_dev_t, 2)?,
            phi_h4: s.potential.sobolev_norm(4)?,
            min_n: {
                let r = s.sqrt_dev.min() + root;
                r * r
            },
            charge,
        });
    }

    // energy inequality for the amplitude equation along the trajectory
    let lemma5_ratio = {
        let sources = assemble_sources(traj, params)?;
        let nodes: Vec<(RealField, RealField)> = states
            .iter()
            .map(|s| (s.sqrt_dev.clone(), s.sqrt_dev_t.clone()))
            .collect();
        energy_inequality_ratio(
            &nodes,
            &init.sqrt_dev0,
            &init.sqrt_dev1,
            &sources.amplitude,
            c_const,
        )?
    };

    Ok(WellposednessEstimates {
        a0,
        i0,
        m0,
        m1,
        t_star,
        delta: params.delta,
        lemma5_ratio,
        norm_history: rows,
    })
}

pub const NORM_HISTORY_HEADER: &str =
    "t,psi_H4,psit_H3,psitt_H2,Psi_H4,Psit_H3,Psitt_H2,Phi_H4,min_n,Q";

pub fn write_norm_history_csv(w: &mut impl Write, rows: &[NormRow]) -> std::io::Result<()> {
    writeln!(w, "{NORM_HISTORY_HEADER}")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{}",
            r.t,
            r.psi_h4,
            r.psit_h3,
            r.psitt_h2,
            r.dev_h4,
            r.devt_h3,
            r.devtt_h2,
            r.phi_h4,
            r.min_n,
            r.charge
        )?;
    }
    Ok(())
}
