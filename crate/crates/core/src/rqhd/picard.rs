//! Fixed-point iteration for the hyperbolic-elliptic system: each sweep
//! solves the two linear wave equations with sources frozen at the previous
//! iterate (same initial data every time) and refreshes the potential by a
//! Poisson solve per time slice.

use super::monitor::{monitor_estimates, WellposednessEstimates};
use super::reform::{ReformInit, ReformState};
use super::sources::assemble_sources;
use super::wave::linear_wave_solve_with_speed;
use crate::error::{Error, Result};
use crate::kg::Params;
use crate::spectral::{solve_poisson_projected, RealField};
use crate::trajectory::{step_count, Trajectory};
use serde::Serialize;

#[derive(Clone, Debug, Serialize)]
pub struct IterationReport {
    pub iterations: usize,
    /// sup-in-time H¹ norm of the (ψ, Ψ) difference per sweep.
    pub successive_diffs: Vec<f64>,
    pub converged: bool,
    /// Geometric mean of consecutive difference ratios.
    pub contraction_ratio_estimate: f64,
}

impl IterationReport {
    fn from_diffs(diffs: Vec<f64>, converged: bool) -> Self {
        let ratios: Vec<f64> = diffs
            .windows(2)
            .filter(|w| w[0] > 0.0 && w[1] > 0.0)
            .map(|w| w[1] / w[0])
            .collect();
        let estimate = if ratios.is_empty() {
            0.0
        } else {
            (ratios.iter().map(|r| r.ln()).sum::<f64>() / ratios.len() as f64).exp()
        };
        IterationReport {
            iterations: diffs.len(),
            successive_diffs: diffs,
            converged,
            contraction_ratio_estimate: estimate,
        }
    }
}

#[derive(Clone, Debug)]
pub struct PicardOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// Preflight cap on the in-memory time history.
    pub memory_budget_bytes: usize,
    /// Generic constants of the well-posedness estimates.
    pub n_const: f64,
    pub c_const: f64,
}

impl Default for PicardOptions {
    fn default() -> Self {
        PicardOptions {
            tol: 1e-9,
            max_iter: 50,
            memory_budget_bytes: 2 * 1024 * 1024 * 1024,
            n_const: 1.0,
            c_const: 1.0,
        }
    }
}

/// First iterate: the constant-in-time jet of the initial data, so the first
/// sources depend only on (ψ0, ψ1, Ψ0, Ψ1).
pub fn initial_iterate(
    init: &ReformInit,
    params: &Params,
    steps: usize,
    dt: f64,
) -> Result<Trajectory<ReformState>> {
    let b0 = params.background.constant_value().ok_or_else(|| {
        Error::Precondition("the iteration supports only a constant background b0".into())
    })?;
    let root = params.nbar.sqrt();
    let n0 = init.sqrt_dev0.map(|d| {
        let r = d + root;
        r * r
    });
    let phi0 = solve_poisson_projected(&n0.add_scalar(-b0)).potential;
    let states = (0..=steps)
        .map(|i| ReformState {
            phase: init.phase0.clone(),
            phase_t: init.phase1.clone(),
            sqrt_dev: init.sqrt_dev0.clone(),
            sqrt_dev_t: init.sqrt_dev1.clone(),
            potential: phi0.clone(),
            time: dt * i as f64,
        })
        .collect();
    Trajectory::new(dt, states)
}

/// One sweep U_p → U_{p+1}.
pub fn picard_iterate(
    u: &Trajectory<ReformState>,
    init: &ReformInit,
    params: &Params,
) -> Result<Trajectory<ReformState>> {
    let sources = assemble_sources(u, params)?;
    let speed = 1.0 / params.upsilon;
    let phase_run =
        linear_wave_solve_with_speed(&init.phase0, &init.phase1, &sources.phase, speed)?;
    let dev_run =
        linear_wave_solve_with_speed(&init.sqrt_dev0, &init.sqrt_dev1, &sources.amplitude, speed)?;
    let dt = u.dt();
    let mut states = Vec::with_capacity(u.len());
    for i in 0..u.len() {
        let potential = solve_poisson_projected(sources.potential_rhs.state(i)).potential;
        let (phase, phase_t) = phase_run.state(i).clone();
        let (sqrt_dev, sqrt_dev_t) = dev_run.state(i).clone();
        states.push(ReformState {
            phase,
            phase_t,
            sqrt_dev,
            sqrt_dev_t,
            potential,
            time: dt * i as f64,
        });
    }
    Trajectory::new(dt, states)
}

/// sup over time nodes of the H¹ norm of the (ψ, Ψ) difference.
pub fn trajectory_diff(a: &Trajectory<ReformState>, b: &Trajectory<ReformState>) -> Result<f64> {
    let mut sup: f64 = 0.0;
    for (x, y) in a.iter().zip(b.iter()) {
        let dp = x.phase.sub(&y.phase).sobolev_norm(1)?;
        let dd = x.sqrt_dev.sub(&y.sqrt_dev).sobolev_norm(1)?;
        sup = sup.max((dp * dp + dd * dd).sqrt());
    }
    Ok(sup)
}

fn preflight_memory(init: &ReformInit, steps: usize, budget: usize) -> Result<()> {
    // two iterates of 5 fields plus 3 source trajectories, f64 samples
    let per_node = 13 * init.grid().len() * std::mem::size_of::<f64>();
    let bytes = per_node * (steps + 1);
    if bytes > budget {
        return Err(Error::validation(
            "run",
            format!("time history needs {bytes} bytes, over the {budget}-byte budget"),
        ));
    }
    Ok(())
}

/// Iterate to the fixed point; returns the converged trajectory, the
/// iteration report, and the monitored well-posedness estimates.
pub fn picard_solve(
    init: &ReformInit,
    params: &Params,
    horizon: f64,
    dt: f64,
    opts: &PicardOptions,
) -> Result<(Trajectory<ReformState>, IterationReport, WellposednessEstimates)> {
    params.require_positive_epsilon()?;
    params.require_positive_upsilon()?;
    let b0 = params.background.constant_value().ok_or_else(|| {
        Error::Precondition("the iteration supports only a constant background b0".into())
    })?;
    let root = params.nbar.sqrt();
    let n0 = init.sqrt_dev0.map(|d| {
        let r = d + root;
        r * r
    });
    let min_n0 = n0.min();
    if min_n0 < params.n_floor {
        return Err(Error::Vacuum { min_density: min_n0, floor: params.n_floor });
    }
    // admissibility: the initial density must stay within delta of nbar
    let deviation = n0.add_scalar(-params.nbar).max_abs();
    if deviation >= params.delta {
        return Err(Error::Precondition(format!(
            "|n0 - nbar| = {deviation:.3e} is not below delta = {:.3e}",
            params.delta
        )));
    }
    // torus charge balance of the data
    let imbalance = n0.add_scalar(-b0);
    let mean = imbalance.mean();
    if mean.abs() > params.compat_tol * imbalance.max_abs() {
        return Err(Error::Compatibility {
            mean,
            tol: params.compat_tol * imbalance.max_abs(),
        });
    }

    let steps = step_count(horizon, dt)?;
    preflight_memory(init, steps, opts.memory_budget_bytes)?;

    let mut u = initial_iterate(init, params, steps, dt)?;
    let mut diffs = Vec::new();
    for _ in 0..opts.max_iter {
        let next = picard_iterate(&u, init, params)?;
        let d = trajectory_diff(&next, &u)?;
        diffs.push(d);
        u = next;
        if d <= opts.tol {
            for state in u.iter() {
                state.check_vacuum(params)?;
            }
            let report = IterationReport::from_diffs(diffs, true);
            let estimates =
                monitor_estimates(&u, init, params, opts.n_const, opts.c_const, horizon)?;
            return Ok((u, report, estimates));
        }
    }
    Err(Error::NoConvergence {
        report: Box::new(IterationReport::from_diffs(diffs, false)),
    })
}

/// Initial data n0 = n̄(1 + amp·sin(k·x)), everything else zero, as used by
/// the small-perturbation studies.
pub fn sine_perturbation_init(
    grid: &std::sync::Arc<crate::spectral::SpectralGrid>,
    params: &Params,
    amp: f64,
    kvec: &[i64],
) -> Result<ReformInit> {
    let kv: Vec<f64> = kvec
        .iter()
        .zip(grid.extent())
        .map(|(&m, &l)| m as f64 * crate::spectral::TWO_PI / l)
        .collect();
    let nbar = params.nbar;
    let n0 = RealField::from_fn(grid, |x| {
        let phase: f64 = kv.iter().zip(x).map(|(&k, &xi)| k * xi).sum();
        nbar * (1.0 + amp * phase.sin())
    });
    let z = RealField::zeros(grid);
    ReformInit::from_hydro(&n0, &z, &crate::madelung::Phase::flat(z.clone()), &z, params)
}
