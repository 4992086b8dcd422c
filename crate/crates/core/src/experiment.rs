//! Batch front door: build initial data from a config, orchestrate the
//! solvers, and emit reports, tables, and checkpoints.

use crate::config::{DtSpec, ExperimentConfig, Family, Mode};
use crate::error::{Error, Result};
use crate::kg::{kg_solve, plane_wave, stable_dt_bound, Branch, KGState, Params};
use crate::limits::{
    convergence_study, kg_picard_discrepancy, schrodinger_dt_bound, ConvergenceTable, LimitInit,
    LimitKind, StudyOptions,
};
use crate::madelung::Phase;
use crate::rqhd::{
    picard_solve, quantum_stress_divergence, reformulate, relativistic_term, unreformulate,
    write_norm_history_csv, PicardOptions, QuantumForm, ReformInit, ReformState,
    RelativisticForm,
};
use crate::spectral::snapshot::{write_checkpoint, Snapshot};
use crate::spectral::{solve_poisson_projected, RealField, SpectralGrid, VectorField, TWO_PI};
use crate::trajectory::Trajectory;
use serde::Serialize;
use serde_json::json;
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

/// Periodic Gaussian bump centered in the box, mean-removed so the density
/// keeps exact charge balance with the constant background.
fn gaussian_bump(grid: &Arc<SpectralGrid>, width: f64) -> RealField {
    let extent = grid.extent().to_vec();
    RealField::from_fn(grid, move |x| {
        let mut d2 = 0.0;
        for (&xi, &l) in x.iter().zip(&extent) {
            let mut d = (xi - 0.5 * l).abs();
            if d > 0.5 * l {
                d = l - d;
            }
            d2 += d * d;
        }
        (-0.5 * d2 / (width * width)).exp()
    })
}

/// Density profile of the configured initial data: a named family (mean
/// equals nbar for every family) or a real-field snapshot from disk.
pub fn family_density(cfg: &ExperimentConfig, grid: &Arc<SpectralGrid>) -> Result<RealField> {
    if let Some(path) = &cfg.initial.snapshot_density {
        let snap = crate::spectral::snapshot::load_snapshot(path)?;
        let field = match snap {
            Snapshot::Real(f) => f,
            other => {
                return Err(Error::Format {
                    path: path.clone(),
                    details: format!("expected a real snapshot, found {:?}", other.kind()),
                })
            }
        };
        grid.check_same(field.grid(), "snapshot vs configured grid")?;
        return Ok(field);
    }
    let nbar = cfg.params.nbar;
    match cfg.initial.family.clone().expect("validated") {
        Family::Constant => Ok(RealField::constant(grid, nbar)),
        Family::SinePerturbation => {
            let amp = cfg.initial.amplitude.unwrap_or(0.0);
            let kvec = cfg
                .initial
                .wavevector
                .clone()
                .unwrap_or_else(|| {
                    let mut k = vec![0i64; grid.dim()];
                    k[0] = 1;
                    k
                });
            let kv: Vec<f64> = kvec
                .iter()
                .zip(grid.extent())
                .map(|(&m, &l)| m as f64 * TWO_PI / l)
                .collect();
            Ok(RealField::from_fn(grid, move |x| {
                let phase: f64 = kv.iter().zip(x).map(|(&k, &xi)| k * xi).sum();
                nbar * (1.0 + amp * phase.sin())
            }))
        }
        Family::GaussianBump => {
            let amp = cfg.initial.amplitude.unwrap_or(0.0);
            let width = cfg.initial.width.unwrap_or(1.0);
            let bump = gaussian_bump(grid, width).demean();
            Ok(bump.scale(amp * nbar).add_scalar(nbar))
        }
        Family::PlaneWave => Err(Error::Precondition(
            "the plane-wave family has winding and is available in kg mode only".into(),
        )),
    }
}

fn kg_initial_state(cfg: &ExperimentConfig, grid: &Arc<SpectralGrid>, params: &Params) -> Result<KGState> {
    match cfg.initial.family {
        Some(Family::PlaneWave) => {
            let k = cfg.initial.wavevector.clone().unwrap();
            let amp = cfg.initial.amplitude.unwrap();
            plane_wave(grid, &k, amp, params, Branch::Plus)
        }
        _ => {
            let n0 = family_density(cfg, grid)?;
            let z = RealField::zeros(grid);
            let (phi0, phi1) = crate::madelung::initial_data_kg_from_hydro(
                &n0,
                &z,
                &Phase::flat(z.clone()),
                &z,
                params,
            )?;
            KGState::new(phi0, phi1, 0.0)
        }
    }
}

fn reform_initial(cfg: &ExperimentConfig, grid: &Arc<SpectralGrid>, params: &Params) -> Result<ReformInit> {
    let n0 = family_density(cfg, grid)?;
    let z = RealField::zeros(grid);
    ReformInit::from_hydro(&n0, &z, &Phase::flat(z.clone()), &z, params)
}

/// Fit dt to the horizon: shrink the candidate until it divides evenly.
fn fitted_dt(horizon: f64, candidate: f64) -> f64 {
    if horizon <= 0.0 {
        return candidate;
    }
    let steps = (horizon / candidate).ceil().max(1.0);
    horizon / steps
}

/// Resolve the configured dt; "auto" picks the mode's safe default.
pub fn resolve_dt(cfg: &ExperimentConfig, grid: &Arc<SpectralGrid>, params: &Params) -> Result<f64> {
    let horizon = cfg.run.horizon;
    match (&cfg.run.dt, cfg.mode) {
        (DtSpec::Fixed(dt), _) => Ok(*dt),
        (DtSpec::Auto(_), Mode::Kg | Mode::Equivalence) => {
            Ok(fitted_dt(horizon, stable_dt_bound(grid, params)?))
        }
        (DtSpec::Auto(_), Mode::Rqhd) => Ok(fitted_dt(horizon, 0.5 * grid.min_spacing())),
        (DtSpec::Auto(_), Mode::Limits) => {
            let mut dt = 0.5 * grid.min_spacing();
            if let Some(l) = &cfg.limits {
                if LimitKind::from(l.kind) == LimitKind::Nonrelativistic {
                    dt = dt.min(0.9 * schrodinger_dt_bound(grid, params.epsilon));
                }
            }
            Ok(fitted_dt(horizon, dt))
        }
        (DtSpec::Auto(_), Mode::Identities) => Ok(1e-3),
    }
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(format!("writing {}", path.display()), e))
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).expect("json");
    text.push('\n');
    write_text(path, &text)
}

#[derive(Serialize)]
struct Manifest<'a> {
    config_hash: &'a str,
    version: &'a str,
    mode: Mode,
    wall_time_s: f64,
    threads: usize,
}

fn picard_options(cfg: &ExperimentConfig) -> PicardOptions {
    PicardOptions {
        tol: cfg.run.tol,
        max_iter: cfg.run.max_iter,
        n_const: cfg.constants.n,
        c_const: cfg.constants.c,
        ..PicardOptions::default()
    }
}

/// Run the configured experiment, leaving artifacts in the output directory
/// and returning the summary that was written as the mode report.
pub fn run_experiment(
    cfg: &ExperimentConfig,
    config_text: &str,
    out_override: Option<&Path>,
) -> Result<serde_json::Value> {
    let started = Instant::now();
    let out_dir: PathBuf = out_override
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from(&cfg.output.dir));
    std::fs::create_dir_all(&out_dir)
        .map_err(|e| Error::io(format!("creating {}", out_dir.display()), e))?;

    let grid = cfg.build_grid()?;
    let params = cfg.build_params()?;
    let summary = match cfg.mode {
        Mode::Kg => run_kg(cfg, &grid, &params, &out_dir)?,
        Mode::Rqhd => run_rqhd(cfg, &grid, &params, &out_dir)?,
        Mode::Equivalence => run_equivalence(cfg, &grid, &params, &out_dir)?,
        Mode::Limits => run_limits(cfg, &grid, &params, &out_dir)?,
        Mode::Identities => run_identities(cfg, &grid, &params, &out_dir)?,
    };

    let hash = hex_digest(config_text.as_bytes());
    let manifest = Manifest {
        config_hash: &hash,
        version: env!("CARGO_PKG_VERSION"),
        mode: cfg.mode,
        wall_time_s: started.elapsed().as_secs_f64(),
        threads: rayon::current_num_threads(),
    };
    write_json(
        &out_dir.join("manifest.json"),
        &serde_json::to_value(&manifest).expect("manifest json"),
    )?;
    Ok(summary)
}

fn hex_digest(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let digest = hasher.finalize();
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

fn run_kg(
    cfg: &ExperimentConfig,
    grid: &Arc<SpectralGrid>,
    params: &Params,
    out: &Path,
) -> Result<serde_json::Value> {
    let init = kg_initial_state(cfg, grid, params)?;
    crate::kg::check_charge_admission(&init.phi.norm_squared(), params)?;
    let dt = resolve_dt(cfg, grid, params)?;
    let run = kg_solve(&init, params, cfg.run.horizon, dt)?;

    let mut csv = String::from("t,Q\n");
    for (t, q) in &run.charge {
        csv.push_str(&format!("{t},{q}\n"));
    }
    write_text(&out.join("charge.csv"), &csv)?;

    let states: Vec<Vec<Snapshot>> = run
        .trajectory
        .iter()
        .map(|s| vec![Snapshot::Complex(s.phi.clone()), Snapshot::Complex(s.phi_t.clone())])
        .collect();
    write_checkpoint(out.join("kg_trajectory.rqhdt"), dt, &states)?;

    let q0 = run.charge.first().map(|&(_, q)| q).unwrap_or(0.0);
    let q_end = run.charge.last().map(|&(_, q)| q).unwrap_or(0.0);
    let summary = json!({
        "mode": "kg",
        "dt": dt,
        "steps": run.trajectory.steps(),
        "charge_initial": q0,
        "charge_final": q_end,
        "charge_drift_per_unit_time": if cfg.run.horizon > 0.0 {
            ((q_end - q0) / q0.abs().max(f64::MIN_POSITIVE)).abs() / cfg.run.horizon
        } else { 0.0 },
        "max_poisson_defect": run.max_poisson_defect,
    });
    write_json(&out.join("kg_report.json"), &summary)?;
    Ok(summary)
}

fn reform_checkpoint(traj: &Trajectory<ReformState>, dt: f64, path: &Path) -> Result<()> {
    let states: Vec<Vec<Snapshot>> = traj
        .iter()
        .map(|s| {
            vec![
                Snapshot::Real(s.phase.clone()),
                Snapshot::Real(s.phase_t.clone()),
                Snapshot::Real(s.sqrt_dev.clone()),
                Snapshot::Real(s.sqrt_dev_t.clone()),
                Snapshot::Real(s.potential.clone()),
            ]
        })
        .collect();
    write_checkpoint(path, dt, &states)
}

fn run_rqhd(
    cfg: &ExperimentConfig,
    grid: &Arc<SpectralGrid>,
    params: &Params,
    out: &Path,
) -> Result<serde_json::Value> {
    let init = reform_initial(cfg, grid, params)?;
    let dt = resolve_dt(cfg, grid, params)?;
    let opts = picard_options(cfg);
    let (traj, report, estimates) = picard_solve(&init, params, cfg.run.horizon, dt, &opts)?;

    let mut csv = Vec::new();
    write_norm_history_csv(&mut csv, &estimates.norm_history)
        .map_err(|e| Error::io("writing norm history", e))?;
    write_text(&out.join("norm_history.csv"), &String::from_utf8(csv).expect("utf8"))?;

    let mut jsonl = serde_json::to_string(&report).expect("report json");
    jsonl.push('\n');
    jsonl.push_str(&serde_json::to_string(&estimates).expect("estimates json"));
    jsonl.push('\n');
    write_text(&out.join("report.jsonl"), &jsonl)?;

    reform_checkpoint(&traj, dt, &out.join("reform_trajectory.rqhdt"))?;

    let summary = json!({
        "mode": "rqhd",
        "dt": dt,
        "steps": traj.steps(),
        "iterations": report.iterations,
        "converged": report.converged,
        "contraction_ratio_estimate": report.contraction_ratio_estimate,
        "a0": estimates.a0,
        "i0": estimates.i0,
        "m0": estimates.m0,
        "m1": estimates.m1,
        "t_star": estimates.t_star,
        "lemma5_ratio": estimates.lemma5_ratio,
    });
    write_json(&out.join("rqhd_report.json"), &summary)?;
    Ok(summary)
}

fn run_equivalence(
    cfg: &ExperimentConfig,
    grid: &Arc<SpectralGrid>,
    params: &Params,
    out: &Path,
) -> Result<serde_json::Value> {
    let init = reform_initial(cfg, grid, params)?;
    crate::kg::check_charge_admission(&family_density(cfg, grid)?, params)?;
    let dt = resolve_dt(cfg, grid, params)?;
    let opts = picard_options(cfg);
    let run = kg_picard_discrepancy(&init, params, cfg.run.horizon, dt, &opts)?;
    // residuals of the converged hydrodynamics at the middle node
    let mid = run.picard_hydro.len() / 2;
    let (res_continuity, res_momentum) = if run.picard_hydro.len() >= 3 {
        (
            crate::rqhd::residual_continuity(&run.picard_hydro, mid, params)?.l2_norm(),
            crate::rqhd::residual_momentum(&run.picard_hydro, mid, params)?.l2_norm(),
        )
    } else {
        (0.0, 0.0)
    };
    let summary = json!({
        "mode": "equivalence",
        "dt": dt,
        "horizon": cfg.run.horizon,
        "discrepancy": run.discrepancy,
        "residual_continuity_l2": res_continuity,
        "residual_momentum_l2": res_momentum,
        "iterations": run.report.iterations,
        "converged": run.report.converged,
        "contraction_ratio_estimate": run.report.contraction_ratio_estimate,
    });
    write_json(&out.join("equivalence.json"), &summary)?;
    Ok(summary)
}

fn write_study_csv(path: &Path, table: &ConvergenceTable) -> Result<()> {
    let mut csv = String::from("param,discrepancy\n");
    for (p, d) in table.parameter_values.iter().zip(&table.discrepancies) {
        csv.push_str(&format!("{p},{d}\n"));
    }
    write_text(path, &csv)
}

fn run_limits(
    cfg: &ExperimentConfig,
    grid: &Arc<SpectralGrid>,
    params: &Params,
    out: &Path,
) -> Result<serde_json::Value> {
    let section = cfg.limits.as_ref().expect("validated");
    let kind = LimitKind::from(section.kind);
    let n0 = family_density(cfg, grid)?;
    let init = LimitInit { n0, s0: RealField::zeros(grid) };
    let dt = resolve_dt(cfg, grid, params)?;
    let opts = StudyOptions {
        picard: PicardOptions {
            tol: cfg.run.tol,
            max_iter: cfg.run.max_iter,
            n_const: cfg.constants.n,
            c_const: cfg.constants.c,
            ..PicardOptions::default()
        },
    };
    let table = match convergence_study(kind, &init, params, &section.values, cfg.run.horizon, dt, &opts)
    {
        Ok(t) => t,
        Err(Error::Study { failed, partial }) => {
            // persist the partial table before surfacing the failure
            write_study_csv(&out.join("study.csv"), &partial)?;
            return Err(Error::Study { failed, partial });
        }
        Err(e) => return Err(e),
    };
    write_study_csv(&out.join("study.csv"), &table)?;
    let summary = json!({
        "mode": "limits",
        "kind": table.limit_kind,
        "dt": dt,
        "fitted_order": if table.fitted_order.is_nan() { None } else { Some(table.fitted_order) },
        "fit_residual": if table.fit_residual.is_nan() { None } else { Some(table.fit_residual) },
        "parameter_values": table.parameter_values,
        "discrepancies": table.discrepancies,
    });
    write_json(&out.join("summary.json"), &summary)?;
    Ok(summary)
}

/// Relative max-norm distance between two vector fields, guarded for zero
/// scales.
fn rel_vec_err(a: &VectorField, b: &VectorField) -> f64 {
    let scale = a.max_abs().max(b.max_abs());
    if scale == 0.0 {
        0.0
    } else {
        a.sub(b).max_abs() / scale
    }
}

/// Identity suite on documented default fields: both quantum-stress forms,
/// the relativistic-term identity with analytically time-differentiated
/// samples, its finite-difference ratio under a dt halving, and the
/// reformulation round trip.
pub fn identity_report(params: &Params) -> Result<serde_json::Value> {
    let eps = if params.epsilon > 0.0 { params.epsilon } else { 1.0 };
    let ups = if params.upsilon > 0.0 { params.upsilon } else { 1.0 };
    let p = Params::new(eps, ups, 1.0, 1.0)?;

    // quantum stress, 1d and 2d densities
    let g1 = SpectralGrid::unit(&[128])?;
    let n1 = RealField::from_fn(&g1, |x| 1.0 + 0.1 * x[0].sin());
    let q1 = {
        let a = quantum_stress_divergence(&n1, &p, QuantumForm::Potential)?;
        let b = quantum_stress_divergence(&n1, &p, QuantumForm::Tensor)?;
        rel_vec_err(&a, &b)
    };
    let g2 = SpectralGrid::unit(&[128, 128])?;
    let n2 = RealField::from_fn(&g2, |x| 1.0 + 0.3 * x[0].sin() + 0.2 * (2.0 * x[1]).cos());
    let q2 = {
        let a = quantum_stress_divergence(&n2, &p, QuantumForm::Potential)?;
        let b = quantum_stress_divergence(&n2, &p, QuantumForm::Tensor)?;
        rel_vec_err(&a, &b)
    };

    // relativistic identity with closed-form time derivatives of
    // n(x,t) = 1 + 0.1 sin(x) cos(t) at t = 0.3
    let rel_analytic = {
        let t = 0.3f64;
        let n = RealField::from_fn(&g1, move |x| 1.0 + 0.1 * x[0].sin() * t.cos());
        let n_t = RealField::from_fn(&g1, move |x| -0.1 * x[0].sin() * t.sin());
        let n_tt = RealField::from_fn(&g1, move |x| -0.1 * x[0].sin() * t.cos());
        let root = n.map(f64::sqrt);
        // R_tt = n_tt/(2R) − n_t²/(4R³)
        let r_tt = n_tt
            .zip(&root, |a, r| a / (2.0 * r))
            .sub(&n_t.zip(&root, |a, r| a * a / (4.0 * r * r * r)));
        let pref = eps * eps * ups * ups;
        let potential_form = r_tt
            .zip(&root, |a, r| a / r)
            .gradient()
            .mul_field(&n)
            .scale(0.5 * pref);
        // ∂_t(n ∇ ∂_t log n) = n_t ∇(n_t/n) + n ∇((n_tt n − n_t²)/n²)
        let dlog = n_t.zip(&n, |a, b| a / b);
        let dlog_t = n_tt
            .zip(&n, |a, b| a * b)
            .sub(&n_t.mul(&n_t))
            .zip(&n.mul(&n), |a, b| a / b);
        let flux_form = dlog
            .gradient()
            .mul_field(&n_t)
            .add(&dlog_t.gradient().mul_field(&n))
            .scale(0.25 * pref);
        rel_vec_err(&potential_form, &flux_form)
    };

    // finite-difference forms at dt and dt/2: second-order agreement
    let fd_gap = |dt: f64| -> Result<f64> {
        let states: Vec<crate::madelung::HydroState> = (0..7)
            .map(|i| {
                let t = dt * i as f64;
                let n = RealField::from_fn(&g1, move |x| 1.0 + 0.1 * x[0].sin() * t.cos());
                let v = solve_poisson_projected(&n.add_scalar(-1.0)).potential;
                crate::madelung::HydroState {
                    n,
                    n_t: RealField::zeros(&g1),
                    s_periodic: RealField::zeros(&g1),
                    winding: vec![0],
                    grad_s: VectorField::zeros(&g1),
                    s_t: RealField::zeros(&g1),
                    v,
                    time: t,
                }
            })
            .collect();
        let traj = Trajectory::new(dt, states)?;
        let a = relativistic_term(&traj, 3, &p, RelativisticForm::Potential)?;
        let b = relativistic_term(&traj, 3, &p, RelativisticForm::Flux)?;
        Ok(a.sub(&b).max_abs())
    };
    let gap_coarse = fd_gap(0.01)?;
    let gap_fine = fd_gap(0.005)?;
    let fd_ratio = gap_coarse / gap_fine;

    // reformulation round trip on a smooth state
    let round_trip = {
        let n = RealField::from_fn(&g1, |x| 1.0 + 0.05 * x[0].sin() + 0.02 * (3.0 * x[0]).cos());
        let s = RealField::from_fn(&g1, |x| 0.03 * (2.0 * x[0]).sin()).demean();
        let h = crate::madelung::HydroState {
            n: n.clone(),
            n_t: RealField::from_fn(&g1, |x| 0.01 * x[0].cos()),
            s_periodic: s.clone(),
            winding: vec![0],
            grad_s: s.gradient(),
            s_t: RealField::from_fn(&g1, |x| 0.02 * x[0].sin()),
            v: solve_poisson_projected(&n.add_scalar(-1.0)).potential,
            time: 0.0,
        };
        let r = reformulate(&h, &p)?;
        let back = unreformulate(&r, &p)?;
        let dn = back.n.sub(&h.n).max_abs() / h.n.max_abs();
        let ds = back.s_periodic.sub(&h.s_periodic).max_abs() / (1.0 + h.s_periodic.max_abs());
        dn.max(ds)
    };

    let max_rel_err = [q1, q2, rel_analytic, round_trip].into_iter().fold(0.0f64, f64::max);
    Ok(json!({
        "mode": "identities",
        "quantum_stress_rel_err_1d": q1,
        "quantum_stress_rel_err_2d": q2,
        "relativistic_identity_rel_err": rel_analytic,
        "relativistic_fd_halving_ratio": fd_ratio,
        "reformulation_round_trip_rel_err": round_trip,
        "max_rel_err": max_rel_err,
    }))
}

fn run_identities(
    _cfg: &ExperimentConfig,
    _grid: &Arc<SpectralGrid>,
    params: &Params,
    out: &Path,
) -> Result<serde_json::Value> {
    let summary = identity_report(params)?;
    write_json(&out.join("identities.json"), &summary)?;
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config;

    #[test]
    fn identity_report_is_tight() {
        let p = Params::new(1.0, 1.0, 1.0, 1.0).unwrap();
        let report = identity_report(&p).unwrap();
        let max = report["max_rel_err"].as_f64().unwrap();
        assert!(max <= 1e-7, "identity suite max rel err {max}");
        let ratio = report["relativistic_fd_halving_ratio"].as_f64().unwrap();
        assert!((3.5..4.5).contains(&ratio), "fd ratio {ratio}");
    }

    #[test]
    fn charge_balance_violation_surfaces_as_compatibility() {
        let text = r#"
mode = "kg"

[grid]
dim = 1
points = [64]

[params]
epsilon = 1.0
upsilon = 1.0
b0 = 2.0
nbar = 1.0

[initial]
family = "sine-perturbation"
amplitude = 0.01

[run]
horizon = 0.01
"#;
        let cfg = parse_config(text).unwrap();
        let dir = tempfile::tempdir().unwrap();
        match run_experiment(&cfg, text, Some(dir.path())) {
            Err(Error::Compatibility { .. }) => {}
            other => panic!("expected CompatibilityError, got {other:?}"),
        }
    }

    #[test]
    fn gaussian_family_balances_charge_exactly() {
        let text = r#"
mode = "kg"

[grid]
dim = 1
points = [64]

[params]
epsilon = 1.0
upsilon = 1.0
b0 = 1.0
nbar = 1.0

[initial]
family = "gaussian-bump"
amplitude = 0.05
width = 0.8

[run]
horizon = 0.0
"#;
        let cfg = parse_config(text).unwrap();
        let grid = cfg.build_grid().unwrap();
        let n0 = family_density(&cfg, &grid).unwrap();
        assert!((n0.mean() - 1.0).abs() < 1e-14);
        let dir = tempfile::tempdir().unwrap();
        let summary = run_experiment(&cfg, text, Some(dir.path())).unwrap();
        assert_eq!(summary["steps"].as_u64().unwrap(), 0);
        assert!(dir.path().join("manifest.json").exists());
        assert!(dir.path().join("charge.csv").exists());
    }
}
