//! Nondimensional Klein-Gordon-Poisson evolution as a first-order system in
//! (φ, φ_t) with the self-consistent potential re-solved at every stage.
//!
//! The second-order-in-time form divides by ε²υ²; υ = 0 therefore routes to
//! the Schrödinger-limit path in the `limits` module instead.

use crate::error::{Error, Result};
use crate::spectral::{
    solve_poisson_projected, ComplexField, RealField, SpectralGrid, DEFAULT_COMPAT_TOL, TWO_PI,
};
use crate::trajectory::{step_count, Trajectory};
use rustfft::num_complex::Complex64;
use std::sync::Arc;

/// Fixed background ion density entering ΔV = n − b.
#[derive(Clone, Debug)]
pub enum Background {
    Constant(f64),
    Field(RealField),
}

impl Background {
    pub fn mean(&self) -> f64 {
        match self {
            Background::Constant(b0) => *b0,
            Background::Field(b) => b.mean(),
        }
    }

    pub fn min(&self) -> f64 {
        match self {
            Background::Constant(b0) => *b0,
            Background::Field(b) => b.min(),
        }
    }

    /// n − b as a field.
    pub fn subtract_from(&self, n: &RealField) -> RealField {
        match self {
            Background::Constant(b0) => n.add_scalar(-b0),
            Background::Field(b) => n.sub(b),
        }
    }

    pub fn constant_value(&self) -> Option<f64> {
        match self {
            Background::Constant(b0) => Some(*b0),
            Background::Field(_) => None,
        }
    }
}

/// Physical and numerical parameters shared by every solver.
///
/// `epsilon` is the scaled Planck constant, `upsilon` the ratio of the
/// reference velocity to the speed of light. `epsilon` may be zero only for
/// term-switch evaluation (residuals, limit systems); the KG and fixed-point
/// solvers require both parameters positive.
#[derive(Clone, Debug)]
pub struct Params {
    pub epsilon: f64,
    pub upsilon: f64,
    pub background: Background,
    pub nbar: f64,
    /// Vacuum floor; densities at or below this are rejected.
    pub n_floor: f64,
    /// Admissible initial density deviation |n0 − n̄| from Theorem-style
    /// well-posedness (configurable, default 0.1·n̄).
    pub delta: f64,
    pub compat_tol: f64,
}

impl Params {
    pub fn new(epsilon: f64, upsilon: f64, b0: f64, nbar: f64) -> Result<Self> {
        if !(epsilon >= 0.0) || !epsilon.is_finite() {
            return Err(Error::validation("epsilon", "epsilon must be >= 0"));
        }
        if !(upsilon >= 0.0) || !upsilon.is_finite() {
            return Err(Error::validation("upsilon", "upsilon must be >= 0"));
        }
        if !(b0 > 0.0) {
            return Err(Error::validation("b0", "b0 must be > 0"));
        }
        if !(nbar > 0.0) {
            return Err(Error::validation("nbar", "nbar must be > 0"));
        }
        Ok(Params {
            epsilon,
            upsilon,
            background: Background::Constant(b0),
            nbar,
            n_floor: 1e-8 * nbar,
            delta: 0.1 * nbar,
            compat_tol: DEFAULT_COMPAT_TOL,
        })
    }

    pub fn with_background_field(mut self, b: RealField) -> Result<Self> {
        if !(b.min() > 0.0) {
            return Err(Error::validation("background", "doping profile must be positive"));
        }
        self.background = Background::Field(b);
        Ok(self)
    }

    pub fn with_n_floor(mut self, floor: f64) -> Self {
        self.n_floor = floor;
        self
    }

    pub fn with_delta(mut self, delta: f64) -> Self {
        self.delta = delta;
        self
    }

    pub fn with_compat_tol(mut self, tol: f64) -> Self {
        self.compat_tol = tol;
        self
    }

    pub fn require_positive_epsilon(&self) -> Result<()> {
        if self.epsilon > 0.0 {
            Ok(())
        } else {
            Err(Error::DegenerateParameter(
                "epsilon = 0: the quantum terms vanish; use the limit-system solver".into(),
            ))
        }
    }

    pub fn require_positive_upsilon(&self) -> Result<()> {
        if self.upsilon > 0.0 {
            Ok(())
        } else {
            Err(Error::DegenerateParameter(
                "upsilon = 0: the second-order-in-time form degenerates; use the \
                 Schrödinger-limit path in the limits module"
                    .into(),
            ))
        }
    }
}

/// Modulated field and its time derivative at one instant.
#[derive(Clone, Debug)]
pub struct KGState {
    pub phi: ComplexField,
    pub phi_t: ComplexField,
    pub time: f64,
}

impl KGState {
    pub fn new(phi: ComplexField, phi_t: ComplexField, time: f64) -> Result<Self> {
        phi.grid().check_same(phi_t.grid(), "phi vs phi_t")?;
        if !phi.is_finite() || !phi_t.is_finite() {
            return Err(Error::validation("kg state", "fields must be finite"));
        }
        Ok(KGState { phi, phi_t, time })
    }

    pub fn grid(&self) -> &Arc<SpectralGrid> {
        self.phi.grid()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Branch {
    Plus,
    Minus,
}

/// Plane-wave frequency from the dispersion polynomial
/// (ευ²/2)ω² + ω − ε|k|²/2 = 0.
///
/// The plus branch is evaluated in the cancellation-free form
/// ε|k|²/(1 + √(1+ε²υ²|k|²)), which extends continuously to υ = 0 where it
/// equals the Schrödinger dispersion ε|k|²/2.
pub fn dispersion_omega(kmag: f64, params: &Params, branch: Branch) -> Result<f64> {
    params.require_positive_epsilon()?;
    let (eps, ups) = (params.epsilon, params.upsilon);
    let x = eps * eps * ups * ups * kmag * kmag;
    match branch {
        Branch::Plus => Ok(eps * kmag * kmag / (1.0 + (1.0 + x).sqrt())),
        Branch::Minus => {
            params.require_positive_upsilon()?;
            Ok((-1.0 - (1.0 + x).sqrt()) / (eps * ups * ups))
        }
    }
}

/// Exact plane-wave solution φ = A exp(i k·x), φ_t = −iωφ.
///
/// Needs b0 = A² so the self-consistent potential vanishes identically.
pub fn plane_wave(
    grid: &Arc<SpectralGrid>,
    kvec: &[i64],
    amplitude: f64,
    params: &Params,
    branch: Branch,
) -> Result<KGState> {
    if kvec.len() != grid.dim() {
        return Err(Error::Precondition(format!(
            "wavevector has {} components on a {}-d grid",
            kvec.len(),
            grid.dim()
        )));
    }
    let b0 = params.background.constant_value().ok_or_else(|| {
        Error::Precondition("plane waves need a constant background".into())
    })?;
    if (b0 - amplitude * amplitude).abs() > 1e-12 {
        return Err(Error::Precondition(format!(
            "plane wave requires b0 = amplitude^2 (b0 = {b0}, A^2 = {})",
            amplitude * amplitude
        )));
    }
    let kmag = kvec
        .iter()
        .zip(grid.extent())
        .map(|(&m, &l)| {
            let k = m as f64 * TWO_PI / l;
            k * k
        })
        .sum::<f64>()
        .sqrt();
    let omega = dispersion_omega(kmag, params, branch)?;
    let extent = grid.extent().to_vec();
    let phi = ComplexField::from_fn(grid, |x| {
        let phase: f64 = kvec
            .iter()
            .zip(x)
            .zip(&extent)
            .map(|((&m, &xi), &l)| m as f64 * TWO_PI / l * xi)
            .sum();
        Complex64::from_polar(amplitude, phase)
    });
    let phi_t = phi.scale(Complex64::new(0.0, -omega));
    KGState::new(phi, phi_t, 0.0)
}

/// φ_tt from the field equation, with V re-solved from the current density.
///
/// The potential solve projects the right-hand side to zero mean; the charge
/// balance of the *initial* data is enforced separately by [`kg_solve`].
pub fn kg_acceleration(state: &KGState, params: &Params) -> Result<ComplexField> {
    params.require_positive_epsilon()?;
    params.require_positive_upsilon()?;
    let (accel, _) = acceleration_with_defect(state, params);
    Ok(accel)
}

fn acceleration_with_defect(state: &KGState, params: &Params) -> (ComplexField, f64) {
    let eps = params.epsilon;
    let ups = params.upsilon;
    let n = state.phi.norm_squared().dealias();
    let rhs = params.background.subtract_from(&n);
    let sol = solve_poisson_projected(&rhs);
    let v = sol.potential;
    let lap = state.phi.laplacian();
    let vphi = state
        .phi
        .zip(&v.to_complex(), |p, vv| p * vv)
        .dealias();
    let scale = 2.0 / (eps * eps * ups * ups);
    let accel = state
        .phi_t
        .map(|q| q * Complex64::new(0.0, eps))
        .add(&lap.scale(Complex64::new(0.5 * eps * eps, 0.0)))
        .sub(&vphi)
        .scale(Complex64::new(scale, 0.0));
    (accel, sol.mean_defect)
}

/// Largest stable step for the classical 4-stage Runge-Kutta scheme:
/// 0.5 / |ω₋(k_max)|, resolving the fast rest-mass branch.
pub fn stable_dt_bound(grid: &SpectralGrid, params: &Params) -> Result<f64> {
    let omega_max = dispersion_omega(grid.max_wavenumber(), params, Branch::Minus)?.abs();
    Ok(0.5 / omega_max)
}

/// One RK4 step of the first-order system (φ, φ_t). Negative dt integrates
/// backward. V is re-solved at each stage.
pub fn kg_step(state: &KGState, params: &Params, dt: f64) -> Result<KGState> {
    let bound = stable_dt_bound(state.grid(), params)?;
    if dt.abs() > bound {
        return Err(Error::Stability { dt: dt.abs(), bound });
    }
    Ok(step_unchecked(state, params, dt).0)
}

fn step_unchecked(state: &KGState, params: &Params, dt: f64) -> (KGState, f64) {
    let mut max_defect = 0.0f64;
    let mut eval = |phi: &ComplexField, phi_t: &ComplexField| {
        let s = KGState { phi: phi.clone(), phi_t: phi_t.clone(), time: 0.0 };
        let (a, defect) = acceleration_with_defect(&s, params);
        max_defect = max_defect.max(defect.abs());
        a
    };
    let half = Complex64::new(0.5 * dt, 0.0);
    let full = Complex64::new(dt, 0.0);

    let k1p = state.phi_t.clone();
    let k1q = eval(&state.phi, &state.phi_t);

    let p2 = state.phi.add(&k1p.scale(half));
    let q2 = state.phi_t.add(&k1q.scale(half));
    let k2p = q2.clone();
    let k2q = eval(&p2, &q2);

    let p3 = state.phi.add(&k2p.scale(half));
    let q3 = state.phi_t.add(&k2q.scale(half));
    let k3p = q3.clone();
    let k3q = eval(&p3, &q3);

    let p4 = state.phi.add(&k3p.scale(full));
    let q4 = state.phi_t.add(&k3q.scale(full));
    let k4p = q4.clone();
    let k4q = eval(&p4, &q4);

    let sixth = dt / 6.0;
    let comb = |k1: &ComplexField, k2: &ComplexField, k3: &ComplexField, k4: &ComplexField| {
        k1.add(&k2.scale(Complex64::new(2.0, 0.0)))
            .add(&k3.scale(Complex64::new(2.0, 0.0)))
            .add(k4)
            .scale(Complex64::new(sixth, 0.0))
    };
    let phi = state.phi.add(&comb(&k1p, &k2p, &k3p, &k4p));
    let phi_t = state.phi_t.add(&comb(&k1q, &k2q, &k3q, &k4q));
    (KGState { phi, phi_t, time: state.time + dt }, max_defect)
}

/// Charge functional Q = ∫ (n − υ² n S_t) dx with n S_t = ε Im(φ̄ φ_t);
/// well-defined also across vacuum points.
pub fn kg_charge(state: &KGState, params: &Params) -> f64 {
    let grid = state.grid();
    let mut sum = 0.0;
    for (p, q) in state.phi.data().iter().zip(state.phi_t.data()) {
        let n = p.norm_sqr();
        let n_s_t = params.epsilon * (p.conj() * q).im;
        sum += n - params.upsilon * params.upsilon * n_s_t;
    }
    sum / grid.len() as f64 * grid.volume()
}

/// Data-admission check for the torus Poisson problem: the mean charge
/// imbalance of constructed initial data must vanish relative to the density
/// scale (evolution itself only conserves Q, so mid-run states are exempt).
pub fn check_charge_admission(n0: &RealField, params: &Params) -> Result<()> {
    let imbalance = params.background.subtract_from(n0);
    let mean = imbalance.mean();
    let scale = n0.max_abs().max(params.background.mean().abs());
    if mean.abs() > params.compat_tol * scale {
        return Err(Error::Compatibility { mean, tol: params.compat_tol * scale });
    }
    Ok(())
}

#[derive(Clone, Debug)]
pub struct KgRun {
    pub trajectory: Trajectory<KGState>,
    /// (time, Q) per stored step.
    pub charge: Vec<(f64, f64)>,
    /// Largest Poisson mean defect projected out during the run.
    pub max_poisson_defect: f64,
}

/// Evolve the Cauchy problem to `horizon` with fixed step `dt`, recording the
/// charge diagnostic per step.
pub fn kg_solve(init: &KGState, params: &Params, horizon: f64, dt: f64) -> Result<KgRun> {
    params.require_positive_epsilon()?;
    params.require_positive_upsilon()?;
    let bound = stable_dt_bound(init.grid(), params)?;
    if dt.abs() > bound {
        return Err(Error::Stability { dt: dt.abs(), bound });
    }
    if let Background::Field(b) = &params.background {
        init.grid().check_same(b.grid(), "background vs state")?;
    }
    let steps = step_count(horizon, dt.abs())?;
    let mut states = Vec::with_capacity(steps + 1);
    let mut charge = Vec::with_capacity(steps + 1);
    let mut max_defect = 0.0f64;
    let mut current = init.clone();
    charge.push((current.time, kg_charge(&current, params)));
    states.push(current.clone());
    for _ in 0..steps {
        let (next, defect) = step_unchecked(&current, params, dt);
        max_defect = max_defect.max(defect);
        if !next.phi.is_finite() || !next.phi_t.is_finite() {
            return Err(Error::validation(
                "kg evolution",
                format!("state became non-finite at t = {}", next.time),
            ));
        }
        charge.push((next.time, kg_charge(&next, params)));
        states.push(next.clone());
        current = next;
    }
    Ok(KgRun {
        trajectory: Trajectory::new(dt.abs().max(f64::MIN_POSITIVE), states)?,
        charge,
        max_poisson_defect: max_defect,
    })
}
