//! Fourier-side operators: differentiation, Poisson inversion, Sobolev
//! norms, and the 2/3-rule dealias filter.
//!
//! Odd derivatives zero the Nyquist mode so real fields stay real; the
//! Laplacian keeps it (its multiplier is real).

use super::field::{ComplexField, RealField, VectorField};
use super::grid::{SpectralGrid, DEFAULT_COMPAT_TOL};
use crate::error::{Error, Result};
use rustfft::num_complex::Complex64;
use std::sync::Arc;

fn derivative_modes(grid: &SpectralGrid, modes: &[Complex64], axis: usize) -> Vec<Complex64> {
    let dim = grid.dim();
    let mut idx = vec![0usize; dim];
    let mut out = vec![Complex64::default(); modes.len()];
    for flat in 0..modes.len() {
        grid.decode(flat, &mut idx);
        let k = if grid.is_nyquist(axis, idx[axis]) { 0.0 } else { grid.wavenumbers(axis)[idx[axis]] };
        out[flat] = modes[flat] * Complex64::new(0.0, k);
    }
    out
}

impl RealField {
    /// Spectral gradient; exact for band-limited fields up to round-off.
    pub fn gradient(&self) -> VectorField {
        let modes = self.to_modes();
        let comps = (0..self.grid.dim())
            .map(|a| RealField::from_modes(&self.grid, derivative_modes(&self.grid, &modes, a)))
            .collect();
        VectorField { components: comps }
    }

    /// Spectral derivative along a single axis.
    pub fn derivative(&self, axis: usize) -> RealField {
        let modes = self.to_modes();
        RealField::from_modes(&self.grid, derivative_modes(&self.grid, &modes, axis))
    }

    /// Spectral Laplacian: multiplies mode k by −|k|².
    pub fn laplacian(&self) -> RealField {
        let mut modes = self.to_modes();
        self.grid.for_each_mode(|flat, k| {
            let k2: f64 = k.iter().map(|v| v * v).sum();
            modes[flat] *= -k2;
        });
        RealField::from_modes(&self.grid, modes)
    }

    /// Zero every mode with any |k_i| at or above 2/3 of the axis Nyquist.
    ///
    /// The cutoff is inclusive (3|m| >= N is removed) so a pointwise product
    /// of resolved fields equals the exact band projection of the product.
    pub fn dealias(&self) -> RealField {
        let mut modes = self.to_modes();
        apply_dealias_mask(&self.grid, &mut modes);
        RealField::from_modes(&self.grid, modes)
    }

    /// Sobolev norm ( Σ_{|α|≤k} ||D^α f||²_{L²} )^{1/2} via multi-index
    /// spectral weights.
    pub fn sobolev_norm(&self, k: usize) -> Result<f64> {
        if k > 4 {
            return Err(Error::Domain {
                what: "sobolev order",
                details: format!("k must be in 0..=4, got {k}"),
            });
        }
        let modes = self.to_modes();
        let weights = SobolevWeights::new(self.grid.dim(), k);
        let mut sum = 0.0;
        self.grid.for_each_mode(|flat, kv| {
            sum += weights.eval(kv) * modes[flat].norm_sqr();
        });
        Ok((sum * self.grid.volume()).sqrt())
    }
}

impl ComplexField {
    /// Per-component spectral gradient of a complex field.
    pub fn gradient(&self) -> Vec<ComplexField> {
        let modes = self.to_modes();
        (0..self.grid.dim())
            .map(|a| ComplexField::from_modes(&self.grid, derivative_modes(&self.grid, &modes, a)))
            .collect()
    }

    pub fn laplacian(&self) -> ComplexField {
        let mut modes = self.to_modes();
        self.grid.for_each_mode(|flat, k| {
            let k2: f64 = k.iter().map(|v| v * v).sum();
            modes[flat] *= -k2;
        });
        ComplexField::from_modes(&self.grid, modes)
    }

    pub fn dealias(&self) -> ComplexField {
        let mut modes = self.to_modes();
        apply_dealias_mask(&self.grid, &mut modes);
        ComplexField::from_modes(&self.grid, modes)
    }
}

impl VectorField {
    /// Spectral divergence Σ_a ∂_a v_a.
    pub fn divergence(&self) -> RealField {
        let grid = self.grid().clone();
        let mut acc = vec![Complex64::default(); grid.len()];
        for (a, c) in self.components.iter().enumerate() {
            let modes = c.to_modes();
            let d = derivative_modes(&grid, &modes, a);
            for (x, y) in acc.iter_mut().zip(d) {
                *x += y;
            }
        }
        RealField::from_modes(&grid, acc)
    }

    /// Curl components: empty in 1D, the scalar ∂_x v_y − ∂_y v_x in 2D,
    /// and the usual three components in 3D.
    pub fn curl(&self) -> Vec<RealField> {
        let d = |f: &RealField, axis: usize| f.derivative(axis);
        match self.dim() {
            1 => Vec::new(),
            2 => vec![d(&self.components[1], 0).sub(&d(&self.components[0], 1))],
            3 => vec![
                d(&self.components[2], 1).sub(&d(&self.components[1], 2)),
                d(&self.components[0], 2).sub(&d(&self.components[2], 0)),
                d(&self.components[1], 0).sub(&d(&self.components[0], 1)),
            ],
            _ => unreachable!(),
        }
    }

    /// Max |curl| over all components (0 in 1D).
    pub fn curl_max_abs(&self) -> f64 {
        self.curl().iter().fold(0.0f64, |m, c| m.max(c.max_abs()))
    }

    pub fn dealias(&self) -> VectorField {
        self.map(|c| c.dealias())
    }
}

fn apply_dealias_mask(grid: &SpectralGrid, modes: &mut [Complex64]) {
    let dim = grid.dim();
    let mut idx = vec![0usize; dim];
    for flat in 0..modes.len() {
        grid.decode(flat, &mut idx);
        for a in 0..dim {
            let n = grid.shape()[a];
            let m = if idx[a] <= n / 2 { idx[a] } else { n - idx[a] };
            if 3 * m >= n {
                modes[flat] = Complex64::default();
                break;
            }
        }
    }
}

/// Mean-zero solution of the torus Poisson problem together with the mean
/// defect that had to be projected out of the data.
#[derive(Clone, Debug)]
pub struct PoissonSolution {
    pub potential: RealField,
    /// Spatial mean of the right-hand side removed before inversion.
    pub mean_defect: f64,
}

/// Solve ΔV = rhs − mean(rhs) with mean(V) = 0, always projecting.
///
/// Evolution loops use this form and track the defect as a diagnostic;
/// the checked entry point is [`solve_poisson`].
pub fn solve_poisson_projected(rhs: &RealField) -> PoissonSolution {
    let grid = rhs.grid().clone();
    let mut modes = rhs.to_modes();
    let mean_defect = modes[0].re;
    modes[0] = Complex64::default();
    grid.for_each_mode(|flat, k| {
        let k2: f64 = k.iter().map(|v| v * v).sum();
        if k2 > 0.0 {
            modes[flat] /= -k2;
        }
    });
    PoissonSolution { potential: RealField::from_modes(&grid, modes), mean_defect }
}

/// Solve ΔV = rhs on the torus, failing when |mean(rhs)| exceeds
/// `compat_tol · max|rhs|` (the zero-mean solvability constraint).
pub fn solve_poisson_with_tol(rhs: &RealField, compat_tol: f64) -> Result<PoissonSolution> {
    let mean = rhs.mean();
    if mean.abs() > compat_tol * rhs.max_abs() {
        return Err(Error::Compatibility { mean, tol: compat_tol * rhs.max_abs() });
    }
    Ok(solve_poisson_projected(rhs))
}

/// [`solve_poisson_with_tol`] at the default tolerance 1e-10.
pub fn solve_poisson(rhs: &RealField) -> Result<PoissonSolution> {
    solve_poisson_with_tol(rhs, DEFAULT_COMPAT_TOL)
}

/// Reconstruct the mean-zero scalar whose gradient is the irrotational part
/// of `v`, via Δs = div v.
pub fn inverse_gradient(v: &VectorField) -> RealField {
    solve_poisson_projected(&v.divergence()).potential
}

/// Σ_{|α|≤k} Π_a k_a^{2α_a}, enumerated once per (dim, k).
struct SobolevWeights {
    exponents: Vec<Vec<usize>>,
}

impl SobolevWeights {
    fn new(dim: usize, k: usize) -> Self {
        let mut exponents = Vec::new();
        let mut alpha = vec![0usize; dim];
        enumerate_multi_indices(dim, k, 0, &mut alpha, &mut exponents);
        SobolevWeights { exponents }
    }

    fn eval(&self, kv: &[f64]) -> f64 {
        let mut w = 0.0;
        for alpha in &self.exponents {
            let mut term = 1.0;
            for (a, &e) in alpha.iter().enumerate() {
                term *= kv[a].powi(2 * e as i32);
            }
            w += term;
        }
        w
    }
}

fn enumerate_multi_indices(
    dim: usize,
    budget: usize,
    axis: usize,
    alpha: &mut Vec<usize>,
    out: &mut Vec<Vec<usize>>,
) {
    if axis == dim {
        out.push(alpha.clone());
        return;
    }
    for e in 0..=budget {
        alpha[axis] = e;
        enumerate_multi_indices(dim, budget - e, axis + 1, alpha, out);
    }
    alpha[axis] = 0;
}

/// Build a [`VectorField`] by taking the gradient of the scalar and adding a
/// constant vector (lattice winding contribution).
pub fn gradient_plus_constant(scalar: &RealField, constant: &[f64]) -> VectorField {
    let g = scalar.gradient();
    VectorField {
        components: g
            .components
            .iter()
            .zip(constant)
            .map(|(c, &v)| c.add_scalar(v))
            .collect(),
    }
}

pub fn grid_of<'a>(fields: &'a [&RealField]) -> Result<&'a Arc<SpectralGrid>> {
    let g = fields[0].grid();
    for f in &fields[1..] {
        g.check_same(f.grid(), "field collection")?;
    }
    Ok(g)
}
