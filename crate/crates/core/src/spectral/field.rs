//! Sampled fields on a [`SpectralGrid`]: real scalars, complex scalars, and
//! real vectors (one component per axis). Fields are immutable values in the
//! solver APIs; construction helpers return fresh owned buffers.

use super::grid::SpectralGrid;
use crate::error::{Error, Result};
use rustfft::num_complex::Complex64;
use std::sync::Arc;

#[derive(Clone, Debug)]
pub struct RealField {
    pub(crate) grid: Arc<SpectralGrid>,
    pub(crate) data: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct ComplexField {
    pub(crate) grid: Arc<SpectralGrid>,
    pub(crate) data: Vec<Complex64>,
}

/// `dim` real components, each a full scalar field.
#[derive(Clone, Debug)]
pub struct VectorField {
    pub(crate) components: Vec<RealField>,
}

impl RealField {
    pub fn zeros(grid: &Arc<SpectralGrid>) -> Self {
        RealField { grid: grid.clone(), data: vec![0.0; grid.len()] }
    }

    pub fn constant(grid: &Arc<SpectralGrid>, value: f64) -> Self {
        RealField { grid: grid.clone(), data: vec![value; grid.len()] }
    }

    /// Sample `f(x)` at every grid point.
    pub fn from_fn(grid: &Arc<SpectralGrid>, mut f: impl FnMut(&[f64]) -> f64) -> Self {
        let mut data = Vec::with_capacity(grid.len());
        for flat in 0..grid.len() {
            data.push(f(&grid.point(flat)));
        }
        RealField { grid: grid.clone(), data }
    }

    pub fn from_samples(grid: &Arc<SpectralGrid>, data: Vec<f64>) -> Result<Self> {
        if data.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "sample count {} does not match grid size {}",
                data.len(),
                grid.len()
            )));
        }
        Ok(RealField { grid: grid.clone(), data })
    }

    pub fn grid(&self) -> &Arc<SpectralGrid> {
        &self.grid
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }

    /// Torus integral by the trapezoid-exact spectral quadrature
    /// (mean × volume).
    pub fn integral(&self) -> f64 {
        self.mean() * self.grid.volume()
    }

    pub fn min(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// L² norm over the torus, `(∫ f²)^{1/2}`.
    pub fn l2_norm(&self) -> f64 {
        let ms = self.data.iter().map(|v| v * v).sum::<f64>() / self.data.len() as f64;
        (ms * self.grid.volume()).sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> RealField {
        RealField { grid: self.grid.clone(), data: self.data.iter().map(|&v| f(v)).collect() }
    }

    pub fn zip(&self, other: &RealField, f: impl Fn(f64, f64) -> f64) -> RealField {
        debug_assert!(self.grid.same_grid(&other.grid));
        RealField {
            grid: self.grid.clone(),
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect(),
        }
    }

    pub fn add(&self, other: &RealField) -> RealField {
        self.zip(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &RealField) -> RealField {
        self.zip(other, |a, b| a - b)
    }

    pub fn mul(&self, other: &RealField) -> RealField {
        self.zip(other, |a, b| a * b)
    }

    pub fn scale(&self, s: f64) -> RealField {
        self.map(|v| v * s)
    }

    pub fn add_scalar(&self, s: f64) -> RealField {
        self.map(|v| v + s)
    }

    /// Subtract the spatial mean.
    pub fn demean(&self) -> RealField {
        let m = self.mean();
        self.map(|v| v - m)
    }

    pub fn to_complex(&self) -> ComplexField {
        ComplexField {
            grid: self.grid.clone(),
            data: self.data.iter().map(|&v| Complex64::new(v, 0.0)).collect(),
        }
    }

    /// Spectral coefficients (forward transform).
    pub fn to_modes(&self) -> Vec<Complex64> {
        let mut m: Vec<Complex64> = self.data.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.grid.forward(&mut m);
        m
    }

    /// Rebuild samples from spectral coefficients, discarding the imaginary
    /// round-off residue.
    pub fn from_modes(grid: &Arc<SpectralGrid>, mut modes: Vec<Complex64>) -> RealField {
        grid.inverse(&mut modes);
        RealField { grid: grid.clone(), data: modes.iter().map(|c| c.re).collect() }
    }
}

impl ComplexField {
    pub fn zeros(grid: &Arc<SpectralGrid>) -> Self {
        ComplexField { grid: grid.clone(), data: vec![Complex64::default(); grid.len()] }
    }

    pub fn constant(grid: &Arc<SpectralGrid>, value: Complex64) -> Self {
        ComplexField { grid: grid.clone(), data: vec![value; grid.len()] }
    }

    pub fn from_fn(grid: &Arc<SpectralGrid>, mut f: impl FnMut(&[f64]) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(grid.len());
        for flat in 0..grid.len() {
            data.push(f(&grid.point(flat)));
        }
        ComplexField { grid: grid.clone(), data }
    }

    pub fn from_samples(grid: &Arc<SpectralGrid>, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "sample count {} does not match grid size {}",
                data.len(),
                grid.len()
            )));
        }
        Ok(ComplexField { grid: grid.clone(), data })
    }

    pub fn grid(&self) -> &Arc<SpectralGrid> {
        &self.grid
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }

    /// Pointwise |φ|².
    pub fn norm_squared(&self) -> RealField {
        RealField { grid: self.grid.clone(), data: self.data.iter().map(|c| c.norm_sqr()).collect() }
    }

    pub fn conj(&self) -> ComplexField {
        ComplexField { grid: self.grid.clone(), data: self.data.iter().map(|c| c.conj()).collect() }
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> ComplexField {
        ComplexField { grid: self.grid.clone(), data: self.data.iter().map(|&v| f(v)).collect() }
    }

    pub fn zip(&self, other: &ComplexField, f: impl Fn(Complex64, Complex64) -> Complex64) -> ComplexField {
        debug_assert!(self.grid.same_grid(&other.grid));
        ComplexField {
            grid: self.grid.clone(),
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect(),
        }
    }

    pub fn add(&self, other: &ComplexField) -> ComplexField {
        self.zip(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &ComplexField) -> ComplexField {
        self.zip(other, |a, b| a - b)
    }

    pub fn scale(&self, s: Complex64) -> ComplexField {
        self.map(|v| v * s)
    }

    pub fn l2_norm(&self) -> f64 {
        let ms = self.data.iter().map(|c| c.norm_sqr()).sum::<f64>() / self.data.len() as f64;
        (ms * self.grid.volume()).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, c| m.max(c.norm()))
    }

    pub fn to_modes(&self) -> Vec<Complex64> {
        let mut m = self.data.clone();
        self.grid.forward(&mut m);
        m
    }

    pub fn from_modes(grid: &Arc<SpectralGrid>, mut modes: Vec<Complex64>) -> ComplexField {
        grid.inverse(&mut modes);
        ComplexField { grid: grid.clone(), data: modes }
    }
}

impl VectorField {
    pub fn zeros(grid: &Arc<SpectralGrid>) -> Self {
        VectorField { components: (0..grid.dim()).map(|_| RealField::zeros(grid)).collect() }
    }

    pub fn from_components(components: Vec<RealField>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::GridMismatch("vector field with no components".into()));
        }
        let grid = components[0].grid.clone();
        if components.len() != grid.dim() {
            return Err(Error::GridMismatch(format!(
                "vector field needs {} components, got {}",
                grid.dim(),
                components.len()
            )));
        }
        for c in &components[1..] {
            grid.check_same(&c.grid, "vector components")?;
        }
        Ok(VectorField { components })
    }

    pub fn constant(grid: &Arc<SpectralGrid>, value: &[f64]) -> Self {
        VectorField {
            components: value.iter().map(|&v| RealField::constant(grid, v)).collect(),
        }
    }

    pub fn grid(&self) -> &Arc<SpectralGrid> {
        &self.components[0].grid
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn component(&self, axis: usize) -> &RealField {
        &self.components[axis]
    }

    pub fn components(&self) -> &[RealField] {
        &self.components
    }

    pub fn map(&self, f: impl Fn(&RealField) -> RealField) -> VectorField {
        VectorField { components: self.components.iter().map(f).collect() }
    }

    pub fn add(&self, other: &VectorField) -> VectorField {
        VectorField {
            components: self
                .components
                .iter()
                .zip(&other.components)
                .map(|(a, b)| a.add(b))
                .collect(),
        }
    }

    pub fn sub(&self, other: &VectorField) -> VectorField {
        VectorField {
            components: self
                .components
                .iter()
                .zip(&other.components)
                .map(|(a, b)| a.sub(b))
                .collect(),
        }
    }

    pub fn scale(&self, s: f64) -> VectorField {
        self.map(|c| c.scale(s))
    }

    /// Pointwise scaling of every component by a scalar field.
    pub fn mul_field(&self, f: &RealField) -> VectorField {
        self.map(|c| c.mul(f))
    }

    /// Pointwise dot product with another vector field.
    pub fn dot(&self, other: &VectorField) -> RealField {
        let mut acc = self.components[0].mul(&other.components[0]);
        for a in 1..self.components.len() {
            acc = acc.add(&self.components[a].mul(&other.components[a]));
        }
        acc
    }

    pub fn mean(&self) -> Vec<f64> {
        self.components.iter().map(RealField::mean).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.components.iter().fold(0.0f64, |m, c| m.max(c.max_abs()))
    }

    /// L² norm of the vector magnitude.
    pub fn l2_norm(&self) -> f64 {
        let n = self.components[0].len() as f64;
        let mut ms = 0.0;
        for c in &self.components {
            ms += c.data.iter().map(|v| v * v).sum::<f64>() / n;
        }
        (ms * self.grid().volume()).sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.components.iter().all(RealField::is_finite)
    }
}
