//! Periodic grid descriptor with cached FFT plans and reciprocal-lattice
//! wavenumbers. All differentiation in the crate goes through this type.

use crate::error::{Error, Result};
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

pub const TWO_PI: f64 = std::f64::consts::TAU;

/// Relative tolerance for the zero-mean compatibility check of the torus
/// Poisson problem.
pub const DEFAULT_COMPAT_TOL: f64 = 1e-10;

/// Periodic domain: `shape[a]` points on a torus of side `extent[a]` per axis.
///
/// Wavenumbers follow the usual FFT layout `0, 1, .., n/2-1, -n/2, .., -1`
/// scaled by `2π/extent`. Forward transforms are normalized by `1/len` so
/// spectral coefficients are the plane-wave amplitudes of
/// `f(x) = Σ f̂_k exp(i k·x)`.
pub struct SpectralGrid {
    shape: Vec<usize>,
    extent: Vec<f64>,
    wavenumbers: Vec<Vec<f64>>,
    plans: Vec<AxisPlan>,
    len: usize,
}

struct AxisPlan {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for SpectralGrid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SpectralGrid")
            .field("shape", &self.shape)
            .field("extent", &self.extent)
            .finish()
    }
}

impl SpectralGrid {
    pub fn new(shape: &[usize], extent: &[f64]) -> Result<Arc<Self>> {
        if shape.is_empty() || shape.len() > 3 {
            return Err(Error::validation("grid.dim", "dimension must be 1, 2, or 3"));
        }
        if extent.len() != shape.len() {
            return Err(Error::validation("grid.extent", "one extent per axis required"));
        }
        for &n in shape {
            if n < 8 || n % 2 != 0 {
                return Err(Error::validation(
                    "grid.points",
                    format!("points per axis must be even and >= 8, got {n}"),
                ));
            }
        }
        for &l in extent {
            if !(l > 0.0) || !l.is_finite() {
                return Err(Error::validation("grid.extent", "extent must be positive and finite"));
            }
        }
        let mut planner = FftPlanner::new();
        let mut plans = Vec::with_capacity(shape.len());
        let mut wavenumbers = Vec::with_capacity(shape.len());
        for (a, &n) in shape.iter().enumerate() {
            plans.push(AxisPlan {
                forward: planner.plan_fft_forward(n),
                inverse: planner.plan_fft_inverse(n),
            });
            let scale = TWO_PI / extent[a];
            let mut ks = Vec::with_capacity(n);
            for m in 0..n {
                let signed = if m <= n / 2 - 1 { m as i64 } else { m as i64 - n as i64 };
                ks.push(signed as f64 * scale);
            }
            wavenumbers.push(ks);
        }
        let len = shape.iter().product();
        Ok(Arc::new(SpectralGrid {
            shape: shape.to_vec(),
            extent: extent.to_vec(),
            wavenumbers,
            plans,
            len,
        }))
    }

    /// Grid with the default torus side 2π on every axis.
    pub fn unit(shape: &[usize]) -> Result<Arc<Self>> {
        Self::new(shape, &vec![TWO_PI; shape.len()])
    }

    pub fn dim(&self) -> usize {
        self.shape.len()
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn extent(&self) -> &[f64] {
        &self.extent
    }

    /// Total number of grid points.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn volume(&self) -> f64 {
        self.extent.iter().product()
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        self.extent[axis] / self.shape[axis] as f64
    }

    /// Smallest grid spacing over all axes.
    pub fn min_spacing(&self) -> f64 {
        (0..self.dim()).map(|a| self.spacing(a)).fold(f64::INFINITY, f64::min)
    }

    pub fn wavenumbers(&self, axis: usize) -> &[f64] {
        &self.wavenumbers[axis]
    }

    /// Euclidean norm of the per-axis Nyquist wavenumbers, i.e. the largest
    /// |k| present on the grid.
    pub fn max_wavenumber(&self) -> f64 {
        let mut s = 0.0;
        for a in 0..self.dim() {
            let nyq = self.shape[a] as f64 / 2.0 * TWO_PI / self.extent[a];
            s += nyq * nyq;
        }
        s.sqrt()
    }

    /// Physical coordinate of the point with multi-index `idx`.
    pub fn coord(&self, idx: &[usize]) -> Vec<f64> {
        idx.iter()
            .zip(&self.shape)
            .zip(&self.extent)
            .map(|((&i, &n), &l)| i as f64 * l / n as f64)
            .collect()
    }

    /// Decode a flat row-major index into per-axis indices.
    #[inline]
    pub fn decode(&self, mut flat: usize, out: &mut [usize]) {
        for a in (0..self.shape.len()).rev() {
            out[a] = flat % self.shape[a];
            flat /= self.shape[a];
        }
    }

    /// Physical coordinates of the point with flat index `flat`.
    pub fn point(&self, flat: usize) -> Vec<f64> {
        let mut idx = vec![0usize; self.dim()];
        self.decode(flat, &mut idx);
        self.coord(&idx)
    }

    /// Call `f(flat, k)` for every mode, where `k` holds the per-axis
    /// wavenumbers of that mode.
    pub fn for_each_mode(&self, mut f: impl FnMut(usize, &[f64])) {
        let dim = self.dim();
        let mut idx = vec![0usize; dim];
        let mut k = vec![0.0f64; dim];
        for flat in 0..self.len {
            self.decode(flat, &mut idx);
            for a in 0..dim {
                k[a] = self.wavenumbers[a][idx[a]];
            }
            f(flat, &k);
        }
    }

    /// True when the index along `axis` sits at the Nyquist mode.
    #[inline]
    pub fn is_nyquist(&self, axis: usize, mode_index: usize) -> bool {
        mode_index == self.shape[axis] / 2
    }

    fn fft_axis(&self, data: &mut [Complex64], axis: usize, inverse: bool) {
        let n = self.shape[axis];
        let stride: usize = self.shape[axis + 1..].iter().product();
        let outer: usize = self.shape[..axis].iter().product();
        let plan = if inverse { &self.plans[axis].inverse } else { &self.plans[axis].forward };
        let mut lane = vec![Complex64::default(); n];
        for o in 0..outer {
            let base_o = o * n * stride;
            for s in 0..stride {
                let base = base_o + s;
                for t in 0..n {
                    lane[t] = data[base + t * stride];
                }
                plan.process(&mut lane);
                for t in 0..n {
                    data[base + t * stride] = lane[t];
                }
            }
        }
    }

    /// In-place forward transform, normalized by `1/len`.
    pub fn forward(&self, data: &mut [Complex64]) {
        debug_assert_eq!(data.len(), self.len);
        for a in 0..self.dim() {
            self.fft_axis(data, a, false);
        }
        let scale = 1.0 / self.len as f64;
        for v in data.iter_mut() {
            *v *= scale;
        }
    }

    /// In-place inverse transform (unnormalized; pairs with `forward`).
    pub fn inverse(&self, data: &mut [Complex64]) {
        debug_assert_eq!(data.len(), self.len);
        for a in 0..self.dim() {
            self.fft_axis(data, a, true);
        }
    }

    pub fn same_grid(&self, other: &SpectralGrid) -> bool {
        self.shape == other.shape && self.extent == other.extent
    }

    pub fn check_same(&self, other: &SpectralGrid, what: &str) -> Result<()> {
        if self.same_grid(other) {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!(
                "{what}: {:?}/{:?} vs {:?}/{:?}",
                self.shape, self.extent, other.shape, other.extent
            )))
        }
    }
}
