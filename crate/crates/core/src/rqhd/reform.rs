//! Hyperbolic-elliptic change of variables (ψ, Ψ, Φ) = (S, √n − √n̄, V) and
//! its inverse.

use crate::error::{Error, Result};
use crate::kg::Params;
use crate::madelung::{HydroState, Phase};
use crate::spectral::{RealField, SpectralGrid};
use std::sync::Arc;

/// Reformulated unknowns at one instant. `potential` is mean-zero.
#[derive(Clone, Debug)]
pub struct ReformState {
    /// ψ = S
    pub phase: RealField,
    pub phase_t: RealField,
    /// Ψ = √n − √n̄
    pub sqrt_dev: RealField,
    pub sqrt_dev_t: RealField,
    /// Φ = V
    pub potential: RealField,
    pub time: f64,
}

impl ReformState {
    pub fn grid(&self) -> &Arc<SpectralGrid> {
        self.phase.grid()
    }

    /// n = (Ψ + √n̄)².
    pub fn density(&self, params: &Params) -> RealField {
        let root = params.nbar.sqrt();
        self.sqrt_dev.map(|d| {
            let r = d + root;
            r * r
        })
    }

    pub fn min_density(&self, params: &Params) -> f64 {
        let root = params.nbar.sqrt();
        let r = self.sqrt_dev.min() + root;
        r * r.abs()
    }

    /// Strict physical check: Ψ + √n̄ > 0 everywhere and n above the floor.
    pub fn check_vacuum(&self, params: &Params) -> Result<()> {
        let root = params.nbar.sqrt();
        let min_r = self.sqrt_dev.min() + root;
        if min_r * min_r.abs() < params.n_floor || min_r <= 0.0 {
            return Err(Error::Vacuum {
                min_density: min_r * min_r.abs(),
                floor: params.n_floor,
            });
        }
        Ok(())
    }

    /// Loose in-iteration check: the source assembly divides by (Ψ+√n̄)²,
    /// which must stay above the floor in magnitude. Intermediate iterates
    /// may transiently leave the positive chart without invalidating the
    /// fixed point, so the sign is not enforced here.
    pub fn check_division_scale(&self, params: &Params) -> Result<()> {
        let root = params.nbar.sqrt();
        let min_sq = self
            .sqrt_dev
            .data()
            .iter()
            .map(|d| {
                let r = d + root;
                r * r
            })
            .fold(f64::INFINITY, f64::min);
        if min_sq < params.n_floor {
            return Err(Error::Vacuum { min_density: min_sq, floor: params.n_floor });
        }
        Ok(())
    }
}

/// Initial data for the reformulated system.
#[derive(Clone, Debug)]
pub struct ReformInit {
    pub phase0: RealField,
    pub phase1: RealField,
    pub sqrt_dev0: RealField,
    pub sqrt_dev1: RealField,
}

impl ReformInit {
    /// From hydrodynamic data (n0, n1, S0, S1); the phase must carry no
    /// winding since ψ lives in the periodic scalar space.
    pub fn from_hydro(
        n0: &RealField,
        n1: &RealField,
        s0: &Phase,
        s1: &RealField,
        params: &Params,
    ) -> Result<Self> {
        if s0.winding.iter().any(|&w| w != 0) {
            return Err(Error::Precondition(
                "nonzero phase winding is not representable in the reformulated system".into(),
            ));
        }
        let min_n = n0.min();
        if min_n < params.n_floor {
            return Err(Error::Vacuum { min_density: min_n, floor: params.n_floor });
        }
        let root = params.nbar.sqrt();
        let sqrt_n0 = n0.map(f64::sqrt);
        Ok(ReformInit {
            phase0: s0.periodic.clone(),
            phase1: s1.clone(),
            sqrt_dev0: sqrt_n0.add_scalar(-root),
            sqrt_dev1: n1.zip(&sqrt_n0, |a, b| a / (2.0 * b)),
        })
    }

    pub fn grid(&self) -> &Arc<SpectralGrid> {
        self.phase0.grid()
    }
}

/// Map a hydrodynamic state to the reformulated unknowns.
pub fn reformulate(h: &HydroState, params: &Params) -> Result<ReformState> {
    if h.winding.iter().any(|&w| w != 0) {
        return Err(Error::Precondition(
            "nonzero phase winding is not representable in the reformulated system".into(),
        ));
    }
    let min_n = h.n.min();
    if min_n < params.n_floor {
        return Err(Error::Vacuum { min_density: min_n, floor: params.n_floor });
    }
    let root = params.nbar.sqrt();
    let sqrt_n = h.n.map(f64::sqrt);
    Ok(ReformState {
        phase: h.s_periodic.clone(),
        phase_t: h.s_t.clone(),
        sqrt_dev: sqrt_n.add_scalar(-root),
        sqrt_dev_t: h.n_t.zip(&sqrt_n, |a, b| a / (2.0 * b)),
        potential: h.v.clone(),
        time: h.time,
    })
}

/// Invert [`reformulate`]. Any spatial mean of ψ is a gauge constant and is
/// moved out of the stored periodic phase.
pub fn unreformulate(r: &ReformState, params: &Params) -> Result<HydroState> {
    r.check_vacuum(params)?;
    let root = params.nbar.sqrt();
    let sqrt_n = r.sqrt_dev.add_scalar(root);
    let n = sqrt_n.mul(&sqrt_n);
    let n_t = sqrt_n.mul(&r.sqrt_dev_t).scale(2.0);
    let s_periodic = r.phase.demean();
    let grad_s = r.phase.gradient();
    Ok(HydroState {
        n,
        n_t,
        s_periodic,
        winding: vec![0; r.grid().dim()],
        grad_s,
        s_t: r.phase_t.clone(),
        v: r.potential.clone(),
        time: r.time,
    })
}
