//! Particle density, paramagnetic current and total current of a state.

use crate::error::{CdftError, Result};
use crate::grid::{divergence, gradient_complex, integrate, ComplexField, ScalarField, VectorField};

/// Negative density entries above this magnitude are rejected, smaller ones clamped.
pub const NEGATIVITY_TOL: f64 = 1e-12;
pub const NORMALIZATION_TOL: f64 = 1e-6;

/// A particle density with its total current density.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityPair {
    rho: ScalarField,
    current: VectorField,
    provenance: String,
}

impl DensityPair {
    /// Validates `rho >= -1e-12`, `integrate(rho) = 1 ± 1e-6` and a shared
    /// grid, then clamps round-off negatives to zero.
    pub fn new(rho: ScalarField, current: VectorField, provenance: impl Into<String>) -> Result<Self> {
        rho.grid().ensure_same(current.grid())?;
        let min = rho.min();
        if min < -NEGATIVITY_TOL {
            return Err(CdftError::InvalidInput(format!(
                "particle density has a negative entry {min:.3e}"
            )));
        }
        let rho = rho.map(|v| v.max(0.0));
        let total = integrate(&rho);
        if (total - 1.0).abs() > NORMALIZATION_TOL {
            return Err(CdftError::InvalidInput(format!(
                "particle density integrates to {total}, expected 1"
            )));
        }
        Ok(Self {
            rho,
            current,
            provenance: provenance.into(),
        })
    }

    pub fn rho(&self) -> &ScalarField {
        &self.rho
    }

    pub fn current(&self) -> &VectorField {
        &self.current
    }

    pub fn provenance(&self) -> &str {
        &self.provenance
    }

    pub fn with_current(&self, current: VectorField, provenance: impl Into<String>) -> Result<Self> {
        Self::new(self.rho.clone(), current, provenance)
    }
}

/// `|psi|^2`.
pub fn particle_density(psi: &ComplexField) -> ScalarField {
    psi.modulus_sqr()
}

/// `Im(conj(psi) grad psi)`.
pub fn paramagnetic_current(psi: &ComplexField) -> VectorField {
    let (dx, dy) = gradient_complex(psi);
    let v = psi.values();
    let x = v.iter().zip(&dx).map(|(p, d)| (p.conj() * d).im).collect();
    let y = v.iter().zip(&dy).map(|(p, d)| (p.conj() * d).im).collect();
    VectorField::new(*psi.grid(), x, y).expect("current of a finite field is finite")
}

/// `j = j_p + rho A`.
pub fn total_current(psi: &ComplexField, a: &VectorField) -> Result<VectorField> {
    psi.grid().ensure_same(a.grid())?;
    let jp = paramagnetic_current(psi);
    let rho_a = a.scale_by(&particle_density(psi))?;
    jp.add(&rho_a)
}

/// Densities of `psi` in vector potential `a`, tagged with `provenance`.
pub fn densities_of(psi: &ComplexField, a: &VectorField, provenance: impl Into<String>) -> Result<DensityPair> {
    DensityPair::new(particle_density(psi), total_current(psi, a)?, provenance)
}

/// L2 norm of `div j` over interior nodes.
pub fn continuity_residual(j: &VectorField) -> f64 {
    let div = divergence(j);
    let g = j.grid();
    let h2 = g.spacing() * g.spacing();
    let mut acc = 0.0;
    for jj in 1..g.n() - 1 {
        for i in 1..g.n() - 1 {
            let d = div.values()[g.index(i, jj)];
            acc += d * d;
        }
    }
    (acc * h2).sqrt()
}
