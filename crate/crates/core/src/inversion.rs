//! Fock-Darwin family, scalar-potential inversion and the canonical-gauge
//! representing state of a density pair.

use std::collections::VecDeque;

use num_complex::Complex64;
use serde::Serialize;

use crate::densities::{paramagnetic_current, DensityPair};
use crate::eigensolve::{verify_ground_state, GroundStateCheck, SolverOptions};
use crate::error::{CdftError, Result};
use crate::grid::{curl_z, ComplexField, Grid2D, ScalarField, VectorField};
use crate::operators::{hamiltonian, rayleigh_quotient, LinearOperator, PotentialPair};

/// Nodes with `rho >= TRUST_FRACTION * max(rho)` are trusted.
pub const TRUST_FRACTION: f64 = 1e-12;
/// Representation fails when more of the grid than this is untrusted.
pub const MAX_EXTERIOR_FRACTION: f64 = 0.98;
/// Default bound on the L2 eigen-residual `|| psi Im(H_0 psi / psi) ||`.
pub const DEFAULT_IMAG_TOL: f64 = 1e-2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FockDarwinSpec {
    pub alpha: f64,
    #[serde(rename = "B")]
    pub b: f64,
}

impl FockDarwinSpec {
    /// Requires `alpha > 0` and `|B| < 2 alpha`.
    pub fn new(alpha: f64, b: f64) -> Result<Self> {
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(CdftError::InvalidInput(format!("alpha must be positive, got {alpha}")));
        }
        if !b.is_finite() || b.abs() >= 2.0 * alpha {
            return Err(CdftError::InvalidInput(format!(
                "|B| = {} must be below 2 alpha = {}",
                b.abs(),
                2.0 * alpha
            )));
        }
        Ok(Self { alpha, b })
    }

    /// `alpha^2 - B^2 / 4`.
    pub fn confinement(&self) -> f64 {
        self.alpha * self.alpha - 0.25 * self.b * self.b
    }

    pub fn ground_energy(&self) -> f64 {
        2.0 * self.alpha
    }

    pub fn potentials(&self, grid: Grid2D) -> PotentialPair {
        let w = self.confinement();
        PotentialPair {
            scalar: ScalarField::from_fn(grid, |x, y| w * (x * x + y * y)),
            vector: VectorField::symmetric_gauge(grid, self.b),
            label: format!("fock-darwin alpha={} B={}", self.alpha, self.b),
        }
    }
}

#[derive(Debug, Clone)]
pub struct FockDarwinFamily {
    pub spec: FockDarwinSpec,
    /// `exp(-alpha r^2 / 2)`, normalized on the grid.
    pub psi0: ComplexField,
    pub pair: PotentialPair,
    /// Analytic ground energy `2 alpha`.
    pub e0: f64,
}

pub fn fock_darwin_family(grid: Grid2D, alpha: f64, b: f64) -> Result<FockDarwinFamily> {
    let spec = FockDarwinSpec::new(alpha, b)?;
    let psi0 = ComplexField::from_fn(grid, |x, y| Complex64::new((-0.5 * alpha * (x * x + y * y)).exp(), 0.0))
        .normalized()?;
    Ok(FockDarwinFamily {
        spec,
        psi0,
        pair: spec.potentials(grid),
        e0: spec.ground_energy(),
    })
}

/// Interior nodes where the density is large enough to divide by.
#[derive(Debug, Clone)]
pub struct TrustedRegion {
    grid: Grid2D,
    mask: Vec<bool>,
    /// Nearest trusted node of every node (itself when trusted).
    nearest: Vec<usize>,
    count: usize,
}

impl TrustedRegion {
    pub fn from_density(rho: &ScalarField) -> Result<Self> {
        let grid = *rho.grid();
        let max = rho.max();
        if !(max > 0.0) {
            return Err(CdftError::Representation("particle density vanishes everywhere".into()));
        }
        let floor = TRUST_FRACTION * max;
        let mask: Vec<bool> = rho
            .values()
            .iter()
            .enumerate()
            .map(|(k, &r)| r >= floor && r > 0.0 && !grid.is_boundary_index(k))
            .collect();
        let count = mask.iter().filter(|&&m| m).count();
        let exterior = 1.0 - count as f64 / grid.len() as f64;
        if count == 0 || exterior > MAX_EXTERIOR_FRACTION {
            return Err(CdftError::Representation(format!(
                "density below threshold on {:.1}% of the grid",
                100.0 * exterior
            )));
        }
        let nearest = nearest_trusted(&grid, &mask);
        Ok(Self {
            grid,
            mask,
            nearest,
            count,
        })
    }

    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    pub fn contains(&self, idx: usize) -> bool {
        self.mask[idx]
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn exterior_fraction(&self) -> f64 {
        1.0 - self.count as f64 / self.grid.len() as f64
    }

    /// Trusted nodes whose four neighbours are trusted too.
    pub fn eroded(&self) -> Vec<bool> {
        let n = self.grid.n();
        let mut out = vec![false; self.grid.len()];
        for j in 1..n - 1 {
            for i in 1..n - 1 {
                let k = self.grid.index(i, j);
                out[k] = self.mask[k] && self.mask[k - 1] && self.mask[k + 1] && self.mask[k - n] && self.mask[k + n];
            }
        }
        out
    }

    /// Replaces untrusted entries by the value at the nearest trusted node.
    pub fn extend(&self, values: &mut [f64]) {
        for k in 0..values.len() {
            if !self.mask[k] {
                values[k] = values[self.nearest[k]];
            }
        }
    }

    /// L2 norm of `f` restricted to the trusted region.
    pub fn l2_norm(&self, f: impl Fn(usize) -> f64) -> f64 {
        let h2 = self.grid.spacing() * self.grid.spacing();
        let acc: f64 = (0..self.grid.len()).filter(|&k| self.mask[k]).map(|k| f(k).powi(2)).sum();
        (acc * h2).sqrt()
    }
}

/// Multi-source breadth-first search over the 4-neighbour graph.
fn nearest_trusted(grid: &Grid2D, mask: &[bool]) -> Vec<usize> {
    let n = grid.n();
    let mut nearest = vec![usize::MAX; grid.len()];
    let mut queue = VecDeque::new();
    for (k, &m) in mask.iter().enumerate() {
        if m {
            nearest[k] = k;
            queue.push_back(k);
        }
    }
    while let Some(k) = queue.pop_front() {
        let (i, j) = (k % n, k / n);
        let mut visit = |nb: usize| {
            if nearest[nb] == usize::MAX {
                nearest[nb] = nearest[k];
                queue.push_back(nb);
            }
        };
        if i + 1 < n {
            visit(k + 1);
        }
        if i > 0 {
            visit(k - 1);
        }
        if j + 1 < n {
            visit(k + n);
        }
        if j > 0 {
            visit(k - n);
        }
    }
    nearest
}

#[derive(Debug, Clone)]
pub struct Inversion {
    pub potential: ScalarField,
    pub energy: f64,
    /// L2 norm of `psi Im(H_0 psi / psi)` on the trusted region: the
    /// eigen-residual of the inverted pair.
    pub imag_residual: f64,
    /// Pointwise maximum of `|Im(H_0 psi / psi)|` on the trusted region.
    pub imag_max: f64,
}

/// Solves `H(V, A) psi = e psi` for a real `V`.
///
/// `V = e - Re(H(0, A) psi / psi)` on the trusted region, extended by the
/// nearest trusted value. `e` defaults to the Rayleigh quotient of `H(0, A)`.
pub fn invert_scalar_potential(psi: &ComplexField, a: &VectorField, e: Option<f64>, tol: f64) -> Result<Inversion> {
    psi.grid().ensure_same(a.grid())?;
    let grid = *psi.grid();
    let region = TrustedRegion::from_density(&psi.modulus_sqr())?;
    let pair = PotentialPair::new(ScalarField::zeros(grid), a.clone(), "kinetic")?;
    let h0 = hamiltonian(&pair);
    let energy = match e {
        Some(e) => e,
        None => rayleigh_quotient(&h0, &psi.normalized()?)?,
    };
    let hpsi = h0.apply(psi)?;
    let mut v = vec![0.0; grid.len()];
    let mut imag = vec![0.0; grid.len()];
    let mut imag_max = 0.0_f64;
    for k in 0..grid.len() {
        if region.contains(k) {
            let q = hpsi.values()[k] / psi.values()[k];
            v[k] = energy - q.re;
            imag[k] = psi.values()[k].norm() * q.im;
            imag_max = imag_max.max(q.im.abs());
        }
    }
    let imag_residual = region.l2_norm(|k| imag[k]) / psi.norm_sqr().sqrt();
    if !(imag_residual <= tol) {
        return Err(CdftError::InconsistentInversion { imag_residual, tol });
    }
    region.extend(&mut v);
    Ok(Inversion {
        potential: ScalarField::new(grid, v)?,
        energy,
        imag_residual,
        imag_max,
    })
}

/// Canonical-gauge representative of a density pair: `psi = sqrt(rho)`,
/// `calA = j / rho`.
#[derive(Debug, Clone)]
pub struct RepresentingState {
    pub psi: ComplexField,
    pub cal_a: VectorField,
    pub energy: Option<f64>,
    /// L2 norm of `|psi|^2 - rho`.
    pub density_residual: f64,
    /// L2 norm of `Im(conj(psi) grad psi) + |psi|^2 calA - j` on the trusted region.
    pub current_residual: f64,
    pub region: TrustedRegion,
}

pub fn representing_state(d: &DensityPair) -> Result<RepresentingState> {
    let rho = d.rho();
    let j = d.current();
    let grid = *rho.grid();
    let region = TrustedRegion::from_density(rho)?;
    let psi = ComplexField::from_real(&rho.map(f64::sqrt));
    let mut ax = vec![0.0; grid.len()];
    let mut ay = vec![0.0; grid.len()];
    for k in 0..grid.len() {
        if region.contains(k) {
            let r = rho.values()[k];
            ax[k] = j.x()[k] / r;
            ay[k] = j.y()[k] / r;
        }
    }
    region.extend(&mut ax);
    region.extend(&mut ay);
    let cal_a = VectorField::new(grid, ax, ay)?;

    let modulus = psi.modulus_sqr();
    let density_residual = crate::grid::l2_norm(&modulus.zip_map(rho, |p, q| p - q)?);
    let jp = paramagnetic_current(&psi);
    let current_residual = region.l2_norm(|k| {
        let r = modulus.values()[k];
        let dx = jp.x()[k] + r * cal_a.x()[k] - j.x()[k];
        let dy = jp.y()[k] + r * cal_a.y()[k] - j.y()[k];
        dx.hypot(dy)
    });
    Ok(RepresentingState {
        psi,
        cal_a,
        energy: None,
        density_residual,
        current_residual,
        region,
    })
}

#[derive(Debug, Clone)]
pub struct Membership {
    pub in_a1: bool,
    /// Inverted `(V, calA)` whose ground state reproduces the pair.
    pub pair: Option<PotentialPair>,
    pub e0: Option<f64>,
    pub imag_residual: Option<f64>,
    pub check: Option<GroundStateCheck>,
    pub reason: Option<String>,
}

impl Membership {
    fn rejected(reason: String, imag_residual: Option<f64>) -> Self {
        Self {
            in_a1: false,
            pair: None,
            e0: None,
            imag_residual,
            check: None,
            reason: Some(reason),
        }
    }
}

/// Certifies that `d` is the density pair of a non-degenerate ground state.
///
/// An inconsistent inversion is a negative verdict, not an error; solver and
/// representation failures propagate.
pub fn membership_check(d: &DensityPair, imag_tol: f64, opts: &SolverOptions) -> Result<Membership> {
    let rep = representing_state(d)?;
    let psi = rep.psi.normalized()?;
    let inv = match invert_scalar_potential(&psi, &rep.cal_a, None, imag_tol) {
        Ok(inv) => inv,
        Err(CdftError::InconsistentInversion { imag_residual, tol }) => {
            return Ok(Membership::rejected(
                format!("no real potential: imaginary residual {imag_residual:.3e} exceeds {tol:.1e}"),
                Some(imag_residual),
            ))
        }
        Err(e) => return Err(e),
    };
    let pair = PotentialPair::new(inv.potential, rep.cal_a, format!("inverted from {}", d.provenance()))?;
    let check = verify_ground_state(&psi, &pair, opts)?;
    let reason = if check.possibly_degenerate {
        Some(format!("ground level possibly degenerate (gap {:.3e})", check.gap))
    } else if !check.is_ground {
        Some(format!("overlap with the ground state is {:.6}", check.overlap))
    } else {
        None
    };
    Ok(Membership {
        in_a1: check.is_ground,
        e0: Some(check.ground_energy),
        imag_residual: Some(inv.imag_residual),
        pair: Some(pair),
        check: Some(check),
        reason,
    })
}

/// L2 norm of `curl_z(v)` over the eroded trusted region.
pub fn trusted_curl_norm(v: &VectorField, region: &TrustedRegion) -> f64 {
    let curl = curl_z(v);
    let inner = region.eroded();
    let h2 = v.grid().spacing() * v.grid().spacing();
    let acc: f64 = (0..inner.len()).filter(|&k| inner[k]).map(|k| curl.values()[k].powi(2)).sum();
    (acc * h2).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::densities::densities_of;
    use crate::grid::{integrate, l2_norm, make_grid};
    use crate::operators::expectation;

    fn grid() -> Grid2D {
        make_grid(8.0, 257).unwrap()
    }

    #[test]
    fn family_potentials() {
        let g = grid();
        for (b, w) in [(-1.0, 0.75), (-0.5, 0.9375), (0.0, 1.0)] {
            let f = fock_darwin_family(g, 1.0, b).unwrap();
            assert_eq!(f.e0, 2.0);
            assert_eq!(f.spec.confinement(), w);
            let k = g.index(200, 37);
            let (x, y) = g.position(k);
            assert!((f.pair.scalar.values()[k] - w * (x * x + y * y)).abs() <= 1e-12);
            assert!((f.psi0.norm_sqr() - 1.0).abs() <= 1e-12);
            // Continuum normalization sqrt(alpha / pi) at the origin.
            let origin = f.psi0.values()[g.index(128, 128)].re;
            assert!((origin - (1.0 / std::f64::consts::PI).sqrt()).abs() <= 1e-10);
        }
        assert!(fock_darwin_family(g, 1.0, -2.0).is_err());
        assert!(fock_darwin_family(g, 0.0, 0.0).is_err());
    }

    #[test]
    fn family_state_is_nearly_an_eigenstate() {
        let g = grid();
        let f = fock_darwin_family(g, 1.0, -1.0).unwrap();
        let e = expectation(&hamiltonian(&f.pair), &f.psi0).unwrap();
        assert!((e.value - 2.0).abs() <= 1e-3);
        assert!(e.imag.abs() <= 1e-10);
    }

    /// `integral rho |V - w r^2|`.
    fn weighted_error(v: &ScalarField, rho: &ScalarField, w: f64) -> f64 {
        let g = *v.grid();
        let diff = ScalarField::from_fn(g, |x, y| w * (x * x + y * y));
        integrate(&v.zip_map(&diff, |p, q| (p - q).abs()).unwrap().zip_map(rho, |p, q| p * q).unwrap())
    }

    /// Inverted potential of the sampled `exp(-r^2/2)` at `e = 2` under the
    /// 5-point stencil: per axis `(2 exp(-h^2/2) cosh(x h) - 2) / h^2` replaces
    /// `x^2 - 1`, and `|A|^2` enters exactly.
    fn discrete_inversion(x: f64, y: f64, h: f64, b: f64) -> f64 {
        let axis = |t: f64| (2.0 * (-0.5 * h * h).exp() * (t * h).cosh() - 2.0) / (h * h);
        2.0 + axis(x) + axis(y) - 0.25 * b * b * (x * x + y * y)
    }

    fn check_inversion(b: f64, w: f64) {
        let g = grid();
        let h = g.spacing();
        let f = fock_darwin_family(g, 1.0, b).unwrap();
        let inv = invert_scalar_potential(&f.psi0, &f.pair.vector, Some(2.0), DEFAULT_IMAG_TOL).unwrap();
        let region = TrustedRegion::from_density(&f.psi0.modulus_sqr()).unwrap();
        for k in 0..g.len() {
            if region.contains(k) {
                let (x, y) = g.position(k);
                let v = inv.potential.values()[k];
                assert!((v - discrete_inversion(x, y, h, b)).abs() <= 1e-9 * (1.0 + v.abs()), "{x} {y}");
            }
        }
        // O(h^2) truncation: h^2 sum_axes (1/4 - t^2/2 + t^4/12) in the mean.
        let err = weighted_error(&inv.potential, &f.psi0.modulus_sqr(), w);
        assert!(err <= h * h, "{err}");
    }

    #[test]
    fn harmonic_inversion() {
        check_inversion(0.0, 1.0);
        let g = grid();
        let f = fock_darwin_family(g, 1.0, 0.0).unwrap();
        let inv = invert_scalar_potential(&f.psi0, &VectorField::zeros(g), Some(2.0), DEFAULT_IMAG_TOL).unwrap();
        assert_eq!(inv.imag_residual, 0.0);
    }

    #[test]
    fn magnetic_inversion_recovers_confinement() {
        check_inversion(-1.0, 0.75);
        let g = grid();
        let f = fock_darwin_family(g, 1.0, -1.0).unwrap();
        let inv = invert_scalar_potential(&f.psi0, &f.pair.vector, Some(2.0), DEFAULT_IMAG_TOL).unwrap();
        // Central differences leave an O(h^2) imaginary part.
        assert!(inv.imag_residual > 0.0 && inv.imag_residual <= 1e-3, "{}", inv.imag_residual);
    }

    #[test]
    fn inversion_is_second_order() {
        let err = |n: usize| {
            let g = make_grid(8.0, n).unwrap();
            let f = fock_darwin_family(g, 1.0, -1.0).unwrap();
            let inv = invert_scalar_potential(&f.psi0, &f.pair.vector, Some(2.0), DEFAULT_IMAG_TOL).unwrap();
            (weighted_error(&inv.potential, &f.psi0.modulus_sqr(), 0.75), inv.imag_residual)
        };
        let (v1, i1) = err(129);
        let (v2, i2) = err(257);
        assert!((3.5..=4.5).contains(&(v1 / v2)), "{}", v1 / v2);
        assert!((3.5..=4.5).contains(&(i1 / i2)), "{}", i1 / i2);
    }

    #[test]
    fn inverted_pair_has_psi_as_eigenstate() {
        let g = grid();
        let f = fock_darwin_family(g, 1.0, -1.0).unwrap();
        let inv = invert_scalar_potential(&f.psi0, &f.pair.vector, Some(2.0), DEFAULT_IMAG_TOL).unwrap();
        let pair = PotentialPair::new(inv.potential, f.pair.vector.clone(), "inv").unwrap();
        let hpsi = hamiltonian(&pair).apply(&f.psi0).unwrap();
        let region = TrustedRegion::from_density(&f.psi0.modulus_sqr()).unwrap();
        let re = region.l2_norm(|k| (hpsi.values()[k] - 2.0 * f.psi0.values()[k]).re);
        let im = region.l2_norm(|k| (hpsi.values()[k] - 2.0 * f.psi0.values()[k]).im);
        assert!(re <= 1e-12, "{re}");
        assert!((im - inv.imag_residual).abs() <= 1e-12);
    }

    #[test]
    fn constant_vector_potential_is_inconsistent() {
        let g = grid();
        let f = fock_darwin_family(g, 1.0, 0.0).unwrap();
        let a = VectorField::from_fn(g, |_, _| (1.0, 0.0));
        match invert_scalar_potential(&f.psi0, &a, Some(2.0), DEFAULT_IMAG_TOL) {
            Err(CdftError::InconsistentInversion { imag_residual, .. }) => {
                // || 2 A . grad psi ||^2 = 4 integral x^2 rho = 2.
                assert!((imag_residual - 2f64.sqrt()).abs() <= 1e-2, "{imag_residual}");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn energy_defaults_to_rayleigh_quotient() {
        let g = grid();
        let f = fock_darwin_family(g, 1.0, -1.0).unwrap();
        let inv = invert_scalar_potential(&f.psi0, &f.pair.vector, None, DEFAULT_IMAG_TOL).unwrap();
        let pair = PotentialPair::new(ScalarField::zeros(g), f.pair.vector.clone(), "").unwrap();
        assert!((inv.energy - rayleigh_quotient(&hamiltonian(&pair), &f.psi0).unwrap()).abs() <= 1e-14);
    }

    #[test]
    fn trusted_region_and_extension() {
        let g = make_grid(8.0, 65).unwrap();
        let rho = ScalarField::from_fn(g, |x, y| (-(x * x + y * y)).exp());
        let region = TrustedRegion::from_density(&rho).unwrap();
        let cutoff = -(TRUST_FRACTION.ln());
        for k in 0..g.len() {
            let (x, y) = g.position(k);
            let r2 = x * x + y * y;
            if (r2 - cutoff).abs() > 1e-9 {
                assert_eq!(region.contains(k), r2 < cutoff && !g.is_boundary_index(k));
            }
        }
        let mut values: Vec<f64> = (0..g.len()).map(|k| if region.contains(k) { k as f64 } else { f64::NAN }).collect();
        region.extend(&mut values);
        assert!(values.iter().all(|v| v.is_finite()));
        let eroded = region.eroded();
        assert!(eroded.iter().filter(|&&e| e).count() < region.count());

        assert!(TrustedRegion::from_density(&ScalarField::zeros(g)).is_err());
        let spike = ScalarField::from_fn(g, |x, y| if x == 0.0 && y == 0.0 { 1.0 } else { 0.0 });
        assert!(TrustedRegion::from_density(&spike).is_err());
    }

    #[test]
    fn representing_state_of_family_pair() {
        let g = grid();
        let f = fock_darwin_family(g, 1.0, -1.0).unwrap();
        let d = densities_of(&f.psi0, &f.pair.vector, "family").unwrap();
        let rep = representing_state(&d).unwrap();
        let diff = rep.psi.values().iter().zip(f.psi0.values()).map(|(p, q)| (p - q).norm_sqr());
        let h2 = g.spacing().powi(2);
        assert!((diff.sum::<f64>() * h2).sqrt() <= 1e-6);
        for k in 0..g.len() {
            if rep.region.contains(k) {
                let (x, y) = g.position(k);
                assert!((rep.cal_a.x()[k] - 0.5 * y).abs() <= 1e-6);
                assert!((rep.cal_a.y()[k] + 0.5 * x).abs() <= 1e-6);
            }
        }
        assert!(rep.density_residual <= 1e-12);
        assert!(rep.current_residual <= 1e-12);
    }

    #[test]
    fn representing_state_of_shifted_current() {
        let g = grid();
        let f = fock_darwin_family(g, 1.0, -1.0).unwrap();
        let rho = f.psi0.modulus_sqr();
        let eps = 0.25;
        let j = VectorField::symmetric_gauge(g, -1.0 + 2.0 * eps).scale_by(&rho).unwrap();
        let rep = representing_state(&DensityPair::new(rho.clone(), j, "eps").unwrap()).unwrap();
        for k in 0..g.len() {
            if rep.region.contains(k) {
                let (x, y) = g.position(k);
                assert!((rep.cal_a.x()[k] - 0.25 * y).abs() <= 1e-6);
                assert!((rep.cal_a.y()[k] + 0.25 * x).abs() <= 1e-6);
            }
        }
        let zero = representing_state(&DensityPair::new(rho.clone(), VectorField::zeros(g), "0").unwrap()).unwrap();
        assert!(zero.cal_a.x().iter().chain(zero.cal_a.y()).all(|&v| v == 0.0));
        assert!(l2_norm(&zero.psi.modulus_sqr().zip_map(&rho, |p, q| p - q).unwrap()) <= 1e-14);
    }

    #[test]
    fn trusted_curl_of_gauges() {
        let g = grid();
        let f = fock_darwin_family(g, 1.0, -1.0).unwrap();
        let region = TrustedRegion::from_density(&f.psi0.modulus_sqr()).unwrap();
        let b = VectorField::symmetric_gauge(g, 0.5);
        let expected = 0.5 * ((region.eroded().iter().filter(|&&e| e).count() as f64) * g.spacing().powi(2)).sqrt();
        assert!((trusted_curl_norm(&b, &region) - expected).abs() <= 1e-9);
    }
}
