//! The two-field counterexample: one Gaussian is the ground state for fields
//! `B` and `B~`, and the currents `j_eps` between them drive `E~` below the
//! ground energy while `E` stays put.

use serde::Serialize;

use crate::densities::{densities_of, DensityPair};
use crate::eigensolve::{verify_ground_state, GroundStateCheck, SolverOptions};
use crate::error::{CdftError, Result};
use crate::functionals::{e_full, DEFAULT_BRACKET_TOL, DEFAULT_FUNCTIONAL_TOL};
use crate::grid::{integrate, make_grid, ComplexField, Grid2D, ScalarField, VectorField};
use crate::inversion::{fock_darwin_family, membership_check, DEFAULT_IMAG_TOL};
use crate::operators::PotentialPair;

/// Largest allowed spread of `F_HK` over a sweep.
pub const F_HK_SPREAD_TOL: f64 = 1e-8;
/// Fraction of the predicted per-step drop of `E~` that must be realized.
pub const DROP_FACTOR: f64 = 0.9;
/// Required improvement of the worst discrepancy when `h` is halved.
pub const MIN_REFINEMENT_RATIO: f64 = 3.0;

#[derive(Debug, Clone, Copy, Serialize)]
pub struct SweepOptions {
    pub solver: SolverOptions,
    pub functional_tol: f64,
    pub bracket_tol: f64,
    pub imag_tol: f64,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self {
            solver: SolverOptions::default(),
            functional_tol: DEFAULT_FUNCTIONAL_TOL,
            bracket_tol: DEFAULT_BRACKET_TOL,
            imag_tol: DEFAULT_IMAG_TOL,
        }
    }
}

/// Shared ground state `psi0` of `H(V_B, A_B)` and `H(V_B~, A_B~)`, both certified.
#[derive(Debug, Clone)]
pub struct Family {
    pub alpha: f64,
    pub b: f64,
    pub b_tilde: f64,
    pub psi0: ComplexField,
    pub pair: PotentialPair,
    pub pair_tilde: PotentialPair,
    pub certification: GroundStateCheck,
    pub certification_tilde: GroundStateCheck,
    /// Certified ground energy of the field-`B` pair.
    pub e0: f64,
    pub densities: DensityPair,
    /// `(B~ - B) / 2`.
    pub eps_max: f64,
}

impl Family {
    pub fn grid(&self) -> &Grid2D {
        self.psi0.grid()
    }

    pub fn rho0(&self) -> &ScalarField {
        self.densities.rho()
    }

    pub fn j0(&self) -> &VectorField {
        self.densities.current()
    }
}

/// Requires `B < 0`, `0 < |B~| < |B|` and `|B| < 2 alpha`.
pub fn validate_family(alpha: f64, b: f64, b_tilde: f64) -> Result<()> {
    let bad = |m: String| Err(CdftError::InvalidInput(m));
    if !(alpha.is_finite() && alpha > 0.0) {
        return bad(format!("alpha must be positive, got {alpha}"));
    }
    if !(b.is_finite() && b < 0.0) {
        return bad(format!("B must be negative, got {b}"));
    }
    if !(b_tilde.is_finite() && b_tilde != 0.0 && b_tilde.abs() < b.abs()) {
        return bad(format!("need 0 < |Btilde| < |B|, got Btilde = {b_tilde}, B = {b}"));
    }
    if b.abs() >= 2.0 * alpha {
        return bad(format!("|B| = {} must be below 2 alpha = {}", b.abs(), 2.0 * alpha));
    }
    Ok(())
}

pub fn build_family(grid: Grid2D, alpha: f64, b: f64, b_tilde: f64, opts: &SolverOptions) -> Result<Family> {
    validate_family(alpha, b, b_tilde)?;
    let fd = fock_darwin_family(grid, alpha, b)?;
    let fd_tilde = fock_darwin_family(grid, alpha, b_tilde)?;
    let certification = verify_ground_state(&fd.psi0, &fd.pair, opts)?;
    let certification_tilde = verify_ground_state(&fd.psi0, &fd_tilde.pair, opts)?;
    for (field, c) in [(b, &certification), (b_tilde, &certification_tilde)] {
        if !c.is_ground {
            return Err(CdftError::Certification(format!(
                "Gaussian is not the ground state at B = {field}: overlap {:.6}, gap {:.3e}",
                c.overlap, c.gap
            )));
        }
    }
    let densities = densities_of(&fd.psi0, &fd.pair.vector, format!("ground state alpha={alpha} B={b}"))?;
    Ok(Family {
        alpha,
        b,
        b_tilde,
        psi0: fd.psi0,
        pair: fd.pair,
        pair_tilde: fd_tilde.pair,
        e0: certification.ground_energy,
        certification,
        certification_tilde,
        densities,
        eps_max: 0.5 * (b_tilde - b),
    })
}

/// `j_eps = j0 + eps rho0 (-y, x)`.
pub fn make_j_eps(rho0: &ScalarField, j0: &VectorField, eps: f64) -> Result<VectorField> {
    if !(eps.is_finite() && eps >= 0.0) {
        return Err(CdftError::InvalidInput(format!("eps must be non-negative, got {eps}")));
    }
    let rot = VectorField::from_fn(*rho0.grid(), |x, y| (-y, x)).scale_by(rho0)?;
    j0.combine(&rot, 1.0, eps)
}

/// `count` evenly spaced values up to and including `eps_max`.
pub fn default_eps(eps_max: f64, count: usize) -> Vec<f64> {
    (1..=count).map(|k| eps_max * k as f64 / count as f64).collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub eps: f64,
    pub f_hk: f64,
    pub e_tilde: f64,
    pub e_full: f64,
    pub correction: f64,
    #[serde(rename = "in_A1")]
    pub in_a1: bool,
    pub discrepancy: f64,
    pub cross_check: f64,
    pub membership_note: Option<String>,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct Verdicts {
    pub e_tilde_strictly_decreasing: bool,
    pub e_full_constant_at_e0: bool,
    pub f_hk_constant: bool,
}

impl Verdicts {
    pub fn all(&self) -> bool {
        self.e_tilde_strictly_decreasing && self.e_full_constant_at_e0 && self.f_hk_constant
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CertificationSummary {
    #[serde(rename = "B")]
    pub field: f64,
    pub is_ground: bool,
    pub ground_energy: f64,
    pub gap: f64,
    pub overlap: f64,
}

impl CertificationSummary {
    fn new(field: f64, c: &GroundStateCheck) -> Self {
        Self {
            field,
            is_ground: c.is_ground,
            ground_energy: c.ground_energy,
            gap: c.gap,
            overlap: c.overlap,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CounterexampleReport {
    pub alpha: f64,
    #[serde(rename = "B")]
    pub b: f64,
    #[serde(rename = "Btilde")]
    pub b_tilde: f64,
    pub eps_max: f64,
    pub e0: f64,
    /// `integral rho0 r^2`.
    pub second_moment: f64,
    pub certifications: Vec<CertificationSummary>,
    pub rows: Vec<SweepRow>,
    pub verdicts: Verdicts,
    /// Every row certified in the representable set.
    pub conforming: bool,
    pub worst_discrepancy: f64,
    pub f_hk_spread: f64,
}

impl CounterexampleReport {
    pub fn passed(&self) -> bool {
        self.conforming && self.verdicts.all()
    }
}

fn check_eps(eps_values: &[f64], eps_max: f64) -> Result<Vec<f64>> {
    if eps_values.is_empty() {
        return Err(CdftError::InvalidInput("empty eps list".into()));
    }
    let mut eps = eps_values.to_vec();
    for &e in &eps {
        if !(e.is_finite() && e >= 0.0 && e <= eps_max * (1.0 + 1e-12)) {
            return Err(CdftError::InvalidInput(format!("eps = {e} outside [0, {eps_max}]")));
        }
    }
    eps.sort_by(f64::total_cmp);
    if eps.windows(2).any(|w| w[0] == w[1]) {
        return Err(CdftError::InvalidInput("duplicate eps values".into()));
    }
    Ok(eps)
}

/// Evaluates every functional and certifies membership for each `(rho0, j_eps)`
/// against the fixed field-`B` potentials.
pub fn epsilon_sweep(family: &Family, eps_values: &[f64], opts: &SweepOptions) -> Result<CounterexampleReport> {
    let eps = check_eps(eps_values, family.eps_max)?;
    let g = *family.grid();
    let rho0 = family.rho0();
    let second_moment = integrate(&ScalarField::from_fn(g, |x, y| x * x + y * y).zip_map(rho0, |r2, r| r2 * r)?);

    let mut rows = Vec::with_capacity(eps.len());
    for &e in &eps {
        let j = make_j_eps(rho0, family.j0(), e)?;
        let d = family.densities.with_current(j, format!("(rho0, j_eps) eps={e}"))?;
        let m = membership_check(&d, opts.imag_tol, &opts.solver)?;
        let r = e_full(&d, &family.pair, opts.bracket_tol)?;
        rows.push(SweepRow {
            eps: e,
            f_hk: r.f_hk,
            e_tilde: r.e_tilde,
            e_full: r.e_full,
            correction: r.correction,
            in_a1: m.in_a1,
            discrepancy: r.discrepancy,
            cross_check: r.cross_check,
            membership_note: m.reason,
        });
    }

    let tol = opts.functional_tol;
    let slope = family.b.abs() * second_moment;
    let e_tilde_strictly_decreasing = rows.windows(2).all(|w| {
        let step = w[1].eps - w[0].eps;
        let drop = w[0].e_tilde - w[1].e_tilde;
        drop >= step * DROP_FACTOR * slope && (drop - step * slope).abs() <= tol
    });
    let e_full_constant_at_e0 = rows.iter().all(|r| (r.e_full - family.e0).abs() <= tol);
    let (lo, hi) = rows
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| (lo.min(r.f_hk), hi.max(r.f_hk)));
    let f_hk_spread = hi - lo;
    Ok(CounterexampleReport {
        alpha: family.alpha,
        b: family.b,
        b_tilde: family.b_tilde,
        eps_max: family.eps_max,
        e0: family.e0,
        second_moment,
        certifications: vec![
            CertificationSummary::new(family.b, &family.certification),
            CertificationSummary::new(family.b_tilde, &family.certification_tilde),
        ],
        verdicts: Verdicts {
            e_tilde_strictly_decreasing,
            e_full_constant_at_e0,
            f_hk_constant: f_hk_spread <= F_HK_SPREAD_TOL,
        },
        conforming: rows.iter().all(|r| r.in_a1),
        worst_discrepancy: rows.iter().map(|r| r.discrepancy).fold(0.0, f64::max),
        f_hk_spread,
        rows,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct RefinementReport {
    pub n_coarse: usize,
    pub n_fine: usize,
    pub worst_coarse: f64,
    pub worst_fine: f64,
    pub ratio: f64,
    /// `log2(worst_coarse / worst_fine)`.
    pub order: f64,
    pub passed: bool,
}

/// Worst `|E - <psi, H(V0, A0) psi>|` over `(rho0, j_eps)` on one grid.
pub fn worst_discrepancy(grid: Grid2D, alpha: f64, b: f64, eps_values: &[f64], bracket_tol: f64) -> Result<f64> {
    let fd = fock_darwin_family(grid, alpha, b)?;
    let d0 = densities_of(&fd.psi0, &fd.pair.vector, "rho0, j0")?;
    let mut worst = 0.0_f64;
    for &e in eps_values {
        let d = d0.with_current(make_j_eps(d0.rho(), d0.current(), e)?, format!("eps={e}"))?;
        worst = worst.max(e_full(&d, &fd.pair, bracket_tol)?.discrepancy);
    }
    Ok(worst)
}

/// Compares the worst discrepancy on `n` and `2n - 1` nodes over the same box.
///
/// The discrepancy is independent of the ground-state certificates, so no
/// eigensolves are run here.
pub fn refinement_study(
    half_extent: f64,
    n: usize,
    alpha: f64,
    b: f64,
    eps_values: &[f64],
    bracket_tol: f64,
) -> Result<RefinementReport> {
    let n_fine = 2 * n - 1;
    let worst_coarse = worst_discrepancy(make_grid(half_extent, n)?, alpha, b, eps_values, bracket_tol)?;
    let worst_fine = worst_discrepancy(make_grid(half_extent, n_fine)?, alpha, b, eps_values, bracket_tol)?;
    let ratio = worst_coarse / worst_fine;
    Ok(RefinementReport {
        n_coarse: n,
        n_fine,
        worst_coarse,
        worst_fine,
        ratio,
        order: ratio.log2(),
        passed: ratio >= MIN_REFINEMENT_RATIO,
    })
}
