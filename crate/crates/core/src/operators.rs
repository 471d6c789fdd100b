//! Matrix-free magnetic Schrodinger operator `H(V, A) = (-i grad + A)^2 + V`.
//!
//! The operator acts on the Dirichlet space: boundary nodes are read as zero
//! and written as zero. With the symmetric splitting
//! `-i [div(A psi) + A . grad psi]` and central differences, every stencil
//! coupling `a -> b` is the complex conjugate of `b -> a`, so the discrete
//! operator is Hermitian in the trapezoidal inner product.

use num_complex::Complex64;

use crate::error::{CdftError, Result};
use crate::grid::{ComplexField, Grid2D, ScalarField, VectorField};

/// Scalar potential `V` and vector potential `A` sharing one grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialPair {
    pub scalar: ScalarField,
    pub vector: VectorField,
    pub label: String,
}

impl PotentialPair {
    pub fn new(scalar: ScalarField, vector: VectorField, label: impl Into<String>) -> Result<Self> {
        scalar.grid().ensure_same(vector.grid())?;
        Ok(Self {
            scalar,
            vector,
            label: label.into(),
        })
    }

    pub fn free(grid: Grid2D) -> Self {
        Self {
            scalar: ScalarField::zeros(grid),
            vector: VectorField::zeros(grid),
            label: "free".into(),
        }
    }

    pub fn grid(&self) -> &Grid2D {
        self.scalar.grid()
    }
}

pub trait LinearOperator: Send + Sync {
    fn grid(&self) -> Grid2D;

    /// `out = H input`; both slices have `grid().len()` entries.
    fn apply_into(&self, input: &[Complex64], out: &mut [Complex64]);

    /// Upper bound on the largest eigenvalue.
    fn spectral_upper_bound(&self) -> f64;

    fn apply(&self, psi: &ComplexField) -> Result<ComplexField> {
        let grid = self.grid();
        grid.ensure_same(psi.grid())?;
        let mut out = vec![Complex64::new(0.0, 0.0); grid.len()];
        self.apply_into(psi.values(), &mut out);
        ComplexField::new(grid, out)
    }
}

/// Five-point stencil with precomputed per-node couplings.
///
/// Couplings into boundary neighbours are stored as zero, which enforces the
/// Dirichlet truncation without branching in the hot loop.
#[derive(Debug, Clone)]
pub struct MagneticHamiltonian {
    grid: Grid2D,
    diag: Vec<f64>,
    east: Vec<Complex64>,
    west: Vec<Complex64>,
    north: Vec<Complex64>,
    south: Vec<Complex64>,
    bound: f64,
}

pub fn hamiltonian(p: &PotentialPair) -> MagneticHamiltonian {
    MagneticHamiltonian::new(&p.scalar, &p.vector)
}

/// `H_0 = -Laplacian` on the Dirichlet space.
pub fn free_hamiltonian(grid: Grid2D) -> MagneticHamiltonian {
    hamiltonian(&PotentialPair::free(grid))
}

impl MagneticHamiltonian {
    fn new(v: &ScalarField, a: &VectorField) -> Self {
        let grid = *v.grid();
        let n = grid.n();
        let h = grid.spacing();
        let kin = 1.0 / (h * h);
        let zero = Complex64::new(0.0, 0.0);
        let (ax, ay) = (a.x(), a.y());

        let mut diag = vec![0.0; grid.len()];
        let mut east = vec![zero; grid.len()];
        let mut west = vec![zero; grid.len()];
        let mut north = vec![zero; grid.len()];
        let mut south = vec![zero; grid.len()];
        let mut bound = f64::NEG_INFINITY;

        // -i/(2h) [ (A_a + A_b) psi_b - (A_a + A_c) psi_c ] along each axis,
        // with b the forward and c the backward neighbour.
        let link = |s: f64| Complex64::new(-kin, -s / (2.0 * h));
        for j in 1..n - 1 {
            for i in 1..n - 1 {
                let k = grid.index(i, j);
                let (e, w, no, so) = (k + 1, k - 1, k + n, k - n);
                diag[k] = 4.0 * kin + ax[k] * ax[k] + ay[k] * ay[k] + v.values()[k];
                if i + 1 < n - 1 {
                    east[k] = link(ax[k] + ax[e]);
                }
                if i > 1 {
                    west[k] = link(-(ax[k] + ax[w]));
                }
                if j + 1 < n - 1 {
                    north[k] = link(ay[k] + ay[no]);
                }
                if j > 1 {
                    south[k] = link(-(ay[k] + ay[so]));
                }
                let row = diag[k]
                    + east[k].norm()
                    + west[k].norm()
                    + north[k].norm()
                    + south[k].norm();
                bound = bound.max(row);
            }
        }

        Self {
            grid,
            diag,
            east,
            west,
            north,
            south,
            bound,
        }
    }
}

impl LinearOperator for MagneticHamiltonian {
    fn grid(&self) -> Grid2D {
        self.grid
    }

    fn apply_into(&self, x: &[Complex64], out: &mut [Complex64]) {
        let n = self.grid.n();
        let zero = Complex64::new(0.0, 0.0);
        for i in 0..n {
            out[i] = zero;
            out[(n - 1) * n + i] = zero;
        }
        for j in 1..n - 1 {
            let row = j * n;
            out[row] = zero;
            out[row + n - 1] = zero;
            for k in row + 1..row + n - 1 {
                out[k] = x[k] * self.diag[k]
                    + self.east[k] * x[k + 1]
                    + self.west[k] * x[k - 1]
                    + self.north[k] * x[k + n]
                    + self.south[k] * x[k - n];
            }
        }
    }

    fn spectral_upper_bound(&self) -> f64 {
        self.bound
    }
}

/// Quadrature expectation value with its imaginary part kept as a diagnostic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Expectation {
    pub value: f64,
    pub imag: f64,
}

pub const NORMALIZATION_TOL: f64 = 1e-8;

pub fn ensure_normalized(psi: &ComplexField) -> Result<()> {
    let norm = psi.norm_sqr();
    if (norm - 1.0).abs() > NORMALIZATION_TOL {
        return Err(CdftError::NotNormalized { norm });
    }
    Ok(())
}

pub fn expectation(op: &impl LinearOperator, psi: &ComplexField) -> Result<Expectation> {
    ensure_normalized(psi)?;
    let hpsi = op.apply(psi)?;
    let z = psi.inner(&hpsi)?;
    Ok(Expectation {
        value: z.re,
        imag: z.im,
    })
}

/// `<psi, H psi> / <psi, psi>` without a normalization precondition.
pub fn rayleigh_quotient(op: &impl LinearOperator, psi: &ComplexField) -> Result<f64> {
    let hpsi = op.apply(psi)?;
    let num = psi.inner(&hpsi)?;
    let den = psi.inner(psi)?;
    if !(den.re > 0.0) {
        return Err(CdftError::InvalidInput("Rayleigh quotient of a zero field".into()));
    }
    Ok(num.re / den.re)
}

/// `<psi, -Laplacian psi>`.
pub fn kinetic_free_expectation(psi: &ComplexField) -> Result<f64> {
    Ok(expectation(&free_hamiltonian(*psi.grid()), psi)?.value)
}
