//! Lowest eigenpairs of a Hermitian grid operator.
//!
//! Chebyshev-filtered block subspace iteration: each sweep applies a
//! degree-`FILTER_DEGREE` Chebyshev polynomial that damps the spectrum on
//! `[cut, upper]`, reorthonormalizes the whole block (classical Gram-Schmidt,
//! two passes) and performs a Rayleigh-Ritz projection. `cut` tracks the
//! largest Ritz value of the block and `upper` is the operator's Gershgorin
//! bound. Start vectors come from a seeded ChaCha stream, so results are
//! bitwise reproducible for a given seed.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{CdftError, Result};
use crate::grid::{ComplexField, Grid2D};
use crate::operators::{hamiltonian, rayleigh_quotient, LinearOperator, PotentialPair};

pub const MAX_PAIRS: usize = 8;
pub const DEFAULT_TOL: f64 = 1e-8;
pub const DEFAULT_MAX_ITER: usize = 400;
const FILTER_DEGREE: usize = 30;

/// Overlap required by [`verify_ground_state`].
pub const GROUND_OVERLAP: f64 = 1.0 - 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, serde::Deserialize)]
pub struct SolverOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: DEFAULT_TOL,
            max_iter: DEFAULT_MAX_ITER,
            seed: 0x5eed,
        }
    }
}

#[derive(Debug, Clone)]
pub struct EigenResult {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: Vec<ComplexField>,
    pub residuals: Vec<f64>,
    /// `eigenvalues[1] - eigenvalues[0]`; absent when a single pair was requested.
    pub gap: Option<f64>,
    pub iterations: usize,
    pub operator_applications: usize,
}

type Block = Vec<Vec<Complex64>>;

struct Workspace<'a, H: LinearOperator> {
    op: &'a H,
    grid: Grid2D,
    weight: f64,
    applications: usize,
}

impl<H: LinearOperator> Workspace<'_, H> {
    fn apply(&mut self, x: &[Complex64]) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); x.len()];
        self.op.apply_into(x, &mut out);
        self.applications += 1;
        out
    }

    fn inner(&self, u: &[Complex64], v: &[Complex64]) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for (a, b) in u.iter().zip(v) {
            acc += a.conj() * b;
        }
        acc * self.weight
    }

    fn norm(&self, u: &[Complex64]) -> f64 {
        u.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt() * self.weight.sqrt()
    }

    fn random_vector(&self, rng: &mut ChaCha8Rng) -> Vec<Complex64> {
        let n = self.grid.n();
        (0..self.grid.len())
            .map(|k| {
                let re = rng.gen_range(-1.0..1.0);
                let im = rng.gen_range(-1.0..1.0);
                if self.grid.is_boundary(k % n, k / n) {
                    Complex64::new(0.0, 0.0)
                } else {
                    Complex64::new(re, im)
                }
            })
            .collect()
    }

    /// Orthonormalizes in place; vectors that collapse are replaced by fresh
    /// random directions.
    fn orthonormalize(&self, block: &mut Block, rng: &mut ChaCha8Rng) {
        for i in 0..block.len() {
            let mut attempts = 0;
            loop {
                let before = self.norm(&block[i]);
                for _pass in 0..2 {
                    for j in 0..i {
                        let c = self.inner(&block[j], &block[i]);
                        let (done, cur) = block.split_at_mut(i);
                        for (x, q) in cur[0].iter_mut().zip(&done[j]) {
                            *x -= c * q;
                        }
                    }
                }
                let after = self.norm(&block[i]);
                if after > 1e-10 * before && after > 0.0 {
                    let s = 1.0 / after;
                    block[i].iter_mut().for_each(|z| *z *= s);
                    break;
                }
                attempts += 1;
                assert!(attempts < 16, "cannot complete an orthonormal block");
                block[i] = self.random_vector(rng);
            }
        }
    }

    /// Ritz pairs of the span of an orthonormal block, ascending.
    fn rayleigh_ritz(&self, basis: &Block, images: &Block) -> (Vec<f64>, Block, Block) {
        let m = basis.len();
        let mut g = DMatrix::<Complex64>::zeros(m, m);
        for i in 0..m {
            for j in i..m {
                let z = self.inner(&basis[i], &images[j]);
                let w = self.inner(&basis[j], &images[i]).conj();
                let avg = 0.5 * (z + w);
                g[(i, j)] = avg;
                g[(j, i)] = avg.conj();
            }
        }
        let eig = g.symmetric_eigen();
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));

        let len = basis[0].len();
        let mut xs = Vec::with_capacity(m);
        let mut hxs = Vec::with_capacity(m);
        let mut thetas = Vec::with_capacity(m);
        for &col in &order {
            let mut x = vec![Complex64::new(0.0, 0.0); len];
            let mut hx = vec![Complex64::new(0.0, 0.0); len];
            for r in 0..m {
                let c = eig.eigenvectors[(r, col)];
                for ((xv, hv), (b, hb)) in x.iter_mut().zip(hx.iter_mut()).zip(basis[r].iter().zip(&images[r])) {
                    *xv += c * b;
                    *hv += c * hb;
                }
            }
            thetas.push(eig.eigenvalues[col]);
            xs.push(x);
            hxs.push(hx);
        }
        (thetas, xs, hxs)
    }

    /// Scaled Chebyshev filter damping `[cut, upper]`, normalized at `low`.
    fn filter(&mut self, x: &[Complex64], low: f64, cut: f64, upper: f64) -> Vec<Complex64> {
        let e = 0.5 * (upper - cut);
        let c = 0.5 * (upper + cut);
        let mut sigma = e / (low - c);
        let tau = 2.0 / sigma;

        let hx = self.apply(x);
        let mut prev = x.to_vec();
        let mut cur: Vec<Complex64> = hx
            .iter()
            .zip(x)
            .map(|(h, v)| (h - v * c) * (sigma / e))
            .collect();
        for _ in 2..=FILTER_DEGREE {
            let s_next = 1.0 / (tau - sigma);
            let hy = self.apply(&cur);
            let next: Vec<Complex64> = hy
                .iter()
                .zip(&cur)
                .zip(&prev)
                .map(|((h, y), p)| (h - y * c) * (2.0 * s_next / e) - p * (sigma * s_next))
                .collect();
            prev = cur;
            cur = next;
            sigma = s_next;
        }
        cur
    }
}

/// Fixes the global phase so the largest-modulus entry is real and positive.
fn fix_phase(v: &mut [Complex64]) {
    let mut best = 0;
    let mut best_mod = -1.0;
    for (k, z) in v.iter().enumerate() {
        let m = z.norm_sqr();
        if m > best_mod {
            best_mod = m;
            best = k;
        }
    }
    if best_mod > 0.0 {
        let rot = v[best].conj() / v[best].norm();
        v.iter_mut().for_each(|z| *z *= rot);
    }
}

pub fn lowest_eigenpairs(
    op: &impl LinearOperator,
    k: usize,
    tol: f64,
    max_iter: usize,
    seed: u64,
) -> Result<EigenResult> {
    if !(1..=MAX_PAIRS).contains(&k) {
        return Err(CdftError::InvalidInput(format!(
            "requested {k} eigenpairs, supported range is 1..={MAX_PAIRS}"
        )));
    }
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(CdftError::InvalidInput(format!("tolerance {tol} must be positive")));
    }
    if max_iter == 0 {
        return Err(CdftError::InvalidInput("max_iter must be at least 1".into()));
    }

    let grid = op.grid();
    let h = grid.spacing();
    let mut ws = Workspace {
        op,
        grid,
        weight: h * h,
        applications: 0,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let block_size = k + k.max(4);

    let mut block: Block = (0..block_size).map(|_| ws.random_vector(&mut rng)).collect();
    ws.orthonormalize(&mut block, &mut rng);
    let images: Block = block.iter().map(|x| ws.apply(x)).collect();
    let (mut thetas, mut xs, mut hxs) = ws.rayleigh_ritz(&block, &images);

    let upper = op.spectral_upper_bound();
    let residual_of = |ws: &Workspace<'_, _>, theta: f64, x: &[Complex64], hx: &[Complex64]| {
        let r: Vec<Complex64> = hx.iter().zip(x).map(|(a, b)| a - b * theta).collect();
        ws.norm(&r)
    };

    let mut residuals = vec![f64::INFINITY; k];
    for iter in 0..=max_iter {
        for i in 0..k {
            residuals[i] = residual_of(&ws, thetas[i], &xs[i], &hxs[i]);
        }
        if residuals.iter().all(|&r| r <= tol) {
            let mut eigenvectors = Vec::with_capacity(k);
            for x in xs.iter_mut().take(k) {
                fix_phase(x);
                eigenvectors.push(ComplexField::new(grid, x.clone())?);
            }
            let eigenvalues = thetas[..k].to_vec();
            let gap = (k > 1).then(|| eigenvalues[1] - eigenvalues[0]);
            return Ok(EigenResult {
                eigenvalues,
                eigenvectors,
                residuals,
                gap,
                iterations: iter,
                operator_applications: ws.applications,
            });
        }
        if iter == max_iter {
            break;
        }

        let low = thetas[0];
        let mut cut = thetas[block_size - 1];
        if cut >= upper {
            cut = low + 0.5 * (upper - low);
        }
        let low = if cut - low > 1e-12 * (upper - cut) {
            low
        } else {
            cut - 1e-3 * (upper - cut)
        };
        let mut filtered: Block = xs.iter().map(|x| ws.filter(x, low, cut, upper)).collect();
        ws.orthonormalize(&mut filtered, &mut rng);
        let images: Block = filtered.iter().map(|x| ws.apply(x)).collect();
        (thetas, xs, hxs) = ws.rayleigh_ritz(&filtered, &images);
    }

    Err(CdftError::NotConverged {
        iterations: max_iter,
        residuals,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct GroundStateCheck {
    pub is_ground: bool,
    /// Rayleigh quotient of the tested state.
    pub energy: f64,
    /// Lowest eigenvalue of the operator.
    pub ground_energy: f64,
    pub gap: f64,
    pub overlap: f64,
    pub possibly_degenerate: bool,
}

/// Certifies `psi` as the non-degenerate ground state of `H(p)`.
///
/// A gap below `10 * tol` is reported as possibly degenerate and never
/// certified.
pub fn verify_ground_state(psi: &ComplexField, p: &PotentialPair, opts: &SolverOptions) -> Result<GroundStateCheck> {
    crate::operators::ensure_normalized(psi)?;
    p.grid().ensure_same(psi.grid())?;
    let h = hamiltonian(p);
    let eig = lowest_eigenpairs(&h, 2, opts.tol, opts.max_iter, opts.seed)?;
    let overlap = eig.eigenvectors[0].inner(&psi.dirichlet())?.norm();
    let gap = eig.gap.unwrap_or(f64::INFINITY);
    let possibly_degenerate = gap <= 10.0 * opts.tol;
    Ok(GroundStateCheck {
        is_ground: overlap >= GROUND_OVERLAP && !possibly_degenerate,
        energy: rayleigh_quotient(&h, psi)?,
        ground_energy: eig.eigenvalues[0],
        gap,
        overlap,
        possibly_degenerate,
    })
}
