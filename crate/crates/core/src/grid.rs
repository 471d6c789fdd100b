//! Uniform square grid on `[-L, L]^2`, node-valued fields, trapezoidal
//! quadrature and second-order finite differences.
//!
//! Nodes are stored row-major with `y` as the slow index: node `(i, j)` sits
//! at `(x_i, y_j)` and lives at offset `j * n + i`.

use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{CdftError, Result};

/// Smallest usable resolution per axis.
pub const MIN_NODES: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid2D {
    n: usize,
    half_extent: f64,
    spacing: f64,
}

impl Grid2D {
    pub fn new(half_extent: f64, n: usize) -> Result<Self> {
        if n < MIN_NODES {
            return Err(CdftError::InvalidGrid(format!(
                "n = {n} nodes per axis, need at least {MIN_NODES}"
            )));
        }
        if !(half_extent.is_finite() && half_extent > 0.0) {
            return Err(CdftError::InvalidGrid(format!(
                "half-extent L = {half_extent} must be positive and finite"
            )));
        }
        let spacing = 2.0 * half_extent / (n - 1) as f64;
        Ok(Self {
            n,
            half_extent,
            spacing,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn half_extent(&self) -> f64 {
        self.half_extent
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    /// Number of nodes, `n^2`.
    pub fn len(&self) -> usize {
        self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn coord(&self, i: usize) -> f64 {
        -self.half_extent + i as f64 * self.spacing
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.n + i
    }

    pub fn position(&self, idx: usize) -> (f64, f64) {
        (self.coord(idx % self.n), self.coord(idx / self.n))
    }

    pub fn is_boundary(&self, i: usize, j: usize) -> bool {
        i == 0 || j == 0 || i == self.n - 1 || j == self.n - 1
    }

    pub fn is_boundary_index(&self, idx: usize) -> bool {
        self.is_boundary(idx % self.n, idx / self.n)
    }

    pub fn area(&self) -> f64 {
        4.0 * self.half_extent * self.half_extent
    }

    /// Trapezoidal weight of node `(i, j)`.
    pub fn weight(&self, i: usize, j: usize) -> f64 {
        let edge = |k: usize| if k == 0 || k == self.n - 1 { 0.5 } else { 1.0 };
        edge(i) * edge(j) * self.spacing * self.spacing
    }

    pub fn same_as(&self, other: &Grid2D) -> bool {
        self.n == other.n && self.half_extent.to_bits() == other.half_extent.to_bits()
    }

    pub fn ensure_same(&self, other: &Grid2D) -> Result<()> {
        if self.same_as(other) {
            Ok(())
        } else {
            Err(CdftError::GridMismatch)
        }
    }
}

pub fn make_grid(half_extent: f64, n: usize) -> Result<Grid2D> {
    Grid2D::new(half_extent, n)
}

fn check_finite<'a>(values: impl IntoIterator<Item = &'a f64>, what: &'static str) -> Result<()> {
    if values.into_iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(CdftError::NonFinite(what))
    }
}

fn check_len(grid: &Grid2D, len: usize) -> Result<()> {
    if len == grid.len() {
        Ok(())
    } else {
        Err(CdftError::InvalidInput(format!(
            "expected {} values for an {}x{} grid, got {len}",
            grid.len(),
            grid.n(),
            grid.n()
        )))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: Grid2D,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: Grid2D, values: Vec<f64>) -> Result<Self> {
        check_len(&grid, values.len())?;
        check_finite(&values, "scalar field")?;
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: Grid2D) -> Self {
        Self {
            grid,
            values: vec![0.0; grid.len()],
        }
    }

    pub fn constant(grid: Grid2D, value: f64) -> Self {
        Self {
            grid,
            values: vec![value; grid.len()],
        }
    }

    pub fn from_fn(grid: Grid2D, f: impl Fn(f64, f64) -> f64) -> Self {
        let values = (0..grid.len())
            .map(|idx| {
                let (x, y) = grid.position(idx);
                f(x, y)
            })
            .collect();
        Self { grid, values }
    }

    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_map(&self, other: &ScalarField, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.grid.ensure_same(&other.grid)?;
        Ok(Self {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Planar vector field stored as separate `x` and `y` component arrays.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    grid: Grid2D,
    x: Vec<f64>,
    y: Vec<f64>,
}

impl VectorField {
    pub fn new(grid: Grid2D, x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        check_len(&grid, x.len())?;
        check_len(&grid, y.len())?;
        check_finite(x.iter().chain(&y), "vector field")?;
        Ok(Self { grid, x, y })
    }

    pub fn zeros(grid: Grid2D) -> Self {
        Self {
            grid,
            x: vec![0.0; grid.len()],
            y: vec![0.0; grid.len()],
        }
    }

    pub fn from_fn(grid: Grid2D, f: impl Fn(f64, f64) -> (f64, f64)) -> Self {
        let (x, y) = (0..grid.len())
            .map(|idx| {
                let (px, py) = grid.position(idx);
                f(px, py)
            })
            .unzip();
        Self { grid, x, y }
    }

    /// `(B/2) e_z x r = (B/2)(-y, x)`, the symmetric gauge of a uniform field `B`.
    pub fn symmetric_gauge(grid: Grid2D, field: f64) -> Self {
        Self::from_fn(grid, |x, y| (-0.5 * field * y, 0.5 * field * x))
    }

    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn component(&self, idx: usize) -> (f64, f64) {
        (self.x[idx], self.y[idx])
    }

    pub fn add(&self, other: &VectorField) -> Result<Self> {
        self.combine(other, 1.0, 1.0)
    }

    pub fn sub(&self, other: &VectorField) -> Result<Self> {
        self.combine(other, 1.0, -1.0)
    }

    /// `a * self + b * other`.
    pub fn combine(&self, other: &VectorField, a: f64, b: f64) -> Result<Self> {
        self.grid.ensure_same(&other.grid)?;
        let lin = |u: &[f64], v: &[f64]| -> Vec<f64> {
            u.iter().zip(v).map(|(&p, &q)| a * p + b * q).collect()
        };
        Ok(Self {
            grid: self.grid,
            x: lin(&self.x, &other.x),
            y: lin(&self.y, &other.y),
        })
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            grid: self.grid,
            x: self.x.iter().map(|v| s * v).collect(),
            y: self.y.iter().map(|v| s * v).collect(),
        }
    }

    /// Pointwise product with a scalar field.
    pub fn scale_by(&self, f: &ScalarField) -> Result<Self> {
        self.grid.ensure_same(f.grid())?;
        let w = f.values();
        Ok(Self {
            grid: self.grid,
            x: self.x.iter().zip(w).map(|(v, s)| v * s).collect(),
            y: self.y.iter().zip(w).map(|(v, s)| v * s).collect(),
        })
    }

    pub fn dot(&self, other: &VectorField) -> Result<ScalarField> {
        self.grid.ensure_same(&other.grid)?;
        let values = (0..self.grid.len())
            .map(|k| self.x[k] * other.x[k] + self.y[k] * other.y[k])
            .collect();
        Ok(ScalarField {
            grid: self.grid,
            values,
        })
    }

    pub fn norm_sqr(&self) -> ScalarField {
        ScalarField {
            grid: self.grid,
            values: self
                .x
                .iter()
                .zip(&self.y)
                .map(|(a, b)| a * a + b * b)
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComplexField {
    grid: Grid2D,
    values: Vec<Complex64>,
}

impl ComplexField {
    pub fn new(grid: Grid2D, values: Vec<Complex64>) -> Result<Self> {
        check_len(&grid, values.len())?;
        if values.iter().any(|z| !z.is_finite()) {
            return Err(CdftError::NonFinite("complex field"));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: Grid2D) -> Self {
        Self {
            grid,
            values: vec![Complex64::new(0.0, 0.0); grid.len()],
        }
    }

    pub fn from_fn(grid: Grid2D, f: impl Fn(f64, f64) -> Complex64) -> Self {
        let values = (0..grid.len())
            .map(|idx| {
                let (x, y) = grid.position(idx);
                f(x, y)
            })
            .collect();
        Self { grid, values }
    }

    pub fn from_real(f: &ScalarField) -> Self {
        Self {
            grid: f.grid,
            values: f.values.iter().map(|&v| Complex64::new(v, 0.0)).collect(),
        }
    }

    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|&z| z * s).collect(),
        }
    }

    /// Multiply pointwise by `exp(i * phase)`.
    pub fn with_phase(&self, phase: &ScalarField) -> Result<Self> {
        self.grid.ensure_same(phase.grid())?;
        Ok(Self {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(phase.values())
                .map(|(&z, &p)| z * Complex64::from_polar(1.0, p))
                .collect(),
        })
    }

    pub fn conj(&self) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|z| z.conj()).collect(),
        }
    }

    /// Quadrature inner product `<self, other>`, antilinear in `self`.
    pub fn inner(&self, other: &ComplexField) -> Result<Complex64> {
        self.grid.ensure_same(&other.grid)?;
        let n = self.grid.n;
        let mut acc = Complex64::new(0.0, 0.0);
        for j in 0..n {
            for i in 0..n {
                let k = j * n + i;
                acc += self.values[k].conj() * other.values[k] * self.grid.weight(i, j);
            }
        }
        Ok(acc)
    }

    /// `integrate(|psi|^2)`.
    pub fn norm_sqr(&self) -> f64 {
        integrate(&self.modulus_sqr())
    }

    pub fn modulus_sqr(&self) -> ScalarField {
        ScalarField {
            grid: self.grid,
            values: self.values.iter().map(|z| z.norm_sqr()).collect(),
        }
    }

    pub fn normalized(&self) -> Result<Self> {
        let norm = self.norm_sqr();
        if !(norm > 0.0) {
            return Err(CdftError::InvalidInput("cannot normalize a zero field".into()));
        }
        Ok(self.scale(Complex64::new(norm.sqrt().recip(), 0.0)))
    }

    /// Copy with boundary nodes set to zero.
    pub fn dirichlet(&self) -> Self {
        let mut out = self.clone();
        for (idx, z) in out.values.iter_mut().enumerate() {
            if self.grid.is_boundary_index(idx) {
                *z = Complex64::new(0.0, 0.0);
            }
        }
        out
    }
}

/// Trapezoidal rule over `[-L, L]^2`.
pub fn integrate(f: &ScalarField) -> f64 {
    let g = f.grid;
    let n = g.n;
    let h2 = g.spacing * g.spacing;
    let mut total = 0.0;
    for j in 0..n {
        let wy = if j == 0 || j == n - 1 { 0.5 } else { 1.0 };
        let row = &f.values[j * n..(j + 1) * n];
        let mut s = 0.5 * (row[0] + row[n - 1]);
        for v in &row[1..n - 1] {
            s += v;
        }
        total += wy * s;
    }
    total * h2
}

/// Quadrature L2 norm.
pub fn l2_norm(f: &ScalarField) -> f64 {
    integrate(&f.map(|v| v * v)).sqrt()
}

/// L2 norm of a vector field, `sqrt(integrate(|v|^2))`.
pub fn l2_norm_vector(v: &VectorField) -> f64 {
    integrate(&v.norm_sqr()).sqrt()
}

pub(crate) trait Stencil: Copy + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self> {}
impl<T> Stencil for T where T: Copy + Add<Output = T> + Sub<Output = T> + Mul<f64, Output = T> {}

/// First derivative along a strided line: central inside, second-order one-sided at the ends.
fn d1_line<T: Stencil>(src: &[T], out: &mut [T], start: usize, stride: usize, n: usize, h: f64) {
    let at = |k: usize| src[start + k * stride];
    let c = 0.5 / h;
    out[start] = (at(1) * 4.0 - at(0) * 3.0 - at(2)) * c;
    for k in 1..n - 1 {
        out[start + k * stride] = (at(k + 1) - at(k - 1)) * c;
    }
    out[start + (n - 1) * stride] = (at(n - 1) * 3.0 - at(n - 2) * 4.0 + at(n - 3)) * c;
}

fn d2_line<T: Stencil>(src: &[T], out: &mut [T], start: usize, stride: usize, n: usize, h: f64) {
    let at = |k: usize| src[start + k * stride];
    let c = 1.0 / (h * h);
    out[start] = (at(0) * 2.0 - at(1) * 5.0 + at(2) * 4.0 - at(3)) * c;
    for k in 1..n - 1 {
        out[start + k * stride] = (at(k + 1) + at(k - 1) - at(k) * 2.0) * c;
    }
    let e = n - 1;
    out[start + e * stride] = (at(e) * 2.0 - at(e - 1) * 5.0 + at(e - 2) * 4.0 - at(e - 3)) * c;
}

pub(crate) fn d_dx<T: Stencil>(grid: &Grid2D, src: &[T]) -> Vec<T> {
    let n = grid.n;
    let mut out = src.to_vec();
    for j in 0..n {
        d1_line(src, &mut out, j * n, 1, n, grid.spacing);
    }
    out
}

pub(crate) fn d_dy<T: Stencil>(grid: &Grid2D, src: &[T]) -> Vec<T> {
    let n = grid.n;
    let mut out = src.to_vec();
    for i in 0..n {
        d1_line(src, &mut out, i, n, n, grid.spacing);
    }
    out
}

fn laplacian_values<T: Stencil>(grid: &Grid2D, src: &[T]) -> Vec<T> {
    let n = grid.n;
    let mut xx = src.to_vec();
    let mut yy = src.to_vec();
    for j in 0..n {
        d2_line(src, &mut xx, j * n, 1, n, grid.spacing);
    }
    for i in 0..n {
        d2_line(src, &mut yy, i, n, n, grid.spacing);
    }
    xx.iter().zip(&yy).map(|(&a, &b)| a + b).collect()
}

pub fn gradient(f: &ScalarField) -> VectorField {
    VectorField {
        grid: f.grid,
        x: d_dx(&f.grid, &f.values),
        y: d_dy(&f.grid, &f.values),
    }
}

/// Componentwise gradient of a complex field.
pub fn gradient_complex(psi: &ComplexField) -> (Vec<Complex64>, Vec<Complex64>) {
    (d_dx(&psi.grid, &psi.values), d_dy(&psi.grid, &psi.values))
}

pub fn divergence(v: &VectorField) -> ScalarField {
    let dx = d_dx(&v.grid, &v.x);
    let dy = d_dy(&v.grid, &v.y);
    ScalarField {
        grid: v.grid,
        values: dx.iter().zip(&dy).map(|(a, b)| a + b).collect(),
    }
}

/// `d_x v_y - d_y v_x`.
pub fn curl_z(v: &VectorField) -> ScalarField {
    let dxy = d_dx(&v.grid, &v.y);
    let dyx = d_dy(&v.grid, &v.x);
    ScalarField {
        grid: v.grid,
        values: dxy.iter().zip(&dyx).map(|(a, b)| a - b).collect(),
    }
}

pub fn laplacian(f: &ScalarField) -> ScalarField {
    ScalarField {
        grid: f.grid,
        values: laplacian_values(&f.grid, &f.values),
    }
}

pub fn laplacian_complex(psi: &ComplexField) -> ComplexField {
    ComplexField {
        grid: psi.grid,
        values: laplacian_values(&psi.grid, &psi.values),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn interior_max(f: &ScalarField, pred: impl Fn(f64) -> f64) -> f64 {
        let g = f.grid();
        let mut worst = 0.0_f64;
        for j in 1..g.n() - 1 {
            for i in 1..g.n() - 1 {
                worst = worst.max(pred(f.values()[g.index(i, j)]).abs());
            }
        }
        worst
    }

    #[test]
    fn spacing_is_exact() {
        assert_eq!(make_grid(8.0, 17).unwrap().spacing(), 1.0);
        assert_eq!(make_grid(8.0, 257).unwrap().spacing(), 0.0625);
    }

    #[test]
    fn rejects_degenerate_grids() {
        assert!(make_grid(0.0, 64).is_err());
        assert!(make_grid(-1.0, 64).is_err());
        assert!(make_grid(8.0, 15).is_err());
        assert!(make_grid(f64::NAN, 64).is_err());
    }

    #[test]
    fn coordinates_are_reproducible() {
        let a = make_grid(8.0, 257).unwrap();
        let b = make_grid(8.0, 257).unwrap();
        for i in 0..a.n() {
            assert_eq!(a.coord(i).to_bits(), b.coord(i).to_bits());
        }
        assert_eq!(a.coord(0), -8.0);
        assert_eq!(a.coord(128), 0.0);
    }

    #[test]
    fn field_constructors_validate() {
        let g = make_grid(1.0, 16).unwrap();
        assert!(ScalarField::new(g, vec![0.0; 10]).is_err());
        let mut v = vec![0.0; g.len()];
        v[3] = f64::INFINITY;
        assert!(matches!(ScalarField::new(g, v), Err(CdftError::NonFinite(_))));
    }

    #[test]
    fn integrates_constant_to_area() {
        let g = make_grid(8.0, 257).unwrap();
        assert_abs_diff_eq!(integrate(&ScalarField::constant(g, 1.0)), 256.0, epsilon = 1e-10);
    }

    #[test]
    fn integrates_normalized_gaussian() {
        let g = make_grid(8.0, 257).unwrap();
        let f = ScalarField::from_fn(g, |x, y| (-(x * x + y * y)).exp() / PI);
        assert_abs_diff_eq!(integrate(&f), 1.0, epsilon = 1e-6);
    }

    #[test]
    fn gaussian_second_moment() {
        let g = make_grid(8.0, 257).unwrap();
        let f = ScalarField::from_fn(g, |x, y| {
            let r2 = x * x + y * y;
            (-r2).exp() / PI * r2
        });
        assert_abs_diff_eq!(integrate(&f), 1.0, epsilon = 1e-4);
    }

    #[test]
    fn gradient_of_constant_vanishes() {
        let g = make_grid(3.0, 33).unwrap();
        let grad = gradient(&ScalarField::constant(g, 2.5));
        assert!(grad.x().iter().chain(grad.y()).all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn symmetric_gauge_curl_and_divergence() {
        let g = make_grid(8.0, 257).unwrap();
        let a = VectorField::symmetric_gauge(g, -1.0);
        assert!(interior_max(&curl_z(&a), |c| c + 1.0) < 1e-10);
        assert!(interior_max(&divergence(&a), |d| d) < 1e-10);
    }

    #[test]
    fn one_sided_stencils_are_exact_for_quadratics() {
        let g = make_grid(2.0, 21).unwrap();
        let f = ScalarField::from_fn(g, |x, y| 3.0 * x * x - x * y + 2.0 * y * y);
        let grad = gradient(&f);
        for idx in 0..g.len() {
            let (x, y) = g.position(idx);
            assert_abs_diff_eq!(grad.x()[idx], 6.0 * x - y, epsilon = 1e-10);
            assert_abs_diff_eq!(grad.y()[idx], -x + 4.0 * y, epsilon = 1e-10);
        }
        let lap = laplacian(&f);
        assert!(lap.values().iter().all(|v| (v - 10.0).abs() < 1e-8));
    }

    #[test]
    fn curl_of_gradient_vanishes() {
        let g = make_grid(4.0, 65).unwrap();
        let f = ScalarField::from_fn(g, |x, y| (0.7 * x).sin() * (0.3 * y).cos() + x * y * y);
        let c = curl_z(&gradient(&f));
        assert!(c.values().iter().all(|v| v.abs() < 1e-9));
    }

    #[test]
    fn laplacian_agrees_for_real_and_complex() {
        let g = make_grid(3.0, 31).unwrap();
        let f = ScalarField::from_fn(g, |x, y| (-(x * x + 2.0 * y * y)).exp());
        let real = laplacian(&f);
        let cplx = laplacian_complex(&ComplexField::from_real(&f));
        for (a, b) in real.values().iter().zip(cplx.values()) {
            assert_eq!(*a, b.re);
            assert_eq!(b.im, 0.0);
        }
    }

    #[test]
    fn integration_by_parts_is_second_order() {
        // f, g vanish at the boundary to round-off; measure C at two resolutions.
        let defect = |n: usize| {
            let g = make_grid(6.0, n).unwrap();
            let f = ScalarField::from_fn(g, |x, y| (-(x - 0.3).powi(2) - y * y).exp());
            let w = ScalarField::from_fn(g, |x, y| x * (-0.5 * (x * x + (y - 0.2).powi(2))).exp());
            let fx = gradient(&f);
            let wx = gradient(&w);
            let a = integrate(&f.zip_map(&ScalarField::new(g, wx.x().to_vec()).unwrap(), |p, q| p * q).unwrap());
            let b = integrate(&w.zip_map(&ScalarField::new(g, fx.x().to_vec()).unwrap(), |p, q| p * q).unwrap());
            ((a + b).abs(), g.spacing())
        };
        let (e1, h1) = defect(61);
        let (e2, h2) = defect(121);
        let c = e1 / (h1 * h1);
        assert!(c < 1.0, "C = {c}");
        assert!(e2 <= 1.1 * c * h2 * h2, "{e2} vs {}", c * h2 * h2);
    }

    #[test]
    fn mismatched_grids_are_rejected() {
        let a = ScalarField::zeros(make_grid(1.0, 16).unwrap());
        let b = ScalarField::zeros(make_grid(1.0, 17).unwrap());
        assert!(matches!(a.zip_map(&b, |p, _| p), Err(CdftError::GridMismatch)));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn quadrature_is_linear(a in -5.0..5.0f64, b in -5.0..5.0f64, k in 0.1..2.0f64) {
                let g = make_grid(3.0, 33).unwrap();
                let f = ScalarField::from_fn(g, |x, y| (k * x).sin() + y * y);
                let w = ScalarField::from_fn(g, |x, y| (-(x * x + y * y) * k).exp());
                let lhs = integrate(&f.zip_map(&w, |p, q| a * p + b * q).unwrap());
                let rhs = a * integrate(&f) + b * integrate(&w);
                prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()));
            }
        }
    }
}
