//! Cell-centred polar discretization of the unit disk.
//!
//! Radial nodes sit at `R_i = (i + 1/2) / n_r`, so neither the origin nor the
//! boundary circle is sampled; angular nodes are uniform, `θ_k = 2πk / n_θ`.
//! Integrals use the midpoint rule in `R` and the (periodic, hence spectrally
//! exact) trapezoid rule in `θ`.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mat2::Mat2;
use crate::par;

pub const MIN_NODES: usize = 8;

/// A point of the disk in polar coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub r: f64,
    pub theta: f64,
}

impl Point {
    pub fn new(r: f64, theta: f64) -> Self {
        Point { r, theta }
    }

    pub fn from_cartesian(x: f64, y: f64) -> Self {
        Point { r: x.hypot(y), theta: y.atan2(x) }
    }

    pub fn x(&self) -> f64 {
        self.r * self.theta.cos()
    }

    pub fn y(&self) -> f64 {
        self.r * self.theta.sin()
    }

    pub fn cartesian(&self) -> [f64; 2] {
        [self.x(), self.y()]
    }
}

/// Integration measure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Weight {
    /// Area element `dx = R dR dθ`.
    Dx,
    /// Singular measure `dx / R² = R⁻¹ dR dθ`.
    DxOverR2,
}

struct GridInner {
    n_r: usize,
    n_theta: usize,
    radii: Vec<f64>,
    thetas: Vec<f64>,
    cos: Vec<f64>,
    sin: Vec<f64>,
    w_dx: Vec<f64>,
    w_r2: Vec<f64>,
    fft_forward: Arc<dyn Fft<f64>>,
    fft_inverse: Arc<dyn Fft<f64>>,
}

#[derive(Clone)]
pub struct PolarGrid {
    inner: Arc<GridInner>,
}

impl fmt::Debug for PolarGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PolarGrid({}x{})", self.n_r(), self.n_theta())
    }
}

impl PartialEq for PolarGrid {
    fn eq(&self, other: &Self) -> bool {
        self.n_r() == other.n_r() && self.n_theta() == other.n_theta()
    }
}

impl PolarGrid {
    pub fn new(n_r: usize, n_theta: usize) -> Result<Self> {
        if n_r < MIN_NODES || n_theta < MIN_NODES {
            return Err(Error::InvalidGrid(format!(
                "n_r = {n_r}, n_theta = {n_theta}; both must be at least {MIN_NODES}"
            )));
        }
        if n_theta % 2 != 0 {
            return Err(Error::InvalidGrid(format!("n_theta = {n_theta} must be even")));
        }
        let dr = 1.0 / n_r as f64;
        let dtheta = 2.0 * PI / n_theta as f64;
        let radii: Vec<f64> = (0..n_r).map(|i| (i as f64 + 0.5) * dr).collect();
        let thetas: Vec<f64> = (0..n_theta).map(|k| k as f64 * dtheta).collect();
        let cos = thetas.iter().map(|t| t.cos()).collect();
        let sin = thetas.iter().map(|t| t.sin()).collect();
        let w_dx = radii.iter().map(|r| r * dr * dtheta).collect();
        let w_r2 = radii.iter().map(|r| dr * dtheta / r).collect();
        let mut planner = FftPlanner::new();
        let fft_forward = planner.plan_fft_forward(n_theta);
        let fft_inverse = planner.plan_fft_inverse(n_theta);
        Ok(PolarGrid {
            inner: Arc::new(GridInner {
                n_r,
                n_theta,
                radii,
                thetas,
                cos,
                sin,
                w_dx,
                w_r2,
                fft_forward,
                fft_inverse,
            }),
        })
    }

    pub fn n_r(&self) -> usize {
        self.inner.n_r
    }

    pub fn n_theta(&self) -> usize {
        self.inner.n_theta
    }

    pub fn len(&self) -> usize {
        self.n_r() * self.n_theta()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dr(&self) -> f64 {
        1.0 / self.n_r() as f64
    }

    pub fn dtheta(&self) -> f64 {
        2.0 * PI / self.n_theta() as f64
    }

    pub fn radii(&self) -> &[f64] {
        &self.inner.radii
    }

    pub fn thetas(&self) -> &[f64] {
        &self.inner.thetas
    }

    pub fn radius(&self, i: usize) -> f64 {
        self.inner.radii[i]
    }

    pub fn theta(&self, k: usize) -> f64 {
        self.inner.thetas[k]
    }

    pub fn cos_theta(&self, k: usize) -> f64 {
        self.inner.cos[k]
    }

    pub fn sin_theta(&self, k: usize) -> f64 {
        self.inner.sin[k]
    }

    pub fn point(&self, i: usize, k: usize) -> Point {
        Point::new(self.radius(i), self.theta(k))
    }

    #[inline]
    pub fn idx(&self, i: usize, k: usize) -> usize {
        i * self.n_theta() + k
    }

    /// `(i, k)` of a flat index.
    #[inline]
    pub fn node(&self, idx: usize) -> (usize, usize) {
        (idx / self.n_theta(), idx % self.n_theta())
    }

    /// Quadrature weight of a node in row `i`.
    pub fn weight(&self, i: usize, weight: Weight) -> f64 {
        match weight {
            Weight::Dx => self.inner.w_dx[i],
            Weight::DxOverR2 => self.inner.w_r2[i],
        }
    }

    /// Largest angular mode a spectrum on this grid may carry (`J < n_θ/2`).
    pub fn max_mode(&self) -> usize {
        self.n_theta() / 2 - 1
    }

    /// Largest mode a generated variation may carry so that pointwise
    /// products of two such fields stay resolved (`n_θ ≥ 4 J`).
    pub fn max_product_mode(&self) -> usize {
        self.n_theta() / 4
    }

    pub(crate) fn fft_forward(&self) -> &Arc<dyn Fft<f64>> {
        &self.inner.fft_forward
    }

    pub(crate) fn fft_inverse(&self) -> &Arc<dyn Fft<f64>> {
        &self.inner.fft_inverse
    }

    pub(crate) fn check_same(&self, other: &PolarGrid, what: &str) -> Result<()> {
        if self != other {
            return Err(Error::GridMismatch(format!(
                "{what}: {self:?} vs {other:?}"
            )));
        }
        Ok(())
    }

    /// Quadrature of a flat array of node values. Non-finite values are an error.
    pub fn integrate_values(&self, values: &[f64], weight: Weight) -> Result<f64> {
        debug_assert_eq!(values.len(), self.len());
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            let (i, k) = self.node(pos);
            return Err(Error::NonFinite { what: "integrand".into(), i, k });
        }
        Ok(self.integrate_unchecked(values, weight))
    }

    pub(crate) fn integrate_unchecked(&self, values: &[f64], weight: Weight) -> f64 {
        let nt = self.n_theta();
        par::sum_rows(self.n_r(), |i| {
            let row: f64 = values[i * nt..(i + 1) * nt].iter().sum();
            row * self.weight(i, weight)
        })
    }

    pub fn sample_scalar<F>(&self, f: F) -> Result<ScalarField>
    where
        F: Fn(Point) -> f64 + Sync + Send,
    {
        let mut values = vec![0.0; self.len()];
        par::fill_rows(&mut values, self.n_theta(), |i, row| {
            for (k, v) in row.iter_mut().enumerate() {
                *v = f(self.point(i, k));
            }
        });
        ScalarField::new(self.clone(), values)
    }

    pub fn sample_vector<F>(&self, f: F) -> Result<VectorField>
    where
        F: Fn(Point) -> [f64; 2] + Sync + Send,
    {
        let pairs = self.sample_nodes(|i, k| f(self.point(i, k)));
        let (c1, c2) = pairs.into_iter().map(|[a, b]| (a, b)).unzip();
        VectorField::new(self.clone(), c1, c2)
    }

    pub fn sample_matrix<F>(&self, f: F) -> Result<MatrixField>
    where
        F: Fn(Point) -> Mat2 + Sync + Send,
    {
        let values = self.sample_nodes(|i, k| f(self.point(i, k)));
        MatrixField::new(self.clone(), values)
    }

    /// Evaluate `f(i, k)` at every node, row-major.
    pub(crate) fn sample_nodes<T, F>(&self, f: F) -> Vec<T>
    where
        T: Send + Default + Clone,
        F: Fn(usize, usize) -> T + Sync + Send,
    {
        let mut out = vec![T::default(); self.len()];
        par::fill_rows(&mut out, self.n_theta(), |i, row| {
            for (k, v) in row.iter_mut().enumerate() {
                *v = f(i, k);
            }
        });
        out
    }
}

fn check_finite(grid: &PolarGrid, values: &[f64], what: &str) -> Result<()> {
    if values.len() != grid.len() {
        return Err(Error::GridMismatch(format!(
            "{what}: {} values for {grid:?} ({} nodes)",
            values.len(),
            grid.len()
        )));
    }
    if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
        let (i, k) = grid.node(pos);
        return Err(Error::NonFinite { what: what.into(), i, k });
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: PolarGrid,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: PolarGrid, values: Vec<f64>) -> Result<Self> {
        check_finite(&grid, &values, "scalar field")?;
        Ok(ScalarField { grid, values })
    }

    pub(crate) fn from_raw(grid: PolarGrid, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        ScalarField { grid, values }
    }

    pub fn constant(grid: &PolarGrid, c: f64) -> Self {
        ScalarField::from_raw(grid.clone(), vec![c; grid.len()])
    }

    pub fn zeros(grid: &PolarGrid) -> Self {
        ScalarField::constant(grid, 0.0)
    }

    pub fn grid(&self) -> &PolarGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn at(&self, i: usize, k: usize) -> f64 {
        self.values[self.grid.idx(i, k)]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let nt = self.grid.n_theta();
        &self.values[i * nt..(i + 1) * nt]
    }

    pub fn map(&self, f: impl Fn(f64) -> f64 + Sync + Send) -> ScalarField {
        let values = par::map_range(self.values.len(), |j| f(self.values[j]));
        ScalarField::from_raw(self.grid.clone(), values)
    }

    pub fn zip_map(&self, other: &ScalarField, f: impl Fn(f64, f64) -> f64 + Sync + Send) -> Result<ScalarField> {
        self.grid.check_same(&other.grid, "zip_map")?;
        let values = par::map_range(self.values.len(), |j| f(self.values[j], other.values[j]));
        Ok(ScalarField::from_raw(self.grid.clone(), values))
    }

    pub fn scale(&self, s: f64) -> ScalarField {
        self.map(|v| v * s)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `∫ f dμ` for the chosen measure.
    pub fn integrate(&self, weight: Weight) -> Result<f64> {
        self.grid.integrate_values(&self.values, weight)
    }
}

/// Cartesian components of a planar vector field on polar nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    grid: PolarGrid,
    c1: Vec<f64>,
    c2: Vec<f64>,
}

impl VectorField {
    pub fn new(grid: PolarGrid, c1: Vec<f64>, c2: Vec<f64>) -> Result<Self> {
        check_finite(&grid, &c1, "vector field c1")?;
        check_finite(&grid, &c2, "vector field c2")?;
        Ok(VectorField { grid, c1, c2 })
    }

    pub(crate) fn from_raw(grid: PolarGrid, c1: Vec<f64>, c2: Vec<f64>) -> Self {
        debug_assert!(c1.len() == grid.len() && c2.len() == grid.len());
        VectorField { grid, c1, c2 }
    }

    pub fn zeros(grid: &PolarGrid) -> Self {
        VectorField::from_raw(grid.clone(), vec![0.0; grid.len()], vec![0.0; grid.len()])
    }

    pub fn from_components(a: ScalarField, b: ScalarField) -> Result<Self> {
        a.grid.check_same(&b.grid, "from_components")?;
        Ok(VectorField::from_raw(a.grid, a.values, b.values))
    }

    pub fn grid(&self) -> &PolarGrid {
        &self.grid
    }

    pub fn c1(&self) -> &[f64] {
        &self.c1
    }

    pub fn c2(&self) -> &[f64] {
        &self.c2
    }

    pub fn component(&self, c: usize) -> &[f64] {
        match c {
            0 => &self.c1,
            1 => &self.c2,
            _ => panic!("vector component {c} out of range"),
        }
    }

    pub fn component_field(&self, c: usize) -> ScalarField {
        ScalarField::from_raw(self.grid.clone(), self.component(c).to_vec())
    }

    pub fn at(&self, i: usize, k: usize) -> [f64; 2] {
        let j = self.grid.idx(i, k);
        [self.c1[j], self.c2[j]]
    }

    pub fn map_components(&self, f: impl Fn(&[f64]) -> Vec<f64>) -> VectorField {
        VectorField::from_raw(self.grid.clone(), f(&self.c1), f(&self.c2))
    }

    pub fn add(&self, other: &VectorField) -> Result<VectorField> {
        self.combine(other, 1.0, 1.0)
    }

    pub fn sub(&self, other: &VectorField) -> Result<VectorField> {
        self.combine(other, 1.0, -1.0)
    }

    /// `α·self + β·other`.
    pub fn combine(&self, other: &VectorField, alpha: f64, beta: f64) -> Result<VectorField> {
        self.grid.check_same(&other.grid, "vector combine")?;
        let mix = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| alpha * x + beta * y).collect();
        Ok(VectorField::from_raw(self.grid.clone(), mix(&self.c1, &other.c1), mix(&self.c2, &other.c2)))
    }

    pub fn scale(&self, s: f64) -> VectorField {
        self.map_components(|c| c.iter().map(|v| v * s).collect())
    }

    /// Pointwise product with a scalar field.
    pub fn mul_scalar(&self, s: &ScalarField) -> Result<VectorField> {
        self.grid.check_same(s.grid(), "mul_scalar")?;
        let sv = s.values();
        Ok(self.map_components(|c| c.iter().zip(sv).map(|(a, b)| a * b).collect()))
    }

    /// Pointwise `|v|²`.
    pub fn norm_sq(&self) -> ScalarField {
        let values = self.c1.iter().zip(&self.c2).map(|(a, b)| a * a + b * b).collect();
        ScalarField::from_raw(self.grid.clone(), values)
    }

    pub fn max_abs(&self) -> f64 {
        self.c1.iter().chain(&self.c2).fold(0.0, |m, v| m.max(v.abs()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatrixField {
    grid: PolarGrid,
    values: Vec<Mat2>,
}

impl MatrixField {
    pub fn new(grid: PolarGrid, values: Vec<Mat2>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "matrix field: {} values for {grid:?}",
                values.len()
            )));
        }
        if let Some(pos) = values.iter().position(|m| !m.is_finite()) {
            let (i, k) = grid.node(pos);
            return Err(Error::NonFinite { what: "matrix field".into(), i, k });
        }
        Ok(MatrixField { grid, values })
    }

    pub(crate) fn from_raw(grid: PolarGrid, values: Vec<Mat2>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        MatrixField { grid, values }
    }

    pub fn grid(&self) -> &PolarGrid {
        &self.grid
    }

    pub fn values(&self) -> &[Mat2] {
        &self.values
    }

    pub fn at(&self, i: usize, k: usize) -> Mat2 {
        self.values[self.grid.idx(i, k)]
    }

    pub fn map_scalar(&self, f: impl Fn(&Mat2) -> f64 + Sync + Send) -> ScalarField {
        let values = par::map_range(self.values.len(), |j| f(&self.values[j]));
        ScalarField::from_raw(self.grid.clone(), values)
    }

    pub fn map(&self, f: impl Fn(&Mat2) -> Mat2 + Sync + Send) -> MatrixField {
        let values = par::map_range(self.values.len(), |j| f(&self.values[j]));
        MatrixField::from_raw(self.grid.clone(), values)
    }

    pub fn add(&self, other: &MatrixField) -> Result<MatrixField> {
        self.grid.check_same(&other.grid, "matrix add")?;
        let values = self.values.iter().zip(&other.values).map(|(a, b)| *a + *b).collect();
        Ok(MatrixField::from_raw(self.grid.clone(), values))
    }

    /// Entry `(row, col)` as a flat array.
    pub fn entry(&self, row: usize, col: usize) -> Vec<f64> {
        self.values
            .iter()
            .map(|m| match (row, col) {
                (0, 0) => m.a11,
                (0, 1) => m.a12,
                (1, 0) => m.a21,
                (1, 1) => m.a22,
                _ => panic!("matrix entry ({row}, {col}) out of range"),
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn node_layout() {
        let g = PolarGrid::new(8, 16).unwrap();
        assert_eq!(g.radius(0), 1.0 / 16.0);
        assert!((g.theta(1) - PI / 8.0).abs() < 1e-15);
        assert_eq!(PolarGrid::new(64, 256).unwrap().len(), 16384);
        for &r in g.radii() {
            assert!(r > 0.0 && r < 1.0);
        }
    }

    #[test]
    fn rejects_bad_sizes() {
        assert!(PolarGrid::new(8, 15).is_err());
        assert!(PolarGrid::new(7, 16).is_err());
        assert!(PolarGrid::new(8, 6).is_err());
    }

    #[test]
    fn area_of_disk() {
        let g = PolarGrid::new(256, 256).unwrap();
        let one = ScalarField::constant(&g, 1.0);
        let area = one.integrate(Weight::Dx).unwrap();
        assert!((area - PI).abs() / PI < 1e-6);
        assert_eq!(ScalarField::zeros(&g).integrate(Weight::Dx).unwrap(), 0.0);
    }

    #[test]
    fn singular_weight_on_annulus() {
        let g = PolarGrid::new(256, 256).unwrap();
        let f = g
            .sample_scalar(|p| if (0.25..=0.75).contains(&p.r) { 1.0 } else { 0.0 })
            .unwrap();
        let v = f.integrate(Weight::DxOverR2).unwrap();
        assert!((v - 2.0 * PI * 3f64.ln()).abs() < 1e-3, "{v}");
    }

    #[test]
    fn harmonics_integrate_to_zero() {
        let g = PolarGrid::new(64, 64).unwrap();
        for j in 1..32 {
            let f = g
                .sample_scalar(|p| (j as f64 * p.theta).cos() * (1.0 + p.r * p.r))
                .unwrap();
            assert!(f.integrate(Weight::Dx).unwrap().abs() < 1e-12);
        }
    }

    #[test]
    fn quadrature_converges_quadratically() {
        // Midpoint rule in R for ∫ R^3 dR is second order.
        let err = |n: usize| {
            let g = PolarGrid::new(n, 16).unwrap();
            let f = g.sample_scalar(|p| p.r * p.r).unwrap();
            (f.integrate(Weight::Dx).unwrap() - PI / 2.0).abs()
        };
        let ratio = err(32) / err(64);
        assert!((ratio - 4.0).abs() < 0.1, "ratio {ratio}");
    }

    #[test]
    fn non_finite_rejected() {
        let g = PolarGrid::new(8, 8).unwrap();
        let mut v = vec![0.0; g.len()];
        v[9] = f64::NAN;
        assert!(matches!(
            ScalarField::new(g.clone(), v.clone()),
            Err(Error::NonFinite { i: 1, k: 1, .. })
        ));
        assert!(g.integrate_values(&v, Weight::Dx).is_err());
    }

    #[test]
    fn sampling_examples() {
        let g = PolarGrid::new(16, 32).unwrap();
        let id = g.sample_vector(|p| p.cartesian()).unwrap();
        assert!((id.at(3, 5)[0] - g.radius(3) * g.theta(5).cos()).abs() < 1e-15);
        let s = g.sample_scalar(|p| p.theta.cos().exp()).unwrap();
        assert!((s.max() - 1f64.exp()).abs() < 1e-15);
        assert!((s.at(0, 0) - 1f64.exp()).abs() < 1e-15);
        let bump = g
            .sample_scalar(|p| if p.r > 0.25 && p.r < 0.75 { ((p.r - 0.25) * (0.75 - p.r)).powi(2) } else { 0.0 })
            .unwrap();
        for i in 0..g.n_r() {
            if g.radius(i) <= 0.25 {
                assert!(bump.row(i).iter().all(|&v| v == 0.0));
            }
        }
    }
}
