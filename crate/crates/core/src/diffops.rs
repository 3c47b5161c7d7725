//! Polar-frame differential operators.
//!
//! `∂_θ` is spectral (exact below Nyquist); `∂_R` uses fourth-order central
//! differences with fourth-order one-sided stencils in the two cells nearest
//! each radial end. Cartesian derivatives follow from
//!
//! ```text
//! ∂_x = cos θ ∂_R − (sin θ / R) ∂_θ,   ∂_y = sin θ ∂_R + (cos θ / R) ∂_θ
//! ```
//!
//! and the gradient of a map is `∇u = u,_R ⊗ e_R + R⁻¹ u,_θ ⊗ e_θ`.

use serde::Serialize;

use crate::error::Result;
use crate::fourier::{d_theta_values, Components};
use crate::grid::{MatrixField, PolarGrid, ScalarField, VectorField, Weight};
use crate::mat2::Mat2;
use crate::par;

/// `∂_R` of every θ-column.
pub fn d_r_values(grid: &PolarGrid, values: &[f64]) -> Vec<f64> {
    let n = grid.n_r();
    let nt = grid.n_theta();
    let inv = 1.0 / (12.0 * grid.dr());
    let mut out = vec![0.0; values.len()];
    par::fill_rows(&mut out, nt, |i, row| {
        let f = |s: usize, k: usize| values[s * nt + k];
        for (k, o) in row.iter_mut().enumerate() {
            *o = inv
                * match i {
                    0 => -25.0 * f(0, k) + 48.0 * f(1, k) - 36.0 * f(2, k) + 16.0 * f(3, k) - 3.0 * f(4, k),
                    1 => -3.0 * f(0, k) - 10.0 * f(1, k) + 18.0 * f(2, k) - 6.0 * f(3, k) + f(4, k),
                    _ if i == n - 2 => {
                        3.0 * f(n - 1, k) + 10.0 * f(n - 2, k) - 18.0 * f(n - 3, k) + 6.0 * f(n - 4, k)
                            - f(n - 5, k)
                    }
                    _ if i == n - 1 => {
                        25.0 * f(n - 1, k) - 48.0 * f(n - 2, k) + 36.0 * f(n - 3, k) - 16.0 * f(n - 4, k)
                            + 3.0 * f(n - 5, k)
                    }
                    _ => f(i - 2, k) - 8.0 * f(i - 1, k) + 8.0 * f(i + 1, k) - f(i + 2, k),
                };
        }
    });
    out
}

/// `(∂_R f, ∂_θ f)` of a flat node array.
pub fn polar_partials(grid: &PolarGrid, values: &[f64]) -> (Vec<f64>, Vec<f64>) {
    (d_r_values(grid, values), d_theta_values(grid, values))
}

/// `(∂_x f, ∂_y f)` of a flat node array.
pub fn cartesian_partials(grid: &PolarGrid, values: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let (fr, ft) = polar_partials(grid, values);
    let dx = grid.sample_nodes(|i, k| {
        let j = grid.idx(i, k);
        grid.cos_theta(k) * fr[j] - grid.sin_theta(k) * ft[j] / grid.radius(i)
    });
    let dy = grid.sample_nodes(|i, k| {
        let j = grid.idx(i, k);
        grid.sin_theta(k) * fr[j] + grid.cos_theta(k) * ft[j] / grid.radius(i)
    });
    (dx, dy)
}

/// Cartesian 2×2 gradient, `(∇u)_{ab} = ∂u_a / ∂x_b`.
pub fn gradient(u: &VectorField) -> MatrixField {
    let grid = u.grid();
    let (u1x, u1y) = cartesian_partials(grid, u.c1());
    let (u2x, u2y) = cartesian_partials(grid, u.c2());
    let values = grid.sample_nodes(|i, k| {
        let j = grid.idx(i, k);
        Mat2::new(u1x[j], u1y[j], u2x[j], u2y[j])
    });
    MatrixField::from_raw(grid.clone(), values)
}

/// Gradient of a scalar field in Cartesian and scaled polar form.
#[derive(Debug, Clone)]
pub struct ScalarGradient {
    /// `∇λ` with Cartesian components.
    pub cartesian: VectorField,
    /// `R ∇λ` in the polar frame: `(R λ,_R, λ,_θ)` per node.
    pub scaled_polar: VectorField,
}

pub fn scalar_gradient(lambda: &ScalarField) -> ScalarGradient {
    let grid = lambda.grid();
    let (lr, lt) = polar_partials(grid, lambda.values());
    let r_lr = grid.sample_nodes(|i, k| grid.radius(i) * lr[grid.idx(i, k)]);
    let scaled_polar = VectorField::from_raw(grid.clone(), r_lr, lt);
    let cartesian = polar_to_cartesian_scaled(&scaled_polar);
    ScalarGradient { cartesian, scaled_polar }
}

/// Convert a Cartesian vector field `g` into `(R g·e_R, R g·e_θ)`.
pub fn scaled_polar(g: &VectorField) -> VectorField {
    let grid = g.grid();
    let yr = grid.sample_nodes(|i, k| {
        let j = grid.idx(i, k);
        grid.radius(i) * (grid.cos_theta(k) * g.c1()[j] + grid.sin_theta(k) * g.c2()[j])
    });
    let yt = grid.sample_nodes(|i, k| {
        let j = grid.idx(i, k);
        grid.radius(i) * (-grid.sin_theta(k) * g.c1()[j] + grid.cos_theta(k) * g.c2()[j])
    });
    VectorField::from_raw(grid.clone(), yr, yt)
}

/// Inverse of [`scaled_polar`].
pub fn polar_to_cartesian_scaled(p: &VectorField) -> VectorField {
    let grid = p.grid();
    let (yr, yt) = (p.c1(), p.c2());
    let c1 = grid.sample_nodes(|i, k| {
        let j = grid.idx(i, k);
        (grid.cos_theta(k) * yr[j] - grid.sin_theta(k) * yt[j]) / grid.radius(i)
    });
    let c2 = grid.sample_nodes(|i, k| {
        let j = grid.idx(i, k);
        (grid.sin_theta(k) * yr[j] + grid.cos_theta(k) * yt[j]) / grid.radius(i)
    });
    VectorField::from_raw(grid.clone(), c1, c2)
}

pub fn cof(a: &MatrixField) -> MatrixField {
    a.map(Mat2::cof)
}

pub fn det(a: &MatrixField) -> ScalarField {
    a.map_scalar(Mat2::det)
}

/// Pointwise Frobenius inner product.
pub fn matrix_dot(a: &MatrixField, b: &MatrixField) -> Result<ScalarField> {
    a.grid().check_same(b.grid(), "matrix_dot")?;
    let (av, bv) = (a.values(), b.values());
    let values = par::map_range(av.len(), |j| av[j].dot(&bv[j]));
    Ok(ScalarField::from_raw(a.grid().clone(), values))
}

/// Row-wise divergence, `(div M)_a = ∂_b M_{ab}`.
pub fn divergence_matrix(m: &MatrixField) -> VectorField {
    let grid = m.grid();
    let (d11, _) = cartesian_partials(grid, &m.entry(0, 0));
    let (_, d12) = cartesian_partials(grid, &m.entry(0, 1));
    let (d21, _) = cartesian_partials(grid, &m.entry(1, 0));
    let (_, d22) = cartesian_partials(grid, &m.entry(1, 1));
    let c1 = d11.iter().zip(&d12).map(|(a, b)| a + b).collect();
    let c2 = d21.iter().zip(&d22).map(|(a, b)| a + b).collect();
    VectorField::from_raw(grid.clone(), c1, c2)
}

/// Scalar curl `∂_x g_2 − ∂_y g_1`, evaluated as `R⁻¹ (∂_R(R g_θ) − ∂_θ g_R)`.
pub fn curl(g: &VectorField) -> ScalarField {
    let grid = g.grid();
    let sp = scaled_polar(g);
    // sp = (R g_R, R g_θ)
    let d_rgt = d_r_values(grid, sp.c2());
    let g_r: Vec<f64> = grid.sample_nodes(|i, k| sp.c1()[grid.idx(i, k)] / grid.radius(i));
    let dt_gr = d_theta_values(grid, &g_r);
    let values = grid.sample_nodes(|i, k| {
        let j = grid.idx(i, k);
        (d_rgt[j] - dt_gr[j]) / grid.radius(i)
    });
    ScalarField::from_raw(grid.clone(), values)
}

/// `‖f‖_{L²(μ)} = (∫ |f|² dμ)^{1/2}` for scalar or vector fields.
pub fn weighted_norm<F: Components>(f: &F, weight: Weight) -> Result<f64> {
    let grid = f.grid();
    let comps = f.component_slices();
    let sq: Vec<f64> = (0..grid.len())
        .map(|j| comps.iter().map(|c| c[j] * c[j]).sum())
        .collect();
    Ok(grid.integrate_values(&sq, weight)?.sqrt())
}

/// `‖A‖_{L²(μ)}` of a matrix field (Frobenius pointwise).
pub fn matrix_norm(a: &MatrixField, weight: Weight) -> Result<f64> {
    let sq = a.map_scalar(Mat2::norm_sq);
    Ok(sq.integrate(weight)?.sqrt())
}

/// Components of a vector in the local frame `(e_R, e_θ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PolarVector {
    pub y_r: f64,
    pub y_theta: f64,
}

impl PolarVector {
    pub fn new(y_r: f64, y_theta: f64) -> Self {
        PolarVector { y_r, y_theta }
    }

    /// `|y|_∞ = max(|y_R|, |y_θ|)`.
    pub fn maxnorm(&self) -> f64 {
        polar_maxnorm(self.y_r, self.y_theta)
    }
}

/// Absolute values are taken so that `|y · z| ≤ |y|_∞ |z|_1` holds.
pub fn polar_maxnorm(y_r: f64, y_theta: f64) -> f64 {
    y_r.abs().max(y_theta.abs())
}

/// Pointwise `|y|_∞` of a field of polar pairs.
pub fn polar_maxnorm_field(p: &VectorField) -> ScalarField {
    let values = p.c1().iter().zip(p.c2()).map(|(a, b)| polar_maxnorm(*a, *b)).collect();
    ScalarField::from_raw(p.grid().clone(), values)
}

/// `∫ cof ∇u · ∇η dx`, which vanishes for compactly supported `η`
/// (weak form of `div cof ∇u = 0`).
pub fn weak_piola(grad_u: &MatrixField, eta: &VectorField) -> Result<f64> {
    let grad_eta = gradient(eta);
    let integrand = matrix_dot(&cof(grad_u), &grad_eta)?;
    integrand.integrate(Weight::Dx)
}
