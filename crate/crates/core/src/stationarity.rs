//! Weak Euler–Lagrange residuals and pressure recovery.
//!
//! For a stress field `S` the residual against a test field `η` is
//! `r(η) = ∫ S · ∇η dx`, with
//!
//! ```text
//! incompressible:  S = p ν |∇u|^{p−2} ∇u + p λ cof ∇u
//! compressible:    S = ν |∇u|^{p−2} ∇u + ∂_ξΨ + ∂_dΨ cof ∇u
//! ```
//!
//! and is reported divided by `‖∇η‖_{L²} (1 + ‖σ‖²_∞)`, `σ² = ν |∇u|^{p−2}`.

use std::f64::consts::TAU;

use rustfft::num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::diffops::{cof, curl, divergence_matrix, gradient, matrix_dot, matrix_norm, scaled_polar};
use crate::energies::{pow_m2, stiffness, Integrand, PDirichletSpec, PolyconvexSpec, Setting};
use crate::error::{Error, Result};
use crate::fourier::{forward_row, inverse_row};
use crate::grid::{MatrixField, PolarGrid, ScalarField, VectorField, Weight};
use crate::mat2::Mat2;
use crate::par;

pub const DEFAULT_DET_TOL: f64 = 1e-6;
pub const DEFAULT_CURL_TOL: f64 = 1e-4;

/// A map with its integrand and, in the incompressible setting, a pressure.
#[derive(Debug, Clone)]
pub struct StationaryCandidate {
    pub u: VectorField,
    pub integrand: Integrand,
    pub pressure: Option<ScalarField>,
    /// Cartesian `∇λ`, when supplied separately from `λ`.
    pub pressure_gradient: Option<VectorField>,
}

/// `max |det ∇u − 1|` over all nodes.
pub fn det_deviation(grad: &MatrixField) -> f64 {
    grad.values().iter().map(|m| (m.det() - 1.0).abs()).fold(0.0, f64::max)
}

impl StationaryCandidate {
    /// Incompressible candidate; `det ∇u = 1` is checked to `det_tol`.
    pub fn incompressible(
        u: VectorField,
        spec: PDirichletSpec,
        pressure: Option<ScalarField>,
        det_tol: f64,
    ) -> Result<Self> {
        spec.grid().check_same(u.grid(), "candidate")?;
        if let Some(l) = &pressure {
            spec.grid().check_same(l.grid(), "pressure")?;
        }
        let max_dev = det_deviation(&gradient(&u));
        if !(max_dev <= det_tol) {
            return Err(Error::DetConstraint { max_dev, tol: det_tol });
        }
        Ok(StationaryCandidate { u, integrand: Integrand::PDirichlet(spec), pressure, pressure_gradient: None })
    }

    pub fn compressible(u: VectorField, spec: PolyconvexSpec) -> Result<Self> {
        spec.grid().check_same(u.grid(), "candidate")?;
        Ok(StationaryCandidate { u, integrand: Integrand::Polyconvex(spec), pressure: None, pressure_gradient: None })
    }

    /// Attach a pressure known only through its gradient; `λ` is obtained by
    /// path integration from the default base node.
    pub fn with_pressure_gradient(mut self, g: VectorField, curl_tol: f64) -> Result<Self> {
        let base = default_base(g.grid());
        let lambda = integrate_pressure(&g, base, curl_tol)?.lambda;
        self.pressure = Some(lambda);
        self.pressure_gradient = Some(g);
        Ok(self)
    }

    pub fn setting(&self) -> Setting {
        self.integrand.setting()
    }

    pub fn grid(&self) -> &PolarGrid {
        self.u.grid()
    }
}

/// Compactly supported test fields `ζ_q(R) {cos jθ, sin jθ} e_c`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TestBasis {
    pub max_mode: usize,
    pub radial: usize,
    pub r0: f64,
    pub r1: f64,
}

impl Default for TestBasis {
    fn default() -> Self {
        TestBasis { max_mode: 8, radial: 4, r0: 0.1, r1: 0.9 }
    }
}

/// Identification of one test field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct TestField {
    pub j: usize,
    pub q: usize,
    pub sine: bool,
    pub component: usize,
}

/// `(4 (R − r0)(r1 − R) / (r1 − r0)²)⁴` on `[r0, r1]`, zero outside. Vanishes
/// to fourth order at both ends.
pub fn bump(r: f64, r0: f64, r1: f64) -> f64 {
    if r <= r0 || r >= r1 {
        return 0.0;
    }
    let b = 4.0 * (r - r0) * (r1 - r) / ((r1 - r0) * (r1 - r0));
    let b2 = b * b;
    b2 * b2
}

impl TestBasis {
    pub fn validate(&self) -> Result<()> {
        if !(0.0 < self.r0 && self.r0 < self.r1 && self.r1 < 1.0) || self.radial == 0 {
            return Err(Error::InvalidArgument(format!("bad test basis {self:?}")));
        }
        Ok(())
    }

    pub fn fields(&self) -> Vec<TestField> {
        let mut out = Vec::new();
        for j in 0..=self.max_mode {
            for sine in [false, true] {
                if j == 0 && sine {
                    continue;
                }
                for q in 1..=self.radial {
                    for component in 0..2 {
                        out.push(TestField { j, q, sine, component });
                    }
                }
            }
        }
        out
    }

    /// `ζ_q(R) = bump(R) s^{q−1}` with `s` the support mapped to `[−1, 1]`.
    pub fn radial_profile(&self, q: usize, r: f64) -> f64 {
        let s = (2.0 * r - self.r0 - self.r1) / (self.r1 - self.r0);
        bump(r, self.r0, self.r1) * s.powi(q as i32 - 1)
    }

    pub fn sample(&self, grid: &PolarGrid, f: TestField) -> Result<VectorField> {
        grid.sample_vector(|x| {
            let a = f.j as f64 * x.theta;
            let v = self.radial_profile(f.q, x.r) * if f.sine { a.sin() } else { a.cos() };
            if f.component == 0 {
                [v, 0.0]
            } else {
                [0.0, v]
            }
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TestResidual {
    pub field: TestField,
    pub raw: f64,
    pub normalized: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResidualReport {
    pub setting: Setting,
    pub basis: TestBasis,
    pub residuals: Vec<TestResidual>,
    pub max_normalized: f64,
    pub worst: Option<TestField>,
}

impl ResidualReport {
    pub fn passes(&self, tol: f64) -> bool {
        self.max_normalized <= tol
    }
}

/// `r(η) = ∫ S · ∇η dx` over the basis, divided by `‖∇η‖ (1 + ‖σ‖²_∞)`.
pub fn weak_residual(stress: &MatrixField, sigma_sq: &ScalarField, basis: &TestBasis, setting: Setting) -> Result<ResidualReport> {
    basis.validate()?;
    let grid = stress.grid();
    let scale = 1.0 + sigma_sq.max_abs();
    let fields = basis.fields();
    let results = par::map_range(fields.len(), |t| -> Result<TestResidual> {
        let f = fields[t];
        let grad_eta = gradient(&basis.sample(grid, f)?);
        let raw = matrix_dot(stress, &grad_eta)?.integrate(Weight::Dx)?;
        let norm = matrix_norm(&grad_eta, Weight::Dx)?;
        Ok(TestResidual { field: f, raw, normalized: raw.abs() / (norm * scale) })
    });
    let residuals = results.into_iter().collect::<Result<Vec<_>>>()?;
    let (max_normalized, worst) = residuals.iter().fold((0.0, None), |(m, w), r| {
        if r.normalized > m {
            (r.normalized, Some(r.field))
        } else {
            (m, w)
        }
    });
    Ok(ResidualReport { setting, basis: *basis, residuals, max_normalized, worst })
}

/// `p ν |∇u|^{p−2} ∇u + p λ cof ∇u`.
pub fn incompressible_stress(grad: &MatrixField, spec: &PDirichletSpec, lambda: &ScalarField) -> Result<MatrixField> {
    let grid = spec.grid();
    grid.check_same(grad.grid(), "stress")?;
    grid.check_same(lambda.grid(), "stress")?;
    let (g, nu, l) = (grad.values(), spec.nu.values(), lambda.values());
    let p = spec.p;
    let values = par::map_range(grid.len(), |j| g[j] * (p * nu[j] * pow_m2(g[j].norm_sq(), p)) + g[j].cof() * (p * l[j]));
    MatrixField::new(grid.clone(), values)
}

/// `ν |∇u|^{p−2} ∇u + ∂_ξΨ + ∂_dΨ cof ∇u`.
pub fn compressible_stress(grad: &MatrixField, spec: &PolyconvexSpec) -> Result<MatrixField> {
    let grid = spec.grid();
    grid.check_same(grad.grid(), "stress")?;
    let (g, nu) = (grad.values(), spec.nu.values());
    let p = spec.p;
    let values = par::map_range(grid.len(), |j| {
        let (i, k) = grid.node(j);
        let e = spec.psi.eval(grid.point(i, k), &g[j], g[j].det());
        g[j] * (nu[j] * pow_m2(g[j].norm_sq(), p)) + e.d_xi + g[j].cof() * e.d_d
    });
    MatrixField::new(grid.clone(), values)
}

pub fn ele_residual_incompressible(c: &StationaryCandidate, basis: &TestBasis) -> Result<ResidualReport> {
    let Integrand::PDirichlet(spec) = &c.integrand else {
        return Err(Error::SettingMismatch("incompressible residual needs a p-Dirichlet integrand".into()));
    };
    let lambda = c.pressure.as_ref().ok_or(Error::MissingPressure)?;
    let grad = gradient(&c.u);
    let stress = incompressible_stress(&grad, spec, lambda)?;
    weak_residual(&stress, &stiffness(&spec.nu, &grad, spec.p)?, basis, Setting::Incompressible)
}

pub fn ele_residual_compressible(c: &StationaryCandidate, basis: &TestBasis) -> Result<ResidualReport> {
    let Integrand::Polyconvex(spec) = &c.integrand else {
        return Err(Error::SettingMismatch("compressible residual needs a polyconvex integrand".into()));
    };
    let grad = gradient(&c.u);
    let stress = compressible_stress(&grad, spec)?;
    weak_residual(&stress, &stiffness(&spec.nu, &grad, spec.p)?, basis, Setting::Compressible)
}

/// Residual matching the candidate's setting.
pub fn ele_residual(c: &StationaryCandidate, basis: &TestBasis) -> Result<ResidualReport> {
    match c.setting() {
        Setting::Incompressible => ele_residual_incompressible(c, basis),
        Setting::Compressible => ele_residual_compressible(c, basis),
    }
}

/// Strong-form pressure gradient and its curl.
#[derive(Debug, Clone)]
pub struct PressureRecovery {
    /// Cartesian `g ≈ ∇λ`.
    pub g: VectorField,
    pub curl: ScalarField,
    pub max_curl: f64,
    pub det_max_dev: f64,
}

impl PressureRecovery {
    pub fn is_gradient(&self, tol: f64) -> bool {
        self.max_curl <= tol
    }
}

/// Solves `(cof ∇u) g = −div(ν |∇u|^{p−2} ∇u)` pointwise.
pub fn recover_pressure_gradient(u: &VectorField, spec: &PDirichletSpec) -> Result<PressureRecovery> {
    let grid = spec.grid();
    grid.check_same(u.grid(), "pressure recovery")?;
    let grad = gradient(u);
    let det_max_dev = det_deviation(&grad);
    if !(det_max_dev <= DEFAULT_DET_TOL) {
        return Err(Error::DetConstraint { max_dev: det_max_dev, tol: DEFAULT_DET_TOL });
    }
    let sig = stiffness(&spec.nu, &grad, spec.p)?;
    let flux = MatrixField::new(
        grid.clone(),
        grad.values().iter().zip(sig.values()).map(|(m, s)| *m * *s).collect(),
    )?;
    let div = divergence_matrix(&flux);
    let cofs = cof(&grad);
    let pairs: Vec<[f64; 2]> = par::map_range(grid.len(), |j| {
        let inv = cofs.values()[j].inverse().unwrap_or(Mat2::ZERO);
        let [a, b] = inv.mul_vec([div.c1()[j], div.c2()[j]]);
        [-a, -b]
    });
    let (c1, c2) = pairs.into_iter().map(|[a, b]| (a, b)).unzip();
    let g = VectorField::new(grid.clone(), c1, c2)?;
    let curl = curl(&g);
    let max_curl = curl.max_abs();
    Ok(PressureRecovery { g, curl, max_curl, det_max_dev })
}

/// `(n_r / 2, 0)`.
pub fn default_base(grid: &PolarGrid) -> (usize, usize) {
    (grid.n_r() / 2, 0)
}

#[derive(Debug, Clone)]
pub struct PressureIntegration {
    /// Radial-then-angular paths.
    pub lambda: ScalarField,
    /// Angular-then-radial paths.
    pub lambda_alt: ScalarField,
    /// `max |λ − λ_alt|`.
    pub path_gap: f64,
    pub max_curl: f64,
}

/// Cumulative integral of `f` over the radial nodes, zero at `base`. Each
/// cell uses the cubic through four neighbouring nodes.
fn cumulative_radial(f: &[f64], h: f64, base: usize) -> Vec<f64> {
    let n = f.len();
    let cell = |m: usize| -> f64 {
        let v = if m == 0 {
            9.0 * f[0] + 19.0 * f[1] - 5.0 * f[2] + f[3]
        } else if m == n - 2 {
            9.0 * f[n - 1] + 19.0 * f[n - 2] - 5.0 * f[n - 3] + f[n - 4]
        } else {
            -f[m - 1] + 13.0 * f[m] + 13.0 * f[m + 1] - f[m + 2]
        };
        v * h / 24.0
    };
    let mut out = vec![0.0; n];
    for i in base + 1..n {
        out[i] = out[i - 1] + cell(i - 1);
    }
    for i in (0..base).rev() {
        out[i] = out[i + 1] - cell(i);
    }
    out
}

/// `F(θ_k) − F(θ_base)` with `F' = f` along one circle, the mean of `f`
/// contributing linearly in the counter-clockwise angle.
fn cumulative_angular(grid: &PolarGrid, f: &[f64], base: usize) -> Vec<f64> {
    let n = grid.n_theta();
    let mut spec = forward_row(grid, f);
    let mean = spec[0].re / n as f64;
    for (b, c) in spec.iter_mut().enumerate() {
        *c = if b == 0 || 2 * b == n {
            Complex::new(0.0, 0.0)
        } else {
            let w = if b < n / 2 { b as f64 } else { b as f64 - n as f64 };
            *c / Complex::new(0.0, w)
        };
    }
    let mut anti = vec![0.0; n];
    inverse_row(grid, spec, &mut anti);
    (0..n)
        .map(|k| {
            let dtheta = (grid.theta(k) - grid.theta(base)).rem_euclid(TAU);
            anti[k] - anti[base] + mean * dtheta
        })
        .collect()
}

/// Path integral of `g` from `base`, along two path families.
pub fn integrate_pressure(g: &VectorField, base: (usize, usize), curl_tol: f64) -> Result<PressureIntegration> {
    let grid = g.grid();
    let (i0, k0) = base;
    if i0 >= grid.n_r() || k0 >= grid.n_theta() {
        return Err(Error::InvalidArgument(format!("base node {base:?} outside {grid:?}")));
    }
    let max_curl = curl(g).max_abs();
    if !(max_curl <= curl_tol) {
        return Err(Error::CurlInconsistent { max_curl, tol: curl_tol });
    }
    let sp = scaled_polar(g);
    let (nr, nt) = (grid.n_r(), grid.n_theta());
    let lam_r = |i: usize, k: usize| sp.c1()[grid.idx(i, k)] / grid.radius(i);
    let lam_t = |i: usize, k: usize| sp.c2()[grid.idx(i, k)];
    let column = |k: usize| -> Vec<f64> {
        let col: Vec<f64> = (0..nr).map(|i| lam_r(i, k)).collect();
        cumulative_radial(&col, grid.dr(), i0)
    };

    // Radial along θ_{k0}, then angular along each circle.
    let spine = column(k0);
    let rows_a = par::map_range(nr, |i| {
        let row: Vec<f64> = (0..nt).map(|k| lam_t(i, k)).collect();
        let ang = cumulative_angular(grid, &row, k0);
        ang.into_iter().map(|a| spine[i] + a).collect::<Vec<f64>>()
    });

    // Angular along R_{i0}, then radial along each ray.
    let ring: Vec<f64> = (0..nt).map(|k| lam_t(i0, k)).collect();
    let ring = cumulative_angular(grid, &ring, k0);
    let cols_b = par::map_range(nt, |k| column(k));

    let lambda = ScalarField::new(grid.clone(), rows_a.concat())?;
    let alt = grid.sample_nodes(|i, k| ring[k] + cols_b[k][i]);
    let lambda_alt = ScalarField::new(grid.clone(), alt)?;
    let path_gap = lambda
        .values()
        .iter()
        .zip(lambda_alt.values())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    Ok(PressureIntegration { lambda, lambda_alt, path_gap, max_curl })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energies::{PsiSpec, Profile, ReferenceMap};

    fn grid() -> PolarGrid {
        PolarGrid::new(128, 64).unwrap()
    }

    fn dirichlet(g: &PolarGrid, p: f64) -> PDirichletSpec {
        PDirichletSpec::new(p, ScalarField::constant(g, 1.0)).unwrap()
    }

    #[test]
    fn identity_is_stationary_with_zero_pressure() {
        let g = grid();
        let u = ReferenceMap::identity().sample(&g).unwrap();
        let c = StationaryCandidate::incompressible(u, dirichlet(&g, 2.0), Some(ScalarField::zeros(&g)), 1e-6).unwrap();
        let r = ele_residual_incompressible(&c, &TestBasis::default()).unwrap();
        assert!(r.max_normalized <= 1e-8, "{}", r.max_normalized);
        assert_eq!(r.residuals.len(), 17 * 4 * 2);
    }

    #[test]
    fn wrong_pressure_is_detected() {
        let g = grid();
        let u = ReferenceMap::identity().sample(&g).unwrap();
        let lam = g.sample_scalar(|x| 0.5 * x.r * x.r).unwrap();
        let c = StationaryCandidate::incompressible(u, dirichlet(&g, 2.0), Some(lam), 1e-6).unwrap();
        let r = ele_residual_incompressible(&c, &TestBasis::default()).unwrap();
        assert!(r.max_normalized > 1e-3);
    }

    #[test]
    fn missing_pressure_and_wrong_setting() {
        let g = grid();
        let u = ReferenceMap::identity().sample(&g).unwrap();
        let c = StationaryCandidate::incompressible(u.clone(), dirichlet(&g, 2.0), None, 1e-6).unwrap();
        assert!(matches!(ele_residual_incompressible(&c, &TestBasis::default()), Err(Error::MissingPressure)));
        assert!(matches!(ele_residual_compressible(&c, &TestBasis::default()), Err(Error::SettingMismatch(_))));
        let dil = ReferenceMap::affine(Mat2::IDENTITY * 1.5).unwrap().sample(&g).unwrap();
        assert!(StationaryCandidate::incompressible(dil, dirichlet(&g, 2.0), None, 1e-6).is_err());
    }

    #[test]
    fn double_cover_pressure_closes_the_loop() {
        let g = grid();
        let spec = dirichlet(&g, 2.0);
        let u = ReferenceMap::ncover(2).unwrap().sample(&g).unwrap();
        let rec = recover_pressure_gradient(&u, &spec).unwrap();
        assert!(rec.max_curl <= 1e-4, "{}", rec.max_curl);
        let int = integrate_pressure(&rec.g, default_base(&g), 1e-4).unwrap();
        assert!(int.path_gap < 1e-6, "{}", int.path_gap);
        // radial: every circle is constant
        let lam = &int.lambda;
        for i in 0..g.n_r() {
            let row = lam.row(i);
            assert!(row.iter().all(|v| (v - row[0]).abs() < 1e-8));
        }
        let exact = ReferenceMap::ncover(2).unwrap().known_pressure(1.0, 2.0).unwrap();
        let r_in = g.radius(g.n_r() / 4);
        let expected = exact.eval(crate::grid::Point::new(r_in, 0.0)) - exact.eval(g.point(g.n_r() / 2, 0));
        assert!((lam.at(g.n_r() / 4, 0) - expected).abs() < 1e-6);

        let c = StationaryCandidate::incompressible(u, spec, Some(int.lambda), 1e-6).unwrap();
        let r = ele_residual_incompressible(&c, &TestBasis::default()).unwrap();
        assert!(r.max_normalized <= 1e-5, "{}", r.max_normalized);
    }

    #[test]
    fn incompatible_weight_has_no_pressure() {
        let g = grid();
        let nu = Profile::ExpCos { amp: 1.0, l: 2, s: 1.0, g2: 0.0 }.sample(&g).unwrap();
        let spec = PDirichletSpec::new(2.0, nu).unwrap();
        let u = ReferenceMap::ncover(2).unwrap().sample(&g).unwrap();
        let rec = recover_pressure_gradient(&u, &spec).unwrap();
        assert!(rec.max_curl > 1e-2, "{}", rec.max_curl);
        assert!(matches!(
            integrate_pressure(&rec.g, default_base(&g), 1e-4),
            Err(Error::CurlInconsistent { .. })
        ));
    }

    #[test]
    fn identity_with_angular_weight_has_a_pressure() {
        // div(ν I) = ∇ν, so λ = −ν up to a constant.
        let g = grid();
        let prof = Profile::ExpCos { amp: 1.0, l: 2, s: 1.0, g2: 0.0 };
        let spec = PDirichletSpec::new(2.0, prof.sample(&g).unwrap()).unwrap();
        let u = ReferenceMap::identity().sample(&g).unwrap();
        let rec = recover_pressure_gradient(&u, &spec).unwrap();
        assert!(rec.max_curl < 1e-4);
        let lam = integrate_pressure(&rec.g, default_base(&g), 1e-4).unwrap().lambda;
        let base = spec.nu.at(g.n_r() / 2, 0);
        for (l, n) in lam.values().iter().zip(spec.nu.values()) {
            assert!((l + n - base).abs() < 1e-6);
        }
    }

    #[test]
    fn integrate_known_gradients() {
        let g = grid();
        let zero = VectorField::zeros(&g);
        let z = integrate_pressure(&zero, default_base(&g), 1e-4).unwrap();
        assert_eq!(z.lambda.max_abs(), 0.0);
        let x = g.sample_vector(|p| p.cartesian()).unwrap();
        let int = integrate_pressure(&x, default_base(&g), 1e-4).unwrap();
        let r0 = g.radius(g.n_r() / 2);
        let exact = g.sample_scalar(|p| 0.5 * (p.r * p.r - r0 * r0)).unwrap();
        let err = max_diff(&int.lambda, &exact);
        assert!(err < 1e-6, "{err}");
        assert!(int.path_gap < 1e-6);

        // λ = xy exercises the angular leg.
        let xy = g.sample_vector(|p| [p.y(), p.x()]).unwrap();
        let int = integrate_pressure(&xy, default_base(&g), 1e-4).unwrap();
        let (xb, yb) = (r0, 0.0);
        let exact = g.sample_scalar(|p| p.x() * p.y() - xb * yb).unwrap();
        assert!(max_diff(&int.lambda, &exact) < 1e-6);
        assert!(max_diff(&int.lambda_alt, &exact) < 1e-6);
    }

    fn max_diff(a: &ScalarField, b: &ScalarField) -> f64 {
        a.values().iter().zip(b.values()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
    }

    #[test]
    fn compressible_residuals() {
        let g = grid();
        let a = Mat2::new(1.3, 0.2, -0.1, 0.9);
        let u = ReferenceMap::affine(a).unwrap().sample(&g).unwrap();
        let nu = ScalarField::constant(&g, 2.0);
        let pen = PsiSpec::DetPenalty { gamma: Profile::Constant { value: 1.0 } };
        let spec = PolyconvexSpec::from_gallery(2.0, nu.clone(), pen).unwrap();
        let c = StationaryCandidate::compressible(u.clone(), spec).unwrap();
        assert!(ele_residual_compressible(&c, &TestBasis::default()).unwrap().max_normalized <= 1e-8);

        let gamma = Profile::RadialPoly { coeffs: vec![1.0, 0.0, 2.0] };
        let spec = PolyconvexSpec::from_gallery(2.0, nu.clone(), PsiSpec::DetPenalty { gamma }).unwrap();
        let c = StationaryCandidate::compressible(u, spec).unwrap();
        assert!(ele_residual_compressible(&c, &TestBasis::default()).unwrap().max_normalized > 1e-4);

        let id = ReferenceMap::identity().sample(&g).unwrap();
        let spec = PolyconvexSpec::from_gallery(3.0, nu, PsiSpec::Zero).unwrap();
        let c = StationaryCandidate::compressible(id, spec).unwrap();
        assert!(ele_residual(&c, &TestBasis::default()).unwrap().max_normalized <= 1e-8);
    }

    #[test]
    fn cumulative_radial_is_exact_for_cubics() {
        let h = 0.1;
        let r: Vec<f64> = (0..12).map(|i| (i as f64 + 0.5) * h).collect();
        let f: Vec<f64> = r.iter().map(|x| 1.0 + x - 2.0 * x * x + x * x * x).collect();
        let anti = |x: f64| x + x * x / 2.0 - 2.0 * x * x * x / 3.0 + x.powi(4) / 4.0;
        let c = cumulative_radial(&f, h, 5);
        for (i, v) in c.iter().enumerate() {
            assert!((v - (anti(r[i]) - anti(r[5]))).abs() < 1e-13);
        }
    }
}
