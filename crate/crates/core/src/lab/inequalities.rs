use serde::{Deserialize, Serialize};

use crate::certifier::{estimate_l, estimate_m, estimate_n};
use crate::diffops::{d_r_values, gradient, scalar_gradient};
use crate::error::{Error, Result};
use crate::fourier::{d_theta, tilde, zero_mode, Band};
use crate::grid::{MatrixField, PolarGrid, ScalarField, VectorField, Weight};
use crate::lab::fields::{make_band_variation, random_band_field, random_pressure, random_test_field, BandSpec};
use crate::lab::report::{rel_diff, SuiteReport, TrialRecord};
use crate::par::Execution;
use crate::rng::{trial_rng, trial_seed};
use crate::stationarity::bump;

fn run<F>(suite: &str, seed: u64, trials: usize, exec: Execution, f: F) -> Result<SuiteReport>
where
    F: Fn(&mut TrialRecord, &mut crate::rng::TrialRng) -> Result<()> + Sync + Send,
{
    let records = exec.map(trials, |t| {
        let mut rec = TrialRecord::new(suite, t, trial_seed(seed, t as u64));
        let mut rng = trial_rng(seed, t as u64);
        f(&mut rec, &mut rng).map(|_| rec)
    });
    Ok(SuiteReport::new(suite, seed, records.into_iter().collect::<Result<Vec<_>>>()?))
}

fn integrate_sq(f: &VectorField, weight: Weight) -> Result<f64> {
    f.norm_sq().integrate(weight)
}

/// `∫ R⁻² |ξ,_θ|² dx / ∫ R⁻² |ξ|² dx`; infinite for `ξ = 0`.
pub fn poincare_ratio(xi: &VectorField) -> Result<f64> {
    let num = integrate_sq(&d_theta(xi), Weight::DxOverR2)?;
    let den = integrate_sq(xi, Weight::DxOverR2)?;
    Ok(if den > 0.0 { num / den } else { f64::INFINITY })
}

/// Random fields with modes `≥ n` against the constant `n²`, plus the
/// saturating single harmonic `bump(R) (cos nθ, 0)`.
pub fn verify_poincare(grid: &PolarGrid, n: usize, trials: usize, seed: u64, exec: Execution) -> Result<SuiteReport> {
    let spec = BandSpec::high(n);
    spec.validate(grid)?;
    let n2 = (n * n) as f64;
    let mut rep = run("poincare", seed, trials, exec, |rec, rng| {
        let xi = random_band_field(grid, &spec, rng)?;
        let ratio = poincare_ratio(&xi)?;
        rec.set("ratio", ratio).check("ratio_ge_n2", ratio >= n2 - 1e-6);
        Ok(())
    })?;
    let single = grid.sample_vector(|x| [bump(x.r, spec.r0, spec.r1) * (n as f64 * x.theta).cos(), 0.0])?;
    let sat = poincare_ratio(&single)?;
    let min_ratio = rep.min_of("ratio");
    rep.set("n", n as f64)
        .set("min_ratio", min_ratio)
        .set("saturation_ratio", sat)
        .check("saturation", (sat - n2).abs() <= 1e-8);
    Ok(rep)
}

fn floor_on(sigma: &ScalarField, r0: f64, r1: f64) -> f64 {
    let grid = sigma.grid();
    (0..grid.n_r())
        .filter(|&i| grid.radius(i) > r0 && grid.radius(i) < r1)
        .flat_map(|i| sigma.row(i).iter().copied())
        .fold(f64::INFINITY, f64::min)
}

fn weighted(f: &VectorField, sigma: &ScalarField) -> Result<VectorField> {
    f.mul_scalar(sigma)
}

/// `∫ σ² |∇η|² dx`.
fn stiffness_norm_sq(sigma: &ScalarField, grad_eta: &MatrixField) -> Result<f64> {
    let s = sigma.values();
    let values: Vec<f64> = grad_eta.values().iter().zip(s).map(|(m, s)| s * s * m.norm_sq()).collect();
    sigma.grid().integrate_values(&values, Weight::Dx)
}

fn check_l(sigma: &ScalarField, l: u64) -> Result<bool> {
    Ok(estimate_l(sigma)?.accepts(l))
}

/// `n² ∫ σ²|η|² dx/R² ≤ ∫ σ²|η,_θ|² dx/R²` with `n = n* − l` for band
/// variations whose `ση` has modes `≥ n*`, together with the Minkowski
/// chain behind it. The right-hand side with `dx` in place of `dx/R²` is
/// recorded as `literal_dx_holds` but not asserted.
pub fn verify_weighted_fourier(
    sigma: &ScalarField,
    l: u64,
    n_star: u64,
    trials: usize,
    seed: u64,
    exec: Execution,
) -> Result<SuiteReport> {
    if n_star <= l {
        return Err(Error::Hypothesis(format!("n = n* − l must be at least 1 (n* = {n_star}, l = {l})")));
    }
    if !check_l(sigma, l)? {
        return Err(Error::Hypothesis(format!("|σ,_θ| ≤ {l} σ fails")));
    }
    let spec = BandSpec::high(n_star as usize);
    let sigma0 = floor_on(sigma, spec.r0, spec.r1);
    if !(sigma0 > 0.0) {
        return Err(Error::SigmaBelowFloor { value: sigma0, sigma0: 0.0 });
    }
    let n = (n_star - l) as f64;
    let ns = n_star as f64;
    let sigma_theta = d_theta(sigma);
    let mut rep = run("fourier", seed, trials, exec, |rec, rng| {
        let var = make_band_variation(sigma, sigma0, &spec, rng)?;
        let grad = stiffness_norm_sq(sigma, &gradient(&var.eta))?;
        let eta = if grad > 0.0 { var.eta.scale(1.0 / grad.sqrt()) } else { var.eta };
        let ge = gradient(&eta);
        let et = d_theta(&eta);
        let se = weighted(&eta, sigma)?;
        let lhs = n * n * integrate_sq(&se, Weight::DxOverR2)?;
        let rhs = integrate_sq(&weighted(&et, sigma)?, Weight::DxOverR2)?;
        let rhs_dx = integrate_sq(&weighted(&et, sigma)?, Weight::Dx)?;
        let grad_sq = stiffness_norm_sq(sigma, &ge)?;
        let norm = |f: &VectorField, w| integrate_sq(f, w).map(f64::sqrt);
        let a = ns * norm(&se, Weight::DxOverR2)?;
        let b = norm(&d_theta(&se), Weight::DxOverR2)?;
        let c = rhs.sqrt() + norm(&weighted(&eta, &sigma_theta)?, Weight::DxOverR2)?;
        let d = grad_sq.sqrt() + l as f64 * norm(&se, Weight::DxOverR2)?;
        let tol = 1e-9 * (1.0 + d);
        rec.set("lhs", lhs)
            .set("rhs", rhs)
            .set("rhs_dx", rhs_dx)
            .set("grad_sq", grad_sq)
            .set("chain_a", a)
            .set("chain_b", b)
            .set("chain_c", c)
            .set("chain_d", d)
            .check("inequality", lhs <= rhs + 1e-8)
            .check("rhs_le_grad", rhs <= grad_sq + 1e-8)
            .check("chain", a <= b + tol && b <= c + tol && c <= d + tol);
        rec.quantities.insert("literal_dx_holds".into(), if lhs <= rhs_dx + 1e-8 { 1.0 } else { 0.0 });
        Ok(())
    })?;
    let literal_fail = rep.records.iter().filter(|r| r.get("literal_dx_holds") == 0.0).count();
    let min_gap = rep.records.iter().map(|r| r.get("rhs") - r.get("lhs")).fold(f64::INFINITY, f64::min);
    rep.set("n", n)
        .set("n_star", ns)
        .set("l", l as f64)
        .set("min_rhs_minus_lhs", min_gap)
        .set("literal_dx_violations", literal_fail as f64);
    Ok(rep)
}

/// `(cof A) g · η`.
fn cof_form(a: &crate::mat2::Mat2, g: [f64; 2], eta: [f64; 2]) -> f64 {
    let v = a.cof().mul_vec(g);
    v[0] * eta[0] + v[1] * eta[1]
}

/// `∫ ((cof ∇η) ∇λ) · η dx`.
fn cof_integral(lambda: &ScalarField, eta: &VectorField) -> Result<f64> {
    let grid = lambda.grid();
    grid.check_same(eta.grid(), "cof integral")?;
    let g = scalar_gradient(lambda).cartesian;
    let ge = gradient(eta);
    let values = grid.sample_nodes(|i, k| cof_form(&ge.at(i, k), g.at(i, k), eta.at(i, k)));
    grid.integrate_values(&values, Weight::Dx)
}

/// Both sides of `∫ λ det ∇η dx = −½ ∫ ((cof ∇η) ∇λ) · η dx`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DetIdentity {
    pub lhs: f64,
    pub rhs: f64,
    /// `∫ |λ det ∇η| dx`, the cancellation scale of the left side.
    pub scale: f64,
}

impl DetIdentity {
    pub fn rel_error(&self) -> f64 {
        rel_diff(self.lhs, self.rhs, self.scale)
    }
}

pub fn det_identity(lambda: &ScalarField, eta: &VectorField) -> Result<DetIdentity> {
    let grid = lambda.grid();
    let ge = gradient(eta);
    let l = lambda.values();
    let pointwise: Vec<f64> = ge.values().iter().zip(l).map(|(m, l)| l * m.det()).collect();
    let lhs = grid.integrate_values(&pointwise, Weight::Dx)?;
    let abs: Vec<f64> = pointwise.iter().map(|v| v.abs()).collect();
    let scale = grid.integrate_values(&abs, Weight::Dx)?;
    let rhs = -0.5 * cof_integral(lambda, eta)?;
    Ok(DetIdentity { lhs, rhs, scale })
}

/// Random smooth `λ` and compactly supported `η`; relative agreement
/// `≤ 1e−5`. The constant-`λ` case is checked on the first trial's `η`.
pub fn verify_det_identity(grid: &PolarGrid, trials: usize, seed: u64, exec: Execution) -> Result<SuiteReport> {
    let mut rep = run("det_identity", seed, trials, exec, |rec, rng| {
        let lambda = random_pressure(grid, 1.0, rng)?;
        let eta = random_test_field(grid, rng)?;
        let d = det_identity(&lambda, &eta)?;
        let rel = d.rel_error();
        rec.set("lhs", d.lhs).set("rhs", d.rhs).set("rel", rel).check("agree", rel <= 1e-5);
        Ok(())
    })?;
    let eta = random_test_field(grid, &mut trial_rng(seed, 0))?;
    let c = det_identity(&ScalarField::constant(grid, 1.7), &eta)?;
    rep.set("max_rel", rep.max_of("rel"))
        .set("const_lhs", c.lhs)
        .set("const_rhs", c.rhs)
        .check("null_lagrangian", c.lhs.abs() <= 1e-8 && c.rhs.abs() <= 1e-8);
    Ok(rep)
}

/// `H̃(η) = −(p/2) ∫ ((cof ∇η) ∇λ) · η dx`.
pub fn h_tilde(lambda: &ScalarField, eta: &VectorField, p: f64) -> Result<f64> {
    Ok(-0.5 * p * cof_integral(lambda, eta)?)
}

/// `∫ Y · Z dx/R` with `Y = (R λ,_R, λ,_θ)` and, in the polar frame,
///
/// ```text
/// Z_R = (η̃₁ η̃₂,_θ − η̃₂ η̃₁,_θ) / R
/// Z_θ = η̃₂ (η₁,_R⁽⁰⁾ + η₁,_R) − η̃₁ (η₂,_R⁽⁰⁾ + η₂,_R)
/// ```
///
/// which equals `∫ ((cof ∇η) ∇λ) · η dx`.
pub fn zero_mode_rewrite_integral(lambda: &ScalarField, eta: &VectorField) -> Result<f64> {
    let grid = lambda.grid();
    grid.check_same(eta.grid(), "zero-mode rewrite")?;
    let y = scalar_gradient(lambda).scaled_polar;
    let et = tilde(eta);
    let e0 = zero_mode(eta);
    let ett = d_theta(&et);
    let d_r = |v: &[f64]| d_r_values(grid, v);
    let (e1r, e2r) = (d_r(eta.c1()), d_r(eta.c2()));
    let (z1r, z2r) = (d_r(e0.c1()), d_r(e0.c2()));
    let values = grid.sample_nodes(|i, k| {
        let j = grid.idx(i, k);
        let r = grid.radius(i);
        let (t1, t2) = (et.c1()[j], et.c2()[j]);
        let zr = (t1 * ett.c2()[j] - t2 * ett.c1()[j]) / r;
        let zt = t2 * (z1r[j] + e1r[j]) - t1 * (z2r[j] + e2r[j]);
        (y.c1()[j] * zr + y.c2()[j] * zt) / r
    });
    grid.integrate_values(&values, Weight::Dx)
}

/// `−(p/2) ∫ Y · Z dx/R`.
pub fn h_zero_mode_rewrite(lambda: &ScalarField, eta: &VectorField, p: f64) -> Result<f64> {
    Ok(-0.5 * p * zero_mode_rewrite_integral(lambda, eta)?)
}

/// Which bound is exercised: modes `≥ n + l`, or the zero mode together
/// with modes `≥ m + l`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HPart {
    I,
    II,
}

/// Inputs of the `H̃` lower bound. `k` is `n` for part I and `m` for
/// part II; `lambda` is the pressure, or `∂_dΨ` composed with `u`.
#[derive(Debug, Clone)]
pub struct HSetup {
    pub sigma: ScalarField,
    pub lambda: ScalarField,
    pub p: f64,
    pub part: HPart,
    pub l: u64,
    pub k: u64,
    pub r0: f64,
    pub r1: f64,
}

impl HSetup {
    pub fn band(&self) -> BandSpec {
        let t = (self.k + self.l) as usize;
        let band = match self.part {
            HPart::I => Band::HighFrom(t),
            HPart::II => Band::ZeroAndHighFrom(t),
        };
        BandSpec::new(band, self.r0, self.r1)
    }

    /// `(l accepted, n or m accepted)`.
    pub fn hypotheses(&self) -> Result<(bool, bool)> {
        let y = scalar_gradient(&self.lambda).scaled_polar;
        let s2 = self.sigma.map(|s| s * s);
        let est = match self.part {
            HPart::I => estimate_n(&y, &s2)?,
            HPart::II => estimate_m(&y, &s2)?,
        };
        Ok((check_l(&self.sigma, self.l)?, est.accepts(self.k)))
    }
}

/// `H̃(η) ≥ −(p/2) ∫ σ²|∇η|² dx − 1e−6` over band variations normalized to
/// `∫ σ²|∇η|² dx = 1`. Part I evaluates `H̃` directly, part II through the
/// zero-mode rewrite; both values are recorded.
pub fn verify_h_lower_bound(
    setup: &HSetup,
    trials: usize,
    seed: u64,
    exec: Execution,
    check_hypotheses: bool,
) -> Result<SuiteReport> {
    let (l_ok, k_ok) = setup.hypotheses()?;
    if check_hypotheses && !(l_ok && k_ok) {
        return Err(Error::Hypothesis(format!(
            "l = {} accepted: {l_ok}, {} = {} accepted: {k_ok}",
            setup.l,
            if setup.part == HPart::I { "n" } else { "m" },
            setup.k
        )));
    }
    let spec = setup.band();
    let sigma0 = floor_on(&setup.sigma, spec.r0, spec.r1);
    if !(sigma0 > 0.0) {
        return Err(Error::SigmaBelowFloor { value: sigma0, sigma0: 0.0 });
    }
    let p = setup.p;
    let suite = match setup.part {
        HPart::I => "h_bound_i",
        HPart::II => "h_bound_ii",
    };
    let mut rep = run(suite, seed, trials, exec, |rec, rng| {
        let var = make_band_variation(&setup.sigma, sigma0, &spec, rng)?;
        let q = stiffness_norm_sq(&setup.sigma, &gradient(&var.eta))?;
        let eta = if q > 0.0 { var.eta.scale(1.0 / q.sqrt()) } else { var.eta };
        let direct = h_tilde(&setup.lambda, &eta, p)?;
        let rewrite = h_zero_mode_rewrite(&setup.lambda, &eta, p)?;
        let value = match setup.part {
            HPart::I => direct,
            HPart::II => rewrite,
        };
        let bound = if q > 0.0 { -0.5 * p } else { 0.0 };
        rec.set("h_tilde", direct)
            .set("h_rewrite", rewrite)
            .set("forms_rel", rel_diff(direct, rewrite, 1.0))
            .set("bound", bound)
            .check("bound_holds", value >= bound - 1e-6);
        Ok(())
    })?;
    let min_h = rep.min_of(if setup.part == HPart::I { "h_tilde" } else { "h_rewrite" });
    rep.set("p", p)
        .set("l", setup.l as f64)
        .set("k", setup.k as f64)
        .set("l_accepted", if l_ok { 1.0 } else { 0.0 })
        .set("k_accepted", if k_ok { 1.0 } else { 0.0 })
        .set("min_h", min_h);
    Ok(rep)
}
