use serde::{Deserialize, Serialize};

use crate::certifier::{certify, det_derivative_field};
use crate::diffops::{cof, gradient, scalar_gradient};
use crate::energies::{pow_m2, pow_p, Integrand, PolyconvexSpec};
use crate::error::{Error, Result};
use crate::fourier::band_content;
use crate::grid::{MatrixField, ScalarField, VectorField, Weight};
use crate::lab::fields::random_test_field;
use crate::lab::flow::{make_measure_preserving_variation, random_flow, GridInterpolant, PointMap};
use crate::lab::report::{rel_diff, SuiteReport, TrialRecord};
use crate::par::Execution;
use crate::rng::{log_uniform, trial_rng, trial_seed};
use crate::stationarity::{ele_residual, StationaryCandidate, TestBasis};

/// Tolerances and trial settings of the energy-gap suites.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GapOptions {
    pub trials: usize,
    pub seed: u64,
    /// Maximal normalized ELE residual of the candidate.
    pub residual_tol: f64,
    /// Relative agreement of the `H` evaluations.
    pub identity_tol: f64,
    /// Absolute slack for `gap ≥ chain`.
    pub chain_tol: f64,
    /// Absolute slack for `gap ≥ 0` where certified.
    pub gap_tol: f64,
    /// Largest leakage of `ση` below the certified threshold for which a
    /// trial counts as band-admissible.
    pub max_leakage: f64,
    /// RK4 steps of each flow.
    pub flow_steps: usize,
}

impl Default for GapOptions {
    fn default() -> Self {
        GapOptions {
            trials: 100,
            seed: 0,
            residual_tol: 1e-5,
            identity_tol: 1e-5,
            chain_tol: 1e-5,
            gap_tol: 1e-6,
            max_leakage: 0.01,
            flow_steps: 16,
        }
    }
}

fn check_stationary(c: &StationaryCandidate, tol: f64) -> Result<f64> {
    let res = ele_residual(c, &TestBasis::default())?.max_normalized;
    if !(res <= tol) {
        return Err(Error::NotStationary { residual: res, tol });
    }
    Ok(res)
}

/// `∫ f(∇u, ∇η) dx` over node pairs.
fn integrate_pairs<F>(a: &MatrixField, b: &MatrixField, f: F) -> Result<f64>
where
    F: Fn(usize, &crate::mat2::Mat2, &crate::mat2::Mat2) -> f64 + Sync + Send,
{
    let grid = a.grid();
    let (av, bv) = (a.values(), b.values());
    let values = crate::par::map_range(grid.len(), |j| f(j, &av[j], &bv[j]));
    grid.integrate_values(&values, Weight::Dx)
}

/// Incompressible energy gap over flow variations `v = u ∘ φ_s`.
///
/// Per trial: `gap = E(v) − E(u)`, `chain = (p/2)∫σ²|∇η|² + H` with `H` the
/// mixed term, and the alternative evaluations `h_ele = −∫pλ cof∇u·∇η`,
/// `h_det = ∫pλ det∇η`, `h_rewrite = −(p/2)∫((cof∇η)∇λ)·η`. Checks: the four
/// `H` values agree pairwise relative to `∫σ²|∇η|²`; `gap ≥ chain − tol`;
/// `gap ≥ −tol` when the certificate gives the full class, or when it
/// applies and `ση` leaks less than `max_leakage` below `n*`.
pub fn energy_gap_incompressible(
    c: &StationaryCandidate,
    map: Option<&dyn PointMap>,
    opts: &GapOptions,
    exec: Execution,
) -> Result<SuiteReport> {
    let Integrand::PDirichlet(spec) = &c.integrand else {
        return Err(Error::SettingMismatch("incompressible gap needs a p-Dirichlet candidate".into()));
    };
    let lambda = c.pressure.as_ref().ok_or(Error::MissingPressure)?;
    let residual = check_stationary(c, opts.residual_tol)?;
    let cert = certify(c, crate::energies::Setting::Incompressible)?;
    let grid = c.grid();
    let p = spec.p;
    let grad_u = gradient(&c.u);
    let cof_u = cof(&grad_u);
    let nu = spec.nu.values();
    let lam = lambda.values();
    let glam = scalar_gradient(lambda).cartesian;
    let sigma = &cert.sigma;
    let interp;
    let u_map: &dyn PointMap = match map {
        Some(m) => m,
        None => {
            interp = GridInterpolant::new(c.u.clone());
            &interp
        }
    };
    let threshold = cert.n_star.map(|n| n as usize);
    let records = exec.map(opts.trials, |t| -> Result<TrialRecord> {
        let mut rec = TrialRecord::new("gap_inc", t, trial_seed(opts.seed, t as u64));
        let flow = random_flow(&mut trial_rng(opts.seed, t as u64), opts.flow_steps);
        let var = make_measure_preserving_variation(u_map, grid, &flow)?;
        let grad_v = gradient(&var.v);
        let grad_e = gradient(&var.eta);
        let gap = integrate_pairs(&grad_u, &grad_v, |j, a, b| nu[j] * (pow_p(b.norm_sq(), p) - pow_p(a.norm_sq(), p)))?;
        let quad = integrate_pairs(&grad_u, &grad_e, |j, a, e| nu[j] * pow_m2(a.norm_sq(), p) * e.norm_sq())?;
        let h = integrate_pairs(&grad_u, &grad_e, |j, a, e| p * nu[j] * pow_m2(a.norm_sq(), p) * a.dot(e))?;
        let cu = cof_u.values();
        let h_ele = integrate_pairs(&grad_u, &grad_e, |j, _, e| -p * lam[j] * cu[j].dot(e))?;
        let h_det = integrate_pairs(&grad_u, &grad_e, |j, _, e| p * lam[j] * e.det())?;
        let ev = var.eta.c1().iter().zip(var.eta.c2());
        let eta_pairs: Vec<[f64; 2]> = ev.map(|(a, b)| [*a, *b]).collect();
        let h_rewrite = integrate_pairs(&grad_u, &grad_e, |j, _, e| {
            let g = [glam.c1()[j], glam.c2()[j]];
            let v = e.cof().mul_vec(g);
            -0.5 * p * (v[0] * eta_pairs[j][0] + v[1] * eta_pairs[j][1])
        })?;
        let det_identity_max = grad_u
            .values()
            .iter()
            .zip(grad_e.values())
            .map(|(a, e)| (e.det() + a.cof().dot(e)).abs())
            .fold(0.0, f64::max);
        let chain = 0.5 * p * quad + h;
        let scale = quad.max(1e-300);
        let hs = [h, h_ele, h_det, h_rewrite];
        let mut agree = 0.0f64;
        for a in 0..4 {
            for b in a + 1..4 {
                agree = agree.max(rel_diff(hs[a], hs[b], scale));
            }
        }
        let leakage = match threshold {
            Some(n) if n <= grid.max_mode() => band_content(&var.eta.mul_scalar(sigma)?, n, false).aggregate,
            _ => 1.0,
        };
        let certified = cert.full_class || (cert.applicable && leakage < opts.max_leakage);
        rec.set("gap", gap)
            .set("quadratic", 0.5 * p * quad)
            .set("h", h)
            .set("h_ele", h_ele)
            .set("h_det", h_det)
            .set("h_rewrite", h_rewrite)
            .set("chain", chain)
            .set("h_agreement", agree)
            .set("det_identity_max", det_identity_max)
            .set("det_max_dev", var.det_max_dev)
            .set("leakage", leakage)
            .set("certified", if certified { 1.0 } else { 0.0 })
            .check("h_consistent", agree <= opts.identity_tol)
            .check("gap_ge_chain", gap >= chain - opts.chain_tol);
        if certified {
            rec.check("gap_nonnegative", gap >= -opts.gap_tol);
        }
        Ok(rec)
    });
    let mut rep = SuiteReport::new("gap_inc", opts.seed, records.into_iter().collect::<Result<Vec<_>>>()?);
    let (min_gap, agree, dev) = (rep.min_of("gap"), rep.max_of("h_agreement"), rep.max_of("det_max_dev"));
    rep.set("residual", residual)
        .set("full_class", if cert.full_class { 1.0 } else { 0.0 })
        .set("min_gap", min_gap)
        .set("max_h_agreement", agree)
        .set("max_det_dev", dev);
    Ok(rep)
}

/// Compressible energy gap over random compactly supported `η`:
/// `I(u + η) − I(u) ≥ ∫ ν/2 |∇u|^{p−2}|∇η|² + q det∇η dx` with
/// `q = ∂_dΨ(x, ∇u, det∇u)`, to `1e−6 max(1, |gap|, |bound|)`. The first
/// variation is recorded. Where the certificate applies and `ση` leaks less
/// than `max_leakage` below `n*`, `gap ≥ −tol` is also asserted.
pub fn energy_gap_compressible(
    spec: &PolyconvexSpec,
    u: &VectorField,
    opts: &GapOptions,
    exec: Execution,
) -> Result<SuiteReport> {
    let c = StationaryCandidate::compressible(u.clone(), spec.clone())?;
    let residual = check_stationary(&c, opts.residual_tol)?;
    let cert = certify(&c, crate::energies::Setting::Compressible)?;
    let grid = spec.grid();
    let p = spec.p;
    let grad_u = gradient(u);
    let q = det_derivative_field(spec, &grad_u)?;
    let (nu, qv) = (spec.nu.values(), q.values());
    let sigma: &ScalarField = &cert.sigma;
    let threshold = cert.n_star.map(|n| n as usize);
    let records = exec.map(opts.trials, |t| -> Result<TrialRecord> {
        let mut rec = TrialRecord::new("gap_comp", t, trial_seed(opts.seed, t as u64));
        let mut rng = trial_rng(opts.seed, t as u64);
        let amp = log_uniform(&mut rng, 1e-2, 1.0);
        let eta = random_test_field(grid, &mut rng)?.scale(amp);
        let grad_e = gradient(&eta);
        let gap = integrate_pairs(&grad_u, &grad_e, |j, a, e| {
            let (i, k) = grid.node(j);
            spec.phi(i, k, &(*a + *e)) - spec.phi(i, k, a)
        })?;
        let bound = integrate_pairs(&grad_u, &grad_e, |j, a, e| {
            0.5 * nu[j] * pow_m2(a.norm_sq(), p) * e.norm_sq() + qv[j] * e.det()
        })?;
        let first = integrate_pairs(&grad_u, &grad_e, |j, a, e| {
            let (i, k) = grid.node(j);
            let ev = spec.psi.eval(grid.point(i, k), a, a.det());
            let stress = *a * (nu[j] * pow_m2(a.norm_sq(), p)) + ev.d_xi + a.cof() * ev.d_d;
            stress.dot(e)
        })?;
        let tol = 1e-6 * 1f64.max(gap.abs()).max(bound.abs());
        let leakage = match threshold {
            Some(n) if n <= grid.max_mode() => band_content(&eta.mul_scalar(sigma)?, n, false).aggregate,
            _ => 1.0,
        };
        let certified = cert.full_class || (cert.applicable && leakage < opts.max_leakage);
        rec.set("gap", gap)
            .set("bound", bound)
            .set("slack", gap - bound)
            .set("first_variation", first)
            .set("leakage", leakage)
            .set("certified", if certified { 1.0 } else { 0.0 })
            .check("bound_holds", gap - bound >= -tol);
        if certified {
            rec.check("gap_nonnegative", gap >= -opts.gap_tol);
        }
        Ok(rec)
    });
    let mut rep = SuiteReport::new("gap_comp", opts.seed, records.into_iter().collect::<Result<Vec<_>>>()?);
    let min_slack = rep.min_of("slack");
    let first = rep.records.iter().map(|r| r.get("first_variation").abs()).fold(0.0, f64::max);
    rep.set("residual", residual).set("min_slack", min_slack).set("max_abs_first_variation", first);
    Ok(rep)
}
