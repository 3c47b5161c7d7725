//! Integrands, energies, structural checks and the reference gallery.
//!
//! ```text
//! E(u) = ∫ ν |∇u|^p dx
//! I(u) = ∫ Φ(x, ∇u) dx,   Φ(x, ξ) = ν/p |ξ|^p + Ψ(x, ξ, det ξ)
//! ```
//!
//! `|ξ|^{p−2}` is taken to be 1 at `ξ = 0` when `p = 2` and 0 when `p > 2`.

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::diffops::gradient;
use crate::error::{Error, Result};
use crate::grid::{MatrixField, Point, PolarGrid, ScalarField, VectorField, Weight};
use crate::mat2::Mat2;
use crate::par;
use crate::rng::{log_uniform, normal, trial_rng};

/// `|ξ|^{p−2}` from `|ξ|²`.
pub fn pow_m2(norm_sq: f64, p: f64) -> f64 {
    if p == 2.0 {
        1.0
    } else if norm_sq == 0.0 {
        0.0
    } else {
        norm_sq.powf(0.5 * (p - 2.0))
    }
}

/// `|ξ|^p` from `|ξ|²`.
pub fn pow_p(norm_sq: f64, p: f64) -> f64 {
    if p == 2.0 {
        norm_sq
    } else {
        norm_sq.powf(0.5 * p)
    }
}

pub fn check_exponent(p: f64) -> Result<()> {
    if !p.is_finite() || p < 2.0 {
        return Err(Error::InvalidArgument(format!(
            "exponent p = {p} must be finite and at least 2"
        )));
    }
    Ok(())
}

fn check_nonnegative(f: &ScalarField, what: &str) -> Result<()> {
    let min = f.min();
    if min < 0.0 {
        return Err(Error::InvalidArgument(format!("{what} must be non-negative (min {min:e})")));
    }
    Ok(())
}

/// `ν |∇u|^{p−2}` at every node, i.e. `σ²`.
pub fn stiffness(nu: &ScalarField, grad: &MatrixField, p: f64) -> Result<ScalarField> {
    nu.grid().check_same(grad.grid(), "stiffness")?;
    let g = grad.values();
    let values = nu
        .values()
        .iter()
        .zip(g)
        .map(|(n, m)| n * pow_m2(m.norm_sq(), p))
        .collect();
    ScalarField::new(nu.grid().clone(), values)
}

/// Closed-form scalar profiles on the disk, used for `ν`, `Ψ` coefficients
/// and pressures.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Profile {
    Constant { value: f64 },
    /// `Σ c_k R^k`.
    RadialPoly { coeffs: Vec<f64> },
    /// `amp (1 + g2 R²) exp(s cos(l θ))`.
    ExpCos {
        amp: f64,
        l: u32,
        #[serde(default = "one")]
        s: f64,
        #[serde(default)]
        g2: f64,
    },
    /// `amp max(0, sin θ)²`; zero on the lower half-disk.
    SinThetaSq { amp: f64 },
    /// `c ln R`.
    LogR { c: f64 },
}

fn one() -> f64 {
    1.0
}

impl Profile {
    pub fn eval(&self, x: Point) -> f64 {
        match self {
            Profile::Constant { value } => *value,
            Profile::RadialPoly { coeffs } => coeffs.iter().rev().fold(0.0, |acc, c| acc * x.r + c),
            Profile::ExpCos { amp, l, s, g2 } => {
                amp * (1.0 + g2 * x.r * x.r) * (s * (*l as f64 * x.theta).cos()).exp()
            }
            Profile::SinThetaSq { amp } => {
                let s = x.theta.sin().max(0.0);
                amp * s * s
            }
            Profile::LogR { c } => c * x.r.ln(),
        }
    }

    pub fn sample(&self, grid: &PolarGrid) -> Result<ScalarField> {
        grid.sample_scalar(|x| self.eval(x))
    }

    pub fn scaled(&self, factor: f64) -> Profile {
        match self.clone() {
            Profile::Constant { value } => Profile::Constant { value: factor * value },
            Profile::RadialPoly { coeffs } => Profile::RadialPoly {
                coeffs: coeffs.into_iter().map(|c| factor * c).collect(),
            },
            Profile::ExpCos { amp, l, s, g2 } => Profile::ExpCos { amp: factor * amp, l, s, g2 },
            Profile::SinThetaSq { amp } => Profile::SinThetaSq { amp: factor * amp },
            Profile::LogR { c } => Profile::LogR { c: factor * c },
        }
    }
}

/// Value and first derivatives of `Ψ(x, ξ, d)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PsiEval {
    pub value: f64,
    pub d_xi: Mat2,
    pub d_d: f64,
}

/// A stored-energy term `Ψ(x, ξ, d)`. Implementations must be reentrant.
pub trait StoredEnergy: fmt::Debug + Send + Sync {
    fn name(&self) -> String;
    fn eval(&self, x: Point, xi: &Mat2, d: f64) -> PsiEval;
    /// True when the global growth bound fails for every `C`; such terms are
    /// only used for derivative-based criteria.
    fn local_only(&self) -> bool {
        false
    }
}

/// The gallery of stored energies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PsiSpec {
    Zero,
    /// `γ(x) (d − 1)²`.
    DetPenalty { gamma: Profile },
    /// `−ρ(x) d`.
    LinearDet { rho: Profile },
    /// `−c d²`, concave in `d`.
    ConcaveDet { c: f64 },
}

impl StoredEnergy for PsiSpec {
    fn name(&self) -> String {
        match self {
            PsiSpec::Zero => "zero".into(),
            PsiSpec::DetPenalty { .. } => "det_penalty".into(),
            PsiSpec::LinearDet { .. } => "linear_det".into(),
            PsiSpec::ConcaveDet { .. } => "concave_det".into(),
        }
    }

    fn eval(&self, x: Point, _xi: &Mat2, d: f64) -> PsiEval {
        let (value, d_d) = match self {
            PsiSpec::Zero => (0.0, 0.0),
            PsiSpec::DetPenalty { gamma } => {
                let g = gamma.eval(x);
                (g * (d - 1.0) * (d - 1.0), 2.0 * g * (d - 1.0))
            }
            PsiSpec::LinearDet { rho } => {
                let r = rho.eval(x);
                (-r * d, -r)
            }
            PsiSpec::ConcaveDet { c } => (-c * d * d, -2.0 * c * d),
        };
        PsiEval { value, d_xi: Mat2::ZERO, d_d }
    }

    fn local_only(&self) -> bool {
        matches!(self, PsiSpec::DetPenalty { .. } | PsiSpec::ConcaveDet { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Setting {
    Incompressible,
    Compressible,
}

/// `f(x, ξ) = ν(x) |ξ|^p`.
#[derive(Debug, Clone)]
pub struct PDirichletSpec {
    pub p: f64,
    pub nu: ScalarField,
}

impl PDirichletSpec {
    pub fn new(p: f64, nu: ScalarField) -> Result<Self> {
        check_exponent(p)?;
        check_nonnegative(&nu, "ν")?;
        Ok(PDirichletSpec { p, nu })
    }

    pub fn grid(&self) -> &PolarGrid {
        self.nu.grid()
    }
}

/// `Φ(x, ξ) = ν/p |ξ|^p + Ψ(x, ξ, det ξ)` with growth certificate `C`.
#[derive(Debug, Clone)]
pub struct PolyconvexSpec {
    pub p: f64,
    pub nu: ScalarField,
    pub psi: Arc<dyn StoredEnergy>,
    pub c: ScalarField,
}

impl PolyconvexSpec {
    pub fn new(p: f64, nu: ScalarField, psi: Arc<dyn StoredEnergy>, c: ScalarField) -> Result<Self> {
        check_exponent(p)?;
        check_nonnegative(&nu, "ν")?;
        check_nonnegative(&c, "C")?;
        nu.grid().check_same(c.grid(), "growth certificate")?;
        Ok(PolyconvexSpec { p, nu, psi, c })
    }

    /// Spec with a gallery `Ψ` and the matching growth certificate
    /// `C = ν + (p/2)|coef|`, which is valid whenever the gallery term admits one.
    pub fn from_gallery(p: f64, nu: ScalarField, psi: PsiSpec) -> Result<Self> {
        let grid = nu.grid().clone();
        let coef = match &psi {
            PsiSpec::Zero => ScalarField::zeros(&grid),
            PsiSpec::DetPenalty { gamma: f } | PsiSpec::LinearDet { rho: f } => f.sample(&grid)?,
            PsiSpec::ConcaveDet { c } => ScalarField::constant(&grid, *c),
        };
        let c = nu.zip_map(&coef, |n, a| n + 0.5 * p * a.abs())?;
        PolyconvexSpec::new(p, nu, Arc::new(psi), c)
    }

    pub fn grid(&self) -> &PolarGrid {
        self.nu.grid()
    }

    /// `Φ` at node `(i, k)`.
    pub fn phi(&self, i: usize, k: usize, xi: &Mat2) -> f64 {
        let grid = self.grid();
        let nu = self.nu.at(i, k);
        nu / self.p * pow_p(xi.norm_sq(), self.p) + self.psi.eval(grid.point(i, k), xi, xi.det()).value
    }

    pub fn dirichlet_part(&self) -> PDirichletSpec {
        PDirichletSpec { p: self.p, nu: self.nu.clone() }
    }
}

/// Either integrand, tagged by setting.
#[derive(Debug, Clone)]
pub enum Integrand {
    PDirichlet(PDirichletSpec),
    Polyconvex(PolyconvexSpec),
}

impl Integrand {
    pub fn setting(&self) -> Setting {
        match self {
            Integrand::PDirichlet(_) => Setting::Incompressible,
            Integrand::Polyconvex(_) => Setting::Compressible,
        }
    }

    pub fn p(&self) -> f64 {
        match self {
            Integrand::PDirichlet(s) => s.p,
            Integrand::Polyconvex(s) => s.p,
        }
    }

    pub fn nu(&self) -> &ScalarField {
        match self {
            Integrand::PDirichlet(s) => &s.nu,
            Integrand::Polyconvex(s) => &s.nu,
        }
    }
}

/// `E` from a precomputed gradient.
pub fn energy_e_from_gradient(grad: &MatrixField, spec: &PDirichletSpec) -> Result<f64> {
    spec.grid().check_same(grad.grid(), "eval_E")?;
    let values: Vec<f64> = spec
        .nu
        .values()
        .iter()
        .zip(grad.values())
        .map(|(n, m)| n * pow_p(m.norm_sq(), spec.p))
        .collect();
    spec.grid().integrate_values(&values, Weight::Dx)
}

/// `E(u) = ∫ ν |∇u|^p dx`.
pub fn eval_e(u: &VectorField, spec: &PDirichletSpec) -> Result<f64> {
    energy_e_from_gradient(&gradient(u), spec)
}

/// `I` from a precomputed gradient.
pub fn energy_i_from_gradient(grad: &MatrixField, spec: &PolyconvexSpec) -> Result<f64> {
    let grid = spec.grid();
    grid.check_same(grad.grid(), "eval_I")?;
    let values = grid.sample_nodes(|i, k| spec.phi(i, k, &grad.at(i, k)));
    grid.integrate_values(&values, Weight::Dx)
}

/// `I(u) = ∫ ν/p |∇u|^p + Ψ(x, ∇u, det ∇u) dx`.
pub fn eval_i(u: &VectorField, spec: &PolyconvexSpec) -> Result<f64> {
    energy_i_from_gradient(&gradient(u), spec)
}

/// `H(u, η) = ∫ p ν |∇u|^{p−2} ∇u · ∇η dx`.
pub fn mixed_term(grad_u: &MatrixField, grad_eta: &MatrixField, spec: &PDirichletSpec) -> Result<f64> {
    let grid = spec.grid();
    grid.check_same(grad_u.grid(), "mixed term")?;
    grid.check_same(grad_eta.grid(), "mixed term")?;
    let (a, b) = (grad_u.values(), grad_eta.values());
    let nu = spec.nu.values();
    let values = par::map_range(grid.len(), |j| spec.p * nu[j] * pow_m2(a[j].norm_sq(), spec.p) * a[j].dot(&b[j]));
    grid.integrate_values(&values, Weight::Dx)
}

/// Terms of the second-order expansion of `E` about `u` in direction `η`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Expansion {
    /// `E(u + η) − E(u)`, integrated pointwise to avoid cancellation.
    pub gap: f64,
    /// `(p/2) ∫ ν |∇u|^{p−2} |∇η|² dx`.
    pub quadratic: f64,
    /// `H(u, η)`.
    pub mixed: f64,
    /// `gap − quadratic − mixed`; non-negative pointwise.
    pub slack: f64,
}

pub fn expansion(u: &VectorField, eta: &VectorField, spec: &PDirichletSpec) -> Result<Expansion> {
    let grid = spec.grid();
    grid.check_same(u.grid(), "expansion")?;
    let ga = gradient(u);
    let gb = gradient(eta);
    let (a, e) = (ga.values(), gb.values());
    let nu = spec.nu.values();
    let p = spec.p;
    let terms = par::map_range(grid.len(), |j| {
        let b = a[j] + e[j];
        let w = nu[j] * pow_m2(a[j].norm_sq(), p);
        let gap = nu[j] * (pow_p(b.norm_sq(), p) - pow_p(a[j].norm_sq(), p));
        let quad = 0.5 * p * w * e[j].norm_sq();
        let mixed = p * w * a[j].dot(&e[j]);
        [gap, quad, mixed, gap - quad - mixed]
    });
    let col = |c: usize| -> Result<f64> {
        let v: Vec<f64> = terms.iter().map(|t| t[c]).collect();
        grid.integrate_values(&v, Weight::Dx)
    };
    Ok(Expansion { gap: col(0)?, quadratic: col(1)?, mixed: col(2)?, slack: col(3)? })
}

fn random_matrix<R: Rng + ?Sized>(rng: &mut R) -> Mat2 {
    Mat2::new(normal(rng), normal(rng), normal(rng), normal(rng))
}

/// Random matrix with log-uniform Frobenius norm in `[lo, hi]`.
fn random_matrix_with_norm<R: Rng + ?Sized>(rng: &mut R, lo: f64, hi: f64) -> Mat2 {
    let m = random_matrix(rng);
    let n = m.norm();
    if n == 0.0 {
        return Mat2::IDENTITY * lo;
    }
    m * (log_uniform(rng, lo, hi) / n)
}

const STRUCTURAL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GrowthWitness {
    pub i: usize,
    pub k: usize,
    pub r: f64,
    pub theta: f64,
    pub xi: Mat2,
    pub phi: f64,
    pub bound: f64,
    /// `max(Φ − bound, −Φ) / (1 + bound)`.
    pub excess: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GrowthReport {
    pub psi: String,
    pub local_only: bool,
    pub samples: usize,
    pub violations: usize,
    pub worst: Option<GrowthWitness>,
}

impl GrowthReport {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

/// Samples `0 ≤ Φ(x, ξ) ≤ C(x)/p (1 + |ξ|^p)` at random nodes and random
/// `ξ` with log-uniform norms in `[10⁻³, 10³]`.
pub fn check_growth(spec: &PolyconvexSpec, samples: usize, seed: u64) -> Result<GrowthReport> {
    if samples == 0 {
        return Err(Error::InvalidArgument("growth check needs at least one sample".into()));
    }
    let grid = spec.grid();
    let witnesses = par::map_range(samples, |t| {
        let mut rng = trial_rng(seed, t as u64);
        let (i, k) = grid.node(rng.gen_range(0..grid.len()));
        let xi = random_matrix_with_norm(&mut rng, 1e-3, 1e3);
        let phi = spec.phi(i, k, &xi);
        let bound = spec.c.at(i, k) / spec.p * (1.0 + pow_p(xi.norm_sq(), spec.p));
        let excess = (phi - bound).max(-phi) / (1.0 + bound);
        let x = grid.point(i, k);
        GrowthWitness { i, k, r: x.r, theta: x.theta, xi, phi, bound, excess }
    });
    let violations = witnesses.iter().filter(|w| !(w.excess <= STRUCTURAL_TOL)).count();
    let worst = witnesses
        .into_iter()
        .filter(|w| !(w.excess <= STRUCTURAL_TOL))
        .fold(None::<GrowthWitness>, |acc, w| match acc {
            Some(a) if !(w.excess > a.excess) => Some(a),
            _ => Some(w),
        });
    Ok(GrowthReport {
        psi: spec.psi.name(),
        local_only: spec.psi.local_only(),
        samples,
        violations,
        worst,
    })
}

/// Slack of `(1/p)|b|^p ≥ (1/p)|a|^p + |a|^{p−2} a·(b−a) + ½|a|^{p−2}|b−a|²`,
/// divided by `max(1, |a|^p, |b|^p, |a|^{p−2}|b−a|²)`.
pub fn subdifferential_slack(a: &Mat2, b: &Mat2, p: f64) -> f64 {
    let na = a.norm_sq();
    let nb = b.norm_sq();
    let w = pow_m2(na, p);
    let diff = *b - *a;
    let ap = pow_p(na, p);
    let bp = pow_p(nb, p);
    let quad = w * diff.norm_sq();
    let slack = bp / p - ap / p - w * a.dot(&diff) - 0.5 * quad;
    slack / 1f64.max(ap).max(bp).max(quad)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PairKind {
    General,
    ZeroBase,
    Equal,
    Colinear,
    Nearby,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubdiffReport {
    pub p: f64,
    pub trials: usize,
    pub violations: usize,
    pub min_slack: f64,
    /// Largest `|slack|` over the `a = b` pairs; zero in exact arithmetic.
    pub equal_pair_max_abs: f64,
    pub worst: Option<(Mat2, Mat2)>,
}

impl SubdiffReport {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

fn subdiff_pair<R: Rng + ?Sized>(rng: &mut R, kind: PairKind) -> (Mat2, Mat2) {
    let a = random_matrix_with_norm(rng, 1e-2, 1e2);
    match kind {
        PairKind::General => (a, random_matrix_with_norm(rng, 1e-2, 1e2)),
        PairKind::ZeroBase => (Mat2::ZERO, random_matrix_with_norm(rng, 1e-2, 1e2)),
        PairKind::Equal => (a, a),
        PairKind::Colinear => (a, a * (3.0 * normal(rng))),
        PairKind::Nearby => {
            let eps = log_uniform(rng, 1e-8, 1e-1) * a.norm();
            let e = random_matrix(rng);
            (a, a + e * (eps / e.norm().max(f64::MIN_POSITIVE)))
        }
    }
}

const PAIR_KINDS: [PairKind; 5] =
    [PairKind::General, PairKind::ZeroBase, PairKind::Equal, PairKind::Colinear, PairKind::Nearby];

/// Random-pair check of the pointwise inequality behind the energy expansion.
pub fn check_subdifferential(p: f64, trials: usize, seed: u64) -> Result<SubdiffReport> {
    check_exponent(p)?;
    let results = par::map_range(trials, |t| {
        let mut rng = trial_rng(seed, t as u64);
        let kind = PAIR_KINDS[t % PAIR_KINDS.len()];
        let (a, b) = subdiff_pair(&mut rng, kind);
        (kind, a, b, subdifferential_slack(&a, &b, p))
    });
    let mut report = SubdiffReport {
        p,
        trials,
        violations: 0,
        min_slack: f64::INFINITY,
        equal_pair_max_abs: 0.0,
        worst: None,
    };
    for (kind, a, b, s) in results {
        if kind == PairKind::Equal {
            report.equal_pair_max_abs = report.equal_pair_max_abs.max(s.abs());
        }
        if !(s >= -STRUCTURAL_TOL) {
            report.violations += 1;
        }
        if !(s >= report.min_slack) {
            report.min_slack = s;
            report.worst = Some((a, b));
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvexityReport {
    pub psi: String,
    pub trials: usize,
    pub violations: usize,
    /// Largest `(Ψ(mid) − avg) / (1 + |Ψ(z)| + |Ψ(w)|)`.
    pub worst_excess: f64,
}

impl ConvexityReport {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

/// Sampled midpoint convexity of `(ξ, d) ↦ Ψ(x, ξ, d)` at random points.
pub fn check_psi_convexity(psi: &dyn StoredEnergy, trials: usize, seed: u64) -> ConvexityReport {
    let excess = par::map_range(trials, |t| {
        let mut rng = trial_rng(seed, t as u64);
        let x = Point::new(rng.gen::<f64>().sqrt(), rng.gen_range(0.0..std::f64::consts::TAU));
        let scale = log_uniform(&mut rng, 1e-2, 1e2);
        let (zx, zd) = (random_matrix(&mut rng) * scale, normal(&mut rng) * scale);
        let (wx, wd) = (random_matrix(&mut rng) * scale, normal(&mut rng) * scale);
        let mx = (zx + wx) * 0.5;
        let md = 0.5 * (zd + wd);
        let pz = psi.eval(x, &zx, zd).value;
        let pw = psi.eval(x, &wx, wd).value;
        let pm = psi.eval(x, &mx, md).value;
        (pm - 0.5 * (pz + pw)) / (1.0 + pz.abs() + pw.abs())
    });
    let violations = excess.iter().filter(|e| !(**e <= STRUCTURAL_TOL)).count();
    let worst_excess = excess.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    ConvexityReport { psi: psi.name(), trials, violations, worst_excess }
}

/// Closed-form reference maps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MapKind {
    Identity,
    /// `u_N = (R/√N)(cos Nθ, sin Nθ)`.
    NCover { n: u32 },
    /// `u = A x`.
    Affine { a: Mat2 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReferenceMap {
    pub name: String,
    pub kind: MapKind,
    pub measure_preserving: bool,
}

const DET_CLAIM_TOL: f64 = 1e-8;

impl ReferenceMap {
    /// Builds the map and re-verifies the measure-preservation claim on a
    /// 64×64 check grid.
    pub fn new(kind: MapKind, measure_preserving: bool) -> Result<Self> {
        if let MapKind::NCover { n: 0 } = kind {
            return Err(Error::InvalidArgument("N-cover needs N ≥ 1".into()));
        }
        let name = match &kind {
            MapKind::Identity => "identity".to_string(),
            MapKind::NCover { n } => format!("ncover{n}"),
            MapKind::Affine { .. } => "affine".to_string(),
        };
        let map = ReferenceMap { name, kind, measure_preserving };
        if measure_preserving {
            let check = PolarGrid::new(64, 64)?;
            let max_dev = map.sample_gradient(&check)?.values().iter().map(|m| (m.det() - 1.0).abs()).fold(0.0, f64::max);
            if !(max_dev <= DET_CLAIM_TOL) {
                return Err(Error::DetConstraint { max_dev, tol: DET_CLAIM_TOL });
            }
        }
        Ok(map)
    }

    pub fn identity() -> Self {
        ReferenceMap::new(MapKind::Identity, true).expect("identity is measure-preserving")
    }

    pub fn ncover(n: u32) -> Result<Self> {
        ReferenceMap::new(MapKind::NCover { n }, true)
    }

    /// Affine map; measure-preserving exactly when `|det A − 1| ≤ 1e−8`.
    pub fn affine(a: Mat2) -> Result<Self> {
        let mp = (a.det() - 1.0).abs() <= DET_CLAIM_TOL;
        ReferenceMap::new(MapKind::Affine { a }, mp)
    }

    pub fn eval(&self, x: Point) -> [f64; 2] {
        match &self.kind {
            MapKind::Identity => x.cartesian(),
            MapKind::NCover { n } => {
                let n = *n as f64;
                let s = x.r / n.sqrt();
                [s * (n * x.theta).cos(), s * (n * x.theta).sin()]
            }
            MapKind::Affine { a } => a.mul_vec(x.cartesian()),
        }
    }

    pub fn gradient_at(&self, x: Point) -> Mat2 {
        match &self.kind {
            MapKind::Identity => Mat2::IDENTITY,
            MapKind::NCover { n } => {
                let nf = *n as f64;
                let (c, s) = (x.theta.cos(), x.theta.sin());
                let (cn, sn) = ((nf * x.theta).cos(), (nf * x.theta).sin());
                // ∇u = u,_R ⊗ e_R + R⁻¹ u,_θ ⊗ e_θ
                let ur = [cn / nf.sqrt(), sn / nf.sqrt()];
                let ut = [-nf.sqrt() * sn, nf.sqrt() * cn];
                Mat2::new(ur[0] * c - ut[0] * s, ur[0] * s + ut[0] * c, ur[1] * c - ut[1] * s, ur[1] * s + ut[1] * c)
            }
            MapKind::Affine { a } => *a,
        }
    }

    pub fn sample(&self, grid: &PolarGrid) -> Result<VectorField> {
        grid.sample_vector(|x| self.eval(x))
    }

    pub fn sample_gradient(&self, grid: &PolarGrid) -> Result<MatrixField> {
        grid.sample_matrix(|x| self.gradient_at(x))
    }

    /// Pressure that makes the map stationary for `E` with `ν ≡ ν0`, when one
    /// is known in closed form.
    pub fn known_pressure(&self, nu0: f64, p: f64) -> Option<Profile> {
        if !self.measure_preserving {
            return None;
        }
        match &self.kind {
            MapKind::Identity | MapKind::Affine { .. } => Some(Profile::Constant { value: 0.0 }),
            MapKind::NCover { n } => {
                let n = *n as f64;
                let c = pow_m2(n + 1.0 / n, p);
                Some(Profile::LogR { c: nu0 * c * (n * n - 1.0) / n })
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NamedProfile {
    pub name: String,
    pub profile: Profile,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NamedPsi {
    pub name: String,
    pub psi: PsiSpec,
    pub local_only: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Gallery {
    pub maps: Vec<ReferenceMap>,
    pub nu_profiles: Vec<NamedProfile>,
    pub psi: Vec<NamedPsi>,
}

impl Gallery {
    pub fn map(&self, name: &str) -> Option<&ReferenceMap> {
        self.maps.iter().find(|m| m.name == name)
    }

    pub fn nu(&self, name: &str) -> Option<&Profile> {
        self.nu_profiles.iter().find(|p| p.name == name).map(|p| &p.profile)
    }

    pub fn psi(&self, name: &str) -> Option<&PsiSpec> {
        self.psi.iter().find(|p| p.name == name).map(|p| &p.psi)
    }

    /// Polyconvex specs for every gallery `Ψ` on `grid` with `ν` from `nu`.
    pub fn polyconvex_specs(&self, grid: &PolarGrid, p: f64, nu: &Profile) -> Result<Vec<(String, PolyconvexSpec)>> {
        self.psi
            .iter()
            .map(|n| Ok((n.name.clone(), PolyconvexSpec::from_gallery(p, nu.sample(grid)?, n.psi.clone())?)))
            .collect()
    }
}

pub fn gallery() -> Result<Gallery> {
    let shear = Mat2::new(1.0, 0.5, 0.0, 1.0);
    let stretch = Mat2::new(2.0, 0.0, 0.0, 0.5);
    let dilation = Mat2::new(1.2, 0.0, 0.0, 1.2);
    let maps = vec![
        ReferenceMap::identity(),
        ReferenceMap::ncover(2)?,
        ReferenceMap::ncover(3)?,
        named(ReferenceMap::affine(shear)?, "affine_shear"),
        named(ReferenceMap::affine(stretch)?, "affine_stretch"),
        named(ReferenceMap::affine(dilation)?, "affine_dilation"),
    ];
    let prof = |name: &str, profile: Profile| NamedProfile { name: name.into(), profile };
    let nu_profiles = vec![
        prof("constant", Profile::Constant { value: 1.0 }),
        prof("radial", Profile::RadialPoly { coeffs: vec![1.0, 0.0, 0.5] }),
        prof("expcos2", Profile::ExpCos { amp: 1.0, l: 2, s: 1.0, g2: 0.0 }),
        prof("expcos3", Profile::ExpCos { amp: 1.0, l: 3, s: 1.0, g2: 0.5 }),
        prof("sin_theta_sq", Profile::SinThetaSq { amp: 1.0 }),
    ];
    let psi = [
        ("zero", PsiSpec::Zero),
        ("det_penalty", PsiSpec::DetPenalty { gamma: Profile::Constant { value: 1.0 } }),
        ("linear_det", PsiSpec::LinearDet { rho: Profile::RadialPoly { coeffs: vec![0.0, 0.0, 0.25] } }),
    ]
    .into_iter()
    .map(|(name, psi)| NamedPsi { name: name.into(), local_only: psi.local_only(), psi })
    .collect();
    Ok(Gallery { maps, nu_profiles, psi })
}

fn named(mut m: ReferenceMap, name: &str) -> ReferenceMap {
    m.name = name.into();
    m
}
