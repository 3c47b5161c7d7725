//! Certificate integers and the full-class shortcut.
//!
//! With `σ² = ν |∇u|^{p−2}` and `y = R ∇λ` written in the polar frame,
//!
//! ```text
//! |σ,_θ| ≤ l σ
//! |y|_∞ ≤ (n / √2) σ²
//! |y|_∞ ≤ (√3 m / (2√2)) σ²
//! ```
//!
//! must hold at every node; `n* = n + l`, `m* = m + l`. In the compressible
//! setting `λ` is replaced by `q = ∂_dΨ(x, ∇u, det ∇u)`.

use std::f64::consts::SQRT_2;

use serde::{Serialize, Serializer};

use crate::diffops::{gradient, scalar_gradient, scaled_polar};
use crate::energies::{stiffness, Integrand, PolyconvexSpec, Setting};
use crate::error::{Error, Result};
use crate::fourier::d_theta;
use crate::grid::{MatrixField, ScalarField, VectorField, Weight};
use crate::stationarity::StationaryCandidate;

/// Numerator and denominator below this are treated as zero.
pub const ZERO_TOL: f64 = 1e-12;
/// Roundoff allowance when taking ceilings of grid suprema.
pub const CEIL_TOL: f64 = 1e-8;
/// Margin above which an inequality counts as strict.
pub const STRICT_TOL: f64 = 1e-10;

pub const N_FACTOR: f64 = SQRT_2;
/// `2√2 / √3`.
pub fn m_factor() -> f64 {
    2.0 * SQRT_2 / 3f64.sqrt()
}

/// A certificate integer, or `unbounded` when the weight vanishes where the
/// controlled quantity does not.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Bound {
    Finite(u64),
    Unbounded,
}

impl Bound {
    pub fn finite(self) -> Option<u64> {
        match self {
            Bound::Finite(k) => Some(k),
            Bound::Unbounded => None,
        }
    }
}

impl Serialize for Bound {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Bound::Finite(k) => s.serialize_u64(*k),
            Bound::Unbounded => s.serialize_str("unbounded"),
        }
    }
}

/// Smallest integer `k` with `factor · num ≤ k · den` at every node.
#[derive(Debug, Clone)]
pub struct IntegerEstimate {
    pub value: Bound,
    /// Grid supremum of `factor · num / den` over the nodes that count.
    pub sup_ratio: f64,
    /// `(k + CEIL_TOL) den / factor − num`; zero at skipped nodes, absent
    /// when unbounded.
    pub margin: Option<ScalarField>,
    num: ScalarField,
    den: ScalarField,
    factor: f64,
}

impl IntegerEstimate {
    fn from_ratio(num: ScalarField, den: ScalarField, factor: f64) -> Result<Self> {
        num.grid().check_same(den.grid(), "ratio")?;
        let mut sup = 0.0f64;
        let mut unbounded = false;
        for (a, b) in num.values().iter().zip(den.values()) {
            if *b < ZERO_TOL {
                if *a >= ZERO_TOL {
                    unbounded = true;
                }
                continue;
            }
            sup = sup.max(factor * a / b);
        }
        if !sup.is_finite() {
            unbounded = true;
        }
        let mut est = IntegerEstimate { value: Bound::Unbounded, sup_ratio: sup, margin: None, num, den, factor };
        if !unbounded {
            let k = (sup - CEIL_TOL).ceil().max(0.0) as u64;
            est.value = Bound::Finite(k);
            est.margin = Some(est.margin_for(k)?);
        }
        Ok(est)
    }

    fn margin_for(&self, k: u64) -> Result<ScalarField> {
        let values = self
            .num
            .values()
            .iter()
            .zip(self.den.values())
            .map(|(a, b)| {
                if *b < ZERO_TOL && *a < ZERO_TOL {
                    0.0
                } else {
                    (k as f64 + CEIL_TOL) * b / self.factor - a
                }
            })
            .collect();
        ScalarField::new(self.num.grid().clone(), values)
    }

    /// Whether the inequality holds at every node with integer `k`.
    pub fn accepts(&self, k: u64) -> bool {
        self.margin_for(k).map(|m| m.min() >= 0.0).unwrap_or(false)
    }

    /// Quadrature measure of `{margin > STRICT_TOL}`.
    pub fn strict_measure(&self) -> f64 {
        match &self.margin {
            Some(m) => {
                let ind: Vec<f64> = m.values().iter().map(|v| if *v > STRICT_TOL { 1.0 } else { 0.0 }).collect();
                m.grid().integrate_values(&ind, Weight::Dx).unwrap_or(0.0)
            }
            None => 0.0,
        }
    }
}

/// `σ = √(ν |∇u|^{p−2})`.
pub fn compute_sigma(nu: &ScalarField, u: &VectorField, p: f64) -> Result<ScalarField> {
    sigma_from_gradient(nu, &gradient(u), p)
}

pub fn sigma_from_gradient(nu: &ScalarField, grad: &MatrixField, p: f64) -> Result<ScalarField> {
    Ok(stiffness(nu, grad, p)?.map(f64::sqrt))
}

/// `|σ,_θ| ≤ l σ`.
pub fn estimate_l(sigma: &ScalarField) -> Result<IntegerEstimate> {
    let num = d_theta(sigma).map(f64::abs);
    IntegerEstimate::from_ratio(num, sigma.clone(), 1.0)
}

/// `|y|_∞` of a scaled polar field `(R g_R, g_θ)`.
fn polar_maxnorm_of(scaled: &VectorField) -> ScalarField {
    crate::diffops::polar_maxnorm_field(scaled)
}

/// `|R ∇λ|_∞ ≤ (n/√2) σ²`, with `R ∇λ` given in the polar frame.
pub fn estimate_n(scaled_gradient: &VectorField, sigma_sq: &ScalarField) -> Result<IntegerEstimate> {
    IntegerEstimate::from_ratio(polar_maxnorm_of(scaled_gradient), sigma_sq.clone(), N_FACTOR)
}

/// `|R ∇λ|_∞ ≤ (√3 m / (2√2)) σ²`.
pub fn estimate_m(scaled_gradient: &VectorField, sigma_sq: &ScalarField) -> Result<IntegerEstimate> {
    IntegerEstimate::from_ratio(polar_maxnorm_of(scaled_gradient), sigma_sq.clone(), m_factor())
}

/// Source of the pressure gradient.
#[derive(Debug, Clone, Copy)]
pub enum PressureInput<'a> {
    Field(&'a ScalarField),
    /// Cartesian gradient.
    Gradient(&'a VectorField),
}

fn scaled_pressure_gradient(p: PressureInput<'_>) -> VectorField {
    match p {
        PressureInput::Field(l) => scalar_gradient(l).scaled_polar,
        PressureInput::Gradient(g) => scaled_polar(g),
    }
}

pub fn estimate_n_incompressible(pressure: PressureInput<'_>, nu: &ScalarField, u: &VectorField, p: f64) -> Result<IntegerEstimate> {
    let s2 = stiffness(nu, &gradient(u), p)?;
    estimate_n(&scaled_pressure_gradient(pressure), &s2)
}

pub fn estimate_m_incompressible(pressure: PressureInput<'_>, nu: &ScalarField, u: &VectorField, p: f64) -> Result<IntegerEstimate> {
    let s2 = stiffness(nu, &gradient(u), p)?;
    estimate_m(&scaled_pressure_gradient(pressure), &s2)
}

/// `q(x) = ∂_dΨ(x, ∇u(x), det ∇u(x))`.
pub fn det_derivative_field(spec: &PolyconvexSpec, grad: &MatrixField) -> Result<ScalarField> {
    let grid = spec.grid();
    grid.check_same(grad.grid(), "∂_dΨ")?;
    let values = grid.sample_nodes(|i, k| {
        let xi = grad.at(i, k);
        spec.psi.eval(grid.point(i, k), &xi, xi.det()).d_d
    });
    ScalarField::new(grid.clone(), values)
}

pub fn estimate_n_compressible(spec: &PolyconvexSpec, u: &VectorField) -> Result<IntegerEstimate> {
    let grad = gradient(u);
    let q = det_derivative_field(spec, &grad)?;
    estimate_n(&scalar_gradient(&q).scaled_polar, &stiffness(&spec.nu, &grad, spec.p)?)
}

pub fn estimate_m_compressible(spec: &PolyconvexSpec, u: &VectorField) -> Result<IntegerEstimate> {
    let grad = gradient(u);
    let q = det_derivative_field(spec, &grad)?;
    estimate_m(&scalar_gradient(&q).scaled_polar, &stiffness(&spec.nu, &grad, spec.p)?)
}

#[derive(Debug, Clone)]
pub struct SivSpector {
    pub holds: bool,
    /// `ν |∇u|^{p−2} − |∂_dΨ| R`.
    pub margin: ScalarField,
    pub min_margin: f64,
}

/// `|∂_dΨ(x, ∇u, det ∇u)| R ≤ ν |∇u|^{p−2}` at every node, `R = |x|`.
pub fn check_siv_spector(spec: &PolyconvexSpec, u: &VectorField) -> Result<SivSpector> {
    let grid = spec.grid();
    let grad = gradient(u);
    let q = det_derivative_field(spec, &grad)?;
    let s2 = stiffness(&spec.nu, &grad, spec.p)?;
    let values = grid.sample_nodes(|i, k| s2.at(i, k) - q.at(i, k).abs() * grid.radius(i));
    let margin = ScalarField::new(grid.clone(), values)?;
    let min_margin = margin.min();
    Ok(SivSpector { holds: min_margin >= 0.0, margin, min_margin })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StrictMeasure {
    pub l: f64,
    pub n: f64,
    pub m: f64,
}

/// Everything computed for one candidate.
#[derive(Debug, Clone)]
pub struct CertificateReport {
    pub setting: Setting,
    pub p: f64,
    pub sigma: ScalarField,
    pub sigma_min: f64,
    pub sigma_max: f64,
    pub l: IntegerEstimate,
    pub n: IntegerEstimate,
    pub m: IntegerEstimate,
    pub n_star: Option<u64>,
    pub m_star: Option<u64>,
    pub full_class: bool,
    pub strict_measure: StrictMeasure,
    pub siv_spector: Option<SivSpector>,
    /// False when any integer is unbounded.
    pub applicable: bool,
    pub notes: Vec<String>,
}

/// The serialized form; keys are fixed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CertificateJson {
    pub setting: Setting,
    pub p: f64,
    pub l: Bound,
    pub n: Bound,
    pub m: Bound,
    pub n_star: Option<u64>,
    pub m_star: Option<u64>,
    pub sigma_min: f64,
    pub sigma_max: f64,
    pub full_class: bool,
    pub strict_measure: StrictMeasure,
    pub siv_spector: Option<bool>,
    pub notes: Vec<String>,
}

impl CertificateReport {
    pub fn to_json(&self) -> CertificateJson {
        CertificateJson {
            setting: self.setting,
            p: self.p,
            l: self.l.value,
            n: self.n.value,
            m: self.m.value,
            n_star: self.n_star,
            m_star: self.m_star,
            sigma_min: self.sigma_min,
            sigma_max: self.sigma_max,
            full_class: self.full_class,
            strict_measure: self.strict_measure,
            siv_spector: self.siv_spector.as_ref().map(|s| s.holds),
            notes: self.notes.clone(),
        }
    }
}

/// Full-class shortcut: `n* = 0` or `m* ≤ 1`, all integers finite.
pub fn full_class(l: Bound, n: Bound, m: Bound) -> bool {
    match (l, n, m) {
        (Bound::Finite(l), Bound::Finite(n), Bound::Finite(m)) => n + l == 0 || m + l <= 1,
        _ => false,
    }
}

fn star(a: Bound, l: Bound) -> Option<u64> {
    Some(a.finite()? + l.finite()?)
}

/// Assembles the certificate for a candidate of the stated setting.
pub fn certify(c: &StationaryCandidate, setting: Setting) -> Result<CertificateReport> {
    if c.setting() != setting {
        return Err(Error::SettingMismatch(format!(
            "candidate is {:?}, certificate requested for {setting:?}",
            c.setting()
        )));
    }
    let grad = gradient(&c.u);
    let p = c.integrand.p();
    let nu = c.integrand.nu();
    let s2 = stiffness(nu, &grad, p)?;
    let sigma = s2.map(f64::sqrt);
    let mut notes = Vec::new();

    let (scaled, siv) = match &c.integrand {
        Integrand::PDirichlet(_) => {
            let scaled = match (&c.pressure_gradient, &c.pressure) {
                (Some(g), _) => scaled_pressure_gradient(PressureInput::Gradient(g)),
                (None, Some(l)) => scaled_pressure_gradient(PressureInput::Field(l)),
                (None, None) => return Err(Error::MissingPressure),
            };
            (scaled, None)
        }
        Integrand::Polyconvex(spec) => {
            if c.pressure.is_some() || c.pressure_gradient.is_some() {
                return Err(Error::SettingMismatch("pressure supplied for a compressible candidate".into()));
            }
            let q = det_derivative_field(spec, &grad)?;
            notes.push("comparison criterion uses R = |x|".into());
            (scalar_gradient(&q).scaled_polar, Some(check_siv_spector(spec, &c.u)?))
        }
    };

    let l = estimate_l(&sigma)?;
    let n = estimate_n(&scaled, &s2)?;
    let m = estimate_m(&scaled, &s2)?;
    let applicable = l.value != Bound::Unbounded && n.value != Bound::Unbounded && m.value != Bound::Unbounded;
    if !applicable {
        notes.push("certificate not applicable: an integer is unbounded".into());
    }
    let sigma_min = sigma.min();
    let sigma_max = sigma.max();
    if sigma_min > 0.0 {
        notes.push(format!("sigma bounded below by {sigma_min:.6e}"));
    } else {
        notes.push("sigma vanishes somewhere; minimality only, no uniqueness".into());
    }
    if p > 2.0 {
        let e = 4.0 / (p - 2.0);
        let integral = sigma.map(|s| s.powf(e)).integrate(Weight::Dx)?;
        notes.push(format!("integral of sigma^{e:.6} = {integral:.6e}"));
    } else {
        notes.push("p = 2: sigma integrability condition is vacuous".into());
    }
    let full = full_class(l.value, n.value, m.value);
    if !full && n.value == Bound::Finite(0) && l.value != Bound::Finite(0) {
        notes.push("pressure gradient vanishes but l > 0; threshold condition for the full class not met".into());
    }
    Ok(CertificateReport {
        setting,
        p,
        sigma_min,
        sigma_max,
        n_star: star(n.value, l.value),
        m_star: star(m.value, l.value),
        full_class: full,
        strict_measure: StrictMeasure { l: l.strict_measure(), n: n.strict_measure(), m: m.strict_measure() },
        siv_spector: siv,
        applicable,
        notes,
        sigma,
        l,
        n,
        m,
    })
}
