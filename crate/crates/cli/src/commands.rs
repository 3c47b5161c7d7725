use anyhow::{anyhow, bail, Context, Result};
use serde::Serialize;

use diskcert::certifier::{certify, compute_sigma, det_derivative_field, estimate_l, Bound, CertificateReport};
use diskcert::diffops::gradient;
use diskcert::energies::{
    check_growth, check_subdifferential, eval_e, eval_i, gallery, Gallery, PDirichletSpec, PolyconvexSpec, Setting,
};
use diskcert::fourier::mode_masses;
use diskcert::io::{read_field, write_field_to, AnyField};
use diskcert::lab::{
    energy_gap_compressible, energy_gap_incompressible, make_band_variation, make_measure_preserving_variation,
    random_flow, verify_det_identity, verify_h_lower_bound, verify_poincare, verify_weighted_fourier, BandSpec,
    GapOptions, GridInterpolant, HPart, HSetup, PointMap, SuiteReport, TrialRecord,
};
use diskcert::rng::trial_rng;
use diskcert::stationarity::{
    default_base, det_deviation, ele_residual, integrate_pressure, recover_pressure_gradient, StationaryCandidate,
};
use diskcert::{PolarGrid, ScalarField, VectorField};

use crate::config::{
    load_scalar, psi_spec, reference_map, sample_map, sample_scalar, PressureSource, RunConfig, ScalarSource,
    VariationKind,
};

/// How a successful run ended; maps to the process exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    /// Certificate applicable, residual within tolerance, suite passed.
    Positive,
    /// Not applicable, not stationary, suite failed.
    Negative,
}

impl Outcome {
    pub fn exit_code(self) -> i32 {
        match self {
            Outcome::Positive => 0,
            Outcome::Negative => 2,
        }
    }

    fn from_bool(ok: bool) -> Self {
        if ok {
            Outcome::Positive
        } else {
            Outcome::Negative
        }
    }
}

/// Files of a finished command, held in memory until every computation
/// has succeeded.
#[derive(Debug, Clone)]
pub struct CommandOutput {
    pub outcome: Outcome,
    /// `(file name, bytes)` in write order.
    pub files: Vec<(String, Vec<u8>)>,
}

impl CommandOutput {
    fn new(outcome: Outcome) -> Self {
        CommandOutput { outcome, files: Vec::new() }
    }

    fn json<T: Serialize>(mut self, name: &str, value: &T) -> Result<Self> {
        let mut bytes = serde_json::to_vec_pretty(value)?;
        bytes.push(b'\n');
        self.files.push((name.into(), bytes));
        Ok(self)
    }

    fn field(mut self, name: &str, field: AnyField, label: &str) -> Result<Self> {
        let mut bytes = Vec::new();
        write_field_to(&mut bytes, &field, label)?;
        self.files.push((name.into(), bytes));
        Ok(self)
    }

    pub fn file(&self, name: &str) -> Option<&[u8]> {
        self.files.iter().find(|(n, _)| n == name).map(|(_, b)| b.as_slice())
    }
}

pub const SUITES: [&str; 8] = ["poincare", "fourier", "det-identity", "h-bound", "gap-inc", "gap-comp", "growth", "subdiff"];

/// Everything derived from the config's map, weight and integrand.
struct Inputs {
    gallery: Gallery,
    grid: PolarGrid,
    u: VectorField,
    nu: ScalarField,
}

impl Inputs {
    fn load(cfg: &RunConfig) -> Result<Self> {
        cfg.validate()?;
        let gallery = gallery()?;
        let grid = cfg.polar_grid()?;
        let u = sample_map(&cfg.map, &gallery, &grid).context("loading map")?;
        let nu = sample_scalar(&cfg.nu, &gallery, &grid).context("loading ν")?;
        Ok(Inputs { gallery, grid, u, nu })
    }

    fn polyconvex(&self, cfg: &RunConfig) -> Result<PolyconvexSpec> {
        let psi = psi_spec(cfg.psi.as_ref(), &self.gallery)?;
        Ok(PolyconvexSpec::from_gallery(cfg.p, self.nu.clone(), psi)?)
    }

    fn candidate(&self, cfg: &RunConfig) -> Result<StationaryCandidate> {
        match cfg.setting {
            Setting::Compressible => {
                if cfg.pressure.is_some() {
                    bail!("a pressure is only meaningful in the incompressible setting");
                }
                Ok(StationaryCandidate::compressible(self.u.clone(), self.polyconvex(cfg)?)?)
            }
            Setting::Incompressible => {
                let spec = PDirichletSpec::new(cfg.p, self.nu.clone())?;
                let tol = &cfg.tolerances;
                let Some(src) = &cfg.pressure else {
                    return Err(diskcert::Error::MissingPressure.into());
                };
                let lambda = match src {
                    PressureSource::Known => Some(self.known_pressure(cfg)?),
                    PressureSource::Inline(p) => Some(p.sample(&self.grid)?),
                    PressureSource::File(p) => Some(load_scalar(p, &self.grid)?),
                    PressureSource::Recover => None,
                };
                match lambda {
                    Some(l) => Ok(StationaryCandidate::incompressible(self.u.clone(), spec, Some(l), tol.det)?),
                    None => {
                        let rec = recover_pressure_gradient(&self.u, &spec)?;
                        let c = StationaryCandidate::incompressible(self.u.clone(), spec, None, tol.det)?;
                        Ok(c.with_pressure_gradient(rec.g, tol.curl)?)
                    }
                }
            }
        }
    }

    fn known_pressure(&self, cfg: &RunConfig) -> Result<ScalarField> {
        let map = reference_map(&cfg.map, &self.gallery)?
            .ok_or_else(|| anyhow!("a known pressure needs a closed-form map"))?;
        let (lo, hi) = (self.nu.min(), self.nu.max());
        if lo != hi {
            bail!("a known pressure needs a constant ν, found values in [{lo}, {hi}]");
        }
        let profile = map
            .known_pressure(lo, cfg.p)
            .ok_or_else(|| anyhow!("no closed-form pressure for map {:?}", map.name))?;
        Ok(profile.sample(&self.grid)?)
    }
}

#[derive(Serialize)]
struct ModeMass {
    mode: usize,
    mass: f64,
    fraction: f64,
}

#[derive(Serialize)]
struct Spectrum {
    name: String,
    n_r: usize,
    n_theta: usize,
    components: usize,
    total: f64,
    modes: Vec<ModeMass>,
}

/// Masses below this fraction of the total are dropped from the table.
const MASS_FLOOR: f64 = 1e-24;

pub fn cmd_decompose(cfg: &RunConfig) -> Result<CommandOutput> {
    let (name, field) = match &cfg.field {
        Some(path) => {
            cfg.validate()?;
            let (h, f) = read_field(path)?;
            (h.name, f)
        }
        None => {
            let inputs = Inputs::load(cfg)?;
            ("map".to_string(), AnyField::Vector(inputs.u))
        }
    };
    let grid = field.grid().clone();
    let components = field.components();
    let masses = match &field {
        AnyField::Scalar(f) => mode_masses(f),
        AnyField::Vector(f) => mode_masses(f),
        AnyField::Matrix(_) => bail!("decompose takes scalar or vector fields"),
    };
    let total: f64 = masses.iter().sum();
    let modes = masses
        .iter()
        .enumerate()
        .filter(|(_, m)| total > 0.0 && **m > MASS_FLOOR * total)
        .map(|(j, m)| ModeMass { mode: j, mass: *m, fraction: m / total })
        .collect();
    let spectrum = Spectrum { name, n_r: grid.n_r(), n_theta: grid.n_theta(), components, total, modes };
    CommandOutput::new(Outcome::Positive).json("spectrum.json", &spectrum)
}

pub fn certificate(cfg: &RunConfig) -> Result<CertificateReport> {
    let inputs = Inputs::load(cfg)?;
    let c = inputs.candidate(cfg)?;
    Ok(certify(&c, cfg.setting)?)
}

pub fn cmd_certify(cfg: &RunConfig) -> Result<CommandOutput> {
    let report = certificate(cfg)?;
    CommandOutput::new(Outcome::from_bool(report.applicable))
        .json("certificate.json", &report.to_json())?
        .json("run.json", cfg)
}

#[derive(Serialize)]
struct ResidualOut<'a> {
    tolerance: f64,
    passes: bool,
    report: &'a diskcert::stationarity::ResidualReport,
}

pub fn cmd_residual(cfg: &RunConfig) -> Result<CommandOutput> {
    let inputs = Inputs::load(cfg)?;
    let c = inputs.candidate(cfg)?;
    let report = ele_residual(&c, &cfg.basis)?;
    let tol = cfg.tolerances.residual;
    let passes = report.passes(tol);
    CommandOutput::new(Outcome::from_bool(passes))
        .json("residual.json", &ResidualOut { tolerance: tol, passes, report: &report })?
        .json("run.json", cfg)
}

#[derive(Serialize)]
struct EnergyOut {
    setting: Setting,
    p: f64,
    energy: f64,
    det_max_dev: f64,
}

pub fn cmd_energy(cfg: &RunConfig) -> Result<CommandOutput> {
    let inputs = Inputs::load(cfg)?;
    let energy = match cfg.setting {
        Setting::Incompressible => eval_e(&inputs.u, &PDirichletSpec::new(cfg.p, inputs.nu.clone())?)?,
        Setting::Compressible => eval_i(&inputs.u, &inputs.polyconvex(cfg)?)?,
    };
    let det_max_dev = det_deviation(&gradient(&inputs.u));
    CommandOutput::new(Outcome::Positive)
        .json("energy.json", &EnergyOut { setting: cfg.setting, p: cfg.p, energy, det_max_dev })?
        .json("run.json", cfg)
}

#[derive(Serialize)]
struct PressureOut {
    max_curl: f64,
    curl_tolerance: f64,
    is_gradient: bool,
    det_max_dev: f64,
    base: (usize, usize),
    path_gap: Option<f64>,
    residual: Option<f64>,
}

/// Recovers `∇λ`, integrates it and closes the loop with the ELE residual.
/// A gradient that is not curl-free is a negative outcome, not an error.
pub fn cmd_pressure(cfg: &RunConfig) -> Result<CommandOutput> {
    if cfg.setting != Setting::Incompressible {
        bail!("pressure recovery is an incompressible-setting operation");
    }
    let inputs = Inputs::load(cfg)?;
    let spec = PDirichletSpec::new(cfg.p, inputs.nu.clone())?;
    let rec = recover_pressure_gradient(&inputs.u, &spec)?;
    let base = default_base(&inputs.grid);
    let tol = cfg.tolerances.curl;
    let mut out = PressureOut {
        max_curl: rec.max_curl,
        curl_tolerance: tol,
        is_gradient: rec.is_gradient(tol),
        det_max_dev: rec.det_max_dev,
        base,
        path_gap: None,
        residual: None,
    };
    if !out.is_gradient {
        return CommandOutput::new(Outcome::Negative).json("pressure.json", &out)?.json("run.json", cfg);
    }
    let integ = integrate_pressure(&rec.g, base, tol)?;
    let c = StationaryCandidate::incompressible(inputs.u.clone(), spec, Some(integ.lambda.clone()), cfg.tolerances.det)?;
    let residual = ele_residual(&c, &cfg.basis)?.max_normalized;
    out.path_gap = Some(integ.path_gap);
    out.residual = Some(residual);
    CommandOutput::new(Outcome::from_bool(residual <= cfg.tolerances.residual))
        .field("pressure.csv", AnyField::Scalar(integ.lambda), "lambda")?
        .json("pressure.json", &out)?
        .json("run.json", cfg)
}

#[derive(Serialize)]
struct VariationOut {
    kind: VariationKind,
    seed: u64,
    det_max_dev: Option<f64>,
    eta_max_abs: f64,
    band: Option<BandSpec>,
    flow: Option<diskcert::lab::FlowSpec>,
}

pub fn cmd_variation(cfg: &RunConfig) -> Result<CommandOutput> {
    let inputs = Inputs::load(cfg)?;
    let mut rng = trial_rng(cfg.seed, 0);
    match cfg.lab.variation {
        VariationKind::Flow => {
            let flow = match &cfg.lab.flow {
                Some(f) => f.clone(),
                None => random_flow(&mut rng, cfg.lab.flow_steps),
            };
            let interp;
            let exact = reference_map(&cfg.map, &inputs.gallery)?;
            let map: &dyn PointMap = match &exact {
                Some(m) => m,
                None => {
                    interp = GridInterpolant::new(inputs.u.clone());
                    &interp
                }
            };
            let var = make_measure_preserving_variation(map, &inputs.grid, &flow)?;
            let out = VariationOut {
                kind: VariationKind::Flow,
                seed: cfg.seed,
                det_max_dev: Some(var.det_max_dev),
                eta_max_abs: var.eta.max_abs(),
                band: None,
                flow: Some(flow),
            };
            CommandOutput::new(Outcome::Positive)
                .field("v.csv", AnyField::Vector(var.v), "v")?
                .field("eta.csv", AnyField::Vector(var.eta), "eta")?
                .json("variation.json", &out)?
                .json("run.json", cfg)
        }
        VariationKind::Band => {
            let sigma = weight(cfg, &inputs)?;
            let band = cfg.lab.band.unwrap_or_else(|| BandSpec::high(cfg.lab.n));
            let var = make_band_variation(&sigma, cfg.lab.sigma_floor, &band, &mut rng)?;
            let out = VariationOut {
                kind: VariationKind::Band,
                seed: cfg.seed,
                det_max_dev: None,
                eta_max_abs: var.eta.max_abs(),
                band: Some(band),
                flow: None,
            };
            CommandOutput::new(Outcome::Positive)
                .field("zeta.csv", AnyField::Vector(var.zeta), "zeta")?
                .field("eta.csv", AnyField::Vector(var.eta), "eta")?
                .json("variation.json", &out)?
                .json("run.json", cfg)
        }
    }
}

/// `σ` from `lab.sigma`, or computed from the candidate.
fn weight(cfg: &RunConfig, inputs: &Inputs) -> Result<ScalarField> {
    match &cfg.lab.sigma {
        Some(src) => sample_scalar(src, &inputs.gallery, &inputs.grid),
        None => Ok(compute_sigma(&inputs.nu, &inputs.u, cfg.p)?),
    }
}

fn finite(b: Bound, what: &str) -> Result<u64> {
    b.finite().ok_or_else(|| diskcert::Error::Hypothesis(format!("{what} is unbounded")).into())
}

pub fn run_suite(cfg: &RunConfig, suite: &str) -> Result<SuiteReport> {
    let exec = cfg.execution;
    let seed = cfg.seed;
    match suite {
        "poincare" => {
            let grid = cfg.polar_grid()?;
            Ok(verify_poincare(&grid, cfg.lab.n, cfg.trials_or(100), seed, exec)?)
        }
        "fourier" => {
            cfg.validate()?;
            let g = gallery()?;
            let grid = cfg.polar_grid()?;
            let src = cfg.lab.sigma.clone().unwrap_or(ScalarSource::Gallery("expcos2".into()));
            let sigma = sample_scalar(&src, &g, &grid)?;
            let l = match cfg.lab.l {
                Some(l) => l,
                None => finite(estimate_l(&sigma)?.value, "l")?,
            };
            let n_star = cfg.lab.n_star.unwrap_or(l + cfg.lab.n as u64);
            Ok(verify_weighted_fourier(&sigma, l, n_star, cfg.trials_or(1000), seed, exec)?)
        }
        "det-identity" => {
            let grid = cfg.polar_grid()?;
            Ok(verify_det_identity(&grid, cfg.trials_or(100), seed, exec)?)
        }
        "h-bound" => h_bound(cfg),
        "gap-inc" => {
            if cfg.setting != Setting::Incompressible {
                bail!("gap-inc needs the incompressible setting");
            }
            let inputs = Inputs::load(cfg)?;
            let c = inputs.candidate(cfg)?;
            let exact = reference_map(&cfg.map, &inputs.gallery)?;
            let map = exact.as_ref().map(|m| m as &dyn PointMap);
            Ok(energy_gap_incompressible(&c, map, &gap_options(cfg, 100), exec)?)
        }
        "gap-comp" => {
            if cfg.setting != Setting::Compressible {
                bail!("gap-comp needs the compressible setting");
            }
            let inputs = Inputs::load(cfg)?;
            let spec = inputs.polyconvex(cfg)?;
            Ok(energy_gap_compressible(&spec, &inputs.u, &gap_options(cfg, 100), exec)?)
        }
        "growth" => growth(cfg),
        "subdiff" => {
            let trials = cfg.trials_or(100_000);
            let r = check_subdifferential(cfg.p, trials, seed)?;
            let mut rep = SuiteReport::new("subdiff", seed, Vec::new());
            rep.trials = trials;
            rep.failures = r.violations;
            rep.pass = r.passed();
            rep.set("p", cfg.p)
                .set("violations", r.violations as f64)
                .set("min_slack", r.min_slack)
                .set("equal_pair_max_abs", r.equal_pair_max_abs)
                .check("equality_exact", r.equal_pair_max_abs == 0.0);
            Ok(rep)
        }
        other => bail!("unknown suite {other:?}; expected one of {}", SUITES.join(", ")),
    }
}

fn gap_options(cfg: &RunConfig, default_trials: usize) -> GapOptions {
    let t = &cfg.tolerances;
    GapOptions {
        trials: cfg.trials_or(default_trials),
        seed: cfg.seed,
        residual_tol: t.residual,
        identity_tol: t.identity,
        chain_tol: t.chain,
        gap_tol: t.gap,
        max_leakage: t.leakage,
        flow_steps: cfg.lab.flow_steps,
    }
}

fn h_bound(cfg: &RunConfig) -> Result<SuiteReport> {
    let inputs = Inputs::load(cfg)?;
    let sigma = weight(cfg, &inputs)?;
    let lambda = match &cfg.lab.lambda {
        Some(src) => sample_scalar(src, &inputs.gallery, &inputs.grid)?,
        None => match cfg.setting {
            Setting::Incompressible => {
                let c = inputs.candidate(cfg)?;
                c.pressure.ok_or(diskcert::Error::MissingPressure)?
            }
            Setting::Compressible => det_derivative_field(&inputs.polyconvex(cfg)?, &gradient(&inputs.u))?,
        },
    };
    let l = match cfg.lab.l {
        Some(l) => l,
        None => finite(estimate_l(&sigma)?.value, "l")?,
    };
    let mut setup = HSetup { sigma, lambda, p: cfg.p, part: cfg.lab.part, l, k: 0, r0: cfg.lab.r0, r1: cfg.lab.r1 };
    setup.k = match cfg.lab.k {
        Some(k) => k,
        None => {
            let y = diskcert::diffops::scalar_gradient(&setup.lambda).scaled_polar;
            let s2 = setup.sigma.map(|s| s * s);
            let est = match cfg.lab.part {
                HPart::I => diskcert::certifier::estimate_n(&y, &s2)?,
                HPart::II => diskcert::certifier::estimate_m(&y, &s2)?,
            };
            finite(est.value, "k")?
        }
    };
    Ok(verify_h_lower_bound(&setup, cfg.trials_or(1000), cfg.seed, cfg.execution, cfg.lab.check_hypotheses)?)
}

/// One record per stored energy: the configured one, or the whole gallery.
/// The global bound is only asserted for terms that admit one.
fn growth(cfg: &RunConfig) -> Result<SuiteReport> {
    let inputs = Inputs::load(cfg)?;
    let samples = cfg.trials_or(10_000);
    let specs: Vec<(String, PolyconvexSpec)> = match &cfg.psi {
        Some(_) => vec![("configured".into(), inputs.polyconvex(cfg)?)],
        None => inputs.gallery.polyconvex_specs(&inputs.grid, cfg.p, &scalar_or_constant(cfg, &inputs)?)?,
    };
    let mut records = Vec::new();
    let mut by_name = Vec::new();
    for (t, (name, spec)) in specs.iter().enumerate() {
        let r = check_growth(spec, samples, cfg.seed)?;
        let mut rec = TrialRecord::new("growth", t, cfg.seed);
        rec.set("samples", samples as f64)
            .set("violations", r.violations as f64)
            .set("local_only", if r.local_only { 1.0 } else { 0.0 })
            .set("worst_excess", r.worst.as_ref().map_or(0.0, |w| w.excess));
        if !r.local_only {
            rec.check("bounded", r.passed());
        }
        by_name.push((format!("violations.{name}"), r.violations as f64));
        records.push(rec);
    }
    let mut rep = SuiteReport::new("growth", cfg.seed, records);
    rep.set("p", cfg.p);
    for (key, v) in by_name {
        rep.set(&key, v);
    }
    Ok(rep)
}

fn scalar_or_constant(cfg: &RunConfig, inputs: &Inputs) -> Result<diskcert::energies::Profile> {
    match crate::config::scalar_profile(&cfg.nu, &inputs.gallery)? {
        Some(p) => Ok(p),
        None => bail!("the gallery growth sweep needs a closed-form ν"),
    }
}

pub fn cmd_verify(cfg: &RunConfig, suite: &str) -> Result<CommandOutput> {
    let rep = run_suite(cfg, suite)?;
    let mut jsonl = Vec::new();
    rep.write_jsonl(&mut jsonl)?;
    let mut out = CommandOutput::new(Outcome::from_bool(rep.pass));
    out.files.push(("trials.jsonl".into(), jsonl));
    out.json("summary.json", &rep)?.json("run.json", cfg)
}
