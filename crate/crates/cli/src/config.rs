use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, ensure, Context, Result};
use serde::{Deserialize, Serialize};

use diskcert::energies::{gallery, Gallery, MapKind, Profile, PsiSpec, ReferenceMap, Setting};
use diskcert::io::read_field;
use diskcert::lab::{BandSpec, FlowSpec, HPart};
use diskcert::par::Execution;
use diskcert::stationarity::{TestBasis, DEFAULT_CURL_TOL, DEFAULT_DET_TOL};
use diskcert::{PolarGrid, ScalarField, VectorField};

/// One JSON document describing a run. Unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub grid: GridConfig,
    pub setting: Setting,
    pub p: f64,
    pub map: MapSource,
    pub nu: ScalarSource,
    pub pressure: Option<PressureSource>,
    /// Stored energy of the compressible setting; `zero` when absent.
    pub psi: Option<PsiSource>,
    /// Input of `decompose`; the sampled map when absent.
    pub field: Option<PathBuf>,
    pub basis: TestBasis,
    pub lab: LabConfig,
    pub tolerances: Tolerances,
    pub seed: u64,
    /// Suite-specific default when absent.
    pub trials: Option<usize>,
    pub execution: Execution,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            grid: GridConfig::default(),
            setting: Setting::Incompressible,
            p: 2.0,
            map: MapSource::Gallery("identity".into()),
            nu: ScalarSource::Gallery("constant".into()),
            pressure: None,
            psi: None,
            field: None,
            basis: TestBasis::default(),
            lab: LabConfig::default(),
            tolerances: Tolerances::default(),
            seed: 0,
            trials: None,
            execution: Execution::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub n_r: usize,
    pub n_theta: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig { n_r: 256, n_theta: 256 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum MapSource {
    Gallery(String),
    Inline(MapKind),
    /// A `pfield v1` vector field.
    File(PathBuf),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ScalarSource {
    Gallery(String),
    Inline(Profile),
    File(PathBuf),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum PressureSource {
    /// Closed-form pressure of a gallery map with constant `ν`.
    Known,
    /// Strong-form recovery of `∇λ` followed by path integration.
    Recover,
    Inline(Profile),
    File(PathBuf),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum PsiSource {
    Gallery(String),
    Inline(PsiSpec),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VariationKind {
    Flow,
    Band,
}

/// Band and flow parameters of the verification suites.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LabConfig {
    /// Poincaré threshold, and `n* − l` for the Fourier suite when `n_star`
    /// is absent.
    pub n: usize,
    pub n_star: Option<u64>,
    pub l: Option<u64>,
    /// `n` (part I) or `m` (part II) of the `H̃` suite.
    pub k: Option<u64>,
    pub part: HPart,
    /// Overrides the weight computed from the candidate.
    pub sigma: Option<ScalarSource>,
    /// Overrides the pressure (or `∂_dΨ`) of the candidate.
    pub lambda: Option<ScalarSource>,
    pub r0: f64,
    pub r1: f64,
    pub check_hypotheses: bool,
    pub flow_steps: usize,
    pub flow: Option<FlowSpec>,
    pub variation: VariationKind,
    pub band: Option<BandSpec>,
    /// `σ₀` of band variations.
    pub sigma_floor: f64,
}

impl Default for LabConfig {
    fn default() -> Self {
        LabConfig {
            n: 3,
            n_star: None,
            l: None,
            k: None,
            part: HPart::I,
            sigma: None,
            lambda: None,
            r0: 0.1,
            r1: 0.9,
            check_hypotheses: true,
            flow_steps: 16,
            flow: None,
            variation: VariationKind::Flow,
            band: None,
            sigma_floor: 1e-3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub det: f64,
    pub curl: f64,
    pub residual: f64,
    pub identity: f64,
    pub chain: f64,
    pub gap: f64,
    pub leakage: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            det: DEFAULT_DET_TOL,
            curl: DEFAULT_CURL_TOL,
            residual: 1e-5,
            identity: 1e-5,
            chain: 1e-5,
            gap: 1e-6,
            leakage: 0.01,
        }
    }
}

impl Tolerances {
    fn validate(&self) -> Result<()> {
        let all = [
            ("det", self.det),
            ("curl", self.curl),
            ("residual", self.residual),
            ("identity", self.identity),
            ("chain", self.chain),
            ("gap", self.gap),
            ("leakage", self.leakage),
        ];
        for (name, v) in all {
            ensure!(v > 0.0 && v.is_finite(), "tolerance {name} = {v} must be positive and finite");
        }
        Ok(())
    }
}

impl RunConfig {
    /// Parses a config; relative paths are taken relative to the file.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let mut cfg: RunConfig =
            serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.rebase(base);
        Ok(cfg)
    }

    fn rebase(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let MapSource::File(p) = &mut self.map {
            fix(p);
        }
        for s in [Some(&mut self.nu), self.lab.sigma.as_mut(), self.lab.lambda.as_mut()].into_iter().flatten() {
            if let ScalarSource::File(p) = s {
                fix(p);
            }
        }
        if let Some(PressureSource::File(p)) = &mut self.pressure {
            fix(p);
        }
        if let Some(p) = &mut self.field {
            fix(p);
        }
    }

    /// Checks the invariants that do not need any field evaluation: tolerances,
    /// gallery names and referenced files.
    pub fn validate(&self) -> Result<()> {
        self.tolerances.validate()?;
        ensure!(self.p >= 2.0 && self.p.is_finite(), "p = {} must be finite and at least 2", self.p);
        ensure!(self.lab.r0 > 0.0 && self.lab.r0 < self.lab.r1 && self.lab.r1 < 1.0, "lab support must satisfy 0 < r0 < r1 < 1");
        ensure!(self.lab.sigma_floor > 0.0, "lab.sigma_floor must be positive");
        ensure!(self.lab.flow_steps > 0, "lab.flow_steps must be positive");
        let g = gallery()?;
        match &self.map {
            MapSource::Gallery(name) => ensure!(g.map(name).is_some(), "unknown gallery map {name:?}"),
            MapSource::File(p) => ensure_file(p)?,
            MapSource::Inline(_) => {}
        }
        for s in [Some(&self.nu), self.lab.sigma.as_ref(), self.lab.lambda.as_ref()].into_iter().flatten() {
            match s {
                ScalarSource::Gallery(name) => ensure!(g.nu(name).is_some(), "unknown gallery profile {name:?}"),
                ScalarSource::File(p) => ensure_file(p)?,
                ScalarSource::Inline(_) => {}
            }
        }
        if let Some(PressureSource::File(p)) = &self.pressure {
            ensure_file(p)?;
        }
        if let Some(PsiSource::Gallery(name)) = &self.psi {
            ensure!(g.psi(name).is_some(), "unknown gallery stored energy {name:?}");
        }
        if let Some(p) = &self.field {
            ensure_file(p)?;
        }
        Ok(())
    }

    pub fn polar_grid(&self) -> Result<PolarGrid> {
        Ok(PolarGrid::new(self.grid.n_r, self.grid.n_theta)?)
    }

    pub fn trials_or(&self, default: usize) -> usize {
        self.trials.unwrap_or(default)
    }
}

fn ensure_file(p: &Path) -> Result<()> {
    ensure!(p.is_file(), "referenced file {} does not exist", p.display());
    Ok(())
}

/// The map as a closed form when it has one.
pub fn reference_map(src: &MapSource, g: &Gallery) -> Result<Option<ReferenceMap>> {
    Ok(match src {
        MapSource::Gallery(name) => Some(g.map(name).cloned().ok_or_else(|| anyhow!("unknown gallery map {name:?}"))?),
        MapSource::Inline(kind) => Some(match kind {
            MapKind::Affine { a } => ReferenceMap::affine(*a)?,
            MapKind::Identity => ReferenceMap::identity(),
            MapKind::NCover { n } => ReferenceMap::ncover(*n)?,
        }),
        MapSource::File(_) => None,
    })
}

pub fn sample_map(src: &MapSource, g: &Gallery, grid: &PolarGrid) -> Result<VectorField> {
    match src {
        MapSource::File(p) => load_vector(p, grid),
        _ => Ok(reference_map(src, g)?.expect("closed-form map").sample(grid)?),
    }
}

pub fn scalar_profile(src: &ScalarSource, g: &Gallery) -> Result<Option<Profile>> {
    Ok(match src {
        ScalarSource::Gallery(name) => Some(g.nu(name).cloned().ok_or_else(|| anyhow!("unknown gallery profile {name:?}"))?),
        ScalarSource::Inline(p) => Some(p.clone()),
        ScalarSource::File(_) => None,
    })
}

pub fn sample_scalar(src: &ScalarSource, g: &Gallery, grid: &PolarGrid) -> Result<ScalarField> {
    match src {
        ScalarSource::File(p) => load_scalar(p, grid),
        _ => Ok(scalar_profile(src, g)?.expect("closed-form profile").sample(grid)?),
    }
}

pub fn psi_spec(src: Option<&PsiSource>, g: &Gallery) -> Result<PsiSpec> {
    Ok(match src {
        None => PsiSpec::Zero,
        Some(PsiSource::Gallery(name)) => {
            g.psi(name).cloned().ok_or_else(|| anyhow!("unknown gallery stored energy {name:?}"))?
        }
        Some(PsiSource::Inline(psi)) => psi.clone(),
    })
}

fn check_file_grid(path: &Path, found: &PolarGrid, grid: &PolarGrid) -> Result<()> {
    if found.n_r() != grid.n_r() || found.n_theta() != grid.n_theta() {
        bail!(
            "{} is on a {}×{} grid, config asks for {}×{}",
            path.display(),
            found.n_r(),
            found.n_theta(),
            grid.n_r(),
            grid.n_theta()
        );
    }
    Ok(())
}

pub fn load_vector(path: &Path, grid: &PolarGrid) -> Result<VectorField> {
    let (_, f) = read_field(path)?;
    check_file_grid(path, f.grid(), grid)?;
    Ok(f.into_vector()?)
}

pub fn load_scalar(path: &Path, grid: &PolarGrid) -> Result<ScalarField> {
    let (_, f) = read_field(path)?;
    check_file_grid(path, f.grid(), grid)?;
    Ok(f.into_scalar()?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let cfg = RunConfig::default();
        let text = serde_json::to_string(&cfg).unwrap();
        let back: RunConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(cfg, back);
    }

    #[test]
    fn sources_parse() {
        let cfg: RunConfig = serde_json::from_str(
            r#"{"map": {"inline": {"kind": "n_cover", "n": 2}},
                "nu": {"inline": {"kind": "constant", "value": 2.0}},
                "pressure": "known",
                "psi": {"gallery": "det_penalty"}}"#,
        )
        .unwrap();
        assert_eq!(cfg.map, MapSource::Inline(MapKind::NCover { n: 2 }));
        assert_eq!(cfg.pressure, Some(PressureSource::Known));
        cfg.validate().unwrap();
    }

    #[test]
    fn unknown_keys_and_names_are_rejected() {
        assert!(serde_json::from_str::<RunConfig>(r#"{"grdi": {"n_r": 8, "n_theta": 8}}"#).is_err());
        assert!(serde_json::from_str::<RunConfig>(r#"{"tolerances": {"dett": 1.0}}"#).is_err());
        let cfg: RunConfig = serde_json::from_str(r#"{"map": {"gallery": "nope"}}"#).unwrap();
        assert!(cfg.validate().is_err());
        let cfg: RunConfig = serde_json::from_str(r#"{"tolerances": {"det": 0.0}}"#).unwrap();
        assert!(cfg.validate().is_err());
        let cfg: RunConfig = serde_json::from_str(r#"{"nu": {"file": "/no/such/file.csv"}}"#).unwrap();
        assert!(cfg.validate().is_err());
    }
}
