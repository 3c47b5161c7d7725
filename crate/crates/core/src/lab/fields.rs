use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fourier::Band;
use crate::grid::{PolarGrid, ScalarField, VectorField};
use crate::rng::{log_uniform, normal, TrialRng};
use crate::stationarity::bump;

/// Angular band and radial support of random band-limited fields.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BandSpec {
    pub band: Band,
    pub r0: f64,
    pub r1: f64,
    /// Number of populated modes at and above the threshold.
    #[serde(default = "default_width")]
    pub width: usize,
}

fn default_width() -> usize {
    6
}

impl BandSpec {
    pub fn new(band: Band, r0: f64, r1: f64) -> Self {
        BandSpec { band, r0, r1, width: default_width() }
    }

    pub fn high(n: usize) -> Self {
        BandSpec::new(Band::HighFrom(n), 0.1, 0.9)
    }

    pub fn zero_and_high(n: usize) -> Self {
        BandSpec::new(Band::ZeroAndHighFrom(n), 0.1, 0.9)
    }

    /// Populated modes, capped at `max_product_mode` so that quotients by a
    /// smooth weight stay resolved.
    pub fn modes(&self, grid: &PolarGrid) -> Result<Vec<usize>> {
        self.validate(grid)?;
        let n = self.band.threshold();
        let top = (n + self.width.max(1) - 1).min(grid.max_product_mode());
        let mut modes: Vec<usize> = (n..=top).collect();
        if matches!(self.band, Band::ZeroAndHighFrom(_)) && n > 0 {
            modes.insert(0, 0);
        }
        Ok(modes)
    }

    pub fn validate(&self, grid: &PolarGrid) -> Result<()> {
        if !(0.0 < self.r0 && self.r0 < self.r1 && self.r1 < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "band support [{}, {}] must satisfy 0 < r0 < r1 < 1",
                self.r0, self.r1
            )));
        }
        if let Band::ZeroOnly = self.band {
            return Err(Error::InvalidArgument("band variations need a high-mode band".into()));
        }
        let n = self.band.threshold();
        if n > grid.max_product_mode() {
            return Err(Error::BeyondNyquist { mode: n, limit: grid.max_product_mode() });
        }
        Ok(())
    }
}

/// `ζ = Σ_j Σ_c bump(R) P_{jc}(s) {cos jθ, sin jθ} e_c` over the band's modes,
/// with quadratic polynomials `P` in `s ∈ [−1, 1]` and a log-uniform weight
/// per mode.
pub fn random_band_field(grid: &PolarGrid, spec: &BandSpec, rng: &mut TrialRng) -> Result<VectorField> {
    let modes = spec.modes(grid)?;
    // coeffs[m][c][trig][deg]
    let coeffs: Vec<[[[f64; 3]; 2]; 2]> = modes
        .iter()
        .map(|&j| {
            let w = log_uniform(rng, 0.1, 1.0);
            let mut c = [[[0.0; 3]; 2]; 2];
            for comp in c.iter_mut() {
                for (t, trig) in comp.iter_mut().enumerate() {
                    if j == 0 && t == 1 {
                        continue;
                    }
                    for v in trig.iter_mut() {
                        *v = w * normal(rng);
                    }
                }
            }
            c
        })
        .collect();
    let nt = grid.n_theta();
    let (r0, r1) = (spec.r0, spec.r1);
    let values = grid.sample_nodes(|i, k| {
        let r = grid.radius(i);
        let b = bump(r, r0, r1);
        if b == 0.0 {
            return [0.0; 2];
        }
        let s = (2.0 * r - r0 - r1) / (r1 - r0);
        let mut out = [0.0; 2];
        for (&j, c) in modes.iter().zip(&coeffs) {
            let a = (j * k) % nt;
            let (cj, sj) = (grid.cos_theta(a), grid.sin_theta(a));
            for (o, comp) in out.iter_mut().zip(c) {
                let pc = comp[0][0] + s * (comp[0][1] + s * comp[0][2]);
                let ps = comp[1][0] + s * (comp[1][1] + s * comp[1][2]);
                *o += pc * cj + ps * sj;
            }
        }
        [b * out[0], b * out[1]]
    });
    let (c1, c2) = values.into_iter().map(|[a, b]| (a, b)).unzip();
    VectorField::new(grid.clone(), c1, c2)
}

/// A band variation and the band-limited field it came from.
#[derive(Debug, Clone)]
pub struct BandVariation {
    /// `ζ = ση`, band-limited by construction.
    pub zeta: VectorField,
    pub eta: VectorField,
}

/// `η = ζ/σ` for random band-limited `ζ`. `σ ≥ σ0` is required on the
/// support of `ζ`.
pub fn make_band_variation(sigma: &ScalarField, sigma0: f64, spec: &BandSpec, rng: &mut TrialRng) -> Result<BandVariation> {
    if !(sigma0 > 0.0) {
        return Err(Error::InvalidArgument(format!("σ₀ = {sigma0} must be positive")));
    }
    let grid = sigma.grid();
    check_floor(sigma, sigma0, spec.r0, spec.r1)?;
    let zeta = random_band_field(grid, spec, rng)?;
    let s = sigma.values();
    let inv: Vec<f64> = (0..grid.len())
        .map(|j| {
            let (i, _) = grid.node(j);
            let r = grid.radius(i);
            if r > spec.r0 && r < spec.r1 {
                1.0 / s[j]
            } else {
                0.0
            }
        })
        .collect();
    let eta = zeta.mul_scalar(&ScalarField::new(grid.clone(), inv)?)?;
    Ok(BandVariation { zeta, eta })
}

fn check_floor(sigma: &ScalarField, sigma0: f64, r0: f64, r1: f64) -> Result<()> {
    let grid = sigma.grid();
    let mut low = f64::INFINITY;
    for i in 0..grid.n_r() {
        let r = grid.radius(i);
        if r > r0 && r < r1 {
            low = sigma.row(i).iter().copied().fold(low, f64::min);
        }
    }
    if !(low >= sigma0) {
        return Err(Error::SigmaBelowFloor { value: low, sigma0 });
    }
    Ok(())
}

/// `λ = c R² + Σ_{k=1..3} R^k (a_k cos kθ + b_k sin kθ)`, scaled by `amp`.
pub fn random_pressure(grid: &PolarGrid, amp: f64, rng: &mut TrialRng) -> Result<ScalarField> {
    let c = normal(rng);
    let ab: Vec<(f64, f64)> = (0..3).map(|_| (normal(rng), normal(rng))).collect();
    let nt = grid.n_theta();
    let values = grid.sample_nodes(|i, k| {
        let r = grid.radius(i);
        let mut v = c * r * r;
        let mut rk = 1.0;
        for (m, (a, b)) in ab.iter().enumerate() {
            rk *= r;
            let idx = ((m + 1) * k) % nt;
            v += rk * (a * grid.cos_theta(idx) + b * grid.sin_theta(idx));
        }
        amp * v
    });
    ScalarField::new(grid.clone(), values)
}

/// Compactly supported field with modes `0..=6` and a random support inside
/// `[0.1, 0.9]`.
pub fn random_test_field(grid: &PolarGrid, rng: &mut TrialRng) -> Result<VectorField> {
    let r0 = rng.gen_range(0.1..0.3);
    let r1 = rng.gen_range(0.6..0.9);
    let spec = BandSpec { band: Band::HighFrom(0), r0, r1, width: 7 };
    random_band_field(grid, &spec, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energies::Profile;
    use crate::fourier::decompose_full;
    use crate::rng::trial_rng;

    fn grid() -> PolarGrid {
        PolarGrid::new(64, 64).unwrap()
    }

    fn low_mode_max(f: &VectorField, below: usize, skip_zero: bool) -> f64 {
        let s = decompose_full(f);
        (0..below)
            .filter(|&j| !(skip_zero && j == 0))
            .map(|j| s.max_coefficient(j))
            .fold(0.0, f64::max)
    }

    #[test]
    fn unit_weight_band_is_clean() {
        let g = grid();
        let sigma = ScalarField::constant(&g, 1.0);
        let v = make_band_variation(&sigma, 0.5, &BandSpec::high(5), &mut trial_rng(1, 0)).unwrap();
        assert!(low_mode_max(&v.eta, 5, false) <= 1e-12);
        assert!(v.eta.max_abs() > 1e-3);
    }

    #[test]
    fn weighted_band_is_clean_only_after_weighting() {
        let g = grid();
        let sigma = Profile::ExpCos { amp: 1.0, l: 2, s: 1.0, g2: 0.0 }.sample(&g).unwrap();
        let v = make_band_variation(&sigma, 0.3, &BandSpec::high(7), &mut trial_rng(2, 0)).unwrap();
        let weighted = v.eta.mul_scalar(&sigma).unwrap();
        assert!(low_mode_max(&weighted, 7, false) <= 1e-12);
        assert!(low_mode_max(&v.eta, 7, false) > 1e-4);
    }

    #[test]
    fn zero_plus_high_band() {
        let g = grid();
        let sigma = ScalarField::constant(&g, 2.0);
        let v = make_band_variation(&sigma, 1.0, &BandSpec::zero_and_high(4), &mut trial_rng(3, 0)).unwrap();
        let s = decompose_full(&v.eta);
        assert!(low_mode_max(&v.eta, 4, true) <= 1e-12);
        assert!(s.max_coefficient(0) > 1e-4);
    }

    #[test]
    fn floor_is_enforced() {
        let g = grid();
        let sigma = Profile::SinThetaSq { amp: 1.0 }.sample(&g).unwrap();
        let err = make_band_variation(&sigma, 0.1, &BandSpec::high(2), &mut trial_rng(0, 0)).unwrap_err();
        assert!(matches!(err, Error::SigmaBelowFloor { .. }));
    }

    #[test]
    fn bands_are_validated() {
        let g = grid();
        assert!(BandSpec::high(g.max_product_mode() + 1).validate(&g).is_err());
        assert!(BandSpec::new(Band::HighFrom(1), 0.5, 0.4).validate(&g).is_err());
        assert!(BandSpec::new(Band::ZeroOnly, 0.1, 0.9).validate(&g).is_err());
    }

    #[test]
    fn same_rng_same_field() {
        let g = grid();
        let a = random_band_field(&g, &BandSpec::high(2), &mut trial_rng(5, 1)).unwrap();
        let b = random_band_field(&g, &BandSpec::high(2), &mut trial_rng(5, 1)).unwrap();
        assert_eq!(a, b);
    }
}
