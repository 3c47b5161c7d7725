//! Angular Fourier analysis on polar grids.
//!
//! Coefficients use the reconstructing convention
//!
//! ```text
//! f(R, θ) = A_0(R) + Σ_{j≥1} A_j(R) cos(jθ) + B_j(R) sin(jθ)
//! A_0 = mean over θ,   A_j = (1/π) ∫ f cos(jθ) dθ,   B_j = (1/π) ∫ f sin(jθ) dθ
//! ```
//!
//! so that the modes `f^(j)` sum back to `f`. Band membership, which is all
//! the uniqueness classes depend on, does not depend on the normalization.

use rustfft::num_complex::Complex;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{PolarGrid, ScalarField, VectorField, Weight};
use crate::par;

/// Fields whose components are independent scalar arrays on a grid.
pub trait Components: Sized {
    fn grid(&self) -> &PolarGrid;
    fn component_slices(&self) -> Vec<&[f64]>;
    fn from_component_vecs(grid: &PolarGrid, comps: Vec<Vec<f64>>) -> Self;
}

impl Components for ScalarField {
    fn grid(&self) -> &PolarGrid {
        ScalarField::grid(self)
    }
    fn component_slices(&self) -> Vec<&[f64]> {
        vec![self.values()]
    }
    fn from_component_vecs(grid: &PolarGrid, mut comps: Vec<Vec<f64>>) -> Self {
        ScalarField::from_raw(grid.clone(), comps.remove(0))
    }
}

impl Components for VectorField {
    fn grid(&self) -> &PolarGrid {
        VectorField::grid(self)
    }
    fn component_slices(&self) -> Vec<&[f64]> {
        vec![self.c1(), self.c2()]
    }
    fn from_component_vecs(grid: &PolarGrid, mut comps: Vec<Vec<f64>>) -> Self {
        let c2 = comps.remove(1);
        let c1 = comps.remove(0);
        VectorField::from_raw(grid.clone(), c1, c2)
    }
}

/// Angular mode index of FFT bin `b` (`min(b, n - b)`).
#[inline]
fn mode_of_bin(b: usize, n: usize) -> usize {
    b.min(n - b)
}

pub(crate) fn forward_row(grid: &PolarGrid, row: &[f64]) -> Vec<Complex<f64>> {
    let mut buf: Vec<Complex<f64>> = row.iter().map(|&v| Complex::new(v, 0.0)).collect();
    grid.fft_forward().process(&mut buf);
    buf
}

pub(crate) fn inverse_row(grid: &PolarGrid, mut spec: Vec<Complex<f64>>, out: &mut [f64]) {
    grid.fft_inverse().process(&mut spec);
    let inv_n = 1.0 / grid.n_theta() as f64;
    for (o, c) in out.iter_mut().zip(spec) {
        *o = c.re * inv_n;
    }
}

/// Apply a per-bin multiplier `m(bin)` to every row of `values`.
pub(crate) fn spectral_map<F>(grid: &PolarGrid, values: &[f64], multiplier: F) -> Vec<f64>
where
    F: Fn(usize) -> Complex<f64> + Sync + Send,
{
    let nt = grid.n_theta();
    let mut out = vec![0.0; values.len()];
    par::fill_rows(&mut out, nt, |i, row| {
        let mut spec = forward_row(grid, &values[i * nt..(i + 1) * nt]);
        for (b, c) in spec.iter_mut().enumerate() {
            *c *= multiplier(b);
        }
        inverse_row(grid, spec, row);
    });
    out
}

/// Keep only the angular modes for which `keep(j)` holds.
pub(crate) fn filter_modes<F>(grid: &PolarGrid, values: &[f64], keep: F) -> Vec<f64>
where
    F: Fn(usize) -> bool + Sync + Send,
{
    let n = grid.n_theta();
    spectral_map(grid, values, |b| {
        if keep(mode_of_bin(b, n)) {
            Complex::new(1.0, 0.0)
        } else {
            Complex::new(0.0, 0.0)
        }
    })
}

/// Spectral `∂_θ` of every row. The Nyquist bin is dropped.
pub(crate) fn d_theta_values(grid: &PolarGrid, values: &[f64]) -> Vec<f64> {
    let n = grid.n_theta();
    spectral_map(grid, values, |b| {
        let w = if b < n / 2 {
            b as f64
        } else if b > n / 2 {
            b as f64 - n as f64
        } else {
            0.0
        };
        Complex::new(0.0, w)
    })
}

/// Spectral angular derivative of every component.
pub fn d_theta<F: Components>(f: &F) -> F {
    let grid = f.grid();
    let comps = f
        .component_slices()
        .into_iter()
        .map(|c| d_theta_values(grid, c))
        .collect();
    F::from_component_vecs(grid, comps)
}

/// Radial coefficient arrays `A_j(R_i)`, `B_j(R_i)` of every component.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeSpectrum {
    grid: PolarGrid,
    j_max: usize,
    // [component][j * n_r + i]
    a: Vec<Vec<f64>>,
    b: Vec<Vec<f64>>,
}

impl ModeSpectrum {
    pub fn zeros(grid: &PolarGrid, j_max: usize, components: usize) -> Result<Self> {
        check_mode(grid, j_max)?;
        let len = (j_max + 1) * grid.n_r();
        Ok(ModeSpectrum {
            grid: grid.clone(),
            j_max,
            a: vec![vec![0.0; len]; components],
            b: vec![vec![0.0; len]; components],
        })
    }

    pub fn grid(&self) -> &PolarGrid {
        &self.grid
    }

    pub fn j_max(&self) -> usize {
        self.j_max
    }

    pub fn components(&self) -> usize {
        self.a.len()
    }

    pub fn a(&self, c: usize, j: usize, i: usize) -> f64 {
        self.a[c][j * self.grid.n_r() + i]
    }

    pub fn b(&self, c: usize, j: usize, i: usize) -> f64 {
        self.b[c][j * self.grid.n_r() + i]
    }

    pub fn set(&mut self, c: usize, j: usize, i: usize, a: f64, b: f64) {
        let n_r = self.grid.n_r();
        self.a[c][j * n_r + i] = a;
        self.b[c][j * n_r + i] = if j == 0 { 0.0 } else { b };
    }

    /// Largest `|A_j|`, `|B_j|` over all radii and components.
    pub fn max_coefficient(&self, j: usize) -> f64 {
        let n_r = self.grid.n_r();
        let range = j * n_r..(j + 1) * n_r;
        self.a
            .iter()
            .chain(&self.b)
            .flat_map(|c| c[range.clone()].iter())
            .fold(0.0, |m, v| m.max(v.abs()))
    }
}

fn check_mode(grid: &PolarGrid, j: usize) -> Result<()> {
    let limit = grid.n_theta() / 2;
    if j >= limit {
        return Err(Error::BeyondNyquist { mode: j, limit });
    }
    Ok(())
}

/// Coefficients of `f` up to mode `j_max` (`j_max < n_θ / 2`).
pub fn decompose<F: Components>(f: &F, j_max: usize) -> Result<ModeSpectrum> {
    let grid = f.grid();
    check_mode(grid, j_max)?;
    let n = grid.n_theta();
    let n_r = grid.n_r();
    let nt = n as f64;
    let mut spec = ModeSpectrum::zeros(grid, j_max, f.component_slices().len())?;
    for (c, values) in f.component_slices().into_iter().enumerate() {
        let rows = par::map_range(n_r, |i| forward_row(grid, &values[i * n..(i + 1) * n]));
        for (i, row) in rows.iter().enumerate() {
            spec.a[c][i] = row[0].re / nt;
            for j in 1..=j_max {
                spec.a[c][j * n_r + i] = 2.0 * row[j].re / nt;
                spec.b[c][j * n_r + i] = -2.0 * row[j].im / nt;
            }
        }
    }
    Ok(spec)
}

/// Coefficients of every mode below the Nyquist limit.
pub fn decompose_full<F: Components>(f: &F) -> ModeSpectrum {
    let j_max = f.grid().max_mode();
    decompose(f, j_max).expect("max_mode is below Nyquist")
}

/// Pointwise sum of the modes of `s`.
pub fn reconstruct<F: Components>(s: &ModeSpectrum) -> F {
    let grid = &s.grid;
    let n = grid.n_theta();
    let n_r = grid.n_r();
    let half = n as f64 / 2.0;
    let comps = (0..s.components())
        .map(|c| {
            let mut out = vec![0.0; grid.len()];
            par::fill_rows(&mut out, n, |i, row| {
                let mut bins = vec![Complex::new(0.0, 0.0); n];
                bins[0] = Complex::new(s.a[c][i] * n as f64, 0.0);
                for j in 1..=s.j_max {
                    let a = s.a[c][j * n_r + i];
                    let b = s.b[c][j * n_r + i];
                    bins[j] = Complex::new(a * half, -b * half);
                    bins[n - j] = Complex::new(a * half, b * half);
                }
                inverse_row(grid, bins, row);
            });
            out
        })
        .collect();
    F::from_component_vecs(grid, comps)
}

/// Angular mode bands used by the uniqueness classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "n")]
pub enum Band {
    /// Exactly the zero mode.
    ZeroOnly,
    /// Modes `j ≥ N`.
    HighFrom(usize),
    /// The zero mode together with modes `j ≥ N`.
    ZeroAndHighFrom(usize),
}

impl Band {
    pub fn contains(&self, j: usize) -> bool {
        match *self {
            Band::ZeroOnly => j == 0,
            Band::HighFrom(n) => j >= n,
            Band::ZeroAndHighFrom(n) => j == 0 || j >= n,
        }
    }

    pub fn threshold(&self) -> usize {
        match *self {
            Band::ZeroOnly => 0,
            Band::HighFrom(n) | Band::ZeroAndHighFrom(n) => n,
        }
    }
}

/// Restriction of `f` to the modes of `band`. Idempotent.
pub fn project_band<F: Components>(f: &F, band: Band) -> Result<F> {
    let grid = f.grid();
    check_mode(grid, band.threshold())?;
    let comps = f
        .component_slices()
        .into_iter()
        .map(|c| filter_modes(grid, c, |j| band.contains(j)))
        .collect();
    Ok(F::from_component_vecs(grid, comps))
}

/// `f - f^(0)`: every component minus its angular mean per radius.
pub fn tilde<F: Components>(f: &F) -> F {
    let grid = f.grid();
    let comps = f
        .component_slices()
        .into_iter()
        .map(|c| subtract_row_means(grid, c))
        .collect();
    F::from_component_vecs(grid, comps)
}

/// The zero mode `f^(0)` (angular mean per radius, broadcast over θ).
pub fn zero_mode<F: Components>(f: &F) -> F {
    let grid = f.grid();
    let nt = grid.n_theta();
    let comps = f
        .component_slices()
        .into_iter()
        .map(|c| {
            let mut out = vec![0.0; c.len()];
            par::fill_rows(&mut out, nt, |i, row| {
                let mean = c[i * nt..(i + 1) * nt].iter().sum::<f64>() / nt as f64;
                row.iter_mut().for_each(|v| *v = mean);
            });
            out
        })
        .collect();
    F::from_component_vecs(grid, comps)
}

fn subtract_row_means(grid: &PolarGrid, values: &[f64]) -> Vec<f64> {
    let nt = grid.n_theta();
    let mut out = values.to_vec();
    par::fill_rows(&mut out, nt, |_, row| {
        let mean = row.iter().sum::<f64>() / nt as f64;
        row.iter_mut().for_each(|v| *v -= mean);
    });
    out
}

/// Per-row squared mass of every angular mode (discrete Parseval), summed
/// over components: `Σ_k |f^(j)(R_i, θ_k)|²` for `j = 0..=n_θ/2`.
fn row_mode_mass<F: Components>(f: &F) -> Vec<Vec<f64>> {
    let grid = f.grid();
    let n = grid.n_theta();
    let comps = f.component_slices();
    par::map_range(grid.n_r(), |i| {
        let mut mass = vec![0.0; n / 2 + 1];
        for c in &comps {
            let spec = forward_row(grid, &c[i * n..(i + 1) * n]);
            for (b, z) in spec.iter().enumerate() {
                mass[mode_of_bin(b, n)] += z.norm_sqr() / n as f64;
            }
        }
        mass
    })
}

/// L²(dx) mass of each angular mode, `∫_B |f^(j)|² dx` for `j = 0..=n_θ/2`.
pub fn mode_masses<F: Components>(f: &F) -> Vec<f64> {
    let grid = f.grid();
    let rows = row_mode_mass(f);
    let mut total = vec![0.0; grid.n_theta() / 2 + 1];
    for (i, row) in rows.iter().enumerate() {
        let w = grid.weight(i, Weight::Dx);
        for (t, m) in total.iter_mut().zip(row) {
            *t += w * m;
        }
    }
    total
}

/// Fraction of angular L² mass sitting below a mode threshold.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BandContent {
    pub threshold: usize,
    /// Leakage per radius, in `[0, 1]` (0 for rows that vanish identically).
    pub per_radius: Vec<f64>,
    /// Leakage of the whole field, rows weighted by the `dx` measure.
    pub aggregate: f64,
}

/// Leakage of `f` below mode `n`. Modes listed in `exempt` (e.g. the zero
/// mode for the `{0} ∪ {j ≥ N}` classes) count as inside the band.
pub fn band_content<F: Components>(f: &F, n: usize, exempt_zero: bool) -> BandContent {
    let grid = f.grid();
    let rows = row_mode_mass(f);
    let mut low_total = 0.0;
    let mut all_total = 0.0;
    let per_radius = rows
        .iter()
        .enumerate()
        .map(|(i, mass)| {
            let all: f64 = mass.iter().sum();
            let low: f64 = mass
                .iter()
                .enumerate()
                .filter(|&(j, _)| j < n && !(exempt_zero && j == 0))
                .map(|(_, m)| m)
                .sum();
            let w = grid.weight(i, Weight::Dx);
            low_total += w * low;
            all_total += w * all;
            if all > 0.0 {
                (low / all).clamp(0.0, 1.0)
            } else {
                0.0
            }
        })
        .collect();
    let aggregate = if all_total > 0.0 { (low_total / all_total).clamp(0.0, 1.0) } else { 0.0 };
    BandContent { threshold: n, per_radius, aggregate }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn grid() -> PolarGrid {
        PolarGrid::new(16, 64).unwrap()
    }

    #[test]
    fn single_cosine_mode() {
        let g = grid();
        let f = g.sample_vector(|p| [(3.0 * p.theta).cos(), 0.0]).unwrap();
        let s = decompose_full(&f);
        for i in 0..g.n_r() {
            assert!((s.a(0, 3, i) - 1.0).abs() < 1e-12);
        }
        for j in (0..=s.j_max()).filter(|&j| j != 3) {
            assert!(s.max_coefficient(j) < 1e-12, "mode {j}");
        }
        assert!(s.b(0, 3, 0).abs() < 1e-12);
    }

    #[test]
    fn radial_field_is_zero_mode() {
        let g = grid();
        let f = g.sample_vector(|p| [p.r, 0.0]).unwrap();
        let s = decompose_full(&f);
        assert!((s.a(0, 0, 5) - g.radius(5)).abs() < 1e-14);
        for j in 1..=s.j_max() {
            assert!(s.max_coefficient(j) < 1e-13);
        }
    }

    #[test]
    fn identity_map_is_mode_one() {
        // Direct angular integrals: A_1 = (R, 0), B_1 = (0, R).
        let g = grid();
        let f = g.sample_vector(|p| p.cartesian()).unwrap();
        let s = decompose_full(&f);
        for i in 0..g.n_r() {
            let r = g.radius(i);
            assert!((s.a(0, 1, i) - r).abs() < 1e-13);
            assert!((s.b(1, 1, i) - r).abs() < 1e-13);
            assert!(s.b(0, 1, i).abs() < 1e-13 && s.a(1, 1, i).abs() < 1e-13);
        }
        for j in (0..=s.j_max()).filter(|&j| j != 1) {
            assert!(s.max_coefficient(j) < 1e-13);
        }
    }

    #[test]
    fn reconstruct_inverts_decompose() {
        let g = grid();
        let f = g
            .sample_vector(|p| {
                [
                    1.0 + p.r * (5.0 * p.theta).sin() - (2.0 * p.theta).cos(),
                    p.r * p.r * (11.0 * p.theta + 0.3).cos(),
                ]
            })
            .unwrap();
        let back: VectorField = reconstruct(&decompose_full(&f));
        assert!(back.sub(&f).unwrap().max_abs() < 1e-12);
        let zero: ScalarField = reconstruct(&ModeSpectrum::zeros(&g, 5, 1).unwrap());
        assert_eq!(zero.max_abs(), 0.0);
        let mut s = ModeSpectrum::zeros(&g, 5, 1).unwrap();
        for i in 0..g.n_r() {
            s.set(0, 0, i, g.radius(i), 0.0);
        }
        let radial: ScalarField = reconstruct(&s);
        for i in 0..g.n_r() {
            assert!(radial.row(i).iter().all(|&v| (v - g.radius(i)).abs() < 1e-14));
        }
    }

    #[test]
    fn bands() {
        let g = grid();
        let f = g.sample_vector(|p| [(3.0 * p.theta).cos(), 0.0]).unwrap();
        assert!(project_band(&f, Band::HighFrom(4)).unwrap().max_abs() < 1e-13);
        assert!(project_band(&f, Band::HighFrom(3)).unwrap().sub(&f).unwrap().max_abs() < 1e-13);
        let h = g.sample_vector(|p| [1.0 + (5.0 * p.theta).cos(), 0.0]).unwrap();
        let p = project_band(&h, Band::ZeroAndHighFrom(5)).unwrap();
        assert!(p.sub(&h).unwrap().max_abs() < 1e-13);
        let z = project_band(&h, Band::ZeroOnly).unwrap();
        assert!((z.c1()[7] - 1.0).abs() < 1e-13);
        assert!(matches!(
            project_band(&h, Band::HighFrom(32)),
            Err(Error::BeyondNyquist { .. })
        ));
    }

    #[test]
    fn tilde_examples() {
        let g = grid();
        let radial = g.sample_scalar(|p| p.r.powi(3)).unwrap();
        assert!(tilde(&radial).max_abs() < 1e-15);
        let f = g.sample_vector(|p| [1.0 + p.theta.cos(), 0.0]).unwrap();
        let t = tilde(&f);
        let expect = g.sample_vector(|p| [p.theta.cos(), 0.0]).unwrap();
        assert!(t.sub(&expect).unwrap().max_abs() < 1e-14);
        let tt = tilde(&t);
        assert!(tt.sub(&t).unwrap().max_abs() < 1e-15);
    }

    #[test]
    fn leakage_examples() {
        let g = grid();
        let pure7 = g.sample_scalar(|p| (7.0 * p.theta).sin() * p.r).unwrap();
        assert!(band_content(&pure7, 7, false).aggregate < 1e-20);
        let pure3 = g.sample_scalar(|p| (3.0 * p.theta).cos()).unwrap();
        assert!((band_content(&pure3, 7, false).aggregate - 1.0).abs() < 1e-14);
        let mix = g
            .sample_scalar(|p| (3.0 * p.theta).cos() + (9.0 * p.theta).sin())
            .unwrap();
        let bc = band_content(&mix, 7, false);
        assert!((bc.aggregate - 0.5).abs() < 1e-10);
        assert!(bc.per_radius.iter().all(|v| (v - 0.5).abs() < 1e-10));
        assert_eq!(band_content(&ScalarField::zeros(&g), 7, false).aggregate, 0.0);
        let with_mean = g.sample_scalar(|p| 1.0 + (9.0 * p.theta).sin()).unwrap();
        assert!(band_content(&with_mean, 7, true).aggregate < 1e-20);
    }

    #[test]
    fn parseval_per_radius() {
        let g = grid();
        let f = g
            .sample_scalar(|p| 0.5 + p.r * (2.0 * p.theta).cos() - 3.0 * (7.0 * p.theta).sin())
            .unwrap();
        let s = decompose_full(&f);
        for i in 0..g.n_r() {
            let mean_sq = f.row(i).iter().map(|v| v * v).sum::<f64>() / g.n_theta() as f64;
            let mut parseval = s.a(0, 0, i).powi(2);
            for j in 1..=s.j_max() {
                parseval += 0.5 * (s.a(0, j, i).powi(2) + s.b(0, j, i).powi(2));
            }
            assert!((mean_sq - parseval).abs() < 1e-10);
        }
        let masses = mode_masses(&f);
        let direct = f.map(|v| v * v).integrate(Weight::Dx).unwrap();
        assert!((masses.iter().sum::<f64>() - direct).abs() < 1e-10);
        assert!((masses[0] - 0.25 * PI).abs() < 1e-10);
    }

    #[test]
    fn spectral_derivative_exact() {
        let g = grid();
        let f = g.sample_scalar(|p| (5.0 * p.theta).sin() * p.r + (p.theta).cos()).unwrap();
        let d = d_theta(&f);
        let exact = g.sample_scalar(|p| 5.0 * (5.0 * p.theta).cos() * p.r - p.theta.sin()).unwrap();
        assert!(d.zip_map(&exact, |a, b| a - b).unwrap().max_abs() < 1e-12);
    }
}
