use std::f64::consts::TAU;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::diffops::gradient;
use crate::energies::ReferenceMap;
use crate::error::{Error, Result};
use crate::grid::{Point, PolarGrid, VectorField};
use crate::rng::TrialRng;
use crate::stationarity::det_deviation;

/// A map that can be evaluated off the grid.
pub trait PointMap: Send + Sync {
    fn map_point(&self, x: Point) -> [f64; 2];
}

impl PointMap for ReferenceMap {
    fn map_point(&self, x: Point) -> [f64; 2] {
        self.eval(x)
    }
}

/// Tensor 6×6 Lagrange interpolation of a sampled map: quintic in `R` on the
/// midpoint nodes (one-sided near the ends), quintic periodic in `θ`.
#[derive(Debug, Clone)]
pub struct GridInterpolant {
    field: VectorField,
}

impl GridInterpolant {
    pub fn new(field: VectorField) -> Self {
        GridInterpolant { field }
    }
}

const STENCIL: usize = 6;

/// Weights of the polynomial through nodes `0..STENCIL` at position `t`.
fn lagrange(t: f64) -> [f64; STENCIL] {
    let mut w = [1.0; STENCIL];
    for (a, wa) in w.iter_mut().enumerate() {
        for b in 0..STENCIL {
            if b != a {
                *wa *= (t - b as f64) / (a as f64 - b as f64);
            }
        }
    }
    w
}

impl PointMap for GridInterpolant {
    fn map_point(&self, x: Point) -> [f64; 2] {
        let grid = self.field.grid();
        let (n_r, nt) = (grid.n_r(), grid.n_theta());
        let tr = x.r / grid.dr() - 0.5;
        let half = (STENCIL / 2 - 1) as isize;
        let i0 = (tr.floor() as isize - half).clamp(0, (n_r - STENCIL) as isize) as usize;
        let wr = lagrange(tr - i0 as f64);
        let tt = x.theta.rem_euclid(TAU) / grid.dtheta();
        let k0 = tt.floor() as isize - half;
        let wt = lagrange(tt - k0 as f64);
        let (c1, c2) = (self.field.c1(), self.field.c2());
        let mut out = [0.0; 2];
        for (a, wa) in wr.iter().enumerate() {
            for (b, wb) in wt.iter().enumerate() {
                let k = (k0 + b as isize).rem_euclid(nt as isize) as usize;
                let j = grid.idx(i0 + a, k);
                let w = wa * wb;
                out[0] += w * c1[j];
                out[1] += w * c2[j];
            }
        }
        out
    }
}

/// `ψ = amp β(R)⁶ (1 + Σ_j c_j cos(jθ + φ_j))` with
/// `β = 4(R − r0)(r1 − R)/(r1 − r0)²` on `[r0, r1]` and zero outside, so `ψ`
/// vanishes with its first five radial derivatives at both ends.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StreamFunction {
    pub amp: f64,
    pub r0: f64,
    pub r1: f64,
    /// `(j, c_j, φ_j)`.
    #[serde(default)]
    pub modes: Vec<(u32, f64, f64)>,
}

impl StreamFunction {
    pub fn validate(&self) -> Result<()> {
        if !(0.0 < self.r0 && self.r0 < self.r1 && self.r1 < 1.0) || !self.amp.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "stream function needs 0 < r0 < r1 < 1 and finite amplitude, got {self:?}"
            )));
        }
        let check = self.boundary_max();
        if !(check <= 1e-12) {
            return Err(Error::InvalidArgument(format!(
                "stream function does not vanish on the annulus boundary ({check:e})"
            )));
        }
        Ok(())
    }

    /// Largest `|ψ|`, `|∇ψ|` on the two boundary circles.
    pub fn boundary_max(&self) -> f64 {
        let mut m = 0.0f64;
        for r in [self.r0, self.r1] {
            for k in 0..64 {
                let x = Point::new(r, TAU * k as f64 / 64.0);
                let (psi, pr, pt) = self.eval_polar(x);
                m = m.max(psi.abs()).max(pr.abs()).max((pt / r).abs());
            }
        }
        m
    }

    /// `(ψ, ψ,_R, ψ,_θ)`.
    pub fn eval_polar(&self, x: Point) -> (f64, f64, f64) {
        let (r0, r1) = (self.r0, self.r1);
        if x.r <= r0 || x.r >= r1 {
            return (0.0, 0.0, 0.0);
        }
        let h2 = (r1 - r0) * (r1 - r0);
        let beta = 4.0 * (x.r - r0) * (r1 - x.r) / h2;
        let dbeta = 4.0 * (r0 + r1 - 2.0 * x.r) / h2;
        let b5 = beta.powi(5);
        let (mut a, mut da) = (1.0, 0.0);
        for &(j, c, phi) in &self.modes {
            let (s, co) = (j as f64 * x.theta + phi).sin_cos();
            a += c * co;
            da -= c * j as f64 * s;
        }
        (self.amp * b5 * beta * a, self.amp * 6.0 * b5 * dbeta * a, self.amp * b5 * beta * da)
    }

    /// `w = ∇⊥ψ = (−ψ,_y, ψ,_x)`; divergence-free.
    pub fn velocity(&self, x: Point) -> [f64; 2] {
        let (_, pr, pt) = self.eval_polar(x);
        if pr == 0.0 && pt == 0.0 {
            return [0.0, 0.0];
        }
        let (s, c) = x.theta.sin_cos();
        [-s * pr - c * pt / x.r, c * pr - s * pt / x.r]
    }
}

/// Flow of `∇⊥ψ` up to time `s`, integrated with classical RK4.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowSpec {
    pub stream: StreamFunction,
    pub s: f64,
    pub steps: usize,
    #[serde(default = "default_det_tol")]
    pub det_tol: f64,
}

fn default_det_tol() -> f64 {
    1e-5
}

impl FlowSpec {
    pub fn validate(&self) -> Result<()> {
        self.stream.validate()?;
        if !self.s.is_finite() || self.steps == 0 || !(self.det_tol > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "flow needs finite time, at least one step and a positive tolerance, got s = {}, steps = {}, tol = {}",
                self.s, self.steps, self.det_tol
            )));
        }
        Ok(())
    }

    /// `φ_s(x)` in Cartesian coordinates.
    pub fn flow_point(&self, x: Point) -> [f64; 2] {
        let mut y = x.cartesian();
        if self.s == 0.0 || x.r <= self.stream.r0 || x.r >= self.stream.r1 {
            return y;
        }
        let h = self.s / self.steps as f64;
        let w = |p: [f64; 2]| self.stream.velocity(Point::from_cartesian(p[0], p[1]));
        let add = |p: [f64; 2], v: [f64; 2], a: f64| [p[0] + a * v[0], p[1] + a * v[1]];
        for _ in 0..self.steps {
            let k1 = w(y);
            let k2 = w(add(y, k1, 0.5 * h));
            let k3 = w(add(y, k2, 0.5 * h));
            let k4 = w(add(y, k3, h));
            for c in 0..2 {
                y[c] += h / 6.0 * (k1[c] + 2.0 * k2[c] + 2.0 * k3[c] + k4[c]);
            }
        }
        y
    }
}

/// `v = u ∘ φ_s` and `η = v − u`.
#[derive(Debug, Clone)]
pub struct FlowVariation {
    pub v: VectorField,
    pub eta: VectorField,
    /// `max |det ∇v − 1|`.
    pub det_max_dev: f64,
}

/// Composes the measure-preserving `u` with the flow. Nodes outside the open
/// annulus are fixed by the flow and take `u` at the node itself.
pub fn make_measure_preserving_variation(
    u: &dyn PointMap,
    grid: &PolarGrid,
    flow: &FlowSpec,
) -> Result<FlowVariation> {
    flow.validate()?;
    let (r0, r1) = (flow.stream.r0, flow.stream.r1);
    let nodes = grid.sample_nodes(|i, k| {
        let x = grid.point(i, k);
        if flow.s == 0.0 || x.r <= r0 || x.r >= r1 {
            return (u.map_point(x), x.r);
        }
        let y = flow.flow_point(x);
        let p = Point::from_cartesian(y[0], y[1]);
        (u.map_point(p), p.r)
    });
    for (j, (_, r)) in nodes.iter().enumerate() {
        let (i, _) = grid.node(j);
        let start = grid.radius(i);
        let inside = start > r0 && start < r1;
        if inside && !(*r >= r0 && *r <= r1) {
            return Err(Error::FlowLeftAnnulus { radius: *r, r0, r1 });
        }
    }
    let (c1, c2) = nodes.into_iter().map(|([a, b], _)| (a, b)).unzip();
    let v = VectorField::new(grid.clone(), c1, c2)?;
    let u_nodes = grid.sample_vector(|x| u.map_point(x))?;
    let eta = v.sub(&u_nodes)?;
    let det_max_dev = det_deviation(&gradient(&v));
    if !(det_max_dev <= flow.det_tol) {
        return Err(Error::DetConstraint { max_dev: det_max_dev, tol: flow.det_tol });
    }
    Ok(FlowVariation { v, eta, det_max_dev })
}

/// Random flow on the annulus `[0.25, 0.85]`: amplitude `U(0.001, 0.004)`,
/// up to three angular modes, unit time.
pub fn random_flow(rng: &mut TrialRng, steps: usize) -> FlowSpec {
    let amp = rng.gen_range(0.001..0.004);
    let count = rng.gen_range(0..=3);
    let modes = (0..count)
        .map(|_| (rng.gen_range(1..=4u32), rng.gen_range(-0.5..0.5), rng.gen_range(0.0..TAU)))
        .collect();
    FlowSpec {
        stream: StreamFunction { amp, r0: 0.25, r1: 0.85, modes },
        s: 1.0,
        steps,
        det_tol: default_det_tol(),
    }
}
