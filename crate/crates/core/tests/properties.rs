use proptest::prelude::*;

use diskcert::certifier::{estimate_l, estimate_m, estimate_n, Bound, IntegerEstimate};
use diskcert::energies::{eval_e, subdifferential_slack, PDirichletSpec};
use diskcert::fourier::{project_band, Band};
use diskcert::{Mat2, PolarGrid, ScalarField, VectorField};

fn mat() -> impl Strategy<Value = Mat2> {
    prop::array::uniform4(-10.0f64..10.0).prop_map(|[a, b, c, d]| Mat2::new(a, b, c, d))
}

fn grid() -> PolarGrid {
    PolarGrid::new(16, 16).unwrap()
}

/// Positive weight `c (1 + a R²) exp(s cos(jθ + φ))`.
fn weight() -> impl Strategy<Value = (f64, f64, f64, u32, f64)> {
    (0.1f64..5.0, 0.0f64..2.0, 0.0f64..1.5, 1u32..4, 0.0f64..6.3)
}

fn sample_weight(g: &PolarGrid, (c, a, s, j, phi): (f64, f64, f64, u32, f64)) -> ScalarField {
    g.sample_scalar(|x| c * (1.0 + a * x.r * x.r) * (s * (j as f64 * x.theta + phi).cos()).exp()).unwrap()
}

/// Random smooth vector field from a few modes.
fn field() -> impl Strategy<Value = Vec<(usize, f64, f64, f64)>> {
    prop::collection::vec((0usize..8, -1.0f64..1.0, -1.0f64..1.0, 0.0f64..3.0), 1..5)
}

fn sample_field(g: &PolarGrid, terms: &[(usize, f64, f64, f64)]) -> VectorField {
    g.sample_vector(|x| {
        terms.iter().fold([0.0, 0.0], |[u, v], &(j, a, b, q)| {
            let rad = x.r.powf(q);
            let t = j as f64 * x.theta;
            [u + rad * (a * t.cos() + b * t.sin()), v + rad * (b * t.cos() - a * t.sin())]
        })
    })
    .unwrap()
}

fn minimal(e: &IntegerEstimate) -> bool {
    match e.value {
        Bound::Finite(0) => e.accepts(0),
        Bound::Finite(k) => e.accepts(k) && !e.accepts(k - 1),
        Bound::Unbounded => true,
    }
}

proptest! {
    #[test]
    fn expansion_slack_is_nonnegative(a in mat(), b in mat(), p in 2.0f64..6.0) {
        prop_assert!(subdifferential_slack(&a, &b, p) >= -1e-12);
        prop_assert!(subdifferential_slack(&a, &a, p).abs() == 0.0);
    }

    #[test]
    fn det_expansion(a in mat(), b in mat()) {
        let lhs = (a + b).det();
        let rhs = a.det() + a.cof().dot(&b) + b.det();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + a.norm_sq() + b.norm_sq()));
    }

    #[test]
    fn cofactor_identity(a in mat()) {
        let m = a.matmul(&a.cof().transpose());
        let d = a.det();
        let tol = 1e-12 * (1.0 + a.norm_sq());
        prop_assert!((m.a11 - d).abs() <= tol && (m.a22 - d).abs() <= tol);
        prop_assert!(m.a12.abs() <= tol && m.a21.abs() <= tol);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn energy_nonnegative_and_monotone_in_nu(terms in field(), w in weight(), extra in 0.0f64..3.0, p in 2.0f64..4.0) {
        let g = grid();
        let u = sample_field(&g, &terms);
        let nu = sample_weight(&g, w);
        let bigger = nu.map(|v| v + extra);
        let e1 = eval_e(&u, &PDirichletSpec::new(p, nu).unwrap()).unwrap();
        let e2 = eval_e(&u, &PDirichletSpec::new(p, bigger).unwrap()).unwrap();
        prop_assert!(e1 >= 0.0);
        prop_assert!(e2 >= e1 - 1e-12 * e1.abs());
    }

    #[test]
    fn l_is_scale_invariant(w in weight(), c in 0.01f64..100.0) {
        let g = grid();
        let s = sample_weight(&g, w);
        let a = estimate_l(&s).unwrap();
        let b = estimate_l(&s.map(|v| c * v)).unwrap();
        prop_assert_eq!(a.value, b.value);
        prop_assert!(minimal(&a));
    }

    #[test]
    fn n_and_m_scale_together(terms in field(), w in weight(), c in 0.01f64..100.0) {
        let g = grid();
        let y = sample_field(&g, &terms);
        let s2 = sample_weight(&g, w);
        let n = estimate_n(&y, &s2).unwrap();
        let m = estimate_m(&y, &s2).unwrap();
        prop_assert!(minimal(&n) && minimal(&m));
        // Scaling λ and σ² by the same factor leaves both integers fixed
        // up to the ceiling tolerance.
        let (yc, s2c) = (y.scale(c), s2.map(|v| c * v));
        let nc = estimate_n(&yc, &s2c).unwrap();
        let mc = estimate_m(&yc, &s2c).unwrap();
        let close = |a: &IntegerEstimate, b: &IntegerEstimate| {
            (a.sup_ratio - b.sup_ratio).abs() <= 1e-9 * (1.0 + a.sup_ratio)
        };
        prop_assert!(close(&n, &nc) && close(&m, &mc));
        if (n.sup_ratio - n.sup_ratio.round()).abs() > 1e-6 {
            prop_assert_eq!(n.value, nc.value);
        }
        if (m.sup_ratio - m.sup_ratio.round()).abs() > 1e-6 {
            prop_assert_eq!(m.value, mc.value);
        }
        // m uses the larger factor.
        if let (Bound::Finite(a), Bound::Finite(b)) = (n.value, m.value) {
            prop_assert!(b >= a);
        }
    }

    #[test]
    fn band_projection_is_idempotent(terms in field(), t in 0usize..8, zero in any::<bool>()) {
        let g = grid();
        let f = sample_field(&g, &terms);
        let band = if zero { Band::ZeroAndHighFrom(t) } else { Band::HighFrom(t) };
        let once = project_band(&f, band).unwrap();
        let twice = project_band(&once, band).unwrap();
        let diff = once.c1().iter().chain(once.c2()).zip(twice.c1().iter().chain(twice.c2()))
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        prop_assert!(diff <= 1e-12 * (1.0 + f.max_abs()));
    }
}
