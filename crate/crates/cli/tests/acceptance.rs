//! Acceptance gate: every criterion at its stated tolerance on a 256×256
//! grid, one PASS/FAIL line each. Exits non-zero if any criterion fails.

use std::f64::consts::PI;
use std::time::Instant;

use anyhow::{ensure, Result};

use diskcert::certifier::{certify, estimate_l, estimate_m, estimate_n, Bound, CertificateReport, IntegerEstimate};
use diskcert::diffops::{gradient, weak_piola};
use diskcert::energies::{check_subdifferential, eval_e, gallery, PDirichletSpec, PolyconvexSpec, Profile, PsiSpec, Setting};
use diskcert::lab::{
    energy_gap_compressible, energy_gap_incompressible, verify_det_identity, verify_h_lower_bound, verify_poincare,
    verify_weighted_fourier, GapOptions, HPart, HSetup,
};
use diskcert::par::Execution;
use diskcert::rng::{normal, trial_rng};
use diskcert::stationarity::{
    default_base, det_deviation, ele_residual, integrate_pressure, recover_pressure_gradient, StationaryCandidate,
    TestBasis,
};
use diskcert::{Mat2, PolarGrid, ScalarField};
use diskcert_cli::commands::{cmd_certify, cmd_verify};
use diskcert_cli::config::{MapSource, PressureSource};
use diskcert_cli::RunConfig;

const SEED: u64 = 20_240_601;
const EXEC: Execution = Execution::Parallel;

fn grid() -> PolarGrid {
    PolarGrid::new(256, 256).unwrap()
}

fn ones(g: &PolarGrid) -> ScalarField {
    ScalarField::constant(g, 1.0)
}

fn expcos2() -> Profile {
    Profile::ExpCos { amp: 1.0, l: 2, s: 1.0, g2: 0.0 }
}

fn poincare() -> Result<String> {
    let g = grid();
    let mut out = Vec::new();
    for n in [1, 3, 7] {
        let rep = verify_poincare(&g, n, 100, SEED, EXEC)?;
        ensure!(rep.pass, "N = {n}: {:?}", rep.summary);
        out.push(format!("N={n} min {:.4} sat {:.12}", rep.summary["min_ratio"], rep.summary["saturation_ratio"]));
    }
    Ok(out.join("; "))
}

fn weighted_fourier() -> Result<String> {
    let g = grid();
    let sigma = expcos2().sample(&g)?;
    let rep = verify_weighted_fourier(&sigma, 2, 6, 1000, SEED, EXEC)?;
    ensure!(rep.pass && rep.trials == 1000, "{} failures: {:?}", rep.failures, rep.summary);
    Ok(format!(
        "1000 trials, min slack {:.3e}, dx-measure variant violated in {} trials",
        rep.summary["min_rhs_minus_lhs"], rep.summary["literal_dx_violations"]
    ))
}

fn subdifferential() -> Result<String> {
    let mut out = Vec::new();
    for p in [2.0, 2.5, 3.0, 4.0] {
        let r = check_subdifferential(p, 100_000, SEED)?;
        ensure!(r.violations == 0, "p = {p}: {} violations, min slack {:e}", r.violations, r.min_slack);
        ensure!(r.equal_pair_max_abs == 0.0, "p = {p}: a = b slack {:e}", r.equal_pair_max_abs);
        out.push(format!("p={p} min {:.1e}", r.min_slack));
    }
    Ok(out.join("; "))
}

fn cofactor_algebra() -> Result<String> {
    let c = Mat2::new(1.0, 2.0, 3.0, 4.0).cof();
    ensure!(c == Mat2::new(4.0, -3.0, -2.0, 1.0), "cof [[1,2],[3,4]] = {c:?}");
    let mut rng = trial_rng(SEED, 0);
    let mut worst = 0.0f64;
    for _ in 0..10_000 {
        let mut m = || Mat2::new(normal(&mut rng), normal(&mut rng), normal(&mut rng), normal(&mut rng));
        let (a, b) = (m(), m());
        worst = worst.max(((a + b).det() - (a.det() + a.cof().dot(&b) + b.det())).abs());
    }
    ensure!(worst <= 1e-12, "expansion error {worst:e}");
    let g = grid();
    let bump = |r: f64| if r > 0.2 && r < 0.8 { (4.0 * (r - 0.2) * (0.8 - r) / 0.36).powi(4) } else { 0.0 };
    let eta = g.sample_vector(|x| [bump(x.r) * (3.0 * x.theta).cos(), bump(x.r) * (1.0 + x.theta.sin())])?;
    let mut piola = 0.0f64;
    let u2 = gallery()?.map("ncover2").unwrap().sample(&g)?;
    let smooth = g.sample_vector(|x| [x.x() + 0.3 * x.y() * x.y(), x.y() + x.x().sin()])?;
    for u in [u2, smooth] {
        piola = piola.max(weak_piola(&gradient(&u), &eta)?.abs());
    }
    ensure!(piola <= 1e-6, "weak Piola residual {piola:e}");
    Ok(format!("expansion max error {worst:.1e}, weak Piola {piola:.1e}"))
}

fn energies() -> Result<String> {
    let g = grid();
    let gal = gallery()?;
    let spec = PDirichletSpec::new(2.0, ones(&g))?;
    let e_id = eval_e(&gal.map("identity").unwrap().sample(&g)?, &spec)?;
    let e_u2 = eval_e(&gal.map("ncover2").unwrap().sample(&g)?, &spec)?;
    ensure!((e_id - 2.0 * PI).abs() <= 1e-5, "E(identity) = {e_id}");
    ensure!((e_u2 - 2.5 * PI).abs() <= 1e-4, "E(u_2) = {e_u2}");
    let mut dev = 0.0f64;
    for name in ["ncover2", "ncover3"] {
        dev = dev.max(det_deviation(&gradient(&gal.map(name).unwrap().sample(&g)?)));
    }
    ensure!(dev <= 1e-8, "max |det ∇u_N − 1| = {dev:e}");
    Ok(format!("E(id) − 2π = {:.1e}, E(u_2) − 2.5π = {:.1e}, det dev {dev:.1e}", e_id - 2.0 * PI, e_u2 - 2.5 * PI))
}

fn residuals() -> Result<String> {
    let g = grid();
    let gal = gallery()?;
    let basis = TestBasis::default();
    let spec = PDirichletSpec::new(2.0, ones(&g))?;
    let id = gal.map("identity").unwrap().sample(&g)?;
    let c = StationaryCandidate::incompressible(id, spec.clone(), Some(ScalarField::zeros(&g)), 1e-6)?;
    let r_id = ele_residual(&c, &basis)?.max_normalized;
    ensure!(r_id <= 1e-8, "identity residual {r_id:e}");

    let u2 = gal.map("ncover2").unwrap().sample(&g)?;
    let rec = recover_pressure_gradient(&u2, &spec)?;
    ensure!(rec.max_curl <= 1e-4, "u_2 curl {:e}", rec.max_curl);
    let lambda = integrate_pressure(&rec.g, default_base(&g), 1e-4)?.lambda;
    let c = StationaryCandidate::incompressible(u2, spec, Some(lambda), 1e-6)?;
    let r_u2 = ele_residual(&c, &basis)?.max_normalized;
    ensure!(r_u2 <= 1e-5, "u_2 loop residual {r_u2:e}");

    let aff = gal.map("affine_shear").unwrap().sample(&g)?;
    let psi = gal.psi("det_penalty").unwrap().clone();
    let c = StationaryCandidate::compressible(aff, PolyconvexSpec::from_gallery(2.0, ones(&g), psi)?)?;
    let r_aff = ele_residual(&c, &basis)?.max_normalized;
    ensure!(r_aff <= 1e-8, "affine residual {r_aff:e}");
    Ok(format!(
        "identity {r_id:.1e}, u_2 curl {:.1e} loop {r_u2:.1e}, affine {r_aff:.1e}",
        rec.max_curl
    ))
}

/// `k` is the smallest accepted integer: accepted itself, `k − 1` rejected.
fn minimal(e: &IntegerEstimate) -> bool {
    match e.value {
        Bound::Finite(0) => e.accepts(0),
        Bound::Finite(k) => e.accepts(k) && !e.accepts(k - 1),
        Bound::Unbounded => true,
    }
}

fn check_arithmetic(r: &CertificateReport, label: &str) -> Result<()> {
    let star = |a: Bound| Some(a.finite()? + r.l.value.finite()?);
    ensure!(r.n_star == star(r.n.value) && r.m_star == star(r.m.value), "{label}: n*/m* arithmetic");
    ensure!(minimal(&r.l) && minimal(&r.n) && minimal(&r.m), "{label}: minimality");
    Ok(())
}

fn certificate_arithmetic() -> Result<String> {
    let g = grid();
    let gal = gallery()?;
    let l = estimate_l(&expcos2().sample(&g)?)?;
    ensure!(l.value == Bound::Finite(2) && !l.accepts(1), "l(exp cos 2θ) = {:?}", l.value);

    // |y|_∞ = σ² everywhere: ratio-1 data.
    let y = g.sample_vector(|x| [1.0, 0.5 * (x.theta).cos()])?;
    let n = estimate_n(&y, &ones(&g))?;
    let m = estimate_m(&y, &ones(&g))?;
    ensure!(n.value == Bound::Finite(2) && (2f64.sqrt()).ceil() == 2.0, "n = {:?}", n.value);
    ensure!(m.value == Bound::Finite(2) && (8f64.sqrt() / 3f64.sqrt()).ceil() == 2.0, "m = {:?}", m.value);
    ensure!(minimal(&n) && minimal(&m), "ratio-1 minimality");

    let mut cases = 0;
    for map in &gal.maps {
        let u = map.sample(&g)?;
        for nu in &gal.nu_profiles {
            let nu_f = nu.profile.sample(&g)?;
            if map.measure_preserving {
                let lam = map.known_pressure(1.0, 2.0).unwrap().sample(&g)?;
                let spec = PDirichletSpec::new(2.0, nu_f.clone())?;
                let c = StationaryCandidate::incompressible(u.clone(), spec, Some(lam), 1e-6)?;
                check_arithmetic(&certify(&c, Setting::Incompressible)?, &format!("{}/{}", map.name, nu.name))?;
                cases += 1;
            }
            for (psi_name, spec) in gal.polyconvex_specs(&g, 2.0, &nu.profile)? {
                let c = StationaryCandidate::compressible(u.clone(), spec)?;
                check_arithmetic(&certify(&c, Setting::Compressible)?, &format!("{}/{}/{psi_name}", map.name, nu.name))?;
                cases += 1;
            }
        }
    }

    let id = gal.map("identity").unwrap().sample(&g)?;
    let c = StationaryCandidate::incompressible(id, PDirichletSpec::new(2.0, ones(&g))?, Some(ScalarField::zeros(&g)), 1e-6)?;
    let r = certify(&c, Setting::Incompressible)?;
    ensure!(r.full_class && r.n_star == Some(0), "λ ≡ 0 full class");
    Ok(format!("l = 2, n = m = 2, {cases} gallery certificates consistent and minimal, λ ≡ 0 full class"))
}

fn det_identity() -> Result<String> {
    let rep = verify_det_identity(&grid(), 100, SEED, EXEC)?;
    ensure!(rep.pass, "{} failures: {:?}", rep.failures, rep.summary);
    Ok(format!(
        "max rel {:.1e}, constant λ sides {:.1e} / {:.1e}",
        rep.summary["max_rel"], rep.summary["const_lhs"], rep.summary["const_rhs"]
    ))
}

fn h_bound() -> Result<String> {
    let g = grid();
    let r2 = g.sample_scalar(|x| x.r * x.r)?;
    let setup = |part, lambda: ScalarField, k| HSetup { sigma: ones(&g), lambda, p: 2.0, part, l: 0, k, r0: 0.1, r1: 0.9 };
    let one = verify_h_lower_bound(&setup(HPart::I, r2.clone(), 3), 1000, SEED, EXEC, true)?;
    ensure!(one.pass, "part i: {} failures", one.failures);
    let two = verify_h_lower_bound(&setup(HPart::II, r2.clone(), 4), 1000, SEED, EXEC, true)?;
    ensure!(two.pass, "part ii: {} failures", two.failures);
    let bad = setup(HPart::I, r2.map(|v| 40.0 * v), 1);
    let neg = verify_h_lower_bound(&bad, 200, SEED, EXEC, false)?;
    ensure!(neg.failures >= 1, "violated premise produced no failing trial");
    Ok(format!(
        "min H̃ part i {:.3}, part ii {:.3} (bound −1); violated premise: {} of 200 fail",
        one.summary["min_h"], two.summary["min_h"], neg.failures
    ))
}

fn energy_gaps() -> Result<String> {
    let g = grid();
    let gal = gallery()?;
    let map = gal.map("identity").unwrap();
    let spec = PDirichletSpec::new(2.0, ones(&g))?;
    let c = StationaryCandidate::incompressible(map.sample(&g)?, spec, Some(ScalarField::zeros(&g)), 1e-6)?;
    let opts = GapOptions { trials: 100, seed: SEED, ..GapOptions::default() };
    let inc = energy_gap_incompressible(&c, Some(map), &opts, EXEC)?;
    ensure!(inc.pass, "incompressible: {} failures: {:?}", inc.failures, inc.summary);
    ensure!(inc.records.iter().all(|r| r.get("certified") == 1.0), "not every flow trial certified");

    let psi = PsiSpec::DetPenalty { gamma: Profile::Constant { value: 1.0 } };
    let spec = PolyconvexSpec::from_gallery(2.0, ones(&g), psi)?;
    let u = gal.map("affine_shear").unwrap().sample(&g)?;
    let comp = energy_gap_compressible(&spec, &u, &opts, EXEC)?;
    ensure!(comp.pass, "compressible: {} failures: {:?}", comp.failures, comp.summary);
    Ok(format!(
        "incompressible min gap {:.3e}, H agreement {:.1e}; compressible min slack {:.3e}",
        inc.summary["min_gap"], inc.summary["max_h_agreement"], comp.summary["min_slack"]
    ))
}

fn determinism() -> Result<String> {
    let mut cfg = RunConfig { map: MapSource::Gallery("ncover2".into()), pressure: Some(PressureSource::Recover), seed: SEED, ..RunConfig::default() };
    let a = cmd_certify(&cfg)?;
    let b = cmd_certify(&cfg)?;
    ensure!(a.files == b.files, "certify payloads differ");

    cfg.trials = Some(50);
    let mut payloads = Vec::new();
    for exec in [Execution::Parallel, Execution::Sequential, Execution::Parallel] {
        cfg.execution = exec;
        let out = cmd_verify(&cfg, "det-identity")?;
        payloads.push((out.file("trials.jsonl").unwrap().to_vec(), out.file("summary.json").unwrap().to_vec()));
    }
    ensure!(payloads.windows(2).all(|w| w[0] == w[1]), "verify payloads differ");
    Ok("certify and verify payloads byte-identical across repeats and schedules".into())
}

fn main() {
    let criteria: [(&str, fn() -> Result<String>); 11] = [
        ("poincare", poincare),
        ("weighted-fourier", weighted_fourier),
        ("subdifferential", subdifferential),
        ("cofactor-algebra", cofactor_algebra),
        ("energies", energies),
        ("ele-residuals", residuals),
        ("certificate-arithmetic", certificate_arithmetic),
        ("det-identity", det_identity),
        ("h-lower-bound", h_bound),
        ("energy-gaps", energy_gaps),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let res = run();
        let secs = start.elapsed().as_secs_f64();
        match res {
            Ok(detail) => println!("PASS {:>2} {name} ({secs:.1} s): {detail}", i + 1),
            Err(e) => {
                failed += 1;
                println!("FAIL {:>2} {name} ({secs:.1} s): {e:#}", i + 1);
            }
        }
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
