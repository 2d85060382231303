//! Acceptance gate: one test per criterion, each printing a single
//! `[PASS]`/`[FAIL]` line on stderr (uncaptured) before asserting.

use std::io::Write;
use std::process::Command;
use std::time::{Duration, Instant};

use miscible::diagnostics::{korn_eigenvalue, stability_study, state_record, step_energy_residuals};
use miscible::forms::{assemble_convection, korteweg_tensor, symmetric_gradient_norm_sq};
use miscible::friction::{dissipation_defect, slip_grid, verify_hypotheses, FrictionLaw, MollifiedLaw};
use miscible::geometry::{build_rect_mesh, SideCondition, SidePartition};
use miscible::spaces::build_spaces;
use miscible::stepper::{ForcePreset, ProblemConfig, Simulation};
use miscible::verification::{
    couette_comparison, couette_config, galerkin_study, korteweg_identity_check, manufactured_convergence,
};
use miscible::forms::{assemble_constant_forms, FormCoefficients};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn report(id: u32, name: &str, ok: bool, detail: &str, elapsed: Duration) {
    let tag = if ok { "PASS" } else { "FAIL" };
    let _ = writeln!(
        std::io::stderr().lock(),
        "[{tag}] criterion {id:>2} {name}: {detail} ({:.2?})",
        elapsed
    );
}

fn check(id: u32, name: &str, ok: bool, detail: String, start: Instant) {
    report(id, name, ok, &detail, start.elapsed());
    assert!(ok, "criterion {id} ({name}) failed: {detail}");
}

fn wall_spaces(n: usize) -> miscible::spaces::DiscreteSpaces {
    let partition = SidePartition {
        bottom: SideCondition::Gamma1,
        ..SidePartition::uniform(SideCondition::Gamma0)
    };
    build_spaces(build_rect_mesh(n, n, 1.0, 1.0, partition).unwrap()).unwrap()
}

fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

#[test]
fn c01_korteweg_pointwise_formula() {
    let start = Instant::now();
    let mut worst = 0.0f64;
    for i in 0..10 {
        for j in 0..10 {
            let cx = -3.0 + 0.61 * i as f64;
            let cy = 2.5 - 0.47 * j as f64;
            let k = 0.1 + 0.37 * ((i * 10 + j) % 7) as f64;
            let t = korteweg_tensor([cx, cy], k).unwrap();
            let direct = [k * cy * cy, -k * cx * cy, -k * cx * cy, k * cx * cx];
            let got = [t.k11, t.k12, t.k21, t.k22];
            for (a, b) in got.iter().zip(&direct) {
                worst = worst.max((a - b).abs());
            }
        }
    }
    check(1, "Korteweg tensor formula", worst <= 1e-15, format!("max deviation {worst:.1e}"), start);
}

#[test]
fn c02_korteweg_dual_identity() {
    let start = Instant::now();
    let r = korteweg_identity_check(1.0);
    let rel = r.max_relative_difference();
    check(2, "Korteweg dual identity", r.passed(1e-10), format!("max relative difference {rel:.2e}"), start);
}

#[test]
fn c03_skew_forms_vanish_on_diagonal() {
    let start = Instant::now();
    let s = wall_spaces(8);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let u = random_vec(&mut rng, s.n_velocity());
        let v = random_vec(&mut rng, s.n_velocity());
        let eta = random_vec(&mut rng, s.n_scalar());
        let ops = assemble_convection(&s, &u);
        let a = ops.velocity.quadratic(&v).abs() / (norm(&u) * norm(&v).powi(2));
        let b = ops.scalar.quadratic(&eta).abs() / (norm(&u) * norm(&eta).powi(2));
        worst = worst.max(a).max(b);
    }
    check(3, "skew forms vanish on the diagonal", worst <= 1e-12, format!("max normalized |a1(u,v,v)|, |b1(u,e,e)| = {worst:.1e}"), start);
}

#[test]
fn c04_discrete_korn_and_a0_identity() {
    let start = Instant::now();
    let nu0 = 1.3;
    let coeffs = FormCoefficients { viscosity: nu0, diffusivity: 0.1 };
    let mut eigs = Vec::new();
    let mut worst = 0.0f64;
    for n in [8, 16] {
        let s = wall_spaces(n);
        let forms = assemble_constant_forms(&s, coeffs, &|_, _| 0.0).unwrap();
        eigs.push(korn_eigenvalue(&s, &forms).unwrap().min_eigenvalue);
        if n == 8 {
            let mut rng = ChaCha8Rng::seed_from_u64(4);
            for _ in 0..20 {
                let u = random_vec(&mut rng, s.n_velocity());
                let a = forms.a0.quadratic(&u);
                let e = 2.0 * nu0 * symmetric_gradient_norm_sq(&s, &u);
                worst = worst.max((a - e).abs() / e.abs());
            }
        }
    }
    let ok = eigs.iter().all(|&l| l > 0.0) && worst <= 1e-12;
    check(4, "discrete Korn and a0 identity", ok, format!("min eigenvalues {eigs:.4?}, a0 identity {worst:.1e}"), start);
}

#[test]
fn c05_concentration_energy_law() {
    let start = Instant::now();
    let mut cfg = ProblemConfig::default();
    cfg.discretization.nx = 16;
    cfg.discretization.ny = 16;
    cfg.discretization.t_end = 0.25;
    cfg.discretization.dt = 1e-3;
    assert_eq!(cfg.source_bound(), 0.0);
    let sim = Simulation::new(cfg).unwrap();
    let mass = &sim.forms().mass_c;
    let mut state = sim.project_initial().unwrap();
    let mut worst = f64::NEG_INFINITY;
    let mut monotone = true;
    let mut norm_prev = mass.quadratic(&state.c).sqrt();
    for i in 0..sim.step_count() {
        let t_next = if i + 1 == sim.step_count() { 0.25 } else { (i + 1) as f64 * 1e-3 };
        let dt = t_next - state.t;
        let (next, rep) = sim.step(&state, dt).unwrap();
        let rec = step_energy_residuals(&sim, &state, &next, dt, rep.fp_iters).unwrap();
        worst = worst.max(rec.est1_residual / rec.est1_scale);
        let norm_now = mass.quadratic(&next.c).sqrt();
        monotone &= norm_now <= norm_prev;
        norm_prev = norm_now;
        state = next;
    }
    let _ = state_record(&sim, &state).unwrap();
    let ok = worst <= 1e-10 && monotone;
    check(5, "concentration energy law", ok, format!("max r1/scale {worst:.2e}, ||C|| nonincreasing: {monotone}"), start);
}

#[test]
fn c06_friction_hypotheses_and_mollification() {
    let start = Instant::now();
    let laws = [
        FrictionLaw::exp_decay(0.5, 1.5, 2.0).unwrap(),
        FrictionLaw::sawtooth(1.0, 0.4, 0.5).unwrap(),
    ];
    let grid = slip_grid(10.0, 10_001);
    let mut details = Vec::new();
    let mut ok = true;
    for law in &laws {
        let rep = verify_hypotheses(law, &grid);
        ok &= rep.passed();
        // smooth points at distance >= 1/8 from every kink
        let points = [0.3, 0.7, 1.2, -0.85];
        let mut errors = Vec::new();
        let mut defects = Vec::new();
        for m in [8u32, 16, 32, 64] {
            let ml = MollifiedLaw::new(law.clone(), m).unwrap();
            let e = points
                .iter()
                .map(|&s| (ml.grad(s).unwrap() - law.derivative(s)).abs())
                .fold(0.0f64, f64::max);
            errors.push(e);
            defects.push(dissipation_defect(&ml, 3.0, 601).unwrap());
        }
        // first order: halving the radius at least halves the error, unless
        // the kernel already avoids every kink and the error is round-off
        let decays = errors.windows(2).all(|w| w[1] <= 0.5 * w[0] || w[1] <= 1e-13);
        ok &= decays && defects[3] <= defects[0];
        let errors: Vec<String> = errors.iter().map(|e| format!("{e:.1e}")).collect();
        details.push(format!(
            "{}: hypotheses {}, errors [{}], delta(8) {:.1e}, delta(64) {:.1e}",
            law.name(),
            rep.passed(),
            errors.join(", "),
            defects[0],
            defects[3]
        ));
    }
    check(6, "friction hypotheses and mollification", ok, details.join("; "), start);
}

#[test]
fn c07_couette_oracle() {
    let start = Instant::now();
    let cfg = couette_config(64, 32, 1.0, 4.0, 64);
    assert_eq!(cfg.friction.law().unwrap().name(), "exp-decay");
    let r = couette_comparison(&cfg).unwrap();
    check(
        7,
        "Couette friction oracle",
        r.relative_error <= 1e-3,
        format!("oracle slip {:.6}, measured {:.6}, relative error {:.2e}", r.oracle.slip, r.measured_slip, r.relative_error),
        start,
    );
}

#[test]
fn c08_manufactured_convergence() {
    let start = Instant::now();
    let t = manufactured_convergence("manufactured", 4).unwrap();
    let v = *t.velocity_orders().last().unwrap();
    let c = *t.concentration_orders().last().unwrap();
    check(
        8,
        "manufactured convergence",
        v >= 2.5 && c >= 2.5,
        format!("finest-pair L2 orders velocity {v:.3}, concentration {c:.3}"),
        start,
    );
}

#[test]
fn c09_continuous_dependence() {
    let start = Instant::now();
    let mut cfg = ProblemConfig::default();
    cfg.discretization.nx = 8;
    cfg.discretization.ny = 8;
    cfg.discretization.t_end = 0.2;
    cfg.discretization.dt = 0.01;
    assert!(verify_hypotheses(&cfg.friction.law().unwrap(), &slip_grid(10.0, 10_001)).passed());
    let a = stability_study(&cfg, 1e-2).unwrap().amplification.unwrap();
    let b = stability_study(&cfg, 5e-3).unwrap().amplification.unwrap();
    let ratio = a / b;
    check(
        9,
        "continuous dependence",
        (0.5..=2.0).contains(&ratio),
        format!("amplifications {a:.6}, {b:.6}, ratio {ratio:.4}"),
        start,
    );
}

#[test]
fn c10_galerkin_differences_decrease() {
    let start = Instant::now();
    let mut cfg = ProblemConfig::default();
    cfg.discretization.nx = 4;
    cfg.discretization.ny = 4;
    cfg.discretization.t_end = 0.1;
    cfg.discretization.dt = 0.01;
    cfg.physics.force = ForcePreset::Rotation { amplitude: 1.0 };
    let g = galerkin_study(&cfg, 4).unwrap();
    check(
        10,
        "Galerkin differences decrease",
        g.differences.len() == 3 && g.strictly_decreasing(),
        format!(
            "differences [{}]",
            g.differences.iter().map(|d| format!("{d:.3e}")).collect::<Vec<_>>().join(", ")
        ),
        start,
    );
}

#[test]
fn c11_deterministic_timeseries() {
    let start = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.toml");
    std::fs::write(
        &config,
        "[discretization]\nnx = 8\nny = 8\nt_end = 0.05\ndt = 0.005\n[output]\nsnapshot_every = 5\n",
    )
    .unwrap();
    let mut outputs = Vec::new();
    for name in ["a", "b"] {
        let out = dir.path().join(name);
        let run = Command::new(env!("CARGO_BIN_EXE_miscible"))
            .args(["run", "--config"])
            .arg(&config)
            .arg("--out")
            .arg(&out)
            .output()
            .unwrap();
        assert!(run.status.success());
        outputs.push(std::fs::read(out.join("timeseries.csv")).unwrap());
    }
    let same = outputs[0] == outputs[1] && !outputs[0].is_empty();
    check(11, "deterministic timeseries", same, format!("{} bytes, identical: {same}", outputs[0].len()), start);
}
