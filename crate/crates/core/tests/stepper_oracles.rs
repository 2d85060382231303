use std::f64::consts::PI;

use faer::linalg::solvers::Solve;
use faer::Mat;

use miscible::diagnostics::state_record;
use miscible::forms::scalar_l2_error;
use miscible::geometry::SideCondition;
use miscible::spaces::PINNED_PRESSURE_DOF;
use miscible::stepper::{ConcentrationPreset, ForcePreset, ProblemConfig, Simulation, State, VelocityPreset};

fn still_config(n: usize) -> ProblemConfig {
    let mut c = ProblemConfig::default();
    c.discretization.nx = n;
    c.discretization.ny = n;
    c.physics.initial_velocity = VelocityPreset::Zero;
    c
}

#[test]
fn stokes_step_matches_dense_monolithic_solve() {
    let mut cfg = still_config(4);
    cfg.domain.bottom = SideCondition::Gamma0;
    cfg.physics.convection = false;
    cfg.physics.force = ForcePreset::Rotation { amplitude: 1.0 };
    cfg.physics.initial_concentration = ConcentrationPreset::Constant { value: 0.3 };
    let dt = 0.05;
    let sim = Simulation::new(cfg).unwrap();
    let s0 = sim.project_initial().unwrap();
    let got = sim.velocity_step(&s0, &s0.c, dt).unwrap();

    let sp = sim.spaces();
    let f = sim.forms();
    let (nu, n) = (sp.n_velocity(), sp.n_saddle());
    let mut pinned = vec![false; n];
    for &d in sp.velocity_constraints().dofs() {
        pinned[d] = true;
    }
    pinned[nu + PINNED_PRESSURE_DOF] = true;
    let block = f.mass_u.to_dense();
    let a0 = f.a0.to_dense();
    let b = f.b_div.to_dense();
    let load = miscible::forms::assemble_velocity_load(sp, &|x, y| [-(y - 0.5), x - 0.5]);
    let entry = |i: usize, j: usize| -> f64 {
        if pinned[i] || pinned[j] {
            return if i == j { 1.0 } else { 0.0 };
        }
        match (i < nu, j < nu) {
            (true, true) => block[i][j] / dt + a0[i][j],
            (true, false) => b[j - nu][i],
            (false, true) => b[i - nu][j],
            (false, false) => 0.0,
        }
    };
    let m = Mat::<f64>::from_fn(n, n, entry);
    let rhs = Mat::<f64>::from_fn(n, 1, |i, _| if i < nu && !pinned[i] { load[i] } else { 0.0 });
    let x = m.partial_piv_lu().solve(&rhs);
    let scale = got.u.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    assert!(scale > 1e-3);
    for i in 0..nu {
        assert!((x[(i, 0)] - got.u[i]).abs() <= 1e-10 * scale, "dof {i}");
    }
}

fn cosine_decay_error(n: usize, dt: f64, t_end: f64, d: f64) -> (f64, f64) {
    let mut cfg = still_config(n);
    cfg.physics.diffusivity = d;
    cfg.physics.korteweg = 0.0;
    cfg.discretization.dt = dt;
    cfg.discretization.t_end = t_end;
    let sim = Simulation::new(cfg).unwrap();
    let out = sim.run().unwrap();
    let mass = &sim.forms().mass_c;
    let ratio = (mass.quadratic(&out.final_state.c) / mass.quadratic(&out.initial.c)).sqrt();
    // implicit Euler on the eigenmode with eigenvalue 2 pi^2 d
    let lambda = 2.0 * PI * PI * d;
    let steps = sim.step_count() as i32;
    let _ = steps;
    (ratio, ratio - (-lambda * t_end).exp())
}

#[test]
fn cosine_mode_decays_by_the_implicit_euler_factor() {
    let (d, dt) = (0.1, 0.01);
    let (ratio, _) = cosine_decay_error(16, dt, dt, d);
    let factor = 1.0 / (1.0 + dt * d * 2.0 * PI * PI);
    assert!((ratio - factor).abs() < 1e-6, "{ratio} vs {factor}");
}

#[test]
fn halving_dt_halves_the_time_error() {
    let (d, t_end) = (0.1, 0.2);
    let (_, e1) = cosine_decay_error(12, 0.02, t_end, d);
    let (_, e2) = cosine_decay_error(12, 0.01, t_end, d);
    let rate = e1 / e2;
    assert!((1.8..2.2).contains(&rate), "{e1} / {e2} = {rate}");
}

#[test]
fn constant_concentration_is_preserved() {
    let mut cfg = still_config(4);
    cfg.physics.initial_concentration = ConcentrationPreset::Constant { value: 0.7 };
    let sim = Simulation::new(cfg).unwrap();
    let s0 = sim.project_initial().unwrap();
    let (c, _) = sim.concentration_step(&s0.c, &s0.u, 0.01, 0.01).unwrap();
    for (a, b) in c.iter().zip(&s0.c) {
        assert!((a - b).abs() < 1e-14);
        assert!((a - 0.7).abs() < 1e-12);
    }
}

#[test]
fn unforced_flow_loses_kinetic_energy_through_the_friction_wall() {
    let mut cfg = ProblemConfig::default();
    cfg.discretization.nx = 6;
    cfg.discretization.ny = 6;
    cfg.discretization.t_end = 0.1;
    cfg.physics.korteweg = 0.0;
    let sim = Simulation::new(cfg).unwrap();
    let out = sim.run().unwrap();
    let mut prev = state_record(&sim, &out.initial).unwrap();
    assert!(prev.kinetic > 0.0);
    for r in out.records() {
        assert!(r.friction_power >= 0.0);
        assert!(r.kinetic <= prev.kinetic, "t = {}", r.t);
        assert!(r.total <= prev.total);
        prev = r;
    }
}

#[test]
fn zero_data_stays_zero() {
    let mut cfg = still_config(3);
    cfg.physics.initial_concentration = ConcentrationPreset::Zero;
    cfg.discretization.t_end = 0.03;
    let sim = Simulation::new(cfg).unwrap();
    let out = sim.run().unwrap();
    let State { u, p, c, .. } = &out.final_state;
    assert!(u.iter().chain(p).chain(c).all(|&v| v == 0.0));
    assert_eq!(out.reports.len(), 3);
}

#[test]
fn initial_cosine_projection_converges_at_third_order() {
    let errors: Vec<f64> = [8, 16, 32]
        .iter()
        .map(|&n| {
            let sim = Simulation::new(still_config(n)).unwrap();
            let s = sim.project_initial().unwrap();
            scalar_l2_error(sim.spaces(), &s.c, &|x, y| (PI * x).cos() * (PI * y).cos())
        })
        .collect();
    for w in errors.windows(2) {
        assert!((w[0] / w[1]).log2() > 2.85, "{errors:?}");
    }
}
