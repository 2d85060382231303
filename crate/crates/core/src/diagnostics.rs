//! Energy monitors per step and per trajectory, the continuous-dependence
//! experiment and a discrete Korn witness.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::forms::{velocity_h1_gram, FormsCache};
use crate::friction::{slip_grid, verify_hypotheses, FrictionTrace};
use crate::linalg::{dot, SparseLu};
use crate::spaces::{apply_constraints, DiscreteSpaces};
use crate::stepper::{ConcentrationForcing, ProblemConfig, Simulation, State};
use crate::{Error, Result};

#[derive(Clone, Debug, Default, PartialEq)]
pub struct EnergyRecord {
    pub t: f64,
    /// `1/2 ||u||^2`.
    pub kinetic: f64,
    /// `||grad C||^2`.
    pub grad_c_sq: f64,
    /// `1/2 ||u||^2 + k/2 ||grad C||^2`.
    pub total: f64,
    /// `a0(u, u)`.
    pub viscous_dissipation: f64,
    /// `d ||grad C||^2`.
    pub diffusive_dissipation: f64,
    /// `int_{Gamma1} Dj_m(u_tau) u_tau`.
    pub friction_power: f64,
    /// Discrete concentration energy balance; nonpositive up to round-off.
    pub est1_residual: f64,
    /// Magnitude of the terms entering `est1_residual`.
    pub est1_scale: f64,
    /// `||u||^2 + ||grad C||^2`.
    pub est9_monitor: f64,
    pub fp_iters: usize,
}

fn check_lengths(sim: &Simulation, s: &State) -> Result<()> {
    let sp = sim.spaces();
    if s.u.len() != sp.n_velocity() || s.c.len() != sp.n_scalar() || s.p.len() != sp.n_pressure() {
        return Err(Error::InvalidArgument(format!(
            "state sizes ({}, {}, {}) do not match the spaces ({}, {}, {})",
            s.u.len(),
            s.p.len(),
            s.c.len(),
            sp.n_velocity(),
            sp.n_pressure(),
            sp.n_scalar()
        )));
    }
    Ok(())
}

/// Energies of a single state; the step-dependent fields are zero.
pub fn state_record(sim: &Simulation, state: &State) -> Result<EnergyRecord> {
    check_lengths(sim, state)?;
    let f = sim.forms();
    let k = sim.config().physics.korteweg;
    let u_sq = f.mass_u.quadratic(&state.u);
    let grad_c_sq = f.stiffness_c.quadratic(&state.c);
    let trace = FrictionTrace::evaluate(sim.slip_boundary(), sim.mollified_law(), &state.u)?;
    Ok(EnergyRecord {
        t: state.t,
        kinetic: 0.5 * u_sq,
        grad_c_sq,
        total: 0.5 * u_sq + 0.5 * k * grad_c_sq,
        viscous_dissipation: f.a0.quadratic(&state.u),
        diffusive_dissipation: f.diffusivity * grad_c_sq,
        friction_power: trace.power(sim.slip_boundary()),
        est1_residual: 0.0,
        est1_scale: 0.0,
        est9_monitor: u_sq + grad_c_sq,
        fp_iters: 0,
    })
}

/// Record of the step `old -> new`, including the discrete concentration
/// energy balance
/// `r1 = (|C_new|^2 - |C_old|^2) / (2 dt) + d |grad C_new|^2 - (g C_new, C_new) - (s, C_new)`.
pub fn step_energy_residuals(
    sim: &Simulation,
    old: &State,
    new: &State,
    dt: f64,
    fp_iters: usize,
) -> Result<EnergyRecord> {
    check_lengths(sim, old)?;
    let mut rec = state_record(sim, new)?;
    let f = sim.forms();
    let c_new_sq = f.mass_c.quadratic(&new.c);
    let c_old_sq = f.mass_c.quadratic(&old.c);
    let reaction = f.reaction.quadratic(&new.c);
    let forcing = sim
        .concentration_load(new.t)
        .map_or(0.0, |load| dot(&load, &new.c));
    let rate = 0.5 * (c_new_sq - c_old_sq) / dt;
    rec.est1_residual = rate + rec.diffusive_dissipation - reaction - forcing;
    rec.est1_scale = 0.5 * (c_new_sq + c_old_sq) / dt
        + rec.diffusive_dissipation
        + reaction.abs()
        + forcing.abs();
    rec.fp_iters = fp_iters;
    Ok(rec)
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrajectorySummary {
    pub steps: usize,
    /// Fitted envelope `total(t) <= (total(0) + c1 t) exp(c2 t)`.
    pub c1: f64,
    pub c2: f64,
    pub envelope_holds: bool,
    /// Steps (1-based) where the total energy grew although nothing feeds it.
    pub flagged_steps: Vec<usize>,
    /// `max est1_residual / est1_scale`.
    pub max_est1_ratio: f64,
    pub max_kinetic: f64,
    pub max_grad_c_sq: f64,
    pub min_friction_power: f64,
}

/// True when no force, reaction or concentration forcing is configured.
pub fn sources_vanish(config: &ProblemConfig) -> bool {
    config.has_zero_force()
        && config.source_bound() == 0.0
        && config.physics.concentration_forcing == ConcentrationForcing::None
}

pub fn trajectory_monitors(
    initial: &EnergyRecord,
    records: &[EnergyRecord],
    config: &ProblemConfig,
) -> TrajectorySummary {
    let e0 = initial.total;
    let mut c2: f64 = 0.0;
    let mut prev = initial;
    for r in records {
        let dt = r.t - prev.t;
        if prev.total > 0.0 && r.total > prev.total && dt > 0.0 {
            c2 = c2.max((r.total / prev.total).ln() / dt);
        }
        prev = r;
    }
    let mut c1: f64 = 0.0;
    for r in records {
        if r.t > 0.0 {
            c1 = c1.max((r.total * (-c2 * r.t).exp() - e0) / r.t);
        }
    }
    let envelope_holds = records
        .iter()
        .all(|r| r.total <= (e0 + c1 * r.t) * (c2 * r.t).exp() * (1.0 + 1e-12) + 1e-300);

    let quiet = sources_vanish(config);
    let mut flagged_steps = Vec::new();
    let mut prev_total = e0;
    for (i, r) in records.iter().enumerate() {
        if quiet && r.total > prev_total * (1.0 + 1e-12) + 1e-300 {
            flagged_steps.push(i + 1);
        }
        prev_total = r.total;
    }

    let fold = |f: fn(&EnergyRecord) -> f64, init: f64, op: fn(f64, f64) -> f64| {
        records.iter().map(f).fold(init, op)
    };
    TrajectorySummary {
        steps: records.len(),
        c1,
        c2,
        envelope_holds,
        flagged_steps,
        max_est1_ratio: records
            .iter()
            .map(|r| if r.est1_scale > 0.0 { r.est1_residual / r.est1_scale } else { r.est1_residual })
            .fold(f64::NEG_INFINITY, f64::max),
        max_kinetic: fold(|r| r.kinetic, initial.kinetic, f64::max),
        max_grad_c_sq: fold(|r| r.grad_c_sq, initial.grad_c_sq, f64::max),
        min_friction_power: fold(|r| r.friction_power, initial.friction_power, f64::min),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StabilityReport {
    pub delta0: f64,
    /// `sup_t ||u1 - u2||^2 + k ||grad(C1 - C2)||^2`.
    pub sup_difference: f64,
    /// `sup_difference / delta0^2`; `None` for `delta0 = 0`.
    pub amplification: Option<f64>,
    pub steps: usize,
}

/// Squared difference measure between two states of one simulation.
pub fn state_difference(sim: &Simulation, a: &State, b: &State) -> f64 {
    let f = sim.forms();
    let du: Vec<f64> = a.u.iter().zip(&b.u).map(|(x, y)| x - y).collect();
    let dc: Vec<f64> = a.c.iter().zip(&b.c).map(|(x, y)| x - y).collect();
    f.mass_u.quadratic(&du) + sim.config().physics.korteweg * f.stiffness_c.quadratic(&dc)
}

/// Runs the configuration twice, the second time with the initial velocity
/// perturbed by `delta0` in a fixed solenoidal direction, and reports the
/// largest squared difference over the run.
pub fn stability_study(config: &ProblemConfig, delta0: f64) -> Result<StabilityReport> {
    if !(delta0 >= 0.0 && delta0.is_finite()) {
        return Err(Error::InvalidArgument(format!("perturbation must be nonnegative, got {delta0}")));
    }
    let law = config.friction.law()?;
    verify_hypotheses(&law, &slip_grid(10.0, 10_001))
        .ensure()
        .map_err(|e| match e {
            Error::Hypothesis { condition, message } => Error::Hypothesis {
                condition,
                message: format!("{message}; uniqueness and continuous dependence are not guaranteed"),
            },
            other => other,
        })?;
    let base = Simulation::new(config.clone())?;
    let pert = base.clone().with_initial_perturbation(delta0);
    let mut s1 = base.project_initial()?;
    let mut s2 = pert.project_initial()?;
    let mut sup = state_difference(&base, &s1, &s2);
    let d = &config.discretization;
    let n = base.step_count();
    for i in 0..n {
        let t_next = if i + 1 == n { d.t_end } else { (i + 1) as f64 * d.dt };
        let dt = t_next - s1.t;
        s1 = base.step(&s1, dt)?.0;
        s2 = pert.step(&s2, dt)?.0;
        sup = sup.max(state_difference(&base, &s1, &s2));
    }
    Ok(StabilityReport {
        delta0,
        sup_difference: sup,
        amplification: (delta0 > 0.0).then(|| sup / (delta0 * delta0)),
        steps: n,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct KornEstimate {
    /// Smallest eigenvalue of `A0 x = lambda G x` on the constrained space,
    /// `G` the H1 Gram matrix.
    pub min_eigenvalue: f64,
    pub iterations: usize,
}

/// Inverse iteration for the discrete Korn constant.
pub fn korn_eigenvalue(spaces: &DiscreteSpaces, forms: &FormsCache) -> Result<KornEstimate> {
    let cons = spaces.velocity_constraints();
    let zeros = vec![0.0; spaces.n_velocity()];
    let a = apply_constraints(&forms.a0, &zeros, cons)?.matrix;
    let g = apply_constraints(&velocity_h1_gram(spaces), &zeros, cons)?.matrix;
    let n = a.nrows;
    if n == 0 {
        return Err(Error::InvalidArgument("no free velocity dofs".into()));
    }
    let lu = SparseLu::factor(&a)?;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut x: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let mut lambda = f64::INFINITY;
    for it in 1..=1000 {
        let y = lu.solve(&g.matvec(&x), 1e-10)?.0;
        let gy = g.quadratic(&y);
        let next = a.quadratic(&y) / gy;
        let s = 1.0 / gy.sqrt();
        x = y.iter().map(|v| v * s).collect();
        if (next - lambda).abs() <= 1e-10 * next.abs() {
            return Ok(KornEstimate {
                min_eigenvalue: next,
                iterations: it,
            });
        }
        lambda = next;
    }
    Ok(KornEstimate {
        min_eigenvalue: lambda,
        iterations: 1000,
    })
}

/// `min a0(u, u) / ||u||_{H1}^2` over random constrained coefficient vectors.
pub fn coercivity_witness(spaces: &DiscreteSpaces, forms: &FormsCache, samples: usize, seed: u64) -> f64 {
    let gram = velocity_h1_gram(spaces);
    let cons = spaces.velocity_constraints();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = f64::INFINITY;
    for _ in 0..samples {
        let u: Vec<f64> = (0..spaces.n_velocity())
            .map(|i| if cons.contains(i) { 0.0 } else { rng.random_range(-1.0..1.0) })
            .collect();
        best = best.min(forms.a0.quadratic(&u) / gram.quadratic(&u));
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stepper::{ConcentrationPreset, VelocityPreset};

    fn zero_config() -> ProblemConfig {
        let mut c = ProblemConfig::default();
        c.discretization.nx = 4;
        c.discretization.ny = 4;
        c.discretization.dt = 0.05;
        c.discretization.t_end = 0.15;
        c.physics.initial_velocity = VelocityPreset::Zero;
        c.physics.initial_concentration = ConcentrationPreset::Zero;
        c
    }

    #[test]
    fn zero_run_gives_zero_records_and_trivial_envelope() {
        let cfg = zero_config();
        let sim = Simulation::new(cfg.clone()).unwrap();
        let out = sim.run().unwrap();
        let initial = state_record(&sim, &out.initial).unwrap();
        let records = out.records();
        for r in &records {
            assert_eq!(r.total, 0.0);
            assert_eq!(r.est1_residual, 0.0);
            assert_eq!(r.friction_power, 0.0);
        }
        let s = trajectory_monitors(&initial, &records, &cfg);
        assert_eq!((s.c1, s.c2), (0.0, 0.0));
        assert!(s.envelope_holds && s.flagged_steps.is_empty());
    }

    #[test]
    fn zero_perturbation_has_no_amplification() {
        let mut cfg = zero_config();
        cfg.physics.initial_velocity = VelocityPreset::Vortex { amplitude: 0.5 };
        let r = stability_study(&cfg, 0.0).unwrap();
        assert_eq!(r.sup_difference, 0.0);
        assert_eq!(r.amplification, None);
    }

    #[test]
    fn stability_refuses_law_without_monotonicity_constant() {
        let mut cfg = zero_config();
        cfg.friction.m1 = Some(0.1);
        assert!(matches!(stability_study(&cfg, 1e-2), Err(Error::Hypothesis { .. })));
    }

    #[test]
    fn mismatched_state_is_rejected() {
        let sim = Simulation::new(zero_config()).unwrap();
        let bad = State {
            t: 0.0,
            u: vec![0.0; 3],
            p: vec![],
            c: vec![],
        };
        assert!(state_record(&sim, &bad).is_err());
    }
}
