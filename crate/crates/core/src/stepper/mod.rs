//! Implicit Euler time stepping of the coupled velocity/pressure and
//! concentration system.
//!
//! Each step first solves the momentum saddle system with the concentration
//! of the previous step (lagged convection, friction by linearized fixed
//! point on the slip trace), then the concentration equation with the new
//! velocity.

pub mod config;
pub mod manufactured;

use std::time::{Duration, Instant};

pub use config::{
    ConcentrationForcing, ConcentrationPreset, DiscretizationConfig, DomainConfig, ForcePreset,
    FrictionConfig, OutputConfig, PhysicsConfig, ProblemConfig, SourcePreset, VelocityPreset,
};

use crate::diagnostics::{step_energy_residuals, EnergyRecord};
use crate::forms::{
    assemble_constant_forms, assemble_convection, assemble_korteweg_load, assemble_scalar_load,
    assemble_velocity_load, velocity_l2_error, FormCoefficients, FormsCache,
};
use crate::friction::{MollifiedLaw, SlipBoundary};
use crate::geometry::build_rect_mesh;
use crate::linalg::{norm2, CsrMatrix, SparseLu, TripletBuilder};
use crate::spaces::{apply_constraints, build_spaces, ConstraintSet, DiscreteSpaces};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct State {
    pub t: f64,
    pub u: Vec<f64>,
    /// Pressure with dof 0 pinned to zero.
    pub p: Vec<f64>,
    pub c: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct VelocityUpdate {
    pub u: Vec<f64>,
    pub p: Vec<f64>,
    /// Linear solves spent on the friction fixed point (1 without a slip
    /// boundary).
    pub iterations: usize,
    pub residual: f64,
}

#[derive(Clone, Debug)]
pub struct StepReport {
    pub t: f64,
    pub dt: f64,
    pub fp_iters: usize,
    pub velocity_residual: f64,
    pub concentration_residual: f64,
    /// The step was redone as two half steps after the fixed point stalled.
    pub halved: bool,
    pub wall_time: Duration,
    pub record: EnergyRecord,
}

#[derive(Clone, Debug)]
pub struct RunOutput {
    pub initial: State,
    pub final_state: State,
    pub reports: Vec<StepReport>,
}

impl RunOutput {
    pub fn records(&self) -> Vec<EnergyRecord> {
        self.reports.iter().map(|r| r.record.clone()).collect()
    }
}

#[derive(Clone, Debug)]
pub struct Simulation {
    config: ProblemConfig,
    spaces: DiscreteSpaces,
    forms: FormsCache,
    mlaw: MollifiedLaw,
    boundary: SlipBoundary,
    saddle_constraints: ConstraintSet,
    perturbation: f64,
    perturbation_norm: f64,
}

impl Simulation {
    pub fn new(config: ProblemConfig) -> Result<Self> {
        config.validate()?;
        let d = &config.discretization;
        let mesh = build_rect_mesh(d.nx, d.ny, config.domain.lx, config.domain.ly, config.domain.partition())?;
        let spaces = build_spaces(mesh)?;
        let coeffs = FormCoefficients {
            viscosity: config.physics.viscosity,
            diffusivity: config.physics.diffusivity,
        };
        let forms = assemble_constant_forms(&spaces, coeffs, &|x, y| config.source(x, y))?;
        let mlaw = config.friction.mollified()?;
        let boundary = SlipBoundary::new(&spaces);
        let saddle_constraints = spaces.saddle_constraints();
        let (lx, ly) = (config.domain.lx, config.domain.ly);
        let zero = vec![0.0; spaces.n_velocity()];
        let perturbation_norm =
            velocity_l2_error(&spaces, &zero, &|x, y| config::vortex(x, y, lx, ly));
        Ok(Simulation {
            config,
            spaces,
            forms,
            mlaw,
            boundary,
            saddle_constraints,
            perturbation: 0.0,
            perturbation_norm,
        })
    }

    /// Adds `delta * w` to the initial velocity, `w` the vortex cell scaled
    /// to unit L2 norm.
    pub fn with_initial_perturbation(mut self, delta: f64) -> Self {
        self.perturbation = delta;
        self
    }

    pub fn config(&self) -> &ProblemConfig {
        &self.config
    }

    pub fn spaces(&self) -> &DiscreteSpaces {
        &self.spaces
    }

    pub fn forms(&self) -> &FormsCache {
        &self.forms
    }

    pub fn mollified_law(&self) -> &MollifiedLaw {
        &self.mlaw
    }

    pub fn slip_boundary(&self) -> &SlipBoundary {
        &self.boundary
    }

    fn linear_tol(&self) -> f64 {
        self.config.discretization.linear_tol
    }

    /// Number of steps needed to reach the horizon.
    pub fn step_count(&self) -> usize {
        let d = &self.config.discretization;
        (d.t_end / d.dt - 1e-9).ceil().max(1.0) as usize
    }

    fn saddle_matrix(&self, velocity_block: &CsrMatrix) -> CsrMatrix {
        let nu = self.spaces.n_velocity();
        let n = self.spaces.n_saddle();
        let b = &self.forms.b_div;
        let mut out = TripletBuilder::with_capacity(n, n, velocity_block.nnz() + 2 * b.nnz());
        out.push_matrix(velocity_block, 0, 0, 1.0);
        out.push_matrix(b, nu, 0, 1.0);
        out.push_transpose(b, 0, nu, 1.0);
        out.build()
    }

    /// Solves `[K B^T; B 0] [u; p] = [rhs; 0]` under the essential constraints.
    fn solve_saddle(&self, velocity_block: &CsrMatrix, rhs_u: &[f64]) -> Result<(Vec<f64>, Vec<f64>, f64)> {
        let nu = self.spaces.n_velocity();
        let mut rhs = rhs_u.to_vec();
        rhs.resize(self.spaces.n_saddle(), 0.0);
        let system = apply_constraints(&self.saddle_matrix(velocity_block), &rhs, &self.saddle_constraints)?;
        let lu = SparseLu::factor(&system.matrix)?;
        let (x, residual) = lu.solve(&system.rhs, self.linear_tol())?;
        let mut full = system.extend(&x);
        let p = full.split_off(nu);
        Ok((full, p, residual))
    }

    /// Saddle-point L2 projection of an analytic velocity onto the
    /// constrained, weakly divergence-free space.
    pub fn project_velocity(&self, field: &dyn Fn(f64, f64) -> [f64; 2]) -> Result<Vec<f64>> {
        let load = assemble_velocity_load(&self.spaces, field);
        if norm2(&load) == 0.0 {
            return Ok(vec![0.0; self.spaces.n_velocity()]);
        }
        Ok(self.solve_saddle(&self.forms.mass_u, &load)?.0)
    }

    pub fn project_scalar(&self, field: &dyn Fn(f64, f64) -> f64) -> Result<Vec<f64>> {
        let load = assemble_scalar_load(&self.spaces, field);
        let lu = SparseLu::factor(&self.forms.mass_c)?;
        Ok(lu.solve(&load, self.linear_tol())?.0)
    }

    pub fn project_initial(&self) -> Result<State> {
        let cfg = &self.config;
        let (lx, ly) = (cfg.domain.lx, cfg.domain.ly);
        let scale = if self.perturbation == 0.0 {
            0.0
        } else {
            self.perturbation / self.perturbation_norm
        };
        let u = self.project_velocity(&|x, y| {
            let a = cfg.initial_velocity(x, y);
            let w = config::vortex(x, y, lx, ly);
            [a[0] + scale * w[0], a[1] + scale * w[1]]
        })?;
        let c = self.project_scalar(&|x, y| cfg.initial_concentration(x, y))?;
        Ok(State {
            t: 0.0,
            u,
            p: vec![0.0; self.spaces.n_pressure()],
            c,
        })
    }

    /// One momentum step from `state` to `state.t + dt` using `c_used` in the
    /// Korteweg load.
    pub fn velocity_step(&self, state: &State, c_used: &[f64], dt: f64) -> Result<VelocityUpdate> {
        let cfg = &self.config;
        let nu = self.spaces.n_velocity();
        let t_new = state.t + dt;

        let mut base = TripletBuilder::with_capacity(nu, nu, 3 * self.forms.a0.nnz());
        base.push_matrix(&self.forms.mass_u, 0, 0, 1.0 / dt);
        base.push_matrix(&self.forms.a0, 0, 0, 1.0);
        if cfg.physics.convection {
            let conv = assemble_convection(&self.spaces, &state.u);
            base.push_matrix(&conv.velocity, 0, 0, 1.0);
        }

        let mut rhs = self.forms.mass_u.matvec(&state.u);
        rhs.iter_mut().for_each(|v| *v /= dt);
        let kort = assemble_korteweg_load(&self.spaces, c_used, cfg.physics.korteweg);
        let force = assemble_velocity_load(&self.spaces, &|x, y| cfg.force(x, y, t_new));
        for ((r, k), f) in rhs.iter_mut().zip(&kort).zip(&force) {
            *r += k + f;
        }

        if self.boundary.is_empty() {
            let (u, p, residual) = self.solve_saddle(&base.build(), &rhs)?;
            return Ok(VelocityUpdate {
                u,
                p,
                iterations: 1,
                residual,
            });
        }

        // linearized fixed point on the slip: the traction Dj_m(s) is
        // replaced by Dj_m(s_k) + Dj_m'(s_k)(s - s_k); each update is damped
        // until the nonlinear residual of the saddle system decreases
        let d = &cfg.discretization;
        let base = base.build();
        let merit = SaddleResidual::new(self, &base, &rhs);
        let mut current = state.u.clone();
        let mut pressure = state.p.clone();
        let mut slip = self.boundary.slip(&current);
        let mut res_norm = merit.norm(&current, &pressure, &slip)?;
        for it in 1..=d.max_fixed_point_iters {
            let mut beta = Vec::with_capacity(slip.len());
            let mut shift = Vec::with_capacity(slip.len());
            for &s in &slip {
                let b = self.mlaw.grad_slope(s)?;
                beta.push(b);
                shift.push(b * s - self.mlaw.grad(s)?);
            }
            let mut block = TripletBuilder::with_capacity(nu, nu, base.nnz() + 4 * slip.len());
            block.push_matrix(&base, 0, 0, 1.0);
            self.boundary.push_tangential_mass(&mut block, &beta);
            let extra = self.boundary.load(&shift);
            let rhs_it: Vec<f64> = rhs.iter().zip(&extra).map(|(a, b)| a + b).collect();
            let (u_n, p_n, residual) = self.solve_saddle(&block.build(), &rhs_it)?;

            let slip_n = self.boundary.slip(&u_n);
            let diff: Vec<f64> = slip_n.iter().zip(&slip).map(|(a, b)| a - b).collect();
            let change = self.boundary.l2_norm(&diff);
            if !change.is_finite() {
                break;
            }
            if change <= d.fixed_point_tol * self.boundary.l2_norm(&slip_n).max(1.0) {
                return Ok(VelocityUpdate {
                    u: u_n,
                    p: p_n,
                    iterations: it,
                    residual,
                });
            }

            let mut lambda = 1.0;
            loop {
                let u = blend(&current, &u_n, lambda);
                let p = blend(&pressure, &p_n, lambda);
                let s = self.boundary.slip(&u);
                let r = merit.norm(&u, &p, &s)?;
                if r <= (1.0 - 1e-4 * lambda) * res_norm || lambda <= MIN_DAMPING {
                    (current, pressure, slip, res_norm) = (u, p, s, r);
                    break;
                }
                lambda *= 0.5;
            }
        }
        Err(Error::FixedPoint {
            t: t_new,
            message: format!(
                "slip update still above {:.1e} after {} iterations",
                d.fixed_point_tol, d.max_fixed_point_iters
            ),
        })
    }

    /// Concentration load `(s(t), eta)` of the configured forcing, if any.
    pub fn concentration_load(&self, t: f64) -> Option<Vec<f64>> {
        match self.config.physics.concentration_forcing {
            ConcentrationForcing::None => None,
            ConcentrationForcing::Manufactured => Some(assemble_scalar_load(&self.spaces, &|x, y| {
                self.config.concentration_source(x, y, t)
            })),
        }
    }

    /// Implicit concentration step `[Mc/dt + B0 + B1(u) - G] C = Mc C_old / dt + s`.
    pub fn concentration_step(&self, c_old: &[f64], u_new: &[f64], t_new: f64, dt: f64) -> Result<(Vec<f64>, f64)> {
        let nc = self.spaces.n_scalar();
        let f = &self.forms;
        let mut m = TripletBuilder::with_capacity(nc, nc, 4 * f.mass_c.nnz());
        m.push_matrix(&f.mass_c, 0, 0, 1.0 / dt);
        m.push_matrix(&f.b0, 0, 0, 1.0);
        m.push_matrix(&f.reaction, 0, 0, -1.0);
        if self.config.physics.convection {
            m.push_matrix(&assemble_convection(&self.spaces, u_new).scalar, 0, 0, 1.0);
        }
        let mut rhs = f.mass_c.matvec(c_old);
        rhs.iter_mut().for_each(|v| *v /= dt);
        if let Some(load) = self.concentration_load(t_new) {
            rhs.iter_mut().zip(&load).for_each(|(r, l)| *r += l);
        }
        let lu = SparseLu::factor(&m.build())?;
        lu.solve(&rhs, self.linear_tol())
    }

    fn try_step(&self, state: &State, dt: f64) -> Result<(State, usize, f64, f64)> {
        let vel = self.velocity_step(state, &state.c, dt)?;
        let t_new = state.t + dt;
        let (c, c_res) = self.concentration_step(&state.c, &vel.u, t_new, dt)?;
        let next = State {
            t: t_new,
            u: vel.u,
            p: vel.p,
            c,
        };
        Ok((next, vel.iterations, vel.residual, c_res))
    }

    /// Advances by `dt`; a stalled friction fixed point is retried once as
    /// two half steps.
    pub fn step(&self, state: &State, dt: f64) -> Result<(State, StepReport)> {
        let start = Instant::now();
        let (next, iters, v_res, c_res, halved) = match self.try_step(state, dt) {
            Ok((n, i, v, c)) => (n, i, v, c, false),
            Err(Error::FixedPoint { .. }) => {
                let half = 0.5 * dt;
                let retry = self
                    .try_step(state, half)
                    .and_then(|(mid, i1, v1, c1)| {
                        self.try_step(&mid, half)
                            .map(|(n, i2, v2, c2)| (n, i1 + i2, v1.max(v2), c1.max(c2)))
                    });
                match retry {
                    Ok((n, i, v, c)) => (n, i, v, c, true),
                    Err(Error::FixedPoint { t, message }) => {
                        return Err(Error::FixedPoint {
                            t,
                            message: format!("{message} (also with dt/2 = {half})"),
                        })
                    }
                    Err(e) => return Err(e),
                }
            }
            Err(e) => return Err(e),
        };
        let record = step_energy_residuals(self, state, &next, dt, iters)?;
        let report = StepReport {
            t: next.t,
            dt,
            fp_iters: iters,
            velocity_residual: v_res,
            concentration_residual: c_res,
            halved,
            wall_time: start.elapsed(),
            record,
        };
        Ok((next, report))
    }

    /// Runs to the horizon, calling `observer` with the step index and the
    /// state after the initial projection (index 0) and after every step.
    pub fn run_with(&self, mut observer: impl FnMut(usize, &State) -> Result<()>) -> Result<RunOutput> {
        let initial = self.project_initial()?;
        observer(0, &initial)?;
        let d = &self.config.discretization;
        let n = self.step_count();
        let mut state = initial.clone();
        let mut reports = Vec::with_capacity(n);
        for i in 0..n {
            let t_next = if i + 1 == n { d.t_end } else { (i + 1) as f64 * d.dt };
            let dt = t_next - state.t;
            let (next, report) = self.step(&state, dt)?;
            state = next;
            reports.push(report);
            observer(i + 1, &state)?;
        }
        Ok(RunOutput {
            initial,
            final_state: state,
            reports,
        })
    }

    pub fn run(&self) -> Result<RunOutput> {
        self.run_with(|_, _| Ok(()))
    }
}

const MIN_DAMPING: f64 = 1.0 / 1024.0;

fn blend(a: &[f64], b: &[f64], lambda: f64) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + lambda * (y - x)).collect()
}

/// Euclidean norm of the nonlinear momentum and continuity residual over the
/// unconstrained rows.
struct SaddleResidual<'a> {
    sim: &'a Simulation,
    matrix: CsrMatrix,
    rhs: &'a [f64],
    free: Vec<bool>,
}

impl<'a> SaddleResidual<'a> {
    fn new(sim: &'a Simulation, velocity_block: &CsrMatrix, rhs: &'a [f64]) -> Self {
        let mut free = vec![true; sim.spaces.n_saddle()];
        for &i in sim.saddle_constraints.dofs() {
            free[i] = false;
        }
        SaddleResidual {
            sim,
            matrix: sim.saddle_matrix(velocity_block),
            rhs,
            free,
        }
    }

    fn norm(&self, u: &[f64], p: &[f64], slip: &[f64]) -> Result<f64> {
        let traction = slip.iter().map(|&s| self.sim.mlaw.grad(s)).collect::<Result<Vec<_>>>()?;
        let friction = self.sim.boundary.load(&traction);
        let mut x = u.to_vec();
        x.extend_from_slice(p);
        let ax = self.matrix.matvec(&x);
        let mut sum = 0.0;
        for (i, v) in ax.iter().enumerate() {
            if !self.free[i] {
                continue;
            }
            let r = match i < u.len() {
                true => v + friction[i] - self.rhs[i],
                false => *v,
            };
            sum += r * r;
        }
        Ok(sum.sqrt())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::SideCondition;

    fn rest_config() -> ProblemConfig {
        let mut c = ProblemConfig::default();
        c.discretization.nx = 4;
        c.discretization.ny = 4;
        c.discretization.dt = 0.05;
        c.discretization.t_end = 0.1;
        c.physics.initial_velocity = VelocityPreset::Zero;
        c.physics.initial_concentration = ConcentrationPreset::Constant { value: 0.3 };
        c
    }

    #[test]
    fn rest_state_is_a_fixed_point() {
        let sim = Simulation::new(rest_config()).unwrap();
        let out = sim.run().unwrap();
        assert_eq!(out.reports.len(), 2);
        assert!(out.final_state.u.iter().all(|&v| v.abs() < 1e-14));
        assert!(out.final_state.p.iter().all(|&v| v.abs() < 1e-12));
        for c in &out.final_state.c {
            assert!((c - 0.3).abs() < 1e-12);
        }
    }

    #[test]
    fn single_step_when_horizon_equals_dt() {
        let mut c = rest_config();
        c.discretization.t_end = c.discretization.dt;
        assert_eq!(Simulation::new(c).unwrap().step_count(), 1);
    }

    #[test]
    fn projection_reproduces_discrete_solenoidal_field() {
        let mut c = rest_config();
        c.domain.lx = 2.0;
        c.domain.left = SideCondition::Periodic;
        c.domain.right = SideCondition::Periodic;
        let sim = Simulation::new(c).unwrap();
        let field = |_x: f64, y: f64| [1.0 - y * y, 0.0];
        let u = sim.project_velocity(&field).unwrap();
        let exact = sim.spaces().interpolate_vector(field);
        let err = u.iter().zip(&exact).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-10, "{err}");
    }

    #[test]
    fn constant_source_grows_by_scalar_factor() {
        let mut c = rest_config();
        c.physics.source = SourcePreset::Constant { value: 2.0 };
        let sim = Simulation::new(c).unwrap();
        let (c_new, _) = sim
            .concentration_step(&vec![1.0; sim.spaces().n_scalar()], &vec![0.0; sim.spaces().n_velocity()], 0.05, 0.05)
            .unwrap();
        for v in c_new {
            assert!((v - 1.0 / (1.0 - 0.05 * 2.0)).abs() < 1e-12);
        }
    }
}
