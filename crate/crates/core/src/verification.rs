//! Independent oracles: the steady Couette channel with wall friction,
//! manufactured-solution convergence, quadrature cross-checks, the Korteweg
//! divergence identity and mesh-to-mesh (Galerkin) differences.

use crate::forms::{
    local_divergence, local_korteweg, local_scalar_mass, local_skew_convection, local_stiffness,
    local_velocity_mass, local_viscous, velocity_local_dofs, velocity_l2_error, scalar_l2_error,
    FormsCache, BILINEAR_DEGREE, LOAD_DEGREE, TRILINEAR_DEGREE,
};
use crate::friction::MollifiedLaw;
use crate::geometry::SideCondition;
use crate::quadrature::{LineRule, TriangleRule};
use crate::spaces::DiscreteSpaces;
use crate::stepper::{
    manufactured, ConcentrationForcing, ConcentrationPreset, ForcePreset, ProblemConfig,
    Simulation, SourcePreset, VelocityPreset,
};
use crate::{Error, Result};

/// Steady shear flow `u = (U(y), 0)` in `0 < y < H` driven by a uniform
/// force `f0`, no slip at `y = H` and the mollified friction law at `y = 0`.
///
/// With `U'' = -f0 / nu0` and `U(H) = 0`, the wall balance
/// `nu0 U'(0) = Dj_m(U(0))` reduces to the scalar equation
/// `R(s) = f0 H / 2 - nu0 s / H - Dj_m(s) = 0` for the slip `s = U(0)`.
#[derive(Clone, Debug, PartialEq)]
pub struct CouetteOracle {
    pub height: f64,
    pub force: f64,
    pub viscosity: f64,
    /// All slip velocities solving the wall balance, increasing.
    pub roots: Vec<f64>,
    /// The smallest root.
    pub slip: f64,
    /// `|R(slip)|`.
    pub residual: f64,
}

impl CouetteOracle {
    pub fn profile(&self, y: f64) -> f64 {
        let (h, f0, nu) = (self.height, self.force, self.viscosity);
        let a = (f0 * h * h / (2.0 * nu) - self.slip) / h;
        self.slip + a * y - f0 * y * y / (2.0 * nu)
    }

    /// Slip of the frictionless channel, `f0 H^2 / (2 nu0)`.
    pub fn free_slip(&self) -> f64 {
        self.force * self.height * self.height / (2.0 * self.viscosity)
    }
}

const COUETTE_SCAN: usize = 4000;

pub fn couette_oracle(height: f64, force: f64, viscosity: f64, mlaw: &MollifiedLaw) -> Result<CouetteOracle> {
    if !(height > 0.0 && viscosity > 0.0 && force >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "Couette oracle needs H > 0, nu0 > 0, f0 >= 0; got {height}, {viscosity}, {force}"
        )));
    }
    let balance = |s: f64| -> Result<f64> {
        Ok(0.5 * force * height - viscosity * s / height - mlaw.grad(s)?)
    };
    // R > 0 for s <= 0 and R <= 0 beyond the free-slip value since Dj_m(s) s >= 0
    let hi = force * height * height / (2.0 * viscosity);
    let mut roots = Vec::new();
    if hi == 0.0 {
        roots.push(0.0);
    } else {
        let mut a = 0.0;
        let mut ra = balance(a)?;
        if ra == 0.0 {
            roots.push(a);
        }
        for i in 1..=COUETTE_SCAN {
            let b = hi * i as f64 / COUETTE_SCAN as f64;
            let rb = balance(b)?;
            if rb == 0.0 {
                roots.push(b);
            } else if ra * rb < 0.0 {
                roots.push(bisect(&balance, a, b, ra)?);
            }
            a = b;
            ra = rb;
        }
    }
    let slip = *roots
        .first()
        .ok_or_else(|| Error::Verification("Couette balance has no root in [0, free slip]".into()))?;
    Ok(CouetteOracle {
        height,
        force,
        viscosity,
        residual: balance(slip)?.abs(),
        roots,
        slip,
    })
}

fn bisect(f: &dyn Fn(f64) -> Result<f64>, mut a: f64, mut b: f64, mut fa: f64) -> Result<f64> {
    while b - a > 1e-12 {
        let m = 0.5 * (a + b);
        let fm = f(m)?;
        if fm == 0.0 {
            return Ok(m);
        }
        if fa * fm < 0.0 {
            b = m;
        } else {
            a = m;
            fa = fm;
        }
    }
    Ok(0.5 * (a + b))
}

/// Periodic channel `[0, 2H] x [0, H]`: friction at the bottom, no slip at
/// the top, uniform force along x, at rest initially.
pub fn couette_config(nx: usize, ny: usize, height: f64, force: f64, m_reg: u32) -> ProblemConfig {
    let mut c = ProblemConfig::default();
    c.domain.lx = 2.0 * height;
    c.domain.ly = height;
    c.domain.bottom = SideCondition::Gamma1;
    c.domain.top = SideCondition::Gamma0;
    c.domain.left = SideCondition::Periodic;
    c.domain.right = SideCondition::Periodic;
    c.physics.viscosity = 1.0;
    c.physics.korteweg = 0.0;
    c.physics.force = ForcePreset::Constant { value: [force, 0.0] };
    c.physics.initial_velocity = VelocityPreset::Zero;
    c.physics.initial_concentration = ConcentrationPreset::Constant { value: 0.0 };
    c.friction.m_reg = m_reg;
    c.discretization.nx = nx;
    c.discretization.ny = ny;
    c.discretization.dt = 2.0;
    c.discretization.t_end = 40.0;
    c
}

#[derive(Clone, Debug, PartialEq)]
pub struct CouetteComparison {
    pub oracle: CouetteOracle,
    /// Mean tangential velocity on the friction wall at the final time.
    pub measured_slip: f64,
    /// Change of the measured slip over the last step.
    pub last_change: f64,
    pub relative_error: f64,
}

/// Runs the channel to (near) steady state and compares the wall slip with
/// the oracle.
pub fn couette_comparison(config: &ProblemConfig) -> Result<CouetteComparison> {
    let force = match config.physics.force {
        ForcePreset::Constant { value } if value[1] == 0.0 => value[0],
        _ => {
            return Err(Error::InvalidArgument(
                "Couette comparison needs a constant force along x".into(),
            ))
        }
    };
    let sim = Simulation::new(config.clone())?;
    let boundary = sim.slip_boundary();
    if boundary.is_empty() {
        return Err(Error::InvalidArgument("Couette comparison needs a friction wall".into()));
    }
    let length = boundary.integrate(&vec![1.0; boundary.points().len()]);
    let mean_slip = |u: &[f64]| boundary.integrate(&boundary.slip(u)) / length;
    let mut history = Vec::new();
    sim.run_with(|_, s| {
        history.push(mean_slip(&s.u));
        Ok(())
    })?;
    let oracle = couette_oracle(config.domain.ly, force, config.physics.viscosity, sim.mollified_law())?;
    let measured = *history.last().expect("at least the initial state");
    let last_change = match history.len() {
        n if n >= 2 => (history[n - 1] - history[n - 2]).abs(),
        _ => f64::INFINITY,
    };
    Ok(CouetteComparison {
        relative_error: (measured - oracle.slip).abs() / oracle.slip.abs().max(f64::MIN_POSITIVE),
        measured_slip: measured,
        last_change,
        oracle,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct LevelErrors {
    pub nx: usize,
    pub h: f64,
    pub dt: f64,
    pub steps: usize,
    pub velocity_l2: f64,
    pub velocity_h1: f64,
    pub concentration_l2: f64,
    pub concentration_h1: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceTable {
    pub case: String,
    pub levels: Vec<LevelErrors>,
}

fn orders(values: &[f64], h: &[f64]) -> Vec<f64> {
    values
        .windows(2)
        .zip(h.windows(2))
        .map(|(e, h)| (e[0] / e[1]).ln() / (h[0] / h[1]).ln())
        .collect()
}

impl ConvergenceTable {
    fn hs(&self) -> Vec<f64> {
        self.levels.iter().map(|l| l.h).collect()
    }

    pub fn velocity_orders(&self) -> Vec<f64> {
        orders(&self.levels.iter().map(|l| l.velocity_l2).collect::<Vec<_>>(), &self.hs())
    }

    pub fn concentration_orders(&self) -> Vec<f64> {
        orders(&self.levels.iter().map(|l| l.concentration_l2).collect::<Vec<_>>(), &self.hs())
    }

    pub fn velocity_h1_orders(&self) -> Vec<f64> {
        orders(&self.levels.iter().map(|l| l.velocity_h1).collect::<Vec<_>>(), &self.hs())
    }

    pub fn concentration_h1_orders(&self) -> Vec<f64> {
        orders(&self.levels.iter().map(|l| l.concentration_h1).collect::<Vec<_>>(), &self.hs())
    }
}

pub const MANUFACTURED_CASES: [&str; 1] = ["manufactured"];

/// Parameters of the manufactured study: horizon, coarsest cell count and the
/// constant in `dt = c h^2`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ManufacturedSetup {
    pub t_end: f64,
    pub coarsest: usize,
    pub dt_factor: f64,
    pub viscosity: f64,
    pub diffusivity: f64,
    pub korteweg: f64,
}

impl Default for ManufacturedSetup {
    fn default() -> Self {
        ManufacturedSetup {
            t_end: 0.02,
            coarsest: 4,
            dt_factor: 0.25,
            viscosity: 1.0,
            diffusivity: 0.5,
            korteweg: 0.01,
        }
    }
}

impl ManufacturedSetup {
    pub fn config(&self, n: usize) -> ProblemConfig {
        let h = 1.0 / n as f64;
        let steps = (self.t_end / (self.dt_factor * h * h)).ceil().max(1.0);
        let mut c = ProblemConfig::default();
        c.domain.bottom = SideCondition::Gamma0;
        c.physics.viscosity = self.viscosity;
        c.physics.diffusivity = self.diffusivity;
        c.physics.korteweg = self.korteweg;
        c.physics.source = SourcePreset::Zero;
        c.physics.force = ForcePreset::Manufactured;
        c.physics.initial_velocity = VelocityPreset::Manufactured;
        c.physics.initial_concentration = ConcentrationPreset::Manufactured;
        c.physics.concentration_forcing = ConcentrationForcing::Manufactured;
        c.discretization.nx = n;
        c.discretization.ny = n;
        c.discretization.t_end = self.t_end;
        c.discretization.dt = self.t_end / steps;
        c
    }
}

pub fn manufactured_convergence(case: &str, levels: usize) -> Result<ConvergenceTable> {
    manufactured_convergence_with(case, levels, &ManufacturedSetup::default())
}

pub fn manufactured_convergence_with(case: &str, levels: usize, setup: &ManufacturedSetup) -> Result<ConvergenceTable> {
    if !MANUFACTURED_CASES.contains(&case) {
        return Err(Error::InvalidArgument(format!(
            "unknown case `{case}`; available: {}",
            MANUFACTURED_CASES.join(", ")
        )));
    }
    if levels < 3 {
        return Err(Error::InvalidArgument(format!("need at least 3 levels, got {levels}")));
    }
    let mut rows = Vec::with_capacity(levels);
    for l in 0..levels {
        let n = setup.coarsest << l;
        let cfg = setup.config(n);
        let sim = Simulation::new(cfg.clone())?;
        let out = sim.run()?;
        let s = &out.final_state;
        let sp = sim.spaces();
        let t = s.t;
        rows.push(LevelErrors {
            nx: n,
            h: 1.0 / n as f64,
            dt: cfg.discretization.dt,
            steps: out.reports.len(),
            velocity_l2: velocity_l2_error(sp, &s.u, &manufactured::velocity),
            velocity_h1: velocity_gradient_error(sp, &s.u, &manufactured::velocity_gradient),
            concentration_l2: scalar_l2_error(sp, &s.c, &|x, y| manufactured::concentration(x, y, t)),
            concentration_h1: scalar_gradient_error(sp, &s.c, &|x, y| {
                manufactured::concentration_gradient(x, y, t)
            }),
        });
    }
    Ok(ConvergenceTable {
        case: case.to_string(),
        levels: rows,
    })
}

/// `||grad u_h - grad u||_{L2}`.
pub fn velocity_gradient_error(
    spaces: &DiscreteSpaces,
    u: &[f64],
    exact: &dyn Fn(f64, f64) -> [[f64; 2]; 2],
) -> f64 {
    let rule = TriangleRule::with_degree(LOAD_DEGREE);
    let mut total = 0.0;
    for t in 0..spaces.mesh().num_triangles() {
        let tri = spaces.triangle(t);
        let sd = spaces.element_p2_dofs(t);
        for (l, &w) in rule.points.iter().zip(&rule.weights) {
            let x = tri.point(l);
            let g = tri.p2_gradients(l);
            let e = exact(x[0], x[1]);
            for c in 0..2 {
                let mut gh = [0.0; 2];
                for a in 0..6 {
                    gh[0] += u[2 * sd[a] + c] * g[a][0];
                    gh[1] += u[2 * sd[a] + c] * g[a][1];
                }
                total += w * tri.area * ((gh[0] - e[c][0]).powi(2) + (gh[1] - e[c][1]).powi(2));
            }
        }
    }
    total.sqrt()
}

/// `||grad c_h - grad c||_{L2}`.
pub fn scalar_gradient_error(spaces: &DiscreteSpaces, c: &[f64], exact: &dyn Fn(f64, f64) -> [f64; 2]) -> f64 {
    let rule = TriangleRule::with_degree(LOAD_DEGREE);
    let mut total = 0.0;
    for t in 0..spaces.mesh().num_triangles() {
        let tri = spaces.triangle(t);
        for (l, &w) in rule.points.iter().zip(&rule.weights) {
            let x = tri.point(l);
            let gh = spaces.eval_scalar_gradient(c, t, l);
            let e = exact(x[0], x[1]);
            total += w * tri.area * ((gh[0] - e[0]).powi(2) + (gh[1] - e[1]).powi(2));
        }
    }
    total.sqrt()
}

#[derive(Clone, Debug, PartialEq)]
pub struct FormDiscrepancy {
    pub form: &'static str,
    /// `max |A_q - A_{q+2}| / max |A_{q+2}|` over elements.
    pub max_relative: f64,
    pub worst_element: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct QuadratureReport {
    pub forms: Vec<FormDiscrepancy>,
    /// `|sum of all concentration mass entries - |Omega||`.
    pub mass_total_error: f64,
    /// Largest mismatch between a mass row sum and `int phi_a`.
    pub mass_row_error: f64,
}

impl QuadratureReport {
    pub fn max_discrepancy(&self) -> f64 {
        self.forms.iter().map(|f| f.max_relative).fold(0.0, f64::max)
    }

    /// Fails naming the form and element above `tol`.
    pub fn ensure(&self, tol: f64) -> Result<()> {
        match self.forms.iter().find(|f| f.max_relative > tol) {
            None => Ok(()),
            Some(f) => Err(Error::Verification(format!(
                "form {} on element {} differs by {:.3e} under a finer rule",
                f.form, f.worst_element, f.max_relative
            ))),
        }
    }
}

fn compare_local(worst: &mut (f64, usize, f64), t: usize, a: &[f64], b: &[f64]) {
    let scale = b.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let diff = a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
    let rel = if scale > 0.0 { diff / scale } else { diff };
    if rel > worst.0 {
        *worst = (rel, t, scale);
    }
}

/// Recomputes every local element matrix with a rule two degrees higher and
/// reports the largest relative change per form. `u` and `c` supply the
/// advecting velocity and the Korteweg concentration.
pub fn quadrature_oracle_check(
    spaces: &DiscreteSpaces,
    forms: &FormsCache,
    u: &[f64],
    c: &[f64],
    korteweg: f64,
) -> QuadratureReport {
    let base = TriangleRule::with_degree(BILINEAR_DEGREE);
    let fine = TriangleRule::with_degree(BILINEAR_DEGREE + 2);
    let tri_base = TriangleRule::with_degree(TRILINEAR_DEGREE);
    let tri_fine = TriangleRule::with_degree(TRILINEAR_DEGREE + 2);
    let names = ["mass_u", "a0", "b_div", "mass_c", "stiffness_c", "convection", "korteweg"];
    let mut worst = vec![(0.0, 0usize, 0.0); names.len()];
    let flat6 = |m: [[f64; 6]; 6]| m.iter().flatten().copied().collect::<Vec<_>>();
    let flat12 = |m: [[f64; 12]; 12]| m.iter().flatten().copied().collect::<Vec<_>>();
    for t in 0..spaces.mesh().num_triangles() {
        let tri = spaces.triangle(t);
        let sd = spaces.element_p2_dofs(t);
        let u_local = velocity_local_dofs(&sd).map(|d| u[d]);
        let c_local = sd.map(|d| c[d]);
        compare_local(&mut worst[0], t, &flat12(local_velocity_mass(&tri, &base)), &flat12(local_velocity_mass(&tri, &fine)));
        compare_local(
            &mut worst[1],
            t,
            &flat12(local_viscous(&tri, forms.viscosity, &base)),
            &flat12(local_viscous(&tri, forms.viscosity, &fine)),
        );
        let d0: Vec<f64> = local_divergence(&tri, &base).iter().flatten().copied().collect();
        let d1: Vec<f64> = local_divergence(&tri, &fine).iter().flatten().copied().collect();
        compare_local(&mut worst[2], t, &d0, &d1);
        compare_local(&mut worst[3], t, &flat6(local_scalar_mass(&tri, &base)), &flat6(local_scalar_mass(&tri, &fine)));
        compare_local(&mut worst[4], t, &flat6(local_stiffness(&tri, &base)), &flat6(local_stiffness(&tri, &fine)));
        compare_local(
            &mut worst[5],
            t,
            &flat6(local_skew_convection(&tri, &u_local, &tri_base)),
            &flat6(local_skew_convection(&tri, &u_local, &tri_fine)),
        );
        compare_local(
            &mut worst[6],
            t,
            &local_korteweg(&tri, &c_local, korteweg, &tri_base),
            &local_korteweg(&tri, &c_local, korteweg, &tri_fine),
        );
    }

    let area = spaces.mesh().area();
    let total: f64 = forms.mass_c.values.iter().sum();
    // row sums are int phi_a: zero at vertices, |T|/3 per adjacent triangle at midpoints
    let mut expected = vec![0.0; spaces.n_scalar()];
    for t in 0..spaces.mesh().num_triangles() {
        let a = spaces.mesh().triangle_area(t);
        for &d in &spaces.element_p2_dofs(t)[3..] {
            expected[d] += a / 3.0;
        }
    }
    let mass_row_error = (0..spaces.n_scalar())
        .map(|i| (forms.mass_c.row(i).map(|(_, v)| v).sum::<f64>() - expected[i]).abs())
        .fold(0.0, f64::max);

    QuadratureReport {
        forms: names
            .iter()
            .zip(worst)
            .map(|(&form, (max_relative, worst_element, _))| FormDiscrepancy {
                form,
                max_relative,
                worst_element,
            })
            .collect(),
        mass_total_error: (total - area).abs(),
        mass_row_error,
    }
}

/// Value, gradient and Hessian of an analytic concentration.
pub type Jet = dyn Fn(f64, f64) -> (f64, [f64; 2], [[f64; 2]; 2]);

#[derive(Clone, Debug, PartialEq)]
pub struct IdentityComparison {
    pub name: &'static str,
    /// `int Div K(C) . v`, with `Div K` from differentiating the tensor.
    pub direct: f64,
    /// `-k int lap C (grad C . v)`.
    pub weak: f64,
    /// `|direct - weak| / max(|direct|, |weak|, ||Div K|| ||v||)`.
    pub relative_difference: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct KortewegIdentityReport {
    pub k: f64,
    pub cases: Vec<IdentityComparison>,
}

impl KortewegIdentityReport {
    pub fn max_relative_difference(&self) -> f64 {
        self.cases.iter().map(|c| c.relative_difference).fold(0.0, f64::max)
    }

    pub fn passed(&self, tol: f64) -> bool {
        self.max_relative_difference() <= tol
    }
}

/// `Div K` assembled from the tensor components by the product rule:
/// `(Div K)_l = sum_i d_i K_li` with `K11 = k C_y^2`, `K22 = k C_x^2`,
/// `K12 = K21 = -k C_x C_y`.
pub fn korteweg_divergence_direct(g: [f64; 2], h: [[f64; 2]; 2], k: f64) -> [f64; 2] {
    let (cx, cy) = (g[0], g[1]);
    let (cxx, cxy, cyy) = (h[0][0], h[0][1], h[1][1]);
    let dx_k11 = 2.0 * k * cy * cxy;
    let dy_k12 = -k * (cxy * cy + cx * cyy);
    let dx_k21 = -k * (cxx * cy + cx * cxy);
    let dy_k22 = 2.0 * k * cx * cxy;
    [dx_k11 + dy_k12, dx_k21 + dy_k22]
}

/// Both sides of the identity on the unit square with `v = curl psi`,
/// `psi = [x(1-x) y(1-y)]^2`, by a 20 x 20 Gauss tensor rule.
pub fn korteweg_identity(name: &'static str, jet: &Jet, k: f64) -> IdentityComparison {
    let rule = LineRule::gauss(20, 0.0, 1.0);
    let (mut direct, mut weak, mut dk_sq, mut v_sq) = (0.0, 0.0, 0.0, 0.0);
    for (&x, &wx) in rule.points.iter().zip(&rule.weights) {
        for (&y, &wy) in rule.points.iter().zip(&rule.weights) {
            let w = wx * wy;
            let (_, g, h) = jet(x, y);
            let v = manufactured::velocity(x, y);
            let dk = korteweg_divergence_direct(g, h, k);
            let lap = h[0][0] + h[1][1];
            direct += w * (dk[0] * v[0] + dk[1] * v[1]);
            weak += -w * k * lap * (g[0] * v[0] + g[1] * v[1]);
            dk_sq += w * (dk[0] * dk[0] + dk[1] * dk[1]);
            v_sq += w * (v[0] * v[0] + v[1] * v[1]);
        }
    }
    let scale = direct.abs().max(weak.abs()).max((dk_sq * v_sq).sqrt());
    IdentityComparison {
        name,
        direct,
        weak,
        relative_difference: if scale > 0.0 { (direct - weak).abs() / scale } else { 0.0 },
    }
}

/// Jet of `cos(pi x) cos(pi y)`.
pub fn cosine_jet(x: f64, y: f64) -> (f64, [f64; 2], [[f64; 2]; 2]) {
    (
        manufactured::concentration(x, y, 0.0),
        manufactured::concentration_gradient(x, y, 0.0),
        manufactured::concentration_hessian(x, y, 0.0),
    )
}

/// Jet of `cos(pi x) cos(pi y) + x^3 y + sin(pi x y) / 2`, whose Korteweg
/// force is not a pure gradient.
pub fn mixed_jet(x: f64, y: f64) -> (f64, [f64; 2], [[f64; 2]; 2]) {
    use std::f64::consts::PI;
    let (c, g, h) = cosine_jet(x, y);
    let (s, co) = ((PI * x * y).sin(), (PI * x * y).cos());
    let hxy = h[0][1] + 3.0 * x * x + 0.5 * PI * co - 0.5 * PI * PI * x * y * s;
    (
        c + x.powi(3) * y + 0.5 * s,
        [
            g[0] + 3.0 * x * x * y + 0.5 * PI * y * co,
            g[1] + x.powi(3) + 0.5 * PI * x * co,
        ],
        [
            [h[0][0] + 6.0 * x * y - 0.5 * PI * PI * y * y * s, hxy],
            [hxy, h[1][1] - 0.5 * PI * PI * x * x * s],
        ],
    )
}

pub fn linear_jet(x: f64, y: f64) -> (f64, [f64; 2], [[f64; 2]; 2]) {
    (2.0 * x - y, [2.0, -1.0], [[0.0; 2]; 2])
}

/// Runs the identity for the cosine, mixed and linear jets.
pub fn korteweg_identity_check(k: f64) -> KortewegIdentityReport {
    KortewegIdentityReport {
        k,
        cases: vec![
            korteweg_identity("cosine", &cosine_jet, k),
            korteweg_identity("mixed", &mixed_jet, k),
            korteweg_identity("linear", &linear_jet, k),
        ],
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GalerkinStudy {
    pub cells: Vec<(usize, usize)>,
    /// `||u_L - u_{L+1}||_{L2(0,T; L2)}` for consecutive levels.
    pub differences: Vec<f64>,
}

impl GalerkinStudy {
    pub fn strictly_decreasing(&self) -> bool {
        self.differences.windows(2).all(|w| w[1] < w[0])
    }
}

/// Runs the configuration on `levels` successively halved meshes and
/// measures the space-time L2 distance between consecutive velocity
/// trajectories (coarse fields evaluated at the fine quadrature points,
/// right-endpoint rule in time).
pub fn galerkin_study(config: &ProblemConfig, levels: usize) -> Result<GalerkinStudy> {
    if levels < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 levels, got {levels}")));
    }
    let mut runs = Vec::with_capacity(levels);
    let mut cells = Vec::with_capacity(levels);
    for l in 0..levels {
        let mut cfg = config.clone();
        cfg.discretization.nx <<= l;
        cfg.discretization.ny <<= l;
        cells.push((cfg.discretization.nx, cfg.discretization.ny));
        let sim = Simulation::new(cfg)?;
        let mut traj = Vec::new();
        sim.run_with(|i, s| {
            if i > 0 {
                traj.push((s.t, s.u.clone()));
            }
            Ok(())
        })?;
        runs.push((sim, traj));
    }
    let rule = TriangleRule::with_degree(LOAD_DEGREE);
    let mut differences = Vec::with_capacity(levels - 1);
    for pair in runs.windows(2) {
        let (coarse, coarse_traj) = &pair[0];
        let (fine, fine_traj) = &pair[1];
        let fs = fine.spaces();
        // fine quadrature points located once on the coarse mesh
        let mut points = Vec::new();
        for t in 0..fs.mesh().num_triangles() {
            let tri = fs.triangle(t);
            for (l, &w) in rule.points.iter().zip(&rule.weights) {
                let x = tri.point(l);
                let (ct, cb) = coarse.spaces().mesh().locate(x).ok_or_else(|| {
                    Error::Geometry(format!("point {x:?} of the fine mesh is outside the coarse mesh"))
                })?;
                points.push((t, *l, ct, cb, w * tri.area));
            }
        }
        let mut total = 0.0;
        let mut t_prev = 0.0;
        for ((tc, uc), (tf, uf)) in coarse_traj.iter().zip(fine_traj) {
            if (tc - tf).abs() > 1e-9 * tf.abs().max(1.0) {
                return Err(Error::Verification(format!("time grids differ: {tc} vs {tf}")));
            }
            let mut sq = 0.0;
            for (t, l, ct, cb, w) in &points {
                let a = fs.eval_velocity(uf, *t, l);
                let b = coarse.spaces().eval_velocity(uc, *ct, cb);
                sq += w * ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2));
            }
            total += (tf - t_prev) * sq;
            t_prev = *tf;
        }
        differences.push(total.sqrt());
    }
    Ok(GalerkinStudy { cells, differences })
}
