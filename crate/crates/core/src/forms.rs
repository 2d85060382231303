//! Finite-element assembly of the viscous, divergence, diffusion, reaction
//! and skew-symmetric convection forms, and of the Korteweg load.
//!
//! Local velocity dofs are interleaved like the global ones: local index
//! `2 * a + c` is component `c` of P2 shape function `a`.

use crate::element::Triangle;
use crate::linalg::{CsrMatrix, TripletBuilder};
use crate::quadrature::TriangleRule;
use crate::spaces::DiscreteSpaces;
use crate::{Error, Result};

/// Quadrature degree for bilinear forms.
pub const BILINEAR_DEGREE: usize = 4;
/// Quadrature degree for trilinear forms and the Korteweg load.
pub const TRILINEAR_DEGREE: usize = 6;
/// Quadrature degree for loads from analytic data.
pub const LOAD_DEGREE: usize = 8;

pub type Local12 = [[f64; 12]; 12];
pub type Local6 = [[f64; 6]; 6];

/// Korteweg stress `K(C)` for a given concentration gradient.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KortewegTensor {
    pub k11: f64,
    pub k12: f64,
    pub k21: f64,
    pub k22: f64,
}

impl KortewegTensor {
    pub fn trace(&self) -> f64 {
        self.k11 + self.k22
    }
}

pub fn korteweg_tensor(grad_c: [f64; 2], k: f64) -> Result<KortewegTensor> {
    if !(k >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "Korteweg coefficient must be nonnegative, got {k}"
        )));
    }
    let [cx, cy] = grad_c;
    let off = -k * cx * cy;
    Ok(KortewegTensor {
        k11: k * cy * cy,
        k12: off,
        k21: off,
        k22: k * cx * cx,
    })
}

/// Physical coefficients entering the constant forms.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FormCoefficients {
    pub viscosity: f64,
    pub diffusivity: f64,
}

/// Matrices that do not change during a run.
#[derive(Clone, Debug)]
pub struct FormsCache {
    pub viscosity: f64,
    pub diffusivity: f64,
    /// Velocity mass matrix.
    pub mass_u: CsrMatrix,
    /// Viscous form `a0(u, v) = 2 nu0 (eps(u), eps(v))`.
    pub a0: CsrMatrix,
    /// Divergence form, row `q`, column `v`: `c(v, q) = -(div v, q)`.
    pub b_div: CsrMatrix,
    /// Concentration mass matrix.
    pub mass_c: CsrMatrix,
    /// Concentration stiffness `(grad xi, grad eta)` without the diffusivity.
    pub stiffness_c: CsrMatrix,
    /// Diffusion form `b0 = d * stiffness_c`.
    pub b0: CsrMatrix,
    /// Reaction form `(g xi, eta)`.
    pub reaction: CsrMatrix,
    /// P1 pressure mass matrix.
    pub mass_p: CsrMatrix,
}

pub fn assemble_constant_forms(
    spaces: &DiscreteSpaces,
    coeffs: FormCoefficients,
    source: &dyn Fn(f64, f64) -> f64,
) -> Result<FormsCache> {
    let FormCoefficients {
        viscosity,
        diffusivity,
    } = coeffs;
    if !(viscosity > 0.0) {
        return Err(Error::config(
            "physics.viscosity",
            format!("must be positive, got {viscosity}"),
        ));
    }
    if !(diffusivity > 0.0) {
        return Err(Error::config(
            "physics.diffusivity",
            format!("must be positive, got {diffusivity}"),
        ));
    }
    let rule = TriangleRule::with_degree(BILINEAR_DEGREE);
    let nu = spaces.n_velocity();
    let nc = spaces.n_scalar();
    let np = spaces.n_pressure();
    let ne = spaces.mesh().num_triangles();

    let mut mass_u = TripletBuilder::with_capacity(nu, nu, ne * 144);
    let mut a0 = TripletBuilder::with_capacity(nu, nu, ne * 144);
    let mut b_div = TripletBuilder::with_capacity(np, nu, ne * 36);
    let mut mass_c = TripletBuilder::with_capacity(nc, nc, ne * 36);
    let mut stiff = TripletBuilder::with_capacity(nc, nc, ne * 36);
    let mut reaction = TripletBuilder::with_capacity(nc, nc, ne * 36);
    let mut mass_p = TripletBuilder::with_capacity(np, np, ne * 9);

    for t in 0..ne {
        let tri = spaces.triangle(t);
        let sd = spaces.element_p2_dofs(t);
        let vd = velocity_local_dofs(&sd);
        let pd = spaces.element_p1_dofs(t);

        scatter12(&mut mass_u, &vd, &local_velocity_mass(&tri, &rule));
        scatter12(&mut a0, &vd, &local_viscous(&tri, viscosity, &rule));
        let div = local_divergence(&tri, &rule);
        for (i, &pi) in pd.iter().enumerate() {
            for (j, &vj) in vd.iter().enumerate() {
                b_div.push(pi, vj, div[i][j]);
            }
        }
        scatter6(&mut mass_c, &sd, &local_scalar_mass(&tri, &rule));
        scatter6(&mut stiff, &sd, &local_stiffness(&tri, &rule));
        scatter6(&mut reaction, &sd, &local_reaction(&tri, source, &rule));
        let mp = local_p1_mass(&tri, &rule);
        for (i, &pi) in pd.iter().enumerate() {
            for (j, &pj) in pd.iter().enumerate() {
                mass_p.push(pi, pj, mp[i][j]);
            }
        }
    }
    let stiffness_c = stiff.build();
    Ok(FormsCache {
        viscosity,
        diffusivity,
        mass_u: mass_u.build(),
        a0: a0.build(),
        b_div: b_div.build(),
        mass_c: mass_c.build(),
        b0: stiffness_c.scaled(diffusivity),
        stiffness_c,
        reaction: reaction.build(),
        mass_p: mass_p.build(),
    })
}

pub fn velocity_local_dofs(scalar: &[usize; 6]) -> [usize; 12] {
    let mut out = [0; 12];
    for (a, &d) in scalar.iter().enumerate() {
        out[2 * a] = 2 * d;
        out[2 * a + 1] = 2 * d + 1;
    }
    out
}

fn scatter12(b: &mut TripletBuilder, dofs: &[usize; 12], local: &Local12) {
    for (i, &gi) in dofs.iter().enumerate() {
        for (j, &gj) in dofs.iter().enumerate() {
            b.push(gi, gj, local[i][j]);
        }
    }
}

fn scatter6(b: &mut TripletBuilder, dofs: &[usize; 6], local: &Local6) {
    for (i, &gi) in dofs.iter().enumerate() {
        for (j, &gj) in dofs.iter().enumerate() {
            b.push(gi, gj, local[i][j]);
        }
    }
}

pub fn local_scalar_mass(tri: &Triangle, rule: &TriangleRule) -> Local6 {
    let mut m = [[0.0; 6]; 6];
    for (l, &w) in rule.points.iter().zip(&rule.weights) {
        let phi = tri.p2_values(l);
        let wa = w * tri.area;
        for a in 0..6 {
            for b in 0..6 {
                m[a][b] += wa * phi[a] * phi[b];
            }
        }
    }
    m
}

pub fn local_stiffness(tri: &Triangle, rule: &TriangleRule) -> Local6 {
    let mut m = [[0.0; 6]; 6];
    for (l, &w) in rule.points.iter().zip(&rule.weights) {
        let g = tri.p2_gradients(l);
        let wa = w * tri.area;
        for a in 0..6 {
            for b in 0..6 {
                m[a][b] += wa * (g[a][0] * g[b][0] + g[a][1] * g[b][1]);
            }
        }
    }
    m
}

pub fn local_reaction(tri: &Triangle, g: &dyn Fn(f64, f64) -> f64, rule: &TriangleRule) -> Local6 {
    let mut m = [[0.0; 6]; 6];
    for (l, &w) in rule.points.iter().zip(&rule.weights) {
        let phi = tri.p2_values(l);
        let x = tri.point(l);
        let wa = w * tri.area * g(x[0], x[1]);
        for a in 0..6 {
            for b in 0..6 {
                m[a][b] += wa * phi[a] * phi[b];
            }
        }
    }
    m
}

pub fn local_velocity_mass(tri: &Triangle, rule: &TriangleRule) -> Local12 {
    let s = local_scalar_mass(tri, rule);
    let mut m = [[0.0; 12]; 12];
    for a in 0..6 {
        for b in 0..6 {
            m[2 * a][2 * b] = s[a][b];
            m[2 * a + 1][2 * b + 1] = s[a][b];
        }
    }
    m
}

/// `2 nu0 (eps(phi_a e_c), eps(phi_b e_e)) = nu0 (delta_ce grad phi_a . grad phi_b + d_e phi_a d_c phi_b)`
pub fn local_viscous(tri: &Triangle, nu0: f64, rule: &TriangleRule) -> Local12 {
    let mut m = [[0.0; 12]; 12];
    for (l, &w) in rule.points.iter().zip(&rule.weights) {
        let g = tri.p2_gradients(l);
        let wa = w * tri.area * nu0;
        for a in 0..6 {
            for b in 0..6 {
                let gg = g[a][0] * g[b][0] + g[a][1] * g[b][1];
                for c in 0..2 {
                    for e in 0..2 {
                        let diag = if c == e { gg } else { 0.0 };
                        m[2 * a + c][2 * b + e] += wa * (diag + g[a][e] * g[b][c]);
                    }
                }
            }
        }
    }
    m
}

/// Rows: P1 pressure shape functions, columns: local velocity dofs.
pub fn local_divergence(tri: &Triangle, rule: &TriangleRule) -> [[f64; 12]; 3] {
    let mut m = [[0.0; 12]; 3];
    for (l, &w) in rule.points.iter().zip(&rule.weights) {
        let g = tri.p2_gradients(l);
        let psi = tri.p1_values(l);
        let wa = w * tri.area;
        for q in 0..3 {
            for a in 0..6 {
                for c in 0..2 {
                    m[q][2 * a + c] -= wa * g[a][c] * psi[q];
                }
            }
        }
    }
    m
}

pub fn local_p1_mass(tri: &Triangle, rule: &TriangleRule) -> [[f64; 3]; 3] {
    let mut m = [[0.0; 3]; 3];
    for (l, &w) in rule.points.iter().zip(&rule.weights) {
        for a in 0..3 {
            for b in 0..3 {
                m[a][b] += w * tri.area * l[a] * l[b];
            }
        }
    }
    m
}

/// Scalar skew convection matrix for a local advecting velocity:
/// entry `[a][b] = 1/2 [ ((u . grad phi_b), phi_a) - ((u . grad phi_a), phi_b) ]`.
pub fn local_skew_convection(tri: &Triangle, u_local: &[f64; 12], rule: &TriangleRule) -> Local6 {
    let mut raw = [[0.0; 6]; 6];
    for (l, &w) in rule.points.iter().zip(&rule.weights) {
        let phi = tri.p2_values(l);
        let g = tri.p2_gradients(l);
        let mut u = [0.0; 2];
        for a in 0..6 {
            u[0] += u_local[2 * a] * phi[a];
            u[1] += u_local[2 * a + 1] * phi[a];
        }
        let wa = w * tri.area;
        for a in 0..6 {
            for b in 0..6 {
                raw[a][b] += wa * (u[0] * g[b][0] + u[1] * g[b][1]) * phi[a];
            }
        }
    }
    let mut m = [[0.0; 6]; 6];
    for a in 0..6 {
        for b in 0..6 {
            m[a][b] = 0.5 * (raw[a][b] - raw[b][a]);
        }
    }
    m
}

/// Skew-symmetrized convection operators for a fixed advecting velocity.
#[derive(Clone, Debug)]
pub struct ConvectionOperators {
    /// Rows test velocity `w`, columns trial velocity `v`: `a1_sk(u, v, w)`.
    pub velocity: CsrMatrix,
    /// Rows test `eta`, columns trial `xi`: `b1_sk(u, xi, eta)`.
    pub scalar: CsrMatrix,
}

pub fn assemble_convection(spaces: &DiscreteSpaces, u: &[f64]) -> ConvectionOperators {
    let rule = TriangleRule::with_degree(TRILINEAR_DEGREE);
    let nc = spaces.n_scalar();
    let nu = spaces.n_velocity();
    let ne = spaces.mesh().num_triangles();
    let mut sb = TripletBuilder::with_capacity(nc, nc, ne * 36);
    let mut vb = TripletBuilder::with_capacity(nu, nu, ne * 72);
    for t in 0..ne {
        let tri = spaces.triangle(t);
        let sd = spaces.element_p2_dofs(t);
        let vd = velocity_local_dofs(&sd);
        let u_local = vd.map(|d| u[d]);
        let m = local_skew_convection(&tri, &u_local, &rule);
        for a in 0..6 {
            for b in 0..6 {
                sb.push(sd[a], sd[b], m[a][b]);
                vb.push(2 * sd[a], 2 * sd[b], m[a][b]);
                vb.push(2 * sd[a] + 1, 2 * sd[b] + 1, m[a][b]);
            }
        }
    }
    ConvectionOperators {
        velocity: vb.build(),
        scalar: sb.build(),
    }
}

/// Local Korteweg load `-k int dC_lap (grad C . phi)` with the elementwise
/// (constant) Laplacian of the P2 concentration.
pub fn local_korteweg(tri: &Triangle, c_local: &[f64; 6], k: f64, rule: &TriangleRule) -> [f64; 12] {
    let lap_basis = tri.p2_laplacians();
    let lap: f64 = c_local.iter().zip(&lap_basis).map(|(c, l)| c * l).sum();
    let mut out = [0.0; 12];
    if lap == 0.0 || k == 0.0 {
        return out;
    }
    for (l, &w) in rule.points.iter().zip(&rule.weights) {
        let phi = tri.p2_values(l);
        let g = tri.p2_gradients(l);
        let mut gc = [0.0; 2];
        for a in 0..6 {
            gc[0] += c_local[a] * g[a][0];
            gc[1] += c_local[a] * g[a][1];
        }
        let wa = -k * lap * w * tri.area;
        for a in 0..6 {
            out[2 * a] += wa * gc[0] * phi[a];
            out[2 * a + 1] += wa * gc[1] * phi[a];
        }
    }
    out
}

pub fn assemble_korteweg_load(spaces: &DiscreteSpaces, c: &[f64], k: f64) -> Vec<f64> {
    let rule = TriangleRule::with_degree(TRILINEAR_DEGREE);
    let mut load = vec![0.0; spaces.n_velocity()];
    if k == 0.0 {
        return load;
    }
    for t in 0..spaces.mesh().num_triangles() {
        let tri = spaces.triangle(t);
        let sd = spaces.element_p2_dofs(t);
        let local = local_korteweg(&tri, &sd.map(|d| c[d]), k, &rule);
        for (j, &d) in velocity_local_dofs(&sd).iter().enumerate() {
            load[d] += local[j];
        }
    }
    load
}

/// `(f, v)` for an analytic vector field.
pub fn assemble_velocity_load(spaces: &DiscreteSpaces, f: &dyn Fn(f64, f64) -> [f64; 2]) -> Vec<f64> {
    let rule = TriangleRule::with_degree(LOAD_DEGREE);
    let mut load = vec![0.0; spaces.n_velocity()];
    for t in 0..spaces.mesh().num_triangles() {
        let tri = spaces.triangle(t);
        let sd = spaces.element_p2_dofs(t);
        for (l, &w) in rule.points.iter().zip(&rule.weights) {
            let x = tri.point(l);
            let fx = f(x[0], x[1]);
            let phi = tri.p2_values(l);
            let wa = w * tri.area;
            for a in 0..6 {
                load[2 * sd[a]] += wa * fx[0] * phi[a];
                load[2 * sd[a] + 1] += wa * fx[1] * phi[a];
            }
        }
    }
    load
}

/// `(f, eta)` for an analytic scalar field.
pub fn assemble_scalar_load(spaces: &DiscreteSpaces, f: &dyn Fn(f64, f64) -> f64) -> Vec<f64> {
    let rule = TriangleRule::with_degree(LOAD_DEGREE);
    let mut load = vec![0.0; spaces.n_scalar()];
    for t in 0..spaces.mesh().num_triangles() {
        let tri = spaces.triangle(t);
        let sd = spaces.element_p2_dofs(t);
        for (l, &w) in rule.points.iter().zip(&rule.weights) {
            let x = tri.point(l);
            let fx = f(x[0], x[1]);
            let phi = tri.p2_values(l);
            for a in 0..6 {
                load[sd[a]] += w * tri.area * fx * phi[a];
            }
        }
    }
    load
}

/// Velocity H1 Gram matrix `(u, v) + (grad u, grad v)`.
pub fn velocity_h1_gram(spaces: &DiscreteSpaces) -> CsrMatrix {
    let rule = TriangleRule::with_degree(BILINEAR_DEGREE);
    let nu = spaces.n_velocity();
    let mut b = TripletBuilder::with_capacity(nu, nu, spaces.mesh().num_triangles() * 72);
    for t in 0..spaces.mesh().num_triangles() {
        let tri = spaces.triangle(t);
        let sd = spaces.element_p2_dofs(t);
        let m = local_scalar_mass(&tri, &rule);
        let s = local_stiffness(&tri, &rule);
        for a in 0..6 {
            for c in 0..2 {
                for bb in 0..6 {
                    b.push(2 * sd[a] + c, 2 * sd[bb] + c, m[a][bb] + s[a][bb]);
                }
            }
        }
    }
    b.build()
}

/// `||eps(u)||^2` by direct quadrature of the symmetric gradient.
pub fn symmetric_gradient_norm_sq(spaces: &DiscreteSpaces, u: &[f64]) -> f64 {
    let rule = TriangleRule::with_degree(BILINEAR_DEGREE);
    let mut total = 0.0;
    for t in 0..spaces.mesh().num_triangles() {
        let tri = spaces.triangle(t);
        let sd = spaces.element_p2_dofs(t);
        for (l, &w) in rule.points.iter().zip(&rule.weights) {
            let g = tri.p2_gradients(l);
            let mut du = [[0.0; 2]; 2];
            for a in 0..6 {
                for c in 0..2 {
                    for e in 0..2 {
                        du[c][e] += u[2 * sd[a] + c] * g[a][e];
                    }
                }
            }
            let e12 = 0.5 * (du[0][1] + du[1][0]);
            total += w * tri.area * (du[0][0] * du[0][0] + du[1][1] * du[1][1] + 2.0 * e12 * e12);
        }
    }
    total
}

/// `||u_h - u||_{L2}` against an analytic vector field.
pub fn velocity_l2_error(spaces: &DiscreteSpaces, u: &[f64], exact: &dyn Fn(f64, f64) -> [f64; 2]) -> f64 {
    let rule = TriangleRule::with_degree(LOAD_DEGREE);
    let mut total = 0.0;
    for t in 0..spaces.mesh().num_triangles() {
        let tri = spaces.triangle(t);
        for (l, &w) in rule.points.iter().zip(&rule.weights) {
            let x = tri.point(l);
            let uh = spaces.eval_velocity(u, t, l);
            let ue = exact(x[0], x[1]);
            total += w * tri.area * ((uh[0] - ue[0]).powi(2) + (uh[1] - ue[1]).powi(2));
        }
    }
    total.sqrt()
}

/// `||c_h - c||_{L2}` against an analytic scalar field.
pub fn scalar_l2_error(spaces: &DiscreteSpaces, c: &[f64], exact: &dyn Fn(f64, f64) -> f64) -> f64 {
    let rule = TriangleRule::with_degree(LOAD_DEGREE);
    let mut total = 0.0;
    for t in 0..spaces.mesh().num_triangles() {
        let tri = spaces.triangle(t);
        for (l, &w) in rule.points.iter().zip(&rule.weights) {
            let x = tri.point(l);
            let e = spaces.eval_scalar(c, t, l) - exact(x[0], x[1]);
            total += w * tri.area * e * e;
        }
    }
    total.sqrt()
}
