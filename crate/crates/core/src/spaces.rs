//! Degree-of-freedom maps for the Taylor-Hood velocity/pressure pair and the
//! P2 concentration space.
//!
//! Scalar P2 nodes are the mesh vertices followed by the edge midpoints.
//! Velocity dofs are interleaved: dof `2 * node + component`. Under a
//! periodic partition, nodes on the right side are identified with their
//! images on the left side, so dof counts are smaller than node counts.

use std::collections::HashMap;

use crate::element::{edge_p2_values, Triangle, P2_EDGES};
use crate::geometry::{BoundaryTag, Mesh};
use crate::linalg::CsrMatrix;
use crate::{Error, Result};

/// Homogeneous essential constraints: every listed dof is fixed to zero.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ConstraintSet {
    dofs: Vec<usize>,
}

impl ConstraintSet {
    pub fn new(mut dofs: Vec<usize>) -> Result<Self> {
        dofs.sort_unstable();
        if let Some(w) = dofs.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::InvalidArgument(format!(
                "dof {} is constrained twice",
                w[0]
            )));
        }
        Ok(ConstraintSet { dofs })
    }

    pub fn dofs(&self) -> &[usize] {
        &self.dofs
    }

    pub fn len(&self) -> usize {
        self.dofs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dofs.is_empty()
    }

    pub fn contains(&self, dof: usize) -> bool {
        self.dofs.binary_search(&dof).is_ok()
    }

    /// Union with another set that must not overlap.
    pub fn merged(&self, other: &ConstraintSet) -> Result<ConstraintSet> {
        ConstraintSet::new(self.dofs.iter().chain(&other.dofs).copied().collect())
    }
}

/// Linear system restricted to the unconstrained dofs.
#[derive(Clone, Debug)]
pub struct ReducedSystem {
    pub matrix: CsrMatrix,
    pub rhs: Vec<f64>,
    /// Full index of each reduced unknown.
    pub free: Vec<usize>,
    pub n_full: usize,
}

impl ReducedSystem {
    /// Embeds a reduced solution into the full space, zero on constrained
    /// dofs.
    pub fn extend(&self, reduced: &[f64]) -> Vec<f64> {
        let mut full = vec![0.0; self.n_full];
        for (&i, &v) in self.free.iter().zip(reduced) {
            full[i] = v;
        }
        full
    }

    pub fn restrict(&self, full: &[f64]) -> Vec<f64> {
        self.free.iter().map(|&i| full[i]).collect()
    }
}

/// Removes the constrained rows and columns. For homogeneous constraints the
/// eliminated columns contribute nothing to the right-hand side.
pub fn apply_constraints(
    matrix: &CsrMatrix,
    rhs: &[f64],
    constraints: &ConstraintSet,
) -> Result<ReducedSystem> {
    let n = matrix.nrows;
    if matrix.ncols != n || rhs.len() != n {
        return Err(Error::InvalidArgument(format!(
            "system is {}x{} with rhs of length {}",
            matrix.nrows,
            matrix.ncols,
            rhs.len()
        )));
    }
    if let Some(&last) = constraints.dofs().last() {
        if last >= n {
            return Err(Error::InvalidArgument(format!(
                "constrained dof {last} outside a system of size {n}"
            )));
        }
    }
    let mut map = vec![None; n];
    let mut free = Vec::with_capacity(n - constraints.len());
    for (i, slot) in map.iter_mut().enumerate() {
        if !constraints.contains(i) {
            *slot = Some(free.len());
            free.push(i);
        }
    }
    let m = free.len();
    Ok(ReducedSystem {
        matrix: matrix.select(&map, m, &map, m),
        rhs: free.iter().map(|&i| rhs[i]).collect(),
        free,
        n_full: n,
    })
}

#[derive(Clone, Debug)]
pub struct DiscreteSpaces {
    mesh: Mesh,
    edges: Vec<[usize; 2]>,
    elem_p2: Vec<[usize; 6]>,
    p2_coords: Vec<[f64; 2]>,
    p2_dof: Vec<usize>,
    p2_rep: Vec<bool>,
    n_p2: usize,
    p1_dof: Vec<usize>,
    n_p1: usize,
    boundary_p2: Vec<[usize; 3]>,
    velocity_constraints: ConstraintSet,
}

/// Pressure dof fixed to zero to remove the constant nullspace.
pub const PINNED_PRESSURE_DOF: usize = 0;

pub fn build_spaces(mesh: Mesh) -> Result<DiscreteSpaces> {
    let nv = mesh.num_nodes();
    let mut edge_ids: HashMap<(usize, usize), usize> = HashMap::new();
    let mut edges = Vec::new();
    let mut elem_p2 = Vec::with_capacity(mesh.num_triangles());
    for tri in &mesh.triangles {
        let mut local = [tri[0], tri[1], tri[2], 0, 0, 0];
        for (k, &[a, b]) in P2_EDGES.iter().enumerate() {
            let key = (tri[a].min(tri[b]), tri[a].max(tri[b]));
            let id = *edge_ids.entry(key).or_insert_with(|| {
                edges.push([key.0, key.1]);
                edges.len() - 1
            });
            local[3 + k] = nv + id;
        }
        elem_p2.push(local);
    }

    let mut p2_coords: Vec<[f64; 2]> = mesh.nodes.clone();
    for &[a, b] in &edges {
        let (pa, pb) = (mesh.nodes[a], mesh.nodes[b]);
        p2_coords.push([0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])]);
    }

    // representative geometric node under the periodic identification
    let rep = |g: usize| -> usize {
        if g < nv {
            mesh.periodic_image(g)
        } else {
            let [a, b] = edges[g - nv];
            let (ia, ib) = (mesh.periodic_image(a), mesh.periodic_image(b));
            // only edges lying on the identified side have an image
            edge_ids.get(&(ia.min(ib), ia.max(ib))).map_or(g, |&e| nv + e)
        }
    };
    let n_geo = p2_coords.len();
    let mut p2_dof = vec![usize::MAX; n_geo];
    let mut p2_rep = vec![false; n_geo];
    let mut n_p2 = 0;
    for g in 0..n_geo {
        let r = rep(g);
        if r == g {
            p2_dof[g] = n_p2;
            p2_rep[g] = true;
            n_p2 += 1;
        }
    }
    for g in 0..n_geo {
        let r = rep(g);
        if r != g {
            p2_dof[g] = p2_dof[r];
        }
    }

    let mut p1_dof = vec![usize::MAX; nv];
    let mut n_p1 = 0;
    for v in 0..nv {
        if mesh.periodic_image(v) == v {
            p1_dof[v] = n_p1;
            n_p1 += 1;
        }
    }
    for v in 0..nv {
        let r = mesh.periodic_image(v);
        if r != v {
            p1_dof[v] = p1_dof[r];
        }
    }

    let boundary_p2: Vec<[usize; 3]> = mesh
        .boundary_edges
        .iter()
        .map(|e| {
            let [a, b] = e.nodes;
            let mid = nv + edge_ids[&(a.min(b), a.max(b))];
            [a, b, mid]
        })
        .collect();

    let mut flags = vec![[false; 2]; n_p2];
    for ((edge, tag), nodes) in mesh.boundary_edges.iter().zip(&mesh.edge_tags).zip(&boundary_p2) {
        let normal = edge.side.outward_normal();
        let normal_comp = if normal[0] != 0.0 { 0 } else { 1 };
        for &g in nodes {
            let f = &mut flags[p2_dof[g]];
            match tag {
                BoundaryTag::Gamma0 => *f = [true, true],
                BoundaryTag::Gamma1 => f[normal_comp] = true,
            }
        }
    }
    let constrained: Vec<usize> = flags
        .iter()
        .enumerate()
        .flat_map(|(n, f)| (0..2).filter(move |&c| f[c]).map(move |c| 2 * n + c))
        .collect();
    let velocity_constraints = ConstraintSet::new(constrained)?;

    Ok(DiscreteSpaces {
        mesh,
        edges,
        elem_p2,
        p2_coords,
        p2_dof,
        p2_rep,
        n_p2,
        p1_dof,
        n_p1,
        boundary_p2,
        velocity_constraints,
    })
}

impl DiscreteSpaces {
    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    /// Number of scalar P2 dofs (concentration unknowns).
    pub fn n_scalar(&self) -> usize {
        self.n_p2
    }

    pub fn n_velocity(&self) -> usize {
        2 * self.n_p2
    }

    pub fn n_pressure(&self) -> usize {
        self.n_p1
    }

    pub fn n_saddle(&self) -> usize {
        self.n_velocity() + self.n_pressure()
    }

    pub fn velocity_constraints(&self) -> &ConstraintSet {
        &self.velocity_constraints
    }

    /// Constraints for the stacked `[velocity; pressure]` unknown.
    pub fn saddle_constraints(&self) -> ConstraintSet {
        let mut dofs = self.velocity_constraints.dofs().to_vec();
        dofs.push(self.n_velocity() + PINNED_PRESSURE_DOF);
        ConstraintSet::new(dofs).expect("pressure pin cannot clash with velocity dofs")
    }

    pub fn triangle(&self, t: usize) -> Triangle {
        let [a, b, c] = self.mesh.triangles[t];
        Triangle::new([self.mesh.nodes[a], self.mesh.nodes[b], self.mesh.nodes[c]])
    }

    pub fn element_p2_dofs(&self, t: usize) -> [usize; 6] {
        self.elem_p2[t].map(|g| self.p2_dof[g])
    }

    pub fn element_p1_dofs(&self, t: usize) -> [usize; 3] {
        self.mesh.triangles[t].map(|v| self.p1_dof[v])
    }

    /// Scalar P2 dofs of boundary edge `e`, ordered (start, end, midpoint).
    pub fn boundary_edge_dofs(&self, e: usize) -> [usize; 3] {
        self.boundary_p2[e].map(|g| self.p2_dof[g])
    }

    /// Coordinates of the geometric P2 nodes that own a dof, with the dof.
    pub fn scalar_dof_points(&self) -> impl Iterator<Item = (usize, [f64; 2])> + '_ {
        (0..self.p2_coords.len())
            .filter(|&g| self.p2_rep[g])
            .map(|g| (self.p2_dof[g], self.p2_coords[g]))
    }

    pub fn interpolate_scalar(&self, f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
        let mut out = vec![0.0; self.n_p2];
        for (dof, p) in self.scalar_dof_points() {
            out[dof] = f(p[0], p[1]);
        }
        out
    }

    pub fn interpolate_vector(&self, f: impl Fn(f64, f64) -> [f64; 2]) -> Vec<f64> {
        let mut out = vec![0.0; self.n_velocity()];
        for (dof, p) in self.scalar_dof_points() {
            let v = f(p[0], p[1]);
            out[2 * dof] = v[0];
            out[2 * dof + 1] = v[1];
        }
        out
    }

    pub fn interpolate_pressure(&self, f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
        let mut out = vec![0.0; self.n_p1];
        for v in 0..self.mesh.num_nodes() {
            if self.mesh.periodic_image(v) == v {
                let p = self.mesh.nodes[v];
                out[self.p1_dof[v]] = f(p[0], p[1]);
            }
        }
        out
    }

    pub fn eval_scalar(&self, coeffs: &[f64], t: usize, bary: &[f64; 3]) -> f64 {
        let phi = self.triangle(t).p2_values(bary);
        self.element_p2_dofs(t)
            .iter()
            .zip(&phi)
            .map(|(&d, &p)| coeffs[d] * p)
            .sum()
    }

    pub fn eval_scalar_gradient(&self, coeffs: &[f64], t: usize, bary: &[f64; 3]) -> [f64; 2] {
        let grads = self.triangle(t).p2_gradients(bary);
        let mut g = [0.0; 2];
        for (&d, gr) in self.element_p2_dofs(t).iter().zip(&grads) {
            g[0] += coeffs[d] * gr[0];
            g[1] += coeffs[d] * gr[1];
        }
        g
    }

    pub fn eval_velocity(&self, u: &[f64], t: usize, bary: &[f64; 3]) -> [f64; 2] {
        let phi = self.triangle(t).p2_values(bary);
        let mut v = [0.0; 2];
        for (&d, &p) in self.element_p2_dofs(t).iter().zip(&phi) {
            v[0] += u[2 * d] * p;
            v[1] += u[2 * d + 1] * p;
        }
        v
    }

    pub fn eval_pressure(&self, p: &[f64], t: usize, bary: &[f64; 3]) -> f64 {
        self.element_p1_dofs(t)
            .iter()
            .zip(bary)
            .map(|(&d, &l)| p[d] * l)
            .sum()
    }

    pub fn eval_scalar_at(&self, coeffs: &[f64], x: [f64; 2]) -> Option<f64> {
        self.mesh
            .locate(x)
            .map(|(t, bary)| self.eval_scalar(coeffs, t, &bary))
    }

    pub fn eval_velocity_at(&self, u: &[f64], x: [f64; 2]) -> Option<[f64; 2]> {
        self.mesh
            .locate(x)
            .map(|(t, bary)| self.eval_velocity(u, t, &bary))
    }

    /// Mean of a P1 pressure over the domain (exact vertex rule).
    pub fn pressure_mean(&self, p: &[f64]) -> f64 {
        let mut total = 0.0;
        for t in 0..self.mesh.num_triangles() {
            let s: f64 = self.element_p1_dofs(t).iter().map(|&d| p[d]).sum();
            total += self.mesh.triangle_area(t) * s / 3.0;
        }
        total / self.mesh.area()
    }

    pub fn zero_mean_pressure(&self, p: &[f64]) -> Vec<f64> {
        let mean = self.pressure_mean(p);
        p.iter().map(|v| v - mean).collect()
    }

    /// Velocity trace on boundary edge `e` at edge parameter `s` in [0, 1].
    pub fn eval_velocity_on_edge(&self, u: &[f64], e: usize, s: f64) -> [f64; 2] {
        let phi = edge_p2_values(s);
        let mut v = [0.0; 2];
        for (&d, &p) in self.boundary_edge_dofs(e).iter().zip(&phi) {
            v[0] += u[2 * d] * p;
            v[1] += u[2 * d + 1] * p;
        }
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_rect_mesh, SideCondition, SidePartition};
    use crate::linalg::{SparseLu, TripletBuilder};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn bottom_slip() -> SidePartition {
        SidePartition {
            bottom: SideCondition::Gamma1,
            ..SidePartition::uniform(SideCondition::Gamma0)
        }
    }

    fn spaces(nx: usize, ny: usize, partition: SidePartition) -> DiscreteSpaces {
        build_spaces(build_rect_mesh(nx, ny, 1.0, 1.0, partition).unwrap()).unwrap()
    }

    /// Counts distinct geometric entities by brute-force enumeration of the
    /// triangle list.
    fn entity_count_oracle(mesh: &Mesh) -> (usize, usize) {
        let mut verts = std::collections::BTreeSet::new();
        let mut edges = std::collections::BTreeSet::new();
        for t in &mesh.triangles {
            for k in 0..3 {
                verts.insert(t[k]);
                let (a, b) = (t[k], t[(k + 1) % 3]);
                edges.insert((a.min(b), a.max(b)));
            }
        }
        (verts.len(), edges.len())
    }

    #[test]
    fn unit_square_dof_counts() {
        let s = spaces(1, 1, bottom_slip());
        let (v, e) = entity_count_oracle(s.mesh());
        assert_eq!(v + e, 9);
        assert_eq!(s.n_scalar(), 9);
        assert_eq!(s.n_velocity(), 18);
        assert_eq!(s.n_pressure(), 4);
        let sc = s.saddle_constraints();
        assert!(sc.contains(s.n_velocity() + PINNED_PRESSURE_DOF));
    }

    #[test]
    fn dirichlet_square_constrains_all_boundary_nodes() {
        let s = spaces(2, 2, SidePartition::uniform(SideCondition::Gamma0));
        // boundary P2 nodes by enumeration: points with a coordinate on the boundary
        let on_boundary = s
            .scalar_dof_points()
            .filter(|(_, p)| p[0] == 0.0 || p[0] == 1.0 || p[1] == 0.0 || p[1] == 1.0)
            .count();
        assert_eq!(on_boundary, 16);
        assert_eq!(s.velocity_constraints().len(), 2 * on_boundary);
    }

    #[test]
    fn slip_side_constrains_normal_component_only() {
        let s = spaces(2, 2, bottom_slip());
        // interior bottom nodes: x in {0.25, 0.5, 0.75}, y = 0
        for (dof, p) in s.scalar_dof_points() {
            if p[1] == 0.0 && p[0] > 0.0 && p[0] < 1.0 {
                assert!(!s.velocity_constraints().contains(2 * dof));
                assert!(s.velocity_constraints().contains(2 * dof + 1));
            }
            if p == [0.0, 0.0] || p == [1.0, 0.0] {
                assert!(s.velocity_constraints().contains(2 * dof));
                assert!(s.velocity_constraints().contains(2 * dof + 1));
            }
        }
    }

    #[test]
    fn duplicate_constraints_are_rejected() {
        assert!(ConstraintSet::new(vec![3, 1, 3]).is_err());
    }

    #[test]
    fn interpolation_of_constant_and_quadratic() {
        let s = spaces(3, 2, bottom_slip());
        assert!(s.interpolate_scalar(|_, _| 2.5).iter().all(|&c| c == 2.5));
        let c = s.interpolate_scalar(|x, _| x * x);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let p = [rng.random::<f64>(), rng.random::<f64>()];
            let v = s.eval_scalar_at(&c, p).unwrap();
            assert!((v - p[0] * p[0]).abs() <= 1e-13);
        }
    }

    #[test]
    fn p2_partition_of_unity() {
        let s = spaces(4, 3, bottom_slip());
        let ones = vec![1.0; s.n_scalar()];
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let p = [rng.random::<f64>(), rng.random::<f64>()];
            assert!((s.eval_scalar_at(&ones, p).unwrap() - 1.0).abs() <= 1e-13);
        }
    }

    #[test]
    fn constrained_fields_have_no_normal_flow_on_slip_edges() {
        let s = spaces(4, 4, bottom_slip());
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut u: Vec<f64> = (0..s.n_velocity()).map(|_| rng.random_range(-1.0..1.0)).collect();
        for &d in s.velocity_constraints().dofs() {
            u[d] = 0.0;
        }
        let mesh = s.mesh();
        for (e, tag) in mesh.edge_tags.iter().enumerate() {
            if *tag == BoundaryTag::Gamma1 {
                let frame = mesh.frame(e).unwrap();
                let v = s.eval_velocity_on_edge(&u, e, 0.5);
                let un = v[0] * frame.normal[0] + v[1] * frame.normal[1];
                assert!(un.abs() <= 1e-13);
            }
        }
    }

    #[test]
    fn reduction_of_identity_and_symmetry() {
        let a = CsrMatrix::identity(5);
        let c = ConstraintSet::new(vec![2]).unwrap();
        let r = apply_constraints(&a, &[1.0; 5], &c).unwrap();
        assert_eq!(r.matrix.nrows, 4);
        let sym = CsrMatrix::from_dense(&[
            vec![4.0, 1.0, 0.5],
            vec![1.0, 3.0, 0.2],
            vec![0.5, 0.2, 2.0],
        ]);
        let r = apply_constraints(&sym, &[1.0, 2.0, 3.0], &ConstraintSet::new(vec![1]).unwrap()).unwrap();
        assert_eq!(r.matrix.asymmetry(), 0.0);
        assert!(apply_constraints(&sym, &[1.0; 3], &ConstraintSet::new(vec![7]).unwrap()).is_err());
    }

    #[test]
    fn reduced_solve_matches_penalty_oracle() {
        let n = 12;
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut b = TripletBuilder::new(n, n);
        for i in 0..n {
            b.push(i, i, 4.0 + rng.random::<f64>());
            if i + 1 < n {
                let v = rng.random_range(-1.0..1.0);
                b.push(i, i + 1, v);
                b.push(i + 1, i, v);
            }
        }
        let a = b.build();
        let rhs: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let cons = ConstraintSet::new(vec![0, 5, 11]).unwrap();
        let red = apply_constraints(&a, &rhs, &cons).unwrap();
        let x = red.extend(&SparseLu::factor(&red.matrix).unwrap().solve(&red.rhs, 1e-14).unwrap().0);

        let mut pb = TripletBuilder::new(n, n);
        pb.push_matrix(&a, 0, 0, 1.0);
        for &d in cons.dofs() {
            pb.push(d, d, 1e12);
        }
        let penalized = pb.build();
        let (xp, _) = SparseLu::factor(&penalized).unwrap().solve(&rhs, 1e-12).unwrap();
        for (l, r) in x.iter().zip(&xp) {
            assert!((l - r).abs() <= 1e-6);
        }
    }

    #[test]
    fn periodic_channel_identifies_side_nodes() {
        let partition = SidePartition {
            bottom: SideCondition::Gamma1,
            top: SideCondition::Gamma0,
            left: SideCondition::Periodic,
            right: SideCondition::Periodic,
        };
        let s = build_spaces(build_rect_mesh(4, 2, 2.0, 1.0, partition).unwrap()).unwrap();
        // geometric P2 nodes: 9 x 5 = 45; periodic removes the 5 right-column nodes
        assert_eq!(s.n_scalar(), 40);
        assert_eq!(s.n_pressure(), 12);
        let c = s.interpolate_scalar(|x, y| (std::f64::consts::PI * x).cos() + y);
        let left = s.eval_scalar_at(&c, [0.0, 0.3]).unwrap();
        let right = s.eval_scalar_at(&c, [2.0, 0.3]).unwrap();
        assert!((left - right).abs() < 1e-14);
    }
}
