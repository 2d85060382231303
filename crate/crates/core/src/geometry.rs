//! Structured triangulations of an axis-aligned rectangle.
//!
//! Nodes are numbered row by row, `node(i, j) = j * (nx + 1) + i`. Each cell
//! is split along the diagonal from its lower-left to its upper-right corner,
//! giving two counterclockwise triangles per cell. Boundary edges are stored
//! in counterclockwise traversal order of the boundary, so the outward normal
//! of an edge from `a` to `b` is the clockwise rotation of `b - a`.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Side {
    Bottom,
    Right,
    Top,
    Left,
}

impl Side {
    pub const ALL: [Side; 4] = [Side::Bottom, Side::Right, Side::Top, Side::Left];

    pub fn outward_normal(self) -> [f64; 2] {
        match self {
            Side::Bottom => [0.0, -1.0],
            Side::Right => [1.0, 0.0],
            Side::Top => [0.0, 1.0],
            Side::Left => [-1.0, 0.0],
        }
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Side::Bottom => "bottom",
            Side::Right => "right",
            Side::Top => "top",
            Side::Left => "left",
        };
        f.write_str(name)
    }
}

/// Boundary label: `Gamma0` carries the no-slip condition, `Gamma1` the
/// no-leak friction law.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BoundaryTag {
    Gamma0,
    Gamma1,
}

/// What a side of the rectangle is. `Periodic` is only accepted on the
/// left/right pair and identifies the two sides.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SideCondition {
    Gamma0,
    Gamma1,
    Periodic,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SidePartition {
    pub bottom: SideCondition,
    pub right: SideCondition,
    pub top: SideCondition,
    pub left: SideCondition,
}

impl SidePartition {
    pub fn uniform(condition: SideCondition) -> Self {
        SidePartition {
            bottom: condition,
            right: condition,
            top: condition,
            left: condition,
        }
    }

    /// Builds a partition from explicit side assignments; every side must be
    /// assigned exactly once.
    pub fn from_pairs(pairs: &[(Side, SideCondition)]) -> Result<Self> {
        let mut map = HashMap::new();
        for &(side, cond) in pairs {
            if map.insert(side, cond).is_some() {
                return Err(Error::Geometry(format!("side {side} assigned twice")));
            }
        }
        let get = |side: Side| {
            map.get(&side)
                .copied()
                .ok_or_else(|| Error::Geometry(format!("side {side} is not assigned a boundary tag")))
        };
        Ok(SidePartition {
            bottom: get(Side::Bottom)?,
            right: get(Side::Right)?,
            top: get(Side::Top)?,
            left: get(Side::Left)?,
        })
    }

    pub fn get(&self, side: Side) -> SideCondition {
        match side {
            Side::Bottom => self.bottom,
            Side::Right => self.right,
            Side::Top => self.top,
            Side::Left => self.left,
        }
    }

    pub fn is_periodic_x(&self) -> bool {
        self.left == SideCondition::Periodic
    }

    pub fn validate(&self) -> Result<()> {
        if self.top == SideCondition::Periodic || self.bottom == SideCondition::Periodic {
            return Err(Error::Geometry(
                "periodicity is only supported between the left and right sides".into(),
            ));
        }
        if (self.left == SideCondition::Periodic) != (self.right == SideCondition::Periodic) {
            return Err(Error::Geometry(
                "left and right sides must both be periodic or neither".into(),
            ));
        }
        if !Side::ALL
            .iter()
            .any(|&s| self.get(s) == SideCondition::Gamma0)
        {
            return Err(Error::Geometry(
                "no side is tagged Gamma0; the no-slip part must have positive length".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundaryEdge {
    /// Endpoints in counterclockwise boundary order.
    pub nodes: [usize; 2],
    pub owner: usize,
    pub side: Side,
}

/// Outward unit normal and tangent `tangent = (-normal[1], normal[0])`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundaryFrame {
    pub normal: [f64; 2],
    pub tangent: [f64; 2],
}

impl BoundaryFrame {
    pub fn from_normal(normal: [f64; 2]) -> Self {
        BoundaryFrame {
            normal,
            tangent: [-normal[1], normal[0]],
        }
    }
}

#[derive(Clone, Debug)]
pub struct Mesh {
    pub nodes: Vec<[f64; 2]>,
    pub triangles: Vec<[usize; 3]>,
    pub boundary_edges: Vec<BoundaryEdge>,
    pub edge_tags: Vec<BoundaryTag>,
    nx: usize,
    ny: usize,
    lx: f64,
    ly: f64,
    partition: SidePartition,
    edge_lookup: HashMap<(usize, usize), usize>,
}

pub fn build_rect_mesh(
    nx: usize,
    ny: usize,
    lx: f64,
    ly: f64,
    partition: SidePartition,
) -> Result<Mesh> {
    if nx == 0 || ny == 0 {
        return Err(Error::Geometry(format!(
            "cell counts must be at least 1, got nx = {nx}, ny = {ny}"
        )));
    }
    if !(lx > 0.0 && ly > 0.0 && lx.is_finite() && ly.is_finite()) {
        return Err(Error::Geometry(format!(
            "side lengths must be positive, got lx = {lx}, ly = {ly}"
        )));
    }
    partition.validate()?;

    let node = |i: usize, j: usize| j * (nx + 1) + i;
    let mut nodes = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            nodes.push([lx * i as f64 / nx as f64, ly * j as f64 / ny as f64]);
        }
    }
    let mut triangles = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let (n00, n10, n11, n01) = (node(i, j), node(i + 1, j), node(i + 1, j + 1), node(i, j + 1));
            triangles.push([n00, n10, n11]);
            triangles.push([n00, n11, n01]);
        }
    }
    let lower = |i: usize, j: usize| 2 * (j * nx + i);
    let upper = |i: usize, j: usize| 2 * (j * nx + i) + 1;

    let mut boundary_edges = Vec::new();
    let periodic = partition.is_periodic_x();
    for i in 0..nx {
        boundary_edges.push(BoundaryEdge {
            nodes: [node(i, 0), node(i + 1, 0)],
            owner: lower(i, 0),
            side: Side::Bottom,
        });
    }
    if !periodic {
        for j in 0..ny {
            boundary_edges.push(BoundaryEdge {
                nodes: [node(nx, j), node(nx, j + 1)],
                owner: lower(nx - 1, j),
                side: Side::Right,
            });
        }
    }
    for i in (0..nx).rev() {
        boundary_edges.push(BoundaryEdge {
            nodes: [node(i + 1, ny), node(i, ny)],
            owner: upper(i, ny - 1),
            side: Side::Top,
        });
    }
    if !periodic {
        for j in (0..ny).rev() {
            boundary_edges.push(BoundaryEdge {
                nodes: [node(0, j + 1), node(0, j)],
                owner: upper(0, j),
                side: Side::Left,
            });
        }
    }

    let edge_lookup = boundary_edges
        .iter()
        .enumerate()
        .map(|(e, edge)| (edge_key(edge.nodes[0], edge.nodes[1]), e))
        .collect();

    let mut mesh = Mesh {
        nodes,
        triangles,
        boundary_edges,
        edge_tags: Vec::new(),
        nx,
        ny,
        lx,
        ly,
        partition,
        edge_lookup,
    };
    mesh.edge_tags = classify_boundary(&mesh, &partition)?;
    Ok(mesh)
}

/// Tags every boundary edge from the side it lies on.
pub fn classify_boundary(mesh: &Mesh, partition: &SidePartition) -> Result<Vec<BoundaryTag>> {
    partition.validate()?;
    if partition.is_periodic_x() != mesh.partition.is_periodic_x() {
        return Err(Error::Geometry(
            "periodicity of the partition does not match the mesh".into(),
        ));
    }
    let tags: Vec<BoundaryTag> = mesh
        .boundary_edges
        .iter()
        .map(|edge| match partition.get(edge.side) {
            SideCondition::Gamma0 => Ok(BoundaryTag::Gamma0),
            SideCondition::Gamma1 => Ok(BoundaryTag::Gamma1),
            SideCondition::Periodic => Err(Error::Geometry(format!(
                "side {} is periodic but carries boundary edges",
                edge.side
            ))),
        })
        .collect::<Result<_>>()?;
    let gamma0_length: f64 = mesh
        .boundary_edges
        .iter()
        .zip(&tags)
        .filter(|(_, &t)| t == BoundaryTag::Gamma0)
        .map(|(e, _)| mesh.edge_length(e))
        .sum();
    if gamma0_length <= 0.0 {
        return Err(Error::Geometry("Gamma0 has zero length".into()));
    }
    Ok(tags)
}

fn edge_key(a: usize, b: usize) -> (usize, usize) {
    (a.min(b), a.max(b))
}

impl Mesh {
    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn lx(&self) -> f64 {
        self.lx
    }

    pub fn ly(&self) -> f64 {
        self.ly
    }

    pub fn area(&self) -> f64 {
        self.lx * self.ly
    }

    pub fn partition(&self) -> &SidePartition {
        &self.partition
    }

    pub fn is_periodic_x(&self) -> bool {
        self.partition.is_periodic_x()
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn node_index(&self, i: usize, j: usize) -> usize {
        j * (self.nx + 1) + i
    }

    /// Node identified with `n` under the periodic map (right column onto the
    /// left column); identity otherwise.
    pub fn periodic_image(&self, n: usize) -> usize {
        if self.is_periodic_x() && n % (self.nx + 1) == self.nx {
            n - self.nx
        } else {
            n
        }
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t];
        let (pa, pb, pc) = (self.nodes[a], self.nodes[b], self.nodes[c]);
        0.5 * ((pb[0] - pa[0]) * (pc[1] - pa[1]) - (pc[0] - pa[0]) * (pb[1] - pa[1]))
    }

    pub fn edge_length(&self, edge: &BoundaryEdge) -> f64 {
        let (p, q) = (self.nodes[edge.nodes[0]], self.nodes[edge.nodes[1]]);
        (q[0] - p[0]).hypot(q[1] - p[1])
    }

    pub fn tag_length(&self, tag: BoundaryTag) -> f64 {
        self.boundary_edges
            .iter()
            .zip(&self.edge_tags)
            .filter(|(_, &t)| t == tag)
            .map(|(e, _)| self.edge_length(e))
            .sum()
    }

    /// Frame of boundary edge `edge` (index into `boundary_edges`).
    pub fn frame(&self, edge: usize) -> Result<BoundaryFrame> {
        let e = self
            .boundary_edges
            .get(edge)
            .ok_or_else(|| Error::Geometry(format!("{edge} is not a boundary edge index")))?;
        let (p, q) = (self.nodes[e.nodes[0]], self.nodes[e.nodes[1]]);
        let len = (q[0] - p[0]).hypot(q[1] - p[1]);
        let normal = [(q[1] - p[1]) / len, -(q[0] - p[0]) / len];
        Ok(BoundaryFrame::from_normal(normal))
    }

    /// Frame of the edge joining nodes `a` and `b`; fails for interior edges.
    pub fn boundary_frame(&self, a: usize, b: usize) -> Result<BoundaryFrame> {
        match self.edge_lookup.get(&edge_key(a, b)) {
            Some(&e) => self.frame(e),
            None => Err(Error::Geometry(format!(
                "edge ({a}, {b}) is not a boundary edge"
            ))),
        }
    }

    pub fn contains(&self, p: [f64; 2]) -> bool {
        p[0] >= 0.0 && p[0] <= self.lx && p[1] >= 0.0 && p[1] <= self.ly
    }

    /// Triangle containing `p` and its barycentric coordinates. Points on
    /// shared edges resolve to the lower-index cell.
    pub fn locate(&self, p: [f64; 2]) -> Option<(usize, [f64; 3])> {
        if !self.contains(p) {
            return None;
        }
        let hx = self.lx / self.nx as f64;
        let hy = self.ly / self.ny as f64;
        let i = ((p[0] / hx).floor() as usize).min(self.nx - 1);
        let j = ((p[1] / hy).floor() as usize).min(self.ny - 1);
        let s = p[0] / hx - i as f64;
        let t = p[1] / hy - j as f64;
        let cell = j * self.nx + i;
        // lower triangle (n00, n10, n11): s >= t
        if s >= t {
            Some((2 * cell, [1.0 - s, s - t, t]))
        } else {
            Some((2 * cell + 1, [1.0 - t, s, t - s]))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bottom_slip() -> SidePartition {
        SidePartition {
            bottom: SideCondition::Gamma1,
            ..SidePartition::uniform(SideCondition::Gamma0)
        }
    }

    #[test]
    fn smallest_mesh_counts() {
        let mesh = build_rect_mesh(1, 1, 1.0, 1.0, bottom_slip()).unwrap();
        assert_eq!(mesh.num_nodes(), 4);
        assert_eq!(mesh.num_triangles(), 2);
        assert_eq!(mesh.boundary_edges.len(), 4);
        let gamma1 = mesh.edge_tags.iter().filter(|&&t| t == BoundaryTag::Gamma1).count();
        assert_eq!(gamma1, 1);
    }

    #[test]
    fn two_by_two_counts() {
        let mesh = build_rect_mesh(2, 2, 1.0, 1.0, bottom_slip()).unwrap();
        assert_eq!(mesh.num_nodes(), 9);
        assert_eq!(mesh.num_triangles(), 8);
        assert_eq!(mesh.boundary_edges.len(), 8);
        let gamma1 = mesh.edge_tags.iter().filter(|&&t| t == BoundaryTag::Gamma1).count();
        assert_eq!(gamma1, 2);
    }

    #[test]
    fn rejects_zero_cells_and_all_slip() {
        assert!(build_rect_mesh(0, 3, 1.0, 1.0, bottom_slip()).is_err());
        let err = build_rect_mesh(2, 2, 1.0, 1.0, SidePartition::uniform(SideCondition::Gamma1))
            .unwrap_err();
        assert!(err.to_string().contains("Gamma0"), "{err}");
    }

    #[test]
    fn pure_dirichlet_is_valid() {
        let mesh =
            build_rect_mesh(3, 2, 1.0, 1.0, SidePartition::uniform(SideCondition::Gamma0)).unwrap();
        assert!(mesh.edge_tags.iter().all(|&t| t == BoundaryTag::Gamma0));
    }

    #[test]
    fn uncovered_side_is_rejected() {
        let err = SidePartition::from_pairs(&[
            (Side::Bottom, SideCondition::Gamma1),
            (Side::Top, SideCondition::Gamma0),
            (Side::Left, SideCondition::Gamma0),
        ])
        .unwrap_err();
        assert!(err.to_string().contains("right"));
    }

    #[test]
    fn frames_on_unit_square() {
        let mesh = build_rect_mesh(1, 1, 1.0, 1.0, bottom_slip()).unwrap();
        let bottom = mesh.boundary_frame(0, 1).unwrap();
        assert_eq!(bottom.normal, [0.0, -1.0]);
        assert_eq!(bottom.tangent, [1.0, 0.0]);
        let right = mesh.boundary_frame(1, 3).unwrap();
        assert_eq!(right.normal, [1.0, 0.0]);
        assert_eq!(right.tangent, [0.0, 1.0]);
        // the diagonal is interior
        assert!(mesh.boundary_frame(0, 3).is_err());
        assert!(mesh.frame(17).is_err());
    }

    #[test]
    fn periodic_channel_drops_side_edges() {
        let partition = SidePartition {
            bottom: SideCondition::Gamma1,
            top: SideCondition::Gamma0,
            left: SideCondition::Periodic,
            right: SideCondition::Periodic,
        };
        let mesh = build_rect_mesh(4, 2, 2.0, 1.0, partition).unwrap();
        assert_eq!(mesh.boundary_edges.len(), 8);
        assert_eq!(mesh.periodic_image(mesh.node_index(4, 1)), mesh.node_index(0, 1));
        assert_eq!(mesh.periodic_image(mesh.node_index(3, 1)), mesh.node_index(3, 1));
        let half = SidePartition {
            left: SideCondition::Periodic,
            ..SidePartition::uniform(SideCondition::Gamma0)
        };
        assert!(build_rect_mesh(2, 2, 1.0, 1.0, half).is_err());
    }

    #[test]
    fn locate_returns_consistent_barycentrics() {
        let mesh = build_rect_mesh(3, 5, 2.0, 1.5, bottom_slip()).unwrap();
        for &p in &[[0.1, 0.2], [1.99, 1.49], [0.0, 0.0], [2.0, 1.5], [1.0, 0.75]] {
            let (t, bary) = mesh.locate(p).unwrap();
            let tri = mesh.triangles[t];
            let mut q = [0.0; 2];
            for k in 0..3 {
                assert!(bary[k] >= -1e-12);
                q[0] += bary[k] * mesh.nodes[tri[k]][0];
                q[1] += bary[k] * mesh.nodes[tri[k]][1];
            }
            assert!((q[0] - p[0]).abs() < 1e-12 && (q[1] - p[1]).abs() < 1e-12);
        }
        assert!(mesh.locate([2.1, 0.0]).is_none());
    }
}
