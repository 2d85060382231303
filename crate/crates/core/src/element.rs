//! Lagrange P1/P2 shape functions on a physical triangle, written in
//! barycentric coordinates.
//!
//! Local P2 numbering: vertices 0, 1, 2, then the midpoints of edges
//! (0,1), (1,2), (2,0).

pub const P2_EDGES: [[usize; 2]; 3] = [[0, 1], [1, 2], [2, 0]];

#[derive(Clone, Copy, Debug)]
pub struct Triangle {
    pub vertices: [[f64; 2]; 3],
    pub area: f64,
    /// Gradients of the barycentric coordinates (constant on the triangle).
    pub grad_lambda: [[f64; 2]; 3],
}

impl Triangle {
    pub fn new(vertices: [[f64; 2]; 3]) -> Self {
        let [p0, p1, p2] = vertices;
        let det = (p1[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (p1[1] - p0[1]);
        let area = 0.5 * det;
        let mut grad_lambda = [[0.0; 2]; 3];
        for i in 0..3 {
            let a = vertices[(i + 1) % 3];
            let b = vertices[(i + 2) % 3];
            grad_lambda[i] = [(a[1] - b[1]) / det, (b[0] - a[0]) / det];
        }
        Triangle {
            vertices,
            area,
            grad_lambda,
        }
    }

    pub fn point(&self, bary: &[f64; 3]) -> [f64; 2] {
        let mut x = [0.0; 2];
        for (l, v) in bary.iter().zip(&self.vertices) {
            x[0] += l * v[0];
            x[1] += l * v[1];
        }
        x
    }

    pub fn p1_values(&self, bary: &[f64; 3]) -> [f64; 3] {
        *bary
    }

    pub fn p2_values(&self, l: &[f64; 3]) -> [f64; 6] {
        [
            l[0] * (2.0 * l[0] - 1.0),
            l[1] * (2.0 * l[1] - 1.0),
            l[2] * (2.0 * l[2] - 1.0),
            4.0 * l[0] * l[1],
            4.0 * l[1] * l[2],
            4.0 * l[2] * l[0],
        ]
    }

    pub fn p2_gradients(&self, l: &[f64; 3]) -> [[f64; 2]; 6] {
        let g = &self.grad_lambda;
        let mut out = [[0.0; 2]; 6];
        for i in 0..3 {
            let s = 4.0 * l[i] - 1.0;
            out[i] = [s * g[i][0], s * g[i][1]];
        }
        for (k, &[a, b]) in P2_EDGES.iter().enumerate() {
            out[3 + k] = [
                4.0 * (l[a] * g[b][0] + l[b] * g[a][0]),
                4.0 * (l[a] * g[b][1] + l[b] * g[a][1]),
            ];
        }
        out
    }

    /// Laplacians of the P2 shape functions (constant per triangle).
    pub fn p2_laplacians(&self) -> [f64; 6] {
        let g = &self.grad_lambda;
        let dot = |a: usize, b: usize| g[a][0] * g[b][0] + g[a][1] * g[b][1];
        let mut out = [0.0; 6];
        for i in 0..3 {
            out[i] = 4.0 * dot(i, i);
        }
        for (k, &[a, b]) in P2_EDGES.iter().enumerate() {
            out[3 + k] = 8.0 * dot(a, b);
        }
        out
    }

    /// Barycentric coordinates of the six P2 nodes.
    pub fn p2_node_barycentrics() -> [[f64; 3]; 6] {
        [
            [1.0, 0.0, 0.0],
            [0.0, 1.0, 0.0],
            [0.0, 0.0, 1.0],
            [0.5, 0.5, 0.0],
            [0.0, 0.5, 0.5],
            [0.5, 0.0, 0.5],
        ]
    }
}

/// Quadratic Lagrange basis on an edge parametrized by `t` in `[0, 1]`,
/// ordered (start, end, midpoint).
pub fn edge_p2_values(t: f64) -> [f64; 3] {
    [
        (1.0 - t) * (1.0 - 2.0 * t),
        t * (2.0 * t - 1.0),
        4.0 * t * (1.0 - t),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Triangle {
        Triangle::new([[0.2, 0.1], [1.3, 0.4], [0.5, 1.2]])
    }

    #[test]
    fn p2_is_nodal() {
        let tri = sample();
        for (i, b) in Triangle::p2_node_barycentrics().iter().enumerate() {
            let v = tri.p2_values(b);
            for (j, &vj) in v.iter().enumerate() {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((vj - expect).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn gradients_match_finite_differences() {
        let tri = sample();
        let l = [0.2, 0.5, 0.3];
        let x = tri.point(&l);
        let grads = tri.p2_gradients(&l);
        let h = 1e-6;
        // convert a physical displacement to barycentric increments
        let shift = |dx: [f64; 2]| {
            let mut out = l;
            for i in 0..3 {
                out[i] += tri.grad_lambda[i][0] * dx[0] + tri.grad_lambda[i][1] * dx[1];
            }
            out
        };
        let _ = x;
        for d in 0..2 {
            let mut dx = [0.0; 2];
            dx[d] = h;
            let vp = tri.p2_values(&shift(dx));
            dx[d] = -h;
            let vm = tri.p2_values(&shift(dx));
            for k in 0..6 {
                let fd = (vp[k] - vm[k]) / (2.0 * h);
                assert!((fd - grads[k][d]).abs() < 1e-7, "k={k} d={d}");
            }
        }
    }

    #[test]
    fn laplacian_of_reproduced_quadratic() {
        // x^2 interpolated by P2 has Laplacian 2 on every triangle
        let tri = sample();
        let lap = tri.p2_laplacians();
        let nodes = Triangle::p2_node_barycentrics();
        let total: f64 = (0..6)
            .map(|k| {
                let p = tri.point(&nodes[k]);
                p[0] * p[0] * lap[k]
            })
            .sum();
        assert!((total - 2.0).abs() < 1e-12);
    }
}
