//! Gauss-Legendre rules on intervals and collapsed (Duffy) product rules on
//! triangles.

use std::f64::consts::PI;

/// Nodes and weights of the `n`-point Gauss-Legendre rule on `[-1, 1]`,
/// nodes in increasing order.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "Gauss-Legendre rule needs at least one point");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Tricomi initial guess, refined by Newton on P_n.
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let (p, pm1) = if n == 0 { (1.0, 0.0) } else { (p1, p0) };
    let d = n as f64 * (x * p - pm1) / (x * x - 1.0);
    (p, d)
}

/// Gauss-Legendre rule mapped to `[a, b]`.
#[derive(Clone, Debug)]
pub struct LineRule {
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
}

impl LineRule {
    pub fn gauss(n: usize, a: f64, b: f64) -> Self {
        let (x, w) = gauss_legendre(n);
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        LineRule {
            points: x.iter().map(|&t| mid + half * t).collect(),
            weights: w.iter().map(|&wi| half * wi).collect(),
        }
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.points
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }
}

/// Quadrature on a triangle in barycentric coordinates; weights sum to 1 so
/// that an integral is `area * sum(w_q f(x_q))`.
#[derive(Clone, Debug)]
pub struct TriangleRule {
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
    pub degree: usize,
}

impl TriangleRule {
    /// Collapsed Gauss product rule exact for polynomials of total degree
    /// `degree`.
    pub fn with_degree(degree: usize) -> Self {
        // the collapse Jacobian adds one degree in the radial direction
        let n = (degree + 2).div_ceil(2).max(1);
        let (x, w) = gauss_legendre(n);
        let mut points = Vec::with_capacity(n * n);
        let mut weights = Vec::with_capacity(n * n);
        for (&xa, &wa) in x.iter().zip(&w) {
            let a = 0.5 * (xa + 1.0);
            for (&xb, &wb) in x.iter().zip(&w) {
                let b = 0.5 * (xb + 1.0);
                let l1 = a;
                let l2 = b * (1.0 - a);
                points.push([1.0 - l1 - l2, l1, l2]);
                // reference area 1/2 -> normalize to 1
                weights.push(0.25 * wa * wb * (1.0 - a) * 2.0);
            }
        }
        TriangleRule {
            points,
            weights,
            degree,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_monomials() {
        for n in 1..=20 {
            let (x, w) = gauss_legendre(n);
            for p in 0..2 * n {
                let approx: f64 = x.iter().zip(&w).map(|(&xi, &wi)| wi * xi.powi(p as i32)).sum();
                let exact = if p % 2 == 1 { 0.0 } else { 2.0 / (p as f64 + 1.0) };
                assert!((approx - exact).abs() < 1e-13, "n={n} p={p}: {approx} vs {exact}");
            }
        }
    }

    fn factorial(n: u32) -> f64 {
        (1..=n).map(f64::from).product()
    }

    #[test]
    fn triangle_rules_are_exact_to_their_degree() {
        for degree in 1..=12 {
            let rule = TriangleRule::with_degree(degree);
            for p in 0..=degree as u32 {
                for q in 0..=(degree as u32 - p) {
                    // integral over the reference triangle of x^p y^q, relative to area 1/2
                    let exact = 2.0 * factorial(p) * factorial(q) / factorial(p + q + 2);
                    let approx: f64 = rule
                        .points
                        .iter()
                        .zip(&rule.weights)
                        .map(|(l, &w)| w * l[1].powi(p as i32) * l[2].powi(q as i32))
                        .sum();
                    assert!((approx - exact).abs() < 1e-14, "deg {degree}: x^{p} y^{q}");
                }
            }
        }
    }
}
