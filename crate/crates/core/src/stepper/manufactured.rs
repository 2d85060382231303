//! Smooth exact fields on the unit square and the forcing that makes them
//! solve the coupled system.
//!
//! `u = curl psi` with `psi = x^2 (1-x)^2 y^2 (1-y)^2`, vanishing with its
//! gradient on the boundary; `p = sin(pi x) cos(pi y)` (zero mean);
//! `C = cos(pi x) cos(pi y) exp(-t)`, which satisfies the Neumann condition.

use std::f64::consts::PI;

/// `q(s) = s^2 (1-s)^2` and its first three derivatives.
fn q(s: f64) -> [f64; 4] {
    [
        s * s * (1.0 - s) * (1.0 - s),
        2.0 * s * (1.0 - s) * (1.0 - 2.0 * s),
        2.0 - 12.0 * s + 12.0 * s * s,
        -12.0 + 24.0 * s,
    ]
}

/// Peak of `|q(x) q'(y)|` on the unit square.
pub const VORTEX_PEAK: f64 = 0.012_028_130_608_117_202;

pub fn stream_function(x: f64, y: f64) -> f64 {
    q(x)[0] * q(y)[0]
}

pub fn velocity(x: f64, y: f64) -> [f64; 2] {
    let (a, b) = (q(x), q(y));
    [a[0] * b[1], -a[1] * b[0]]
}

/// `[[du1/dx, du1/dy], [du2/dx, du2/dy]]`.
pub fn velocity_gradient(x: f64, y: f64) -> [[f64; 2]; 2] {
    let (a, b) = (q(x), q(y));
    [[a[1] * b[1], a[0] * b[2]], [-a[2] * b[0], -a[1] * b[1]]]
}

pub fn velocity_laplacian(x: f64, y: f64) -> [f64; 2] {
    let (a, b) = (q(x), q(y));
    [a[2] * b[1] + a[0] * b[3], -a[3] * b[0] - a[1] * b[2]]
}

pub fn pressure(x: f64, y: f64) -> f64 {
    (PI * x).sin() * (PI * y).cos()
}

pub fn pressure_gradient(x: f64, y: f64) -> [f64; 2] {
    [
        PI * (PI * x).cos() * (PI * y).cos(),
        -PI * (PI * x).sin() * (PI * y).sin(),
    ]
}

pub fn concentration(x: f64, y: f64, t: f64) -> f64 {
    (PI * x).cos() * (PI * y).cos() * (-t).exp()
}

pub fn concentration_gradient(x: f64, y: f64, t: f64) -> [f64; 2] {
    let a = (-t).exp();
    [
        -PI * a * (PI * x).sin() * (PI * y).cos(),
        -PI * a * (PI * x).cos() * (PI * y).sin(),
    ]
}

/// Hessian `[[C_xx, C_xy], [C_xy, C_yy]]`.
pub fn concentration_hessian(x: f64, y: f64, t: f64) -> [[f64; 2]; 2] {
    let c = concentration(x, y, t);
    let cxy = PI * PI * (-t).exp() * (PI * x).sin() * (PI * y).sin();
    [[-PI * PI * c, cxy], [cxy, -PI * PI * c]]
}

/// Divergence of the Korteweg tensor `k (|grad C|^2 I - grad C grad C^T)`,
/// which equals `k (H grad C - lap C grad C)`.
pub fn korteweg_divergence(grad: [f64; 2], hess: [[f64; 2]; 2], k: f64) -> [f64; 2] {
    let lap = hess[0][0] + hess[1][1];
    [
        k * (hess[0][0] * grad[0] + hess[0][1] * grad[1] - lap * grad[0]),
        k * (hess[1][0] * grad[0] + hess[1][1] * grad[1] - lap * grad[1]),
    ]
}

/// Body force `-nu lap u + (u . grad) u + grad p - Div K(C)` (the exact
/// velocity is steady).
pub fn force(x: f64, y: f64, t: f64, viscosity: f64, korteweg: f64) -> [f64; 2] {
    let u = velocity(x, y);
    let g = velocity_gradient(x, y);
    let lap = velocity_laplacian(x, y);
    let gp = pressure_gradient(x, y);
    let dk = korteweg_divergence(
        concentration_gradient(x, y, t),
        concentration_hessian(x, y, t),
        korteweg,
    );
    let mut out = [0.0; 2];
    for c in 0..2 {
        let conv = u[0] * g[c][0] + u[1] * g[c][1];
        out[c] = -viscosity * lap[c] + conv + gp[c] - dk[c];
    }
    out
}

/// Concentration source `C_t - d lap C + u . grad C - g C`.
pub fn concentration_source(x: f64, y: f64, t: f64, diffusivity: f64, g: f64) -> f64 {
    let c = concentration(x, y, t);
    let u = velocity(x, y);
    let gc = concentration_gradient(x, y, t);
    -c + 2.0 * PI * PI * diffusivity * c + u[0] * gc[0] + u[1] * gc[1] - g * c
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd<F: Fn(f64, f64) -> f64>(f: F, x: f64, y: f64) -> [f64; 2] {
        let h = 1e-5;
        [
            (f(x + h, y) - f(x - h, y)) / (2.0 * h),
            (f(x, y + h) - f(x, y - h)) / (2.0 * h),
        ]
    }

    #[test]
    fn velocity_is_curl_of_stream_function_and_divergence_free() {
        for &(x, y) in &[(0.3, 0.7), (0.61, 0.22), (0.5, 0.5)] {
            let d = fd(stream_function, x, y);
            let u = velocity(x, y);
            assert!((u[0] - d[1]).abs() < 1e-9 && (u[1] + d[0]).abs() < 1e-9);
            let g = velocity_gradient(x, y);
            assert!((g[0][0] + g[1][1]).abs() < 1e-15);
        }
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let (x, y, t) = (0.37, 0.81, 0.2);
        let g = velocity_gradient(x, y);
        for c in 0..2 {
            let d = fd(|a, b| velocity(a, b)[c], x, y);
            assert!((d[0] - g[c][0]).abs() < 1e-8 && (d[1] - g[c][1]).abs() < 1e-8);
        }
        let lap = velocity_laplacian(x, y);
        for c in 0..2 {
            let dx = fd(|a, b| velocity_gradient(a, b)[c][0], x, y)[0];
            let dy = fd(|a, b| velocity_gradient(a, b)[c][1], x, y)[1];
            assert!((dx + dy - lap[c]).abs() < 1e-7);
        }
        let gc = concentration_gradient(x, y, t);
        let d = fd(|a, b| concentration(a, b, t), x, y);
        assert!((d[0] - gc[0]).abs() < 1e-8 && (d[1] - gc[1]).abs() < 1e-8);
        let h = concentration_hessian(x, y, t);
        for r in 0..2 {
            let d = fd(|a, b| concentration_gradient(a, b, t)[r], x, y);
            assert!((d[0] - h[r][0]).abs() < 1e-7 && (d[1] - h[r][1]).abs() < 1e-7);
        }
    }

    #[test]
    fn vortex_peak_constant() {
        // max |q| = 1/16 at 1/2, max |q'| = sqrt(3)/9
        assert!((VORTEX_PEAK - 3f64.sqrt() / 144.0).abs() < 1e-17);
    }
}
