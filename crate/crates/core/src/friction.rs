//! Nonmonotone slip laws on the friction boundary.
//!
//! A law is an even potential `j` of the signed tangential slip `s`, so its
//! a.e. derivative is `j'(s) = sign(s) phi(|s|)` for a nonnegative profile
//! `phi`. Where `phi` jumps (and at `s = 0` when `phi(0+) > 0`) the Clarke
//! subgradient is the interval between the one-sided limits.
//!
//! [`MollifiedLaw`] convolves `j'` with the scaled bump
//! `rho_m(z) = m rho(m z)`, `rho(x) = exp(1 / (x^2 - 1)) / Z` on `(-1, 1)`,
//! which yields a single-valued, globally Lipschitz traction `Dj_m`.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::element::edge_p2_values;
use crate::geometry::BoundaryTag;
use crate::linalg::TripletBuilder;
use crate::quadrature::{gauss_legendre, LineRule};
use crate::spaces::DiscreteSpaces;
use crate::{Error, Result};

/// One linear piece of a piecewise profile, valid from `start` up to the
/// next segment's start (the last one extends to infinity).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Segment {
    pub start: f64,
    pub value: f64,
    pub slope: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum LawKind {
    /// `phi(r) = mu_s + (mu0 - mu_s) exp(-alpha r)`.
    ExpDecay { mu_s: f64, mu0: f64, alpha: f64 },
    /// Teeth of width `width` falling linearly from `mu_hi` to `mu_lo`, with an
    /// upward jump back to `mu_hi` at every multiple of `width`.
    Sawtooth { mu_hi: f64, mu_lo: f64, width: f64 },
    Piecewise { segments: Vec<Segment> },
}

#[derive(Clone, Debug, PartialEq)]
pub struct FrictionLaw {
    kind: LawKind,
    m0: f64,
    m1: f64,
}

impl FrictionLaw {
    pub fn exp_decay(mu_s: f64, mu0: f64, alpha: f64) -> Result<Self> {
        if !(mu_s > 0.0 && mu0 >= mu_s && alpha > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "exp-decay law needs mu0 >= mu_s > 0 and alpha > 0, got mu_s = {mu_s}, mu0 = {mu0}, alpha = {alpha}"
            )));
        }
        Ok(FrictionLaw {
            kind: LawKind::ExpDecay { mu_s, mu0, alpha },
            m0: mu0,
            m1: alpha * (mu0 - mu_s),
        })
    }

    pub fn sawtooth(mu_hi: f64, mu_lo: f64, width: f64) -> Result<Self> {
        if !(mu_lo >= 0.0 && mu_hi >= mu_lo && mu_hi > 0.0 && width > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "sawtooth law needs mu_hi >= mu_lo >= 0, mu_hi > 0 and width > 0, got {mu_hi}, {mu_lo}, {width}"
            )));
        }
        Ok(FrictionLaw {
            kind: LawKind::Sawtooth { mu_hi, mu_lo, width },
            m0: mu_hi,
            m1: (mu_hi - mu_lo) / width,
        })
    }

    /// Piecewise-linear profile with explicit growth and relaxed-monotonicity
    /// constants.
    pub fn piecewise(segments: Vec<Segment>, m0: f64, m1: f64) -> Result<Self> {
        if segments.first().map(|s| s.start) != Some(0.0) {
            return Err(Error::InvalidArgument(
                "piecewise law must start with a segment at 0".into(),
            ));
        }
        if segments.windows(2).any(|w| !(w[1].start > w[0].start)) {
            return Err(Error::InvalidArgument(
                "piecewise segment starts must increase strictly".into(),
            ));
        }
        if segments.iter().any(|s| !(s.start.is_finite() && s.value.is_finite() && s.slope.is_finite())) {
            return Err(Error::InvalidArgument("piecewise law has non-finite data".into()));
        }
        Ok(FrictionLaw {
            kind: LawKind::Piecewise { segments },
            m0,
            m1,
        })
    }

    pub fn from_kind(kind: LawKind) -> Result<Self> {
        match kind {
            LawKind::ExpDecay { mu_s, mu0, alpha } => Self::exp_decay(mu_s, mu0, alpha),
            LawKind::Sawtooth { mu_hi, mu_lo, width } => Self::sawtooth(mu_hi, mu_lo, width),
            LawKind::Piecewise { segments } => {
                // conservative defaults: sup of |phi| slope-wise bounds
                let m0 = segments
                    .iter()
                    .map(|s| s.value.abs() + s.slope.abs())
                    .fold(0.0, f64::max);
                let m1 = segments
                    .iter()
                    .map(|s| (-s.slope).max(0.0))
                    .fold(0.0, f64::max);
                Self::piecewise(segments, m0, m1)
            }
        }
    }

    /// Replaces the stored growth and relaxed-monotonicity constants.
    pub fn with_constants(mut self, m0: f64, m1: f64) -> Self {
        self.m0 = m0;
        self.m1 = m1;
        self
    }

    pub fn kind(&self) -> &LawKind {
        &self.kind
    }

    pub fn m0(&self) -> f64 {
        self.m0
    }

    pub fn m1(&self) -> f64 {
        self.m1
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            LawKind::ExpDecay { .. } => "exp-decay",
            LawKind::Sawtooth { .. } => "sawtooth",
            LawKind::Piecewise { .. } => "piecewise",
        }
    }

    /// Right limit `phi(r+)` for `r >= 0`.
    fn phi_right(&self, r: f64) -> f64 {
        match &self.kind {
            LawKind::ExpDecay { mu_s, mu0, alpha } => mu_s + (mu0 - mu_s) * (-alpha * r).exp(),
            LawKind::Sawtooth { mu_hi, mu_lo, width } => {
                let (_, frac) = tooth(r, *width);
                mu_hi - (mu_hi - mu_lo) * frac
            }
            LawKind::Piecewise { segments } => {
                let s = &segments[segment_index(segments, r)];
                s.value + s.slope * (r - s.start)
            }
        }
    }

    /// Left limit `phi(r-)` for `r > 0`.
    fn phi_left(&self, r: f64) -> f64 {
        match &self.kind {
            LawKind::ExpDecay { .. } => self.phi_right(r),
            LawKind::Sawtooth { mu_hi, mu_lo, width } => {
                let (n, frac) = tooth(r, *width);
                if n >= 1 && frac == 0.0 {
                    *mu_lo
                } else {
                    mu_hi - (mu_hi - mu_lo) * frac
                }
            }
            LawKind::Piecewise { segments } => {
                let i = segment_index(segments, r);
                if i > 0 && segments[i].start == r {
                    let p = &segments[i - 1];
                    p.value + p.slope * (r - p.start)
                } else {
                    self.phi_right(r)
                }
            }
        }
    }

    /// `phi'(r)` away from breakpoints.
    fn phi_slope(&self, r: f64) -> f64 {
        match &self.kind {
            LawKind::ExpDecay { mu_s, mu0, alpha } => -alpha * (mu0 - mu_s) * (-alpha * r).exp(),
            LawKind::Sawtooth { mu_hi, mu_lo, width } => -(mu_hi - mu_lo) / width,
            LawKind::Piecewise { segments } => segments[segment_index(segments, r)].slope,
        }
    }

    /// A.e. derivative `j'(s)`; zero at `s = 0`, right limits at kinks.
    pub fn derivative(&self, s: f64) -> f64 {
        if s > 0.0 {
            self.phi_right(s)
        } else if s < 0.0 {
            -self.phi_right(-s)
        } else {
            0.0
        }
    }

    /// A.e. second derivative `j''(s) = phi'(|s|)`.
    pub fn second_derivative(&self, s: f64) -> f64 {
        self.phi_slope(s.abs())
    }

    /// Potential `j(s)`, with `j(0) = 0`.
    pub fn potential(&self, s: f64) -> f64 {
        let r = s.abs();
        match &self.kind {
            LawKind::ExpDecay { mu_s, mu0, alpha } => {
                mu_s * r + (mu0 - mu_s) * (1.0 - (-alpha * r).exp()) / alpha
            }
            LawKind::Sawtooth { mu_hi, mu_lo, width } => {
                let (n, frac) = tooth(r, *width);
                let full = n as f64 * width * 0.5 * (mu_hi + mu_lo);
                let x = frac * width;
                full + mu_hi * x - 0.5 * (mu_hi - mu_lo) * x * x / width
            }
            LawKind::Piecewise { segments } => {
                let mut total = 0.0;
                for (i, seg) in segments.iter().enumerate() {
                    if r <= seg.start {
                        break;
                    }
                    let end = segments.get(i + 1).map_or(r, |n| n.start.min(r));
                    let x = end - seg.start;
                    total += seg.value * x + 0.5 * seg.slope * x * x;
                }
                total
            }
        }
    }

    /// Sorted points in the open interval `(a, b)` where `j'` is
    /// discontinuous or `j''` jumps.
    pub fn breakpoints_between(&self, a: f64, b: f64) -> Vec<f64> {
        let mut out = Vec::new();
        let mut positive = Vec::new();
        let hi = a.abs().max(b.abs());
        match &self.kind {
            LawKind::ExpDecay { .. } => {}
            LawKind::Sawtooth { width, .. } => {
                let mut n = 1usize;
                while (n as f64) * width < hi {
                    positive.push(n as f64 * width);
                    n += 1;
                }
            }
            LawKind::Piecewise { segments } => {
                positive.extend(segments.iter().skip(1).map(|s| s.start).filter(|&r| r < hi));
            }
        }
        out.extend(positive.iter().rev().map(|&r| -r));
        out.push(0.0);
        out.extend(positive);
        out.retain(|&x| x > a && x < b);
        out
    }

    /// `j'(x+) - j'(x-)` at a breakpoint `x`.
    fn jump(&self, x: f64) -> f64 {
        if x == 0.0 {
            2.0 * self.phi_right(0.0)
        } else {
            let r = x.abs();
            self.phi_right(r) - self.phi_left(r)
        }
    }

    /// Clarke generalized gradient `[lo, hi]` of `j` at `s`.
    pub fn clarke_interval(&self, s: f64) -> (f64, f64) {
        if s == 0.0 {
            let p = self.phi_right(0.0);
            return (-p, p);
        }
        let r = s.abs();
        let (l, rr) = (self.phi_left(r), self.phi_right(r));
        let (lo, hi) = (l.min(rr), l.max(rr));
        if s > 0.0 {
            (lo, hi)
        } else {
            (-hi, -lo)
        }
    }
}

fn tooth(r: f64, width: f64) -> (usize, f64) {
    let q = r / width;
    let mut n = q.floor();
    let mut frac = q - n;
    // absorb rounding right below an integer
    if 1.0 - frac < 1e-12 {
        n += 1.0;
        frac = 0.0;
    } else if frac < 1e-12 {
        frac = 0.0;
    }
    (n as usize, frac)
}

fn segment_index(segments: &[Segment], r: f64) -> usize {
    segments
        .iter()
        .rposition(|s| s.start <= r)
        .unwrap_or(0)
}

/// Standard bump `exp(1 / (x^2 - 1))` normalized to unit mass on `(-1, 1)`.
pub fn bump(x: f64) -> f64 {
    if x.abs() >= 1.0 {
        0.0
    } else {
        (1.0 / (x * x - 1.0)).exp() / bump_mass()
    }
}

fn bump_mass() -> f64 {
    static MASS: OnceLock<f64> = OnceLock::new();
    *MASS.get_or_init(|| {
        let panels = 64;
        let (x, w) = gauss_legendre(20);
        let h = 2.0 / panels as f64;
        let mut total = 0.0;
        for p in 0..panels {
            let a = -1.0 + p as f64 * h;
            for (xi, wi) in x.iter().zip(&w) {
                let t = a + 0.5 * h * (xi + 1.0);
                total += 0.5 * h * wi * (1.0 / (t * t - 1.0)).exp();
            }
        }
        total
    })
}

/// Mollified law `j_m = rho_m * j` and its derivative `Dj_m`.
#[derive(Clone, Debug)]
pub struct MollifiedLaw {
    base: FrictionLaw,
    m_reg: u32,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

const MOLLIFIER_RTOL: f64 = 1e-10;
const GAUSS_POINTS: usize = 16;

impl MollifiedLaw {
    pub fn new(base: FrictionLaw, m_reg: u32) -> Result<Self> {
        if m_reg == 0 {
            return Err(Error::InvalidArgument("mollification index must be at least 1".into()));
        }
        let (nodes, weights) = gauss_legendre(GAUSS_POINTS);
        Ok(MollifiedLaw {
            base,
            m_reg,
            nodes,
            weights,
        })
    }

    pub fn base(&self) -> &FrictionLaw {
        &self.base
    }

    pub fn m_reg(&self) -> u32 {
        self.m_reg
    }

    pub fn radius(&self) -> f64 {
        1.0 / self.m_reg as f64
    }

    /// `int_{-1}^{1} rho(t) h(s - t / m) dt`, split at the images of the
    /// law's breakpoints and refined by panel doubling.
    fn convolve(&self, s: f64, h: impl Fn(f64) -> f64) -> Result<f64> {
        let m = self.m_reg as f64;
        let r = self.radius();
        let mut cuts = vec![-1.0];
        // breakpoint b sits at t = m (s - b); collect in increasing t
        let mut ts: Vec<f64> = self
            .base
            .breakpoints_between(s - r, s + r)
            .into_iter()
            .map(|b| m * (s - b))
            .filter(|&t| t > -1.0 && t < 1.0)
            .collect();
        ts.sort_by(f64::total_cmp);
        cuts.extend(ts);
        cuts.push(1.0);

        let f = |t: f64| bump(t) * h(s - t / m);
        let scale = self.base.m0().abs().max(1e-300);
        let mut total = 0.0;
        for piece in cuts.windows(2) {
            let (a, b) = (piece[0], piece[1]);
            if b <= a {
                continue;
            }
            let mut panels = 1usize;
            let mut prev = self.composite(&f, a, b, panels);
            loop {
                panels *= 2;
                let next = self.composite(&f, a, b, panels);
                let diff = (next - prev).abs();
                prev = next;
                if diff <= MOLLIFIER_RTOL * next.abs().max(1e-4 * scale) {
                    break;
                }
                if panels > 4096 {
                    return Err(Error::Quadrature(format!(
                        "mollified friction at s = {s}: piece [{a}, {b}] stalls at difference {diff:.3e}"
                    )));
                }
            }
            total += prev;
        }
        Ok(total)
    }

    fn composite(&self, f: &impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
        let h = (b - a) / panels as f64;
        let mut total = 0.0;
        for p in 0..panels {
            let lo = a + p as f64 * h;
            for (x, w) in self.nodes.iter().zip(&self.weights) {
                total += 0.5 * h * w * f(lo + 0.5 * h * (x + 1.0));
            }
        }
        total
    }

    /// `Dj_m(s)`, odd in `s` by construction.
    pub fn grad(&self, s: f64) -> Result<f64> {
        if s == 0.0 {
            Ok(0.0)
        } else if s < 0.0 {
            Ok(-self.convolve(-s, |x| self.base.derivative(x))?)
        } else {
            self.convolve(s, |x| self.base.derivative(x))
        }
    }

    /// `d/ds Dj_m(s)`: the mollified a.e. second derivative plus the jumps of
    /// `j'` weighted by the kernel.
    pub fn grad_slope(&self, s: f64) -> Result<f64> {
        let s = s.abs();
        let smooth = self.convolve(s, |x| self.base.second_derivative(x))?;
        let m = self.m_reg as f64;
        let r = self.radius();
        let jumps: f64 = self
            .base
            .breakpoints_between(s - r, s + r)
            .into_iter()
            .map(|b| m * bump(m * (s - b)) * self.base.jump(b))
            .sum();
        Ok(smooth + jumps)
    }

    /// `j_m(s)`.
    pub fn potential(&self, s: f64) -> Result<f64> {
        self.convolve(s.abs(), |x| self.base.potential(x))
    }
}

/// `max(0, -min_s s Dj_m(s))` over `samples` equispaced points in
/// `[-range, range]`: how far the mollified law is from the sign condition.
pub fn dissipation_defect(mlaw: &MollifiedLaw, range: f64, samples: usize) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for i in 0..samples {
        let s = -range + 2.0 * range * i as f64 / (samples - 1) as f64;
        worst = worst.min(s * mlaw.grad(s)?);
    }
    Ok(if worst < 0.0 { -worst } else { 0.0 })
}

#[derive(Clone, Debug, PartialEq)]
pub struct HypothesisViolation {
    /// `"sign"`, `"growth"` or `"monotonicity"`.
    pub condition: &'static str,
    pub witness: Vec<f64>,
    pub margin: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct HypothesisReport {
    pub law: &'static str,
    pub m0: f64,
    pub m1: f64,
    /// `min over grid and subgradients of zeta * s`.
    pub sign_margin: f64,
    /// `min of m0 (1 + |s|) - |zeta|`.
    pub growth_margin: f64,
    /// `min over s2 < s1 of (lo(s1) + m1 s1) - (hi(s2) + m1 s2)`.
    pub monotonicity_margin: f64,
    pub violations: Vec<HypothesisViolation>,
}

impl HypothesisReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn passed_condition(&self, condition: &str) -> bool {
        !self.violations.iter().any(|v| v.condition == condition)
    }

    pub fn ensure(&self) -> Result<()> {
        match self.violations.first() {
            None => Ok(()),
            Some(v) => Err(Error::Hypothesis {
                condition: v.condition.to_string(),
                message: format!(
                    "{} law fails with margin {:.3e} at {:?}",
                    self.law, v.margin, v.witness
                ),
            }),
        }
    }
}

/// Equispaced slip grid on `[-range, range]`.
pub fn slip_grid(range: f64, samples: usize) -> Vec<f64> {
    (0..samples)
        .map(|i| -range + 2.0 * range * i as f64 / (samples - 1) as f64)
        .collect()
}

/// Checks the sign, growth and relaxed-monotonicity conditions on a grid.
pub fn verify_hypotheses(law: &FrictionLaw, grid: &[f64]) -> HypothesisReport {
    let mut pts: Vec<f64> = grid.to_vec();
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    let intervals: Vec<(f64, f64)> = pts.iter().map(|&s| law.clarke_interval(s)).collect();
    let (m0, m1) = (law.m0(), law.m1());
    let tol = 1e-12;
    let mut violations = Vec::new();

    let mut sign_margin = f64::INFINITY;
    let mut sign_witness = 0.0;
    let mut growth_margin = f64::INFINITY;
    let mut growth_witness = 0.0;
    for (&s, &(lo, hi)) in pts.iter().zip(&intervals) {
        let sm = (lo * s).min(hi * s);
        if sm < sign_margin {
            sign_margin = sm;
            sign_witness = s;
        }
        let gm = m0 * (1.0 + s.abs()) - lo.abs().max(hi.abs());
        if gm < growth_margin {
            growth_margin = gm;
            growth_witness = s;
        }
    }
    if sign_margin < -tol {
        violations.push(HypothesisViolation {
            condition: "sign",
            witness: vec![sign_witness],
            margin: sign_margin,
        });
    }
    if growth_margin < -tol {
        violations.push(HypothesisViolation {
            condition: "growth",
            witness: vec![growth_witness],
            margin: growth_margin,
        });
    }

    // running max of hi(s2) + m1 s2 over s2 < s1
    let mut monotonicity_margin = f64::INFINITY;
    let mut mono_witness = (0.0, 0.0);
    let mut best: Option<(f64, f64)> = None;
    for (&s, &(lo, hi)) in pts.iter().zip(&intervals) {
        if let Some((val, s2)) = best {
            let margin = lo + m1 * s - val;
            if margin < monotonicity_margin {
                monotonicity_margin = margin;
                mono_witness = (s, s2);
            }
        }
        let cand = hi + m1 * s;
        if best.is_none_or(|(v, _)| cand > v) {
            best = Some((cand, s));
        }
    }
    if monotonicity_margin < -tol * (1.0 + m1) {
        violations.push(HypothesisViolation {
            condition: "monotonicity",
            witness: vec![mono_witness.0, mono_witness.1],
            margin: monotonicity_margin,
        });
    }

    HypothesisReport {
        law: law.name(),
        m0,
        m1,
        sign_margin,
        growth_margin,
        monotonicity_margin,
        violations,
    }
}

/// Quadrature point on the friction boundary.
#[derive(Clone, Copy, Debug)]
pub struct SlipPoint {
    pub x: [f64; 2],
    pub weight: f64,
    pub tangent: [f64; 2],
    pub dofs: [usize; 3],
    pub basis: [f64; 3],
}

/// Gauss points of all `Gamma1` edges (four per edge).
#[derive(Clone, Debug, Default)]
pub struct SlipBoundary {
    points: Vec<SlipPoint>,
    n_velocity: usize,
}

pub const EDGE_GAUSS_POINTS: usize = 4;

impl SlipBoundary {
    pub fn new(spaces: &DiscreteSpaces) -> Self {
        let mesh = spaces.mesh();
        let rule = LineRule::gauss(EDGE_GAUSS_POINTS, 0.0, 1.0);
        let mut points = Vec::new();
        for (e, (edge, tag)) in mesh.boundary_edges.iter().zip(&mesh.edge_tags).enumerate() {
            if *tag != BoundaryTag::Gamma1 {
                continue;
            }
            let frame = mesh.frame(e).expect("boundary edge index");
            let len = mesh.edge_length(edge);
            let (p, q) = (mesh.nodes[edge.nodes[0]], mesh.nodes[edge.nodes[1]]);
            let dofs = spaces.boundary_edge_dofs(e);
            for (&t, &w) in rule.points.iter().zip(&rule.weights) {
                points.push(SlipPoint {
                    x: [p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])],
                    weight: w * len,
                    tangent: frame.tangent,
                    dofs,
                    basis: edge_p2_values(t),
                });
            }
        }
        SlipBoundary {
            points,
            n_velocity: spaces.n_velocity(),
        }
    }

    pub fn points(&self) -> &[SlipPoint] {
        &self.points
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Tangential slip `u . tau` at every quadrature point.
    pub fn slip(&self, u: &[f64]) -> Vec<f64> {
        self.points
            .iter()
            .map(|p| {
                let mut v = [0.0; 2];
                for (&d, &b) in p.dofs.iter().zip(&p.basis) {
                    v[0] += u[2 * d] * b;
                    v[1] += u[2 * d + 1] * b;
                }
                v[0] * p.tangent[0] + v[1] * p.tangent[1]
            })
            .collect()
    }

    pub fn integrate(&self, values: &[f64]) -> f64 {
        self.points.iter().zip(values).map(|(p, v)| p.weight * v).sum()
    }

    pub fn l2_norm(&self, values: &[f64]) -> f64 {
        self.points
            .iter()
            .zip(values)
            .map(|(p, v)| p.weight * v * v)
            .sum::<f64>()
            .sqrt()
    }

    /// `int traction v_tau` as a velocity load vector.
    pub fn load(&self, traction: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n_velocity];
        for (p, &tr) in self.points.iter().zip(traction) {
            for (&d, &b) in p.dofs.iter().zip(&p.basis) {
                let s = p.weight * tr * b;
                out[2 * d] += s * p.tangent[0];
                out[2 * d + 1] += s * p.tangent[1];
            }
        }
        out
    }

    /// Appends `int beta u_tau v_tau` to a matrix builder.
    pub fn push_tangential_mass(&self, builder: &mut TripletBuilder, beta: &[f64]) {
        for (p, &bq) in self.points.iter().zip(beta) {
            if bq == 0.0 {
                continue;
            }
            for (&di, &bi) in p.dofs.iter().zip(&p.basis) {
                for (&dj, &bj) in p.dofs.iter().zip(&p.basis) {
                    let s = p.weight * bq * bi * bj;
                    for c in 0..2 {
                        for e in 0..2 {
                            builder.push(2 * di + c, 2 * dj + e, s * p.tangent[c] * p.tangent[e]);
                        }
                    }
                }
            }
        }
    }
}

/// Slip and friction traction at the boundary quadrature points.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct FrictionTrace {
    pub slip: Vec<f64>,
    pub traction: Vec<f64>,
}

impl FrictionTrace {
    pub fn evaluate(boundary: &SlipBoundary, mlaw: &MollifiedLaw, u: &[f64]) -> Result<Self> {
        let slip = boundary.slip(u);
        let traction = slip.iter().map(|&s| mlaw.grad(s)).collect::<Result<_>>()?;
        Ok(FrictionTrace { slip, traction })
    }

    /// `int Dj_m(u_tau) u_tau`.
    pub fn power(&self, boundary: &SlipBoundary) -> f64 {
        let prod: Vec<f64> = self.slip.iter().zip(&self.traction).map(|(s, t)| s * t).collect();
        boundary.integrate(&prod)
    }
}

/// `L(v) = int_{Gamma1} Dj_m(u_tau) v_tau` and the trace it was built from.
pub fn assemble_friction_load(
    spaces: &DiscreteSpaces,
    mlaw: &MollifiedLaw,
    u: &[f64],
) -> Result<(Vec<f64>, FrictionTrace)> {
    let boundary = SlipBoundary::new(spaces);
    let trace = FrictionTrace::evaluate(&boundary, mlaw, u)?;
    Ok((boundary.load(&trace.traction), trace))
}
