use serde::{Deserialize, Serialize};

use super::manufactured;
use crate::friction::{FrictionLaw, LawKind, MollifiedLaw};
use crate::geometry::{SideCondition, SidePartition};
use crate::{Error, Result};

/// Body force presets.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ForcePreset {
    Zero,
    Constant { value: [f64; 2] },
    /// Solid-body rotation field `amplitude * (-(y - yc), x - xc)`.
    Rotation { amplitude: f64 },
    Manufactured,
}

/// Initial velocity presets.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum VelocityPreset {
    Zero,
    /// Single divergence-free cell vanishing on the whole boundary, with peak
    /// speed `amplitude`.
    Vortex { amplitude: f64 },
    Manufactured,
}

/// Initial concentration presets.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ConcentrationPreset {
    Zero,
    Constant { value: f64 },
    /// `amplitude * cos(pi x / Lx) cos(pi y / Ly)`.
    Cosine { amplitude: f64 },
    GaussianBlob { center: [f64; 2], width: f64, amplitude: f64 },
    Manufactured,
}

/// Reaction coefficient `g` presets.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SourcePreset {
    Zero,
    Constant { value: f64 },
}

/// Extra right-hand side of the concentration equation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ConcentrationForcing {
    None,
    Manufactured,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DomainConfig {
    pub lx: f64,
    pub ly: f64,
    pub bottom: SideCondition,
    pub right: SideCondition,
    pub top: SideCondition,
    pub left: SideCondition,
}

impl Default for DomainConfig {
    fn default() -> Self {
        DomainConfig {
            lx: 1.0,
            ly: 1.0,
            bottom: SideCondition::Gamma1,
            right: SideCondition::Gamma0,
            top: SideCondition::Gamma0,
            left: SideCondition::Gamma0,
        }
    }
}

impl DomainConfig {
    pub fn partition(&self) -> SidePartition {
        SidePartition {
            bottom: self.bottom,
            right: self.right,
            top: self.top,
            left: self.left,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhysicsConfig {
    pub viscosity: f64,
    pub diffusivity: f64,
    pub korteweg: f64,
    pub source: SourcePreset,
    pub force: ForcePreset,
    pub initial_velocity: VelocityPreset,
    pub initial_concentration: ConcentrationPreset,
    pub concentration_forcing: ConcentrationForcing,
    /// Turns the convection terms off (Stokes limit).
    pub convection: bool,
}

impl Default for PhysicsConfig {
    fn default() -> Self {
        PhysicsConfig {
            viscosity: 1.0,
            diffusivity: 0.1,
            korteweg: 0.01,
            source: SourcePreset::Zero,
            force: ForcePreset::Zero,
            initial_velocity: VelocityPreset::Vortex { amplitude: 1.0 },
            initial_concentration: ConcentrationPreset::Cosine { amplitude: 1.0 },
            concentration_forcing: ConcentrationForcing::None,
            convection: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FrictionConfig {
    pub law: LawKind,
    /// Overrides the growth constant implied by the law.
    pub m0: Option<f64>,
    /// Overrides the relaxed-monotonicity constant implied by the law.
    pub m1: Option<f64>,
    pub m_reg: u32,
}

impl Default for FrictionConfig {
    fn default() -> Self {
        FrictionConfig {
            law: LawKind::ExpDecay {
                mu_s: 0.5,
                mu0: 1.5,
                alpha: 2.0,
            },
            m0: None,
            m1: None,
            m_reg: 64,
        }
    }
}

impl FrictionConfig {
    pub fn law(&self) -> Result<FrictionLaw> {
        let law = FrictionLaw::from_kind(self.law.clone())
            .map_err(|e| Error::config("friction.law", e.to_string()))?;
        let (m0, m1) = (self.m0.unwrap_or(law.m0()), self.m1.unwrap_or(law.m1()));
        Ok(law.with_constants(m0, m1))
    }

    pub fn mollified(&self) -> Result<MollifiedLaw> {
        MollifiedLaw::new(self.law()?, self.m_reg)
            .map_err(|e| Error::config("friction.m_reg", e.to_string()))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiscretizationConfig {
    pub nx: usize,
    pub ny: usize,
    pub t_end: f64,
    pub dt: f64,
    pub fixed_point_tol: f64,
    pub max_fixed_point_iters: usize,
    pub linear_tol: f64,
}

impl Default for DiscretizationConfig {
    fn default() -> Self {
        DiscretizationConfig {
            nx: 8,
            ny: 8,
            t_end: 0.1,
            dt: 0.01,
            fixed_point_tol: 1e-10,
            max_fixed_point_iters: 50,
            linear_tol: 1e-10,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    /// Write a VTK snapshot every this many steps; 0 disables snapshots.
    pub snapshot_every: usize,
}


#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProblemConfig {
    pub domain: DomainConfig,
    pub physics: PhysicsConfig,
    pub friction: FrictionConfig,
    pub discretization: DiscretizationConfig,
    pub output: OutputConfig,
}

fn positive(key: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::config(key, format!("must be positive and finite, got {v}")))
    }
}

impl ProblemConfig {
    /// Checks every constraint that does not need a mesh.
    pub fn validate(&self) -> Result<()> {
        let d = &self.domain;
        positive("domain.lx", d.lx)?;
        positive("domain.ly", d.ly)?;
        d.partition()
            .validate()
            .map_err(|e| Error::config("domain", e.to_string()))?;

        let p = &self.physics;
        positive("physics.viscosity", p.viscosity)?;
        positive("physics.diffusivity", p.diffusivity)?;
        if !(p.korteweg >= 0.0 && p.korteweg.is_finite()) {
            return Err(Error::config(
                "physics.korteweg",
                format!("must be nonnegative, got {}", p.korteweg),
            ));
        }
        let g = self.source_bound();
        if let SourcePreset::Constant { value } = p.source {
            if !(value >= 0.0 && value.is_finite()) {
                return Err(Error::config(
                    "physics.source",
                    format!("source g must be nonnegative and bounded, got {value}"),
                ));
            }
        }
        if let ConcentrationPreset::GaussianBlob { width, .. } = p.initial_concentration {
            positive("physics.initial_concentration.width", width)?;
        }

        let t = &self.discretization;
        if t.nx == 0 || t.ny == 0 {
            return Err(Error::config("discretization.nx", "cell counts must be at least 1"));
        }
        positive("discretization.dt", t.dt)?;
        positive("discretization.fixed_point_tol", t.fixed_point_tol)?;
        positive("discretization.linear_tol", t.linear_tol)?;
        if t.max_fixed_point_iters == 0 {
            return Err(Error::config("discretization.max_fixed_point_iters", "must be at least 1"));
        }
        if !(t.t_end >= t.dt) {
            return Err(Error::config(
                "discretization.t_end",
                format!("horizon {} is shorter than dt = {}", t.t_end, t.dt),
            ));
        }
        if t.dt * g >= 1.0 {
            return Err(Error::config(
                "discretization.dt",
                format!("dt * max g = {} must stay below 1; reduce dt", t.dt * g),
            ));
        }

        if self.friction.m_reg == 0 {
            return Err(Error::config("friction.m_reg", "must be at least 1"));
        }
        self.friction.law()?;

        if self.uses_manufactured() {
            if d.lx != 1.0 || d.ly != 1.0 {
                return Err(Error::config(
                    "domain.lx",
                    "manufactured presets are defined on the unit square",
                ));
            }
            if d.partition() != SidePartition::uniform(SideCondition::Gamma0) {
                return Err(Error::config(
                    "domain",
                    "manufactured presets need gamma0 on all four sides",
                ));
            }
        }
        Ok(())
    }

    fn uses_manufactured(&self) -> bool {
        let p = &self.physics;
        p.force == ForcePreset::Manufactured
            || p.initial_velocity == VelocityPreset::Manufactured
            || p.initial_concentration == ConcentrationPreset::Manufactured
            || p.concentration_forcing == ConcentrationForcing::Manufactured
    }

    /// `max g` over the domain.
    pub fn source_bound(&self) -> f64 {
        match self.physics.source {
            SourcePreset::Zero => 0.0,
            SourcePreset::Constant { value } => value,
        }
    }

    pub fn source(&self, _x: f64, _y: f64) -> f64 {
        self.source_bound()
    }

    pub fn force(&self, x: f64, y: f64, t: f64) -> [f64; 2] {
        let p = &self.physics;
        match p.force {
            ForcePreset::Zero => [0.0, 0.0],
            ForcePreset::Constant { value } => value,
            ForcePreset::Rotation { amplitude } => {
                let (xc, yc) = (0.5 * self.domain.lx, 0.5 * self.domain.ly);
                [-amplitude * (y - yc), amplitude * (x - xc)]
            }
            ForcePreset::Manufactured => manufactured::force(x, y, t, p.viscosity, p.korteweg),
        }
    }

    pub fn has_zero_force(&self) -> bool {
        match self.physics.force {
            ForcePreset::Zero => true,
            ForcePreset::Constant { value } => value == [0.0, 0.0],
            ForcePreset::Rotation { amplitude } => amplitude == 0.0,
            ForcePreset::Manufactured => false,
        }
    }

    pub fn concentration_source(&self, x: f64, y: f64, t: f64) -> f64 {
        let p = &self.physics;
        match p.concentration_forcing {
            ConcentrationForcing::None => 0.0,
            ConcentrationForcing::Manufactured => {
                manufactured::concentration_source(x, y, t, p.diffusivity, self.source(x, y))
            }
        }
    }

    pub fn initial_velocity(&self, x: f64, y: f64) -> [f64; 2] {
        match self.physics.initial_velocity {
            VelocityPreset::Zero => [0.0, 0.0],
            VelocityPreset::Vortex { amplitude } => {
                let w = vortex(x, y, self.domain.lx, self.domain.ly);
                [amplitude * w[0], amplitude * w[1]]
            }
            VelocityPreset::Manufactured => manufactured::velocity(x, y),
        }
    }

    pub fn initial_concentration(&self, x: f64, y: f64) -> f64 {
        let (lx, ly) = (self.domain.lx, self.domain.ly);
        match self.physics.initial_concentration {
            ConcentrationPreset::Zero => 0.0,
            ConcentrationPreset::Constant { value } => value,
            ConcentrationPreset::Cosine { amplitude } => {
                use std::f64::consts::PI;
                amplitude * (PI * x / lx).cos() * (PI * y / ly).cos()
            }
            ConcentrationPreset::GaussianBlob {
                center,
                width,
                amplitude,
            } => {
                let r2 = (x - center[0]).powi(2) + (y - center[1]).powi(2);
                amplitude * (-r2 / (width * width)).exp()
            }
            ConcentrationPreset::Manufactured => manufactured::concentration(x, y, 0.0),
        }
    }
}

/// Unit-peak divergence-free cell on `[0, lx] x [0, ly]` with zero trace.
pub fn vortex(x: f64, y: f64, lx: f64, ly: f64) -> [f64; 2] {
    let (xi, eta) = (x / lx, y / ly);
    let u = manufactured::velocity(xi, eta);
    // rescaling the stream function by lx keeps the field solenoidal
    let scale = 1.0 / manufactured::VORTEX_PEAK;
    [scale * u[0] * lx.min(ly) / ly, scale * u[1] * lx.min(ly) / lx]
}
