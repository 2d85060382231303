//! Configuration files, CSV time series and legacy VTK snapshots.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::diagnostics::{state_record, trajectory_monitors, EnergyRecord, TrajectorySummary};
use crate::friction::MollifiedLaw;
use crate::spaces::DiscreteSpaces;
use crate::stepper::{ProblemConfig, Simulation, State};
use crate::{Error, Result};

pub const TIMESERIES_HEADER: &str = "t,kinetic,grad_C_sq,total,viscous_dissipation,diffusive_dissipation,friction_power,est1_residual,est9_monitor,fp_iters";

pub fn parse_config(path: &Path) -> Result<ProblemConfig> {
    let text = fs::read_to_string(path)?;
    parse_config_str(&text)
}

/// Parses and validates a TOML configuration. Missing keys take their
/// defaults; unknown keys are rejected with the closest known name.
pub fn parse_config_str(text: &str) -> Result<ProblemConfig> {
    let config: ProblemConfig = toml::from_str(text).map_err(|e| describe_toml_error(text, &e))?;
    config.validate()?;
    Ok(config)
}

fn describe_toml_error(text: &str, err: &toml::de::Error) -> Error {
    let message = err.message().trim().to_string();
    let start = err.span().map_or(0, |s| s.start).min(text.len());
    let section = text[..start]
        .lines()
        .rev()
        .map(str::trim)
        .find(|l| l.starts_with('['))
        .map(|l| l.trim_matches(|c| c == '[' || c == ']').trim().to_string());
    let qualify = |key: &str| match &section {
        Some(s) if !s.is_empty() => format!("{s}.{key}"),
        _ => key.to_string(),
    };

    for what in ["field", "variant"] {
        let tag = format!("unknown {what} `");
        if let Some(rest) = message.strip_prefix(&tag) {
            let name = rest.split('`').next().unwrap_or_default();
            let known = backticked(rest.split_once("expected").map_or("", |(_, b)| b));
            let hint = closest(name, &known)
                .map(|s| format!("; did you mean `{s}`?"))
                .unwrap_or_default();
            let noun = if what == "field" { "key" } else { "value" };
            return Error::config(qualify(name), format!("unknown {noun} `{name}`{hint}"));
        }
    }
    let line = text[..start].rfind('\n').map_or(0, |i| i + 1);
    let key = text[line..]
        .lines()
        .next()
        .and_then(|l| l.split_once('='))
        .map(|(k, _)| k.trim().to_string())
        .unwrap_or_default();
    Error::config(if key.is_empty() { section.unwrap_or_default() } else { qualify(&key) }, message)
}

fn backticked(s: &str) -> Vec<String> {
    s.split('`').skip(1).step_by(2).map(str::to_string).collect()
}

fn closest(name: &str, known: &[String]) -> Option<String> {
    known
        .iter()
        .map(|k| (strsim::levenshtein(name, k), k))
        .filter(|(d, k)| *d <= 3.max(k.len() / 3))
        .min_by_key(|(d, _)| *d)
        .map(|(_, k)| k.clone())
}

/// Effective configuration as TOML, every default filled in.
pub fn echo_config(config: &ProblemConfig) -> Result<String> {
    let body = toml::to_string(config)
        .map_err(|e| Error::config("", format!("cannot serialize configuration: {e}")))?;
    Ok(format!("# effective configuration, defaults included\n{body}"))
}

pub fn timeseries_csv(records: &[EnergyRecord]) -> String {
    let mut out = String::with_capacity(64 * (records.len() + 1));
    out.push_str(TIMESERIES_HEADER);
    out.push('\n');
    for r in records {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            r.t,
            r.kinetic,
            r.grad_c_sq,
            r.total,
            r.viscous_dissipation,
            r.diffusive_dissipation,
            r.friction_power,
            r.est1_residual,
            r.est9_monitor,
            r.fp_iters
        );
    }
    out
}

pub fn write_timeseries(path: &Path, records: &[EnergyRecord]) -> Result<()> {
    fs::write(path, timeseries_csv(records))?;
    Ok(())
}

/// Legacy ASCII VTK unstructured grid with the fields at the mesh vertices.
pub fn snapshot_vtk(state: &State, spaces: &DiscreteSpaces) -> String {
    let mesh = spaces.mesh();
    let nn = mesh.num_nodes();
    let nt = mesh.num_triangles();
    let mut vel = vec![[0.0; 2]; nn];
    let mut conc = vec![0.0; nn];
    let mut pres = vec![0.0; nn];
    let p = spaces.zero_mean_pressure(&state.p);
    let corners = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
    for (t, tri) in mesh.triangles.iter().enumerate() {
        for (k, &v) in tri.iter().enumerate() {
            vel[v] = spaces.eval_velocity(&state.u, t, &corners[k]);
            conc[v] = spaces.eval_scalar(&state.c, t, &corners[k]);
            pres[v] = spaces.eval_pressure(&p, t, &corners[k]);
        }
    }

    let mut out = String::new();
    out.push_str("# vtk DataFile Version 3.0\n");
    let _ = writeln!(out, "miscible t={}", state.t);
    out.push_str("ASCII\nDATASET UNSTRUCTURED_GRID\n");
    let _ = writeln!(out, "POINTS {nn} double");
    for x in &mesh.nodes {
        let _ = writeln!(out, "{} {} 0", x[0], x[1]);
    }
    let _ = writeln!(out, "CELLS {nt} {}", 4 * nt);
    for tri in &mesh.triangles {
        let _ = writeln!(out, "3 {} {} {}", tri[0], tri[1], tri[2]);
    }
    let _ = writeln!(out, "CELL_TYPES {nt}");
    for _ in 0..nt {
        out.push_str("5\n");
    }
    let _ = writeln!(out, "POINT_DATA {nn}");
    out.push_str("VECTORS velocity double\n");
    for v in &vel {
        let _ = writeln!(out, "{} {} 0", v[0], v[1]);
    }
    for (name, values) in [("pressure", &pres), ("concentration", &conc)] {
        let _ = writeln!(out, "SCALARS {name} double 1\nLOOKUP_TABLE default");
        for v in values {
            let _ = writeln!(out, "{v}");
        }
    }
    out
}

pub fn write_snapshot(state: &State, spaces: &DiscreteSpaces, path: &Path) -> Result<()> {
    fs::write(path, snapshot_vtk(state, spaces))?;
    Ok(())
}

/// `s, Dj_m(s), clarke_lo, clarke_hi` on `samples` points of `[-range, range]`.
pub fn laws_csv(mlaw: &MollifiedLaw, samples: usize, range: f64) -> Result<String> {
    if samples < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 samples, got {samples}")));
    }
    let mut out = String::from("s,Dj_m,clarke_lo,clarke_hi\n");
    for s in crate::friction::slip_grid(range, samples) {
        let (lo, hi) = mlaw.base().clarke_interval(s);
        let _ = writeln!(out, "{s},{},{lo},{hi}", mlaw.grad(s)?);
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunArtifacts {
    pub dir: PathBuf,
    pub config_echo: PathBuf,
    pub timeseries: PathBuf,
    pub snapshots: Vec<PathBuf>,
    pub summary: PathBuf,
}

pub fn summary_text(summary: &TrajectorySummary) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "steps = {}", summary.steps);
    let _ = writeln!(out, "gronwall_c1 = {}", summary.c1);
    let _ = writeln!(out, "gronwall_c2 = {}", summary.c2);
    let _ = writeln!(out, "envelope_holds = {}", summary.envelope_holds);
    let _ = writeln!(out, "flagged_steps = {:?}", summary.flagged_steps);
    let _ = writeln!(out, "max_est1_ratio = {}", summary.max_est1_ratio);
    let _ = writeln!(out, "max_kinetic = {}", summary.max_kinetic);
    let _ = writeln!(out, "max_grad_c_sq = {}", summary.max_grad_c_sq);
    let _ = writeln!(out, "min_friction_power = {}", summary.min_friction_power);
    out
}

/// Runs a configuration and writes the echo, time series, snapshots and
/// summary into `dir`.
pub fn run_to_directory(config: &ProblemConfig, dir: &Path) -> Result<(RunArtifacts, TrajectorySummary)> {
    fs::create_dir_all(dir)?;
    let config_echo = dir.join("config.toml");
    fs::write(&config_echo, echo_config(config)?)?;
    let sim = Simulation::new(config.clone())?;
    let every = config.output.snapshot_every;
    let mut snapshots = Vec::new();
    let out = sim.run_with(|i, s| {
        if every > 0 && i % every == 0 {
            let path = dir.join(format!("snapshot_{i:05}.vtk"));
            write_snapshot(s, sim.spaces(), &path)?;
            snapshots.push(path);
        }
        Ok(())
    })?;
    let records = out.records();
    let timeseries = dir.join("timeseries.csv");
    write_timeseries(&timeseries, &records)?;
    let summary = trajectory_monitors(&state_record(&sim, &out.initial)?, &records, config);
    let summary_path = dir.join("summary.txt");
    fs::write(&summary_path, summary_text(&summary))?;
    Ok((
        RunArtifacts {
            dir: dir.to_path_buf(),
            config_echo,
            timeseries,
            snapshots,
            summary: summary_path,
        },
        summary,
    ))
}
