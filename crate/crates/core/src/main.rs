use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use miscible::diagnostics::stability_study;
use miscible::friction::{FrictionLaw, MollifiedLaw};
use miscible::io::{laws_csv, parse_config, run_to_directory, summary_text};
use miscible::stepper::{ProblemConfig, Simulation};
use miscible::verification::{
    couette_comparison, couette_config, galerkin_study, korteweg_identity_check,
    manufactured_convergence, quadrature_oracle_check, ConvergenceTable,
};
use miscible::{Error, Result};

#[derive(Parser)]
#[command(name = "miscible", version, about = "Miscible-liquids solver with nonmonotone slip friction")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a configuration and write the time series, snapshots and summary.
    Run {
        /// TOML configuration file.
        #[arg(long)]
        config: PathBuf,
        /// Output directory, created if missing.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a built-in verification case: manufactured, couette, korteweg or quadrature.
    Verify {
        #[arg(long)]
        case: String,
        /// Mesh levels for the manufactured study; refinement level for quadrature.
        #[arg(long, default_value_t = 4)]
        levels: usize,
        /// Also write the table as CSV here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Mesh convergence of a configuration: distance between consecutive levels.
    Study {
        #[arg(long)]
        config: PathBuf,
        /// Number of meshes, each halving the previous cell size.
        #[arg(long, default_value_t = 4)]
        levels: usize,
    },
    /// Tabulate a mollified friction law as CSV.
    Laws {
        /// exp-decay or sawtooth (default parameters).
        #[arg(long)]
        law: String,
        /// Mollification index; the kernel radius is 1/m.
        #[arg(long, default_value_t = 64)]
        m: u32,
        #[arg(long, default_value_t = 201)]
        samples: usize,
        /// Tabulate on [-range, range].
        #[arg(long, default_value_t = 3.0)]
        range: f64,
    },
    /// Perturb the initial velocity and report the amplification of the difference.
    Stability {
        #[arg(long)]
        config: PathBuf,
        /// Size of the initial perturbation in L2.
        #[arg(long)]
        delta: f64,
    },
}

fn convergence_csv(table: &ConvergenceTable) -> String {
    let mut out = String::from("nx,h,dt,steps,velocity_l2,velocity_h1,concentration_l2,concentration_h1\n");
    for l in &table.levels {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            l.nx, l.h, l.dt, l.steps, l.velocity_l2, l.velocity_h1, l.concentration_l2, l.concentration_h1
        ));
    }
    out
}

fn verify(case: &str, levels: usize, out: Option<PathBuf>) -> Result<()> {
    let csv = match case {
        "manufactured" => {
            let table = manufactured_convergence(case, levels)?;
            let (vo, co) = (table.velocity_orders(), table.concentration_orders());
            println!("{:>5} {:>12} {:>12} {:>7} {:>12} {:>7}", "nx", "dt", "|u-u_h|", "order", "|C-C_h|", "order");
            for (i, l) in table.levels.iter().enumerate() {
                let o = |v: &[f64]| if i == 0 { String::from("-") } else { format!("{:.2}", v[i - 1]) };
                println!(
                    "{:>5} {:>12.3e} {:>12.4e} {:>7} {:>12.4e} {:>7}",
                    l.nx, l.dt, l.velocity_l2, o(&vo), l.concentration_l2, o(&co)
                );
            }
            let finest = |o: &[f64]| o.last().copied().unwrap_or(f64::NAN);
            if !(finest(&vo) >= 2.5 && finest(&co) >= 2.5) {
                return Err(Error::Verification(format!(
                    "finest-pair orders {:.3} (velocity), {:.3} (concentration) below 2.5",
                    finest(&vo),
                    finest(&co)
                )));
            }
            convergence_csv(&table)
        }
        "couette" => {
            let cmp = couette_comparison(&couette_config(64, 32, 1.0, 4.0, 64))?;
            println!("oracle roots      {:?}", cmp.oracle.roots);
            println!("oracle slip       {:.10}", cmp.oracle.slip);
            println!("measured slip     {:.10}", cmp.measured_slip);
            println!("relative error    {:.3e}", cmp.relative_error);
            if !(cmp.relative_error <= 1e-3) {
                return Err(Error::Verification(format!(
                    "Couette slip off by {:.3e} relative",
                    cmp.relative_error
                )));
            }
            format!(
                "oracle_slip,measured_slip,relative_error\n{},{},{}\n",
                cmp.oracle.slip, cmp.measured_slip, cmp.relative_error
            )
        }
        "korteweg" => {
            let report = korteweg_identity_check(1.0);
            let mut csv = String::from("case,direct,weak,relative_difference\n");
            for c in &report.cases {
                println!("{:<8} direct {:+.6e} weak {:+.6e} rel {:.3e}", c.name, c.direct, c.weak, c.relative_difference);
                csv.push_str(&format!("{},{},{},{}\n", c.name, c.direct, c.weak, c.relative_difference));
            }
            if !report.passed(1e-10) {
                return Err(Error::Verification(format!(
                    "Korteweg identity off by {:.3e}",
                    report.max_relative_difference()
                )));
            }
            csv
        }
        "quadrature" => {
            let mut cfg = ProblemConfig::default();
            cfg.discretization.nx = 4 << levels.min(4);
            cfg.discretization.ny = cfg.discretization.nx;
            let sim = Simulation::new(cfg)?;
            let s = sim.project_initial()?;
            let k = sim.config().physics.korteweg;
            let report = quadrature_oracle_check(sim.spaces(), sim.forms(), &s.u, &s.c, k);
            let mut csv = String::from("form,max_relative,worst_element\n");
            for f in &report.forms {
                println!("{:<12} {:.3e} (element {})", f.form, f.max_relative, f.worst_element);
                csv.push_str(&format!("{},{},{}\n", f.form, f.max_relative, f.worst_element));
            }
            println!("mass total error {:.3e}, row error {:.3e}", report.mass_total_error, report.mass_row_error);
            report.ensure(1e-12)?;
            csv
        }
        other => {
            return Err(Error::InvalidArgument(format!(
                "unknown case `{other}`; available: manufactured, couette, korteweg, quadrature"
            )))
        }
    };
    if let Some(path) = out {
        std::fs::write(path, csv)?;
    }
    Ok(())
}

fn law_by_name(name: &str) -> Result<FrictionLaw> {
    match name {
        "exp-decay" => FrictionLaw::exp_decay(0.5, 1.5, 2.0),
        "sawtooth" => FrictionLaw::sawtooth(1.0, 0.4, 0.5),
        other => Err(Error::InvalidArgument(format!(
            "unknown law `{other}`; available: exp-decay, sawtooth"
        ))),
    }
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run { config, out } => {
            let cfg = parse_config(&config)?;
            let (artifacts, summary) = run_to_directory(&cfg, &out)?;
            print!("{}", summary_text(&summary));
            println!("timeseries = {}", artifacts.timeseries.display());
        }
        Command::Verify { case, levels, out } => verify(&case, levels, out)?,
        Command::Study { config, levels } => {
            let cfg = parse_config(&config)?;
            let study = galerkin_study(&cfg, levels)?;
            println!("{:>10} {:>10} {:>14}", "coarse", "fine", "|u_L-u_L+1|");
            for (i, d) in study.differences.iter().enumerate() {
                let (a, b) = (study.cells[i], study.cells[i + 1]);
                println!("{:>10} {:>10} {:>14.6e}", format!("{}x{}", a.0, a.1), format!("{}x{}", b.0, b.1), d);
            }
            println!("strictly decreasing = {}", study.strictly_decreasing());
        }
        Command::Laws { law, m, samples, range } => {
            let mlaw = MollifiedLaw::new(law_by_name(&law)?, m)?;
            print!("{}", laws_csv(&mlaw, samples, range)?);
        }
        Command::Stability { config, delta } => {
            let cfg = parse_config(&config)?;
            let r = stability_study(&cfg, delta)?;
            println!("delta0 = {}", r.delta0);
            println!("sup_difference = {}", r.sup_difference);
            match r.amplification {
                Some(a) => println!("amplification = {a}"),
                None => println!("amplification = undefined (delta0 = 0)"),
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let cat = e.category();
            eprintln!("error[{cat}]: {e}");
            ExitCode::from(cat.exit_code() as u8)
        }
    }
}
