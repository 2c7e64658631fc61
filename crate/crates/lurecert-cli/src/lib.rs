//! Command-line front end. Subcommands map onto the library pipeline:
//! `certify` verifies a given multiplier, `search` finds one at a fixed
//! slope, `bisect` maximizes the slope bound, `circle` prints the trivial
//! baseline, `check-multiplier` audits class validity, `simulate` integrates
//! the loop, and `fdi-data` dumps the scan evidence as CSV.
//!
//! Exit codes: 0 when the requested analysis succeeds (certified, or the
//! command has no verdict), 1 when the analysis completes without a
//! certificate, 2 for usage errors, 3 for input or runtime failures.

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use lurecert::io::{
    certificate_to_json, csv_number, load_multiplier, load_plant, parse_grid_spec, parse_phi_spec,
    write_fdi_csv, write_trace_csv, InputSignalSpec,
};
use lurecert::iqc::{fdi_rows, FrequencyGrid, Verdict};
use lurecert::nonlin::{check_class, ClassTag};
use lurecert::search::{
    bisect_alpha, certify, circle_baseline, search_certify, SearchConfig, SearchStrategy,
};
use lurecert::sim::{default_sim_dt, default_sim_steps, simulate_lure, SimResult};
use lurecert::{Error, MultiplierBasis, Result};

pub const EXIT_CERTIFIED: i32 = 0;
pub const EXIT_NOT_CERTIFIED: i32 = 1;
pub const EXIT_INPUT_ERROR: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "lurecert", version, about = "Stability certification for Lur'e feedback loops")]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ClassArg {
    Monotone,
    MonotoneOdd,
    Slope,
    SlopeOdd,
}

impl From<ClassArg> for ClassTag {
    fn from(value: ClassArg) -> Self {
        match value {
            ClassArg::Monotone => ClassTag::Monotone,
            ClassArg::MonotoneOdd => ClassTag::MonotoneOdd,
            ClassArg::Slope => ClassTag::Slope,
            ClassArg::SlopeOdd => ClassTag::SlopeOdd,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum StrategyArg {
    /// Trivial multiplier only; recovers the circle baseline.
    Circle,
    /// Linear-program multiplier search at every trial slope.
    Zf,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Verify one multiplier against one plant and class claim.
    Certify {
        #[arg(long)]
        plant: PathBuf,
        #[arg(long, value_enum)]
        class: ClassArg,
        /// Slope bound; required by the slope classes.
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        multiplier: PathBuf,
        /// Frequency grid as wmin:wmax:n.
        #[arg(long)]
        grid: Option<String>,
        /// Strictness margin override.
        #[arg(long)]
        epsilon: Option<f64>,
        /// Write the certificate here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Search for a multiplier at a fixed slope bound, then verify it.
    Search {
        #[arg(long)]
        plant: PathBuf,
        #[arg(long, value_enum)]
        class: ClassArg,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Maximize the certifiable slope bound by bisection.
    Bisect {
        #[arg(long)]
        plant: PathBuf,
        #[arg(long, value_enum)]
        class: ClassArg,
        #[arg(long, value_enum, default_value = "zf")]
        strategy: StrategyArg,
        /// Write the best certificate here.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write the trial log here as CSV.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Print the trivial-multiplier slope baseline.
    Circle {
        #[arg(long)]
        plant: PathBuf,
    },
    /// Audit a multiplier's class validity.
    CheckMultiplier {
        #[arg(long)]
        multiplier: PathBuf,
        #[arg(long, value_enum)]
        class: ClassArg,
    },
    /// Integrate the closed loop against a concrete nonlinearity and input.
    Simulate {
        #[arg(long)]
        plant: PathBuf,
        /// Nonlinearity spec: sat:l, dz:w, lin:k, sig:k, or pwl:x,y;...
        #[arg(long)]
        phi: String,
        /// Input spec: pulse:a:w, expdecay:a:tau:w, or chirp:a:w0:w1.
        #[arg(long)]
        input: String,
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long)]
        steps: Option<usize>,
        /// Write the trajectory here as CSV.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Dump the frequency scan as CSV evidence.
    FdiData {
        #[arg(long)]
        plant: PathBuf,
        #[arg(long, value_enum)]
        class: ClassArg,
        #[arg(long)]
        alpha: Option<f64>,
        /// Multiplier file; the trivial multiplier when omitted.
        #[arg(long)]
        multiplier: Option<PathBuf>,
        #[arg(long)]
        grid: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Honors LURECERT_THREADS for the worker pool; silently keeps the default
/// when the pool was already built or the value does not parse.
fn init_threads() {
    if let Ok(text) = std::env::var("LURECERT_THREADS") {
        if let Ok(n) = text.trim().parse::<usize>() {
            if n >= 1 {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
        }
    }
}

pub fn run(cli: Cli) -> i32 {
    init_threads();
    match dispatch(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            match err {
                Error::NoCertifiableSlope => EXIT_NOT_CERTIFIED,
                _ => EXIT_INPUT_ERROR,
            }
        }
    }
}

fn emit(text: &str, out: Option<&Path>) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn grid_from(spec: Option<&String>) -> Result<FrequencyGrid> {
    match spec {
        Some(text) => parse_grid_spec(text),
        None => Ok(FrequencyGrid::default_certification()),
    }
}

fn verdict_exit(verdict: &Verdict) -> i32 {
    if verdict.is_certified() {
        EXIT_CERTIFIED
    } else {
        EXIT_NOT_CERTIFIED
    }
}

fn json_num(v: f64) -> serde_json::Value {
    if v.is_finite() {
        json!(v)
    } else {
        serde_json::Value::Null
    }
}

fn dispatch(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Certify { plant, class, alpha, multiplier, grid, epsilon, out } => {
            let g = load_plant(&plant)?;
            let m = load_multiplier(&multiplier)?;
            let grid = grid_from(grid.as_ref())?;
            let cert = certify(&g, class.into(), alpha, &m, &grid, epsilon)?;
            emit(&certificate_to_json(&cert), out.as_deref())?;
            if out.is_some() {
                println!("{}", summary_json(&cert.verdict, cert.margin));
            }
            Ok(verdict_exit(&cert.verdict))
        }
        Command::Search { plant, class, alpha, out } => {
            let g = load_plant(&plant)?;
            let config = SearchConfig::default_for(&g);
            let cert = search_certify(&g, class.into(), alpha, &config)?;
            emit(&certificate_to_json(&cert), out.as_deref())?;
            if out.is_some() {
                println!("{}", summary_json(&cert.verdict, cert.margin));
            }
            Ok(verdict_exit(&cert.verdict))
        }
        Command::Bisect { plant, class, strategy, out, trace } => {
            let g = load_plant(&plant)?;
            let config = SearchConfig::default_for(&g);
            let strategy = match strategy {
                StrategyArg::Circle => SearchStrategy::CircleM1,
                StrategyArg::Zf => SearchStrategy::ZamesFalb,
            };
            let result = bisect_alpha(&g, class.into(), strategy, &config)?;
            if let Some(path) = &trace {
                std::fs::write(path, write_trace_csv(&result.trace))?;
            }
            if let Some(path) = &out {
                std::fs::write(path, certificate_to_json(&result.certificate))?;
            }
            let summary = json!({
                "alpha_star": result.alpha_star,
                "margin": result.certificate.margin,
                "trials": result.trace.len(),
            });
            println!("{}", serde_json::to_string_pretty(&summary).expect("summary serializes"));
            Ok(EXIT_CERTIFIED)
        }
        Command::Circle { plant } => {
            let g = load_plant(&plant)?;
            let grid = FrequencyGrid::default_certification();
            let alpha = circle_baseline(&g, &grid)?;
            let summary = json!({
                "alpha_circle": json_num(alpha),
                "unbounded": !alpha.is_finite(),
            });
            println!("{}", serde_json::to_string_pretty(&summary).expect("summary serializes"));
            Ok(EXIT_CERTIFIED)
        }
        Command::CheckMultiplier { multiplier, class } => {
            let m = load_multiplier(&multiplier)?;
            let report = m.validity_for_class(class.into());
            let text = serde_json::to_string_pretty(&report).expect("validity reports serialize");
            println!("{text}");
            Ok(if report.valid { EXIT_CERTIFIED } else { EXIT_NOT_CERTIFIED })
        }
        Command::Simulate { plant, phi, input, dt, steps, out } => {
            let g = load_plant(&plant)?;
            let shape = parse_phi_spec(&phi)?;
            let spec: InputSignalSpec = input.parse()?;
            // Size the step to the measured slope of the concrete shape.
            let probe: Vec<f64> = (0..2001).map(|i| -10.0 + 0.01 * i as f64).collect();
            let slope_hint = check_class(&shape, &probe)?.max_slope.clamp(0.0, 100.0);
            let dt = match dt {
                Some(v) if v.is_finite() && v > 0.0 => v,
                Some(v) => {
                    return Err(Error::InvalidSignal(format!(
                        "step size must be positive, got {v}"
                    )))
                }
                None => default_sim_dt(&g, slope_hint),
            };
            let steps = steps.unwrap_or_else(|| default_sim_steps(&g, dt));
            let r = spec.sample(dt, steps)?;
            let sim = simulate_lure(&g, &shape, &r, Some(steps))?;
            if let Some(path) = &out {
                std::fs::write(path, trajectory_csv(&sim))?;
            }
            let summary = json!({
                "diverged": sim.diverged,
                "dt": sim.dt,
                "gain_ratio": json_num(sim.gain_ratio()),
                "r_l2": sim.r_l2(),
                "steps": sim.t.len(),
                "y_l2": sim.y_l2(),
            });
            println!("{}", serde_json::to_string_pretty(&summary).expect("summary serializes"));
            Ok(EXIT_CERTIFIED)
        }
        Command::FdiData { plant, class, alpha, multiplier, grid, out } => {
            let g = load_plant(&plant)?;
            let m = match &multiplier {
                Some(path) => load_multiplier(path)?,
                None => MultiplierBasis::identity(),
            };
            let grid = grid_from(grid.as_ref())?;
            let rows = fdi_rows(&g, &m, alpha, class.into(), &grid)?;
            emit(&write_fdi_csv(&rows), out.as_deref())?;
            Ok(EXIT_CERTIFIED)
        }
    }
}

fn summary_json(verdict: &Verdict, margin: f64) -> String {
    let status = match verdict {
        Verdict::Certified => "certified",
        Verdict::NotCertified { .. } => "not_certified",
        Verdict::Inconclusive { .. } => "inconclusive",
    };
    let summary = json!({ "margin": json_num(margin), "status": status });
    serde_json::to_string_pretty(&summary).expect("summary serializes")
}

fn trajectory_csv(sim: &SimResult) -> String {
    let mut csv = String::from("t,r,y,u\n");
    for i in 0..sim.t.len() {
        csv.push_str(&format!(
            "{},{},{},{}\n",
            csv_number(sim.t[i]),
            csv_number(sim.r[i]),
            csv_number(sim.y[i]),
            csv_number(sim.u[i]),
        ));
    }
    csv
}
