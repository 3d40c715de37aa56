use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;

use fsisplit::bases::{assemble_coupled_matrices, FluidBasis, HeatBasis, PlateBasis};
use fsisplit::checks::run_checks;
use fsisplit::output::{prepare_output_dir, write_run, write_sweep};
use fsisplit::sweep::{run_sweep, SweepPlan};
use fsisplit::{Error, RunConfig, RunStatus};

/// Operator-splitting solver for a compressible fluid under a thermoelastic plate.
#[derive(Parser)]
#[command(name = "fsisplit", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one trajectory and write its manifest, ledgers and fields.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Overwrite a non-empty output directory.
        #[arg(long)]
        force: bool,
    },
    /// Run every point of a sweep plan and write the reduction table.
    Sweep {
        #[arg(long)]
        plan: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Worker threads (defaults to the CPU count).
        #[arg(long)]
        jobs: Option<usize>,
        #[arg(long)]
        force: bool,
    },
    /// Run the quick invariant suite.
    Check {
        /// Only checks whose name contains this string.
        #[arg(long)]
        filter: Option<String>,
    },
    /// Print basis diagnostics as JSON.
    Bases {
        #[arg(long)]
        config: PathBuf,
        /// Also write the JSON to this file.
        #[arg(long)]
        dump: Option<PathBuf>,
    },
}

const EXIT_SOLVER: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_INVARIANT: u8 = 3;

fn exit_code(e: &Error) -> u8 {
    match e.kind() {
        "config" => EXIT_CONFIG,
        "invariant" => EXIT_INVARIANT,
        _ => EXIT_SOLVER,
    }
}

fn report(e: &Error) -> ExitCode {
    let window = match e {
        Error::InWindow { window, .. } => Some(*window),
        _ => None,
    };
    eprintln!(
        "{}",
        json!({ "error": { "kind": e.kind(), "message": e.to_string(), "window": window } })
    );
    ExitCode::from(exit_code(e))
}

fn read(path: &Path, what: &str) -> Result<String, Error> {
    fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {what} {}: {e}", path.display())))
}

fn load_config(path: &Path) -> Result<RunConfig, Error> {
    RunConfig::from_toml_str(&read(path, "config")?)
}

fn cmd_run(config: &Path, out: &Path, force: bool) -> Result<u8, Error> {
    let config = load_config(config)?;
    prepare_output_dir(out, force)?;
    let result = fsisplit::run(&config)?;
    write_run(out, &result)?;
    let failed: Vec<&str> = result.verdicts.iter().filter(|v| !v.passed).map(|v| v.name).collect();
    println!(
        "{}",
        json!({
            "status": result.status.name(),
            "collision": matches!(result.status, RunStatus::Collision { .. }).then_some(result.status),
            "windows": result.windows.len(),
            "passed": failed.is_empty(),
            "failed_verdicts": failed,
            "coupling_gap": result.coupling_gap,
        })
    );
    Ok(if failed.is_empty() { 0 } else { EXIT_INVARIANT })
}

fn cmd_sweep(plan: &Path, out: &Path, jobs: Option<usize>, force: bool) -> Result<u8, Error> {
    let plan = SweepPlan::from_toml_str(&read(plan, "plan")?)?;
    prepare_output_dir(out, force)?;
    let results = run_sweep(&plan, jobs)?;
    write_sweep(out, &plan, &results)?;
    let errors = results.iter().filter(|r| r.outcome.is_err()).count();
    let failed = results
        .iter()
        .filter(|r| r.outcome.as_ref().is_ok_and(|o| !o.passed()))
        .count();
    println!(
        "{}",
        json!({ "points": results.len(), "errors": errors, "failed_verdicts": failed })
    );
    for r in &results {
        if let Err(message) = &r.outcome {
            eprintln!(
                "{}",
                json!({ "error": { "kind": "solver", "point": r.point.index, "message": message } })
            );
        }
    }
    Ok(if errors > 0 {
        EXIT_SOLVER
    } else if failed > 0 {
        EXIT_INVARIANT
    } else {
        0
    })
}

fn cmd_check(filter: Option<&str>) -> Result<u8, Error> {
    let outcomes = run_checks(filter);
    if outcomes.is_empty() {
        return Err(Error::Config(format!("no check matches `{}`", filter.unwrap_or(""))));
    }
    for o in &outcomes {
        println!("{} {}: {}", if o.passed { "PASS" } else { "FAIL" }, o.name, o.detail);
    }
    Ok(if outcomes.iter().all(|o| o.passed) { 0 } else { EXIT_INVARIANT })
}

fn cmd_bases(config: &Path, dump: Option<&Path>) -> Result<u8, Error> {
    let config = load_config(config)?;
    let d = &config.discretization;
    let length = config.domain.length;
    let plate = PlateBasis::new(d.k, length)?;
    let heat = HeatBasis::new(d.k, length);
    let fluid = FluidBasis::new(&plate);
    let mats = assemble_coupled_matrices(&plate, &heat, d.quadrature_order)?;
    let rows = |m: &fsisplit::bases::matrices::CoupledMatrices, coupling: bool| -> Vec<Vec<f64>> {
        let src = if coupling { &m.coupling } else { &m.regularizer };
        (0..src.nrows()).map(|i| src.row(i).iter().cloned().collect()).collect()
    };
    let doc = json!({
        "k": d.k,
        "length": length,
        "plate": plate.modes.iter().map(|m| json!({ "mu": m.mu, "xi": m.xi, "sigma": m.sigma })).collect::<Vec<_>>(),
        "heat_xi": heat.xi,
        "fluid_interior": fluid.interior,
        "lifting_terms": { "z=-0.5": fluid.lifting.terms_at(-0.5), "z=-0.05": fluid.lifting.terms_at(-0.05) },
        "coupling": rows(&mats, true),
        "regularizer": rows(&mats, false),
        "quadrature_order": d.quadrature_order,
        "warnings": mats.warnings,
    });
    let text = serde_json::to_string_pretty(&doc).expect("json value serializes");
    if let Some(path) = dump {
        fs::write(path, format!("{text}\n"))?;
    }
    println!("{text}");
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run { config, out, force } => cmd_run(config, out, *force),
        Command::Sweep { plan, out, jobs, force } => cmd_sweep(plan, out, *jobs, *force),
        Command::Check { filter } => cmd_check(filter.as_deref()),
        Command::Bases { config, dump } => cmd_bases(config, dump.as_deref()),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => report(&e),
    }
}
