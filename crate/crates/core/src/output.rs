//! Files written by `run` and `sweep`: manifest.json, ledger.csv,
//! windows.csv, fields/r_<step>.csv, table.csv and cauchy.csv.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use serde_json::json;

use crate::diagnostics::EnergyLedger;
use crate::driver::{RunOutput, WindowRecord};
use crate::error::{Error, Result};
use crate::sweep::{cauchy_table, numeric, FinalState, PointResult, SweepPlan};

/// `git describe` of the build, or "unknown".
pub const BUILD: &str = env!("FSISPLIT_BUILD");

/// Entries this module may create; `--force` removes only these.
const OWNED: [&str; 7] = [
    "manifest.json",
    "ledger.csv",
    "windows.csv",
    "table.csv",
    "cauchy.csv",
    "fields",
    "points",
];

/// Creates `dir`, refusing a non-empty directory unless `force` is set.
pub fn prepare_output_dir(dir: &Path, force: bool) -> Result<()> {
    if dir.exists() {
        if !dir.is_dir() {
            return Err(Error::Config(format!("{} exists and is not a directory", dir.display())));
        }
        let non_empty = fs::read_dir(dir)?.next().is_some();
        if non_empty && !force {
            return Err(Error::Config(format!(
                "output directory {} is not empty (use --force to overwrite)",
                dir.display()
            )));
        }
        for name in OWNED {
            let path = dir.join(name);
            if path.is_dir() {
                fs::remove_dir_all(&path)?;
            } else if path.exists() {
                fs::remove_file(&path)?;
            }
        }
    }
    fs::create_dir_all(dir)?;
    Ok(())
}

fn write_file(path: &Path, body: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    body(&mut w)?;
    w.flush()?;
    w.get_ref().sync_all()?;
    Ok(())
}

pub fn manifest(out: &RunOutput) -> serde_json::Value {
    json!({
        "build": BUILD,
        "config": out.config,
        "status": out.status,
        "passed": out.passed(),
        "verdicts": out.verdicts,
        "substeps": out.substeps,
        "windows_completed": out.windows.len(),
        "coupling_gap": out.coupling_gap,
        "korn_constant": out.korn_constant,
        "coercivity": { "kappa": out.coercivity.0, "c_star": out.coercivity.1 },
        "energy_bound": out.energy_bound,
        "continuation": out.continuation,
        "admissibility": out.windows.last().map(|w| &w.admissibility),
        "warnings": out.warnings,
    })
}

pub fn write_ledger(path: &Path, ledger: &[EnergyLedger]) -> Result<()> {
    write_file(path, |w| {
        writeln!(w, "{}", EnergyLedger::CSV_HEADER)?;
        for row in ledger {
            writeln!(w, "{}", row.csv_row())?;
        }
        Ok(())
    })
}

pub fn write_windows(path: &Path, windows: &[WindowRecord], dt: f64) -> Result<()> {
    write_file(path, |w| {
        writeln!(w, "{}", WindowRecord::CSV_HEADER)?;
        for rec in windows {
            writeln!(w, "{}", rec.csv_row(dt))?;
        }
        Ok(())
    })
}

/// Long-format density field: one `i,j,x,z,r` row per cell.
pub fn write_field(path: &Path, out: &RunOutput, density: &[f64]) -> Result<()> {
    let d = &out.config.discretization;
    let (nx, nz) = (d.nx, d.nz);
    let (hx, hz) = (out.config.domain.length / nx as f64, 1.0 / nz as f64);
    write_file(path, |w| {
        writeln!(w, "i,j,x,z,r")?;
        for j in 0..nz {
            for i in 0..nx {
                let x = (i as f64 + 0.5) * hx;
                let z = -1.0 + (j as f64 + 0.5) * hz;
                writeln!(w, "{i},{j},{x:e},{z:e},{:e}", density[j * nx + i])?;
            }
        }
        Ok(())
    })
}

/// Writes every run artefact into an already prepared directory.
pub fn write_run(dir: &Path, out: &RunOutput) -> Result<()> {
    let text = serde_json::to_string_pretty(&manifest(out)).map_err(|e| Error::Config(e.to_string()))?;
    write_file(&dir.join("manifest.json"), |w| writeln!(w, "{text}"))?;
    write_ledger(&dir.join("ledger.csv"), &out.ledger)?;
    write_windows(&dir.join("windows.csv"), &out.windows, out.config.dt())?;
    if !out.snapshots.is_empty() {
        let fields = dir.join("fields");
        fs::create_dir_all(&fields)?;
        for snap in &out.snapshots {
            write_field(&fields.join(format!("r_{}.csv", snap.step)), out, &snap.density)?;
        }
    }
    Ok(())
}

fn csv_value(v: &toml::Value) -> String {
    match v {
        toml::Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// table.csv with one row per point and, for a single axis of at least
/// three numeric values, cauchy.csv on the final states. Each point's run
/// files go to points/<index>/.
pub fn write_sweep(dir: &Path, plan: &SweepPlan, results: &[PointResult]) -> Result<()> {
    let axes: Vec<&str> = plan.axes.iter().map(|a| a.parameter.as_str()).collect();
    write_file(&dir.join("table.csv"), |w| {
        writeln!(w, "point,{},status,passed,{}", axes.join(","), plan.reduction.name())?;
        for r in results {
            let values: Vec<String> = r.point.assignments.iter().map(|(_, v)| csv_value(v)).collect();
            let (status, passed) = match &r.outcome {
                Ok(out) => (out.status.name(), out.passed().to_string()),
                Err(_) => ("error", "false".to_string()),
            };
            writeln!(
                w,
                "{},{},{status},{passed},{:e}",
                r.point.index,
                values.join(","),
                r.value(plan.reduction)
            )?;
        }
        Ok(())
    })?;

    for r in results {
        let point_dir = dir.join("points").join(r.point.index.to_string());
        fs::create_dir_all(&point_dir)?;
        match &r.outcome {
            Ok(out) => write_run(&point_dir, out)?,
            Err(message) => write_file(&point_dir.join("manifest.json"), |w| {
                writeln!(w, "{}", json!({ "build": BUILD, "error": message }))
            })?,
        }
    }

    if plan.axes.len() == 1 && results.len() >= 3 && results.iter().all(|r| r.outcome.is_ok()) {
        let params: Option<Vec<f64>> = results.iter().map(|r| numeric(&r.point.assignments[0].1)).collect();
        if let Some(params) = params {
            let states: Vec<FinalState> = results
                .iter()
                .map(|r| FinalState::from_run(r.outcome.as_ref().expect("checked ok")))
                .collect();
            let rows = cauchy_table(&params, &states)?;
            write_file(&dir.join("cauchy.csv"), |w| {
                writeln!(w, "from,to,difference,order")?;
                for row in &rows {
                    let order = row.order.map_or(String::new(), |p| format!("{p:e}"));
                    writeln!(w, "{:e},{:e},{:e},{order}", row.from, row.to, row.difference)?;
                }
                Ok(())
            })?;
        }
    }
    Ok(())
}
