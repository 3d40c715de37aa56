use std::fs;
use std::path::Path;

use fsisplit::output::{prepare_output_dir, write_run, write_sweep};
use fsisplit::sweep::{cauchy_rows, cauchy_table, run_sweep, FinalState, Reduction, SweepPlan};
use fsisplit::{run, Error, RunConfig};

const PLAN: &str = r#"
reduction = "final_energy"

[base.time]
t_final = 0.01
windows = 2

[base.discretization]
k = 2
nx = 8
nz = 4
fsp_substeps = 4

[[axes]]
parameter = "fluid.epsilon"
values = [0.1, 0.05, 0.025]

[[axes]]
parameter = "time.windows"
values = [2, 4]
"#;

#[test]
fn plan_parses_and_expands_first_axis_slowest() {
    let plan = SweepPlan::from_toml_str(PLAN).unwrap();
    assert_eq!(plan.reduction, Reduction::FinalEnergy);
    let points = plan.points().unwrap();
    assert_eq!(points.len(), 6);
    let seen: Vec<(f64, usize)> = points
        .iter()
        .map(|p| (p.config.fluid.epsilon, p.config.time.windows))
        .collect();
    assert_eq!(
        seen,
        vec![(0.1, 2), (0.1, 4), (0.05, 2), (0.05, 4), (0.025, 2), (0.025, 4)]
    );
    for (i, p) in points.iter().enumerate() {
        assert_eq!(p.index, i);
        assert_eq!(p.config.discretization.k, 2);
    }
}

#[test]
fn plan_rejects_unknown_keys_and_parameters() {
    let extra = format!("{PLAN}\nbogus = 1\n");
    assert!(matches!(SweepPlan::from_toml_str(&extra), Err(Error::Config(_))));
    let unknown = PLAN.replace("fluid.epsilon", "fluid.viscosity");
    assert!(matches!(SweepPlan::from_toml_str(&unknown), Err(Error::Config(_))));
    let empty = "reduction = \"entropy\"\naxes = []\n";
    assert!(matches!(SweepPlan::from_toml_str(empty), Err(Error::Config(_))));
    let bad_value = PLAN.replace("[2, 4]", "[2, \"four\"]");
    assert!(matches!(SweepPlan::from_toml_str(&bad_value), Err(Error::Config(_))));
    let bad_base = PLAN.replace("t_final = 0.01", "t_end = 0.01");
    assert!(matches!(SweepPlan::from_toml_str(&bad_base), Err(Error::Config(_))));
}

#[test]
fn cauchy_rows_of_a_constant_sequence_vanish() {
    let params = [1.0, 0.5, 0.25, 0.125];
    let rows = cauchy_rows(&params, |_, _| Ok(0.0)).unwrap();
    assert_eq!(rows.len(), 3);
    assert!(rows.iter().all(|r| r.difference == 0.0 && r.order.is_none()));
}

#[test]
fn cauchy_rows_recover_a_linear_rate() {
    // Values u(h) = 3 + 2h, so differences shrink like h.
    let params = [0.1, 0.05, 0.025, 0.0125];
    let value = |h: f64| 3.0 + 2.0 * h;
    let rows = cauchy_rows(&params, |a, b| Ok((value(params[a]) - value(params[b])).abs())).unwrap();
    assert!(rows[0].order.is_none());
    for r in &rows[1..] {
        assert!((r.order.unwrap() - 1.0).abs() < 0.01, "{r:?}");
    }
}

#[test]
fn cauchy_rows_need_three_points() {
    assert!(matches!(cauchy_rows(&[1.0, 2.0], |_, _| Ok(1.0)), Err(Error::Config(_))));
}

fn state(k: usize, nx: usize, nz: usize, fill: f64) -> FinalState {
    FinalState {
        length: 1.0,
        k,
        nx,
        nz,
        beta: (0..k).map(|i| i as f64).collect(),
        gamma: vec![fill; k],
        theta: vec![0.0; k],
        fluid: (0..2 * k).map(|i| i as f64).collect(),
        density: (0..nx * nz).map(|i| i as f64).collect(),
    }
}

#[test]
fn projection_averages_blocks_and_keeps_leading_modes() {
    let s = state(3, 4, 2, 1.0);
    let p = s.project(2, 2, 1).unwrap();
    assert_eq!(p.beta, vec![0.0, 1.0]);
    // Interior block [0, 1, 2] and lifting block [3, 4, 5] each cut to 2.
    assert_eq!(p.fluid, vec![0.0, 1.0, 3.0, 4.0]);
    // Cells (0,1,4,5) and (2,3,6,7).
    assert_eq!(p.density, vec![2.5, 4.5]);
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    assert_eq!(mean(&p.density), mean(&s.density));
    assert_eq!(s.project(3, 4, 2).unwrap(), s);
}

#[test]
fn incompatible_projections_are_rejected() {
    let s = state(2, 6, 4, 0.0);
    assert!(matches!(s.project(3, 6, 4), Err(Error::IncompatibleResolution(_))));
    assert!(matches!(s.project(2, 4, 4), Err(Error::IncompatibleResolution(_))));
    assert!(matches!(
        s.distance(&state(2, 6, 2, 0.0)),
        Err(Error::IncompatibleResolution(_))
    ));
}

#[test]
fn cauchy_table_projects_to_the_coarsest_state() {
    let states = [state(3, 8, 4, 1.0), state(2, 4, 2, 1.5), state(2, 4, 2, 1.75)];
    let rows = cauchy_table(&[1.0, 2.0, 4.0], &states).unwrap();
    assert_eq!(rows.len(), 2);
    // Velocity fill differs by 0.5 then 0.25 in two modes.
    assert!(rows[1].difference < rows[0].difference);
    assert!(cauchy_table(&[1.0, 2.0], &states).is_err());
}

#[test]
fn sweep_results_do_not_depend_on_the_worker_count() {
    let plan = SweepPlan::from_toml_str(PLAN).unwrap();
    let serial = run_sweep(&plan, Some(1)).unwrap();
    let parallel = run_sweep(&plan, Some(4)).unwrap();
    assert_eq!(serial.len(), 6);
    for (a, b) in serial.iter().zip(&parallel) {
        assert_eq!(a.point.index, b.point.index);
        let (x, y) = (a.value(plan.reduction), b.value(plan.reduction));
        assert_eq!(x.to_bits(), y.to_bits());
    }
    let da = tempfile::tempdir().unwrap();
    let db = tempfile::tempdir().unwrap();
    write_sweep(da.path(), &plan, &serial).unwrap();
    write_sweep(db.path(), &plan, &parallel).unwrap();
    assert_eq!(read(da.path(), "table.csv"), read(db.path(), "table.csv"));
    assert!(da.path().join("points/5/ledger.csv").exists());
}

#[test]
fn single_axis_sweeps_write_a_cauchy_table() {
    let text = PLAN.replace(
        "[[axes]]\nparameter = \"time.windows\"\nvalues = [2, 4]\n",
        "",
    );
    let plan = SweepPlan::from_toml_str(&text).unwrap();
    let results = run_sweep(&plan, Some(2)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    write_sweep(dir.path(), &plan, &results).unwrap();
    let cauchy = read(dir.path(), "cauchy.csv");
    assert_eq!(cauchy.lines().count(), 3);
    assert!(cauchy.starts_with("from,to,difference,order"));
}

fn read(dir: &Path, name: &str) -> String {
    fs::read_to_string(dir.join(name)).unwrap()
}

#[test]
fn output_directory_needs_force_when_not_empty() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    prepare_output_dir(&out, false).unwrap();
    prepare_output_dir(&out, false).unwrap();
    fs::write(out.join("ledger.csv"), "old").unwrap();
    fs::write(out.join("notes.txt"), "keep").unwrap();
    assert!(matches!(prepare_output_dir(&out, false), Err(Error::Config(_))));
    prepare_output_dir(&out, true).unwrap();
    assert!(!out.join("ledger.csv").exists());
    assert!(out.join("notes.txt").exists());
    let file = dir.path().join("plain");
    fs::write(&file, "").unwrap();
    assert!(prepare_output_dir(&file, true).is_err());
}

#[test]
fn run_files_are_byte_identical_across_runs() {
    let mut c = RunConfig::default();
    c.discretization.k = 2;
    c.discretization.nx = 8;
    c.discretization.nz = 4;
    c.time.t_final = 0.01;
    c.time.windows = 4;
    c.output.cadence = 2;
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    for d in &dirs {
        write_run(d.path(), &run(&c).unwrap()).unwrap();
    }
    for name in ["manifest.json", "ledger.csv", "windows.csv", "fields/r_0.csv", "fields/r_2.csv", "fields/r_4.csv"] {
        assert_eq!(read(dirs[0].path(), name), read(dirs[1].path(), name), "{name}");
    }
    let ledger = read(dirs[0].path(), "ledger.csv");
    assert_eq!(ledger.lines().count(), 1 + 5);
    let field = read(dirs[0].path(), "fields/r_2.csv");
    assert_eq!(field.lines().count(), 1 + 32);
}
