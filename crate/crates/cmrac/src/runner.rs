//! Command implementations behind the CLI: feasibility check, simulation,
//! head-to-head comparison, feasibility-region sweep, and the gradient
//! diagnostic. Each writes its artifacts under an output directory and
//! returns the paths.

use std::fs;
use std::path::{Path, PathBuf};

use crate::diagnostics::{run_gradcheck, GradCheckReport};
use crate::error::{Error, Result};
use crate::feasibility::{region_sweep, FeasibilityReport, GridSpec};
use crate::plot::{sweep_heatmap_svg, BoundLine, LinePlot, Series};
use crate::scenario::Scenario;
use crate::sim::{
    feasibility_report, simulate, ControllerKind, MonitorReport, Trajectory,
};
use crate::trace::{
    feasibility_report_text, monitor_report_text, sweep_to_text, trajectory_to_csv,
};

/// Paths of everything a command produced.
#[derive(Debug, Clone, Default)]
pub struct RunArtifacts {
    pub trajectory_csv: Vec<PathBuf>,
    pub monitor_reports: Vec<PathBuf>,
    pub plots: Vec<PathBuf>,
    pub feasibility_report: Option<PathBuf>,
    pub sweep_data: Option<PathBuf>,
}

impl RunArtifacts {
    /// Every path listed, for existence checks.
    pub fn all_paths(&self) -> Vec<&PathBuf> {
        self.trajectory_csv
            .iter()
            .chain(&self.monitor_reports)
            .chain(&self.plots)
            .chain(&self.feasibility_report)
            .chain(&self.sweep_data)
            .collect()
    }
}

/// Exit-code mapping: 0 pass, 2 expected failure (infeasible
/// configuration or violated constraints), 1 internal error.
pub fn exit_code_for_error(e: &Error) -> u8 {
    match e {
        Error::InvalidScenario { .. }
        | Error::InfeasibleC1 { .. }
        | Error::InfeasibleC2 { .. }
        | Error::DisturbanceMargin { .. }
        | Error::InfeasibleModel(_) => 2,
        _ => 1,
    }
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|source| Error::Io {
        path: dir.display().to_string(),
        source,
    })
}

/// Feasibility analysis; report printed by the caller and written to
/// `feasibility.txt`.
pub fn cmd_check(
    scenario: &Scenario,
    out_dir: &Path,
) -> Result<(FeasibilityReport<f64>, RunArtifacts)> {
    ensure_dir(out_dir)?;
    let (problem, _) = scenario.build()?;
    let report = feasibility_report(&problem)?;
    let path = out_dir.join("feasibility.txt");
    write_file(&path, &feasibility_report_text(&report))?;
    let mut artifacts = RunArtifacts {
        feasibility_report: Some(path),
        ..Default::default()
    };
    if !problem.plant.is_hurwitz()? {
        // accepted with a warning: only the feasibility analysis relies on
        // open-loop stability, the simulation itself does not
        eprintln!("warning: plant A is not Hurwitz; feasibility guarantees assume a stable plant");
    }
    artifacts.plots.clear();
    Ok((report, artifacts))
}

fn norm_series(traj: &Trajectory<f64>, pick: fn(&crate::sim::Sample<f64>) -> f64) -> Vec<(f64, f64)> {
    traj.samples
        .iter()
        .map(|s| (s.state.t, pick(s)))
        .collect()
}

fn simulate_plots(
    traj: &Trajectory<f64>,
    scenario: &Scenario,
    out_dir: &Path,
    prefix: &str,
) -> Result<Vec<PathBuf>> {
    let mut plots = Vec::new();
    let specs: [(&str, &str, fn(&crate::sim::Sample<f64>) -> f64, f64, &str); 4] = [
        (
            "state_norm",
            "plant state norm",
            |s| s.derived.norm_x,
            scenario.x_bar,
            "x_bar",
        ),
        (
            "input_norm",
            "input magnitude",
            |s| s.derived.norm_u,
            scenario.u1_bar,
            "u1_bar",
        ),
        (
            "input_rate_norm",
            "input rate",
            |s| s.derived.norm_udot,
            scenario.u2_bar,
            "u2_bar",
        ),
        (
            "error_norm",
            "difference error norm",
            |s| s.derived.norm_ed,
            scenario.ed_bar.unwrap_or(f64::NAN),
            "ed_bar",
        ),
    ];
    for (stem, title, pick, bound, bound_label) in specs {
        let mut bounds = Vec::new();
        if bound.is_finite() {
            bounds.push(BoundLine {
                label: bound_label.to_string(),
                y: bound,
            });
        }
        let plot = LinePlot {
            title: title.to_string(),
            x_label: "t [s]".to_string(),
            y_label: title.to_string(),
            series: vec![Series {
                label: format!("{}", traj.controller),
                points: norm_series(traj, pick),
                dashed: false,
            }],
            bounds,
        };
        let path = out_dir.join(format!("{prefix}{stem}.svg"));
        write_file(&path, &plot.to_svg())?;
        plots.push(path);
    }
    Ok(plots)
}

/// Runs the scenario's configured controller, writing the trajectory CSV,
/// the monitor report, the feasibility report, and norm-vs-time plots.
pub fn cmd_simulate(
    scenario: &Scenario,
    out_dir: &Path,
    force: bool,
) -> Result<(MonitorReport<f64>, RunArtifacts)> {
    ensure_dir(out_dir)?;
    let (problem, integ) = scenario.build()?;
    let feas = feasibility_report(&problem)?;
    let feas_path = out_dir.join("feasibility.txt");
    write_file(&feas_path, &feasibility_report_text(&feas))?;
    let (traj, report) = simulate(&problem, &integ, force)?;

    let csv_path = out_dir.join("trajectory.csv");
    write_file(&csv_path, &trajectory_to_csv(&traj))?;
    let mon_path = out_dir.join("monitors.txt");
    write_file(&mon_path, &monitor_report_text(&report))?;
    let plots = simulate_plots(&traj, scenario, out_dir, "")?;

    Ok((
        report,
        RunArtifacts {
            trajectory_csv: vec![csv_path],
            monitor_reports: vec![mon_path],
            plots,
            feasibility_report: Some(feas_path),
            sweep_data: None,
        },
    ))
}

/// Runs the scenario under the barrier-protected controller and the
/// unprotected baseline on identical models and signals, then overlays
/// the three constrained norms.
pub fn cmd_compare(
    scenario: &Scenario,
    out_dir: &Path,
    force: bool,
) -> Result<(MonitorReport<f64>, MonitorReport<f64>, RunArtifacts)> {
    ensure_dir(out_dir)?;
    let mut proposed_scenario = scenario.clone();
    proposed_scenario.controller = ControllerKind::Proposed;
    let mut baseline_scenario = scenario.clone();
    baseline_scenario.controller = ControllerKind::RobustMrac;
    if let Some(init) = &mut baseline_scenario.init {
        // the baseline has no input filter; its algebraic input ignores
        // the filter initial conditions, which stay in the record as zeros
        init.u = crate::linalg::Vector::zeros(scenario.b.cols());
        init.u_dot = crate::linalg::Vector::zeros(scenario.b.cols());
        init.ku = crate::linalg::Matrix::zeros(scenario.b.cols(), scenario.b.cols());
    }

    let (p_problem, p_integ) = proposed_scenario.build()?;
    let (p_traj, p_report) = simulate(&p_problem, &p_integ, force)?;
    let (b_problem, b_integ) = baseline_scenario.build()?;
    let (b_traj, b_report) = simulate(&b_problem, &b_integ, true)?;

    let mut artifacts = RunArtifacts::default();
    for (name, traj, report) in [
        ("proposed", &p_traj, &p_report),
        ("baseline", &b_traj, &b_report),
    ] {
        let csv = out_dir.join(format!("{name}_trajectory.csv"));
        write_file(&csv, &trajectory_to_csv(traj))?;
        artifacts.trajectory_csv.push(csv);
        let mon = out_dir.join(format!("{name}_monitors.txt"));
        write_file(&mon, &monitor_report_text(report))?;
        artifacts.monitor_reports.push(mon);
    }

    let overlays: [(&str, &str, fn(&crate::sim::Sample<f64>) -> f64, f64); 3] = [
        ("compare_state_norm", "plant state norm", |s| s.derived.norm_x, scenario.x_bar),
        ("compare_input_norm", "input magnitude", |s| s.derived.norm_u, scenario.u1_bar),
        (
            "compare_input_rate_norm",
            "input rate",
            |s| s.derived.norm_udot,
            scenario.u2_bar,
        ),
    ];
    for (stem, title, pick, bound) in overlays {
        let plot = LinePlot {
            title: title.to_string(),
            x_label: "t [s]".to_string(),
            y_label: title.to_string(),
            series: vec![
                Series {
                    label: "proposed".into(),
                    points: norm_series(&p_traj, pick),
                    dashed: false,
                },
                Series {
                    label: "robust-mrac".into(),
                    points: norm_series(&b_traj, pick),
                    dashed: true,
                },
            ],
            bounds: vec![BoundLine {
                label: "bound".into(),
                y: bound,
            }],
        };
        let path = out_dir.join(format!("{stem}.svg"));
        write_file(&path, &plot.to_svg())?;
        artifacts.plots.push(path);
    }
    Ok((p_report, b_report, artifacts))
}

/// Feasibility map over a (u1_bar, x_bar) grid; data file plus heat map.
pub fn cmd_sweep(
    scenario: &Scenario,
    grid: &GridSpec,
    out_dir: &Path,
) -> Result<(usize, RunArtifacts)> {
    ensure_dir(out_dir)?;
    let (problem, _) = scenario.build()?;
    let inputs = problem.feasibility_inputs()?;
    let cells = region_sweep(&inputs, grid)?;
    let data_path = out_dir.join("sweep.txt");
    write_file(&data_path, &sweep_to_text(&cells))?;
    let svg_path = out_dir.join("sweep.svg");
    write_file(&svg_path, &sweep_heatmap_svg(&cells, "feasibility region"))?;
    let feasible_count = cells.iter().filter(|c| c.feasible).count();
    Ok((
        feasible_count,
        RunArtifacts {
            plots: vec![svg_path],
            sweep_data: Some(data_path),
            ..Default::default()
        },
    ))
}

/// Gradient diagnostic; report text also written to `gradcheck.txt`.
pub fn cmd_gradcheck(seed: u64, out_dir: &Path) -> Result<(GradCheckReport, RunArtifacts)> {
    ensure_dir(out_dir)?;
    let report = run_gradcheck(seed)?;
    let path = out_dir.join("gradcheck.txt");
    write_file(&path, &format!("{report}\n"))?;
    Ok((
        report,
        RunArtifacts {
            monitor_reports: vec![path],
            ..Default::default()
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{preset_paper_s4, preset_paper_s4_mrac};

    fn tmpdir(name: &str) -> PathBuf {
        let dir = std::env::temp_dir().join(format!("cmrac-runner-{name}-{}", std::process::id()));
        let _ = fs::remove_dir_all(&dir);
        dir
    }

    #[test]
    fn check_writes_feasibility_report() {
        let dir = tmpdir("check");
        let (report, artifacts) = cmd_check(&preset_paper_s4(), &dir).unwrap();
        assert!(report.feasible);
        assert!((report.c1_threshold - 11.5).abs() < 1e-9);
        for p in artifacts.all_paths() {
            assert!(p.exists(), "{p:?} missing");
        }
        let text = fs::read_to_string(artifacts.feasibility_report.unwrap()).unwrap();
        assert!(text.contains("C1"));
        assert!(text.contains("PASS"));
    }

    #[test]
    fn check_flags_infeasible_kx() {
        let dir = tmpdir("check-bad");
        let mut s = preset_paper_s4();
        s.kx_bar = 12.0;
        let (report, _) = cmd_check(&s, &dir).unwrap();
        assert!(!report.c1_ok && !report.feasible);
    }

    #[test]
    fn check_flags_small_x_bar() {
        let dir = tmpdir("check-xbar");
        let mut s = preset_paper_s4();
        s.x_bar = 5.0;
        s.ed_bar = Some(0.05); // keep the spec constructible; C2 still fails
        let (report, _) = cmd_check(&s, &dir).unwrap();
        assert!(!report.c2_ok);
    }

    #[test]
    fn simulate_short_run_produces_all_artifacts() {
        let dir = tmpdir("simulate");
        let mut s = preset_paper_s4();
        s.horizon = 1.0;
        let (report, artifacts) = cmd_simulate(&s, &dir, false).unwrap();
        assert!(report.all_ok);
        assert_eq!(artifacts.trajectory_csv.len(), 1);
        assert_eq!(artifacts.plots.len(), 4);
        for p in artifacts.all_paths() {
            assert!(p.exists(), "{p:?} missing");
        }
        let csv = fs::read_to_string(&artifacts.trajectory_csv[0]).unwrap();
        assert!(csv.starts_with("t,x1,x2,x3,x4,xr1"));
    }

    #[test]
    fn compare_short_run_flags_baseline() {
        let dir = tmpdir("compare");
        let mut s = preset_paper_s4();
        s.horizon = 1.0;
        let (p_report, b_report, artifacts) = cmd_compare(&s, &dir, false).unwrap();
        assert!(p_report.all_ok);
        assert!(!b_report.all_ok);
        assert!(!b_report.input_ok.ok);
        assert_eq!(artifacts.trajectory_csv.len(), 2);
        assert_eq!(artifacts.plots.len(), 3);
        for p in artifacts.all_paths() {
            assert!(p.exists());
        }
    }

    #[test]
    fn sweep_produces_map() {
        let dir = tmpdir("sweep");
        let grid = GridSpec {
            u1_min: 0.2,
            u1_max: 2.0,
            u1_count: 12,
            x_min: 3.0,
            x_max: 9.0,
            x_count: 12,
        };
        let (feasible, artifacts) = cmd_sweep(&preset_paper_s4(), &grid, &dir).unwrap();
        assert!(feasible > 0 && feasible < 144);
        let data = fs::read_to_string(artifacts.sweep_data.unwrap()).unwrap();
        assert!(data.starts_with("u1_bar x_bar feasible"));
        assert_eq!(data.lines().count(), 145);
    }

    #[test]
    fn gradcheck_passes_and_writes_report() {
        let dir = tmpdir("gradcheck");
        let (report, artifacts) = cmd_gradcheck(3, &dir).unwrap();
        assert!(report.all_ok);
        let text = fs::read_to_string(&artifacts.monitor_reports[0]).unwrap();
        assert!(text.contains("V_theta derivative"));
    }

    #[test]
    fn baseline_preset_round_trips_and_violates() {
        let dir = tmpdir("mrac");
        let mut s = preset_paper_s4_mrac();
        s.horizon = 1.0;
        let (report, _) = cmd_simulate(&s, &dir, true).unwrap();
        assert!(!report.all_ok);
    }
}
