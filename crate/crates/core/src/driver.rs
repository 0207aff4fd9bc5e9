//! Scenario-level orchestration behind the `run` and `compare` commands.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use crate::error::{Error, Result};
use crate::io;
use crate::scenario::{Scenario, Setup};
use crate::schemes::{initialize, run, BoundsPolicy, Model, NoObserver, Observer, RunResult, SchemeKind, SimState, StepRecord, StepReport, TimeStepping};
use crate::units::DAY;

/// Writes the diagnostics CSV row by row and the VTK/checkpoint files at the
/// configured cadence. The CSV is written as `diagnostics.csv.partial` and
/// renamed on success; on failure it stays marked as partial and the last
/// good state is dumped to `failed-state.txt`.
pub struct OutputWriter {
    dir: PathBuf,
    vtk_every: usize,
    checkpoint_every: usize,
    csv: String,
    permeability: Vec<f64>,
    pub files: Vec<PathBuf>,
}

impl OutputWriter {
    pub fn new(dir: &Path, vtk_every: usize, checkpoint_every: usize) -> Result<Self> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        Ok(OutputWriter {
            dir: dir.to_path_buf(),
            vtk_every,
            checkpoint_every,
            csv: format!("{}\n", io::CSV_HEADER),
            permeability: Vec::new(),
            files: Vec::new(),
        })
    }

    fn partial_path(&self) -> PathBuf {
        self.dir.join("diagnostics.csv.partial")
    }

    fn flush_csv(&self) -> Result<()> {
        let p = self.partial_path();
        fs::write(&p, &self.csv).map_err(|e| Error::io(&p, e))
    }

    fn snapshot(&mut self, model: &Model, state: &SimState, step: usize) -> Result<()> {
        let p = self.dir.join(format!("state_{step:06}.vtk"));
        io::write_vtk(&p, &model.mesh, state, &self.permeability)?;
        self.files.push(p);
        Ok(())
    }

    /// Renames the CSV into place; call after a successful run.
    pub fn finish(&mut self) -> Result<PathBuf> {
        self.flush_csv()?;
        let done = self.dir.join("diagnostics.csv");
        fs::rename(self.partial_path(), &done).map_err(|e| Error::io(&done, e))?;
        self.files.push(done.clone());
        Ok(done)
    }
}

impl Observer for OutputWriter {
    fn on_start(&mut self, model: &Model, state: &SimState) -> Result<()> {
        self.permeability = model.rock.permeability.clone();
        self.flush_csv()?;
        if self.vtk_every > 0 {
            self.snapshot(model, state, 0)?;
        }
        Ok(())
    }

    fn on_step(&mut self, model: &Model, state: &SimState, _report: &StepReport, record: &StepRecord) -> Result<()> {
        self.csv.push_str(&io::csv_row(record));
        self.csv.push('\n');
        self.flush_csv()?;
        if self.vtk_every > 0 && record.step % self.vtk_every == 0 {
            self.snapshot(model, state, record.step)?;
        }
        if self.checkpoint_every > 0 && record.step % self.checkpoint_every == 0 {
            let p = self.dir.join(format!("checkpoint_{:06}.txt", record.step));
            io::write_checkpoint(&p, state)?;
            self.files.push(p);
        }
        Ok(())
    }

    fn on_failure(&mut self, _model: &Model, state: &SimState, _error: &Error) {
        let _ = self.flush_csv();
        let _ = io::write_checkpoint(&self.dir.join("failed-state.txt"), state);
    }
}

/// Output directory of a scenario: its `[output] dir`, else `out/<name>`.
pub fn output_dir(scenario: &Scenario) -> PathBuf {
    scenario.output.dir.clone().unwrap_or_else(|| Path::new("out").join(&scenario.name))
}

/// Builds and runs a scenario, writing all outputs to `dir`.
pub fn run_scenario(scenario: &Scenario, dir: &Path) -> Result<(Setup, RunResult, PathBuf)> {
    let setup = scenario.build()?;
    let mut writer = OutputWriter::new(dir, scenario.output.vtk_every, scenario.output.checkpoint_every)?;
    let state = initialize(&setup.model, &scenario.scheme, setup.s_w0.clone())?;
    let result = run(&setup.model, &scenario.scheme, state, &mut writer)?;
    let csv = writer.finish()?;
    Ok((setup, result, csv))
}

/// One scheme run of a comparison.
#[derive(Clone, Debug)]
pub struct CompareRow {
    pub kind: SchemeKind,
    /// Fixed step of a sweep point, s; `None` for the scenario's own stepping.
    pub dt: Option<f64>,
    pub steps: usize,
    pub eta: f64,
    /// Largest per-step ledger defect over both phases.
    pub ledger_defect: f64,
    pub violations: usize,
    pub wall_seconds: f64,
    /// Worst relative residual over all flow solves.
    pub worst_residual: f64,
    /// Error message when the run aborted.
    pub failure: Option<String>,
}

impl CompareRow {
    pub fn feasible(&self) -> bool {
        self.failure.is_none() && self.eta == 0.0
    }
}

#[derive(Clone, Debug)]
pub struct Comparison {
    pub rows: Vec<CompareRow>,
}

impl Comparison {
    /// Largest swept δt with η = 0 for `kind`, s.
    pub fn feasible_dt(&self, kind: SchemeKind) -> Option<f64> {
        self.rows.iter().filter(|r| r.kind == kind && r.feasible()).filter_map(|r| r.dt).reduce(f64::max)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("scheme,dt_days,steps,eta,ledger_defect,violations,wall_seconds,worst_residual,feasible_dt_days,status\n");
        for r in &self.rows {
            let days = |v: Option<f64>| v.map(|d| format!("{:.14e}", d / DAY)).unwrap_or_default();
            s.push_str(&format!(
                "{},{},{},{:.14e},{:.14e},{},{:.6},{:.3e},{},{}\n",
                r.kind.name(),
                days(r.dt),
                r.steps,
                r.eta,
                r.ledger_defect,
                r.violations,
                r.wall_seconds,
                r.worst_residual,
                days(self.feasible_dt(r.kind)),
                match &r.failure {
                    None => "ok".to_string(),
                    Some(m) => format!("\"failed: {}\"", m.replace('"', "'")),
                }
            ));
        }
        s
    }
}

/// Runs `kinds` on the same scenario, at its own stepping or at each fixed
/// step of `dt_sweep` (s). Reference schemes clamp their saturations (η still
/// sees the pre-clamp values); P-IMPES records them.
pub fn compare(scenario: &Scenario, kinds: &[SchemeKind], dt_sweep: Option<&[f64]>) -> Result<Comparison> {
    let points: Vec<Option<f64>> = match dt_sweep {
        Some(d) => d.iter().map(|&v| Some(v)).collect(),
        None => vec![None],
    };
    let mut rows = Vec::new();
    for &kind in kinds {
        for &dt in &points {
            let mut sc = scenario.with_kind(kind);
            sc.scheme.bounds_policy = if kind == SchemeKind::Pimpes { BoundsPolicy::Record } else { BoundsPolicy::Clamp };
            if let Some(dt) = dt {
                sc.scheme.stepping = TimeStepping::Fixed(dt);
            }
            sc.scheme.validate()?;
            let setup = sc.build()?;
            let start = Instant::now();
            let outcome = initialize(&setup.model, &sc.scheme, setup.s_w0.clone()).and_then(|s| run(&setup.model, &sc.scheme, s, &mut NoObserver));
            let wall_seconds = start.elapsed().as_secs_f64();
            rows.push(match outcome {
                Ok(r) => CompareRow {
                    kind,
                    dt,
                    steps: r.records.len(),
                    eta: r.eta,
                    ledger_defect: r.ledger.max_defect(),
                    violations: r.ledger.violations,
                    wall_seconds,
                    worst_residual: r.records.iter().map(|x| x.stats.worst()).fold(0.0, f64::max),
                    failure: None,
                },
                Err(e) if e.exit_code() == 2 => CompareRow {
                    kind,
                    dt,
                    steps: 0,
                    eta: f64::NAN,
                    ledger_defect: f64::NAN,
                    violations: 0,
                    wall_seconds,
                    worst_residual: f64::NAN,
                    failure: Some(e.to_string()),
                },
                Err(e) => return Err(e),
            });
        }
    }
    Ok(Comparison { rows })
}
