//! Bootstrap and time loop.

use super::{solve_flow, step, Model, Operators, SchemeConfig, SimState, SolveStats, StepReport, TimeStepping};
use crate::diagnostics::{cfl_number, conservation_residuals, ledger_update, min_max, EtaAccumulator, LedgerEntry, MassLedger};
use crate::error::{Error, Result};

/// One row of the per-step diagnostics.
#[derive(Clone, Debug, PartialEq)]
pub struct StepRecord {
    /// 1-based step number.
    pub step: usize,
    /// Time at the end of the step, s.
    pub t: f64,
    pub dt: f64,
    pub ledger: LedgerEntry,
    /// η accumulated up to and including this step.
    pub eta: f64,
    pub cfl: f64,
    /// Extremes of the pre-clamp wetting saturation.
    pub min_s: f64,
    pub max_s: f64,
    pub violations: usize,
    pub stats: SolveStats,
    /// Largest relative local conservation residual, per phase.
    pub conservation: (f64, f64),
    /// Largest `|S_n - (1 - S_w)|` between the two phase updates.
    pub update_mismatch: f64,
}

/// Hooks called by [`run`]; all methods default to no-ops.
pub trait Observer {
    fn on_start(&mut self, _model: &Model, _state: &SimState) -> Result<()> {
        Ok(())
    }

    fn on_step(&mut self, _model: &Model, _state: &SimState, _report: &StepReport, _record: &StepRecord) -> Result<()> {
        Ok(())
    }

    /// Called with the last good state before an error is returned.
    fn on_failure(&mut self, _model: &Model, _state: &SimState, _error: &Error) {}
}

pub struct NoObserver;

impl Observer for NoObserver {}

#[derive(Clone, Debug)]
pub struct RunResult {
    pub state: SimState,
    pub ledger: MassLedger,
    /// η over all steps taken (0 when no step was taken).
    pub eta: f64,
    pub records: Vec<StepRecord>,
}

/// Initial state with velocities and pressures consistent with `s_w0`.
///
/// The flow solve is done twice: first with all phase fluxes zero (every
/// interior trace ties to the lower-index cell), then with the phase
/// directions that solve produced.
pub fn initialize(model: &Model, config: &SchemeConfig, s_w0: Vec<f64>) -> Result<SimState> {
    config.validate()?;
    let mut state = SimState::at_rest(&model.mesh, s_w0)?;
    let ops = Operators::new(model, config.p_ref);
    for _ in 0..2 {
        let flow = solve_flow(config.kind, model, &ops, &state)?;
        state.p_w = flow.p_w;
        state.p_n = flow.p_n;
        state.u_t = flow.u_t;
        state.xi_c = flow.xi_c;
        state.u_w = flow.u_w;
        state.u_n = flow.u_n;
        state.dir_w = flow.dir_w;
        state.dir_n = flow.dir_n;
    }
    Ok(state)
}

fn next_dt(config: &SchemeConfig, state: &SimState, h: f64) -> f64 {
    let dt = match config.stepping {
        TimeStepping::Fixed(dt) => dt,
        TimeStepping::Adaptive { cfl, dt_min, dt_max } => {
            let u = state.max_total_flux();
            if u > 0.0 {
                (cfl * h / u).clamp(dt_min, dt_max)
            } else {
                dt_max
            }
        }
    };
    match config.end_time {
        Some(end) => dt.min(end - state.t),
        None => dt,
    }
}

/// Advances `state` until `max_steps` steps are taken or `end_time` is reached.
pub fn run(model: &Model, config: &SchemeConfig, state: SimState, observer: &mut dyn Observer) -> Result<RunResult> {
    config.validate()?;
    let ops = Operators::new(model, config.p_ref);
    let h = model.mesh.min_diameter();
    let areas = model.mesh.areas().to_vec();
    let mut ledger = MassLedger::default();
    let mut eta = EtaAccumulator::default();
    let mut records = Vec::new();
    let mut state = state;
    observer.on_start(model, &state)?;
    let mut n = 0usize;
    loop {
        if config.max_steps.is_some_and(|m| n >= m) {
            break;
        }
        if let Some(end) = config.end_time {
            // relative guard against a sliver step from rounding
            if state.t >= end * (1.0 - 1e-12) {
                break;
            }
        }
        let dt = next_dt(config, &state, h);
        let (next, report) = match step(model, &ops, config, &state, dt, n + 1) {
            Ok(r) => r,
            Err(e) => {
                observer.on_failure(model, &state, &e);
                return Err(e);
            }
        };
        n += 1;
        let entry = ledger_update(model, &state.s_w, &next.s_w, &report.flow.u_w, &report.flow.u_n, dt);
        ledger.push(entry, &report.s_pre_clamp, report.violations);
        eta.record(&report.s_pre_clamp, &areas, dt);
        let (min_s, max_s) = min_max(&report.s_pre_clamp);
        let update_mismatch = report
            .s_n_direct
            .iter()
            .zip(&report.s_w_direct)
            .map(|(sn, sw)| (sn - (1.0 - sw)).abs())
            .fold(0.0, f64::max);
        let record = StepRecord {
            step: n,
            t: next.t,
            dt,
            ledger: entry,
            eta: eta.value()?,
            cfl: cfl_number(&next.u_t, dt, h),
            min_s,
            max_s,
            violations: report.violations,
            stats: report.flow.stats,
            conservation: conservation_residuals(model, &state.s_w, &report.s_pre_clamp, &report),
            update_mismatch,
        };
        if let Err(e) = observer.on_step(model, &next, &report, &record) {
            observer.on_failure(model, &next, &e);
            return Err(e);
        }
        records.push(record);
        state = next;
    }
    let eta = if eta.steps() == 0 { 0.0 } else { eta.value()? };
    Ok(RunResult { state, ledger, eta, records })
}
