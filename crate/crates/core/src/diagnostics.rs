//! Mass ledgers, the bounds-violation metric η, CFL numbers and front probes.

use crate::error::{Error, Result};
use crate::mesh::{Mesh, Point};
use crate::schemes::{Model, StepReport};

/// Phase volumes (per unit thickness, m²) moved during one step.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PhaseVolumes {
    pub injected_w: f64,
    pub discharged_w: f64,
    pub injected_n: f64,
    pub discharged_n: f64,
}

impl PhaseVolumes {
    fn add(&mut self, other: &PhaseVolumes) {
        self.injected_w += other.injected_w;
        self.discharged_w += other.discharged_w;
        self.injected_n += other.injected_n;
        self.discharged_n += other.discharged_n;
    }
}

/// Pore-volume-weighted mean saturations bracketing one step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LedgerEntry {
    /// Old wetting content plus wetting injected during the step.
    pub s_io_w: f64,
    /// New wetting content plus wetting discharged during the step.
    pub s_nd_w: f64,
    /// Old non-wetting content plus non-wetting injected during the step.
    pub s_o_n: f64,
    /// New non-wetting content plus non-wetting discharged during the step.
    pub s_rd_n: f64,
    pub volumes: PhaseVolumes,
}

impl LedgerEntry {
    pub fn defect_w(&self) -> f64 {
        self.s_nd_w - self.s_io_w
    }

    pub fn defect_n(&self) -> f64 {
        self.s_rd_n - self.s_o_n
    }
}

/// Boundary and source volumes of one step from the phase fluxes actually
/// used in the update.
pub fn step_volumes(model: &Model, u_w: &[f64], u_n: &[f64], dt: f64) -> PhaseVolumes {
    let mut v = PhaseVolumes::default();
    let mesh = &model.mesh;
    for e in mesh.boundary_edges() {
        let len = mesh.edge(e).length * dt;
        let (w, n) = (u_w[e] * len, u_n[e] * len);
        if w < 0.0 {
            v.injected_w -= w;
        } else {
            v.discharged_w += w;
        }
        if n < 0.0 {
            v.injected_n -= n;
        } else {
            v.discharged_n += n;
        }
    }
    for k in 0..mesh.n_cells() {
        let (w, n) = (model.source_w[k] * dt, model.source_n[k] * dt);
        if w > 0.0 {
            v.injected_w += w;
        } else {
            v.discharged_w -= w;
        }
        if n > 0.0 {
            v.injected_n += n;
        } else {
            v.discharged_n -= n;
        }
    }
    v
}

fn content(model: &Model, s: &[f64]) -> f64 {
    s.iter().enumerate().map(|(k, s)| model.pore_volume(k) * s).sum()
}

/// Ledger entry for the step `s_old → s_new`.
pub fn ledger_update(model: &Model, s_w_old: &[f64], s_w_new: &[f64], u_w: &[f64], u_n: &[f64], dt: f64) -> LedgerEntry {
    let pv = model.total_pore_volume();
    let volumes = step_volumes(model, u_w, u_n, dt);
    let s_n_old: Vec<f64> = s_w_old.iter().map(|s| 1.0 - s).collect();
    let s_n_new: Vec<f64> = s_w_new.iter().map(|s| 1.0 - s).collect();
    LedgerEntry {
        s_io_w: (content(model, s_w_old) + volumes.injected_w) / pv,
        s_nd_w: (content(model, s_w_new) + volumes.discharged_w) / pv,
        s_o_n: (content(model, &s_n_old) + volumes.injected_n) / pv,
        s_rd_n: (content(model, &s_n_new) + volumes.discharged_n) / pv,
        volumes,
    }
}

/// Time series of ledger entries with cumulative volumes and bounds statistics.
#[derive(Clone, Debug, Default)]
pub struct MassLedger {
    pub entries: Vec<LedgerEntry>,
    pub cumulative: PhaseVolumes,
    pub violations: usize,
    pub min_pre_clamp: Option<f64>,
    pub max_pre_clamp: Option<f64>,
}

impl MassLedger {
    pub fn push(&mut self, entry: LedgerEntry, s_pre_clamp: &[f64], violations: usize) {
        self.cumulative.add(&entry.volumes);
        self.entries.push(entry);
        self.violations += violations;
        let (lo, hi) = min_max(s_pre_clamp);
        self.min_pre_clamp = Some(self.min_pre_clamp.map_or(lo, |m| m.min(lo)));
        self.max_pre_clamp = Some(self.max_pre_clamp.map_or(hi, |m| m.max(hi)));
    }

    /// Sum of wetting defects `S^ND - S^IO` over steps `range`.
    pub fn window_defect_w(&self, range: std::ops::Range<usize>) -> f64 {
        self.entries[range].iter().map(LedgerEntry::defect_w).sum()
    }

    pub fn max_defect(&self) -> f64 {
        self.entries
            .iter()
            .map(|e| e.defect_w().abs().max(e.defect_n().abs()))
            .fold(0.0, f64::max)
    }
}

pub fn min_max(s: &[f64]) -> (f64, f64) {
    s.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
}

/// Running sums for `η = 1 - ‖S χ‖ / ‖S‖` with area weights in space and
/// step-length weights in time.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct EtaAccumulator {
    inside: f64,
    total: f64,
    steps: usize,
}

impl EtaAccumulator {
    pub fn record(&mut self, s: &[f64], areas: &[f64], dt: f64) {
        let mut inside = 0.0;
        let mut total = 0.0;
        for (s, a) in s.iter().zip(areas) {
            let sq = a * s * s;
            total += sq;
            if (0.0..=1.0).contains(s) {
                inside += sq;
            }
        }
        self.inside += dt * inside;
        self.total += dt * total;
        self.steps += 1;
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn value(&self) -> Result<f64> {
        if self.steps == 0 {
            return Err(Error::config("η needs at least one recorded step"));
        }
        if self.total == 0.0 || self.inside == self.total {
            return Ok(0.0);
        }
        Ok((1.0 - (self.inside / self.total).sqrt()).clamp(0.0, 1.0))
    }
}

/// η over a history of `(δt, S_w field)` pairs.
pub fn eta_metric(history: &[(f64, Vec<f64>)], areas: &[f64]) -> Result<f64> {
    let mut acc = EtaAccumulator::default();
    for (dt, s) in history {
        acc.record(s, areas, *dt);
    }
    acc.value()
}

/// `max_F |u_t·n| δt / h`.
pub fn cfl_number(u_t: &[f64], dt: f64, h: f64) -> f64 {
    u_t.iter().fold(0.0f64, |m, v| m.max(v.abs())) * dt / h
}

/// Farthest extent along `direction` of cells with `S_w ≥ threshold`, per
/// permeability stratum (cells sharing one permeability value), sorted by
/// permeability. Extents are measured from the domain's minimum projection
/// and use the cells' farthest vertex, so a fully swept stratum reports the
/// domain length. Strata without such cells report 0.
pub fn front_position(mesh: &Mesh, permeability: &[f64], s_w: &[f64], threshold: f64, direction: Point) -> Result<Vec<(f64, f64)>> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(Error::config(format!("front threshold must lie in (0, 1), got {threshold}")));
    }
    let norm = direction[0].hypot(direction[1]);
    if !(norm > 0.0) {
        return Err(Error::config("front direction must be nonzero"));
    }
    let d = [direction[0] / norm, direction[1] / norm];
    let proj = |p: Point| p[0] * d[0] + p[1] * d[1];
    let origin = mesh.vertices().iter().map(|&p| proj(p)).fold(f64::INFINITY, f64::min);
    let mut strata: Vec<(f64, f64)> = Vec::new();
    for k in 0..mesh.n_cells() {
        let kv = permeability[k];
        let idx = match strata.iter().position(|(p, _)| *p == kv) {
            Some(i) => i,
            None => {
                strata.push((kv, 0.0));
                strata.len() - 1
            }
        };
        if s_w[k] >= threshold {
            let reach = mesh.cell_vertices(k).iter().map(|&p| proj(p) - origin).fold(f64::NEG_INFINITY, f64::max);
            strata[idx].1 = strata[idx].1.max(reach);
        }
    }
    strata.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(strata)
}

/// Per-cell local conservation residuals of both phases for one step,
/// relative to `φ|K| max(S) / δt`, recomputed edge by edge from the phase
/// fluxes. Returns `(max wetting, max non-wetting)`.
pub fn conservation_residuals(model: &Model, s_w_old: &[f64], s_w_new: &[f64], report: &StepReport) -> (f64, f64) {
    let mesh = &model.mesh;
    let dt = report.dt;
    let smax = s_w_old
        .iter()
        .chain(s_w_new)
        .map(|s| s.abs().max((1.0 - s).abs()))
        .fold(0.0, f64::max);
    let mut worst = (0.0f64, 0.0f64);
    for k in 0..mesh.n_cells() {
        let pv = model.pore_volume(k);
        let edges = mesh.cell_edges(k);
        let signs = mesh.cell_signs(k);
        let mut flux_w = 0.0;
        let mut flux_n = 0.0;
        for i in 0..3 {
            let e = edges[i];
            let w = signs[i] * mesh.edge(e).length;
            flux_w += w * report.flow.u_w[e];
            flux_n += w * report.flow.u_n[e];
        }
        let scale = pv * smax / dt;
        let r_w = pv * (s_w_new[k] - s_w_old[k]) / dt + flux_w - model.source_w[k];
        let r_n = pv * ((1.0 - s_w_new[k]) - (1.0 - s_w_old[k])) / dt + flux_n - model.source_n[k];
        worst.0 = worst.0.max(r_w.abs() / scale);
        worst.1 = worst.1.max(r_n.abs() / scale);
    }
    worst
}
