//! Time steppers: the physics-preserving IMPES scheme and two reference
//! IMPES variants, sharing one operator cache and one explicit update.

mod pimpes;
mod reference;
pub mod time_loop;

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::linsolve::{solve_saddle, solve_spd, Gauge, SaddleSystem, SparseMatrix};
use crate::mesh::{BoundaryCondition, BoundaryEdge, EdgePredicate, Mesh};
use crate::physics::{capillary_pressure, FluidPair, RockModel};
use crate::rt0;
use crate::upwind::{compute_traces, restrictive_trace, Phase, UpwindTraces};

pub use time_loop::{initialize, run, NoObserver, Observer, RunResult, StepRecord};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SchemeKind {
    /// Conserves both phases: capillary potential gradient plus total velocity.
    Pimpes,
    /// Hoteit–Firoozabadi splitting; conserves the wetting phase only.
    HfImpes,
    /// Classical pressure equation with a continuous capillary correction.
    StdImpes,
}

impl SchemeKind {
    pub fn name(self) -> &'static str {
        match self {
            SchemeKind::Pimpes => "pimpes",
            SchemeKind::HfImpes => "hfimpes",
            SchemeKind::StdImpes => "stdimpes",
        }
    }
}

impl fmt::Display for SchemeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SchemeKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "pimpes" => Ok(SchemeKind::Pimpes),
            "hfimpes" | "hf" => Ok(SchemeKind::HfImpes),
            "stdimpes" | "standard" | "impes" => Ok(SchemeKind::StdImpes),
            _ => Err(Error::config(format!("unknown scheme `{s}` (expected pimpes, hfimpes or stdimpes)"))),
        }
    }
}

/// What to do with saturations outside `[0, 1]` after an explicit update.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BoundsPolicy {
    /// Keep the values; violations are counted.
    Record,
    /// Cut back to `[0, 1]` after counting. Reference schemes only.
    Clamp,
}

impl FromStr for BoundsPolicy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "record" => Ok(BoundsPolicy::Record),
            "clamp" => Ok(BoundsPolicy::Clamp),
            _ => Err(Error::config(format!("unknown bounds policy `{s}` (expected record or clamp)"))),
        }
    }
}

impl BoundsPolicy {
    pub fn name(self) -> &'static str {
        match self {
            BoundsPolicy::Record => "record",
            BoundsPolicy::Clamp => "clamp",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TimeStepping {
    Fixed(f64),
    /// `δt = cfl · h / max|u_t·n|`, clamped to `[dt_min, dt_max]`.
    Adaptive { cfl: f64, dt_min: f64, dt_max: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct SchemeConfig {
    pub kind: SchemeKind,
    pub stepping: TimeStepping,
    pub max_steps: Option<usize>,
    pub end_time: Option<f64>,
    pub bounds_policy: BoundsPolicy,
    /// Pressure of the pinned cell when no Dirichlet edge exists, Pa.
    pub p_ref: f64,
    /// Extra flow solves per step that re-take the upwind traces from the
    /// step's own phase directions until the traces stop changing. Zero keeps
    /// the traces lagged from the previous step.
    pub upwind_iterations: usize,
}

impl SchemeConfig {
    pub fn fixed(kind: SchemeKind, dt: f64, steps: usize) -> Self {
        SchemeConfig {
            kind,
            stepping: TimeStepping::Fixed(dt),
            max_steps: Some(steps),
            end_time: None,
            bounds_policy: BoundsPolicy::Record,
            p_ref: 0.0,
            upwind_iterations: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.stepping {
            TimeStepping::Fixed(dt) => {
                if !(dt > 0.0 && dt.is_finite()) {
                    return Err(Error::config(format!("time step must be positive, got {dt}")));
                }
            }
            TimeStepping::Adaptive { cfl, dt_min, dt_max } => {
                if !(cfl > 0.0 && cfl <= 1.0) {
                    return Err(Error::config(format!("CFL target must lie in (0, 1], got {cfl}")));
                }
                if !(dt_min > 0.0 && dt_max >= dt_min && dt_max.is_finite()) {
                    return Err(Error::config(format!("need 0 < dt_min <= dt_max, got {dt_min} and {dt_max}")));
                }
            }
        }
        if self.max_steps.is_none() && self.end_time.is_none() {
            return Err(Error::config("scheme needs `steps` or `end_time`"));
        }
        if let Some(t) = self.end_time {
            if !(t >= 0.0 && t.is_finite()) {
                return Err(Error::config(format!("end time must be nonnegative, got {t}")));
            }
        }
        if self.kind == SchemeKind::Pimpes && self.bounds_policy == BoundsPolicy::Clamp {
            return Err(Error::config("bounds_policy = clamp is only available for the reference schemes"));
        }
        if !self.p_ref.is_finite() {
            return Err(Error::config("p_ref must be finite"));
        }
        Ok(())
    }
}

/// Mesh with boundary data, rock, fluids and per-cell sources.
#[derive(Clone, Debug)]
pub struct Model {
    pub mesh: Mesh,
    pub fluids: FluidPair,
    pub rock: RockModel,
    /// `∫_K F_w` per cell, m²/s (volume per unit thickness per second).
    pub source_w: Vec<f64>,
    pub source_n: Vec<f64>,
}

impl Model {
    pub fn new(mesh: Mesh, fluids: FluidPair, rock: RockModel) -> Result<Self> {
        let n = mesh.n_cells();
        Model::with_sources(mesh, fluids, rock, vec![0.0; n], vec![0.0; n])
    }

    pub fn with_sources(mesh: Mesh, fluids: FluidPair, rock: RockModel, source_w: Vec<f64>, source_n: Vec<f64>) -> Result<Self> {
        if !mesh.is_tagged() {
            return Err(Error::config("every boundary edge needs a boundary condition"));
        }
        fluids.validate()?;
        rock.validate(mesh.n_cells())?;
        if source_w.len() != mesh.n_cells() || source_n.len() != mesh.n_cells() {
            return Err(Error::config("source arrays must have one entry per cell"));
        }
        if source_w.iter().chain(&source_n).any(|v| !v.is_finite()) {
            return Err(Error::config("sources must be finite"));
        }
        Ok(Model { mesh, fluids, rock, source_w, source_n })
    }

    /// `φ|K|`.
    pub fn pore_volume(&self, k: usize) -> f64 {
        self.rock.porosity[k] * self.mesh.area(k)
    }

    pub fn total_pore_volume(&self) -> f64 {
        (0..self.mesh.n_cells()).map(|k| self.pore_volume(k)).sum()
    }

    pub fn capillary_pressures(&self, s_w: &[f64]) -> Vec<f64> {
        s_w.iter()
            .zip(&self.rock.permeability)
            .map(|(&s, &k)| capillary_pressure(s, &self.rock, k))
            .collect()
    }

    /// Phase roles swapped: densities, viscosities, residuals, capillary curve,
    /// boundary saturations and Dirichlet pressures.
    pub fn relabeled(&self) -> Result<Self> {
        if self.rock.bc != 0.0
            && self.mesh.conditions().iter().flatten().any(|c| matches!(c, BoundaryCondition::Dirichlet { p_n: None, .. }))
        {
            return Err(Error::config("relabeling needs explicit non-wetting Dirichlet pressures when capillarity is on"));
        }
        let rules: Vec<(EdgePredicate, BoundaryCondition)> = self
            .mesh
            .conditions()
            .iter()
            .enumerate()
            .filter_map(|(e, c)| {
                let bc = match c.as_ref()? {
                    BoundaryCondition::Dirichlet { p_w, p_n, s_w } => BoundaryCondition::Dirichlet {
                        p_w: p_n.unwrap_or(*p_w),
                        p_n: Some(*p_w),
                        s_w: s_w.map(|s| 1.0 - s),
                    },
                    BoundaryCondition::Neumann { flux_w, flux_n, s_w } => BoundaryCondition::Neumann {
                        flux_w: *flux_n,
                        flux_n: *flux_w,
                        s_w: s_w.map(|s| 1.0 - s),
                    },
                };
                let pred: EdgePredicate = Box::new(move |b: &BoundaryEdge| b.index == e);
                Some((pred, bc))
            })
            .collect();
        let tagged = self.mesh.clone().tag_boundary(&rules)?;
        Model::with_sources(tagged, self.fluids.relabeled(), self.rock.relabeled(), self.source_n.clone(), self.source_w.clone())
    }
}

/// Full simulation state at one time level.
#[derive(Clone, Debug, PartialEq)]
pub struct SimState {
    /// Time, s.
    pub t: f64,
    pub s_w: Vec<f64>,
    /// Always `1 - s_w`.
    pub s_n: Vec<f64>,
    pub p_w: Vec<f64>,
    pub p_n: Vec<f64>,
    /// Total velocity normal flux densities per edge, m/s.
    pub u_t: Vec<f64>,
    /// Capillary potential gradient DOFs (or the scheme's auxiliary field).
    pub xi_c: Vec<f64>,
    /// Phase normal flux densities of the last flow solve.
    pub u_w: Vec<f64>,
    pub u_n: Vec<f64>,
    /// Phase direction fluxes that set the next step's upwind traces.
    pub dir_w: Vec<f64>,
    pub dir_n: Vec<f64>,
}

impl SimState {
    /// State at rest with the given wetting saturation.
    pub fn at_rest(mesh: &Mesh, s_w: Vec<f64>) -> Result<Self> {
        if s_w.len() != mesh.n_cells() {
            return Err(Error::config(format!("initial saturation has {} entries for {} cells", s_w.len(), mesh.n_cells())));
        }
        if let Some((k, s)) = s_w.iter().enumerate().find(|(_, s)| !(**s >= 0.0 && **s <= 1.0)) {
            return Err(Error::config(format!("initial saturation must lie in [0, 1], cell {k} has {s}")));
        }
        let m = mesh.n_cells();
        let n = mesh.n_edges();
        let s_n = s_w.iter().map(|s| 1.0 - s).collect();
        Ok(SimState {
            t: 0.0,
            s_w,
            s_n,
            p_w: vec![0.0; m],
            p_n: vec![0.0; m],
            u_t: vec![0.0; n],
            xi_c: vec![0.0; n],
            u_w: vec![0.0; n],
            u_n: vec![0.0; n],
            dir_w: vec![0.0; n],
            dir_n: vec![0.0; n],
        })
    }

    pub fn is_finite(&self) -> bool {
        [&self.s_w, &self.p_w, &self.p_n, &self.u_t, &self.xi_c, &self.u_w, &self.u_n]
            .iter()
            .all(|v| v.iter().all(|x| x.is_finite()))
    }

    pub fn max_total_flux(&self) -> f64 {
        self.u_t.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Linear-solve quality of one flow solve.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SolveStats {
    /// Relative residual of the auxiliary SPD solve (Step 1).
    pub spd_residual: f64,
    pub momentum_residual: f64,
    pub continuity_residual: f64,
    /// Compatibility defect removed under the pin-cell gauge.
    pub compatibility_defect: Option<f64>,
}

impl SolveStats {
    pub fn worst(&self) -> f64 {
        self.spd_residual.max(self.momentum_residual).max(self.continuity_residual)
    }
}

/// Velocities and pressures of one flow solve, plus the per-cell net
/// outflow rates that drive the explicit saturation update.
#[derive(Clone, Debug)]
pub struct Flow {
    pub traces: UpwindTraces,
    pub u_t: Vec<f64>,
    pub xi_c: Vec<f64>,
    pub p_w: Vec<f64>,
    pub p_n: Vec<f64>,
    pub u_w: Vec<f64>,
    pub u_n: Vec<f64>,
    pub dir_w: Vec<f64>,
    pub dir_n: Vec<f64>,
    /// `Σ_F σ|F| (wetting flux)` per cell, m²/s.
    pub out_w: Vec<f64>,
    pub out_n: Vec<f64>,
    pub stats: SolveStats,
}

/// Result of one time step.
#[derive(Clone, Debug)]
pub struct StepReport {
    pub dt: f64,
    pub flow: Flow,
    /// Wetting saturation before any clamping.
    pub s_pre_clamp: Vec<f64>,
    /// Wetting saturation from the wetting-phase explicit update.
    pub s_w_direct: Vec<f64>,
    /// Non-wetting saturation from the non-wetting explicit update.
    pub s_n_direct: Vec<f64>,
    /// Cells outside `[0, 1]` before clamping.
    pub violations: usize,
}

/// Step-independent operators and boundary data.
#[derive(Clone, Debug)]
pub struct Operators {
    pub b: SparseMatrix,
    /// `g_h`, `g_w`, `g_n`.
    pub g: Vec<f64>,
    pub g_w: Vec<f64>,
    pub g_n: Vec<f64>,
    pub f_w: Vec<f64>,
    pub f_n: Vec<f64>,
    pub f_t: Vec<f64>,
    /// Edges carrying a velocity DOF (interior and Dirichlet).
    pub free: Vec<usize>,
    /// Prescribed total normal flux density per edge (zero off Neumann edges).
    pub neumann_flux: Vec<f64>,
    pub gauge: Gauge,
}

impl Operators {
    pub fn new(model: &Model, p_ref: f64) -> Self {
        let mesh = &model.mesh;
        let fl = &model.fluids;
        let gz = fl.grad_z;
        let g = fl.gravity;
        let free: Vec<usize> = (0..mesh.n_edges())
            .filter(|&e| !mesh.condition(e).is_some_and(BoundaryCondition::is_neumann))
            .collect();
        let neumann_flux = (0..mesh.n_edges())
            .map(|e| mesh.condition(e).and_then(BoundaryCondition::total_flux).unwrap_or(0.0))
            .collect();
        let gauge = if mesh.has_dirichlet() { Gauge::None } else { Gauge::PinCell { cell: 0, value: p_ref } };
        Operators {
            b: rt0::divergence(mesh),
            g: rt0::gravity_vector(mesh, (fl.rho_n - fl.rho_w) * g, gz),
            g_w: rt0::gravity_vector(mesh, fl.rho_w * g, gz),
            g_n: rt0::gravity_vector(mesh, fl.rho_n * g, gz),
            f_w: model.source_w.clone(),
            f_n: model.source_n.clone(),
            f_t: model.source_w.iter().zip(&model.source_n).map(|(a, b)| a + b).collect(),
            free,
            neumann_flux,
            gauge,
        }
    }

    /// `(b_{w,D}, b_{n,D}, b_D)`. Missing non-wetting boundary pressures follow
    /// `p^B_w + p_c` of the adjacent cell.
    pub fn dirichlet_vectors(&self, model: &Model, pc: &[f64]) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let mesh = &model.mesh;
        let n = mesh.n_edges();
        let (mut bw, mut bn, mut bd) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
        for e in mesh.boundary_edges() {
            if let Some(BoundaryCondition::Dirichlet { p_w, p_n, .. }) = mesh.condition(e) {
                let len = mesh.edge(e).length;
                let jump = match p_n {
                    Some(p_n) => p_n - p_w,
                    None => pc[mesh.edge(e).cells.0],
                };
                bw[e] = p_w * len;
                bn[e] = (p_w + jump) * len;
                bd[e] = jump * len;
            }
        }
        (bw, bn, bd)
    }

    /// Solves `A x = rhs` with `x = 0` on Neumann edges.
    pub fn solve_free_spd(&self, a: &SparseMatrix, rhs: &[f64]) -> Result<(Vec<f64>, f64)> {
        let mut x = vec![0.0; rhs.len()];
        if self.free.is_empty() {
            return Ok((x, 0.0));
        }
        let a_ff = a.submatrix(&self.free, &self.free);
        let r: Vec<f64> = self.free.iter().map(|&e| rhs[e]).collect();
        let (xf, res) = solve_spd(&a_ff, &r)?;
        for (&e, v) in self.free.iter().zip(xf) {
            x[e] = v;
        }
        Ok((x, res))
    }

    /// Solves `[A -B; Cᵀ 0][u; p] = [r_u; r_p]` where `ct` is the N×M matrix
    /// whose transpose is the continuity operator. Neumann DOFs of `u` take
    /// `u_N` (the prescribed flux plus `u_shift`).
    pub fn solve_flow_saddle(
        &self,
        a: &SparseMatrix,
        ct: &SparseMatrix,
        r_u: &[f64],
        r_p: &[f64],
    ) -> Result<(Vec<f64>, Vec<f64>, f64, f64, Option<f64>)> {
        let n = r_u.len();
        let u_n = &self.neumann_flux;
        let a_un = a.mul_vec(u_n);
        let ct_un = ct.mul_vec_transpose(u_n);
        let sys = SaddleSystem {
            a: a.submatrix(&self.free, &self.free),
            b: self.b.submatrix(&self.free, &(0..self.b.ncols()).collect::<Vec<_>>()),
            c: ct.submatrix(&self.free, &(0..ct.ncols()).collect::<Vec<_>>()).transpose(),
            r_u: self.free.iter().map(|&e| r_u[e] - a_un[e]).collect(),
            r_p: r_p.iter().zip(&ct_un).map(|(f, c)| f - c).collect(),
            gauge: self.gauge,
        };
        let sol = solve_saddle(&sys)?;
        let mut u = u_n.clone();
        debug_assert_eq!(u.len(), n);
        for (&e, v) in self.free.iter().zip(&sol.u) {
            u[e] = *v;
        }
        Ok((u, sol.p, sol.momentum_residual, sol.continuity_residual, sol.compatibility_defect))
    }
}

/// Solves the flow part (everything but the saturation update) of `kind`.
pub fn solve_flow(kind: SchemeKind, model: &Model, ops: &Operators, state: &SimState) -> Result<Flow> {
    let traces = compute_traces(&model.mesh, &state.s_w, &state.dir_w, &state.dir_n)?;
    solve_flow_traced(kind, model, ops, state, traces)
}

/// [`solve_flow`] with given upwind traces.
pub fn solve_flow_traced(kind: SchemeKind, model: &Model, ops: &Operators, state: &SimState, traces: UpwindTraces) -> Result<Flow> {
    match kind {
        SchemeKind::Pimpes => pimpes::flow(model, ops, state, traces),
        SchemeKind::HfImpes => reference::hf_flow(model, ops, state, traces),
        SchemeKind::StdImpes => reference::std_flow(model, ops, state, traces),
    }
}

/// Per-edge phase direction fluxes `ξ_w = u_t - f_n ξ`, `ξ_n = u_t + f_w ξ`.
///
/// Since `u_α = f_α ξ_α`, their signs agree with the phase fluxes wherever
/// the upwind phase is mobile; where it is not (`u_α = 0` exactly), the sign
/// still follows the phase potential instead of falling on the tie rule.
pub fn phase_directions(u_t: &[f64], xi_c: &[f64], f_w_edge: &[f64], f_n_edge: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let dir_w = (0..u_t.len()).map(|e| u_t[e] - f_n_edge[e] * xi_c[e]).collect();
    let dir_n = (0..u_t.len()).map(|e| u_t[e] + f_w_edge[e] * xi_c[e]).collect();
    (dir_w, dir_n)
}

/// Per-edge phase normal fluxes from the total velocity and the capillary
/// potential gradient, with edge-single-valued fractional flows:
/// `u_w = f_w u_t - f_w f_n ξ`, `u_n = f_n u_t + f_w f_n ξ`.
pub fn reconstruct_phase_velocities(u_t: &[f64], xi_c: &[f64], f_w_edge: &[f64], f_n_edge: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let mut u_w = Vec::with_capacity(u_t.len());
    let mut u_n = Vec::with_capacity(u_t.len());
    for e in 0..u_t.len() {
        let fw = f_w_edge[e];
        let fnw = f_n_edge[e];
        let cap = fw * fnw * xi_c[e];
        u_w.push(fw * u_t[e] - cap);
        u_n.push(fnw * u_t[e] + cap);
    }
    (u_w, u_n)
}

/// `Σ_F σ|F| flux_F` per cell.
pub fn cell_outflow(mesh: &Mesh, flux: &[f64]) -> Vec<f64> {
    (0..mesh.n_cells())
        .map(|k| {
            let edges = mesh.cell_edges(k);
            let signs = mesh.cell_signs(k);
            (0..3).map(|i| signs[i] * mesh.edge(edges[i]).length * flux[edges[i]]).sum()
        })
        .collect()
}

/// One time step of `config.kind` with step size `dt`.
pub fn step(model: &Model, ops: &Operators, config: &SchemeConfig, state: &SimState, dt: f64, step_index: usize) -> Result<(SimState, StepReport)> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::Step { step: step_index, message: format!("invalid time step {dt}") });
    }
    let tag = |e: Error| match e {
        Error::Solver { message, residual } => Error::Solver {
            message: format!("step {step_index}: {message}"),
            residual,
        },
        other => other,
    };
    let mut flow = solve_flow(config.kind, model, ops, state).map_err(tag)?;
    // Re-take the traces from the new directions. An edge whose trace changes
    // is ambiguous from then on and gets the less mobile of its two traces,
    // so the ambiguous set only grows and a cycle between two trace sets
    // cannot drain a nearly empty cell through a reversing edge.
    let n_edges = model.mesh.n_edges();
    let mut ambiguous_w = vec![false; n_edges];
    let mut ambiguous_n = vec![false; n_edges];
    for _ in 0..config.upwind_iterations {
        let mut traces = compute_traces(&model.mesh, &state.s_w, &flow.dir_w, &flow.dir_n)?;
        for e in 0..n_edges {
            ambiguous_w[e] |= traces.s_ww[e] != flow.traces.s_ww[e];
            ambiguous_n[e] |= traces.s_wn[e] != flow.traces.s_wn[e];
            if ambiguous_w[e] {
                traces.s_ww[e] = restrictive_trace(&model.mesh, e, &state.s_w, Phase::Wetting);
            }
            if ambiguous_n[e] {
                traces.s_wn[e] = restrictive_trace(&model.mesh, e, &state.s_w, Phase::NonWetting);
            }
        }
        if traces == flow.traces {
            break;
        }
        flow = solve_flow_traced(config.kind, model, ops, state, traces).map_err(tag)?;
    }
    let m = model.mesh.n_cells();
    let mut s_w_direct = Vec::with_capacity(m);
    let mut s_n_direct = Vec::with_capacity(m);
    for k in 0..m {
        let c = dt / model.pore_volume(k);
        s_w_direct.push(state.s_w[k] - c * (flow.out_w[k] - ops.f_w[k]));
        s_n_direct.push(state.s_n[k] - c * (flow.out_n[k] - ops.f_n[k]));
    }
    // Both phases are conserved under P-IMPES, so the saturation is taken from
    // the minority phase's update: a cell saturated with either phase then
    // stays exactly saturated instead of drifting by round-off.
    let s_pre: Vec<f64> = match config.kind {
        SchemeKind::Pimpes => (0..m)
            .map(|k| if state.s_w[k] <= 0.5 { s_w_direct[k] } else { 1.0 - s_n_direct[k] })
            .collect(),
        _ => s_w_direct.clone(),
    };
    let violations = s_pre.iter().filter(|s| !(**s >= 0.0 && **s <= 1.0)).count();
    let s_w: Vec<f64> = match config.bounds_policy {
        BoundsPolicy::Record => s_pre.clone(),
        BoundsPolicy::Clamp => s_pre.iter().map(|s| s.clamp(0.0, 1.0)).collect(),
    };
    let next = SimState {
        t: state.t + dt,
        s_n: s_w.iter().map(|s| 1.0 - s).collect(),
        s_w,
        p_w: flow.p_w.clone(),
        p_n: flow.p_n.clone(),
        u_t: flow.u_t.clone(),
        xi_c: flow.xi_c.clone(),
        u_w: flow.u_w.clone(),
        u_n: flow.u_n.clone(),
        dir_w: flow.dir_w.clone(),
        dir_n: flow.dir_n.clone(),
    };
    if !next.is_finite() {
        return Err(Error::Step { step: step_index, message: "non-finite values in the updated state".into() });
    }
    Ok((
        next,
        StepReport {
            dt,
            flow,
            s_pre_clamp: s_pre,
            s_w_direct,
            s_n_direct,
            violations,
        },
    ))
}
