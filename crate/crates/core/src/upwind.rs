//! Edge-wise upwind saturation traces and the upwinded divergence operators.
//!
//! Each phase is upwinded by the sign of its own normal flux on the edge. A
//! non-negative flux takes the value of `K_i` (the cell the edge normal
//! leaves); a negative one takes `K_j`. On the boundary, inflow takes the
//! prescribed boundary saturation and outflow the interior value.

use crate::error::{Error, Result};
use crate::linsolve::SparseMatrix;
use crate::mesh::{BoundaryCondition, Mesh};
use crate::physics::{fractional_flow, FluidPair, RockModel};
use crate::rt0::scaled_divergence;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Phase {
    Wetting,
    NonWetting,
}

/// Wetting saturation traces `S*_{w,w}` and `S*_{w,n}` per edge.
#[derive(Clone, Debug, PartialEq)]
pub struct UpwindTraces {
    pub s_ww: Vec<f64>,
    pub s_wn: Vec<f64>,
}

impl UpwindTraces {
    pub fn get(&self, phase: Phase) -> &[f64] {
        match phase {
            Phase::Wetting => &self.s_ww,
            Phase::NonWetting => &self.s_wn,
        }
    }
}

/// Upwind wetting saturation on `edge` for a phase whose normal flux on the
/// edge is `phase_flux`.
///
/// Neumann edges are classified by the sign of their prescribed total flux.
/// Dirichlet edges use `phase_flux`; inflow through a Dirichlet edge without
/// a boundary saturation takes the interior value.
pub fn upwind_trace(mesh: &Mesh, edge: usize, s_w: &[f64], phase_flux: f64) -> Result<f64> {
    let e = mesh.edge(edge);
    let (ki, kj) = e.cells;
    match kj {
        Some(kj) => Ok(if phase_flux >= 0.0 { s_w[ki] } else { s_w[kj] }),
        None => match mesh.condition(edge) {
            Some(bc @ BoundaryCondition::Neumann { s_w: sb, .. }) => {
                if bc.is_inflow() {
                    sb.ok_or_else(|| {
                        Error::config(format!(
                            "inflow edge at ({}, {}) has no boundary saturation",
                            e.midpoint[0], e.midpoint[1]
                        ))
                    })
                } else {
                    Ok(s_w[ki])
                }
            }
            Some(BoundaryCondition::Dirichlet { s_w: sb, .. }) => {
                Ok(if phase_flux < 0.0 { sb.unwrap_or(s_w[ki]) } else { s_w[ki] })
            }
            None => Err(Error::config(format!("boundary edge {edge} has no boundary condition"))),
        },
    }
}

/// Traces for both phases from the previous step's phase normal fluxes.
pub fn compute_traces(mesh: &Mesh, s_w: &[f64], u_w: &[f64], u_n: &[f64]) -> Result<UpwindTraces> {
    let n = mesh.n_edges();
    let mut s_ww = Vec::with_capacity(n);
    let mut s_wn = Vec::with_capacity(n);
    for e in 0..n {
        s_ww.push(upwind_trace(mesh, e, s_w, u_w[e])?);
        s_wn.push(upwind_trace(mesh, e, s_w, u_n[e])?);
    }
    Ok(UpwindTraces { s_ww, s_wn })
}

/// Of the two traces an edge can take, the one with the smaller mobility of
/// `phase`: the lower wetting saturation for the wetting phase, the higher
/// for the non-wetting phase. A boundary edge without inflow data only has
/// its interior value.
pub fn restrictive_trace(mesh: &Mesh, edge: usize, s_w: &[f64], phase: Phase) -> f64 {
    let inner = s_w[mesh.edge(edge).cells.0];
    match upwind_trace(mesh, edge, s_w, -1.0) {
        Ok(other) => match phase {
            Phase::Wetting => inner.min(other),
            Phase::NonWetting => inner.max(other),
        },
        Err(_) => inner,
    }
}

/// Edge factors `f_w(S*_{w,w})`, `f_n(S*_{w,n})`.
pub fn edge_fractional_flows(traces: &UpwindTraces, fluids: &FluidPair, rock: &RockModel) -> (Vec<f64>, Vec<f64>) {
    let fw = traces.s_ww.iter().map(|&s| fractional_flow(s, fluids, rock).0).collect();
    let fnw = traces.s_wn.iter().map(|&s| fractional_flow(s, fluids, rock).1).collect();
    (fw, fnw)
}

/// `B_α`: entry `σ|F| f_α(S*_{w,α})` per edge–cell incidence.
pub fn upwinded_divergence(mesh: &Mesh, traces: &UpwindTraces, phase: Phase, fluids: &FluidPair, rock: &RockModel) -> SparseMatrix {
    let (fw, fnw) = edge_fractional_flows(traces, fluids, rock);
    match phase {
        Phase::Wetting => scaled_divergence(mesh, &fw),
        Phase::NonWetting => scaled_divergence(mesh, &fnw),
    }
}

/// `B_c`: entry `σ|F| f_n(S*_{w,n}) f_w(S*_{w,w})`.
pub fn capillary_divergence(mesh: &Mesh, traces: &UpwindTraces, fluids: &FluidPair, rock: &RockModel) -> SparseMatrix {
    let (fw, fnw) = edge_fractional_flows(traces, fluids, rock);
    let f: Vec<f64> = fw.iter().zip(&fnw).map(|(a, b)| a * b).collect();
    scaled_divergence(mesh, &f)
}
