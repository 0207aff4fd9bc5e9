//! Reference IMPES schemes.
//!
//! HF-IMPES splits `u_t = u_a + u_c` with `u_c = -λ_n K ∇Φ_c` solved first
//! (with the regularized `λ_n`), then `(u_a, p_w)` from a symmetric mixed
//! system, and transports the wetting phase with `f_w(S*) u_a`.
//!
//! The standard scheme solves the pressure equation with a capillary
//! correction built from the linearized, spatially continuous `∇p_c =
//! p_c'(S) ∇S`, and transports the wetting phase with the upwinded
//! `f_w u_t - f_w f_n ξ`.
//!
//! Neither conserves the non-wetting phase; `u_n` is taken as `u_t - u_w`.

use super::{cell_outflow, phase_directions, reconstruct_phase_velocities, Flow, Model, Operators, SimState, SolveStats};
use crate::error::Result;
use crate::physics::{capillary_pressure_derivative, fractional_flow, regularized_nonwetting_mobility, total_mobility};
use crate::rt0::{capillary_coupling, mass_matrix};
use crate::upwind::{edge_fractional_flows, UpwindTraces};

struct Common {
    traces: UpwindTraces,
    fw_e: Vec<f64>,
    fn_e: Vec<f64>,
    lambda_k: Vec<f64>,
    a: crate::linsolve::SparseMatrix,
    pc: Vec<f64>,
    b_wd: Vec<f64>,
    b_d: Vec<f64>,
}

fn common(model: &Model, ops: &Operators, state: &SimState, traces: UpwindTraces) -> Result<Common> {
    let (fluids, rock) = (&model.fluids, &model.rock);
    let (fw_e, fn_e) = edge_fractional_flows(&traces, fluids, rock);
    let lambda_k: Vec<f64> = state
        .s_w
        .iter()
        .zip(&rock.permeability)
        .map(|(&s, &k)| total_mobility(s, fluids, rock) * k)
        .collect();
    let a = mass_matrix(&model.mesh, &lambda_k)?;
    let pc = model.capillary_pressures(&state.s_w);
    let (b_wd, _, b_d) = ops.dirichlet_vectors(model, &pc);
    Ok(Common { traces, fw_e, fn_e, lambda_k, a, pc, b_wd, b_d })
}

/// Mixed solve shared by both schemes: `A u - B p_w = cap - b_{w,D} - g_w`,
/// `Bᵀ u = F_t - Bᵀ aux_flux`.
fn mixed_solve(ops: &Operators, c: &Common, cap: &[f64], aux_flux: &[f64]) -> Result<(Vec<f64>, Vec<f64>, f64, f64, Option<f64>)> {
    let r_u: Vec<f64> = (0..cap.len()).map(|e| cap[e] - c.b_wd[e] - ops.g_w[e]).collect();
    let bt_aux = ops.b.mul_vec_transpose(aux_flux);
    let r_p: Vec<f64> = ops.f_t.iter().zip(&bt_aux).map(|(f, d)| f - d).collect();
    ops.solve_flow_saddle(&c.a, &ops.b, &r_u, &r_p)
}

fn finish(model: &Model, c: Common, u_t: Vec<f64>, xi_c: Vec<f64>, p_w: Vec<f64>, u_w: Vec<f64>, dir_w: Vec<f64>, stats: SolveStats) -> Flow {
    let u_n: Vec<f64> = u_t.iter().zip(&u_w).map(|(t, w)| t - w).collect();
    let dir_n = u_n.clone();
    let p_n = c.pc.iter().zip(&p_w).map(|(a, b)| a + b).collect();
    Flow {
        out_w: cell_outflow(&model.mesh, &u_w),
        out_n: cell_outflow(&model.mesh, &u_n),
        traces: c.traces,
        u_t,
        xi_c,
        p_w,
        p_n,
        u_w,
        u_n,
        dir_w,
        dir_n,
        stats,
    }
}

pub(super) fn hf_flow(model: &Model, ops: &Operators, state: &SimState, traces: UpwindTraces) -> Result<Flow> {
    let (fluids, rock) = (&model.fluids, &model.rock);
    let c = common(model, ops, state, traces)?;

    // Step 1: u_c from the mass matrix weighted by (λ_n K)⁻¹
    let lambda_nk: Vec<f64> = state
        .s_w
        .iter()
        .zip(&rock.permeability)
        .map(|(&s, &k)| regularized_nonwetting_mobility(s, fluids, rock) * k)
        .collect();
    let a_c = mass_matrix(&model.mesh, &lambda_nk)?;
    let bpc = ops.b.mul_vec(&c.pc);
    let rhs: Vec<f64> = (0..bpc.len()).map(|e| bpc[e] - c.b_d[e] - ops.g[e]).collect();
    let (u_c, spd_residual) = ops.solve_free_spd(&a_c, &rhs)?;

    // Step 2: (u_a, p_w) with ∇·u_a = F_t - ∇·u_c
    let zero = vec![0.0; u_c.len()];
    let (u_a, p_w, momentum_residual, continuity_residual, compatibility_defect) = mixed_solve(ops, &c, &zero, &u_c)?;
    let u_t: Vec<f64> = u_a.iter().zip(&u_c).map(|(a, b)| a + b).collect();

    // Step 3 driver: wetting flux f_w(S*) u_a
    let u_w: Vec<f64> = u_a.iter().zip(&c.fw_e).map(|(u, f)| f * u).collect();
    let stats = SolveStats { spd_residual, momentum_residual, continuity_residual, compatibility_defect };
    Ok(finish(model, c, u_t, u_c, p_w, u_w, u_a, stats))
}

pub(super) fn std_flow(model: &Model, ops: &Operators, state: &SimState, traces: UpwindTraces) -> Result<Flow> {
    let mesh = &model.mesh;
    let (fluids, rock) = (&model.fluids, &model.rock);
    let c = common(model, ops, state, traces)?;

    // capillary correction from p_c'(S) differences across interior edges
    let mut rhs = vec![0.0; mesh.n_edges()];
    for (e, edge) in mesh.edges().iter().enumerate() {
        let (ki, kj) = edge.cells;
        rhs[e] = match kj {
            Some(kj) => {
                let d = 0.5
                    * (capillary_pressure_derivative(state.s_w[ki], rock, rock.permeability[ki])
                        + capillary_pressure_derivative(state.s_w[kj], rock, rock.permeability[kj]));
                edge.length * d * (state.s_w[ki] - state.s_w[kj])
            }
            None => edge.length * c.pc[ki] - c.b_d[e],
        } - ops.g[e];
    }
    let (xi, spd_residual) = ops.solve_free_spd(&c.a, &rhs)?;

    let fn_cell: Vec<f64> = state.s_w.iter().map(|&s| fractional_flow(s, fluids, rock).1).collect();
    let cap = capillary_coupling(mesh, &xi, &fn_cell, &c.lambda_k);
    let zero = vec![0.0; xi.len()];
    let (u_t, p_w, momentum_residual, continuity_residual, compatibility_defect) = mixed_solve(ops, &c, &cap, &zero)?;

    let (u_w, _) = reconstruct_phase_velocities(&u_t, &xi, &c.fw_e, &c.fn_e);
    let (dir_w, _) = phase_directions(&u_t, &xi, &c.fw_e, &c.fn_e);
    let stats = SolveStats { spd_residual, momentum_residual, continuity_residual, compatibility_defect };
    Ok(finish(model, c, u_t, xi, p_w, u_w, dir_w, stats))
}
