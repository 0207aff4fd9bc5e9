//! Physics-preserving IMPES.
//!
//! Step 1 solves the capillary potential gradient `ξ_c` from
//! `A x_c = B p_c(Sⁿ) - b_D - g` (zero on Neumann edges). Step 2 solves the
//! total velocity and wetting pressure with the upwinded total divergence
//! `C = (B_w + B_n)ᵀ`. The saturation update uses `B_wᵀ u_t - B_cᵀ x_c`,
//! which together with the non-wetting counterpart conserves both phases.

use super::{phase_directions, reconstruct_phase_velocities, Flow, Model, Operators, SimState, SolveStats};
use crate::upwind::{edge_fractional_flows, UpwindTraces};
use crate::error::Result;
use crate::physics::{fractional_flow, total_mobility};
use crate::rt0::{capillary_coupling, mass_matrix, scaled_divergence};

pub(super) fn flow(model: &Model, ops: &Operators, state: &SimState, traces: UpwindTraces) -> Result<Flow> {
    let mesh = &model.mesh;
    let (fluids, rock) = (&model.fluids, &model.rock);

    let lambda_k: Vec<f64> = state
        .s_w
        .iter()
        .zip(&rock.permeability)
        .map(|(&s, &k)| total_mobility(s, fluids, rock) * k)
        .collect();
    let a = mass_matrix(mesh, &lambda_k)?;
    let pc = model.capillary_pressures(&state.s_w);
    let (b_wd, _, b_d) = ops.dirichlet_vectors(model, &pc);

    // Step 1
    let bpc = ops.b.mul_vec(&pc);
    let rhs: Vec<f64> = (0..bpc.len()).map(|e| bpc[e] - b_d[e] - ops.g[e]).collect();
    let (x_c, spd_residual) = ops.solve_free_spd(&a, &rhs)?;

    // Step 2
    let (fw_e, fn_e) = edge_fractional_flows(&traces, fluids, rock);
    let b_w = scaled_divergence(mesh, &fw_e);
    let b_n = scaled_divergence(mesh, &fn_e);
    let fc: Vec<f64> = fw_e.iter().zip(&fn_e).map(|(a, b)| a * b).collect();
    let b_c = scaled_divergence(mesh, &fc);
    let ct = b_w.add(&b_n);
    let fn_cell: Vec<f64> = state.s_w.iter().map(|&s| fractional_flow(s, fluids, rock).1).collect();
    let bc_x = capillary_coupling(mesh, &x_c, &fn_cell, &lambda_k);
    let r_u: Vec<f64> = (0..bc_x.len()).map(|e| bc_x[e] - b_wd[e] - ops.g_w[e]).collect();
    let (u_t, p_w, momentum_residual, continuity_residual, compatibility_defect) =
        ops.solve_flow_saddle(&a, &ct, &r_u, &ops.f_t)?;
    let p_n: Vec<f64> = pc.iter().zip(&p_w).map(|(a, b)| a + b).collect();

    // Step 3 drivers
    let bwu = b_w.mul_vec_transpose(&u_t);
    let bnu = b_n.mul_vec_transpose(&u_t);
    let bcx = b_c.mul_vec_transpose(&x_c);
    let out_w: Vec<f64> = bwu.iter().zip(&bcx).map(|(a, b)| a - b).collect();
    let out_n: Vec<f64> = bnu.iter().zip(&bcx).map(|(a, b)| a + b).collect();

    let (u_w, u_n) = reconstruct_phase_velocities(&u_t, &x_c, &fw_e, &fn_e);
    let (dir_w, dir_n) = phase_directions(&u_t, &x_c, &fw_e, &fn_e);
    Ok(Flow {
        traces,
        u_t,
        xi_c: x_c,
        p_w,
        p_n,
        u_w,
        u_n,
        dir_w,
        dir_n,
        out_w,
        out_n,
        stats: SolveStats {
            spd_residual,
            momentum_residual,
            continuity_residual,
            compatibility_defect,
        },
    })
}
