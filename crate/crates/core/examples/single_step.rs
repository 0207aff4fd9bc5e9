//! One P-IMPES step between a wet and a dry triangle: capillarity pulls
//! water into the dry cell while the total velocity stays zero.

use pimpes::mesh::{BoundaryCondition, EdgePredicate, Mesh};
use pimpes::physics::{FluidPair, RockModel};
use pimpes::schemes::{initialize, step, Model, Operators, SchemeConfig, SchemeKind};
use pimpes::units::{BAR, DAY, MILLIDARCY};

fn main() -> pimpes::Result<()> {
    let all: EdgePredicate = Box::new(|_| true);
    let mesh = Mesh::structured(1, 1, 10.0, 10.0)?.tag_boundary(&[(all, BoundaryCondition::no_flow())])?;
    let fluids = FluidPair { rho_w: 1000.0, rho_n: 800.0, mu_w: 1e-3, mu_n: 0.3e-3, gravity: 0.0, grad_z: [0.0, -1.0] };
    let mut rock = RockModel::uniform(2, 0.2, 50.0 * MILLIDARCY);
    rock.bc = 60.0 * BAR * MILLIDARCY.sqrt();
    let model = Model::new(mesh, fluids, rock)?;
    let config = SchemeConfig::fixed(SchemeKind::Pimpes, 0.1 * DAY, 1);
    let state = initialize(&model, &config, vec![0.3, 0.7])?;
    let ops = Operators::new(&model, config.p_ref);
    let (next, report) = step(&model, &ops, &config, &state, 0.1 * DAY, 1)?;
    println!("S_w: {:?} -> {:?}", state.s_w, next.s_w);
    println!("S_n: {:?} -> {:?}", state.s_n, next.s_n);
    println!("p_c: {:?} bar", model.capillary_pressures(&state.s_w).iter().map(|p| p / BAR).collect::<Vec<_>>());
    println!("max |u_t| = {:.3e} m/s, max |xi_c| = {:.3e} m/s", next.max_total_flux(), next.xi_c.iter().fold(0.0f64, |m, v| m.max(v.abs())));
    println!("solve residual {:.2e}, violations {}", report.flow.stats.worst(), report.violations);
    let vol = |s: &[f64]| s.iter().enumerate().map(|(k, v)| v * model.pore_volume(k)).sum::<f64>();
    println!("wetting volume {:.12} -> {:.12} m^2", vol(&state.s_w), vol(&next.s_w));
    Ok(())
}
