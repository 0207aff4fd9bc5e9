//! Assembles the mixed operators on two triangles and prints them densely.

use pimpes::mesh::{BoundaryCondition, EdgePredicate, Mesh};
use pimpes::physics::{FluidPair, RockModel};
use pimpes::rt0::{divergence, mass_matrix};
use pimpes::units::{BAR, MILLIDARCY};
use pimpes::upwind::{capillary_divergence, compute_traces, upwinded_divergence, Phase};

fn print(name: &str, rows: usize, cols: usize, get: impl Fn(usize, usize) -> f64) {
    println!("{name}:");
    for i in 0..rows {
        let row: Vec<String> = (0..cols).map(|j| format!("{:>11.4e}", get(i, j))).collect();
        println!("  {}", row.join(" "));
    }
}

fn main() -> pimpes::Result<()> {
    let all: EdgePredicate = Box::new(|_| true);
    let mesh = Mesh::structured(1, 1, 1.0, 1.0)?.tag_boundary(&[(all, BoundaryCondition::no_flow())])?;
    let fluids = FluidPair { rho_w: 1000.0, rho_n: 800.0, mu_w: 1e-3, mu_n: 0.3e-3, gravity: 0.0, grad_z: [0.0, -1.0] };
    let mut rock = RockModel::uniform(2, 0.2, 50.0 * MILLIDARCY);
    rock.bc = 60.0 * BAR * MILLIDARCY.sqrt();

    let (n, m) = (mesh.n_edges(), mesh.n_cells());
    let a = mass_matrix(&mesh, &[1.0, 2.0])?;
    print("A (lambda K = 1, 2)", n, n, |i, j| a.get(i, j));
    let b = divergence(&mesh);
    print("B", n, m, |i, j| b.get(i, j));

    // Wetting flows one way across the diagonal, non-wetting the other.
    let s = [0.2, 0.8];
    let u_w: Vec<f64> = (0..n).map(|e| if mesh.edge(e).is_boundary() { 0.0 } else { 1.0 }).collect();
    let u_n: Vec<f64> = u_w.iter().map(|v| -v).collect();
    let traces = compute_traces(&mesh, &s, &u_w, &u_n)?;
    println!("traces S*_ww = {:?}\n       S*_wn = {:?}", traces.s_ww, traces.s_wn);
    let bw = upwinded_divergence(&mesh, &traces, Phase::Wetting, &fluids, &rock);
    let bn = upwinded_divergence(&mesh, &traces, Phase::NonWetting, &fluids, &rock);
    let bc = capillary_divergence(&mesh, &traces, &fluids, &rock);
    print("B_w", n, m, |i, j| bw.get(i, j));
    print("B_n", n, m, |i, j| bn.get(i, j));
    print("B_c", n, m, |i, j| bc.get(i, j));
    Ok(())
}
