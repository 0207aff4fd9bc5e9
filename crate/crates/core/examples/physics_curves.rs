//! Tabulates relative permeabilities, fractional flows and capillary
//! pressure for two permeabilities.

use pimpes::physics::{capillary_pressure, fractional_flow, mobilities, FluidPair, RockModel};
use pimpes::units::{BAR, CENTIPOISE, MILLIDARCY};

fn main() {
    let fluids = FluidPair { rho_w: 1000.0, rho_n: 800.0, mu_w: CENTIPOISE, mu_n: 0.3 * CENTIPOISE, gravity: 0.0, grad_z: [0.0, -1.0] };
    let mut rock = RockModel::uniform(1, 0.2, 50.0 * MILLIDARCY);
    rock.bc = 60.0 * BAR * MILLIDARCY.sqrt();
    println!("{:>6} {:>10} {:>10} {:>8} {:>8} {:>12} {:>12}", "S_w", "lam_w", "lam_n", "f_w", "f_n", "p_c(50md)", "p_c(1md)");
    for i in 0..=10 {
        let s = i as f64 / 10.0;
        let (lw, ln) = mobilities(s, &fluids, &rock);
        let (fw, fnw) = fractional_flow(s, &fluids, &rock);
        let pc50 = capillary_pressure(s, &rock, 50.0 * MILLIDARCY) / BAR;
        let pc1 = capillary_pressure(s, &rock, MILLIDARCY) / BAR;
        println!("{s:>6.2} {lw:>10.2} {ln:>10.2} {fw:>8.4} {fnw:>8.4} {pc50:>10.4} bar {pc1:>8.4} bar");
    }
}
