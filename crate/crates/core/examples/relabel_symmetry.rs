//! Runs the counter-current analog with the phase roles swapped and shows
//! that the swapped wetting field mirrors the original non-wetting one.

use std::path::Path;

use pimpes::scenario::Scenario;
use pimpes::schemes::{initialize, run, NoObserver};

fn main() -> pimpes::Result<()> {
    let mut scenario = Scenario::load(&Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios/lens_counter_current_desk.toml"))?;
    scenario.scheme.max_steps = Some(40);
    let setup = scenario.build()?;
    let swapped = setup.model.relabeled()?;
    let s0: Vec<f64> = setup.s_w0.iter().map(|s| 1.0 - s).collect();
    let a = run(&setup.model, &scenario.scheme, initialize(&setup.model, &scenario.scheme, setup.s_w0.clone())?, &mut NoObserver)?;
    let b = run(&swapped, &scenario.scheme, initialize(&swapped, &scenario.scheme, s0)?, &mut NoObserver)?;
    let gap = a.state.s_w.iter().zip(&b.state.s_n).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    println!("after {} steps: max |S_w - S_n(swapped)| = {gap:.3e}", a.records.len());
    println!("eta original {:e}, swapped {:e}", a.eta, b.eta);
    Ok(())
}
