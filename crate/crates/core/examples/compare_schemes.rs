//! Sweeps fixed time steps on the counter-current analog for P-IMPES and
//! HF-IMPES and reports the largest step without bound violations.

use std::path::Path;

use pimpes::driver::compare;
use pimpes::scenario::Scenario;
use pimpes::schemes::SchemeKind;
use pimpes::units::DAY;

fn main() -> pimpes::Result<()> {
    let mut scenario = Scenario::load(&Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios/lens_counter_current_desk.toml"))?;
    scenario.scheme.max_steps = None;
    scenario.scheme.end_time = Some(2.0 * DAY);
    let sweep: Vec<f64> = [0.05, 0.1, 0.2].iter().map(|d| d * DAY).collect();
    let cmp = compare(&scenario, &[SchemeKind::Pimpes, SchemeKind::HfImpes], Some(&sweep))?;
    print!("{}", cmp.to_csv());
    for kind in [SchemeKind::Pimpes, SchemeKind::HfImpes] {
        match cmp.feasible_dt(kind) {
            Some(dt) => println!("{kind}: largest bounds-preserving step {} day", dt / DAY),
            None => println!("{kind}: violates bounds at every swept step"),
        }
    }
    Ok(())
}
