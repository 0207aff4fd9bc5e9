//! Runs a scenario file (default: the strip analog) and writes VTK
//! snapshots plus the diagnostics CSV to a directory.
//!
//!     cargo run --example run_scenario -- [scenario.toml] [out-dir]

use std::path::PathBuf;

use pimpes::driver::run_scenario;
use pimpes::scenario::Scenario;
use pimpes::units::DAY;

fn main() -> pimpes::Result<()> {
    let mut args = std::env::args().skip(1);
    let config = args.next().map(PathBuf::from).unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("scenarios/layered_desk.toml"));
    let out = args.next().map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("pimpes-run"));
    let scenario = Scenario::load(&config)?;
    let (_, result, csv) = run_scenario(&scenario, &out)?;
    for r in result.records.iter().step_by(10) {
        println!(
            "step {:>4}  t = {:>7.3} day  S_IO_w = {:.6}  S_ND_w = {:.6}  minS = {:.2e}  maxS = {:.8}",
            r.step,
            r.t / DAY,
            r.ledger.s_io_w,
            r.ledger.s_nd_w,
            r.min_s,
            r.max_s
        );
    }
    println!("eta = {:e}, ledger defect = {:.2e}", result.eta, result.ledger.max_defect());
    println!("diagnostics in {}", csv.display());
    Ok(())
}
