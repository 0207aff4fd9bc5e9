//! Runs a few steps of the equilibrium scenario and writes one VTK file.

use std::path::Path;

use pimpes::io::write_vtk;
use pimpes::scenario::Scenario;
use pimpes::schemes::{initialize, run, NoObserver};

fn main() -> pimpes::Result<()> {
    let scenario = Scenario::load(&Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios/equilibrium.toml"))?;
    let setup = scenario.build()?;
    let state = initialize(&setup.model, &scenario.scheme, setup.s_w0.clone())?;
    let result = run(&setup.model, &scenario.scheme, state, &mut NoObserver)?;
    let path = std::env::temp_dir().join("pimpes-equilibrium.vtk");
    write_vtk(&path, &setup.model.mesh, &result.state, &setup.model.rock.permeability)?;
    println!("wrote {} ({} cells)", path.display(), setup.model.mesh.n_cells());
    Ok(())
}
