//! Loads the layered log-permeability raster and samples it onto a mesh.

use std::path::Path;

use pimpes::mesh::Mesh;
use pimpes::scenario::{load_permeability_raster, raster_to_cells, RasterMapping};
use pimpes::units::MILLIDARCY;

fn main() -> pimpes::Result<()> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios/spe10_standin_60x60.txt");
    let raster = load_permeability_raster(&path, 60, 60, RasterMapping::Log10, MILLIDARCY)?;
    let mesh = Mesh::structured(20, 20, 180.0, 180.0)?;
    let k: Vec<f64> = raster_to_cells(&mesh, &raster, 60, 60).iter().map(|v| v / MILLIDARCY).collect();
    let (lo, hi) = k.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &v| (a.min(v), b.max(v)));
    let mean_log = k.iter().map(|v| v.log10()).sum::<f64>() / k.len() as f64;
    println!("{} cells, K in [{lo:.3}, {hi:.1}] md, mean log10 K = {mean_log:.3}", k.len());
    // Coarse picture of log10 K, top row first.
    for j in (0..20).rev() {
        let row: String = (0..20)
            .map(|i| {
                let c = mesh.locate([(i as f64 + 0.5) * 9.0, (j as f64 + 0.5) * 9.0]).unwrap();
                b" .:-=+*#%@"[(k[c].log10() + 2.0).clamp(0.0, 5.99) as usize * 10 / 6] as char
            })
            .collect();
        println!("  {row}");
    }
    Ok(())
}
