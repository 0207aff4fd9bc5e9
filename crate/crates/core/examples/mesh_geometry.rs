//! Builds a structured triangulation and prints its edge table.

use pimpes::mesh::Mesh;

fn main() -> pimpes::Result<()> {
    let mesh = Mesh::structured(2, 1, 2.0, 1.0)?;
    println!("{} vertices, {} cells, {} edges", mesh.n_vertices(), mesh.n_cells(), mesh.n_edges());
    for (e, edge) in mesh.edges().iter().enumerate() {
        let kind = match edge.cells.1 {
            Some(kj) => format!("interior {} | {}", edge.cells.0, kj),
            None => format!("boundary of {}", edge.cells.0),
        };
        println!(
            "edge {e}: |F| = {:.4}, n = ({:+.4}, {:+.4}), {kind}",
            edge.length, edge.normal[0], edge.normal[1]
        );
    }
    for k in 0..mesh.n_cells() {
        let d = mesh.closure_defect(k);
        println!("cell {k}: area {:.3}, closure defect ({:.1e}, {:.1e})", mesh.area(k), d[0], d[1]);
    }
    print!("\n{}", mesh.to_text());
    Ok(())
}
