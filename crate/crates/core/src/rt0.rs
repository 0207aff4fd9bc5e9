//! Lowest-order Raviart–Thomas velocities on triangles and the matrices and
//! vectors of the mixed formulation.
//!
//! The global DOF of edge `F` is the constant normal flux density `v·n^F`, so
//! the physical flux through `F` is `DOF × |F|`. On cell `K` with local edge
//! `i` opposite vertex `P_i` the basis is `φ_i = σ_i |F_i| / (2|K|) (x - P_i)`.

use crate::error::{Error, Result};
use crate::linsolve::SparseMatrix;
use crate::mesh::{BoundaryCondition, Mesh, Point};

/// Symmetric 2×2 tensor `[[xx, xy], [xy, yy]]`.
pub type Tensor = [[f64; 2]; 2];

/// `φ_i(x)` on cell `k` for local edge `i`.
pub fn basis_value(mesh: &Mesh, k: usize, i: usize, x: Point) -> Point {
    let p = mesh.cell_vertices(k)[i];
    let e = mesh.edge(mesh.cell_edges(k)[i]);
    let s = mesh.cell_signs(k)[i] * e.length / (2.0 * mesh.area(k));
    [s * (x[0] - p[0]), s * (x[1] - p[1])]
}

/// `∇·φ_i` on cell `k` (constant).
pub fn basis_divergence(mesh: &Mesh, k: usize, i: usize) -> f64 {
    mesh.cell_signs(k)[i] * mesh.edge(mesh.cell_edges(k)[i]).length / mesh.area(k)
}

/// Evaluates the RT₀ field with edge DOFs `dofs` at `x` inside cell `k`.
pub fn evaluate(mesh: &Mesh, dofs: &[f64], k: usize, x: Point) -> Point {
    let edges = mesh.cell_edges(k);
    let mut v = [0.0, 0.0];
    for i in 0..3 {
        let phi = basis_value(mesh, k, i, x);
        v[0] += dofs[edges[i]] * phi[0];
        v[1] += dofs[edges[i]] * phi[1];
    }
    v
}

/// Edge midpoints of cell `k`, ordered by local edge.
fn edge_midpoints(mesh: &Mesh, k: usize) -> [Point; 3] {
    mesh.cell_edges(k).map(|e| mesh.edge(e).midpoint)
}

/// `∫_K T φ_i·φ_j` by the edge-midpoint rule, exact for the quadratic integrand.
pub fn local_mass(mesh: &Mesh, k: usize, t: &Tensor) -> [[f64; 3]; 3] {
    let w = mesh.area(k) / 3.0;
    let mids = edge_midpoints(mesh, k);
    let vals: [[Point; 3]; 3] = std::array::from_fn(|q| std::array::from_fn(|i| basis_value(mesh, k, i, mids[q])));
    let mut m = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            let mut s = 0.0;
            for v in &vals {
                let (a, b) = (v[i], v[j]);
                let tb = [t[0][0] * b[0] + t[0][1] * b[1], t[1][0] * b[0] + t[1][1] * b[1]];
                s += a[0] * tb[0] + a[1] * tb[1];
            }
            m[i][j] = w * s;
        }
    }
    m
}

fn isotropic(c: f64) -> Tensor {
    [[c, 0.0], [0.0, c]]
}

/// `A = (∫ (λK)⁻¹ φ_i·φ_j)` for a scalar `λK` per cell.
pub fn mass_matrix(mesh: &Mesh, lambda_k: &[f64]) -> Result<SparseMatrix> {
    if let Some((k, v)) = lambda_k.iter().enumerate().find(|(_, v)| !(**v > 0.0 && v.is_finite())) {
        return Err(Error::Assembly(format!("cell {k}: mobility × permeability must be positive, got {v}")));
    }
    let inv: Vec<Tensor> = lambda_k.iter().map(|v| isotropic(1.0 / v)).collect();
    Ok(weighted_mass_matrix(mesh, &inv))
}

/// `A = (∫ T_K φ_i·φ_j)` for a per-cell tensor `T_K`, typically `(λK)⁻¹`.
pub fn weighted_mass_matrix(mesh: &Mesh, t: &[Tensor]) -> SparseMatrix {
    let mut trips = Vec::with_capacity(9 * mesh.n_cells());
    for (k, tk) in t.iter().enumerate() {
        let local = local_mass(mesh, k, tk);
        let edges = mesh.cell_edges(k);
        for i in 0..3 {
            for j in 0..3 {
                trips.push((edges[i], edges[j], local[i][j]));
            }
        }
    }
    SparseMatrix::from_triplets(mesh.n_edges(), mesh.n_edges(), trips).with_symmetry_check(1e-12)
}

/// Tensor form of the mass matrix for anisotropic permeability.
pub fn tensor_mass_matrix(mesh: &Mesh, lambda: &[f64], k: &[Tensor]) -> Result<SparseMatrix> {
    let mut inv = Vec::with_capacity(k.len());
    for (c, (l, t)) in lambda.iter().zip(k).enumerate() {
        let det = t[0][0] * t[1][1] - t[0][1] * t[1][0];
        if !(*l > 0.0 && t[0][0] > 0.0 && det > 0.0) || (t[0][1] - t[1][0]).abs() > 1e-12 * t[0][0].abs() {
            return Err(Error::Assembly(format!("cell {c}: λK is not symmetric positive definite")));
        }
        let s = 1.0 / (l * det);
        inv.push([[s * t[1][1], -s * t[0][1]], [-s * t[1][0], s * t[0][0]]]);
    }
    Ok(weighted_mass_matrix(mesh, &inv))
}

/// `B = (∫ q_j ∇·φ_i)`: entry `σ|F|` for each edge–cell incidence.
pub fn divergence(mesh: &Mesh) -> SparseMatrix {
    scaled_divergence(mesh, &vec![1.0; mesh.n_edges()])
}

/// `(∫ q_j ∇·(c_F φ_i))` for an edge-wise constant factor `c_F`.
pub fn scaled_divergence(mesh: &Mesh, factor: &[f64]) -> SparseMatrix {
    let mut trips = Vec::with_capacity(3 * mesh.n_cells());
    for k in 0..mesh.n_cells() {
        let edges = mesh.cell_edges(k);
        let signs = mesh.cell_signs(k);
        for i in 0..3 {
            let e = edges[i];
            trips.push((e, k, signs[i] * mesh.edge(e).length * factor[e]));
        }
    }
    SparseMatrix::from_triplets(mesh.n_edges(), mesh.n_cells(), trips)
}

/// `(∫_{Γ_D} p^B φ_i·n)` with the midpoint rule; `p^B` given per Dirichlet edge.
pub fn dirichlet_vector(mesh: &Mesh, pressure: &[Option<f64>]) -> Result<Vec<f64>> {
    let mut b = vec![0.0; mesh.n_edges()];
    for (e, p) in pressure.iter().enumerate() {
        if let Some(p) = p {
            match mesh.condition(e) {
                Some(BoundaryCondition::Dirichlet { .. }) => b[e] = p * mesh.edge(e).length,
                _ => return Err(Error::Assembly(format!("Dirichlet data given on edge {e}, which is not a Dirichlet edge"))),
            }
        }
    }
    Ok(b)
}

/// `(∫_Ω ρ g ∇z·φ_i)`, exact per triangle since `∫_K (x - P_i) = |K| (c_K - P_i)`.
pub fn gravity_vector(mesh: &Mesh, rho_g: f64, grad_z: Point) -> Vec<f64> {
    let mut g = vec![0.0; mesh.n_edges()];
    if rho_g == 0.0 || grad_z == [0.0, 0.0] {
        return g;
    }
    for k in 0..mesh.n_cells() {
        let c = mesh.centroid(k);
        let verts = mesh.cell_vertices(k);
        let edges = mesh.cell_edges(k);
        let signs = mesh.cell_signs(k);
        for i in 0..3 {
            let e = edges[i];
            let s = signs[i] * mesh.edge(e).length / 2.0;
            let d = [c[0] - verts[i][0], c[1] - verts[i][1]];
            g[e] += rho_g * s * (grad_z[0] * d[0] + grad_z[1] * d[1]);
        }
    }
    g
}

/// `(∫_K F)` for a per-cell constant density `F`.
pub fn cell_integrals(mesh: &Mesh, density: &[f64]) -> Vec<f64> {
    density.iter().enumerate().map(|(k, f)| f * mesh.area(k)).collect()
}

/// `b_c(ξ, S) = (∫ (λ_t K)⁻¹ f_n ξ·φ_i)` with cell-centred `f_n`.
pub fn capillary_coupling(mesh: &Mesh, xi: &[f64], f_n: &[f64], lambda_k: &[f64]) -> Vec<f64> {
    let mut b = vec![0.0; mesh.n_edges()];
    for k in 0..mesh.n_cells() {
        let w = f_n[k] / lambda_k[k];
        if w == 0.0 {
            continue;
        }
        let local = local_mass(mesh, k, &isotropic(w));
        let edges = mesh.cell_edges(k);
        for i in 0..3 {
            b[edges[i]] += (0..3).map(|j| local[i][j] * xi[edges[j]]).sum::<f64>();
        }
    }
    b
}

/// Edge DOFs of the interpolant of a constant field `v`.
pub fn interpolate_constant(mesh: &Mesh, v: Point) -> Vec<f64> {
    mesh.edges().iter().map(|e| v[0] * e.normal[0] + v[1] * e.normal[1]).collect()
}
