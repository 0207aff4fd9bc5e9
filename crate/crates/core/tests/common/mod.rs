//! Shared fixtures and independent oracles for the integration tests.
#![allow(dead_code)]

use std::path::{Path, PathBuf};

use pimpes::mesh::{BoundaryCondition, BoundaryEdge, EdgePredicate, Mesh, Point};
use pimpes::physics::{fractional_flow, FluidPair, RockModel};
use pimpes::scenario::{Scenario, Setup};
use pimpes::schemes::{initialize, run, Model, Observer, RunResult, SchemeConfig, SimState, StepRecord, StepReport};

pub fn scenario_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(format!("{name}.toml"))
}

pub fn load(name: &str) -> Scenario {
    Scenario::load(&scenario_path(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

pub fn fluids(mu_n: f64) -> FluidPair {
    FluidPair { rho_w: 1000.0, rho_n: 800.0, mu_w: 1e-3, mu_n, gravity: 0.0, grad_z: [0.0, -1.0] }
}

pub fn closed(mesh: Mesh) -> Mesh {
    let all: EdgePredicate = Box::new(|_| true);
    mesh.tag_boundary(&[(all, BoundaryCondition::no_flow())]).unwrap()
}

/// Left/right Dirichlet pressures on `[0, lx]`, no-flow elsewhere.
pub fn left_right(mesh: Mesh, lx: f64, p_left: f64, p_right: f64) -> Mesh {
    let tol = 1e-9 * lx;
    let left: EdgePredicate = Box::new(move |b: &BoundaryEdge| b.midpoint[0] <= tol);
    let right: EdgePredicate = Box::new(move |b: &BoundaryEdge| b.midpoint[0] >= lx - tol);
    let rest: EdgePredicate = Box::new(move |b: &BoundaryEdge| b.midpoint[0] > tol && b.midpoint[0] < lx - tol);
    mesh.tag_boundary(&[
        (left, BoundaryCondition::Dirichlet { p_w: p_left, p_n: None, s_w: None }),
        (right, BoundaryCondition::Dirichlet { p_w: p_right, p_n: None, s_w: None }),
        (rest, BoundaryCondition::no_flow()),
    ])
    .unwrap()
}

/// `nx × ny` grid over `[0, lx] × [0, ly]` with interior vertices displaced
/// pseudo-randomly by up to `jitter` of a cell, split into triangles.
pub fn jittered_mesh(nx: usize, ny: usize, lx: f64, ly: f64, jitter: f64) -> Mesh {
    let (hx, hy) = (lx / nx as f64, ly / ny as f64);
    let mut vertices = Vec::new();
    for j in 0..=ny {
        for i in 0..=nx {
            let mut p = [i as f64 * hx, j as f64 * hy];
            if i > 0 && i < nx && j > 0 && j < ny {
                let a = ((i * 7 + j * 13) as f64).sin();
                let b = ((i * 11 + j * 5) as f64).cos();
                p[0] += jitter * hx * a;
                p[1] += jitter * hy * b;
            }
            vertices.push(p);
        }
    }
    let v = |i: usize, j: usize| j * (nx + 1) + i;
    let mut cells = Vec::new();
    for j in 0..ny {
        for i in 0..nx {
            cells.push([v(i, j), v(i + 1, j), v(i + 1, j + 1)]);
            cells.push([v(i, j), v(i + 1, j + 1), v(i, j + 1)]);
        }
    }
    Mesh::from_cells(vertices, cells).unwrap()
}

// ---- brute-force operator oracle ----

fn sub(a: Point, b: Point) -> Point {
    [a[0] - b[0], a[1] - b[1]]
}

fn dot(a: Point, b: Point) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

/// Outward unit normal and length of local edge `i` (opposite vertex `i`).
pub fn outward(v: &[Point; 3], i: usize) -> (Point, f64) {
    let (a, b) = (v[(i + 1) % 3], v[(i + 2) % 3]);
    let t = sub(b, a);
    let len = t[0].hypot(t[1]);
    let mut n = [t[1] / len, -t[0] / len];
    let mid = [(a[0] + b[0]) / 2.0, (a[1] + b[1]) / 2.0];
    if dot(sub(mid, v[i]), n) < 0.0 {
        n = [-n[0], -n[1]];
    }
    (n, len)
}

fn tri_area(v: &[Point; 3]) -> f64 {
    0.5 * ((v[1][0] - v[0][0]) * (v[2][1] - v[0][1]) - (v[2][0] - v[0][0]) * (v[1][1] - v[0][1])).abs()
}

/// Local edge `i` of cell `k`, identified by its vertex pair.
fn global_edge(mesh: &Mesh, k: usize, i: usize) -> usize {
    let c = mesh.cells()[k];
    let mut pair = [c[(i + 1) % 3], c[(i + 2) % 3]];
    pair.sort();
    mesh.edges()
        .iter()
        .position(|e| {
            let mut q = e.vertices;
            q.sort();
            q == pair
        })
        .unwrap()
}

/// Global RT₀ basis function of the edge that is local edge `i` of `k`,
/// evaluated inside `k`: `σ |F| / (2|K|) (x - P_i)` with `σ = n_out · n_F`.
pub fn basis(mesh: &Mesh, k: usize, i: usize, x: Point) -> Point {
    let c = mesh.cells()[k];
    let v = [mesh.vertices()[c[0]], mesh.vertices()[c[1]], mesh.vertices()[c[2]]];
    let (n_out, len) = outward(&v, i);
    let sigma = dot(n_out, mesh.edge(global_edge(mesh, k, i)).normal).signum();
    let s = sigma * len / (2.0 * tri_area(&v));
    [s * (x[0] - v[i][0]), s * (x[1] - v[i][1])]
}

/// `A[a][b] = Σ_K (λK)_K⁻¹ ∫_K φ_a · φ_b`, by edge-midpoint quadrature
/// (exact for quadratics).
pub fn brute_mass(mesh: &Mesh, lambda_k: &[f64]) -> Vec<Vec<f64>> {
    let n = mesh.n_edges();
    let mut a = vec![vec![0.0; n]; n];
    for k in 0..mesh.n_cells() {
        let c = mesh.cells()[k];
        let v = [mesh.vertices()[c[0]], mesh.vertices()[c[1]], mesh.vertices()[c[2]]];
        let area = tri_area(&v);
        let q: Vec<Point> = (0..3).map(|i| [(v[(i + 1) % 3][0] + v[(i + 2) % 3][0]) / 2.0, (v[(i + 1) % 3][1] + v[(i + 2) % 3][1]) / 2.0]).collect();
        for i in 0..3 {
            for j in 0..3 {
                let s: f64 = q.iter().map(|&x| dot(basis(mesh, k, i, x), basis(mesh, k, j, x))).sum::<f64>() * area / 3.0;
                a[global_edge(mesh, k, i)][global_edge(mesh, k, j)] += s / lambda_k[k];
            }
        }
    }
    a
}

/// `B[e][k] = Σ_{F ⊂ ∂K} ∫_F factor_F φ_e · n_out` by two-point Gauss
/// quadrature on every edge of every cell, so the jump terms of shared
/// edges enter from both sides.
pub fn brute_divergence(mesh: &Mesh, factor: &dyn Fn(usize) -> f64) -> Vec<Vec<f64>> {
    let (n, m) = (mesh.n_edges(), mesh.n_cells());
    let mut b = vec![vec![0.0; m]; n];
    let g = 0.5 / 3f64.sqrt();
    for k in 0..m {
        let c = mesh.cells()[k];
        let v = [mesh.vertices()[c[0]], mesh.vertices()[c[1]], mesh.vertices()[c[2]]];
        for side in 0..3 {
            let (n_out, len) = outward(&v, side);
            let (p, q) = (v[(side + 1) % 3], v[(side + 2) % 3]);
            let f = factor(global_edge(mesh, k, side));
            for i in 0..3 {
                let mut integral = 0.0;
                for t in [0.5 - g, 0.5 + g] {
                    let x = [p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])];
                    integral += 0.5 * len * dot(basis(mesh, k, i, x), n_out);
                }
                b[global_edge(mesh, k, i)][k] += f * integral;
            }
        }
    }
    b
}

/// Upwind cell of `edge` for a phase flux, by the `≥ 0 → K_i` rule.
pub fn upwind_cell(mesh: &Mesh, edge: usize, flux: f64) -> usize {
    let (ki, kj) = mesh.edge(edge).cells;
    if flux >= 0.0 {
        ki
    } else {
        kj.unwrap_or(ki)
    }
}

pub fn max_entry_gap(dense: &[Vec<f64>], get: &dyn Fn(usize, usize) -> f64) -> f64 {
    let mut worst = 0.0f64;
    for (i, row) in dense.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            worst = worst.max((v - get(i, j)).abs());
        }
    }
    worst
}

// ---- run recording ----

/// Per-step snapshots plus an independent local-conservation residual
/// evaluated from the traces, `u_t` and `ξ_c` of each report.
pub struct Recorder<'a> {
    pub model: &'a Model,
    prev: Option<SimState>,
    pub states: Vec<SimState>,
    /// Largest relative residual per step, both phases.
    pub lemma_residuals: Vec<(f64, f64)>,
    pub worst_solve: f64,
    pub compatibility: Vec<Option<f64>>,
    pub update_mismatch: f64,
}

impl<'a> Recorder<'a> {
    pub fn new(model: &'a Model) -> Self {
        Recorder { model, prev: None, states: Vec::new(), lemma_residuals: Vec::new(), worst_solve: 0.0, compatibility: Vec::new(), update_mismatch: 0.0 }
    }
}

/// `φ|K|(Sⁿ⁺¹_α - Sⁿ_α)/δt + Σ σ|F| (f_α u_t ∓ f_n f_w ξ) - ∫_K F_α` per cell,
/// relative to `φ|K| max(S)/δt`.
pub fn lemma_residuals(model: &Model, s_old: &[f64], s_new: &[f64], report: &StepReport) -> (f64, f64) {
    let mesh = &model.mesh;
    let flow = &report.flow;
    let (fl, rock) = (&model.fluids, &model.rock);
    let dt = report.dt;
    let smax = s_old.iter().chain(s_new).map(|s| s.max(1.0 - s)).fold(0.0, f64::max);
    let mut worst = (0.0f64, 0.0f64);
    for k in 0..mesh.n_cells() {
        let c = mesh.cells()[k];
        let v = [mesh.vertices()[c[0]], mesh.vertices()[c[1]], mesh.vertices()[c[2]]];
        let (mut out_w, mut out_n) = (0.0, 0.0);
        for side in 0..3 {
            let e = global_edge(mesh, k, side);
            let (n_out, len) = outward(&v, side);
            let sigma = dot(n_out, mesh.edge(e).normal).signum();
            let f_w = fractional_flow(flow.traces.s_ww[e], fl, rock).0;
            let f_n = fractional_flow(flow.traces.s_wn[e], fl, rock).1;
            out_w += sigma * len * (f_w * flow.u_t[e] - f_n * f_w * flow.xi_c[e]);
            out_n += sigma * len * (f_n * flow.u_t[e] + f_n * f_w * flow.xi_c[e]);
        }
        let pv = rock.porosity[k] * tri_area(&v);
        let scale = pv * smax / dt;
        let r_w = pv * (s_new[k] - s_old[k]) / dt + out_w - model.source_w[k];
        let r_n = pv * ((1.0 - s_new[k]) - (1.0 - s_old[k])) / dt + out_n - model.source_n[k];
        worst.0 = worst.0.max(r_w.abs() / scale);
        worst.1 = worst.1.max(r_n.abs() / scale);
    }
    worst
}

impl Observer for Recorder<'_> {
    fn on_start(&mut self, _model: &Model, state: &SimState) -> pimpes::Result<()> {
        self.prev = Some(state.clone());
        self.states.push(state.clone());
        Ok(())
    }

    fn on_step(&mut self, model: &Model, state: &SimState, report: &StepReport, record: &StepRecord) -> pimpes::Result<()> {
        let old = self.prev.replace(state.clone()).unwrap();
        self.lemma_residuals.push(lemma_residuals(model, &old.s_w, &report.s_pre_clamp, report));
        self.worst_solve = self.worst_solve.max(record.stats.worst());
        self.compatibility.push(record.stats.compatibility_defect);
        self.update_mismatch = self.update_mismatch.max(record.update_mismatch);
        self.states.push(state.clone());
        Ok(())
    }
}

pub fn run_recorded<'a>(model: &'a Model, config: &SchemeConfig, s0: Vec<f64>) -> (RunResult, Recorder<'a>) {
    let mut rec = Recorder::new(model);
    let state = initialize(model, config, s0).unwrap();
    let result = run(model, config, state, &mut rec).unwrap();
    (result, rec)
}

pub fn build(scenario: &Scenario) -> Setup {
    scenario.build().unwrap_or_else(|e| panic!("{}: {e}", scenario.name))
}

pub fn uniform_rock(n: usize, k: f64) -> RockModel {
    RockModel::uniform(n, 0.2, k)
}
