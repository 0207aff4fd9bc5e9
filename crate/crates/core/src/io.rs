//! Output files: legacy VTK snapshots, the diagnostics CSV, state checkpoints.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::mesh::Mesh;
use crate::rt0;
use crate::schemes::{SimState, StepRecord};
use crate::units::DAY;

fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Legacy ASCII VTK text of one state: triangle cells with `S_w`, `S_n`,
/// `p_w`, `p_n`, `K` scalars and the total, wetting and non-wetting
/// velocities evaluated at cell centroids.
pub fn vtk_string(mesh: &Mesh, state: &SimState, permeability: &[f64]) -> String {
    let m = mesh.n_cells();
    let mut s = String::new();
    s.push_str("# vtk DataFile Version 3.0\n");
    let _ = writeln!(s, "pimpes t = {:e} s", state.t);
    s.push_str("ASCII\nDATASET UNSTRUCTURED_GRID\n");
    let _ = writeln!(s, "POINTS {} double", mesh.n_vertices());
    for v in mesh.vertices() {
        let _ = writeln!(s, "{:?} {:?} 0", v[0], v[1]);
    }
    let _ = writeln!(s, "CELLS {m} {}", 4 * m);
    for c in mesh.cells() {
        let _ = writeln!(s, "3 {} {} {}", c[0], c[1], c[2]);
    }
    let _ = writeln!(s, "CELL_TYPES {m}");
    for _ in 0..m {
        s.push_str("5\n");
    }
    let _ = writeln!(s, "CELL_DATA {m}");
    for (name, values) in [
        ("S_w", &state.s_w[..]),
        ("S_n", &state.s_n[..]),
        ("p_w", &state.p_w[..]),
        ("p_n", &state.p_n[..]),
        ("K", permeability),
    ] {
        let _ = writeln!(s, "SCALARS {name} double 1\nLOOKUP_TABLE default");
        for v in values {
            let _ = writeln!(s, "{v:?}");
        }
    }
    for (name, dofs) in [("u_t", &state.u_t), ("u_w", &state.u_w), ("u_n", &state.u_n)] {
        let _ = writeln!(s, "VECTORS {name} double");
        for k in 0..m {
            let u = rt0::evaluate(mesh, dofs, k, mesh.centroid(k));
            let _ = writeln!(s, "{:?} {:?} 0", u[0], u[1]);
        }
    }
    s
}

pub fn write_vtk(path: &Path, mesh: &Mesh, state: &SimState, permeability: &[f64]) -> Result<()> {
    write_file(path, &vtk_string(mesh, state, permeability))
}

pub const CSV_HEADER: &str = "step,t_days,S_IO_w,S_ND_w,S_O_n,S_RD_n,eta,cfl,minS,maxS";

pub fn csv_row(r: &StepRecord) -> String {
    let l = &r.ledger;
    format!(
        "{},{:.14e},{:.14e},{:.14e},{:.14e},{:.14e},{:.14e},{:.14e},{:.14e},{:.14e}",
        r.step,
        r.t / DAY,
        l.s_io_w,
        l.s_nd_w,
        l.s_o_n,
        l.s_rd_n,
        r.eta,
        r.cfl,
        r.min_s,
        r.max_s
    )
}

/// Full diagnostics CSV for a sequence of step records.
pub fn diagnostics_csv(records: &[StepRecord]) -> String {
    let mut s = String::from(CSV_HEADER);
    s.push('\n');
    for r in records {
        s.push_str(&csv_row(r));
        s.push('\n');
    }
    s
}

pub const CHECKPOINT_HEADER: &str = "# pimpes-state v1";

/// Text checkpoint: header, `t`, cell count, edge count, then one named
/// section per array. Floats use shortest round-trip formatting.
pub fn checkpoint_string(state: &SimState) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{CHECKPOINT_HEADER}");
    let _ = writeln!(s, "t {:?}", state.t);
    let _ = writeln!(s, "cells {}", state.s_w.len());
    let _ = writeln!(s, "edges {}", state.u_t.len());
    for (name, v) in checkpoint_fields(state) {
        let _ = writeln!(s, "{name}");
        for x in v {
            let _ = writeln!(s, "{x:?}");
        }
    }
    s
}

fn checkpoint_fields(state: &SimState) -> [(&'static str, &Vec<f64>); 10] {
    [
        ("s_w", &state.s_w),
        ("s_n", &state.s_n),
        ("p_w", &state.p_w),
        ("p_n", &state.p_n),
        ("u_t", &state.u_t),
        ("xi_c", &state.xi_c),
        ("u_w", &state.u_w),
        ("u_n", &state.u_n),
        ("dir_w", &state.dir_w),
        ("dir_n", &state.dir_n),
    ]
}

pub fn write_checkpoint(path: &Path, state: &SimState) -> Result<()> {
    write_file(path, &checkpoint_string(state))
}

/// Parses [`checkpoint_string`] output.
pub fn parse_checkpoint(text: &str, origin: &Path) -> Result<SimState> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let err = |line: usize, message: String| Error::Parse { path: origin.to_path_buf(), line: line + 1, message };
    let mut next = |what: &str| lines.next().ok_or_else(|| err(text.lines().count(), format!("unexpected end of file, expected {what}")));
    let (n0, head) = next("header")?;
    if head.trim() != CHECKPOINT_HEADER {
        return Err(err(n0, format!("expected `{CHECKPOINT_HEADER}`")));
    }
    let mut keyed = |key: &str| -> Result<(usize, String)> {
        let (n, l) = next(key)?;
        match l.split_once(' ') {
            Some((k, v)) if k == key => Ok((n, v.trim().to_string())),
            _ => Err(err(n, format!("expected `{key} <value>`"))),
        }
    };
    let (nt, t) = keyed("t")?;
    let t: f64 = t.parse().map_err(|_| err(nt, "bad time".into()))?;
    let (nc, cells) = keyed("cells")?;
    let cells: usize = cells.parse().map_err(|_| err(nc, "bad cell count".into()))?;
    let (ne, edges) = keyed("edges")?;
    let edges: usize = edges.parse().map_err(|_| err(ne, "bad edge count".into()))?;

    let mut state = SimState {
        t,
        s_w: vec![],
        s_n: vec![],
        p_w: vec![],
        p_n: vec![],
        u_t: vec![],
        xi_c: vec![],
        u_w: vec![],
        u_n: vec![],
        dir_w: vec![],
        dir_n: vec![],
    };
    for (i, name) in ["s_w", "s_n", "p_w", "p_n", "u_t", "xi_c", "u_w", "u_n", "dir_w", "dir_n"].iter().enumerate() {
        let (n, l) = next(name)?;
        if l.trim() != *name {
            return Err(err(n, format!("expected section `{name}`")));
        }
        let len = if i < 4 { cells } else { edges };
        let mut v = Vec::with_capacity(len);
        for _ in 0..len {
            let (n, l) = next(name)?;
            v.push(l.trim().parse::<f64>().map_err(|_| err(n, format!("`{}` is not a number", l.trim())))?);
        }
        match i {
            0 => state.s_w = v,
            1 => state.s_n = v,
            2 => state.p_w = v,
            3 => state.p_n = v,
            4 => state.u_t = v,
            5 => state.xi_c = v,
            6 => state.u_w = v,
            7 => state.u_n = v,
            8 => state.dir_w = v,
            _ => state.dir_n = v,
        }
    }
    if let Some((n, _)) = lines.next() {
        return Err(err(n, "trailing data".into()));
    }
    Ok(state)
}

pub fn read_checkpoint(path: &Path) -> Result<SimState> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_checkpoint(&text, path)
}
