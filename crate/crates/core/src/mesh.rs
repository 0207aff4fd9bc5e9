//! Conforming triangular meshes with globally oriented edges.
//!
//! Every edge carries one unit normal `n^F`. On an interior edge shared by
//! cells `a < b` the normal points out of `a`; on a boundary edge it points out
//! of the domain. For each cell the incidence sign `σ` is `+1` when `n^F` is
//! the cell's outward normal on that edge and `-1` otherwise.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

pub type Point = [f64; 2];

/// Boundary data attached to a boundary edge.
///
/// Fluxes are normal flux densities (m/s) along the outward normal, so a
/// negative total flux is injection.
#[derive(Clone, Debug, PartialEq)]
pub enum BoundaryCondition {
    /// Prescribed phase pressures. `p_n = None` means the non-wetting
    /// pressure follows `p_w + p_c` of the adjacent cell (no capillary jump).
    Dirichlet {
        p_w: f64,
        p_n: Option<f64>,
        s_w: Option<f64>,
    },
    /// Prescribed phase normal fluxes; `s_w` is required when the total flux
    /// enters the domain.
    Neumann {
        flux_w: f64,
        flux_n: f64,
        s_w: Option<f64>,
    },
}

impl BoundaryCondition {
    /// Impermeable wall.
    pub fn no_flow() -> Self {
        BoundaryCondition::Neumann {
            flux_w: 0.0,
            flux_n: 0.0,
            s_w: None,
        }
    }

    pub fn is_dirichlet(&self) -> bool {
        matches!(self, BoundaryCondition::Dirichlet { .. })
    }

    pub fn is_neumann(&self) -> bool {
        matches!(self, BoundaryCondition::Neumann { .. })
    }

    /// Total prescribed normal flux density for Neumann edges.
    pub fn total_flux(&self) -> Option<f64> {
        match self {
            BoundaryCondition::Neumann { flux_w, flux_n, .. } => Some(flux_w + flux_n),
            BoundaryCondition::Dirichlet { .. } => None,
        }
    }

    pub fn inflow_saturation(&self) -> Option<f64> {
        match self {
            BoundaryCondition::Dirichlet { s_w, .. } | BoundaryCondition::Neumann { s_w, .. } => *s_w,
        }
    }

    /// True for Neumann edges through which fluid enters.
    pub fn is_inflow(&self) -> bool {
        self.total_flux().is_some_and(|g| g < 0.0)
    }
}

#[derive(Clone, Debug)]
pub struct Edge {
    pub vertices: [usize; 2],
    /// `(K_i, K_j)`: the normal is exterior to `K_i`. Boundary edges have no `K_j`.
    pub cells: (usize, Option<usize>),
    pub normal: Point,
    pub length: f64,
    pub midpoint: Point,
}

impl Edge {
    pub fn is_boundary(&self) -> bool {
        self.cells.1.is_none()
    }
}

/// What a boundary predicate gets to look at.
#[derive(Clone, Copy, Debug)]
pub struct BoundaryEdge<'a> {
    pub index: usize,
    pub midpoint: Point,
    pub normal: Point,
    pub length: f64,
    pub label: Option<&'a str>,
}

pub type EdgePredicate<'a> = Box<dyn Fn(&BoundaryEdge) -> bool + 'a>;

#[derive(Clone, Debug)]
pub struct Mesh {
    vertices: Vec<Point>,
    cells: Vec<[usize; 3]>,
    edges: Vec<Edge>,
    /// Local edge `i` of a cell is opposite its vertex `i`.
    cell_edges: Vec<[usize; 3]>,
    cell_signs: Vec<[f64; 3]>,
    cell_area: Vec<f64>,
    centroid: Vec<Point>,
    diameter: Vec<f64>,
    labels: Vec<Option<String>>,
    conditions: Vec<Option<BoundaryCondition>>,
}

fn sub(a: Point, b: Point) -> Point {
    [a[0] - b[0], a[1] - b[1]]
}

fn norm(a: Point) -> f64 {
    a[0].hypot(a[1])
}

impl Mesh {
    /// Builds the edge structure from vertices and counterclockwise cells.
    pub fn from_cells(vertices: Vec<Point>, cells: Vec<[usize; 3]>) -> Result<Self> {
        if cells.is_empty() {
            return Err(Error::Mesh("mesh has no cells".into()));
        }
        let nv = vertices.len();
        let mut cell_area = Vec::with_capacity(cells.len());
        let mut centroid = Vec::with_capacity(cells.len());
        let mut diameter = Vec::with_capacity(cells.len());
        for (k, c) in cells.iter().enumerate() {
            if c.iter().any(|&v| v >= nv) {
                return Err(Error::Mesh(format!("cell {k} references a missing vertex")));
            }
            let [a, b, d] = c.map(|v| vertices[v]);
            let area = 0.5 * ((b[0] - a[0]) * (d[1] - a[1]) - (d[0] - a[0]) * (b[1] - a[1]));
            if !(area > 0.0) {
                return Err(Error::Mesh(format!(
                    "cell {k} is degenerate or clockwise (signed area {area:e})"
                )));
            }
            cell_area.push(area);
            centroid.push([(a[0] + b[0] + d[0]) / 3.0, (a[1] + b[1] + d[1]) / 3.0]);
            let longest = norm(sub(b, a)).max(norm(sub(d, b))).max(norm(sub(a, d)));
            diameter.push(longest);
        }

        let mut lookup: HashMap<(usize, usize), usize> = HashMap::new();
        let mut edges: Vec<Edge> = Vec::new();
        let mut cell_edges = vec![[0usize; 3]; cells.len()];
        for (k, c) in cells.iter().enumerate() {
            for i in 0..3 {
                let va = c[(i + 1) % 3];
                let vb = c[(i + 2) % 3];
                let key = (va.min(vb), va.max(vb));
                let e = match lookup.get(&key) {
                    Some(&e) => {
                        if edges[e].cells.1.is_some() {
                            return Err(Error::Mesh(format!(
                                "edge ({}, {}) is shared by more than two cells",
                                key.0, key.1
                            )));
                        }
                        edges[e].cells.1 = Some(k);
                        e
                    }
                    None => {
                        let (pa, pb) = (vertices[va], vertices[vb]);
                        let t = sub(pb, pa);
                        let length = norm(t);
                        if !(length > 0.0) {
                            return Err(Error::Mesh(format!("zero-length edge in cell {k}")));
                        }
                        // outward for a counterclockwise cell
                        let normal = [t[1] / length, -t[0] / length];
                        lookup.insert(key, edges.len());
                        edges.push(Edge {
                            vertices: [va, vb],
                            cells: (k, None),
                            normal,
                            length,
                            midpoint: [(pa[0] + pb[0]) / 2.0, (pa[1] + pb[1]) / 2.0],
                        });
                        edges.len() - 1
                    }
                };
                cell_edges[k][i] = e;
            }
        }
        // Cells are visited in increasing order, so the first cell to see an
        // edge has the lower index and its outward normal is the global one.
        let mut cell_signs = vec![[0.0; 3]; cells.len()];
        for (k, local) in cell_edges.iter().enumerate() {
            for i in 0..3 {
                cell_signs[k][i] = if edges[local[i]].cells.0 == k { 1.0 } else { -1.0 };
            }
        }
        let n_edges = edges.len();
        Ok(Mesh {
            vertices,
            cells,
            edges,
            cell_edges,
            cell_signs,
            cell_area,
            centroid,
            diameter,
            labels: vec![None; n_edges],
            conditions: vec![None; n_edges],
        })
    }

    /// `nx × ny` rectangles over `[0,lx]×[0,ly]`, each cut along its
    /// bottom-left to top-right diagonal.
    pub fn structured(nx: usize, ny: usize, lx: f64, ly: f64) -> Result<Self> {
        if nx == 0 || ny == 0 {
            return Err(Error::Mesh(format!("cell counts must be positive, got {nx}×{ny}")));
        }
        if !(lx > 0.0 && ly > 0.0 && lx.is_finite() && ly.is_finite()) {
            return Err(Error::Mesh(format!("domain size must be positive, got {lx}×{ly}")));
        }
        let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1));
        for j in 0..=ny {
            for i in 0..=nx {
                vertices.push([lx * i as f64 / nx as f64, ly * j as f64 / ny as f64]);
            }
        }
        let vid = |i: usize, j: usize| j * (nx + 1) + i;
        let mut cells = Vec::with_capacity(2 * nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                let (a, b, c, d) = (vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1));
                cells.push([a, b, c]);
                cells.push([a, c, d]);
            }
        }
        Mesh::from_cells(vertices, cells)
    }

    /// Parses the plain-text mesh format:
    ///
    /// ```text
    /// V <n>
    /// x y            (n lines)
    /// C <m>
    /// i j k          (m lines, 0-based, counterclockwise)
    /// T <label> <mx> <my>   (optional, labels the edge with that midpoint)
    /// ```
    pub fn parse(text: &str, origin: &Path) -> Result<Self> {
        let err = |line: usize, message: String| Error::Parse {
            path: origin.to_path_buf(),
            line,
            message,
        };
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(n, l)| (n + 1, l.split('#').next().unwrap_or("").trim()))
            .filter(|(_, l)| !l.is_empty());
        let mut vertices = Vec::new();
        let mut cells = Vec::new();
        let mut tags: Vec<(usize, String, Point)> = Vec::new();
        while let Some((ln, line)) = lines.next() {
            let mut tok = line.split_whitespace();
            match tok.next() {
                Some("V") => {
                    let n: usize = tok
                        .next()
                        .and_then(|s| s.parse().ok())
                        .ok_or_else(|| err(ln, "expected `V <count>`".into()))?;
                    for _ in 0..n {
                        let (ln, l) = lines
                            .next()
                            .ok_or_else(|| err(ln, "file ends inside vertex block".into()))?;
                        let v: Vec<f64> = l
                            .split_whitespace()
                            .map(|s| s.parse::<f64>())
                            .collect::<std::result::Result<_, _>>()
                            .map_err(|e| err(ln, format!("bad vertex: {e}")))?;
                        if v.len() != 2 {
                            return Err(err(ln, "vertex needs exactly two coordinates".into()));
                        }
                        vertices.push([v[0], v[1]]);
                    }
                }
                Some("C") => {
                    let m: usize = tok
                        .next()
                        .and_then(|s| s.parse().ok())
                        .ok_or_else(|| err(ln, "expected `C <count>`".into()))?;
                    for _ in 0..m {
                        let (ln, l) = lines
                            .next()
                            .ok_or_else(|| err(ln, "file ends inside cell block".into()))?;
                        let c: Vec<usize> = l
                            .split_whitespace()
                            .map(|s| s.parse::<usize>())
                            .collect::<std::result::Result<_, _>>()
                            .map_err(|e| err(ln, format!("bad cell: {e}")))?;
                        if c.len() != 3 {
                            return Err(err(ln, "cell needs exactly three vertex indices".into()));
                        }
                        cells.push([c[0], c[1], c[2]]);
                    }
                }
                Some("T") => {
                    let label = tok
                        .next()
                        .ok_or_else(|| err(ln, "expected `T <label> <x> <y>`".into()))?
                        .to_string();
                    let xy: Vec<f64> = tok
                        .map(|s| s.parse::<f64>())
                        .collect::<std::result::Result<_, _>>()
                        .map_err(|e| err(ln, format!("bad tag midpoint: {e}")))?;
                    if xy.len() != 2 {
                        return Err(err(ln, "tag needs a label and two coordinates".into()));
                    }
                    tags.push((ln, label, [xy[0], xy[1]]));
                }
                Some(other) => return Err(err(ln, format!("unknown record `{other}`"))),
                None => {}
            }
        }
        let mut mesh = Mesh::from_cells(vertices, cells)?;
        let scale = mesh.bounding_box_diagonal();
        for (ln, label, p) in tags {
            let hit = mesh
                .edges
                .iter()
                .position(|e| norm(sub(e.midpoint, p)) <= 1e-9 * scale)
                .ok_or_else(|| err(ln, format!("no edge has midpoint ({}, {})", p[0], p[1])))?;
            mesh.labels[hit] = Some(label);
        }
        Ok(mesh)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Mesh::parse(&text, path)
    }

    /// Serializes to the text format (labels included).
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "V {}", self.vertices.len());
        for v in &self.vertices {
            let _ = writeln!(out, "{} {}", v[0], v[1]);
        }
        let _ = writeln!(out, "C {}", self.cells.len());
        for c in &self.cells {
            let _ = writeln!(out, "{} {} {}", c[0], c[1], c[2]);
        }
        for (e, label) in self.labels.iter().enumerate() {
            if let Some(label) = label {
                let m = self.edges[e].midpoint;
                let _ = writeln!(out, "T {label} {} {}", m[0], m[1]);
            }
        }
        out
    }

    /// Attaches a boundary condition to every boundary edge. Each boundary
    /// edge must match exactly one rule.
    pub fn tag_boundary(mut self, rules: &[(EdgePredicate, BoundaryCondition)]) -> Result<Self> {
        let mut conditions = vec![None; self.edges.len()];
        for (e, edge) in self.edges.iter().enumerate() {
            if !edge.is_boundary() {
                continue;
            }
            let view = BoundaryEdge {
                index: e,
                midpoint: edge.midpoint,
                normal: edge.normal,
                length: edge.length,
                label: self.labels[e].as_deref(),
            };
            let mut hits = rules.iter().filter(|(pred, _)| pred(&view));
            let [mx, my] = edge.midpoint;
            let (_, bc) = hits.next().ok_or_else(|| {
                Error::config(format!("boundary edge at ({mx}, {my}) is not covered by any rule"))
            })?;
            if hits.next().is_some() {
                return Err(Error::config(format!(
                    "boundary edge at ({mx}, {my}) is covered by more than one rule"
                )));
            }
            if let BoundaryCondition::Neumann { s_w, .. } = bc {
                if bc.is_inflow() && s_w.is_none() {
                    return Err(Error::config(format!(
                        "inflow edge at ({mx}, {my}) has no boundary saturation"
                    )));
                }
            }
            conditions[e] = Some(bc.clone());
        }
        self.conditions = conditions;
        Ok(self)
    }

    /// Per-edge boundary condition; `None` on interior edges (and on boundary
    /// edges of an untagged mesh).
    pub fn condition(&self, edge: usize) -> Option<&BoundaryCondition> {
        self.conditions[edge].as_ref()
    }

    pub fn conditions(&self) -> &[Option<BoundaryCondition>] {
        &self.conditions
    }

    pub fn is_tagged(&self) -> bool {
        self.edges
            .iter()
            .zip(&self.conditions)
            .all(|(e, c)| !e.is_boundary() || c.is_some())
    }

    pub fn has_dirichlet(&self) -> bool {
        self.conditions.iter().flatten().any(BoundaryCondition::is_dirichlet)
    }

    pub fn label(&self, edge: usize) -> Option<&str> {
        self.labels[edge].as_deref()
    }

    pub fn set_label(&mut self, edge: usize, label: impl Into<String>) {
        self.labels[edge] = Some(label.into());
    }

    pub fn n_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn cells(&self) -> &[[usize; 3]] {
        &self.cells
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, e: usize) -> &Edge {
        &self.edges[e]
    }

    pub fn cell_edges(&self, k: usize) -> [usize; 3] {
        self.cell_edges[k]
    }

    pub fn cell_signs(&self, k: usize) -> [f64; 3] {
        self.cell_signs[k]
    }

    pub fn cell_vertices(&self, k: usize) -> [Point; 3] {
        self.cells[k].map(|v| self.vertices[v])
    }

    pub fn area(&self, k: usize) -> f64 {
        self.cell_area[k]
    }

    pub fn areas(&self) -> &[f64] {
        &self.cell_area
    }

    pub fn centroid(&self, k: usize) -> Point {
        self.centroid[k]
    }

    /// Longest edge of cell `k`.
    pub fn diameter(&self, k: usize) -> f64 {
        self.diameter[k]
    }

    /// `h = min_K h_K`.
    pub fn min_diameter(&self) -> f64 {
        self.diameter.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn boundary_edges(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.edges.len()).filter(|&e| self.edges[e].is_boundary())
    }

    pub fn interior_edges(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.edges.len()).filter(|&e| !self.edges[e].is_boundary())
    }

    /// `Σ σ_i |F_i| n^F_i` over the edges of cell `k`; zero for a closed triangle.
    pub fn closure_defect(&self, k: usize) -> Point {
        let mut s = [0.0, 0.0];
        for i in 0..3 {
            let e = &self.edges[self.cell_edges[k][i]];
            let w = self.cell_signs[k][i] * e.length;
            s[0] += w * e.normal[0];
            s[1] += w * e.normal[1];
        }
        s
    }

    pub fn bounding_box(&self) -> (Point, Point) {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for v in &self.vertices {
            for d in 0..2 {
                lo[d] = lo[d].min(v[d]);
                hi[d] = hi[d].max(v[d]);
            }
        }
        (lo, hi)
    }

    fn bounding_box_diagonal(&self) -> f64 {
        let (lo, hi) = self.bounding_box();
        norm(sub(hi, lo))
    }

    /// Cell containing `p` (closed triangles, first match).
    pub fn locate(&self, p: Point) -> Option<usize> {
        (0..self.cells.len()).find(|&k| {
            let [a, b, c] = self.cell_vertices(k);
            let tol = -1e-12 * self.cell_area[k];
            let cross = |u: Point, v: Point, w: Point| {
                0.5 * ((v[0] - u[0]) * (w[1] - u[1]) - (w[0] - u[0]) * (v[1] - u[1]))
            };
            cross(a, b, p) >= tol && cross(b, c, p) >= tol && cross(c, a, p) >= tol
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_square_split() {
        let m = Mesh::structured(1, 1, 1.0, 1.0).unwrap();
        assert_eq!(m.n_cells(), 2);
        assert_eq!(m.n_edges(), 5);
        assert_eq!(m.n_vertices(), 4);
        assert!(m.areas().iter().all(|&a| (a - 0.5).abs() < 1e-15));
    }

    #[test]
    fn full_scale_mesh_has_5000_cells() {
        let m = Mesh::structured(50, 50, 300.0, 150.0).unwrap();
        assert_eq!(m.n_cells(), 5000);
        for k in 0..m.n_cells() {
            assert!((m.area(k) - 9.0).abs() < 1e-10);
        }
    }

    #[test]
    fn two_by_one_interior_edges() {
        // 4 triangles: two diagonals plus the shared vertical edge
        let m = Mesh::structured(2, 1, 2.0, 1.0).unwrap();
        let interior: Vec<_> = m.interior_edges().collect();
        assert_eq!(interior.len(), 3);
        for e in interior {
            let (ki, kj) = m.edge(e).cells;
            let kj = kj.unwrap();
            assert!(ki < kj);
            let si = m.cell_signs(ki)[m.cell_edges(ki).iter().position(|&x| x == e).unwrap()];
            let sj = m.cell_signs(kj)[m.cell_edges(kj).iter().position(|&x| x == e).unwrap()];
            assert_eq!(si, -sj);
            assert_eq!(si, 1.0);
        }
    }

    #[test]
    fn unit_right_triangle_geometry() {
        let m = Mesh::from_cells(vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]], vec![[0, 1, 2]]).unwrap();
        assert_eq!(m.area(0), 0.5);
        // local edge 0 is opposite vertex 0: the hypotenuse
        let hyp = m.edge(m.cell_edges(0)[0]);
        assert!((hyp.length - 2f64.sqrt()).abs() < 1e-15);
        assert!((m.diameter(0) - 2f64.sqrt()).abs() < 1e-15);
        let d = m.closure_defect(0);
        assert!(d[0].abs() < 1e-13 && d[1].abs() < 1e-13);
    }

    #[test]
    fn degenerate_and_bad_dimensions_rejected() {
        assert!(Mesh::from_cells(vec![[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]], vec![[0, 1, 2]]).is_err());
        assert!(Mesh::from_cells(vec![[0.0, 0.0], [0.0, 1.0], [1.0, 0.0]], vec![[0, 1, 2]]).is_err());
        assert!(Mesh::structured(0, 3, 1.0, 1.0).is_err());
        assert!(Mesh::structured(2, 3, -1.0, 1.0).is_err());
        assert!(Mesh::structured(2, 3, 1.0, 0.0).is_err());
    }

    #[test]
    fn outward_signs_match_cell_normals() {
        let m = Mesh::structured(3, 2, 3.0, 2.0).unwrap();
        for k in 0..m.n_cells() {
            let c = m.centroid(k);
            for i in 0..3 {
                let e = m.edge(m.cell_edges(k)[i]);
                let out = sub(e.midpoint, c);
                let dot = m.cell_signs(k)[i] * (e.normal[0] * out[0] + e.normal[1] * out[1]);
                assert!(dot > 0.0);
            }
        }
        for e in m.boundary_edges() {
            let edge = m.edge(e);
            let out = sub(edge.midpoint, m.centroid(edge.cells.0));
            assert!(edge.normal[0] * out[0] + edge.normal[1] * out[1] > 0.0);
        }
    }

    #[test]
    fn tagging_covers_boundary_exactly_once() {
        let m = Mesh::structured(2, 2, 2.0, 2.0).unwrap();
        let all: EdgePredicate = Box::new(|_| true);
        let tagged = m.clone().tag_boundary(&[(all, BoundaryCondition::no_flow())]).unwrap();
        assert!(tagged.is_tagged());
        for e in tagged.interior_edges() {
            assert!(tagged.condition(e).is_none());
        }
        assert!(m.clone().tag_boundary(&[]).is_err());

        let left: EdgePredicate = Box::new(|b| b.midpoint[0] == 0.0);
        let all: EdgePredicate = Box::new(|_| true);
        let err = m.clone().tag_boundary(&[(left, BoundaryCondition::no_flow()), (all, BoundaryCondition::no_flow())]);
        assert!(matches!(err, Err(Error::Config(msg)) if msg.contains("more than one")));

        let left: EdgePredicate = Box::new(|b| b.midpoint[0] == 0.0);
        let inflow = BoundaryCondition::Neumann { flux_w: -1.0, flux_n: 0.0, s_w: None };
        let rest: EdgePredicate = Box::new(|b| b.midpoint[0] != 0.0);
        assert!(m.tag_boundary(&[(left, inflow), (rest, BoundaryCondition::no_flow())]).is_err());
    }

    #[test]
    fn text_round_trip_keeps_labels() {
        let mut m = Mesh::structured(2, 1, 2.0, 1.0).unwrap();
        let e = m.boundary_edges().next().unwrap();
        m.set_label(e, "inlet");
        let back = Mesh::parse(&m.to_text(), Path::new("mem")).unwrap();
        assert_eq!(back.n_cells(), m.n_cells());
        assert_eq!(back.n_edges(), m.n_edges());
        assert_eq!(back.label(e), Some("inlet"));
    }

    #[test]
    fn parse_reports_line_numbers() {
        let bad = "V 3\n0 0\n1 0\n0 1\nC 1\n0 1 9\n";
        assert!(Mesh::parse(bad, Path::new("x")).is_err());
        let bad = "# header\nV 1\n0 zero\n";
        match Mesh::parse(bad, Path::new("x")) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }
}
