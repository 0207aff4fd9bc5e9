//! Scenario files: TOML with unit-tagged quantities, normalized to SI.
//!
//! Quantities are written either as a bare number (taken as SI) or as a
//! string `"<number> <unit>"`, e.g. `"0.3 cP"`, `"100 bar"`, `"0.63 m3/day"`.
//! Relative input paths (mesh, raster, initial saturation) are resolved
//! against the scenario file's directory; the output directory is used as
//! written.
//!
//! ```toml
//! name = "strip"
//!
//! [mesh]                 # or: file = "mesh.txt"
//! nx = 30
//! ny = 15
//! lx = "300 m"
//! ly = "150 m"
//!
//! [fluids]
//! rho_w = "1000 kg/m3"
//! rho_n = "800 kg/m3"
//! mu_w = "1 cP"
//! mu_n = "0.3 cP"
//! gravity = "9.81 m/s2"  # default 0
//! grad_z = [0.0, -1.0]   # default
//!
//! [rock]
//! porosity = 0.2         # default
//! permeability = "50 md" # background value
//! bc = "60 bar*md^1/2"   # default 0
//! beta = 2               # default; s_rw, s_rn default 1e-6, eps_s 1e-3
//! [[rock.regions]]       # later regions win; cells are picked by centroid
//! box = [0, 50, 300, 100]
//! permeability = "1 md"
//! # [rock.raster] path = "k.txt", nx = 60, ny = 60, mapping = "log10", unit = "1 md"
//!
//! [initial]              # or: file = "s0.txt" (one value per cell)
//! s_w = 1e-6
//! [[initial.regions]]
//! box = [0, 0, 10, 150]
//! s_w = 0.999999
//!
//! [[boundary]]           # selector: side (+ optional range), box, label or rest
//! side = "left"
//! type = "neumann"       # neumann | dirichlet | no_flow
//! rate = "0.63 m3/day"   # injected volume rate over the selected edges
//! s_w = 1.0
//! [[boundary]]
//! side = "right"
//! type = "dirichlet"
//! p_w = "100 bar"        # p_n optional, s_w optional
//! [[boundary]]
//! rest = true
//! type = "no_flow"
//!
//! [[source]]             # optional injection over the cells in a box
//! box = [0, 0, 10, 10]
//! rate = "0.1 m3/day"
//! s_w = 1.0
//!
//! [scheme]
//! kind = "pimpes"        # pimpes | hfimpes | stdimpes
//! dt = "0.1 day"         # or: cfl = 0.3, dt_max = "1 day", dt_min = "1 s"
//! steps = 100            # and/or end_time = "10 day"
//! bounds_policy = "record"
//! p_ref = "0 Pa"
//! upwind_iterations = 0  # extra solves that make the upwind traces consistent
//!
//! [output]
//! dir = "out"
//! vtk_every = 10         # 0 disables snapshots
//! checkpoint_every = 0
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::{BoundaryCondition, BoundaryEdge, EdgePredicate, Mesh, Point};
use crate::physics::{CapillaryOrientation, FluidPair, RockModel};
use crate::schemes::{BoundsPolicy, Model, SchemeConfig, SchemeKind, TimeStepping};
use crate::units::{format_si, parse_quantity, Dimension};

/// Axis-aligned box `[x0, y0, x1, y1]`, m.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rect {
    pub min: Point,
    pub max: Point,
}

impl Rect {
    pub fn contains(&self, p: Point, tol: f64) -> bool {
        p[0] >= self.min[0] - tol && p[0] <= self.max[0] + tol && p[1] >= self.min[1] - tol && p[1] <= self.max[1] + tol
    }

    fn from_array(b: [f64; 4], key: &str) -> Result<Self> {
        if !(b.iter().all(|v| v.is_finite()) && b[0] <= b[2] && b[1] <= b[3]) {
            return Err(Error::config(format!("{key}: box must be [x0, y0, x1, y1] with x0 <= x1, y0 <= y1")));
        }
        Ok(Rect { min: [b[0], b[1]], max: [b[2], b[3]] })
    }

    fn to_array(self) -> [f64; 4] {
        [self.min[0], self.min[1], self.max[0], self.max[1]]
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum MeshSpec {
    Structured { nx: usize, ny: usize, lx: f64, ly: f64 },
    File(PathBuf),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RasterMapping {
    Linear,
    Log10,
}

impl RasterMapping {
    fn parse(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(RasterMapping::Linear),
            "log10" => Ok(RasterMapping::Log10),
            _ => Err(Error::config(format!("rock.raster.mapping: expected linear or log10, got `{s}`"))),
        }
    }

    fn name(self) -> &'static str {
        match self {
            RasterMapping::Linear => "linear",
            RasterMapping::Log10 => "log10",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum PermeabilitySpec {
    /// Background value overridden by boxes (later boxes win), m².
    Field { background: f64, regions: Vec<(Rect, f64)> },
    /// Row-major raster over the mesh bounding box, first row at the lowest `y`.
    /// `unit` is the SI value of one raster unit.
    Raster { path: PathBuf, nx: usize, ny: usize, mapping: RasterMapping, unit: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct RockSpec {
    pub porosity: f64,
    pub permeability: PermeabilitySpec,
    pub beta: i32,
    pub bc: f64,
    pub s_rw: f64,
    pub s_rn: f64,
    pub eps_s: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub enum InitialSpec {
    Field { background: f64, regions: Vec<(Rect, f64)> },
    File(PathBuf),
}

#[derive(Clone, Debug, PartialEq)]
pub enum Selector {
    /// Edges on one side of the bounding box, optionally with the midpoint's
    /// coordinate along that side in `range`.
    Side { side: Side, range: Option<(f64, f64)> },
    Box(Rect),
    Label(String),
    /// Every boundary edge no other rule selects.
    Rest,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
    Bottom,
    Top,
}

impl Side {
    fn parse(s: &str) -> Result<Self> {
        match s {
            "left" => Ok(Side::Left),
            "right" => Ok(Side::Right),
            "bottom" => Ok(Side::Bottom),
            "top" => Ok(Side::Top),
            _ => Err(Error::config(format!("boundary.side: expected left, right, bottom or top, got `{s}`"))),
        }
    }

    fn name(self) -> &'static str {
        match self {
            Side::Left => "left",
            Side::Right => "right",
            Side::Bottom => "bottom",
            Side::Top => "top",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum BoundaryKind {
    /// `rate` is the injected volume rate per unit thickness (m²/s), spread
    /// uniformly over the selected edges; negative values produce.
    Neumann { rate: f64, s_w: Option<f64> },
    Dirichlet { p_w: f64, p_n: Option<f64>, s_w: Option<f64> },
    NoFlow,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoundarySpec {
    pub selector: Selector,
    pub kind: BoundaryKind,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SourceSpec {
    pub region: Rect,
    /// Injected volume rate per unit thickness, m²/s.
    pub rate: f64,
    pub s_w: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OutputSpec {
    pub dir: Option<PathBuf>,
    pub vtk_every: usize,
    pub checkpoint_every: usize,
}

/// Fully normalized scenario (SI units, absolute input paths).
#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub description: String,
    pub mesh: MeshSpec,
    pub fluids: FluidPair,
    pub rock: RockSpec,
    pub initial: InitialSpec,
    pub boundary: Vec<BoundarySpec>,
    pub sources: Vec<SourceSpec>,
    pub scheme: SchemeConfig,
    pub output: OutputSpec,
}

/// A built model together with its initial wetting saturation.
#[derive(Clone, Debug)]
pub struct Setup {
    pub model: Model,
    pub s_w0: Vec<f64>,
}

// ---- raw file layout ----

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(untagged)]
enum Quantity {
    Number(f64),
    Text(String),
}

impl Quantity {
    fn get(&self, key: &str, dim: Dimension) -> Result<f64> {
        let v = match self {
            Quantity::Number(v) => *v,
            Quantity::Text(t) => parse_quantity(t, dim).map_err(|e| Error::config(format!("{key}: {}", strip(e))))?,
        };
        if !v.is_finite() {
            return Err(Error::config(format!("{key}: value must be finite")));
        }
        Ok(v)
    }

    fn si(v: f64, dim: Dimension) -> Self {
        Quantity::Text(format_si(v, dim))
    }
}

fn strip(e: Error) -> String {
    match e {
        Error::Config(m) => m,
        other => other.to_string(),
    }
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    name: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    description: String,
    mesh: RawMesh,
    fluids: RawFluids,
    rock: RawRock,
    initial: RawInitial,
    boundary: Vec<RawBoundary>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    source: Vec<RawSource>,
    scheme: RawScheme,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    output: Option<RawOutput>,
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct RawMesh {
    #[serde(skip_serializing_if = "Option::is_none")]
    file: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    nx: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    ny: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    lx: Option<Quantity>,
    #[serde(skip_serializing_if = "Option::is_none")]
    ly: Option<Quantity>,
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct RawFluids {
    rho_w: Quantity,
    rho_n: Quantity,
    mu_w: Quantity,
    mu_n: Quantity,
    #[serde(skip_serializing_if = "Option::is_none")]
    gravity: Option<Quantity>,
    #[serde(skip_serializing_if = "Option::is_none")]
    grad_z: Option<[f64; 2]>,
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct RawRock {
    #[serde(skip_serializing_if = "Option::is_none")]
    porosity: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    permeability: Option<Quantity>,
    #[serde(skip_serializing_if = "Option::is_none")]
    beta: Option<i32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    bc: Option<Quantity>,
    #[serde(skip_serializing_if = "Option::is_none")]
    s_rw: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    s_rn: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    eps_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    regions: Vec<RawPermRegion>,
    #[serde(skip_serializing_if = "Option::is_none")]
    raster: Option<RawRaster>,
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct RawPermRegion {
    #[serde(rename = "box")]
    region: [f64; 4],
    permeability: Quantity,
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct RawRaster {
    path: String,
    nx: usize,
    ny: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    mapping: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    unit: Option<Quantity>,
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct RawInitial {
    #[serde(skip_serializing_if = "Option::is_none")]
    s_w: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    file: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    regions: Vec<RawSatRegion>,
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct RawSatRegion {
    #[serde(rename = "box")]
    region: [f64; 4],
    s_w: f64,
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct RawBoundary {
    #[serde(skip_serializing_if = "Option::is_none")]
    side: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    range: Option<[f64; 2]>,
    #[serde(rename = "box", skip_serializing_if = "Option::is_none")]
    region: Option<[f64; 4]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    label: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    rest: Option<bool>,
    #[serde(rename = "type")]
    kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    rate: Option<Quantity>,
    #[serde(skip_serializing_if = "Option::is_none")]
    p_w: Option<Quantity>,
    #[serde(skip_serializing_if = "Option::is_none")]
    p_n: Option<Quantity>,
    #[serde(skip_serializing_if = "Option::is_none")]
    s_w: Option<f64>,
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct RawSource {
    #[serde(rename = "box")]
    region: [f64; 4],
    rate: Quantity,
    s_w: f64,
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct RawScheme {
    kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    dt: Option<Quantity>,
    #[serde(skip_serializing_if = "Option::is_none")]
    cfl: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    dt_min: Option<Quantity>,
    #[serde(skip_serializing_if = "Option::is_none")]
    dt_max: Option<Quantity>,
    #[serde(skip_serializing_if = "Option::is_none")]
    steps: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    end_time: Option<Quantity>,
    #[serde(skip_serializing_if = "Option::is_none")]
    bounds_policy: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    p_ref: Option<Quantity>,
    #[serde(skip_serializing_if = "Option::is_none")]
    upwind_iterations: Option<usize>,
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    #[serde(skip_serializing_if = "Option::is_none")]
    dir: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    vtk_every: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    checkpoint_every: Option<usize>,
}

fn resolve(base: &Path, p: &str) -> PathBuf {
    let p = Path::new(p);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

fn fraction(v: f64, key: &str) -> Result<f64> {
    if !(0.0..=1.0).contains(&v) {
        return Err(Error::config(format!("{key}: saturation must lie in [0, 1], got {v}")));
    }
    Ok(v)
}

impl Scenario {
    /// Parses scenario text; relative input paths resolve against `base_dir`.
    pub fn parse(text: &str, base_dir: &Path) -> Result<Self> {
        let raw: RawScenario = toml::from_str(text).map_err(|e| Error::config(e.message().to_string()))?;
        Scenario::from_raw(raw, base_dir)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::config(format!("cannot read {}: {e}", path.display())))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        let base = if base.as_os_str().is_empty() { PathBuf::from(".") } else { base };
        Scenario::parse(&text, &base)
    }

    fn from_raw(raw: RawScenario, base: &Path) -> Result<Self> {
        let length = |q: &Quantity, key: &str| q.get(key, Dimension::Length);

        let mesh = match (&raw.mesh.file, raw.mesh.nx, raw.mesh.ny, &raw.mesh.lx, &raw.mesh.ly) {
            (Some(f), None, None, None, None) => MeshSpec::File(resolve(base, f)),
            (None, Some(nx), Some(ny), Some(lx), Some(ly)) => {
                let (lx, ly) = (length(lx, "mesh.lx")?, length(ly, "mesh.ly")?);
                if nx == 0 || ny == 0 || !(lx > 0.0) || !(ly > 0.0) {
                    return Err(Error::config("mesh: nx, ny, lx and ly must be positive"));
                }
                MeshSpec::Structured { nx, ny, lx, ly }
            }
            _ => return Err(Error::config("mesh: give either `file` or all of `nx`, `ny`, `lx`, `ly`")),
        };

        let f = &raw.fluids;
        let fluids = FluidPair {
            rho_w: f.rho_w.get("fluids.rho_w", Dimension::Density)?,
            rho_n: f.rho_n.get("fluids.rho_n", Dimension::Density)?,
            mu_w: f.mu_w.get("fluids.mu_w", Dimension::Viscosity)?,
            mu_n: f.mu_n.get("fluids.mu_n", Dimension::Viscosity)?,
            gravity: match &f.gravity {
                Some(q) => q.get("fluids.gravity", Dimension::Acceleration)?,
                None => 0.0,
            },
            grad_z: f.grad_z.unwrap_or([0.0, -1.0]),
        };
        for (key, v) in [("fluids.mu_w", fluids.mu_w), ("fluids.mu_n", fluids.mu_n)] {
            if !(v > 0.0) {
                return Err(Error::config(format!("{key}: viscosity μ must be positive, got {v}")));
            }
        }
        fluids.validate()?;

        let r = &raw.rock;
        let permeability = match (&r.raster, &r.permeability) {
            (Some(ra), None) if r.regions.is_empty() => PermeabilitySpec::Raster {
                path: resolve(base, &ra.path),
                nx: ra.nx,
                ny: ra.ny,
                mapping: RasterMapping::parse(ra.mapping.as_deref().unwrap_or("linear"))?,
                unit: match &ra.unit {
                    Some(q) => q.get("rock.raster.unit", Dimension::Permeability)?,
                    None => crate::units::MILLIDARCY,
                },
            },
            (None, Some(k)) => {
                let background = k.get("rock.permeability", Dimension::Permeability)?;
                let regions = r
                    .regions
                    .iter()
                    .map(|reg| {
                        Ok((
                            Rect::from_array(reg.region, "rock.regions")?,
                            reg.permeability.get("rock.regions.permeability", Dimension::Permeability)?,
                        ))
                    })
                    .collect::<Result<Vec<_>>>()?;
                PermeabilitySpec::Field { background, regions }
            }
            _ => return Err(Error::config("rock: give either `permeability` (with optional `regions`) or `raster`")),
        };
        let rock = RockSpec {
            porosity: r.porosity.unwrap_or(0.2),
            permeability,
            beta: r.beta.unwrap_or(2),
            bc: match &r.bc {
                Some(q) => q.get("rock.bc", Dimension::CapillaryStrength)?,
                None => 0.0,
            },
            s_rw: r.s_rw.unwrap_or(1e-6),
            s_rn: r.s_rn.unwrap_or(1e-6),
            eps_s: r.eps_s.unwrap_or(1e-3),
        };
        rock.to_model(1, &[1.0]).validate(1).map_err(|e| Error::config(format!("rock: {}", strip(e))))?;

        let i = &raw.initial;
        let initial = match (&i.file, i.s_w) {
            (Some(f), None) if i.regions.is_empty() => InitialSpec::File(resolve(base, f)),
            (None, Some(s)) => InitialSpec::Field {
                background: fraction(s, "initial.s_w")?,
                regions: i
                    .regions
                    .iter()
                    .map(|reg| Ok((Rect::from_array(reg.region, "initial.regions")?, fraction(reg.s_w, "initial.regions.s_w")?)))
                    .collect::<Result<Vec<_>>>()?,
            },
            _ => return Err(Error::config("initial: give either `s_w` (with optional `regions`) or `file`")),
        };

        let mut boundary = Vec::new();
        for (n, b) in raw.boundary.iter().enumerate() {
            let key = format!("boundary[{n}]");
            let selector = match (&b.side, &b.region, &b.label, b.rest) {
                (Some(side), None, None, None) => Selector::Side {
                    side: Side::parse(side)?,
                    range: match b.range {
                        Some([lo, hi]) if lo <= hi => Some((lo, hi)),
                        Some(_) => return Err(Error::config(format!("{key}.range: need lo <= hi"))),
                        None => None,
                    },
                },
                (None, Some(r), None, None) => Selector::Box(Rect::from_array(*r, &key)?),
                (None, None, Some(l), None) => Selector::Label(l.clone()),
                (None, None, None, Some(true)) => Selector::Rest,
                _ => return Err(Error::config(format!("{key}: give exactly one of `side`, `box`, `label`, `rest = true`"))),
            };
            if b.range.is_some() && !matches!(selector, Selector::Side { .. }) {
                return Err(Error::config(format!("{key}.range: only valid with `side`")));
            }
            let s_w = b.s_w.map(|s| fraction(s, &format!("{key}.s_w"))).transpose()?;
            let kind = match b.kind.as_str() {
                "neumann" => {
                    if b.p_w.is_some() || b.p_n.is_some() {
                        return Err(Error::config(format!("{key}: pressures are not allowed on a neumann boundary")));
                    }
                    let rate = b
                        .rate
                        .as_ref()
                        .ok_or_else(|| Error::config(format!("{key}.rate: required for type = neumann")))?
                        .get(&format!("{key}.rate"), Dimension::VolumeRate)?;
                    if rate > 0.0 && s_w.is_none() {
                        return Err(Error::config(format!("{key}.s_w: required for an injecting boundary")));
                    }
                    BoundaryKind::Neumann { rate, s_w }
                }
                "dirichlet" => {
                    if b.rate.is_some() {
                        return Err(Error::config(format!("{key}.rate: not allowed on a dirichlet boundary")));
                    }
                    let p = |q: &Option<Quantity>, name: &str| q.as_ref().map(|q| q.get(&format!("{key}.{name}"), Dimension::Pressure)).transpose();
                    BoundaryKind::Dirichlet {
                        p_w: p(&b.p_w, "p_w")?.ok_or_else(|| Error::config(format!("{key}.p_w: required for type = dirichlet")))?,
                        p_n: p(&b.p_n, "p_n")?,
                        s_w,
                    }
                }
                "no_flow" => {
                    if b.rate.is_some() || b.p_w.is_some() || b.p_n.is_some() || b.s_w.is_some() {
                        return Err(Error::config(format!("{key}: no_flow takes no data")));
                    }
                    BoundaryKind::NoFlow
                }
                other => return Err(Error::config(format!("{key}.type: expected neumann, dirichlet or no_flow, got `{other}`"))),
            };
            boundary.push(BoundarySpec { selector, kind });
        }
        if boundary.iter().filter(|b| b.selector == Selector::Rest).count() > 1 {
            return Err(Error::config("boundary: at most one rule may use `rest`"));
        }

        let sources = raw
            .source
            .iter()
            .enumerate()
            .map(|(n, s)| {
                let key = format!("source[{n}]");
                let rate = s.rate.get(&format!("{key}.rate"), Dimension::VolumeRate)?;
                if !(rate >= 0.0) {
                    return Err(Error::config(format!("{key}.rate: sources inject; use a dirichlet boundary to produce")));
                }
                Ok(SourceSpec {
                    region: Rect::from_array(s.region, &key)?,
                    rate,
                    s_w: fraction(s.s_w, &format!("{key}.s_w"))?,
                })
            })
            .collect::<Result<Vec<_>>>()?;

        let s = &raw.scheme;
        let time = |q: &Option<Quantity>, key: &str| q.as_ref().map(|q| q.get(key, Dimension::Time)).transpose();
        let stepping = match (time(&s.dt, "scheme.dt")?, s.cfl) {
            (Some(dt), None) => {
                if s.dt_min.is_some() || s.dt_max.is_some() {
                    return Err(Error::config("scheme: dt_min/dt_max only apply with `cfl`"));
                }
                TimeStepping::Fixed(dt)
            }
            (None, Some(cfl)) => TimeStepping::Adaptive {
                cfl,
                dt_min: time(&s.dt_min, "scheme.dt_min")?.unwrap_or(1.0),
                dt_max: time(&s.dt_max, "scheme.dt_max")?
                    .ok_or_else(|| Error::config("scheme.dt_max: required with `cfl`"))?,
            },
            _ => return Err(Error::config("scheme: give exactly one of `dt` or `cfl`")),
        };
        let scheme = SchemeConfig {
            kind: s.kind.parse()?,
            stepping,
            max_steps: s.steps,
            end_time: time(&s.end_time, "scheme.end_time")?,
            bounds_policy: match &s.bounds_policy {
                Some(p) => p.parse()?,
                None => BoundsPolicy::Record,
            },
            p_ref: match &s.p_ref {
                Some(q) => q.get("scheme.p_ref", Dimension::Pressure)?,
                None => 0.0,
            },
            upwind_iterations: s.upwind_iterations.unwrap_or(0),
        };
        scheme.validate().map_err(|e| Error::config(format!("scheme: {}", strip(e))))?;

        let output = match &raw.output {
            Some(o) => OutputSpec {
                dir: o.dir.as_ref().map(PathBuf::from),
                vtk_every: o.vtk_every.unwrap_or(0),
                checkpoint_every: o.checkpoint_every.unwrap_or(0),
            },
            None => OutputSpec { dir: None, vtk_every: 0, checkpoint_every: 0 },
        };

        Ok(Scenario {
            name: raw.name,
            description: raw.description,
            mesh,
            fluids,
            rock,
            initial,
            boundary,
            sources,
            scheme,
            output,
        })
    }

    /// Normalized TOML: every quantity in SI with its unit and shortest
    /// round-trip digits, every input path absolute as resolved.
    pub fn to_toml(&self) -> String {
        let q = Quantity::si;
        let path = |p: &Path| p.to_string_lossy().into_owned();
        let mesh = match &self.mesh {
            MeshSpec::Structured { nx, ny, lx, ly } => RawMesh {
                file: None,
                nx: Some(*nx),
                ny: Some(*ny),
                lx: Some(q(*lx, Dimension::Length)),
                ly: Some(q(*ly, Dimension::Length)),
            },
            MeshSpec::File(p) => RawMesh { file: Some(path(p)), nx: None, ny: None, lx: None, ly: None },
        };
        let f = &self.fluids;
        let fluids = RawFluids {
            rho_w: q(f.rho_w, Dimension::Density),
            rho_n: q(f.rho_n, Dimension::Density),
            mu_w: q(f.mu_w, Dimension::Viscosity),
            mu_n: q(f.mu_n, Dimension::Viscosity),
            gravity: Some(q(f.gravity, Dimension::Acceleration)),
            grad_z: Some(f.grad_z),
        };
        let r = &self.rock;
        let (permeability, regions, raster) = match &r.permeability {
            PermeabilitySpec::Field { background, regions } => (
                Some(q(*background, Dimension::Permeability)),
                regions
                    .iter()
                    .map(|(b, k)| RawPermRegion { region: b.to_array(), permeability: q(*k, Dimension::Permeability) })
                    .collect(),
                None,
            ),
            PermeabilitySpec::Raster { path: p, nx, ny, mapping, unit } => (
                None,
                Vec::new(),
                Some(RawRaster {
                    path: path(p),
                    nx: *nx,
                    ny: *ny,
                    mapping: Some(mapping.name().to_string()),
                    unit: Some(q(*unit, Dimension::Permeability)),
                }),
            ),
        };
        let rock = RawRock {
            porosity: Some(r.porosity),
            permeability,
            beta: Some(r.beta),
            bc: Some(q(r.bc, Dimension::CapillaryStrength)),
            s_rw: Some(r.s_rw),
            s_rn: Some(r.s_rn),
            eps_s: Some(r.eps_s),
            regions,
            raster,
        };
        let initial = match &self.initial {
            InitialSpec::Field { background, regions } => RawInitial {
                s_w: Some(*background),
                file: None,
                regions: regions.iter().map(|(b, s)| RawSatRegion { region: b.to_array(), s_w: *s }).collect(),
            },
            InitialSpec::File(p) => RawInitial { s_w: None, file: Some(path(p)), regions: Vec::new() },
        };
        let boundary = self
            .boundary
            .iter()
            .map(|b| {
                let mut raw = RawBoundary {
                    side: None,
                    range: None,
                    region: None,
                    label: None,
                    rest: None,
                    kind: String::new(),
                    rate: None,
                    p_w: None,
                    p_n: None,
                    s_w: None,
                };
                match &b.selector {
                    Selector::Side { side, range } => {
                        raw.side = Some(side.name().to_string());
                        raw.range = range.map(|(a, b)| [a, b]);
                    }
                    Selector::Box(r) => raw.region = Some(r.to_array()),
                    Selector::Label(l) => raw.label = Some(l.clone()),
                    Selector::Rest => raw.rest = Some(true),
                }
                match &b.kind {
                    BoundaryKind::Neumann { rate, s_w } => {
                        raw.kind = "neumann".into();
                        raw.rate = Some(q(*rate, Dimension::VolumeRate));
                        raw.s_w = *s_w;
                    }
                    BoundaryKind::Dirichlet { p_w, p_n, s_w } => {
                        raw.kind = "dirichlet".into();
                        raw.p_w = Some(q(*p_w, Dimension::Pressure));
                        raw.p_n = p_n.map(|p| q(p, Dimension::Pressure));
                        raw.s_w = *s_w;
                    }
                    BoundaryKind::NoFlow => raw.kind = "no_flow".into(),
                }
                raw
            })
            .collect();
        let source = self
            .sources
            .iter()
            .map(|s| RawSource { region: s.region.to_array(), rate: q(s.rate, Dimension::VolumeRate), s_w: s.s_w })
            .collect();
        let c = &self.scheme;
        let (dt, cfl, dt_min, dt_max) = match c.stepping {
            TimeStepping::Fixed(dt) => (Some(q(dt, Dimension::Time)), None, None, None),
            TimeStepping::Adaptive { cfl, dt_min, dt_max } => {
                (None, Some(cfl), Some(q(dt_min, Dimension::Time)), Some(q(dt_max, Dimension::Time)))
            }
        };
        let scheme = RawScheme {
            kind: c.kind.name().to_string(),
            dt,
            cfl,
            dt_min,
            dt_max,
            steps: c.max_steps,
            end_time: c.end_time.map(|t| q(t, Dimension::Time)),
            bounds_policy: Some(c.bounds_policy.name().to_string()),
            p_ref: Some(q(c.p_ref, Dimension::Pressure)),
            upwind_iterations: Some(c.upwind_iterations),
        };
        let output = Some(RawOutput {
            dir: self.output.dir.as_ref().map(|p| path(p)),
            vtk_every: Some(self.output.vtk_every),
            checkpoint_every: Some(self.output.checkpoint_every),
        });
        let raw = RawScenario {
            name: self.name.clone(),
            description: self.description.clone(),
            mesh,
            fluids,
            rock,
            initial,
            boundary,
            source,
            scheme,
            output,
        };
        toml::to_string(&raw).expect("scenario serializes")
    }

    pub fn build_mesh(&self) -> Result<Mesh> {
        match &self.mesh {
            MeshSpec::Structured { nx, ny, lx, ly } => Mesh::structured(*nx, *ny, *lx, *ly),
            MeshSpec::File(p) => Mesh::load(p),
        }
    }

    /// Mesh with boundary conditions, rock, sources and the initial state.
    pub fn build(&self) -> Result<Setup> {
        let mesh = self.build_mesh()?;
        let mesh = self.tag(mesh)?;
        let m = mesh.n_cells();
        let (lo, hi) = mesh.bounding_box();
        let tol = 1e-9 * (hi[0] - lo[0]).hypot(hi[1] - lo[1]);

        let permeability = match &self.rock.permeability {
            PermeabilitySpec::Field { background, regions } => paint(&mesh, *background, regions, tol),
            PermeabilitySpec::Raster { path, nx, ny, mapping, unit } => {
                let raster = load_permeability_raster(path, *nx, *ny, *mapping, *unit)?;
                raster_to_cells(&mesh, &raster, *nx, *ny)
            }
        };
        let rock = self.rock.to_model(m, &permeability);

        let mut source_w = vec![0.0; m];
        let mut source_n = vec![0.0; m];
        for (n, s) in self.sources.iter().enumerate() {
            let cells: Vec<usize> = (0..m).filter(|&k| s.region.contains(mesh.centroid(k), tol)).collect();
            let area: f64 = cells.iter().map(|&k| mesh.area(k)).sum();
            if cells.is_empty() {
                return Err(Error::config(format!("source[{n}]: box contains no cell centroid")));
            }
            for k in cells {
                let q = s.rate * mesh.area(k) / area;
                source_w[k] += q * s.s_w;
                source_n[k] += q * (1.0 - s.s_w);
            }
        }

        let s_w0 = match &self.initial {
            InitialSpec::Field { background, regions } => paint(&mesh, *background, regions, tol),
            InitialSpec::File(p) => {
                let v = read_numbers(p)?;
                if v.len() != m {
                    return Err(Error::config(format!("{}: {} saturation values for {m} cells", p.display(), v.len())));
                }
                for (k, s) in v.iter().enumerate() {
                    fraction(*s, &format!("initial saturation of cell {k}"))?;
                }
                v
            }
        };

        let model = Model::with_sources(mesh, self.fluids.clone(), rock, source_w, source_n)?;
        Ok(Setup { model, s_w0 })
    }

    fn tag(&self, mesh: Mesh) -> Result<Mesh> {
        let (lo, hi) = mesh.bounding_box();
        let tol = 1e-9 * (hi[0] - lo[0]).hypot(hi[1] - lo[1]);
        let matches = |sel: &Selector, b: &BoundaryEdge| -> bool {
            match sel {
                Selector::Side { side, range } => {
                    let [x, y] = b.midpoint;
                    let (on, along) = match side {
                        Side::Left => ((x - lo[0]).abs() <= tol, y),
                        Side::Right => ((x - hi[0]).abs() <= tol, y),
                        Side::Bottom => ((y - lo[1]).abs() <= tol, x),
                        Side::Top => ((y - hi[1]).abs() <= tol, x),
                    };
                    on && range.is_none_or(|(a, c)| along >= a - tol && along <= c + tol)
                }
                Selector::Box(r) => r.contains(b.midpoint, tol),
                Selector::Label(l) => b.label == Some(l.as_str()),
                Selector::Rest => false,
            }
        };
        let selected = |i: usize, b: &BoundaryEdge| -> bool {
            match self.boundary[i].selector {
                Selector::Rest => !self.boundary.iter().any(|o| matches(&o.selector, b)),
                ref s => matches(s, b),
            }
        };

        let views: Vec<BoundaryEdge> = mesh
            .boundary_edges()
            .map(|e| {
                let edge = mesh.edge(e);
                BoundaryEdge {
                    index: e,
                    midpoint: edge.midpoint,
                    normal: edge.normal,
                    length: edge.length,
                    label: mesh.label(e),
                }
            })
            .collect();
        let mut rules: Vec<(EdgePredicate, BoundaryCondition)> = Vec::new();
        for (i, spec) in self.boundary.iter().enumerate() {
            let length: f64 = views.iter().filter(|b| selected(i, b)).map(|b| b.length).sum();
            if length == 0.0 {
                return Err(Error::config(format!("boundary[{i}]: selects no boundary edge")));
            }
            let bc = match spec.kind {
                BoundaryKind::NoFlow => BoundaryCondition::no_flow(),
                BoundaryKind::Neumann { rate, s_w } => {
                    // outward flux density; injection is negative
                    let g = -rate / length;
                    let split = s_w.unwrap_or(1.0);
                    BoundaryCondition::Neumann { flux_w: g * split, flux_n: g * (1.0 - split), s_w }
                }
                BoundaryKind::Dirichlet { p_w, p_n, s_w } => BoundaryCondition::Dirichlet { p_w, p_n, s_w },
            };
            let pred: EdgePredicate = Box::new(move |b: &BoundaryEdge| selected(i, b));
            rules.push((pred, bc));
        }
        drop(views);
        mesh.tag_boundary(&rules)
    }
}

impl RockSpec {
    fn to_model(&self, n_cells: usize, permeability: &[f64]) -> RockModel {
        RockModel {
            porosity: vec![self.porosity; n_cells],
            permeability: permeability.to_vec(),
            beta: self.beta,
            bc: self.bc,
            s_rw: self.s_rw,
            s_rn: self.s_rn,
            eps_s: self.eps_s,
            orientation: CapillaryOrientation::Wetting,
        }
    }
}

fn paint(mesh: &Mesh, background: f64, regions: &[(Rect, f64)], tol: f64) -> Vec<f64> {
    (0..mesh.n_cells())
        .map(|k| {
            let c = mesh.centroid(k);
            regions.iter().rev().find(|(r, _)| r.contains(c, tol)).map_or(background, |(_, v)| *v)
        })
        .collect()
}

fn read_numbers(path: &Path) -> Result<Vec<f64>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("");
        for tok in line.split_whitespace() {
            let v: f64 = tok.parse().map_err(|_| Error::Parse {
                path: path.to_path_buf(),
                line: n + 1,
                message: format!("`{tok}` is not a number"),
            })?;
            out.push(v);
        }
    }
    Ok(out)
}

/// Reads an `nx × ny` row-major raster (first row at the lowest `y`) and maps
/// it to permeabilities in m²: `value · unit` or `10^value · unit`.
pub fn load_permeability_raster(path: &Path, nx: usize, ny: usize, mapping: RasterMapping, unit: f64) -> Result<Vec<f64>> {
    let values = read_numbers(path)?;
    if nx == 0 || ny == 0 || values.len() != nx * ny {
        return Err(Error::config(format!(
            "{}: raster has {} values, expected {nx} × {ny} = {}",
            path.display(),
            values.len(),
            nx * ny
        )));
    }
    values
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let k = match mapping {
                RasterMapping::Linear => v * unit,
                RasterMapping::Log10 => 10f64.powf(v) * unit,
            };
            if !(k > 0.0 && k.is_finite()) {
                return Err(Error::config(format!("{}: raster value {i} maps to nonpositive permeability {k}", path.display())));
            }
            Ok(k)
        })
        .collect()
}

/// Samples a raster laid over the mesh bounding box at each cell centroid.
pub fn raster_to_cells(mesh: &Mesh, raster: &[f64], nx: usize, ny: usize) -> Vec<f64> {
    let (lo, hi) = mesh.bounding_box();
    let index = |v: f64, a: f64, b: f64, n: usize| (((v - a) / (b - a) * n as f64).floor().max(0.0) as usize).min(n - 1);
    (0..mesh.n_cells())
        .map(|k| {
            let c = mesh.centroid(k);
            raster[index(c[1], lo[1], hi[1], ny) * nx + index(c[0], lo[0], hi[0], nx)]
        })
        .collect()
}

impl Scenario {
    /// Same scenario advanced by another scheme.
    pub fn with_kind(&self, kind: SchemeKind) -> Scenario {
        let mut s = self.clone();
        s.scheme.kind = kind;
        if kind == SchemeKind::Pimpes {
            s.scheme.bounds_policy = BoundsPolicy::Record;
        }
        s
    }
}
