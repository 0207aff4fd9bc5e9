//! Sparse storage and the two linear-solve contracts used by the schemes:
//! an SPD solve and a (generally non-symmetric) velocity–pressure saddle
//! solve with optional pressure gauge.
//!
//! Factorizations are delegated to `faer`; residuals are always checked here
//! and improved by iterative refinement when needed.

use faer::prelude::*;
use faer::sparse::{SparseColMat, Triplet};
use faer::{Mat, Side};

use crate::error::{Error, Result};

/// Residual tolerance of both contracts.
pub const RESIDUAL_TOL: f64 = 1e-10;
const MAX_REFINEMENT: usize = 4;

/// Compressed sparse row matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseMatrix {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
    symmetric: bool,
}

impl SparseMatrix {
    /// Sums duplicate entries. Entries that sum to zero stay in the pattern.
    pub fn from_triplets(nrows: usize, ncols: usize, triplets: impl IntoIterator<Item = (usize, usize, f64)>) -> Self {
        let mut t: Vec<(usize, usize, f64)> = triplets.into_iter().collect();
        t.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut row_ptr = vec![0usize; nrows + 1];
        let mut col_idx = Vec::with_capacity(t.len());
        let mut values: Vec<f64> = Vec::with_capacity(t.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in t {
            assert!(i < nrows && j < ncols, "triplet ({i}, {j}) outside {nrows}×{ncols}");
            if last == Some((i, j)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_idx.push(j);
                values.push(v);
                row_ptr[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..nrows {
            row_ptr[i + 1] += row_ptr[i];
        }
        SparseMatrix {
            nrows,
            ncols,
            row_ptr,
            col_idx,
            values,
            symmetric: false,
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = SparseMatrix::from_triplets(n, n, (0..n).map(|i| (i, i, 1.0)));
        m.symmetric = true;
        m
    }

    pub fn from_dense(rows: &[Vec<f64>]) -> Self {
        let ncols = rows.first().map_or(0, Vec::len);
        SparseMatrix::from_triplets(
            rows.len(),
            ncols,
            rows.iter()
                .enumerate()
                .flat_map(|(i, r)| r.iter().enumerate().filter(|(_, v)| **v != 0.0).map(move |(j, v)| (i, j, *v))),
        )
    }

    /// Marks the matrix as symmetric after checking it to `tol` (relative to the largest entry).
    pub fn with_symmetry_check(mut self, tol: f64) -> Self {
        self.symmetric = self.symmetry_defect() <= tol * self.max_abs().max(f64::MIN_POSITIVE);
        self
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[r.clone()].iter().copied().zip(self.values[r].iter().copied())
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.nrows).flat_map(move |i| self.row(i).map(move |(j, v)| (i, j, v)))
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.row(i).find(|&(c, _)| c == j).map_or(0.0, |(_, v)| v)
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.ncols);
        (0..self.nrows).map(|i| self.row(i).map(|(j, v)| v * x[j]).sum()).collect()
    }

    /// `Aᵀ x`.
    pub fn mul_vec_transpose(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.nrows);
        let mut y = vec![0.0; self.ncols];
        for (i, xi) in x.iter().enumerate() {
            for (j, v) in self.row(i) {
                y[j] += v * xi;
            }
        }
        y
    }

    pub fn transpose(&self) -> Self {
        let mut t = SparseMatrix::from_triplets(self.ncols, self.nrows, self.triplets().map(|(i, j, v)| (j, i, v)));
        t.symmetric = self.symmetric;
        t
    }

    pub fn scaled(&self, s: f64) -> Self {
        SparseMatrix {
            values: self.values.iter().map(|v| v * s).collect(),
            ..self.clone()
        }
    }

    pub fn add(&self, other: &SparseMatrix) -> Self {
        assert_eq!((self.nrows, self.ncols), (other.nrows, other.ncols));
        SparseMatrix::from_triplets(self.nrows, self.ncols, self.triplets().chain(other.triplets()))
    }

    /// Keeps rows and columns listed in `rows` / `cols`, renumbered in order.
    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> Self {
        let mut col_map = vec![usize::MAX; self.ncols];
        for (new, &old) in cols.iter().enumerate() {
            col_map[old] = new;
        }
        let trips = rows.iter().enumerate().flat_map(|(ni, &oi)| {
            let col_map = &col_map;
            self.row(oi)
                .filter(move |(j, _)| col_map[*j] != usize::MAX)
                .map(move |(j, v)| (ni, col_map[j], v))
        });
        let mut m = SparseMatrix::from_triplets(rows.len(), cols.len(), trips);
        m.symmetric = self.symmetric && rows == cols;
        m
    }

    /// Infinity norm (max absolute row sum).
    pub fn norm_inf(&self) -> f64 {
        (0..self.nrows)
            .map(|i| self.row(i).map(|(_, v)| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn symmetry_defect(&self) -> f64 {
        if self.nrows != self.ncols {
            return f64::INFINITY;
        }
        self.triplets()
            .map(|(i, j, v)| (v - self.get(j, i)).abs())
            .fold(0.0, f64::max)
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.ncols]; self.nrows];
        for (i, j, v) in self.triplets() {
            d[i][j] += v;
        }
        d
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    fn to_faer(&self) -> Result<SparseColMat<usize, f64>> {
        let trips: Vec<Triplet<usize, usize, f64>> = self.triplets().map(|(i, j, v)| Triplet::new(i, j, v)).collect();
        SparseColMat::try_new_from_triplets(self.nrows, self.ncols, &trips).map_err(|e| Error::Solver {
            message: format!("could not build sparse matrix: {e:?}"),
            residual: f64::NAN,
        })
    }
}

pub fn norm_inf(x: &[f64]) -> f64 {
    x.iter().fold(0.0, |m, v| m.max(v.abs()))
}

fn to_col(b: &[f64]) -> Mat<f64> {
    Mat::from_fn(b.len(), 1, |i, _| b[i])
}

fn from_col(m: &Mat<f64>) -> Vec<f64> {
    (0..m.nrows()).map(|i| m[(i, 0)]).collect()
}

/// Normwise relative residual `‖Ax - b‖ / (‖A‖‖x‖ + ‖b‖)`.
pub fn relative_residual(a: &SparseMatrix, x: &[f64], b: &[f64]) -> f64 {
    let r: Vec<f64> = a.mul_vec(x).iter().zip(b).map(|(ax, bi)| ax - bi).collect();
    let denom = a.norm_inf() * norm_inf(x) + norm_inf(b);
    if denom == 0.0 {
        norm_inf(&r)
    } else {
        norm_inf(&r) / denom
    }
}

fn refine<F>(a: &SparseMatrix, b: &[f64], mut x: Vec<f64>, solve: F) -> (Vec<f64>, f64)
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let mut res = relative_residual(a, &x, b);
    for _ in 0..MAX_REFINEMENT {
        if !(res > RESIDUAL_TOL * 1e-3) {
            break;
        }
        let r: Vec<f64> = b.iter().zip(a.mul_vec(&x)).map(|(bi, ax)| bi - ax).collect();
        let dx = solve(&r);
        let candidate: Vec<f64> = x.iter().zip(&dx).map(|(a, b)| a + b).collect();
        let cres = relative_residual(a, &candidate, b);
        if !(cres < res) {
            break;
        }
        x = candidate;
        res = cres;
    }
    (x, res)
}

/// Solves `A x = b` for symmetric positive definite `A` by sparse Cholesky.
/// Returns the solution and its relative residual.
pub fn solve_spd(a: &SparseMatrix, b: &[f64]) -> Result<(Vec<f64>, f64)> {
    if a.nrows() != a.ncols() || a.nrows() != b.len() {
        return Err(Error::Solver {
            message: format!("dimension mismatch: {}×{} with rhs {}", a.nrows(), a.ncols(), b.len()),
            residual: f64::NAN,
        });
    }
    if a.nrows() == 0 {
        return Ok((Vec::new(), 0.0));
    }
    if b.iter().all(|&v| v == 0.0) {
        return Ok((vec![0.0; b.len()], 0.0));
    }
    let fa = a.to_faer()?;
    let llt = fa.sp_cholesky(Side::Lower).map_err(|e| Error::Solver {
        message: format!("Cholesky factorization failed (matrix not SPD?): {e:?}"),
        residual: f64::NAN,
    })?;
    let solve = |rhs: &[f64]| from_col(&llt.solve(to_col(rhs)));
    let x0 = solve(b);
    let (x, res) = refine(a, b, x0, solve);
    check(res, &x, "SPD solve")?;
    Ok((x, res))
}

fn check(res: f64, x: &[f64], what: &str) -> Result<()> {
    if !x.iter().all(|v| v.is_finite()) {
        return Err(Error::Solver {
            message: format!("{what} produced non-finite values (singular system?)"),
            residual: res,
        });
    }
    if !(res <= RESIDUAL_TOL) {
        return Err(Error::Solver {
            message: format!("{what} missed the residual contract"),
            residual: res,
        });
    }
    Ok(())
}

/// Pressure gauge for the saddle system.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Gauge {
    /// Pressure is fixed by Dirichlet data.
    None,
    /// Pressure in `cell` is pinned to `value`; used when every boundary edge is Neumann.
    PinCell { cell: usize, value: f64 },
}

/// `[A  -B; C  0] [u; p] = [r_u; r_p]`, with `A` (n×n) SPD, `B` (n×m) and `C` (m×n).
#[derive(Clone, Debug)]
pub struct SaddleSystem {
    pub a: SparseMatrix,
    pub b: SparseMatrix,
    pub c: SparseMatrix,
    pub r_u: Vec<f64>,
    pub r_p: Vec<f64>,
    pub gauge: Gauge,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SaddleSolution {
    pub u: Vec<f64>,
    pub p: Vec<f64>,
    /// Relative residual of the momentum rows `A u - B p = r_u`.
    pub momentum_residual: f64,
    /// Relative residual of the continuity rows `C u = r_p`.
    pub continuity_residual: f64,
    /// Relative compatibility defect removed under the pin-cell gauge.
    pub compatibility_defect: Option<f64>,
}

fn block_residual(rows: &[&SparseMatrix], xs: &[&[f64]], signs: &[f64], rhs: &[f64]) -> f64 {
    let mut r: Vec<f64> = rhs.iter().map(|v| -v).collect();
    let mut scale = norm_inf(rhs);
    for ((m, x), s) in rows.iter().zip(xs).zip(signs) {
        for (ri, v) in r.iter_mut().zip(m.mul_vec(x)) {
            *ri += s * v;
        }
        scale += m.norm_inf() * norm_inf(x);
    }
    if scale == 0.0 {
        norm_inf(&r)
    } else {
        norm_inf(&r) / scale
    }
}

/// Solves the saddle system by sparse LU of the full block matrix.
pub fn solve_saddle(sys: &SaddleSystem) -> Result<SaddleSolution> {
    let n = sys.a.nrows();
    let m = sys.b.ncols();
    if sys.a.ncols() != n || sys.b.nrows() != n || sys.c.nrows() != m || sys.c.ncols() != n || sys.r_u.len() != n || sys.r_p.len() != m {
        return Err(Error::Solver {
            message: "saddle system blocks have inconsistent shapes".into(),
            residual: f64::NAN,
        });
    }
    if n == 0 || m == 0 {
        return Err(Error::Solver {
            message: "saddle system is empty".into(),
            residual: f64::NAN,
        });
    }
    let mut r_p = sys.r_p.clone();
    let mut compatibility_defect = None;
    let (pinned, pin_value) = match sys.gauge {
        Gauge::None => {
            // B 1 = 0 means the pressure is only defined up to a constant.
            let b1 = sys.b.mul_vec(&vec![1.0; m]);
            if m > 0 && norm_inf(&b1) <= 1e-12 * sys.b.max_abs() {
                return Err(Error::Solver {
                    message: "pressure is undetermined without Dirichlet data; use the pin-cell gauge".into(),
                    residual: f64::NAN,
                });
            }
            (None, 0.0)
        }
        Gauge::PinCell { cell, value } => {
            if cell >= m {
                return Err(Error::Solver {
                    message: format!("pinned cell {cell} out of range"),
                    residual: f64::NAN,
                });
            }
            let total: f64 = r_p.iter().sum();
            let scale: f64 = r_p.iter().map(|v| v.abs()).sum();
            let rel = if scale > 0.0 { total.abs() / scale } else { 0.0 };
            if rel > RESIDUAL_TOL {
                return Err(Error::Solver {
                    message: format!("incompatible sources for a closed domain: net rate {total:e}"),
                    residual: rel,
                });
            }
            let mean = total / m as f64;
            r_p.iter_mut().for_each(|v| *v -= mean);
            compatibility_defect = Some(rel);
            (Some(cell), value)
        }
    };

    // Unknown layout: u (n) then p without the pinned cell; continuity row of
    // the pinned cell is dropped (it is implied by the others).
    let p_index = |j: usize| -> Option<usize> {
        match pinned {
            Some(c) if j == c => None,
            Some(c) if j > c => Some(n + j - 1),
            _ => Some(n + j),
        }
    };
    let dim = n + m - usize::from(pinned.is_some());
    let mut trips: Vec<(usize, usize, f64)> = Vec::with_capacity(sys.a.nnz() + sys.b.nnz() + sys.c.nnz());
    let mut rhs = vec![0.0; dim];
    rhs[..n].copy_from_slice(&sys.r_u);
    trips.extend(sys.a.triplets());
    for (i, j, v) in sys.b.triplets() {
        match p_index(j) {
            Some(col) => trips.push((i, col, -v)),
            None => rhs[i] += v * pin_value,
        }
    }
    for (j, i, v) in sys.c.triplets() {
        if let Some(row) = p_index(j) {
            trips.push((row, i, v));
        }
    }
    for (j, v) in r_p.iter().enumerate() {
        if let Some(row) = p_index(j) {
            rhs[row] = *v;
        }
    }
    let full = SparseMatrix::from_triplets(dim, dim, trips);

    // Row equilibration before factorization; residuals are measured on the
    // unscaled blocks.
    let row_scale: Vec<f64> = (0..dim)
        .map(|i| {
            let mx = full.row(i).fold(0.0f64, |a, (_, v)| a.max(v.abs()));
            if mx > 0.0 {
                1.0 / mx
            } else {
                1.0
            }
        })
        .collect();
    let scaled = SparseMatrix::from_triplets(dim, dim, full.triplets().map(|(i, j, v)| (i, j, v * row_scale[i])));
    let lu = scaled.to_faer()?.sp_lu().map_err(|e| Error::Solver {
        message: format!("LU factorization failed (singular saddle system?): {e:?}"),
        residual: f64::NAN,
    })?;
    let solve = |r: &[f64]| {
        let rs: Vec<f64> = r.iter().zip(&row_scale).map(|(a, s)| a * s).collect();
        from_col(&lu.solve(to_col(&rs)))
    };
    let x0 = solve(&rhs);
    let (x, _) = refine(&full, &rhs, x0, solve);

    let u = x[..n].to_vec();
    let p: Vec<f64> = (0..m).map(|j| p_index(j).map_or(pin_value, |k| x[k])).collect();
    let momentum_residual = block_residual(&[&sys.a, &sys.b], &[&u, &p], &[1.0, -1.0], &sys.r_u);
    let continuity_residual = block_residual(&[&sys.c], &[&u], &[1.0], &r_p);
    let worst = momentum_residual.max(continuity_residual);
    check(worst, &x, "saddle solve")?;
    Ok(SaddleSolution {
        u,
        p,
        momentum_residual,
        continuity_residual,
        compatibility_defect,
    })
}
