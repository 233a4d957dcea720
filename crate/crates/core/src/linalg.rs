//! Dense Gaussian elimination with partial pivoting.
//!
//! Square full-rank systems are solved directly. Overdetermined systems go
//! through the normal equations and are accepted only when the residual of
//! the original rows is within [`CONSISTENCY_TOL`]. Rank-deficient systems
//! yield a [`RankDeficiency`] naming the free columns and a null-space basis.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Max-norm residual accepted for overdetermined and singular systems.
pub const CONSISTENCY_TOL: f64 = 1e-9;

/// Pivots below `PIVOT_RTOL * max|entry|` are treated as zero.
const PIVOT_RTOL: f64 = 1e-11;

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let cols = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|r| r.len() == cols), "ragged rows");
        Self {
            rows: rows.len(),
            cols,
            data: rows.concat(),
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn push_row(&mut self, row: &[f64]) {
        if self.rows == 0 && self.cols == 0 {
            self.cols = row.len();
        }
        assert_eq!(row.len(), self.cols, "row length mismatch");
        self.data.extend_from_slice(row);
        self.rows += 1;
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    fn transpose_mul(&self) -> Matrix {
        let mut out = Matrix::zeros(self.cols, self.cols);
        for i in 0..self.cols {
            for j in 0..self.cols {
                out[(i, j)] = (0..self.rows).map(|k| self[(k, i)] * self[(k, j)]).sum();
            }
        }
        out
    }

    fn transpose_mul_vec(&self, b: &[f64]) -> Vec<f64> {
        (0..self.cols)
            .map(|i| (0..self.rows).map(|k| self[(k, i)] * b[k]).sum())
            .collect()
    }
}

impl std::ops::Index<(usize, usize)> for Matrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

pub fn max_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// `||A x - b||_inf`
pub fn residual_norm(a: &Matrix, x: &[f64], b: &[f64]) -> f64 {
    a.mul_vec(x)
        .iter()
        .zip(b)
        .fold(0.0, |m, (ax, bi)| m.max((ax - bi).abs()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearSolution {
    pub x: Vec<f64>,
    pub rank: usize,
    pub residual: f64,
}

/// Certificate for a consistent system without a unique solution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankDeficiency {
    pub rank: usize,
    pub nullity: usize,
    /// Columns without a pivot; fixing one value per column restores uniqueness.
    pub free_columns: Vec<usize>,
    /// One null vector per free column, scaled to unit max-norm.
    pub null_space: Vec<Vec<f64>>,
    /// The solution with every free column set to zero.
    pub particular: Vec<f64>,
}

impl fmt::Display for RankDeficiency {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "rank {} with nullity {}; free columns {:?}",
            self.rank, self.nullity, self.free_columns
        )
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinearSolveError {
    #[error("system is rank deficient: {0}")]
    RankDeficient(RankDeficiency),
    #[error("system is inconsistent: residual {residual:e} exceeds {CONSISTENCY_TOL:e}")]
    Inconsistent { residual: f64 },
    #[error("matrix has {rows} rows but right-hand side has {rhs} entries")]
    DimensionMismatch { rows: usize, rhs: usize },
    #[error("non-finite entry in linear system")]
    NonFinite,
}

/// Solves `A x = b` by Gaussian elimination with partial pivoting.
pub fn gauss_solve(a: &Matrix, b: &[f64]) -> Result<LinearSolution, LinearSolveError> {
    if a.rows() != b.len() {
        return Err(LinearSolveError::DimensionMismatch {
            rows: a.rows(),
            rhs: b.len(),
        });
    }
    if a.data.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(LinearSolveError::NonFinite);
    }
    let (work, rhs) = if a.rows() > a.cols() {
        (a.transpose_mul(), a.transpose_mul_vec(b))
    } else {
        (a.clone(), b.to_vec())
    };
    let ech = eliminate(work, rhs);

    let n = a.cols();
    let solution = back_substitute(&ech, &vec![0.0; n]);
    let residual = residual_norm(a, &solution, b);
    if residual > CONSISTENCY_TOL && (ech.rank < n || a.rows() != n) {
        return Err(LinearSolveError::Inconsistent { residual });
    }
    if ech.rank < n {
        let null_space: Vec<Vec<f64>> = ech
            .free
            .iter()
            .map(|&f| {
                let mut seed = vec![0.0; n];
                seed[f] = 1.0;
                let mut v = back_substitute_homogeneous(&ech, &seed);
                let s = max_norm(&v);
                v.iter_mut().for_each(|x| *x /= s);
                v
            })
            .collect();
        return Err(LinearSolveError::RankDeficient(RankDeficiency {
            rank: ech.rank,
            nullity: n - ech.rank,
            free_columns: ech.free.clone(),
            null_space,
            particular: solution,
        }));
    }
    Ok(LinearSolution {
        x: solution,
        rank: ech.rank,
        residual,
    })
}

struct Echelon {
    /// Upper-trapezoidal rows, pivot rows first.
    u: Matrix,
    rhs: Vec<f64>,
    /// `(row, col)` of each pivot.
    pivots: Vec<(usize, usize)>,
    free: Vec<usize>,
    rank: usize,
}

fn eliminate(mut u: Matrix, mut rhs: Vec<f64>) -> Echelon {
    let (m, n) = (u.rows(), u.cols());
    let tol = PIVOT_RTOL * u.max_abs().max(f64::MIN_POSITIVE);
    let mut r = 0;
    let mut pivots = Vec::new();
    let mut free = Vec::new();
    for col in 0..n {
        if r == m {
            free.push(col);
            continue;
        }
        let (p, best) = (r..m)
            .map(|i| (i, u[(i, col)].abs()))
            .fold((r, -1.0), |acc, (i, v)| if v > acc.1 { (i, v) } else { acc });
        if best <= tol {
            free.push(col);
            continue;
        }
        if p != r {
            for j in 0..n {
                let t = u[(p, j)];
                u[(p, j)] = u[(r, j)];
                u[(r, j)] = t;
            }
            rhs.swap(p, r);
        }
        let piv = u[(r, col)];
        for i in (r + 1)..m {
            let factor = u[(i, col)] / piv;
            if factor == 0.0 {
                continue;
            }
            u[(i, col)] = 0.0;
            for j in (col + 1)..n {
                u[(i, j)] -= factor * u[(r, j)];
            }
            rhs[i] -= factor * rhs[r];
        }
        pivots.push((r, col));
        r += 1;
    }
    Echelon {
        u,
        rhs,
        pivots,
        free,
        rank: r,
    }
}

/// Solves the pivot rows with the free unknowns fixed to `seed`.
fn back_substitute(ech: &Echelon, seed: &[f64]) -> Vec<f64> {
    solve_pivot_rows(ech, seed, &ech.rhs)
}

fn back_substitute_homogeneous(ech: &Echelon, seed: &[f64]) -> Vec<f64> {
    solve_pivot_rows(ech, seed, &vec![0.0; ech.rhs.len()])
}

fn solve_pivot_rows(ech: &Echelon, seed: &[f64], rhs: &[f64]) -> Vec<f64> {
    let n = ech.u.cols();
    let mut x = seed.to_vec();
    for &(row, col) in ech.pivots.iter().rev() {
        let s: f64 = ((col + 1)..n).map(|j| ech.u[(row, j)] * x[j]).sum();
        x[col] = (rhs[row] - s) / ech.u[(row, col)];
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn identity_system() {
        let sol = gauss_solve(&Matrix::identity(2), &[3.0, 4.0]).unwrap();
        assert_eq!(sol.x, vec![3.0, 4.0]);
        assert_eq!(sol.rank, 2);
    }

    #[test]
    fn singular_consistent_system_reports_free_column() {
        let a = Matrix::from_rows(&[vec![1.0, 1.0], vec![2.0, 2.0]]);
        match gauss_solve(&a, &[1.0, 2.0]) {
            Err(LinearSolveError::RankDeficient(d)) => {
                assert_eq!((d.rank, d.nullity), (1, 1));
                assert_eq!(d.free_columns, vec![1]);
                let nv = &d.null_space[0];
                assert!(max_norm(&a.mul_vec(nv)) < 1e-15);
                assert!(residual_norm(&a, &d.particular, &[1.0, 2.0]) < 1e-15);
            }
            other => panic!("expected rank deficiency, got {other:?}"),
        }
    }

    #[test]
    fn singular_inconsistent_system() {
        let a = Matrix::from_rows(&[vec![1.0, 1.0], vec![2.0, 2.0]]);
        assert!(matches!(
            gauss_solve(&a, &[1.0, 3.0]),
            Err(LinearSolveError::Inconsistent { .. })
        ));
    }

    #[test]
    fn consistent_overdetermined_system() {
        let a = Matrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]]);
        let sol = gauss_solve(&a, &[1.0, 2.0, 3.0]).unwrap();
        assert!((sol.x[0] - 1.0).abs() < 1e-14 && (sol.x[1] - 2.0).abs() < 1e-14);
    }

    #[test]
    fn inconsistent_overdetermined_system() {
        let a = Matrix::from_rows(&[vec![1.0], vec![1.0]]);
        match gauss_solve(&a, &[0.0, 1.0]) {
            Err(LinearSolveError::Inconsistent { residual }) => assert!((residual - 0.5).abs() < 1e-15),
            other => panic!("expected inconsistency, got {other:?}"),
        }
    }

    #[test]
    fn underdetermined_system_is_rank_deficient() {
        let a = Matrix::from_rows(&[vec![1.0, 2.0, 3.0]]);
        match gauss_solve(&a, &[6.0]) {
            Err(LinearSolveError::RankDeficient(d)) => {
                assert_eq!(d.nullity, 2);
                assert_eq!(d.free_columns, vec![1, 2]);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn partial_pivoting_handles_zero_leading_entry() {
        let a = Matrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]);
        let sol = gauss_solve(&a, &[5.0, 7.0]).unwrap();
        assert_eq!(sol.x, vec![7.0, 5.0]);
    }

    #[test]
    fn dimension_mismatch() {
        assert!(matches!(
            gauss_solve(&Matrix::identity(2), &[1.0]),
            Err(LinearSolveError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn random_well_conditioned_systems() {
        // Diagonally dominant matrices have condition numbers far below 1e6.
        let mut rng = rand::rngs::StdRng::seed_from_u64(7);
        for _ in 0..500 {
            let n = rng.gen_range(1..=16);
            let mut rows = vec![vec![0.0; n]; n];
            for (i, row) in rows.iter_mut().enumerate() {
                for v in row.iter_mut() {
                    *v = rng.gen_range(-1.0..1.0);
                }
                row[i] += if rng.gen_bool(0.5) { 1.0 } else { -1.0 } * (n as f64 + 1.0);
            }
            let a = Matrix::from_rows(&rows);
            let b: Vec<f64> = (0..n).map(|_| rng.gen_range(-10.0..10.0)).collect();
            let sol = gauss_solve(&a, &b).unwrap();
            assert!(residual_norm(&a, &sol.x, &b) <= 1e-10 * max_norm(&b));
        }
    }
}
