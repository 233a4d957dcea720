//! Numeric cross-check by linear shooting.
//!
//! Each piece's companion system is integrated with fixed-step RK4 from its
//! left end for the `n` unit initial states (homogeneous) and for the zero
//! state with the forcing switched on. By linearity the solution on piece `k`
//! is `Y_k(x) s_k + P_k(x)`, where `s_k` is the unknown state at the piece's
//! left end. Condition and continuity rows then give a linear system in the
//! `n * pieces` unknown states.
//!
//! Nothing here touches characteristic roots or closed-form bases.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{gauss_solve, LinearSolveError, Matrix, RankDeficiency};
use crate::model::{validate_bvp, PieceOde, PiecewiseBvp, ValidationReport};

pub const DEFAULT_STEP: f64 = 1e-3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("step must be positive and finite, got {0}")]
    BadStep(f64),
    #[error("integration blew up near x = {x} on piece {piece}")]
    NonFinite { piece: usize, x: f64 },
    #[error("invalid problem: {0}")]
    Invalid(ValidationReport),
    #[error("shooting system is rank deficient: {0}")]
    RankDeficient(RankDeficiency),
    #[error("shooting system is inconsistent: residual {residual:e}")]
    Inconsistent { residual: f64 },
    #[error("linear solve failed: {0}")]
    Linear(LinearSolveError),
    #[error("x = {x} lies outside [{a}, {b}]")]
    OutOfDomain { x: f64, a: f64, b: f64 },
    #[error("derivative order {deriv} is not below the problem order {order}")]
    DerivativeOrder { deriv: usize, order: usize },
}

impl From<LinearSolveError> for OracleError {
    fn from(e: LinearSolveError) -> Self {
        match e {
            LinearSolveError::RankDeficient(d) => OracleError::RankDeficient(d),
            LinearSolveError::Inconsistent { residual } => OracleError::Inconsistent { residual },
            other => OracleError::Linear(other),
        }
    }
}

/// Trajectories of one piece on its grid.
#[derive(Debug, Clone, PartialEq)]
pub struct FundamentalTrajectory {
    pub xs: Vec<f64>,
    /// `homogeneous[i][t]` is the state at `xs[t]` started from unit vector `e_i`.
    pub homogeneous: Vec<Vec<Vec<f64>>>,
    /// State at `xs[t]` started from zero with forcing.
    pub particular: Vec<Vec<f64>>,
}

/// Grid on `[lo, hi]` through every stop in `stops`, steps at most `h`.
/// Between stops the last step is shortened.
fn piece_grid(lo: f64, hi: f64, h: f64, stops: &[f64]) -> Vec<f64> {
    let mut marks: Vec<f64> = std::iter::once(lo)
        .chain(stops.iter().copied().filter(|&s| s > lo && s < hi))
        .chain(std::iter::once(hi))
        .collect();
    marks.sort_by(f64::total_cmp);
    marks.dedup();
    let mut xs = vec![lo];
    for w in marks.windows(2) {
        let (a, b) = (w[0], w[1]);
        let steps = ((b - a) / h - 1e-9).ceil().max(1.0) as usize;
        for i in 1..steps {
            xs.push(a + i as f64 * h);
        }
        xs.push(b);
    }
    xs
}

fn rk4_step(piece: &PieceOde, forced: bool, x: f64, y: &[f64], dx: f64) -> Vec<f64> {
    let n = y.len();
    let f = |x: f64, y: &[f64]| -> Vec<f64> {
        let mut d = vec![0.0; n];
        d[..n - 1].copy_from_slice(&y[1..]);
        d[n - 1] = piece.coeffs.iter().zip(y).map(|(a, u)| a * u).sum::<f64>()
            + if forced { piece.forcing.eval(x) } else { 0.0 };
        d
    };
    let axpy = |a: &[f64], s: f64, b: &[f64]| -> Vec<f64> { a.iter().zip(b).map(|(u, v)| u + s * v).collect() };
    let k1 = f(x, y);
    let k2 = f(x + 0.5 * dx, &axpy(y, 0.5 * dx, &k1));
    let k3 = f(x + 0.5 * dx, &axpy(y, 0.5 * dx, &k2));
    let k4 = f(x + dx, &axpy(y, dx, &k3));
    (0..n)
        .map(|i| y[i] + dx / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect()
}

fn integrate(piece: &PieceOde, xs: &[f64], y0: Vec<f64>, forced: bool) -> Result<Vec<Vec<f64>>, f64> {
    let mut out = Vec::with_capacity(xs.len());
    out.push(y0);
    for w in xs.windows(2) {
        let next = rk4_step(piece, forced, w[0], out.last().unwrap(), w[1] - w[0]);
        if next.iter().any(|v| !v.is_finite()) {
            return Err(w[1]);
        }
        out.push(next);
    }
    Ok(out)
}

/// RK4 trajectories of the unit-state homogeneous solutions and the forced
/// zero-state solution over the piece, with steps of at most `h`.
pub fn integrate_fundamental(piece: &PieceOde, h: f64) -> Result<FundamentalTrajectory, OracleError> {
    integrate_fundamental_through(piece, h, &[])
}

fn integrate_fundamental_through(
    piece: &PieceOde,
    h: f64,
    stops: &[f64],
) -> Result<FundamentalTrajectory, OracleError> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(OracleError::BadStep(h));
    }
    let n = piece.order;
    let xs = piece_grid(piece.lo, piece.hi, h, stops);
    let blowup = |x| OracleError::NonFinite { piece: 0, x };
    let homogeneous = (0..n)
        .map(|i| {
            let mut e = vec![0.0; n];
            e[i] = 1.0;
            integrate(piece, &xs, e, false).map_err(blowup)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let particular = integrate(piece, &xs, vec![0.0; n], true).map_err(blowup)?;
    Ok(FundamentalTrajectory {
        xs,
        homogeneous,
        particular,
    })
}

/// Stitched solution: per piece, grid points and full states.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NumericSolution {
    pub order: usize,
    pub step: f64,
    pub pieces: Vec<NumericPiece>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NumericPiece {
    pub ode: PieceOde,
    pub xs: Vec<f64>,
    pub states: Vec<Vec<f64>>,
}

impl NumericSolution {
    pub fn domain(&self) -> (f64, f64) {
        (self.pieces[0].ode.lo, self.pieces[self.pieces.len() - 1].ode.hi)
    }

    /// Global grid, strictly increasing, each breakpoint once.
    pub fn grid(&self) -> Vec<f64> {
        let mut g = Vec::new();
        for p in &self.pieces {
            if g.last() == p.xs.first() {
                g.pop();
            }
            g.extend_from_slice(&p.xs);
        }
        g
    }

    /// States on [`NumericSolution::grid`]; breakpoints take the right piece's state.
    pub fn states(&self) -> Vec<Vec<f64>> {
        let mut s: Vec<Vec<f64>> = Vec::new();
        for (k, p) in self.pieces.iter().enumerate() {
            if k > 0 {
                s.pop();
            }
            s.extend(p.states.iter().cloned());
        }
        s
    }

    fn piece_at(&self, x: f64) -> Result<usize, OracleError> {
        let (a, b) = self.domain();
        if !(a..=b).contains(&x) {
            return Err(OracleError::OutOfDomain { x, a, b });
        }
        Ok(self
            .pieces
            .iter()
            .position(|p| x >= p.ode.lo && x < p.ode.hi)
            .unwrap_or(self.pieces.len() - 1))
    }
}

/// `u^(deriv)(x)` by cubic Hermite interpolation between the bracketing grid
/// states, using `u^(deriv)` and `u^(deriv+1)`; the top derivative comes from
/// the piece equation.
pub fn sample(sol: &NumericSolution, x: f64, deriv: usize) -> Result<f64, OracleError> {
    if deriv >= sol.order {
        return Err(OracleError::DerivativeOrder {
            deriv,
            order: sol.order,
        });
    }
    let k = sol.piece_at(x)?;
    let p = &sol.pieces[k];
    let i = p.xs.partition_point(|&g| g <= x).clamp(1, p.xs.len() - 1);
    let (x0, x1) = (p.xs[i - 1], p.xs[i]);
    if x == x0 {
        return Ok(p.states[i - 1][deriv]);
    }
    if x == x1 {
        return Ok(p.states[i][deriv]);
    }
    let slope = |t: usize| {
        if deriv + 1 < sol.order {
            p.states[t][deriv + 1]
        } else {
            p.ode.rhs(p.xs[t], &p.states[t])
        }
    };
    let h = x1 - x0;
    let t = (x - x0) / h;
    let (t2, t3) = (t * t, t * t * t);
    let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
    let h10 = t3 - 2.0 * t2 + t;
    let h01 = -2.0 * t3 + 3.0 * t2;
    let h11 = t3 - t2;
    Ok(h00 * p.states[i - 1][deriv] + h10 * h * slope(i - 1) + h01 * p.states[i][deriv] + h11 * h * slope(i))
}

/// Value supplied for an anchoring row: `anchor(piece, x, deriv)`.
pub type Anchor<'a> = &'a dyn Fn(usize, f64, usize) -> f64;

struct ShootingSystem {
    matrix: Matrix,
    rhs: Vec<f64>,
    trajectories: Vec<FundamentalTrajectory>,
}

fn build_system(bvp: &PiecewiseBvp, h: f64) -> Result<ShootingSystem, OracleError> {
    let report = validate_bvp(bvp);
    if !report.is_valid() {
        return Err(OracleError::Invalid(report));
    }
    let n = bvp.order;
    let cols = n * bvp.pieces.len();
    let trajectories = bvp
        .pieces
        .iter()
        .enumerate()
        .map(|(k, p)| {
            let stops: Vec<f64> = bvp.conditions.iter().map(|c| c.x).collect();
            integrate_fundamental_through(p, h, &stops).map_err(|e| match e {
                OracleError::NonFinite { x, .. } => OracleError::NonFinite { piece: k, x },
                other => other,
            })
        })
        .collect::<Result<Vec<_>, _>>()?;

    let index_of = |k: usize, x: f64| {
        trajectories[k]
            .xs
            .iter()
            .position(|&g| g == x)
            .expect("grid contains every condition point and breakpoint")
    };
    let mut matrix = Matrix::zeros(0, cols);
    let mut rhs = Vec::new();
    for c in &bvp.conditions {
        let k = bvp.condition_piece(c.x).expect("validated condition location");
        let t = index_of(k, c.x);
        let tr = &trajectories[k];
        let mut row = vec![0.0; cols];
        for i in 0..n {
            row[k * n + i] = tr.homogeneous[i][t][c.deriv];
        }
        matrix.push_row(&row);
        rhs.push(c.value - tr.particular[t][c.deriv]);
    }
    for k in 0..bvp.pieces.len().saturating_sub(1) {
        let tr = &trajectories[k];
        let end = tr.xs.len() - 1;
        for order in bvp.continuity.orders() {
            let mut row = vec![0.0; cols];
            for i in 0..n {
                row[k * n + i] = tr.homogeneous[i][end][order];
            }
            // The right piece starts from its own unknown state.
            row[(k + 1) * n + order] -= 1.0;
            matrix.push_row(&row);
            rhs.push(-tr.particular[end][order]);
        }
    }
    Ok(ShootingSystem {
        matrix,
        rhs,
        trajectories,
    })
}

fn stitch(bvp: &PiecewiseBvp, h: f64, sys: ShootingSystem, s: &[f64]) -> NumericSolution {
    let n = bvp.order;
    let pieces = bvp
        .pieces
        .iter()
        .zip(sys.trajectories)
        .enumerate()
        .map(|(k, (ode, tr))| {
            let init = &s[k * n..(k + 1) * n];
            let states = (0..tr.xs.len())
                .map(|t| {
                    (0..n)
                        .map(|j| {
                            tr.particular[t][j]
                                + (0..n).map(|i| init[i] * tr.homogeneous[i][t][j]).sum::<f64>()
                        })
                        .collect()
                })
                .collect();
            NumericPiece {
                ode: ode.clone(),
                xs: tr.xs,
                states,
            }
        })
        .collect();
    NumericSolution {
        order: n,
        step: h,
        pieces,
    }
}

/// Shooting solution of `bvp` with step `h`.
///
/// Pins refer to closed-form basis constants and are not imposed here; a
/// problem that needs them to be well posed reports rank deficiency. Use
/// [`shooting_solve_anchored`] to select one member of the solution family.
pub fn shooting_solve(bvp: &PiecewiseBvp, h: f64) -> Result<NumericSolution, OracleError> {
    let sys = build_system(bvp, h)?;
    let sol = gauss_solve(&sys.matrix, &sys.rhs)?;
    Ok(stitch(bvp, h, sys, &sol.x))
}

/// Like [`shooting_solve`], but each null direction of the shooting system is
/// fixed by one extra row `u^(j)(lo_k) = anchor(k, lo_k, j)` on the state
/// component where that direction is largest.
pub fn shooting_solve_anchored(
    bvp: &PiecewiseBvp,
    h: f64,
    anchor: Anchor<'_>,
) -> Result<NumericSolution, OracleError> {
    let mut sys = build_system(bvp, h)?;
    let deficiency = match gauss_solve(&sys.matrix, &sys.rhs) {
        Ok(sol) => return Ok(stitch(bvp, h, sys, &sol.x)),
        Err(LinearSolveError::RankDeficient(d)) => d,
        Err(e) => return Err(e.into()),
    };
    let n = bvp.order;
    let cols = sys.matrix.cols();
    // Greedy pivoted choice keeps the anchor rows independent.
    let mut directions = deficiency.null_space.clone();
    for d in 0..directions.len() {
        let col = (0..cols)
            .max_by(|&a, &b| directions[d][a].abs().total_cmp(&directions[d][b].abs()))
            .expect("non-empty system");
        let pivot = directions[d][col];
        let (done, rest) = directions.split_at_mut(d + 1);
        for other in rest {
            let f = other[col] / pivot;
            for (o, v) in other.iter_mut().zip(&done[d]) {
                *o -= f * v;
            }
        }
        let (k, j) = (col / n, col % n);
        let mut row = vec![0.0; cols];
        row[col] = 1.0;
        sys.matrix.push_row(&row);
        sys.rhs.push(anchor(k, bvp.pieces[k].lo, j));
    }
    let sol = gauss_solve(&sys.matrix, &sys.rhs)?;
    Ok(stitch(bvp, h, sys, &sol.x))
}
