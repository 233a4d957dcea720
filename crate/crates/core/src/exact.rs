//! Closed-form piecewise solutions.
//!
//! Each piece gets a real homogeneous basis and a polynomial particular
//! solution; the `n x pieces` constants are fixed by one linear system
//! holding the point conditions, the interface matching rows and any pins.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::basis::{eval_basis, piece_basis, zero_root_multiplicity, BasisError, BasisFunction};
use crate::linalg::{gauss_solve, residual_norm, LinearSolveError, Matrix, RankDeficiency};
use crate::model::{validate_bvp, PieceOde, PiecewiseBvp, ValidationReport};
use crate::poly::{falling_factorial, Poly};

/// `(piece, basis)` tag of one unknown constant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ColumnLabel {
    pub piece: usize,
    pub basis: usize,
}

impl fmt::Display for ColumnLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "piece {} constant {}", self.piece, self.basis)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RowKind {
    Condition { index: usize },
    Continuity { breakpoint: usize, order: usize },
    Pin { index: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchSystem {
    pub matrix: Matrix,
    pub rhs: Vec<f64>,
    pub labels: Vec<ColumnLabel>,
    pub rows: Vec<RowKind>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PieceSolution {
    pub lo: f64,
    pub hi: f64,
    pub basis: Vec<BasisFunction>,
    pub constants: Vec<f64>,
    pub particular: Poly,
}

impl PieceSolution {
    pub fn eval(&self, x: f64, deriv: usize) -> f64 {
        self.basis
            .iter()
            .zip(&self.constants)
            .map(|(b, c)| c * eval_basis(b, x, deriv))
            .sum::<f64>()
            + self.particular.eval_deriv(x, deriv)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RankReport {
    pub rank: usize,
    pub nullity: usize,
    pub residual_norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseSolution {
    pub pieces: Vec<PieceSolution>,
    pub rank_report: RankReport,
}

/// Free column with the basis function it multiplies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FreeConstant {
    pub label: ColumnLabel,
    pub basis: BasisFunction,
}

impl fmt::Display for FreeConstant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} (multiplies {})", self.label, self.basis)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankDiagnosis {
    pub deficiency: RankDeficiency,
    pub free: Vec<FreeConstant>,
}

impl fmt::Display for RankDiagnosis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}; pin one constant per free column: ", self.deficiency)?;
        let names: Vec<String> = self.free.iter().map(ToString::to_string).collect();
        f.write_str(&names.join(", "))
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolveError {
    #[error("invalid problem: {0}")]
    Invalid(ValidationReport),
    #[error(transparent)]
    Basis(#[from] BasisError),
    #[error("matching system is rank deficient: {0}")]
    RankDeficient(Box<RankDiagnosis>),
    #[error("matching system is inconsistent: residual {residual:e}")]
    Inconsistent { residual: f64 },
    #[error("linear solve failed: {0}")]
    Linear(LinearSolveError),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("x = {x} lies outside [{a}, {b}]")]
    OutOfDomain { x: f64, a: f64, b: f64 },
}

/// Polynomial `u_p` with `u_p^(n) - sum_j a_j u_p^(j) = q` identically.
///
/// The ansatz is `x^s (c_0 + ... + c_m x^m)` where `m = deg q` and `s` is the
/// multiplicity of the characteristic root 0. The resulting coefficient
/// system is triangular and always nonsingular.
pub fn particular_solution(piece: &PieceOde) -> Poly {
    let Some(m) = piece.forcing.degree() else {
        return Poly::zero();
    };
    let n = piece.order;
    let s = zero_root_multiplicity(&piece.coeffs).min(n);
    // Column i holds L[x^(s+i)] restricted to degrees 0..=m.
    let mut a = Matrix::zeros(m + 1, m + 1);
    for i in 0..=m {
        let p = s + i;
        // D^n x^p
        if p >= n {
            let d = p - n;
            if d <= m {
                a[(d, i)] += falling_factorial(p, n);
            }
        }
        for (j, &aj) in piece.coeffs.iter().enumerate() {
            if aj != 0.0 && p >= j {
                let d = p - j;
                if d <= m {
                    a[(d, i)] -= aj * falling_factorial(p, j);
                }
            }
        }
    }
    let rhs: Vec<f64> = (0..=m).map(|d| piece.forcing.coeff(d)).collect();
    let sol = gauss_solve(&a, &rhs).expect("undetermined-coefficient system is triangular with nonzero diagonal");
    let mut coeffs = vec![0.0; s + m + 1];
    coeffs[s..].copy_from_slice(&sol.x);
    Poly::new(coeffs)
}

/// Builds the matching system. Rows: point conditions, then continuity per
/// interior breakpoint and order, then pins.
pub fn assemble_system(
    bvp: &PiecewiseBvp,
    bases: &[Vec<BasisFunction>],
    particulars: &[Poly],
) -> MatchSystem {
    let n = bvp.order;
    let cols = n * bvp.pieces.len();
    let labels: Vec<ColumnLabel> = (0..bvp.pieces.len())
        .flat_map(|piece| (0..n).map(move |basis| ColumnLabel { piece, basis }))
        .collect();
    let mut matrix = Matrix::zeros(0, cols);
    let mut rhs = Vec::new();
    let mut rows = Vec::new();

    let fill = |row: &mut [f64], k: usize, x: f64, deriv: usize, sign: f64| {
        for (i, b) in bases[k].iter().enumerate() {
            row[k * n + i] += sign * eval_basis(b, x, deriv);
        }
    };

    for (index, c) in bvp.conditions.iter().enumerate() {
        let k = bvp.condition_piece(c.x).expect("validated condition location");
        let mut row = vec![0.0; cols];
        fill(&mut row, k, c.x, c.deriv, 1.0);
        matrix.push_row(&row);
        rhs.push(c.value - particulars[k].eval_deriv(c.x, c.deriv));
        rows.push(RowKind::Condition { index });
    }
    for k in 0..bvp.pieces.len().saturating_sub(1) {
        let x = bvp.pieces[k].hi;
        for order in bvp.continuity.orders() {
            let mut row = vec![0.0; cols];
            fill(&mut row, k, x, order, 1.0);
            fill(&mut row, k + 1, x, order, -1.0);
            matrix.push_row(&row);
            rhs.push(particulars[k + 1].eval_deriv(x, order) - particulars[k].eval_deriv(x, order));
            rows.push(RowKind::Continuity {
                breakpoint: k + 1,
                order,
            });
        }
    }
    for (index, pin) in bvp.pins.iter().enumerate() {
        let mut row = vec![0.0; cols];
        row[pin.piece * n + pin.basis] = 1.0;
        matrix.push_row(&row);
        rhs.push(pin.value);
        rows.push(RowKind::Pin { index });
    }
    MatchSystem {
        matrix,
        rhs,
        labels,
        rows,
    }
}

/// Full closed-form pipeline: roots, basis, particular solutions, matching
/// system, elimination.
pub fn solve_exact(bvp: &PiecewiseBvp) -> Result<PiecewiseSolution, SolveError> {
    let report = validate_bvp(bvp);
    if !report.is_valid() {
        return Err(SolveError::Invalid(report));
    }
    let bases = bvp
        .pieces
        .iter()
        .map(piece_basis)
        .collect::<Result<Vec<_>, _>>()?;
    let particulars: Vec<Poly> = bvp.pieces.iter().map(particular_solution).collect();
    let system = assemble_system(bvp, &bases, &particulars);

    let sol = match gauss_solve(&system.matrix, &system.rhs) {
        Ok(sol) => sol,
        Err(LinearSolveError::RankDeficient(deficiency)) => {
            let free = deficiency
                .free_columns
                .iter()
                .map(|&c| {
                    let label = system.labels[c];
                    FreeConstant {
                        label,
                        basis: bases[label.piece][label.basis],
                    }
                })
                .collect();
            return Err(SolveError::RankDeficient(Box::new(RankDiagnosis { deficiency, free })));
        }
        Err(LinearSolveError::Inconsistent { residual }) => {
            return Err(SolveError::Inconsistent { residual })
        }
        Err(e) => return Err(SolveError::Linear(e)),
    };

    let n = bvp.order;
    let pieces = bvp
        .pieces
        .iter()
        .zip(bases)
        .zip(particulars)
        .enumerate()
        .map(|(k, ((p, basis), particular))| PieceSolution {
            lo: p.lo,
            hi: p.hi,
            basis,
            constants: sol.x[k * n..(k + 1) * n].to_vec(),
            particular,
        })
        .collect();
    Ok(PiecewiseSolution {
        pieces,
        rank_report: RankReport {
            rank: sol.rank,
            nullity: system.labels.len() - sol.rank,
            residual_norm: residual_norm(&system.matrix, &sol.x, &system.rhs),
        },
    })
}

impl PiecewiseSolution {
    pub fn domain(&self) -> (f64, f64) {
        (self.pieces[0].lo, self.pieces[self.pieces.len() - 1].hi)
    }

    /// Owning piece of `x`: breakpoints belong to the right piece, `b` to the last.
    pub fn piece_at(&self, x: f64) -> Result<usize, EvalError> {
        let (a, b) = self.domain();
        if !(a..=b).contains(&x) {
            return Err(EvalError::OutOfDomain { x, a, b });
        }
        Ok(self
            .pieces
            .iter()
            .position(|p| x >= p.lo && x < p.hi)
            .unwrap_or(self.pieces.len() - 1))
    }

    pub fn eval(&self, x: f64, deriv: usize) -> Result<f64, EvalError> {
        let k = self.piece_at(x)?;
        Ok(self.pieces[k].eval(x, deriv))
    }

    pub fn constant(&self, label: ColumnLabel) -> f64 {
        self.pieces[label.piece].constants[label.basis]
    }

    /// All constants in column order, with labels.
    pub fn labelled_constants(&self) -> Vec<(ColumnLabel, BasisFunction, f64)> {
        self.pieces
            .iter()
            .enumerate()
            .flat_map(|(piece, p)| {
                p.basis
                    .iter()
                    .zip(&p.constants)
                    .enumerate()
                    .map(move |(basis, (b, &c))| (ColumnLabel { piece, basis }, *b, c))
            })
            .collect()
    }
}

/// Value of the solution at `x`, checked against the problem's domain.
pub fn eval_solution(
    sol: &PiecewiseSolution,
    bvp: &PiecewiseBvp,
    x: f64,
    deriv: usize,
) -> Result<f64, EvalError> {
    let (a, b) = bvp.domain();
    if !(a..=b).contains(&x) {
        return Err(EvalError::OutOfDomain { x, a, b });
    }
    sol.eval(x, deriv)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_second_order, normalize_piece, ContinuitySpec, PointCondition};
    use std::f64::consts::E;

    fn piece(coeffs: &[f64], forcing: &[f64], order: usize) -> PieceOde {
        normalize_piece(1, coeffs, &Poly::new(forcing.to_vec()), (0.0, 1.0), order).unwrap()
    }

    fn assert_particular(p: &PieceOde) -> Poly {
        let up = particular_solution(p);
        for i in 0..20 {
            let x = -1.0 + 0.15 * i as f64;
            let lhs = up.eval_deriv(x, p.order);
            let rhs: f64 =
                (0..p.order).map(|j| p.coeffs[j] * up.eval_deriv(x, j)).sum::<f64>() + p.forcing.eval(x);
            assert!((lhs - rhs).abs() < 1e-12, "{up} fails at {x}");
        }
        up
    }

    #[test]
    fn particular_for_coupled_piece() {
        let up = assert_particular(&piece(&[1.0], &[-1.0], 2));
        assert_eq!(up.trimmed().coeffs(), &[1.0]);
    }

    #[test]
    fn particular_with_resonance_shift() {
        let up = assert_particular(&piece(&[], &[0.0, 1.0], 2));
        assert_eq!(up.trimmed().coeffs(), &[0.0, 0.0, 0.0, 1.0 / 6.0]);
    }

    #[test]
    fn particular_third_order_linear_forcing() {
        let up = assert_particular(&piece(&[1.0], &[-1.0, 1.0], 3));
        assert_eq!(up.trimmed().coeffs(), &[1.0, -1.0]);
    }

    #[test]
    fn particular_with_first_derivative_coupling() {
        // u'' = u' - 2 has root 0 once: u_p = 2x
        let up = assert_particular(&piece(&[0.0, 1.0], &[-2.0], 2));
        assert_eq!(up.trimmed().coeffs(), &[0.0, 2.0]);
        assert_particular(&piece(&[0.0, 0.0, 2.0, -1.0], &[1.0, 2.0, 3.0, 0.5, 0.0, 0.0, 1.0], 4));
    }

    #[test]
    fn particular_zero_forcing() {
        assert!(particular_solution(&piece(&[1.0], &[], 2)).is_zero());
    }

    fn example_one() -> PiecewiseBvp {
        build_second_order(
            Poly::zero(),
            1.0,
            -1.0,
            [-1.0, -0.5, 0.5, 1.0],
            vec![PointCondition::new(-1.0, 0, 0.0), PointCondition::new(1.0, 0, 0.0)],
        )
        .unwrap()
    }

    #[test]
    fn assemble_square_system_for_first_example() {
        let bvp = example_one();
        let bases: Vec<_> = bvp.pieces.iter().map(|p| piece_basis(p).unwrap()).collect();
        let parts: Vec<_> = bvp.pieces.iter().map(particular_solution).collect();
        let sys = assemble_system(&bvp, &bases, &parts);
        assert_eq!((sys.matrix.rows(), sys.matrix.cols()), (6, 6));
        assert_eq!(sys.rows[0], RowKind::Condition { index: 0 });
        assert_eq!(sys.rows[2], RowKind::Continuity { breakpoint: 1, order: 0 });
        assert_eq!(sys.rows[5], RowKind::Continuity { breakpoint: 2, order: 1 });
        // u_1 particular is 1, so the value row at -1/2 carries it on the rhs.
        assert_eq!(sys.rhs[2], 1.0);
    }

    #[test]
    fn first_example_closed_form() {
        let sol = solve_exact(&example_one()).unwrap();
        let slope = 2.0 * (E - 1.0) / (1.0 + 3.0 * E);
        assert!((sol.pieces[0].constants[1] - slope).abs() < 1e-12);
        let mid = 1.0 - 4.0 * E.sqrt() / (1.0 + 3.0 * E);
        assert!((sol.eval(0.0, 0).unwrap() - mid).abs() < 1e-12);
        assert!(sol.eval(-1.0, 0).unwrap().abs() < 1e-14);
        assert_eq!(sol.rank_report.nullity, 0);
        assert!(matches!(sol.eval(1.5, 0), Err(EvalError::OutOfDomain { .. })));
    }

    #[test]
    fn zero_problem_has_zero_solution() {
        let bvp = build_second_order(
            Poly::zero(),
            0.0,
            0.0,
            [0.0, 0.3, 0.6, 1.0],
            vec![PointCondition::new(0.0, 0, 0.0), PointCondition::new(1.0, 0, 0.0)],
        )
        .unwrap();
        let sol = solve_exact(&bvp).unwrap();
        for i in 0..=10 {
            assert_eq!(sol.eval(i as f64 / 10.0, 0).unwrap(), 0.0);
        }
    }

    #[test]
    fn invalid_problem_is_rejected() {
        let mut bvp = example_one();
        bvp.pieces[1].lo = -0.4;
        assert!(matches!(solve_exact(&bvp), Err(SolveError::Invalid(_))));
    }

    #[test]
    fn contradictory_conditions_are_inconsistent() {
        let mut bvp = example_one();
        bvp.conditions.push(PointCondition::new(-1.0, 0, 1.0));
        assert!(matches!(solve_exact(&bvp), Err(SolveError::Inconsistent { .. })));
    }

    #[test]
    fn missing_condition_names_free_constant() {
        let mut bvp = example_one();
        bvp.conditions.pop();
        match solve_exact(&bvp) {
            Err(SolveError::RankDeficient(d)) => {
                assert_eq!(d.deficiency.nullity, 1);
                assert_eq!(d.free.len(), 1);
                assert!(d.to_string().contains("piece"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn breakpoint_evaluation_uses_right_piece() {
        let mut bvp = example_one();
        bvp.continuity = ContinuitySpec::new([1]);
        bvp.conditions.push(PointCondition::new(0.0, 0, 0.5));
        bvp.conditions.push(PointCondition::new(0.75, 0, 0.1));
        let sol = solve_exact(&bvp).unwrap();
        assert_eq!(sol.piece_at(-0.5).unwrap(), 1);
        assert_eq!(sol.piece_at(1.0).unwrap(), 2);
        assert_eq!(sol.eval(0.5, 0).unwrap(), sol.pieces[2].eval(0.5, 0));
    }
}
