//! Residual, continuity, condition and oracle-agreement checks.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exact::PiecewiseSolution;
use crate::model::PiecewiseBvp;
use crate::oracle::{sample, shooting_solve_anchored, NumericSolution, OracleError};

pub const DEFAULT_RESIDUAL_SAMPLES: usize = 64;
pub const DEFAULT_COMPARE_POINTS: usize = 2001;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum VerifyError {
    #[error("domains differ: exact [{0}, {1}], numeric [{2}, {3}]")]
    DomainMismatch(f64, f64, f64, f64),
    #[error("need at least 2 points, got {0}")]
    TooFewPoints(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub residual: f64,
    pub jump: f64,
    pub condition: f64,
    pub oracle: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            residual: 1e-8,
            jump: 1e-9,
            condition: 1e-9,
            oracle: 1e-6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PieceResidual {
    pub piece: usize,
    pub max: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Jump {
    /// Index of the interior breakpoint, starting at 1.
    pub breakpoint: usize,
    pub x: f64,
    pub order: usize,
    pub jump: f64,
    pub enforced: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConditionViolation {
    pub index: usize,
    pub x: f64,
    pub deriv: usize,
    pub violation: f64,
}

/// Uniform interior samples `lo + w i / (n + 1)`, `i = 1..=n`.
fn interior_samples(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> {
    let w = hi - lo;
    (1..=n).map(move |i| lo + w * i as f64 / (n + 1) as f64)
}

/// Per-piece max of `|u^(n) - sum a_j u^(j) - q|` over interior samples.
pub fn residual_report(sol: &PiecewiseSolution, bvp: &PiecewiseBvp, samples_per_piece: usize) -> Vec<PieceResidual> {
    let n = bvp.order;
    sol.pieces
        .iter()
        .zip(&bvp.pieces)
        .enumerate()
        .map(|(k, (ps, ode))| {
            let max = interior_samples(ode.lo, ode.hi, samples_per_piece.max(2))
                .map(|x| {
                    let state: Vec<f64> = (0..n).map(|j| ps.eval(x, j)).collect();
                    (ps.eval(x, n) - ode.rhs(x, &state)).abs()
                })
                .fold(0.0, f64::max);
            PieceResidual { piece: k, max }
        })
        .collect()
}

/// Jumps `left - right` at each interior breakpoint for every order below `n`.
pub fn continuity_report(sol: &PiecewiseSolution, bvp: &PiecewiseBvp) -> Vec<Jump> {
    sol.pieces
        .windows(2)
        .enumerate()
        .flat_map(|(k, w)| {
            let x = w[0].hi;
            (0..bvp.order).map(move |order| Jump {
                breakpoint: k + 1,
                x,
                order,
                jump: (w[0].eval(x, order) - w[1].eval(x, order)).abs(),
                enforced: bvp.continuity.contains(order),
            })
        })
        .collect()
}

/// `|u^(d)(x) - value|` for each point condition, evaluated on the piece the
/// condition is attached to.
pub fn condition_report(sol: &PiecewiseSolution, bvp: &PiecewiseBvp) -> Vec<ConditionViolation> {
    bvp.conditions
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let violation = match bvp.condition_piece(c.x) {
                Some(k) => (sol.pieces[k].eval(c.x, c.deriv) - c.value).abs(),
                None => f64::INFINITY,
            };
            ConditionViolation {
                index: i,
                x: c.x,
                deriv: c.deriv,
                violation,
            }
        })
        .collect()
}

/// Max of `|exact - numeric|` for `u` over `grid_points` uniform points.
pub fn compare_solutions(
    exact: &PiecewiseSolution,
    numeric: &NumericSolution,
    grid_points: usize,
) -> Result<f64, VerifyError> {
    compare_with(|x| exact.eval(x, 0).ok(), exact.domain(), numeric, grid_points)
}

/// Max of `|a - b|` for two numeric solutions on the same domain.
pub fn compare_numeric(a: &NumericSolution, b: &NumericSolution, grid_points: usize) -> Result<f64, VerifyError> {
    compare_with(|x| sample(a, x, 0).ok(), a.domain(), b, grid_points)
}

fn compare_with(
    f: impl Fn(f64) -> Option<f64>,
    (a, b): (f64, f64),
    numeric: &NumericSolution,
    grid_points: usize,
) -> Result<f64, VerifyError> {
    if grid_points < 2 {
        return Err(VerifyError::TooFewPoints(grid_points));
    }
    let (na, nb) = numeric.domain();
    if a != na || b != nb {
        return Err(VerifyError::DomainMismatch(a, b, na, nb));
    }
    let last = (grid_points - 1) as f64;
    Ok((0..grid_points)
        .map(|i| {
            let x = if i + 1 == grid_points { b } else { a + (b - a) * i as f64 / last };
            match (f(x), sample(numeric, x, 0).ok()) {
                (Some(u), Some(v)) => (u - v).abs(),
                _ => f64::INFINITY,
            }
        })
        .fold(0.0, f64::max))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub residuals: Vec<PieceResidual>,
    pub jumps: Vec<Jump>,
    pub conditions: Vec<ConditionViolation>,
    pub oracle_delta: Option<f64>,
    pub tolerances: Tolerances,
    pub pass: bool,
}

impl VerificationReport {
    pub fn new(
        residuals: Vec<PieceResidual>,
        jumps: Vec<Jump>,
        conditions: Vec<ConditionViolation>,
        oracle_delta: Option<f64>,
        tolerances: Tolerances,
    ) -> Self {
        let mut report = Self {
            residuals,
            jumps,
            conditions,
            oracle_delta,
            tolerances,
            pass: false,
        };
        report.pass = report.passes(&tolerances);
        report
    }

    /// Whether every figure is within `tol`; unenforced jumps never fail.
    pub fn passes(&self, tol: &Tolerances) -> bool {
        let within = |v: f64, t: f64| v <= t;
        self.residuals.iter().all(|r| within(r.max, tol.residual))
            && self.jumps.iter().filter(|j| j.enforced).all(|j| within(j.jump, tol.jump))
            && self.conditions.iter().all(|c| within(c.violation, tol.condition))
            && self.oracle_delta.is_none_or(|d| within(d, tol.oracle))
    }

    pub fn with_tolerances(mut self, tol: Tolerances) -> Self {
        self.tolerances = tol;
        self.pass = self.passes(&tol);
        self
    }

    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().map(|r| r.max).fold(0.0, f64::max)
    }

    pub fn max_enforced_jump(&self) -> f64 {
        self.jumps.iter().filter(|j| j.enforced).map(|j| j.jump).fold(0.0, f64::max)
    }

    pub fn max_condition_violation(&self) -> f64 {
        self.conditions.iter().map(|c| c.violation).fold(0.0, f64::max)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Residual, continuity and condition checks, plus the oracle delta when a
/// numeric solution is supplied.
pub fn verify(
    sol: &PiecewiseSolution,
    bvp: &PiecewiseBvp,
    numeric: Option<&NumericSolution>,
    tolerances: Tolerances,
) -> Result<VerificationReport, VerifyError> {
    let oracle_delta = numeric
        .map(|num| compare_solutions(sol, num, DEFAULT_COMPARE_POINTS))
        .transpose()?;
    Ok(VerificationReport::new(
        residual_report(sol, bvp, DEFAULT_RESIDUAL_SAMPLES),
        continuity_report(sol, bvp),
        condition_report(sol, bvp),
        oracle_delta,
        tolerances,
    ))
}

/// Shooting solution of `bvp`. Directions the shooting system leaves free
/// (those fixed by pins in the closed-form system) take their initial state
/// from `exact`; every other degree of freedom is determined numerically.
pub fn oracle_solution(bvp: &PiecewiseBvp, exact: &PiecewiseSolution, h: f64) -> Result<NumericSolution, OracleError> {
    shooting_solve_anchored(bvp, h, &|k, x, j| exact.pieces[k].eval(x, j))
}

fn mark(ok: bool) -> &'static str {
    if ok {
        "ok"
    } else {
        "FAIL"
    }
}

impl fmt::Display for VerificationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tol = &self.tolerances;
        writeln!(f, "{:<28} {:>12}  {:>9}  status", "check", "value", "tol")?;
        for r in &self.residuals {
            let name = format!("residual piece {}", r.piece);
            writeln!(f, "{name:<28} {:>12.3e}  {:>9.1e}  {}", r.max, tol.residual, mark(r.max <= tol.residual))?;
        }
        for j in &self.jumps {
            let name = format!("jump x={:.6} order {}", j.x, j.order);
            if j.enforced {
                writeln!(f, "{name:<28} {:>12.3e}  {:>9.1e}  {}", j.jump, tol.jump, mark(j.jump <= tol.jump))?;
            } else {
                writeln!(f, "{name:<28} {:>12.3e}  {:>9}  info", j.jump, "-")?;
            }
        }
        for c in &self.conditions {
            let name = format!("condition {} (x={:.6}, d={})", c.index, c.x, c.deriv);
            writeln!(
                f,
                "{name:<28} {:>12.3e}  {:>9.1e}  {}",
                c.violation,
                tol.condition,
                mark(c.violation <= tol.condition)
            )?;
        }
        if let Some(d) = self.oracle_delta {
            writeln!(f, "{:<28} {:>12.3e}  {:>9.1e}  {}", "oracle delta", d, tol.oracle, mark(d <= tol.oracle))?;
        }
        write!(f, "overall: {}", if self.pass { "PASS" } else { "FAIL" })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::solve_exact;
    use crate::model::{build_second_order, normalize_piece, ContinuitySpec, PointCondition};
    use crate::oracle::shooting_solve;
    use crate::poly::Poly;
    use proptest::prelude::*;

    fn ex311() -> PiecewiseBvp {
        build_second_order(
            Poly::zero(),
            1.0,
            -1.0,
            [-1.0, -0.5, 0.5, 1.0],
            vec![PointCondition::new(-1.0, 0, 0.0), PointCondition::new(1.0, 0, 0.0)],
        )
        .unwrap()
    }

    fn unit_line() -> PiecewiseBvp {
        PiecewiseBvp::new(
            2,
            vec![normalize_piece(1, &[], &Poly::zero(), (0.0, 1.0), 2).unwrap()],
            vec![PointCondition::new(0.0, 0, 0.0), PointCondition::new(1.0, 0, 0.0)],
            ContinuitySpec::full(2),
        )
    }

    #[test]
    fn first_example_passes_everything() {
        let bvp = ex311();
        let sol = solve_exact(&bvp).unwrap();
        let num = shooting_solve(&bvp, 1e-3).unwrap();
        let report = verify(&sol, &bvp, Some(&num), Tolerances::default()).unwrap();
        assert!(report.pass, "{report}");
        assert!(report.max_residual() <= 1e-10);
        assert!(report.oracle_delta.unwrap() <= 1e-6);
    }

    #[test]
    fn value_at_interface_from_both_sides() {
        let bvp = ex311();
        let sol = solve_exact(&bvp).unwrap();
        let e = std::f64::consts::E;
        let want = (e - 1.0) / (1.0 + 3.0 * e);
        assert!((sol.pieces[0].eval(-0.5, 0) - want).abs() < 1e-12);
        assert!((sol.pieces[1].eval(-0.5, 0) - want).abs() < 1e-12);
    }

    #[test]
    fn perturbed_particular_shows_in_residual() {
        let bvp = ex311();
        let mut sol = solve_exact(&bvp).unwrap();
        let mut c = sol.pieces[1].particular.coeffs().to_vec();
        c[0] += 1e-3;
        sol.pieces[1].particular = Poly::new(c);
        let res = residual_report(&sol, &bvp, 16);
        assert!(res[1].max >= 1e-4);
        assert!(res[0].max <= 1e-12);
    }

    #[test]
    fn perturbed_constant_shows_in_jump() {
        let bvp = ex311();
        let mut sol = solve_exact(&bvp).unwrap();
        sol.pieces[0].constants[0] += 1e-3;
        let jumps = continuity_report(&sol, &bvp);
        let j = jumps.iter().find(|j| j.breakpoint == 1 && j.order == 0).unwrap();
        assert!((j.jump - 1e-3).abs() < 1e-12);
        let report = verify(&sol, &bvp, None, Tolerances::default()).unwrap();
        assert!(!report.pass);
    }

    #[test]
    fn zero_problem_has_zero_residual_and_no_jumps() {
        let bvp = unit_line();
        let sol = solve_exact(&bvp).unwrap();
        assert!(residual_report(&sol, &bvp, 8).iter().all(|r| r.max == 0.0));
        assert!(continuity_report(&sol, &bvp).is_empty());
    }

    #[test]
    fn oracle_against_itself_is_zero() {
        let bvp = ex311();
        let num = shooting_solve(&bvp, 1e-2).unwrap();
        assert_eq!(compare_numeric(&num, &num, 301).unwrap(), 0.0);
    }

    #[test]
    fn domain_mismatch() {
        let bvp = ex311();
        let sol = solve_exact(&bvp).unwrap();
        let num = shooting_solve(&unit_line(), 0.1).unwrap();
        assert!(matches!(compare_solutions(&sol, &num, 11), Err(VerifyError::DomainMismatch(..))));
    }

    #[test]
    fn report_serializes_and_renders() {
        let bvp = ex311();
        let sol = solve_exact(&bvp).unwrap();
        let report = verify(&sol, &bvp, None, Tolerances::default()).unwrap();
        let back: VerificationReport = serde_json::from_str(&report.to_json()).unwrap();
        assert_eq!(back, report);
        let table = report.to_string();
        assert!(table.contains("residual piece 2"));
        assert!(table.ends_with("overall: PASS"));
    }

    #[test]
    fn residual_max_grows_on_nested_samples() {
        let bvp = ex311();
        let mut sol = solve_exact(&bvp).unwrap();
        sol.pieces[1].particular = Poly::new(vec![0.3, 0.1, -0.2]);
        let mut prev = 0.0;
        for n in [3, 7, 15, 31, 63] {
            let m = residual_report(&sol, &bvp, n)[1].max;
            assert!(m >= prev);
            prev = m;
        }
    }

    fn arb_report() -> impl Strategy<Value = VerificationReport> {
        (
            proptest::collection::vec(0.0f64..1e-7, 1..4),
            proptest::collection::vec((0.0f64..1e-8, any::<bool>()), 0..6),
            proptest::collection::vec(0.0f64..1e-8, 0..4),
            proptest::option::of(0.0f64..1e-5),
        )
            .prop_map(|(r, j, c, o)| {
                VerificationReport::new(
                    r.into_iter().enumerate().map(|(piece, max)| PieceResidual { piece, max }).collect(),
                    j.into_iter()
                        .enumerate()
                        .map(|(i, (jump, enforced))| Jump { breakpoint: 1 + i / 2, x: 0.0, order: i % 2, jump, enforced })
                        .collect(),
                    c.into_iter()
                        .enumerate()
                        .map(|(index, violation)| ConditionViolation { index, x: 0.0, deriv: 0, violation })
                        .collect(),
                    o,
                    Tolerances::default(),
                )
            })
    }

    proptest! {
        #[test]
        fn pass_is_monotone_in_tolerances(report in arb_report(), scale in proptest::array::uniform4(1.0f64..100.0)) {
            let base = Tolerances::default();
            let loose = Tolerances {
                residual: base.residual * scale[0],
                jump: base.jump * scale[1],
                condition: base.condition * scale[2],
                oracle: base.oracle * scale[3],
            };
            if report.pass {
                prop_assert!(report.passes(&loose));
            }
        }
    }
}
