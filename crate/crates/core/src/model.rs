//! Piecewise linear boundary-value problems in normalized form.
//!
//! Every piece carries a constant-coefficient equation
//! `u^(n)(x) = a_0 u + a_1 u' + ... + a_{n-1} u^(n-1) + q(x)` with polynomial
//! forcing `q`. Pieces tile `[a, b]` left to right; each piece owns `[lo, hi)`
//! except the last, which is closed at `b`.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::poly::Poly;

pub const MIN_ORDER: usize = 2;
pub const MAX_ORDER: usize = 4;
pub const MAX_FORCING_DEGREE: usize = 6;
pub const MAX_PIECES: usize = 16;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("order {0} is not supported (expected {MIN_ORDER}..={MAX_ORDER})")]
    InvalidOrder(usize),
    #[error("degenerate interval [{lo}, {hi}]")]
    DegenerateInterval { lo: f64, hi: f64 },
    #[error("leading sign must be +1 or -1, got {0}")]
    InvalidSign(i32),
    #[error("expected {expected} coefficients for order {order}, got {got}")]
    CoefficientCount {
        order: usize,
        expected: usize,
        got: usize,
    },
    #[error("forcing degree {0} exceeds the supported maximum {MAX_FORCING_DEGREE}")]
    ForcingDegree(usize),
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("breakpoints must be strictly increasing, got {0:?}")]
    BreakpointOrder(Vec<f64>),
}

/// One interval's equation `u^(n) = sum_j coeffs[j] u^(j) + forcing(x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PieceOde {
    pub order: usize,
    pub lo: f64,
    pub hi: f64,
    pub coeffs: Vec<f64>,
    pub forcing: Poly,
}

impl PieceOde {
    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    /// Right-hand side `sum_j a_j u^(j) + q(x)` for a state `(u, u', ...)`.
    pub fn rhs(&self, x: f64, state: &[f64]) -> f64 {
        self.coeffs
            .iter()
            .zip(state)
            .map(|(a, u)| a * u)
            .sum::<f64>()
            + self.forcing.eval(x)
    }
}

/// Builds a normalized piece from `sign * u^(n) = raw_coeffs . (u, u', ...) + raw_forcing`.
///
/// With `sign = -1` both the coefficients and the forcing are negated so the
/// stored equation always has `+u^(n)` on the left.
pub fn normalize_piece(
    sign: i32,
    raw_coeffs: &[f64],
    raw_forcing: &Poly,
    interval: (f64, f64),
    order: usize,
) -> Result<PieceOde, ModelError> {
    if !(MIN_ORDER..=MAX_ORDER).contains(&order) {
        return Err(ModelError::InvalidOrder(order));
    }
    let (lo, hi) = interval;
    if !lo.is_finite() || !hi.is_finite() {
        return Err(ModelError::NonFinite("interval"));
    }
    if lo >= hi {
        return Err(ModelError::DegenerateInterval { lo, hi });
    }
    let s = match sign {
        1 => 1.0,
        -1 => -1.0,
        other => return Err(ModelError::InvalidSign(other)),
    };
    if raw_coeffs.len() > order {
        return Err(ModelError::CoefficientCount {
            order,
            expected: order,
            got: raw_coeffs.len(),
        });
    }
    if raw_coeffs.iter().any(|c| !c.is_finite()) {
        return Err(ModelError::NonFinite("coefficients"));
    }
    if raw_forcing.coeffs().iter().any(|c| !c.is_finite()) {
        return Err(ModelError::NonFinite("forcing"));
    }
    if let Some(d) = raw_forcing.degree() {
        if d > MAX_FORCING_DEGREE {
            return Err(ModelError::ForcingDegree(d));
        }
    }
    // Missing high-order coefficients are zero.
    let mut coeffs = vec![0.0; order];
    for (dst, &c) in coeffs.iter_mut().zip(raw_coeffs) {
        // `+ 0.0` turns a negated zero into a plain zero.
        *dst = s * c + 0.0;
    }
    Ok(PieceOde {
        order,
        lo,
        hi,
        coeffs,
        forcing: raw_forcing.trimmed().scale(s),
    })
}

/// `u^(deriv)(x) = value`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointCondition {
    pub x: f64,
    pub deriv: usize,
    pub value: f64,
}

impl PointCondition {
    pub fn new(x: f64, deriv: usize, value: f64) -> Self {
        Self { x, deriv, value }
    }
}

/// Derivative orders matched across every interior breakpoint.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ContinuitySpec {
    orders: BTreeSet<usize>,
}

impl ContinuitySpec {
    pub fn new(orders: impl IntoIterator<Item = usize>) -> Self {
        Self {
            orders: orders.into_iter().collect(),
        }
    }

    /// Orders `0..n`, i.e. a `C^(n-1)` join.
    pub fn full(order: usize) -> Self {
        Self::new(0..order)
    }

    pub fn orders(&self) -> impl Iterator<Item = usize> + '_ {
        self.orders.iter().copied()
    }

    pub fn contains(&self, order: usize) -> bool {
        self.orders.contains(&order)
    }

    pub fn len(&self) -> usize {
        self.orders.len()
    }

    pub fn is_empty(&self) -> bool {
        self.orders.is_empty()
    }
}

/// Fixes the constant multiplying basis function `basis` on piece `piece`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PinnedConstant {
    pub piece: usize,
    pub basis: usize,
    pub value: f64,
}

/// Which piece evaluates a point condition located on an interior breakpoint.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BreakpointSide {
    #[default]
    Left,
    Right,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseBvp {
    pub order: usize,
    pub pieces: Vec<PieceOde>,
    pub conditions: Vec<PointCondition>,
    pub continuity: ContinuitySpec,
    pub pins: Vec<PinnedConstant>,
    pub condition_side: BreakpointSide,
}

impl PiecewiseBvp {
    pub fn new(
        order: usize,
        pieces: Vec<PieceOde>,
        conditions: Vec<PointCondition>,
        continuity: ContinuitySpec,
    ) -> Self {
        Self {
            order,
            pieces,
            conditions,
            continuity,
            pins: Vec::new(),
            condition_side: BreakpointSide::Left,
        }
    }

    pub fn with_pins(mut self, pins: Vec<PinnedConstant>) -> Self {
        self.pins = pins;
        self
    }

    pub fn with_condition_side(mut self, side: BreakpointSide) -> Self {
        self.condition_side = side;
        self
    }

    /// `(a, b)`; panics on a problem without pieces.
    pub fn domain(&self) -> (f64, f64) {
        (
            self.pieces.first().expect("problem has no pieces").lo,
            self.pieces.last().expect("problem has no pieces").hi,
        )
    }

    /// All piece endpoints, `a` through `b`.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut out: Vec<f64> = self.pieces.iter().map(|p| p.lo).collect();
        if let Some(last) = self.pieces.last() {
            out.push(last.hi);
        }
        out
    }

    pub fn unknown_count(&self) -> usize {
        self.order * self.pieces.len()
    }

    /// Piece whose closed form is used at `x`: breakpoints belong to the
    /// right piece, except `b` which belongs to the last one.
    pub fn owning_piece(&self, x: f64) -> Option<usize> {
        let (a, b) = self.domain();
        if !(a..=b).contains(&x) {
            return None;
        }
        let last = self.pieces.len() - 1;
        Some(
            self.pieces
                .iter()
                .position(|p| x >= p.lo && x < p.hi)
                .unwrap_or(last),
        )
    }

    /// Piece that evaluates a point condition at `x`. Interior breakpoints
    /// go to the side selected by [`PiecewiseBvp::condition_side`].
    pub fn condition_piece(&self, x: f64) -> Option<usize> {
        let k = self.owning_piece(x)?;
        if self.condition_side == BreakpointSide::Left && k > 0 && x == self.pieces[k].lo {
            Some(k - 1)
        } else {
            Some(k)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Determinacy {
    Square,
    Overdetermined,
    Underdetermined,
}

impl fmt::Display for Determinacy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Determinacy::Square => "square",
            Determinacy::Overdetermined => "overdetermined",
            Determinacy::Underdetermined => "underdetermined",
        })
    }
}

/// Pre-solve diagnostics. `equations` counts condition and continuity rows;
/// pins are counted separately and included in `determinacy`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub unknowns: usize,
    pub equations: usize,
    pub pins: usize,
    pub determinacy: Determinacy,
    pub issues: Vec<String>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.issues.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} unknowns, {} equations + {} pins ({})",
            self.unknowns, self.equations, self.pins, self.determinacy
        )?;
        for issue in &self.issues {
            write!(f, "\n  - {issue}")?;
        }
        Ok(())
    }
}

pub fn validate_bvp(bvp: &PiecewiseBvp) -> ValidationReport {
    let mut issues = Vec::new();
    let n = bvp.order;
    if !(MIN_ORDER..=MAX_ORDER).contains(&n) {
        issues.push(format!("unsupported order {n}"));
    }
    if bvp.pieces.is_empty() {
        issues.push("problem has no pieces".to_string());
    }
    if bvp.pieces.len() > MAX_PIECES {
        issues.push(format!(
            "{} pieces exceed the supported maximum {MAX_PIECES}",
            bvp.pieces.len()
        ));
    }
    for (k, p) in bvp.pieces.iter().enumerate() {
        if p.order != n {
            issues.push(format!("piece {k} has order {}, problem order is {n}", p.order));
        }
        if p.coeffs.len() != p.order {
            issues.push(format!(
                "piece {k} has {} coefficients, expected {}",
                p.coeffs.len(),
                p.order
            ));
        }
        if p.lo.partial_cmp(&p.hi) != Some(std::cmp::Ordering::Less) {
            issues.push(format!("piece {k} interval [{}, {}] is degenerate", p.lo, p.hi));
        }
        if p.forcing.degree().is_some_and(|d| d > MAX_FORCING_DEGREE) {
            issues.push(format!("piece {k} forcing degree exceeds {MAX_FORCING_DEGREE}"));
        }
    }
    for (k, w) in bvp.pieces.windows(2).enumerate() {
        if w[0].hi != w[1].lo {
            issues.push(format!(
                "pieces {k} and {} are not contiguous: {} != {}",
                k + 1,
                w[0].hi,
                w[1].lo
            ));
        }
    }
    if bvp.continuity.is_empty() && bvp.pieces.len() > 1 {
        issues.push("continuity spec is empty".to_string());
    }
    if let Some(bad) = bvp.continuity.orders().find(|&j| j >= n) {
        issues.push(format!("continuity order {bad} is not below the problem order {n}"));
    }
    if !bvp.pieces.is_empty() {
        let (a, b) = bvp.domain();
        for (i, c) in bvp.conditions.iter().enumerate() {
            if !(a..=b).contains(&c.x) {
                issues.push(format!("condition {i} at x = {} lies outside [{a}, {b}]", c.x));
            }
            if c.deriv >= n {
                issues.push(format!("condition {i} has derivative order {} >= {n}", c.deriv));
            }
            if !c.value.is_finite() {
                issues.push(format!("condition {i} has a non-finite value"));
            }
        }
    }
    for (i, pin) in bvp.pins.iter().enumerate() {
        if pin.piece >= bvp.pieces.len() || pin.basis >= n {
            issues.push(format!(
                "pin {i} refers to ({}, {}) outside {} pieces x {n} constants",
                pin.piece,
                pin.basis,
                bvp.pieces.len()
            ));
        }
    }

    let unknowns = bvp.unknown_count();
    let equations =
        bvp.conditions.len() + bvp.continuity.len() * bvp.pieces.len().saturating_sub(1);
    let rows = equations + bvp.pins.len();
    let determinacy = match rows.cmp(&unknowns) {
        std::cmp::Ordering::Equal => Determinacy::Square,
        std::cmp::Ordering::Greater => Determinacy::Overdetermined,
        std::cmp::Ordering::Less => Determinacy::Underdetermined,
    };
    ValidationReport {
        unknowns,
        equations,
        pins: bvp.pins.len(),
        determinacy,
        issues,
    }
}

/// Three-piece obstacle problem
/// `sign * u^(n) = g` outside `[c, d)` and `sign * u^(n) = f u + g + r` inside,
/// where `g` may couple derivatives of `u` (`g = sum_j g_coupling[j] u^(j) + g_poly`).
#[derive(Debug, Clone)]
pub struct ObstacleBuilder {
    pub order: usize,
    pub sign: i32,
    pub g_coupling: Vec<f64>,
    pub g_poly: Poly,
    pub f: f64,
    pub r: f64,
    /// `[a, c, d, b]`
    pub breakpoints: [f64; 4],
    pub conditions: Vec<PointCondition>,
    pub continuity: ContinuitySpec,
    pub pins: Vec<PinnedConstant>,
}

impl ObstacleBuilder {
    pub fn new(order: usize, g_poly: Poly, f: f64, r: f64, breakpoints: [f64; 4]) -> Self {
        Self {
            order,
            sign: 1,
            g_coupling: Vec::new(),
            g_poly,
            f,
            r,
            breakpoints,
            conditions: Vec::new(),
            continuity: ContinuitySpec::full(order),
            pins: Vec::new(),
        }
    }

    pub fn sign(mut self, sign: i32) -> Self {
        self.sign = sign;
        self
    }

    pub fn g_coupling(mut self, coupling: Vec<f64>) -> Self {
        self.g_coupling = coupling;
        self
    }

    pub fn conditions(mut self, conditions: Vec<PointCondition>) -> Self {
        self.conditions = conditions;
        self
    }

    pub fn continuity(mut self, continuity: ContinuitySpec) -> Self {
        self.continuity = continuity;
        self
    }

    pub fn pins(mut self, pins: Vec<PinnedConstant>) -> Self {
        self.pins = pins;
        self
    }

    pub fn build(self) -> Result<PiecewiseBvp, ModelError> {
        let [a, c, d, b] = self.breakpoints;
        if !(a < c && c < d && d < b) {
            return Err(ModelError::BreakpointOrder(self.breakpoints.to_vec()));
        }
        let n = self.order;
        let mut outer = vec![0.0; n];
        for (dst, &g) in outer.iter_mut().zip(&self.g_coupling) {
            *dst = g;
        }
        if self.g_coupling.len() > n {
            return Err(ModelError::CoefficientCount {
                order: n,
                expected: n,
                got: self.g_coupling.len(),
            });
        }
        let mut middle = outer.clone();
        middle[0] += self.f;
        let middle_forcing = self.g_poly.add(&Poly::constant(self.r));

        let pieces = vec![
            normalize_piece(self.sign, &outer, &self.g_poly, (a, c), n)?,
            normalize_piece(self.sign, &middle, &middle_forcing, (c, d), n)?,
            normalize_piece(self.sign, &outer, &self.g_poly, (d, b), n)?,
        ];
        Ok(PiecewiseBvp::new(n, pieces, self.conditions, self.continuity).with_pins(self.pins))
    }
}

/// `u'' = g` on `[a,c)` and `[d,b]`, `u'' = f u + g + r` on `[c,d)`, with
/// `u` and `u'` continuous.
pub fn build_second_order(
    g: Poly,
    f: f64,
    r: f64,
    breakpoints: [f64; 4],
    conditions: Vec<PointCondition>,
) -> Result<PiecewiseBvp, ModelError> {
    ObstacleBuilder::new(2, g, f, r, breakpoints)
        .conditions(conditions)
        .build()
}

/// Third-order analogue of [`build_second_order`]; continuity defaults to
/// `u, u', u''`.
pub fn build_third_order(
    g: Poly,
    f: f64,
    r: f64,
    breakpoints: [f64; 4],
    conditions: Vec<PointCondition>,
) -> Result<PiecewiseBvp, ModelError> {
    ObstacleBuilder::new(3, g, f, r, breakpoints)
        .conditions(conditions)
        .build()
}

/// Fourth-order analogue of [`build_second_order`]; continuity defaults to
/// orders 0 through 3.
pub fn build_fourth_order(
    g: Poly,
    f: f64,
    r: f64,
    breakpoints: [f64; 4],
    conditions: Vec<PointCondition>,
) -> Result<PiecewiseBvp, ModelError> {
    ObstacleBuilder::new(4, g, f, r, breakpoints)
        .conditions(conditions)
        .build()
}
