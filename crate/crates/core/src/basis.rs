//! Characteristic roots and real fundamental solutions of a piece's
//! homogeneous operator `u^(n) - sum_j a_j u^(j)`.

use std::cmp::Ordering;
use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::PieceOde;
use crate::poly::{falling_factorial, Poly};

pub const DEFAULT_CLUSTER_TOL: f64 = 1e-8;

const SCHUR_MAX_ITER: usize = 20_000;
const SCHUR_EPS: f64 = 1e-14;

/// Candidate radius (relative) for roots that may be one numerically split
/// multiple root; eigenvalues of a defective companion matrix separate by
/// roughly `sqrt(eps)`.
const SPLIT_ROOT_RADIUS: f64 = 1e-3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BasisError {
    #[error("root finder did not converge for characteristic polynomial {0}")]
    NoConvergence(Poly),
    #[error("characteristic polynomial {0} must be monic with degree 1..=4")]
    BadPolynomial(Poly),
    #[error("complex root {0} has no conjugate partner")]
    UnpairedRoot(Complex64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CharRoot {
    pub value: Complex64,
    pub multiplicity: usize,
}

/// One real fundamental solution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BasisFunction {
    /// `x^k e^(lambda x)`; with `lambda = 0` this is the monomial `x^k`.
    PolyExp { k: usize, lambda: f64 },
    /// `x^k e^(alpha x) cos(beta x)`
    ExpCos { k: usize, alpha: f64, beta: f64 },
    /// `x^k e^(alpha x) sin(beta x)`
    ExpSin { k: usize, alpha: f64, beta: f64 },
}

impl BasisFunction {
    pub fn monomial(k: usize) -> Self {
        BasisFunction::PolyExp { k, lambda: 0.0 }
    }

    pub fn power(&self) -> usize {
        match *self {
            BasisFunction::PolyExp { k, .. }
            | BasisFunction::ExpCos { k, .. }
            | BasisFunction::ExpSin { k, .. } => k,
        }
    }

    fn exponent(&self) -> Complex64 {
        match *self {
            BasisFunction::PolyExp { lambda, .. } => Complex64::new(lambda, 0.0),
            BasisFunction::ExpCos { alpha, beta, .. } | BasisFunction::ExpSin { alpha, beta, .. } => {
                Complex64::new(alpha, beta)
            }
        }
    }

    fn kind_rank(&self) -> u8 {
        match self {
            BasisFunction::PolyExp { .. } => 0,
            BasisFunction::ExpCos { .. } => 1,
            BasisFunction::ExpSin { .. } => 2,
        }
    }
}

impl fmt::Display for BasisFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let k = self.power();
        let xk = match k {
            0 => String::new(),
            1 => "x".to_string(),
            _ => format!("x^{k}"),
        };
        let exp = |a: f64| {
            if a == 0.0 {
                String::new()
            } else {
                format!("e^({a}x)")
            }
        };
        let body = match *self {
            BasisFunction::PolyExp { lambda, .. } => {
                let parts: Vec<String> = [xk, exp(lambda)].into_iter().filter(|s| !s.is_empty()).collect();
                if parts.is_empty() {
                    "1".to_string()
                } else {
                    parts.join(" ")
                }
            }
            BasisFunction::ExpCos { alpha, beta, .. } => [xk, exp(alpha), format!("cos({beta}x)")]
                .into_iter()
                .filter(|s| !s.is_empty())
                .collect::<Vec<_>>()
                .join(" "),
            BasisFunction::ExpSin { alpha, beta, .. } => [xk, exp(alpha), format!("sin({beta}x)")]
                .into_iter()
                .filter(|s| !s.is_empty())
                .collect::<Vec<_>>()
                .join(" "),
        };
        f.write_str(&body)
    }
}

/// `lambda^n - sum_j a_j lambda^j`, ascending, leading coefficient 1.
pub fn characteristic_coeffs(piece: &PieceOde) -> Poly {
    let mut c: Vec<f64> = piece.coeffs.iter().map(|a| -a + 0.0).collect();
    c.resize(piece.order, 0.0);
    c.push(1.0);
    Poly::new(c)
}

/// Number of exactly-zero low-order coefficients, i.e. the multiplicity of
/// the root `lambda = 0`.
pub fn zero_root_multiplicity(coeffs: &[f64]) -> usize {
    coeffs.iter().take_while(|&&c| c == 0.0).count()
}

/// All roots of a monic polynomial of degree 1..=4, with multiplicity.
///
/// Exact zero roots are deflated first so their multiplicity is exact. The
/// remaining factor uses the quadratic formula (degree <= 2) or companion
/// matrix eigenvalues polished by Newton steps. Roots within `cluster_tol`
/// (relative) are merged and complex roots are returned as exact conjugates.
pub fn find_roots(coeffs: &Poly, cluster_tol: f64) -> Result<Vec<CharRoot>, BasisError> {
    let c = coeffs.trimmed();
    let deg = match c.degree() {
        Some(d) if (1..=4).contains(&d) && c.coeff(d) == 1.0 => d,
        _ => return Err(BasisError::BadPolynomial(coeffs.clone())),
    };
    if c.coeffs().iter().any(|v| !v.is_finite()) {
        return Err(BasisError::BadPolynomial(coeffs.clone()));
    }
    let zeros = zero_root_multiplicity(c.coeffs());
    let reduced = &c.coeffs()[zeros..];
    let d = deg - zeros;

    let mut raw: Vec<Complex64> = match d {
        0 => Vec::new(),
        1 => vec![Complex64::new(-reduced[0], 0.0)],
        2 => quadratic_roots(reduced[0], reduced[1], cluster_tol),
        _ => {
            companion_roots(reduced).ok_or_else(|| BasisError::NoConvergence(c.clone()))?
        }
    };
    if raw.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(BasisError::NoConvergence(c));
    }
    for z in raw.iter_mut() {
        if z.im.abs() <= cluster_tol * z.norm().max(1.0) {
            z.im = 0.0;
        }
        z.re += 0.0;
    }

    let mut roots = cluster(&raw, cluster_tol);
    if d >= 3 {
        roots = merge_split_roots(reduced, roots);
    }
    symmetrize_conjugates(&mut roots, cluster_tol)?;
    if zeros > 0 {
        roots.push(CharRoot {
            value: Complex64::new(0.0, 0.0),
            multiplicity: zeros,
        });
    }
    roots.sort_by(|a, b| root_order(a.value, b.value));
    Ok(roots)
}

fn root_order(a: Complex64, b: Complex64) -> Ordering {
    a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im))
}

/// Roots of `c0 + c1 x + x^2`, with a near-zero discriminant treated as a
/// double root.
fn quadratic_roots(c0: f64, c1: f64, tol: f64) -> Vec<Complex64> {
    let half = -0.5 * c1;
    let disc = half * half - c0;
    let scale = (half * half).max(c0.abs()).max(f64::MIN_POSITIVE);
    if disc.abs() <= tol * scale {
        let z = Complex64::new(half, 0.0);
        return vec![z, z];
    }
    if disc > 0.0 {
        // Avoid cancellation: compute the larger-magnitude root first.
        let s = disc.sqrt();
        let big = if half >= 0.0 { half + s } else { half - s };
        let small = c0 / big;
        vec![Complex64::new(big, 0.0), Complex64::new(small, 0.0)]
    } else {
        let s = (-disc).sqrt();
        vec![Complex64::new(half, s), Complex64::new(half, -s)]
    }
}

/// Companion eigenvalues, retried on `p(mu + shift)` when QR stalls (it does
/// on spectra such as a doubled `+-i`).
fn companion_roots(c: &[f64]) -> Option<Vec<Complex64>> {
    if let Some(r) = companion_eigenvalues(c) {
        return Some(r);
    }
    let p = Poly::new(c.to_vec());
    SHIFTS.iter().find_map(|&shift| {
        let shifted: Vec<f64> = (0..c.len())
            .map(|k| p.eval_deriv(shift, k) / falling_factorial(k, k))
            .collect();
        companion_eigenvalues(&shifted).map(|r| r.into_iter().map(|z| z + shift).collect())
    })
}

const SHIFTS: [f64; 3] = [0.3, -0.7, 1.3];

/// Eigenvalues of the companion matrix of the monic polynomial with
/// ascending coefficients `c` (the leading 1 included).
fn companion_eigenvalues(c: &[f64]) -> Option<Vec<Complex64>> {
    let d = c.len() - 1;
    let mut m = DMatrix::<f64>::zeros(d, d);
    for i in 1..d {
        m[(i, i - 1)] = 1.0;
    }
    for i in 0..d {
        m[(i, d - 1)] = -c[i];
    }
    let schur = nalgebra::linalg::Schur::try_new(m, SCHUR_EPS, SCHUR_MAX_ITER)?;
    Some(schur.complex_eigenvalues().iter().copied().collect())
}

fn newton_polish(c: &[f64], mut z: Complex64) -> Complex64 {
    for _ in 0..3 {
        let (mut p, mut dp) = (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
        for &ci in c.iter().rev() {
            dp = dp * z + p;
            p = p * z + ci;
        }
        if dp.norm() < 1e-12 {
            break;
        }
        let step = p / dp;
        let next = z - step;
        if !next.re.is_finite() || !next.im.is_finite() {
            break;
        }
        z = next;
    }
    z
}

fn cluster(raw: &[Complex64], tol: f64) -> Vec<CharRoot> {
    let mut used = vec![false; raw.len()];
    let mut out = Vec::new();
    for i in 0..raw.len() {
        if used[i] {
            continue;
        }
        used[i] = true;
        let mut members = vec![raw[i]];
        for j in (i + 1)..raw.len() {
            if !used[j] && (raw[j] - raw[i]).norm() <= tol * raw[i].norm().max(1.0) {
                used[j] = true;
                members.push(raw[j]);
            }
        }
        let mean = members.iter().sum::<Complex64>() / members.len() as f64;
        out.push(CharRoot {
            value: mean,
            multiplicity: members.len(),
        });
    }
    out
}

/// Merges nearby roots whose mean is a root of `p` to machine precision and
/// refines the merged value as a simple root of `p^(m-1)`; other roots are
/// polished on `p`. Expects unpolished eigenvalues, whose cluster means are
/// accurate even when individual members are not.
fn merge_split_roots(c: &[f64], roots: Vec<CharRoot>) -> Vec<CharRoot> {
    let p = Poly::new(c.to_vec());
    let mut used = vec![false; roots.len()];
    let mut out = Vec::new();
    for i in 0..roots.len() {
        if used[i] {
            continue;
        }
        used[i] = true;
        let mut group = vec![roots[i]];
        for j in (i + 1)..roots.len() {
            let r = roots[i].value;
            if !used[j] && (roots[j].value - r).norm() <= SPLIT_ROOT_RADIUS * r.norm().max(1.0) {
                group.push(roots[j]);
                used[j] = true;
            }
        }
        let m: usize = group.iter().map(|r| r.multiplicity).sum();
        let mean = group
            .iter()
            .map(|r| r.value * r.multiplicity as f64)
            .sum::<Complex64>()
            / m as f64;
        let scale: f64 = c
            .iter()
            .enumerate()
            .map(|(i, ci)| ci.abs() * mean.norm().powi(i as i32))
            .sum();
        if m > 1 && eval_complex(&p, mean).norm() <= 100.0 * f64::EPSILON * scale {
            let mut dp = p.clone();
            for _ in 1..m {
                dp = dp.derivative();
            }
            out.push(CharRoot {
                value: newton_polish(dp.coeffs(), mean),
                multiplicity: m,
            });
        } else {
            out.extend(group.into_iter().map(|r| CharRoot {
                value: if r.multiplicity == 1 { newton_polish(c, r.value) } else { r.value },
                ..r
            }));
        }
    }
    out
}

fn eval_complex(p: &Poly, z: Complex64) -> Complex64 {
    p.coeffs()
        .iter()
        .rev()
        .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c)
}

fn symmetrize_conjugates(roots: &mut [CharRoot], tol: f64) -> Result<(), BasisError> {
    let mut paired = vec![false; roots.len()];
    for i in 0..roots.len() {
        if paired[i] || roots[i].value.im <= 0.0 {
            continue;
        }
        let target = roots[i].value.conj();
        let partner = (0..roots.len())
            .filter(|&j| !paired[j] && j != i && roots[j].value.im < 0.0)
            .min_by(|&a, &b| {
                (roots[a].value - target)
                    .norm()
                    .total_cmp(&(roots[b].value - target).norm())
            })
            .filter(|&j| (roots[j].value - target).norm() <= 1e3 * tol * target.norm().max(1.0))
            .ok_or(BasisError::UnpairedRoot(roots[i].value))?;
        let alpha = 0.5 * (roots[i].value.re + roots[partner].value.re);
        let beta = 0.5 * (roots[i].value.im - roots[partner].value.im);
        let m = roots[i].multiplicity.min(roots[partner].multiplicity);
        roots[i] = CharRoot {
            value: Complex64::new(alpha, beta),
            multiplicity: m,
        };
        roots[partner] = CharRoot {
            value: Complex64::new(alpha, -beta),
            multiplicity: m,
        };
        paired[i] = true;
        paired[partner] = true;
    }
    match roots.iter().zip(&paired).find(|(r, &p)| r.value.im != 0.0 && !p) {
        Some((r, _)) => Err(BasisError::UnpairedRoot(r.value)),
        None => Ok(()),
    }
}

/// Real fundamental solutions for a conjugate-complete root list, sorted by
/// real part, then kind (`PolyExp`, `ExpCos`, `ExpSin`), then frequency, then power.
pub fn real_basis(roots: &[CharRoot]) -> Result<Vec<BasisFunction>, BasisError> {
    let mut out = Vec::new();
    for r in roots {
        let (alpha, beta) = (r.value.re, r.value.im);
        if beta == 0.0 {
            out.extend((0..r.multiplicity).map(|k| BasisFunction::PolyExp { k, lambda: alpha }));
        } else if beta > 0.0 {
            if !roots
                .iter()
                .any(|o| o.value == r.value.conj() && o.multiplicity == r.multiplicity)
            {
                return Err(BasisError::UnpairedRoot(r.value));
            }
            for k in 0..r.multiplicity {
                out.push(BasisFunction::ExpCos { k, alpha, beta });
                out.push(BasisFunction::ExpSin { k, alpha, beta });
            }
        } else if !roots
            .iter()
            .any(|o| o.value == r.value.conj() && o.multiplicity == r.multiplicity)
        {
            return Err(BasisError::UnpairedRoot(r.value));
        }
    }
    out.sort_by(|a, b| {
        let (ea, eb) = (a.exponent(), b.exponent());
        ea.re
            .total_cmp(&eb.re)
            .then(a.kind_rank().cmp(&b.kind_rank()))
            .then(ea.im.total_cmp(&eb.im))
            .then(a.power().cmp(&b.power()))
    });
    Ok(out)
}

/// Basis of the homogeneous equation of `piece`.
pub fn piece_basis(piece: &PieceOde) -> Result<Vec<BasisFunction>, BasisError> {
    let roots = find_roots(&characteristic_coeffs(piece), DEFAULT_CLUSTER_TOL)?;
    real_basis(&roots)
}

/// Exact `deriv`-th derivative of a basis function at `x`.
///
/// Uses Leibniz on `x^k * e^(z x)` with `z = alpha + i beta`:
/// `d^j = sum_i C(j,i) k!/(k-i)! x^(k-i) z^(j-i) e^(z x)`, taking the real or
/// imaginary part for the trigonometric kinds.
pub fn eval_basis(f: &BasisFunction, x: f64, deriv: usize) -> f64 {
    let k = f.power();
    let z = f.exponent();
    let ez = if z.im == 0.0 {
        Complex64::new((z.re * x).exp(), 0.0)
    } else {
        (z * x).exp()
    };
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..=deriv.min(k) {
        let coeff = binomial(deriv, i) * falling_factorial(k, i) * x.powi((k - i) as i32);
        acc += z.powu((deriv - i) as u32) * coeff;
    }
    let v = acc * ez;
    match f {
        BasisFunction::ExpSin { .. } => v.im,
        _ => v.re,
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    falling_factorial(n, k) / falling_factorial(k, k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::normalize_piece;
    use proptest::prelude::*;
    use std::f64::consts::E;

    fn piece(coeffs: &[f64], order: usize) -> PieceOde {
        normalize_piece(1, coeffs, &Poly::zero(), (0.0, 1.0), order).unwrap()
    }

    fn approx(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn characteristic_polynomials() {
        assert_eq!(characteristic_coeffs(&piece(&[1.0], 2)).coeffs(), &[-1.0, 0.0, 1.0]);
        assert_eq!(characteristic_coeffs(&piece(&[1.0], 3)).coeffs(), &[-1.0, 0.0, 0.0, 1.0]);
        assert_eq!(characteristic_coeffs(&piece(&[], 2)).coeffs(), &[0.0, 0.0, 1.0]);
    }

    #[test]
    fn roots_of_lambda_squared_minus_one() {
        let r = find_roots(&Poly::new(vec![-1.0, 0.0, 1.0]), DEFAULT_CLUSTER_TOL).unwrap();
        assert_eq!(r.len(), 2);
        assert_eq!(r[0].value, Complex64::new(-1.0, 0.0));
        assert_eq!(r[1].value, Complex64::new(1.0, 0.0));
    }

    #[test]
    fn roots_of_lambda_cubed_minus_one() {
        let r = find_roots(&Poly::new(vec![-1.0, 0.0, 0.0, 1.0]), DEFAULT_CLUSTER_TOL).unwrap();
        assert_eq!(r.len(), 3);
        let b = 3f64.sqrt() / 2.0;
        assert!(approx(r[0].value.re, -0.5, 1e-14) && approx(r[0].value.im, -b, 1e-14));
        assert!(approx(r[1].value.re, -0.5, 1e-14) && approx(r[1].value.im, b, 1e-14));
        assert_eq!(r[0].value, r[1].value.conj());
        assert!(approx(r[2].value.re, 1.0, 1e-14) && r[2].value.im == 0.0);
    }

    #[test]
    fn golden_ratio_roots() {
        let r = find_roots(&Poly::new(vec![-1.0, -1.0, 1.0]), DEFAULT_CLUSTER_TOL).unwrap();
        let s5 = 5f64.sqrt();
        assert!(approx(r[0].value.re, (1.0 - s5) / 2.0, 1e-15));
        assert!(approx(r[1].value.re, (1.0 + s5) / 2.0, 1e-15));
    }

    #[test]
    fn double_zero_root() {
        let r = find_roots(&Poly::new(vec![0.0, 0.0, 1.0]), DEFAULT_CLUSTER_TOL).unwrap();
        assert_eq!(
            r,
            vec![CharRoot {
                value: Complex64::new(0.0, 0.0),
                multiplicity: 2
            }]
        );
    }

    #[test]
    fn double_nonzero_root_from_quadratic() {
        // (lambda - 2)^2
        let r = find_roots(&Poly::new(vec![4.0, -4.0, 1.0]), DEFAULT_CLUSTER_TOL).unwrap();
        assert_eq!(r.len(), 1);
        assert_eq!(r[0].multiplicity, 2);
        assert_eq!(r[0].value.re, 2.0);
    }

    #[test]
    fn rejects_non_monic() {
        assert!(matches!(
            find_roots(&Poly::new(vec![1.0, 2.0]), DEFAULT_CLUSTER_TOL),
            Err(BasisError::BadPolynomial(_))
        ));
    }

    #[test]
    fn basis_for_real_pair() {
        let b = piece_basis(&piece(&[1.0], 2)).unwrap();
        assert_eq!(
            b,
            vec![
                BasisFunction::PolyExp { k: 0, lambda: -1.0 },
                BasisFunction::PolyExp { k: 0, lambda: 1.0 }
            ]
        );
    }

    #[test]
    fn basis_for_cube_roots_of_unity() {
        let b = piece_basis(&piece(&[1.0], 3)).unwrap();
        assert_eq!(b.len(), 3);
        assert!(matches!(b[0], BasisFunction::ExpCos { k: 0, alpha, beta } if approx(alpha, -0.5, 1e-14) && approx(beta, 3f64.sqrt() / 2.0, 1e-14)));
        assert!(matches!(b[1], BasisFunction::ExpSin { k: 0, .. }));
        assert!(matches!(b[2], BasisFunction::PolyExp { k: 0, lambda } if approx(lambda, 1.0, 1e-14)));
    }

    #[test]
    fn basis_for_double_zero_is_affine() {
        let b = piece_basis(&piece(&[], 2)).unwrap();
        assert_eq!(b, vec![BasisFunction::monomial(0), BasisFunction::monomial(1)]);
        assert_eq!(b[0].to_string(), "1");
        assert_eq!(b[1].to_string(), "x");
    }

    #[test]
    fn basis_with_repeated_complex_pair() {
        // (lambda^2 + 1)^2 = lambda^4 + 2 lambda^2 + 1: cos x, x cos x, sin x, x sin x
        let b = piece_basis(&piece(&[-1.0, 0.0, -2.0, 0.0], 4)).unwrap();
        assert_eq!(b.len(), 4);
        assert!(matches!(b[0], BasisFunction::ExpCos { k: 0, .. }));
        assert!(matches!(b[1], BasisFunction::ExpCos { k: 1, .. }));
        assert!(matches!(b[2], BasisFunction::ExpSin { k: 0, .. }));
        assert!(matches!(b[3], BasisFunction::ExpSin { k: 1, .. }));
    }

    fn multiplicities(c: &[f64]) -> Vec<(f64, f64, usize)> {
        find_roots(&Poly::new(c.to_vec()), DEFAULT_CLUSTER_TOL)
            .unwrap()
            .iter()
            .map(|r| (r.value.re, r.value.im, r.multiplicity))
            .collect()
    }

    #[test]
    fn triple_and_quadruple_real_roots_are_detected() {
        // (l - 1)^3 and (l - 1)^4
        assert_eq!(multiplicities(&[-1.0, 3.0, -3.0, 1.0]), vec![(1.0, 0.0, 3)]);
        assert_eq!(multiplicities(&[1.0, -4.0, 6.0, -4.0, 1.0]), vec![(1.0, 0.0, 4)]);
        // (l - 3/2)^3
        assert_eq!(multiplicities(&[-3.375, 6.75, -4.5, 1.0]), vec![(1.5, 0.0, 3)]);
    }

    #[test]
    fn double_root_next_to_complex_pair() {
        // (l + 1/4)^2 (l^2 - l/2 + 5/16)
        let r = multiplicities(&[0.01953125, 0.125, 0.125, 0.0, 1.0]);
        assert_eq!(r, vec![(-0.25, 0.0, 2), (0.25, -0.5, 1), (0.25, 0.5, 1)]);
    }

    #[test]
    fn close_distinct_roots_stay_separate() {
        // (l - 1)(l - 1.0001)(l + 2)
        let prod = [1.0f64, 1.0001, -2.0];
        let c0 = -prod.iter().product::<f64>();
        let c1 = prod[0] * prod[1] + prod[0] * prod[2] + prod[1] * prod[2];
        let c2 = -prod.iter().sum::<f64>();
        let r = multiplicities(&[c0, c1, c2, 1.0]);
        assert_eq!(r.len(), 3);
        assert!(r.iter().all(|&(_, im, m)| im == 0.0 && m == 1));
        assert!((r[1].0 - 1.0).abs() < 1e-9 && (r[2].0 - 1.0001).abs() < 1e-9);
    }

    #[test]
    fn real_basis_rejects_unpaired_root() {
        let roots = [CharRoot {
            value: Complex64::new(0.0, 1.0),
            multiplicity: 1,
        }];
        assert!(matches!(real_basis(&roots), Err(BasisError::UnpairedRoot(_))));
    }

    #[test]
    fn eval_basis_examples() {
        let ex = BasisFunction::PolyExp { k: 0, lambda: 1.0 };
        assert_eq!(eval_basis(&ex, 0.0, 0), 1.0);
        assert!(approx(eval_basis(&ex, 1.0, 1), E, 1e-15));
        let c = BasisFunction::ExpCos {
            k: 0,
            alpha: -0.5,
            beta: 3f64.sqrt() / 2.0,
        };
        assert!(approx(eval_basis(&c, 0.0, 1), -0.5, 1e-15));
        // d^2/dx^2 x^2 = 2, d^3 = 0
        assert_eq!(eval_basis(&BasisFunction::monomial(2), 0.3, 2), 2.0);
        assert_eq!(eval_basis(&BasisFunction::monomial(2), 0.3, 3), 0.0);
    }

    fn arb_basis() -> impl Strategy<Value = BasisFunction> {
        (0usize..3, -2.0f64..2.0, 0.1f64..3.0, 0u8..3).prop_map(|(k, a, b, kind)| match kind {
            0 => BasisFunction::PolyExp { k, lambda: a },
            1 => BasisFunction::ExpCos { k, alpha: a, beta: b },
            _ => BasisFunction::ExpSin { k, alpha: a, beta: b },
        })
    }

    proptest! {
        #[test]
        fn derivative_matches_central_difference(b in arb_basis(), x in -1.0f64..std::f64::consts::PI, k in 0usize..=3) {
            let h = 1e-5;
            let fd = (eval_basis(&b, x + h, k) - eval_basis(&b, x - h, k)) / (2.0 * h);
            let exact = eval_basis(&b, x, k + 1);
            prop_assert!((exact - fd).abs() <= 1e-5 * (1.0 + exact.abs()), "{b}: {exact} vs {fd}");
        }

        #[test]
        fn root_product_reconstructs_polynomial(c in proptest::collection::vec(-10.0f64..10.0, 2..=4)) {
            let mut coeffs = c.clone();
            coeffs.push(1.0);
            let p = Poly::new(coeffs.clone());
            let roots = find_roots(&p, DEFAULT_CLUSTER_TOL).unwrap();
            prop_assert_eq!(roots.iter().map(|r| r.multiplicity).sum::<usize>(), c.len());
            let mut prod = vec![Complex64::new(1.0, 0.0)];
            for r in &roots {
                for _ in 0..r.multiplicity {
                    let mut next = vec![Complex64::new(0.0, 0.0); prod.len() + 1];
                    for (i, &a) in prod.iter().enumerate() {
                        next[i + 1] += a;
                        next[i] -= a * r.value;
                    }
                    prod = next;
                }
            }
            for (i, want) in coeffs.iter().enumerate() {
                prop_assert!((prod[i].re - want).abs() <= 1e-8 && prod[i].im.abs() <= 1e-8);
            }
        }

        #[test]
        fn basis_annihilates_operator(c in proptest::collection::vec(-3.0f64..3.0, 2..=4)) {
            let order = c.len();
            let p = piece(&c, order);
            let basis = piece_basis(&p).unwrap();
            prop_assert_eq!(basis.len(), order);
            for b in &basis {
                for i in 0..100 {
                    let x = i as f64 / 99.0;
                    let lhs = eval_basis(b, x, order);
                    let rhs: f64 = (0..order).map(|j| p.coeffs[j] * eval_basis(b, x, j)).sum();
                    let scale = 1.0 + lhs.abs();
                    prop_assert!((lhs - rhs).abs() <= 1e-9 * scale, "{b} at {x}: {lhs} vs {rhs}");
                }
            }
        }
    }
}
