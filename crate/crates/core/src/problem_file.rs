//! JSON problem files.
//!
//! ```json
//! {
//!   "order": 2,
//!   "pieces": [{ "interval": [0.0, 1.0], "sign": 1, "coeffs": [1.0, 0.0], "forcing": [-1.0] }],
//!   "conditions": [{ "x": 0.0, "deriv": 0, "value": 0.0 }],
//!   "continuity": [0, 1],
//!   "pins": [{ "piece": 0, "basis": 0, "value": 1.0 }]
//! }
//! ```
//!
//! Each piece reads `sign * u^(n) = sum coeffs[j] u^(j) + forcing(x)`.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{
    normalize_piece, validate_bvp, BreakpointSide, ContinuitySpec, ModelError, PiecewiseBvp,
    PinnedConstant, PointCondition, ValidationReport,
};
use crate::poly::Poly;

#[derive(Debug, Error)]
pub enum ProblemFileError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("malformed problem file: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("piece {piece}: {source}")]
    Piece { piece: usize, source: ModelError },
    #[error("invalid problem: {0}")]
    Invalid(ValidationReport),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PieceSpec {
    pub interval: [f64; 2],
    #[serde(default = "default_sign")]
    pub sign: i32,
    #[serde(default)]
    pub coeffs: Vec<f64>,
    #[serde(default)]
    pub forcing: Vec<f64>,
}

fn default_sign() -> i32 {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub order: usize,
    pub pieces: Vec<PieceSpec>,
    #[serde(default)]
    pub conditions: Vec<PointCondition>,
    pub continuity: ContinuitySpec,
    #[serde(default)]
    pub pins: Vec<PinnedConstant>,
    #[serde(default, skip_serializing_if = "is_left")]
    pub condition_side: BreakpointSide,
}

fn is_left(side: &BreakpointSide) -> bool {
    *side == BreakpointSide::Left
}

impl ProblemFile {
    /// Normalized pieces are written with sign `+1`.
    pub fn from_bvp(bvp: &PiecewiseBvp) -> Self {
        Self {
            order: bvp.order,
            pieces: bvp
                .pieces
                .iter()
                .map(|p| PieceSpec {
                    interval: [p.lo, p.hi],
                    sign: 1,
                    coeffs: p.coeffs.clone(),
                    forcing: p.forcing.coeffs().to_vec(),
                })
                .collect(),
            conditions: bvp.conditions.clone(),
            continuity: bvp.continuity.clone(),
            pins: bvp.pins.clone(),
            condition_side: bvp.condition_side,
        }
    }

    /// Normalizes pieces and validates the assembled problem.
    pub fn to_bvp(&self) -> Result<PiecewiseBvp, ProblemFileError> {
        let pieces = self
            .pieces
            .iter()
            .enumerate()
            .map(|(k, p)| {
                normalize_piece(
                    p.sign,
                    &p.coeffs,
                    &Poly::new(p.forcing.clone()),
                    (p.interval[0], p.interval[1]),
                    self.order,
                )
                .map_err(|source| ProblemFileError::Piece { piece: k, source })
            })
            .collect::<Result<Vec<_>, _>>()?;
        let bvp = PiecewiseBvp::new(self.order, pieces, self.conditions.clone(), self.continuity.clone())
            .with_pins(self.pins.clone())
            .with_condition_side(self.condition_side);
        let report = validate_bvp(&bvp);
        if !report.is_valid() {
            return Err(ProblemFileError::Invalid(report));
        }
        Ok(bvp)
    }
}

pub fn parse_problem(text: &str) -> Result<PiecewiseBvp, ProblemFileError> {
    serde_json::from_str::<ProblemFile>(text)?.to_bvp()
}

pub fn export_problem(bvp: &PiecewiseBvp) -> String {
    serde_json::to_string_pretty(&ProblemFile::from_bvp(bvp)).expect("problem serializes")
}

pub fn read_problem(path: &Path) -> Result<PiecewiseBvp, ProblemFileError> {
    let text = std::fs::read_to_string(path).map_err(|source| ProblemFileError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_problem(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::examples::{get_example, EXAMPLE_IDS};

    #[test]
    fn registry_round_trips_bitwise() {
        for id in EXAMPLE_IDS {
            let bvp = get_example(id).unwrap().bvp;
            let back = parse_problem(&export_problem(&bvp)).unwrap();
            assert_eq!(back, bvp, "{id}");
            for (p, q) in back.pieces.iter().zip(&bvp.pieces) {
                assert_eq!(p.lo.to_bits(), q.lo.to_bits());
                assert_eq!(p.hi.to_bits(), q.hi.to_bits());
            }
        }
    }

    #[test]
    fn negative_sign_is_normalized() {
        let text = r#"{
            "order": 2,
            "pieces": [{"interval": [0, 1], "sign": -1, "coeffs": [2], "forcing": [1]}],
            "conditions": [{"x": 0, "deriv": 0, "value": 0}, {"x": 1, "deriv": 0, "value": 0}],
            "continuity": [0, 1]
        }"#;
        let bvp = parse_problem(text).unwrap();
        assert_eq!(bvp.pieces[0].coeffs, vec![-2.0, 0.0]);
        assert_eq!(bvp.pieces[0].forcing.coeffs(), &[-1.0]);
        assert!(bvp.pins.is_empty());
    }

    #[test]
    fn malformed_and_invalid_files() {
        assert!(matches!(parse_problem("{"), Err(ProblemFileError::Parse(_))));
        assert!(matches!(parse_problem(r#"{"order": 2}"#), Err(ProblemFileError::Parse(_))));
        let bad_sign = r#"{"order": 2, "pieces": [{"interval": [0, 1], "sign": 3}], "continuity": [0]}"#;
        assert!(matches!(parse_problem(bad_sign), Err(ProblemFileError::Piece { piece: 0, .. })));
        let gap = r#"{"order": 2, "pieces": [{"interval": [0, 1]}, {"interval": [2, 3]}], "continuity": [0, 1]}"#;
        assert!(matches!(parse_problem(gap), Err(ProblemFileError::Invalid(_))));
        let extra = r#"{"order": 2, "pieces": [{"interval": [0, 1]}], "continuity": [0], "bogus": 1}"#;
        assert!(matches!(parse_problem(extra), Err(ProblemFileError::Parse(_))));
    }

    #[test]
    fn missing_file() {
        let err = read_problem(Path::new("/nonexistent/problem.json")).unwrap_err();
        assert!(matches!(err, ProblemFileError::Io { .. }));
    }
}
