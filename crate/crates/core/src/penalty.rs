//! String-over-obstacle problems rewritten as piecewise second-order systems.
//!
//! The obstacle is piecewise constant. Regions where the penalty switch is
//! active (level at or above the contact level) get the coupled equation
//! `u'' = u + f - level`; the rest get `u'' = f`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{normalize_piece, ContinuitySpec, ModelError, PiecewiseBvp, PointCondition};
use crate::poly::Poly;

pub const DEFAULT_CONTACT_LEVEL: f64 = 1.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PenaltyError {
    #[error("obstacle has no regions")]
    Empty,
    #[error("obstacle regions {0} and {1} are not contiguous")]
    Gap(usize, usize),
    #[error("obstacle region {0} has a non-finite level")]
    NonFiniteLevel(usize),
    #[error("force must be finite")]
    NonFiniteForce,
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Penalty switch: `-1` for `t >= 0`, `0` otherwise.
pub fn mu(t: f64) -> f64 {
    if t >= 0.0 {
        -1.0
    } else {
        0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObstacleRegion {
    pub lo: f64,
    pub hi: f64,
    pub level: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Obstacle {
    pub regions: Vec<ObstacleRegion>,
}

impl Obstacle {
    pub fn new(regions: Vec<ObstacleRegion>) -> Self {
        Self { regions }
    }

    /// `-1` on `[0, 1/4)`, `1` on `[1/4, 3/4)`, `-1` on `[3/4, 1]`.
    pub fn three_level() -> Self {
        Self::new(vec![
            ObstacleRegion { lo: 0.0, hi: 0.25, level: -1.0 },
            ObstacleRegion { lo: 0.25, hi: 0.75, level: 1.0 },
            ObstacleRegion { lo: 0.75, hi: 1.0, level: -1.0 },
        ])
    }

    pub fn level_at(&self, x: f64) -> Option<f64> {
        let last = self.regions.last()?;
        self.regions
            .iter()
            .find(|r| x >= r.lo && x < r.hi)
            .or((x == last.hi).then_some(last))
            .map(|r| r.level)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PenaltyProblem {
    pub obstacle: Obstacle,
    pub force: f64,
    pub conditions: Vec<PointCondition>,
    pub contact_level: f64,
}

impl PenaltyProblem {
    pub fn new(obstacle: Obstacle, force: f64, conditions: Vec<PointCondition>) -> Self {
        Self {
            obstacle,
            force,
            conditions,
            contact_level: DEFAULT_CONTACT_LEVEL,
        }
    }

    /// `u(0) = 0, u'(0) = 0, u'(1) = 0` as stated for the string problem
    /// (three conditions for a second-order equation).
    pub fn string_conditions() -> Vec<PointCondition> {
        vec![
            PointCondition::new(0.0, 0, 0.0),
            PointCondition::new(0.0, 1, 0.0),
            PointCondition::new(1.0, 1, 0.0),
        ]
    }
}

/// One piece per obstacle region; `u` and `u'` continuous; conditions copied.
pub fn reformulate(p: &PenaltyProblem) -> Result<PiecewiseBvp, PenaltyError> {
    if p.obstacle.regions.is_empty() {
        return Err(PenaltyError::Empty);
    }
    if !p.force.is_finite() {
        return Err(PenaltyError::NonFiniteForce);
    }
    for (i, w) in p.obstacle.regions.windows(2).enumerate() {
        if w[0].hi != w[1].lo {
            return Err(PenaltyError::Gap(i, i + 1));
        }
    }
    let pieces = p
        .obstacle
        .regions
        .iter()
        .enumerate()
        .map(|(i, r)| {
            if !r.level.is_finite() {
                return Err(PenaltyError::NonFiniteLevel(i));
            }
            let in_contact = mu(r.level - p.contact_level) == -1.0;
            let (coeffs, forcing) = if in_contact {
                (vec![1.0], Poly::constant(p.force - r.level))
            } else {
                (vec![], Poly::constant(p.force))
            };
            Ok(normalize_piece(1, &coeffs, &forcing, (r.lo, r.hi), 2)?)
        })
        .collect::<Result<Vec<_>, PenaltyError>>()?;
    Ok(PiecewiseBvp::new(
        2,
        pieces,
        p.conditions.clone(),
        ContinuitySpec::new([0, 1]),
    ))
}
