//! Can one joint distribution of ±1 variables reproduce a set of correlations?
//!
//! Variables are indexed `0..k`. An atom ω ∈ {±1}^k is encoded as a bitmask
//! in which bit i set means x_i = −1. Observed station-A/station-B
//! correlations are turned into the A-only form through
//! E(A_i A_j) = −E(A_i B_j), see [`a_form`].

mod bell_game;
mod closed_form;
mod lp;
pub mod simplex;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::StatsError;
use crate::scalar::Real;

pub use bell_game::{bell_game_report, bell_game_report_for, BellGameReport, SIGNIFICANCE};
pub use closed_form::{feasible_closed_form_3, ClosedFormReport, Condition};
pub use lp::{feasible_lp, Certificate, LpReport};

/// Atom-count guard: 2^12 atoms.
pub const MAX_K: usize = 12;

/// Slack below which a satisfied condition is reported as a boundary case.
pub const BOUNDARY_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FeasibilityError {
    #[error("k = {k} exceeds the limit of {limit} variables (2^k atoms)")]
    TooManyVariables { k: usize, limit: usize },
    #[error("expectation {what} = {value} is outside [-1, 1]")]
    OutOfRange { what: String, value: f64 },
    #[error("index {index} is out of range for k = {k}")]
    BadIndex { index: usize, k: usize },
    #[error("pair ({0}, {0}) is not a pair")]
    SelfPair(usize),
    #[error("missing pair ({0}, {1})")]
    MissingPair(usize, usize),
    #[error("the closed form needs k = 3, got {0}")]
    NotThree(usize),
    #[error("LP solver failed: {0}")]
    Solver(String),
    #[error("bad correlation input: {0}")]
    Format(String),
    #[error(transparent)]
    Stats(#[from] StatsError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Feasible,
    /// Feasible, but on the boundary of the feasible region.
    Boundary,
    Infeasible,
}

impl Verdict {
    pub fn is_feasible(self) -> bool {
        self != Verdict::Infeasible
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Feasible => "feasible",
            Verdict::Boundary => "boundary",
            Verdict::Infeasible => "infeasible",
        }
    }
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Pairwise (and optionally single-variable) expectations of k ±1 variables.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationSet<F> {
    k: usize,
    pairs: BTreeMap<(usize, usize), F>,
    singles: BTreeMap<usize, F>,
}

impl<F: Real> CorrelationSet<F> {
    pub fn new(k: usize) -> Result<Self, FeasibilityError> {
        if k > MAX_K {
            return Err(FeasibilityError::TooManyVariables { k, limit: MAX_K });
        }
        Ok(CorrelationSet {
            k,
            pairs: BTreeMap::new(),
            singles: BTreeMap::new(),
        })
    }

    /// Three variables from (E12, E13, E23).
    pub fn triple(e12: F, e13: F, e23: F) -> Result<Self, FeasibilityError> {
        Self::new(3)?
            .with_pair(0, 1, e12)?
            .with_pair(0, 2, e13)?
            .with_pair(1, 2, e23)
    }

    fn check(&self, what: impl FnOnce() -> String, e: F) -> Result<(), FeasibilityError> {
        let slack = F::lit(1e-12);
        if e.is_nan() || e.abs() > F::one() + slack {
            return Err(FeasibilityError::OutOfRange {
                what: what(),
                value: e.to_f64().unwrap_or(f64::NAN),
            });
        }
        Ok(())
    }

    fn check_index(&self, i: usize) -> Result<(), FeasibilityError> {
        if i >= self.k {
            return Err(FeasibilityError::BadIndex {
                index: i,
                k: self.k,
            });
        }
        Ok(())
    }

    pub fn with_pair(mut self, i: usize, j: usize, e: F) -> Result<Self, FeasibilityError> {
        self.check_index(i)?;
        self.check_index(j)?;
        if i == j {
            return Err(FeasibilityError::SelfPair(i));
        }
        self.check(|| format!("E({i},{j})"), e)?;
        self.pairs.insert((i.min(j), i.max(j)), e);
        Ok(self)
    }

    pub fn with_single(mut self, i: usize, e: F) -> Result<Self, FeasibilityError> {
        self.check_index(i)?;
        self.check(|| format!("E({i})"), e)?;
        self.singles.insert(i, e);
        Ok(self)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn pair(&self, i: usize, j: usize) -> Option<F> {
        self.pairs.get(&(i.min(j), i.max(j))).copied()
    }

    pub fn pairs(&self) -> &BTreeMap<(usize, usize), F> {
        &self.pairs
    }

    pub fn singles(&self) -> &BTreeMap<usize, F> {
        &self.singles
    }

    /// Every expectation multiplied by `s` (mixing with the uniform distribution for s ∈ [0, 1]).
    pub fn scaled(&self, s: F) -> Self {
        CorrelationSet {
            k: self.k,
            pairs: self.pairs.iter().map(|(&p, &e)| (p, e * s)).collect(),
            singles: self.singles.iter().map(|(&i, &e)| (i, e * s)).collect(),
        }
    }
}

/// E(A_i A_j) = −E(A_i B_j): station-B outcomes stand in for −A at the same setting.
pub fn a_form<F: Real>(e_ab: F) -> F {
    -e_ab
}

#[derive(Debug, Serialize, Deserialize)]
struct PairRecord {
    i: usize,
    j: usize,
    e: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct SingleRecord {
    i: usize,
    e: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct CorrelationRecord {
    k: usize,
    #[serde(default)]
    pairs: Vec<PairRecord>,
    #[serde(default)]
    singles: Vec<SingleRecord>,
}

impl CorrelationSet<f64> {
    /// `{k, pairs: [{i, j, e}], singles: [{i, e}]}` with 0-based indices.
    pub fn from_json(text: &str) -> Result<Self, FeasibilityError> {
        let rec: CorrelationRecord =
            serde_json::from_str(text).map_err(|e| FeasibilityError::Format(e.to_string()))?;
        let mut c = CorrelationSet::new(rec.k)?;
        for p in rec.pairs {
            c = c.with_pair(p.i, p.j, p.e)?;
        }
        for s in rec.singles {
            c = c.with_single(s.i, s.e)?;
        }
        Ok(c)
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(CorrelationRecord {
            k: self.k,
            pairs: self
                .pairs
                .iter()
                .map(|(&(i, j), &e)| PairRecord { i, j, e })
                .collect(),
            singles: self
                .singles
                .iter()
                .map(|(&i, &e)| SingleRecord { i, e })
                .collect(),
        })
        .expect("plain data serializes")
    }
}

/// ±1 value of variable `i` in atom `omega`.
pub(crate) fn spin<F: Real>(omega: usize, i: usize) -> F {
    if omega >> i & 1 == 1 {
        -F::one()
    } else {
        F::one()
    }
}
