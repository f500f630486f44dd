//! Symbolic sums of products of labeled ±1 variables.
//!
//! Bounds are computed exactly by enumerating every ±1 assignment; the
//! cyclicity of an expression is the gap between those bounds and the trivial
//! ones (±Σ|coeff|).

mod bounds;
pub mod builtins;
mod cycles;
mod evaluate;
pub mod json;

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use crate::model::Station;
use crate::scalar::Coefficient;

pub use bounds::{tight_bounds, trivial_bounds, Bounds, MAX_VARIABLES};
pub use cycles::{
    decyclify, graph_cyclicity, has_cyclicity, Cyclicity, GraphVerdict, Polarity, Witness,
};
pub use evaluate::{evaluate_on_dataset, Binding, Evaluation, TermEstimate, TrialValue};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AlgebraError {
    #[error("term {0} has no factors")]
    EmptyTerm(usize),
    #[error("term {0} has a zero coefficient")]
    ZeroCoefficient(usize),
    #[error("{count} distinct variables exceed the enumeration limit of {limit}")]
    TooManyVariables { count: usize, limit: usize },
    #[error("incompatible measurements: {0}")]
    IncompatibleMeasurements(String),
    #[error("no data: {0}")]
    MissingData(String),
    #[error("expression format: {0}")]
    Format(String),
}

/// A two-valued function A or B, indexed by setting and optional space-time label.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Variable {
    pub station: Station,
    pub setting: String,
    /// `None` is the unlabeled (shared) usage.
    pub st: Option<String>,
}

impl Variable {
    pub fn new(station: Station, setting: impl Into<String>) -> Self {
        Variable {
            station,
            setting: setting.into(),
            st: None,
        }
    }

    pub fn labeled(station: Station, setting: impl Into<String>, st: impl Into<String>) -> Self {
        Variable {
            station,
            setting: setting.into(),
            st: Some(st.into()),
        }
    }

    pub fn a(setting: &str) -> Self {
        Self::new(Station::A, setting)
    }

    pub fn b(setting: &str) -> Self {
        Self::new(Station::B, setting)
    }
}

impl fmt::Display for Variable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}_{}", self.station, self.setting)?;
        if let Some(st) = &self.st {
            write!(f, "^{st}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Comparison {
    /// expression ≥ stated bound
    AtLeast,
    /// expression ≤ stated bound
    AtMost,
}

impl Comparison {
    pub fn symbol(self) -> &'static str {
        match self {
            Comparison::AtLeast => ">=",
            Comparison::AtMost => "<=",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Term<T> {
    pub coeff: T,
    pub factors: Vec<Variable>,
}

impl<T> Term<T> {
    pub fn new(coeff: T, factors: Vec<Variable>) -> Self {
        Term { coeff, factors }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Expression<T> {
    terms: Vec<Term<T>>,
    pub comparison: Comparison,
    pub stated_bound: Option<T>,
}

impl<T: Coefficient> Expression<T> {
    pub fn new(
        terms: Vec<Term<T>>,
        comparison: Comparison,
        stated_bound: Option<T>,
    ) -> Result<Self, AlgebraError> {
        for (i, t) in terms.iter().enumerate() {
            if t.factors.is_empty() {
                return Err(AlgebraError::EmptyTerm(i));
            }
            if t.coeff.is_zero() {
                return Err(AlgebraError::ZeroCoefficient(i));
            }
        }
        Ok(Expression {
            terms,
            comparison,
            stated_bound,
        })
    }

    /// Sum of unit-coefficient pairwise products.
    pub fn pairwise_sum(
        pairs: &[(Variable, Variable)],
        comparison: Comparison,
        stated_bound: Option<T>,
    ) -> Self {
        let terms = pairs
            .iter()
            .map(|(x, y)| Term::new(T::one(), vec![x.clone(), y.clone()]))
            .collect();
        Expression {
            terms,
            comparison,
            stated_bound,
        }
    }

    pub fn terms(&self) -> &[Term<T>] {
        &self.terms
    }

    pub fn is_pairwise(&self) -> bool {
        self.terms.iter().all(|t| t.factors.len() == 2)
    }

    /// Whether the stated claim holds for every assignment, given the tight bounds.
    pub fn claim_holds(&self, bounds: &Bounds<T>) -> Option<bool> {
        self.stated_bound.map(|b| match self.comparison {
            Comparison::AtLeast => bounds.min >= b,
            Comparison::AtMost => bounds.max <= b,
        })
    }
}

impl<T: Coefficient> fmt::Display for Expression<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, t) in self.terms.iter().enumerate() {
            let neg = t.coeff < T::zero();
            let mag = t.coeff.abs();
            match (i, neg) {
                (0, true) => f.write_str("-")?,
                (0, false) => {}
                (_, true) => f.write_str(" - ")?,
                (_, false) => f.write_str(" + ")?,
            }
            if !mag.is_one() {
                write!(f, "{mag}·")?;
            }
            for (k, v) in t.factors.iter().enumerate() {
                if k > 0 {
                    f.write_str(" ")?;
                }
                write!(f, "{v}")?;
            }
        }
        if let Some(b) = self.stated_bound {
            write!(f, " {} {b}", self.comparison.symbol())?;
        }
        Ok(())
    }
}

/// Identities imposed on the variables before bounding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ConstraintSet {
    /// B at (setting, st) is identified with −A at the same (setting, st).
    pub anticorrelation: bool,
}

impl ConstraintSet {
    pub fn none() -> Self {
        ConstraintSet::default()
    }

    pub fn anticorrelated() -> Self {
        ConstraintSet {
            anticorrelation: true,
        }
    }

    /// Representative variable and sign after substitution.
    pub fn substitute(&self, v: &Variable) -> (Variable, bool) {
        if self.anticorrelation && v.station == Station::B {
            let mut r = v.clone();
            r.station = Station::A;
            (r, true)
        } else {
            (v.clone(), false)
        }
    }
}

/// Distinct variables after constraint substitution, in lexicographic order.
pub fn distinct_variables<T>(e: &Expression<T>, c: ConstraintSet) -> Vec<Variable> {
    let set: BTreeSet<Variable> = e
        .terms
        .iter()
        .flat_map(|t| t.factors.iter())
        .map(|v| c.substitute(v).0)
        .collect();
    set.into_iter().collect()
}

/// Terms reduced to (signed coefficient, variable bitmask) over `vars`.
///
/// Bit k set in an assignment means variable k takes −1; a repeated variable
/// cancels out of the mask because x·x = 1.
pub(crate) struct Compiled<T> {
    pub vars: Vec<Variable>,
    pub terms: Vec<(T, u64)>,
}

pub(crate) fn compile<T: Coefficient>(
    e: &Expression<T>,
    c: ConstraintSet,
) -> Result<Compiled<T>, AlgebraError> {
    let vars = distinct_variables(e, c);
    if vars.len() > MAX_VARIABLES {
        return Err(AlgebraError::TooManyVariables {
            count: vars.len(),
            limit: MAX_VARIABLES,
        });
    }
    let terms = e
        .terms
        .iter()
        .map(|t| {
            let mut mask = 0u64;
            let mut negate = false;
            for f in &t.factors {
                let (v, neg) = c.substitute(f);
                negate ^= neg;
                let k = vars.binary_search(&v).expect("variable collected above");
                mask ^= 1 << k;
            }
            (if negate { -t.coeff } else { t.coeff }, mask)
        })
        .collect();
    Ok(Compiled { vars, terms })
}
