//! Estimating an expression from recorded trials.
//!
//! Each trial carries exactly one setting per station, so a variable can be
//! read only when its station was set to its setting (or, under the
//! anticorrelation constraint, when the other station was, with a sign flip).
//! Whether a sum may be estimated term by term depends on how its variables
//! are bound:
//!
//! - [`Binding::Shared`]: the same functions of a single hidden state appear in
//!   every term, so each trial must supply every factor at once.
//! - [`Binding::PerTerm`]: every term is an independent experiment and is
//!   estimated from the trials that carry its own setting pair.

use std::collections::{BTreeMap, BTreeSet};

use super::{AlgebraError, ConstraintSet, Expression, Variable};
use crate::model::{Dataset, Station, TrialRecord};
use crate::scalar::Coefficient;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Binding {
    Shared,
    PerTerm,
}

impl Binding {
    /// Per-term iff every factor carries a label and no label is reused
    /// across terms; unlabeled variables are shared by construction.
    pub fn infer<T>(e: &Expression<T>) -> Binding {
        let mut owner: BTreeMap<&str, usize> = BTreeMap::new();
        for (i, t) in e.terms.iter().enumerate() {
            for f in &t.factors {
                let Some(st) = f.st.as_deref() else {
                    return Binding::Shared;
                };
                if *owner.entry(st).or_insert(i) != i {
                    return Binding::Shared;
                }
            }
        }
        Binding::PerTerm
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TermEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub n: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialValue {
    /// `None` when the value is the whole expression (shared binding).
    pub term: Option<usize>,
    pub trial_index: u64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub binding: Binding,
    /// Means of the bare products (coefficients not applied).
    pub terms: Vec<TermEstimate>,
    pub values: Vec<TrialValue>,
    pub total: f64,
    pub stderr: f64,
}

/// ±1 value of `v` in trial `t`, if the trial measured it.
fn read(v: &Variable, t: &TrialRecord, c: ConstraintSet) -> Option<f64> {
    let (own, other) = match v.station {
        Station::A => (&t.event_a, &t.event_b),
        Station::B => (&t.event_b, &t.event_a),
    };
    if own.setting.label() == v.setting {
        Some(f64::from(own.outcome.value()))
    } else if c.anticorrelation && other.setting.label() == v.setting {
        Some(-f64::from(other.outcome.value()))
    } else {
        None
    }
}

fn product(factors: &[Variable], t: &TrialRecord, c: ConstraintSet) -> Option<f64> {
    factors
        .iter()
        .try_fold(1.0, |acc, v| read(v, t, c).map(|x| acc * x))
}

fn mean_and_stderr(xs: impl Iterator<Item = f64>) -> (f64, f64, usize) {
    let (mut n, mut s, mut s2) = (0usize, 0.0, 0.0);
    for x in xs {
        n += 1;
        s += x;
        s2 += x * x;
    }
    if n == 0 {
        return (f64::NAN, f64::NAN, 0);
    }
    let m = s / n as f64;
    let var = (s2 / n as f64 - m * m).max(0.0);
    (m, (var / n as f64).sqrt(), n)
}

fn describe_needs<T>(e: &Expression<T>) -> String {
    let mut need: BTreeMap<Station, BTreeSet<&str>> = BTreeMap::new();
    for f in e.terms.iter().flat_map(|t| &t.factors) {
        need.entry(f.station)
            .or_default()
            .insert(f.setting.as_str());
    }
    let parts: Vec<String> = need
        .iter()
        .map(|(s, set)| {
            let list: Vec<&str> = set.iter().copied().collect();
            format!("{s} at {{{}}}", list.join(", "))
        })
        .collect();
    format!(
        "the shared binding needs {} in one trial, but each trial records a single setting per station",
        parts.join(" and ")
    )
}

/// Evaluate `e` on the matched trials of `d`.
pub fn evaluate_on_dataset<T: Coefficient>(
    e: &Expression<T>,
    d: &Dataset,
    binding: Binding,
    c: ConstraintSet,
) -> Result<Evaluation, AlgebraError> {
    if d.matched_count() == 0 {
        return Err(AlgebraError::MissingData("no matched trials".into()));
    }
    let coeffs: Vec<f64> = e.terms.iter().map(|t| t.coeff.to_f64_lossy()).collect();
    match binding {
        Binding::Shared => {
            let mut values = Vec::new();
            let mut per_term: Vec<Vec<f64>> = vec![Vec::new(); e.terms.len()];
            for t in d.matched() {
                let row: Option<Vec<f64>> = e
                    .terms
                    .iter()
                    .map(|term| product(&term.factors, t, c))
                    .collect();
                if let Some(row) = row {
                    let value = row.iter().zip(&coeffs).map(|(x, k)| x * k).sum();
                    for (acc, x) in per_term.iter_mut().zip(&row) {
                        acc.push(*x);
                    }
                    values.push(TrialValue {
                        term: None,
                        trial_index: t.trial_index,
                        value,
                    });
                }
            }
            if values.is_empty() {
                return Err(AlgebraError::IncompatibleMeasurements(describe_needs(e)));
            }
            let terms = per_term
                .into_iter()
                .map(|xs| {
                    let (mean, stderr, n) = mean_and_stderr(xs.into_iter());
                    TermEstimate { mean, stderr, n }
                })
                .collect();
            let (total, stderr, _) = mean_and_stderr(values.iter().map(|v| v.value));
            Ok(Evaluation {
                binding,
                terms,
                values,
                total,
                stderr,
            })
        }
        Binding::PerTerm => {
            let mut values = Vec::new();
            let mut terms = Vec::with_capacity(e.terms.len());
            for (i, term) in e.terms.iter().enumerate() {
                let start = values.len();
                values.extend(d.matched().filter_map(|t| {
                    product(&term.factors, t, c).map(|value| TrialValue {
                        term: Some(i),
                        trial_index: t.trial_index,
                        value,
                    })
                }));
                let (mean, stderr, n) = mean_and_stderr(values[start..].iter().map(|v| v.value));
                if n == 0 {
                    let names: Vec<String> = term.factors.iter().map(|v| v.to_string()).collect();
                    return Err(AlgebraError::MissingData(format!(
                        "no matched trial measures term {i} ({})",
                        names.join(" ")
                    )));
                }
                terms.push(TermEstimate { mean, stderr, n });
            }
            let total = terms.iter().zip(&coeffs).map(|(t, k)| k * t.mean).sum();
            let stderr = terms
                .iter()
                .zip(&coeffs)
                .map(|(t, k)| (k * t.stderr).powi(2))
                .sum::<f64>()
                .sqrt();
            Ok(Evaluation {
                binding,
                terms,
                values,
                total,
                stderr,
            })
        }
    }
}
