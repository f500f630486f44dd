//! Can the three pair correlations measured in an EPR run come from one
//! probability space?
//!
//! Each setting pair is measured on its own trials. The estimates are mapped
//! to A-only form and handed to the LP. Sampling noise matters near the
//! boundary, so an LP refutation is only reported as infeasible when the
//! certificate is negative by more than [`SIGNIFICANCE`] standard errors.

use serde_json::{json, Value};

use super::{
    a_form, feasible_closed_form_3, feasible_lp, ClosedFormReport, CorrelationSet,
    FeasibilityError, LpReport, Verdict,
};
use crate::error::StatsError;
use crate::model::Dataset;
use crate::stats::{BellSum, CountTable};

/// Standard errors by which a certificate must be violated.
pub const SIGNIFICANCE: f64 = 5.0;

#[derive(Debug, Clone, PartialEq)]
pub struct BellGameReport {
    pub bell: BellSum,
    /// (E12, E13, E23) after E(A_i A_j) = −E(A_i B_j).
    pub a_form: CorrelationSet<f64>,
    pub lp: LpReport<f64>,
    pub closed_form: ClosedFormReport<f64>,
    pub verdict: Verdict,
    /// Certificate expectation and its standard error, when the LP refutes the point estimate.
    pub certificate_value: Option<(f64, f64)>,
}

impl BellGameReport {
    pub fn from_bell_sum(bell: BellSum) -> Result<Self, FeasibilityError> {
        let [ab, ac, bc] = &bell.terms;
        let a_form = CorrelationSet::triple(a_form(ab.e), a_form(ac.e), a_form(bc.e))?;
        let lp = feasible_lp(&a_form)?;
        let closed_form = feasible_closed_form_3(&a_form)?;
        let mut certificate_value = None;
        let verdict = match (&lp.verdict, &lp.certificate) {
            (Verdict::Infeasible, Some(cert)) => {
                let v = cert.value(&a_form);
                let se = [(0, 1), (0, 2), (1, 2)]
                    .iter()
                    .zip(&bell.terms)
                    .map(|(key, t)| {
                        let y = cert.pairs.get(key).copied().unwrap_or(0.0);
                        (y * t.stderr).powi(2)
                    })
                    .sum::<f64>()
                    .sqrt();
                certificate_value = Some((v, se));
                if v < -SIGNIFICANCE * se {
                    Verdict::Infeasible
                } else {
                    Verdict::Boundary
                }
            }
            (v, _) => *v,
        };
        Ok(BellGameReport {
            bell,
            a_form,
            lp,
            closed_form,
            verdict,
            certificate_value,
        })
    }

    pub fn message(&self) -> &'static str {
        match self.verdict {
            Verdict::Feasible => "a single probability space reproduces these estimates",
            Verdict::Boundary => {
                "a single probability space reproduces these estimates within statistical tolerance (boundary)"
            }
            Verdict::Infeasible => {
                "no single probability space reproduces these estimates: the three functions cannot all live on one sigma-algebra"
            }
        }
    }

    /// Violated three-variable conditions (only when the verdict is infeasible).
    pub fn violated(&self) -> Vec<String> {
        if self.verdict != Verdict::Infeasible {
            return Vec::new();
        }
        self.closed_form
            .violated
            .iter()
            .map(|c| c.describe())
            .collect()
    }

    pub fn to_json(&self) -> Value {
        let [a, b, c] = &self.bell.labels;
        let names = [(a, b), (a, c), (b, c)];
        let estimates: Vec<Value> = names
            .iter()
            .zip(&self.bell.terms)
            .map(|((x, y), t)| json!({"a": x, "b": y, "E": t.e, "stderr": t.stderr, "n": t.n}))
            .collect();
        let certificate = self.lp.certificate.as_ref().map(|cert| {
            let (value, stderr) = self.certificate_value.unwrap_or((f64::NAN, f64::NAN));
            json!({"inequality": cert.describe(), "value": value, "stderr": stderr})
        });
        json!({
            "verdict": self.verdict,
            "message": self.message(),
            "estimates": estimates,
            "bell_sum": self.bell.sum,
            "bell_stderr": self.bell.stderr,
            "a_form": [
                self.a_form.pair(0, 1),
                self.a_form.pair(0, 2),
                self.a_form.pair(1, 2)
            ],
            "lp_verdict": self.lp.verdict,
            "lp_scale": self.lp.scale,
            "violated": self.violated(),
            "certificate": certificate,
        })
    }
}

/// Report over the three settings of `d`, in dataset order.
pub fn bell_game_report(d: &Dataset) -> Result<BellGameReport, FeasibilityError> {
    if d.settings.len() != 3 {
        return Err(FeasibilityError::Format(format!(
            "the Bell game needs exactly three settings, the dataset has {}",
            d.settings.len()
        )));
    }
    let labels = [
        d.settings[0].label(),
        d.settings[1].label(),
        d.settings[2].label(),
    ];
    bell_game_report_for(d, labels)
}

pub fn bell_game_report_for(
    d: &Dataset,
    labels: [&str; 3],
) -> Result<BellGameReport, FeasibilityError> {
    if d.matched_count() == 0 {
        return Err(StatsError::NoMatchedTrials.into());
    }
    let bell = BellSum::from_table(&CountTable::from_matched(d), labels)?;
    BellGameReport::from_bell_sum(bell)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::CorrelationEstimate;

    fn sum_of(e: f64, stderr: f64) -> BellSum {
        let t = CorrelationEstimate { e, stderr, n: 1000 };
        BellSum {
            labels: ["a".into(), "b".into(), "c".into()],
            terms: [t; 3],
            sum: 3.0 * e,
            stderr: 3f64.sqrt() * stderr,
        }
    }

    #[test]
    fn clear_violation_is_infeasible() {
        let r = BellGameReport::from_bell_sum(sum_of(0.5, 0.003)).unwrap();
        assert_eq!(r.verdict, Verdict::Infeasible);
        assert_eq!(r.violated().len(), 1);
        assert!(r.message().starts_with("no single probability space"));
    }

    #[test]
    fn noise_level_violation_is_boundary() {
        let r = BellGameReport::from_bell_sum(sum_of(1.0 / 3.0 + 0.002, 0.003)).unwrap();
        assert_eq!(r.lp.verdict, Verdict::Infeasible);
        assert_eq!(r.verdict, Verdict::Boundary);
        assert!(r.violated().is_empty());
    }

    #[test]
    fn local_values_are_feasible() {
        let r = BellGameReport::from_bell_sum(sum_of(0.2, 0.003)).unwrap();
        assert_eq!(r.verdict, Verdict::Feasible);
        assert!(r.lp.witness.is_some());
        let j = r.to_json();
        assert_eq!(j["verdict"], "feasible");
        assert_eq!(j["estimates"].as_array().unwrap().len(), 3);
    }

    #[test]
    fn dataset_needs_three_settings() {
        let mut d = crate::model::tests::three_trials();
        let r = bell_game_report(&d).unwrap();
        assert_eq!(r.bell.sum, -3.0);
        d.settings.pop();
        assert!(bell_game_report(&d).is_err());
    }
}
