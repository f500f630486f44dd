use super::{CorrelationSet, FeasibilityError, Verdict, BOUNDARY_TOL};
use crate::scalar::Real;

/// One of the four three-variable conditions `1 + s12·E12 + s13·E13 + s23·E23 ≥ 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct Condition<F> {
    pub signs: [i8; 3],
    pub value: F,
}

impl<F: Real> Condition<F> {
    pub fn describe(&self) -> String {
        let sym = |s: i8| if s > 0 { '+' } else { '-' };
        format!(
            "1 {} E12 {} E13 {} E23 = {} < 0",
            sym(self.signs[0]),
            sym(self.signs[1]),
            sym(self.signs[2]),
            self.value
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClosedFormReport<F> {
    pub verdict: Verdict,
    pub conditions: Vec<Condition<F>>,
    /// Conditions with value < −tolerance.
    pub violated: Vec<Condition<F>>,
}

const SIGNS: [[i8; 3]; 4] = [[1, 1, 1], [1, -1, -1], [-1, 1, -1], [-1, -1, 1]];

/// Exact test for three variables with free marginals: the four conditions
/// above are necessary and sufficient.
pub fn feasible_closed_form_3<F: Real>(
    c: &CorrelationSet<F>,
) -> Result<ClosedFormReport<F>, FeasibilityError> {
    if c.k() != 3 {
        return Err(FeasibilityError::NotThree(c.k()));
    }
    let get = |i, j| c.pair(i, j).ok_or(FeasibilityError::MissingPair(i, j));
    let e = [get(0, 1)?, get(0, 2)?, get(1, 2)?];
    let conditions: Vec<Condition<F>> = SIGNS
        .iter()
        .map(|s| Condition {
            signs: *s,
            value: (0..3).fold(F::one(), |acc, k| acc + F::lit(f64::from(s[k])) * e[k]),
        })
        .collect();
    let tol = F::lit(BOUNDARY_TOL);
    let violated: Vec<_> = conditions
        .iter()
        .filter(|c| c.value < -tol)
        .cloned()
        .collect();
    let verdict = if !violated.is_empty() {
        Verdict::Infeasible
    } else if conditions.iter().any(|c| c.value.abs() < tol) {
        Verdict::Boundary
    } else {
        Verdict::Feasible
    };
    Ok(ClosedFormReport {
        verdict,
        conditions,
        violated,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn verdict(a: f64, b: f64, c: f64) -> ClosedFormReport<f64> {
        feasible_closed_form_3(&CorrelationSet::triple(a, b, c).unwrap()).unwrap()
    }

    #[test]
    fn reference_triples() {
        // identical variables: 1 + E12 − E13 − E23 = 0 is tight
        assert!(verdict(1.0, 1.0, 1.0).verdict.is_feasible());
        let r = verdict(-1.0, -1.0, -1.0);
        assert_eq!(r.verdict, Verdict::Infeasible);
        assert_eq!(r.violated.len(), 1);
        assert_eq!(r.violated[0].signs, [1, 1, 1]);
        assert_eq!(r.violated[0].value, -2.0);
        let r = verdict(-0.5, -0.5, -0.5);
        assert_eq!(r.verdict, Verdict::Infeasible);
        assert_eq!(r.violated[0].value, -0.5);
        assert_eq!(
            verdict(-1.0 / 3.0, -1.0 / 3.0, -1.0 / 3.0).verdict,
            Verdict::Boundary
        );
        assert_eq!(verdict(0.0, 0.0, 0.0).verdict, Verdict::Feasible);
    }

    #[test]
    fn needs_three_full_pairs() {
        let c = CorrelationSet::<f64>::new(3)
            .unwrap()
            .with_pair(0, 1, 0.0)
            .unwrap();
        assert_eq!(
            feasible_closed_form_3(&c).unwrap_err(),
            FeasibilityError::MissingPair(0, 2)
        );
        let c = CorrelationSet::<f64>::new(4).unwrap();
        assert!(feasible_closed_form_3(&c).is_err());
    }

    #[test]
    fn violated_condition_text() {
        let r = verdict(-1.0, -1.0, -1.0);
        assert_eq!(r.violated[0].describe(), "1 + E12 + E13 + E23 = -2 < 0");
    }
}
