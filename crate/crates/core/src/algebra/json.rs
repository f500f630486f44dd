//! Expression files and bound reports.
//!
//! ```json
//! {"comparison": ">=", "stated_bound": -1,
//!  "terms": [{"coeff": 1, "factors": [{"station": "A", "setting": "a"},
//!                                      {"station": "A", "setting": "b", "st": "st1"}]}]}
//! ```
//!
//! Coefficients are integers, exact `"p/q"` strings, or decimals (converted
//! to the nearest small fraction).

use num_rational::Rational64;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{AlgebraError, Comparison, ConstraintSet, Cyclicity, Expression, Term, Variable};
use crate::model::Station;

#[derive(Debug, Serialize, Deserialize)]
struct FactorRecord {
    station: String,
    setting: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    st: Option<String>,
}

#[derive(Debug, Serialize, Deserialize)]
struct TermRecord {
    coeff: Value,
    factors: Vec<FactorRecord>,
}

#[derive(Debug, Serialize, Deserialize)]
struct ExpressionRecord {
    comparison: String,
    #[serde(default)]
    stated_bound: Option<Value>,
    terms: Vec<TermRecord>,
}

pub fn rational_to_json(r: Rational64) -> Value {
    if r.is_integer() {
        Value::from(r.to_integer())
    } else {
        Value::from(format!("{}/{}", r.numer(), r.denom()))
    }
}

pub fn rational_from_json(v: &Value) -> Result<Rational64, AlgebraError> {
    let bad = || AlgebraError::Format(format!("not a rational number: {v}"));
    match v {
        Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                Ok(Rational64::from_integer(i))
            } else {
                let f = n.as_f64().ok_or_else(bad)?;
                Rational64::approximate_float(f).ok_or_else(bad)
            }
        }
        Value::String(s) => {
            let s = s.trim();
            match s.split_once('/') {
                Some((p, q)) => {
                    let p: i64 = p.trim().parse().map_err(|_| bad())?;
                    let q: i64 = q.trim().parse().map_err(|_| bad())?;
                    if q == 0 {
                        return Err(bad());
                    }
                    Ok(Rational64::new(p, q))
                }
                None => s
                    .parse::<i64>()
                    .map(Rational64::from_integer)
                    .map_err(|_| bad()),
            }
        }
        _ => Err(bad()),
    }
}

fn parse_station(s: &str) -> Result<Station, AlgebraError> {
    match s {
        "A" | "a" => Ok(Station::A),
        "B" | "b" => Ok(Station::B),
        other => Err(AlgebraError::Format(format!("unknown station `{other}`"))),
    }
}

pub fn expression_from_json(text: &str) -> Result<Expression<Rational64>, AlgebraError> {
    let rec: ExpressionRecord =
        serde_json::from_str(text).map_err(|e| AlgebraError::Format(e.to_string()))?;
    let comparison = match rec.comparison.as_str() {
        ">=" | "≥" | "ge" => Comparison::AtLeast,
        "<=" | "≤" | "le" => Comparison::AtMost,
        other => {
            return Err(AlgebraError::Format(format!(
                "unknown comparison `{other}`"
            )))
        }
    };
    let stated_bound = match &rec.stated_bound {
        None | Some(Value::Null) => None,
        Some(v) => Some(rational_from_json(v)?),
    };
    let terms = rec
        .terms
        .iter()
        .map(|t| {
            let coeff = rational_from_json(&t.coeff)?;
            let factors = t
                .factors
                .iter()
                .map(|f| {
                    Ok(Variable {
                        station: parse_station(&f.station)?,
                        setting: f.setting.clone(),
                        st: f.st.clone(),
                    })
                })
                .collect::<Result<Vec<_>, AlgebraError>>()?;
            Ok(Term::new(coeff, factors))
        })
        .collect::<Result<Vec<_>, AlgebraError>>()?;
    Expression::new(terms, comparison, stated_bound)
}

pub fn expression_to_json(e: &Expression<Rational64>) -> String {
    let rec = ExpressionRecord {
        comparison: e.comparison.symbol().to_string(),
        stated_bound: e.stated_bound.map(rational_to_json),
        terms: e
            .terms()
            .iter()
            .map(|t| TermRecord {
                coeff: rational_to_json(t.coeff),
                factors: t
                    .factors
                    .iter()
                    .map(|v| FactorRecord {
                        station: v.station.to_string(),
                        setting: v.setting.clone(),
                        st: v.st.clone(),
                    })
                    .collect(),
            })
            .collect(),
    };
    serde_json::to_string_pretty(&rec).expect("plain data serializes")
}

/// `{min, max, trivial_min, trivial_max, cyclic, witness, ...}`.
pub fn bound_report(
    e: &Expression<Rational64>,
    c: ConstraintSet,
    cyc: &Cyclicity<Rational64>,
) -> Value {
    let witness = cyc.witness.as_ref().map(|w| {
        Value::from(
            w.cycle
                .iter()
                .map(|v| Value::from(v.to_string()))
                .collect::<Vec<_>>(),
        )
    });
    serde_json::json!({
        "expression": e.to_string(),
        "anticorrelated": c.anticorrelation,
        "min": rational_to_json(cyc.bounds.min),
        "max": rational_to_json(cyc.bounds.max),
        "trivial_min": rational_to_json(cyc.trivial.min),
        "trivial_max": rational_to_json(cyc.trivial.max),
        "cyclic": cyc.cyclic,
        "witness": witness,
        "comparison": e.comparison.symbol(),
        "stated_bound": e.stated_bound.map(rational_to_json),
        "claim_holds": e.claim_holds(&cyc.bounds),
    })
}

#[cfg(test)]
mod tests {
    use super::super::builtins::Builtin;
    use super::super::has_cyclicity;
    use super::*;

    #[test]
    fn builtins_survive_json() {
        for b in Builtin::ALL {
            let e = b.expression();
            assert_eq!(expression_from_json(&expression_to_json(&e)).unwrap(), e);
        }
    }

    #[test]
    fn coefficient_forms() {
        assert_eq!(
            rational_from_json(&Value::from("3/6")).unwrap(),
            Rational64::new(1, 2)
        );
        assert_eq!(
            rational_from_json(&Value::from(0.25)).unwrap(),
            Rational64::new(1, 4)
        );
        assert!(rational_from_json(&Value::from("1/0")).is_err());
        assert!(rational_from_json(&Value::Bool(true)).is_err());
        assert_eq!(
            rational_to_json(Rational64::new(-2, 4)),
            Value::from("-1/2")
        );
    }

    #[test]
    fn report_shape() {
        let e = Builtin::Boole3.expression();
        let c = has_cyclicity(&e, ConstraintSet::none()).unwrap();
        let r = bound_report(&e, ConstraintSet::none(), &c);
        assert_eq!(r["min"], Value::from(-1));
        assert_eq!(r["max"], Value::from(3));
        assert_eq!(r["trivial_min"], Value::from(-3));
        assert_eq!(r["cyclic"], Value::Bool(true));
        assert_eq!(r["claim_holds"], Value::Bool(true));
        assert_eq!(r["witness"].as_array().unwrap().len(), 4);
    }

    #[test]
    fn malformed_input() {
        assert!(expression_from_json("{").is_err());
        let bad_station = r#"{"comparison":">=","terms":[{"coeff":1,"factors":[{"station":"C","setting":"a"}]}]}"#;
        assert!(expression_from_json(bad_station).is_err());
        let zero = r#"{"comparison":">=","terms":[{"coeff":0,"factors":[{"station":"A","setting":"a"}]}]}"#;
        assert_eq!(
            expression_from_json(zero).unwrap_err(),
            AlgebraError::ZeroCoefficient(0)
        );
    }
}
