//! Named three-setting expressions.

use std::str::FromStr;

use num_rational::Rational64;

use super::{decyclify, AlgebraError, Comparison, Expression, Variable};
use crate::model::Station;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Builtin {
    /// A_a A_b + A_a A_c + A_b A_c ≥ −1
    Boole3,
    /// Same products with six distinct labels 1..6: ≥ −3.
    Boole3Labeled,
    /// Boole3 relabeled st1..st6: ≥ −3.
    DecyclifiedBoole3,
    /// A_a B_b + A_a B_c + A_b B_c ≤ +1 (shared, unlabeled variables).
    Bell3,
    /// Bell3 with one label `n` on every factor: ≤ +1.
    Bell3SharedLabel,
    /// Bell3 with labels st_m / st_m' per term: ≤ +3.
    Bell3Distinct,
}

impl Builtin {
    pub const ALL: [Builtin; 6] = [
        Builtin::Boole3,
        Builtin::Boole3Labeled,
        Builtin::DecyclifiedBoole3,
        Builtin::Bell3,
        Builtin::Bell3SharedLabel,
        Builtin::Bell3Distinct,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Builtin::Boole3 => "boole3",
            Builtin::Boole3Labeled => "boole3-labeled",
            Builtin::DecyclifiedBoole3 => "decyclified3",
            Builtin::Bell3 => "bell3",
            Builtin::Bell3SharedLabel => "bell3-shared-label",
            Builtin::Bell3Distinct => "bell3-distinct",
        }
    }

    pub fn expression(self) -> Expression<Rational64> {
        let int = Rational64::from_integer;
        let abc = [("a", "b"), ("a", "c"), ("b", "c")];
        let aa = |x: &str, y: &str| (Variable::a(x), Variable::a(y));
        let ab = |x: &str, y: &str| (Variable::a(x), Variable::b(y));
        match self {
            Builtin::Boole3 => Expression::pairwise_sum(
                &abc.map(|(x, y)| aa(x, y)),
                Comparison::AtLeast,
                Some(int(-1)),
            ),
            Builtin::Boole3Labeled => {
                let mut n = 0;
                let mut lab = |s: &str| {
                    n += 1;
                    Variable::labeled(Station::A, s, n.to_string())
                };
                let pairs: Vec<_> = abc.iter().map(|(x, y)| (lab(x), lab(y))).collect();
                Expression::pairwise_sum(&pairs, Comparison::AtLeast, Some(int(-3)))
            }
            Builtin::DecyclifiedBoole3 => {
                let mut e = decyclify(&Builtin::Boole3.expression(), 1);
                e.stated_bound = Some(int(-3));
                e
            }
            Builtin::Bell3 => Expression::pairwise_sum(
                &abc.map(|(x, y)| ab(x, y)),
                Comparison::AtMost,
                Some(int(1)),
            ),
            Builtin::Bell3SharedLabel => {
                let pairs = abc.map(|(x, y)| {
                    (
                        Variable::labeled(Station::A, x, "n"),
                        Variable::labeled(Station::B, y, "n"),
                    )
                });
                Expression::pairwise_sum(&pairs, Comparison::AtMost, Some(int(1)))
            }
            Builtin::Bell3Distinct => {
                let pairs: Vec<_> = abc
                    .iter()
                    .enumerate()
                    .map(|(k, (x, y))| {
                        let m = k + 1;
                        (
                            Variable::labeled(Station::A, *x, format!("st{m}")),
                            Variable::labeled(Station::B, *y, format!("st{m}'")),
                        )
                    })
                    .collect();
                Expression::pairwise_sum(&pairs, Comparison::AtMost, Some(int(3)))
            }
        }
    }
}

impl FromStr for Builtin {
    type Err = AlgebraError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Builtin::ALL
            .into_iter()
            .find(|b| b.name() == s)
            .ok_or_else(|| {
                let names: Vec<_> = Builtin::ALL.iter().map(|b| b.name()).collect();
                AlgebraError::Format(format!(
                    "unknown builtin `{s}` (expected one of {})",
                    names.join(", ")
                ))
            })
    }
}
