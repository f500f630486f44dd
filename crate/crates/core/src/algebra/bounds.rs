use rayon::prelude::*;

use super::{compile, AlgebraError, ConstraintSet, Expression};
use crate::scalar::Coefficient;

/// Enumeration guard: at most 2^30 assignments.
pub const MAX_VARIABLES: usize = 30;

/// Low bits walked by Gray code inside one parallel chunk.
const CHUNK_BITS: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bounds<T> {
    pub min: T,
    pub max: T,
}

/// (−Σ|coeff|, +Σ|coeff|).
pub fn trivial_bounds<T: Coefficient>(e: &Expression<T>) -> Bounds<T> {
    let s = e
        .terms()
        .iter()
        .fold(T::zero(), |acc, t| acc + t.coeff.abs());
    Bounds { min: -s, max: s }
}

/// Exact minimum and maximum over all ±1 assignments of the distinct variables.
pub fn tight_bounds<T: Coefficient>(
    e: &Expression<T>,
    c: ConstraintSet,
) -> Result<Bounds<T>, AlgebraError> {
    let compiled = compile(e, c)?;
    let n = compiled.vars.len();
    let terms = &compiled.terms;

    let low = n.min(CHUNK_BITS);
    let high = n - low;
    // terms touched by each low variable
    let touching: Vec<Vec<usize>> = (0..low)
        .map(|k| {
            terms
                .iter()
                .enumerate()
                .filter(|(_, (_, m))| m >> k & 1 == 1)
                .map(|(i, _)| i)
                .collect()
        })
        .collect();

    let scan_chunk = |prefix: u64| -> Bounds<T> {
        let start = prefix << low;
        let mut signs: Vec<bool> = terms
            .iter()
            .map(|(_, m)| (start & m).count_ones() % 2 == 1)
            .collect();
        let mut value =
            terms.iter().zip(&signs).fold(
                T::zero(),
                |acc, ((c, _), &neg)| if neg { acc - *c } else { acc + *c },
            );
        let mut best = Bounds {
            min: value,
            max: value,
        };
        for step in 1u64..(1u64 << low) {
            let k = step.trailing_zeros() as usize;
            for &t in &touching[k] {
                let c = terms[t].0;
                // flip term t: subtract twice its current contribution
                if signs[t] {
                    value = value + c + c;
                } else {
                    value = value - c - c;
                }
                signs[t] = !signs[t];
            }
            if value < best.min {
                best.min = value;
            }
            if value > best.max {
                best.max = value;
            }
        }
        best
    };

    let merge = |x: Bounds<T>, y: Bounds<T>| Bounds {
        min: if y.min < x.min { y.min } else { x.min },
        max: if y.max > x.max { y.max } else { x.max },
    };

    let result = if high == 0 {
        scan_chunk(0)
    } else {
        (0..1u64 << high)
            .into_par_iter()
            .map(scan_chunk)
            .reduce_with(merge)
            .expect("at least one chunk")
    };
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::super::builtins::Builtin;
    use super::super::{Comparison, Term, Variable};
    use super::*;
    use crate::model::Station;
    use num_rational::Rational64;

    fn r(n: i64) -> Rational64 {
        Rational64::from_integer(n)
    }

    #[test]
    fn builtin_bounds() {
        let none = ConstraintSet::none();
        let anti = ConstraintSet::anticorrelated();
        let b = tight_bounds(&Builtin::Boole3.expression(), none).unwrap();
        assert_eq!((b.min, b.max), (r(-1), r(3)));
        let b = tight_bounds(&Builtin::Boole3Labeled.expression(), none).unwrap();
        assert_eq!((b.min, b.max), (r(-3), r(3)));
        let b = tight_bounds(&Builtin::Bell3.expression(), anti).unwrap();
        assert_eq!((b.min, b.max), (r(-3), r(1)));
        let b = tight_bounds(&Builtin::Bell3SharedLabel.expression(), anti).unwrap();
        assert_eq!((b.min, b.max), (r(-3), r(1)));
        let b = tight_bounds(&Builtin::Bell3Distinct.expression(), anti).unwrap();
        assert_eq!((b.min, b.max), (r(-3), r(3)));
    }

    #[test]
    fn rational_coefficients_are_exact() {
        let e = Expression::new(
            vec![
                Term::new(
                    Rational64::new(1, 3),
                    vec![Variable::a("a"), Variable::a("b")],
                ),
                Term::new(Rational64::new(-1, 2), vec![Variable::a("b")]),
            ],
            Comparison::AtLeast,
            None,
        )
        .unwrap();
        let b = tight_bounds(&e, ConstraintSet::none()).unwrap();
        assert_eq!(b.min, Rational64::new(-5, 6));
        assert_eq!(b.max, Rational64::new(5, 6));
    }

    #[test]
    fn repeated_variable_squares_to_one() {
        let e = Expression::new(
            vec![Term::new(1i64, vec![Variable::a("a"), Variable::a("a")])],
            Comparison::AtLeast,
            None,
        )
        .unwrap();
        let b = tight_bounds(&e, ConstraintSet::none()).unwrap();
        assert_eq!((b.min, b.max), (1, 1));
        // B_a = −A_a under anticorrelation
        let e = Expression::new(
            vec![Term::new(1i64, vec![Variable::a("a"), Variable::b("a")])],
            Comparison::AtLeast,
            None,
        )
        .unwrap();
        let b = tight_bounds(&e, ConstraintSet::anticorrelated()).unwrap();
        assert_eq!((b.min, b.max), (-1, -1));
    }

    #[test]
    fn guard_refuses_large_expressions() {
        let terms = (0..31)
            .map(|i| Term::new(1i64, vec![Variable::new(Station::A, format!("s{i}"))]))
            .collect();
        let e = Expression::new(terms, Comparison::AtLeast, None).unwrap();
        assert_eq!(
            tight_bounds(&e, ConstraintSet::none()).unwrap_err(),
            AlgebraError::TooManyVariables {
                count: 31,
                limit: 30
            }
        );
    }

    #[test]
    fn chunked_enumeration_matches_small_case() {
        // 20 variables in a chain: bounds ±19 for pairwise chain, −19 reachable by alternation
        let terms = (0..19)
            .map(|i| {
                Term::new(
                    1i64,
                    vec![
                        Variable::new(Station::A, format!("v{i:02}")),
                        Variable::new(Station::A, format!("v{:02}", i + 1)),
                    ],
                )
            })
            .collect();
        let e = Expression::new(terms, Comparison::AtLeast, None).unwrap();
        let b = tight_bounds(&e, ConstraintSet::none()).unwrap();
        assert_eq!((b.min, b.max), (-19, 19));
    }
}
