//! Cyclicity: the tight bounds of an expression are strictly sharper than the
//! trivial ones.
//!
//! For sums of pairwise products there is a graph view: variables are
//! vertices and terms are signed edges. The maximum is trivial iff every
//! edge can reach `+|c|`, i.e. x_u·x_v = sign(c) is consistent on all cycles;
//! the minimum likewise with the opposite signs. A parity union-find decides
//! both systems and yields the first frustrated cycle as a witness.

use std::collections::VecDeque;
use std::fmt;

use super::{
    compile, tight_bounds, trivial_bounds, AlgebraError, Bounds, ConstraintSet, Expression, Term,
    Variable,
};
use crate::scalar::Coefficient;

/// Which side of the trivial bound a frustrated cycle blocks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Polarity {
    /// Σ|c| is unreachable.
    Max,
    /// −Σ|c| is unreachable.
    Min,
}

/// A closed loop of variables; the first vertex is repeated at the end.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Witness {
    pub cycle: Vec<Variable>,
    pub polarity: Polarity,
}

impl fmt::Display for Witness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.cycle.iter().map(|v| v.to_string()).collect();
        f.write_str(&parts.join(" – "))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cyclicity<T> {
    pub cyclic: bool,
    pub bounds: Bounds<T>,
    pub trivial: Bounds<T>,
    /// Present for cyclic sums of pairwise products.
    pub witness: Option<Witness>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GraphVerdict {
    pub cyclic: bool,
    pub witness: Option<Witness>,
}

/// Bound-gap cyclicity, with a graph witness for pairwise-product sums.
pub fn has_cyclicity<T: Coefficient>(
    e: &Expression<T>,
    c: ConstraintSet,
) -> Result<Cyclicity<T>, AlgebraError> {
    let bounds = tight_bounds(e, c)?;
    let trivial = trivial_bounds(e);
    let cyclic = bounds.min > trivial.min || bounds.max < trivial.max;
    let witness = if cyclic {
        graph_cyclicity(e, c)?.and_then(|g| g.witness)
    } else {
        None
    };
    Ok(Cyclicity {
        cyclic,
        bounds,
        trivial,
        witness,
    })
}

/// Graph-based cyclicity; `None` unless every term is a product of two factors.
pub fn graph_cyclicity<T: Coefficient>(
    e: &Expression<T>,
    c: ConstraintSet,
) -> Result<Option<GraphVerdict>, AlgebraError> {
    if !e.is_pairwise() {
        return Ok(None);
    }
    let compiled = compile(e, c)?;
    let n = compiled.vars.len();
    let mut max_side = ParityForest::new(n);
    let mut min_side = ParityForest::new(n);

    for (term, (coeff, _)) in e.terms().iter().zip(&compiled.terms) {
        let [u, v] = endpoints(term, c, &compiled.vars);
        let negative = *coeff < T::zero();
        // max: x_u x_v = sign(c) → "opposite" iff c < 0; min: the reverse
        for (forest, opposite, polarity) in [
            (&mut max_side, negative, Polarity::Max),
            (&mut min_side, !negative, Polarity::Min),
        ] {
            if let Err(cycle) = forest.constrain(u, v, opposite) {
                let cycle = normalize(cycle)
                    .into_iter()
                    .map(|k| compiled.vars[k].clone())
                    .collect();
                return Ok(Some(GraphVerdict {
                    cyclic: true,
                    witness: Some(Witness { cycle, polarity }),
                }));
            }
        }
    }
    Ok(Some(GraphVerdict {
        cyclic: false,
        witness: None,
    }))
}

fn endpoints<T>(term: &Term<T>, c: ConstraintSet, vars: &[Variable]) -> [usize; 2] {
    let idx = |v: &Variable| {
        vars.binary_search(&c.substitute(v).0)
            .expect("variable collected during compile")
    };
    [idx(&term.factors[0]), idx(&term.factors[1])]
}

/// Rotate to start at the smallest vertex and walk towards its smaller neighbour.
fn normalize(mut cycle: Vec<usize>) -> Vec<usize> {
    cycle.pop();
    let start = (0..cycle.len()).min_by_key(|&i| cycle[i]).unwrap_or(0);
    cycle.rotate_left(start);
    if cycle.len() > 2 && cycle[cycle.len() - 1] < cycle[1] {
        cycle[1..].reverse();
    }
    let first = cycle[0];
    cycle.push(first);
    cycle
}

/// Union-find with parity to the root, plus the accepted edges as a forest
/// so a conflicting edge can be turned into an explicit cycle.
struct ParityForest {
    parent: Vec<usize>,
    rank: Vec<u8>,
    parity: Vec<bool>,
    adjacency: Vec<Vec<usize>>,
}

impl ParityForest {
    fn new(n: usize) -> Self {
        ParityForest {
            parent: (0..n).collect(),
            rank: vec![0; n],
            parity: vec![false; n],
            adjacency: vec![Vec::new(); n],
        }
    }

    fn find(&mut self, x: usize) -> (usize, bool) {
        let p = self.parent[x];
        if p == x {
            return (x, false);
        }
        let (root, par) = self.find(p);
        self.parent[x] = root;
        self.parity[x] ^= par;
        (root, self.parity[x])
    }

    /// Impose x_u·x_v = −1 if `opposite`, else +1. On contradiction returns
    /// the closed vertex cycle (first vertex repeated).
    fn constrain(&mut self, u: usize, v: usize, opposite: bool) -> Result<(), Vec<usize>> {
        if u == v {
            return if opposite { Err(vec![u, u]) } else { Ok(()) };
        }
        let (ru, pu) = self.find(u);
        let (rv, pv) = self.find(v);
        if ru == rv {
            if pu ^ pv != opposite {
                let mut cycle = self.tree_path(u, v);
                cycle.push(u);
                return Err(cycle);
            }
            return Ok(());
        }
        let (hi, lo) = if self.rank[ru] >= self.rank[rv] {
            (ru, rv)
        } else {
            (rv, ru)
        };
        self.parent[lo] = hi;
        self.parity[lo] = pu ^ pv ^ opposite;
        if self.rank[hi] == self.rank[lo] {
            self.rank[hi] += 1;
        }
        self.adjacency[u].push(v);
        self.adjacency[v].push(u);
        Ok(())
    }

    fn tree_path(&self, from: usize, to: usize) -> Vec<usize> {
        let mut prev = vec![usize::MAX; self.adjacency.len()];
        prev[from] = from;
        let mut queue = VecDeque::from([from]);
        while let Some(x) = queue.pop_front() {
            if x == to {
                break;
            }
            for &y in &self.adjacency[x] {
                if prev[y] == usize::MAX {
                    prev[y] = x;
                    queue.push_back(y);
                }
            }
        }
        let mut path = vec![to];
        let mut x = to;
        while x != from {
            x = prev[x];
            path.push(x);
        }
        path.reverse();
        path
    }
}

/// Give every factor occurrence its own label `st{m}`, `st{m+1}`, … in
/// term-then-factor order. The stated bound is carried over unchanged.
pub fn decyclify<T: Coefficient>(e: &Expression<T>, start: u64) -> Expression<T> {
    let mut next = start;
    let terms = e
        .terms()
        .iter()
        .map(|t| {
            let factors = t
                .factors
                .iter()
                .map(|f| {
                    let v = Variable::labeled(f.station, f.setting.clone(), format!("st{next}"));
                    next += 1;
                    v
                })
                .collect();
            Term::new(t.coeff, factors)
        })
        .collect();
    Expression::new(terms, e.comparison, e.stated_bound).expect("same shape as a valid expression")
}

#[cfg(test)]
mod tests {
    use super::super::builtins::Builtin;
    use super::*;
    use num_rational::Rational64;

    #[test]
    fn boole3_cycle_witness() {
        let c = has_cyclicity(&Builtin::Boole3.expression(), ConstraintSet::none()).unwrap();
        assert!(c.cyclic);
        let w = c.witness.expect("pairwise expression has a witness");
        assert_eq!(w.polarity, Polarity::Min);
        assert_eq!(w.to_string(), "A_a – A_b – A_c – A_a");
    }

    #[test]
    fn decyclified_and_single_term_are_acyclic() {
        let c = has_cyclicity(
            &Builtin::DecyclifiedBoole3.expression(),
            ConstraintSet::none(),
        )
        .unwrap();
        assert!(!c.cyclic);
        assert!(c.witness.is_none());
        let single: Expression<Rational64> = Expression::pairwise_sum(
            &[(Variable::a("a"), Variable::a("b"))],
            super::super::Comparison::AtLeast,
            None,
        );
        assert!(
            !has_cyclicity(&single, ConstraintSet::none())
                .unwrap()
                .cyclic
        );
    }

    #[test]
    fn decyclify_relabels_with_fresh_labels() {
        let d = decyclify(&Builtin::Boole3.expression(), 1);
        assert_eq!(d.terms(), Builtin::DecyclifiedBoole3.expression().terms());
        assert_eq!(d.stated_bound, Some(Rational64::from_integer(-1)));
        let b = tight_bounds(&d, ConstraintSet::none()).unwrap();
        assert_eq!(b.min, Rational64::from_integer(-3));
        // relabeling again moves labels but keeps bounds
        let again = decyclify(&d, 7);
        assert_eq!(again.terms()[0].factors[0].st.as_deref(), Some("st7"));
        assert_eq!(tight_bounds(&again, ConstraintSet::none()).unwrap(), b);
        // Bell form with anticorrelation per label: only trivial bounds remain
        let bell = decyclify(&Builtin::Bell3.expression(), 1);
        let b = tight_bounds(&bell, ConstraintSet::anticorrelated()).unwrap();
        assert_eq!(
            (b.min, b.max),
            (Rational64::from_integer(-3), Rational64::from_integer(3))
        );
    }

    #[test]
    fn bell_form_cyclic_only_under_anticorrelation() {
        let e = Builtin::Bell3.expression();
        let anti = has_cyclicity(&e, ConstraintSet::anticorrelated()).unwrap();
        assert!(anti.cyclic);
        assert_eq!(anti.witness.unwrap().polarity, Polarity::Max);
        assert!(!has_cyclicity(&e, ConstraintSet::none()).unwrap().cyclic);
    }

    #[test]
    fn parallel_edges_and_self_loops() {
        use super::super::Comparison::AtLeast;
        let ab = vec![Variable::a("a"), Variable::a("b")];
        let same = Expression::new(
            vec![Term::new(1i64, ab.clone()), Term::new(1, ab.clone())],
            AtLeast,
            None,
        )
        .unwrap();
        assert!(
            !graph_cyclicity(&same, ConstraintSet::none())
                .unwrap()
                .unwrap()
                .cyclic
        );
        let cancel = Expression::new(
            vec![Term::new(1i64, ab.clone()), Term::new(-1, ab)],
            AtLeast,
            None,
        )
        .unwrap();
        let g = graph_cyclicity(&cancel, ConstraintSet::none())
            .unwrap()
            .unwrap();
        assert!(g.cyclic);
        assert_eq!(g.witness.unwrap().cycle.len(), 3);
        let looped = Expression::new(
            vec![Term::new(1i64, vec![Variable::a("a"), Variable::a("a")])],
            AtLeast,
            None,
        )
        .unwrap();
        let g = graph_cyclicity(&looped, ConstraintSet::none())
            .unwrap()
            .unwrap();
        assert!(g.cyclic);
        assert_eq!(
            g.witness.unwrap().cycle,
            vec![Variable::a("a"), Variable::a("a")]
        );
    }

    #[test]
    fn non_pairwise_has_no_graph_view() {
        use super::super::Comparison::AtLeast;
        let e = Expression::new(
            vec![Term::new(
                1i64,
                vec![Variable::a("a"), Variable::a("b"), Variable::a("c")],
            )],
            AtLeast,
            None,
        )
        .unwrap();
        assert!(graph_cyclicity(&e, ConstraintSet::none())
            .unwrap()
            .is_none());
    }
}
