//! Feasibility as a linear program over the 2^k atoms.
//!
//! Instead of a bare feasibility problem we maximize how far the given
//! expectations can be stretched: find p ≥ 0 with Σp = 1 and E_p[f_q] = s·e_q
//! for every constraint q, maximizing s (capped at 2). The instance is
//! feasible iff s* ≥ 1. On the feasible side, p*/s* mixed with the uniform
//! distribution (whose pair and single expectations are all zero) is a
//! witness. On the infeasible side the optimal duals give a function
//! g(ω) = y0 + Σ y_q f_q(ω) that is non-negative on every atom yet has
//! negative expectation under the requested values — a Farkas certificate.

use std::collections::BTreeMap;

use super::simplex::{solve, LinearProgram, LpOutcome};
use super::{spin, CorrelationSet, FeasibilityError, Verdict, BOUNDARY_TOL};
use crate::scalar::Real;

/// g(ω) = constant + Σ pairs[(i,j)]·x_i x_j + Σ singles[i]·x_i.
#[derive(Debug, Clone, PartialEq)]
pub struct Certificate<F> {
    pub constant: F,
    pub pairs: BTreeMap<(usize, usize), F>,
    pub singles: BTreeMap<usize, F>,
}

impl<F: Real> Certificate<F> {
    pub fn at_atom(&self, omega: usize) -> F {
        let pairs = self.pairs.iter().fold(F::zero(), |acc, (&(i, j), &y)| {
            acc + y * spin::<F>(omega, i) * spin::<F>(omega, j)
        });
        let singles = self
            .singles
            .iter()
            .fold(F::zero(), |acc, (&i, &y)| acc + y * spin::<F>(omega, i));
        self.constant + pairs + singles
    }

    /// Smallest value over all atoms; ≥ 0 (up to rounding) for a valid certificate.
    pub fn min_over_atoms(&self, k: usize) -> F {
        (0..1usize << k)
            .map(|w| self.at_atom(w))
            .fold(F::infinity(), F::min)
    }

    /// Expectation of g implied by the given correlations; negative for a
    /// valid certificate of infeasibility. Missing entries count as zero.
    pub fn value(&self, c: &CorrelationSet<F>) -> F {
        let pairs = self.pairs.iter().fold(F::zero(), |acc, (&(i, j), &y)| {
            acc + y * c.pair(i, j).unwrap_or(F::zero())
        });
        let singles = self.singles.iter().fold(F::zero(), |acc, (&i, &y)| {
            acc + y * c.singles().get(&i).copied().unwrap_or(F::zero())
        });
        self.constant + pairs + singles
    }

    /// Human-readable aggregated inequality, `c0 + c12·E(1,2) + … ≥ 0`.
    pub fn describe(&self) -> String {
        let mut s = format!("{:.6}", self.constant);
        for (&(i, j), &y) in &self.pairs {
            if y != F::zero() {
                s.push_str(&format!(" {:+.6}·E({i},{j})", y));
            }
        }
        for (&i, &y) in &self.singles {
            if y != F::zero() {
                s.push_str(&format!(" {:+.6}·E({i})", y));
            }
        }
        s.push_str(" >= 0");
        s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpReport<F> {
    pub verdict: Verdict,
    /// Largest factor s ≤ 2 by which the expectations can be scaled and stay feasible.
    pub scale: F,
    /// Atom probabilities (bit i of the index set ⇔ x_i = −1), when feasible.
    pub witness: Option<Vec<F>>,
    /// When infeasible.
    pub certificate: Option<Certificate<F>>,
}

impl<F: Real> LpReport<F> {
    /// Largest deviation between the witness expectations and `c`.
    pub fn witness_error(&self, c: &CorrelationSet<F>) -> Option<F> {
        let p = self.witness.as_ref()?;
        let expect = |f: &dyn Fn(usize) -> F| {
            p.iter()
                .enumerate()
                .fold(F::zero(), |acc, (w, &pw)| acc + pw * f(w))
        };
        let mut worst = (p.iter().fold(F::zero(), |a, &x| a + x) - F::one()).abs();
        for (&(i, j), &e) in c.pairs() {
            let got = expect(&|w| spin::<F>(w, i) * spin::<F>(w, j));
            worst = worst.max((got - e).abs());
        }
        for (&i, &e) in c.singles() {
            worst = worst.max((expect(&|w| spin::<F>(w, i)) - e).abs());
        }
        Some(worst)
    }
}

pub fn feasible_lp<F: Real>(c: &CorrelationSet<F>) -> Result<LpReport<F>, FeasibilityError> {
    let k = c.k();
    let atoms = 1usize << k;
    let n = atoms + 2;
    let s_col = atoms;
    let u_col = atoms + 1;

    let pair_keys: Vec<(usize, usize)> = c.pairs().keys().copied().collect();
    let single_keys: Vec<usize> = c.singles().keys().copied().collect();
    let mut a = Vec::with_capacity(pair_keys.len() + single_keys.len() + 2);
    let row = |f: &dyn Fn(usize) -> F, e: F| {
        let mut r: Vec<F> = (0..atoms).map(f).collect();
        r.push(-e);
        r.push(F::zero());
        r
    };
    for &(i, j) in &pair_keys {
        a.push(row(
            &|w| spin::<F>(w, i) * spin::<F>(w, j),
            c.pairs()[&(i, j)],
        ));
    }
    for &i in &single_keys {
        a.push(row(&|w| spin::<F>(w, i), c.singles()[&i]));
    }
    let constrained = a.len();
    let mut norm = vec![F::one(); atoms];
    norm.extend([F::zero(), F::zero()]);
    a.push(norm);
    let mut cap = vec![F::zero(); n];
    cap[s_col] = F::one();
    cap[u_col] = F::one();
    a.push(cap);

    let mut b = vec![F::zero(); constrained];
    b.extend([F::one(), F::lit(2.0)]);
    let mut cost = vec![F::zero(); n];
    cost[s_col] = F::one();

    let sol = match solve(&LinearProgram { a, b, c: cost }) {
        LpOutcome::Optimal(s) => s,
        // the uniform distribution with s = 0 is always feasible and s ≤ 2
        other => return Err(FeasibilityError::Solver(format!("{other:?}"))),
    };
    let s = sol.x[s_col];
    let tol = F::lit(BOUNDARY_TOL).max(F::solver_eps() * F::lit(10.0));
    let verdict = if (s - F::one()).abs() < tol {
        Verdict::Boundary
    } else if s > F::one() {
        Verdict::Feasible
    } else {
        Verdict::Infeasible
    };

    let (witness, certificate) = if verdict.is_feasible() {
        let mix = (F::one() - F::one() / s) / F::lit(atoms as f64);
        let mut q: Vec<F> = sol.x[..atoms]
            .iter()
            .map(|&p| (p / s + mix).max(F::zero()))
            .collect();
        let total = q.iter().fold(F::zero(), |acc, &x| acc + x);
        q.iter_mut().for_each(|x| *x = *x / total);
        (Some(q), None)
    } else {
        let y = &sol.duals;
        let cert = Certificate {
            constant: y[constrained],
            pairs: pair_keys.iter().zip(y).map(|(&p, &v)| (p, v)).collect(),
            singles: single_keys
                .iter()
                .zip(&y[pair_keys.len()..constrained])
                .map(|(&i, &v)| (i, v))
                .collect(),
        };
        (None, Some(cert))
    };
    Ok(LpReport {
        verdict,
        scale: s,
        witness,
        certificate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn triple(a: f64, b: f64, c: f64) -> CorrelationSet<f64> {
        CorrelationSet::triple(a, b, c).unwrap()
    }

    #[test]
    fn perfectly_correlated_triple() {
        let c = triple(1.0, 1.0, 1.0);
        let r = feasible_lp(&c).unwrap();
        assert_eq!(r.verdict, Verdict::Boundary);
        let w = r.witness.as_ref().unwrap();
        // only +++ and −−− can carry weight
        for (omega, &p) in w.iter().enumerate() {
            if omega != 0 && omega != 7 {
                assert!(p < 1e-9, "atom {omega} has {p}");
            }
        }
        assert!(r.witness_error(&c).unwrap() < 1e-9);
    }

    #[test]
    fn singlet_triple_is_refuted() {
        let c = triple(-0.5, -0.5, -0.5);
        let r = feasible_lp(&c).unwrap();
        assert_eq!(r.verdict, Verdict::Infeasible);
        assert!((r.scale - 2.0 / 3.0).abs() < 1e-9);
        let cert = r.certificate.unwrap();
        assert!(cert.min_over_atoms(3) > -1e-9);
        assert!(cert.value(&c) < -1e-6);
    }

    #[test]
    fn sawtooth_triple_is_boundary() {
        let c = triple(-1.0 / 3.0, -1.0 / 3.0, -1.0 / 3.0);
        let r = feasible_lp(&c).unwrap();
        assert_eq!(r.verdict, Verdict::Boundary);
        assert!(r.witness_error(&c).unwrap() < 1e-9);
    }

    #[test]
    fn singles_constrain_too() {
        // E(x0) = 1 forces x0 = +1, so E(x0 x1) must equal E(x1)
        let c = CorrelationSet::new(2)
            .unwrap()
            .with_single(0, 1.0)
            .unwrap()
            .with_single(1, 0.2)
            .unwrap()
            .with_pair(0, 1, -0.4)
            .unwrap();
        let r = feasible_lp(&c).unwrap();
        assert_eq!(r.verdict, Verdict::Infeasible);
        let cert = r.certificate.unwrap();
        assert!(cert.min_over_atoms(2) > -1e-9);
        assert!(cert.value(&c) < 0.0);
        let ok = c.clone().with_pair(0, 1, 0.2).unwrap();
        assert!(feasible_lp(&ok).unwrap().verdict.is_feasible());
    }

    #[test]
    fn empty_and_large_sets() {
        let r = feasible_lp(&CorrelationSet::<f64>::new(0).unwrap()).unwrap();
        assert_eq!(r.verdict, Verdict::Feasible);
        // equal pair correlations e: E[(Σx)²] = k + k(k−1)e must be ≥ (k mod 2)
        let all_pairs = |k: usize, e: f64| {
            let mut c = CorrelationSet::new(k).unwrap();
            for i in 0..k {
                for j in i + 1..k {
                    c = c.with_pair(i, j, e).unwrap();
                }
            }
            c
        };
        let c = all_pairs(4, -1.0 / 3.0);
        let r = feasible_lp(&c).unwrap();
        assert_eq!(r.verdict, Verdict::Boundary);
        assert!(r.witness_error(&c).unwrap() < 1e-9);
        assert_eq!(
            feasible_lp(&all_pairs(5, -0.25)).unwrap().verdict,
            Verdict::Infeasible
        );
        assert_eq!(
            feasible_lp(&all_pairs(5, -0.2)).unwrap().verdict,
            Verdict::Boundary
        );
    }

    #[test]
    fn single_precision_agrees() {
        let c = CorrelationSet::<f32>::triple(-0.5, -0.5, -0.5).unwrap();
        assert_eq!(feasible_lp(&c).unwrap().verdict, Verdict::Infeasible);
        let c = CorrelationSet::<f32>::triple(0.2, -0.1, 0.3).unwrap();
        assert_eq!(feasible_lp(&c).unwrap().verdict, Verdict::Feasible);
    }
}
