//! Dense two-phase tableau simplex for `max c·x  s.t.  A x = b, x ≥ 0`.
//!
//! Small, dense problems only (a few thousand columns, under a hundred rows).
//! Dantzig pricing, falling back to Bland's rule after a run of degenerate
//! pivots so cycling cannot occur. The artificial columns are kept through
//! phase 2; at the optimum they hold B⁻¹, from which the duals are read.

use crate::scalar::Real;

#[derive(Debug, Clone)]
pub struct LinearProgram<F> {
    /// Row-major, `b.len()` rows of `c.len()` entries.
    pub a: Vec<Vec<F>>,
    pub b: Vec<F>,
    pub c: Vec<F>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution<F> {
    pub x: Vec<F>,
    pub objective: F,
    /// One multiplier per row: y = c_B B⁻¹ for the original (unflipped) rows.
    pub duals: Vec<F>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome<F> {
    Optimal(Solution<F>),
    Infeasible,
    Unbounded,
    IterationLimit,
}

const MAX_ITERATIONS: usize = 100_000;

struct Tableau<F> {
    m: usize,
    n: usize,
    /// m rows of n structural + m artificial + 1 rhs entries
    rows: Vec<Vec<F>>,
    /// reduced costs (same width), last entry = −objective
    obj: Vec<F>,
    basis: Vec<usize>,
    eps: F,
}

impl<F: Real> Tableau<F> {
    fn rhs(&self) -> usize {
        self.n + self.m
    }

    fn price(&mut self, cost: &[F]) {
        let w = self.rhs() + 1;
        self.obj = (0..w)
            .map(|j| if j < cost.len() { cost[j] } else { F::zero() })
            .collect();
        for (i, row) in self.rows.iter().enumerate() {
            let cb = cost[self.basis[i]];
            if cb != F::zero() {
                for (o, &v) in self.obj.iter_mut().zip(row) {
                    *o = *o - cb * v;
                }
            }
        }
    }

    fn pivot(&mut self, r: usize, col: usize) {
        let p = self.rows[r][col];
        for v in self.rows[r].iter_mut() {
            *v = *v / p;
        }
        let pivot_row = self.rows[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[col];
            if f != F::zero() {
                for (v, &pv) in row.iter_mut().zip(&pivot_row) {
                    *v = *v - f * pv;
                }
                row[col] = F::zero();
            }
        }
        let f = self.obj[col];
        if f != F::zero() {
            for (v, &pv) in self.obj.iter_mut().zip(&pivot_row) {
                *v = *v - f * pv;
            }
            self.obj[col] = F::zero();
        }
        self.basis[r] = col;
    }

    /// Maximize with entering columns restricted to `0..limit`.
    fn run(&mut self, limit: usize) -> Result<(), LpOutcome<F>> {
        let rhs = self.rhs();
        let mut degenerate_run = 0usize;
        for _ in 0..MAX_ITERATIONS {
            let bland = degenerate_run > self.m.max(8);
            let entering = if bland {
                (0..limit).find(|&j| self.obj[j] > self.eps)
            } else {
                (0..limit)
                    .filter(|&j| self.obj[j] > self.eps)
                    .max_by(|&x, &y| self.obj[x].partial_cmp(&self.obj[y]).unwrap())
            };
            let Some(col) = entering else {
                return Ok(());
            };
            let mut leave: Option<(usize, F)> = None;
            for (i, row) in self.rows.iter().enumerate() {
                let a = row[col];
                if a > self.eps {
                    let ratio = row[rhs] / a;
                    let better = match leave {
                        None => true,
                        Some((k, best)) => {
                            ratio < best - self.eps
                                || (ratio <= best + self.eps && self.basis[i] < self.basis[k])
                        }
                    };
                    if better {
                        leave = Some((i, ratio));
                    }
                }
            }
            let Some((r, ratio)) = leave else {
                return Err(LpOutcome::Unbounded);
            };
            if ratio.abs() <= self.eps {
                degenerate_run += 1;
            } else {
                degenerate_run = 0;
            }
            self.pivot(r, col);
        }
        Err(LpOutcome::IterationLimit)
    }
}

pub fn solve<F: Real>(lp: &LinearProgram<F>) -> LpOutcome<F> {
    let m = lp.b.len();
    let n = lp.c.len();
    assert!(
        lp.a.len() == m && lp.a.iter().all(|r| r.len() == n),
        "ragged LP"
    );
    let flip: Vec<bool> = lp.b.iter().map(|&v| v < F::zero()).collect();
    let rows = (0..m)
        .map(|i| {
            let s = if flip[i] { -F::one() } else { F::one() };
            let mut row: Vec<F> = lp.a[i].iter().map(|&v| s * v).collect();
            row.extend((0..m).map(|k| if k == i { F::one() } else { F::zero() }));
            row.push(s * lp.b[i]);
            row
        })
        .collect();
    let mut t = Tableau {
        m,
        n,
        rows,
        obj: Vec::new(),
        basis: (n..n + m).collect(),
        eps: F::solver_eps(),
    };

    // phase 1: maximize −Σ artificials
    let phase1: Vec<F> = (0..n + m)
        .map(|j| if j < n { F::zero() } else { -F::one() })
        .collect();
    t.price(&phase1);
    if let Err(outcome) = t.run(n) {
        return outcome;
    }
    let scale = lp.b.iter().fold(F::one(), |acc, v| acc.max(v.abs()));
    if -t.obj[t.rhs()] < -(t.eps * scale * F::lit(100.0)) {
        return LpOutcome::Infeasible;
    }
    // drive zero-level artificials out where a structural column allows it;
    // rows where none does are redundant and stay put at zero.
    for r in 0..m {
        if t.basis[r] >= n {
            if let Some(col) = (0..n).find(|&j| t.rows[r][j].abs() > t.eps) {
                t.pivot(r, col);
            }
        }
    }

    let mut phase2 = lp.c.clone();
    phase2.extend(std::iter::repeat_n(F::zero(), m));
    t.price(&phase2);
    if let Err(outcome) = t.run(n) {
        return outcome;
    }

    let rhs = t.rhs();
    let mut x = vec![F::zero(); n];
    for (i, &j) in t.basis.iter().enumerate() {
        if j < n {
            x[j] = t.rows[i][rhs];
        }
    }
    let objective = x
        .iter()
        .zip(&lp.c)
        .fold(F::zero(), |acc, (&v, &c)| acc + v * c);
    let duals = (0..m)
        .map(|col| {
            let y = (0..m).fold(F::zero(), |acc, k| {
                acc + phase2[t.basis[k]] * t.rows[k][n + col]
            });
            if flip[col] {
                -y
            } else {
                y
            }
        })
        .collect();
    LpOutcome::Optimal(Solution {
        x,
        objective,
        duals,
    })
}
