//! Dense bounded-variable primal simplex for
//! `min c.x  s.t.  A x = b,  l <= x <= u` with finite `l`.
//!
//! Phase 1 starts from one artificial column per row and minimises their sum;
//! phase 2 fixes artificials at zero. Bland's rule (smallest eligible index
//! entering, smallest basic index leaving among ratio ties) is used
//! throughout, so pivoting is deterministic and cannot cycle.

use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

impl LpStatus {
    pub fn name(self) -> &'static str {
        match self {
            LpStatus::Optimal => "optimal",
            LpStatus::Infeasible => "infeasible",
            LpStatus::Unbounded => "unbounded",
            LpStatus::IterationLimit => "iteration-limit",
        }
    }
}

#[derive(Debug, Clone)]
pub struct StandardForm<S> {
    pub a: Vec<Vec<S>>,
    pub b: Vec<S>,
    pub c: Vec<S>,
    pub lower: Vec<S>,
    /// `S::infinity()` for no upper bound.
    pub upper: Vec<S>,
}

#[derive(Debug, Clone)]
pub struct SimplexResult<S> {
    pub status: LpStatus,
    pub x: Vec<S>,
    /// Row duals `y` with `c_B = B^T y`.
    pub y: Vec<S>,
    pub iterations: usize,
}

const PIVOT_TOL: f64 = 1e-11;
const COST_TOL: f64 = 1e-10;
pub const FEASIBILITY_TOL: f64 = 1e-7;

struct Tableau<S> {
    /// `B^{-1} [A | D]`, D the diagonal of artificial signs.
    t: Vec<Vec<S>>,
    basis: Vec<usize>,
    is_basic: Vec<bool>,
    x: Vec<S>,
    lower: Vec<S>,
    upper: Vec<S>,
    art_sign: Vec<S>,
    n: usize,
}

enum Step {
    Optimal,
    Unbounded,
    Moved,
}

impl<S: Scalar> Tableau<S> {
    fn new(p: &StandardForm<S>) -> Self {
        let m = p.b.len();
        let n = p.c.len();
        let mut x = p.lower.clone();
        let mut art_sign = Vec::with_capacity(m);
        let mut t = Vec::with_capacity(m);
        for k in 0..m {
            let r = p.b[k]
                - p.a[k]
                    .iter()
                    .zip(&p.lower)
                    .fold(S::zero(), |acc, (&a, &l)| acc + a * l);
            let sign = if r < S::zero() { -S::one() } else { S::one() };
            art_sign.push(sign);
            // dividing the row by its sign makes the artificial column +e_k
            let mut row: Vec<S> = p.a[k].iter().map(|&a| a * sign).collect();
            row.extend((0..m).map(|j| if j == k { S::one() } else { S::zero() }));
            t.push(row);
            x.push(r.abs());
        }
        let mut lower = p.lower.clone();
        lower.extend(std::iter::repeat(S::zero()).take(m));
        let mut upper = p.upper.clone();
        upper.extend(std::iter::repeat(S::infinity()).take(m));
        let basis: Vec<usize> = (n..n + m).collect();
        let mut is_basic = vec![false; n + m];
        for &b in &basis {
            is_basic[b] = true;
        }
        Self {
            t,
            basis,
            is_basic,
            x,
            lower,
            upper,
            art_sign,
            n,
        }
    }

    fn reduced_costs(&self, cost: &[S]) -> Vec<S> {
        let mut d = cost.to_vec();
        for (row, &b) in self.t.iter().zip(&self.basis) {
            let cb = cost[b];
            if cb != S::zero() {
                for (dj, &tj) in d.iter_mut().zip(row) {
                    *dj -= cb * tj;
                }
            }
        }
        d
    }

    fn at_upper(&self, j: usize) -> bool {
        self.upper[j].is_finite() && self.x[j] >= self.upper[j]
    }

    fn step(&mut self, d: &mut [S]) -> Step {
        let tol = S::lit(COST_TOL);
        let entering = (0..d.len()).find(|&j| {
            !self.is_basic[j]
                && self.upper[j] > self.lower[j]
                && if self.at_upper(j) {
                    d[j] > tol
                } else {
                    d[j] < -tol
                }
        });
        let Some(q) = entering else {
            return Step::Optimal;
        };
        let dir = if self.at_upper(q) { -S::one() } else { S::one() };

        let piv = S::lit(PIVOT_TOL);
        let mut theta = self.upper[q] - self.lower[q];
        let mut leave: Option<(usize, bool)> = None;
        for (r, row) in self.t.iter().enumerate() {
            let g = dir * row[q];
            let b = self.basis[r];
            let limit = if g > piv {
                ((self.x[b] - self.lower[b]) / g, false)
            } else if g < -piv && self.upper[b].is_finite() {
                ((self.upper[b] - self.x[b]) / -g, true)
            } else {
                continue;
            };
            let ratio = limit.0.max(S::zero());
            let better = match leave {
                _ if ratio < theta => true,
                Some((cur, _)) => ratio == theta && b < self.basis[cur],
                None => false,
            };
            if better {
                theta = ratio;
                leave = Some((r, limit.1));
            }
        }
        if !theta.is_finite() {
            return Step::Unbounded;
        }

        let delta = dir * theta;
        for (r, row) in self.t.iter().enumerate() {
            let b = self.basis[r];
            self.x[b] -= delta * row[q];
        }
        self.x[q] += delta;

        let Some((r, to_upper)) = leave else {
            // bound flip: snap to the opposite bound
            self.x[q] = if dir > S::zero() {
                self.upper[q]
            } else {
                self.lower[q]
            };
            return Step::Moved;
        };
        let out = self.basis[r];
        self.x[out] = if to_upper {
            self.upper[out]
        } else {
            self.lower[out]
        };

        let p = self.t[r][q];
        for v in self.t[r].iter_mut() {
            *v /= p;
        }
        let pivot_row = self.t[r].clone();
        for (i, row) in self.t.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[q];
            if f != S::zero() {
                for (v, &pr) in row.iter_mut().zip(&pivot_row) {
                    *v -= f * pr;
                }
            }
        }
        let f = d[q];
        for (v, &pr) in d.iter_mut().zip(&pivot_row) {
            *v -= f * pr;
        }
        self.is_basic[out] = false;
        self.is_basic[q] = true;
        self.basis[r] = q;
        Step::Moved
    }

    /// `B^{-1} = T_art D`, so `x_B = B^{-1} (b - N x_N)` can be recomputed
    /// without accumulated update error.
    fn refresh_basics(&mut self, p: &StandardForm<S>) {
        let m = self.basis.len();
        let resid: Vec<S> = (0..m)
            .map(|k| {
                let mut r = p.b[k];
                for j in 0..self.n {
                    if !self.is_basic[j] {
                        r -= p.a[k][j] * self.x[j];
                    }
                }
                if !self.is_basic[self.n + k] {
                    r -= self.art_sign[k] * self.x[self.n + k];
                }
                r
            })
            .collect();
        for (r, row) in self.t.iter().enumerate() {
            let mut v = S::zero();
            for k in 0..m {
                v += row[self.n + k] * self.art_sign[k] * resid[k];
            }
            self.x[self.basis[r]] = v;
        }
    }

    fn duals(&self, cost: &[S]) -> Vec<S> {
        let m = self.basis.len();
        (0..m)
            .map(|k| {
                let mut y = S::zero();
                for (row, &b) in self.t.iter().zip(&self.basis) {
                    y += cost[b] * row[self.n + k];
                }
                y * self.art_sign[k]
            })
            .collect()
    }

    fn run(&mut self, cost: &[S], budget: &mut usize, used: &mut usize) -> Option<Step> {
        let mut d = self.reduced_costs(cost);
        loop {
            if *used >= *budget {
                return None;
            }
            match self.step(&mut d) {
                Step::Moved => *used += 1,
                s => return Some(s),
            }
        }
    }
}

pub fn solve<S: Scalar>(p: &StandardForm<S>, max_iterations: usize) -> SimplexResult<S> {
    let m = p.b.len();
    let n = p.c.len();
    let mut tab = Tableau::new(p);
    let mut budget = max_iterations;
    let mut used = 0;
    let finish = |tab: &Tableau<S>, status, cost: &[S], used| SimplexResult {
        status,
        x: tab.x[..n].to_vec(),
        y: tab.duals(cost),
        iterations: used,
    };

    let phase1: Vec<S> = (0..n + m)
        .map(|j| if j >= n { S::one() } else { S::zero() })
        .collect();
    let outcome = tab.run(&phase1, &mut budget, &mut used);
    tab.refresh_basics(p);
    match outcome {
        None => return finish(&tab, LpStatus::IterationLimit, &phase1, used),
        Some(Step::Unbounded) => unreachable!("phase 1 objective is bounded below"),
        _ => {}
    }
    let infeasibility: S = tab.x[n..].iter().copied().sum();
    if infeasibility > S::lit(FEASIBILITY_TOL) {
        return finish(&tab, LpStatus::Infeasible, &phase1, used);
    }
    for j in n..n + m {
        tab.upper[j] = S::zero();
        if !tab.is_basic[j] {
            tab.x[j] = S::zero();
        }
    }

    let mut phase2 = p.c.clone();
    phase2.extend(std::iter::repeat(S::zero()).take(m));
    let status = match tab.run(&phase2, &mut budget, &mut used) {
        None => LpStatus::IterationLimit,
        Some(Step::Unbounded) => LpStatus::Unbounded,
        Some(_) => LpStatus::Optimal,
    };
    tab.refresh_basics(p);
    finish(&tab, status, &phase2, used)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn form(a: Vec<Vec<f64>>, b: Vec<f64>, c: Vec<f64>, upper: Vec<f64>) -> StandardForm<f64> {
        let n = c.len();
        StandardForm {
            a,
            b,
            c,
            lower: vec![0.0; n],
            upper,
        }
    }

    #[test]
    fn small_lp() {
        // min -x - y  s.t. x + y + s = 1.5, x, y in [0, 1]
        let inf = f64::INFINITY;
        let p = form(
            vec![vec![1.0, 1.0, 1.0]],
            vec![1.5],
            vec![-1.0, -1.0, 0.0],
            vec![1.0, 1.0, inf],
        );
        let r = solve(&p, 100);
        assert_eq!(r.status, LpStatus::Optimal);
        assert!((r.x[0] + r.x[1] - 1.5).abs() < 1e-12);
        assert!((r.y[0] + 1.0).abs() < 1e-12);
    }

    #[test]
    fn infeasible_lp() {
        // x - s = 2 with x <= 1
        let p = form(
            vec![vec![1.0, -1.0]],
            vec![2.0],
            vec![1.0, 0.0],
            vec![1.0, f64::INFINITY],
        );
        assert_eq!(solve(&p, 100).status, LpStatus::Infeasible);
    }

    #[test]
    fn unbounded_lp() {
        let p = form(vec![vec![1.0, -1.0]], vec![0.0], vec![-1.0, 0.0], vec![f64::INFINITY; 2]);
        assert_eq!(solve(&p, 100).status, LpStatus::Unbounded);
    }

    #[test]
    fn iteration_limit() {
        let p = form(vec![vec![1.0, 1.0]], vec![1.0], vec![1.0, 2.0], vec![1.0, 1.0]);
        assert_eq!(solve(&p, 0).status, LpStatus::IterationLimit);
    }
}
