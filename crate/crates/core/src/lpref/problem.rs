use std::fmt::Write;

use serde::{Deserialize, Serialize};

use super::simplex::{self, LpStatus, StandardForm};
use super::LpError;
use crate::model::{omega_matrix, AllocationMatrix, CollateralInstance};
use crate::scalar::Scalar;

pub const DEFAULT_MAX_ITERATIONS: usize = 100_000;
pub const CERTIFICATE_TOL: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RowKind {
    Consistency { asset: usize },
    Exposure { account: usize },
    Group { group: usize, account: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sense {
    Le,
    Ge,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpRow {
    pub kind: RowKind,
    pub sense: Sense,
    /// `(column, coefficient)` in instance units.
    pub coefs: Vec<(usize, f64)>,
    pub rhs: f64,
}

impl LpRow {
    fn name(&self) -> String {
        match self.kind {
            RowKind::Consistency { asset } => format!("C{asset}"),
            RowKind::Exposure { account } => format!("E{account}"),
            RowKind::Group { group, account } => format!("G{group}_{account}"),
        }
    }

    /// Factor applied before solving so that the right-hand side is 1.
    fn scale(&self) -> f64 {
        match self.kind {
            RowKind::Consistency { .. } => 1.0,
            _ if self.rhs > 0.0 => 1.0 / self.rhs,
            _ => 1.0,
        }
    }
}

/// The continuous relaxation: columns `Q_ij` in row-major order (`i * m + j`)
/// with bounds `[0, min(1, B_ij / a_i)]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpProblem {
    pub n_assets: usize,
    pub n_accounts: usize,
    pub cost: Vec<f64>,
    pub upper: Vec<f64>,
    pub rows: Vec<LpRow>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    /// Largest row or bound violation, in scaled row units.
    pub primal_residual: f64,
    /// Largest reduced cost with the wrong sign for its variable's position.
    pub dual_infeasibility: f64,
    /// Largest `|reduced cost| * distance to the nearest bound`.
    pub complementary_slackness: f64,
}

impl Certificate {
    pub fn holds(&self, tol: f64) -> bool {
        self.primal_residual <= tol
            && self.dual_infeasibility <= tol
            && self.complementary_slackness <= tol
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpSolution {
    pub status: LpStatus,
    pub allocation: AllocationMatrix,
    pub objective: f64,
    pub iterations: usize,
    /// Row duals in instance units, in the order of [`LpProblem::rows`].
    pub duals: Vec<f64>,
    pub certificate: Certificate,
}

impl LpProblem {
    pub fn from_instance(instance: &CollateralInstance) -> Result<Self, LpError> {
        instance.validate()?;
        let (n, m) = (instance.n_assets(), instance.n_accounts());
        let col = |i: usize, j: usize| i * m + j;
        let omega = omega_matrix(instance);
        let mut cost = Vec::with_capacity(n * m);
        let mut upper = Vec::with_capacity(n * m);
        for i in 0..n {
            for j in 0..m {
                cost.push(omega[i][j]);
                let a = instance.assets[i].quantity;
                upper.push(match instance.limit(i, j) {
                    Some(b) if a > 0.0 => (b / a).min(1.0),
                    _ => 1.0,
                });
            }
        }
        let mut rows = Vec::new();
        for i in 0..n {
            rows.push(LpRow {
                kind: RowKind::Consistency { asset: i },
                sense: Sense::Le,
                coefs: (0..m).map(|j| (col(i, j), 1.0)).collect(),
                rhs: 1.0,
            });
        }
        for (j, acc) in instance.accounts.iter().enumerate() {
            rows.push(LpRow {
                kind: RowKind::Exposure { account: j },
                sense: Sense::Ge,
                coefs: (0..n)
                    .map(|i| (col(i, j), instance.collateral_value(i, j)))
                    .filter(|&(_, v)| v != 0.0)
                    .collect(),
                rhs: acc.exposure,
            });
        }
        if let Some(groups) = &instance.groups {
            for (g, caps) in groups.caps.iter().enumerate() {
                for (j, &cap) in caps.iter().enumerate() {
                    rows.push(LpRow {
                        kind: RowKind::Group { group: g, account: j },
                        sense: Sense::Le,
                        coefs: (0..n)
                            .filter(|&i| groups.membership[i][g] == 1)
                            .map(|i| (col(i, j), instance.assets[i].quantity))
                            .filter(|&(_, v)| v != 0.0)
                            .collect(),
                        rhs: cap,
                    });
                }
            }
        }
        Ok(Self {
            n_assets: n,
            n_accounts: m,
            cost,
            upper,
            rows,
        })
    }

    pub fn n_columns(&self) -> usize {
        self.cost.len()
    }

    /// Scaled equality form: one slack column per row after the structural
    /// columns (`+s` for `<=`, `-s` for `>=`).
    fn standard_form<S: Scalar>(&self) -> StandardForm<S> {
        let nc = self.n_columns();
        let nr = self.rows.len();
        let width = nc + nr;
        let mut a = vec![vec![S::zero(); width]; nr];
        let mut b = Vec::with_capacity(nr);
        for (k, row) in self.rows.iter().enumerate() {
            let s = row.scale();
            for &(c, v) in &row.coefs {
                a[k][c] = S::lit(v * s);
            }
            a[k][nc + k] = S::lit(match row.sense {
                Sense::Le => 1.0,
                Sense::Ge => -1.0,
            });
            b.push(S::lit(row.rhs * s));
        }
        let mut c: Vec<S> = self.cost.iter().map(|&v| S::lit(v)).collect();
        c.extend(std::iter::repeat(S::zero()).take(nr));
        let mut upper: Vec<S> = self.upper.iter().map(|&v| S::lit(v)).collect();
        upper.extend(std::iter::repeat(S::infinity()).take(nr));
        StandardForm {
            a,
            b,
            c,
            lower: vec![S::zero(); width],
            upper,
        }
    }

    pub fn solve<S: Scalar>(&self, max_iterations: usize) -> LpSolution {
        let form = self.standard_form::<S>();
        let r = simplex::solve(&form, max_iterations);
        let certificate = certify(&form, &r.x, &r.y);

        let m = self.n_accounts;
        let rows: Vec<Vec<f64>> = (0..self.n_assets)
            .map(|i| {
                (0..m)
                    .map(|j| {
                        let c = i * m + j;
                        r.x[c].as_f64().clamp(0.0, self.upper[c])
                    })
                    .collect()
            })
            .collect();
        let allocation = match r.status {
            LpStatus::Infeasible => AllocationMatrix::zeros(self.n_assets, m),
            _ => AllocationMatrix::new(rows).expect("bounded columns stay in [0, 1]"),
        };
        let objective = allocation
            .rows()
            .iter()
            .flatten()
            .zip(&self.cost)
            .map(|(q, c)| q * c)
            .sum();
        let duals = r
            .y
            .iter()
            .zip(&self.rows)
            .map(|(y, row)| y.as_f64() * row.scale())
            .collect();
        LpSolution {
            status: r.status,
            allocation,
            objective,
            iterations: r.iterations,
            duals,
            certificate,
        }
    }

    /// Fixed-column MPS text. Columns are named `Q_i_j` in row-major order;
    /// coefficients are in instance units (unscaled).
    pub fn to_mps(&self, name: &str) -> String {
        let mut out = String::new();
        let m = self.n_accounts;
        let _ = writeln!(out, "NAME          {name}");
        let _ = writeln!(out, "ROWS");
        let _ = writeln!(out, " N  COST");
        for row in &self.rows {
            let t = match row.sense {
                Sense::Le => "L",
                Sense::Ge => "G",
            };
            let _ = writeln!(out, " {t}  {}", row.name());
        }
        let _ = writeln!(out, "COLUMNS");
        for c in 0..self.n_columns() {
            let col = format!("Q_{}_{}", c / m, c % m);
            let _ = writeln!(out, "    {col:<8}  {:<8}  {:>12}", "COST", self.cost[c]);
            for row in &self.rows {
                if let Some(&(_, v)) = row.coefs.iter().find(|&&(k, _)| k == c) {
                    let _ = writeln!(out, "    {col:<8}  {:<8}  {v:>12}", row.name());
                }
            }
        }
        let _ = writeln!(out, "RHS");
        for row in &self.rows {
            let _ = writeln!(out, "    {:<8}  {:<8}  {:>12}", "RHS", row.name(), row.rhs);
        }
        let _ = writeln!(out, "BOUNDS");
        for c in 0..self.n_columns() {
            let col = format!("Q_{}_{}", c / m, c % m);
            let _ = writeln!(out, " UP {:<8}  {col:<8}  {:>12}", "BND", self.upper[c]);
        }
        let _ = writeln!(out, "ENDATA");
        out
    }
}

fn certify<S: Scalar>(form: &StandardForm<S>, x: &[S], y: &[S]) -> Certificate {
    let mut primal = 0.0f64;
    for (row, &b) in form.a.iter().zip(&form.b) {
        let lhs: S = row.iter().zip(x).map(|(&a, &v)| a * v).sum();
        primal = primal.max((lhs - b).abs().as_f64());
    }
    for ((&v, &l), &u) in x.iter().zip(&form.lower).zip(&form.upper) {
        primal = primal.max((l - v).as_f64()).max((v - u).as_f64());
    }
    let mut dual = 0.0f64;
    let mut cs = 0.0f64;
    for j in 0..form.c.len() {
        let d = form.c[j] - (0..y.len()).map(|k| y[k] * form.a[k][j]).sum::<S>();
        let (d, gap_lo, gap_hi) = (
            d.as_f64(),
            (x[j] - form.lower[j]).as_f64(),
            (form.upper[j] - x[j]).as_f64(),
        );
        // at the lower bound d >= 0 is required, at the upper d <= 0
        let wrong = if gap_lo <= CERTIFICATE_TOL {
            (-d).max(0.0)
        } else if gap_hi <= CERTIFICATE_TOL {
            d.max(0.0)
        } else {
            d.abs()
        };
        dual = dual.max(wrong);
        cs = cs.max(d.abs() * gap_lo.min(gap_hi));
    }
    Certificate {
        primal_residual: primal,
        dual_infeasibility: dual,
        complementary_slackness: cs,
    }
}
