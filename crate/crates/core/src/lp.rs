//! Dense two-phase simplex with Bland's rule, generic over the numeric mode.
//!
//! All variables are non-negative. Sizes in this crate are small, so a dense tableau
//! with exact rationals is fast enough and gives exact optima.

use std::fmt::Write;

use crate::numeric::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Minimize,
    Maximize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearConstraint<N> {
    pub name: String,
    pub terms: Vec<(usize, N)>,
    pub relation: Relation,
    pub rhs: N,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram<N> {
    pub variables: Vec<String>,
    pub sense: Sense,
    pub objective: Vec<(usize, N)>,
    pub constraints: Vec<LinearConstraint<N>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution<N> {
    pub objective: N,
    pub values: Vec<N>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum LpError {
    #[error("linear program is infeasible")]
    Infeasible,
    #[error("linear program is unbounded")]
    Unbounded,
    #[error("simplex iteration limit reached")]
    IterationLimit,
}

const MAX_PIVOTS: usize = 200_000;

impl<N: Scalar> LinearProgram<N> {
    pub fn new(sense: Sense) -> Self {
        LinearProgram {
            variables: Vec::new(),
            sense,
            objective: Vec::new(),
            constraints: Vec::new(),
        }
    }

    pub fn add_variable(&mut self, name: impl Into<String>) -> usize {
        self.variables.push(name.into());
        self.variables.len() - 1
    }

    pub fn set_objective(&mut self, terms: Vec<(usize, N)>) {
        self.objective = terms;
    }

    pub fn add_constraint(&mut self, name: impl Into<String>, terms: Vec<(usize, N)>, relation: Relation, rhs: N) {
        debug_assert!(terms.iter().all(|(v, _)| *v < self.variables.len()));
        self.constraints.push(LinearConstraint {
            name: name.into(),
            terms,
            relation,
            rhs,
        });
    }

    pub fn evaluate(&self, terms: &[(usize, N)], values: &[N]) -> N {
        terms
            .iter()
            .fold(N::zero(), |acc, (v, c)| acc + c.clone() * values[*v].clone())
    }

    /// Whether `values` satisfies every constraint within the mode's tolerance.
    pub fn is_feasible(&self, values: &[N]) -> bool {
        values.iter().all(|v| !v.is_neg_tol())
            && self.constraints.iter().all(|c| {
                let lhs = self.evaluate(&c.terms, values);
                let o = lhs.cmp_tol(&c.rhs);
                match c.relation {
                    Relation::Le => o != std::cmp::Ordering::Greater,
                    Relation::Eq => o == std::cmp::Ordering::Equal,
                    Relation::Ge => o != std::cmp::Ordering::Less,
                }
            })
    }

    pub fn solve(&self) -> Result<LpSolution<N>, LpError> {
        let n = self.variables.len();
        let m = self.constraints.len();
        // Column layout: original | slack/surplus | artificial | rhs.
        let mut slack_cols = 0;
        let mut art_cols = 0;
        let mut rows: Vec<(Vec<(usize, N)>, Relation, N)> = Vec::with_capacity(m);
        for c in &self.constraints {
            let mut terms = c.terms.clone();
            let mut rel = c.relation;
            let mut rhs = c.rhs.clone();
            if rhs.is_neg_tol() {
                terms = terms.into_iter().map(|(v, a)| (v, -a)).collect();
                rhs = -rhs;
                rel = match rel {
                    Relation::Le => Relation::Ge,
                    Relation::Ge => Relation::Le,
                    Relation::Eq => Relation::Eq,
                };
            }
            if rel != Relation::Eq {
                slack_cols += 1;
            }
            if rel != Relation::Le {
                art_cols += 1;
            }
            rows.push((terms, rel, rhs));
        }
        let width = n + slack_cols + art_cols;
        let art_start = n + slack_cols;
        let mut t = Tableau {
            a: vec![vec![N::zero(); width + 1]; m],
            basis: vec![0; m],
            width,
        };
        let (mut next_slack, mut next_art) = (n, art_start);
        for (r, (terms, rel, rhs)) in rows.into_iter().enumerate() {
            for (v, c) in terms {
                t.a[r][v] = t.a[r][v].clone() + c;
            }
            t.a[r][width] = rhs;
            match rel {
                Relation::Le => {
                    t.a[r][next_slack] = N::one();
                    t.basis[r] = next_slack;
                    next_slack += 1;
                }
                Relation::Ge => {
                    t.a[r][next_slack] = -N::one();
                    next_slack += 1;
                    t.a[r][next_art] = N::one();
                    t.basis[r] = next_art;
                    next_art += 1;
                }
                Relation::Eq => {
                    t.a[r][next_art] = N::one();
                    t.basis[r] = next_art;
                    next_art += 1;
                }
            }
        }

        if art_cols > 0 {
            let mut cost = vec![N::zero(); width];
            for c in cost.iter_mut().skip(art_start) {
                *c = N::one();
            }
            let value = t.optimize(&cost, width)?;
            if value.is_pos_tol() {
                return Err(LpError::Infeasible);
            }
            // Drive remaining artificial variables out of the basis.
            let mut r = 0;
            while r < t.a.len() {
                if t.basis[r] >= art_start {
                    match (0..art_start).find(|&j| !t.a[r][j].is_zero_tol()) {
                        Some(j) => t.pivot(r, j),
                        None => {
                            t.a.remove(r);
                            t.basis.remove(r);
                            continue;
                        }
                    }
                }
                r += 1;
            }
        }

        let mut cost = vec![N::zero(); width];
        for (v, c) in &self.objective {
            let c = match self.sense {
                Sense::Minimize => c.clone(),
                Sense::Maximize => -c.clone(),
            };
            cost[*v] = cost[*v].clone() + c;
        }
        t.optimize(&cost, art_start)?;
        let mut values = vec![N::zero(); n];
        for (r, &b) in t.basis.iter().enumerate() {
            if b < n {
                values[b] = t.a[r][width].clone();
            }
        }
        let objective = self.evaluate(&self.objective, &values);
        Ok(LpSolution { objective, values })
    }

    /// CPLEX-style LP text for inspection with external tools.
    pub fn to_lp_text(&self) -> String {
        let name = |v: usize| sanitize(&self.variables[v]);
        let form = |terms: &[(usize, N)]| {
            if terms.is_empty() {
                return "0".to_string();
            }
            let mut s = String::new();
            for (i, (v, c)) in terms.iter().enumerate() {
                let x = c.to_f64();
                if i == 0 {
                    write!(s, "{} {}", x, name(*v)).unwrap();
                } else if x < 0.0 {
                    write!(s, " - {} {}", -x, name(*v)).unwrap();
                } else {
                    write!(s, " + {} {}", x, name(*v)).unwrap();
                }
            }
            s
        };
        let mut out = String::new();
        out.push_str(match self.sense {
            Sense::Minimize => "Minimize\n",
            Sense::Maximize => "Maximize\n",
        });
        writeln!(out, " obj: {}", form(&self.objective)).unwrap();
        out.push_str("Subject To\n");
        for (i, c) in self.constraints.iter().enumerate() {
            let rel = match c.relation {
                Relation::Le => "<=",
                Relation::Eq => "=",
                Relation::Ge => ">=",
            };
            let label = if c.name.is_empty() { format!("c{i}") } else { sanitize(&c.name) };
            writeln!(out, " {}: {} {} {}", label, form(&c.terms), rel, c.rhs.to_f64()).unwrap();
        }
        out.push_str("Bounds\n");
        for v in 0..self.variables.len() {
            writeln!(out, " {} >= 0", name(v)).unwrap();
        }
        out.push_str("End\n");
        out
    }
}

fn sanitize(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '_' { c } else { '_' })
        .collect()
}

struct Tableau<N> {
    a: Vec<Vec<N>>,
    basis: Vec<usize>,
    width: usize,
}

impl<N: Scalar> Tableau<N> {
    fn pivot(&mut self, r: usize, j: usize) {
        let p = self.a[r][j].clone();
        for x in self.a[r].iter_mut() {
            if !x.is_zero() {
                *x = x.clone() / p.clone();
            }
        }
        let pivot_row = self.a[r].clone();
        for (i, row) in self.a.iter_mut().enumerate() {
            if i == r || row[j].is_zero() {
                continue;
            }
            let f = row[j].clone();
            for (x, y) in row.iter_mut().zip(&pivot_row) {
                if !y.is_zero() {
                    *x = x.clone() - f.clone() * y.clone();
                }
            }
            row[j] = N::zero();
        }
        self.basis[r] = j;
    }

    /// Minimises `cost · x` using only columns below `allowed`; returns the optimum.
    fn optimize(&mut self, cost: &[N], allowed: usize) -> Result<N, LpError> {
        for _ in 0..MAX_PIVOTS {
            // Reduced costs: c_j - c_B · column_j.
            let entering = (0..allowed).find(|&j| {
                if self.basis.contains(&j) {
                    return false;
                }
                let mut rc = cost[j].clone();
                for (r, &b) in self.basis.iter().enumerate() {
                    if !cost[b].is_zero() && !self.a[r][j].is_zero() {
                        rc = rc - cost[b].clone() * self.a[r][j].clone();
                    }
                }
                rc.is_neg_tol()
            });
            let Some(j) = entering else {
                let mut value = N::zero();
                for (r, &b) in self.basis.iter().enumerate() {
                    value = value + cost[b].clone() * self.a[r][self.width].clone();
                }
                return Ok(value);
            };
            let mut best: Option<(usize, N)> = None;
            for r in 0..self.a.len() {
                if !self.a[r][j].is_pos_tol() {
                    continue;
                }
                let ratio = self.a[r][self.width].clone() / self.a[r][j].clone();
                let better = match &best {
                    None => true,
                    Some((br, bv)) => match ratio.cmp_tol(bv) {
                        std::cmp::Ordering::Less => true,
                        std::cmp::Ordering::Equal => self.basis[r] < self.basis[*br],
                        std::cmp::Ordering::Greater => false,
                    },
                };
                if better {
                    best = Some((r, ratio));
                }
            }
            match best {
                Some((r, _)) => self.pivot(r, j),
                None => return Err(LpError::Unbounded),
            }
        }
        Err(LpError::IterationLimit)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::{rat, Rational};

    fn r(n: i64) -> Rational {
        rat(n, 1)
    }

    #[test]
    fn small_maximisation() {
        // max 3x + 2y s.t. x + y <= 4, x + 3y <= 6, x <= 3.
        let mut lp = LinearProgram::new(Sense::Maximize);
        let x = lp.add_variable("x");
        let y = lp.add_variable("y");
        lp.set_objective(vec![(x, r(3)), (y, r(2))]);
        lp.add_constraint("a", vec![(x, r(1)), (y, r(1))], Relation::Le, r(4));
        lp.add_constraint("b", vec![(x, r(1)), (y, r(3))], Relation::Le, r(6));
        lp.add_constraint("c", vec![(x, r(1))], Relation::Le, r(3));
        let s = lp.solve().unwrap();
        assert_eq!(s.objective, r(11));
        assert_eq!(s.values, vec![r(3), r(1)]);
    }

    #[test]
    fn equality_and_ge_rows() {
        // min x + y s.t. x + 2y = 3, x >= 1/2.
        let mut lp = LinearProgram::new(Sense::Minimize);
        let x = lp.add_variable("x");
        let y = lp.add_variable("y");
        lp.set_objective(vec![(x, r(1)), (y, r(1))]);
        lp.add_constraint("e", vec![(x, r(1)), (y, r(2))], Relation::Eq, r(3));
        lp.add_constraint("g", vec![(x, r(1))], Relation::Ge, rat(1, 2));
        let s = lp.solve().unwrap();
        assert_eq!(s.objective, rat(7, 4));
        assert!(lp.is_feasible(&s.values));
    }

    #[test]
    fn infeasible_and_unbounded() {
        let mut lp = LinearProgram::new(Sense::Minimize);
        let x = lp.add_variable("x");
        lp.set_objective(vec![(x, r(1))]);
        lp.add_constraint("", vec![(x, r(1))], Relation::Le, r(1));
        lp.add_constraint("", vec![(x, r(1))], Relation::Ge, r(2));
        assert_eq!(lp.solve(), Err(LpError::Infeasible));

        let mut lp = LinearProgram::new(Sense::Maximize);
        let x = lp.add_variable("x");
        lp.set_objective(vec![(x, r(1))]);
        lp.add_constraint("", vec![(x, r(1))], Relation::Ge, r(1));
        assert_eq!(lp.solve(), Err(LpError::Unbounded));
    }

    #[test]
    fn degenerate_problem_terminates() {
        // A classic cycling example for the largest-coefficient rule.
        let mut lp = LinearProgram::new(Sense::Minimize);
        let v: Vec<usize> = (0..4).map(|i| lp.add_variable(format!("x{i}"))).collect();
        lp.set_objective(vec![(v[0], rat(-3, 4)), (v[1], r(150)), (v[2], rat(-1, 50)), (v[3], r(6))]);
        lp.add_constraint("", vec![(v[0], rat(1, 4)), (v[1], r(-60)), (v[2], rat(-1, 25)), (v[3], r(9))], Relation::Le, r(0));
        lp.add_constraint("", vec![(v[0], rat(1, 2)), (v[1], r(-90)), (v[2], rat(-1, 50)), (v[3], r(3))], Relation::Le, r(0));
        lp.add_constraint("", vec![(v[2], r(1))], Relation::Le, r(1));
        let s = lp.solve().unwrap();
        assert_eq!(s.objective, rat(-1, 20));
    }

    #[test]
    fn redundant_equalities() {
        let mut lp = LinearProgram::new(Sense::Minimize);
        let x = lp.add_variable("x");
        let y = lp.add_variable("y");
        lp.set_objective(vec![(x, r(1))]);
        lp.add_constraint("", vec![(x, r(1)), (y, r(1))], Relation::Eq, r(2));
        lp.add_constraint("", vec![(x, r(2)), (y, r(2))], Relation::Eq, r(4));
        let s = lp.solve().unwrap();
        assert_eq!(s.objective, r(0));
    }

    #[test]
    fn float_mode_matches() {
        let mut lp = LinearProgram::<f64>::new(Sense::Maximize);
        let x = lp.add_variable("x");
        let y = lp.add_variable("y");
        lp.set_objective(vec![(x, 3.0), (y, 2.0)]);
        lp.add_constraint("", vec![(x, 1.0), (y, 1.0)], Relation::Le, 4.0);
        lp.add_constraint("", vec![(x, 1.0), (y, 3.0)], Relation::Le, 6.0);
        lp.add_constraint("", vec![(x, 1.0)], Relation::Le, 3.0);
        assert!((lp.solve().unwrap().objective - 11.0).abs() < 1e-9);
    }

    #[test]
    fn lp_text_lists_rows() {
        let mut lp = LinearProgram::new(Sense::Minimize);
        let x = lp.add_variable("V(s0)");
        lp.set_objective(vec![(x, r(1))]);
        lp.add_constraint("row", vec![(x, r(1))], Relation::Ge, rat(1, 2));
        let text = lp.to_lp_text();
        assert!(text.contains("row: 1 V_s0_ >= 0.5"));
        assert!(text.starts_with("Minimize"));
    }
}
