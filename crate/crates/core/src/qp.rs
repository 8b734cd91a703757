//! Level-wise quadratic programs for worst-case synthesis on stopping games.
//!
//! At level `i` the program's variables are the values `V[s,i]` (probability that Player 1
//! satisfies the objective with `i` disturbances left) and, for Player-1 states at levels
//! above 0, `V[s,i,a]` for each of the two normal actions. Every objective term is a
//! product of two constraint slacks of equal sign, so feasible points have a non-negative
//! objective and the game values are the unique zero.
//!
//! Exact enumeration remains the authoritative solve path; the programs are built, emitted
//! as text and checked against the enumerated values.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use num_traits::{One, Signed, Zero};
use rand::Rng;
use thiserror::Error;

use crate::arena::{Arena, Choice};
use crate::model::{ActionId, Objective, ObjectiveKind, Player, Sgd, StateId};
use crate::numeric::{format_rational, parse_rational, Rational};
use crate::solvers::{max_reach_fixed, Profiles, SolveOptions, SolverError};

/// Structural condition a stopping game must meet before a program can be built.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Assumption {
    /// Exactly two normal actions per non-sink state.
    A1,
    /// At most one disturbance action per Player-1 state.
    A2,
    /// Every action of a non-sink state reaches a losing sink with positive probability.
    A3,
}

#[derive(Debug, Error, PartialEq)]
pub enum QpError {
    #[error("assumption {assumption:?} violated at state {state}")]
    AssumptionViolated { assumption: Assumption, state: String },
    #[error("level {level} needs the values of level {}", level - 1)]
    MissingPrevious { level: usize },
    #[error("malformed program text at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Solver(#[from] SolverError),
}

/// Affine expression `sum(coef * x[var]) + constant`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LinExpr {
    pub terms: Vec<(usize, Rational)>,
    pub constant: Rational,
}

impl LinExpr {
    fn var(v: usize) -> Self {
        LinExpr { terms: vec![(v, Rational::one())], constant: Rational::zero() }
    }

    fn add_term(&mut self, v: usize, c: Rational) {
        if c.is_zero() {
            return;
        }
        match self.terms.iter_mut().find(|(w, _)| *w == v) {
            Some(t) => t.1 += c,
            None => self.terms.push((v, c)),
        }
        self.terms.retain(|(_, c)| !c.is_zero());
    }

    pub fn eval(&self, x: &[Rational]) -> Rational {
        self.terms.iter().fold(self.constant.clone(), |acc, (v, c)| acc + c * &x[*v])
    }

    pub fn eval_f64(&self, x: &[f64]) -> f64 {
        use num_traits::ToPrimitive;
        self.terms.iter().fold(self.constant.to_f64().unwrap_or(0.0), |acc, (v, c)| {
            acc + c.to_f64().unwrap_or(0.0) * x[*v]
        })
    }
}

/// Relation of a row `expr REL 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

impl Relation {
    fn symbol(self) -> &'static str {
        match self {
            Relation::Le => "<=",
            Relation::Ge => ">=",
            Relation::Eq => "=",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub expr: LinExpr,
    pub relation: Relation,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticProgram {
    pub level: usize,
    pub variables: Vec<String>,
    /// Minimised sum of products of two affine expressions.
    pub objective: Vec<(LinExpr, LinExpr)>,
    pub constraints: Vec<Constraint>,
}

impl QuadraticProgram {
    pub fn objective_value(&self, x: &[Rational]) -> Rational {
        self.objective.iter().fold(Rational::zero(), |acc, (a, b)| acc + a.eval(x) * b.eval(x))
    }

    pub fn objective_value_f64(&self, x: &[f64]) -> f64 {
        self.objective.iter().map(|(a, b)| a.eval_f64(x) * b.eval_f64(x)).sum()
    }

    /// Indices of violated rows.
    pub fn violated(&self, x: &[Rational]) -> Vec<usize> {
        (0..self.constraints.len())
            .filter(|&i| {
                let c = &self.constraints[i];
                let v = c.expr.eval(x);
                match c.relation {
                    Relation::Le => v.is_positive(),
                    Relation::Ge => v.is_negative(),
                    Relation::Eq => !v.is_zero(),
                }
            })
            .collect()
    }

    pub fn feasible_f64(&self, x: &[f64], tol: f64) -> bool {
        self.constraints.iter().all(|c| {
            let v = c.expr.eval_f64(x);
            match c.relation {
                Relation::Le => v <= tol,
                Relation::Ge => v >= -tol,
                Relation::Eq => v.abs() <= tol,
            }
        })
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "qp level {}", self.level);
        for (i, v) in self.variables.iter().enumerate() {
            let _ = writeln!(out, "var x{i} {v}");
        }
        out.push_str("minimize\n");
        for (a, b) in &self.objective {
            let _ = writeln!(out, "  ({}) * ({})", expr_text(a), expr_text(b));
        }
        out.push_str("subject to\n");
        for c in &self.constraints {
            let _ = writeln!(out, "  {} {} 0", expr_text(&c.expr), c.relation.symbol());
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self, QpError> {
        let err = |line: usize, m: &str| QpError::Parse { line: line + 1, message: m.to_string() };
        let mut lines = text.lines().enumerate();
        let (_, head) = lines.next().ok_or_else(|| err(0, "empty input"))?;
        let level = head
            .strip_prefix("qp level ")
            .and_then(|l| l.trim().parse().ok())
            .ok_or_else(|| err(0, "expected `qp level N`"))?;
        let mut qp = QuadraticProgram { level, variables: Vec::new(), objective: Vec::new(), constraints: Vec::new() };
        let mut section = 0;
        for (no, line) in lines {
            if line == "minimize" {
                section = 1;
                continue;
            }
            if line == "subject to" {
                section = 2;
                continue;
            }
            match section {
                0 => {
                    let rest = line.strip_prefix("var x").ok_or_else(|| err(no, "expected variable"))?;
                    let (idx, name) = rest.split_once(' ').ok_or_else(|| err(no, "expected variable name"))?;
                    if idx.parse::<usize>().ok() != Some(qp.variables.len()) {
                        return Err(err(no, "variables must be numbered consecutively"));
                    }
                    qp.variables.push(name.to_string());
                }
                1 => {
                    let body = line.trim().strip_prefix('(').and_then(|l| l.strip_suffix(')'));
                    let (a, b) = body
                        .and_then(|b| b.split_once(") * ("))
                        .ok_or_else(|| err(no, "expected `(expr) * (expr)`"))?;
                    qp.objective.push((parse_expr(a).map_err(|m| err(no, &m))?, parse_expr(b).map_err(|m| err(no, &m))?));
                }
                _ => {
                    let body = line.trim().strip_suffix(" 0").ok_or_else(|| err(no, "row must end with `0`"))?;
                    let (expr, relation) = [("<=", Relation::Le), (">=", Relation::Ge), ("=", Relation::Eq)]
                        .iter()
                        .find_map(|(sym, rel)| body.strip_suffix(sym).map(|e| (e, *rel)))
                        .ok_or_else(|| err(no, "missing relation"))?;
                    qp.constraints.push(Constraint { expr: parse_expr(expr.trim()).map_err(|m| err(no, &m))?, relation });
                }
            }
        }
        Ok(qp)
    }
}

fn expr_text(e: &LinExpr) -> String {
    let mut parts: Vec<String> = e.terms.iter().map(|(v, c)| format!("{} x{v}", signed(c))).collect();
    if !e.constant.is_zero() || parts.is_empty() {
        parts.push(signed(&e.constant));
    }
    parts.join(" ")
}

fn signed(c: &Rational) -> String {
    if c.is_negative() {
        format!("- {}", format_rational(&-c))
    } else {
        format!("+ {}", format_rational(c))
    }
}

fn parse_expr(text: &str) -> Result<LinExpr, String> {
    let mut e = LinExpr::default();
    let tokens: Vec<&str> = text.split_whitespace().collect();
    let mut i = 0;
    while i < tokens.len() {
        let negative = match tokens[i] {
            "+" => false,
            "-" => true,
            t => return Err(format!("expected sign, found `{t}`")),
        };
        let mut c = parse_rational(tokens.get(i + 1).ok_or("dangling sign")?).map_err(|e| e.0)?;
        if negative {
            c = -c;
        }
        i += 2;
        match tokens.get(i).and_then(|t| t.strip_prefix('x')) {
            Some(v) => {
                let v = v.parse().map_err(|_| format!("bad variable `{}`", tokens[i]))?;
                e.terms.push((v, c));
                i += 1;
            }
            None => e.constant += c,
        }
    }
    Ok(e)
}

/// States whose value is fixed: winning sinks pay 1, every other sink pays 0.
fn sink_values(game: &Sgd, obj: &Objective) -> Vec<Option<Rational>> {
    let target: BTreeSet<StateId> = game.label(&obj.label).cloned().unwrap_or_default();
    game.states()
        .map(|s| {
            game.is_sink(s).then(|| {
                let win = match obj.kind {
                    ObjectiveKind::Reachability => target.contains(&s),
                    ObjectiveKind::Safety => !target.contains(&s),
                };
                if win {
                    Rational::one()
                } else {
                    Rational::zero()
                }
            })
        })
        .collect()
}

/// Checks the structural assumptions on `game` for objective `obj`.
pub fn check_assumptions(game: &Sgd, obj: &Objective) -> Result<(), QpError> {
    let fixed = sink_values(game, obj);
    let violated = |assumption, s: StateId| QpError::AssumptionViolated { assumption, state: game.state_name(s).to_string() };
    for s in game.states().filter(|s| fixed[s.0].is_none()) {
        if game.normal(s).len() != 2 {
            return Err(violated(Assumption::A1, s));
        }
        if game.disturbances(s).len() > 1 || (game.owner(s) == Player::Two && !game.disturbances(s).is_empty()) {
            return Err(violated(Assumption::A2, s));
        }
        let leaks = game.normal(s).iter().chain(game.disturbances(s)).all(|t| {
            t.dist.iter().any(|(x, p)| p.is_positive() && fixed[x.0].as_ref().is_some_and(|v| v.is_zero()))
        });
        if !leaks {
            return Err(violated(Assumption::A3, s));
        }
    }
    Ok(())
}

pub fn value_name(game: &Sgd, s: StateId, level: usize) -> String {
    format!("V[{},{level}]", game.state_name(s))
}

pub fn action_value_name(game: &Sgd, s: StateId, level: usize, a: ActionId) -> String {
    format!("V[{},{level},{}]", game.state_name(s), game.action_name(a))
}

fn successor_expr(dist: &crate::model::Distribution<StateId>, var_of: impl Fn(StateId) -> usize) -> LinExpr {
    let mut e = LinExpr::default();
    for (t, p) in dist.iter() {
        e.add_term(var_of(*t), p.clone());
    }
    e
}

fn constant_expr(dist: &crate::model::Distribution<StateId>, values: &[Rational]) -> Rational {
    dist.iter().fold(Rational::zero(), |acc, (t, p)| acc + p * &values[t.0])
}

fn diff(a: &LinExpr, b: &LinExpr) -> LinExpr {
    let mut e = a.clone();
    e.constant -= &b.constant;
    for (v, c) in &b.terms {
        e.add_term(*v, -c.clone());
    }
    e
}

/// Builds the level-`level` program. `previous` holds the level below's values and is
/// required above level 0.
pub fn build_iterative_qp(game: &Sgd, obj: &Objective, level: usize, previous: Option<&[Rational]>) -> Result<QuadraticProgram, QpError> {
    check_assumptions(game, obj)?;
    if level > 0 && previous.is_none() {
        return Err(QpError::MissingPrevious { level });
    }
    let fixed = sink_values(game, obj);
    let mut variables: Vec<String> = game.states().map(|s| value_name(game, s, level)).collect();
    let mut objective = Vec::new();
    let mut constraints = Vec::new();
    let v = |s: StateId| s.0;
    for s in game.states() {
        if let Some(val) = &fixed[s.0] {
            let mut e = LinExpr::var(v(s));
            e.constant = -val.clone();
            constraints.push(Constraint { expr: e, relation: Relation::Eq });
            continue;
        }
        let moves: Vec<LinExpr> = game.normal(s).iter().map(|t| successor_expr(&t.dist, v)).collect();
        let own = LinExpr::var(v(s));
        match (game.owner(s), level) {
            (Player::Two, _) | (Player::One, 0) => {
                let relation = if game.owner(s) == Player::One { Relation::Ge } else { Relation::Le };
                let slacks: Vec<LinExpr> = moves.iter().map(|m| diff(&own, m)).collect();
                for sl in &slacks {
                    constraints.push(Constraint { expr: sl.clone(), relation });
                }
                objective.push((slacks[0].clone(), slacks[1].clone()));
            }
            (Player::One, _) => {
                let prev = previous.expect("checked above");
                let disturbed = game.disturbances(s).first().map(|t| constant_expr(&t.dist, prev));
                let mut own_slacks = Vec::new();
                for (t, m) in game.normal(s).iter().zip(&moves) {
                    let av = variables.len();
                    variables.push(action_value_name(game, s, level, t.action));
                    let av_expr = LinExpr::var(av);
                    own_slacks.push(diff(&own, &av_expr));
                    constraints.push(Constraint { expr: diff(&own, &av_expr), relation: Relation::Ge });
                    let to_move = diff(&av_expr, m);
                    match &disturbed {
                        Some(d) => {
                            let mut to_dist = av_expr.clone();
                            to_dist.constant -= d;
                            constraints.push(Constraint { expr: to_move.clone(), relation: Relation::Le });
                            constraints.push(Constraint { expr: to_dist.clone(), relation: Relation::Le });
                            objective.push((to_move, to_dist));
                        }
                        None => constraints.push(Constraint { expr: to_move, relation: Relation::Eq }),
                    }
                }
                objective.push((own_slacks[0].clone(), own_slacks[1].clone()));
            }
        }
    }
    Ok(QuadraticProgram { level, variables, objective, constraints })
}

/// Exact level values by enumerating pure Player-1 choices and solving the adversary's
/// MDP for each; `None` as `previous` means no disturbance is left.
pub fn level_game_values(game: &Sgd, obj: &Objective, previous: Option<&[Rational]>, opts: &SolveOptions) -> Result<Vec<Rational>, QpError> {
    let fixed = sink_values(game, obj);
    let n = game.num_states();
    let p1: Vec<StateId> = game.player1_states().filter(|s| fixed[s.0].is_none()).collect();
    let radix: Vec<usize> = p1.iter().map(|s| game.normal(*s).len()).collect();
    if Profiles::count(&radix) > opts.budget {
        return Err(SolverError::BudgetExceeded { limit: opts.budget }.into());
    }
    let mut best: Option<Vec<Rational>> = None;
    for profile in Profiles::new(radix) {
        let mut choice: Vec<Option<usize>> = vec![None; n];
        for (s, c) in p1.iter().zip(&profile) {
            choice[s.0] = Some(*c);
        }
        let violation = adversary_values(game, &fixed, &choice, previous, opts)?;
        let win: Vec<Rational> = violation.into_iter().map(|x| Rational::one() - x).collect();
        best = Some(match best {
            None => win,
            Some(b) => b.into_iter().zip(win).map(|(x, y)| if y > x { y } else { x }).collect(),
        });
    }
    Ok(best.unwrap_or_else(|| fixed.iter().map(|f| f.clone().unwrap_or_else(Rational::zero)).collect()))
}

/// Largest violation probability per state against fixed Player-1 choices.
fn adversary_values(
    game: &Sgd,
    fixed: &[Option<Rational>],
    choice: &[Option<usize>],
    previous: Option<&[Rational]>,
    opts: &SolveOptions,
) -> Result<Vec<Rational>, SolverError> {
    let n = game.num_states();
    let mut arena: Arena<Rational> = Arena {
        owner: vec![Player::Two; n],
        names: game.states().map(|s| game.state_name(s).to_string()).collect(),
        origin: game.states().collect(),
        choices: vec![Vec::new(); n],
        initial: Vec::new(),
        instant: vec![false; n],
    };
    let mut terminal: Vec<Option<Rational>> = fixed.iter().map(|f| f.as_ref().map(|v| Rational::one() - v)).collect();
    let edge = |action, succ: Vec<(usize, Rational)>| Choice { action, cost: Rational::zero(), disturbance: false, succ };
    for s in game.states() {
        let pairs = |d: &crate::model::Distribution<StateId>| d.iter().map(|(t, p)| (t.0, p.clone())).collect::<Vec<_>>();
        if fixed[s.0].is_some() {
            arena.choices[s.0].push(edge(ActionId::BOTTOM, vec![(s.0, Rational::one())]));
            continue;
        }
        match choice[s.0] {
            Some(c) => {
                let t = &game.normal(s)[c];
                arena.choices[s.0].push(edge(t.action, pairs(&t.dist)));
                if let (Some(prev), Some(d)) = (previous, game.disturbances(s).first()) {
                    let exit = arena.len();
                    arena.owner.push(Player::Two);
                    arena.names.push(format!("{}#exit", game.state_name(s)));
                    arena.origin.push(s);
                    arena.choices.push(vec![edge(ActionId::BOTTOM, vec![(exit, Rational::one())])]);
                    arena.instant.push(false);
                    terminal.push(Some(Rational::one() - constant_expr(&d.dist, prev)));
                    arena.choices[s.0].push(edge(d.action, vec![(exit, Rational::one())]));
                }
            }
            None => {
                for t in game.normal(s) {
                    arena.choices[s.0].push(edge(t.action, pairs(&t.dist)));
                }
            }
        }
    }
    let values = max_reach_fixed(&arena, &terminal, opts)?.values;
    Ok(values[..n].to_vec())
}

/// Assignment of the level-`level` program's variables from exact game values.
pub fn assignment_from_values(qp: &QuadraticProgram, game: &Sgd, values: &[Rational], previous: Option<&[Rational]>) -> Vec<Rational> {
    let mut x: Vec<Rational> = values.to_vec();
    x.truncate(game.num_states());
    for s in game.player1_states() {
        for t in game.normal(s) {
            let name = action_value_name(game, s, qp.level, t.action);
            if !qp.variables.contains(&name) {
                continue;
            }
            let own = constant_expr(&t.dist, values);
            let v = match (previous, game.disturbances(s).first()) {
                (Some(prev), Some(d)) => own.min(constant_expr(&d.dist, prev)),
                _ => own,
            };
            x.push(v);
        }
    }
    x
}

/// Randomised local search from `start` over feasible points; returns the lowest
/// objective value seen.
pub fn local_search(qp: &QuadraticProgram, start: &[f64], steps: usize, rng: &mut impl Rng) -> f64 {
    let mut x = start.to_vec();
    let mut best = qp.objective_value_f64(&x);
    let mut radius = 1e-2;
    for step in 0..steps {
        let mut y = x.clone();
        for v in y.iter_mut() {
            *v += rng.gen_range(-radius..=radius);
        }
        if qp.feasible_f64(&y, 1e-12) {
            let f = qp.objective_value_f64(&y);
            if f < best {
                best = f;
                x = y;
            }
        }
        if step % 100 == 99 {
            radius /= 2.0;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::numeric::rat;
    use crate::transforms::{binarize_actions, make_stopping};
    use rand::SeedableRng;

    fn stopping(f: &fixtures::Fixture) -> Sgd {
        make_stopping(&binarize_actions(&f.model), &rat(1, 100), "stop").unwrap()
    }

    #[test]
    fn variable_counts_per_level() {
        let f = fixtures::fig6_left();
        let g = stopping(&f);
        let qp0 = build_iterative_qp(&g, &f.objective, 0, None).unwrap();
        assert_eq!(qp0.variables.len(), g.num_states());
        let v0 = level_game_values(&g, &f.objective, None, &SolveOptions::default()).unwrap();
        let qp1 = build_iterative_qp(&g, &f.objective, 1, Some(&v0)).unwrap();
        let p1_inner = g.player1_states().filter(|s| !g.is_sink(*s)).count();
        assert_eq!(qp1.variables.len(), g.num_states() + 2 * p1_inner);
        assert_eq!(build_iterative_qp(&g, &f.objective, 1, None), Err(QpError::MissingPrevious { level: 1 }));
    }

    #[test]
    fn assumptions_are_enforced() {
        let f = fixtures::fig6_left();
        let err = build_iterative_qp(&f.model, &f.objective, 0, None).unwrap_err();
        assert!(matches!(err, QpError::AssumptionViolated { assumption: Assumption::A1, .. }), "{err}");
        let binary = binarize_actions(&f.model);
        let err = build_iterative_qp(&binary, &f.objective, 0, None).unwrap_err();
        assert!(matches!(err, QpError::AssumptionViolated { assumption: Assumption::A3, .. }), "{err}");
    }

    #[test]
    fn enumerated_values_zero_the_objective() {
        let opts = SolveOptions::default();
        for f in fixtures::all().values() {
            let g = stopping(f);
            let mut prev: Option<Vec<Rational>> = None;
            for level in 0..=3 {
                let values = level_game_values(&g, &f.objective, prev.as_deref(), &opts).unwrap();
                if f.objective.kind == ObjectiveKind::Reachability {
                    for s in g.label(&f.objective.label).unwrap() {
                        assert!(values[s.0].is_one(), "{}: goal sink keeps value 1", f.name);
                    }
                }
                if let Some(p) = &prev {
                    assert!(values.iter().zip(p).all(|(a, b)| a <= b), "{}: values rise with fewer disturbances", f.name);
                }
                let qp = build_iterative_qp(&g, &f.objective, level, prev.as_deref()).unwrap();
                let x = assignment_from_values(&qp, &g, &values, prev.as_deref());
                assert_eq!(qp.violated(&x), Vec::<usize>::new(), "{} level {level}", f.name);
                assert!(qp.objective.iter().all(|(a, b)| (a.eval(&x) * b.eval(&x)).is_zero()));
                let xf: Vec<f64> = x.iter().map(|v| num_traits::ToPrimitive::to_f64(v).unwrap()).collect();
                let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(level as u64);
                assert!(local_search(&qp, &xf, 500, &mut rng) >= -1e-9);
                prev = Some(values);
            }
        }
    }

    #[test]
    fn stopping_levels_track_the_exact_game() {
        let f = fixtures::fig6_left();
        let g = stopping(&f);
        let opts = SolveOptions::default();
        let mut prev: Option<Vec<Rational>> = None;
        for exact in [rat(1, 1), rat(3, 4), rat(1, 2)] {
            let values = level_game_values(&g, &f.objective, prev.as_deref(), &opts).unwrap();
            let v0 = g.initial().iter().fold(Rational::zero(), |acc, (s, p)| acc + p * &values[s.0]);
            assert!(v0 <= exact && exact - &v0 < rat(1, 20), "{v0}");
            prev = Some(values);
        }
    }

    #[test]
    fn text_form_round_trips() {
        let f = fixtures::fig4();
        let g = stopping(&f);
        let v0 = level_game_values(&g, &f.objective, None, &SolveOptions::default()).unwrap();
        let qp = build_iterative_qp(&g, &f.objective, 1, Some(&v0)).unwrap();
        assert_eq!(QuadraticProgram::parse(&qp.to_text()).unwrap(), qp);
        assert!(matches!(QuadraticProgram::parse("qp level x"), Err(QpError::Parse { line: 1, .. })));
    }
}
