//! Quantitative kernels on arenas: maximal reachability, the constrained stochastic
//! shortest path LP, a Lagrangian value iteration for games, and minimal mean payoff.
//!
//! Conventions: in an MDP every choice belongs to one agent. In a game, Player-1 states
//! are resolved by the protagonist and Player-2 states by the adversary; for reachability
//! the adversary maximises the probability of the target.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::{Arc, Mutex};

use crate::arena::{Arena, Choice};
use crate::graph::{can_reach, mec_decomposition_with, Mec};
use crate::lp::{LinearProgram, LpError, Relation, Sense};
use crate::model::Player;
use crate::numeric::Scalar;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SolverError {
    #[error("threshold cannot be met")]
    Infeasible,
    #[error("enumeration budget of {limit} exceeded")]
    BudgetExceeded { limit: u64 },
    #[error("value iteration did not converge (residual {residual:e})")]
    NotConverged { residual: f64 },
    #[error(transparent)]
    Lp(#[from] LpError),
}

/// Knobs shared by all solver entry points.
#[derive(Debug, Clone)]
pub struct SolveOptions {
    /// Gap at which interval iteration stops (float mode).
    pub precision: f64,
    /// Maximal number of enumerated strategy profiles.
    pub budget: u64,
    pub max_iterations: usize,
    /// Collects every LP that is solved, in LP-text form, when set.
    pub lp_log: Option<Arc<Mutex<Vec<String>>>>,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            precision: 1e-8,
            budget: 1_000_000,
            max_iterations: 1_000_000,
            lp_log: None,
        }
    }
}

impl SolveOptions {
    pub fn with_budget(mut self, budget: u64) -> Self {
        self.budget = budget;
        self
    }

    pub fn log_lp<N: Scalar>(&self, title: &str, lp: &LinearProgram<N>) {
        if let Some(log) = &self.lp_log {
            let text = format!("\\ {title}\n{}", lp.to_lp_text());
            log.lock().expect("lp log poisoned").push(text);
        }
    }

    fn solve_lp<N: Scalar>(&self, title: &str, lp: &LinearProgram<N>) -> Result<crate::lp::LpSolution<N>, LpError> {
        self.log_lp(title, lp);
        lp.solve()
    }
}

fn merge_terms<N: Scalar>(terms: Vec<(usize, N)>) -> Vec<(usize, N)> {
    let mut m: BTreeMap<usize, N> = BTreeMap::new();
    for (v, c) in terms {
        let e = m.entry(v).or_insert_with(N::zero);
        *e = e.clone() + c;
    }
    m.into_iter().filter(|(_, c)| !c.is_zero()).collect()
}

fn expectation<N: Scalar>(c: &Choice<N>, values: &[N]) -> N {
    c.succ
        .iter()
        .fold(N::zero(), |acc, (t, p)| acc + p.clone() * values[*t].clone())
}

/// Per-state values together with the residual gap of the iteration that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueVector<N> {
    pub values: Vec<N>,
    /// Upper minus lower bound at termination; zero for exact solves.
    pub residual: f64,
}

/// Maximal probability of reaching `target` when one agent resolves every choice.
pub fn max_reach_mdp<N: Scalar>(mdp: &Arena<N>, target: &[bool], opts: &SolveOptions) -> Result<ValueVector<N>, SolverError> {
    let fixed: Vec<Option<N>> = target.iter().map(|&t| t.then(N::one)).collect();
    max_reach_fixed(mdp, &fixed, opts)
}

/// Maximal expected terminal value when states with `Some(v)` stop the play and pay `v`
/// (values in `[0, 1]`); plays that never stop pay 0. Exact LP in rational mode, interval
/// iteration in float mode.
pub fn max_reach_fixed<N: Scalar>(mdp: &Arena<N>, fixed: &[Option<N>], opts: &SolveOptions) -> Result<ValueVector<N>, SolverError> {
    let n = mdp.len();
    let paying: Vec<bool> = fixed.iter().map(|f| f.as_ref().is_some_and(|v| v.is_pos_tol())).collect();
    let positive = can_reach(mdp, &paying);
    let unknown: Vec<bool> = (0..n).map(|s| fixed[s].is_none() && positive[s]).collect();
    let mut values: Vec<N> = (0..n).map(|s| fixed[s].clone().unwrap_or_else(N::zero)).collect();
    if !unknown.iter().any(|&u| u) {
        return Ok(ValueVector { values, residual: 0.0 });
    }
    if N::EXACT {
        reach_lp(mdp, fixed, &unknown, &mut values, opts)?;
        Ok(ValueVector { values, residual: 0.0 })
    } else {
        let residual = reach_interval_iteration(mdp, &unknown, &mut values, opts)?;
        Ok(ValueVector { values, residual })
    }
}

fn reach_lp<N: Scalar>(
    mdp: &Arena<N>,
    fixed: &[Option<N>],
    unknown: &[bool],
    values: &mut [N],
    opts: &SolveOptions,
) -> Result<(), SolverError> {
    let mut lp = LinearProgram::new(Sense::Minimize);
    let mut var = vec![usize::MAX; mdp.len()];
    for s in 0..mdp.len() {
        if unknown[s] {
            var[s] = lp.add_variable(format!("x_{}", mdp.names[s]));
        }
    }
    lp.set_objective(var.iter().filter(|&&v| v != usize::MAX).map(|&v| (v, N::one())).collect());
    for s in 0..mdp.len() {
        if !unknown[s] {
            continue;
        }
        for (ci, c) in mdp.choices[s].iter().enumerate() {
            let mut terms = vec![(var[s], N::one())];
            let mut rhs = N::zero();
            for (t, p) in &c.succ {
                if unknown[*t] {
                    terms.push((var[*t], -p.clone()));
                } else if let Some(v) = &fixed[*t] {
                    rhs = rhs + p.clone() * v.clone();
                }
            }
            lp.add_constraint(format!("c_{}_{ci}", mdp.names[s]), merge_terms(terms), Relation::Ge, rhs);
        }
    }
    let sol = opts.solve_lp("maximal reachability", &lp)?;
    for s in 0..mdp.len() {
        if unknown[s] {
            values[s] = sol.values[var[s]].clone();
        }
    }
    Ok(())
}

/// Lower and upper iteration; end components of unknown states are deflated to their
/// best exit so that the upper bound converges.
fn reach_interval_iteration<N: Scalar>(
    mdp: &Arena<N>,
    unknown: &[bool],
    values: &mut [N],
    opts: &SolveOptions,
) -> Result<f64, SolverError> {
    let n = mdp.len();
    let mecs = mec_decomposition_with(mdp, unknown, |_, _| true);
    let mut lower = values.to_vec();
    let mut upper = values.to_vec();
    for s in 0..n {
        if unknown[s] {
            upper[s] = N::one();
        }
    }
    let bellman = |v: &[N], s: usize| {
        mdp.choices[s]
            .iter()
            .map(|c| expectation(c, v))
            .fold(N::zero(), |a, b| a.max_of(b))
    };
    let mut gap = f64::INFINITY;
    for _ in 0..opts.max_iterations {
        let nl: Vec<N> = (0..n).map(|s| if unknown[s] { bellman(&lower, s) } else { lower[s].clone() }).collect();
        let mut nu: Vec<N> = (0..n).map(|s| if unknown[s] { bellman(&upper, s) } else { upper[s].clone() }).collect();
        for m in &mecs {
            let best_exit = m
                .states
                .iter()
                .flat_map(|&s| {
                    let kept = m.choices.get(&s).cloned().unwrap_or_default();
                    mdp.choices[s]
                        .iter()
                        .enumerate()
                        .filter(move |(ci, _)| !kept.contains(ci))
                        .map(|(_, c)| c)
                })
                .map(|c| expectation(c, &nu))
                .fold(N::zero(), |a, b| a.max_of(b));
            for &s in &m.states {
                nu[s] = nu[s].clone().min_of(best_exit.clone());
            }
        }
        lower = nl;
        upper = nu;
        gap = (0..n).map(|s| (upper[s].to_f64() - lower[s].to_f64()).abs()).fold(0.0, f64::max);
        if gap < opts.precision {
            for s in 0..n {
                values[s] = (lower[s].clone() + upper[s].clone()) / (N::one() + N::one());
            }
            return Ok(gap);
        }
    }
    Err(SolverError::NotConverged { residual: gap })
}

/// A choice per state that attains `values` and makes progress toward paying states, so
/// that following it realises the maximal reachability value.
pub fn reach_strategy<N: Scalar>(mdp: &Arena<N>, fixed: &[Option<N>], values: &[N]) -> Vec<usize> {
    let n = mdp.len();
    let mut pick = vec![usize::MAX; n];
    let mut done: Vec<bool> = fixed.iter().map(|f| f.is_some()).collect();
    let optimal = |s: usize, c: &Choice<N>| expectation(c, values).cmp_tol(&values[s]) == std::cmp::Ordering::Equal;
    loop {
        let mut changed = false;
        for s in 0..n {
            if done[s] || !values[s].is_pos_tol() {
                continue;
            }
            if let Some(ci) = mdp.choices[s]
                .iter()
                .position(|c| optimal(s, c) && c.successors().any(|t| done[t] && values[t].is_pos_tol()))
            {
                pick[s] = ci;
                done[s] = true;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    for s in 0..n {
        if pick[s] == usize::MAX && !mdp.choices[s].is_empty() {
            pick[s] = mdp.choices[s].iter().position(|c| optimal(s, c)).unwrap_or(0);
        }
    }
    pick
}

/// Mixed-radix enumeration of pure choices at the given states.
pub struct Profiles {
    radix: Vec<usize>,
    current: Option<Vec<usize>>,
}

impl Profiles {
    pub fn new(radix: Vec<usize>) -> Self {
        let current = if radix.contains(&0) { None } else { Some(vec![0; radix.len()]) };
        Profiles { radix, current }
    }

    /// Number of profiles, saturating at `u64::MAX`.
    pub fn count(radix: &[usize]) -> u64 {
        radix.iter().fold(1u64, |acc, &r| acc.saturating_mul(r as u64))
    }
}

impl Iterator for Profiles {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let out = self.current.clone()?;
        let mut next = out.clone();
        let mut i = 0;
        loop {
            if i == next.len() {
                self.current = None;
                break;
            }
            next[i] += 1;
            if next[i] < self.radix[i] {
                self.current = Some(next);
                break;
            }
            next[i] = 0;
            i += 1;
        }
        Some(out)
    }
}

/// Player-1 states with more than one choice, and their choice counts.
pub fn player1_branching<N: Scalar>(game: &Arena<N>) -> (Vec<usize>, Vec<usize>) {
    let states: Vec<usize> = (0..game.len())
        .filter(|&s| game.owner[s] == Player::One && game.choices[s].len() > 1)
        .collect();
    let radix = states.iter().map(|&s| game.choices[s].len()).collect();
    (states, radix)
}

/// Fixes one choice at each listed Player-1 state.
pub fn fix_player1<N: Scalar>(game: &Arena<N>, states: &[usize], profile: &[usize]) -> Arena<N> {
    let pick: BTreeMap<usize, usize> = states.iter().copied().zip(profile.iter().copied()).collect();
    game.restrict(|s, c| pick.get(&s).is_none_or(|&p| p == c))
}

#[derive(Debug, Clone, PartialEq)]
pub struct GameSolution<N> {
    pub values: Vec<N>,
    /// Player-1 choice index per state (0 where Player 1 has no decision).
    pub player1: Vec<usize>,
    pub residual: f64,
}

/// Value of the reachability game in which Player 2 maximises and Player 1 minimises the
/// probability of `target`. Exact enumeration of pure memoryless Player-1 strategies in
/// rational mode; strategy iteration over float interval iteration otherwise.
pub fn max_reach_sg<N: Scalar>(game: &Arena<N>, target: &[bool], opts: &SolveOptions) -> Result<GameSolution<N>, SolverError> {
    let fixed: Vec<Option<N>> = target.iter().map(|&t| t.then(N::one)).collect();
    max_reach_sg_fixed(game, &fixed, opts)
}

pub fn max_reach_sg_fixed<N: Scalar>(
    game: &Arena<N>,
    fixed: &[Option<N>],
    opts: &SolveOptions,
) -> Result<GameSolution<N>, SolverError> {
    let (states, radix) = player1_branching(game);
    if N::EXACT {
        if Profiles::count(&radix) > opts.budget {
            return Err(SolverError::BudgetExceeded { limit: opts.budget });
        }
        let mut best: Option<(Vec<N>, Vec<usize>)> = None;
        for profile in Profiles::new(radix) {
            let v = max_reach_fixed(&fix_player1(game, &states, &profile), fixed, opts)?.values;
            best = Some(match best {
                None => (v, profile),
                Some((b, bp)) => {
                    // Memoryless determinacy: some profile is optimal at every state, so the
                    // pointwise minimum is attained by a single profile.
                    if v.iter().zip(&b).all(|(x, y)| x <= y) {
                        (v, profile)
                    } else {
                        (b.iter().zip(&v).map(|(x, y)| x.clone().min_of(y.clone())).collect(), bp)
                    }
                }
            });
        }
        let (values, profile) = best.expect("at least one profile");
        let mut player1 = vec![0; game.len()];
        for (s, c) in states.iter().zip(profile) {
            player1[*s] = c;
        }
        // Re-derive an optimal profile from the values so the strategy matches them.
        for &s in &states {
            player1[s] = argmin_choice(game, s, &values);
        }
        Ok(GameSolution { values, player1, residual: 0.0 })
    } else {
        let mut profile = vec![0; states.len()];
        let mut residual;
        let mut iterations = 0;
        loop {
            let sol = max_reach_fixed(&fix_player1(game, &states, &profile), fixed, opts)?;
            residual = sol.residual;
            let mut changed = false;
            for (i, &s) in states.iter().enumerate() {
                let current = expectation(&game.choices[s][profile[i]], &sol.values);
                let best = argmin_choice(game, s, &sol.values);
                if expectation(&game.choices[s][best], &sol.values).to_f64() < current.to_f64() - 10.0 * opts.precision {
                    profile[i] = best;
                    changed = true;
                }
            }
            iterations += 1;
            if !changed || iterations > opts.max_iterations {
                let mut player1 = vec![0; game.len()];
                for (s, c) in states.iter().zip(&profile) {
                    player1[*s] = *c;
                }
                return Ok(GameSolution { values: sol.values, player1, residual });
            }
        }
    }
}

fn argmin_choice<N: Scalar>(game: &Arena<N>, s: usize, values: &[N]) -> usize {
    let mut best = 0;
    let mut best_v: Option<N> = None;
    for (ci, c) in game.choices[s].iter().enumerate() {
        let v = expectation(c, values);
        if best_v.as_ref().is_none_or(|b| v.cmp_tol(b) == std::cmp::Ordering::Less) {
            best = ci;
            best_v = Some(v);
        }
    }
    best
}

/// Flow-based witness of the constrained shortest path LP: for each state, the probability
/// of every choice and the probability of giving up (playing cost-free from then on).
#[derive(Debug, Clone, PartialEq)]
pub struct FlowWitness<N> {
    pub choice_prob: Vec<Vec<N>>,
    pub give_up: Vec<N>,
}

/// The constrained shortest path LP over occupation measures: minimise expected cost
/// subject to reaching `target` with probability at least `threshold`. Flow may vanish at
/// any non-target state, which models giving up.
pub fn mcmp_lp<N: Scalar>(mdp: &Arena<N>, target: &[bool], threshold: &N) -> (LinearProgram<N>, Vec<Vec<usize>>) {
    let mut lp = LinearProgram::new(Sense::Minimize);
    let mut var: Vec<Vec<usize>> = vec![Vec::new(); mdp.len()];
    let live = crate::graph::reachable_from_initial(mdp);
    for s in 0..mdp.len() {
        if target[s] || !live[s] {
            continue;
        }
        for ci in 0..mdp.choices[s].len() {
            var[s].push(lp.add_variable(format!("x_{}_{ci}", mdp.names[s])));
        }
    }
    let mut inflow: Vec<Vec<(usize, N)>> = vec![Vec::new(); mdp.len()];
    let mut objective = Vec::new();
    for s in 0..mdp.len() {
        for (ci, &v) in var[s].iter().enumerate() {
            let c = &mdp.choices[s][ci];
            if !c.cost.is_zero() {
                objective.push((v, c.cost.clone()));
            }
            for (t, p) in &c.succ {
                inflow[*t].push((v, p.clone()));
            }
        }
    }
    lp.set_objective(objective);
    let mut init = vec![N::zero(); mdp.len()];
    for (s, p) in &mdp.initial {
        init[*s] = init[*s].clone() + p.clone();
    }
    for s in 0..mdp.len() {
        if var[s].is_empty() {
            continue;
        }
        let mut terms: Vec<(usize, N)> = var[s].iter().map(|&v| (v, N::one())).collect();
        terms.extend(inflow[s].iter().map(|(v, p)| (*v, -p.clone())));
        lp.add_constraint(format!("flow_{}", mdp.names[s]), merge_terms(terms), Relation::Le, init[s].clone());
    }
    let mut reach = Vec::new();
    let mut rhs = threshold.clone();
    for s in 0..mdp.len() {
        if target[s] {
            reach.extend(inflow[s].iter().cloned());
            rhs = rhs - init[s].clone();
        }
    }
    lp.add_constraint("reach", merge_terms(reach), Relation::Ge, rhs);
    (lp, var)
}

/// Minimal expected cost to reach `target` with probability at least `threshold`, with a
/// flow witness. `Infeasible` when the threshold exceeds the maximal reachability.
pub fn ssp_mcmp_lp<N: Scalar>(
    mdp: &Arena<N>,
    target: &[bool],
    threshold: &N,
    opts: &SolveOptions,
) -> Result<(N, FlowWitness<N>), SolverError> {
    let (lp, var) = mcmp_lp(mdp, target, threshold);
    let sol = match opts.solve_lp("constrained shortest path", &lp) {
        Ok(s) => s,
        Err(LpError::Infeasible) => return Err(SolverError::Infeasible),
        Err(e) => return Err(e.into()),
    };
    let n = mdp.len();
    let mut incoming = vec![N::zero(); n];
    for (s, p) in &mdp.initial {
        incoming[*s] = incoming[*s].clone() + p.clone();
    }
    for s in 0..n {
        for (ci, &v) in var[s].iter().enumerate() {
            for (t, p) in &mdp.choices[s][ci].succ {
                incoming[*t] = incoming[*t].clone() + p.clone() * sol.values[v].clone();
            }
        }
    }
    let mut choice_prob = Vec::with_capacity(n);
    let mut give_up = Vec::with_capacity(n);
    for s in 0..n {
        let k = mdp.choices[s].len();
        if var[s].is_empty() || !incoming[s].is_pos_tol() {
            choice_prob.push(vec![N::zero(); k]);
            give_up.push(N::one());
            continue;
        }
        let probs: Vec<N> = var[s].iter().map(|&v| sol.values[v].clone() / incoming[s].clone()).collect();
        let rest = probs.iter().fold(N::one(), |acc, p| acc - p.clone());
        choice_prob.push(probs);
        give_up.push(if rest.is_neg_tol() { N::zero() } else { rest });
    }
    Ok((sol.objective, FlowWitness { choice_prob, give_up }))
}

/// Minimal expected total cost until `target` when every strategy reaches it almost surely.
pub fn min_cost_reach<N: Scalar>(mdp: &Arena<N>, target: &[bool], opts: &SolveOptions) -> Result<Vec<N>, SolverError> {
    let mut lp = LinearProgram::new(Sense::Maximize);
    let mut var = vec![usize::MAX; mdp.len()];
    for s in 0..mdp.len() {
        if !target[s] {
            var[s] = lp.add_variable(format!("v_{}", mdp.names[s]));
        }
    }
    lp.set_objective(var.iter().filter(|&&v| v != usize::MAX).map(|&v| (v, N::one())).collect());
    for s in 0..mdp.len() {
        if target[s] {
            continue;
        }
        for (ci, c) in mdp.choices[s].iter().enumerate() {
            let mut terms = vec![(var[s], N::one())];
            for (t, p) in &c.succ {
                if !target[*t] {
                    terms.push((var[*t], -p.clone()));
                }
            }
            lp.add_constraint(format!("c_{}_{ci}", mdp.names[s]), merge_terms(terms), Relation::Le, c.cost.clone());
        }
    }
    let sol = opts.solve_lp("shortest path", &lp)?;
    Ok((0..mdp.len())
        .map(|s| if target[s] { N::zero() } else { sol.values[var[s]].clone() })
        .collect())
}

/// Minimal long-run average cost of staying inside `mec` forever, with the stationary
/// occupation of an optimal stay strategy. The component's kept choices are the only ones
/// used; moves of instant states do not count as steps.
pub fn mdp_mec_mean_payoff<N: Scalar>(arena: &Arena<N>, mec: &Mec, opts: &SolveOptions) -> Result<(N, BTreeMap<(usize, usize), N>), SolverError> {
    let mut lp = LinearProgram::new(Sense::Minimize);
    let mut vars = Vec::new();
    for (&s, cs) in &mec.choices {
        for &ci in cs {
            vars.push(((s, ci), lp.add_variable(format!("y_{}_{ci}", arena.names[s]))));
        }
    }
    lp.set_objective(
        vars.iter()
            .filter(|((s, ci), _)| !arena.choices[*s][*ci].cost.is_zero())
            .map(|((s, ci), v)| (*v, arena.choices[*s][*ci].cost.clone()))
            .collect(),
    );
    for &s in &mec.states {
        let mut terms = Vec::new();
        for ((u, ci), v) in &vars {
            if *u == s {
                terms.push((*v, N::one()));
            }
            for (t, p) in &arena.choices[*u][*ci].succ {
                if *t == s {
                    terms.push((*v, -p.clone()));
                }
            }
        }
        lp.add_constraint(format!("balance_{}", arena.names[s]), merge_terms(terms), Relation::Eq, N::zero());
    }
    let timed: Vec<(usize, N)> = vars.iter().filter(|((s, _), _)| !arena.instant[*s]).map(|(_, v)| (*v, N::one())).collect();
    lp.add_constraint("mass", timed, Relation::Eq, N::one());
    let sol = opts.solve_lp("mean payoff", &lp)?;
    let occupation = vars.iter().map(|(k, v)| (*k, sol.values[*v].clone())).collect();
    Ok((sol.objective, occupation))
}

/// Minimal mean payoff of a component. With `opponent_only` every choice belongs to the
/// cost-minimising opponent. Otherwise Player 1 maximises at its states: pure memoryless
/// Player-1 stay strategies are enumerated, the opponent picks the cheapest end component
/// reachable within the component, and the component's value is the best over its states.
pub fn min_mean_payoff_mec<N: Scalar>(arena: &Arena<N>, mec: &Mec, opponent_only: bool, opts: &SolveOptions) -> Result<N, SolverError> {
    if opponent_only {
        return Ok(mdp_mec_mean_payoff(arena, mec, opts)?.0);
    }
    let inside: Vec<bool> = (0..arena.len()).map(|s| mec.states.contains(&s)).collect();
    let sub = arena.restrict(|s, c| mec.choices.get(&s).is_some_and(|cs| cs.contains(&c)));
    let (states, _) = player1_branching(&sub);
    let states: Vec<usize> = states.into_iter().filter(|s| inside[*s]).collect();
    let radix: Vec<usize> = states.iter().map(|&s| sub.choices[s].len()).collect();
    if Profiles::count(&radix) > opts.budget {
        return Err(SolverError::BudgetExceeded { limit: opts.budget });
    }
    let mut best: Option<N> = None;
    for profile in Profiles::new(radix) {
        let fixed = fix_player1(&sub, &states, &profile);
        let mut min_state: Vec<Option<N>> = vec![None; arena.len()];
        for m in mec_decomposition_with(&fixed, &inside, |_, _| true) {
            let (g, _) = mdp_mec_mean_payoff(&fixed, &m, opts)?;
            let reach = can_reach(&fixed, &(0..arena.len()).map(|s| m.states.contains(&s)).collect::<Vec<_>>());
            for s in 0..arena.len() {
                if inside[s] && reach[s] {
                    min_state[s] = Some(match min_state[s].take() {
                        Some(x) => x.min_of(g.clone()),
                        None => g.clone(),
                    });
                }
            }
        }
        let v = min_state.into_iter().flatten().fold(N::zero(), |a, b| a.max_of(b));
        best = Some(match best {
            Some(b) => b.max_of(v),
            None => v,
        });
    }
    Ok(best.unwrap_or_else(N::zero))
}

/// Result of the Lagrangian value iteration for constrained shortest paths in games.
#[derive(Debug, Clone, PartialEq)]
pub struct SspGameResult {
    pub value: f64,
    /// Player-1 choice per state at the best multiplier.
    pub player1: Vec<usize>,
    pub multiplier: f64,
}

/// Max-min expected cost for the adversary to reach `target` with probability at least
/// `threshold` in a game where Player 1 maximises cost and Player 2 minimises it. For a
/// multiplier `l` the unconstrained game with terminal reward `-l` is solved by value
/// iteration; the constrained value is the maximum of `l * threshold + U(l)` over `l`.
pub fn ssp_sg_vi(game: &Arena<f64>, target: &[bool], threshold: f64, opts: &SolveOptions) -> Result<SspGameResult, SolverError> {
    let reach = max_reach_sg(game, target, opts)?;
    if game.initial_value(&reach.values) < threshold - opts.precision.max(crate::numeric::FLOAT_TOLERANCE) {
        return Err(SolverError::Infeasible);
    }
    if !game.has_positive_cost() || threshold <= 0.0 {
        return Ok(SspGameResult {
            value: 0.0,
            player1: vec![0; game.len()],
            multiplier: 0.0,
        });
    }
    let eval = |l: f64| -> Result<(f64, Vec<usize>), SolverError> {
        let (u, pick) = lagrangian_vi(game, target, l, opts)?;
        Ok((l * threshold + game.initial_value(&u), pick))
    };
    let mut grid = vec![0.0];
    grid.extend((-10..=24).map(|j| 2f64.powi(j)));
    let mut scores = Vec::with_capacity(grid.len());
    for &l in &grid {
        scores.push(eval(l)?);
    }
    let (bi, _) = scores
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, (v, _))| if *v > bv { (i, *v) } else { (bi, bv) });
    let (mut best_v, mut best_pick) = scores[bi].clone();
    let mut best_l = grid[bi];
    // Golden-section refinement between the neighbours of the best grid point.
    let lo = grid[bi.saturating_sub(1)];
    let hi = grid[(bi + 1).min(grid.len() - 1)];
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    for _ in 0..60 {
        if b - a <= opts.precision * b.max(1.0) {
            break;
        }
        let c = b - phi * (b - a);
        let d = a + phi * (b - a);
        let (vc, pc) = eval(c)?;
        let (vd, pd) = eval(d)?;
        for (v, p, l) in [(vc, pc, c), (vd, pd, d)] {
            if v > best_v {
                best_v = v;
                best_pick = p;
                best_l = l;
            }
        }
        if vc >= vd {
            b = d;
        } else {
            a = c;
        }
    }
    Ok(SspGameResult {
        value: best_v.max(0.0),
        player1: best_pick,
        multiplier: best_l,
    })
}

fn lagrangian_vi(game: &Arena<f64>, target: &[bool], l: f64, opts: &SolveOptions) -> Result<(Vec<f64>, Vec<usize>), SolverError> {
    let n = game.len();
    let mut v: Vec<f64> = (0..n).map(|s| if target[s] { -l } else { 0.0 }).collect();
    let scale = l.max(1.0);
    let mut residual = f64::INFINITY;
    for _ in 0..opts.max_iterations {
        let mut next = v.clone();
        for s in 0..n {
            if target[s] || game.choices[s].is_empty() {
                continue;
            }
            let vals = game.choices[s].iter().map(|c| c.cost + expectation(c, &v));
            next[s] = match game.owner[s] {
                Player::One => vals.fold(f64::NEG_INFINITY, f64::max),
                Player::Two => vals.fold(f64::INFINITY, f64::min),
            };
        }
        residual = (0..n).map(|s| (next[s] - v[s]).abs()).fold(0.0, f64::max);
        v = next;
        if residual <= (opts.precision * 1e-2).max(scale * 1e-15) {
            let pick = (0..n)
                .map(|s| {
                    let mut best = 0;
                    for (ci, c) in game.choices[s].iter().enumerate() {
                        if c.cost + expectation(c, &v) > game.choices[s][best].cost + expectation(&game.choices[s][best], &v) + 1e-12 {
                            best = ci;
                        }
                    }
                    best
                })
                .collect();
            return Ok((v, pick));
        }
    }
    Err(SolverError::NotConverged { residual })
}

/// Distinct states of a set of components.
pub fn mec_states(mecs: &[Mec]) -> BTreeSet<usize> {
    mecs.iter().flat_map(|m| m.states.iter().copied()).collect()
}
