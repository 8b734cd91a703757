//! Game-to-game constructions. Model-level transforms return [`Sgd`] values (with costs
//! where needed) so they can be serialised; the weighted quotient works on arenas.

use std::collections::{BTreeMap, BTreeSet};

use num_traits::{One, Zero};

use crate::arena::{Arena, Choice};
use crate::graph::Mec;
use crate::model::{
    ActionId, ActionKind, CostFunction, Distribution, Memory, Player, Sgd, SgdBuilder, StateId, Strategy, StrategyError,
    StrategyOwner,
};
use crate::numeric::{Rational, Scalar};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TransformError {
    #[error("epsilon must lie strictly between 0 and 1")]
    EpsilonOutOfRange,
    #[error("components overlap in state `{0}`")]
    OverlappingComponents(String),
    #[error("missing cost for component {0}")]
    MissingComponentCost(usize),
    #[error(transparent)]
    Strategy(#[from] StrategyError),
}

fn copy_labels(sgd: &Sgd, b: &mut SgdBuilder, map: impl Fn(StateId) -> Vec<StateId>) {
    for (label, set) in sgd.labels() {
        b.declare_label(label);
        for &s in set {
            for t in map(s) {
                b.label(t, label);
            }
        }
    }
}

fn remap(d: &Distribution<StateId>, f: impl Fn(StateId) -> StateId) -> Vec<(StateId, Rational)> {
    d.iter().map(|(t, p)| (f(*t), p.clone())).collect()
}

/// The induced MDP of a memoryless Player-1 strategy as a model: Player-1 states keep
/// the strategy's (merged) choice and all disturbances. A mixed choice becomes one action
/// named `mix`.
pub fn induced_mdp(sgd: &Sgd, pi: &Strategy) -> Result<Sgd, TransformError> {
    pi.check(sgd)?;
    if pi.owner != StrategyOwner::Player1 {
        return Err(StrategyError::WrongOwner("strategy is not a Player-1 strategy".into()).into());
    }
    if let Memory::StepCounting(_) = pi.memory {
        return Err(StrategyError::IncompatibleBounds.into());
    }
    let mut b = SgdBuilder::new();
    for s in sgd.states() {
        b.state(sgd.state_name(s), sgd.owner(s));
    }
    for s in sgd.states() {
        match sgd.owner(s) {
            Player::One => {
                let choice = pi.choice(s, 0).ok_or_else(|| StrategyError::Missing(sgd.state_name(s).to_string()))?;
                let (name, pairs) = match choice.as_dirac() {
                    Some(&a) => (sgd.action_name(a).to_string(), remap(sgd.transition(s, a).expect("checked"), |t| t)),
                    None => {
                        let mut pairs = Vec::new();
                        for (a, pa) in choice.iter() {
                            for (t, p) in sgd.transition(s, *a).expect("checked").iter() {
                                pairs.push((*t, pa * p));
                            }
                        }
                        ("mix".to_string(), pairs)
                    }
                };
                b.transition(s, &name, ActionKind::Normal, pairs);
                for t in sgd.disturbances(s) {
                    b.transition(s, sgd.action_name(t.action), ActionKind::Disturbance, remap(&t.dist, |x| x));
                }
            }
            Player::Two => {
                for t in sgd.normal(s) {
                    b.transition(s, sgd.action_name(t.action), ActionKind::Normal, remap(&t.dist, |x| x));
                }
            }
        }
    }
    b.initial(sgd.initial().iter().map(|(s, p)| (*s, p.clone())));
    copy_labels(sgd, &mut b, |s| vec![s]);
    Ok(b.build_unchecked())
}

/// Name of the copy of `s` with `i` remaining disturbances.
pub fn layer_name(sgd: &Sgd, s: StateId, i: usize) -> String {
    format!("{}@{i}", sgd.state_name(s))
}

/// Product of the model with a remaining-disturbance counter `0..=k`, starting at `k`.
/// Disturbances decrement the counter. With `saturate` they stay available at 0 and keep
/// the counter there (memory of a step-counting strategy); otherwise they are removed at 0.
pub fn memory_product(sgd: &Sgd, k: usize, saturate: bool) -> Sgd {
    let mut b = SgdBuilder::new();
    let id = |s: StateId, i: usize| StateId(s.0 * (k + 1) + (k - i));
    for s in sgd.states() {
        for i in (0..=k).rev() {
            let got = b.state(&layer_name(sgd, s, i), sgd.owner(s));
            debug_assert_eq!(got, id(s, i));
        }
    }
    for s in sgd.states() {
        for i in 0..=k {
            for t in sgd.normal(s) {
                b.transition(id(s, i), sgd.action_name(t.action), ActionKind::Normal, remap(&t.dist, |x| id(x, i)));
            }
            if i == 0 && !saturate {
                continue;
            }
            for t in sgd.disturbances(s) {
                let j = i.saturating_sub(1);
                b.transition(id(s, i), sgd.action_name(t.action), ActionKind::Disturbance, remap(&t.dist, |x| id(x, j)));
            }
        }
    }
    b.initial(sgd.initial().iter().map(|(s, p)| (id(*s, k), p.clone())));
    copy_labels(sgd, &mut b, |s| (0..=k).map(|i| id(s, i)).collect());
    b.build_unchecked()
}

/// The model over `S × ⟨k+1⟩` in which disturbances decrement the counter and are
/// unavailable at 0.
pub fn product_with_counter(sgd: &Sgd, k: usize) -> Sgd {
    memory_product(sgd, k, false)
}

/// Memoryless strategy on [`memory_product`] equivalent to a step-counting strategy.
pub fn lift_strategy(sgd: &Sgd, product: &Sgd, st: &Strategy) -> Strategy {
    let k = st.memory.bound();
    let mut rule = BTreeMap::new();
    for s in sgd.states() {
        for i in 0..=k {
            if let (Some(d), Some(ps)) = (st.choice(s, i), product.state_by_name(&layer_name(sgd, s, i))) {
                let d = d.map_keys(|a| {
                    if a.is_bottom() {
                        *a
                    } else {
                        product.action_by_name(sgd.action_name(*a), a.kind).expect("same action set")
                    }
                });
                rule.insert(ps, d);
            }
        }
    }
    Strategy::memoryless(st.owner, rule)
}

/// Origin of a state of the unfolded game.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct UnfoldedState {
    pub state: StateId,
    pub counter: usize,
    /// Player-1 action chosen, for the intermediate adversary state.
    pub action: Option<ActionId>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Unfolded {
    pub game: Sgd,
    /// Disturbance choices of intermediate states cost 1.
    pub costs: CostFunction,
    pub origin: Vec<UnfoldedState>,
}

/// The `k`-unfolded stochastic game. Player-1 states `(s, i)` choose an action `a` and move
/// to the adversary state `(s, i, a)`, which plays `⊥` (the transition of `a`, counter
/// kept) or, when `i > 0`, a disturbance (counter decremented). Player-2 states keep their
/// actions. With `reachable_only` only states reachable from the initial layer are built.
pub fn unfold(sgd: &Sgd, k: usize, reachable_only: bool) -> Unfolded {
    let mut keys: Vec<UnfoldedState> = Vec::new();
    let mut index: BTreeMap<(StateId, usize, Option<ActionId>), usize> = BTreeMap::new();
    let mut stack = Vec::new();
    let mut intern = |u: UnfoldedState, keys: &mut Vec<UnfoldedState>, stack: &mut Vec<usize>| {
        *index.entry((u.state, u.counter, u.action)).or_insert_with(|| {
            keys.push(u);
            stack.push(keys.len() - 1);
            keys.len() - 1
        })
    };
    let roots: Vec<UnfoldedState> = if reachable_only {
        sgd.initial()
            .support()
            .map(|&s| UnfoldedState { state: s, counter: k, action: None })
            .collect()
    } else {
        let mut all = Vec::new();
        for s in sgd.states() {
            for i in (0..=k).rev() {
                all.push(UnfoldedState { state: s, counter: i, action: None });
                if sgd.owner(s) == Player::One {
                    for t in sgd.normal(s) {
                        all.push(UnfoldedState { state: s, counter: i, action: Some(t.action) });
                    }
                }
            }
        }
        all
    };
    for r in roots {
        intern(r, &mut keys, &mut stack);
    }
    // (from, action name, kind of cost, successors)
    let mut edges: Vec<Vec<(String, bool, Vec<(usize, Rational)>)>> = Vec::new();
    let mut done = 0;
    while done < keys.len() {
        let u = keys[done];
        let mut out = Vec::new();
        let s = u.state;
        match (sgd.owner(s), u.action) {
            (Player::One, None) => {
                for t in sgd.normal(s) {
                    let g = intern(UnfoldedState { state: s, counter: u.counter, action: Some(t.action) }, &mut keys, &mut stack);
                    out.push((sgd.action_name(t.action).to_string(), false, vec![(g, Rational::one())]));
                }
            }
            (Player::One, Some(a)) => {
                let succ = sgd
                    .transition(s, a)
                    .expect("available action")
                    .iter()
                    .map(|(t, p)| (intern(UnfoldedState { state: *t, counter: u.counter, action: None }, &mut keys, &mut stack), p.clone()))
                    .collect();
                out.push((PASS_ACTION.to_string(), false, succ));
                if u.counter > 0 {
                    for t in sgd.disturbances(s) {
                        let succ = t
                            .dist
                            .iter()
                            .map(|(x, p)| {
                                (intern(UnfoldedState { state: *x, counter: u.counter - 1, action: None }, &mut keys, &mut stack), p.clone())
                            })
                            .collect();
                        out.push((sgd.action_name(t.action).to_string(), true, succ));
                    }
                }
            }
            (Player::Two, _) => {
                for t in sgd.normal(s) {
                    let succ = t
                        .dist
                        .iter()
                        .map(|(x, p)| (intern(UnfoldedState { state: *x, counter: u.counter, action: None }, &mut keys, &mut stack), p.clone()))
                        .collect();
                    out.push((sgd.action_name(t.action).to_string(), false, succ));
                }
            }
        }
        edges.push(out);
        done += 1;
    }
    let mut b = SgdBuilder::new();
    for u in &keys {
        let name = match u.action {
            None => layer_name(sgd, u.state, u.counter),
            Some(a) => format!("{}:{}", layer_name(sgd, u.state, u.counter), sgd.action_name(a)),
        };
        let owner = if u.action.is_some() { Player::Two } else { sgd.owner(u.state) };
        b.state(&name, owner);
    }
    let mut costs = Vec::new();
    for (i, out) in edges.into_iter().enumerate() {
        for (name, disturbance, succ) in out {
            let a = b.transition(StateId(i), &name, ActionKind::Normal, succ.into_iter().map(|(t, p)| (StateId(t), p)));
            if disturbance {
                costs.push((StateId(i), a));
            }
        }
    }
    b.initial(sgd.initial().iter().map(|(s, p)| (StateId(index[&(*s, k, None)]), p.clone())));
    for (label, set) in sgd.labels() {
        b.declare_label(label);
        for (i, u) in keys.iter().enumerate() {
            if u.action.is_none() && set.contains(&u.state) {
                b.label(StateId(i), label);
            }
        }
    }
    let mut cf = CostFunction::default();
    for (s, a) in costs {
        cf.set(s, a, Rational::one());
    }
    Unfolded { game: b.build_unchecked(), costs: cf, origin: keys }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GadgetGame {
    pub game: Sgd,
    pub costs: CostFunction,
    /// Gadget state of each Player-1 state-action pair.
    pub gadget: BTreeMap<(StateId, ActionId), StateId>,
}

/// The expected-case game: each Player-1 action `a` at `s` leads to an adversary state
/// `(s, a)` choosing `⊥` (cost 0, transition of `a`) or a disturbance (cost 1).
pub fn expected_gadget_game(sgd: &Sgd) -> GadgetGame {
    let mut b = SgdBuilder::new();
    for s in sgd.states() {
        b.state(sgd.state_name(s), sgd.owner(s));
    }
    let mut gadget = BTreeMap::new();
    let mut costs = Vec::new();
    for s in sgd.states() {
        for t in sgd.normal(s) {
            match sgd.owner(s) {
                Player::Two => {
                    b.transition(s, sgd.action_name(t.action), ActionKind::Normal, remap(&t.dist, |x| x));
                }
                Player::One => {
                    let g = b.state(&format!("{}:{}", sgd.state_name(s), sgd.action_name(t.action)), Player::Two);
                    gadget.insert((s, t.action), g);
                    b.transition(s, sgd.action_name(t.action), ActionKind::Normal, [(g, Rational::one())]);
                    b.transition(g, PASS_ACTION, ActionKind::Normal, remap(&t.dist, |x| x));
                    for d in sgd.disturbances(s) {
                        let a = b.transition(g, sgd.action_name(d.action), ActionKind::Normal, remap(&d.dist, |x| x));
                        costs.push((g, a));
                    }
                }
            }
        }
    }
    b.initial(sgd.initial().iter().map(|(s, p)| (*s, p.clone())));
    copy_labels(sgd, &mut b, |s| vec![s]);
    let mut cf = CostFunction::default();
    for (s, a) in costs {
        cf.set(s, a, Rational::one());
    }
    GadgetGame { game: b.build_unchecked(), costs: cf, gadget }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightedQuotient<N> {
    pub quotient: Arena<N>,
    /// Original component of each collapsed quotient state.
    pub collapsed_of: BTreeMap<usize, usize>,
    /// Quotient state of each original state.
    pub state_map: Vec<usize>,
    pub s_plus: usize,
    pub exit_cost: BTreeMap<usize, N>,
}

/// Collapses each component into one adversary state that keeps every choice leaving the
/// component and gains a `stay` choice to the fresh sink `s+` costing the component's
/// weight. All other costs become 0.
pub fn weighted_mec_quotient<N: Scalar>(arena: &Arena<N>, components: &[Mec], f: &[N]) -> Result<WeightedQuotient<N>, TransformError> {
    let n = arena.len();
    let mut comp_of: Vec<Option<usize>> = vec![None; n];
    for (ci, m) in components.iter().enumerate() {
        for &s in &m.states {
            if comp_of[s].is_some() {
                return Err(TransformError::OverlappingComponents(arena.names[s].clone()));
            }
            comp_of[s] = Some(ci);
        }
    }
    if f.len() < components.len() {
        return Err(TransformError::MissingComponentCost(f.len()));
    }
    let mut state_map = vec![0; n];
    let mut q = Arena {
        owner: Vec::new(),
        names: Vec::new(),
        origin: Vec::new(),
        choices: Vec::new(),
        initial: Vec::new(),
        instant: Vec::new(),
    };
    let mut comp_state = vec![usize::MAX; components.len()];
    let mut collapsed_of = BTreeMap::new();
    for s in 0..n {
        match comp_of[s] {
            None => {
                state_map[s] = q.owner.len();
                q.owner.push(arena.owner[s]);
                q.names.push(arena.names[s].clone());
                q.origin.push(arena.origin[s]);
                q.instant.push(arena.instant[s]);
            }
            Some(ci) => {
                if comp_state[ci] == usize::MAX {
                    comp_state[ci] = q.owner.len();
                    collapsed_of.insert(q.owner.len(), ci);
                    let names: Vec<&str> = components[ci].states.iter().map(|&x| arena.names[x].as_str()).collect();
                    q.owner.push(Player::Two);
                    q.names.push(format!("[{}]", names.join(",")));
                    q.origin.push(arena.origin[s]);
                    q.instant.push(false);
                }
                state_map[s] = comp_state[ci];
            }
        }
    }
    let s_plus = q.owner.len();
    q.owner.push(Player::Two);
    q.names.push("s+".to_string());
    q.origin.push(StateId(usize::MAX));
    q.instant.push(false);
    q.choices = vec![Vec::new(); q.owner.len()];
    let map_succ = |c: &Choice<N>| {
        let mut m: BTreeMap<usize, N> = BTreeMap::new();
        for (t, p) in &c.succ {
            let e = m.entry(state_map[*t]).or_insert_with(N::zero);
            *e = e.clone() + p.clone();
        }
        m.into_iter().collect::<Vec<_>>()
    };
    for s in 0..n {
        let kept: BTreeSet<usize> = comp_of[s]
            .and_then(|ci| components[ci].choices.get(&s).cloned())
            .map(|v| v.into_iter().collect())
            .unwrap_or_default();
        for (ci, c) in arena.choices[s].iter().enumerate() {
            if comp_of[s].is_some() && (kept.contains(&ci) || c.successors().all(|t| comp_of[t] == comp_of[s])) {
                continue;
            }
            q.choices[state_map[s]].push(Choice {
                action: c.action,
                cost: N::zero(),
                disturbance: c.disturbance,
                succ: map_succ(c),
            });
        }
    }
    let mut exit_cost = BTreeMap::new();
    for (ci, &qs) in comp_state.iter().enumerate() {
        if qs == usize::MAX {
            continue;
        }
        q.choices[qs].push(Choice {
            action: ActionId::BOTTOM,
            cost: f[ci].clone(),
            disturbance: false,
            succ: vec![(s_plus, N::one())],
        });
        exit_cost.insert(qs, f[ci].clone());
    }
    q.choices[s_plus].push(Choice {
        action: ActionId::BOTTOM,
        cost: N::zero(),
        disturbance: false,
        succ: vec![(s_plus, N::one())],
    });
    let mut init: BTreeMap<usize, N> = BTreeMap::new();
    for (s, p) in &arena.initial {
        let e = init.entry(state_map[*s]).or_insert_with(N::zero);
        *e = e.clone() + p.clone();
    }
    q.initial = init.into_iter().collect();
    Ok(WeightedQuotient { quotient: q, collapsed_of, state_map, s_plus, exit_cost })
}

/// Action of adversary gadget states that lets Player 1's choice through undisturbed.
pub const PASS_ACTION: &str = "pass";

/// Name of the fresh sink added by [`make_stopping`].
pub const STOP_STATE: &str = "stop";

/// Every action of every non-sink state sends probability `epsilon` to a fresh sink
/// carrying `label`; the remaining mass is rescaled by `1 - epsilon`.
pub fn make_stopping(sgd: &Sgd, epsilon: &Rational, label: &str) -> Result<Sgd, TransformError> {
    if *epsilon <= Rational::zero() || *epsilon >= Rational::one() {
        return Err(TransformError::EpsilonOutOfRange);
    }
    let mut b = SgdBuilder::new();
    for s in sgd.states() {
        b.state(sgd.state_name(s), sgd.owner(s));
    }
    let stop = b.state(STOP_STATE, Player::Two);
    let keep = Rational::one() - epsilon;
    for s in sgd.states() {
        let sink = sgd.is_sink(s);
        for t in sgd.normal(s).iter().chain(sgd.disturbances(s)) {
            let mut pairs: Vec<(StateId, Rational)> = t.dist.iter().map(|(x, p)| (*x, p.clone())).collect();
            if !sink {
                for e in pairs.iter_mut() {
                    e.1 = &e.1 * &keep;
                }
                pairs.push((stop, epsilon.clone()));
            }
            b.transition(s, sgd.action_name(t.action), t.action.kind, pairs);
        }
    }
    b.self_loop(stop, "stop");
    b.initial(sgd.initial().iter().map(|(s, p)| (*s, p.clone())));
    copy_labels(sgd, &mut b, |s| vec![s]);
    b.label(stop, label);
    Ok(b.build_unchecked())
}

/// Rewrites every state to offer exactly two normal actions and at most one disturbance.
/// Several disturbances become one disturbance into an adversary state choosing among the
/// original disturbance distributions; more than two normal actions become a balanced
/// binary tree of intermediaries owned by the state's player; a single action is
/// duplicated. Sinks keep their single self-loop.
pub fn binarize_actions(sgd: &Sgd) -> Sgd {
    let mut b = SgdBuilder::new();
    for s in sgd.states() {
        b.state(sgd.state_name(s), sgd.owner(s));
    }
    for s in sgd.states() {
        let name = sgd.state_name(s).to_string();
        let mut fresh = 0;
        let mut next_name = |tag: &str| {
            fresh += 1;
            format!("{name}~{tag}{fresh}")
        };
        let options: Vec<(String, Vec<(StateId, Rational)>)> = sgd
            .normal(s)
            .iter()
            .map(|t| (sgd.action_name(t.action).to_string(), remap(&t.dist, |x| x)))
            .collect();
        if sgd.is_sink(s) {
            let (a, pairs) = &options[0];
            b.transition(s, a, ActionKind::Normal, pairs.clone());
        } else if options.len() == 1 {
            let (a, pairs) = &options[0];
            b.transition(s, a, ActionKind::Normal, pairs.clone());
            b.transition(s, &format!("{a}~dup"), ActionKind::Normal, pairs.clone());
        } else {
            build_tree(&mut b, s, sgd.owner(s), &options, &mut next_name);
        }
        let dist: Vec<(String, Vec<(StateId, Rational)>)> = sgd
            .disturbances(s)
            .iter()
            .map(|t| (sgd.action_name(t.action).to_string(), remap(&t.dist, |x| x)))
            .collect();
        match dist.len() {
            0 => {}
            1 => {
                b.transition(s, &dist[0].0, ActionKind::Disturbance, dist[0].1.clone());
            }
            _ => {
                let hub = b.state(&next_name("d"), Player::Two);
                b.transition(s, "d~", ActionKind::Disturbance, [(hub, Rational::one())]);
                build_tree(&mut b, hub, Player::Two, &dist, &mut next_name);
            }
        }
    }
    b.initial(sgd.initial().iter().map(|(s, p)| (*s, p.clone())));
    copy_labels(sgd, &mut b, |s| vec![s]);
    b.build_unchecked()
}

fn build_tree(
    b: &mut SgdBuilder,
    at: StateId,
    owner: Player,
    options: &[(String, Vec<(StateId, Rational)>)],
    next_name: &mut impl FnMut(&str) -> String,
) {
    let mid = options.len().div_ceil(2);
    for half in [&options[..mid], &options[mid..]] {
        if half.len() == 1 {
            b.transition(at, &half[0].0, ActionKind::Normal, half[0].1.clone());
        } else {
            let node = b.state(&next_name("n"), owner);
            b.transition(at, &format!("~{}", b.num_states() - 1), ActionKind::Normal, [(node, Rational::one())]);
            build_tree(b, node, owner, half, next_name);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::model::validate;
    use crate::numeric::rat;
    use crate::solvers::{max_reach_mdp, max_reach_sg, SolveOptions};

    #[test]
    fn counter_product_sizes_and_monotonicity() {
        let f = fixtures::fig6_left();
        let p = product_with_counter(&f.model, 2);
        assert_eq!(p.num_states(), 3 * f.model.num_states());
        assert!(validate(&p).is_empty());
        for s in p.states() {
            let i: usize = p.state_name(s).rsplit('@').next().unwrap().parse().unwrap();
            if i == 0 {
                assert!(p.disturbances(s).is_empty());
            }
            for t in p.normal(s).iter().chain(p.disturbances(s)) {
                for x in t.dist.support() {
                    let j: usize = p.state_name(*x).rsplit('@').next().unwrap().parse().unwrap();
                    if t.action.is_disturbance() {
                        assert_eq!(j + 1, i);
                    } else {
                        assert_eq!(j, i);
                    }
                }
            }
        }
    }

    #[test]
    fn unfolded_state_count() {
        let f = fixtures::fig4();
        let m = &f.model;
        let u = unfold(m, 2, false);
        let p1 = m.player1_states().count();
        let av: usize = m.player1_states().map(|s| m.normal(s).len()).sum();
        let p2 = m.num_states() - p1;
        assert_eq!(u.game.num_states(), 3 * (p1 + av) + 3 * p2);
        assert!(!u.game.has_disturbances());
        assert!(validate(&u.game).is_empty());
        let zero = unfold(m, 0, false);
        for s in zero.game.states() {
            if zero.origin[s.0].action.is_some() {
                assert_eq!(zero.game.normal(s).len(), 1);
            }
        }
    }

    #[test]
    fn unfolded_game_value_matches_full_disturbance() {
        let f = fixtures::fig4();
        let u = unfold(&f.model, 2, true);
        let a: Arena<Rational> = Arena::from_sgd(&u.game, &u.costs);
        let goal: Vec<bool> = u.origin.iter().map(|o| o.action.is_none() && f.model.state_name(o.state) == "G").collect();
        // Player 2 minimising reach of G equals maximising avoidance; one Player-1 strategy.
        let bad: Vec<bool> = u.origin.iter().map(|o| o.action.is_none() && f.model.state_name(o.state) == "B").collect();
        let v = max_reach_sg(&a, &bad, &SolveOptions::default()).unwrap();
        assert_eq!(a.initial_value(&v.values), rat(3, 4));
        assert!(goal.iter().any(|&g| g));
    }

    #[test]
    fn gadget_game_has_one_gadget_per_player1_action() {
        let f = fixtures::fig4();
        let g = expected_gadget_game(&f.model);
        assert_eq!(g.gadget.len(), 2);
        assert!(validate(&g.game).is_empty());
        for ((_, _), gs) in &g.gadget {
            for t in g.game.normal(*gs) {
                let expected = if g.game.action_name(t.action) == PASS_ACTION { rat(0, 1) } else { rat(1, 1) };
                assert_eq!(g.costs.get(*gs, t.action), expected);
            }
        }
    }

    #[test]
    fn quotient_exit_costs() {
        use crate::graph::mec_decomposition;
        let f = fixtures::freq19();
        let a: Arena<Rational> = Arena::induced(&f.model, &f.strategy).unwrap();
        let mecs: Vec<Mec> = mec_decomposition(&a).into_iter().filter(|m| m.states.len() == 2).collect();
        let q = weighted_mec_quotient(&a, &mecs, &[rat(10, 19)]).unwrap();
        assert_eq!(q.quotient.len(), 3);
        let collapsed = *q.collapsed_of.keys().next().unwrap();
        assert_eq!(q.exit_cost[&collapsed], rat(10, 19));
        let overlap = weighted_mec_quotient(&a, &[mecs[0].clone(), mecs[0].clone()], &[rat(0, 1), rat(0, 1)]);
        assert!(matches!(overlap, Err(TransformError::OverlappingComponents(_))));
        let none = weighted_mec_quotient(&a, &[], &[]).unwrap();
        assert_eq!(none.quotient.len(), a.len() + 1);
    }

    #[test]
    fn stopping_adds_epsilon_leak() {
        let f = fixtures::fig4();
        assert!(make_stopping(&f.model, &rat(0, 1), "B").is_err());
        let e = rat(1, 1000);
        let m = make_stopping(&f.model, &e, "B").unwrap();
        assert!(validate(&m).is_empty());
        let stop = m.state_by_name(STOP_STATE).unwrap();
        for s in m.states() {
            if !m.is_sink(s) {
                for t in m.normal(s).iter().chain(m.disturbances(s)) {
                    assert_eq!(t.dist.prob(&stop), e);
                }
            }
        }
    }

    #[test]
    fn stopping_value_converges_under_full_disturbance() {
        let f = fixtures::fig4();
        let mut last = rat(0, 1);
        for e in [rat(1, 1000), rat(1, 10000), rat(1, 100000)] {
            let m = make_stopping(&f.model, &e, "B").unwrap();
            let pi = Strategy::named_action(&m, "a");
            let a: Arena<Rational> = Arena::induced(&m, &pi).unwrap();
            // Only disturbances: restrict Player-1 states to their disturbance choice.
            let forced = a.restrict(|s, c| a.choices[s].len() == 1 || c == 1);
            let goal: Vec<bool> = a.names.iter().map(|n| n == "G").collect();
            let v = max_reach_mdp(&forced, &goal, &SolveOptions::default()).unwrap();
            let value = a.initial_value(&v.values);
            assert_eq!(value, (rat(1, 1) - &e) * (rat(1, 1) - &e) / rat(4, 1));
            assert!(value > last && value < rat(1, 4));
            last = value;
        }
    }

    #[test]
    fn binarize_counts_intermediaries() {
        let mut b = SgdBuilder::new();
        let s = b.state("s", Player::One);
        let g = b.state("G", Player::Two);
        for a in ["a", "b", "c", "e"] {
            b.transition(s, a, ActionKind::Normal, [(g, rat(1, 1))]);
        }
        b.self_loop(g, "a");
        b.label(g, "G");
        b.initial([(s, rat(1, 1))]);
        let m = b.build().unwrap();
        let bin = binarize_actions(&m);
        assert_eq!(bin.num_states(), m.num_states() + 2);
        assert!(validate(&bin).is_empty());
        assert!(bin.is_sink(g));
        for x in bin.states().filter(|x| !bin.is_sink(*x)) {
            assert_eq!(bin.normal(x).len(), 2);
            assert!(bin.disturbances(x).len() <= 1);
        }
        let f = fixtures::fig6_right();
        let two = binarize_actions(&f.model);
        assert_eq!(two.num_states(), f.model.num_states());
    }
}
