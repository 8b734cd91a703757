//! Seeded random models and executable checks of the correspondences the algorithms
//! rely on: induced MDP, unfolding, gadget game, iterative LP and weighted quotient.

use std::collections::{BTreeMap, BTreeSet};
use std::ops::RangeInclusive;

use num_traits::{One, Zero};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::arena::Arena;
use crate::chain::{induced_mc, MarkovChain};
use crate::eval::transient_iterative_lp;
use crate::graph::{compute_b, mec_decomposition_with, union_mask};
use crate::model::{
    ActionId, ActionKind, Distribution, Memory, Objective, ObjectiveKind, Player, Sgd, SgdBuilder, StateId,
    Strategy, StrategyOwner,
};
use crate::numeric::{format_rational, Rational};
use crate::solvers::{max_reach_mdp, min_cost_reach, min_mean_payoff_mec, SolveOptions};
use crate::transforms::{expected_gadget_game, induced_mdp, unfold, weighted_mec_quotient, Unfolded, PASS_ACTION};

pub const GOAL_LABEL: &str = "G";
pub const BAD_LABEL: &str = "B";

/// Parameters of the random model generator. Counts exclude the two labeled sinks.
#[derive(Debug, Clone, PartialEq)]
pub struct RandomModelSpec {
    pub states: RangeInclusive<usize>,
    pub actions: RangeInclusive<usize>,
    /// Chance that a Player-1 state gets a disturbance action.
    pub disturbance_prob: f64,
    pub support: RangeInclusive<usize>,
    /// Chance that a state belongs to Player 2.
    pub player2_prob: f64,
    /// Extra `B`-labeled sinks besides the mandatory one.
    pub extra_bad_sinks: usize,
    pub seed: u64,
}

impl Default for RandomModelSpec {
    fn default() -> Self {
        RandomModelSpec {
            states: 1..=5,
            actions: 1..=2,
            disturbance_prob: 0.6,
            support: 1..=3,
            player2_prob: 0.3,
            extra_bad_sinks: 0,
            seed: 0,
        }
    }
}

impl RandomModelSpec {
    pub fn with_seed(seed: u64) -> Self {
        RandomModelSpec { seed, ..Self::default() }
    }
}

fn random_distribution(rng: &mut ChaCha8Rng, targets: usize, support: &RangeInclusive<usize>) -> Vec<(StateId, Rational)> {
    let size = rng.gen_range(support.clone()).clamp(1, targets);
    let mut picks: Vec<usize> = (0..targets).collect();
    picks.shuffle(rng);
    picks.truncate(size);
    picks.sort_unstable();
    let weights: Vec<i64> = picks.iter().map(|_| rng.gen_range(1..=4)).collect();
    let total: i64 = weights.iter().sum();
    picks
        .into_iter()
        .zip(weights)
        .map(|(t, w)| (StateId(t), Rational::new(w.into(), total.into())))
        .collect()
}

/// A reproducible random model with states `s0..`, a `G` sink and at least one `B` sink.
/// All sinks are Player-2 self-loops; the play starts in `s0`.
pub fn generate(spec: &RandomModelSpec) -> Sgd {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let n = rng.gen_range(spec.states.clone()).max(1);
    let mut b = SgdBuilder::new();
    let owners: Vec<Player> = (0..n)
        .map(|_| if rng.gen_bool(spec.player2_prob) { Player::Two } else { Player::One })
        .collect();
    for (i, &o) in owners.iter().enumerate() {
        b.state(&format!("s{i}"), o);
    }
    let goal = b.state(GOAL_LABEL, Player::Two);
    b.self_loop(goal, "a");
    b.label(goal, GOAL_LABEL);
    for j in 0..=spec.extra_bad_sinks {
        let name = if j == 0 { BAD_LABEL.to_string() } else { format!("{BAD_LABEL}{j}") };
        let bad = b.state(&name, Player::Two);
        b.self_loop(bad, "a");
        b.label(bad, BAD_LABEL);
    }
    let total = b.num_states();
    for (i, &o) in owners.iter().enumerate() {
        let s = StateId(i);
        let k = rng.gen_range(spec.actions.clone()).max(1);
        for a in 0..k {
            let dist = random_distribution(&mut rng, total, &spec.support);
            b.transition(s, &format!("a{a}"), ActionKind::Normal, dist);
        }
        if o == Player::One && rng.gen_bool(spec.disturbance_prob) {
            let dist = random_distribution(&mut rng, total, &spec.support);
            b.transition(s, "d", ActionKind::Disturbance, dist);
        }
    }
    b.initial([(StateId(0), Rational::one())]);
    b.build().expect("generated models are valid")
}

/// A reachability objective for `G` with a threshold drawn from a small grid.
pub fn random_objective(seed: u64) -> Objective {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let grid = [(1, 4), (1, 3), (1, 2), (2, 3), (3, 4), (9, 10)];
    let (p, q) = grid[rng.gen_range(0..grid.len())];
    Objective::reach(GOAL_LABEL, Rational::new(p.into(), q.into()), rng.gen_bool(0.5))
}

/// Uniformly random pure memoryless strategy of `owner`.
pub fn random_pure(sgd: &Sgd, owner: StrategyOwner, rng: &mut impl Rng) -> Strategy {
    let player = if owner == StrategyOwner::Player2 { Player::Two } else { Player::One };
    let choice = sgd.states().filter(|&s| sgd.owner(s) == player).map(|s| {
        let options = options_of(sgd, s, owner);
        (s, options[rng.gen_range(0..options.len())])
    });
    Strategy::pure_memoryless(owner, choice.collect::<Vec<_>>())
}

fn options_of(sgd: &Sgd, s: StateId, owner: StrategyOwner) -> Vec<ActionId> {
    match owner {
        StrategyOwner::Disturber => std::iter::once(ActionId::BOTTOM)
            .chain(sgd.disturbances(s).iter().map(|t| t.action))
            .collect(),
        _ => sgd.normal(s).iter().map(|t| t.action).collect(),
    }
}

/// Random pure step-counting disturber with bound `k` that never disturbs at counter 0.
pub fn random_counting_disturber(sgd: &Sgd, k: usize, rng: &mut impl Rng) -> Strategy {
    let mut rule = BTreeMap::new();
    for s in sgd.player1_states() {
        for c in 0..=k {
            let a = if c == 0 {
                ActionId::BOTTOM
            } else {
                let options = options_of(sgd, s, StrategyOwner::Disturber);
                options[rng.gen_range(0..options.len())]
            };
            rule.insert((s, c), Distribution::dirac(a));
        }
    }
    Strategy::new(StrategyOwner::Disturber, Memory::StepCounting(k), rule)
}

/// Outcome of one check over all trials.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub trials: usize,
    pub failures: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LemmaReport {
    pub seed: u64,
    pub checks: Vec<CheckResult>,
}

impl LemmaReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.failures.is_empty())
    }

    pub fn failure_count(&self) -> usize {
        self.checks.iter().map(|c| c.failures.len()).sum()
    }
}

fn describe(sgd: &Sgd, st: &Strategy) -> String {
    let parts: Vec<String> = st
        .rule()
        .iter()
        .map(|(&(s, c), d)| {
            let a = d.as_dirac().map(|a| sgd.action_name(*a).to_string()).unwrap_or_else(|| "mixed".into());
            match st.memory {
                Memory::Memoryless => format!("{}={a}", sgd.state_name(s)),
                Memory::StepCounting(_) => format!("({},{c})={a}", sgd.state_name(s)),
            }
        })
        .collect();
    format!("{{{}}}", parts.join(","))
}

fn label_reach(sgd: &Sgd, chain: &MarkovChain, label: &str) -> Rational {
    let set = sgd.label(label).cloned().unwrap_or_default();
    chain.initial_value(&chain.reach_probability(|s| set.contains(&s)))
}

/// Same strategy on a model sharing state and action names.
fn rename(st: &Strategy, from: &Sgd, to: &Sgd) -> Strategy {
    let rule = st
        .rule()
        .iter()
        .map(|(&(s, c), d)| {
            let t = to.state_by_name(from.state_name(s)).expect("shared state");
            let d = d.map_keys(|a| if a.is_bottom() { *a } else { to.action_by_name(from.action_name(*a), a.kind).expect("shared action") });
            ((t, c), d)
        })
        .collect();
    Strategy::new(st.owner, st.memory, rule)
}

fn step_distributions(chain: &MarkovChain, steps: usize) -> Vec<BTreeMap<StateId, Rational>> {
    let mut cur: Vec<Rational> = vec![Rational::zero(); chain.len()];
    for (i, p) in &chain.initial {
        cur[*i] += p;
    }
    let mut out = Vec::new();
    for _ in 0..=steps {
        let mut agg: BTreeMap<StateId, Rational> = BTreeMap::new();
        for (i, p) in cur.iter().enumerate() {
            if !p.is_zero() {
                *agg.entry(chain.states[i].0).or_insert_with(Rational::zero) += p;
            }
        }
        out.push(agg);
        let mut next = vec![Rational::zero(); chain.len()];
        for (i, p) in cur.iter().enumerate() {
            for e in &chain.edges[i] {
                next[e.to] += p * &e.prob;
            }
        }
        cur = next;
    }
    out
}

/// (i) The play of the game under (π, σ, δ) and of the induced MDP under the merged
/// adversary agree on state distributions, reach probabilities and expected disturbances.
pub fn check_induced_mdp(sgd: &Sgd, trials: usize, rng: &mut impl Rng) -> CheckResult {
    let mut failures = Vec::new();
    for trial in 0..trials {
        let pi = random_pure(sgd, StrategyOwner::Player1, rng);
        let sigma = random_pure(sgd, StrategyOwner::Player2, rng);
        let delta = random_pure(sgd, StrategyOwner::Disturber, rng);
        let m = induced_mdp(sgd, &pi).expect("valid strategy");
        let game = induced_mc(sgd, &pi, &sigma, &delta).expect("valid strategies");
        let mdp = induced_mc(&m, &Strategy::first_action(&m), &rename(&sigma, sgd, &m), &rename(&delta, sgd, &m))
            .expect("valid strategies");
        let same = step_distributions(&game, 6) == step_distributions(&mdp, 6)
            && sgd.labels().keys().all(|l| label_reach(sgd, &game, l) == label_reach(&m, &mdp, l))
            && game.expected_total_cost() == mdp.expected_total_cost();
        if !same {
            failures.push(format!("trial {trial}: pi {} sigma {} delta {}", describe(sgd, &pi), describe(sgd, &sigma), describe(sgd, &delta)));
        }
    }
    CheckResult { name: "induced-mdp", trials, failures }
}

/// Player-2 strategy of the unfolded game that replays σ and a step-counting δ.
fn unfolded_player2(sgd: &Sgd, u: &Unfolded, sigma: &Strategy, delta: &Strategy) -> Strategy {
    let choice = u.game.states().filter(|&v| u.game.owner(v) == Player::Two).map(|v| {
        let o = u.origin[v.0];
        let name = match o.action {
            Some(_) => {
                let d = delta.pure_choice(o.state, o.counter).unwrap_or(ActionId::BOTTOM);
                if d.is_bottom() || o.counter == 0 {
                    PASS_ACTION.to_string()
                } else {
                    sgd.action_name(d).to_string()
                }
            }
            None => sgd.action_name(sigma.pure_choice(o.state, 0).expect("total")).to_string(),
        };
        (v, u.game.action_by_name(&name, ActionKind::Normal).expect("unfolded action"))
    });
    Strategy::pure_memoryless(StrategyOwner::Player2, choice.collect::<Vec<_>>())
}

fn unfolded_player1(sgd: &Sgd, u: &Unfolded, pi: &Strategy) -> Strategy {
    let choice = u.game.player1_states().map(|v| {
        let o = u.origin[v.0];
        let a = pi.pure_choice(o.state, o.counter).expect("total");
        (v, u.game.action_by_name(sgd.action_name(a), ActionKind::Normal).expect("unfolded action"))
    });
    Strategy::pure_memoryless(StrategyOwner::Player1, choice.collect::<Vec<_>>())
}

/// (ii) With at most `k` disturbances, reach probabilities in the game equal those of
/// the corresponding plays of the unfolded game built by `transform`.
pub fn check_unfolding(
    sgd: &Sgd,
    max_k: usize,
    trials: usize,
    rng: &mut impl Rng,
    transform: impl Fn(&Sgd, usize) -> Unfolded,
) -> CheckResult {
    let mut failures = Vec::new();
    for trial in 0..trials {
        let k = rng.gen_range(0..=max_k);
        let pi = random_pure(sgd, StrategyOwner::Player1, rng);
        let sigma = random_pure(sgd, StrategyOwner::Player2, rng);
        let delta = random_counting_disturber(sgd, k, rng);
        let game = induced_mc(sgd, &pi, &sigma, &delta).expect("valid strategies");
        let u = transform(sgd, k);
        let chain = induced_mc(
            &u.game,
            &unfolded_player1(sgd, &u, &pi),
            &unfolded_player2(sgd, &u, &sigma, &delta),
            &Strategy::never_disturb(&u.game),
        )
        .expect("valid strategies");
        if !sgd.labels().keys().all(|l| label_reach(sgd, &game, l) == label_reach(&u.game, &chain, l)) {
            failures.push(format!("trial {trial}: k {k} pi {} delta {}", describe(sgd, &pi), describe(sgd, &delta)));
        }
    }
    CheckResult { name: "unfolding", trials, failures }
}

/// (iii) Reach probabilities agree between the game and the gadget game under the
/// corresponding strategies.
pub fn check_gadget_game(sgd: &Sgd, trials: usize, rng: &mut impl Rng) -> CheckResult {
    let g = expected_gadget_game(sgd);
    let mut failures = Vec::new();
    for trial in 0..trials {
        let pi = random_pure(sgd, StrategyOwner::Player1, rng);
        let sigma = random_pure(sgd, StrategyOwner::Player2, rng);
        let delta = random_pure(sgd, StrategyOwner::Disturber, rng);
        let game = induced_mc(sgd, &pi, &sigma, &delta).expect("valid strategies");
        let gadget_of: BTreeMap<StateId, StateId> = g.gadget.iter().map(|(&(s, _), &v)| (v, s)).collect();
        let p2 = g.game.states().filter(|&v| g.game.owner(v) == Player::Two).map(|v| {
            let name = match gadget_of.get(&v) {
                Some(&s) => {
                    let d = delta.pure_choice(s, 0).expect("total");
                    if d.is_bottom() { PASS_ACTION.to_string() } else { sgd.action_name(d).to_string() }
                }
                None => sgd.action_name(sigma.pure_choice(v, 0).expect("total")).to_string(),
            };
            (v, g.game.action_by_name(&name, ActionKind::Normal).expect("gadget action"))
        });
        let chain = induced_mc(
            &g.game,
            &rename(&pi, sgd, &g.game),
            &Strategy::pure_memoryless(StrategyOwner::Player2, p2.collect::<Vec<_>>()),
            &Strategy::never_disturb(&g.game),
        )
        .expect("valid strategies");
        if !sgd.labels().keys().all(|l| label_reach(sgd, &game, l) == label_reach(&g.game, &chain, l)) {
            failures.push(format!("trial {trial}: pi {} sigma {} delta {}", describe(sgd, &pi), describe(sgd, &sigma), describe(sgd, &delta)));
        }
    }
    CheckResult { name: "gadget-game", trials, failures }
}

fn violation_masks(sgd: &Sgd, obj: &Objective) -> Vec<bool> {
    let set = sgd.label(&obj.label).cloned().unwrap_or_default();
    sgd.states().map(|s| set.contains(&s)).collect()
}

/// Largest violation probability in the `i`-unfolded game with Player 1 fixed to `pi`.
fn unfolded_violation(sgd: &Sgd, obj: &Objective, pi: &Strategy, i: usize, opts: &SolveOptions) -> Rational {
    let u = unfold(sgd, i, false);
    let full: Arena<Rational> = Arena::from_sgd(&u.game, &u.costs);
    let mdp = full.restrict(|v, c| {
        let o = u.origin[v];
        if u.game.owner(StateId(v)) != Player::One {
            return true;
        }
        let a = full.choices[v][c].action;
        Some(u.game.action_name(a)) == pi.pure_choice(o.state, 0).map(|b| sgd.action_name(b))
    });
    let target = violation_masks(sgd, obj);
    let labeled: Vec<bool> = u.origin.iter().map(|o| o.action.is_none() && target[o.state.0]).collect();
    let bad = match obj.kind {
        ObjectiveKind::Safety => labeled,
        ObjectiveKind::Reachability => {
            let allowed: Vec<bool> = labeled.iter().map(|g| !g).collect();
            union_mask(mdp.len(), &mec_decomposition_with(&mdp, &allowed, |_, _| true))
        }
    };
    let v = max_reach_mdp(&mdp, &bad, opts).expect("small LP").values;
    mdp.initial_value(&v)
}

/// (iv) The iterative level LPs on the induced MDP give the same initial values as the
/// direct LP on the unfolded MDP, for budgets up to `max_k`.
pub fn check_iterative_lp(sgd: &Sgd, obj: &Objective, max_k: usize, trials: usize, rng: &mut impl Rng, opts: &SolveOptions) -> CheckResult {
    let mut failures = Vec::new();
    let never = match obj.kind {
        ObjectiveKind::Reachability => Objective::reach(&obj.label, Rational::zero(), false),
        ObjectiveKind::Safety => Objective::safety(&obj.label, Rational::zero(), false),
    };
    // Only a few distinct strategies exist on small models; each is checked once.
    let mut seen = BTreeSet::new();
    for trial in 0..trials {
        let pi = random_pure(sgd, StrategyOwner::Player1, rng);
        if !seen.insert(describe(sgd, &pi)) {
            continue;
        }
        let mdp: Arena<Rational> = Arena::induced(sgd, &pi).expect("valid strategy");
        let target = violation_masks(sgd, obj);
        let bad = match obj.kind {
            ObjectiveKind::Safety => target,
            ObjectiveKind::Reachability => union_mask(mdp.len(), &compute_b(&mdp, &target)),
        };
        let levels = transient_iterative_lp(&mdp, &bad, &never, max_k, opts).expect("small LP");
        for (i, level) in levels.levels().iter().enumerate() {
            let lp = mdp.initial_value(level);
            let direct = unfolded_violation(sgd, obj, &pi, i, opts);
            if lp != direct {
                failures.push(format!(
                    "trial {trial}: pi {} level {i}: iterative {} unfolded {}",
                    describe(sgd, &pi),
                    format_rational(&lp),
                    format_rational(&direct)
                ));
            }
        }
    }
    CheckResult { name: "iterative-lp", trials, failures }
}

/// Smallest expected long-run disturbance frequency over pure memoryless adversaries.
fn direct_mean_payoff(sgd: &Sgd, pi: &Strategy, budget: u64) -> Option<Rational> {
    let p2: Vec<StateId> = sgd.states().filter(|&s| sgd.owner(s) == Player::Two).collect();
    let p1: Vec<StateId> = sgd.player1_states().collect();
    let mut radix: Vec<usize> = p2.iter().map(|&s| sgd.normal(s).len()).collect();
    radix.extend(p1.iter().map(|&s| 1 + sgd.disturbances(s).len()));
    if crate::solvers::Profiles::count(&radix) > budget {
        return None;
    }
    let mut best: Option<Rational> = None;
    for profile in crate::solvers::Profiles::new(radix) {
        let sigma = Strategy::pure_memoryless(
            StrategyOwner::Player2,
            p2.iter().zip(&profile).map(|(&s, &c)| (s, sgd.normal(s)[c].action)).collect::<Vec<_>>(),
        );
        let delta = Strategy::pure_memoryless(
            StrategyOwner::Disturber,
            p1.iter()
                .zip(&profile[p2.len()..])
                .map(|(&s, &c)| (s, if c == 0 { ActionId::BOTTOM } else { sgd.disturbances(s)[c - 1].action }))
                .collect::<Vec<_>>(),
        );
        let chain = induced_mc(sgd, pi, &sigma, &delta).expect("valid strategies");
        let mut value = Rational::zero();
        for class in chain.bottom_sccs() {
            let mut mask = vec![false; chain.len()];
            for &i in &class {
                mask[i] = true;
            }
            let reach = chain.initial_value(&chain.reach_probability_mask(&mask));
            let avg = chain.stationary(&class).iter().fold(Rational::zero(), |acc, (i, w)| acc + w * chain.step_cost(*i));
            value += reach * avg;
        }
        if best.as_ref().is_none_or(|b| value < *b) {
            best = Some(value);
        }
    }
    best
}

/// (v) The shortest path to `s+` in the weighted MEC quotient equals the least expected
/// long-run disturbance frequency found by direct enumeration. Reachability only.
pub fn check_quotient(sgd: &Sgd, obj: &Objective, trials: usize, rng: &mut impl Rng, opts: &SolveOptions) -> CheckResult {
    let mut failures = Vec::new();
    if obj.kind == ObjectiveKind::Reachability {
        let mut seen = BTreeSet::new();
        for trial in 0..trials {
            let pi = random_pure(sgd, StrategyOwner::Player1, rng);
            if !seen.insert(describe(sgd, &pi)) {
                continue;
            }
            let Some(direct) = direct_mean_payoff(sgd, &pi, opts.budget) else { continue };
            let mdp: Arena<Rational> = Arena::induced(sgd, &pi).expect("valid strategy");
            let goal = violation_masks(sgd, obj);
            let allowed: Vec<bool> = goal.iter().map(|g| !g).collect();
            let mecs = mec_decomposition_with(&mdp, &allowed, |_, _| true);
            let f: Vec<Rational> = mecs.iter().map(|m| min_mean_payoff_mec(&mdp, m, true, opts).expect("small LP")).collect();
            let q = weighted_mec_quotient(&mdp, &mecs, &f).expect("disjoint components");
            let mut target = vec![false; q.quotient.len()];
            target[q.s_plus] = true;
            for (s, &g) in goal.iter().enumerate() {
                if g {
                    target[q.state_map[s]] = true;
                }
            }
            let v = min_cost_reach(&q.quotient, &target, opts).expect("small LP");
            let quotient = q.quotient.initial_value(&v);
            if quotient != direct {
                failures.push(format!(
                    "trial {trial}: pi {}: quotient {} direct {}",
                    describe(sgd, &pi),
                    format_rational(&quotient),
                    format_rational(&direct)
                ));
            }
        }
    }
    CheckResult { name: "weighted-quotient", trials, failures }
}

pub const DEFAULT_TRIALS: usize = 100;

/// Runs checks (i) to (v) with `trials` sampled strategies each. Trials are seeded from
/// `seed` so failures can be replayed.
pub fn check_lemma_suite(sgd: &Sgd, obj: &Objective, trials: usize, seed: u64, opts: &SolveOptions) -> LemmaReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let checks = vec![
        check_induced_mdp(sgd, trials, &mut rng),
        check_unfolding(sgd, 3, trials, &mut rng, |m, k| unfold(m, k, false)),
        check_gadget_game(sgd, trials, &mut rng),
        check_iterative_lp(sgd, obj, 3, trials, &mut rng, opts),
        check_quotient(sgd, obj, trials, &mut rng, opts),
    ];
    LemmaReport { seed, checks }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::model::validate;

    #[test]
    fn generator_is_reproducible_and_valid() {
        for seed in 0..1000 {
            let spec = RandomModelSpec::with_seed(seed);
            let m = generate(&spec);
            assert!(validate(&m).is_empty(), "seed {seed}");
            assert!(m.label(GOAL_LABEL).is_some() && m.label(BAD_LABEL).is_some());
            assert_eq!(m, generate(&spec));
        }
        let calm = generate(&RandomModelSpec { disturbance_prob: 0.0, ..RandomModelSpec::with_seed(3) });
        assert!(!calm.has_disturbances());
    }

    #[test]
    fn fixtures_pass_all_checks() {
        let opts = SolveOptions::default();
        for f in fixtures::all().values() {
            let report = check_lemma_suite(&f.model, &f.objective, 20, 7, &opts);
            assert!(report.passed(), "{}: {:?}", f.name, report.checks);
        }
    }

    #[test]
    fn zero_budget_unfolding_is_exact() {
        let f = fixtures::fig6_right();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let r = check_unfolding(&f.model, 0, 10, &mut rng, |m, k| unfold(m, k, false));
        assert!(r.failures.is_empty(), "{:?}", r.failures);
    }

    /// An unfolding that ignores where disturbances lead.
    fn corrupted_unfold(sgd: &Sgd, k: usize) -> Unfolded {
        let mut b = SgdBuilder::new();
        for s in sgd.states() {
            b.state(sgd.state_name(s), sgd.owner(s));
        }
        for s in sgd.states() {
            for t in sgd.normal(s) {
                b.transition(s, sgd.action_name(t.action), ActionKind::Normal, t.dist.iter().map(|(x, p)| (*x, p.clone())));
            }
            for t in sgd.disturbances(s) {
                let normal = &sgd.normal(s)[0].dist;
                b.transition(s, sgd.action_name(t.action), ActionKind::Disturbance, normal.iter().map(|(x, p)| (*x, p.clone())));
            }
        }
        b.initial(sgd.initial().iter().map(|(s, p)| (*s, p.clone())));
        for (label, set) in sgd.labels() {
            for &s in set {
                b.label(s, label);
            }
        }
        unfold(&b.build_unchecked(), k, false)
    }

    #[test]
    fn corrupted_unfolding_is_caught() {
        let f = fixtures::fig4();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let r = check_unfolding(&f.model, 2, 30, &mut rng, corrupted_unfold);
        assert!(!r.failures.is_empty());
    }

    #[test]
    fn random_models_pass_all_checks() {
        let opts = SolveOptions::default();
        for seed in 0..10 {
            let m = generate(&RandomModelSpec::with_seed(seed));
            let report = check_lemma_suite(&m, &random_objective(seed), 10, seed, &opts);
            assert!(report.passed(), "seed {seed}: {:?}", report.checks);
        }
    }
}
