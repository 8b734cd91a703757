//! Brute-force reference computations over pure strategies and explicit Markov chains.
//! They share no solver code with the LP and game paths and serve as test oracles.

use std::collections::BTreeMap;

use num_traits::{One, Zero};

use crate::chain::induced_mc;
use crate::graph::scc_ids;
use crate::model::{
    ActionId, BreakingPoint, Distribution, ExtendedCount, Frequency, Memory, Objective, ObjectiveKind, Player, Sgd, StateId,
    Strategy, StrategyOwner,
};
use crate::numeric::{solve_linear, Rational};
use crate::solvers::{Profiles, SolverError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Semantics {
    Expected,
    Worst,
}

/// Pure choices of the adversary at one state.
fn adversary_options(sgd: &Sgd, s: StateId, disturb: bool) -> Vec<ActionId> {
    match sgd.owner(s) {
        Player::One => {
            let mut v = vec![ActionId::BOTTOM];
            if disturb {
                v.extend(sgd.disturbances(s).iter().map(|t| t.action));
            }
            v
        }
        Player::Two => sgd.normal(s).iter().map(|t| t.action).collect(),
    }
}

fn adversary_profiles(sgd: &Sgd, disturb: bool, budget: u64) -> Result<(Vec<Vec<ActionId>>, Vec<Vec<usize>>), SolverError> {
    let options: Vec<Vec<ActionId>> = sgd.states().map(|s| adversary_options(sgd, s, disturb)).collect();
    let radix: Vec<usize> = options.iter().map(Vec::len).collect();
    if Profiles::count(&radix) > budget {
        return Err(SolverError::BudgetExceeded { limit: budget });
    }
    Ok((options.clone(), Profiles::new(radix).collect()))
}

enum Succ {
    State(usize),
    Exit(Rational),
}

/// Violation payoff per state when the adversary plays `choice` with `pi` at counter
/// `counter`; disturbances end the round with the previous round's payoff.
fn round_payoff(
    sgd: &Sgd,
    obj: &Objective,
    target: &[bool],
    pi: &Strategy,
    counter: usize,
    choice: &[ActionId],
    previous: Option<&[Rational]>,
) -> Vec<Rational> {
    let n = sgd.num_states();
    let mut succ: Vec<Vec<(Succ, Rational)>> = Vec::with_capacity(n);
    for s in sgd.states() {
        let a = choice[s.0];
        let mut out = Vec::new();
        if a.is_disturbance() {
            let prev = previous.expect("disturbance only with a previous round");
            for (t, p) in sgd.transition(s, a).expect("available").iter() {
                out.push((Succ::Exit(prev[t.0].clone()), p.clone()));
            }
        } else if a.is_bottom() {
            for (b, pb) in pi.choice(s, counter).expect("total strategy").iter() {
                for (t, p) in sgd.transition(s, *b).expect("available").iter() {
                    out.push((Succ::State(t.0), pb * p));
                }
            }
        } else {
            for (t, p) in sgd.transition(s, a).expect("available").iter() {
                out.push((Succ::State(t.0), p.clone()));
            }
        }
        succ.push(out);
    }
    let internal = |s: usize| {
        succ[s]
            .iter()
            .filter_map(|(t, _)| match t {
                Succ::State(t) => Some(*t),
                Succ::Exit(_) => None,
            })
            .collect::<Vec<_>>()
    };
    let comp = scc_ids(n, &vec![true; n], internal);
    let closed = |s: usize| {
        (0..n)
            .filter(|&u| comp[u] == comp[s])
            .all(|u| succ[u].iter().all(|(t, _)| matches!(t, Succ::State(v) if comp[*v] == comp[s])))
    };
    let mut fixed: Vec<Option<Rational>> = vec![None; n];
    for s in 0..n {
        if closed(s) {
            let hits = (0..n).any(|u| comp[u] == comp[s] && target[u]);
            let violated = match obj.kind {
                ObjectiveKind::Reachability => !hits,
                ObjectiveKind::Safety => hits,
            };
            fixed[s] = Some(if violated { Rational::one() } else { Rational::zero() });
        }
    }
    let free: Vec<usize> = (0..n).filter(|&s| fixed[s].is_none()).collect();
    let pos: BTreeMap<usize, usize> = free.iter().enumerate().map(|(i, &s)| (s, i)).collect();
    let m = free.len();
    let mut a = vec![vec![Rational::zero(); m]; m];
    let mut b = vec![Rational::zero(); m];
    for (row, &s) in free.iter().enumerate() {
        a[row][row] += Rational::one();
        for (t, p) in &succ[s] {
            match t {
                Succ::Exit(v) => b[row] += p * v,
                Succ::State(t) => match (&fixed[*t], pos.get(t)) {
                    (Some(v), _) => b[row] += p * v,
                    (None, Some(&col)) => a[row][col] -= p,
                    (None, None) => unreachable!(),
                },
            }
        }
    }
    let x = solve_linear(a, b).expect("transient part is absorbing");
    (0..n)
        .map(|s| fixed[s].clone().unwrap_or_else(|| x[pos[&s]].clone()))
        .collect()
}

fn initial_value(sgd: &Sgd, v: &[Rational]) -> Rational {
    sgd.initial().iter().fold(Rational::zero(), |acc, (s, p)| acc + p * &v[s.0])
}

/// Per-round maximal violation probabilities with at most `i` disturbances, by
/// enumeration of pure memoryless adversaries in every round. `pi_counter(r)` is the
/// counter of `pi` when `r` disturbances remain.
pub fn round_values(
    sgd: &Sgd,
    obj: &Objective,
    pi: &Strategy,
    rounds: usize,
    pi_counter: impl Fn(usize) -> usize,
    budget: u64,
) -> Result<Vec<Vec<Rational>>, SolverError> {
    let target: Vec<bool> = sgd.states().map(|s| sgd.label(&obj.label).is_some_and(|l| l.contains(&s))).collect();
    let (opt0, prof0) = adversary_profiles(sgd, false, budget)?;
    let (opt1, prof1) = adversary_profiles(sgd, true, budget)?;
    let mut out: Vec<Vec<Rational>> = Vec::new();
    for r in 0..=rounds {
        let (options, profiles) = if r == 0 { (&opt0, &prof0) } else { (&opt1, &prof1) };
        let mut best: Option<Vec<Rational>> = None;
        for p in profiles {
            let choice: Vec<ActionId> = p.iter().enumerate().map(|(s, &c)| options[s][c]).collect();
            let v = round_payoff(sgd, obj, &target, pi, pi_counter(r), &choice, out.last().map(|v| v.as_slice()));
            best = Some(match best {
                None => v,
                Some(b) => b.into_iter().zip(v).map(|(x, y)| if y > x { y } else { x }).collect(),
            });
        }
        out.push(best.expect("at least one profile"));
    }
    Ok(out)
}

/// Smallest number `i <= kmax` of disturbances that breaks `pi` almost surely bounded.
pub fn oracle_worst_transient(sgd: &Sgd, obj: &Objective, pi: &Strategy, kmax: usize, budget: u64) -> Result<Option<usize>, SolverError> {
    match pi.memory {
        Memory::Memoryless => {
            let v = round_values(sgd, obj, pi, kmax, |_| 0, budget)?;
            Ok(v.iter().position(|x| obj.breaks(&initial_value(sgd, x))))
        }
        Memory::StepCounting(k) => {
            for i in 0..=kmax {
                // With r of i disturbances left, i - r were used and the strategy's counter
                // is k - (i - r), saturating at 0.
                let v = round_values(sgd, obj, pi, i, |r| k.saturating_sub(i - r), budget)?;
                if obj.breaks(&initial_value(sgd, &v[i])) {
                    return Ok(Some(i));
                }
            }
            Ok(None)
        }
    }
}

fn pure_adversaries(sgd: &Sgd, budget: u64) -> Result<Vec<(Strategy, Strategy)>, SolverError> {
    let (options, profiles) = adversary_profiles(sgd, true, budget)?;
    Ok(profiles
        .iter()
        .map(|p| {
            let mut p2 = BTreeMap::new();
            let mut d = BTreeMap::new();
            for s in sgd.states() {
                let a = options[s.0][p[s.0]];
                match sgd.owner(s) {
                    Player::One => d.insert(s, Distribution::dirac(a)),
                    Player::Two => p2.insert(s, Distribution::dirac(a)),
                };
            }
            (
                Strategy::memoryless(StrategyOwner::Player2, p2),
                Strategy::memoryless(StrategyOwner::Disturber, d),
            )
        })
        .collect())
}

/// Violation probability, expected disturbances (if finite), largest almost-sure number of
/// disturbances (if bounded) and the worst and expected long-run frequencies of one pure
/// memoryless adversary.
#[derive(Debug, Clone, PartialEq)]
pub struct AdversaryOutcome {
    pub violation: Rational,
    pub expected_cost: Option<Rational>,
    pub max_disturbances: Option<usize>,
    pub worst_frequency: Rational,
    pub mean_frequency: Rational,
}

pub fn pure_adversary_outcomes(sgd: &Sgd, obj: &Objective, pi: &Strategy, budget: u64) -> Result<Vec<AdversaryOutcome>, SolverError> {
    let target = sgd.label(&obj.label).cloned().unwrap_or_default();
    let mut out = Vec::new();
    for (sigma, delta) in pure_adversaries(sgd, budget)? {
        let c = induced_mc(sgd, pi, &sigma, &delta).expect("pure strategies are valid");
        let hit = c.initial_value(&c.reach_probability(|s| target.contains(&s)));
        let violation = match obj.kind {
            ObjectiveKind::Reachability => Rational::one() - hit,
            ObjectiveKind::Safety => hit,
        };
        let mut worst = Rational::zero();
        let mut mean = Rational::zero();
        for class in c.bottom_sccs() {
            let mut mask = vec![false; c.len()];
            for &i in &class {
                mask[i] = true;
            }
            let reach = c.initial_value(&c.reach_probability_mask(&mask));
            if reach.is_zero() {
                continue;
            }
            let f = c
                .stationary(&class)
                .iter()
                .fold(Rational::zero(), |acc, (i, w)| acc + w * c.step_cost(*i));
            mean += &reach * &f;
            if f > worst {
                worst = f;
            }
        }
        out.push(AdversaryOutcome {
            violation,
            expected_cost: c.expected_total_cost(),
            max_disturbances: c.max_disturbances(),
            worst_frequency: worst,
            mean_frequency: mean,
        });
    }
    Ok(out)
}

/// Least expected number of disturbances breaking `pi`, from mixtures of two pure
/// memoryless adversaries with finite expected cost. `None` when no such mixture breaks.
pub fn oracle_expected_transient(sgd: &Sgd, obj: &Objective, pi: &Strategy, budget: u64) -> Result<Option<Rational>, SolverError> {
    let finite: Vec<(Rational, Rational)> = pure_adversary_outcomes(sgd, obj, pi, budget)?
        .into_iter()
        .filter_map(|o| o.expected_cost.map(|c| (o.violation, c)))
        .collect();
    Ok(least_breaking_mixture(obj, &finite))
}

/// Least cost of a mixture of at most two (violation, cost) points whose violation
/// reaches the breaking threshold.
fn least_breaking_mixture(obj: &Objective, points: &[(Rational, Rational)]) -> Option<Rational> {
    let t = obj.violation_threshold();
    let finite = points;
    let max_p = finite.iter().map(|(p, _)| p.clone()).max();
    match max_p {
        Some(p) if obj.breaks(&p) => {}
        _ => return None,
    }
    let mut best: Option<Rational> = None;
    let mut consider = |c: Rational| {
        if best.as_ref().is_none_or(|b| c < *b) {
            best = Some(c);
        }
    };
    for (p1, c1) in finite {
        if *p1 >= t {
            consider(c1.clone());
        }
        for (p2, c2) in finite {
            if *p1 > t && *p2 < t {
                let alpha = (&t - p2) / (p1 - p2);
                consider(&alpha * c1 + (Rational::one() - &alpha) * c2);
            }
        }
    }
    best
}

/// Breaking point of `pi` computed by brute force; transient search stops at `kmax`.
pub fn oracle_breaking_point(
    sgd: &Sgd,
    obj: &Objective,
    pi: &Strategy,
    kmax: usize,
    semantics: Semantics,
    budget: u64,
) -> Result<BreakingPoint<Rational>, SolverError> {
    let transient = match semantics {
        Semantics::Worst => oracle_worst_transient(sgd, obj, pi, kmax, budget)?.map(|i| Rational::from_integer(i.into())),
        Semantics::Expected => oracle_expected_transient(sgd, obj, pi, budget)?,
    };
    if let Some(x) = transient {
        return Ok(BreakingPoint::finite(x));
    }
    let outcomes = pure_adversary_outcomes(sgd, obj, pi, budget)?;
    let breaking: Vec<&AdversaryOutcome> = outcomes.iter().filter(|o| obj.breaks(&o.violation)).collect();
    if breaking.is_empty() {
        return Ok(BreakingPoint::unbreakable());
    }
    let f = match semantics {
        Semantics::Worst => breaking.iter().map(|o| o.worst_frequency.clone()).min().expect("nonempty"),
        Semantics::Expected => {
            let points: Vec<(Rational, Rational)> = outcomes.iter().map(|o| (o.violation.clone(), o.mean_frequency.clone())).collect();
            least_breaking_mixture(obj, &points).expect("a breaking adversary exists")
        }
    };
    Ok(match (semantics, obj.kind) {
        (_, ObjectiveKind::Safety) => BreakingPoint { transient: ExtendedCount::Omega, frequency: Frequency::Value(Rational::zero()) },
        _ => BreakingPoint::omega(f),
    })
}

/// Best breaking point over pure Player-1 strategies with counter bound `memory`, by
/// enumeration, with an arg-max strategy (first one on ties).
pub fn oracle_enumerate(
    sgd: &Sgd,
    obj: &Objective,
    kmax: usize,
    memory: usize,
    semantics: Semantics,
    budget: u64,
) -> Result<(BreakingPoint<Rational>, Strategy), SolverError> {
    let p1: Vec<StateId> = sgd.player1_states().collect();
    let mut slots = Vec::new();
    for &s in &p1 {
        for c in 0..=memory {
            slots.push((s, c));
        }
    }
    let radix: Vec<usize> = slots.iter().map(|(s, _)| sgd.normal(*s).len()).collect();
    if Profiles::count(&radix) > budget {
        return Err(SolverError::BudgetExceeded { limit: budget });
    }
    let mut best: Option<(BreakingPoint<Rational>, Strategy)> = None;
    for profile in Profiles::new(radix) {
        let rule = slots
            .iter()
            .zip(&profile)
            .map(|(&(s, c), &i)| ((s, c), Distribution::dirac(sgd.normal(s)[i].action)))
            .collect();
        let memory_kind = if memory == 0 { Memory::Memoryless } else { Memory::StepCounting(memory) };
        let pi = Strategy::new(StrategyOwner::Player1, memory_kind, rule);
        let bp = oracle_breaking_point(sgd, obj, &pi, kmax, semantics, budget)?;
        if best
            .as_ref()
            .is_none_or(|(b, _)| crate::model::compare_breaking_points(&bp, b) == std::cmp::Ordering::Greater)
        {
            best = Some((bp, pi));
        }
    }
    Ok(best.expect("at least one strategy"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::numeric::rat;

    const BUDGET: u64 = 1_000_000;

    #[test]
    fn expected_frequency_mixes_adversaries() {
        use crate::model::{ActionKind, SgdBuilder};
        let mut b = SgdBuilder::new();
        let s0 = b.state("s0", Player::One);
        let g = b.state("G", Player::Two);
        let bad = b.state("B", Player::Two);
        b.self_loop(g, "a").label(g, "G");
        b.self_loop(bad, "a").label(bad, "B");
        b.transition(s0, "a", ActionKind::Normal, [(s0, rat(2, 5)), (g, rat(1, 5)), (bad, rat(2, 5))]);
        b.transition(s0, "d", ActionKind::Disturbance, [(s0, rat(1, 1))]);
        b.initial([(s0, rat(1, 1))]);
        let m = b.build().unwrap();
        let obj = Objective::reach("G", rat(1, 4), true);
        let pi = Strategy::named_action(&m, "a");
        // Only disturbing forever breaks; the expected case may do so on a quarter of the runs.
        let worst = oracle_breaking_point(&m, &obj, &pi, 3, Semantics::Worst, BUDGET).unwrap();
        assert_eq!(worst, BreakingPoint::omega(rat(1, 1)));
        let expected = oracle_breaking_point(&m, &obj, &pi, 3, Semantics::Expected, BUDGET).unwrap();
        assert_eq!(expected, BreakingPoint::omega(rat(1, 4)));
    }

    #[test]
    fn worst_case_fixture_values() {
        let f = fixtures::fig4();
        let (bp, _) = oracle_enumerate(&f.model, &f.objective, 3, 0, Semantics::Worst, BUDGET).unwrap();
        assert_eq!(bp, BreakingPoint::finite(rat(2, 1)));
        let f = fixtures::fig6_right();
        assert_eq!(oracle_worst_transient(&f.model, &f.objective, &f.strategy, 4, BUDGET).unwrap(), Some(3));
        let f = fixtures::nodist();
        let (bp, _) = oracle_enumerate(&f.model, &f.objective, 3, 0, Semantics::Worst, BUDGET).unwrap();
        assert_eq!(bp, BreakingPoint::unbreakable());
    }

    #[test]
    fn step_counting_beats_memoryless_on_fig6_left() {
        let f = fixtures::fig6_left();
        let (m0, _) = oracle_enumerate(&f.model, &f.objective, 4, 0, Semantics::Worst, BUDGET).unwrap();
        let (m1, _) = oracle_enumerate(&f.model, &f.objective, 4, 1, Semantics::Worst, BUDGET).unwrap();
        assert_eq!(m0, BreakingPoint::finite(rat(1, 1)));
        assert_eq!(m1, BreakingPoint::finite(rat(2, 1)));
    }

    #[test]
    fn expected_and_frequency_values() {
        let f = fixtures::fig4();
        assert_eq!(oracle_expected_transient(&f.model, &f.objective, &f.strategy, BUDGET).unwrap(), Some(rat(6, 5)));
        let f = fixtures::freq19();
        let bp = oracle_breaking_point(&f.model, &f.objective, &f.strategy, 3, Semantics::Worst, BUDGET).unwrap();
        assert_eq!(bp, BreakingPoint::omega(rat(10, 19)));
        let f = fixtures::two_mec();
        let bp = oracle_breaking_point(&f.model, &f.objective, &f.strategy, 3, Semantics::Worst, BUDGET).unwrap();
        assert_eq!(bp, BreakingPoint::omega(rat(3, 5)));
    }
}
