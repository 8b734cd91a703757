//! Breaking-point evaluation of a fixed Player-1 strategy, in expectation and in the
//! worst case.

use std::collections::{BTreeMap, BTreeSet};

use crate::arena::{Arena, Choice};
use crate::graph::{compute_b, compute_r, union_mask, Mec};
use crate::model::{
    ActionId, BreakingPoint, Distribution, ExtendedCount, Memory, ModelError, ObjectiveKind, Objective, Player, Sgd,
    StateId, Strategy, StrategyError, StrategyOwner,
};
use crate::numeric::Scalar;
use crate::solvers::{
    max_reach_fixed, max_reach_mdp, min_mean_payoff_mec, reach_strategy, ssp_mcmp_lp, FlowWitness, SolveOptions, SolverError,
};
use crate::transforms::{lift_strategy, memory_product, weighted_mec_quotient};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EvalError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Strategy(#[from] StrategyError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error("precondition violated: {0}")]
    PreconditionViolated(String),
}

/// Which branch of the case analysis produced the result.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CaseTaken {
    /// The violation probability can be exceeded with finitely many disturbances.
    Finite,
    /// The maximal violation probability sits exactly at the threshold and a finite
    /// number of disturbances realises it.
    BoundaryFinite,
    /// The maximal violation probability sits exactly at the threshold but is only
    /// approached in the limit.
    BoundaryOmega,
    /// The strategy cannot be broken.
    Unbreakable,
    /// Only a positive long-run disturbance frequency breaks the strategy.
    Frequency,
}

/// Adversary strategies witnessing the reported value.
#[derive(Debug, Clone, PartialEq)]
pub struct Witness {
    pub player2: Strategy,
    pub disturber: Strategy,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport<N> {
    pub breaking_point: BreakingPoint<N>,
    pub case: CaseTaken,
    /// False when the value is an infimum that no adversary attains.
    pub attained: bool,
    pub witness: Option<Witness>,
    /// Zero-cost trap components (states named in the evaluated model).
    pub b_set: Vec<BTreeSet<String>>,
    /// Components that can only be kept by disturbing.
    pub r_set: Vec<BTreeSet<String>>,
    pub reach_b: Option<N>,
    pub reach_rb: Option<N>,
    /// Initial value of the violation probability per disturbance budget, for worst-case
    /// transient computations.
    pub level_values: Vec<N>,
    pub diagnostics: Vec<String>,
}

impl<N: Scalar> EvalReport<N> {
    fn new(breaking_point: BreakingPoint<N>, case: CaseTaken) -> Self {
        EvalReport {
            breaking_point,
            case,
            attained: true,
            witness: None,
            b_set: Vec::new(),
            r_set: Vec::new(),
            reach_b: None,
            reach_rb: None,
            level_values: Vec::new(),
            diagnostics: Vec::new(),
        }
    }
}

/// Model and memoryless strategy to analyse: step-counting strategies are evaluated as
/// memoryless strategies on the saturating counter product.
pub(crate) fn prepare(sgd: &Sgd, pi: &Strategy) -> Result<(Sgd, Strategy, bool), EvalError> {
    if pi.owner != StrategyOwner::Player1 {
        return Err(StrategyError::WrongOwner("strategy is not a Player-1 strategy".into()).into());
    }
    pi.check(sgd)?;
    match pi.memory {
        Memory::Memoryless => Ok((sgd.clone(), pi.clone(), false)),
        Memory::StepCounting(k) => {
            let product = memory_product(sgd, k, true);
            let lifted = lift_strategy(sgd, &product, pi);
            Ok((product, lifted, true))
        }
    }
}

struct Setting<N> {
    model: Sgd,
    mdp: Arena<N>,
    goal_or_bad: Vec<bool>,
    lifted: bool,
}

fn setting<N: Scalar>(sgd: &Sgd, obj: &Objective, pi: &Strategy) -> Result<(Setting<N>, Strategy), EvalError> {
    let (model, pi, lifted) = prepare(sgd, pi)?;
    let targets = obj.target_states(&model)?;
    let mdp = Arena::induced(&model, &pi)?;
    let goal_or_bad = mdp.mask(&targets);
    Ok((Setting { model, mdp, goal_or_bad, lifted }, pi))
}

fn names<N: Scalar>(mdp: &Arena<N>, mecs: &[Mec]) -> Vec<BTreeSet<String>> {
    mecs.iter()
        .map(|m| m.states.iter().map(|&s| mdp.names[s].clone()).collect())
        .collect()
}

fn initial_reach<N: Scalar>(mdp: &Arena<N>, target: &[bool], opts: &SolveOptions) -> Result<N, EvalError> {
    Ok(mdp.initial_value(&max_reach_mdp(mdp, target, opts)?.values))
}

/// Expected breaking point: the least expected number of disturbances (or, failing that,
/// the least long-run disturbance frequency) with which an adversary violates `obj`.
pub fn expected_breaking_point<N: Scalar>(sgd: &Sgd, obj: &Objective, pi: &Strategy, opts: &SolveOptions) -> Result<EvalReport<N>, EvalError> {
    let (st, _) = setting::<N>(sgd, obj, pi)?;
    let t = N::from_rational(&obj.violation_threshold());
    let mdp = &st.mdp;
    let (bad, b, r) = match obj.kind {
        ObjectiveKind::Safety => (st.goal_or_bad.clone(), Vec::new(), Vec::new()),
        ObjectiveKind::Reachability => {
            let b = compute_b(mdp, &st.goal_or_bad);
            let r = compute_r(mdp, &st.goal_or_bad, &b);
            (union_mask(mdp.len(), &b), b, r)
        }
    };
    let reach_b = initial_reach(mdp, &bad, opts)?;
    let mut report;
    if obj.breaks_within(&reach_b, opts.precision) {
        let (value, flow) = ssp_mcmp_lp(mdp, &bad, &t, opts)?;
        report = EvalReport::new(BreakingPoint::finite(value), CaseTaken::Finite);
        report.attained = obj.strict;
        if !st.lifted {
            report.witness = Some(flow_witness(&st.model, mdp, &flow));
        }
    } else if obj.kind == ObjectiveKind::Safety {
        report = EvalReport::new(BreakingPoint::unbreakable(), CaseTaken::Unbreakable);
    } else {
        let mut comps: Vec<Mec> = b.clone();
        comps.extend(r.iter().cloned());
        let rb = union_mask(mdp.len(), &comps);
        let reach_rb = initial_reach(mdp, &rb, opts)?;
        if !obj.breaks_within(&reach_rb, opts.precision) {
            report = EvalReport::new(BreakingPoint::unbreakable(), CaseTaken::Unbreakable);
        } else {
            let mut f = vec![N::zero(); b.len()];
            for m in &r {
                f.push(min_mean_payoff_mec(mdp, m, true, opts)?);
            }
            let q = weighted_mec_quotient(mdp, &comps, &f).map_err(|e| EvalError::PreconditionViolated(e.to_string()))?;
            let mut plus = vec![false; q.quotient.len()];
            plus[q.s_plus] = true;
            let (value, _) = ssp_mcmp_lp(&q.quotient, &plus, &t, opts)?;
            report = EvalReport::new(BreakingPoint::omega(value), CaseTaken::Frequency);
            report.attained = obj.strict;
        }
        report.reach_rb = Some(reach_rb);
    }
    report.reach_b = Some(reach_b);
    report.b_set = names(mdp, &b);
    report.r_set = names(mdp, &r);
    if st.lifted {
        report.diagnostics.push("evaluated on the counter product of a step-counting strategy".into());
    }
    Ok(report)
}

fn flow_witness<N: Scalar>(sgd: &Sgd, mdp: &Arena<N>, flow: &FlowWitness<N>) -> Witness {
    let mut p2 = BTreeMap::new();
    let mut dist = BTreeMap::new();
    for s in sgd.states() {
        let cs = &mdp.choices[s.0];
        if cs.is_empty() {
            continue;
        }
        // Giving up is folded into the first (cost-free) choice.
        let mut pairs: Vec<(ActionId, crate::numeric::Rational)> = Vec::new();
        for (ci, c) in cs.iter().enumerate() {
            let mut p = flow.choice_prob[s.0][ci].to_rational();
            if ci == 0 {
                p += flow.give_up[s.0].to_rational();
            }
            if p > crate::numeric::Rational::from_integer(0.into()) {
                pairs.push((c.action, p));
            }
        }
        let total = pairs.iter().fold(crate::numeric::Rational::from_integer(0.into()), |a, (_, p)| a + p);
        let d = Distribution::from_pairs(pairs.into_iter().map(|(a, p)| (a, p / &total)));
        match sgd.owner(s) {
            Player::One => dist.insert(s, d),
            Player::Two => p2.insert(s, d),
        };
    }
    Witness {
        player2: Strategy::memoryless(StrategyOwner::Player2, p2),
        disturber: Strategy::memoryless(StrategyOwner::Disturber, dist),
    }
}

/// Outcome of the iterative transient LP.
#[derive(Debug, Clone, PartialEq)]
pub enum TransientOutcome<N> {
    /// Smallest budget that breaks, with the per-level values of every state.
    Found { budget: usize, levels: Vec<Vec<N>> },
    NotWithin { bound: usize, levels: Vec<Vec<N>> },
}

impl<N> TransientOutcome<N> {
    pub fn levels(&self) -> &[Vec<N>] {
        match self {
            TransientOutcome::Found { levels, .. } | TransientOutcome::NotWithin { levels, .. } => levels,
        }
    }
}

/// Arena of one disturbance level: undisturbed choices stay on the level, disturbance
/// choices lead to copies of the states whose values are those of the previous level.
/// Level 0 has no disturbance choices.
pub fn level_arena<N: Scalar>(mdp: &Arena<N>, previous: Option<&[N]>, bad: &[bool]) -> (Arena<N>, Vec<Option<N>>) {
    let n = mdp.len();
    let mut a = mdp.clone();
    let mut fixed: Vec<Option<N>> = bad.iter().map(|&b| b.then(N::one)).collect();
    match previous {
        None => {
            for cs in a.choices.iter_mut() {
                cs.retain(|c| !c.disturbance);
            }
        }
        Some(prev) => {
            for cs in a.choices.iter_mut() {
                for c in cs.iter_mut().filter(|c| c.disturbance) {
                    c.succ = c.succ.iter().map(|(t, p)| (t + n, p.clone())).collect();
                }
            }
            for s in 0..n {
                a.owner.push(mdp.owner[s]);
                a.names.push(format!("{}'", mdp.names[s]));
                a.origin.push(mdp.origin[s]);
                a.instant.push(mdp.instant[s]);
                a.choices.push(Vec::new());
                fixed.push(Some(prev[s].clone()));
            }
        }
    }
    (a, fixed)
}

/// Values of the level-`i` LP given the level-`i-1` values.
pub fn level_values<N: Scalar>(mdp: &Arena<N>, previous: Option<&[N]>, bad: &[bool], opts: &SolveOptions) -> Result<(Vec<N>, Vec<usize>), EvalError> {
    let (a, fixed) = level_arena(mdp, previous, bad);
    let v = max_reach_fixed(&a, &fixed, opts)?.values;
    let pick = reach_strategy(&a, &fixed, &v);
    let n = mdp.len();
    Ok((v[..n].to_vec(), pick[..n].to_vec()))
}

/// Smallest `i <= k` whose level-`i` LP value at the initial distribution breaks `obj`.
pub fn transient_iterative_lp<N: Scalar>(
    mdp: &Arena<N>,
    bad: &[bool],
    obj: &Objective,
    k: usize,
    opts: &SolveOptions,
) -> Result<TransientOutcome<N>, EvalError> {
    Ok(iterate_levels(mdp, bad, obj, k, opts)?.0)
}

type Picks = Vec<Vec<usize>>;

fn iterate_levels<N: Scalar>(
    mdp: &Arena<N>,
    bad: &[bool],
    obj: &Objective,
    k: usize,
    opts: &SolveOptions,
) -> Result<(TransientOutcome<N>, Picks), EvalError> {
    let mut levels: Vec<Vec<N>> = Vec::new();
    let mut picks = Vec::new();
    for i in 0..=k {
        let (v, pick) = level_values(mdp, levels.last().map(|v| v.as_slice()), bad, opts)?;
        let breaks = obj.breaks_within(&mdp.initial_value(&v), opts.precision);
        levels.push(v);
        picks.push(pick);
        if breaks {
            return Ok((TransientOutcome::Found { budget: i, levels }, picks));
        }
    }
    Ok((TransientOutcome::NotWithin { bound: k, levels }, picks))
}

/// Number of value-iteration sweeps from the indicator of `bad` until the initial value
/// breaks `obj`, or `None` within `cap` sweeps.
pub fn sweep_bound<N: Scalar>(mdp: &Arena<N>, bad: &[bool], obj: &Objective, cap: usize) -> Option<usize> {
    let mut x: Vec<N> = bad.iter().map(|&b| if b { N::one() } else { N::zero() }).collect();
    for n in 0..=cap {
        if obj.breaks(&mdp.initial_value(&x)) {
            return Some(n);
        }
        x = (0..mdp.len())
            .map(|s| {
                if bad[s] {
                    N::one()
                } else {
                    mdp.choices[s]
                        .iter()
                        .map(|c| expect(c, &x))
                        .fold(N::zero(), |a, b| a.max_of(b))
                }
            })
            .collect();
    }
    None
}

fn expect<N: Scalar>(c: &Choice<N>, x: &[N]) -> N {
    c.succ.iter().fold(N::zero(), |acc, (t, p)| acc + p.clone() * x[*t].clone())
}

/// Default cap on the number of sweeps used to bound the transient search.
pub const SWEEP_CAP: usize = 10_000;

/// Worst-case breaking point: the least number of disturbances with which an adversary
/// violates `obj` almost surely bounded, or else the least long-run frequency.
pub fn worst_case_breaking_point<N: Scalar>(sgd: &Sgd, obj: &Objective, pi: &Strategy, opts: &SolveOptions) -> Result<EvalReport<N>, EvalError> {
    let (st, _) = setting::<N>(sgd, obj, pi)?;
    let t = N::from_rational(&obj.violation_threshold());
    let mdp = &st.mdp;
    let (bad, b, r) = match obj.kind {
        ObjectiveKind::Safety => (st.goal_or_bad.clone(), Vec::new(), Vec::new()),
        ObjectiveKind::Reachability => {
            let b = compute_b(mdp, &st.goal_or_bad);
            let r = compute_r(mdp, &st.goal_or_bad, &b);
            (union_mask(mdp.len(), &b), b, r)
        }
    };
    let reach_b = initial_reach(mdp, &bad, opts)?;
    let above = reach_b.cmp_tol(&t) == std::cmp::Ordering::Greater;
    let at = reach_b.cmp_tol(&t) == std::cmp::Ordering::Equal;
    let mut report;
    if above || (at && obj.strict) {
        let (bound, exact_bound) = if above {
            match sweep_bound(mdp, &bad, obj, SWEEP_CAP) {
                Some(k) => (k, true),
                None => (SWEEP_CAP, false),
            }
        } else {
            (mdp.choices.iter().flatten().filter(|c| c.disturbance).count(), true)
        };
        let (outcome, picks) = iterate_levels(mdp, &bad, obj, bound, opts)?;
        let levels: Vec<N> = outcome.levels().iter().map(|v| mdp.initial_value(v)).collect();
        match outcome {
            TransientOutcome::Found { budget, .. } => {
                let case = if above { CaseTaken::Finite } else { CaseTaken::BoundaryFinite };
                report = EvalReport::new(BreakingPoint::finite(N::from_usize(budget)), case);
                if !st.lifted {
                    report.witness = Some(level_witness(&st.model, mdp, &picks));
                }
            }
            TransientOutcome::NotWithin { bound, .. } => {
                report = EvalReport::new(BreakingPoint::omega(N::zero()), CaseTaken::BoundaryOmega);
                if !exact_bound {
                    report.diagnostics.push(format!("no finite breaking point within {bound} disturbances"));
                }
            }
        }
        report.level_values = levels;
    } else if obj.kind == ObjectiveKind::Safety {
        report = EvalReport::new(BreakingPoint::unbreakable(), CaseTaken::Unbreakable);
    } else {
        let mut comps = b.clone();
        comps.extend(r.iter().cloned());
        let reach_rb = initial_reach(mdp, &union_mask(mdp.len(), &comps), opts)?;
        if !obj.breaks_within(&reach_rb, opts.precision) {
            report = EvalReport::new(BreakingPoint::unbreakable(), CaseTaken::Unbreakable);
        } else {
            let (f, witness) = frequency_with_witness(&st.model, mdp, &b, &r, obj, opts)?;
            report = EvalReport::new(BreakingPoint::omega(f), CaseTaken::Frequency);
            if !st.lifted {
                report.witness = Some(witness);
            }
        }
        report.reach_rb = Some(reach_rb);
    }
    report.reach_b = Some(reach_b);
    report.b_set = names(mdp, &b);
    report.r_set = names(mdp, &r);
    if st.lifted {
        report.diagnostics.push("evaluated on the counter product of a step-counting strategy".into());
    }
    Ok(report)
}

/// Step-counting adversary following the level strategies: with `i` disturbances left it
/// plays the level-`i` choice.
fn level_witness<N: Scalar>(sgd: &Sgd, mdp: &Arena<N>, picks: &[Vec<usize>]) -> Witness {
    let k = picks.len() - 1;
    let mut p2 = BTreeMap::new();
    let mut dist = BTreeMap::new();
    for (i, pick) in picks.iter().enumerate() {
        for s in sgd.states() {
            let Some(c) = mdp.choices[s.0].get(pick[s.0]) else { continue };
            match sgd.owner(s) {
                Player::One => {
                    dist.insert((s, i), Distribution::dirac(c.action));
                }
                Player::Two => {
                    p2.insert((s, i), Distribution::dirac(c.action));
                }
            }
        }
    }
    Witness {
        player2: Strategy::new(StrategyOwner::Player2, Memory::StepCounting(k), p2),
        disturber: Strategy::new(StrategyOwner::Disturber, Memory::StepCounting(k), dist),
    }
}

/// Least long-run disturbance frequency that breaks `obj` in the worst case: components
/// are removed in order of decreasing frequency (ties: smaller state set first) until the
/// rest can no longer be reached with a breaking probability.
pub fn worst_case_frequency<N: Scalar>(
    mdp: &Arena<N>,
    b: &[Mec],
    r: &[Mec],
    obj: &Objective,
    opts: &SolveOptions,
) -> Result<N, EvalError> {
    Ok(removal_loop(mdp, b, r, obj, opts)?.0)
}

fn removal_loop<N: Scalar>(
    mdp: &Arena<N>,
    b: &[Mec],
    r: &[Mec],
    obj: &Objective,
    opts: &SolveOptions,
) -> Result<(N, Vec<(Mec, N)>), EvalError> {
    let mut comps: Vec<(Mec, N)> = b.iter().map(|m| (m.clone(), N::zero())).collect();
    for m in r {
        comps.push((m.clone(), min_mean_payoff_mec(mdp, m, true, opts)?));
    }
    let all: Vec<Mec> = comps.iter().map(|(m, _)| m.clone()).collect();
    if !obj.breaks_within(&initial_reach(mdp, &union_mask(mdp.len(), &all), opts)?, opts.precision) {
        return Err(EvalError::PreconditionViolated("components cannot be reached with a breaking probability".into()));
    }
    if obj.breaks_within(&initial_reach(mdp, &union_mask(mdp.len(), b), opts)?, opts.precision) {
        return Err(EvalError::PreconditionViolated("finitely many disturbances already break".into()));
    }
    loop {
        let (idx, _) = comps
            .iter()
            .enumerate()
            .max_by(|(_, (ma, fa)), (_, (mb, fb))| fa.cmp_tol(fb).then_with(|| mb.states.cmp(&ma.states)))
            .expect("nonempty while breaking");
        let (removed, f) = comps.remove(idx);
        let rest: Vec<Mec> = comps.iter().map(|(m, _)| m.clone()).collect();
        if !obj.breaks_within(&initial_reach(mdp, &union_mask(mdp.len(), &rest), opts)?, opts.precision) {
            comps.push((removed, f.clone()));
            return Ok((f, comps));
        }
    }
}

fn frequency_with_witness<N: Scalar>(
    sgd: &Sgd,
    mdp: &Arena<N>,
    b: &[Mec],
    r: &[Mec],
    obj: &Objective,
    opts: &SolveOptions,
) -> Result<(N, Witness), EvalError> {
    let (f, kept) = removal_loop(mdp, b, r, obj, opts)?;
    let target: Vec<Mec> = kept
        .iter()
        .filter(|(_, g)| g.cmp_tol(&f) != std::cmp::Ordering::Greater)
        .map(|(m, _)| m.clone())
        .collect();
    let mask = union_mask(mdp.len(), &target);
    let fixed: Vec<Option<N>> = mask.iter().map(|&x| x.then(N::one)).collect();
    let values = max_reach_fixed(mdp, &fixed, opts)?.values;
    let pick = reach_strategy(mdp, &fixed, &values);
    let mut choice: BTreeMap<usize, Distribution<ActionId>> = BTreeMap::new();
    for s in 0..mdp.len() {
        if let Some(c) = mdp.choices[s].get(pick[s]) {
            choice.insert(s, Distribution::dirac(c.action));
        }
    }
    for m in &target {
        let (_, occ) = crate::solvers::mdp_mec_mean_payoff(mdp, m, opts)?;
        for &s in &m.states {
            let weights: Vec<(ActionId, crate::numeric::Rational)> = occ
                .iter()
                .filter(|((u, _), w)| *u == s && w.is_pos_tol())
                .map(|((_, ci), w)| (mdp.choices[s][*ci].action, w.to_rational()))
                .collect();
            let total = weights.iter().fold(crate::numeric::Rational::from_integer(0.into()), |a, (_, w)| a + w);
            let d = if weights.is_empty() {
                // Transient inside the optimal stay strategy: any kept choice.
                Distribution::dirac(mdp.choices[s][m.choices[&s][0]].action)
            } else {
                Distribution::from_pairs(weights.into_iter().map(|(a, w)| (a, w / &total)))
            };
            choice.insert(s, d);
        }
    }
    let mut p2 = BTreeMap::new();
    let mut dist = BTreeMap::new();
    for (s, d) in choice {
        match sgd.owner(StateId(s)) {
            Player::One => dist.insert(StateId(s), d),
            Player::Two => p2.insert(StateId(s), d),
        };
    }
    Ok((
        f,
        Witness {
            player2: Strategy::memoryless(StrategyOwner::Player2, p2),
            disturber: Strategy::memoryless(StrategyOwner::Disturber, dist),
        },
    ))
}

/// The transient part as an extended count, for dominance checks.
pub fn transient_of<N: Scalar>(r: &EvalReport<N>) -> &ExtendedCount<N> {
    &r.breaking_point.transient
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::induced_mc;
    use crate::fixtures;
    use crate::model::Frequency;
    use crate::numeric::{rat, Rational};

    fn opts() -> SolveOptions {
        SolveOptions::default()
    }

    #[test]
    fn fig4_worst_case_is_two() {
        let f = fixtures::fig4();
        let r: EvalReport<Rational> = worst_case_breaking_point(&f.model, &f.objective, &f.strategy, &opts()).unwrap();
        assert_eq!(r.breaking_point, BreakingPoint::finite(rat(2, 1)));
        assert_eq!(r.case, CaseTaken::Finite);
        for w in r.level_values.windows(2) {
            assert!(w[0] <= w[1]);
        }
        // The witness breaks the strategy.
        let w = r.witness.unwrap();
        let c = induced_mc(&f.model, &f.strategy, &w.player2, &w.disturber).unwrap();
        let g = f.model.state_by_name("G").unwrap();
        assert!(f.objective.breaks(&(rat(1, 1) - c.initial_value(&c.reach_probability(|s| s == g)))));
        assert!(c.max_disturbances().unwrap() <= 2);
    }

    #[test]
    fn fig4_expected_is_six_fifths() {
        let f = fixtures::fig4();
        let r: EvalReport<Rational> = expected_breaking_point(&f.model, &f.objective, &f.strategy, &opts()).unwrap();
        assert_eq!(r.breaking_point, BreakingPoint::finite(rat(6, 5)));
        let fl: EvalReport<f64> = expected_breaking_point(&f.model, &f.objective, &f.strategy, &opts()).unwrap();
        assert!((fl.breaking_point.transient.finite().unwrap() - 1.2).abs() < 1e-9);
    }

    #[test]
    fn fig6_right_worst_case_is_three() {
        let f = fixtures::fig6_right();
        let r: EvalReport<Rational> = worst_case_breaking_point(&f.model, &f.objective, &f.strategy, &opts()).unwrap();
        assert_eq!(r.breaking_point, BreakingPoint::finite(rat(3, 1)));
    }

    #[test]
    fn nodist_is_unbreakable() {
        let f = fixtures::nodist();
        let w: EvalReport<Rational> = worst_case_breaking_point(&f.model, &f.objective, &f.strategy, &opts()).unwrap();
        let e: EvalReport<Rational> = expected_breaking_point(&f.model, &f.objective, &f.strategy, &opts()).unwrap();
        assert_eq!(w.breaking_point, BreakingPoint::unbreakable());
        assert_eq!(e.breaking_point, BreakingPoint::unbreakable());
    }

    #[test]
    fn freq19_frequency() {
        let f = fixtures::freq19();
        let w: EvalReport<Rational> = worst_case_breaking_point(&f.model, &f.objective, &f.strategy, &opts()).unwrap();
        assert_eq!(w.breaking_point, BreakingPoint::omega(rat(10, 19)));
        assert_eq!(w.case, CaseTaken::Frequency);
        let e: EvalReport<Rational> = expected_breaking_point(&f.model, &f.objective, &f.strategy, &opts()).unwrap();
        assert_eq!(e.breaking_point, BreakingPoint::omega(rat(10, 19)));
        let wit = w.witness.unwrap();
        let c = induced_mc(&f.model, &f.strategy, &wit.player2, &wit.disturber).unwrap();
        assert_eq!(c.long_run_cost(), rat(10, 19));
    }

    #[test]
    fn two_component_removal() {
        let f = fixtures::two_mec();
        let w: EvalReport<Rational> = worst_case_breaking_point(&f.model, &f.objective, &f.strategy, &opts()).unwrap();
        assert_eq!(w.breaking_point.frequency, Frequency::Value(rat(3, 5)));
        assert_eq!(w.r_set.len(), 2);
    }

    #[test]
    fn step_counting_strategies_are_evaluated_on_the_product() {
        let f = fixtures::fig6_left();
        let memoryless: EvalReport<Rational> = worst_case_breaking_point(&f.model, &f.objective, &f.strategy, &opts()).unwrap();
        assert_eq!(memoryless.breaking_point, BreakingPoint::finite(rat(1, 1)));
    }
}
