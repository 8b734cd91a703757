//! Synthesis of optimally resilient Player-1 strategies.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::arena::Arena;
use crate::eval::{expected_breaking_point, level_values, worst_case_breaking_point, EvalError};
use crate::graph::{compute_b, mec_decomposition_with, player2_avoid_set, union_mask};
use crate::model::{
    compare_breaking_points, ActionKind, BreakingPoint, Distribution, ExtendedCount, Memory, ObjectiveKind, Objective,
    Sgd, StateId, Strategy, StrategyOwner,
};
use crate::numeric::{Rational, Scalar};
use crate::solvers::{max_reach_sg, min_mean_payoff_mec, ssp_sg_vi, Profiles, SolveOptions, SolverError};
use crate::transforms::{expected_gadget_game, weighted_mec_quotient};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SynthesisError {
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("no breaking level within {k} disturbances")]
    NotWithin { k: usize },
    #[error("precondition violated: {0}")]
    PreconditionViolated(String),
}

impl From<SolverError> for SynthesisError {
    fn from(e: SolverError) -> Self {
        SynthesisError::Eval(EvalError::Solver(e))
    }
}

impl SynthesisError {
    pub fn is_budget(&self) -> bool {
        matches!(self, SynthesisError::Eval(EvalError::Solver(SolverError::BudgetExceeded { .. })) | SynthesisError::NotWithin { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    GadgetSsp,
    IterativeQp,
    ExactEnumeration,
    MecRemoval,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthesisReport<N> {
    pub breaking_point: BreakingPoint<N>,
    pub strategy: Strategy,
    pub method: Method,
    /// Initial value of the violation probability per disturbance budget (worst case).
    pub level_values: Vec<N>,
    pub diagnostics: Vec<String>,
}

/// Player-1 states with a choice and pure memoryless strategies over them.
pub struct PureStrategies<'a> {
    sgd: &'a Sgd,
    states: Vec<StateId>,
    radix: Vec<usize>,
}

impl<'a> PureStrategies<'a> {
    pub fn new(sgd: &'a Sgd) -> Self {
        let states: Vec<StateId> = sgd.player1_states().collect();
        let radix = states.iter().map(|&s| sgd.normal(s).len()).collect();
        PureStrategies { sgd, states, radix }
    }

    pub fn count(&self) -> u64 {
        Profiles::count(&self.radix)
    }

    pub fn check_budget(&self, opts: &SolveOptions) -> Result<(), SolverError> {
        if self.count() > opts.budget {
            return Err(SolverError::BudgetExceeded { limit: opts.budget });
        }
        Ok(())
    }

    pub fn profiles(&self) -> Vec<Vec<usize>> {
        Profiles::new(self.radix.clone()).collect()
    }

    pub fn strategy(&self, profile: &[usize]) -> Strategy {
        Strategy::pure_memoryless(
            StrategyOwner::Player1,
            self.states.iter().zip(profile).map(|(&s, &c)| (s, self.sgd.normal(s)[c].action)),
        )
    }

    pub fn all(&self) -> Vec<Strategy> {
        self.profiles().iter().map(|p| self.strategy(p)).collect()
    }
}

/// Index of the best breaking point; the first one wins ties.
fn arg_best<N: Scalar>(values: &[BreakingPoint<N>]) -> usize {
    let mut best = 0;
    for i in 1..values.len() {
        if compare_breaking_points(&values[i], &values[best]) == Ordering::Greater {
            best = i;
        }
    }
    best
}

/// Strategy maximising the expected breaking point. Exact: pure memoryless strategies are
/// enumerated and evaluated. Float mode solves the gadget game instead.
pub fn synthesize_expected<N: Scalar>(sgd: &Sgd, obj: &Objective, opts: &SolveOptions) -> Result<SynthesisReport<N>, SynthesisError> {
    if !N::EXACT {
        let r = expected_on_gadget_game(sgd, obj, opts)?;
        return Ok(SynthesisReport {
            breaking_point: r.breaking_point.map(|x| N::from_rational(&x.to_rational())),
            strategy: r.strategy,
            method: r.method,
            level_values: Vec::new(),
            diagnostics: r.diagnostics,
        });
    }
    let pure = PureStrategies::new(sgd);
    pure.check_budget(opts)?;
    let strategies = pure.all();
    let values: Vec<BreakingPoint<N>> = strategies
        .par_iter()
        .map(|pi| expected_breaking_point::<N>(sgd, obj, pi, opts).map(|r| r.breaking_point))
        .collect::<Result<_, _>>()?;
    let best = arg_best(&values);
    Ok(SynthesisReport {
        breaking_point: values[best].clone(),
        strategy: strategies[best].clone(),
        method: Method::ExactEnumeration,
        level_values: Vec::new(),
        diagnostics: Vec::new(),
    })
}

fn gadget_strategy(sgd: &Sgd, game: &Sgd, picks: &[usize]) -> Strategy {
    Strategy::pure_memoryless(
        StrategyOwner::Player1,
        sgd.player1_states().map(|s| {
            let a = game.normal(s)[picks[s.0].min(game.normal(s).len() - 1)].action;
            let name = game.action_name(a);
            (s, sgd.action_by_name(name, ActionKind::Normal).expect("gadget keeps action names"))
        }),
    )
}

/// The expected-case algorithm on the gadget game with value iteration.
pub fn expected_on_gadget_game(sgd: &Sgd, obj: &Objective, opts: &SolveOptions) -> Result<SynthesisReport<f64>, SynthesisError> {
    let gg = expected_gadget_game(sgd);
    let mut arena: Arena<f64> = Arena::from_sgd(&gg.game, &gg.costs);
    for s in sgd.player1_states() {
        arena.instant[s.0] = true;
    }
    let targets = obj.target_states(&gg.game).map_err(EvalError::from)?;
    let mask = arena.mask(&targets);
    let t = obj.violation_threshold().to_f64_lossy();
    let mut diagnostics = Vec::new();
    let report = |bp, picks: &[usize], diagnostics: Vec<String>| SynthesisReport {
        breaking_point: bp,
        strategy: gadget_strategy(sgd, &gg.game, picks),
        method: Method::GadgetSsp,
        level_values: Vec::new(),
        diagnostics,
    };
    let ssp = |target: &[bool], a: &Arena<f64>| ssp_sg_vi(a, target, t, opts);
    // Float decisions near the threshold can flip, so every one records its margin.
    let breaks = |v: f64, diagnostics: &mut Vec<String>| {
        diagnostics.push(format!("threshold margin {:.3e}", (v - t).abs()));
        obj.breaks_within(&v, opts.precision)
    };
    if obj.kind == ObjectiveKind::Safety {
        let reach = max_reach_sg(&arena, &mask, opts)?;
        if !breaks(arena.initial_value(&reach.values), &mut diagnostics) {
            return Ok(report(BreakingPoint::unbreakable(), &reach.player1, diagnostics));
        }
        let r = ssp(&mask, &arena)?;
        diagnostics.push(format!("lagrange multiplier {}", r.multiplier));
        return Ok(report(BreakingPoint::finite(r.value), &r.player1, diagnostics));
    }
    let e = player2_avoid_set(&arena, &mask);
    let mecs = mec_decomposition_with(&arena, &e, |_, _| true);
    let mut f = Vec::with_capacity(mecs.len());
    for m in &mecs {
        f.push(min_mean_payoff_mec(&arena, m, false, opts)?);
    }
    let zero: Vec<_> = mecs.iter().zip(&f).filter(|(_, x)| x.is_zero_tol()).map(|(m, _)| m.clone()).collect();
    let zero_mask = union_mask(arena.len(), &zero);
    let reach_zero = max_reach_sg(&arena, &zero_mask, opts)?;
    if breaks(arena.initial_value(&reach_zero.values), &mut diagnostics) {
        let r = ssp(&zero_mask, &arena)?;
        return Ok(report(BreakingPoint::finite(r.value), &r.player1, diagnostics));
    }
    let all = max_reach_sg(&arena, &union_mask(arena.len(), &mecs), opts)?;
    if !breaks(arena.initial_value(&all.values), &mut diagnostics) {
        return Ok(report(BreakingPoint::unbreakable(), &all.player1, diagnostics));
    }
    let q = weighted_mec_quotient(&arena, &mecs, &f).map_err(|e| SynthesisError::PreconditionViolated(e.to_string()))?;
    let mut plus = vec![false; q.quotient.len()];
    plus[q.s_plus] = true;
    let r = ssp(&plus, &q.quotient)?;
    let mut picks = vec![0; arena.len()];
    for s in 0..arena.len() {
        if q.collapsed_of.contains_key(&q.state_map[s]) {
            continue;
        }
        picks[s] = r.player1[q.state_map[s]];
    }
    diagnostics.push("choices inside end components default to the first action".into());
    Ok(report(BreakingPoint::omega(r.value), &picks, diagnostics))
}

trait LossyRational {
    fn to_f64_lossy(&self) -> f64;
}

impl LossyRational for Rational {
    fn to_f64_lossy(&self) -> f64 {
        <Rational as Scalar>::to_f64(self)
    }
}

/// Default cap on the number of levels searched when no bound is given.
pub const DEFAULT_LEVEL_CAP: usize = 64;

/// Strategy maximising the worst-case transient breaking point. Memoryless strategies are
/// enumerated first; when the best of them is finitely breakable, the disturbance levels
/// are solved one by one (Player 1 minimising, the adversary maximising the violation
/// probability), giving a step-counting strategy.
pub fn synthesize_worst_transient(
    sgd: &Sgd,
    obj: &Objective,
    k: Option<usize>,
    opts: &SolveOptions,
) -> Result<SynthesisReport<Rational>, SynthesisError> {
    let pure = PureStrategies::new(sgd);
    pure.check_budget(opts)?;
    let strategies = pure.all();
    let values: Vec<BreakingPoint<Rational>> = strategies
        .par_iter()
        .map(|pi| worst_case_breaking_point::<Rational>(sgd, obj, pi, opts).map(|r| r.breaking_point))
        .collect::<Result<_, _>>()?;
    let best = arg_best(&values);
    if values[best].transient.finite().is_none() {
        return Ok(SynthesisReport {
            breaking_point: values[best].clone(),
            strategy: strategies[best].clone(),
            method: Method::ExactEnumeration,
            level_values: Vec::new(),
            diagnostics: Vec::new(),
        });
    }
    let targets = obj.target_states(sgd).map_err(EvalError::from)?;
    let setups: Vec<(Arena<Rational>, Vec<bool>)> = strategies
        .iter()
        .map(|pi| {
            let mdp = Arena::induced(sgd, pi).map_err(EvalError::from)?;
            let mask = mdp.mask(&targets);
            let bad = match obj.kind {
                ObjectiveKind::Safety => mask,
                ObjectiveKind::Reachability => union_mask(mdp.len(), &compute_b(&mdp, &mask)),
            };
            Ok((mdp, bad))
        })
        .collect::<Result<_, SynthesisError>>()?;
    let cap = k.unwrap_or(DEFAULT_LEVEL_CAP);
    let mut levels: Vec<Vec<Rational>> = Vec::new();
    let mut chosen: Vec<usize> = Vec::new();
    let mut initial = Vec::new();
    let mut diagnostics = Vec::new();
    for i in 0..=cap {
        let prev = levels.last().cloned();
        let per: Vec<Vec<Rational>> = setups
            .par_iter()
            .map(|(mdp, bad)| level_values(mdp, prev.as_deref(), bad, opts).map(|(v, _)| v))
            .collect::<Result<_, _>>()?;
        let n = sgd.num_states();
        let min: Vec<Rational> = (0..n)
            .map(|s| per.iter().map(|v| v[s].clone()).min().expect("at least one strategy"))
            .collect();
        let pick = per.iter().position(|v| *v == min).unwrap_or_else(|| {
            diagnostics.push(format!("no single strategy attains the level-{i} minimum at every state"));
            (0..per.len())
                .min_by(|&a, &b| setups[a].0.initial_value(&per[a]).cmp(&setups[b].0.initial_value(&per[b])))
                .expect("nonempty")
        });
        let v0 = setups[0].0.initial_value(&min);
        initial.push(v0.clone());
        chosen.push(pick);
        let stationary = levels.last().is_some_and(|p| *p == min);
        levels.push(min);
        if obj.breaks(&v0) {
            let strategy = step_counting(sgd, &strategies, &chosen[..i.max(1)], i);
            return Ok(SynthesisReport {
                breaking_point: BreakingPoint::finite(Rational::from_integer(i.into())),
                strategy,
                method: Method::ExactEnumeration,
                level_values: initial,
                diagnostics,
            });
        }
        if stationary {
            diagnostics.push(format!("level values are stationary from level {}", i - 1));
            return Ok(SynthesisReport {
                breaking_point: BreakingPoint::omega(Rational::from_integer(0.into())),
                strategy: step_counting(sgd, &strategies, &chosen, i),
                method: Method::ExactEnumeration,
                level_values: initial,
                diagnostics,
            });
        }
    }
    Err(SynthesisError::NotWithin { k: cap })
}

/// Step-counting strategy playing `chosen[j]` with `j` disturbances left; the bound is the
/// last level index whose choice matters.
fn step_counting(sgd: &Sgd, strategies: &[Strategy], chosen: &[usize], found: usize) -> Strategy {
    let k = found.saturating_sub(1).min(chosen.len() - 1);
    if k == 0 {
        return strategies[chosen[0]].clone();
    }
    let mut rule = BTreeMap::new();
    for (j, &c) in chosen.iter().enumerate().take(k + 1) {
        for s in sgd.player1_states() {
            let d: &Distribution<_> = strategies[c].choice(s, 0).expect("total");
            rule.insert((s, j), d.clone());
        }
    }
    Strategy::new(StrategyOwner::Player1, Memory::StepCounting(k), rule)
}

/// Best memoryless strategy against frequency-based breaking, when no strategy can be
/// broken with finitely many disturbances.
pub fn synthesize_worst_frequency(sgd: &Sgd, obj: &Objective, opts: &SolveOptions) -> Result<SynthesisReport<Rational>, SynthesisError> {
    let pure = PureStrategies::new(sgd);
    pure.check_budget(opts)?;
    let strategies = pure.all();
    let values: Vec<BreakingPoint<Rational>> = strategies
        .par_iter()
        .map(|pi| worst_case_breaking_point::<Rational>(sgd, obj, pi, opts).map(|r| r.breaking_point))
        .collect::<Result<_, _>>()?;
    let best = arg_best(&values);
    if let ExtendedCount::Finite(_) = values[best].transient {
        return Err(SynthesisError::PreconditionViolated(
            "every strategy breaks with finitely many disturbances".into(),
        ));
    }
    Ok(SynthesisReport {
        breaking_point: values[best].clone(),
        strategy: strategies[best].clone(),
        method: Method::MecRemoval,
        level_values: Vec::new(),
        diagnostics: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::model::Frequency;
    use crate::numeric::rat;

    fn opts() -> SolveOptions {
        SolveOptions::default()
    }

    #[test]
    fn fig6_left_needs_memory() {
        let f = fixtures::fig6_left();
        let r = synthesize_worst_transient(&f.model, &f.objective, Some(4), &opts()).unwrap();
        assert_eq!(r.breaking_point, BreakingPoint::finite(rat(2, 1)));
        assert_eq!(r.strategy.memory, Memory::StepCounting(1));
        let s1 = f.model.state_by_name("s1").unwrap();
        let name = |c| f.model.action_name(r.strategy.pure_choice(s1, c).unwrap()).to_string();
        assert_eq!(name(0), "a2");
        assert_eq!(name(1), "a1");
        let back = worst_case_breaking_point::<Rational>(&f.model, &f.objective, &r.strategy, &opts()).unwrap();
        assert_eq!(back.breaking_point, r.breaking_point);
        for w in r.level_values.windows(2) {
            assert!(w[0] <= w[1]);
        }
    }

    #[test]
    fn zero_budget_is_the_undisturbed_game() {
        let f = fixtures::fig6_left();
        let r = synthesize_worst_transient(&f.model, &f.objective, Some(0), &opts());
        assert!(matches!(r, Err(SynthesisError::NotWithin { k: 0 })));
    }

    #[test]
    fn expected_synthesis_on_fixtures() {
        let f = fixtures::fig4();
        let r = synthesize_expected::<Rational>(&f.model, &f.objective, &opts()).unwrap();
        assert_eq!(r.breaking_point, BreakingPoint::finite(rat(6, 5)));
        let fl = synthesize_expected::<f64>(&f.model, &f.objective, &opts()).unwrap();
        assert!((fl.breaking_point.transient.finite().unwrap() - 1.2).abs() < 1e-6);
        let n = fixtures::nodist();
        let r = synthesize_expected::<Rational>(&n.model, &n.objective, &opts()).unwrap();
        assert_eq!(r.breaking_point, BreakingPoint::unbreakable());
        let q = fixtures::freq19();
        let r = synthesize_expected::<Rational>(&q.model, &q.objective, &opts()).unwrap();
        assert_eq!(r.breaking_point, BreakingPoint::omega(rat(10, 19)));
        let fl = synthesize_expected::<f64>(&q.model, &q.objective, &opts()).unwrap();
        assert!(matches!(fl.breaking_point.frequency, Frequency::Value(x) if (x - 10.0 / 19.0).abs() < 1e-6), "{:?} {:?}", fl.breaking_point, fl.diagnostics);
    }

    #[test]
    fn frequency_synthesis() {
        let f = fixtures::two_mec();
        let r = synthesize_worst_frequency(&f.model, &f.objective, &opts()).unwrap();
        assert_eq!(r.breaking_point, BreakingPoint::omega(rat(3, 5)));
        let g = fixtures::fig4();
        assert!(matches!(
            synthesize_worst_frequency(&g.model, &g.objective, &opts()),
            Err(SynthesisError::PreconditionViolated(_))
        ));
    }
}
