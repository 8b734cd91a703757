//! End-to-end acceptance run. Prints one PASS/FAIL line per criterion and exits nonzero
//! when any criterion fails.

use std::cmp::Ordering;
use std::process::Command;
use std::time::{Duration, Instant};

use rayon::prelude::*;

use resil_cli::run_args;
use resil_core::arena::Arena;
use resil_core::eval::{expected_breaking_point, transient_iterative_lp, worst_case_breaking_point, EvalReport, TransientOutcome};
use resil_core::fixtures;
use resil_core::graph::{compute_b, union_mask};
use resil_core::io::{parse_result, ResultDocument};
use resil_core::model::{
    compare_breaking_points, BreakingPoint, ExtendedCount, Frequency, Memory, Objective, ObjectiveKind, Player, Sgd, Strategy,
};
use resil_core::numeric::{rat, Rational, Scalar};
use resil_core::oracle::{oracle_breaking_point, oracle_enumerate, pure_adversary_outcomes, Semantics};
use resil_core::solvers::SolveOptions;
use resil_core::synthesis::PureStrategies;
use resil_core::verify::{check_lemma_suite, generate, random_objective, RandomModelSpec, BAD_LABEL, DEFAULT_TRIALS};

const RANDOM_MODELS: u64 = 200;
const LEMMA_MODELS: u64 = 50;
const KMAX: usize = 6;
const BUDGET: u64 = 1_000_000;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome { passed, detail: detail.into() }
}

fn timed(limit: Duration, f: impl FnOnce() -> Outcome) -> Outcome {
    let start = Instant::now();
    let mut o = f();
    let took = start.elapsed();
    if took > limit {
        o.passed = false;
        o.detail = format!("{}; took {:.2?}, limit {:.0?}", o.detail, took, limit);
    } else {
        o.detail = format!("{} ({:.2?})", o.detail, took);
    }
    o
}

fn cli(args: &[&str]) -> Result<ResultDocument, String> {
    let out = run_args(std::iter::once("resil").chain(args.iter().copied()));
    if out.code != 0 {
        return Err(format!("exit {}: {}", out.code, out.stderr.unwrap_or_default()));
    }
    parse_result(&out.stdout.unwrap_or_default()).map_err(|e| e.to_string())
}

fn fig4_worst() -> Outcome {
    match cli(&["evaluate", "--model", "FIG4", "--strategy", "all-a", "--semantics", "worst", "--objective", "reach:G:>2/5"]) {
        Ok(doc) => outcome(
            doc.transient == "2" && doc.frequency == "0",
            format!("transient {} frequency {}", doc.transient, doc.frequency),
        ),
        Err(e) => outcome(false, e),
    }
}

/// Violation probability and expected disturbance count of a memoryless pure `pi` against
/// an adversary disturbing each disturbance state with the given probability. Player-2
/// states play their first action.
fn randomized_disturber(sgd: &Sgd, obj: &Objective, pi: &Strategy, disturb: &[(usize, f64)]) -> (f64, f64) {
    let target = sgd.label(&obj.label).cloned().unwrap_or_default();
    let n = sgd.num_states();
    let mut moves: Vec<Vec<(usize, f64, f64)>> = vec![Vec::new(); n];
    for s in sgd.states() {
        if target.contains(&s) {
            continue;
        }
        let q = disturb.iter().find(|(d, _)| *d == s.0).map_or(0.0, |(_, q)| *q);
        let normal = match sgd.owner(s) {
            Player::One => pi.choice(s, 0).and_then(|d| d.iter().next().map(|(a, _)| *a)).expect("pure strategy"),
            Player::Two => sgd.normal(s)[0].action,
        };
        for (t, p) in sgd.transition(s, normal).expect("action exists").iter() {
            moves[s.0].push((t.0, (1.0 - q) * p.to_f64(), 0.0));
        }
        if q > 0.0 {
            let d = &sgd.disturbances(s)[0];
            for (t, p) in d.dist.iter() {
                moves[s.0].push((t.0, q * p.to_f64(), q));
            }
        }
    }
    let mut reach = vec![0.0; n];
    let mut cost = vec![0.0; n];
    for s in &target {
        reach[s.0] = 1.0;
    }
    for _ in 0..200 {
        for s in 0..n {
            if target.iter().any(|t| t.0 == s) {
                continue;
            }
            let mut r = 0.0;
            let mut c = 0.0;
            let mut local = 0.0;
            for &(t, p, q) in &moves[s] {
                r += p * reach[t];
                c += p * cost[t];
                local = q;
            }
            reach[s] = r;
            cost[s] = c + local;
        }
    }
    let init = |v: &[f64]| sgd.initial().iter().map(|(s, p)| p.to_f64() * v[s.0]).sum::<f64>();
    let violation = match obj.kind {
        ObjectiveKind::Reachability => 1.0 - init(&reach),
        ObjectiveKind::Safety => init(&reach),
    };
    (violation, init(&cost))
}

/// Least expected disturbance count over stationary randomized disturbers with two
/// parameters: a grid over the second, bisection over the first.
fn grid_search_oracle(sgd: &Sgd, obj: &Objective, pi: &Strategy) -> f64 {
    let params: Vec<usize> = sgd.player1_states().filter(|s| !sgd.disturbances(*s).is_empty()).map(|s| s.0).collect();
    assert_eq!(params.len(), 2, "two disturbance states expected");
    let t = 1.0 - obj.threshold.to_f64();
    let mut best = f64::INFINITY;
    for j in 0..=1000 {
        let y = j as f64 / 1000.0;
        let at = |x: f64| randomized_disturber(sgd, obj, pi, &[(params[0], x), (params[1], y)]);
        if at(1.0).0 < t - 1e-12 {
            continue;
        }
        let (mut lo, mut hi) = (0.0, 1.0);
        for _ in 0..60 {
            let mid = (lo + hi) / 2.0;
            if at(mid).0 >= t - 1e-12 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        best = best.min(at(hi).1);
    }
    best
}

fn fig4_expected() -> Outcome {
    let f = fixtures::fig4();
    let opts = SolveOptions::default();
    let exact = match expected_breaking_point::<Rational>(&f.model, &f.objective, &f.strategy, &opts) {
        Ok(r) => r.breaking_point,
        Err(e) => return outcome(false, e.to_string()),
    };
    let lp_oracle = oracle_breaking_point(&f.model, &f.objective, &f.strategy, KMAX, Semantics::Expected, BUDGET).ok();
    let Some(value) = exact.transient.finite().cloned() else {
        return outcome(false, format!("expected a finite value, got {exact:?}"));
    };
    let grid = grid_search_oracle(&f.model, &f.objective, &f.strategy);
    let cli_value = cli(&["evaluate", "--model", "FIG4", "--strategy", "all-a", "--semantics", "expected"]).map(|d| d.transient);
    let passed = (value.to_f64() - grid).abs() <= 1e-3
        && lp_oracle.as_ref() == Some(&exact)
        && value == rat(6, 5)
        && cli_value.as_deref() == Ok("6/5");
    outcome(
        passed,
        format!(
            "computed {} vs stated 1.1; grid-search minimum {grid:.6}; exact enumeration {:?}",
            value,
            lp_oracle.and_then(|b| b.transient.finite().cloned()).map(|x| x.to_string())
        ),
    )
}

fn freq19() -> Outcome {
    match cli(&["evaluate", "--model", "FREQ19", "--strategy", "all-a", "--semantics", "worst"]) {
        Ok(doc) => outcome(
            doc.transient == "omega" && doc.frequency == "10/19",
            format!("transient {} frequency {}", doc.transient, doc.frequency),
        ),
        Err(e) => outcome(false, e),
    }
}

fn fig6_left() -> Outcome {
    let doc = match cli(&["synthesize", "--model", "FIG6L", "--semantics", "worst", "--k", "4"]) {
        Ok(d) => d,
        Err(e) => return outcome(false, e),
    };
    let counting = doc.strategy.as_ref().is_some_and(|s| s.keys().any(|k| k.starts_with('(')));
    let f = fixtures::fig6_left();
    let opts = SolveOptions::default();
    let memoryless: Vec<BreakingPoint<Rational>> = PureStrategies::new(&f.model)
        .all()
        .iter()
        .map(|pi| worst_case_breaking_point::<Rational>(&f.model, &f.objective, pi, &opts).unwrap().breaking_point)
        .collect();
    let two = BreakingPoint::finite(rat(2, 1));
    let none_reaches = memoryless.iter().all(|b| compare_breaking_points(b, &two) == Ordering::Less);
    let brute = oracle_enumerate(&f.model, &f.objective, KMAX, 0, Semantics::Worst, BUDGET).map(|(b, _)| b);
    let brute_below = brute.as_ref().is_ok_and(|b| compare_breaking_points(b, &two) == Ordering::Less);
    outcome(
        doc.transient == "2" && counting && none_reaches && brute_below,
        format!(
            "synthesized transient {} with step-counting strategy: {counting}; {} memoryless strategies all below 2: {}",
            doc.transient,
            memoryless.len(),
            none_reaches && brute_below
        ),
    )
}

fn fig6_right() -> Outcome {
    let doc = match cli(&["evaluate", "--model", "FIG6R", "--strategy", "all-a", "--semantics", "worst"]) {
        Ok(d) => d,
        Err(e) => return outcome(false, e),
    };
    let f = fixtures::fig6_right();
    let outcomes = pure_adversary_outcomes(&f.model, &f.objective, &f.strategy, BUDGET).unwrap();
    let small_breakers = outcomes
        .iter()
        .filter(|o| f.objective.breaks(&o.violation) && o.max_disturbances.is_some_and(|m| m <= 3))
        .count();
    outcome(
        doc.transient == "3" && small_breakers == 0,
        format!(
            "transient {}; {} memoryless disturbers examined, {small_breakers} break with at most 3 disturbances",
            doc.transient,
            outcomes.len()
        ),
    )
}

/// Violations of the structural invariants seen in one report.
fn invariant_violations<N: Scalar>(what: &str, obj: &Objective, r: &EvalReport<N>) -> Vec<String> {
    let mut v = Vec::new();
    if r.level_values.windows(2).any(|w| w[1].cmp_tol(&w[0]) == Ordering::Less) {
        v.push(format!("{what}: level values decrease"));
    }
    if !r.breaking_point.is_coherent() {
        v.push(format!("{what}: finite transient with positive frequency"));
    }
    if obj.kind == ObjectiveKind::Safety {
        if let Frequency::Value(f) = &r.breaking_point.frequency {
            if !f.is_zero_tol() {
                v.push(format!("{what}: safety objective with positive frequency"));
            }
        }
    }
    v
}

#[derive(Default)]
struct ModelCheck {
    mismatches: Vec<String>,
    invariant: Vec<String>,
    evaluations: usize,
}

fn check_random_model(seed: u64) -> ModelCheck {
    let sgd = generate(&RandomModelSpec::with_seed(seed));
    let reach = random_objective(seed);
    let safety = Objective::safety(BAD_LABEL, reach.threshold.clone(), reach.strict);
    let opts = SolveOptions::default();
    let mut out = ModelCheck::default();
    let strategies = PureStrategies::new(&sgd).all();
    for obj in [&reach, &safety] {
        let mut best: Option<BreakingPoint<Rational>> = None;
        for pi in &strategies {
            let tag = format!("seed {seed} {obj} {}", describe(&sgd, pi));
            out.evaluations += 1;
            let worst = match worst_case_breaking_point::<Rational>(&sgd, obj, pi, &opts) {
                Ok(r) => r,
                Err(e) => {
                    out.mismatches.push(format!("{tag}: worst-case evaluation failed: {e}"));
                    continue;
                }
            };
            let expected = match expected_breaking_point::<Rational>(&sgd, obj, pi, &opts) {
                Ok(r) => r,
                Err(e) => {
                    out.mismatches.push(format!("{tag}: expected evaluation failed: {e}"));
                    continue;
                }
            };
            out.invariant.extend(invariant_violations(&tag, obj, &worst));
            out.invariant.extend(invariant_violations(&tag, obj, &expected));
            if expected.breaking_point.transient.cmp_ext(&worst.breaking_point.transient) == Ordering::Greater {
                out.invariant.push(format!("{tag}: expected transient above worst-case transient"));
            }

            let oracle_worst = oracle_breaking_point(&sgd, obj, pi, KMAX, Semantics::Worst, BUDGET).unwrap();
            let beyond = worst.breaking_point.transient.finite().is_some_and(|x| *x > rat(KMAX as i64, 1));
            if beyond {
                if oracle_worst.transient.finite().is_some() {
                    out.mismatches.push(format!("{tag}: oracle {oracle_worst:?} but evaluation {:?}", worst.breaking_point));
                }
            } else if oracle_worst != worst.breaking_point {
                out.mismatches.push(format!("{tag}: worst oracle {oracle_worst:?} vs {:?}", worst.breaking_point));
            }
            if let Some(msg) = direct_lp_mismatch(&sgd, obj, pi, &oracle_worst, &opts) {
                out.mismatches.push(format!("{tag}: {msg}"));
            }

            let oracle_expected = oracle_breaking_point(&sgd, obj, pi, KMAX, Semantics::Expected, BUDGET).unwrap();
            if oracle_expected != expected.breaking_point {
                out.mismatches.push(format!("{tag}: expected oracle {oracle_expected:?} vs {:?}", expected.breaking_point));
            }
            match expected_breaking_point::<f64>(&sgd, obj, pi, &opts) {
                Ok(fl) if close(&fl.breaking_point, &expected.breaking_point) => {}
                Ok(fl) => out.mismatches.push(format!("{tag}: float {:?} vs exact {:?}", fl.breaking_point, expected.breaking_point)),
                Err(e) => out.mismatches.push(format!("{tag}: float evaluation failed: {e}")),
            }
            if !beyond && best.as_ref().is_none_or(|b| compare_breaking_points(&worst.breaking_point, b) == Ordering::Greater) {
                best = Some(worst.breaking_point.clone());
            }
        }
        let all_within = strategies.len() == 1
            || best.as_ref().is_some_and(|b| b.transient.finite().is_none_or(|x| *x <= rat(KMAX as i64, 1)));
        if all_within {
            let (brute, _) = oracle_enumerate(&sgd, obj, KMAX, 0, Semantics::Worst, BUDGET).unwrap();
            if best.as_ref() != Some(&brute) && best.is_some() {
                out.mismatches.push(format!("seed {seed} {obj}: best memoryless {best:?} vs enumeration {brute:?}"));
            }
        }
    }
    out
}

fn describe(sgd: &Sgd, pi: &Strategy) -> String {
    sgd.player1_states()
        .map(|s| {
            let a = pi.choice(s, 0).and_then(|d| d.iter().next().map(|(a, _)| *a)).expect("pure");
            format!("{}={}", sgd.state_name(s), sgd.action_name(a))
        })
        .collect::<Vec<_>>()
        .join(",")
}

fn close(a: &BreakingPoint<f64>, b: &BreakingPoint<Rational>) -> bool {
    let num = |x: f64, y: &Rational| (x - y.to_f64()).abs() <= 1e-6;
    let t = match (&a.transient, &b.transient) {
        (ExtendedCount::Finite(x), ExtendedCount::Finite(y)) => num(*x, y),
        (ExtendedCount::Omega, ExtendedCount::Omega) | (ExtendedCount::Unbreakable, ExtendedCount::Unbreakable) => true,
        _ => false,
    };
    let f = match (&a.frequency, &b.frequency) {
        (Frequency::Value(x), Frequency::Value(y)) => num(*x, y),
        (Frequency::Unbreakable, Frequency::Unbreakable) => true,
        _ => false,
    };
    t && f
}

/// Runs the level LPs on the induced MDP directly and compares the first breaking level
/// with the oracle.
fn direct_lp_mismatch(sgd: &Sgd, obj: &Objective, pi: &Strategy, oracle: &BreakingPoint<Rational>, opts: &SolveOptions) -> Option<String> {
    assert_eq!(pi.memory, Memory::Memoryless);
    let targets = obj.target_states(sgd).ok()?;
    let mdp: Arena<Rational> = Arena::induced(sgd, pi).ok()?;
    let mask = mdp.mask(&targets);
    let bad = match obj.kind {
        ObjectiveKind::Safety => mask,
        ObjectiveKind::Reachability => union_mask(mdp.len(), &compute_b(&mdp, &mask)),
    };
    let found = match transient_iterative_lp(&mdp, &bad, obj, KMAX, opts) {
        Ok(TransientOutcome::Found { budget, .. }) => Some(rat(budget as i64, 1)),
        Ok(TransientOutcome::NotWithin { .. }) => None,
        Err(e) => return Some(format!("level LPs failed: {e}")),
    };
    (found.as_ref() != oracle.transient.finite()).then(|| format!("level LPs give {found:?}, oracle {:?}", oracle.transient))
}

struct RandomSummary {
    checks: Vec<ModelCheck>,
    took: Duration,
}

fn run_random_models() -> RandomSummary {
    let start = Instant::now();
    let checks = (0..RANDOM_MODELS).into_par_iter().map(check_random_model).collect();
    RandomSummary { checks, took: start.elapsed() }
}

fn oracle_equivalence(summary: &RandomSummary) -> Outcome {
    let mismatches: Vec<&String> = summary.checks.iter().flat_map(|c| &c.mismatches).collect();
    let evaluations: usize = summary.checks.iter().map(|c| c.evaluations).sum();
    let mut detail = format!("{RANDOM_MODELS} models, {evaluations} strategy/objective pairs, {} mismatches", mismatches.len());
    for m in mismatches.iter().take(5) {
        detail.push_str(&format!("\n    {m}"));
    }
    outcome(mismatches.is_empty() && summary.took <= Duration::from_secs(300), format!("{detail} ({:.2?})", summary.took))
}

fn lemma_suite() -> Outcome {
    let opts = SolveOptions::default();
    let mut cases: Vec<(String, Sgd, Objective)> =
        fixtures::all().into_values().map(|f| (f.name.to_string(), f.model, f.objective)).collect();
    for seed in 0..LEMMA_MODELS {
        cases.push((format!("random {seed}"), generate(&RandomModelSpec::with_seed(seed)), random_objective(seed)));
    }
    let failures: Vec<String> = cases
        .par_iter()
        .enumerate()
        .flat_map_iter(|(i, (name, sgd, obj))| {
            let report = check_lemma_suite(sgd, obj, DEFAULT_TRIALS, i as u64, &opts);
            report
                .checks
                .into_iter()
                .flat_map(|c| c.failures.into_iter().map(move |f| format!("{name} {}: {f}", c.name)))
                .collect::<Vec<_>>()
        })
        .collect();
    let mut detail = format!("{} models x {DEFAULT_TRIALS} trials, {} failures", cases.len(), failures.len());
    for f in failures.iter().take(5) {
        detail.push_str(&format!("\n    {f}"));
    }
    outcome(failures.is_empty(), detail)
}

fn structural_invariants(summary: &RandomSummary) -> Outcome {
    let mut violations: Vec<String> = summary.checks.iter().flat_map(|c| c.invariant.clone()).collect();
    let opts = SolveOptions::default();
    for f in fixtures::all().values() {
        let worst = worst_case_breaking_point::<Rational>(&f.model, &f.objective, &f.strategy, &opts).unwrap();
        let expected = expected_breaking_point::<Rational>(&f.model, &f.objective, &f.strategy, &opts).unwrap();
        violations.extend(invariant_violations(f.name, &f.objective, &worst));
        violations.extend(invariant_violations(f.name, &f.objective, &expected));
        if expected.breaking_point.transient.cmp_ext(&worst.breaking_point.transient) == Ordering::Greater {
            violations.push(format!("{}: expected transient above worst-case transient", f.name));
        }
    }
    let mut detail = format!("{} violations over fixtures and random models", violations.len());
    for v in violations.iter().take(5) {
        detail.push_str(&format!("\n    {v}"));
    }
    outcome(violations.is_empty(), detail)
}

fn determinism() -> Outcome {
    let runs: [&[&str]; 4] = [
        &["evaluate", "--model", "FIG4", "--strategy", "all-a", "--semantics", "worst"],
        &["evaluate", "--model", "FIG4", "--strategy", "all-a", "--semantics", "expected"],
        &["synthesize", "--model", "FIG6L", "--semantics", "worst", "--k", "4"],
        &["evaluate", "--model", "FREQ19", "--strategy", "all-a"],
    ];
    let exe = env!("CARGO_BIN_EXE_resil");
    let mut differing = Vec::new();
    for args in runs {
        let once = || Command::new(exe).args(args).output().map(|o| (o.status.code(), o.stdout));
        match (once(), once()) {
            (Ok(a), Ok(b)) if a == b && a.0 == Some(0) => {}
            _ => differing.push(args.join(" ")),
        }
    }
    outcome(differing.is_empty(), format!("{} invocations run twice, differing: {differing:?}", runs.len()))
}

fn main() {
    let summary = run_random_models();
    let results = [
        ("FIG4 worst-case evaluation", timed(Duration::from_secs(1), fig4_worst)),
        ("FIG4 expected evaluation", timed(Duration::from_secs(1), fig4_expected)),
        ("FREQ19 worst-case frequency", timed(Duration::from_secs(1), freq19)),
        ("FIG6L worst-case synthesis", timed(Duration::from_secs(10), fig6_left)),
        ("FIG6R worst-case evaluation", timed(Duration::from_secs(10), fig6_right)),
        ("oracle equivalence on random models", oracle_equivalence(&summary)),
        ("lemma suite", timed(Duration::from_secs(300), lemma_suite)),
        ("structural invariants", structural_invariants(&summary)),
        ("determinism", determinism()),
    ];
    let mut failed = 0;
    for (i, (name, o)) in results.iter().enumerate() {
        println!("{} criterion {}: {name}: {}", if o.passed { "PASS" } else { "FAIL" }, i + 1, o.detail);
        failed += usize::from(!o.passed);
    }
    if failed > 0 {
        println!("{failed} of {} criteria failed", results.len());
        std::process::exit(1);
    }
}
