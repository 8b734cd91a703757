//! Command-line front end: argument parsing and dispatch to the core library.
//!
//! [`run`] never prints or exits; it returns the text for each stream and the exit code so
//! that tests can drive it in-process.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use resil_core::eval::{expected_breaking_point, worst_case_breaking_point, CaseTaken, EvalError, EvalReport};
use resil_core::fixtures::{self, Fixture};
use resil_core::io::{
    breaking_point_fields, format_value, parse_model_with_sinks, parse_strategy_for, strategy_to_document,
    to_pretty, serialize_model, IoError, ResultDocument, WitnessDocument,
};
use resil_core::model::{make_labeled_sinks, BreakingPoint, ExtendedCount, Objective, ObjectiveKind, Sgd, Strategy, StrategyOwner};
use resil_core::numeric::{parse_rational, Rational, Scalar};
use resil_core::oracle::{oracle_breaking_point, oracle_enumerate, Semantics as OracleSemantics};
use resil_core::qp::{assignment_from_values, build_iterative_qp, level_game_values, QpError};
use resil_core::solvers::{SolveOptions, SolverError};
use resil_core::synthesis::{
    synthesize_expected, synthesize_worst_frequency, synthesize_worst_transient, Method, SynthesisError, SynthesisReport,
};
use resil_core::transforms::{
    binarize_actions, expected_gadget_game, induced_mdp, make_stopping, memory_product, unfold, TransformError, STOP_STATE,
};
use resil_core::verify::{check_lemma_suite, DEFAULT_TRIALS};

#[derive(Debug, Parser)]
#[command(name = "resil", version, about = "Breaking points of strategies in stochastic games with disturbances")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Breaking point of a given Player-1 strategy.
    Evaluate(EvaluateArgs),
    /// Player-1 strategy with the largest breaking point.
    Synthesize(SynthesizeArgs),
    /// Apply a model transformation and print the resulting model.
    Transform(TransformArgs),
    /// Brute-force reference values and the randomized lemma checks.
    Oracle(OracleArgs),
    /// List the built-in models or print one of them.
    Fixtures(FixturesArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SemanticsArg {
    Worst,
    Expected,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum NumericArg {
    Rational,
    Float,
}

#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    /// Model document path or built-in model name.
    #[arg(long)]
    pub model: String,
    /// Objective such as `reach:G:>2/5` or `safety:B:>=1/2`; defaults to the built-in
    /// model's objective.
    #[arg(long)]
    pub objective: Option<Objective>,
    /// Labels whose states are turned into sinks after loading.
    #[arg(long, value_delimiter = ',')]
    pub sinks: Vec<String>,
    /// Output path, `-` for standard output.
    #[arg(long, default_value = "-")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct SolverArgs {
    #[arg(long, value_enum, default_value = "worst")]
    pub semantics: SemanticsArg,
    #[arg(long, value_enum, default_value = "rational")]
    pub numeric: NumericArg,
    /// Convergence gap of value iteration in float mode.
    #[arg(long, default_value_t = 1e-8)]
    pub precision: f64,
    /// Maximal number of enumerated strategy profiles.
    #[arg(long, env = "RESIL_BUDGET", default_value_t = 1_000_000)]
    pub budget: u64,
}

impl SolverArgs {
    fn options(&self) -> SolveOptions {
        SolveOptions { precision: self.precision, ..SolveOptions::default() }.with_budget(self.budget)
    }
}

#[derive(Debug, Clone, Args)]
pub struct EvaluateArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Strategy document path, `default` for the built-in strategy or `all-X` to play
    /// action X wherever possible.
    #[arg(long)]
    pub strategy: String,
    /// Write every solved linear program in LP text form to this path.
    #[arg(long)]
    pub dump_lp: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SynthesizeArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Largest disturbance level searched in the worst case.
    #[arg(long)]
    pub k: Option<usize>,
    /// Optimise the worst-case disturbance frequency instead of the transient value.
    #[arg(long)]
    pub frequency: bool,
    /// Write the per-level quadratic programs of the stopping game to this path.
    #[arg(long)]
    pub emit_qp: Option<PathBuf>,
    /// Leak probability of the stopping game used with `--emit-qp`.
    #[arg(long, default_value = "1/100")]
    pub epsilon: String,
    /// Write the synthesized strategy document to this path.
    #[arg(long)]
    pub strategy_out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TransformKind {
    Induced,
    Unfold,
    Gadget,
    Stopping,
    Binarize,
    Product,
    Sinks,
}

#[derive(Debug, Clone, Args)]
pub struct TransformArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, value_enum)]
    pub kind: TransformKind,
    /// Disturbance bound for `unfold` and `product`.
    #[arg(long, default_value_t = 1)]
    pub k: usize,
    /// Leak probability for `stopping`.
    #[arg(long, default_value = "1/100")]
    pub epsilon: String,
    /// Label of the fresh sink for `stopping`.
    #[arg(long, default_value = STOP_STATE)]
    pub label: String,
    /// Strategy for `induced` (same forms as for `evaluate`).
    #[arg(long)]
    pub strategy: Option<String>,
}

#[derive(Debug, Clone, Args)]
pub struct OracleArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Strategy to evaluate; without it all pure strategies are enumerated.
    #[arg(long)]
    pub strategy: Option<String>,
    /// Largest disturbance count searched.
    #[arg(long, default_value_t = 4)]
    pub k: usize,
    /// Counter bound of the enumerated strategies.
    #[arg(long, default_value_t = 0)]
    pub memory: usize,
    /// Run the randomized lemma checks instead.
    #[arg(long)]
    pub lemmas: bool,
    #[arg(long, default_value_t = DEFAULT_TRIALS)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args)]
pub struct FixturesArgs {
    /// Print this model; without it the names are listed.
    #[arg(long)]
    pub name: Option<String>,
    #[arg(long, default_value = "-")]
    pub out: PathBuf,
}

/// Everything a run produces.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunOutput {
    pub code: i32,
    pub stdout: Option<String>,
    pub stderr: Option<String>,
}

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_BUDGET: i32 = 2;
pub const EXIT_NOT_CONVERGED: i32 = 3;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CliError {
    pub code: i32,
    pub kind: &'static str,
    pub message: String,
}

impl CliError {
    fn usage(message: impl Into<String>) -> Self {
        CliError { code: EXIT_USAGE, kind: "usage", message: message.into() }
    }
}

impl From<SolverError> for CliError {
    fn from(e: SolverError) -> Self {
        let (code, kind) = match e {
            SolverError::BudgetExceeded { .. } => (EXIT_BUDGET, "budget-exceeded"),
            SolverError::NotConverged { .. } => (EXIT_NOT_CONVERGED, "not-converged"),
            _ => (EXIT_USAGE, "solver"),
        };
        CliError { code, kind, message: e.to_string() }
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::Solver(s) => s.into(),
            other => CliError { code: EXIT_USAGE, kind: "invalid-input", message: other.to_string() },
        }
    }
}

impl From<SynthesisError> for CliError {
    fn from(e: SynthesisError) -> Self {
        match e {
            SynthesisError::Eval(inner) => inner.into(),
            SynthesisError::NotWithin { .. } => CliError { code: EXIT_BUDGET, kind: "budget-exceeded", message: e.to_string() },
            other => CliError { code: EXIT_USAGE, kind: "precondition", message: other.to_string() },
        }
    }
}

impl From<IoError> for CliError {
    fn from(e: IoError) -> Self {
        CliError { code: EXIT_USAGE, kind: "parse", message: e.to_string() }
    }
}

impl From<TransformError> for CliError {
    fn from(e: TransformError) -> Self {
        CliError { code: EXIT_USAGE, kind: "transform", message: e.to_string() }
    }
}

impl From<QpError> for CliError {
    fn from(e: QpError) -> Self {
        match e {
            QpError::Solver(s) => s.into(),
            other => CliError { code: EXIT_USAGE, kind: "qp", message: other.to_string() },
        }
    }
}

/// Parses arguments as the binary would, mapping clap failures to exit code 1.
pub fn run_args<I, T>(args: I) -> RunOutput
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => run(&cli),
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            if code == EXIT_OK {
                RunOutput { code, stdout: Some(text), stderr: None }
            } else {
                RunOutput { code, stdout: None, stderr: Some(text) }
            }
        }
    }
}

pub fn run(cli: &Cli) -> RunOutput {
    let result = match &cli.command {
        Command::Evaluate(a) => evaluate(a).and_then(|t| emit(&a.model.out, t)),
        Command::Synthesize(a) => synthesize(a).and_then(|t| emit(&a.model.out, t)),
        Command::Transform(a) => transform(a).and_then(|t| emit(&a.model.out, t)),
        Command::Oracle(a) => oracle(a).and_then(|t| emit(&a.model.out, t)),
        Command::Fixtures(a) => list_fixtures(a).and_then(|t| emit(&a.out, t)),
    };
    match result {
        Ok(stdout) => RunOutput { code: EXIT_OK, stdout, stderr: None },
        Err(e) => RunOutput {
            code: e.code,
            stdout: None,
            stderr: Some(to_pretty(&json!({ "error": e.kind, "message": e.message }))),
        },
    }
}

fn emit(out: &Path, text: String) -> Result<Option<String>, CliError> {
    if out == Path::new("-") {
        Ok(Some(text))
    } else {
        write_file(out, &text)?;
        Ok(None)
    }
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError::usage(format!("cannot write {}: {e}", path.display())))
}

struct Loaded {
    model: Sgd,
    fixture: Option<Fixture>,
    diagnostics: Vec<String>,
}

fn load(args: &ModelArgs) -> Result<Loaded, CliError> {
    let sinks: Vec<&str> = args.sinks.iter().map(String::as_str).collect();
    let path = Path::new(&args.model);
    if path.is_file() {
        let text = fs::read_to_string(path).map_err(|e| CliError::usage(format!("cannot read {}: {e}", path.display())))?;
        let (model, rewritten) = parse_model_with_sinks(&text, &sinks)?;
        return Ok(Loaded { model, fixture: None, diagnostics: sink_notes(&rewritten) });
    }
    let fixture = fixtures::by_name(&args.model)
        .ok_or_else(|| CliError::usage(format!("`{}` is neither a readable file nor a built-in model", args.model)))?;
    let (model, rewritten) = make_labeled_sinks(&fixture.model, &sinks);
    Ok(Loaded { model, fixture: Some(fixture), diagnostics: sink_notes(&rewritten) })
}

fn sink_notes(rewritten: &[String]) -> Vec<String> {
    rewritten.iter().map(|s| format!("state {s} turned into a sink")).collect()
}

impl Loaded {
    fn objective(&self, args: &ModelArgs) -> Result<Objective, CliError> {
        args.objective
            .clone()
            .or_else(|| self.fixture.as_ref().map(|f| f.objective.clone()))
            .ok_or_else(|| CliError::usage("--objective is required for models read from a file"))
    }

    fn strategy(&self, spec: &str) -> Result<Strategy, CliError> {
        if spec == "default" {
            return self
                .fixture
                .as_ref()
                .map(|f| f.strategy.clone())
                .ok_or_else(|| CliError::usage("`default` strategy is only available for built-in models"));
        }
        if let Some(action) = spec.strip_prefix("all-") {
            let known = self
                .model
                .player1_states()
                .any(|s| self.model.normal(s).iter().any(|t| self.model.action_name(t.action) == action));
            if !known && !Path::new(spec).is_file() {
                return Err(CliError::usage(format!("no Player-1 state offers action `{action}`")));
            }
            if known {
                return Ok(Strategy::named_action(&self.model, action));
            }
        }
        let text = fs::read_to_string(spec).map_err(|e| CliError::usage(format!("cannot read strategy {spec}: {e}")))?;
        Ok(parse_strategy_for(&text, &self.model, StrategyOwner::Player1)?)
    }
}

fn semantics_name(s: SemanticsArg) -> &'static str {
    match s {
        SemanticsArg::Worst => "worst",
        SemanticsArg::Expected => "expected",
    }
}

fn case_name(c: CaseTaken) -> &'static str {
    match c {
        CaseTaken::Finite => "finite",
        CaseTaken::BoundaryFinite => "boundary-finite",
        CaseTaken::BoundaryOmega => "boundary-omega",
        CaseTaken::Unbreakable => "unbreakable",
        CaseTaken::Frequency => "frequency",
    }
}

fn method_name(m: Method) -> &'static str {
    match m {
        Method::GadgetSsp => "gadget-ssp",
        Method::IterativeQp => "iterative-qp",
        Method::ExactEnumeration => "exact-enumeration",
        Method::MecRemoval => "mec-removal",
    }
}

fn document<N: Scalar>(semantics: SemanticsArg, bp: &BreakingPoint<N>, attained: bool) -> ResultDocument {
    let (transient, frequency) = breaking_point_fields(bp);
    ResultDocument {
        semantics: semantics_name(semantics).to_string(),
        transient,
        frequency,
        attained,
        case: None,
        method: None,
        strategy: None,
        witness: None,
        level_values: Vec::new(),
        diagnostics: Vec::new(),
    }
}

fn evaluate(args: &EvaluateArgs) -> Result<String, CliError> {
    let loaded = load(&args.model)?;
    let obj = loaded.objective(&args.model)?;
    let pi = loaded.strategy(&args.strategy)?;
    let mut opts = args.solver.options();
    let log = args.dump_lp.as_ref().map(|_| Arc::new(Mutex::new(Vec::new())));
    opts.lp_log = log.clone();
    let mut doc = match args.solver.numeric {
        NumericArg::Rational => evaluate_with::<Rational>(&loaded, &obj, &pi, args.solver.semantics, &opts)?,
        NumericArg::Float => evaluate_with::<f64>(&loaded, &obj, &pi, args.solver.semantics, &opts)?,
    };
    if let (Some(path), Some(log)) = (&args.dump_lp, log) {
        let programs = log.lock().expect("log lock").join("\n");
        write_file(path, &programs)?;
        doc.diagnostics.push(format!("linear programs written to {}", path.display()));
    }
    Ok(to_pretty(&doc))
}

fn evaluate_with<N: Scalar>(
    loaded: &Loaded,
    obj: &Objective,
    pi: &Strategy,
    semantics: SemanticsArg,
    opts: &SolveOptions,
) -> Result<ResultDocument, CliError> {
    let report: EvalReport<N> = match semantics {
        SemanticsArg::Worst => worst_case_breaking_point(&loaded.model, obj, pi, opts)?,
        SemanticsArg::Expected => expected_breaking_point(&loaded.model, obj, pi, opts)?,
    };
    let mut doc = document(semantics, &report.breaking_point, report.attained);
    doc.case = Some(case_name(report.case).to_string());
    doc.witness = report.witness.as_ref().map(|w| WitnessDocument {
        player2: strategy_to_document(&w.player2, &loaded.model),
        disturber: strategy_to_document(&w.disturber, &loaded.model),
    });
    doc.level_values = report.level_values.iter().map(format_value).collect();
    doc.diagnostics = loaded.diagnostics.clone();
    doc.diagnostics.extend(report.diagnostics);
    Ok(doc)
}

fn synthesize(args: &SynthesizeArgs) -> Result<String, CliError> {
    let loaded = load(&args.model)?;
    let obj = loaded.objective(&args.model)?;
    let opts = args.solver.options();
    let semantics = args.solver.semantics;
    let (mut doc, strategy, found) = match (semantics, args.solver.numeric) {
        (SemanticsArg::Expected, NumericArg::Float) => {
            report_document(semantics, &loaded, synthesize_expected::<f64>(&loaded.model, &obj, &opts)?)
        }
        (SemanticsArg::Expected, NumericArg::Rational) => {
            report_document(semantics, &loaded, synthesize_expected::<Rational>(&loaded.model, &obj, &opts)?)
        }
        (SemanticsArg::Worst, numeric) => {
            let report = if args.frequency {
                synthesize_worst_frequency(&loaded.model, &obj, &opts)?
            } else {
                synthesize_worst_transient(&loaded.model, &obj, args.k, &opts)?
            };
            let mut out = report_document(semantics, &loaded, report);
            if numeric == NumericArg::Float {
                out.0.diagnostics.push("worst-case synthesis always runs in exact arithmetic".into());
            }
            out
        }
    };
    if let Some(path) = &args.emit_qp {
        let levels = found.or(args.k).unwrap_or(0);
        let text = emit_qps(&loaded.model, &obj, &args.epsilon, levels, &opts, &mut doc.diagnostics)?;
        write_file(path, &text)?;
        doc.diagnostics.push(format!("quadratic programs for levels 0..={levels} written to {}", path.display()));
    }
    if let Some(path) = &args.strategy_out {
        write_file(path, &to_pretty(&strategy_to_document(&strategy, &loaded.model)))?;
    }
    Ok(to_pretty(&doc))
}

/// Result document, synthesized strategy and the breaking level when it is finite.
fn report_document<N: Scalar>(
    semantics: SemanticsArg,
    loaded: &Loaded,
    report: SynthesisReport<N>,
) -> (ResultDocument, Strategy, Option<usize>) {
    let mut doc = document(semantics, &report.breaking_point, true);
    doc.method = Some(method_name(report.method).to_string());
    doc.strategy = Some(strategy_to_document(&report.strategy, &loaded.model));
    doc.level_values = report.level_values.iter().map(format_value).collect();
    doc.diagnostics = loaded.diagnostics.clone();
    doc.diagnostics.extend(report.diagnostics);
    let found = match &report.breaking_point.transient {
        ExtendedCount::Finite(x) => x.to_f64().round().max(0.0) as usize,
        _ => return (doc, report.strategy, None),
    };
    let found = (semantics == SemanticsArg::Worst).then_some(found);
    (doc, report.strategy, found)
}

/// Level-by-level quadratic programs of the binarized stopping game. The values obtained
/// by enumeration are plugged in as a check that each program is feasible with objective 0.
fn emit_qps(
    model: &Sgd,
    obj: &Objective,
    epsilon: &str,
    levels: usize,
    opts: &SolveOptions,
    diagnostics: &mut Vec<String>,
) -> Result<String, CliError> {
    let eps = parse_rational(epsilon).map_err(|e| CliError::usage(format!("--epsilon: {e}")))?;
    let losing = match obj.kind {
        ObjectiveKind::Reachability => STOP_STATE.to_string(),
        ObjectiveKind::Safety => obj.label.clone(),
    };
    let game = make_stopping(&binarize_actions(model), &eps, &losing)?;
    let mut text = String::new();
    let mut previous: Option<Vec<Rational>> = None;
    for level in 0..=levels {
        let values = level_game_values(&game, obj, previous.as_deref(), opts)?;
        let qp = build_iterative_qp(&game, obj, level, previous.as_deref())?;
        let x = assignment_from_values(&qp, &game, &values, previous.as_deref());
        let feasible = qp.violated(&x).is_empty();
        let zero = qp.objective_value(&x) == Rational::from_integer(0.into());
        let v0 = game.initial().iter().fold(Rational::from_integer(0.into()), |acc, (s, p)| acc + p * &values[s.0]);
        diagnostics.push(format!(
            "level {level}: satisfaction {} with enumerated values {} and objective {}",
            format_value(&v0),
            if feasible { "feasible" } else { "infeasible" },
            if zero { "zero" } else { "nonzero" },
        ));
        text.push_str(&qp.to_text());
        text.push('\n');
        previous = Some(values);
    }
    Ok(text)
}

fn transform(args: &TransformArgs) -> Result<String, CliError> {
    let loaded = load(&args.model)?;
    let m = &loaded.model;
    let eps = || parse_rational(&args.epsilon).map_err(|e| CliError::usage(format!("--epsilon: {e}")));
    let out = match args.kind {
        TransformKind::Induced => {
            let spec = args.strategy.as_deref().ok_or_else(|| CliError::usage("--strategy is required for `induced`"))?;
            induced_mdp(m, &loaded.strategy(spec)?)?
        }
        TransformKind::Unfold => unfold(m, args.k, true).game,
        TransformKind::Gadget => expected_gadget_game(m).game,
        TransformKind::Stopping => make_stopping(m, &eps()?, &args.label)?,
        TransformKind::Binarize => binarize_actions(m),
        TransformKind::Product => memory_product(m, args.k, true),
        TransformKind::Sinks => m.clone(),
    };
    Ok(serialize_model(&out))
}

fn oracle(args: &OracleArgs) -> Result<String, CliError> {
    let loaded = load(&args.model)?;
    let obj = loaded.objective(&args.model)?;
    let opts = args.solver.options();
    if args.lemmas {
        let report = check_lemma_suite(&loaded.model, &obj, args.trials, args.seed, &opts);
        let checks: Vec<_> = report
            .checks
            .iter()
            .map(|c| json!({ "name": c.name, "trials": c.trials, "failures": c.failures }))
            .collect();
        return Ok(to_pretty(&json!({ "seed": report.seed, "passed": report.passed(), "checks": checks })));
    }
    let semantics = match args.solver.semantics {
        SemanticsArg::Worst => OracleSemantics::Worst,
        SemanticsArg::Expected => OracleSemantics::Expected,
    };
    let (bp, strategy) = match &args.strategy {
        Some(spec) => {
            let pi = loaded.strategy(spec)?;
            (oracle_breaking_point(&loaded.model, &obj, &pi, args.k, semantics, opts.budget)?, None)
        }
        None => {
            let (bp, pi) = oracle_enumerate(&loaded.model, &obj, args.k, args.memory, semantics, opts.budget)?;
            (bp, Some(pi))
        }
    };
    let mut doc = document(args.solver.semantics, &bp, true);
    doc.method = Some("brute-force".into());
    doc.strategy = strategy.map(|pi| strategy_to_document(&pi, &loaded.model));
    doc.diagnostics = loaded.diagnostics;
    if let ExtendedCount::Omega = bp.transient {
        doc.diagnostics.push(format!("no breaking count found up to {}", args.k));
    }
    Ok(to_pretty(&doc))
}

fn list_fixtures(args: &FixturesArgs) -> Result<String, CliError> {
    match &args.name {
        Some(name) => {
            let f = fixtures::by_name(name).ok_or_else(|| CliError::usage(format!("no built-in model named `{name}`")))?;
            Ok(serialize_model(&f.model))
        }
        None => {
            let list: Vec<_> = fixtures::all()
                .values()
                .map(|f| json!({ "name": f.name, "objective": f.objective.to_string() }))
                .collect();
            Ok(to_pretty(&list))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_ok(args: &[&str]) -> ResultDocument {
        let out = run_args(std::iter::once("resil").chain(args.iter().copied()));
        assert_eq!(out.code, 0, "{:?}", out.stderr);
        serde_json::from_str(&out.stdout.unwrap()).unwrap()
    }

    #[test]
    fn evaluates_fig4_worst_case() {
        let doc = run_ok(&["evaluate", "--model", "FIG4", "--strategy", "all-a", "--objective", "reach:G:>2/5"]);
        assert_eq!(doc.transient, "2");
        assert_eq!(doc.frequency, "0");
    }

    #[test]
    fn no_disturbance_model_is_unbreakable() {
        let doc = run_ok(&["evaluate", "--model", "NODIST", "--strategy", "default"]);
        assert_eq!(doc.transient, "unbreakable");
    }

    #[test]
    fn synthesizes_counting_strategy_for_fig6_left() {
        let doc = run_ok(&["synthesize", "--model", "FIG6L", "--semantics", "worst", "--k", "4"]);
        assert_eq!(doc.transient, "2");
        assert!(doc.strategy.unwrap().keys().any(|k| k.starts_with('(')));
    }

    #[test]
    fn exit_codes() {
        let bad = run_args(["resil", "evaluate", "--model", "nope", "--strategy", "default"]);
        assert_eq!(bad.code, EXIT_USAGE);
        let err: serde_json::Value = serde_json::from_str(&bad.stderr.unwrap()).unwrap();
        assert_eq!(err["error"], "usage");
        let budget = run_args(["resil", "synthesize", "--model", "FIG6L", "--budget", "1"]);
        assert_eq!(budget.code, EXIT_BUDGET);
        let objective = run_args(["resil", "evaluate", "--model", "FIG4", "--strategy", "default", "--objective", "reach:G:2/5"]);
        assert_eq!(objective.code, EXIT_USAGE);
    }
}
