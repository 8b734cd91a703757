//! Stochastic games with disturbances (SGDs), objectives, strategies and breaking points.
//!
//! An SGD is a turn-based stochastic game in which an adversary may replace the action
//! chosen by Player 1 with a disturbance action. Player 2 and the disturber together form
//! the adversary; Player 1 tries to satisfy a safety or reachability objective.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_traits::{One, Signed, Zero};

use crate::numeric::{format_rational, Rational, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StateId(pub usize);

impl StateId {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Player {
    One,
    Two,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ActionKind {
    Normal,
    Disturbance,
    Bottom,
}

/// Index into the model's action table, tagged with its kind.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ActionId {
    pub index: usize,
    pub kind: ActionKind,
}

impl ActionId {
    /// The reserved "no disturbance" action.
    pub const BOTTOM: ActionId = ActionId {
        index: usize::MAX,
        kind: ActionKind::Bottom,
    };

    pub fn is_bottom(self) -> bool {
        self.kind == ActionKind::Bottom
    }
    pub fn is_disturbance(self) -> bool {
        self.kind == ActionKind::Disturbance
    }
}

pub const BOTTOM_NAME: &str = "⊥";

/// A finite-support probability distribution with exact weights.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Distribution<K: Ord> {
    support: BTreeMap<K, Rational>,
}

impl<K: Ord + Clone> Distribution<K> {
    pub fn dirac(k: K) -> Self {
        let mut support = BTreeMap::new();
        support.insert(k, Rational::one());
        Distribution { support }
    }

    /// Builds a distribution, summing repeated keys. Weights are not checked.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (K, Rational)>) -> Self {
        let mut support: BTreeMap<K, Rational> = BTreeMap::new();
        for (k, p) in pairs {
            *support.entry(k).or_insert_with(Rational::zero) += p;
        }
        Distribution { support }
    }

    pub fn iter(&self) -> impl Iterator<Item = (&K, &Rational)> {
        self.support.iter()
    }

    pub fn support(&self) -> impl Iterator<Item = &K> {
        self.support.keys()
    }

    pub fn prob(&self, k: &K) -> Rational {
        self.support.get(k).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn total(&self) -> Rational {
        self.support.values().fold(Rational::zero(), |acc, p| acc + p)
    }

    pub fn is_normalized(&self) -> bool {
        self.total().is_one()
    }

    pub fn all_positive(&self) -> bool {
        self.support.values().all(|p| p.is_positive())
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    /// The single key of a Dirac distribution.
    pub fn as_dirac(&self) -> Option<&K> {
        match self.support.iter().next() {
            Some((k, p)) if self.support.len() == 1 && p.is_one() => Some(k),
            _ => None,
        }
    }

    pub fn map_keys<J: Ord + Clone>(&self, f: impl Fn(&K) -> J) -> Distribution<J> {
        Distribution::from_pairs(self.support.iter().map(|(k, p)| (f(k), p.clone())))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StateInfo {
    pub name: String,
    pub owner: Player,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActionInfo {
    pub name: String,
    pub kind: ActionKind,
}

/// One outgoing action of a state with its successor distribution.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transition {
    pub action: ActionId,
    pub dist: Distribution<StateId>,
}

/// A stochastic game with disturbances. Plain stochastic games and MDPs are SGDs without
/// disturbance actions (and, for MDPs, without Player-1 choice).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sgd {
    states: Vec<StateInfo>,
    actions: Vec<ActionInfo>,
    normal: Vec<Vec<Transition>>,
    disturb: Vec<Vec<Transition>>,
    initial: Distribution<StateId>,
    labels: BTreeMap<String, BTreeSet<StateId>>,
}

impl Sgd {
    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn states(&self) -> impl Iterator<Item = StateId> {
        (0..self.states.len()).map(StateId)
    }

    pub fn state_info(&self, s: StateId) -> &StateInfo {
        &self.states[s.0]
    }

    pub fn state_name(&self, s: StateId) -> &str {
        &self.states[s.0].name
    }

    pub fn owner(&self, s: StateId) -> Player {
        self.states[s.0].owner
    }

    pub fn state_by_name(&self, name: &str) -> Option<StateId> {
        self.states.iter().position(|s| s.name == name).map(StateId)
    }

    pub fn action_infos(&self) -> &[ActionInfo] {
        &self.actions
    }

    pub fn action_name(&self, a: ActionId) -> &str {
        if a.is_bottom() {
            BOTTOM_NAME
        } else {
            &self.actions[a.index].name
        }
    }

    pub fn action_by_name(&self, name: &str, kind: ActionKind) -> Option<ActionId> {
        if kind == ActionKind::Bottom {
            return Some(ActionId::BOTTOM);
        }
        self.actions
            .iter()
            .position(|a| a.name == name && a.kind == kind)
            .map(|index| ActionId { index, kind })
    }

    /// Looks up an action name of either kind; `⊥` and `bot` denote no disturbance.
    pub fn any_action_by_name(&self, name: &str) -> Option<ActionId> {
        if name == BOTTOM_NAME || name == "bot" {
            return Some(ActionId::BOTTOM);
        }
        self.action_by_name(name, ActionKind::Normal)
            .or_else(|| self.action_by_name(name, ActionKind::Disturbance))
    }

    /// Normal actions available in `s` (the function Av).
    pub fn normal(&self, s: StateId) -> &[Transition] {
        &self.normal[s.0]
    }

    /// Disturbance actions available in `s` (the function Av^D).
    pub fn disturbances(&self, s: StateId) -> &[Transition] {
        &self.disturb[s.0]
    }

    pub fn transition(&self, s: StateId, a: ActionId) -> Option<&Distribution<StateId>> {
        let list = match a.kind {
            ActionKind::Normal => &self.normal[s.0],
            ActionKind::Disturbance => &self.disturb[s.0],
            ActionKind::Bottom => return None,
        };
        list.iter().find(|t| t.action == a).map(|t| &t.dist)
    }

    pub fn initial(&self) -> &Distribution<StateId> {
        &self.initial
    }

    pub fn labels(&self) -> &BTreeMap<String, BTreeSet<StateId>> {
        &self.labels
    }

    pub fn label(&self, name: &str) -> Option<&BTreeSet<StateId>> {
        self.labels.get(name)
    }

    pub fn labels_of(&self, s: StateId) -> Vec<&str> {
        self.labels
            .iter()
            .filter(|(_, set)| set.contains(&s))
            .map(|(l, _)| l.as_str())
            .collect()
    }

    /// Number of (state, disturbance action) pairs, i.e. disturbance edges.
    pub fn disturbance_edge_count(&self) -> usize {
        self.disturb.iter().map(Vec::len).sum()
    }

    pub fn has_disturbances(&self) -> bool {
        self.disturbance_edge_count() > 0
    }

    /// A sink has exactly one normal self-loop and nothing else.
    pub fn is_sink(&self, s: StateId) -> bool {
        self.disturb[s.0].is_empty()
            && self.normal[s.0].len() == 1
            && self.normal[s.0][0].dist.as_dirac() == Some(&s)
    }

    pub fn player1_states(&self) -> impl Iterator<Item = StateId> + '_ {
        self.states().filter(|&s| self.owner(s) == Player::One)
    }

    pub fn to_builder(&self) -> SgdBuilder {
        SgdBuilder {
            states: self.states.clone(),
            actions: self.actions.clone(),
            normal: self.normal.clone(),
            disturb: self.disturb.clone(),
            initial: self.initial.clone(),
            labels: self.labels.clone(),
            duplicates: Vec::new(),
        }
    }
}

/// Incremental constructor for [`Sgd`].
#[derive(Debug, Clone, Default)]
pub struct SgdBuilder {
    states: Vec<StateInfo>,
    actions: Vec<ActionInfo>,
    normal: Vec<Vec<Transition>>,
    disturb: Vec<Vec<Transition>>,
    initial: Distribution<StateId>,
    labels: BTreeMap<String, BTreeSet<StateId>>,
    duplicates: Vec<(StateId, ActionId)>,
}

impl<K: Ord> Default for Distribution<K> {
    fn default() -> Self {
        Distribution {
            support: BTreeMap::new(),
        }
    }
}

impl SgdBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a state, or returns the existing one with the same name.
    pub fn state(&mut self, name: &str, owner: Player) -> StateId {
        if let Some(i) = self.states.iter().position(|s| s.name == name) {
            return StateId(i);
        }
        self.states.push(StateInfo {
            name: name.to_string(),
            owner,
        });
        self.normal.push(Vec::new());
        self.disturb.push(Vec::new());
        StateId(self.states.len() - 1)
    }

    pub fn find_state(&self, name: &str) -> Option<StateId> {
        self.states.iter().position(|s| s.name == name).map(StateId)
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn action(&mut self, name: &str, kind: ActionKind) -> ActionId {
        assert!(kind != ActionKind::Bottom, "⊥ is reserved");
        if let Some(index) = self
            .actions
            .iter()
            .position(|a| a.name == name && a.kind == kind)
        {
            return ActionId { index, kind };
        }
        self.actions.push(ActionInfo {
            name: name.to_string(),
            kind,
        });
        ActionId {
            index: self.actions.len() - 1,
            kind,
        }
    }

    pub fn label(&mut self, s: StateId, label: &str) -> &mut Self {
        self.labels.entry(label.to_string()).or_default().insert(s);
        self
    }

    /// Declares a label even when no state carries it.
    pub fn declare_label(&mut self, label: &str) -> &mut Self {
        self.labels.entry(label.to_string()).or_default();
        self
    }

    pub fn transition(
        &mut self,
        from: StateId,
        action: &str,
        kind: ActionKind,
        to: impl IntoIterator<Item = (StateId, Rational)>,
    ) -> ActionId {
        let a = self.action(action, kind);
        self.transition_id(from, a, Distribution::from_pairs(to));
        a
    }

    pub fn transition_id(&mut self, from: StateId, a: ActionId, dist: Distribution<StateId>) {
        let list = match a.kind {
            ActionKind::Normal => &mut self.normal[from.0],
            ActionKind::Disturbance => &mut self.disturb[from.0],
            ActionKind::Bottom => panic!("⊥ has no transition"),
        };
        if list.iter().any(|t| t.action == a) {
            self.duplicates.push((from, a));
            return;
        }
        list.push(Transition { action: a, dist });
        list.sort_by_key(|t| t.action);
    }

    pub fn self_loop(&mut self, s: StateId, action: &str) -> &mut Self {
        self.transition(s, action, ActionKind::Normal, [(s, Rational::one())]);
        self
    }

    pub fn initial(&mut self, dist: impl IntoIterator<Item = (StateId, Rational)>) -> &mut Self {
        self.initial = Distribution::from_pairs(dist);
        self
    }

    /// Builds without checking invariants; [`validate`] reports violations.
    pub fn build_unchecked(self) -> Sgd {
        Sgd {
            states: self.states,
            actions: self.actions,
            normal: self.normal,
            disturb: self.disturb,
            initial: self.initial,
            labels: self.labels,
        }
    }

    pub fn build(self) -> Result<Sgd, ModelError> {
        let duplicates = self.duplicates.clone();
        let sgd = self.build_unchecked();
        let mut diags = validate(&sgd);
        for (s, a) in duplicates {
            diags.push(Diagnostic::error(
                Violation::DuplicateTransition,
                Some(sgd.state_name(s).to_string()),
                Some(sgd.action_name(a).to_string()),
            ));
        }
        if diags.iter().any(|d| d.severity == Severity::Error) {
            Err(ModelError::Invalid(diags))
        } else {
            Ok(sgd)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Violation {
    NotNormalized,
    NonPositiveProbability,
    DisturbanceOnPlayer2,
    NoNormalAction,
    DuplicateTransition,
    ActionKindConflict,
    InitialNotNormalized,
    UnknownStateReference,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Violation::NotNormalized => "distribution not normalized",
            Violation::NonPositiveProbability => "non-positive probability",
            Violation::DisturbanceOnPlayer2 => "disturbance on Player-2 state",
            Violation::NoNormalAction => "state without normal action",
            Violation::DuplicateTransition => "duplicate transition",
            Violation::ActionKindConflict => "action used as both normal and disturbance",
            Violation::InitialNotNormalized => "initial distribution not normalized",
            Violation::UnknownStateReference => "reference to unknown state",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub severity: Severity,
    pub violation: Violation,
    pub state: Option<String>,
    pub action: Option<String>,
}

impl Diagnostic {
    fn error(violation: Violation, state: Option<String>, action: Option<String>) -> Self {
        Diagnostic {
            severity: Severity::Error,
            violation,
            state,
            action,
        }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.violation)?;
        if let Some(s) = &self.state {
            write!(f, " at state `{s}`")?;
        }
        if let Some(a) = &self.action {
            write!(f, " action `{a}`")?;
        }
        Ok(())
    }
}

/// Checks all SGD invariants; an empty list means the model is well formed.
pub fn validate(sgd: &Sgd) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let n = sgd.num_states();
    let name = |s: StateId| Some(sgd.state_name(s).to_string());
    let check_dist = |out: &mut Vec<Diagnostic>, s: StateId, a: ActionId, d: &Distribution<StateId>| {
        if d.support().any(|t| t.0 >= n) {
            out.push(Diagnostic::error(
                Violation::UnknownStateReference,
                name(s),
                Some(sgd.action_name(a).to_string()),
            ));
        }
        if !d.all_positive() {
            out.push(Diagnostic::error(
                Violation::NonPositiveProbability,
                name(s),
                Some(sgd.action_name(a).to_string()),
            ));
        }
        if !d.is_normalized() {
            out.push(Diagnostic::error(
                Violation::NotNormalized,
                name(s),
                Some(sgd.action_name(a).to_string()),
            ));
        }
    };
    for s in sgd.states() {
        if sgd.normal(s).is_empty() {
            out.push(Diagnostic::error(Violation::NoNormalAction, name(s), None));
        }
        for t in sgd.normal(s) {
            check_dist(&mut out, s, t.action, &t.dist);
        }
        if sgd.owner(s) == Player::Two {
            for t in sgd.disturbances(s) {
                out.push(Diagnostic::error(
                    Violation::DisturbanceOnPlayer2,
                    name(s),
                    Some(sgd.action_name(t.action).to_string()),
                ));
            }
        }
        for t in sgd.disturbances(s) {
            check_dist(&mut out, s, t.action, &t.dist);
        }
    }
    let names: BTreeSet<&str> = sgd
        .action_infos()
        .iter()
        .filter(|a| a.kind == ActionKind::Normal)
        .map(|a| a.name.as_str())
        .collect();
    for a in sgd.action_infos() {
        if a.kind == ActionKind::Disturbance && names.contains(a.name.as_str()) {
            out.push(Diagnostic::error(
                Violation::ActionKindConflict,
                None,
                Some(a.name.clone()),
            ));
        }
    }
    if !sgd.initial().is_normalized() || !sgd.initial().all_positive() {
        out.push(Diagnostic::error(Violation::InitialNotNormalized, None, None));
    }
    if sgd.initial().support().any(|t| t.0 >= n) {
        out.push(Diagnostic::error(Violation::UnknownStateReference, None, None));
    }
    for (label, set) in sgd.labels() {
        if set.iter().any(|s| s.0 >= n) {
            out.push(Diagnostic::error(
                Violation::UnknownStateReference,
                Some(format!("label {label}")),
                None,
            ));
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ModelError {
    #[error("invalid model: {}", join_diagnostics(.0))]
    Invalid(Vec<Diagnostic>),
    #[error("label `{0}` is missing or empty")]
    MissingLabel(String),
    #[error("state `{state}` labeled `{label}` is not a sink")]
    NotSink { label: String, state: String },
}

fn join_diagnostics(d: &[Diagnostic]) -> String {
    d.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}

/// Rewrites every state carrying one of `labels` into a sink. Returns the model and the
/// names of rewritten states.
pub fn make_labeled_sinks(sgd: &Sgd, labels: &[&str]) -> (Sgd, Vec<String>) {
    let mut b = sgd.to_builder();
    let mut rewritten = Vec::new();
    let targets: BTreeSet<StateId> = labels
        .iter()
        .filter_map(|l| sgd.label(l))
        .flatten()
        .copied()
        .collect();
    for s in targets {
        if sgd.is_sink(s) {
            continue;
        }
        rewritten.push(sgd.state_name(s).to_string());
        let loop_action = sgd
            .normal(s)
            .first()
            .map(|t| sgd.action_name(t.action).to_string())
            .unwrap_or_else(|| "loop".to_string());
        let a = b.action(&loop_action, ActionKind::Normal);
        b.normal[s.0] = vec![Transition {
            action: a,
            dist: Distribution::dirac(s),
        }];
        b.disturb[s.0].clear();
    }
    (b.build_unchecked(), rewritten)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ObjectiveKind {
    /// Avoid the label forever with probability above the threshold.
    Safety,
    /// Reach the label with probability above the threshold.
    Reachability,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Objective {
    pub kind: ObjectiveKind,
    pub label: String,
    pub threshold: Rational,
    pub strict: bool,
}

impl Objective {
    pub fn safety(label: &str, threshold: Rational, strict: bool) -> Self {
        Objective {
            kind: ObjectiveKind::Safety,
            label: label.to_string(),
            threshold,
            strict,
        }
    }

    pub fn reach(label: &str, threshold: Rational, strict: bool) -> Self {
        Objective {
            kind: ObjectiveKind::Reachability,
            label: label.to_string(),
            threshold,
            strict,
        }
    }

    /// Probability with which the adversary must realise the complementary event:
    /// reaching the bad set (safety) or avoiding the goal (reachability).
    pub fn violation_threshold(&self) -> Rational {
        Rational::one() - &self.threshold
    }

    /// Whether an adversary achieving violation probability `v` breaks the objective.
    pub fn breaks<N: Scalar>(&self, v: &N) -> bool {
        let t = N::from_rational(&self.violation_threshold());
        match v.cmp_tol(&t) {
            Ordering::Greater => true,
            Ordering::Equal => self.strict,
            Ordering::Less => false,
        }
    }

    /// As [`Objective::breaks`], but float values within `precision` of the threshold
    /// count as equal to it.
    pub fn breaks_within<N: Scalar>(&self, v: &N, precision: f64) -> bool {
        if N::EXACT {
            return self.breaks(v);
        }
        let d = v.to_f64() - N::from_rational(&self.violation_threshold()).to_f64();
        let tol = precision.max(crate::numeric::FLOAT_TOLERANCE);
        if d.abs() <= tol {
            self.strict
        } else {
            d > 0.0
        }
    }

    /// Resolves the target label and checks that every target state is a sink.
    pub fn target_states(&self, sgd: &Sgd) -> Result<BTreeSet<StateId>, ModelError> {
        let set = sgd
            .label(&self.label)
            .filter(|s| !s.is_empty())
            .ok_or_else(|| ModelError::MissingLabel(self.label.clone()))?;
        if let Some(s) = set.iter().find(|&&s| !sgd.is_sink(s)) {
            return Err(ModelError::NotSink {
                label: self.label.clone(),
                state: sgd.state_name(*s).to_string(),
            });
        }
        Ok(set.clone())
    }
}

impl fmt::Display for Objective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match self.kind {
            ObjectiveKind::Safety => "safety",
            ObjectiveKind::Reachability => "reach",
        };
        let cmp = if self.strict { ">" } else { ">=" };
        write!(f, "{kind}:{}:{cmp}{}", self.label, format_rational(&self.threshold))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid objective `{0}`: expected kind:label:>p or kind:label:>=p with kind reach or safety")]
pub struct ObjectiveParseError(pub String);

impl std::str::FromStr for Objective {
    type Err = ObjectiveParseError;

    /// Parses the form written by `Display`, e.g. `reach:G:>2/5` or `safety:B:>=9/10`.
    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let err = || ObjectiveParseError(text.to_string());
        let mut parts = text.splitn(3, ':');
        let (kind, label, bound) = match (parts.next(), parts.next(), parts.next()) {
            (Some(k), Some(l), Some(b)) if !l.is_empty() => (k, l, b),
            _ => return Err(err()),
        };
        let (strict, value) = match bound.strip_prefix(">=") {
            Some(v) => (false, v),
            None => (true, bound.strip_prefix('>').ok_or_else(err)?),
        };
        let threshold = crate::numeric::parse_rational(value).map_err(|_| err())?;
        if !crate::numeric::is_probability(&threshold) {
            return Err(err());
        }
        match kind {
            "reach" => Ok(Objective::reach(label, threshold, strict)),
            "safety" | "safe" => Ok(Objective::safety(label, threshold, strict)),
            _ => Err(err()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StrategyOwner {
    Player1,
    Player2,
    Disturber,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Memory {
    Memoryless,
    /// Memory is a counter in `0..=k` of remaining disturbances. It starts at `k`, drops
    /// by one on every disturbance and stays at 0 once exhausted.
    StepCounting(usize),
}

impl Memory {
    pub fn bound(self) -> usize {
        match self {
            Memory::Memoryless => 0,
            Memory::StepCounting(k) => k,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Strategy {
    pub owner: StrategyOwner,
    pub memory: Memory,
    /// Keyed by (state, counter); memoryless strategies use counter 0.
    rule: BTreeMap<(StateId, usize), Distribution<ActionId>>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum StrategyError {
    #[error("strategy has no choice for state `{0}`")]
    Missing(String),
    #[error("action `{action}` is not available for this strategy in state `{state}`")]
    IllegalAction { state: String, action: String },
    #[error("choice distribution at state `{0}` is not normalized")]
    NotNormalized(String),
    #[error("counter {counter} exceeds the bound {bound}")]
    CounterOutOfRange { counter: usize, bound: usize },
    #[error("state `{0}` is not owned by the strategy's player")]
    WrongOwner(String),
    #[error("step-counting strategies disagree on the counter bound")]
    IncompatibleBounds,
}

impl Strategy {
    pub fn new(
        owner: StrategyOwner,
        memory: Memory,
        rule: BTreeMap<(StateId, usize), Distribution<ActionId>>,
    ) -> Self {
        Strategy { owner, memory, rule }
    }

    pub fn memoryless(owner: StrategyOwner, rule: BTreeMap<StateId, Distribution<ActionId>>) -> Self {
        Strategy {
            owner,
            memory: Memory::Memoryless,
            rule: rule.into_iter().map(|(s, d)| ((s, 0), d)).collect(),
        }
    }

    pub fn pure_memoryless(owner: StrategyOwner, choice: impl IntoIterator<Item = (StateId, ActionId)>) -> Self {
        Self::memoryless(
            owner,
            choice
                .into_iter()
                .map(|(s, a)| (s, Distribution::dirac(a)))
                .collect(),
        )
    }

    /// Player 1 picks the first normal action everywhere.
    pub fn first_action(sgd: &Sgd) -> Self {
        Self::first_choice(sgd, StrategyOwner::Player1)
    }

    /// Picks the first normal action (Player 1 or 2) or never disturbs (disturber).
    pub fn first_choice(sgd: &Sgd, owner: StrategyOwner) -> Self {
        let player = match owner {
            StrategyOwner::Player2 => Player::Two,
            _ => Player::One,
        };
        Self::pure_memoryless(
            owner,
            sgd.states().filter(|&s| sgd.owner(s) == player).map(|s| match owner {
                StrategyOwner::Disturber => (s, ActionId::BOTTOM),
                _ => (s, sgd.normal(s)[0].action),
            }),
        )
    }

    /// The disturber never disturbs.
    pub fn never_disturb(sgd: &Sgd) -> Self {
        Self::pure_memoryless(
            StrategyOwner::Disturber,
            sgd.player1_states().map(|s| (s, ActionId::BOTTOM)),
        )
    }

    /// Player 1 picks the action with the given name wherever it is available and the
    /// first action elsewhere.
    pub fn named_action(sgd: &Sgd, name: &str) -> Self {
        Self::pure_memoryless(
            StrategyOwner::Player1,
            sgd.player1_states().map(|s| {
                let t = sgd
                    .normal(s)
                    .iter()
                    .find(|t| sgd.action_name(t.action) == name)
                    .unwrap_or(&sgd.normal(s)[0]);
                (s, t.action)
            }),
        )
    }

    pub fn rule(&self) -> &BTreeMap<(StateId, usize), Distribution<ActionId>> {
        &self.rule
    }

    /// The choice at `s` with `counter` remaining disturbances.
    pub fn choice(&self, s: StateId, counter: usize) -> Option<&Distribution<ActionId>> {
        let c = match self.memory {
            Memory::Memoryless => 0,
            Memory::StepCounting(k) => counter.min(k),
        };
        self.rule.get(&(s, c))
    }

    pub fn is_pure(&self) -> bool {
        self.rule.values().all(|d| d.as_dirac().is_some())
    }

    pub fn pure_choice(&self, s: StateId, counter: usize) -> Option<ActionId> {
        self.choice(s, counter).and_then(|d| d.as_dirac().copied())
    }

    fn owned_states(&self, sgd: &Sgd) -> Vec<StateId> {
        sgd.states()
            .filter(|&s| match self.owner {
                StrategyOwner::Player1 | StrategyOwner::Disturber => sgd.owner(s) == Player::One,
                StrategyOwner::Player2 => sgd.owner(s) == Player::Two,
            })
            .collect()
    }

    /// Checks totality over the owner's states and legality of every chosen action.
    pub fn check(&self, sgd: &Sgd) -> Result<(), StrategyError> {
        let k = self.memory.bound();
        let owned = self.owned_states(sgd);
        for (&(s, c), d) in &self.rule {
            if c > k {
                return Err(StrategyError::CounterOutOfRange { counter: c, bound: k });
            }
            if s.0 >= sgd.num_states() || !owned.contains(&s) {
                return Err(StrategyError::WrongOwner(
                    sgd.states.get(s.0).map(|i| i.name.clone()).unwrap_or_default(),
                ));
            }
            if !d.is_normalized() || !d.all_positive() {
                return Err(StrategyError::NotNormalized(sgd.state_name(s).to_string()));
            }
            for &a in d.support() {
                let legal = match self.owner {
                    StrategyOwner::Player1 | StrategyOwner::Player2 => {
                        a.kind == ActionKind::Normal && sgd.transition(s, a).is_some()
                    }
                    StrategyOwner::Disturber => {
                        a.is_bottom() || (a.is_disturbance() && sgd.transition(s, a).is_some())
                    }
                };
                if !legal {
                    return Err(StrategyError::IllegalAction {
                        state: sgd.state_name(s).to_string(),
                        action: sgd.action_name(a).to_string(),
                    });
                }
            }
        }
        for s in owned {
            for c in 0..=k {
                if !self.rule.contains_key(&(s, c)) {
                    return Err(StrategyError::Missing(sgd.state_name(s).to_string()));
                }
            }
        }
        Ok(())
    }
}

/// Transient breaking point values: a number, ω, or ♮.
#[derive(Debug, Clone, PartialEq)]
pub enum ExtendedCount<N> {
    Finite(N),
    Omega,
    Unbreakable,
}

impl<N: Scalar> ExtendedCount<N> {
    fn rank(&self) -> u8 {
        match self {
            ExtendedCount::Finite(_) => 0,
            ExtendedCount::Omega => 1,
            ExtendedCount::Unbreakable => 2,
        }
    }

    pub fn cmp_ext(&self, other: &Self) -> Ordering {
        match (self, other) {
            (ExtendedCount::Finite(a), ExtendedCount::Finite(b)) => a.cmp_tol(b),
            _ => self.rank().cmp(&other.rank()),
        }
    }

    pub fn finite(&self) -> Option<&N> {
        match self {
            ExtendedCount::Finite(x) => Some(x),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Frequency<N> {
    Value(N),
    Unbreakable,
}

/// The pair (transient, frequency) measuring the effort needed to break a strategy.
#[derive(Debug, Clone, PartialEq)]
pub struct BreakingPoint<N> {
    pub transient: ExtendedCount<N>,
    pub frequency: Frequency<N>,
}

impl<N: Scalar> BreakingPoint<N> {
    pub fn finite(x: N) -> Self {
        BreakingPoint {
            transient: ExtendedCount::Finite(x),
            frequency: Frequency::Value(N::zero()),
        }
    }

    pub fn omega(f: N) -> Self {
        BreakingPoint {
            transient: ExtendedCount::Omega,
            frequency: Frequency::Value(f),
        }
    }

    pub fn unbreakable() -> Self {
        BreakingPoint {
            transient: ExtendedCount::Unbreakable,
            frequency: Frequency::Unbreakable,
        }
    }

    /// Checks the coupling between transient and frequency components.
    pub fn is_coherent(&self) -> bool {
        match (&self.transient, &self.frequency) {
            (ExtendedCount::Finite(_), Frequency::Value(f)) => f.is_zero_tol(),
            (ExtendedCount::Omega, Frequency::Value(_)) => true,
            (ExtendedCount::Unbreakable, Frequency::Unbreakable) => true,
            _ => false,
        }
    }

    pub fn frequency_value(&self) -> Option<&N> {
        match &self.frequency {
            Frequency::Value(f) => Some(f),
            Frequency::Unbreakable => None,
        }
    }

    pub fn map<M: Scalar>(&self, f: impl Fn(&N) -> M) -> BreakingPoint<M> {
        BreakingPoint {
            transient: match &self.transient {
                ExtendedCount::Finite(x) => ExtendedCount::Finite(f(x)),
                ExtendedCount::Omega => ExtendedCount::Omega,
                ExtendedCount::Unbreakable => ExtendedCount::Unbreakable,
            },
            frequency: match &self.frequency {
                Frequency::Value(x) => Frequency::Value(f(x)),
                Frequency::Unbreakable => Frequency::Unbreakable,
            },
        }
    }
}

/// Total order on breaking points: finite values below ω-values (ordered by frequency),
/// which lie below ♮.
pub fn compare_breaking_points<N: Scalar>(a: &BreakingPoint<N>, b: &BreakingPoint<N>) -> Ordering {
    match a.transient.cmp_ext(&b.transient) {
        Ordering::Equal => match (&a.frequency, &b.frequency) {
            (Frequency::Value(x), Frequency::Value(y)) => x.cmp_tol(y),
            (Frequency::Value(_), Frequency::Unbreakable) => Ordering::Less,
            (Frequency::Unbreakable, Frequency::Value(_)) => Ordering::Greater,
            (Frequency::Unbreakable, Frequency::Unbreakable) => Ordering::Equal,
        },
        o => o,
    }
}

/// Per-action costs; missing entries cost 0.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CostFunction {
    cost: BTreeMap<(StateId, ActionId), Rational>,
}

impl CostFunction {
    /// Cost 1 for every disturbance action and 0 otherwise.
    pub fn canonical(sgd: &Sgd) -> Self {
        let mut cost = BTreeMap::new();
        for s in sgd.states() {
            for t in sgd.disturbances(s) {
                cost.insert((s, t.action), Rational::one());
            }
        }
        CostFunction { cost }
    }

    pub fn set(&mut self, s: StateId, a: ActionId, c: Rational) {
        if c.is_zero() {
            self.cost.remove(&(s, a));
        } else {
            self.cost.insert((s, a), c);
        }
    }

    pub fn get(&self, s: StateId, a: ActionId) -> Rational {
        self.cost.get(&(s, a)).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&(StateId, ActionId), &Rational)> {
        self.cost.iter()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::rat;

    fn tiny() -> SgdBuilder {
        let mut b = SgdBuilder::new();
        let s0 = b.state("s0", Player::One);
        let g = b.state("G", Player::Two);
        b.transition(s0, "a", ActionKind::Normal, [(g, rat(1, 1))]);
        b.self_loop(g, "a");
        b.label(g, "G");
        b.initial([(s0, rat(1, 1))]);
        b
    }

    #[test]
    fn well_formed_model_has_no_diagnostics() {
        assert!(validate(&tiny().build().unwrap()).is_empty());
    }

    #[test]
    fn unnormalized_distribution_reported() {
        let mut b = tiny();
        let s0 = b.find_state("s0").unwrap();
        let g = b.find_state("G").unwrap();
        b.transition(s0, "b", ActionKind::Normal, [(g, rat(9, 10))]);
        let d = validate(&b.build_unchecked());
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].violation.to_string(), "distribution not normalized");
    }

    #[test]
    fn disturbance_on_player2_reported() {
        let mut b = tiny();
        let g = b.find_state("G").unwrap();
        b.transition(g, "d", ActionKind::Disturbance, [(g, rat(1, 1))]);
        let d = validate(&b.build_unchecked());
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].violation.to_string(), "disturbance on Player-2 state");
        assert_eq!(d[0].state.as_deref(), Some("G"));
    }

    #[test]
    fn kind_conflict_and_duplicates_rejected() {
        let mut b = tiny();
        let s0 = b.find_state("s0").unwrap();
        b.transition(s0, "a", ActionKind::Disturbance, [(s0, rat(1, 1))]);
        b.transition(s0, "a", ActionKind::Normal, [(s0, rat(1, 1))]);
        match b.build() {
            Err(ModelError::Invalid(d)) => {
                let v: Vec<_> = d.iter().map(|d| d.violation).collect();
                assert!(v.contains(&Violation::ActionKindConflict));
                assert!(v.contains(&Violation::DuplicateTransition));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn objective_breaking_respects_strictness() {
        let strict = Objective::reach("G", rat(2, 5), true);
        assert!(strict.breaks(&rat(3, 5)));
        assert!(!strict.breaks(&rat(1, 2)));
        let weak = Objective::reach("G", rat(2, 5), false);
        assert!(!weak.breaks(&rat(3, 5)));
        assert!(weak.breaks(&rat(7, 10)));
    }

    #[test]
    fn target_must_be_sink() {
        let sgd = tiny().build().unwrap();
        assert!(Objective::reach("G", rat(1, 2), true).target_states(&sgd).is_ok());
        let mut b = tiny();
        let s0 = b.find_state("s0").unwrap();
        b.label(s0, "B");
        let sgd = b.build().unwrap();
        assert!(matches!(
            Objective::safety("B", rat(1, 2), true).target_states(&sgd),
            Err(ModelError::NotSink { .. })
        ));
        let (fixed, rewritten) = make_labeled_sinks(&sgd, &["B"]);
        assert_eq!(rewritten, vec!["s0".to_string()]);
        assert!(Objective::safety("B", rat(1, 2), true).target_states(&fixed).is_ok());
    }

    #[test]
    fn breaking_point_order() {
        let f2 = BreakingPoint::finite(rat(2, 1));
        let f3 = BreakingPoint::finite(rat(3, 1));
        assert_eq!(compare_breaking_points(&f2, &f3), Ordering::Less);
        let w = BreakingPoint::omega(rat(3, 10));
        let f100 = BreakingPoint::finite(rat(100, 1));
        assert_eq!(compare_breaking_points(&w, &f100), Ordering::Greater);
        let u = BreakingPoint::<Rational>::unbreakable();
        assert_eq!(compare_breaking_points(&u, &BreakingPoint::omega(rat(1, 1))), Ordering::Greater);
        assert!(w.is_coherent() && u.is_coherent() && f2.is_coherent());
        let bad = BreakingPoint {
            transient: ExtendedCount::Finite(rat(1, 1)),
            frequency: Frequency::Value(rat(1, 2)),
        };
        assert!(!bad.is_coherent());
    }

    #[test]
    fn strategy_totality() {
        let sgd = tiny().build().unwrap();
        let pi = Strategy::first_action(&sgd);
        assert!(pi.check(&sgd).is_ok());
        let empty = Strategy::pure_memoryless(StrategyOwner::Player1, []);
        assert!(matches!(empty.check(&sgd), Err(StrategyError::Missing(_))));
        let bad = Strategy::pure_memoryless(StrategyOwner::Player1, [(StateId(0), ActionId::BOTTOM)]);
        assert!(matches!(bad.check(&sgd), Err(StrategyError::IllegalAction { .. })));
    }
}
