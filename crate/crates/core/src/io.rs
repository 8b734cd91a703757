//! JSON documents for models, strategies and results.
//!
//! Probabilities and values travel as strings (`"1/3"`, `"0.25"`) so exact rationals
//! survive serialization. Unknown fields are rejected.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{
    make_labeled_sinks, validate, ActionId, ActionKind, BreakingPoint, Diagnostic, Distribution, ExtendedCount, Frequency,
    Memory, Player, Severity, Sgd, SgdBuilder, StateId, Strategy, StrategyError, StrategyOwner,
};
use crate::numeric::{format_rational, parse_rational, Rational, Scalar};

pub const MODEL_VERSION: &str = "1";

#[derive(Debug, Error, PartialEq)]
pub enum IoError {
    #[error("parse error at {location}: {message}")]
    Parse { location: String, message: String },
    #[error("model rejected: {}", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
    Validation(Vec<Diagnostic>),
    #[error("strategy incompatible with model: {0}")]
    StrategyIncompatible(String),
}

impl IoError {
    fn parse(location: impl Into<String>, message: impl Into<String>) -> Self {
        IoError::Parse { location: location.into(), message: message.into() }
    }
}

impl From<serde_json::Error> for IoError {
    fn from(e: serde_json::Error) -> Self {
        IoError::parse(format!("line {} column {}", e.line(), e.column()), e.to_string())
    }
}

impl From<StrategyError> for IoError {
    fn from(e: StrategyError) -> Self {
        IoError::StrategyIncompatible(e.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateDocument {
    pub id: String,
    pub player: u8,
    #[serde(default)]
    pub labels: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightDocument {
    pub state: String,
    pub prob: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KindDocument {
    Normal,
    Disturbance,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransitionDocument {
    pub from: String,
    pub action: String,
    pub kind: KindDocument,
    pub to: Vec<WeightDocument>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelDocument {
    pub version: String,
    pub states: Vec<StateDocument>,
    pub transitions: Vec<TransitionDocument>,
    pub initial: Vec<WeightDocument>,
}

/// A choice is an action name or a map from action names to probabilities.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ChoiceDocument {
    Action(String),
    Mixed(BTreeMap<String, String>),
}

/// Keys are `"s"` for memoryless rules or `"(s,c)"` with counter `c`.
pub type StrategyDocument = BTreeMap<String, ChoiceDocument>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WitnessDocument {
    pub player2: StrategyDocument,
    pub disturber: StrategyDocument,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResultDocument {
    pub semantics: String,
    /// A number, `"omega"` or `"unbreakable"`.
    pub transient: String,
    /// A number or `"unbreakable"`.
    pub frequency: String,
    pub attained: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub case: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub method: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub strategy: Option<StrategyDocument>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<WitnessDocument>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub level_values: Vec<String>,
    #[serde(default)]
    pub diagnostics: Vec<String>,
}

fn prob(text: &str, location: &str) -> Result<Rational, IoError> {
    parse_rational(text).map_err(|e| IoError::parse(location, e.to_string()))
}

pub fn model_from_document(doc: &ModelDocument) -> Result<Sgd, IoError> {
    if doc.version != MODEL_VERSION {
        return Err(IoError::parse("version", format!("unsupported version `{}`", doc.version)));
    }
    let mut b = SgdBuilder::new();
    for (i, st) in doc.states.iter().enumerate() {
        let owner = match st.player {
            1 => Player::One,
            2 => Player::Two,
            p => return Err(IoError::parse(format!("states[{i}].player"), format!("player must be 1 or 2, found {p}"))),
        };
        if b.find_state(&st.id).is_some() {
            return Err(IoError::parse(format!("states[{i}].id"), format!("duplicate state `{}`", st.id)));
        }
        let s = b.state(&st.id, owner);
        for l in &st.labels {
            b.label(s, l);
        }
    }
    let lookup = |b: &SgdBuilder, name: &str, location: String| {
        b.find_state(name).ok_or_else(|| IoError::parse(location, format!("unknown state `{name}`")))
    };
    for (i, t) in doc.transitions.iter().enumerate() {
        let from = lookup(&b, &t.from, format!("transitions[{i}].from"))?;
        let mut pairs = Vec::new();
        for (j, w) in t.to.iter().enumerate() {
            let loc = format!("transitions[{i}].to[{j}]");
            pairs.push((lookup(&b, &w.state, format!("{loc}.state"))?, prob(&w.prob, &format!("{loc}.prob"))?));
        }
        let kind = match t.kind {
            KindDocument::Normal => ActionKind::Normal,
            KindDocument::Disturbance => ActionKind::Disturbance,
        };
        b.transition(from, &t.action, kind, pairs);
    }
    let mut init = Vec::new();
    for (j, w) in doc.initial.iter().enumerate() {
        let loc = format!("initial[{j}]");
        init.push((lookup(&b, &w.state, format!("{loc}.state"))?, prob(&w.prob, &format!("{loc}.prob"))?));
    }
    b.initial(init);
    b.build().map_err(|e| match e {
        crate::model::ModelError::Invalid(d) => IoError::Validation(d),
        other => IoError::parse("model", other.to_string()),
    })
}

pub fn parse_model(text: &str) -> Result<Sgd, IoError> {
    model_from_document(&serde_json::from_str(text)?)
}

/// Parses a model and rewrites states carrying one of `sink_labels` into sinks; returns
/// the names of rewritten states.
pub fn parse_model_with_sinks(text: &str, sink_labels: &[&str]) -> Result<(Sgd, Vec<String>), IoError> {
    let sgd = parse_model(text)?;
    let (sgd, rewritten) = make_labeled_sinks(&sgd, sink_labels);
    let errors: Vec<Diagnostic> = validate(&sgd).into_iter().filter(|d| d.severity == Severity::Error).collect();
    if !errors.is_empty() {
        return Err(IoError::Validation(errors));
    }
    Ok((sgd, rewritten))
}

fn weights(sgd: &Sgd, d: &Distribution<StateId>) -> Vec<WeightDocument> {
    d.iter()
        .map(|(s, p)| WeightDocument { state: sgd.state_name(*s).to_string(), prob: format_rational(p) })
        .collect()
}

pub fn model_to_document(sgd: &Sgd) -> ModelDocument {
    ModelDocument {
        version: MODEL_VERSION.to_string(),
        states: sgd
            .states()
            .map(|s| StateDocument {
                id: sgd.state_name(s).to_string(),
                player: if sgd.owner(s) == Player::One { 1 } else { 2 },
                labels: sgd.labels_of(s).into_iter().map(str::to_string).collect(),
            })
            .collect(),
        transitions: sgd
            .states()
            .flat_map(|s| {
                let normal = sgd.normal(s).iter().map(move |t| (s, t, KindDocument::Normal));
                normal.chain(sgd.disturbances(s).iter().map(move |t| (s, t, KindDocument::Disturbance)))
            })
            .map(|(s, t, kind)| TransitionDocument {
                from: sgd.state_name(s).to_string(),
                action: sgd.action_name(t.action).to_string(),
                kind,
                to: weights(sgd, &t.dist),
            })
            .collect(),
        initial: weights(sgd, sgd.initial()),
    }
}

pub fn serialize_model(sgd: &Sgd) -> String {
    to_pretty(&model_to_document(sgd))
}

pub fn to_pretty<T: Serialize>(doc: &T) -> String {
    let mut s = serde_json::to_string_pretty(doc).expect("documents serialize");
    s.push('\n');
    s
}

fn split_key(key: &str) -> Option<(&str, usize)> {
    let inner = key.strip_prefix('(')?.strip_suffix(')')?;
    let (s, c) = inner.rsplit_once(',')?;
    Some((s.trim(), c.trim().parse().ok()?))
}

fn action_of(sgd: &Sgd, owner: StrategyOwner, name: &str) -> Option<ActionId> {
    match owner {
        StrategyOwner::Player1 | StrategyOwner::Player2 => sgd.action_by_name(name, ActionKind::Normal),
        StrategyOwner::Disturber => sgd
            .any_action_by_name(name)
            .filter(|a| !matches!(a.kind, ActionKind::Normal)),
    }
}

pub fn strategy_from_document(doc: &StrategyDocument, sgd: &Sgd, owner: StrategyOwner) -> Result<Strategy, IoError> {
    let mut rule = BTreeMap::new();
    let mut counted = None;
    for (key, choice) in doc {
        let (name, counter) = match split_key(key) {
            Some((n, c)) if sgd.state_by_name(key).is_none() => (n, Some(c)),
            _ => (key.as_str(), None),
        };
        if counted.is_some_and(|c| c != counter.is_some()) {
            return Err(IoError::StrategyIncompatible("keys mix `s` and `(s,c)` forms".into()));
        }
        counted = Some(counter.is_some());
        let s = sgd
            .state_by_name(name)
            .ok_or_else(|| IoError::StrategyIncompatible(format!("unknown state `{name}`")))?;
        let illegal = |a: &str| IoError::StrategyIncompatible(format!("action `{a}` is not available in state `{name}`"));
        let dist = match choice {
            ChoiceDocument::Action(a) => Distribution::dirac(action_of(sgd, owner, a).ok_or_else(|| illegal(a))?),
            ChoiceDocument::Mixed(m) => {
                let mut pairs = Vec::new();
                for (a, p) in m {
                    pairs.push((action_of(sgd, owner, a).ok_or_else(|| illegal(a))?, prob(p, key)?));
                }
                Distribution::from_pairs(pairs)
            }
        };
        rule.insert((s, counter.unwrap_or(0)), dist);
    }
    let memory = match counted {
        Some(true) => Memory::StepCounting(rule.keys().map(|(_, c)| *c).max().unwrap_or(0)),
        _ => Memory::Memoryless,
    };
    let st = Strategy::new(owner, memory, rule);
    st.check(sgd)?;
    Ok(st)
}

pub fn parse_strategy(text: &str, sgd: &Sgd) -> Result<Strategy, IoError> {
    parse_strategy_for(text, sgd, StrategyOwner::Player1)
}

pub fn parse_strategy_for(text: &str, sgd: &Sgd, owner: StrategyOwner) -> Result<Strategy, IoError> {
    strategy_from_document(&serde_json::from_str(text)?, sgd, owner)
}

pub fn strategy_to_document(st: &Strategy, sgd: &Sgd) -> StrategyDocument {
    st.rule()
        .iter()
        .map(|(&(s, c), d)| {
            let key = match st.memory {
                Memory::Memoryless => sgd.state_name(s).to_string(),
                Memory::StepCounting(_) => format!("({},{c})", sgd.state_name(s)),
            };
            let choice = match d.as_dirac() {
                Some(a) => ChoiceDocument::Action(sgd.action_name(*a).to_string()),
                None => ChoiceDocument::Mixed(
                    d.iter().map(|(a, p)| (sgd.action_name(*a).to_string(), format_rational(p))).collect(),
                ),
            };
            (key, choice)
        })
        .collect()
}

pub fn serialize_strategy(st: &Strategy, sgd: &Sgd) -> String {
    to_pretty(&strategy_to_document(st, sgd))
}

pub const OMEGA: &str = "omega";
pub const UNBREAKABLE: &str = "unbreakable";

/// Text form of a value: canonical rational in exact mode, shortest round-trip decimal
/// otherwise.
pub fn format_value<N: Scalar>(v: &N) -> String {
    if N::EXACT {
        format_rational(&v.to_rational())
    } else {
        format!("{}", v.to_f64())
    }
}

/// Transient and frequency fields of a breaking point.
pub fn breaking_point_fields<N: Scalar>(bp: &BreakingPoint<N>) -> (String, String) {
    let transient = match &bp.transient {
        ExtendedCount::Finite(x) => format_value(x),
        ExtendedCount::Omega => OMEGA.to_string(),
        ExtendedCount::Unbreakable => UNBREAKABLE.to_string(),
    };
    let frequency = match &bp.frequency {
        Frequency::Value(f) => format_value(f),
        Frequency::Unbreakable => UNBREAKABLE.to_string(),
    };
    (transient, frequency)
}

/// Reads the breaking point back from a result document (exact values).
pub fn breaking_point_of(doc: &ResultDocument) -> Result<BreakingPoint<Rational>, IoError> {
    let transient = match doc.transient.as_str() {
        OMEGA => ExtendedCount::Omega,
        UNBREAKABLE => ExtendedCount::Unbreakable,
        t => ExtendedCount::Finite(prob(t, "transient")?),
    };
    let frequency = match doc.frequency.as_str() {
        UNBREAKABLE => Frequency::Unbreakable,
        f => Frequency::Value(prob(f, "frequency")?),
    };
    let bp = BreakingPoint { transient, frequency };
    if !bp.is_coherent() {
        return Err(IoError::parse("frequency", "frequency does not match the transient value"));
    }
    Ok(bp)
}

pub fn parse_result(text: &str) -> Result<ResultDocument, IoError> {
    let doc: ResultDocument = serde_json::from_str(text)?;
    if doc.semantics != "expected" && doc.semantics != "worst" {
        return Err(IoError::parse("semantics", format!("unknown semantics `{}`", doc.semantics)));
    }
    breaking_point_of(&doc)?;
    Ok(doc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::numeric::rat;

    #[test]
    fn fixture_text_parses_to_the_same_model() {
        let f = fixtures::fig4();
        let text = serialize_model(&f.model);
        let back = parse_model(&text).unwrap();
        assert_eq!(back.num_states(), 4);
        let disturbance_actions = back.action_infos().iter().filter(|a| a.kind == ActionKind::Disturbance).count();
        assert_eq!(disturbance_actions, 1);
        assert_eq!(serialize_model(&back), text);
    }

    #[test]
    fn thirds_stay_exact() {
        let text = r#"{"version":"1",
            "states":[{"id":"a","player":1},{"id":"b","player":2,"labels":["G"]}],
            "transitions":[
              {"from":"a","action":"x","kind":"normal","to":[{"state":"a","prob":"1/3"},{"state":"b","prob":"1/3"},{"state":"b","prob":"1/3"}]},
              {"from":"b","action":"x","kind":"normal","to":[{"state":"b","prob":"1"}]}],
            "initial":[{"state":"a","prob":"1"}]}"#;
        let sgd = parse_model(text).unwrap();
        let a = sgd.state_by_name("a").unwrap();
        let b = sgd.state_by_name("b").unwrap();
        assert_eq!(sgd.normal(a)[0].dist.prob(&b), rat(2, 3));
    }

    #[test]
    fn unknown_references_and_fields_are_rejected() {
        let text = r#"{"version":"1","states":[{"id":"a","player":1}],
            "transitions":[{"from":"a","action":"x","kind":"normal","to":[{"state":"zz","prob":"1"}]}],
            "initial":[{"state":"a","prob":"1"}]}"#;
        let err = parse_model(text).unwrap_err();
        assert!(err.to_string().contains("`zz`"), "{err}");
        let err = parse_model(r#"{"version":"1","states":[],"transitions":[],"initial":[],"extra":1}"#).unwrap_err();
        assert!(matches!(err, IoError::Parse { .. }), "{err}");
    }

    #[test]
    fn labeled_states_become_sinks_on_request() {
        let text = r#"{"version":"1",
            "states":[{"id":"a","player":1},{"id":"g","player":1,"labels":["G"]}],
            "transitions":[
              {"from":"a","action":"x","kind":"normal","to":[{"state":"g","prob":"1"}]},
              {"from":"g","action":"x","kind":"normal","to":[{"state":"a","prob":"1"}]}],
            "initial":[{"state":"a","prob":"1"}]}"#;
        let (sgd, rewritten) = parse_model_with_sinks(text, &["G"]).unwrap();
        assert_eq!(rewritten, vec!["g".to_string()]);
        assert!(sgd.is_sink(sgd.state_by_name("g").unwrap()));
    }

    #[test]
    fn strategy_documents() {
        let f = fixtures::fig6_right();
        let st = parse_strategy(&serialize_strategy(&f.strategy, &f.model), &f.model).unwrap();
        assert_eq!(st, f.strategy);

        let f = fixtures::fig6_left();
        let text = r#"{"(s0,0)":"a","(s0,1)":"a","(s1,0)":"a2","(s1,1)":"a1",
            "(s2,0)":"a","(s2,1)":"a","(s3,0)":"a","(s3,1)":"a"}"#;
        let st = parse_strategy(text, &f.model).unwrap();
        assert_eq!(st.memory, Memory::StepCounting(1));
        let err = parse_strategy(r#"{"s0":"a","s1":"a1","s2":"a"}"#, &f.model).unwrap_err();
        assert!(matches!(err, IoError::StrategyIncompatible(_)), "{err}");
        let err = parse_strategy(r#"{"s0":"a","s1":"nope","s2":"a","s3":"a"}"#, &f.model).unwrap_err();
        assert!(err.to_string().contains("nope"), "{err}");
    }

    #[test]
    fn result_fields_follow_breaking_points() {
        let (t, f) = breaking_point_fields(&BreakingPoint::finite(rat(6, 5)));
        assert_eq!((t.as_str(), f.as_str()), ("6/5", "0"));
        let (t, f) = breaking_point_fields(&BreakingPoint::<Rational>::unbreakable());
        assert_eq!((t.as_str(), f.as_str()), (UNBREAKABLE, UNBREAKABLE));
        let doc = ResultDocument {
            semantics: "worst".into(),
            transient: OMEGA.into(),
            frequency: "10/19".into(),
            attained: true,
            case: None,
            method: None,
            strategy: None,
            witness: None,
            level_values: vec![],
            diagnostics: vec![],
        };
        let back = parse_result(&to_pretty(&doc)).unwrap();
        assert_eq!(breaking_point_of(&back).unwrap(), BreakingPoint::omega(rat(10, 19)));
    }
}
