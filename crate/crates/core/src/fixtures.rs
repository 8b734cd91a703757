//! Small named models used as worked examples, regression tests and CLI shortcuts.

use std::collections::BTreeMap;

use crate::model::{ActionKind, Objective, Player, Sgd, SgdBuilder, StateId, Strategy};
use crate::numeric::{rat, Rational};

/// A model together with an objective and a default Player-1 strategy.
#[derive(Debug, Clone)]
pub struct Fixture {
    pub name: &'static str,
    pub model: Sgd,
    pub objective: Objective,
    pub strategy: Strategy,
}

pub fn all() -> BTreeMap<&'static str, Fixture> {
    [fig4(), fig6_left(), fig6_right(), freq19(), nodist(), two_mec()]
        .into_iter()
        .map(|f| (f.name, f))
        .collect()
}

pub fn by_name(name: &str) -> Option<Fixture> {
    all().remove(name)
}

fn one() -> Rational {
    rat(1, 1)
}

fn sinks(b: &mut SgdBuilder, names: &[&str]) -> Vec<StateId> {
    names
        .iter()
        .map(|n| {
            let s = b.state(n, Player::Two);
            b.self_loop(s, "a");
            b.label(s, n);
            s
        })
        .collect()
}

/// Two Player-1 states in sequence; each can be pushed toward the bad sink.
/// Objective: reach G with probability > 2/5.
pub fn fig4() -> Fixture {
    let mut b = SgdBuilder::new();
    let s0 = b.state("s0", Player::One);
    let s1 = b.state("s1", Player::One);
    let [g, bad] = sinks(&mut b, &["G", "B"])[..] else { unreachable!() };
    b.transition(s0, "a", ActionKind::Normal, [(g, one())]);
    b.transition(s0, "d", ActionKind::Disturbance, [(s1, rat(1, 2)), (bad, rat(1, 2))]);
    b.transition(s1, "a", ActionKind::Normal, [(g, one())]);
    b.transition(s1, "d", ActionKind::Disturbance, [(g, rat(1, 2)), (bad, rat(1, 2))]);
    b.initial([(s0, one())]);
    let model = b.build().expect("fixture is valid");
    let strategy = Strategy::named_action(&model, "a");
    Fixture {
        name: "FIG4",
        model,
        objective: Objective::reach("G", rat(2, 5), true),
        strategy,
    }
}

/// Two initial states with probability 1/2 each; Player 1 needs to remember whether a
/// disturbance already happened. Objective: reach G with probability >= 3/4.
pub fn fig6_left() -> Fixture {
    let mut b = SgdBuilder::new();
    let s0 = b.state("s0", Player::One);
    let s1 = b.state("s1", Player::One);
    let s2 = b.state("s2", Player::One);
    let s3 = b.state("s3", Player::One);
    let [g, bad] = sinks(&mut b, &["G", "B"])[..] else { unreachable!() };
    b.transition(s0, "a", ActionKind::Normal, [(g, one())]);
    b.transition(s0, "d", ActionKind::Disturbance, [(s1, one())]);
    b.transition(s1, "a1", ActionKind::Normal, [(s2, one())]);
    b.transition(s1, "a2", ActionKind::Normal, [(s3, one())]);
    b.transition(s2, "a", ActionKind::Normal, [(g, rat(1, 2)), (bad, rat(1, 2))]);
    b.transition(s3, "a", ActionKind::Normal, [(g, one())]);
    b.transition(s3, "d", ActionKind::Disturbance, [(bad, one())]);
    b.initial([(s0, rat(1, 2)), (s1, rat(1, 2))]);
    let model = b.build().expect("fixture is valid");
    let strategy = Strategy::named_action(&model, "a");
    Fixture {
        name: "FIG6L",
        model,
        objective: Objective::reach("G", rat(3, 4), false),
        strategy,
    }
}

/// A cycle s1 -> s2 -> s3 -> s1 that an adversary can walk only by disturbing.
/// Objective: reach G with probability >= 1/2.
pub fn fig6_right() -> Fixture {
    let mut b = SgdBuilder::new();
    let s1 = b.state("s1", Player::One);
    let s2 = b.state("s2", Player::One);
    let s3 = b.state("s3", Player::One);
    let [g, bad] = sinks(&mut b, &["G", "B"])[..] else { unreachable!() };
    b.transition(s1, "a", ActionKind::Normal, [(s2, one())]);
    b.transition(s1, "d", ActionKind::Disturbance, [(g, rat(1, 2)), (bad, rat(1, 2))]);
    b.transition(s2, "a", ActionKind::Normal, [(g, one())]);
    b.transition(s2, "d", ActionKind::Disturbance, [(s3, one())]);
    b.transition(s3, "a", ActionKind::Normal, [(g, one())]);
    b.transition(s3, "d", ActionKind::Disturbance, [(bad, rat(1, 2)), (s1, rat(1, 2))]);
    b.initial([(s1, one())]);
    let model = b.build().expect("fixture is valid");
    let strategy = Strategy::named_action(&model, "a");
    Fixture {
        name: "FIG6R",
        model,
        objective: Objective::reach("G", rat(1, 2), false),
        strategy,
    }
}

/// Avoiding G forever requires disturbing s1 on every visit; s1 holds 10/19 of the
/// long-run mass. Objective: reach G with positive probability.
pub fn freq19() -> Fixture {
    let mut b = SgdBuilder::new();
    let s1 = b.state("s1", Player::One);
    let s2 = b.state("s2", Player::One);
    let [g] = sinks(&mut b, &["G"])[..] else { unreachable!() };
    b.transition(s1, "a", ActionKind::Normal, [(g, one())]);
    b.transition(s1, "d", ActionKind::Disturbance, [(s1, rat(1, 10)), (s2, rat(9, 10))]);
    b.transition(s2, "a", ActionKind::Normal, [(s1, one())]);
    b.initial([(s1, one())]);
    let model = b.build().expect("fixture is valid");
    let strategy = Strategy::named_action(&model, "a");
    Fixture {
        name: "FREQ19",
        model,
        objective: Objective::reach("G", rat(0, 1), true),
        strategy,
    }
}

/// The chain s0 -> s1 -> G without any disturbance.
pub fn nodist() -> Fixture {
    let mut b = SgdBuilder::new();
    let s0 = b.state("s0", Player::One);
    let s1 = b.state("s1", Player::One);
    let [g] = sinks(&mut b, &["G"])[..] else { unreachable!() };
    b.transition(s0, "a", ActionKind::Normal, [(s1, one())]);
    b.transition(s1, "a", ActionKind::Normal, [(g, one())]);
    b.initial([(s0, one())]);
    let model = b.build().expect("fixture is valid");
    let strategy = Strategy::named_action(&model, "a");
    Fixture {
        name: "NODIST",
        model,
        objective: Objective::reach("G", rat(1, 2), true),
        strategy,
    }
}

/// Two disturbance loops entered with probability 1/2 each, with stay frequencies 3/10
/// and 3/5. Objective: reach G with positive probability.
pub fn two_mec() -> Fixture {
    let mut b = SgdBuilder::new();
    let x = b.state("x", Player::Two);
    let u1 = b.state("u1", Player::One);
    let v1 = b.state("v1", Player::One);
    let v2 = b.state("v2", Player::One);
    let v3 = b.state("v3", Player::One);
    let u2 = b.state("u2", Player::One);
    let w = b.state("w", Player::One);
    let [g] = sinks(&mut b, &["G"])[..] else { unreachable!() };
    b.transition(x, "go", ActionKind::Normal, [(u1, rat(1, 2)), (u2, rat(1, 2))]);
    b.transition(u1, "a", ActionKind::Normal, [(g, one())]);
    b.transition(u1, "d", ActionKind::Disturbance, [(u1, rat(2, 9)), (v1, rat(7, 9))]);
    b.transition(v1, "a", ActionKind::Normal, [(v2, one())]);
    b.transition(v2, "a", ActionKind::Normal, [(v3, one())]);
    b.transition(v3, "a", ActionKind::Normal, [(u1, one())]);
    b.transition(u2, "a", ActionKind::Normal, [(g, one())]);
    b.transition(u2, "d", ActionKind::Disturbance, [(u2, rat(1, 3)), (w, rat(2, 3))]);
    b.transition(w, "a", ActionKind::Normal, [(u2, one())]);
    b.initial([(x, one())]);
    let model = b.build().expect("fixture is valid");
    let strategy = Strategy::named_action(&model, "a");
    Fixture {
        name: "TWOMEC",
        model,
        objective: Objective::reach("G", rat(0, 1), true),
        strategy,
    }
}
