//! Flat solver view of a game: states, owners and numbered choices with costs.
//!
//! Every graph algorithm and solver works on an [`Arena`]. An MDP is an arena in which a
//! single agent resolves all choices regardless of the recorded owner.

use std::collections::BTreeSet;


use crate::model::{ActionId, CostFunction, Player, Sgd, StateId, Strategy, StrategyError};
use crate::numeric::{Rational, Scalar};

#[derive(Debug, Clone, PartialEq)]
pub struct Choice<N> {
    /// Model action behind this choice. In induced MDPs the Player-1 choice is `⊥`.
    pub action: ActionId,
    pub cost: N,
    pub disturbance: bool,
    pub succ: Vec<(usize, N)>,
}

impl<N: Scalar> Choice<N> {
    pub fn successors(&self) -> impl Iterator<Item = usize> + '_ {
        self.succ.iter().map(|(t, _)| *t)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Arena<N> {
    pub owner: Vec<Player>,
    pub names: Vec<String>,
    /// Model state each arena state stems from.
    pub origin: Vec<StateId>,
    pub choices: Vec<Vec<Choice<N>>>,
    pub initial: Vec<(usize, N)>,
    /// States whose move takes no time for long-run averages (selection states of the
    /// gadget game).
    pub instant: Vec<bool>,
}

fn convert<N: Scalar>(d: &crate::model::Distribution<StateId>) -> Vec<(usize, N)> {
    d.iter().map(|(t, p)| (t.0, N::from_rational(p))).collect()
}

impl<N: Scalar> Arena<N> {
    pub fn len(&self) -> usize {
        self.owner.len()
    }

    pub fn is_empty(&self) -> bool {
        self.owner.is_empty()
    }

    /// Game view of a model: normal and disturbance actions are choices of the owner.
    pub fn from_sgd(sgd: &Sgd, costs: &CostFunction) -> Self {
        let mut arena = Self::skeleton(sgd);
        for s in sgd.states() {
            for t in sgd.normal(s).iter().chain(sgd.disturbances(s)) {
                arena.choices[s.0].push(Choice {
                    action: t.action,
                    cost: N::from_rational(&costs.get(s, t.action)),
                    disturbance: t.action.is_disturbance(),
                    succ: convert(&t.dist),
                });
            }
        }
        arena
    }

    /// The induced MDP of a memoryless (possibly randomised) Player-1 strategy. Player-1
    /// states offer `⊥` (follow the strategy, cost 0) and every disturbance (cost 1).
    pub fn induced(sgd: &Sgd, pi: &Strategy) -> Result<Self, StrategyError> {
        pi.check(sgd)?;
        let mut arena = Self::skeleton(sgd);
        for s in sgd.states() {
            match sgd.owner(s) {
                Player::One => {
                    let choice = pi
                        .choice(s, 0)
                        .ok_or_else(|| StrategyError::Missing(sgd.state_name(s).to_string()))?;
                    let mut succ: Vec<(usize, Rational)> = Vec::new();
                    for (a, pa) in choice.iter() {
                        for (t, p) in sgd.transition(s, *a).expect("checked strategy").iter() {
                            let w = pa * p;
                            match succ.iter_mut().find(|(u, _)| *u == t.0) {
                                Some(e) => e.1 += w,
                                None => succ.push((t.0, w)),
                            }
                        }
                    }
                    succ.sort_by_key(|e| e.0);
                    arena.choices[s.0].push(Choice {
                        action: ActionId::BOTTOM,
                        cost: N::zero(),
                        disturbance: false,
                        succ: succ.iter().map(|(t, p)| (*t, N::from_rational(p))).collect(),
                    });
                    for t in sgd.disturbances(s) {
                        arena.choices[s.0].push(Choice {
                            action: t.action,
                            cost: N::one(),
                            disturbance: true,
                            succ: convert(&t.dist),
                        });
                    }
                }
                Player::Two => {
                    for t in sgd.normal(s) {
                        arena.choices[s.0].push(Choice {
                            action: t.action,
                            cost: N::zero(),
                            disturbance: false,
                            succ: convert(&t.dist),
                        });
                    }
                }
            }
        }
        Ok(arena)
    }

    fn skeleton(sgd: &Sgd) -> Self {
        let n = sgd.num_states();
        Arena {
            owner: sgd.states().map(|s| sgd.owner(s)).collect(),
            names: sgd.states().map(|s| sgd.state_name(s).to_string()).collect(),
            origin: sgd.states().collect(),
            choices: vec![Vec::new(); n],
            initial: convert(sgd.initial()),
            instant: vec![false; n],
        }
    }

    pub fn mask(&self, set: &BTreeSet<StateId>) -> Vec<bool> {
        let mut m = vec![false; self.len()];
        for s in set {
            m[s.0] = true;
        }
        m
    }

    /// Weighted sum of per-state values under the initial distribution.
    pub fn initial_value(&self, values: &[N]) -> N {
        self.initial
            .iter()
            .fold(N::zero(), |acc, (s, p)| acc + p.clone() * values[*s].clone())
    }

    /// Copy of the arena in which only choices accepted by `keep` remain.
    pub fn restrict(&self, keep: impl Fn(usize, usize) -> bool) -> Self {
        let mut out = self.clone();
        for (s, cs) in out.choices.iter_mut().enumerate() {
            let mut i = 0;
            cs.retain(|_| {
                let k = keep(s, i);
                i += 1;
                k
            });
        }
        out
    }

    pub fn map_scalar<M: Scalar>(&self, f: impl Fn(&N) -> M) -> Arena<M> {
        Arena {
            owner: self.owner.clone(),
            names: self.names.clone(),
            origin: self.origin.clone(),
            choices: self
                .choices
                .iter()
                .map(|cs| {
                    cs.iter()
                        .map(|c| Choice {
                            action: c.action,
                            cost: f(&c.cost),
                            disturbance: c.disturbance,
                            succ: c.succ.iter().map(|(t, p)| (*t, f(p))).collect(),
                        })
                        .collect()
                })
                .collect(),
            initial: self.initial.iter().map(|(t, p)| (*t, f(p))).collect(),
            instant: self.instant.clone(),
        }
    }

    pub fn has_positive_cost(&self) -> bool {
        self.choices.iter().flatten().any(|c| !c.cost.is_zero())
    }
}
