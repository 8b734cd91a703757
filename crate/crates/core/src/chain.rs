//! Markov chains induced by fixing all three strategies, with exact analysis by linear
//! algebra. These routines are independent of the LP-based solvers and double as oracles.

use std::collections::{BTreeMap, VecDeque};

use num_traits::{One, Zero};

use crate::graph::scc_ids;
use crate::model::{Memory, Player, Sgd, StateId, Strategy, StrategyError, StrategyOwner};
use crate::numeric::{solve_linear, Rational};

#[derive(Debug, Clone, PartialEq)]
pub struct ChainEdge {
    pub to: usize,
    pub prob: Rational,
    pub disturbance: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MarkovChain {
    /// Model state and remaining-disturbance counter of each chain state.
    pub states: Vec<(StateId, usize)>,
    pub edges: Vec<Vec<ChainEdge>>,
    pub initial: Vec<(usize, Rational)>,
}

/// Fixes Player 1, Player 2 and the disturber. Step-counting strategies must agree on the
/// counter bound `k`; the chain then tracks the remaining-disturbance counter starting at
/// `k`, which drops on every disturbance and saturates at 0.
pub fn induced_mc(sgd: &Sgd, pi: &Strategy, sigma: &Strategy, delta: &Strategy) -> Result<MarkovChain, StrategyError> {
    for (st, owner) in [(pi, StrategyOwner::Player1), (sigma, StrategyOwner::Player2), (delta, StrategyOwner::Disturber)] {
        if st.owner != owner {
            return Err(StrategyError::WrongOwner(format!("{:?} strategy", st.owner)));
        }
        st.check(sgd)?;
    }
    let mut k = None;
    for st in [pi, sigma, delta] {
        if let Memory::StepCounting(b) = st.memory {
            if k.is_some_and(|k| k != b) {
                return Err(StrategyError::IncompatibleBounds);
            }
            k = Some(b);
        }
    }
    let k = k.unwrap_or(0);

    let mut index: BTreeMap<(StateId, usize), usize> = BTreeMap::new();
    let mut chain = MarkovChain {
        states: Vec::new(),
        edges: Vec::new(),
        initial: Vec::new(),
    };
    let mut queue = VecDeque::new();
    let mut intern = |key: (StateId, usize), chain: &mut MarkovChain, queue: &mut VecDeque<usize>| {
        *index.entry(key).or_insert_with(|| {
            chain.states.push(key);
            chain.edges.push(Vec::new());
            queue.push_back(chain.states.len() - 1);
            chain.states.len() - 1
        })
    };
    for (s, p) in sgd.initial().iter() {
        let i = intern((*s, k), &mut chain, &mut queue);
        chain.initial.push((i, p.clone()));
    }
    while let Some(i) = queue.pop_front() {
        let (s, c) = chain.states[i];
        let mut out: Vec<((StateId, usize), Rational, bool)> = Vec::new();
        let missing = || StrategyError::Missing(sgd.state_name(s).to_string());
        match sgd.owner(s) {
            Player::One => {
                for (a, pa) in delta.choice(s, c).ok_or_else(missing)?.iter() {
                    if a.is_bottom() {
                        for (b, pb) in pi.choice(s, c).ok_or_else(missing)?.iter() {
                            for (t, p) in sgd.transition(s, *b).expect("checked").iter() {
                                out.push(((*t, c), pa * pb * p, false));
                            }
                        }
                    } else {
                        for (t, p) in sgd.transition(s, *a).expect("checked").iter() {
                            out.push(((*t, c.saturating_sub(1)), pa * p, true));
                        }
                    }
                }
            }
            Player::Two => {
                for (b, pb) in sigma.choice(s, c).ok_or_else(missing)?.iter() {
                    for (t, p) in sgd.transition(s, *b).expect("checked").iter() {
                        out.push(((*t, c), pb * p, false));
                    }
                }
            }
        }
        let mut merged: BTreeMap<(usize, bool), Rational> = BTreeMap::new();
        for (key, p, d) in out {
            let j = intern(key, &mut chain, &mut queue);
            *merged.entry((j, d)).or_insert_with(Rational::zero) += p;
        }
        chain.edges[i] = merged
            .into_iter()
            .map(|((to, disturbance), prob)| ChainEdge { to, prob, disturbance })
            .collect();
    }
    Ok(chain)
}

impl MarkovChain {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// Probability of taking a disturbance edge in one step.
    pub fn step_cost(&self, i: usize) -> Rational {
        self.edges[i]
            .iter()
            .filter(|e| e.disturbance)
            .fold(Rational::zero(), |acc, e| acc + &e.prob)
    }

    pub fn outgoing_mass(&self, i: usize) -> Rational {
        self.edges[i].iter().fold(Rational::zero(), |acc, e| acc + &e.prob)
    }

    pub fn initial_value(&self, values: &[Rational]) -> Rational {
        self.initial
            .iter()
            .fold(Rational::zero(), |acc, (s, p)| acc + p * &values[*s])
    }

    fn can_reach(&self, target: &[bool]) -> Vec<bool> {
        let mut r = target.to_vec();
        loop {
            let mut changed = false;
            for i in 0..self.len() {
                if !r[i] && self.edges[i].iter().any(|e| r[e.to]) {
                    r[i] = true;
                    changed = true;
                }
            }
            if !changed {
                return r;
            }
        }
    }

    /// Probability of eventually visiting a state accepted by `target`, per chain state.
    pub fn reach_probability(&self, target: impl Fn(StateId) -> bool) -> Vec<Rational> {
        let hit: Vec<bool> = self.states.iter().map(|(s, _)| target(*s)).collect();
        self.reach_probability_mask(&hit)
    }

    pub fn reach_probability_mask(&self, hit: &[bool]) -> Vec<Rational> {
        let n = self.len();
        let positive = self.can_reach(hit);
        let unknown: Vec<usize> = (0..n).filter(|&i| positive[i] && !hit[i]).collect();
        let pos: BTreeMap<usize, usize> = unknown.iter().enumerate().map(|(k, &i)| (i, k)).collect();
        let m = unknown.len();
        let mut a = vec![vec![Rational::zero(); m]; m];
        let mut b = vec![Rational::zero(); m];
        for (row, &i) in unknown.iter().enumerate() {
            a[row][row] += Rational::one();
            for e in &self.edges[i] {
                if hit[e.to] {
                    b[row] += &e.prob;
                } else if let Some(&col) = pos.get(&e.to) {
                    a[row][col] -= &e.prob;
                }
            }
        }
        let x = solve_linear(a, b).expect("absorption system is regular");
        (0..n)
            .map(|i| {
                if hit[i] {
                    Rational::one()
                } else if let Some(&k) = pos.get(&i) {
                    x[k].clone()
                } else {
                    Rational::zero()
                }
            })
            .collect()
    }

    /// Recurrent classes (bottom strongly connected components), sorted.
    pub fn bottom_sccs(&self) -> Vec<Vec<usize>> {
        let n = self.len();
        let comp = scc_ids(n, &vec![true; n], |i| self.edges[i].iter().map(|e| e.to).collect());
        let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (i, &c) in comp.iter().enumerate() {
            groups.entry(c).or_default().push(i);
        }
        let mut out: Vec<Vec<usize>> = groups
            .into_values()
            .filter(|g| g.iter().all(|&i| self.edges[i].iter().all(|e| comp[e.to] == comp[i])))
            .collect();
        out.sort();
        out
    }

    /// Stationary distribution of a recurrent class.
    pub fn stationary(&self, class: &[usize]) -> Vec<(usize, Rational)> {
        let m = class.len();
        let pos: BTreeMap<usize, usize> = class.iter().enumerate().map(|(k, &i)| (i, k)).collect();
        // Balance equations for all but the last state, then normalisation.
        let mut a = vec![vec![Rational::zero(); m]; m];
        for (col, &i) in class.iter().enumerate() {
            for e in &self.edges[i] {
                let row = pos[&e.to];
                if row + 1 < m {
                    a[row][col] += &e.prob;
                }
            }
        }
        for (row, a_row) in a.iter_mut().enumerate().take(m - 1) {
            a_row[row] -= Rational::one();
        }
        a[m - 1] = vec![Rational::one(); m];
        let mut b = vec![Rational::zero(); m];
        b[m - 1] = Rational::one();
        let x = solve_linear(a, b).expect("irreducible class");
        class.iter().copied().zip(x).collect()
    }

    /// Long-run average number of disturbances per step from the initial distribution.
    pub fn long_run_cost(&self) -> Rational {
        let mut total = Rational::zero();
        for class in self.bottom_sccs() {
            let mut hit = vec![false; self.len()];
            for &i in &class {
                hit[i] = true;
            }
            let p = self.initial_value(&self.reach_probability_mask(&hit));
            if p.is_zero() {
                continue;
            }
            let avg = self
                .stationary(&class)
                .iter()
                .fold(Rational::zero(), |acc, (i, w)| acc + w * self.step_cost(*i));
            total += p * avg;
        }
        total
    }

    /// Expected total number of disturbances, or `None` when it is infinite.
    pub fn expected_total_cost(&self) -> Option<Rational> {
        let n = self.len();
        let mut zero_cost_recurrent = vec![false; n];
        for class in self.bottom_sccs() {
            let mut hit = vec![false; n];
            for &i in &class {
                hit[i] = true;
            }
            let reachable = !self.initial_value(&self.reach_probability_mask(&hit)).is_zero();
            let costly = class.iter().any(|&i| !self.step_cost(i).is_zero());
            if costly && reachable {
                return None;
            }
            for &i in &class {
                zero_cost_recurrent[i] = true;
            }
        }
        // Transient states: y = c + P y with y = 0 on zero-cost recurrent states.
        let transient: Vec<usize> = (0..n).filter(|&i| !zero_cost_recurrent[i]).collect();
        let pos: BTreeMap<usize, usize> = transient.iter().enumerate().map(|(k, &i)| (i, k)).collect();
        let m = transient.len();
        let mut a = vec![vec![Rational::zero(); m]; m];
        let mut b = vec![Rational::zero(); m];
        for (row, &i) in transient.iter().enumerate() {
            a[row][row] += Rational::one();
            b[row] = self.step_cost(i);
            for e in &self.edges[i] {
                if let Some(&col) = pos.get(&e.to) {
                    a[row][col] -= &e.prob;
                }
            }
        }
        let y = solve_linear(a, b)?;
        let values: Vec<Rational> = (0..n)
            .map(|i| pos.get(&i).map(|&k| y[k].clone()).unwrap_or_else(Rational::zero))
            .collect();
        Some(self.initial_value(&values))
    }

    /// Largest number of disturbance edges on any path from the initial states, or `None`
    /// when a reachable cycle contains a disturbance edge.
    pub fn max_disturbances(&self) -> Option<usize> {
        let n = self.len();
        let comp = scc_ids(n, &vec![true; n], |i| self.edges[i].iter().map(|e| e.to).collect());
        for i in 0..n {
            if self.edges[i].iter().any(|e| e.disturbance && comp[e.to] == comp[i]) {
                return None;
            }
        }
        // Tarjan numbers components in reverse topological order, so successors come first.
        let ncomp = comp.iter().max().map_or(0, |m| m + 1);
        let mut best = vec![0usize; ncomp];
        let mut members: Vec<Vec<usize>> = vec![Vec::new(); ncomp];
        for (i, &c) in comp.iter().enumerate() {
            members[c].push(i);
        }
        for c in 0..ncomp {
            for &i in &members[c] {
                for e in &self.edges[i] {
                    if comp[e.to] != c {
                        best[c] = best[c].max(best[comp[e.to]] + usize::from(e.disturbance));
                    }
                }
            }
        }
        Some(self.initial.iter().map(|(i, _)| best[comp[*i]]).max().unwrap_or(0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::model::{ActionId, ActionKind, Distribution};
    use crate::numeric::rat;

    fn always_disturb(sgd: &Sgd) -> Strategy {
        Strategy::pure_memoryless(
            StrategyOwner::Disturber,
            sgd.player1_states()
                .map(|s| (s, sgd.disturbances(s).first().map_or(ActionId::BOTTOM, |t| t.action))),
        )
    }

    fn p2(sgd: &Sgd) -> Strategy {
        Strategy::first_choice(sgd, StrategyOwner::Player2)
    }

    #[test]
    fn fig4_undisturbed_reaches_goal() {
        let f = fixtures::fig4();
        let c = induced_mc(&f.model, &f.strategy, &p2(&f.model), &Strategy::never_disturb(&f.model)).unwrap();
        let g = f.model.state_by_name("G").unwrap();
        assert_eq!(c.initial_value(&c.reach_probability(|s| s == g)), rat(1, 1));
        for i in 0..c.len() {
            assert_eq!(c.outgoing_mass(i), rat(1, 1));
        }
    }

    #[test]
    fn fig4_always_disturbed() {
        let f = fixtures::fig4();
        let c = induced_mc(&f.model, &f.strategy, &p2(&f.model), &always_disturb(&f.model)).unwrap();
        let g = f.model.state_by_name("G").unwrap();
        assert_eq!(c.initial_value(&c.reach_probability(|s| s == g)), rat(1, 4));
        assert_eq!(c.max_disturbances(), Some(2));
        assert_eq!(c.expected_total_cost(), Some(rat(3, 2)));
    }

    #[test]
    fn freq19_stationary_mass() {
        let f = fixtures::freq19();
        let c = induced_mc(&f.model, &f.strategy, &p2(&f.model), &always_disturb(&f.model)).unwrap();
        let classes = c.bottom_sccs();
        assert_eq!(classes.len(), 1);
        let s1 = f.model.state_by_name("s1").unwrap();
        let st = c.stationary(&classes[0]);
        let mass = st.iter().find(|(i, _)| c.states[*i].0 == s1).unwrap().1.clone();
        assert_eq!(mass, rat(10, 19));
        assert_eq!(c.long_run_cost(), rat(10, 19));
        assert_eq!(c.max_disturbances(), None);
        assert_eq!(c.expected_total_cost(), None);
    }

    #[test]
    fn step_counting_disturber_tracks_counter() {
        let f = fixtures::fig6_right();
        let m = &f.model;
        let d = m.action_by_name("d", ActionKind::Disturbance).unwrap();
        let s = |n: &str| m.state_by_name(n).unwrap();
        let mut rule = BTreeMap::new();
        for st in ["s1", "s2", "s3"] {
            for c in 0..=3 {
                let a = match (st, c) {
                    (_, 0) | ("s1", 3) => ActionId::BOTTOM,
                    _ => d,
                };
                rule.insert((s(st), c), Distribution::dirac(a));
            }
        }
        let delta = Strategy::new(StrategyOwner::Disturber, Memory::StepCounting(3), rule);
        let c = induced_mc(m, &f.strategy, &p2(m), &delta).unwrap();
        let g = s("G");
        assert_eq!(c.initial_value(&c.reach_probability(|x| x == g)), rat(1, 4));
        assert_eq!(c.max_disturbances(), Some(3));
    }
}
