//! Qualitative analysis: SCCs, maximal end components, and the state sets driving the
//! breaking-point case analysis.

use std::collections::{BTreeMap, BTreeSet};

use crate::arena::{Arena, Choice};
use crate::model::Player;
use crate::numeric::Scalar;

/// A maximal end component: member states and, per state, the indices of the choices
/// that keep the play inside.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Mec {
    pub states: BTreeSet<usize>,
    pub choices: BTreeMap<usize, Vec<usize>>,
}

/// Tarjan's algorithm restricted to `alive` nodes. Returns a component id per node
/// (`usize::MAX` for dead nodes).
pub fn scc_ids(n: usize, alive: &[bool], succ: impl Fn(usize) -> Vec<usize>) -> Vec<usize> {
    const UNSEEN: usize = usize::MAX;
    let mut index = vec![UNSEEN; n];
    let mut low = vec![0; n];
    let mut on_stack = vec![false; n];
    let mut comp = vec![UNSEEN; n];
    let mut stack = Vec::new();
    let mut next_index = 0;
    let mut next_comp = 0;
    for root in 0..n {
        if !alive[root] || index[root] != UNSEEN {
            continue;
        }
        // Explicit DFS stack of (node, successors, position).
        let mut work: Vec<(usize, Vec<usize>, usize)> = vec![(root, succ(root), 0)];
        index[root] = next_index;
        low[root] = next_index;
        next_index += 1;
        stack.push(root);
        on_stack[root] = true;
        while let Some((v, ws, pos)) = work.last_mut() {
            let v = *v;
            if *pos < ws.len() {
                let w = ws[*pos];
                *pos += 1;
                if !alive[w] {
                    continue;
                }
                if index[w] == UNSEEN {
                    index[w] = next_index;
                    low[w] = next_index;
                    next_index += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    let sw = succ(w);
                    work.push((w, sw, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
            } else {
                work.pop();
                if let Some((parent, _, _)) = work.last() {
                    low[*parent] = low[*parent].min(low[v]);
                }
                if low[v] == index[v] {
                    loop {
                        let w = stack.pop().expect("tarjan stack");
                        on_stack[w] = false;
                        comp[w] = next_comp;
                        if w == v {
                            break;
                        }
                    }
                    next_comp += 1;
                }
            }
        }
    }
    comp
}

/// Maximal end components of the sub-arena given by the allowed states and choices,
/// computed by iterated SCC refinement. Sorted by smallest member state.
pub fn mec_decomposition_with<N: Scalar>(
    arena: &Arena<N>,
    allowed_state: &[bool],
    allowed_choice: impl Fn(usize, &Choice<N>) -> bool,
) -> Vec<Mec> {
    let n = arena.len();
    let mut alive: Vec<bool> = allowed_state.to_vec();
    let mut keep: Vec<Vec<bool>> = (0..n)
        .map(|s| {
            arena.choices[s]
                .iter()
                .map(|c| alive[s] && allowed_choice(s, c))
                .collect()
        })
        .collect();
    loop {
        let comp = scc_ids(n, &alive, |s| {
            arena.choices[s]
                .iter()
                .zip(&keep[s])
                .filter(|(_, k)| **k)
                .flat_map(|(c, _)| c.successors())
                .collect()
        });
        let mut changed = false;
        for s in 0..n {
            if !alive[s] {
                continue;
            }
            for (i, c) in arena.choices[s].iter().enumerate() {
                if keep[s][i] && c.successors().any(|t| !alive[t] || comp[t] != comp[s]) {
                    keep[s][i] = false;
                    changed = true;
                }
            }
            if !keep[s].iter().any(|k| *k) {
                alive[s] = false;
                changed = true;
            }
        }
        if !changed {
            let mut by_comp: BTreeMap<usize, Mec> = BTreeMap::new();
            for s in (0..n).filter(|&s| alive[s]) {
                let m = by_comp.entry(comp[s]).or_insert_with(|| Mec {
                    states: BTreeSet::new(),
                    choices: BTreeMap::new(),
                });
                m.states.insert(s);
                m.choices.insert(
                    s,
                    (0..keep[s].len()).filter(|&i| keep[s][i]).collect(),
                );
            }
            let mut mecs: Vec<Mec> = by_comp.into_values().collect();
            mecs.sort();
            return mecs;
        }
    }
}

pub fn mec_decomposition<N: Scalar>(arena: &Arena<N>) -> Vec<Mec> {
    mec_decomposition_with(arena, &vec![true; arena.len()], |_, _| true)
}

/// Whether `set` together with the allowed choices staying inside forms an end component.
pub fn is_end_component<N: Scalar>(
    arena: &Arena<N>,
    set: &BTreeSet<usize>,
    allowed_choice: impl Fn(usize, &Choice<N>) -> bool,
) -> bool {
    if set.is_empty() {
        return false;
    }
    let n = arena.len();
    let inside = |s: usize, c: &Choice<N>| allowed_choice(s, c) && c.successors().all(|t| set.contains(&t));
    if set.iter().any(|&s| !arena.choices[s].iter().any(|c| inside(s, c))) {
        return false;
    }
    let mut alive = vec![false; n];
    for &s in set {
        alive[s] = true;
    }
    let comp = scc_ids(n, &alive, |s| {
        arena.choices[s]
            .iter()
            .filter(|c| inside(s, c))
            .flat_map(|c| c.successors())
            .collect()
    });
    let first = comp[*set.iter().next().unwrap()];
    set.iter().all(|&s| comp[s] == first)
}

/// Brute-force certificate for small arenas: every MEC is an end component with all
/// inside choices kept, MECs are disjoint, and every end component over allowed states
/// lies within one MEC.
pub fn certify_mecs<N: Scalar>(
    arena: &Arena<N>,
    allowed_state: &[bool],
    allowed_choice: impl Fn(usize, &Choice<N>) -> bool + Copy,
    mecs: &[Mec],
) -> Result<(), String> {
    let mut seen = BTreeSet::new();
    for m in mecs {
        if !is_end_component(arena, &m.states, allowed_choice) {
            return Err(format!("{:?} is not an end component", m.states));
        }
        for &s in &m.states {
            if !seen.insert(s) {
                return Err(format!("state {s} in two MECs"));
            }
            let expected: Vec<usize> = arena.choices[s]
                .iter()
                .enumerate()
                .filter(|(_, c)| allowed_choice(s, c) && c.successors().all(|t| m.states.contains(&t)))
                .map(|(i, _)| i)
                .collect();
            if m.choices.get(&s) != Some(&expected) {
                return Err(format!("state {s} keeps the wrong choices"));
            }
        }
    }
    let candidates: Vec<usize> = (0..arena.len()).filter(|&s| allowed_state[s]).collect();
    if candidates.len() > 16 {
        return Err("too many states to certify".into());
    }
    for mask in 1u32..(1 << candidates.len()) {
        let set: BTreeSet<usize> = candidates
            .iter()
            .enumerate()
            .filter(|(i, _)| mask & (1 << i) != 0)
            .map(|(_, s)| *s)
            .collect();
        if is_end_component(arena, &set, allowed_choice) && !mecs.iter().any(|m| set.is_subset(&m.states)) {
            return Err(format!("end component {set:?} not covered by a MEC"));
        }
    }
    Ok(())
}

pub fn union_mask(n: usize, mecs: &[Mec]) -> Vec<bool> {
    let mut m = vec![false; n];
    for mec in mecs {
        for &s in &mec.states {
            m[s] = true;
        }
    }
    m
}

/// Regions of the induced MDP outside `goal` where the adversary can stay forever
/// without disturbing: MECs of the disturbance-free sub-MDP avoiding `goal`.
pub fn compute_b<N: Scalar>(induced: &Arena<N>, goal: &[bool]) -> Vec<Mec> {
    let allowed: Vec<bool> = goal.iter().map(|g| !g).collect();
    mec_decomposition_with(induced, &allowed, |_, c| !c.disturbance)
}

/// MECs of the induced MDP outside `goal` that can be kept only by disturbing: every
/// Player-1 state whose strategy choice leaves the component has a disturbance action.
/// Components containing a state of `b` are excluded.
pub fn compute_r<N: Scalar>(induced: &Arena<N>, goal: &[bool], b: &[Mec]) -> Vec<Mec> {
    let allowed: Vec<bool> = goal.iter().map(|g| !g).collect();
    let in_b = union_mask(induced.len(), b);
    mec_decomposition_with(induced, &allowed, |_, _| true)
        .into_iter()
        .filter(|m| !m.states.iter().any(|&s| in_b[s]))
        .filter(|m| {
            m.states.iter().all(|&s| {
                if induced.owner[s] != Player::One {
                    return true;
                }
                let follows_inside = induced.choices[s]
                    .iter()
                    .filter(|c| !c.disturbance)
                    .all(|c| c.successors().all(|t| m.states.contains(&t)));
                follows_inside || induced.choices[s].iter().any(|c| c.disturbance)
            })
        })
        .collect()
}

/// Greatest set of non-goal states from which Player 2 avoids `goal` with probability 1:
/// Player-1 states leave if some choice may exit, Player-2 states if every choice may.
pub fn player2_avoid_set<N: Scalar>(game: &Arena<N>, goal: &[bool]) -> Vec<bool> {
    let mut e: Vec<bool> = goal.iter().map(|g| !g).collect();
    loop {
        let mut changed = false;
        for s in 0..game.len() {
            if !e[s] {
                continue;
            }
            let exits = |c: &Choice<N>| c.successors().any(|t| !e[t]);
            let remove = match game.owner[s] {
                Player::One => game.choices[s].iter().any(exits),
                Player::Two => game.choices[s].iter().all(exits),
            };
            if remove {
                e[s] = false;
                changed = true;
            }
        }
        if !changed {
            return e;
        }
    }
}

/// States with a path to `target` (positive maximal reachability).
pub fn can_reach<N: Scalar>(arena: &Arena<N>, target: &[bool]) -> Vec<bool> {
    let mut r = target.to_vec();
    loop {
        let mut changed = false;
        for s in 0..arena.len() {
            if !r[s] && arena.choices[s].iter().any(|c| c.successors().any(|t| r[t])) {
                r[s] = true;
                changed = true;
            }
        }
        if !changed {
            return r;
        }
    }
}

/// States reachable from the initial distribution.
pub fn reachable_from_initial<N: Scalar>(arena: &Arena<N>) -> Vec<bool> {
    let mut seen = vec![false; arena.len()];
    let mut stack: Vec<usize> = arena.initial.iter().map(|(s, _)| *s).collect();
    while let Some(s) = stack.pop() {
        if std::mem::replace(&mut seen[s], true) {
            continue;
        }
        stack.extend(arena.choices[s].iter().flat_map(|c| c.successors()));
    }
    seen
}
