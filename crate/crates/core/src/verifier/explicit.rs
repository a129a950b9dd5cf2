//! Explicit-state checking over a labelled graph: nested DFS for accepting
//! lassos, a Tarjan-based cross-check, and BFS safety witnesses.

use std::collections::VecDeque;

use crate::buchi::Buchi;

/// Graph with one atom bitmask per state.
#[derive(Clone, Debug, Default)]
pub struct Kripke {
    pub initial: Vec<usize>,
    pub succ: Vec<Vec<usize>>,
    pub labels: Vec<u64>,
}

/// `prefix · cycle^ω` as state ids. The last cycle state has an edge back to the first.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Lasso {
    pub prefix: Vec<usize>,
    pub cycle: Vec<usize>,
}

impl Lasso {
    pub fn states(&self) -> impl Iterator<Item = &usize> {
        self.prefix.iter().chain(self.cycle.iter())
    }
}

struct Bits(Vec<u64>);

impl Bits {
    fn new(n: usize) -> Bits {
        Bits(vec![0; n.div_ceil(64)])
    }
    fn get(&self, i: usize) -> bool {
        self.0[i / 64] >> (i % 64) & 1 == 1
    }
    /// Returns whether the bit was newly set.
    fn set(&mut self, i: usize) -> bool {
        let was = self.get(i);
        self.0[i / 64] |= 1 << (i % 64);
        !was
    }
}

struct Product<'a> {
    k: &'a Kripke,
    ba: &'a Buchi,
    nq: usize,
}

impl Product<'_> {
    fn initial(&self) -> Vec<usize> {
        let mut out = Vec::new();
        for &s in &self.k.initial {
            for &q in &self.ba.initial {
                if self.ba.states[q].matches(self.k.labels[s]) {
                    out.push(s * self.nq + q);
                }
            }
        }
        out
    }

    fn succ(&self, p: usize) -> Vec<usize> {
        let (s, q) = (p / self.nq, p % self.nq);
        let mut out = Vec::new();
        for &t in &self.k.succ[s] {
            for &r in &self.ba.states[q].succ {
                if self.ba.states[r].matches(self.k.labels[t]) {
                    out.push(t * self.nq + r);
                }
            }
        }
        out
    }

    fn accepting(&self, p: usize) -> bool {
        self.ba.states[p % self.nq].accepting
    }
}

/// Nested depth-first search for a reachable accepting cycle in `k × ba`.
/// The lasso is projected to `k`'s states.
pub fn find_accepting_lasso(k: &Kripke, ba: &Buchi) -> Option<Lasso> {
    let nq = ba.states.len();
    if nq == 0 {
        return None;
    }
    let prod = Product { k, ba, nq };
    let n = k.succ.len() * nq;
    let mut v1 = Bits::new(n);
    let mut v2 = Bits::new(n);
    for p0 in prod.initial() {
        if !v1.set(p0) {
            continue;
        }
        let mut stack: Vec<(usize, Vec<usize>, usize)> = vec![(p0, prod.succ(p0), 0)];
        while let Some(top) = stack.last_mut() {
            if top.2 < top.1.len() {
                let t = top.1[top.2];
                top.2 += 1;
                if v1.set(t) {
                    let succ = prod.succ(t);
                    stack.push((t, succ, 0));
                }
                continue;
            }
            let (p, _, _) = stack.pop().expect("non-empty");
            if !prod.accepting(p) {
                continue;
            }
            if let Some(path) = inner(&prod, p, &mut v2) {
                let prefix = stack.iter().map(|f| f.0 / nq).collect();
                let cycle = path.into_iter().map(|x| x / nq).collect();
                return Some(Lasso { prefix, cycle });
            }
        }
    }
    None
}

/// Second search: a path from `seed` back to itself. Returns `seed .. x` with `x -> seed`.
fn inner(prod: &Product<'_>, seed: usize, v2: &mut Bits) -> Option<Vec<usize>> {
    v2.set(seed);
    let mut stack: Vec<(usize, Vec<usize>, usize)> = vec![(seed, prod.succ(seed), 0)];
    while let Some(top) = stack.last_mut() {
        if top.2 < top.1.len() {
            let t = top.1[top.2];
            top.2 += 1;
            if t == seed {
                return Some(stack.iter().map(|f| f.0).collect());
            }
            if v2.set(t) {
                let succ = prod.succ(t);
                stack.push((t, succ, 0));
            }
            continue;
        }
        stack.pop();
    }
    None
}

/// Independent emptiness check: Tarjan SCCs of the reachable product, looking
/// for a non-trivial component with an accepting state.
pub fn has_accepting_cycle_scc(k: &Kripke, ba: &Buchi) -> bool {
    let nq = ba.states.len();
    if nq == 0 {
        return false;
    }
    let prod = Product { k, ba, nq };
    let n = k.succ.len() * nq;
    const UNSEEN: usize = usize::MAX;
    let mut index = vec![UNSEEN; n];
    let mut low = vec![0usize; n];
    let mut on_stack = Bits::new(n);
    let mut scc_stack: Vec<usize> = Vec::new();
    let mut counter = 0;
    for p0 in prod.initial() {
        if index[p0] != UNSEEN {
            continue;
        }
        let mut call: Vec<(usize, Vec<usize>, usize)> = Vec::new();
        index[p0] = counter;
        low[p0] = counter;
        counter += 1;
        scc_stack.push(p0);
        on_stack.set(p0);
        call.push((p0, prod.succ(p0), 0));
        while let Some(top) = call.last_mut() {
            let v = top.0;
            if top.2 < top.1.len() {
                let w = top.1[top.2];
                top.2 += 1;
                if index[w] == UNSEEN {
                    index[w] = counter;
                    low[w] = counter;
                    counter += 1;
                    scc_stack.push(w);
                    on_stack.set(w);
                    let succ = prod.succ(w);
                    call.push((w, succ, 0));
                } else if on_stack.get(w) {
                    low[v] = low[v].min(index[w]);
                }
                continue;
            }
            call.pop();
            if let Some(parent) = call.last() {
                low[parent.0] = low[parent.0].min(low[v]);
            }
            if low[v] == index[v] {
                let mut comp = Vec::new();
                loop {
                    let w = scc_stack.pop().expect("tarjan stack");
                    on_stack.0[w / 64] &= !(1 << (w % 64));
                    comp.push(w);
                    if w == v {
                        break;
                    }
                }
                let nontrivial = comp.len() > 1 || prod.succ(v).contains(&v);
                if nontrivial && comp.iter().any(|&p| prod.accepting(p)) {
                    return true;
                }
            }
        }
    }
    false
}

/// Shortest path (by BFS) from an initial state to a state satisfying `bad`.
pub fn shortest_path_to(k: &Kripke, bad: impl Fn(usize) -> bool) -> Option<Vec<usize>> {
    let n = k.succ.len();
    let mut parent = vec![usize::MAX; n];
    let mut seen = Bits::new(n);
    let mut queue = VecDeque::new();
    for &s in &k.initial {
        if seen.set(s) {
            queue.push_back(s);
        }
    }
    while let Some(s) = queue.pop_front() {
        if bad(s) {
            let mut path = vec![s];
            let mut cur = s;
            while parent[cur] != usize::MAX {
                cur = parent[cur];
                path.push(cur);
            }
            path.reverse();
            return Some(path);
        }
        for &t in &k.succ[s] {
            if seen.set(t) {
                parent[t] = s;
                queue.push_back(t);
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::buchi::ltl_to_buchi;
    use crate::ltl::Ltl;

    fn p() -> Ltl<usize> {
        Ltl::Atom(0)
    }

    // 0 -> 1 -> 2 -> 1, p holds at 2 only
    fn chain() -> Kripke {
        Kripke {
            initial: vec![0],
            succ: vec![vec![1], vec![2], vec![1]],
            labels: vec![0, 0, 1],
        }
    }

    #[test]
    fn globally_not_p_is_violated_with_a_path_into_p() {
        let bad = ltl_to_buchi(&Ltl::not(Ltl::globally(Ltl::not(p()))));
        let l = find_accepting_lasso(&chain(), &bad).expect("violated");
        assert!(l.states().any(|&s| s == 2));
        assert!(has_accepting_cycle_scc(&chain(), &bad));
        let k = chain();
        assert!(k.succ[*l.cycle.last().unwrap()].contains(&l.cycle[0]));
    }

    #[test]
    fn globally_true_holds() {
        let bad = ltl_to_buchi(&Ltl::not(Ltl::globally(Ltl::True)));
        assert!(find_accepting_lasso(&chain(), &bad).is_none());
        assert!(!has_accepting_cycle_scc(&chain(), &bad));
    }

    #[test]
    fn bfs_witness_is_shortest() {
        assert_eq!(shortest_path_to(&chain(), |s| s == 2), Some(vec![0, 1, 2]));
        assert_eq!(shortest_path_to(&chain(), |s| s == 0), Some(vec![0]));
        assert_eq!(shortest_path_to(&chain(), |_| false), None);
    }
}
