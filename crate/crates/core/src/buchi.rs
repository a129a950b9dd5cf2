//! LTL to Büchi translation by declarative tableau expansion, followed by
//! counter-based degeneralization.
//!
//! Automata are state-labelled: a run `q0 q1 ...` reads `w0 w1 ...` when
//! every `qi` matches `wi`, `q0` is initial and `q(i+1)` is a successor of `qi`.

use std::collections::{BTreeSet, HashMap, VecDeque};

use crate::ltl::{nnf, Ltl, Nnf};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BaState {
    /// Atoms that must hold in the letter read at this state.
    pub pos: u64,
    /// Atoms that must not hold.
    pub neg: u64,
    pub accepting: bool,
    pub succ: Vec<usize>,
}

impl BaState {
    pub fn matches(&self, letter: u64) -> bool {
        letter & self.pos == self.pos && letter & self.neg == 0
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Buchi {
    pub states: Vec<BaState>,
    pub initial: Vec<usize>,
}

struct Pool {
    formulas: Vec<Nnf>,
    ids: HashMap<Nnf, usize>,
}

impl Pool {
    fn id(&mut self, f: &Nnf) -> usize {
        if let Some(&i) = self.ids.get(f) {
            return i;
        }
        let i = self.formulas.len();
        self.formulas.push(f.clone());
        self.ids.insert(f.clone(), i);
        i
    }
}

const INIT: usize = usize::MAX;

#[derive(Clone)]
struct Node {
    incoming: BTreeSet<usize>,
    new: Vec<usize>,
    old: BTreeSet<usize>,
    next: BTreeSet<usize>,
}

struct Graph {
    nodes: Vec<Node>,
    index: HashMap<(BTreeSet<usize>, BTreeSet<usize>), usize>,
}

/// Translate a formula over atom indices into a Büchi automaton accepting
/// exactly its models.
pub fn ltl_to_buchi(f: &Ltl<usize>) -> Buchi {
    let root = nnf(f);
    let mut pool = Pool {
        formulas: Vec::new(),
        ids: HashMap::new(),
    };
    let root_id = pool.id(&root);
    let mut graph = Graph {
        nodes: Vec::new(),
        index: HashMap::new(),
    };
    let start = Node {
        incoming: BTreeSet::from([INIT]),
        new: vec![root_id],
        old: BTreeSet::new(),
        next: BTreeSet::new(),
    };
    // explicit work stack instead of recursion
    let mut work = vec![start];
    while let Some(node) = work.pop() {
        expand(node, &mut pool, &mut graph, &mut work);
    }

    // Literal constraints and generalized acceptance sets.
    let mut until_ids: Vec<(usize, usize)> = Vec::new();
    for i in 0..pool.formulas.len() {
        if let Nnf::Until(_, b) = pool.formulas[i].clone() {
            until_ids.push((i, pool.id(&b)));
        }
    }
    let n = graph.nodes.len();
    let mut labels = vec![(0u64, 0u64); n];
    for (i, node) in graph.nodes.iter().enumerate() {
        for &fid in &node.old {
            if let Nnf::Lit(a, positive) = pool.formulas[fid] {
                if positive {
                    labels[i].0 |= 1 << a;
                } else {
                    labels[i].1 |= 1 << a;
                }
            }
        }
    }
    let in_set =
        |node: &Node, (u, b): (usize, usize)| !node.old.contains(&u) || node.old.contains(&b);
    let k = until_ids.len();
    let mut succ = vec![Vec::new(); n];
    let mut initial = Vec::new();
    for (i, node) in graph.nodes.iter().enumerate() {
        for &src in &node.incoming {
            if src == INIT {
                initial.push(i);
            } else {
                succ[src].push(i);
            }
        }
    }

    if k == 0 {
        let states = (0..n)
            .map(|i| BaState {
                pos: labels[i].0,
                neg: labels[i].1,
                accepting: true,
                succ: succ[i].clone(),
            })
            .collect();
        return Buchi { states, initial };
    }
    // (node, counter) -> node * k + counter
    let mut states = Vec::with_capacity(n * k);
    for (i, node) in graph.nodes.iter().enumerate() {
        for c in 0..k {
            let next_c = if in_set(node, until_ids[c]) {
                (c + 1) % k
            } else {
                c
            };
            states.push(BaState {
                pos: labels[i].0,
                neg: labels[i].1,
                accepting: c == 0 && in_set(node, until_ids[0]),
                succ: succ[i].iter().map(|&j| j * k + next_c).collect(),
            });
        }
    }
    let initial = initial.into_iter().map(|i| i * k).collect();
    Buchi { states, initial }.trimmed()
}

fn expand(mut node: Node, pool: &mut Pool, graph: &mut Graph, work: &mut Vec<Node>) {
    loop {
        let Some(eta) = node.new.pop() else {
            let key = (node.old.clone(), node.next.clone());
            if let Some(&existing) = graph.index.get(&key) {
                graph.nodes[existing]
                    .incoming
                    .extend(node.incoming.iter().copied());
                return;
            }
            let id = graph.nodes.len();
            graph.index.insert(key, id);
            let next: Vec<usize> = node.next.iter().copied().collect();
            graph.nodes.push(node);
            work.push(Node {
                incoming: BTreeSet::from([id]),
                new: next,
                old: BTreeSet::new(),
                next: BTreeSet::new(),
            });
            return;
        };
        if node.old.contains(&eta) {
            continue;
        }
        let f = pool.formulas[eta].clone();
        match f {
            Nnf::False => return,
            Nnf::True => {
                node.old.insert(eta);
            }
            Nnf::Lit(a, positive) => {
                let neg = pool.id(&Nnf::Lit(a, !positive));
                if node.old.contains(&neg) {
                    return;
                }
                node.old.insert(eta);
            }
            Nnf::And(x, y) => {
                node.old.insert(eta);
                for sub in [x, y] {
                    let id = pool.id(&sub);
                    if !node.old.contains(&id) {
                        node.new.push(id);
                    }
                }
            }
            Nnf::Next(x) => {
                node.old.insert(eta);
                let id = pool.id(&x);
                node.next.insert(id);
            }
            Nnf::Or(x, y) | Nnf::Until(x, y) | Nnf::Release(x, y) => {
                let (xi, yi) = (pool.id(&x), pool.id(&y));
                let mut n1 = node.clone();
                let mut n2 = node;
                n1.old.insert(eta);
                n2.old.insert(eta);
                match &pool.formulas[eta] {
                    Nnf::Or(..) => {
                        n1.new.push(xi);
                        n2.new.push(yi);
                    }
                    Nnf::Until(..) => {
                        n1.new.push(xi);
                        n1.next.insert(eta);
                        n2.new.push(yi);
                    }
                    _ => {
                        n1.new.push(yi);
                        n1.next.insert(eta);
                        n2.new.push(xi);
                        n2.new.push(yi);
                    }
                }
                work.push(n2);
                node = n1;
            }
        }
    }
}

impl Buchi {
    /// Drop states unreachable from the initial set, renumbering densely.
    pub fn trimmed(self) -> Buchi {
        let mut seen = vec![usize::MAX; self.states.len()];
        let mut order = Vec::new();
        let mut queue: VecDeque<usize> = VecDeque::new();
        for &i in &self.initial {
            if seen[i] == usize::MAX {
                seen[i] = order.len();
                order.push(i);
                queue.push_back(i);
            }
        }
        while let Some(s) = queue.pop_front() {
            for &t in &self.states[s].succ {
                if seen[t] == usize::MAX {
                    seen[t] = order.len();
                    order.push(t);
                    queue.push_back(t);
                }
            }
        }
        let states = order
            .iter()
            .map(|&old| {
                let s = &self.states[old];
                let mut succ: Vec<usize> = s.succ.iter().map(|&t| seen[t]).collect();
                succ.sort_unstable();
                succ.dedup();
                BaState {
                    pos: s.pos,
                    neg: s.neg,
                    accepting: s.accepting,
                    succ,
                }
            })
            .collect();
        let mut initial: Vec<usize> = self.initial.iter().map(|&i| seen[i]).collect();
        initial.sort_unstable();
        initial.dedup();
        Buchi { states, initial }
    }

    /// States from which some accepting cycle is reachable (non-empty language).
    #[allow(clippy::needless_range_loop)]
    pub fn live_states(&self) -> Vec<bool> {
        let n = self.states.len();
        // accepting states lying on a cycle
        let mut on_cycle = vec![false; n];
        for s in 0..n {
            if !self.states[s].accepting {
                continue;
            }
            let mut seen = vec![false; n];
            let mut stack: Vec<usize> = self.states[s].succ.clone();
            while let Some(t) = stack.pop() {
                if t == s {
                    on_cycle[s] = true;
                    break;
                }
                if !seen[t] {
                    seen[t] = true;
                    stack.extend(self.states[t].succ.iter().copied());
                }
            }
        }
        // backward closure
        let mut pred = vec![Vec::new(); n];
        for (s, st) in self.states.iter().enumerate() {
            for &t in &st.succ {
                pred[t].push(s);
            }
        }
        let mut live = on_cycle.clone();
        let mut stack: Vec<usize> = (0..n).filter(|&s| on_cycle[s]).collect();
        while let Some(t) = stack.pop() {
            for &p in &pred[t] {
                if !live[p] {
                    live[p] = true;
                    stack.push(p);
                }
            }
        }
        live
    }
}

/// Membership of `prefix · cycle^ω`: builds the product of the lasso with the
/// automaton and looks for a reachable accepting state on a cycle.
pub fn accepts_lasso(ba: &Buchi, prefix: &[u64], cycle: &[u64]) -> bool {
    assert!(!cycle.is_empty(), "lasso cycle must be non-empty");
    let word: Vec<u64> = prefix.iter().chain(cycle.iter()).copied().collect();
    let len = word.len();
    let next_pos = |i: usize| if i + 1 == len { prefix.len() } else { i + 1 };
    let nq = ba.states.len();
    let id = |pos: usize, q: usize| pos * nq + q;

    let mut reach = vec![false; len * nq];
    let mut stack = Vec::new();
    for &q in &ba.initial {
        if ba.states[q].matches(word[0]) && !reach[id(0, q)] {
            reach[id(0, q)] = true;
            stack.push((0, q));
        }
    }
    let w = &word;
    let succ = |(pos, q): (usize, usize)| {
        let np = next_pos(pos);
        ba.states[q]
            .succ
            .iter()
            .filter(move |&&t| ba.states[t].matches(w[np]))
            .map(move |&t| (np, t))
            .collect::<Vec<_>>()
    };
    let mut reachable = Vec::new();
    while let Some(s) = stack.pop() {
        reachable.push(s);
        for t in succ(s) {
            if !reach[id(t.0, t.1)] {
                reach[id(t.0, t.1)] = true;
                stack.push(t);
            }
        }
    }
    // An accepting product node that reaches itself.
    for &(pos, q) in &reachable {
        if !ba.states[q].accepting || pos < prefix.len() {
            continue;
        }
        let mut seen = vec![false; len * nq];
        let mut stack = succ((pos, q));
        while let Some(t) = stack.pop() {
            if t == (pos, q) {
                return true;
            }
            if !seen[id(t.0, t.1)] {
                seen[id(t.0, t.1)] = true;
                stack.extend(succ(t));
            }
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ltl::eval_lasso;

    const P: u64 = 1;

    #[test]
    fn globally_p_has_one_state() {
        let ba = ltl_to_buchi(&Ltl::globally(Ltl::Atom(0)));
        assert_eq!(ba.states.len(), 1);
        assert!(accepts_lasso(&ba, &[], &[P]));
        assert!(accepts_lasso(&ba, &[P, P], &[P]));
        assert!(!accepts_lasso(&ba, &[], &[P, 0]));
        assert!(!accepts_lasso(&ba, &[0], &[P]));
    }

    #[test]
    fn finally_p() {
        let ba = ltl_to_buchi(&Ltl::finally(Ltl::Atom(0)));
        assert!(accepts_lasso(&ba, &[0, 0], &[P]));
        assert!(!accepts_lasso(&ba, &[], &[0]));
    }

    #[test]
    fn false_has_empty_language() {
        let ba = ltl_to_buchi(&Ltl::False);
        assert!(!accepts_lasso(&ba, &[], &[0]));
        assert!(ba.live_states().iter().all(|l| !l));
    }

    #[test]
    fn agrees_with_direct_evaluation_on_nested_until() {
        let (p, q) = (Ltl::Atom(0), Ltl::Atom(1));
        let f = Ltl::globally(Ltl::implies(p.clone(), Ltl::finally(Ltl::until(p, q))));
        let ba = ltl_to_buchi(&f);
        for prefix in [vec![], vec![1], vec![1, 2], vec![3]] {
            for cycle in [vec![0], vec![1], vec![1, 0], vec![2, 1], vec![1, 1, 3]] {
                assert_eq!(
                    accepts_lasso(&ba, &prefix, &cycle),
                    eval_lasso(&f, &prefix, &cycle)
                );
            }
        }
    }
}
