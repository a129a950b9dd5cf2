//! Independent oracles shared by the integration tests. None of them calls
//! into the library code they are compared against.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, HashMap};

use btmc_core::expressiveness::{Dir, Ntm, Tape, TmView};
use btmc_core::ltl::Ltl;
use btmc_core::semantics::{ChoiceSite, Chooser};
use rand::rngs::StdRng;
use rand::Rng;

pub fn models_dir() -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("models")
}

pub fn load(name: &str) -> String {
    std::fs::read_to_string(models_dir().join(name)).unwrap()
}

/// Uniform choices from a seeded generator.
pub struct RngChooser(pub StdRng);

impl Chooser for RngChooser {
    fn choose(&mut self, _: &ChoiceSite, arity: usize) -> Option<usize> {
        Some(self.0.gen_range(0..arity))
    }
}

// ---------------------------------------------------------------------------
// LTL on lassos by walking the word

fn positions_from(i: usize, succ: &[usize]) -> Vec<usize> {
    let mut seen = vec![false; succ.len()];
    let mut out = Vec::new();
    let mut j = i;
    while !seen[j] {
        seen[j] = true;
        out.push(j);
        j = succ[j];
    }
    out
}

fn walk_eval(f: &Ltl<usize>, i: usize, word: &[u64], succ: &[usize]) -> bool {
    let at = |g: &Ltl<usize>, j: usize| walk_eval(g, j, word, succ);
    match f {
        Ltl::True => true,
        Ltl::False => false,
        Ltl::Atom(a) => word[i] >> a & 1 == 1,
        Ltl::Not(g) => !at(g, i),
        Ltl::And(a, b) => at(a, i) && at(b, i),
        Ltl::Or(a, b) => at(a, i) || at(b, i),
        Ltl::Implies(a, b) => !at(a, i) || at(b, i),
        Ltl::Next(g) => at(g, succ[i]),
        Ltl::Finally(g) => positions_from(i, succ).into_iter().any(|j| at(g, j)),
        Ltl::Globally(g) => positions_from(i, succ).into_iter().all(|j| at(g, j)),
        Ltl::Until(a, b) => {
            for j in positions_from(i, succ) {
                if at(b, j) {
                    return true;
                }
                if !at(a, j) {
                    return false;
                }
            }
            false
        }
        Ltl::StrongRelease(a, b) => {
            for j in positions_from(i, succ) {
                if !at(b, j) {
                    return false;
                }
                if at(a, j) {
                    return true;
                }
            }
            false
        }
        Ltl::Release(a, b) => {
            for j in positions_from(i, succ) {
                if !at(b, j) {
                    return false;
                }
                if at(a, j) {
                    return true;
                }
            }
            true
        }
    }
}

/// Truth of `f` on `prefix · cycle^ω`.
pub fn lasso_oracle(f: &Ltl<usize>, prefix: &[u64], cycle: &[u64]) -> bool {
    assert!(!cycle.is_empty());
    let word: Vec<u64> = prefix.iter().chain(cycle).copied().collect();
    let succ: Vec<usize> = (0..word.len())
        .map(|i| {
            if i + 1 == word.len() {
                prefix.len()
            } else {
                i + 1
            }
        })
        .collect();
    walk_eval(f, 0, &word, &succ)
}

// ---------------------------------------------------------------------------
// LTL model checking by the closure tableau: a path satisfies `psi` iff the
// product of the graph with the tableau of `psi` has a reachable fair SCC.

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
enum Core {
    True,
    Atom(usize),
    Not(Box<Core>),
    And(Box<Core>, Box<Core>),
    Next(Box<Core>),
    Until(Box<Core>, Box<Core>),
}

fn not(a: Core) -> Core {
    Core::Not(Box::new(a))
}
fn and(a: Core, b: Core) -> Core {
    Core::And(Box::new(a), Box::new(b))
}
fn or(a: Core, b: Core) -> Core {
    not(and(not(a), not(b)))
}
fn until(a: Core, b: Core) -> Core {
    Core::Until(Box::new(a), Box::new(b))
}

fn core(f: &Ltl<usize>) -> Core {
    match f {
        Ltl::True => Core::True,
        Ltl::False => not(Core::True),
        Ltl::Atom(a) => Core::Atom(*a),
        Ltl::Not(g) => not(core(g)),
        Ltl::And(a, b) => and(core(a), core(b)),
        Ltl::Or(a, b) => or(core(a), core(b)),
        Ltl::Implies(a, b) => or(not(core(a)), core(b)),
        Ltl::Next(g) => Core::Next(Box::new(core(g))),
        Ltl::Finally(g) => until(Core::True, core(g)),
        Ltl::Globally(g) => not(until(Core::True, not(core(g)))),
        Ltl::Until(a, b) => until(core(a), core(b)),
        Ltl::StrongRelease(a, b) => until(core(b), and(core(a), core(b))),
        Ltl::Release(a, b) => not(until(not(core(a)), not(core(b)))),
    }
}

struct Tableau {
    n_atoms: usize,
    /// Elementary formulas after the atoms: `X g` stored as `g`, and
    /// `X (a U b)` stored as the until itself.
    nexts: Vec<Core>,
    untils: Vec<(Core, Core)>,
}

impl Tableau {
    fn new(psi: &Core, n_atoms: usize) -> Tableau {
        fn collect(f: &Core, nexts: &mut Vec<Core>, untils: &mut Vec<(Core, Core)>) {
            match f {
                Core::True | Core::Atom(_) => {}
                Core::Not(g) => collect(g, nexts, untils),
                Core::And(a, b) => {
                    collect(a, nexts, untils);
                    collect(b, nexts, untils);
                }
                Core::Next(g) => {
                    collect(g, nexts, untils);
                    if !nexts.contains(g) {
                        nexts.push((**g).clone());
                    }
                }
                Core::Until(a, b) => {
                    collect(a, nexts, untils);
                    collect(b, nexts, untils);
                    if !nexts.contains(f) {
                        nexts.push(f.clone());
                    }
                    let p = ((**a).clone(), (**b).clone());
                    if !untils.contains(&p) {
                        untils.push(p);
                    }
                }
            }
        }
        let (mut nexts, mut untils) = (vec![], vec![]);
        collect(psi, &mut nexts, &mut untils);
        Tableau {
            n_atoms,
            nexts,
            untils,
        }
    }

    fn width(&self) -> usize {
        self.n_atoms + self.nexts.len()
    }

    fn sat(&self, f: &Core, set: u64) -> bool {
        match f {
            Core::True => true,
            Core::Atom(a) => set >> a & 1 == 1,
            Core::Not(g) => !self.sat(g, set),
            Core::And(a, b) => self.sat(a, set) && self.sat(b, set),
            Core::Next(g) => {
                let k = self.nexts.iter().position(|x| x == &**g).unwrap();
                set >> (self.n_atoms + k) & 1 == 1
            }
            Core::Until(a, b) => {
                let k = self.nexts.iter().position(|x| x == f).unwrap();
                self.sat(b, set) || (self.sat(a, set) && set >> (self.n_atoms + k) & 1 == 1)
            }
        }
    }

    fn step_ok(&self, from: u64, to: u64) -> bool {
        self.nexts
            .iter()
            .enumerate()
            .all(|(k, g)| (from >> (self.n_atoms + k) & 1 == 1) == self.sat(g, to))
    }
}

/// Strongly connected components, iteratively.
pub fn sccs(n: usize, succ: &dyn Fn(usize) -> Vec<usize>) -> Vec<Vec<usize>> {
    let mut index = vec![usize::MAX; n];
    let mut low = vec![0; n];
    let mut on = vec![false; n];
    let mut stack = Vec::new();
    let mut out = Vec::new();
    let mut next = 0;
    for root in 0..n {
        if index[root] != usize::MAX {
            continue;
        }
        let mut call: Vec<(usize, Vec<usize>, usize)> = vec![(root, succ(root), 0)];
        index[root] = next;
        low[root] = next;
        next += 1;
        stack.push(root);
        on[root] = true;
        while let Some((v, ws, i)) = call.last_mut() {
            let v = *v;
            if *i < ws.len() {
                let w = ws[*i];
                *i += 1;
                if index[w] == usize::MAX {
                    index[w] = next;
                    low[w] = next;
                    next += 1;
                    stack.push(w);
                    on[w] = true;
                    call.push((w, succ(w), 0));
                } else if on[w] {
                    low[v] = low[v].min(index[w]);
                }
            } else {
                call.pop();
                if let Some((u, _, _)) = call.last() {
                    low[*u] = low[*u].min(low[v]);
                }
                if low[v] == index[v] {
                    let mut comp = Vec::new();
                    loop {
                        let w = stack.pop().unwrap();
                        on[w] = false;
                        comp.push(w);
                        if w == v {
                            break;
                        }
                    }
                    out.push(comp);
                }
            }
        }
    }
    out
}

/// Whether every path of the graph satisfies `phi` (atoms index label bits).
pub fn tableau_holds(
    initial: &[usize],
    succ: &[Vec<usize>],
    labels: &[u64],
    n_atoms: usize,
    phi: &Ltl<usize>,
) -> bool {
    let psi = core(&Ltl::Not(Box::new(phi.clone())));
    let t = Tableau::new(&psi, n_atoms);
    let width = t.width();
    assert!(width <= 16, "closure too large for the oracle");
    let atom_mask = (1u64 << n_atoms) - 1;
    let extra = 1u64 << t.nexts.len();
    let sets_for = |label: u64| (0..extra).map(move |x| (label & atom_mask) | x << n_atoms);
    let mut tsucc: HashMap<u64, Vec<u64>> = HashMap::new();

    // explicit product over reachable (state, set) pairs
    let mut ids: HashMap<(usize, u64), usize> = HashMap::new();
    let mut nodes: Vec<(usize, u64)> = Vec::new();
    let mut edges: Vec<Vec<usize>> = Vec::new();
    let mut work = Vec::new();
    for &s in initial {
        for a in sets_for(labels[s]) {
            if t.sat(&psi, a) && !ids.contains_key(&(s, a)) {
                ids.insert((s, a), nodes.len());
                nodes.push((s, a));
                edges.push(vec![]);
                work.push(nodes.len() - 1);
            }
        }
    }
    while let Some(i) = work.pop() {
        let (s, a) = nodes[i];
        let nexts = tsucc
            .entry(a)
            .or_insert_with(|| (0..1u64 << width).filter(|&b| t.step_ok(a, b)).collect())
            .clone();
        for &u in &succ[s] {
            for &b in &nexts {
                if b & atom_mask != labels[u] & atom_mask {
                    continue;
                }
                let j = *ids.entry((u, b)).or_insert_with(|| {
                    nodes.push((u, b));
                    edges.push(vec![]);
                    work.push(nodes.len() - 1);
                    nodes.len() - 1
                });
                edges[i].push(j);
            }
        }
    }
    let fair: Vec<Vec<bool>> = t
        .untils
        .iter()
        .map(|(a, b)| {
            let u = until(a.clone(), b.clone());
            nodes
                .iter()
                .map(|&(_, set)| !t.sat(&u, set) || t.sat(b, set))
                .collect()
        })
        .collect();
    for comp in sccs(nodes.len(), &|v| edges[v].clone()) {
        let nontrivial = comp.len() > 1 || edges[comp[0]].contains(&comp[0]);
        if nontrivial && fair.iter().all(|f| comp.iter().any(|&v| f[v])) {
            return false;
        }
    }
    true
}

/// Every lasso with at most `max_len` distinct positions, up to `cap` of them.
pub fn enumerate_lassos(
    initial: &[usize],
    succ: &[Vec<usize>],
    max_len: usize,
    cap: usize,
) -> Vec<(Vec<usize>, Vec<usize>)> {
    fn go(
        path: &mut Vec<usize>,
        succ: &[Vec<usize>],
        max_len: usize,
        cap: usize,
        out: &mut Vec<(Vec<usize>, Vec<usize>)>,
    ) {
        let last = *path.last().unwrap();
        for &t in &succ[last] {
            if out.len() >= cap {
                return;
            }
            for (j, &p) in path.iter().enumerate() {
                if p == t {
                    out.push((path[..j].to_vec(), path[j..].to_vec()));
                }
            }
            if path.len() < max_len {
                path.push(t);
                go(path, succ, max_len, cap, out);
                path.pop();
            }
        }
    }
    let mut out = Vec::new();
    for &s in initial {
        go(&mut vec![s], succ, max_len, cap, &mut out);
    }
    out
}

// ---------------------------------------------------------------------------
// NFA subset simulation

/// Acceptance of every non-empty prefix of `word`.
pub fn nfa_prefix_acceptance(
    n_states: usize,
    initial: &[usize],
    accepting: &[usize],
    delta: &[(usize, usize, usize)],
    word: &[usize],
) -> Vec<bool> {
    let mut cur: BTreeSet<usize> = initial.iter().copied().collect();
    let mut out = Vec::new();
    for &a in word {
        cur = delta
            .iter()
            .filter(|(p, x, _)| cur.contains(p) && *x == a)
            .map(|t| t.2)
            .collect();
        assert!(cur.iter().all(|&q| q < n_states));
        out.push(cur.iter().any(|q| accepting.contains(q)));
    }
    out
}

// ---------------------------------------------------------------------------
// Bounded NTM on an absolute tape

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct AbsConfig {
    pub state: usize,
    pub head: i64,
    /// Non-blank cells by position.
    pub cells: BTreeMap<i64, usize>,
    pub exceeded: bool,
}

impl AbsConfig {
    pub fn new(state: usize, input: &[usize]) -> AbsConfig {
        let cells = input
            .iter()
            .enumerate()
            .filter(|(_, &c)| c != 0)
            .map(|(i, &c)| (i as i64, c))
            .collect();
        AbsConfig {
            state,
            head: 0,
            cells,
            exceeded: false,
        }
    }

    fn fits(&self, bound: u32) -> bool {
        let lo = self
            .cells
            .keys()
            .next()
            .copied()
            .unwrap_or(self.head)
            .min(self.head);
        let hi = self
            .cells
            .keys()
            .next_back()
            .copied()
            .unwrap_or(self.head)
            .max(self.head);
        self.head - lo <= bound as i64 && hi - self.head <= bound as i64
    }

    pub fn view(&self) -> TmView {
        if self.exceeded {
            return TmView {
                state: self.state,
                tape: None,
            };
        }
        let at = |p: i64| self.cells.get(&p).copied().unwrap_or(0);
        let lo = self.cells.keys().next().copied().unwrap_or(self.head);
        let hi = self.cells.keys().next_back().copied().unwrap_or(self.head);
        let left = (lo..self.head).rev().map(at).collect();
        let right = (self.head + 1..=hi).map(at).collect();
        TmView {
            state: self.state,
            tape: Some(Tape {
                left,
                head: at(self.head),
                right,
            }),
        }
    }
}

pub fn abs_successors(ntm: &Ntm, bound: u32, c: &AbsConfig) -> Vec<AbsConfig> {
    if c.exceeded || ntm.accepting[c.state] {
        return vec![c.clone()];
    }
    let read = c.cells.get(&c.head).copied().unwrap_or(0);
    let mut out = BTreeSet::new();
    for &(p, a, q, w, d) in &ntm.delta {
        if p != c.state || a != read {
            continue;
        }
        let mut n = c.clone();
        n.state = q;
        if w == 0 {
            n.cells.remove(&n.head);
        } else {
            n.cells.insert(n.head, w);
        }
        n.head += if d == Dir::R { 1 } else { -1 };
        if !n.fits(bound) {
            n = AbsConfig {
                state: q,
                exceeded: true,
                ..c.clone()
            };
        }
        out.insert(n);
    }
    if out.is_empty() {
        out.insert(c.clone());
    }
    out.into_iter().collect()
}

/// Every `k`-step run, as views after each step.
pub fn abs_runs(ntm: &Ntm, bound: u32, start: &AbsConfig, k: usize) -> BTreeSet<Vec<TmView>> {
    let mut out = BTreeSet::new();
    let mut stack = vec![(start.clone(), Vec::new())];
    while let Some((c, run)) = stack.pop() {
        if run.len() == k {
            out.insert(run);
            continue;
        }
        for n in abs_successors(ntm, bound, &c) {
            let mut r = run.clone();
            r.push(n.view());
            stack.push((n, r));
        }
    }
    out
}
