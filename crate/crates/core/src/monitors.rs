//! Contingency monitors: extended state machines, NFAs over observation
//! predicates, and LTL formulas, behind one configuration-set interface.

use std::collections::HashMap;

use crate::buchi::{ltl_to_buchi, Buchi};
use crate::expr::{self, compile, CExpr, Env, Expr, Resolver, Slot, Type};
use crate::ltl::{self, Formula};
use crate::model::{Assign, Diagnostic, Domain, Literal, TreeScope};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Verdict {
    Nominal,
    Contingency,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LocalDecl {
    pub name: String,
    pub domain: Domain,
    pub initial: Literal,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EsmState {
    pub name: String,
    pub verdict: Verdict,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EsmTransition {
    pub from: String,
    pub to: String,
    pub guard: Expr,
    /// Simultaneous writes to local variables.
    pub updates: Vec<Assign>,
}

/// Extended state machine: control states, typed locals, guarded transitions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Esm {
    pub name: Option<String>,
    pub locals: Vec<LocalDecl>,
    pub states: Vec<EsmState>,
    pub initial: Vec<String>,
    pub transitions: Vec<EsmTransition>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NfaTransition {
    pub from: String,
    pub symbol: String,
    pub to: String,
}

/// NFA whose alphabet is a set of named observation predicates.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NfaMonitor {
    pub name: Option<String>,
    pub symbols: Vec<(String, Expr)>,
    pub states: Vec<String>,
    pub initial: String,
    pub accepting: Vec<String>,
    pub transitions: Vec<NfaTransition>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LtlMonitor {
    pub name: Option<String>,
    pub formula: Formula,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Monitor {
    Esm(Esm),
    Nfa(NfaMonitor),
    Ltl(LtlMonitor),
}

impl Monitor {
    /// One nominal state with a `true` self-loop.
    pub fn trivial() -> Monitor {
        Monitor::Esm(Esm {
            name: Some("trivial".into()),
            locals: vec![],
            states: vec![EsmState {
                name: "ok".into(),
                verdict: Verdict::Nominal,
            }],
            initial: vec!["ok".into()],
            transitions: vec![EsmTransition {
                from: "ok".into(),
                to: "ok".into(),
                guard: Expr::Bool(true),
                updates: vec![],
            }],
        })
    }

    pub fn name(&self) -> Option<&str> {
        match self {
            Monitor::Esm(m) => m.name.as_deref(),
            Monitor::Nfa(m) => m.name.as_deref(),
            Monitor::Ltl(m) => m.name.as_deref(),
        }
    }

    /// Structural checks that need no tree context, plus warnings.
    pub fn structural_diagnostics(&self) -> Vec<Diagnostic> {
        let mut d = Vec::new();
        match self {
            Monitor::Esm(esm) => {
                let names: Vec<&str> = esm.states.iter().map(|s| s.name.as_str()).collect();
                check_unique(names.iter().copied(), "state", &mut d);
                check_unique(esm.locals.iter().map(|l| l.name.as_str()), "local", &mut d);
                if esm.states.is_empty() {
                    d.push(Diagnostic::error(
                        "empty monitor",
                        "esm",
                        "machine has no states",
                    ));
                }
                if esm.initial.is_empty() {
                    d.push(Diagnostic::error(
                        "no initial state",
                        "esm",
                        "machine needs an initial state",
                    ));
                }
                for s in esm
                    .initial
                    .iter()
                    .chain(esm.transitions.iter().flat_map(|t| [&t.from, &t.to]))
                {
                    if !names.contains(&s.as_str()) {
                        d.push(Diagnostic::error(
                            "unknown state",
                            s,
                            "state is not declared",
                        ));
                    }
                }
                for l in &esm.locals {
                    if l.domain.encode(&l.initial).is_none() {
                        d.push(Diagnostic::error(
                            "initial outside domain",
                            &l.name,
                            "initial value not in domain",
                        ));
                    }
                }
            }
            Monitor::Nfa(nfa) => {
                check_unique(nfa.states.iter().map(String::as_str), "state", &mut d);
                check_unique(nfa.symbols.iter().map(|s| s.0.as_str()), "symbol", &mut d);
                let known = |s: &str| nfa.states.iter().any(|x| x == s);
                for s in std::iter::once(&nfa.initial)
                    .chain(nfa.accepting.iter())
                    .chain(nfa.transitions.iter().flat_map(|t| [&t.from, &t.to]))
                {
                    if !known(s) {
                        d.push(Diagnostic::error(
                            "unknown state",
                            s,
                            "state is not declared",
                        ));
                    }
                }
                for t in &nfa.transitions {
                    if !nfa.symbols.iter().any(|(n, _)| *n == t.symbol) {
                        d.push(Diagnostic::error(
                            "unknown symbol",
                            &t.symbol,
                            "symbol is not declared",
                        ));
                    }
                }
                // reachability from the initial state
                let mut reach = vec![nfa.initial.clone()];
                let mut i = 0;
                while i < reach.len() {
                    let from = reach[i].clone();
                    for t in nfa.transitions.iter().filter(|t| t.from == from) {
                        if !reach.contains(&t.to) {
                            reach.push(t.to.clone());
                        }
                    }
                    i += 1;
                }
                for a in &nfa.accepting {
                    if known(a) && !reach.contains(a) {
                        d.push(Diagnostic::warning(
                            "unreachable accepting state",
                            a,
                            "accepting state is unreachable",
                        ));
                    }
                }
            }
            Monitor::Ltl(_) => {}
        }
        d
    }
}

fn check_unique<'a>(names: impl Iterator<Item = &'a str>, what: &str, d: &mut Vec<Diagnostic>) {
    let mut seen = Vec::new();
    for n in names {
        if seen.contains(&n) {
            d.push(Diagnostic::error(
                "duplicate name",
                n,
                format!("{what} declared more than once"),
            ));
        }
        seen.push(n);
    }
}

/// One monitor configuration: control state and local valuation.
pub type Config = (u32, Vec<i64>);
/// Sorted, duplicate-free configuration set.
pub type Configs = Vec<Config>;

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("monitor deadlock: no enabled transition from any configuration")]
pub struct MonitorDeadlock;

#[derive(Clone, Debug)]
pub struct CTransition {
    pub from: u32,
    pub to: u32,
    pub guard: CExpr,
    pub updates: Vec<(usize, CExpr)>,
}

#[derive(Clone, Debug)]
pub enum MonitorKind {
    Esm {
        verdicts: Vec<Verdict>,
        transitions: Vec<CTransition>,
    },
    Nfa {
        symbols: Vec<CExpr>,
        transitions: Vec<(u32, usize, u32)>,
        accepting: Vec<bool>,
    },
    /// State `ba.states.len()` is the pre-initial configuration.
    Ltl {
        ba: Buchi,
        atoms: Vec<CExpr>,
        live: Vec<bool>,
    },
}

/// A monitor resolved against a tree's declarations.
#[derive(Clone, Debug)]
pub struct CompiledMonitor {
    pub kind: MonitorKind,
    pub state_names: Vec<String>,
    pub locals: Vec<(String, Domain)>,
    pub initial: Configs,
}

struct LocalScope<'a> {
    tree: &'a TreeScope<'a>,
    locals: &'a [(String, Type)],
}

impl Resolver for LocalScope<'_> {
    fn ident(&self, name: &str) -> Option<(Slot, Type)> {
        if let Some(i) = self.locals.iter().position(|(n, _)| n == name) {
            return Some((Slot::Local(i), self.locals[i].1));
        }
        self.tree.ident(name)
    }
    fn node(&self, name: &str) -> Option<usize> {
        self.tree.node(name)
    }
}

fn expect_bool(
    e: &Expr,
    r: &dyn Resolver,
    subject: &str,
    d: &mut Vec<Diagnostic>,
) -> Option<CExpr> {
    match expr::type_of(e, r) {
        Ok(Type::Bool) => compile(e, r).ok(),
        Ok(t) => {
            d.push(Diagnostic::error(
                "type mismatch",
                subject,
                format!("predicate `{e}` has type {t:?}"),
            ));
            None
        }
        Err(expr::TypeError::Unknown(n)) => {
            d.push(Diagnostic::error(
                "unknown atom",
                &n,
                format!("`{n}` in `{subject}` is not declared"),
            ));
            None
        }
        Err(err) => {
            d.push(Diagnostic::error("type mismatch", subject, err.to_string()));
            None
        }
    }
}

impl CompiledMonitor {
    /// Resolve every atom against `scope`; unresolvable atoms are reported by name.
    pub fn new(m: &Monitor, scope: &TreeScope<'_>) -> Result<CompiledMonitor, Vec<Diagnostic>> {
        let mut d: Vec<Diagnostic> = m
            .structural_diagnostics()
            .into_iter()
            .filter(|x| x.is_error())
            .collect();
        if !d.is_empty() {
            return Err(d);
        }
        let out = match m {
            Monitor::Esm(esm) => {
                let mut locals_t = Vec::new();
                for l in &esm.locals {
                    if scope.vars.iter().any(|(n, _, _)| *n == l.name) {
                        d.push(Diagnostic::error(
                            "name clash",
                            &l.name,
                            "monitor local shadows a tree variable",
                        ));
                    }
                    let ty = match &l.domain {
                        Domain::Bool => Type::Bool,
                        Domain::Range { .. } => Type::Int,
                        // local enums must reuse one of the tree's enumerations
                        Domain::Enum(s) => match scope.symbols.enums.iter().position(|e| e == s) {
                            Some(id) => Type::Enum(id),
                            None => {
                                d.push(Diagnostic::error(
                                    "unknown enumeration",
                                    &l.name,
                                    "monitor locals may only use enumerations declared by the tree",
                                ));
                                Type::Int
                            }
                        },
                    };
                    locals_t.push((l.name.clone(), ty));
                }
                let r = LocalScope {
                    tree: scope,
                    locals: &locals_t,
                };
                let idx = |s: &str| esm.states.iter().position(|x| x.name == s).unwrap() as u32;
                let mut transitions = Vec::new();
                for t in &esm.transitions {
                    let subject = format!("{} -> {}", t.from, t.to);
                    let guard = expect_bool(&t.guard, &r, &subject, &mut d);
                    let mut updates = Vec::new();
                    for u in &t.updates {
                        let Some(li) = locals_t.iter().position(|(n, _)| *n == u.target) else {
                            d.push(Diagnostic::error(
                                "unknown local",
                                &u.target,
                                "monitor updates only its locals",
                            ));
                            continue;
                        };
                        match expr::type_of(&u.value, &r) {
                            Ok(ty) if ty == locals_t[li].1 => {
                                updates.push((li, compile(&u.value, &r).unwrap()))
                            }
                            Ok(ty) => d.push(Diagnostic::error(
                                "type mismatch",
                                &u.target,
                                format!("assigned {ty:?}, expected {:?}", locals_t[li].1),
                            )),
                            Err(e) => {
                                d.push(Diagnostic::error("type mismatch", &u.target, e.to_string()))
                            }
                        }
                    }
                    if let Some(guard) = guard {
                        transitions.push(CTransition {
                            from: idx(&t.from),
                            to: idx(&t.to),
                            guard,
                            updates,
                        });
                    }
                }
                let init_locals: Vec<i64> = esm
                    .locals
                    .iter()
                    .map(|l| l.domain.encode(&l.initial).unwrap_or(0))
                    .collect();
                let mut initial: Configs = esm
                    .initial
                    .iter()
                    .map(|s| (idx(s), init_locals.clone()))
                    .collect();
                initial.sort();
                initial.dedup();
                CompiledMonitor {
                    kind: MonitorKind::Esm {
                        verdicts: esm.states.iter().map(|s| s.verdict).collect(),
                        transitions,
                    },
                    state_names: esm.states.iter().map(|s| s.name.clone()).collect(),
                    locals: esm
                        .locals
                        .iter()
                        .map(|l| (l.name.clone(), l.domain.clone()))
                        .collect(),
                    initial,
                }
            }
            Monitor::Nfa(nfa) => {
                let symbols: Vec<CExpr> = nfa
                    .symbols
                    .iter()
                    .map(|(n, e)| expect_bool(e, scope, n, &mut d).unwrap_or(CExpr::Const(0)))
                    .collect();
                let st = |s: &str| nfa.states.iter().position(|x| x == s).unwrap() as u32;
                let sy = |s: &str| nfa.symbols.iter().position(|x| x.0 == s).unwrap();
                CompiledMonitor {
                    kind: MonitorKind::Nfa {
                        symbols,
                        transitions: nfa
                            .transitions
                            .iter()
                            .map(|t| (st(&t.from), sy(&t.symbol), st(&t.to)))
                            .collect(),
                        accepting: nfa
                            .states
                            .iter()
                            .map(|s| nfa.accepting.contains(s))
                            .collect(),
                    },
                    state_names: nfa.states.clone(),
                    locals: vec![],
                    initial: vec![(st(&nfa.initial), vec![])],
                }
            }
            Monitor::Ltl(lm) => {
                let (atoms, indexed) = lm.formula.index_atoms();
                if atoms.len() > 64 {
                    d.push(Diagnostic::error(
                        "too many atoms",
                        "ltl",
                        "formulas are limited to 64 distinct atoms",
                    ));
                    return Err(d);
                }
                let atoms: Vec<CExpr> = atoms
                    .iter()
                    .map(|a| {
                        expect_bool(a, scope, &a.to_string(), &mut d).unwrap_or(CExpr::Const(0))
                    })
                    .collect();
                let ba = ltl_to_buchi(&indexed);
                let live = ba.live_states();
                let n = ba.states.len();
                CompiledMonitor {
                    state_names: (0..=n)
                        .map(|i| {
                            if i == n {
                                "init".to_string()
                            } else {
                                format!("q{i}")
                            }
                        })
                        .collect(),
                    kind: MonitorKind::Ltl { ba, atoms, live },
                    locals: vec![],
                    initial: vec![(n as u32, vec![])],
                }
            }
        };
        if d.is_empty() {
            Ok(out)
        } else {
            Err(d)
        }
    }

    /// Successor configurations after observing `obs`.
    pub fn step(&self, configs: &[Config], obs: &dyn Env) -> Result<Configs, MonitorDeadlock> {
        let mut out: Configs = match &self.kind {
            MonitorKind::Esm { transitions, .. } => {
                let out = esm_successors(transitions, &self.locals, configs, obs);
                if out.is_empty() {
                    return Err(MonitorDeadlock);
                }
                out
            }
            MonitorKind::Nfa {
                symbols,
                transitions,
                ..
            } => {
                let states: Vec<u32> = configs.iter().map(|c| c.0).collect();
                nfa_image(symbols, transitions, &states, obs)
                    .into_iter()
                    .map(|s| (s, vec![]))
                    .collect()
            }
            MonitorKind::Ltl { ba, atoms, live } => {
                let letter = atoms.iter().enumerate().fold(0u64, |acc, (i, a)| {
                    acc | ((expr::holds(a, obs) as u64) << i)
                });
                let pre = ba.states.len() as u32;
                let mut out = Vec::new();
                for (q, _) in configs {
                    let succ: &[usize] = if *q == pre {
                        &ba.initial
                    } else {
                        &ba.states[*q as usize].succ
                    };
                    for &t in succ {
                        if live[t] && ba.states[t].matches(letter) {
                            out.push((t as u32, vec![]));
                        }
                    }
                }
                out
            }
        };
        out.sort();
        out.dedup();
        Ok(out)
    }

    pub fn verdict(&self, configs: &[Config]) -> Verdict {
        let trips = match &self.kind {
            MonitorKind::Esm { verdicts, .. } => {
                esm_verdict(verdicts, configs) == Verdict::Contingency
            }
            MonitorKind::Nfa { accepting, .. } => configs.iter().any(|c| accepting[c.0 as usize]),
            MonitorKind::Ltl { .. } => configs.is_empty(),
        };
        if trips {
            Verdict::Contingency
        } else {
            Verdict::Nominal
        }
    }

    /// Every configuration the monitor could ever be in, for symbolic encoding.
    /// `None` if the local state space exceeds `cap`.
    pub fn all_configs(&self, cap: usize) -> Option<Vec<Config>> {
        let mut locals: Vec<Vec<i64>> = vec![vec![]];
        for (_, d) in &self.locals {
            let (lo, hi) = d.bounds();
            if locals.len().saturating_mul(d.size() as usize) > cap {
                return None;
            }
            locals = locals
                .into_iter()
                .flat_map(|prefix| {
                    (lo..=hi).map(move |v| {
                        let mut p = prefix.clone();
                        p.push(v);
                        p
                    })
                })
                .collect();
        }
        let n_states = self.state_names.len();
        if n_states.saturating_mul(locals.len()) > cap {
            return None;
        }
        Some(
            (0..n_states as u32)
                .flat_map(|s| locals.iter().map(move |l| (s, l.clone())))
                .collect(),
        )
    }
}

struct WithLocals<'a> {
    obs: &'a dyn Env,
    locals: &'a [i64],
}

impl Env for WithLocals<'_> {
    fn var(&self, i: usize) -> i64 {
        self.obs.var(i)
    }
    fn local(&self, i: usize) -> i64 {
        self.locals[i]
    }
    fn status(&self, n: usize) -> crate::model::Status {
        self.obs.status(n)
    }
    fn contingency(&self) -> bool {
        self.obs.contingency()
    }
    fn deadlock(&self) -> bool {
        self.obs.deadlock()
    }
}

fn esm_successors(
    transitions: &[CTransition],
    locals: &[(String, Domain)],
    configs: &[Config],
    obs: &dyn Env,
) -> Configs {
    let mut out = Vec::new();
    for (state, vals) in configs {
        let env = WithLocals { obs, locals: vals };
        for t in transitions.iter().filter(|t| t.from == *state) {
            if !expr::holds(&t.guard, &env) {
                continue;
            }
            let mut next = vals.clone();
            for (li, e) in &t.updates {
                next[*li] = locals[*li].1.clamp(expr::eval(e, &env));
            }
            out.push((t.to, next));
        }
    }
    out
}

/// Union of successors over enabled transitions; blocking configurations are
/// dropped. An empty result is reported as a deadlock.
pub fn esm_step(
    m: &CompiledMonitor,
    configs: &[Config],
    obs: &dyn Env,
) -> Result<Configs, MonitorDeadlock> {
    match &m.kind {
        MonitorKind::Esm { .. } => m.step(configs, obs),
        _ => panic!("esm_step on a non-ESM monitor"),
    }
}

/// Contingency only when every configuration sits in a contingency state.
pub fn esm_verdict(verdicts: &[Verdict], configs: &[Config]) -> Verdict {
    if !configs.is_empty()
        && configs
            .iter()
            .all(|(s, _)| verdicts[*s as usize] == Verdict::Contingency)
    {
        Verdict::Contingency
    } else {
        Verdict::Nominal
    }
}

fn nfa_image(
    symbols: &[CExpr],
    transitions: &[(u32, usize, u32)],
    states: &[u32],
    obs: &dyn Env,
) -> Vec<u32> {
    let enabled: Vec<bool> = symbols.iter().map(|s| expr::holds(s, obs)).collect();
    let mut out: Vec<u32> = transitions
        .iter()
        .filter(|(f, sym, _)| states.contains(f) && enabled[*sym])
        .map(|t| t.2)
        .collect();
    out.sort_unstable();
    out.dedup();
    out
}

/// Subset image of `states` under the observation; may be empty.
pub fn nfa_step(m: &CompiledMonitor, states: &[u32], obs: &dyn Env) -> Vec<u32> {
    match &m.kind {
        MonitorKind::Nfa {
            symbols,
            transitions,
            ..
        } => nfa_image(symbols, transitions, states, obs),
        _ => panic!("nfa_step on a non-NFA monitor"),
    }
}

/// Convenience for formulas parsed from text.
pub fn ltl_monitor(name: Option<&str>, formula: Formula) -> Monitor {
    Monitor::Ltl(LtlMonitor {
        name: name.map(str::to_string),
        formula,
    })
}

/// Atom-free formulas lowered from an expression; used by tests and the CLI.
pub fn formula_from_expr(e: &Expr) -> Result<Formula, String> {
    ltl::from_expr(e)
}

/// Lookup table from state name to index, for callers building configs by hand.
pub fn state_index(m: &CompiledMonitor) -> HashMap<String, u32> {
    m.state_names
        .iter()
        .enumerate()
        .map(|(i, n)| (n.clone(), i as u32))
        .collect()
}
