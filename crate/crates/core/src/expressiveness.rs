//! Compilation of NFAs and bounded nondeterministic Turing machines into
//! behavior trees, plus a direct NTM simulator to compare them against.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::dsl::{print_scenario, print_tree};
use crate::expr::{BinOp, Expr};
use crate::model::{
    Assign, Branch, Clause, Domain, Literal, NodeKind, Owner, Sbt, Status, TreeFile, TreeNode,
    VarDecl, RESERVED,
};
use crate::scenario::Scenario;
use crate::semantics::{FirstChoice, Model, Observation, SemError};

/// Root status for an accepted prefix, or a machine in an accepting state.
pub const STATUS_ACCEPT: Status = Status::Success;
/// A machine that is still running.
pub const STATUS_UNDECIDED: Status = Status::Running;
/// A prefix that is not accepted, or a machine that halted without accepting.
pub const STATUS_REJECT: Status = Status::Failure;

/// Environment variable carrying the current input symbol.
pub const NFA_INPUT: &str = "inp";

pub fn nfa_state_var(state: &str) -> String {
    format!("in_{state}")
}

fn is_ident(s: &str) -> bool {
    let mut cs = s.chars();
    matches!(cs.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && cs.all(|c| c.is_ascii_alphanumeric() || c == '_')
        && !RESERVED.contains(&s)
}

fn distinct(what: &str, xs: &[String]) -> Result<(), String> {
    let set: BTreeSet<&String> = xs.iter().collect();
    if set.len() != xs.len() {
        return Err(format!("{what} names must be distinct"));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NfaSpec {
    pub states: Vec<String>,
    pub alphabet: Vec<String>,
    pub initial: Vec<String>,
    pub accepting: Vec<String>,
    /// `(from, symbol, to)`
    pub transitions: Vec<(String, String, String)>,
    /// Words to turn into scenarios.
    #[serde(default)]
    pub words: Vec<Vec<String>>,
}

impl NfaSpec {
    pub fn state(&self, s: &str) -> Result<usize, String> {
        self.states
            .iter()
            .position(|x| x == s)
            .ok_or(format!("unknown state `{s}`"))
    }

    pub fn symbol(&self, s: &str) -> Result<usize, String> {
        self.alphabet
            .iter()
            .position(|x| x == s)
            .ok_or(format!("unknown symbol `{s}`"))
    }

    pub fn word(&self, w: &[String]) -> Result<Vec<usize>, String> {
        w.iter().map(|s| self.symbol(s)).collect()
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.states.is_empty() || self.alphabet.is_empty() {
            return Err("an NFA needs at least one state and one symbol".into());
        }
        distinct("state", &self.states)?;
        distinct("symbol", &self.alphabet)?;
        for s in self.states.iter().chain(&self.alphabet) {
            if !is_ident(s) {
                return Err(format!("`{s}` is not a usable identifier"));
            }
        }
        for a in &self.alphabet {
            if a == NFA_INPUT || self.states.iter().any(|q| nfa_state_var(q) == *a) {
                return Err(format!("symbol `{a}` clashes with a variable name"));
            }
        }
        for q in self.initial.iter().chain(&self.accepting) {
            self.state(q)?;
        }
        for (p, a, q) in &self.transitions {
            self.state(p)?;
            self.symbol(a)?;
            self.state(q)?;
        }
        for w in &self.words {
            self.word(w)?;
        }
        Ok(())
    }
}

fn any(xs: impl IntoIterator<Item = Expr>) -> Expr {
    xs.into_iter()
        .reduce(|a, b| Expr::bin(BinOp::Or, a, b))
        .unwrap_or(Expr::Bool(false))
}

fn eq(a: Expr, b: Expr) -> Expr {
    Expr::bin(BinOp::Eq, a, b)
}

fn and(a: Expr, b: Expr) -> Expr {
    Expr::bin(BinOp::And, a, b)
}

fn set(target: &str, value: Expr) -> Assign {
    Assign {
        target: target.to_string(),
        value,
    }
}

fn ret(status: Status) -> Branch {
    Branch {
        writes: vec![],
        status,
    }
}

fn clause(guard: Expr, branches: Vec<Branch>) -> Clause {
    Clause { guard, branches }
}

fn bool_var(name: String, init: bool) -> VarDecl {
    VarDecl {
        name,
        domain: Domain::Bool,
        initial: vec![Literal::Bool(init)],
        owner: Owner::Blackboard,
    }
}

/// The state set lives in one boolean per NFA state; the environment
/// supplies one symbol per tick. Each tick replaces the set by its image
/// under the current symbol, then reports [`STATUS_ACCEPT`] or
/// [`STATUS_REJECT`] for the prefix read so far.
pub fn nfa_to_bt(nfa: &NfaSpec) -> Result<TreeFile, String> {
    nfa.validate()?;
    let inp = || Expr::ident(NFA_INPUT);
    let bit = |q: &str| Expr::ident(&nfa_state_var(q));
    let mut blackboard = Vec::new();
    let mut writes = Vec::new();
    for q in &nfa.states {
        blackboard.push(bool_var(nfa_state_var(q), nfa.initial.contains(q)));
        let image = any(nfa
            .transitions
            .iter()
            .filter(|t| t.2 == *q)
            .map(|(p, a, _)| and(bit(p), eq(inp(), Expr::ident(a)))));
        writes.push(set(&nfa_state_var(q), image));
    }
    let symbols: Vec<Expr> = nfa.alphabet.iter().map(|a| Expr::ident(a)).collect();
    let environment = vec![VarDecl {
        name: NFA_INPUT.into(),
        domain: Domain::Enum(nfa.alphabet.clone()),
        initial: nfa
            .alphabet
            .iter()
            .map(|a| Literal::Sym(a.clone()))
            .collect(),
        owner: Owner::Environment,
    }];
    let choice = if symbols.len() == 1 {
        symbols[0].clone()
    } else {
        Expr::Choice(symbols)
    };
    let env_update = vec![clause(
        Expr::Bool(true),
        vec![Branch {
            writes: vec![set(NFA_INPUT, choice)],
            status: Status::Success,
        }],
    )];
    let step = TreeNode::action(
        "Ar",
        vec![clause(
            Expr::Bool(true),
            vec![Branch {
                writes,
                status: Status::Success,
            }],
        )],
    );
    let classify = TreeNode::check(
        "StatusMap",
        vec![
            clause(
                any(nfa.accepting.iter().map(|q| bit(q))),
                vec![ret(STATUS_ACCEPT)],
            ),
            clause(Expr::Bool(true), vec![ret(STATUS_REJECT)]),
        ],
    );
    let root = TreeNode::composite(NodeKind::Sequence, "nfa", false, vec![step, classify]);
    Ok(TreeFile {
        sbt: Sbt {
            name: Some("nfa".into()),
            root,
            blackboard,
            environment,
            env_update,
        },
        contingency: None,
    })
}

/// Scenario feeding `word` one symbol per tick.
pub fn nfa_word_scenario(nfa: &NfaSpec, word: &[usize], name: Option<String>) -> Scenario {
    let lit = |i: usize| (NFA_INPUT.to_string(), Literal::Sym(nfa.alphabet[i].clone()));
    Scenario {
        name,
        init: word.first().map(|&a| vec![lit(a)]).unwrap_or_default(),
        at: word
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, &a)| (k as u32, vec![lit(a)]))
            .collect(),
    }
}

/// Root status after each prefix of `word`, writing the input variable
/// directly before every tick.
pub fn run_word(model: &Model, word: &[usize]) -> Result<Vec<Status>, SemError> {
    let inp = model.var_index(NFA_INPUT).expect("NFA-derived model");
    let mut vals = model.first_initial();
    let mut mem = model.empty_memory();
    let mut out = Vec::with_capacity(word.len());
    for &a in word {
        vals[inp] = a as i64;
        let r = model.tick(model.root, &vals, &mem, &mut FirstChoice)?;
        out.push(r.status);
        vals = r.valuation;
        mem = r.memory;
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Dir {
    L,
    R,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NtmTransition {
    pub from: String,
    pub read: String,
    pub to: String,
    pub write: String,
    pub dir: Dir,
}

fn default_bound() -> u32 {
    8
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NtmSpec {
    pub states: Vec<String>,
    pub alphabet: Vec<String>,
    pub blank: String,
    pub initial: String,
    pub accepting: Vec<String>,
    pub transitions: Vec<NtmTransition>,
    /// Initial tape contents, head on the first symbol.
    #[serde(default)]
    pub input: Vec<String>,
    #[serde(default = "default_bound")]
    pub tape_bound: u32,
}

/// An NTM over digit-coded symbols: the blank is digit 0 and the remaining
/// symbols follow in alphabet order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Ntm {
    pub states: Vec<String>,
    /// Symbol names by digit.
    pub symbols: Vec<String>,
    pub initial: usize,
    pub accepting: Vec<bool>,
    /// `(from, read, to, write, dir)`
    pub delta: Vec<(usize, usize, usize, usize, Dir)>,
}

pub const TM_VARS: [&str; 5] = ["st", "hd", "lt", "rt", "exceeded"];

impl NtmSpec {
    pub fn compile(&self) -> Result<Ntm, String> {
        if self.states.is_empty() {
            return Err("an NTM needs at least one state".into());
        }
        distinct("state", &self.states)?;
        distinct("symbol", &self.alphabet)?;
        for q in &self.states {
            if !is_ident(q) || TM_VARS.contains(&q.as_str()) {
                return Err(format!("state `{q}` is not a usable identifier"));
            }
        }
        let Some(b) = self.alphabet.iter().position(|s| *s == self.blank) else {
            return Err(format!("blank `{}` is not in the alphabet", self.blank));
        };
        let mut symbols = vec![self.blank.clone()];
        symbols.extend(
            self.alphabet
                .iter()
                .enumerate()
                .filter(|(i, _)| *i != b)
                .map(|(_, s)| s.clone()),
        );
        let state = |s: &str| {
            self.states
                .iter()
                .position(|x| x == s)
                .ok_or(format!("unknown state `{s}`"))
        };
        let sym = |s: &str| {
            symbols
                .iter()
                .position(|x| x == s)
                .ok_or(format!("unknown symbol `{s}`"))
        };
        let mut accepting = vec![false; self.states.len()];
        for q in &self.accepting {
            accepting[state(q)?] = true;
        }
        let mut delta = Vec::new();
        for t in &self.transitions {
            delta.push((
                state(&t.from)?,
                sym(&t.read)?,
                state(&t.to)?,
                sym(&t.write)?,
                t.dir,
            ));
        }
        Ok(Ntm {
            initial: state(&self.initial)?,
            states: self.states.clone(),
            symbols: symbols.clone(),
            accepting,
            delta,
        })
    }

    pub fn input_digits(&self, ntm: &Ntm) -> Result<Vec<usize>, String> {
        self.input
            .iter()
            .map(|s| {
                ntm.symbols
                    .iter()
                    .position(|x| x == s)
                    .ok_or(format!("unknown symbol `{s}`"))
            })
            .collect()
    }
}

impl Ntm {
    pub fn base(&self) -> usize {
        self.symbols.len()
    }

    /// Largest digit-coded half tape within `bound` cells.
    pub fn max_half(&self, bound: u32) -> Result<i64, String> {
        (self.base() as i64)
            .checked_pow(bound)
            .filter(|v| *v <= 1 << 24)
            .map(|v| v - 1)
            .ok_or(format!(
                "tape bound {bound} is too large for {} symbols",
                self.base()
            ))
    }
}

/// Tape as seen from the head: `left` and `right` list cells nearest first,
/// with trailing blanks (digit 0) removed.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Tape {
    pub left: Vec<usize>,
    pub head: usize,
    pub right: Vec<usize>,
}

fn trim(v: &mut Vec<usize>) {
    while v.last() == Some(&0) {
        v.pop();
    }
}

impl Tape {
    pub fn from_input(input: &[usize]) -> Tape {
        let mut t = Tape {
            left: vec![],
            head: input.first().copied().unwrap_or(0),
            right: input.iter().skip(1).copied().collect(),
        };
        trim(&mut t.right);
        t
    }

    /// Write `sym` under the head and move one cell.
    pub fn step(&self, sym: usize, dir: Dir) -> Tape {
        let mut t = self.clone();
        match dir {
            Dir::R => {
                t.left.insert(0, sym);
                t.head = if t.right.is_empty() {
                    0
                } else {
                    t.right.remove(0)
                };
            }
            Dir::L => {
                t.right.insert(0, sym);
                t.head = if t.left.is_empty() {
                    0
                } else {
                    t.left.remove(0)
                };
            }
        }
        trim(&mut t.left);
        trim(&mut t.right);
        t
    }

    pub fn fits(&self, bound: u32) -> bool {
        self.left.len() <= bound as usize && self.right.len() <= bound as usize
    }

    /// Non-blank extent of the tape, left to right, in symbol names.
    pub fn render(&self, symbols: &[String]) -> String {
        let mut cells: Vec<usize> = self.left.iter().rev().copied().collect();
        cells.push(self.head);
        cells.extend(&self.right);
        let start = cells.iter().position(|&c| c != 0).unwrap_or(cells.len());
        let end = cells.iter().rposition(|&c| c != 0).map_or(start, |i| i + 1);
        cells[start..end]
            .iter()
            .map(|&c| symbols[c].as_str())
            .collect()
    }
}

/// Tape halves as base-`base` numbers, nearest cell least significant.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DigitTape {
    pub base: usize,
    pub left: i64,
    pub head: usize,
    pub right: i64,
}

fn to_number(cells: &[usize], base: usize) -> i64 {
    cells
        .iter()
        .rev()
        .fold(0, |acc, &d| acc * base as i64 + d as i64)
}

fn from_number(mut v: i64, base: usize) -> Vec<usize> {
    let mut out = Vec::new();
    while v > 0 {
        out.push((v % base as i64) as usize);
        v /= base as i64;
    }
    out
}

/// `T_D`; `None` when either half is longer than `bound` cells.
pub fn tape_to_digit(t: &Tape, base: usize, bound: u32) -> Option<DigitTape> {
    if !t.fits(bound) || t.head >= base || t.left.iter().chain(&t.right).any(|&d| d >= base) {
        return None;
    }
    Some(DigitTape {
        base,
        left: to_number(&t.left, base),
        head: t.head,
        right: to_number(&t.right, base),
    })
}

/// `D_T`
pub fn digit_to_tape(d: &DigitTape) -> Tape {
    Tape {
        left: from_number(d.left, d.base),
        head: d.head,
        right: from_number(d.right, d.base),
    }
}

/// Configuration of the bounded machine. A move that would leave the
/// bounded tape sets `exceeded`, which is absorbing.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TmConfig {
    pub state: usize,
    pub tape: Tape,
    pub exceeded: bool,
}

/// Common projection of simulator configurations and tree observations:
/// the state, and the tape unless the bound was exceeded.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TmView {
    pub state: usize,
    pub tape: Option<Tape>,
}

impl TmConfig {
    pub fn initial(ntm: &Ntm, input: &[usize]) -> TmConfig {
        TmConfig {
            state: ntm.initial,
            tape: Tape::from_input(input),
            exceeded: false,
        }
    }

    pub fn view(&self) -> TmView {
        TmView {
            state: self.state,
            tape: (!self.exceeded).then(|| self.tape.clone()),
        }
    }
}

/// Direct one-step successor relation. Accepting, halted and exceeded
/// configurations repeat.
pub fn ntm_successors(ntm: &Ntm, bound: u32, c: &TmConfig) -> Vec<TmConfig> {
    if c.exceeded || ntm.accepting[c.state] {
        return vec![c.clone()];
    }
    let mut out: Vec<TmConfig> = ntm
        .delta
        .iter()
        .filter(|t| t.0 == c.state && t.1 == c.tape.head)
        .map(|&(_, _, q, w, d)| {
            let tape = c.tape.step(w, d);
            if tape.fits(bound) {
                TmConfig {
                    state: q,
                    tape,
                    exceeded: false,
                }
            } else {
                TmConfig {
                    state: q,
                    tape: c.tape.clone(),
                    exceeded: true,
                }
            }
        })
        .collect();
    if out.is_empty() {
        out.push(c.clone());
    }
    out.sort();
    out.dedup();
    out
}

/// Every run of `k` steps from `start`, as the configurations after each step.
pub fn ntm_runs(ntm: &Ntm, bound: u32, start: &TmConfig, k: usize) -> BTreeSet<Vec<TmConfig>> {
    fn go(
        ntm: &Ntm,
        bound: u32,
        c: &TmConfig,
        left: usize,
        run: &mut Vec<TmConfig>,
        out: &mut BTreeSet<Vec<TmConfig>>,
    ) {
        if left == 0 {
            out.insert(run.clone());
            return;
        }
        for n in ntm_successors(ntm, bound, c) {
            run.push(n.clone());
            go(ntm, bound, &n, left - 1, run, out);
            run.pop();
        }
    }
    let mut out = BTreeSet::new();
    go(ntm, bound, start, k, &mut vec![], &mut out);
    out
}

fn tm_state(ntm: &Ntm, q: usize) -> Expr {
    eq(Expr::ident("st"), Expr::ident(&ntm.states[q]))
}

/// One tick per machine step. The root selector tries `CAc` (an accepting
/// state was reached) and then one `StSeq_<q>` per state with transitions:
/// `CSt_<q>` checks the state, `SySel_<q>` picks the `SySeq_<q>_<a>` whose
/// `CSy_<q>_<a>` matches the head symbol, and `Nxt_<q>_<a>` applies one of
/// the transitions, one branch each. The tape lives in `lt`, `hd`, `rt` as
/// a [`DigitTape`]; `exceeded` latches when a move would leave the bound.
pub fn tm_to_bt(ntm: &Ntm, tape_bound: u32, input: &[usize]) -> Result<TreeFile, String> {
    let k = ntm.base() as i64;
    let max = ntm.max_half(tape_bound)?;
    let start = tape_to_digit(&Tape::from_input(input), ntm.base(), tape_bound)
        .ok_or("input does not fit the tape bound")?;
    let id = Expr::ident;
    let int = Expr::Int;
    let not_exceeded = Expr::not(id("exceeded"));
    let range = |hi: i64, v: i64| VarDecl {
        name: String::new(),
        domain: Domain::Range { lo: 0, hi },
        initial: vec![Literal::Int(v)],
        owner: Owner::Blackboard,
    };
    let named = |name: &str, mut d: VarDecl| {
        d.name = name.into();
        d
    };
    let blackboard = vec![
        VarDecl {
            name: "st".into(),
            domain: Domain::Enum(ntm.states.clone()),
            initial: vec![Literal::Sym(ntm.states[ntm.initial].clone())],
            owner: Owner::Blackboard,
        },
        named("hd", range(k - 1, start.head as i64)),
        named("lt", range(max, start.left)),
        named("rt", range(max, start.right)),
        bool_var("exceeded".into(), false),
    ];
    let accepting = (0..ntm.states.len())
        .filter(|&q| ntm.accepting[q])
        .map(|q| tm_state(ntm, q));
    let cac = TreeNode::check(
        "CAc",
        vec![
            clause(
                and(any(accepting), not_exceeded.clone()),
                vec![ret(STATUS_ACCEPT)],
            ),
            clause(Expr::Bool(true), vec![ret(Status::Failure)]),
        ],
    );
    let mut children = vec![cac];
    let arith = |op, a, b| Expr::bin(op, a, b);
    for q in 0..ntm.states.len() {
        if ntm.accepting[q] {
            continue;
        }
        let mut per_symbol = Vec::new();
        for a in 0..ntm.base() {
            let moves: Vec<_> = ntm.delta.iter().filter(|t| t.0 == q && t.1 == a).collect();
            if moves.is_empty() {
                continue;
            }
            let branches = moves
                .iter()
                .map(|&&(_, _, to, w, d)| {
                    let (near, far) = match d {
                        Dir::R => ("lt", "rt"),
                        Dir::L => ("rt", "lt"),
                    };
                    let pushed = arith(
                        BinOp::Add,
                        arith(BinOp::Mul, id(near), int(k)),
                        int(w as i64),
                    );
                    Branch {
                        writes: vec![
                            set("st", id(&ntm.states[to])),
                            set("hd", arith(BinOp::Mod, id(far), int(k))),
                            set(far, arith(BinOp::Div, id(far), int(k))),
                            set(near, pushed.clone()),
                            set("exceeded", Expr::bin(BinOp::Gt, pushed, int(max))),
                        ],
                        status: STATUS_UNDECIDED,
                    }
                })
                .collect();
            let name = &ntm.states[q];
            let csy = TreeNode::check(
                format!("CSy_{name}_{a}"),
                vec![
                    clause(eq(id("hd"), int(a as i64)), vec![ret(Status::Success)]),
                    clause(Expr::Bool(true), vec![ret(Status::Failure)]),
                ],
            );
            let nxt = TreeNode::action(
                format!("Nxt_{name}_{a}"),
                vec![clause(Expr::Bool(true), branches)],
            );
            per_symbol.push(TreeNode::composite(
                NodeKind::Sequence,
                format!("SySeq_{name}_{a}"),
                false,
                vec![csy, nxt],
            ));
        }
        if per_symbol.is_empty() {
            continue;
        }
        let name = &ntm.states[q];
        let cst = TreeNode::check(
            format!("CSt_{name}"),
            vec![
                clause(
                    and(tm_state(ntm, q), not_exceeded.clone()),
                    vec![ret(Status::Success)],
                ),
                clause(Expr::Bool(true), vec![ret(Status::Failure)]),
            ],
        );
        let sysel = TreeNode::composite(
            NodeKind::Selector,
            format!("SySel_{name}"),
            false,
            per_symbol,
        );
        children.push(TreeNode::composite(
            NodeKind::Sequence,
            format!("StSeq_{name}"),
            false,
            vec![cst, sysel],
        ));
    }
    let root = TreeNode::composite(NodeKind::Selector, "StSel", false, children);
    Ok(TreeFile {
        sbt: Sbt {
            name: Some("ntm".into()),
            root,
            blackboard,
            environment: vec![],
            env_update: vec![],
        },
        contingency: None,
    })
}

/// Read a [`TmConfig`] back from a valuation of a [`tm_to_bt`] model.
pub fn tm_config_of(model: &Model, ntm: &Ntm, vals: &[i64]) -> TmConfig {
    let v = |n: &str| vals[model.var_index(n).expect("NTM-derived model")];
    let d = DigitTape {
        base: ntm.base(),
        left: v("lt"),
        head: v("hd") as usize,
        right: v("rt"),
    };
    TmConfig {
        state: v("st") as usize,
        tape: digit_to_tape(&d),
        exceeded: v("exceeded") != 0,
    }
}

pub fn tm_view_of(model: &Model, ntm: &Ntm, obs: &Observation) -> TmView {
    tm_config_of(model, ntm, &obs.valuation).view()
}

/// Element-wise equality of two sequences under a common projection.
pub fn trace_equiv<A, B, P: PartialEq>(
    a: &[A],
    b: &[B],
    pa: impl Fn(&A) -> P,
    pb: impl Fn(&B) -> P,
) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| pa(x) == pb(y))
}

/// Generated files for an NFA: the tree plus one scenario per listed word.
pub fn nfa_fixtures(nfa: &NfaSpec) -> Result<Vec<(String, String)>, String> {
    let mut out = vec![("nfa.bt".to_string(), print_tree(&nfa_to_bt(nfa)?))];
    for (i, w) in nfa.words.iter().enumerate() {
        let name = format!("word_{i}");
        let scn = nfa_word_scenario(nfa, &nfa.word(w)?, Some(name.clone()));
        out.push((format!("{name}.scn"), print_scenario(&scn)));
    }
    Ok(out)
}

/// Generated files for an NTM: the tree loaded with the description's input.
pub fn tm_fixtures(spec: &NtmSpec) -> Result<Vec<(String, String)>, String> {
    let ntm = spec.compile()?;
    let file = tm_to_bt(&ntm, spec.tape_bound, &spec.input_digits(&ntm)?)?;
    Ok(vec![("ntm.bt".to_string(), print_tree(&file))])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::semantics::trace;

    fn ends_in_a() -> NfaSpec {
        NfaSpec {
            states: vec!["p".into(), "q".into()],
            alphabet: vec!["a".into(), "b".into()],
            initial: vec!["p".into()],
            accepting: vec!["q".into()],
            transitions: vec![
                ("p".into(), "a".into(), "p".into()),
                ("p".into(), "b".into(), "p".into()),
                ("p".into(), "a".into(), "q".into()),
            ],
            words: vec![],
        }
    }

    fn model(f: &TreeFile) -> Model {
        Model::new(f).unwrap()
    }

    #[test]
    fn ends_in_a_classifies_the_last_symbol() {
        let m = model(&nfa_to_bt(&ends_in_a()).unwrap());
        assert_eq!(run_word(&m, &[1, 0]).unwrap().last(), Some(&STATUS_ACCEPT));
        assert_eq!(
            run_word(&m, &[0, 1]).unwrap(),
            vec![STATUS_ACCEPT, STATUS_REJECT]
        );
    }

    #[test]
    fn single_accepting_state_accepts_every_tick() {
        let nfa = NfaSpec {
            states: vec!["s".into()],
            alphabet: vec!["a".into(), "b".into()],
            initial: vec!["s".into()],
            accepting: vec!["s".into()],
            transitions: vec![
                ("s".into(), "a".into(), "s".into()),
                ("s".into(), "b".into(), "s".into()),
            ],
            words: vec![],
        };
        let m = model(&nfa_to_bt(&nfa).unwrap());
        assert_eq!(run_word(&m, &[0, 1, 1, 0]).unwrap(), vec![STATUS_ACCEPT; 4]);
    }

    fn unary_increment() -> NtmSpec {
        let t = |from: &str, read: &str, to: &str, write: &str| NtmTransition {
            from: from.into(),
            read: read.into(),
            to: to.into(),
            write: write.into(),
            dir: Dir::R,
        };
        NtmSpec {
            states: vec!["scan".into(), "done".into()],
            alphabet: vec!["_".into(), "1".into()],
            blank: "_".into(),
            initial: "scan".into(),
            accepting: vec!["done".into()],
            transitions: vec![t("scan", "1", "scan", "1"), t("scan", "_", "done", "1")],
            input: vec!["1".into(), "1".into()],
            tape_bound: 8,
        }
    }

    #[test]
    fn digit_tape_round_trips() {
        for len in 0..=8u32 {
            for bits in 0..(1u32 << len) {
                let cells: Vec<usize> = (0..len).map(|i| (bits >> i & 1) as usize).collect();
                let mut t = Tape::from_input(&cells);
                t.left = t.right.clone();
                let d = tape_to_digit(&t, 2, 8).unwrap();
                assert_eq!(digit_to_tape(&d), t);
            }
        }
        assert_eq!(
            tape_to_digit(
                &Tape {
                    left: vec![1; 9],
                    head: 0,
                    right: vec![]
                },
                2,
                8
            ),
            None
        );
    }

    #[test]
    fn unary_increment_writes_one_more_mark() {
        let spec = unary_increment();
        let ntm = spec.compile().unwrap();
        let f = tm_to_bt(&ntm, 8, &spec.input_digits(&ntm).unwrap()).unwrap();
        let m = model(&f);
        let obs = trace(&m, 5, &mut FirstChoice).unwrap();
        let last = tm_config_of(&m, &ntm, &obs.last().unwrap().valuation);
        assert!(ntm.accepting[last.state]);
        assert_eq!(last.tape.render(&ntm.symbols), "111");
        let root = m.root;
        assert_eq!(obs[3].statuses[root], Status::Success);
        let start = TmConfig::initial(&ntm, &spec.input_digits(&ntm).unwrap());
        let runs = ntm_runs(&ntm, 8, &start, 5);
        assert_eq!(runs.len(), 1);
        let run = runs.into_iter().next().unwrap();
        assert!(trace_equiv(
            &obs,
            &run,
            |o| tm_view_of(&m, &ntm, o),
            TmConfig::view
        ));
    }

    #[test]
    fn immediate_accept_succeeds_on_the_first_tick() {
        let mut spec = unary_increment();
        spec.initial = "done".into();
        let ntm = spec.compile().unwrap();
        let m = model(&tm_to_bt(&ntm, 4, &[]).unwrap());
        assert_eq!(
            trace(&m, 1, &mut FirstChoice).unwrap()[0].statuses[m.root],
            Status::Success
        );
    }

    #[test]
    fn leaving_the_bound_is_modelled() {
        let spec = unary_increment();
        let ntm = spec.compile().unwrap();
        let m = model(&tm_to_bt(&ntm, 2, &[1, 1]).unwrap());
        let obs = trace(&m, 4, &mut FirstChoice).unwrap();
        let c = tm_config_of(&m, &ntm, &obs[2].valuation);
        assert!(c.exceeded);
        assert_eq!(obs[3].statuses[m.root], Status::Failure);
        let run = ntm_runs(&ntm, 2, &TmConfig::initial(&ntm, &[1, 1]), 4)
            .into_iter()
            .next()
            .unwrap();
        assert!(trace_equiv(
            &obs,
            &run,
            |o| tm_view_of(&m, &ntm, o),
            TmConfig::view
        ));
    }

    #[test]
    fn trace_equiv_checks_length() {
        assert!(trace_equiv(&[1, 2], &[1, 2], |x| *x, |y| *y));
        assert!(!trace_equiv(&[1, 2], &[1], |x| *x, |y| *y));
    }
}
