//! Symbolic encoding of a tree-monitor product.
//!
//! The base transition `f` is a micro-step. From a tick boundary it clears
//! the node statuses and enters the tick; inside a tick it executes the one
//! active leaf; once the active root has resolved it commits composite
//! statuses and memory, applies U_E, steps the monitor and returns to the
//! boundary. Composite statuses are combinational over leaf statuses, so the
//! only per-visit state is the set of leaf statuses.
//!
//! The optimization levels compose `f` (with `L` the larger leaf count):
//! no_opt is `f`; full_opt is `g^(L+1) ∘ f` with `g` stopping at the
//! boundary; first_opt stops after the first leaf; last_opt stops after the
//! last leaf, before the commit.

use std::collections::HashMap;
use std::fmt;

use crate::composition::{Btm, Mode, ProductState};
use crate::expr::{BinOp, CExpr, CRhs};
use crate::model::{Domain, Status};
use crate::monitors::{Config, MonitorKind, Verdict};
use crate::semantics::{CClause, CKind, TreeMemory};

use super::ir::{Ir, IrBuilder, IrExpr, IrType};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum OptLevel {
    NoOpt,
    FirstOpt,
    LastOpt,
    FullOpt,
}

impl OptLevel {
    pub const ALL: [OptLevel; 4] = [
        OptLevel::NoOpt,
        OptLevel::FirstOpt,
        OptLevel::LastOpt,
        OptLevel::FullOpt,
    ];

    pub fn name(self) -> &'static str {
        match self {
            OptLevel::NoOpt => "no_opt",
            OptLevel::FirstOpt => "first_opt",
            OptLevel::LastOpt => "last_opt",
            OptLevel::FullOpt => "full_opt",
        }
    }

    /// Accepts `no`, `no_opt`, `first`, ... .
    pub fn parse(s: &str) -> Option<OptLevel> {
        let s = s.strip_suffix("_opt").unwrap_or(s);
        match s {
            "no" => Some(OptLevel::NoOpt),
            "first" => Some(OptLevel::FirstOpt),
            "last" => Some(OptLevel::LastOpt),
            "full" => Some(OptLevel::FullOpt),
            _ => None,
        }
    }
}

impl fmt::Display for OptLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum EncodeError {
    #[error("monitor has more than {0} configurations; too large to encode")]
    MonitorTooLarge(usize),
}

pub const MAX_MONITOR_CONFIGS: usize = 256;

const PH_BOUNDARY: i64 = 0;
const PH_TICK: i64 = 1;
const PH_ERROR: i64 = 2;

#[derive(Clone, Debug)]
enum Mem {
    None,
    Resume(usize),
    Done(Vec<usize>),
}

/// Where each part of a product state lives in the IR state vector.
#[derive(Clone, Debug)]
struct Layout {
    n_vars: usize,
    status: Vec<usize>,
    mem: Vec<Mem>,
    mon: Vec<usize>,
    mode: usize,
    phase: usize,
}

/// An encoded product with the maps needed to move between IR states and
/// product states.
#[derive(Clone, Debug)]
pub struct Encoding {
    pub ir: Ir,
    pub level: OptLevel,
    /// `phase = boundary`, over state variables.
    pub boundary: IrExpr,
    layout: Layout,
    configs: Vec<Config>,
    status_enum: usize,
    mode_enum: usize,
    phase_enum: usize,
    var_types: Vec<IrType>,
}

fn mode_index(m: Mode) -> i64 {
    match m {
        Mode::Nominal => 0,
        Mode::Contingency => 1,
        Mode::Deadlock => 2,
    }
}

fn var_type(b: &mut IrBuilder, d: &Domain) -> IrType {
    match d {
        Domain::Bool => IrType::Bool,
        Domain::Range { lo, hi } => IrType::Int { lo: *lo, hi: *hi },
        Domain::Enum(s) => IrType::Enum(b.add_enum(s.clone())),
    }
}

/// How atoms of a compiled expression map onto IR expressions.
struct Ctx<'c> {
    vars: &'c [IrExpr],
    status: &'c [IrExpr],
    status_enum: usize,
    locals: &'c [i64],
    local_tys: &'c [IrType],
    mode: Option<(&'c IrExpr, usize)>,
}

fn constant(v: i64, hint: Option<&IrType>) -> IrExpr {
    match hint {
        Some(IrType::Bool) => IrExpr::Bool(v != 0),
        Some(IrType::Enum(e)) => IrExpr::Sym(*e, v),
        _ => IrExpr::Int(v),
    }
}

fn is_const(e: &CExpr) -> bool {
    matches!(e, CExpr::Const(_))
}

/// Translate with `hint` typing bare constants.
fn tr(ir: &Ir, e: &CExpr, c: &Ctx<'_>, hint: Option<&IrType>) -> IrExpr {
    let bool_t = IrType::Bool;
    let int_t = IrType::Int {
        lo: i64::MIN,
        hi: i64::MAX,
    };
    match e {
        CExpr::Const(v) => constant(*v, hint),
        CExpr::Var(i) => c.vars[*i].clone(),
        CExpr::Local(i) => constant(c.locals[*i], Some(&c.local_tys[*i])),
        CExpr::StatusIs(n, s) => IrExpr::eq(
            c.status[*n].clone(),
            IrExpr::Sym(c.status_enum, s.index() as i64),
        ),
        CExpr::Contingency | CExpr::Deadlock => {
            let (m, en) = c
                .mode
                .expect("product atoms resolved only over product states");
            let want = if matches!(e, CExpr::Contingency) {
                Mode::Contingency
            } else {
                Mode::Deadlock
            };
            IrExpr::eq(m.clone(), IrExpr::Sym(en, mode_index(want)))
        }
        CExpr::Not(a) => IrExpr::not(tr(ir, a, c, Some(&bool_t))),
        CExpr::Neg(a) => IrExpr::Neg(Box::new(tr(ir, a, c, Some(&int_t)))),
        CExpr::Bin(op @ (BinOp::And | BinOp::Or | BinOp::Implies), a, b) => IrExpr::bin(
            *op,
            tr(ir, a, c, Some(&bool_t)),
            tr(ir, b, c, Some(&bool_t)),
        ),
        CExpr::Bin(op, a, b) if op.is_arith() => {
            IrExpr::bin(*op, tr(ir, a, c, Some(&int_t)), tr(ir, b, c, Some(&int_t)))
        }
        CExpr::Bin(op, a, b) => {
            if is_const(a) && !is_const(b) {
                let tb = tr(ir, b, c, None);
                let ty = ir.type_of(&tb);
                IrExpr::bin(*op, tr(ir, a, c, Some(&ty)), tb)
            } else {
                let ta = tr(ir, a, c, None);
                let ty = ir.type_of(&ta);
                IrExpr::bin(*op, ta, tr(ir, b, c, Some(&ty)))
            }
        }
        CExpr::Call(f, args) => IrExpr::Call(
            *f,
            args.iter().map(|a| tr(ir, a, c, Some(&int_t))).collect(),
        ),
    }
}

/// `a = b`, folded when both sides are literals.
fn eqc(a: IrExpr, b: IrExpr) -> IrExpr {
    match (&a, &b) {
        (IrExpr::Int(x), IrExpr::Int(y)) | (IrExpr::Sym(_, x), IrExpr::Sym(_, y)) => {
            IrExpr::Bool(x == y)
        }
        (IrExpr::Bool(x), IrExpr::Bool(y)) => IrExpr::Bool(x == y),
        _ => IrExpr::eq(a, b),
    }
}

fn pick(input: Option<usize>, alts: Vec<IrExpr>) -> IrExpr {
    match input {
        None => alts.into_iter().next().expect("one alternative"),
        Some(i) => {
            let n = alts.len();
            let mut it = alts.into_iter();
            let arms: Vec<(IrExpr, IrExpr)> = (0..n - 1)
                .map(|k| {
                    (
                        IrExpr::eq(IrExpr::Input(i), IrExpr::Int(k as i64)),
                        it.next().unwrap(),
                    )
                })
                .collect();
            IrExpr::case(arms, it.next().unwrap())
        }
    }
}

struct LayerOut {
    next: Vec<IrExpr>,
    any_act: IrExpr,
    in_tick: IrExpr,
}

struct Enc<'a> {
    btm: &'a Btm,
    b: IrBuilder,
    lay: Layout,
    configs: Vec<Config>,
    st: usize,
    md: usize,
    ph: usize,
    var_types: Vec<IrType>,
    local_tys: Vec<IrType>,
    inputs: HashMap<(Option<usize>, usize, Option<(usize, usize)>), usize>,
}

impl Enc<'_> {
    fn s(&self, s: Status) -> IrExpr {
        IrExpr::Sym(self.st, s.index() as i64)
    }
    fn m(&self, m: Mode) -> IrExpr {
        IrExpr::Sym(self.md, mode_index(m))
    }
    fn p(&self, p: i64) -> IrExpr {
        IrExpr::Sym(self.ph, p)
    }

    fn input(
        &mut self,
        node: Option<usize>,
        clause: usize,
        write: Option<(usize, usize)>,
        arity: usize,
    ) -> Option<usize> {
        if arity < 2 {
            return None;
        }
        let key = (node, clause, write);
        if let Some(&i) = self.inputs.get(&key) {
            return Some(i);
        }
        let owner = match node {
            Some(n) => self.btm.model.nodes[n].name.clone(),
            None => "env".to_string(),
        };
        let name = match write {
            None => format!("ch_{owner}_{clause}"),
            Some((b, w)) => format!("ch_{owner}_{clause}_{b}_{w}"),
        };
        let i = self.b.add_input(name, arity);
        self.inputs.insert(key, i);
        Some(i)
    }

    /// New values of every variable and the returned status (if any clause
    /// fires) for a clause list, plus the exhaustion condition.
    fn clauses(
        &mut self,
        tag: &str,
        node: Option<usize>,
        clauses: &[CClause],
        vars: &[IrExpr],
        status: &[IrExpr],
    ) -> (Vec<IrExpr>, IrExpr, IrExpr) {
        let bool_t = IrType::Bool;
        let mut guards = Vec::new();
        for (ci, c) in clauses.iter().enumerate() {
            let ctx = Ctx {
                vars,
                status,
                status_enum: self.st,
                locals: &[],
                local_tys: &[],
                mode: None,
            };
            let g = tr(&self.b.ir, &c.guard, &ctx, Some(&bool_t));
            guards.push(self.b.def(format!("{tag}g{ci}"), g));
        }
        let n = vars.len();
        // per clause, per variable: the value picked by the branch choice, if written
        let mut written: Vec<Vec<Option<IrExpr>>> = Vec::new();
        let mut st_arms = Vec::new();
        for (ci, c) in clauses.iter().enumerate() {
            let bi = self.input(node, ci, None, c.branches.len());
            let mut per_var: Vec<Option<Vec<IrExpr>>> = vec![None; n];
            for (bix, br) in c.branches.iter().enumerate() {
                for (wi, (t, rhs)) in br.writes.iter().enumerate() {
                    let ty = self.var_types[*t].clone();
                    let ctx = Ctx {
                        vars,
                        status,
                        status_enum: self.st,
                        locals: &[],
                        local_tys: &[],
                        mode: None,
                    };
                    let raw = match rhs {
                        CRhs::Det(e) => tr(&self.b.ir, e, &ctx, Some(&ty)),
                        CRhs::Choice(alts) => {
                            let alts: Vec<IrExpr> = alts
                                .iter()
                                .map(|a| tr(&self.b.ir, a, &ctx, Some(&ty)))
                                .collect();
                            let wi_in = self.input(node, ci, Some((bix, wi)), alts.len());
                            pick(wi_in, alts)
                        }
                    };
                    let v = match ty {
                        IrType::Int { lo, hi } => {
                            self.b.clamp(format!("{tag}w{ci}_{bix}_{wi}"), raw, lo, hi)
                        }
                        _ => raw,
                    };
                    per_var[*t].get_or_insert_with(|| vec![vars[*t].clone(); c.branches.len()])
                        [bix] = v;
                }
            }
            written.push(
                per_var
                    .into_iter()
                    .map(|alts| alts.map(|a| pick(bi, a)))
                    .collect(),
            );
            let sts: Vec<IrExpr> = c.branches.iter().map(|b| self.s(b.status)).collect();
            st_arms.push((guards[ci].clone(), pick(bi, sts)));
        }
        let mut out = Vec::with_capacity(n);
        for t in 0..n {
            if written.iter().all(|w| w[t].is_none()) {
                out.push(vars[t].clone());
                continue;
            }
            let arms = guards
                .iter()
                .zip(&written)
                .map(|(g, w)| (g.clone(), w[t].clone().unwrap_or_else(|| vars[t].clone())))
                .collect();
            let e = IrExpr::case(arms, vars[t].clone());
            out.push(self.b.def(format!("{tag}new_{t}"), e));
        }
        let status_e = self.b.def(
            format!("{tag}status"),
            IrExpr::case(st_arms, self.s(Status::Invalid)),
        );
        let exhausted = self
            .b
            .def(format!("{tag}exhausted"), IrExpr::not(IrExpr::any(guards)));
        (out, status_e, exhausted)
    }

    fn layer(&mut self, cur: &[IrExpr], tag: &str) -> LayerOut {
        let btm = self.btm;
        let model = &btm.model;
        let nn = model.nodes.len();
        let lay = self.lay.clone();
        let at_b = self.b.def(
            format!("{tag}at_boundary"),
            IrExpr::eq(cur[lay.phase].clone(), self.p(PH_BOUNDARY)),
        );
        let in_t = self.b.def(
            format!("{tag}in_tick"),
            IrExpr::eq(cur[lay.phase].clone(), self.p(PH_TICK)),
        );
        let mode = cur[lay.mode].clone();
        let vars: Vec<IrExpr> = cur[..lay.n_vars].to_vec();

        // current (combinational) status of every node
        let mut cs = vec![IrExpr::Bool(false); nn];
        for n in (0..nn).rev() {
            let node = &model.nodes[n];
            let ch = &node.children;
            let e = match &node.kind {
                CKind::Leaf { .. } => cur[lay.status[n]].clone(),
                CKind::Decorator(map) => {
                    let c = cs[ch[0]].clone();
                    let arms = [Status::Failure, Status::Running, Status::Success]
                        .iter()
                        .map(|&s| (IrExpr::eq(c.clone(), self.s(s)), self.s(map.apply(s))))
                        .collect();
                    IrExpr::case(arms, self.s(Status::Invalid))
                }
                CKind::Sequence | CKind::Selector => {
                    let pass = if node.kind == CKind::Sequence {
                        Status::Success
                    } else {
                        Status::Failure
                    };
                    let fold = |from: usize, me: &Self| {
                        let arms = (from..ch.len())
                            .map(|i| {
                                (
                                    IrExpr::not(IrExpr::eq(cs[ch[i]].clone(), me.s(pass))),
                                    cs[ch[i]].clone(),
                                )
                            })
                            .collect();
                        IrExpr::case(arms, me.s(pass))
                    };
                    match &lay.mem[n] {
                        Mem::Resume(mv) => {
                            let arms = (1..ch.len())
                                .map(|i| {
                                    (
                                        IrExpr::eq(cur[*mv].clone(), IrExpr::Int(i as i64 + 1)),
                                        fold(i, self),
                                    )
                                })
                                .collect();
                            IrExpr::case(arms, fold(0, self))
                        }
                        _ => fold(0, self),
                    }
                }
                CKind::ParallelAll | CKind::ParallelOne => {
                    let all = node.kind == CKind::ParallelAll;
                    let (sticky, other) = if all {
                        (Status::Success, Status::Failure)
                    } else {
                        (Status::Failure, Status::Success)
                    };
                    let skip: Vec<IrExpr> = match &lay.mem[n] {
                        Mem::Done(bits) => bits.iter().map(|&b| cur[b].clone()).collect(),
                        _ => vec![IrExpr::Bool(false); ch.len()],
                    };
                    let live = |i: usize| IrExpr::not(skip[i].clone());
                    let unresolved = IrExpr::any((0..ch.len()).map(|i| {
                        IrExpr::and(
                            live(i),
                            IrExpr::eq(cs[ch[i]].clone(), self.s(Status::Invalid)),
                        )
                    }));
                    let decided = IrExpr::any((0..ch.len()).map(|i| {
                        IrExpr::and(live(i), IrExpr::eq(cs[ch[i]].clone(), self.s(other)))
                    }));
                    let complete = IrExpr::all((0..ch.len()).map(|i| {
                        IrExpr::or(
                            skip[i].clone(),
                            IrExpr::eq(cs[ch[i]].clone(), self.s(sticky)),
                        )
                    }));
                    IrExpr::case(
                        vec![
                            (unresolved, self.s(Status::Invalid)),
                            (decided, self.s(other)),
                            (complete, self.s(sticky)),
                        ],
                        self.s(Status::Running),
                    )
                }
            };
            cs[n] = self.b.def(format!("{tag}cs_{}", node.name), e);
        }

        // which node is being ticked right now
        let mut act = vec![IrExpr::Bool(false); nn];
        let nominal_mode = match model.contingency_root {
            Some(_) => IrExpr::eq(mode.clone(), self.m(Mode::Nominal)),
            None => IrExpr::not(IrExpr::eq(mode.clone(), self.m(Mode::Deadlock))),
        };
        let unresolved = |n: usize, me: &Self| IrExpr::eq(cs[n].clone(), me.s(Status::Invalid));
        let e = IrExpr::all([in_t.clone(), nominal_mode, unresolved(model.root, self)]);
        act[model.root] = self
            .b
            .def(format!("{tag}act_{}", model.nodes[model.root].name), e);
        if let Some(cr) = model.contingency_root {
            let e = IrExpr::all([
                in_t.clone(),
                IrExpr::eq(mode.clone(), self.m(Mode::Contingency)),
                unresolved(cr, self),
            ]);
            act[cr] = self.b.def(format!("{tag}act_{}", model.nodes[cr].name), e);
        }
        for n in 0..nn {
            let node = &model.nodes[n];
            let ch = &node.children;
            for (i, &c) in ch.iter().enumerate() {
                let e = match &node.kind {
                    CKind::Decorator(_) => act[n].clone(),
                    CKind::Sequence | CKind::Selector => {
                        let pass = if node.kind == CKind::Sequence {
                            Status::Success
                        } else {
                            Status::Failure
                        };
                        let (started, before): (IrExpr, Box<dyn Fn(usize) -> IrExpr>) = match &lay
                            .mem[n]
                        {
                            Mem::Resume(mv) => {
                                let m = cur[*mv].clone();
                                (
                                    IrExpr::bin(BinOp::Le, m.clone(), IrExpr::Int(i as i64 + 1)),
                                    Box::new(move |j| {
                                        IrExpr::bin(BinOp::Gt, m.clone(), IrExpr::Int(j as i64 + 1))
                                    }),
                                )
                            }
                            _ => (IrExpr::Bool(true), Box::new(|_| IrExpr::Bool(false))),
                        };
                        let prior = IrExpr::all((0..i).map(|j| {
                            IrExpr::or(before(j), IrExpr::eq(cs[ch[j]].clone(), self.s(pass)))
                        }));
                        IrExpr::all([act[n].clone(), started, prior, unresolved(c, self)])
                    }
                    CKind::ParallelAll | CKind::ParallelOne => {
                        let skip: Vec<IrExpr> = match &lay.mem[n] {
                            Mem::Done(bits) => bits.iter().map(|&b| cur[b].clone()).collect(),
                            _ => vec![IrExpr::Bool(false); ch.len()],
                        };
                        let prior = IrExpr::all((0..i).map(|j| {
                            IrExpr::or(skip[j].clone(), IrExpr::not(unresolved(ch[j], self)))
                        }));
                        IrExpr::all([
                            act[n].clone(),
                            IrExpr::not(skip[i].clone()),
                            prior,
                            unresolved(c, self),
                        ])
                    }
                    CKind::Leaf { .. } => unreachable!("leaves have no children"),
                };
                act[c] = self.b.def(format!("{tag}act_{}", model.nodes[c].name), e);
            }
        }

        // leaf execution
        let leaves: Vec<usize> = (0..nn)
            .filter(|&n| matches!(model.nodes[n].kind, CKind::Leaf { .. }))
            .collect();
        let mut leaf_vals: Vec<Vec<(IrExpr, IrExpr)>> = vec![Vec::new(); lay.n_vars];
        let mut leaf_status: Vec<Option<IrExpr>> = vec![None; nn];
        let mut exhausted = Vec::new();
        for &l in &leaves {
            let CKind::Leaf { clauses, .. } = &model.nodes[l].kind else {
                unreachable!()
            };
            let ltag = format!("{tag}{}_", model.nodes[l].name);
            let (vals, st, ex) = self.clauses(&ltag, Some(l), clauses, &vars, &cs);
            for (v, e) in vals.into_iter().enumerate() {
                if e != vars[v] {
                    leaf_vals[v].push((act[l].clone(), e));
                }
            }
            leaf_status[l] = Some(st);
            exhausted.push(IrExpr::and(act[l].clone(), ex));
        }
        let any_act = self.b.def(
            format!("{tag}any_act"),
            IrExpr::any(leaves.iter().map(|&l| act[l].clone())),
        );
        let any_exhausted = self
            .b
            .def(format!("{tag}leaf_exhausted"), IrExpr::any(exhausted));
        let tick_done = self.b.def(
            format!("{tag}tick_done"),
            IrExpr::and(in_t.clone(), IrExpr::not(any_act.clone())),
        );

        // commit: U_E over the post-tick valuation and final statuses
        let (ue_vals, _, ue_ex) = self.clauses(
            &format!("{tag}env_"),
            None,
            &model.update.clone(),
            &vars,
            &cs,
        );
        let ue_exhausted = if model.update.is_empty() {
            IrExpr::Bool(false)
        } else {
            ue_ex
        };
        let post: Vec<IrExpr> = ue_vals;

        // monitor over the post-step observation
        let mon_next = self.monitor(tag, &post, &cs, cur);
        let dead = match &btm.monitor.kind {
            MonitorKind::Esm { .. } => self.b.def(
                format!("{tag}mon_deadlock"),
                IrExpr::not(IrExpr::any(mon_next.iter().cloned())),
            ),
            _ => IrExpr::Bool(false),
        };
        let trips = match &btm.monitor.kind {
            MonitorKind::Esm { verdicts, .. } => IrExpr::and(
                IrExpr::any(mon_next.iter().cloned()),
                IrExpr::all(
                    self.configs
                        .iter()
                        .zip(&mon_next)
                        .filter(|(c, _)| verdicts[c.0 as usize] == Verdict::Nominal)
                        .map(|(_, m)| IrExpr::not(m.clone())),
                ),
            ),
            MonitorKind::Nfa { accepting, .. } => IrExpr::any(
                self.configs
                    .iter()
                    .zip(&mon_next)
                    .filter(|(c, _)| accepting[c.0 as usize])
                    .map(|(_, m)| m.clone()),
            ),
            MonitorKind::Ltl { .. } => IrExpr::all(mon_next.iter().map(|m| IrExpr::not(m.clone()))),
        };
        let trips = self.b.def(format!("{tag}mon_trips"), trips);
        let mode_next = IrExpr::case(
            vec![
                (dead.clone(), self.m(Mode::Deadlock)),
                (
                    IrExpr::eq(mode.clone(), self.m(Mode::Contingency)),
                    self.m(Mode::Contingency),
                ),
                (trips, self.m(Mode::Contingency)),
            ],
            self.m(Mode::Nominal),
        );

        let reset = self.b.def(
            format!("{tag}reset"),
            IrExpr::and(
                at_b.clone(),
                IrExpr::not(IrExpr::eq(mode.clone(), self.m(Mode::Deadlock))),
            ),
        );
        let mut next = cur.to_vec();
        let mut put = |me: &mut Self,
                       idx: usize,
                       name: String,
                       reset_v: Option<IrExpr>,
                       leaf_v: Option<IrExpr>,
                       commit_v: IrExpr| {
            let mut arms = Vec::new();
            if let Some(r) = reset_v {
                arms.push((reset.clone(), r));
            }
            if let Some(l) = leaf_v {
                arms.push((any_act.clone(), l));
            }
            arms.push((tick_done.clone(), commit_v));
            let e = IrExpr::case(arms, cur[idx].clone());
            next[idx] = me.b.def(name, e);
        };
        for v in 0..lay.n_vars {
            let lv = if leaf_vals[v].is_empty() {
                None
            } else {
                Some(IrExpr::case(
                    std::mem::take(&mut leaf_vals[v]),
                    vars[v].clone(),
                ))
            };
            let name = format!("{tag}next_{}", self.b.ir.vars[v].name);
            put(self, v, name, None, lv, post[v].clone());
        }
        for n in 0..nn {
            let idx = lay.status[n];
            let lv = leaf_status[n]
                .clone()
                .map(|st| IrExpr::case(vec![(act[n].clone(), st)], cur[idx].clone()));
            let name = format!("{tag}next_st_{}", model.nodes[n].name);
            put(
                self,
                idx,
                name,
                Some(self.s(Status::Invalid)),
                lv,
                cs[n].clone(),
            );
        }
        for n in 0..nn {
            let node = &model.nodes[n];
            let visited = IrExpr::not(IrExpr::eq(cs[n].clone(), self.s(Status::Invalid)));
            let running = IrExpr::eq(cs[n].clone(), self.s(Status::Running));
            match lay.mem[n].clone() {
                Mem::None => {}
                Mem::Resume(mv) => {
                    let at = IrExpr::case(
                        node.children
                            .iter()
                            .enumerate()
                            .map(|(i, &c)| {
                                (
                                    IrExpr::eq(cs[c].clone(), self.s(Status::Running)),
                                    IrExpr::Int(i as i64 + 1),
                                )
                            })
                            .collect(),
                        IrExpr::Int(0),
                    );
                    let e = IrExpr::case(
                        vec![(running.clone(), at), (visited.clone(), IrExpr::Int(0))],
                        cur[mv].clone(),
                    );
                    put(
                        self,
                        mv,
                        format!("{tag}next_mem_{}", node.name),
                        None,
                        None,
                        e,
                    );
                }
                Mem::Done(bits) => {
                    let sticky = if node.kind == CKind::ParallelAll {
                        Status::Success
                    } else {
                        Status::Failure
                    };
                    for (i, &bv) in bits.iter().enumerate() {
                        let c = node.children[i];
                        let keep =
                            IrExpr::or(cur[bv].clone(), IrExpr::eq(cs[c].clone(), self.s(sticky)));
                        let e = IrExpr::case(
                            vec![
                                (running.clone(), keep),
                                (visited.clone(), IrExpr::Bool(false)),
                            ],
                            cur[bv].clone(),
                        );
                        put(
                            self,
                            bv,
                            format!("{tag}next_done_{}_{i}", node.name),
                            None,
                            None,
                            e,
                        );
                    }
                }
            }
        }
        for (k, &mv) in lay.mon.clone().iter().enumerate() {
            put(
                self,
                mv,
                format!("{tag}next_mon_{k}"),
                None,
                None,
                mon_next[k].clone(),
            );
        }
        put(
            self,
            lay.mode,
            format!("{tag}next_mode"),
            None,
            None,
            mode_next,
        );
        let leaf_phase = IrExpr::case(vec![(any_exhausted, self.p(PH_ERROR))], self.p(PH_TICK));
        let commit_phase =
            IrExpr::case(vec![(ue_exhausted, self.p(PH_ERROR))], self.p(PH_BOUNDARY));
        put(
            self,
            lay.phase,
            format!("{tag}next_phase"),
            Some(self.p(PH_TICK)),
            Some(leaf_phase),
            commit_phase,
        );
        LayerOut {
            next,
            any_act,
            in_tick: in_t,
        }
    }

    /// Next value of every monitor configuration bit.
    fn monitor(
        &mut self,
        tag: &str,
        post: &[IrExpr],
        cs: &[IrExpr],
        cur: &[IrExpr],
    ) -> Vec<IrExpr> {
        let btm = self.btm;
        let bool_t = IrType::Bool;
        let lay = self.lay.clone();
        let configs = self.configs.clone();
        let idx: HashMap<Config, usize> = configs
            .iter()
            .cloned()
            .enumerate()
            .map(|(i, c)| (c, i))
            .collect();
        let mut terms: Vec<Vec<IrExpr>> = vec![Vec::new(); configs.len()];
        match &btm.monitor.kind {
            MonitorKind::Esm { transitions, .. } => {
                let local_tys = self.local_tys.clone();
                for (j, (q, locals)) in configs.iter().enumerate() {
                    for (ti, t) in transitions.iter().enumerate().filter(|(_, t)| t.from == *q) {
                        let ctx = Ctx {
                            vars: post,
                            status: cs,
                            status_enum: self.st,
                            locals,
                            local_tys: &local_tys,
                            mode: None,
                        };
                        let g = tr(&self.b.ir, &t.guard, &ctx, Some(&bool_t));
                        let g = self.b.def(format!("{tag}mon_g{ti}_{j}"), g);
                        let fired = IrExpr::and(cur[lay.mon[j]].clone(), g);
                        // resulting locals, one expression per local
                        let mut new_locals: Vec<IrExpr> = locals
                            .iter()
                            .zip(&local_tys)
                            .map(|(v, ty)| constant(*v, Some(ty)))
                            .collect();
                        for (li, e) in &t.updates {
                            let raw = tr(&self.b.ir, e, &ctx, Some(&local_tys[*li]));
                            new_locals[*li] = match local_tys[*li] {
                                IrType::Int { lo, hi } => {
                                    self.b
                                        .clamp(format!("{tag}mon_u{ti}_{j}_{li}"), raw, lo, hi)
                                }
                                _ => raw,
                            };
                        }
                        for (k, (q2, l2)) in configs.iter().enumerate() {
                            if *q2 != t.to {
                                continue;
                            }
                            let same = IrExpr::all(
                                new_locals
                                    .iter()
                                    .zip(l2)
                                    .zip(&local_tys)
                                    .map(|((e, v), ty)| eqc(e.clone(), constant(*v, Some(ty)))),
                            );
                            if same != IrExpr::Bool(false) {
                                terms[k].push(IrExpr::and(fired.clone(), same));
                            }
                        }
                    }
                }
            }
            MonitorKind::Nfa {
                symbols,
                transitions,
                ..
            } => {
                let mut sym = Vec::new();
                for (si, s) in symbols.iter().enumerate() {
                    let ctx = Ctx {
                        vars: post,
                        status: cs,
                        status_enum: self.st,
                        locals: &[],
                        local_tys: &[],
                        mode: None,
                    };
                    let e = tr(&self.b.ir, s, &ctx, Some(&bool_t));
                    sym.push(self.b.def(format!("{tag}mon_sym{si}"), e));
                }
                for &(f, s, t) in transitions {
                    let (j, k) = (idx[&(f, vec![])], idx[&(t, vec![])]);
                    terms[k].push(IrExpr::and(cur[lay.mon[j]].clone(), sym[s].clone()));
                }
            }
            MonitorKind::Ltl { ba, atoms, live } => {
                let mut a = Vec::new();
                for (ai, at) in atoms.iter().enumerate() {
                    let ctx = Ctx {
                        vars: post,
                        status: cs,
                        status_enum: self.st,
                        locals: &[],
                        local_tys: &[],
                        mode: None,
                    };
                    let e = tr(&self.b.ir, at, &ctx, Some(&bool_t));
                    a.push(self.b.def(format!("{tag}mon_atom{ai}"), e));
                }
                let pre = ba.states.len();
                for (k, st) in ba.states.iter().enumerate() {
                    if !live[k] {
                        continue;
                    }
                    let matches = IrExpr::all((0..a.len()).filter_map(|i| {
                        if st.pos >> i & 1 == 1 {
                            Some(a[i].clone())
                        } else if st.neg >> i & 1 == 1 {
                            Some(IrExpr::not(a[i].clone()))
                        } else {
                            None
                        }
                    }));
                    let mut from = Vec::new();
                    if ba.initial.contains(&k) {
                        from.push(cur[lay.mon[pre]].clone());
                    }
                    for (j, sj) in ba.states.iter().enumerate() {
                        if sj.succ.contains(&k) {
                            from.push(cur[lay.mon[j]].clone());
                        }
                    }
                    terms[k].push(IrExpr::and(matches, IrExpr::any(from)));
                }
            }
        }
        terms
            .into_iter()
            .enumerate()
            .map(|(k, t)| {
                let e = IrExpr::any(t);
                self.b.def(format!("{tag}mon_next{k}"), e)
            })
            .collect()
    }

    /// `case phase = tick : f(x) ; else x` (or `any_act` for `h`), as definitions.
    fn guarded(&mut self, x: &[IrExpr], tag: &str, while_active: bool) -> Vec<IrExpr> {
        let lo = self.layer(x, tag);
        let cond = if while_active {
            lo.any_act.clone()
        } else {
            lo.in_tick.clone()
        };
        (0..x.len())
            .map(|v| {
                let e = IrExpr::case(vec![(cond.clone(), lo.next[v].clone())], x[v].clone());
                let name = format!("{tag}x_{}", self.b.ir.vars[v].name);
                self.b.def(name, e)
            })
            .collect()
    }
}

/// Encode `btm` at `level`. Initial IR states are the product's initial
/// states at a tick boundary.
pub fn encode(btm: &Btm, level: OptLevel) -> Result<Encoding, EncodeError> {
    let model = &btm.model;
    let configs = btm
        .monitor
        .all_configs(MAX_MONITOR_CONFIGS)
        .ok_or(EncodeError::MonitorTooLarge(MAX_MONITOR_CONFIGS))?;
    let mut b = IrBuilder::new();
    let st = b.add_enum(Status::ALL.iter().map(|s| s.word().to_string()).collect());
    let md = b.add_enum(vec![
        "nominal".into(),
        "contingency".into(),
        "deadlock".into(),
    ]);
    let ph = b.add_enum(vec!["boundary".into(), "in_tick".into(), "error".into()]);
    let mut var_types = Vec::new();
    for v in &model.vars {
        let ty = var_type(&mut b, &v.domain);
        var_types.push(ty.clone());
        b.add_var(v.name.clone(), ty, v.initial.clone());
    }
    let status: Vec<usize> = model
        .nodes
        .iter()
        .map(|n| {
            b.add_var(
                format!("st_{}", n.name),
                IrType::Enum(st),
                vec![Status::Invalid.index() as i64],
            )
        })
        .collect();
    let mem: Vec<Mem> = model
        .nodes
        .iter()
        .map(|n| match (&n.kind, n.memory) {
            (CKind::Sequence | CKind::Selector, true) => Mem::Resume(b.add_var(
                format!("mem_{}", n.name),
                IrType::Int {
                    lo: 0,
                    hi: n.children.len() as i64,
                },
                vec![0],
            )),
            (CKind::ParallelAll | CKind::ParallelOne, true) => Mem::Done(
                (0..n.children.len())
                    .map(|i| b.add_var(format!("done_{}_{i}", n.name), IrType::Bool, vec![0]))
                    .collect(),
            ),
            _ => Mem::None,
        })
        .collect();
    let mon: Vec<usize> = configs
        .iter()
        .enumerate()
        .map(|(k, c)| {
            b.add_var(
                format!("mon_{k}"),
                IrType::Bool,
                vec![btm.monitor.initial.contains(c) as i64],
            )
        })
        .collect();
    let init_mode = btm.initial_state(model.first_initial()).mode;
    let mode = b.add_var("mode", IrType::Enum(md), vec![mode_index(init_mode)]);
    let phase = b.add_var("phase", IrType::Enum(ph), vec![PH_BOUNDARY]);
    let local_tys: Vec<IrType> = btm
        .monitor
        .locals
        .iter()
        .map(|(_, d)| var_type(&mut b, d))
        .collect();
    let lay = Layout {
        n_vars: model.vars.len(),
        status,
        mem,
        mon,
        mode,
        phase,
    };
    let n_state = b.ir.vars.len();
    let mut enc = Enc {
        btm,
        b,
        lay: lay.clone(),
        configs: configs.clone(),
        st,
        md,
        ph,
        var_types: var_types.clone(),
        local_tys,
        inputs: HashMap::new(),
    };
    let x0: Vec<IrExpr> = (0..n_state).map(IrExpr::Var).collect();
    let depth = model
        .leaf_count(model.root)
        .max(model.contingency_root.map_or(0, |c| model.leaf_count(c)))
        + 1;
    let next = match level {
        OptLevel::NoOpt => enc.layer(&x0, "").next,
        OptLevel::FullOpt => {
            let mut x = enc.layer(&x0, "l0_").next;
            for j in 1..=depth {
                x = enc.guarded(&x, &format!("l{j}_"), false);
            }
            x
        }
        OptLevel::FirstOpt => {
            let f1 = enc.layer(&x0, "b0_").next;
            let f2 = enc.layer(&f1, "b1_").next;
            let mut g = x0.clone();
            for j in 0..depth {
                g = enc.guarded(&g, &format!("t{j}_"), false);
            }
            let at_b = IrExpr::eq(IrExpr::Var(lay.phase), IrExpr::Sym(ph, PH_BOUNDARY));
            (0..n_state)
                .map(|v| IrExpr::case(vec![(at_b.clone(), f2[v].clone())], g[v].clone()))
                .collect()
        }
        OptLevel::LastOpt => {
            let mut h = enc.layer(&x0, "b0_").next;
            for j in 1..=depth {
                h = enc.guarded(&h, &format!("b{j}_"), true);
            }
            let f = enc.layer(&x0, "t0_").next;
            let at_b = IrExpr::eq(IrExpr::Var(lay.phase), IrExpr::Sym(ph, PH_BOUNDARY));
            (0..n_state)
                .map(|v| IrExpr::case(vec![(at_b.clone(), h[v].clone())], f[v].clone()))
                .collect()
        }
    };
    let mut ir = enc.b.finish();
    ir.next = next;
    let boundary = IrExpr::eq(IrExpr::Var(lay.phase), IrExpr::Sym(ph, PH_BOUNDARY));
    Ok(Encoding {
        ir,
        level,
        boundary,
        layout: lay,
        configs,
        status_enum: st,
        mode_enum: md,
        phase_enum: ph,
        var_types,
    })
}

impl Encoding {
    pub fn is_boundary(&self, s: &[i64]) -> bool {
        s[self.layout.phase] == PH_BOUNDARY
    }

    pub fn is_error(&self, s: &[i64]) -> bool {
        s[self.layout.phase] == PH_ERROR
    }

    /// The product state of a boundary IR state.
    pub fn decode(&self, s: &[i64]) -> Option<ProductState> {
        if !self.is_boundary(s) {
            return None;
        }
        let lay = &self.layout;
        let statuses = lay
            .status
            .iter()
            .map(|&i| Status::from_index(s[i] as usize).expect("status"))
            .collect();
        let resume = lay
            .mem
            .iter()
            .map(|m| match m {
                Mem::None => 0,
                Mem::Resume(v) => s[*v] as u32,
                Mem::Done(bits) => bits
                    .iter()
                    .enumerate()
                    .fold(0u32, |acc, (i, &b)| acc | ((s[b] as u32) << i)),
            })
            .collect();
        let monitor = self
            .configs
            .iter()
            .zip(&lay.mon)
            .filter(|(_, &v)| s[v] == 1)
            .map(|(c, _)| c.clone())
            .collect();
        let mode = match s[lay.mode] {
            0 => Mode::Nominal,
            1 => Mode::Contingency,
            _ => Mode::Deadlock,
        };
        Some(ProductState {
            memory: TreeMemory { statuses, resume },
            valuation: s[..lay.n_vars].to_vec(),
            monitor,
            mode,
        })
    }

    /// The boundary IR state of a product state.
    pub fn encode_state(&self, p: &ProductState) -> Vec<i64> {
        let lay = &self.layout;
        let mut s = vec![0; self.ir.vars.len()];
        s[..lay.n_vars].copy_from_slice(&p.valuation);
        for (n, &i) in lay.status.iter().enumerate() {
            s[i] = p.memory.statuses[n].index() as i64;
        }
        for (n, m) in lay.mem.iter().enumerate() {
            match m {
                Mem::None => {}
                Mem::Resume(v) => s[*v] = p.memory.resume[n] as i64,
                Mem::Done(bits) => {
                    for (i, &b) in bits.iter().enumerate() {
                        s[b] = (p.memory.resume[n] >> i & 1) as i64;
                    }
                }
            }
        }
        for (c, &v) in self.configs.iter().zip(&lay.mon) {
            s[v] = p.monitor.contains(c) as i64;
        }
        s[lay.mode] = mode_index(p.mode);
        s[lay.phase] = PH_BOUNDARY;
        s
    }

    /// A spec atom over boundary state variables.
    pub fn atom(&self, e: &CExpr) -> IrExpr {
        let lay = &self.layout;
        let vars: Vec<IrExpr> = (0..lay.n_vars).map(IrExpr::Var).collect();
        let status: Vec<IrExpr> = lay.status.iter().map(|&i| IrExpr::Var(i)).collect();
        let mode = IrExpr::Var(lay.mode);
        let ctx = Ctx {
            vars: &vars,
            status: &status,
            status_enum: self.status_enum,
            locals: &[],
            local_tys: &[],
            mode: Some((&mode, self.mode_enum)),
        };
        tr(&self.ir, e, &ctx, Some(&IrType::Bool))
    }

    pub fn phase_enum(&self) -> usize {
        self.phase_enum
    }

    pub fn var_type(&self, v: usize) -> &IrType {
        &self.var_types[v]
    }
}
