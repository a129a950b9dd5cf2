//! Design-time verification of tree-monitor products: LTL and invariant
//! checking on the explicit product, counterexample replay, and checking
//! through the symbolic encoding at each optimization level.

pub mod encode;
pub mod explicit;
pub mod ir;

use rayon::prelude::*;
use serde_json::{json, Value};

use crate::buchi::ltl_to_buchi;
use crate::composition::{reachable, Btm, ProductState, ProductTs};
use crate::expr::{self, compile, CExpr, Expr, Type};
use crate::ltl::{eval_lasso, Formula, Ltl};
use crate::semantics::SemError;

pub use encode::{encode, EncodeError, Encoding, OptLevel};
pub use explicit::{
    find_accepting_lasso, has_accepting_cycle_scc, shortest_path_to, Kripke, Lasso,
};
pub use ir::{explore, ir_eval, Ir, IrError, IrExpr, IrGraph, IrType};

/// Result of a check, in the coordinates of the checked system.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verdict {
    Holds,
    Violated(Lasso),
    /// Initial state first, bad state last.
    InvariantViolated(Vec<usize>),
}

impl Verdict {
    pub fn holds(&self) -> bool {
        matches!(self, Verdict::Holds)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum VerifyError {
    #[error("the transition system is truncated; raise BTMC_STATE_LIMIT to verify")]
    Truncated,
    #[error(transparent)]
    Semantic(#[from] SemError),
    #[error("formula has {0} distinct atoms; at most 63 are supported")]
    TooManyAtoms(usize),
    #[error("atom `{atom}`: {msg}")]
    Atom { atom: String, msg: String },
    #[error(transparent)]
    Encode(#[from] EncodeError),
    #[error("{0}")]
    Ir(#[from] IrError),
    #[error("a leaf or U_E guard can be exhausted; the model has no total step relation")]
    EncodingError,
}

/// A formula with its atoms compiled against a product.
#[derive(Clone, Debug)]
pub struct CompiledFormula {
    pub atoms: Vec<CExpr>,
    pub atom_text: Vec<String>,
    pub formula: Ltl<usize>,
}

pub fn compile_predicate(btm: &Btm, e: &Expr) -> Result<CExpr, VerifyError> {
    let scope = btm.model.scope(true);
    match expr::type_of(e, &scope) {
        Ok(Type::Bool) => compile(e, &scope).map_err(|err| VerifyError::Atom {
            atom: e.to_string(),
            msg: err.to_string(),
        }),
        Ok(t) => Err(VerifyError::Atom {
            atom: e.to_string(),
            msg: format!("has type {t:?}, expected bool"),
        }),
        Err(err) => Err(VerifyError::Atom {
            atom: e.to_string(),
            msg: err.to_string(),
        }),
    }
}

pub fn compile_formula(btm: &Btm, f: &Formula) -> Result<CompiledFormula, VerifyError> {
    let (atoms, formula) = f.index_atoms();
    if atoms.len() > 63 {
        return Err(VerifyError::TooManyAtoms(atoms.len()));
    }
    let compiled = atoms
        .iter()
        .map(|a| compile_predicate(btm, a))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(CompiledFormula {
        atoms: compiled,
        atom_text: atoms.iter().map(|a| a.to_string()).collect(),
        formula,
    })
}

/// Label every product state with the atoms it satisfies.
pub fn kripke(btm: &Btm, ts: &ProductTs, atoms: &[CExpr]) -> Kripke {
    let labels = ts
        .states
        .par_iter()
        .map(|s| {
            atoms
                .iter()
                .enumerate()
                .fold(0u64, |acc, (i, a)| acc | ((btm.holds(a, s) as u64) << i))
        })
        .collect();
    Kripke {
        initial: ts.initial.clone(),
        succ: ts.edges.clone(),
        labels,
    }
}

/// Automata-theoretic check of `f` by nested DFS over `ts × B(¬f)`.
pub fn check_ltl(btm: &Btm, ts: &ProductTs, f: &Formula) -> Result<Verdict, VerifyError> {
    if ts.truncated {
        return Err(VerifyError::Truncated);
    }
    let cf = compile_formula(btm, f)?;
    let k = kripke(btm, ts, &cf.atoms);
    let ba = ltl_to_buchi(&Ltl::not(cf.formula.clone()));
    Ok(match find_accepting_lasso(&k, &ba) {
        None => Verdict::Holds,
        Some(l) => {
            debug_assert!(lasso_violates(&k, &cf.formula, &l));
            Verdict::Violated(l)
        }
    })
}

/// The same question answered by Tarjan SCCs; `true` when `f` holds.
pub fn check_ltl_scc(btm: &Btm, ts: &ProductTs, f: &Formula) -> Result<bool, VerifyError> {
    if ts.truncated {
        return Err(VerifyError::Truncated);
    }
    let cf = compile_formula(btm, f)?;
    let k = kripke(btm, ts, &cf.atoms);
    Ok(!has_accepting_cycle_scc(
        &k,
        &ltl_to_buchi(&Ltl::not(cf.formula)),
    ))
}

/// Whether the lasso's label word falsifies `f`.
pub fn lasso_violates(k: &Kripke, f: &Ltl<usize>, l: &Lasso) -> bool {
    let p: Vec<u64> = l.prefix.iter().map(|&s| k.labels[s]).collect();
    let c: Vec<u64> = l.cycle.iter().map(|&s| k.labels[s]).collect();
    !eval_lasso(f, &p, &c)
}

/// Holds iff `pred` is true in every reachable state; otherwise a BFS-shortest path.
pub fn check_invariant(btm: &Btm, ts: &ProductTs, pred: &Expr) -> Result<Verdict, VerifyError> {
    if ts.truncated {
        return Err(VerifyError::Truncated);
    }
    let p = compile_predicate(btm, pred)?;
    let good: Vec<bool> = ts.states.par_iter().map(|s| btm.holds(&p, s)).collect();
    let k = Kripke {
        initial: ts.initial.clone(),
        succ: ts.edges.clone(),
        labels: vec![],
    };
    Ok(match shortest_path_to(&k, |s| !good[s]) {
        None => Verdict::Holds,
        Some(path) => Verdict::InvariantViolated(path),
    })
}

/// A property to check.
#[derive(Clone, Debug, PartialEq)]
pub enum Spec {
    Ltl(Formula),
    Invariant(Expr),
}

/// A counterexample as product states. `cycle` is empty for safety witnesses.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Trace {
    pub prefix: Vec<ProductState>,
    pub cycle: Vec<ProductState>,
}

impl Trace {
    pub fn from_ids(ts: &ProductTs, v: &Verdict) -> Option<Trace> {
        let get = |ids: &[usize]| {
            ids.iter()
                .map(|&i| ts.states[i].clone())
                .collect::<Vec<_>>()
        };
        match v {
            Verdict::Holds => None,
            Verdict::Violated(l) => Some(Trace {
                prefix: get(&l.prefix),
                cycle: get(&l.cycle),
            }),
            Verdict::InvariantViolated(p) => Some(Trace {
                prefix: get(p),
                cycle: vec![],
            }),
        }
    }

    pub fn states(&self) -> impl Iterator<Item = &ProductState> {
        self.prefix.iter().chain(self.cycle.iter())
    }

    pub fn to_json(&self, btm: &Btm) -> Value {
        let obs = |v: &[ProductState]| {
            v.iter()
                .map(|s| json!(btm.observation_json(s)))
                .collect::<Vec<_>>()
        };
        json!({ "prefix": obs(&self.prefix), "cycle": obs(&self.cycle) })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Outcome {
    Holds,
    Violated(Trace),
}

/// Sizes reported alongside a verdict.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Stats {
    /// States of the checked graph (product states, or IR states for a level).
    pub states: usize,
    /// Tick-boundary states among them.
    pub boundary_states: usize,
}

/// Check a re-executed counterexample: the first state is initial, every
/// step is a product successor, and the cycle closes.
pub fn replay(btm: &Btm, t: &Trace) -> Result<(), String> {
    let all: Vec<&ProductState> = t.states().collect();
    let Some(first) = all.first() else {
        return Err("empty counterexample".into());
    };
    if !btm.initial_states().contains(first) {
        return Err("first state is not initial".into());
    }
    let check = |i: usize, a: &ProductState, b: &ProductState| -> Result<(), String> {
        let succ = btm.successors(a).map_err(|e| e.to_string())?;
        if succ.contains(b) {
            Ok(())
        } else {
            Err(format!("step {i} is not a transition of the product"))
        }
    };
    for (i, w) in all.windows(2).enumerate() {
        check(i + 1, w[0], w[1])?;
    }
    if let (Some(last), Some(head)) = (t.cycle.last(), t.cycle.first()) {
        check(all.len(), last, head)?;
    }
    Ok(())
}

/// Explore the explicit product and check `spec`.
pub fn verify_explicit(
    btm: &Btm,
    spec: &Spec,
    state_limit: usize,
) -> Result<(Outcome, Stats), VerifyError> {
    let ts = reachable(btm, state_limit)?;
    if ts.truncated {
        return Err(VerifyError::Truncated);
    }
    let v = match spec {
        Spec::Ltl(f) => check_ltl(btm, &ts, f)?,
        Spec::Invariant(p) => check_invariant(btm, &ts, p)?,
    };
    let stats = Stats {
        states: ts.states.len(),
        boundary_states: ts.states.len(),
    };
    Ok((
        Trace::from_ids(&ts, &v).map_or(Outcome::Holds, Outcome::Violated),
        stats,
    ))
}

/// Sample atoms only at boundary positions (`bd` is the boundary atom).
pub fn relativize(f: &Ltl<usize>, bd: usize) -> Ltl<usize> {
    let b = || Ltl::Atom(bd);
    let nb = || Ltl::not(Ltl::Atom(bd));
    let r = |x: &Ltl<usize>| relativize(x, bd);
    match f {
        Ltl::True | Ltl::False | Ltl::Atom(_) => f.clone(),
        Ltl::Not(a) => Ltl::not(r(a)),
        Ltl::And(a, c) => Ltl::and(r(a), r(c)),
        Ltl::Or(a, c) => Ltl::or(r(a), r(c)),
        Ltl::Implies(a, c) => Ltl::implies(r(a), r(c)),
        Ltl::Next(a) => Ltl::next(Ltl::until(nb(), Ltl::and(b(), r(a)))),
        Ltl::Globally(a) => Ltl::globally(Ltl::or(nb(), r(a))),
        Ltl::Finally(a) => Ltl::finally(Ltl::and(b(), r(a))),
        Ltl::Until(a, c) => Ltl::until(Ltl::or(nb(), r(a)), Ltl::and(b(), r(c))),
        Ltl::StrongRelease(a, c) => {
            Ltl::until(Ltl::or(nb(), r(c)), Ltl::and(b(), Ltl::and(r(a), r(c))))
        }
        Ltl::Release(a, c) => {
            Ltl::Release(Box::new(Ltl::and(b(), r(a))), Box::new(Ltl::or(nb(), r(c))))
        }
    }
}

/// Encode at `level`, explore the IR, and check `spec` with atoms sampled at
/// tick boundaries. Counterexamples are projected onto boundary states.
pub fn verify_at_level(
    btm: &Btm,
    spec: &Spec,
    level: OptLevel,
    state_limit: usize,
) -> Result<(Outcome, Stats), VerifyError> {
    let enc = encode(btm, level)?;
    let g = match explore(&enc.ir, state_limit) {
        Ok(g) => g,
        Err(IrError::StateLimit { .. }) => return Err(VerifyError::Truncated),
        Err(e) => return Err(e.into()),
    };
    if g.states.iter().any(|s| enc.is_error(s)) {
        return Err(VerifyError::EncodingError);
    }
    let boundary: Vec<bool> = g.states.iter().map(|s| enc.is_boundary(s)).collect();
    let stats = Stats {
        states: g.states.len(),
        boundary_states: boundary.iter().filter(|&&b| b).count(),
    };
    let project = |ids: &[usize]| -> Vec<ProductState> {
        ids.iter()
            .filter_map(|&i| enc.decode(&g.states[i]))
            .collect()
    };
    let outcome = match spec {
        Spec::Ltl(f) => {
            let cf = compile_formula(btm, f)?;
            let atoms: Vec<IrExpr> = cf.atoms.iter().map(|a| enc.atom(a)).collect();
            let bd = atoms.len();
            let labels = g
                .states
                .par_iter()
                .zip(&boundary)
                .map(|(s, &isb)| {
                    let l = atoms.iter().enumerate().fold(0u64, |acc, (i, a)| {
                        acc | (((enc.ir.eval_state(a, s) != 0) as u64) << i)
                    });
                    l | ((isb as u64) << bd)
                })
                .collect();
            let k = Kripke {
                initial: g.initial.clone(),
                succ: g.edges.clone(),
                labels,
            };
            let rel = relativize(&cf.formula, bd);
            match find_accepting_lasso(&k, &ltl_to_buchi(&Ltl::not(rel))) {
                None => Outcome::Holds,
                Some(l) => Outcome::Violated(Trace {
                    prefix: project(&l.prefix),
                    cycle: project(&l.cycle),
                }),
            }
        }
        Spec::Invariant(p) => {
            let a = enc.atom(&compile_predicate(btm, p)?);
            let k = Kripke {
                initial: g.initial.clone(),
                succ: g.edges.clone(),
                labels: vec![],
            };
            match shortest_path_to(&k, |i| {
                boundary[i] && enc.ir.eval_state(&a, &g.states[i]) == 0
            }) {
                None => Outcome::Holds,
                Some(path) => Outcome::Violated(Trace {
                    prefix: project(&path),
                    cycle: vec![],
                }),
            }
        }
    };
    Ok((outcome, stats))
}

/// Tick-boundary graph reached through the IR: boundary states and, for
/// each, the boundary states reachable through non-boundary ones.
pub fn contract(enc: &Encoding, g: &IrGraph) -> Vec<(ProductState, Vec<ProductState>)> {
    let mut out = Vec::new();
    for (i, s) in g.states.iter().enumerate() {
        let Some(p) = enc.decode(s) else { continue };
        let mut seen = vec![false; g.states.len()];
        let mut stack: Vec<usize> = g.edges[i].clone();
        let mut succ = Vec::new();
        while let Some(j) = stack.pop() {
            if std::mem::replace(&mut seen[j], true) {
                continue;
            }
            match enc.decode(&g.states[j]) {
                Some(q) => succ.push(q),
                None => stack.extend(g.edges[j].iter().copied()),
            }
        }
        succ.sort();
        succ.dedup();
        out.push((p, succ));
    }
    out.sort();
    out
}
