//! Finite-domain symbolic IR: typed state variables, choice inputs, shared
//! definitions and one next-state expression per variable. A transition
//! picks any value for each input; the successor is the vector of next values.

use std::collections::HashMap;

use crate::expr::{apply_bin, apply_func, BinOp, Func};
use crate::semantics::{ChoiceSite, Chooser, Odometer};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum IrType {
    Bool,
    Int {
        lo: i64,
        hi: i64,
    },
    /// Index into `Ir::enums`.
    Enum(usize),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IrVar {
    pub name: String,
    pub ty: IrType,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum IrExpr {
    Bool(bool),
    Int(i64),
    /// Symbol `i` of enumeration `e`.
    Sym(usize, i64),
    Var(usize),
    Input(usize),
    Def(usize),
    Not(Box<IrExpr>),
    Neg(Box<IrExpr>),
    Bin(BinOp, Box<IrExpr>, Box<IrExpr>),
    Call(Func, Vec<IrExpr>),
    /// First arm whose condition holds, else the default.
    Case(Vec<(IrExpr, IrExpr)>, Box<IrExpr>),
}

impl IrExpr {
    pub fn bin(op: BinOp, a: IrExpr, b: IrExpr) -> IrExpr {
        IrExpr::Bin(op, Box::new(a), Box::new(b))
    }
    pub fn eq(a: IrExpr, b: IrExpr) -> IrExpr {
        IrExpr::bin(BinOp::Eq, a, b)
    }
    pub fn not(a: IrExpr) -> IrExpr {
        match a {
            IrExpr::Bool(b) => IrExpr::Bool(!b),
            IrExpr::Not(x) => *x,
            a => IrExpr::Not(Box::new(a)),
        }
    }
    pub fn and(a: IrExpr, b: IrExpr) -> IrExpr {
        match (a, b) {
            (IrExpr::Bool(false), _) | (_, IrExpr::Bool(false)) => IrExpr::Bool(false),
            (IrExpr::Bool(true), x) | (x, IrExpr::Bool(true)) => x,
            (a, b) => IrExpr::bin(BinOp::And, a, b),
        }
    }
    pub fn or(a: IrExpr, b: IrExpr) -> IrExpr {
        match (a, b) {
            (IrExpr::Bool(true), _) | (_, IrExpr::Bool(true)) => IrExpr::Bool(true),
            (IrExpr::Bool(false), x) | (x, IrExpr::Bool(false)) => x,
            (a, b) => IrExpr::bin(BinOp::Or, a, b),
        }
    }
    pub fn all(xs: impl IntoIterator<Item = IrExpr>) -> IrExpr {
        xs.into_iter().fold(IrExpr::Bool(true), IrExpr::and)
    }
    pub fn any(xs: impl IntoIterator<Item = IrExpr>) -> IrExpr {
        xs.into_iter().fold(IrExpr::Bool(false), IrExpr::or)
    }
    /// `case` that drops arms after an always-true condition and collapses when empty.
    pub fn case(arms: Vec<(IrExpr, IrExpr)>, default: IrExpr) -> IrExpr {
        let mut kept = Vec::new();
        let mut default = default;
        for (c, v) in arms {
            match c {
                IrExpr::Bool(false) => continue,
                IrExpr::Bool(true) => {
                    default = v;
                    break;
                }
                c => kept.push((c, v)),
            }
        }
        if kept.is_empty() {
            default
        } else {
            IrExpr::Case(kept, Box::new(default))
        }
    }
    fn is_leafy(&self) -> bool {
        matches!(
            self,
            IrExpr::Bool(_)
                | IrExpr::Int(_)
                | IrExpr::Sym(..)
                | IrExpr::Var(_)
                | IrExpr::Input(_)
                | IrExpr::Def(_)
        )
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IrDefine {
    pub name: String,
    pub ty: IrType,
    pub body: IrExpr,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Ir {
    pub enums: Vec<Vec<String>>,
    pub vars: Vec<IrVar>,
    /// Choice inputs, each an integer range `0..arity-1`.
    pub inputs: Vec<IrVar>,
    /// Definitions refer only to earlier definitions.
    pub defines: Vec<IrDefine>,
    /// Admissible initial values per variable; initial states are their product.
    pub init: Vec<Vec<i64>>,
    pub next: Vec<IrExpr>,
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum IrError {
    #[error("value {value} of `{var}` is outside its domain")]
    Domain { var: String, value: i64 },
    #[error("state has {got} components, expected {expected}")]
    Arity { got: usize, expected: usize },
    #[error("input assignment has {got} components, expected {expected}")]
    Inputs { got: usize, expected: usize },
    #[error("more than {limit} successors from one state")]
    Branching { limit: usize },
    #[error("state limit of {limit} reached")]
    StateLimit { limit: usize },
}

pub fn type_bounds(ty: &IrType, enums: &[Vec<String>]) -> (i64, i64) {
    match ty {
        IrType::Bool => (0, 1),
        IrType::Int { lo, hi } => (*lo, *hi),
        IrType::Enum(e) => (0, enums[*e].len() as i64 - 1),
    }
}

impl Ir {
    pub fn bounds(&self, ty: &IrType) -> (i64, i64) {
        type_bounds(ty, &self.enums)
    }

    pub fn type_of(&self, e: &IrExpr) -> IrType {
        match e {
            IrExpr::Bool(_) | IrExpr::Not(_) => IrType::Bool,
            IrExpr::Int(v) => IrType::Int { lo: *v, hi: *v },
            IrExpr::Sym(en, _) => IrType::Enum(*en),
            IrExpr::Var(i) => self.vars[*i].ty.clone(),
            IrExpr::Input(i) => self.inputs[*i].ty.clone(),
            IrExpr::Def(i) => self.defines[*i].ty.clone(),
            IrExpr::Neg(_) | IrExpr::Call(..) => IrType::Int {
                lo: i64::MIN,
                hi: i64::MAX,
            },
            IrExpr::Bin(op, _, _) if op.is_arith() => IrType::Int {
                lo: i64::MIN,
                hi: i64::MAX,
            },
            IrExpr::Bin(..) => IrType::Bool,
            IrExpr::Case(arms, d) => {
                let t = self.type_of(d);
                match t {
                    IrType::Int { .. } => {
                        arms.iter()
                            .fold(t, |acc, (_, v)| match (acc, self.type_of(v)) {
                                (IrType::Int { lo, hi }, IrType::Int { lo: l2, hi: h2 }) => {
                                    IrType::Int {
                                        lo: lo.min(l2),
                                        hi: hi.max(h2),
                                    }
                                }
                                (acc, _) => acc,
                            })
                    }
                    t => t,
                }
            }
        }
    }

    pub fn var_index(&self, name: &str) -> Option<usize> {
        self.vars.iter().position(|v| v.name == name)
    }

    pub fn check_state(&self, s: &[i64]) -> Result<(), IrError> {
        if s.len() != self.vars.len() {
            return Err(IrError::Arity {
                got: s.len(),
                expected: self.vars.len(),
            });
        }
        for (v, &x) in self.vars.iter().zip(s) {
            let (lo, hi) = self.bounds(&v.ty);
            if x < lo || x > hi {
                return Err(IrError::Domain {
                    var: v.name.clone(),
                    value: x,
                });
            }
        }
        Ok(())
    }

    pub fn initial_states(&self) -> Vec<Vec<i64>> {
        let mut out: Vec<Vec<i64>> = vec![vec![]];
        for vals in &self.init {
            out = out
                .into_iter()
                .flat_map(|p| {
                    vals.iter().map(move |x| {
                        let mut q = p.clone();
                        q.push(*x);
                        q
                    })
                })
                .collect();
        }
        out
    }

    /// The successor under one full input assignment.
    pub fn step(&self, s: &[i64], inputs: &[i64]) -> Result<Vec<i64>, IrError> {
        self.check_state(s)?;
        if inputs.len() != self.inputs.len() {
            return Err(IrError::Inputs {
                got: inputs.len(),
                expected: self.inputs.len(),
            });
        }
        for (v, &x) in self.inputs.iter().zip(inputs) {
            let (lo, hi) = self.bounds(&v.ty);
            if x < lo || x > hi {
                return Err(IrError::Domain {
                    var: v.name.clone(),
                    value: x,
                });
            }
        }
        let mut ev = Evaluator::new(self, s);
        let mut src = |i: usize| inputs[i];
        Ok((0..self.vars.len())
            .map(|v| ev.eval(&self.next[v], &mut src))
            .collect())
    }

    /// Every successor, sorted and without duplicates. Inputs are enumerated
    /// lazily, so unread inputs do not multiply the work.
    pub fn successors(&self, s: &[i64], limit: usize) -> Result<Vec<Vec<i64>>, IrError> {
        self.check_state(s)?;
        let arity: Vec<usize> = self
            .inputs
            .iter()
            .map(|v| (self.bounds(&v.ty).1 + 1) as usize)
            .collect();
        let site = ChoiceSite {
            node: None,
            clause: 0,
            write: None,
        };
        let run = Odometer::new().for_each(limit, |ch: &mut dyn Chooser| {
            let mut ev = Evaluator::new(self, s);
            let mut picked: HashMap<usize, i64> = HashMap::new();
            let mut src = |i: usize| {
                *picked
                    .entry(i)
                    .or_insert_with(|| ch.choose(&site, arity[i]).unwrap_or(0) as i64)
            };
            Ok::<_, IrError>(
                (0..self.vars.len())
                    .map(|v| ev.eval(&self.next[v], &mut src))
                    .collect::<Vec<i64>>(),
            )
        })?;
        let mut out: Vec<Vec<i64>> = match run {
            Ok(v) => v.into_iter().map(|(_, t)| t).collect(),
            Err(limit) => return Err(IrError::Branching { limit }),
        };
        out.sort();
        out.dedup();
        Ok(out)
    }

    /// Evaluate a state predicate or state expression (no inputs allowed).
    pub fn eval_state(&self, e: &IrExpr, s: &[i64]) -> i64 {
        let mut ev = Evaluator::new(self, s);
        ev.eval(e, &mut |_| panic!("state expression reads an input"))
    }
}

struct Evaluator<'a> {
    ir: &'a Ir,
    state: &'a [i64],
    memo: Vec<Option<i64>>,
}

impl<'a> Evaluator<'a> {
    fn new(ir: &'a Ir, state: &'a [i64]) -> Self {
        Evaluator {
            ir,
            state,
            memo: vec![None; ir.defines.len()],
        }
    }

    fn eval(&mut self, e: &IrExpr, input: &mut dyn FnMut(usize) -> i64) -> i64 {
        match e {
            IrExpr::Bool(b) => *b as i64,
            IrExpr::Int(v) | IrExpr::Sym(_, v) => *v,
            IrExpr::Var(i) => self.state[*i],
            IrExpr::Input(i) => input(*i),
            IrExpr::Def(i) => {
                if let Some(v) = self.memo[*i] {
                    return v;
                }
                let ir = self.ir;
                let v = self.eval(&ir.defines[*i].body, input);
                self.memo[*i] = Some(v);
                v
            }
            IrExpr::Not(a) => (self.eval(a, input) == 0) as i64,
            IrExpr::Neg(a) => self.eval(a, input).saturating_neg(),
            IrExpr::Bin(BinOp::And, a, b) => {
                (self.eval(a, input) != 0 && self.eval(b, input) != 0) as i64
            }
            IrExpr::Bin(BinOp::Or, a, b) => {
                (self.eval(a, input) != 0 || self.eval(b, input) != 0) as i64
            }
            IrExpr::Bin(BinOp::Implies, a, b) => {
                (self.eval(a, input) == 0 || self.eval(b, input) != 0) as i64
            }
            IrExpr::Bin(op, a, b) => {
                let x = self.eval(a, input);
                let y = self.eval(b, input);
                apply_bin(*op, x, y)
            }
            IrExpr::Call(f, args) => {
                let vals: Vec<i64> = args.iter().map(|a| self.eval(a, input)).collect();
                apply_func(*f, &vals)
            }
            IrExpr::Case(arms, d) => {
                for (c, v) in arms {
                    if self.eval(c, input) != 0 {
                        return self.eval(v, input);
                    }
                }
                self.eval(d, input)
            }
        }
    }
}

/// `ir_eval`: successor set of `state`.
pub fn ir_eval(ir: &Ir, state: &[i64]) -> Result<Vec<Vec<i64>>, IrError> {
    ir.successors(state, usize::MAX)
}

/// Reachable IR states in BFS order with sorted successor lists.
#[derive(Clone, Debug)]
pub struct IrGraph {
    pub states: Vec<Vec<i64>>,
    pub initial: Vec<usize>,
    pub edges: Vec<Vec<usize>>,
}

pub fn explore(ir: &Ir, state_limit: usize) -> Result<IrGraph, IrError> {
    let mut states: Vec<Vec<i64>> = Vec::new();
    let mut index: HashMap<Vec<i64>, usize> = HashMap::new();
    let mut initial = Vec::new();
    for s in ir.initial_states() {
        ir.check_state(&s)?;
        let id = *index.entry(s.clone()).or_insert_with(|| {
            states.push(s);
            states.len() - 1
        });
        if !initial.contains(&id) {
            initial.push(id);
        }
    }
    let mut edges = Vec::new();
    let mut i = 0;
    while i < states.len() {
        let succ = ir.successors(&states[i], 1 << 20)?;
        let mut out = Vec::with_capacity(succ.len());
        for t in succ {
            let id = match index.get(&t) {
                Some(&j) => j,
                None => {
                    if states.len() >= state_limit {
                        return Err(IrError::StateLimit { limit: state_limit });
                    }
                    index.insert(t.clone(), states.len());
                    states.push(t);
                    states.len() - 1
                }
            };
            out.push(id);
        }
        edges.push(out);
        i += 1;
    }
    Ok(IrGraph {
        states,
        initial,
        edges,
    })
}

/// Incremental construction with hash-consed definitions.
#[derive(Default)]
pub struct IrBuilder {
    pub ir: Ir,
    shared: HashMap<IrExpr, usize>,
}

impl IrBuilder {
    pub fn new() -> IrBuilder {
        IrBuilder::default()
    }

    pub fn add_enum(&mut self, symbols: Vec<String>) -> usize {
        if let Some(i) = self.ir.enums.iter().position(|e| *e == symbols) {
            return i;
        }
        self.ir.enums.push(symbols);
        self.ir.enums.len() - 1
    }

    pub fn add_var(&mut self, name: impl Into<String>, ty: IrType, init: Vec<i64>) -> usize {
        self.ir.vars.push(IrVar {
            name: name.into(),
            ty,
        });
        self.ir.init.push(init);
        self.ir.vars.len() - 1
    }

    pub fn add_input(&mut self, name: impl Into<String>, arity: usize) -> usize {
        self.ir.inputs.push(IrVar {
            name: name.into(),
            ty: IrType::Int {
                lo: 0,
                hi: arity as i64 - 1,
            },
        });
        self.ir.inputs.len() - 1
    }

    /// Name `e` unless it is already atomic; structurally equal bodies share one definition.
    pub fn def(&mut self, name: impl Into<String>, e: IrExpr) -> IrExpr {
        if e.is_leafy() {
            return e;
        }
        if let Some(&i) = self.shared.get(&e) {
            return IrExpr::Def(i);
        }
        let ty = self.ir.type_of(&e);
        let i = self.ir.defines.len();
        self.ir.defines.push(IrDefine {
            name: name.into(),
            ty,
            body: e.clone(),
        });
        self.shared.insert(e, i);
        IrExpr::Def(i)
    }

    /// `max(lo, min(hi, e))` as a case expression.
    pub fn clamp(&mut self, name: impl Into<String>, e: IrExpr, lo: i64, hi: i64) -> IrExpr {
        if let IrExpr::Int(v) = e {
            return IrExpr::Int(v.clamp(lo, hi));
        }
        if let IrType::Int { lo: l, hi: h } = self.ir.type_of(&e) {
            if l >= lo && h <= hi {
                return e;
            }
        }
        let x = self.def(name, e);
        IrExpr::Case(
            vec![
                (
                    IrExpr::bin(BinOp::Lt, x.clone(), IrExpr::Int(lo)),
                    IrExpr::Int(lo),
                ),
                (
                    IrExpr::bin(BinOp::Gt, x.clone(), IrExpr::Int(hi)),
                    IrExpr::Int(hi),
                ),
            ],
            Box::new(x),
        )
    }

    pub fn finish(self) -> Ir {
        self.ir
    }
}
