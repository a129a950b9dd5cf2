//! Seeded generators for property suites and fuzzing: models, monitors,
//! formulas, automata and symbolic IRs. Every generated model validates.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::expr::{BinOp, Expr, Func, UnOp};
use crate::expressiveness::{Dir, NfaSpec, NtmSpec, NtmTransition};
use crate::ltl::{Formula, Ltl};
use crate::model::{
    Assign, Branch, Clause, DecoratorMap, Domain, Literal, NodeKind, Owner, Sbt, Status, TreeFile,
    TreeNode, VarDecl,
};
use crate::monitors::{
    Esm, EsmState, EsmTransition, LocalDecl, LtlMonitor, Monitor, NfaMonitor, NfaTransition,
    Verdict,
};
use crate::verifier::ir::{IrBuilder, IrExpr, IrType};
use crate::verifier::Ir;

/// A name with its domain, as seen by expression generators.
#[derive(Clone, Debug)]
pub struct Typed {
    pub name: String,
    pub domain: Domain,
}

impl From<&VarDecl> for Typed {
    fn from(v: &VarDecl) -> Typed {
        Typed {
            name: v.name.clone(),
            domain: v.domain.clone(),
        }
    }
}

/// Size knobs for [`random_tree_file`].
#[derive(Clone, Copy, Debug)]
pub struct ModelShape {
    pub max_blackboard: usize,
    pub max_environment: usize,
    pub max_leaves: usize,
    pub max_depth: usize,
    pub nondeterminism: bool,
    pub contingency: bool,
}

impl Default for ModelShape {
    fn default() -> Self {
        ModelShape {
            max_blackboard: 3,
            max_environment: 2,
            max_leaves: 5,
            max_depth: 3,
            nondeterminism: true,
            contingency: true,
        }
    }
}

fn lit(rng: &mut impl Rng, d: &Domain) -> Literal {
    let (lo, hi) = d.bounds();
    d.decode(rng.gen_range(lo..=hi))
}

fn lit_expr(l: Literal) -> Expr {
    match l {
        Literal::Bool(b) => Expr::Bool(b),
        Literal::Int(v) if v < 0 => Expr::Unary(UnOp::Neg, Box::new(Expr::Int(-v))),
        Literal::Int(v) => Expr::Int(v),
        Literal::Sym(s) => Expr::Ident(s),
    }
}

pub fn int_expr(rng: &mut impl Rng, vars: &[Typed], depth: usize) -> Expr {
    let ints: Vec<&Typed> = vars
        .iter()
        .filter(|v| matches!(v.domain, Domain::Range { .. }))
        .collect();
    let pick = if depth == 0 {
        rng.gen_range(0..2)
    } else {
        rng.gen_range(0..6)
    };
    match pick {
        0 => Expr::Int(rng.gen_range(0..=3)),
        1 => match ints.choose(rng) {
            Some(v) => Expr::ident(&v.name),
            None => Expr::Int(rng.gen_range(0..=3)),
        },
        2 | 3 => {
            let op = *[
                BinOp::Add,
                BinOp::Sub,
                BinOp::Mul,
                BinOp::Div,
                BinOp::Mod,
                BinOp::Add,
            ]
            .choose(rng)
            .unwrap();
            Expr::bin(
                op,
                int_expr(rng, vars, depth - 1),
                int_expr(rng, vars, depth - 1),
            )
        }
        4 => Expr::Unary(UnOp::Neg, Box::new(int_expr(rng, vars, depth - 1))),
        _ => match rng.gen_range(0..3) {
            0 => Expr::Call(Func::Abs, vec![int_expr(rng, vars, depth - 1)]),
            1 => Expr::Call(
                Func::Min,
                vec![
                    int_expr(rng, vars, depth - 1),
                    int_expr(rng, vars, depth - 1),
                ],
            ),
            _ => Expr::Call(
                Func::Max,
                vec![
                    int_expr(rng, vars, depth - 1),
                    int_expr(rng, vars, depth - 1),
                ],
            ),
        },
    }
}

pub fn bool_expr(rng: &mut impl Rng, vars: &[Typed], depth: usize) -> Expr {
    let bools: Vec<&Typed> = vars.iter().filter(|v| v.domain == Domain::Bool).collect();
    let enums: Vec<&Typed> = vars
        .iter()
        .filter(|v| matches!(v.domain, Domain::Enum(_)))
        .collect();
    let pick = if depth == 0 {
        rng.gen_range(0..3)
    } else {
        rng.gen_range(0..8)
    };
    match pick {
        0 => Expr::Bool(rng.gen_bool(0.5)),
        1 | 2 => match bools.choose(rng) {
            Some(v) => Expr::ident(&v.name),
            None => Expr::Bool(rng.gen_bool(0.5)),
        },
        3 | 4 => {
            let op = *[
                BinOp::Eq,
                BinOp::Ne,
                BinOp::Lt,
                BinOp::Le,
                BinOp::Gt,
                BinOp::Ge,
            ]
            .choose(rng)
            .unwrap();
            Expr::bin(
                op,
                int_expr(rng, vars, depth - 1),
                int_expr(rng, vars, depth - 1),
            )
        }
        5 => match enums.choose(rng) {
            Some(v) => {
                let op = if rng.gen_bool(0.5) {
                    BinOp::Eq
                } else {
                    BinOp::Ne
                };
                let rhs = value_expr(rng, vars, &v.domain, depth - 1);
                Expr::bin(op, Expr::ident(&v.name), rhs)
            }
            None => Expr::not(bool_expr(rng, vars, depth - 1)),
        },
        6 => Expr::not(bool_expr(rng, vars, depth - 1)),
        _ => {
            let op = *[BinOp::And, BinOp::Or, BinOp::Implies].choose(rng).unwrap();
            Expr::bin(
                op,
                bool_expr(rng, vars, depth - 1),
                bool_expr(rng, vars, depth - 1),
            )
        }
    }
}

/// Expression of the domain's type.
pub fn value_expr(rng: &mut impl Rng, vars: &[Typed], d: &Domain, depth: usize) -> Expr {
    match d {
        Domain::Bool => bool_expr(rng, vars, depth),
        Domain::Range { .. } => int_expr(rng, vars, depth),
        Domain::Enum(_) => {
            let same: Vec<&Typed> = vars.iter().filter(|v| v.domain == *d).collect();
            match same.choose(rng) {
                Some(v) if rng.gen_bool(0.4) => Expr::ident(&v.name),
                _ => lit_expr(lit(rng, d)),
            }
        }
    }
}

fn domain(rng: &mut impl Rng, enum_id: &mut usize) -> Domain {
    match rng.gen_range(0..3) {
        0 => Domain::Bool,
        1 => {
            let lo = rng.gen_range(-1..=0);
            Domain::Range {
                lo,
                hi: lo + rng.gen_range(1..=3),
            }
        }
        _ => {
            *enum_id += 1;
            Domain::Enum(
                (0..rng.gen_range(2..=3))
                    .map(|j| format!("k{}_{j}", enum_id))
                    .collect(),
            )
        }
    }
}

fn decls(
    rng: &mut impl Rng,
    prefix: &str,
    n: usize,
    owner: Owner,
    enum_id: &mut usize,
) -> Vec<VarDecl> {
    (0..n)
        .map(|i| {
            let domain = domain(rng, enum_id);
            let mut initial = vec![lit(rng, &domain)];
            if rng.gen_bool(0.2) {
                let extra = lit(rng, &domain);
                if !initial.contains(&extra) {
                    initial.push(extra);
                }
            }
            VarDecl {
                name: format!("{prefix}{i}"),
                domain,
                initial,
                owner,
            }
        })
        .collect()
}

fn status(rng: &mut impl Rng) -> Status {
    *[Status::Success, Status::Failure, Status::Running]
        .choose(rng)
        .unwrap()
}

/// Clauses ending in a `true` guard, so leaves never exhaust.
fn clauses(
    rng: &mut impl Rng,
    scope: &[Typed],
    writable: &[Typed],
    shape: &ModelShape,
    update: bool,
) -> Vec<Clause> {
    let n = rng.gen_range(1..=3);
    (0..n)
        .map(|ci| {
            let guard = if ci + 1 == n {
                Expr::Bool(true)
            } else {
                bool_expr(rng, scope, 1)
            };
            let nb = if shape.nondeterminism && rng.gen_bool(0.2) {
                2
            } else {
                1
            };
            let branches = (0..nb)
                .map(|_| {
                    let mut targets: Vec<&Typed> = writable.iter().collect();
                    targets.shuffle(rng);
                    let k = rng.gen_range(0..=targets.len().min(2));
                    let writes = targets[..k]
                        .iter()
                        .map(|t| {
                            let value = if shape.nondeterminism && rng.gen_bool(0.15) {
                                Expr::Choice(vec![
                                    value_expr(rng, scope, &t.domain, 1),
                                    value_expr(rng, scope, &t.domain, 1),
                                ])
                            } else {
                                value_expr(rng, scope, &t.domain, 2)
                            };
                            Assign {
                                target: t.name.clone(),
                                value,
                            }
                        })
                        .collect();
                    Branch {
                        writes,
                        status: if update { Status::Success } else { status(rng) },
                    }
                })
                .collect();
            Clause { guard, branches }
        })
        .collect()
}

struct TreeGen<'a> {
    scope: &'a [Typed],
    writable: &'a [Typed],
    shape: ModelShape,
    leaves: usize,
    next_id: usize,
    prefix: &'static str,
}

impl TreeGen<'_> {
    fn name(&mut self) -> String {
        self.next_id += 1;
        format!("{}{}", self.prefix, self.next_id)
    }

    fn leaf(&mut self, rng: &mut impl Rng) -> TreeNode {
        self.leaves += 1;
        let name = self.name();
        if rng.gen_bool(0.3) {
            TreeNode::check(name, clauses(rng, self.scope, &[], &self.shape, false))
        } else {
            TreeNode::action(
                name,
                clauses(rng, self.scope, self.writable, &self.shape, false),
            )
        }
    }

    fn node(&mut self, rng: &mut impl Rng, depth: usize) -> TreeNode {
        if depth == 0 || self.leaves + 1 >= self.shape.max_leaves || rng.gen_bool(0.35) {
            return self.leaf(rng);
        }
        if rng.gen_bool(0.15) {
            let name = self.name();
            let map = if rng.gen_bool(0.5) {
                DecoratorMap::INVERTER
            } else {
                DecoratorMap {
                    on_failure: status(rng),
                    on_running: status(rng),
                    on_success: status(rng),
                }
            };
            return TreeNode::decorator(name, map, self.node(rng, depth - 1));
        }
        let kind = [
            NodeKind::Selector,
            NodeKind::Sequence,
            NodeKind::ParallelAll,
            NodeKind::ParallelOne,
        ]
        .choose(rng)
        .unwrap()
        .clone();
        let name = self.name();
        let memory = rng.gen_bool(0.3);
        let n = rng.gen_range(1..=3);
        let mut children = Vec::new();
        for _ in 0..n {
            if self.leaves >= self.shape.max_leaves {
                break;
            }
            children.push(self.node(rng, depth - 1));
        }
        if children.is_empty() {
            children.push(self.leaf(rng));
        }
        TreeNode::composite(kind, name, memory, children)
    }
}

/// A random valid tree file.
pub fn random_tree_file(rng: &mut impl Rng, shape: &ModelShape) -> TreeFile {
    let mut enum_id = 0;
    let nb = rng.gen_range(1..=shape.max_blackboard.max(1));
    let blackboard = decls(rng, "b", nb, Owner::Blackboard, &mut enum_id);
    let ne = rng.gen_range(0..=shape.max_environment);
    let environment = decls(rng, "e", ne, Owner::Environment, &mut enum_id);
    let scope: Vec<Typed> = blackboard
        .iter()
        .chain(&environment)
        .map(Typed::from)
        .collect();
    let bb: Vec<Typed> = blackboard.iter().map(Typed::from).collect();
    let env: Vec<Typed> = environment.iter().map(Typed::from).collect();
    let env_update = if env.is_empty() || rng.gen_bool(0.3) {
        vec![]
    } else {
        clauses(rng, &scope, &env, shape, true)
    };
    let mut g = TreeGen {
        scope: &scope,
        writable: &bb,
        shape: *shape,
        leaves: 0,
        next_id: 0,
        prefix: "n",
    };
    let root = g.node(rng, shape.max_depth);
    let contingency = (shape.contingency && rng.gen_bool(0.3)).then(|| {
        let mut g = TreeGen {
            scope: &scope,
            writable: &bb,
            shape: ModelShape {
                max_leaves: 2,
                ..*shape
            },
            leaves: 0,
            next_id: 0,
            prefix: "c",
        };
        g.node(rng, 1)
    });
    TreeFile {
        sbt: Sbt {
            name: Some("random".into()),
            root,
            blackboard,
            environment,
            env_update,
        },
        contingency,
    }
}

/// Observation predicates over a tree's variables, used as monitor guards and LTL atoms.
pub fn random_atom(rng: &mut impl Rng, f: &TreeFile) -> Expr {
    let vars: Vec<Typed> = f.sbt.vars().map(Typed::from).collect();
    if rng.gen_bool(0.2) {
        let nodes = f.sbt.root.preorder();
        let n = nodes.choose(rng).unwrap();
        return Expr::StatusIs(n.name.clone(), status(rng));
    }
    bool_expr(rng, &vars, 1)
}

pub fn random_ltl_over<A: Clone>(rng: &mut impl Rng, atoms: &[A], depth: usize) -> Ltl<A> {
    let atom = |rng: &mut _| Ltl::Atom(atoms.choose(rng).expect("atoms").clone());
    if depth == 0 {
        return match Rng::gen_range(rng, 0..10) {
            0 => Ltl::True,
            1 => Ltl::False,
            _ => atom(rng),
        };
    }
    let d = depth - 1;
    match rng.gen_range(0..11) {
        0 => atom(rng),
        1 => Ltl::not(random_ltl_over(rng, atoms, d)),
        5 => Ltl::next(random_ltl_over(rng, atoms, d)),
        6 => Ltl::globally(random_ltl_over(rng, atoms, d)),
        7 => Ltl::finally(random_ltl_over(rng, atoms, d)),
        k @ (2 | 3 | 4 | 8 | 9) => {
            let a = random_ltl_over(rng, atoms, d);
            let b = random_ltl_over(rng, atoms, d);
            match k {
                2 => Ltl::and(a, b),
                3 => Ltl::or(a, b),
                4 => Ltl::implies(a, b),
                8 => Ltl::until(a, b),
                _ => Ltl::strong_release(a, b),
            }
        }
        _ => atom(rng),
    }
}

pub fn random_ltl(rng: &mut impl Rng, n_atoms: usize, depth: usize) -> Ltl<usize> {
    let atoms: Vec<usize> = (0..n_atoms).collect();
    random_ltl_over(rng, &atoms, depth)
}

pub fn random_formula(rng: &mut impl Rng, f: &TreeFile, n_atoms: usize, depth: usize) -> Formula {
    let atoms: Vec<Expr> = (0..n_atoms.max(1)).map(|_| random_atom(rng, f)).collect();
    // the form the parser produces: boolean structure above atoms is lifted
    let raw = random_ltl_over(rng, &atoms, depth);
    crate::ltl::from_expr(&crate::ltl::to_expr(&raw)).expect("generated formula")
}

/// Letters over `n_atoms` atoms.
pub fn random_word(rng: &mut impl Rng, n_atoms: usize, len: usize) -> Vec<u64> {
    (0..len)
        .map(|_| rng.gen_range(0..1u64 << n_atoms))
        .collect()
}

pub fn random_monitor(rng: &mut impl Rng, f: &TreeFile) -> Monitor {
    match rng.gen_range(0..4) {
        0 | 1 => {
            let n = rng.gen_range(1..=3);
            let states: Vec<EsmState> = (0..n)
                .map(|i| EsmState {
                    name: format!("m{i}"),
                    verdict: if i > 0 && rng.gen_bool(0.5) {
                        Verdict::Contingency
                    } else {
                        Verdict::Nominal
                    },
                })
                .collect();
            let locals = if rng.gen_bool(0.4) {
                vec![LocalDecl {
                    name: "cnt".into(),
                    domain: Domain::Range { lo: 0, hi: 2 },
                    initial: Literal::Int(0),
                }]
            } else {
                vec![]
            };
            let mut vars: Vec<Typed> = f.sbt.vars().map(Typed::from).collect();
            vars.extend(locals.iter().map(|l| Typed {
                name: l.name.clone(),
                domain: l.domain.clone(),
            }));
            let mut transitions = Vec::new();
            for s in &states {
                for k in 0..rng.gen_range(1..=2) {
                    let guard = if k == 0 && rng.gen_bool(0.3) {
                        Expr::Bool(true)
                    } else {
                        random_atom(rng, f)
                    };
                    let updates = locals
                        .iter()
                        .filter(|_| rng.gen_bool(0.5))
                        .map(|l| Assign {
                            target: l.name.clone(),
                            value: Expr::bin(BinOp::Add, Expr::ident(&l.name), Expr::Int(1)),
                        })
                        .collect();
                    let to = states.choose(rng).unwrap().name.clone();
                    transitions.push(EsmTransition {
                        from: s.name.clone(),
                        to,
                        guard,
                        updates,
                    });
                }
                if rng.gen_bool(0.5) {
                    transitions.push(EsmTransition {
                        from: s.name.clone(),
                        to: s.name.clone(),
                        guard: Expr::Bool(true),
                        updates: vec![],
                    });
                }
            }
            Monitor::Esm(Esm {
                name: Some("mon".into()),
                locals,
                states,
                initial: vec!["m0".into()],
                transitions,
            })
        }
        2 => {
            let n = rng.gen_range(1..=3);
            let states: Vec<String> = (0..n).map(|i| format!("m{i}")).collect();
            let symbols: Vec<(String, Expr)> = (0..2)
                .map(|i| (format!("y{i}"), random_atom(rng, f)))
                .collect();
            let mut transitions = Vec::new();
            for p in &states {
                for (y, _) in &symbols {
                    for q in &states {
                        if rng.gen_bool(0.4) {
                            transitions.push(NfaTransition {
                                from: p.clone(),
                                symbol: y.clone(),
                                to: q.clone(),
                            });
                        }
                    }
                }
            }
            let accepting = states
                .iter()
                .filter(|_| rng.gen_bool(0.4))
                .cloned()
                .collect();
            Monitor::Nfa(NfaMonitor {
                name: Some("mon".into()),
                symbols,
                initial: states[0].clone(),
                states,
                accepting,
                transitions,
            })
        }
        _ => Monitor::Ltl(LtlMonitor {
            name: Some("mon".into()),
            formula: random_formula(rng, f, 2, 2),
        }),
    }
}

pub fn random_nfa(rng: &mut impl Rng) -> NfaSpec {
    let n = rng.gen_range(1..=3);
    let states: Vec<String> = (0..n).map(|i| format!("q{i}")).collect();
    let alphabet = vec!["a".to_string(), "b".to_string()];
    let mut transitions = Vec::new();
    for p in &states {
        for a in &alphabet {
            for q in &states {
                if rng.gen_bool(0.35) {
                    transitions.push((p.clone(), a.clone(), q.clone()));
                }
            }
        }
    }
    let mut initial: Vec<String> = states
        .iter()
        .filter(|_| rng.gen_bool(0.3))
        .cloned()
        .collect();
    if initial.is_empty() {
        initial.push(states[0].clone());
    }
    let accepting = states
        .iter()
        .filter(|_| rng.gen_bool(0.4))
        .cloned()
        .collect();
    NfaSpec {
        states,
        alphabet,
        initial,
        accepting,
        transitions,
        words: vec![],
    }
}

/// At most three working states plus an accepting one, over `{_, 1}`.
pub fn random_ntm(rng: &mut impl Rng) -> NtmSpec {
    let n = rng.gen_range(1..=3);
    let mut states: Vec<String> = (0..n).map(|i| format!("q{i}")).collect();
    states.push("acc".into());
    let alphabet = vec!["_".to_string(), "1".to_string()];
    let mut transitions = Vec::new();
    for q in &states[..n] {
        for a in &alphabet {
            let k = match rng.gen_range(0..20) {
                0..=4 => 0,
                5..=15 => 1,
                _ => 2,
            };
            for _ in 0..k {
                transitions.push(NtmTransition {
                    from: q.clone(),
                    read: a.clone(),
                    to: states.choose(rng).unwrap().clone(),
                    write: alphabet.choose(rng).unwrap().clone(),
                    dir: if rng.gen_bool(0.5) { Dir::L } else { Dir::R },
                });
            }
        }
    }
    NtmSpec {
        states,
        alphabet,
        blank: "_".into(),
        initial: "q0".into(),
        accepting: vec!["acc".into()],
        transitions,
        input: vec![],
        tape_bound: 3,
    }
}

fn ir_int(rng: &mut impl Rng, b: &IrBuilder, depth: usize) -> IrExpr {
    let ints: Vec<IrExpr> =
        b.ir.vars
            .iter()
            .enumerate()
            .filter(|(_, v)| matches!(v.ty, IrType::Int { .. }))
            .map(|(i, _)| IrExpr::Var(i))
            .chain((0..b.ir.inputs.len()).map(IrExpr::Input))
            .chain(
                b.ir.defines
                    .iter()
                    .enumerate()
                    .filter(|(_, d)| matches!(d.ty, IrType::Int { .. }))
                    .map(|(i, _)| IrExpr::Def(i)),
            )
            .collect();
    let pick = if depth == 0 {
        rng.gen_range(0..2)
    } else {
        rng.gen_range(0..6)
    };
    match pick {
        0 => IrExpr::Int(rng.gen_range(-2..=3)),
        1 => ints.choose(rng).cloned().unwrap_or(IrExpr::Int(1)),
        2 | 3 => {
            let op = *[BinOp::Add, BinOp::Sub, BinOp::Mul, BinOp::Div, BinOp::Mod]
                .choose(rng)
                .unwrap();
            IrExpr::Bin(
                op,
                Box::new(ir_int(rng, b, depth - 1)),
                Box::new(ir_int(rng, b, depth - 1)),
            )
        }
        4 => IrExpr::Case(
            vec![(ir_bool(rng, b, depth - 1), ir_int(rng, b, depth - 1))],
            Box::new(ir_int(rng, b, depth - 1)),
        ),
        _ => match rng.gen_range(0..3) {
            0 => IrExpr::Neg(Box::new(ir_int(rng, b, depth - 1))),
            1 => IrExpr::Call(Func::Abs, vec![ir_int(rng, b, depth - 1)]),
            _ => IrExpr::Call(
                Func::Max,
                vec![ir_int(rng, b, depth - 1), ir_int(rng, b, depth - 1)],
            ),
        },
    }
}

fn ir_bool(rng: &mut impl Rng, b: &IrBuilder, depth: usize) -> IrExpr {
    let bools: Vec<IrExpr> =
        b.ir.vars
            .iter()
            .enumerate()
            .filter(|(_, v)| v.ty == IrType::Bool)
            .map(|(i, _)| IrExpr::Var(i))
            .collect();
    let pick = if depth == 0 {
        rng.gen_range(0..2)
    } else {
        rng.gen_range(0..5)
    };
    match pick {
        0 => IrExpr::Bool(rng.gen_bool(0.5)),
        1 => bools.choose(rng).cloned().unwrap_or(IrExpr::Bool(true)),
        2 => {
            let op = *[
                BinOp::Eq,
                BinOp::Ne,
                BinOp::Lt,
                BinOp::Le,
                BinOp::Gt,
                BinOp::Ge,
            ]
            .choose(rng)
            .unwrap();
            IrExpr::Bin(
                op,
                Box::new(ir_int(rng, b, depth - 1)),
                Box::new(ir_int(rng, b, depth - 1)),
            )
        }
        3 => IrExpr::Not(Box::new(ir_bool(rng, b, depth - 1))),
        _ => {
            let op = *[BinOp::And, BinOp::Or, BinOp::Implies].choose(rng).unwrap();
            IrExpr::Bin(
                op,
                Box::new(ir_bool(rng, b, depth - 1)),
                Box::new(ir_bool(rng, b, depth - 1)),
            )
        }
    }
}

/// A small well-typed IR whose next-state functions stay within their types.
pub fn random_ir(rng: &mut impl Rng) -> Ir {
    let mut b = IrBuilder::new();
    let color = b.add_enum(vec!["red".into(), "green".into(), "blue".into()]);
    for i in 0..rng.gen_range(1..=4) {
        let (ty, hi) = match rng.gen_range(0..3) {
            0 => (IrType::Bool, 1),
            1 => {
                let lo = rng.gen_range(-2..=0);
                let hi = lo + rng.gen_range(1..=4);
                (IrType::Int { lo, hi }, hi)
            }
            _ => (IrType::Enum(color), 2),
        };
        let lo = b.ir.bounds(&ty).0;
        let mut init = vec![rng.gen_range(lo..=hi)];
        if rng.gen_bool(0.3) && init[0] < hi {
            init.push(hi);
        }
        b.add_var(format!("v{i}"), ty, init);
    }
    for i in 0..rng.gen_range(0..=2) {
        b.add_input(format!("in{i}"), rng.gen_range(2..=3));
    }
    for i in 0..rng.gen_range(0..=2) {
        let e = if rng.gen_bool(0.5) {
            ir_int(rng, &b, 2)
        } else {
            ir_bool(rng, &b, 2)
        };
        let ty = b.ir.type_of(&e);
        b.ir.defines.push(crate::verifier::ir::IrDefine {
            name: format!("d{i}"),
            ty,
            body: e,
        });
    }
    for i in 0..b.ir.vars.len() {
        let e = match b.ir.vars[i].ty.clone() {
            IrType::Bool => ir_bool(rng, &b, 2),
            IrType::Int { lo, hi } => {
                let e = ir_int(rng, &b, 2);
                b.clamp(format!("x{i}"), e, lo, hi)
            }
            IrType::Enum(en) => {
                let sym = |rng: &mut _| IrExpr::Sym(en, Rng::gen_range(rng, 0..3));
                IrExpr::Case(
                    vec![(ir_bool(rng, &b, 1), sym(rng))],
                    Box::new(if rng.gen_bool(0.5) {
                        IrExpr::Var(i)
                    } else {
                        sym(rng)
                    }),
                )
            }
        };
        b.ir.next.push(e);
    }
    b.finish()
}
