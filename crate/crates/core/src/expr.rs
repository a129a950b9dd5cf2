//! Expression language shared by leaf guards, environment updates, monitor
//! guards and LTL atoms.

use std::fmt;

use crate::model::Status;

/// Surface syntax tree. Temporal operators live here too so that one parser
/// handles guards and formulas; [`crate::ltl`] lowers formulas out of it.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Expr {
    Int(i64),
    Bool(bool),
    Ident(String),
    /// `status(node) == S`
    StatusIs(String, Status),
    Unary(UnOp, Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Vec<Expr>),
    /// Nondeterministic pick; only valid as the right-hand side of a write.
    Choice(Vec<Expr>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum UnOp {
    Not,
    Neg,
    Next,
    Globally,
    Finally,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Mod,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    And,
    Or,
    Implies,
    Until,
    StrongRelease,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Mod => "%",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::And => "&",
            BinOp::Or => "|",
            BinOp::Implies => "->",
            BinOp::Until => "U",
            BinOp::StrongRelease => "M",
        }
    }

    pub fn is_temporal(self) -> bool {
        matches!(self, BinOp::Until | BinOp::StrongRelease)
    }

    pub fn is_arith(self) -> bool {
        matches!(
            self,
            BinOp::Add | BinOp::Sub | BinOp::Mul | BinOp::Div | BinOp::Mod
        )
    }

    pub fn is_cmp(self) -> bool {
        matches!(
            self,
            BinOp::Eq | BinOp::Ne | BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Func {
    Abs,
    Min,
    Max,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Abs => "abs",
            Func::Min => "min",
            Func::Max => "max",
        }
    }

    pub fn arity(self) -> usize {
        match self {
            Func::Abs => 1,
            Func::Min | Func::Max => 2,
        }
    }
}

impl Expr {
    pub fn ident(s: &str) -> Expr {
        Expr::Ident(s.to_string())
    }

    pub fn bin(op: BinOp, a: Expr, b: Expr) -> Expr {
        Expr::Binary(op, Box::new(a), Box::new(b))
    }

    pub fn not(a: Expr) -> Expr {
        Expr::Unary(UnOp::Not, Box::new(a))
    }

    pub fn is_temporal(&self) -> bool {
        match self {
            Expr::Unary(op, a) => {
                matches!(op, UnOp::Next | UnOp::Globally | UnOp::Finally) || a.is_temporal()
            }
            Expr::Binary(op, a, b) => op.is_temporal() || a.is_temporal() || b.is_temporal(),
            Expr::Call(_, args) | Expr::Choice(args) => args.iter().any(Expr::is_temporal),
            _ => false,
        }
    }

    /// Identifiers referenced anywhere in the expression.
    pub fn idents(&self, out: &mut Vec<String>) {
        match self {
            Expr::Ident(s) => {
                if !out.contains(s) {
                    out.push(s.clone())
                }
            }
            Expr::Unary(_, a) => a.idents(out),
            Expr::Binary(_, a, b) => {
                a.idents(out);
                b.idents(out);
            }
            Expr::Call(_, args) | Expr::Choice(args) => args.iter().for_each(|a| a.idents(out)),
            _ => {}
        }
    }
}

/// Static type of an expression.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Type {
    Bool,
    Int,
    /// Index into the symbol table's enumerations.
    Enum(usize),
}

/// What an identifier refers to after resolution.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Slot {
    Var(usize),
    Local(usize),
    Const(i64),
    Contingency,
    Deadlock,
}

pub trait Resolver {
    fn ident(&self, name: &str) -> Option<(Slot, Type)>;
    fn node(&self, name: &str) -> Option<usize>;
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum TypeError {
    #[error("unknown identifier `{0}`")]
    Unknown(String),
    #[error("unknown node `{0}`")]
    UnknownNode(String),
    #[error("operator `{op}` expects {expected}, found {found}")]
    Operand {
        op: String,
        expected: String,
        found: String,
    },
    #[error("`{0}` needs {1} argument(s)")]
    Arity(String, usize),
    #[error("temporal operator outside a formula")]
    Temporal,
    #[error("choice(..) is only allowed as the whole right-hand side of a write")]
    ChoicePlacement,
    #[error("choice(..) needs at least one alternative of a single type")]
    ChoiceShape,
}

fn operand(op: &str, expected: &str, found: Type) -> TypeError {
    TypeError::Operand {
        op: op.to_string(),
        expected: expected.to_string(),
        found: format!("{found:?}"),
    }
}

pub fn type_of(e: &Expr, r: &dyn Resolver) -> Result<Type, TypeError> {
    Ok(match e {
        Expr::Int(_) => Type::Int,
        Expr::Bool(_) => Type::Bool,
        Expr::Ident(s) => r.ident(s).ok_or_else(|| TypeError::Unknown(s.clone()))?.1,
        Expr::StatusIs(n, _) => {
            r.node(n).ok_or_else(|| TypeError::UnknownNode(n.clone()))?;
            Type::Bool
        }
        Expr::Unary(UnOp::Not, a) => match type_of(a, r)? {
            Type::Bool => Type::Bool,
            t => return Err(operand("!", "Bool", t)),
        },
        Expr::Unary(UnOp::Neg, a) => match type_of(a, r)? {
            Type::Int => Type::Int,
            t => return Err(operand("-", "Int", t)),
        },
        Expr::Unary(..) => return Err(TypeError::Temporal),
        Expr::Binary(op, a, b) => {
            if op.is_temporal() {
                return Err(TypeError::Temporal);
            }
            let (ta, tb) = (type_of(a, r)?, type_of(b, r)?);
            match op {
                _ if op.is_arith() => {
                    for t in [ta, tb] {
                        if t != Type::Int {
                            return Err(operand(op.symbol(), "Int", t));
                        }
                    }
                    Type::Int
                }
                BinOp::Eq | BinOp::Ne => {
                    if ta != tb {
                        return Err(operand(op.symbol(), &format!("{ta:?}"), tb));
                    }
                    Type::Bool
                }
                BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => {
                    for t in [ta, tb] {
                        if t != Type::Int {
                            return Err(operand(op.symbol(), "Int", t));
                        }
                    }
                    Type::Bool
                }
                _ => {
                    for t in [ta, tb] {
                        if t != Type::Bool {
                            return Err(operand(op.symbol(), "Bool", t));
                        }
                    }
                    Type::Bool
                }
            }
        }
        Expr::Call(f, args) => {
            if args.len() != f.arity() {
                return Err(TypeError::Arity(f.name().to_string(), f.arity()));
            }
            for a in args {
                let t = type_of(a, r)?;
                if t != Type::Int {
                    return Err(operand(f.name(), "Int", t));
                }
            }
            Type::Int
        }
        Expr::Choice(_) => return Err(TypeError::ChoicePlacement),
    })
}

/// Type of a write's right-hand side, where a top-level `choice` is allowed.
pub fn type_of_assigned(e: &Expr, r: &dyn Resolver) -> Result<Type, TypeError> {
    match e {
        Expr::Choice(alts) => {
            let mut ty = None;
            for a in alts {
                let t = type_of(a, r)?;
                if ty.is_some_and(|x| x != t) {
                    return Err(TypeError::ChoiceShape);
                }
                ty = Some(t);
            }
            ty.ok_or(TypeError::ChoiceShape)
        }
        other => type_of(other, r),
    }
}

/// Resolved expression over integer-encoded values (bool as 0/1, enum as index).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum CExpr {
    Const(i64),
    Var(usize),
    Local(usize),
    StatusIs(usize, Status),
    Contingency,
    Deadlock,
    Not(Box<CExpr>),
    Neg(Box<CExpr>),
    Bin(BinOp, Box<CExpr>, Box<CExpr>),
    Call(Func, Vec<CExpr>),
}

/// Compile an expression that already type-checked. Unknown names and
/// temporal operators are reported as errors rather than assumed away.
pub fn compile(e: &Expr, r: &dyn Resolver) -> Result<CExpr, TypeError> {
    Ok(match e {
        Expr::Int(i) => CExpr::Const(*i),
        Expr::Bool(b) => CExpr::Const(*b as i64),
        Expr::Ident(s) => match r.ident(s).ok_or_else(|| TypeError::Unknown(s.clone()))?.0 {
            Slot::Var(i) => CExpr::Var(i),
            Slot::Local(i) => CExpr::Local(i),
            Slot::Const(v) => CExpr::Const(v),
            Slot::Contingency => CExpr::Contingency,
            Slot::Deadlock => CExpr::Deadlock,
        },
        Expr::StatusIs(n, s) => CExpr::StatusIs(
            r.node(n).ok_or_else(|| TypeError::UnknownNode(n.clone()))?,
            *s,
        ),
        Expr::Unary(UnOp::Not, a) => CExpr::Not(Box::new(compile(a, r)?)),
        Expr::Unary(UnOp::Neg, a) => CExpr::Neg(Box::new(compile(a, r)?)),
        Expr::Unary(..) => return Err(TypeError::Temporal),
        Expr::Binary(op, _, _) if op.is_temporal() => return Err(TypeError::Temporal),
        Expr::Binary(op, a, b) => {
            CExpr::Bin(*op, Box::new(compile(a, r)?), Box::new(compile(b, r)?))
        }
        Expr::Call(f, args) => CExpr::Call(
            *f,
            args.iter()
                .map(|a| compile(a, r))
                .collect::<Result<_, _>>()?,
        ),
        Expr::Choice(_) => return Err(TypeError::ChoicePlacement),
    })
}

/// Compiled right-hand side of a write.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum CRhs {
    Det(CExpr),
    Choice(Vec<CExpr>),
}

pub fn compile_assigned(e: &Expr, r: &dyn Resolver) -> Result<CRhs, TypeError> {
    match e {
        Expr::Choice(alts) => Ok(CRhs::Choice(
            alts.iter()
                .map(|a| compile(a, r))
                .collect::<Result<_, _>>()?,
        )),
        other => Ok(CRhs::Det(compile(other, r)?)),
    }
}

/// Read access for evaluation.
pub trait Env {
    fn var(&self, i: usize) -> i64;
    fn local(&self, _i: usize) -> i64 {
        0
    }
    fn status(&self, _node: usize) -> Status {
        Status::Invalid
    }
    fn contingency(&self) -> bool {
        false
    }
    fn deadlock(&self) -> bool {
        false
    }
}

/// Integer semantics shared by the interpreter and the symbolic IR.
/// Arithmetic saturates; division and remainder by zero yield 0.
pub fn apply_bin(op: BinOp, a: i64, b: i64) -> i64 {
    match op {
        BinOp::Add => a.saturating_add(b),
        BinOp::Sub => a.saturating_sub(b),
        BinOp::Mul => a.saturating_mul(b),
        BinOp::Div => {
            if b == 0 {
                0
            } else {
                a.checked_div(b).unwrap_or(i64::MAX)
            }
        }
        BinOp::Mod => {
            if b == 0 {
                0
            } else {
                a.checked_rem(b).unwrap_or(0)
            }
        }
        BinOp::Eq => (a == b) as i64,
        BinOp::Ne => (a != b) as i64,
        BinOp::Lt => (a < b) as i64,
        BinOp::Le => (a <= b) as i64,
        BinOp::Gt => (a > b) as i64,
        BinOp::Ge => (a >= b) as i64,
        BinOp::And => (a != 0 && b != 0) as i64,
        BinOp::Or => (a != 0 || b != 0) as i64,
        BinOp::Implies => (a == 0 || b != 0) as i64,
        BinOp::Until | BinOp::StrongRelease => 0,
    }
}

pub fn apply_func(f: Func, args: &[i64]) -> i64 {
    match f {
        Func::Abs => args[0].saturating_abs(),
        Func::Min => args[0].min(args[1]),
        Func::Max => args[0].max(args[1]),
    }
}

pub fn eval(e: &CExpr, env: &dyn Env) -> i64 {
    match e {
        CExpr::Const(v) => *v,
        CExpr::Var(i) => env.var(*i),
        CExpr::Local(i) => env.local(*i),
        CExpr::StatusIs(n, s) => (env.status(*n) == *s) as i64,
        CExpr::Contingency => env.contingency() as i64,
        CExpr::Deadlock => env.deadlock() as i64,
        CExpr::Not(a) => (eval(a, env) == 0) as i64,
        CExpr::Neg(a) => eval(a, env).saturating_neg(),
        CExpr::Bin(BinOp::And, a, b) => (eval(a, env) != 0 && eval(b, env) != 0) as i64,
        CExpr::Bin(BinOp::Or, a, b) => (eval(a, env) != 0 || eval(b, env) != 0) as i64,
        CExpr::Bin(BinOp::Implies, a, b) => (eval(a, env) == 0 || eval(b, env) != 0) as i64,
        CExpr::Bin(op, a, b) => apply_bin(*op, eval(a, env), eval(b, env)),
        CExpr::Call(f, args) => {
            let vals: Vec<i64> = args.iter().map(|a| eval(a, env)).collect();
            apply_func(*f, &vals)
        }
    }
}

pub fn holds(e: &CExpr, env: &dyn Env) -> bool {
    eval(e, env) != 0
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&crate::dsl::print_expr(self))
    }
}
