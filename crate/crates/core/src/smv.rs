//! SMV export of the symbolic IR and a reader for exactly the subset we emit.
//!
//! Emission policy: one `MODULE main`; `VAR` and `IVAR` sorted by emitted
//! name; `DEFINE` in dependency order; `INIT` as one conjunct per variable;
//! `TRANS` as one `next(v) = e` conjunct per variable; every binary operator
//! parenthesized. Names are sanitized to `[A-Za-z0-9_]`, keywords and names
//! starting with a digit get a trailing or leading `_`, and collisions get
//! `_2`, `_3`, ... in first-come order (state variables, inputs, definitions,
//! then symbols).

use std::collections::{HashMap, HashSet};
use std::fmt::Write;

use crate::composition::Btm;
use crate::dsl::{print_expr, print_formula};
use crate::expr::{BinOp, Func};
use crate::ltl::Ltl;
use crate::semantics::{Chooser, FirstChoice};
use crate::verifier::ir::{IrBuilder, IrVar};
use crate::verifier::{
    compile_formula, compile_predicate, encode, relativize, Ir, IrExpr, IrType, OptLevel, Spec,
    VerifyError,
};

const KEYWORDS: &[&str] = &[
    "MODULE",
    "DEFINE",
    "MDEFINE",
    "CONSTANTS",
    "VAR",
    "IVAR",
    "FROZENVAR",
    "INIT",
    "TRANS",
    "INVAR",
    "SPEC",
    "CTLSPEC",
    "LTLSPEC",
    "PSLSPEC",
    "COMPUTE",
    "NAME",
    "INVARSPEC",
    "FAIRNESS",
    "JUSTICE",
    "COMPASSION",
    "ISA",
    "ASSIGN",
    "CONSTRAINT",
    "SIMPWFF",
    "CTLWFF",
    "LTLWFF",
    "PSLWFF",
    "COMPWFF",
    "IN",
    "MIN",
    "MAX",
    "MIRROR",
    "PRED",
    "PREDICATES",
    "process",
    "array",
    "of",
    "boolean",
    "integer",
    "real",
    "word",
    "word1",
    "bool",
    "signed",
    "unsigned",
    "extend",
    "resize",
    "sizeof",
    "uwconst",
    "swconst",
    "EX",
    "AX",
    "EF",
    "AF",
    "EG",
    "AG",
    "E",
    "F",
    "O",
    "G",
    "H",
    "X",
    "Y",
    "Z",
    "A",
    "U",
    "S",
    "V",
    "T",
    "BU",
    "EBF",
    "ABF",
    "EBG",
    "ABG",
    "case",
    "esac",
    "mod",
    "next",
    "init",
    "union",
    "in",
    "xor",
    "xnor",
    "self",
    "TRUE",
    "FALSE",
    "count",
    "abs",
    "max",
    "min",
    "main",
];

/// Deterministic identifier assignment.
#[derive(Default)]
pub struct Mangler {
    used: HashSet<String>,
    pub warnings: Vec<String>,
}

impl Mangler {
    pub fn name(&mut self, raw: &str) -> String {
        let mut base: String = raw
            .chars()
            .map(|c| {
                if c.is_ascii_alphanumeric() || c == '_' {
                    c
                } else {
                    '_'
                }
            })
            .collect();
        if base.is_empty() || base.starts_with(|c: char| c.is_ascii_digit()) {
            base.insert(0, '_');
        }
        if KEYWORDS.contains(&base.as_str()) {
            base.push('_');
        }
        if self.used.insert(base.clone()) {
            return base;
        }
        let mut k = 2;
        loop {
            let cand = format!("{base}_{k}");
            if self.used.insert(cand.clone()) {
                self.warnings
                    .push(format!("`{raw}` renamed to `{cand}` after a collision"));
                return cand;
            }
            k += 1;
        }
    }
}

/// Emitted names, indexed like the IR.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SmvNames {
    pub vars: Vec<String>,
    pub inputs: Vec<String>,
    pub defines: Vec<String>,
    pub symbols: Vec<Vec<String>>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum SmvSpecKind {
    Ltl(Ltl<IrExpr>),
    Invariant(IrExpr),
}

/// A specification with the DSL text written in the comment above it.
#[derive(Clone, Debug, PartialEq)]
pub struct SmvSpec {
    pub source: String,
    pub kind: SmvSpecKind,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SmvModel {
    pub text: String,
    pub names: SmvNames,
    pub warnings: Vec<String>,
}

struct Printer<'a> {
    ir: &'a Ir,
    names: &'a SmvNames,
}

impl Printer<'_> {
    fn value(&self, ty: &IrType, v: i64) -> String {
        match ty {
            IrType::Bool => if v != 0 { "TRUE" } else { "FALSE" }.to_string(),
            IrType::Int { .. } => v.to_string(),
            IrType::Enum(e) => self.names.symbols[*e][v as usize].clone(),
        }
    }

    fn ty(&self, ty: &IrType) -> String {
        match ty {
            IrType::Bool => "boolean".into(),
            IrType::Int { lo, hi } => format!("{lo}..{hi}"),
            IrType::Enum(e) => format!("{{{}}}", self.names.symbols[*e].join(", ")),
        }
    }

    fn expr(&self, e: &IrExpr, out: &mut String) {
        match e {
            IrExpr::Bool(b) => out.push_str(if *b { "TRUE" } else { "FALSE" }),
            IrExpr::Int(v) => write!(out, "{v}").unwrap(),
            IrExpr::Sym(en, i) => out.push_str(&self.names.symbols[*en][*i as usize]),
            IrExpr::Var(i) => out.push_str(&self.names.vars[*i]),
            IrExpr::Input(i) => out.push_str(&self.names.inputs[*i]),
            IrExpr::Def(i) => out.push_str(&self.names.defines[*i]),
            IrExpr::Not(a) => {
                out.push('!');
                self.expr(a, out);
            }
            IrExpr::Neg(a) => {
                out.push_str("-(");
                self.expr(a, out);
                out.push(')');
            }
            IrExpr::Bin(op @ (BinOp::Div | BinOp::Mod), a, b) => {
                // division by zero is 0 in our semantics and an error in SMV
                out.push_str("case (");
                self.expr(b, out);
                out.push_str(" = 0) : 0; TRUE : (");
                self.expr(a, out);
                out.push_str(if *op == BinOp::Div { " / " } else { " mod " });
                self.expr(b, out);
                out.push_str("); esac");
            }
            IrExpr::Bin(op, a, b) => {
                out.push('(');
                self.expr(a, out);
                write!(out, " {} ", smv_op(*op)).unwrap();
                self.expr(b, out);
                out.push(')');
            }
            IrExpr::Call(f, args) => {
                out.push_str(match f {
                    Func::Abs => "abs",
                    Func::Min => "min",
                    Func::Max => "max",
                });
                out.push('(');
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        out.push_str(", ");
                    }
                    self.expr(a, out);
                }
                out.push(')');
            }
            IrExpr::Case(arms, d) => {
                out.push_str("case ");
                for (c, v) in arms {
                    self.expr(c, out);
                    out.push_str(" : ");
                    self.expr(v, out);
                    out.push_str("; ");
                }
                out.push_str("TRUE : ");
                self.expr(d, out);
                out.push_str("; esac");
            }
        }
    }

    fn ltl(&self, f: &Ltl<IrExpr>, out: &mut String) {
        let bin = |me: &Self, a: &Ltl<IrExpr>, op: &str, b: &Ltl<IrExpr>, out: &mut String| {
            out.push('(');
            me.ltl(a, out);
            write!(out, " {op} ").unwrap();
            me.ltl(b, out);
            out.push(')');
        };
        match f {
            Ltl::True => out.push_str("TRUE"),
            Ltl::False => out.push_str("FALSE"),
            Ltl::Atom(e) => self.expr(e, out),
            Ltl::Not(a) => {
                out.push('!');
                self.ltl(a, out);
            }
            Ltl::Next(a) | Ltl::Globally(a) | Ltl::Finally(a) => {
                out.push_str(match f {
                    Ltl::Next(_) => "X ",
                    Ltl::Globally(_) => "G ",
                    _ => "F ",
                });
                self.ltl(a, out);
            }
            Ltl::And(a, b) => bin(self, a, "&", b, out),
            Ltl::Or(a, b) => bin(self, a, "|", b, out),
            Ltl::Implies(a, b) => bin(self, a, "->", b, out),
            Ltl::Until(a, b) => bin(self, a, "U", b, out),
            Ltl::Release(a, b) => bin(self, a, "V", b, out),
            Ltl::StrongRelease(a, b) => {
                let rewritten = Ltl::until((**b).clone(), Ltl::and((**a).clone(), (**b).clone()));
                self.ltl(&rewritten, out);
            }
        }
    }
}

fn smv_op(op: BinOp) -> &'static str {
    match op {
        BinOp::Add => "+",
        BinOp::Sub => "-",
        BinOp::Mul => "*",
        BinOp::Div => "/",
        BinOp::Mod => "mod",
        BinOp::Eq => "=",
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

pub fn mangle(ir: &Ir) -> (SmvNames, Vec<String>) {
    let mut m = Mangler::default();
    let vars = ir.vars.iter().map(|v| m.name(&v.name)).collect();
    let inputs = ir.inputs.iter().map(|v| m.name(&v.name)).collect();
    let defines = ir.defines.iter().map(|d| m.name(&d.name)).collect();
    let symbols = ir
        .enums
        .iter()
        .map(|e| e.iter().map(|s| m.name(s)).collect())
        .collect();
    (
        SmvNames {
            vars,
            inputs,
            defines,
            symbols,
        },
        m.warnings,
    )
}

/// Render `ir` and `specs` as SMV text.
pub fn emit(ir: &Ir, header: &str, specs: &[SmvSpec]) -> SmvModel {
    let (names, warnings) = mangle(ir);
    let p = Printer { ir, names: &names };
    let mut out = String::new();
    for line in header.lines() {
        writeln!(out, "-- {line}").unwrap();
    }
    out.push_str("MODULE main\n");
    let sorted = |vs: &[IrVar], ns: &[String]| {
        let mut idx: Vec<usize> = (0..vs.len()).collect();
        idx.sort_by(|&a, &b| ns[a].cmp(&ns[b]));
        idx
    };
    let var_order = sorted(&ir.vars, &names.vars);
    out.push_str("VAR\n");
    for &i in &var_order {
        writeln!(out, "  {} : {};", names.vars[i], p.ty(&ir.vars[i].ty)).unwrap();
    }
    if !ir.inputs.is_empty() {
        out.push_str("IVAR\n");
        for i in sorted(&ir.inputs, &names.inputs) {
            writeln!(out, "  {} : {};", names.inputs[i], p.ty(&p.ir.inputs[i].ty)).unwrap();
        }
    }
    if !ir.defines.is_empty() {
        out.push_str("DEFINE\n");
        for (i, d) in ir.defines.iter().enumerate() {
            let mut body = String::new();
            p.expr(&d.body, &mut body);
            writeln!(out, "  {} := {body};", names.defines[i]).unwrap();
        }
    }
    out.push_str("INIT\n");
    for (k, &i) in var_order.iter().enumerate() {
        let ty = &ir.vars[i].ty;
        let vals = &ir.init[i];
        let conj = if vals.len() == 1 {
            format!("{} = {}", names.vars[i], p.value(ty, vals[0]))
        } else {
            let vs: Vec<String> = vals.iter().map(|v| p.value(ty, *v)).collect();
            format!("{} in {{{}}}", names.vars[i], vs.join(", "))
        };
        let sep = if k + 1 == var_order.len() { ";" } else { " &" };
        writeln!(out, "  {conj}{sep}").unwrap();
    }
    out.push_str("TRANS\n");
    for (k, &i) in var_order.iter().enumerate() {
        let mut e = String::new();
        p.expr(&ir.next[i], &mut e);
        let sep = if k + 1 == var_order.len() { ";" } else { " &" };
        writeln!(out, "  next({}) = {e}{sep}", names.vars[i]).unwrap();
    }
    for s in specs {
        writeln!(out, "-- spec: {}", s.source).unwrap();
        let mut body = String::new();
        match &s.kind {
            SmvSpecKind::Ltl(f) => {
                p.ltl(f, &mut body);
                writeln!(out, "LTLSPEC {body};").unwrap();
            }
            SmvSpecKind::Invariant(e) => {
                p.expr(e, &mut body);
                writeln!(out, "INVARSPEC {body};").unwrap();
            }
        }
    }
    SmvModel {
        text: out,
        names,
        warnings,
    }
}

/// Encode `btm` at `level` and export it with `specs`. Below full_opt the
/// specs are relativized to tick-boundary states.
pub fn to_smv(btm: &Btm, level: OptLevel, specs: &[Spec]) -> Result<SmvModel, VerifyError> {
    let enc = encode(btm, level)?;
    let relative = level != OptLevel::FullOpt;
    let mut out = Vec::new();
    for s in specs {
        out.push(match s {
            Spec::Ltl(f) => {
                let cf = compile_formula(btm, f)?;
                let mut atoms: Vec<IrExpr> = cf.atoms.iter().map(|a| enc.atom(a)).collect();
                let formula = if relative {
                    atoms.push(enc.boundary.clone());
                    relativize(&cf.formula, atoms.len() - 1)
                } else {
                    cf.formula.clone()
                };
                SmvSpec {
                    source: print_formula(f),
                    kind: SmvSpecKind::Ltl(formula.map_atoms(&mut |i| atoms[*i].clone())),
                }
            }
            Spec::Invariant(e) => {
                let a = enc.atom(&compile_predicate(btm, e)?);
                let a = if relative {
                    IrExpr::bin(BinOp::Implies, enc.boundary.clone(), a)
                } else {
                    a
                };
                SmvSpec {
                    source: print_expr(e),
                    kind: SmvSpecKind::Invariant(a),
                }
            }
        });
    }
    let name = btm.model.name.as_deref().unwrap_or("sbt");
    Ok(emit(
        &enc.ir,
        &format!("{name}: btmc export at {level}"),
        &out,
    ))
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("line {line}: {msg}")]
pub struct SmvError {
    pub line: usize,
    pub msg: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Int(i64),
    Punct(&'static str),
}

const PUNCT: &[&str] = &[
    ":=", "..", "!=", "<=", ">=", "->", ":", ";", "(", ")", "{", "}", ",", "=", "<", ">", "+", "-",
    "*", "/", "&", "|", "!",
];

fn lex(text: &str) -> Result<Vec<(Tok, usize)>, SmvError> {
    let mut out = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let line_no = ln + 1;
        let code = match line.find("--") {
            Some(i) => &line[..i],
            None => line,
        };
        let b = code.as_bytes();
        let mut i = 0;
        while i < b.len() {
            let c = b[i] as char;
            if c.is_ascii_whitespace() {
                i += 1;
            } else if c.is_ascii_alphabetic() || c == '_' {
                let s = i;
                while i < b.len() && ((b[i] as char).is_ascii_alphanumeric() || b[i] == b'_') {
                    i += 1;
                }
                out.push((Tok::Ident(code[s..i].to_string()), line_no));
            } else if c.is_ascii_digit() {
                let s = i;
                while i < b.len() && (b[i] as char).is_ascii_digit() {
                    i += 1;
                }
                let v = code[s..i].parse().map_err(|_| SmvError {
                    line: line_no,
                    msg: "integer out of range".into(),
                })?;
                out.push((Tok::Int(v), line_no));
            } else if let Some(p) = PUNCT.iter().find(|p| code[i..].starts_with(**p)) {
                out.push((Tok::Punct(p), line_no));
                i += p.len();
            } else {
                return Err(SmvError {
                    line: line_no,
                    msg: format!("unexpected character `{c}`"),
                });
            }
        }
    }
    Ok(out)
}

const SECTIONS: &[&str] = &[
    "VAR",
    "IVAR",
    "DEFINE",
    "INIT",
    "TRANS",
    "LTLSPEC",
    "INVARSPEC",
];

struct Reader {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    b: IrBuilder,
    vars: HashMap<String, usize>,
    inputs: HashMap<String, usize>,
    defines: HashMap<String, usize>,
    symbols: HashMap<String, (usize, i64)>,
}

impl Reader {
    fn line(&self) -> usize {
        self.toks
            .get(self.pos)
            .or(self.toks.last())
            .map_or(0, |t| t.1)
    }
    fn err<T>(&self, msg: impl Into<String>) -> Result<T, SmvError> {
        Err(SmvError {
            line: self.line(),
            msg: msg.into(),
        })
    }
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.0)
    }
    fn at_ident(&self, s: &str) -> bool {
        matches!(self.peek(), Some(Tok::Ident(x)) if x == s)
    }
    fn at_punct(&self, s: &str) -> bool {
        matches!(self.peek(), Some(Tok::Punct(p)) if *p == s)
    }
    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|t| t.0.clone());
        self.pos += 1;
        t
    }
    fn punct(&mut self, s: &str) -> Result<(), SmvError> {
        if self.at_punct(s) {
            self.pos += 1;
            Ok(())
        } else {
            self.err(format!("expected `{s}`"))
        }
    }
    fn keyword(&mut self, s: &str) -> Result<(), SmvError> {
        if self.at_ident(s) {
            self.pos += 1;
            Ok(())
        } else {
            self.err(format!("expected `{s}`"))
        }
    }
    fn ident(&mut self) -> Result<String, SmvError> {
        match self.bump() {
            Some(Tok::Ident(s)) if !KEYWORDS.contains(&s.as_str()) => Ok(s),
            _ => {
                self.pos -= 1;
                self.err("expected an identifier")
            }
        }
    }
    fn int(&mut self) -> Result<i64, SmvError> {
        let neg = self.at_punct("-");
        if neg {
            self.pos += 1;
        }
        match self.bump() {
            Some(Tok::Int(v)) => Ok(if neg { -v } else { v }),
            _ => {
                self.pos -= 1;
                self.err("expected an integer")
            }
        }
    }

    fn ty(&mut self) -> Result<IrType, SmvError> {
        if self.at_ident("boolean") {
            self.pos += 1;
            return Ok(IrType::Bool);
        }
        if self.at_punct("{") {
            self.pos += 1;
            let mut syms = vec![self.ident()?];
            while self.at_punct(",") {
                self.pos += 1;
                syms.push(self.ident()?);
            }
            self.punct("}")?;
            let e = self.b.ir.enums.len();
            for (i, s) in syms.iter().enumerate() {
                if let Some(&prev) = self.symbols.get(s) {
                    if prev != (e, i as i64) && self.b.ir.enums[prev.0] != syms {
                        return self.err(format!("symbol `{s}` belongs to two enumerations"));
                    }
                }
            }
            let id = self.b.add_enum(syms.clone());
            for (i, s) in syms.iter().enumerate() {
                self.symbols.insert(s.clone(), (id, i as i64));
            }
            return Ok(IrType::Enum(id));
        }
        let lo = self.int()?;
        self.punct("..")?;
        let hi = self.int()?;
        if lo > hi {
            return self.err("empty range");
        }
        Ok(IrType::Int { lo, hi })
    }

    fn decls(&mut self, input: bool) -> Result<(), SmvError> {
        while matches!(self.peek(), Some(Tok::Ident(s)) if !SECTIONS.contains(&s.as_str())) {
            let name = self.ident()?;
            self.punct(":")?;
            let ty = self.ty()?;
            self.punct(";")?;
            if self.vars.contains_key(&name) || self.inputs.contains_key(&name) {
                return self.err(format!("`{name}` declared twice"));
            }
            if input {
                let IrType::Int { lo: 0, hi } = ty else {
                    return self.err("inputs must be ranges starting at 0");
                };
                let i = self.b.add_input(name.clone(), hi as usize + 1);
                self.inputs.insert(name, i);
            } else {
                let i = self.b.add_var(name.clone(), ty, vec![]);
                self.vars.insert(name, i);
            }
        }
        Ok(())
    }

    fn primary(&mut self) -> Result<IrExpr, SmvError> {
        match self.bump() {
            Some(Tok::Int(v)) => Ok(IrExpr::Int(v)),
            Some(Tok::Punct("-")) => {
                if let Some(Tok::Int(v)) = self.peek().cloned() {
                    self.pos += 1;
                    return Ok(IrExpr::Int(-v));
                }
                Ok(IrExpr::Neg(Box::new(self.primary()?)))
            }
            Some(Tok::Punct("!")) => Ok(IrExpr::Not(Box::new(self.primary()?))),
            Some(Tok::Punct("(")) => {
                let a = self.primary()?;
                if self.at_punct(")") {
                    // `-(e)` groups a single operand
                    self.pos += 1;
                    return Ok(a);
                }
                let op = match self.bump() {
                    Some(Tok::Punct(p)) => match p {
                        "+" => BinOp::Add,
                        "-" => BinOp::Sub,
                        "*" => BinOp::Mul,
                        "/" => BinOp::Div,
                        "=" => BinOp::Eq,
                        "!=" => BinOp::Ne,
                        "<" => BinOp::Lt,
                        "<=" => BinOp::Le,
                        ">" => BinOp::Gt,
                        ">=" => BinOp::Ge,
                        "&" => BinOp::And,
                        "|" => BinOp::Or,
                        "->" => BinOp::Implies,
                        _ => return self.err(format!("unexpected `{p}`")),
                    },
                    Some(Tok::Ident(s)) if s == "mod" => BinOp::Mod,
                    _ => return self.err("expected a binary operator"),
                };
                let b = self.primary()?;
                self.punct(")")?;
                Ok(IrExpr::bin(op, a, b))
            }
            Some(Tok::Ident(s)) => match s.as_str() {
                "TRUE" => Ok(IrExpr::Bool(true)),
                "FALSE" => Ok(IrExpr::Bool(false)),
                "case" => {
                    let mut arms = Vec::new();
                    loop {
                        let c = self.primary()?;
                        self.punct(":")?;
                        let v = self.primary()?;
                        self.punct(";")?;
                        if c == IrExpr::Bool(true) && self.at_ident("esac") {
                            self.pos += 1;
                            return Ok(IrExpr::Case(arms, Box::new(v)));
                        }
                        arms.push((c, v));
                    }
                }
                "abs" | "min" | "max" => {
                    let f = match s.as_str() {
                        "abs" => Func::Abs,
                        "min" => Func::Min,
                        _ => Func::Max,
                    };
                    self.punct("(")?;
                    let mut args = vec![self.primary()?];
                    while self.at_punct(",") {
                        self.pos += 1;
                        args.push(self.primary()?);
                    }
                    self.punct(")")?;
                    if args.len() != f.arity() {
                        return self.err(format!("`{s}` takes {} arguments", f.arity()));
                    }
                    Ok(IrExpr::Call(f, args))
                }
                _ => {
                    if let Some(&i) = self.vars.get(&s) {
                        Ok(IrExpr::Var(i))
                    } else if let Some(&i) = self.inputs.get(&s) {
                        Ok(IrExpr::Input(i))
                    } else if let Some(&i) = self.defines.get(&s) {
                        Ok(IrExpr::Def(i))
                    } else if let Some(&(e, i)) = self.symbols.get(&s) {
                        Ok(IrExpr::Sym(e, i))
                    } else {
                        self.pos -= 1;
                        self.err(format!("unknown identifier `{s}`"))
                    }
                }
            },
            _ => {
                self.pos -= 1;
                self.err("expected an expression")
            }
        }
    }

    fn value(&mut self, ty: &IrType) -> Result<i64, SmvError> {
        let e = self.primary()?;
        let v = match (&e, ty) {
            (IrExpr::Bool(b), IrType::Bool) => *b as i64,
            (IrExpr::Int(v), IrType::Int { lo, hi }) if v >= lo && v <= hi => *v,
            (IrExpr::Sym(en, i), IrType::Enum(t)) if en == t => *i,
            _ => return self.err("initial value outside the variable's type"),
        };
        Ok(v)
    }

    fn ltl(&mut self) -> Result<(), SmvError> {
        // specs are checked for shape only; they do not affect stepping
        let mut depth = 0i64;
        loop {
            match self.bump() {
                None => return self.err("unterminated specification"),
                Some(Tok::Punct("(")) => depth += 1,
                Some(Tok::Punct(")")) => depth -= 1,
                Some(Tok::Punct(";")) if depth == 0 => return Ok(()),
                Some(Tok::Ident(s)) if SECTIONS.contains(&s.as_str()) || s == "MODULE" => {
                    return self.err("unterminated specification")
                }
                _ => {}
            }
            if depth < 0 {
                return self.err("unbalanced parentheses");
            }
        }
    }
}

/// Read SMV text produced by [`emit`] back into an IR whose variables keep
/// the emitted names, in `VAR` order.
pub fn parse_smv(text: &str) -> Result<Ir, SmvError> {
    let mut r = Reader {
        toks: lex(text)?,
        pos: 0,
        b: IrBuilder::new(),
        vars: HashMap::new(),
        inputs: HashMap::new(),
        defines: HashMap::new(),
        symbols: HashMap::new(),
    };
    r.keyword("MODULE")?;
    r.keyword("main")?;
    r.keyword("VAR")?;
    r.decls(false)?;
    if r.at_ident("IVAR") {
        r.pos += 1;
        r.decls(true)?;
    }
    if r.at_ident("DEFINE") {
        r.pos += 1;
        while matches!(r.peek(), Some(Tok::Ident(s)) if !SECTIONS.contains(&s.as_str())) {
            let name = r.ident()?;
            r.punct(":=")?;
            let body = r.primary()?;
            r.punct(";")?;
            if r.defines.contains_key(&name) || r.vars.contains_key(&name) {
                return r.err(format!("`{name}` defined twice"));
            }
            let ty = r.b.ir.type_of(&body);
            r.b.ir.defines.push(crate::verifier::ir::IrDefine {
                name: name.clone(),
                ty,
                body,
            });
            r.defines.insert(name, r.b.ir.defines.len() - 1);
        }
    }
    let n = r.b.ir.vars.len();
    r.keyword("INIT")?;
    let mut init: Vec<Option<Vec<i64>>> = vec![None; n];
    loop {
        let name = r.ident()?;
        let Some(&v) = r.vars.get(&name) else {
            return r.err(format!("unknown variable `{name}`"));
        };
        let ty = r.b.ir.vars[v].ty.clone();
        let vals = if r.at_ident("in") {
            r.pos += 1;
            r.punct("{")?;
            let mut vals = vec![r.value(&ty)?];
            while r.at_punct(",") {
                r.pos += 1;
                vals.push(r.value(&ty)?);
            }
            r.punct("}")?;
            vals
        } else {
            r.punct("=")?;
            vec![r.value(&ty)?]
        };
        if init[v].replace(vals).is_some() {
            return r.err(format!("`{name}` initialized twice"));
        }
        if r.at_punct(";") {
            r.pos += 1;
            break;
        }
        r.punct("&")?;
    }
    r.keyword("TRANS")?;
    let mut next: Vec<Option<IrExpr>> = vec![None; n];
    loop {
        r.keyword("next")?;
        r.punct("(")?;
        let name = r.ident()?;
        let Some(&v) = r.vars.get(&name) else {
            return r.err(format!("unknown variable `{name}`"));
        };
        r.punct(")")?;
        r.punct("=")?;
        let e = r.primary()?;
        if next[v].replace(e).is_some() {
            return r.err(format!("`{name}` has two next-state conjuncts"));
        }
        if r.at_punct(";") {
            r.pos += 1;
            break;
        }
        r.punct("&")?;
    }
    while let Some(Tok::Ident(s)) = r.peek().cloned() {
        if s == "LTLSPEC" || s == "INVARSPEC" {
            r.pos += 1;
            r.ltl()?;
        } else {
            return r.err(format!("unexpected `{s}`"));
        }
    }
    if r.pos < r.toks.len() {
        return r.err("trailing input");
    }
    let names: Vec<String> = r.b.ir.vars.iter().map(|v| v.name.clone()).collect();
    let mut ir = r.b.finish();
    for (i, x) in init.into_iter().enumerate() {
        ir.init[i] = x.ok_or(SmvError {
            line: 0,
            msg: format!("`{}` has no initial value", names[i]),
        })?;
    }
    ir.next = next
        .into_iter()
        .enumerate()
        .map(|(i, x)| {
            x.ok_or(SmvError {
                line: 0,
                msg: format!("`{}` has no next-state conjunct", names[i]),
            })
        })
        .collect::<Result<_, _>>()?;
    Ok(ir)
}

/// Re-import `text` and step it from its first initial state. Inputs are
/// resolved by `policy` in declaration order; the trace holds `steps + 1`
/// states with variables in `VAR` order.
pub fn smv_subset_simulate(
    text: &str,
    steps: usize,
    policy: &mut dyn Chooser,
) -> Result<Vec<Vec<i64>>, SmvError> {
    let ir = parse_smv(text)?;
    let Some(mut s) = ir.initial_states().into_iter().next() else {
        return Err(SmvError {
            line: 0,
            msg: "no initial state".into(),
        });
    };
    let site = crate::semantics::ChoiceSite {
        node: None,
        clause: 0,
        write: None,
    };
    let mut trace = vec![s.clone()];
    for k in 0..steps {
        policy.begin_step(k);
        let inputs: Vec<i64> = ir
            .inputs
            .iter()
            .map(|v| {
                let arity = (ir.bounds(&v.ty).1 + 1) as usize;
                policy.choose(&site, arity).unwrap_or(0).min(arity - 1) as i64
            })
            .collect();
        s = ir.step(&s, &inputs).map_err(|e| SmvError {
            line: 0,
            msg: e.to_string(),
        })?;
        trace.push(s.clone());
    }
    Ok(trace)
}

/// Deterministic simulation with every input at 0.
pub fn smv_simulate_first(text: &str, steps: usize) -> Result<Vec<Vec<i64>>, SmvError> {
    smv_subset_simulate(text, steps, &mut FirstChoice)
}

/// Positions of the original IR's variables within a re-imported IR.
pub fn var_permutation(names: &SmvNames, reimported: &Ir) -> Vec<usize> {
    names
        .vars
        .iter()
        .map(|n| reimported.var_index(n).expect("emitted variable"))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ltl::Ltl;

    fn one_bool() -> Ir {
        let mut b = IrBuilder::new();
        let v = b.add_var("flag", IrType::Bool, vec![0]);
        b.ir.next.push(IrExpr::Var(v));
        b.finish()
    }

    #[test]
    fn golden_identity() {
        let spec = SmvSpec {
            source: "G true".into(),
            kind: SmvSpecKind::Ltl(Ltl::globally(Ltl::True)),
        };
        let m = emit(&one_bool(), "golden", &[spec]);
        let expected = "-- golden\nMODULE main\nVAR\n  flag : boolean;\nINIT\n  flag = FALSE;\nTRANS\n  next(flag) = flag;\n-- spec: G true\nLTLSPEC G TRUE;\n";
        assert_eq!(m.text, expected);
        assert_eq!(smv_simulate_first(&m.text, 3).unwrap(), vec![vec![0]; 4]);
    }

    #[test]
    fn enumeration_is_a_symbolic_set() {
        let mut b = IrBuilder::new();
        let e = b.add_enum(vec!["red".into(), "green".into(), "case".into()]);
        let v = b.add_var("light", IrType::Enum(e), vec![0, 2]);
        b.ir.next.push(IrExpr::Var(v));
        let m = emit(&b.finish(), "t", &[]);
        assert!(
            m.text.contains("  light : {red, green, case_};\n"),
            "{}",
            m.text
        );
        assert!(m.text.contains("light in {red, case_}"));
        assert_eq!(
            parse_smv(&m.text).unwrap().enums,
            vec![vec!["red".to_string(), "green".into(), "case_".into()]]
        );
    }

    #[test]
    fn collisions_are_suffixed_with_a_warning() {
        let mut m = Mangler::default();
        assert_eq!(m.name("a.b"), "a_b");
        assert_eq!(m.name("a_b"), "a_b_2");
        assert_eq!(m.name("3x"), "_3x");
        assert_eq!(m.name("G"), "G_");
        assert_eq!(m.warnings.len(), 1);
    }

    #[test]
    fn corrupted_text_is_rejected() {
        let m = emit(&one_bool(), "t", &[]);
        for bad in [
            m.text.replace("next(flag) = flag;", "next(flag) = flag"),
            m.text.replace("flag : boolean;", "flag : bool;"),
            m.text.replace("next(flag) = flag", "next(flag) = other"),
            m.text.replace("MODULE main", "MODULE other"),
            m.text.replace("INIT\n  flag = FALSE;\n", ""),
            format!("{}garbage\n", m.text),
        ] {
            assert!(parse_smv(&bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn negated_groups_and_early_true_arms_reimport() {
        let text = "MODULE main\nVAR\n  v : -2..2;\nDEFINE\n  d := -((v - 1));\n  e := -(-2);\nINIT\n  v = 0;\nTRANS\n  next(v) = case TRUE : d; TRUE : e; esac;\n";
        let ir = parse_smv(text).unwrap();
        // the first arm always fires: 0 -> 1 -> 0
        assert_eq!(
            smv_simulate_first(text, 2).unwrap(),
            vec![vec![0], vec![1], vec![0]]
        );
        assert_eq!(ir.defines.len(), 2);
    }
}
