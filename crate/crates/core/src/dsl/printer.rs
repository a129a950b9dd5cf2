use std::fmt::Write;

use crate::expr::{BinOp, Expr, UnOp};
use crate::ltl::{to_expr, Formula};
use crate::model::{
    Branch, Clause, DecoratorMap, Domain, Literal, NodeKind, TreeFile, TreeNode, VarDecl,
};
use crate::monitors::{Monitor, Verdict};
use crate::scenario::Scenario;

use super::{SpecFile, SpecKind};

const P_IMPLIES: u8 = 1;
const P_OR: u8 = 2;
const P_AND: u8 = 3;
const P_UNTIL: u8 = 4;
const P_UNARY: u8 = 5;
const P_CMP: u8 = 6;
const P_ADD: u8 = 7;
const P_MUL: u8 = 8;
const P_NEG: u8 = 9;
const P_ATOM: u8 = 10;

fn prec(e: &Expr) -> u8 {
    match e {
        Expr::Binary(op, _, _) => match op {
            BinOp::Implies => P_IMPLIES,
            BinOp::Or => P_OR,
            BinOp::And => P_AND,
            BinOp::Until | BinOp::StrongRelease => P_UNTIL,
            BinOp::Add | BinOp::Sub => P_ADD,
            BinOp::Mul | BinOp::Div | BinOp::Mod => P_MUL,
            _ => P_CMP,
        },
        Expr::Unary(UnOp::Neg, _) => P_NEG,
        Expr::Unary(..) => P_UNARY,
        Expr::StatusIs(..) => P_CMP,
        Expr::Int(i) if *i < 0 => P_NEG,
        _ => P_ATOM,
    }
}

fn write_expr(e: &Expr, ctx: u8, out: &mut String) {
    let p = prec(e);
    let paren = p < ctx;
    if paren {
        out.push('(');
    }
    match e {
        Expr::Int(i) => write!(out, "{i}").unwrap(),
        Expr::Bool(b) => write!(out, "{b}").unwrap(),
        Expr::Ident(s) => out.push_str(s),
        Expr::StatusIs(n, s) => write!(out, "status({n}) == {}", s.letter()).unwrap(),
        Expr::Unary(op, a) => {
            let (sym, inner) = match op {
                UnOp::Not => ("!", P_UNARY),
                UnOp::Neg => ("-", P_NEG),
                UnOp::Next => ("X ", P_UNARY),
                UnOp::Globally => ("G ", P_UNARY),
                UnOp::Finally => ("F ", P_UNARY),
            };
            out.push_str(sym);
            // `-5` would read back as a literal, and `--x` is fine but `- -5` is not `-(5)`
            let force = *op == UnOp::Neg && matches!(**a, Expr::Int(_));
            write_expr(a, if force { P_ATOM + 1 } else { inner }, out);
        }
        Expr::Binary(op, a, b) => {
            let (l, r) = match p {
                P_IMPLIES | P_UNTIL => (p + 1, p),
                P_CMP => (p + 1, p + 1),
                _ => (p, p + 1),
            };
            write_expr(a, l, out);
            write!(out, " {} ", op.symbol()).unwrap();
            write_expr(b, r, out);
        }
        Expr::Call(f, args) => {
            out.push_str(f.name());
            write_args(args, out);
        }
        Expr::Choice(args) => {
            out.push_str("choice");
            write_args(args, out);
        }
    }
    if paren {
        out.push(')');
    }
}

fn write_args(args: &[Expr], out: &mut String) {
    out.push('(');
    for (i, a) in args.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        write_expr(a, 0, out);
    }
    out.push(')');
}

/// Minimal-parenthesis rendering that parses back to the same tree.
pub fn print_expr(e: &Expr) -> String {
    let mut s = String::new();
    write_expr(e, 0, &mut s);
    s
}

pub fn print_formula(f: &Formula) -> String {
    print_expr(&to_expr(f))
}

fn domain(d: &Domain) -> String {
    match d {
        Domain::Bool => "bool".into(),
        Domain::Range { lo, hi } => format!("{lo}..{hi}"),
        Domain::Enum(s) => format!("{{{}}}", s.join(", ")),
    }
}

fn decl(d: &VarDecl) -> String {
    let init = if d.initial.len() == 1 {
        d.initial[0].to_string()
    } else {
        format!(
            "{{{}}}",
            d.initial
                .iter()
                .map(Literal::to_string)
                .collect::<Vec<_>>()
                .join(", ")
        )
    };
    format!("{} : {} = {init};", d.name, domain(&d.domain))
}

fn writes(b: &Branch) -> String {
    b.writes
        .iter()
        .map(|w| format!("{} := {}", w.target, print_expr(&w.value)))
        .collect::<Vec<_>>()
        .join(", ")
}

fn clause(c: &Clause, update: bool) -> String {
    let branches: Vec<String> = c
        .branches
        .iter()
        .map(|b| match (update, b.writes.is_empty()) {
            (true, true) => "skip".to_string(),
            (true, false) => writes(b),
            (false, true) => format!("return {}", b.status.word()),
            (false, false) => format!("{} return {}", writes(b), b.status.word()),
        })
        .collect();
    format!(
        "when {} do {};",
        print_expr(&c.guard),
        branches.join(" or ")
    )
}

fn node(n: &TreeNode, out: &mut String) {
    match &n.kind {
        NodeKind::Action(_) | NodeKind::Check(_) => out.push_str(&n.name),
        NodeKind::Decorator(map) => {
            if *map == DecoratorMap::INVERTER {
                write!(out, "inv {} ", n.name).unwrap();
            } else {
                let pairs: Vec<String> = map
                    .changes()
                    .iter()
                    .map(|(a, b)| format!("{} -> {}", a.letter(), b.letter()))
                    .collect();
                write!(out, "remap {} [{}] ", n.name, pairs.join(", ")).unwrap();
            }
            children(&n.children, out);
        }
        k => {
            write!(
                out,
                "{}{} {} ",
                k.keyword(),
                if n.memory { "*" } else { "" },
                n.name
            )
            .unwrap();
            children(&n.children, out);
        }
    }
}

fn children(cs: &[TreeNode], out: &mut String) {
    out.push('(');
    for (i, c) in cs.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        node(c, out);
    }
    out.push(')');
}

/// Canonical text of a tree file; `parse_tree(print_tree(f))` yields `f`.
pub fn print_tree(f: &TreeFile) -> String {
    let sbt = &f.sbt;
    let mut out = String::new();
    match &sbt.name {
        Some(n) => writeln!(out, "tree {n} {{").unwrap(),
        None => out.push_str("tree {\n"),
    }
    for (kw, decls) in [
        ("blackboard", &sbt.blackboard),
        ("environment", &sbt.environment),
    ] {
        if !decls.is_empty() {
            writeln!(out, "  {kw} {{").unwrap();
            for d in decls {
                writeln!(out, "    {}", decl(d)).unwrap();
            }
            out.push_str("  }\n");
        }
    }
    if !sbt.env_update.is_empty() {
        out.push_str("  update {\n");
        for c in &sbt.env_update {
            writeln!(out, "    {}", clause(c, true)).unwrap();
        }
        out.push_str("  }\n");
    }
    let mut leaves: Vec<&TreeNode> = sbt.root.preorder();
    if let Some(c) = &f.contingency {
        leaves.extend(c.preorder());
    }
    for l in leaves {
        let kw = match &l.kind {
            NodeKind::Action(_) => "action",
            NodeKind::Check(_) => "check",
            _ => continue,
        };
        writeln!(out, "  {kw} {} {{", l.name).unwrap();
        for c in l.kind.clauses().unwrap() {
            writeln!(out, "    {}", clause(c, false)).unwrap();
        }
        out.push_str("  }\n");
    }
    let mut root = String::new();
    node(&sbt.root, &mut root);
    writeln!(out, "  root = {root};").unwrap();
    if let Some(c) = &f.contingency {
        let mut s = String::new();
        node(c, &mut s);
        writeln!(out, "  contingency = {s};").unwrap();
    }
    out.push_str("}\n");
    out
}

fn header(kw: &str, name: &Option<String>) -> String {
    match name {
        Some(n) => format!("{kw} {n} {{"),
        None => format!("{kw} {{"),
    }
}

pub fn print_monitor(m: &Monitor) -> String {
    let mut out = String::new();
    match m {
        Monitor::Esm(e) => {
            writeln!(out, "{}", header("esm", &e.name)).unwrap();
            for l in &e.locals {
                writeln!(
                    out,
                    "  var {} : {} = {};",
                    l.name,
                    domain(&l.domain),
                    l.initial
                )
                .unwrap();
            }
            for s in &e.states {
                let v = match s.verdict {
                    Verdict::Nominal => "nominal",
                    Verdict::Contingency => "contingency",
                };
                writeln!(out, "  state {} {v};", s.name).unwrap();
            }
            for i in &e.initial {
                writeln!(out, "  initial {i};").unwrap();
            }
            for t in &e.transitions {
                write!(
                    out,
                    "  transition {} -> {} when {}",
                    t.from,
                    t.to,
                    print_expr(&t.guard)
                )
                .unwrap();
                if !t.updates.is_empty() {
                    let u: Vec<String> = t
                        .updates
                        .iter()
                        .map(|a| format!("{} := {}", a.target, print_expr(&a.value)))
                        .collect();
                    write!(out, " do {}", u.join(", ")).unwrap();
                }
                out.push_str(";\n");
            }
        }
        Monitor::Nfa(n) => {
            writeln!(out, "{}", header("nfa", &n.name)).unwrap();
            for (s, e) in &n.symbols {
                writeln!(out, "  symbol {s} = {};", print_expr(e)).unwrap();
            }
            for s in &n.states {
                writeln!(out, "  state {s};").unwrap();
            }
            writeln!(out, "  initial {};", n.initial).unwrap();
            for a in &n.accepting {
                writeln!(out, "  accepting {a};").unwrap();
            }
            for t in &n.transitions {
                writeln!(out, "  transition {} -> {} on {};", t.from, t.to, t.symbol).unwrap();
            }
        }
        Monitor::Ltl(l) => {
            writeln!(out, "{}", header("ltl", &l.name)).unwrap();
            writeln!(out, "  {}", print_formula(&l.formula)).unwrap();
        }
    }
    out.push_str("}\n");
    out
}

pub fn print_spec(f: &SpecFile) -> String {
    let mut out = String::new();
    for item in &f.items {
        let (kw, body) = match &item.kind {
            SpecKind::Ltl(f) => ("ltl", print_formula(f)),
            SpecKind::Invariant(e) => ("invariant", print_expr(e)),
        };
        writeln!(out, "{}\n  {body}\n}}", header(kw, &item.name)).unwrap();
    }
    out
}

pub fn print_scenario(s: &Scenario) -> String {
    let mut out = format!("{}\n", header("scenario", &s.name));
    let block = |out: &mut String, head: String, w: &[(String, Literal)]| {
        writeln!(out, "  {head} {{").unwrap();
        for (n, l) in w {
            writeln!(out, "    {n} := {l};").unwrap();
        }
        out.push_str("  }\n");
    };
    if !s.init.is_empty() {
        block(&mut out, "init".into(), &s.init);
    }
    for (k, w) in &s.at {
        block(&mut out, format!("at {k}"), w);
    }
    out.push_str("}\n");
    out
}
