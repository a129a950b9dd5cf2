use std::collections::{HashMap, HashSet};

use crate::expr::{BinOp, Expr, Func, UnOp};
use crate::ltl;
use crate::model::{
    Assign, Branch, Clause, DecoratorMap, Diagnostic, Domain, Literal, Loc, NodeKind, Owner, Sbt,
    Status, TreeFile, TreeNode, VarDecl,
};
use crate::monitors::{
    Esm, EsmState, EsmTransition, LocalDecl, LtlMonitor, Monitor, NfaMonitor, NfaTransition,
    Verdict,
};
use crate::scenario::Scenario;

use super::lexer::{lex, Tok, Token};
use super::{ParseError, SourceMap, SpecFile, SpecItem, SpecKind, MAX_DEPTH};

type PResult<T> = Result<T, ParseError>;

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    depth: usize,
    map: SourceMap,
}

/// Tree structure before leaf references are resolved and composites named.
enum RawNode {
    Leaf(String, Loc),
    Inner {
        kind: NodeKind,
        memory: bool,
        name: Option<String>,
        children: Vec<RawNode>,
        loc: Loc,
    },
}

impl Parser {
    fn new(src: &str) -> PResult<Parser> {
        let toks = lex(src)?;
        let start = toks[0].loc;
        Ok(Parser {
            toks,
            pos: 0,
            depth: 0,
            map: SourceMap {
                start,
                ..SourceMap::default()
            },
        })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.pos + k).min(self.toks.len() - 1)].tok
    }

    fn loc(&self) -> Loc {
        self.toks[self.pos].loc
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn err(&self, expected: &str) -> ParseError {
        ParseError::new(self.loc(), expected, &self.peek().describe())
    }

    fn is_punct(&self, p: &str) -> bool {
        matches!(self.peek(), Tok::Punct(q) if *q == p)
    }

    fn eat_punct(&mut self, p: &str) -> bool {
        if self.is_punct(p) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect_punct(&mut self, p: &str) -> PResult<()> {
        if self.eat_punct(p) {
            Ok(())
        } else {
            Err(self.err(&format!("`{p}`")))
        }
    }

    fn is_kw(&self, w: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == w)
    }

    fn eat_kw(&mut self, w: &str) -> bool {
        if self.is_kw(w) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect_kw(&mut self, w: &str) -> PResult<()> {
        if self.eat_kw(w) {
            Ok(())
        } else {
            Err(self.err(&format!("`{w}`")))
        }
    }

    fn ident(&mut self, what: &str) -> PResult<(String, Loc)> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                let loc = self.bump().loc;
                Ok((s, loc))
            }
            _ => Err(self.err(what)),
        }
    }

    fn decl_ident(&mut self, what: &str) -> PResult<String> {
        let (s, loc) = self.ident(what)?;
        self.map.decls.entry(s.clone()).or_insert(loc);
        Ok(s)
    }

    fn use_ident(&mut self, what: &str) -> PResult<String> {
        let (s, loc) = self.ident(what)?;
        self.map.uses.entry(s.clone()).or_insert(loc);
        Ok(s)
    }

    fn opt_name(&mut self) -> PResult<Option<String>> {
        if matches!(self.peek(), Tok::Ident(_)) {
            Ok(Some(self.decl_ident("a name")?))
        } else {
            Ok(None)
        }
    }

    fn expect_eof(&mut self) -> PResult<()> {
        if *self.peek() == Tok::Eof {
            Ok(())
        } else {
            Err(self.err("end of input"))
        }
    }

    fn enter(&mut self) -> PResult<()> {
        self.depth += 1;
        if self.depth > MAX_DEPTH {
            Err(ParseError::new(
                self.loc(),
                &format!("nesting depth at most {MAX_DEPTH}"),
                "deeper nesting",
            ))
        } else {
            Ok(())
        }
    }

    fn leave(&mut self, n: usize) {
        self.depth -= n;
    }

    // ---- literals and domains ----

    fn int(&mut self) -> PResult<i64> {
        let neg = self.eat_punct("-");
        match *self.peek() {
            Tok::Int(v) => {
                let loc = self.bump().loc;
                signed(v, neg)
                    .ok_or_else(|| ParseError::new(loc, "a 64-bit integer", &v.to_string()))
            }
            _ => Err(self.err("an integer")),
        }
    }

    fn literal(&mut self) -> PResult<Literal> {
        match self.peek().clone() {
            Tok::Int(_) | Tok::Punct("-") => Ok(Literal::Int(self.int()?)),
            Tok::Ident(s) if s == "true" || s == "false" => {
                self.bump();
                Ok(Literal::Bool(s == "true"))
            }
            Tok::Ident(_) => Ok(Literal::Sym(self.use_ident("a literal")?)),
            _ => Err(self.err("a literal")),
        }
    }

    fn domain(&mut self) -> PResult<Domain> {
        if self.eat_kw("bool") {
            return Ok(Domain::Bool);
        }
        if self.eat_punct("{") {
            let mut syms = vec![self.decl_ident("an enumeration symbol")?];
            while self.eat_punct(",") {
                syms.push(self.decl_ident("an enumeration symbol")?);
            }
            self.expect_punct("}")?;
            return Ok(Domain::Enum(syms));
        }
        let lo = self.int()?;
        self.expect_punct("..")?;
        let hi = self.int()?;
        Ok(Domain::Range { lo, hi })
    }

    fn var_decl(&mut self, owner: Owner) -> PResult<VarDecl> {
        let name = self.decl_ident("a variable name")?;
        self.expect_punct(":")?;
        let domain = self.domain()?;
        self.expect_punct("=")?;
        let initial = if self.eat_punct("{") {
            let mut v = vec![self.literal()?];
            while self.eat_punct(",") {
                v.push(self.literal()?);
            }
            self.expect_punct("}")?;
            v
        } else {
            vec![self.literal()?]
        };
        self.expect_punct(";")?;
        Ok(VarDecl {
            name,
            domain,
            initial,
            owner,
        })
    }

    fn status(&mut self) -> PResult<Status> {
        if let Tok::Ident(s) = self.peek() {
            if let Some(st) = Status::parse(s) {
                self.bump();
                return Ok(st);
            }
        }
        Err(self.err("a status (S, F, R, I or success, failure, running, invalid)"))
    }

    // ---- expressions ----

    fn expr(&mut self) -> PResult<Expr> {
        self.enter()?;
        let e = self.implies();
        self.leave(1);
        e
    }

    fn implies(&mut self) -> PResult<Expr> {
        let a = self.or()?;
        if self.eat_punct("->") {
            self.enter()?;
            let b = self.implies();
            self.leave(1);
            return Ok(Expr::bin(BinOp::Implies, a, b?));
        }
        Ok(a)
    }

    fn left_chain(
        &mut self,
        next: fn(&mut Parser) -> PResult<Expr>,
        ops: &[(&str, BinOp)],
    ) -> PResult<Expr> {
        let mut a = next(self)?;
        let mut entered = 0;
        let res = loop {
            let Some(op) = ops.iter().find(|(p, _)| self.is_punct(p)).map(|x| x.1) else {
                break Ok(a);
            };
            self.bump();
            entered += 1;
            if let Err(e) = self.enter() {
                break Err(e);
            }
            match next(self) {
                Ok(b) => a = Expr::bin(op, a, b),
                Err(e) => break Err(e),
            }
        };
        self.leave(entered);
        res
    }

    fn or(&mut self) -> PResult<Expr> {
        self.left_chain(Parser::and, &[("|", BinOp::Or)])
    }

    fn and(&mut self) -> PResult<Expr> {
        self.left_chain(Parser::until, &[("&", BinOp::And)])
    }

    fn until(&mut self) -> PResult<Expr> {
        let a = self.tunary()?;
        let op = if self.is_kw("U") {
            BinOp::Until
        } else if self.is_kw("M") {
            BinOp::StrongRelease
        } else {
            return Ok(a);
        };
        self.bump();
        self.enter()?;
        let b = self.until();
        self.leave(1);
        Ok(Expr::bin(op, a, b?))
    }

    fn tunary(&mut self) -> PResult<Expr> {
        let op = if self.is_punct("!") {
            UnOp::Not
        } else if self.is_kw("G") {
            UnOp::Globally
        } else if self.is_kw("F") {
            UnOp::Finally
        } else if self.is_kw("X") {
            UnOp::Next
        } else {
            return self.cmp();
        };
        self.bump();
        self.enter()?;
        let a = self.tunary();
        self.leave(1);
        Ok(Expr::Unary(op, Box::new(a?)))
    }

    fn cmp(&mut self) -> PResult<Expr> {
        let a = self.add()?;
        const OPS: [(&str, BinOp); 6] = [
            ("==", BinOp::Eq),
            ("!=", BinOp::Ne),
            ("<=", BinOp::Le),
            (">=", BinOp::Ge),
            ("<", BinOp::Lt),
            (">", BinOp::Gt),
        ];
        if let Some((_, op)) = OPS.iter().find(|(p, _)| self.is_punct(p)) {
            self.bump();
            let b = self.add()?;
            return Ok(Expr::bin(*op, a, b));
        }
        Ok(a)
    }

    fn add(&mut self) -> PResult<Expr> {
        self.left_chain(Parser::mul, &[("+", BinOp::Add), ("-", BinOp::Sub)])
    }

    fn mul(&mut self) -> PResult<Expr> {
        self.left_chain(
            Parser::neg,
            &[("*", BinOp::Mul), ("/", BinOp::Div), ("%", BinOp::Mod)],
        )
    }

    fn neg(&mut self) -> PResult<Expr> {
        if !self.is_punct("-") {
            return self.primary();
        }
        if let Tok::Int(v) = *self.peek_at(1) {
            let loc = self.loc();
            self.bump();
            self.bump();
            return signed(v, true)
                .map(Expr::Int)
                .ok_or_else(|| ParseError::new(loc, "a 64-bit integer", "overflow"));
        }
        self.bump();
        self.enter()?;
        let a = self.neg();
        self.leave(1);
        Ok(Expr::Unary(UnOp::Neg, Box::new(a?)))
    }

    fn args(&mut self) -> PResult<Vec<Expr>> {
        self.expect_punct("(")?;
        let mut v = vec![self.expr()?];
        while self.eat_punct(",") {
            v.push(self.expr()?);
        }
        self.expect_punct(")")?;
        Ok(v)
    }

    fn primary(&mut self) -> PResult<Expr> {
        match self.peek().clone() {
            Tok::Int(v) => {
                let loc = self.bump().loc;
                signed(v, false)
                    .map(Expr::Int)
                    .ok_or_else(|| ParseError::new(loc, "a 64-bit integer", "overflow"))
            }
            Tok::Punct("(") => {
                self.bump();
                let e = self.expr()?;
                self.expect_punct(")")?;
                Ok(e)
            }
            Tok::Ident(s) => {
                let call = *self.peek_at(1) == Tok::Punct("(");
                match s.as_str() {
                    "true" | "false" => {
                        self.bump();
                        Ok(Expr::Bool(s == "true"))
                    }
                    "abs" | "min" | "max" if call => {
                        let f = match s.as_str() {
                            "abs" => Func::Abs,
                            "min" => Func::Min,
                            _ => Func::Max,
                        };
                        self.bump();
                        Ok(Expr::Call(f, self.args()?))
                    }
                    "choice" if call => {
                        self.bump();
                        Ok(Expr::Choice(self.args()?))
                    }
                    "status" if call => {
                        self.bump();
                        self.expect_punct("(")?;
                        let node = self.use_ident("a node name")?;
                        self.expect_punct(")")?;
                        let negate = if self.eat_punct("!=") {
                            true
                        } else {
                            self.expect_punct("==")?;
                            false
                        };
                        let st = self.status()?;
                        let e = Expr::StatusIs(node, st);
                        Ok(if negate { Expr::not(e) } else { e })
                    }
                    _ => Ok(Expr::Ident(self.use_ident("an identifier")?)),
                }
            }
            _ => Err(self.err("an expression")),
        }
    }

    // ---- trees ----

    fn assign(&mut self) -> PResult<Assign> {
        let target = self.use_ident("a variable")?;
        self.expect_punct(":=")?;
        Ok(Assign {
            target,
            value: self.expr()?,
        })
    }

    fn assigns(&mut self) -> PResult<Vec<Assign>> {
        let mut v = vec![self.assign()?];
        while self.eat_punct(",") {
            v.push(self.assign()?);
        }
        Ok(v)
    }

    fn clause(&mut self, update: bool) -> PResult<Clause> {
        self.expect_kw("when")?;
        let guard = self.expr()?;
        self.expect_kw("do")?;
        let mut branches = Vec::new();
        loop {
            let b = if update {
                let writes = if self.eat_kw("skip") {
                    vec![]
                } else {
                    self.assigns()?
                };
                Branch {
                    writes,
                    status: Status::Success,
                }
            } else {
                let writes = if self.is_kw("return") {
                    vec![]
                } else {
                    self.assigns()?
                };
                self.expect_kw("return")?;
                Branch {
                    writes,
                    status: self.status()?,
                }
            };
            branches.push(b);
            if !self.eat_kw("or") {
                break;
            }
        }
        self.expect_punct(";")?;
        Ok(Clause { guard, branches })
    }

    fn clause_block(&mut self, update: bool) -> PResult<Vec<Clause>> {
        self.expect_punct("{")?;
        let mut v = Vec::new();
        while !self.eat_punct("}") {
            v.push(self.clause(update)?);
        }
        Ok(v)
    }

    fn node(&mut self) -> PResult<RawNode> {
        self.enter()?;
        let n = self.node_inner();
        self.leave(1);
        n
    }

    fn node_inner(&mut self) -> PResult<RawNode> {
        let loc = self.loc();
        let Tok::Ident(kw) = self.peek().clone() else {
            return Err(self.err("a node"));
        };
        let named_then = |p: &Parser, open: &'static str| {
            *p.peek_at(1) == Tok::Punct(open)
                || (matches!(p.peek_at(1), Tok::Ident(_)) && *p.peek_at(2) == Tok::Punct(open))
        };
        let composite = match kw.as_str() {
            "sel" => Some(NodeKind::Selector),
            "seq" => Some(NodeKind::Sequence),
            "par_one" => Some(NodeKind::ParallelOne),
            "par_all" => Some(NodeKind::ParallelAll),
            _ => None,
        };
        if let Some(kind) = composite {
            if named_then(self, "(") || *self.peek_at(1) == Tok::Punct("*") {
                self.bump();
                let memory = self.eat_punct("*");
                let name = self.opt_name()?;
                let children = self.children()?;
                return Ok(RawNode::Inner {
                    kind,
                    memory,
                    name,
                    children,
                    loc,
                });
            }
        }
        let fixed = match kw.as_str() {
            "inv" => Some(DecoratorMap::INVERTER),
            "success_is_running" => Some(DecoratorMap::success_is_running()),
            _ => None,
        };
        if let Some(map) = fixed {
            if named_then(self, "(") {
                self.bump();
                let name = self.opt_name()?;
                let children = self.children()?;
                return Ok(RawNode::Inner {
                    kind: NodeKind::Decorator(map),
                    memory: false,
                    name,
                    children,
                    loc,
                });
            }
        }
        if kw == "remap" && named_then(self, "[") {
            self.bump();
            let name = self.opt_name()?;
            self.expect_punct("[")?;
            let mut map = DecoratorMap::IDENTITY;
            if !self.is_punct("]") {
                loop {
                    let from = self.status()?;
                    self.expect_punct("->")?;
                    let to = self.status()?;
                    map.set(from, to);
                    if !self.eat_punct(",") {
                        break;
                    }
                }
            }
            self.expect_punct("]")?;
            let children = self.children()?;
            return Ok(RawNode::Inner {
                kind: NodeKind::Decorator(map),
                memory: false,
                name,
                children,
                loc,
            });
        }
        let name = self.use_ident("a node")?;
        Ok(RawNode::Leaf(name, loc))
    }

    fn children(&mut self) -> PResult<Vec<RawNode>> {
        self.expect_punct("(")?;
        let mut v = Vec::new();
        if self.eat_punct(")") {
            return Ok(v);
        }
        loop {
            v.push(self.node()?);
            if !self.eat_punct(",") {
                break;
            }
        }
        self.expect_punct(")")?;
        Ok(v)
    }
}

fn signed(v: u64, neg: bool) -> Option<i64> {
    if neg {
        if v == 1u64 << 63 {
            Some(i64::MIN)
        } else {
            i64::try_from(v).ok().map(|x| -x)
        }
    } else {
        i64::try_from(v).ok()
    }
}

fn decorator_keyword(map: &DecoratorMap) -> &'static str {
    if *map == DecoratorMap::INVERTER {
        "inv"
    } else {
        "remap"
    }
}

fn raw_names(n: &RawNode, out: &mut HashSet<String>) {
    if let RawNode::Inner { name, children, .. } = n {
        if let Some(s) = name {
            out.insert(s.clone());
        }
        children.iter().for_each(|c| raw_names(c, out));
    }
}

struct Builder<'a> {
    leaves: &'a HashMap<String, TreeNode>,
    taken: HashSet<String>,
    counters: HashMap<&'static str, usize>,
    used: HashSet<String>,
    locs: Vec<(String, Loc)>,
    diags: Vec<Diagnostic>,
}

impl Builder<'_> {
    fn fresh(&mut self, kw: &'static str) -> String {
        loop {
            let c = self.counters.entry(kw).or_insert(0);
            *c += 1;
            let name = format!("{kw}_{c}");
            if self.taken.insert(name.clone()) {
                return name;
            }
        }
    }

    fn build(&mut self, n: RawNode) -> TreeNode {
        match n {
            RawNode::Leaf(name, loc) => {
                self.used.insert(name.clone());
                match self.leaves.get(&name) {
                    Some(leaf) => leaf.clone(),
                    None => {
                        let mut d = Diagnostic::error(
                            "unknown leaf",
                            &name,
                            "leaf is referenced but not defined",
                        );
                        d.loc = Some(loc);
                        self.diags.push(d);
                        // placeholder keeps the structure; the error blocks further use
                        TreeNode::check(name, vec![])
                    }
                }
            }
            RawNode::Inner {
                kind,
                memory,
                name,
                children,
                loc,
            } => {
                let kw = match &kind {
                    NodeKind::Decorator(m) => decorator_keyword(m),
                    k => k.keyword(),
                };
                let name = match name {
                    Some(s) => s,
                    None => self.fresh(kw),
                };
                self.locs.push((name.clone(), loc));
                let children = children.into_iter().map(|c| self.build(c)).collect();
                TreeNode {
                    name,
                    kind,
                    memory,
                    children,
                }
            }
        }
    }
}

pub(super) fn tree_file(src: &str) -> PResult<(TreeFile, SourceMap, Vec<Diagnostic>)> {
    let mut p = Parser::new(src)?;
    p.expect_kw("tree")?;
    let name = p.opt_name()?;
    p.expect_punct("{")?;
    let mut blackboard = Vec::new();
    let mut environment = Vec::new();
    let mut env_update = Vec::new();
    let mut leaves: HashMap<String, TreeNode> = HashMap::new();
    let mut leaf_order: Vec<String> = Vec::new();
    let mut diags = Vec::new();
    let mut root: Option<RawNode> = None;
    let mut contingency: Option<RawNode> = None;
    while !p.eat_punct("}") {
        let item_loc = p.loc();
        let (kw, _) = p.ident("a tree item")?;
        match kw.as_str() {
            "blackboard" | "environment" => {
                let owner = if kw == "blackboard" {
                    Owner::Blackboard
                } else {
                    Owner::Environment
                };
                p.expect_punct("{")?;
                while !p.eat_punct("}") {
                    let d = p.var_decl(owner)?;
                    if owner == Owner::Blackboard {
                        blackboard.push(d);
                    } else {
                        environment.push(d);
                    }
                }
            }
            "update" => env_update.extend(p.clause_block(true)?),
            "action" | "check" => {
                let name = p.decl_ident("a leaf name")?;
                let clauses = if kw == "check" && p.eat_punct("=") {
                    let e = p.expr()?;
                    p.expect_punct(";")?;
                    vec![
                        Clause {
                            guard: e,
                            branches: vec![Branch {
                                writes: vec![],
                                status: Status::Success,
                            }],
                        },
                        Clause {
                            guard: Expr::Bool(true),
                            branches: vec![Branch {
                                writes: vec![],
                                status: Status::Failure,
                            }],
                        },
                    ]
                } else {
                    p.clause_block(false)?
                };
                let node = if kw == "action" {
                    TreeNode::action(&name, clauses)
                } else {
                    TreeNode::check(&name, clauses)
                };
                if leaves.insert(name.clone(), node).is_some() {
                    let mut d =
                        Diagnostic::error("duplicate name", &name, "leaf defined more than once");
                    d.loc = Some(item_loc);
                    diags.push(d);
                } else {
                    leaf_order.push(name);
                }
            }
            "root" | "contingency" => {
                p.expect_punct("=")?;
                let n = p.node()?;
                p.expect_punct(";")?;
                let slot = if kw == "root" {
                    &mut root
                } else {
                    &mut contingency
                };
                if slot.is_some() {
                    return Err(ParseError::new(
                        item_loc,
                        &format!("a single `{kw}`"),
                        "a second definition",
                    ));
                }
                *slot = Some(n);
            }
            other => return Err(ParseError::new(
                item_loc,
                "`blackboard`, `environment`, `update`, `action`, `check`, `root` or `contingency`",
                &format!("`{other}`"),
            )),
        }
    }
    p.expect_eof()?;
    let Some(root) = root else {
        return Err(ParseError::new(
            p.loc(),
            "a `root = ...;` definition",
            "end of tree",
        ));
    };
    let mut taken: HashSet<String> = leaves.keys().cloned().collect();
    raw_names(&root, &mut taken);
    if let Some(c) = &contingency {
        raw_names(c, &mut taken);
    }
    let mut b = Builder {
        leaves: &leaves,
        taken,
        counters: HashMap::new(),
        used: HashSet::new(),
        locs: vec![],
        diags: vec![],
    };
    let root = b.build(root);
    let contingency = contingency.map(|c| b.build(c));
    diags.extend(b.diags);
    for (n, l) in b.locs {
        p.map.decls.entry(n).or_insert(l);
    }
    for l in &leaf_order {
        if !b.used.contains(l) {
            diags.push(Diagnostic::warning(
                "unused leaf",
                l,
                "leaf is defined but never referenced",
            ));
        }
    }
    let file = TreeFile {
        sbt: Sbt {
            name,
            root,
            blackboard,
            environment,
            env_update,
        },
        contingency,
    };
    Ok((file, p.map, diags))
}

impl Parser {
    fn esm_body(&mut self, name: Option<String>) -> PResult<Esm> {
        let mut m = Esm {
            name,
            locals: vec![],
            states: vec![],
            initial: vec![],
            transitions: vec![],
        };
        while !self.eat_punct("}") {
            let (kw, loc) = self.ident("`var`, `state`, `initial` or `transition`")?;
            match kw.as_str() {
                "var" => {
                    let name = self.decl_ident("a local name")?;
                    self.expect_punct(":")?;
                    let domain = self.domain()?;
                    self.expect_punct("=")?;
                    let initial = self.literal()?;
                    m.locals.push(LocalDecl {
                        name,
                        domain,
                        initial,
                    });
                }
                "state" => {
                    let name = self.decl_ident("a state name")?;
                    let verdict = if self.eat_kw("contingency") {
                        Verdict::Contingency
                    } else {
                        self.eat_kw("nominal");
                        Verdict::Nominal
                    };
                    m.states.push(EsmState { name, verdict });
                }
                "initial" => {
                    m.initial.push(self.use_ident("a state name")?);
                    while self.eat_punct(",") {
                        m.initial.push(self.use_ident("a state name")?);
                    }
                }
                "transition" => {
                    let from = self.use_ident("a state name")?;
                    self.expect_punct("->")?;
                    let to = self.use_ident("a state name")?;
                    let guard = if self.eat_kw("when") {
                        self.expr()?
                    } else {
                        Expr::Bool(true)
                    };
                    let updates = if self.eat_kw("do") {
                        self.assigns()?
                    } else {
                        vec![]
                    };
                    m.transitions.push(EsmTransition {
                        from,
                        to,
                        guard,
                        updates,
                    });
                }
                other => {
                    return Err(ParseError::new(
                        loc,
                        "`var`, `state`, `initial` or `transition`",
                        other,
                    ))
                }
            }
            self.expect_punct(";")?;
        }
        Ok(m)
    }

    fn nfa_body(&mut self, name: Option<String>) -> PResult<NfaMonitor> {
        let mut m = NfaMonitor {
            name,
            symbols: vec![],
            states: vec![],
            initial: String::new(),
            accepting: vec![],
            transitions: vec![],
        };
        let mut has_initial = false;
        while !self.eat_punct("}") {
            let what = "`symbol`, `state`, `initial`, `accepting` or `transition`";
            let (kw, loc) = self.ident(what)?;
            match kw.as_str() {
                "symbol" => {
                    let name = self.decl_ident("a symbol name")?;
                    self.expect_punct("=")?;
                    m.symbols.push((name, self.expr()?));
                }
                "state" => {
                    m.states.push(self.decl_ident("a state name")?);
                    while self.eat_punct(",") {
                        m.states.push(self.decl_ident("a state name")?);
                    }
                }
                "initial" => {
                    if has_initial {
                        return Err(ParseError::new(loc, "a single `initial`", "a second one"));
                    }
                    has_initial = true;
                    m.initial = self.use_ident("a state name")?;
                }
                "accepting" => {
                    m.accepting.push(self.use_ident("a state name")?);
                    while self.eat_punct(",") {
                        m.accepting.push(self.use_ident("a state name")?);
                    }
                }
                "transition" => {
                    let from = self.use_ident("a state name")?;
                    self.expect_punct("->")?;
                    let to = self.use_ident("a state name")?;
                    self.expect_kw("on")?;
                    let symbol = self.use_ident("a symbol name")?;
                    m.transitions.push(NfaTransition { from, symbol, to });
                }
                other => return Err(ParseError::new(loc, what, other)),
            }
            self.expect_punct(";")?;
        }
        if !has_initial {
            return Err(ParseError::new(self.loc(), "an `initial` state", "none"));
        }
        Ok(m)
    }

    fn formula_block(&mut self) -> PResult<Expr> {
        self.expect_punct("{")?;
        let e = self.expr()?;
        self.expect_punct("}")?;
        Ok(e)
    }

    fn spec_items(&mut self) -> PResult<SpecFile> {
        let mut f = SpecFile::default();
        while *self.peek() != Tok::Eof {
            let loc = self.loc();
            let (kw, _) = self.ident("`ltl` or `invariant`")?;
            let name = self.opt_name()?;
            let e = self.formula_block()?;
            let kind = match kw.as_str() {
                "ltl" => SpecKind::Ltl(
                    ltl::from_expr(&e).map_err(|m| ParseError::new(loc, "a formula", &m))?,
                ),
                "invariant" => {
                    if e.is_temporal() {
                        return Err(ParseError::new(
                            loc,
                            "a state predicate",
                            "a temporal operator",
                        ));
                    }
                    SpecKind::Invariant(e)
                }
                other => return Err(ParseError::new(loc, "`ltl` or `invariant`", other)),
            };
            f.items.push(SpecItem { name, kind });
        }
        Ok(f)
    }
}

pub(super) fn monitor_file(src: &str) -> PResult<(Monitor, SourceMap)> {
    let mut p = Parser::new(src)?;
    let m = if p.is_kw("esm") || p.is_kw("nfa") {
        let nfa = p.is_kw("nfa");
        p.bump();
        let name = p.opt_name()?;
        p.expect_punct("{")?;
        let m = if nfa {
            Monitor::Nfa(p.nfa_body(name)?)
        } else {
            Monitor::Esm(p.esm_body(name)?)
        };
        p.expect_eof()?;
        m
    } else {
        let loc = p.loc();
        let spec = p.spec_items()?;
        let first = spec.items.into_iter().find_map(|i| match i.kind {
            SpecKind::Ltl(f) => Some(LtlMonitor {
                name: i.name,
                formula: f,
            }),
            SpecKind::Invariant(_) => None,
        });
        Monitor::Ltl(
            first
                .ok_or_else(|| ParseError::new(loc, "`esm`, `nfa` or `ltl`", "no monitor block"))?,
        )
    };
    Ok((m, p.map))
}

pub(super) fn spec_file(src: &str) -> PResult<SpecFile> {
    let mut p = Parser::new(src)?;
    p.spec_items()
}

pub(super) fn scenario_file(src: &str) -> PResult<Scenario> {
    let mut p = Parser::new(src)?;
    p.expect_kw("scenario")?;
    let name = p.opt_name()?;
    p.expect_punct("{")?;
    let mut s = Scenario {
        name,
        init: vec![],
        at: vec![],
    };
    while !p.eat_punct("}") {
        let (kw, loc) = p.ident("`init` or `at`")?;
        let step = match kw.as_str() {
            "init" => None,
            "at" => match *p.peek() {
                Tok::Int(k) if k <= u32::MAX as u64 => {
                    p.bump();
                    Some(k as u32)
                }
                _ => return Err(p.err("a step number")),
            },
            other => return Err(ParseError::new(loc, "`init` or `at`", other)),
        };
        p.expect_punct("{")?;
        let mut writes = Vec::new();
        while !p.eat_punct("}") {
            let v = p.use_ident("a variable")?;
            p.expect_punct(":=")?;
            writes.push((v, p.literal()?));
            p.expect_punct(";")?;
        }
        match step {
            None => s.init.extend(writes),
            Some(k) => s.at.push((k, writes)),
        }
    }
    p.expect_eof()?;
    Ok(s)
}

pub(super) fn expr_only(src: &str) -> PResult<Expr> {
    let mut p = Parser::new(src)?;
    let e = p.expr()?;
    p.expect_eof()?;
    Ok(e)
}
