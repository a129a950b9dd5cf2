//! Domain types for synchronous behavior trees and their well-formedness rules.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::expr::{self, Expr, Resolver, Slot, Type};

/// Result of ticking a node.
///
/// `Invalid` is reserved for nodes that were not visited in the current tick.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Status {
    Invalid,
    Failure,
    Running,
    Success,
}

impl Status {
    pub const ALL: [Status; 4] = [
        Status::Invalid,
        Status::Failure,
        Status::Running,
        Status::Success,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Status> {
        Status::ALL.get(i).copied()
    }

    pub fn letter(self) -> &'static str {
        match self {
            Status::Invalid => "I",
            Status::Failure => "F",
            Status::Running => "R",
            Status::Success => "S",
        }
    }

    pub fn word(self) -> &'static str {
        match self {
            Status::Invalid => "invalid",
            Status::Failure => "failure",
            Status::Running => "running",
            Status::Success => "success",
        }
    }

    /// Accepts both the one-letter and the long spelling.
    pub fn parse(s: &str) -> Option<Status> {
        match s {
            "I" | "invalid" => Some(Status::Invalid),
            "F" | "failure" => Some(Status::Failure),
            "R" | "running" => Some(Status::Running),
            "S" | "success" => Some(Status::Success),
            _ => None,
        }
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.letter())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Owner {
    Blackboard,
    Environment,
}

/// Finite variable domain.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Domain {
    Bool,
    Range { lo: i64, hi: i64 },
    Enum(Vec<String>),
}

impl Domain {
    /// Inclusive bounds of the internal integer encoding.
    pub fn bounds(&self) -> (i64, i64) {
        match self {
            Domain::Bool => (0, 1),
            Domain::Range { lo, hi } => (*lo, *hi),
            Domain::Enum(syms) => (0, syms.len() as i64 - 1),
        }
    }

    pub fn size(&self) -> u64 {
        let (lo, hi) = self.bounds();
        if hi < lo {
            0
        } else {
            (hi as i128 - lo as i128 + 1) as u64
        }
    }

    pub fn contains(&self, v: i64) -> bool {
        let (lo, hi) = self.bounds();
        lo <= v && v <= hi
    }

    pub fn clamp(&self, v: i64) -> i64 {
        let (lo, hi) = self.bounds();
        v.max(lo).min(hi)
    }

    /// Encode a literal in this domain; `None` if the literal does not belong to it.
    pub fn encode(&self, lit: &Literal) -> Option<i64> {
        match (self, lit) {
            (Domain::Bool, Literal::Bool(b)) => Some(*b as i64),
            (Domain::Range { .. }, Literal::Int(i)) if self.contains(*i) => Some(*i),
            (Domain::Enum(syms), Literal::Sym(s)) => {
                syms.iter().position(|x| x == s).map(|p| p as i64)
            }
            _ => None,
        }
    }

    pub fn decode(&self, v: i64) -> Literal {
        match self {
            Domain::Bool => Literal::Bool(v != 0),
            Domain::Range { .. } => Literal::Int(v),
            Domain::Enum(syms) => match usize::try_from(v).ok().and_then(|i| syms.get(i)) {
                Some(s) => Literal::Sym(s.clone()),
                None => Literal::Int(v),
            },
        }
    }
}

/// A constant as written in source.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Literal {
    Int(i64),
    Bool(bool),
    Sym(String),
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Literal::Int(i) => write!(f, "{i}"),
            Literal::Bool(b) => write!(f, "{b}"),
            Literal::Sym(s) => f.write_str(s),
        }
    }
}

impl Literal {
    pub fn to_json(&self) -> serde_json::Value {
        match self {
            Literal::Int(i) => serde_json::Value::from(*i),
            Literal::Bool(b) => serde_json::Value::from(*b),
            Literal::Sym(s) => serde_json::Value::from(s.clone()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VarDecl {
    pub name: String,
    pub domain: Domain,
    /// Admissible initial values (a singleton for a fixed start).
    pub initial: Vec<Literal>,
    pub owner: Owner,
}

/// Total remap of a decorator child's status. Outputs are never `Invalid`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct DecoratorMap {
    pub on_failure: Status,
    pub on_running: Status,
    pub on_success: Status,
}

impl DecoratorMap {
    pub const IDENTITY: DecoratorMap = DecoratorMap {
        on_failure: Status::Failure,
        on_running: Status::Running,
        on_success: Status::Success,
    };
    pub const INVERTER: DecoratorMap = DecoratorMap {
        on_failure: Status::Success,
        on_running: Status::Running,
        on_success: Status::Failure,
    };

    /// `X_Is_Y`: map `from` to `to`, identity elsewhere.
    pub fn x_is_y(from: Status, to: Status) -> DecoratorMap {
        let mut m = DecoratorMap::IDENTITY;
        m.set(from, to);
        m
    }

    pub fn success_is_running() -> DecoratorMap {
        DecoratorMap::x_is_y(Status::Success, Status::Running)
    }

    pub fn apply(&self, s: Status) -> Status {
        match s {
            Status::Invalid => Status::Invalid,
            Status::Failure => self.on_failure,
            Status::Running => self.on_running,
            Status::Success => self.on_success,
        }
    }

    pub fn set(&mut self, from: Status, to: Status) {
        match from {
            Status::Failure => self.on_failure = to,
            Status::Running => self.on_running = to,
            Status::Success => self.on_success = to,
            Status::Invalid => {}
        }
    }

    /// Non-identity entries in F, R, S order.
    pub fn changes(&self) -> Vec<(Status, Status)> {
        [Status::Failure, Status::Running, Status::Success]
            .into_iter()
            .filter(|s| self.apply(*s) != *s)
            .map(|s| (s, self.apply(s)))
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Assign {
    pub target: String,
    /// May be a top-level `choice(..)`.
    pub value: Expr,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Branch {
    pub writes: Vec<Assign>,
    pub status: Status,
}

/// Guarded clause: the first clause whose guard holds fires. More than one
/// branch makes the clause a nondeterministic choice point.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Clause {
    pub guard: Expr,
    pub branches: Vec<Branch>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum NodeKind {
    Selector,
    Sequence,
    ParallelAll,
    ParallelOne,
    Decorator(DecoratorMap),
    Action(Vec<Clause>),
    Check(Vec<Clause>),
}

impl NodeKind {
    pub fn is_composite(&self) -> bool {
        matches!(
            self,
            NodeKind::Selector | NodeKind::Sequence | NodeKind::ParallelAll | NodeKind::ParallelOne
        )
    }

    pub fn is_leaf(&self) -> bool {
        matches!(self, NodeKind::Action(_) | NodeKind::Check(_))
    }

    pub fn keyword(&self) -> &'static str {
        match self {
            NodeKind::Selector => "sel",
            NodeKind::Sequence => "seq",
            NodeKind::ParallelAll => "par_all",
            NodeKind::ParallelOne => "par_one",
            NodeKind::Decorator(_) => "remap",
            NodeKind::Action(_) => "action",
            NodeKind::Check(_) => "check",
        }
    }

    pub fn clauses(&self) -> Option<&[Clause]> {
        match self {
            NodeKind::Action(c) | NodeKind::Check(c) => Some(c),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TreeNode {
    pub name: String,
    pub kind: NodeKind,
    pub memory: bool,
    pub children: Vec<TreeNode>,
}

impl TreeNode {
    pub fn composite(
        kind: NodeKind,
        name: impl Into<String>,
        memory: bool,
        children: Vec<TreeNode>,
    ) -> TreeNode {
        TreeNode {
            name: name.into(),
            kind,
            memory,
            children,
        }
    }

    pub fn decorator(name: impl Into<String>, map: DecoratorMap, child: TreeNode) -> TreeNode {
        TreeNode {
            name: name.into(),
            kind: NodeKind::Decorator(map),
            memory: false,
            children: vec![child],
        }
    }

    pub fn action(name: impl Into<String>, clauses: Vec<Clause>) -> TreeNode {
        TreeNode {
            name: name.into(),
            kind: NodeKind::Action(clauses),
            memory: false,
            children: vec![],
        }
    }

    pub fn check(name: impl Into<String>, clauses: Vec<Clause>) -> TreeNode {
        TreeNode {
            name: name.into(),
            kind: NodeKind::Check(clauses),
            memory: false,
            children: vec![],
        }
    }

    /// Left-to-right preorder.
    pub fn preorder(&self) -> Vec<&TreeNode> {
        let mut out = Vec::new();
        let mut stack = vec![self];
        while let Some(n) = stack.pop() {
            out.push(n);
            stack.extend(n.children.iter().rev());
        }
        out
    }

    pub fn leaf_count(&self) -> usize {
        self.preorder().iter().filter(|n| n.kind.is_leaf()).count()
    }
}

/// A synchronous behavior tree with its blackboard, environment and
/// environment update relation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Sbt {
    pub name: Option<String>,
    pub root: TreeNode,
    pub blackboard: Vec<VarDecl>,
    pub environment: Vec<VarDecl>,
    /// Environment update; empty means identity.
    pub env_update: Vec<Clause>,
}

impl Sbt {
    pub fn vars(&self) -> impl Iterator<Item = &VarDecl> {
        self.blackboard.iter().chain(self.environment.iter())
    }

    pub fn var(&self, name: &str) -> Option<&VarDecl> {
        self.vars().find(|v| v.name == name)
    }
}

/// Contents of a `.bt` file: the nominal tree plus an optional contingency
/// tree sharing its declarations.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TreeFile {
    pub sbt: Sbt,
    pub contingency: Option<TreeNode>,
}

/// Names with a fixed meaning inside expressions.
pub const RESERVED: &[&str] = &[
    "true",
    "false",
    "status",
    "choice",
    "abs",
    "min",
    "max",
    "contingency",
    "deadlock",
    "G",
    "F",
    "X",
    "U",
    "M",
    "when",
    "do",
    "or",
    "return",
    "skip",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Severity {
    Error,
    Warning,
}

/// Line/column, both 1-based.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Loc {
    pub line: u32,
    pub col: u32,
}

impl fmt::Display for Loc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Diagnostic {
    pub severity: Severity,
    /// Short rule identifier, e.g. `"decorator arity"`.
    pub rule: &'static str,
    /// Node or variable the diagnostic is about.
    pub subject: String,
    pub message: String,
    pub loc: Option<Loc>,
}

impl Diagnostic {
    pub fn error(
        rule: &'static str,
        subject: impl Into<String>,
        message: impl Into<String>,
    ) -> Diagnostic {
        Diagnostic {
            severity: Severity::Error,
            rule,
            subject: subject.into(),
            message: message.into(),
            loc: None,
        }
    }

    pub fn warning(
        rule: &'static str,
        subject: impl Into<String>,
        message: impl Into<String>,
    ) -> Diagnostic {
        Diagnostic {
            severity: Severity::Warning,
            rule,
            subject: subject.into(),
            message: message.into(),
            loc: None,
        }
    }

    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        match self.loc {
            Some(l) => write!(
                f,
                "{l}: {sev}[{}] `{}`: {}",
                self.rule, self.subject, self.message
            ),
            None => write!(
                f,
                "{sev}[{}] `{}`: {}",
                self.rule, self.subject, self.message
            ),
        }
    }
}

/// Global table of enumeration symbols. Symbols are unique across domains,
/// so a bare identifier resolves to at most one constant.
#[derive(Clone, Debug, Default)]
pub struct SymbolTable {
    pub enums: Vec<Vec<String>>,
    by_symbol: HashMap<String, (usize, i64)>,
}

impl SymbolTable {
    /// Registers the domain and returns its type. Clashing symbols are reported
    /// through `diags`.
    pub fn type_of(&mut self, d: &Domain, owner: &str, diags: &mut Vec<Diagnostic>) -> Type {
        match d {
            Domain::Bool => Type::Bool,
            Domain::Range { .. } => Type::Int,
            Domain::Enum(syms) => {
                if let Some(id) = self.enums.iter().position(|e| e == syms) {
                    return Type::Enum(id);
                }
                let id = self.enums.len();
                self.enums.push(syms.clone());
                for (i, s) in syms.iter().enumerate() {
                    if self.by_symbol.insert(s.clone(), (id, i as i64)).is_some() {
                        diags.push(Diagnostic::error(
                            "enum symbol clash",
                            s.clone(),
                            format!("symbol appears in more than one enumeration (declared for `{owner}`)"),
                        ));
                    }
                }
                Type::Enum(id)
            }
        }
    }

    pub fn symbol(&self, s: &str) -> Option<(usize, i64)> {
        self.by_symbol.get(s).copied()
    }
}

/// Name resolution over an SBT's declarations and node names.
pub struct TreeScope<'a> {
    pub vars: &'a [(String, Type, Owner)],
    pub nodes: &'a HashMap<String, usize>,
    pub symbols: &'a SymbolTable,
    /// Monitor-local variables, if any.
    pub locals: &'a [(String, Type)],
    /// Whether `contingency`/`deadlock` resolve (product-level atoms).
    pub product_atoms: bool,
}

impl Resolver for TreeScope<'_> {
    fn ident(&self, name: &str) -> Option<(Slot, Type)> {
        if let Some(i) = self.locals.iter().position(|(n, _)| n == name) {
            return Some((Slot::Local(i), self.locals[i].1));
        }
        if let Some(i) = self.vars.iter().position(|(n, _, _)| n == name) {
            return Some((Slot::Var(i), self.vars[i].1));
        }
        if self.product_atoms {
            match name {
                "contingency" => return Some((Slot::Contingency, Type::Bool)),
                "deadlock" => return Some((Slot::Deadlock, Type::Bool)),
                _ => {}
            }
        }
        self.symbols
            .symbol(name)
            .map(|(id, v)| (Slot::Const(v), Type::Enum(id)))
    }

    fn node(&self, name: &str) -> Option<usize> {
        self.nodes.get(name).copied()
    }
}

/// Check every well-formedness rule; an empty result (ignoring warnings)
/// means the tree can be compiled and ticked.
pub fn validate(sbt: &Sbt) -> Vec<Diagnostic> {
    validate_with(sbt, None)
}

/// Like [`validate`], also checking a contingency tree against the same
/// declarations. Node names must be unique across both trees.
pub fn validate_with(sbt: &Sbt, contingency: Option<&TreeNode>) -> Vec<Diagnostic> {
    let mut diags = Vec::new();
    let mut symbols = SymbolTable::default();
    let mut vars: Vec<(String, Type, Owner)> = Vec::new();
    let mut seen = HashSet::new();

    for (decl, expected) in sbt
        .blackboard
        .iter()
        .map(|d| (d, Owner::Blackboard))
        .chain(sbt.environment.iter().map(|d| (d, Owner::Environment)))
    {
        if !seen.insert(decl.name.clone()) {
            diags.push(Diagnostic::error(
                "duplicate name",
                &decl.name,
                "variable declared more than once",
            ));
        }
        if RESERVED.contains(&decl.name.as_str()) {
            diags.push(Diagnostic::error(
                "reserved name",
                &decl.name,
                "name is reserved in expressions",
            ));
        }
        if decl.owner != expected {
            diags.push(Diagnostic::error(
                "owner mismatch",
                &decl.name,
                "declaration listed under the wrong store",
            ));
        }
        if decl.domain.size() == 0 {
            diags.push(Diagnostic::error(
                "empty domain",
                &decl.name,
                "domain has no values",
            ));
        }
        if decl.initial.is_empty() {
            diags.push(Diagnostic::error(
                "empty initial",
                &decl.name,
                "no initial value",
            ));
        }
        for lit in &decl.initial {
            if decl.domain.encode(lit).is_none() {
                diags.push(Diagnostic::error(
                    "initial outside domain",
                    &decl.name,
                    format!("initial value `{lit}` is not in the domain"),
                ));
            }
        }
        let ty = symbols.type_of(&decl.domain, &decl.name, &mut diags);
        vars.push((decl.name.clone(), ty, decl.owner));
    }
    for sym in symbols.enums.iter().flatten() {
        if RESERVED.contains(&sym.as_str()) {
            diags.push(Diagnostic::error(
                "reserved name",
                sym,
                "enumeration symbol is a reserved word",
            ));
        }
    }
    for (name, _, _) in &vars {
        if symbols.symbol(name).is_some() {
            diags.push(Diagnostic::error(
                "enum symbol clash",
                name,
                "variable name is also an enumeration symbol",
            ));
        }
    }

    let mut nodes = HashMap::new();
    let mut all_roots = vec![&sbt.root];
    all_roots.extend(contingency);
    for root in &all_roots {
        for n in root.preorder() {
            let idx = nodes.len();
            if nodes.insert(n.name.clone(), idx).is_some() {
                diags.push(Diagnostic::error(
                    "duplicate name",
                    &n.name,
                    "node name used more than once",
                ));
            }
        }
    }

    let scope = TreeScope {
        vars: &vars,
        nodes: &nodes,
        symbols: &symbols,
        locals: &[],
        product_atoms: false,
    };
    for root in &all_roots {
        for n in root.preorder() {
            check_node(n, &scope, &mut diags);
        }
    }
    for (ci, clause) in sbt.env_update.iter().enumerate() {
        check_clause(
            "update",
            ci,
            clause,
            Owner::Environment,
            true,
            &scope,
            &mut diags,
        );
    }
    diags
}

fn check_node(n: &TreeNode, scope: &TreeScope<'_>, diags: &mut Vec<Diagnostic>) {
    if n.name.is_empty() {
        diags.push(Diagnostic::error(
            "empty name",
            "",
            "node has an empty name",
        ));
    }
    if n.memory && !n.kind.is_composite() {
        diags.push(Diagnostic::error(
            "memory flag",
            &n.name,
            "memory is only valid on composites",
        ));
    }
    match &n.kind {
        k if k.is_composite() => {
            if n.children.is_empty() {
                diags.push(Diagnostic::error(
                    "composite arity",
                    &n.name,
                    "composite needs at least one child",
                ));
            }
            if n.memory
                && matches!(k, NodeKind::ParallelAll | NodeKind::ParallelOne)
                && n.children.len() > 32
            {
                diags.push(Diagnostic::error(
                    "parallel width",
                    &n.name,
                    "memory parallel supports at most 32 children",
                ));
            }
        }
        NodeKind::Decorator(map) => {
            if n.children.len() != 1 {
                diags.push(Diagnostic::error(
                    "decorator arity",
                    &n.name,
                    format!(
                        "decorator needs exactly one child, found {}",
                        n.children.len()
                    ),
                ));
            }
            if [map.on_failure, map.on_running, map.on_success].contains(&Status::Invalid) {
                diags.push(Diagnostic::error(
                    "decorator output",
                    &n.name,
                    "decorator may not output Invalid",
                ));
            }
        }
        NodeKind::Action(clauses) | NodeKind::Check(clauses) => {
            if !n.children.is_empty() {
                diags.push(Diagnostic::error(
                    "leaf arity",
                    &n.name,
                    "leaf nodes have no children",
                ));
            }
            let is_check = matches!(n.kind, NodeKind::Check(_));
            if clauses.is_empty() {
                diags.push(Diagnostic::error(
                    "empty leaf",
                    &n.name,
                    "leaf needs at least one clause",
                ));
            }
            for (ci, clause) in clauses.iter().enumerate() {
                if clause.branches.iter().any(|b| b.status == Status::Invalid) {
                    diags.push(Diagnostic::error(
                        "leaf returns invalid",
                        &n.name,
                        "leaves may not return Invalid",
                    ));
                }
                if is_check && clause.branches.iter().any(|b| !b.writes.is_empty()) {
                    diags.push(Diagnostic::error(
                        "check must be read-only",
                        &n.name,
                        "check leaves may not write",
                    ));
                }
                check_clause(&n.name, ci, clause, Owner::Blackboard, false, scope, diags);
            }
        }
        _ => unreachable!(),
    }
}

fn check_clause(
    subject: &str,
    ci: usize,
    clause: &Clause,
    writable: Owner,
    is_update: bool,
    scope: &TreeScope<'_>,
    diags: &mut Vec<Diagnostic>,
) {
    match expr::type_of(&clause.guard, scope) {
        Ok(Type::Bool) => {}
        Ok(t) => diags.push(Diagnostic::error(
            "type mismatch",
            subject,
            format!("guard of clause {ci} has type {t:?}, expected Bool"),
        )),
        Err(e) => diags.push(expr_diag(subject, &e)),
    }
    if clause.branches.is_empty() {
        diags.push(Diagnostic::error(
            "empty clause",
            subject,
            format!("clause {ci} has no branch"),
        ));
    }
    for b in &clause.branches {
        let mut targets = HashSet::new();
        for w in &b.writes {
            if !targets.insert(&w.target) {
                diags.push(Diagnostic::error(
                    "duplicate write",
                    subject,
                    format!("`{}` written twice", w.target),
                ));
            }
            let Some(i) = scope.vars.iter().position(|(n, _, _)| *n == w.target) else {
                diags.push(Diagnostic::error(
                    "undeclared variable",
                    &w.target,
                    format!("`{}` written by `{subject}` is not declared", w.target),
                ));
                continue;
            };
            let (_, ty, owner) = &scope.vars[i];
            if *owner != writable {
                let rule = if is_update {
                    "update writes blackboard"
                } else {
                    "action writes environment"
                };
                diags.push(Diagnostic::error(
                    rule,
                    subject,
                    format!("may not write `{}`", w.target),
                ));
            }
            match expr::type_of_assigned(&w.value, scope) {
                Ok(t) if t == *ty => {}
                Ok(t) => diags.push(Diagnostic::error(
                    "type mismatch",
                    subject,
                    format!("`{}` has type {ty:?} but is assigned {t:?}", w.target),
                )),
                Err(e) => diags.push(expr_diag(subject, &e)),
            }
        }
    }
}

fn expr_diag(subject: &str, e: &expr::TypeError) -> Diagnostic {
    match e {
        expr::TypeError::Unknown(name) => Diagnostic::error(
            "undeclared variable",
            name,
            format!("`{name}` referenced by `{subject}` is not declared"),
        ),
        expr::TypeError::UnknownNode(name) => Diagnostic::error(
            "unknown node",
            name,
            format!("status query on unknown node `{name}`"),
        ),
        other => Diagnostic::error("type mismatch", subject, other.to_string()),
    }
}

/// Position tables over a validated tree.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NodeIndex {
    /// Left-to-right preorder of node names.
    pub preorder: Vec<String>,
    pub position: BTreeMap<String, usize>,
    pub parent: BTreeMap<String, Option<String>>,
    pub depth: BTreeMap<String, usize>,
}

impl NodeIndex {
    pub fn get<'t>(&self, root: &'t TreeNode, name: &str) -> Option<&'t TreeNode> {
        let i = *self.position.get(name)?;
        root.preorder().get(i).copied()
    }
}

pub fn node_index(sbt: &Sbt) -> NodeIndex {
    node_index_of(&sbt.root)
}

pub fn node_index_of(root: &TreeNode) -> NodeIndex {
    let mut idx = NodeIndex {
        preorder: Vec::new(),
        position: BTreeMap::new(),
        parent: BTreeMap::new(),
        depth: BTreeMap::new(),
    };
    let mut stack: Vec<(&TreeNode, Option<&str>, usize)> = vec![(root, None, 0)];
    while let Some((n, parent, depth)) = stack.pop() {
        idx.position.insert(n.name.clone(), idx.preorder.len());
        idx.preorder.push(n.name.clone());
        idx.parent
            .insert(n.name.clone(), parent.map(str::to_string));
        idx.depth.insert(n.name.clone(), depth);
        for c in n.children.iter().rev() {
            stack.push((c, Some(&n.name), depth + 1));
        }
    }
    idx
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Expr;

    fn act(name: &str) -> TreeNode {
        TreeNode::action(
            name,
            vec![Clause {
                guard: Expr::Bool(true),
                branches: vec![Branch {
                    writes: vec![Assign {
                        target: "x".into(),
                        value: Expr::Int(1),
                    }],
                    status: Status::Success,
                }],
            }],
        )
    }

    fn sbt(root: TreeNode) -> Sbt {
        Sbt {
            name: None,
            root,
            blackboard: vec![VarDecl {
                name: "x".into(),
                domain: Domain::Range { lo: 0, hi: 3 },
                initial: vec![Literal::Int(0)],
                owner: Owner::Blackboard,
            }],
            environment: vec![],
            env_update: vec![],
        }
    }

    fn rules(d: &[Diagnostic]) -> Vec<&'static str> {
        d.iter().filter(|d| d.is_error()).map(|d| d.rule).collect()
    }

    #[test]
    fn single_action_is_valid() {
        assert!(validate(&sbt(act("a"))).is_empty());
    }

    #[test]
    fn decorator_with_two_children() {
        let mut dec = TreeNode::decorator("d", DecoratorMap::INVERTER, act("a"));
        dec.children.push(act("b"));
        assert_eq!(rules(&validate(&sbt(dec))), vec!["decorator arity"]);
    }

    #[test]
    fn check_writing_is_rejected() {
        let mut c = act("c");
        c.kind = NodeKind::Check(c.kind.clauses().unwrap().to_vec());
        assert_eq!(rules(&validate(&sbt(c))), vec!["check must be read-only"]);
    }

    #[test]
    fn undeclared_and_env_writes() {
        let mut s = sbt(act("a"));
        s.root = TreeNode::action(
            "a",
            vec![Clause {
                guard: Expr::Ident("nope".into()),
                branches: vec![Branch {
                    writes: vec![],
                    status: Status::Success,
                }],
            }],
        );
        let d = validate(&s);
        assert_eq!(rules(&d), vec!["undeclared variable"]);
        assert_eq!(d[0].subject, "nope");

        let mut s = sbt(act("a"));
        s.environment.push(VarDecl {
            name: "e".into(),
            domain: Domain::Bool,
            initial: vec![Literal::Bool(false)],
            owner: Owner::Environment,
        });
        s.root = TreeNode::action(
            "a",
            vec![Clause {
                guard: Expr::Bool(true),
                branches: vec![Branch {
                    writes: vec![Assign {
                        target: "e".into(),
                        value: Expr::Bool(true),
                    }],
                    status: Status::Success,
                }],
            }],
        );
        assert_eq!(rules(&validate(&s)), vec!["action writes environment"]);
    }

    #[test]
    fn duplicate_node_names() {
        let root = TreeNode::composite(NodeKind::Sequence, "s", false, vec![act("a"), act("a")]);
        assert_eq!(rules(&validate(&sbt(root))), vec!["duplicate name"]);
    }

    #[test]
    fn validation_is_idempotent() {
        let root = TreeNode::composite(NodeKind::Sequence, "s", false, vec![act("a"), act("a")]);
        let s = sbt(root);
        assert_eq!(validate(&s), validate(&s));
    }

    #[test]
    fn preorder_tables() {
        let idx = node_index(&sbt(act("a")));
        assert_eq!(idx.preorder, vec!["a"]);
        assert_eq!(idx.depth["a"], 0);

        let seq = TreeNode::composite(NodeKind::Sequence, "seq", false, vec![act("a"), act("b")]);
        assert_eq!(
            node_index(&sbt(seq.clone())).preorder,
            vec!["seq", "a", "b"]
        );

        let sel = TreeNode::composite(NodeKind::Selector, "sel", false, vec![seq, act("c")]);
        let idx = node_index(&sbt(sel));
        assert_eq!(idx.preorder, vec!["sel", "seq", "a", "b", "c"]);
        assert_eq!(idx.parent["a"].as_deref(), Some("seq"));
        assert_eq!(idx.depth["b"], 2);
    }

    #[test]
    fn decorator_maps() {
        assert_eq!(
            DecoratorMap::INVERTER.apply(Status::Success),
            Status::Failure
        );
        assert_eq!(
            DecoratorMap::INVERTER.apply(Status::Running),
            Status::Running
        );
        assert_eq!(
            DecoratorMap::success_is_running().apply(Status::Success),
            Status::Running
        );
        assert_eq!(
            DecoratorMap::success_is_running().changes(),
            vec![(Status::Success, Status::Running)]
        );
    }
}
