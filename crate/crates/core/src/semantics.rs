//! Tick semantics: compiled trees, single ticks, full steps and trace
//! enumeration.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use rayon::prelude::*;
use serde_json::Value;

use crate::expr::{self, compile, compile_assigned, CExpr, CRhs, Env, Type};
use crate::model::{
    validate_with, Clause, DecoratorMap, Diagnostic, Domain, NodeKind, Owner, Sbt, Status,
    SymbolTable, TreeFile, TreeNode, TreeScope,
};

#[derive(Clone, Debug)]
pub struct VarInfo {
    pub name: String,
    pub domain: Domain,
    pub owner: Owner,
    pub ty: Type,
    /// Encoded admissible initial values, in declaration order.
    pub initial: Vec<i64>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CKind {
    Selector,
    Sequence,
    ParallelAll,
    ParallelOne,
    Decorator(DecoratorMap),
    Leaf { check: bool, clauses: Vec<CClause> },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CBranch {
    pub writes: Vec<(usize, CRhs)>,
    pub status: Status,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CClause {
    pub guard: CExpr,
    pub branches: Vec<CBranch>,
}

#[derive(Clone, Debug)]
pub struct CNode {
    pub name: String,
    pub kind: CKind,
    pub memory: bool,
    pub children: Vec<usize>,
    pub parent: Option<usize>,
}

/// A validated tree (and optional contingency tree) compiled to index form.
/// Nodes are numbered in preorder, nominal tree first.
#[derive(Clone, Debug)]
pub struct Model {
    pub name: Option<String>,
    pub vars: Vec<VarInfo>,
    pub nodes: Vec<CNode>,
    pub root: usize,
    pub contingency_root: Option<usize>,
    pub update: Vec<CClause>,
    pub symbols: SymbolTable,
    scope_vars: Vec<(String, Type, Owner)>,
    node_ids: HashMap<String, usize>,
}

/// Variable values in declaration order, blackboard first.
pub type Valuation = Vec<i64>;

/// Per-node status of the latest tick plus memory-composite state.
///
/// `resume[n]` is 0 or `i + 1` (resume at child `i`) for memory selectors and
/// sequences, and a done-children bitmask for memory parallels.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TreeMemory {
    pub statuses: Vec<Status>,
    pub resume: Vec<u32>,
}

impl TreeMemory {
    pub fn empty(n_nodes: usize) -> TreeMemory {
        TreeMemory {
            statuses: vec![Status::Invalid; n_nodes],
            resume: vec![0; n_nodes],
        }
    }
}

/// Where a nondeterministic choice is taken.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ChoiceSite {
    /// Leaf node, or `None` for the environment update.
    pub node: Option<usize>,
    pub clause: usize,
    /// `None` for the pick between a clause's branches.
    pub write: Option<(usize, usize)>,
}

/// Supplies resolutions for choice points with at least two alternatives.
pub trait Chooser {
    /// `None` means no choice is available.
    fn choose(&mut self, site: &ChoiceSite, arity: usize) -> Option<usize>;
    fn begin_step(&mut self, _step: usize) {}
}

/// Always the first admissible alternative.
#[derive(Clone, Copy, Debug, Default)]
pub struct FirstChoice;

impl Chooser for FirstChoice {
    fn choose(&mut self, _: &ChoiceSite, _: usize) -> Option<usize> {
        Some(0)
    }
}

/// Choices consumed in canonical order: leaf choices in visit order, then
/// environment-update choices; within a clause, the branch pick first.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ChoiceVector {
    pub picks: Vec<usize>,
    pos: usize,
}

impl ChoiceVector {
    pub fn new(picks: Vec<usize>) -> ChoiceVector {
        ChoiceVector { picks, pos: 0 }
    }

    pub fn consumed(&self) -> usize {
        self.pos
    }
}

impl Chooser for ChoiceVector {
    fn choose(&mut self, _: &ChoiceSite, _: usize) -> Option<usize> {
        let v = self.picks.get(self.pos).copied();
        self.pos += 1;
        v
    }
}

/// One `ChoiceVector` per step.
#[derive(Clone, Debug, Default)]
pub struct Script {
    pub steps: Vec<Vec<usize>>,
    step: usize,
    pos: usize,
}

impl Script {
    pub fn new(steps: Vec<Vec<usize>>) -> Script {
        Script {
            steps,
            step: 0,
            pos: 0,
        }
    }
}

impl Chooser for Script {
    fn choose(&mut self, _: &ChoiceSite, _: usize) -> Option<usize> {
        let v = self
            .steps
            .get(self.step)
            .and_then(|s| s.get(self.pos))
            .copied();
        self.pos += 1;
        v
    }
    fn begin_step(&mut self, step: usize) {
        self.step = step;
        self.pos = 0;
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum SemError {
    #[error("insufficient choices at {site}")]
    InsufficientChoices { site: String },
    #[error("choice {index} out of range at {site} ({arity} alternatives)")]
    ChoiceOutOfRange {
        site: String,
        index: usize,
        arity: usize,
    },
    #[error("leaf guard exhaustion in `{leaf}`")]
    LeafGuardExhaustion { leaf: String },
    #[error("U_E guard exhaustion: no environment-update clause is enabled")]
    UpdateGuardExhaustion,
    #[error("per-step branching exceeds the limit of {limit}")]
    BranchingLimit { limit: usize },
}

/// Result of one tick: the root's status and the post-tick state.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TickResult {
    pub status: Status,
    pub valuation: Valuation,
    pub memory: TreeMemory,
}

pub type StepResult = TickResult;

/// Tick-boundary observation: valuation and per-node statuses.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Observation {
    pub valuation: Valuation,
    pub statuses: Vec<Status>,
}

/// Read view used for guard evaluation.
pub struct View<'a> {
    pub vals: &'a [i64],
    pub statuses: &'a [Status],
}

impl Env for View<'_> {
    fn var(&self, i: usize) -> i64 {
        self.vals[i]
    }
    fn status(&self, n: usize) -> Status {
        self.statuses[n]
    }
}

impl Model {
    pub fn new(file: &TreeFile) -> Result<Model, Vec<Diagnostic>> {
        Model::from_parts(&file.sbt, file.contingency.as_ref())
    }

    pub fn from_sbt(sbt: &Sbt) -> Result<Model, Vec<Diagnostic>> {
        Model::from_parts(sbt, None)
    }

    pub fn from_parts(sbt: &Sbt, contingency: Option<&TreeNode>) -> Result<Model, Vec<Diagnostic>> {
        let diags: Vec<Diagnostic> = validate_with(sbt, contingency)
            .into_iter()
            .filter(|d| d.is_error())
            .collect();
        if !diags.is_empty() {
            return Err(diags);
        }
        let mut symbols = SymbolTable::default();
        let mut sink = Vec::new();
        let vars: Vec<VarInfo> = sbt
            .vars()
            .map(|d| VarInfo {
                name: d.name.clone(),
                domain: d.domain.clone(),
                owner: d.owner,
                ty: symbols.type_of(&d.domain, &d.name, &mut sink),
                initial: d
                    .initial
                    .iter()
                    .map(|l| d.domain.encode(l).expect("validated"))
                    .collect(),
            })
            .collect();
        let scope_vars: Vec<(String, Type, Owner)> = vars
            .iter()
            .map(|v| (v.name.clone(), v.ty, v.owner))
            .collect();

        let mut nodes = Vec::new();
        let mut node_ids = HashMap::new();
        let mut roots = vec![&sbt.root];
        roots.extend(contingency);
        for r in &roots {
            for n in r.preorder() {
                node_ids.insert(n.name.clone(), node_ids.len());
            }
        }
        let scope = TreeScope {
            vars: &scope_vars,
            nodes: &node_ids,
            symbols: &symbols,
            locals: &[],
            product_atoms: false,
        };
        let root_ids: Vec<usize> = roots
            .iter()
            .map(|r| flatten(r, None, &scope, &mut nodes))
            .collect();
        let update = compile_clauses(&sbt.env_update, &scope);
        Ok(Model {
            name: sbt.name.clone(),
            vars,
            root: root_ids[0],
            contingency_root: root_ids.get(1).copied(),
            nodes,
            update,
            symbols,
            scope_vars,
            node_ids,
        })
    }

    /// Name resolution for monitors and properties.
    pub fn scope(&self, product_atoms: bool) -> TreeScope<'_> {
        TreeScope {
            vars: &self.scope_vars,
            nodes: &self.node_ids,
            symbols: &self.symbols,
            locals: &[],
            product_atoms,
        }
    }

    pub fn var_index(&self, name: &str) -> Option<usize> {
        self.vars.iter().position(|v| v.name == name)
    }

    pub fn node_index(&self, name: &str) -> Option<usize> {
        self.node_ids.get(name).copied()
    }

    pub fn empty_memory(&self) -> TreeMemory {
        TreeMemory::empty(self.nodes.len())
    }

    /// Number of leaves under `root`.
    pub fn leaf_count(&self, root: usize) -> usize {
        match self.nodes[root].kind {
            CKind::Leaf { .. } => 1,
            _ => self.nodes[root]
                .children
                .iter()
                .map(|&c| self.leaf_count(c))
                .sum(),
        }
    }

    /// Preorder node indices of the subtree at `root`.
    pub fn subtree(&self, root: usize) -> Vec<usize> {
        let mut out = vec![root];
        let mut i = 0;
        while i < out.len() {
            out.extend(self.nodes[out[i]].children.iter().copied());
            i += 1;
        }
        out.sort_unstable();
        out
    }

    /// The first admissible value of every variable.
    pub fn first_initial(&self) -> Valuation {
        self.vars.iter().map(|v| v.initial[0]).collect()
    }

    /// Cartesian product of admissible initial values, in odometer order.
    pub fn initial_valuations(&self) -> Vec<Valuation> {
        let mut out: Vec<Valuation> = vec![vec![]];
        for v in &self.vars {
            out = out
                .into_iter()
                .flat_map(|p| {
                    v.initial.iter().map(move |x| {
                        let mut q = p.clone();
                        q.push(*x);
                        q
                    })
                })
                .collect();
        }
        out
    }

    pub fn describe_site(&self, site: &ChoiceSite) -> String {
        let owner = match site.node {
            Some(n) => format!("leaf `{}`", self.nodes[n].name),
            None => "environment update".to_string(),
        };
        match site.write {
            None => format!("{owner}, clause {} branch pick", site.clause),
            Some((b, w)) => format!("{owner}, clause {} branch {b} write {w}", site.clause),
        }
    }

    fn pick(
        &self,
        ch: &mut dyn Chooser,
        site: ChoiceSite,
        arity: usize,
    ) -> Result<usize, SemError> {
        if arity < 2 {
            return Ok(0);
        }
        match ch.choose(&site, arity) {
            None => Err(SemError::InsufficientChoices {
                site: self.describe_site(&site),
            }),
            Some(i) if i >= arity => Err(SemError::ChoiceOutOfRange {
                site: self.describe_site(&site),
                index: i,
                arity,
            }),
            Some(i) => Ok(i),
        }
    }

    /// Fire the first enabled clause. Writes of one branch are simultaneous.
    /// Returns `None` if no guard holds.
    fn run_clauses(
        &self,
        node: Option<usize>,
        clauses: &[CClause],
        vals: &mut [i64],
        statuses: &[Status],
        ch: &mut dyn Chooser,
    ) -> Result<Option<Status>, SemError> {
        let view = View { vals, statuses };
        let Some(ci) = clauses.iter().position(|c| expr::holds(&c.guard, &view)) else {
            return Ok(None);
        };
        let clause = &clauses[ci];
        let bi = self.pick(
            ch,
            ChoiceSite {
                node,
                clause: ci,
                write: None,
            },
            clause.branches.len(),
        )?;
        let branch = &clause.branches[bi];
        let mut pending = Vec::with_capacity(branch.writes.len());
        for (wi, (target, rhs)) in branch.writes.iter().enumerate() {
            let e = match rhs {
                CRhs::Det(e) => e,
                CRhs::Choice(alts) => {
                    &alts[self.pick(
                        ch,
                        ChoiceSite {
                            node,
                            clause: ci,
                            write: Some((bi, wi)),
                        },
                        alts.len(),
                    )?]
                }
            };
            pending.push((*target, expr::eval(e, &view)));
        }
        for (t, v) in pending {
            vals[t] = self.vars[t].domain.clamp(v);
        }
        Ok(Some(branch.status))
    }

    fn tick_node(
        &self,
        n: usize,
        vals: &mut [i64],
        mem: &mut TreeMemory,
        ch: &mut dyn Chooser,
    ) -> Result<Status, SemError> {
        let node = &self.nodes[n];
        let st = match &node.kind {
            CKind::Leaf { clauses, .. } => self
                .run_clauses(Some(n), clauses, vals, &mem.statuses, ch)?
                .ok_or_else(|| SemError::LeafGuardExhaustion {
                    leaf: node.name.clone(),
                })?,
            CKind::Decorator(map) => map.apply(self.tick_node(node.children[0], vals, mem, ch)?),
            CKind::Sequence | CKind::Selector => {
                let pass = if node.kind == CKind::Sequence {
                    Status::Success
                } else {
                    Status::Failure
                };
                let start = if node.memory {
                    (mem.resume[n] as usize).saturating_sub(1)
                } else {
                    0
                };
                let mut result = pass;
                let mut stopped_at = 0;
                for (i, &c) in node.children.iter().enumerate().skip(start) {
                    let s = self.tick_node(c, vals, mem, ch)?;
                    if s != pass {
                        result = s;
                        stopped_at = i;
                        break;
                    }
                }
                if node.memory {
                    mem.resume[n] = if result == Status::Running {
                        stopped_at as u32 + 1
                    } else {
                        0
                    };
                }
                result
            }
            CKind::ParallelAll | CKind::ParallelOne => {
                let all = node.kind == CKind::ParallelAll;
                // parA remembers successes, parO remembers failures
                let sticky = if all {
                    Status::Success
                } else {
                    Status::Failure
                };
                let mut mask = if node.memory { mem.resume[n] } else { 0 };
                let (mut n_s, mut n_f) = (0, 0);
                for (i, &c) in node.children.iter().enumerate() {
                    let s = if mask & (1 << i) != 0 {
                        sticky
                    } else {
                        let s = self.tick_node(c, vals, mem, ch)?;
                        if node.memory && s == sticky {
                            mask |= 1 << i;
                        }
                        s
                    };
                    match s {
                        Status::Success => n_s += 1,
                        Status::Failure => n_f += 1,
                        _ => {}
                    }
                }
                let k = node.children.len();
                let result = if all {
                    if n_f > 0 {
                        Status::Failure
                    } else if n_s == k {
                        Status::Success
                    } else {
                        Status::Running
                    }
                } else if n_s > 0 {
                    Status::Success
                } else if n_f == k {
                    Status::Failure
                } else {
                    Status::Running
                };
                if node.memory {
                    mem.resume[n] = if result == Status::Running { mask } else { 0 };
                }
                result
            }
        };
        mem.statuses[n] = st;
        Ok(st)
    }

    /// Tick the tree rooted at `root` once. Statuses of every node are reset to
    /// Invalid first; the environment part of the valuation is never written.
    pub fn tick(
        &self,
        root: usize,
        vals: &[i64],
        mem: &TreeMemory,
        ch: &mut dyn Chooser,
    ) -> Result<TickResult, SemError> {
        let mut vals = vals.to_vec();
        let mut mem = TreeMemory {
            statuses: vec![Status::Invalid; self.nodes.len()],
            resume: mem.resume.clone(),
        };
        let status = self.tick_node(root, &mut vals, &mut mem, ch)?;
        Ok(TickResult {
            status,
            valuation: vals,
            memory: mem,
        })
    }

    /// Apply U_E in place. An empty update relation is the identity.
    pub fn env_update(
        &self,
        vals: &mut [i64],
        statuses: &[Status],
        ch: &mut dyn Chooser,
    ) -> Result<(), SemError> {
        if self.update.is_empty() {
            return Ok(());
        }
        match self.run_clauses(None, &self.update, vals, statuses, ch)? {
            Some(_) => Ok(()),
            None => Err(SemError::UpdateGuardExhaustion),
        }
    }

    /// Tick, then apply U_E.
    pub fn step(
        &self,
        root: usize,
        vals: &[i64],
        mem: &TreeMemory,
        ch: &mut dyn Chooser,
    ) -> Result<StepResult, SemError> {
        let mut r = self.tick(root, vals, mem, ch)?;
        self.env_update(&mut r.valuation, &r.memory.statuses, ch)?;
        Ok(r)
    }

    /// JSON observation with lexicographically sorted keys: variable names and
    /// `status:<node>` entries.
    pub fn observation_json(&self, vals: &[i64], statuses: &[Status]) -> BTreeMap<String, Value> {
        let mut m = BTreeMap::new();
        for (v, x) in self.vars.iter().zip(vals) {
            m.insert(v.name.clone(), v.domain.decode(*x).to_json());
        }
        for (n, s) in self.nodes.iter().zip(statuses) {
            m.insert(
                format!("status:{}", n.name),
                Value::String(s.letter().to_string()),
            );
        }
        m
    }

    pub fn observation_line(&self, obs: &Observation) -> String {
        serde_json::to_string(&self.observation_json(&obs.valuation, &obs.statuses))
            .expect("serializable")
    }
}

fn compile_clauses(cs: &[Clause], scope: &TreeScope<'_>) -> Vec<CClause> {
    cs.iter()
        .map(|c| CClause {
            guard: compile(&c.guard, scope).expect("validated"),
            branches: c
                .branches
                .iter()
                .map(|b| CBranch {
                    writes: b
                        .writes
                        .iter()
                        .map(|w| {
                            let t = scope
                                .vars
                                .iter()
                                .position(|v| v.0 == w.target)
                                .expect("validated");
                            (t, compile_assigned(&w.value, scope).expect("validated"))
                        })
                        .collect(),
                    status: b.status,
                })
                .collect(),
        })
        .collect()
}

fn flatten(
    n: &TreeNode,
    parent: Option<usize>,
    scope: &TreeScope<'_>,
    out: &mut Vec<CNode>,
) -> usize {
    let id = out.len();
    let kind = match &n.kind {
        NodeKind::Selector => CKind::Selector,
        NodeKind::Sequence => CKind::Sequence,
        NodeKind::ParallelAll => CKind::ParallelAll,
        NodeKind::ParallelOne => CKind::ParallelOne,
        NodeKind::Decorator(m) => CKind::Decorator(*m),
        NodeKind::Action(c) => CKind::Leaf {
            check: false,
            clauses: compile_clauses(c, scope),
        },
        NodeKind::Check(c) => CKind::Leaf {
            check: true,
            clauses: compile_clauses(c, scope),
        },
    };
    out.push(CNode {
        name: n.name.clone(),
        kind,
        memory: n.memory,
        children: vec![],
        parent,
    });
    let children: Vec<usize> = n
        .children
        .iter()
        .map(|c| flatten(c, Some(id), scope, out))
        .collect();
    out[id].children = children;
    id
}

/// Enumerates every choice vector of a deterministic-given-choices computation
/// in lexicographic order, discovering arities lazily.
pub struct Odometer {
    prefix: Vec<usize>,
    taken: Vec<usize>,
    arities: Vec<usize>,
    done: bool,
}

impl Default for Odometer {
    fn default() -> Self {
        Odometer::new()
    }
}

impl Odometer {
    pub fn new() -> Odometer {
        Odometer {
            prefix: vec![],
            taken: vec![],
            arities: vec![],
            done: false,
        }
    }

    /// Run `f` once per choice vector. `f` must consume choices in an order
    /// that depends only on earlier picks. Stops after `limit` vectors.
    pub fn for_each<T, E>(
        mut self,
        limit: usize,
        mut f: impl FnMut(&mut dyn Chooser) -> Result<T, E>,
    ) -> Result<Result<Vec<(Vec<usize>, T)>, usize>, E> {
        let mut out = Vec::new();
        while !self.done {
            if out.len() == limit {
                return Ok(Err(limit));
            }
            self.taken.clear();
            self.arities.clear();
            let r = f(&mut self)?;
            out.push((self.taken.clone(), r));
            self.advance();
        }
        Ok(Ok(out))
    }

    fn advance(&mut self) {
        for i in (0..self.taken.len()).rev() {
            if self.taken[i] + 1 < self.arities[i] {
                self.prefix = self.taken[..i].to_vec();
                self.prefix.push(self.taken[i] + 1);
                return;
            }
        }
        self.done = true;
    }
}

impl Chooser for Odometer {
    fn choose(&mut self, _: &ChoiceSite, arity: usize) -> Option<usize> {
        let i = self.taken.len();
        let v = if i < self.prefix.len() {
            self.prefix[i]
        } else {
            0
        };
        self.taken.push(v);
        self.arities.push(arity);
        Some(v)
    }
}

/// All successors of one step, one per choice vector, in canonical order.
pub fn step_all(
    model: &Model,
    root: usize,
    vals: &[i64],
    mem: &TreeMemory,
    limit: usize,
) -> Result<Vec<(Vec<usize>, StepResult)>, SemError> {
    match Odometer::new().for_each(limit, |ch| model.step(root, vals, mem, ch))? {
        Ok(v) => Ok(v),
        Err(limit) => Err(SemError::BranchingLimit { limit }),
    }
}

/// `k` observations from the first admissible initial valuation and empty memory.
pub fn trace(
    model: &Model,
    k: usize,
    resolver: &mut dyn Chooser,
) -> Result<Vec<Observation>, SemError> {
    let mut vals = model.first_initial();
    let mut mem = model.empty_memory();
    let mut out = Vec::with_capacity(k);
    for i in 0..k {
        resolver.begin_step(i);
        let r = model.step(model.root, &vals, &mem, resolver)?;
        out.push(Observation {
            valuation: r.valuation.clone(),
            statuses: r.memory.statuses.clone(),
        });
        vals = r.valuation;
        mem = r.memory;
    }
    Ok(out)
}

pub const DEFAULT_BRANCHING_LIMIT: usize = 64;

/// Every observation sequence of length `k`, over all admissible initial
/// valuations and all choice resolutions.
pub fn all_traces(
    model: &Model,
    k: usize,
    limit: usize,
) -> Result<BTreeSet<Vec<Observation>>, SemError> {
    fn go(
        model: &Model,
        vals: &[i64],
        mem: &TreeMemory,
        left: usize,
        limit: usize,
        prefix: &mut Vec<Observation>,
        out: &mut BTreeSet<Vec<Observation>>,
    ) -> Result<(), SemError> {
        if left == 0 {
            out.insert(prefix.clone());
            return Ok(());
        }
        let mut seen = BTreeSet::new();
        for (_, r) in step_all(model, model.root, vals, mem, limit)? {
            if !seen.insert((r.valuation.clone(), r.memory.clone())) {
                continue;
            }
            prefix.push(Observation {
                valuation: r.valuation.clone(),
                statuses: r.memory.statuses.clone(),
            });
            go(model, &r.valuation, &r.memory, left - 1, limit, prefix, out)?;
            prefix.pop();
        }
        Ok(())
    }
    let parts: Vec<Result<BTreeSet<Vec<Observation>>, SemError>> = model
        .initial_valuations()
        .par_iter()
        .map(|v| {
            let mut out = BTreeSet::new();
            go(
                model,
                v,
                &model.empty_memory(),
                k,
                limit,
                &mut vec![],
                &mut out,
            )?;
            Ok(out)
        })
        .collect();
    let mut all = BTreeSet::new();
    for p in parts {
        all.extend(p?);
    }
    Ok(all)
}

impl fmt::Display for Observation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{:?} {:?}",
            self.valuation,
            self.statuses.iter().map(|s| s.letter()).collect::<String>()
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::parse_tree;

    fn model(src: &str) -> Model {
        Model::new(&parse_tree(src).unwrap().value).unwrap()
    }

    fn statuses(m: &Model, r: &TickResult) -> Vec<(String, Status)> {
        m.nodes
            .iter()
            .zip(&r.memory.statuses)
            .map(|(n, s)| (n.name.clone(), *s))
            .collect()
    }

    #[test]
    fn textbook_selector() {
        let m = model(
            "tree { blackboard { x : 0..3 = 0; }
              check c = false;
              action a { when true do x := 1 return success; }
              root = sel s (c, a); }",
        );
        let r = m
            .tick(
                m.root,
                &m.first_initial(),
                &m.empty_memory(),
                &mut FirstChoice,
            )
            .unwrap();
        assert_eq!(r.status, Status::Success);
        assert_eq!(
            statuses(&m, &r),
            vec![
                ("s".into(), Status::Success),
                ("c".into(), Status::Failure),
                ("a".into(), Status::Success)
            ]
        );
        assert_eq!(r.valuation, vec![1]);
    }

    #[test]
    fn memory_sequence_resumes_at_running_child() {
        let m = model(
            "tree { blackboard { n : 0..5 = 0; }
              action first { when true do n := n + 1 return success; }
              action second { when n < 3 do n := n + 1 return running; when true do return success; }
              root = seq* s (first, second); }",
        );
        let r1 = m
            .tick(
                m.root,
                &m.first_initial(),
                &m.empty_memory(),
                &mut FirstChoice,
            )
            .unwrap();
        assert_eq!(r1.status, Status::Running);
        assert_eq!(r1.memory.resume[0], 2);
        let r2 = m
            .tick(m.root, &r1.valuation, &r1.memory, &mut FirstChoice)
            .unwrap();
        // first is skipped and stays Invalid
        assert_eq!(r2.memory.statuses[1], Status::Invalid);
        assert_eq!(
            (r2.status, r2.valuation.clone()),
            (Status::Running, vec![3])
        );
        let r3 = m
            .tick(m.root, &r2.valuation, &r2.memory, &mut FirstChoice)
            .unwrap();
        assert_eq!(
            (r3.status, r3.memory.resume[0], r3.valuation.clone()),
            (Status::Success, 0, vec![3])
        );
    }

    #[test]
    fn decorators() {
        let m = model("tree { check c = true; root = inv i (c); }");
        assert_eq!(
            m.tick(m.root, &[], &m.empty_memory(), &mut FirstChoice)
                .unwrap()
                .status,
            Status::Failure
        );
        let m = model(
            "tree { action a { when true do return success; } root = success_is_running d (a); }",
        );
        assert_eq!(
            m.tick(m.root, &[], &m.empty_memory(), &mut FirstChoice)
                .unwrap()
                .status,
            Status::Running
        );
    }

    #[test]
    fn parallel_memory_skips_sticky_children() {
        let m = model(
            "tree { blackboard { n : 0..9 = 0; }
              action once { when true do n := n + 1 return success; }
              action slow { when n < 3 do n := n + 1 return running; when true do return success; }
              root = par_all* p (once, slow); }",
        );
        let r1 = m
            .tick(m.root, &[0], &m.empty_memory(), &mut FirstChoice)
            .unwrap();
        assert_eq!(
            (r1.status, r1.valuation.clone(), r1.memory.resume[0]),
            (Status::Running, vec![2], 1)
        );
        let r2 = m
            .tick(m.root, &r1.valuation, &r1.memory, &mut FirstChoice)
            .unwrap();
        assert_eq!(r2.memory.statuses[1], Status::Invalid);
        assert_eq!(
            (r2.status, r2.valuation.clone()),
            (Status::Running, vec![3])
        );
        let r3 = m
            .tick(m.root, &r2.valuation, &r2.memory, &mut FirstChoice)
            .unwrap();
        assert_eq!((r3.status, r3.memory.resume[0]), (Status::Success, 0));
    }

    #[test]
    fn env_update_saturates_and_counts_choices() {
        let m = model(
            "tree { environment { time : 0..2 = 2; b : bool = false; }
              update { when true do time := time + 1, b := choice(true, false); }
              check c = true; root = c; }",
        );
        let r = m
            .step(
                m.root,
                &m.first_initial(),
                &m.empty_memory(),
                &mut FirstChoice,
            )
            .unwrap();
        assert_eq!(r.valuation, vec![2, 1]);
        assert_eq!(
            step_all(&m, m.root, &m.first_initial(), &m.empty_memory(), 64)
                .unwrap()
                .len(),
            2
        );
        assert_eq!(all_traces(&m, 3, 64).unwrap().len(), 8);
        assert!(matches!(
            step_all(&m, m.root, &[0, 0], &m.empty_memory(), 1),
            Err(SemError::BranchingLimit { .. })
        ));
    }

    #[test]
    fn errors_name_their_site() {
        let m = model("tree { blackboard { x : 0..1 = 0; } action a { when x > 0 do return success; } root = a; }");
        let e = m
            .tick(m.root, &[0], &m.empty_memory(), &mut FirstChoice)
            .unwrap_err();
        assert_eq!(e, SemError::LeafGuardExhaustion { leaf: "a".into() });
        let m = model(
            "tree { blackboard { x : 0..1 = 0; } action a { when true do x := 0 return success or x := 1 return success; } root = a; }",
        );
        let e = m
            .tick(
                m.root,
                &[0],
                &m.empty_memory(),
                &mut ChoiceVector::new(vec![]),
            )
            .unwrap_err();
        assert!(matches!(e, SemError::InsufficientChoices { site } if site.contains("leaf `a`")));
    }

    #[test]
    fn trace_and_json() {
        let m = model(
            "tree { blackboard { x : 0..3 = 0; } environment { e : {lo, hi} = lo; }
              action a { when true do x := x + 1 return success; } root = a; }",
        );
        assert!(trace(&m, 0, &mut FirstChoice).unwrap().is_empty());
        let t = trace(&m, 3, &mut FirstChoice).unwrap();
        assert_eq!(
            t.iter().map(|o| o.valuation[0]).collect::<Vec<_>>(),
            vec![1, 2, 3]
        );
        assert_eq!(
            m.observation_line(&t[0]),
            r#"{"e":"lo","status:a":"S","x":1}"#
        );
        assert_eq!(all_traces(&m, 4, 64).unwrap().len(), 1);
    }
}
