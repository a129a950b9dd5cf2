//! The tree-monitor product: stepping, reachable state spaces and the
//! runtime-monitoring harness.

use std::collections::{BTreeMap, HashMap};

use rayon::prelude::*;
use serde_json::{json, Value};

use crate::expr::{self, CExpr, Env};
use crate::model::{Diagnostic, Sbt, Status, TreeFile, TreeNode};
use crate::monitors::{CompiledMonitor, Configs, Monitor, Verdict};
use crate::scenario::CompiledScenario;
use crate::semantics::{
    Chooser, Model, Odometer, SemError, TreeMemory, Valuation, View, DEFAULT_BRANCHING_LIMIT,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Mode {
    Nominal,
    Contingency,
    /// The monitor had no enabled transition. Absorbing.
    Deadlock,
}

impl Mode {
    pub fn word(self) -> &'static str {
        match self {
            Mode::Nominal => "nominal",
            Mode::Contingency => "contingency",
            Mode::Deadlock => "deadlock",
        }
    }
}

/// A configuration of the product: tree memory, valuation, monitor
/// configuration set and mode.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ProductState {
    pub memory: TreeMemory,
    pub valuation: Valuation,
    pub monitor: Configs,
    pub mode: Mode,
}

/// Atom evaluation over a product state, including `contingency` and `deadlock`.
pub struct ProductView<'a>(pub &'a ProductState);

impl Env for ProductView<'_> {
    fn var(&self, i: usize) -> i64 {
        self.0.valuation[i]
    }
    fn status(&self, n: usize) -> Status {
        self.0.memory.statuses[n]
    }
    fn contingency(&self) -> bool {
        self.0.mode == Mode::Contingency
    }
    fn deadlock(&self) -> bool {
        self.0.mode == Mode::Deadlock
    }
}

/// Tree and monitor, composed.
#[derive(Clone, Debug)]
pub struct Btm {
    pub model: Model,
    pub monitor: CompiledMonitor,
    /// Refuse steps with more choice vectors than this.
    pub branching_limit: usize,
}

pub fn compose(file: &TreeFile, monitor: &Monitor) -> Result<Btm, Vec<Diagnostic>> {
    compose_parts(&file.sbt, monitor, file.contingency.as_ref())
}

pub fn compose_parts(
    sbt: &Sbt,
    monitor: &Monitor,
    contingency: Option<&TreeNode>,
) -> Result<Btm, Vec<Diagnostic>> {
    let model = Model::from_parts(sbt, contingency)?;
    Btm::new(model, monitor)
}

impl Btm {
    pub fn new(model: Model, monitor: &Monitor) -> Result<Btm, Vec<Diagnostic>> {
        let monitor = CompiledMonitor::new(monitor, &model.scope(false))?;
        Ok(Btm {
            model,
            monitor,
            branching_limit: DEFAULT_BRANCHING_LIMIT,
        })
    }

    fn initial_mode(&self) -> Mode {
        match self.monitor.verdict(&self.monitor.initial) {
            Verdict::Nominal => Mode::Nominal,
            Verdict::Contingency => Mode::Contingency,
        }
    }

    pub fn initial_state(&self, valuation: Valuation) -> ProductState {
        ProductState {
            memory: self.model.empty_memory(),
            valuation,
            monitor: self.monitor.initial.clone(),
            mode: self.initial_mode(),
        }
    }

    /// One initial state per admissible initial valuation.
    pub fn initial_states(&self) -> Vec<ProductState> {
        self.model
            .initial_valuations()
            .into_iter()
            .map(|v| self.initial_state(v))
            .collect()
    }

    /// Root ticked in `mode`. Without a contingency tree the nominal tree keeps running.
    pub fn active_root(&self, mode: Mode) -> usize {
        match mode {
            Mode::Contingency => self.model.contingency_root.unwrap_or(self.model.root),
            _ => self.model.root,
        }
    }

    /// Tick the active tree, apply U_E and `overrides`, then let the monitor
    /// observe the result and recompute the mode.
    pub fn step_with(
        &self,
        s: &ProductState,
        ch: &mut dyn Chooser,
        overrides: &[(usize, i64)],
    ) -> Result<ProductState, SemError> {
        if s.mode == Mode::Deadlock {
            return Ok(s.clone());
        }
        let mut r = self
            .model
            .step(self.active_root(s.mode), &s.valuation, &s.memory, ch)?;
        for &(v, x) in overrides {
            r.valuation[v] = self.model.vars[v].domain.clamp(x);
        }
        let obs = View {
            vals: &r.valuation,
            statuses: &r.memory.statuses,
        };
        let (monitor, mode) = match self.monitor.step(&s.monitor, &obs) {
            Err(_) => (vec![], Mode::Deadlock),
            Ok(c) => {
                let mode = if s.mode == Mode::Contingency
                    || self.monitor.verdict(&c) == Verdict::Contingency
                {
                    Mode::Contingency
                } else {
                    Mode::Nominal
                };
                (c, mode)
            }
        };
        Ok(ProductState {
            memory: r.memory,
            valuation: r.valuation,
            monitor,
            mode,
        })
    }

    /// Every successor, in canonical choice-vector order, without duplicates.
    pub fn successors(&self, s: &ProductState) -> Result<Vec<ProductState>, SemError> {
        let all = match Odometer::new()
            .for_each(self.branching_limit, |ch| self.step_with(s, ch, &[]))?
        {
            Ok(v) => v,
            Err(limit) => return Err(SemError::BranchingLimit { limit }),
        };
        let mut out: Vec<ProductState> = Vec::with_capacity(all.len());
        for (_, t) in all {
            if !out.contains(&t) {
                out.push(t);
            }
        }
        Ok(out)
    }

    pub fn observation_json(&self, s: &ProductState) -> BTreeMap<String, Value> {
        let mut m = self
            .model
            .observation_json(&s.valuation, &s.memory.statuses);
        m.insert("mode".into(), Value::String(s.mode.word().into()));
        m
    }

    pub fn holds(&self, atom: &CExpr, s: &ProductState) -> bool {
        expr::holds(atom, &ProductView(s))
    }
}

/// `product_step`: the successor set under every resolution of the step's choices.
pub fn product_step(btm: &Btm, s: &ProductState) -> Result<Vec<ProductState>, SemError> {
    btm.successors(s)
}

pub const DEFAULT_STATE_LIMIT: usize = 1_000_000;

/// Explicit transition system over reachable product states. State ids are
/// BFS order from the initial states; successors keep canonical choice order.
#[derive(Clone, Debug)]
pub struct ProductTs {
    pub states: Vec<ProductState>,
    pub initial: Vec<usize>,
    pub edges: Vec<Vec<usize>>,
    /// The state limit was hit; the system is incomplete.
    pub truncated: bool,
}

impl ProductTs {
    pub fn edge_count(&self) -> usize {
        self.edges.iter().map(Vec::len).sum()
    }

    /// JSON dump: states with their observation and true atoms, then edges.
    pub fn to_json(&self, btm: &Btm, atoms: &[(String, CExpr)]) -> Value {
        let states: Vec<Value> = self
            .states
            .iter()
            .enumerate()
            .map(|(i, s)| {
                let labels: Vec<&str> =
                    atoms.iter().filter(|(_, a)| btm.holds(a, s)).map(|(n, _)| n.as_str()).collect();
                json!({
                    "id": i,
                    "observation": btm.observation_json(s),
                    "monitor": s.monitor.iter().map(|(q, l)| json!({"state": btm.monitor.state_names[*q as usize], "locals": l})).collect::<Vec<_>>(),
                    "labels": labels,
                })
            })
            .collect();
        let edges: Vec<Value> = self
            .edges
            .iter()
            .enumerate()
            .flat_map(|(i, es)| es.iter().map(move |&j| json!([i, j])))
            .collect();
        json!({ "states": states, "initial": self.initial, "edges": edges, "truncated": self.truncated })
    }
}

/// Breadth-first exploration. Successor computation fans out over the
/// current rayon pool; numbering is assigned sequentially afterwards, so the
/// result does not depend on the worker count.
pub fn reachable(btm: &Btm, state_limit: usize) -> Result<ProductTs, SemError> {
    let mut states: Vec<ProductState> = Vec::new();
    let mut index: HashMap<ProductState, usize> = HashMap::new();
    let mut truncated = false;
    let mut initial = Vec::new();
    for s in btm.initial_states() {
        if let Some(&i) = index.get(&s) {
            initial.push(i);
            continue;
        }
        if states.len() >= state_limit {
            truncated = true;
            break;
        }
        index.insert(s.clone(), states.len());
        initial.push(states.len());
        states.push(s);
    }
    initial.dedup();
    let mut edges: Vec<Vec<usize>> = Vec::new();
    let mut frontier: Vec<usize> = (0..states.len()).collect();
    while !frontier.is_empty() {
        let succs: Vec<Result<Vec<ProductState>, SemError>> = frontier
            .par_iter()
            .map(|&i| btm.successors(&states[i]))
            .collect();
        let mut next = Vec::new();
        for (&i, ss) in frontier.iter().zip(succs) {
            let mut out = Vec::new();
            for t in ss? {
                let j = match index.get(&t) {
                    Some(&j) => j,
                    None => {
                        if states.len() >= state_limit {
                            truncated = true;
                            continue;
                        }
                        let j = states.len();
                        index.insert(t.clone(), j);
                        states.push(t);
                        next.push(j);
                        j
                    }
                };
                if !out.contains(&j) {
                    out.push(j);
                }
            }
            if edges.len() <= i {
                edges.resize(i + 1, Vec::new());
            }
            edges[i] = out;
        }
        frontier = next;
    }
    edges.resize(states.len(), Vec::new());
    Ok(ProductTs {
        states,
        initial,
        edges,
        truncated,
    })
}

/// Outcome of a scripted run with the monitor in the loop.
#[derive(Clone, Debug)]
pub struct RuntimeReport {
    /// First step carrying a scripted override (0 if only `init` overrides).
    pub injected_at: Option<u32>,
    /// First step whose observation put the product in contingency (or deadlock).
    pub detected_at: Option<u32>,
    /// Step at which the contingency tree first ran.
    pub engaged_at: Option<u32>,
    /// Initial state followed by one state per executed step.
    pub trajectory: Vec<ProductState>,
    pub error: Option<SemError>,
}

impl RuntimeReport {
    pub fn latency(&self) -> Option<u32> {
        match (self.injected_at, self.detected_at) {
            (Some(i), Some(j)) if j >= i => Some(j - i),
            _ => None,
        }
    }

    pub fn missed(&self) -> bool {
        self.injected_at.is_some() && self.latency().is_none()
    }

    pub fn to_json(&self) -> Value {
        json!({
            "injected_at": self.injected_at,
            "detected_at": self.detected_at,
            "engaged_at": self.engaged_at,
            "latency": self.latency(),
            "missed": self.missed(),
            "steps": self.trajectory.len().saturating_sub(1),
            "error": self.error.as_ref().map(|e| e.to_string()),
        })
    }
}

/// Run from the first admissible initial valuation (with `init` overrides),
/// applying each `at k` override after step `k`'s environment update.
pub fn simulate_runtime(
    btm: &Btm,
    scenario: &CompiledScenario,
    max_steps: u32,
    ch: &mut dyn Chooser,
) -> RuntimeReport {
    let mut v = btm.model.first_initial();
    for &(i, x) in &scenario.init {
        v[i] = x;
    }
    let mut s = btm.initial_state(v);
    let injected_at = scenario
        .at
        .keys()
        .next()
        .copied()
        .or(if scenario.init.is_empty() {
            None
        } else {
            Some(0)
        });
    let mut report = RuntimeReport {
        injected_at,
        detected_at: None,
        engaged_at: None,
        trajectory: vec![s.clone()],
        error: None,
    };
    for k in 1..=max_steps {
        ch.begin_step(k as usize - 1);
        if report.detected_at.is_some()
            && report.engaged_at.is_none()
            && s.mode == Mode::Contingency
        {
            report.engaged_at = Some(k);
        }
        match btm.step_with(&s, ch, scenario.at_step(k)) {
            Ok(t) => s = t,
            Err(e) => {
                report.error = Some(e);
                break;
            }
        }
        if report.detected_at.is_none() && s.mode != Mode::Nominal {
            report.detected_at = Some(k);
        }
        report.trajectory.push(s.clone());
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::{parse_monitor, parse_tree};
    use crate::semantics::FirstChoice;

    fn btm(tree: &str, mon: &str) -> Btm {
        let f = parse_tree(tree).unwrap().value;
        compose(&f, &parse_monitor(mon).unwrap().value).unwrap()
    }

    const COUNTER: &str = "tree { environment { t : 0..3 = 0; b : bool = false; }
        update { when true do t := t + 1, b := choice(false, true); }
        check c = true; root = c; }";

    #[test]
    fn trivial_monitor_projects_to_bare_steps() {
        let b = compose(&parse_tree(COUNTER).unwrap().value, &Monitor::trivial()).unwrap();
        let s0 = &b.initial_states()[0];
        let succ = b.successors(s0).unwrap();
        assert_eq!(succ.len(), 2);
        let bare =
            crate::semantics::step_all(&b.model, b.model.root, &s0.valuation, &s0.memory, 64)
                .unwrap();
        for ((_, r), p) in bare.iter().zip(&succ) {
            assert_eq!((&r.valuation, &r.memory), (&p.valuation, &p.memory));
        }
    }

    #[test]
    fn unsatisfiable_monitor_deadlocks_at_first_step() {
        let b = btm(
            COUNTER,
            "esm { state a; state b; initial a; transition a -> b when false; }",
        );
        let t = b
            .step_with(&b.initial_states()[0], &mut FirstChoice, &[])
            .unwrap();
        assert_eq!(t.mode, Mode::Deadlock);
        assert_eq!(b.successors(&t).unwrap(), vec![t]);
    }

    #[test]
    fn contingency_latches_and_ts_is_deterministic() {
        let b = btm(
            COUNTER,
            "esm { state ok; state hot contingency; initial ok;
               transition ok -> ok when t < 2; transition ok -> hot when t >= 2; transition hot -> ok when true; }",
        );
        let ts = reachable(&b, 1000).unwrap();
        assert!(!ts.truncated);
        for (i, es) in ts.edges.iter().enumerate() {
            for &j in es {
                if ts.states[i].mode == Mode::Contingency {
                    assert_eq!(ts.states[j].mode, Mode::Contingency);
                }
            }
        }
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap();
        let ts1 = pool.install(|| reachable(&b, 1000).unwrap());
        assert_eq!(ts.states, ts1.states);
        assert_eq!(ts.edges, ts1.edges);
        assert!(reachable(&b, 3).unwrap().truncated);
    }
}
