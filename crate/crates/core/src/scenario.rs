//! Fault scenarios: scripted environment overrides.

use std::collections::BTreeMap;

use crate::model::{Diagnostic, Literal, Owner, Sbt};
use crate::semantics::Model;

/// `init` overrides apply to the initial valuation; `at k` overrides apply
/// after step `k`'s environment update, before the monitor observes it.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Scenario {
    pub name: Option<String>,
    pub init: Vec<(String, Literal)>,
    pub at: Vec<(u32, Vec<(String, Literal)>)>,
}

/// Overrides resolved to variable slots and encoded values.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CompiledScenario {
    pub init: Vec<(usize, i64)>,
    pub at: BTreeMap<u32, Vec<(usize, i64)>>,
}

impl CompiledScenario {
    pub fn at_step(&self, k: u32) -> &[(usize, i64)] {
        self.at.get(&k).map(Vec::as_slice).unwrap_or(&[])
    }
}

fn resolve(
    model: &Model,
    writes: &[(String, Literal)],
    d: &mut Vec<Diagnostic>,
) -> Vec<(usize, i64)> {
    let mut out = Vec::new();
    for (name, lit) in writes {
        let Some(i) = model.var_index(name) else {
            d.push(Diagnostic::error(
                "undeclared variable",
                name,
                "scenario overrides an undeclared variable",
            ));
            continue;
        };
        let v = &model.vars[i];
        if v.owner != Owner::Environment {
            d.push(Diagnostic::error(
                "override blackboard",
                name,
                "scenarios may only override environment variables",
            ));
            continue;
        }
        match v.domain.encode(lit) {
            Some(x) => out.push((i, x)),
            None => d.push(Diagnostic::error(
                "override outside domain",
                name,
                format!("`{lit}` is not in the domain"),
            )),
        }
    }
    out
}

impl Scenario {
    pub fn compile(&self, model: &Model) -> Result<CompiledScenario, Vec<Diagnostic>> {
        let mut d = Vec::new();
        let init = resolve(model, &self.init, &mut d);
        let mut at: BTreeMap<u32, Vec<(usize, i64)>> = BTreeMap::new();
        for (k, writes) in &self.at {
            let w = resolve(model, writes, &mut d);
            at.entry(*k).or_default().extend(w);
        }
        if d.is_empty() {
            Ok(CompiledScenario { init, at })
        } else {
            Err(d)
        }
    }
}

/// Design-time fault model: every environment update may instead apply one
/// of the scenario's override sets on top of its normal writes. The result
/// keeps every nominal behaviour and adds the faulty ones.
pub fn inject_fault(sbt: &Sbt, scenario: &Scenario) -> Sbt {
    use crate::expr::Expr;
    use crate::model::{Assign, Branch, Clause, Status};

    let lit_expr = |l: &Literal| match l {
        Literal::Int(i) => Expr::Int(*i),
        Literal::Bool(b) => Expr::Bool(*b),
        Literal::Sym(s) => Expr::Ident(s.clone()),
    };
    let mut sets: Vec<&Vec<(String, Literal)>> = scenario.at.iter().map(|(_, w)| w).collect();
    sets.dedup();
    let mut out = sbt.clone();
    if out.env_update.is_empty() {
        out.env_update.push(Clause {
            guard: Expr::Bool(true),
            branches: vec![Branch {
                writes: vec![],
                status: Status::Success,
            }],
        });
    }
    for clause in &mut out.env_update {
        let mut extra = Vec::new();
        for b in &clause.branches {
            for set in &sets {
                let mut writes: Vec<Assign> = b
                    .writes
                    .iter()
                    .filter(|w| !set.iter().any(|(n, _)| *n == w.target))
                    .cloned()
                    .collect();
                writes.extend(set.iter().map(|(n, l)| Assign {
                    target: n.clone(),
                    value: lit_expr(l),
                }));
                let fb = Branch {
                    writes,
                    status: b.status,
                };
                if !clause.branches.contains(&fb) && !extra.contains(&fb) {
                    extra.push(fb);
                }
            }
        }
        clause.branches.extend(extra);
    }
    out
}
