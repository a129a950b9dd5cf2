//! Textual front end: `.bt` tree files, `.mon` monitors, `.ltl` property
//! files and `.scn` fault scenarios. See GRAMMAR.md for the syntax.

mod dot;
mod lexer;
mod parser;
mod printer;

use std::collections::HashMap;
use std::fmt;

use crate::expr::Expr;
use crate::ltl::Formula;
use crate::model::{validate_with, Diagnostic, Loc, TreeFile};
use crate::monitors::Monitor;
use crate::scenario::Scenario;

pub use dot::to_dot;
pub use printer::{
    print_expr, print_formula, print_monitor, print_scenario, print_spec, print_tree,
};

/// Nesting limit for expressions and trees; deeper input is rejected rather
/// than risking stack exhaustion.
pub const MAX_DEPTH: usize = 200;

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("{loc}: expected {expected}, found {found}")]
pub struct ParseError {
    pub loc: Loc,
    pub expected: String,
    pub found: String,
}

impl ParseError {
    pub fn new(loc: Loc, expected: &str, found: &str) -> ParseError {
        ParseError {
            loc,
            expected: expected.to_string(),
            found: found.to_string(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum DslError {
    #[error("{0}")]
    Parse(#[from] ParseError),
    #[error("input is not valid UTF-8")]
    Encoding,
    #[error("{}", .0.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("\n"))]
    Invalid(Vec<Diagnostic>),
}

/// A parsed artifact with any non-fatal diagnostics.
#[derive(Clone, Debug, PartialEq)]
pub struct Parsed<T> {
    pub value: T,
    pub warnings: Vec<Diagnostic>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SpecKind {
    Ltl(Formula),
    Invariant(Expr),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SpecItem {
    pub name: Option<String>,
    pub kind: SpecKind,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SpecFile {
    pub items: Vec<SpecItem>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SourceKind {
    Tree,
    Monitor,
    Spec,
    Scenario,
}

impl SourceKind {
    pub fn from_extension(ext: &str) -> Option<SourceKind> {
        match ext {
            "bt" => Some(SourceKind::Tree),
            "mon" => Some(SourceKind::Monitor),
            "ltl" => Some(SourceKind::Spec),
            "scn" => Some(SourceKind::Scenario),
            _ => None,
        }
    }
}

/// Any parsed artifact, for callers dispatching on file kind.
#[derive(Clone, Debug, PartialEq)]
pub enum SourceFile {
    Tree(TreeFile),
    Monitor(Monitor),
    Spec(SpecFile),
    Scenario(Scenario),
}

/// First source location of each declared or referenced name.
#[derive(Clone, Debug, Default)]
pub struct SourceMap {
    pub decls: HashMap<String, Loc>,
    pub uses: HashMap<String, Loc>,
    pub start: Loc,
}

impl SourceMap {
    pub fn locate(&self, name: &str) -> Loc {
        self.decls
            .get(name)
            .or_else(|| self.uses.get(name))
            .copied()
            .unwrap_or(self.start)
    }

    fn attach(&self, mut d: Diagnostic) -> Diagnostic {
        if d.loc.is_none() {
            d.loc = Some(self.locate(&d.subject));
        }
        d
    }
}

fn split(diags: Vec<Diagnostic>, map: &SourceMap) -> Result<Vec<Diagnostic>, DslError> {
    let diags: Vec<Diagnostic> = diags.into_iter().map(|d| map.attach(d)).collect();
    if diags.iter().any(Diagnostic::is_error) {
        Err(DslError::Invalid(
            diags.into_iter().filter(Diagnostic::is_error).collect(),
        ))
    } else {
        Ok(diags)
    }
}

/// Parse and validate a tree file.
pub fn parse_tree(src: &str) -> Result<Parsed<TreeFile>, DslError> {
    let (file, map, mut diags) = parser::tree_file(src)?;
    diags.extend(validate_with(&file.sbt, file.contingency.as_ref()));
    let warnings = split(diags, &map)?;
    Ok(Parsed {
        value: file,
        warnings,
    })
}

/// Parse a monitor file, or the first `ltl` block of a property file.
/// Atoms are resolved later, against the tree the monitor is composed with.
pub fn parse_monitor(src: &str) -> Result<Parsed<Monitor>, DslError> {
    let (m, map) = parser::monitor_file(src)?;
    let warnings = split(m.structural_diagnostics(), &map)?;
    Ok(Parsed { value: m, warnings })
}

pub fn parse_spec(src: &str) -> Result<Parsed<SpecFile>, DslError> {
    Ok(Parsed {
        value: parser::spec_file(src)?,
        warnings: vec![],
    })
}

pub fn parse_scenario(src: &str) -> Result<Parsed<Scenario>, DslError> {
    Ok(Parsed {
        value: parser::scenario_file(src)?,
        warnings: vec![],
    })
}

/// Standalone expression, mainly for tests and command-line predicates.
pub fn parse_expr(src: &str) -> Result<Expr, DslError> {
    Ok(parser::expr_only(src)?)
}

pub fn parse_formula(src: &str) -> Result<Formula, DslError> {
    let e = parser::expr_only(src)?;
    crate::ltl::from_expr(&e)
        .map_err(|m| DslError::Parse(ParseError::new(Loc { line: 1, col: 1 }, "a formula", &m)))
}

/// Entry point for untrusted bytes: never panics, whatever the input.
pub fn parse_bytes(bytes: &[u8], kind: SourceKind) -> Result<Parsed<SourceFile>, DslError> {
    let src = std::str::from_utf8(bytes).map_err(|_| DslError::Encoding)?;
    Ok(match kind {
        SourceKind::Tree => map_parsed(parse_tree(src)?, SourceFile::Tree),
        SourceKind::Monitor => map_parsed(parse_monitor(src)?, SourceFile::Monitor),
        SourceKind::Spec => map_parsed(parse_spec(src)?, SourceFile::Spec),
        SourceKind::Scenario => map_parsed(parse_scenario(src)?, SourceFile::Scenario),
    })
}

fn map_parsed<T, U>(p: Parsed<T>, f: impl FnOnce(T) -> U) -> Parsed<U> {
    Parsed {
        value: f(p.value),
        warnings: p.warnings,
    }
}

impl fmt::Display for SourceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SourceKind::Tree => "tree",
            SourceKind::Monitor => "monitor",
            SourceKind::Spec => "spec",
            SourceKind::Scenario => "scenario",
        })
    }
}
