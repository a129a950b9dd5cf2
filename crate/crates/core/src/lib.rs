//! Synchronous behavior trees with contingency monitors: DSL front end, tick
//! semantics, tree-monitor products, explicit-state LTL checking, symbolic
//! encodings with SMV export, and the NFA/TM expressiveness constructions.

#![allow(clippy::should_implement_trait, clippy::type_complexity)]

pub mod buchi;
pub mod composition;
pub mod dsl;
pub mod expr;
pub mod expressiveness;
pub mod ltl;
pub mod model;
pub mod monitors;
pub mod random;
pub mod scenario;
pub mod semantics;
pub mod smv;
pub mod verifier;
