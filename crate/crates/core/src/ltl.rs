//! Linear temporal logic: syntax, negation normal form and a direct
//! evaluator on ultimately periodic words.

use std::collections::HashMap;
use std::hash::Hash;

use crate::expr::{BinOp, Expr, UnOp};

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Ltl<A> {
    True,
    False,
    Atom(A),
    Not(Box<Ltl<A>>),
    And(Box<Ltl<A>>, Box<Ltl<A>>),
    Or(Box<Ltl<A>>, Box<Ltl<A>>),
    Implies(Box<Ltl<A>>, Box<Ltl<A>>),
    Next(Box<Ltl<A>>),
    Globally(Box<Ltl<A>>),
    Finally(Box<Ltl<A>>),
    Until(Box<Ltl<A>>, Box<Ltl<A>>),
    /// `a M b`: b holds up to and including the first point where a holds, which must exist.
    StrongRelease(Box<Ltl<A>>, Box<Ltl<A>>),
    /// `a R b`, the dual of until. Not part of the surface syntax.
    Release(Box<Ltl<A>>, Box<Ltl<A>>),
}

/// A formula whose atoms are state predicates.
pub type Formula = Ltl<Expr>;

fn bx<A>(f: Ltl<A>) -> Box<Ltl<A>> {
    Box::new(f)
}

impl<A> Ltl<A> {
    pub fn not(a: Ltl<A>) -> Ltl<A> {
        Ltl::Not(bx(a))
    }
    pub fn and(a: Ltl<A>, b: Ltl<A>) -> Ltl<A> {
        Ltl::And(bx(a), bx(b))
    }
    pub fn or(a: Ltl<A>, b: Ltl<A>) -> Ltl<A> {
        Ltl::Or(bx(a), bx(b))
    }
    pub fn implies(a: Ltl<A>, b: Ltl<A>) -> Ltl<A> {
        Ltl::Implies(bx(a), bx(b))
    }
    pub fn next(a: Ltl<A>) -> Ltl<A> {
        Ltl::Next(bx(a))
    }
    pub fn globally(a: Ltl<A>) -> Ltl<A> {
        Ltl::Globally(bx(a))
    }
    pub fn finally(a: Ltl<A>) -> Ltl<A> {
        Ltl::Finally(bx(a))
    }
    pub fn until(a: Ltl<A>, b: Ltl<A>) -> Ltl<A> {
        Ltl::Until(bx(a), bx(b))
    }
    pub fn strong_release(a: Ltl<A>, b: Ltl<A>) -> Ltl<A> {
        Ltl::StrongRelease(bx(a), bx(b))
    }

    pub fn depth(&self) -> usize {
        match self {
            Ltl::True | Ltl::False | Ltl::Atom(_) => 0,
            Ltl::Not(a) | Ltl::Next(a) | Ltl::Globally(a) | Ltl::Finally(a) => 1 + a.depth(),
            Ltl::And(a, b)
            | Ltl::Or(a, b)
            | Ltl::Implies(a, b)
            | Ltl::Until(a, b)
            | Ltl::StrongRelease(a, b)
            | Ltl::Release(a, b) => 1 + a.depth().max(b.depth()),
        }
    }

    pub fn map_atoms<B>(&self, f: &mut impl FnMut(&A) -> B) -> Ltl<B> {
        match self {
            Ltl::True => Ltl::True,
            Ltl::False => Ltl::False,
            Ltl::Atom(a) => Ltl::Atom(f(a)),
            Ltl::Not(a) => Ltl::Not(bx(a.map_atoms(f))),
            Ltl::Next(a) => Ltl::Next(bx(a.map_atoms(f))),
            Ltl::Globally(a) => Ltl::Globally(bx(a.map_atoms(f))),
            Ltl::Finally(a) => Ltl::Finally(bx(a.map_atoms(f))),
            Ltl::And(a, b) => Ltl::And(bx(a.map_atoms(f)), bx(b.map_atoms(f))),
            Ltl::Or(a, b) => Ltl::Or(bx(a.map_atoms(f)), bx(b.map_atoms(f))),
            Ltl::Implies(a, b) => Ltl::Implies(bx(a.map_atoms(f)), bx(b.map_atoms(f))),
            Ltl::Until(a, b) => Ltl::Until(bx(a.map_atoms(f)), bx(b.map_atoms(f))),
            Ltl::StrongRelease(a, b) => Ltl::StrongRelease(bx(a.map_atoms(f)), bx(b.map_atoms(f))),
            Ltl::Release(a, b) => Ltl::Release(bx(a.map_atoms(f)), bx(b.map_atoms(f))),
        }
    }

    fn visit_atoms<'a>(&'a self, f: &mut impl FnMut(&'a A)) {
        match self {
            Ltl::True | Ltl::False => {}
            Ltl::Atom(a) => f(a),
            Ltl::Not(a) | Ltl::Next(a) | Ltl::Globally(a) | Ltl::Finally(a) => a.visit_atoms(f),
            Ltl::And(a, b)
            | Ltl::Or(a, b)
            | Ltl::Implies(a, b)
            | Ltl::Until(a, b)
            | Ltl::StrongRelease(a, b)
            | Ltl::Release(a, b) => {
                a.visit_atoms(f);
                b.visit_atoms(f);
            }
        }
    }
}

impl<A: Clone + Eq + Hash> Ltl<A> {
    /// Distinct atoms in order of first occurrence, and the formula over their indices.
    pub fn index_atoms(&self) -> (Vec<A>, Ltl<usize>) {
        let mut atoms: Vec<A> = Vec::new();
        let mut pos: HashMap<A, usize> = HashMap::new();
        self.visit_atoms(&mut |a| {
            if !pos.contains_key(a) {
                pos.insert(a.clone(), atoms.len());
                atoms.push(a.clone());
            }
        });
        let indexed = self.map_atoms(&mut |a| pos[a]);
        (atoms, indexed)
    }
}

/// Lower a parsed expression into a formula. Boolean connectives and temporal
/// operators become formula structure; every other maximal subexpression is an atom.
pub fn from_expr(e: &Expr) -> Result<Formula, String> {
    Ok(match e {
        Expr::Bool(true) => Ltl::True,
        Expr::Bool(false) => Ltl::False,
        Expr::Unary(UnOp::Not, a) => Ltl::not(from_expr(a)?),
        Expr::Unary(UnOp::Next, a) => Ltl::next(from_expr(a)?),
        Expr::Unary(UnOp::Globally, a) => Ltl::globally(from_expr(a)?),
        Expr::Unary(UnOp::Finally, a) => Ltl::finally(from_expr(a)?),
        Expr::Binary(BinOp::And, a, b) => Ltl::and(from_expr(a)?, from_expr(b)?),
        Expr::Binary(BinOp::Or, a, b) => Ltl::or(from_expr(a)?, from_expr(b)?),
        Expr::Binary(BinOp::Implies, a, b) => Ltl::implies(from_expr(a)?, from_expr(b)?),
        Expr::Binary(BinOp::Until, a, b) => Ltl::until(from_expr(a)?, from_expr(b)?),
        Expr::Binary(BinOp::StrongRelease, a, b) => {
            Ltl::strong_release(from_expr(a)?, from_expr(b)?)
        }
        other => {
            if other.is_temporal() {
                return Err(format!(
                    "temporal operator inside a state predicate: {other}"
                ));
            }
            Ltl::Atom(other.clone())
        }
    })
}

/// Inverse of [`from_expr`] on its image. `Release` has no surface syntax and
/// is printed through its dual.
pub fn to_expr(f: &Formula) -> Expr {
    let u = |op, a: &Formula| Expr::Unary(op, Box::new(to_expr(a)));
    let b = |op, x: &Formula, y: &Formula| Expr::bin(op, to_expr(x), to_expr(y));
    match f {
        Ltl::True => Expr::Bool(true),
        Ltl::False => Expr::Bool(false),
        Ltl::Atom(a) => a.clone(),
        Ltl::Not(a) => u(UnOp::Not, a),
        Ltl::Next(a) => u(UnOp::Next, a),
        Ltl::Globally(a) => u(UnOp::Globally, a),
        Ltl::Finally(a) => u(UnOp::Finally, a),
        Ltl::And(x, y) => b(BinOp::And, x, y),
        Ltl::Or(x, y) => b(BinOp::Or, x, y),
        Ltl::Implies(x, y) => b(BinOp::Implies, x, y),
        Ltl::Until(x, y) => b(BinOp::Until, x, y),
        Ltl::StrongRelease(x, y) => b(BinOp::StrongRelease, x, y),
        Ltl::Release(x, y) => Expr::not(Expr::bin(
            BinOp::Until,
            Expr::not(to_expr(x)),
            Expr::not(to_expr(y)),
        )),
    }
}

/// Negation normal form over indexed atoms: negation only on literals,
/// temporal core restricted to next, until and release.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Nnf {
    True,
    False,
    Lit(usize, bool),
    And(Box<Nnf>, Box<Nnf>),
    Or(Box<Nnf>, Box<Nnf>),
    Next(Box<Nnf>),
    Until(Box<Nnf>, Box<Nnf>),
    Release(Box<Nnf>, Box<Nnf>),
}

pub fn nnf(f: &Ltl<usize>) -> Nnf {
    to_nnf(f, true)
}

fn to_nnf(f: &Ltl<usize>, pos: bool) -> Nnf {
    let b = Box::new;
    match f {
        Ltl::True => {
            if pos {
                Nnf::True
            } else {
                Nnf::False
            }
        }
        Ltl::False => {
            if pos {
                Nnf::False
            } else {
                Nnf::True
            }
        }
        Ltl::Atom(a) => Nnf::Lit(*a, pos),
        Ltl::Not(a) => to_nnf(a, !pos),
        Ltl::And(x, y) => {
            if pos {
                Nnf::And(b(to_nnf(x, true)), b(to_nnf(y, true)))
            } else {
                Nnf::Or(b(to_nnf(x, false)), b(to_nnf(y, false)))
            }
        }
        Ltl::Or(x, y) => {
            if pos {
                Nnf::Or(b(to_nnf(x, true)), b(to_nnf(y, true)))
            } else {
                Nnf::And(b(to_nnf(x, false)), b(to_nnf(y, false)))
            }
        }
        Ltl::Implies(x, y) => {
            if pos {
                Nnf::Or(b(to_nnf(x, false)), b(to_nnf(y, true)))
            } else {
                Nnf::And(b(to_nnf(x, true)), b(to_nnf(y, false)))
            }
        }
        Ltl::Next(a) => Nnf::Next(b(to_nnf(a, pos))),
        // G a = false R a
        Ltl::Globally(a) => {
            if pos {
                Nnf::Release(b(Nnf::False), b(to_nnf(a, true)))
            } else {
                Nnf::Until(b(Nnf::True), b(to_nnf(a, false)))
            }
        }
        // F a = true U a
        Ltl::Finally(a) => {
            if pos {
                Nnf::Until(b(Nnf::True), b(to_nnf(a, true)))
            } else {
                Nnf::Release(b(Nnf::False), b(to_nnf(a, false)))
            }
        }
        Ltl::Until(x, y) => {
            if pos {
                Nnf::Until(b(to_nnf(x, true)), b(to_nnf(y, true)))
            } else {
                Nnf::Release(b(to_nnf(x, false)), b(to_nnf(y, false)))
            }
        }
        Ltl::Release(x, y) => {
            if pos {
                Nnf::Release(b(to_nnf(x, true)), b(to_nnf(y, true)))
            } else {
                Nnf::Until(b(to_nnf(x, false)), b(to_nnf(y, false)))
            }
        }
        // a M b = b U (a & b)
        Ltl::StrongRelease(x, y) => {
            let rewritten = Ltl::Until(y.clone(), Box::new(Ltl::And(x.clone(), y.clone())));
            to_nnf(&rewritten, pos)
        }
    }
}

/// Evaluate a formula on `prefix · cycle^ω`, where each letter is the set of
/// true atoms as a bitmask over atom indices. Works directly on the surface
/// operators via fixpoints over the lasso's positions.
pub fn eval_lasso(f: &Ltl<usize>, prefix: &[u64], cycle: &[u64]) -> bool {
    assert!(!cycle.is_empty(), "lasso cycle must be non-empty");
    let word: Vec<u64> = prefix.iter().chain(cycle.iter()).copied().collect();
    let succ: Vec<usize> = (0..word.len())
        .map(|i| {
            if i + 1 == word.len() {
                prefix.len()
            } else {
                i + 1
            }
        })
        .collect();
    let mut memo: HashMap<*const Ltl<usize>, Vec<bool>> = HashMap::new();
    truth(f, &word, &succ, &mut memo)[0]
}

fn truth(
    f: &Ltl<usize>,
    word: &[u64],
    succ: &[usize],
    memo: &mut HashMap<*const Ltl<usize>, Vec<bool>>,
) -> Vec<bool> {
    if let Some(v) = memo.get(&(f as *const _)) {
        return v.clone();
    }
    let n = word.len();
    let fix = |init: bool, step: &dyn Fn(usize, &[bool]) -> bool| -> Vec<bool> {
        let mut cur = vec![init; n];
        loop {
            let next: Vec<bool> = (0..n).map(|i| step(i, &cur)).collect();
            if next == cur {
                return cur;
            }
            cur = next;
        }
    };
    let out = match f {
        Ltl::True => vec![true; n],
        Ltl::False => vec![false; n],
        Ltl::Atom(a) => word.iter().map(|l| l >> a & 1 == 1).collect(),
        Ltl::Not(a) => truth(a, word, succ, memo).iter().map(|x| !x).collect(),
        Ltl::And(a, b) => {
            let (x, y) = (truth(a, word, succ, memo), truth(b, word, succ, memo));
            x.iter().zip(&y).map(|(p, q)| *p && *q).collect()
        }
        Ltl::Or(a, b) => {
            let (x, y) = (truth(a, word, succ, memo), truth(b, word, succ, memo));
            x.iter().zip(&y).map(|(p, q)| *p || *q).collect()
        }
        Ltl::Implies(a, b) => {
            let (x, y) = (truth(a, word, succ, memo), truth(b, word, succ, memo));
            x.iter().zip(&y).map(|(p, q)| !*p || *q).collect()
        }
        Ltl::Next(a) => {
            let x = truth(a, word, succ, memo);
            (0..n).map(|i| x[succ[i]]).collect()
        }
        Ltl::Globally(a) => {
            let x = truth(a, word, succ, memo);
            fix(true, &|i, cur| x[i] && cur[succ[i]])
        }
        Ltl::Finally(a) => {
            let x = truth(a, word, succ, memo);
            fix(false, &|i, cur| x[i] || cur[succ[i]])
        }
        Ltl::Until(a, b) => {
            let (x, y) = (truth(a, word, succ, memo), truth(b, word, succ, memo));
            fix(false, &|i, cur| y[i] || (x[i] && cur[succ[i]]))
        }
        Ltl::Release(a, b) => {
            let (x, y) = (truth(a, word, succ, memo), truth(b, word, succ, memo));
            fix(true, &|i, cur| y[i] && (x[i] || cur[succ[i]]))
        }
        Ltl::StrongRelease(a, b) => {
            let (x, y) = (truth(a, word, succ, memo), truth(b, word, succ, memo));
            fix(false, &|i, cur| y[i] && (x[i] || cur[succ[i]]))
        }
    };
    memo.insert(f as *const _, out.clone());
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const P: u64 = 0b01;
    const Q: u64 = 0b10;

    fn p() -> Ltl<usize> {
        Ltl::Atom(0)
    }
    fn q() -> Ltl<usize> {
        Ltl::Atom(1)
    }

    #[test]
    fn canonical_lassos() {
        assert!(eval_lasso(&Ltl::globally(p()), &[], &[P]));
        assert!(!eval_lasso(&Ltl::globally(p()), &[], &[P, 0]));
        assert!(eval_lasso(&Ltl::next(p()), &[0], &[P]));
        assert!(eval_lasso(&Ltl::until(p(), q()), &[P, P], &[Q]));
        assert!(!eval_lasso(&Ltl::until(p(), q()), &[P, 0], &[Q]));
        assert!(eval_lasso(&Ltl::finally(p()), &[0, 0], &[P]));
        assert!(!eval_lasso(&Ltl::finally(p()), &[], &[0]));
    }

    #[test]
    fn strong_release_needs_witness() {
        // q M p: p until q&p, and q must happen
        let f = Ltl::strong_release(q(), p());
        assert!(eval_lasso(&f, &[P], &[P | Q]));
        assert!(!eval_lasso(&f, &[], &[P]));
    }

    #[test]
    fn nnf_pushes_negation() {
        let f = Ltl::not(Ltl::globally(Ltl::Atom(0)));
        assert_eq!(
            nnf(&f),
            Nnf::Until(Box::new(Nnf::True), Box::new(Nnf::Lit(0, false)))
        );
    }

    #[test]
    fn lowering_keeps_atoms_whole() {
        let e = Expr::bin(
            BinOp::And,
            Expr::bin(BinOp::Lt, Expr::ident("x"), Expr::Int(3)),
            Expr::Unary(UnOp::Globally, Box::new(Expr::ident("p"))),
        );
        let f = from_expr(&e).unwrap();
        assert_eq!(
            f,
            Ltl::and(
                Ltl::Atom(Expr::bin(BinOp::Lt, Expr::ident("x"), Expr::Int(3))),
                Ltl::globally(Ltl::Atom(Expr::ident("p")))
            )
        );
        assert_eq!(to_expr(&f), e);
    }
}
