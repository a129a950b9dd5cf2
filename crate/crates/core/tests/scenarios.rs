mod common;

use std::collections::BTreeSet;

use btmc_core::composition::{compose, reachable, Btm, ProductState};
use btmc_core::dsl::{parse_monitor, parse_spec, parse_tree, SpecKind};
use btmc_core::expressiveness::nfa_to_bt;
use btmc_core::model::TreeFile;
use btmc_core::monitors::Monitor;
use btmc_core::random::{random_monitor, random_nfa, random_tree_file, ModelShape};
use btmc_core::semantics::{all_traces, trace, FirstChoice, Model, DEFAULT_BRANCHING_LIMIT};
use btmc_core::smv::{parse_smv, var_permutation};
use btmc_core::verifier::{contract, encode, explore, verify_explicit, OptLevel, Outcome, Spec};
use common::*;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

fn grid_file() -> TreeFile {
    parse_tree(&load("grid.bt")).unwrap().value
}

fn grid_btm() -> Btm {
    compose(
        &grid_file(),
        &parse_monitor(&load("budget.mon")).unwrap().value,
    )
    .unwrap()
}

#[test]
fn grid_first_choice_trace() {
    let m = Model::new(&grid_file()).unwrap();
    let obs = trace(&m, 30, &mut FirstChoice).unwrap();
    let at = |name: &str, k: usize| obs[k - 1].valuation[m.var_index(name).unwrap()];
    let loc = |k: usize| (at("loc_x", k), at("loc_y", k));
    // (0,0) -> (1,1), the tree at (2,2) drops the x component, then diagonal
    let path: Vec<_> = (1..=5).map(loc).collect();
    assert_eq!(path, [(1, 1), (1, 2), (2, 3), (3, 4), (4, 4)]);
    // two ticks of loiter, retarget to (4,0) at 8, four moves, loiter again,
    // retarget to (0,4) at 15, first diagonal step lands on the victim
    assert_eq!(loc(12), (4, 0));
    assert_eq!(loc(16), (3, 1));
    let found = (1..=30).find(|&k| at("Vic", k) == 1);
    assert_eq!(found, Some(17));
    assert_eq!((at("dest_x", 17), at("dest_y", 17)), (0, 0));
    // home along (2,0), (1,0), (0,0)
    assert_eq!(loc(20), (0, 0));
    assert_eq!(at("time", 30), 20);
}

#[test]
fn grid_product_size_and_verdicts() {
    let btm = grid_btm();
    let ts = reachable(&btm, 100_000).unwrap();
    // steps 0..=21 with the avoid choice doubling steps 2..=8 (positions
    // differ up to 4, dir differs until the next heading at 9); 22 repeats 21
    assert_eq!(ts.states.len(), 29);
    for item in parse_spec(&load("grid.ltl")).unwrap().value.items {
        let spec = match item.kind {
            SpecKind::Ltl(f) => Spec::Ltl(f),
            SpecKind::Invariant(e) => Spec::Invariant(e),
        };
        let (o, stats) = verify_explicit(&btm, &spec, 100_000).unwrap();
        assert_eq!(o, Outcome::Holds, "{:?}", item.name);
        assert_eq!(stats.states, 29);
    }
}

#[test]
fn nfa_trace_count_matches_word_enumeration() {
    let mut rng = StdRng::seed_from_u64(11);
    for _ in 0..40 {
        let nfa = random_nfa(&mut rng);
        let m = Model::new(&nfa_to_bt(&nfa).unwrap()).unwrap();
        let sigma = nfa.alphabet.len();
        let init: BTreeSet<usize> = nfa.initial.iter().map(|q| nfa.state(q).unwrap()).collect();
        let delta = |s: &BTreeSet<usize>, a: usize| -> BTreeSet<usize> {
            nfa.transitions
                .iter()
                .filter(|(p, b, _)| {
                    s.contains(&nfa.state(p).unwrap()) && nfa.symbol(b).unwrap() == a
                })
                .map(|(_, _, q)| nfa.state(q).unwrap())
                .collect()
        };
        for k in 1..=5 {
            // a k-step trace shows the sets after each symbol and the next
            // symbol on offer, so it is fixed by a word of length k + 1
            let mut keys = BTreeSet::new();
            for code in 0..sigma.pow(k as u32 + 1) {
                let w: Vec<usize> = (0..=k)
                    .map(|i| code / sigma.pow(i as u32) % sigma)
                    .collect();
                let mut s = init.clone();
                let mut key = Vec::new();
                for i in 1..=k {
                    s = delta(&s, w[i - 1]);
                    key.push((s.clone(), w[i]));
                }
                keys.insert(key);
            }
            let n = all_traces(&m, k, DEFAULT_BRANCHING_LIMIT).unwrap().len();
            assert_eq!(n, keys.len(), "k={k} {nfa:?}");
        }
    }
}

fn random_btm(rng: &mut StdRng) -> Option<Btm> {
    let f = random_tree_file(rng, &ModelShape::default());
    let mon = if rng.gen_bool(0.3) {
        Monitor::trivial()
    } else {
        random_monitor(rng, &f)
    };
    compose(&f, &mon).ok()
}

#[test]
fn encodings_contract_to_the_product() {
    let mut rng = StdRng::seed_from_u64(12);
    let mut checked = 0;
    while checked < 30 {
        let Some(btm) = random_btm(&mut rng) else {
            continue;
        };
        let ts = reachable(&btm, 2_000).unwrap();
        if ts.truncated {
            continue;
        }
        let mut product: Vec<(ProductState, Vec<ProductState>)> = ts
            .states
            .iter()
            .zip(&ts.edges)
            .map(|(s, e)| {
                let mut succ: Vec<ProductState> = e.iter().map(|&j| ts.states[j].clone()).collect();
                succ.sort();
                succ.dedup();
                (s.clone(), succ)
            })
            .collect();
        product.sort();
        for level in OptLevel::ALL {
            let enc = encode(&btm, level).unwrap();
            let g = explore(&enc.ir, 1 << 20).unwrap();
            assert!(
                contract(&enc, &g) == product,
                "{} disagrees with the product",
                level.name()
            );
        }
        checked += 1;
    }
}

#[test]
fn encodings_survive_smv_round_trip() {
    let mut rng = StdRng::seed_from_u64(13);
    let mut checked = 0;
    while checked < 20 {
        let Some(btm) = random_btm(&mut rng) else {
            continue;
        };
        for level in OptLevel::ALL {
            let smv = btmc_core::smv::to_smv(&btm, level, &[]).unwrap();
            let re = parse_smv(&smv.text).unwrap();
            let ir = encode(&btm, level).unwrap().ir;
            let vp = var_permutation(&smv.names, &re);
            let mapped = |s: &[i64]| {
                let mut out = vec![0; s.len()];
                for (i, &j) in vp.iter().enumerate() {
                    out[j] = s[i];
                }
                out
            };
            let a = explore(&ir, 1 << 20).unwrap();
            let b = explore(&re, 1 << 20).unwrap();
            let sa: BTreeSet<Vec<i64>> = a.states.iter().map(|s| mapped(s)).collect();
            let sb: BTreeSet<Vec<i64>> = b.states.into_iter().collect();
            assert_eq!(sa, sb, "{}", level.name());
            for (i, s) in a.states.iter().enumerate() {
                let x: BTreeSet<Vec<i64>> =
                    a.edges[i].iter().map(|&j| mapped(&a.states[j])).collect();
                let y: BTreeSet<Vec<i64>> = re
                    .successors(&mapped(s), 1 << 20)
                    .unwrap()
                    .into_iter()
                    .collect();
                assert_eq!(x, y, "{}", level.name());
            }
        }
        checked += 1;
    }
}
