//! Invariants as property tests. Structured inputs come from the seeded
//! generators in `btmc_core::random`; proptest drives the seeds.

mod common;

use std::collections::{BTreeSet, HashSet, VecDeque};

use btmc_core::buchi::{accepts_lasso, ltl_to_buchi};
use btmc_core::composition::{compose, reachable, Btm, Mode};
use btmc_core::dsl::{
    parse_bytes, parse_formula, parse_monitor, parse_spec, parse_tree, print_formula, print_spec,
    print_tree, DslError, SourceKind, SpecFile, SpecItem, SpecKind,
};
use btmc_core::ltl::{eval_lasso, Ltl};
use btmc_core::model::{node_index, validate_with, Owner, Severity, Status, TreeFile};
use btmc_core::monitors::{nfa_step, Monitor, MonitorKind};
use btmc_core::random::{
    random_formula, random_ltl, random_monitor, random_tree_file, random_word, ModelShape,
};
use btmc_core::semantics::{
    all_traces, step_all, trace, ChoiceVector, Model, View, DEFAULT_BRANCHING_LIMIT,
};
use btmc_core::smv::to_smv;
use btmc_core::verifier::{check_ltl, OptLevel, Spec};
use common::*;
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

fn tree(seed: u64) -> TreeFile {
    random_tree_file(&mut StdRng::seed_from_u64(seed), &ModelShape::default())
}

fn model(f: &TreeFile) -> Model {
    Model::new(f).expect("generated trees are valid")
}

fn small_btm(seed: u64) -> Option<(TreeFile, Btm, StdRng)> {
    let mut rng = StdRng::seed_from_u64(seed);
    let f = random_tree_file(&mut rng, &ModelShape::default());
    let mon = if rng.gen_bool(0.3) {
        Monitor::trivial()
    } else {
        random_monitor(&mut rng, &f)
    };
    let btm = compose(&f, &mon).ok()?;
    Some((f, btm, rng))
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 128, ..ProptestConfig::default() })]

    // core model

    #[test]
    fn node_index_is_a_bijection(seed in any::<u64>()) {
        let f = tree(seed);
        let idx = node_index(&f.sbt);
        let names: Vec<String> = f.sbt.root.preorder().iter().map(|n| n.name.clone()).collect();
        prop_assert_eq!(&idx.preorder, &names);
        prop_assert_eq!(idx.position.len(), names.len());
        for (i, n) in names.iter().enumerate() {
            prop_assert_eq!(idx.position[n], i);
        }
    }

    #[test]
    fn validation_is_pure(seed in any::<u64>()) {
        let f = tree(seed);
        let a = validate_with(&f.sbt, f.contingency.as_ref());
        let b = validate_with(&f.sbt, f.contingency.as_ref());
        prop_assert_eq!(&a, &b);
        prop_assert!(a.iter().all(|d| d.severity != Severity::Error));
    }

    // dsl

    #[test]
    fn tree_print_parse_is_identity(seed in any::<u64>()) {
        let f = tree(seed);
        let text = print_tree(&f);
        let back = parse_tree(&text).unwrap().value;
        prop_assert_eq!(back, f);
    }

    #[test]
    fn monitor_and_spec_print_parse_is_identity(seed in any::<u64>()) {
        let mut rng = StdRng::seed_from_u64(seed);
        let f = random_tree_file(&mut rng, &ModelShape::default());
        let m = random_monitor(&mut rng, &f);
        prop_assert_eq!(parse_monitor(&btmc_core::dsl::print_monitor(&m)).unwrap().value, m);
        let items = (0..3)
            .map(|i| SpecItem { name: Some(format!("s{i}")), kind: SpecKind::Ltl(random_formula(&mut rng, &f, 2, 2)) })
            .collect();
        let spec = SpecFile { items };
        prop_assert_eq!(parse_spec(&print_spec(&spec)).unwrap().value, spec);
    }

    #[test]
    fn parser_never_panics(bytes in proptest::collection::vec(any::<u8>(), 0..300), k in 0usize..4) {
        let kind = [SourceKind::Tree, SourceKind::Monitor, SourceKind::Spec, SourceKind::Scenario][k];
        let _ = parse_bytes(&bytes, kind);
    }

    #[test]
    fn invalid_models_carry_locations(seed in any::<u64>()) {
        let f = tree(seed);
        let text = print_tree(&f);
        // reuse the first leaf's name for a second declaration
        let leaf = f.sbt.root.preorder().into_iter().find(|n| n.children.is_empty()).unwrap().name.clone();
        let bad = text.replacen("\n  root = ", &format!("\n  action {leaf} {{ when true do return success; }}\n  root = "), 1);
        prop_assume!(bad != text);
        let lines = bad.lines().count() as u32;
        match parse_tree(&bad) {
            Err(DslError::Invalid(ds)) => {
                prop_assert!(!ds.is_empty());
                for d in ds {
                    let l = d.loc.expect("located");
                    prop_assert!(l.line >= 1 && l.line <= lines);
                }
            }
            Err(DslError::Parse(p)) => prop_assert!(p.loc.line <= lines + 1),
            other => prop_assert!(false, "duplicate leaf accepted: {:?}", other.map(|p| p.warnings)),
        }
    }

    // semantics

    #[test]
    fn steps_are_deterministic_in_their_choices(seed in any::<u64>()) {
        let f = tree(seed);
        let m = model(&f);
        let mut rng = StdRng::seed_from_u64(seed ^ 1);
        let mut vals = m.first_initial();
        let mut mem = m.empty_memory();
        for _ in 0..10 {
            let picks: Vec<usize> = (0..16).map(|_| rng.gen_range(0..4)).collect();
            let a = m.step(m.root, &vals, &mem, &mut ChoiceVector::new(picks.clone()));
            let b = m.step(m.root, &vals, &mem, &mut ChoiceVector::new(picks));
            prop_assert_eq!(&a, &b);
            match a {
                Ok(r) => {
                    vals = r.valuation;
                    mem = r.memory;
                }
                Err(_) => break,
            }
        }
    }

    #[test]
    fn frame_status_and_memory_properties(seed in any::<u64>()) {
        let f = tree(seed);
        let m = model(&f);
        let mut ch = RngChooser(StdRng::seed_from_u64(seed));
        let mut vals = m.first_initial();
        let mut mem = m.empty_memory();
        for _ in 0..15 {
            let t = m.tick(m.root, &vals, &mem, &mut ch).unwrap();
            for (i, v) in m.vars.iter().enumerate() {
                if v.owner == Owner::Environment {
                    prop_assert_eq!(t.valuation[i], vals[i], "tick wrote {}", v.name);
                }
            }
            prop_assert_ne!(t.status, Status::Invalid);
            prop_assert_eq!(t.memory.statuses[m.root], t.status);
            for (n, node) in m.nodes.iter().enumerate() {
                let visited = t.memory.statuses[n] != Status::Invalid;
                if let (true, Some(p)) = (visited, node.parent) {
                    prop_assert!(t.memory.statuses[p] != Status::Invalid, "{} visited without its parent", node.name);
                }
                if node.memory && matches!(t.memory.statuses[n], Status::Success | Status::Failure) {
                    prop_assert_eq!(t.memory.resume[n], 0, "{} kept its resume point", node.name);
                }
            }
            let mut after = t.valuation.clone();
            m.env_update(&mut after, &t.memory.statuses, &mut ch).unwrap();
            for (i, v) in m.vars.iter().enumerate() {
                if v.owner == Owner::Blackboard {
                    prop_assert_eq!(after[i], t.valuation[i], "U_E wrote {}", v.name);
                }
            }
            vals = after;
            mem = t.memory;
        }
    }

    #[test]
    fn deterministic_models_have_one_trace(seed in any::<u64>()) {
        let shape = ModelShape { nondeterminism: false, ..ModelShape::default() };
        let f = random_tree_file(&mut StdRng::seed_from_u64(seed), &shape);
        let m = model(&f);
        prop_assume!(m.initial_valuations().len() == 1);
        for k in 0..5 {
            prop_assert_eq!(all_traces(&m, k, DEFAULT_BRANCHING_LIMIT).unwrap().len(), 1);
        }
    }

    #[test]
    fn traces_stay_in_domain(seed in any::<u64>()) {
        let f = tree(seed);
        let m = model(&f);
        let obs = trace(&m, 25, &mut RngChooser(StdRng::seed_from_u64(seed))).unwrap();
        for o in obs {
            for (i, v) in m.vars.iter().enumerate() {
                let (lo, hi) = v.domain.bounds();
                prop_assert!((lo..=hi).contains(&o.valuation[i]));
            }
        }
    }

    // monitors and LTL

    #[test]
    fn nfa_step_distributes_over_union(seed in any::<u64>()) {
        let mut rng = StdRng::seed_from_u64(seed);
        let f = random_tree_file(&mut rng, &ModelShape::default());
        let mon = loop {
            let m = random_monitor(&mut rng, &f);
            if matches!(m, Monitor::Nfa(_)) {
                break m;
            }
        };
        let btm = compose(&f, &mon).unwrap();
        prop_assume!(matches!(btm.monitor.kind, MonitorKind::Nfa { .. }));
        let n = btm.monitor.state_names.len() as u32;
        let m = &btm.model;
        let mut vals = m.first_initial();
        let mut mem = m.empty_memory();
        let mut ch = RngChooser(StdRng::seed_from_u64(seed));
        for _ in 0..5 {
            let r = m.step(m.root, &vals, &mem, &mut ch).unwrap();
            let obs = View { vals: &r.valuation, statuses: &r.memory.statuses };
            let a: Vec<u32> = (0..n).filter(|_| rng.gen_bool(0.5)).collect();
            let b: Vec<u32> = (0..n).filter(|_| rng.gen_bool(0.5)).collect();
            let union: Vec<u32> = a.iter().chain(&b).copied().collect::<BTreeSet<_>>().into_iter().collect();
            let img = |s: &[u32]| nfa_step(&btm.monitor, s, &obs).into_iter().collect::<BTreeSet<_>>();
            let joined: BTreeSet<u32> = img(&a).union(&img(&b)).copied().collect();
            prop_assert_eq!(img(&union), joined);
            vals = r.valuation;
            mem = r.memory;
        }
    }

    #[test]
    fn automaton_matches_lasso_semantics(seed in any::<u64>()) {
        let mut rng = StdRng::seed_from_u64(seed);
        let d = rng.gen_range(0..=3);
        let f = random_ltl(&mut rng, 2, d);
        let (lp, lc) = (rng.gen_range(0..=3), rng.gen_range(1..=3));
        let p = random_word(&mut rng, 2, lp);
        let c = random_word(&mut rng, 2, lc);
        let truth = lasso_oracle(&f, &p, &c);
        prop_assert_eq!(eval_lasso(&f, &p, &c), truth);
        prop_assert_eq!(accepts_lasso(&ltl_to_buchi(&f), &p, &c), truth);
        prop_assert_eq!(eval_lasso(&Ltl::not(f.clone()), &p, &c), !truth);
    }

    // composition

    #[test]
    fn trivial_monitor_projects_onto_the_bare_tree(seed in any::<u64>()) {
        let f = tree(seed);
        let btm = compose(&f, &Monitor::trivial()).unwrap();
        let ts = reachable(&btm, 5_000).unwrap();
        prop_assume!(!ts.truncated);
        let product: BTreeSet<(Vec<i64>, Vec<Status>, Vec<u32>)> = ts
            .states
            .iter()
            .map(|s| (s.valuation.clone(), s.memory.statuses.clone(), s.memory.resume.clone()))
            .collect();
        // joint BFS over the bare tree
        let m = &btm.model;
        let mut seen = HashSet::new();
        let mut queue = VecDeque::new();
        for v in m.initial_valuations() {
            let mem = m.empty_memory();
            if seen.insert((v.clone(), mem.statuses.clone(), mem.resume.clone())) {
                queue.push_back((v, mem));
            }
        }
        while let Some((v, mem)) = queue.pop_front() {
            for (_, r) in step_all(m, m.root, &v, &mem, DEFAULT_BRANCHING_LIMIT).unwrap() {
                let key = (r.valuation.clone(), r.memory.statuses.clone(), r.memory.resume.clone());
                if seen.insert(key) {
                    queue.push_back((r.valuation, r.memory));
                }
            }
        }
        let bare: BTreeSet<_> = seen.into_iter().collect();
        prop_assert_eq!(product, bare);
        prop_assert!(ts.states.iter().all(|s| s.mode == Mode::Nominal));
    }

    #[test]
    fn contingency_latches_and_states_stay_in_domain(seed in any::<u64>()) {
        let Some((_, btm, _)) = small_btm(seed) else { return Ok(()) };
        let ts = reachable(&btm, 5_000).unwrap();
        for (i, s) in ts.states.iter().enumerate() {
            for (j, v) in btm.model.vars.iter().enumerate() {
                let (lo, hi) = v.domain.bounds();
                prop_assert!((lo..=hi).contains(&s.valuation[j]));
            }
            if s.mode != Mode::Nominal {
                for &t in &ts.edges[i] {
                    prop_assert_ne!(ts.states[t].mode, Mode::Nominal);
                }
            }
            if s.mode == Mode::Deadlock {
                prop_assert_eq!(&ts.edges[i], &vec![i]);
            }
        }
    }

    #[test]
    fn reachable_ignores_thread_count(seed in any::<u64>()) {
        let Some((_, btm, _)) = small_btm(seed) else { return Ok(()) };
        let run = |n: usize| {
            rayon::ThreadPoolBuilder::new().num_threads(n).build().unwrap().install(|| reachable(&btm, 5_000).unwrap())
        };
        let (a, b) = (run(1), run(4));
        prop_assert_eq!(a.states, b.states);
        prop_assert_eq!(a.edges, b.edges);
        prop_assert_eq!(a.initial, b.initial);
    }

    // verifier

    #[test]
    fn a_formula_and_its_negation_never_both_hold(seed in any::<u64>()) {
        let Some((f, btm, mut rng)) = small_btm(seed) else { return Ok(()) };
        let ts = reachable(&btm, 5_000).unwrap();
        prop_assume!(!ts.truncated);
        let d = rng.gen_range(0..=3);
        let phi = random_formula(&mut rng, &f, 2, d);
        let pos = check_ltl(&btm, &ts, &phi).unwrap().holds();
        let neg = check_ltl(&btm, &ts, &Ltl::not(phi)).unwrap().holds();
        prop_assert!(!(pos && neg));
        let linear = ts.initial.len() == 1 && ts.edges.iter().all(|e| e.len() == 1);
        if linear {
            prop_assert!(pos != neg);
        }
    }

    // smv

    #[test]
    fn spec_comments_reparse_to_the_formula(seed in any::<u64>()) {
        let Some((f, btm, mut rng)) = small_btm(seed) else { return Ok(()) };
        let phi = random_formula(&mut rng, &f, 2, 3);
        let level = OptLevel::ALL[rng.gen_range(0..4)];
        let m = to_smv(&btm, level, &[Spec::Ltl(phi.clone())]).unwrap();
        let line = m.text.lines().find_map(|l| l.strip_prefix("-- spec: ")).unwrap();
        prop_assert_eq!(line, print_formula(&phi));
        prop_assert_eq!(parse_formula(line).unwrap(), phi);
        prop_assert_eq!(to_smv(&btm, level, &[]).unwrap().text, to_smv(&btm, level, &[]).unwrap().text);
    }
}
