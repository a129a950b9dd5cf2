//! Acceptance gate: nine criteria, one PASS/FAIL line each. Runs without the
//! test harness so the lines always reach stdout; exits non-zero on failure.

mod common;

use std::collections::BTreeSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use btmc_core::buchi::{accepts_lasso, ltl_to_buchi};
use btmc_core::composition::{compose, reachable, simulate_runtime, Btm, Mode, ProductTs};
use btmc_core::dsl::{
    parse_bytes, parse_formula, parse_monitor, parse_scenario, parse_spec, parse_tree,
    print_monitor, print_tree, SourceKind, SpecKind,
};
use btmc_core::expressiveness::{
    nfa_to_bt, ntm_runs, run_word, tm_to_bt, tm_view_of, trace_equiv, Dir, NtmSpec, NtmTransition,
    TmConfig, TmView,
};
use btmc_core::ltl::eval_lasso;
use btmc_core::model::{Status, TreeFile};
use btmc_core::monitors::Monitor;
use btmc_core::random::{
    random_atom, random_formula, random_ir, random_ltl, random_monitor, random_nfa, random_ntm,
    random_tree_file, random_word, ModelShape,
};
use btmc_core::scenario::inject_fault;
use btmc_core::semantics::{all_traces, Model, DEFAULT_BRANCHING_LIMIT};
use btmc_core::smv::{emit, parse_smv};
use btmc_core::verifier::{
    check_ltl, check_ltl_scc, compile_formula, kripke, replay, verify_at_level, verify_explicit,
    Ir, OptLevel, Outcome, Spec, Trace, Verdict,
};
use common::*;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

type Outcome9 = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn random_btm(rng: &mut StdRng, shape: &ModelShape) -> Option<(TreeFile, Btm)> {
    let f = random_tree_file(rng, shape);
    let mon = if rng.gen_bool(0.3) {
        Monitor::trivial()
    } else {
        random_monitor(rng, &f)
    };
    let btm = compose(&f, &mon).ok()?;
    Some((f, btm))
}

fn grid() -> (TreeFile, Btm) {
    let f = parse_tree(&load("grid.bt")).unwrap().value;
    let m = parse_monitor(&load("budget.mon")).unwrap().value;
    let b = compose(&f, &m).unwrap();
    (f, b)
}

fn grid_specs() -> Vec<Spec> {
    parse_spec(&load("grid.ltl"))
        .unwrap()
        .value
        .items
        .into_iter()
        .map(|i| match i.kind {
            SpecKind::Ltl(f) => Spec::Ltl(f),
            SpecKind::Invariant(e) => Spec::Invariant(e),
        })
        .collect()
}

// 1 -------------------------------------------------------------------------

fn ltl_oracle_agreement() -> Outcome9 {
    let mut rng = StdRng::seed_from_u64(1);
    let n = 1000;
    let mut mismatches = Vec::new();
    let mut accepted = 0;
    for _ in 0..n {
        let f = {
            let d = rng.gen_range(0..=3);
            random_ltl(&mut rng, 2, d)
        };
        let p = {
            let d = rng.gen_range(0..=3);
            random_word(&mut rng, 2, d)
        };
        let c = {
            let d = rng.gen_range(1..=3);
            random_word(&mut rng, 2, d)
        };
        let by_automaton = accepts_lasso(&ltl_to_buchi(&f), &p, &c);
        let by_eval = eval_lasso(&f, &p, &c);
        let by_walk = lasso_oracle(&f, &p, &c);
        accepted += by_walk as usize;
        if by_automaton != by_walk || by_eval != by_walk {
            mismatches.push(format!("{f:?} on {p:?}({c:?})^w"));
        }
    }
    ensure(mismatches.is_empty(), || {
        format!("{} mismatches, first {}", mismatches.len(), mismatches[0])
    })?;
    Ok(format!("{n} pairs, {accepted} accepted, 0 mismatches"))
}

// 2 -------------------------------------------------------------------------

fn lasso_is_path(ts: &ProductTs, l: &btmc_core::verifier::Lasso) -> bool {
    let all: Vec<usize> = l.states().copied().collect();
    !l.cycle.is_empty()
        && ts.initial.contains(&all[0])
        && all.windows(2).all(|w| ts.edges[w[0]].contains(&w[1]))
        && ts.edges[*l.cycle.last().unwrap()].contains(&l.cycle[0])
}

fn model_checking_agreement(traces: &mut Vec<(Btm, Trace)>) -> Outcome9 {
    let mut rng = StdRng::seed_from_u64(2);
    let small = ModelShape {
        max_leaves: 4,
        ..ModelShape::default()
    };
    let large = ModelShape {
        max_blackboard: 4,
        max_environment: 3,
        max_leaves: 7,
        max_depth: 4,
        ..ModelShape::default()
    };
    let (mut done, mut violated, mut enum_hits) = (0, 0, 0);
    let mut sizes = Vec::new();
    let mut draws = 0;
    while done < 250 {
        draws += 1;
        ensure(draws < 20_000, || {
            format!("only {done} usable products after {draws} draws")
        })?;
        let shape = if done % 4 == 0 { small } else { large };
        let Some((f, btm)) = random_btm(&mut rng, &shape) else {
            continue;
        };
        let Ok(ts) = reachable(&btm, 200) else {
            continue;
        };
        // keep most instances away from the trivial end
        if shape.max_leaves > 4 && ts.states.len() < 20 {
            continue;
        }
        if ts.truncated {
            continue;
        }
        sizes.push(ts.states.len());
        let phi = {
            let d = rng.gen_range(0..=3);
            random_formula(&mut rng, &f, 2, d)
        };
        let cf = compile_formula(&btm, &phi).map_err(|e| e.to_string())?;
        let k = kripke(&btm, &ts, &cf.atoms);
        let v = check_ltl(&btm, &ts, &phi).map_err(|e| e.to_string())?;
        let holds = tableau_holds(&k.initial, &k.succ, &k.labels, cf.atoms.len(), &cf.formula);
        ensure(v.holds() == holds, || {
            format!("check_ltl {} but tableau {} for {phi:?}", v.holds(), holds)
        })?;
        ensure(check_ltl_scc(&btm, &ts, &phi).unwrap() == holds, || {
            format!("SCC check disagrees on {phi:?}")
        })?;
        let word = |ids: &[usize]| ids.iter().map(|&i| k.labels[i]).collect::<Vec<_>>();
        let bad = enumerate_lassos(&k.initial, &k.succ, 5, 5_000)
            .into_iter()
            .find(|(p, c)| !lasso_oracle(&cf.formula, &word(p), &word(c)));
        if let Some((p, c)) = &bad {
            enum_hits += 1;
            ensure(!holds, || {
                format!("enumerated lasso {p:?}{c:?} violates {phi:?} but check_ltl holds")
            })?;
        }
        if let Verdict::Violated(l) = &v {
            violated += 1;
            ensure(lasso_is_path(&ts, l), || {
                "counterexample is not a path of the product".into()
            })?;
            ensure(
                !lasso_oracle(&cf.formula, &word(&l.prefix), &word(&l.cycle)),
                || format!("counterexample satisfies {phi:?}"),
            )?;
            traces.push((btm.clone(), Trace::from_ids(&ts, &v).unwrap()));
        }
        done += 1;
    }
    Ok(format!(
        "{done} products ({}..{} states, mean {:.0}), {violated} violated, {enum_hits} also found by lasso enumeration, 0 disagreements",
        sizes.iter().min().unwrap(),
        sizes.iter().max().unwrap(),
        sizes.iter().sum::<usize>() as f64 / sizes.len() as f64
    ))
}

// 3 -------------------------------------------------------------------------

fn counterexample_replay(mut traces: Vec<(Btm, Trace)>) -> Outcome9 {
    let mut rng = StdRng::seed_from_u64(3);
    let shape = ModelShape::default();
    let from_mc = traces.len();
    let mut models = 0;
    while models < 150 {
        let Some((f, btm)) = random_btm(&mut rng, &shape) else {
            continue;
        };
        let Ok(ts) = reachable(&btm, 20_000) else {
            continue;
        };
        if ts.truncated {
            continue;
        }
        models += 1;
        let specs = [
            Spec::Ltl({
                let d = rng.gen_range(1..=3);
                random_formula(&mut rng, &f, 2, d)
            }),
            Spec::Invariant(random_atom(&mut rng, &f)),
        ];
        for spec in &specs {
            if let Ok((Outcome::Violated(t), _)) = verify_explicit(&btm, spec, 20_000) {
                traces.push((btm.clone(), t));
            }
            let level = OptLevel::ALL[rng.gen_range(0..4)];
            if let Ok((Outcome::Violated(t), _)) = verify_at_level(&btm, spec, level, 200_000) {
                traces.push((btm.clone(), t));
            }
        }
    }
    let failed: Vec<String> = traces
        .iter()
        .filter_map(|(b, t)| replay(b, t).err())
        .collect();
    ensure(traces.len() >= 100, || {
        format!("only {} counterexamples", traces.len())
    })?;
    ensure(failed.is_empty(), || {
        format!("{} of {} failed: {}", failed.len(), traces.len(), failed[0])
    })?;
    Ok(format!(
        "{} counterexamples ({from_mc} from criterion 2), all replay",
        traces.len()
    ))
}

// 4 -------------------------------------------------------------------------

fn level_invariance() -> Outcome9 {
    let mut instances: Vec<(String, Btm, Vec<Spec>)> = vec![{
        let (_, b) = grid();
        ("grid".into(), b, grid_specs())
    }];
    let mut rng = StdRng::seed_from_u64(4);
    while instances.len() < 26 {
        let shape = ModelShape {
            max_blackboard: 4,
            max_environment: 3,
            max_leaves: 7,
            max_depth: 4,
            ..ModelShape::default()
        };
        let Some((f, btm)) = random_btm(&mut rng, &shape) else {
            continue;
        };
        match reachable(&btm, 20_000) {
            Ok(ts) if !ts.truncated && ts.states.len() >= 20 => {}
            _ => continue,
        }
        let mut specs: Vec<Spec> = (0..3)
            .map(|_| {
                Spec::Ltl({
                    let d = rng.gen_range(1..=3);
                    random_formula(&mut rng, &f, 2, d)
                })
            })
            .collect();
        specs.push(Spec::Invariant(random_atom(&mut rng, &f)));
        instances.push((format!("random#{}", instances.len()), btm, specs));
    }
    let mut checks = 0;
    let mut totals = [0usize; 4];
    for (name, btm, specs) in &instances {
        let mut counts = [0usize; 4];
        for spec in specs {
            let (base, _) =
                verify_explicit(btm, spec, 1_000_000).map_err(|e| format!("{name}: {e}"))?;
            for (i, l) in OptLevel::ALL.into_iter().enumerate() {
                let (o, stats) = verify_at_level(btm, spec, l, 5_000_000)
                    .map_err(|e| format!("{name} {}: {e}", l.name()))?;
                ensure(
                    matches!(o, Outcome::Holds) == matches!(base, Outcome::Holds),
                    || {
                        format!(
                            "{name}: {} disagrees with the explicit product on {spec:?}",
                            l.name()
                        )
                    },
                )?;
                counts[i] = stats.states;
                checks += 1;
            }
        }
        ensure(counts[0] >= counts[1] && counts[2] >= counts[3], || {
            format!("{name}: state counts {counts:?}")
        })?;
        totals.iter_mut().zip(counts).for_each(|(t, c)| *t += c);
    }
    Ok(format!(
        "grid + {} random models, {checks} level verdicts agree, state counts ordered (totals no/first/last/full {totals:?})",
        instances.len() - 1
    ))
}

// 5 -------------------------------------------------------------------------

fn all_words(max: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    let mut layer = vec![vec![]];
    for _ in 0..max {
        layer = layer
            .iter()
            .flat_map(|w: &Vec<usize>| (0..2).map(move |a| [w.clone(), vec![a]].concat()))
            .collect();
        out.extend(layer.clone());
    }
    out
}

fn nfa_fidelity() -> Outcome9 {
    let mut rng = StdRng::seed_from_u64(5);
    let words = all_words(5);
    let mut checked = 0;
    for i in 0..50 {
        let nfa = random_nfa(&mut rng);
        let idx = |s: &String| nfa.states.iter().position(|x| x == s).unwrap();
        let sym = |s: &String| nfa.alphabet.iter().position(|x| x == s).unwrap();
        let init: Vec<usize> = nfa.initial.iter().map(idx).collect();
        let acc: Vec<usize> = nfa.accepting.iter().map(idx).collect();
        let delta: Vec<(usize, usize, usize)> = nfa
            .transitions
            .iter()
            .map(|(p, a, q)| (idx(p), sym(a), idx(q)))
            .collect();
        let tree = nfa_to_bt(&nfa)?;
        let direct = Model::new(&tree).map_err(|d| format!("nfa {i}: {d:?}"))?;
        let reparsed = Model::new(
            &parse_tree(&print_tree(&tree))
                .map_err(|e| e.to_string())?
                .value,
        )
        .unwrap();
        for w in &words {
            let expect: Vec<Status> =
                nfa_prefix_acceptance(nfa.states.len(), &init, &acc, &delta, w)
                    .into_iter()
                    .map(|a| if a { Status::Success } else { Status::Failure })
                    .collect();
            for m in [&direct, &reparsed] {
                let got = run_word(m, w).map_err(|e| e.to_string())?;
                ensure(got == expect, || {
                    format!("nfa {i} word {w:?}: {got:?} vs {expect:?}")
                })?;
            }
            checked += 1;
        }
    }
    Ok(format!(
        "50 NFAs x {} words, {checked} prefix sequences match",
        words.len()
    ))
}

// 6 -------------------------------------------------------------------------

fn unary_increment() -> NtmSpec {
    let t = |from: &str, read: &str, to: &str, write: &str, dir| NtmTransition {
        from: from.into(),
        read: read.into(),
        to: to.into(),
        write: write.into(),
        dir,
    };
    NtmSpec {
        states: vec!["scan".into(), "back".into(), "acc".into()],
        alphabet: vec!["_".into(), "1".into()],
        blank: "_".into(),
        initial: "scan".into(),
        accepting: vec!["acc".into()],
        transitions: vec![
            t("scan", "1", "scan", "1", Dir::R),
            t("scan", "_", "back", "1", Dir::L),
            t("back", "1", "back", "1", Dir::L),
            t("back", "_", "acc", "_", Dir::R),
        ],
        input: vec!["1".into(), "1".into()],
        tape_bound: 4,
    }
}

/// Compare tree runs against both simulators; `None` when the run set is
/// too large to enumerate.
fn tm_check(spec: &NtmSpec, k: usize) -> Result<Option<usize>, String> {
    let ntm = spec.compile()?;
    let input = spec.input_digits(&ntm)?;
    let oracle = abs_runs(
        &ntm,
        spec.tape_bound,
        &AbsConfig::new(ntm.initial, &input),
        k,
    );
    if oracle.len() > 4_000 {
        return Ok(None);
    }
    let lib: BTreeSet<Vec<TmView>> =
        ntm_runs(&ntm, spec.tape_bound, &TmConfig::initial(&ntm, &input), k)
            .into_iter()
            .map(|r| r.iter().map(TmConfig::view).collect())
            .collect();
    ensure(lib == oracle, || {
        "library simulator differs from the absolute-tape oracle".into()
    })?;
    let model =
        Model::new(&tm_to_bt(&ntm, spec.tape_bound, &input)?).map_err(|d| format!("{d:?}"))?;
    let traces = all_traces(&model, k, DEFAULT_BRANCHING_LIMIT).map_err(|e| e.to_string())?;
    let tree: BTreeSet<Vec<TmView>> = traces
        .iter()
        .map(|t| t.iter().map(|o| tm_view_of(&model, &ntm, o)).collect())
        .collect();
    let oracle_v: Vec<Vec<TmView>> = oracle.iter().cloned().collect();
    for t in &traces {
        ensure(
            oracle_v
                .iter()
                .any(|o| trace_equiv(t, o, |x| tm_view_of(&model, &ntm, x), |y| y.clone())),
            || "a tree trace has no simulator counterpart".into(),
        )?;
    }
    ensure(tree == oracle, || {
        format!(
            "{} tree runs vs {} simulator runs",
            tree.len(),
            oracle.len()
        )
    })?;
    Ok(Some(oracle.len()))
}

fn tm_fidelity() -> Outcome9 {
    let inc = unary_increment();
    let n = tm_check(&inc, 8)?.ok_or("increment run set too large")?;
    let ntm = inc.compile()?;
    let model = Model::new(&tm_to_bt(&ntm, inc.tape_bound, &inc.input_digits(&ntm)?)?).unwrap();
    let last = btmc_core::semantics::trace(&model, 8, &mut btmc_core::semantics::FirstChoice)
        .map_err(|e| e.to_string())?;
    let fin = tm_view_of(&model, &ntm, last.last().unwrap());
    ensure(
        fin.state == 2 && fin.tape.as_ref().map(|t| t.render(&ntm.symbols)) == Some("111".into()),
        || format!("increment ends in {fin:?}"),
    )?;
    let mut rng = StdRng::seed_from_u64(6);
    let (mut accepted, mut oversized, mut deterministic, mut sizes) = (0, 0, 0, vec![n]);
    while accepted < 3 {
        let mut spec = random_ntm(&mut rng);
        spec.input = (0..rng.gen_range(0..=2))
            .map(|_| spec.alphabet[rng.gen_range(0..2)].clone())
            .collect();
        match tm_check(&spec, 8)? {
            // a single run says nothing about branching
            Some(1) => deterministic += 1,
            Some(s) => {
                accepted += 1;
                sizes.push(s);
            }
            None => oversized += 1,
        }
    }
    Ok(format!(
        "unary increment + 3 branching random NTMs, 8-step run sets {sizes:?} equal \
         (skipped {deterministic} single-run and {oversized} oversized seeds)"
    ))
}

// 7 -------------------------------------------------------------------------

fn permute(perm: &[usize], v: &[i64], len: usize) -> Vec<i64> {
    let mut out = vec![0; len];
    for (i, &j) in perm.iter().enumerate() {
        out[j] = v[i];
    }
    out
}

fn smv_roundtrip(ir: &Ir, rng: &mut StdRng) -> Result<(), String> {
    let a = emit(ir, "rt", &[]);
    let b = emit(ir, "rt", &[]);
    ensure(a.text == b.text, || "export is not deterministic".into())?;
    let re = parse_smv(&a.text).map_err(|e| format!("{e}\n{}", a.text))?;
    ensure(
        re.vars.len() == ir.vars.len() && re.inputs.len() == ir.inputs.len(),
        || "shape changed".into(),
    )?;
    let vp: Vec<usize> = a
        .names
        .vars
        .iter()
        .map(|n| re.var_index(n).unwrap())
        .collect();
    let ip: Vec<usize> = a
        .names
        .inputs
        .iter()
        .map(|n| re.inputs.iter().position(|v| &v.name == n).unwrap())
        .collect();
    let mut init: Vec<Vec<i64>> = ir
        .initial_states()
        .iter()
        .map(|s| permute(&vp, s, vp.len()))
        .collect();
    let mut re_init = re.initial_states();
    init.sort();
    re_init.sort();
    ensure(init == re_init, || "initial states differ".into())?;
    for s0 in ir.initial_states().into_iter().take(3) {
        let mut s = s0;
        for _ in 0..20 {
            let inp: Vec<i64> = ir
                .inputs
                .iter()
                .map(|v| rng.gen_range(0..=ir.bounds(&v.ty).1))
                .collect();
            let next = ir.step(&s, &inp).map_err(|e| e.to_string())?;
            let re_next = re
                .step(&permute(&vp, &s, vp.len()), &permute(&ip, &inp, ip.len()))
                .map_err(|e| e.to_string())?;
            ensure(re_next == permute(&vp, &next, vp.len()), || {
                "step differs after re-import".into()
            })?;
            let mut x: Vec<Vec<i64>> = ir
                .successors(&s, 1 << 16)
                .unwrap()
                .iter()
                .map(|t| permute(&vp, t, vp.len()))
                .collect();
            let mut y = re.successors(&permute(&vp, &s, vp.len()), 1 << 16).unwrap();
            x.sort();
            y.sort();
            ensure(x == y, || "successor sets differ after re-import".into())?;
            s = next;
        }
    }
    Ok(())
}

fn round_trips() -> Outcome9 {
    let mut rng = StdRng::seed_from_u64(7);
    for i in 0..100 {
        let f = random_tree_file(&mut rng, &ModelShape::default());
        let text = print_tree(&f);
        let back = parse_tree(&text)
            .map_err(|e| format!("model {i}: {e}\n{text}"))?
            .value;
        ensure(back == f, || format!("model {i} changed under print/parse"))?;
        ensure(print_tree(&back) == text, || {
            format!("model {i} printed differently")
        })?;
        let m = random_monitor(&mut rng, &f);
        let mt = print_monitor(&m);
        let mb = parse_monitor(&mt)
            .map_err(|e| format!("monitor {i}: {e}\n{mt}"))?
            .value;
        ensure(mb == m, || format!("monitor {i} changed under print/parse"))?;
    }
    for i in 0..100 {
        let ir = random_ir(&mut rng);
        smv_roundtrip(&ir, &mut rng).map_err(|e| format!("ir {i}: {e}"))?;
    }
    Ok("100 models + 100 monitors print/parse to identity; 100 IRs export deterministically and re-import step-equal".into())
}

// 8 -------------------------------------------------------------------------

fn monitor_comparison() -> Outcome9 {
    let f = parse_tree(&load("grid.bt")).unwrap().value;
    let watch = parse_monitor(&load("watch.mon")).unwrap().value;
    let scn = parse_scenario(&load("teleport.scn")).unwrap().value;

    let runtime = compose(&f, &watch).map_err(|d| format!("{d:?}"))?;
    let compiled = scn.compile(&runtime.model).map_err(|d| format!("{d:?}"))?;
    let report = simulate_runtime(
        &runtime,
        &compiled,
        12,
        &mut btmc_core::semantics::FirstChoice,
    );
    let latency = report.latency().ok_or("runtime monitor missed the fault")?;
    let flipped = &report.trajectory[report.detected_at.unwrap() as usize];
    ensure(flipped.mode == Mode::Contingency, || {
        "detection is not a contingency flip".into()
    })?;

    let injected = TreeFile {
        sbt: inject_fault(&f.sbt, &scn),
        contingency: f.contingency.clone(),
    };
    let design = compose(&injected, &watch).map_err(|d| format!("{d:?}"))?;
    let phi = parse_formula("G !contingency").unwrap();
    let (o, stats) =
        verify_explicit(&design, &Spec::Ltl(phi.clone()), 1_000_000).map_err(|e| e.to_string())?;
    let Outcome::Violated(t) = o else {
        return Err("design-time check missed the fault".into());
    };
    replay(&design, &t)?;
    let states: Vec<_> = t.states().collect();
    let flip = states
        .windows(2)
        .position(|w| w[0].mode == Mode::Nominal && w[1].mode == Mode::Contingency);
    ensure(flip.is_some(), || {
        "lasso never flips into contingency".into()
    })?;
    // the nominal model satisfies the same formula
    let nominal = compose(&f, &watch).unwrap();
    let (o2, _) =
        verify_explicit(&nominal, &Spec::Ltl(phi), 1_000_000).map_err(|e| e.to_string())?;
    ensure(o2 == Outcome::Holds, || {
        "nominal model already violates G !contingency".into()
    })?;
    Ok(format!(
        "runtime latency {latency} (injected at {}, detected at {}); design time Violated over {} states, lasso flips at position {}",
        report.injected_at.unwrap(),
        report.detected_at.unwrap(),
        stats.states,
        flip.unwrap() + 1
    ))
}

// 9 -------------------------------------------------------------------------

fn mutate(rng: &mut StdRng, src: &[u8]) -> Vec<u8> {
    let mut v = src.to_vec();
    for _ in 0..rng.gen_range(1..=4) {
        let n = v.len();
        match rng.gen_range(0..5) {
            0 if n > 0 => {
                let i = rng.gen_range(0..n);
                v[i] = rng.gen();
            }
            1 if n > 0 => {
                let i = rng.gen_range(0..n);
                v.remove(i);
            }
            2 => {
                let i = rng.gen_range(0..=n);
                let b = *b"{}();,=-+*/%!&|<>.:#\n x0123456789"
                    .get(rng.gen_range(0..33))
                    .unwrap();
                v.insert(i, b);
            }
            3 if n > 0 => v.truncate(rng.gen_range(0..n)),
            _ if n > 1 => {
                let i = rng.gen_range(0..n);
                let j = rng.gen_range(i..n);
                let chunk = v[i..j].to_vec();
                let at = rng.gen_range(0..=v.len());
                v.splice(at..at, chunk);
            }
            _ => {}
        }
    }
    v
}

fn fuzz_robustness() -> Outcome9 {
    let mut rng = StdRng::seed_from_u64(9);
    let seeds: Vec<(Vec<u8>, SourceKind)> = [
        ("grid.bt", SourceKind::Tree),
        ("budget.mon", SourceKind::Monitor),
        ("watch.mon", SourceKind::Monitor),
        ("grid.ltl", SourceKind::Spec),
        ("teleport.scn", SourceKind::Scenario),
    ]
    .into_iter()
    .map(|(n, k)| (load(n).into_bytes(), k))
    .collect();
    let kinds = [
        SourceKind::Tree,
        SourceKind::Monitor,
        SourceKind::Spec,
        SourceKind::Scenario,
    ];
    let hook = std::panic::take_hook();
    std::panic::set_hook(Box::new(|_| {}));
    let (mut crashes, mut accepted) = (Vec::new(), 0);
    for i in 0..100_000 {
        let (bytes, kind) = if i % 2 == 0 {
            let len = rng.gen_range(0..200);
            (
                (0..len).map(|_| rng.gen()).collect::<Vec<u8>>(),
                kinds[rng.gen_range(0..4)],
            )
        } else {
            let (s, k) = &seeds[rng.gen_range(0..seeds.len())];
            (mutate(&mut rng, s), *k)
        };
        match catch_unwind(AssertUnwindSafe(|| parse_bytes(&bytes, kind).is_ok())) {
            Ok(ok) => accepted += ok as usize,
            Err(_) => crashes.push(bytes),
        }
    }
    std::panic::set_hook(hook);
    ensure(crashes.is_empty(), || {
        format!(
            "{} parser panics, first on {:?}",
            crashes.len(),
            String::from_utf8_lossy(&crashes[0])
        )
    })?;

    let mut steps = 0;
    for m in 0..10_000 {
        let f = random_tree_file(&mut rng, &ModelShape::default());
        let model = Model::new(&f).map_err(|d| format!("model {m}: {d:?}"))?;
        let mut ch = RngChooser(StdRng::seed_from_u64(m));
        let mut vals =
            model.initial_valuations()[rng.gen_range(0..model.initial_valuations().len())].clone();
        let mut mem = model.empty_memory();
        for k in 0..20 {
            let r = model
                .step(model.root, &vals, &mem, &mut ch)
                .map_err(|e| format!("model {m} step {k}: {e}"))?;
            for (i, v) in model.vars.iter().enumerate() {
                let (lo, hi) = v.domain.bounds();
                ensure((lo..=hi).contains(&r.valuation[i]), || {
                    format!(
                        "model {m} step {k}: {} = {} outside {lo}..{hi}",
                        v.name, r.valuation[i]
                    )
                })?;
            }
            vals = r.valuation;
            mem = r.memory;
            steps += 1;
        }
    }
    Ok(format!("100000 inputs ({accepted} accepted), 0 panics; 10000 models x 20 steps = {steps} steps in domain"))
}

fn main() {
    let t0 = Instant::now();
    let mut traces = Vec::new();
    let mut results: Vec<(&str, Outcome9, f64)> = Vec::new();
    let mut run = |name: &'static str, f: &mut dyn FnMut() -> Outcome9| {
        let t = Instant::now();
        let r = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            Err(e
                .downcast_ref::<String>()
                .cloned()
                .or(e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or("panic".into()))
        });
        let secs = t.elapsed().as_secs_f64();
        let (tag, msg) = match &r {
            Ok(m) => ("PASS", m.clone()),
            Err(m) => ("FAIL", m.clone()),
        };
        println!("[{tag}] {name} ({secs:.1}s): {msg}");
        results.push((name, r, secs));
    };
    run("1 LTL oracle agreement", &mut ltl_oracle_agreement);
    run("2 model-checking oracle agreement", &mut || {
        model_checking_agreement(&mut traces)
    });
    let collected = std::mem::take(&mut traces);
    let mut collected = Some(collected);
    run("3 counterexample replay", &mut || {
        counterexample_replay(collected.take().unwrap_or_default())
    });
    run("4 optimization-level invariance", &mut level_invariance);
    run("5 NFA construction fidelity", &mut nfa_fidelity);
    run("6 TM construction fidelity", &mut tm_fidelity);
    run("7 round trips", &mut round_trips);
    run("8 monitor comparison", &mut monitor_comparison);
    run("9 fuzz robustness", &mut fuzz_robustness);
    let failed = results.iter().filter(|r| r.1.is_err()).count();
    println!(
        "acceptance: {} passed, {failed} failed in {:.1}s",
        results.len() - failed,
        t0.elapsed().as_secs_f64()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
