use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use btmc_core::composition::{compose, simulate_runtime, Btm, DEFAULT_STATE_LIMIT};
use btmc_core::dsl::{
    parse_bytes, parse_formula, parse_monitor, parse_scenario, parse_spec, parse_tree, print_expr,
    print_formula, to_dot, DslError, SourceFile, SourceKind, SpecKind,
};
use btmc_core::expressiveness::{nfa_fixtures, tm_fixtures, NfaSpec, NtmSpec};
use btmc_core::model::{Diagnostic, TreeFile};
use btmc_core::monitors::Monitor;
use btmc_core::scenario::{CompiledScenario, Scenario};
use btmc_core::semantics::{all_traces, FirstChoice, SemError, DEFAULT_BRANCHING_LIMIT};
use btmc_core::smv::{parse_smv, to_smv};
use btmc_core::verifier::{
    replay, verify_at_level, verify_explicit, OptLevel, Outcome, Spec, Stats, VerifyError,
};
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

// stdout writes that end the process quietly when the reader goes away
macro_rules! emit {
    ($mac:ident, $($t:tt)*) => {{
        use std::io::Write;
        if let Err(e) = $mac!(std::io::stdout().lock(), $($t)*) {
            if e.kind() == std::io::ErrorKind::BrokenPipe {
                std::process::exit(0);
            }
            eprintln!("error: {e}");
            std::process::exit(1);
        }
    }};
}

macro_rules! outln {
    ($($t:tt)*) => { emit!(writeln, $($t)*) };
}

macro_rules! out {
    ($($t:tt)*) => { emit!(write, $($t)*) };
}

#[derive(Parser)]
#[command(
    name = "btmc",
    version,
    about = "Behavior trees with contingency monitors"
)]
struct Cli {
    #[arg(long, value_enum, default_value_t = Format::Text, global = true)]
    format: Format,
    /// Worker threads for parallel stages.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Resolver {
    First,
    Enumerate,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Engine {
    Internal,
    SmvExport,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum GenKind {
    Nfa,
    Tm,
}

#[derive(Subcommand)]
enum Cmd {
    /// Parse and validate a .bt, .mon, .ltl or .scn file.
    Parse {
        file: PathBuf,
        /// Write the tree as Graphviz DOT.
        #[arg(long)]
        dot: Option<PathBuf>,
    },
    /// Run a tree and print one JSON line per step.
    Simulate {
        tree: PathBuf,
        #[arg(long)]
        monitor: Option<PathBuf>,
        #[arg(long)]
        scenario: Option<PathBuf>,
        #[arg(long, default_value_t = 10)]
        steps: u32,
        #[arg(long, value_enum, default_value_t = Resolver::First)]
        resolver: Resolver,
    },
    /// Model-check the composed system.
    Verify {
        tree: PathBuf,
        #[arg(long)]
        monitor: Option<PathBuf>,
        /// A .ltl file, or an inline formula.
        #[arg(long)]
        spec: String,
        #[arg(long, value_parser = parse_level)]
        opt_level: Option<OptLevel>,
        #[arg(long, value_enum, default_value_t = Engine::Internal)]
        engine: Engine,
    },
    /// Emit the composed system as an SMV model.
    ExportSmv {
        tree: PathBuf,
        #[arg(long)]
        monitor: Option<PathBuf>,
        #[arg(long)]
        spec: Option<String>,
        #[arg(long, value_parser = parse_level, default_value = "full")]
        opt_level: OptLevel,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Generate construction fixtures from a JSON automaton description.
    Gen {
        kind: GenKind,
        spec: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
    },
}

fn parse_level(s: &str) -> Result<OptLevel, String> {
    OptLevel::parse(s)
        .ok_or_else(|| format!("unknown level `{s}`; expected no, first, last or full"))
}

/// Failure with its exit code.
struct Fail {
    code: u8,
    msg: String,
}

impl Fail {
    fn usage(msg: impl Into<String>) -> Fail {
        Fail {
            code: 1,
            msg: msg.into(),
        }
    }
    fn limit(msg: impl Into<String>) -> Fail {
        Fail {
            code: 3,
            msg: msg.into(),
        }
    }
}

fn located(path: &Path, msg: impl std::fmt::Display) -> Fail {
    Fail::usage(format!("{}:{msg}", path.display()))
}

fn diags(path: &Path, d: &[Diagnostic]) -> Fail {
    let lines: Vec<String> = d
        .iter()
        .map(|d| format!("{}: {d}", path.display()))
        .collect();
    Fail::usage(lines.join("\n"))
}

fn sem_fail(e: SemError) -> Fail {
    match e {
        SemError::BranchingLimit { .. } => Fail::limit(e.to_string()),
        _ => Fail::usage(e.to_string()),
    }
}

fn verify_fail(e: VerifyError) -> Fail {
    match e {
        VerifyError::Truncated | VerifyError::TooManyAtoms(_) => Fail::limit(e.to_string()),
        VerifyError::Semantic(s) => sem_fail(s),
        VerifyError::Ir(ref i)
            if matches!(
                i,
                btmc_core::verifier::IrError::StateLimit { .. }
                    | btmc_core::verifier::IrError::Branching { .. }
            ) =>
        {
            Fail::limit(e.to_string())
        }
        _ => Fail::usage(e.to_string()),
    }
}

fn read(path: &Path) -> Result<String, Fail> {
    fs::read_to_string(path).map_err(|e| Fail::usage(format!("{}: {e}", path.display())))
}

fn dsl_fail(path: &Path, e: DslError) -> Fail {
    match e {
        DslError::Parse(p) => located(path, p),
        DslError::Encoding => Fail::usage(format!("{}: input is not valid UTF-8", path.display())),
        DslError::Invalid(d) => diags(path, &d),
    }
}

fn warn(path: &Path, d: &[Diagnostic]) {
    for w in d {
        eprintln!("{}: {w}", path.display());
    }
}

fn load_tree(path: &Path) -> Result<TreeFile, Fail> {
    let p = parse_tree(&read(path)?).map_err(|e| dsl_fail(path, e))?;
    warn(path, &p.warnings);
    Ok(p.value)
}

fn load_monitor(path: Option<&Path>) -> Result<Monitor, Fail> {
    let Some(path) = path else {
        return Ok(Monitor::trivial());
    };
    let p = parse_monitor(&read(path)?).map_err(|e| dsl_fail(path, e))?;
    warn(path, &p.warnings);
    Ok(p.value)
}

fn load_scenario(path: &Path) -> Result<Scenario, Fail> {
    let p = parse_scenario(&read(path)?).map_err(|e| dsl_fail(path, e))?;
    warn(path, &p.warnings);
    Ok(p.value)
}

fn load_btm(tree: &Path, monitor: Option<&Path>) -> Result<Btm, Fail> {
    let file = load_tree(tree)?;
    let mon = load_monitor(monitor)?;
    compose(&file, &mon).map_err(|d| diags(monitor.unwrap_or(tree), &d))
}

/// Named specs from a file, or one inline formula.
fn load_specs(arg: &str) -> Result<Vec<(String, String, Spec)>, Fail> {
    let path = Path::new(arg);
    if path.is_file() {
        let p = parse_spec(&read(path)?).map_err(|e| dsl_fail(path, e))?;
        warn(path, &p.warnings);
        let mut out = Vec::new();
        for (i, item) in p.value.items.into_iter().enumerate() {
            let name = item.name.unwrap_or_else(|| format!("spec_{i}"));
            let (src, spec) = match item.kind {
                SpecKind::Ltl(f) => (print_formula(&f), Spec::Ltl(f)),
                SpecKind::Invariant(e) => {
                    (format!("invariant {}", print_expr(&e)), Spec::Invariant(e))
                }
            };
            out.push((name, src, spec));
        }
        return Ok(out);
    }
    let f = parse_formula(arg).map_err(|e| Fail::usage(format!("--spec: {e}")))?;
    Ok(vec![("spec".to_string(), print_formula(&f), Spec::Ltl(f))])
}

fn state_limit() -> Result<usize, Fail> {
    match std::env::var("BTMC_STATE_LIMIT") {
        Ok(s) => s
            .trim()
            .parse()
            .map_err(|_| Fail::usage(format!("BTMC_STATE_LIMIT: `{s}` is not a count"))),
        Err(_) => Ok(DEFAULT_STATE_LIMIT),
    }
}

fn cmd_parse(fmt: Format, file: &Path, dot: Option<&Path>) -> Result<u8, Fail> {
    let ext = file.extension().and_then(|e| e.to_str()).unwrap_or("");
    let kind = SourceKind::from_extension(ext)
        .ok_or_else(|| Fail::usage(format!("{}: unknown file kind `.{ext}`", file.display())))?;
    let bytes = fs::read(file).map_err(|e| Fail::usage(format!("{}: {e}", file.display())))?;
    let p = parse_bytes(&bytes, kind).map_err(|e| dsl_fail(file, e))?;
    warn(file, &p.warnings);
    if let Some(out) = dot {
        let SourceFile::Tree(t) = &p.value else {
            return Err(Fail::usage("--dot needs a .bt file"));
        };
        fs::write(out, to_dot(t)).map_err(|e| Fail::usage(format!("{}: {e}", out.display())))?;
    }
    match fmt {
        Format::Text => outln!("{}: ok ({} warnings)", file.display(), p.warnings.len()),
        Format::Json => {
            let w: Vec<String> = p.warnings.iter().map(|d| d.to_string()).collect();
            outln!(
                "{}",
                json!({ "file": file.display().to_string(), "valid": true, "warnings": w })
            );
        }
    }
    Ok(0)
}

fn cmd_simulate(
    fmt: Format,
    tree: &Path,
    monitor: Option<&Path>,
    scenario: Option<&Path>,
    steps: u32,
    resolver: Resolver,
) -> Result<u8, Fail> {
    let btm = load_btm(tree, monitor)?;
    let scn = match scenario {
        Some(p) => load_scenario(p)?
            .compile(&btm.model)
            .map_err(|d| diags(p, &d))?,
        None => CompiledScenario::default(),
    };
    if resolver == Resolver::Enumerate {
        if scenario.is_some() || monitor.is_some() {
            return Err(Fail::usage(
                "--resolver enumerate runs the bare tree; drop --monitor and --scenario",
            ));
        }
        let all =
            all_traces(&btm.model, steps as usize, DEFAULT_BRANCHING_LIMIT).map_err(sem_fail)?;
        for t in &all {
            let obs: Vec<Value> = t
                .iter()
                .map(|o| json!(btm.model.observation_json(&o.valuation, &o.statuses)))
                .collect();
            outln!("{}", Value::Array(obs));
        }
        match fmt {
            Format::Text => outln!("{} traces", all.len()),
            Format::Json => outln!("{}", json!({ "traces": all.len() })),
        }
        return Ok(0);
    }
    let report = simulate_runtime(&btm, &scn, steps, &mut FirstChoice);
    for s in report.trajectory.iter().skip(1) {
        outln!("{}", json!(btm.observation_json(s)));
    }
    if monitor.is_some() || scenario.is_some() {
        match fmt {
            Format::Json => outln!("{}", json!({ "report": report.to_json() })),
            Format::Text => {
                let show = |x: Option<u32>| x.map_or("-".to_string(), |k| k.to_string());
                outln!(
                    "report: injected_at={} detected_at={} engaged_at={} latency={} missed={}",
                    show(report.injected_at),
                    show(report.detected_at),
                    show(report.engaged_at),
                    show(report.latency()),
                    report.missed()
                );
            }
        }
    }
    match report.error {
        Some(e) => Err(sem_fail(e)),
        None => Ok(0),
    }
}

fn cmd_verify(
    fmt: Format,
    tree: &Path,
    monitor: Option<&Path>,
    spec: &str,
    level: Option<OptLevel>,
    engine: Engine,
) -> Result<u8, Fail> {
    let btm = load_btm(tree, monitor)?;
    let specs = load_specs(spec)?;
    let limit = state_limit()?;
    if engine == Engine::SmvExport {
        let lvl = level.unwrap_or(OptLevel::FullOpt);
        let all: Vec<Spec> = specs.iter().map(|(_, _, s)| s.clone()).collect();
        let m = to_smv(&btm, lvl, &all).map_err(verify_fail)?;
        for w in &m.warnings {
            eprintln!("warning: {w}");
        }
        parse_smv(&m.text)
            .map_err(|e| Fail::usage(format!("exported model does not re-import: {e}")))?;
    }
    let mut code = 0;
    for (name, src, s) in &specs {
        let (outcome, stats) = match (engine, level) {
            (Engine::Internal, None) => verify_explicit(&btm, s, limit),
            (_, l) => verify_at_level(&btm, s, l.unwrap_or(OptLevel::FullOpt), limit),
        }
        .map_err(verify_fail)?;
        if let Outcome::Violated(t) = &outcome {
            replay(&btm, t)
                .map_err(|e| Fail::usage(format!("{name}: counterexample failed replay: {e}")))?;
            code = 2;
        }
        report(fmt, &btm, name, src, &outcome, stats);
    }
    Ok(code)
}

fn report(fmt: Format, btm: &Btm, name: &str, src: &str, outcome: &Outcome, stats: Stats) {
    match (fmt, outcome) {
        (Format::Json, Outcome::Holds) => outln!(
            "{}",
            json!({ "spec": name, "formula": src, "verdict": "holds", "states": stats.states, "boundary_states": stats.boundary_states })
        ),
        (Format::Json, Outcome::Violated(t)) => outln!(
            "{}",
            json!({
                "spec": name, "formula": src, "verdict": "violated", "states": stats.states,
                "boundary_states": stats.boundary_states, "counterexample": t.to_json(btm), "replayed": true,
            })
        ),
        (Format::Text, Outcome::Holds) => {
            outln!("{name}: holds ({} states)  {src}", stats.states)
        }
        (Format::Text, Outcome::Violated(t)) => {
            outln!("{name}: violated ({} states)  {src}", stats.states);
            for (i, s) in t.prefix.iter().enumerate() {
                outln!("  {i:>3}  {}", json!(btm.observation_json(s)));
            }
            if !t.cycle.is_empty() {
                outln!("  -- loop --");
                for (i, s) in t.cycle.iter().enumerate() {
                    outln!(
                        "  {:>3}  {}",
                        t.prefix.len() + i,
                        json!(btm.observation_json(s))
                    );
                }
            }
            outln!("  counterexample replayed");
        }
    }
}

fn cmd_export(
    tree: &Path,
    monitor: Option<&Path>,
    spec: Option<&str>,
    level: OptLevel,
    out: Option<&Path>,
) -> Result<u8, Fail> {
    let btm = load_btm(tree, monitor)?;
    let specs: Vec<Spec> = match spec {
        Some(s) => load_specs(s)?.into_iter().map(|(_, _, s)| s).collect(),
        None => vec![],
    };
    let m = to_smv(&btm, level, &specs).map_err(verify_fail)?;
    for w in &m.warnings {
        eprintln!("warning: {w}");
    }
    match out {
        Some(p) => {
            fs::write(p, &m.text).map_err(|e| Fail::usage(format!("{}: {e}", p.display())))?
        }
        None => out!("{}", m.text),
    }
    Ok(0)
}

fn cmd_gen(fmt: Format, kind: GenKind, spec: &Path, out: &Path) -> Result<u8, Fail> {
    let text = read(spec)?;
    let bad = |e: serde_json::Error| located(spec, format!("{}:{}: {e}", e.line(), e.column()));
    let files = match kind {
        GenKind::Nfa => nfa_fixtures(&serde_json::from_str::<NfaSpec>(&text).map_err(bad)?),
        GenKind::Tm => tm_fixtures(&serde_json::from_str::<NtmSpec>(&text).map_err(bad)?),
    }
    .map_err(|e| Fail::usage(format!("{}: {e}", spec.display())))?;
    fs::create_dir_all(out).map_err(|e| Fail::usage(format!("{}: {e}", out.display())))?;
    let mut written = Vec::new();
    for (name, body) in &files {
        let p = out.join(name);
        fs::write(&p, body).map_err(|e| Fail::usage(format!("{}: {e}", p.display())))?;
        written.push(p.display().to_string());
    }
    match fmt {
        Format::Text => written.iter().for_each(|p| outln!("{p}")),
        Format::Json => outln!("{}", json!({ "files": written })),
    }
    Ok(0)
}

fn run(cli: Cli) -> Result<u8, Fail> {
    if let Some(n) = cli.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global()
            .map_err(|e| Fail::usage(format!("--jobs: {e}")))?;
    }
    let fmt = cli.format;
    match cli.cmd {
        Cmd::Parse { file, dot } => cmd_parse(fmt, &file, dot.as_deref()),
        Cmd::Simulate {
            tree,
            monitor,
            scenario,
            steps,
            resolver,
        } => cmd_simulate(
            fmt,
            &tree,
            monitor.as_deref(),
            scenario.as_deref(),
            steps,
            resolver,
        ),
        Cmd::Verify {
            tree,
            monitor,
            spec,
            opt_level,
            engine,
        } => cmd_verify(fmt, &tree, monitor.as_deref(), &spec, opt_level, engine),
        Cmd::ExportSmv {
            tree,
            monitor,
            spec,
            opt_level,
            out,
        } => cmd_export(
            &tree,
            monitor.as_deref(),
            spec.as_deref(),
            opt_level,
            out.as_deref(),
        ),
        Cmd::Gen { kind, spec, out } => cmd_gen(fmt, kind, &spec, &out),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.msg);
            ExitCode::from(f.code)
        }
    }
}
