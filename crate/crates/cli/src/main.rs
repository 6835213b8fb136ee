//! Command-line front end. Exit status: 0 on success, 1 when a check reports
//! violations, 2 on any error.

use std::fs;
use std::io::{self, Write as _};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::thread;

use anyhow::{anyhow, bail, Context as _, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use syncausal::causality::build_causal_graph;
use syncausal::coordination::{check_gor, check_ojr, required_chains, scc_decompose};
use syncausal::dot::{cro_to_dot, run_to_dot, witness_to_dot};
use syncausal::epistemics::{parse_formula, Evaluator, Formula, Point};
use syncausal::scenario::{bundled, bundled_names, load_scenario, Query, Scenario};
use syncausal::simulator::{
    build_system_with_ceiling, environment_at, execute, sample_system, Protocol, Run, SystemBundle,
};
use syncausal::snapshot::{oracle_earliest_broom, snapshot_protocol, SnapshotResult};
use syncausal::structures::{find_broom, find_centibroom, find_centipede, StructureKind, StructureWitness};
use syncausal::verify;

#[derive(Parser)]
#[command(
    name = "syncausal",
    version,
    about = "Causal structure, knowledge and coordination analysis for synchronous networks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute one environment and print its run log.
    Simulate(Common),
    /// Build the exhaustive bundle and print its size.
    Enumerate(Common),
    /// Evaluate formulas at every point and print truth tables.
    Eval {
        #[command(flatten)]
        common: Common,
        /// Formula in the textual syntax; repeatable. Defaults to the
        /// scenario's analysis formulas.
        #[arg(long = "formula")]
        formulas: Vec<String>,
    },
    /// Answer the scenario's structure queries.
    Structures(Common),
    /// Run single-shot snapshot episodes and compare with the optimum.
    Snapshot(Common),
    /// Run the scenario's ordered-response protocol and check it.
    Gor(Common),
    /// Run the acceptance criteria and print a pass-count table.
    CheckTheorems {
        #[command(flatten)]
        common: Common,
        /// Run only this criterion; repeatable.
        #[arg(long = "criterion")]
        criteria: Vec<u8>,
    },
    /// Export a run, a structure witness or the ordering's condensation.
    Dot {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value_t = DotObject::Run)]
        object: DotObject,
    },
    /// List the bundled scenarios.
    List,
}

#[derive(Args, Clone, Default)]
struct Common {
    /// Scenario file, or the name of a bundled scenario.
    #[arg(long)]
    scenario: Option<String>,
    /// Draw environments from this seed instead of enumerating.
    #[arg(long)]
    seed: Option<u64>,
    /// Select one environment by canonical index.
    #[arg(long = "env-index")]
    env_index: Option<usize>,
    /// Number of sampled runs (implies sampling).
    #[arg(long)]
    count: Option<usize>,
    /// Largest bundle an exhaustive enumeration may build.
    #[arg(long)]
    ceiling: Option<usize>,
    /// Directory for output files; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
}

#[derive(Clone, Copy, Default, PartialEq, Eq, ValueEnum)]
enum Format {
    #[default]
    Text,
    Dot,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum DotObject {
    Run,
    Witness,
    Cro,
}

/// Whether the command found violations.
#[derive(Debug, PartialEq, Eq)]
enum Outcome {
    Clean,
    Violations,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(Outcome::Clean) => ExitCode::SUCCESS,
        Ok(Outcome::Violations) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(command: Command) -> Result<Outcome> {
    match command {
        Command::Simulate(c) => simulate(&c),
        Command::Enumerate(c) => enumerate(&c),
        Command::Eval { common, formulas } => eval(&common, &formulas),
        Command::Structures(c) => structures(&c),
        Command::Snapshot(c) => snapshot(&c),
        Command::Gor(c) => gor(&c),
        Command::CheckTheorems { common, criteria } => check_theorems(&common, &criteria),
        Command::Dot { common, object } => dot(&common, object),
        Command::List => {
            for name in bundled_names() {
                let s = bundled(name).expect("listed scenarios exist");
                println!("{name:<16} {}", s.description);
            }
            Ok(Outcome::Clean)
        }
    }
}

fn scenario(c: &Common) -> Result<Scenario> {
    let name = c.scenario.as_deref().ok_or_else(|| anyhow!("--scenario is required"))?;
    let path = Path::new(name);
    let s = if path.exists() {
        load_scenario(path).with_context(|| format!("loading {name}"))?
    } else if let Some(s) = bundled(name) {
        s
    } else {
        bail!("{name} is neither a file nor a bundled scenario (see `syncausal list`)");
    };
    for w in &s.warnings {
        eprintln!("warning: {w}");
    }
    Ok(s)
}

/// The runs a command operates on: one environment, a sample, or all.
fn bundle(c: &Common, s: &Scenario) -> Result<SystemBundle> {
    let ctx = &s.context;
    if let Some(i) = c.env_index {
        let env = environment_at(&s.protocol, ctx, i)?;
        let run = execute(&s.protocol, ctx, &env)?;
        return Ok(single(s, run));
    }
    if c.seed.is_some() || c.count.is_some() {
        return Ok(sample_system(&s.protocol, ctx, c.seed.unwrap_or(0), c.count.unwrap_or(1))?);
    }
    Ok(build_system_with_ceiling(&s.protocol, ctx, c.ceiling.unwrap_or(ctx.ceiling))?)
}

fn single(s: &Scenario, run: Run) -> SystemBundle {
    SystemBundle {
        context: s.context.clone(),
        protocol: s.protocol.name().to_string(),
        runs: vec![run],
        exhaustive: false,
    }
}

/// Writes `text` to `out/file` when `--out` is set, else to stdout.
fn emit(c: &Common, file: &str, text: &str) -> Result<()> {
    match &c.out {
        Some(dir) => {
            fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            let path = dir.join(file);
            fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
            eprintln!("wrote {}", path.display());
        }
        None => {
            // A closed pipe (e.g. `| head`) is not an error.
            let mut stdout = io::stdout().lock();
            match stdout.write_all(text.as_bytes()).and_then(|_| stdout.flush()) {
                Err(e) if e.kind() != io::ErrorKind::BrokenPipe => return Err(e.into()),
                _ => {}
            }
        }
    }
    Ok(())
}

fn one_run(c: &Common, s: &Scenario) -> Result<Run> {
    if c.env_index.is_none() && c.seed.is_none() {
        let env = environment_at(&s.protocol, &s.context, 0)?;
        return Ok(execute(&s.protocol, &s.context, &env)?);
    }
    let mut b = bundle(c, s)?;
    Ok(b.runs.swap_remove(0))
}

fn simulate(c: &Common) -> Result<Outcome> {
    let s = scenario(c)?;
    let run = one_run(c, &s)?;
    match c.format {
        Format::Text => emit(c, "run.txt", &run.log_text(s.network()))?,
        Format::Dot => emit(c, "run.dot", &run_to_dot(&build_causal_graph(&run, s.network()), s.network(), None))?,
    }
    Ok(Outcome::Clean)
}

fn enumerate(c: &Common) -> Result<Outcome> {
    let s = scenario(c)?;
    let b = bundle(c, &s)?;
    println!("{}", b.len());
    Ok(Outcome::Clean)
}

fn eval(c: &Common, texts: &[String]) -> Result<Outcome> {
    let s = scenario(c)?;
    let formulas: Vec<Formula> = if texts.is_empty() {
        s.formulas.clone()
    } else {
        texts
            .iter()
            .map(|t| parse_formula(t, Some(s.network())).with_context(|| format!("parsing {t:?}")))
            .collect::<Result<_>>()?
    };
    if formulas.is_empty() {
        bail!("no formulas: pass --formula or add analysis.formulas to the scenario");
    }
    let sampled = c.seed.is_some() || c.count.is_some();
    let whole = if sampled { bundle(c, &s)? } else { bundle(&Common { env_index: None, ..c.clone() }, &s)? };
    let ev = if sampled {
        eprintln!("warning: knowledge over a sampled bundle only quantifies over the sampled runs");
        Evaluator::allowing_sampled(&whole)?
    } else {
        Evaluator::new(&whole)?
    };
    let selected: Vec<usize> = match c.env_index {
        Some(i) if i < whole.len() => vec![i],
        Some(i) => bail!("environment index {i} is out of range (bundle has {} runs)", whole.len()),
        None => (0..whole.len()).collect(),
    };
    let mut out = String::new();
    for phi in &formulas {
        let sat = ev.satisfying_points(phi)?;
        out.push_str(&format!("{}\n", phi.display_with(Some(s.network()))));
        out.push_str(&format!(
            "  {} of {} points satisfy it; columns are t = 0..={}\n",
            sat.len(),
            ev.points().count(),
            ev.last_time()
        ));
        for &r in &selected {
            let row: String = (0..=ev.last_time())
                .map(|t| if sat.binary_search(&Point { run: r, time: t }).is_ok() { '1' } else { '0' })
                .collect();
            out.push_str(&format!("  run {r:>6} {row}  {}\n", whole.runs[r].env));
        }
    }
    emit(c, "eval.txt", &out)?;
    Ok(Outcome::Clean)
}

fn answer(q: &Query, run: &Run, s: &Scenario) -> Result<Option<StructureWitness>> {
    let graph = build_causal_graph(run, s.network());
    let net = s.network();
    Ok(match q.kind {
        StructureKind::Centipede => find_centipede(&graph, net, q.origin, &q.agents, q.from, q.to)?,
        StructureKind::Broom => {
            let group = q.groups.first().ok_or_else(|| anyhow!("a broom query needs one group"))?;
            find_broom(&graph, net, q.origin, group, q.from, q.to)?
        }
        StructureKind::Centibroom => find_centibroom(&graph, net, q.origin, &q.groups, q.from, q.to)?,
    })
}

fn show_witness(w: &StructureWitness, s: &Scenario) -> String {
    w.nodes.iter().map(|n| format!("<{},{}>", s.network().name(n.agent), n.time)).collect::<Vec<_>>().join(" ~> ")
}

fn structures(c: &Common) -> Result<Outcome> {
    let s = scenario(c)?;
    if s.queries.is_empty() {
        bail!("the scenario has no analysis.structures queries");
    }
    let b = if c.env_index.is_none() && c.seed.is_none() && c.count.is_none() {
        single(&s, one_run(c, &s)?)
    } else {
        bundle(c, &s)?
    };
    let mut text = String::new();
    let mut dots = Vec::new();
    for (qi, q) in s.queries.iter().enumerate() {
        for (r, run) in b.runs.iter().enumerate() {
            let found = answer(q, run, &s)?;
            let head =
                format!("query {qi} ({} from {} in {}..{}) run {r}", q.kind, s.network().name(q.origin), q.from, q.to);
            match &found {
                Some(w) => {
                    text.push_str(&format!("{head}: {}\n", show_witness(w, &s)));
                    dots.push((format!("witness-q{qi}-run{r}.dot"), witness_to_dot(w, s.network())));
                }
                None => text.push_str(&format!("{head}: Absent\n")),
            }
        }
    }
    match c.format {
        Format::Text => emit(c, "structures.txt", &text)?,
        Format::Dot => {
            for (file, doc) in &dots {
                emit(c, file, doc)?;
            }
        }
    }
    Ok(Outcome::Clean)
}

fn snapshot(c: &Common) -> Result<Outcome> {
    let s = scenario(c)?;
    let ctx = &s.context;
    let protocol = snapshot_protocol();
    let runs: Vec<Run> = if let Some(i) = c.env_index {
        let env = environment_at(&protocol, ctx, i)?;
        vec![execute(&protocol, ctx, &env)?]
    } else if c.seed.is_some() || c.count.is_some() {
        sample_system(&protocol, ctx, c.seed.unwrap_or(0), c.count.unwrap_or(1))?.runs
    } else {
        let ceiling = c.ceiling.unwrap_or(ctx.ceiling);
        build_system_with_ceiling(&protocol, ctx, ceiling)?.runs
    };
    let mut text = String::new();
    let mut mismatches = 0;
    let single = runs.len() == 1;
    for (r, run) in runs.into_iter().enumerate() {
        if !run.env.inputs.iter().any(|&p| p) {
            text.push_str(&format!("run {r}: no snapshot request\n"));
            continue;
        }
        let oracle = oracle_earliest_broom(ctx, &run.env)?;
        let env = run.env.to_string();
        let res = SnapshotResult::from_run(run, s.network())?;
        let verdict = if oracle == Some(res.time) { "optimal" } else { "NOT optimal" };
        if oracle != Some(res.time) {
            mismatches += 1;
        }
        text.push_str(&format!("run {r}: S = {}, earliest broom = {oracle:?}, {verdict}  [{env}]\n", res.time));
        if single {
            match c.format {
                Format::Text => {
                    text.push_str(&res.report(s.network()));
                    text.push('\n');
                }
                Format::Dot => {
                    let graph = build_causal_graph(&res.run, s.network());
                    return emit(c, "snapshot.dot", &run_to_dot(&graph, s.network(), Some(res.time))).map(|_| {
                        if mismatches == 0 {
                            Outcome::Clean
                        } else {
                            Outcome::Violations
                        }
                    });
                }
            }
        }
    }
    emit(c, "snapshot.txt", &text)?;
    Ok(if mismatches == 0 { Outcome::Clean } else { Outcome::Violations })
}

fn gor(c: &Common) -> Result<Outcome> {
    let s = scenario(c)?;
    let ro = s.ordering.as_ref().ok_or_else(|| anyhow!("the scenario's protocol has no response ordering"))?;
    let cro = scc_decompose(ro)?;
    if c.format == Format::Dot {
        emit(c, "cro.dot", &cro_to_dot(&cro, s.network()))?;
        return Ok(Outcome::Clean);
    }
    let b = bundle(c, &s)?;
    let mut text = String::new();
    text.push_str("clusters:\n");
    for scc in &cro.sccs {
        let agents: Vec<&str> = scc.agents.iter().map(|&a| s.network().name(a)).collect();
        text.push_str(&format!("  {} {{{}}}\n", scc.label, agents.join(",")));
    }
    for r in ro.responses() {
        let chains = required_chains(&cro, ro, &r.action)?;
        let shown: Vec<String> = chains.iter().map(|ch| ch.display(&cro).to_string()).collect();
        text.push_str(&format!("  {} needs: {}\n", r.action, shown.join("; ")));
    }
    let mut clean = true;
    let gv = check_gor(&b, ro);
    clean &= gv.passed();
    text.push_str(&format!("gor: {gv}"));
    if let Some(spec) = &s.ojr {
        let ov = check_ojr(&b, ro, spec)?;
        clean &= ov.passed();
        text.push_str(&format!("ojr: {ov}"));
    }
    emit(c, "gor.txt", &text)?;
    Ok(if clean { Outcome::Clean } else { Outcome::Violations })
}

fn check_theorems(c: &Common, only: &[u8]) -> Result<Outcome> {
    if c.scenario.is_some() {
        eprintln!("note: check-theorems always runs on the bundled reference scenarios");
    }
    let ids: Vec<u8> = if only.is_empty() { verify::CRITERIA.to_vec() } else { only.to_vec() };
    for &id in &ids {
        if !verify::CRITERIA.contains(&id) {
            bail!("there is no criterion {id} (valid: 1-9)");
        }
    }
    let handles: Vec<_> = ids.iter().map(|&id| thread::spawn(move || verify::criterion(id))).collect();
    let mut reports = Vec::new();
    for h in handles {
        reports.push(h.join().map_err(|_| anyhow!("a criterion panicked"))??);
    }
    emit(c, "theorems.txt", &verify::table(&reports))?;
    Ok(if reports.iter().all(|r| r.passed()) { Outcome::Clean } else { Outcome::Violations })
}

fn dot(c: &Common, object: DotObject) -> Result<Outcome> {
    let s = scenario(c)?;
    match object {
        DotObject::Run => {
            let run = one_run(c, &s)?;
            emit(c, "run.dot", &run_to_dot(&build_causal_graph(&run, s.network()), s.network(), None))?;
        }
        DotObject::Witness => {
            let q = s.queries.first().ok_or_else(|| anyhow!("the scenario has no structure queries"))?;
            let run = one_run(c, &s)?;
            match answer(q, &run, &s)? {
                Some(w) => emit(c, "witness.dot", &witness_to_dot(&w, s.network()))?,
                None => bail!("the first query has no witness in this run"),
            }
        }
        DotObject::Cro => {
            let ro = s.ordering.as_ref().ok_or_else(|| anyhow!("the scenario's protocol has no response ordering"))?;
            emit(c, "cro.dot", &cro_to_dot(&scc_decompose(ro)?, s.network()))?;
        }
    }
    Ok(Outcome::Clean)
}
