//! `membrane` — command-line front end for the membrane chemistry toolkit.
//!
//! Exit codes: 0 success, 1 parse or validation failure, 2 verification
//! failure (wrong outputs), 3 timeout (budget exhausted before output).
//! Diagnostics go to standard error; data goes to `-o`/`--trace` files or
//! standard output.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use membrane_core::compiler::{
    compile, verify_against_oracle, Backend, CompileOptions, Compiled, VerifyReport,
};
use membrane_core::dsl::{
    parse_multiset_text, parse_netlist, parse_system, print_system, system_to_doc,
};
use membrane_core::engine::{
    parallel::run_parallel, run, Disturbance, DisturbanceDelta, Scheduler, SimConfig, Trace,
    TraceRow,
};
use membrane_core::gates::{GateKind, RedundancyParams};
use membrane_core::harness::fabric::{
    cycle_edges, fabric_run, gate_rule_pool, grid_edges, random_graph_edges, Fabric, NodeFailure,
};
use membrane_core::harness::sweep_redundancy;

#[derive(Parser)]
#[command(
    name = "membrane",
    about = "Stochastic membrane-chemistry simulator and Boolean circuit compiler",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a .psys file and check every structural invariant.
    Validate {
        /// System file (.psys)
        file: PathBuf,
    },
    /// Execute a .psys system and record its trace.
    Run(RunArgs),
    /// Compile a .net netlist into a .psys membrane system.
    Compile(CompileArgs),
    /// Compile a netlist and check it against Boolean evaluation on every
    /// input assignment.
    TruthTable(TruthTableArgs),
    /// Sweep threshold-encoded gates over redundancy levels and molecule
    /// loss rates.
    FaultSweep(FaultSweepArgs),
    /// Run a logic gate on a distributed particle fabric.
    FabricRun(FabricRunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// System file (.psys)
    file: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 10_000)]
    max_attempts: u64,
    /// Sampling stride for trace rows.
    #[arg(long, default_value_t = 1)]
    trace_every: u64,
    /// Halting-check stride.
    #[arg(long, default_value_t = 8)]
    halting_check_every: u64,
    /// Region scheduling policy.
    #[arg(long, value_enum, default_value_t = SchedulerArg::Uniform)]
    scheduler: SchedulerArg,
    /// External add/remove at a fixed attempt: AT:REGION:+MULTISET or
    /// AT:REGION:-MULTISET (e.g. 300:holder:-a^50). Repeatable.
    #[arg(long = "disturb", value_parser = parse_disturbance)]
    disturbances: Vec<Disturbance>,
    /// Write the counts stream (attempt,region,object,count) here.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Write the emission stream (attempt,emitted_object) here.
    #[arg(long)]
    emitted: Option<PathBuf>,
    /// Number of worker threads; parallel runs are NOT deterministic.
    #[arg(long)]
    parallel: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum SchedulerArg {
    Uniform,
    RoundRobin,
}

#[derive(Args)]
struct CompileArgs {
    /// Netlist file (.net)
    file: PathBuf,
    #[arg(long, value_enum, default_value_t = BackendArg::Tree)]
    backend: BackendArg,
    /// Threshold encoding as h,m or h,m,l.
    #[arg(long, value_parser = parse_redundancy)]
    redundancy: Option<RedundancyParams>,
    /// Thread a ready token through every gate.
    #[arg(long)]
    token: bool,
    /// Output file (.psys); standard output when omitted.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum BackendArg {
    Tree,
    Network,
}

#[derive(Args)]
struct TruthTableArgs {
    /// Netlist file (.net)
    file: PathBuf,
    #[arg(long, value_enum, default_value_t = BackendArg::Tree)]
    backend: BackendArg,
    #[arg(long, value_parser = parse_redundancy)]
    redundancy: Option<RedundancyParams>,
    #[arg(long)]
    token: bool,
    /// First seed; runs use seed..seed+seeds.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Seeded runs per input assignment.
    #[arg(long, default_value_t = 100)]
    seeds: u64,
    /// Attempt budget per run.
    #[arg(long, default_value_t = 100_000)]
    budget: u64,
    /// Report file; standard output when omitted.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct FaultSweepArgs {
    #[arg(long, value_enum)]
    gate: GateArg,
    /// Input multiplicities to sweep, e.g. 1,2,4,8.
    #[arg(long, value_delimiter = ',', default_values_t = vec![1, 2, 4])]
    h_values: Vec<u64>,
    /// Output multiplicity offset: m = h + this.
    #[arg(long, default_value_t = 2)]
    m_offset: u64,
    /// Per-attempt per-region molecule loss probabilities, e.g. 0,0.001.
    #[arg(long, value_delimiter = ',', default_values_t = vec![0.0, 0.001])]
    loss_rates: Vec<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 30)]
    seeds: u64,
    #[arg(long, default_value_t = 50_000)]
    budget: u64,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct FabricRunArgs {
    #[arg(long, value_enum)]
    gate: GateArg,
    /// Input bits, e.g. 1,0.
    #[arg(long, value_delimiter = ',', required = true)]
    inputs: Vec<u8>,
    #[arg(long, default_value_t = 16)]
    nodes: usize,
    #[arg(long, value_enum, default_value_t = TopologyArg::Random)]
    topology: TopologyArg,
    /// Edge probability for the random topology.
    #[arg(long, default_value_t = 0.3)]
    edge_prob: f64,
    /// Graph seed for the random topology.
    #[arg(long, default_value_t = 0)]
    graph_seed: u64,
    #[arg(long, default_value_t = 0.5)]
    p_move: f64,
    /// Molecule copies injected per input.
    #[arg(long, default_value_t = 1)]
    copies: u64,
    #[arg(long, value_parser = parse_redundancy)]
    redundancy: Option<RedundancyParams>,
    /// Kill a node mid-run: NODE:AT_ATTEMPT. Repeatable.
    #[arg(long = "fail", value_parser = parse_failure)]
    failures: Vec<NodeFailure>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 20)]
    seeds: u64,
    #[arg(long, default_value_t = 1_000_000)]
    budget: u64,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum GateArg {
    Not,
    And,
    Nand,
    Or,
}

impl From<GateArg> for GateKind {
    fn from(arg: GateArg) -> Self {
        match arg {
            GateArg::Not => GateKind::Not,
            GateArg::And => GateKind::And,
            GateArg::Nand => GateKind::Nand,
            GateArg::Or => GateKind::Or,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum TopologyArg {
    Cycle,
    Grid,
    Random,
}

fn parse_redundancy(text: &str) -> Result<RedundancyParams, String> {
    let parts: Vec<&str> = text.split(',').collect();
    let parse = |s: &str| s.trim().parse::<u64>().map_err(|e| e.to_string());
    match parts.as_slice() {
        [h, m] => RedundancyParams::new(parse(h)?, parse(m)?).map_err(|e| e.to_string()),
        [h, m, l] => RedundancyParams::with_threshold(parse(h)?, parse(m)?, parse(l)?)
            .map_err(|e| e.to_string()),
        _ => Err("expected h,m or h,m,l".to_string()),
    }
}

fn parse_disturbance(text: &str) -> Result<Disturbance, String> {
    let parts: Vec<&str> = text.splitn(3, ':').collect();
    let [at, region, signed] = parts.as_slice() else {
        return Err("expected AT:REGION:+MULTISET or AT:REGION:-MULTISET".to_string());
    };
    let at_attempt = at.parse::<u64>().map_err(|e| e.to_string())?;
    let (sign, multiset_text) = match signed.split_at_checked(1) {
        Some(("+", rest)) => (true, rest),
        Some(("-", rest)) => (false, rest),
        _ => return Err("multiset must start with + or -".to_string()),
    };
    let ms = parse_multiset_text(multiset_text).map_err(|e| e.to_string())?;
    Ok(Disturbance {
        at_attempt,
        region: region.to_string(),
        delta: if sign { DisturbanceDelta::Add(ms) } else { DisturbanceDelta::Remove(ms) },
    })
}

fn parse_failure(text: &str) -> Result<NodeFailure, String> {
    let parts: Vec<&str> = text.split(':').collect();
    let [node, at] = parts.as_slice() else {
        return Err("expected NODE:AT_ATTEMPT".to_string());
    };
    Ok(NodeFailure {
        node: node.parse().map_err(|e: std::num::ParseIntError| e.to_string())?,
        at_attempt: at.parse().map_err(|e: std::num::ParseIntError| e.to_string())?,
    })
}

/// `# seed=<S> command=<argv>` — every CSV output starts with this line.
fn header_comment(seed: u64) -> String {
    let argv: Vec<String> = std::env::args().collect();
    format!("# seed={seed} command={}\n", argv.join(" "))
}

fn write_data(path: Option<&Path>, content: &str) -> Result<(), String> {
    match path {
        Some(path) => {
            fs::write(path, content).map_err(|e| format!("cannot write {}: {e}", path.display()))
        }
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

fn fail(message: impl std::fmt::Display, code: u8) -> ExitCode {
    eprintln!("error: {message}");
    ExitCode::from(code)
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Validate { file } => cmd_validate(&file),
        Command::Run(args) => cmd_run(args),
        Command::Compile(args) => cmd_compile(args),
        Command::TruthTable(args) => cmd_truth_table(args),
        Command::FaultSweep(args) => cmd_fault_sweep(args),
        Command::FabricRun(args) => cmd_fabric_run(args),
    }
}

fn load_system(path: &Path) -> Result<membrane_core::MembraneSystem, String> {
    let text =
        fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    let doc = parse_system(&text).map_err(|e| format!("{}: {e}", path.display()))?;
    let sys = doc.lower().map_err(|e| format!("{}: {e}", path.display()))?;
    let violations = sys.validate();
    if !violations.is_empty() {
        let mut message = format!("{} is structurally invalid:", path.display());
        for violation in violations {
            let _ = write!(message, "\n  {violation}");
        }
        return Err(message);
    }
    Ok(sys)
}

fn cmd_validate(file: &Path) -> ExitCode {
    match load_system(file) {
        Ok(_) => ExitCode::SUCCESS,
        Err(message) => fail(message, 1),
    }
}

fn trace_to_csv(trace: &Trace, seed: u64) -> (String, String) {
    let mut counts = header_comment(seed).into_bytes();
    trace.write_counts_csv(&mut counts).expect("writing to memory");
    let mut emitted = header_comment(seed).into_bytes();
    trace.write_emitted_csv(&mut emitted).expect("writing to memory");
    (
        String::from_utf8(counts).expect("csv is utf-8"),
        String::from_utf8(emitted).expect("csv is utf-8"),
    )
}

fn cmd_run(args: RunArgs) -> ExitCode {
    let sys = match load_system(&args.file) {
        Ok(sys) => sys,
        Err(message) => return fail(message, 1),
    };

    let trace = if let Some(workers) = args.parallel {
        eprintln!("warning: parallel mode interleaves {workers} workers and is not deterministic");
        let outcome = run_parallel(sys, args.seed, args.max_attempts, workers);
        let mut trace = Trace::default();
        for region in outcome.system.regions() {
            for (object, &count) in region.contents.iter() {
                trace.rows.push(TraceRow {
                    attempt: outcome.attempts,
                    region: region.label.clone(),
                    object: object.clone(),
                    count,
                });
            }
        }
        trace.emitted =
            outcome.emitted.into_iter().map(|object| (outcome.attempts, object)).collect();
        trace
    } else {
        let config = SimConfig {
            seed: args.seed,
            max_attempts: args.max_attempts,
            scheduler: match args.scheduler {
                SchedulerArg::Uniform => Scheduler::UniformRegion,
                SchedulerArg::RoundRobin => Scheduler::RoundRobin,
            },
            trace_every: args.trace_every.max(1),
            halting_check_every: args.halting_check_every.max(1),
        };
        match run(sys, &config, &args.disturbances) {
            Ok(trace) => trace,
            Err(e) => return fail(e, 1),
        }
    };

    match trace.halted_at {
        Some(at) => eprintln!("halted at attempt {at}"),
        None => eprintln!("attempt budget exhausted"),
    }

    let (counts_csv, emitted_csv) = trace_to_csv(&trace, args.seed);
    if let Err(message) = write_data(args.trace.as_deref(), &counts_csv) {
        return fail(message, 1);
    }
    if let Some(emitted_path) = &args.emitted {
        if let Err(message) = write_data(Some(emitted_path), &emitted_csv) {
            return fail(message, 1);
        }
    }
    ExitCode::SUCCESS
}

fn compile_from_args(
    file: &Path,
    backend: BackendArg,
    redundancy: Option<RedundancyParams>,
    token: bool,
) -> Result<Compiled, String> {
    let text =
        fs::read_to_string(file).map_err(|e| format!("cannot read {}: {e}", file.display()))?;
    let netlist = parse_netlist(&text).map_err(|e| format!("{}: {e}", file.display()))?;
    let options = CompileOptions {
        backend: match backend {
            BackendArg::Tree => Backend::Tree,
            BackendArg::Network => Backend::Network,
        },
        redundancy,
        ready_token: token,
    };
    compile(&netlist, &options).map_err(|e| format!("{}: {e}", file.display()))
}

fn cmd_compile(args: CompileArgs) -> ExitCode {
    let compiled = match compile_from_args(&args.file, args.backend, args.redundancy, args.token) {
        Ok(compiled) => compiled,
        Err(message) => return fail(message, 1),
    };
    let doc = match system_to_doc(&compiled.system) {
        Ok(doc) => doc.canonicalize(),
        Err(e) => return fail(e, 1),
    };
    match write_data(args.output.as_deref(), &print_system(&doc)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(message) => fail(message, 1),
    }
}

fn report_exit(all_pass: bool, timeout_only: bool) -> ExitCode {
    if all_pass {
        ExitCode::SUCCESS
    } else if timeout_only {
        ExitCode::from(3)
    } else {
        ExitCode::from(2)
    }
}

fn cmd_truth_table(args: TruthTableArgs) -> ExitCode {
    let compiled = match compile_from_args(&args.file, args.backend, args.redundancy, args.token) {
        Ok(compiled) => compiled,
        Err(message) => return fail(message, 1),
    };
    let seeds: Vec<u64> = (args.seed..args.seed + args.seeds).collect();
    let report: VerifyReport = match verify_against_oracle(&compiled, &seeds, args.budget) {
        Ok(report) => report,
        Err(e) => return fail(e, 1),
    };

    let mut csv = header_comment(args.seed).into_bytes();
    report.write_csv(&mut csv).expect("writing to memory");
    if let Err(message) =
        write_data(args.output.as_deref(), &String::from_utf8(csv).expect("csv is utf-8"))
    {
        return fail(message, 1);
    }

    let failures = report.rows.iter().filter(|row| !row.pass()).count();
    if failures > 0 {
        eprintln!("{failures} of {} runs failed", report.rows.len());
    }
    let wrong = report
        .rows
        .iter()
        .any(|row| !row.pass() && row.observed != membrane_core::compiler::Observed::Timeout);
    report_exit(report.all_pass(), !wrong && report.any_timeout())
}

fn cmd_fault_sweep(args: FaultSweepArgs) -> ExitCode {
    let seeds: Vec<u64> = (args.seed..args.seed + args.seeds).collect();
    let table = match sweep_redundancy(
        args.gate.into(),
        &args.h_values,
        args.m_offset,
        &args.loss_rates,
        &seeds,
        args.budget,
    ) {
        Ok(table) => table,
        Err(e) => return fail(e, 1),
    };
    let mut csv = header_comment(args.seed).into_bytes();
    table.write_csv(&mut csv).expect("writing to memory");
    match write_data(args.output.as_deref(), &String::from_utf8(csv).expect("csv is utf-8")) {
        Ok(()) => ExitCode::SUCCESS,
        Err(message) => fail(message, 1),
    }
}

fn cmd_fabric_run(args: FabricRunArgs) -> ExitCode {
    let kind: GateKind = args.gate.into();
    let inputs: Vec<bool> = args.inputs.iter().map(|&b| b != 0).collect();
    if inputs.len() != kind.arity() {
        return fail(
            format!("{} takes {} input(s), found {}", kind.name(), kind.arity(), inputs.len()),
            1,
        );
    }
    let edges = match args.topology {
        TopologyArg::Cycle => cycle_edges(args.nodes),
        TopologyArg::Grid => {
            let side = (args.nodes as f64).sqrt() as usize;
            if side * side != args.nodes {
                return fail("grid topology needs a square node count", 1);
            }
            grid_edges(side, side)
        }
        TopologyArg::Random => random_graph_edges(args.nodes, args.edge_prob, args.graph_seed),
    };
    let logic_copies = 25;
    let rules = gate_rule_pool(kind, args.redundancy.as_ref().map(|p| (p, logic_copies)));
    let template = match Fabric::new(args.nodes, &edges, rules, args.p_move) {
        Ok(fabric) => fabric,
        Err(e) => return fail(e, 1),
    };

    let mut out = header_comment(args.seed);
    out.push_str(membrane_core::harness::fabric::FabricRunReport::csv_header());
    out.push('\n');
    let mut any_wrong = false;
    let mut any_timeout = false;
    for seed in args.seed..args.seed + args.seeds {
        let report = fabric_run(
            &template,
            kind,
            &inputs,
            args.copies,
            args.redundancy.as_ref(),
            &args.failures,
            seed,
            args.budget,
        );
        if report.partitioned {
            eprintln!("warning: seed {seed}: failures disconnected the live subgraph");
        }
        match report.observed {
            None => any_timeout = true,
            Some(_) if !report.correct() => any_wrong = true,
            Some(_) => {}
        }
        out.push_str(&report.csv_row());
        out.push('\n');
    }
    if let Err(message) = write_data(args.output.as_deref(), &out) {
        return fail(message, 1);
    }
    report_exit(!any_wrong && !any_timeout, !any_wrong && any_timeout)
}
