//! Compiles Boolean netlists into executable membrane systems.
//!
//! Two backends:
//!
//! - **Tree**: one membrane per gate, nested so each gate contains the gates
//!   that feed it. Results travel upward via leave rules; the root gate is
//!   the skin and emits the circuit output into the environment. Inputs are
//!   injected at the skin as renamed transport symbols, hop down along
//!   `IN(child)` rules, and are re-transformed into plain bits only at their
//!   destination gate. Gate outputs must feed exactly one consumer.
//! - **Network**: one cell per input and per gate, wired by directed links.
//!   A wire feeding `k > 1` consumers gets a splitter cell that tags one
//!   copy per branch and routes each tag over its own labelled link.
//!   Works for any feed-forward circuit.
//!
//! All generated labels and symbols derive deterministically from wire
//! names; `__` separates namespace parts, which is why wire names may not
//! contain it.

use std::collections::BTreeMap;
use std::io::{self, Write};

use thiserror::Error;

use crate::dsl::{DslError, Netlist};
use crate::engine::{is_halted, Scheduler, Simulation};
use crate::gates::{
    deletion_rules, logic_rules, read_wire, token_logic_rules, GateKind, LogicLevel,
    RedundancyParams, TOKEN_SYMBOL,
};
use crate::multiset::{Multiset, Object, Symbol};
use crate::rule::{Rule, Target};
use crate::system::{MembraneSystem, RegionId, SystemKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Backend {
    #[default]
    Tree,
    Network,
}

/// Compilation switches. Labels are always derived from wire names, so a
/// given netlist and options compile to the identical system every time.
#[derive(Debug, Clone, Default)]
pub struct CompileOptions {
    pub backend: Backend,
    /// Compile gate bodies with threshold-encoded rules and decay cleanup.
    pub redundancy: Option<RedundancyParams>,
    /// Thread a ready token through every gate; the result is ready exactly
    /// when the token reaches the output region.
    pub ready_token: bool,
}

#[derive(Debug, Error)]
pub enum CompileError {
    #[error("wire {wire:?}: {detail}")]
    Shape { wire: String, detail: String },
    #[error("tree and network backends compile single-output circuits, found {found} outputs")]
    OutputCount { found: usize },
    #[error("ready token and redundancy cannot be combined")]
    TokenWithRedundancy,
    #[error("assignment misses input {name:?}")]
    MissingInput { name: String },
    #[error(transparent)]
    Netlist(#[from] DslError),
}

/// One injection point: which symbols carry a value of the named input, and
/// where they are placed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransportRoute {
    pub input: String,
    /// Region the symbols are injected into: the skin for tree systems, the
    /// input's own cell for networks.
    pub inject_region: String,
    pub zero: Symbol,
    pub one: Symbol,
    /// How many operand slots this route feeds; injection places this many
    /// copies (times the per-signal redundancy).
    pub slots: u64,
}

/// Symbol naming for a compiled circuit: the environment rails carrying the
/// final output, and the per-input transport symbols.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WireEncoding {
    pub output_zero: Symbol,
    pub output_one: Symbol,
    pub transports: Vec<TransportRoute>,
}

/// A compiled circuit: the bare system plus everything needed to inject
/// inputs and read the output.
#[derive(Debug, Clone)]
pub struct Compiled {
    pub system: MembraneSystem,
    pub netlist: Netlist,
    pub options: CompileOptions,
    pub output_wire: String,
    pub encoding: WireEncoding,
}

fn transport_symbol(input: &str, dest: &str, bit: bool) -> Symbol {
    Symbol::new(format!("{input}__{dest}__{}", if bit { 1 } else { 0 }))
}

fn tag_symbol(bit: bool, branch: usize) -> Symbol {
    Symbol::new(format!("{}__{branch}", if bit { 1 } else { 0 }))
}

fn bit_object(bit: bool) -> Object {
    Object::sym(if bit { "1" } else { "0" })
}

/// Compiles with `options.backend` forced to [`Backend::Tree`].
pub fn compile_tree(netlist: &Netlist, options: &CompileOptions) -> Result<Compiled, CompileError> {
    let options = CompileOptions { backend: Backend::Tree, ..options.clone() };
    compile(netlist, &options)
}

/// Compiles with `options.backend` forced to [`Backend::Network`].
pub fn compile_network(
    netlist: &Netlist,
    options: &CompileOptions,
) -> Result<Compiled, CompileError> {
    let options = CompileOptions { backend: Backend::Network, ..options.clone() };
    compile(netlist, &options)
}

pub fn compile(netlist: &Netlist, options: &CompileOptions) -> Result<Compiled, CompileError> {
    if options.ready_token && options.redundancy.is_some() {
        return Err(CompileError::TokenWithRedundancy);
    }
    if netlist.outputs.len() != 1 {
        return Err(CompileError::OutputCount { found: netlist.outputs.len() });
    }
    netlist.topo_order()?;
    let output_wire = netlist.outputs[0].clone();

    for gate in &netlist.gates {
        let consumers = netlist.consumers(&gate.output).len();
        let is_output = gate.output == output_wire;
        if is_output && consumers > 0 {
            return Err(CompileError::Shape {
                wire: gate.output.clone(),
                detail: "circuit output wire also feeds gates".to_string(),
            });
        }
        if !is_output && consumers == 0 {
            return Err(CompileError::Shape {
                wire: gate.output.clone(),
                detail: "gate output feeds nothing".to_string(),
            });
        }
    }
    if netlist.inputs.contains(&output_wire) && !netlist.consumers(&output_wire).is_empty() {
        return Err(CompileError::Shape {
            wire: output_wire.clone(),
            detail: "circuit output wire also feeds gates".to_string(),
        });
    }

    let mut compiled = match options.backend {
        Backend::Tree => build_tree(netlist, options, &output_wire)?,
        Backend::Network => build_network(netlist, options, &output_wire)?,
    };
    collect_alphabet(&mut compiled.system);
    compiled.system.output_alphabet.insert("0".into());
    compiled.system.output_alphabet.insert("1".into());
    debug_assert!(compiled.system.validate().is_empty());
    Ok(compiled)
}

/// The gate rule set for the chosen options, aimed at `target`.
fn gate_rules(kind: GateKind, options: &CompileOptions, target: Target) -> Vec<Rule> {
    match (&options.redundancy, options.ready_token) {
        (Some(params), _) => {
            let mut rules = logic_rules(kind, params.h, params.m, target);
            rules.extend(deletion_rules());
            rules
        }
        (None, true) => token_logic_rules(kind, target),
        (None, false) => logic_rules(kind, 1, 1, target),
    }
}

fn retransform_rule(symbol: &Symbol, bit: bool, with_token: bool, target: Target) -> Rule {
    let lhs = Multiset::from_iter([(Object::Symbol(symbol.clone()), 1)]);
    let mut products = Multiset::from_iter([(bit_object(bit), 1)]);
    if with_token {
        products.insert(Object::sym(TOKEN_SYMBOL), 1);
    }
    Rule::new(lhs, vec![(products, target)])
}

fn build_tree(
    netlist: &Netlist,
    options: &CompileOptions,
    output_wire: &str,
) -> Result<Compiled, CompileError> {
    let mut sys = MembraneSystem::new(SystemKind::Tree);
    let mut encoding = WireEncoding {
        output_zero: Symbol::new("0"),
        output_one: Symbol::new("1"),
        transports: Vec::new(),
    };

    // pure passthrough: a single membrane re-emits the injected input
    if netlist.gates.is_empty() {
        let root = sys.add_region(output_wire);
        for bit in [false, true] {
            let symbol = transport_symbol(output_wire, output_wire, bit);
            sys.add_rule(root, retransform_rule(&symbol, bit, options.ready_token, Target::Out));
        }
        encoding.transports.push(TransportRoute {
            input: output_wire.to_string(),
            inject_region: output_wire.to_string(),
            zero: transport_symbol(output_wire, output_wire, false),
            one: transport_symbol(output_wire, output_wire, true),
            slots: 1,
        });
        return Ok(Compiled {
            system: sys,
            netlist: netlist.clone(),
            options: options.clone(),
            output_wire: output_wire.to_string(),
            encoding,
        });
    }

    // gate outputs must feed exactly one consumer slot
    for gate in &netlist.gates {
        let slots = netlist.consumers(&gate.output).len();
        if gate.output != output_wire && slots != 1 {
            return Err(CompileError::Shape {
                wire: gate.output.clone(),
                detail: format!("tree backend needs fan-out 1 on gate outputs, found {slots}"),
            });
        }
    }
    let root_gate = netlist
        .gates
        .iter()
        .position(|g| g.output == output_wire)
        .ok_or_else(|| CompileError::Shape {
            wire: output_wire.to_string(),
            detail: "circuit output is not driven by a gate".to_string(),
        })?;

    // regions top-down from the output gate; children are the gates feeding it
    let gate_by_output: BTreeMap<&str, usize> = netlist
        .gates
        .iter()
        .enumerate()
        .map(|(i, g)| (g.output.as_str(), i))
        .collect();
    let mut region_of_gate: BTreeMap<usize, RegionId> = BTreeMap::new();
    let mut stack = vec![(root_gate, None::<RegionId>)];
    while let Some((gate, parent)) = stack.pop() {
        let decl = &netlist.gates[gate];
        let region = sys.add_region(&decl.output);
        region_of_gate.insert(gate, region);
        if let Some(parent) = parent {
            sys.nest(parent, region);
        }
        for operand in &decl.inputs {
            if let Some(&feeder) = gate_by_output.get(operand.as_str()) {
                stack.push((feeder, Some(region)));
            }
        }
    }
    if region_of_gate.len() != netlist.gates.len() {
        // consumers checks above make this unreachable, but keep it honest
        return Err(CompileError::Shape {
            wire: output_wire.to_string(),
            detail: "some gates are not reachable from the circuit output".to_string(),
        });
    }

    for (gate, &region) in &region_of_gate {
        for rule in gate_rules(netlist.gates[*gate].kind, options, Target::Out) {
            sys.add_rule(region, rule);
        }
    }

    // transport: inject renamed inputs at the skin, hop them down, and
    // re-transform into plain bits only at the destination gate
    let root_region = region_of_gate[&root_gate];
    for input in &netlist.inputs {
        let mut per_gate: BTreeMap<usize, u64> = BTreeMap::new();
        for (gate, _slot) in netlist.consumers(input) {
            *per_gate.entry(gate).or_insert(0) += 1;
        }
        for (gate, slots) in per_gate {
            let dest_label = &netlist.gates[gate].output;
            let path = path_from_root(netlist, root_gate, gate);
            for bit in [false, true] {
                let symbol = transport_symbol(input, dest_label, bit);
                let carried = Object::Symbol(symbol.clone());
                for hop in path.windows(2) {
                    let from = region_of_gate[&hop[0]];
                    let to_label = netlist.gates[hop[1]].output.clone();
                    sys.add_rule(
                        from,
                        Rule::new(
                            Multiset::from_iter([(carried.clone(), 1)]),
                            vec![(
                                Multiset::from_iter([(carried.clone(), 1)]),
                                Target::In(to_label),
                            )],
                        ),
                    );
                }
                let dest_region = region_of_gate[&gate];
                sys.add_rule(
                    dest_region,
                    retransform_rule(&symbol, bit, options.ready_token, Target::Here),
                );
            }
            encoding.transports.push(TransportRoute {
                input: input.clone(),
                inject_region: sys.region(root_region).label.clone(),
                zero: transport_symbol(input, dest_label, false),
                one: transport_symbol(input, dest_label, true),
                slots,
            });
        }
    }

    Ok(Compiled {
        system: sys,
        netlist: netlist.clone(),
        options: options.clone(),
        output_wire: output_wire.to_string(),
        encoding,
    })
}

/// Gate indices from the root gate down to `dest`, following operand edges.
fn path_from_root(netlist: &Netlist, root: usize, dest: usize) -> Vec<usize> {
    // fan-out 1 means each gate has exactly one consumer chain up to root
    let mut path = vec![dest];
    let mut current = dest;
    while current != root {
        let wire = &netlist.gates[current].output;
        let (consumer, _) = netlist.consumers(wire)[0];
        path.push(consumer);
        current = consumer;
    }
    path.reverse();
    path
}

fn build_network(
    netlist: &Netlist,
    options: &CompileOptions,
    output_wire: &str,
) -> Result<Compiled, CompileError> {
    let mut sys = MembraneSystem::new(SystemKind::Network);
    let mut encoding = WireEncoding {
        output_zero: Symbol::new("0"),
        output_one: Symbol::new("1"),
        transports: Vec::new(),
    };

    let mut cell_of_wire: BTreeMap<&str, RegionId> = BTreeMap::new();
    for input in &netlist.inputs {
        cell_of_wire.insert(input, sys.add_region(input));
    }
    for gate in &netlist.gates {
        cell_of_wire.insert(&gate.output, sys.add_region(&gate.output));
    }

    // wire routing: direct link for one consumer, splitter cell for several
    for wire in netlist.wires() {
        let producer = cell_of_wire[wire];
        let consumer_cells: Vec<RegionId> = netlist
            .consumers(wire)
            .iter()
            .map(|&(gate, _)| cell_of_wire[netlist.gates[gate].output.as_str()])
            .collect();
        match consumer_cells.len() {
            0 => {} // circuit output (or an unused input): no outgoing link
            1 => sys.link(producer, consumer_cells[0], None),
            k => {
                let splitter = sys.add_region(format!("{wire}__split"));
                sys.link(producer, splitter, None);
                for (branch, &consumer) in consumer_cells.iter().enumerate() {
                    sys.link(splitter, consumer, Some((branch + 1).to_string()));
                }
                for bit in [false, true] {
                    let mut fanned = Multiset::new();
                    for branch in 1..=k {
                        fanned.insert(Object::Symbol(tag_symbol(bit, branch)), 1);
                    }
                    let mut split_lhs = Multiset::from_iter([(bit_object(bit), 1)]);
                    if options.ready_token {
                        split_lhs.insert(Object::sym(TOKEN_SYMBOL), 1);
                    }
                    sys.add_rule(splitter, Rule::new(split_lhs, vec![(fanned, Target::Here)]));
                    for branch in 1..=k {
                        let mut forwarded = Multiset::from_iter([(bit_object(bit), 1)]);
                        if options.ready_token {
                            forwarded.insert(Object::sym(TOKEN_SYMBOL), 1);
                        }
                        sys.add_rule(
                            splitter,
                            Rule::new(
                                Multiset::from_iter([(Object::Symbol(tag_symbol(bit, branch)), 1)]),
                                vec![(forwarded, Target::Link(Some(branch.to_string())))],
                            ),
                        );
                    }
                }
            }
        }
    }

    // input cells re-transform the injected symbol and pass the bit along
    for input in &netlist.inputs {
        let cell = cell_of_wire[input.as_str()];
        let has_consumers = !netlist.consumers(input).is_empty();
        let target = if input == output_wire {
            Target::Out
        } else if has_consumers {
            Target::Link(None)
        } else {
            continue; // dangling input: nothing to forward to
        };
        for bit in [false, true] {
            let symbol = transport_symbol(input, input, bit);
            sys.add_rule(cell, retransform_rule(&symbol, bit, options.ready_token, target.clone()));
        }
        encoding.transports.push(TransportRoute {
            input: input.clone(),
            inject_region: input.clone(),
            zero: transport_symbol(input, input, false),
            one: transport_symbol(input, input, true),
            slots: 1,
        });
    }

    // gate cells: logic aimed at the single outgoing link, or at the
    // environment for the output gate
    for gate in &netlist.gates {
        let cell = cell_of_wire[gate.output.as_str()];
        let target = if gate.output == output_wire { Target::Out } else { Target::Link(None) };
        for rule in gate_rules(gate.kind, options, target) {
            sys.add_rule(cell, rule);
        }
    }

    Ok(Compiled {
        system: sys,
        netlist: netlist.clone(),
        options: options.clone(),
        output_wire: output_wire.to_string(),
        encoding,
    })
}

/// Rebuilds the alphabet from every symbol mentioned in contents or rules.
fn collect_alphabet(sys: &mut MembraneSystem) {
    fn absorb_multiset(ms: &Multiset, out: &mut Vec<Symbol>) {
        for (obj, _) in ms.iter() {
            match obj {
                Object::Symbol(s) => out.push(s.clone()),
                Object::Rule(rule) => absorb_rule(rule, out),
            }
        }
    }
    fn absorb_rule(rule: &Rule, out: &mut Vec<Symbol>) {
        absorb_multiset(&rule.lhs, out);
        for (products, _) in &rule.rhs {
            absorb_multiset(products, out);
        }
    }
    let mut symbols = Vec::new();
    for region in sys.regions() {
        absorb_multiset(&region.contents, &mut symbols);
        for (rule, _) in region.rule_pool() {
            absorb_rule(rule, &mut symbols);
        }
    }
    symbols.push(Symbol::new("0"));
    symbols.push(Symbol::new("1"));
    sys.alphabet.extend(symbols);
}

impl Compiled {
    /// Places one signal's worth of renamed input symbols per route. Plain
    /// circuits deliver one copy per operand slot; redundant circuits
    /// deliver `m` copies, comfortably above the `h` the gate consumes.
    pub fn inject(&self, assignment: &BTreeMap<String, bool>) -> Result<MembraneSystem, CompileError> {
        let copies = match &self.options.redundancy {
            Some(params) => params.m,
            None => 1,
        };
        self.inject_copies(assignment, copies)
    }

    /// As [`Compiled::inject`] with an explicit per-signal copy count.
    pub fn inject_copies(
        &self,
        assignment: &BTreeMap<String, bool>,
        copies: u64,
    ) -> Result<MembraneSystem, CompileError> {
        let mut sys = self.system.clone();
        for route in &self.encoding.transports {
            let value = assignment
                .get(&route.input)
                .copied()
                .ok_or_else(|| CompileError::MissingInput { name: route.input.clone() })?;
            let symbol = if value { route.one.clone() } else { route.zero.clone() };
            let region = sys
                .region_id_by_label(&route.inject_region)
                .expect("compiled systems keep their regions");
            sys.place(region, Object::Symbol(symbol), copies * route.slots);
        }
        Ok(sys)
    }

    pub fn redundancy(&self) -> Option<&RedundancyParams> {
        self.options.redundancy.as_ref()
    }
}

/// Re-arms a compiled circuit with the ready token: every gate consumes one
/// token per operand and emits one with its result, so exactly one token
/// accompanies the circuit output into the environment.
pub fn attach_ready_token(compiled: &Compiled) -> Result<Compiled, CompileError> {
    let options = CompileOptions { ready_token: true, ..compiled.options.clone() };
    compile(&compiled.netlist, &options)
}

/// What a verification run observed on the output wire.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Observed {
    Bit(bool),
    Ambiguous,
    Timeout,
}

impl std::fmt::Display for Observed {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Observed::Bit(true) => write!(f, "1"),
            Observed::Bit(false) => write!(f, "0"),
            Observed::Ambiguous => write!(f, "ambiguous"),
            Observed::Timeout => write!(f, "timeout"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct VerifyRow {
    pub assignment: String,
    pub seed: u64,
    pub expected: bool,
    pub observed: Observed,
    pub attempts: u64,
}

impl VerifyRow {
    pub fn pass(&self) -> bool {
        matches!(self.observed, Observed::Bit(bit) if bit == self.expected)
    }
}

/// Oracle-comparison report over every input assignment and seed.
#[derive(Debug, Clone, Default)]
pub struct VerifyReport {
    pub rows: Vec<VerifyRow>,
}

impl VerifyReport {
    pub fn all_pass(&self) -> bool {
        self.rows.iter().all(VerifyRow::pass)
    }

    pub fn any_timeout(&self) -> bool {
        self.rows.iter().any(|row| row.observed == Observed::Timeout)
    }

    pub fn worst_attempts(&self) -> u64 {
        self.rows.iter().map(|row| row.attempts).max().unwrap_or(0)
    }

    /// `assignment,expected,observed,pass,attempts` rows.
    pub fn write_csv(&self, mut w: impl Write) -> io::Result<()> {
        writeln!(w, "assignment,expected,observed,pass,attempts")?;
        for row in &self.rows {
            writeln!(
                w,
                "{},{},{},{},{}",
                row.assignment,
                row.expected as u8,
                row.observed,
                row.pass(),
                row.attempts
            )?;
        }
        Ok(())
    }
}

/// Runs the compiled system on every input assignment and seed, reads the
/// output from the environment, and compares against direct Boolean
/// evaluation of the netlist.
pub fn verify_against_oracle(
    compiled: &Compiled,
    seeds: &[u64],
    attempt_budget: u64,
) -> Result<VerifyReport, CompileError> {
    let mut report = VerifyReport::default();
    for assignment in compiled.netlist.assignments() {
        let expected = compiled.netlist.evaluate(&assignment)?[&compiled.output_wire];
        let label: String = compiled
            .netlist
            .inputs
            .iter()
            .map(|input| if assignment[input] { '1' } else { '0' })
            .collect();
        for &seed in seeds {
            let sys = compiled.inject(&assignment)?;
            let (observed, attempts) = run_to_output(compiled, sys, seed, attempt_budget);
            report.rows.push(VerifyRow {
                assignment: label.clone(),
                seed,
                expected,
                observed,
                attempts,
            });
        }
    }
    Ok(report)
}

/// Steps until the output is readable from the environment, the system
/// halts, or the budget runs out. Returns what was read and the attempts
/// consumed.
pub fn run_to_output(
    compiled: &Compiled,
    system: MembraneSystem,
    seed: u64,
    attempt_budget: u64,
) -> (Observed, u64) {
    let mut sim = Simulation::new(system, seed, Scheduler::UniformRegion);
    let token = Object::sym(TOKEN_SYMBOL);
    loop {
        if sim.attempts() >= attempt_budget {
            return (Observed::Timeout, sim.attempts());
        }
        sim.step().expect("compiled systems have resolvable targets");

        match compiled.redundancy() {
            None => {
                if let Some((_, object)) =
                    sim.emitted().iter().find(|(_, object)| *object != token)
                {
                    let bit = object == &Object::sym("1");
                    return (Observed::Bit(bit), sim.attempts());
                }
            }
            Some(params) => {
                let env = &sim.system().environment;
                let level =
                    read_wire(env.count_symbol("0"), env.count_symbol("1"), params);
                match level {
                    LogicLevel::Zero => return (Observed::Bit(false), sim.attempts()),
                    LogicLevel::One => return (Observed::Bit(true), sim.attempts()),
                    LogicLevel::Ambiguous => return (Observed::Ambiguous, sim.attempts()),
                    LogicLevel::Undefined => {}
                }
            }
        }

        // a halted system without readable output will never produce one
        if sim.attempts() % 64 == 0 && is_halted(sim.system()) {
            return (Observed::Timeout, sim.attempts());
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::parse_netlist;

    fn options(backend: Backend) -> CompileOptions {
        CompileOptions { backend, ..CompileOptions::default() }
    }

    #[test]
    fn tree_backend_compiles_the_three_gate_example() {
        let netlist =
            parse_netlist("input a, b; n1 = AND(a, b); n2 = NOT(b); z = OR(n1, n2); output z;")
                .unwrap();
        let compiled = compile_tree(&netlist, &options(Backend::Tree)).unwrap();
        assert!(compiled.system.validate().is_empty());
        assert_eq!(compiled.system.kind, SystemKind::Tree);
        assert_eq!(compiled.system.skin(), compiled.system.region_id_by_label("z"));
        // b fans out to two gates, so two transport routes carry it
        let b_routes: Vec<_> = compiled
            .encoding
            .transports
            .iter()
            .filter(|r| r.input == "b")
            .collect();
        assert_eq!(b_routes.len(), 2);
    }

    #[test]
    fn tree_backend_rejects_gate_fanout() {
        let netlist = parse_netlist(
            "input a, b; n1 = NAND(a, b); n2 = NAND(a, n1); n3 = NAND(b, n1); z = NAND(n2, n3); output z;",
        )
        .unwrap();
        let err = compile_tree(&netlist, &options(Backend::Tree)).unwrap_err();
        assert!(matches!(err, CompileError::Shape { .. }));
    }

    #[test]
    fn network_backend_inserts_splitters() {
        let netlist = parse_netlist(
            "input a, b; n1 = NAND(a, b); n2 = NAND(a, n1); n3 = NAND(b, n1); z = NAND(n2, n3); output z;",
        )
        .unwrap();
        let compiled = compile_network(&netlist, &options(Backend::Network)).unwrap();
        assert!(compiled.system.validate().is_empty());
        assert_eq!(compiled.system.kind, SystemKind::Network);
        for splitter in ["a__split", "b__split", "n1__split"] {
            assert!(compiled.system.region_by_label(splitter).is_some(), "{splitter} missing");
        }
    }

    #[test]
    fn passthrough_emits_its_input() {
        let netlist = parse_netlist("input a; output a;").unwrap();
        for backend in [Backend::Tree, Backend::Network] {
            let compiled = compile(&netlist, &options(backend)).unwrap();
            let assignment = BTreeMap::from([("a".to_string(), true)]);
            let sys = compiled.inject(&assignment).unwrap();
            let (observed, _) = run_to_output(&compiled, sys, 3, 10_000);
            assert_eq!(observed, Observed::Bit(true));
        }
    }

    #[test]
    fn token_with_redundancy_is_rejected() {
        let netlist = parse_netlist("input a; z = NOT(a); output z;").unwrap();
        let opts = CompileOptions {
            backend: Backend::Tree,
            redundancy: Some(RedundancyParams::new(3, 5).unwrap()),
            ready_token: true,
        };
        assert!(matches!(compile(&netlist, &opts), Err(CompileError::TokenWithRedundancy)));
    }

    #[test]
    fn corrupted_system_fails_verification() {
        let netlist = parse_netlist("input a, b; z = AND(a, b); output z;").unwrap();
        let mut compiled = compile_tree(&netlist, &options(Backend::Tree)).unwrap();
        // flip the 11 row's product from 1 to 0
        let region = compiled.system.region_id_by_label("z").unwrap();
        let bad = Rule::symbols([("1", 2)], [(&[("0", 1)][..], Target::Out)]);
        let good = Rule::symbols([("1", 2)], [(&[("1", 1)][..], Target::Out)]);
        let pool = &mut compiled.system.region_mut(region).rules;
        pool.remove(&Object::rule(good), 1);
        pool.insert(Object::rule(bad), 1);

        let report = verify_against_oracle(&compiled, &[0, 1, 2], 10_000).unwrap();
        assert!(!report.all_pass());
        let failing: Vec<_> = report.rows.iter().filter(|r| !r.pass()).collect();
        assert!(failing.iter().all(|r| r.assignment == "11"));
    }

    #[test]
    fn no_token_injected_means_no_firing() {
        let netlist = parse_netlist("input a, b; z = AND(a, b); output z;").unwrap();
        let compiled = compile_tree(&netlist, &options(Backend::Tree)).unwrap();
        let tokened = attach_ready_token(&compiled).unwrap();
        // place raw bits without their tokens: the gate rule requires t
        let mut sys = tokened.system.clone();
        let region = sys.region_id_by_label("z").unwrap();
        sys.place_symbols(region, [("1", 2)]);
        assert!(is_halted(&sys));
    }
}
