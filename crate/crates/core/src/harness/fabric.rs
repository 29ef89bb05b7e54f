//! The distributed particle fabric: a connected graph of tiny reactors that
//! jointly behave like one well-stirred reactor.
//!
//! Every node holds a local contents multiset and shares one global rule
//! pool. Each fabric step is either a reaction attempt at a random live node
//! (cooperative rules fire only when all reactants sit in the same node) or
//! a migration event that moves one random object to a random live
//! neighbor. Mixing comes entirely from migration; failed nodes neither
//! react nor receive objects.

use std::collections::BTreeSet;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::engine::{Trace, TraceRow};
use crate::gates::{deletion_rules, logic_rules, read_wire, GateKind, LogicLevel, RedundancyParams};
use crate::multiset::{Multiset, Object};
use crate::rule::{Rule, Target};

#[derive(Debug, Error, PartialEq)]
pub enum FabricError {
    #[error("fabric graph must be connected at construction")]
    Disconnected,
    #[error("p_move must lie in (0, 1], found {0}")]
    BadMoveProbability(f64),
    #[error("fabric rules may only use H and L targets, found {0}")]
    UnsupportedTarget(String),
    #[error("edge ({0}, {1}) references a missing node")]
    BadEdge(usize, usize),
}

/// A graph of particle reactors with a shared rule pool.
#[derive(Debug, Clone)]
pub struct Fabric {
    nodes: Vec<Multiset>,
    adjacency: Vec<Vec<usize>>,
    edges: Vec<(usize, usize)>,
    rules: Multiset,
    p_move: f64,
    failed: BTreeSet<usize>,
    pub environment: Multiset,
    emitted: Vec<(u64, Object)>,
    attempts: u64,
}

impl Fabric {
    /// Builds a fabric over an undirected edge list. The graph must be
    /// connected, `p_move` in `(0, 1]`, and every rule local (`H`) or
    /// emitting (`L`).
    pub fn new(
        node_count: usize,
        edges: &[(usize, usize)],
        rules: impl IntoIterator<Item = (Rule, u64)>,
        p_move: f64,
    ) -> Result<Self, FabricError> {
        if !(p_move > 0.0 && p_move <= 1.0) {
            return Err(FabricError::BadMoveProbability(p_move));
        }
        let mut adjacency = vec![Vec::new(); node_count];
        for &(a, b) in edges {
            if a >= node_count || b >= node_count {
                return Err(FabricError::BadEdge(a, b));
            }
            adjacency[a].push(b);
            adjacency[b].push(a);
        }
        if !connected(node_count, &adjacency) {
            return Err(FabricError::Disconnected);
        }
        let mut pool = Multiset::new();
        for (rule, copies) in rules {
            for (_, target) in &rule.rhs {
                if !matches!(target, Target::Here | Target::Out) {
                    return Err(FabricError::UnsupportedTarget(target.to_string()));
                }
            }
            pool.insert(Object::rule(rule), copies);
        }
        Ok(Fabric {
            nodes: vec![Multiset::new(); node_count],
            adjacency,
            edges: edges.to_vec(),
            rules: pool,
            p_move,
            failed: BTreeSet::new(),
            environment: Multiset::new(),
            emitted: Vec::new(),
            attempts: 0,
        })
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn p_move(&self) -> f64 {
        self.p_move
    }

    pub fn attempts(&self) -> u64 {
        self.attempts
    }

    pub fn emitted(&self) -> &[(u64, Object)] {
        &self.emitted
    }

    pub fn node(&self, idx: usize) -> &Multiset {
        &self.nodes[idx]
    }

    pub fn place(&mut self, node: usize, object: Object, count: u64) {
        self.nodes[node].insert(object, count);
    }

    pub fn live_nodes(&self) -> Vec<usize> {
        (0..self.nodes.len()).filter(|i| !self.failed.contains(i)).collect()
    }

    pub fn is_failed(&self, node: usize) -> bool {
        self.failed.contains(&node)
    }

    /// Kills a node: its contents are lost and it stops reacting and
    /// receiving.
    pub fn fail_node(&mut self, node: usize) {
        self.failed.insert(node);
        self.nodes[node] = Multiset::new();
    }

    /// Sum of all live node contents: the aggregate reactor state.
    pub fn aggregate(&self) -> Multiset {
        let mut total = Multiset::new();
        for idx in self.live_nodes() {
            total.insert_all(&self.nodes[idx]);
        }
        total
    }

    /// Total object copies across live nodes.
    pub fn total_count(&self) -> u64 {
        self.live_nodes().iter().map(|&i| self.nodes[i].size()).sum()
    }

    /// True when the live subgraph is connected (failures can partition it).
    pub fn live_connected(&self) -> bool {
        let live: Vec<usize> = self.live_nodes();
        if live.len() <= 1 {
            return true;
        }
        let mut seen = BTreeSet::new();
        let mut stack = vec![live[0]];
        seen.insert(live[0]);
        while let Some(node) = stack.pop() {
            for &next in &self.adjacency[node] {
                if !self.failed.contains(&next) && seen.insert(next) {
                    stack.push(next);
                }
            }
        }
        seen.len() == live.len()
    }

    /// No rule can fire even against the aggregate contents; migration
    /// cannot wake such a fabric up.
    pub fn is_exhausted(&self) -> bool {
        let aggregate = self.aggregate();
        self.rules.iter().all(|(obj, _)| match obj {
            Object::Rule(rule) => !aggregate.contains(&rule.lhs),
            Object::Symbol(_) => true,
        })
    }
}

fn connected(node_count: usize, adjacency: &[Vec<usize>]) -> bool {
    if node_count <= 1 {
        return true;
    }
    let mut seen = BTreeSet::from([0usize]);
    let mut stack = vec![0usize];
    while let Some(node) = stack.pop() {
        for &next in &adjacency[node] {
            if seen.insert(next) {
                stack.push(next);
            }
        }
    }
    seen.len() == node_count
}

/// One fabric action: a reaction attempt at a random live node, or a
/// migration event. A fabric with no edges degenerates to pure reaction and
/// draws exactly like a single-region engine run.
pub fn fabric_step(fabric: &mut Fabric, rng: &mut ChaCha8Rng) {
    fabric.attempts += 1;
    let live = fabric.live_nodes();
    if live.is_empty() {
        return;
    }
    let migration_possible = !fabric.edges.is_empty();
    let migrate = migration_possible && rng.random_range(0..2u32) == 1;
    if migrate {
        migration_event(fabric, &live, rng);
    } else {
        let node = pick(&live, rng);
        reaction_attempt(fabric, node, rng);
    }
}

fn pick(live: &[usize], rng: &mut ChaCha8Rng) -> usize {
    if live.len() == 1 {
        live[0]
    } else {
        live[rng.random_range(0..live.len())]
    }
}

fn migration_event(fabric: &mut Fabric, live: &[usize], rng: &mut ChaCha8Rng) {
    let node = pick(live, rng);
    if rng.random::<f64>() >= fabric.p_move {
        return;
    }
    let size = fabric.nodes[node].size();
    if size == 0 {
        return;
    }
    let neighbors: Vec<usize> = fabric.adjacency[node]
        .iter()
        .copied()
        .filter(|n| !fabric.failed.contains(n))
        .collect();
    if neighbors.is_empty() {
        return;
    }
    let idx = if size == 1 { 0 } else { rng.random_range(0..size) };
    let object = fabric.nodes[node].nth_copy(idx).clone();
    let dest = pick(&neighbors, rng);
    fabric.nodes[node].remove(&object, 1);
    fabric.nodes[dest].insert(object, 1);
}

/// The same choose-rule / sample-objects discipline as the engine, against
/// one node's local contents.
fn reaction_attempt(fabric: &mut Fabric, node: usize, rng: &mut ChaCha8Rng) {
    let pool_size = fabric.rules.size();
    if pool_size == 0 {
        return;
    }
    let idx = if pool_size == 1 { 0 } else { rng.random_range(0..pool_size) };
    let rule = match fabric.rules.nth_copy(idx) {
        Object::Rule(rule) => rule.as_ref().clone(),
        Object::Symbol(_) => return,
    };

    let contents = &fabric.nodes[node];
    let need = rule.lhs.size();
    if contents.size() < need {
        return;
    }
    let mut pool = contents.clone();
    let mut taken = Multiset::new();
    let mut remaining = pool.size();
    for _ in 0..need {
        let draw = if remaining == 1 { 0 } else { rng.random_range(0..remaining) };
        let obj = pool.nth_copy(draw).clone();
        pool.remove(&obj, 1);
        remaining -= 1;
        taken.insert(obj.clone(), 1);
        if taken.count(&obj) > rule.lhs.count(&obj) {
            return;
        }
    }
    if taken != rule.lhs {
        return;
    }

    let attempt_no = fabric.attempts;
    fabric.nodes[node].remove_all(&rule.lhs);
    for (products, target) in &rule.rhs {
        match target {
            Target::Here => fabric.nodes[node].insert_all(products),
            Target::Out => {
                fabric.environment.insert_all(products);
                for obj in products.iter_copies() {
                    fabric.emitted.push((attempt_no, obj.clone()));
                }
            }
            _ => unreachable!("constructor rejects other targets"),
        }
    }
}

/// Runs a fabric for up to `max_attempts` steps, sampling node contents
/// every `trace_every` attempts into an engine-compatible trace (node index
/// as the region label).
pub fn fabric_run_trace(
    fabric: &mut Fabric,
    seed: u64,
    max_attempts: u64,
    trace_every: u64,
) -> Trace {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut trace = Trace::default();
    snapshot(fabric, &mut trace, 0);
    for attempt in 1..=max_attempts {
        fabric_step(fabric, &mut rng);
        if attempt % trace_every == 0 {
            snapshot(fabric, &mut trace, attempt);
        }
        if attempt % 64 == 0 && fabric.is_exhausted() {
            trace.halted_at = Some(attempt);
            break;
        }
    }
    trace.emitted = fabric.emitted.clone();
    trace
}

fn snapshot(fabric: &Fabric, trace: &mut Trace, attempt: u64) {
    for (idx, contents) in fabric.nodes.iter().enumerate() {
        for (object, &count) in contents.iter() {
            trace.rows.push(TraceRow {
                attempt,
                region: idx.to_string(),
                object: object.clone(),
                count,
            });
        }
    }
}

/// The shared rule pool for a logic gate on the fabric: plain cooperative
/// rules, or threshold rules plus decay when redundancy is given.
pub fn gate_rule_pool(
    kind: GateKind,
    redundancy: Option<(&RedundancyParams, u64)>,
) -> Vec<(Rule, u64)> {
    match redundancy {
        None => logic_rules(kind, 1, 1, Target::Out).into_iter().map(|r| (r, 1)).collect(),
        Some((params, logic_copies)) => {
            let mut rules: Vec<(Rule, u64)> = logic_rules(kind, params.h, params.m, Target::Out)
                .into_iter()
                .map(|r| (r, logic_copies.max(1)))
                .collect();
            rules.extend(deletion_rules().into_iter().map(|r| (r, 1)));
            rules
        }
    }
}

/// Kill `node` once the run reaches `at_attempt`.
#[derive(Debug, Clone, Copy)]
pub struct NodeFailure {
    pub node: usize,
    pub at_attempt: u64,
}

/// Outcome of one seeded fabric computation.
#[derive(Debug, Clone)]
pub struct FabricRunReport {
    pub nodes: usize,
    pub edges: usize,
    pub p_move: f64,
    pub failures: usize,
    pub observed: Option<bool>,
    pub expected: bool,
    pub attempts_to_output: Option<u64>,
    /// Set when failures disconnected the live subgraph.
    pub partitioned: bool,
    /// Surviving copies of `0`/`1` right after the last failure.
    pub survivors: (u64, u64),
}

impl FabricRunReport {
    pub fn correct(&self) -> bool {
        self.observed == Some(self.expected)
    }

    pub fn csv_header() -> &'static str {
        "nodes,edges,p_move,failures,correct,attempts_to_output"
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{}",
            self.nodes,
            self.edges,
            self.p_move,
            self.failures,
            self.correct(),
            self.attempts_to_output.map_or_else(|| "timeout".to_string(), |a| a.to_string()),
        )
    }
}

/// Runs one gate computation on a fabric: inputs are scattered over random
/// live nodes (`copies` molecules per input), scheduled node failures strike
/// mid-run, and the output is read from the fabric environment.
#[allow(clippy::too_many_arguments)]
pub fn fabric_run(
    template: &Fabric,
    kind: GateKind,
    inputs: &[bool],
    copies: u64,
    redundancy: Option<&RedundancyParams>,
    failures: &[NodeFailure],
    seed: u64,
    attempt_budget: u64,
) -> FabricRunReport {
    let mut fabric = template.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let expected = kind.eval(inputs);

    for &bit in inputs {
        let object = Object::sym(if bit { "1" } else { "0" });
        for _ in 0..copies {
            let live = fabric.live_nodes();
            let node = pick(&live, &mut rng);
            fabric.place(node, object.clone(), 1);
        }
    }

    let mut pending: Vec<NodeFailure> = failures.to_vec();
    pending.sort_by_key(|f| f.at_attempt);
    let mut next_failure = 0;
    let mut partitioned = false;
    let mut survivors = (
        fabric.aggregate().count_symbol("0"),
        fabric.aggregate().count_symbol("1"),
    );

    let mut observed = None;
    let mut attempts_to_output = None;
    while fabric.attempts() < attempt_budget {
        let now = fabric.attempts() + 1;
        while next_failure < pending.len() && pending[next_failure].at_attempt == now {
            fabric.fail_node(pending[next_failure].node);
            next_failure += 1;
            partitioned |= !fabric.live_connected();
            let aggregate = fabric.aggregate();
            survivors = (aggregate.count_symbol("0"), aggregate.count_symbol("1"));
        }
        fabric_step(&mut fabric, &mut rng);

        let done = match redundancy {
            None => fabric.emitted().first().map(|(_, object)| object == &Object::sym("1")),
            Some(params) => {
                let level = read_wire(
                    fabric.environment.count_symbol("0"),
                    fabric.environment.count_symbol("1"),
                    params,
                );
                match level {
                    LogicLevel::One => Some(true),
                    LogicLevel::Zero => Some(false),
                    _ => None,
                }
            }
        };
        if let Some(bit) = done {
            observed = Some(bit);
            attempts_to_output = Some(fabric.attempts());
            break;
        }
        if next_failure >= pending.len()
            && fabric.attempts() % 256 == 0
            && fabric.is_exhausted()
        {
            break;
        }
    }

    FabricRunReport {
        nodes: fabric.node_count(),
        edges: fabric.edge_count(),
        p_move: fabric.p_move(),
        failures: failures.len(),
        observed,
        expected,
        attempts_to_output,
        partitioned,
        survivors,
    }
}

/// Ring over `n` nodes.
pub fn cycle_edges(n: usize) -> Vec<(usize, usize)> {
    (0..n).map(|i| (i, (i + 1) % n)).collect()
}

/// 4-neighbor grid, `width * height` nodes.
pub fn grid_edges(width: usize, height: usize) -> Vec<(usize, usize)> {
    let mut edges = Vec::new();
    for y in 0..height {
        for x in 0..width {
            let node = y * width + x;
            if x + 1 < width {
                edges.push((node, node + 1));
            }
            if y + 1 < height {
                edges.push((node, node + width));
            }
        }
    }
    edges
}

/// Random graph with independent edge probability, re-sampled until
/// connected; after 100 failures the components are chained together so
/// construction always succeeds.
pub fn random_graph_edges(n: usize, edge_prob: f64, seed: u64) -> Vec<(usize, usize)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..100 {
        let mut edges = Vec::new();
        for a in 0..n {
            for b in (a + 1)..n {
                if rng.random::<f64>() < edge_prob {
                    edges.push((a, b));
                }
            }
        }
        let mut adjacency = vec![Vec::new(); n];
        for &(a, b) in &edges {
            adjacency[a].push(b);
            adjacency[b].push(a);
        }
        if connected(n, &adjacency) {
            return edges;
        }
    }
    let mut edges: Vec<(usize, usize)> = (1..n).map(|i| (i - 1, i)).collect();
    for a in 0..n {
        for b in (a + 2)..n {
            if rng.random::<f64>() < edge_prob {
                edges.push((a, b));
            }
        }
    }
    edges
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_node_fabric_never_migrates() {
        let rules = gate_rule_pool(GateKind::And, None);
        let mut fabric = Fabric::new(1, &[], rules, 0.5).unwrap();
        fabric.place(0, Object::sym("1"), 1);
        fabric.place(0, Object::sym("1"), 1);
        let trace = fabric_run_trace(&mut fabric, 9, 5_000, 1);
        assert_eq!(fabric.emitted().len(), 1);
        assert_eq!(fabric.emitted()[0].1, Object::sym("1"));
        assert!(trace.halted_at.is_some());
    }

    #[test]
    fn forced_move_transfers_the_object() {
        let mut fabric = Fabric::new(2, &[(0, 1)], Vec::new(), 1.0).unwrap();
        fabric.place(0, Object::sym("a"), 1);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..64 {
            fabric_step(&mut fabric, &mut rng);
            if fabric.node(1).count_symbol("a") == 1 {
                break;
            }
        }
        assert_eq!(fabric.node(0).count_symbol("a"), 0);
        assert_eq!(fabric.node(1).count_symbol("a"), 1);
        assert_eq!(fabric.total_count(), 1);
    }

    #[test]
    fn migration_conserves_total_count() {
        let mut fabric = Fabric::new(4, &cycle_edges(4), Vec::new(), 0.8).unwrap();
        for node in 0..4 {
            fabric.place(node, Object::sym("a"), 3);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10_000 {
            fabric_step(&mut fabric, &mut rng);
        }
        assert_eq!(fabric.total_count(), 12);
    }

    #[test]
    fn disconnected_graph_is_rejected() {
        let err = Fabric::new(4, &[(0, 1), (2, 3)], Vec::new(), 0.5).unwrap_err();
        assert_eq!(err, FabricError::Disconnected);
    }

    #[test]
    fn failed_node_drops_contents_and_stops_receiving() {
        let mut fabric = Fabric::new(3, &cycle_edges(3), Vec::new(), 1.0).unwrap();
        fabric.place(0, Object::sym("a"), 2);
        fabric.place(1, Object::sym("a"), 5);
        fabric.fail_node(1);
        assert_eq!(fabric.total_count(), 2);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..5_000 {
            fabric_step(&mut fabric, &mut rng);
        }
        assert_eq!(fabric.node(1).size(), 0);
        assert_eq!(fabric.total_count(), 2);
    }

    #[test]
    fn cooperative_and_on_a_fabric_reaches_the_right_output() {
        let rules = gate_rule_pool(GateKind::And, None);
        let template = Fabric::new(4, &cycle_edges(4), rules, 0.5).unwrap();
        let report = fabric_run(&template, GateKind::And, &[true, false], 1, None, &[], 3, 200_000);
        assert_eq!(report.observed, Some(false));
        assert!(report.correct());
    }

    #[test]
    fn topology_generators_produce_connected_graphs() {
        for n in [2, 5, 16] {
            assert!(Fabric::new(n, &cycle_edges(n), Vec::new(), 1.0).is_ok());
        }
        assert!(Fabric::new(12, &grid_edges(4, 3), Vec::new(), 1.0).is_ok());
        for seed in 0..5 {
            let edges = random_graph_edges(16, 0.2, seed);
            assert!(Fabric::new(16, &edges, Vec::new(), 1.0).is_ok());
        }
    }
}
