//! Asynchronous stochastic execution of membrane systems.
//!
//! One *attempt* picks a rule uniformly from a region's rule pool, then
//! samples `|lhs|` objects uniformly without replacement from the region's
//! contents. The rule fires only when the sample equals the left-hand side
//! exactly; otherwise the attempt is rejected and the state is unchanged.
//! A *step* schedules one region and runs one attempt there. Rejected
//! attempts consume a time step, so attempt counts double as the time axis.
//!
//! All randomness comes from a seeded ChaCha8 stream, so equal seeds and
//! inputs give byte-identical traces on every platform.

pub mod parallel;

use std::io::{self, Write};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::multiset::{Multiset, Object};
use crate::rule::{Rule, Target};
use crate::system::{MembraneSystem, RegionId};

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("region {region:?}: rule {rule:?} names unresolvable target {target}")]
    TargetUnresolvable {
        region: String,
        rule: String,
        target: String,
    },
    #[error("system has no regions")]
    NoRegions,
}

/// How [`Simulation::step`] picks the next region.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Scheduler {
    /// Uniformly random region per step.
    #[default]
    UniformRegion,
    /// Cyclic sweep over regions.
    RoundRobin,
}

/// Bounds and sampling strides for a run.
#[derive(Debug, Clone)]
pub struct SimConfig {
    pub seed: u64,
    pub max_attempts: u64,
    pub scheduler: Scheduler,
    /// Record a contents snapshot every this many attempts.
    pub trace_every: u64,
    /// Check for halting every this many attempts. Subset checks over every
    /// rule are not free, so the check is amortized.
    pub halting_check_every: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            seed: 0,
            max_attempts: 10_000,
            scheduler: Scheduler::UniformRegion,
            trace_every: 1,
            halting_check_every: 8,
        }
    }
}

impl SimConfig {
    pub fn seeded(seed: u64) -> Self {
        SimConfig { seed, ..SimConfig::default() }
    }

    pub fn with_max_attempts(mut self, max_attempts: u64) -> Self {
        self.max_attempts = max_attempts;
        self
    }
}

/// An external add/remove of molecules at a fixed attempt index. Removal is
/// clipped at zero.
#[derive(Debug, Clone)]
pub struct Disturbance {
    pub at_attempt: u64,
    pub region: String,
    pub delta: DisturbanceDelta,
}

#[derive(Debug, Clone)]
pub enum DisturbanceDelta {
    Add(Multiset),
    Remove(Multiset),
}

/// Result of one attempt inside a region.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AttemptOutcome {
    Applied(Rule),
    Rejected,
    NoRules,
}

/// One scheduled attempt: which region ran and what happened.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StepOutcome {
    pub region: RegionId,
    pub outcome: AttemptOutcome,
}

/// A sampled contents row: `(attempt, region label, object, count)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceRow {
    pub attempt: u64,
    pub region: String,
    pub object: Object,
    pub count: u64,
}

/// Time-indexed record of a run: sampled per-region counts, the stream of
/// objects that reached the environment, and the halting attempt if any.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Trace {
    pub rows: Vec<TraceRow>,
    pub emitted: Vec<(u64, Object)>,
    pub halted_at: Option<u64>,
}

impl Trace {
    /// Counts stream: header `attempt,region,object,count`.
    pub fn write_counts_csv(&self, mut w: impl Write) -> io::Result<()> {
        writeln!(w, "attempt,region,object,count")?;
        for row in &self.rows {
            writeln!(w, "{},{},{},{}", row.attempt, row.region, row.object, row.count)?;
        }
        Ok(())
    }

    /// Emission stream: header `attempt,emitted_object`.
    pub fn write_emitted_csv(&self, mut w: impl Write) -> io::Result<()> {
        writeln!(w, "attempt,emitted_object")?;
        for (attempt, object) in &self.emitted {
            writeln!(w, "{attempt},{object}")?;
        }
        Ok(())
    }

    /// The sampled count of `symbol` in `region`, as `(attempt, count)`
    /// pairs in attempt order.
    pub fn series(&self, region: &str, symbol: &str) -> Vec<(u64, u64)> {
        let object = Object::sym(symbol);
        self.rows
            .iter()
            .filter(|row| row.region == region && row.object == object)
            .map(|row| (row.attempt, row.count))
            .collect()
    }
}

/// A running simulation: the system, its RNG stream, and counters.
pub struct Simulation {
    system: MembraneSystem,
    rng: ChaCha8Rng,
    scheduler: Scheduler,
    round_robin_cursor: usize,
    attempts: u64,
    emitted: Vec<(u64, Object)>,
}

impl Simulation {
    pub fn new(system: MembraneSystem, seed: u64, scheduler: Scheduler) -> Self {
        Simulation {
            system,
            rng: ChaCha8Rng::seed_from_u64(seed),
            scheduler,
            round_robin_cursor: 0,
            attempts: 0,
            emitted: Vec::new(),
        }
    }

    pub fn system(&self) -> &MembraneSystem {
        &self.system
    }

    pub fn system_mut(&mut self) -> &mut MembraneSystem {
        &mut self.system
    }

    pub fn attempts(&self) -> u64 {
        self.attempts
    }

    pub fn emitted(&self) -> &[(u64, Object)] {
        &self.emitted
    }

    pub fn into_system(self) -> MembraneSystem {
        self.system
    }

    /// Schedules one region and runs one attempt there. The attempt counter
    /// advances whether or not anything fires.
    pub fn step(&mut self) -> Result<StepOutcome, EngineError> {
        let region_count = self.system.regions().len();
        if region_count == 0 {
            return Err(EngineError::NoRegions);
        }
        let region = match self.scheduler {
            Scheduler::UniformRegion => {
                if region_count == 1 {
                    RegionId(0)
                } else {
                    RegionId(self.rng.random_range(0..region_count))
                }
            }
            Scheduler::RoundRobin => {
                let idx = self.round_robin_cursor;
                self.round_robin_cursor = (idx + 1) % region_count;
                RegionId(idx)
            }
        };
        self.attempts += 1;
        let outcome = self.attempt(region)?;
        Ok(StepOutcome { region, outcome })
    }

    /// One attempt inside `region`, exactly as the reactor loop does it:
    /// uniform rule choice from the pool (duplicated rules weigh double),
    /// then a uniform without-replacement sample of `|lhs|` objects from the
    /// contents, rule-valued objects included.
    pub fn attempt(&mut self, region: RegionId) -> Result<AttemptOutcome, EngineError> {
        let pool_size = self.system.region(region).rules.size();
        if pool_size == 0 {
            return Ok(AttemptOutcome::NoRules);
        }
        let rule = {
            let idx = if pool_size == 1 { 0 } else { self.rng.random_range(0..pool_size) };
            match self.system.region(region).rules.nth_copy(idx) {
                Object::Rule(rule) => rule.as_ref().clone(),
                Object::Symbol(_) => unreachable!("rule pools hold rule objects only"),
            }
        };

        if !self.sample_matches(region, &rule.lhs) {
            return Ok(AttemptOutcome::Rejected);
        }

        let attempt_no = self.attempts;
        let region_ref = self.system.region_mut(region);
        region_ref.contents.remove_all(&rule.lhs);

        for (products, target) in &rule.rhs {
            if products.is_empty() {
                continue;
            }
            let destination = self.resolve_target(region, &rule, target)?;
            match destination {
                Destination::Region(id) => {
                    self.system.region_mut(id).contents.insert_all(products);
                }
                Destination::Environment => {
                    self.system.environment.insert_all(products);
                    for obj in products.iter_copies() {
                        self.emitted.push((attempt_no, obj.clone()));
                    }
                }
            }
        }
        Ok(AttemptOutcome::Applied(rule))
    }

    /// Draws `|lhs|` objects uniformly without replacement and compares the
    /// sample against `lhs`. Bails out at the first object that cannot be
    /// part of a matching sample.
    fn sample_matches(&mut self, region: RegionId, lhs: &Multiset) -> bool {
        let contents = &self.system.region(region).contents;
        let need = lhs.size();
        if contents.size() < need {
            return false;
        }
        let mut pool = contents.clone();
        let mut taken = Multiset::new();
        let mut remaining = pool.size();
        for _ in 0..need {
            let idx = if remaining == 1 { 0 } else { self.rng.random_range(0..remaining) };
            let obj = pool.nth_copy(idx).clone();
            pool.remove(&obj, 1);
            remaining -= 1;
            taken.insert(obj.clone(), 1);
            if taken.count(&obj) > lhs.count(&obj) {
                return false;
            }
        }
        taken == *lhs
    }

    fn resolve_target(
        &mut self,
        region: RegionId,
        rule: &Rule,
        target: &Target,
    ) -> Result<Destination, EngineError> {
        let region_ref = self.system.region(region);
        let unresolvable = || EngineError::TargetUnresolvable {
            region: region_ref.label.clone(),
            rule: rule.to_string(),
            target: target.to_string(),
        };
        match target {
            Target::Here => Ok(Destination::Region(region)),
            Target::Out => Ok(match region_ref.parent {
                Some(parent) => Destination::Region(parent),
                None => Destination::Environment,
            }),
            Target::In(label) => region_ref
                .children
                .iter()
                .copied()
                .find(|&child| self.system.region(child).label == *label)
                .map(Destination::Region)
                .ok_or_else(unresolvable),
            Target::Link(None) => {
                let links = &region_ref.links;
                match links.len() {
                    0 => Err(unresolvable()),
                    1 => Ok(Destination::Region(links[0].1)),
                    n => {
                        let idx = self.rng.random_range(0..n);
                        Ok(Destination::Region(region_ref.links[idx].1))
                    }
                }
            }
            Target::Link(Some(label)) => region_ref
                .links
                .iter()
                .find(|(l, _)| l.as_deref() == Some(label))
                .map(|&(_, to)| Destination::Region(to))
                .ok_or_else(unresolvable),
        }
    }
}

enum Destination {
    Region(RegionId),
    Environment,
}

/// True when no rule in any region's pool has its left-hand side contained
/// in that region's contents.
pub fn is_halted(sys: &MembraneSystem) -> bool {
    sys.regions().iter().all(|region| {
        region
            .rule_pool()
            .all(|(rule, _)| !region.contents.contains(&rule.lhs))
    })
}

/// Runs a system to its attempt budget or to a halting configuration,
/// applying each disturbance immediately before the attempt whose index it
/// names. A detected halt only stops the run once no disturbance is still
/// pending, since adding molecules can wake a halted system up.
pub fn run(
    system: MembraneSystem,
    config: &SimConfig,
    disturbances: &[Disturbance],
) -> Result<Trace, EngineError> {
    let mut sim = Simulation::new(system, config.seed, config.scheduler);
    let mut trace = Trace::default();
    snapshot(&mut trace, sim.system(), 0);

    let mut pending: Vec<&Disturbance> = disturbances.iter().collect();
    pending.sort_by_key(|d| d.at_attempt);
    let mut next_disturbance = 0;

    for attempt_no in 1..=config.max_attempts {
        while next_disturbance < pending.len()
            && pending[next_disturbance].at_attempt == attempt_no
        {
            apply_disturbance(sim.system_mut(), pending[next_disturbance]);
            next_disturbance += 1;
        }

        sim.step()?;

        if attempt_no % config.trace_every == 0 {
            snapshot(&mut trace, sim.system(), attempt_no);
        }
        if attempt_no % config.halting_check_every == 0
            && next_disturbance >= pending.len()
            && is_halted(sim.system())
        {
            trace.halted_at = Some(attempt_no);
            break;
        }
    }

    trace.emitted = sim.emitted;
    Ok(trace)
}

fn apply_disturbance(sys: &mut MembraneSystem, disturbance: &Disturbance) {
    let Some(id) = sys.region_id_by_label(&disturbance.region) else {
        return;
    };
    let contents = &mut sys.region_mut(id).contents;
    match &disturbance.delta {
        DisturbanceDelta::Add(ms) => contents.insert_all(ms),
        DisturbanceDelta::Remove(ms) => {
            for (obj, &count) in ms.iter() {
                contents.remove(obj, count);
            }
        }
    }
}

fn snapshot(trace: &mut Trace, sys: &MembraneSystem, attempt: u64) {
    for region in sys.regions() {
        for (object, &count) in region.contents.iter() {
            trace.rows.push(TraceRow {
                attempt,
                region: region.label.clone(),
                object: object.clone(),
                count,
            });
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::{four_membrane_demo, SystemKind};

    fn not_gate_region() -> MembraneSystem {
        let mut sys = MembraneSystem::new(SystemKind::Tree);
        sys.add_symbols(["0", "1"]);
        let r = sys.add_region("1");
        sys.add_rule(r, Rule::symbols([("0", 1)], [(&[("1", 1)][..], Target::Out)]));
        sys.add_rule(r, Rule::symbols([("1", 1)], [(&[("0", 1)][..], Target::Out)]));
        sys
    }

    #[test]
    fn applied_rule_moves_product_out() {
        let mut sys = not_gate_region();
        sys.place_symbols(RegionId(0), [("1", 1)]);
        let mut sim = Simulation::new(sys, 7, Scheduler::UniformRegion);
        // two rules, one object: keep attempting until the matching rule is drawn
        loop {
            sim.attempts += 1;
            match sim.attempt(RegionId(0)).unwrap() {
                AttemptOutcome::Applied(rule) => {
                    assert_eq!(rule.lhs, Multiset::from_symbols([("1", 1)]));
                    break;
                }
                AttemptOutcome::Rejected => continue,
                AttemptOutcome::NoRules => panic!("rules exist"),
            }
        }
        assert_eq!(sim.system().environment.count_symbol("0"), 1);
        assert_eq!(sim.emitted().len(), 1);
    }

    #[test]
    fn rejected_attempt_leaves_state_unchanged() {
        // only rule needs b and c, but no c remains
        let mut sys = four_membrane_demo();
        let r2 = sys.region_id_by_label("2").unwrap();
        sys.region_mut(r2).contents = Multiset::from_symbols([("b", 1), ("a", 1)]);
        let before = sys.clone();
        let mut sim = Simulation::new(sys, 3, Scheduler::UniformRegion);
        for _ in 0..200 {
            sim.attempts += 1;
            let outcome = sim.attempt(r2).unwrap();
            assert_eq!(outcome, AttemptOutcome::Rejected);
        }
        assert_eq!(sim.system(), &before);
    }

    #[test]
    fn empty_pool_reports_no_rules() {
        let mut sys = MembraneSystem::new(SystemKind::Tree);
        sys.add_symbols(["a"]);
        let r = sys.add_region("1");
        sys.place_symbols(r, [("a", 3)]);
        let mut sim = Simulation::new(sys, 0, Scheduler::UniformRegion);
        assert_eq!(sim.attempt(r).unwrap(), AttemptOutcome::NoRules);
    }

    #[test]
    fn demo_system_halts_with_single_firing() {
        let sys = four_membrane_demo();
        assert!(!is_halted(&sys));
        let config = SimConfig::seeded(42).with_max_attempts(1000);
        let trace = run(sys, &config, &[]).unwrap();
        assert!(trace.halted_at.is_some());
        let series = trace.series("2", "a");
        assert_eq!(series.last().map(|&(_, c)| c), Some(1));
    }

    #[test]
    fn halted_check_examples() {
        let sys = four_membrane_demo();
        assert!(!is_halted(&sys));

        let mut fired = four_membrane_demo();
        let r2 = fired.region_id_by_label("2").unwrap();
        fired.region_mut(r2).contents = Multiset::from_symbols([("b", 1), ("a", 1)]);
        assert!(is_halted(&fired));

        let mut empty_rules = MembraneSystem::new(SystemKind::Tree);
        empty_rules.add_symbols(["a"]);
        let r = empty_rules.add_region("1");
        empty_rules.place_symbols(r, [("a", 5)]);
        assert!(is_halted(&empty_rules));
    }

    #[test]
    fn same_seed_same_trace() {
        let config = SimConfig::seeded(9).with_max_attempts(500);
        let a = run(four_membrane_demo(), &config, &[]).unwrap();
        let b = run(four_membrane_demo(), &config, &[]).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn single_region_scheduler_picks_it() {
        let sys = not_gate_region();
        let mut sim = Simulation::new(sys, 0, Scheduler::UniformRegion);
        let step = sim.step().unwrap();
        assert_eq!(step.region, RegionId(0));
    }

    #[test]
    fn disturbances_add_and_remove() {
        let sys = four_membrane_demo();
        let config = SimConfig::seeded(1).with_max_attempts(10);
        let disturbances = vec![
            Disturbance {
                at_attempt: 1,
                region: "3".to_string(),
                delta: DisturbanceDelta::Add(Multiset::from_symbols([("a", 5)])),
            },
            Disturbance {
                at_attempt: 2,
                region: "3".to_string(),
                delta: DisturbanceDelta::Remove(Multiset::from_symbols([("a", 99)])),
            },
        ];
        let trace = run(sys, &config, &disturbances).unwrap();
        let series = trace.series("3", "a");
        assert_eq!(series.first(), Some(&(1, 5)));
        // removal clipped at zero: region 3 has no `a` rows after attempt 2
        assert!(series.iter().all(|&(at, _)| at < 2));
    }
}
