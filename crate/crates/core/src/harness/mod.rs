//! Fault injection and robustness measurement.
//!
//! The fault model is molecule loss: a per-attempt, per-region probability
//! of losing one uniformly chosen molecule, plus scheduled burst
//! disturbances, plus whole-reactor failures in fabric mode. Symbol
//! corruption is deliberately out of scope.

pub mod fabric;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::engine::{is_halted, Disturbance, EngineError, Scheduler, Simulation, StepOutcome};
use crate::gates::{
    read_wire, redundant_gate_multiplied, GateKind, LogicLevel, ParamError, RedundancyParams,
};
use crate::multiset::Multiset;
use crate::system::MembraneSystem;

/// Probabilistic molecule loss, scheduled bursts, and (for fabrics) reactor
/// failure.
#[derive(Debug, Clone, Default)]
pub struct FaultModel {
    /// Probability per attempt per region of losing one random molecule.
    pub loss_rate: f64,
    /// Scheduled add/remove bursts.
    pub bursts: Vec<Disturbance>,
    /// Probability that a fabric node is failed at construction.
    pub reactor_failure: f64,
}

impl FaultModel {
    pub fn validate(&self) -> Result<(), ParamError> {
        for p in [self.loss_rate, self.reactor_failure] {
            if !(0.0..=1.0).contains(&p) {
                return Err(ParamError::BadBand { m: 1, n: 0 });
            }
        }
        Ok(())
    }
}

/// Removes one uniformly chosen molecule copy from `contents`.
pub(crate) fn lose_random_copy(contents: &mut Multiset, rng: &mut ChaCha8Rng) {
    let size = contents.size();
    if size == 0 {
        return;
    }
    let idx = if size == 1 { 0 } else { rng.random_range(0..size) };
    let object = contents.nth_copy(idx).clone();
    contents.remove(&object, 1);
}

/// One engine step preceded by per-region loss draws from a dedicated
/// fault stream, so the simulation stream itself stays untouched by the
/// fault model.
pub fn step_with_loss(
    sim: &mut Simulation,
    fault_rng: &mut ChaCha8Rng,
    loss_rate: f64,
) -> Result<StepOutcome, EngineError> {
    if loss_rate > 0.0 {
        let region_count = sim.system().regions().len();
        for idx in 0..region_count {
            if fault_rng.random::<f64>() < loss_rate {
                let contents = &mut sim.system_mut().region_mut(crate::system::RegionId(idx)).contents;
                lose_random_copy(contents, fault_rng);
            }
        }
    }
    sim.step()
}

/// One sweep cell: a full truth-table pass of one seeded run.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub h: u64,
    pub loss_rate: f64,
    pub seed: u64,
    /// True when every input assignment read back correctly.
    pub correct: bool,
    /// Worst attempts-to-readout over the assignments.
    pub attempts_to_output: u64,
}

#[derive(Debug, Clone, Default)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    /// Fraction of correct runs for a given `(h, loss_rate)` cell.
    pub fn correctness(&self, h: u64, loss_rate: f64) -> f64 {
        let cell: Vec<_> = self
            .rows
            .iter()
            .filter(|row| row.h == h && row.loss_rate == loss_rate)
            .collect();
        if cell.is_empty() {
            return 0.0;
        }
        cell.iter().filter(|row| row.correct).count() as f64 / cell.len() as f64
    }

    /// `h,loss_rate,seed,correct,attempts_to_output` rows.
    pub fn write_csv(&self, mut w: impl std::io::Write) -> std::io::Result<()> {
        writeln!(w, "h,loss_rate,seed,correct,attempts_to_output")?;
        for row in &self.rows {
            writeln!(
                w,
                "{},{},{},{},{}",
                row.h, row.loss_rate, row.seed, row.correct, row.attempts_to_output
            )?;
        }
        Ok(())
    }
}

/// Sweeps threshold-encoded gates over input multiplicities and loss rates.
///
/// For each `(h, loss_rate, seed)` cell the gate runs its whole truth table
/// with inputs delivered at `m = h + m_offset` copies under continuous
/// molecule loss; the row records whether every assignment read back
/// correctly through [`read_wire`].
pub fn sweep_redundancy(
    kind: GateKind,
    h_values: &[u64],
    m_offset: u64,
    loss_rates: &[f64],
    seeds: &[u64],
    attempt_budget: u64,
) -> Result<SweepTable, ParamError> {
    let mut table = SweepTable::default();
    for &h in h_values {
        let params = RedundancyParams::new(h, h + m_offset.max(1))?;
        for &loss_rate in loss_rates {
            for &seed in seeds {
                let (correct, attempts) =
                    run_gate_table(kind, &params, loss_rate, seed, attempt_budget);
                table.rows.push(SweepRow {
                    h,
                    loss_rate,
                    seed,
                    correct,
                    attempts_to_output: attempts,
                });
            }
        }
    }
    Ok(table)
}

/// Extra pool copies for each logic rule in sweep gates: the decay rules
/// erode waiting signals, so logic draws must dominate the race.
const SWEEP_LOGIC_RULE_COPIES: u64 = 25;

fn run_gate_table(
    kind: GateKind,
    params: &RedundancyParams,
    loss_rate: f64,
    seed: u64,
    attempt_budget: u64,
) -> (bool, u64) {
    let mut all_correct = true;
    let mut worst_attempts = 0;
    for (index, assignment) in kind.assignments().iter().enumerate() {
        let expected = kind.eval(assignment);
        let mut sys = redundant_gate_multiplied(kind, params, SWEEP_LOGIC_RULE_COPIES)
            .expect("params validated by caller");
        crate::gates::place_input_bits_copies(&mut sys, "g", assignment, params.m);
        let run_seed = seed.wrapping_mul(1000).wrapping_add(index as u64);
        let (level, attempts) = run_to_level(sys, params, loss_rate, run_seed, attempt_budget);
        worst_attempts = worst_attempts.max(attempts);
        let correct = matches!(
            (level, expected),
            (LogicLevel::One, true) | (LogicLevel::Zero, false)
        );
        all_correct &= correct;
    }
    (all_correct, worst_attempts)
}

/// Steps under loss until the environment reads a defined level, the system
/// halts, or the budget runs out.
pub fn run_to_level(
    system: MembraneSystem,
    params: &RedundancyParams,
    loss_rate: f64,
    seed: u64,
    attempt_budget: u64,
) -> (LogicLevel, u64) {
    let mut sim = Simulation::new(system, seed, Scheduler::UniformRegion);
    let mut fault_rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_fa17_0000_0001u64);
    loop {
        if sim.attempts() >= attempt_budget {
            return (LogicLevel::Undefined, sim.attempts());
        }
        step_with_loss(&mut sim, &mut fault_rng, loss_rate)
            .expect("gate systems have resolvable targets");
        let env = &sim.system().environment;
        let level = read_wire(env.count_symbol("0"), env.count_symbol("1"), params);
        if level != LogicLevel::Undefined {
            return (level, sim.attempts());
        }
        if sim.attempts() % 64 == 0 && loss_rate == 0.0 && is_halted(sim.system()) {
            return (LogicLevel::Undefined, sim.attempts());
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gates::place_input_bits_copies;

    #[test]
    fn zero_loss_rate_is_fully_correct() {
        let table = sweep_redundancy(GateKind::And, &[2, 3], 2, &[0.0], &[0, 1, 2, 3, 4], 50_000)
            .unwrap();
        assert_eq!(table.correctness(2, 0.0), 1.0);
        assert_eq!(table.correctness(3, 0.0), 1.0);
    }

    #[test]
    fn fixed_small_loss_keeps_the_signal_alive() {
        // lose strictly fewer copies than the margin above h: output stays correct
        let params = RedundancyParams::new(3, 5).unwrap();
        for seed in 0..20 {
            let mut sys = crate::gates::redundant_gate_multiplied(
                GateKind::Not,
                &params,
                SWEEP_LOGIC_RULE_COPIES,
            )
            .unwrap();
            place_input_bits_copies(&mut sys, "g", &[true], params.m);
            // burst-remove one copy (margin is m - h = 2) before anything runs
            let g = sys.region_id_by_label("g").unwrap();
            sys.region_mut(g).contents.remove(&crate::multiset::Object::sym("1"), 1);
            let (level, _) = run_to_level(sys, &params, 0.0, seed, 50_000);
            assert_eq!(level, LogicLevel::Zero, "seed {seed}");
        }
    }

    #[test]
    fn loss_stream_is_separate_from_simulation_stream() {
        let params = RedundancyParams::new(2, 4).unwrap();
        let build = || {
            let mut sys =
                redundant_gate_multiplied(GateKind::And, &params, SWEEP_LOGIC_RULE_COPIES).unwrap();
            place_input_bits_copies(&mut sys, "g", &[true, true], params.m);
            sys
        };
        let (a, at_a) = run_to_level(build(), &params, 0.0, 7, 50_000);
        let (b, at_b) = run_to_level(build(), &params, 0.0, 7, 50_000);
        assert_eq!((a, at_a), (b, at_b));
    }
}
