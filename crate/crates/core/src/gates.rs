//! Logic-gate chemistries and concentration readout.
//!
//! Four families, all executable by the engine:
//!
//! - [`cooperative_gate`]: single membrane, one rule per input row, result
//!   leaves the membrane. The simplest functional form.
//! - [`catalyst_and`] / [`catalyst_not`]: two nested membranes whose mobile
//!   catalysts serialize the computation and reset the gate after use.
//! - [`redundant_gate`]: signal levels carried by `h`-fold molecule counts
//!   with `m`-fold outputs and decay rules that clear leftovers.
//! - [`concentration_holder`]: keeps a species count inside a band,
//!   recovering from disturbances.
//!
//! [`read_level`] and [`read_wire`] interpret counts as logic levels via the
//! `(h, l)` thresholds.

use thiserror::Error;

use crate::multiset::Multiset;
use crate::rule::{Rule, Target};
use crate::system::{MembraneSystem, SystemKind};

/// The four basic Boolean functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum GateKind {
    Not,
    And,
    Nand,
    Or,
}

impl GateKind {
    pub fn arity(&self) -> usize {
        match self {
            GateKind::Not => 1,
            _ => 2,
        }
    }

    pub fn eval(&self, inputs: &[bool]) -> bool {
        match self {
            GateKind::Not => !inputs[0],
            GateKind::And => inputs[0] && inputs[1],
            GateKind::Nand => !(inputs[0] && inputs[1]),
            GateKind::Or => inputs[0] || inputs[1],
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            GateKind::Not => "NOT",
            GateKind::And => "AND",
            GateKind::Nand => "NAND",
            GateKind::Or => "OR",
        }
    }

    /// The distinct unordered input rows: `[0]`,`[1]` for arity 1 and
    /// `[0,0]`,`[0,1]`,`[1,1]` for arity 2. One rule per row covers every
    /// assignment because operands are indistinguishable molecules.
    pub fn rows(&self) -> Vec<Vec<bool>> {
        match self.arity() {
            1 => vec![vec![false], vec![true]],
            _ => vec![vec![false, false], vec![false, true], vec![true, true]],
        }
    }

    /// All ordered input assignments for truth-table checks.
    pub fn assignments(&self) -> Vec<Vec<bool>> {
        match self.arity() {
            1 => vec![vec![false], vec![true]],
            _ => vec![
                vec![false, false],
                vec![false, true],
                vec![true, false],
                vec![true, true],
            ],
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ParamError {
    #[error("output multiplicity m={m} must exceed input multiplicity h={h}")]
    OutputNotAboveInput { h: u64, m: u64 },
    #[error("lower threshold l={l} must be below input multiplicity h={h}")]
    LowerThresholdTooHigh { h: u64, l: u64 },
    #[error("input multiplicity h must be at least 1")]
    ZeroInput,
    #[error("holder band width n={n} must satisfy 0 < n <= m={m}")]
    BadBand { m: u64, n: u64 },
}

/// Multiplicities for threshold-encoded signals: inputs arrive as `h`-fold
/// counts, outputs as `m`-fold counts with `m > h`, and counts below `l`
/// read as absent.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RedundancyParams {
    pub h: u64,
    pub m: u64,
    pub l: u64,
}

impl RedundancyParams {
    /// Checked constructor with an explicit lower threshold.
    pub fn with_threshold(h: u64, m: u64, l: u64) -> Result<Self, ParamError> {
        if h == 0 {
            return Err(ParamError::ZeroInput);
        }
        if m <= h {
            return Err(ParamError::OutputNotAboveInput { h, m });
        }
        if l >= h {
            return Err(ParamError::LowerThresholdTooHigh { h, l });
        }
        Ok(RedundancyParams { h, m, l })
    }

    /// Default lower threshold: half the assertion threshold, rounded up,
    /// clamped below `h`.
    pub fn new(h: u64, m: u64) -> Result<Self, ParamError> {
        let l = h.div_ceil(2).min(h.saturating_sub(1));
        Self::with_threshold(h, m, l)
    }
}

/// How a molecule count reads as a logic level.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LogicLevel {
    Zero,
    One,
    Undefined,
    Ambiguous,
}

/// Per-species readout: counts above `h` assert the species, counts below
/// `l` deny it, anything between is undefined.
pub fn read_level(count: u64, params: &RedundancyParams) -> LogicLevel {
    if count > params.h {
        LogicLevel::One
    } else if count < params.l {
        LogicLevel::Zero
    } else {
        LogicLevel::Undefined
    }
}

/// Dual-rail readout over the 0-species and 1-species counts: exactly one
/// rail asserted gives a definite level, both asserted is ambiguous, neither
/// is undefined.
pub fn read_wire(count0: u64, count1: u64, params: &RedundancyParams) -> LogicLevel {
    let zero_asserted = count0 > params.h;
    let one_asserted = count1 > params.h;
    match (zero_asserted, one_asserted) {
        (true, true) => LogicLevel::Ambiguous,
        (true, false) => LogicLevel::Zero,
        (false, true) => LogicLevel::One,
        (false, false) => LogicLevel::Undefined,
    }
}

fn bit_symbol(bit: bool) -> &'static str {
    if bit {
        "1"
    } else {
        "0"
    }
}

/// Places input bits as `0`/`1` symbols into the named region, one copy per
/// bit. Gate constructors build bare systems; inputs are always injected
/// separately.
pub fn place_input_bits(sys: &mut MembraneSystem, region: &str, bits: &[bool]) {
    place_input_bits_copies(sys, region, bits, 1);
}

/// As [`place_input_bits`], with `copies` molecules per bit for
/// threshold-encoded signals.
pub fn place_input_bits_copies(
    sys: &mut MembraneSystem,
    region: &str,
    bits: &[bool],
    copies: u64,
) {
    let id = sys.region_id_by_label(region).expect("input region exists");
    for &bit in bits {
        sys.place_symbols(id, [(bit_symbol(bit), copies)]);
    }
}

/// Single-membrane gate: one cooperative rule per input row, each sending
/// its result out of the membrane. With one molecule per operand the rows
/// are mutually exclusive, so only the matching rule can ever fire.
pub fn cooperative_gate(kind: GateKind) -> MembraneSystem {
    let mut sys = MembraneSystem::new(SystemKind::Tree);
    sys.add_symbols(["0", "1"]);
    sys.output_alphabet.insert("0".into());
    sys.output_alphabet.insert("1".into());
    let g = sys.add_region("g");
    for rule in logic_rules(kind, 1, 1, Target::Out) {
        sys.add_rule(g, rule);
    }
    sys
}

/// The rule set realizing `kind` with `h`-fold inputs and `m`-fold outputs,
/// results delivered to `target`. `h = m = 1` gives the plain cooperative
/// set.
pub fn logic_rules(kind: GateKind, h: u64, m: u64, target: Target) -> Vec<Rule> {
    kind.rows()
        .iter()
        .map(|row| row_rule(kind, row, h, m, target.clone()))
        .collect()
}

/// Token-carrying variant: each operand brings one `t` along with its bit,
/// and exactly one `t` leaves with the result. A gate without tokens present
/// can never fire, which is what makes token arrival signal completion.
pub fn token_logic_rules(kind: GateKind, target: Target) -> Vec<Rule> {
    kind.rows()
        .iter()
        .map(|row| {
            let mut rule = row_rule(kind, row, 1, 1, target.clone());
            rule.lhs.insert(crate::multiset::Object::sym(TOKEN_SYMBOL), row.len() as u64);
            rule.rhs[0].0.insert(crate::multiset::Object::sym(TOKEN_SYMBOL), 1);
            rule
        })
        .collect()
}

/// The decay pair `0^2 -> 0`, `1^2 -> 1` for clearing leftover signal
/// molecules.
pub fn deletion_rules() -> Vec<Rule> {
    ["0", "1"]
        .iter()
        .map(|bit| Rule::symbols([(*bit, 2)], [(&[(*bit, 1)][..], Target::Here)]))
        .collect()
}

/// The ready-token species.
pub const TOKEN_SYMBOL: &str = "t";

fn row_rule(kind: GateKind, row: &[bool], h: u64, m: u64, target: Target) -> Rule {
    let mut lhs = Multiset::new();
    for &bit in row {
        lhs.insert(crate::multiset::Object::sym(bit_symbol(bit)), h);
    }
    let out = kind.eval(row);
    let products = Multiset::from_symbols([(bit_symbol(out), m)]);
    Rule::new(lhs, vec![(products, target)])
}

/// Threshold-encoded gate: inputs consumed `h` at a time, outputs emitted
/// `m` at a time, plus the two decay rules `0^2 -> 0` and `1^2 -> 1` that
/// clear leftover molecules down to a single copy.
pub fn redundant_gate(
    kind: GateKind,
    params: &RedundancyParams,
) -> Result<MembraneSystem, ParamError> {
    redundant_gate_multiplied(kind, params, 1)
}

/// As [`redundant_gate`], with every logic rule entered `rule_copies` times
/// in the pool. Extra copies raise the chance a logic rule is drawn before
/// the decay rules eat into a signal that is still waiting for its partner.
pub fn redundant_gate_multiplied(
    kind: GateKind,
    params: &RedundancyParams,
    rule_copies: u64,
) -> Result<MembraneSystem, ParamError> {
    RedundancyParams::with_threshold(params.h, params.m, params.l)?;
    let mut sys = MembraneSystem::new(SystemKind::Tree);
    sys.add_symbols(["0", "1"]);
    sys.output_alphabet.insert("0".into());
    sys.output_alphabet.insert("1".into());
    let g = sys.add_region("g");
    for rule in logic_rules(kind, params.h, params.m, Target::Out) {
        sys.add_rule_copies(g, rule, rule_copies.max(1));
    }
    for rule in deletion_rules() {
        sys.add_rule(g, rule);
    }
    Ok(sys)
}

/// The decay rules alone, for studying leftover cleanup in isolation.
pub fn deletion_only_system() -> MembraneSystem {
    let mut sys = MembraneSystem::new(SystemKind::Tree);
    sys.add_symbols(["0", "1"]);
    let g = sys.add_region("g");
    for rule in deletion_rules() {
        sys.add_rule(g, rule);
    }
    sys
}

/// Catalyst symbols whose total count is invariant over any run of
/// [`catalyst_and`].
pub const AND_CATALYSTS: [&str; 3] = ["a", "d", "e"];

/// Catalyst symbols whose total count is invariant over any run of
/// [`catalyst_not`].
pub const NOT_CATALYSTS: [&str; 2] = ["n", "x"];

/// Two-membrane AND gate driven by the mobile catalysts `e`, `d` and `a`.
///
/// Inputs go to region 2 (see [`place_input_bits`]); the Boolean result is
/// emitted from the skin into the environment. After emission every
/// catalyst is back in its home region, so the gate can be reused.
pub fn catalyst_and() -> MembraneSystem {
    let mut sys = MembraneSystem::new(SystemKind::Tree);
    sys.add_symbols(["0", "1", "d", "e", "n", "x", "z", "a"]);
    sys.output_alphabet.insert("0".into());
    sys.output_alphabet.insert("1".into());
    let r1 = sys.add_region("1");
    let r2 = sys.add_region("2");
    sys.nest(r1, r2);
    sys.place_symbols(r1, [("d", 1), ("e", 1)]);
    sys.place_symbols(r2, [("a", 1)]);

    let ms = |syms: &[(&str, u64)]| Multiset::from_symbols(syms.iter().copied());
    let into2 = |syms: &[(&str, u64)]| (ms(syms), Target::In("2".to_string()));
    let here = |syms: &[(&str, u64)]| (ms(syms), Target::Here);
    let out = |syms: &[(&str, u64)]| (ms(syms), Target::Out);

    // skin: probe results coming back up, emit the final bit, keep the
    // catalysts home for the next computation
    sys.add_rule(r1, Rule::new(ms(&[("x", 1), ("a", 1)]), vec![into2(&[("a", 1)])]));
    sys.add_rule(
        r1,
        Rule::new(ms(&[("e", 1), ("0", 1)]), vec![into2(&[("e", 1)]), here(&[("z", 1)])]),
    );
    sys.add_rule(
        r1,
        Rule::new(ms(&[("e", 1), ("z", 1)]), vec![here(&[("e", 1)]), out(&[("0", 1)])]),
    );
    sys.add_rule(r1, Rule::new(ms(&[("d", 1), ("1", 1)]), vec![into2(&[("d", 1)])]));
    sys.add_rule(
        r1,
        Rule::new(ms(&[("d", 1), ("n", 1)]), vec![here(&[("d", 1)]), out(&[("1", 1)])]),
    );

    // inner region: ferry one input up with `a`, answer the catalyst probes
    sys.add_rule(r2, Rule::new(ms(&[("0", 1), ("a", 1)]), vec![out(&[("0", 1), ("a", 1)])]));
    sys.add_rule(r2, Rule::new(ms(&[("1", 1), ("a", 1)]), vec![out(&[("1", 1), ("a", 1)])]));
    sys.add_rule(r2, Rule::new(ms(&[("e", 1), ("0", 1)]), vec![out(&[("e", 1), ("x", 1)])]));
    sys.add_rule(r2, Rule::new(ms(&[("e", 1), ("1", 1)]), vec![out(&[("e", 1), ("x", 1)])]));
    sys.add_rule(
        r2,
        Rule::new(ms(&[("d", 1), ("0", 1)]), vec![out(&[("d", 1), ("z", 1), ("x", 1)])]),
    );
    sys.add_rule(
        r2,
        Rule::new(ms(&[("d", 1), ("1", 1)]), vec![out(&[("d", 1), ("n", 1), ("x", 1)])]),
    );
    sys
}

/// Two-membrane NOT gate driven by the mobile catalysts `n` and `x`.
///
/// The input goes to region 2; the inverted bit lands in region 1 (the
/// skin). The `n x` rule then sends `n` home, re-arming the gate for the
/// next input.
pub fn catalyst_not() -> MembraneSystem {
    let mut sys = MembraneSystem::new(SystemKind::Tree);
    sys.add_symbols(["0", "1", "d", "e", "n", "x", "z"]);
    sys.output_alphabet.insert("0".into());
    sys.output_alphabet.insert("1".into());
    let r1 = sys.add_region("1");
    let r2 = sys.add_region("2");
    sys.nest(r1, r2);
    sys.place_symbols(r1, [("x", 1)]);
    sys.place_symbols(r2, [("n", 1)]);

    sys.add_rule(
        r1,
        Rule::new(
            Multiset::from_symbols([("n", 1), ("x", 1)]),
            vec![
                (Multiset::from_symbols([("n", 1)]), Target::In("2".to_string())),
                (Multiset::from_symbols([("x", 1)]), Target::Here),
            ],
        ),
    );
    sys.add_rule(
        r2,
        Rule::symbols([("0", 1), ("n", 1)], [(&[("1", 1), ("n", 1)][..], Target::Out)]),
    );
    sys.add_rule(
        r2,
        Rule::symbols([("1", 1), ("n", 1)], [(&[("0", 1), ("n", 1)][..], Target::Out)]),
    );
    sys
}

/// A chemistry that drives the count of `species` into the band
/// `[m - n, m]` and holds it there in a saw-tooth.
///
/// Two reactions: self-replication (`a -> a a`) regenerates the species from
/// any surviving copy, and the cap (`a^m -> a^(m-n)`) cuts the count back by
/// `n` whenever it reaches `m`. The cap cannot fire below `m`, so the
/// chemistry never undershoots the band on its own, and both reactions
/// together pull disturbed counts back in.
pub fn concentration_holder(species: &str, m: u64, n: u64) -> Result<MembraneSystem, ParamError> {
    concentration_holder_multiplied(species, m, n, 3, 3)
}

/// As [`concentration_holder`] with explicit pool multiplicities for the
/// regeneration and cap reactions. More regeneration copies speed up the
/// climb; more cap copies tighten the overshoot.
pub fn concentration_holder_multiplied(
    species: &str,
    m: u64,
    n: u64,
    regen_copies: u64,
    cap_copies: u64,
) -> Result<MembraneSystem, ParamError> {
    if n == 0 || n > m {
        return Err(ParamError::BadBand { m, n });
    }
    let mut sys = MembraneSystem::new(SystemKind::Tree);
    sys.add_symbols([species]);
    let r = sys.add_region("holder");
    sys.place_symbols(r, [(species, 1)]);
    sys.add_rule_copies(
        r,
        Rule::symbols([(species, 1)], [(&[(species, 2)][..], Target::Here)]),
        regen_copies.max(1),
    );
    sys.add_rule_copies(
        r,
        Rule::symbols([(species, m)], [(&[(species, m - n)][..], Target::Here)]),
        cap_copies.max(1),
    );
    Ok(sys)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{run, SimConfig};

    #[test]
    fn cooperative_rule_sets_match_the_truth_tables() {
        for kind in [GateKind::Not, GateKind::And, GateKind::Nand, GateKind::Or] {
            let sys = cooperative_gate(kind);
            let region = sys.region_by_label("g").unwrap();
            assert_eq!(region.rules.size(), kind.rows().len() as u64);
            assert!(sys.validate().is_empty());
        }
    }

    #[test]
    fn and_gate_emits_one_for_two_ones() {
        let mut sys = cooperative_gate(GateKind::And);
        place_input_bits(&mut sys, "g", &[true, true]);
        let trace = run(sys, &SimConfig::seeded(1).with_max_attempts(1000), &[]).unwrap();
        assert_eq!(trace.emitted.len(), 1);
        assert_eq!(trace.emitted[0].1, crate::multiset::Object::sym("1"));
    }

    #[test]
    fn redundant_params_are_checked() {
        assert!(RedundancyParams::with_threshold(3, 5, 2).is_ok());
        assert_eq!(
            RedundancyParams::with_threshold(3, 3, 2),
            Err(ParamError::OutputNotAboveInput { h: 3, m: 3 })
        );
        assert_eq!(
            RedundancyParams::with_threshold(3, 5, 3),
            Err(ParamError::LowerThresholdTooHigh { h: 3, l: 3 })
        );
        assert_eq!(RedundancyParams::new(3, 5).unwrap().l, 2);
        assert_eq!(RedundancyParams::new(1, 2).unwrap().l, 0);
    }

    #[test]
    fn deletion_rules_reach_the_single_copy_fixpoint() {
        let mut sys = deletion_only_system();
        place_input_bits_copies(&mut sys, "g", &[true], 5);
        let trace = run(sys, &SimConfig::seeded(4).with_max_attempts(2000), &[]).unwrap();
        assert!(trace.halted_at.is_some());
        let series = trace.series("g", "1");
        assert_eq!(series.last().map(|&(_, c)| c), Some(1));
    }

    #[test]
    fn levels_read_per_species() {
        let params = RedundancyParams::with_threshold(3, 5, 2).unwrap();
        assert_eq!(read_level(0, &params), LogicLevel::Zero);
        assert_eq!(read_level(2, &params), LogicLevel::Undefined);
        assert_eq!(read_level(3, &params), LogicLevel::Undefined);
        assert_eq!(read_level(4, &params), LogicLevel::One);
    }

    #[test]
    fn wires_read_dual_rail() {
        let params = RedundancyParams::with_threshold(3, 5, 2).unwrap();
        assert_eq!(read_wire(0, 5, &params), LogicLevel::One);
        assert_eq!(read_wire(5, 0, &params), LogicLevel::Zero);
        assert_eq!(read_wire(5, 5, &params), LogicLevel::Ambiguous);
        assert_eq!(read_wire(0, 0, &params), LogicLevel::Undefined);
    }

    #[test]
    fn raising_a_count_never_lowers_its_level() {
        let params = RedundancyParams::with_threshold(4, 7, 2).unwrap();
        let rank = |level: LogicLevel| match level {
            LogicLevel::Zero => 0,
            LogicLevel::Undefined => 1,
            LogicLevel::One | LogicLevel::Ambiguous => 2,
        };
        for count in 0..20u64 {
            assert!(rank(read_level(count + 1, &params)) >= rank(read_level(count, &params)));
        }
    }

    #[test]
    fn holder_rejects_bad_bands() {
        assert!(concentration_holder("a", 100, 20).is_ok());
        assert_eq!(concentration_holder("a", 10, 0), Err(ParamError::BadBand { m: 10, n: 0 }));
        assert_eq!(concentration_holder("a", 10, 11), Err(ParamError::BadBand { m: 10, n: 11 }));
    }

    #[test]
    fn constructed_systems_validate_clean() {
        assert!(catalyst_and().validate().is_empty());
        assert!(catalyst_not().validate().is_empty());
        assert!(concentration_holder("a", 100, 20).unwrap().validate().is_empty());
        let params = RedundancyParams::with_threshold(3, 5, 2).unwrap();
        assert!(redundant_gate(GateKind::And, &params).unwrap().validate().is_empty());
    }
}
