//! The `.net` Boolean netlist format:
//! `input a, b; n1 = AND(a, b); z = NOT(n1); output z;`

use std::collections::{BTreeMap, BTreeSet};

use super::lexer::{tokenize, Cursor, TokenKind};
use super::psys::is_reserved;
use super::DslError;
use crate::gates::GateKind;

/// One gate statement: `output = KIND(inputs...)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GateDecl {
    pub output: String,
    pub kind: GateKind,
    pub inputs: Vec<String>,
}

/// A validated feed-forward circuit. Every wire has exactly one driver and
/// the gate graph is acyclic.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Netlist {
    pub inputs: Vec<String>,
    pub gates: Vec<GateDecl>,
    pub outputs: Vec<String>,
}

impl Netlist {
    /// Gate indices in dependency order (operands before consumers).
    pub fn topo_order(&self) -> Result<Vec<usize>, DslError> {
        let by_output: BTreeMap<&str, usize> = self
            .gates
            .iter()
            .enumerate()
            .map(|(i, g)| (g.output.as_str(), i))
            .collect();
        let mut order = Vec::new();
        let mut state = vec![0u8; self.gates.len()]; // 0 new, 1 visiting, 2 done
        let mut stack: Vec<(usize, usize)> = Vec::new();

        for start in 0..self.gates.len() {
            if state[start] != 0 {
                continue;
            }
            stack.push((start, 0));
            state[start] = 1;
            while let Some(&mut (gate, ref mut next_input)) = stack.last_mut() {
                let decl = &self.gates[gate];
                if *next_input < decl.inputs.len() {
                    let wire = &decl.inputs[*next_input];
                    *next_input += 1;
                    if let Some(&dep) = by_output.get(wire.as_str()) {
                        match state[dep] {
                            0 => {
                                state[dep] = 1;
                                stack.push((dep, 0));
                            }
                            1 => {
                                return Err(DslError::Cycle { wire: wire.clone() });
                            }
                            _ => {}
                        }
                    }
                } else {
                    state[gate] = 2;
                    order.push(gate);
                    stack.pop();
                }
            }
        }
        Ok(order)
    }

    /// All wire names: inputs plus gate outputs.
    pub fn wires(&self) -> BTreeSet<&str> {
        self.inputs
            .iter()
            .map(String::as_str)
            .chain(self.gates.iter().map(|g| g.output.as_str()))
            .collect()
    }

    /// Fan-out per wire: how many gate operand slots it feeds.
    pub fn consumers(&self, wire: &str) -> Vec<(usize, usize)> {
        let mut slots = Vec::new();
        for (gate, decl) in self.gates.iter().enumerate() {
            for (slot, input) in decl.inputs.iter().enumerate() {
                if input == wire {
                    slots.push((gate, slot));
                }
            }
        }
        slots
    }

    /// Direct Boolean evaluation: the oracle the compiled systems are checked
    /// against. Returns the value of every wire.
    pub fn evaluate(
        &self,
        assignment: &BTreeMap<String, bool>,
    ) -> Result<BTreeMap<String, bool>, DslError> {
        let mut values: BTreeMap<String, bool> = BTreeMap::new();
        for input in &self.inputs {
            let value = assignment.get(input).copied().ok_or_else(|| {
                DslError::semantic(format!("assignment misses input {input:?}"))
            })?;
            values.insert(input.clone(), value);
        }
        for gate in self.topo_order()? {
            let decl = &self.gates[gate];
            let operands: Vec<bool> = decl
                .inputs
                .iter()
                .map(|w| *values.get(w).expect("operands precede consumers"))
                .collect();
            let value = match decl.kind {
                GateKind::Not => !operands[0],
                GateKind::And => operands[0] && operands[1],
                GateKind::Nand => !(operands[0] && operands[1]),
                GateKind::Or => operands[0] || operands[1],
            };
            values.insert(decl.output.clone(), value);
        }
        Ok(values)
    }

    /// Every input assignment, in binary counting order.
    pub fn assignments(&self) -> Vec<BTreeMap<String, bool>> {
        let n = self.inputs.len();
        (0..1u32 << n)
            .map(|bits| {
                self.inputs
                    .iter()
                    .enumerate()
                    .map(|(i, name)| (name.clone(), bits >> (n - 1 - i) & 1 == 1))
                    .collect()
            })
            .collect()
    }
}

const NET_KEYWORDS: &[&str] = &["input", "output", "AND", "OR", "NAND", "NOT"];

fn check_wire_name(name: &str, line: u32, col: u32) -> Result<(), DslError> {
    if NET_KEYWORDS.contains(&name) || is_reserved(name) {
        return Err(DslError::parse(
            line,
            col,
            format!("{name:?} is a reserved word and cannot name a wire"),
        ));
    }
    if name.contains("__") {
        return Err(DslError::parse(
            line,
            col,
            format!("wire name {name:?} contains \"__\", which is reserved for compiled symbols"),
        ));
    }
    Ok(())
}

/// Parses and validates a netlist: single drivers, matching arities, no
/// combinational cycles.
pub fn parse_netlist(text: &str) -> Result<Netlist, DslError> {
    let mut cur = Cursor::new(tokenize(text)?);
    let mut netlist = Netlist::default();

    loop {
        cur.skip_newlines();
        if cur.at(&TokenKind::Eof) {
            break;
        }
        let (word, line, col) = cur.expect_word("a statement")?;
        match word.as_str() {
            "input" => {
                for name in parse_name_list(&mut cur)? {
                    netlist.inputs.push(name);
                }
            }
            "output" => {
                for name in parse_name_list(&mut cur)? {
                    netlist.outputs.push(name);
                }
            }
            _ => {
                check_wire_name(&word, line, col)?;
                cur.skip_newlines();
                cur.expect(TokenKind::Equals)?;
                cur.skip_newlines();
                let (kind_word, kline, kcol) = cur.expect_word("a gate kind")?;
                let kind = match kind_word.as_str() {
                    "AND" => GateKind::And,
                    "OR" => GateKind::Or,
                    "NAND" => GateKind::Nand,
                    "NOT" => GateKind::Not,
                    other => {
                        return Err(DslError::parse(
                            kline,
                            kcol,
                            format!("unknown gate kind {other:?} (expected AND, OR, NAND or NOT)"),
                        ))
                    }
                };
                cur.skip_newlines();
                cur.expect(TokenKind::LParen)?;
                let mut operands = Vec::new();
                loop {
                    cur.skip_newlines();
                    let (name, nline, ncol) = cur.expect_word("a wire name")?;
                    check_wire_name(&name, nline, ncol)?;
                    operands.push(name);
                    cur.skip_newlines();
                    if !cur.eat(&TokenKind::Comma) {
                        break;
                    }
                }
                cur.skip_newlines();
                cur.expect(TokenKind::RParen)?;
                cur.skip_newlines();
                cur.expect(TokenKind::Semi)?;
                if operands.len() != kind.arity() {
                    return Err(DslError::parse(
                        kline,
                        kcol,
                        format!(
                            "{kind_word} takes {} operand(s), found {}",
                            kind.arity(),
                            operands.len()
                        ),
                    ));
                }
                netlist.gates.push(GateDecl { output: word, kind, inputs: operands });
            }
        }
    }

    check_netlist(&netlist)?;
    Ok(netlist)
}

fn parse_name_list(cur: &mut Cursor) -> Result<Vec<String>, DslError> {
    let mut names = Vec::new();
    loop {
        cur.skip_newlines();
        let (name, line, col) = cur.expect_word("a wire name")?;
        check_wire_name(&name, line, col)?;
        names.push(name);
        cur.skip_newlines();
        if !cur.eat(&TokenKind::Comma) {
            break;
        }
    }
    cur.skip_newlines();
    cur.expect(TokenKind::Semi)?;
    Ok(names)
}

fn check_netlist(netlist: &Netlist) -> Result<(), DslError> {
    let mut drivers: BTreeMap<&str, &str> = BTreeMap::new();
    for input in &netlist.inputs {
        if drivers.insert(input, "input").is_some() {
            return Err(DslError::semantic(format!("wire {input:?} driven twice")));
        }
    }
    for gate in &netlist.gates {
        if drivers.insert(&gate.output, "gate").is_some() {
            return Err(DslError::semantic(format!("wire {:?} driven twice", gate.output)));
        }
    }
    for gate in &netlist.gates {
        for operand in &gate.inputs {
            if !drivers.contains_key(operand.as_str()) {
                return Err(DslError::semantic(format!("wire {operand:?} is not driven")));
            }
        }
    }
    if netlist.outputs.is_empty() {
        return Err(DslError::semantic("netlist declares no outputs".to_string()));
    }
    for output in &netlist.outputs {
        if !drivers.contains_key(output.as_str()) {
            return Err(DslError::semantic(format!("output wire {output:?} is not driven")));
        }
    }
    netlist.topo_order().map(|_| ())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_gate_netlist_parses() {
        let netlist = parse_netlist("input a,b; n1=AND(a,b); z=NOT(n1); output z;").unwrap();
        assert_eq!(netlist.inputs, vec!["a", "b"]);
        assert_eq!(netlist.gates.len(), 2);
        assert_eq!(netlist.outputs, vec!["z"]);
        let values = netlist
            .evaluate(&BTreeMap::from([("a".to_string(), true), ("b".to_string(), true)]))
            .unwrap();
        assert_eq!(values["z"], false);
    }

    #[test]
    fn passthrough_netlist() {
        let netlist = parse_netlist("input a; output a;").unwrap();
        assert!(netlist.gates.is_empty());
        let values = netlist
            .evaluate(&BTreeMap::from([("a".to_string(), true)]))
            .unwrap();
        assert_eq!(values["a"], true);
    }

    #[test]
    fn self_loop_is_a_cycle_error() {
        let err = parse_netlist("x = NOT(x); output x;").unwrap_err();
        assert!(matches!(err, DslError::Cycle { .. }));
    }

    #[test]
    fn longer_cycle_is_detected() {
        let err = parse_netlist("x = NOT(y); y = NOT(x); output x;").unwrap_err();
        assert!(matches!(err, DslError::Cycle { .. }));
    }

    #[test]
    fn doubly_driven_wire_is_semantic() {
        let err = parse_netlist("input a; a = NOT(a); output a;").unwrap_err();
        assert!(matches!(err, DslError::Semantic { .. }));
    }

    #[test]
    fn undriven_wire_is_semantic() {
        let err = parse_netlist("z = NOT(q); output z;").unwrap_err();
        assert!(matches!(err, DslError::Semantic { .. }));
    }

    #[test]
    fn arity_mismatch_is_positioned() {
        let err = parse_netlist("input a; z = AND(a); output z;").unwrap_err();
        assert!(matches!(err, DslError::Parse { .. }));
    }

    #[test]
    fn xor_truth_table_from_nands() {
        let netlist = parse_netlist(
            "input a, b;\nn1 = NAND(a, b);\nn2 = NAND(a, n1);\nn3 = NAND(b, n1);\nz = NAND(n2, n3);\noutput z;",
        )
        .unwrap();
        for assignment in netlist.assignments() {
            let a = assignment["a"];
            let b = assignment["b"];
            let values = netlist.evaluate(&assignment).unwrap();
            assert_eq!(values["z"], a ^ b);
        }
    }
}
