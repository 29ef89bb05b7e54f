//! The shipped `.psys` fixtures are generated from the library constructors.
//! This test keeps them in sync; run with `REGEN_FIXTURES=1` to rewrite.

use std::collections::BTreeMap;
use std::path::PathBuf;

use membrane_core::dsl::{parse_system, print_system, system_to_doc};
use membrane_core::gates::{
    catalyst_and, concentration_holder, cooperative_gate, place_input_bits, redundant_gate,
    GateKind, RedundancyParams,
};
use membrane_core::system::four_membrane_demo;
use membrane_core::MembraneSystem;

fn fixtures_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn render(sys: &MembraneSystem) -> String {
    print_system(&system_to_doc(sys).expect("liftable").canonicalize())
}

fn generated_fixtures() -> BTreeMap<&'static str, String> {
    let mut fixtures = BTreeMap::new();
    fixtures.insert("four_membrane.psys", render(&four_membrane_demo()));
    fixtures.insert("not.psys", render(&cooperative_gate(GateKind::Not)));
    fixtures.insert("and.psys", render(&cooperative_gate(GateKind::And)));
    fixtures.insert("nand.psys", render(&cooperative_gate(GateKind::Nand)));
    fixtures.insert("or.psys", render(&cooperative_gate(GateKind::Or)));
    let params = RedundancyParams::with_threshold(3, 5, 2).unwrap();
    fixtures.insert(
        "redundant_and.psys",
        render(&redundant_gate(GateKind::And, &params).unwrap()),
    );
    fixtures.insert("catalyst_and.psys", render(&membrane_core::gates::catalyst_and()));
    fixtures.insert("catalyst_not.psys", render(&membrane_core::gates::catalyst_not()));
    let mut and_ready = catalyst_and();
    place_input_bits(&mut and_ready, "2", &[true, true]);
    fixtures.insert("catalyst_and_11.psys", render(&and_ready));
    fixtures.insert("holder.psys", render(&concentration_holder("a", 100, 20).unwrap()));
    fixtures
}

#[test]
fn fixtures_match_their_constructors() {
    let dir = fixtures_dir();
    let regen = std::env::var_os("REGEN_FIXTURES").is_some();
    for (name, content) in generated_fixtures() {
        let path = dir.join(name);
        if regen {
            std::fs::write(&path, &content).unwrap();
            continue;
        }
        let on_disk = std::fs::read_to_string(&path)
            .unwrap_or_else(|e| panic!("fixture {name} unreadable: {e}"));
        assert_eq!(on_disk, content, "fixture {name} is out of date");
    }
}

#[test]
fn every_shipped_system_fixture_parses_and_validates() {
    let dir = fixtures_dir();
    for entry in std::fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        let name = path.file_name().unwrap().to_string_lossy().to_string();
        if !name.ends_with(".psys") || name.starts_with("bad_") {
            continue;
        }
        let text = std::fs::read_to_string(&path).unwrap();
        let doc = parse_system(&text).unwrap_or_else(|e| panic!("{name}: {e}"));
        let sys = doc.lower().unwrap_or_else(|e| panic!("{name}: {e}"));
        assert_eq!(sys.validate(), Vec::new(), "{name} has violations");
    }
}

#[test]
fn every_shipped_netlist_fixture_parses() {
    let dir = fixtures_dir();
    for entry in std::fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        let name = path.file_name().unwrap().to_string_lossy().to_string();
        if !name.ends_with(".net") {
            continue;
        }
        let text = std::fs::read_to_string(&path).unwrap();
        membrane_core::dsl::parse_netlist(&text).unwrap_or_else(|e| panic!("{name}: {e}"));
    }
}
