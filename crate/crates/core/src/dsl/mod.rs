//! Textual formats: `.psys` membrane-system files and `.net` Boolean
//! netlists.
//!
//! Both formats are line-oriented UTF-8 with `#` comments. The `.psys`
//! format covers tree, network, and hybrid systems in one grammar; see the
//! project README for the full reference. Parsing and printing round-trip:
//! `parse(print(doc))` equals `doc` for canonical documents.

mod lexer;
mod netlist;
mod psys;

use thiserror::Error;

pub use netlist::{parse_netlist, GateDecl, Netlist};
pub use psys::{
    parse_multiset_text, parse_structure, parse_system, print_structure, print_system,
    system_to_doc, LinkDecl, RegionDecl, StructureNode, SystemDoc,
};

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum DslError {
    #[error("parse error at {line}:{col}: {message}")]
    Parse { line: u32, col: u32, message: String },
    #[error("semantic error: {message}")]
    Semantic { message: String },
    #[error("combinational cycle through wire {wire:?}")]
    Cycle { wire: String },
}

impl DslError {
    fn parse(line: u32, col: u32, message: impl Into<String>) -> Self {
        DslError::Parse { line, col, message: message.into() }
    }

    fn semantic(message: impl Into<String>) -> Self {
        DslError::Semantic { message: message.into() }
    }
}
