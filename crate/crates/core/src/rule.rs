//! Evolution rules: a reactant multiset rewritten into targeted products.

use std::fmt;

use crate::multiset::Multiset;

/// Where a product multiset is delivered when its rule fires.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Target {
    /// Stay in the firing region.
    Here,
    /// Leave to the parent region, or to the environment from a region with
    /// no parent.
    Out,
    /// Enter the child region with the given label.
    In(String),
    /// Follow an outgoing link: the labelled one, or a uniformly random
    /// outgoing link when no label is given.
    Link(Option<String>),
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Target::Here => write!(f, "H"),
            Target::Out => write!(f, "L"),
            Target::In(label) => write!(f, "IN({label})"),
            Target::Link(None) => write!(f, "LINK"),
            Target::Link(Some(label)) => write!(f, "LINK({label})"),
        }
    }
}

/// Cooperative rules consume more than one object.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RuleClass {
    Cooperative,
    Noncooperative,
}

/// `lhs -> (products, target)...`
///
/// The left-hand side is a non-empty multiset; the right-hand side is a list
/// of product multisets, each with its own delivery target. Products may be
/// empty (pure deletion).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Rule {
    pub lhs: Multiset,
    pub rhs: Vec<(Multiset, Target)>,
}

impl Rule {
    pub fn new(lhs: Multiset, rhs: Vec<(Multiset, Target)>) -> Self {
        debug_assert!(!lhs.is_empty(), "rule with empty left-hand side");
        Rule { lhs, rhs }
    }

    /// Shorthand for symbol-only rules:
    /// `Rule::symbols([("b",1),("c",1)], [(&[("a",1)], Target::Here)])`.
    pub fn symbols<'a>(
        lhs: impl IntoIterator<Item = (&'a str, u64)>,
        rhs: impl IntoIterator<Item = (&'a [(&'a str, u64)], Target)>,
    ) -> Self {
        Rule::new(
            Multiset::from_symbols(lhs),
            rhs.into_iter()
                .map(|(items, target)| (Multiset::from_symbols(items.iter().copied()), target))
                .collect(),
        )
    }

    pub fn classify(&self) -> RuleClass {
        if self.lhs.size() > 1 {
            RuleClass::Cooperative
        } else {
            RuleClass::Noncooperative
        }
    }

    /// Total number of product object copies across all targets.
    pub fn product_size(&self) -> u64 {
        self.rhs.iter().map(|(ms, _)| ms.size()).sum()
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ->", self.lhs)?;
        if self.rhs.is_empty() {
            write!(f, " H")?;
        }
        for (products, target) in &self.rhs {
            if products.is_empty() {
                write!(f, " {target}")?;
            } else {
                write!(f, " {target} {products}")?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn multi_symbol_lhs_is_cooperative() {
        let rule = Rule::symbols([("b", 1), ("c", 1)], [(&[("a", 1)][..], Target::Here)]);
        assert_eq!(rule.classify(), RuleClass::Cooperative);
    }

    #[test]
    fn single_symbol_lhs_is_noncooperative() {
        let rule = Rule::symbols([("1", 1)], [(&[("0", 1)][..], Target::Out)]);
        assert_eq!(rule.classify(), RuleClass::Noncooperative);
    }

    #[test]
    fn doubled_symbol_is_cooperative() {
        let rule = Rule::symbols([("0", 2)], [(&[("0", 1)][..], Target::Here)]);
        assert_eq!(rule.classify(), RuleClass::Cooperative);
    }

    #[test]
    fn display_matches_file_syntax() {
        let rule = Rule::symbols([("b", 1), ("c", 1)], [(&[("a", 1)][..], Target::Here)]);
        assert_eq!(rule.to_string(), "b c -> H a");
        let del = Rule::symbols([("0", 2)], [(&[("0", 1)][..], Target::Here)]);
        assert_eq!(del.to_string(), "0^2 -> H 0");
    }
}
