//! Membrane systems: labelled regions with tree containment and/or
//! directed labelled links, plus structural validation.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::multiset::{Multiset, Object, Symbol};
use crate::rule::{Rule, Target};

/// Index of a region inside its [`MembraneSystem`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RegionId(pub usize);

/// One compartment: contents, an active rule pool, and its place in the
/// containment tree and/or link graph.
///
/// The rule pool is itself a multiset of rule-valued objects so that a rule
/// listed twice is chosen twice as often.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Region {
    pub id: RegionId,
    pub label: String,
    pub contents: Multiset,
    pub rules: Multiset,
    pub parent: Option<RegionId>,
    pub children: Vec<RegionId>,
    pub links: Vec<(Option<String>, RegionId)>,
}

impl Region {
    /// Iterates the rule pool as rules with multiplicities.
    pub fn rule_pool(&self) -> impl Iterator<Item = (&Rule, u64)> {
        self.rules.iter().filter_map(|(obj, &count)| match obj {
            Object::Rule(rule) => Some((rule.as_ref(), count)),
            Object::Symbol(_) => None,
        })
    }
}

/// Containment-only, link-only, or both.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SystemKind {
    Tree,
    Network,
    Hybrid,
}

/// A whole membrane system: alphabet, regions, and the environment multiset
/// that collects products leaving a parentless region.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MembraneSystem {
    pub kind: SystemKind,
    pub alphabet: BTreeSet<Symbol>,
    pub output_alphabet: BTreeSet<Symbol>,
    regions: Vec<Region>,
    pub environment: Multiset,
}

impl MembraneSystem {
    pub fn new(kind: SystemKind) -> Self {
        MembraneSystem {
            kind,
            alphabet: BTreeSet::new(),
            output_alphabet: BTreeSet::new(),
            regions: Vec::new(),
            environment: Multiset::new(),
        }
    }

    pub fn add_symbols<'a>(&mut self, names: impl IntoIterator<Item = &'a str>) {
        for name in names {
            self.alphabet.insert(Symbol::new(name));
        }
    }

    pub fn add_region(&mut self, label: impl Into<String>) -> RegionId {
        let id = RegionId(self.regions.len());
        self.regions.push(Region {
            id,
            label: label.into(),
            contents: Multiset::new(),
            rules: Multiset::new(),
            parent: None,
            children: Vec::new(),
            links: Vec::new(),
        });
        id
    }

    /// Makes `child` a containment child of `parent`.
    pub fn nest(&mut self, parent: RegionId, child: RegionId) {
        self.regions[child.0].parent = Some(parent);
        self.regions[parent.0].children.push(child);
    }

    /// Adds a directed link `from -> to`, optionally labelled.
    pub fn link(&mut self, from: RegionId, to: RegionId, label: Option<String>) {
        self.regions[from.0].links.push((label, to));
    }

    pub fn add_rule(&mut self, region: RegionId, rule: Rule) {
        self.add_rule_copies(region, rule, 1);
    }

    pub fn add_rule_copies(&mut self, region: RegionId, rule: Rule, copies: u64) {
        self.regions[region.0].rules.insert(Object::rule(rule), copies);
    }

    pub fn place(&mut self, region: RegionId, object: Object, count: u64) {
        self.regions[region.0].contents.insert(object, count);
    }

    pub fn place_symbols<'a>(
        &mut self,
        region: RegionId,
        items: impl IntoIterator<Item = (&'a str, u64)>,
    ) {
        for (name, count) in items {
            self.place(region, Object::sym(name), count);
        }
    }

    pub fn regions(&self) -> &[Region] {
        &self.regions
    }

    pub fn region(&self, id: RegionId) -> &Region {
        &self.regions[id.0]
    }

    pub fn region_mut(&mut self, id: RegionId) -> &mut Region {
        &mut self.regions[id.0]
    }

    pub fn region_by_label(&self, label: &str) -> Option<&Region> {
        self.regions.iter().find(|r| r.label == label)
    }

    pub fn region_id_by_label(&self, label: &str) -> Option<RegionId> {
        self.region_by_label(label).map(|r| r.id)
    }

    /// The skin is the unique parentless region of a containment tree.
    pub fn skin(&self) -> Option<RegionId> {
        match self.kind {
            SystemKind::Network => None,
            SystemKind::Tree | SystemKind::Hybrid => {
                let mut roots = self.regions.iter().filter(|r| r.parent.is_none());
                match (roots.next(), roots.next()) {
                    (Some(root), None) => Some(root.id),
                    _ => None,
                }
            }
        }
    }

    /// Total object copies over all regions plus the environment.
    pub fn total_count(&self) -> u64 {
        self.regions.iter().map(|r| r.contents.size()).sum::<u64>() + self.environment.size()
    }

    /// Total copies of one symbol over all regions plus the environment.
    pub fn total_symbol_count(&self, name: &str) -> u64 {
        let obj = Object::sym(name);
        self.regions
            .iter()
            .map(|r| r.contents.count(&obj))
            .sum::<u64>()
            + self.environment.count(&obj)
    }

    pub fn validate(&self) -> Vec<Violation> {
        validate_system(self)
    }
}

/// A broken structural invariant. Violations are data, not errors: an
/// invalid system can still be inspected and repaired.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    DuplicateLabel { label: String },
    BrokenTreeEdge { parent: String, child: String },
    ContainmentCycle { region: String },
    KindMismatch { detail: String },
    NoSkin,
    MultipleSkins { labels: Vec<String> },
    DuplicateLinkLabel { region: String, label: String },
    EmptyRuleLhs { region: String },
    SymbolOutsideAlphabet { region: String, symbol: String },
    OutputAlphabetNotSubset { symbol: String },
    TargetUnresolvable { region: String, rule: String, target: String },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::DuplicateLabel { label } => write!(f, "duplicate region label {label:?}"),
            Violation::BrokenTreeEdge { parent, child } => {
                write!(f, "parent {parent:?} does not list child {child:?}")
            }
            Violation::ContainmentCycle { region } => {
                write!(f, "containment cycle through region {region:?}")
            }
            Violation::KindMismatch { detail } => write!(f, "kind mismatch: {detail}"),
            Violation::NoSkin => write!(f, "tree system has no skin region"),
            Violation::MultipleSkins { labels } => {
                write!(f, "tree system has multiple roots: {labels:?}")
            }
            Violation::DuplicateLinkLabel { region, label } => {
                write!(f, "region {region:?} has two links labelled {label:?}")
            }
            Violation::EmptyRuleLhs { region } => {
                write!(f, "region {region:?} holds a rule with an empty left-hand side")
            }
            Violation::SymbolOutsideAlphabet { region, symbol } => {
                write!(f, "region {region:?} uses symbol {symbol:?} outside the alphabet")
            }
            Violation::OutputAlphabetNotSubset { symbol } => {
                write!(f, "output symbol {symbol:?} is not in the alphabet")
            }
            Violation::TargetUnresolvable { region, rule, target } => {
                write!(f, "region {region:?}, rule {rule:?}: target {target} cannot be resolved")
            }
        }
    }
}

/// Checks every structural invariant and returns all violations found.
pub fn validate_system(sys: &MembraneSystem) -> Vec<Violation> {
    let mut violations = Vec::new();

    let mut seen_labels: BTreeMap<&str, usize> = BTreeMap::new();
    for region in sys.regions() {
        *seen_labels.entry(region.label.as_str()).or_insert(0) += 1;
    }
    for (label, count) in seen_labels {
        if count > 1 {
            violations.push(Violation::DuplicateLabel { label: label.to_string() });
        }
    }

    for region in sys.regions() {
        for &child in &region.children {
            if sys.region(child).parent != Some(region.id) {
                violations.push(Violation::BrokenTreeEdge {
                    parent: region.label.clone(),
                    child: sys.region(child).label.clone(),
                });
            }
        }
        if let Some(parent) = region.parent {
            if !sys.region(parent).children.contains(&region.id) {
                violations.push(Violation::BrokenTreeEdge {
                    parent: sys.region(parent).label.clone(),
                    child: region.label.clone(),
                });
            }
        }

        // walk to the root; revisiting this region means a cycle
        let mut slow = region.parent;
        let mut hops = 0;
        while let Some(up) = slow {
            if up == region.id {
                violations.push(Violation::ContainmentCycle { region: region.label.clone() });
                break;
            }
            hops += 1;
            if hops > sys.regions().len() {
                break;
            }
            slow = sys.region(up).parent;
        }

        let mut link_labels = BTreeSet::new();
        for (label, _) in &region.links {
            if let Some(label) = label {
                if !link_labels.insert(label.clone()) {
                    violations.push(Violation::DuplicateLinkLabel {
                        region: region.label.clone(),
                        label: label.clone(),
                    });
                }
            }
        }
    }

    match sys.kind {
        SystemKind::Tree => {
            let roots: Vec<_> = sys.regions().iter().filter(|r| r.parent.is_none()).collect();
            if !sys.regions().is_empty() {
                if roots.is_empty() {
                    violations.push(Violation::NoSkin);
                } else if roots.len() > 1 {
                    violations.push(Violation::MultipleSkins {
                        labels: roots.iter().map(|r| r.label.clone()).collect(),
                    });
                }
            }
            if sys.regions().iter().any(|r| !r.links.is_empty()) {
                violations.push(Violation::KindMismatch {
                    detail: "tree system contains links".to_string(),
                });
            }
        }
        SystemKind::Network => {
            if sys.regions().iter().any(|r| r.parent.is_some() || !r.children.is_empty()) {
                violations.push(Violation::KindMismatch {
                    detail: "network system contains containment edges".to_string(),
                });
            }
        }
        SystemKind::Hybrid => {}
    }

    for symbol in &sys.output_alphabet {
        if !sys.alphabet.contains(symbol) {
            violations.push(Violation::OutputAlphabetNotSubset { symbol: symbol.to_string() });
        }
    }

    for region in sys.regions() {
        check_multiset_symbols(sys, region, &region.contents, &mut violations);
        for (rule, _) in region.rule_pool() {
            check_rule(sys, region, rule, &mut violations);
        }
    }

    violations
}

fn check_rule(
    sys: &MembraneSystem,
    region: &Region,
    rule: &Rule,
    violations: &mut Vec<Violation>,
) {
    if rule.lhs.is_empty() {
        violations.push(Violation::EmptyRuleLhs { region: region.label.clone() });
    }
    check_multiset_symbols(sys, region, &rule.lhs, violations);
    for (products, target) in &rule.rhs {
        check_multiset_symbols(sys, region, products, violations);
        let resolvable = match target {
            Target::Here | Target::Out => true,
            Target::In(label) => region
                .children
                .iter()
                .any(|&child| sys.region(child).label == *label),
            Target::Link(None) => !region.links.is_empty(),
            Target::Link(Some(label)) => {
                region.links.iter().any(|(l, _)| l.as_deref() == Some(label))
            }
        };
        if !resolvable {
            violations.push(Violation::TargetUnresolvable {
                region: region.label.clone(),
                rule: rule.to_string(),
                target: target.to_string(),
            });
        }
        if matches!(target, Target::Link(_)) && sys.kind == SystemKind::Tree {
            violations.push(Violation::KindMismatch {
                detail: format!("link target in tree system (region {:?})", region.label),
            });
        }
    }
}

fn check_multiset_symbols(
    sys: &MembraneSystem,
    region: &Region,
    ms: &Multiset,
    violations: &mut Vec<Violation>,
) {
    for (obj, _) in ms.iter() {
        match obj {
            Object::Symbol(symbol) => {
                if !sys.alphabet.contains(symbol) {
                    violations.push(Violation::SymbolOutsideAlphabet {
                        region: region.label.clone(),
                        symbol: symbol.to_string(),
                    });
                }
            }
            Object::Rule(rule) => check_rule(sys, region, rule, violations),
        }
    }
}

/// The four-membrane demo system: nested regions `1..4` with `b^2 c` and the
/// single cooperative rule `b c -> H a` in region 2.
pub fn four_membrane_demo() -> MembraneSystem {
    let mut sys = MembraneSystem::new(SystemKind::Tree);
    sys.add_symbols(["a", "b", "c"]);
    let r1 = sys.add_region("1");
    let r2 = sys.add_region("2");
    let r3 = sys.add_region("3");
    let r4 = sys.add_region("4");
    sys.nest(r1, r2);
    sys.nest(r1, r3);
    sys.nest(r3, r4);
    sys.place_symbols(r1, [("a", 1)]);
    sys.place_symbols(r2, [("b", 2), ("c", 1)]);
    sys.place_symbols(r4, [("c", 1)]);
    sys.add_rule(r2, Rule::symbols([("b", 1), ("c", 1)], [(&[("a", 1)][..], Target::Here)]));
    sys
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn demo_system_validates_clean() {
        let sys = four_membrane_demo();
        assert_eq!(sys.validate(), Vec::new());
        assert_eq!(sys.skin(), sys.region_id_by_label("1"));
    }

    #[test]
    fn dangling_in_target_is_flagged() {
        let mut sys = four_membrane_demo();
        let r2 = sys.region_id_by_label("2").unwrap();
        sys.add_rule(
            r2,
            Rule::symbols([("b", 1)], [(&[("a", 1)][..], Target::In("5".to_string()))]),
        );
        let violations = sys.validate();
        assert!(violations
            .iter()
            .any(|v| matches!(v, Violation::TargetUnresolvable { .. })));
    }

    #[test]
    fn network_with_parent_edge_is_kind_mismatch() {
        let mut sys = MembraneSystem::new(SystemKind::Network);
        sys.add_symbols(["a"]);
        let r1 = sys.add_region("1");
        let r2 = sys.add_region("2");
        sys.nest(r1, r2);
        let violations = sys.validate();
        assert!(violations.iter().any(|v| matches!(v, Violation::KindMismatch { .. })));
    }

    #[test]
    fn alien_symbol_is_flagged() {
        let mut sys = four_membrane_demo();
        let r3 = sys.region_id_by_label("3").unwrap();
        sys.place_symbols(r3, [("q", 1)]);
        let violations = sys.validate();
        assert!(violations
            .iter()
            .any(|v| matches!(v, Violation::SymbolOutsideAlphabet { .. })));
    }

    #[test]
    fn duplicate_labels_are_flagged() {
        let mut sys = MembraneSystem::new(SystemKind::Network);
        sys.add_region("n");
        sys.add_region("n");
        let violations = sys.validate();
        assert!(violations.iter().any(|v| matches!(v, Violation::DuplicateLabel { .. })));
    }
}
