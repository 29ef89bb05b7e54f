//! The `.psys` membrane-system format: bracket-notation structure,
//! per-region contents and rules, and link declarations.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use super::lexer::{tokenize, Cursor, TokenKind};
use super::DslError;
use crate::multiset::{Multiset, Object, Symbol};
use crate::rule::{Rule, Target};
use crate::system::{MembraneSystem, RegionId, SystemKind};

/// Words that cannot be used as symbols, region labels or link labels.
const RESERVED: &[&str] = &[
    "alphabet", "output", "structure", "region", "contents", "rule", "link", "H", "L", "OUT",
    "IN", "LINK",
];

pub(super) fn is_reserved(word: &str) -> bool {
    RESERVED.contains(&word)
}

/// One node of the containment structure: `[label child* ]label`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StructureNode {
    pub label: String,
    pub children: Vec<StructureNode>,
}

impl StructureNode {
    fn preorder<'a>(&'a self, out: &mut Vec<&'a StructureNode>) {
        out.push(self);
        for child in &self.children {
            child.preorder(out);
        }
    }

    fn labels(&self) -> Vec<&str> {
        let mut nodes = Vec::new();
        self.preorder(&mut nodes);
        nodes.iter().map(|n| n.label.as_str()).collect()
    }

    fn sort_children(&mut self) {
        for child in &mut self.children {
            child.sort_children();
        }
        self.children.sort_by(|a, b| a.label.cmp(&b.label));
    }
}

/// Contents and rule pool for one labelled region.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RegionDecl {
    pub label: String,
    pub contents: Multiset,
    /// One entry per pool copy; repeating a rule doubles its weight.
    pub rules: Vec<Rule>,
}

/// `link from -> to [label]`
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinkDecl {
    pub from: String,
    pub to: String,
    pub label: Option<String>,
}

/// Abstract syntax of a `.psys` file.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SystemDoc {
    pub alphabet: Vec<Symbol>,
    pub output: Vec<Symbol>,
    pub structure: Option<StructureNode>,
    pub regions: Vec<RegionDecl>,
    pub links: Vec<LinkDecl>,
}

impl SystemDoc {
    /// Sorted alphabets, children ordered by label, region declarations in
    /// structure preorder then by label, rules and links sorted.
    pub fn canonicalize(mut self) -> Self {
        self.alphabet.sort();
        self.alphabet.dedup();
        self.output.sort();
        self.output.dedup();
        if let Some(structure) = &mut self.structure {
            structure.sort_children();
        }
        let structure_order: Vec<String> = self
            .structure
            .as_ref()
            .map(|s| s.labels().iter().map(|l| l.to_string()).collect())
            .unwrap_or_default();
        self.regions.sort_by_key(|decl| {
            match structure_order.iter().position(|l| *l == decl.label) {
                Some(pos) => (0, pos, decl.label.clone()),
                None => (1, 0, decl.label.clone()),
            }
        });
        for decl in &mut self.regions {
            decl.rules.sort();
        }
        self.links.sort_by(|a, b| {
            (&a.from, &a.to, &a.label).cmp(&(&b.from, &b.to, &b.label))
        });
        self
    }

    /// Builds the executable system. Tree when only a structure is declared,
    /// network when only standalone regions are, hybrid when both appear.
    pub fn lower(&self) -> Result<MembraneSystem, DslError> {
        let structure_labels: Vec<&str> = self
            .structure
            .as_ref()
            .map(|s| s.labels())
            .unwrap_or_default();
        let standalone: Vec<&RegionDecl> = self
            .regions
            .iter()
            .filter(|decl| !structure_labels.contains(&decl.label.as_str()))
            .collect();

        let kind = match (&self.structure, standalone.is_empty() && self.links.is_empty()) {
            (Some(_), true) => SystemKind::Tree,
            (Some(_), false) => SystemKind::Hybrid,
            (None, _) => SystemKind::Network,
        };

        let mut sys = MembraneSystem::new(kind);
        for symbol in &self.alphabet {
            sys.alphabet.insert(symbol.clone());
        }
        for symbol in &self.output {
            sys.output_alphabet.insert(symbol.clone());
        }

        if let Some(structure) = &self.structure {
            build_structure(&mut sys, structure, None)?;
        }
        for decl in &standalone {
            if sys.region_by_label(&decl.label).is_some() {
                return Err(DslError::semantic(format!(
                    "region {:?} declared twice",
                    decl.label
                )));
            }
            sys.add_region(decl.label.clone());
        }

        for decl in &self.regions {
            let id = sys.region_id_by_label(&decl.label).expect("declared region");
            let region = sys.region_mut(id);
            region.contents.insert_all(&decl.contents);
            for rule in &decl.rules {
                region.rules.insert(Object::rule(rule.clone()), 1);
            }
        }

        for link in &self.links {
            let from = sys.region_id_by_label(&link.from).ok_or_else(|| {
                DslError::semantic(format!("link from unknown region {:?}", link.from))
            })?;
            let to = sys.region_id_by_label(&link.to).ok_or_else(|| {
                DslError::semantic(format!("link to unknown region {:?}", link.to))
            })?;
            sys.link(from, to, link.label.clone());
        }
        Ok(sys)
    }
}

fn build_structure(
    sys: &mut MembraneSystem,
    node: &StructureNode,
    parent: Option<RegionId>,
) -> Result<(), DslError> {
    if sys.region_by_label(&node.label).is_some() {
        return Err(DslError::semantic(format!(
            "structure label {:?} appears twice",
            node.label
        )));
    }
    let id = sys.add_region(node.label.clone());
    if let Some(parent) = parent {
        sys.nest(parent, id);
    }
    for child in &node.children {
        build_structure(sys, child, Some(id))?;
    }
    Ok(())
}

/// Parses a standalone multiset expression such as `a^50 b`.
pub fn parse_multiset_text(text: &str) -> Result<Multiset, DslError> {
    let mut cur = Cursor::new(tokenize(text)?);
    cur.skip_newlines();
    let ms = parse_multiset(&mut cur)?;
    cur.skip_newlines();
    cur.expect(TokenKind::Eof)?;
    Ok(ms)
}

/// Parses a bracket-notation structure expression such as `[1[2]2]1`.
pub fn parse_structure(text: &str) -> Result<StructureNode, DslError> {
    let mut cur = Cursor::new(tokenize(text)?);
    cur.skip_newlines();
    let node = parse_mu(&mut cur)?;
    cur.skip_newlines();
    cur.expect(TokenKind::Eof)?;
    Ok(node)
}

fn parse_mu(cur: &mut Cursor) -> Result<StructureNode, DslError> {
    cur.expect(TokenKind::LBracket)?;
    let (label, _, _) = parse_label(cur, "membrane label")?;
    let mut children = Vec::new();
    while cur.at(&TokenKind::LBracket) {
        children.push(parse_mu(cur)?);
    }
    cur.expect(TokenKind::RBracket)?;
    let (close, line, col) = parse_label(cur, "closing membrane label")?;
    if close != label {
        return Err(DslError::parse(
            line,
            col,
            format!("closing label {close:?} does not match opening label {label:?}"),
        ));
    }
    Ok(StructureNode { label, children })
}

fn parse_label(cur: &mut Cursor, what: &str) -> Result<(String, u32, u32), DslError> {
    let (word, line, col) = cur.expect_word(what)?;
    if is_reserved(&word) {
        return Err(DslError::parse(
            line,
            col,
            format!("{word:?} is a reserved word and cannot be used as a {what}"),
        ));
    }
    Ok((word, line, col))
}

/// Parses a full `.psys` document and checks symbol/link consistency.
pub fn parse_system(text: &str) -> Result<SystemDoc, DslError> {
    let mut cur = Cursor::new(tokenize(text)?);
    let mut doc = SystemDoc::default();

    loop {
        cur.skip_newlines();
        if cur.at(&TokenKind::Eof) {
            break;
        }
        let (word, line, col) = cur.expect_word("a declaration")?;
        match word.as_str() {
            "alphabet" => {
                while let TokenKind::Word(_) = &cur.peek().kind {
                    let (name, _, _) = parse_label(&mut cur, "symbol")?;
                    doc.alphabet.push(Symbol::new(name));
                }
                end_of_line(&mut cur)?;
            }
            "output" => {
                while let TokenKind::Word(_) = &cur.peek().kind {
                    let (name, _, _) = parse_label(&mut cur, "symbol")?;
                    doc.output.push(Symbol::new(name));
                }
                end_of_line(&mut cur)?;
            }
            "structure" => {
                if doc.structure.is_some() {
                    return Err(DslError::parse(line, col, "duplicate structure declaration"));
                }
                doc.structure = Some(parse_mu(&mut cur)?);
                end_of_line(&mut cur)?;
            }
            "region" => {
                let (label, rl, rc) = parse_label(&mut cur, "region label")?;
                if doc.regions.iter().any(|d| d.label == label) {
                    return Err(DslError::parse(rl, rc, format!("region {label:?} declared twice")));
                }
                let decl = parse_region_block(&mut cur, label)?;
                doc.regions.push(decl);
            }
            "link" => {
                let (from, _, _) = parse_label(&mut cur, "link source label")?;
                cur.expect(TokenKind::Arrow)?;
                let (to, _, _) = parse_label(&mut cur, "link destination label")?;
                let label = if cur.eat(&TokenKind::LBracket) {
                    let (l, _, _) = parse_label(&mut cur, "link label")?;
                    cur.expect(TokenKind::RBracket)?;
                    Some(l)
                } else {
                    None
                };
                doc.links.push(LinkDecl { from, to, label });
                end_of_line(&mut cur)?;
            }
            other => {
                return Err(DslError::parse(
                    line,
                    col,
                    format!("expected a declaration keyword, found {other:?}"),
                ));
            }
        }
    }

    check_doc(&doc)?;
    Ok(doc)
}

fn end_of_line(cur: &mut Cursor) -> Result<(), DslError> {
    if cur.at(&TokenKind::Eof) || cur.eat(&TokenKind::Newline) {
        Ok(())
    } else {
        Err(cur.error_here(format!(
            "expected end of line, found {}",
            cur.peek().kind.describe()
        )))
    }
}

fn parse_region_block(cur: &mut Cursor, label: String) -> Result<RegionDecl, DslError> {
    let mut decl = RegionDecl { label, ..RegionDecl::default() };
    cur.expect(TokenKind::LBrace)?;
    loop {
        cur.skip_newlines();
        if cur.eat(&TokenKind::RBrace) {
            end_of_line(cur)?;
            return Ok(decl);
        }
        let (word, line, col) = cur.expect_word("'contents', 'rule' or '}'")?;
        match word.as_str() {
            "contents" => {
                let items = parse_multiset(cur)?;
                decl.contents.insert_all(&items);
                end_of_line(cur)?;
            }
            "rule" => {
                decl.rules.push(parse_rule_body(cur)?);
                end_of_line(cur)?;
            }
            other => {
                return Err(DslError::parse(
                    line,
                    col,
                    format!("expected 'contents', 'rule' or '}}', found {other:?}"),
                ));
            }
        }
    }
}

/// Parses `item*` where `item := (symbol | '(' rule ')') ('^' count)?`.
/// Stops at the first token that cannot start an item.
fn parse_multiset(cur: &mut Cursor) -> Result<Multiset, DslError> {
    let mut ms = Multiset::new();
    loop {
        let object = match &cur.peek().kind {
            TokenKind::Word(word) if !is_reserved(word) => {
                let (name, _, _) = cur.expect_word("symbol")?;
                Object::Symbol(Symbol::new(name))
            }
            TokenKind::LParen => {
                cur.next();
                let rule = parse_rule_body(cur)?;
                cur.expect(TokenKind::RParen)?;
                Object::rule(rule)
            }
            _ => return Ok(ms),
        };
        let count = if cur.eat(&TokenKind::Caret) { parse_count(cur)? } else { 1 };
        ms.insert(object, count);
    }
}

fn parse_count(cur: &mut Cursor) -> Result<u64, DslError> {
    let (word, line, col) = cur.expect_word("a multiplicity")?;
    word.parse::<u64>().ok().filter(|&n| n > 0).ok_or_else(|| {
        DslError::parse(line, col, format!("expected a positive integer, found {word:?}"))
    })
}

/// Parses `lhs -> targetClause+` where a clause is one of `H ms`, `L ms`,
/// `OUT ms`, `IN(label) ms`, `LINK ms`, `LINK(label) ms`. `L` and `OUT` are
/// synonyms: both leave the region upward. Clauses with empty products are
/// dropped, so `a -> H` is the pure-deletion rule.
fn parse_rule_body(cur: &mut Cursor) -> Result<Rule, DslError> {
    let lhs = parse_multiset(cur)?;
    if lhs.is_empty() {
        return Err(cur.error_here("rule needs at least one reactant"));
    }
    cur.expect(TokenKind::Arrow)?;
    let mut rhs = Vec::new();
    let mut saw_clause = false;
    loop {
        let target = match &cur.peek().kind {
            TokenKind::Word(word) => match word.as_str() {
                "H" => {
                    cur.next();
                    Target::Here
                }
                "L" | "OUT" => {
                    cur.next();
                    Target::Out
                }
                "IN" => {
                    cur.next();
                    cur.expect(TokenKind::LParen)?;
                    let (label, _, _) = parse_label(cur, "child label")?;
                    cur.expect(TokenKind::RParen)?;
                    Target::In(label)
                }
                "LINK" => {
                    cur.next();
                    if cur.eat(&TokenKind::LParen) {
                        let (label, _, _) = parse_label(cur, "link label")?;
                        cur.expect(TokenKind::RParen)?;
                        Target::Link(Some(label))
                    } else {
                        Target::Link(None)
                    }
                }
                _ => break,
            },
            _ => break,
        };
        saw_clause = true;
        let products = parse_multiset(cur)?;
        if !products.is_empty() {
            rhs.push((products, target));
        }
    }
    if !saw_clause {
        return Err(cur.error_here("expected a target clause: H, L, OUT, IN(label) or LINK"));
    }
    Ok(Rule::new(lhs, rhs))
}

fn check_doc(doc: &SystemDoc) -> Result<(), DslError> {
    let alphabet: BTreeSet<&Symbol> = doc.alphabet.iter().collect();
    for symbol in &doc.output {
        if !alphabet.contains(symbol) {
            return Err(DslError::semantic(format!(
                "output symbol {symbol} is not in the alphabet"
            )));
        }
    }
    for decl in &doc.regions {
        check_multiset_symbols(&decl.contents, &alphabet)?;
        for rule in &decl.rules {
            check_rule_symbols(rule, &alphabet)?;
        }
    }
    let mut known_labels: BTreeSet<&str> = doc
        .regions
        .iter()
        .map(|decl| decl.label.as_str())
        .collect();
    if let Some(structure) = &doc.structure {
        known_labels.extend(structure.labels());
    }
    for link in &doc.links {
        for endpoint in [&link.from, &link.to] {
            if !known_labels.contains(endpoint.as_str()) {
                return Err(DslError::semantic(format!(
                    "link endpoint {endpoint:?} is not a declared region"
                )));
            }
        }
    }
    Ok(())
}

fn check_multiset_symbols(ms: &Multiset, alphabet: &BTreeSet<&Symbol>) -> Result<(), DslError> {
    for (object, _) in ms.iter() {
        match object {
            Object::Symbol(symbol) => {
                if !alphabet.contains(symbol) {
                    return Err(DslError::semantic(format!(
                        "symbol {symbol} is not in the alphabet"
                    )));
                }
            }
            Object::Rule(rule) => check_rule_symbols(rule, alphabet)?,
        }
    }
    Ok(())
}

fn check_rule_symbols(rule: &Rule, alphabet: &BTreeSet<&Symbol>) -> Result<(), DslError> {
    check_multiset_symbols(&rule.lhs, alphabet)?;
    for (products, _) in &rule.rhs {
        check_multiset_symbols(products, alphabet)?;
    }
    Ok(())
}

/// Renders a structure expression in bracket notation.
pub fn print_structure(node: &StructureNode) -> String {
    let mut out = String::new();
    write_structure(node, &mut out);
    out
}

fn write_structure(node: &StructureNode, out: &mut String) {
    let _ = write!(out, "[{}", node.label);
    for child in &node.children {
        write_structure(child, out);
    }
    let _ = write!(out, "]{}", node.label);
}

/// Renders a document; `parse_system(print_system(doc)) == doc` for
/// canonical documents.
pub fn print_system(doc: &SystemDoc) -> String {
    let mut out = String::new();
    if !doc.alphabet.is_empty() {
        let names: Vec<&str> = doc.alphabet.iter().map(Symbol::as_str).collect();
        let _ = writeln!(out, "alphabet {}", names.join(" "));
    }
    if !doc.output.is_empty() {
        let names: Vec<&str> = doc.output.iter().map(Symbol::as_str).collect();
        let _ = writeln!(out, "output {}", names.join(" "));
    }
    if let Some(structure) = &doc.structure {
        let _ = writeln!(out);
        let _ = writeln!(out, "structure {}", print_structure(structure));
    }
    for decl in &doc.regions {
        let _ = writeln!(out);
        let _ = writeln!(out, "region {} {{", decl.label);
        if !decl.contents.is_empty() {
            let _ = writeln!(out, "  contents {}", decl.contents);
        }
        for rule in &decl.rules {
            let _ = writeln!(out, "  rule {rule}");
        }
        let _ = writeln!(out, "}}");
    }
    if !doc.links.is_empty() {
        let _ = writeln!(out);
        for link in &doc.links {
            match &link.label {
                Some(label) => {
                    let _ = writeln!(out, "link {} -> {} [{}]", link.from, link.to, label);
                }
                None => {
                    let _ = writeln!(out, "link {} -> {}", link.from, link.to);
                }
            }
        }
    }
    out
}

/// Lifts an executable system back into a document, e.g. to save a
/// constructed gate as a `.psys` file. Region declarations are emitted for
/// every region that carries contents or rules, and for every region outside
/// the containment structure.
pub fn system_to_doc(sys: &MembraneSystem) -> Result<SystemDoc, DslError> {
    let mut doc = SystemDoc {
        alphabet: sys.alphabet.iter().cloned().collect(),
        output: sys.output_alphabet.iter().cloned().collect(),
        ..SystemDoc::default()
    };

    let roots: Vec<_> = sys.regions().iter().filter(|r| r.parent.is_none()).collect();
    let tree_roots: Vec<_> = roots.iter().filter(|r| !r.children.is_empty()).collect();
    let structure_root = match sys.kind {
        SystemKind::Network => None,
        SystemKind::Tree | SystemKind::Hybrid => {
            if tree_roots.len() > 1 {
                return Err(DslError::semantic(
                    "system with multiple containment roots cannot be written as one structure"
                        .to_string(),
                ));
            }
            match tree_roots.first() {
                Some(root) => Some(root.id),
                // a single region with no children still forms the structure
                None if sys.kind == SystemKind::Tree && roots.len() == 1 => Some(roots[0].id),
                None => None,
            }
        }
    };

    let mut in_structure = BTreeSet::new();
    if let Some(root) = structure_root {
        doc.structure = Some(lift_structure(sys, root, &mut in_structure));
    }

    for region in sys.regions() {
        let needs_decl = !in_structure.contains(&region.id)
            || !region.contents.is_empty()
            || !region.rules.is_empty();
        if !needs_decl {
            continue;
        }
        let mut rules = Vec::new();
        for (rule, copies) in region.rule_pool() {
            for _ in 0..copies {
                rules.push(rule.clone());
            }
        }
        doc.regions.push(RegionDecl {
            label: region.label.clone(),
            contents: region.contents.clone(),
            rules,
        });
    }

    for region in sys.regions() {
        for (label, to) in &region.links {
            doc.links.push(LinkDecl {
                from: region.label.clone(),
                to: sys.region(*to).label.clone(),
                label: label.clone(),
            });
        }
    }
    Ok(doc)
}

fn lift_structure(
    sys: &MembraneSystem,
    id: RegionId,
    seen: &mut BTreeSet<RegionId>,
) -> StructureNode {
    seen.insert(id);
    let region = sys.region(id);
    StructureNode {
        label: region.label.clone(),
        children: region
            .children
            .iter()
            .map(|&child| lift_structure(sys, child, seen))
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const DEMO: &str = "\
# four nested membranes, one cooperative rule
alphabet a b c

structure [1[2]2[3[4]4]3]1

region 1 {
  contents a
}

region 2 {
  contents b^2 c
  rule b c -> H a
}

region 4 {
  contents c
}
";

    #[test]
    fn structure_parses_nested_labels() {
        let node = parse_structure("[1[2]2[3[4]4]3]1").unwrap();
        assert_eq!(node.label, "1");
        assert_eq!(node.children.len(), 2);
        assert_eq!(node.children[0].label, "2");
        assert_eq!(node.children[1].label, "3");
        assert_eq!(node.children[1].children[0].label, "4");
    }

    #[test]
    fn minimal_structure() {
        let node = parse_structure("[1]1").unwrap();
        assert_eq!(node.label, "1");
        assert!(node.children.is_empty());
    }

    #[test]
    fn mismatched_labels_error_with_position() {
        let err = parse_structure("[1[2]3]1").unwrap_err();
        match err {
            DslError::Parse { line, col, .. } => {
                assert_eq!(line, 1);
                assert_eq!(col, 6);
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn demo_file_lowers_to_the_fixture() {
        let doc = parse_system(DEMO).unwrap();
        let sys = doc.lower().unwrap();
        assert_eq!(sys, crate::system::four_membrane_demo());
        assert!(sys.validate().is_empty());
    }

    #[test]
    fn not_rule_uses_leave_target() {
        let doc = parse_system(
            "alphabet 0 1\nregion g {\n  rule 0 -> L 1\n  rule 1 -> L 0\n}\n",
        )
        .unwrap();
        assert_eq!(doc.regions[0].rules[0], Rule::symbols([("0", 1)], [(&[("1", 1)][..], Target::Out)]));
    }

    #[test]
    fn in_target_and_rule_objects_parse() {
        let doc = parse_system(
            "alphabet x a b\nstructure [1[2]2]1\nregion 1 {\n  contents (a -> H b)^2\n  rule x a -> IN(2) a\n}\n",
        )
        .unwrap();
        let rule = &doc.regions[0].rules[0];
        assert_eq!(rule.rhs[0].1, Target::In("2".to_string()));
        let inner = Rule::symbols([("a", 1)], [(&[("b", 1)][..], Target::Here)]);
        assert_eq!(doc.regions[0].contents.count(&Object::rule(inner)), 2);
    }

    #[test]
    fn symbol_outside_alphabet_is_semantic_error() {
        let err = parse_system("alphabet a\nregion 1 {\n  contents q\n}\n").unwrap_err();
        assert!(matches!(err, DslError::Semantic { .. }));
    }

    #[test]
    fn print_then_parse_is_identity_on_canonical_docs() {
        let doc = parse_system(DEMO).unwrap().canonicalize();
        let printed = print_system(&doc);
        let reparsed = parse_system(&printed).unwrap();
        assert_eq!(reparsed, doc);
    }

    #[test]
    fn network_doc_round_trips_with_links() {
        let text = "\
alphabet 0 1

region g1 {
  rule 0 -> LINK 1
}

region g2 {
}

link g1 -> g2 [x]
";
        let doc = parse_system(text).unwrap().canonicalize();
        let sys = doc.lower().unwrap();
        assert_eq!(sys.kind, SystemKind::Network);
        assert!(sys.validate().is_empty());
        assert_eq!(parse_system(&print_system(&doc)).unwrap(), doc);
    }

    #[test]
    fn system_to_doc_round_trips_the_demo() {
        let sys = crate::system::four_membrane_demo();
        let doc = system_to_doc(&sys).unwrap().canonicalize();
        let lowered = doc.lower().unwrap();
        assert_eq!(lowered, sys);
    }

    #[test]
    fn pure_deletion_rule_round_trips() {
        let doc = parse_system("alphabet a\nregion 1 {\n  rule a -> H\n}\n").unwrap();
        assert!(doc.regions[0].rules[0].rhs.is_empty());
        let printed = print_system(&doc);
        assert_eq!(parse_system(&printed).unwrap(), doc);
    }
}
