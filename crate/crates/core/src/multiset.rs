//! Objects and counted multisets of objects.
//!
//! A region's contents is a [`Multiset`] of [`Object`]s. Objects are either
//! plain symbols or rule values: rules are first-class data and may appear
//! inside contents, where they are sampled like any other molecule but never
//! fire on their own.

use std::collections::BTreeMap;
use std::fmt;

use crate::rule::Rule;

/// A named molecular species. Names are tokens of letters, digits,
/// underscores and primes, e.g. `a`, `0`, `n1`, `z'`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Symbol(String);

impl Symbol {
    pub fn new(name: impl Into<String>) -> Self {
        let name = name.into();
        debug_assert!(Self::is_valid_name(&name), "invalid symbol name {name:?}");
        Symbol(name)
    }

    pub fn is_valid_name(name: &str) -> bool {
        !name.is_empty()
            && name
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '\'')
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for Symbol {
    fn from(s: &str) -> Self {
        Symbol::new(s)
    }
}

/// An element of a region: a symbol or a rule used as data.
///
/// Rule-valued objects compare by structural equality, so two occurrences of
/// the same rule text are the same object.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Object {
    Symbol(Symbol),
    Rule(Box<Rule>),
}

impl Object {
    pub fn sym(name: impl Into<String>) -> Self {
        Object::Symbol(Symbol::new(name))
    }

    pub fn rule(rule: Rule) -> Self {
        Object::Rule(Box::new(rule))
    }

    pub fn as_symbol(&self) -> Option<&Symbol> {
        match self {
            Object::Symbol(s) => Some(s),
            Object::Rule(_) => None,
        }
    }
}

impl fmt::Display for Object {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Object::Symbol(s) => write!(f, "{s}"),
            Object::Rule(r) => write!(f, "({r})"),
        }
    }
}

/// A counted bag of objects in canonical (sorted) form.
///
/// Counts are always positive; inserting zero or removing the last copy
/// drops the entry, so equality and hashing are structural.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Multiset {
    counts: BTreeMap<Object, u64>,
}

impl Multiset {
    pub fn new() -> Self {
        Multiset::default()
    }

    /// Builds a multiset from `(symbol name, count)` pairs.
    pub fn from_symbols<'a>(items: impl IntoIterator<Item = (&'a str, u64)>) -> Self {
        let mut ms = Multiset::new();
        for (name, count) in items {
            ms.insert(Object::sym(name), count);
        }
        ms
    }

    pub fn insert(&mut self, object: Object, count: u64) {
        if count == 0 {
            return;
        }
        *self.counts.entry(object).or_insert(0) += count;
    }

    /// Removes up to `count` copies, returning how many were actually removed.
    pub fn remove(&mut self, object: &Object, count: u64) -> u64 {
        match self.counts.get_mut(object) {
            None => 0,
            Some(c) if *c > count => {
                *c -= count;
                count
            }
            Some(c) => {
                let removed = *c;
                self.counts.remove(object);
                removed
            }
        }
    }

    /// Removes an exact sub-multiset. Panics if `other` is not contained;
    /// callers check [`Multiset::contains`] first.
    pub fn remove_all(&mut self, other: &Multiset) {
        debug_assert!(other.is_subset(self), "removing a non-subset");
        for (obj, &count) in other.iter() {
            self.remove(obj, count);
        }
    }

    pub fn insert_all(&mut self, other: &Multiset) {
        for (obj, &count) in other.iter() {
            self.insert(obj.clone(), count);
        }
    }

    pub fn count(&self, object: &Object) -> u64 {
        self.counts.get(object).copied().unwrap_or(0)
    }

    pub fn count_symbol(&self, name: &str) -> u64 {
        self.count(&Object::sym(name))
    }

    /// Total number of object copies.
    pub fn size(&self) -> u64 {
        self.counts.values().sum()
    }

    /// Number of distinct objects.
    pub fn distinct(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    /// Count-wise `<=` against `other`.
    pub fn is_subset(&self, other: &Multiset) -> bool {
        self.counts
            .iter()
            .all(|(obj, &count)| other.count(obj) >= count)
    }

    /// True when `other` fits inside this multiset.
    pub fn contains(&self, other: &Multiset) -> bool {
        other.is_subset(self)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Object, &u64)> {
        self.counts.iter()
    }

    /// Iterates object copies in canonical order, with multiplicity.
    pub fn iter_copies(&self) -> impl Iterator<Item = &Object> {
        self.counts
            .iter()
            .flat_map(|(obj, &count)| std::iter::repeat_n(obj, count as usize))
    }

    /// The object at position `index` when copies are laid out in canonical
    /// order. Used for uniform sampling; `index < self.size()`.
    pub fn nth_copy(&self, index: u64) -> &Object {
        let mut remaining = index;
        for (obj, &count) in &self.counts {
            if remaining < count {
                return obj;
            }
            remaining -= count;
        }
        panic!("index {index} out of bounds for multiset of size {}", self.size());
    }
}

impl FromIterator<(Object, u64)> for Multiset {
    fn from_iter<T: IntoIterator<Item = (Object, u64)>>(iter: T) -> Self {
        let mut ms = Multiset::new();
        for (obj, count) in iter {
            ms.insert(obj, count);
        }
        ms
    }
}

impl fmt::Display for Multiset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            return Ok(());
        }
        let mut first = true;
        for (obj, &count) in &self.counts {
            if !first {
                write!(f, " ")?;
            }
            first = false;
            if count == 1 {
                write!(f, "{obj}")?;
            } else {
                write!(f, "{obj}^{count}")?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_is_subset_of_anything() {
        let empty = Multiset::new();
        let some = Multiset::from_symbols([("a", 2)]);
        assert!(empty.is_subset(&some));
        assert!(empty.is_subset(&empty));
    }

    #[test]
    fn subset_by_counts() {
        let small = Multiset::from_symbols([("b", 1), ("c", 1)]);
        let big = Multiset::from_symbols([("b", 2), ("c", 1)]);
        assert!(small.is_subset(&big));
        assert!(!big.is_subset(&small));
    }

    #[test]
    fn count_excess_is_not_subset() {
        let lhs = Multiset::from_symbols([("c", 2)]);
        let rhs = Multiset::from_symbols([("b", 2), ("c", 1)]);
        assert!(!lhs.is_subset(&rhs));
    }

    #[test]
    fn insert_remove_roundtrip() {
        let mut ms = Multiset::from_symbols([("a", 3)]);
        let before = ms.clone();
        ms.insert(Object::sym("b"), 1);
        ms.remove(&Object::sym("b"), 1);
        assert_eq!(ms, before);
    }

    #[test]
    fn remove_clips_at_zero() {
        let mut ms = Multiset::from_symbols([("a", 2)]);
        assert_eq!(ms.remove(&Object::sym("a"), 5), 2);
        assert!(ms.is_empty());
    }

    #[test]
    fn nth_copy_walks_in_order() {
        let ms = Multiset::from_symbols([("a", 2), ("b", 1)]);
        assert_eq!(ms.nth_copy(0), &Object::sym("a"));
        assert_eq!(ms.nth_copy(1), &Object::sym("a"));
        assert_eq!(ms.nth_copy(2), &Object::sym("b"));
    }

    #[test]
    fn display_uses_caret_multiplicities() {
        let ms = Multiset::from_symbols([("b", 2), ("c", 1)]);
        assert_eq!(ms.to_string(), "b^2 c");
    }
}
