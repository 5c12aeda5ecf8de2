//! Canonical finite sets and maps of naturals in gap form: the first key,
//! then for each later key the count of naturals skipped since the previous
//! one. Every gap sequence is a valid value and distinct sets have distinct
//! sequences, so structural equality is set equality.

use std::cmp::Ordering;
use std::fmt;
use std::iter::Peekable;
use std::str::FromStr;

use thiserror::Error;

use crate::bignat::Nat;
use crate::codec::{CodecError, CodecPlan, DEFAULT_FUEL};
use crate::sigmodel::{IndexValue, TypeId};
use crate::termrep::Term;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GapMap<V> {
    entries: Vec<(Nat, V)>,
}

impl<V> Default for GapMap<V> {
    fn default() -> Self {
        GapMap { entries: Vec::new() }
    }
}

/// Reconstructs keys from gaps.
pub struct Keys<'a, V> {
    inner: std::slice::Iter<'a, (Nat, V)>,
    prev: Option<Nat>,
}

impl<'a, V> Iterator for Keys<'a, V> {
    type Item = (Nat, &'a V);

    fn next(&mut self) -> Option<Self::Item> {
        let (gap, v) = self.inner.next()?;
        let key = match &self.prev {
            None => gap.clone(),
            Some(p) => p + gap + 1u32,
        };
        self.prev = Some(key.clone());
        Some((key, v))
    }
}

impl<V> GapMap<V> {
    pub fn new() -> Self {
        Self::default()
    }

    /// Any sequence of `(gap, value)` pairs is a map.
    pub fn from_entries(entries: Vec<(Nat, V)>) -> Self {
        GapMap { entries }
    }

    pub fn entries(&self) -> &[(Nat, V)] {
        &self.entries
    }

    pub fn iter(&self) -> Keys<'_, V> {
        Keys {
            inner: self.entries.iter(),
            prev: None,
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn keys(&self) -> Vec<Nat> {
        self.iter().map(|(k, _)| k).collect()
    }

    pub fn lookup(&self, key: &Nat) -> Option<&V> {
        for (k, v) in self.iter() {
            match k.cmp(key) {
                Ordering::Less => continue,
                Ordering::Equal => return Some(v),
                Ordering::Greater => return None,
            }
        }
        None
    }

    pub fn contains_key(&self, key: &Nat) -> bool {
        self.lookup(key).is_some()
    }
}

impl<V: Clone> GapMap<V> {
    /// Builds a map from keyed pairs; a later pair wins over an earlier one
    /// with the same key.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (Nat, V)>) -> Self {
        let mut sorted: Vec<(Nat, V)> = Vec::new();
        for (k, v) in pairs {
            match sorted.binary_search_by(|(x, _)| x.cmp(&k)) {
                Ok(i) => sorted[i].1 = v,
                Err(i) => sorted.insert(i, (k, v)),
            }
        }
        Self::from_sorted(sorted)
    }

    fn from_sorted(pairs: Vec<(Nat, V)>) -> Self {
        let mut entries = Vec::with_capacity(pairs.len());
        let mut prev: Option<Nat> = None;
        for (k, v) in pairs {
            let gap = match &prev {
                None => k.clone(),
                Some(p) => &k - p - 1u32,
            };
            prev = Some(k);
            entries.push((gap, v));
        }
        GapMap { entries }
    }

    pub fn pairs(&self) -> Vec<(Nat, V)> {
        self.iter().map(|(k, v)| (k, v.clone())).collect()
    }

    /// The map with `key` bound to `value`, replacing any previous binding.
    pub fn insert(&self, key: Nat, value: V) -> Self {
        let mut pairs = self.pairs();
        match pairs.binary_search_by(|(k, _)| k.cmp(&key)) {
            Ok(i) => pairs[i].1 = value,
            Err(i) => pairs.insert(i, (key, value)),
        }
        Self::from_sorted(pairs)
    }

    pub fn remove(&self, key: &Nat) -> Self {
        let mut pairs = self.pairs();
        if let Ok(i) = pairs.binary_search_by(|(k, _)| k.cmp(key)) {
            pairs.remove(i);
        }
        Self::from_sorted(pairs)
    }
}

/// A finite set of naturals; the gap sequence is its canonical form.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GapSet(GapMap<()>);

impl GapSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Duplicates collapse.
    pub fn from_elements(xs: impl IntoIterator<Item = Nat>) -> Self {
        let mut v: Vec<Nat> = xs.into_iter().collect();
        v.sort();
        v.dedup();
        Self::from_sorted(v)
    }

    fn from_sorted(xs: Vec<Nat>) -> Self {
        GapSet(GapMap::from_sorted(xs.into_iter().map(|x| (x, ())).collect()))
    }

    /// Every gap sequence is a set.
    pub fn from_gaps(gaps: impl IntoIterator<Item = Nat>) -> Self {
        GapSet(GapMap::from_entries(gaps.into_iter().map(|g| (g, ())).collect()))
    }

    pub fn gaps(&self) -> Vec<Nat> {
        self.0.entries.iter().map(|(g, _)| g.clone()).collect()
    }

    pub fn as_map(&self) -> &GapMap<()> {
        &self.0
    }

    pub fn iter(&self) -> impl Iterator<Item = Nat> + '_ {
        self.0.iter().map(|(k, _)| k)
    }

    /// Sorted elements.
    pub fn elements(&self) -> Vec<Nat> {
        self.iter().collect()
    }

    pub fn size(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn member(&self, x: &Nat) -> bool {
        self.0.contains_key(x)
    }

    pub fn insert(&self, x: Nat) -> Self {
        GapSet(self.0.insert(x, ()))
    }

    pub fn remove(&self, x: &Nat) -> Self {
        GapSet(self.0.remove(x))
    }

    fn merge(&self, other: &GapSet, keep: fn(bool, bool) -> bool) -> GapSet {
        let out = Merge {
            a: self.iter().peekable(),
            b: other.iter().peekable(),
        }
        .filter(|(_, ina, inb)| keep(*ina, *inb))
        .map(|(x, _, _)| x)
        .collect();
        Self::from_sorted(out)
    }

    pub fn union(&self, other: &GapSet) -> GapSet {
        self.merge(other, |a, b| a || b)
    }

    pub fn intersection(&self, other: &GapSet) -> GapSet {
        self.merge(other, |a, b| a && b)
    }

    pub fn difference(&self, other: &GapSet) -> GapSet {
        self.merge(other, |a, b| a && !b)
    }

    pub fn is_subset(&self, other: &GapSet) -> bool {
        Merge {
            a: self.iter().peekable(),
            b: other.iter().peekable(),
        }
        .all(|(_, ina, inb)| !ina || inb)
    }

    /// Same as `==`: equal sets have equal gap sequences.
    pub fn set_equal(&self, other: &GapSet) -> bool {
        self == other
    }
}

/// Walks two ascending sequences together, tagging each element with its
/// membership in either side.
struct Merge<A: Iterator<Item = Nat>, B: Iterator<Item = Nat>> {
    a: Peekable<A>,
    b: Peekable<B>,
}

impl<A: Iterator<Item = Nat>, B: Iterator<Item = Nat>> Iterator for Merge<A, B> {
    type Item = (Nat, bool, bool);

    fn next(&mut self) -> Option<Self::Item> {
        match (self.a.peek(), self.b.peek()) {
            (None, None) => None,
            (Some(_), None) => self.a.next().map(|x| (x, true, false)),
            (None, Some(_)) => self.b.next().map(|x| (x, false, true)),
            (Some(x), Some(y)) => match x.cmp(y) {
                Ordering::Less => self.a.next().map(|x| (x, true, false)),
                Ordering::Greater => self.b.next().map(|x| (x, false, true)),
                Ordering::Equal => {
                    self.b.next();
                    self.a.next().map(|x| (x, true, true))
                }
            },
        }
    }
}

/// Prints the gap form, e.g. `[4,6,84]`.
impl fmt::Display for GapSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_list(f, '[', ']', self.0.entries.iter().map(|(g, _)| g))
    }
}

fn write_list<'a>(f: &mut fmt::Formatter<'_>, open: char, close: char, xs: impl Iterator<Item = &'a Nat>) -> fmt::Result {
    write!(f, "{open}")?;
    for (i, x) in xs.enumerate() {
        if i > 0 {
            write!(f, ",")?;
        }
        write!(f, "{x}")?;
    }
    write!(f, "{close}")
}

/// Shows the element form, e.g. `{4,11,96}`.
pub struct Elements<'a>(pub &'a GapSet);

impl fmt::Display for Elements<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let xs = self.0.elements();
        write_list(f, '{', '}', xs.iter())
    }
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
#[error("bad set literal `{0}`: expected `{{a,b,...}}` or `[g1,g2,...]`")]
pub struct SetLiteralError(String);

/// Parses `{4,11,96}` (elements) or `[4,6,84]` (gaps).
impl FromStr for GapSet {
    type Err = SetLiteralError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        let err = || SetLiteralError(s.to_string());
        let (open, body) = match (t.chars().next(), t.chars().last()) {
            (Some('{'), Some('}')) => ('{', &t[1..t.len() - 1]),
            (Some('['), Some(']')) => ('[', &t[1..t.len() - 1]),
            _ => return Err(err()),
        };
        let items: Vec<Nat> = if body.trim().is_empty() {
            vec![]
        } else {
            body.split(',')
                .map(|x| x.trim().parse::<Nat>().map_err(|_| err()))
                .collect::<Result<_, _>>()?
        };
        Ok(if open == '{' {
            GapSet::from_elements(items)
        } else {
            GapSet::from_gaps(items)
        })
    }
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum TermSetError {
    #[error(transparent)]
    Codec(#[from] CodecError),
    #[error("the collections range over different types or indices")]
    Mismatch,
}

/// A finite set of closed terms of one type and index, stored as the gap
/// set of their codes. Alpha-variants are the same element.
#[derive(Clone, Debug)]
pub struct TermSet<'p> {
    plan: &'p CodecPlan,
    ty: TypeId,
    index: IndexValue,
    inner: GapSet,
}

impl PartialEq for TermSet<'_> {
    fn eq(&self, other: &Self) -> bool {
        self.ty == other.ty && self.index == other.index && self.inner == other.inner
    }
}

impl<'p> TermSet<'p> {
    pub fn new(plan: &'p CodecPlan, ty: TypeId, index: IndexValue) -> Self {
        TermSet {
            plan,
            ty,
            index,
            inner: GapSet::new(),
        }
    }

    pub fn codes(&self) -> &GapSet {
        &self.inner
    }

    fn code(&self, t: &Term) -> Result<Nat, CodecError> {
        self.plan.encode_closed(self.ty, &self.index, t)
    }

    fn with(&self, inner: GapSet) -> Self {
        TermSet {
            inner,
            ..self.clone()
        }
    }

    fn same(&self, other: &Self) -> Result<(), TermSetError> {
        if self.ty == other.ty && self.index == other.index {
            Ok(())
        } else {
            Err(TermSetError::Mismatch)
        }
    }

    pub fn insert(&self, t: &Term) -> Result<Self, TermSetError> {
        Ok(self.with(self.inner.insert(self.code(t)?)))
    }

    pub fn remove(&self, t: &Term) -> Result<Self, TermSetError> {
        Ok(self.with(self.inner.remove(&self.code(t)?)))
    }

    /// Ill-typed terms are never members.
    pub fn member(&self, t: &Term) -> bool {
        self.code(t).is_ok_and(|c| self.inner.member(&c))
    }

    pub fn size(&self) -> usize {
        self.inner.size()
    }

    pub fn union(&self, other: &Self) -> Result<Self, TermSetError> {
        self.same(other)?;
        Ok(self.with(self.inner.union(&other.inner)))
    }

    pub fn intersection(&self, other: &Self) -> Result<Self, TermSetError> {
        self.same(other)?;
        Ok(self.with(self.inner.intersection(&other.inner)))
    }

    pub fn difference(&self, other: &Self) -> Result<Self, TermSetError> {
        self.same(other)?;
        Ok(self.with(self.inner.difference(&other.inner)))
    }

    pub fn is_subset(&self, other: &Self) -> Result<bool, TermSetError> {
        self.same(other)?;
        Ok(self.inner.is_subset(&other.inner))
    }

    /// Canonical members in code order.
    pub fn elements(&self) -> Result<Vec<Term>, TermSetError> {
        self.inner
            .iter()
            .map(|c| {
                self.plan
                    .decode_closed(self.ty, &self.index, &c, DEFAULT_FUEL)
                    .map_err(TermSetError::from)
            })
            .collect()
    }
}

/// A finite map from closed terms of one type and index to values.
#[derive(Clone, Debug)]
pub struct TermMap<'p, V> {
    plan: &'p CodecPlan,
    ty: TypeId,
    index: IndexValue,
    inner: GapMap<V>,
}

impl<'p, V: Clone> TermMap<'p, V> {
    pub fn new(plan: &'p CodecPlan, ty: TypeId, index: IndexValue) -> Self {
        TermMap {
            plan,
            ty,
            index,
            inner: GapMap::new(),
        }
    }

    pub fn codes(&self) -> &GapMap<V> {
        &self.inner
    }

    fn code(&self, t: &Term) -> Result<Nat, CodecError> {
        self.plan.encode_closed(self.ty, &self.index, t)
    }

    pub fn insert(&self, key: &Term, value: V) -> Result<Self, TermSetError> {
        let inner = self.inner.insert(self.code(key)?, value);
        Ok(TermMap {
            inner,
            ..self.clone()
        })
    }

    pub fn remove(&self, key: &Term) -> Result<Self, TermSetError> {
        let inner = self.inner.remove(&self.code(key)?);
        Ok(TermMap {
            inner,
            ..self.clone()
        })
    }

    pub fn lookup(&self, key: &Term) -> Option<&V> {
        self.code(key).ok().and_then(|c| self.inner.lookup(&c))
    }

    pub fn len(&self) -> usize {
        self.inner.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inner.is_empty()
    }

    pub fn keys(&self) -> Result<Vec<Term>, TermSetError> {
        self.inner
            .keys()
            .into_iter()
            .map(|c| {
                self.plan
                    .decode_closed(self.ty, &self.index, &c, DEFAULT_FUEL)
                    .map_err(TermSetError::from)
            })
            .collect()
    }
}
