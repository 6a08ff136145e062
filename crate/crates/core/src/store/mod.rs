//! Immutable dictionary-encoded triple store.
//!
//! Triples are kept in three sorted permutations (SPO, POS, OSP). Every
//! combination of bound positions is a key prefix of one of them, so a pattern
//! maps to one contiguous index range: locating it is a binary search and
//! resuming a scan at any offset is a slice index.

mod ntriples;
mod term;

use std::collections::{BTreeSet, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::algebra::{PatternTerm, TriplePattern};

pub use ntriples::{parse_line, read_triples, IoError, ParseError};
pub(crate) use ntriples::{Lexer, Token};
pub use term::{Term, TermError, TermId, TermKind};

/// A dictionary-encoded triple.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Triple {
    pub subject: TermId,
    pub predicate: TermId,
    pub object: TermId,
}

impl Triple {
    pub fn new(subject: TermId, predicate: TermId, object: TermId) -> Self {
        Self { subject, predicate, object }
    }

    pub fn as_array(&self) -> [TermId; 3] {
        [self.subject, self.predicate, self.object]
    }
}

/// A pattern over dictionary ids; `None` positions are wildcards.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct IdPattern {
    pub subject: Option<TermId>,
    pub predicate: Option<TermId>,
    pub object: Option<TermId>,
}

impl IdPattern {
    pub fn new(subject: Option<TermId>, predicate: Option<TermId>, object: Option<TermId>) -> Self {
        Self { subject, predicate, object }
    }

    pub fn matches(&self, t: &Triple) -> bool {
        self.subject.is_none_or(|s| s == t.subject)
            && self.predicate.is_none_or(|p| p == t.predicate)
            && self.object.is_none_or(|o| o == t.object)
    }
}

/// The three triple orderings maintained by a [`Dataset`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IndexOrder {
    Spo,
    Pos,
    Osp,
}

impl IndexOrder {
    /// Picks the index whose key prefix covers exactly the bound positions.
    pub fn for_pattern(pattern: &IdPattern) -> Self {
        match (pattern.subject.is_some(), pattern.predicate.is_some(), pattern.object.is_some()) {
            (true, false, true) => IndexOrder::Osp,
            (true, _, _) | (false, false, false) => IndexOrder::Spo,
            (false, true, _) => IndexOrder::Pos,
            (false, false, true) => IndexOrder::Osp,
        }
    }

    fn encode(self, t: Triple) -> [TermId; 3] {
        match self {
            IndexOrder::Spo => [t.subject, t.predicate, t.object],
            IndexOrder::Pos => [t.predicate, t.object, t.subject],
            IndexOrder::Osp => [t.object, t.subject, t.predicate],
        }
    }

    fn decode(self, key: [TermId; 3]) -> Triple {
        match self {
            IndexOrder::Spo => Triple::new(key[0], key[1], key[2]),
            IndexOrder::Pos => Triple::new(key[2], key[0], key[1]),
            IndexOrder::Osp => Triple::new(key[1], key[2], key[0]),
        }
    }

    /// Bound components of `pattern` in this index's key order.
    fn prefix(self, pattern: &IdPattern) -> Vec<TermId> {
        let ordered = match self {
            IndexOrder::Spo => [pattern.subject, pattern.predicate, pattern.object],
            IndexOrder::Pos => [pattern.predicate, pattern.object, pattern.subject],
            IndexOrder::Osp => [pattern.object, pattern.subject, pattern.predicate],
        };
        let prefix: Vec<TermId> = ordered.iter().map_while(|c| *c).collect();
        debug_assert_eq!(prefix.len(), ordered.iter().flatten().count(), "bound positions must form a key prefix");
        prefix
    }
}

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("cannot read {path}: {source}")]
    Open {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Parse(#[from] ParseError),
}

/// An immutable RDF graph.
#[derive(Debug)]
pub struct Dataset {
    terms: Vec<Term>,
    ids: HashMap<Term, TermId>,
    spo: Vec<[TermId; 3]>,
    pos: Vec<[TermId; 3]>,
    osp: Vec<[TermId; 3]>,
    digest: String,
}

impl Dataset {
    /// Builds a dataset from decoded triples; duplicates are stored once.
    pub fn from_triples<I>(triples: I) -> Self
    where
        I: IntoIterator<Item = [Term; 3]>,
    {
        let triples: Vec<[Term; 3]> = triples.into_iter().collect();
        let vocabulary: BTreeSet<&Term> = triples.iter().flatten().collect();
        let terms: Vec<Term> = vocabulary.into_iter().cloned().collect();
        let ids: HashMap<Term, TermId> = terms.iter().enumerate().map(|(i, t)| (t.clone(), TermId(i as u32))).collect();

        let mut spo: Vec<[TermId; 3]> = triples.iter().map(|[s, p, o]| [ids[s], ids[p], ids[o]]).collect();
        spo.sort_unstable();
        spo.dedup();
        let mut pos: Vec<[TermId; 3]> =
            spo.iter().map(|k| IndexOrder::Pos.encode(IndexOrder::Spo.decode(*k))).collect();
        pos.sort_unstable();
        let mut osp: Vec<[TermId; 3]> =
            spo.iter().map(|k| IndexOrder::Osp.encode(IndexOrder::Spo.decode(*k))).collect();
        osp.sort_unstable();

        let mut hasher = Sha256::new();
        for [s, p, o] in &spo {
            let line = format!("{} {} {} .\n", terms[s.0 as usize], terms[p.0 as usize], terms[o.0 as usize]);
            hasher.update(line.as_bytes());
        }
        let digest = hex::encode(hasher.finalize());

        Self { terms, ids, spo, pos, osp, digest }
    }

    /// Loads an N-Triples document.
    pub fn load_ntriples(source: impl BufRead) -> Result<Self, StoreError> {
        Ok(Self::from_triples(read_triples(source)?))
    }

    pub fn load_path(path: impl AsRef<Path>) -> Result<Self, StoreError> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|source| StoreError::Open { path: path.display().to_string(), source })?;
        Self::load_ntriples(BufReader::new(file))
    }

    pub fn triple_count(&self) -> usize {
        self.spo.len()
    }

    pub fn term_count(&self) -> usize {
        self.terms.len()
    }

    /// Lowercase hex SHA-256 of the canonical (sorted, deduplicated) content.
    pub fn digest(&self) -> &str {
        &self.digest
    }

    pub fn id_of(&self, term: &Term) -> Option<TermId> {
        self.ids.get(term).copied()
    }

    pub fn term(&self, id: TermId) -> &Term {
        &self.terms[id.0 as usize]
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    /// All triples in SPO order.
    pub fn triples(&self) -> impl ExactSizeIterator<Item = Triple> + '_ {
        self.spo.iter().map(|k| IndexOrder::Spo.decode(*k))
    }

    pub fn decode(&self, t: Triple) -> [&Term; 3] {
        [self.term(t.subject), self.term(t.predicate), self.term(t.object)]
    }

    /// Resolves a triple pattern to ids. Returns `None` when a constant is not
    /// in the dictionary, in which case the pattern has no matches.
    pub fn resolve(&self, pattern: &TriplePattern) -> Option<IdPattern> {
        let resolve = |p: &PatternTerm| match p {
            PatternTerm::Term(t) => self.id_of(t).map(Some),
            PatternTerm::Variable(_) => Some(None),
        };
        Some(IdPattern::new(resolve(&pattern.subject)?, resolve(&pattern.predicate)?, resolve(&pattern.object)?))
    }

    /// The contiguous index range holding every triple that matches `pattern`.
    pub fn range(&self, pattern: &IdPattern) -> TripleRange<'_> {
        let order = IndexOrder::for_pattern(pattern);
        let index = self.scan_index(order).keys.as_slice();
        let prefix = order.prefix(pattern);
        let n = prefix.len();
        let start = index.partition_point(|k| k[..n] < prefix[..]);
        let end = start + index[start..].partition_point(|k| k[..n] == prefix[..]);
        TripleRange { order, keys: &index[start..end] }
    }

    /// Every triple, in the order of one index.
    pub fn scan_index(&self, order: IndexOrder) -> Scan<'_> {
        let keys = match order {
            IndexOrder::Spo => &self.spo,
            IndexOrder::Pos => &self.pos,
            IndexOrder::Osp => &self.osp,
        };
        Scan { order, keys: keys.iter() }
    }

    /// Matching triples in index order, skipping the first `offset`.
    pub fn scan(&self, pattern: &IdPattern, offset: usize) -> Scan<'_> {
        self.range(pattern).scan_from(offset)
    }

    /// Matching triples of a term-level pattern, skipping the first `offset`.
    /// Patterns naming unknown terms yield nothing. A variable repeated inside the
    /// pattern is treated as two independent wildcards here; joins enforce it.
    pub fn match_pattern(&self, pattern: &TriplePattern, offset: usize) -> Scan<'_> {
        match self.resolve(pattern) {
            Some(ids) => self.scan(&ids, offset),
            None => Scan::empty(),
        }
    }

    pub fn cardinality(&self, pattern: &TriplePattern) -> usize {
        self.resolve(pattern).map_or(0, |ids| self.range(&ids).len())
    }
}

/// A sorted run of index keys matching one pattern.
#[derive(Debug, Clone, Copy)]
pub struct TripleRange<'a> {
    order: IndexOrder,
    keys: &'a [[TermId; 3]],
}

impl<'a> TripleRange<'a> {
    pub fn empty() -> Self {
        Self { order: IndexOrder::Spo, keys: &[] }
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    pub fn order(&self) -> IndexOrder {
        self.order
    }

    pub fn get(&self, position: usize) -> Option<Triple> {
        self.keys.get(position).map(|k| self.order.decode(*k))
    }

    pub fn scan_from(&self, offset: usize) -> Scan<'a> {
        let keys = self.keys.get(offset..).unwrap_or(&[]);
        Scan { order: self.order, keys: keys.iter() }
    }
}

/// Iterator over the triples of a [`TripleRange`].
#[derive(Debug, Clone)]
pub struct Scan<'a> {
    order: IndexOrder,
    keys: std::slice::Iter<'a, [TermId; 3]>,
}

impl Scan<'_> {
    fn empty() -> Self {
        Self { order: IndexOrder::Spo, keys: [].iter() }
    }
}

impl Iterator for Scan<'_> {
    type Item = Triple;

    fn next(&mut self) -> Option<Triple> {
        self.keys.next().map(|k| self.order.decode(*k))
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        self.keys.size_hint()
    }
}

impl ExactSizeIterator for Scan<'_> {}
