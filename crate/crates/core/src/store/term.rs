use std::fmt;

use crate::store::ntriples::{self, ParseError};

/// Kind of an RDF term. The declaration order is the dictionary order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TermKind {
    Iri,
    Literal,
    BlankNode,
}

/// An RDF term.
///
/// `lexical` holds the IRI without angle brackets, the blank node label without
/// `_:`, or for literals the complete canonical N-Triples literal (quoted value
/// plus optional `@lang` or `^^<datatype>` suffix).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Term {
    kind: TermKind,
    lexical: String,
}

/// Dense dictionary identifier of a [`Term`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TermId(pub u32);

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TermError {
    #[error("IRI must not be empty")]
    EmptyIri,
    #[error("blank node label must not be empty")]
    EmptyBlankLabel,
    #[error("invalid language tag {0:?}")]
    InvalidLanguage(String),
}

impl Term {
    pub fn iri(iri: impl Into<String>) -> Result<Self, TermError> {
        let lexical = iri.into();
        if lexical.is_empty() {
            return Err(TermError::EmptyIri);
        }
        Ok(Self { kind: TermKind::Iri, lexical })
    }

    pub fn blank(label: impl Into<String>) -> Result<Self, TermError> {
        let lexical = label.into();
        if lexical.is_empty() {
            return Err(TermError::EmptyBlankLabel);
        }
        Ok(Self { kind: TermKind::BlankNode, lexical })
    }

    /// Plain string literal.
    pub fn literal(value: &str) -> Self {
        Self { kind: TermKind::Literal, lexical: quote(value) }
    }

    pub fn lang_literal(value: &str, lang: &str) -> Result<Self, TermError> {
        let valid = !lang.is_empty()
            && lang.split('-').all(|p| !p.is_empty() && p.chars().all(|c| c.is_ascii_alphanumeric()))
            && lang.chars().next().is_some_and(|c| c.is_ascii_alphabetic());
        if !valid {
            return Err(TermError::InvalidLanguage(lang.to_owned()));
        }
        Ok(Self { kind: TermKind::Literal, lexical: format!("{}@{}", quote(value), lang) })
    }

    pub fn typed_literal(value: &str, datatype: &str) -> Result<Self, TermError> {
        if datatype.is_empty() {
            return Err(TermError::EmptyIri);
        }
        Ok(Self { kind: TermKind::Literal, lexical: format!("{}^^<{}>", quote(value), datatype) })
    }

    /// Parses a single term written in N-Triples syntax.
    pub fn parse(text: &str) -> Result<Self, ParseError> {
        ntriples::parse_term(text)
    }

    pub(crate) fn from_parts(kind: TermKind, lexical: String) -> Self {
        Self { kind, lexical }
    }

    pub fn kind(&self) -> TermKind {
        self.kind
    }

    pub fn lexical(&self) -> &str {
        &self.lexical
    }

    pub fn is_iri(&self) -> bool {
        self.kind == TermKind::Iri
    }

    pub fn is_literal(&self) -> bool {
        self.kind == TermKind::Literal
    }

    pub fn is_blank(&self) -> bool {
        self.kind == TermKind::BlankNode
    }

    /// Length in bytes of the N-Triples rendering.
    pub fn ntriples_len(&self) -> usize {
        match self.kind {
            TermKind::Iri => self.lexical.len() + 2,
            TermKind::BlankNode => self.lexical.len() + 2,
            TermKind::Literal => self.lexical.len(),
        }
    }
}

/// Writes the term in N-Triples syntax.
impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            TermKind::Iri => write!(f, "<{}>", self.lexical),
            TermKind::BlankNode => write!(f, "_:{}", self.lexical),
            TermKind::Literal => f.write_str(&self.lexical),
        }
    }
}

pub(crate) fn quote(value: &str) -> String {
    let mut out = String::with_capacity(value.len() + 2);
    out.push('"');
    for c in value.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}
