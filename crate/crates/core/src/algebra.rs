//! Basic graph patterns and solution mappings.
//!
//! Wire form: a BGP is a JSON list of `[subject, predicate, object]` string
//! triples; constants use N-Triples syntax and variables are written `?name`.
//! Blank nodes in a query are non-distinguished variables and keep their
//! `_:label` spelling.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::store::{Lexer, Term, Token};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AlgebraError {
    #[error("invalid variable {0:?}")]
    InvalidVariable(String),
    #[error("invalid pattern term {text:?}: {message}")]
    InvalidTerm { text: String, message: String },
    #[error("line {line}: {message}")]
    InvalidPattern { line: usize, message: String },
    #[error("a basic graph pattern needs at least one triple pattern")]
    EmptyBgp,
    #[error("invalid BGP document: {0}")]
    Json(String),
}

/// A query variable.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Variable(String);

impl Variable {
    pub fn new(name: impl Into<String>) -> Result<Self, AlgebraError> {
        let name = name.into();
        let name = name.strip_prefix('?').map(str::to_owned).unwrap_or(name);
        if name.is_empty() || name.chars().any(char::is_whitespace) {
            return Err(AlgebraError::InvalidVariable(name));
        }
        Ok(Self(name))
    }

    /// A variable standing for a query blank node `_:label`.
    pub fn from_blank(label: &str) -> Result<Self, AlgebraError> {
        if label.is_empty() {
            return Err(AlgebraError::InvalidVariable(format!("_:{label}")));
        }
        Ok(Self(format!("_:{label}")))
    }

    pub fn name(&self) -> &str {
        &self.0
    }

    pub fn is_blank(&self) -> bool {
        self.0.starts_with("_:")
    }
}

impl FromStr for Variable {
    type Err = AlgebraError;

    /// Accepts `?name`, `$name`, bare `name`, or a blank node `_:label`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if let Some(label) = s.strip_prefix("_:") {
            return Self::from_blank(label);
        }
        Self::new(s.strip_prefix('$').unwrap_or(s))
    }
}

impl fmt::Display for Variable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_blank() {
            f.write_str(&self.0)
        } else {
            write!(f, "?{}", self.0)
        }
    }
}

/// One position of a triple pattern.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PatternTerm {
    Term(Term),
    Variable(Variable),
}

impl PatternTerm {
    pub fn var(name: &str) -> Self {
        PatternTerm::Variable(Variable::new(name).expect("valid variable name"))
    }

    pub fn as_variable(&self) -> Option<&Variable> {
        match self {
            PatternTerm::Variable(v) => Some(v),
            PatternTerm::Term(_) => None,
        }
    }

    pub fn as_term(&self) -> Option<&Term> {
        match self {
            PatternTerm::Term(t) => Some(t),
            PatternTerm::Variable(_) => None,
        }
    }

    fn from_token(token: Token) -> Result<Self, String> {
        match token {
            Token::Term(t) if t.is_blank() => {
                Ok(PatternTerm::Variable(Variable::from_blank(t.lexical()).map_err(|e| e.to_string())?))
            }
            Token::Term(t) => Ok(PatternTerm::Term(t)),
            Token::Variable(name) => Ok(PatternTerm::Variable(Variable::new(name).map_err(|e| e.to_string())?)),
            Token::Dot => Err("unexpected '.'".into()),
        }
    }
}

/// Blank nodes become variables, as in query text.
impl From<Term> for PatternTerm {
    fn from(t: Term) -> Self {
        if t.is_blank() {
            PatternTerm::Variable(Variable::from_blank(t.lexical()).expect("blank labels are non-empty"))
        } else {
            PatternTerm::Term(t)
        }
    }
}

impl From<Variable> for PatternTerm {
    fn from(v: Variable) -> Self {
        PatternTerm::Variable(v)
    }
}

impl FromStr for PatternTerm {
    type Err = AlgebraError;

    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let invalid = |message: String| AlgebraError::InvalidTerm { text: text.to_owned(), message };
        let mut lexer = Lexer::new(text, true);
        let token = lexer.next_token().map_err(invalid)?.ok_or_else(|| invalid("empty".into()))?;
        if !lexer.at_end() {
            return Err(invalid("trailing content".into()));
        }
        PatternTerm::from_token(token).map_err(invalid)
    }
}

impl fmt::Display for PatternTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PatternTerm::Term(t) => t.fmt(f),
            PatternTerm::Variable(v) => v.fmt(f),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TriplePattern {
    pub subject: PatternTerm,
    pub predicate: PatternTerm,
    pub object: PatternTerm,
}

impl TriplePattern {
    pub fn new(subject: PatternTerm, predicate: PatternTerm, object: PatternTerm) -> Self {
        Self { subject, predicate, object }
    }

    pub fn positions(&self) -> [&PatternTerm; 3] {
        [&self.subject, &self.predicate, &self.object]
    }

    /// Distinct variables in subject, predicate, object order.
    pub fn variables(&self) -> Vec<&Variable> {
        let mut out: Vec<&Variable> = Vec::with_capacity(3);
        for v in self.positions().into_iter().filter_map(PatternTerm::as_variable) {
            if !out.contains(&v) {
                out.push(v);
            }
        }
        out
    }

    pub fn is_fully_bound(&self) -> bool {
        self.positions().iter().all(|p| p.as_term().is_some())
    }

    /// The bound pattern `mu[tp]`.
    pub fn bind(&self, mu: &SolutionMapping) -> TriplePattern {
        let sub = |p: &PatternTerm| match p {
            PatternTerm::Variable(v) => mu.get(v).map_or_else(|| p.clone(), |t| PatternTerm::Term(t.clone())),
            PatternTerm::Term(_) => p.clone(),
        };
        TriplePattern::new(sub(&self.subject), sub(&self.predicate), sub(&self.object))
    }
}

impl fmt::Display for TriplePattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.subject, self.predicate, self.object)
    }
}

impl Serialize for TriplePattern {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        [self.subject.to_string(), self.predicate.to_string(), self.object.to_string()].serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for TriplePattern {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let [s, p, o] = <[String; 3]>::deserialize(deserializer)?;
        let parse = |x: &str| x.parse::<PatternTerm>().map_err(D::Error::custom);
        Ok(TriplePattern::new(parse(&s)?, parse(&p)?, parse(&o)?))
    }
}

/// A basic graph pattern: a non-empty conjunction of triple patterns.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Bgp {
    patterns: Vec<TriplePattern>,
}

impl Bgp {
    pub fn new(patterns: Vec<TriplePattern>) -> Result<Self, AlgebraError> {
        if patterns.is_empty() {
            return Err(AlgebraError::EmptyBgp);
        }
        Ok(Self { patterns })
    }

    pub fn patterns(&self) -> &[TriplePattern] {
        &self.patterns
    }

    pub fn len(&self) -> usize {
        self.patterns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patterns.is_empty()
    }

    /// Distinct variables in order of first appearance.
    pub fn variables(&self) -> Vec<&Variable> {
        let mut seen = BTreeSet::new();
        self.patterns.iter().flat_map(TriplePattern::variables).filter(|v| seen.insert(*v)).collect()
    }

    /// Parses either a JSON list of term triples or one `s p o .` pattern per line.
    pub fn parse(text: &str) -> Result<Self, AlgebraError> {
        if text.trim_start().starts_with('[') {
            return serde_json::from_str(text).map_err(|e| AlgebraError::Json(e.to_string()));
        }
        let mut patterns = Vec::new();
        for (index, line) in text.lines().enumerate() {
            let err = |message: String| AlgebraError::InvalidPattern { line: index + 1, message };
            let mut lexer = Lexer::new(line, true);
            let mut positions = Vec::with_capacity(3);
            while let Some(token) = lexer.next_token().map_err(err)? {
                if token == Token::Dot {
                    break;
                }
                positions.push(PatternTerm::from_token(token).map_err(err)?);
            }
            if !lexer.at_end() {
                return Err(err("trailing content after '.'".into()));
            }
            match positions.len() {
                0 => continue,
                3 => {
                    let mut it = positions.into_iter();
                    let (s, p, o) = (it.next().unwrap(), it.next().unwrap(), it.next().unwrap());
                    patterns.push(TriplePattern::new(s, p, o));
                }
                n => return Err(err(format!("expected 3 pattern positions, found {n}"))),
            }
        }
        Bgp::new(patterns)
    }
}

impl Serialize for Bgp {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.patterns.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Bgp {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        Bgp::new(Vec::deserialize(deserializer)?).map_err(D::Error::custom)
    }
}

/// A partial mapping from variables to terms.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SolutionMapping {
    bindings: BTreeMap<Variable, Term>,
}

impl SolutionMapping {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, v: &Variable) -> Option<&Term> {
        self.bindings.get(v)
    }

    pub fn len(&self) -> usize {
        self.bindings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bindings.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Variable, &Term)> {
        self.bindings.iter()
    }

    pub fn variables(&self) -> impl Iterator<Item = &Variable> {
        self.bindings.keys()
    }

    /// Binds `v` to `t`. Returns false, leaving the mapping unchanged, if `v`
    /// is already bound to a different term.
    pub fn bind(&mut self, v: Variable, t: Term) -> bool {
        match self.bindings.get(&v) {
            Some(existing) => *existing == t,
            None => {
                self.bindings.insert(v, t);
                true
            }
        }
    }

    /// Extends with the bindings that make `tp` equal to `triple`, or `None`
    /// when the triple does not match the bound pattern.
    pub fn try_extend(&self, tp: &TriplePattern, triple: [&Term; 3]) -> Option<SolutionMapping> {
        let mut out = self.clone();
        for (position, value) in tp.positions().into_iter().zip(triple) {
            let ok = match position {
                PatternTerm::Term(t) => t == value,
                PatternTerm::Variable(v) => out.bind(v.clone(), value.clone()),
            };
            if !ok {
                return None;
            }
        }
        Some(out)
    }
}

impl FromIterator<(Variable, Term)> for SolutionMapping {
    fn from_iter<I: IntoIterator<Item = (Variable, Term)>>(iter: I) -> Self {
        Self { bindings: iter.into_iter().collect() }
    }
}

impl Serialize for SolutionMapping {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_map(self.bindings.iter().map(|(v, t)| (v.to_string(), t.to_string())))
    }
}

impl<'de> Deserialize<'de> for SolutionMapping {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = BTreeMap::<String, String>::deserialize(deserializer)?;
        raw.into_iter()
            .map(|(v, t)| {
                if !(v.starts_with('?') || v.starts_with("_:")) {
                    return Err(D::Error::custom(format!("mapping key {v:?} is not a variable")));
                }
                let v = v.parse::<Variable>().map_err(D::Error::custom)?;
                let t = Term::parse(&t).map_err(D::Error::custom)?;
                Ok((v, t))
            })
            .collect()
    }
}

/// `mu[tp]`: substitutes every variable of `tp` bound in `mu`.
pub fn apply_mapping(mu: &SolutionMapping, tp: &TriplePattern) -> TriplePattern {
    tp.bind(mu)
}

/// Extends `mu` with the bindings of `tp`'s free variables taken from `triple`.
///
/// `triple` must match `apply_mapping(mu, tp)`; violating that is a logic error
/// caught by a debug assertion (release builds keep `mu`'s bindings).
pub fn extend_mapping(mu: &SolutionMapping, tp: &TriplePattern, triple: [&Term; 3]) -> SolutionMapping {
    match mu.try_extend(tp, triple) {
        Some(out) => out,
        None => {
            debug_assert!(false, "triple {triple:?} does not match {}", tp.bind(mu));
            mu.clone()
        }
    }
}
