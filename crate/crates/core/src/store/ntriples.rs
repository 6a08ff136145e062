//! Line-oriented N-Triples reader.
//!
//! Literals are normalized on read: escapes are decoded and re-encoded with the
//! minimal escape set, so `"\u0041"` and `"A"` load as the same term.

use std::io::BufRead;

use super::term::{quote, Term, TermKind};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ParseError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: {source}")]
    Io {
        line: usize,
        #[source]
        source: IoError,
    },
}

/// Cloneable wrapper so [`ParseError`] can stay `Clone + Eq`.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{0}")]
pub struct IoError(pub String);

impl ParseError {
    pub fn line(&self) -> usize {
        match self {
            ParseError::Syntax { line, .. } | ParseError::Io { line, .. } => *line,
        }
    }
}

/// A token of a triple or triple-pattern line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum Token {
    Term(Term),
    /// Variable name without the leading `?` or `$`.
    Variable(String),
    Dot,
}

pub(crate) struct Lexer<'a> {
    text: &'a str,
    pos: usize,
    allow_variables: bool,
}

impl<'a> Lexer<'a> {
    pub(crate) fn new(text: &'a str, allow_variables: bool) -> Self {
        Self { text, pos: 0, allow_variables }
    }

    fn rest(&self) -> &'a str {
        &self.text[self.pos..]
    }

    fn peek(&self) -> Option<char> {
        self.rest().chars().next()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        Some(c)
    }

    fn skip_ws(&mut self) {
        while let Some(c) = self.peek() {
            if c == ' ' || c == '\t' || c == '\r' || c == '\n' {
                self.bump();
            } else if c == '#' {
                self.pos = self.text.len();
            } else {
                break;
            }
        }
    }

    pub(crate) fn at_end(&mut self) -> bool {
        self.skip_ws();
        self.pos >= self.text.len()
    }

    pub(crate) fn next_token(&mut self) -> Result<Option<Token>, String> {
        self.skip_ws();
        let Some(c) = self.peek() else { return Ok(None) };
        let token = match c {
            '<' => Token::Term(Term::from_parts(TermKind::Iri, self.iri()?)),
            '_' => Token::Term(self.blank()?),
            '"' => Token::Term(self.literal()?),
            '.' => {
                self.bump();
                Token::Dot
            }
            '?' | '$' if self.allow_variables => {
                self.bump();
                let name = self.name();
                if name.is_empty() {
                    return Err("empty variable name".into());
                }
                Token::Variable(name)
            }
            other => return Err(format!("unexpected character {other:?}")),
        };
        Ok(Some(token))
    }

    fn name(&mut self) -> String {
        let start = self.pos;
        while let Some(c) = self.peek() {
            if c.is_alphanumeric() || c == '_' || c == '-' || c == '.' {
                self.bump();
            } else {
                break;
            }
        }
        // A trailing '.' terminates the statement rather than belonging to the name.
        let mut end = self.pos;
        while end > start && self.text[start..end].ends_with('.') {
            end -= 1;
        }
        self.pos = end;
        self.text[start..end].to_owned()
    }

    fn iri(&mut self) -> Result<String, String> {
        self.bump();
        let mut out = String::new();
        loop {
            match self.bump() {
                None => return Err("unterminated IRI".into()),
                Some('>') => break,
                Some('\\') => out.push(self.uchar()?),
                Some(c)
                    if c == ' ' || c == '<' || c == '"' || c == '{' || c == '}' || c == '|' || c == '^' || c == '`' =>
                {
                    return Err(format!("invalid character {c:?} in IRI"))
                }
                Some(c) if (c as u32) <= 0x20 => return Err("control character in IRI".into()),
                Some(c) => out.push(c),
            }
        }
        if out.is_empty() {
            return Err("empty IRI".into());
        }
        Ok(out)
    }

    fn blank(&mut self) -> Result<Term, String> {
        self.bump();
        if self.bump() != Some(':') {
            return Err("expected ':' after '_' in blank node".into());
        }
        let label = self.name();
        if label.is_empty() {
            return Err("empty blank node label".into());
        }
        Ok(Term::from_parts(TermKind::BlankNode, label))
    }

    fn literal(&mut self) -> Result<Term, String> {
        self.bump();
        let mut value = String::new();
        loop {
            match self.bump() {
                None => return Err("unterminated literal".into()),
                Some('"') => break,
                Some('\\') => {
                    let c = match self.peek() {
                        Some('t') => '\t',
                        Some('b') => '\u{8}',
                        Some('n') => '\n',
                        Some('r') => '\r',
                        Some('f') => '\u{c}',
                        Some('"') => '"',
                        Some('\'') => '\'',
                        Some('\\') => '\\',
                        Some('u') | Some('U') => {
                            value.push(self.uchar()?);
                            continue;
                        }
                        _ => return Err("invalid escape in literal".into()),
                    };
                    self.bump();
                    value.push(c);
                }
                Some('\n') | Some('\r') => return Err("line break in literal".into()),
                Some(c) => value.push(c),
            }
        }
        let mut lexical = quote(&value);
        match self.peek() {
            Some('@') => {
                self.bump();
                let start = self.pos;
                while let Some(c) = self.peek() {
                    if c.is_ascii_alphanumeric() || c == '-' {
                        self.bump();
                    } else {
                        break;
                    }
                }
                let lang = &self.text[start..self.pos];
                Term::lang_literal(&value, lang).map_err(|e| e.to_string())?;
                lexical.push('@');
                lexical.push_str(lang);
            }
            Some('^') => {
                self.bump();
                if self.bump() != Some('^') || self.peek() != Some('<') {
                    return Err("expected ^^<datatype>".into());
                }
                let datatype = self.iri()?;
                lexical.push_str("^^<");
                lexical.push_str(&datatype);
                lexical.push('>');
            }
            _ => {}
        }
        Ok(Term::from_parts(TermKind::Literal, lexical))
    }

    /// Reads `uXXXX` or `UXXXXXXXX` after a backslash.
    fn uchar(&mut self) -> Result<char, String> {
        let width = match self.bump() {
            Some('u') => 4,
            Some('U') => 8,
            _ => return Err("invalid escape".into()),
        };
        let rest = self.rest();
        let hex = rest.get(..width).ok_or("truncated unicode escape")?;
        let code = u32::from_str_radix(hex, 16).map_err(|_| "invalid unicode escape")?;
        self.pos += width;
        char::from_u32(code).ok_or_else(|| "invalid code point".into())
    }
}

/// Parses one N-Triples line; blank and comment-only lines yield `None`.
pub fn parse_line(line: &str) -> Result<Option<[Term; 3]>, String> {
    let mut lexer = Lexer::new(line, false);
    if lexer.at_end() {
        return Ok(None);
    }
    let mut terms = Vec::with_capacity(3);
    for position in ["subject", "predicate", "object"] {
        match lexer.next_token()? {
            Some(Token::Term(t)) => terms.push(t),
            _ => return Err(format!("expected {position}")),
        }
    }
    if lexer.next_token()? != Some(Token::Dot) {
        return Err("expected '.' at end of triple".into());
    }
    if !lexer.at_end() {
        return Err("trailing content after '.'".into());
    }
    let [s, p, o]: [Term; 3] = terms.try_into().expect("three terms");
    if s.is_literal() {
        return Err("literal in subject position".into());
    }
    if !p.is_iri() {
        return Err("predicate must be an IRI".into());
    }
    Ok(Some([s, p, o]))
}

/// Parses a single term in N-Triples syntax.
pub fn parse_term(text: &str) -> Result<Term, ParseError> {
    let err = |message: String| ParseError::Syntax { line: 1, message };
    let mut lexer = Lexer::new(text, false);
    let term = match lexer.next_token().map_err(err)? {
        Some(Token::Term(t)) => t,
        _ => return Err(err(format!("expected an RDF term, found {text:?}"))),
    };
    if !lexer.at_end() {
        return Err(err(format!("trailing content after term in {text:?}")));
    }
    Ok(term)
}

/// Reads every triple of an N-Triples document, reporting 1-based line numbers.
pub fn read_triples(source: impl BufRead) -> Result<Vec<[Term; 3]>, ParseError> {
    let mut out = Vec::new();
    for (index, line) in source.lines().enumerate() {
        let line_no = index + 1;
        let line = line.map_err(|e| ParseError::Io { line: line_no, source: IoError(e.to_string()) })?;
        if let Some(triple) = parse_line(&line).map_err(|message| ParseError::Syntax { line: line_no, message })? {
            out.push(triple);
        }
    }
    Ok(out)
}
