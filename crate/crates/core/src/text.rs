//! Token quoting shared by the ARFF reader/writer and the model file format.
//!
//! A value is written bare unless it is empty, equals `?`, or contains
//! whitespace, a control character, or one of `, ' " % { } \`. Quoted values
//! use single quotes; inside them `\\`, `\'`, `\n`, `\r` and `\t` are escaped.
//! The reader also accepts double-quoted values with the same escapes.

use std::borrow::Cow;
use std::fmt;

const SPECIAL: &[char] = &[',', '\'', '"', '%', '{', '}', '\\'];

fn needs_quotes(s: &str) -> bool {
    s.is_empty()
        || s == "?"
        || s
            .chars()
            .any(|c| c.is_whitespace() || c.is_control() || SPECIAL.contains(&c))
}

/// Quote `s` if it cannot be written as a bare token.
pub fn quote(s: &str) -> Cow<'_, str> {
    if !needs_quotes(s) {
        return Cow::Borrowed(s);
    }
    let mut out = String::with_capacity(s.len() + 2);
    out.push('\'');
    for c in s.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '\'' => out.push_str("\\'"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            _ => out.push(c),
        }
    }
    out.push('\'');
    Cow::Owned(out)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub text: String,
    pub quoted: bool,
}

impl Token {
    /// A bare `?`, the missing-value marker.
    pub fn is_missing(&self) -> bool {
        !self.quoted && self.text == "?"
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LexError {
    pub column: usize,
    pub reason: String,
}

impl fmt::Display for LexError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "column {}: {}", self.column, self.reason)
    }
}

/// Character cursor over a single line.
pub struct Lexer<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Lexer<'a> {
    pub fn new(src: &'a str) -> Self {
        Self { src, pos: 0 }
    }

    pub fn column(&self) -> usize {
        self.src[..self.pos].chars().count() + 1
    }

    pub fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    pub fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        Some(c)
    }

    pub fn skip_ws(&mut self) {
        while matches!(self.peek(), Some(c) if c.is_whitespace()) {
            self.bump();
        }
    }

    /// True when only whitespace or a `%` comment remains.
    pub fn at_end(&mut self) -> bool {
        self.skip_ws();
        matches!(self.peek(), None | Some('%'))
    }

    pub fn rest(&self) -> &'a str {
        &self.src[self.pos..]
    }

    pub fn error(&self, reason: impl Into<String>) -> LexError {
        LexError {
            column: self.column(),
            reason: reason.into(),
        }
    }

    /// Read one token. Bare tokens end at whitespace or any char in `stops`.
    pub fn token(&mut self, stops: &[char]) -> Result<Token, LexError> {
        self.skip_ws();
        match self.peek() {
            None => Err(self.error("expected a value")),
            Some(q @ ('\'' | '"')) => {
                self.bump();
                let mut text = String::new();
                loop {
                    match self.bump() {
                        None => return Err(self.error("unterminated quoted value")),
                        Some('\\') => match self.bump() {
                            Some('n') => text.push('\n'),
                            Some('r') => text.push('\r'),
                            Some('t') => text.push('\t'),
                            Some(c) => text.push(c),
                            None => return Err(self.error("dangling escape")),
                        },
                        Some(c) if c == q => break,
                        Some(c) => text.push(c),
                    }
                }
                Ok(Token { text, quoted: true })
            }
            Some(_) => {
                let start = self.pos;
                while let Some(c) = self.peek() {
                    if c.is_whitespace() || stops.contains(&c) {
                        break;
                    }
                    self.bump();
                }
                if self.pos == start {
                    return Err(self.error("expected a value"));
                }
                Ok(Token {
                    text: self.src[start..self.pos].to_string(),
                    quoted: false,
                })
            }
        }
    }
}

/// Split a line into whitespace-separated, possibly quoted, tokens.
pub fn words(line: &str) -> Result<Vec<Token>, LexError> {
    let mut lexer = Lexer::new(line);
    let mut out = Vec::new();
    loop {
        lexer.skip_ws();
        if lexer.peek().is_none() {
            return Ok(out);
        }
        out.push(lexer.token(&[])?);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bare_values_stay_bare() {
        assert_eq!(quote("TCP"), "TCP");
        assert_eq!(quote("172.21.2.156"), "172.21.2.156");
        assert_eq!(quote("TLSv1.2"), "TLSv1.2");
    }

    #[test]
    fn special_values_are_quoted() {
        assert_eq!(quote(""), "''");
        assert_eq!(quote("?"), "'?'");
        assert_eq!(quote("a b"), "'a b'");
        assert_eq!(quote("it's"), r"'it\'s'");
        assert_eq!(quote("a\\b\nc"), r"'a\\b\nc'");
        assert_eq!(quote("Payload (Encrypted), PK0: 13"), "'Payload (Encrypted), PK0: 13'");
    }

    #[test]
    fn words_reads_back_quoted_tokens() {
        let line = format!("label {} {} ?", quote("a b"), quote("?"));
        let toks = words(&line).unwrap();
        assert_eq!(toks.len(), 4);
        assert_eq!(toks[1].text, "a b");
        assert!(!toks[2].is_missing());
        assert!(toks[3].is_missing());
    }

    #[test]
    fn unterminated_quote_is_an_error() {
        assert!(words("'abc").is_err());
    }
}
