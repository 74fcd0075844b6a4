//! Token streams of text spans and `<loc_K>` location tokens.

use std::fmt;

use super::CodecError;
use crate::geometry::MAX_BIN;

pub(crate) const LOC_PREFIX: &str = "<loc_";

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Token {
    Text(String),
    Loc(u16),
}

/// Ordered text spans and location tokens. Streams built through
/// [`TokenStream::push_text`] and [`TokenStream::push_loc`] stay in normal
/// form: no empty spans and no two adjacent spans.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TokenStream {
    items: Vec<Token>,
}

impl TokenStream {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a stream from raw items, normalizing it.
    pub fn from_tokens(tokens: impl IntoIterator<Item = Token>) -> Result<Self, CodecError> {
        let mut ts = Self::new();
        for t in tokens {
            match t {
                Token::Text(s) => ts.push_text(&s),
                Token::Loc(b) => ts.push_loc(b)?,
            }
        }
        Ok(ts)
    }

    pub fn push_text(&mut self, s: &str) {
        if s.is_empty() {
            return;
        }
        if let Some(Token::Text(last)) = self.items.last_mut() {
            last.push_str(s);
        } else {
            self.items.push(Token::Text(s.to_owned()));
        }
    }

    pub fn push_loc(&mut self, bin: u16) -> Result<(), CodecError> {
        if bin > MAX_BIN {
            return Err(CodecError::BinOutOfRange(bin));
        }
        self.items.push(Token::Loc(bin));
        Ok(())
    }

    pub fn items(&self) -> &[Token] {
        &self.items
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn loc_count(&self) -> usize {
        self.items.iter().filter(|t| matches!(t, Token::Loc(_))).count()
    }
}

impl fmt::Display for TokenStream {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for t in &self.items {
            match t {
                Token::Text(s) => f.write_str(s)?,
                Token::Loc(b) => write!(f, "{LOC_PREFIX}{b}>")?,
            }
        }
        Ok(())
    }
}

/// Splits raw text into text spans and location tokens.
///
/// Every occurrence of `<loc_` must start a well-formed token: one to three
/// decimal digits without leading zeros, a value of at most 999, then `>`.
pub fn lex(raw: &str) -> Result<TokenStream, CodecError> {
    let mut ts = TokenStream::new();
    let mut rest = raw;
    let mut offset = 0;
    while let Some(pos) = rest.find(LOC_PREFIX) {
        ts.push_text(&rest[..pos]);
        let start = offset + pos;
        let after = &rest[pos + LOC_PREFIX.len()..];
        let digits = after.bytes().take_while(u8::is_ascii_digit).count();
        let malformed = |reason: &'static str| CodecError::Lex { offset: start, reason };
        if digits == 0 {
            return Err(malformed("expected digits after `<loc_`"));
        }
        if after.as_bytes().get(digits) != Some(&b'>') {
            return Err(malformed("location token is not closed by `>`"));
        }
        if digits > 1 && after.starts_with('0') {
            return Err(malformed("leading zero in location token"));
        }
        let value: u32 = after[..digits]
            .parse()
            .map_err(|_| malformed("location token value too large"))?;
        if value > u32::from(MAX_BIN) {
            return Err(malformed("location token exceeds bin 999"));
        }
        ts.items.push(Token::Loc(value as u16));
        let consumed = pos + LOC_PREFIX.len() + digits + 1;
        rest = &rest[consumed..];
        offset += consumed;
    }
    ts.push_text(rest);
    Ok(ts)
}

/// True if `s` contains anything the lexer would treat as (or reject as) a
/// location token.
pub fn contains_loc_marker(s: &str) -> bool {
    s.contains(LOC_PREFIX)
}
