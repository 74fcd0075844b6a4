//! CoNLL-U reading and writing.
//!
//! Only the columns the analyses use are kept (ID, FORM, UPOS, HEAD,
//! DEPREL); rendering writes `_` for the other five. Multiword-token ranges
//! (`3-4`) and empty nodes (`5.1`) are skipped on input.

use std::fmt::Write as _;

use thiserror::Error;

use super::{ParsedSentence, ParsedToken, Upos};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("CoNLL-U line {line}: {reason}")]
pub struct ConlluError {
    pub line: usize,
    pub reason: String,
}

fn err(line: usize, reason: impl Into<String>) -> ConlluError {
    ConlluError { line, reason: reason.into() }
}

struct Pending {
    start_line: usize,
    sent_id: Option<String>,
    tokens: Vec<(usize, ParsedToken)>,
}

impl Pending {
    fn new(line: usize) -> Self {
        Self { start_line: line, sent_id: None, tokens: Vec::new() }
    }

    fn is_empty(&self) -> bool {
        self.tokens.is_empty() && self.sent_id.is_none()
    }

    fn finish(self) -> Result<ParsedSentence, ConlluError> {
        if self.tokens.is_empty() {
            return Err(err(self.start_line, "sentence has no tokens"));
        }
        let lines: Vec<usize> = self.tokens.iter().map(|(l, _)| *l).collect();
        let tokens = self.tokens.into_iter().map(|(_, t)| t).collect();
        ParsedSentence::new(self.sent_id, tokens).map_err(|e| {
            let line = e.token.map(|i| lines[i - 1]).unwrap_or(self.start_line);
            err(line, e.reason)
        })
    }
}

/// Parses a CoNLL-U document into sentences.
pub fn parse_conllu(src: &str) -> Result<Vec<ParsedSentence>, ConlluError> {
    let mut sentences = Vec::new();
    let mut pending = Pending::new(1);
    for (i, raw) in src.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.strip_suffix('\r').unwrap_or(raw);
        if line.trim().is_empty() {
            if !pending.is_empty() {
                sentences.push(pending.finish()?);
            }
            pending = Pending::new(line_no + 1);
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            if let Some((key, value)) = comment.split_once('=') {
                if key.trim() == "sent_id" {
                    pending.sent_id = Some(value.trim().to_owned());
                }
            }
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 10 {
            return Err(err(line_no, format!("expected 10 tab-separated columns, found {}", cols.len())));
        }
        let id = cols[0];
        if id.contains('-') || id.contains('.') {
            continue;
        }
        let index: usize = id.parse().map_err(|_| err(line_no, format!("invalid token id {id:?}")))?;
        if index != pending.tokens.len() + 1 {
            return Err(err(
                line_no,
                format!("token id {index} out of sequence, expected {}", pending.tokens.len() + 1),
            ));
        }
        let head: usize = cols[6]
            .parse()
            .map_err(|_| err(line_no, format!("non-integer head {:?}", cols[6])))?;
        let token = ParsedToken {
            index,
            surface: cols[1].to_owned(),
            upos: cols[3].parse::<Upos>().expect("infallible"),
            head,
            deprel: cols[7].to_owned(),
        };
        pending.tokens.push((line_no, token));
    }
    if !pending.is_empty() {
        sentences.push(pending.finish()?);
    }
    Ok(sentences)
}

/// Renders sentences as CoNLL-U, each followed by a blank line.
pub fn render_conllu(sentences: &[ParsedSentence]) -> String {
    let mut out = String::new();
    for s in sentences {
        if let Some(id) = s.sent_id() {
            writeln!(out, "# sent_id = {id}").unwrap();
        }
        for t in s.tokens() {
            writeln!(
                out,
                "{}\t{}\t_\t{}\t_\t_\t{}\t{}\t_\t_",
                t.index, t.surface, t.upos, t.head, t.deprel
            )
            .unwrap();
        }
        out.push('\n');
    }
    out
}
