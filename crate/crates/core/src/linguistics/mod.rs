//! Dependency parses: CoNLL-U ingestion, POS-based semantic elements,
//! token complexity and noun-chunk extraction.

mod conllu;

use std::convert::Infallible;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use conllu::{parse_conllu, render_conllu, ConlluError};

/// Universal POS tag. Unrecognized tags are carried verbatim.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Upos {
    Adj,
    Adp,
    Adv,
    Aux,
    Cconj,
    Det,
    Intj,
    Noun,
    Num,
    Part,
    Pron,
    Propn,
    Punct,
    Sconj,
    Sym,
    Verb,
    X,
    Other(String),
}

const UPOS_TAGS: [(&str, Upos); 17] = [
    ("ADJ", Upos::Adj),
    ("ADP", Upos::Adp),
    ("ADV", Upos::Adv),
    ("AUX", Upos::Aux),
    ("CCONJ", Upos::Cconj),
    ("DET", Upos::Det),
    ("INTJ", Upos::Intj),
    ("NOUN", Upos::Noun),
    ("NUM", Upos::Num),
    ("PART", Upos::Part),
    ("PRON", Upos::Pron),
    ("PROPN", Upos::Propn),
    ("PUNCT", Upos::Punct),
    ("SCONJ", Upos::Sconj),
    ("SYM", Upos::Sym),
    ("VERB", Upos::Verb),
    ("X", Upos::X),
];

impl Upos {
    /// The seventeen standard tags.
    pub fn standard() -> impl Iterator<Item = Upos> {
        UPOS_TAGS.into_iter().map(|(_, u)| u)
    }

    pub fn as_str(&self) -> &str {
        match self {
            Upos::Other(s) => s,
            tag => UPOS_TAGS.iter().find(|(_, u)| u == tag).map(|(s, _)| *s).expect("standard tag"),
        }
    }
}

impl FromStr for Upos {
    type Err = Infallible;

    fn from_str(s: &str) -> Result<Self, Infallible> {
        Ok(UPOS_TAGS
            .iter()
            .find(|(name, _)| *name == s)
            .map(|(_, u)| u.clone())
            .unwrap_or_else(|| Upos::Other(s.to_owned())))
    }
}

impl fmt::Display for Upos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedToken {
    /// 1-based position in the sentence.
    pub index: usize,
    pub surface: String,
    pub upos: Upos,
    /// Index of the governing token, 0 for the root.
    pub head: usize,
    pub deprel: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{reason}")]
pub struct TreeError {
    /// 1-based token the problem was found at, if any.
    pub token: Option<usize>,
    pub reason: String,
}

/// A sentence whose head links form a single-rooted tree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedSentence {
    sent_id: Option<String>,
    tokens: Vec<ParsedToken>,
}

impl ParsedSentence {
    pub fn new(sent_id: Option<String>, tokens: Vec<ParsedToken>) -> Result<Self, TreeError> {
        let n = tokens.len();
        for (i, t) in tokens.iter().enumerate() {
            let fail = |reason: String| TreeError { token: Some(i + 1), reason };
            if t.index != i + 1 {
                return Err(fail(format!("token id {} out of sequence", t.index)));
            }
            if t.head == t.index {
                return Err(fail(format!("token {} is its own head", t.index)));
            }
            if t.head > n {
                return Err(fail(format!("head {} out of range for {n} tokens", t.head)));
            }
        }
        let roots: Vec<usize> = tokens.iter().filter(|t| t.head == 0).map(|t| t.index).collect();
        match roots.as_slice() {
            [_] => {}
            [] => return Err(TreeError { token: None, reason: "sentence has no root".into() }),
            [_, second, ..] => {
                return Err(TreeError {
                    token: Some(*second),
                    reason: format!("sentence has {} roots", roots.len()),
                })
            }
        }
        // Every token must reach the root within n steps.
        for t in &tokens {
            let mut cur = t.head;
            let mut steps = 0;
            while cur != 0 {
                cur = tokens[cur - 1].head;
                steps += 1;
                if steps > n {
                    return Err(TreeError {
                        token: Some(t.index),
                        reason: format!("head links of token {} form a cycle", t.index),
                    });
                }
            }
        }
        Ok(Self { sent_id, tokens })
    }

    pub fn sent_id(&self) -> Option<&str> {
        self.sent_id.as_deref()
    }

    pub fn tokens(&self) -> &[ParsedToken] {
        &self.tokens
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Index of the root token.
    pub fn root(&self) -> usize {
        self.tokens.iter().find(|t| t.head == 0).map(|t| t.index).expect("validated")
    }

    fn token(&self, index: usize) -> &ParsedToken {
        &self.tokens[index - 1]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SemanticElement {
    Object,
    Attribute,
    Action,
    ProperNoun,
    Other,
}

pub fn classify_upos(upos: &Upos) -> SemanticElement {
    match upos {
        Upos::Propn => SemanticElement::ProperNoun,
        Upos::Noun => SemanticElement::Object,
        Upos::Adj => SemanticElement::Attribute,
        Upos::Verb => SemanticElement::Action,
        _ => SemanticElement::Other,
    }
}

pub fn classify_token(t: &ParsedToken) -> SemanticElement {
    classify_upos(&t.upos)
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("token index {index} out of range for sentence of {len} tokens")]
pub struct IndexError {
    pub index: usize,
    pub len: usize,
}

/// Degree of token `index` (1-based) in the undirected dependency graph.
/// The root's link to the virtual root node is not an edge.
pub fn token_complexity(s: &ParsedSentence, index: usize) -> Result<usize, IndexError> {
    if index == 0 || index > s.len() {
        return Err(IndexError { index, len: s.len() });
    }
    let up = usize::from(s.token(index).head != 0);
    let down = s.tokens.iter().filter(|t| t.head == index).count();
    Ok(up + down)
}

const CHUNK_DEPRELS: [&str; 5] = ["det", "amod", "compound", "nummod", "poss"];

/// A noun chunk as 1-based inclusive token positions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NounChunk {
    pub start: usize,
    pub end: usize,
    pub head: usize,
}

impl NounChunk {
    pub fn text(&self, s: &ParsedSentence) -> String {
        s.tokens[self.start - 1..self.end]
            .iter()
            .map(|t| t.surface.as_str())
            .collect::<Vec<_>>()
            .join(" ")
    }
}

/// Noun chunks: each NOUN/PROPN head extended left over the contiguous run
/// of its own `det`/`amod`/`compound`/`nummod`/`poss` dependents. Nouns that
/// fall inside another noun's chunk do not head a chunk of their own.
pub fn noun_chunks(s: &ParsedSentence) -> Vec<NounChunk> {
    let candidates: Vec<NounChunk> = s
        .tokens
        .iter()
        .filter(|t| matches!(t.upos, Upos::Noun | Upos::Propn))
        .map(|h| {
            let mut start = h.index;
            while start > 1 {
                let left = s.token(start - 1);
                let base = left.deprel.split(':').next().unwrap_or_default();
                let chunkable = CHUNK_DEPRELS.contains(&base) || left.deprel == "nmod:poss";
                if left.head == h.index && chunkable {
                    start -= 1;
                } else {
                    break;
                }
            }
            NounChunk { start, end: h.index, head: h.index }
        })
        .collect();
    candidates
        .iter()
        .filter(|c| {
            !candidates
                .iter()
                .any(|o| o.head != c.head && o.start <= c.head && c.head <= o.end)
        })
        .copied()
        .collect()
}
