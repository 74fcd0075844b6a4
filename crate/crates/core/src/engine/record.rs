//! Annotation records and their JSON line form.
//!
//! One record per image:
//!
//! ```json
//! {"fld_schema":1,"id":"img-1","size":{"width":640.0,"height":480.0},
//!  "texts":[{"granularity":"brief","text":"a dog","source":"specialist",
//!            "parse":"1\ta\t_\tDET\t_\t_\t2\tdet\t_\t_\n2\tdog\t_\tNOUN\t_\t_\t0\troot\t_\t_\n\n"}],
//!  "region_texts":[{"region":[10.0,20.0,200.0,220.0],
//!                   "texts":[{"text":"dog","role":"phrase"}],"selected":0,"confidence":0.9}],
//!  "triplets":[{"text_ref":0,"phrase":{"start":0,"end":5,"text":"a dog"},
//!               "regions":[{"box":[10.0,20.0,200.0,220.0],"confidence":0.8}],
//!               "phrase_confidence":0.7}]}
//! ```
//!
//! A text's parse is either inlined as a CoNLL-U block (`parse`) or given as
//! a list of sentence ids (`parse_ref`) into a sidecar `.conllu` file, which
//! [`resolve_parses`] looks up.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{BBox, GeometryError, ImageSize, Polygon, QuadBox};
use crate::linguistics::{parse_conllu, render_conllu, ConlluError, ParsedSentence};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RecordError {
    #[error("{path}: {reason}")]
    Invalid { path: String, reason: String },
    #[error("text {index}: {source}")]
    Conllu {
        index: usize,
        #[source]
        source: ConlluError,
    },
    #[error("text {index}: unknown sentence id {sent_id:?}")]
    UnknownSentence { index: usize, sent_id: String },
}

fn invalid(path: impl Into<String>, reason: impl Into<String>) -> RecordError {
    RecordError::Invalid { path: path.into(), reason: reason.into() }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Granularity {
    Brief,
    Detailed,
    MoreDetailed,
}

impl Granularity {
    pub const ALL: [Granularity; 3] = [Granularity::Brief, Granularity::Detailed, Granularity::MoreDetailed];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TextSource {
    Specialist,
    Human,
    Refined,
}

/// An image-level text with an optional dependency parse.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TextWire", into = "TextWire")]
pub struct TextAnnotation {
    pub granularity: Granularity,
    pub text: String,
    pub source: TextSource,
    /// Parsed sentences; `None` when absent or not yet resolved.
    pub parse: Option<Vec<ParsedSentence>>,
    /// Sidecar sentence ids. When set, the parse is written as a reference.
    pub parse_ref: Option<Vec<String>>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TextWire {
    granularity: Granularity,
    text: String,
    source: TextSource,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    parse: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    parse_ref: Option<Vec<String>>,
}

impl TryFrom<TextWire> for TextAnnotation {
    type Error = ConlluError;

    fn try_from(w: TextWire) -> Result<Self, ConlluError> {
        let parse = w.parse.as_deref().map(parse_conllu).transpose()?;
        Ok(Self { granularity: w.granularity, text: w.text, source: w.source, parse, parse_ref: w.parse_ref })
    }
}

impl From<TextAnnotation> for TextWire {
    fn from(t: TextAnnotation) -> Self {
        let parse = match (&t.parse_ref, &t.parse) {
            (None, Some(p)) => Some(render_conllu(p)),
            _ => None,
        };
        Self { granularity: t.granularity, text: t.text, source: t.source, parse, parse_ref: t.parse_ref }
    }
}

impl TextAnnotation {
    pub fn new(granularity: Granularity, text: impl Into<String>, source: TextSource) -> Self {
        Self { granularity, text: text.into(), source, parse: None, parse_ref: None }
    }

    pub fn with_parse(mut self, parse: Vec<ParsedSentence>) -> Self {
        self.parse = Some(parse);
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TextRole {
    Phrase,
    Brief,
    NounChunk,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionText {
    pub text: String,
    pub role: TextRole,
}

/// Region of a region-text pair: an axis-aligned box or an OCR quad,
/// serialized as 4 or 8 coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub enum PairRegion {
    Box(BBox),
    Quad(QuadBox),
}

impl PairRegion {
    pub fn bbox(&self) -> BBox {
        match self {
            PairRegion::Box(b) => *b,
            PairRegion::Quad(q) => q.bounding_box(),
        }
    }

    pub fn within(&self, size: &ImageSize) -> bool {
        match self {
            PairRegion::Box(b) => b.within(size),
            PairRegion::Quad(q) => q.within(size),
        }
    }
}

impl TryFrom<Vec<f64>> for PairRegion {
    type Error = GeometryError;

    fn try_from(c: Vec<f64>) -> Result<Self, GeometryError> {
        match c.len() {
            4 => Ok(PairRegion::Box(BBox::new(c[0], c[1], c[2], c[3])?)),
            8 => Ok(PairRegion::Quad(QuadBox::from_coords(c.try_into().expect("length checked"))?)),
            n => Err(GeometryError::CoordCount { expected: "4 or 8", got: n }),
        }
    }
}

impl From<PairRegion> for Vec<f64> {
    fn from(r: PairRegion) -> Self {
        match r {
            PairRegion::Box(b) => b.corners().to_vec(),
            PairRegion::Quad(q) => q.coords().to_vec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionTextPair {
    pub region: PairRegion,
    pub texts: Vec<RegionText>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub selected: Option<usize>,
    pub confidence: f64,
}

impl RegionTextPair {
    /// The text used as the pair's class: the selected candidate, else the
    /// phrase candidate, else the first one.
    pub fn class_text(&self) -> Option<&str> {
        self.selected
            .and_then(|i| self.texts.get(i))
            .or_else(|| self.texts.iter().find(|t| t.role == TextRole::Phrase))
            .or_else(|| self.texts.first())
            .map(|t| t.text.as_str())
    }

    pub fn text_with_role(&self, role: TextRole) -> Option<&str> {
        self.texts.iter().find(|t| t.role == role).map(|t| t.text.as_str())
    }
}

/// Character span `[start, end)` of a phrase within its text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhraseSpan {
    pub start: usize,
    pub end: usize,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroundedBox {
    #[serde(rename = "box")]
    pub bbox: BBox,
    pub confidence: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mask: Option<Polygon>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhraseRegionTriplet {
    /// Index into the record's `texts`.
    pub text_ref: usize,
    pub phrase: PhraseSpan,
    pub regions: Vec<GroundedBox>,
    pub phrase_confidence: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnnotatedImage {
    pub fld_schema: u32,
    pub id: String,
    pub size: ImageSize,
    #[serde(default)]
    pub texts: Vec<TextAnnotation>,
    #[serde(default)]
    pub region_texts: Vec<RegionTextPair>,
    #[serde(default)]
    pub triplets: Vec<PhraseRegionTriplet>,
}

fn check_unit(path: &str, v: f64) -> Result<(), RecordError> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(invalid(path, format!("confidence {v} outside [0, 1]")))
    }
}

/// Character-indexed slice.
pub(crate) fn char_slice(s: &str, start: usize, end: usize) -> Option<&str> {
    let mut idx = s.char_indices().map(|(i, _)| i).chain(std::iter::once(s.len()));
    let from = idx.nth(start)?;
    let to = if end == start { from } else { idx.nth(end - start - 1)? };
    Some(&s[from..to])
}

impl AnnotatedImage {
    pub fn new(id: impl Into<String>, size: ImageSize) -> Self {
        Self {
            fld_schema: SCHEMA_VERSION,
            id: id.into(),
            size,
            texts: Vec::new(),
            region_texts: Vec::new(),
            triplets: Vec::new(),
        }
    }

    /// True when the record carries no annotations at all.
    pub fn is_empty(&self) -> bool {
        self.texts.is_empty() && self.region_texts.is_empty() && self.triplets.is_empty()
    }

    pub fn validate(&self) -> Result<(), RecordError> {
        if self.id.is_empty() {
            return Err(invalid("id", "empty id"));
        }
        for (i, t) in self.texts.iter().enumerate() {
            if t.text.is_empty() {
                return Err(invalid(format!("texts[{i}]"), "empty text"));
            }
        }
        for (i, p) in self.region_texts.iter().enumerate() {
            let path = format!("region_texts[{i}]");
            if p.texts.is_empty() {
                return Err(invalid(path, "no candidate texts"));
            }
            if let Some(sel) = p.selected {
                if sel >= p.texts.len() {
                    return Err(invalid(path, format!("selected {sel} out of range")));
                }
            }
            check_unit(&path, p.confidence)?;
            if !p.region.within(&self.size) {
                return Err(invalid(path, "region outside image bounds"));
            }
        }
        for (i, t) in self.triplets.iter().enumerate() {
            let path = format!("triplets[{i}]");
            let text = self
                .texts
                .get(t.text_ref)
                .ok_or_else(|| invalid(&path, format!("text_ref {} out of range", t.text_ref)))?;
            let span = &t.phrase;
            if span.start > span.end || char_slice(&text.text, span.start, span.end) != Some(span.text.as_str()) {
                return Err(invalid(&path, "phrase span does not match the referenced text"));
            }
            if t.regions.is_empty() {
                return Err(invalid(&path, "no regions"));
            }
            check_unit(&path, t.phrase_confidence)?;
            for (j, g) in t.regions.iter().enumerate() {
                let path = format!("{path}.regions[{j}]");
                check_unit(&path, g.confidence)?;
                if !g.bbox.within(&self.size) {
                    return Err(invalid(path, "box outside image bounds"));
                }
                if let Some(mask) = &g.mask {
                    if !mask.within(&self.size) {
                        return Err(invalid(path, "mask outside image bounds"));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("records serialize")
    }
}

/// Sentences of a sidecar `.conllu` file keyed by `sent_id`.
#[derive(Debug, Clone, Default)]
pub struct Sidecar {
    sentences: HashMap<String, ParsedSentence>,
}

impl Sidecar {
    pub fn parse(src: &str) -> Result<Self, ConlluError> {
        let mut sentences = HashMap::new();
        for s in parse_conllu(src)? {
            if let Some(id) = s.sent_id() {
                sentences.insert(id.to_owned(), s);
            }
        }
        Ok(Self { sentences })
    }

    pub fn get(&self, id: &str) -> Option<&ParsedSentence> {
        self.sentences.get(id)
    }

    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }
}

/// True when any text refers to sidecar sentences.
pub fn needs_sidecar(rec: &AnnotatedImage) -> bool {
    rec.texts.iter().any(|t| t.parse_ref.is_some())
}

/// Fills in parses given by reference from the sidecar.
pub fn resolve_parses(rec: &mut AnnotatedImage, sidecar: &Sidecar) -> Result<(), RecordError> {
    for (index, t) in rec.texts.iter_mut().enumerate() {
        let Some(ids) = &t.parse_ref else { continue };
        let sentences = ids
            .iter()
            .map(|id| {
                sidecar
                    .get(id)
                    .cloned()
                    .ok_or_else(|| RecordError::UnknownSentence { index, sent_id: id.clone() })
            })
            .collect::<Result<Vec<_>, _>>()?;
        t.parse = Some(sentences);
    }
    Ok(())
}
