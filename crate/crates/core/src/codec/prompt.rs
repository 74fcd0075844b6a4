//! Canonical prompt templates and their inverse.

use super::lexer::{contains_loc_marker, lex, Token};
use super::{CodecError, Task};
use crate::geometry::{QuantizedRegion, RegionKind};

/// Separator between queries in an open-vocabulary detection prompt.
pub const QUERY_SEPARATOR: &str = "<and>";

const CAPTION: &str = "What does the image describe?";
const DETAILED_CAPTION: &str = "Describe with a paragraph what is shown in the image.";
const MORE_DETAILED_CAPTION: &str = "Describe in detail what is shown in the image.";
const REGION_PROPOSAL: &str = "Locate the region proposals in the image.";
const OBJECT_DETECTION: &str = "Locate the objects with category name in the image.";
const DENSE_REGION_CAPTION: &str = "Locate the objects in the image, with their descriptions.";
const OCR: &str = "What is the text in the image, with regions?";

const GROUNDING_PREFIX: &str = "Locate the phrases in the caption: ";
const REC_PREFIX: &str = "Find the region that the expression refers to: ";
const OVD_PREFIX: &str = "Locate ";
const OVD_SUFFIX: &str = " in the image.";
const SEG_TEXT_PREFIX: &str = "What is the polygon mask of the object described by: ";
const SEG_REGION_PREFIX: &str = "What is the polygon mask of region ";
const REGION_TEXT_PREFIX: &str = "What does the region ";
const REGION_TEXT_SUFFIX: &str = " describe?";

/// A task request: the task plus its optional text or region payload.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TaskPrompt {
    pub task: Task,
    pub text: Option<String>,
    pub region: Option<QuantizedRegion>,
}

#[derive(Clone, Copy)]
enum Payload {
    None,
    Text,
    Region,
    TextOrRegion,
}

fn payload_of(task: Task) -> Payload {
    match task {
        Task::PhraseGrounding | Task::ReferringExpressionComprehension | Task::OpenVocabularyDetection => {
            Payload::Text
        }
        Task::RegionToText => Payload::Region,
        Task::ReferringSegmentation => Payload::TextOrRegion,
        _ => Payload::None,
    }
}

impl TaskPrompt {
    pub fn new(task: Task) -> Self {
        Self { task, text: None, region: None }
    }

    pub fn with_text(task: Task, text: impl Into<String>) -> Self {
        Self { task, text: Some(text.into()), region: None }
    }

    pub fn with_region(task: Task, region: QuantizedRegion) -> Self {
        Self { task, text: None, region: Some(region) }
    }

    /// Open-vocabulary detection over several queries.
    pub fn open_vocabulary<S: AsRef<str>>(queries: &[S]) -> Self {
        let joined = queries.iter().map(AsRef::as_ref).collect::<Vec<_>>().join(QUERY_SEPARATOR);
        Self::with_text(Task::OpenVocabularyDetection, joined)
    }

    /// Queries of an open-vocabulary prompt, in order.
    pub fn queries(&self) -> Vec<&str> {
        self.text.as_deref().map(|t| t.split(QUERY_SEPARATOR).collect()).unwrap_or_default()
    }

    pub fn validate(&self) -> Result<(), CodecError> {
        let task = self.task;
        let err = |reason: &'static str| CodecError::Prompt { task, reason };
        let (text, region) = (self.text.is_some(), self.region.is_some());
        match payload_of(task) {
            Payload::None if text || region => return Err(err("task takes no payload")),
            Payload::Text if !text => return Err(err("missing text payload")),
            Payload::Text if region => return Err(err("task takes no region payload")),
            Payload::Region if !region => return Err(err("missing region payload")),
            Payload::Region if text => return Err(err("task takes no text payload")),
            Payload::TextOrRegion if text == region => {
                return Err(err("exactly one of text or region payload is required"))
            }
            _ => {}
        }
        if let Some(t) = &self.text {
            if t.is_empty() {
                return Err(err("empty text payload"));
            }
            if contains_loc_marker(t) {
                return Err(err("text payload contains a location token"));
            }
            if task == Task::OpenVocabularyDetection && self.queries().iter().any(|q| q.is_empty()) {
                return Err(err("empty open-vocabulary query"));
            }
        }
        if let Some(r) = &self.region {
            if r.kind() != RegionKind::Box {
                return Err(err("region payload must be a box"));
            }
        }
        Ok(())
    }
}

fn render_locs(region: &QuantizedRegion) -> String {
    region.bins().iter().map(|b| format!("<loc_{b}>")).collect()
}

/// Renders the canonical prompt text for a task request.
pub fn render_prompt(p: &TaskPrompt) -> Result<String, CodecError> {
    p.validate()?;
    let text = p.text.as_deref().unwrap_or_default();
    Ok(match p.task {
        Task::Caption => CAPTION.to_owned(),
        Task::DetailedCaption => DETAILED_CAPTION.to_owned(),
        Task::MoreDetailedCaption => MORE_DETAILED_CAPTION.to_owned(),
        Task::RegionProposal => REGION_PROPOSAL.to_owned(),
        Task::ObjectDetection => OBJECT_DETECTION.to_owned(),
        Task::DenseRegionCaption => DENSE_REGION_CAPTION.to_owned(),
        Task::TextDetectionRecognition => OCR.to_owned(),
        Task::PhraseGrounding => format!("{GROUNDING_PREFIX}{text}"),
        Task::ReferringExpressionComprehension => format!("{REC_PREFIX}{text}"),
        Task::OpenVocabularyDetection => format!("{OVD_PREFIX}{text}{OVD_SUFFIX}"),
        Task::ReferringSegmentation => match &p.region {
            Some(r) => format!("{SEG_REGION_PREFIX}{}", render_locs(r)),
            None => format!("{SEG_TEXT_PREFIX}{text}"),
        },
        Task::RegionToText => {
            let r = p.region.as_ref().expect("validated");
            format!("{REGION_TEXT_PREFIX}{}{REGION_TEXT_SUFFIX}", render_locs(r))
        }
    })
}

fn strip_affixes<'a>(s: &'a str, prefix: &str, suffix: &str) -> Option<&'a str> {
    s.strip_prefix(prefix)?.strip_suffix(suffix)
}

/// `<loc_a><loc_b><loc_c><loc_d>` and nothing else.
fn parse_box_locs(s: &str) -> Option<QuantizedRegion> {
    let ts = lex(s).ok()?;
    let bins: Vec<u16> = ts
        .items()
        .iter()
        .map(|t| match t {
            Token::Loc(b) => Some(*b),
            Token::Text(_) => None,
        })
        .collect::<Option<_>>()?;
    QuantizedRegion::new(RegionKind::Box, bins).ok()
}

/// Recovers the task request from its rendered prompt.
pub fn parse_prompt(raw: &str, task: Task) -> Result<TaskPrompt, CodecError> {
    let mismatch = || CodecError::Prompt { task, reason: "prompt does not match the task template" };
    let fixed = |template: &str| {
        if raw == template {
            Ok(TaskPrompt::new(task))
        } else {
            Err(mismatch())
        }
    };
    let with_text = |body: Option<&str>| -> Result<TaskPrompt, CodecError> {
        let p = TaskPrompt::with_text(task, body.ok_or_else(mismatch)?);
        p.validate()?;
        Ok(p)
    };
    match task {
        Task::Caption => fixed(CAPTION),
        Task::DetailedCaption => fixed(DETAILED_CAPTION),
        Task::MoreDetailedCaption => fixed(MORE_DETAILED_CAPTION),
        Task::RegionProposal => fixed(REGION_PROPOSAL),
        Task::ObjectDetection => fixed(OBJECT_DETECTION),
        Task::DenseRegionCaption => fixed(DENSE_REGION_CAPTION),
        Task::TextDetectionRecognition => fixed(OCR),
        Task::PhraseGrounding => with_text(raw.strip_prefix(GROUNDING_PREFIX)),
        Task::ReferringExpressionComprehension => with_text(raw.strip_prefix(REC_PREFIX)),
        Task::OpenVocabularyDetection => with_text(strip_affixes(raw, OVD_PREFIX, OVD_SUFFIX)),
        Task::ReferringSegmentation => {
            if let Some(region) = raw.strip_prefix(SEG_REGION_PREFIX).and_then(parse_box_locs) {
                Ok(TaskPrompt::with_region(task, region))
            } else {
                with_text(raw.strip_prefix(SEG_TEXT_PREFIX))
            }
        }
        Task::RegionToText => strip_affixes(raw, REGION_TEXT_PREFIX, REGION_TEXT_SUFFIX)
            .and_then(parse_box_locs)
            .map(|r| TaskPrompt::with_region(task, r))
            .ok_or_else(mismatch),
    }
}
