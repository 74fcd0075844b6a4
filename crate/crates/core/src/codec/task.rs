use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// The twelve supported vision tasks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Caption,
    DetailedCaption,
    MoreDetailedCaption,
    RegionProposal,
    ObjectDetection,
    DenseRegionCaption,
    PhraseGrounding,
    ReferringExpressionComprehension,
    OpenVocabularyDetection,
    ReferringSegmentation,
    RegionToText,
    TextDetectionRecognition,
}

/// Shape of a task's response.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResponseShape {
    Text,
    Regions,
    LabeledBoxes,
    LabeledQuads,
    GroundedText,
    Mask,
}

impl Task {
    pub const ALL: [Task; 12] = [
        Task::Caption,
        Task::DetailedCaption,
        Task::MoreDetailedCaption,
        Task::RegionProposal,
        Task::ObjectDetection,
        Task::DenseRegionCaption,
        Task::PhraseGrounding,
        Task::ReferringExpressionComprehension,
        Task::OpenVocabularyDetection,
        Task::ReferringSegmentation,
        Task::RegionToText,
        Task::TextDetectionRecognition,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Task::Caption => "caption",
            Task::DetailedCaption => "detailed_caption",
            Task::MoreDetailedCaption => "more_detailed_caption",
            Task::RegionProposal => "region_proposal",
            Task::ObjectDetection => "object_detection",
            Task::DenseRegionCaption => "dense_region_caption",
            Task::PhraseGrounding => "phrase_grounding",
            Task::ReferringExpressionComprehension => "referring_expression_comprehension",
            Task::OpenVocabularyDetection => "open_vocabulary_detection",
            Task::ReferringSegmentation => "referring_segmentation",
            Task::RegionToText => "region_to_text",
            Task::TextDetectionRecognition => "text_detection_recognition",
        }
    }

    pub fn response_shape(self) -> ResponseShape {
        match self {
            Task::Caption | Task::DetailedCaption | Task::MoreDetailedCaption | Task::RegionToText => {
                ResponseShape::Text
            }
            Task::RegionProposal => ResponseShape::Regions,
            Task::ObjectDetection
            | Task::DenseRegionCaption
            | Task::OpenVocabularyDetection
            | Task::ReferringExpressionComprehension => ResponseShape::LabeledBoxes,
            Task::TextDetectionRecognition => ResponseShape::LabeledQuads,
            Task::PhraseGrounding => ResponseShape::GroundedText,
            Task::ReferringSegmentation => ResponseShape::Mask,
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown task `{0}`")]
pub struct UnknownTask(pub String);

impl FromStr for Task {
    type Err = UnknownTask;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key = s.replace('-', "_");
        Task::ALL
            .into_iter()
            .find(|t| t.name() == key)
            .ok_or_else(|| UnknownTask(s.to_owned()))
    }
}
