//! Annotation records and the data-engine phases: candidate generation,
//! filtering, and merging of refined annotations.

mod candidates;
mod config;
mod filter;
mod merge;
pub mod record;

use thiserror::Error;

pub use candidates::generate_region_text_candidates;
pub use config::{default_blacklist, ConfigError, FilterConfig};
pub use filter::{
    filter_record, filter_regions, filter_text, filter_triplets, DropReason, FilterReport, TextDecision,
};
pub use merge::merge_annotations;
pub use record::{
    needs_sidecar, resolve_parses, AnnotatedImage, Granularity, GroundedBox, PairRegion, PhraseRegionTriplet,
    PhraseSpan, RecordError, RegionText, RegionTextPair, Sidecar, TextAnnotation, TextRole, TextSource,
    SCHEMA_VERSION,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EngineError {
    #[error("text {index} has no parse")]
    MissingParse { index: usize },
    #[error("candidate label is empty")]
    EmptyLabel,
    #[error("cannot merge records: {field} differs")]
    MergeMismatch { field: &'static str },
}
