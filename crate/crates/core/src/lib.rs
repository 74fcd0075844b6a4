//! Unified location-token task representation and annotation-corpus tooling.
//!
//! * [`geometry`]: regions, 1,000-bin quantization, IoU and NMS.
//! * [`codec`]: `<loc_K>` lexer, prompt templates and response grammars.
//! * [`linguistics`]: CoNLL-U parses, semantic elements, token complexity.
//! * [`scoring`]: sequence NLL and candidate selection.
//! * [`engine`]: annotation records, filters, candidate generation, merging.
//! * [`stats`]: mergeable corpus statistics.
//! * [`synth`]: seeded synthetic records.

pub mod codec;
pub mod engine;
pub mod geometry;
pub mod linguistics;
pub mod scoring;
pub mod stats;
pub mod synth;

pub use codec::{Task, TaskPrompt, TaskResponse, TokenStream};
pub use geometry::{BBox, ImageSize, Polygon, QuadBox, QuantizedRegion, Region, RegionKind};
