//! Location-token lexer, prompt templates and the response codec.

mod lexer;
mod prompt;
pub mod record;
mod response;
mod task;

use thiserror::Error;

use crate::geometry::{GeometryError, RegionKind};

pub use lexer::{contains_loc_marker, lex, Token, TokenStream};
pub use prompt::{parse_prompt, render_prompt, TaskPrompt, QUERY_SEPARATOR};
pub use response::{
    decode_to_pixels, parse_response, serialize_response, GroundedPhrase, LabeledRegion, PixelResponse,
    TaskResponse,
};
pub use task::{ResponseShape, Task, UnknownTask};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CodecError {
    #[error("lex error at byte {offset}: {reason}")]
    Lex { offset: usize, reason: &'static str },
    #[error("{task}: parse error at token {index}: {reason}")]
    Parse { task: Task, index: usize, reason: String },
    #[error("{task}: prompt error: {reason}")]
    Prompt { task: Task, reason: &'static str },
    #[error("{task}: expected {expected} region, got {got}")]
    RegionKind { task: Task, expected: RegionKind, got: RegionKind },
    #[error("{task}: invalid response: {reason}")]
    InvalidResponse { task: Task, reason: String },
    #[error("record has no task and none was given")]
    MissingTask,
    #[error("location bin {0} outside [0, 999]")]
    BinOutOfRange(u16),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}
