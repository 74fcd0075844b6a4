//! JSON line formats for the encode and decode commands.
//!
//! A structured record holds pixel-space annotations for one task:
//!
//! ```json
//! {"id":"img-1","task":"object_detection","size":{"width":640.0,"height":480.0},
//!  "output":{"labeled_regions":[{"label":"cat","region":[0.32,0.24,64.32,48.24]}]}}
//! ```
//!
//! Encoding it yields a token record carrying the rendered prompt and the
//! response as location-token text. Decoding reverses the step, landing
//! every coordinate on its bin center.

use serde::{Deserialize, Serialize};

use super::{
    decode_to_pixels, lex, parse_prompt, parse_response, render_prompt, serialize_response, CodecError,
    GroundedPhrase, LabeledRegion, PixelResponse, ResponseShape, Task, TaskPrompt, TaskResponse,
};
use crate::geometry::{
    dequantize_region, quantize_region, BBox, GeometryError, ImageSize, Point, Polygon, QuadBox, Region,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskRecord {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub task: Option<Task>,
    pub size: ImageSize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prompt: Option<PromptPayload>,
    pub output: Output,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PromptPayload {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub region: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Output {
    Text(String),
    Regions(Vec<Vec<f64>>),
    LabeledRegions(Vec<LabeledOutput>),
    GroundedText(Vec<GroundedOutput>),
    Mask(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LabeledOutput {
    pub label: String,
    pub region: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroundedOutput {
    pub phrase: String,
    pub regions: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TokenRecord {
    pub id: String,
    pub task: Task,
    pub size: ImageSize,
    pub prompt: String,
    pub response: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Shape {
    Box,
    Quad,
    Polygon,
}

fn region_from_coords(c: &[f64], shape: Shape) -> Result<Region, GeometryError> {
    let wrong = || GeometryError::CoordCount {
        expected: match shape {
            Shape::Box => "4",
            Shape::Quad => "8",
            Shape::Polygon => "an even number of",
        },
        got: c.len(),
    };
    match shape {
        Shape::Box => match *c {
            [x0, y0, x1, y1] => Ok(Region::Box(BBox::new(x0, y0, x1, y1)?)),
            _ => Err(wrong()),
        },
        Shape::Quad => {
            let arr: [f64; 8] = c.try_into().map_err(|_| wrong())?;
            Ok(Region::Quad(QuadBox::from_coords(arr)?))
        }
        Shape::Polygon => {
            if !c.len().is_multiple_of(2) {
                return Err(wrong());
            }
            let pts = c.chunks_exact(2).map(|p| Point::new(p[0], p[1])).collect();
            Ok(Region::Polygon(Polygon::new(pts)?))
        }
    }
}

fn to_response(task: Task, out: &Output, size: &ImageSize) -> Result<TaskResponse, CodecError> {
    let q = |c: &[f64], shape| -> Result<_, CodecError> { Ok(quantize_region(&region_from_coords(c, shape)?, size)?) };
    let label_shape = if task.response_shape() == ResponseShape::LabeledQuads {
        Shape::Quad
    } else {
        Shape::Box
    };
    let response = match out {
        Output::Text(t) => TaskResponse::Text(t.clone()),
        Output::Regions(rs) => TaskResponse::Regions(rs.iter().map(|c| q(c, Shape::Box)).collect::<Result<_, _>>()?),
        Output::LabeledRegions(items) => TaskResponse::LabeledRegions(
            items
                .iter()
                .map(|i| Ok(LabeledRegion { label: i.label.clone(), region: q(&i.region, label_shape)? }))
                .collect::<Result<_, CodecError>>()?,
        ),
        Output::GroundedText(items) => TaskResponse::GroundedText(
            items
                .iter()
                .map(|i| {
                    Ok(GroundedPhrase {
                        phrase: i.phrase.clone(),
                        regions: i.regions.iter().map(|c| q(c, Shape::Box)).collect::<Result<_, _>>()?,
                    })
                })
                .collect::<Result<_, CodecError>>()?,
        ),
        Output::Mask(c) => TaskResponse::Mask(q(c, Shape::Polygon)?),
    };
    Ok(response)
}

fn from_pixels(r: PixelResponse) -> Output {
    match r {
        PixelResponse::Text(t) => Output::Text(t),
        PixelResponse::Regions(rs) => Output::Regions(rs.iter().map(Region::coords).collect()),
        PixelResponse::LabeledRegions(items) => Output::LabeledRegions(
            items
                .into_iter()
                .map(|(label, r)| LabeledOutput { label, region: r.coords() })
                .collect(),
        ),
        PixelResponse::GroundedText(items) => Output::GroundedText(
            items
                .into_iter()
                .map(|(phrase, rs)| GroundedOutput { phrase, regions: rs.iter().map(Region::coords).collect() })
                .collect(),
        ),
        PixelResponse::Mask(r) => Output::Mask(r.coords()),
    }
}

/// Encodes a structured record. `task` overrides the record's own task.
pub fn encode_record(rec: &TaskRecord, task: Option<Task>) -> Result<TokenRecord, CodecError> {
    let task = task.or(rec.task).ok_or(CodecError::MissingTask)?;
    let payload = rec.prompt.clone().unwrap_or_default();
    let region = payload
        .region
        .as_deref()
        .map(|c| -> Result<_, CodecError> { Ok(quantize_region(&region_from_coords(c, Shape::Box)?, &rec.size)?) })
        .transpose()?;
    let prompt = TaskPrompt { task, text: payload.text, region };
    let response = to_response(task, &rec.output, &rec.size)?;
    Ok(TokenRecord {
        id: rec.id.clone(),
        task,
        size: rec.size,
        prompt: render_prompt(&prompt)?,
        response: serialize_response(task, &response)?.to_string(),
    })
}

/// Decodes a token record back to pixel space.
pub fn decode_record(rec: &TokenRecord) -> Result<TaskRecord, CodecError> {
    let prompt = parse_prompt(&rec.prompt, rec.task)?;
    let tokens = lex(&rec.response)?;
    let response = parse_response(&tokens, rec.task)?;
    let region = prompt
        .region
        .as_ref()
        .map(|q| dequantize_region(q, &rec.size).map(|r| r.coords()))
        .transpose()?;
    let payload = (prompt.text.is_some() || region.is_some()).then_some(PromptPayload { text: prompt.text, region });
    Ok(TaskRecord {
        id: rec.id.clone(),
        task: Some(rec.task),
        size: rec.size,
        prompt: payload,
        output: from_pixels(decode_to_pixels(&response, &rec.size)),
    })
}
