//! Response grammars. Per task shape:
//!
//! * text: a single text span (possibly empty);
//! * regions: `(loc×4)*`;
//! * labeled boxes / quads: `(text loc×4)*` / `(text loc×8)*`;
//! * grounded text: `(text (loc×4)+)*`;
//! * mask: `loc×2n`, n ≥ 3.

use super::lexer::{contains_loc_marker, Token, TokenStream};
use super::task::ResponseShape;
use super::{CodecError, Task};
use crate::geometry::{dequantize_region, ImageSize, QuantizedRegion, Region, RegionKind};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledRegion {
    pub label: String,
    pub region: QuantizedRegion,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroundedPhrase {
    pub phrase: String,
    pub regions: Vec<QuantizedRegion>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TaskResponse {
    Text(String),
    Regions(Vec<QuantizedRegion>),
    LabeledRegions(Vec<LabeledRegion>),
    GroundedText(Vec<GroundedPhrase>),
    Mask(QuantizedRegion),
}

/// A [`TaskResponse`] with every region mapped back to pixels.
#[derive(Debug, Clone, PartialEq)]
pub enum PixelResponse {
    Text(String),
    Regions(Vec<Region>),
    LabeledRegions(Vec<(String, Region)>),
    GroundedText(Vec<(String, Vec<Region>)>),
    Mask(Region),
}

fn check_label(task: Task, label: &str) -> Result<(), CodecError> {
    if label.is_empty() {
        return Err(CodecError::InvalidResponse { task, reason: "empty label".into() });
    }
    if contains_loc_marker(label) {
        return Err(CodecError::InvalidResponse {
            task,
            reason: format!("label {label:?} contains a location token"),
        });
    }
    Ok(())
}

fn check_kind(task: Task, region: &QuantizedRegion, want: RegionKind) -> Result<(), CodecError> {
    if region.kind() == want {
        Ok(())
    } else {
        Err(CodecError::RegionKind { task, expected: want, got: region.kind() })
    }
}

impl TaskResponse {
    /// Checks that the variant and region kinds fit the task.
    pub fn validate(&self, task: Task) -> Result<(), CodecError> {
        let shape = task.response_shape();
        let mismatch = || CodecError::InvalidResponse {
            task,
            reason: "response variant does not match the task".into(),
        };
        match (shape, self) {
            (ResponseShape::Text, TaskResponse::Text(t)) => {
                if contains_loc_marker(t) {
                    return Err(CodecError::InvalidResponse {
                        task,
                        reason: "text contains a location token".into(),
                    });
                }
            }
            (ResponseShape::Regions, TaskResponse::Regions(rs)) => {
                for r in rs {
                    check_kind(task, r, RegionKind::Box)?;
                }
            }
            (ResponseShape::LabeledBoxes | ResponseShape::LabeledQuads, TaskResponse::LabeledRegions(items)) => {
                let want = if shape == ResponseShape::LabeledQuads {
                    RegionKind::Quad
                } else {
                    RegionKind::Box
                };
                for item in items {
                    check_label(task, &item.label)?;
                    check_kind(task, &item.region, want)?;
                }
            }
            (ResponseShape::GroundedText, TaskResponse::GroundedText(items)) => {
                for item in items {
                    check_label(task, &item.phrase)?;
                    if item.regions.is_empty() {
                        return Err(CodecError::InvalidResponse {
                            task,
                            reason: format!("phrase {:?} has no regions", item.phrase),
                        });
                    }
                    for r in &item.regions {
                        check_kind(task, r, RegionKind::Box)?;
                    }
                }
            }
            (ResponseShape::Mask, TaskResponse::Mask(r)) => check_kind(task, r, RegionKind::Polygon)?,
            _ => return Err(mismatch()),
        }
        Ok(())
    }
}

fn push_region(ts: &mut TokenStream, r: &QuantizedRegion) -> Result<(), CodecError> {
    r.bins().iter().try_for_each(|&b| ts.push_loc(b))
}

/// Encodes a response as a token stream under the task's grammar.
pub fn serialize_response(task: Task, r: &TaskResponse) -> Result<TokenStream, CodecError> {
    r.validate(task)?;
    let mut ts = TokenStream::new();
    match r {
        TaskResponse::Text(t) => ts.push_text(t),
        TaskResponse::Regions(rs) => {
            for region in rs {
                push_region(&mut ts, region)?;
            }
        }
        TaskResponse::LabeledRegions(items) => {
            for item in items {
                ts.push_text(&item.label);
                push_region(&mut ts, &item.region)?;
            }
        }
        TaskResponse::GroundedText(items) => {
            for item in items {
                ts.push_text(&item.phrase);
                for region in &item.regions {
                    push_region(&mut ts, region)?;
                }
            }
        }
        TaskResponse::Mask(region) => push_region(&mut ts, region)?,
    }
    Ok(ts)
}

/// LL(1) reader over a token stream.
struct Reader<'a> {
    items: &'a [Token],
    pos: usize,
    task: Task,
}

impl<'a> Reader<'a> {
    fn peek(&self) -> Option<&'a Token> {
        self.items.get(self.pos)
    }

    fn error(&self, index: usize, reason: impl Into<String>) -> CodecError {
        CodecError::Parse { task: self.task, index, reason: reason.into() }
    }

    fn text(&mut self) -> Result<&'a str, CodecError> {
        match self.peek() {
            Some(Token::Text(s)) => {
                self.pos += 1;
                Ok(s)
            }
            _ => Err(self.error(self.pos, "expected text")),
        }
    }

    /// Consumes the maximal run of location tokens.
    fn loc_run(&mut self) -> (usize, Vec<u16>) {
        let start = self.pos;
        let mut bins = Vec::new();
        while let Some(Token::Loc(b)) = self.peek() {
            bins.push(*b);
            self.pos += 1;
        }
        (start, bins)
    }

    fn regions(&self, start: usize, bins: &[u16], kind: RegionKind) -> Result<Vec<QuantizedRegion>, CodecError> {
        let arity = if kind == RegionKind::Quad { 8 } else { 4 };
        if !bins.len().is_multiple_of(arity) {
            return Err(self.error(
                start,
                format!("{} location tokens is not a multiple of {arity}", bins.len()),
            ));
        }
        bins.chunks_exact(arity)
            .map(|c| QuantizedRegion::new(kind, c.to_vec()).map_err(|e| self.error(start, e.to_string())))
            .collect()
    }

    fn expect_end(&self) -> Result<(), CodecError> {
        match self.peek() {
            None => Ok(()),
            Some(Token::Text(_)) => Err(self.error(self.pos, "unexpected text")),
            Some(Token::Loc(_)) => Err(self.error(self.pos, "unexpected location token")),
        }
    }
}

/// Decodes a token stream under the task's grammar.
pub fn parse_response(ts: &TokenStream, task: Task) -> Result<TaskResponse, CodecError> {
    let mut rd = Reader { items: ts.items(), pos: 0, task };
    let response = match task.response_shape() {
        ResponseShape::Text => {
            let text = match rd.peek() {
                None => String::new(),
                Some(_) => rd.text()?.to_owned(),
            };
            rd.expect_end()?;
            TaskResponse::Text(text)
        }
        ResponseShape::Regions => {
            let (start, bins) = rd.loc_run();
            rd.expect_end()?;
            TaskResponse::Regions(rd.regions(start, &bins, RegionKind::Box)?)
        }
        shape @ (ResponseShape::LabeledBoxes | ResponseShape::LabeledQuads) => {
            let kind = if shape == ResponseShape::LabeledQuads {
                RegionKind::Quad
            } else {
                RegionKind::Box
            };
            let mut items = Vec::new();
            while rd.peek().is_some() {
                let label = rd.text()?;
                let (start, bins) = rd.loc_run();
                let mut regions = rd.regions(start, &bins, kind)?;
                if regions.len() != 1 {
                    return Err(rd.error(
                        start,
                        format!("label {label:?} needs exactly one {kind}, got {}", regions.len()),
                    ));
                }
                items.push(LabeledRegion { label: label.to_owned(), region: regions.remove(0) });
            }
            TaskResponse::LabeledRegions(items)
        }
        ResponseShape::GroundedText => {
            let mut items = Vec::new();
            while rd.peek().is_some() {
                let phrase = rd.text()?;
                let (start, bins) = rd.loc_run();
                if bins.is_empty() {
                    return Err(rd.error(start, format!("phrase {phrase:?} has no box")));
                }
                let regions = rd.regions(start, &bins, RegionKind::Box)?;
                items.push(GroundedPhrase { phrase: phrase.to_owned(), regions });
            }
            TaskResponse::GroundedText(items)
        }
        ResponseShape::Mask => {
            let (start, bins) = rd.loc_run();
            rd.expect_end()?;
            let region = QuantizedRegion::new(RegionKind::Polygon, bins)
                .map_err(|e| rd.error(start, e.to_string()))?;
            TaskResponse::Mask(region)
        }
    };
    Ok(response)
}

/// Maps every quantized region of a response back to pixel coordinates.
pub fn decode_to_pixels(r: &TaskResponse, size: &ImageSize) -> PixelResponse {
    let px = |q: &QuantizedRegion| dequantize_region(q, size).expect("quantized regions hold valid bins");
    match r {
        TaskResponse::Text(t) => PixelResponse::Text(t.clone()),
        TaskResponse::Regions(rs) => PixelResponse::Regions(rs.iter().map(px).collect()),
        TaskResponse::LabeledRegions(items) => PixelResponse::LabeledRegions(
            items.iter().map(|i| (i.label.clone(), px(&i.region))).collect(),
        ),
        TaskResponse::GroundedText(items) => PixelResponse::GroundedText(
            items
                .iter()
                .map(|i| (i.phrase.clone(), i.regions.iter().map(px).collect()))
                .collect(),
        ),
        TaskResponse::Mask(q) => PixelResponse::Mask(px(q)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::lex;
    use crate::geometry::BBox;

    fn qbox(b: [u16; 4]) -> QuantizedRegion {
        QuantizedRegion::bbox(b).unwrap()
    }

    fn labeled(label: &str, region: QuantizedRegion) -> LabeledRegion {
        LabeledRegion { label: label.into(), region }
    }

    #[test]
    fn labeled_single_item() {
        let r = TaskResponse::LabeledRegions(vec![labeled("cat", qbox([1, 2, 3, 4]))]);
        let ts = serialize_response(Task::ObjectDetection, &r).unwrap();
        assert_eq!(
            ts.items(),
            &[
                Token::Text("cat".into()),
                Token::Loc(1),
                Token::Loc(2),
                Token::Loc(3),
                Token::Loc(4)
            ]
        );
        assert_eq!(ts.to_string(), "cat<loc_1><loc_2><loc_3><loc_4>");
        assert_eq!(parse_response(&ts, Task::ObjectDetection).unwrap(), r);
    }

    #[test]
    fn grounded_multiple_boxes() {
        let r = TaskResponse::GroundedText(vec![GroundedPhrase {
            phrase: "two cups".into(),
            regions: vec![qbox([10, 20, 30, 40]), qbox([50, 60, 70, 80])],
        }]);
        let ts = serialize_response(Task::PhraseGrounding, &r).unwrap();
        assert_eq!(ts.items()[0], Token::Text("two cups".into()));
        assert_eq!(ts.len(), 9);
        assert_eq!(ts.loc_count(), 8);
        assert_eq!(parse_response(&ts, Task::PhraseGrounding).unwrap(), r);
    }

    #[test]
    fn mask_is_locs_only() {
        let poly = QuantizedRegion::new(RegionKind::Polygon, vec![1, 2, 3, 4, 5, 6]).unwrap();
        let ts = serialize_response(Task::ReferringSegmentation, &TaskResponse::Mask(poly)).unwrap();
        assert_eq!(ts.len(), 6);
        assert_eq!(ts.loc_count(), 6);
    }

    #[test]
    fn ocr_quad() {
        // Hand-encoded: text then eight corner bins, top-left first, clockwise.
        let ts = lex("STOP<loc_100><loc_200><loc_300><loc_200><loc_300><loc_260><loc_100><loc_260>").unwrap();
        let parsed = parse_response(&ts, Task::TextDetectionRecognition).unwrap();
        let quad =
            QuantizedRegion::new(RegionKind::Quad, vec![100, 200, 300, 200, 300, 260, 100, 260]).unwrap();
        assert_eq!(parsed, TaskResponse::LabeledRegions(vec![labeled("STOP", quad)]));
    }

    #[test]
    fn arity_errors() {
        let ts = lex("<loc_1><loc_2><loc_3>").unwrap();
        assert!(matches!(
            parse_response(&ts, Task::RegionProposal),
            Err(CodecError::Parse { index: 0, .. })
        ));
        let ts = lex("cat<loc_1><loc_2><loc_3><loc_4><loc_5>").unwrap();
        assert!(parse_response(&ts, Task::ObjectDetection).is_err());
        let ts = lex("cat<loc_1><loc_2><loc_3><loc_4><loc_5><loc_6><loc_7><loc_8>").unwrap();
        assert!(parse_response(&ts, Task::ObjectDetection).is_err());
        let ts = lex("<loc_1><loc_2><loc_3><loc_4>").unwrap();
        assert!(parse_response(&ts, Task::ReferringSegmentation).is_err());
        assert!(parse_response(&TokenStream::new(), Task::ReferringSegmentation).is_err());
    }

    #[test]
    fn text_where_forbidden() {
        let ts = lex("<loc_1><loc_2><loc_3><loc_4>oops").unwrap();
        assert!(matches!(
            parse_response(&ts, Task::RegionProposal),
            Err(CodecError::Parse { index: 4, .. })
        ));
        let ts = lex("caption<loc_1>").unwrap();
        assert!(parse_response(&ts, Task::Caption).is_err());
        let ts = lex("<loc_1><loc_2><loc_3><loc_4>").unwrap();
        assert!(parse_response(&ts, Task::ObjectDetection).is_err());
        let ts = lex("dangling").unwrap();
        assert!(parse_response(&ts, Task::PhraseGrounding).is_err());
    }

    #[test]
    fn empty_streams() {
        let empty = TokenStream::new();
        assert_eq!(parse_response(&empty, Task::Caption).unwrap(), TaskResponse::Text(String::new()));
        assert_eq!(parse_response(&empty, Task::RegionProposal).unwrap(), TaskResponse::Regions(vec![]));
        assert_eq!(
            parse_response(&empty, Task::ObjectDetection).unwrap(),
            TaskResponse::LabeledRegions(vec![])
        );
    }

    #[test]
    fn kind_mismatch_rejected() {
        let quad = QuantizedRegion::new(RegionKind::Quad, vec![0; 8]).unwrap();
        let r = TaskResponse::LabeledRegions(vec![labeled("x", quad)]);
        assert!(matches!(
            serialize_response(Task::ObjectDetection, &r),
            Err(CodecError::RegionKind { .. })
        ));
        assert!(serialize_response(Task::TextDetectionRecognition, &r).is_ok());
        let r = TaskResponse::Text("hello".into());
        assert!(serialize_response(Task::ObjectDetection, &r).is_err());
        let r = TaskResponse::LabeledRegions(vec![labeled("a<loc_3>", qbox([0, 0, 1, 1]))]);
        assert!(serialize_response(Task::ObjectDetection, &r).is_err());
    }

    #[test]
    fn decode_examples() {
        let size = ImageSize::new(1000.0, 1000.0).unwrap();
        let r = TaskResponse::Regions(vec![qbox([10, 20, 30, 40])]);
        assert_eq!(
            decode_to_pixels(&r, &size),
            PixelResponse::Regions(vec![Region::Box(BBox::new(10.5, 20.5, 30.5, 40.5).unwrap())])
        );
        assert_eq!(
            decode_to_pixels(&TaskResponse::Regions(vec![]), &size),
            PixelResponse::Regions(vec![])
        );
        let poly = QuantizedRegion::new(RegionKind::Polygon, vec![1, 2, 3, 4, 5, 6, 7, 8]).unwrap();
        match decode_to_pixels(&TaskResponse::Mask(poly), &size) {
            PixelResponse::Mask(Region::Polygon(p)) => assert_eq!(p.vertices().len(), 4),
            other => panic!("{other:?}"),
        }
    }
}
