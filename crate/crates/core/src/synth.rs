//! Seeded synthetic data for tests and benchmarks.
//!
//! Annotation records are valid, carry inline parses, and are shaped to
//! exercise the filters: clustered boxes for NMS, coarse confidences for
//! ties, pronoun phrases for the blacklist, and the odd zero-width box.
//! Task responses and prompts are well formed for their task.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::codec::record::{PromptPayload, TaskRecord};
use crate::codec::{
    decode_to_pixels, GroundedPhrase, LabeledRegion, PixelResponse, ResponseShape, Task, TaskPrompt, TaskResponse,
    QUERY_SEPARATOR,
};
use crate::engine::{
    AnnotatedImage, Granularity, GroundedBox, PairRegion, PhraseRegionTriplet, PhraseSpan, RegionText,
    RegionTextPair, TextAnnotation, TextRole, TextSource,
};
use crate::geometry::{dequantize_region, BBox, ImageSize, Point, Polygon, QuadBox, QuantizedRegion, Region, RegionKind};
use crate::linguistics::{ParsedSentence, ParsedToken, Upos};

const WORDS: &[(&str, Upos)] = &[
    ("dog", Upos::Noun),
    ("cat", Upos::Noun),
    ("car", Upos::Noun),
    ("tree", Upos::Noun),
    ("man", Upos::Noun),
    ("table", Upos::Noun),
    ("Paris", Upos::Propn),
    ("Alice", Upos::Propn),
    ("red", Upos::Adj),
    ("small", Upos::Adj),
    ("wooden", Upos::Adj),
    ("runs", Upos::Verb),
    ("holds", Upos::Verb),
    ("sits", Upos::Verb),
    ("a", Upos::Det),
    ("the", Upos::Det),
    ("it", Upos::Pron),
    ("they", Upos::Pron),
    ("on", Upos::Adp),
    ("near", Upos::Adp),
];

const LABELS: &[&str] = &["dog", "cat", "car", "person", "sign"];
const DEPRELS: &[&str] = &["det", "amod", "nsubj", "obj", "compound", "nmod", "case"];

fn confidence(rng: &mut impl Rng) -> f64 {
    f64::from(rng.gen_range(0..=20u32)) / 20.0
}

/// A random single-rooted sentence of `n` tokens.
pub fn random_sentence(rng: &mut impl Rng, n: usize) -> ParsedSentence {
    let mut order: Vec<usize> = (1..=n).collect();
    order.shuffle(rng);
    let mut heads = vec![0; n + 1];
    for k in 1..n {
        heads[order[k]] = order[rng.gen_range(0..k)];
    }
    let tokens = (1..=n)
        .map(|i| {
            let (surface, upos) = WORDS.choose(rng).expect("non-empty");
            ParsedToken {
                index: i,
                surface: surface.to_string(),
                upos: upos.clone(),
                head: heads[i],
                deprel: if heads[i] == 0 { "root".into() } else { DEPRELS.choose(rng).expect("non-empty").to_string() },
            }
        })
        .collect();
    ParsedSentence::new(None, tokens).expect("generated tree is valid")
}

fn random_box(rng: &mut impl Rng, size: &ImageSize) -> BBox {
    let (w, h) = (size.width(), size.height());
    let x0 = (rng.gen_range(0.0..w) * 10.0).floor() / 10.0;
    let y0 = (rng.gen_range(0.0..h) * 10.0).floor() / 10.0;
    let x1 = if rng.gen_ratio(1, 40) { x0 } else { (rng.gen_range(x0..=w) * 10.0).floor() / 10.0 };
    let y1 = (rng.gen_range(y0..=h) * 10.0).floor() / 10.0;
    BBox::new(x0, y0, x1.max(x0), y1.max(y0)).expect("ordered corners")
}

/// `base` shifted by a few pixels, kept inside the image.
fn jitter(rng: &mut impl Rng, base: &BBox, size: &ImageSize) -> BBox {
    let mut d = || f64::from(rng.gen_range(-3i32..=3));
    let x0 = (base.x0 + d()).clamp(0.0, size.width());
    let y0 = (base.y0 + d()).clamp(0.0, size.height());
    let x1 = (base.x1 + d()).clamp(x0, size.width());
    let y1 = (base.y1 + d()).clamp(y0, size.height());
    BBox::new(x0, y0, x1, y1).expect("ordered corners")
}

fn rect_mask(b: &BBox) -> Option<Polygon> {
    Polygon::new(vec![
        Point::new(b.x0, b.y0),
        Point::new(b.x1, b.y0),
        Point::new(b.x1, b.y1),
        Point::new(b.x0, b.y1),
    ])
    .ok()
}

fn random_text(rng: &mut impl Rng) -> TextAnnotation {
    let granularity = *Granularity::ALL.choose(rng).expect("non-empty");
    let source = *[TextSource::Specialist, TextSource::Human, TextSource::Refined].choose(rng).expect("non-empty");
    let sentences: Vec<ParsedSentence> = (0..rng.gen_range(1..=2)).map(|_| {
        let n = rng.gen_range(1..=12);
        random_sentence(rng, n)
    }).collect();
    let text = sentences
        .iter()
        .flat_map(|s| s.tokens().iter().map(|t| t.surface.as_str()))
        .collect::<Vec<_>>()
        .join(" ");
    TextAnnotation::new(granularity, text, source).with_parse(sentences)
}

/// A valid record with up to 3 texts, 10 region-text pairs and 6 triplets.
pub fn random_image(rng: &mut impl Rng, id: &str) -> AnnotatedImage {
    let size = ImageSize::new(f64::from(rng.gen_range(64..2048u32)), f64::from(rng.gen_range(64..2048u32)))
        .expect("positive size");
    random_image_with_size(rng, id, size)
}

pub fn random_image_with_size(rng: &mut impl Rng, id: &str, size: ImageSize) -> AnnotatedImage {
    let mut rec = AnnotatedImage::new(id, size);
    for _ in 0..rng.gen_range(0..=3) {
        let mut t = random_text(rng);
        // Keep at most one refined text per granularity, as merging leaves it.
        if t.source == TextSource::Refined
            && rec.texts.iter().any(|o| o.source == TextSource::Refined && o.granularity == t.granularity)
        {
            t.source = TextSource::Human;
        }
        rec.texts.push(t);
    }

    let anchors: Vec<BBox> = (0..rng.gen_range(1..=4)).map(|_| random_box(rng, &size)).collect();
    for _ in 0..rng.gen_range(0..=10) {
        let anchor = anchors.choose(rng).expect("non-empty");
        let b = if rng.gen_bool(0.6) { jitter(rng, anchor, &size) } else { random_box(rng, &size) };
        let region = if rng.gen_ratio(1, 5) {
            PairRegion::Quad(
                QuadBox::from_coords([b.x0, b.y0, b.x1, b.y0, b.x1, b.y1, b.x0, b.y1]).expect("finite"),
            )
        } else {
            PairRegion::Box(b)
        };
        let label = LABELS.choose(rng).expect("non-empty").to_string();
        let mut texts = vec![RegionText { text: label.clone(), role: TextRole::Phrase }];
        if rng.gen_bool(0.5) {
            texts.push(RegionText { text: format!("a small {label}"), role: TextRole::Brief });
        }
        let selected = if rng.gen_bool(0.3) { Some(rng.gen_range(0..texts.len())) } else { None };
        rec.region_texts.push(RegionTextPair { region, texts, selected, confidence: confidence(rng) });
    }

    for (text_ref, t) in rec.texts.iter().enumerate() {
        let words: Vec<(usize, &str)> = {
            let mut out = Vec::new();
            let mut pos = 0;
            for w in t.text.split(' ') {
                out.push((pos, w));
                pos += w.chars().count() + 1;
            }
            out
        };
        for _ in 0..rng.gen_range(0..=2) {
            let &(start, word) = words.choose(rng).expect("non-empty text");
            let regions = (0..rng.gen_range(1..=3))
                .map(|_| {
                    let bbox = random_box(rng, &size);
                    let mask = if rng.gen_ratio(1, 4) { rect_mask(&bbox) } else { None };
                    GroundedBox { bbox, confidence: confidence(rng), mask }
                })
                .collect();
            rec.triplets.push(PhraseRegionTriplet {
                text_ref,
                phrase: PhraseSpan { start, end: start + word.chars().count(), text: word.to_string() },
                regions,
                phrase_confidence: confidence(rng),
            });
        }
    }
    rec
}

const FRAGMENTS: &[&str] = &[
    "cat", "a red car", "STOP", "Café", "3.5 km", "<b>", "x < y", "loc_12>", "<loc", "日本", "two  spaces", "tab\there",
    "end.", "-", "ÿ", "<and", "\"quoted\"",
];

/// Non-empty text free of location markers.
pub fn random_label(rng: &mut impl Rng) -> String {
    let n = rng.gen_range(1..=3);
    (0..n).map(|_| *FRAGMENTS.choose(rng).expect("non-empty")).collect::<Vec<_>>().join(" ")
}

fn sorted_pair(rng: &mut impl Rng) -> (u16, u16) {
    let a = rng.gen_range(0..1000u16);
    let b = rng.gen_range(0..1000u16);
    (a.min(b), a.max(b))
}

/// Box bins with ordered corners.
pub fn random_box_bins(rng: &mut impl Rng) -> QuantizedRegion {
    let (x0, x1) = sorted_pair(rng);
    let (y0, y1) = sorted_pair(rng);
    QuantizedRegion::bbox([x0, y0, x1, y1]).expect("bins in range")
}

/// Axis-aligned quad bins, top-left first, clockwise.
pub fn random_quad_bins(rng: &mut impl Rng) -> QuantizedRegion {
    let (x0, x1) = sorted_pair(rng);
    let (y0, y1) = sorted_pair(rng);
    QuantizedRegion::new(RegionKind::Quad, vec![x0, y0, x1, y0, x1, y1, x0, y1]).expect("bins in range")
}

fn bins_signed_area(bins: &[u16]) -> i64 {
    let n = bins.len() / 2;
    (0..n)
        .map(|i| {
            let j = (i + 1) % n;
            let (ax, ay) = (i64::from(bins[2 * i]), i64::from(bins[2 * i + 1]));
            let (bx, by) = (i64::from(bins[2 * j]), i64::from(bins[2 * j + 1]));
            ax * by - bx * ay
        })
        .sum()
}

/// Star-shaped polygon bins with clockwise (on screen) winding.
pub fn random_mask_bins(rng: &mut impl Rng) -> QuantizedRegion {
    loop {
        let k = rng.gen_range(3..=12);
        let (cx, cy) = (rng.gen_range(100.0..900.0), rng.gen_range(100.0..900.0));
        let mut angles: Vec<f64> = (0..k).map(|_| rng.gen_range(0.0..std::f64::consts::TAU)).collect();
        angles.sort_by(f64::total_cmp);
        let bins: Vec<u16> = angles
            .iter()
            .flat_map(|a| {
                let r = rng.gen_range(20.0..100.0);
                let x = (cx + r * a.cos()).round().clamp(0.0, 999.0) as u16;
                let y = (cy + r * a.sin()).round().clamp(0.0, 999.0) as u16;
                [x, y]
            })
            .collect();
        if bins_signed_area(&bins) > 0 {
            return QuantizedRegion::new(RegionKind::Polygon, bins).expect("bins in range");
        }
    }
}

/// A well-formed response for `task`; list-shaped responses may be empty.
pub fn random_response(rng: &mut impl Rng, task: Task) -> TaskResponse {
    let n = rng.gen_range(0..=5);
    match task.response_shape() {
        ResponseShape::Text => {
            TaskResponse::Text(if rng.gen_ratio(1, 10) { String::new() } else { random_label(rng) })
        }
        ResponseShape::Regions => TaskResponse::Regions((0..n).map(|_| random_box_bins(rng)).collect()),
        ResponseShape::LabeledBoxes => TaskResponse::LabeledRegions(
            (0..n).map(|_| LabeledRegion { label: random_label(rng), region: random_box_bins(rng) }).collect(),
        ),
        ResponseShape::LabeledQuads => TaskResponse::LabeledRegions(
            (0..n).map(|_| LabeledRegion { label: random_label(rng), region: random_quad_bins(rng) }).collect(),
        ),
        ResponseShape::GroundedText => TaskResponse::GroundedText(
            (0..n)
                .map(|_| GroundedPhrase {
                    phrase: random_label(rng),
                    regions: (0..rng.gen_range(1..=3)).map(|_| random_box_bins(rng)).collect(),
                })
                .collect(),
        ),
        ResponseShape::Mask => TaskResponse::Mask(random_mask_bins(rng)),
    }
}

/// A valid prompt for `task`.
pub fn random_prompt(rng: &mut impl Rng, task: Task) -> TaskPrompt {
    match task {
        Task::PhraseGrounding | Task::ReferringExpressionComprehension => TaskPrompt::with_text(task, random_label(rng)),
        Task::OpenVocabularyDetection => {
            let queries: Vec<String> = (0..rng.gen_range(1..=3)).map(|_| random_label(rng)).collect();
            TaskPrompt::with_text(task, queries.join(QUERY_SEPARATOR))
        }
        Task::RegionToText => TaskPrompt::with_region(task, random_box_bins(rng)),
        Task::ReferringSegmentation if rng.gen_bool(0.5) => TaskPrompt::with_region(task, random_box_bins(rng)),
        Task::ReferringSegmentation => TaskPrompt::with_text(task, random_label(rng)),
        _ => TaskPrompt::new(task),
    }
}

/// A structured record whose coordinates all sit on bin centers, so it
/// survives an encode/decode round trip unchanged.
pub fn random_task_record(rng: &mut impl Rng, id: &str, task: Task) -> TaskRecord {
    use crate::codec::record::{GroundedOutput, LabeledOutput, Output};

    let size = ImageSize::new(f64::from(rng.gen_range(1..4000u32)), f64::from(rng.gen_range(1..4000u32)))
        .expect("positive size");
    let prompt = random_prompt(rng, task);
    let px = |q: &QuantizedRegion| dequantize_region(q, &size).expect("valid bins");
    let payload = (prompt.text.is_some() || prompt.region.is_some()).then(|| PromptPayload {
        text: prompt.text.clone(),
        region: prompt.region.as_ref().map(|q| px(q).coords()),
    });
    let output = match decode_to_pixels(&random_response(rng, task), &size) {
        PixelResponse::Text(t) => Output::Text(t),
        PixelResponse::Regions(rs) => Output::Regions(rs.iter().map(Region::coords).collect()),
        PixelResponse::LabeledRegions(items) => Output::LabeledRegions(
            items.into_iter().map(|(label, r)| LabeledOutput { label, region: r.coords() }).collect(),
        ),
        PixelResponse::GroundedText(items) => Output::GroundedText(
            items
                .into_iter()
                .map(|(phrase, rs)| GroundedOutput { phrase, regions: rs.iter().map(Region::coords).collect() })
                .collect(),
        ),
        PixelResponse::Mask(r) => Output::Mask(r.coords()),
    };
    TaskRecord { id: id.to_owned(), task: Some(task), size, prompt: payload, output }
}
