use serde::{Deserialize, Serialize};

use crate::engine::{AnnotatedImage, Granularity, RegionTextPair, TextRole};

pub(crate) fn whitespace_tokens(s: &str) -> u64 {
    s.split_whitespace().count() as u64
}

fn gi(g: Granularity) -> usize {
    match g {
        Granularity::Brief => 0,
        Granularity::Detailed => 1,
        Granularity::MoreDetailed => 2,
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
struct TextRow {
    texts: u64,
    tokens: u64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
struct RegionRow {
    images: u64,
    regions: u64,
    tokens: u64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
struct GroundedRow {
    texts: u64,
    tokens: u64,
    regions: u64,
    regional_tokens: u64,
}

/// Streaming counts behind the annotation table.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AnnotationAccumulator {
    text: [TextRow; 3],
    region_phrase: RegionRow,
    region_brief: RegionRow,
    grounded: [GroundedRow; 3],
}

fn regional_phrase(p: &RegionTextPair) -> Option<&str> {
    p.text_with_role(TextRole::Phrase)
}

/// Brief text of a region: the selected candidate, else the brief one.
fn regional_brief(p: &RegionTextPair) -> Option<&str> {
    p.selected
        .and_then(|i| p.texts.get(i))
        .map(|t| t.text.as_str())
        .or_else(|| p.text_with_role(TextRole::Brief))
}

type PickText = fn(&RegionTextPair) -> Option<&str>;

impl AnnotationAccumulator {
    pub fn add(&mut self, rec: &AnnotatedImage) {
        for t in &rec.texts {
            let row = &mut self.text[gi(t.granularity)];
            row.texts += 1;
            row.tokens += whitespace_tokens(&t.text);
        }

        let picks: [(&mut RegionRow, PickText); 2] =
            [(&mut self.region_phrase, regional_phrase), (&mut self.region_brief, regional_brief)];
        for (row, pick) in picks {
            let texts: Vec<&str> = rec.region_texts.iter().filter_map(pick).collect();
            if !texts.is_empty() {
                row.images += 1;
                row.regions += texts.len() as u64;
                row.tokens += texts.iter().map(|t| whitespace_tokens(t)).sum::<u64>();
            }
        }

        let mut grounded = vec![(0u64, 0u64); rec.texts.len()];
        for t in &rec.triplets {
            if let Some(slot) = grounded.get_mut(t.text_ref) {
                slot.0 += 1;
                slot.1 += whitespace_tokens(&t.phrase.text);
            }
        }
        for (t, &(regions, regional_tokens)) in rec.texts.iter().zip(&grounded) {
            if regions > 0 {
                let row = &mut self.grounded[gi(t.granularity)];
                row.texts += 1;
                row.tokens += whitespace_tokens(&t.text);
                row.regions += regions;
                row.regional_tokens += regional_tokens;
            }
        }
    }

    pub fn merge(&mut self, other: &Self) {
        for (a, b) in self.text.iter_mut().zip(&other.text) {
            a.texts += b.texts;
            a.tokens += b.tokens;
        }
        for (a, b) in [(&mut self.region_phrase, &other.region_phrase), (&mut self.region_brief, &other.region_brief)] {
            a.images += b.images;
            a.regions += b.regions;
            a.tokens += b.tokens;
        }
        for (a, b) in self.grounded.iter_mut().zip(&other.grounded) {
            a.texts += b.texts;
            a.tokens += b.tokens;
            a.regions += b.regions;
            a.regional_tokens += b.regional_tokens;
        }
    }

    /// Rows with at least one annotation; empty cells are `None`.
    pub fn finish(&self) -> AnnotationStats {
        let ratio = |a: u64, b: u64| a as f64 / b as f64;
        let mut rows = Vec::new();
        for g in Granularity::ALL {
            let r = self.text[gi(g)];
            if r.texts > 0 {
                rows.push(AnnotationRow {
                    annotation_type: AnnotationType::Text,
                    text_type: TextType::from(g),
                    image_annotation_count: r.texts,
                    avg_tokens: Some(ratio(r.tokens, r.texts)),
                    region_count: None,
                    avg_regions_per_image: None,
                    avg_regional_tokens: None,
                });
            }
        }
        for (r, text_type) in [(self.region_phrase, TextType::Phrase), (self.region_brief, TextType::Brief)] {
            if r.images > 0 {
                rows.push(AnnotationRow {
                    annotation_type: AnnotationType::RegionText,
                    text_type,
                    image_annotation_count: r.images,
                    avg_tokens: None,
                    region_count: Some(r.regions),
                    avg_regions_per_image: Some(ratio(r.regions, r.images)),
                    avg_regional_tokens: Some(ratio(r.tokens, r.regions)),
                });
            }
        }
        for g in Granularity::ALL {
            let r = self.grounded[gi(g)];
            if r.texts > 0 {
                rows.push(AnnotationRow {
                    annotation_type: AnnotationType::TextPhraseRegion,
                    text_type: TextType::from(g),
                    image_annotation_count: r.texts,
                    avg_tokens: Some(ratio(r.tokens, r.texts)),
                    region_count: Some(r.regions),
                    avg_regions_per_image: Some(ratio(r.regions, r.texts)),
                    avg_regional_tokens: Some(ratio(r.regional_tokens, r.regions)),
                });
            }
        }
        AnnotationStats { rows }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnnotationType {
    Text,
    RegionText,
    TextPhraseRegion,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TextType {
    Brief,
    Detailed,
    MoreDetailed,
    Phrase,
}

impl From<Granularity> for TextType {
    fn from(g: Granularity) -> Self {
        match g {
            Granularity::Brief => TextType::Brief,
            Granularity::Detailed => TextType::Detailed,
            Granularity::MoreDetailed => TextType::MoreDetailed,
        }
    }
}

/// One table row. For region-text rows the image count is the number of
/// images with such regions; for text-phrase-region rows it is the number
/// of grounded texts, and regions (phrases) are averaged per text.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotationRow {
    pub annotation_type: AnnotationType,
    pub text_type: TextType,
    pub image_annotation_count: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub avg_tokens: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub region_count: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub avg_regions_per_image: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub avg_regional_tokens: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotationStats {
    pub rows: Vec<AnnotationRow>,
}

impl AnnotationStats {
    pub fn row(&self, annotation_type: AnnotationType, text_type: TextType) -> Option<&AnnotationRow> {
        self.rows.iter().find(|r| r.annotation_type == annotation_type && r.text_type == text_type)
    }
}
