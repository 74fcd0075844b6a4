use serde::{Deserialize, Serialize};

use super::record::{AnnotatedImage, PhraseRegionTriplet, RegionTextPair, TextAnnotation};
use super::{EngineError, FilterConfig};
use crate::geometry::nms_indices;
use crate::linguistics::{classify_token, token_complexity, SemanticElement};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DropReason {
    ExcessiveObjects,
    LowObjectComplexity,
    LowActionComplexity,
    LowBoxConfidence,
    NmsSuppressed,
    BlacklistedPhrase,
    LowPhraseConfidence,
    LowTripletBoxConfidence,
    EmptyTriplet,
    OrphanedTriplet,
}

impl DropReason {
    pub fn as_str(self) -> &'static str {
        match self {
            DropReason::ExcessiveObjects => "excessive_objects",
            DropReason::LowObjectComplexity => "low_object_complexity",
            DropReason::LowActionComplexity => "low_action_complexity",
            DropReason::LowBoxConfidence => "low_box_confidence",
            DropReason::NmsSuppressed => "nms_suppressed",
            DropReason::BlacklistedPhrase => "blacklisted_phrase",
            DropReason::LowPhraseConfidence => "low_phrase_confidence",
            DropReason::LowTripletBoxConfidence => "low_triplet_box_confidence",
            DropReason::EmptyTriplet => "empty_triplet",
            DropReason::OrphanedTriplet => "orphaned_triplet",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TextDecision {
    Keep,
    Drop(DropReason),
}

/// Drop counts per reason. Texts, region pairs and triplets count once
/// each; `low_triplet_box_confidence` counts boxes.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterReport {
    pub excessive_objects: u64,
    pub low_object_complexity: u64,
    pub low_action_complexity: u64,
    pub low_box_confidence: u64,
    pub nms_suppressed: u64,
    pub blacklisted_phrase: u64,
    pub low_phrase_confidence: u64,
    pub low_triplet_box_confidence: u64,
    pub empty_triplet: u64,
    pub orphaned_triplet: u64,
}

impl FilterReport {
    fn slot(&mut self, reason: DropReason) -> &mut u64 {
        match reason {
            DropReason::ExcessiveObjects => &mut self.excessive_objects,
            DropReason::LowObjectComplexity => &mut self.low_object_complexity,
            DropReason::LowActionComplexity => &mut self.low_action_complexity,
            DropReason::LowBoxConfidence => &mut self.low_box_confidence,
            DropReason::NmsSuppressed => &mut self.nms_suppressed,
            DropReason::BlacklistedPhrase => &mut self.blacklisted_phrase,
            DropReason::LowPhraseConfidence => &mut self.low_phrase_confidence,
            DropReason::LowTripletBoxConfidence => &mut self.low_triplet_box_confidence,
            DropReason::EmptyTriplet => &mut self.empty_triplet,
            DropReason::OrphanedTriplet => &mut self.orphaned_triplet,
        }
    }

    pub fn add(&mut self, reason: DropReason, n: u64) {
        *self.slot(reason) += n;
    }

    pub fn get(&self, reason: DropReason) -> u64 {
        match reason {
            DropReason::ExcessiveObjects => self.excessive_objects,
            DropReason::LowObjectComplexity => self.low_object_complexity,
            DropReason::LowActionComplexity => self.low_action_complexity,
            DropReason::LowBoxConfidence => self.low_box_confidence,
            DropReason::NmsSuppressed => self.nms_suppressed,
            DropReason::BlacklistedPhrase => self.blacklisted_phrase,
            DropReason::LowPhraseConfidence => self.low_phrase_confidence,
            DropReason::LowTripletBoxConfidence => self.low_triplet_box_confidence,
            DropReason::EmptyTriplet => self.empty_triplet,
            DropReason::OrphanedTriplet => self.orphaned_triplet,
        }
    }

    pub fn merge(&mut self, other: &FilterReport) {
        for r in ALL_REASONS {
            self.add(r, other.get(r));
        }
    }

    pub fn total(&self) -> u64 {
        ALL_REASONS.iter().map(|&r| self.get(r)).sum()
    }
}

const ALL_REASONS: [DropReason; 10] = [
    DropReason::ExcessiveObjects,
    DropReason::LowObjectComplexity,
    DropReason::LowActionComplexity,
    DropReason::LowBoxConfidence,
    DropReason::NmsSuppressed,
    DropReason::BlacklistedPhrase,
    DropReason::LowPhraseConfidence,
    DropReason::LowTripletBoxConfidence,
    DropReason::EmptyTriplet,
    DropReason::OrphanedTriplet,
];

fn mean(sum: usize, n: usize) -> f64 {
    if n == 0 {
        0.0
    } else {
        sum as f64 / n as f64
    }
}

/// Keep/drop decision for one text, counting over every parsed sentence.
/// An object-free text has mean object complexity 0; an action-free text
/// passes the action rule.
pub fn filter_text(t: &TextAnnotation, cfg: &FilterConfig) -> Result<TextDecision, EngineError> {
    let parse = t.parse.as_ref().ok_or(EngineError::MissingParse { index: 0 })?;
    let (mut objects, mut object_degree, mut actions, mut action_degree) = (0usize, 0usize, 0usize, 0usize);
    for s in parse {
        for tok in s.tokens() {
            let degree = token_complexity(s, tok.index).expect("index from the sentence");
            match classify_token(tok) {
                SemanticElement::Object => {
                    objects += 1;
                    object_degree += degree;
                }
                SemanticElement::Action => {
                    actions += 1;
                    action_degree += degree;
                }
                _ => {}
            }
        }
    }
    let decision = if objects as u64 > u64::from(cfg.max_objects) {
        TextDecision::Drop(DropReason::ExcessiveObjects)
    } else if mean(object_degree, objects) < cfg.min_object_complexity {
        TextDecision::Drop(DropReason::LowObjectComplexity)
    } else if actions > 0 && mean(action_degree, actions) < cfg.min_action_complexity {
        TextDecision::Drop(DropReason::LowActionComplexity)
    } else {
        TextDecision::Keep
    };
    Ok(decision)
}

pub(crate) fn filter_regions_counted(
    pairs: &[RegionTextPair],
    cfg: &FilterConfig,
    report: &mut FilterReport,
) -> Vec<RegionTextPair> {
    let confident: Vec<&RegionTextPair> =
        pairs.iter().filter(|p| p.confidence >= cfg.box_confidence_threshold).collect();
    report.add(DropReason::LowBoxConfidence, (pairs.len() - confident.len()) as u64);
    let threshold = if cfg.nms_iou_threshold >= 1.0 { f64::INFINITY } else { cfg.nms_iou_threshold };
    let kept = nms_indices(
        confident.len(),
        threshold,
        |i| confident[i].region.bbox(),
        |i| confident[i].confidence,
        |i| if cfg.class_aware_nms { confident[i].class_text() } else { None },
    );
    report.add(DropReason::NmsSuppressed, (confident.len() - kept.len()) as u64);
    kept.into_iter().map(|i| confident[i].clone()).collect()
}

/// Confidence threshold, then NMS keyed by each pair's class text. The
/// result is ordered by descending confidence, ties in input order.
pub fn filter_regions(pairs: &[RegionTextPair], cfg: &FilterConfig) -> Vec<RegionTextPair> {
    filter_regions_counted(pairs, cfg, &mut FilterReport::default())
}

pub(crate) fn filter_triplets_counted(
    trips: &[PhraseRegionTriplet],
    cfg: &FilterConfig,
    report: &mut FilterReport,
) -> Vec<PhraseRegionTriplet> {
    let mut out = Vec::with_capacity(trips.len());
    for t in trips {
        if cfg.is_blacklisted(&t.phrase.text) {
            report.add(DropReason::BlacklistedPhrase, 1);
            continue;
        }
        if t.phrase_confidence < cfg.phrase_confidence_threshold {
            report.add(DropReason::LowPhraseConfidence, 1);
            continue;
        }
        let mut t = t.clone();
        let before = t.regions.len();
        t.regions.retain(|g| g.confidence >= cfg.box_confidence_threshold);
        report.add(DropReason::LowTripletBoxConfidence, (before - t.regions.len()) as u64);
        if t.regions.is_empty() {
            report.add(DropReason::EmptyTriplet, 1);
            continue;
        }
        out.push(t);
    }
    out
}

pub fn filter_triplets(trips: &[PhraseRegionTriplet], cfg: &FilterConfig) -> Vec<PhraseRegionTriplet> {
    filter_triplets_counted(trips, cfg, &mut FilterReport::default())
}

/// Runs every filter over one record. Triplets grounding a dropped text are
/// dropped as orphans; the rest are re-indexed.
pub fn filter_record(rec: &AnnotatedImage, cfg: &FilterConfig) -> Result<(AnnotatedImage, FilterReport), EngineError> {
    let mut report = FilterReport::default();
    let mut remap = vec![None; rec.texts.len()];
    let mut texts = Vec::with_capacity(rec.texts.len());
    for (i, t) in rec.texts.iter().enumerate() {
        let decision = if cfg.text_filters {
            filter_text(t, cfg).map_err(|_| EngineError::MissingParse { index: i })?
        } else {
            TextDecision::Keep
        };
        match decision {
            TextDecision::Keep => {
                remap[i] = Some(texts.len());
                texts.push(t.clone());
            }
            TextDecision::Drop(reason) => report.add(reason, 1),
        }
    }
    let mut anchored = Vec::with_capacity(rec.triplets.len());
    for t in &rec.triplets {
        match remap.get(t.text_ref).copied().flatten() {
            Some(r) => {
                let mut t = t.clone();
                t.text_ref = r;
                anchored.push(t);
            }
            None => report.add(DropReason::OrphanedTriplet, 1),
        }
    }
    let out = AnnotatedImage {
        fld_schema: rec.fld_schema,
        id: rec.id.clone(),
        size: rec.size,
        texts,
        region_texts: filter_regions_counted(&rec.region_texts, cfg, &mut report),
        triplets: filter_triplets_counted(&anchored, cfg, &mut report),
    };
    Ok((out, report))
}
