use std::collections::BTreeMap;

use super::filter::filter_regions;
use super::record::{AnnotatedImage, Granularity, PhraseRegionTriplet, TextSource};
use super::{EngineError, FilterConfig};

/// Folds a refined record into the original.
///
/// Texts: refined texts are tagged `refined`; only the last one per
/// granularity counts, and it reuses an existing entry with the same
/// granularity and text. Each granularity then keeps a single refined
/// entry: the refined record's if it has one, else the original's last.
/// Triplets on removed texts go with them.
///
/// Triplets: keyed by (text, char span); a refined triplet replaces the
/// original in place, otherwise it is appended.
///
/// Region pairs: originals followed by refined pairs not already present,
/// then [`filter_regions`]. Since originals come first they win
/// confidence ties.
pub fn merge_annotations(
    original: &AnnotatedImage,
    refined: &AnnotatedImage,
    cfg: &FilterConfig,
) -> Result<AnnotatedImage, EngineError> {
    if original.id != refined.id {
        return Err(EngineError::MergeMismatch { field: "id" });
    }
    if original.size != refined.size {
        return Err(EngineError::MergeMismatch { field: "size" });
    }

    let mut texts = original.texts.clone();
    let mut last_of: BTreeMap<Granularity, usize> = BTreeMap::new();
    for (i, t) in refined.texts.iter().enumerate() {
        last_of.insert(t.granularity, i);
    }
    let mut refined_map = vec![None; refined.texts.len()];
    let mut winner: BTreeMap<Granularity, usize> = BTreeMap::new();
    let mut reps: Vec<usize> = last_of.values().copied().collect();
    reps.sort_unstable();
    for ri in reps {
        let t = &refined.texts[ri];
        let idx = match texts.iter().position(|e| e.granularity == t.granularity && e.text == t.text) {
            Some(idx) => idx,
            None => {
                let mut entry = t.clone();
                entry.source = TextSource::Refined;
                texts.push(entry);
                texts.len() - 1
            }
        };
        refined_map[ri] = Some(idx);
        winner.insert(t.granularity, idx);
    }
    for (i, t) in texts.iter().enumerate() {
        if t.source == TextSource::Refined && !last_of.contains_key(&t.granularity) {
            winner.insert(t.granularity, i);
        }
    }

    let mut remap = vec![None; texts.len()];
    let mut kept = Vec::with_capacity(texts.len());
    for (i, t) in texts.into_iter().enumerate() {
        if t.source != TextSource::Refined || winner.get(&t.granularity) == Some(&i) {
            remap[i] = Some(kept.len());
            kept.push(t);
        }
    }

    let mut triplets: Vec<PhraseRegionTriplet> = original
        .triplets
        .iter()
        .filter_map(|t| {
            let text_ref = remap[t.text_ref]?;
            Some(PhraseRegionTriplet { text_ref, ..t.clone() })
        })
        .collect();
    for t in &refined.triplets {
        let Some(text_ref) = refined_map[t.text_ref].and_then(|i| remap[i]) else { continue };
        let t = PhraseRegionTriplet { text_ref, ..t.clone() };
        let key = |x: &PhraseRegionTriplet| (x.text_ref, x.phrase.start, x.phrase.end);
        match triplets.iter().position(|o| key(o) == key(&t)) {
            Some(pos) => triplets[pos] = t,
            None => triplets.push(t),
        }
    }

    let mut pairs = original.region_texts.clone();
    for p in &refined.region_texts {
        if !original.region_texts.contains(p) {
            pairs.push(p.clone());
        }
    }

    Ok(AnnotatedImage {
        fld_schema: original.fld_schema,
        id: original.id.clone(),
        size: original.size,
        texts: kept,
        region_texts: filter_regions(&pairs, cfg),
        triplets,
    })
}
