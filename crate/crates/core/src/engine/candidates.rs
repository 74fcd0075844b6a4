use std::collections::HashSet;

use super::record::{RegionText, TextRole};
use super::EngineError;
use crate::linguistics::{noun_chunks, ParsedSentence};

/// Candidate texts for a region: the category label as the phrase, the
/// brief text, and each noun chunk of the brief's parse. Duplicates are
/// removed ignoring case, keeping the first.
pub fn generate_region_text_candidates(
    label: &str,
    brief: &str,
    parse: &[ParsedSentence],
) -> Result<Vec<RegionText>, EngineError> {
    if label.trim().is_empty() {
        return Err(EngineError::EmptyLabel);
    }
    let chunks = parse
        .iter()
        .flat_map(|s| noun_chunks(s).into_iter().map(move |c| c.text(s)));
    let all = std::iter::once((label.to_string(), TextRole::Phrase))
        .chain((!brief.trim().is_empty()).then(|| (brief.to_string(), TextRole::Brief)))
        .chain(chunks.map(|c| (c, TextRole::NounChunk)));

    let mut seen = HashSet::new();
    Ok(all
        .filter(|(text, _)| seen.insert(text.trim().to_lowercase()))
        .map(|(text, role)| RegionText { text, role })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linguistics::test_support::sentence;

    fn texts(c: &[RegionText]) -> Vec<(&str, TextRole)> {
        c.iter().map(|t| (t.text.as_str(), t.role)).collect()
    }

    #[test]
    fn chunk_equal_to_brief_is_deduplicated() {
        let parse = sentence(&[("a", "DET", 3, "det"), ("brown", "ADJ", 3, "amod"), ("dog", "NOUN", 0, "root")]);
        let c = generate_region_text_candidates("dog", "a brown dog", &[parse]).unwrap();
        assert_eq!(texts(&c), vec![("dog", TextRole::Phrase), ("a brown dog", TextRole::Brief)]);
    }

    #[test]
    fn empty_brief_gives_label_only() {
        let c = generate_region_text_candidates("dog", "", &[]).unwrap();
        assert_eq!(texts(&c), vec![("dog", TextRole::Phrase)]);
        assert_eq!(generate_region_text_candidates(" ", "x", &[]), Err(EngineError::EmptyLabel));
    }

    #[test]
    fn two_chunks_give_four_candidates() {
        // "a man holds the red cup"
        let parse = sentence(&[
            ("a", "DET", 2, "det"),
            ("man", "NOUN", 3, "nsubj"),
            ("holds", "VERB", 0, "root"),
            ("the", "DET", 6, "det"),
            ("red", "ADJ", 6, "amod"),
            ("cup", "NOUN", 3, "obj"),
        ]);
        let c = generate_region_text_candidates("person", "a man holds the red cup", std::slice::from_ref(&parse)).unwrap();
        assert_eq!(
            texts(&c),
            vec![
                ("person", TextRole::Phrase),
                ("a man holds the red cup", TextRole::Brief),
                ("a man", TextRole::NounChunk),
                ("the red cup", TextRole::NounChunk),
            ]
        );
        let c = generate_region_text_candidates("Man", "a man holds the red cup", &[parse]).unwrap();
        assert_eq!(c.len(), 4);
        let c = generate_region_text_candidates("A MAN", "a man holds the red cup", &[sentence(&[
            ("a", "DET", 2, "det"),
            ("man", "NOUN", 0, "root"),
        ])])
        .unwrap();
        assert_eq!(texts(&c), vec![("A MAN", TextRole::Phrase), ("a man holds the red cup", TextRole::Brief)]);
    }
}
