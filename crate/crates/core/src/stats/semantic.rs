use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::annotation::whitespace_tokens;
use crate::engine::{AnnotatedImage, Granularity, TextAnnotation};
use crate::linguistics::{classify_token, token_complexity, SemanticElement};

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Per-annotation mean degrees kept as reduced fractions with
/// multiplicities, so merged accumulators sum in one fixed order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
struct MeanOfMeans(BTreeMap<(u64, u64), u64>);

impl MeanOfMeans {
    fn add(&mut self, sum: u64, n: u64) {
        let g = gcd(sum, n).max(1);
        *self.0.entry((sum / g, n / g)).or_insert(0) += 1;
    }

    fn merge(&mut self, other: &Self) {
        for (k, v) in &other.0 {
            *self.0.entry(*k).or_insert(0) += v;
        }
    }

    fn mean(&self) -> Option<f64> {
        let count: u64 = self.0.values().sum();
        if count == 0 {
            return None;
        }
        let total: f64 = self.0.iter().map(|(&(s, n), &c)| s as f64 / n as f64 * c as f64).sum();
        Some(total / count as f64)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
struct TextTypeAcc {
    annotations: u64,
    tokens: u64,
    objects: u64,
    attributes: u64,
    actions: u64,
    proper_nouns: u64,
    object_complexity: MeanOfMeans,
    action_complexity: MeanOfMeans,
}

impl TextTypeAcc {
    fn add(&mut self, t: &TextAnnotation) {
        let parse = t.parse.as_deref().unwrap_or_default();
        self.annotations += 1;
        self.tokens += whitespace_tokens(&t.text);
        let (mut obj_deg, mut obj_n, mut act_deg, mut act_n) = (0u64, 0u64, 0u64, 0u64);
        for s in parse {
            for tok in s.tokens() {
                let degree = token_complexity(s, tok.index).expect("index from the sentence") as u64;
                match classify_token(tok) {
                    SemanticElement::Object => {
                        self.objects += 1;
                        obj_n += 1;
                        obj_deg += degree;
                    }
                    SemanticElement::Action => {
                        self.actions += 1;
                        act_n += 1;
                        act_deg += degree;
                    }
                    SemanticElement::Attribute => self.attributes += 1,
                    SemanticElement::ProperNoun => self.proper_nouns += 1,
                    SemanticElement::Other => {}
                }
            }
        }
        if obj_n > 0 {
            self.object_complexity.add(obj_deg, obj_n);
        }
        if act_n > 0 {
            self.action_complexity.add(act_deg, act_n);
        }
    }

    fn merge(&mut self, o: &Self) {
        self.annotations += o.annotations;
        self.tokens += o.tokens;
        self.objects += o.objects;
        self.attributes += o.attributes;
        self.actions += o.actions;
        self.proper_nouns += o.proper_nouns;
        self.object_complexity.merge(&o.object_complexity);
        self.action_complexity.merge(&o.action_complexity);
    }

    fn finish(&self) -> SemanticRow {
        let n = self.annotations as f64;
        SemanticRow {
            annotations: self.annotations,
            avg_tokens: self.tokens as f64 / n,
            avg_objects: self.objects as f64 / n,
            avg_attributes: self.attributes as f64 / n,
            avg_actions: self.actions as f64 / n,
            avg_proper_nouns: self.proper_nouns as f64 / n,
            avg_object_complexity: self.object_complexity.mean(),
            avg_action_complexity: self.action_complexity.mean(),
        }
    }
}

/// Streaming semantic-element counts per text type. A record with any
/// unparsed text is skipped whole and counted.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SemanticAccumulator {
    by_type: BTreeMap<Granularity, TextTypeAcc>,
    skipped_records: u64,
}

impl SemanticAccumulator {
    /// Returns false when the record was skipped.
    pub fn add(&mut self, rec: &AnnotatedImage) -> bool {
        if rec.texts.iter().any(|t| t.parse.is_none()) {
            self.skipped_records += 1;
            return false;
        }
        for t in &rec.texts {
            self.by_type.entry(t.granularity).or_default().add(t);
        }
        true
    }

    pub fn merge(&mut self, other: &Self) {
        for (g, acc) in &other.by_type {
            self.by_type.entry(*g).or_default().merge(acc);
        }
        self.skipped_records += other.skipped_records;
    }

    pub fn finish(&self) -> SemanticStats {
        SemanticStats {
            skipped_records: self.skipped_records,
            by_text_type: self.by_type.iter().map(|(g, a)| (*g, a.finish())).collect(),
        }
    }
}

/// Averages per annotation. Complexities average, over annotations that
/// have the element, each annotation's mean token degree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SemanticRow {
    pub annotations: u64,
    pub avg_tokens: f64,
    pub avg_objects: f64,
    pub avg_attributes: f64,
    pub avg_actions: f64,
    pub avg_proper_nouns: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub avg_object_complexity: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub avg_action_complexity: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SemanticStats {
    pub skipped_records: u64,
    pub by_text_type: BTreeMap<Granularity, SemanticRow>,
}
