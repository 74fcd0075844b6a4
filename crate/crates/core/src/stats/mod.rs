//! Corpus statistics: annotation counts, semantic-element coverage and
//! box geometry distributions.
//!
//! Every accumulator holds integer counts only, so [`CorpusStats::merge`]
//! is exact and the finished report does not depend on how the corpus was
//! sharded or ordered. Tokens are whitespace-separated words.

mod annotation;
mod histogram;
mod semantic;
mod spatial;

use serde::{Deserialize, Serialize};

pub use annotation::{AnnotationAccumulator, AnnotationRow, AnnotationStats, AnnotationType, TextType};
pub use histogram::{HeatmapGrid, Histogram, DEFAULT_RESOLUTION};
pub use semantic::{SemanticAccumulator, SemanticRow, SemanticStats};
pub use spatial::{BoxSource, SpatialStats, AREA_BINS, ASPECT_BINS, ASPECT_LIMIT};

use crate::engine::AnnotatedImage;

#[derive(Debug, Clone, PartialEq)]
pub struct CorpusStats {
    records: u64,
    annotation: AnnotationAccumulator,
    semantic: SemanticAccumulator,
    region_text: SpatialStats,
    triplets: SpatialStats,
}

impl Default for CorpusStats {
    fn default() -> Self {
        Self::new(DEFAULT_RESOLUTION)
    }
}

impl CorpusStats {
    pub fn new(resolution: usize) -> Self {
        Self {
            records: 0,
            annotation: AnnotationAccumulator::default(),
            semantic: SemanticAccumulator::default(),
            region_text: SpatialStats::new(resolution),
            triplets: SpatialStats::new(resolution),
        }
    }

    pub fn add(&mut self, rec: &AnnotatedImage) {
        self.records += 1;
        self.annotation.add(rec);
        self.semantic.add(rec);
        self.region_text.add(rec, BoxSource::RegionText);
        self.triplets.add(rec, BoxSource::Triplets);
    }

    pub fn merge(&mut self, other: &Self) {
        self.records += other.records;
        self.annotation.merge(&other.annotation);
        self.semantic.merge(&other.semantic);
        self.region_text.merge(&other.region_text);
        self.triplets.merge(&other.triplets);
    }

    pub fn records(&self) -> u64 {
        self.records
    }

    pub fn finish(&self) -> StatsReport {
        StatsReport {
            records: self.records,
            annotation: self.annotation.finish(),
            semantic: self.semantic.finish(),
            spatial: SpatialReport { region_text: self.region_text.clone(), triplets: self.triplets.clone() },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpatialReport {
    pub region_text: SpatialStats,
    pub triplets: SpatialStats,
}

impl SpatialReport {
    pub fn get(&self, source: BoxSource) -> &SpatialStats {
        match source {
            BoxSource::RegionText => &self.region_text,
            BoxSource::Triplets => &self.triplets,
        }
    }
}

/// The stats document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsReport {
    pub records: u64,
    pub annotation: AnnotationStats,
    pub semantic: SemanticStats,
    pub spatial: SpatialReport,
}

impl StatsReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("stats serialize");
        s.push('\n');
        s
    }
}
