use serde::{Deserialize, Serialize};

use super::histogram::{HeatmapGrid, Histogram};
use crate::engine::AnnotatedImage;
use crate::geometry::{BBox, ImageSize};

pub const AREA_BINS: usize = 50;
pub const ASPECT_BINS: usize = 50;
/// Log aspect ratios are clipped to `[-ln 20, ln 20]`.
pub const ASPECT_LIMIT: f64 = 20.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoxSource {
    RegionText,
    Triplets,
}

/// Box area, aspect and center distributions for one box source.
///
/// Area is `sqrt(box area / image area)`; aspect is `ln(w / h)`, skipped for
/// boxes with zero width or height.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpatialStats {
    pub boxes: u64,
    pub skipped_aspect: u64,
    pub area: Histogram,
    pub aspect: Histogram,
    pub center_heatmap: HeatmapGrid,
}

impl SpatialStats {
    pub fn new(resolution: usize) -> Self {
        let l = ASPECT_LIMIT.ln();
        Self {
            boxes: 0,
            skipped_aspect: 0,
            area: Histogram::uniform(0.0, 1.0, AREA_BINS),
            aspect: Histogram::uniform(-l, l, ASPECT_BINS),
            center_heatmap: HeatmapGrid::new(resolution),
        }
    }

    pub fn add_box(&mut self, b: &BBox, size: &ImageSize) {
        self.boxes += 1;
        let area = (b.area() / size.area()).clamp(0.0, 1.0).sqrt();
        self.area.add(area);
        if b.width() > 0.0 && b.height() > 0.0 {
            let l = ASPECT_LIMIT.ln();
            self.aspect.add((b.width() / b.height()).ln().clamp(-l, l));
        } else {
            self.skipped_aspect += 1;
        }
        let c = b.center();
        self.center_heatmap.add(c.x / size.width(), c.y / size.height());
    }

    pub fn add(&mut self, rec: &AnnotatedImage, source: BoxSource) {
        match source {
            BoxSource::RegionText => {
                for p in &rec.region_texts {
                    self.add_box(&p.region.bbox(), &rec.size);
                }
            }
            BoxSource::Triplets => {
                for g in rec.triplets.iter().flat_map(|t| &t.regions) {
                    self.add_box(&g.bbox, &rec.size);
                }
            }
        }
    }

    pub fn merge(&mut self, other: &Self) {
        self.boxes += other.boxes;
        self.skipped_aspect += other.skipped_aspect;
        self.area.merge(&other.area);
        self.aspect.merge(&other.aspect);
        self.center_heatmap.merge(&other.center_heatmap);
    }
}
