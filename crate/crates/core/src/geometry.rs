//! Continuous regions, 1,000-bin coordinate quantization, IoU and greedy NMS.
//!
//! Coordinates are pixels in screen convention (origin top-left, y down).
//! A coordinate `v` on an axis of length `extent` maps to bin
//! `floor(v * 1000 / extent)`, clamped so that `v == extent` lands in the
//! last bin. Dequantization returns the bin center, which makes
//! `quantize(dequantize(b)) == b` hold for every bin.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Number of quantization bins per image axis.
pub const NUM_BINS: u16 = 1000;

/// Largest valid bin index.
pub const MAX_BIN: u16 = NUM_BINS - 1;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("extent must be positive and finite, got {0}")]
    BadExtent(f64),
    #[error("coordinate {value} outside [0, {extent}]")]
    CoordOutOfRange { value: f64, extent: f64 },
    #[error("bin index {0} outside [0, 999]")]
    BinOutOfRange(u32),
    #[error("vertex {vertex}: {source}")]
    Vertex {
        vertex: usize,
        #[source]
        source: Box<GeometryError>,
    },
    #[error("invalid box ({x0}, {y0}, {x1}, {y1}): corners must be finite with x0 <= x1 and y0 <= y1")]
    BadBox { x0: f64, y0: f64, x1: f64, y1: f64 },
    #[error("non-finite vertex coordinate")]
    NonFinite,
    #[error("polygon needs at least 3 vertices, got {0}")]
    TooFewVertices(usize),
    #[error("polygon vertices are counter-clockwise")]
    CounterClockwise,
    #[error("{kind} region needs {expected} bins, got {got}")]
    BinCount {
        kind: RegionKind,
        expected: &'static str,
        got: usize,
    },
    #[error("expected {expected} coordinates, got {got}")]
    CoordCount { expected: &'static str, got: usize },
    #[error("score {0} outside [0, 1]")]
    BadScore(f64),
}

pub type Result<T> = std::result::Result<T, GeometryError>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSize")]
pub struct ImageSize {
    width: f64,
    height: f64,
}

#[derive(Deserialize)]
struct RawSize {
    width: f64,
    height: f64,
}

impl TryFrom<RawSize> for ImageSize {
    type Error = GeometryError;

    fn try_from(raw: RawSize) -> Result<Self> {
        ImageSize::new(raw.width, raw.height)
    }
}

impl ImageSize {
    pub fn new(width: f64, height: f64) -> Result<Self> {
        check_extent(width)?;
        check_extent(height)?;
        Ok(Self { width, height })
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    pub fn height(&self) -> f64 {
        self.height
    }

    pub fn area(&self) -> f64 {
        self.width * self.height
    }

    fn contains(&self, p: Point) -> bool {
        (0.0..=self.width).contains(&p.x) && (0.0..=self.height).contains(&p.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }
}

/// Axis-aligned box given by its top-left `(x0, y0)` and bottom-right
/// `(x1, y1)` corners. Zero-area boxes are valid. Serializes as
/// `[x0, y0, x1, y1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 4]", into = "[f64; 4]")]
pub struct BBox {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl BBox {
    pub fn new(x0: f64, y0: f64, x1: f64, y1: f64) -> Result<Self> {
        let finite = [x0, y0, x1, y1].iter().all(|v| v.is_finite());
        if !finite || x0 > x1 || y0 > y1 {
            return Err(GeometryError::BadBox { x0, y0, x1, y1 });
        }
        Ok(Self { x0, y0, x1, y1 })
    }

    pub fn width(&self) -> f64 {
        self.x1 - self.x0
    }

    pub fn height(&self) -> f64 {
        self.y1 - self.y0
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn center(&self) -> Point {
        Point::new((self.x0 + self.x1) / 2.0, (self.y0 + self.y1) / 2.0)
    }

    pub fn corners(&self) -> [f64; 4] {
        [self.x0, self.y0, self.x1, self.y1]
    }

    pub fn within(&self, size: &ImageSize) -> bool {
        size.contains(Point::new(self.x0, self.y0)) && size.contains(Point::new(self.x1, self.y1))
    }

    /// Smallest box enclosing all the given points.
    pub fn enclosing(points: &[Point]) -> Option<Self> {
        let first = points.first()?;
        let mut b = BBox { x0: first.x, y0: first.y, x1: first.x, y1: first.y };
        for p in &points[1..] {
            b.x0 = b.x0.min(p.x);
            b.y0 = b.y0.min(p.y);
            b.x1 = b.x1.max(p.x);
            b.y1 = b.y1.max(p.y);
        }
        Some(b)
    }
}

impl TryFrom<[f64; 4]> for BBox {
    type Error = GeometryError;

    fn try_from(c: [f64; 4]) -> Result<Self> {
        BBox::new(c[0], c[1], c[2], c[3])
    }
}

impl From<BBox> for [f64; 4] {
    fn from(b: BBox) -> Self {
        b.corners()
    }
}

/// Text-line quadrilateral. The first vertex is the top-left corner and the
/// rest follow clockwise; the stored order is taken as given.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadBox {
    pub vertices: [Point; 4],
}

impl QuadBox {
    pub fn new(vertices: [Point; 4]) -> Result<Self> {
        if vertices.iter().any(|p| !p.x.is_finite() || !p.y.is_finite()) {
            return Err(GeometryError::NonFinite);
        }
        Ok(Self { vertices })
    }

    pub fn from_coords(c: [f64; 8]) -> Result<Self> {
        Self::new([
            Point::new(c[0], c[1]),
            Point::new(c[2], c[3]),
            Point::new(c[4], c[5]),
            Point::new(c[6], c[7]),
        ])
    }

    pub fn coords(&self) -> [f64; 8] {
        let v = &self.vertices;
        [v[0].x, v[0].y, v[1].x, v[1].y, v[2].x, v[2].y, v[3].x, v[3].y]
    }

    pub fn bounding_box(&self) -> BBox {
        BBox::enclosing(&self.vertices).expect("quad has four vertices")
    }

    pub fn within(&self, size: &ImageSize) -> bool {
        self.vertices.iter().all(|p| size.contains(*p))
    }
}

/// Simple polygon with at least three vertices in clockwise screen order.
/// Self-intersection is not checked. Serializes as a flat `[x, y, ...]`
/// array.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Polygon {
    vertices: Vec<Point>,
}

impl Polygon {
    /// Builds a polygon, rejecting fewer than three vertices and strictly
    /// counter-clockwise winding. Degenerate (zero-area) outlines pass.
    pub fn new(vertices: Vec<Point>) -> Result<Self> {
        let p = Self::from_vertices(vertices)?;
        if p.signed_area() < 0.0 {
            return Err(GeometryError::CounterClockwise);
        }
        Ok(p)
    }

    /// Builds a polygon without the winding check. Used when recovering
    /// outlines from quantized bins, where rounding may flip thin shapes.
    pub fn from_vertices(vertices: Vec<Point>) -> Result<Self> {
        if vertices.len() < 3 {
            return Err(GeometryError::TooFewVertices(vertices.len()));
        }
        if vertices.iter().any(|p| !p.x.is_finite() || !p.y.is_finite()) {
            return Err(GeometryError::NonFinite);
        }
        Ok(Self { vertices })
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn coords(&self) -> Vec<f64> {
        self.vertices.iter().flat_map(|p| [p.x, p.y]).collect()
    }

    /// Shoelace area on raw screen coordinates. With y pointing down a
    /// clockwise outline (as seen on screen) has a non-negative value.
    pub fn signed_area(&self) -> f64 {
        let n = self.vertices.len();
        let twice: f64 = (0..n)
            .map(|i| {
                let a = self.vertices[i];
                let b = self.vertices[(i + 1) % n];
                a.x * b.y - b.x * a.y
            })
            .sum();
        twice / 2.0
    }

    pub fn is_clockwise(&self) -> bool {
        self.signed_area() >= 0.0
    }

    pub fn within(&self, size: &ImageSize) -> bool {
        self.vertices.iter().all(|p| size.contains(*p))
    }

    pub fn bounding_box(&self) -> BBox {
        BBox::enclosing(&self.vertices).expect("polygon has vertices")
    }
}

impl TryFrom<Vec<f64>> for Polygon {
    type Error = GeometryError;

    fn try_from(c: Vec<f64>) -> Result<Self> {
        if !c.len().is_multiple_of(2) {
            return Err(GeometryError::CoordCount { expected: "an even number of", got: c.len() });
        }
        Polygon::new(c.chunks_exact(2).map(|p| Point::new(p[0], p[1])).collect())
    }
}

impl From<Polygon> for Vec<f64> {
    fn from(p: Polygon) -> Self {
        p.coords()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Region {
    Box(BBox),
    Quad(QuadBox),
    Polygon(Polygon),
}

impl Region {
    pub fn kind(&self) -> RegionKind {
        match self {
            Region::Box(_) => RegionKind::Box,
            Region::Quad(_) => RegionKind::Quad,
            Region::Polygon(_) => RegionKind::Polygon,
        }
    }

    pub fn coords(&self) -> Vec<f64> {
        match self {
            Region::Box(b) => b.corners().to_vec(),
            Region::Quad(q) => q.coords().to_vec(),
            Region::Polygon(p) => p.coords(),
        }
    }

    pub fn within(&self, size: &ImageSize) -> bool {
        match self {
            Region::Box(b) => b.within(size),
            Region::Quad(q) => q.within(size),
            Region::Polygon(p) => p.within(size),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegionKind {
    Box,
    Quad,
    Polygon,
}

impl fmt::Display for RegionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RegionKind::Box => "box",
            RegionKind::Quad => "quad",
            RegionKind::Polygon => "polygon",
        })
    }
}

/// A region expressed as bin indices, in the same coordinate order as the
/// continuous form: `x0 y0 x1 y1` for boxes, `x y` pairs otherwise.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct QuantizedRegion {
    kind: RegionKind,
    bins: Vec<u16>,
}

impl QuantizedRegion {
    pub fn new(kind: RegionKind, bins: Vec<u16>) -> Result<Self> {
        if let Some(&b) = bins.iter().find(|&&b| b > MAX_BIN) {
            return Err(GeometryError::BinOutOfRange(b.into()));
        }
        let ok = match kind {
            RegionKind::Box => bins.len() == 4,
            RegionKind::Quad => bins.len() == 8,
            RegionKind::Polygon => bins.len() >= 6 && bins.len().is_multiple_of(2),
        };
        if !ok {
            return Err(GeometryError::BinCount {
                kind,
                expected: expected_bins(kind),
                got: bins.len(),
            });
        }
        Ok(Self { kind, bins })
    }

    pub fn bbox(bins: [u16; 4]) -> Result<Self> {
        Self::new(RegionKind::Box, bins.to_vec())
    }

    pub fn kind(&self) -> RegionKind {
        self.kind
    }

    pub fn bins(&self) -> &[u16] {
        &self.bins
    }
}

pub(crate) fn expected_bins(kind: RegionKind) -> &'static str {
    match kind {
        RegionKind::Box => "4",
        RegionKind::Quad => "8",
        RegionKind::Polygon => "an even number >= 6 of",
    }
}

fn check_extent(extent: f64) -> Result<()> {
    if extent.is_finite() && extent > 0.0 {
        Ok(())
    } else {
        Err(GeometryError::BadExtent(extent))
    }
}

/// Maps a pixel coordinate in `[0, extent]` to its bin in `[0, 999]`.
pub fn quantize_coord(v: f64, extent: f64) -> Result<u16> {
    check_extent(extent)?;
    if !(0.0..=extent).contains(&v) {
        return Err(GeometryError::CoordOutOfRange { value: v, extent });
    }
    let bin = (v * f64::from(NUM_BINS) / extent).floor();
    Ok((bin as u16).min(MAX_BIN))
}

/// Center of bin `b` in pixels.
pub fn dequantize_coord(b: u16, extent: f64) -> Result<f64> {
    check_extent(extent)?;
    if b > MAX_BIN {
        return Err(GeometryError::BinOutOfRange(b.into()));
    }
    Ok((f64::from(b) + 0.5) * extent / f64::from(NUM_BINS))
}

fn quantize_points(points: &[Point], size: &ImageSize) -> Result<Vec<u16>> {
    let mut bins = Vec::with_capacity(points.len() * 2);
    for (vertex, p) in points.iter().enumerate() {
        let wrap = |e| GeometryError::Vertex { vertex, source: Box::new(e) };
        bins.push(quantize_coord(p.x, size.width).map_err(wrap)?);
        bins.push(quantize_coord(p.y, size.height).map_err(wrap)?);
    }
    Ok(bins)
}

pub fn quantize_region(region: &Region, size: &ImageSize) -> Result<QuantizedRegion> {
    let (kind, bins) = match region {
        Region::Box(b) => {
            let corners = [Point::new(b.x0, b.y0), Point::new(b.x1, b.y1)];
            (RegionKind::Box, quantize_points(&corners, size)?)
        }
        Region::Quad(q) => (RegionKind::Quad, quantize_points(&q.vertices, size)?),
        Region::Polygon(p) => (RegionKind::Polygon, quantize_points(&p.vertices, size)?),
    };
    QuantizedRegion::new(kind, bins)
}

pub fn dequantize_region(q: &QuantizedRegion, size: &ImageSize) -> Result<Region> {
    let mut points = Vec::with_capacity(q.bins.len() / 2);
    for pair in q.bins.chunks_exact(2) {
        points.push(Point::new(
            dequantize_coord(pair[0], size.width)?,
            dequantize_coord(pair[1], size.height)?,
        ));
    }
    Ok(match q.kind {
        // Bin centers are monotone in the bin index, so corner order holds.
        RegionKind::Box => Region::Box(BBox {
            x0: points[0].x,
            y0: points[0].y,
            x1: points[1].x,
            y1: points[1].y,
        }),
        RegionKind::Quad => Region::Quad(QuadBox {
            vertices: [points[0], points[1], points[2], points[3]],
        }),
        RegionKind::Polygon => Region::Polygon(Polygon { vertices: points }),
    })
}

/// Intersection over union; 0 when the union is empty.
pub fn iou(a: &BBox, b: &BBox) -> f64 {
    let w = (a.x1.min(b.x1) - a.x0.max(b.x0)).max(0.0);
    let h = (a.y1.min(b.y1) - a.y0.max(b.y0)).max(0.0);
    let inter = w * h;
    let union = a.area() + b.area() - inter;
    if union <= 0.0 {
        0.0
    } else {
        (inter / union).clamp(0.0, 1.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoredBox {
    pub bbox: BBox,
    score: f64,
    pub label: Option<String>,
}

impl ScoredBox {
    pub fn new(bbox: BBox, score: f64, label: Option<String>) -> Result<Self> {
        if !(0.0..=1.0).contains(&score) {
            return Err(GeometryError::BadScore(score));
        }
        Ok(Self { bbox, score, label })
    }

    pub fn score(&self) -> f64 {
        self.score
    }
}

/// Greedy NMS over `n` items addressed by index. Returns the kept indices
/// in descending score order; equal scores keep index order. An item is
/// kept iff its IoU with every previously kept item of the same class is
/// below `threshold`. A `class_of` that always returns `None` puts all
/// items in one class.
pub fn nms_indices<K: PartialEq>(
    n: usize,
    threshold: f64,
    bbox_of: impl Fn(usize) -> BBox,
    score_of: impl Fn(usize) -> f64,
    class_of: impl Fn(usize) -> Option<K>,
) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| score_of(b).partial_cmp(&score_of(a)).unwrap_or(Ordering::Equal));

    let mut kept: Vec<(usize, BBox, Option<K>)> = Vec::new();
    for idx in order {
        let bbox = bbox_of(idx);
        let class = class_of(idx);
        let suppressed = kept
            .iter()
            .any(|(_, k, kc)| *kc == class && iou(&bbox, k) >= threshold);
        if !suppressed {
            kept.push((idx, bbox, class));
        }
    }
    kept.into_iter().map(|(i, _, _)| i).collect()
}

pub fn nms(boxes: &[ScoredBox], iou_threshold: f64, class_aware: bool) -> Vec<ScoredBox> {
    nms_indices(
        boxes.len(),
        iou_threshold,
        |i| boxes[i].bbox,
        |i| boxes[i].score,
        |i| if class_aware { boxes[i].label.as_deref() } else { None },
    )
    .into_iter()
    .map(|i| boxes[i].clone())
    .collect()
}
