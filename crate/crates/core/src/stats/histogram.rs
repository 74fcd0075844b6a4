use serde::{Deserialize, Serialize};

/// Fixed uniform bins over `[lo, hi]`. Bins are half-open except the last,
/// which also takes `hi`. Out-of-range values land in the end bins.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    bin_edges: Vec<f64>,
    counts: Vec<u64>,
}

/// Index of `v` among `n` half-open unit-interval bins, last bin closed.
pub(crate) fn unit_bin(v: f64, n: usize) -> usize {
    let k = (v * n as f64).floor();
    if k <= 0.0 {
        0
    } else {
        (k as usize).min(n - 1)
    }
}

impl Histogram {
    pub fn uniform(lo: f64, hi: f64, bins: usize) -> Self {
        assert!(bins > 0 && lo < hi, "histogram needs bins over a non-empty range");
        let bin_edges = (0..=bins).map(|k| lo + (hi - lo) * (k as f64 / bins as f64)).collect();
        Self { bin_edges, counts: vec![0; bins] }
    }

    pub fn bin_edges(&self) -> &[f64] {
        &self.bin_edges
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn lo(&self) -> f64 {
        self.bin_edges[0]
    }

    pub fn hi(&self) -> f64 {
        self.bin_edges[self.counts.len()]
    }

    pub fn bin_of(&self, v: f64) -> usize {
        unit_bin((v - self.lo()) / (self.hi() - self.lo()), self.counts.len())
    }

    /// Adds one observation. NaN is refused.
    pub fn add(&mut self, v: f64) -> bool {
        if v.is_nan() {
            return false;
        }
        let b = self.bin_of(v);
        self.counts[b] += 1;
        true
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn merge(&mut self, other: &Histogram) {
        assert_eq!(self.bin_edges, other.bin_edges, "merging histograms with different bins");
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
    }

    /// `bin_start,bin_end,count` rows with a header.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("bin_start,bin_end,count\n");
        for (i, c) in self.counts.iter().enumerate() {
            out.push_str(&format!("{},{},{}\n", self.bin_edges[i], self.bin_edges[i + 1], c));
        }
        out
    }
}

/// Counts of normalized box centers on a `resolution`² grid; `counts[row][col]`
/// with the row from y and the column from x.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeatmapGrid {
    resolution: usize,
    counts: Vec<Vec<u64>>,
}

pub const DEFAULT_RESOLUTION: usize = 64;

impl HeatmapGrid {
    pub fn new(resolution: usize) -> Self {
        assert!(resolution > 0, "heatmap resolution must be positive");
        Self { resolution, counts: vec![vec![0; resolution]; resolution] }
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn counts(&self) -> &[Vec<u64>] {
        &self.counts
    }

    /// Cell `(row, col)` of a point with coordinates normalized to `[0, 1]`.
    pub fn cell_of(&self, nx: f64, ny: f64) -> (usize, usize) {
        (unit_bin(ny, self.resolution), unit_bin(nx, self.resolution))
    }

    pub fn add(&mut self, nx: f64, ny: f64) -> bool {
        if nx.is_nan() || ny.is_nan() {
            return false;
        }
        let (r, c) = self.cell_of(nx, ny);
        self.counts[r][c] += 1;
        true
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn merge(&mut self, other: &HeatmapGrid) {
        assert_eq!(self.resolution, other.resolution, "merging heatmaps of different resolution");
        for (a, b) in self.counts.iter_mut().flatten().zip(other.counts.iter().flatten()) {
            *a += b;
        }
    }

    /// One line per row, comma-separated counts.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for row in &self.counts {
            let line: Vec<String> = row.iter().map(u64::to_string).collect();
            out.push_str(&line.join(","));
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn edges_and_closed_last_bin() {
        let mut h = Histogram::uniform(0.0, 1.0, 50);
        assert_eq!(h.bin_edges().len(), 51);
        assert!(h.bin_edges().windows(2).all(|w| w[0] < w[1]));
        assert_eq!(h.bin_of(0.0), 0);
        assert_eq!(h.bin_of(1.0), 49);
        assert_eq!(h.bin_of(0.5), 25);
        assert_eq!(h.bin_of(-3.0), 0);
        assert_eq!(h.bin_of(7.0), 49);
        assert!(!h.add(f64::NAN));
        h.add(1.0);
        h.add(0.0);
        assert_eq!(h.total(), 2);
    }

    #[test]
    fn symmetric_range_puts_zero_at_middle_edge() {
        let l = 20f64.ln();
        let h = Histogram::uniform(-l, l, 50);
        assert_eq!(h.bin_of(0.0), 25);
        assert_eq!(h.bin_of(l), 49);
        assert_eq!(h.bin_of(-l), 0);
    }

    #[test]
    fn heatmap_center_cell() {
        let mut g = HeatmapGrid::new(64);
        assert_eq!(g.cell_of(0.5, 0.5), (32, 32));
        assert_eq!(g.cell_of(1.0, 0.0), (0, 63));
        assert_eq!(g.cell_of(0.0, 1.0), (63, 0));
        g.add(0.25, 0.75);
        assert_eq!(g.counts()[48][16], 1);
        assert_eq!(g.total(), 1);
    }

    #[test]
    fn merge_adds_counts() {
        let mut a = Histogram::uniform(0.0, 1.0, 4);
        let mut b = a.clone();
        a.add(0.1);
        b.add(0.9);
        b.add(0.1);
        a.merge(&b);
        assert_eq!(a.counts(), &[2, 0, 0, 1]);
        assert_eq!(a.to_csv(), "bin_start,bin_end,count\n0,0.25,2\n0.25,0.5,0\n0.5,0.75,0\n0.75,1,1\n");
    }
}
