use std::cmp::Ordering;

use crate::radar::ObjectClass;
use crate::scene::GroundTruthBox;

/// Box in inclusive range-Doppler bin coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BBox {
    pub r_min: usize,
    pub r_max: usize,
    pub d_min: usize,
    pub d_max: usize,
    pub score: f64,
    pub class: ObjectClass,
}

impl BBox {
    pub fn new(r: (usize, usize), d: (usize, usize), score: f64, class: ObjectClass) -> Self {
        BBox {
            r_min: r.0,
            r_max: r.1,
            d_min: d.0,
            d_max: d.1,
            score,
            class,
        }
    }

    pub fn range_extent(&self) -> usize {
        self.r_max - self.r_min + 1
    }

    pub fn doppler_extent(&self) -> usize {
        self.d_max - self.d_min + 1
    }

    pub fn area(&self) -> usize {
        self.range_extent() * self.doppler_extent()
    }

    /// Grows the box by `margin` bins on every side, clipped to the image.
    pub fn expanded(mut self, range_margin: usize, doppler_margin: usize, rows: usize, cols: usize) -> Self {
        self.r_min = self.r_min.saturating_sub(range_margin);
        self.d_min = self.d_min.saturating_sub(doppler_margin);
        self.r_max = (self.r_max + range_margin).min(rows - 1);
        self.d_max = (self.d_max + doppler_margin).min(cols - 1);
        self
    }
}

impl From<&GroundTruthBox> for BBox {
    fn from(g: &GroundTruthBox) -> Self {
        BBox {
            r_min: g.range_bin_min,
            r_max: g.range_bin_max,
            d_min: g.doppler_bin_min,
            d_max: g.doppler_bin_max,
            score: 1.0,
            class: g.class,
        }
    }
}

/// Intersection over union on inclusive bin counts.
pub fn iou(a: &BBox, b: &BBox) -> f64 {
    let r_lo = a.r_min.max(b.r_min);
    let r_hi = a.r_max.min(b.r_max);
    let d_lo = a.d_min.max(b.d_min);
    let d_hi = a.d_max.min(b.d_max);
    if r_lo > r_hi || d_lo > d_hi {
        return 0.0;
    }
    let inter = (r_hi - r_lo + 1) * (d_hi - d_lo + 1);
    inter as f64 / (a.area() + b.area() - inter) as f64
}

/// Score-descending order with a positional tie-break.
pub(crate) fn rank_order(a: &BBox, b: &BBox) -> Ordering {
    b.score
        .total_cmp(&a.score)
        .then(a.r_min.cmp(&b.r_min))
        .then(a.d_min.cmp(&b.d_min))
        .then(a.r_max.cmp(&b.r_max))
        .then(a.d_max.cmp(&b.d_max))
        .then(a.class.cmp(&b.class))
}

/// Greedy non-maximum suppression within each class.
pub fn nms(boxes: &[BBox], iou_threshold: f64) -> Vec<BBox> {
    let mut sorted = boxes.to_vec();
    sorted.sort_by(rank_order);
    let mut kept: Vec<BBox> = Vec::with_capacity(sorted.len());
    for b in sorted {
        if kept
            .iter()
            .all(|k| k.class != b.class || iou(k, &b) <= iou_threshold)
        {
            kept.push(b);
        }
    }
    kept
}
