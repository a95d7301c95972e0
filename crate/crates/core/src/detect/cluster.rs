use std::collections::VecDeque;

use super::{BBox, DetectionMask};
use crate::radar::{ObjectClass, RangeDopplerImage};

/// Dynamic range mapped onto a detection score of one.
const SCORE_SPAN_DB: f64 = 60.0;

/// Cells of one 8-connected component, in discovery order.
pub(crate) fn components(mask: &DetectionMask) -> Vec<Vec<(usize, usize)>> {
    let (rows, cols) = (mask.rows, mask.cols);
    let mut seen = vec![false; rows * cols];
    let mut out = Vec::new();
    let mut queue = VecDeque::new();
    for start in 0..rows * cols {
        if !mask.cells[start] || seen[start] {
            continue;
        }
        seen[start] = true;
        queue.push_back(start);
        let mut cells = Vec::new();
        while let Some(idx) = queue.pop_front() {
            let (r, d) = (idx / cols, idx % cols);
            cells.push((r, d));
            for dr in -1i64..=1 {
                for dd in -1i64..=1 {
                    let (nr, nd) = (r as i64 + dr, d as i64 + dd);
                    if nr < 0 || nd < 0 || nr >= rows as i64 || nd >= cols as i64 {
                        continue;
                    }
                    let n = nr as usize * cols + nd as usize;
                    if mask.cells[n] && !seen[n] {
                        seen[n] = true;
                        queue.push_back(n);
                    }
                }
            }
        }
        out.push(cells);
    }
    out
}

/// Converts a CFAR mask into scored, classified boxes. Components confined
/// to within one bin of zero Doppler are treated as clutter and dropped.
pub fn cluster_detections(
    mask: &DetectionMask,
    image: &RangeDopplerImage,
    min_cluster_bins: usize,
) -> Vec<BBox> {
    let zero = image.zero_doppler_col();
    components(mask)
        .into_iter()
        .filter(|cells| cells.len() >= min_cluster_bins.max(1))
        .filter_map(|cells| {
            let mut b = BBox::new(
                (usize::MAX, 0),
                (usize::MAX, 0),
                0.0,
                ObjectClass::Vehicle,
            );
            let mut peak = f64::NEG_INFINITY;
            for &(r, d) in &cells {
                b.r_min = b.r_min.min(r);
                b.r_max = b.r_max.max(r);
                b.d_min = b.d_min.min(d);
                b.d_max = b.d_max.max(d);
                peak = peak.max(image.get(r, d));
            }
            if b.d_min + 1 >= zero && b.d_max <= zero + 1 {
                return None;
            }
            b.score = ((peak - image.noise_floor_db) / SCORE_SPAN_DB).clamp(0.0, 1.0);
            b.class = if b.range_extent() <= 2 && b.doppler_extent() <= 6 {
                ObjectClass::Pedestrian
            } else {
                ObjectClass::Vehicle
            };
            Some(b)
        })
        .collect()
}

/// Shrinks a detection to the cells of its component within `window_db` of
/// the component peak.
pub(crate) fn peak_envelope(
    cells: &[(usize, usize)],
    image: &RangeDopplerImage,
    window_db: f64,
) -> (usize, usize, usize, usize) {
    let peak = cells
        .iter()
        .map(|&(r, d)| image.get(r, d))
        .fold(f64::NEG_INFINITY, f64::max);
    let mut env = (usize::MAX, 0, usize::MAX, 0);
    for &(r, d) in cells.iter().filter(|&&(r, d)| image.get(r, d) >= peak - window_db) {
        env.0 = env.0.min(r);
        env.1 = env.1.max(r);
        env.2 = env.2.min(d);
        env.3 = env.3.max(d);
    }
    env
}

#[cfg(test)]
mod tests {
    use super::*;

    fn image(rows: usize, cols: usize) -> RangeDopplerImage {
        RangeDopplerImage {
            magnitude_db: vec![0.0; rows * cols],
            range_bins: rows,
            doppler_bins: cols,
            range_bin_size_m: 1.0,
            doppler_bin_size_hz: 1.0,
            noise_floor_db: 0.0,
        }
    }

    #[test]
    fn empty_mask_gives_no_boxes() {
        let img = image(64, 128);
        assert!(cluster_detections(&DetectionMask::new(64, 128), &img, 1).is_empty());
    }

    #[test]
    fn blob_becomes_its_envelope() {
        let mut img = image(128, 128);
        let mut mask = DetectionMask::new(128, 128);
        for r in 49..=51 {
            for d in 89..=91 {
                mask.set(r, d, true);
                img.magnitude_db[r * 128 + d] = 30.0;
            }
        }
        let boxes = cluster_detections(&mask, &img, 1);
        assert_eq!(boxes.len(), 1);
        let b = boxes[0];
        assert_eq!((b.r_min, b.r_max, b.d_min, b.d_max), (49, 51, 89, 91));
        assert_eq!(b.class, ObjectClass::Vehicle);
        assert!((b.score - 0.5).abs() < 1e-12);
    }

    #[test]
    fn diagonal_neighbours_join() {
        let img = image(32, 32);
        let mut mask = DetectionMask::new(32, 32);
        mask.set(10, 3, true);
        mask.set(11, 4, true);
        mask.set(20, 3, true);
        let boxes = cluster_detections(&mask, &img, 1);
        assert_eq!(boxes.len(), 2);
        assert_eq!(cluster_detections(&mask, &img, 2).len(), 1);
        let b = cluster_detections(&mask, &img, 2)[0];
        assert_eq!((b.r_min, b.r_max, b.d_min, b.d_max), (10, 11, 3, 4));
        assert_eq!(b.class, ObjectClass::Pedestrian);
    }

    #[test]
    fn flood_fill_matches_brute_force_labelling() {
        // Brute force: repeatedly merge labels of 8-adjacent cells.
        let pattern = [
            "#..#....", ".#..#...", "..#.....", "........", "##...###", "#....#.#", ".....###",
        ];
        let rows = pattern.len();
        let cols = pattern[0].len();
        let mut mask = DetectionMask::new(rows, cols);
        for (r, line) in pattern.iter().enumerate() {
            for (d, ch) in line.chars().enumerate() {
                mask.set(r, d, ch == '#');
            }
        }
        let mut label: Vec<usize> = (0..rows * cols).collect();
        loop {
            let mut changed = false;
            for a in 0..rows * cols {
                for b in 0..rows * cols {
                    let (ra, da) = ((a / cols) as i64, (a % cols) as i64);
                    let (rb, db) = ((b / cols) as i64, (b % cols) as i64);
                    if mask.cells[a]
                        && mask.cells[b]
                        && (ra - rb).abs() <= 1
                        && (da - db).abs() <= 1
                        && label[a] != label[b]
                    {
                        let m = label[a].min(label[b]);
                        label[a] = m;
                        label[b] = m;
                        changed = true;
                    }
                }
            }
            if !changed {
                break;
            }
        }
        let mut distinct: Vec<usize> = (0..rows * cols)
            .filter(|&i| mask.cells[i])
            .map(|i| label[i])
            .collect();
        distinct.sort_unstable();
        distinct.dedup();
        assert_eq!(components(&mask).len(), distinct.len());
        assert_eq!(distinct.len(), 4);
    }

    #[test]
    fn zero_doppler_components_are_clutter() {
        let img = image(32, 32);
        let mut mask = DetectionMask::new(32, 32);
        for r in 5..20 {
            mask.set(r, 15, true);
            mask.set(r, 17, true);
        }
        assert!(cluster_detections(&mask, &img, 1).is_empty());
        mask.set(10, 18, true);
        assert_eq!(cluster_detections(&mask, &img, 1).len(), 1);
    }
}
