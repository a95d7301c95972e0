//! Detection scoring: greedy F1 matching and VOC-style average precision.

use super::bbox::{iou, rank_order, BBox};
use crate::radar::ObjectClass;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct F1Stats {
    pub true_positives: usize,
    pub false_positives: usize,
    pub false_negatives: usize,
    pub f1: f64,
}

/// Greedy matching in descending score order: each detection claims the
/// unmatched ground-truth box with the highest IOU at or above the
/// threshold. With no boxes on either side the score is 1.
pub fn f1_score(dets: &[BBox], gts: &[BBox], iou_threshold: f64, class_agnostic: bool) -> F1Stats {
    let matched = greedy_match(dets, gts, iou_threshold, class_agnostic);
    let tp = matched.iter().filter(|m| m.is_some()).count();
    let fp = dets.len() - tp;
    let fn_ = gts.len() - tp;
    let f1 = if tp + fp + fn_ == 0 {
        1.0
    } else {
        2.0 * tp as f64 / (2 * tp + fp + fn_) as f64
    };
    F1Stats {
        true_positives: tp,
        false_positives: fp,
        false_negatives: fn_,
        f1,
    }
}

/// For each detection in ranked order, the index of the ground truth it
/// matched. Returned in ranked order together with the ranking.
fn greedy_match(
    dets: &[BBox],
    gts: &[BBox],
    iou_threshold: f64,
    class_agnostic: bool,
) -> Vec<Option<usize>> {
    let mut order: Vec<&BBox> = dets.iter().collect();
    order.sort_by(|a, b| rank_order(a, b));
    let mut taken = vec![false; gts.len()];
    order
        .into_iter()
        .map(|d| {
            let mut best: Option<(usize, f64)> = None;
            for (j, g) in gts.iter().enumerate() {
                if taken[j] || (!class_agnostic && g.class != d.class) {
                    continue;
                }
                let v = iou(d, g);
                if v >= iou_threshold && best.is_none_or(|(_, b)| v > b) {
                    best = Some((j, v));
                }
            }
            best.map(|(j, _)| {
                taken[j] = true;
                j
            })
        })
        .collect()
}

/// Detections and labels of one image.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FrameDetections {
    pub detections: Vec<BBox>,
    pub ground_truth: Vec<BBox>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MapReport {
    /// Unweighted mean over classes that have ground truth; 0 when none do.
    pub map: f64,
    pub per_class: Vec<(ObjectClass, f64)>,
}

/// All-point interpolated area under a precision/recall curve.
fn average_precision(hits: &[bool], num_gt: usize) -> f64 {
    let mut recall = Vec::with_capacity(hits.len());
    let mut precision = Vec::with_capacity(hits.len());
    let mut tp = 0usize;
    for (i, &h) in hits.iter().enumerate() {
        if h {
            tp += 1;
        }
        recall.push(tp as f64 / num_gt as f64);
        precision.push(tp as f64 / (i + 1) as f64);
    }
    for i in (0..precision.len().saturating_sub(1)).rev() {
        precision[i] = precision[i].max(precision[i + 1]);
    }
    let mut ap = 0.0;
    let mut prev_recall = 0.0;
    for (r, p) in recall.iter().zip(&precision) {
        ap += (r - prev_recall) * p;
        prev_recall = *r;
    }
    ap
}

/// Mean average precision over a set of frames. Detections are ranked
/// across the whole set; matching within a frame follows [`f1_score`].
pub fn mean_average_precision(
    frames: &[FrameDetections],
    iou_threshold: f64,
    class_agnostic: bool,
) -> MapReport {
    let classes: Vec<Option<ObjectClass>> = if class_agnostic {
        vec![None]
    } else {
        vec![Some(ObjectClass::Pedestrian), Some(ObjectClass::Vehicle)]
    };
    let mut per_class = Vec::new();
    for class in classes {
        let keep = |b: &&BBox| class.is_none_or(|c| b.class == c);
        let num_gt: usize = frames
            .iter()
            .map(|f| f.ground_truth.iter().filter(keep).count())
            .sum();
        if num_gt == 0 {
            continue;
        }
        // (detection, frame index, matched?)
        let mut ranked: Vec<(BBox, usize, bool)> = Vec::new();
        for (fi, f) in frames.iter().enumerate() {
            let dets: Vec<BBox> = f.detections.iter().filter(keep).copied().collect();
            let gts: Vec<BBox> = f.ground_truth.iter().filter(keep).copied().collect();
            let mut order = dets.clone();
            order.sort_by(rank_order);
            let matched = greedy_match(&dets, &gts, iou_threshold, true);
            for (d, m) in order.into_iter().zip(matched) {
                ranked.push((d, fi, m.is_some()));
            }
        }
        ranked.sort_by(|a, b| rank_order(&a.0, &b.0).then(a.1.cmp(&b.1)));
        let hits: Vec<bool> = ranked.iter().map(|x| x.2).collect();
        let label = class.unwrap_or(ObjectClass::Vehicle);
        per_class.push((label, average_precision(&hits, num_gt)));
    }
    let map = if per_class.is_empty() {
        0.0
    } else {
        per_class.iter().map(|x| x.1).sum::<f64>() / per_class.len() as f64
    };
    MapReport { map, per_class }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const V: ObjectClass = ObjectClass::Vehicle;
    const P: ObjectClass = ObjectClass::Pedestrian;

    fn b(r: usize, d: usize, score: f64, class: ObjectClass) -> BBox {
        BBox::new((r, r + 2), (d, d + 2), score, class)
    }

    #[test]
    fn f1_reference_cases() {
        let gts = [b(10, 10, 1.0, V), b(40, 40, 1.0, P)];
        let perfect = [b(10, 10, 0.9, V), b(40, 40, 0.8, P)];
        assert_eq!(f1_score(&perfect, &gts, 0.5, false).f1, 1.0);

        let half = [b(10, 10, 0.9, V), b(80, 80, 0.8, V)];
        let s = f1_score(&half, &gts, 0.5, false);
        assert_eq!((s.true_positives, s.false_positives, s.false_negatives), (1, 1, 1));
        assert_eq!(s.f1, 0.5);

        assert_eq!(f1_score(&[], &[], 0.5, false).f1, 1.0);
        assert_eq!(f1_score(&[], &gts, 0.5, false).f1, 0.0);
    }

    #[test]
    fn f1_class_awareness() {
        let gts = [b(10, 10, 1.0, V)];
        let dets = [b(10, 10, 0.9, P)];
        assert_eq!(f1_score(&dets, &gts, 0.5, false).f1, 0.0);
        assert_eq!(f1_score(&dets, &gts, 0.5, true).f1, 1.0);
    }

    #[test]
    fn ap_reference_cases() {
        let gt = b(10, 10, 1.0, V);
        let perfect = FrameDetections {
            detections: vec![b(10, 10, 1.0, V)],
            ground_truth: vec![gt],
        };
        assert_eq!(mean_average_precision(&[perfect], 0.5, false).map, 1.0);

        // Higher-scored detection is a false positive, the lower one hits.
        let fp_first = FrameDetections {
            detections: vec![b(60, 60, 0.9, V), b(10, 10, 0.4, V)],
            ground_truth: vec![gt],
        };
        let report = mean_average_precision(&[fp_first], 0.5, false);
        assert_eq!(report.per_class, vec![(V, 0.5)]);

        let none = FrameDetections {
            detections: vec![],
            ground_truth: vec![gt],
        };
        assert_eq!(mean_average_precision(&[none], 0.5, false).map, 0.0);
    }

    #[test]
    fn ap_excludes_classes_without_ground_truth() {
        let f = FrameDetections {
            detections: vec![b(10, 10, 0.9, V), b(30, 30, 0.9, P)],
            ground_truth: vec![b(10, 10, 1.0, V)],
        };
        let r = mean_average_precision(&[f], 0.5, false);
        assert_eq!(r.per_class, vec![(V, 1.0)]);
        assert_eq!(r.map, 1.0);
    }

    #[test]
    fn ap_matches_hand_pr_curve() {
        // Ranked hits: T F T F with 3 GT: recall .33 .33 .67 .67,
        // interpolated precision 1, 2/3, 2/3, 1/2 -> AP = 1/3 + 1/3 * 2/3.
        let hits = [true, false, true, false];
        let ap = average_precision(&hits, 3);
        assert!((ap - (1.0 / 3.0 + 2.0 / 9.0)).abs() < 1e-12);
    }

    fn arb_frame() -> impl Strategy<Value = FrameDetections> {
        let bx = (0usize..6, 0usize..6, 0u8..4, any::<bool>()).prop_map(|(r, d, s, ped)| {
            b(r * 3, d * 3, s as f64 / 3.0, if ped { P } else { V })
        });
        (prop::collection::vec(bx.clone(), 0..6), prop::collection::vec(bx, 0..4)).prop_map(
            |(detections, ground_truth)| FrameDetections {
                detections,
                ground_truth,
            },
        )
    }

    proptest! {
        #[test]
        fn scores_ignore_detection_order(frames in prop::collection::vec(arb_frame(), 1..4)) {
            let reversed: Vec<FrameDetections> = frames
                .iter()
                .map(|f| FrameDetections {
                    detections: f.detections.iter().rev().copied().collect(),
                    ground_truth: f.ground_truth.clone(),
                })
                .collect();
            prop_assert_eq!(
                mean_average_precision(&frames, 0.5, false),
                mean_average_precision(&reversed, 0.5, false)
            );
            for (a, r) in frames.iter().zip(&reversed) {
                prop_assert_eq!(
                    f1_score(&a.detections, &a.ground_truth, 0.5, false),
                    f1_score(&r.detections, &r.ground_truth, 0.5, false)
                );
            }
        }
    }
}
