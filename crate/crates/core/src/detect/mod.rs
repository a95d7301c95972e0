//! Reference downstream detector (CA-CFAR plus clustering) and the scoring
//! stack used for rewards and evaluation.

mod anchors;
mod bbox;
mod cfar;
mod cluster;
mod metrics;

pub use anchors::{kmeans_anchors, kmeans_anchors_detailed, shape_iou, KMeansResult};
pub use bbox::{iou, nms, BBox};
pub use cfar::{ca_cfar, CfarParams, DetectionMask};
pub use cluster::cluster_detections;
pub use metrics::{f1_score, mean_average_precision, F1Stats, FrameDetections, MapReport};

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::radar::{ObjectClass, RangeDopplerImage};
use crate::scene::GroundTruthBox;

/// Anything that turns a range-Doppler image into scored boxes.
pub trait Detector {
    fn detect(&self, image: &RangeDopplerImage) -> Result<Vec<BBox>>;
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CfarDetectorConfig {
    pub cfar: CfarParams,
    pub min_cluster_bins: usize,
    /// Keep only cells within this many dB of each component's peak when
    /// forming its box; `None` keeps the full envelope.
    pub peak_window_db: Option<f64>,
    /// Range bins added on both ends of each box. CA-CFAR trims extended
    /// targets along range, so this restores the label margin.
    pub box_margin_range_bins: usize,
    /// Doppler bins added on both sides.
    pub box_margin_doppler_bins: usize,
    pub nms_iou: f64,
    /// Doppler columns on each side of zero Doppler that are replaced by
    /// the noise floor before CFAR; `None` disables the notch.
    pub clutter_notch_bins: Option<usize>,
}

impl Default for CfarDetectorConfig {
    fn default() -> Self {
        CfarDetectorConfig {
            cfar: CfarParams::default(),
            min_cluster_bins: 1,
            peak_window_db: Some(10.0),
            box_margin_range_bins: 1,
            box_margin_doppler_bins: 1,
            nms_iou: 0.5,
            clutter_notch_bins: None,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct CfarDetector {
    pub config: CfarDetectorConfig,
}

impl CfarDetector {
    pub fn new(config: CfarDetectorConfig) -> Self {
        CfarDetector { config }
    }
}

impl Detector for CfarDetector {
    fn detect(&self, image: &RangeDopplerImage) -> Result<Vec<BBox>> {
        let c = &self.config;
        let notched;
        let image = match c.clutter_notch_bins {
            Some(k) => {
                notched = notch_zero_doppler(image, k);
                &notched
            }
            None => image,
        };
        let mask = ca_cfar(image, &c.cfar)?;
        let mut boxes = cluster_detections(&mask, image, c.min_cluster_bins);
        if let Some(window) = c.peak_window_db {
            // Same component order as `cluster_detections`; re-derive the
            // surviving components to tighten each box around its peak.
            let zero = image.zero_doppler_col();
            let comps: Vec<Vec<(usize, usize)>> = cluster::components(&mask)
                .into_iter()
                .filter(|cells| cells.len() >= c.min_cluster_bins.max(1))
                .filter(|cells| {
                    let d_min = cells.iter().map(|x| x.1).min().unwrap_or(0);
                    let d_max = cells.iter().map(|x| x.1).max().unwrap_or(0);
                    !(d_min + 1 >= zero && d_max <= zero + 1)
                })
                .collect();
            debug_assert_eq!(comps.len(), boxes.len());
            for (b, cells) in boxes.iter_mut().zip(&comps) {
                let (r0, r1, d0, d1) = cluster::peak_envelope(cells, image, window);
                b.r_min = r0;
                b.r_max = r1;
                b.d_min = d0;
                b.d_max = d1;
                b.class = if b.range_extent() <= 2 && b.doppler_extent() <= 6 {
                    ObjectClass::Pedestrian
                } else {
                    ObjectClass::Vehicle
                };
            }
        }
        let boxes: Vec<BBox> = boxes
            .into_iter()
            .map(|b| b.expanded(c.box_margin_range_bins, c.box_margin_doppler_bins, image.range_bins, image.doppler_bins))
            .collect();
        Ok(nms(&boxes, c.nms_iou))
    }
}

/// Copy of `image` with the columns within `k` bins of zero Doppler set to
/// the expected noise level.
pub fn notch_zero_doppler(image: &RangeDopplerImage, k: usize) -> RangeDopplerImage {
    let mut out = image.clone();
    let zero = image.zero_doppler_col();
    let lo = zero.saturating_sub(k);
    let hi = (zero + k).min(image.doppler_bins - 1);
    for row in out.magnitude_db.chunks_mut(image.doppler_bins) {
        row[lo..=hi].fill(image.noise_floor_db);
    }
    out
}

pub fn to_boxes(labels: &[GroundTruthBox]) -> Vec<BBox> {
    labels.iter().map(BBox::from).collect()
}

/// Detection dump: `frame,class,score,rbin_min,rbin_max,dbin_min,dbin_max`.
pub fn write_detections_csv(path: &Path, frames: &[Vec<BBox>]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["frame", "class", "score", "rbin_min", "rbin_max", "dbin_min", "dbin_max"])?;
    for (frame, boxes) in frames.iter().enumerate() {
        for b in boxes {
            w.write_record([
                frame.to_string(),
                b.class.code().to_string(),
                format!("{:.6}", b.score),
                b.r_min.to_string(),
                b.r_max.to_string(),
                b.d_min.to_string(),
                b.d_max.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Anchor file: one `width height` pair per line.
pub fn write_anchors(path: &Path, anchors: &[(f64, f64)]) -> Result<()> {
    let text: String = anchors
        .iter()
        .map(|(w, h)| format!("{w:.4} {h:.4}\n"))
        .collect();
    std::fs::write(path, text).map_err(Error::from)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::radar::{
        range_doppler_map_windowed, synth_baseband, ChirpParams, PowerSetting, Scatterer, Window,
    };

    #[test]
    fn detector_finds_moving_vehicle_and_ignores_clutter() {
        let chirp = ChirpParams::default();
        let mut scatterers = vec![Scatterer {
            range_m: 60.3,
            radial_velocity_mps: -6.2,
            rcs_m2: 5.0,
            class: ObjectClass::Vehicle,
            object_id: 1,
        }];
        for i in 0..40 {
            scatterers.push(Scatterer {
                range_m: 10.0 + 5.0 * i as f64,
                radial_velocity_mps: 0.0,
                rcs_m2: 0.2,
                class: ObjectClass::Clutter,
                object_id: 0,
            });
        }
        let frame = synth_baseband(&scatterers, &chirp, PowerSetting(20.0), -90.0, 4).unwrap();
        let img = range_doppler_map_windowed(&frame, Window::Hann);
        let boxes = CfarDetector::default().detect(&img).unwrap();
        assert_eq!(boxes.len(), 1, "{boxes:?}");
        let (r, d) = chirp.bin_of(60.3, -6.2);
        let b = boxes[0];
        assert!(b.r_min as i64 <= r && r <= b.r_max as i64);
        assert!(b.d_min as i64 <= d && d <= b.d_max as i64);
    }
}
