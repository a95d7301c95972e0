//! Procedural traffic scenes: kinematic pedestrian and vehicle tracks plus
//! static clutter, rendered frame by frame into point clouds with
//! statistically modelled cross-sections and range-Doppler labels.

mod io;
mod rcs;

pub use io::{read_labels_csv, read_scene_csv, write_labels_csv, write_scene_csv};
pub use rcs::{
    assign_vehicle_scatterer_rcs, sample_clutter_rcs, sample_pedestrian_rcs, sample_rayleigh,
    vehicle_rcs_pattern, VehicleRcsParams,
};

use std::collections::BTreeMap;
use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::radar::{ChirpParams, ObjectClass, Scatterer};

const MAX_PEDESTRIAN_SPEED: f64 = 3.0;
const MAX_VEHICLE_SPEED: f64 = 20.0;
const VEHICLE_LENGTH_M: f64 = 4.5;
const VEHICLE_WIDTH_M: f64 = 1.8;
const PEDESTRIAN_BODY_M: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CountRange {
    pub min: usize,
    pub max: usize,
}

impl CountRange {
    pub fn fixed(n: usize) -> Self {
        CountRange { min: n, max: n }
    }
}

/// Axis-aligned spawn region, radar at the origin looking along +y.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldOfView {
    pub x_min_m: f64,
    pub x_max_m: f64,
    pub y_min_m: f64,
    pub y_max_m: f64,
}

impl FieldOfView {
    pub fn contains(&self, p: [f64; 2]) -> bool {
        p[0] >= self.x_min_m && p[0] <= self.x_max_m && p[1] >= self.y_min_m && p[1] <= self.y_max_m
    }

    fn sample<R: Rng>(&self, rng: &mut R) -> [f64; 2] {
        [
            rng.random_range(self.x_min_m..=self.x_max_m),
            rng.random_range(self.y_min_m..=self.y_max_m),
        ]
    }

    fn farthest_m(&self) -> f64 {
        let x = self.x_min_m.abs().max(self.x_max_m.abs());
        let y = self.y_min_m.abs().max(self.y_max_m.abs());
        x.hypot(y)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SceneConfig {
    pub num_frames: usize,
    pub frame_rate_hz: f64,
    pub pedestrians: CountRange,
    pub vehicles: CountRange,
    pub clutter_points: usize,
    pub fov: FieldOfView,
    pub pedestrian_speed_mps: (f64, f64),
    pub vehicle_speed_mps: (f64, f64),
    pub vehicle_scatterers: usize,
    pub pedestrian_scatterers: usize,
    pub clutter_rayleigh_scale: f64,
    pub pedestrian_nakagami_m: f64,
    pub pedestrian_nakagami_omega: f64,
    pub vehicle_rcs: VehicleRcsParams,
    /// Unit-mean fluctuation on each vehicle scatterer.
    pub vehicle_rcs_noise: bool,
    pub micro_doppler_std_mps: f64,
    pub label_margin_bins: usize,
    pub rng_seed: u64,
}

impl Default for SceneConfig {
    fn default() -> Self {
        SceneConfig {
            num_frames: 100,
            frame_rate_hz: 20.0,
            pedestrians: CountRange { min: 0, max: 3 },
            vehicles: CountRange { min: 0, max: 3 },
            clutter_points: 200,
            fov: FieldOfView {
                x_min_m: -20.0,
                x_max_m: 20.0,
                y_min_m: 8.0,
                y_max_m: 100.0,
            },
            pedestrian_speed_mps: (0.5, MAX_PEDESTRIAN_SPEED),
            vehicle_speed_mps: (3.0, MAX_VEHICLE_SPEED),
            vehicle_scatterers: 8,
            pedestrian_scatterers: 1,
            clutter_rayleigh_scale: 0.3,
            pedestrian_nakagami_m: 1.0,
            pedestrian_nakagami_omega: 0.5,
            vehicle_rcs: VehicleRcsParams::default(),
            vehicle_rcs_noise: true,
            micro_doppler_std_mps: 0.5,
            label_margin_bins: 1,
            rng_seed: 0,
        }
    }
}

impl SceneConfig {
    pub fn validate(&self, chirp: &ChirpParams) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.num_frames == 0 {
            return bad("scene needs at least one frame".into());
        }
        if !(self.frame_rate_hz > 0.0 && self.frame_rate_hz.is_finite()) {
            return bad(format!("frame rate {} Hz", self.frame_rate_hz));
        }
        if self.pedestrians.min > self.pedestrians.max || self.vehicles.min > self.vehicles.max {
            return bad("object count range has min > max".into());
        }
        let fov = &self.fov;
        if !(fov.x_min_m < fov.x_max_m && fov.y_min_m < fov.y_max_m) {
            return bad("field of view is empty".into());
        }
        let body = VEHICLE_LENGTH_M.hypot(VEHICLE_WIDTH_M);
        if fov.y_min_m <= body || fov.farthest_m() + body >= chirp.max_range_m() {
            return bad(format!(
                "field of view must stay within ({body:.1}, {:.1}) m of the radar",
                chirp.max_range_m() - body
            ));
        }
        let (p_lo, p_hi) = self.pedestrian_speed_mps;
        let (v_lo, v_hi) = self.vehicle_speed_mps;
        if !(0.0 <= p_lo && p_lo <= p_hi && p_hi <= MAX_PEDESTRIAN_SPEED) {
            return bad(format!("pedestrian speeds must lie in [0, {MAX_PEDESTRIAN_SPEED}] m/s"));
        }
        if !(0.0 <= v_lo && v_lo <= v_hi && v_hi <= MAX_VEHICLE_SPEED) {
            return bad(format!("vehicle speeds must lie in [0, {MAX_VEHICLE_SPEED}] m/s"));
        }
        let jitter_cap = 4.0 * self.micro_doppler_std_mps;
        if v_hi.max(p_hi + jitter_cap) >= chirp.max_velocity_mps() {
            return bad("object speeds exceed the unambiguous velocity".into());
        }
        if self.vehicle_scatterers == 0 || self.pedestrian_scatterers == 0 {
            return bad("objects need at least one scatterer".into());
        }
        if !(self.clutter_rayleigh_scale > 0.0) {
            return bad("clutter Rayleigh scale must be positive".into());
        }
        if !(self.pedestrian_nakagami_m >= 0.5 && self.pedestrian_nakagami_omega > 0.0) {
            return bad("Nakagami needs m >= 0.5 and omega > 0".into());
        }
        if !(self.micro_doppler_std_mps >= 0.0) {
            return bad("micro-Doppler spread must be non-negative".into());
        }
        Ok(())
    }
}

/// A moving object with rigid scatterer offsets in its body frame.
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectTrack {
    pub object_id: u32,
    pub class: ObjectClass,
    pub initial_position_m: [f64; 2],
    pub velocity_mps: [f64; 2],
    /// Heading of travel, measured from boresight (+y) towards +x.
    pub orientation_rad: f64,
    /// (along-heading, across-heading) offsets, one per scatterer.
    pub body_offsets_m: Vec<[f64; 2]>,
    pub exited: bool,
}

impl ObjectTrack {
    pub fn num_scatterers(&self) -> usize {
        self.body_offsets_m.len()
    }

    pub fn position_at(&self, t_s: f64) -> [f64; 2] {
        [
            self.initial_position_m[0] + self.velocity_mps[0] * t_s,
            self.initial_position_m[1] + self.velocity_mps[1] * t_s,
        ]
    }

    fn heading(&self) -> [f64; 2] {
        [self.orientation_rad.sin(), self.orientation_rad.cos()]
    }

    fn scatterer_position(&self, center: [f64; 2], offset: [f64; 2]) -> [f64; 2] {
        let h = self.heading();
        let side = [h[1], -h[0]];
        [
            center[0] + offset[0] * h[0] + offset[1] * side[0],
            center[1] + offset[0] * h[1] + offset[1] * side[1],
        ]
    }

    /// Aspect angle of the radar seen from the object; 0 means the radar is
    /// straight ahead of the object's front.
    pub fn aspect_rad(&self, center: [f64; 2]) -> f64 {
        let h = self.heading();
        let norm = center[0].hypot(center[1]);
        let los = [-center[0] / norm, -center[1] / norm];
        let cross = h[0] * los[1] - h[1] * los[0];
        let dot = h[0] * los[0] + h[1] * los[1];
        cross.atan2(dot)
    }
}

/// One scatterer of a point cloud, as stored in the scene files.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScenePoint {
    pub object_id: u32,
    pub class: ObjectClass,
    pub position_m: [f64; 2],
    pub velocity_mps: [f64; 2],
    pub rcs_m2: f64,
}

impl ScenePoint {
    pub fn range_m(&self) -> f64 {
        self.position_m[0].hypot(self.position_m[1])
    }

    pub fn radial_velocity_mps(&self) -> f64 {
        let r = self.range_m();
        (self.position_m[0] * self.velocity_mps[0] + self.position_m[1] * self.velocity_mps[1]) / r
    }

    pub fn scatterer(&self) -> Scatterer {
        Scatterer {
            range_m: self.range_m(),
            radial_velocity_mps: self.radial_velocity_mps(),
            rcs_m2: self.rcs_m2,
            class: self.class,
            object_id: self.object_id,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PointCloudFrame {
    pub frame_index: usize,
    pub points: Vec<ScenePoint>,
}

impl PointCloudFrame {
    pub fn scatterers(&self) -> Vec<Scatterer> {
        self.points.iter().map(ScenePoint::scatterer).collect()
    }
}

/// Label box in inclusive range-Doppler bin coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GroundTruthBox {
    pub range_bin_min: usize,
    pub range_bin_max: usize,
    pub doppler_bin_min: usize,
    pub doppler_bin_max: usize,
    pub class: ObjectClass,
    pub object_id: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub tracks: Vec<ObjectTrack>,
    pub frames: Vec<PointCloudFrame>,
    pub labels: Vec<Vec<GroundTruthBox>>,
}

impl Scene {
    /// Number of labelled objects in each frame.
    pub fn target_counts(&self) -> Vec<usize> {
        self.labels.iter().map(Vec::len).collect()
    }
}

fn spawn_tracks<R: Rng>(config: &SceneConfig, rng: &mut R) -> Vec<ObjectTrack> {
    let n_ped = rng.random_range(config.pedestrians.min..=config.pedestrians.max);
    let n_veh = rng.random_range(config.vehicles.min..=config.vehicles.max);
    let mut tracks = Vec::with_capacity(n_ped + n_veh);
    let mut next_id = 1u32;
    for (class, count) in [(ObjectClass::Pedestrian, n_ped), (ObjectClass::Vehicle, n_veh)] {
        for _ in 0..count {
            let position = config.fov.sample(rng);
            let (lo, hi) = match class {
                ObjectClass::Pedestrian => config.pedestrian_speed_mps,
                _ => config.vehicle_speed_mps,
            };
            let speed = rng.random_range(lo..=hi);
            let heading = rng.random_range(0.0..2.0 * PI);
            let (m, len, wid) = match class {
                ObjectClass::Pedestrian => {
                    (config.pedestrian_scatterers, PEDESTRIAN_BODY_M, PEDESTRIAN_BODY_M)
                }
                _ => (config.vehicle_scatterers, VEHICLE_LENGTH_M, VEHICLE_WIDTH_M),
            };
            let body_offsets_m = if m == 1 {
                vec![[0.0, 0.0]]
            } else {
                (0..m)
                    .map(|_| {
                        [
                            rng.random_range(-len / 2.0..=len / 2.0),
                            rng.random_range(-wid / 2.0..=wid / 2.0),
                        ]
                    })
                    .collect()
            };
            tracks.push(ObjectTrack {
                object_id: next_id,
                class,
                initial_position_m: position,
                velocity_mps: [speed * heading.sin(), speed * heading.cos()],
                orientation_rad: heading,
                body_offsets_m,
                exited: false,
            });
            next_id += 1;
        }
    }
    tracks
}

/// Generates a full scene: tracks advance at constant velocity, cross
/// sections are redrawn every frame and labels follow the occupied bins.
pub fn generate_scene(config: &SceneConfig, chirp: &ChirpParams) -> Result<Scene> {
    config.validate(chirp)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
    let clutter: Vec<[f64; 2]> = (0..config.clutter_points)
        .map(|_| config.fov.sample(&mut rng))
        .collect();
    let mut tracks = spawn_tracks(config, &mut rng);
    let jitter = Normal::new(0.0, config.micro_doppler_std_mps)
        .map_err(|e| Error::Config(format!("micro-Doppler spread: {e}")))?;
    let jitter_cap = 4.0 * config.micro_doppler_std_mps;

    let dt = 1.0 / config.frame_rate_hz;
    let mut frames = Vec::with_capacity(config.num_frames);
    let mut labels = Vec::with_capacity(config.num_frames);
    for k in 0..config.num_frames {
        let t = k as f64 * dt;
        let mut points = Vec::new();
        for &position_m in &clutter {
            points.push(ScenePoint {
                object_id: 0,
                class: ObjectClass::Clutter,
                position_m,
                velocity_mps: [0.0, 0.0],
                rcs_m2: sample_clutter_rcs(config.clutter_rayleigh_scale, &mut rng),
            });
        }
        for track in tracks.iter_mut().filter(|tr| !tr.exited) {
            let center = track.position_at(t);
            if !config.fov.contains(center) {
                track.exited = true;
                continue;
            }
            match track.class {
                ObjectClass::Pedestrian => {
                    for &offset in &track.body_offsets_m {
                        let pos = track.scatterer_position(center, offset);
                        let r = pos[0].hypot(pos[1]);
                        let j: f64 = jitter.sample(&mut rng);
                        let j = j.clamp(-jitter_cap, jitter_cap);
                        points.push(ScenePoint {
                            object_id: track.object_id,
                            class: ObjectClass::Pedestrian,
                            position_m: pos,
                            velocity_mps: [
                                track.velocity_mps[0] + j * pos[0] / r,
                                track.velocity_mps[1] + j * pos[1] / r,
                            ],
                            rcs_m2: sample_pedestrian_rcs(
                                config.pedestrian_nakagami_m,
                                config.pedestrian_nakagami_omega,
                                &mut rng,
                            ),
                        });
                    }
                }
                _ => {
                    let mean = vehicle_rcs_pattern(track.aspect_rad(center), &config.vehicle_rcs);
                    let rcs = assign_vehicle_scatterer_rcs(
                        mean,
                        track.num_scatterers(),
                        config.vehicle_rcs_noise,
                        &mut rng,
                    );
                    for (&offset, rcs_m2) in track.body_offsets_m.iter().zip(rcs) {
                        points.push(ScenePoint {
                            object_id: track.object_id,
                            class: ObjectClass::Vehicle,
                            position_m: track.scatterer_position(center, offset),
                            velocity_mps: track.velocity_mps,
                            rcs_m2,
                        });
                    }
                }
            }
        }
        let frame = PointCloudFrame {
            frame_index: k,
            points,
        };
        labels.push(ground_truth_boxes(&frame, chirp, config.label_margin_bins));
        frames.push(frame);
    }
    Ok(Scene {
        tracks,
        frames,
        labels,
    })
}

/// Label boxes for every non-clutter object: the envelope of its occupied
/// bins grown by `margin_bins` and clipped to the image. Objects with no
/// scatterer inside the unambiguous limits are left unlabelled.
pub fn ground_truth_boxes(
    frame: &PointCloudFrame,
    chirp: &ChirpParams,
    margin_bins: usize,
) -> Vec<GroundTruthBox> {
    let rows = chirp.samples_per_sweep as i64;
    let cols = chirp.num_pulses as i64;
    let mut envelopes: BTreeMap<u32, (ObjectClass, [i64; 4])> = BTreeMap::new();
    for p in frame.points.iter().filter(|p| p.class != ObjectClass::Clutter) {
        let (r, d) = chirp.bin_of(p.range_m(), p.radial_velocity_mps());
        if r < 0 || r >= rows || d < 0 || d >= cols {
            continue;
        }
        let entry = envelopes
            .entry(p.object_id)
            .or_insert((p.class, [r, r, d, d]));
        let e = &mut entry.1;
        e[0] = e[0].min(r);
        e[1] = e[1].max(r);
        e[2] = e[2].min(d);
        e[3] = e[3].max(d);
    }
    let m = margin_bins as i64;
    envelopes
        .into_iter()
        .map(|(object_id, (class, e))| GroundTruthBox {
            range_bin_min: (e[0] - m).max(0) as usize,
            range_bin_max: (e[1] + m).min(rows - 1) as usize,
            doppler_bin_min: (e[2] - m).max(0) as usize,
            doppler_bin_max: (e[3] + m).min(cols - 1) as usize,
            class,
            object_id,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chirp() -> ChirpParams {
        ChirpParams::default()
    }

    /// Point placed on boresight at the given bins of the default chirp.
    fn point_at(object_id: u32, class: ObjectClass, range_bin: f64, doppler_offset: f64) -> ScenePoint {
        let c = chirp();
        let v = -doppler_offset / (2.0 * c.carrier_freq_hz / crate::radar::SPEED_OF_LIGHT
            * c.pulse_repetition_interval_s
            * c.num_pulses as f64);
        ScenePoint {
            object_id,
            class,
            position_m: [0.0, range_bin * c.range_bin_size_m()],
            velocity_mps: [0.0, v],
            rcs_m2: 1.0,
        }
    }

    #[test]
    fn single_point_label_with_margin() {
        let frame = PointCloudFrame {
            frame_index: 0,
            points: vec![point_at(3, ObjectClass::Pedestrian, 50.0, 26.0)],
        };
        let boxes = ground_truth_boxes(&frame, &chirp(), 1);
        assert_eq!(
            boxes,
            vec![GroundTruthBox {
                range_bin_min: 49,
                range_bin_max: 51,
                doppler_bin_min: 89,
                doppler_bin_max: 91,
                class: ObjectClass::Pedestrian,
                object_id: 3,
            }]
        );
    }

    #[test]
    fn vehicle_envelope_and_clutter_only() {
        let frame = PointCloudFrame {
            frame_index: 0,
            points: vec![
                point_at(2, ObjectClass::Vehicle, 40.0, 0.0),
                point_at(2, ObjectClass::Vehicle, 44.0, 0.0),
                point_at(0, ObjectClass::Clutter, 70.0, 0.0),
            ],
        };
        let boxes = ground_truth_boxes(&frame, &chirp(), 1);
        assert_eq!(boxes.len(), 1);
        let b = boxes[0];
        assert_eq!(
            (b.range_bin_min, b.range_bin_max, b.doppler_bin_min, b.doppler_bin_max),
            (39, 45, 63, 65)
        );
        let clutter = PointCloudFrame {
            frame_index: 0,
            points: vec![point_at(0, ObjectClass::Clutter, 70.0, 0.0)],
        };
        assert!(ground_truth_boxes(&clutter, &chirp(), 1).is_empty());
    }

    #[test]
    fn edge_boxes_are_clipped() {
        let frame = PointCloudFrame {
            frame_index: 0,
            points: vec![point_at(1, ObjectClass::Pedestrian, 255.0, 63.0)],
        };
        let b = ground_truth_boxes(&frame, &chirp(), 2)[0];
        assert_eq!((b.range_bin_max, b.doppler_bin_max), (255, 127));
    }

    #[test]
    fn clutter_only_scene_is_static() {
        let config = SceneConfig {
            pedestrians: CountRange::fixed(0),
            vehicles: CountRange::fixed(0),
            num_frames: 5,
            ..SceneConfig::default()
        };
        let scene = generate_scene(&config, &chirp()).unwrap();
        for f in &scene.frames {
            assert_eq!(f.points.len(), 200);
            assert!(f.points.iter().all(|p| p.radial_velocity_mps() == 0.0));
        }
        assert!(scene.labels.iter().all(Vec::is_empty));
    }

    #[test]
    fn vehicle_range_follows_closed_form() {
        let config = SceneConfig {
            pedestrians: CountRange::fixed(0),
            vehicles: CountRange::fixed(1),
            clutter_points: 0,
            vehicle_scatterers: 1,
            rng_seed: 17,
            ..SceneConfig::default()
        };
        let scene = generate_scene(&config, &chirp()).unwrap();
        let track = &scene.tracks[0];
        let (p0, v) = (track.initial_position_m, track.velocity_mps);
        for f in &scene.frames {
            let Some(pt) = f.points.first() else { break };
            let t = f.frame_index as f64 / config.frame_rate_hz;
            let expected = (p0[0] + v[0] * t).hypot(p0[1] + v[1] * t);
            assert!((pt.range_m() - expected).abs() < 1e-9);
        }
    }

    #[test]
    fn seeds_control_reproducibility() {
        let config = SceneConfig {
            num_frames: 10,
            rng_seed: 4,
            ..SceneConfig::default()
        };
        let a = generate_scene(&config, &chirp()).unwrap();
        let b = generate_scene(&config, &chirp()).unwrap();
        assert_eq!(a, b);
        let c = generate_scene(&SceneConfig { rng_seed: 5, ..config }, &chirp()).unwrap();
        assert_ne!(a.frames[0].points[0].rcs_m2, c.frames[0].points[0].rcs_m2);
    }

    #[test]
    fn labels_cover_every_object_bin() {
        let config = SceneConfig {
            pedestrians: CountRange::fixed(3),
            vehicles: CountRange::fixed(3),
            num_frames: 40,
            rng_seed: 8,
            ..SceneConfig::default()
        };
        let c = chirp();
        let scene = generate_scene(&config, &c).unwrap();
        for (frame, labels) in scene.frames.iter().zip(&scene.labels) {
            for p in frame.points.iter().filter(|p| p.class != ObjectClass::Clutter) {
                let s = p.scatterer();
                s.validate(&c).unwrap();
                let (r, d) = c.bin_of(s.range_m, s.radial_velocity_mps);
                let b = labels.iter().find(|b| b.object_id == p.object_id).unwrap();
                assert!(b.range_bin_min as i64 <= r && r <= b.range_bin_max as i64);
                assert!(b.doppler_bin_min as i64 <= d && d <= b.doppler_bin_max as i64);
            }
        }
    }

    #[test]
    fn rejects_fov_beyond_unambiguous_range() {
        let mut config = SceneConfig::default();
        config.fov.y_max_m = 300.0;
        assert!(matches!(config.validate(&chirp()), Err(Error::Config(_))));
    }
}
