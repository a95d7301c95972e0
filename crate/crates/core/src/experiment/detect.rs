use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};

use super::config::ExperimentConfig;
use super::dataset::{dataset_dir, Manifest, Split};
use crate::detect::{
    f1_score, kmeans_anchors, to_boxes, write_anchors, write_detections_csv, BBox, CfarDetector, Detector,
};
use crate::error::{Error, Result};
use crate::radar::{range_doppler_map_windowed, read_cube, synth_baseband, write_cube, PowerSetting};
use crate::seed::derive_seed;

const DETECT_STREAM: u64 = 31;
const ANCHOR_SEED_STREAM: u64 = 32;

/// Where the frames for `cmd_detect` come from.
#[derive(Debug, Clone, PartialEq)]
pub enum DetectSource {
    /// A scene of the generated dataset, by name (e.g. `test_000`).
    Scene { name: String, power_db: f64 },
    /// A directory of `*.cube` files, processed in file-name order.
    Cubes(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectOutcome {
    pub out_dir: PathBuf,
    pub frames: usize,
    pub detections: Vec<Vec<BBox>>,
    /// Per-frame F1 against the labels; empty for external cubes.
    pub f1: Vec<f64>,
}

fn detect_scene(cfg: &ExperimentConfig, name: &str, power_db: f64) -> Result<DetectOutcome> {
    let out = &cfg.experiment.out_dir;
    let env_cfg = cfg.env_config();
    if !(env_cfg.power_min_db..=env_cfg.power_max_db).contains(&power_db) {
        return Err(Error::Domain(format!(
            "power {power_db} dBm outside [{}, {}]",
            env_cfg.power_min_db, env_cfg.power_max_db
        )));
    }
    let manifest = Manifest::load_checked(cfg, out)?;
    let entry = manifest
        .scenes
        .iter()
        .find(|e| e.name == name)
        .ok_or_else(|| Error::Data(format!("no scene named {name} in the dataset")))?;
    let data = dataset_dir(out);
    let scene = crate::env::SceneData::load(
        &entry.name,
        &data.join(&entry.scene_csv),
        &data.join(&entry.labels_csv),
        manifest.num_frames,
    )?;
    let dir = out.join("detect").join(format!("{name}_{power_db}dBm"));
    let cubes = dir.join("cubes");
    std::fs::create_dir_all(&cubes)?;
    let detector = CfarDetector::new(env_cfg.detector);
    let mut detections = Vec::with_capacity(scene.frames.len());
    let mut f1 = Vec::with_capacity(scene.frames.len());
    for (t, frame) in scene.frames.iter().enumerate() {
        let seed = derive_seed(cfg.experiment.seed, &[DETECT_STREAM, entry.seed, t as u64]);
        let raw = synth_baseband(
            &frame.scatterers(),
            &cfg.chirp,
            PowerSetting(power_db),
            env_cfg.noise_power_dbm,
            seed,
        )?;
        write_cube(BufWriter::new(File::create(cubes.join(format!("frame_{t:04}.cube")))?), &raw)?;
        let image = range_doppler_map_windowed(&raw, env_cfg.window);
        let boxes = detector.detect(&image)?;
        let gts = to_boxes(&scene.labels[t]);
        f1.push(f1_score(&boxes, &gts, env_cfg.iou_threshold, env_cfg.class_agnostic_f1).f1);
        detections.push(boxes);
    }
    write_detections_csv(&dir.join("detections.csv"), &detections)?;
    Ok(DetectOutcome {
        out_dir: dir,
        frames: detections.len(),
        detections,
        f1,
    })
}

fn detect_cubes(cfg: &ExperimentConfig, src: &Path) -> Result<DetectOutcome> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(src)
        .map_err(|e| Error::Data(format!("cannot read {}: {e}", src.display())))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "cube"))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(Error::Data(format!("no .cube files in {}", src.display())));
    }
    let env_cfg = cfg.env_config();
    let detector = CfarDetector::new(env_cfg.detector);
    let mut detections = Vec::with_capacity(files.len());
    for f in &files {
        let raw = read_cube(BufReader::new(File::open(f)?))?;
        let image = range_doppler_map_windowed(&raw, env_cfg.window);
        detections.push(detector.detect(&image)?);
    }
    let label = src.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let dir = cfg.experiment.out_dir.join("detect").join(format!("external_{label}"));
    std::fs::create_dir_all(&dir)?;
    write_detections_csv(&dir.join("detections.csv"), &detections)?;
    Ok(DetectOutcome {
        out_dir: dir,
        frames: detections.len(),
        detections,
        f1: Vec::new(),
    })
}

/// Renders a scene at a fixed power (or reads external cubes), runs the
/// detector and dumps detections plus the raw cubes.
pub fn cmd_detect(cfg: &ExperimentConfig, source: &DetectSource) -> Result<DetectOutcome> {
    match source {
        DetectSource::Scene { name, power_db } => detect_scene(cfg, name, *power_db),
        DetectSource::Cubes(dir) => detect_cubes(cfg, dir),
    }
}

/// Box shapes `(width, height)` in bins: width along Doppler, height
/// along range.
pub fn box_shape(b: &BBox) -> (f64, f64) {
    (b.doppler_extent() as f64, b.range_extent() as f64)
}

/// Clusters the ground-truth box shapes of the detector training split.
/// Anchors are written sorted by area, one `width height` pair per line.
pub fn cmd_anchors(cfg: &ExperimentConfig, k: Option<usize>) -> Result<(PathBuf, Vec<(f64, f64)>)> {
    let out = &cfg.experiment.out_dir;
    let k = k.unwrap_or(cfg.experiment.anchors_k);
    let manifest = Manifest::load_checked(cfg, out)?;
    let scenes = manifest.load_split(out, Split::TrainDet)?;
    let shapes: Vec<(f64, f64)> = scenes
        .iter()
        .flat_map(|s| s.labels.iter().flatten())
        .map(|g| box_shape(&BBox::from(g)))
        .collect();
    let mut distinct = shapes.clone();
    distinct.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    distinct.dedup();
    if k > distinct.len() {
        return Err(Error::Data(format!(
            "k = {k} exceeds the {} distinct box shapes in the training labels",
            distinct.len()
        )));
    }
    let mut anchors = kmeans_anchors(&shapes, k, derive_seed(cfg.experiment.seed, &[ANCHOR_SEED_STREAM]))?;
    anchors.sort_by(|a, b| (a.0 * a.1).total_cmp(&(b.0 * b.1)));
    let path = out.join("anchors.txt");
    std::fs::create_dir_all(out)?;
    write_anchors(&path, &anchors)?;
    Ok((path, anchors))
}
