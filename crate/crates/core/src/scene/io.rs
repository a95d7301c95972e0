//! CSV persistence for point clouds and label boxes.

use std::path::Path;

use super::{GroundTruthBox, PointCloudFrame, ScenePoint};
use crate::error::{Error, Result};
use crate::radar::ObjectClass;

const SCENE_HEADER: [&str; 8] = [
    "frame", "object_id", "class", "pos_x_m", "pos_y_m", "vel_x_mps", "vel_y_mps", "rcs_m2",
];
const LABEL_HEADER: [&str; 7] = [
    "frame", "object_id", "class", "rbin_min", "rbin_max", "dbin_min", "dbin_max",
];

/// Nine significant digits.
pub(crate) fn fmt_float(x: f64) -> String {
    format!("{x:.8e}")
}

fn parse<T: std::str::FromStr>(field: &str, what: &str, line: u64) -> Result<T> {
    field
        .trim()
        .parse()
        .map_err(|_| Error::Data(format!("line {line}: bad {what} {field:?}")))
}

fn check_header(rdr: &mut csv::Reader<std::fs::File>, expected: &[&str], path: &Path) -> Result<()> {
    let header = rdr.headers()?;
    if header.iter().ne(expected.iter().copied()) {
        return Err(Error::Data(format!(
            "{}: expected header {:?}",
            path.display(),
            expected.join(",")
        )));
    }
    Ok(())
}

pub fn write_scene_csv(path: &Path, frames: &[PointCloudFrame]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(SCENE_HEADER)?;
    for f in frames {
        for p in &f.points {
            w.write_record([
                f.frame_index.to_string(),
                p.object_id.to_string(),
                p.class.code().to_string(),
                fmt_float(p.position_m[0]),
                fmt_float(p.position_m[1]),
                fmt_float(p.velocity_mps[0]),
                fmt_float(p.velocity_mps[1]),
                fmt_float(p.rcs_m2),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Reads a scene file into exactly `num_frames` frames; frames without rows
/// come back empty.
pub fn read_scene_csv(path: &Path, num_frames: usize) -> Result<Vec<PointCloudFrame>> {
    let mut rdr = csv::Reader::from_path(path)?;
    check_header(&mut rdr, &SCENE_HEADER, path)?;
    let mut frames: Vec<PointCloudFrame> = (0..num_frames)
        .map(|frame_index| PointCloudFrame {
            frame_index,
            points: Vec::new(),
        })
        .collect();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != SCENE_HEADER.len() {
            return Err(Error::Data(format!("line {line}: expected 8 fields")));
        }
        let frame: usize = parse(&rec[0], "frame", line)?;
        let slot = frames.get_mut(frame).ok_or_else(|| {
            Error::Data(format!("line {line}: frame {frame} beyond {num_frames} frames"))
        })?;
        slot.points.push(ScenePoint {
            object_id: parse(&rec[1], "object_id", line)?,
            class: ObjectClass::from_code(rec[2].trim())?,
            position_m: [parse(&rec[3], "pos_x_m", line)?, parse(&rec[4], "pos_y_m", line)?],
            velocity_mps: [
                parse(&rec[5], "vel_x_mps", line)?,
                parse(&rec[6], "vel_y_mps", line)?,
            ],
            rcs_m2: parse(&rec[7], "rcs_m2", line)?,
        });
    }
    Ok(frames)
}

pub fn write_labels_csv(path: &Path, labels: &[Vec<GroundTruthBox>]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(LABEL_HEADER)?;
    for (frame, boxes) in labels.iter().enumerate() {
        for b in boxes {
            w.write_record([
                frame.to_string(),
                b.object_id.to_string(),
                b.class.code().to_string(),
                b.range_bin_min.to_string(),
                b.range_bin_max.to_string(),
                b.doppler_bin_min.to_string(),
                b.doppler_bin_max.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_labels_csv(path: &Path, num_frames: usize) -> Result<Vec<Vec<GroundTruthBox>>> {
    let mut rdr = csv::Reader::from_path(path)?;
    check_header(&mut rdr, &LABEL_HEADER, path)?;
    let mut labels = vec![Vec::new(); num_frames];
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != LABEL_HEADER.len() {
            return Err(Error::Data(format!("line {line}: expected 7 fields")));
        }
        let frame: usize = parse(&rec[0], "frame", line)?;
        let b = GroundTruthBox {
            object_id: parse(&rec[1], "object_id", line)?,
            class: ObjectClass::from_code(rec[2].trim())?,
            range_bin_min: parse(&rec[3], "rbin_min", line)?,
            range_bin_max: parse(&rec[4], "rbin_max", line)?,
            doppler_bin_min: parse(&rec[5], "dbin_min", line)?,
            doppler_bin_max: parse(&rec[6], "dbin_max", line)?,
        };
        if b.range_bin_min > b.range_bin_max || b.doppler_bin_min > b.doppler_bin_max {
            return Err(Error::Data(format!("line {line}: inverted box")));
        }
        labels
            .get_mut(frame)
            .ok_or_else(|| Error::Data(format!("line {line}: frame {frame} out of range")))?
            .push(b);
    }
    Ok(labels)
}
