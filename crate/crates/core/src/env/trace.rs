use std::path::Path;

use crate::error::Result;

pub const EPISODE_TRACE_HEADER: [&str; 6] =
    ["frame", "power_db", "f1", "reward", "num_targets", "num_detections"];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub frame: usize,
    pub power_db: f64,
    pub f1: f64,
    pub reward: f64,
    pub num_targets: usize,
    pub num_detections: usize,
}

impl From<&super::StepResult> for TraceRow {
    fn from(r: &super::StepResult) -> Self {
        TraceRow {
            frame: r.info.frame,
            power_db: r.info.power_db,
            f1: r.info.f1,
            reward: r.reward,
            num_targets: r.info.num_targets,
            num_detections: r.info.detections.len(),
        }
    }
}

pub fn write_episode_trace(path: &Path, rows: &[TraceRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(EPISODE_TRACE_HEADER)?;
    for r in rows {
        w.write_record([
            r.frame.to_string(),
            format!("{:.8e}", r.power_db),
            format!("{:.8e}", r.f1),
            format!("{:.8e}", r.reward),
            r.num_targets.to_string(),
            r.num_detections.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
