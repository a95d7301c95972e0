use std::path::Path;

use crate::error::Result;

pub const TRAIN_LOG_HEADER: [&str; 8] = [
    "step",
    "episode",
    "reward",
    "f1",
    "action_norm",
    "power_db",
    "critic_loss",
    "actor_objective",
];

/// One row of the per-step training log. Losses are absent before the first
/// update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainLogRow {
    pub step: u64,
    pub episode: u64,
    pub reward: f64,
    pub f1: f64,
    pub action_norm: f64,
    pub power_db: f64,
    pub critic_loss: Option<f64>,
    pub actor_objective: Option<f64>,
}

impl TrainLogRow {
    pub fn fields(&self) -> [String; 8] {
        let opt = |v: Option<f64>| v.map(|x| format!("{x:.8e}")).unwrap_or_default();
        [
            self.step.to_string(),
            self.episode.to_string(),
            format!("{:.8e}", self.reward),
            format!("{:.8e}", self.f1),
            format!("{:.8e}", self.action_norm),
            format!("{:.8e}", self.power_db),
            opt(self.critic_loss),
            opt(self.actor_objective),
        ]
    }
}

/// Appends rows to a training log, writing the header when the file is new.
pub struct TrainLogWriter {
    inner: csv::Writer<std::fs::File>,
}

impl TrainLogWriter {
    pub fn open(path: &Path, append: bool) -> Result<Self> {
        let exists = append && path.exists() && std::fs::metadata(path)?.len() > 0;
        let file = std::fs::OpenOptions::new()
            .create(true)
            .write(true)
            .append(append)
            .truncate(!append)
            .open(path)?;
        let mut inner = csv::Writer::from_writer(file);
        if !exists {
            inner.write_record(TRAIN_LOG_HEADER)?;
        }
        Ok(TrainLogWriter { inner })
    }

    pub fn write(&mut self, row: &TrainLogRow) -> Result<()> {
        self.inner.write_record(row.fields())?;
        Ok(())
    }

    pub fn flush(&mut self) -> Result<()> {
        self.inner.flush()?;
        Ok(())
    }
}

/// Reads back rows written by [`TrainLogWriter`].
pub fn read_train_log(path: &Path) -> Result<Vec<TrainLogRow>> {
    let mut rdr = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let f = |i: usize| -> Result<f64> {
            rec[i]
                .parse()
                .map_err(|_| crate::Error::Data(format!("bad training log field {:?}", &rec[i])))
        };
        let o = |i: usize| -> Result<Option<f64>> {
            if rec[i].is_empty() {
                Ok(None)
            } else {
                f(i).map(Some)
            }
        };
        out.push(TrainLogRow {
            step: f(0)? as u64,
            episode: f(1)? as u64,
            reward: f(2)?,
            f1: f(3)?,
            action_norm: f(4)?,
            power_db: f(5)?,
            critic_loss: o(6)?,
            actor_objective: o(7)?,
        });
    }
    Ok(out)
}
