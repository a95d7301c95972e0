use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::radar::RangeDopplerImage;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CfarParams {
    pub guard_range: usize,
    pub guard_doppler: usize,
    pub training_range: usize,
    pub training_doppler: usize,
    pub false_alarm_rate: f64,
}

impl Default for CfarParams {
    fn default() -> Self {
        CfarParams {
            guard_range: 2,
            guard_doppler: 2,
            training_range: 4,
            training_doppler: 4,
            false_alarm_rate: 1e-6,
        }
    }
}

impl CfarParams {
    pub fn validate(&self) -> Result<()> {
        if self.training_range + self.training_doppler == 0 {
            return Err(Error::Config("CFAR needs at least one training cell".into()));
        }
        if !(self.false_alarm_rate > 0.0 && self.false_alarm_rate < 1.0) {
            return Err(Error::Config(format!(
                "false-alarm rate {} outside (0, 1)",
                self.false_alarm_rate
            )));
        }
        Ok(())
    }

    /// Threshold multiplier for `n` exponentially-distributed training cells.
    pub fn alpha(&self, n: usize) -> f64 {
        let n = n as f64;
        n * (self.false_alarm_rate.powf(-1.0 / n) - 1.0)
    }

    fn window_rows(&self) -> usize {
        2 * (self.guard_range + self.training_range) + 1
    }

    fn window_cols(&self) -> usize {
        2 * (self.guard_doppler + self.training_doppler) + 1
    }
}

/// Boolean detection mask aligned with a range-Doppler image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DetectionMask {
    pub rows: usize,
    pub cols: usize,
    pub cells: Vec<bool>,
}

impl DetectionMask {
    pub fn new(rows: usize, cols: usize) -> Self {
        DetectionMask {
            rows,
            cols,
            cells: vec![false; rows * cols],
        }
    }

    pub fn get(&self, r: usize, d: usize) -> bool {
        self.cells[r * self.cols + d]
    }

    pub fn set(&mut self, r: usize, d: usize, v: bool) {
        self.cells[r * self.cols + d] = v;
    }

    pub fn count(&self) -> usize {
        self.cells.iter().filter(|&&c| c).count()
    }
}

/// Summed-area table with a zero border row and column.
struct Integral {
    cols: usize,
    sums: Vec<f64>,
}

impl Integral {
    fn new(values: &[f64], rows: usize, cols: usize) -> Self {
        let w = cols + 1;
        let mut sums = vec![0.0; (rows + 1) * w];
        for r in 0..rows {
            let mut row_acc = 0.0;
            for c in 0..cols {
                row_acc += values[r * cols + c];
                sums[(r + 1) * w + c + 1] = sums[r * w + c + 1] + row_acc;
            }
        }
        Integral { cols: w, sums }
    }

    /// Sum over rows `r0..r1` and columns `c0..c1` (half-open).
    fn rect(&self, r0: usize, r1: usize, c0: usize, c1: usize) -> f64 {
        let w = self.cols;
        self.sums[r1 * w + c1] - self.sums[r0 * w + c1] - self.sums[r1 * w + c0]
            + self.sums[r0 * w + c0]
    }
}

/// Two-dimensional cell-averaging CFAR on linear power. Cells near the
/// image border use whatever part of the training ring is available.
pub fn ca_cfar(image: &RangeDopplerImage, params: &CfarParams) -> Result<DetectionMask> {
    params.validate()?;
    let (rows, cols) = (image.range_bins, image.doppler_bins);
    if params.window_rows() > rows || params.window_cols() > cols {
        return Err(Error::Config(format!(
            "CFAR window {}x{} exceeds image {}x{}",
            params.window_rows(),
            params.window_cols(),
            rows,
            cols
        )));
    }
    let power = image.linear_power();
    let table = Integral::new(&power, rows, cols);
    let outer_r = params.guard_range + params.training_range;
    let outer_d = params.guard_doppler + params.training_doppler;
    let max_cells = params.window_rows() * params.window_cols();
    let alphas: Vec<f64> = (0..=max_cells)
        .map(|n| if n == 0 { f64::INFINITY } else { params.alpha(n) })
        .collect();

    let span = |center: usize, half: usize, len: usize| {
        (center.saturating_sub(half), (center + half + 1).min(len))
    };
    let mut mask = DetectionMask::new(rows, cols);
    for r in 0..rows {
        let (or0, or1) = span(r, outer_r, rows);
        let (ir0, ir1) = span(r, params.guard_range, rows);
        for d in 0..cols {
            let (oc0, oc1) = span(d, outer_d, cols);
            let (ic0, ic1) = span(d, params.guard_doppler, cols);
            let n = (or1 - or0) * (oc1 - oc0) - (ir1 - ir0) * (ic1 - ic0);
            if n == 0 {
                continue;
            }
            let sum = table.rect(or0, or1, oc0, oc1) - table.rect(ir0, ir1, ic0, ic1);
            let noise = sum.max(0.0) / n as f64;
            if power[r * cols + d] > alphas[n] * noise {
                mask.cells[r * cols + d] = true;
            }
        }
    }
    Ok(mask)
}
