//! FMCW signal model: chirp parameters, point scatterers, stretch-processed
//! baseband synthesis and range-Doppler rendering.
//!
//! Conventions used throughout the crate:
//!
//! * `v_R > 0` means the scatterer is receding; it produces a negative
//!   Doppler frequency and therefore lands left of the zero-Doppler column.
//! * Range-Doppler images are stored row-major with range bins as rows and
//!   Doppler bins as columns; zero Doppler sits at column `P / 2`.
//! * Transmit power is expressed in dB relative to one milliwatt.

mod cube;

pub use cube::{read_cube, write_cube, CUBE_MAGIC, CUBE_VERSION};

use std::cell::RefCell;
use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Propagation speed. The rounded value keeps the default range bins at
/// exactly one metre.
pub const SPEED_OF_LIGHT: f64 = 3.0e8;

/// Floor added to magnitudes before taking the logarithm.
pub const MAGNITUDE_EPS: f64 = 1e-30;

/// dB value of an exactly-zero pixel.
pub const ZERO_MAGNITUDE_DB: f64 = -600.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChirpParams {
    pub carrier_freq_hz: f64,
    pub bandwidth_hz: f64,
    pub sweep_duration_s: f64,
    pub pulse_repetition_interval_s: f64,
    pub num_pulses: usize,
    pub samples_per_sweep: usize,
}

impl Default for ChirpParams {
    fn default() -> Self {
        ChirpParams {
            carrier_freq_hz: 77e9,
            bandwidth_hz: 150e6,
            sweep_duration_s: 25.6e-6,
            pulse_repetition_interval_s: 40e-6,
            num_pulses: 128,
            samples_per_sweep: 256,
        }
    }
}

impl ChirpParams {
    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.carrier_freq_hz,
            self.bandwidth_hz,
            self.sweep_duration_s,
            self.pulse_repetition_interval_s,
        ]
        .iter()
        .all(|v| v.is_finite() && *v > 0.0);
        if !finite {
            return Err(Error::Config(
                "chirp frequencies and durations must be positive and finite".into(),
            ));
        }
        if self.sweep_duration_s >= self.pulse_repetition_interval_s {
            return Err(Error::Config(format!(
                "sweep duration {} s must be shorter than the repetition interval {} s",
                self.sweep_duration_s, self.pulse_repetition_interval_s
            )));
        }
        if self.num_pulses < 2 || self.samples_per_sweep < 2 {
            return Err(Error::Config(
                "need at least two pulses and two samples per sweep".into(),
            ));
        }
        Ok(())
    }

    pub fn sample_rate_hz(&self) -> f64 {
        self.samples_per_sweep as f64 / self.sweep_duration_s
    }

    /// Sweep rate `B / T_s`.
    pub fn sweep_rate_hz_per_s(&self) -> f64 {
        self.bandwidth_hz / self.sweep_duration_s
    }

    pub fn wavelength_m(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier_freq_hz
    }

    pub fn range_bin_size_m(&self) -> f64 {
        SPEED_OF_LIGHT * self.sample_rate_hz()
            / (2.0 * self.sweep_rate_hz_per_s() * self.samples_per_sweep as f64)
    }

    pub fn doppler_bin_size_hz(&self) -> f64 {
        1.0 / (self.num_pulses as f64 * self.pulse_repetition_interval_s)
    }

    pub fn max_range_m(&self) -> f64 {
        self.sample_rate_hz() * SPEED_OF_LIGHT / (2.0 * self.sweep_rate_hz_per_s())
    }

    pub fn max_velocity_mps(&self) -> f64 {
        SPEED_OF_LIGHT / (4.0 * self.carrier_freq_hz * self.pulse_repetition_interval_s)
    }

    pub fn zero_doppler_col(&self) -> usize {
        self.num_pulses / 2
    }

    /// Fractional range bin of a scatterer at `range_m`.
    pub fn range_bin_f(&self, range_m: f64) -> f64 {
        2.0 * self.sweep_rate_hz_per_s() * range_m / SPEED_OF_LIGHT
            * self.samples_per_sweep as f64
            / self.sample_rate_hz()
    }

    /// Fractional Doppler offset (in bins, relative to the zero-Doppler
    /// column) of a scatterer with radial velocity `v_mps`.
    pub fn doppler_offset_f(&self, v_mps: f64) -> f64 {
        -2.0 * v_mps * self.carrier_freq_hz / SPEED_OF_LIGHT
            * self.pulse_repetition_interval_s
            * self.num_pulses as f64
    }

    /// Nearest (range row, Doppler column) for a scatterer; may fall outside
    /// the image when the scatterer is beyond the unambiguous limits.
    pub fn bin_of(&self, range_m: f64, v_mps: f64) -> (i64, i64) {
        let r = self.range_bin_f(range_m).round() as i64;
        let d = self.zero_doppler_col() as i64 + self.doppler_offset_f(v_mps).round() as i64;
        (r, d)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ObjectClass {
    Pedestrian,
    Vehicle,
    Clutter,
}

impl ObjectClass {
    /// Short code used in the CSV formats.
    pub fn code(self) -> &'static str {
        match self {
            ObjectClass::Pedestrian => "ped",
            ObjectClass::Vehicle => "veh",
            ObjectClass::Clutter => "clt",
        }
    }

    pub fn from_code(code: &str) -> Result<Self> {
        match code {
            "ped" => Ok(ObjectClass::Pedestrian),
            "veh" => Ok(ObjectClass::Vehicle),
            "clt" => Ok(ObjectClass::Clutter),
            other => Err(Error::Data(format!("unknown class code {other:?}"))),
        }
    }
}

/// One point reflector as seen by the radar in a single frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scatterer {
    pub range_m: f64,
    pub radial_velocity_mps: f64,
    pub rcs_m2: f64,
    pub class: ObjectClass,
    /// 0 is reserved for clutter.
    pub object_id: u32,
}

impl Scatterer {
    pub fn validate(&self, chirp: &ChirpParams) -> Result<()> {
        if !(self.range_m > 0.0 && self.range_m < chirp.max_range_m()) {
            return Err(Error::Domain(format!(
                "range {} m outside (0, {}) m",
                self.range_m,
                chirp.max_range_m()
            )));
        }
        if !(self.radial_velocity_mps.abs() < chirp.max_velocity_mps()) {
            return Err(Error::Domain(format!(
                "radial velocity {} m/s exceeds the unambiguous limit {} m/s",
                self.radial_velocity_mps,
                chirp.max_velocity_mps()
            )));
        }
        if !(self.rcs_m2 >= 0.0 && self.rcs_m2.is_finite()) {
            return Err(Error::Domain(format!("invalid RCS {}", self.rcs_m2)));
        }
        Ok(())
    }
}

/// Transmit power term in dBmW.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct PowerSetting(pub f64);

impl PowerSetting {
    pub fn db(self) -> f64 {
        self.0
    }

    pub fn watts(self) -> f64 {
        dbm_to_watts(self.0)
    }
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

/// Received power from the radar range equation with all antenna and
/// constant factors folded into the transmit power term.
pub fn received_power(
    power: PowerSetting,
    rcs_m2: f64,
    range_m: f64,
    chirp: &ChirpParams,
) -> Result<f64> {
    if !(range_m > 0.0) {
        return Err(Error::Domain(format!(
            "received power undefined at range {range_m} m"
        )));
    }
    let lambda = chirp.wavelength_m();
    Ok(power.watts() * lambda * lambda * rcs_m2 / range_m.powi(4))
}

/// Baseband sample matrix of one coherent processing interval.
#[derive(Debug, Clone, PartialEq)]
pub struct RadarFrame {
    /// Slow-time-major: pulse `p`'s `N` fast-time samples start at `p * N`.
    pub samples: Vec<Complex64>,
    pub chirp: ChirpParams,
    pub power: PowerSetting,
    pub noise_power_dbm: f64,
}

impl RadarFrame {
    pub fn zeros(chirp: ChirpParams, power: PowerSetting, noise_power_dbm: f64) -> Self {
        RadarFrame {
            samples: vec![Complex64::new(0.0, 0.0); chirp.samples_per_sweep * chirp.num_pulses],
            chirp,
            power,
            noise_power_dbm,
        }
    }

    pub fn sample(&self, fast: usize, pulse: usize) -> Complex64 {
        self.samples[pulse * self.chirp.samples_per_sweep + fast]
    }

    pub fn all_finite(&self) -> bool {
        self.samples.iter().all(|s| s.re.is_finite() && s.im.is_finite())
    }

    pub fn scale(&mut self, gain: f64) {
        for s in &mut self.samples {
            *s *= gain;
        }
    }
}

/// Noiseless superposition of every scatterer's stretch-processed echo.
pub fn synth_noiseless(
    scatterers: &[Scatterer],
    chirp: &ChirpParams,
    power: PowerSetting,
) -> Result<RadarFrame> {
    chirp.validate()?;
    let n_fast = chirp.samples_per_sweep;
    let n_slow = chirp.num_pulses;
    let fs = chirp.sample_rate_hz();
    let alpha = chirp.sweep_rate_hz_per_s();
    let fc = chirp.carrier_freq_hz;
    let prt = chirp.pulse_repetition_interval_s;

    let mut frame = RadarFrame::zeros(*chirp, power, f64::NEG_INFINITY);
    // Stationary scatterers share a flat slow-time phasor, so their
    // fast-time profiles are summed once and broadcast over pulses.
    let mut static_profile = vec![Complex64::new(0.0, 0.0); n_fast];
    let mut any_static = false;
    let mut fast = vec![Complex64::new(0.0, 0.0); n_fast];
    let mut slow = vec![Complex64::new(0.0, 0.0); n_slow];

    for s in scatterers {
        s.validate(chirp)?;
        let amplitude = received_power(power, s.rcs_m2, s.range_m, chirp)?.sqrt();
        if amplitude == 0.0 {
            continue;
        }
        let delay = 2.0 * s.range_m / SPEED_OF_LIGHT;
        let doppler = fc * 2.0 * s.radial_velocity_mps / SPEED_OF_LIGHT;
        // Initial phase term.
        let phi_initial = -2.0 * PI * fc * delay;
        // t = pT + n/fs: Doppler term splits into a per-pulse and a
        // per-sample part; the delay term only depends on n/fs.
        let slow_step = -2.0 * PI * doppler * prt;
        let fast_step = -2.0 * PI * (doppler + alpha * delay) / fs;
        let lead = Complex64::from_polar(amplitude, phi_initial);
        for (n, f) in fast.iter_mut().enumerate() {
            *f = lead * Complex64::from_polar(1.0, fast_step * n as f64);
        }
        if s.radial_velocity_mps == 0.0 {
            any_static = true;
            for (acc, f) in static_profile.iter_mut().zip(&fast) {
                *acc += f;
            }
            continue;
        }
        for (p, w) in slow.iter_mut().enumerate() {
            *w = Complex64::from_polar(1.0, slow_step * p as f64);
        }
        for (p, w) in slow.iter().enumerate() {
            let row = &mut frame.samples[p * n_fast..(p + 1) * n_fast];
            for (acc, f) in row.iter_mut().zip(&fast) {
                *acc += w * f;
            }
        }
    }
    if any_static {
        for row in frame.samples.chunks_mut(n_fast) {
            for (acc, f) in row.iter_mut().zip(&static_profile) {
                *acc += f;
            }
        }
    }
    Ok(frame)
}

/// Adds circularly-symmetric complex white Gaussian noise of
/// `noise_power_dbm` per sample. `-inf` leaves the frame untouched.
pub fn add_noise(frame: &mut RadarFrame, noise_power_dbm: f64, rng_seed: u64) {
    frame.noise_power_dbm = noise_power_dbm;
    if noise_power_dbm == f64::NEG_INFINITY {
        return;
    }
    let sigma = (dbm_to_watts(noise_power_dbm) / 2.0).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    for s in &mut frame.samples {
        let re: f64 = StandardNormal.sample(&mut rng);
        let im: f64 = StandardNormal.sample(&mut rng);
        *s += Complex64::new(sigma * re, sigma * im);
    }
}

/// Synthesizes one frame of stretch-processed FMCW baseband data.
pub fn synth_baseband(
    scatterers: &[Scatterer],
    chirp: &ChirpParams,
    power: PowerSetting,
    noise_power_dbm: f64,
    rng_seed: u64,
) -> Result<RadarFrame> {
    let mut frame = synth_noiseless(scatterers, chirp, power)?;
    add_noise(&mut frame, noise_power_dbm, rng_seed);
    Ok(frame)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Window {
    #[default]
    Rectangular,
    Hann,
}

impl Window {
    pub fn coefficients(self, len: usize) -> Vec<f64> {
        match self {
            Window::Rectangular => vec![1.0; len],
            // Periodic form: an on-bin tone spreads to exactly +-1 bin.
            Window::Hann => (0..len)
                .map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / len as f64).cos())
                .collect(),
        }
    }
}

/// Range-Doppler magnitude image in dB.
#[derive(Debug, Clone, PartialEq)]
pub struct RangeDopplerImage {
    /// Row-major, `range_bins` rows by `doppler_bins` columns.
    pub magnitude_db: Vec<f64>,
    pub range_bins: usize,
    pub doppler_bins: usize,
    pub range_bin_size_m: f64,
    pub doppler_bin_size_hz: f64,
    /// Expected noise power per cell, dB.
    pub noise_floor_db: f64,
}

impl RangeDopplerImage {
    pub fn get(&self, range_bin: usize, doppler_bin: usize) -> f64 {
        self.magnitude_db[range_bin * self.doppler_bins + doppler_bin]
    }

    pub fn zero_doppler_col(&self) -> usize {
        self.doppler_bins / 2
    }

    /// (range bin, Doppler bin) of the brightest pixel.
    pub fn argmax(&self) -> (usize, usize) {
        let (idx, _) = self
            .magnitude_db
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (i, &v)| {
                if v > best.1 {
                    (i, v)
                } else {
                    best
                }
            });
        (idx / self.doppler_bins, idx % self.doppler_bins)
    }

    pub fn max_db(&self) -> f64 {
        self.magnitude_db
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Linear power `|X|^2` of every pixel; exact zeros stay zero.
    pub fn linear_power(&self) -> Vec<f64> {
        self.magnitude_db.iter().map(|&db| db_to_power(db)).collect()
    }
}

pub(crate) fn db_to_power(db: f64) -> f64 {
    if db <= ZERO_MAGNITUDE_DB + 1e-9 {
        0.0
    } else {
        10f64.powf(db / 10.0)
    }
}

/// Complex 2D spectrum, row-major `[range][doppler]`, Doppler centred.
pub fn range_doppler_complex(frame: &RadarFrame, window: Window) -> Vec<Complex64> {
    let n_fast = frame.chirp.samples_per_sweep;
    let n_slow = frame.chirp.num_pulses;
    let w_fast = window.coefficients(n_fast);
    let w_slow = window.coefficients(n_slow);
    let (fast_fft, slow_fft) = fft_plans(n_fast, n_slow);

    let mut pulses = frame.samples.clone();
    for (p, row) in pulses.chunks_mut(n_fast).enumerate() {
        for (x, w) in row.iter_mut().zip(&w_fast) {
            *x *= w * w_slow[p];
        }
    }
    // The delay term carries a negative beat frequency; the conjugate kernel
    // maps a scatterer at range R to bin R / range_bin_size.
    fast_fft.process(&mut pulses);
    let mut out = vec![Complex64::new(0.0, 0.0); n_fast * n_slow];
    for (p, row) in pulses.chunks(n_fast).enumerate() {
        for (r, x) in row.iter().enumerate() {
            out[r * n_slow + p] = *x;
        }
    }
    slow_fft.process(&mut out);
    let half = n_slow / 2;
    for row in out.chunks_mut(n_slow) {
        row.rotate_left(half);
    }
    out
}

type FftPair = (Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>);

/// Inverse fast-time and forward slow-time plans, cached per thread.
fn fft_plans(n_fast: usize, n_slow: usize) -> FftPair {
    thread_local! {
        static PLANS: RefCell<(FftPlanner<f64>, HashMap<(usize, usize), FftPair>)> =
            RefCell::new((FftPlanner::new(), HashMap::new()));
    }
    PLANS.with(|cell| {
        let (planner, cache) = &mut *cell.borrow_mut();
        cache
            .entry((n_fast, n_slow))
            .or_insert_with(|| (planner.plan_fft_inverse(n_fast), planner.plan_fft_forward(n_slow)))
            .clone()
    })
}

/// Renders the range-Doppler magnitude image with a rectangular window.
pub fn range_doppler_map(frame: &RadarFrame) -> RangeDopplerImage {
    range_doppler_map_windowed(frame, Window::Rectangular)
}

pub fn range_doppler_map_windowed(frame: &RadarFrame, window: Window) -> RangeDopplerImage {
    let spectrum = range_doppler_complex(frame, window);
    let chirp = &frame.chirp;
    let energy = |len: usize| window.coefficients(len).iter().map(|w| w * w).sum::<f64>();
    let noise_floor_db = if frame.noise_power_dbm == f64::NEG_INFINITY {
        ZERO_MAGNITUDE_DB
    } else {
        10.0 * (dbm_to_watts(frame.noise_power_dbm)
            * energy(chirp.samples_per_sweep)
            * energy(chirp.num_pulses))
        .log10()
    };
    RangeDopplerImage {
        magnitude_db: spectrum
            .iter()
            .map(|c| 20.0 * (c.norm() + MAGNITUDE_EPS).log10())
            .collect(),
        range_bins: chirp.samples_per_sweep,
        doppler_bins: chirp.num_pulses,
        range_bin_size_m: chirp.range_bin_size_m(),
        doppler_bin_size_hz: chirp.doppler_bin_size_hz(),
        noise_floor_db,
    }
}

/// Block reduction used when shrinking an image to the state size.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StatePooling {
    #[default]
    Mean,
    Max,
}

/// Clips to `[clip_low_db, clip_high_db]`, maps affinely onto `[0, 1]` and
/// block-averages down to `out_height x out_width`. Output shape is
/// `[1, out_height, out_width]`.
pub fn normalize_state(
    image: &RangeDopplerImage,
    clip_low_db: f64,
    clip_high_db: f64,
    out_height: usize,
    out_width: usize,
) -> Result<Tensor> {
    normalize_state_pooled(
        image,
        clip_low_db,
        clip_high_db,
        out_height,
        out_width,
        StatePooling::Mean,
    )
}

/// [`normalize_state`] with a selectable block reduction.
pub fn normalize_state_pooled(
    image: &RangeDopplerImage,
    clip_low_db: f64,
    clip_high_db: f64,
    out_height: usize,
    out_width: usize,
    pooling: StatePooling,
) -> Result<Tensor> {
    if !(clip_low_db < clip_high_db) {
        return Err(Error::Config(format!(
            "clip range [{clip_low_db}, {clip_high_db}] is empty"
        )));
    }
    if out_height == 0
        || out_width == 0
        || image.range_bins % out_height != 0
        || image.doppler_bins % out_width != 0
    {
        return Err(Error::Config(format!(
            "state size {}x{} does not divide image {}x{}",
            out_height, out_width, image.range_bins, image.doppler_bins
        )));
    }
    let bh = image.range_bins / out_height;
    let bw = image.doppler_bins / out_width;
    let span = clip_high_db - clip_low_db;
    let mut out = vec![0.0; out_height * out_width];
    for r in 0..image.range_bins {
        for d in 0..image.doppler_bins {
            let v = (image.get(r, d).clamp(clip_low_db, clip_high_db) - clip_low_db) / span;
            let o = &mut out[(r / bh) * out_width + d / bw];
            match pooling {
                StatePooling::Mean => *o += v,
                StatePooling::Max => *o = o.max(v),
            }
        }
    }
    if pooling == StatePooling::Mean {
        let inv = 1.0 / (bh * bw) as f64;
        for v in &mut out {
            *v *= inv;
        }
    }
    Tensor::from_vec(&[1, out_height, out_width], out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn point(range_m: f64, v: f64, rcs: f64) -> Scatterer {
        Scatterer {
            range_m,
            radial_velocity_mps: v,
            rcs_m2: rcs,
            class: ObjectClass::Vehicle,
            object_id: 1,
        }
    }

    #[test]
    fn default_chirp_geometry() {
        let c = ChirpParams::default();
        c.validate().unwrap();
        assert!((c.sample_rate_hz() - 10e6).abs() < 1e-6);
        assert!((c.range_bin_size_m() - 1.0).abs() < 1e-12);
        assert!((c.max_range_m() - 256.0).abs() < 1e-9);
        assert!((c.max_velocity_mps() - 24.350649).abs() < 1e-5);
        assert!((c.sweep_rate_hz_per_s() * c.sweep_duration_s - c.bandwidth_hz).abs() < 1e-3);
    }

    #[test]
    fn chirp_rejects_long_sweep() {
        let c = ChirpParams {
            sweep_duration_s: 50e-6,
            ..ChirpParams::default()
        };
        assert!(matches!(c.validate(), Err(Error::Config(_))));
    }

    #[test]
    fn received_power_reference_value() {
        // 1 W * (3e8/77e9)^2 * 1 m^2 / 100^4, evaluated by hand.
        let lambda: f64 = 3.0e8 / 77.0e9;
        let expected = lambda * lambda / 1e8;
        let c = ChirpParams::default();
        let p = received_power(PowerSetting(30.0), 1.0, 100.0, &c).unwrap();
        assert!((p - expected).abs() / expected < 1e-12);
        assert!((p - 1.518e-13).abs() / 1.518e-13 < 1e-3);
    }

    #[test]
    fn received_power_range_law_and_zero_rcs() {
        let c = ChirpParams::default();
        let near = received_power(PowerSetting(10.0), 2.0, 40.0, &c).unwrap();
        let far = received_power(PowerSetting(10.0), 2.0, 80.0, &c).unwrap();
        assert_eq!(near / far, 16.0);
        assert_eq!(received_power(PowerSetting(10.0), 0.0, 40.0, &c).unwrap(), 0.0);
        assert!(matches!(
            received_power(PowerSetting(10.0), 1.0, 0.0, &c),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn noise_only_frame_is_tiny() {
        let c = ChirpParams::default();
        let f = synth_baseband(&[], &c, PowerSetting(30.0), -200.0, 1).unwrap();
        assert!(f.samples.iter().all(|s| s.norm() < 1e-8));
    }

    #[test]
    fn beat_frequency_of_static_point() {
        let c = ChirpParams::default();
        let f = synth_noiseless(&[point(50.0, 0.0, 1.0)], &c, PowerSetting(30.0)).unwrap();
        // Brute-force DFT of pulse 0 over candidate beat frequencies.
        let n = c.samples_per_sweep;
        let fs = c.sample_rate_hz();
        let best = (0..n)
            .map(|k| {
                let freq = -(k as f64) * fs / n as f64;
                let acc: Complex64 = (0..n)
                    .map(|i| {
                        f.sample(i, 0)
                            * Complex64::from_polar(1.0, -2.0 * PI * freq * i as f64 / fs)
                    })
                    .sum();
                (k, acc.norm())
            })
            .max_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
            .unwrap();
        let beat = best.0 as f64 * fs / n as f64;
        assert!((beat - 1.953125e6).abs() < 1.0);
        // Constant across pulses for a stationary scatterer.
        for p in 1..c.num_pulses {
            assert_eq!(f.sample(7, p), f.sample(7, 0));
        }
    }

    #[test]
    fn superposition_of_two_scatterers() {
        let c = ChirpParams::default();
        let a = point(30.0, 4.0, 1.0);
        let b = point(80.5, -7.0, 3.0);
        let pw = PowerSetting(20.0);
        let both = synth_noiseless(&[a, b], &c, pw).unwrap();
        let fa = synth_noiseless(&[a], &c, pw).unwrap();
        let fb = synth_noiseless(&[b], &c, pw).unwrap();
        for i in 0..both.samples.len() {
            assert_eq!(both.samples[i], fa.samples[i] + fb.samples[i]);
        }
    }

    #[test]
    fn peak_bins_match_geometry() {
        let c = ChirpParams::default();
        let img = range_doppler_map(
            &synth_noiseless(&[point(50.0, 0.0, 1.0)], &c, PowerSetting(30.0)).unwrap(),
        );
        assert_eq!(img.argmax(), (50, 64));
        let img = range_doppler_map(
            &synth_noiseless(&[point(50.0, 10.0, 1.0)], &c, PowerSetting(30.0)).unwrap(),
        );
        assert_eq!(img.argmax().1 as i64 - 64, -26);
    }

    #[test]
    fn gain_shifts_db_uniformly() {
        let c = ChirpParams::default();
        let mut f = synth_baseband(&[point(60.0, 3.0, 1.0)], &c, PowerSetting(10.0), -90.0, 3)
            .unwrap();
        let before = range_doppler_map(&f);
        f.scale(3.0);
        let after = range_doppler_map(&f);
        let shift = 20.0 * 3f64.log10();
        for (a, b) in after.magnitude_db.iter().zip(&before.magnitude_db) {
            assert!((a - b - shift).abs() < 1e-9);
        }
    }

    #[test]
    fn hann_confines_on_bin_tone() {
        let c = ChirpParams::default();
        let f = synth_noiseless(&[point(40.0, 0.0, 1.0)], &c, PowerSetting(30.0)).unwrap();
        let img = range_doppler_map_windowed(&f, Window::Hann);
        let peak = img.get(40, 64);
        assert!(img.get(40, 66) < peak - 200.0);
        assert!(img.get(42, 64) < peak - 200.0);
        assert!((img.get(40, 65) - (peak - 6.0206)).abs() < 1e-3);
    }

    fn flat_image(value: f64, rows: usize, cols: usize) -> RangeDopplerImage {
        RangeDopplerImage {
            magnitude_db: vec![value; rows * cols],
            range_bins: rows,
            doppler_bins: cols,
            range_bin_size_m: 1.0,
            doppler_bin_size_hz: 1.0,
            noise_floor_db: 0.0,
        }
    }

    #[test]
    fn normalize_clips_and_pools() {
        let low = normalize_state(&flat_image(-20.0, 4, 4), -20.0, 40.0, 2, 2).unwrap();
        assert!(low.data().iter().all(|&v| v == 0.0));
        let high = normalize_state(&flat_image(50.0, 4, 4), -20.0, 40.0, 2, 2).unwrap();
        assert!(high.data().iter().all(|&v| v == 1.0));
        let mid = normalize_state(&flat_image(10.0, 4, 4), -20.0, 40.0, 2, 2).unwrap();
        assert_eq!(mid.shape(), &[1, 2, 2]);
        assert!(mid.data().iter().all(|&v| (v - 0.5).abs() < 1e-15));
        assert!(matches!(
            normalize_state(&flat_image(0.0, 4, 4), -20.0, 40.0, 3, 2),
            Err(Error::Config(_))
        ));
    }
}
