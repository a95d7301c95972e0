//! Per-class radar cross-section models.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

/// Rayleigh-distributed amplitude with scale `b`.
pub fn sample_rayleigh<R: Rng + ?Sized>(scale_b: f64, rng: &mut R) -> f64 {
    let u: f64 = rng.random();
    scale_b * (-2.0 * (1.0 - u).ln()).sqrt()
}

/// Clutter cross-section: squared Rayleigh amplitude.
pub fn sample_clutter_rcs<R: Rng + ?Sized>(scale_b: f64, rng: &mut R) -> f64 {
    let a = sample_rayleigh(scale_b, rng);
    a * a
}

/// Nakagami(m, omega) draw, used directly as the pedestrian cross-section.
pub fn sample_pedestrian_rcs<R: Rng + ?Sized>(m: f64, omega: f64, rng: &mut R) -> f64 {
    // Gamma parameters are validated by the scene config.
    let gamma = Gamma::new(m, omega / m).expect("nakagami shape/spread must be positive");
    let g: f64 = gamma.sample(rng);
    g.sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VehicleRcsParams {
    pub front_amplitude_m2: f64,
    pub back_amplitude_m2: f64,
    pub side_amplitude_m2: f64,
    pub front_width_deg: f64,
    pub back_width_deg: f64,
    pub side_width_deg: f64,
    pub floor_m2: f64,
}

impl Default for VehicleRcsParams {
    fn default() -> Self {
        VehicleRcsParams {
            front_amplitude_m2: 10.0,
            back_amplitude_m2: 10.0,
            side_amplitude_m2: 20.0,
            front_width_deg: 60.0,
            back_width_deg: 60.0,
            side_width_deg: 20.0,
            floor_m2: 0.5,
        }
    }
}

fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        (PI * x).sin() / (PI * x)
    }
}

/// Signed angular difference folded into `(-180, 180]` degrees.
fn wrap_deg(diff: f64) -> f64 {
    let d = diff.rem_euclid(360.0);
    if d > 180.0 {
        d - 360.0
    } else {
        d
    }
}

/// Mean vehicle cross-section as a sum of four sinc lobes centred on the
/// front (0 deg), sides (90, 270 deg) and back (180 deg).
pub fn vehicle_rcs_pattern(orientation_rad: f64, params: &VehicleRcsParams) -> f64 {
    let phi = orientation_rad.to_degrees().rem_euclid(360.0);
    let lobes = [
        (0.0, params.front_amplitude_m2, params.front_width_deg),
        (90.0, params.side_amplitude_m2, params.side_width_deg),
        (180.0, params.back_amplitude_m2, params.back_width_deg),
        (270.0, params.side_amplitude_m2, params.side_width_deg),
    ];
    let sum: f64 = lobes
        .iter()
        .map(|&(center, amp, width)| amp * sinc(wrap_deg(phi - center) / width))
        .sum();
    sum.max(params.floor_m2)
}

/// Splits a vehicle's mean cross-section over `num_scatterers` points with
/// unit-mean exponential (squared-Rayleigh) fluctuation.
pub fn assign_vehicle_scatterer_rcs<R: Rng + ?Sized>(
    mean_rcs_m2: f64,
    num_scatterers: usize,
    noise: bool,
    rng: &mut R,
) -> Vec<f64> {
    let share = mean_rcs_m2 / num_scatterers as f64;
    (0..num_scatterers)
        .map(|_| {
            if noise {
                let r = sample_rayleigh(1.0, rng);
                // E[r^2] = 2 for unit scale.
                share * r * r / 2.0
            } else {
                share
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn rayleigh_mean_and_scale_family() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 1_000_000;
        let mean = (0..n).map(|_| sample_rayleigh(1.0, &mut rng)).sum::<f64>() / n as f64;
        assert!((mean - 1.2533141).abs() < 0.01, "{mean}");

        let mut a = ChaCha8Rng::seed_from_u64(5);
        let mut b = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let x = sample_clutter_rcs(1.0, &mut a);
            let y = sample_clutter_rcs(0.5, &mut b);
            assert!(x >= 0.0);
            // Amplitude halves, cross-section quarters.
            assert!((y - x / 4.0).abs() <= 1e-12 * x.max(1.0));
        }
    }

    #[test]
    fn nakagami_mean_and_second_moment() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let n = 1_000_000;
        let (mut s1, mut s2) = (0.0, 0.0);
        for _ in 0..n {
            let x = sample_pedestrian_rcs(1.0, 0.5, &mut rng);
            assert!(x > 0.0);
            s1 += x;
            s2 += x * x;
        }
        // Gamma(1.5) / Gamma(1) * sqrt(0.5)
        assert!((s1 / n as f64 - 0.626657).abs() < 0.01);
        assert!((s2 / n as f64 - 0.5).abs() < 0.005);
    }

    #[test]
    fn vehicle_pattern_reference_angles() {
        let p = VehicleRcsParams::default();
        let head_on = 10.0 + 2.0 * 20.0 * (1.0 / (4.5 * PI));
        assert!((vehicle_rcs_pattern(0.0, &p) - head_on).abs() < 1e-9);
        assert!((vehicle_rcs_pattern(0.0, &p) - 12.83).abs() < 5e-3);
        let broadside = 20.0 - 20.0 / (1.5 * PI);
        let got = vehicle_rcs_pattern(90f64.to_radians(), &p);
        assert!((got - broadside).abs() < 1e-9);
        assert!((got - 15.76).abs() < 5e-3);
        for deg in [5.0, 33.0, 77.0, 120.0, 181.0] {
            let a = vehicle_rcs_pattern(f64::to_radians(deg), &p);
            let b = vehicle_rcs_pattern(f64::to_radians(360.0 - deg), &p);
            assert!((a - b).abs() < 1e-9);
            assert!(a >= p.floor_m2);
        }
    }

    #[test]
    fn vehicle_split_is_unit_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        assert_eq!(assign_vehicle_scatterer_rcs(7.5, 1, false, &mut rng), vec![7.5]);
        let n = 100_000;
        let total: f64 = (0..n)
            .map(|_| {
                let v = assign_vehicle_scatterer_rcs(12.0, 8, true, &mut rng);
                assert!(v.iter().all(|&x| x >= 0.0));
                v.iter().sum::<f64>()
            })
            .sum();
        assert!((total / n as f64 / 12.0 - 1.0).abs() < 0.01);
    }
}
