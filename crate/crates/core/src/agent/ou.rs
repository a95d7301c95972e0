use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

/// Ornstein-Uhlenbeck exploration noise, discretised with Euler steps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OuProcess {
    pub theta: f64,
    pub mu: f64,
    pub sigma: f64,
    pub dt: f64,
    pub x: f64,
}

impl Default for OuProcess {
    fn default() -> Self {
        OuProcess::new(0.15, 0.0, 0.2, 1.0)
    }
}

impl OuProcess {
    pub fn new(theta: f64, mu: f64, sigma: f64, dt: f64) -> Self {
        OuProcess {
            theta,
            mu,
            sigma,
            dt,
            x: mu,
        }
    }

    pub fn reset(&mut self) {
        self.x = self.mu;
    }

    pub fn sample<R: Rng + ?Sized>(&mut self, rng: &mut R) -> f64 {
        let eps: f64 = rng.sample(StandardNormal);
        self.x += self.theta * (self.mu - self.x) * self.dt + self.sigma * self.dt.sqrt() * eps;
        self.x
    }

    /// Stationary variance of the discretised recursion.
    pub fn stationary_variance(&self) -> f64 {
        self.sigma * self.sigma * self.dt / (2.0 * self.theta * self.dt - (self.theta * self.dt).powi(2))
    }
}
