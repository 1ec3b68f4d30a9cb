//! Filter noise parameterisation.

use nalgebra::Vector3;

#[cfg(not(feature = "std"))]
use num_traits::Float as _;

use crate::error::{Error, Result};

/// Initial one-sigma values of the main filter states.
#[derive(Clone, Debug, PartialEq)]
pub struct InitialSigma {
    /// North, east, down position (m).
    pub position: Vector3<f64>,
    /// m/s per axis.
    pub velocity: f64,
    /// rad per axis.
    pub attitude: f64,
    /// m/s² per axis.
    pub accel_bias: f64,
    /// rad/s per axis.
    pub gyro_bias: f64,
    /// m.
    pub clock_bias: f64,
    /// m/s.
    pub clock_drift: f64,
}

impl Default for InitialSigma {
    fn default() -> Self {
        InitialSigma {
            position: Vector3::new(0.1, 0.1, 0.2),
            velocity: 1.0,
            attitude: 5.0_f64.to_radians(),
            accel_bias: 0.1,
            gyro_bias: 0.01_f64.to_radians(),
            clock_bias: 10.0,
            clock_drift: 10.0,
        }
    }
}

/// Process, measurement and initial noise parameters shared by both filters.
#[derive(Clone, Debug, PartialEq)]
pub struct NoiseParams {
    /// Sigma-ε pseudorange coefficient (m).
    pub c_rho: f64,
    /// Sigma-ε deltarange coefficient (m/s).
    pub c_d: f64,
    /// Accelerometer white noise density (m/s²/√Hz).
    pub accel_noise_density: f64,
    /// Gyroscope white noise density (rad/s/√Hz).
    pub gyro_noise_density: f64,
    /// Steady-state accelerometer bias sigma (m/s²) and correlation time (s).
    pub accel_bias_sigma: f64,
    pub accel_bias_tau: f64,
    /// Steady-state gyroscope bias sigma (rad/s) and correlation time (s).
    pub gyro_bias_sigma: f64,
    pub gyro_bias_tau: f64,
    /// Receiver clock random-walk densities: bias (m/√Hz) and drift (m/s/√Hz).
    pub clock_bias_density: f64,
    pub clock_drift_density: f64,
    /// Fallback white-acceleration intensity per NED axis (m/s² over 1 s).
    pub fallback_accel: Vector3<f64>,
    pub initial: InitialSigma,
}

impl Default for NoiseParams {
    fn default() -> Self {
        NoiseParams {
            c_rho: 60.0,
            c_d: 2.0,
            accel_noise_density: 0.005,
            gyro_noise_density: 0.000_5,
            accel_bias_sigma: 0.05,
            accel_bias_tau: 300.0,
            gyro_bias_sigma: 0.01_f64.to_radians(),
            gyro_bias_tau: 300.0,
            clock_bias_density: 0.1,
            clock_drift_density: 0.1,
            fallback_accel: Vector3::new(0.3, 0.3, 0.1),
            initial: InitialSigma::default(),
        }
    }
}

impl NoiseParams {
    pub fn validate(&self) -> Result<()> {
        let i = &self.initial;
        let values = [
            self.c_rho,
            self.c_d,
            self.accel_noise_density,
            self.gyro_noise_density,
            self.accel_bias_sigma,
            self.accel_bias_tau,
            self.gyro_bias_sigma,
            self.gyro_bias_tau,
            self.clock_bias_density,
            self.clock_drift_density,
            self.fallback_accel.min(),
            i.position.min(),
            i.velocity,
            i.attitude,
            i.accel_bias,
            i.gyro_bias,
            i.clock_bias,
            i.clock_drift,
        ];
        if values.iter().all(|v| *v > 0.0) {
            Ok(())
        } else {
            Err(Error::InvalidInput("noise parameters must be strictly positive"))
        }
    }

    /// Variance of one Gauss-Markov driving-noise sample over `dt`.
    pub fn gauss_markov_drive_variance(sigma: f64, tau: f64, dt: f64) -> f64 {
        sigma * sigma * (1.0 - (-2.0 * dt / tau).exp())
    }
}

/// Sigma-ε model: `σ = C · 10^(−C/N0 / 20)` for pseudorange and deltarange.
pub fn sigma_epsilon(cn0: f64, c_rho: f64, c_d: f64) -> (f64, f64) {
    let scale = 10f64.powf(-cn0 / 20.0);
    (c_rho * scale, c_d * scale)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sigma_epsilon_hand_value() {
        let (rho, d) = sigma_epsilon(40.0, 60.0, 2.0);
        assert!((rho - 0.6).abs() < 1e-12);
        assert!((d - 0.02).abs() < 1e-12);
    }

    #[test]
    fn sigma_epsilon_spans_half_to_two_metres() {
        let (hi, _) = sigma_epsilon(29.5, 60.0, 2.0);
        let (lo, _) = sigma_epsilon(41.6, 60.0, 2.0);
        assert!((hi - 2.0).abs() < 0.01, "{hi}");
        assert!((lo - 0.5).abs() < 0.01, "{lo}");
    }

    #[test]
    fn sigma_epsilon_decreasing_and_positive() {
        let mut prev = f64::INFINITY;
        for k in 0..=100 {
            let (s, _) = sigma_epsilon(10.0 + 0.5 * k as f64, 60.0, 2.0);
            assert!(s > 0.0 && s < prev);
            prev = s;
        }
    }

    #[test]
    fn defaults_validate() {
        NoiseParams::default().validate().unwrap();
        let bad = NoiseParams { c_rho: 0.0, ..NoiseParams::default() };
        assert!(bad.validate().is_err());
    }
}
