//! Scenario files: one JSON document with the sections `seed`, `duration`,
//! `rates`, `origin`, `trajectory`, `constellation`, `noise`, `vehicle`,
//! `faults` and an optional `filter` section with run defaults.
//!
//! Every section except `duration` and `trajectory` has defaults. Angles are
//! given in degrees in the file and converted when the core types are built.

use std::path::Path;

use nalgebra::{DMatrix, Vector3};
use serde::{Deserialize, Serialize};

use tcnav_core::fault::{FdConfig, VehicleParams};
use tcnav_core::filter::FilterMode;
use tcnav_core::nav::{InitialSigma, LocalFrame, NoiseParams};
use tcnav_core::protection::PlConfig;

use crate::{config_err, Result};

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Simulated time span (s).
    pub duration: f64,
    #[serde(default)]
    pub rates: Rates,
    #[serde(default)]
    pub origin: Origin,
    pub trajectory: TrajectoryConfig,
    #[serde(default)]
    pub constellation: Constellation,
    #[serde(default)]
    pub noise: NoiseConfig,
    #[serde(default)]
    pub vehicle: VehicleConfig,
    #[serde(default)]
    pub faults: Vec<FaultInjection>,
    #[serde(default)]
    pub filter: FilterSection,
}

fn default_seed() -> u64 {
    1
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Rates {
    pub imu_hz: f64,
    pub gnss_hz: f64,
}

impl Default for Rates {
    fn default() -> Self {
        Rates { imu_hz: 100.0, gnss_hz: 10.0 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Origin {
    pub lat_deg: f64,
    pub lon_deg: f64,
    pub height_m: f64,
}

impl Default for Origin {
    fn default() -> Self {
        Origin { lat_deg: 50.78, lon_deg: 6.06, height_m: 200.0 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrajectoryConfig {
    #[serde(default)]
    pub initial_heading_deg: f64,
    #[serde(default)]
    pub initial_speed: f64,
    /// rad/s.
    #[serde(default)]
    pub initial_yaw_rate: f64,
    /// Duration of the smooth speed/yaw-rate transition at the start of each segment (s).
    #[serde(default = "default_ramp")]
    pub ramp_time: f64,
    pub segments: Vec<Segment>,
}

fn default_ramp() -> f64 {
    2.0
}

/// Trajectory pieces. Lengths and angles are nominal: the transition ramp at
/// the segment start is part of the segment's duration.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Segment {
    /// Standing still.
    Dwell { duration: f64 },
    /// Straight line at `speed` (m/s) over `length` (m).
    Straight { length: f64, speed: f64 },
    /// Circular arc; positive angles turn clockwise seen from above (right).
    Arc { radius: f64, angle_deg: f64, speed: f64 },
    /// Constant speed (m/s) and yaw rate (rad/s) for `duration` (s).
    Hold { duration: f64, speed: f64, yaw_rate: f64 },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SatelliteConfig {
    pub id: u32,
    pub azimuth_deg: f64,
    pub elevation_deg: f64,
    /// dB-Hz.
    pub cn0: f64,
    /// Constant satellite velocity in NED (m/s).
    #[serde(default)]
    pub velocity_ned: [f64; 3],
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Constellation {
    /// Distance from the origin to every satellite at t = 0 (m).
    pub range_m: f64,
    pub satellites: Vec<SatelliteConfig>,
}

impl Default for Constellation {
    fn default() -> Self {
        let sats = [
            (0.0, 75.0, 42.0),
            (40.0, 35.0, 36.0),
            (95.0, 55.0, 40.0),
            (150.0, 25.0, 31.0),
            (200.0, 45.0, 38.0),
            (250.0, 20.0, 30.0),
            (300.0, 60.0, 41.0),
            (340.0, 30.0, 33.0),
        ];
        Constellation {
            range_m: 2.2e7,
            satellites: sats
                .iter()
                .enumerate()
                .map(|(i, &(az, el, cn0))| SatelliteConfig { id: i as u32 + 1, azimuth_deg: az, elevation_deg: el, cn0, velocity_ned: [0.0; 3] })
                .collect(),
        }
    }
}

/// Sensor and clock noise of the simulation; the filters use the same values
/// unless a `param_falsification` fault overrides them.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseConfig {
    pub c_rho: f64,
    pub c_d: f64,
    pub accel_noise_density: f64,
    pub gyro_noise_density: f64,
    pub accel_bias_sigma: f64,
    pub accel_bias_tau: f64,
    /// deg/s.
    pub gyro_bias_sigma_deg_s: f64,
    pub gyro_bias_tau: f64,
    pub clock_bias_density: f64,
    pub clock_drift_density: f64,
    pub clock_bias_initial: f64,
    pub clock_drift_initial: f64,
    pub fallback_accel: [f64; 3],
    pub initial_sigma: InitialSigmaConfig,
    /// Truncate every simulated noise sample at `bound_sigma` standard deviations.
    pub bounded: bool,
    pub bound_sigma: f64,
    /// Generate sensor, clock and control streams without noise or biases;
    /// the filters keep the configured parameters.
    pub noiseless: bool,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        let n = NoiseParams::default();
        NoiseConfig {
            c_rho: n.c_rho,
            c_d: n.c_d,
            accel_noise_density: n.accel_noise_density,
            gyro_noise_density: n.gyro_noise_density,
            accel_bias_sigma: n.accel_bias_sigma,
            accel_bias_tau: n.accel_bias_tau,
            gyro_bias_sigma_deg_s: n.gyro_bias_sigma.to_degrees(),
            gyro_bias_tau: n.gyro_bias_tau,
            clock_bias_density: n.clock_bias_density,
            clock_drift_density: n.clock_drift_density,
            clock_bias_initial: 50.0,
            clock_drift_initial: 0.5,
            fallback_accel: n.fallback_accel.into(),
            initial_sigma: InitialSigmaConfig::default(),
            bounded: false,
            bound_sigma: 3.0,
            noiseless: false,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InitialSigmaConfig {
    /// North, east, down (m).
    pub position: [f64; 3],
    pub velocity: f64,
    pub attitude_deg: f64,
    pub accel_bias: f64,
    pub gyro_bias_deg_s: f64,
    pub clock_bias: f64,
    pub clock_drift: f64,
}

impl Default for InitialSigmaConfig {
    fn default() -> Self {
        let i = InitialSigma::default();
        InitialSigmaConfig {
            position: i.position.into(),
            velocity: i.velocity,
            attitude_deg: i.attitude.to_degrees(),
            accel_bias: i.accel_bias,
            gyro_bias_deg_s: i.gyro_bias.to_degrees(),
            clock_bias: i.clock_bias,
            clock_drift: i.clock_drift,
        }
    }
}

impl InitialSigmaConfig {
    pub fn to_core(&self) -> InitialSigma {
        InitialSigma {
            position: Vector3::from(self.position),
            velocity: self.velocity,
            attitude: self.attitude_deg.to_radians(),
            accel_bias: self.accel_bias,
            gyro_bias: self.gyro_bias_deg_s.to_radians(),
            clock_bias: self.clock_bias,
            clock_drift: self.clock_drift,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VehicleConfig {
    pub wheelbase: f64,
    pub m_eff: f64,
    pub k_m: f64,
    pub c0: f64,
    pub c1: f64,
    pub c2: f64,
    /// Antenna position relative to the IMU, body frame (m).
    pub lever_arm: [f64; 3],
    pub control_noise: ControlNoise,
}

impl Default for VehicleConfig {
    fn default() -> Self {
        let p = VehicleParams::default();
        VehicleConfig {
            wheelbase: p.wheelbase,
            m_eff: p.m_eff,
            k_m: p.k_m,
            c0: p.c0,
            c1: p.c1,
            c2: p.c2,
            lever_arm: tcnav_core::nav::main_model::DEFAULT_LEVER_ARM,
            control_noise: ControlNoise::default(),
        }
    }
}

impl VehicleConfig {
    pub fn params(&self) -> VehicleParams {
        VehicleParams { wheelbase: self.wheelbase, m_eff: self.m_eff, k_m: self.k_m, c0: self.c0, c1: self.c1, c2: self.c2 }
    }
}

/// White noise on the simulated control signals.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ControlNoise {
    pub sigma_i: f64,
    pub sigma_delta_deg: f64,
    pub sigma_v: f64,
}

impl Default for ControlNoise {
    fn default() -> Self {
        ControlNoise { sigma_i: 1.0, sigma_delta_deg: 1.0, sigma_v: 0.1 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FaultInjection {
    /// Extra zero-mean white noise on the accelerometer (and optionally the
    /// gyroscope) for the IMU samples ending in `(start, stop]`.
    ImuNoiseBurst {
        start: f64,
        stop: f64,
        /// m/s².
        sigma: f64,
        /// rad/s.
        #[serde(default)]
        gyro_sigma: f64,
    },
    /// Error added to the filter's initial yaw.
    YawInitError { degrees: f64 },
    /// Filter parameters that differ from the simulated truth.
    ParamFalsification {
        #[serde(default)]
        c_rho: Option<f64>,
        #[serde(default)]
        c_d: Option<f64>,
        #[serde(default)]
        initial_position_sigma: Option<[f64; 3]>,
    },
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum FilterChoice {
    Ekf,
    Ehf,
}

impl From<FilterChoice> for FilterMode {
    fn from(c: FilterChoice) -> Self {
        match c {
            FilterChoice::Ekf => FilterMode::Ekf,
            FilterChoice::Ehf => FilterMode::Ehf,
        }
    }
}

/// Run defaults; command-line options take precedence.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FilterSection {
    pub mode: FilterChoice,
    pub fd: bool,
    pub pl: bool,
    pub q: usize,
    pub n_sigma_z: f64,
    pub e0_position: [f64; 3],
    pub gamma_safety: f64,
    pub gate_sigma: f64,
    pub n_sigma_d: f64,
    pub sigma_i: f64,
    pub sigma_delta_deg: f64,
    pub sigma_v: f64,
    pub dwell: f64,
    pub recovery_epochs: u32,
}

impl Default for FilterSection {
    fn default() -> Self {
        let pl = PlConfig::default();
        let fd = FdConfig::default();
        FilterSection {
            mode: FilterChoice::Ehf,
            fd: true,
            pl: true,
            q: pl.q,
            n_sigma_z: pl.n_sigma_z,
            e0_position: pl.e0_position,
            gamma_safety: tcnav_core::filter::DEFAULT_SAFETY,
            gate_sigma: 5.0,
            n_sigma_d: fd.n_sigma_d,
            sigma_i: fd.sigma_i,
            sigma_delta_deg: fd.sigma_delta.to_degrees(),
            sigma_v: fd.sigma_v,
            dwell: fd.dwell,
            recovery_epochs: fd.recovery_epochs,
        }
    }
}

impl FilterSection {
    pub fn pl_config(&self) -> PlConfig {
        PlConfig { q: self.q, n_sigma_z: self.n_sigma_z, e0_position: self.e0_position }
    }

    pub fn fd_config(&self) -> FdConfig {
        FdConfig {
            n_sigma_d: self.n_sigma_d,
            sigma_i: self.sigma_i,
            sigma_delta: self.sigma_delta_deg.to_radians(),
            sigma_v: self.sigma_v,
            dwell: self.dwell,
            recovery_epochs: self.recovery_epochs,
        }
    }
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Scenario> {
        let s: Scenario = serde_json::from_str(text).map_err(|e| config_err(format!("scenario: {e}")))?;
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Scenario> {
        let text = std::fs::read_to_string(path).map_err(|e| config_err(format!("{}: {e}", path.display())))?;
        Scenario::from_json(&text)
    }

    pub fn frame(&self) -> LocalFrame {
        LocalFrame::from_geodetic(self.origin.lat_deg.to_radians(), self.origin.lon_deg.to_radians(), self.origin.height_m)
    }

    pub fn imu_dt(&self) -> f64 {
        1.0 / self.rates.imu_hz
    }

    /// IMU samples per GNSS epoch.
    pub fn gnss_decimation(&self) -> usize {
        (self.rates.imu_hz / self.rates.gnss_hz).round() as usize
    }

    /// Number of IMU intervals in the run.
    pub fn epochs(&self) -> usize {
        (self.duration * self.rates.imu_hz).round() as usize
    }

    pub fn lever_arm(&self) -> Vector3<f64> {
        Vector3::from(self.vehicle.lever_arm)
    }

    /// Noise parameters of the simulated truth.
    pub fn true_noise(&self) -> NoiseParams {
        let n = &self.noise;
        NoiseParams {
            c_rho: n.c_rho,
            c_d: n.c_d,
            accel_noise_density: n.accel_noise_density,
            gyro_noise_density: n.gyro_noise_density,
            accel_bias_sigma: n.accel_bias_sigma,
            accel_bias_tau: n.accel_bias_tau,
            gyro_bias_sigma: n.gyro_bias_sigma_deg_s.to_radians(),
            gyro_bias_tau: n.gyro_bias_tau,
            clock_bias_density: n.clock_bias_density,
            clock_drift_density: n.clock_drift_density,
            fallback_accel: Vector3::from(n.fallback_accel),
            initial: n.initial_sigma.to_core(),
        }
    }

    /// Noise parameters handed to the filters (truth with falsifications applied).
    pub fn filter_noise(&self) -> NoiseParams {
        let mut p = self.true_noise();
        for f in &self.faults {
            if let FaultInjection::ParamFalsification { c_rho, c_d, initial_position_sigma } = f {
                if let Some(v) = c_rho {
                    p.c_rho = *v;
                }
                if let Some(v) = c_d {
                    p.c_d = *v;
                }
                if let Some(v) = initial_position_sigma {
                    p.initial.position = Vector3::from(*v);
                }
            }
        }
        p
    }

    /// Total initial yaw error injected into the filter (rad).
    pub fn yaw_init_error(&self) -> f64 {
        self.faults
            .iter()
            .map(|f| match f {
                FaultInjection::YawInitError { degrees } => degrees.to_radians(),
                _ => 0.0,
            })
            .sum()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.duration > 0.0) {
            return Err(config_err("duration must be positive"));
        }
        let r = &self.rates;
        if !(r.imu_hz >= 10.0 && r.gnss_hz > 0.0 && r.gnss_hz <= r.imu_hz) {
            return Err(config_err("rates: need imu_hz >= 10 and 0 < gnss_hz <= imu_hz"));
        }
        let ratio = r.imu_hz / r.gnss_hz;
        if (ratio - ratio.round()).abs() > 1e-9 {
            return Err(config_err("rates: imu_hz must be an integer multiple of gnss_hz"));
        }
        if self.epochs() < 1 {
            return Err(config_err("duration shorter than one IMU interval"));
        }
        self.validate_trajectory()?;
        self.validate_constellation()?;
        self.true_noise().validate().map_err(|e| config_err(format!("noise: {e}")))?;
        self.filter_noise().validate().map_err(|e| config_err(format!("falsified noise: {e}")))?;
        if !(self.noise.bound_sigma > 0.0) {
            return Err(config_err("noise.bound_sigma must be positive"));
        }
        self.vehicle.params().validate().map_err(|e| config_err(format!("vehicle: {e}")))?;
        let cn = &self.vehicle.control_noise;
        if cn.sigma_i < 0.0 || cn.sigma_delta_deg < 0.0 || cn.sigma_v < 0.0 {
            return Err(config_err("vehicle.control_noise sigmas must be non-negative"));
        }
        for f in &self.faults {
            if let FaultInjection::ImuNoiseBurst { start, stop, sigma, gyro_sigma } = f {
                if !(*start >= 0.0 && start < stop && *stop <= self.duration + 1e-9) {
                    return Err(config_err("imu_noise_burst window must satisfy 0 <= start < stop <= duration"));
                }
                if *sigma < 0.0 || *gyro_sigma < 0.0 {
                    return Err(config_err("imu_noise_burst sigmas must be non-negative"));
                }
            }
        }
        let f = &self.filter;
        f.pl_config().validate(tcnav_core::nav::main_model::ERROR_DIM).map_err(|e| config_err(format!("filter: {e}")))?;
        f.fd_config().validate(f.n_sigma_z).map_err(|e| config_err(format!("filter: {e}")))?;
        if !(f.gamma_safety >= 1.0) || !(f.gate_sigma > 0.0) {
            return Err(config_err("filter: gamma_safety must be >= 1 and gate_sigma positive"));
        }
        Ok(())
    }

    fn validate_trajectory(&self) -> Result<()> {
        let t = &self.trajectory;
        if !(t.ramp_time > 0.0) {
            return Err(config_err("trajectory.ramp_time must be positive"));
        }
        if t.initial_speed < 0.0 {
            return Err(config_err("trajectory.initial_speed must be non-negative"));
        }
        let max_curvature = (60f64).to_radians().tan() / self.vehicle.wheelbase;
        let check_turn = |speed: f64, yaw_rate: f64, what: &str| -> Result<()> {
            if yaw_rate != 0.0 && !(speed > 0.0) {
                return Err(config_err(format!("trajectory: {what} turns without forward speed")));
            }
            if speed > 0.0 && (yaw_rate / speed).abs() > max_curvature {
                return Err(config_err(format!("trajectory: {what} needs a steering angle beyond 60 degrees")));
            }
            Ok(())
        };
        check_turn(t.initial_speed, t.initial_yaw_rate, "initial state")?;
        for (i, seg) in t.segments.iter().enumerate() {
            let what = format!("segment {i}");
            match *seg {
                Segment::Dwell { duration } if duration > 0.0 => {}
                Segment::Straight { length, speed } if length > 0.0 && speed > 0.0 => {}
                Segment::Arc { radius, angle_deg, speed } if radius > 0.0 && angle_deg != 0.0 && speed > 0.0 => {
                    check_turn(speed, speed / radius, &what)?;
                }
                Segment::Hold { duration, speed, yaw_rate } if duration > 0.0 && speed >= 0.0 => {
                    check_turn(speed, yaw_rate, &what)?;
                }
                _ => return Err(config_err(format!("trajectory: {what} has non-positive duration, length, radius or speed"))),
            }
        }
        Ok(())
    }

    fn validate_constellation(&self) -> Result<()> {
        let c = &self.constellation;
        if c.satellites.len() < 4 {
            return Err(config_err("constellation: at least 4 satellites are required"));
        }
        if !(c.range_m > 1.0e6) {
            return Err(config_err("constellation.range_m must exceed 1000 km"));
        }
        for s in &c.satellites {
            if !(s.elevation_deg > 0.0 && s.elevation_deg <= 90.0) {
                return Err(config_err(format!("satellite {}: elevation must be in (0, 90] degrees", s.id)));
            }
            if !(10.0..=60.0).contains(&s.cn0) {
                return Err(config_err(format!("satellite {}: C/N0 must be in [10, 60] dB-Hz", s.id)));
            }
        }
        let pdop = pdop(c).ok_or_else(|| config_err("constellation geometry is singular"))?;
        if !(pdop < 10.0) {
            return Err(config_err(format!("constellation PDOP {pdop:.2} is not below 10")));
        }
        Ok(())
    }
}

/// NED line of sight of a satellite configuration.
pub fn line_of_sight_ned(sat: &SatelliteConfig) -> Vector3<f64> {
    let (az, el) = (sat.azimuth_deg.to_radians(), sat.elevation_deg.to_radians());
    Vector3::new(el.cos() * az.cos(), el.cos() * az.sin(), -el.sin())
}

/// Position dilution of precision at the origin.
pub fn pdop(c: &Constellation) -> Option<f64> {
    let mut g = DMatrix::zeros(c.satellites.len(), 4);
    for (i, s) in c.satellites.iter().enumerate() {
        let u = line_of_sight_ned(s);
        for a in 0..3 {
            g[(i, a)] = -u[a];
        }
        g[(i, 3)] = 1.0;
    }
    let cov = (g.transpose() * g).try_inverse()?;
    Some((cov[(0, 0)] + cov[(1, 1)] + cov[(2, 2)]).sqrt())
}
