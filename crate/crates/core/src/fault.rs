//! Vehicle-dynamic-model aided IMU fault detection and filter supervision.
//!
//! Control inputs (motor current, steering angle, odometer speed) are widened
//! to intervals and pushed through a single-track model. The bias-compensated
//! longitudinal specific force and yaw rate must lie inside the resulting
//! acceleration and yaw-rate intervals; any exceedance is a fault.

use core::f64::consts::FRAC_PI_2;

use crate::error::{Error, Result};
use crate::interval::Interval;
use crate::nav::ImuSample;

/// Single-track model and drive-force parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct VehicleParams {
    /// Wheelbase (m).
    pub wheelbase: f64,
    /// Mass plus rotating-mass equivalent (kg).
    pub m_eff: f64,
    /// Motor force constant (N/A).
    pub k_m: f64,
    /// Static drag (N).
    pub c0: f64,
    /// Linear drag (N·s/m).
    pub c1: f64,
    /// Quadratic drag (N·s²/m²).
    pub c2: f64,
}

impl Default for VehicleParams {
    fn default() -> Self {
        VehicleParams { wheelbase: 1.0, m_eff: 200.0, k_m: 20.0, c0: 10.0, c1: 5.0, c2: 1.0 }
    }
}

impl VehicleParams {
    pub fn validate(&self) -> Result<()> {
        if self.wheelbase > 0.0 && self.m_eff > 0.0 && self.k_m > 0.0 && self.c0 >= 0.0 && self.c1 >= 0.0 && self.c2 >= 0.0 {
            Ok(())
        } else {
            Err(Error::InvalidInput("vehicle parameters out of range"))
        }
    }

    /// Point drag `c0·sign(v) + c1·v + c2·v|v|` (N).
    pub fn drag(&self, v: f64) -> f64 {
        let sign = if v > 0.0 {
            1.0
        } else if v < 0.0 {
            -1.0
        } else {
            0.0
        };
        self.c0 * sign + self.c1 * v + self.c2 * v * v.abs()
    }
}

/// One control-bus sample.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ControlSample {
    pub t: f64,
    /// Motor current (A).
    pub current: f64,
    /// Steering angle (rad).
    pub delta: f64,
    /// Odometer speed (m/s).
    pub v_d: f64,
}

/// Interval widths and supervision policy.
#[derive(Clone, Debug, PartialEq)]
pub struct FdConfig {
    pub n_sigma_d: f64,
    /// A.
    pub sigma_i: f64,
    /// rad.
    pub sigma_delta: f64,
    /// m/s.
    pub sigma_v: f64,
    /// Minimum time in the fallback filter after the last fault (s).
    pub dwell: f64,
    /// Consecutive fault-free epochs required before returning to the main filter.
    pub recovery_epochs: u32,
}

impl Default for FdConfig {
    fn default() -> Self {
        FdConfig { n_sigma_d: 6.0, sigma_i: 1.0, sigma_delta: 1.0_f64.to_radians(), sigma_v: 0.1, dwell: 5.0, recovery_epochs: 100 }
    }
}

impl FdConfig {
    /// Checks positivity and that the threshold confidence is at least the
    /// zonotope one.
    pub fn validate(&self, n_sigma_z: f64) -> Result<()> {
        if !(self.n_sigma_d >= n_sigma_z) {
            return Err(Error::InvalidInput("fault-detection sigma multiplier below the zonotope one"));
        }
        if self.sigma_i < 0.0 || self.sigma_delta < 0.0 || self.sigma_v < 0.0 || self.dwell < 0.0 {
            return Err(Error::InvalidInput("fault-detection sigmas and dwell must be non-negative"));
        }
        Ok(())
    }
}

/// `[I]`, `[δ]`, `[v_D]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InputIntervals {
    pub current: Interval,
    pub delta: Interval,
    pub speed: Interval,
}

/// Each control value widened by `n_σ,D · σ`.
pub fn input_intervals(ctrl: &ControlSample, cfg: &FdConfig) -> Result<InputIntervals> {
    let n = cfg.n_sigma_d;
    let delta = Interval::centered(ctrl.delta, n * cfg.sigma_delta)?;
    if !(delta.lo() > -FRAC_PI_2 && delta.hi() < FRAC_PI_2) {
        return Err(Error::SteeringOutOfDomain);
    }
    Ok(InputIntervals {
        current: Interval::centered(ctrl.current, n * cfg.sigma_i)?,
        delta,
        speed: Interval::centered(ctrl.v_d, n * cfg.sigma_v)?,
    })
}

/// `F = k_m [I] − (c0 sign[v] + c1 [v] + c2 [v]|[v]|)` (N).
pub fn force_model(v: &Interval, current: &Interval, p: &VehicleParams) -> Interval {
    let drag = v.signum() * p.c0 + *v * p.c1 + v.signed_square() * p.c2;
    *current * p.k_m - drag
}

/// `[a_D] = F([v], [I]) / m_eff` (m/s²).
pub fn acceleration_threshold(v: &Interval, current: &Interval, p: &VehicleParams) -> Result<Interval> {
    if !(p.m_eff > 0.0) {
        return Err(Error::InvalidInput("effective mass must be positive"));
    }
    Ok(force_model(v, current, p).scale(1.0 / p.m_eff))
}

/// `[φ̇_D] = [v] tan([δ]) / L` (rad/s).
pub fn yawrate_threshold(v: &Interval, delta: &Interval, p: &VehicleParams) -> Result<Interval> {
    let tan = delta.tan().map_err(|_| Error::SteeringOutOfDomain)?;
    Ok((*v * tan).scale(1.0 / p.wheelbase))
}

/// Bias-compensated longitudinal specific force and yaw rate.
pub fn compensated_imu(imu: &ImuSample, b_a_x: f64, b_g_z: f64) -> (f64, f64) {
    (imu.f_ib_b.x - b_a_x, imu.w_ib_b.z - b_g_z)
}

/// Result of one consistency check.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct FaultCheck {
    pub accel_fault: bool,
    pub yaw_fault: bool,
}

impl FaultCheck {
    pub fn any(&self) -> bool {
        self.accel_fault || self.yaw_fault
    }
}

/// Closed-interval test: a value on the boundary is not a fault.
pub fn detect_fault(f_x: f64, w_z: f64, accel_threshold: &Interval, yaw_threshold: &Interval) -> FaultCheck {
    FaultCheck { accel_fault: !accel_threshold.contains(f_x), yaw_fault: !yaw_threshold.contains(w_z) }
}

/// Thresholds, compensated measurements and the verdict of one epoch.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FdEpoch {
    pub accel_threshold: Interval,
    pub yaw_threshold: Interval,
    pub f_x: f64,
    pub w_z: f64,
    pub check: FaultCheck,
}

/// Full check of one IMU sample against one control sample.
pub fn check_epoch(imu: &ImuSample, ctrl: &ControlSample, b_a_x: f64, b_g_z: f64, p: &VehicleParams, cfg: &FdConfig) -> Result<FdEpoch> {
    let inputs = input_intervals(ctrl, cfg)?;
    let accel_threshold = acceleration_threshold(&inputs.speed, &inputs.current, p)?;
    let yaw_threshold = yawrate_threshold(&inputs.speed, &inputs.delta, p)?;
    let (f_x, w_z) = compensated_imu(imu, b_a_x, b_g_z);
    let check = detect_fault(f_x, w_z, &accel_threshold, &yaw_threshold);
    Ok(FdEpoch { accel_threshold, yaw_threshold, f_x, w_z, check })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ActiveFilter {
    Main,
    Fallback,
}

/// Supervisor state change caused by one epoch.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SwitchEvent {
    None,
    ToFallback,
    ToMain,
}

/// Per-epoch fault flags and the filter in charge.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FaultFlag {
    pub accel_fault: bool,
    pub yaw_fault: bool,
    pub active_filter: ActiveFilter,
    pub epoch: u64,
}

/// Switches to the fallback filter on the first fault, stays there until
/// `dwell` has passed since the last fault, then returns once
/// `recovery_epochs` consecutive epochs were fault-free.
#[derive(Clone, Debug, PartialEq)]
pub struct Supervisor {
    dwell: f64,
    recovery_epochs: u32,
    active: ActiveFilter,
    latched_until: f64,
    clear: u32,
}

impl Supervisor {
    pub fn new(cfg: &FdConfig) -> Self {
        Supervisor { dwell: cfg.dwell, recovery_epochs: cfg.recovery_epochs, active: ActiveFilter::Main, latched_until: f64::NEG_INFINITY, clear: 0 }
    }

    pub fn active(&self) -> ActiveFilter {
        self.active
    }

    pub fn step(&mut self, t: f64, epoch: u64, check: FaultCheck) -> (FaultFlag, SwitchEvent) {
        let mut event = SwitchEvent::None;
        if check.any() {
            self.clear = 0;
            self.latched_until = t + self.dwell;
            if self.active == ActiveFilter::Main {
                self.active = ActiveFilter::Fallback;
                event = SwitchEvent::ToFallback;
            }
        } else {
            self.clear = self.clear.saturating_add(1);
            if self.active == ActiveFilter::Fallback && t >= self.latched_until && self.clear >= self.recovery_epochs {
                self.active = ActiveFilter::Main;
                event = SwitchEvent::ToMain;
            }
        }
        let flag = FaultFlag { accel_fault: check.accel_fault, yaw_fault: check.yaw_fault, active_filter: self.active, epoch };
        (flag, event)
    }
}
