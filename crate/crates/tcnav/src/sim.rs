//! Synthetic sensor data: a smooth planar trajectory and the IMU, GNSS and
//! control streams derived from it.
//!
//! The vehicle moves in the local NED plane with zero roll and pitch. Speed
//! and yaw rate change between segments along a raised-cosine ramp, so both
//! are continuously differentiable; heading and travelled distance have
//! closed forms and the position is integrated by Gauss-Legendre quadrature.

use std::f64::consts::PI;
use std::path::Path;

use nalgebra::{UnitQuaternion, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use tcnav_core::fault::ControlSample;
use tcnav_core::nav::gnss::{predict_deltarange, predict_pseudorange};
use tcnav_core::nav::main_model::{ATT, BA, BG, CB, CD, ERROR_DIM, POS, VEL};
use tcnav_core::nav::noise::sigma_epsilon;
use tcnav_core::nav::{gravity_ned, Corrections, GnssObservation, ImuSample, LocalFrame, MainState, NoiseParams};

use crate::scenario::{line_of_sight_ned, FaultInjection, Scenario, Segment};
use crate::Result;

/// One constant-target stretch of the speed and yaw-rate profile.
#[derive(Clone, Copy, Debug)]
struct Phase {
    t0: f64,
    duration: f64,
    ramp: f64,
    v0: f64,
    v1: f64,
    r0: f64,
    r1: f64,
    heading0: f64,
    distance0: f64,
}

impl Phase {
    fn blend(&self, tau: f64) -> (f64, f64) {
        if tau >= self.ramp {
            return (1.0, 0.0);
        }
        let x = PI * tau / self.ramp;
        ((1.0 - x.cos()) / 2.0, PI / (2.0 * self.ramp) * x.sin())
    }

    /// `∫₀^τ s`.
    fn blend_integral(&self, tau: f64) -> f64 {
        if tau >= self.ramp {
            self.ramp / 2.0 + (tau - self.ramp)
        } else {
            tau / 2.0 - self.ramp / (2.0 * PI) * (PI * tau / self.ramp).sin()
        }
    }

    fn speed(&self, tau: f64) -> f64 {
        self.v0 + (self.v1 - self.v0) * self.blend(tau).0
    }

    fn accel(&self, tau: f64) -> f64 {
        (self.v1 - self.v0) * self.blend(tau).1
    }

    fn yaw_rate(&self, tau: f64) -> f64 {
        self.r0 + (self.r1 - self.r0) * self.blend(tau).0
    }

    fn heading(&self, tau: f64) -> f64 {
        self.heading0 + self.r0 * tau + (self.r1 - self.r0) * self.blend_integral(tau)
    }

    fn distance(&self, tau: f64) -> f64 {
        self.distance0 + self.v0 * tau + (self.v1 - self.v0) * self.blend_integral(tau)
    }
}

/// Planar kinematics at one instant.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Kinematics {
    pub speed: f64,
    /// Longitudinal acceleration (m/s²).
    pub accel: f64,
    /// Clockwise from north (rad).
    pub heading: f64,
    pub yaw_rate: f64,
    /// Path length travelled since t = 0 (m).
    pub distance: f64,
}

/// Speed and yaw-rate profile compiled from the scenario segments.
#[derive(Clone, Debug)]
pub struct Profile {
    phases: Vec<Phase>,
}

impl Profile {
    pub fn new(scenario: &Scenario) -> Profile {
        let traj = &scenario.trajectory;
        let mut phases = Vec::with_capacity(traj.segments.len() + 1);
        let mut last = Phase {
            t0: 0.0,
            duration: 0.0,
            ramp: traj.ramp_time,
            v0: traj.initial_speed,
            v1: traj.initial_speed,
            r0: traj.initial_yaw_rate,
            r1: traj.initial_yaw_rate,
            heading0: traj.initial_heading_deg.to_radians(),
            distance0: 0.0,
        };
        let targets = traj.segments.iter().map(|seg| match *seg {
            Segment::Dwell { duration } => (duration, 0.0, 0.0),
            Segment::Straight { length, speed } => (length / speed, speed, 0.0),
            Segment::Arc { radius, angle_deg, speed } => {
                (angle_deg.to_radians().abs() * radius / speed, speed, angle_deg.signum() * speed / radius)
            }
            Segment::Hold { duration, speed, yaw_rate } => (duration, speed, yaw_rate),
        });
        for (duration, v, r) in targets.chain(std::iter::once((f64::INFINITY, f64::NAN, f64::NAN))) {
            let (v1, r1) = if v.is_nan() { (last.v1, last.r1) } else { (v, r) };
            let next = Phase {
                t0: last.t0 + last.duration,
                duration,
                ramp: traj.ramp_time.min(duration),
                v0: last.v1,
                v1,
                r0: last.r1,
                r1,
                heading0: last.heading(last.duration),
                distance0: last.distance(last.duration),
            };
            phases.push(next);
            last = next;
        }
        Profile { phases }
    }

    fn phase(&self, t: f64) -> (&Phase, f64) {
        let i = self.phases.partition_point(|p| p.t0 <= t).saturating_sub(1);
        let p = &self.phases[i];
        (p, (t - p.t0).max(0.0))
    }

    pub fn at(&self, t: f64) -> Kinematics {
        let (p, tau) = self.phase(t);
        Kinematics { speed: p.speed(tau), accel: p.accel(tau), heading: p.heading(tau), yaw_rate: p.yaw_rate(tau), distance: p.distance(tau) }
    }

    /// Horizontal displacement over `[a, b]` by 5-point Gauss-Legendre quadrature.
    pub fn displacement(&self, a: f64, b: f64) -> Vector3<f64> {
        const NODES: [f64; 5] = [0.0, -0.538_469_310_105_683_1, 0.538_469_310_105_683_1, -0.906_179_845_938_664, 0.906_179_845_938_664];
        const WEIGHTS: [f64; 5] =
            [0.568_888_888_888_888_9, 0.478_628_670_499_366_5, 0.478_628_670_499_366_5, 0.236_926_885_056_189_1, 0.236_926_885_056_189_1];
        let (mid, half) = ((a + b) / 2.0, (b - a) / 2.0);
        let mut d = Vector3::zeros();
        for (x, w) in NODES.iter().zip(WEIGHTS) {
            let k = self.at(mid + half * x);
            d += Vector3::new(k.heading.cos(), k.heading.sin(), 0.0) * (w * k.speed);
        }
        d * half
    }
}

/// True state at one IMU instant.
#[derive(Clone, Debug, PartialEq)]
pub struct TruthSample {
    pub t: f64,
    pub kinematics: Kinematics,
    /// IMU position, NED (m).
    pub p_imu_ned: Vector3<f64>,
    pub v_imu_ned: Vector3<f64>,
    pub q_b_n: UnitQuaternion<f64>,
    /// Antenna position, NED (m).
    pub p_ant_ned: Vector3<f64>,
    pub v_ant_ned: Vector3<f64>,
    pub b_a: Vector3<f64>,
    pub b_g: Vector3<f64>,
    pub c_b: f64,
    pub c_d: f64,
}

impl TruthSample {
    /// The true filter state (antenna position and velocity).
    pub fn main_state(&self, frame: &LocalFrame) -> MainState {
        MainState {
            p_ea_e: frame.ned_to_ecef(&self.p_ant_ned),
            v_ea_n: self.v_ant_ned,
            q_b_n: self.q_b_n,
            b_a: self.b_a,
            b_g: self.b_g,
            c_b: self.c_b,
            c_d: self.c_d,
        }
    }
}

/// Observations of one GNSS epoch, taken at IMU index `k`.
#[derive(Clone, Debug, PartialEq)]
pub struct GnssEpoch {
    pub k: usize,
    pub t: f64,
    pub observations: Vec<GnssObservation>,
}

/// All simulated streams of one scenario. `imu[k - 1]` and `controls[k - 1]`
/// describe the interval `(t_{k-1}, t_k]`; `truth[k]` is the state at `t_k`.
#[derive(Clone, Debug, PartialEq)]
pub struct SimData {
    pub dt: f64,
    pub frame: LocalFrame,
    pub truth: Vec<TruthSample>,
    pub imu: Vec<ImuSample>,
    pub controls: Vec<ControlSample>,
    pub gnss: Vec<GnssEpoch>,
    /// Filter initialization: truth at t = 0 perturbed by the initial uncertainty.
    pub initial_estimate: MainState,
}

/// Independent random streams, one per noise source.
#[derive(Clone, Copy)]
enum Stream {
    ImuNoise = 1,
    Bias = 2,
    Gnss = 3,
    Clock = 4,
    Controls = 5,
    Initial = 6,
    Burst = 7,
}

/// Zero-mean Gaussian draws, optionally truncated by resampling.
struct Gauss {
    rng: ChaCha8Rng,
    bound: Option<f64>,
}

impl Gauss {
    fn new(seed: u64, stream: Stream, bound: Option<f64>) -> Gauss {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream as u64);
        Gauss { rng, bound }
    }

    fn draw(&mut self, sigma: f64) -> f64 {
        loop {
            let z: f64 = self.rng.sample(StandardNormal);
            if self.bound.is_none_or(|b| z.abs() <= b) {
                return sigma * z;
            }
        }
    }

    fn vector(&mut self, sigma: &Vector3<f64>) -> Vector3<f64> {
        Vector3::new(self.draw(sigma.x), self.draw(sigma.y), self.draw(sigma.z))
    }
}

fn splat(x: f64) -> Vector3<f64> {
    Vector3::repeat(x)
}

fn attitude(heading: f64) -> UnitQuaternion<f64> {
    UnitQuaternion::from_euler_angles(0.0, 0.0, heading)
}

/// Noise-free truth at every IMU instant (biases and clock left at zero).
pub fn generate_truth(scenario: &Scenario) -> Vec<TruthSample> {
    let profile = Profile::new(scenario);
    let dt = scenario.imu_dt();
    let lever = scenario.lever_arm();
    let mut p = Vector3::zeros();
    (0..=scenario.epochs())
        .map(|k| {
            let t = k as f64 * dt;
            if k > 0 {
                p += profile.displacement(t - dt, t);
            }
            let kin = profile.at(t);
            let q = attitude(kin.heading);
            let v = Vector3::new(kin.heading.cos(), kin.heading.sin(), 0.0) * kin.speed;
            let w = Vector3::new(0.0, 0.0, kin.yaw_rate);
            TruthSample {
                t,
                kinematics: kin,
                p_imu_ned: p,
                v_imu_ned: v,
                q_b_n: q,
                p_ant_ned: p + q * lever,
                v_ant_ned: v + q * w.cross(&lever),
                b_a: Vector3::zeros(),
                b_g: Vector3::zeros(),
                c_b: 0.0,
                c_d: 0.0,
            }
        })
        .collect()
}

/// Error-free IMU sample over `(a, b]`: the inverse of the strapdown step.
pub fn ideal_imu(a: &TruthSample, b: &TruthSample) -> ImuSample {
    let dt = b.t - a.t;
    let theta = (a.q_b_n.inverse() * b.q_b_n).scaled_axis();
    let q_mid = a.q_b_n * UnitQuaternion::from_scaled_axis(theta * 0.5);
    let f = q_mid.inverse() * ((b.v_imu_ned - a.v_imu_ned) / dt - gravity_ned());
    ImuSample { t: b.t, f_ib_b: f, w_ib_b: theta / dt }
}

/// Satellite ECEF position at time t.
fn satellite_position(scenario: &Scenario, frame: &LocalFrame, i: usize, t: f64) -> Vector3<f64> {
    let s = &scenario.constellation.satellites[i];
    let ned = line_of_sight_ned(s) * scenario.constellation.range_m + Vector3::from(s.velocity_ned) * t;
    frame.ned_to_ecef(&ned)
}

/// Runs the full synthesis for the scenario's seed.
pub fn simulate(scenario: &Scenario) -> Result<SimData> {
    scenario.validate()?;
    let frame = scenario.frame();
    let noise_cfg = &scenario.noise;
    let truth_noise: NoiseParams = scenario.true_noise();
    let bound = noise_cfg.bounded.then_some(noise_cfg.bound_sigma);
    let scale = if noise_cfg.noiseless { 0.0 } else { 1.0 };
    let seed = scenario.seed;
    let dt = scenario.imu_dt();
    let n = scenario.epochs();

    let mut truth = generate_truth(scenario);

    let mut bias_rng = Gauss::new(seed, Stream::Bias, bound);
    let mut clock_rng = Gauss::new(seed, Stream::Clock, bound);
    let (ba_sigma, bg_sigma) = (truth_noise.accel_bias_sigma * scale, truth_noise.gyro_bias_sigma * scale);
    let ba_phi = (-dt / truth_noise.accel_bias_tau).exp();
    let bg_phi = (-dt / truth_noise.gyro_bias_tau).exp();
    let ba_drive = NoiseParams::gauss_markov_drive_variance(ba_sigma, truth_noise.accel_bias_tau, dt).sqrt();
    let bg_drive = NoiseParams::gauss_markov_drive_variance(bg_sigma, truth_noise.gyro_bias_tau, dt).sqrt();
    let cb_sigma = truth_noise.clock_bias_density * dt.sqrt() * scale;
    let cd_sigma = truth_noise.clock_drift_density * dt.sqrt() * scale;
    let mut b_a = bias_rng.vector(&splat(ba_sigma));
    let mut b_g = bias_rng.vector(&splat(bg_sigma));
    let (mut c_b, mut c_d) = (noise_cfg.clock_bias_initial, noise_cfg.clock_drift_initial);
    for sample in truth.iter_mut() {
        sample.b_a = b_a;
        sample.b_g = b_g;
        sample.c_b = c_b;
        sample.c_d = c_d;
        b_a = b_a * ba_phi + bias_rng.vector(&splat(ba_drive));
        b_g = b_g * bg_phi + bias_rng.vector(&splat(bg_drive));
        c_b += c_d * dt + clock_rng.draw(cb_sigma);
        c_d += clock_rng.draw(cd_sigma);
    }

    let mut imu_rng = Gauss::new(seed, Stream::ImuNoise, bound);
    let mut burst_rng = Gauss::new(seed, Stream::Burst, bound);
    let acc_sigma = truth_noise.accel_noise_density / dt.sqrt() * scale;
    let gyro_sigma = truth_noise.gyro_noise_density / dt.sqrt() * scale;
    let bursts: Vec<(f64, f64, f64, f64)> = scenario
        .faults
        .iter()
        .filter_map(|f| match *f {
            FaultInjection::ImuNoiseBurst { start, stop, sigma, gyro_sigma } => Some((start, stop, sigma, gyro_sigma)),
            _ => None,
        })
        .collect();
    let imu = (1..=n)
        .map(|k| {
            let (a, b) = (&truth[k - 1], &truth[k]);
            let ideal = ideal_imu(a, b);
            let mut f = ideal.f_ib_b + a.b_a + imu_rng.vector(&splat(acc_sigma));
            let mut w = ideal.w_ib_b + a.b_g + imu_rng.vector(&splat(gyro_sigma));
            for &(start, stop, sa, sg) in &bursts {
                if b.t > start && b.t <= stop {
                    f += burst_rng.vector(&splat(sa));
                    w += burst_rng.vector(&splat(sg));
                }
            }
            ImuSample { t: b.t, f_ib_b: f, w_ib_b: w }
        })
        .collect();

    let mut ctrl_rng = Gauss::new(seed, Stream::Controls, bound);
    let vehicle = scenario.vehicle.params();
    let cn = &scenario.vehicle.control_noise;
    let profile = Profile::new(scenario);
    let controls = (1..=n)
        .map(|k| {
            let t = truth[k].t;
            let mid = profile.at(t - dt / 2.0);
            let delta = if mid.speed > 1e-6 { (vehicle.wheelbase * mid.yaw_rate / mid.speed).atan() } else { 0.0 };
            let current = (vehicle.m_eff * mid.accel + vehicle.drag(mid.speed)) / vehicle.k_m;
            ControlSample {
                t,
                current: current + ctrl_rng.draw(cn.sigma_i * scale),
                delta: delta + ctrl_rng.draw(cn.sigma_delta_deg.to_radians() * scale),
                v_d: mid.speed + ctrl_rng.draw(cn.sigma_v * scale),
            }
        })
        .collect();

    let mut gnss_rng = Gauss::new(seed, Stream::Gnss, bound);
    let decimation = scenario.gnss_decimation();
    let gnss = (decimation..=n)
        .step_by(decimation)
        .map(|k| {
            let s = &truth[k];
            let p_ant = frame.ned_to_ecef(&s.p_ant_ned);
            let observations = scenario
                .constellation
                .satellites
                .iter()
                .enumerate()
                .map(|(i, sat)| {
                    let mut obs = GnssObservation {
                        sat_id: sat.id,
                        p_es_e: satellite_position(scenario, &frame, i, s.t),
                        v_es_n: Vector3::from(sat.velocity_ned),
                        pseudorange: 0.0,
                        deltarange: 0.0,
                        cn0: sat.cn0,
                        corrections: Corrections::default(),
                    };
                    let (s_rho, s_d) = sigma_epsilon(sat.cn0, truth_noise.c_rho, truth_noise.c_d);
                    obs.pseudorange = predict_pseudorange(&p_ant, s.c_b, &obs) + gnss_rng.draw(s_rho * scale);
                    obs.deltarange = predict_deltarange(&p_ant, &s.v_ant_ned, s.c_d, &obs, &frame) + gnss_rng.draw(s_d * scale);
                    obs
                })
                .collect();
            GnssEpoch { k, t: s.t, observations }
        })
        .collect();

    let initial_estimate = initial_estimate(scenario, &truth[0], &frame, bound);
    Ok(SimData { dt, frame, truth, imu, controls, gnss, initial_estimate })
}

/// Truth ⊞ δx with δx drawn from the filter's initial standard deviations,
/// plus any injected yaw error.
fn initial_estimate(scenario: &Scenario, truth0: &TruthSample, frame: &LocalFrame, bound: Option<f64>) -> MainState {
    let sigma = scenario.true_noise().initial;
    let mut rng = Gauss::new(scenario.seed, Stream::Initial, bound);
    let mut dx = nalgebra::DVector::zeros(ERROR_DIM);
    let pos_ned = rng.vector(&sigma.position);
    dx.fixed_rows_mut::<3>(POS).copy_from(&(frame.c_n_e() * pos_ned));
    dx.fixed_rows_mut::<3>(VEL).copy_from(&rng.vector(&splat(sigma.velocity)));
    dx.fixed_rows_mut::<3>(ATT).copy_from(&rng.vector(&splat(sigma.attitude)));
    dx.fixed_rows_mut::<3>(BA).copy_from(&rng.vector(&splat(sigma.accel_bias)));
    dx.fixed_rows_mut::<3>(BG).copy_from(&rng.vector(&splat(sigma.gyro_bias)));
    dx[CB] = rng.draw(sigma.clock_bias);
    dx[CD] = rng.draw(sigma.clock_drift);
    dx[ATT + 2] += scenario.yaw_init_error();
    truth0.main_state(frame).boxplus(&dx)
}

pub(crate) fn write_csv<R: serde::Serialize>(path: &Path, header: &[&str], rows: impl IntoIterator<Item = R>) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_path(path)?;
    w.write_record(header)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes `truth.csv`, `imu.csv`, `controls.csv` and `gnss.csv` into `dir`.
pub fn write_streams(data: &SimData, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let header = ["t", "n", "e", "d", "v_n", "v_e", "v_d", "yaw", "speed", "accel", "yaw_rate", "c_b", "c_d"];
    let rows = data.truth.iter().map(|s| {
        let (p, v, k) = (&s.p_ant_ned, &s.v_ant_ned, &s.kinematics);
        (s.t, p.x, p.y, p.z, v.x, v.y, v.z, s.q_b_n.euler_angles().2, k.speed, k.accel, k.yaw_rate, s.c_b, s.c_d)
    });
    write_csv(&dir.join("truth.csv"), &header, rows)?;
    let header = ["t", "f_x", "f_y", "f_z", "w_x", "w_y", "w_z"];
    let rows = data.imu.iter().map(|s| (s.t, s.f_ib_b.x, s.f_ib_b.y, s.f_ib_b.z, s.w_ib_b.x, s.w_ib_b.y, s.w_ib_b.z));
    write_csv(&dir.join("imu.csv"), &header, rows)?;
    let rows = data.controls.iter().map(|c| (c.t, c.current, c.delta, c.v_d));
    write_csv(&dir.join("controls.csv"), &["t", "current", "delta", "v_d"], rows)?;
    let rows = data.gnss.iter().flat_map(|e| e.observations.iter().map(move |o| (e.t, o.sat_id, o.pseudorange, o.deltarange, o.cn0)));
    write_csv(&dir.join("gnss.csv"), &["t", "sat_id", "pseudorange", "deltarange", "cn0"], rows)
}
