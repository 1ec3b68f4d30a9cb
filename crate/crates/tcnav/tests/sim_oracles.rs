//! Synthetic streams checked against geometry, statistics and round trips.

use nalgebra::Vector3;

use tcnav::pipeline::run_on_data;
use tcnav::scenario::{FilterChoice, Scenario};
use tcnav::sim::{generate_truth, ideal_imu, simulate, Profile};
use tcnav::RunOptions;
use tcnav_core::fault::{acceleration_threshold, input_intervals, yawrate_threshold};
use tcnav_core::nav::main_model::MainModel;
use tcnav_core::nav::noise::sigma_epsilon;

fn scenario(json: &str) -> Scenario {
    Scenario::from_json(json).unwrap()
}

fn nominal() -> Scenario {
    Scenario::load(std::path::Path::new(concat!(env!("CARGO_MANIFEST_DIR"), "/../../scenarios/nominal.json"))).unwrap()
}

fn sample_std(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
}

#[test]
fn two_circle_course_closes() {
    let (r, v) = (20.0, 4.0);
    let s = scenario(&format!(
        r#"{{"duration": 70, "trajectory": {{"initial_speed": {v}, "initial_yaw_rate": {},
            "segments": [{{"kind": "arc", "radius": {r}, "angle_deg": 360, "speed": {v}}},
                         {{"kind": "arc", "radius": {r}, "angle_deg": 360, "speed": {v}}}]}}}}"#,
        v / r
    ));
    let p = Profile::new(&s);
    let end = 2.0 * std::f64::consts::TAU * r / v;
    let steps = 10_000;
    let mut d = Vector3::zeros();
    let mut max_offset: f64 = 0.0;
    for k in 0..steps {
        d += p.displacement(end * k as f64 / steps as f64, end * (k + 1) as f64 / steps as f64);
        max_offset = max_offset.max(d.norm());
    }
    assert!(d.norm() < 1e-6, "closure gap {}", d.norm());
    // the course is a circle of diameter 2R
    assert!((max_offset - 2.0 * r).abs() < 1e-3);
    assert!((p.at(end).heading - p.at(0.0).heading - 2.0 * std::f64::consts::TAU).abs() < 1e-9);
}

#[test]
fn straight_segment_has_no_acceleration_or_turn() {
    let s = scenario(r#"{"duration": 10, "trajectory": {"initial_speed": 3, "segments": [{"kind": "straight", "length": 30, "speed": 3}]}}"#);
    let truth = generate_truth(&s);
    for w in truth.windows(2).skip(10) {
        let imu = ideal_imu(&w[0], &w[1]);
        assert!(imu.w_ib_b.norm() < 1e-12);
        assert!((imu.f_ib_b - Vector3::new(0.0, 0.0, -9.80665)).norm() < 1e-9);
    }
}

/// Largest antenna position error of a strapdown run over the noiseless IMU
/// of the nominal scenario's first `duration` seconds.
pub fn strapdown_drift(duration: f64) -> f64 {
    let mut s = nominal();
    s.duration = duration;
    s.noise.noiseless = true;
    let data = simulate(&s).unwrap();
    let mut model = MainModel::new(data.frame.clone(), s.true_noise());
    model.lever_arm = s.lever_arm();
    let mut x = data.truth[0].main_state(&data.frame);
    let mut worst: f64 = 0.0;
    for (imu, truth) in data.imu.iter().zip(&data.truth[1..]) {
        x = model.propagate(&x, imu, data.dt).unwrap();
        let err = data.frame.ecef_to_ned(&x.p_ea_e) - truth.p_ant_ned;
        worst = worst.max(err.norm());
    }
    worst
}

#[test]
fn strapdown_retracks_noiseless_imu_over_sixty_seconds() {
    let worst = strapdown_drift(60.0);
    assert!(worst < 0.1, "strapdown drift {worst} m");
}

#[test]
fn imu_noise_variance_matches_configuration() {
    let mut s = scenario(r#"{"duration": 1000, "trajectory": {"segments": [{"kind": "dwell", "duration": 1000}]}}"#);
    // negligible biases so the measured spread is white noise only
    s.noise.accel_bias_sigma = 1e-12;
    s.noise.gyro_bias_sigma_deg_s = 1e-12;
    let data = simulate(&s).unwrap();
    assert!(data.imu.len() >= 100_000);
    let noise = s.true_noise();
    let acc = noise.accel_noise_density / data.dt.sqrt();
    let gyro = noise.gyro_noise_density / data.dt.sqrt();
    for axis in 0..3 {
        let f: Vec<f64> = data.imu.iter().zip(data.truth.windows(2)).map(|(m, w)| m.f_ib_b[axis] - ideal_imu(&w[0], &w[1]).f_ib_b[axis]).collect();
        let g: Vec<f64> = data.imu.iter().map(|m| m.w_ib_b[axis]).collect();
        assert!((sample_std(&f) / acc - 1.0).abs() < 0.05, "accel axis {axis}");
        assert!((sample_std(&g) / gyro - 1.0).abs() < 0.05, "gyro axis {axis}");
    }
}

#[test]
fn gnss_noise_matches_sigma_epsilon() {
    let mut s = scenario(r#"{"duration": 1000, "trajectory": {"segments": [{"kind": "dwell", "duration": 1000}]}}"#);
    s.noise.clock_bias_density = 1e-12;
    s.noise.clock_drift_density = 1e-12;
    let data = simulate(&s).unwrap();
    assert!(data.gnss.len() >= 10_000);
    let noise = s.true_noise();
    for (i, sat) in s.constellation.satellites.iter().enumerate() {
        let (s_rho, s_d) = sigma_epsilon(sat.cn0, noise.c_rho, noise.c_d);
        let mut rho = Vec::new();
        let mut dr = Vec::new();
        for epoch in &data.gnss {
            let truth = &data.truth[epoch.k];
            let obs = &epoch.observations[i];
            let p = data.frame.ned_to_ecef(&truth.p_ant_ned);
            rho.push(obs.pseudorange - (obs.p_es_e - p).norm() - truth.c_b);
            let los = data.frame.c_n_e().tr_mul(&(obs.p_es_e - p).normalize());
            dr.push(obs.deltarange - los.dot(&obs.v_es_n) - truth.c_d);
        }
        assert!((sample_std(&rho) / s_rho - 1.0).abs() < 0.05, "pseudorange sat {}", sat.id);
        assert!((sample_std(&dr) / s_d - 1.0).abs() < 0.05, "deltarange sat {}", sat.id);
    }
}

#[test]
fn static_noiseless_pseudorange_is_geometric_range() {
    let s = scenario(r#"{"duration": 5, "noise": {"noiseless": true, "clock_bias_initial": 0, "clock_drift_initial": 0}, "trajectory": {"segments": [{"kind": "dwell", "duration": 5}]}}"#);
    s.validate().unwrap();
    let data = simulate(&s).unwrap();
    let p = data.frame.ned_to_ecef(&data.truth[0].p_ant_ned);
    for epoch in &data.gnss {
        for obs in &epoch.observations {
            assert!((obs.pseudorange - (obs.p_es_e - p).norm()).abs() < 1e-6);
        }
    }
}

#[test]
fn steering_inversion_and_threshold_consistency() {
    let s = scenario(
        r#"{"duration": 10, "noise": {"noiseless": true}, "vehicle": {"wheelbase": 1.0},
            "trajectory": {"initial_speed": 2, "initial_yaw_rate": 0.4, "segments": [{"kind": "hold", "duration": 10, "speed": 2, "yaw_rate": 0.4}]}}"#,
    );
    let data = simulate(&s).unwrap();
    for c in &data.controls {
        assert!((c.delta - 0.2f64.atan()).abs() < 1e-12);
        assert!((c.v_d - 2.0).abs() < 1e-12);
    }
    assert!((0.2f64.atan() - 0.1974).abs() < 1e-4);

    let s = nominal();
    let data = simulate(&s).unwrap();
    let p = s.vehicle.params();
    let cfg = s.filter.fd_config();
    for (c, k) in data.controls.iter().enumerate() {
        let mid = Profile::new(&s).at(k.t - data.dt / 2.0);
        let i = input_intervals(k, &cfg).unwrap();
        let a = acceleration_threshold(&i.speed, &i.current, &p).unwrap();
        let y = yawrate_threshold(&i.speed, &i.delta, &p).unwrap();
        assert!(a.contains(mid.accel), "epoch {c}: accel {} outside {a}", mid.accel);
        assert!(y.contains(mid.yaw_rate), "epoch {c}: yaw rate {} outside {y}", mid.yaw_rate);
    }
}

#[test]
fn burst_window_noise_has_the_injected_spread() {
    let s = scenario(
        r#"{"duration": 300, "trajectory": {"segments": [{"kind": "dwell", "duration": 300}]},
            "faults": [{"kind": "imu_noise_burst", "start": 200, "stop": 280, "sigma": 10}]}"#,
    );
    let data = simulate(&s).unwrap();
    let inside: Vec<f64> = data
        .imu
        .iter()
        .zip(data.truth.windows(2))
        .filter(|(m, _)| m.t > 200.0 && m.t <= 280.0)
        .map(|(m, w)| m.f_ib_b.x - ideal_imu(&w[0], &w[1]).f_ib_b.x - w[0].b_a.x)
        .collect();
    assert_eq!(inside.len(), 8000);
    assert!((sample_std(&inside) / 10.0 - 1.0).abs() < 0.05);
    let outside: Vec<f64> = data.imu.iter().filter(|m| m.t < 199.0).map(|m| m.f_ib_b.x).collect();
    assert!(sample_std(&outside) < 0.5);
}

/// Largest 3D error over the last 100 s of the nominal scenario run on
/// noiseless streams.
pub fn noiseless_steady_state_error(filter: FilterChoice) -> f64 {
    let mut s = nominal();
    s.noise.noiseless = true;
    s.filter.pl = false;
    s.filter.fd = false;
    let data = simulate(&s).unwrap();
    let options = RunOptions { filter: Some(filter), ..RunOptions::default() };
    let report = run_on_data(&options.apply(&s).unwrap(), &data).unwrap();
    report.rows.iter().filter(|r| r.t >= s.duration - 100.0).map(|r| r.err_3d).fold(0.0, f64::max)
}

#[test]
fn noiseless_gnss_drives_the_filter_to_truth() {
    for filter in [FilterChoice::Ekf, FilterChoice::Ehf] {
        let tail = noiseless_steady_state_error(filter);
        assert!(tail < 1e-3, "{filter:?}: steady-state error {tail} m");
    }
}

#[test]
fn truth_and_streams_share_one_time_base() {
    let s = nominal();
    let data = simulate(&s).unwrap();
    assert_eq!(data.truth.len(), s.epochs() + 1);
    for (k, imu) in data.imu.iter().enumerate() {
        assert_eq!(imu.t, data.truth[k + 1].t);
        assert_eq!(data.controls[k].t, imu.t);
    }
    for g in &data.gnss {
        assert_eq!(g.t, data.truth[g.k].t);
        assert_eq!(g.k % s.gnss_decimation(), 0);
    }
}
