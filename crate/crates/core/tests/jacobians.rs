//! Finite-difference checks of every analytic Jacobian.

use nalgebra::{DMatrix, DVector, UnitQuaternion, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use tcnav_core::filter::FilterModel;
use tcnav_core::nav::fallback::{self, FallbackModel, FallbackState};
use tcnav_core::nav::main_model::{self, MainModel, MainState};
use tcnav_core::nav::{Corrections, GnssObservation, ImuSample, LocalFrame, NoiseParams};

pub const TOL: f64 = 1e-5;

fn rel_err(analytic: &DMatrix<f64>, numeric: &DMatrix<f64>) -> f64 {
    (analytic - numeric).abs().max() / analytic.abs().max().max(1.0)
}

fn v3(rng: &mut ChaCha8Rng, s: f64) -> Vector3<f64> {
    Vector3::new(rng.random_range(-s..s), rng.random_range(-s..s), rng.random_range(-s..s))
}

fn random_main(rng: &mut ChaCha8Rng, frame: &LocalFrame) -> MainState {
    MainState {
        p_ea_e: frame.ned_to_ecef(&v3(rng, 500.0)),
        v_ea_n: v3(rng, 8.0),
        q_b_n: UnitQuaternion::from_euler_angles(rng.random_range(-0.3..0.3), rng.random_range(-0.3..0.3), rng.random_range(-3.1..3.1)),
        b_a: v3(rng, 0.2),
        b_g: v3(rng, 0.01),
        c_b: rng.random_range(-100.0..100.0),
        c_d: rng.random_range(-10.0..10.0),
    }
}

fn random_imu(rng: &mut ChaCha8Rng) -> ImuSample {
    ImuSample { t: 0.0, f_ib_b: Vector3::new(0.0, 0.0, -9.8) + v3(rng, 3.0), w_ib_b: v3(rng, 0.8) }
}

fn main_step(rng: &mut ChaCha8Rng) -> f64 {
    rng.random_range(0.005..0.1)
}

fn observations(rng: &mut ChaCha8Rng, frame: &LocalFrame, n: usize) -> Vec<GnssObservation> {
    (0..n)
        .map(|k| {
            let az: f64 = rng.random_range(0.0..std::f64::consts::TAU);
            let el: f64 = rng.random_range(0.3..1.5);
            let los = Vector3::new(el.cos() * az.cos(), el.cos() * az.sin(), -el.sin());
            GnssObservation {
                sat_id: k as u32,
                p_es_e: frame.ned_to_ecef(&(los * 2.0e7)),
                v_es_n: v3(rng, 800.0),
                pseudorange: 2.0e7,
                deltarange: 0.0,
                cn0: rng.random_range(30.0..42.0),
                corrections: Corrections::default(),
            }
        })
        .collect()
}

// ECEF coordinates near 6e6 m leave ~1e-9 m of resolution, so steps much
// below 1e-3 drown the position rows in rounding.
fn main_eps(_i: usize) -> f64 {
    1e-3
}

/// Worst relative errors of the main filter's F and G over `cases` random
/// states.
pub fn main_transition_errors(cases: usize) -> (f64, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let frame = LocalFrame::default();
    let mut model = MainModel::new(frame.clone(), NoiseParams::default());
    let (mut worst_f, mut worst_g): (f64, f64) = (0.0, 0.0);
    for _ in 0..cases {
        // exaggerated lever arm so the coupling terms are exercised
        model.lever_arm = v3(&mut rng, 1.5);
        let x = random_main(&mut rng, &frame);
        let imu = random_imu(&mut rng);
        let dt = main_step(&mut rng);
        let nominal = model.propagate(&x, &imu, dt).unwrap();
        let (f, g) = model.jacobians(&x, &imu, dt);

        let mut f_fd = DMatrix::zeros(17, 17);
        for j in 0..17 {
            let eps = main_eps(j);
            let mut dx = DVector::zeros(17);
            dx[j] = eps;
            let plus = model.propagate(&x.boxplus(&dx), &imu, dt).unwrap().boxminus(&nominal);
            let minus = model.propagate(&x.boxplus(&-dx), &imu, dt).unwrap().boxminus(&nominal);
            f_fd.set_column(j, &((plus - minus) / (2.0 * eps)));
        }
        worst_f = worst_f.max(rel_err(&f, &f_fd));

        let mut g_fd = DMatrix::zeros(17, main_model::NOISE_DIM);
        for j in 0..main_model::NOISE_DIM {
            let eps = 1e-3;
            let mut w = DVector::zeros(main_model::NOISE_DIM);
            w[j] = eps;
            let plus = model.propagate_with_noise(&x, &imu, dt, &w).unwrap().boxminus(&nominal);
            let minus = model.propagate_with_noise(&x, &imu, dt, &-w).unwrap().boxminus(&nominal);
            g_fd.set_column(j, &((plus - minus) / (2.0 * eps)));
        }
        worst_g = worst_g.max(rel_err(&g, &g_fd));
    }
    (worst_f, worst_g)
}

pub fn main_measurement_error(cases: usize) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let frame = LocalFrame::default();
    let model = MainModel::new(frame.clone(), NoiseParams::default());
    let mut worst: f64 = 0.0;
    for _ in 0..cases {
        let x = random_main(&mut rng, &frame);
        let obs = observations(&mut rng, &frame, 6);
        let lin = model.linearize(&x, &obs).unwrap();
        let mut h_fd = DMatrix::zeros(lin.len(), 17);
        for j in 0..17 {
            let eps = main_eps(j);
            let mut dx = DVector::zeros(17);
            dx[j] = eps;
            let plus = model.linearize(&x.boxplus(&dx), &obs).unwrap().residual;
            let minus = model.linearize(&x.boxplus(&-dx), &obs).unwrap().residual;
            h_fd.set_column(j, &(-(plus - minus) / (2.0 * eps)));
        }
        worst = worst.max(rel_err(&lin.h, &h_fd));
    }
    worst
}

fn random_fallback(rng: &mut ChaCha8Rng, frame: &LocalFrame) -> FallbackState {
    FallbackState { p_ea_e: frame.ned_to_ecef(&v3(rng, 500.0)), v_ea_n: v3(rng, 8.0), c_b: rng.random_range(-100.0..100.0), c_d: rng.random_range(-10.0..10.0) }
}

/// Worst relative errors of the fallback filter's F, G and H.
pub fn fallback_errors(cases: usize) -> (f64, f64, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let frame = LocalFrame::default();
    let model = FallbackModel::new(frame.clone(), NoiseParams::default());
    let n = fallback::ERROR_DIM;
    let mut worst: [f64; 3] = [0.0; 3];
    for _ in 0..cases {
        let x = random_fallback(&mut rng, &frame);
        let dt = main_step(&mut rng);
        let zero = DVector::zeros(fallback::NOISE_DIM);
        let nominal = model.propagate_with_noise(&x, dt, &zero).unwrap();
        let (f, g) = model.jacobians(dt);
        let mut f_fd = DMatrix::zeros(n, n);
        for j in 0..n {
            let mut dx = DVector::zeros(n);
            dx[j] = 1e-3;
            let plus = model.propagate_with_noise(&x.boxplus(&dx), dt, &zero).unwrap().boxminus(&nominal);
            let minus = model.propagate_with_noise(&x.boxplus(&-dx), dt, &zero).unwrap().boxminus(&nominal);
            f_fd.set_column(j, &((plus - minus) / 2e-3));
        }
        worst[0] = worst[0].max(rel_err(&f, &f_fd));
        let mut g_fd = DMatrix::zeros(n, fallback::NOISE_DIM);
        for j in 0..fallback::NOISE_DIM {
            let mut w = DVector::zeros(fallback::NOISE_DIM);
            w[j] = 1e-3;
            let plus = model.propagate_with_noise(&x, dt, &w).unwrap().boxminus(&nominal);
            let minus = model.propagate_with_noise(&x, dt, &-w).unwrap().boxminus(&nominal);
            g_fd.set_column(j, &((plus - minus) / 2e-3));
        }
        worst[1] = worst[1].max(rel_err(&g, &g_fd));

        let obs = observations(&mut rng, &frame, 6);
        let lin = model.linearize(&x, &obs).unwrap();
        let mut h_fd = DMatrix::zeros(lin.len(), n);
        for j in 0..n {
            let mut dx = DVector::zeros(n);
            dx[j] = 1e-3;
            let plus = model.linearize(&x.boxplus(&dx), &obs).unwrap().residual;
            let minus = model.linearize(&x.boxplus(&-dx), &obs).unwrap().residual;
            h_fd.set_column(j, &(-(plus - minus) / 2e-3));
        }
        worst[2] = worst[2].max(rel_err(&lin.h, &h_fd));
    }
    (worst[0], worst[1], worst[2])
}

#[test]
fn main_transition_matches_finite_differences() {
    let (f, g) = main_transition_errors(20);
    assert!(f < TOL, "F relative error {f:e}");
    assert!(g < TOL, "G relative error {g:e}");
}

#[test]
fn main_measurement_matches_finite_differences() {
    let h = main_measurement_error(20);
    assert!(h < TOL, "H relative error {h:e}");
}

#[test]
fn fallback_jacobians_match_finite_differences() {
    let (f, g, h) = fallback_errors(20);
    assert!(f < TOL && g < TOL && h < TOL, "fallback F {f:e}, G {g:e}, H {h:e}");
}
