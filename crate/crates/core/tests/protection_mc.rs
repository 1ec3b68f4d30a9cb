//! Error-zonotope bounds against Monte-Carlo truth on a linear system with
//! bounded noise.

use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use tcnav_core::filter::{FilterMode, GammaSetting, LinearModel, RobustConfig, RobustFilter};
use tcnav_core::protection::{pl_step, ErrorZonotope, PlConfig, PlUpdate};

/// Position/velocity with position measured.
fn model() -> LinearModel {
    let dt = 0.1;
    LinearModel {
        f: DMatrix::from_row_slice(2, 2, &[1.0, dt, 0.0, 1.0]),
        g: DMatrix::from_row_slice(2, 2, &[dt, 0.0, 0.0, dt]),
        q: DMatrix::from_diagonal(&DVector::from_vec(vec![0.01, 0.04])),
        h: DMatrix::from_row_slice(1, 2, &[1.0, 0.0]),
        r: DMatrix::from_element(1, 1, 0.25),
    }
}

fn bounded(rng: &mut ChaCha8Rng, variance: f64, n_sigma: f64) -> f64 {
    let b = n_sigma * variance.sqrt();
    rng.random_range(-b..=b)
}

/// Per epoch: true error and the hull radii of the error zonotope for each
/// configuration in `cfgs` (all driven by the same filter gains).
fn run(seed: u64, mode: FilterMode, cfgs: &[PlConfig], e0: [f64; 2], epochs: usize, n_sigma_noise: f64) -> Vec<(DVector<f64>, Vec<DVector<f64>>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = model();
    let x0 = DVector::zeros(2);
    let truth0 = DVector::from_vec(vec![rng.random_range(-e0[0]..=e0[0]), rng.random_range(-e0[1]..=e0[1])]);
    let p0 = DMatrix::from_diagonal(&DVector::from_vec(vec![(e0[0] / 3.0).powi(2), (e0[1] / 3.0).powi(2)]));
    let config = RobustConfig { mode, gamma: GammaSetting::Auto { safety: 2.0 }, weighting: None };
    let mut filter = RobustFilter::new(m.clone(), x0, p0, config).unwrap();
    let mut zonos: Vec<ErrorZonotope> = cfgs.iter().map(|_| ErrorZonotope::from_box(&DVector::from_vec(e0.to_vec()))).collect();
    let mut truth = truth0;
    let mut out = Vec::new();
    for k in 0..epochs {
        let w = DVector::from_vec(vec![bounded(&mut rng, m.q[(0, 0)], n_sigma_noise), bounded(&mut rng, m.q[(1, 1)], n_sigma_noise)]);
        truth = &m.f * truth + &m.g * w;
        filter.propagate(&DVector::zeros(0), 0.1).unwrap();
        let report = if k % 5 == 4 {
            let z = &m.h * &truth + DVector::from_element(1, bounded(&mut rng, m.r[(0, 0)], n_sigma_noise));
            filter.update(&z).unwrap()
        } else {
            None
        };
        for (e, cfg) in zonos.iter_mut().zip(cfgs) {
            let update = report.as_ref().map(|r| PlUpdate { gain: &r.gain, h: &r.h, r: &r.r });
            *e = pl_step(e, &m.f, &m.g, &m.q, update, cfg).unwrap();
        }
        let err = &filter.estimate().state - &truth;
        out.push((err, zonos.iter().map(ErrorZonotope::hull_radii).collect()));
    }
    out
}

fn cfg(q: usize, n_sigma_z: f64) -> PlConfig {
    PlConfig { q, n_sigma_z, e0_position: [1.0, 1.0, 1.0] }
}

#[test]
fn bounded_noise_errors_stay_inside_the_hull() {
    for mode in [FilterMode::Ekf, FilterMode::Ehf] {
        for seed in 0..50 {
            for (k, (err, radii)) in run(seed, mode, &[cfg(20, 3.0)], [2.0, 1.0], 300, 3.0).iter().enumerate() {
                for i in 0..2 {
                    assert!(err[i].abs() <= radii[0][i] * (1.0 + 1e-12), "{mode:?} seed {seed} epoch {k} axis {i}: {} > {}", err[i].abs(), radii[0][i]);
                }
            }
        }
    }
}

#[test]
fn unreduced_hull_is_inside_every_reduced_hull() {
    let cfgs = [cfg(1000, 3.0), cfg(8, 3.0), cfg(2, 3.0)];
    for (err, radii) in run(3, FilterMode::Ehf, &cfgs, [2.0, 1.0], 150, 3.0) {
        for i in 0..2 {
            assert!(radii[0][i] <= radii[1][i] * (1.0 + 1e-12));
            assert!(radii[0][i] <= radii[2][i] * (1.0 + 1e-12));
            assert!(err[i].abs() <= radii[0][i] * (1.0 + 1e-12));
        }
    }
}

#[test]
fn exact_zonotope_is_tight_in_the_scalar_case() {
    // x' = x + w, z = x + v with a constant gain: the hull radius follows
    // r' = |1 - k| (r + a) + k b exactly.
    let e = ErrorZonotope::from_box(&DVector::from_element(1, 1.0));
    let one = DMatrix::from_element(1, 1, 1.0);
    let gain = DMatrix::from_element(1, 1, 0.4);
    let c = PlConfig { q: 100, n_sigma_z: 2.0, e0_position: [1.0; 3] };
    let (q, r) = (DMatrix::from_element(1, 1, 0.01), DMatrix::from_element(1, 1, 0.09));
    let (a, b) = (2.0 * 0.1, 2.0 * 0.3);
    let mut radius = 1.0;
    let mut z = e;
    for _ in 0..20 {
        z = pl_step(&z, &one, &one, &q, Some(PlUpdate { gain: &gain, h: &one, r: &r }), &c).unwrap();
        radius = 0.6 * (radius + a) + 0.4 * b;
        assert!((z.hull_radii()[0] - radius).abs() < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn hull_grows_with_the_sigma_multiplier(seed in 0u64..1000, lo in 1.0..4.0f64, extra in 0.1..3.0f64) {
        let cfgs = [cfg(50, lo), cfg(50, lo + extra)];
        for (_, radii) in run(seed, FilterMode::Ekf, &cfgs, [1.0, 1.0], 60, 1.0) {
            for i in 0..2 {
                prop_assert!(radii[0][i] <= radii[1][i] * (1.0 + 1e-12));
            }
        }
    }
}
