//! Threshold intervals against point evaluations, and supervisor latching.

use proptest::prelude::*;

use tcnav_core::fault::{
    acceleration_threshold, force_model, input_intervals, yawrate_threshold, ActiveFilter, ControlSample, FaultCheck, FdConfig, Supervisor, SwitchEvent,
    VehicleParams,
};
use tcnav_core::Interval;

fn params() -> impl Strategy<Value = VehicleParams> {
    (0.5..3.0f64, 50.0..500.0f64, 1.0..50.0f64, 0.0..20.0f64, 0.0..10.0f64, 0.0..2.0f64)
        .prop_map(|(wheelbase, m_eff, k_m, c0, c1, c2)| VehicleParams { wheelbase, m_eff, k_m, c0, c1, c2 })
}

fn interval(lo: f64, hi: f64) -> impl Strategy<Value = Interval> {
    (lo..hi, lo..hi).prop_map(|(a, b)| Interval::new(a.min(b), a.max(b)).unwrap())
}

fn lerp(i: &Interval, s: f64) -> f64 {
    i.lo() + s * (i.hi() - i.lo())
}

proptest! {
    #[test]
    fn point_force_lies_in_the_interval_force(
        p in params(),
        v in interval(-3.0, 8.0),
        current in interval(-20.0, 40.0),
        s in 0.0..=1.0f64,
        t in 0.0..=1.0f64,
    ) {
        let (vp, ip) = (lerp(&v, s), lerp(&current, t));
        let point = p.k_m * ip - p.drag(vp);
        let f = force_model(&v, &current, &p);
        prop_assert!(f.lo() - 1e-9 <= point && point <= f.hi() + 1e-9, "{point} not in {f}");
        let a = acceleration_threshold(&v, &current, &p).unwrap();
        prop_assert!(a.lo() - 1e-9 <= point / p.m_eff && point / p.m_eff <= a.hi() + 1e-9);
    }

    #[test]
    fn point_yaw_rate_lies_in_the_interval_yaw_rate(
        p in params(),
        v in interval(-2.0, 8.0),
        delta in interval(-0.6, 0.6),
        s in 0.0..=1.0f64,
        t in 0.0..=1.0f64,
    ) {
        let point = lerp(&v, s) * lerp(&delta, t).tan() / p.wheelbase;
        let y = yawrate_threshold(&v, &delta, &p).unwrap();
        prop_assert!(y.lo() - 1e-12 <= point && point <= y.hi() + 1e-12);
    }

    #[test]
    fn wider_inputs_give_containing_thresholds(
        p in params(),
        v in interval(-2.0, 8.0),
        current in interval(-10.0, 30.0),
        delta in interval(-0.5, 0.5),
        grow in 0.0..1.0f64,
    ) {
        let widen = |i: &Interval| Interval::new(i.lo() - grow, i.hi() + grow).unwrap();
        let a = acceleration_threshold(&v, &current, &p).unwrap();
        let a_wide = acceleration_threshold(&widen(&v), &widen(&current), &p).unwrap();
        prop_assert!(a_wide.lo() <= a.lo() + 1e-12 && a.hi() <= a_wide.hi() + 1e-12);
        let d_wide = Interval::new(delta.lo() - grow * 0.1, delta.hi() + grow * 0.1).unwrap();
        let y = yawrate_threshold(&v, &delta, &p).unwrap();
        let y_wide = yawrate_threshold(&widen(&v), &d_wide, &p).unwrap();
        prop_assert!(y_wide.lo() <= y.lo() + 1e-12 && y.hi() <= y_wide.hi() + 1e-12);
    }

    #[test]
    fn input_widths_are_two_n_sigma(
        current in -20.0..40.0f64,
        delta in -0.5..0.5f64,
        v_d in 0.0..8.0f64,
        n in 3.0..8.0f64,
    ) {
        let cfg = FdConfig { n_sigma_d: n, ..FdConfig::default() };
        let i = input_intervals(&ControlSample { t: 0.0, current, delta, v_d }, &cfg).unwrap();
        prop_assert!((i.current.width() - 2.0 * n * cfg.sigma_i).abs() < 1e-9);
        prop_assert!((i.delta.width() - 2.0 * n * cfg.sigma_delta).abs() < 1e-12);
        prop_assert!((i.speed.width() - 2.0 * n * cfg.sigma_v).abs() < 1e-12);
    }

    #[test]
    fn fallback_is_active_while_a_fault_is_latched(faults in prop::collection::vec(prop::bool::weighted(0.02), 1..2000)) {
        let cfg = FdConfig { dwell: 1.0, recovery_epochs: 20, ..FdConfig::default() };
        let mut s = Supervisor::new(&cfg);
        let mut last_fault: Option<f64> = None;
        let mut active = ActiveFilter::Main;
        for (k, &fault) in faults.iter().enumerate() {
            let t = k as f64 * 0.01;
            let (flag, event) = s.step(t, k as u64, FaultCheck { accel_fault: fault, yaw_fault: false });
            if fault {
                last_fault = Some(t);
            }
            if last_fault.is_some_and(|tf| t < tf + cfg.dwell) {
                prop_assert_eq!(flag.active_filter, ActiveFilter::Fallback);
            }
            match event {
                SwitchEvent::ToFallback => prop_assert!(active == ActiveFilter::Main && fault),
                SwitchEvent::ToMain => prop_assert!(active == ActiveFilter::Fallback && !fault),
                SwitchEvent::None => prop_assert_eq!(active, flag.active_filter),
            }
            active = flag.active_filter;
        }
    }
}
