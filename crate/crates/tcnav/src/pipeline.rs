//! End-to-end run: main filter with error zonotope, IMU fault detection and
//! the GNSS-only fallback filter, epoch by epoch over simulated streams.
//!
//! Per IMU epoch the order is: fault check of the new IMU sample against the
//! controls, filter switch if the supervisor asks for one, propagation,
//! measurement update when a GNSS epoch falls on this instant, then the PL of
//! whichever filter is active. The main filter keeps running on the (faulty)
//! IMU while the fallback filter is in charge so it can take over again.

use std::time::Instant;

use nalgebra::{DMatrix, Vector3};

use tcnav_core::Error as CoreError;
use tcnav_core::fault::{check_epoch, ActiveFilter, FdEpoch, Supervisor, SwitchEvent};
use tcnav_core::filter::{GammaSetting, RobustConfig, RobustFilter, UpdateReport};
use tcnav_core::nav::fallback::{self, covariance_from_main, MAIN_INDICES};
use tcnav_core::nav::main_model::{self, ERROR_DIM};
use tcnav_core::nav::{FallbackModel, FallbackState, MainModel, MainState};
use tcnav_core::protection::{pl_step, ErrorZonotope, PlConfig, PlUpdate};

use crate::report::{summarize, ActiveColumn, EpochRow, RunReport, RunSettings, RuntimeStats, SwitchColumn, Window};
use crate::scenario::{FaultInjection, FilterChoice, Scenario};
use crate::sim::{simulate, SimData};
use crate::{Error, Result};

/// Command-line overrides of the scenario's `filter` section and seed.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunOptions {
    pub filter: Option<FilterChoice>,
    pub fd: Option<bool>,
    pub pl: Option<bool>,
    pub q: Option<usize>,
    pub n_sigma_z: Option<f64>,
    pub seed: Option<u64>,
    pub bounded: Option<bool>,
}

impl RunOptions {
    pub fn apply(&self, scenario: &Scenario) -> Result<Scenario> {
        let mut s = scenario.clone();
        let f = &mut s.filter;
        if let Some(v) = self.filter {
            f.mode = v;
        }
        if let Some(v) = self.fd {
            f.fd = v;
        }
        if let Some(v) = self.pl {
            f.pl = v;
        }
        if let Some(v) = self.q {
            f.q = v;
        }
        if let Some(v) = self.n_sigma_z {
            f.n_sigma_z = v;
        }
        if let Some(v) = self.seed {
            s.seed = v;
        }
        if let Some(v) = self.bounded {
            s.noise.bounded = v;
        }
        s.validate()?;
        Ok(s)
    }
}

/// Consecutive bad epochs after which a run is declared divergent.
pub const DIVERGENCE_EPOCHS: usize = 10;
/// 3D error (m) counted as a bad epoch.
pub const DIVERGENCE_ERROR: f64 = 1000.0;

/// Simulates the scenario and runs the pipeline on the result.
pub fn run_scenario(scenario: &Scenario, options: &RunOptions) -> Result<RunReport> {
    let scenario = options.apply(scenario)?;
    let data = simulate(&scenario)?;
    run_on_data(&scenario, &data)
}

fn fault_windows(scenario: &Scenario) -> Vec<Window> {
    scenario
        .faults
        .iter()
        .filter_map(|f| match *f {
            FaultInjection::ImuNoiseBurst { start, stop, .. } => Some(Window { start, stop }),
            _ => None,
        })
        .collect()
}

/// Initial error zonotope of the main filter: position box from the PL
/// configuration (NED), every other state at `n_σ,z` initial sigmas.
pub fn initial_error_zonotope(model: &MainModel, cfg: &PlConfig) -> ErrorZonotope {
    let mut hw = model.initial_sigmas() * cfg.n_sigma_z;
    for a in 0..3 {
        hw[main_model::POS + a] = cfg.e0_position[a];
    }
    ErrorZonotope::new(model.ned_to_error_state() * DMatrix::from_diagonal(&hw))
}

/// Filter failures that end a run as divergent rather than as an error.
fn is_numerical_breakdown(e: &CoreError) -> bool {
    matches!(e, CoreError::GammaInfeasible { .. } | CoreError::UpdateSingular | CoreError::FilterDivergence | CoreError::DivisionByZero)
}

struct Pipeline<'a> {
    scenario: &'a Scenario,
    data: &'a SimData,
    main: RobustFilter<MainModel>,
    fallback: Option<RobustFilter<FallbackModel>>,
    fallback_model: FallbackModel,
    pl: Option<PlConfig>,
    e_main: Option<ErrorZonotope>,
    e_fallback: Option<ErrorZonotope>,
    supervisor: Option<Supervisor>,
    /// Bias estimates frozen when the fallback filter took over.
    frozen_biases: (Vector3<f64>, Vector3<f64>),
    timings: Vec<f64>,
}

/// Runs the pipeline on already simulated streams.
pub fn run_on_data(scenario: &Scenario, data: &SimData) -> Result<RunReport> {
    let cfg = &scenario.filter;
    let noise = scenario.filter_noise();
    let mut main_model = MainModel::new(data.frame.clone(), noise.clone());
    main_model.lever_arm = scenario.lever_arm();
    let robust = RobustConfig {
        mode: cfg.mode.into(),
        gamma: GammaSetting::Auto { safety: cfg.gamma_safety },
        weighting: None,
    };
    let p0 = main_model.initial_covariance();
    let pl = cfg.pl.then(|| cfg.pl_config());
    let e_main = pl.as_ref().map(|c| initial_error_zonotope(&main_model, c));
    let main = RobustFilter::new(main_model, data.initial_estimate.clone(), p0, robust)?.with_gate(cfg.gate_sigma);
    let mut p = Pipeline {
        scenario,
        data,
        main,
        fallback: None,
        fallback_model: FallbackModel::new(data.frame.clone(), noise),
        pl,
        e_main,
        e_fallback: None,
        supervisor: cfg.fd.then(|| Supervisor::new(&cfg.fd_config())),
        frozen_biases: (Vector3::zeros(), Vector3::zeros()),
        timings: Vec::new(),
    };
    let (rows, divergent) = p.run()?;
    let windows = fault_windows(scenario);
    let summary = summarize(&rows, &windows, divergent)?;
    let settings = RunSettings {
        seed: scenario.seed,
        filter: match cfg.mode {
            FilterChoice::Ekf => "ekf".into(),
            FilterChoice::Ehf => "ehf".into(),
        },
        fd: cfg.fd,
        pl: cfg.pl,
        q: cfg.q,
        n_sigma_z: cfg.n_sigma_z,
        bounded_noise: scenario.noise.bounded,
    };
    Ok(RunReport { settings, rows, summary, fault_windows: windows, runtime: RuntimeStats::from_seconds(&p.timings) })
}

/// Measurement-update outcome of the active filter at one epoch.
struct UpdateInfo {
    gamma: f64,
    feasible: bool,
    used: usize,
    rejected: usize,
}

impl UpdateInfo {
    fn from(report: &UpdateReport) -> UpdateInfo {
        UpdateInfo { gamma: report.gamma, feasible: report.feasible, used: report.h.nrows(), rejected: report.rejected.len() }
    }
}

impl Pipeline<'_> {
    fn active(&self) -> ActiveFilter {
        self.supervisor.as_ref().map_or(ActiveFilter::Main, Supervisor::active)
    }

    /// Runs all epochs; stops early on divergence.
    fn run(&mut self) -> Result<(Vec<EpochRow>, bool)> {
        let data = self.data;
        let mut rows = Vec::with_capacity(data.truth.len());
        rows.push(self.row(0, None, SwitchColumn::None, None));
        let mut gnss = data.gnss.iter().peekable();
        let mut bad = 0usize;
        for k in 1..data.truth.len() {
            let observations = gnss.next_if(|e| e.k == k).map(|e| e.observations.as_slice());
            let row = match self.step(k, observations) {
                Ok(row) => row,
                Err(Error::Core(e)) if is_numerical_breakdown(&e) => return Ok((rows, true)),
                Err(e) => return Err(e),
            };
            let finite = row.err_3d.is_finite();
            bad = if !finite || row.err_3d > DIVERGENCE_ERROR { bad + 1 } else { 0 };
            if finite {
                rows.push(row);
            }
            if bad >= DIVERGENCE_EPOCHS {
                return Ok((rows, true));
            }
        }
        Ok((rows, false))
    }

    fn step(&mut self, k: usize, observations: Option<&[tcnav_core::nav::GnssObservation]>) -> Result<EpochRow> {
        let data = self.data;
        let imu = &data.imu[k - 1];
        let t = data.truth[k].t;

        let mut fd_epoch = None;
        let mut event = SwitchEvent::None;
        if let Some(sup) = self.supervisor.as_mut() {
            let (b_a, b_g) = match sup.active() {
                ActiveFilter::Main => (self.main.estimate().state.b_a, self.main.estimate().state.b_g),
                ActiveFilter::Fallback => self.frozen_biases,
            };
            let fd = check_epoch(imu, &data.controls[k - 1], b_a.x, b_g.z, &self.scenario.vehicle.params(), &self.scenario.filter.fd_config())?;
            event = sup.step(t, k as u64, fd.check).1;
            fd_epoch = Some(fd);
        }
        match event {
            SwitchEvent::ToFallback => self.enter_fallback()?,
            SwitchEvent::ToMain => self.leave_fallback()?,
            SwitchEvent::None => {}
        }

        let main_transition = self.main.propagate(imu, data.dt)?;
        let main_update = match observations {
            Some(obs) => self.main.update(obs)?,
            None => None,
        };
        let mut info = main_update.as_ref().map(UpdateInfo::from);

        match self.active() {
            ActiveFilter::Main => {
                if let (Some(cfg), Some(e)) = (&self.pl, &self.e_main) {
                    let tr = &main_transition;
                    let upd = main_update.as_ref().map(|u| PlUpdate { gain: &u.gain, h: &u.h, r: &u.r });
                    let start = Instant::now();
                    let next = pl_step(e, &tr.f, &tr.g, &tr.q, upd, cfg)?;
                    self.timings.push(start.elapsed().as_secs_f64());
                    self.e_main = Some(next);
                }
            }
            ActiveFilter::Fallback => {
                let fb = self.fallback.as_mut().expect("fallback filter exists while active");
                let tr = fb.propagate(&(), data.dt)?;
                let update = match observations {
                    Some(obs) => fb.update(obs)?,
                    None => None,
                };
                info = update.as_ref().map(UpdateInfo::from);
                if let (Some(cfg), Some(e)) = (&self.pl, &self.e_fallback) {
                    let upd = update.as_ref().map(|u| PlUpdate { gain: &u.gain, h: &u.h, r: &u.r });
                    let start = Instant::now();
                    let next = pl_step(e, &tr.f, &tr.g, &tr.q, upd, cfg)?;
                    self.timings.push(start.elapsed().as_secs_f64());
                    self.e_fallback = Some(next);
                }
            }
        }
        let switch = match event {
            SwitchEvent::None => SwitchColumn::None,
            SwitchEvent::ToFallback => SwitchColumn::ToFallback,
            SwitchEvent::ToMain => SwitchColumn::ToMain,
        };
        Ok(self.row(k, fd_epoch, switch, info))
    }

    /// Hands over to the fallback filter, seeded from the main filter.
    fn enter_fallback(&mut self) -> Result<()> {
        let est = self.main.estimate();
        self.frozen_biases = (est.state.b_a, est.state.b_g);
        let state = FallbackState::from_main(&est.state);
        let cov = covariance_from_main(&est.covariance);
        let config = self.main.config().clone();
        self.fallback =
            Some(RobustFilter::new(self.fallback_model.clone(), state, cov, config)?.with_gate(self.scenario.filter.gate_sigma));
        self.e_fallback = self.e_main.as_ref().map(|e| e.select_rows(&MAIN_INDICES));
        Ok(())
    }

    /// Re-seeds the main filter from the fallback filter and hands back.
    fn leave_fallback(&mut self) -> Result<()> {
        let fb = self.fallback.take().expect("fallback filter exists while active");
        let fb_est = fb.estimate();
        let main_est = self.main.estimate();
        let mut state: MainState = main_est.state.clone();
        state.p_ea_e = fb_est.state.p_ea_e;
        state.v_ea_n = fb_est.state.v_ea_n;
        state.c_b = fb_est.state.c_b;
        state.c_d = fb_est.state.c_d;
        (state.b_a, state.b_g) = self.frozen_biases;

        let others: Vec<usize> = (0..ERROR_DIM).filter(|i| !MAIN_INDICES.contains(i)).collect();
        let mut cov = DMatrix::zeros(ERROR_DIM, ERROR_DIM);
        for (a, &i) in MAIN_INDICES.iter().enumerate() {
            for (b, &j) in MAIN_INDICES.iter().enumerate() {
                cov[(i, j)] = fb_est.covariance[(a, b)];
            }
        }
        for &i in &others {
            cov[(i, i)] = main_est.covariance[(i, i)];
        }
        if let (Some(cfg), Some(e)) = (&self.pl, self.e_fallback.take()) {
            let g = e.generators();
            let mut rows = DMatrix::zeros(ERROR_DIM, g.ncols() + others.len());
            for (a, &i) in MAIN_INDICES.iter().enumerate() {
                rows.view_mut((i, 0), (1, g.ncols())).copy_from(&g.row(a));
            }
            for (c, &i) in others.iter().enumerate() {
                rows[(i, g.ncols() + c)] = cfg.n_sigma_z * cov[(i, i)].sqrt();
            }
            self.e_main = Some(ErrorZonotope::new(rows));
        }
        self.main.reset(state, cov)?;
        Ok(())
    }

    fn row(&self, k: usize, fd: Option<FdEpoch>, switch: SwitchColumn, info: Option<UpdateInfo>) -> EpochRow {
        let data = self.data;
        let frame = &data.frame;
        let truth = &data.truth[k];
        let (active, p_ecef, pl) = match self.active() {
            ActiveFilter::Main => (ActiveColumn::Main, self.main.estimate().state.p_ea_e, &self.e_main),
            ActiveFilter::Fallback => (
                ActiveColumn::Fallback,
                self.fallback.as_ref().expect("fallback filter exists while active").estimate().state.p_ea_e,
                &self.e_fallback,
            ),
        };
        let est = frame.ecef_to_ned(&p_ecef);
        let err = est - truth.p_ant_ned;
        let pl = pl.as_ref().and_then(|e| e.rotated_block_radii(fallback::POS, &frame.c_e_n()).ok());
        EpochRow {
            t: truth.t,
            active_filter: active,
            est_n: est.x,
            est_e: est.y,
            est_d: est.z,
            true_n: truth.p_ant_ned.x,
            true_e: truth.p_ant_ned.y,
            true_d: truth.p_ant_ned.z,
            err_n: err.x,
            err_e: err.y,
            err_d: err.z,
            err_2d: err.xy().norm(),
            err_3d: err.norm(),
            pl_n: pl.map(|p| p[0]),
            pl_e: pl.map(|p| p[1]),
            pl_d: pl.map(|p| p[2]),
            accel_fault: fd.is_some_and(|f| f.check.accel_fault),
            yaw_fault: fd.is_some_and(|f| f.check.yaw_fault),
            switch,
            gamma: info.as_ref().map(|i| i.gamma),
            feasible: info.as_ref().map(|i| i.feasible),
            gnss_used: info.as_ref().map_or(0, |i| i.used),
            gnss_rejected: info.as_ref().map_or(0, |i| i.rejected),
            f_x: fd.map(|f| f.f_x),
            accel_lo: fd.map(|f| f.accel_threshold.lo()),
            accel_hi: fd.map(|f| f.accel_threshold.hi()),
            w_z: fd.map(|f| f.w_z),
            yaw_lo: fd.map(|f| f.yaw_threshold.lo()),
            yaw_hi: fd.map(|f| f.yaw_threshold.hi()),
        }
    }
}
