//! Monte-Carlo trajectories and ensembles.
//!
//! Ensembles are reproducible bit for bit: trajectory `i` always draws from
//! [`rng::stream`]`(seed, i)`, trajectories are grouped into fixed blocks of
//! [`BLOCK`] that are summed sequentially, and block sums are combined in index order.
//! The worker count only decides which thread computes a block.

mod presets;
mod table;

pub use presets::*;
pub use table::*;

use rayon::prelude::*;
use serde::Serialize;

use crate::analytics::coherence_c;
use crate::error::{Error, Result};
use crate::feedback::{self, FeedbackConfig, LoopState};
use crate::kraus::{build_kraus, sample_measurement, KrausSet, Outcome};
use crate::qmath::{amplitude_damp, BellState, TwoQubitDensity};
use crate::rng;

/// Trajectories per deterministic summation block.
pub const BLOCK: usize = 16;

pub const CODE_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Per-step observables of one trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Observables {
    pub fid_be_plus: f64,
    pub fid_bo_plus: f64,
    /// `max(fid_be_plus, fid_bo_plus)`.
    pub fid_closest: f64,
    pub zz_parity: f64,
    pub coherence: f64,
}

pub const OBSERVABLE_NAMES: [&str; 5] = [
    "fid_be_plus",
    "fid_bo_plus",
    "fid_closest",
    "zz_parity",
    "coherence",
];

impl Observables {
    pub fn of(rho: &TwoQubitDensity) -> Self {
        let pops = rho.bell_populations();
        let (e, o) = (
            pops[BellState::EvenPlus.index()],
            pops[BellState::OddPlus.index()],
        );
        Self {
            fid_be_plus: e,
            fid_bo_plus: o,
            fid_closest: e.max(o),
            zz_parity: rho.zz_parity(),
            coherence: coherence_c(rho),
        }
    }

    pub fn to_array(self) -> [f64; 5] {
        [
            self.fid_be_plus,
            self.fid_bo_plus,
            self.fid_closest,
            self.zz_parity,
            self.coherence,
        ]
    }

    fn from_array(a: [f64; 5]) -> Self {
        Self {
            fid_be_plus: a[0],
            fid_bo_plus: a[1],
            fid_closest: a[2],
            zz_parity: a[3],
            coherence: a[4],
        }
    }
}

fn fid_be_plus(rho: &TwoQubitDensity) -> f64 {
    rho.bell_populations()[BellState::EvenPlus.index()]
}

/// One row of the optional per-step event log.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EventRow {
    pub step: usize,
    pub outcome: Outcome,
    pub pulse_fired: bool,
    pub fid_be_plus: f64,
    pub p_odd_filter: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrajectoryOptions {
    pub feedback: bool,
    pub record_every: usize,
    /// Inclusive step range over which `fid_be_plus` is averaged.
    pub window: Option<(usize, usize)>,
}

impl TrajectoryOptions {
    pub fn every_step(feedback: bool) -> Self {
        Self {
            feedback,
            record_every: 1,
            window: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrajectoryOutput {
    /// Observables after steps `record_every, 2·record_every, …`.
    pub series: Vec<Observables>,
    pub window_mean: Option<f64>,
    pub events: Vec<EventRow>,
}

/// Runs one trajectory. Without feedback the true state is simply measured (and damped,
/// when relaxation is configured) every step; with feedback the configured picture's
/// stepper runs the full loop.
pub fn run_trajectory<R: rand::Rng + ?Sized>(
    cfg: &FeedbackConfig,
    ks: &KrausSet,
    opts: &TrajectoryOptions,
    log_events: bool,
    rng: &mut R,
) -> Result<TrajectoryOutput> {
    if opts.record_every == 0 {
        return Err(Error::Domain("record_every must be >= 1".into()));
    }
    let mut out = TrajectoryOutput {
        series: Vec::with_capacity(cfg.steps / opts.record_every),
        ..Default::default()
    };
    let gamma = cfg.decay.map_or(0.0, |d| d.gamma);
    let mut state = LoopState::new(cfg);
    let (mut window_sum, mut window_n) = (0.0, 0usize);
    for s in 1..=cfg.steps {
        let (outcome, pulse_fired) = if opts.feedback {
            let (next, rec) = feedback::step(&state, cfg, ks, s - 1, rng)?;
            state = next;
            (rec.outcome, rec.pulse_fired)
        } else {
            let damped = if gamma > 0.0 {
                amplitude_damp(&state.rho, gamma)?
            } else {
                state.rho
            };
            let (o, rho) = sample_measurement(&damped, ks, rng)?;
            state.rho = rho;
            (o, false)
        };
        if let Some((lo, hi)) = opts.window {
            if (lo..=hi).contains(&s) {
                window_sum += fid_be_plus(&state.rho);
                window_n += 1;
            }
        }
        if s % opts.record_every == 0 {
            out.series.push(Observables::of(&state.rho));
        }
        if log_events {
            let p_odd = if opts.feedback {
                state.filter.odd_probability()
            } else {
                state.rho.odd_probability()
            };
            out.events.push(EventRow {
                step: s,
                outcome,
                pulse_fired,
                fid_be_plus: fid_be_plus(&state.rho),
                p_odd_filter: p_odd,
            });
        }
    }
    if opts.window.is_some() {
        if window_n == 0 {
            return Err(Error::Domain(
                "averaging window does not overlap the run".into(),
            ));
        }
        out.window_mean = Some(window_sum / window_n as f64);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnsembleConfig {
    pub base: FeedbackConfig,
    pub trajectories: usize,
    pub feedback_enabled: bool,
    pub record_every: usize,
    pub window: Option<(usize, usize)>,
}

impl EnsembleConfig {
    pub fn new(base: FeedbackConfig, trajectories: usize, feedback_enabled: bool) -> Self {
        Self {
            base,
            trajectories,
            feedback_enabled,
            record_every: 1,
            window: None,
        }
    }

    fn options(&self) -> TrajectoryOptions {
        TrajectoryOptions {
            feedback: self.feedback_enabled,
            record_every: self.record_every,
            window: self.window,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.base.validate()?;
        if self.trajectories == 0 {
            return Err(Error::Domain("trajectories must be >= 1".into()));
        }
        if self.record_every == 0 {
            return Err(Error::Domain("record_every must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnsembleMeta {
    pub code_version: &'static str,
    pub rng_stream: &'static str,
    pub config: EnsembleConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnsembleResult {
    pub steps: Vec<usize>,
    pub mean: Vec<Observables>,
    pub sem: Vec<Observables>,
    /// Mean and standard error over trajectories of the window-averaged `fid_be_plus`.
    pub window: Option<(f64, f64)>,
    pub meta: EnsembleMeta,
}

impl EnsembleResult {
    pub fn series(&self, name: &str) -> Option<(Vec<f64>, Vec<f64>)> {
        let k = OBSERVABLE_NAMES.iter().position(|n| *n == name)?;
        Some((
            self.mean.iter().map(|o| o.to_array()[k]).collect(),
            self.sem.iter().map(|o| o.to_array()[k]).collect(),
        ))
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Moments {
    sum: Vec<[f64; 5]>,
    sumsq: Vec<[f64; 5]>,
    window: (f64, f64),
}

impl Moments {
    fn zeros(len: usize) -> Self {
        Self {
            sum: vec![[0.0; 5]; len],
            sumsq: vec![[0.0; 5]; len],
            window: (0.0, 0.0),
        }
    }

    fn add_trajectory(&mut self, t: &TrajectoryOutput) {
        for (k, obs) in t.series.iter().enumerate() {
            for (j, x) in obs.to_array().into_iter().enumerate() {
                self.sum[k][j] += x;
                self.sumsq[k][j] += x * x;
            }
        }
        if let Some(w) = t.window_mean {
            self.window.0 += w;
            self.window.1 += w * w;
        }
    }

    fn merge(&mut self, other: &Moments) {
        for k in 0..self.sum.len() {
            for j in 0..5 {
                self.sum[k][j] += other.sum[k][j];
                self.sumsq[k][j] += other.sumsq[k][j];
            }
        }
        self.window.0 += other.window.0;
        self.window.1 += other.window.1;
    }
}

fn mean_sem(sum: f64, sumsq: f64, n: usize) -> (f64, f64) {
    let nf = n as f64;
    let mean = sum / nf;
    if n < 2 {
        return (mean, 0.0);
    }
    let var = ((sumsq - sum * sum / nf) / (nf - 1.0)).max(0.0);
    (mean, (var / nf).sqrt())
}

fn run_block(cfg: &EnsembleConfig, ks: &KrausSet, block: usize, len: usize) -> Result<Moments> {
    let mut m = Moments::zeros(len);
    let start = block * BLOCK;
    let end = (start + BLOCK).min(cfg.trajectories);
    let opts = cfg.options();
    for i in start..end {
        let mut r = rng::stream(cfg.base.seed, i as u64);
        m.add_trajectory(&run_trajectory(&cfg.base, ks, &opts, false, &mut r)?);
    }
    Ok(m)
}

/// Runs the ensemble on the current rayon pool.
pub fn run_ensemble(cfg: &EnsembleConfig) -> Result<EnsembleResult> {
    cfg.validate()?;
    let ks = build_kraus(cfg.base.cat)?;
    let len = cfg.base.steps / cfg.record_every;
    let blocks = cfg.trajectories.div_ceil(BLOCK);
    let parts: Vec<Moments> = (0..blocks)
        .into_par_iter()
        .map(|b| run_block(cfg, &ks, b, len))
        .collect::<Result<_>>()?;
    let mut total = Moments::zeros(len);
    for p in &parts {
        total.merge(p);
    }
    let n = cfg.trajectories;
    let mut mean = Vec::with_capacity(len);
    let mut sem = Vec::with_capacity(len);
    for k in 0..len {
        let mut m = [0.0; 5];
        let mut s = [0.0; 5];
        for j in 0..5 {
            (m[j], s[j]) = mean_sem(total.sum[k][j], total.sumsq[k][j], n);
        }
        mean.push(Observables::from_array(m));
        sem.push(Observables::from_array(s));
    }
    Ok(EnsembleResult {
        steps: (1..=len).map(|k| k * cfg.record_every).collect(),
        mean,
        sem,
        window: cfg
            .window
            .map(|_| mean_sem(total.window.0, total.window.1, n)),
        meta: EnsembleMeta {
            code_version: CODE_VERSION,
            rng_stream: rng::STREAM_VERSION,
            config: *cfg,
        },
    })
}

/// Runs the ensemble on a dedicated pool of `workers` threads.
pub fn run_ensemble_with_workers(cfg: &EnsembleConfig, workers: usize) -> Result<EnsembleResult> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Io(e.to_string()))?;
    pool.install(|| run_ensemble(cfg))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::feedback::InitialState;
    use crate::qmath::CatParams;

    fn base(alpha2: f64, eta: f64, steps: usize) -> FeedbackConfig {
        FeedbackConfig::new(CatParams::new(alpha2, eta).unwrap(), steps, 11)
    }

    #[test]
    fn projective_measurement_settles_in_one_step() {
        let cfg = base(4.0, 1.0, 20);
        let ks = build_kraus(cfg.cat).unwrap();
        let mut r = rng::stream(1, 0);
        let out = run_trajectory(
            &cfg,
            &ks,
            &TrajectoryOptions::every_step(false),
            false,
            &mut r,
        )
        .unwrap();
        assert_eq!(out.series.len(), 20);
        assert!(out
            .series
            .iter()
            .all(|o| (o.fid_closest - 1.0).abs() < 1e-12));
    }

    #[test]
    fn single_trajectory_ensemble_matches_trajectory() {
        let mut cfg = EnsembleConfig::new(base(2.0, 0.75, 30), 1, true);
        cfg.record_every = 3;
        let res = run_ensemble(&cfg).unwrap();
        let ks = build_kraus(cfg.base.cat).unwrap();
        let mut r = rng::stream(cfg.base.seed, 0);
        let t = run_trajectory(&cfg.base, &ks, &cfg.options(), false, &mut r).unwrap();
        assert_eq!(res.mean, t.series);
        assert!(res.sem.iter().all(|o| o.to_array() == [0.0; 5]));
        assert_eq!(res.steps, (1..=10).map(|k| 3 * k).collect::<Vec<_>>());
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let cfg = EnsembleConfig::new(base(2.0, 0.75, 40), 37, true);
        let a = run_ensemble_with_workers(&cfg, 1).unwrap();
        let b = run_ensemble_with_workers(&cfg, 4).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn window_average() {
        let mut cfg = EnsembleConfig::new(base(4.0, 1.0, 10), 3, true);
        cfg.base.initial_state = InitialState::BellEPlus;
        cfg.window = Some((3, 6));
        let res = run_ensemble(&cfg).unwrap();
        let (m, s) = res.window.unwrap();
        assert!((m - 1.0).abs() < 1e-12 && s < 1e-12);
        cfg.window = Some((20, 30));
        assert!(run_ensemble(&cfg).is_err());
    }

    #[test]
    fn event_log_rows() {
        let cfg = base(2.0, 0.75, 12);
        let ks = build_kraus(cfg.cat).unwrap();
        let mut r = rng::stream(5, 0);
        let out = run_trajectory(
            &cfg,
            &ks,
            &TrajectoryOptions::every_step(true),
            true,
            &mut r,
        )
        .unwrap();
        assert_eq!(out.events.len(), 12);
        assert_eq!(out.events[11].step, 12);
        assert!((out.events[11].fid_be_plus - out.series[11].fid_be_plus).abs() == 0.0);
    }

    #[test]
    fn sem_formula() {
        let (m, s) = mean_sem(6.0, 14.0, 3); // samples 1, 2, 3
        assert_eq!(m, 2.0);
        assert!((s - (1.0f64 / 3.0).sqrt()).abs() < 1e-15);
    }
}
