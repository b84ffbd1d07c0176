//! Experiment presets. Each one yields a single [`Table`]; the column layout of every
//! preset is documented in `docs/presets.md`.

use std::fmt;
use std::str::FromStr;

use crate::analytics::{optimize_alpha, rates};
use crate::error::{Error, Result};
use crate::feedback::{FeedbackConfig, InitialState};
use crate::qmath::{CatParams, DecayParams};
use crate::rng;

use super::{
    analytic_row, fmt_f64, run_ensemble, sweep_table, EnsembleConfig, Table, ANALYTIC_HEADER,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    Fig2a,
    Fig2b,
    Fig3,
    ThyVsSim,
    Fbfid,
}

impl Preset {
    pub const ALL: [Preset; 5] = [
        Preset::Fig2a,
        Preset::Fig2b,
        Preset::Fig3,
        Preset::ThyVsSim,
        Preset::Fbfid,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Fig2a => "fig2a",
            Preset::Fig2b => "fig2b",
            Preset::Fig3 => "fig3",
            Preset::ThyVsSim => "thyvssim",
            Preset::Fbfid => "fbfid",
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::UnknownPreset(s.to_owned()))
    }
}

/// Probe sizes for the fig2 sweeps, picked to span weak to strong probes.
pub const FIG2_ALPHA2: [f64; 4] = [0.5, 1.0, 2.0, 4.0];
pub const FIG2_ETA: f64 = 0.75;
pub const FIG2A_STEPS: usize = 600;
pub const FIG2B_STEPS: usize = 1000;
pub const FIG3_ALPHA2: [f64; 6] = [0.5, 1.0, 1.63, 2.0, 3.273, 4.0];
pub const THYVSSIM_POINT: (f64, f64) = (2.0, 0.75);
pub const THYVSSIM_STEPS: usize = 600;
pub const FBFID_ETA: [f64; 4] = [0.75, 0.8, 0.85, 0.9];
pub const FBFID_T1: [f64; 3] = [300.0, 1000.0, 3000.0];
pub const DEFAULT_TRAJECTORIES: usize = 1000;

/// `η = 0.55, 0.56, …, 0.99`, built from integers so 0.70 and 0.85 are hit exactly.
pub fn fig3_etas() -> Vec<f64> {
    (55..=99).map(|k| k as f64 / 100.0).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PresetOptions {
    pub trajectories: usize,
    pub seed: u64,
    /// Overrides the preset's step count (for fbfid, the `T₁/t_iter` multiple still applies).
    pub steps: Option<usize>,
    pub workers: Option<usize>,
}

impl Default for PresetOptions {
    fn default() -> Self {
        Self {
            trajectories: DEFAULT_TRAJECTORIES,
            seed: 0,
            steps: None,
            workers: None,
        }
    }
}

fn run(cfg: &EnsembleConfig, opts: &PresetOptions) -> Result<super::EnsembleResult> {
    match opts.workers {
        Some(w) => super::run_ensemble_with_workers(cfg, w),
        None => run_ensemble(cfg),
    }
}

pub fn run_preset(p: Preset, opts: &PresetOptions) -> Result<Table> {
    match p {
        Preset::Fig2a => fig2(false, opts.steps.unwrap_or(FIG2A_STEPS), opts),
        Preset::Fig2b => fig2(true, opts.steps.unwrap_or(FIG2B_STEPS), opts),
        Preset::Fig3 => fig3(&fig3_etas(), &FIG3_ALPHA2),
        Preset::ThyVsSim => thyvssim(opts.steps.unwrap_or(THYVSSIM_STEPS), opts),
        Preset::Fbfid => {
            let cells: Vec<(f64, f64)> = FBFID_ETA
                .iter()
                .flat_map(|&e| FBFID_T1.iter().map(move |&t| (e, t)))
                .collect();
            fbfid(&cells, opts)
        }
    }
}

/// α² sweep at `η = 0.75`; sweep entry `k` uses master seed `mix(seed, k)`.
pub fn fig2(feedback: bool, steps: usize, opts: &PresetOptions) -> Result<Table> {
    let mut parts = Vec::with_capacity(FIG2_ALPHA2.len());
    for (k, &a2) in FIG2_ALPHA2.iter().enumerate() {
        let base = FeedbackConfig::new(
            CatParams::new(a2, FIG2_ETA)?,
            steps,
            rng::mix(opts.seed, k as u64),
        );
        let cfg = EnsembleConfig::new(base, opts.trajectories, feedback);
        parts.push((a2, run(&cfg, opts)?));
    }
    Ok(sweep_table(&parts))
}

/// Analytic grid, `η` outer and `α²` inner. Only `1/2 < η < 1` is meaningful here.
pub fn fig3(etas: &[f64], alpha2s: &[f64]) -> Result<Table> {
    let mut t = Table::new(&ANALYTIC_HEADER);
    for &eta in etas {
        for &a2 in alpha2s {
            t.push(analytic_row(CatParams::new(a2, eta)?, None)?);
        }
    }
    Ok(t)
}

pub const THYVSSIM_HEADER: [&str; 5] = [
    "step",
    "sim_fid_closest",
    "analytic_parity",
    "analytic_coherence",
    "analytic_product",
];

/// Rate-model curves at time `t`: parity population `1 − e^{−r_p t}/2`, in-manifold
/// phase population `(1 + e^{−r_d t})/2`, and their product.
pub fn thyvssim_curves(cat: CatParams, t: f64) -> Result<(f64, f64, f64)> {
    let r = rates(cat)?;
    let parity = 1.0 - 0.5 * (-r.r_parity * t).exp();
    let coherence = 0.5 * (1.0 + (-r.r_dephasing * t).exp());
    Ok((parity, coherence, parity * coherence))
}

pub fn thyvssim(steps: usize, opts: &PresetOptions) -> Result<Table> {
    let cat = CatParams::new(THYVSSIM_POINT.0, THYVSSIM_POINT.1)?;
    let cfg = EnsembleConfig::new(
        FeedbackConfig::new(cat, steps, opts.seed),
        opts.trajectories,
        false,
    );
    let res = run(&cfg, opts)?;
    let mut t = Table::new(&THYVSSIM_HEADER);
    for (k, &s) in res.steps.iter().enumerate() {
        let (p, c, prod) = thyvssim_curves(cat, s as f64)?;
        t.push(vec![
            s.to_string(),
            fmt_f64(res.mean[k].fid_closest),
            fmt_f64(p),
            fmt_f64(c),
            fmt_f64(prod),
        ]);
    }
    Ok(t)
}

pub const FBFID_HEADER: [&str; 6] = [
    "eta",
    "t1_ratio",
    "alpha2_opt",
    "p_predicted",
    "fid_window_mean",
    "fid_window_sem",
];

/// Ensemble for one fbfid cell: feedback with decay, optimized α, start `B₊ᵉ`, run for
/// `6·T₁/t_iter` steps and averaged over `[3, 6]·T₁/t_iter`.
pub fn fbfid_config(
    eta: f64,
    t1_ratio: f64,
    trajectories: usize,
    seed: u64,
) -> Result<(EnsembleConfig, f64)> {
    let decay = DecayParams::new(t1_ratio)?;
    let opt = optimize_alpha(eta, decay)?;
    let lo = (3.0 * t1_ratio).round() as usize;
    let hi = (6.0 * t1_ratio).round() as usize;
    let mut base = FeedbackConfig::new(CatParams::new(opt.alpha2_opt, eta)?, hi, seed);
    base.decay = Some(decay);
    base.initial_state = InitialState::BellEPlus;
    let mut cfg = EnsembleConfig::new(base, trajectories, true);
    cfg.record_every = hi;
    cfg.window = Some((lo.max(1), hi));
    Ok((cfg, opt.p_opt))
}

pub fn fbfid(cells: &[(f64, f64)], opts: &PresetOptions) -> Result<Table> {
    let mut t = Table::new(&FBFID_HEADER);
    for (k, &(eta, t1)) in cells.iter().enumerate() {
        let (cfg, p_pred) =
            fbfid_config(eta, t1, opts.trajectories, rng::mix(opts.seed, k as u64))?;
        let res = run(&cfg, opts)?;
        let (m, s) = res.window.expect("fbfid configs carry a window");
        t.push_f64(&[eta, t1, cfg.base.cat.alpha2, p_pred, m, s]);
    }
    Ok(t)
}
