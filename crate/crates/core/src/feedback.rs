//! Parity-feedback stabilization of `B₊ᵉ`.
//!
//! A filter tracks the conditional state from the detection record. Each iteration then
//! fires an X π pulse on qubit A when the filter puts more than half its weight on the
//! odd manifold, followed by unconditional π/2 Y pulses on both qubits. The Y pulses
//! leave `B₊ᵉ` alone and turn the dephased partner `B₋ᵉ` into `B₊ᵒ`, which the parity
//! correction then brings back.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kraus::{apply_outcome, outcome_probs, KrausSet, Outcome, ZERO_PROBABILITY};
use crate::qmath::{
    amplitude_damp, apply_local_gate, BellState, CatParams, DecayParams, LocalGate, Sign,
    TwoQubitDensity,
};

/// Populations of `(B₊ᵉ, B₋ᵉ, B₊ᵒ, B₋ᵒ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BellPopulations {
    p: [f64; 4],
}

impl BellPopulations {
    pub fn new(p: [f64; 4]) -> Result<Self> {
        let sum: f64 = p.iter().sum();
        if p.iter().any(|x| !(*x >= 0.0)) || (sum - 1.0).abs() > 1e-12 {
            return Err(Error::Domain(format!("not a probability vector: {p:?}")));
        }
        Ok(Self { p })
    }

    /// Bell-basis diagonal of `rho`.
    pub fn from_density(rho: &TwoQubitDensity) -> Self {
        Self {
            p: rho.bell_populations().map(|x| x.max(0.0)),
        }
        .renormalized()
    }

    pub fn as_array(&self) -> [f64; 4] {
        self.p
    }

    pub fn get(&self, b: BellState) -> f64 {
        self.p[b.index()]
    }

    pub fn odd_probability(&self) -> f64 {
        self.p[2] + self.p[3]
    }

    fn renormalized(mut self) -> Self {
        let s: f64 = self.p.iter().sum();
        self.p.iter_mut().for_each(|x| *x /= s);
        self
    }

    /// Action of the supported local gates, which permute Bell states up to phase.
    fn gate(self, gate: LocalGate) -> Self {
        let [e_p, e_m, o_p, o_m] = self.p;
        let p = match gate {
            LocalGate::XAPi => [o_p, o_m, e_p, e_m],
            LocalGate::YBothHalfPi | LocalGate::HadamardBoth => [e_p, o_p, e_m, o_m],
            LocalGate::ZAPi => [e_m, e_p, o_m, o_p],
        };
        Self { p }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum FilterMode {
    #[default]
    Full,
    Bell,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FilterState {
    Full(TwoQubitDensity),
    Bell(BellPopulations),
}

impl FilterState {
    /// Filter initialized to the true initial state (its Bell diagonal in bell mode).
    pub fn init(mode: FilterMode, rho: &TwoQubitDensity) -> Self {
        match mode {
            FilterMode::Full => FilterState::Full(*rho),
            FilterMode::Bell => FilterState::Bell(BellPopulations::from_density(rho)),
        }
    }

    pub fn mode(&self) -> FilterMode {
        match self {
            FilterState::Full(_) => FilterMode::Full,
            FilterState::Bell(_) => FilterMode::Bell,
        }
    }

    pub fn odd_probability(&self) -> f64 {
        match self {
            FilterState::Full(rho) => rho.odd_probability(),
            FilterState::Bell(b) => b.odd_probability(),
        }
    }

    pub fn bell_populations(&self) -> [f64; 4] {
        match self {
            FilterState::Full(rho) => rho.bell_populations(),
            FilterState::Bell(b) => b.as_array(),
        }
    }

    pub fn apply_gate(&self, gate: LocalGate) -> Self {
        match self {
            FilterState::Full(rho) => FilterState::Full(apply_local_gate(rho, gate)),
            FilterState::Bell(b) => FilterState::Bell(b.gate(gate)),
        }
    }

    /// Relaxation; in bell mode the damped state is projected back onto its Bell diagonal.
    pub fn damp(&self, gamma: f64) -> Result<Self> {
        Ok(match self {
            FilterState::Full(rho) => FilterState::Full(amplitude_damp(rho, gamma)?),
            FilterState::Bell(b) => {
                let rho = TwoQubitDensity::from_bell_populations(&b.as_array());
                FilterState::Bell(BellPopulations::from_density(&amplitude_damp(&rho, gamma)?))
            }
        })
    }
}

/// Outcome map restricted to Bell-diagonal states.
///
/// A diagonal Kraus operator with entries `(a, b)` on a parity pair sends
/// `p₊ ↦ p₊(a+b)²/4 + p₋(a−b)²/4` and `p₋ ↦ p₊(a−b)²/4 + p₋(a+b)²/4`.
fn bell_outcome_map(pops: &BellPopulations, ks: &KrausSet, o: Outcome) -> Result<BellPopulations> {
    let [e_p, e_m, o_p, o_m] = pops.as_array();
    let mut out = [0.0; 4];
    for env in Sign::BOTH {
        let d = ks.diag(o, env);
        for (pair, (pp, pm), slot) in [((0, 3), (e_p, e_m), 0), ((1, 2), (o_p, o_m), 2)] {
            let (a, b) = (d[pair.0], d[pair.1]);
            let s = (a + b) * (a + b) / 4.0;
            let t = (a - b) * (a - b) / 4.0;
            out[slot] += pp * s + pm * t;
            out[slot + 1] += pp * t + pm * s;
        }
    }
    let total: f64 = out.iter().sum();
    if !(total > ZERO_PROBABILITY) {
        return Err(Error::ImpossibleOutcome {
            outcome: o.as_str(),
            probability: total,
        });
    }
    Ok(BellPopulations {
        p: out.map(|x| x / total),
    })
}

pub fn filter_update(fs: &FilterState, ks: &KrausSet, o: Outcome) -> Result<FilterState> {
    Ok(match fs {
        FilterState::Full(rho) => FilterState::Full(apply_outcome(rho, ks, o)?),
        FilterState::Bell(b) => FilterState::Bell(bell_outcome_map(b, ks, o)?),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decision {
    ApplyPi,
    Skip,
}

/// π pulse iff the odd-manifold estimate is strictly above one half.
pub fn controller_decide(fs: &FilterState) -> Decision {
    if fs.odd_probability() > 0.5 {
        Decision::ApplyPi
    } else {
        Decision::Skip
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Picture {
    #[default]
    Schrodinger,
    Heisenberg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum InitialState {
    #[default]
    PlusXPlusX,
    BellEPlus,
}

impl InitialState {
    pub fn density(self) -> TwoQubitDensity {
        match self {
            InitialState::PlusXPlusX => TwoQubitDensity::plus_x_plus_x(),
            InitialState::BellEPlus => TwoQubitDensity::bell(BellState::EvenPlus),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FeedbackConfig {
    pub cat: CatParams,
    pub decay: Option<DecayParams>,
    pub picture: Picture,
    pub filter_mode: FilterMode,
    pub initial_state: InitialState,
    pub steps: usize,
    pub seed: u64,
}

impl FeedbackConfig {
    pub fn new(cat: CatParams, steps: usize, seed: u64) -> Self {
        Self {
            cat,
            decay: None,
            picture: Picture::default(),
            filter_mode: FilterMode::default(),
            initial_state: InitialState::default(),
            steps,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        CatParams::new(self.cat.alpha2, self.cat.eta)?;
        if self.steps == 0 {
            return Err(Error::Domain("steps must be >= 1".into()));
        }
        Ok(())
    }

    fn gamma(&self) -> f64 {
        self.decay.map_or(0.0, |d| d.gamma)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StepRecord {
    pub outcome: Outcome,
    pub pulse_fired: bool,
}

/// Joint evolution of the simulated state and the filter through one iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoopState {
    pub rho: TwoQubitDensity,
    pub filter: FilterState,
}

impl LoopState {
    pub fn new(cfg: &FeedbackConfig) -> Self {
        let rho = cfg.initial_state.density();
        Self {
            rho,
            filter: FilterState::init(cfg.filter_mode, &rho),
        }
    }

    fn damp(&mut self, gamma: f64) -> Result<()> {
        if gamma > 0.0 {
            self.rho = amplitude_damp(&self.rho, gamma)?;
            self.filter = self.filter.damp(gamma)?;
        }
        Ok(())
    }

    fn gate(&mut self, g: LocalGate) {
        self.rho = apply_local_gate(&self.rho, g);
        self.filter = self.filter.apply_gate(g);
    }

    /// Samples the detection on the true state and feeds the outcome to the filter.
    fn measure<R: Rng + ?Sized>(&mut self, ks: &KrausSet, rng: &mut R) -> Result<Outcome> {
        let u: f64 = rng.random();
        let (p_plus, _) = outcome_probs(&self.rho, ks);
        let o = if u < p_plus { Sign::Plus } else { Sign::Minus };
        self.rho = apply_outcome(&self.rho, ks, o)?;
        self.filter = filter_update(&self.filter, ks, o)?;
        Ok(o)
    }
}

/// One iteration: damp, measure, filter, conditional `X_A π`, then `Y π/2` on both.
pub fn feedback_step<R: Rng + ?Sized>(
    state: &LoopState,
    cfg: &FeedbackConfig,
    ks: &KrausSet,
    rng: &mut R,
) -> Result<(LoopState, StepRecord)> {
    let mut s = *state;
    s.damp(cfg.gamma())?;
    let outcome = s.measure(ks, rng)?;
    let pulse_fired = controller_decide(&s.filter) == Decision::ApplyPi;
    if pulse_fired {
        s.gate(LocalGate::XAPi);
    }
    s.gate(LocalGate::YBothHalfPi);
    Ok((
        s,
        StepRecord {
            outcome,
            pulse_fired,
        },
    ))
}

/// One iteration in the rotating frame: no π/2 pulses, the measured parity alternates
/// between `σz⊗σz` (even `iteration`) and `σx⊗σx` (odd `iteration`), and the correction
/// is `X_A π` or `Z_A π` accordingly.
pub fn heisenberg_step<R: Rng + ?Sized>(
    state: &LoopState,
    cfg: &FeedbackConfig,
    ks: &KrausSet,
    iteration: usize,
    rng: &mut R,
) -> Result<(LoopState, StepRecord)> {
    let mut s = *state;
    s.damp(cfg.gamma())?;
    let x_basis = iteration % 2 == 1;
    if x_basis {
        s.gate(LocalGate::HadamardBoth);
    }
    let outcome = s.measure(ks, rng)?;
    // odd probability in the current measurement frame
    let pulse_fired = controller_decide(&s.filter) == Decision::ApplyPi;
    if x_basis {
        s.gate(LocalGate::HadamardBoth);
    }
    if pulse_fired {
        s.gate(if x_basis {
            LocalGate::ZAPi
        } else {
            LocalGate::XAPi
        });
    }
    Ok((
        s,
        StepRecord {
            outcome,
            pulse_fired,
        },
    ))
}

/// Dispatches on the configured picture; `iteration` counts from zero.
pub fn step<R: Rng + ?Sized>(
    state: &LoopState,
    cfg: &FeedbackConfig,
    ks: &KrausSet,
    iteration: usize,
    rng: &mut R,
) -> Result<(LoopState, StepRecord)> {
    match cfg.picture {
        Picture::Schrodinger => feedback_step(state, cfg, ks, rng),
        Picture::Heisenberg => heisenberg_step(state, cfg, ks, iteration, rng),
    }
}
