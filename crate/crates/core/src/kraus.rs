//! The lossy cat-probe parity measurement as a four-operator Kraus set.
//!
//! The probe detector reads the first sign, a virtual detector on the loss mode the
//! second. Both sets of operators are diagonal in the computational basis, with the
//! `(+,+)` and `(−,−)` operators supported on the even manifold and the mixed ones on the
//! odd manifold.

use nalgebra::{Matrix4, Vector4};
use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::qmath::{c, norm_const, CatParams, Mat4, Sign, TwoQubitDensity};

/// Detected photon-number parity of the probe.
pub type Outcome = Sign;

/// Probabilities below this are treated as structural zeros.
pub const ZERO_PROBABILITY: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq)]
pub struct KrausSet {
    pub m_pp: Matrix4<f64>,
    pub m_pm: Matrix4<f64>,
    pub m_mp: Matrix4<f64>,
    pub m_mm: Matrix4<f64>,
    pub params: CatParams,
}

/// Diagonals of the four operators, as emitted by the validation command.
#[derive(Debug, Clone, Serialize)]
pub struct KrausDiagonals {
    pub alpha2: f64,
    pub eta: f64,
    pub m_pp: [f64; 4],
    pub m_pm: [f64; 4],
    pub m_mp: [f64; 4],
    pub m_mm: [f64; 4],
}

impl KrausSet {
    /// Assembles a set from the four diagonals (basis order 00, 01, 10, 11).
    pub fn from_diagonals(params: CatParams, d: [[f64; 4]; 4]) -> Self {
        let diag = |v: [f64; 4]| Matrix4::from_diagonal(&Vector4::from(v));
        Self {
            m_pp: diag(d[0]),
            m_pm: diag(d[1]),
            m_mp: diag(d[2]),
            m_mm: diag(d[3]),
            params,
        }
    }

    pub fn get(&self, probe: Sign, env: Sign) -> &Matrix4<f64> {
        match (probe, env) {
            (Sign::Plus, Sign::Plus) => &self.m_pp,
            (Sign::Plus, Sign::Minus) => &self.m_pm,
            (Sign::Minus, Sign::Plus) => &self.m_mp,
            (Sign::Minus, Sign::Minus) => &self.m_mm,
        }
    }

    pub fn diag(&self, probe: Sign, env: Sign) -> [f64; 4] {
        let m = self.get(probe, env);
        [m[(0, 0)], m[(1, 1)], m[(2, 2)], m[(3, 3)]]
    }

    pub fn all(&self) -> [&Matrix4<f64>; 4] {
        [&self.m_pp, &self.m_pm, &self.m_mp, &self.m_mm]
    }

    pub fn diagonals(&self) -> KrausDiagonals {
        KrausDiagonals {
            alpha2: self.params.alpha2,
            eta: self.params.eta,
            m_pp: self.diag(Sign::Plus, Sign::Plus),
            m_pm: self.diag(Sign::Plus, Sign::Minus),
            m_mp: self.diag(Sign::Minus, Sign::Plus),
            m_mm: self.diag(Sign::Minus, Sign::Minus),
        }
    }

    /// `max |Σ M†M − I|`.
    pub fn completeness_error(&self) -> f64 {
        let sum: Matrix4<f64> = self.all().iter().map(|m| m.transpose() * *m).sum();
        (sum - Matrix4::identity()).abs().max()
    }

    /// Largest elementwise difference against another set.
    pub fn max_deviation(&self, other: &KrausSet) -> f64 {
        self.all()
            .iter()
            .zip(other.all())
            .map(|(a, b)| (*a - b).abs().max())
            .fold(0.0, f64::max)
    }

    /// Per-basis-state weight of outcome `o`: `Σ_env M_{o,env}(k)²`.
    pub fn outcome_weights(&self, o: Outcome) -> [f64; 4] {
        let a = self.diag(o, Sign::Plus);
        let b = self.diag(o, Sign::Minus);
        [0, 1, 2, 3].map(|k| a[k] * a[k] + b[k] * b[k])
    }
}

/// Closed-form Kraus operators of the lossy cat-probe parity measurement.
pub fn build_kraus(params: CatParams) -> Result<KrausSet> {
    let params = CatParams::new(params.alpha2, params.eta)?;
    if params.alpha2 == 0.0 {
        return Err(Error::DegenerateProbe);
    }
    let np_a = norm_const(params.alpha2, Sign::Plus)?;
    let nm_a = norm_const(params.alpha2, Sign::Minus)?;
    let np_t = norm_const(params.transmitted2(), Sign::Plus)?;
    let nm_t = norm_const(params.transmitted2(), Sign::Minus)?;
    // N⁻ of the lost amplitude is exactly 0 at η = 1 (expm1(0) = 0)
    let np_l = norm_const(params.lost2(), Sign::Plus)?;
    let nm_l = norm_const(params.lost2(), Sign::Minus)?;

    let even_even = np_t / np_a;
    let odd_odd = nm_t / nm_a;
    let even_odd = np_t / nm_a;
    let odd_even = nm_t / np_a;

    // basis order 00, 01, 10, 11
    let pp = [0.5 * np_l * even_even, 0.0, 0.0, 0.5 * np_l * odd_odd];
    let pm = [0.0, 0.5 * nm_l * odd_even, 0.5 * nm_l * even_odd, 0.0];
    let mp = [0.0, 0.5 * np_l * even_even, 0.5 * np_l * odd_odd, 0.0];
    let mm = [0.5 * nm_l * odd_even, 0.0, 0.0, 0.5 * nm_l * even_odd];
    Ok(KrausSet::from_diagonals(params, [pp, pm, mp, mm]))
}

/// `(p₊, p₋)` for the probe detection.
pub fn outcome_probs(rho: &TwoQubitDensity, ks: &KrausSet) -> (f64, f64) {
    let prob = |o| {
        ks.outcome_weights(o)
            .iter()
            .enumerate()
            .map(|(k, w)| w * rho.population(k))
            .sum::<f64>()
    };
    (prob(Sign::Plus), prob(Sign::Minus))
}

/// Unnormalized `Σ_env M ρ M†` for outcome `o`.
fn partial_map(rho: &TwoQubitDensity, ks: &KrausSet, o: Outcome) -> Mat4 {
    let a = ks.diag(o, Sign::Plus);
    let b = ks.diag(o, Sign::Minus);
    let m = rho.matrix();
    Mat4::from_fn(|i, j| m[(i, j)] * c(a[i] * a[j] + b[i] * b[j]))
}

/// Normalized post-measurement state for outcome `o`.
pub fn apply_outcome(rho: &TwoQubitDensity, ks: &KrausSet, o: Outcome) -> Result<TwoQubitDensity> {
    let m = partial_map(rho, ks, o);
    let p = m.trace().re;
    if !(p > ZERO_PROBABILITY) {
        return Err(Error::ImpossibleOutcome {
            outcome: o.as_str(),
            probability: p,
        });
    }
    Ok(TwoQubitDensity::from_matrix_unchecked(m / c(p)))
}

/// Outcome-averaged channel `Σ_all M ρ M†`.
pub fn unconditioned_channel(rho: &TwoQubitDensity, ks: &KrausSet) -> TwoQubitDensity {
    let m = partial_map(rho, ks, Sign::Plus) + partial_map(rho, ks, Sign::Minus);
    TwoQubitDensity::from_matrix_unchecked(m)
}

/// Measurement driven by an explicit uniform draw `u ∈ [0, 1)`: `+` iff `u < p₊`.
pub fn measure_with_uniform(
    rho: &TwoQubitDensity,
    ks: &KrausSet,
    u: f64,
) -> Result<(Outcome, TwoQubitDensity)> {
    let (p_plus, _) = outcome_probs(rho, ks);
    let o = if u < p_plus { Sign::Plus } else { Sign::Minus };
    Ok((o, apply_outcome(rho, ks, o)?))
}

/// Stochastic back-action: one uniform draw from `rng`, then [`measure_with_uniform`].
pub fn sample_measurement<R: Rng + ?Sized>(
    rho: &TwoQubitDensity,
    ks: &KrausSet,
    rng: &mut R,
) -> Result<(Outcome, TwoQubitDensity)> {
    let u: f64 = rng.random();
    measure_with_uniform(rho, ks, u)
}
