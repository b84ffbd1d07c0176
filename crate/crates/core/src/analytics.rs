//! Closed-form predictors for the lossy parity measurement and its feedback loop.
//!
//! Conventions: `n_meas` is a number of measurement iterations, while relaxation enters
//! only through the ratio `T₁ / t_iter` carried by [`DecayParams`].

use nalgebra::{Matrix4, Vector4};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::kraus::{apply_outcome, outcome_probs, KrausSet, ZERO_PROBABILITY};
use crate::qmath::{CatParams, DecayParams, Sign, TwoQubitDensity};

/// Per-measurement log-contraction rates of the parity Lyapunov function and of the
/// within-parity coherence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RatePair {
    pub r_parity: f64,
    pub r_dephasing: f64,
}

/// `ln(1 − e^{−x})` for `x ≥ 0`, accurate at both ends; `−∞` at `x = 0`.
fn ln_one_minus_exp(x: f64) -> f64 {
    if x > std::f64::consts::LN_2 {
        (-(-x).exp()).ln_1p()
    } else {
        (-(-x).exp_m1()).ln()
    }
}

pub fn rates(params: CatParams) -> Result<RatePair> {
    let params = CatParams::new(params.alpha2, params.eta)?;
    if params.alpha2 == 0.0 {
        return Err(Error::DegenerateProbe);
    }
    let full = ln_one_minus_exp(4.0 * params.alpha2);
    Ok(RatePair {
        r_parity: 0.5 * (full - ln_one_minus_exp(4.0 * params.lost2())),
        r_dephasing: 0.5 * (full - ln_one_minus_exp(4.0 * params.transmitted2())),
    })
}

/// Expected one-step factor `E[V(ρ')] / V(ρ)`, equal to `e^{−r_parity}`.
pub fn lyapunov_factor(params: CatParams) -> Result<f64> {
    Ok((-rates(params)?.r_parity).exp())
}

/// Expected one-step factor `E[C(ρ')] / C(ρ)`, equal to `e^{−r_dephasing}`.
pub fn coherence_factor(params: CatParams) -> Result<f64> {
    Ok((-rates(params)?.r_dephasing).exp())
}

/// `√(ρ₀₀ρ₁₀) + √(ρ₁₁ρ₀₁)`: vanishes once each B-conditioned branch has a definite parity.
pub fn lyapunov_v(rho: &TwoQubitDensity) -> f64 {
    let p = |k| rho.population(k).max(0.0);
    (p(0) * p(2)).sqrt() + (p(3) * p(1)).sqrt()
}

/// `|ρ₀₀,₁₁| + |ρ₀₁,₁₀|`.
pub fn coherence_c(rho: &TwoQubitDensity) -> f64 {
    rho.entry(0, 3).norm() + rho.entry(1, 2).norm()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Diagnostic {
    Lyapunov,
    Coherence,
}

impl Diagnostic {
    pub fn eval(self, rho: &TwoQubitDensity) -> f64 {
        match self {
            Diagnostic::Lyapunov => lyapunov_v(rho),
            Diagnostic::Coherence => coherence_c(rho),
        }
    }
}

/// `(f(ρ), Σ_o P(o) f(K_o(ρ)))` by explicit averaging over the two outcomes.
pub fn expected_contraction(
    rho: &TwoQubitDensity,
    ks: &KrausSet,
    which: Diagnostic,
) -> Result<(f64, f64)> {
    let (p_plus, p_minus) = outcome_probs(rho, ks);
    let mut after = 0.0;
    for (o, p) in [(Sign::Plus, p_plus), (Sign::Minus, p_minus)] {
        if p > ZERO_PROBABILITY {
            after += p * which.eval(&apply_outcome(rho, ks, o)?);
        }
    }
    Ok((which.eval(rho), after))
}

/// Principal branch of the Lambert W function on `[0, ∞)`, by Halley iteration.
pub fn lambert_w0(x: f64) -> Result<f64> {
    if !(x >= 0.0) || x.is_infinite() {
        return Err(Error::Domain(format!(
            "lambert_w0 needs finite x >= 0, got {x}"
        )));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    let mut w = if x < 3.0 {
        x.ln_1p() * 0.8
    } else {
        let l1 = x.ln();
        let l2 = l1.ln();
        l1 - l2 + l2 / l1
    };
    for _ in 0..64 {
        let ew = w.exp();
        let f = w * ew - x;
        let wp1 = w + 1.0;
        let step = f / (ew * wp1 - (w + 2.0) * f / (2.0 * wp1));
        w -= step;
        if step.abs() <= 1e-15 * (1.0 + w.abs()) {
            break;
        }
    }
    Ok(w)
}

/// Measurement-count estimate and the parity fidelity reached after it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeasEstimate {
    pub n_meas: f64,
    pub f_meas: f64,
    pub rates: RatePair,
}

/// Root of `e^{−r_p T} + e^{−r_d T} = 1` for the rates of `params`.
pub fn solve_nmeas(params: CatParams) -> Result<MeasEstimate> {
    if !(params.eta > 0.5 && params.eta < 1.0) {
        return Err(Error::NoSolution(format!(
            "needs 1/2 < eta < 1 (dephasing at least as fast as measurement otherwise), got {}",
            params.eta
        )));
    }
    solve_nmeas_from_rates(rates(params)?)
}

/// Same root for explicitly supplied rates; accepts the symmetric case `r_p = r_d`.
pub fn solve_nmeas_from_rates(r: RatePair) -> Result<MeasEstimate> {
    let (rp, rd) = (r.r_parity, r.r_dephasing);
    if !(rd > 0.0 && rp >= rd && rp.is_finite()) {
        return Err(Error::NoSolution(format!(
            "needs finite r_parity >= r_dephasing > 0, got ({rp}, {rd})"
        )));
    }
    let ln2 = std::f64::consts::LN_2;
    let g = |t: f64| (-rp * t).exp() + (-rd * t).exp_m1();
    let n_meas = if rp == rd {
        ln2 / rp
    } else {
        let (mut lo, mut hi) = (ln2 / rp, ln2 / rd);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if g(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-13 * hi {
                break;
            }
        }
        let mut t = 0.5 * (lo + hi);
        for _ in 0..3 {
            let dg = -rp * (-rp * t).exp() - rd * (-rd * t).exp();
            let next = t - g(t) / dg;
            if next.is_finite() && next > 0.0 {
                t = next;
            }
        }
        t
    };
    let residual = g(n_meas);
    if residual.abs() > 1e-10 {
        return Err(Error::Invariant(format!("n_meas residual {residual:e}")));
    }
    Ok(MeasEstimate {
        n_meas,
        f_meas: 1.0 - 0.5 * (-rp * n_meas).exp(),
        rates: r,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LambertEstimate {
    pub n_meas: f64,
    /// False when `e^{4(2η−1)α²} < 100`, where the asymptotic estimate is unreliable.
    pub valid: bool,
}

/// `W₀(r_p / r_d) / r_p`, the large-separation approximation of [`solve_nmeas`].
pub fn nmeas_lambert(params: CatParams) -> Result<LambertEstimate> {
    if !(params.eta > 0.5 && params.eta < 1.0) {
        return Err(Error::Domain(format!(
            "needs 1/2 < eta < 1, got {}",
            params.eta
        )));
    }
    let r = rates(params)?;
    Ok(LambertEstimate {
        n_meas: lambert_w0(r.r_parity / r.r_dephasing)? / r.r_parity,
        valid: 4.0 * (2.0 * params.eta - 1.0) * params.alpha2 >= 100f64.ln(),
    })
}

/// Effective within-parity mixing rate `r_d/2 (+ t_iter/T₁)`.
fn mixing_rate(r: RatePair, decay: Option<DecayParams>) -> f64 {
    0.5 * r.r_dephasing + decay.map_or(0.0, |d| d.rate())
}

/// Generator `G` of the Bell-population model `ṗ = G p`, populations ordered
/// `(B₊ᵉ, B₋ᵉ, B₊ᵒ, B₋ᵒ)`. Columns sum to zero.
pub fn rate_generator(r: RatePair, decay: Option<DecayParams>) -> Matrix4<f64> {
    let rp = r.r_parity;
    let d = mixing_rate(r, decay);
    let h = 0.5 * (rp + d);
    #[rustfmt::skip]
    let g = Matrix4::new(
        -d,      h,             h,             0.0,
        d / 2.0, -rp / 2.0 - d, 0.0,           h,
        d / 2.0, 0.0,           -rp / 2.0 - d, h,
        0.0,     d / 2.0,       d / 2.0,       -rp - d,
    );
    g
}

pub fn rate_ode(p: &[f64; 4], r: RatePair, decay: Option<DecayParams>) -> [f64; 4] {
    let dp = rate_generator(r, decay) * Vector4::from_column_slice(p);
    [dp[0], dp[1], dp[2], dp[3]]
}

/// Classical RK4 with fixed step `dt`; returns `steps + 1` states including `p0`.
pub fn integrate_rate_ode(
    p0: [f64; 4],
    r: RatePair,
    decay: Option<DecayParams>,
    dt: f64,
    steps: usize,
) -> Vec<[f64; 4]> {
    let g = rate_generator(r, decay);
    let f = |p: &Vector4<f64>| g * p;
    let mut p = Vector4::from_column_slice(&p0);
    let mut out = Vec::with_capacity(steps + 1);
    out.push(p0);
    for _ in 0..steps {
        let k1 = f(&p);
        let k2 = f(&(p + k1 * (dt / 2.0)));
        let k3 = f(&(p + k2 * (dt / 2.0)));
        let k4 = f(&(p + k3 * dt));
        p += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0);
        out.push([p[0], p[1], p[2], p[3]]);
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SteadyState {
    /// `1 + r_p / (r_d/2 + t_iter/T₁)`; infinite when nothing mixes the populations.
    pub delta: f64,
    pub p_target: f64,
}

impl SteadyState {
    /// Full population vector `(δ², δ, δ, 1) / (1+δ)²`.
    pub fn populations(&self) -> [f64; 4] {
        if self.delta.is_infinite() {
            return [1.0, 0.0, 0.0, 0.0];
        }
        let d = self.delta;
        let n = (1.0 + d) * (1.0 + d);
        [d * d / n, d / n, d / n, 1.0 / n]
    }
}

pub fn steady_state(r: RatePair, decay: Option<DecayParams>) -> SteadyState {
    let d = mixing_rate(r, decay);
    if d == 0.0 || r.r_parity.is_infinite() {
        return SteadyState {
            delta: f64::INFINITY,
            p_target: 1.0,
        };
    }
    let delta = 1.0 + r.r_parity / d;
    let ratio = delta / (1.0 + delta);
    SteadyState {
        delta,
        p_target: ratio * ratio,
    }
}

pub const ALPHA2_WINDOW: (f64, f64) = (0.05, 30.0);

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AlphaOptimum {
    pub alpha2_opt: f64,
    pub objective: f64,
    pub delta: f64,
    pub p_opt: f64,
    /// Set when the maximizer sits on the edge of the search window.
    pub at_boundary: bool,
}

/// `r_p / (r_d/2 + t_iter/T₁)` as a function of `α²`.
pub fn alpha_objective(alpha2: f64, eta: f64, decay: DecayParams) -> Result<f64> {
    let r = rates(CatParams::new(alpha2, eta)?)?;
    Ok(r.r_parity / mixing_rate(r, Some(decay)))
}

/// Maximizes the steady-state fidelity over `α² ∈ [0.05, 30]`: log-grid scan, then
/// golden-section refinement around the best grid point.
pub fn optimize_alpha(eta: f64, decay: DecayParams) -> Result<AlphaOptimum> {
    if !(eta > 0.5 && eta < 1.0) {
        return Err(Error::NoOptimum(format!(
            "objective has no interior maximum for eta = {eta}"
        )));
    }
    let (lo, hi) = (ALPHA2_WINDOW.0.ln(), ALPHA2_WINDOW.1.ln());
    let obj = |x: f64| alpha_objective(x.exp(), eta, decay);
    const GRID: usize = 240;
    let xs: Vec<f64> = (0..=GRID)
        .map(|k| lo + (hi - lo) * k as f64 / GRID as f64)
        .collect();
    let mut best = 0;
    let mut best_val = f64::NEG_INFINITY;
    for (k, &x) in xs.iter().enumerate() {
        let v = obj(x)?;
        if v > best_val {
            best = k;
            best_val = v;
        }
    }
    let (mut a, mut b) = (xs[best.saturating_sub(1)], xs[(best + 1).min(GRID)]);
    let invphi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - invphi * (b - a);
    let mut d = a + invphi * (b - a);
    let (mut fc, mut fd) = (obj(c)?, obj(d)?);
    while b - a > 1e-12 {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - invphi * (b - a);
            fc = obj(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + invphi * (b - a);
            fd = obj(d)?;
        }
    }
    let mut x = 0.5 * (a + b);
    let mut val = obj(x)?;
    // the edge itself may beat the interior refinement
    for edge in [lo, hi] {
        let v = obj(edge)?;
        if v >= val {
            x = edge;
            val = v;
        }
    }
    let at_boundary = (x - lo).abs() < 1e-9 || (x - hi).abs() < 1e-9;
    let alpha2_opt = x.exp();
    let ss = steady_state(rates(CatParams::new(alpha2_opt, eta)?)?, Some(decay));
    Ok(AlphaOptimum {
        alpha2_opt,
        objective: val,
        delta: ss.delta,
        p_opt: ss.p_target,
        at_boundary,
    })
}
