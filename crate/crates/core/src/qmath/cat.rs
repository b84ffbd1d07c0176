use crate::error::{Error, Result};

/// Photon-number parity sign; also the label of a probe detection outcome.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub const BOTH: [Sign; 2] = [Sign::Plus, Sign::Minus];

    pub fn as_str(self) -> &'static str {
        match self {
            Sign::Plus => "+",
            Sign::Minus => "-",
        }
    }

    pub fn flip(self) -> Sign {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }

    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }
}

/// Cat normalization constant `N_β^± = sqrt(2 ± 2 exp(-2|β|²))`.
///
/// The odd constant is evaluated through `expm1` so small amplitudes keep full precision.
pub fn norm_const(beta2: f64, sign: Sign) -> Result<f64> {
    if !(beta2 >= 0.0) {
        return Err(Error::Domain(format!("beta^2 must be >= 0, got {beta2}")));
    }
    Ok(match sign {
        Sign::Plus => (2.0 + 2.0 * (-2.0 * beta2).exp()).sqrt(),
        Sign::Minus => (-2.0 * (-2.0 * beta2).exp_m1()).sqrt(),
    })
}

/// Probe parameters: mean photon number `|α|²` (α real, nonnegative) and channel transmittance η.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct CatParams {
    pub alpha2: f64,
    pub eta: f64,
}

impl CatParams {
    pub fn new(alpha2: f64, eta: f64) -> Result<Self> {
        if !(alpha2 >= 0.0) || !alpha2.is_finite() {
            return Err(Error::Domain(format!(
                "alpha^2 must be finite and >= 0, got {alpha2}"
            )));
        }
        if !(0.0..=1.0).contains(&eta) {
            return Err(Error::Domain(format!("eta must lie in [0, 1], got {eta}")));
        }
        Ok(Self { alpha2, eta })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha2.sqrt()
    }

    /// |β|² of the transmitted probe amplitude √η α.
    pub fn transmitted2(&self) -> f64 {
        self.eta * self.alpha2
    }

    /// |β|² of the amplitude √(1−η) α leaked into the environment.
    pub fn lost2(&self) -> f64 {
        (1.0 - self.eta) * self.alpha2
    }
}

/// Qubit relaxation per measurement iteration.
///
/// `t1_over_titer` is the lifetime T₁ in units of one measurement iteration; the
/// per-iteration damping probability is `gamma = 1 − exp(−1/t1_over_titer)`.
/// An infinite lifetime gives `gamma = 0`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct DecayParams {
    pub t1_over_titer: f64,
    pub gamma: f64,
}

impl DecayParams {
    pub fn new(t1_over_titer: f64) -> Result<Self> {
        if !(t1_over_titer > 0.0) {
            return Err(Error::Domain(format!(
                "T1/t_iter must be > 0, got {t1_over_titer}"
            )));
        }
        Ok(Self {
            t1_over_titer,
            gamma: -(-1.0 / t1_over_titer).exp_m1(),
        })
    }

    /// Rate added to `r_dephasing / 2` in the Bell-population model.
    pub fn rate(&self) -> f64 {
        1.0 / self.t1_over_titer
    }
}
