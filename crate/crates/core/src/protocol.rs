//! Abstract parity-measurement models: the ξ-parameterized measurement, channels whose
//! errors are roots of the identity, the phase-flip counterexample, and parity
//! measurement through a shared Bell pair.

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::error::{Error, Result};
use crate::kraus::{Outcome, ZERO_PROBABILITY};
use crate::qmath::{
    concurrence, q_minus, q_plus, BellState, Ket4, Mat4, Sign, TwoQubitDensity, C64,
};

/// Symmetric parity measurement that reports the right parity with probability `ξ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct XiModel {
    xi: f64,
}

impl XiModel {
    /// Accepts `ξ ∈ [0, 1]`; values below ½ describe a meter with swapped labels.
    pub fn new(xi: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&xi) {
            return Err(Error::Domain(format!("xi must lie in [0, 1], got {xi}")));
        }
        Ok(Self { xi })
    }

    pub fn xi(&self) -> f64 {
        self.xi
    }

    pub fn relabeled(&self) -> bool {
        self.xi < 0.5
    }
}

/// `(p_o, K̃_o(ρ))` with `K̃_+ ∝ ξ Q₊ρQ₊ + (1−ξ) Q₋ρQ₋` and `K̃_−` its mirror.
pub fn xi_measurement(
    rho: &TwoQubitDensity,
    xm: XiModel,
    o: Outcome,
) -> Result<(f64, TwoQubitDensity)> {
    let (qp, qm) = (q_plus(), q_minus());
    let m = rho.matrix();
    let even = qp * m * qp;
    let odd = qm * m * qm;
    let (w_even, w_odd) = match o {
        Sign::Plus => (xm.xi, 1.0 - xm.xi),
        Sign::Minus => (1.0 - xm.xi, xm.xi),
    };
    let out: Mat4 = even * C64::from(w_even) + odd * C64::from(w_odd);
    let p = out.trace().re;
    if !(p > ZERO_PROBABILITY) {
        return Err(Error::ImpossibleOutcome {
            outcome: o.as_str(),
            probability: p,
        });
    }
    Ok((
        p,
        TwoQubitDensity::from_matrix_unchecked(out / C64::from(p)),
    ))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct XiReport {
    pub xi: f64,
    /// The flip distribution favors odd counts; the meter is then better read inverted.
    pub below_half: bool,
}

fn check_pmf(pmf: &[f64]) -> Result<()> {
    let total: f64 = pmf.iter().sum();
    if pmf.is_empty() || pmf.iter().any(|p| !(*p >= 0.0)) || (total - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidSpec(format!(
            "not a probability mass function (sum {total})"
        )));
    }
    Ok(())
}

/// `ξ = Σ_{n even} P(n)` for the number `n` of bit flips suffered by the probe.
pub fn xi_from_bitflips(pmf: &[f64]) -> Result<XiReport> {
    check_pmf(pmf)?;
    let xi: f64 = pmf.iter().step_by(2).sum();
    Ok(XiReport {
        xi,
        below_half: xi < 0.5,
    })
}

/// Poisson weights `e^{−λ} λⁿ / n!`, truncated once the remaining tail is below 1e-18.
pub fn poisson_pmf(lambda: f64) -> Result<Vec<f64>> {
    if !(lambda >= 0.0) || lambda > 500.0 {
        return Err(Error::Domain(format!(
            "lambda must lie in [0, 500], got {lambda}"
        )));
    }
    let mut out = vec![(-lambda).exp()];
    let mut n = 0usize;
    loop {
        n += 1;
        let next = out[n - 1] * lambda / n as f64;
        out.push(next);
        if n as f64 > lambda && next < 1e-18 {
            break;
        }
    }
    Ok(out)
}

/// Probe channel applying an unknown number `n` of identical unitaries `U_C` with
/// `U_C^N = I`; the qubit-controlled gates are `V = U_C^{N/2}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeChannelSpec {
    pub u_c: DMatrix<C64>,
    pub n_root: usize,
    pub psi0: DVector<C64>,
    /// `P(n)` for `n = 0, 1, …`.
    pub loss_pmf: Vec<f64>,
}

fn mat_pow(m: &DMatrix<C64>, k: usize) -> DMatrix<C64> {
    let mut out = DMatrix::identity(m.nrows(), m.ncols());
    for _ in 0..k {
        out = &out * m;
    }
    out
}

fn max_dev(a: &DMatrix<C64>, b: &DMatrix<C64>) -> f64 {
    (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

impl ProbeChannelSpec {
    pub fn new(
        u_c: DMatrix<C64>,
        n_root: usize,
        psi0: DVector<C64>,
        loss_pmf: Vec<f64>,
    ) -> Result<Self> {
        let d = u_c.nrows();
        if d == 0 || u_c.ncols() != d || psi0.len() != d {
            return Err(Error::InvalidSpec("dimension mismatch".into()));
        }
        if n_root < 2 || n_root % 2 != 0 {
            return Err(Error::InvalidSpec(format!(
                "N must be even and >= 2, got {n_root}"
            )));
        }
        let id = DMatrix::identity(d, d);
        if max_dev(&(u_c.adjoint() * &u_c), &id) > 1e-12 {
            return Err(Error::InvalidSpec("U_C is not unitary".into()));
        }
        if max_dev(&mat_pow(&u_c, n_root), &id) > 1e-12 {
            return Err(Error::InvalidSpec(format!(
                "U_C^{n_root} differs from the identity"
            )));
        }
        if (psi0.norm() - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidSpec(
                "initial probe state not normalized".into(),
            ));
        }
        check_pmf(&loss_pmf)?;
        Ok(Self {
            u_c,
            n_root,
            psi0,
            loss_pmf,
        })
    }

    pub fn dim(&self) -> usize {
        self.u_c.nrows()
    }

    pub fn v(&self) -> DMatrix<C64> {
        mat_pow(&self.u_c, self.n_root / 2)
    }

    /// Qubit probe with `U_C = X`, `N = 2`, starting in `|0⟩`; one flip with probability `p`.
    pub fn bit_flip(p_flip: f64) -> Result<Self> {
        let x = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0].map(C64::from));
        Self::new(
            x,
            2,
            DVector::from_vec(vec![C64::from(1.0), C64::from(0.0)]),
            vec![1.0 - p_flip, p_flip],
        )
    }

    /// Qubit probe with `U_C = diag(1, i)`, `N = 4` (so `V = Z`), starting in `|+⟩`,
    /// uniform over `n ∈ {0, 1, 2, 3}`.
    pub fn quarter_phase() -> Result<Self> {
        let u =
            DMatrix::from_diagonal(&DVector::from_vec(vec![C64::from(1.0), C64::new(0.0, 1.0)]));
        let h = C64::from(std::f64::consts::FRAC_1_SQRT_2);
        Self::new(u, 4, DVector::from_vec(vec![h, h]), vec![0.25; 4])
    }

    /// Probe state for parity `even` after `n` channel applications.
    pub fn expected_probe(&self, even: bool, n: usize) -> DVector<C64> {
        let base = mat_pow(&self.u_c, n) * &self.psi0;
        if even {
            base
        } else {
            self.v() * base
        }
    }

    /// Probe density averaged over the loss distribution, for a target of given parity.
    pub fn averaged_probe(&self, even: bool) -> DMatrix<C64> {
        let d = self.dim();
        let mut out = DMatrix::zeros(d, d);
        for (n, p) in self.loss_pmf.iter().enumerate() {
            let psi = self.expected_probe(even, n);
            out += &psi * psi.adjoint() * C64::from(*p);
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    /// Generic parity eigenstates with unequal weights and a relative phase.
    pub fn default_target(self) -> Ket4 {
        match self {
            Parity::Even => Ket4::new(
                C64::from(0.6),
                C64::from(0.0),
                C64::from(0.0),
                C64::new(0.0, 0.8),
            ),
            Parity::Odd => Ket4::new(
                C64::from(0.0),
                C64::from(0.8),
                C64::from(-0.6),
                C64::from(0.0),
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RootChannelReport {
    pub probe_out: DVector<C64>,
    pub target_preserved: bool,
    /// Distance between the simulated joint state and `target ⊗ expected probe`.
    pub deviation: f64,
}

/// Simulates controlled-`V` from A, `U_C^n` on the probe, controlled-`V` from B on
/// `target ⊗ ψ₀` and checks that the output factorizes with the target unchanged.
pub fn root_channel_circuit(
    spec: &ProbeChannelSpec,
    target: &Ket4,
    n_applied: usize,
) -> Result<RootChannelReport> {
    let even_weight = target[0].norm_sqr() + target[3].norm_sqr();
    let odd_weight = target[1].norm_sqr() + target[2].norm_sqr();
    let even = match (even_weight > 1e-12, odd_weight > 1e-12) {
        (true, false) => true,
        (false, true) => false,
        _ => return Err(Error::Domain("target must have a definite parity".into())),
    };
    let d = spec.dim();
    let v = spec.v();
    let uc_n = mat_pow(&spec.u_c, n_applied);
    let mut joint = DVector::<C64>::zeros(4 * d);
    for q in 0..4 {
        let (a, b) = (q >> 1, q & 1);
        let mut probe = spec.psi0.clone();
        if a == 1 {
            probe = &v * probe;
        }
        probe = &uc_n * probe;
        if b == 1 {
            probe = &v * probe;
        }
        for k in 0..d {
            joint[q * d + k] = target[q] * probe[k];
        }
    }
    let probe_out = spec.expected_probe(even, n_applied);
    let mut expected = DVector::<C64>::zeros(4 * d);
    for q in 0..4 {
        for k in 0..d {
            expected[q * d + k] = target[q] * probe_out[k];
        }
    }
    let deviation = (&joint - &expected).norm();
    Ok(RootChannelReport {
        probe_out,
        target_preserved: deviation <= 1e-12,
        deviation,
    })
}

pub fn root_channel_demo(
    spec: &ProbeChannelSpec,
    parity: Parity,
    n_applied: usize,
) -> Result<RootChannelReport> {
    root_channel_circuit(spec, &parity.default_target(), n_applied)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseFlipReport {
    pub without_flip: Ket4,
    pub with_flip: Ket4,
    /// Unread coin: equal mixture of the two branches.
    pub mixture: TwoQubitDensity,
    pub mixture_concurrence: f64,
}

/// Targets A, B and a probe qubit p (index `4a + 2b + p`): CNOT A→p, optional Z on p,
/// CNOT B→p, then the probe is found in `|0⟩` and projected out.
fn cnot_probe_circuit(target: &Ket4, phase_flip: bool) -> Ket4 {
    let mut psi = [C64::from(0.0); 8];
    for q in 0..4 {
        psi[2 * q] = target[q];
    }
    let cnot = |psi: [C64; 8], control_bit: usize| {
        let mut out = [C64::from(0.0); 8];
        for (i, amp) in psi.iter().enumerate() {
            let j = if i & control_bit != 0 { i ^ 1 } else { i };
            out[j] += *amp;
        }
        out
    };
    psi = cnot(psi, 4);
    if phase_flip {
        for (i, amp) in psi.iter_mut().enumerate() {
            if i & 1 == 1 {
                *amp = -*amp;
            }
        }
    }
    psi = cnot(psi, 2);
    debug_assert!((0..4).all(|q| psi[2 * q + 1].norm() < 1e-15));
    Ket4::new(psi[0], psi[2], psi[4], psi[6])
}

/// `ψ₊ = (|11⟩+|00⟩)/√2` through the probe-qubit circuit with and without a phase flip.
pub fn phaseflip_counterexample() -> Result<PhaseFlipReport> {
    let psi_plus = BellState::EvenPlus.ket();
    let without_flip = cnot_probe_circuit(&psi_plus, false);
    let with_flip = cnot_probe_circuit(&psi_plus, true);
    let mixture = TwoQubitDensity::mixture(&[
        (0.5, TwoQubitDensity::from_pure(&without_flip)?),
        (0.5, TwoQubitDensity::from_pure(&with_flip)?),
    ]);
    let mixture_concurrence = concurrence(&mixture);
    Ok(PhaseFlipReport {
        without_flip,
        with_flip,
        mixture,
        mixture_concurrence,
    })
}

/// One ancilla readout `(a1, b1)` of the Bell-pair parity measurement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AncillaBranch {
    pub a1: u8,
    pub b1: u8,
    pub probability: f64,
    /// Unnormalized target state for this readout.
    pub unnormalized: Mat4,
}

/// Targets `⊗ (|00⟩+|11⟩)/√2` on ancillas A1, B1 (index `8a + 4b + 2a1 + b1`), CNOT
/// A→A1 and B→B1, then a computational readout of both ancillas.
pub fn entanglement_branches(rho: &TwoQubitDensity) -> [AncillaBranch; 4] {
    let m = rho.matrix();
    // the circuit maps |ab⟩|xy⟩ to |ab⟩|x⊕a, y⊕b⟩; with the Bell pair the ancilla
    // amplitude is (|a,b⟩ + |ā,b̄⟩)/√2 for target |ab⟩
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let mut u = DMatrix::<C64>::zeros(16, 4);
    for q in 0..4 {
        let (a, b) = (q >> 1, q & 1);
        for (x, y) in [(a, b), (1 - a, 1 - b)] {
            u[(4 * q + 2 * x + y, q)] += C64::from(h);
        }
    }
    let rho16 = &u * DMatrix::from_fn(4, 4, |i, j| m[(i, j)]) * u.adjoint();
    std::array::from_fn(|k| {
        let (a1, b1) = ((k >> 1) as u8, (k & 1) as u8);
        let sub = Mat4::from_fn(|i, j| rho16[(4 * i + k, 4 * j + k)]);
        AncillaBranch {
            a1,
            b1,
            probability: sub.trace().re,
            unnormalized: sub,
        }
    })
}

/// Outcome `+` when the two ancilla readouts agree; each readout is flipped
/// independently with probability `readout_error`.
pub fn entanglement_parity_outcomes(
    rho: &TwoQubitDensity,
    readout_error: f64,
) -> Result<[(f64, Option<TwoQubitDensity>); 2]> {
    if !(0.0..=1.0).contains(&readout_error) {
        return Err(Error::Domain(format!(
            "readout error must lie in [0, 1], got {readout_error}"
        )));
    }
    let e = readout_error;
    let keep = (1.0 - e) * (1.0 - e) + e * e;
    let mut acc = [Mat4::zeros(), Mat4::zeros()];
    for br in entanglement_branches(rho) {
        let correlated = br.a1 == br.b1;
        let (w_plus, w_minus) = if correlated {
            (keep, 1.0 - keep)
        } else {
            (1.0 - keep, keep)
        };
        acc[0] += br.unnormalized * C64::from(w_plus);
        acc[1] += br.unnormalized * C64::from(w_minus);
    }
    Ok(acc.map(|m| {
        let p = m.trace().re;
        let post = (p > ZERO_PROBABILITY)
            .then(|| TwoQubitDensity::from_matrix_unchecked(m / C64::from(p)));
        (p, post)
    }))
}

/// Samples one run of the Bell-pair parity measurement with perfect readout.
pub fn entanglement_based_parity<R: Rng + ?Sized>(
    rho: &TwoQubitDensity,
    rng: &mut R,
) -> Result<(Outcome, TwoQubitDensity)> {
    let [(p_plus, plus), (_, minus)] = entanglement_parity_outcomes(rho, 0.0)?;
    let u: f64 = rng.random();
    let (o, post) = if u < p_plus {
        (Sign::Plus, plus)
    } else {
        (Sign::Minus, minus)
    };
    post.map(|s| (o, s)).ok_or(Error::ImpossibleOutcome {
        outcome: o.as_str(),
        probability: 0.0,
    })
}
