use super::{c, Mat4, TwoQubitDensity};
use crate::error::{Error, Result};

/// Local unitaries used by the feedback controllers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LocalGate {
    /// π rotation about X on qubit A: `X ⊗ I`.
    XAPi,
    /// π/2 rotation about Y on both qubits: `R ⊗ R` with `R = [[1, −1], [1, 1]]/√2`.
    YBothHalfPi,
    /// π rotation about Z on qubit A: `Z ⊗ I` (x-basis parity correction).
    ZAPi,
    /// Hadamard on both qubits, maps the z-parity frame onto the x-parity frame.
    HadamardBoth,
}

impl LocalGate {
    pub fn unitary(self) -> Mat4 {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let single: [[f64; 2]; 2] = match self {
            LocalGate::XAPi => return kron_real(&[[0.0, 1.0], [1.0, 0.0]], &IDENTITY),
            LocalGate::ZAPi => return kron_real(&[[1.0, 0.0], [0.0, -1.0]], &IDENTITY),
            LocalGate::YBothHalfPi => [[h, -h], [h, h]],
            LocalGate::HadamardBoth => [[h, h], [h, -h]],
        };
        kron_real(&single, &single)
    }
}

const IDENTITY: [[f64; 2]; 2] = [[1.0, 0.0], [0.0, 1.0]];

fn kron_real(a: &[[f64; 2]; 2], b: &[[f64; 2]; 2]) -> Mat4 {
    Mat4::from_fn(|i, j| c(a[i / 2][j / 2] * b[i % 2][j % 2]))
}

pub fn apply_local_gate(rho: &TwoQubitDensity, gate: LocalGate) -> TwoQubitDensity {
    match gate {
        // permutation |ab⟩ -> |(1-a)b⟩, done by index shuffling
        LocalGate::XAPi => {
            let m = rho.matrix();
            let p = [2usize, 3, 0, 1];
            TwoQubitDensity::from_matrix_unchecked(Mat4::from_fn(|i, j| m[(p[i], p[j])]))
        }
        _ => rho.conjugate_by(&gate.unitary()),
    }
}

pub fn apply_unitary(rho: &TwoQubitDensity, u: &Mat4) -> TwoQubitDensity {
    rho.conjugate_by(u)
}

/// Independent amplitude damping with probability `gamma` on each qubit.
///
/// Kraus pair per qubit: `K₀ = |0⟩⟨0| + √(1−γ)|1⟩⟨1|`, `K₁ = √γ |0⟩⟨1|`.
pub fn amplitude_damp(rho: &TwoQubitDensity, gamma: f64) -> Result<TwoQubitDensity> {
    if !(0.0..=1.0).contains(&gamma) {
        return Err(Error::Domain(format!(
            "gamma must lie in [0, 1], got {gamma}"
        )));
    }
    if gamma == 0.0 {
        return Ok(*rho);
    }
    let m = damp_qubit(rho.matrix(), gamma, 2);
    let m = damp_qubit(&m, gamma, 1);
    Ok(TwoQubitDensity::from_matrix_unchecked(m))
}

/// Damping on the qubit whose bit has weight `bit` in the basis index.
fn damp_qubit(m: &Mat4, gamma: f64, bit: usize) -> Mat4 {
    let keep = (1.0 - gamma).sqrt();
    let scale = |i: usize| if i & bit != 0 { keep } else { 1.0 };
    let mut out = Mat4::from_fn(|i, j| m[(i, j)] * c(scale(i) * scale(j)));
    for i in 0..4 {
        for j in 0..4 {
            if i & bit == 0 && j & bit == 0 {
                out[(i, j)] += m[(i | bit, j | bit)] * c(gamma);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qmath::{max_abs, BellState};

    fn close(a: &TwoQubitDensity, b: &TwoQubitDensity, tol: f64) -> bool {
        max_abs(&(a.matrix() - b.matrix())) <= tol
    }

    #[test]
    fn x_pulse_maps_odd_plus_to_even_plus() {
        let out = apply_local_gate(&TwoQubitDensity::bell(BellState::OddPlus), LocalGate::XAPi);
        assert!(close(
            &out,
            &TwoQubitDensity::bell(BellState::EvenPlus),
            1e-15
        ));
    }

    #[test]
    fn x_pulse_shuffle_matches_unitary() {
        let rho = TwoQubitDensity::mixture(&[
            (0.3, TwoQubitDensity::plus_x_plus_x()),
            (0.7, TwoQubitDensity::basis(1)),
        ]);
        let a = apply_local_gate(&rho, LocalGate::XAPi);
        let b = rho.conjugate_by(&LocalGate::XAPi.unitary());
        assert!(close(&a, &b, 1e-15));
    }

    #[test]
    fn half_pi_pulses_bell_mapping() {
        let be = TwoQubitDensity::bell(BellState::EvenPlus);
        assert!(close(
            &apply_local_gate(&be, LocalGate::YBothHalfPi),
            &be,
            1e-15
        ));
        let bm = TwoQubitDensity::bell(BellState::EvenMinus);
        let out = apply_local_gate(&bm, LocalGate::YBothHalfPi);
        assert!(close(
            &out,
            &TwoQubitDensity::bell(BellState::OddPlus),
            1e-15
        ));
    }

    #[test]
    fn gates_are_unitary() {
        for g in [
            LocalGate::XAPi,
            LocalGate::YBothHalfPi,
            LocalGate::ZAPi,
            LocalGate::HadamardBoth,
        ] {
            let u = g.unitary();
            assert!(max_abs(&(u.adjoint() * u - Mat4::identity())) < 1e-15);
        }
    }

    #[test]
    fn damping_identity_and_full_decay() {
        let rho = TwoQubitDensity::plus_x_plus_x();
        assert_eq!(amplitude_damp(&rho, 0.0).unwrap(), rho);
        let out = amplitude_damp(&TwoQubitDensity::basis(3), 1.0).unwrap();
        assert!(close(&out, &TwoQubitDensity::basis(0), 0.0));
        assert!(amplitude_damp(&rho, 1.2).is_err());
        assert!(amplitude_damp(&rho, -0.1).is_err());
    }

    /// Kraus-sum reference built from explicit 4×4 tensor products.
    fn damp_reference(rho: &TwoQubitDensity, gamma: f64) -> TwoQubitDensity {
        let k0 = [[1.0, 0.0], [0.0, (1.0 - gamma).sqrt()]];
        let k1 = [[0.0, gamma.sqrt()], [0.0, 0.0]];
        let mut m = Mat4::zeros();
        for a in [&k0, &k1] {
            for b in [&k0, &k1] {
                let k = kron_real(a, b);
                m += k * rho.matrix() * k.adjoint();
            }
        }
        TwoQubitDensity::from_matrix_unchecked(m)
    }

    #[test]
    fn damping_matches_kraus_sum() {
        let rho = TwoQubitDensity::mixture(&[
            (0.4, TwoQubitDensity::plus_x_plus_x()),
            (0.6, TwoQubitDensity::bell(BellState::OddMinus)),
        ]);
        for gamma in [0.0, 1e-4, 0.3, 1.0] {
            let a = amplitude_damp(&rho, gamma).unwrap();
            assert!(close(&a, &damp_reference(&rho, gamma), 1e-15));
            assert!((a.trace() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn damping_bell_fidelity_closed_form() {
        // Symbolic expansion for |B+e⟩: ρ'00 = (1 + γ²)/2, ρ'33 = (1-γ)²/2,
        // ρ'03 = (1-γ)/2, and F = (ρ'00 + ρ'33)/2 + Re ρ'03.
        let gamma = 1.0 - (-1.0f64 / 3000.0).exp();
        let expected =
            0.5 * (0.5 + 0.5 * gamma * gamma + 0.5 * (1.0 - gamma).powi(2)) + 0.5 * (1.0 - gamma);
        let out = amplitude_damp(&TwoQubitDensity::bell(BellState::EvenPlus), gamma).unwrap();
        let f = out.fidelity_to(&BellState::EvenPlus.ket());
        assert!((f - expected).abs() < 1e-15, "{f} vs {expected}");
    }
}
