//! Two-qubit linear algebra shared by every other module.
//!
//! Basis order is fixed as `|00⟩, |01⟩, |10⟩, |11⟩` with qubit A the most significant bit.

mod cat;
mod density;
mod gates;

pub use cat::{norm_const, CatParams, DecayParams, Sign};
pub use density::{fidelity, TwoQubitDensity};
pub use gates::{amplitude_damp, apply_local_gate, apply_unitary, LocalGate};

use nalgebra::{Matrix4, Vector4};
use num_complex::Complex64;

pub type C64 = Complex64;
pub type Mat4 = Matrix4<C64>;
pub type Ket4 = Vector4<C64>;

/// Largest entry modulus of a complex 4×4 matrix.
pub fn max_abs(m: &Mat4) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub(crate) fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// One of the four Bell states, in the order used for population vectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BellState {
    /// (|00⟩ + |11⟩)/√2
    EvenPlus,
    /// (|00⟩ − |11⟩)/√2
    EvenMinus,
    /// (|01⟩ + |10⟩)/√2
    OddPlus,
    /// (|01⟩ − |10⟩)/√2
    OddMinus,
}

impl BellState {
    pub const ALL: [BellState; 4] = [
        BellState::EvenPlus,
        BellState::EvenMinus,
        BellState::OddPlus,
        BellState::OddMinus,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn is_even(self) -> bool {
        matches!(self, BellState::EvenPlus | BellState::EvenMinus)
    }

    pub fn ket(self) -> Ket4 {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let v = match self {
            BellState::EvenPlus => [h, 0.0, 0.0, h],
            BellState::EvenMinus => [h, 0.0, 0.0, -h],
            BellState::OddPlus => [0.0, h, h, 0.0],
            BellState::OddMinus => [0.0, h, -h, 0.0],
        };
        Ket4::new(c(v[0]), c(v[1]), c(v[2]), c(v[3]))
    }
}

/// Unitary whose columns are the Bell states in [`BellState::ALL`] order.
///
/// `U† ρ U` expresses a computational-basis density matrix in the Bell basis.
pub fn bell_change_of_basis() -> Mat4 {
    let mut u = Mat4::zeros();
    for (col, b) in BellState::ALL.iter().enumerate() {
        u.set_column(col, &b.ket());
    }
    u
}

/// Projector onto the even parity manifold span{|00⟩, |11⟩}.
pub fn q_plus() -> Mat4 {
    Mat4::from_diagonal(&Ket4::new(c(1.0), c(0.0), c(0.0), c(1.0)))
}

/// Projector onto the odd parity manifold span{|01⟩, |10⟩}.
pub fn q_minus() -> Mat4 {
    Mat4::from_diagonal(&Ket4::new(c(0.0), c(1.0), c(1.0), c(0.0)))
}

/// Computational basis ket `|index⟩`.
pub fn basis_ket(index: usize) -> Ket4 {
    let mut k = Ket4::zeros();
    k[index] = c(1.0);
    k
}

/// Product state `|a⟩ ⊗ |b⟩` of two single-qubit kets.
pub fn product_ket(a: [C64; 2], b: [C64; 2]) -> Ket4 {
    Ket4::new(a[0] * b[0], a[0] * b[1], a[1] * b[0], a[1] * b[1])
}

/// Concurrence of a two-qubit state (Wootters), zero iff the state is separable.
pub fn concurrence(rho: &TwoQubitDensity) -> f64 {
    let yy = {
        let mut m = Mat4::zeros();
        m[(0, 3)] = c(-1.0);
        m[(1, 2)] = c(1.0);
        m[(2, 1)] = c(1.0);
        m[(3, 0)] = c(-1.0);
        m
    };
    let r = rho.matrix();
    let tilde = yy * r.conjugate() * yy;
    // eigenvalues of rho*tilde equal those of the Hermitian sqrt(rho) tilde sqrt(rho)
    let eig = nalgebra::SymmetricEigen::new(*r);
    let mut sqrt_rho = Mat4::zeros();
    for k in 0..4 {
        let lam = eig.eigenvalues[k].max(0.0).sqrt();
        let v = eig.eigenvectors.column(k);
        sqrt_rho += v * v.adjoint() * c(lam);
    }
    let h = sqrt_rho * tilde * sqrt_rho;
    let h = (h + h.adjoint()) * c(0.5);
    let mut lams: Vec<f64> = nalgebra::SymmetricEigen::new(h)
        .eigenvalues
        .iter()
        .map(|l| l.max(0.0).sqrt())
        .collect();
    lams.sort_by(|a, b| b.partial_cmp(a).unwrap());
    (lams[0] - lams[1] - lams[2] - lams[3]).max(0.0)
}
