use nalgebra::SymmetricEigen;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::{c, max_abs, BellState, Ket4, Mat4, C64};
use crate::error::{Error, Result};

/// Joint state of the two target qubits as a 4×4 density matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoQubitDensity {
    m: Mat4,
}

impl TwoQubitDensity {
    /// Wraps a matrix without validation; callers inside the crate only produce
    /// outputs of CP maps.
    pub(crate) fn from_matrix_unchecked(m: Mat4) -> Self {
        Self { m }
    }

    /// Validated constructor: Hermitian, unit trace and PSD up to round-off.
    pub fn from_matrix(m: Mat4) -> Result<Self> {
        let rho = Self { m };
        rho.check(1e-10)?;
        Ok(rho)
    }

    pub fn from_pure(psi: &Ket4) -> Result<Self> {
        let n = psi.norm_squared();
        if !(n > 0.0) {
            return Err(Error::Domain("zero state vector".into()));
        }
        let psi = psi / c(n.sqrt());
        Ok(Self {
            m: psi * psi.adjoint(),
        })
    }

    pub fn bell(b: BellState) -> Self {
        let k = b.ket();
        Self { m: k * k.adjoint() }
    }

    pub fn basis(index: usize) -> Self {
        let mut m = Mat4::zeros();
        m[(index, index)] = c(1.0);
        Self { m }
    }

    pub fn maximally_mixed() -> Self {
        Self {
            m: Mat4::identity() * c(0.25),
        }
    }

    /// |+x⟩ ⊗ |+x⟩ = (|0⟩+|1⟩)(|0⟩+|1⟩)/2.
    pub fn plus_x_plus_x() -> Self {
        Self {
            m: Mat4::from_element(c(0.25)),
        }
    }

    /// Convex combination of states; weights are normalized.
    pub fn mixture(parts: &[(f64, TwoQubitDensity)]) -> Self {
        let total: f64 = parts.iter().map(|(w, _)| w).sum();
        let mut m = Mat4::zeros();
        for (w, rho) in parts {
            m += rho.m * c(w / total);
        }
        Self { m }
    }

    /// Bell-diagonal state with the given populations in [`BellState::ALL`] order.
    pub fn from_bell_populations(p: &[f64; 4]) -> Self {
        let parts: Vec<_> = BellState::ALL
            .iter()
            .map(|b| (p[b.index()], Self::bell(*b)))
            .collect();
        let mut m = Mat4::zeros();
        for (w, rho) in parts {
            m += rho.m * c(w);
        }
        Self { m }
    }

    pub fn matrix(&self) -> &Mat4 {
        &self.m
    }

    pub fn entry(&self, i: usize, j: usize) -> C64 {
        self.m[(i, j)]
    }

    /// Real diagonal `⟨k|ρ|k⟩` in the computational basis.
    pub fn population(&self, k: usize) -> f64 {
        self.m[(k, k)].re
    }

    pub fn trace(&self) -> f64 {
        self.m.trace().re
    }

    pub fn hermiticity_error(&self) -> f64 {
        max_abs(&(self.m - self.m.adjoint()))
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let h = (self.m + self.m.adjoint()) * c(0.5);
        SymmetricEigen::new(h).eigenvalues.min()
    }

    /// Checks the density-matrix invariants at tolerance `tol`.
    pub fn check(&self, tol: f64) -> Result<()> {
        let herm = self.hermiticity_error();
        if herm > tol {
            return Err(Error::Invariant(format!("hermiticity error {herm:e}")));
        }
        let tr = self.trace();
        if (tr - 1.0).abs() > tol || self.m.trace().im.abs() > tol {
            return Err(Error::Invariant(format!("trace {tr}")));
        }
        let lo = self.min_eigenvalue();
        if lo < -1e-10 {
            return Err(Error::Invariant(format!("negative eigenvalue {lo:e}")));
        }
        Ok(())
    }

    /// `U ρ U†`.
    pub fn conjugate_by(&self, u: &Mat4) -> Self {
        Self {
            m: u * self.m * u.adjoint(),
        }
    }

    pub fn fidelity_to(&self, psi: &Ket4) -> f64 {
        fidelity(self, psi)
    }

    /// Bell-basis diagonal in [`BellState::ALL`] order.
    pub fn bell_populations(&self) -> [f64; 4] {
        let m = &self.m;
        // ⟨B±|ρ|B±⟩ = (ρ_aa + ρ_bb ± 2 Re ρ_ab)/2 on the relevant pair
        let even_sum = m[(0, 0)].re + m[(3, 3)].re;
        let odd_sum = m[(1, 1)].re + m[(2, 2)].re;
        let even_coh = m[(0, 3)].re;
        let odd_coh = m[(1, 2)].re;
        [
            0.5 * even_sum + even_coh,
            0.5 * even_sum - even_coh,
            0.5 * odd_sum + odd_coh,
            0.5 * odd_sum - odd_coh,
        ]
    }

    /// Probability of the odd parity manifold, `tr(Q₋ ρ)`.
    pub fn odd_probability(&self) -> f64 {
        self.m[(1, 1)].re + self.m[(2, 2)].re
    }

    /// `⟨σz ⊗ σz⟩`.
    pub fn zz_parity(&self) -> f64 {
        1.0 - 2.0 * self.odd_probability()
    }

    /// Row-major `(re, im)` pairs in the fixed basis order.
    pub fn to_pairs(&self) -> Vec<[f64; 2]> {
        let mut out = Vec::with_capacity(16);
        for i in 0..4 {
            for j in 0..4 {
                let z = self.m[(i, j)];
                out.push([z.re, z.im]);
            }
        }
        out
    }

    pub fn from_pairs(pairs: &[[f64; 2]]) -> Result<Self> {
        if pairs.len() != 16 {
            return Err(Error::Domain(format!(
                "expected 16 entries, got {}",
                pairs.len()
            )));
        }
        let m = Mat4::from_fn(|i, j| {
            let [re, im] = pairs[4 * i + j];
            C64::new(re, im)
        });
        Self::from_matrix(m)
    }

    /// CSV rendering: header `row,col,re,im` then sixteen row-major lines.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("row,col,re,im\n");
        for (k, [re, im]) in self.to_pairs().into_iter().enumerate() {
            s.push_str(&format!("{},{},{},{}\n", k / 4, k % 4, re, im));
        }
        s
    }
}

impl Serialize for TwoQubitDensity {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_pairs().serialize(s)
    }
}

impl<'de> Deserialize<'de> for TwoQubitDensity {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let pairs = Vec::<[f64; 2]>::deserialize(d)?;
        Self::from_pairs(&pairs).map_err(serde::de::Error::custom)
    }
}

/// `⟨ψ|ρ|ψ⟩` for a normalized pure state ψ.
pub fn fidelity(rho: &TwoQubitDensity, psi: &Ket4) -> f64 {
    (psi.adjoint() * rho.m * psi)[(0, 0)].re
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fidelity_examples() {
        let be = TwoQubitDensity::bell(BellState::EvenPlus);
        assert!((fidelity(&be, &BellState::EvenPlus.ket()) - 1.0).abs() < 1e-15);
        assert!(fidelity(&be, &BellState::OddPlus.ket()).abs() < 1e-15);
        let mixed = TwoQubitDensity::maximally_mixed();
        assert!((fidelity(&mixed, &BellState::EvenPlus.ket()) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn bell_populations_match_fidelities() {
        let rho = TwoQubitDensity::plus_x_plus_x();
        let pops = rho.bell_populations();
        for b in BellState::ALL {
            assert!((pops[b.index()] - fidelity(&rho, &b.ket())).abs() < 1e-15);
        }
        assert_eq!(pops, [0.5, 0.0, 0.5, 0.0]);
    }

    #[test]
    fn from_matrix_rejects_bad_input() {
        let mut m = Mat4::identity() * c(0.25);
        m[(0, 1)] = c(0.1);
        assert!(TwoQubitDensity::from_matrix(m).is_err());
        let m = Mat4::identity() * c(0.3);
        assert!(TwoQubitDensity::from_matrix(m).is_err());
        let mut m = Mat4::zeros();
        m[(0, 0)] = c(1.5);
        m[(1, 1)] = c(-0.5);
        assert!(TwoQubitDensity::from_matrix(m).is_err());
    }

    #[test]
    fn json_round_trip() {
        let rho = TwoQubitDensity::plus_x_plus_x();
        let s = serde_json::to_string(&rho).unwrap();
        assert!(s.starts_with("[[0.25,0.0],[0.25,0.0]"));
        let back: TwoQubitDensity = serde_json::from_str(&s).unwrap();
        assert_eq!(back, rho);
        assert!(rho.to_csv().starts_with("row,col,re,im\n0,0,0.25,0\n"));
    }
}
