//! Exact coherent-state simulation of the probe pipeline, used as an independent
//! oracle for the closed-form Kraus operators.
//!
//! Every pipeline stage maps the span of `|±β⟩` coherent pairs onto itself, so a joint
//! state of the qubits, the probe mode and the loss mode is represented exactly by at most
//! sixteen terms `coeff · |label⟩ ⊗ |probe⟩ ⊗ |env⟩` with real coherent amplitudes. Norms
//! and overlaps go through the coherent-state Gram matrix; no Fock truncation is involved.

use crate::error::{Error, Result};
use crate::kraus::KrausSet;
use crate::qmath::{norm_const, CatParams, Sign, C64};

/// Amplitudes closer than this are the same coherent state.
const AMP_TOL: f64 = 1e-12;

/// `⟨b1|b2⟩` for real coherent amplitudes.
pub fn coherent_overlap(b1: f64, b2: f64) -> f64 {
    (-(b1 - b2).powi(2) / 2.0).exp()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Term {
    /// Two-qubit basis index, `2·q_A + q_B`.
    pub label: usize,
    pub probe: f64,
    pub env: f64,
    pub coeff: C64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct JointKet {
    pub terms: Vec<Term>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Probe,
    Env,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ParityProjector {
    pub mode: Mode,
    pub sign: Sign,
}

fn same_amp(a: f64, b: f64) -> bool {
    (a - b).abs() <= AMP_TOL
}

impl Term {
    fn amp(&self, mode: Mode) -> f64 {
        match mode {
            Mode::Probe => self.probe,
            Mode::Env => self.env,
        }
    }

    fn with_amp(mut self, mode: Mode, amp: f64, coeff: C64) -> Term {
        match mode {
            Mode::Probe => self.probe = amp,
            Mode::Env => self.env = amp,
        }
        self.coeff = coeff;
        self
    }
}

impl JointKet {
    /// `|label⟩ ⊗ |C⁺_α⟩ ⊗ |0⟩_env`.
    pub fn initial(label: usize, alpha: f64) -> Self {
        Self::initial_superposition(
            [0, 1, 2, 3].map(|k| C64::new((k == label) as u8 as f64, 0.0)),
            alpha,
        )
    }

    /// `(Σ c_q |q⟩) ⊗ |C⁺_α⟩ ⊗ |0⟩_env`.
    pub fn initial_superposition(coeffs: [C64; 4], alpha: f64) -> Self {
        let n = norm_const(alpha * alpha, Sign::Plus).expect("alpha^2 >= 0");
        let mut terms = Vec::new();
        for (label, c) in coeffs.into_iter().enumerate() {
            if c == C64::new(0.0, 0.0) {
                continue;
            }
            for amp in [alpha, -alpha] {
                terms.push(Term {
                    label,
                    probe: amp,
                    env: 0.0,
                    coeff: c / n,
                });
            }
        }
        Self { terms }
    }

    /// Normalized `|label⟩ ⊗ |C^{sp}_{bp}⟩ ⊗ |C^{se}_{be}⟩`.
    pub fn cat_product(label: usize, sp: Sign, bp: f64, se: Sign, be: f64) -> Result<Self> {
        let np = norm_const(bp * bp, sp)?;
        let ne = norm_const(be * be, se)?;
        if np == 0.0 || ne == 0.0 {
            return Err(Error::Domain(
                "odd cat of vacuum amplitude does not exist".into(),
            ));
        }
        let mut terms = Vec::with_capacity(4);
        for (p, ps) in [(bp, 1.0), (-bp, sp.value())] {
            for (e, es) in [(be, 1.0), (-be, se.value())] {
                terms.push(Term {
                    label,
                    probe: p,
                    env: e,
                    coeff: C64::new(ps * es / (np * ne), 0.0),
                });
            }
        }
        Ok(Self { terms })
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// `⟨self|other⟩` through the coherent Gram matrix.
    pub fn inner(&self, other: &JointKet) -> C64 {
        let mut acc = C64::new(0.0, 0.0);
        for a in &self.terms {
            for b in &other.terms {
                if a.label != b.label {
                    continue;
                }
                let g = coherent_overlap(a.probe, b.probe) * coherent_overlap(a.env, b.env);
                acc += a.coeff.conj() * b.coeff * g;
            }
        }
        acc
    }

    pub fn norm_squared(&self) -> f64 {
        self.inner(self).re
    }

    /// `‖self − other‖²`.
    pub fn distance_squared(&self, other: &JointKet) -> f64 {
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().map(|t| Term {
            coeff: -t.coeff,
            ..*t
        }));
        JointKet { terms }.simplify().norm_squared().max(0.0)
    }

    pub fn scaled(&self, s: f64) -> JointKet {
        JointKet {
            terms: self
                .terms
                .iter()
                .map(|t| Term {
                    coeff: t.coeff * s,
                    ..*t
                })
                .collect(),
        }
    }

    /// Merges duplicate `(label, probe, env)` terms and drops exact zeros.
    fn simplify(mut self) -> Self {
        let mut out: Vec<Term> = Vec::with_capacity(self.terms.len());
        for t in self.terms.drain(..) {
            match out.iter_mut().find(|o| {
                o.label == t.label && same_amp(o.probe, t.probe) && same_amp(o.env, t.env)
            }) {
                Some(o) => o.coeff += t.coeff,
                None => out.push(t),
            }
        }
        out.retain(|t| t.coeff != C64::new(0.0, 0.0));
        Self { terms: out }
    }

    /// Groups terms that share `(label, other-mode amplitude)` and `|amp|` in `mode`,
    /// returning `(template, β, coeff at +β, coeff at −β)`.
    fn pairs(&self, mode: Mode) -> Vec<(Term, f64, C64, C64)> {
        let other = match mode {
            Mode::Probe => Mode::Env,
            Mode::Env => Mode::Probe,
        };
        let mut groups: Vec<(Term, f64, C64, C64)> = Vec::new();
        for t in &self.terms {
            let beta = t.amp(mode).abs();
            let slot = groups.iter_mut().find(|(g, b, _, _)| {
                g.label == t.label && same_amp(g.amp(other), t.amp(other)) && same_amp(*b, beta)
            });
            let entry = match slot {
                Some(s) => s,
                None => {
                    groups.push((*t, beta, C64::new(0.0, 0.0), C64::new(0.0, 0.0)));
                    groups.last_mut().unwrap()
                }
            };
            if beta <= AMP_TOL {
                // vacuum: both slots describe the same state, keep it on the + side
                entry.2 += t.coeff;
            } else if t.amp(mode) > 0.0 {
                entry.2 += t.coeff;
            } else {
                entry.3 += t.coeff;
            }
        }
        groups
    }
}

/// Parity flip of the mode `mode` on every term whose label has qubit `bit` set.
///
/// `a|β⟩ + b|−β⟩ = (a+b)(N⁺/2)|C⁺⟩ + (a−b)(N⁻/2)|C⁻⟩`; the flip swaps `C⁺ ↔ C⁻` and the
/// result is re-expanded on `|±β⟩`.
fn controlled_flip(ket: &JointKet, bit: usize, beta: f64) -> Result<JointKet> {
    if let Some(t) = ket.terms.iter().find(|t| !same_amp(t.probe.abs(), beta)) {
        return Err(Error::PipelineOrder(format!(
            "probe amplitude {} does not match expected ±{beta}",
            t.probe
        )));
    }
    let np = norm_const(beta * beta, Sign::Plus)?;
    let nm = norm_const(beta * beta, Sign::Minus)?;
    if nm == 0.0 {
        return Err(Error::PipelineOrder(
            "cannot flip the parity of the vacuum".into(),
        ));
    }
    let mut out = Vec::with_capacity(ket.len() * 2);
    let untouched = ket.terms.iter().filter(|t| t.label & bit == 0).copied();
    out.extend(untouched);
    let flipped = JointKet {
        terms: ket
            .terms
            .iter()
            .filter(|t| t.label & bit != 0)
            .copied()
            .collect(),
    };
    for (tmpl, _, a, b) in flipped.pairs(Mode::Probe) {
        let even = (a + b) * (np / 2.0);
        let odd = (a - b) * (nm / 2.0);
        // even·|C⁻⟩ + odd·|C⁺⟩
        let plus = even / nm + odd / np;
        let minus = -even / nm + odd / np;
        out.push(tmpl.with_amp(Mode::Probe, beta, plus));
        out.push(tmpl.with_amp(Mode::Probe, -beta, minus));
    }
    Ok(JointKet { terms: out }.simplify())
}

/// Qubit-A-controlled cat parity flip on a probe of amplitude `±alpha`.
pub fn apply_ua(ket: &JointKet, alpha: f64) -> Result<JointKet> {
    controlled_flip(ket, 2, alpha)
}

/// Qubit-B-controlled cat parity flip on the transmitted probe `±√η α`.
pub fn apply_ub(ket: &JointKet, sqrt_eta_alpha: f64) -> Result<JointKet> {
    controlled_flip(ket, 1, sqrt_eta_alpha)
}

/// Beam splitter mixing the probe with the vacuum loss mode:
/// `|β⟩|0⟩ ↦ |√η β⟩|√(1−η) β⟩`.
pub fn apply_beamsplitter(ket: &JointKet, eta: f64) -> Result<JointKet> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(Error::Domain(format!("eta must lie in [0, 1], got {eta}")));
    }
    if ket.terms.iter().any(|t| t.env != 0.0) {
        return Err(Error::PipelineOrder("loss mode already populated".into()));
    }
    let (t, r) = (eta.sqrt(), (1.0 - eta).sqrt());
    let terms = ket
        .terms
        .iter()
        .map(|x| Term {
            probe: t * x.probe,
            env: r * x.probe,
            ..*x
        })
        .collect();
    Ok(JointKet { terms }.simplify())
}

/// Photon-number parity projection of one mode; returns the unnormalized ket and its
/// squared norm.
///
/// `Π_even |±β⟩ = (|β⟩ + |−β⟩)/2`, `Π_odd |±β⟩ = ±(|β⟩ − |−β⟩)/2`.
pub fn project_parity(ket: &JointKet, proj: ParityProjector) -> (JointKet, f64) {
    let mut out = Vec::new();
    for (tmpl, beta, a, b) in ket.pairs(proj.mode) {
        if beta <= AMP_TOL {
            if proj.sign == Sign::Plus {
                out.push(tmpl.with_amp(proj.mode, 0.0, a));
            }
            continue;
        }
        let (cp, cm) = match proj.sign {
            Sign::Plus => ((a + b) / 2.0, (a + b) / 2.0),
            Sign::Minus => ((a - b) / 2.0, -(a - b) / 2.0),
        };
        out.push(tmpl.with_amp(proj.mode, beta, cp));
        out.push(tmpl.with_amp(proj.mode, -beta, cm));
    }
    let ket = JointKet { terms: out }.simplify();
    let w = ket.norm_squared();
    (ket, w)
}

/// Joint state just before the two parity detections.
pub fn pipeline_state(ket0: &JointKet, params: CatParams) -> Result<JointKet> {
    let alpha = params.alpha();
    let ket = apply_ua(ket0, alpha)?;
    let ket = apply_beamsplitter(&ket, params.eta)?;
    apply_ub(&ket, (params.eta * params.alpha2).sqrt())
}

/// Projection onto the `(probe, env)` detection pair.
pub fn project_both(ket: &JointKet, probe: Sign, env: Sign) -> (JointKet, f64) {
    let (k, _) = project_parity(
        ket,
        ParityProjector {
            mode: Mode::Probe,
            sign: probe,
        },
    );
    project_parity(
        &k,
        ParityProjector {
            mode: Mode::Env,
            sign: env,
        },
    )
}

/// Kraus operators read off the exact pipeline.
pub fn derive_kraus(params: CatParams) -> Result<KrausSet> {
    let params = CatParams::new(params.alpha2, params.eta)?;
    if params.alpha2 == 0.0 {
        return Err(Error::DegenerateProbe);
    }
    if params.eta == 0.0 {
        return Err(Error::Domain(
            "eta = 0 leaves no transmitted probe to flip".into(),
        ));
    }
    let bp = (params.eta * params.alpha2).sqrt();
    let be = ((1.0 - params.eta) * params.alpha2).sqrt();
    let signs = [
        (Sign::Plus, Sign::Plus),
        (Sign::Plus, Sign::Minus),
        (Sign::Minus, Sign::Plus),
        (Sign::Minus, Sign::Minus),
    ];
    let mut diag = [[0.0; 4]; 4];
    for label in 0..4 {
        let psi = pipeline_state(&JointKet::initial(label, params.alpha()), params)?;
        for (slot, (sp, se)) in signs.iter().enumerate() {
            let (proj, w) = project_both(&psi, *sp, *se);
            diag[slot][label] = if w < 1e-28 {
                0.0
            } else {
                JointKet::cat_product(label, *sp, bp, *se, be)?
                    .inner(&proj)
                    .re
            };
        }
    }
    Ok(KrausSet::from_diagonals(params, diag))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kraus::build_kraus;

    fn p(alpha2: f64, eta: f64) -> CatParams {
        CatParams::new(alpha2, eta).unwrap()
    }

    #[test]
    fn overlap_values() {
        assert_eq!(coherent_overlap(0.7, 0.7), 1.0);
        assert_eq!(coherent_overlap(0.0, 0.0), 1.0);
        assert!((coherent_overlap(1.0, -1.0) - 0.135335).abs() < 1e-6);
        assert!((coherent_overlap(1.0, -1.0) - (-2.0f64).exp()).abs() < 1e-16);
    }

    #[test]
    fn initial_ket_normalized() {
        let k = JointKet::initial(0, 1.3);
        assert!((k.norm_squared() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn ua_leaves_qubit_zero_and_flips_qubit_one() {
        let alpha = 2f64.sqrt();
        let k0 = JointKet::initial(0, alpha);
        assert!(apply_ua(&k0, alpha).unwrap().distance_squared(&k0) < 1e-28);

        let k1 = JointKet::initial(2, alpha);
        let out = apply_ua(&k1, alpha).unwrap();
        let odd_cat = JointKet::cat_product(2, Sign::Minus, alpha, Sign::Plus, 0.0).unwrap();
        assert!(out.distance_squared(&odd_cat) < 1e-26);
        let back = apply_ua(&out, alpha).unwrap();
        assert!(back.distance_squared(&k1) < 1e-26);
    }

    #[test]
    fn ua_rejects_wrong_amplitude() {
        let k = JointKet::initial(2, 1.0);
        assert!(matches!(apply_ua(&k, 1.5), Err(Error::PipelineOrder(_))));
    }

    #[test]
    fn beamsplitter_limits() {
        let alpha = 1.2;
        let single = JointKet {
            terms: vec![Term {
                label: 0,
                probe: alpha,
                env: 0.0,
                coeff: C64::new(1.0, 0.0),
            }],
        };
        let t = apply_beamsplitter(&single, 1.0).unwrap();
        assert_eq!((t.terms[0].probe, t.terms[0].env), (alpha, 0.0));
        let t = apply_beamsplitter(&single, 0.0).unwrap();
        assert_eq!((t.terms[0].probe, t.terms[0].env), (0.0, alpha));
        assert!(matches!(
            apply_beamsplitter(&t, 0.5),
            Err(Error::PipelineOrder(_))
        ));
    }

    #[test]
    fn beamsplitter_on_cat() {
        let alpha = 2f64.sqrt();
        let out = apply_beamsplitter(&JointKet::initial(0, alpha), 0.75).unwrap();
        let n = norm_const(2.0, Sign::Plus).unwrap();
        let (a, b) = (0.75f64.sqrt() * alpha, 0.25f64.sqrt() * alpha);
        let expected = JointKet {
            terms: vec![
                Term {
                    label: 0,
                    probe: a,
                    env: b,
                    coeff: C64::new(1.0 / n, 0.0),
                },
                Term {
                    label: 0,
                    probe: -a,
                    env: -b,
                    coeff: C64::new(1.0 / n, 0.0),
                },
            ],
        };
        assert!(out.distance_squared(&expected) < 1e-28);
        assert!((out.norm_squared() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn projector_examples() {
        let beta = 0.9;
        let even = JointKet::cat_product(0, Sign::Plus, beta, Sign::Plus, 0.0).unwrap();
        let (k, w) = project_parity(
            &even,
            ParityProjector {
                mode: Mode::Probe,
                sign: Sign::Plus,
            },
        );
        assert!(
            k.distance_squared(&even) < 1e-28 && (w - 1.0).abs() < 1e-14,
            "{} {w}",
            k.distance_squared(&even)
        );
        let (k, w) = project_parity(
            &even,
            ParityProjector {
                mode: Mode::Probe,
                sign: Sign::Minus,
            },
        );
        assert!(k.is_empty() && w == 0.0);

        // single coherent state: even part (N⁺/2)|C⁺⟩, weight (N⁺/2)²
        let coh = JointKet {
            terms: vec![Term {
                label: 1,
                probe: beta,
                env: 0.0,
                coeff: C64::new(1.0, 0.0),
            }],
        };
        let (k, w) = project_parity(
            &coh,
            ParityProjector {
                mode: Mode::Probe,
                sign: Sign::Plus,
            },
        );
        let np = norm_const(beta * beta, Sign::Plus).unwrap();
        let expected = JointKet::cat_product(1, Sign::Plus, beta, Sign::Plus, 0.0)
            .unwrap()
            .scaled(np / 2.0);
        assert!(k.distance_squared(&expected) < 1e-28);
        assert!((w - (np / 2.0).powi(2)).abs() < 1e-14);
    }

    #[test]
    fn projector_idempotent() {
        let psi = pipeline_state(&JointKet::initial(3, 1.1), p(1.21, 0.6)).unwrap();
        for mode in [Mode::Probe, Mode::Env] {
            for sign in Sign::BOTH {
                let pr = ParityProjector { mode, sign };
                let (once, _) = project_parity(&psi, pr);
                let (twice, _) = project_parity(&once, pr);
                assert!(once.distance_squared(&twice) < 1e-26);
            }
        }
    }

    #[test]
    fn pipeline_unitary_and_weights_complete() {
        for (a2, eta) in [(0.25, 0.5), (2.0, 0.75), (8.0, 0.9), (1.0, 1.0)] {
            for label in 0..4 {
                let psi =
                    pipeline_state(&JointKet::initial(label, f64::sqrt(a2)), p(a2, eta)).unwrap();
                assert!(psi.len() <= 16);
                assert!((psi.norm_squared() - 1.0).abs() < 1e-12);
                let total: f64 = [
                    (Sign::Plus, Sign::Plus),
                    (Sign::Plus, Sign::Minus),
                    (Sign::Minus, Sign::Plus),
                    (Sign::Minus, Sign::Minus),
                ]
                .iter()
                .map(|(a, b)| project_both(&psi, *a, *b).1)
                .sum();
                assert!((total - 1.0).abs() < 1e-12, "{total}");
            }
        }
    }

    #[test]
    fn derive_matches_closed_form() {
        for (a2, eta) in [(2.0, 0.75), (1.0, 0.5), (4.0, 0.9)] {
            let d = derive_kraus(p(a2, eta)).unwrap();
            let b = build_kraus(p(a2, eta)).unwrap();
            assert!(d.max_deviation(&b) <= 1e-10, "{}", d.max_deviation(&b));
            assert!(d.completeness_error() <= 1e-12);
        }
        let d = derive_kraus(p(2.0, 1.0)).unwrap();
        assert!(d.m_pm.iter().all(|x| *x == 0.0));
        assert!(d.m_mm.iter().all(|x| *x == 0.0));
    }

    #[test]
    fn projected_wavefunctions_spot_check() {
        // generic superposition at |α|² = 1, η = 1/2
        let params = p(1.0, 0.5);
        let coeffs = [
            C64::new(0.5, 0.1),
            C64::new(-0.3, 0.2),
            C64::new(0.4, 0.0),
            C64::new(0.1, -0.6),
        ];
        let psi = pipeline_state(&JointKet::initial_superposition(coeffs, 1.0), params).unwrap();
        let n = |b2: f64, s| norm_const(b2, s).unwrap();
        let (pl, mi) = (Sign::Plus, Sign::Minus);
        let (a2, t2, l2): (f64, f64, f64) = (1.0, 0.5, 0.5);
        let (bp, be) = (t2.sqrt(), l2.sqrt());
        // (probe, env, [(label, factor)])
        let cases = [
            (
                pl,
                pl,
                vec![
                    (0, n(l2, pl) / 2.0 * n(t2, pl) / n(a2, pl)),
                    (3, n(l2, pl) / 2.0 * n(t2, mi) / n(a2, mi)),
                ],
            ),
            (
                pl,
                mi,
                vec![
                    (1, n(l2, mi) / 2.0 * n(t2, mi) / n(a2, pl)),
                    (2, n(l2, mi) / 2.0 * n(t2, pl) / n(a2, mi)),
                ],
            ),
            (
                mi,
                pl,
                vec![
                    (1, n(l2, pl) / 2.0 * n(t2, pl) / n(a2, pl)),
                    (2, n(l2, pl) / 2.0 * n(t2, mi) / n(a2, mi)),
                ],
            ),
            (
                mi,
                mi,
                vec![
                    (0, n(l2, mi) / 2.0 * n(t2, mi) / n(a2, pl)),
                    (3, n(l2, mi) / 2.0 * n(t2, pl) / n(a2, mi)),
                ],
            ),
        ];
        for (sp, se, parts) in cases {
            let mut expected = JointKet::default();
            for (label, f) in parts {
                let cat = JointKet::cat_product(label, sp, bp, se, be).unwrap();
                for t in cat.terms {
                    expected.terms.push(Term {
                        coeff: t.coeff * coeffs[label] * f,
                        ..t
                    });
                }
            }
            let (proj, _) = project_both(&psi, sp, se);
            assert!(proj.distance_squared(&expected) < 1e-26, "{sp:?}{se:?}");
        }
    }

    #[test]
    fn derive_rejects_degenerate() {
        assert_eq!(derive_kraus(p(0.0, 0.7)), Err(Error::DegenerateProbe));
        assert!(derive_kraus(p(1.0, 0.0)).is_err());
    }
}
