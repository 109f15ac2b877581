//! The two adiabatic eliminations (signal, then pump), the closed form of the
//! averaged signal-mediated interaction and the qubit special case.

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::fock::{enumerate_basis, s, OccupationBasis};
use crate::linalg::{hs_inner, hs_norm, kron, r, CMat, Space, SpaceLabel, C64};
use crate::liouville::{effective_lindblad_with, EffectiveParams, Lindblad};

use super::averaging::{average_hamiltonian, interaction_series, signal_vacuum_block, AveragingOrder, CutoffWindows};
use super::full::{destroy, TruncationSpec};
use super::{DerivedParams, PhysicalParams, SMALLNESS};

fn pump_qutrit(pump: &CMat, qutrit: &CMat) -> CMat {
    kron(pump, qutrit)
}

fn pump_qutrit_space(n_p_max: usize, basis: &OccupationBasis) -> Space {
    Space::new(SpaceLabel::PumpQutrit, (n_p_max + 1) * basis.len())
}

/// `S = (g₂S₁₂ + g₃S₁₃)/κ_s′`.
fn signal_jump(pp: &PhysicalParams, dp: &DerivedParams, basis: &OccupationBasis) -> CMat {
    (s(basis, 1, 2) * r(pp.g_2) + s(basis, 1, 3) * r(pp.g_3)) * r(1.0 / dp.kappa_s_prime)
}

/// Operator structures of the averaged interaction on pump ⊗ qutrits, each paired with its coefficient.
fn averaged_structures(pp: &PhysicalParams, dp: &DerivedParams, n_p_max: usize, basis: &OccupationBasis) -> Vec<(&'static str, f64, CMat)> {
    let q = basis;
    let ap = destroy(n_p_max);
    let ip = CMat::identity(n_p_max + 1, n_p_max + 1);
    let iq = CMat::identity(q.len(), q.len());
    let ground = s(q, 1, 1) + &iq;
    let s12 = s(q, 1, 2);
    let s13 = s(q, 1, 3);
    let absorb = |x: &CMat| pump_qutrit(&ap.adjoint(), x) + pump_qutrit(&ap, &x.adjoint());
    vec![
        ("shift_2", -pp.g_2 * pp.g_2 / dp.detuning_2, pump_qutrit(&ip, &(&ground * s(q, 2, 2)))),
        ("shift_3", -pp.g_3 * pp.g_3 / dp.detuning_3, pump_qutrit(&ip, &(&ground * s(q, 3, 3)))),
        ("g_23", -dp.g_23, pump_qutrit(&ip, &(&ground * (s(q, 3, 2) + s(q, 2, 3))))),
        ("pump_shift", -2.0 * pp.j * pp.j / dp.detuning_s, pump_qutrit(&(ap.adjoint() * &ap), &iq)),
        ("chi_2", dp.chi_2, absorb(&(&s12 * &s12))),
        ("chi_3", dp.chi_3, absorb(&(&s13 * &s13))),
        ("chi_23", dp.chi_23, absorb(&(&s12 * &s13))),
    ]
}

/// Closed form of `⟨0_s|H_int|0_s⟩` after third-order averaging, on pump ⊗ qutrits.
pub fn averaged_interaction_closed_form(pp: &PhysicalParams, dp: &DerivedParams, n_p_max: usize, basis: &OccupationBasis) -> CMat {
    let d = (n_p_max + 1) * basis.len();
    averaged_structures(pp, dp, n_p_max, basis).into_iter().fold(CMat::zeros(d, d), |acc, (_, c, m)| acc + m * r(c))
}

#[derive(Clone, Debug)]
pub struct FirstElimination {
    pub derived: DerivedParams,
    pub qutrits: OccupationBasis,
    pub n_p_max: usize,
    /// `S` on the qutrits.
    pub s: CMat,
    /// `H_qp` with `⟨0_s|H_int|0_s⟩`, which vanishes identically.
    pub hamiltonian: CMat,
    /// Averaged replacement of `⟨0_s|H_int|0_s⟩`.
    pub averaged_interaction: CMat,
    pub epsilon1: f64,
    /// `ε₁ ≤ SMALLNESS`.
    pub controlled: bool,
}

pub fn first_elimination(pp: &PhysicalParams, n_p_max: usize, n: usize) -> Result<FirstElimination> {
    let dp = pp.derive()?;
    let q = enumerate_basis(n)?;
    let ap = destroy(n_p_max);
    let ip = CMat::identity(n_p_max + 1, n_p_max + 1);
    let iq = CMat::identity(q.len(), q.len());
    let sj = signal_jump(pp, &dp, &q);
    let qutrit_part = s(&q, 1, 1) * r(pp.omega_d / 2.0) + s(&q, 2, 2) * r(pp.omega_2) + s(&q, 3, 3) * r(pp.omega_3)
        - sj.adjoint() * &sj * r(dp.delta_s);
    let hamiltonian = pump_qutrit(&(ap.adjoint() * &ap * r(dp.delta_p_prime) + (&ap + ap.adjoint()) * r(pp.drive)), &iq) + pump_qutrit(&ip, &qutrit_part);
    Ok(FirstElimination {
        averaged_interaction: averaged_interaction_closed_form(pp, &dp, n_p_max, &q),
        derived: dp,
        qutrits: q,
        n_p_max,
        s: sj,
        hamiltonian,
        epsilon1: dp.epsilon1,
        controlled: dp.epsilon1 <= SMALLNESS,
    })
}

impl FirstElimination {
    pub fn space(&self) -> Space {
        pump_qutrit_space(self.n_p_max, &self.qutrits)
    }

    /// Pump–qutrit generator, with or without the averaged interaction.
    pub fn lindblad(&self, pp: &PhysicalParams, averaged: bool) -> Lindblad {
        let ap = destroy(self.n_p_max);
        let ip = CMat::identity(self.n_p_max + 1, self.n_p_max + 1);
        let iq = CMat::identity(self.qutrits.len(), self.qutrits.len());
        let hamiltonian = if averaged { &self.hamiltonian + &self.averaged_interaction } else { self.hamiltonian.clone() };
        Lindblad {
            space: self.space(),
            hamiltonian,
            jumps: vec![(self.derived.kappa_p_prime, pump_qutrit(&ap, &iq)), (pp.kappa_s, pump_qutrit(&ip, &self.s))],
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CoefficientMatch {
    pub name: &'static str,
    pub expected: f64,
    #[serde(with = "crate::linalg::complex_serde")]
    pub extracted: C64,
    pub relative_error: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct AveragingComparison {
    pub windows: CutoffWindows,
    pub coefficients: Vec<CoefficientMatch>,
    /// `‖block − Σ c_k B_k‖ / ‖block‖` for the fitted coefficients.
    pub residual: f64,
    /// Surviving nonzero frequencies of the average with the norm of their coefficient.
    pub oscillating: Vec<(f64, f64)>,
}

impl AveragingComparison {
    pub fn max_relative_error(&self) -> f64 {
        self.coefficients.iter().map(|c| c.relative_error).fold(self.residual, f64::max)
    }
}

/// Averages the signal-mediated interaction to third order, takes its signal-vacuum block
/// and fits it to the structures of the closed form by least squares.
pub fn averaging_comparison(pp: &PhysicalParams, tr: &TruncationSpec) -> Result<AveragingComparison> {
    tr.validate()?;
    let dp = pp.derive()?;
    let (series, windows) = interaction_series(pp, tr)?;
    let avg = average_hamiltonian(&series, AveragingOrder::Third, windows.omega0)?;
    let q = enumerate_basis(tr.n)?;
    let block = signal_vacuum_block(&avg.total, tr, q.len())?;
    let structures = averaged_structures(pp, &dp, tr.n_p_max, &q);
    let k = structures.len();
    let gram = CMat::from_fn(k, k, |a, b| hs_inner(&structures[a].2, &structures[b].2));
    let rhs = crate::linalg::CVec::from_fn(k, |a, _| hs_inner(&structures[a].2, &block));
    let coeffs = gram
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::SingularParameters("averaged structures are linearly dependent on this truncation".into()))?;
    let mut fit = CMat::zeros(block.nrows(), block.ncols());
    let mut coefficients = Vec::with_capacity(k);
    for (i, (name, expected, m)) in structures.iter().enumerate() {
        fit += m * coeffs[i];
        let scale = if *expected == 0.0 { 1.0 } else { expected.abs() };
        coefficients.push(CoefficientMatch { name, expected: *expected, extracted: coeffs[i], relative_error: (coeffs[i] - r(*expected)).norm() / scale });
    }
    let norm = hs_norm(&block);
    let residual = if norm == 0.0 { 0.0 } else { hs_norm(&(block - fit)) / norm };
    Ok(AveragingComparison { windows, coefficients, residual, oscillating: avg.residual })
}

#[derive(Clone, Debug)]
pub struct SecondElimination {
    pub derived: DerivedParams,
    pub qutrits: OccupationBasis,
    pub s: CMat,
    pub s_q: CMat,
    pub hamiltonian: CMat,
    pub kappa_s: f64,
    pub epsilon2: f64,
    /// `ε₂ ≤ SMALLNESS`.
    pub controlled: bool,
}

pub fn second_elimination(pp: &PhysicalParams, dp: &DerivedParams, n: usize) -> Result<SecondElimination> {
    if !(dp.kappa_p_prime > 0.0) {
        return invalid("κ_p′ must be positive");
    }
    let q = enumerate_basis(n)?;
    let iq = CMat::identity(q.len(), q.len());
    let s11 = s(&q, 1, 1);
    let s12 = s(&q, 1, 2);
    let s13 = s(&q, 1, 3);
    let s_q = (&s12 * &s12 * r(dp.chi_2) + &s13 * &s13 * r(dp.chi_3) + &s12 * &s13 * r(dp.chi_23)) * r(1.0 / dp.kappa_p_dprime);
    let mut h = &s11 * r(pp.omega_d / 2.0);
    for (j, xi, omega) in [(2, dp.xi_2, pp.omega_2), (3, dp.xi_3, pp.omega_3)] {
        h += (&iq * r(xi) + &s11 * r(xi - omega)) * s(&q, j, j);
    }
    h -= (&s11 + &iq) * (s(&q, 3, 2) + s(&q, 2, 3)) * r(dp.xi_23);
    h -= s_q.adjoint() * &s_q * r(dp.delta_p_dprime);
    h += &s_q * dp.alpha_q.conj() + s_q.adjoint() * dp.alpha_q;
    Ok(SecondElimination {
        s: signal_jump(pp, dp, &q),
        derived: *dp,
        qutrits: q,
        s_q,
        hamiltonian: h,
        kappa_s: pp.kappa_s,
        epsilon2: dp.epsilon2,
        controlled: dp.epsilon2 <= SMALLNESS,
    })
}

impl SecondElimination {
    pub fn lindblad(&self) -> Lindblad {
        Lindblad {
            space: self.qutrits.space(),
            hamiltonian: self.hamiltonian.clone(),
            jumps: vec![(self.kappa_s, self.s.clone()), (self.derived.kappa_p_prime, self.s_q.clone())],
        }
    }
}

/// Qubit parameters next to their values under the approximations of the earlier two-photon model.
#[derive(Clone, Debug, Serialize)]
pub struct QubitIdentification {
    pub kappa1: f64,
    /// `κ_s g²/δ_s²`.
    pub kappa1_limit: f64,
    pub kappa2: f64,
    /// `4χ²/κ_p`.
    pub kappa2_limit: f64,
    #[serde(with = "crate::linalg::complex_serde")]
    pub alpha0: C64,
    /// `−2iΩ_dχ/κ_p`.
    #[serde(with = "crate::linalg::complex_serde")]
    pub alpha0_limit: C64,
    /// `4χ²/κ_p′` and `−2iΩ_dχ/κ_p′`: equal to `κ₂` and `α₀` exactly when `δ_p″ = 0`.
    pub kappa2_resonant: f64,
    #[serde(with = "crate::linalg::complex_serde")]
    pub alpha0_resonant: C64,
    pub delta1: f64,
    /// Ratios that must be small for the identification: `|κ_p′−κ_p|/κ_p`, `κ_s/(2|δ_s|)`,
    /// `2|δ_p″|/κ_p′`, `|ω_d−ω_p|/ω_p`, `|ω_d−2ω_q|/ω_d`.
    pub conditions: Vec<(&'static str, f64)>,
}

impl QubitIdentification {
    pub fn max_condition(&self) -> f64 {
        self.conditions.iter().map(|(_, v)| *v).fold(0.0, f64::max)
    }

    /// Largest relative deviation of `κ₁, κ₂, α₀` from their limit forms.
    pub fn max_deviation(&self) -> f64 {
        let rel = |a: f64, b: f64| if b == 0.0 { a.abs() } else { (a - b).abs() / b.abs() };
        let alpha = if self.alpha0_limit.norm() == 0.0 { self.alpha0.norm() } else { (self.alpha0 - self.alpha0_limit).norm() / self.alpha0_limit.norm() };
        rel(self.kappa1, self.kappa1_limit).max(rel(self.kappa2, self.kappa2_limit)).max(alpha)
    }
}

#[derive(Clone, Debug)]
pub struct QubitReduction {
    pub params: EffectiveParams,
    /// The qutrit occupation basis; the qubit states are those with `n₃ = 0`.
    pub qutrits: OccupationBasis,
    /// Positions of the qubit states within `qutrits`.
    pub qubit_states: Vec<usize>,
    pub s11: CMat,
    pub s12: CMat,
    /// `ω_d/2 S₁₁ + (ω_q − ξ − ξS₁₁)S₂₂ + δ(S₁₂²)†S₁₂² + α₀*S₁₂² + α₀(S₁₂²)†`.
    pub hamiltonian: CMat,
    pub identification: QubitIdentification,
}

pub fn qubit_reduction(pp: &PhysicalParams, n: usize) -> Result<QubitReduction> {
    if pp.omega_3 != 0.0 || pp.g_3 != 0.0 {
        return invalid("the qubit case needs omega_3 = g_3 = 0");
    }
    let dp = pp.derive()?;
    let g = pp.g_2;
    let omega_q = pp.omega_2;
    let chi = dp.chi_2;
    let kappa1 = pp.kappa_s * g * g / (dp.kappa_s_prime * dp.kappa_s_prime);
    let kappa2 = dp.kappa_p_prime * chi * chi / (dp.kappa_p_dprime * dp.kappa_p_dprime);
    let xi = omega_q - dp.xi_2;
    let params = EffectiveParams {
        kappa1,
        kappa2,
        xi,
        delta: -dp.delta_p_dprime * kappa2 / dp.kappa_p_prime,
        delta1: pp.omega_d / 2.0 - omega_q,
        alpha0: dp.alpha_p * chi,
    };
    params.validate()?;

    let q = enumerate_basis(n)?;
    let qubit_states: Vec<usize> = q.states().iter().enumerate().filter(|(_, o)| o[2] == 0).map(|(i, _)| i).collect();
    let restrict = |m: &CMat| CMat::from_fn(qubit_states.len(), qubit_states.len(), |i, j| m[(qubit_states[i], qubit_states[j])]);
    let s11 = restrict(&s(&q, 1, 1));
    let s12 = restrict(&s(&q, 1, 2));
    let s22 = restrict(&s(&q, 2, 2));
    let id = CMat::identity(qubit_states.len(), qubit_states.len());
    let s12sq = &s12 * &s12;
    let hamiltonian = &s11 * r(pp.omega_d / 2.0)
        + (&id * r(omega_q - xi) - &s11 * r(xi)) * &s22
        + s12sq.adjoint() * &s12sq * r(params.delta)
        + &s12sq * params.alpha0.conj()
        + s12sq.adjoint() * params.alpha0;

    let identification = QubitIdentification {
        kappa1,
        kappa1_limit: pp.kappa_s * g * g / (dp.delta_s * dp.delta_s),
        kappa2,
        kappa2_limit: 4.0 * chi * chi / pp.kappa_p,
        alpha0: params.alpha0,
        alpha0_limit: C64::new(0.0, -2.0 * pp.drive * chi / pp.kappa_p),
        kappa2_resonant: 4.0 * chi * chi / dp.kappa_p_prime,
        alpha0_resonant: C64::new(0.0, -2.0 * pp.drive * chi / dp.kappa_p_prime),
        delta1: params.delta1,
        conditions: vec![
            ("kappa_p_shift", (dp.kappa_p_prime - pp.kappa_p).abs() / pp.kappa_p),
            ("signal_linewidth", pp.kappa_s / (2.0 * dp.delta_s.abs())),
            ("pump_detuning", 2.0 * dp.delta_p_dprime.abs() / dp.kappa_p_prime),
            ("drive_pump_mismatch", (pp.omega_d - pp.omega_p).abs() / pp.omega_p),
            ("two_photon_mismatch", (pp.omega_d - 2.0 * omega_q).abs() / pp.omega_d),
        ],
    };
    Ok(QubitReduction { params, qutrits: q, qubit_states, s11, s12, hamiltonian, identification })
}

impl QubitReduction {
    pub fn space(&self) -> Space {
        Space::new(SpaceLabel::Qubits(self.qutrits.n_particles()), self.qubit_states.len())
    }

    pub fn lindblad(&self) -> Lindblad {
        Lindblad {
            space: self.space(),
            hamiltonian: self.hamiltonian.clone(),
            jumps: vec![(self.params.kappa1, self.s12.clone()), (self.params.kappa2, &self.s12 * &self.s12)],
        }
    }

    /// The effective cat-code generator built on the qubit states with `S₋ = S₁₂`.
    pub fn effective_form(&self) -> Result<Lindblad> {
        effective_lindblad_with(self.space(), &self.s11, &self.s12, &self.params)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::lowering_matrix;
    use crate::linalg::max_abs;
    use crate::liouville::liouvillian_effective;
    use crate::physmodel::full::{field_qutrit_operator, TruncationSpec};
    use crate::physmodel::tests::{generic_point, random_point};
    use crate::testutil::rng;

    fn qubit_point() -> PhysicalParams {
        PhysicalParams { omega_3: 0.0, g_3: 0.0, omega_p: 2.02, ..generic_point() }
    }

    #[test]
    fn first_elimination_without_parametric_coupling() {
        let p = PhysicalParams { j: 0.0, ..generic_point() };
        let fe = first_elimination(&p, 2, 2).unwrap();
        assert_eq!(fe.derived.kappa_p_prime, p.kappa_p);
        assert_eq!(fe.derived.delta_p_prime, p.omega_p - p.omega_d);
        assert!(fe.controlled);
        let l = fe.lindblad(&p, true);
        assert_eq!(l.jumps[0].0, p.kappa_p);
    }

    #[test]
    fn interaction_vanishes_in_signal_vacuum() {
        let p = generic_point();
        let dp = p.derive().unwrap();
        let tr = TruncationSpec { n_p_max: 2, n_s_max: 3, n: 2, max_excitations: None };
        let q = enumerate_basis(2).unwrap();
        let (ap, as_) = (destroy(2), destroy(3));
        let ip = CMat::identity(3, 3);
        let iq = CMat::identity(q.len(), q.len());
        let sj = signal_jump(&p, &dp, &q);
        let x = field_qutrit_operator(&ap, &(as_.adjoint() * as_.adjoint()), &iq) * r(p.j)
            + field_qutrit_operator(&ip, &as_.adjoint(), &sj) * r(dp.kappa_s_prime);
        let h_int = &x + x.adjoint();
        assert!(max_abs(&h_int) > 0.1);
        assert_eq!(max_abs(&signal_vacuum_block(&h_int, &tr, q.len()).unwrap()), 0.0);
    }

    #[test]
    fn signal_induced_shifts_expand() {
        let p = generic_point();
        let dp = p.derive().unwrap();
        for n in [2, 3] {
            let q = enumerate_basis(n).unwrap();
            let sj = signal_jump(&p, &dp, &q);
            let lhs = sj.adjoint() * &sj * r(-dp.delta_s);
            let b1b1dag = s(&q, 1, 1) + CMat::identity(q.len(), q.len());
            let inner = s(&q, 2, 2) * r(p.g_2 * p.g_2) + s(&q, 3, 3) * r(p.g_3 * p.g_3) + (s(&q, 2, 3) + s(&q, 3, 2)) * r(p.g_2 * p.g_3);
            let rhs = b1b1dag * inner * r(-dp.delta_s / (dp.kappa_s_prime * dp.kappa_s_prime));
            assert!(max_abs(&(lhs - rhs)) < 1e-15);
        }
    }

    #[test]
    fn averaged_interaction_is_hermitian() {
        let p = generic_point();
        let fe = first_elimination(&p, 3, 3).unwrap();
        assert!(max_abs(&(&fe.averaged_interaction - fe.averaged_interaction.adjoint())) < 1e-16);
        assert!(max_abs(&(&fe.hamiltonian - fe.hamiltonian.adjoint())) < 1e-15);
    }

    #[test]
    fn third_order_average_matches_closed_form() {
        let p = generic_point();
        let tr = TruncationSpec { n_p_max: 2, n_s_max: 3, n: 2, max_excitations: None };
        let cmp = averaging_comparison(&p, &tr).unwrap();
        for c in &cmp.coefficients {
            assert!(c.relative_error < 1e-10, "{} expected {} got {}", c.name, c.expected, c.extracted);
        }
        assert!(cmp.residual < 1e-10, "residual {}", cmp.residual);
        assert!(averaging_comparison(&p, &TruncationSpec { n_s_max: 2, ..tr }).is_err());
    }

    #[test]
    fn symmetric_second_elimination_is_effective_generator() {
        let mut g = rng(41);
        for _ in 0..4 {
            let p = random_point(&mut g, true);
            let dp = p.derive().unwrap();
            let ep = dp.effective().unwrap();
            for n in [2, 3] {
                let se = second_elimination(&p, &dp, n).unwrap();
                let sm = lowering_matrix(&se.qutrits).into_matrix();
                let sym = dp.symmetric.unwrap();
                assert!(max_abs(&(&se.s - &sm * r((sym.kappa1 / p.kappa_s).sqrt()))) < 1e-14);
                let sign = sym.chi.signum();
                assert!(max_abs(&(&se.s_q - &sm * &sm * r(sign * (sym.kappa2 / dp.kappa_p_prime).sqrt()))) < 1e-14);
                let a = se.lindblad().to_superoperator();
                let b = liouvillian_effective(&se.qutrits, &ep);
                let scale = max_abs(b.matrix()).max(1.0);
                assert!(max_abs(&(a.matrix() - b.matrix())) < 1e-12 * scale);
            }
        }
    }

    #[test]
    fn symmetric_parameter_identities() {
        let p = PhysicalParams::symmetric(1.0, 80.0, 2.05, 2.0, 0.3, 1.1, 0.8, 1.0, 40.0);
        let dp = p.derive().unwrap();
        let sym = dp.symmetric.unwrap();
        assert_eq!(dp.chi_2, dp.chi_3);
        assert!((dp.chi_23 - 2.0 * sym.chi).abs() < 1e-15 * sym.chi.abs().max(1e-300) * 10.0);
        assert!((dp.xi_23 - sym.xi).abs() < 1e-15);
        assert!((dp.xi_2 - (1.0 - sym.xi)).abs() < 1e-15);
        let aq = sym.alpha0 * r((dp.kappa_p_prime / sym.kappa2).sqrt());
        assert!((dp.alpha_q - aq * sym.chi.signum()).norm() < 1e-13 * dp.alpha_q.norm());
    }

    #[test]
    fn undriven_effective_model_has_no_drive() {
        let p = PhysicalParams { drive: 0.0, ..PhysicalParams::symmetric(1.0, 80.0, 2.05, 2.0, 0.3, 1.1, 0.8, 1.0, 40.0) };
        let dp = p.derive().unwrap();
        assert_eq!(dp.alpha_p, C64::new(0.0, 0.0));
        assert_eq!(dp.effective().unwrap().alpha0, C64::new(0.0, 0.0));
        let se = second_elimination(&p, &dp, 2).unwrap();
        // Without drive the Hamiltonian conserves the number of excited qutrits.
        let q = &se.qutrits;
        for (i, a) in q.states().iter().enumerate() {
            for (j, b) in q.states().iter().enumerate() {
                if a[0] != b[0] {
                    assert_eq!(se.hamiltonian[(i, j)], C64::new(0.0, 0.0));
                }
            }
        }
    }

    #[test]
    fn qubit_rearrangement_identity() {
        let p = qubit_point();
        for n in [2, 3] {
            let qr = qubit_reduction(&p, n).unwrap();
            let id = CMat::identity(qr.qubit_states.len(), qr.qubit_states.len());
            let s22 = &id * r(n as f64) - &qr.s11;
            let xi = qr.params.xi;
            let lhs = &qr.s11 * r(p.omega_d / 2.0) + (&id * r(p.omega_2 - xi) - &qr.s11 * r(xi)) * &s22;
            let rhs = &id * r(p.omega_2 * n as f64) + &qr.s11 * r(qr.params.delta1) - qr.s12.adjoint() * &qr.s12 * r(xi);
            assert!(max_abs(&(lhs - rhs)) < 1e-13);
        }
    }

    #[test]
    fn qubit_generator_has_effective_form() {
        let p = qubit_point();
        for n in [2, 3, 4] {
            let qr = qubit_reduction(&p, n).unwrap();
            assert_eq!(qr.space().dim, n + 1);
            let a = qr.lindblad().to_superoperator();
            let b = qr.effective_form().unwrap().to_superoperator();
            assert!(max_abs(&(a.matrix() - b.matrix())) < 1e-12);
        }
    }

    #[test]
    fn qubit_generator_is_restricted_second_elimination() {
        let p = qubit_point();
        let dp = p.derive().unwrap();
        let se = second_elimination(&p, &dp, 3).unwrap();
        let qr = qubit_reduction(&p, 3).unwrap();
        let k = &qr.qubit_states;
        let restrict = |m: &CMat| CMat::from_fn(k.len(), k.len(), |i, j| m[(k[i], k[j])]);
        assert!(max_abs(&(restrict(&se.hamiltonian) - &qr.hamiltonian)) < 1e-13);
        let l = se.lindblad();
        assert!(max_abs(&(restrict(&l.jumps[0].1) * r(l.jumps[0].0.sqrt()) - &qr.s12 * r(qr.params.kappa1.sqrt()))) < 1e-14);
        let sq = restrict(&l.jumps[1].1) * r(l.jumps[1].0.sqrt());
        let s12sq = &qr.s12 * &qr.s12 * r(qr.params.kappa2.sqrt());
        assert!(max_abs(&(sq.adjoint() * &sq - s12sq.adjoint() * &s12sq)) < 1e-14);
    }

    #[test]
    fn qubit_preconditions() {
        assert!(qubit_reduction(&generic_point(), 2).is_err());
        let p = PhysicalParams { omega_d: 2.0 * qubit_point().omega_2, ..qubit_point() };
        assert_eq!(qubit_reduction(&p, 2).unwrap().identification.delta1, 0.0);
    }

    #[test]
    fn qubit_identification_tightens() {
        // δ_s ≫ κ_s, small J so that κ_p′ ≈ κ_p, and ω_d = ω_p = 2ω_q.
        let point = |scale: f64| PhysicalParams {
            omega_p: 2.0,
            omega_s: 40.0 * scale,
            omega_2: 1.0,
            omega_3: 0.0,
            omega_d: 2.0,
            drive: 0.2,
            j: 1.0,
            g_2: 1.0,
            g_3: 0.0,
            kappa_p: 1.0,
            kappa_s: 4.0,
        };
        let mut last = (f64::INFINITY, f64::INFINITY);
        for scale in [1.0, 4.0, 16.0] {
            let id = qubit_reduction(&point(scale), 2).unwrap().identification;
            let now = (id.max_condition(), id.max_deviation());
            assert!(now.0 < last.0 && now.1 < last.1, "{now:?} after {last:?}");
            last = now;
        }
        assert!(last.1 < 0.01);
    }

    #[test]
    fn resonant_pump_identifications_are_exact() {
        let mut p = PhysicalParams { omega_d: 2.0, ..qubit_point() };
        for _ in 0..50 {
            let dp = p.derive().unwrap();
            p.omega_p -= dp.delta_p_dprime;
        }
        let id = qubit_reduction(&p, 2).unwrap().identification;
        assert!(p.derive().unwrap().delta_p_dprime.abs() < 1e-15);
        assert!((id.kappa2 - id.kappa2_resonant).abs() < 1e-14 * id.kappa2);
        assert!((id.alpha0 - id.alpha0_resonant).norm() < 1e-14 * id.alpha0.norm());
    }

    #[test]
    fn epsilon_flags() {
        let p = generic_point();
        let dp = p.derive().unwrap();
        let se = second_elimination(&p, &dp, 2).unwrap();
        assert_eq!(se.epsilon2, dp.epsilon2);
        let loose = PhysicalParams { kappa_s: 2.0, ..p };
        assert!(!first_elimination(&loose, 1, 2).unwrap().controlled);
    }
}
