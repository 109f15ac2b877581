//! Superoperators on column-stacked density matrices: the effective cat-code
//! Liouvillian, collective dephasing, steady-state kernels and dark-state
//! diagnostics.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::fock::{lowering_matrix, s, OccupationBasis};
use crate::linalg::{
    check_space, commutator, hermiticity_defect, hs_norm, kron, max_abs, min_eigenvalue,
    null_space, r, unvectorize, vectorize, CMat, Operator, Space, StateVector, C64, I,
};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EffectiveParams {
    pub kappa1: f64,
    pub kappa2: f64,
    pub xi: f64,
    pub delta: f64,
    pub delta1: f64,
    #[serde(with = "crate::linalg::complex_serde")]
    pub alpha0: C64,
}

impl EffectiveParams {
    pub fn validate(&self) -> Result<()> {
        let all = [self.kappa1, self.kappa2, self.xi, self.delta, self.delta1, self.alpha0.re, self.alpha0.im];
        if all.iter().any(|x| !x.is_finite()) {
            return invalid("effective parameters must be finite");
        }
        if self.kappa1 < 0.0 {
            return invalid("kappa1 must be nonnegative");
        }
        if self.kappa2 < 0.0 {
            return invalid("kappa2 must be nonnegative");
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DephasingParams {
    pub gamma1: f64,
    pub gamma23: f64,
    pub gamma2: f64,
    pub gamma3: f64,
}

impl DephasingParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("gamma1", self.gamma1), ("gamma23", self.gamma23), ("gamma2", self.gamma2), ("gamma3", self.gamma3)] {
            if !(v >= 0.0 && v.is_finite()) {
                return invalid(format!("{name} must be a finite nonnegative rate"));
            }
        }
        Ok(())
    }
}

/// `D² × D²` matrix acting on `vec(ρ)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Superoperator {
    space: Space,
    matrix: CMat,
}

impl Superoperator {
    pub fn new(space: Space, matrix: CMat) -> Result<Self> {
        let d2 = space.dim * space.dim;
        if matrix.nrows() != d2 || matrix.ncols() != d2 {
            return Err(Error::DimensionMismatch { expected: d2, got: matrix.nrows() });
        }
        Ok(Self { space, matrix })
    }

    pub fn zeros(space: Space) -> Self {
        let d2 = space.dim * space.dim;
        Self { space, matrix: CMat::zeros(d2, d2) }
    }

    pub fn space(&self) -> Space {
        self.space
    }

    /// Hilbert-space dimension `D`.
    pub fn dim(&self) -> usize {
        self.space.dim
    }

    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMat {
        self.matrix
    }

    pub fn add(&self, other: &Superoperator) -> Result<Superoperator> {
        check_space(self.space, other.space)?;
        Ok(Self { space: self.space, matrix: &self.matrix + &other.matrix })
    }

    pub fn scale(&self, s: f64) -> Superoperator {
        Self { space: self.space, matrix: &self.matrix * r(s) }
    }

    /// `unvec(L · vec(m))` without any checks.
    pub fn act(&self, m: &CMat) -> CMat {
        unvectorize(&(&self.matrix * vectorize(m)), self.dim())
    }
}

/// Density matrix on a tagged space; Hermitian to `1e-10` by construction.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    space: Space,
    matrix: CMat,
}

impl DensityMatrix {
    pub fn new(space: Space, matrix: CMat) -> Result<Self> {
        if matrix.nrows() != space.dim || matrix.ncols() != space.dim {
            return Err(Error::DimensionMismatch { expected: space.dim, got: matrix.nrows() });
        }
        if hermiticity_defect(&matrix) >= 1e-10 {
            return invalid("density matrix is not Hermitian");
        }
        Ok(Self { space, matrix })
    }

    /// Checks trace 1 to `1e-10` and minimum eigenvalue `≥ −1e-8`.
    pub fn physical(space: Space, matrix: CMat) -> Result<Self> {
        let rho = Self::new(space, matrix)?;
        rho.check_physical()?;
        Ok(rho)
    }

    pub fn pure(psi: &StateVector) -> Self {
        Self { space: psi.space(), matrix: psi.projector() }
    }

    pub fn check_physical(&self) -> Result<()> {
        let tr = self.matrix.trace();
        if (tr - r(1.0)).norm() >= 1e-10 {
            return Err(Error::NonPhysical(format!("trace {tr}")));
        }
        let lam = min_eigenvalue(&self.matrix);
        if lam < -1e-8 {
            return Err(Error::NonPhysical(format!("minimum eigenvalue {lam:e}")));
        }
        Ok(())
    }

    pub fn space(&self) -> Space {
        self.space
    }

    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMat {
        self.matrix
    }
}

/// Superoperator of `ρ ↦ A ρ B`.
pub fn sandwich(a: &CMat, b: &CMat) -> CMat {
    kron(&b.transpose(), a)
}

/// Superoperator of `ρ ↦ −i[H, ρ]`.
pub fn hamiltonian_superop(h: &Operator) -> Superoperator {
    let id = CMat::identity(h.dim(), h.dim());
    let m = (sandwich(h.matrix(), &id) - sandwich(&id, h.matrix())) * (-I);
    Superoperator { space: h.space(), matrix: m }
}

/// Superoperator of `𝒟(A)ρ = AρA† − ½{A†A, ρ}`.
pub fn dissipator(a: &Operator) -> Superoperator {
    let id = CMat::identity(a.dim(), a.dim());
    let ad = a.matrix().adjoint();
    let ada = &ad * a.matrix();
    let m = sandwich(a.matrix(), &ad) - (sandwich(&ada, &id) + sandwich(&id, &ada)) * r(0.5);
    Superoperator { space: a.space(), matrix: m }
}

/// `𝒟(A)ρ` evaluated directly in matrix form.
pub fn dissipate(a: &CMat, rho: &CMat) -> CMat {
    let ada = a.adjoint() * a;
    a * rho * a.adjoint() - (&ada * rho + rho * &ada) * r(0.5)
}

/// GKLS generator kept as `(H, [(rate, L_k)])`, evaluated in matrix form.
#[derive(Clone, Debug)]
pub struct Lindblad {
    pub space: Space,
    pub hamiltonian: CMat,
    pub jumps: Vec<(f64, CMat)>,
}

impl Lindblad {
    pub fn apply(&self, rho: &CMat) -> CMat {
        let mut out = (&self.hamiltonian * rho - rho * &self.hamiltonian) * (-I);
        for (rate, l) in &self.jumps {
            out += dissipate(l, rho) * r(*rate);
        }
        out
    }

    pub fn to_superoperator(&self) -> Superoperator {
        let h = Operator::new(self.space, self.hamiltonian.clone()).expect("square hamiltonian");
        let mut total = hamiltonian_superop(&h);
        for (rate, l) in &self.jumps {
            let op = Operator::new(self.space, l.clone()).expect("square jump");
            total.matrix += dissipator(&op).matrix * r(*rate);
        }
        total
    }
}

/// `δ₁S₁₁ − ξS₋†S₋ + δ(S₋²)†S₋² + α₀*S₋² + α₀(S₋²)†`.
pub fn hamiltonian_hq(basis: &OccupationBasis, p: &EffectiveParams) -> Operator {
    let sm = lowering_matrix(basis).into_matrix();
    let sm2 = &sm * &sm;
    let h = s(basis, 1, 1) * r(p.delta1) - sm.adjoint() * &sm * r(p.xi)
        + sm2.adjoint() * &sm2 * r(p.delta)
        + &sm2 * p.alpha0.conj()
        + sm2.adjoint() * p.alpha0;
    Operator::hermitian(basis.space(), h).expect("H_q is Hermitian by construction")
}

/// Effective cat-code generator in Lindblad form.
pub fn effective_lindblad(basis: &OccupationBasis, p: &EffectiveParams) -> Lindblad {
    let sm = lowering_matrix(basis).into_matrix();
    let sm2 = &sm * &sm;
    Lindblad {
        space: basis.space(),
        hamiltonian: hamiltonian_hq(basis, p).into_matrix(),
        jumps: vec![(p.kappa1, sm), (p.kappa2, sm2)],
    }
}

/// The same generator with a caller-supplied ground-level number operator and lowering operator,
/// e.g. `S₋ = S₁₂` on an ensemble of two-level systems.
pub fn effective_lindblad_with(space: Space, s11: &CMat, sm: &CMat, p: &EffectiveParams) -> Result<Lindblad> {
    for m in [s11, sm] {
        if m.nrows() != space.dim || m.ncols() != space.dim {
            return Err(Error::DimensionMismatch { expected: space.dim, got: m.nrows() });
        }
    }
    let sm2 = sm * sm;
    let h = s11 * r(p.delta1) - sm.adjoint() * sm * r(p.xi)
        + sm2.adjoint() * &sm2 * r(p.delta)
        + &sm2 * p.alpha0.conj()
        + sm2.adjoint() * p.alpha0;
    Ok(Lindblad { space, hamiltonian: h, jumps: vec![(p.kappa1, sm.clone()), (p.kappa2, sm2)] })
}

/// `−i[H_q, ·] + κ₁𝒟(S₋) + κ₂𝒟(S₋²)`.
pub fn liouvillian_effective(basis: &OccupationBasis, p: &EffectiveParams) -> Superoperator {
    let sp = basis.space();
    let sm = lowering_matrix(basis);
    let sm2 = sm.pow(2);
    let mut l = hamiltonian_superop(&hamiltonian_hq(basis, p));
    l.matrix += dissipator(&sm).matrix * r(p.kappa1) + dissipator(&sm2).matrix * r(p.kappa2);
    debug_assert_eq!(l.space, sp);
    l
}

/// Correlated `Γ₁𝒟(S₁₁) + Γ₂₃𝒟(S₂₂+S₃₃)` and uncorrelated `Σ_j Γ_j𝒟(S_jj)` collective dephasing.
pub fn dephasing_superops(basis: &OccupationBasis, d: &DephasingParams) -> (Superoperator, Superoperator) {
    let sp = basis.space();
    let op = |m: CMat| Operator::new(sp, m).expect("square");
    let (s11, s22, s33) = (s(basis, 1, 1), s(basis, 2, 2), s(basis, 3, 3));
    let cd = dissipator(&op(s11.clone())).matrix * r(d.gamma1)
        + dissipator(&op(&s22 + &s33)).matrix * r(d.gamma23);
    let ud = dissipator(&op(s11)).matrix * r(d.gamma1)
        + dissipator(&op(s22)).matrix * r(d.gamma2)
        + dissipator(&op(s33)).matrix * r(d.gamma3);
    (Superoperator { space: sp, matrix: cd }, Superoperator { space: sp, matrix: ud })
}

/// `𝒫 = Π₀ᵀ ⊗ Π₀`.
pub fn parity_superop(basis: &OccupationBasis) -> Superoperator {
    let p = crate::fock::parity_matrix(basis).into_matrix();
    Superoperator { space: basis.space(), matrix: sandwich(&p, &p) }
}

/// Stationary subspace of a Liouvillian.
#[derive(Clone, Debug)]
pub struct KernelReport {
    pub dimension: usize,
    /// Hilbert–Schmidt orthonormal kernel elements as `D × D` matrices.
    pub basis: Vec<CMat>,
    /// `‖L v‖` for each returned element.
    pub residuals: Vec<f64>,
    /// All singular values of `L`, descending.
    pub singular_values: Vec<f64>,
    pub gap_ratio: f64,
    /// Set when some `σ/σ_max` sits within a factor 10 of the threshold.
    pub ill_conditioned: bool,
}

pub fn steady_state_basis(l: &Superoperator, tau_rel: f64) -> Result<KernelReport> {
    let ns = null_space(l.matrix(), tau_rel)?;
    let d = l.dim();
    let residuals = ns.basis.iter().map(|v| (l.matrix() * v).norm()).collect();
    Ok(KernelReport {
        dimension: ns.dim(),
        basis: ns.basis.iter().map(|v| unvectorize(v, d)).collect(),
        residuals,
        singular_values: ns.singular_values,
        gap_ratio: ns.gap_ratio,
        ill_conditioned: ns.near_threshold,
    })
}

/// Residuals of the six conditions a dark state of the effective generator satisfies.
#[derive(Clone, Debug, Serialize)]
pub struct DarkStateReport {
    /// `‖𝒟(S₋)ρ‖, ‖[S₋†S₋,ρ]‖, ‖𝒟(S₋²)ρ‖, ‖[(S₋²)†S₋²,ρ]‖, ‖[S₁₁,ρ]‖, ‖[α₀*S₋²+α₀(S₋²)†,ρ]‖`.
    pub residuals: [f64; 6],
    pub dark: bool,
}

pub const DARK_CONDITION_LABELS: [&str; 6] = [
    "D(S-) rho",
    "[S-^dag S-, rho]",
    "D(S-^2) rho",
    "[(S-^2)^dag S-^2, rho]",
    "[S11, rho]",
    "[alpha0* S-^2 + alpha0 (S-^2)^dag, rho]",
];

pub fn dark_state_check(rho: &DensityMatrix, basis: &OccupationBasis, p: &EffectiveParams) -> Result<DarkStateReport> {
    check_space(rho.space(), basis.space())?;
    let x = rho.matrix();
    let sm = lowering_matrix(basis).into_matrix();
    let sm2 = &sm * &sm;
    let drive = &sm2 * p.alpha0.conj() + sm2.adjoint() * p.alpha0;
    let residuals = [
        hs_norm(&dissipate(&sm, x)),
        hs_norm(&commutator(&(sm.adjoint() * &sm), x)),
        hs_norm(&dissipate(&sm2, x)),
        hs_norm(&commutator(&(sm2.adjoint() * &sm2), x)),
        hs_norm(&commutator(&s(basis, 1, 1), x)),
        hs_norm(&commutator(&drive, x)),
    ];
    Ok(DarkStateReport { residuals, dark: residuals.iter().all(|&v| v < 1e-10) })
}

/// `unvec(L · vec(ρ))`, refusing generators that break Hermiticity.
pub fn apply(l: &Superoperator, rho: &DensityMatrix) -> Result<CMat> {
    check_space(l.space(), rho.space())?;
    let out = l.act(rho.matrix());
    if hermiticity_defect(&out) > 1e-10 * max_abs(&out).max(1.0) {
        return invalid("superoperator output is not Hermitian for Hermitian input");
    }
    Ok(out)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::fock::{enumerate_basis, logical_state};
    use crate::linalg::{c, hermitian_part, hs_inner, ZERO};
    use crate::testutil::{random_density, random_hermitian, random_matrix, rng};
    use proptest::prelude::*;
    use rand::Rng;

    pub(crate) fn random_params(g: &mut impl Rng) -> EffectiveParams {
        EffectiveParams {
            kappa1: g.gen_range(0.1..5.0),
            kappa2: g.gen_range(0.1..5.0),
            xi: g.gen_range(-3.0..3.0),
            delta: g.gen_range(-3.0..3.0),
            delta1: g.gen_range(-3.0..3.0),
            alpha0: c(g.gen_range(-3.0..3.0), g.gen_range(-3.0..3.0)),
        }
    }

    /// Independent matrix-form generator used to check vectorized assembly.
    fn direct(h: &CMat, jumps: &[(f64, &CMat)], rho: &CMat) -> CMat {
        let mut out = (h * rho - rho * h) * c(0.0, -1.0);
        for (k, a) in jumps {
            let ad = a.adjoint();
            out += (*a * rho * &ad - (&ad * *a * rho + rho * &ad * *a) * r(0.5)) * r(*k);
        }
        out
    }

    #[test]
    fn identity_dissipator_vanishes() {
        let b = enumerate_basis(3).unwrap();
        let d = dissipator(&Operator::identity(b.space()));
        assert!(max_abs(d.matrix()) < 1e-15);
    }

    #[test]
    fn dissipator_kills_ground_and_logical_states() {
        let b = enumerate_basis(2).unwrap();
        let d = dissipator(&lowering_matrix(&b));
        let g = DensityMatrix::pure(&b.basis_state(&[2, 0, 0]).unwrap());
        assert!(max_abs(&d.act(g.matrix())) < 1e-15);
        for n in 2..=6 {
            let b = enumerate_basis(n).unwrap();
            let d = dissipator(&lowering_matrix(&b));
            for bit in 0..2 {
                let rho = logical_state(&b, bit).unwrap().projector();
                assert!(max_abs(&d.act(&rho)) < 1e-12);
            }
        }
    }

    #[test]
    fn hq_examples() {
        let mut g = rng(11);
        for n in 2..=5 {
            let b = enumerate_basis(n).unwrap();
            let p = random_params(&mut g);
            let h = hamiltonian_hq(&b, &p).into_matrix();
            let par = crate::fock::parity_matrix(&b).into_matrix();
            assert!(max_abs(&commutator(&par, &h)) < 1e-12);
            for bit in 0..2u8 {
                let v = logical_state(&b, bit).unwrap().amplitudes().clone();
                assert!((&h * &v - &v * r(p.delta1 * bit as f64)).norm() < 1e-12);
            }
        }
        let b = enumerate_basis(3).unwrap();
        let p = EffectiveParams { kappa1: 1.0, kappa2: 1.0, xi: 0.0, delta: 0.0, delta1: 0.7, alpha0: ZERO };
        let h = hamiltonian_hq(&b, &p).into_matrix();
        assert_eq!(h, b.diagonal(|s| 0.7 * s[0] as f64));
    }

    #[test]
    fn apply_matches_direct_evaluation() {
        let mut g = rng(5);
        let b = enumerate_basis(3).unwrap();
        for _ in 0..20 {
            let p = random_params(&mut g);
            let (cd, ud) = dephasing_superops(&b, &DephasingParams { gamma1: 0.3, gamma23: 0.2, gamma2: 0.1, gamma3: 0.4 });
            let l = liouvillian_effective(&b, &p).add(&cd).unwrap().add(&ud).unwrap();
            let rho = random_density(&mut g, b.len());
            let out = apply(&l, &DensityMatrix::new(b.space(), rho.clone()).unwrap()).unwrap();
            let sm = lowering_matrix(&b).into_matrix();
            let sm2 = &sm * &sm;
            let h = hamiltonian_hq(&b, &p).into_matrix();
            let (s11, s22, s33) = (s(&b, 1, 1), s(&b, 2, 2), s(&b, 3, 3));
            let s23 = &s22 + &s33;
            let expect = direct(
                &h,
                &[(p.kappa1, &sm), (p.kappa2, &sm2), (0.3, &s11), (0.2, &s23), (0.3, &s11), (0.1, &s22), (0.4, &s33)],
                &rho,
            );
            assert!(max_abs(&(&out - &expect)) < 1e-12);
            assert!(out.trace().norm() < 1e-12);
            let lind = effective_lindblad(&b, &p);
            assert!(max_abs(&(lind.apply(&rho) - liouvillian_effective(&b, &p).act(&rho))) < 1e-12);
        }
        let zero = Superoperator::zeros(b.space());
        let rho = DensityMatrix::new(b.space(), random_hermitian(&mut g, b.len())).unwrap();
        assert_eq!(max_abs(&apply(&zero, &rho).unwrap()), 0.0);
    }

    #[test]
    fn apply_rejects_space_mismatch() {
        let b2 = enumerate_basis(2).unwrap();
        let b3 = enumerate_basis(3).unwrap();
        let l = Superoperator::zeros(b2.space());
        let rho = DensityMatrix::pure(&logical_state(&b3, 0).unwrap());
        assert!(apply(&l, &rho).is_err());
    }

    #[test]
    fn trace_functional_is_left_null_vector() {
        let mut g = rng(8);
        for n in 2..=4 {
            let b = enumerate_basis(n).unwrap();
            let l = liouvillian_effective(&b, &random_params(&mut g));
            let id = vectorize(&CMat::identity(b.len(), b.len()));
            let row = id.transpose() * l.matrix();
            assert!(row.iter().all(|z| z.norm() < 1e-10));
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn parity_symmetry_and_hermiticity(seed in any::<u64>(), n in 2usize..5) {
            let mut g = rng(seed);
            let b = enumerate_basis(n).unwrap();
            let l = liouvillian_effective(&b, &random_params(&mut g));
            let p = parity_superop(&b);
            prop_assert!(max_abs(&(p.matrix() * l.matrix() - l.matrix() * p.matrix())) < 1e-12);
            let pl = p.matrix() * l.matrix() * p.matrix();
            prop_assert!(max_abs(&(pl - l.matrix())) < 1e-12);
            let rho = random_hermitian(&mut g, b.len());
            let out = l.act(&rho);
            prop_assert!(hermiticity_defect(&out) < 1e-12);
        }

        #[test]
        fn logical_projectors_are_stationary(seed in any::<u64>(), n in 2usize..7) {
            let mut g = rng(seed);
            let b = enumerate_basis(n).unwrap();
            let p = random_params(&mut g);
            let l = liouvillian_effective(&b, &p);
            let zero = logical_state(&b, 0).unwrap();
            let one = logical_state(&b, 1).unwrap();
            for st in [&zero, &one] {
                prop_assert!(hs_norm(&l.act(&st.projector())) < 1e-10);
            }
            // Coherences are stationary only when δ₁ = 0.
            let coh = zero.outer(&one);
            prop_assert!(hs_norm(&l.act(&coh)) > 1e-6 * p.delta1.abs());
            let p0 = EffectiveParams { delta1: 0.0, ..p };
            let l0 = liouvillian_effective(&b, &p0);
            prop_assert!(hs_norm(&l0.act(&coh)) < 1e-10);
            prop_assert!(hs_norm(&l0.act(&one.outer(&zero))) < 1e-10);
        }
    }

    #[test]
    fn collective_dephasing_taxonomy() {
        let b = enumerate_basis(2).unwrap();
        let d = DephasingParams { gamma1: 0.3, gamma23: 0.5, gamma2: 0.2, gamma3: 0.7 };
        let (cd, ud) = dephasing_superops(&b, &d);
        for bit in 0..2 {
            let rho = logical_state(&b, bit).unwrap().projector();
            assert!(hs_norm(&cd.act(&rho)) < 1e-12);
        }
        let one = logical_state(&b, 1).unwrap().projector();
        assert!(hs_norm(&ud.act(&one)) > 1e-3);
        let eq = DephasingParams { gamma1: 0.0, gamma23: 0.0, gamma2: 0.4, gamma3: 0.4 };
        assert!(hs_norm(&dephasing_superops(&b, &eq).1.act(&one)) > 1e-3);
        let (cz, uz) = dephasing_superops(&b, &DephasingParams::default());
        assert_eq!(max_abs(cz.matrix()), 0.0);
        assert_eq!(max_abs(uz.matrix()), 0.0);
    }

    #[test]
    fn kernel_dimensions() {
        let mut g = rng(21);
        for n in 2..=4 {
            let b = enumerate_basis(n).unwrap();
            let mut p = random_params(&mut g);
            p.delta1 = 0.0;
            let k = steady_state_basis(&liouvillian_effective(&b, &p), 1e-10).unwrap();
            assert_eq!(k.dimension, n + 3, "n={n}");
            assert!(k.gap_ratio > 1e3);
            assert!(k.residuals.iter().all(|&x| x < 1e-10));
            for i in 0..k.dimension {
                for j in 0..k.dimension {
                    let ip = hs_inner(&k.basis[i], &k.basis[j]);
                    let expect = if i == j { 1.0 } else { 0.0 };
                    assert!((ip - r(expect)).norm() < 1e-10);
                }
            }
        }
        let b = enumerate_basis(2).unwrap();
        let p = EffectiveParams { kappa1: 0.0, kappa2: 0.0, xi: 0.0, delta: 0.0, delta1: 0.0, alpha0: ZERO };
        let k = steady_state_basis(&liouvillian_effective(&b, &p), 1e-10).unwrap();
        assert_eq!(k.dimension, 36);
        assert!(steady_state_basis(&liouvillian_effective(&b, &p), -1.0).is_err());
    }

    #[test]
    fn dark_state_examples() {
        let mut g = rng(2);
        let b = enumerate_basis(2).unwrap();
        let p = random_params(&mut g);
        let zero = DensityMatrix::pure(&logical_state(&b, 0).unwrap());
        let rep = dark_state_check(&zero, &b, &p).unwrap();
        assert!(rep.dark && rep.residuals.iter().all(|&x| x < 1e-12));
        let ground = DensityMatrix::pure(&b.basis_state(&[2, 0, 0]).unwrap());
        let rep = dark_state_check(&ground, &b, &p).unwrap();
        assert!(!rep.dark && rep.residuals[5] > 1e-3);
        let one = logical_state(&b, 1).unwrap().projector();
        let mix = DensityMatrix::new(b.space(), (zero.matrix() + one) * r(0.5)).unwrap();
        assert!(dark_state_check(&mix, &b, &p).unwrap().dark);
    }

    #[test]
    fn density_matrix_checks() {
        let mut g = rng(4);
        let b = enumerate_basis(2).unwrap();
        let a = random_matrix(&mut g, 6);
        assert!(DensityMatrix::new(b.space(), a.clone()).is_err());
        assert!(DensityMatrix::physical(b.space(), hermitian_part(&a)).is_err());
        assert!(DensityMatrix::physical(b.space(), random_density(&mut g, 6)).is_ok());
        let bad = EffectiveParams { kappa1: -1.0, kappa2: 0.0, xi: 0.0, delta: 0.0, delta1: 0.0, alpha0: ZERO };
        assert!(bad.validate().is_err());
    }
}
