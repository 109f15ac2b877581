//! Two distinguishable qutrits: the symmetric embedding of the `N = 2`
//! occupation basis, local noise, mixed-symmetry states and the closed-form
//! stationary matrix `ρ₀₀`.
//!
//! Product states `|j,k⟩` have index `3(j−1) + (k−1)`; the first factor is qutrit 1.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::fock::{enumerate_basis, logical_state, OccupationBasis};
use crate::linalg::{
    hs_inner, kron, r, CMat, CVec, Operator, Space, SpaceLabel, StateVector, C64, ONE, ZERO,
};
use crate::liouville::{
    dissipator, hamiltonian_superop, DensityMatrix, DephasingParams, EffectiveParams, Superoperator,
};

pub const TENSOR_DIM: usize = 9;

pub fn tensor_space() -> Space {
    Space::new(SpaceLabel::Tensor(2), TENSOR_DIM)
}

/// Ordered product basis `|j,k⟩`, `j` outer.
#[derive(Clone, Debug)]
pub struct TensorBasis {
    pairs: Vec<(usize, usize)>,
}

impl Default for TensorBasis {
    fn default() -> Self {
        Self::new()
    }
}

impl TensorBasis {
    pub fn new() -> Self {
        Self { pairs: (1..=3).flat_map(|j| (1..=3).map(move |k| (j, k))).collect() }
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn index_of(&self, j: usize, k: usize) -> Option<usize> {
        ((1..=3).contains(&j) && (1..=3).contains(&k)).then(|| 3 * (j - 1) + (k - 1))
    }
}

fn two_particle_basis() -> OccupationBasis {
    enumerate_basis(2).expect("N = 2 is valid")
}

/// Isometry `V` (9×6) taking occupation coordinates to symmetrized product states.
pub fn embedding() -> CMat {
    let occ = two_particle_basis();
    let tb = TensorBasis::new();
    let mut v = CMat::zeros(TENSOR_DIM, occ.len());
    for (col, s) in occ.states().iter().enumerate() {
        let levels: Vec<usize> = (0..3).flat_map(|j| std::iter::repeat(j + 1).take(s[j])).collect();
        let (a, b) = (levels[0], levels[1]);
        if a == b {
            v[(tb.index_of(a, a).unwrap(), col)] = ONE;
        } else {
            let h = r(std::f64::consts::FRAC_1_SQRT_2);
            v[(tb.index_of(a, b).unwrap(), col)] = h;
            v[(tb.index_of(b, a).unwrap(), col)] = h;
        }
    }
    v
}

fn check_two(space: Space) -> Result<()> {
    if space.label != SpaceLabel::Occupation(2) {
        return invalid(format!("expected the N = 2 occupation space, got {space:?}"));
    }
    Ok(())
}

pub fn embed_state(psi: &StateVector) -> Result<StateVector> {
    check_two(psi.space())?;
    StateVector::new(tensor_space(), embedding() * psi.amplitudes())
}

/// `V ρ V†` for an operator or density matrix on the occupation space.
pub fn embed_operator(m: &CMat) -> Result<CMat> {
    if m.nrows() != 6 || m.ncols() != 6 {
        return Err(Error::DimensionMismatch { expected: 6, got: m.nrows() });
    }
    let v = embedding();
    Ok(&v * m * v.adjoint())
}

/// Symmetric part in occupation coordinates plus the norm of the discarded antisymmetric part.
pub fn project_symmetric(x: &StateVector) -> Result<(StateVector, f64)> {
    if x.space() != tensor_space() {
        return invalid("projection expects a two-qutrit product-space vector");
    }
    let v = embedding();
    let sym = v.adjoint() * x.amplitudes();
    let leak = (x.amplitudes() - &v * &sym).norm();
    Ok((StateVector::new(two_particle_basis().space(), sym)?, leak))
}

/// `V† M V` plus `‖M − P M P‖_HS` with `P = V V†`.
pub fn project_operator(m: &CMat) -> Result<(CMat, f64)> {
    if m.nrows() != TENSOR_DIM || m.ncols() != TENSOR_DIM {
        return Err(Error::DimensionMismatch { expected: TENSOR_DIM, got: m.nrows() });
    }
    let v = embedding();
    let p = &v * v.adjoint();
    Ok((v.adjoint() * m * &v, (m - &p * m * &p).norm()))
}

/// Projector onto the antisymmetric sector.
pub fn antisymmetric_projector() -> CMat {
    let v = embedding();
    CMat::identity(TENSOR_DIM, TENSOR_DIM) - &v * v.adjoint()
}

fn sigma(j: usize, k: usize) -> CMat {
    let mut m = CMat::zeros(3, 3);
    m[(j - 1, k - 1)] = ONE;
    m
}

/// `σ_jk ⊗ I` for qutrit 1 or `I ⊗ σ_jk` for qutrit 2.
pub fn local_operator(n: usize, j: usize, k: usize) -> Result<Operator> {
    if !(1..=3).contains(&j) || !(1..=3).contains(&k) {
        return invalid(format!("levels ({j},{k}) outside 1..3"));
    }
    let id = CMat::identity(3, 3);
    let m = match n {
        1 => kron(&sigma(j, k), &id),
        2 => kron(&id, &sigma(j, k)),
        _ => return invalid(format!("qutrit index {n} must be 1 or 2")),
    };
    Operator::new(tensor_space(), m)
}

fn local(n: usize, j: usize, k: usize) -> CMat {
    local_operator(n, j, k).expect("valid indices").into_matrix()
}

/// Collective `Σ_n σ_jk^(n)` on the product space.
pub fn collective_tensor(j: usize, k: usize) -> CMat {
    local(1, j, k) + local(2, j, k)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LocalNoiseParams {
    pub delta_omega1: f64,
    pub delta_omega2: f64,
    pub gamma_d: f64,
}

impl LocalNoiseParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma_d >= 0.0) || !self.delta_omega1.is_finite() || !self.delta_omega2.is_finite() || !self.gamma_d.is_finite() {
            return invalid("local noise needs finite shifts and gamma_d >= 0");
        }
        Ok(())
    }
}

/// `−i[H_B, ·] + Γ_D Σ_n 𝒟[σ₂₂^(n) + σ₃₃^(n)]`, `H_B = Σ_n δω_n (σ₂₂^(n) + σ₃₃^(n))`.
pub fn liouvillian_local(p: &LocalNoiseParams) -> Superoperator {
    let sp = tensor_space();
    let excited = |n| local(n, 2, 2) + local(n, 3, 3);
    let h = excited(1) * r(p.delta_omega1) + excited(2) * r(p.delta_omega2);
    let mut l = hamiltonian_superop(&Operator::new(sp, h).expect("9x9"));
    for n in 1..=2 {
        l = l.add(&dissipator(&Operator::new(sp, excited(n)).expect("9x9")).scale(p.gamma_d)).expect("same space");
    }
    l
}

/// Effective generator rebuilt from collective product-space operators so it acts on both sectors.
pub fn lifted_effective_liouvillian(p: &EffectiveParams) -> Superoperator {
    let sp = tensor_space();
    let sm = collective_tensor(1, 2) + collective_tensor(1, 3);
    let sm2 = &sm * &sm;
    let h = collective_tensor(1, 1) * r(p.delta1) - sm.adjoint() * &sm * r(p.xi)
        + sm2.adjoint() * &sm2 * r(p.delta)
        + &sm2 * p.alpha0.conj()
        + sm2.adjoint() * p.alpha0;
    let op = |m: CMat| Operator::new(sp, m).expect("9x9");
    let mut l = hamiltonian_superop(&op(h));
    l = l.add(&dissipator(&op(sm)).scale(p.kappa1)).expect("same space");
    l.add(&dissipator(&op(sm2)).scale(p.kappa2)).expect("same space")
}

/// Correlated and uncorrelated collective dephasing on the product space.
pub fn lifted_dephasing(d: &DephasingParams) -> (Superoperator, Superoperator) {
    let sp = tensor_space();
    let op = |m: CMat| Operator::new(sp, m).expect("9x9");
    let (s11, s22, s33) = (collective_tensor(1, 1), collective_tensor(2, 2), collective_tensor(3, 3));
    let cd = dissipator(&op(s11.clone())).scale(d.gamma1).add(&dissipator(&op(&s22 + &s33)).scale(d.gamma23)).expect("same space");
    let ud = dissipator(&op(s11))
        .scale(d.gamma1)
        .add(&dissipator(&op(s22)).scale(d.gamma2))
        .and_then(|x| x.add(&dissipator(&op(s33)).scale(d.gamma3)))
        .expect("same space");
    (cd, ud)
}

#[derive(Clone, Debug)]
pub struct SpecialStates {
    /// `|1_L^A⟩`, antisymmetric partner of `|1_L⟩`.
    pub antisymmetric: StateVector,
    /// `|1⟩ ⊗ (|2⟩ − |3⟩)/√2`.
    pub mixed_plus: StateVector,
    /// `(|2⟩ − |3⟩)/√2 ⊗ |1⟩`.
    pub mixed_minus: StateVector,
}

pub fn special_states() -> SpecialStates {
    let sp = tensor_space();
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let ground = CVec::from_vec(vec![ONE, ZERO, ZERO]);
    let dark = CVec::from_vec(vec![ZERO, r(h), r(-h)]);
    let plus = ground.kronecker(&dark);
    let minus = dark.kronecker(&ground);
    let anti = (&plus - &minus) * r(h);
    let mk = |v: CVec| StateVector::normalized(sp, v).expect("unit vectors");
    SpecialStates { antisymmetric: mk(anti), mixed_plus: mk(plus), mixed_minus: mk(minus) }
}

/// Scalars of the closed-form stationary matrix `ρ₀₀`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct Rho00Params {
    pub f: f64,
    pub g: f64,
    pub p1: f64,
    pub p2: f64,
    pub p3: f64,
    pub kappa1: f64,
    pub kappa2: f64,
    pub xi: f64,
    pub delta: f64,
    pub im_alpha0: f64,
}

impl Rho00Params {
    pub fn new(p: &EffectiveParams) -> Result<Self> {
        p.validate()?;
        if p.delta1 != 0.0 {
            return invalid("rho00 requires delta1 = 0");
        }
        if p.alpha0.re != 0.0 {
            return invalid("rho00 requires a purely imaginary alpha0");
        }
        let im = p.alpha0.im;
        let detuning = p.xi - 4.0 * p.delta;
        if im == 0.0 {
            return Err(Error::SingularParameters("Im(alpha0) = 0".into()));
        }
        if detuning == 0.0 {
            return Err(Error::SingularParameters("xi = 4 delta".into()));
        }
        let k = 4.0 * p.kappa2 + p.kappa1;
        let f = k / (2.0 * 2f64.sqrt() * im);
        let g = 2f64.sqrt() * im / detuning;
        Ok(Self {
            f,
            g,
            p1: -2f64.sqrt() * (1.0 + 2.0 * f * f + 2.0 / (g * g)),
            p2: 2.0 * (4.0 * p.delta - p.xi) / im,
            p3: im * im / (k * k + 4.0 * detuning * detuning + 12.0 * im * im),
            kappa1: p.kappa1,
            kappa2: p.kappa2,
            xi: p.xi,
            delta: p.delta,
            im_alpha0: im,
        })
    }

    /// `1 − 8 Im(α₀)² / [(4κ₂+κ₁)² + 4(ξ−4δ)² + 12 Im(α₀)²]`.
    pub fn purity(&self) -> f64 {
        let k = 4.0 * self.kappa2 + self.kappa1;
        let d = self.xi - 4.0 * self.delta;
        1.0 - 8.0 * self.im_alpha0.powi(2) / (k * k + 4.0 * d * d + 12.0 * self.im_alpha0.powi(2))
    }
}

/// Stationary matrix reached from `|2,0,0⟩` when `δ₁ = 0` and `α₀` is purely imaginary.
///
/// The overall factor `p₃` multiplies every block, which makes the matrix unit-trace and positive.
pub fn rho00(p: &EffectiveParams) -> Result<DensityMatrix> {
    let q = Rho00Params::new(p)?;
    let s2 = 2f64.sqrt();
    let (f, p1) = (q.f, q.p1);
    let a = [(1, 1, 1.0), (1, 3, -1.0), (3, 1, -1.0), (3, 3, 1.0)];
    let b = [(2, 2, 1.0), (2, 4, -s2), (2, 5, 1.0), (4, 2, -s2), (4, 4, 2.0), (4, 5, -s2), (5, 2, 1.0), (5, 4, -s2), (5, 5, 1.0)];
    let c = [
        (0, 0, p1), (0, 2, -f), (0, 4, -s2 * f), (0, 5, -f),
        (1, 3, -s2),
        (2, 0, -f), (2, 4, -1.0),
        (3, 1, -s2),
        (4, 0, -s2 * f), (4, 2, -1.0), (4, 5, -1.0),
        (5, 0, -f), (5, 4, -1.0),
    ];
    let d = [(0, 2, 1.0), (0, 4, s2), (0, 5, 1.0), (2, 0, -1.0), (4, 0, -s2), (5, 0, -1.0)];
    let mut m = CMat::zeros(6, 6);
    let mut add = |entries: &[(usize, usize, f64)], w: C64| {
        for &(i, j, v) in entries {
            m[(i, j)] += w * v;
        }
    };
    add(&a, r(2.0 * q.p3));
    add(&b, r(q.p3));
    add(&c, r(q.p3 * q.p2 * q.g));
    add(&d, C64::new(0.0, q.p3 * q.p2));
    DensityMatrix::new(two_particle_basis().space(), m)
}

/// `{|j_L⟩⟨k_L|}` followed by `ρ₀₀` orthonormalized against them (Hilbert–Schmidt).
pub fn stationary_basis_two(p: &EffectiveParams) -> Result<Vec<CMat>> {
    let rho = rho00(p)?.into_matrix();
    let occ = two_particle_basis();
    let logical = [logical_state(&occ, 0)?, logical_state(&occ, 1)?];
    let mut out: Vec<CMat> = Vec::with_capacity(5);
    for j in 0..2 {
        for k in 0..2 {
            out.push(logical[j].outer(&logical[k]));
        }
    }
    let mut w = rho;
    for b in &out {
        let proj = hs_inner(b, &w);
        w -= b * proj;
    }
    let nrm = w.norm();
    out.push(w / r(nrm));
    Ok(out)
}

/// Population of the symmetric sector, `Tr(P_sym ρ)`.
pub fn symmetric_population(rho: &CMat) -> f64 {
    let v = embedding();
    (v.adjoint() * rho * &v).trace().re
}
