//! Occupation-number basis of N bosonic three-level particles and the
//! operators, coherent states and cat states built on it.
//!
//! States `|n1,n2,n3⟩` are ordered by increasing `n3` (outer) and then
//! increasing `n2` (inner), with `n1 = N − n2 − n3`. For `N = 2` this gives
//! `|2,0,0⟩, |1,1,0⟩, |0,2,0⟩, |1,0,1⟩, |0,1,1⟩, |0,0,2⟩`.

use std::collections::HashMap;

use crate::error::{invalid, Result};
use crate::linalg::{
    c, null_space, r, CMat, CVec, Operator, Space, SpaceLabel, StateVector, C64, ONE, ZERO,
};

pub type Occupation = [usize; 3];

/// Which three modes the occupations count.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Modes {
    /// Qutrit levels 1, 2, 3.
    Levels,
    /// Modes `b1`, `b_l = (b2+b3)/√2`, `b_r = (b2−b3)/√2`.
    LeftRight,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OccupationBasis {
    n_particles: usize,
    modes: Modes,
    states: Vec<Occupation>,
    index: HashMap<Occupation, usize>,
}

impl OccupationBasis {
    /// Any sector including `N = 0`; the public constructor is [`enumerate_basis`].
    fn sector(n: usize, modes: Modes) -> Self {
        let mut states = Vec::with_capacity((n + 1) * (n + 2) / 2);
        for n3 in 0..=n {
            for n2 in 0..=(n - n3) {
                states.push([n - n2 - n3, n2, n3]);
            }
        }
        let index = states.iter().enumerate().map(|(i, s)| (*s, i)).collect();
        Self { n_particles: n, modes, states, index }
    }

    pub fn n_particles(&self) -> usize {
        self.n_particles
    }

    pub fn modes(&self) -> Modes {
        self.modes
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn states(&self) -> &[Occupation] {
        &self.states
    }

    pub fn state(&self, i: usize) -> Occupation {
        self.states[i]
    }

    pub fn index_of(&self, occ: &Occupation) -> Option<usize> {
        self.index.get(occ).copied()
    }

    pub fn space(&self) -> Space {
        let label = match self.modes {
            Modes::Levels => SpaceLabel::Occupation(self.n_particles),
            Modes::LeftRight => SpaceLabel::LeftRight(self.n_particles),
        };
        Space::new(label, self.len())
    }

    pub fn basis_state(&self, occ: &Occupation) -> Result<StateVector> {
        match self.index_of(occ) {
            Some(i) => Ok(StateVector::basis_vector(self.space(), i)),
            None => invalid(format!("{occ:?} is not in the {}-particle basis", self.n_particles)),
        }
    }

    pub fn diagonal(&self, f: impl Fn(&Occupation) -> f64) -> CMat {
        CMat::from_diagonal(&CVec::from_iterator(self.len(), self.states.iter().map(|s| r(f(s)))))
    }
}

pub fn enumerate_basis(n: usize) -> Result<OccupationBasis> {
    if n == 0 {
        return invalid("particle number must be at least 1");
    }
    Ok(OccupationBasis::sector(n, Modes::Levels))
}

fn check_level(j: usize) -> Result<usize> {
    if !(1..=3).contains(&j) {
        return invalid(format!("level {j} outside 1..3"));
    }
    Ok(j - 1)
}

/// Linear map between particle-number sectors, rows indexed by `to`.
#[derive(Clone, Debug, PartialEq)]
pub struct SectorMap {
    pub from: OccupationBasis,
    pub to: OccupationBasis,
    pub matrix: CMat,
}

impl SectorMap {
    pub fn adjoint(&self) -> SectorMap {
        SectorMap { from: self.to.clone(), to: self.from.clone(), matrix: self.matrix.adjoint() }
    }
}

/// `Σ_j coeffs[j] b_j` from the `N`-sector of `basis` to the `N−1` sector.
fn mode_lowering(basis: &OccupationBasis, coeffs: [C64; 3]) -> SectorMap {
    let n = basis.n_particles;
    let to = OccupationBasis::sector(n.saturating_sub(1), basis.modes);
    let mut m = CMat::zeros(to.len(), basis.len());
    for (col, s) in basis.states.iter().enumerate() {
        for (j, &cj) in coeffs.iter().enumerate() {
            if s[j] == 0 || cj == ZERO {
                continue;
            }
            let mut t = *s;
            t[j] -= 1;
            let row = to.index_of(&t).expect("lowered state lies in sector");
            m[(row, col)] += cj * (s[j] as f64).sqrt();
        }
    }
    SectorMap { from: basis.clone(), to, matrix: m }
}

/// Matrix of `b_j` from the `N`-particle sector to the `N−1` sector.
pub fn annihilation_matrix(basis: &OccupationBasis, j: usize) -> Result<SectorMap> {
    let j = check_level(j)?;
    let mut coeffs = [ZERO; 3];
    coeffs[j] = ONE;
    Ok(mode_lowering(basis, coeffs))
}

/// `S_jk = b_j† b_k` on the `N`-particle sector.
pub fn collective_matrix(basis: &OccupationBasis, j: usize, k: usize) -> Result<Operator> {
    let (j, k) = (check_level(j)?, check_level(k)?);
    let mut m = CMat::zeros(basis.len(), basis.len());
    for (col, s) in basis.states.iter().enumerate() {
        if s[k] == 0 {
            continue;
        }
        let mut t = *s;
        t[k] -= 1;
        let amp = if j == k { s[k] as f64 } else { (s[k] as f64 * (t[j] + 1) as f64).sqrt() };
        t[j] += 1;
        m[(basis.index[&t], col)] += r(amp);
    }
    Operator::new(basis.space(), m)
}

pub(crate) fn s(basis: &OccupationBasis, j: usize, k: usize) -> CMat {
    collective_matrix(basis, j, k).expect("levels in range").into_matrix()
}

/// `S₋ = S₁₂ + S₁₃`.
pub fn lowering_matrix(basis: &OccupationBasis) -> Operator {
    Operator::new(basis.space(), s(basis, 1, 2) + s(basis, 1, 3)).expect("square")
}

/// Eigenvalues of `S₋`.
///
/// `S₋` raises `n1` by one, so in an `n1`-graded ordering it is strictly
/// triangular and its spectrum is the diagonal of that permuted matrix.
/// Returns `None` if the triangular structure check fails.
pub fn lowering_spectrum(basis: &OccupationBasis) -> Option<Vec<C64>> {
    let sm = lowering_matrix(basis).into_matrix();
    let mut order: Vec<usize> = (0..basis.len()).collect();
    order.sort_by_key(|&i| basis.states[i][0]);
    let permuted = CMat::from_fn(basis.len(), basis.len(), |i, j| sm[(order[i], order[j])]);
    let lower_triangular = (0..basis.len()).all(|i| (i..basis.len()).all(|j| permuted[(i, j)] == ZERO));
    lower_triangular.then(|| (0..basis.len()).map(|i| permuted[(i, i)]).collect())
}

/// `Π₀ = diag((−1)^{n1})`.
pub fn parity_matrix(basis: &OccupationBasis) -> Operator {
    let m = basis.diagonal(|s| if s[0] % 2 == 0 { 1.0 } else { -1.0 });
    Operator::new(basis.space(), m).expect("square")
}

fn factorial(n: usize) -> f64 {
    (1..=n).fold(1.0, |acc, k| acc * k as f64)
}

fn binomial(n: usize, k: usize) -> f64 {
    factorial(n) / (factorial(k) * factorial(n - k))
}

/// U(3) coherent state labelled by `z`, using the unit vector `z/‖z‖`.
pub fn coherent_state(basis: &OccupationBasis, z1: C64, z2: C64, z3: C64) -> Result<StateVector> {
    let norm = (z1.norm_sqr() + z2.norm_sqr() + z3.norm_sqr()).sqrt();
    if norm == 0.0 {
        return invalid("coherent-state label must be nonzero");
    }
    let z = [z1 / norm, z2 / norm, z3 / norm];
    let n = basis.n_particles;
    let amps = basis.states.iter().map(|s| {
        let multinomial = factorial(n) / (factorial(s[0]) * factorial(s[1]) * factorial(s[2]));
        let mono: C64 = (0..3).map(|i| z[i].powu(s[i] as u32)).product();
        mono * multinomial.sqrt()
    });
    Ok(StateVector::new(basis.space(), CVec::from_iterator(basis.len(), amps))?)
}

/// Logical cat state `|0_L⟩` (`bit = 0`) or `|1_L⟩` (`bit = 1`).
pub fn logical_state(basis: &OccupationBasis, bit: u8) -> Result<StateVector> {
    let n = basis.n_particles;
    if n < 2 {
        return invalid("logical states need at least 2 particles");
    }
    if bit > 1 {
        return invalid(format!("logical bit must be 0 or 1, got {bit}"));
    }
    let m = n - bit as usize;
    let mut v = CVec::zeros(basis.len());
    for n3 in 0..=m {
        let sign = if n3 % 2 == 0 { 1.0 } else { -1.0 };
        let amp = sign * (binomial(m, n3) / 2f64.powi(m as i32)).sqrt();
        v[basis.index[&[bit as usize, m - n3, n3]]] = r(amp);
    }
    StateVector::normalized(basis.space(), v)
}

/// Cat state `(|ε,1,−1⟩ + (−1)^bit |−ε,1,−1⟩) / (2 N_bit(ε))` of two coherent states.
pub fn cat_state(basis: &OccupationBasis, bit: u8, eps: f64) -> Result<StateVector> {
    let n = basis.n_particles as i32;
    let sign = if bit == 0 { 1.0 } else { -1.0 };
    let plus = coherent_state(basis, r(eps), ONE, r(-1.0))?;
    let minus = coherent_state(basis, r(-eps), ONE, r(-1.0))?;
    let overlap = ((2.0 - eps * eps) / (2.0 + eps * eps)).powi(n);
    let norm = (0.5 * (1.0 + sign * overlap)).sqrt();
    if norm == 0.0 {
        return invalid("cat state vanishes at eps = 0 for odd parity");
    }
    let v = (plus.amplitudes() + minus.amplitudes() * r(sign)) / r(2.0 * norm);
    StateVector::new(basis.space(), v)
}

/// `(|0_L⟩ + (−1)^bit e^{iφ} |1_L⟩)/√2`.
pub fn superposition_state(basis: &OccupationBasis, bit: u8, phi: f64) -> Result<StateVector> {
    let zero = logical_state(basis, 0)?;
    let one = logical_state(basis, 1)?;
    if bit > 1 {
        return invalid(format!("logical bit must be 0 or 1, got {bit}"));
    }
    let sign = if bit == 0 { 1.0 } else { -1.0 };
    let phase = c(0.0, phi).exp() * sign;
    let v = (zero.amplitudes() + one.amplitudes() * phase) / r(2f64.sqrt());
    StateVector::new(basis.space(), v)
}

/// Left/right mode decomposition of the two excited levels.
#[derive(Clone, Debug)]
pub struct LeftRight {
    /// `b_l = (b2+b3)/√2`, sector `N → N−1`.
    pub b_l: SectorMap,
    /// `b_r = (b2−b3)/√2`, sector `N → N−1`.
    pub b_r: SectorMap,
    /// Occupations `(n1, n_l, n_r)`.
    pub lr_basis: OccupationBasis,
    /// Unitary taking occupation coordinates to `(n1, n_l, n_r)` coordinates.
    pub change_of_basis: CMat,
}

pub fn lr_transform(basis: &OccupationBasis) -> LeftRight {
    let h = r(std::f64::consts::FRAC_1_SQRT_2);
    let b_l = mode_lowering(basis, [ZERO, h, h]);
    let b_r = mode_lowering(basis, [ZERO, h, -h]);
    let n = basis.n_particles;
    let lr_basis = OccupationBasis::sector(n, Modes::LeftRight);
    // Column k: (b1†)^{n1} (b_l†)^{nl} (b_r†)^{nr} |vac⟩ / √(n1! nl! nr!) in level coordinates.
    let mut t = CMat::zeros(basis.len(), lr_basis.len());
    for (col, &[n1, nl, nr]) in lr_basis.states.iter().enumerate() {
        let m = nl + nr;
        let pref = 1.0 / (factorial(n1) * factorial(nl) * factorial(nr)).sqrt() / 2f64.powf(m as f64 / 2.0);
        // (x + y)^nl (x − y)^nr with x = b2†, y = b3†.
        let mut poly = vec![0.0; m + 1];
        for a in 0..=nl {
            for b in 0..=nr {
                let sign = if b % 2 == 0 { 1.0 } else { -1.0 };
                poly[a + b] += binomial(nl, a) * binomial(nr, b) * sign;
            }
        }
        for (n3, coef) in poly.iter().enumerate() {
            if *coef == 0.0 {
                continue;
            }
            let n2 = m - n3;
            let norm = (factorial(n1) * factorial(n2) * factorial(n3)).sqrt();
            t[(basis.index[&[n1, n2, n3]], col)] = r(pref * coef * norm);
        }
    }
    LeftRight { b_l, b_r, lr_basis, change_of_basis: t.adjoint() }
}

/// Joint dark subspace of `S₋` and `(S₋²)†`, split into `S₁₁` eigenspaces.
#[derive(Clone, Debug)]
pub struct DarkKernel {
    /// `(S₁₁ eigenvalue, orthonormal basis of that eigenspace)`.
    pub sectors: Vec<(f64, Vec<CVec>)>,
    /// Largest `‖(S₁₁ − n)v‖` over returned vectors.
    pub eigen_residual: f64,
}

pub fn joint_dark_kernel(basis: &OccupationBasis) -> Result<DarkKernel> {
    let sm = lowering_matrix(basis).into_matrix();
    let sm2_dag = (&sm * &sm).adjoint();
    let d = basis.len();
    let mut stacked = CMat::zeros(2 * d, d);
    stacked.rows_mut(0, d).copy_from(&sm);
    stacked.rows_mut(d, d).copy_from(&sm2_dag);
    let ns = null_space(&stacked, 1e-10)?;
    let mut sectors: Vec<(f64, Vec<CVec>)> = Vec::new();
    let mut eigen_residual: f64 = 0.0;
    if ns.dim() > 0 {
        let q = CMat::from_columns(&ns.basis);
        let s11 = s(basis, 1, 1);
        let (values, vecs) = crate::linalg::hermitian_eigen(&(q.adjoint() * &s11 * &q));
        for (k, &lambda) in values.iter().enumerate() {
            let v = &q * vecs.column(k);
            eigen_residual = eigen_residual.max((&s11 * &v - &v * r(lambda)).norm());
            let level = lambda.round();
            match sectors.iter_mut().find(|(l, _)| *l == level) {
                Some((_, vs)) => vs.push(v),
                None => sectors.push((level, vec![v])),
            }
        }
    }
    sectors.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(DarkKernel { sectors, eigen_residual })
}
