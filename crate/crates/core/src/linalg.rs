//! Dense complex linear algebra shared by every module.
//!
//! Density matrices are vectorized by stacking columns, so the map
//! `rho -> A rho B` has matrix `B^T ⊗ A`. nalgebra stores matrices
//! column-major, which makes `vectorize` a plain copy of the storage.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn r(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// Which Hilbert space an operator or state lives on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SpaceLabel {
    /// Symmetric occupation basis |n1,n2,n3> with N particles.
    Occupation(usize),
    /// Occupation basis of the modes (b1, b_l, b_r).
    LeftRight(usize),
    /// Product basis of a fixed number of distinguishable qutrits.
    Tensor(usize),
    /// Pump ⊗ signal ⊗ qutrit ensemble, possibly excitation-truncated.
    PumpSignalQutrit,
    /// Pump ⊗ qutrit ensemble.
    PumpQutrit,
    /// Symmetric occupation basis |n1,n2> of N two-level systems.
    Qubits(usize),
    Generic,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Space {
    pub label: SpaceLabel,
    pub dim: usize,
}

impl Space {
    pub fn new(label: SpaceLabel, dim: usize) -> Self {
        Self { label, dim }
    }

    pub fn generic(dim: usize) -> Self {
        Self::new(SpaceLabel::Generic, dim)
    }
}

/// Square operator on a tagged Hilbert space.
#[derive(Clone, Debug, PartialEq)]
pub struct Operator {
    space: Space,
    matrix: CMat,
}

impl Operator {
    pub fn new(space: Space, matrix: CMat) -> Result<Self> {
        if matrix.nrows() != space.dim || matrix.ncols() != space.dim {
            return Err(Error::DimensionMismatch {
                expected: space.dim,
                got: matrix.nrows().max(matrix.ncols()),
            });
        }
        Ok(Self { space, matrix })
    }

    /// Constructs an operator and checks `‖A − A†‖_max < 1e-12` (scaled for large entries).
    pub fn hermitian(space: Space, matrix: CMat) -> Result<Self> {
        let op = Self::new(space, matrix)?;
        if !op.is_hermitian(1e-12) {
            return invalid("operator flagged Hermitian is not");
        }
        Ok(op)
    }

    pub fn identity(space: Space) -> Self {
        Self { space, matrix: CMat::identity(space.dim, space.dim) }
    }

    pub fn zeros(space: Space) -> Self {
        Self { space, matrix: CMat::zeros(space.dim, space.dim) }
    }

    pub fn space(&self) -> Space {
        self.space
    }

    pub fn dim(&self) -> usize {
        self.space.dim
    }

    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMat {
        self.matrix
    }

    pub fn adjoint(&self) -> Self {
        Self { space: self.space, matrix: self.matrix.adjoint() }
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        max_abs(&(&self.matrix - self.matrix.adjoint())) < tol * max_abs(&self.matrix).max(1.0)
    }

    pub fn apply(&self, psi: &StateVector) -> Result<StateVector> {
        check_space(self.space, psi.space())?;
        Ok(StateVector { space: self.space, amplitudes: &self.matrix * psi.amplitudes() })
    }

    fn zip(&self, other: &Self, f: impl Fn(&CMat, &CMat) -> CMat) -> Result<Self> {
        check_space(self.space, other.space)?;
        Ok(Self { space: self.space, matrix: f(&self.matrix, &other.matrix) })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip(other, |a, b| a - b)
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.zip(other, |a, b| a * b)
    }

    pub fn scale(&self, s: C64) -> Self {
        Self { space: self.space, matrix: &self.matrix * s }
    }

    pub fn pow(&self, k: u32) -> Self {
        let mut m = CMat::identity(self.dim(), self.dim());
        for _ in 0..k {
            m = &m * &self.matrix;
        }
        Self { space: self.space, matrix: m }
    }
}

/// State vector on a tagged Hilbert space.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    space: Space,
    amplitudes: CVec,
}

impl StateVector {
    pub fn new(space: Space, amplitudes: CVec) -> Result<Self> {
        if amplitudes.len() != space.dim {
            return Err(Error::DimensionMismatch { expected: space.dim, got: amplitudes.len() });
        }
        Ok(Self { space, amplitudes })
    }

    /// Constructs a state and checks `|‖ψ‖ − 1| < 1e-12`.
    pub fn normalized(space: Space, amplitudes: CVec) -> Result<Self> {
        let s = Self::new(space, amplitudes)?;
        if (s.norm() - 1.0).abs() >= 1e-12 {
            return invalid(format!("state flagged normalized has norm {}", s.norm()));
        }
        Ok(s)
    }

    pub fn basis_vector(space: Space, index: usize) -> Self {
        let mut v = CVec::zeros(space.dim);
        v[index] = ONE;
        Self { space, amplitudes: v }
    }

    pub fn space(&self) -> Space {
        self.space
    }

    pub fn amplitudes(&self) -> &CVec {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.norm()
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &StateVector) -> C64 {
        self.amplitudes.dotc(&other.amplitudes)
    }

    pub fn projector(&self) -> CMat {
        &self.amplitudes * self.amplitudes.adjoint()
    }

    /// `|self⟩⟨other|`.
    pub fn outer(&self, other: &StateVector) -> CMat {
        &self.amplitudes * other.amplitudes.adjoint()
    }
}

pub(crate) fn check_space(a: Space, b: Space) -> Result<()> {
    if a != b {
        return invalid(format!("space mismatch: {a:?} vs {b:?}"));
    }
    Ok(())
}

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

pub fn vectorize(m: &CMat) -> CVec {
    CVec::from_column_slice(m.as_slice())
}

pub fn unvectorize(v: &CVec, d: usize) -> CMat {
    CMat::from_column_slice(d, d, v.as_slice())
}

pub fn max_abs(m: &CMat) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

pub fn max_abs_vec(v: &CVec) -> f64 {
    v.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

/// Zero test: max-norm below `1e-10` of the reference max-norm, with a `1e-14` absolute floor.
pub fn is_negligible(m: &CMat, reference: &CMat) -> bool {
    max_abs(m) < (1e-10 * max_abs(reference)).max(1e-14)
}

pub fn hs_norm(m: &CMat) -> f64 {
    m.norm()
}

/// Hilbert–Schmidt inner product `Tr(A† B)`.
pub fn hs_inner(a: &CMat, b: &CMat) -> C64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

pub fn hermitian_part(m: &CMat) -> CMat {
    (m + m.adjoint()) * r(0.5)
}

pub fn hermiticity_defect(m: &CMat) -> f64 {
    max_abs(&(m - m.adjoint()))
}

pub fn commutator(a: &CMat, b: &CMat) -> CMat {
    a * b - b * a
}

pub fn anticommutator(a: &CMat, b: &CMat) -> CMat {
    a * b + b * a
}

/// Eigen-decomposition of the Hermitian part of `m`, eigenvalues ascending.
pub fn hermitian_eigen(m: &CMat) -> (Vec<f64>, CMat) {
    let eig = hermitian_part(m).symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = CMat::zeros(m.nrows(), m.ncols());
    for (col, &i) in order.iter().enumerate() {
        vectors.set_column(col, &eig.eigenvectors.column(i));
    }
    (values, vectors)
}

pub fn min_eigenvalue(m: &CMat) -> f64 {
    hermitian_eigen(m).0.first().copied().unwrap_or(0.0)
}

/// `exp(-i H t)` for Hermitian `H`.
pub fn unitary_propagator(h: &CMat, t: f64) -> CMat {
    let (values, vectors) = hermitian_eigen(h);
    let phases = CVec::from_iterator(values.len(), values.iter().map(|&l| (-I * l * t).exp()));
    &vectors * CMat::from_diagonal(&phases) * vectors.adjoint()
}

/// Numerical kernel of a matrix from its singular value decomposition.
#[derive(Clone, Debug)]
pub struct NullSpace {
    /// Orthonormal kernel vectors.
    pub basis: Vec<CVec>,
    /// All singular values, descending.
    pub singular_values: Vec<f64>,
    /// Smallest retained singular value over the largest null one.
    pub gap_ratio: f64,
    /// Some `σ/σ_max` lies within a factor 10 of the threshold.
    pub near_threshold: bool,
}

impl NullSpace {
    pub fn dim(&self) -> usize {
        self.basis.len()
    }
}

/// Directions with `σ < tau_rel · σ_max` are null.
pub fn null_space(m: &CMat, tau_rel: f64) -> Result<NullSpace> {
    if !(tau_rel > 0.0) {
        return invalid("null-space tolerance must be positive");
    }
    let n = m.ncols();
    let padded;
    let a = if m.nrows() < n {
        padded = m.clone().resize_vertically(n, ZERO);
        &padded
    } else {
        m
    };
    let svd = a.clone().svd(false, true);
    let v_t = svd.v_t.expect("requested V^T");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
    let singular_values: Vec<f64> = order.iter().map(|&i| svd.singular_values[i]).collect();
    let s_max = singular_values.first().copied().unwrap_or(0.0);
    let cut = tau_rel * s_max;
    let basis: Vec<CVec> = order
        .iter()
        .filter(|&&i| !(svd.singular_values[i] >= cut) || s_max == 0.0)
        .map(|&i| v_t.row(i).adjoint())
        .collect();
    let kept = singular_values.len() - basis.len();
    let gap_ratio = if kept == 0 || basis.is_empty() {
        f64::INFINITY
    } else {
        singular_values[kept - 1] / singular_values[kept]
    };
    let near_threshold = s_max > 0.0
        && singular_values.iter().any(|&s| {
            let q = s / s_max;
            q > tau_rel / 10.0 && q < tau_rel * 10.0
        });
    Ok(NullSpace { basis, singular_values, gap_ratio, near_threshold })
}

/// Orthonormalizes with two passes of modified Gram–Schmidt, dropping dependent vectors.
pub fn orthonormalize(vectors: &[CVec]) -> Vec<CVec> {
    let mut out: Vec<CVec> = Vec::new();
    for v in vectors {
        let mut w = v.clone();
        let scale = w.norm();
        for _ in 0..2 {
            for q in &out {
                let p = q.dotc(&w);
                w -= q * p;
            }
        }
        let nrm = w.norm();
        if nrm > 1e-12 * scale.max(1e-300) {
            out.push(w / r(nrm));
        }
    }
    out
}

/// Principal angles between two subspaces of equal dimension, ascending.
pub fn principal_angles(a: &[CVec], b: &[CVec]) -> Result<Vec<f64>> {
    let qa = orthonormalize(a);
    let qb = orthonormalize(b);
    if qa.len() != qb.len() {
        return Err(Error::DimensionMismatch { expected: qa.len(), got: qb.len() });
    }
    if qa.is_empty() {
        return Ok(Vec::new());
    }
    let ma = CMat::from_columns(&qa);
    let mb = CMat::from_columns(&qb);
    // Sines from the residual of A off B keep small angles accurate.
    let resid = &ma - &mb * (mb.adjoint() * &ma);
    let mut sines: Vec<f64> = resid.singular_values().iter().copied().collect();
    sines.sort_by(f64::total_cmp);
    Ok(sines.into_iter().map(|s| s.min(1.0).asin()).collect())
}

/// JSON debug dump: row-major nested arrays of `[re, im]` pairs.
pub fn to_json(m: &CMat) -> serde_json::Value {
    let rows: Vec<serde_json::Value> = (0..m.nrows())
        .map(|i| {
            serde_json::Value::Array(
                (0..m.ncols()).map(|j| serde_json::json!([m[(i, j)].re, m[(i, j)].im])).collect(),
            )
        })
        .collect();
    serde_json::Value::Array(rows)
}

pub fn from_json(value: &serde_json::Value) -> Result<CMat> {
    let bad = || Error::InvalidArgument("malformed matrix dump".into());
    let rows = value.as_array().ok_or_else(bad)?;
    let nrows = rows.len();
    let ncols = rows.first().and_then(|r| r.as_array()).map_or(0, |r| r.len());
    let mut m = CMat::zeros(nrows, ncols);
    for (i, row) in rows.iter().enumerate() {
        let row = row.as_array().filter(|r| r.len() == ncols).ok_or_else(bad)?;
        for (j, entry) in row.iter().enumerate() {
            let pair = entry.as_array().filter(|p| p.len() == 2).ok_or_else(bad)?;
            let re = pair[0].as_f64().ok_or_else(bad)?;
            let im = pair[1].as_f64().ok_or_else(bad)?;
            m[(i, j)] = c(re, im);
        }
    }
    Ok(m)
}

/// Serde adapter writing a complex number as `{ "re": .., "im": .. }`.
pub mod complex_serde {
    use super::C64;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    #[serde(deny_unknown_fields)]
    struct Parts {
        re: f64,
        im: f64,
    }

    pub fn serialize<S: Serializer>(z: &C64, s: S) -> Result<S::Ok, S::Error> {
        Parts { re: z.re, im: z.im }.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<C64, D::Error> {
        let p = Parts::deserialize(d)?;
        Ok(C64::new(p.re, p.im))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use crate::testutil::random_matrix;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    proptest! {
        #[test]
        fn kron_vec_identity(seed in any::<u64>(), d in 1usize..6) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = random_matrix(&mut rng, d);
            let b = random_matrix(&mut rng, d);
            let rho = random_matrix(&mut rng, d);
            let lhs = unvectorize(&(kron(&b.transpose(), &a) * vectorize(&rho)), d);
            prop_assert!(max_abs(&(lhs - &a * &rho * &b)) < 1e-12);
        }
    }

    #[test]
    fn null_space_of_projector() {
        let v = CVec::from_vec(vec![r(1.0), r(1.0), ZERO]) / r(2f64.sqrt());
        let m = CMat::identity(3, 3) - &v * v.adjoint();
        let ns = null_space(&m, 1e-10).unwrap();
        assert_eq!(ns.dim(), 1);
        assert!((ns.basis[0].dotc(&v).norm() - 1.0).abs() < 1e-12);
        assert!(ns.gap_ratio > 1e10);
    }

    #[test]
    fn null_space_rejects_bad_tolerance() {
        assert!(null_space(&CMat::identity(2, 2), 0.0).is_err());
    }

    #[test]
    fn zero_matrix_kernel_is_everything() {
        let ns = null_space(&CMat::zeros(4, 4), 1e-10).unwrap();
        assert_eq!(ns.dim(), 4);
    }

    #[test]
    fn principal_angles_detect_rotation() {
        let e0 = CVec::from_vec(vec![ONE, ZERO]);
        let th: f64 = 1e-3;
        let rot = CVec::from_vec(vec![r(th.cos()), r(th.sin())]);
        let ang = principal_angles(&[e0], &[rot]).unwrap();
        assert!((ang[0] - th).abs() < 1e-12);
    }

    #[test]
    fn unitary_propagator_is_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = random_matrix(&mut rng, 4);
        let h = hermitian_part(&a);
        let u = unitary_propagator(&h, 0.7);
        assert!(max_abs(&(&u * u.adjoint() - CMat::identity(4, 4))) < 1e-12);
    }

    #[test]
    fn json_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let m = random_matrix(&mut rng, 3);
        assert_eq!(from_json(&to_json(&m)).unwrap(), m);
    }
}
