//! Time averaging with an ideal low-pass filter, to second and third order in
//! an interaction-picture Hamiltonian given as a finite sum of harmonics.
//!
//! A term `(A, Ω)` stands for `A e^{iΩt}`. Time integrals start at `t₀ = 0`, so
//! `∫₀ᵗ A e^{iΩs} ds = (A/(iΩ))(e^{iΩt} − 1)` carries a constant counter-term.
//! The filter keeps a term iff `|Ω| < ω₀`.

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::linalg::{r, CMat, Space};

use super::full::{destroy, field_qutrit_operator, product_space, TruncationSpec};
use super::PhysicalParams;
use crate::fock::{enumerate_basis, s};

#[derive(Clone, Debug)]
pub struct HarmonicSeries {
    space: Space,
    terms: Vec<(CMat, f64)>,
}

fn same_frequency(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * (1.0 + a.abs().max(b.abs()))
}

impl HarmonicSeries {
    pub fn new(space: Space) -> Self {
        Self { space, terms: Vec::new() }
    }

    pub fn space(&self) -> Space {
        self.space
    }

    pub fn terms(&self) -> &[(CMat, f64)] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Adds `A e^{iΩt}`, merging with an existing term at the same frequency.
    pub fn push(&mut self, op: CMat, freq: f64) -> Result<()> {
        if op.nrows() != self.space.dim || op.ncols() != self.space.dim {
            return Err(Error::DimensionMismatch { expected: self.space.dim, got: op.nrows() });
        }
        if !freq.is_finite() {
            return invalid("harmonic frequency must be finite");
        }
        self.push_unchecked(op, freq);
        Ok(())
    }

    fn push_unchecked(&mut self, op: CMat, freq: f64) {
        match self.terms.iter_mut().find(|(_, w)| same_frequency(*w, freq)) {
            Some((m, _)) => *m += op,
            None => self.terms.push((op, freq)),
        }
    }

    /// True iff every `(A, Ω)` is matched by `(A†, −Ω)`.
    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.terms.iter().all(|(a, w)| {
            let partner = self.terms.iter().find(|(_, v)| same_frequency(*v, -*w));
            match partner {
                Some((b, _)) => (b - a.adjoint()).norm() <= tol * (1.0 + a.norm()),
                None => a.norm() <= tol,
            }
        })
    }

    pub fn product(&self, other: &Self) -> Self {
        let mut out = Self::new(self.space);
        for (a, x) in &self.terms {
            for (b, y) in &other.terms {
                out.push_unchecked(a * b, x + y);
            }
        }
        out
    }

    /// Ideal low-pass filter: keeps the terms with `|Ω| < ω₀`.
    pub fn filtered(&self, omega0: f64) -> Self {
        Self { space: self.space, terms: self.terms.iter().filter(|(_, w)| w.abs() < omega0).cloned().collect() }
    }

    /// Value at `t = 0`.
    pub fn static_sum(&self) -> CMat {
        let d = self.space.dim;
        self.terms.iter().fold(CMat::zeros(d, d), |acc, (a, _)| acc + a)
    }

    /// `−i∫₀ᵗ` of the fast terms (`|Ω| ≥ ω₀`); slow terms are returned separately, untouched.
    fn integrate_fast(&self, omega0: f64) -> (Self, Vec<(CMat, f64)>) {
        let mut out = Self::new(self.space);
        let mut slow = Vec::new();
        for (a, w) in &self.terms {
            if w.abs() >= omega0 {
                out.push_unchecked(a * r(-1.0 / w), *w);
                out.push_unchecked(a * r(1.0 / w), 0.0);
            } else {
                slow.push((a.clone(), *w));
            }
        }
        (out, slow)
    }

    fn adjoint(&self) -> Self {
        Self { space: self.space, terms: self.terms.iter().map(|(a, w)| (a.adjoint(), -w)).collect() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum AveragingOrder {
    Second,
    Third,
}

#[derive(Clone, Debug)]
pub struct AveragedHamiltonian {
    pub cutoff: f64,
    /// `½ avg[H, U⁽¹⁾]` at `t = 0`.
    pub second: CMat,
    /// Third-order piece at `t = 0`; zero when only second order was requested.
    pub third: CMat,
    pub total: CMat,
    /// Surviving nonzero frequencies with the Hilbert–Schmidt norm of their coefficient.
    pub residual: Vec<(f64, f64)>,
}

/// Second (and optionally third) order average of `series` with cutoff `ω₀`.
///
/// Requires every single frequency to be filtered out, so the first-order average vanishes.
/// Slow pieces of `H U⁽¹⁾` are not integrated; this is exact as long as each of them,
/// shifted by any frequency of `H`, is still filtered out, which is checked.
pub fn average_hamiltonian(series: &HarmonicSeries, order: AveragingOrder, omega0: f64) -> Result<AveragedHamiltonian> {
    if !(omega0 > 0.0 && omega0.is_finite()) {
        return invalid("cutoff must be positive and finite");
    }
    if let Some((_, w)) = series.terms.iter().find(|(_, w)| w.abs() < omega0) {
        return Err(Error::HypothesisViolated(format!("single frequency {w} passes the filter with cutoff {omega0}")));
    }
    let d = series.space.dim;
    let h = series;
    let mut u1 = HarmonicSeries::new(h.space);
    for (a, w) in &h.terms {
        u1.push_unchecked(a * r(-1.0 / w), *w);
        u1.push_unchecked(a * r(1.0 / w), 0.0);
    }
    let hu1 = h.product(&u1);
    let u1h = u1.product(h);
    let avg_hu1 = hu1.filtered(omega0);
    let avg_u1h = u1h.filtered(omega0);
    let mut second = HarmonicSeries::new(h.space);
    for (a, w) in avg_hu1.terms.iter() {
        second.push_unchecked(a * r(0.5), *w);
    }
    for (a, w) in avg_u1h.terms.iter() {
        second.push_unchecked(a * r(-0.5), *w);
    }

    let mut third = HarmonicSeries::new(h.space);
    if order == AveragingOrder::Third {
        // U⁽²⁾ = −i∫₀ᵗ H U⁽¹⁾.
        let (u2, slow) = hu1.integrate_fast(omega0);
        for (_, nu) in &slow {
            if let Some((_, w)) = h.terms.iter().find(|(_, w)| (w + nu).abs() < omega0) {
                return Err(Error::HypothesisViolated(format!("slow Dyson frequency {nu} combines with {w} below the cutoff")));
            }
        }
        let avg_hu2 = h.product(&u2).filtered(omega0);
        let avg_u1 = u1.filtered(omega0);
        for (a, w) in avg_hu2.terms.iter().chain(avg_hu2.adjoint().terms.iter()) {
            third.push_unchecked(a * r(0.5), *w);
        }
        for (a, w) in avg_hu1.product(&avg_u1).terms.iter().chain(avg_u1.product(&avg_u1h).terms.iter()) {
            third.push_unchecked(a * r(-0.5), *w);
        }
    }

    let mut all = second.clone();
    for (a, w) in &third.terms {
        all.push_unchecked(a.clone(), *w);
    }
    let residual = all.terms.iter().filter(|(_, w)| *w != 0.0).map(|(a, w)| (*w, a.norm())).filter(|(_, n)| *n > 0.0).collect();
    let (second, third) = (second.static_sum(), if third.is_empty() { CMat::zeros(d, d) } else { third.static_sum() });
    let total = &second + &third;
    Ok(AveragedHamiltonian { cutoff: omega0, second, third, total, residual })
}

/// Frequencies that must pass (`slow`) or be removed by (`fast`) the filter, and the chosen cutoff.
#[derive(Clone, Debug, Serialize)]
pub struct CutoffWindows {
    pub zeta: [f64; 3],
    pub slow: Vec<(String, f64)>,
    pub fast: Vec<(String, f64)>,
    /// Geometric mean of the largest slow and smallest fast frequency, or half the smallest
    /// fast frequency when every slow one vanishes.
    pub omega0: f64,
}

pub fn cutoff_windows(pp: &PhysicalParams) -> Result<CutoffWindows> {
    pp.validate()?;
    let z = [2.0 * pp.omega_s - pp.omega_p, pp.omega_s - pp.omega_2, pp.omega_s - pp.omega_3];
    let name = |l: usize| format!("ζ{}", l + 1);
    let mut slow = Vec::new();
    for j in 1..3 {
        for k in j..3 {
            slow.push((format!("|{}+{}−ζ1|", name(j), name(k)), (z[j] + z[k] - z[0]).abs()));
        }
    }
    slow.push(("|ζ3−ζ2|".to_string(), (z[2] - z[1]).abs()));
    let mut fast = Vec::new();
    for l in 0..3 {
        fast.push((name(l), z[l]));
        fast.push((format!("2{}", name(l)), 2.0 * z[l]));
    }
    fast.push(("ζ2+ζ3".to_string(), z[1] + z[2]));
    for j in 1..3 {
        fast.push((format!("ζ1+{}", name(j)), z[0] + z[j]));
        fast.push((format!("|ζ1−{}|", name(j)), (z[0] - z[j]).abs()));
    }
    for a in 0..3 {
        for b in a..3 {
            for c in b..3 {
                fast.push((format!("{}+{}+{}", name(a), name(b), name(c)), z[a] + z[b] + z[c]));
            }
            for c in 0..3 {
                let resonant = c == 0 && a >= 1;
                if !resonant {
                    fast.push((format!("|{}+{}−{}|", name(a), name(b), name(c)), (z[a] + z[b] - z[c]).abs()));
                }
            }
        }
    }
    let max_slow = slow.iter().map(|(_, v)| *v).fold(0.0, f64::max);
    let min_fast = fast.iter().map(|(_, v)| *v).fold(f64::INFINITY, f64::min);
    if !(min_fast > max_slow) || z.iter().any(|&v| v <= 0.0) {
        return Err(Error::HypothesisViolated(format!("slow frequencies up to {max_slow} overlap fast ones from {min_fast}")));
    }
    let omega0 = if max_slow > 0.0 { (max_slow * min_fast).sqrt() } else { min_fast / 2.0 };
    Ok(CutoffWindows { zeta: z, slow, fast, omega0 })
}

/// The signal-mediated interaction `Σ_j (F_j e^{−iζ_j t} + F_j† e^{iζ_j t})` on pump ⊗ signal ⊗ qutrits,
/// with `F₁ = J a_p† a_s²` and `F_j = g_j a_s S_1j†`.
pub fn interaction_series(pp: &PhysicalParams, tr: &TruncationSpec) -> Result<(HarmonicSeries, CutoffWindows)> {
    if tr.n_s_max < 3 {
        return invalid("averaging validation needs at least 4 signal levels");
    }
    if tr.max_excitations.is_some() {
        return invalid("averaging uses a box truncation");
    }
    let windows = cutoff_windows(pp)?;
    let basis = enumerate_basis(tr.n)?;
    let ap = destroy(tr.n_p_max);
    let as_ = destroy(tr.n_s_max);
    let id_p = CMat::identity(tr.n_p_max + 1, tr.n_p_max + 1);
    let id_q = CMat::identity(basis.len(), basis.len());
    let f1 = field_qutrit_operator(&ap.adjoint(), &(&as_ * &as_), &id_q) * r(pp.j);
    let f2 = field_qutrit_operator(&id_p, &as_, &s(&basis, 2, 1)) * r(pp.g_2);
    let f3 = field_qutrit_operator(&id_p, &as_, &s(&basis, 3, 1)) * r(pp.g_3);
    let space = product_space(tr, &basis);
    let mut series = HarmonicSeries::new(space);
    for (f, zeta) in [(f1, windows.zeta[0]), (f2, windows.zeta[1]), (f3, windows.zeta[2])] {
        series.push(f.adjoint(), zeta)?;
        series.push(f, -zeta)?;
    }
    Ok((series, windows))
}

/// `⟨0_s| X |0_s⟩` as an operator on pump ⊗ qutrits.
pub fn signal_vacuum_block(x: &CMat, tr: &TruncationSpec, n_qutrit_states: usize) -> Result<CMat> {
    let (np, ns, q) = (tr.n_p_max + 1, tr.n_s_max + 1, n_qutrit_states);
    if x.nrows() != np * ns * q {
        return Err(Error::DimensionMismatch { expected: np * ns * q, got: x.nrows() });
    }
    let idx = |p: usize, k: usize| (p * ns) * q + k;
    Ok(CMat::from_fn(np * q, np * q, |i, j| x[(idx(i / q, i % q), idx(j / q, j % q))]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, commutator, max_abs};
    use crate::testutil::{random_matrix, rng};

    fn pair(a: &CMat, w: f64) -> HarmonicSeries {
        let mut s = HarmonicSeries::new(Space::generic(a.nrows()));
        s.push(a.clone(), -w).unwrap();
        s.push(a.adjoint(), w).unwrap();
        s
    }

    #[test]
    fn filter_semantics() {
        let a = random_matrix(&mut rng(1), 3);
        for (w, kept) in [(0.5, true), (-0.99, true), (1.0, false), (3.0, false)] {
            let mut s = HarmonicSeries::new(Space::generic(3));
            s.push(a.clone(), w).unwrap();
            let f = s.filtered(1.0).static_sum();
            assert_eq!(f, if kept { a.clone() } else { CMat::zeros(3, 3) });
        }
    }

    #[test]
    fn empty_series_averages_to_zero() {
        let s = HarmonicSeries::new(Space::generic(4));
        let h = average_hamiltonian(&s, AveragingOrder::Third, 1.0).unwrap();
        assert_eq!(h.total, CMat::zeros(4, 4));
        assert!(h.residual.is_empty());
    }

    #[test]
    fn single_pair_second_order() {
        // H = F e^{−iζt} + F† e^{iζt} gives ½avg[H, U⁽¹⁾] = [F†, F]/ζ.
        let f = random_matrix(&mut rng(2), 4);
        let zeta = 3.7;
        let h = average_hamiltonian(&pair(&f, zeta), AveragingOrder::Second, 1.0).unwrap();
        let expect = commutator(&f.adjoint(), &f) * r(1.0 / zeta);
        assert!(max_abs(&(h.second - expect)) < 1e-14);
        assert!(h.residual.is_empty());
    }

    #[test]
    fn hypothesis_checks() {
        let f = random_matrix(&mut rng(3), 3);
        assert!(matches!(average_hamiltonian(&pair(&f, 0.5), AveragingOrder::Second, 1.0), Err(Error::HypothesisViolated(_))));
        assert!(average_hamiltonian(&pair(&f, 2.0), AveragingOrder::Second, 0.0).is_err());
        let mut s = HarmonicSeries::new(Space::generic(3));
        assert!(s.push(CMat::zeros(2, 2), 1.0).is_err());
        assert!(s.push(f.clone(), f64::INFINITY).is_err());
    }

    #[test]
    fn hermiticity_predicate() {
        let f = random_matrix(&mut rng(4), 3);
        assert!(pair(&f, 2.0).is_hermitian(1e-14));
        let mut s = HarmonicSeries::new(Space::generic(3));
        s.push(f.clone(), 2.0).unwrap();
        assert!(!s.is_hermitian(1e-14));
        s.push(f * c(0.0, 1.0), -2.0).unwrap();
        assert!(!s.is_hermitian(1e-14));
    }

    #[test]
    fn averaged_hermitian_series_is_hermitian() {
        let mut g = rng(6);
        let mut s = HarmonicSeries::new(Space::generic(5));
        for w in [2.0, 3.5, 5.5] {
            let f = random_matrix(&mut g, 5);
            s.push(f.clone(), -w).unwrap();
            s.push(f.adjoint(), w).unwrap();
        }
        let h = average_hamiltonian(&s, AveragingOrder::Third, 1.0).unwrap();
        assert!(max_abs(&(&h.total - h.total.adjoint())) < 1e-12);
        // 2.0 + 3.5 − 5.5 = 0 lands inside the window.
        assert!(max_abs(&h.third) > 1e-3);
    }

    #[test]
    fn windows_for_a_regime_point() {
        let p = super::super::tests::generic_point();
        let w = cutoff_windows(&p).unwrap();
        let max_slow = w.slow.iter().map(|x| x.1).fold(0.0, f64::max);
        let min_fast = w.fast.iter().map(|x| x.1).fold(f64::INFINITY, f64::min);
        assert!(max_slow < w.omega0 && w.omega0 < min_fast);
        let sym = PhysicalParams::symmetric(1.0, 100.0, 2.0, 2.0, 0.1, 1.0, 1.0, 1.0, 50.0);
        let w = cutoff_windows(&sym).unwrap();
        assert_eq!(w.slow.iter().map(|x| x.1).fold(0.0, f64::max), 0.0);
        assert!(w.omega0 > 0.0);
        let bad = PhysicalParams { omega_s: 1.02, ..p };
        assert!(cutoff_windows(&bad).is_err());
    }

    #[test]
    fn vacuum_block_extraction() {
        let tr = TruncationSpec { n_p_max: 1, n_s_max: 3, n: 2, max_excitations: None };
        let x = CMat::from_fn(2 * 4 * 6, 2 * 4 * 6, |i, j| c(i as f64, j as f64));
        let b = signal_vacuum_block(&x, &tr, 6).unwrap();
        assert_eq!(b[(7, 1)], c(4.0 * 6.0 + 1.0, 1.0));
        assert!(signal_vacuum_block(&CMat::zeros(3, 3), &tr, 6).is_err());
    }
}
