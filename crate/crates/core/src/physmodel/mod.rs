//! Pump ⊗ signal ⊗ qutrit-ensemble model: its parameters, the two adiabatic
//! eliminations, third-order averaging of the signal-mediated interaction, the
//! qubit special case and certification of the approximate stationary states.
//!
//! Frequencies and rates are angular and ħ = 1 throughout.

pub mod averaging;
pub mod elimination;
pub mod full;
pub mod stationarity;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linalg::{C64, I};
use crate::liouville::EffectiveParams;

pub use averaging::{average_hamiltonian, cutoff_windows, AveragedHamiltonian, AveragingOrder, CutoffWindows, HarmonicSeries};
pub use elimination::{
    averaged_interaction_closed_form, averaging_comparison, first_elimination, qubit_reduction, second_elimination, AveragingComparison, FirstElimination,
    QubitIdentification, QubitReduction, SecondElimination,
};
pub use full::{full_model, FullModel, Picture, SparseLindblad, TruncationSpec};
pub use stationarity::{approx_stationarity_check, tracking_check, StationarityOptions, StationarityReport, TrackingOptions, TrackingReport};

/// An elimination is treated as controlled when its small parameter is at most this.
pub const SMALLNESS: f64 = 0.1;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicalParams {
    pub omega_p: f64,
    pub omega_s: f64,
    pub omega_2: f64,
    pub omega_3: f64,
    /// Frequency of the classical drive on the pump.
    pub omega_d: f64,
    /// Drive strength `Ω_d`.
    pub drive: f64,
    /// Parametric pump–signal coupling.
    pub j: f64,
    pub g_2: f64,
    pub g_3: f64,
    pub kappa_p: f64,
    pub kappa_s: f64,
}

impl PhysicalParams {
    /// Degenerate excited levels with equal couplings.
    #[allow(clippy::too_many_arguments)]
    pub fn symmetric(omega_q: f64, omega_s: f64, omega_p: f64, omega_d: f64, drive: f64, j: f64, g: f64, kappa_p: f64, kappa_s: f64) -> Self {
        Self { omega_p, omega_s, omega_2: omega_q, omega_3: omega_q, omega_d, drive, j, g_2: g, g_3: g, kappa_p, kappa_s }
    }

    pub fn validate(&self) -> Result<()> {
        let all = [
            ("omega_p", self.omega_p),
            ("omega_s", self.omega_s),
            ("omega_2", self.omega_2),
            ("omega_3", self.omega_3),
            ("omega_d", self.omega_d),
            ("drive", self.drive),
            ("j", self.j),
            ("g_2", self.g_2),
            ("g_3", self.g_3),
            ("kappa_p", self.kappa_p),
            ("kappa_s", self.kappa_s),
        ];
        if let Some((name, _)) = all.iter().find(|(_, v)| !v.is_finite()) {
            return invalid(format!("{name} must be finite"));
        }
        for (name, v) in [("omega_p", self.omega_p), ("omega_s", self.omega_s), ("omega_d", self.omega_d), ("kappa_p", self.kappa_p), ("kappa_s", self.kappa_s)] {
            if v <= 0.0 {
                return invalid(format!("{name} must be positive"));
            }
        }
        // Zero is allowed so that level 3 can be switched off for the qubit case.
        for (name, v) in [("omega_2", self.omega_2), ("omega_3", self.omega_3)] {
            if v < 0.0 {
                return invalid(format!("{name} must be nonnegative"));
            }
        }
        Ok(())
    }

    pub fn is_symmetric(&self) -> bool {
        self.g_2 == self.g_3 && self.omega_2 == self.omega_3
    }

    pub fn derive(&self) -> Result<DerivedParams> {
        DerivedParams::new(self)
    }
}

/// Quantities defined for degenerate levels and equal couplings.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SymmetricParams {
    pub kappa1: f64,
    pub kappa2: f64,
    pub xi: f64,
    pub delta: f64,
    pub delta1: f64,
    #[serde(with = "crate::linalg::complex_serde")]
    pub alpha0: C64,
    pub chi: f64,
    /// `Δ = ω_s − ω_q`.
    pub detuning: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DerivedParams {
    pub delta_p: f64,
    pub delta_s: f64,
    pub kappa_s_prime: f64,
    pub delta_p_prime: f64,
    pub kappa_p_prime: f64,
    /// `Δ_s = 2ω_s − ω_p`.
    pub detuning_s: f64,
    /// `Δ_j = ω_s − ω_j`.
    pub detuning_2: f64,
    pub detuning_3: f64,
    pub chi_2: f64,
    pub chi_3: f64,
    pub chi_23: f64,
    pub g_23: f64,
    pub delta_p_dprime: f64,
    pub kappa_p_dprime: f64,
    #[serde(with = "crate::linalg::complex_serde")]
    pub alpha_p: C64,
    pub xi_2: f64,
    pub xi_3: f64,
    pub xi_23: f64,
    #[serde(with = "crate::linalg::complex_serde")]
    pub alpha_q: C64,
    /// Pump amplitude driven by the bare pump parameters.
    #[serde(with = "crate::linalg::complex_serde")]
    pub alpha_po: C64,
    pub epsilon1: f64,
    pub epsilon2: f64,
    pub symmetric: Option<SymmetricParams>,
}

fn nonzero(name: &str, v: f64) -> Result<f64> {
    if v == 0.0 || !v.is_finite() {
        return Err(Error::SingularParameters(format!("{name} = 0")));
    }
    Ok(v)
}

fn max_of(values: &[f64]) -> f64 {
    values.iter().copied().fold(0.0, f64::max)
}

/// `g²J[1/(2Δ_j²) + 1/(Δ_s(Δ_s − Δ_j))]`.
fn chi_single(g: f64, j: f64, det_j: f64, det_s: f64) -> f64 {
    g * g * j * (1.0 / (2.0 * det_j * det_j) + 1.0 / (det_s * (det_s - det_j)))
}

impl DerivedParams {
    pub fn new(pp: &PhysicalParams) -> Result<Self> {
        pp.validate()?;
        let delta_p = pp.omega_p - pp.omega_d;
        let delta_s = pp.omega_s - pp.omega_d / 2.0;
        let kappa_s_prime = ((pp.kappa_s / 2.0).powi(2) + delta_s * delta_s).sqrt();
        let jr = pp.j / kappa_s_prime;
        let delta_p_prime = delta_p - delta_s * jr * jr;
        let kappa_p_prime = pp.kappa_p + pp.kappa_s * jr * jr;

        let detuning_s = nonzero("Δ_s", 2.0 * pp.omega_s - pp.omega_p)?;
        let detuning_2 = nonzero("Δ_2", pp.omega_s - pp.omega_2)?;
        let detuning_3 = nonzero("Δ_3", pp.omega_s - pp.omega_3)?;
        nonzero("Δ_s − Δ_2", detuning_s - detuning_2)?;
        nonzero("Δ_s − Δ_3", detuning_s - detuning_3)?;
        nonzero("Δ_2 + Δ_3", detuning_2 + detuning_3)?;

        let chi_2 = chi_single(pp.g_2, pp.j, detuning_2, detuning_s);
        let chi_3 = chi_single(pp.g_3, pp.j, detuning_3, detuning_s);
        let chi_23 = pp.g_2
            * pp.g_3
            * pp.j
            * [detuning_2, detuning_3]
                .iter()
                .map(|&d| 1.0 / (d * (detuning_2 + detuning_3)) + 1.0 / (detuning_s * (detuning_s - d)))
                .sum::<f64>();
        let g_23 = pp.g_2 * pp.g_3 / 2.0 * (1.0 / detuning_2 + 1.0 / detuning_3);

        let delta_p_dprime = delta_p_prime - 2.0 * pp.j * pp.j / detuning_s;
        let kappa_p_dprime = ((kappa_p_prime / 2.0).powi(2) + delta_p_dprime * delta_p_dprime).sqrt();
        let alpha_p = pp.drive / C64::new(-delta_p_dprime, kappa_p_prime / 2.0);
        let shift = delta_s / (kappa_s_prime * kappa_s_prime);
        let xi_2 = pp.omega_2 - pp.g_2 * pp.g_2 * (1.0 / detuning_2 + shift);
        let xi_3 = pp.omega_3 - pp.g_3 * pp.g_3 * (1.0 / detuning_3 + shift);
        let xi_23 = pp.g_2 * pp.g_3 * (0.5 * (1.0 / detuning_2 + 1.0 / detuning_3) + shift);
        let alpha_q = alpha_p * kappa_p_dprime;
        let alpha_po = pp.drive / C64::new(-delta_p, pp.kappa_p / 2.0);

        let ks = pp.kappa_s;
        let epsilon1 = max_of(&[
            (delta_p / ks).abs(),
            pp.omega_2 / ks,
            pp.omega_3 / ks,
            (pp.drive / ks).abs(),
            (pp.j / ks).abs(),
            (pp.g_2 / ks).abs(),
            (pp.g_3 / ks).abs(),
            pp.omega_d / (2.0 * ks),
            pp.kappa_p / ks,
        ]);
        let kp = kappa_p_prime;
        let gs = [pp.g_2, pp.g_3];
        let mut set2 = vec![
            pp.omega_d / (2.0 * kp),
            (pp.omega_2 - pp.g_2 * pp.g_2 / detuning_2).abs() / kp,
            (pp.omega_3 - pp.g_3 * pp.g_3 / detuning_3).abs() / kp,
            chi_23.abs() / kp,
            chi_2.abs() / kp,
            chi_3.abs() / kp,
            g_23.abs() / kp,
            (pp.g_2 * pp.g_2 / (detuning_2 * kp)).abs(),
            (pp.g_3 * pp.g_3 / (detuning_3 * kp)).abs(),
        ];
        for gj in gs {
            for gk in gs {
                set2.push((shift * gj * gk).abs() / kp);
            }
        }
        let epsilon2 = max_of(&set2);

        let symmetric = pp.is_symmetric().then(|| {
            let g = pp.g_2;
            let omega_q = pp.omega_2;
            let detuning = detuning_2;
            let chi = chi_2;
            let kappa1 = pp.kappa_s * g * g / (kappa_s_prime * kappa_s_prime);
            let kappa2 = kappa_p_prime * chi * chi / (kappa_p_dprime * kappa_p_dprime);
            SymmetricParams {
                kappa1,
                kappa2,
                xi: g * g * (1.0 / detuning + shift),
                delta: -delta_p_dprime * (kappa2 / kappa_p_prime),
                delta1: pp.omega_d / 2.0 - omega_q,
                alpha0: alpha_p * chi,
                chi,
                detuning,
            }
        });

        Ok(Self {
            delta_p,
            delta_s,
            kappa_s_prime,
            delta_p_prime,
            kappa_p_prime,
            detuning_s,
            detuning_2,
            detuning_3,
            chi_2,
            chi_3,
            chi_23,
            g_23,
            delta_p_dprime,
            kappa_p_dprime,
            alpha_p,
            xi_2,
            xi_3,
            xi_23,
            alpha_q,
            alpha_po,
            epsilon1,
            epsilon2,
            symmetric,
        })
    }

    /// Parameters of the effective qutrit master equation; requires symmetric couplings.
    pub fn effective(&self) -> Result<EffectiveParams> {
        let s = self.symmetric.ok_or_else(|| Error::InvalidArgument("effective parameters need g_2 = g_3 and omega_2 = omega_3".into()))?;
        let p = EffectiveParams { kappa1: s.kappa1, kappa2: s.kappa2, xi: s.xi, delta: s.delta, delta1: s.delta1, alpha0: s.alpha0 };
        p.validate()?;
        Ok(p)
    }

    /// `√2 J α_po / (κ_s + 2iδ_s)`, the amplitude of the stationary signal correction.
    pub fn signal_correction_amplitude(&self, pp: &PhysicalParams) -> C64 {
        2f64.sqrt() * pp.j * self.alpha_po / (pp.kappa_s + 2.0 * I * self.delta_s)
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use rand::Rng;

    /// A regime point with well separated scales and generic (non-degenerate) couplings.
    pub(crate) fn generic_point() -> PhysicalParams {
        PhysicalParams { omega_p: 2.1, omega_s: 100.0, omega_2: 1.0, omega_3: 1.05, omega_d: 2.0, drive: 0.3, j: 0.9, g_2: 0.7, g_3: 1.3, kappa_p: 1.0, kappa_s: 50.0 }
    }

    pub(crate) fn random_point(g: &mut impl Rng, symmetric: bool) -> PhysicalParams {
        let omega_2 = g.gen_range(0.8..1.2);
        let omega_3 = if symmetric { omega_2 } else { g.gen_range(0.8..1.2) };
        let g_2 = g.gen_range(0.5..1.5);
        let g_3 = if symmetric { g_2 } else { g.gen_range(0.5..1.5) };
        PhysicalParams {
            omega_p: omega_2 + omega_3 + g.gen_range(-0.05..0.05),
            omega_s: g.gen_range(60.0..120.0),
            omega_2,
            omega_3,
            omega_d: g.gen_range(1.8..2.2),
            drive: g.gen_range(-0.5..0.5),
            j: g.gen_range(0.2..2.0),
            g_2,
            g_3,
            kappa_p: g.gen_range(0.5..2.0),
            kappa_s: g.gen_range(20.0..200.0),
        }
    }

    #[test]
    fn validation() {
        let p = generic_point();
        assert!(p.validate().is_ok());
        assert!(PhysicalParams { kappa_s: 0.0, ..p }.validate().is_err());
        assert!(PhysicalParams { omega_3: -1.0, ..p }.validate().is_err());
        assert!(PhysicalParams { j: f64::NAN, ..p }.validate().is_err());
        assert!(PhysicalParams { omega_3: 0.0, g_3: 0.0, ..p }.validate().is_ok());
        assert!(matches!(PhysicalParams { omega_2: 100.0, ..p }.derive(), Err(Error::SingularParameters(_))));
    }

    #[test]
    fn elementary_limits() {
        let p = PhysicalParams { j: 0.0, ..generic_point() };
        let d = p.derive().unwrap();
        assert_eq!(d.kappa_p_prime, p.kappa_p);
        assert_eq!(d.delta_p_prime, d.delta_p);
        let d = PhysicalParams { drive: 0.0, ..generic_point() }.derive().unwrap();
        assert_eq!(d.alpha_p, C64::new(0.0, 0.0));
        assert_eq!(d.alpha_po, C64::new(0.0, 0.0));
        let s = PhysicalParams::symmetric(1.0, 100.0, 2.0, 2.0, 0.0, 1.0, 1.0, 1.0, 50.0).derive().unwrap();
        let sym = s.symmetric.unwrap();
        assert_eq!(sym.alpha0, C64::new(0.0, 0.0));
        assert_eq!(sym.delta1, 0.0);
        assert!(generic_point().derive().unwrap().symmetric.is_none());
    }

    #[test]
    fn symmetric_identities() {
        let p = PhysicalParams::symmetric(1.1, 80.0, 2.15, 2.0, 0.4, 1.2, 0.8, 1.5, 60.0);
        let d = p.derive().unwrap();
        let s = d.symmetric.unwrap();
        assert_eq!(d.chi_2, d.chi_3);
        assert!((d.chi_23 - 2.0 * s.chi).abs() <= 1e-15 * s.chi.abs());
        assert!((d.xi_23 - s.xi).abs() <= 1e-15 * s.xi.abs());
        assert!((d.xi_2 - (p.omega_2 - s.xi)).abs() < 1e-15);
        assert!((d.alpha_q * (s.kappa2 / d.kappa_p_prime).sqrt() - s.alpha0).norm() < 1e-15 * s.alpha0.norm().max(1e-300));
    }

    #[test]
    fn epsilons_scale_with_kappa_s() {
        let p = generic_point();
        let e1 = p.derive().unwrap().epsilon1;
        let e1b = PhysicalParams { kappa_s: 10.0 * p.kappa_s, ..p }.derive().unwrap().epsilon1;
        assert!((e1 / e1b - 10.0).abs() < 1e-12);
        assert!(e1 > 0.0);
    }

    #[test]
    fn correction_amplitude_bound() {
        let mut g = crate::testutil::rng(5);
        for _ in 0..50 {
            let p = random_point(&mut g, true);
            let d = p.derive().unwrap();
            let lhs = d.signal_correction_amplitude(&p).norm();
            let rhs = 2.0 * 2f64.sqrt() * d.epsilon1 * p.drive.abs() / p.kappa_p;
            assert!(lhs <= rhs * (1.0 + 1e-14));
        }
    }
}
