//! Certification of the logical states as approximate stationary states of the full
//! model, and tracking of the full model by the effective one.

use serde::Serialize;

use crate::dynamics::{evolve, fidelity, propagate, uniform_grid, EvolveOptions, Generator, Tolerances};
use crate::error::{invalid, Result};
use crate::fock::{logical_state, s, Occupation};
use crate::linalg::{hs_norm, max_abs, r, CMat, CVec, C64, I};
use crate::liouville::{liouvillian_effective, DensityMatrix};

use super::full::{full_model, truncated_coherent, FieldQutritBasis, FullModel, Picture, TruncationSpec};
use super::{DerivedParams, PhysicalParams, SMALLNESS};

/// Population allowed in the top two Fock levels of either field.
pub const TAIL_LIMIT: f64 = 1e-6;

#[derive(Clone, Copy, Debug)]
pub struct StationarityOptions {
    /// Integrate the full model and compare with the predicted evolution.
    pub trajectory: bool,
    /// End of the integration window in units of `1/κ_p`.
    pub horizon: f64,
    pub n_points: usize,
    pub tol: Tolerances,
    /// Largest acceptable `max deviation / ε₁`.
    pub max_constant: f64,
    /// Tolerance on the exact identity for `𝓛_I ρ_𝕛`.
    pub identity_tol: f64,
}

impl Default for StationarityOptions {
    fn default() -> Self {
        Self { trajectory: true, horizon: 5.0, n_points: 51, tol: Tolerances::default(), max_constant: 10.0, identity_tol: 1e-12 }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Epsilons {
    pub epsilon1: f64,
    pub epsilon2: f64,
    pub smallness: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct PowerResidual {
    pub n: usize,
    /// `max|𝓛_Iⁿρ_𝕛 − prediction| / max|prediction|`.
    pub relative: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct Residuals {
    /// `max|𝓛_Iρ_𝕛 − (−i√2J[α_po|2_s⟩⟨0_s| − h.c.] ⊗ ρ_pq)|`.
    pub identity: f64,
    /// `max|𝓛_Iρ_𝕛|`.
    pub identity_scale: f64,
    pub powers: Vec<PowerResidual>,
}

#[derive(Clone, Debug, Serialize)]
pub struct CoefficientBound {
    pub name: &'static str,
    pub value: f64,
    pub bound: f64,
    /// False for the entries that assume `|Ω_d/κ_p| ~ 1`.
    pub strict: bool,
    pub holds: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct Bounds {
    /// `|√2Jα_po/(κ_s + 2iδ_s)|`.
    pub correction_amplitude: f64,
    /// `2√2 ε₁ |Ω_d|/κ_p`.
    pub correction_bound: f64,
    /// `‖R_s(∞)‖_HS = √2 |√2Jα_po/(κ_s + 2iδ_s)|`.
    pub r_infinity_norm: f64,
    pub coefficients: Vec<CoefficientBound>,
}

#[derive(Clone, Debug, Serialize)]
pub struct TrajectoryDeviation {
    pub times: Vec<f64>,
    /// `‖ρ(t) − ρ_𝕛 − R_s(t) ⊗ ρ_pq‖_HS`.
    pub deviation: Vec<f64>,
    pub max_deviation: f64,
    /// `max_deviation / ε₁`.
    pub constant: f64,
    pub max_constant: f64,
    /// `‖ρ(t_end) − ρ_𝕛‖_HS`.
    pub final_offset: f64,
    pub pump_tail: f64,
    pub signal_tail: f64,
    pub tails_ok: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct StationarityReport {
    pub bit: u8,
    pub params: PhysicalParams,
    pub derived: DerivedParams,
    pub truncation: TruncationSpec,
    pub dimension: usize,
    pub epsilons: Epsilons,
    pub residuals: Residuals,
    pub bounds: Bounds,
    pub trajectory_deviation: Option<TrajectoryDeviation>,
    pub identity_tol: f64,
}

impl StationarityReport {
    pub fn identity_holds(&self) -> bool {
        self.residuals.identity <= self.identity_tol
    }

    pub fn bound_holds(&self) -> bool {
        self.bounds.correction_amplitude <= self.bounds.correction_bound * (1.0 + 1e-12)
    }

    pub fn trajectory_holds(&self) -> bool {
        self.trajectory_deviation.as_ref().map_or(true, |t| t.constant <= t.max_constant && t.tails_ok)
    }

    pub fn passed(&self) -> bool {
        self.identity_holds() && self.bound_holds() && self.trajectory_holds()
    }
}

fn ket(n_max: usize, k: usize) -> CVec {
    CVec::from_fn(n_max + 1, |i, _| if i == k { r(1.0) } else { r(0.0) })
}

fn signal_transition(n_max: usize, to: usize, from: usize) -> CMat {
    ket(n_max, to) * ket(n_max, from).adjoint()
}

fn pump_qutrit_state(basis: &FieldQutritBasis, pump: &CVec, qutrit: &CVec, signal: &CMat) -> CMat {
    let p = pump * pump.adjoint();
    let q = qutrit * qutrit.adjoint();
    basis.operator(&p, signal, &q)
}

/// Applies `𝓛_I` to `ρ_𝕛 = |α_po⟩⟨α_po| ⊗ |0_s⟩⟨0_s| ⊗ |𝕛_L⟩⟨𝕛_L|`, compares with the closed form and
/// its powers, and optionally integrates the full model against `ρ_𝕛 + R_s(t) ⊗ ρ_pq`.
pub fn approx_stationarity_check(pp: &PhysicalParams, tr: &TruncationSpec, bit: u8, opts: &StationarityOptions) -> Result<StationarityReport> {
    tr.validate()?;
    if !pp.is_symmetric() {
        return invalid("stationarity certification needs g_2 = g_3 and omega_2 = omega_3");
    }
    if tr.n_s_max < 4 {
        return invalid("stationarity certification needs at least 5 signal levels");
    }
    if tr.max_excitations.is_some() {
        return invalid("stationarity certification uses a box truncation");
    }
    let dp = pp.derive()?;
    let model: FullModel = full_model(pp, tr, Picture::Interaction)?;
    let basis = &model.basis;
    let gen = model.sparse()?;
    let q = logical_state(&basis.qutrits, bit)?;
    let coherent = truncated_coherent(tr.n_p_max, dp.alpha_po);
    let ns = tr.n_s_max;
    let rho_j = pump_qutrit_state(basis, &coherent, q.amplitudes(), &signal_transition(ns, 0, 0));
    let up = pump_qutrit_state(basis, &coherent, q.amplitudes(), &signal_transition(ns, 2, 0));
    let down = up.adjoint();

    let sqrt2j = 2f64.sqrt() * pp.j;
    let exact = gen.rhs(&rho_j);
    let closed = (&up * dp.alpha_po - &down * dp.alpha_po.conj()) * (-I * sqrt2j);
    let identity = max_abs(&(&exact - &closed));

    let lam = C64::new(-pp.kappa_s, -2.0 * dp.delta_s);
    let mut powers = Vec::with_capacity(4);
    let mut x = exact.clone();
    for n in 1..=4usize {
        if n > 1 {
            x = gen.rhs(&x);
        }
        let f = lam.powi(n as i32 - 1);
        let pred = (&up * (dp.alpha_po * f) - &down * (dp.alpha_po * f).conj()) * (-I * sqrt2j);
        let scale = max_abs(&pred);
        let relative = if scale == 0.0 { max_abs(&x) } else { max_abs(&(&x - &pred)) / scale };
        powers.push(PowerResidual { n, relative });
    }

    let c = dp.signal_correction_amplitude(pp);
    let eps1 = dp.epsilon1;
    let denom = C64::new(-pp.kappa_s, 2.0 * dp.delta_s).norm();
    let entry = |name, value: f64, bound: f64, strict| CoefficientBound { name, value, bound, strict, holds: value <= bound * (1.0 + 1e-12) };
    let coefficients = vec![
        entry("sqrt2_j", sqrt2j.abs() / denom, 2f64.sqrt() * eps1, true),
        entry("sqrt2_g", 2f64.sqrt() * pp.g_2.abs() / denom, 2f64.sqrt() * eps1, true),
        entry("sqrt2_j_alpha", sqrt2j.abs() * dp.alpha_po.norm() / denom, 2.0 * 2f64.sqrt() * eps1, false),
        entry("sqrt12_j_alpha", 12f64.sqrt() * pp.j.abs() * dp.alpha_po.norm() / denom, 2.0 * 12f64.sqrt() * eps1, false),
    ];
    let bounds = Bounds {
        correction_amplitude: c.norm(),
        correction_bound: 2.0 * 2f64.sqrt() * eps1 * pp.drive.abs() / pp.kappa_p,
        r_infinity_norm: 2f64.sqrt() * c.norm(),
        coefficients,
    };

    let trajectory_deviation = if opts.trajectory {
        let t_end = opts.horizon / pp.kappa_p;
        let times = uniform_grid(0.0, t_end, opts.n_points)?;
        let rho0 = DensityMatrix::new(model.space(), rho_j.clone())?;
        let traj = evolve(&gen, &rho0, &times, &EvolveOptions { tol: opts.tol, eigen_diagnostics: false })?;
        let mut deviation = Vec::with_capacity(times.len());
        let (mut pump_tail, mut signal_tail) = (0.0f64, 0.0f64);
        for (t, rho) in traj.times.iter().zip(&traj.states) {
            let xt = C64::new(0.0, 1.0) * c * ((lam * *t).exp() - 1.0);
            let predicted = &rho_j + &up * xt + &down * xt.conj();
            deviation.push(hs_norm(&(rho - predicted)));
            let (p, s) = basis.tail_populations(rho);
            pump_tail = pump_tail.max(p);
            signal_tail = signal_tail.max(s);
        }
        let max_deviation = deviation.iter().copied().fold(0.0, f64::max);
        Some(TrajectoryDeviation {
            final_offset: hs_norm(&(traj.final_state() - &rho_j)),
            times: traj.times,
            deviation,
            max_deviation,
            constant: max_deviation / eps1,
            max_constant: opts.max_constant,
            pump_tail,
            signal_tail,
            tails_ok: pump_tail < TAIL_LIMIT && signal_tail < TAIL_LIMIT,
        })
    } else {
        None
    };

    Ok(StationarityReport {
        bit,
        params: *pp,
        derived: dp,
        truncation: *tr,
        dimension: model.space().dim,
        epsilons: Epsilons { epsilon1: dp.epsilon1, epsilon2: dp.epsilon2, smallness: SMALLNESS },
        residuals: Residuals { identity, identity_scale: max_abs(&exact), powers },
        bounds,
        trajectory_deviation,
        identity_tol: opts.identity_tol,
    })
}

#[derive(Clone, Copy, Debug)]
pub struct TrackingOptions {
    /// End of the window in units of `1/κ₁`.
    pub horizon: f64,
    pub n_points: usize,
    /// Allowed relative error in units of `ε₁ + ε₂`.
    pub factor: f64,
}

impl Default for TrackingOptions {
    fn default() -> Self {
        Self { horizon: 10.0, n_points: 201, factor: 5.0 }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ObservableTrack {
    pub name: &'static str,
    pub full: Vec<f64>,
    pub effective: Vec<f64>,
    /// `max_t|full − effective| / max_t|effective|`.
    pub relative_error: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct TrackingReport {
    pub params: PhysicalParams,
    pub truncation: TruncationSpec,
    pub dimension: usize,
    pub epsilon1: f64,
    pub epsilon2: f64,
    pub tolerance: f64,
    pub times: Vec<f64>,
    pub observables: Vec<ObservableTrack>,
    pub max_relative_error: f64,
    /// Without drive the excitation cut is invariant and needs no tail monitor.
    pub truncation_exact: bool,
    pub pump_tail: f64,
    pub signal_tail: f64,
}

impl TrackingReport {
    pub fn tails_ok(&self) -> bool {
        self.truncation_exact || (self.pump_tail < TAIL_LIMIT && self.signal_tail < TAIL_LIMIT)
    }

    pub fn passed(&self) -> bool {
        self.max_relative_error < self.tolerance && self.tails_ok()
    }
}

fn relative_error(full: &[f64], eff: &[f64]) -> f64 {
    let num = full.iter().zip(eff).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let den = eff.iter().map(|v| v.abs()).fold(0.0, f64::max);
    if den == 0.0 {
        num
    } else {
        num / den
    }
}

/// Evolves the full model from `|0_p, 0_s⟩ ⊗ |initial⟩` and the effective model from `|initial⟩`
/// over `[0, horizon/κ₁]` and compares `⟨S₁₁⟩`, `F₀` and `F₁`.
pub fn tracking_check(pp: &PhysicalParams, tr: &TruncationSpec, initial: &Occupation, opts: &TrackingOptions) -> Result<TrackingReport> {
    if opts.n_points < 2 || !(opts.horizon > 0.0) {
        return invalid("tracking needs at least two points and a positive horizon");
    }
    let dp = pp.derive()?;
    let ep = dp.effective()?;
    if !(ep.kappa1 > 0.0) {
        return invalid("tracking horizon is set by κ₁, which vanishes");
    }
    let model = full_model(pp, tr, Picture::Interaction)?;
    let basis = &model.basis;
    let q = &basis.qutrits;
    let qi = q.basis_state(initial)?;
    let (psi, lost) = basis.product_state(&ket(tr.n_p_max, 0), &ket(tr.n_s_max, 0), qi.amplitudes())?;
    if lost > 0.0 {
        return invalid("initial state lies outside the truncation");
    }
    let dt = opts.horizon / ep.kappa1 / (opts.n_points - 1) as f64;
    let steps = opts.n_points - 1;
    let full = propagate(&model.superoperator()?, &DensityMatrix::new(model.space(), &psi * psi.adjoint())?, dt, steps, false)?;
    let eff_l = liouvillian_effective(q, &ep);
    let eff = propagate(&eff_l, &DensityMatrix::pure(&qi), dt, steps, false)?;

    let s11 = s(q, 1, 1);
    let zero = logical_state(q, 0)?;
    let one = logical_state(q, 1)?;
    let observe = |rho: &CMat| -> Result<[f64; 3]> { Ok([(&s11 * rho).trace().re, fidelity(rho, &zero)?, fidelity(rho, &one)?]) };
    let (mut fv, mut ev) = (vec![[0.0; 3]; full.len()], vec![[0.0; 3]; eff.len()]);
    let (mut pump_tail, mut signal_tail) = (0.0f64, 0.0f64);
    for (k, rho) in full.states.iter().enumerate() {
        fv[k] = observe(&basis.reduce_to_qutrits(rho))?;
        let (p, s) = basis.tail_populations(rho);
        pump_tail = pump_tail.max(p);
        signal_tail = signal_tail.max(s);
    }
    for (k, rho) in eff.states.iter().enumerate() {
        ev[k] = observe(rho)?;
    }
    let observables: Vec<ObservableTrack> = ["S11", "F0", "F1"]
        .iter()
        .enumerate()
        .map(|(i, name)| {
            let a: Vec<f64> = fv.iter().map(|v| v[i]).collect();
            let b: Vec<f64> = ev.iter().map(|v| v[i]).collect();
            ObservableTrack { name, relative_error: relative_error(&a, &b), full: a, effective: b }
        })
        .collect();
    let max_relative_error = observables.iter().map(|o| o.relative_error).fold(0.0, f64::max);
    Ok(TrackingReport {
        params: *pp,
        truncation: *tr,
        dimension: model.space().dim,
        epsilon1: dp.epsilon1,
        epsilon2: dp.epsilon2,
        tolerance: opts.factor * (dp.epsilon1 + dp.epsilon2),
        times: full.times,
        observables,
        max_relative_error,
        truncation_exact: tr.max_excitations.is_some() && pp.drive == 0.0,
        pump_tail,
        signal_tail,
    })
}
