//! Time evolution of density matrices, fidelities, the δ₁-switching gate
//! protocol and coherent preparation of the logical states.

pub mod dopri;

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::fock::{logical_state, s, superposition_state, Occupation, OccupationBasis};
use crate::linalg::{
    c, hermitian_part, hermiticity_defect, hs_norm, min_eigenvalue, r, unitary_propagator, unvectorize, vectorize,
    CMat, Operator, Space, StateVector, C64, I, ZERO,
};
use crate::liouville::{effective_lindblad, DensityMatrix, EffectiveParams, Lindblad, Superoperator};

pub use dopri::{StepStats, Tolerances};

/// Anything that maps `ρ` to `dρ/dt`.
pub trait Generator {
    fn space(&self) -> Space;
    fn rhs(&self, rho: &CMat) -> CMat;
}

impl Generator for Superoperator {
    fn space(&self) -> Space {
        Superoperator::space(self)
    }

    fn rhs(&self, rho: &CMat) -> CMat {
        self.act(rho)
    }
}

impl Generator for Lindblad {
    fn space(&self) -> Space {
        self.space
    }

    fn rhs(&self, rho: &CMat) -> CMat {
        self.apply(rho)
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct Diagnostics {
    /// `|Tr ρ(t) − Tr ρ(0)|`.
    pub trace_drift: f64,
    /// `max|ρ − ρ†|` before Hermitization.
    pub hermiticity_drift: f64,
    pub min_eigenvalue: f64,
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub space: Space,
    pub times: Vec<f64>,
    /// Hermitized states at `times`.
    pub states: Vec<CMat>,
    pub diagnostics: Vec<Diagnostics>,
    pub stats: StepStats,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn final_state(&self) -> &CMat {
        self.states.last().expect("trajectory has at least the initial point")
    }

    pub fn max_trace_drift(&self) -> f64 {
        self.diagnostics.iter().map(|d| d.trace_drift).fold(0.0, f64::max)
    }

    pub fn max_hermiticity_drift(&self) -> f64 {
        self.diagnostics.iter().map(|d| d.hermiticity_drift).fold(0.0, f64::max)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.diagnostics.iter().map(|d| d.min_eigenvalue).fold(f64::INFINITY, f64::min)
    }

    fn push(&mut self, t: f64, raw: &CMat, trace0: C64, with_eig: bool) {
        let rho = hermitian_part(raw);
        self.diagnostics.push(Diagnostics {
            trace_drift: (raw.trace() - trace0).norm(),
            hermiticity_drift: hermiticity_defect(raw),
            min_eigenvalue: if with_eig { min_eigenvalue(&rho) } else { f64::NAN },
        });
        self.times.push(t);
        self.states.push(rho);
    }
}

#[derive(Clone, Copy, Debug)]
pub struct EvolveOptions {
    pub tol: Tolerances,
    /// Compute the minimum eigenvalue at each output point.
    pub eigen_diagnostics: bool,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        Self { tol: Tolerances::default(), eigen_diagnostics: true }
    }
}

fn check_grid(times: &[f64]) -> Result<()> {
    if times.is_empty() {
        return invalid("time grid is empty");
    }
    if times.iter().any(|t| !t.is_finite()) || times.windows(2).any(|w| w[1] <= w[0]) {
        return invalid("time grid must be finite and strictly increasing");
    }
    Ok(())
}

/// Integrates `dρ/dt = G(ρ)` from `times[0]`, recording every grid point.
pub fn evolve<G: Generator + ?Sized>(gen: &G, rho0: &DensityMatrix, times: &[f64], opts: &EvolveOptions) -> Result<Trajectory> {
    check_grid(times)?;
    crate::linalg::check_space(gen.space(), rho0.space())?;
    if let Err(e) = rho0.check_physical() {
        return invalid(format!("initial state: {e}"));
    }
    let y0 = rho0.matrix().clone();
    let trace0 = y0.trace();
    let mut traj = Trajectory {
        space: gen.space(),
        times: Vec::with_capacity(times.len()),
        states: Vec::with_capacity(times.len()),
        diagnostics: Vec::with_capacity(times.len()),
        stats: StepStats::default(),
    };
    let mut solver = dopri::Dopri::new(|m: &CMat| gen.rhs(m), times[0], y0, opts.tol);
    traj.push(times[0], &solver.y, trace0, opts.eigen_diagnostics);
    for &t in &times[1..] {
        solver.advance_to(t)?;
        traj.push(t, &solver.y, trace0, opts.eigen_diagnostics);
    }
    traj.stats = solver.stats;
    Ok(traj)
}

/// Propagates with the dense step `exp(𝓛Δt)` to the grid `kΔt`, `k = 0..=n_steps`.
pub fn propagate(l: &Superoperator, rho0: &DensityMatrix, dt: f64, n_steps: usize, eigen_diagnostics: bool) -> Result<Trajectory> {
    if !(dt > 0.0 && dt.is_finite()) {
        return invalid("time step must be positive and finite");
    }
    crate::linalg::check_space(l.space(), rho0.space())?;
    rho0.check_physical().map_err(|e| Error::InvalidArgument(format!("initial state: {e}")))?;
    let d = rho0.space().dim;
    let step = (l.matrix() * r(dt)).exp();
    let trace0 = rho0.matrix().trace();
    let mut traj = Trajectory { space: l.space(), times: vec![], states: vec![], diagnostics: vec![], stats: StepStats::default() };
    let mut v = vectorize(rho0.matrix());
    traj.push(0.0, rho0.matrix(), trace0, eigen_diagnostics);
    for k in 1..=n_steps {
        v = &step * v;
        traj.push(k as f64 * dt, &unvectorize(&v, d), trace0, eigen_diagnostics);
    }
    Ok(traj)
}

pub fn uniform_grid(t0: f64, t1: f64, n_points: usize) -> Result<Vec<f64>> {
    if n_points < 2 || !(t1 > t0) {
        return invalid("grid needs at least two points and t1 > t0");
    }
    Ok((0..n_points).map(|k| t0 + (t1 - t0) * k as f64 / (n_points - 1) as f64).collect())
}

#[derive(Clone, Debug)]
pub struct SteadyRun {
    pub trajectory: Trajectory,
    /// First time at which `‖ρ(t) − ρ(t − interval)‖_HS < tol`.
    pub converged_at: Option<f64>,
}

/// Evolves in steps of `interval` until successive states differ by less than `tol` (HS) or `t_max`.
pub fn evolve_until_steady<G: Generator + ?Sized>(
    gen: &G,
    rho0: &DensityMatrix,
    interval: f64,
    t_max: f64,
    tol: f64,
    opts: &EvolveOptions,
) -> Result<SteadyRun> {
    if !(interval > 0.0) || !(t_max > 0.0) {
        return invalid("interval and t_max must be positive");
    }
    crate::linalg::check_space(gen.space(), rho0.space())?;
    rho0.check_physical().map_err(|e| Error::InvalidArgument(format!("initial state: {e}")))?;
    let y0 = rho0.matrix().clone();
    let trace0 = y0.trace();
    let mut traj = Trajectory { space: gen.space(), times: vec![], states: vec![], diagnostics: vec![], stats: StepStats::default() };
    let mut solver = dopri::Dopri::new(|m: &CMat| gen.rhs(m), 0.0, y0, opts.tol);
    traj.push(0.0, &solver.y, trace0, opts.eigen_diagnostics);
    let mut converged_at = None;
    let mut k = 1usize;
    while converged_at.is_none() && (k as f64) * interval <= t_max * (1.0 + 1e-12) {
        let prev = solver.y.clone();
        let t = k as f64 * interval;
        solver.advance_to(t)?;
        traj.push(t, &solver.y, trace0, opts.eigen_diagnostics);
        if hs_norm(&(&solver.y - prev)) < tol {
            converged_at = Some(t);
        }
        k += 1;
    }
    traj.stats = solver.stats;
    Ok(SteadyRun { trajectory: traj, converged_at })
}

/// `√⟨ψ|ρ|ψ⟩`, clamping round-off down to `−1e-10`.
pub fn fidelity(rho: &CMat, psi: &StateVector) -> Result<f64> {
    if (psi.norm() - 1.0).abs() > 1e-10 {
        return invalid("fidelity target must be normalized");
    }
    let v = psi.amplitudes();
    let p = v.dotc(&(rho * v)).re;
    if p < -1e-10 {
        return Err(Error::NonPhysical(format!("negative population {p:e}")));
    }
    Ok(p.max(0.0).sqrt().min(1.0))
}

/// First time a sampled series reaches `level`, linearly interpolated.
pub fn crossing_time(times: &[f64], values: &[f64], level: f64) -> Option<f64> {
    let above = values.first()? >= &level;
    for k in 1..values.len() {
        if (values[k] >= level) != above {
            let (t0, t1, v0, v1) = (times[k - 1], times[k], values[k - 1], values[k]);
            return Some(t0 + (level - v0) * (t1 - t0) / (v1 - v0));
        }
    }
    None
}

/// Coefficients `(A₀₀, A₁₁, A₀₁, A₁₀)` of `ρ = Σ A_mn |m_L,φ⟩⟨n_L,φ|`.
pub type GateVector = [C64; 4];

/// Closed-form evolution of the logical block under `δ₁ S₁₁`.
pub fn gate_coefficients(a0: GateVector, delta1: f64, t: f64) -> GateVector {
    let tau = delta1 * t / 2.0;
    let (c2, s2) = (tau.cos().powi(2), tau.sin().powi(2));
    let b1 = -I * 0.5 * (delta1 * t).sin();
    let pop = a0[0] - a0[1];
    [
        a0[0] * c2 + a0[1] * s2 + b1 * (a0[2] - a0[3]),
        a0[0] * s2 + a0[1] * c2 - b1 * (a0[2] - a0[3]),
        b1 * pop + a0[2] * c2 + a0[3] * s2,
        -b1 * pop + a0[2] * s2 + a0[3] * c2,
    ]
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GateCoefficients {
    pub initial: [C64; 4],
    pub delta1: f64,
    pub phi: f64,
}

impl GateCoefficients {
    pub fn at(&self, t: f64) -> GateVector {
        gate_coefficients(self.initial, self.delta1, t)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Gate {
    Not,
    Sh,
    Zsh,
}

/// Switching index `p` and time `t_p > 0` for a gate.
///
/// NOT uses `δ₁t = π(2p+1)`; SH (even `p`) and ZSH (odd `p`) use `δ₁t = π(2p+1)/2`.
/// Without an explicit `p`, the smallest admissible one is chosen.
pub fn gate_time(gate: Gate, delta1: f64, p: Option<i64>) -> Result<(i64, f64)> {
    if delta1 == 0.0 || !delta1.is_finite() {
        return invalid("gate protocol needs a finite nonzero delta1");
    }
    let period = match gate {
        Gate::Not => std::f64::consts::PI,
        Gate::Sh | Gate::Zsh => std::f64::consts::FRAC_PI_2,
    };
    let parity_ok = |p: i64| match gate {
        Gate::Not => true,
        Gate::Sh => p.rem_euclid(2) == 0,
        Gate::Zsh => p.rem_euclid(2) == 1,
    };
    let time = |p: i64| period * (2 * p + 1) as f64 / delta1;
    let p = match p {
        Some(p) => p,
        None => {
            let candidates: Vec<i64> = if delta1 > 0.0 { (0..4).collect() } else { (-4..0).rev().collect() };
            *candidates.iter().find(|&&p| parity_ok(p)).expect("some parity matches")
        }
    };
    if !parity_ok(p) {
        return invalid(format!("index p = {p} has the wrong parity for {gate:?}"));
    }
    let t = time(p);
    if t <= 0.0 {
        return invalid(format!("index p = {p} gives nonpositive time {t}"));
    }
    Ok((p, t))
}

#[derive(Clone, Copy, Debug)]
pub struct GateOptions {
    pub n_points: usize,
    pub p_index: Option<i64>,
    /// Duration to continue with `δ₁ = 0` after the switch.
    pub hold: f64,
    pub tol: Tolerances,
}

impl Default for GateOptions {
    fn default() -> Self {
        Self { n_points: 101, p_index: None, hold: 0.0, tol: Tolerances::default() }
    }
}

#[derive(Clone, Debug)]
pub struct GateReport {
    pub gate: Gate,
    pub p_index: i64,
    pub gate_time: f64,
    pub trajectory: Trajectory,
    pub analytic: GateCoefficients,
    /// Numeric `A_mn(t)` from Hilbert–Schmidt projections.
    pub numeric: Vec<GateVector>,
    pub max_deviation: f64,
    /// Largest HS norm of `ρ(t)` outside the logical block.
    pub max_leakage: f64,
    pub target: StateVector,
    pub fidelity: f64,
    /// Fidelity with the target after the hold period, if any.
    pub hold_fidelity: Option<f64>,
}

fn logical_block(basis: &OccupationBasis, phi: f64) -> Result<[StateVector; 2]> {
    Ok([superposition_state(basis, 0, phi)?, superposition_state(basis, 1, phi)?])
}

fn project_block(rho: &CMat, block: &[StateVector; 2]) -> (GateVector, f64) {
    let el = |m: usize, n: usize| block[m].amplitudes().dotc(&(rho * block[n].amplitudes()));
    let a = [el(0, 0), el(1, 1), el(0, 1), el(1, 0)];
    let recon = block[0].projector() * a[0] + block[1].projector() * a[1] + block[0].outer(&block[1]) * a[2] + block[1].outer(&block[0]) * a[3];
    (a, hs_norm(&(rho - recon)))
}

/// Runs a gate starting from `|bit_L, φ⟩` under the effective Liouvillian with the given `δ₁`.
pub fn run_gate(basis: &OccupationBasis, p: &EffectiveParams, bit: u8, phi: f64, gate: Gate, opts: &GateOptions) -> Result<GateReport> {
    p.validate()?;
    if basis.n_particles() < 2 {
        return invalid("gate protocol needs N >= 2");
    }
    let (p_index, t_gate) = gate_time(gate, p.delta1, opts.p_index)?;
    let block = logical_block(basis, phi)?;
    let start = superposition_state(basis, bit, phi)?;
    let l = effective_lindblad(basis, p);
    let times = uniform_grid(0.0, t_gate, opts.n_points.max(2))?;
    let eo = EvolveOptions { tol: opts.tol, eigen_diagnostics: true };
    let traj = evolve(&l, &DensityMatrix::pure(&start), &times, &eo)?;
    let mut initial = [ZERO; 4];
    initial[if bit == 0 { 0 } else { 1 }] = r(1.0);
    let analytic = GateCoefficients { initial, delta1: p.delta1, phi };
    let mut numeric = Vec::with_capacity(traj.len());
    let (mut max_deviation, mut max_leakage) = (0.0f64, 0.0f64);
    for (t, rho) in traj.times.iter().zip(&traj.states) {
        let (a, leak) = project_block(rho, &block);
        let expect = analytic.at(*t);
        let dev = a.iter().zip(expect.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
        max_deviation = max_deviation.max(dev);
        max_leakage = max_leakage.max(leak);
        numeric.push(a);
    }
    let target = match gate {
        Gate::Not => superposition_state(basis, 1 - bit, phi)?,
        Gate::Sh | Gate::Zsh => {
            let sign = if (p_index + bit as i64).rem_euclid(2) == 0 { 1.0 } else { -1.0 };
            let v = (block[0].amplitudes() + block[1].amplitudes() * c(0.0, sign)) / r(2f64.sqrt());
            StateVector::normalized(basis.space(), v)?
        }
    };
    let fid = fidelity(traj.final_state(), &target)?;
    let hold_fidelity = if opts.hold > 0.0 {
        let frozen = effective_lindblad(basis, &EffectiveParams { delta1: 0.0, ..*p });
        let rho = DensityMatrix::physical(basis.space(), traj.final_state().clone())?;
        let held = evolve(&frozen, &rho, &[0.0, opts.hold], &eo)?;
        Some(fidelity(held.final_state(), &target)?)
    } else {
        None
    };
    Ok(GateReport {
        gate,
        p_index,
        gate_time: t_gate,
        trajectory: traj,
        analytic,
        numeric,
        max_deviation,
        max_leakage,
        target,
        fidelity: fid,
        hold_fidelity,
    })
}

/// Two-particle coherent drives: `g_d(S₁₃+S₃₁) − g_d(S₁₂+S₂₁)` for `which = 0`,
/// `i g_d(S₂₃ − S₃₂)` for `which = 1`.
pub fn preparation_hamiltonian(basis: &OccupationBasis, which: u8, g_d: f64) -> Result<Operator> {
    let h = match which {
        0 => (s(basis, 1, 3) + s(basis, 3, 1) - s(basis, 1, 2) - s(basis, 2, 1)) * r(g_d),
        1 => (s(basis, 2, 3) - s(basis, 3, 2)) * c(0.0, g_d),
        _ => return invalid("which must be 0 or 1"),
    };
    Operator::hermitian(basis.space(), h)
}

/// Time at which the drive maps `start` onto the logical state.
pub fn preparation_time(which: u8, g_d: f64, start: Occupation) -> Result<f64> {
    if !(g_d > 0.0) {
        return invalid("drive strength must be positive");
    }
    let pi = std::f64::consts::PI;
    match (which, start) {
        (0, [2, 0, 0]) => Ok(pi / (2.0 * 2f64.sqrt() * g_d)),
        (1, [1, 1, 0]) => Ok(pi / (4.0 * g_d)),
        (1, [1, 0, 1]) => Ok(3.0 * pi / (4.0 * g_d)),
        _ => invalid(format!("unsupported start {start:?} for logical state {which}")),
    }
}

#[derive(Clone, Debug)]
pub struct PreparationReport {
    pub target_time: f64,
    pub trajectory: Trajectory,
    /// `|⟨which_L|ψ(t)⟩|²` on the trajectory grid.
    pub probabilities: Vec<f64>,
    pub final_probability: f64,
}

/// Closed-system preparation of `|which_L⟩` for two particles.
pub fn prepare_logical(basis: &OccupationBasis, which: u8, g_d: f64, start: Occupation, n_points: usize) -> Result<PreparationReport> {
    if basis.n_particles() != 2 {
        return invalid("state preparation is defined for N = 2");
    }
    let t_target = preparation_time(which, g_d, start)?;
    let h = preparation_hamiltonian(basis, which, g_d)?.into_matrix();
    let psi0 = basis.basis_state(&start)?;
    let target = logical_state(basis, which)?;
    let times = uniform_grid(0.0, t_target, n_points.max(2))?;
    let mut traj = Trajectory { space: basis.space(), times: vec![], states: vec![], diagnostics: vec![], stats: StepStats::default() };
    let mut probabilities = Vec::with_capacity(times.len());
    let one = r(1.0);
    for &t in &times {
        let psi = unitary_propagator(&h, t) * psi0.amplitudes();
        probabilities.push(target.amplitudes().dotc(&psi).norm_sqr());
        let rho = &psi * psi.adjoint();
        traj.push(t, &rho, one, true);
    }
    let final_probability = *probabilities.last().expect("nonempty grid");
    Ok(PreparationReport { target_time: t_target, trajectory: traj, probabilities, final_probability })
}
