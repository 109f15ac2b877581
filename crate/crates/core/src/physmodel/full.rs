//! Truncated pump ⊗ signal ⊗ qutrit space and the GKLS generator of the full model.

use nalgebra_sparse::CsrMatrix;
use serde::{Deserialize, Serialize};

use crate::dynamics::Generator;
use crate::error::{invalid, Result};
use crate::fock::{enumerate_basis, s, OccupationBasis};
use crate::linalg::{kron, r, CMat, CVec, Space, SpaceLabel, C64, I};
use crate::liouville::{Lindblad, Superoperator};

use super::PhysicalParams;

/// Largest product dimension for which a dense superoperator is assembled.
pub const DENSE_SUPEROPERATOR_LIMIT: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TruncationSpec {
    pub n_p_max: usize,
    pub n_s_max: usize,
    /// Number of qutrits.
    pub n: usize,
    /// Keep only states with `2n_p + n_s + n₂ + n₃` at most this; the Hamiltonian conserves
    /// that number and both photon losses lower it, so without drive the cut is exact.
    #[serde(default)]
    pub max_excitations: Option<usize>,
}

impl TruncationSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return invalid("at least one qutrit is required");
        }
        if self.n_s_max < 2 {
            return invalid("the signal truncation must represent two photons");
        }
        Ok(())
    }
}

pub(crate) fn destroy(n_max: usize) -> CMat {
    let d = n_max + 1;
    CMat::from_fn(d, d, |i, j| if j == i + 1 { r((j as f64).sqrt()) } else { C64::new(0.0, 0.0) })
}

/// `P ⊗ S ⊗ Q` on the untruncated box.
pub(crate) fn field_qutrit_operator(pump: &CMat, signal: &CMat, qutrit: &CMat) -> CMat {
    kron(&kron(pump, signal), qutrit)
}

pub(crate) fn product_space(tr: &TruncationSpec, basis: &OccupationBasis) -> Space {
    Space::new(SpaceLabel::PumpSignalQutrit, (tr.n_p_max + 1) * (tr.n_s_max + 1) * basis.len())
}

/// Normalized coherent state on Fock levels `0..=n_max`.
pub fn truncated_coherent(n_max: usize, alpha: C64) -> CVec {
    let mut v = CVec::zeros(n_max + 1);
    let mut term = C64::new(1.0, 0.0);
    for n in 0..=n_max {
        if n > 0 {
            term *= alpha / (n as f64).sqrt();
        }
        v[n] = term;
    }
    let norm = v.norm();
    v / r(norm)
}

/// Product states kept by a truncation, in pump-major order.
#[derive(Clone, Debug)]
pub struct FieldQutritBasis {
    pub tr: TruncationSpec,
    pub qutrits: OccupationBasis,
    /// `(n_p, n_s, qutrit index)` of each kept state.
    pub states: Vec<(usize, usize, usize)>,
    keep: Vec<usize>,
}

impl FieldQutritBasis {
    pub fn new(tr: &TruncationSpec) -> Result<Self> {
        tr.validate()?;
        let qutrits = enumerate_basis(tr.n)?;
        let mut states = Vec::new();
        let mut keep = Vec::new();
        let mut k = 0;
        for np in 0..=tr.n_p_max {
            for ns in 0..=tr.n_s_max {
                for (q, occ) in qutrits.states().iter().enumerate() {
                    let e = 2 * np + ns + occ[1] + occ[2];
                    if tr.max_excitations.map_or(true, |m| e <= m) {
                        states.push((np, ns, q));
                        keep.push(k);
                    }
                    k += 1;
                }
            }
        }
        if states.is_empty() {
            return invalid("the excitation cut removes every state");
        }
        Ok(Self { tr: *tr, qutrits, states, keep })
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn space(&self) -> Space {
        Space::new(SpaceLabel::PumpSignalQutrit, self.dim())
    }

    fn is_box(&self) -> bool {
        self.keep.len() == (self.tr.n_p_max + 1) * (self.tr.n_s_max + 1) * self.qutrits.len()
    }

    /// Restricts a box operator to the kept states.
    pub fn restrict(&self, m: &CMat) -> CMat {
        if self.is_box() {
            return m.clone();
        }
        CMat::from_fn(self.dim(), self.dim(), |i, j| m[(self.keep[i], self.keep[j])])
    }

    pub fn operator(&self, pump: &CMat, signal: &CMat, qutrit: &CMat) -> CMat {
        self.restrict(&field_qutrit_operator(pump, signal, qutrit))
    }

    pub fn pump_identity(&self) -> CMat {
        CMat::identity(self.tr.n_p_max + 1, self.tr.n_p_max + 1)
    }

    pub fn signal_identity(&self) -> CMat {
        CMat::identity(self.tr.n_s_max + 1, self.tr.n_s_max + 1)
    }

    pub fn qutrit_identity(&self) -> CMat {
        CMat::identity(self.qutrits.len(), self.qutrits.len())
    }

    /// Product vector restricted to the kept states, with the discarded norm².
    pub fn product_state(&self, pump: &CVec, signal: &CVec, qutrit: &CVec) -> Result<(CVec, f64)> {
        if pump.len() != self.tr.n_p_max + 1 || signal.len() != self.tr.n_s_max + 1 || qutrit.len() != self.qutrits.len() {
            return invalid("factor lengths do not match the truncation");
        }
        let full = pump.kronecker(signal).kronecker(qutrit);
        let kept = CVec::from_fn(self.dim(), |i, _| full[self.keep[i]]);
        let lost = (full.norm_squared() - kept.norm_squared()).max(0.0);
        Ok((kept, lost))
    }

    /// Partial trace over both fields.
    pub fn reduce_to_qutrits(&self, rho: &CMat) -> CMat {
        let q = self.qutrits.len();
        let mut out = CMat::zeros(q, q);
        for (i, &(p1, s1, q1)) in self.states.iter().enumerate() {
            for (j, &(p2, s2, q2)) in self.states.iter().enumerate() {
                if p1 == p2 && s1 == s2 {
                    out[(q1, q2)] += rho[(i, j)];
                }
            }
        }
        out
    }

    /// Populations in the top two pump and the top two signal Fock levels.
    pub fn tail_populations(&self, rho: &CMat) -> (f64, f64) {
        let (mut pump, mut signal) = (0.0, 0.0);
        for (i, &(np, ns, _)) in self.states.iter().enumerate() {
            let p = rho[(i, i)].re;
            if np + 1 >= self.tr.n_p_max {
                pump += p;
            }
            if ns + 1 >= self.tr.n_s_max {
                signal += p;
            }
        }
        (pump, signal)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Picture {
    Lab,
    Interaction,
}

#[derive(Clone, Debug)]
pub struct FullModel {
    pub basis: FieldQutritBasis,
    pub picture: Picture,
    /// Lab picture: the static part. Interaction picture: the time-independent `H_I`.
    pub hamiltonian: CMat,
    /// Lab picture only: the drive term at `t = 0`, `Ω_d(a_p† + a_p)`.
    pub drive: Option<CMat>,
    /// `κ_p𝒟(a_p)` and `κ_s𝒟(a_s)`.
    pub jumps: Vec<(f64, CMat)>,
}

pub fn full_model(pp: &PhysicalParams, tr: &TruncationSpec, picture: Picture) -> Result<FullModel> {
    pp.validate()?;
    let basis = FieldQutritBasis::new(tr)?;
    let q = &basis.qutrits;
    let (ap, as_) = (destroy(tr.n_p_max), destroy(tr.n_s_max));
    let (ip, is, iq) = (basis.pump_identity(), basis.signal_identity(), basis.qutrit_identity());
    let np = ap.adjoint() * &ap;
    let ns = as_.adjoint() * &as_;
    let as2 = &as_ * &as_;
    let parametric = field_qutrit_operator(&ap, &as2.adjoint(), &iq);
    let parametric = (&parametric + parametric.adjoint()) * r(pp.j);
    let mut coupling = CMat::zeros(parametric.nrows(), parametric.ncols());
    for (j, g) in [(2, pp.g_2), (3, pp.g_3)] {
        let x = field_qutrit_operator(&ip, &as_.adjoint(), &s(q, 1, j));
        coupling += (&x + x.adjoint()) * r(g);
    }
    let excited = s(q, 2, 2) * r(pp.omega_2) + s(q, 3, 3) * r(pp.omega_3);
    let drive = field_qutrit_operator(&(&ap + ap.adjoint()), &is, &iq) * r(pp.drive);
    let (h, drive) = match picture {
        Picture::Lab => {
            let free = field_qutrit_operator(&np, &is, &iq) * r(pp.omega_p)
                + field_qutrit_operator(&ip, &ns, &iq) * r(pp.omega_s)
                + field_qutrit_operator(&ip, &is, &excited);
            (free + parametric + coupling, Some(basis.restrict(&drive)))
        }
        Picture::Interaction => {
            let delta_p = pp.omega_p - pp.omega_d;
            let delta_s = pp.omega_s - pp.omega_d / 2.0;
            let free = field_qutrit_operator(&ip, &ns, &iq) * r(delta_s)
                + field_qutrit_operator(&np, &is, &iq) * r(delta_p)
                + field_qutrit_operator(&ip, &is, &(excited + s(q, 1, 1) * r(pp.omega_d / 2.0)));
            (free + drive + parametric + coupling, None)
        }
    };
    let jumps = vec![
        (pp.kappa_p, basis.operator(&ap, &is, &iq)),
        (pp.kappa_s, basis.operator(&ip, &as_, &iq)),
    ];
    Ok(FullModel { hamiltonian: basis.restrict(&h), basis, picture, drive, jumps })
}

impl FullModel {
    pub fn space(&self) -> Space {
        self.basis.space()
    }

    fn require_interaction(&self) -> Result<()> {
        if self.picture == Picture::Lab {
            return invalid("the driven model is only simulated in the interaction picture");
        }
        Ok(())
    }

    pub fn lindblad(&self) -> Result<Lindblad> {
        self.require_interaction()?;
        Ok(Lindblad { space: self.space(), hamiltonian: self.hamiltonian.clone(), jumps: self.jumps.clone() })
    }

    pub fn sparse(&self) -> Result<SparseLindblad> {
        self.require_interaction()?;
        Ok(SparseLindblad::new(self.space(), &self.hamiltonian, &self.jumps))
    }

    pub fn superoperator(&self) -> Result<Superoperator> {
        if self.space().dim > DENSE_SUPEROPERATOR_LIMIT {
            return invalid(format!("dense superoperator limited to dimension {DENSE_SUPEROPERATOR_LIMIT}, got {}", self.space().dim));
        }
        Ok(self.lindblad()?.to_superoperator())
    }
}

/// `dρ/dt = −i(Kρ − ρK†) + Σ κ LρL†` with `K = H − (i/2)Σ κ L†L`, all operators sparse.
#[derive(Clone, Debug)]
pub struct SparseLindblad {
    space: Space,
    k: CsrMatrix<C64>,
    jumps: Vec<(f64, CsrMatrix<C64>)>,
}

impl SparseLindblad {
    pub fn new(space: Space, hamiltonian: &CMat, jumps: &[(f64, CMat)]) -> Self {
        let mut k = hamiltonian.clone();
        for (rate, l) in jumps {
            k -= l.adjoint() * l * C64::new(0.0, 0.5 * rate);
        }
        Self {
            space,
            k: CsrMatrix::from(&k),
            jumps: jumps.iter().map(|(rate, l)| (*rate, CsrMatrix::from(l))).collect(),
        }
    }

    pub fn nnz(&self) -> usize {
        self.k.nnz() + self.jumps.iter().map(|(_, l)| l.nnz()).sum::<usize>()
    }
}

impl Generator for SparseLindblad {
    fn space(&self) -> Space {
        self.space
    }

    fn rhs(&self, rho: &CMat) -> CMat {
        let rho_dag = rho.adjoint();
        let k_rho = &self.k * rho;
        // ρK† = (Kρ†)† and LρL† = L(Lρ†)†.
        let rho_kdag = (&self.k * &rho_dag).adjoint();
        let mut out = (k_rho - rho_kdag) * (-I);
        for (rate, l) in &self.jumps {
            let half = (l * &rho_dag).adjoint();
            out += (l * &half) * r(*rate);
        }
        out
    }
}
