//! Dispatch from a validated config to the library pipelines.

use catqutrit::dynamics::{
    crossing_time, evolve, fidelity, prepare_logical, run_gate, uniform_grid, EvolveOptions, GateOptions, Trajectory,
};
use catqutrit::fock::{enumerate_basis, logical_state, superposition_state, OccupationBasis};
use catqutrit::linalg::{c, hs_norm, min_eigenvalue, CMat, StateVector};
use catqutrit::liouville::{
    dark_state_check, dephasing_superops, liouvillian_effective, steady_state_basis, DensityMatrix, EffectiveParams, Superoperator,
};
use catqutrit::physmodel::{
    approx_stationarity_check, qubit_reduction, tracking_check, StationarityOptions, TrackingOptions, SMALLNESS,
};
use catqutrit::twoqutrit::{embed_operator, lifted_effective_liouvillian, liouvillian_local, special_states};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{ExperimentConfig, Kind, Noise};
use crate::CliError;

/// Rows of `f64` under a fixed header.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

pub const FIDELITY_HEADER: [&str; 5] = ["t", "F0", "F1", "trace", "min_eig"];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    Below,
    AtMost,
    AtLeast,
    Holds,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    pub relation: Relation,
    pub passed: bool,
}

impl Relation {
    pub fn symbol(self) -> &'static str {
        match self {
            Relation::Below => "<",
            Relation::AtMost => "<=",
            Relation::AtLeast => ">=",
            Relation::Holds => "==",
        }
    }
}

impl Check {
    pub fn below(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Self { name: name.into(), value, threshold, relation: Relation::Below, passed: value < threshold }
    }

    pub fn at_most(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Self { name: name.into(), value, threshold, relation: Relation::AtMost, passed: value <= threshold }
    }

    pub fn at_least(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Self { name: name.into(), value, threshold, relation: Relation::AtLeast, passed: value >= threshold }
    }

    pub fn holds(name: impl Into<String>, ok: bool) -> Self {
        Self { name: name.into(), value: if ok { 1.0 } else { 0.0 }, threshold: 1.0, relation: Relation::Holds, passed: ok }
    }
}

#[derive(Clone, Debug)]
pub struct Bundle {
    pub kind: Kind,
    pub tables: Vec<Table>,
    /// JSON reports keyed by file stem, in emission order.
    pub reports: Vec<(String, Value)>,
    pub checks: Vec<Check>,
}

impl Bundle {
    fn new(kind: Kind) -> Self {
        Self { kind, tables: Vec::new(), reports: Vec::new(), checks: Vec::new() }
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

type Res<T> = Result<T, CliError>;

trait Context<T> {
    fn ctx(self, kind: Kind) -> Res<T>;
}

impl<T> Context<T> for catqutrit::Result<T> {
    fn ctx(self, kind: Kind) -> Res<T> {
        self.map_err(|source| CliError::Run { kind, source })
    }
}

fn to_json<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report types serialize")
}

/// Worker cap from `CATQUTRIT_THREADS`, defaulting to the available parallelism.
pub fn thread_limit() -> usize {
    std::env::var("CATQUTRIT_THREADS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

/// Maps `f` over `items` on at most `thread_limit()` threads, preserving order.
fn parallel_map<T: Sync, R: Send>(items: &[T], f: impl Fn(&T) -> R + Sync) -> Vec<R> {
    let workers = thread_limit().min(items.len()).max(1);
    if workers == 1 {
        return items.iter().map(&f).collect();
    }
    let chunk = items.len().div_ceil(workers);
    std::thread::scope(|s| {
        let handles: Vec<_> = items.chunks(chunk).map(|part| s.spawn(|| part.iter().map(&f).collect::<Vec<R>>())).collect();
        handles.into_iter().flat_map(|h| h.join().expect("worker panicked")).collect()
    })
}

fn fidelity_table(name: &str, traj: &Trajectory, targets: &[StateVector; 2]) -> catqutrit::Result<Table> {
    let mut rows = Vec::with_capacity(traj.len());
    for (k, (t, rho)) in traj.times.iter().zip(&traj.states).enumerate() {
        let eig = traj.diagnostics[k].min_eigenvalue;
        let eig = if eig.is_nan() { min_eigenvalue(rho) } else { eig };
        rows.push(vec![*t, fidelity(rho, &targets[0])?, fidelity(rho, &targets[1])?, rho.trace().re, eig]);
    }
    Ok(Table { name: name.into(), header: FIDELITY_HEADER.iter().map(|s| s.to_string()).collect(), rows })
}

fn trajectory_checks(b: &mut Bundle, label: &str, traj: &Trajectory) {
    b.checks.push(Check::below(format!("{label}trace_drift"), traj.max_trace_drift(), 1e-8));
    b.checks.push(Check::at_least(format!("{label}min_eigenvalue"), traj.min_eigenvalue(), -1e-7));
}

fn logical_pair(basis: &OccupationBasis) -> catqutrit::Result<[StateVector; 2]> {
    Ok([logical_state(basis, 0)?, logical_state(basis, 1)?])
}

fn generator(cfg: &ExperimentConfig, basis: &OccupationBasis, p: &EffectiveParams) -> catqutrit::Result<Superoperator> {
    let l = liouvillian_effective(basis, p);
    match &cfg.dephasing {
        None => Ok(l),
        Some(d) => {
            let (cd, ud) = dephasing_superops(basis, d);
            l.add(if cfg.noise.unwrap_or_default() == Noise::Correlated { &cd } else { &ud })
        }
    }
}

pub fn run(cfg: &ExperimentConfig) -> Res<Bundle> {
    cfg.validate()?;
    match cfg.kind {
        Kind::Steady => steady(cfg),
        Kind::Evolve => evolve_run(cfg),
        Kind::Gates => gates(cfg),
        Kind::Fig3 => fig3(cfg),
        Kind::TwoQutritNoise => two_qutrit_noise(cfg),
        Kind::Prepare => prepare(cfg),
        Kind::PhysicalValidate => physical_validate(cfg),
        Kind::ParamsMap => params_map(cfg),
    }
}

pub fn random_effective(g: &mut impl Rng) -> EffectiveParams {
    EffectiveParams {
        kappa1: g.gen_range(0.1..5.0),
        kappa2: g.gen_range(0.1..5.0),
        xi: g.gen_range(-3.0..3.0),
        delta: g.gen_range(-3.0..3.0),
        delta1: g.gen_range(-3.0..3.0),
        alpha0: c(g.gen_range(-3.0..3.0), g.gen_range(-3.0..3.0)),
    }
}

fn steady(cfg: &ExperimentConfig) -> Res<Bundle> {
    let kind = cfg.kind;
    let mut b = Bundle::new(kind);
    let n = cfg.n.expect("validated");
    let p = cfg.effective.expect("validated");
    let spec = cfg.steady.unwrap_or_default();
    let basis = enumerate_basis(n).ctx(kind)?;
    let l = generator(cfg, &basis, &p).ctx(kind)?;
    let k = steady_state_basis(&l, spec.tau_rel).ctx(kind)?;
    let logical = logical_pair(&basis).ctx(kind)?;

    let mut logical_residuals = Vec::new();
    for psi in &logical {
        logical_residuals.push(hs_norm(&l.act(&psi.projector())));
    }
    let tail = k.singular_values.len().saturating_sub(k.dimension + 4);
    let mut report = json!({
        "n": n,
        "dimension": k.dimension,
        "gap_ratio": k.gap_ratio,
        "ill_conditioned": k.ill_conditioned,
        "kernel_residuals": k.residuals,
        "smallest_singular_values": k.singular_values[tail..].to_vec(),
        "logical_residuals": logical_residuals,
    });
    if k.dimension == 1 {
        let mut rho = k.basis[0].clone();
        let tr = rho.trace();
        rho /= tr;
        let f: Vec<f64> = logical.iter().map(|psi| fidelity(&rho, psi)).collect::<catqutrit::Result<_>>().ctx(kind)?;
        report["steady_fidelities"] = json!(f);
    }

    // Correlated dephasing leaves the logical states stationary; uncorrelated dephasing does not.
    let logical_stationary = cfg.dephasing.is_none() || cfg.noise == Some(Noise::Correlated);
    if logical_stationary {
        for (bit, r) in logical_residuals.iter().enumerate() {
            b.checks.push(Check::below(format!("logical_{bit}_stationary"), *r, 1e-10));
        }
    }
    if cfg.dephasing.is_none() && p.delta1 == 0.0 {
        b.checks.push(Check::holds(format!("kernel_dimension_is_{}", n + 3), k.dimension == n + 3));
        b.checks.push(Check::at_least("gap_ratio", k.gap_ratio, 1e3));
    }
    if spec.dark_draws > 0 {
        let mut g = ChaCha8Rng::seed_from_u64(cfg.seed.unwrap_or(0));
        let mut worst = 0.0f64;
        let mut draws = Vec::new();
        for _ in 0..spec.dark_draws {
            let q = random_effective(&mut g);
            let mut res = [0.0; 2];
            for (bit, psi) in logical.iter().enumerate() {
                let rep = dark_state_check(&DensityMatrix::pure(psi), &basis, &q).ctx(kind)?;
                res[bit] = rep.residuals.iter().cloned().fold(0.0, f64::max);
            }
            worst = worst.max(res[0]).max(res[1]);
            draws.push(json!({ "params": to_json(&q), "max_residual": res }));
        }
        report["dark_draws"] = json!(draws);
        b.checks.push(Check::below("dark_draws_max_residual", worst, 1e-10));
    }
    b.reports.push(("steady".into(), report));
    Ok(b)
}

fn initial_state(cfg: &ExperimentConfig, basis: &OccupationBasis) -> catqutrit::Result<StateVector> {
    let init = cfg.initial.expect("validated");
    match (init.logical, init.occupation, init.phi) {
        (Some(bit), None, None) => logical_state(basis, bit),
        (Some(bit), None, Some(phi)) => superposition_state(basis, bit, phi),
        (None, Some(occ), None) => basis.basis_state(&occ),
        _ => unreachable!("validated initial state"),
    }
}

fn evolve_run(cfg: &ExperimentConfig) -> Res<Bundle> {
    let kind = cfg.kind;
    let mut b = Bundle::new(kind);
    let n = cfg.n.expect("validated");
    let p = cfg.effective.expect("validated");
    let grid = cfg.time.expect("validated");
    let basis = enumerate_basis(n).ctx(kind)?;
    let l = generator(cfg, &basis, &p).ctx(kind)?;
    let psi = initial_state(cfg, &basis).ctx(kind)?;
    let times = uniform_grid(0.0, grid.t_max, grid.n_points).ctx(kind)?;
    let opts = EvolveOptions { tol: cfg.tolerances(), eigen_diagnostics: true };
    let traj = evolve(&l, &DensityMatrix::pure(&psi), &times, &opts).ctx(kind)?;
    let table = fidelity_table("fidelity", &traj, &logical_pair(&basis).ctx(kind)?).ctx(kind)?;
    let last = table.rows.last().expect("nonempty grid").clone();
    b.reports.push((
        "evolve".into(),
        json!({
            "n": n,
            "final_fidelities": [last[1], last[2]],
            "max_trace_drift": traj.max_trace_drift(),
            "max_hermiticity_drift": traj.max_hermiticity_drift(),
            "min_eigenvalue": traj.min_eigenvalue(),
            "accepted_steps": traj.stats.accepted,
            "rejected_steps": traj.stats.rejected,
        }),
    ));
    b.tables.push(table);
    trajectory_checks(&mut b, "", &traj);
    Ok(b)
}

fn gates(cfg: &ExperimentConfig) -> Res<Bundle> {
    let kind = cfg.kind;
    let mut b = Bundle::new(kind);
    let n = cfg.n.expect("validated");
    let p = cfg.effective.expect("validated");
    let g = cfg.gate.expect("validated");
    let basis = enumerate_basis(n).ctx(kind)?;
    let opts = GateOptions { n_points: g.n_points, p_index: g.p, hold: g.hold, tol: cfg.tolerances() };
    let rep = run_gate(&basis, &p, g.bit, g.phi, g.gate, &opts).ctx(kind)?;
    let block = [superposition_state(&basis, 0, g.phi).ctx(kind)?, superposition_state(&basis, 1, g.phi).ctx(kind)?];
    b.tables.push(fidelity_table("fidelity", &rep.trajectory, &block).ctx(kind)?);

    let mut header = vec!["t".to_string()];
    for src in ["numeric", "analytic"] {
        for el in ["A00", "A11", "A01", "A10"] {
            header.push(format!("{src}_{el}_re"));
            header.push(format!("{src}_{el}_im"));
        }
    }
    let rows = rep
        .trajectory
        .times
        .iter()
        .zip(&rep.numeric)
        .map(|(t, a)| {
            let mut row = vec![*t];
            for z in a.iter().chain(rep.analytic.at(*t).iter()) {
                row.push(z.re);
                row.push(z.im);
            }
            row
        })
        .collect();
    b.tables.push(Table { name: "coefficients".into(), header, rows });
    b.reports.push((
        "gates".into(),
        json!({
            "n": n,
            "gate": rep.gate,
            "p_index": rep.p_index,
            "gate_time": rep.gate_time,
            "fidelity": rep.fidelity,
            "hold_fidelity": rep.hold_fidelity,
            "max_deviation": rep.max_deviation,
            "max_leakage": rep.max_leakage,
        }),
    ));
    b.checks.push(Check::at_least("fidelity", rep.fidelity, 1.0 - 1e-8));
    if let Some(h) = rep.hold_fidelity {
        b.checks.push(Check::at_least("hold_fidelity", h, 1.0 - 1e-8));
    }
    b.checks.push(Check::below("max_deviation", rep.max_deviation, 1e-8));
    b.checks.push(Check::below("max_leakage", rep.max_leakage, 1e-8));
    trajectory_checks(&mut b, "", &rep.trajectory);
    Ok(b)
}

fn fig3(cfg: &ExperimentConfig) -> Res<Bundle> {
    let kind = cfg.kind;
    let mut b = Bundle::new(kind);
    let n = cfg.n.expect("validated");
    let p = cfg.effective.expect("validated");
    let d = cfg.dephasing.expect("validated");
    let grid = cfg.time.expect("validated");
    let spec = cfg.fig3.unwrap_or_default();
    let basis = enumerate_basis(n).ctx(kind)?;
    let (_, ud) = dephasing_superops(&basis, &d);
    let l = liouvillian_effective(&basis, &p).add(&ud).ctx(kind)?;
    let logical = logical_pair(&basis).ctx(kind)?;

    let k = steady_state_basis(&l, 1e-10).ctx(kind)?;
    b.checks.push(Check::holds("unique_steady_state", k.dimension == 1));
    let steady: Option<CMat> = (k.dimension == 1).then(|| {
        let tr = k.basis[0].trace();
        &k.basis[0] / tr
    });

    let times = uniform_grid(0.0, grid.t_max, grid.n_points).ctx(kind)?;
    let opts = EvolveOptions { tol: cfg.tolerances(), eigen_diagnostics: true };
    let runs = parallel_map(&logical, |psi| evolve(&l, &DensityMatrix::pure(psi), &times, &opts));
    let mut trajs = Vec::with_capacity(2);
    for r in runs {
        trajs.push(r.ctx(kind)?);
    }
    for (bit, traj) in trajs.iter().enumerate() {
        b.tables.push(fidelity_table(&format!("fidelity_from_{bit}"), traj, &logical).ctx(kind)?);
        trajectory_checks(&mut b, &format!("from_{bit}_"), traj);
    }

    let mut report = json!({ "n": n, "kernel_dimension": k.dimension, "gap_ratio": k.gap_ratio });
    if let Some(rho) = &steady {
        let f0 = fidelity(rho, &logical[0]).ctx(kind)?;
        let f1 = fidelity(rho, &logical[1]).ctx(kind)?;
        let dist: Vec<f64> = trajs.iter().map(|t| hs_norm(&(t.final_state() - rho))).collect();
        let worst = dist.iter().cloned().fold(0.0, f64::max);
        report["steady_fidelities"] = json!({ "F0": f0, "F1": f1 });
        report["final_distance_to_steady_state"] = json!(dist);
        b.checks.push(Check::below("convergence_to_steady_state", worst, spec.convergence_tol));
        if let Some([r0, r1]) = spec.reference {
            b.checks.push(Check::at_most("steady_F0_vs_reference", (f0 - r0).abs(), spec.reference_tol));
            b.checks.push(Check::at_most("steady_F1_vs_reference", (f1 - r1).abs(), spec.reference_tol));
        }
        // Time for F₁ to cover a fraction 1 − 1/e of its way to the steady value, against 4/(Γ₂+Γ₃).
        let f1_series: Vec<f64> = b.tables[1].rows.iter().map(|r| r[2]).collect();
        let e = (-1.0f64).exp();
        let level = e * f1_series[0] + (1.0 - e) * f1;
        let scale = 4.0 / (d.gamma2 + d.gamma3);
        let lifetime = crossing_time(&times, &f1_series, level);
        report["lifetime"] = json!({ "crossing_time": lifetime, "reference": scale });
        if let (Some(t), true) = (lifetime, scale.is_finite()) {
            let ratio = t / scale;
            report["lifetime"]["ratio"] = json!(ratio);
            b.checks.push(Check::holds("lifetime_within_factor_2", (0.5..=2.0).contains(&ratio)));
        }
    }
    b.reports.push(("fig3".into(), report));
    Ok(b)
}

fn two_qutrit_noise(cfg: &ExperimentConfig) -> Res<Bundle> {
    let kind = cfg.kind;
    let mut b = Bundle::new(kind);
    let p = cfg.effective.expect("validated");
    let d = cfg.dephasing.expect("validated");
    let lp = cfg.local_noise.expect("validated");
    let basis = enumerate_basis(2).ctx(kind)?;
    let (cd, ud) = dephasing_superops(&basis, &d);
    let loc = liouvillian_local(&lp);
    let eff = lifted_effective_liouvillian(&p);
    let st = special_states();
    let logical: Vec<CMat> = logical_pair(&basis).ctx(kind)?.iter().map(|s| s.projector()).collect();
    let embedded: Vec<CMat> = logical.iter().map(embed_operator).collect::<catqutrit::Result<_>>().ctx(kind)?;
    let plus = st.mixed_plus.projector();
    let minus = st.mixed_minus.projector();

    let protected = [
        ("correlated", "logical_0", hs_norm(&cd.act(&logical[0]))),
        ("correlated", "logical_1", hs_norm(&cd.act(&logical[1]))),
        ("local", "logical_0", hs_norm(&loc.act(&embedded[0]))),
        ("local", "mixed_plus", hs_norm(&loc.act(&plus))),
        ("local", "mixed_minus", hs_norm(&loc.act(&minus))),
        ("effective", "mixed_plus", hs_norm(&eff.act(&plus))),
        ("effective", "mixed_minus", hs_norm(&eff.act(&minus))),
    ];
    let ud_generic = d.gamma2 > 0.0 && d.gamma3 > 0.0;
    let loc_generic = lp.gamma_d > 0.0 || lp.delta_omega1 != lp.delta_omega2;
    let exposed = [
        ("uncorrelated", "logical_0", hs_norm(&ud.act(&logical[0])), ud_generic),
        ("uncorrelated", "logical_1", hs_norm(&ud.act(&logical[1])), ud_generic),
        ("local", "logical_1", hs_norm(&loc.act(&embedded[1])), loc_generic),
    ];
    let mut rows = Vec::new();
    for (g, s, r) in protected {
        rows.push(json!({ "generator": g, "state": s, "residual": r, "expected": "protected" }));
        b.checks.push(Check::below(format!("{g}_{s}_protected"), r, 1e-10));
    }
    for (g, s, r, generic) in exposed {
        rows.push(json!({ "generator": g, "state": s, "residual": r, "expected": "exposed" }));
        if generic {
            b.checks.push(Check::at_least(format!("{g}_{s}_exposed"), r, 1e-6));
        }
    }
    b.reports.push(("two_qutrit_noise".into(), json!({ "residuals": rows })));
    Ok(b)
}

fn prepare(cfg: &ExperimentConfig) -> Res<Bundle> {
    let kind = cfg.kind;
    let mut b = Bundle::new(kind);
    let spec = cfg.preparation.expect("validated");
    let basis = enumerate_basis(2).ctx(kind)?;
    let rep = prepare_logical(&basis, spec.which, spec.g_d, spec.start, spec.n_points).ctx(kind)?;
    b.tables.push(fidelity_table("fidelity", &rep.trajectory, &logical_pair(&basis).ctx(kind)?).ctx(kind)?);
    b.reports.push((
        "prepare".into(),
        json!({
            "which": spec.which,
            "start": spec.start,
            "g_d": spec.g_d,
            "target_time": rep.target_time,
            "final_probability": rep.final_probability,
        }),
    ));
    b.checks.push(Check::at_least("final_probability", rep.final_probability, 1.0 - 1e-10));
    Ok(b)
}

fn physical_validate(cfg: &ExperimentConfig) -> Res<Bundle> {
    let kind = cfg.kind;
    let mut b = Bundle::new(kind);
    let pp = cfg.physical.expect("validated");
    let tr = cfg.truncation.expect("validated");
    let v = cfg.validation.clone().unwrap_or_default();
    let opts = StationarityOptions {
        trajectory: v.trajectory,
        horizon: v.horizon,
        n_points: v.n_points,
        tol: cfg.tolerances(),
        max_constant: v.max_constant,
        ..Default::default()
    };
    let reports = parallel_map(&v.bits, |&bit| approx_stationarity_check(&pp, &tr, bit, &opts));
    for r in reports {
        let rep = r.ctx(kind)?;
        let bit = rep.bit;
        b.checks.push(Check::at_most(format!("bit{bit}_identity"), rep.residuals.identity, rep.identity_tol));
        b.checks.push(Check::holds(format!("bit{bit}_correction_bound"), rep.bound_holds()));
        if let Some(t) = &rep.trajectory_deviation {
            b.checks.push(Check::at_most(format!("bit{bit}_deviation_constant"), t.constant, t.max_constant));
            b.checks.push(Check::holds(format!("bit{bit}_truncation_tails"), t.tails_ok));
            b.tables.push(Table {
                name: format!("deviation_bit{bit}"),
                header: vec!["t".into(), "deviation".into()],
                rows: t.times.iter().zip(&t.deviation).map(|(a, d)| vec![*a, *d]).collect(),
            });
        }
        b.reports.push((format!("stationarity_bit{bit}"), to_json(&rep)));
    }
    if let Some(t) = &v.tracking {
        let tp = t.physical.unwrap_or(pp);
        let ttr = t.truncation.unwrap_or(tr);
        let topts = TrackingOptions { horizon: t.horizon, n_points: t.n_points, factor: t.factor };
        let rep = tracking_check(&tp, &ttr, &t.initial, &topts).ctx(kind)?;
        let mut header = vec!["t".to_string()];
        for o in &rep.observables {
            header.push(format!("{}_full", o.name));
            header.push(format!("{}_effective", o.name));
        }
        let rows = (0..rep.times.len())
            .map(|k| {
                let mut row = vec![rep.times[k]];
                for o in &rep.observables {
                    row.push(o.full[k]);
                    row.push(o.effective[k]);
                }
                row
            })
            .collect();
        b.tables.push(Table { name: "tracking".into(), header, rows });
        b.checks.push(Check::below("tracking_relative_error", rep.max_relative_error, rep.tolerance));
        b.checks.push(Check::holds("tracking_truncation_tails", rep.tails_ok()));
        b.reports.push(("tracking".into(), to_json(&rep)));
    }
    Ok(b)
}

fn params_map(cfg: &ExperimentConfig) -> Res<Bundle> {
    let kind = cfg.kind;
    let mut b = Bundle::new(kind);
    let pp = cfg.physical.expect("validated");
    let dp = pp.derive().ctx(kind)?;
    let mut report = json!({
        "physical": to_json(&pp),
        "derived": to_json(&dp),
        "regime": {
            "epsilon1": dp.epsilon1,
            "epsilon2": dp.epsilon2,
            "smallness": SMALLNESS,
            "controlled": dp.epsilon1 < SMALLNESS && dp.epsilon2 < SMALLNESS,
        },
    });
    match dp.effective() {
        Ok(ep) => report["effective"] = to_json(&ep),
        Err(e) => report["effective"] = json!({ "unavailable": e.to_string() }),
    }
    if pp.omega_3 == 0.0 && pp.g_3 == 0.0 {
        let qr = qubit_reduction(&pp, cfg.n.unwrap_or(2)).ctx(kind)?;
        report["qubit"] = json!({ "params": to_json(&qr.params), "identification": to_json(&qr.identification) });
    }
    b.reports.push(("params_map".into(), report));
    Ok(b)
}
