//! Experiment configuration: TOML on disk, `--set` overrides, per-kind validation.

use std::fmt;
use std::path::Path;

use catqutrit::dynamics::Gate;
use catqutrit::fock::Occupation;
use catqutrit::liouville::{DephasingParams, EffectiveParams};
use catqutrit::physmodel::{PhysicalParams, TruncationSpec};
use catqutrit::twoqutrit::LocalNoiseParams;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    Steady,
    Evolve,
    Gates,
    Fig3,
    TwoQutritNoise,
    Prepare,
    PhysicalValidate,
    ParamsMap,
}

impl Kind {
    pub fn name(self) -> &'static str {
        match self {
            Kind::Steady => "steady",
            Kind::Evolve => "evolve",
            Kind::Gates => "gates",
            Kind::Fig3 => "fig3",
            Kind::TwoQutritNoise => "two-qutrit-noise",
            Kind::Prepare => "prepare",
            Kind::PhysicalValidate => "physical-validate",
            Kind::ParamsMap => "params-map",
        }
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Which collective dephasing generator is added to the effective Liouvillian.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Noise {
    Correlated,
    #[default]
    Uncorrelated,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeGrid {
    pub t_max: f64,
    pub n_points: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TolSpec {
    pub rtol: f64,
    pub atol: f64,
}

impl Default for TolSpec {
    fn default() -> Self {
        Self { rtol: 1e-9, atol: 1e-12 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    pub dir: String,
}

/// Start of an `evolve` run: a logical state (optionally `|𝕛_L, φ⟩`) or an occupation triple.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialState {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub logical: Option<u8>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub occupation: Option<Occupation>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GateSpec {
    pub gate: Gate,
    #[serde(default)]
    pub bit: u8,
    #[serde(default)]
    pub phi: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<i64>,
    #[serde(default = "default_gate_points")]
    pub n_points: usize,
    #[serde(default)]
    pub hold: f64,
}

fn default_gate_points() -> usize {
    101
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PreparationSpec {
    pub which: u8,
    pub g_d: f64,
    pub start: Occupation,
    #[serde(default = "default_gate_points")]
    pub n_points: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SteadySpec {
    #[serde(default = "default_tau")]
    pub tau_rel: f64,
    /// Random effective-parameter draws on which the logical states are certified dark.
    #[serde(default)]
    pub dark_draws: usize,
}

impl Default for SteadySpec {
    fn default() -> Self {
        Self { tau_rel: default_tau(), dark_draws: 0 }
    }
}

fn default_tau() -> f64 {
    1e-10
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Fig3Spec {
    /// Expected steady-state fidelities and the absolute tolerance on them.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<[f64; 2]>,
    #[serde(default = "default_reference_tol")]
    pub reference_tol: f64,
    /// Largest HS distance between either trajectory's end point and the kernel state.
    #[serde(default = "default_convergence_tol")]
    pub convergence_tol: f64,
}

impl Default for Fig3Spec {
    fn default() -> Self {
        Self { reference: None, reference_tol: default_reference_tol(), convergence_tol: default_convergence_tol() }
    }
}

fn default_reference_tol() -> f64 {
    0.005
}

fn default_convergence_tol() -> f64 {
    1e-6
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValidationSpec {
    #[serde(default = "default_bits")]
    pub bits: Vec<u8>,
    #[serde(default = "default_true")]
    pub trajectory: bool,
    /// Integration window in units of `1/κ_p`.
    #[serde(default = "default_horizon")]
    pub horizon: f64,
    #[serde(default = "default_validation_points")]
    pub n_points: usize,
    #[serde(default = "default_max_constant")]
    pub max_constant: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tracking: Option<TrackingSpec>,
}

impl Default for ValidationSpec {
    fn default() -> Self {
        Self {
            bits: default_bits(),
            trajectory: true,
            horizon: default_horizon(),
            n_points: default_validation_points(),
            max_constant: default_max_constant(),
            tracking: None,
        }
    }
}

fn default_bits() -> Vec<u8> {
    vec![0, 1]
}

fn default_true() -> bool {
    true
}

fn default_horizon() -> f64 {
    5.0
}

fn default_validation_points() -> usize {
    51
}

fn default_max_constant() -> f64 {
    10.0
}

/// Full-vs-effective tracking, optionally at its own regime point and truncation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrackingSpec {
    pub initial: Occupation,
    #[serde(default = "default_tracking_horizon")]
    pub horizon: f64,
    #[serde(default = "default_tracking_points")]
    pub n_points: usize,
    #[serde(default = "default_factor")]
    pub factor: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub physical: Option<PhysicalParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truncation: Option<TruncationSpec>,
}

fn default_tracking_horizon() -> f64 {
    10.0
}

fn default_tracking_points() -> usize {
    201
}

fn default_factor() -> f64 {
    5.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: Kind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub effective: Option<EffectiveParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dephasing: Option<DephasingParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise: Option<Noise>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub local_noise: Option<LocalNoiseParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub physical: Option<PhysicalParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truncation: Option<TruncationSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time: Option<TimeGrid>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerances: Option<TolSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<OutputSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<InitialState>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gate: Option<GateSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preparation: Option<PreparationSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steady: Option<SteadySpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fig3: Option<Fig3Spec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub validation: Option<ValidationSpec>,
}

fn config_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

/// Parses `text`, applies `key=value` overrides to scalar fields and validates for the given kind.
///
/// A `kind` key in the file must agree with `kind`; if absent it is filled in.
pub fn parse_config(text: &str, kind: Option<Kind>, overrides: &[String], seed: Option<u64>) -> Result<ExperimentConfig, CliError> {
    let mut doc: toml::Table = text.parse().map_err(|e: toml::de::Error| config_err(e.to_string()))?;
    if let Some(k) = kind {
        let name = toml::Value::String(k.name().to_string());
        match doc.get("kind") {
            Some(v) if *v != name => return Err(config_err(format!("kind: file says {v}, command is {k}"))),
            _ => {
                doc.insert("kind".into(), name);
            }
        }
    }
    for o in overrides {
        apply_override(&mut doc, o)?;
    }
    if let Some(s) = seed {
        let s = i64::try_from(s).map_err(|_| config_err("seed: must fit in a signed 64-bit integer"))?;
        doc.insert("seed".into(), toml::Value::Integer(s));
    }
    let cfg: ExperimentConfig = toml::Value::Table(doc).try_into().map_err(|e: toml::de::Error| config_err(e.to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_config(path: &Path, kind: Option<Kind>, overrides: &[String], seed: Option<u64>) -> Result<ExperimentConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| config_err(format!("{}: cannot read config: {e}", path.display())))?;
    parse_config(&text, kind, overrides, seed).map_err(|e| match e {
        CliError::Config(msg) => config_err(format!("{}: {msg}", path.display())),
        other => other,
    })
}

/// `a.b.c=value`; the value is read as a TOML scalar, falling back to a bare string.
fn apply_override(doc: &mut toml::Table, spec: &str) -> Result<(), CliError> {
    let (key, raw) = spec.split_once('=').ok_or_else(|| config_err(format!("--set {spec}: expected KEY=VALUE")))?;
    let path: Vec<&str> = key.trim().split('.').collect();
    if path.iter().any(|p| p.is_empty()) {
        return Err(config_err(format!("--set {spec}: empty key segment")));
    }
    let value = match format!("v = {}", raw.trim()).parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").expect("parsed key"),
        Err(_) => toml::Value::String(raw.trim().to_string()),
    };
    if matches!(value, toml::Value::Table(_) | toml::Value::Array(_)) {
        return Err(config_err(format!("--set {key}: only scalar fields can be overridden")));
    }
    let (last, parents) = path.split_last().expect("nonempty path");
    let mut table = doc;
    for p in parents {
        let entry = table.entry(p.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
        table = entry.as_table_mut().ok_or_else(|| config_err(format!("--set {key}: {p} is not a table")))?;
    }
    if let Some(old) = table.get(*last) {
        if matches!(old, toml::Value::Table(_) | toml::Value::Array(_)) {
            return Err(config_err(format!("--set {key}: only scalar fields can be overridden")));
        }
    }
    table.insert(last.to_string(), value);
    Ok(())
}

fn require<'a, T>(field: &'a Option<T>, name: &str, kind: Kind) -> Result<&'a T, CliError> {
    field.as_ref().ok_or_else(|| config_err(format!("{name}: required for kind={kind}")))
}

fn wrap(name: &str, r: catqutrit::Result<()>) -> Result<(), CliError> {
    r.map_err(|e| config_err(format!("{name}: {e}")))
}

impl ExperimentConfig {
    /// Names of the sections present in this config.
    fn present(&self) -> Vec<&'static str> {
        let mut out = Vec::new();
        let mut mark = |name: &'static str, here: bool| {
            if here {
                out.push(name)
            }
        };
        mark("n", self.n.is_some());
        mark("seed", self.seed.is_some());
        mark("effective", self.effective.is_some());
        mark("dephasing", self.dephasing.is_some());
        mark("noise", self.noise.is_some());
        mark("local_noise", self.local_noise.is_some());
        mark("physical", self.physical.is_some());
        mark("truncation", self.truncation.is_some());
        mark("time", self.time.is_some());
        mark("tolerances", self.tolerances.is_some());
        mark("output", self.output.is_some());
        mark("initial", self.initial.is_some());
        mark("gate", self.gate.is_some());
        mark("preparation", self.preparation.is_some());
        mark("steady", self.steady.is_some());
        mark("fig3", self.fig3.is_some());
        mark("validation", self.validation.is_some());
        out
    }

    /// Sections a kind reads; anything else in the file is rejected.
    fn allowed(kind: Kind) -> &'static [&'static str] {
        match kind {
            Kind::Steady => &["n", "seed", "effective", "dephasing", "noise", "steady", "output"],
            Kind::Evolve => &["n", "seed", "effective", "dephasing", "noise", "time", "tolerances", "initial", "output"],
            Kind::Gates => &["n", "seed", "effective", "tolerances", "gate", "output"],
            Kind::Fig3 => &["n", "seed", "effective", "dephasing", "time", "tolerances", "fig3", "output"],
            Kind::TwoQutritNoise => &["n", "seed", "effective", "dephasing", "local_noise", "output"],
            Kind::Prepare => &["n", "seed", "preparation", "output"],
            Kind::PhysicalValidate => &["seed", "physical", "truncation", "tolerances", "validation", "output"],
            Kind::ParamsMap => &["n", "seed", "physical", "output"],
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let kind = self.kind;
        let allowed = Self::allowed(kind);
        if let Some(extra) = self.present().into_iter().find(|f| !allowed.contains(f)) {
            return Err(config_err(format!("{extra}: not used by kind={kind}")));
        }
        match kind {
            Kind::Steady | Kind::Evolve | Kind::Gates | Kind::Fig3 => {
                let n = *require(&self.n, "n", kind)?;
                if n == 0 {
                    return Err(config_err("n: must be at least 1"));
                }
                wrap("effective", require(&self.effective, "effective", kind)?.validate())?;
            }
            Kind::TwoQutritNoise | Kind::Prepare => {
                if let Some(n) = self.n {
                    if n != 2 {
                        return Err(config_err(format!("n: kind={kind} is defined for n = 2")));
                    }
                }
            }
            Kind::PhysicalValidate | Kind::ParamsMap => {
                wrap("physical", require(&self.physical, "physical", kind)?.validate())?;
            }
        }
        if self.noise.is_some() && self.dephasing.is_none() {
            return Err(config_err("noise: needs a dephasing section"));
        }
        if let Some(d) = &self.dephasing {
            wrap("dephasing", d.validate())?;
        }
        if let Some(t) = &self.time {
            if !(t.t_max > 0.0 && t.t_max.is_finite()) {
                return Err(config_err("time.t_max: must be positive and finite"));
            }
            if t.n_points < 2 {
                return Err(config_err("time.n_points: must be at least 2"));
            }
        }
        if let Some(t) = &self.tolerances {
            if !(t.rtol > 0.0 && t.atol > 0.0) {
                return Err(config_err("tolerances: rtol and atol must be positive"));
            }
        }
        match kind {
            Kind::Evolve => {
                require(&self.time, "time", kind)?;
                let init = require(&self.initial, "initial", kind)?;
                match (init.logical, init.occupation) {
                    (Some(b), None) if b <= 1 => {}
                    (Some(_), None) => return Err(config_err("initial.logical: must be 0 or 1")),
                    (None, Some(_)) if init.phi.is_none() => {}
                    (None, Some(_)) => return Err(config_err("initial.phi: only valid with initial.logical")),
                    _ => return Err(config_err("initial: give exactly one of logical, occupation")),
                }
            }
            Kind::Gates => {
                let g = require(&self.gate, "gate", kind)?;
                if g.bit > 1 {
                    return Err(config_err("gate.bit: must be 0 or 1"));
                }
                if g.n_points < 2 {
                    return Err(config_err("gate.n_points: must be at least 2"));
                }
                if !(g.hold >= 0.0) {
                    return Err(config_err("gate.hold: must be nonnegative"));
                }
                if self.effective.map_or(false, |p| p.delta1 == 0.0) {
                    return Err(config_err("effective.delta1: gates need a nonzero delta1"));
                }
            }
            Kind::Fig3 => {
                require(&self.dephasing, "dephasing", kind)?;
                require(&self.time, "time", kind)?;
            }
            Kind::TwoQutritNoise => {
                wrap("effective", require(&self.effective, "effective", kind)?.validate())?;
                require(&self.dephasing, "dephasing", kind)?;
                wrap("local_noise", require(&self.local_noise, "local_noise", kind)?.validate())?;
            }
            Kind::Prepare => {
                let p = require(&self.preparation, "preparation", kind)?;
                if !(p.g_d > 0.0 && p.g_d.is_finite()) {
                    return Err(config_err("preparation.g_d: must be positive and finite"));
                }
                wrap("preparation", catqutrit::dynamics::preparation_time(p.which, p.g_d, p.start).map(|_| ()))?;
            }
            Kind::PhysicalValidate => {
                wrap("truncation", require(&self.truncation, "truncation", kind)?.validate())?;
                if let Some(v) = &self.validation {
                    if v.bits.is_empty() || v.bits.iter().any(|&b| b > 1) {
                        return Err(config_err("validation.bits: a nonempty list of 0 and 1"));
                    }
                    if let Some(t) = &v.tracking {
                        if let Some(p) = &t.physical {
                            wrap("validation.tracking.physical", p.validate())?;
                        }
                        if let Some(tr) = &t.truncation {
                            wrap("validation.tracking.truncation", tr.validate())?;
                        }
                    }
                }
            }
            Kind::Steady => {
                if let Some(s) = &self.steady {
                    if !(s.tau_rel > 0.0 && s.tau_rel < 1.0) {
                        return Err(config_err("steady.tau_rel: must lie in (0, 1)"));
                    }
                }
            }
            Kind::ParamsMap => {}
        }
        Ok(())
    }

    pub fn tolerances(&self) -> catqutrit::dynamics::Tolerances {
        let t = self.tolerances.unwrap_or_default();
        catqutrit::dynamics::Tolerances { rtol: t.rtol, atol: t.atol, ..Default::default() }
    }
}
