//! Spec-file loading, experiment plans and artifact emission for the
//! `maxweight` binary.
//!
//! A spec file is JSON:
//!
//! ```json
//! {
//!   "states": ["s1"],
//!   "transition": [[1.0]],
//!   "r": 1,
//!   "delta_max": 2.0,
//!   "actions": {
//!     "s1": [
//!       {"label": "x1", "cost": 1.0, "arrivals": [0.0], "services": [2.0]},
//!       {"label": "x2", "cost": 0.0, "arrivals": [1.0], "services": [0.0]}
//!     ]
//!   },
//!   "certificate": {
//!     "eta": 0.5,
//!     "weights": {"s1": [{"action": "x1", "prob": 0.5}, {"action": "x2", "prob": 0.5}]}
//!   },
//!   "reference_state": "s1"
//! }
//! ```
//!
//! `certificate` and `reference_state` are optional.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::controller::{simulate_with, Policy, SimOptions, Trace};
use crate::drift::{
    check_drift, initial_transient, sweep, theorem2_bounds, BoundReport, DriftRecord,
    SweepSetup, Transient,
};
use crate::dual::{optimal_stationary_cost, suggest_certificate, verify_strong_duality, DualityCheckConfig};
use crate::error::{Error, Result};
use crate::markov::return_and_hitting_moments;
use crate::model::{verify_slackness, Action, NetworkDraft, NetworkSpec, SlacknessCertificate, Violation};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_VERIFICATION_FAILED: i32 = 2;
pub const EXIT_INPUT_ERROR: i32 = 3;

/// Environment variable capping the worker pool size.
pub const THREADS_ENV: &str = "MAXWEIGHT_THREADS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Simulate,
    Sweep,
    VerifyDuality,
    VerifyDrift,
    Bounds,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PolicyChoice {
    #[default]
    Qla,
    /// The certificate's stationary randomized policy.
    Randomized,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentPlan {
    pub spec_path: PathBuf,
    pub mode: Mode,
    pub vs: Vec<f64>,
    pub horizon: usize,
    pub replications: usize,
    pub seed_base: u64,
    pub out_dir: PathBuf,
    pub policy: PolicyChoice,
    /// Start state label; defaults to the reference state.
    pub start_state: Option<String>,
}

impl ExperimentPlan {
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if self.vs.is_empty() {
            problems.push("V list is empty".to_string());
        }
        for v in &self.vs {
            if !(v.is_finite() && *v >= 1.0) {
                problems.push(format!("V = {v} must be at least 1"));
            }
        }
        if self.horizon == 0 {
            problems.push("horizon must be at least 1".into());
        }
        if self.replications == 0 {
            problems.push("replications must be at least 1".into());
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Input(problems.join("; ")))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ActionFile {
    pub label: String,
    pub cost: f64,
    pub arrivals: Vec<f64>,
    pub services: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightFile {
    pub action: String,
    pub prob: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertificateFile {
    pub eta: f64,
    pub weights: BTreeMap<String, Vec<WeightFile>>,
}

/// On-disk layout of a network spec.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpecFile {
    pub states: Vec<String>,
    pub transition: Vec<Vec<f64>>,
    pub r: usize,
    pub delta_max: f64,
    pub actions: BTreeMap<String, Vec<ActionFile>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub certificate: Option<CertificateFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_state: Option<String>,
}

impl SpecFile {
    /// Serializable form of an in-memory instance.
    pub fn from_spec(spec: &NetworkSpec, cert: Option<&SlacknessCertificate>) -> Self {
        let labels = spec.chain().labels();
        let actions = (0..spec.num_states())
            .map(|i| {
                let table = spec
                    .actions(i)
                    .iter()
                    .map(|a| ActionFile {
                        label: a.label.clone(),
                        cost: a.cost,
                        arrivals: a.arrivals.clone(),
                        services: a.services.clone(),
                    })
                    .collect();
                (labels[i].clone(), table)
            })
            .collect();
        let certificate = cert.map(|c| CertificateFile {
            eta: c.eta,
            weights: c
                .weights
                .iter()
                .enumerate()
                .map(|(i, ws)| {
                    let entries = ws
                        .iter()
                        .map(|&(k, prob)| WeightFile {
                            action: spec.action(i, k).label.clone(),
                            prob,
                        })
                        .collect();
                    (labels[i].clone(), entries)
                })
                .collect(),
        });
        Self {
            states: labels.to_vec(),
            transition: spec.chain().transition().to_vec(),
            r: spec.queues(),
            delta_max: spec.delta_max(),
            actions,
            certificate,
            reference_state: None,
        }
    }
}

/// A validated spec with its optional certificate and chosen reference state.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedSpec {
    pub spec: NetworkSpec,
    pub certificate: Option<SlacknessCertificate>,
    /// Slack achieved by the certificate, which may exceed the claimed `eta`.
    pub achieved_eta: Option<f64>,
    pub reference_state: usize,
    /// `"spec"` when named in the file, `"max_pi"` otherwise.
    pub reference_choice: &'static str,
    pub warnings: Vec<String>,
}

impl LoadedSpec {
    pub fn reference_label(&self) -> &str {
        &self.spec.chain().labels()[self.reference_state]
    }
}

pub fn load_spec(path: &Path) -> Result<LoadedSpec> {
    let text = fs::read_to_string(path).map_err(|e| Error::Input(format!("{}: {e}", path.display())))?;
    parse_spec(&text).map_err(|e| match e {
        Error::Input(msg) => Error::Input(format!("{}: {msg}", path.display())),
        other => other,
    })
}

pub fn parse_spec(text: &str) -> Result<LoadedSpec> {
    let file: SpecFile = serde_json::from_str(text).map_err(|e| Error::Input(e.to_string()))?;
    build_spec(file)
}

fn build_spec(file: SpecFile) -> Result<LoadedSpec> {
    let mut missing = Vec::new();
    for key in file.actions.keys() {
        if !file.states.contains(key) {
            return Err(Error::Input(format!("actions listed for unknown state '{key}'")));
        }
    }
    let actions = file
        .states
        .iter()
        .map(|s| match file.actions.get(s) {
            Some(table) => table
                .iter()
                .map(|a| Action::new(a.label.clone(), a.cost, a.arrivals.clone(), a.services.clone()))
                .collect(),
            None => {
                missing.push(Violation::NoActions { state: s.clone() });
                Vec::new()
            }
        })
        .collect();
    let draft = NetworkDraft {
        queues: file.r,
        states: file.states.clone(),
        transition: file.transition,
        delta_max: file.delta_max,
        actions,
    };
    let spec = match NetworkSpec::from_draft(draft) {
        Err(Error::InvalidSpec(mut v)) => {
            for m in missing {
                if !v.contains(&m) {
                    v.push(m);
                }
            }
            return Err(Error::InvalidSpec(v));
        }
        other => other?,
    };

    let mut warnings = Vec::new();
    let (certificate, achieved_eta) = match file.certificate {
        Some(c) => {
            let cert = certificate_from_file(&spec, &c)?;
            let achieved = verify_slackness(&spec, &cert)?;
            (Some(cert), Some(achieved))
        }
        None => {
            warnings.push("no slackness certificate: bounds and sweep modes are unavailable".into());
            (None, None)
        }
    };
    let (reference_state, reference_choice) = match &file.reference_state {
        Some(label) => (
            spec.chain()
                .index_of(label)
                .ok_or_else(|| Error::Input(format!("reference_state '{label}' is not a state")))?,
            "spec",
        ),
        None => (spec.stationary().argmax(), "max_pi"),
    };
    Ok(LoadedSpec {
        spec,
        certificate,
        achieved_eta,
        reference_state,
        reference_choice,
        warnings,
    })
}

fn certificate_from_file(spec: &NetworkSpec, c: &CertificateFile) -> Result<SlacknessCertificate> {
    let labels = spec.chain().labels();
    for key in c.weights.keys() {
        if !labels.contains(key) {
            return Err(Error::InvalidCertificate(format!("weights for unknown state '{key}'")));
        }
    }
    let weights = labels
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let entries = c
                .weights
                .get(s)
                .ok_or_else(|| Error::InvalidCertificate(format!("no weights for state '{s}'")))?;
            entries
                .iter()
                .map(|w| {
                    let k = spec.action_index(i, &w.action).ok_or_else(|| {
                        Error::InvalidCertificate(format!("state '{s}' has no action '{}'", w.action))
                    })?;
                    Ok((k, w.prob))
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SlacknessCertificate { weights, eta: c.eta })
}

/// 17 significant digits, enough to round-trip any `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Writes a trace with its drift columns. Backlog and `L` are post-slot.
pub fn trace_csv(trace: &Trace, spec: &NetworkSpec, drift: &[DriftRecord]) -> String {
    let r = trace.queues();
    let mut out = String::from("slot,state,action,cost");
    for j in 1..=r {
        let _ = write!(out, ",q_{j}");
    }
    out.push_str(",L,drift_lhs,drift_rhs\n");
    let labels = spec.chain().labels();
    for t in 0..trace.len() {
        let s = trace.state(t);
        let _ = write!(
            out,
            "{t},{},{},{}",
            labels[s],
            spec.action(s, trace.action(t)).label,
            fmt_f64(trace.cost(t))
        );
        for q in trace.queue_after(t) {
            let _ = write!(out, ",{}", fmt_f64(*q));
        }
        let _ = writeln!(
            out,
            ",{},{},{}",
            fmt_f64(trace.lyapunov_after(t)),
            fmt_f64(drift[t].lhs),
            fmt_f64(drift[t].rhs)
        );
    }
    out
}

pub const SWEEP_HEADER: &str = "V,f_star,util_bound,util_emp,util_se,bl_bound,bl_emp,bl_se,C,D,T1_mean,T1_m2,B,eta";

/// One line of the sweep CSV.
pub fn sweep_row(rep: &BoundReport) -> String {
    let e = rep.empirical.as_ref();
    let nan = f64::NAN;
    [
        rep.v,
        rep.f_star_av,
        rep.utility_bound,
        e.map_or(nan, |e| e.avg_cost),
        e.map_or(nan, |e| e.cost_se),
        rep.backlog_bound,
        e.map_or(nan, |e| e.avg_backlog),
        e.map_or(nan, |e| e.backlog_se),
        rep.c,
        rep.d,
        rep.t1_mean,
        rep.t1_second_moment,
        rep.b,
        rep.eta,
    ]
    .iter()
    .map(|&x| fmt_f64(x))
    .collect::<Vec<_>>()
    .join(",")
}

pub fn sweep_csv(reports: &[BoundReport]) -> String {
    let mut out = format!("{SWEEP_HEADER}\n");
    for rep in reports {
        out.push_str(&sweep_row(rep));
        out.push('\n');
    }
    out
}

/// Result of [`run`]: named failures (empty on success) and files written.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunOutcome {
    pub failures: Vec<String>,
    pub artifacts: Vec<PathBuf>,
    pub warnings: Vec<String>,
}

impl RunOutcome {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn exit_code(&self) -> i32 {
        if self.passed() {
            EXIT_PASS
        } else {
            EXIT_VERIFICATION_FAILED
        }
    }
}

/// Exit status for an error that stopped a run.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Input(_)
        | Error::InvalidChain(_)
        | Error::InvalidSpec(_)
        | Error::InvalidArgument(_)
        | Error::InvalidCertificate(_)
        | Error::SlacknessViolated { .. }
        | Error::Io(_)
        | Error::Json(_) => EXIT_INPUT_ERROR,
        _ => EXIT_VERIFICATION_FAILED,
    }
}

/// Worker pool sized by [`THREADS_ENV`] when set, else rayon's default.
pub fn worker_pool() -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(raw) = std::env::var(THREADS_ENV) {
        let n: usize = raw
            .trim()
            .parse()
            .ok()
            .filter(|&n| n >= 1)
            .ok_or_else(|| Error::Input(format!("{THREADS_ENV}={raw} is not a positive integer")))?;
        builder = builder.num_threads(n);
    }
    builder
        .build()
        .map_err(|e| Error::Input(format!("cannot start worker pool: {e}")))
}

/// Token used in artifact file names, e.g. `16` or `2.5`.
pub fn v_tag(v: f64) -> String {
    format!("{v}")
}

pub fn run(plan: &ExperimentPlan) -> Result<RunOutcome> {
    plan.validate()?;
    let loaded = load_spec(&plan.spec_path)?;
    let mut outcome = run_loaded(plan, &loaded)?;
    let mut warnings = loaded.warnings.clone();
    warnings.append(&mut outcome.warnings);
    outcome.warnings = warnings;
    Ok(outcome)
}

/// Runs a plan against an already loaded spec; load warnings are not repeated.
pub fn run_loaded(plan: &ExperimentPlan, loaded: &LoadedSpec) -> Result<RunOutcome> {
    plan.validate()?;
    fs::create_dir_all(&plan.out_dir)?;
    let pool = worker_pool()?;
    pool.install(|| match plan.mode {
        Mode::Simulate => run_traces(plan, loaded, false),
        Mode::VerifyDrift => run_traces(plan, loaded, true),
        Mode::VerifyDuality => run_duality(plan, loaded),
        Mode::Bounds => run_bounds(plan, loaded, false),
        Mode::Sweep => run_bounds(plan, loaded, true),
    })
}

fn start_state(plan: &ExperimentPlan, loaded: &LoadedSpec) -> Result<usize> {
    match &plan.start_state {
        Some(label) => loaded
            .spec
            .chain()
            .index_of(label)
            .ok_or_else(|| Error::Input(format!("start state '{label}' is not a state"))),
        None => Ok(loaded.reference_state),
    }
}

fn policy_for(plan: &ExperimentPlan, loaded: &LoadedSpec, v: f64) -> Result<Policy> {
    match plan.policy {
        PolicyChoice::Qla => Policy::qla(v),
        PolicyChoice::Randomized => loaded
            .certificate
            .clone()
            .map(Policy::Randomized)
            .ok_or_else(|| Error::Input("the randomized policy needs a certificate".into())),
    }
}

fn write(path: PathBuf, contents: &str) -> Result<PathBuf> {
    fs::write(&path, contents)?;
    Ok(path)
}

fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

/// Per-trace drift verdict written by `verify-drift`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DriftVerdict {
    pub v: f64,
    pub replication: usize,
    pub seed: u64,
    pub policy: &'static str,
    pub slots: usize,
    pub violations: usize,
    pub first_violation: Option<usize>,
    pub max_excess: f64,
    pub transient: Option<Transient>,
    pub passed: bool,
}

fn run_traces(plan: &ExperimentPlan, loaded: &LoadedSpec, verify: bool) -> Result<RunOutcome> {
    let spec = &loaded.spec;
    let start = start_state(plan, loaded)?;
    let jobs: Vec<(f64, usize)> = plan
        .vs
        .iter()
        .flat_map(|&v| (0..plan.replications).map(move |k| (v, k)))
        .collect();
    let results: Vec<(PathBuf, DriftVerdict)> = jobs
        .par_iter()
        .map(|&(v, k)| {
            let seed = plan.seed_base + k as u64;
            let policy = policy_for(plan, loaded, v)?;
            let trace = simulate_with(spec, spec.chain(), &policy, &SimOptions::new(start, plan.horizon, seed))?;
            let check = check_drift(&trace, spec, v)?;
            let path = plan.out_dir.join(format!("trace_V{}_rep{k}.csv", v_tag(v)));
            write(path.clone(), &trace_csv(&trace, spec, &check.records))?;
            let transient = (start != loaded.reference_state)
                .then(|| initial_transient(&trace, loaded.reference_state, spec.bound_b()))
                .flatten();
            let transient_ok = transient.is_none_or(|t| t.lyapunov_at_hit <= t.bound);
            Ok((
                path,
                DriftVerdict {
                    v,
                    replication: k,
                    seed,
                    policy: policy.name(),
                    slots: check.slots,
                    violations: check.violations,
                    first_violation: check.first_violation,
                    max_excess: check.max_excess,
                    transient,
                    passed: check.passed() && transient_ok,
                },
            ))
        })
        .collect::<Result<_>>()?;

    let mut outcome = RunOutcome::default();
    let mut verdicts = Vec::new();
    for (path, verdict) in results {
        outcome.artifacts.push(path);
        if verify && !verdict.passed {
            outcome.failures.push(format!(
                "drift V={} rep={}: {} violating slots (first at {:?})",
                verdict.v, verdict.replication, verdict.violations, verdict.first_violation
            ));
        }
        verdicts.push(verdict);
    }
    if verify {
        outcome
            .artifacts
            .push(write(plan.out_dir.join("drift.json"), &to_json(&verdicts)?)?);
    }
    Ok(outcome)
}

fn duality_eta(loaded: &LoadedSpec, outcome: &mut RunOutcome) -> Result<f64> {
    if let Some(c) = &loaded.certificate {
        return Ok(c.eta);
    }
    match suggest_certificate(&loaded.spec)? {
        Some(c) => {
            outcome
                .warnings
                .push(format!("using suggested slack eta = {} for sampling", c.eta));
            Ok(c.eta)
        }
        None => Err(Error::Input("spec admits no positive slack".into())),
    }
}

fn run_duality(plan: &ExperimentPlan, loaded: &LoadedSpec) -> Result<RunOutcome> {
    let mut outcome = RunOutcome::default();
    let eta = duality_eta(loaded, &mut outcome)?;
    let cfg = DualityCheckConfig {
        seed: plan.seed_base,
        ..DualityCheckConfig::default()
    };
    let reports = plan
        .vs
        .par_iter()
        .map(|&v| verify_strong_duality(&loaded.spec, v, eta, &cfg))
        .collect::<Result<Vec<_>>>()?;
    for rep in &reports {
        for name in rep.failed_checks() {
            outcome.failures.push(format!("duality V={}: {name}", rep.v));
        }
    }
    outcome
        .artifacts
        .push(write(plan.out_dir.join("duality.json"), &to_json(&reports)?)?);
    Ok(outcome)
}

fn run_bounds(plan: &ExperimentPlan, loaded: &LoadedSpec, as_sweep: bool) -> Result<RunOutcome> {
    let spec = &loaded.spec;
    let cert = loaded
        .certificate
        .as_ref()
        .ok_or_else(|| Error::Input("a slackness certificate is required for bounds".into()))?;
    let stats = return_and_hitting_moments(spec.chain(), loaded.reference_state)?;
    let setup = SweepSetup {
        spec,
        process: spec.chain(),
        stats: &stats,
        reference_label: loaded.reference_label().to_string(),
        reference_choice: loaded.reference_choice.to_string(),
        eta: cert.eta,
        f_star_av: optimal_stationary_cost(spec)?,
        start_state: start_state(plan, loaded)?,
        horizon: plan.horizon,
        replications: plan.replications,
        seed_base: plan.seed_base,
    };
    // Fail fast on a bad eta before simulating.
    theorem2_bounds(spec, &stats, cert.eta, plan.vs[0], setup.f_star_av)?;
    let reports = sweep(&setup, &plan.vs)?;

    let mut outcome = RunOutcome::default();
    for rep in &reports {
        let e = rep.empirical.as_ref().expect("sweep fills empirical results");
        if e.utility_violation {
            outcome.failures.push(format!("utility bound V={}: margin {}", rep.v, e.utility_margin));
        }
        if e.backlog_violation {
            outcome.failures.push(format!("backlog bound V={}: margin {}", rep.v, e.backlog_margin));
        }
    }
    if as_sweep {
        outcome
            .artifacts
            .push(write(plan.out_dir.join("sweep.csv"), &sweep_csv(&reports))?);
        for rep in &reports {
            let name = format!("sweep_V{}.json", v_tag(rep.v));
            outcome.artifacts.push(write(plan.out_dir.join(name), &to_json(rep)?)?);
        }
    } else {
        outcome
            .artifacts
            .push(write(plan.out_dir.join("bounds.json"), &to_json(&reports)?)?);
    }
    Ok(outcome)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{worked_certificate, worked_instance};
    use crate::drift::drift_records;

    fn worked_json() -> String {
        serde_json::to_string(&SpecFile::from_spec(&worked_instance(), Some(&worked_certificate()))).unwrap()
    }

    #[test]
    fn round_trip_worked() {
        let loaded = parse_spec(&worked_json()).unwrap();
        assert_eq!(loaded.spec, worked_instance());
        assert_eq!(loaded.certificate, Some(worked_certificate()));
        assert!((loaded.achieved_eta.unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(loaded.reference_choice, "max_pi");
        assert!(loaded.warnings.is_empty());
    }

    #[test]
    fn unknown_field_rejected() {
        let text = worked_json().replacen("\"r\"", "\"queues\":1,\"r\"", 1);
        let err = parse_spec(&text).unwrap_err();
        assert!(err.to_string().contains("queues"), "{err}");
        assert_eq!(exit_code(&err), EXIT_INPUT_ERROR);
    }

    #[test]
    fn missing_certificate_warns() {
        let mut f = SpecFile::from_spec(&worked_instance(), None);
        f.reference_state = Some("s1".into());
        let loaded = parse_spec(&serde_json::to_string(&f).unwrap()).unwrap();
        assert!(loaded.certificate.is_none());
        assert_eq!(loaded.warnings.len(), 1);
        assert_eq!(loaded.reference_choice, "spec");
    }

    #[test]
    fn row_sum_violation_names_row() {
        let mut f = SpecFile::from_spec(&worked_instance(), None);
        f.transition = vec![vec![0.9]];
        let err = parse_spec(&serde_json::to_string(&f).unwrap()).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("row 0") && msg.contains("not stochastic"), "{msg}");
    }

    #[test]
    fn overclaimed_certificate_rejected() {
        let mut cert = worked_certificate();
        cert.eta = 0.75;
        let f = SpecFile::from_spec(&worked_instance(), Some(&cert));
        let err = parse_spec(&serde_json::to_string(&f).unwrap()).unwrap_err();
        assert!(matches!(err, Error::SlacknessViolated { .. }));
    }

    #[test]
    fn plan_validation() {
        let plan = ExperimentPlan {
            spec_path: "x.json".into(),
            mode: Mode::Simulate,
            vs: vec![1.0],
            horizon: 0,
            replications: 1,
            seed_base: 0,
            out_dir: "out".into(),
            policy: PolicyChoice::Qla,
            start_state: None,
        };
        assert!(matches!(plan.validate(), Err(Error::Input(_))));
        let ok = ExperimentPlan { horizon: 1, ..plan.clone() };
        assert!(ok.validate().is_ok());
        let low_v = ExperimentPlan { vs: vec![0.5], ..ok };
        assert!(low_v.validate().is_err());
    }

    #[test]
    fn floats_round_trip() {
        for x in [1.0 / 3.0, 0.1, 1e-300, 123456.789, 0.0] {
            assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(fmt_f64(0.5), "5.0000000000000000e-1");
    }

    #[test]
    fn trace_csv_shape() {
        let spec = worked_instance();
        let tr = crate::controller::simulate(&spec, &Policy::qla(3.0).unwrap(), 0, 4, 0).unwrap();
        let recs = drift_records(&tr, &spec, 3.0).unwrap();
        let csv = trace_csv(&tr, &spec, &recs);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "slot,state,action,cost,q_1,L,drift_lhs,drift_rhs");
        assert_eq!(lines.len(), 5);
        assert!(lines[1].starts_with("0,s1,x2,0.0000000000000000e0,1.0000000000000000e0,"));
    }
}
