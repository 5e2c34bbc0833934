//! Sample-path checks of the drift argument, renewal-cycle accounting, and
//! the utility/backlog bounds with their empirical counterparts.

use rayon::prelude::*;
use serde::Serialize;

use crate::controller::{simulate_with, Policy, SimOptions, Trace};
use crate::dual::g_si;
use crate::error::{Error, Result};
use crate::markov::{bound_constants, ReturnTimeStats, StateProcess};
use crate::model::NetworkSpec;
use crate::queues::time_averages;

/// Absolute slack allowed on the per-slot drift inequality.
pub const DRIFT_TOL: f64 = 1e-9;
/// Width, in standard errors, of the renewal acceptance envelope.
pub const RENEWAL_Z: f64 = 4.0;
/// A negative margin is flagged once it exceeds this many standard errors.
pub const MARGIN_Z: f64 = 3.0;

/// One slot of `L(t+1) - L(t) + V f(t) <= B^2 + g_{S(t)}(q(t))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DriftRecord {
    pub lhs: f64,
    pub rhs: f64,
}

impl DriftRecord {
    pub fn holds(&self) -> bool {
        self.lhs <= self.rhs + DRIFT_TOL
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DriftCheck {
    #[serde(skip)]
    pub records: Vec<DriftRecord>,
    pub slots: usize,
    pub violations: usize,
    pub first_violation: Option<usize>,
    /// Largest `lhs - rhs` over the trace.
    pub max_excess: f64,
}

impl DriftCheck {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

fn check_trace_matches(trace: &Trace, spec: &NetworkSpec) -> Result<()> {
    if trace.queues() != spec.queues() {
        return Err(Error::TraceMismatch(format!(
            "trace has {} queues, spec has {}",
            trace.queues(),
            spec.queues()
        )));
    }
    for t in 0..trace.len() {
        let s = trace.state(t);
        if s >= spec.num_states() {
            return Err(Error::TraceMismatch(format!("slot {t}: unknown state {s}")));
        }
        let k = trace.action(t);
        let Some(a) = spec.actions(s).get(k) else {
            return Err(Error::TraceMismatch(format!("slot {t}: unknown action {k}")));
        };
        if a.cost != trace.cost(t) || a.arrivals != trace.arrivals(t) || a.services != trace.services(t) {
            return Err(Error::TraceMismatch(format!(
                "slot {t}: recorded action does not match '{}'",
                a.label
            )));
        }
    }
    Ok(())
}

/// Evaluates both sides of the per-slot drift inequality. The right side is
/// recomputed from the dual function, independently of the controller.
pub fn drift_records(trace: &Trace, spec: &NetworkSpec, v: f64) -> Result<Vec<DriftRecord>> {
    check_trace_matches(trace, spec)?;
    let b2 = spec.bound_b().powi(2);
    Ok((0..trace.len())
        .map(|t| {
            let (before, after) = (trace.queue_before(t), trace.queue_after(t));
            let dl: f64 = 0.5
                * before
                    .iter()
                    .zip(after)
                    .map(|(x, y)| (y - x) * (y + x))
                    .sum::<f64>();
            let lhs = dl + v * trace.cost(t);
            let rhs = b2 + g_si(spec, trace.state(t), before, v).value;
            DriftRecord { lhs, rhs }
        })
        .collect())
}

/// Checks the drift inequality on every slot. Traces from a QLA controller
/// must use the same `V`; other traces are checked as given and may fail.
pub fn check_drift(trace: &Trace, spec: &NetworkSpec, v: f64) -> Result<DriftCheck> {
    if let Some(tv) = trace.v() {
        if tv != v {
            return Err(Error::TraceMismatch(format!(
                "trace was produced with V = {tv}, checked with V = {v}"
            )));
        }
    }
    let records = drift_records(trace, spec, v)?;
    let mut violations = 0;
    let mut first = None;
    let mut max_excess = f64::NEG_INFINITY;
    for (t, r) in records.iter().enumerate() {
        max_excess = max_excess.max(r.lhs - r.rhs);
        if !r.holds() {
            violations += 1;
            first.get_or_insert(t);
        }
    }
    Ok(DriftCheck {
        slots: records.len(),
        records,
        violations,
        first_violation: first,
        max_excess,
    })
}

/// Slots `[start, end)` between consecutive visits to the reference state.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RenewalCycle {
    pub start: usize,
    pub end: usize,
    /// Visits to each state inside the cycle, counting the start slot.
    pub visits: Vec<u32>,
}

impl RenewalCycle {
    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end == self.start
    }
}

/// Sample mean and its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub mean: f64,
    pub se: f64,
}

impl Estimate {
    pub fn from_samples(xs: impl IntoIterator<Item = f64>) -> Self {
        let xs: Vec<f64> = xs.into_iter().collect();
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let se = if xs.len() > 1 {
            let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
            (var / n).sqrt()
        } else {
            0.0
        };
        Self { mean, se }
    }

    /// `|mean - expected| <= z * se`, with a rounding allowance when `se = 0`.
    pub fn agrees_with(&self, expected: f64, z: f64) -> bool {
        (self.mean - expected).abs() <= z * self.se + 1e-12 * (1.0 + expected.abs())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RenewalSummary {
    pub reference_state: usize,
    pub cycles: usize,
    pub length: Estimate,
    pub squared_length: Estimate,
    /// Per-state mean visit count per cycle.
    pub visits: Vec<Estimate>,
}

/// Splits `[first visit, last visit)` of the reference state into cycles.
pub fn renewal_decompose(
    states: &[usize],
    num_states: usize,
    reference_state: usize,
) -> Result<(Vec<RenewalCycle>, RenewalSummary)> {
    let hits: Vec<usize> = states
        .iter()
        .enumerate()
        .filter_map(|(t, &s)| (s == reference_state).then_some(t))
        .collect();
    if hits.len() < 2 {
        return Err(Error::TooFewVisits { visits: hits.len() });
    }
    let cycles: Vec<RenewalCycle> = hits
        .windows(2)
        .map(|w| {
            let mut visits = vec![0u32; num_states];
            for &s in &states[w[0]..w[1]] {
                visits[s] += 1;
            }
            RenewalCycle {
                start: w[0],
                end: w[1],
                visits,
            }
        })
        .collect();
    let summary = RenewalSummary {
        reference_state,
        cycles: cycles.len(),
        length: Estimate::from_samples(cycles.iter().map(|c| c.len() as f64)),
        squared_length: Estimate::from_samples(cycles.iter().map(|c| (c.len() as f64).powi(2))),
        visits: (0..num_states)
            .map(|i| Estimate::from_samples(cycles.iter().map(|c| c.visits[i] as f64)))
            .collect(),
    };
    Ok((cycles, summary))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StatCheck {
    pub name: String,
    pub estimate: f64,
    pub expected: f64,
    pub se: f64,
    pub passed: bool,
}

impl StatCheck {
    pub fn new(name: impl Into<String>, est: Estimate, expected: f64, z: f64) -> Self {
        Self {
            name: name.into(),
            estimate: est.mean,
            expected,
            se: est.se,
            passed: est.agrees_with(expected, z),
        }
    }
}

/// Compares cycle statistics with `pi_i / pi_ref` occupation means and the
/// exact return moments, within [`RENEWAL_Z`] standard errors. Fewer than
/// 1000 cycles fails outright.
pub fn occupation_checks(summary: &RenewalSummary, pi: &[f64], stats: &ReturnTimeStats) -> Vec<StatCheck> {
    let r = summary.reference_state;
    let mut out = vec![StatCheck {
        name: "cycle_count_at_least_1000".into(),
        estimate: summary.cycles as f64,
        expected: 1000.0,
        se: 0.0,
        passed: summary.cycles >= 1000,
    }];
    out.push(StatCheck::new("mean_cycle_length", summary.length, stats.mean_return, RENEWAL_Z));
    out.push(StatCheck::new(
        "second_moment_cycle_length",
        summary.squared_length,
        stats.second_moment_return,
        RENEWAL_Z,
    ));
    for (i, est) in summary.visits.iter().enumerate() {
        out.push(StatCheck::new(format!("visits_state_{i}"), *est, pi[i] / pi[r], RENEWAL_Z));
    }
    out
}

/// Utility and backlog bounds for one `V`, with optional empirical results.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub v: f64,
    pub b: f64,
    pub eta: f64,
    pub delta_max: f64,
    pub reference_state: String,
    pub reference_choice: String,
    pub t1_mean: f64,
    pub t1_second_moment: f64,
    pub c: f64,
    pub d: f64,
    /// `c / 2`, the constant before it is rounded up in the per-cycle sum.
    pub c_cycle_sum: f64,
    pub f_star_av: f64,
    pub utility_bound: f64,
    pub backlog_bound: f64,
    pub empirical: Option<EmpiricalSummary>,
}

impl BoundReport {
    pub fn utility_formula(&self) -> f64 {
        self.f_star_av + self.c * self.b * self.b / (self.v * self.t1_mean)
    }

    pub fn backlog_formula(&self) -> f64 {
        (self.c * self.b * self.b + self.t1_mean * self.v * self.delta_max) / self.eta
            + self.d * self.b * self.b / 2.0
    }

    /// Bounds restated from the stored components agree bit-for-bit.
    pub fn is_consistent(&self) -> bool {
        self.utility_formula() == self.utility_bound && self.backlog_formula() == self.backlog_bound
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmpiricalSummary {
    pub replications: usize,
    pub horizon: u64,
    pub avg_cost: f64,
    pub cost_se: f64,
    pub avg_backlog: f64,
    pub backlog_se: f64,
    pub utility_margin: f64,
    pub backlog_margin: f64,
    pub utility_violation: bool,
    pub backlog_violation: bool,
}

impl EmpiricalSummary {
    /// Both margins positive by more than [`MARGIN_Z`] standard errors.
    pub fn strictly_within(&self) -> bool {
        self.utility_margin > MARGIN_Z * self.cost_se && self.backlog_margin > MARGIN_Z * self.backlog_se
    }
}

/// Fills the bound formulas for the reference state of `stats`.
pub fn theorem2_bounds(
    spec: &NetworkSpec,
    stats: &ReturnTimeStats,
    eta: f64,
    v: f64,
    f_star_av: f64,
) -> Result<BoundReport> {
    if !(eta.is_finite() && eta > 0.0) {
        return Err(Error::InvalidArgument(format!("eta = {eta} must be positive")));
    }
    if !(v.is_finite() && v > 0.0) {
        return Err(Error::InvalidArgument(format!("V = {v} must be positive")));
    }
    let k = bound_constants(stats);
    let mut report = BoundReport {
        v,
        b: spec.bound_b(),
        eta,
        delta_max: spec.delta_max(),
        reference_state: spec
            .chain()
            .labels()
            .get(stats.reference_state)
            .cloned()
            .unwrap_or_else(|| format!("#{}", stats.reference_state)),
        reference_choice: "given".into(),
        t1_mean: stats.mean_return,
        t1_second_moment: stats.second_moment_return,
        c: k.c,
        d: k.d,
        c_cycle_sum: k.cycle_sum_c(),
        f_star_av,
        utility_bound: 0.0,
        backlog_bound: 0.0,
        empirical: None,
    };
    report.utility_bound = report.utility_formula();
    report.backlog_bound = report.backlog_formula();
    Ok(report)
}

/// Time averages of one simulated run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RunSummary {
    pub v: f64,
    pub seed: u64,
    pub slots: u64,
    pub avg_cost: f64,
    pub avg_backlog: f64,
}

impl RunSummary {
    pub fn of(trace: &Trace) -> Result<Self> {
        let v = trace
            .v()
            .ok_or_else(|| Error::InvalidArgument("bounds apply to QLA traces only".into()))?;
        let acc = trace.metrics();
        let (avg_cost, avg_backlog) = time_averages(&acc)?;
        Ok(Self {
            v,
            seed: trace.seed(),
            slots: acc.slots(),
            avg_cost,
            avg_backlog,
        })
    }
}

pub fn empirical_vs_bounds(traces: &[Trace], skeleton: BoundReport) -> Result<BoundReport> {
    let runs = traces.iter().map(RunSummary::of).collect::<Result<Vec<_>>>()?;
    empirical_from_summaries(&runs, skeleton)
}

/// Averages the per-run time averages across replications and records the
/// margins `bound - empirical`.
pub fn empirical_from_summaries(runs: &[RunSummary], mut report: BoundReport) -> Result<BoundReport> {
    if runs.is_empty() {
        return Err(Error::InvalidArgument("no runs to summarize".into()));
    }
    if let Some(r) = runs.iter().find(|r| r.v != report.v) {
        return Err(Error::InvalidArgument(format!(
            "run with V = {} mixed into report for V = {}",
            r.v, report.v
        )));
    }
    let cost = Estimate::from_samples(runs.iter().map(|r| r.avg_cost));
    let backlog = Estimate::from_samples(runs.iter().map(|r| r.avg_backlog));
    let utility_margin = report.utility_bound - cost.mean;
    let backlog_margin = report.backlog_bound - backlog.mean;
    report.empirical = Some(EmpiricalSummary {
        replications: runs.len(),
        horizon: runs.iter().map(|r| r.slots).min().unwrap_or(0),
        avg_cost: cost.mean,
        cost_se: cost.se,
        avg_backlog: backlog.mean,
        backlog_se: backlog.se,
        utility_margin,
        backlog_margin,
        utility_violation: utility_margin < -MARGIN_Z * cost.se,
        backlog_violation: backlog_margin < -MARGIN_Z * backlog.se,
    });
    Ok(report)
}

/// Backlog at the first visit to the reference state and its `T^2 B^2 / 2`
/// ceiling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Transient {
    pub hit_slot: usize,
    pub lyapunov_at_hit: f64,
    pub bound: f64,
}

pub fn initial_transient(trace: &Trace, reference_state: usize, b: f64) -> Option<Transient> {
    let hit = trace.states().iter().position(|&s| s == reference_state)?;
    let t = hit as f64;
    Some(Transient {
        hit_slot: hit,
        lyapunov_at_hit: trace.lyapunov_before(hit),
        bound: t * t * b * b / 2.0,
    })
}

/// Inputs shared by every point of a `V` sweep.
pub struct SweepSetup<'a> {
    pub spec: &'a NetworkSpec,
    pub process: &'a dyn StateProcess,
    pub stats: &'a ReturnTimeStats,
    pub reference_label: String,
    pub reference_choice: String,
    pub eta: f64,
    pub f_star_av: f64,
    pub start_state: usize,
    pub horizon: usize,
    pub replications: usize,
    pub seed_base: u64,
}

/// Simulates QLA at every `V` with `replications` runs each (seed
/// `seed_base + replication`) and returns one filled report per `V`.
/// Runs execute on the current rayon pool; results do not depend on it.
pub fn sweep(setup: &SweepSetup<'_>, vs: &[f64]) -> Result<Vec<BoundReport>> {
    let jobs: Vec<(usize, u64)> = (0..vs.len())
        .flat_map(|i| (0..setup.replications as u64).map(move |k| (i, k)))
        .collect();
    let runs: Vec<RunSummary> = jobs
        .par_iter()
        .map(|&(i, k)| {
            let policy = Policy::qla(vs[i])?;
            let opts = SimOptions::new(setup.start_state, setup.horizon, setup.seed_base + k);
            let trace = simulate_with(setup.spec, setup.process, &policy, &opts)?;
            RunSummary::of(&trace)
        })
        .collect::<Result<_>>()?;
    vs.iter()
        .enumerate()
        .map(|(i, &v)| {
            let mut skeleton = theorem2_bounds(setup.spec, setup.stats, setup.eta, v, setup.f_star_av)?;
            skeleton.reference_state = setup.reference_label.clone();
            skeleton.reference_choice = setup.reference_choice.clone();
            let mine = &runs[i * setup.replications..(i + 1) * setup.replications];
            empirical_from_summaries(mine, skeleton)
        })
        .collect()
}

/// Ordinary least-squares slope of `ys` on `xs`.
pub fn fit_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::controller::simulate;
    use crate::corpus::{worked_certificate, worked_instance};
    use crate::markov::{return_and_hitting_moments, sample_path, MarkovChainSpec};
    use crate::model::Action;

    #[test]
    fn qla_traces_satisfy_drift() {
        let spec = worked_instance();
        for v in [1.0, 10.0, 100.0] {
            let tr = simulate(&spec, &Policy::qla(v).unwrap(), 0, 100_000, 1).unwrap();
            let chk = check_drift(&tr, &spec, v).unwrap();
            assert!(chk.passed(), "V = {v}: {chk:?}");
            assert_eq!(chk.slots, 100_000);
        }
    }

    #[test]
    fn first_slot_direct_evaluation() {
        let spec = worked_instance();
        let v = 5.0;
        let tr = simulate(&spec, &Policy::qla(v).unwrap(), 0, 1, 1).unwrap();
        let rec = drift_records(&tr, &spec, v).unwrap()[0];
        // q(0) = 0 so QLA idles: L(1) = 1/2, f = 0; g(0) = 0, B^2 = 4.
        assert_eq!(rec.lhs, 0.5);
        assert_eq!(rec.rhs, 4.0);
    }

    /// Large per-slot moves make the quadratic slack in the bound small
    /// enough that a suboptimal action breaks the inequality.
    fn sharp_instance() -> NetworkSpec {
        let chain = MarkovChainSpec::unlabeled(vec![vec![1.0]]).unwrap();
        NetworkSpec::new(
            1,
            chain,
            vec![vec![
                Action::new("drain", 1.0, vec![0.0], vec![10.0]),
                Action::new("fill", 0.0, vec![10.0], vec![0.0]),
            ]],
            10.0,
        )
        .unwrap()
    }

    #[test]
    fn randomized_policy_reports_violations() {
        let spec = sharp_instance();
        let cert = crate::model::SlacknessCertificate {
            weights: vec![vec![(0, 0.75), (1, 0.25)]],
            eta: 2.5,
        };
        let tr = simulate(&spec, &Policy::Randomized(cert), 0, 10_000, 3).unwrap();
        let chk = check_drift(&tr, &spec, 1.0).unwrap();
        assert!(!chk.passed());
        let t = chk.first_violation.unwrap();
        // A violating slot filled the queue while draining was optimal.
        assert_eq!(tr.action(t), 1);
    }

    #[test]
    fn wrong_v_is_a_mismatch() {
        let spec = worked_instance();
        let tr = simulate(&spec, &Policy::qla(2.0).unwrap(), 0, 10, 1).unwrap();
        assert!(matches!(check_drift(&tr, &spec, 3.0), Err(Error::TraceMismatch(_))));
        let other = sharp_instance();
        assert!(matches!(check_drift(&tr, &other, 2.0), Err(Error::TraceMismatch(_))));
    }

    #[test]
    fn renewal_single_state() {
        let (cycles, s) = renewal_decompose(&[0; 50], 1, 0).unwrap();
        assert_eq!(cycles.len(), 49);
        assert!(cycles.iter().all(|c| c.len() == 1 && c.visits == vec![1]));
        assert_eq!(s.length.mean, 1.0);
        assert_eq!(s.visits[0].mean, 1.0);
    }

    #[test]
    fn renewal_needs_two_visits() {
        assert!(matches!(
            renewal_decompose(&[1, 1, 0, 1], 2, 0),
            Err(Error::TooFewVisits { visits: 1 })
        ));
    }

    #[test]
    fn renewal_counts_partition_cycle() {
        let states = [1, 0, 1, 1, 0, 0, 1, 0];
        let (cycles, _) = renewal_decompose(&states, 2, 0).unwrap();
        assert_eq!(cycles.len(), 3);
        for c in &cycles {
            assert_eq!(c.visits.iter().sum::<u32>() as usize, c.len());
            assert_eq!(c.visits[0], 1);
        }
    }

    #[test]
    fn renewal_asymmetric_occupation() {
        let chain = MarkovChainSpec::unlabeled(vec![vec![0.7, 0.3], vec![0.6, 0.4]]).unwrap();
        let path = sample_path(&chain, 0, 300_000, 8);
        let (_, s) = renewal_decompose(&path, 2, 0).unwrap();
        let stats = return_and_hitting_moments(&chain, 0).unwrap();
        let pi = crate::markov::stationary_distribution(&chain).unwrap();
        for c in occupation_checks(&s, pi.probabilities(), &stats) {
            assert!(c.passed, "{c:?}");
        }
        assert!(s.visits[1].agrees_with(0.5, RENEWAL_Z));
    }

    #[test]
    fn worked_bounds() {
        let spec = worked_instance();
        let stats = return_and_hitting_moments(spec.chain(), 0).unwrap();
        for v in [1.0, 16.0, 128.0] {
            let rep = theorem2_bounds(&spec, &stats, 0.5, v, 1.0 / 3.0).unwrap();
            assert_eq!((rep.c, rep.d, rep.b), (2.0, 0.0, 2.0));
            assert!((rep.utility_bound - (1.0 / 3.0 + 8.0 / v)).abs() < 1e-15);
            assert!((rep.backlog_bound - (16.0 + 4.0 * v)).abs() < 1e-12);
            assert!(rep.is_consistent());
        }
        assert!(theorem2_bounds(&spec, &stats, 0.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn bounds_monotone_in_v() {
        let spec = worked_instance();
        let stats = return_and_hitting_moments(spec.chain(), 0).unwrap();
        let reps: Vec<BoundReport> = (0..12)
            .map(|k| theorem2_bounds(&spec, &stats, 0.5, 2f64.powi(k), 1.0 / 3.0).unwrap())
            .collect();
        for w in reps.windows(2) {
            assert!(w[1].utility_bound < w[0].utility_bound);
            assert!(w[1].backlog_bound > w[0].backlog_bound);
        }
        let gap = reps[11].utility_bound - 1.0 / 3.0;
        assert!((gap - 8.0 / 2048.0).abs() < 1e-15);
    }

    #[test]
    fn empirical_within_bounds_worked() {
        let spec = worked_instance();
        let stats = return_and_hitting_moments(spec.chain(), 0).unwrap();
        let v = 16.0;
        let traces: Vec<Trace> = (0..20)
            .map(|s| simulate(&spec, &Policy::qla(v).unwrap(), 0, 100_000, s).unwrap())
            .collect();
        let rep = empirical_vs_bounds(&traces, theorem2_bounds(&spec, &stats, 0.5, v, 1.0 / 3.0).unwrap()).unwrap();
        let e = rep.empirical.unwrap();
        assert!(e.avg_cost <= 1.0 / 3.0 + 0.5);
        assert!(e.avg_backlog <= 80.0);
        assert!(e.strictly_within() || (e.cost_se == 0.0 && e.utility_margin > 0.0 && e.backlog_margin > 0.0));
    }

    #[test]
    fn mixed_v_rejected() {
        let spec = worked_instance();
        let stats = return_and_hitting_moments(spec.chain(), 0).unwrap();
        let traces = vec![
            simulate(&spec, &Policy::qla(2.0).unwrap(), 0, 100, 1).unwrap(),
            simulate(&spec, &Policy::qla(4.0).unwrap(), 0, 100, 1).unwrap(),
        ];
        let sk = theorem2_bounds(&spec, &stats, 0.5, 2.0, 1.0 / 3.0).unwrap();
        assert!(empirical_vs_bounds(&traces, sk).is_err());
    }

    #[test]
    fn zero_cost_spec() {
        let chain = MarkovChainSpec::unlabeled(vec![vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap();
        let table = vec![
            Action::new("serve", 0.0, vec![0.0], vec![1.0]),
            Action::new("admit", 0.0, vec![1.0], vec![0.0]),
        ];
        let spec = NetworkSpec::new(1, chain, vec![table.clone(), table], 1.0).unwrap();
        let stats = return_and_hitting_moments(spec.chain(), 0).unwrap();
        let tr = simulate(&spec, &Policy::qla(4.0).unwrap(), 0, 1000, 1).unwrap();
        let rep = empirical_vs_bounds(&[tr], theorem2_bounds(&spec, &stats, 1.0, 4.0, 0.0).unwrap()).unwrap();
        let e = rep.empirical.unwrap();
        assert_eq!(e.avg_cost, 0.0);
        assert!(e.utility_margin > 0.0);
    }

    #[test]
    fn transient_respects_quadratic_ceiling() {
        let chain = MarkovChainSpec::unlabeled(vec![vec![0.9, 0.1], vec![0.05, 0.95]]).unwrap();
        let table = worked_instance().actions(0).to_vec();
        let spec = NetworkSpec::new(1, chain, vec![table.clone(), table], 2.0).unwrap();
        for seed in 0..50 {
            let tr = simulate(&spec, &Policy::qla(50.0).unwrap(), 1, 2000, seed).unwrap();
            if let Some(t) = initial_transient(&tr, 0, spec.bound_b()) {
                assert!(t.lyapunov_at_hit <= t.bound);
            }
        }
        let _ = worked_certificate();
    }

    #[test]
    fn slope_of_line() {
        assert!((fit_slope(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0]) - 2.0).abs() < 1e-15);
    }
}
