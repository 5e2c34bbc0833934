//! The QLA/MaxWeight per-slot rule, the stationary randomized baseline, and
//! the simulation loop that drives either one over a network-state path.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::markov::StateProcess;
use crate::model::{Action, NetworkSpec, SlacknessCertificate};
use crate::queues::{lyapunov_of, MetricsAccumulator, QueueVector};
use crate::rng::{SlotRng, POLICY_STREAM};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum TieBreak {
    /// Among equal objectives, the action listed first wins.
    LowestIndex,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ControllerConfig {
    pub v: f64,
    pub tie_break: TieBreak,
}

impl ControllerConfig {
    pub fn new(v: f64) -> Result<Self> {
        if !(v.is_finite() && v >= 1.0) {
            return Err(Error::InvalidArgument(format!("V = {v} must be at least 1")));
        }
        Ok(Self {
            v,
            tie_break: TieBreak::LowestIndex,
        })
    }
}

/// `-V f(s, x) + sum_j q_j (mu_j - A_j)`.
pub fn qla_objective(action: &Action, q: &[f64], v: f64) -> f64 {
    let mut obj = -v * action.cost;
    for (j, &qj) in q.iter().enumerate() {
        obj += qj * (action.services[j] - action.arrivals[j]);
    }
    obj
}

/// Index of the action maximizing the QLA objective in `state`; the lowest
/// index wins ties.
pub fn qla_decide(spec: &NetworkSpec, state: usize, q: &[f64], v: f64) -> usize {
    let actions = spec.actions(state);
    let mut best = 0;
    let mut best_obj = qla_objective(&actions[0], q, v);
    for (k, a) in actions.iter().enumerate().skip(1) {
        let obj = qla_objective(a, q, v);
        if obj > best_obj {
            best = k;
            best_obj = obj;
        }
    }
    best
}

/// Every action attaining the maximal QLA objective, in index order.
pub fn qla_argmax_set(spec: &NetworkSpec, state: usize, q: &[f64], v: f64) -> Vec<usize> {
    let objs: Vec<f64> = spec
        .actions(state)
        .iter()
        .map(|a| qla_objective(a, q, v))
        .collect();
    let max = objs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (0..objs.len()).filter(|&k| objs[k] == max).collect()
}

/// Samples an action for `state` from the certificate's mixture.
pub fn randomized_decide(cert: &SlacknessCertificate, state: usize, rng: &mut SlotRng) -> usize {
    let entries = &cert.weights[state];
    let probs: Vec<f64> = entries.iter().map(|&(_, p)| p).collect();
    entries[rng.categorical(&probs)].0
}

#[derive(Debug, Clone, PartialEq)]
pub enum Policy {
    Qla(ControllerConfig),
    Randomized(SlacknessCertificate),
}

impl Policy {
    pub fn qla(v: f64) -> Result<Self> {
        Ok(Policy::Qla(ControllerConfig::new(v)?))
    }

    pub fn v(&self) -> Option<f64> {
        match self {
            Policy::Qla(c) => Some(c.v),
            Policy::Randomized(_) => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Policy::Qla(_) => "qla",
            Policy::Randomized(_) => "randomized",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimOptions {
    pub start_state: usize,
    pub horizon: usize,
    pub seed: u64,
    /// Starting backlog; `None` means `q(0) = 0`.
    pub initial_queue: Option<QueueVector>,
}

impl SimOptions {
    pub fn new(start_state: usize, horizon: usize, seed: u64) -> Self {
        Self {
            start_state,
            horizon,
            seed,
            initial_queue: None,
        }
    }
}

/// A realized sample path. Row `t` holds the state observed at slot `t`, the
/// action taken, its cost, arrivals and services, and the backlog and
/// Lyapunov value after the slot's update, i.e. `q(t+1)` and `L(t+1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    queues: usize,
    policy: &'static str,
    v: Option<f64>,
    seed: u64,
    start_state: usize,
    initial: Vec<f64>,
    states: Vec<usize>,
    actions: Vec<usize>,
    costs: Vec<f64>,
    arrivals: Vec<f64>,
    services: Vec<f64>,
    backlog: Vec<f64>,
    lyapunov: Vec<f64>,
}

impl Trace {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn queues(&self) -> usize {
        self.queues
    }

    pub fn policy_name(&self) -> &'static str {
        self.policy
    }

    /// V of the QLA controller that produced the trace.
    pub fn v(&self) -> Option<f64> {
        self.v
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn start_state(&self) -> usize {
        self.start_state
    }

    pub fn states(&self) -> &[usize] {
        &self.states
    }

    pub fn state(&self, t: usize) -> usize {
        self.states[t]
    }

    pub fn action(&self, t: usize) -> usize {
        self.actions[t]
    }

    pub fn cost(&self, t: usize) -> f64 {
        self.costs[t]
    }

    pub fn arrivals(&self, t: usize) -> &[f64] {
        &self.arrivals[t * self.queues..(t + 1) * self.queues]
    }

    pub fn services(&self, t: usize) -> &[f64] {
        &self.services[t * self.queues..(t + 1) * self.queues]
    }

    /// `q(t)`, the backlog seen by the decision at slot `t`.
    pub fn queue_before(&self, t: usize) -> &[f64] {
        if t == 0 {
            &self.initial
        } else {
            self.queue_after(t - 1)
        }
    }

    /// `q(t+1)`.
    pub fn queue_after(&self, t: usize) -> &[f64] {
        &self.backlog[t * self.queues..(t + 1) * self.queues]
    }

    pub fn lyapunov_before(&self, t: usize) -> f64 {
        if t == 0 {
            lyapunov_of(&self.initial)
        } else {
            self.lyapunov[t - 1]
        }
    }

    pub fn lyapunov_after(&self, t: usize) -> f64 {
        self.lyapunov[t]
    }

    /// Accumulates cost and backlog `q(t)` over the slots of the trace.
    pub fn metrics(&self) -> MetricsAccumulator {
        let mut acc = MetricsAccumulator::new();
        for t in 0..self.len() {
            acc.record(self.costs[t], self.queue_before(t));
        }
        acc
    }

    /// Re-derives every backlog row from the recorded arrivals and services
    /// and reports the first slot whose stored row disagrees.
    pub fn replay_mismatch(&self) -> Option<usize> {
        let mut q = self.initial.clone();
        for t in 0..self.len() {
            let (a, mu) = (self.arrivals(t), self.services(t));
            for j in 0..self.queues {
                q[j] = (q[j] - mu[j]).max(0.0) + a[j];
            }
            if q.as_slice() != self.queue_after(t) || lyapunov_of(&q) != self.lyapunov[t] {
                return Some(t);
            }
        }
        None
    }
}

/// Runs `policy` over the spec's own chain.
pub fn simulate(
    spec: &NetworkSpec,
    policy: &Policy,
    start_state: usize,
    horizon: usize,
    seed: u64,
) -> Result<Trace> {
    simulate_with(spec, spec.chain(), policy, &SimOptions::new(start_state, horizon, seed))
}

/// Runs `policy` with states drawn from `process`: each slot observe S(t),
/// decide using q(t), record, then update the queues.
pub fn simulate_with(
    spec: &NetworkSpec,
    process: &dyn StateProcess,
    policy: &Policy,
    opts: &SimOptions,
) -> Result<Trace> {
    if opts.horizon == 0 {
        return Err(Error::InvalidArgument("horizon must be at least 1".into()));
    }
    if process.num_states() != spec.num_states() {
        return Err(Error::Shape {
            what: "state process",
            got: process.num_states(),
            expected: spec.num_states(),
        });
    }
    if opts.start_state >= spec.num_states() {
        return Err(Error::Index {
            what: "start state",
            index: opts.start_state,
            len: spec.num_states(),
        });
    }
    let r = spec.queues();
    let initial = match &opts.initial_queue {
        Some(q) if q.len() != r => {
            return Err(Error::Shape {
                what: "initial queue",
                got: q.len(),
                expected: r,
            })
        }
        Some(q) => q.as_slice().to_vec(),
        None => vec![0.0; r],
    };
    if let Policy::Randomized(cert) = policy {
        crate::model::verify_slackness(spec, cert)?;
    }

    let n = opts.horizon;
    let path = process.sample_path(opts.start_state, n, opts.seed);
    let mut rng = SlotRng::with_stream(opts.seed, POLICY_STREAM);
    let mut trace = Trace {
        queues: r,
        policy: policy.name(),
        v: policy.v(),
        seed: opts.seed,
        start_state: opts.start_state,
        initial: initial.clone(),
        states: Vec::with_capacity(n),
        actions: Vec::with_capacity(n),
        costs: Vec::with_capacity(n),
        arrivals: Vec::with_capacity(n * r),
        services: Vec::with_capacity(n * r),
        backlog: Vec::with_capacity(n * r),
        lyapunov: Vec::with_capacity(n),
    };

    let mut q = initial;
    for &s in &path {
        let k = match policy {
            Policy::Qla(cfg) => qla_decide(spec, s, &q, cfg.v),
            Policy::Randomized(cert) => randomized_decide(cert, s, &mut rng),
        };
        let a = spec.action(s, k);
        trace.states.push(s);
        trace.actions.push(k);
        trace.costs.push(a.cost);
        trace.arrivals.extend_from_slice(&a.arrivals);
        trace.services.extend_from_slice(&a.services);
        for j in 0..r {
            q[j] = (q[j] - a.services[j]).max(0.0) + a.arrivals[j];
        }
        trace.backlog.extend_from_slice(&q);
        trace.lyapunov.push(lyapunov_of(&q));
    }
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{worked_certificate, worked_instance};
    use crate::markov::MarkovChainSpec;
    use crate::queues::time_averages;

    #[test]
    fn decide_examples() {
        let spec = worked_instance();
        // x1: -1 + 2 = 1, x2: 0 - 1 = -1.
        assert_eq!(qla_decide(&spec, 0, &[1.0], 1.0), 0);
        // x1: -1, x2: 0.
        assert_eq!(qla_decide(&spec, 0, &[0.0], 1.0), 1);
    }

    #[test]
    fn single_action_forced() {
        let chain = MarkovChainSpec::unlabeled(vec![vec![1.0]]).unwrap();
        let spec = NetworkSpec::new(
            1,
            chain,
            vec![vec![Action::new("only", 1.0, vec![1.0], vec![0.0])]],
            1.0,
        )
        .unwrap();
        for q in [0.0, 5.0, 1e6] {
            for v in [1.0, 100.0] {
                assert_eq!(qla_decide(&spec, 0, &[q], v), 0);
            }
        }
    }

    #[test]
    fn ties_go_to_lowest_index() {
        let spec = worked_instance();
        // At q = V/3 both objectives equal -V/3... for V = 3, q = 1: x1 = -3 + 2 = -1, x2 = -1.
        assert_eq!(qla_argmax_set(&spec, 0, &[1.0], 3.0), vec![0, 1]);
        assert_eq!(qla_decide(&spec, 0, &[1.0], 3.0), 0);
    }

    #[test]
    fn config_rejects_small_v() {
        assert!(ControllerConfig::new(0.5).is_err());
        assert!(ControllerConfig::new(1.0).is_ok());
    }

    #[test]
    fn horizon_zero_rejected() {
        let spec = worked_instance();
        assert!(simulate(&spec, &Policy::qla(1.0).unwrap(), 0, 0, 1).is_err());
    }

    #[test]
    fn one_slot_from_empty_queue_takes_min_cost() {
        let spec = worked_instance();
        let tr = simulate(&spec, &Policy::qla(10.0).unwrap(), 0, 1, 1).unwrap();
        assert_eq!(tr.action(0), 1);
        assert_eq!(tr.queue_after(0), &[1.0]);
    }

    #[test]
    fn crossover_at_v_over_three() {
        // x1 overtakes x2 once -V + 2q >= -q, i.e. q >= V/3.
        let spec = worked_instance();
        let v = 3.0;
        let tr = simulate(&spec, &Policy::qla(v).unwrap(), 0, 200, 1).unwrap();
        for t in 0..tr.len() {
            let q = tr.queue_before(t)[0];
            let expected = if q >= v / 3.0 { 0 } else { 1 };
            assert_eq!(tr.action(t), expected, "slot {t}, q = {q}");
        }
        let peak = (0..tr.len()).map(|t| tr.queue_after(t)[0]).fold(0.0, f64::max);
        assert!(peak <= v / 3.0 + 1.0);
    }

    #[test]
    fn trace_replays_exactly() {
        let spec = worked_instance();
        let tr = simulate(&spec, &Policy::qla(7.0).unwrap(), 0, 1000, 3).unwrap();
        assert_eq!(tr.replay_mismatch(), None);
    }

    #[test]
    fn averages_reproduced_bit_exactly() {
        let spec = worked_instance();
        let p = Policy::qla(10.0).unwrap();
        let a = time_averages(&simulate(&spec, &p, 0, 100_000, 11).unwrap().metrics()).unwrap();
        let b = time_averages(&simulate(&spec, &p, 0, 100_000, 11).unwrap().metrics()).unwrap();
        assert_eq!(a.0.to_bits(), b.0.to_bits());
        assert_eq!(a.1.to_bits(), b.1.to_bits());
    }

    #[test]
    fn randomized_point_mass() {
        let cert = SlacknessCertificate {
            weights: vec![vec![(0, 1.0), (1, 0.0)]],
            eta: 0.5,
        };
        let mut rng = SlotRng::new(3);
        for _ in 0..1000 {
            assert_eq!(randomized_decide(&cert, 0, &mut rng), 0);
        }
    }

    #[test]
    fn randomized_frequency_and_determinism() {
        let cert = worked_certificate();
        let n = 1_000_000;
        let mut rng = SlotRng::with_stream(21, POLICY_STREAM);
        let draws: Vec<usize> = (0..n).map(|_| randomized_decide(&cert, 0, &mut rng)).collect();
        let freq = draws.iter().filter(|&&k| k == 0).count() as f64 / n as f64;
        assert!((freq - 0.5).abs() < 0.002, "{freq}");
        let mut again = SlotRng::with_stream(21, POLICY_STREAM);
        assert!(draws[..1000]
            .iter()
            .all(|&k| k == randomized_decide(&cert, 0, &mut again)));
        let mut other = SlotRng::with_stream(22, POLICY_STREAM);
        let other_draws: Vec<usize> = (0..1000).map(|_| randomized_decide(&cert, 0, &mut other)).collect();
        assert_ne!(&draws[..1000], other_draws.as_slice());
    }

    #[test]
    fn randomized_policy_is_stable() {
        let spec = worked_instance();
        let n = 1_000_000;
        let tr = simulate(&spec, &Policy::Randomized(worked_certificate()), 0, n, 5).unwrap();
        // Least-squares slope of total backlog over the second half of the run.
        let half = n / 2;
        let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
        for t in half..n {
            let x = t as f64;
            let y = tr.queue_after(t)[0];
            sx += x;
            sy += y;
            sxx += x * x;
            sxy += x * y;
        }
        let m = (n - half) as f64;
        let slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
        assert!(slope.abs() < 1e-3, "slope {slope}");
    }

    #[test]
    fn nonzero_initial_queue() {
        let spec = worked_instance();
        let mut opts = SimOptions::new(0, 10, 1);
        opts.initial_queue = Some(QueueVector::new(vec![9.0]).unwrap());
        let tr = simulate_with(&spec, spec.chain(), &Policy::qla(3.0).unwrap(), &opts).unwrap();
        assert_eq!(tr.queue_before(0), &[9.0]);
        assert_eq!(tr.queue_after(0), &[7.0]);
        assert_eq!(tr.replay_mismatch(), None);
    }
}
