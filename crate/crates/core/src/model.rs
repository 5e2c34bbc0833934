//! Network instances: queues, per-state finite action tables and the
//! structural checks (boundedness, shapes, slackness).

use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::markov::{stationary_distribution, ChainViolation, MarkovChainSpec, StationaryDistribution};

/// Tolerance used when accepting a claimed slack.
pub const SLACK_TOL: f64 = 1e-10;
/// Tolerance on a certificate's per-state probability sum.
pub const PROB_SUM_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Action {
    pub label: String,
    pub cost: f64,
    pub arrivals: Vec<f64>,
    pub services: Vec<f64>,
}

impl Action {
    pub fn new(label: impl Into<String>, cost: f64, arrivals: Vec<f64>, services: Vec<f64>) -> Self {
        Self {
            label: label.into(),
            cost,
            arrivals,
            services,
        }
    }

    /// Net arrivals `A_j - mu_j` for queue `j`.
    pub fn net(&self, j: usize) -> f64 {
        self.arrivals[j] - self.services[j]
    }

    pub fn net_vector(&self) -> Vec<f64> {
        (0..self.arrivals.len()).map(|j| self.net(j)).collect()
    }
}

/// Unvalidated instance description, as read from disk or built in code.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkDraft {
    pub queues: usize,
    pub states: Vec<String>,
    pub transition: Vec<Vec<f64>>,
    pub delta_max: f64,
    pub actions: Vec<Vec<Action>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Field {
    Cost,
    Arrival(usize),
    Service(usize),
}

impl fmt::Display for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Field::Cost => write!(f, "cost"),
            Field::Arrival(j) => write!(f, "arrivals[{j}]"),
            Field::Service(j) => write!(f, "services[{j}]"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Violation {
    Chain(ChainViolation),
    QueueCount,
    DeltaMax(f64),
    ActionTableCount { tables: usize, states: usize },
    NoActions { state: String },
    VectorLength {
        state: String,
        action: String,
        vector: &'static str,
        len: usize,
        expected: usize,
    },
    OutOfBounds {
        state: String,
        action: String,
        field: Field,
        value: f64,
        delta_max: f64,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Chain(c) => write!(f, "{c}"),
            Violation::QueueCount => write!(f, "queue count r must be at least 1"),
            Violation::DeltaMax(d) => write!(f, "delta_max = {d} must be finite and positive"),
            Violation::ActionTableCount { tables, states } => {
                write!(f, "{tables} action tables for {states} states")
            }
            Violation::NoActions { state } => write!(f, "state '{state}' has no actions"),
            Violation::VectorLength {
                state,
                action,
                vector,
                len,
                expected,
            } => write!(
                f,
                "state '{state}', action '{action}': {vector} has length {len}, expected {expected}"
            ),
            Violation::OutOfBounds {
                state,
                action,
                field,
                value,
                delta_max,
            } => write!(
                f,
                "state '{state}', action '{action}': {field} = {value} is outside [0, {delta_max}]"
            ),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks every structural invariant of a draft and lists each violation with
/// its state/action coordinates.
pub fn validate_spec(draft: &NetworkDraft) -> ValidationReport {
    let mut v: Vec<Violation> = MarkovChainSpec::check(&draft.states, &draft.transition)
        .into_iter()
        .map(Violation::Chain)
        .collect();
    if draft.queues == 0 {
        v.push(Violation::QueueCount);
    }
    let dmax = draft.delta_max;
    if !(dmax.is_finite() && dmax > 0.0) {
        v.push(Violation::DeltaMax(dmax));
    }
    if draft.actions.len() != draft.states.len() {
        v.push(Violation::ActionTableCount {
            tables: draft.actions.len(),
            states: draft.states.len(),
        });
    }
    let in_bounds = |x: f64| x.is_finite() && (0.0..=dmax).contains(&x);
    for (i, table) in draft.actions.iter().enumerate() {
        let state = draft
            .states
            .get(i)
            .cloned()
            .unwrap_or_else(|| format!("#{i}"));
        if table.is_empty() {
            v.push(Violation::NoActions {
                state: state.clone(),
            });
        }
        for a in table {
            for (vector, xs) in [("arrivals", &a.arrivals), ("services", &a.services)] {
                if xs.len() != draft.queues {
                    v.push(Violation::VectorLength {
                        state: state.clone(),
                        action: a.label.clone(),
                        vector,
                        len: xs.len(),
                        expected: draft.queues,
                    });
                }
            }
            let mut fields = vec![(Field::Cost, a.cost)];
            fields.extend(a.arrivals.iter().enumerate().map(|(j, &x)| (Field::Arrival(j), x)));
            fields.extend(a.services.iter().enumerate().map(|(j, &x)| (Field::Service(j), x)));
            for (field, value) in fields {
                if !in_bounds(value) {
                    v.push(Violation::OutOfBounds {
                        state: state.clone(),
                        action: a.label.clone(),
                        field,
                        value,
                        delta_max: dmax,
                    });
                }
            }
        }
    }
    ValidationReport { violations: v }
}

/// Validated, immutable network instance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NetworkSpec {
    queues: usize,
    chain: MarkovChainSpec,
    actions: Vec<Vec<Action>>,
    delta_max: f64,
    stationary: StationaryDistribution,
}

impl NetworkSpec {
    pub fn from_draft(draft: NetworkDraft) -> Result<Self> {
        let report = validate_spec(&draft);
        if !report.is_valid() {
            return Err(Error::InvalidSpec(report.violations));
        }
        let chain = MarkovChainSpec::new(draft.states, draft.transition)?;
        let stationary = stationary_distribution(&chain)?;
        Ok(Self {
            queues: draft.queues,
            chain,
            actions: draft.actions,
            delta_max: draft.delta_max,
            stationary,
        })
    }

    pub fn new(
        queues: usize,
        chain: MarkovChainSpec,
        actions: Vec<Vec<Action>>,
        delta_max: f64,
    ) -> Result<Self> {
        Self::from_draft(NetworkDraft {
            queues,
            states: chain.labels().to_vec(),
            transition: chain.transition().to_vec(),
            delta_max,
            actions,
        })
    }

    pub fn queues(&self) -> usize {
        self.queues
    }

    pub fn num_states(&self) -> usize {
        self.chain.len()
    }

    pub fn chain(&self) -> &MarkovChainSpec {
        &self.chain
    }

    pub fn stationary(&self) -> &StationaryDistribution {
        &self.stationary
    }

    pub fn pi(&self, state: usize) -> f64 {
        self.stationary.get(state)
    }

    pub fn delta_max(&self) -> f64 {
        self.delta_max
    }

    pub fn actions(&self, state: usize) -> &[Action] {
        &self.actions[state]
    }

    pub fn action(&self, state: usize, index: usize) -> &Action {
        &self.actions[state][index]
    }

    pub fn action_index(&self, state: usize, label: &str) -> Option<usize> {
        self.actions[state].iter().position(|a| a.label == label)
    }

    /// `B = sqrt(r) * delta_max`, the bound on `|A(t) - mu(t)|`.
    pub fn bound_b(&self) -> f64 {
        compute_b(self)
    }

    /// Largest Euclidean norm of `A - mu` over every state and action.
    pub fn max_net_norm(&self) -> f64 {
        self.actions
            .iter()
            .flatten()
            .map(|a| a.net_vector().iter().map(|x| x * x).sum::<f64>().sqrt())
            .fold(0.0, f64::max)
    }

    /// `V * sum_i pi_i min_x f(s_i, x)`.
    pub fn min_cost_average(&self, v: f64) -> f64 {
        (0..self.num_states())
            .map(|i| {
                let m = self.actions[i]
                    .iter()
                    .map(|a| a.cost)
                    .fold(f64::INFINITY, f64::min);
                self.pi(i) * v * m
            })
            .sum()
    }
}

pub fn compute_b(spec: &NetworkSpec) -> f64 {
    let b = (spec.queues as f64).sqrt() * spec.delta_max;
    debug_assert!(spec.max_net_norm() <= b * (1.0 + 1e-15));
    b
}

/// Per-state mixture over actions with a claimed slack `eta`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SlacknessCertificate {
    /// `weights[i]` lists `(action index, probability)` pairs for state `i`.
    pub weights: Vec<Vec<(usize, f64)>>,
    pub eta: f64,
}

impl SlacknessCertificate {
    /// Expected net arrivals `sum_i pi_i sum_k theta_k (A_j - mu_j)` per queue.
    pub fn net_drift(&self, spec: &NetworkSpec) -> Vec<f64> {
        let mut drift = vec![0.0; spec.queues()];
        for (i, entries) in self.weights.iter().enumerate() {
            for &(k, prob) in entries {
                let a = spec.action(i, k);
                for (j, d) in drift.iter_mut().enumerate() {
                    *d += spec.pi(i) * prob * a.net(j);
                }
            }
        }
        drift
    }

    fn check_shape(&self, spec: &NetworkSpec) -> Result<()> {
        if self.weights.len() != spec.num_states() {
            return Err(Error::InvalidCertificate(format!(
                "{} state entries for {} states",
                self.weights.len(),
                spec.num_states()
            )));
        }
        if !(self.eta.is_finite() && self.eta > 0.0) {
            return Err(Error::InvalidCertificate(format!(
                "eta = {} must be positive",
                self.eta
            )));
        }
        let cap = spec.queues() + 2;
        for (i, entries) in self.weights.iter().enumerate() {
            let label = &spec.chain().labels()[i];
            if entries.is_empty() || entries.len() > cap {
                return Err(Error::InvalidCertificate(format!(
                    "state '{label}' has {} entries; between 1 and {cap} are allowed",
                    entries.len()
                )));
            }
            let mut total = 0.0;
            for &(k, prob) in entries {
                if k >= spec.actions(i).len() {
                    return Err(Error::InvalidCertificate(format!(
                        "state '{label}' references action {k} of {}",
                        spec.actions(i).len()
                    )));
                }
                if !(prob.is_finite() && prob >= 0.0) {
                    return Err(Error::InvalidCertificate(format!(
                        "state '{label}' has probability {prob}"
                    )));
                }
                total += prob;
            }
            if (total - 1.0).abs() > PROB_SUM_TOL {
                return Err(Error::InvalidCertificate(format!(
                    "state '{label}' probabilities sum to {total}"
                )));
            }
        }
        Ok(())
    }
}

/// Evaluates the slackness condition and returns the largest slack `eta'`
/// with every queue's expected net arrival `<= -eta'`. Accepts when
/// `eta' >= cert.eta - 1e-10`.
pub fn verify_slackness(spec: &NetworkSpec, cert: &SlacknessCertificate) -> Result<f64> {
    cert.check_shape(spec)?;
    let drift = cert.net_drift(spec);
    let (worst, &max_drift) = drift
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .expect("at least one queue");
    let achieved = -max_drift;
    if achieved < cert.eta - SLACK_TOL {
        return Err(Error::SlacknessViolated {
            queue: worst,
            achieved,
            claimed: cert.eta,
        });
    }
    Ok(achieved)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{worked_certificate, worked_instance};

    fn worked_draft() -> NetworkDraft {
        NetworkDraft {
            queues: 1,
            states: vec!["s1".into()],
            transition: vec![vec![1.0]],
            delta_max: 2.0,
            actions: vec![vec![
                Action::new("x1", 1.0, vec![0.0], vec![2.0]),
                Action::new("x2", 0.0, vec![1.0], vec![0.0]),
            ]],
        }
    }

    #[test]
    fn b_formula() {
        let spec = worked_instance();
        assert_eq!(compute_b(&spec), 2.0);
        assert!(spec.max_net_norm() <= 2.0);
        let chain = MarkovChainSpec::unlabeled(vec![vec![1.0]]).unwrap();
        let one = NetworkSpec::new(1, chain.clone(), vec![vec![Action::new("a", 0.0, vec![1.0], vec![0.0])]], 1.0).unwrap();
        assert_eq!(compute_b(&one), 1.0);
        let four = NetworkSpec::new(
            4,
            chain,
            vec![vec![Action::new("a", 0.0, vec![2.0; 4], vec![0.0; 4])]],
            2.0,
        )
        .unwrap();
        assert_eq!(compute_b(&four), 4.0);
        assert_eq!(four.max_net_norm(), 4.0);
    }

    #[test]
    fn worked_draft_is_valid() {
        assert!(validate_spec(&worked_draft()).is_valid());
    }

    #[test]
    fn oversize_arrival_reported_at_coordinate() {
        let mut d = worked_draft();
        d.actions[0][1].arrivals[0] = 3.0;
        let r = validate_spec(&d);
        assert_eq!(
            r.violations,
            vec![Violation::OutOfBounds {
                state: "s1".into(),
                action: "x2".into(),
                field: Field::Arrival(0),
                value: 3.0,
                delta_max: 2.0,
            }]
        );
    }

    #[test]
    fn wrong_length_reported() {
        let mut d = worked_draft();
        d.actions[0][0].arrivals = vec![0.0, 0.0];
        let r = validate_spec(&d);
        assert_eq!(r.violations.len(), 1);
        assert!(matches!(
            &r.violations[0],
            Violation::VectorLength { vector: "arrivals", len: 2, expected: 1, .. }
        ));
    }

    #[test]
    fn every_violation_is_listed() {
        let mut d = worked_draft();
        d.actions[0][0].cost = -1.0;
        d.actions[0][1].services = vec![];
        d.transition = vec![vec![0.9]];
        let r = validate_spec(&d);
        assert_eq!(r.violations.len(), 3, "{:?}", r.violations);
    }

    #[test]
    fn slackness_half() {
        let spec = worked_instance();
        let eta = verify_slackness(&spec, &worked_certificate()).unwrap();
        assert!((eta - 0.5).abs() < 1e-15);
    }

    #[test]
    fn slackness_all_mass_on_idle_fails() {
        let spec = worked_instance();
        let cert = SlacknessCertificate {
            weights: vec![vec![(1, 1.0)]],
            eta: 0.5,
        };
        match verify_slackness(&spec, &cert) {
            Err(Error::SlacknessViolated { queue: 0, achieved, .. }) => assert_eq!(achieved, -1.0),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn zero_net_action_has_no_slack() {
        let chain = MarkovChainSpec::unlabeled(vec![vec![1.0]]).unwrap();
        let spec = NetworkSpec::new(1, chain, vec![vec![Action::new("idle", 0.0, vec![0.0], vec![0.0])]], 1.0)
            .unwrap();
        let cert = SlacknessCertificate {
            weights: vec![vec![(0, 1.0)]],
            eta: 1e-3,
        };
        assert!(matches!(
            verify_slackness(&spec, &cert),
            Err(Error::SlacknessViolated { achieved, .. }) if achieved == 0.0
        ));
    }

    #[test]
    fn slackness_monotone_in_claim() {
        let spec = worked_instance();
        let mut cert = worked_certificate();
        for eta in [0.5, 0.4, 0.1, 1e-6] {
            cert.eta = eta;
            assert!(verify_slackness(&spec, &cert).is_ok());
        }
        cert.eta = 0.6;
        assert!(verify_slackness(&spec, &cert).is_err());
    }

    #[test]
    fn malformed_certificates_rejected() {
        let spec = worked_instance();
        let bad_sum = SlacknessCertificate {
            weights: vec![vec![(0, 0.5), (1, 0.4)]],
            eta: 0.1,
        };
        assert!(matches!(verify_slackness(&spec, &bad_sum), Err(Error::InvalidCertificate(_))));
        let bad_index = SlacknessCertificate {
            weights: vec![vec![(5, 1.0)]],
            eta: 0.1,
        };
        assert!(matches!(verify_slackness(&spec, &bad_index), Err(Error::InvalidCertificate(_))));
        let too_many = SlacknessCertificate {
            weights: vec![vec![(0, 0.25); 4]],
            eta: 0.1,
        };
        assert!(matches!(verify_slackness(&spec, &too_many), Err(Error::InvalidCertificate(_))));
        // Repeats within the cap are fine.
        let repeats = SlacknessCertificate {
            weights: vec![vec![(0, 0.25), (0, 0.25), (1, 0.5)]],
            eta: 0.5,
        };
        assert!(verify_slackness(&spec, &repeats).is_ok());
    }
}
