//! Instances used by the tests, the acceptance suite and the CLI examples.

use crate::dual::suggest_certificate;
use crate::markov::MarkovChainSpec;
use crate::model::{verify_slackness, Action, NetworkSpec, SlacknessCertificate};
use crate::rng::SlotRng;

/// Single state, one queue, `delta_max = 2`: `x1` serves two packets at cost 1,
/// `x2` admits one packet for free.
pub fn worked_instance() -> NetworkSpec {
    let chain = MarkovChainSpec::new(vec!["s1".into()], vec![vec![1.0]]).expect("valid chain");
    NetworkSpec::new(
        1,
        chain,
        vec![vec![
            Action::new("x1", 1.0, vec![0.0], vec![2.0]),
            Action::new("x2", 0.0, vec![1.0], vec![0.0]),
        ]],
        2.0,
    )
    .expect("valid worked instance")
}

/// Even split between the two actions of the worked instance; slack 1/2.
pub fn worked_certificate() -> SlacknessCertificate {
    SlacknessCertificate {
        weights: vec![vec![(0, 0.5), (1, 0.5)]],
        eta: 0.5,
    }
}

/// Size limits of [`random_instance`].
pub const MAX_STATES: usize = 4;
pub const MAX_QUEUES: usize = 3;
pub const MAX_ACTIONS: usize = 5;

/// Seeded random instance with at most 4 states, 3 queues and 5 actions per
/// state, `delta_max = 1`, plus the maximum-slack certificate for it.
///
/// Every state carries one "serve" action that drains each queue faster than
/// it fills it, so positive slack always exists. Transition rows have every
/// entry positive, making the chain irreducible and aperiodic.
pub fn random_instance(seed: u64) -> (NetworkSpec, SlacknessCertificate) {
    let mut rng = SlotRng::with_stream(seed, 0x5eed);
    let m = rng.range_inclusive(1, MAX_STATES);
    let r = rng.range_inclusive(1, MAX_QUEUES);
    let transition = (0..m)
        .map(|_| {
            let raw: Vec<f64> = (0..m).map(|_| rng.uniform(0.05, 1.0)).collect();
            let total: f64 = raw.iter().sum();
            raw.into_iter().map(|x| x / total).collect()
        })
        .collect();
    let chain = MarkovChainSpec::unlabeled(transition).expect("positive rows");
    let actions = (0..m)
        .map(|i| {
            let k = rng.range_inclusive(2, MAX_ACTIONS);
            let serve_at = rng.range_inclusive(0, k - 1);
            (0..k)
                .map(|x| {
                    if x == serve_at {
                        Action::new(
                            format!("serve{}", i + 1),
                            rng.uniform(0.5, 1.0),
                            (0..r).map(|_| rng.uniform(0.0, 0.3)).collect(),
                            (0..r).map(|_| rng.uniform(0.6, 1.0)).collect(),
                        )
                    } else {
                        Action::new(
                            format!("a{}_{}", i + 1, x + 1),
                            rng.uniform(0.0, 1.0),
                            (0..r).map(|_| rng.uniform(0.0, 1.0)).collect(),
                            (0..r)
                                .map(|_| if rng.next_unit() < 0.3 { 0.0 } else { rng.uniform(0.0, 1.0) })
                                .collect(),
                        )
                    }
                })
                .collect()
        })
        .collect();
    let spec = NetworkSpec::new(r, chain, actions, 1.0).expect("valid random instance");
    let cert = suggest_certificate(&spec)
        .expect("slack LP solves")
        .expect("serve actions give positive slack");
    verify_slackness(&spec, &cert).expect("suggested certificate verifies");
    (spec, cert)
}

/// Number of i.i.d. sub-conditions in [`iid_instance`].
pub const IID_CONDITIONS: usize = 10;

/// Two queues whose network state is i.i.d. over ten equiprobable
/// sub-conditions, encoded as a ten-state chain with identical rows. Each
/// sub-condition fixes the arrival vector, the channel rates and the serving
/// costs; the controller can idle, serve either queue, or serve both.
pub fn iid_instance() -> NetworkSpec {
    let n = IID_CONDITIONS;
    let labels = (1..=n).map(|k| format!("c{k}")).collect();
    let transition = vec![vec![1.0 / n as f64; n]; n];
    let chain = MarkovChainSpec::new(labels, transition).expect("uniform rows");
    let actions = (0..n)
        .map(|k| {
            let kf = k as f64;
            let arrivals = vec![0.5 * (k % 3) as f64, 0.25 * (k % 4) as f64];
            let (c1, c2) = (1.0 + 0.1 * kf, 2.0 - 0.1 * kf);
            let (e1, e2) = (0.4 + 0.05 * kf, 0.8 - 0.05 * kf);
            vec![
                Action::new("idle", 0.0, arrivals.clone(), vec![0.0, 0.0]),
                Action::new("serve1", e1, arrivals.clone(), vec![c1, 0.0]),
                Action::new("serve2", e2, arrivals.clone(), vec![0.0, c2]),
                Action::new("serve_both", e1 + e2, arrivals, vec![c1, c2]),
            ]
        })
        .collect();
    NetworkSpec::new(2, chain, actions, 2.0).expect("valid i.i.d. instance")
}
