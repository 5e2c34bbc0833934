use serde::Serialize;

use crate::error::{Error, Result};

/// Nonnegative backlog vector, one entry per queue.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QueueVector(Vec<f64>);

impl QueueVector {
    pub fn zeros(r: usize) -> Self {
        Self(vec![0.0; r])
    }

    pub fn new(q: Vec<f64>) -> Result<Self> {
        if let Some(x) = q.iter().find(|x| !(x.is_finite() && **x >= 0.0)) {
            return Err(Error::InvalidArgument(format!("backlog {x} is not a nonnegative number")));
        }
        Ok(Self(q))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.0.iter().sum()
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self(self.0.iter().map(|x| x * c).collect())
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

/// `q'_j = max(q_j - mu_j, 0) + A_j`.
pub fn step_queues(q: &QueueVector, arrivals: &[f64], services: &[f64]) -> Result<QueueVector> {
    let r = q.len();
    for (what, v) in [("arrival vector", arrivals), ("service vector", services)] {
        if v.len() != r {
            return Err(Error::Shape {
                what,
                got: v.len(),
                expected: r,
            });
        }
    }
    Ok(QueueVector(
        q.0.iter()
            .zip(arrivals.iter().zip(services))
            .map(|(&qj, (&a, &mu))| (qj - mu).max(0.0) + a)
            .collect(),
    ))
}

/// `L(q) = 0.5 * sum_j q_j^2`.
pub fn lyapunov(q: &QueueVector) -> f64 {
    lyapunov_of(&q.0)
}

pub fn lyapunov_of(q: &[f64]) -> f64 {
    0.5 * q.iter().map(|x| x * x).sum::<f64>()
}

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

/// Running totals behind the time-average cost and backlog.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct MetricsAccumulator {
    slots: u64,
    cost_sum: CompensatedSum,
    backlog_sum: CompensatedSum,
    lyapunov: f64,
}

impl MetricsAccumulator {
    pub fn new() -> Self {
        Self::default()
    }

    /// Records slot `t`: the cost paid and the backlog `q(t)` at the start of the slot.
    pub fn record(&mut self, cost: f64, backlog: &[f64]) {
        self.slots += 1;
        self.cost_sum.add(cost);
        self.backlog_sum.add(backlog.iter().sum());
        self.lyapunov = lyapunov_of(backlog);
    }

    pub fn slots(&self) -> u64 {
        self.slots
    }

    pub fn cost_sum(&self) -> f64 {
        self.cost_sum.value()
    }

    pub fn backlog_sum(&self) -> f64 {
        self.backlog_sum.value()
    }

    pub fn lyapunov(&self) -> f64 {
        self.lyapunov
    }
}

/// `(cost_sum / t, backlog_sum / t)`.
pub fn time_averages(acc: &MetricsAccumulator) -> Result<(f64, f64)> {
    if acc.slots == 0 {
        return Err(Error::EmptyAverage);
    }
    let t = acc.slots as f64;
    Ok((acc.cost_sum() / t, acc.backlog_sum() / t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn q(v: &[f64]) -> QueueVector {
        QueueVector::new(v.to_vec()).unwrap()
    }

    #[test]
    fn step_examples() {
        assert_eq!(step_queues(&q(&[5.0]), &[2.0], &[3.0]).unwrap(), q(&[4.0]));
        assert_eq!(step_queues(&q(&[1.0]), &[2.0], &[3.0]).unwrap(), q(&[2.0]));
        assert_eq!(step_queues(&q(&[0.0]), &[0.0], &[0.0]).unwrap(), q(&[0.0]));
    }

    #[test]
    fn step_shape_mismatch() {
        assert!(matches!(
            step_queues(&q(&[1.0, 2.0]), &[1.0], &[1.0, 1.0]),
            Err(Error::Shape { got: 1, expected: 2, .. })
        ));
    }

    #[test]
    fn negative_backlog_rejected() {
        assert!(QueueVector::new(vec![-1.0]).is_err());
    }

    #[test]
    fn lyapunov_examples() {
        assert_eq!(lyapunov(&QueueVector::zeros(3)), 0.0);
        assert_eq!(lyapunov(&q(&[3.0, 4.0])), 12.5);
    }

    #[test]
    fn averages() {
        let mut acc = MetricsAccumulator::new();
        assert!(matches!(time_averages(&acc), Err(Error::EmptyAverage)));
        acc.record(2.0, &[3.0, 4.0]);
        assert_eq!(time_averages(&acc).unwrap(), (2.0, 7.0));
        for _ in 0..99 {
            acc.record(2.0, &[3.0, 4.0]);
        }
        assert_eq!(time_averages(&acc).unwrap(), (2.0, 7.0));
        assert_eq!(acc.slots(), 100);
    }

    #[test]
    fn compensated_sum_is_accurate() {
        let mut s = CompensatedSum::default();
        let mut naive = 0.0;
        for _ in 0..10_000_000 {
            s.add(0.1);
            naive += 0.1;
        }
        assert!((s.value() - 1e6).abs() < 1e-9);
        assert!((naive - 1e6f64).abs() > 1e-6);
    }

    proptest! {
        #[test]
        fn one_step_bounds(
            qs in prop::collection::vec(0.0f64..100.0, 1..4),
            seed_a in prop::collection::vec(0.0f64..1.0, 4),
            seed_m in prop::collection::vec(0.0f64..1.0, 4),
            dmax in 0.5f64..5.0,
        ) {
            let r = qs.len();
            let a: Vec<f64> = seed_a[..r].iter().map(|x| x * dmax).collect();
            let m: Vec<f64> = seed_m[..r].iter().map(|x| x * dmax).collect();
            let before = q(&qs);
            let after = step_queues(&before, &a, &m).unwrap();
            for j in 0..r {
                let (x, y) = (before.as_slice()[j], after.as_slice()[j]);
                prop_assert!(y >= 0.0);
                prop_assert!((y - x).abs() <= dmax + 1e-12);
                // Per-queue Lyapunov increment bound.
                prop_assert!(0.5 * y * y - 0.5 * x * x <= dmax * dmax + x * (a[j] - m[j]) + 1e-9);
            }
            prop_assert!(lyapunov(&after) >= 0.0);
        }
    }
}
