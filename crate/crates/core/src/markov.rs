//! Finite network-state Markov chains.
//!
//! Stationary distributions and return/hitting-time moments are computed
//! exactly by dense linear solves; sample paths come from [`SlotRng`].
//! A [`ModulatedChain`] groups chain states into modes whose sub-states are
//! drawn i.i.d. given the mode, so bound constants can be taken from the
//! (smaller) mode chain.

use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::solve_dense;
use crate::rng::{SlotRng, STATE_STREAM};

/// Row sums must equal 1 within this tolerance.
pub const ROW_SUM_TOL: f64 = 1e-12;
/// Positive transition mass below this is treated as ambiguous support.
pub const MIN_POSITIVE_MASS: f64 = 1e-12;
/// Componentwise tolerance on `pi P = pi`.
pub const BALANCE_TOL: f64 = 1e-10;
/// Tolerance on the mean-return identity `T_i = 1 / pi_i`.
pub const RETURN_IDENTITY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum ChainViolation {
    Empty,
    LabelCount { labels: usize, states: usize },
    DuplicateLabel(String),
    RowLength { row: usize, len: usize, expected: usize },
    EntryOutOfRange { row: usize, col: usize, value: f64 },
    NearZeroEntry { row: usize, col: usize, value: f64 },
    RowSum { row: usize, label: String, sum: f64 },
    Reducible { states: Vec<String> },
    Periodic { period: u64, class: Vec<String> },
}

impl fmt::Display for ChainViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ChainViolation::Empty => write!(f, "chain has no states"),
            ChainViolation::LabelCount { labels, states } => {
                write!(f, "{labels} state labels for {states} matrix rows")
            }
            ChainViolation::DuplicateLabel(l) => write!(f, "duplicate state label '{l}'"),
            ChainViolation::RowLength { row, len, expected } => {
                write!(f, "transition row {row} has {len} entries, expected {expected}")
            }
            ChainViolation::EntryOutOfRange { row, col, value } => {
                write!(f, "transition[{row}][{col}] = {value} is outside [0, 1]")
            }
            ChainViolation::NearZeroEntry { row, col, value } => write!(
                f,
                "transition[{row}][{col}] = {value:e} is positive but below {MIN_POSITIVE_MASS:e}"
            ),
            ChainViolation::RowSum { row, label, sum } => write!(
                f,
                "transition row {row} ('{label}') sums to {sum}, not 1 (not stochastic)"
            ),
            ChainViolation::Reducible { states } => write!(
                f,
                "chain is reducible: states {states:?} are not mutually reachable with the rest"
            ),
            ChainViolation::Periodic { period, class } => {
                write!(f, "chain is periodic with period {period}; cyclic class {class:?}")
            }
        }
    }
}

/// Validated irreducible, aperiodic finite chain.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MarkovChainSpec {
    labels: Vec<String>,
    transition: Vec<Vec<f64>>,
}

impl MarkovChainSpec {
    pub fn new(labels: Vec<String>, transition: Vec<Vec<f64>>) -> Result<Self> {
        let violations = Self::check(&labels, &transition);
        if violations.is_empty() {
            Ok(Self { labels, transition })
        } else {
            Err(Error::InvalidChain(violations))
        }
    }

    /// Builds a chain with labels `s1..sM`.
    pub fn unlabeled(transition: Vec<Vec<f64>>) -> Result<Self> {
        let labels = (1..=transition.len()).map(|i| format!("s{i}")).collect();
        Self::new(labels, transition)
    }

    /// Lists every violated chain invariant. Structural problems short-circuit
    /// the graph checks, which need a well-formed matrix.
    pub fn check(labels: &[String], p: &[Vec<f64>]) -> Vec<ChainViolation> {
        let mut out = Vec::new();
        let m = p.len();
        if m == 0 {
            out.push(ChainViolation::Empty);
            return out;
        }
        if labels.len() != m {
            out.push(ChainViolation::LabelCount {
                labels: labels.len(),
                states: m,
            });
        }
        for (i, l) in labels.iter().enumerate() {
            if labels[..i].contains(l) {
                out.push(ChainViolation::DuplicateLabel(l.clone()));
            }
        }
        let mut shape_ok = true;
        for (i, row) in p.iter().enumerate() {
            if row.len() != m {
                out.push(ChainViolation::RowLength {
                    row: i,
                    len: row.len(),
                    expected: m,
                });
                shape_ok = false;
                continue;
            }
            for (j, &v) in row.iter().enumerate() {
                if !(0.0..=1.0).contains(&v) {
                    out.push(ChainViolation::EntryOutOfRange {
                        row: i,
                        col: j,
                        value: v,
                    });
                } else if v > 0.0 && v < MIN_POSITIVE_MASS {
                    out.push(ChainViolation::NearZeroEntry {
                        row: i,
                        col: j,
                        value: v,
                    });
                }
            }
            let sum: f64 = row.iter().sum();
            if !((sum - 1.0).abs() <= ROW_SUM_TOL) {
                out.push(ChainViolation::RowSum {
                    row: i,
                    label: labels.get(i).cloned().unwrap_or_else(|| format!("#{i}")),
                    sum,
                });
            }
        }
        if !shape_ok || !out.is_empty() {
            return out;
        }

        let name = |i: usize| labels[i].clone();
        let forward = reachable(p, 0, false);
        let backward = reachable(p, 0, true);
        let stray: Vec<String> = (0..m)
            .filter(|&i| !(forward[i] && backward[i]))
            .map(name)
            .collect();
        if !stray.is_empty() {
            out.push(ChainViolation::Reducible { states: stray });
            return out;
        }

        let period = period(p);
        if period > 1 {
            let levels = bfs_levels(p);
            let class = (0..m)
                .filter(|&i| levels[i].is_multiple_of(period))
                .map(name)
                .collect();
            out.push(ChainViolation::Periodic { period, class });
        }
        out
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn transition(&self) -> &[Vec<f64>] {
        &self.transition
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.transition[i]
    }
}

fn reachable(p: &[Vec<f64>], start: usize, reverse: bool) -> Vec<bool> {
    let m = p.len();
    let mut seen = vec![false; m];
    let mut stack = vec![start];
    seen[start] = true;
    while let Some(u) = stack.pop() {
        for v in 0..m {
            let w = if reverse { p[v][u] } else { p[u][v] };
            if w > 0.0 && !seen[v] {
                seen[v] = true;
                stack.push(v);
            }
        }
    }
    seen
}

fn bfs_levels(p: &[Vec<f64>]) -> Vec<u64> {
    let m = p.len();
    let mut level = vec![u64::MAX; m];
    level[0] = 0;
    let mut queue = std::collections::VecDeque::from([0usize]);
    while let Some(u) = queue.pop_front() {
        for v in 0..m {
            if p[u][v] > 0.0 && level[v] == u64::MAX {
                level[v] = level[u] + 1;
                queue.push_back(v);
            }
        }
    }
    level
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Period of an irreducible support graph: gcd of `level(u) + 1 - level(v)`
/// over all edges `u -> v` of a BFS layering.
fn period(p: &[Vec<f64>]) -> u64 {
    let level = bfs_levels(p);
    let mut d = 0;
    for (u, row) in p.iter().enumerate() {
        for (v, &w) in row.iter().enumerate() {
            if w > 0.0 {
                let diff = (level[u] + 1).abs_diff(level[v]);
                d = gcd(d, diff);
            }
        }
    }
    d
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StationaryDistribution {
    pi: Vec<f64>,
}

impl StationaryDistribution {
    pub fn probabilities(&self) -> &[f64] {
        &self.pi
    }

    pub fn get(&self, i: usize) -> f64 {
        self.pi[i]
    }

    /// Index of the most likely state (lowest index on ties).
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, &p) in self.pi.iter().enumerate() {
            if p > self.pi[best] {
                best = i;
            }
        }
        best
    }
}

/// Solves `(P^T - I) pi = 0` with the last balance equation replaced by
/// `sum(pi) = 1`.
pub fn stationary_distribution(chain: &MarkovChainSpec) -> Result<StationaryDistribution> {
    let m = chain.len();
    let p = chain.transition();
    let mut a = vec![vec![0.0; m]; m];
    for (i, row) in a.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = p[j][i] - if i == j { 1.0 } else { 0.0 };
        }
    }
    a[m - 1] = vec![1.0; m];
    let mut b = vec![0.0; m];
    b[m - 1] = 1.0;
    let pi = solve_dense(&a, &b)?;

    let sum: f64 = pi.iter().sum();
    if (sum - 1.0).abs() > ROW_SUM_TOL {
        return Err(Error::Numerical(format!("stationary mass sums to {sum}")));
    }
    if let Some(i) = pi.iter().position(|&x| x <= 0.0) {
        return Err(Error::Numerical(format!(
            "stationary probability of '{}' is {}",
            chain.labels()[i],
            pi[i]
        )));
    }
    for j in 0..m {
        let lhs: f64 = (0..m).map(|i| pi[i] * p[i][j]).sum();
        if (lhs - pi[j]).abs() > BALANCE_TOL {
            return Err(Error::Numerical(format!(
                "balance equation for state {j} off by {:e}",
                lhs - pi[j]
            )));
        }
    }
    Ok(StationaryDistribution { pi })
}

/// First two moments of the return time to a reference state and of the
/// hitting times into it from every other state.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReturnTimeStats {
    pub reference_state: usize,
    pub mean_return: f64,
    pub second_moment_return: f64,
    /// `hitting_means[j]` is the expected slot count to reach the reference
    /// state from `j`; zero at the reference state itself.
    pub hitting_means: Vec<f64>,
    pub hitting_second_moments: Vec<f64>,
}

impl ReturnTimeStats {
    pub fn variance_return(&self) -> f64 {
        self.second_moment_return - self.mean_return * self.mean_return
    }
}

/// First-step analysis. With `Q` the transition matrix restricted to the
/// states other than the reference, hitting means solve `(I - Q) h = 1` and
/// second moments solve `(I - Q) m = 1 + 2 Q h`. The return moments are the
/// same recursions evaluated from the reference row.
pub fn return_and_hitting_moments(
    chain: &MarkovChainSpec,
    reference_state: usize,
) -> Result<ReturnTimeStats> {
    let m = chain.len();
    if reference_state >= m {
        return Err(Error::Index {
            what: "reference state",
            index: reference_state,
            len: m,
        });
    }
    let p = chain.transition();
    let others: Vec<usize> = (0..m).filter(|&j| j != reference_state).collect();
    let n = others.len();

    let mut h = vec![0.0; m];
    let mut sq = vec![0.0; m];
    if n > 0 {
        let mut a = vec![vec![0.0; n]; n];
        for (r, &j) in others.iter().enumerate() {
            for (c, &k) in others.iter().enumerate() {
                a[r][c] = if r == c { 1.0 } else { 0.0 } - p[j][k];
            }
        }
        let hr = solve_dense(&a, &vec![1.0; n])?;
        for (r, &j) in others.iter().enumerate() {
            h[j] = hr[r];
        }
        let rhs: Vec<f64> = others
            .iter()
            .map(|&j| 1.0 + 2.0 * others.iter().map(|&k| p[j][k] * h[k]).sum::<f64>())
            .collect();
        let mr = solve_dense(&a, &rhs)?;
        for (r, &j) in others.iter().enumerate() {
            sq[j] = mr[r];
        }
    }

    let row = &p[reference_state];
    let mean_return = 1.0 + others.iter().map(|&k| row[k] * h[k]).sum::<f64>();
    let second_moment_return = 1.0
        + 2.0 * others.iter().map(|&k| row[k] * h[k]).sum::<f64>()
        + others.iter().map(|&k| row[k] * sq[k]).sum::<f64>();

    let pi = stationary_distribution(chain)?;
    let expected = 1.0 / pi.get(reference_state);
    if (mean_return - expected).abs() > RETURN_IDENTITY_TOL * expected.max(1.0) {
        return Err(Error::Numerical(format!(
            "mean return time {mean_return} disagrees with 1/pi = {expected}"
        )));
    }

    Ok(ReturnTimeStats {
        reference_state,
        mean_return,
        second_moment_return,
        hitting_means: h,
        hitting_second_moments: sq,
    })
}

/// `C = E[T^2] + E[T]` and `D = E[T^2] - E[T]` for the reference return time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundConstants {
    pub c: f64,
    pub d: f64,
}

impl BoundConstants {
    /// The constant that falls out of the per-cycle drift sum before it is
    /// rounded up: half of `c`.
    pub fn cycle_sum_c(&self) -> f64 {
        0.5 * self.c
    }
}

pub fn bound_constants(stats: &ReturnTimeStats) -> BoundConstants {
    BoundConstants {
        c: stats.second_moment_return + stats.mean_return,
        d: stats.second_moment_return - stats.mean_return,
    }
}

/// Anything that can produce a seeded network-state path over the states
/// of a [`MarkovChainSpec`].
pub trait StateProcess: Sync {
    fn num_states(&self) -> usize;

    /// `horizon` states starting with `start_state` at slot 0.
    fn sample_path(&self, start_state: usize, horizon: usize, seed: u64) -> Vec<usize>;
}

impl StateProcess for MarkovChainSpec {
    fn num_states(&self) -> usize {
        self.len()
    }

    fn sample_path(&self, start_state: usize, horizon: usize, seed: u64) -> Vec<usize> {
        sample_path(self, start_state, horizon, seed)
    }
}

pub fn sample_path(
    chain: &MarkovChainSpec,
    start_state: usize,
    horizon: usize,
    seed: u64,
) -> Vec<usize> {
    assert!(start_state < chain.len(), "start state out of range");
    let mut rng = SlotRng::with_stream(seed, STATE_STREAM);
    let mut path = Vec::with_capacity(horizon);
    let mut s = start_state;
    for t in 0..horizon {
        if t > 0 {
            s = rng.categorical(chain.row(s));
        }
        path.push(s);
    }
    path
}

/// Seeded first-passage samples `min { t >= 1 : S(t) = target }` starting
/// from `from`: return times when `from == target`, hitting times otherwise.
pub fn sample_first_passage(
    chain: &MarkovChainSpec,
    from: usize,
    target: usize,
    count: usize,
    seed: u64,
) -> Vec<u64> {
    let mut rng = SlotRng::with_stream(seed, STATE_STREAM);
    (0..count)
        .map(|_| {
            let mut s = from;
            let mut t = 0u64;
            loop {
                s = rng.categorical(chain.row(s));
                t += 1;
                if s == target {
                    break t;
                }
            }
        })
        .collect()
}

/// A chain whose states are grouped into modes: the mode evolves as a Markov
/// chain and, given the next mode, the sub-state is drawn i.i.d. from fixed
/// within-mode weights. This is exactly the factorization
/// `P[i][k] = R[mode(i)][mode(k)] * w[k]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModulatedChain {
    modes: MarkovChainSpec,
    members: Vec<Vec<usize>>,
    weights: Vec<Vec<f64>>,
    mode_of: Vec<usize>,
}

/// Tolerance for checking the mode factorization.
const LUMP_TOL: f64 = 1e-12;

impl ModulatedChain {
    /// Lumps `chain` by the partition `groups`, verifying the factorization.
    pub fn lump(chain: &MarkovChainSpec, groups: Vec<Vec<usize>>) -> Result<Self> {
        let m = chain.len();
        let mut mode_of = vec![usize::MAX; m];
        for (g, members) in groups.iter().enumerate() {
            if members.is_empty() {
                return Err(Error::InvalidArgument(format!("mode {g} is empty")));
            }
            for &s in members {
                if s >= m {
                    return Err(Error::Index {
                        what: "state in partition",
                        index: s,
                        len: m,
                    });
                }
                if mode_of[s] != usize::MAX {
                    return Err(Error::InvalidArgument(format!(
                        "state {s} appears in two modes"
                    )));
                }
                mode_of[s] = g;
            }
        }
        if let Some(s) = mode_of.iter().position(|&g| g == usize::MAX) {
            return Err(Error::InvalidArgument(format!(
                "state {s} is not assigned to a mode"
            )));
        }

        let p = chain.transition();
        let nm = groups.len();
        let mut mode_rows = vec![vec![0.0; nm]; nm];
        let mut weights: Vec<Vec<f64>> = groups.iter().map(|g| vec![0.0; g.len()]).collect();
        let mut weights_set = vec![false; nm];
        for (a, members) in groups.iter().enumerate() {
            let lead = members[0];
            for (b, targets) in groups.iter().enumerate() {
                let mass: f64 = targets.iter().map(|&k| p[lead][k]).sum();
                mode_rows[a][b] = mass;
                for &i in members {
                    let other: f64 = targets.iter().map(|&k| p[i][k]).sum();
                    if (other - mass).abs() > LUMP_TOL {
                        return Err(Error::InvalidArgument(format!(
                            "states {lead} and {i} put different mass on mode {b}"
                        )));
                    }
                }
                if mass > 0.0 && !weights_set[b] {
                    for (slot, &k) in targets.iter().enumerate() {
                        weights[b][slot] = p[lead][k] / mass;
                    }
                    weights_set[b] = true;
                }
            }
        }
        for (i, row) in p.iter().enumerate() {
            for (k, &pik) in row.iter().enumerate() {
                let b = mode_of[k];
                let slot = groups[b].iter().position(|&x| x == k).expect("member");
                let predicted = mode_rows[mode_of[i]][b] * weights[b][slot];
                if (predicted - pik).abs() > LUMP_TOL {
                    return Err(Error::InvalidArgument(format!(
                        "transition {i}->{k} does not factor through modes ({pik} vs {predicted})"
                    )));
                }
            }
        }
        for row in &mut mode_rows {
            let s: f64 = row.iter().sum();
            row.iter_mut().for_each(|v| *v /= s);
        }
        let labels = (0..nm)
            .map(|g| {
                groups[g]
                    .iter()
                    .map(|&s| chain.labels()[s].as_str())
                    .collect::<Vec<_>>()
                    .join("+")
            })
            .collect();
        let modes = MarkovChainSpec::new(labels, mode_rows)?;
        Ok(Self {
            modes,
            members: groups,
            weights,
            mode_of,
        })
    }

    /// Collapses a chain with identical rows (an i.i.d. state process) into a
    /// single mode.
    pub fn iid(chain: &MarkovChainSpec) -> Result<Self> {
        Self::lump(chain, vec![(0..chain.len()).collect()])
    }

    pub fn mode_chain(&self) -> &MarkovChainSpec {
        &self.modes
    }

    pub fn mode_of(&self, state: usize) -> usize {
        self.mode_of[state]
    }

    pub fn members(&self, mode: usize) -> &[usize] {
        &self.members[mode]
    }

    pub fn weights(&self, mode: usize) -> &[f64] {
        &self.weights[mode]
    }

    /// Mode that contains `state` is used as the reference for return times.
    pub fn return_stats(&self, mode: usize) -> Result<ReturnTimeStats> {
        return_and_hitting_moments(&self.modes, mode)
    }
}

impl StateProcess for ModulatedChain {
    fn num_states(&self) -> usize {
        self.mode_of.len()
    }

    fn sample_path(&self, start_state: usize, horizon: usize, seed: u64) -> Vec<usize> {
        assert!(start_state < self.mode_of.len(), "start state out of range");
        let mut rng = SlotRng::with_stream(seed, STATE_STREAM);
        let mut path = Vec::with_capacity(horizon);
        let mut mode = self.mode_of[start_state];
        let mut s = start_state;
        for t in 0..horizon {
            if t > 0 {
                mode = rng.categorical(self.modes.row(mode));
                s = self.members[mode][rng.categorical(&self.weights[mode])];
            }
            path.push(s);
        }
        path
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain(p: Vec<Vec<f64>>) -> MarkovChainSpec {
        MarkovChainSpec::unlabeled(p).unwrap()
    }

    /// Power iteration used only as an independent cross-check.
    fn power_iteration(p: &[Vec<f64>]) -> Vec<f64> {
        let m = p.len();
        let mut x = vec![1.0 / m as f64; m];
        for _ in 0..10_000 {
            let mut y = vec![0.0; m];
            for i in 0..m {
                for j in 0..m {
                    y[j] += x[i] * p[i][j];
                }
            }
            x = y;
        }
        x
    }

    #[test]
    fn stationary_single_state() {
        let pi = stationary_distribution(&chain(vec![vec![1.0]])).unwrap();
        assert_eq!(pi.probabilities(), &[1.0]);
    }

    #[test]
    fn stationary_symmetric() {
        let pi = stationary_distribution(&chain(vec![vec![0.5, 0.5], vec![0.5, 0.5]])).unwrap();
        assert!((pi.get(0) - 0.5).abs() < 1e-15);
        assert!((pi.get(1) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn stationary_asymmetric_matches_hand_solution_and_power_iteration() {
        let p = vec![vec![0.7, 0.3], vec![0.6, 0.4]];
        let pi = stationary_distribution(&chain(p.clone())).unwrap();
        // 0.3 pi_1 = 0.6 pi_2 with pi_1 + pi_2 = 1.
        assert!((pi.get(0) - 2.0 / 3.0).abs() < 1e-14);
        assert!((pi.get(1) - 1.0 / 3.0).abs() < 1e-14);
        let pw = power_iteration(&p);
        for i in 0..2 {
            assert!((pw[i] - pi.get(i)).abs() < 1e-12);
        }
    }

    #[test]
    fn periodic_chain_rejected_with_class() {
        let err = MarkovChainSpec::unlabeled(vec![vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap_err();
        match err {
            Error::InvalidChain(v) => {
                assert!(matches!(&v[0], ChainViolation::Periodic { period: 2, class } if class == &vec!["s1".to_string()]))
            }
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn reducible_chain_rejected_naming_states() {
        let err = MarkovChainSpec::unlabeled(vec![
            vec![0.5, 0.5, 0.0],
            vec![0.5, 0.5, 0.0],
            vec![0.0, 0.5, 0.5],
        ])
        .unwrap_err();
        match err {
            Error::InvalidChain(v) => assert_eq!(
                v,
                vec![ChainViolation::Reducible {
                    states: vec!["s3".into()]
                }]
            ),
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn near_zero_mass_rejected() {
        let err = MarkovChainSpec::unlabeled(vec![vec![1.0 - 1e-14, 1e-14], vec![0.5, 0.5]])
            .unwrap_err();
        assert!(matches!(err, Error::InvalidChain(v) if matches!(v[0], ChainViolation::NearZeroEntry { row: 0, col: 1, .. })));
    }

    #[test]
    fn row_sum_violation_names_row() {
        let err = MarkovChainSpec::unlabeled(vec![vec![0.5, 0.4], vec![0.5, 0.5]]).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("row 0"), "{msg}");
        assert!(msg.contains("not stochastic"), "{msg}");
    }

    #[test]
    fn moments_single_state() {
        let s = return_and_hitting_moments(&chain(vec![vec![1.0]]), 0).unwrap();
        assert_eq!(s.mean_return, 1.0);
        assert_eq!(s.second_moment_return, 1.0);
        assert_eq!(s.hitting_means, vec![0.0]);
    }

    #[test]
    fn moments_symmetric_closed_form() {
        // T = 1 w.p. 1/2, else 1 + Geometric(1/2): E[T] = 2, E[T^2] = 6.
        let s = return_and_hitting_moments(&chain(vec![vec![0.5, 0.5], vec![0.5, 0.5]]), 0)
            .unwrap();
        assert!((s.mean_return - 2.0).abs() < 1e-14);
        assert!((s.second_moment_return - 6.0).abs() < 1e-14);
        assert_eq!(s.hitting_means[0], 0.0);
        assert!((s.hitting_means[1] - 2.0).abs() < 1e-14);
        assert!((s.hitting_second_moments[1] - 6.0).abs() < 1e-14);
    }

    #[test]
    fn moments_asymmetric_return_identity() {
        let s = return_and_hitting_moments(&chain(vec![vec![0.7, 0.3], vec![0.6, 0.4]]), 0)
            .unwrap();
        assert!((s.mean_return - 1.5).abs() < 1e-12);
        let c = bound_constants(&s);
        assert!((c.c - c.d - 3.0).abs() < 1e-12);
        assert!(s.second_moment_return >= s.mean_return * s.mean_return);
    }

    #[test]
    fn constants_match_examples() {
        let unit = ReturnTimeStats {
            reference_state: 0,
            mean_return: 1.0,
            second_moment_return: 1.0,
            hitting_means: vec![0.0],
            hitting_second_moments: vec![0.0],
        };
        assert_eq!(bound_constants(&unit), BoundConstants { c: 2.0, d: 0.0 });
        let sym = ReturnTimeStats {
            mean_return: 2.0,
            second_moment_return: 6.0,
            ..unit
        };
        assert_eq!(bound_constants(&sym), BoundConstants { c: 8.0, d: 4.0 });
    }

    #[test]
    fn sample_path_single_state_and_determinism() {
        let one = chain(vec![vec![1.0]]);
        assert_eq!(sample_path(&one, 0, 5, 3), vec![0; 5]);
        let two = chain(vec![vec![0.7, 0.3], vec![0.6, 0.4]]);
        assert_eq!(sample_path(&two, 1, 1000, 9), sample_path(&two, 1, 1000, 9));
        assert_ne!(sample_path(&two, 1, 1000, 9), sample_path(&two, 1, 1000, 10));
        assert_eq!(sample_path(&two, 1, 1000, 9)[0], 1);
    }

    #[test]
    fn sample_path_frequency() {
        let two = chain(vec![vec![0.5, 0.5], vec![0.5, 0.5]]);
        let n = 1_000_000;
        let path = sample_path(&two, 0, n, 42);
        let freq = path.iter().filter(|&&s| s == 0).count() as f64 / n as f64;
        // 3 sigma of a fair binomial proportion at 1e6 draws is 0.0015.
        assert!((freq - 0.5).abs() < 0.002, "{freq}");
    }

    #[test]
    fn iid_chain_collapses_to_one_mode() {
        let row = vec![0.1; 10];
        let c = chain(vec![row; 10]);
        let lumped = ModulatedChain::iid(&c).unwrap();
        assert_eq!(lumped.mode_chain().len(), 1);
        let stats = lumped.return_stats(0).unwrap();
        assert_eq!(bound_constants(&stats), BoundConstants { c: 2.0, d: 0.0 });
        let path = lumped.sample_path(3, 100_000, 5);
        assert_eq!(path[0], 3);
        let hits = path.iter().filter(|&&s| s == 7).count() as f64 / 1e5;
        assert!((hits - 0.1).abs() < 0.004);
    }

    #[test]
    fn lump_rejects_non_factoring_partition() {
        let c = chain(vec![vec![0.7, 0.3], vec![0.6, 0.4]]);
        assert!(ModulatedChain::iid(&c).is_err());
    }

    #[test]
    fn lump_two_modes() {
        // Modes {0,1} and {2}; within mode 0 the split is always 1:3.
        let c = chain(vec![
            vec![0.2, 0.6, 0.2],
            vec![0.2, 0.6, 0.2],
            vec![0.125, 0.375, 0.5],
        ]);
        let lumped = ModulatedChain::lump(&c, vec![vec![0, 1], vec![2]]).unwrap();
        let r = lumped.mode_chain().transition();
        assert!((r[0][0] - 0.8).abs() < 1e-15);
        assert!((r[1][1] - 0.5).abs() < 1e-15);
        assert!((lumped.weights(0)[1] - 0.75).abs() < 1e-15);
    }
}
