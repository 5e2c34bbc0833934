//! Dual machinery of the deterministic problem.
//!
//! `g_si` is the per-state dual function (a minimum over the finite action
//! list of `V f + gamma . (A - mu)`), `g` is its stationary average, and its
//! maximum over `gamma >= 0` is certified two ways: by projected subgradient
//! ascent refined with a cutting-plane model (which uses only `g` and its
//! subgradients), and by the simplex solution of the convexified primal LP.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::lp::{LinearProgram, Relation};
use crate::model::{NetworkSpec, SlacknessCertificate};
use crate::rng::{SlotRng, SAMPLING_STREAM};

/// Nonnegative Lagrange multiplier vector.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DualPoint(Vec<f64>);

impl DualPoint {
    pub fn new(gamma: Vec<f64>) -> Result<Self> {
        if let Some(x) = gamma.iter().find(|x| !(x.is_finite() && **x >= 0.0)) {
            return Err(Error::InvalidArgument(format!("multiplier {x} is negative")));
        }
        Ok(Self(gamma))
    }

    pub fn zeros(r: usize) -> Self {
        Self(vec![0.0; r])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StateDual {
    pub value: f64,
    pub minimizer: usize,
    /// `A - mu` at the minimizer.
    pub subgradient: Vec<f64>,
}

/// Lagrangian term `V f + gamma . (A - mu)` of one action.
fn lagrangian(spec: &NetworkSpec, state: usize, k: usize, gamma: &[f64], v: f64) -> f64 {
    let a = spec.action(state, k);
    let mut val = v * a.cost;
    for (j, &gj) in gamma.iter().enumerate() {
        val += gj * (a.arrivals[j] - a.services[j]);
    }
    val
}

fn state_min(spec: &NetworkSpec, state: usize, gamma: &[f64], v: f64) -> (f64, usize) {
    let mut best = 0;
    let mut best_val = lagrangian(spec, state, 0, gamma, v);
    for k in 1..spec.actions(state).len() {
        let val = lagrangian(spec, state, k, gamma, v);
        if val < best_val {
            best = k;
            best_val = val;
        }
    }
    (best_val, best)
}

/// Per-state dual function with its minimizer (lowest index on ties) and the
/// subgradient `A - mu` there.
pub fn g_si(spec: &NetworkSpec, state: usize, gamma: &[f64], v: f64) -> StateDual {
    let (value, minimizer) = state_min(spec, state, gamma, v);
    StateDual {
        value,
        minimizer,
        subgradient: spec.action(state, minimizer).net_vector(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DualEval {
    pub value: f64,
    pub per_state: Vec<StateDual>,
    /// `sum_i pi_i G_i`.
    pub aggregate_subgradient: Vec<f64>,
}

pub fn g(spec: &NetworkSpec, gamma: &[f64], v: f64) -> DualEval {
    let per_state: Vec<StateDual> = (0..spec.num_states())
        .map(|i| g_si(spec, i, gamma, v))
        .collect();
    let mut value = 0.0;
    let mut agg = vec![0.0; spec.queues()];
    for (i, sd) in per_state.iter().enumerate() {
        let p = spec.pi(i);
        value += p * sd.value;
        for (a, s) in agg.iter_mut().zip(&sd.subgradient) {
            *a += p * s;
        }
    }
    DualEval {
        value,
        per_state,
        aggregate_subgradient: agg,
    }
}

/// Value of `g` without the per-state detail.
pub fn g_value(spec: &NetworkSpec, gamma: &[f64], v: f64) -> f64 {
    (0..spec.num_states())
        .map(|i| spec.pi(i) * state_min(spec, i, gamma, v).0)
        .sum()
}

/// Coefficient of weight `a_ik` in the Lagrangian of the convexified problem:
/// `pi_i (V f_ik + gamma . (A_ik - mu_ik))`.
fn convexified_coefficients(spec: &NetworkSpec, gamma: &[f64], v: f64) -> Vec<Vec<f64>> {
    (0..spec.num_states())
        .map(|i| {
            let p = spec.pi(i);
            (0..spec.actions(i).len())
                .map(|k| {
                    let a = spec.action(i, k);
                    let mut c = p * v * a.cost;
                    for (j, &gj) in gamma.iter().enumerate() {
                        c += gj * p * a.arrivals[j] - gj * p * a.services[j];
                    }
                    c
                })
                .collect()
        })
        .collect()
}

/// Dual function of the convexified problem. For each state the Lagrangian
/// is linear in the weight simplex, so its infimum sits at a vertex: full
/// weight on one action.
pub fn g_convexified(spec: &NetworkSpec, gamma: &[f64], v: f64) -> f64 {
    convexified_coefficients(spec, gamma, v)
        .iter()
        .map(|row| row.iter().copied().fold(f64::INFINITY, f64::min))
        .sum()
}

/// Convexified Lagrangian at explicit per-state weights (one weight per
/// action of each state).
pub fn convexified_lagrangian(spec: &NetworkSpec, gamma: &[f64], v: f64, weights: &[Vec<f64>]) -> f64 {
    convexified_coefficients(spec, gamma, v)
        .iter()
        .zip(weights)
        .map(|(c, w)| c.iter().zip(w).map(|(x, y)| x * y).sum::<f64>())
        .sum()
}

#[derive(Debug, Clone, PartialEq)]
pub struct AscentParams {
    /// Step numerator `a` in `a / (b + n)`; `None` uses `B`.
    pub step_scale: Option<f64>,
    /// Step offset `b`.
    pub step_offset: f64,
    pub max_iterations: usize,
    /// Slack used to bound the search region; `None` computes the largest
    /// achievable slack by LP.
    pub eta: Option<f64>,
    /// Relative gap `upper - best <= tol * (1 + |best|)` required on exit.
    pub tolerance: f64,
    pub max_cuts: usize,
}

impl Default for AscentParams {
    fn default() -> Self {
        Self {
            step_scale: None,
            step_offset: 10.0,
            max_iterations: 100_000,
            eta: None,
            tolerance: 1e-10,
            max_cuts: 2_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DualOptimum {
    pub gamma: Vec<f64>,
    pub value: f64,
    /// Cutting-plane upper bound on `max g`.
    pub upper_bound: f64,
    /// Best value reached by the subgradient phase alone.
    pub ascent_value: f64,
    pub ascent_iterations: usize,
    pub cuts: usize,
}

impl DualOptimum {
    pub fn gap(&self) -> f64 {
        self.upper_bound - self.value
    }
}

struct Cut {
    point: Vec<f64>,
    value: f64,
    slope: Vec<f64>,
}

/// Maximizes the concave dual over `gamma >= 0`.
///
/// Phase one is projected subgradient ascent `gamma <- [gamma + a/(b+n) G]+`
/// keeping the best iterate. Phase two is Kelley's cutting-plane method on
/// the region `sum gamma <= (V delta_max - best) / eta`, which contains every
/// maximizer because `g(gamma) <= V delta_max - eta sum gamma`. Each cut is a
/// valid affine majorant of `g`, so the model maximum is a certified upper
/// bound and, `g` being polyhedral, the gap closes in finitely many cuts.
pub fn maximize_dual(spec: &NetworkSpec, v: f64, params: &AscentParams) -> Result<DualOptimum> {
    let r = spec.queues();
    let eta = match params.eta {
        Some(e) if e > 0.0 => e,
        Some(e) => return Err(Error::InvalidArgument(format!("eta = {e} must be positive"))),
        None => match suggest_certificate(spec)? {
            Some(c) => c.eta,
            None => {
                return Err(Error::InvalidArgument(
                    "instance has no positive slack; the dual maximum may be unattained".into(),
                ))
            }
        },
    };
    let a = params.step_scale.unwrap_or_else(|| spec.bound_b());

    let mut gamma = vec![0.0; r];
    let first = g(spec, &gamma, v);
    let mut best_gamma = gamma.clone();
    let mut best = first.value;
    let mut slope = first.aggregate_subgradient;
    for n in 0..params.max_iterations {
        let step = a / (params.step_offset + n as f64);
        for (gj, sj) in gamma.iter_mut().zip(&slope) {
            *gj = (*gj + step * sj).max(0.0);
        }
        let eval = g(spec, &gamma, v);
        if eval.value > best {
            best = eval.value;
            best_gamma.clone_from(&gamma);
        }
        slope = eval.aggregate_subgradient;
    }
    let ascent_value = best;

    let cut_at = |point: &[f64]| {
        let e = g(spec, point, v);
        Cut {
            point: point.to_vec(),
            value: e.value,
            slope: e.aggregate_subgradient,
        }
    };
    let mut cuts = vec![cut_at(&vec![0.0; r]), cut_at(&best_gamma)];
    if gamma != best_gamma {
        cuts.push(cut_at(&gamma));
    }
    let mut upper = f64::INFINITY;
    loop {
        let radius = (v * spec.delta_max() - best).max(0.0) / eta * (1.0 + 1e-9) + 1e-9;
        let (point, model_max) = cutting_plane_step(r, &cuts, radius)?;
        upper = upper.min(model_max);
        let cut = cut_at(&point);
        if cut.value > best {
            best = cut.value;
            best_gamma.clone_from(&point);
        }
        let gap = upper - best;
        if gap <= params.tolerance * (1.0 + best.abs()) {
            return Ok(DualOptimum {
                gamma: best_gamma,
                value: best,
                upper_bound: upper.max(best),
                ascent_value,
                ascent_iterations: params.max_iterations,
                cuts: cuts.len(),
            });
        }
        if cuts.len() >= params.max_cuts {
            return Err(Error::DualNotConverged { best, gap });
        }
        cuts.push(cut);
    }
}

/// Maximizes `t` subject to `t <= g_k + G_k . (gamma - gamma_k)` for every
/// cut and `gamma >= 0`, `sum gamma <= radius`.
fn cutting_plane_step(r: usize, cuts: &[Cut], radius: f64) -> Result<(Vec<f64>, f64)> {
    // Columns: gamma_1..gamma_r, t+, t-.
    let mut objective = vec![0.0; r + 2];
    objective[r] = -1.0;
    objective[r + 1] = 1.0;
    let mut lp = LinearProgram::minimize(objective);
    for cut in cuts {
        let mut row: Vec<f64> = cut.slope.iter().map(|s| -s).collect();
        row.push(1.0);
        row.push(-1.0);
        let rhs = cut.value - cut.slope.iter().zip(&cut.point).map(|(s, p)| s * p).sum::<f64>();
        lp.add(row, Relation::Le, rhs);
    }
    let mut box_row = vec![1.0; r];
    box_row.extend([0.0, 0.0]);
    lp.add(box_row, Relation::Le, radius);
    let sol = lp.solve()?;
    let point = sol.x[..r].to_vec();
    Ok((point, sol.x[r] - sol.x[r + 1]))
}

/// Optimal weights of the convexified problem: minimize
/// `V sum_i pi_i sum_k a_ik f_ik` subject to, for every queue,
/// `sum_i pi_i sum_k a_ik (A_ik - mu_ik) <= 0`, and a simplex per state.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvexifiedSolution {
    /// Nonzero `(action index, weight)` pairs per state.
    pub weights: Vec<Vec<(usize, f64)>>,
    pub objective: f64,
    /// `A_bar_j - B_bar_j` per queue.
    pub constraint_slacks: Vec<f64>,
}

impl ConvexifiedSolution {
    /// Objective recomputed from the stored weights.
    pub fn reevaluate(&self, spec: &NetworkSpec, v: f64) -> f64 {
        self.weights
            .iter()
            .enumerate()
            .map(|(i, w)| {
                spec.pi(i) * w.iter().map(|&(k, a)| v * a * spec.action(i, k).cost).sum::<f64>()
            })
            .sum()
    }

    /// As a stationary randomized policy.
    pub fn as_certificate(&self, eta: f64) -> SlacknessCertificate {
        SlacknessCertificate {
            weights: self.weights.clone(),
            eta,
        }
    }
}

fn offsets(spec: &NetworkSpec) -> (Vec<usize>, usize) {
    let mut off = Vec::with_capacity(spec.num_states());
    let mut n = 0;
    for i in 0..spec.num_states() {
        off.push(n);
        n += spec.actions(i).len();
    }
    (off, n)
}

/// Weight below which an LP variable is reported as zero.
const WEIGHT_FLOOR: f64 = 1e-13;
/// Tolerance on constraint satisfaction and re-evaluation.
pub const LP_CHECK_TOL: f64 = 1e-9;

pub fn solve_convexified_lp(spec: &NetworkSpec, v: f64) -> Result<ConvexifiedSolution> {
    let (off, n) = offsets(spec);
    let r = spec.queues();
    let mut objective = vec![0.0; n];
    for i in 0..spec.num_states() {
        for (k, a) in spec.actions(i).iter().enumerate() {
            objective[off[i] + k] = v * spec.pi(i) * a.cost;
        }
    }
    let mut lp = LinearProgram::minimize(objective);
    for j in 0..r {
        let mut row = vec![0.0; n];
        for i in 0..spec.num_states() {
            for (k, a) in spec.actions(i).iter().enumerate() {
                row[off[i] + k] = spec.pi(i) * a.net(j);
            }
        }
        lp.add(row, Relation::Le, 0.0);
    }
    for i in 0..spec.num_states() {
        let mut row = vec![0.0; n];
        for k in 0..spec.actions(i).len() {
            row[off[i] + k] = 1.0;
        }
        lp.add(row, Relation::Eq, 1.0);
    }
    let sol = lp.solve()?;

    let weights: Vec<Vec<(usize, f64)>> = (0..spec.num_states())
        .map(|i| {
            (0..spec.actions(i).len())
                .filter_map(|k| {
                    let w = sol.x[off[i] + k];
                    (w > WEIGHT_FLOOR).then_some((k, w))
                })
                .collect()
        })
        .collect();
    let mut slacks = vec![0.0; r];
    for (i, w) in weights.iter().enumerate() {
        for &(k, a) in w {
            for (j, s) in slacks.iter_mut().enumerate() {
                *s += spec.pi(i) * a * spec.action(i, k).net(j);
            }
        }
    }
    let out = ConvexifiedSolution {
        weights,
        objective: sol.objective,
        constraint_slacks: slacks,
    };

    for (i, w) in out.weights.iter().enumerate() {
        let total: f64 = w.iter().map(|&(_, a)| a).sum();
        if (total - 1.0).abs() > LP_CHECK_TOL || w.len() > r + 2 {
            return Err(Error::Numerical(format!(
                "state {i}: LP weights sum to {total} over {} actions",
                w.len()
            )));
        }
    }
    if let Some(s) = out.constraint_slacks.iter().find(|&&s| s > LP_CHECK_TOL) {
        return Err(Error::Numerical(format!("LP constraint violated by {s:e}")));
    }
    let re = out.reevaluate(spec, v);
    if (re - out.objective).abs() > LP_CHECK_TOL * (1.0 + out.objective.abs()) {
        return Err(Error::Numerical(format!(
            "LP objective {} disagrees with re-evaluation {re}",
            out.objective
        )));
    }
    Ok(out)
}

/// Optimal time-average cost over stable policies: the convexified optimum at `V = 1`.
pub fn optimal_stationary_cost(spec: &NetworkSpec) -> Result<f64> {
    Ok(solve_convexified_lp(spec, 1.0)?.objective)
}

/// Convenience only: proposes the stationary randomized policy with the
/// largest uniform slack by solving `max eta` subject to every queue's
/// expected net arrival `<= -eta`. Returns `None` when no positive slack
/// exists. The result still has to pass [`crate::model::verify_slackness`].
pub fn suggest_certificate(spec: &NetworkSpec) -> Result<Option<SlacknessCertificate>> {
    let (off, n) = offsets(spec);
    let eta_col = n;
    let mut objective = vec![0.0; n + 1];
    objective[eta_col] = -1.0;
    let mut lp = LinearProgram::minimize(objective);
    for j in 0..spec.queues() {
        let mut row = vec![0.0; n + 1];
        for i in 0..spec.num_states() {
            for (k, a) in spec.actions(i).iter().enumerate() {
                row[off[i] + k] = spec.pi(i) * a.net(j);
            }
        }
        row[eta_col] = 1.0;
        lp.add(row, Relation::Le, 0.0);
    }
    for i in 0..spec.num_states() {
        let mut row = vec![0.0; n + 1];
        for k in 0..spec.actions(i).len() {
            row[off[i] + k] = 1.0;
        }
        lp.add(row, Relation::Eq, 1.0);
    }
    let sol = lp.solve()?;
    let eta = sol.x[eta_col];
    if eta <= LP_CHECK_TOL {
        return Ok(None);
    }
    let weights = (0..spec.num_states())
        .map(|i| {
            let raw: Vec<(usize, f64)> = (0..spec.actions(i).len())
                .filter_map(|k| {
                    let w = sol.x[off[i] + k];
                    (w > WEIGHT_FLOOR).then_some((k, w))
                })
                .collect();
            let total: f64 = raw.iter().map(|&(_, w)| w).sum();
            raw.into_iter().map(|(k, w)| (k, w / total)).collect()
        })
        .collect();
    let mut cert = SlacknessCertificate { weights, eta };
    // Claim what the normalized weights actually achieve.
    let achieved = -cert
        .net_drift(spec)
        .into_iter()
        .fold(f64::NEG_INFINITY, f64::max);
    cert.eta = achieved.min(eta);
    Ok((cert.eta > 0.0).then_some(cert))
}

/// Outcome of one sampled property check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub samples: usize,
    pub violations: usize,
    /// Largest observed `lhs - rhs - tolerance`; positive means a violation.
    pub worst_excess: f64,
    /// Multiplier(s) at the worst sample.
    pub witness: Option<Vec<f64>>,
}

struct CheckTally {
    name: &'static str,
    samples: usize,
    violations: usize,
    worst: f64,
    witness: Option<Vec<f64>>,
}

impl CheckTally {
    fn new(name: &'static str) -> Self {
        Self {
            name,
            samples: 0,
            violations: 0,
            worst: f64::NEG_INFINITY,
            witness: None,
        }
    }

    /// Records a sample of `lhs <= rhs + tol`.
    fn record(&mut self, lhs: f64, rhs: f64, tol: f64, witness: impl FnOnce() -> Vec<f64>) {
        self.samples += 1;
        let excess = lhs - rhs - tol;
        if excess > 0.0 || excess.is_nan() {
            self.violations += 1;
        }
        if excess > self.worst || self.witness.is_none() {
            self.worst = excess;
            self.witness = Some(witness());
        }
    }

    fn finish(self) -> CheckResult {
        CheckResult {
            name: self.name.to_string(),
            passed: self.violations == 0,
            samples: self.samples,
            violations: self.violations,
            worst_excess: if self.worst.is_finite() { self.worst } else { 0.0 },
            witness: self.witness,
        }
    }
}

/// Componentwise Exponential(mean = V delta_max / eta) multipliers.
pub fn sample_gamma(spec: &NetworkSpec, v: f64, eta: f64, rng: &mut SlotRng) -> Vec<f64> {
    let mean = v * spec.delta_max() / eta;
    (0..spec.queues()).map(|_| rng.exponential(mean)).collect()
}

/// Relative tolerance scale for comparisons between dual values.
fn scale(values: &[f64]) -> f64 {
    1.0 + values.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// Checks, on `pairs` seeded random pairs `(gamma, gamma_hat)`, the
/// per-state subgradient inequality, the `B`-Lipschitz bound, the subgradient
/// norm bound and midpoint concavity of `g`. Comparisons use a tolerance of
/// `tol` times the magnitude of the dual values being compared.
pub fn check_subgradient_properties(
    spec: &NetworkSpec,
    v: f64,
    eta: f64,
    pairs: usize,
    seed: u64,
    tol: f64,
) -> Vec<CheckResult> {
    let b = spec.bound_b();
    let mut rng = SlotRng::with_stream(seed, SAMPLING_STREAM);
    let mut sub = CheckTally::new("subgradient_inequality");
    let mut lip = CheckTally::new("lipschitz_b");
    let mut norm = CheckTally::new("subgradient_norm_b");
    let mut concave = CheckTally::new("midpoint_concavity");
    for _ in 0..pairs {
        let x = sample_gamma(spec, v, eta, &mut rng);
        let y = sample_gamma(spec, v, eta, &mut rng);
        let both = || x.iter().chain(&y).copied().collect::<Vec<f64>>();
        let dist = x
            .iter()
            .zip(&y)
            .map(|(a, c)| (a - c) * (a - c))
            .sum::<f64>()
            .sqrt();
        for i in 0..spec.num_states() {
            let gx = g_si(spec, i, &x, v);
            let gy = g_si(spec, i, &y, v);
            let s = tol * scale(&[gx.value, gy.value]);
            // g_si(y) - g_si(x) <= (y - x) . G_x
            let inner: f64 = y
                .iter()
                .zip(&x)
                .zip(&gx.subgradient)
                .map(|((a, c), gg)| (a - c) * gg)
                .sum();
            sub.record(gy.value - gx.value, inner, s, both);
            lip.record((gy.value - gx.value).abs(), b * dist, s, both);
            let gnorm = gx.subgradient.iter().map(|z| z * z).sum::<f64>().sqrt();
            norm.record(gnorm, b, 1e-12 * b, || x.clone());
        }
        let mid: Vec<f64> = x.iter().zip(&y).map(|(a, c)| 0.5 * a + 0.5 * c).collect();
        let (gx, gy, gm) = (g_value(spec, &x, v), g_value(spec, &y, v), g_value(spec, &mid, v));
        concave.record(0.5 * gx + 0.5 * gy, gm, tol * scale(&[gx, gy, gm]), both);
    }
    vec![sub.finish(), lip.finish(), norm.finish(), concave.finish()]
}

#[derive(Debug, Clone, PartialEq)]
pub struct DualityCheckConfig {
    /// Random multipliers sampled on top of `0` and the ascent optimum.
    pub samples: usize,
    pub seed: u64,
    /// Relative tolerance for `|g* - V f*| <= tol (1 + V f*)`.
    pub gap_tol: f64,
    pub ascent: AscentParams,
}

impl Default for DualityCheckConfig {
    fn default() -> Self {
        Self {
            samples: 100,
            seed: 0,
            gap_tol: 1e-6,
            ascent: AscentParams::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DualityReport {
    pub v: f64,
    pub eta: f64,
    pub g_star: f64,
    pub gamma_star: Vec<f64>,
    pub ascent_gap: f64,
    pub opt_c: f64,
    pub f_star_av: f64,
    pub checks: Vec<CheckResult>,
}

impl DualityReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failed_checks(&self) -> Vec<&str> {
        self.checks
            .iter()
            .filter(|c| !c.passed)
            .map(|c| c.name.as_str())
            .collect()
    }
}

fn single_check(name: &'static str, lhs: f64, rhs: f64, tol: f64, witness: Vec<f64>) -> CheckResult {
    let mut t = CheckTally::new(name);
    t.record(lhs, rhs, tol, || witness);
    t.finish()
}

/// Numerically verifies zero duality gap and the surrounding identities:
/// `V f* = OPT_c`, `OPT_c = g*`, `g_c = g` on samples (plus `g_c` below the
/// convexified Lagrangian at random weights), `g <= V f*` and
/// `g(gamma) <= V delta_max - eta sum gamma`.
pub fn verify_strong_duality(
    spec: &NetworkSpec,
    v: f64,
    eta: f64,
    cfg: &DualityCheckConfig,
) -> Result<DualityReport> {
    if !(eta > 0.0) {
        return Err(Error::InvalidArgument(format!("eta = {eta} must be positive")));
    }
    let lp = solve_convexified_lp(spec, v)?;
    let f_star = optimal_stationary_cost(spec)?;
    let mut params = cfg.ascent.clone();
    params.eta = Some(eta);
    let opt = maximize_dual(spec, v, &params)?;
    let vf = v * f_star;

    let mut checks = vec![
        single_check(
            "v_fstar_equals_lp_optimum",
            (vf - lp.objective).abs(),
            0.0,
            LP_CHECK_TOL * (1.0 + vf.abs()),
            vec![],
        ),
        single_check(
            "lp_optimum_equals_g_star",
            (lp.objective - opt.value).abs(),
            0.0,
            cfg.gap_tol * (1.0 + lp.objective.abs()),
            opt.gamma.clone(),
        ),
        single_check(
            "g_star_equals_v_fstar",
            (opt.value - vf).abs(),
            0.0,
            cfg.gap_tol * (1.0 + vf.abs()),
            opt.gamma.clone(),
        ),
    ];

    let mut rng = SlotRng::with_stream(cfg.seed, SAMPLING_STREAM);
    let mut points = vec![vec![0.0; spec.queues()], opt.gamma.clone()];
    points.extend((0..cfg.samples).map(|_| sample_gamma(spec, v, eta, &mut rng)));

    let mut identity = CheckTally::new("convexified_dual_equals_dual");
    let mut weights_above = CheckTally::new("convexified_lagrangian_above_dual");
    let mut below_opt = CheckTally::new("dual_below_v_fstar");
    let mut slack_bound = CheckTally::new("dual_below_slack_bound");
    for gamma in &points {
        let gv = g_value(spec, gamma, v);
        let gc = g_convexified(spec, gamma, v);
        let s = scale(&[gv, gc]);
        identity.record((gc - gv).abs(), 0.0, 1e-10 * s, || gamma.clone());
        let w: Vec<Vec<f64>> = (0..spec.num_states())
            .map(|i| {
                let raw: Vec<f64> = (0..spec.actions(i).len()).map(|_| rng.exponential(1.0)).collect();
                let t: f64 = raw.iter().sum();
                raw.into_iter().map(|x| x / t).collect()
            })
            .collect();
        let lag = convexified_lagrangian(spec, gamma, v, &w);
        weights_above.record(gc, lag, 1e-12 * scale(&[gc, lag]), || gamma.clone());
        below_opt.record(gv, vf, 1e-9, || gamma.clone());
        let bound = v * spec.delta_max() - eta * gamma.iter().sum::<f64>();
        slack_bound.record(gv, bound, 1e-9, || gamma.clone());
    }
    checks.extend([
        identity.finish(),
        weights_above.finish(),
        below_opt.finish(),
        slack_bound.finish(),
    ]);

    Ok(DualityReport {
        v,
        eta,
        g_star: opt.value,
        gamma_star: opt.gamma.clone(),
        ascent_gap: opt.gap(),
        opt_c: lp.objective,
        f_star_av: f_star,
        checks,
    })
}
