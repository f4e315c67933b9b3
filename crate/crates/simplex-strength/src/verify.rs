//! Randomized verification harness for the strength bounds: perturbation
//! (Lipschitz) checks, the three determinant/edge bound checks, and the
//! isometry/scaling invariance checks.
//!
//! Every trial derives its randomness purely from `(seed, trial index)`, and
//! reports aggregate through associative, commutative merges (maxima, counts,
//! and keep-smallest-trial example lists), so sequential and parallel
//! execution produce identical reports. The `parallel` feature enables a
//! rayon-backed trial loop; without it every execution mode runs
//! sequentially.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::bounds::{lambda_bound, lemma_bounds};
use crate::cayley_menger::{hat_partial_derivative, HatMatrix};
use crate::geometry::{DistanceMatrix, PointCloudSimplex};
use crate::strength::{signed_strength, strength_from_distances};
use crate::{Error, Result};

/// Absolute slack on the perturbation inequalities, as a multiple of
/// `lambda * epsilon`; covers f64 rounding of the two strength evaluations.
const LIPSCHITZ_SLACK: f64 = 1e-9;

/// Relative slack on the three determinant/edge bound checks; the exact
/// ratios can brush their bounds (the one-dimensional ones sit exactly on
/// them) and rounding must not turn that into a violation.
const LEMMA_SLACK: f64 = 1e-12;

/// Tolerance of the analytic-vs-finite-difference derivative cross-check.
const FD_TOL: f64 = 1e-6;

/// The derivative crosses zero, so the finite-difference comparison is
/// relative with an absolute floor of this fraction of the derivative's
/// global scale `det_derivative_bound * p^(2n-1)`.
const FD_FLOOR_FRAC: f64 = 0.1;

/// Generic-simplex rejection threshold for the invariance suite: accepted
/// simplices have `|edge det| >= 1e-2 *` (product of edge norms). The
/// squared volume is quadratic in the edge determinant, so its relative
/// rounding error grows like `u / ratio^2`; this threshold keeps that near
/// 1e-12, well under the 1e-9 comparison tolerance. Thinner simplices are
/// the perturbation suite's job, which checks absolute (not relative)
/// differences there.
const GENERIC_MIN_RATIO: f64 = 1e-2;

/// Relative tolerance of the invariance/equivariance checks.
const INVARIANCE_TOL: f64 = 1e-9;

/// Cap on stored violation/flag examples per check; counts are never capped.
const MAX_EXAMPLES: usize = 16;

const SALT_LIPSCHITZ: u64 = 1;
const SALT_LEMMA: u64 = 2;
const SALT_INVARIANCE: u64 = 3;

/// Parameters of a randomized verification run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialConfig {
    /// Simplex dimension `n`.
    pub dim: usize,
    /// Number of trials.
    pub trials: u64,
    /// Master seed; together with the trial index it determines every draw.
    pub seed: u64,
    /// Coordinate magnitude: vertices are uniform in `[-scale, scale]^n`.
    pub scale: f64,
    /// Perturbation radii are log-uniform in `[lo, hi]`.
    pub epsilon_range: (f64, f64),
    /// Fraction of trials that squash the last coordinate, producing
    /// near-degenerate simplices (the sign-crossing regime).
    pub near_degenerate_fraction: f64,
}

impl TrialConfig {
    /// Config with the default trial counts and ranges for dimension `n`.
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            trials: 10_000,
            seed: 0,
            scale: 1.0,
            epsilon_range: (1e-6, 1e-1),
            near_degenerate_fraction: 0.25,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim < 1 {
            return Err(Error::InvalidArgument(
                "dimension must be at least 1".into(),
            ));
        }
        if self.trials < 1 {
            return Err(Error::InvalidArgument(
                "at least one trial is required".into(),
            ));
        }
        if !(self.scale.is_finite() && self.scale > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "scale must be positive and finite, got {}",
                self.scale
            )));
        }
        let (lo, hi) = self.epsilon_range;
        if !(lo.is_finite() && hi.is_finite() && 0.0 < lo && lo <= hi) {
            return Err(Error::InvalidArgument(format!(
                "epsilon range must satisfy 0 < lo <= hi, got ({lo}, {hi})"
            )));
        }
        let f = self.near_degenerate_fraction;
        if !(f.is_finite() && (0.0..=1.0).contains(&f)) {
            return Err(Error::InvalidArgument(format!(
                "near-degenerate fraction must lie in [0, 1], got {f}"
            )));
        }
        Ok(())
    }
}

/// Trial-loop execution strategy. Reports are identical either way.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    /// Single-threaded loop.
    Sequential,
    /// Rayon work-stealing loop; falls back to sequential when the crate is
    /// built without the `parallel` feature.
    #[default]
    Parallel,
}

/// One recorded violation or flag, replayable from `(config.seed, trial)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialSample {
    pub trial: u64,
    pub observed: f64,
    pub bound: f64,
}

/// Outcome of one named check across all trials.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckRecord {
    pub name: String,
    /// Number of comparisons performed.
    pub samples: u64,
    /// The bound tested against.
    pub bound: f64,
    /// Largest observed value of the checked quantity.
    pub max_observed: f64,
    /// Trial achieving `max_observed` (smallest index on ties).
    pub worst_trial: Option<u64>,
    pub violations: u64,
    /// Up to [`MAX_EXAMPLES`] violating trials with the smallest indices.
    pub violation_examples: Vec<TrialSample>,
}

/// Aggregated outcome of one suite run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialReport {
    pub suite: String,
    pub config: TrialConfig,
    pub checks: Vec<CheckRecord>,
    /// Auxiliary counts: `near_degenerate_trials`, `sign_crossings`,
    /// `flagged_signed_band`, `fd_skipped` (whichever apply to the suite).
    pub counters: BTreeMap<String, u64>,
    /// Signed-strength differences that exceeded `2 lambda eps` but stayed
    /// within `4 lambda eps`; reported, not failed.
    pub flagged: Vec<TrialSample>,
    /// True exactly when no check recorded a violation.
    pub pass: bool,
}

impl TrialReport {
    pub fn violations(&self) -> u64 {
        self.checks.iter().map(|c| c.violations).sum()
    }

    pub fn check(&self, name: &str) -> Option<&CheckRecord> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn counter(&self, name: &str) -> u64 {
        self.counters.get(name).copied().unwrap_or(0)
    }
}

// ---------------------------------------------------------------------------
// deterministic sampling

fn trial_rng(seed: u64, salt: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    rng.set_stream(trial);
    rng
}

/// Random simplex with coordinates uniform in `[-scale, scale]`; a squash
/// factor below 1 multiplies the last coordinate of every vertex by it,
/// flattening the simplex toward a hyperplane (squash 0 is exactly
/// degenerate). Deterministic given the generator state.
pub fn random_simplex<R: Rng>(
    dim: usize,
    scale: f64,
    squash: f64,
    rng: &mut R,
) -> PointCloudSimplex {
    assert!(dim >= 1, "dimension must be at least 1");
    assert!(scale > 0.0, "scale must be positive");
    assert!((0.0..=1.0).contains(&squash), "squash must lie in [0, 1]");
    let vertices: Vec<Vec<f64>> = (0..=dim)
        .map(|_| {
            let mut v: Vec<f64> = (0..dim).map(|_| rng.random_range(-scale..=scale)).collect();
            if squash < 1.0 {
                v[dim - 1] *= squash;
            }
            v
        })
        .collect();
    PointCloudSimplex::new(vertices).expect("generated coordinates are finite")
}

/// Displaces every vertex by an independent uniform draw from the closed
/// Euclidean `eps`-ball; no displacement norm exceeds `eps`.
pub fn perturb<R: Rng>(s: &PointCloudSimplex, eps: f64, rng: &mut R) -> PointCloudSimplex {
    assert!(eps >= 0.0, "perturbation radius must be non-negative");
    if eps == 0.0 {
        return s.clone();
    }
    let n = s.dim();
    let vertices: Vec<Vec<f64>> = s
        .vertices()
        .iter()
        .map(|v| {
            let step = ball_sample(n, eps, rng);
            v.iter().zip(&step).map(|(x, dx)| x + dx).collect()
        })
        .collect();
    PointCloudSimplex::new(vertices).expect("perturbed coordinates are finite")
}

/// Uniform draw from the closed `eps`-ball: Gaussian direction, radius
/// `eps * u^(1/n)`.
fn ball_sample<R: Rng>(n: usize, eps: f64, rng: &mut R) -> Vec<f64> {
    let mut dir: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
    let mut norm = dir.iter().map(|x| x * x).sum::<f64>().sqrt();
    while norm == 0.0 {
        dir = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        norm = dir.iter().map(|x| x * x).sum::<f64>().sqrt();
    }
    let radius = eps * rng.random::<f64>().powf(1.0 / n as f64);
    for x in &mut dir {
        *x *= radius / norm;
    }
    // Rounding can leave the norm a few ulps above eps; pull it back in.
    loop {
        let r = dir.iter().map(|x| x * x).sum::<f64>().sqrt();
        if r <= eps {
            break;
        }
        for x in &mut dir {
            *x *= eps / r;
        }
    }
    dir
}

/// The wide flat triangle on `(0, eps)`, `(-l, 0)`, `(l, 0)`. Its signed
/// area is `l * eps`, which changes at the unbounded rate `l` as `eps`
/// crosses 0, while its strength stays below `eps / 2`.
pub fn flat_triangle(l: f64, eps: f64) -> PointCloudSimplex {
    assert!(
        l > 0.0 && l.is_finite(),
        "base half-length must be positive"
    );
    assert!(eps.is_finite(), "apex height must be finite");
    PointCloudSimplex::new(vec![vec![0.0, eps], vec![-l, 0.0], vec![l, 0.0]])
        .expect("coordinates are finite")
}

/// Central finite-difference gradient of the strength with respect to each
/// unsquared distance, over pairs `(i, j)` with `i < j` in row order.
///
/// Entries whose perturbed matrix is not a realizable distance matrix (the
/// distance would go negative, or the squared volume fails the metric check)
/// are skipped and reported as `None`.
pub fn fd_gradient(d: &DistanceMatrix, h: f64) -> Vec<Option<f64>> {
    assert!(h > 0.0, "finite-difference step must be positive");
    let m = d.size();
    let mut grad = Vec::with_capacity(m * (m - 1) / 2);
    for i in 0..m {
        for j in i + 1..m {
            let dij = d.get(i, j);
            let entry = (|| {
                let plus = strength_from_distances(&d.with_distance(i, j, dij + h).ok()?).ok()?;
                let minus = strength_from_distances(&d.with_distance(i, j, dij - h).ok()?).ok()?;
                Some((plus - minus) / (2.0 * h))
            })();
            grad.push(entry);
        }
    }
    grad
}

fn draw_trial_simplex<R: Rng>(cfg: &TrialConfig, rng: &mut R) -> (PointCloudSimplex, bool) {
    let near = rng.random::<f64>() < cfg.near_degenerate_fraction;
    let squash = if near {
        10f64.powf(rng.random_range(-8.0..=-2.0))
    } else {
        1.0
    };
    (random_simplex(cfg.dim, cfg.scale, squash, rng), near)
}

fn draw_epsilon<R: Rng>(cfg: &TrialConfig, rng: &mut R) -> f64 {
    let (lo, hi) = cfg.epsilon_range;
    (lo.ln() + rng.random::<f64>() * (hi.ln() - lo.ln())).exp()
}

fn draw_generic_simplex<R: Rng>(cfg: &TrialConfig, rng: &mut R) -> PointCloudSimplex {
    for _ in 0..64 {
        let s = random_simplex(cfg.dim, cfg.scale, 1.0, rng);
        let (det, scale) = s.edge_det_and_scale();
        if det.abs() >= GENERIC_MIN_RATIO * scale {
            return s;
        }
    }
    random_simplex(cfg.dim, cfg.scale, 1.0, rng)
}

// ---------------------------------------------------------------------------
// report aggregation

#[derive(Clone)]
struct CheckAcc {
    bound: f64,
    samples: u64,
    max_observed: f64,
    worst_trial: Option<u64>,
    violations: u64,
    examples: Vec<TrialSample>,
}

impl CheckAcc {
    fn new(bound: f64) -> Self {
        Self {
            bound,
            samples: 0,
            max_observed: f64::NEG_INFINITY,
            worst_trial: None,
            violations: 0,
            examples: Vec::new(),
        }
    }

    fn observe(&mut self, trial: u64, observed: f64, violated: bool) {
        self.samples += 1;
        let better = observed > self.max_observed
            || (observed == self.max_observed && self.worst_trial.is_none_or(|t| trial < t));
        if better {
            self.max_observed = observed;
            self.worst_trial = Some(trial);
        }
        if violated {
            self.violations += 1;
            insert_example(
                &mut self.examples,
                TrialSample {
                    trial,
                    observed,
                    bound: self.bound,
                },
            );
        }
    }

    fn merge(mut self, other: Self) -> Self {
        self.samples += other.samples;
        self.violations += other.violations;
        let take_other = other.max_observed > self.max_observed
            || (other.max_observed == self.max_observed
                && match (self.worst_trial, other.worst_trial) {
                    (Some(a), Some(b)) => b < a,
                    (None, Some(_)) => true,
                    _ => false,
                });
        if take_other {
            self.max_observed = other.max_observed;
            self.worst_trial = other.worst_trial;
        }
        self.examples = merge_examples(self.examples, other.examples);
        self
    }

    fn into_record(self, name: &str) -> CheckRecord {
        CheckRecord {
            name: name.to_string(),
            samples: self.samples,
            bound: self.bound,
            max_observed: if self.samples == 0 {
                0.0
            } else {
                self.max_observed
            },
            worst_trial: self.worst_trial,
            violations: self.violations,
            violation_examples: self.examples,
        }
    }
}

/// Keeps the list sorted by trial index and capped at [`MAX_EXAMPLES`];
/// insertion order does not matter, so parallel merges stay deterministic.
fn insert_example(v: &mut Vec<TrialSample>, s: TrialSample) {
    let pos = v.partition_point(|e| e.trial < s.trial);
    if v.len() < MAX_EXAMPLES {
        v.insert(pos, s);
    } else if pos < MAX_EXAMPLES {
        v.insert(pos, s);
        v.pop();
    }
}

fn merge_examples(a: Vec<TrialSample>, b: Vec<TrialSample>) -> Vec<TrialSample> {
    let mut out = Vec::with_capacity((a.len() + b.len()).min(MAX_EXAMPLES));
    let (mut ia, mut ib) = (a.into_iter().peekable(), b.into_iter().peekable());
    while out.len() < MAX_EXAMPLES {
        match (ia.peek(), ib.peek()) {
            (Some(x), Some(y)) => {
                if x.trial <= y.trial {
                    out.push(ia.next().unwrap());
                } else {
                    out.push(ib.next().unwrap());
                }
            }
            (Some(_), None) => out.push(ia.next().unwrap()),
            (None, Some(_)) => out.push(ib.next().unwrap()),
            (None, None) => break,
        }
    }
    out
}

fn fold_trials<A, O, M>(trials: u64, exec: Execution, empty: A, observe: O, merge: M) -> A
where
    A: Clone + Send + Sync,
    O: Fn(A, u64) -> A + Sync + Send,
    M: Fn(A, A) -> A + Sync + Send,
{
    match exec {
        Execution::Sequential => (0..trials).fold(empty, observe),
        Execution::Parallel => {
            #[cfg(feature = "parallel")]
            {
                use rayon::prelude::*;
                (0..trials)
                    .into_par_iter()
                    .fold(|| empty.clone(), &observe)
                    .reduce(|| empty.clone(), &merge)
            }
            #[cfg(not(feature = "parallel"))]
            {
                let _ = &merge;
                (0..trials).fold(empty, observe)
            }
        }
    }
}

fn report(
    suite: &str,
    cfg: &TrialConfig,
    named: Vec<(&str, CheckAcc)>,
    counters: BTreeMap<String, u64>,
    flagged: Vec<TrialSample>,
) -> TrialReport {
    let checks: Vec<CheckRecord> = named
        .into_iter()
        .map(|(name, acc)| acc.into_record(name))
        .collect();
    let pass = checks.iter().all(|c| c.violations == 0);
    TrialReport {
        suite: suite.to_string(),
        config: cfg.clone(),
        checks,
        counters,
        flagged,
        pass,
    }
}

// ---------------------------------------------------------------------------
// Lipschitz suite

/// Everything measured in one perturbation trial; recomputable from
/// `(config, trial)` for replay.
#[derive(Debug, Clone, PartialEq)]
pub struct LipschitzSample {
    pub trial: u64,
    pub epsilon: f64,
    pub sigma_delta: f64,
    pub signed_delta: f64,
    pub near_degenerate: bool,
    pub sign_crossed: bool,
}

/// Runs perturbation trial `trial`: draws `T`, a radius `eps`, the perturbed
/// `Q`, and measures both strength differences.
pub fn lipschitz_trial(cfg: &TrialConfig, trial: u64) -> LipschitzSample {
    let mut rng = trial_rng(cfg.seed, SALT_LIPSCHITZ, trial);
    let (t, near_degenerate) = draw_trial_simplex(cfg, &mut rng);
    let epsilon = draw_epsilon(cfg, &mut rng);
    let q = perturb(&t, epsilon, &mut rng);
    let rt = signed_strength(&t).expect("coordinate simplices are realizable");
    let rq = signed_strength(&q).expect("coordinate simplices are realizable");
    LipschitzSample {
        trial,
        epsilon,
        sigma_delta: (rt.sigma - rq.sigma).abs(),
        signed_delta: (rt.signed - rq.signed).abs(),
        near_degenerate,
        sign_crossed: rt.sign != rq.sign,
    }
}

#[derive(Clone)]
struct LipschitzAcc {
    lambda: f64,
    sigma: CheckAcc,
    signed: CheckAcc,
    near_degenerate: u64,
    sign_crossings: u64,
    flag_count: u64,
    flagged: Vec<TrialSample>,
}

impl LipschitzAcc {
    fn new(lambda: f64) -> Self {
        Self {
            lambda,
            sigma: CheckAcc::new(lambda),
            signed: CheckAcc::new(lambda),
            near_degenerate: 0,
            sign_crossings: 0,
            flag_count: 0,
            flagged: Vec::new(),
        }
    }

    fn observe(mut self, s: LipschitzSample) -> Self {
        let two_lambda_eps = 2.0 * self.lambda * s.epsilon;
        let slack = LIPSCHITZ_SLACK * self.lambda * s.epsilon;
        let ratio_scale = 2.0 * s.epsilon;

        self.sigma.observe(
            s.trial,
            s.sigma_delta / ratio_scale,
            s.sigma_delta > two_lambda_eps + slack,
        );

        // The signed difference has a reported band between 2 and 4 lambda
        // eps: inside it the trial is flagged, beyond it it is a violation.
        let signed_violation = s.signed_delta > 2.0 * two_lambda_eps + slack;
        let signed_flag = !signed_violation && s.signed_delta > two_lambda_eps + slack;
        self.signed
            .observe(s.trial, s.signed_delta / ratio_scale, signed_violation);
        if signed_flag {
            self.flag_count += 1;
            insert_example(
                &mut self.flagged,
                TrialSample {
                    trial: s.trial,
                    observed: s.signed_delta / ratio_scale,
                    bound: self.lambda,
                },
            );
        }

        self.near_degenerate += u64::from(s.near_degenerate);
        self.sign_crossings += u64::from(s.sign_crossed);
        self
    }

    fn merge(mut self, other: Self) -> Self {
        self.sigma = self.sigma.merge(other.sigma);
        self.signed = self.signed.merge(other.signed);
        self.near_degenerate += other.near_degenerate;
        self.sign_crossings += other.sign_crossings;
        self.flag_count += other.flag_count;
        self.flagged = merge_examples(self.flagged, other.flagged);
        self
    }
}

/// Perturbation suite with the default (parallel when available) execution.
pub fn run_lipschitz_suite(cfg: &TrialConfig) -> Result<TrialReport> {
    run_lipschitz_suite_with(cfg, Execution::default())
}

pub fn run_lipschitz_suite_with(cfg: &TrialConfig, exec: Execution) -> Result<TrialReport> {
    cfg.validate()?;
    let lambda = lambda_bound(cfg.dim);
    let acc = fold_trials(
        cfg.trials,
        exec,
        LipschitzAcc::new(lambda),
        |acc, i| acc.observe(lipschitz_trial(cfg, i)),
        LipschitzAcc::merge,
    );
    let mut counters = BTreeMap::new();
    counters.insert("near_degenerate_trials".to_string(), acc.near_degenerate);
    counters.insert("sign_crossings".to_string(), acc.sign_crossings);
    counters.insert("flagged_signed_band".to_string(), acc.flag_count);
    Ok(report(
        "lipschitz",
        cfg,
        vec![
            ("sigma_lipschitz", acc.sigma),
            ("signed_lipschitz", acc.signed),
        ],
        counters,
        acc.flagged,
    ))
}

// ---------------------------------------------------------------------------
// lemma suite

/// Ratios measured in one bound-check trial.
#[derive(Debug, Clone, PartialEq)]
pub struct LemmaSample {
    pub trial: u64,
    /// `max d_ij / p`, bounded by `2/n`.
    pub edge_ratio: f64,
    /// `|det| / p^(2n)`, bounded by `r_(n+2) (2/n)^(2n)`.
    pub det_ratio: f64,
    /// Worst `|d det / d d_ij| / p^(2n-1)` over pairs.
    pub derivative_ratio: f64,
    /// Worst normalized analytic-vs-finite-difference mismatch over pairs.
    pub fd_mismatch: f64,
    pub fd_checked: u64,
    pub fd_skipped: u64,
    pub near_degenerate: bool,
}

/// Runs bound-check trial `trial` of the lemma suite.
pub fn lemma_trial(cfg: &TrialConfig, trial: u64) -> LemmaSample {
    let table = lemma_bounds(cfg.dim).expect("dimension within the rencontre range");
    let mut rng = trial_rng(cfg.seed, SALT_LEMMA, trial);
    let (s, near_degenerate) = draw_trial_simplex(cfg, &mut rng);
    let d = s.pairwise_distances();
    let p = d.half_perimeter();
    let n = cfg.dim as i32;

    let mut edge_ratio: f64 = 0.0;
    let m = d.size();
    for i in 0..m {
        for j in i + 1..m {
            edge_ratio = edge_ratio.max(d.get(i, j) / p);
        }
    }

    let det = HatMatrix::from_distances(&d).determinant();
    let det_ratio = det.abs() / p.powi(2 * n);

    let deriv_scale = table.det_derivative_bound * p.powi(2 * n - 1);
    let h = 1e-6 * p;
    let mut derivative_ratio: f64 = 0.0;
    let mut fd_mismatch: f64 = 0.0;
    let mut fd_checked = 0;
    let mut fd_skipped = 0;
    for i in 0..m {
        for j in i + 1..m {
            let analytic = hat_partial_derivative(&d, i, j).expect("indices are in range");
            derivative_ratio = derivative_ratio.max(analytic.abs() / p.powi(2 * n - 1));

            let dij = d.get(i, j);
            if dij - h < 0.0 {
                fd_skipped += 1;
                continue;
            }
            let plus =
                HatMatrix::from_distances(&d.with_distance(i, j, dij + h).expect("valid distance"))
                    .determinant();
            let minus =
                HatMatrix::from_distances(&d.with_distance(i, j, dij - h).expect("valid distance"))
                    .determinant();
            let fd = (plus - minus) / (2.0 * h);
            let denom = analytic.abs().max(FD_FLOOR_FRAC * deriv_scale);
            fd_mismatch = fd_mismatch.max((analytic - fd).abs() / denom);
            fd_checked += 1;
        }
    }

    LemmaSample {
        trial,
        edge_ratio,
        det_ratio,
        derivative_ratio,
        fd_mismatch,
        fd_checked,
        fd_skipped,
        near_degenerate,
    }
}

#[derive(Clone)]
struct LemmaAcc {
    edge: CheckAcc,
    det: CheckAcc,
    derivative: CheckAcc,
    fd: CheckAcc,
    fd_skipped: u64,
    near_degenerate: u64,
}

impl LemmaAcc {
    fn new(edge: f64, det: f64, derivative: f64) -> Self {
        Self {
            edge: CheckAcc::new(edge),
            det: CheckAcc::new(det),
            derivative: CheckAcc::new(derivative),
            fd: CheckAcc::new(FD_TOL),
            fd_skipped: 0,
            near_degenerate: 0,
        }
    }

    fn observe(mut self, s: LemmaSample) -> Self {
        let slack = 1.0 + LEMMA_SLACK;
        self.edge.observe(
            s.trial,
            s.edge_ratio,
            s.edge_ratio > self.edge.bound * slack,
        );
        self.det
            .observe(s.trial, s.det_ratio, s.det_ratio > self.det.bound * slack);
        self.derivative.observe(
            s.trial,
            s.derivative_ratio,
            s.derivative_ratio > self.derivative.bound * slack,
        );
        if s.fd_checked > 0 {
            self.fd
                .observe(s.trial, s.fd_mismatch, s.fd_mismatch > FD_TOL);
        }
        self.fd_skipped += s.fd_skipped;
        self.near_degenerate += u64::from(s.near_degenerate);
        self
    }

    fn merge(mut self, other: Self) -> Self {
        self.edge = self.edge.merge(other.edge);
        self.det = self.det.merge(other.det);
        self.derivative = self.derivative.merge(other.derivative);
        self.fd = self.fd.merge(other.fd);
        self.fd_skipped += other.fd_skipped;
        self.near_degenerate += other.near_degenerate;
        self
    }
}

/// Determinant/edge bound suite with the default execution.
pub fn run_lemma_suite(cfg: &TrialConfig) -> Result<TrialReport> {
    run_lemma_suite_with(cfg, Execution::default())
}

pub fn run_lemma_suite_with(cfg: &TrialConfig, exec: Execution) -> Result<TrialReport> {
    cfg.validate()?;
    let table = lemma_bounds(cfg.dim)?;
    let acc = fold_trials(
        cfg.trials,
        exec,
        LemmaAcc::new(
            table.edge_ratio_bound,
            table.det_ratio_bound,
            table.det_derivative_bound,
        ),
        |acc, i| acc.observe(lemma_trial(cfg, i)),
        LemmaAcc::merge,
    );
    let mut counters = BTreeMap::new();
    counters.insert("fd_skipped".to_string(), acc.fd_skipped);
    counters.insert("near_degenerate_trials".to_string(), acc.near_degenerate);
    Ok(report(
        "lemma",
        cfg,
        vec![
            ("edge_ratio", acc.edge),
            ("det_ratio", acc.det),
            ("derivative_ratio", acc.derivative),
            ("derivative_fd_agreement", acc.fd),
        ],
        counters,
        Vec::new(),
    ))
}

// ---------------------------------------------------------------------------
// invariance suite

/// Deviations measured in one invariance trial (0 means exact agreement).
#[derive(Debug, Clone, PartialEq)]
pub struct InvarianceSample {
    pub trial: u64,
    /// Recomputation on the identical simplex; bitwise equality expected.
    pub identity_dev: f64,
    /// Relative strength deviation under a random rotation + translation.
    pub rotation_sigma_dev: f64,
    /// Relative signed-strength deviation under the same rigid motion.
    pub rotation_signed_dev: f64,
    /// `|sigma_reflected - sigma|`; reflection preserves distances exactly.
    pub reflection_sigma_dev: f64,
    /// `|signed_reflected + signed|`; reflection negates the sign exactly.
    pub reflection_signed_dev: f64,
    /// Worst relative deviation of `sigma(c s)` from `c sigma(s)` over
    /// `c` in `{1e-3, 1e3}`.
    pub scaling_sigma_dev: f64,
    pub scaling_signed_dev: f64,
}

fn relative_dev(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

fn apply_rigid<R: Rng>(
    s: &PointCloudSimplex,
    rotation: &[f64],
    rng: &mut R,
    scale: f64,
) -> PointCloudSimplex {
    let n = s.dim();
    let translation: Vec<f64> = (0..n).map(|_| rng.random_range(-scale..=scale)).collect();
    let vertices = s
        .vertices()
        .iter()
        .map(|v| {
            (0..n)
                .map(|r| {
                    let mut x = translation[r];
                    for c in 0..n {
                        x += rotation[r * n + c] * v[c];
                    }
                    x
                })
                .collect()
        })
        .collect();
    PointCloudSimplex::new(vertices).expect("transformed coordinates are finite")
}

/// Random rotation matrix (row-major, determinant +1) from Gram-Schmidt
/// orthonormalization of a Gaussian matrix.
fn random_rotation<R: Rng>(n: usize, rng: &mut R) -> Vec<f64> {
    loop {
        let mut q: Vec<f64> = (0..n * n).map(|_| rng.sample(StandardNormal)).collect();
        if !orthonormalize_columns(&mut q, n) {
            continue;
        }
        let mut copy = q.clone();
        if crate::mat::determinant_in_place(&mut copy, n) < 0.0 {
            for r in 0..n {
                q[r * n + (n - 1)] = -q[r * n + (n - 1)];
            }
        }
        return q;
    }
}

fn orthonormalize_columns(a: &mut [f64], n: usize) -> bool {
    for col in 0..n {
        for prev in 0..col {
            let dot: f64 = (0..n).map(|r| a[r * n + col] * a[r * n + prev]).sum();
            for r in 0..n {
                a[r * n + col] -= dot * a[r * n + prev];
            }
        }
        let norm: f64 = (0..n)
            .map(|r| a[r * n + col] * a[r * n + col])
            .sum::<f64>()
            .sqrt();
        if norm < 1e-8 {
            return false;
        }
        for r in 0..n {
            a[r * n + col] /= norm;
        }
    }
    true
}

/// Runs invariance trial `trial`. Trials draw generic (well-conditioned)
/// simplices: relative comparisons at 1e-9 are meaningless inside the
/// degeneracy sliver, which the perturbation suite covers instead.
pub fn invariance_trial(cfg: &TrialConfig, trial: u64) -> InvarianceSample {
    let mut rng = trial_rng(cfg.seed, SALT_INVARIANCE, trial);
    let s = draw_generic_simplex(cfg, &mut rng);
    let n = cfg.dim;
    let base = signed_strength(&s).expect("coordinate simplices are realizable");

    let again = signed_strength(&s.clone()).expect("coordinate simplices are realizable");
    let identity_dev = (again.sigma - base.sigma)
        .abs()
        .max((again.signed - base.signed).abs());

    let rotation = random_rotation(n, &mut rng);
    let moved = apply_rigid(&s, &rotation, &mut rng, cfg.scale);
    let rot = signed_strength(&moved).expect("coordinate simplices are realizable");
    let rotation_sigma_dev = relative_dev(rot.sigma, base.sigma);
    let rotation_signed_dev = relative_dev(rot.signed, base.signed);

    let axis = rng.random_range(0..n);
    let reflected: Vec<Vec<f64>> = s
        .vertices()
        .iter()
        .map(|v| {
            let mut w = v.clone();
            w[axis] = -w[axis];
            w
        })
        .collect();
    let refl = signed_strength(&PointCloudSimplex::new(reflected).expect("finite"))
        .expect("coordinate simplices are realizable");
    let reflection_sigma_dev = (refl.sigma - base.sigma).abs();
    let reflection_signed_dev = (refl.signed + base.signed).abs();

    let mut scaling_sigma_dev: f64 = 0.0;
    let mut scaling_signed_dev: f64 = 0.0;
    for c in [1e-3, 1e3] {
        let scaled: Vec<Vec<f64>> = s
            .vertices()
            .iter()
            .map(|v| v.iter().map(|x| c * x).collect())
            .collect();
        let sc = signed_strength(&PointCloudSimplex::new(scaled).expect("finite"))
            .expect("coordinate simplices are realizable");
        scaling_sigma_dev = scaling_sigma_dev.max(relative_dev(sc.sigma, c * base.sigma));
        scaling_signed_dev = scaling_signed_dev.max(relative_dev(sc.signed, c * base.signed));
    }

    InvarianceSample {
        trial,
        identity_dev,
        rotation_sigma_dev,
        rotation_signed_dev,
        reflection_sigma_dev,
        reflection_signed_dev,
        scaling_sigma_dev,
        scaling_signed_dev,
    }
}

#[derive(Clone)]
struct InvarianceAcc {
    identity: CheckAcc,
    rotation_sigma: CheckAcc,
    rotation_signed: CheckAcc,
    reflection_sigma: CheckAcc,
    reflection_signed: CheckAcc,
    scaling_sigma: CheckAcc,
    scaling_signed: CheckAcc,
}

impl InvarianceAcc {
    fn new() -> Self {
        Self {
            identity: CheckAcc::new(0.0),
            rotation_sigma: CheckAcc::new(INVARIANCE_TOL),
            rotation_signed: CheckAcc::new(INVARIANCE_TOL),
            reflection_sigma: CheckAcc::new(0.0),
            reflection_signed: CheckAcc::new(0.0),
            scaling_sigma: CheckAcc::new(INVARIANCE_TOL),
            scaling_signed: CheckAcc::new(INVARIANCE_TOL),
        }
    }

    fn observe(mut self, s: InvarianceSample) -> Self {
        let t = s.trial;
        self.identity
            .observe(t, s.identity_dev, s.identity_dev > 0.0);
        self.rotation_sigma.observe(
            t,
            s.rotation_sigma_dev,
            s.rotation_sigma_dev > INVARIANCE_TOL,
        );
        self.rotation_signed.observe(
            t,
            s.rotation_signed_dev,
            s.rotation_signed_dev > INVARIANCE_TOL,
        );
        self.reflection_sigma
            .observe(t, s.reflection_sigma_dev, s.reflection_sigma_dev > 0.0);
        self.reflection_signed
            .observe(t, s.reflection_signed_dev, s.reflection_signed_dev > 0.0);
        self.scaling_sigma
            .observe(t, s.scaling_sigma_dev, s.scaling_sigma_dev > INVARIANCE_TOL);
        self.scaling_signed.observe(
            t,
            s.scaling_signed_dev,
            s.scaling_signed_dev > INVARIANCE_TOL,
        );
        self
    }

    fn merge(mut self, other: Self) -> Self {
        self.identity = self.identity.merge(other.identity);
        self.rotation_sigma = self.rotation_sigma.merge(other.rotation_sigma);
        self.rotation_signed = self.rotation_signed.merge(other.rotation_signed);
        self.reflection_sigma = self.reflection_sigma.merge(other.reflection_sigma);
        self.reflection_signed = self.reflection_signed.merge(other.reflection_signed);
        self.scaling_sigma = self.scaling_sigma.merge(other.scaling_sigma);
        self.scaling_signed = self.scaling_signed.merge(other.scaling_signed);
        self
    }
}

/// Isometry/reflection/scaling suite with the default execution.
pub fn run_invariance_suite(cfg: &TrialConfig) -> Result<TrialReport> {
    run_invariance_suite_with(cfg, Execution::default())
}

pub fn run_invariance_suite_with(cfg: &TrialConfig, exec: Execution) -> Result<TrialReport> {
    cfg.validate()?;
    let acc = fold_trials(
        cfg.trials,
        exec,
        InvarianceAcc::new(),
        |acc, i| acc.observe(invariance_trial(cfg, i)),
        InvarianceAcc::merge,
    );
    Ok(report(
        "invariance",
        cfg,
        vec![
            ("identity_bitwise", acc.identity),
            ("rotation_translation_sigma", acc.rotation_sigma),
            ("rotation_translation_signed", acc.rotation_signed),
            ("reflection_sigma", acc.reflection_sigma),
            ("reflection_signed", acc.reflection_signed),
            ("scaling_sigma", acc.scaling_sigma),
            ("scaling_signed", acc.scaling_signed),
        ],
        BTreeMap::new(),
        Vec::new(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn small_cfg(dim: usize, trials: u64) -> TrialConfig {
        TrialConfig {
            trials,
            seed: 42,
            ..TrialConfig::new(dim)
        }
    }

    #[test]
    fn config_validation() {
        assert!(TrialConfig::new(2).validate().is_ok());
        assert!(TrialConfig {
            trials: 0,
            ..TrialConfig::new(2)
        }
        .validate()
        .is_err());
        assert!(TrialConfig {
            dim: 0,
            ..TrialConfig::new(2)
        }
        .validate()
        .is_err());
        assert!(TrialConfig {
            scale: 0.0,
            ..TrialConfig::new(2)
        }
        .validate()
        .is_err());
        assert!(TrialConfig {
            epsilon_range: (1e-2, 1e-4),
            ..TrialConfig::new(2)
        }
        .validate()
        .is_err());
        assert!(TrialConfig {
            near_degenerate_fraction: 1.5,
            ..TrialConfig::new(2)
        }
        .validate()
        .is_err());
    }

    #[test]
    fn random_simplex_is_deterministic() {
        let mut a = trial_rng(7, 1, 0);
        let mut b = trial_rng(7, 1, 0);
        let s = random_simplex(3, 1.0, 1.0, &mut a);
        let t = random_simplex(3, 1.0, 1.0, &mut b);
        assert_eq!(s, t);
    }

    #[test]
    fn random_simplex_respects_range_and_squash() {
        let mut rng = trial_rng(1, 1, 5);
        let s = random_simplex(2, 1.0, 1.0, &mut rng);
        for v in s.vertices() {
            for &x in v {
                assert!((-1.0..=1.0).contains(&x));
            }
        }
        let flat = random_simplex(3, 2.0, 0.0, &mut rng);
        assert_eq!(flat.orientation_sign(crate::geometry::DEGENERACY_TOL), 0);
    }

    #[test]
    fn perturb_identity_at_zero_eps() {
        let mut rng = trial_rng(3, 1, 9);
        let s = random_simplex(3, 1.0, 1.0, &mut rng);
        let q = perturb(&s, 0.0, &mut rng);
        assert_eq!(s, q);
    }

    #[test]
    fn perturb_stays_in_ball_and_bounds_distance_change() {
        let mut rng = trial_rng(11, 1, 0);
        for _ in 0..200 {
            let s = random_simplex(3, 1.0, 1.0, &mut rng);
            let eps = draw_epsilon(&TrialConfig::new(3), &mut rng);
            let q = perturb(&s, eps, &mut rng);
            for (v, w) in s.vertices().iter().zip(q.vertices()) {
                let norm: f64 = v
                    .iter()
                    .zip(w)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt();
                assert!(norm <= eps, "displacement {norm} exceeds {eps}");
            }
            let ds = s.pairwise_distances();
            let dq = q.pairwise_distances();
            for i in 0..ds.size() {
                for j in i + 1..ds.size() {
                    let delta = (ds.get(i, j) - dq.get(i, j)).abs();
                    assert!(
                        delta <= 2.0 * eps * (1.0 + 1e-12),
                        "distance change {delta} exceeds 2 eps = {}",
                        2.0 * eps
                    );
                }
            }
        }
    }

    #[test]
    fn fd_gradient_of_segment_is_two() {
        // sigma = 2 d exactly, so the central difference returns 2 up to the
        // rounding of the two strength evaluations.
        let d = DistanceMatrix::segment(1.0).unwrap();
        let g = fd_gradient(&d, 1e-6 * d.half_perimeter());
        assert_eq!(g.len(), 1);
        assert_relative_eq!(g[0].unwrap(), 2.0, max_relative = 1e-9);
    }

    #[test]
    fn fd_gradient_of_equilateral_is_symmetric() {
        let d = DistanceMatrix::triangle(1.0, 1.0, 1.0).unwrap();
        let g = fd_gradient(&d, 1e-6 * d.half_perimeter());
        let vals: Vec<f64> = g.into_iter().map(|e| e.unwrap()).collect();
        assert_relative_eq!(vals[0], vals[1], max_relative = 1e-9);
        assert_relative_eq!(vals[1], vals[2], max_relative = 1e-9);
    }

    #[test]
    fn fd_gradient_skips_nonrealizable_entries() {
        // Shrinking the long side of this triple below h makes it negative.
        let d = DistanceMatrix::triangle(1e-9, 1.0, 1.0).unwrap();
        let g = fd_gradient(&d, 1e-6 * d.half_perimeter());
        assert!(g[0].is_none());
    }

    #[test]
    fn fd_gradient_norm_small_sample() {
        let bound = 2.0 * 3f64.sqrt() + 1e-3;
        let mut rng = trial_rng(5, 2, 0);
        for _ in 0..200 {
            let s = random_simplex(2, 1.0, 1.0, &mut rng);
            let d = s.pairwise_distances();
            let g = fd_gradient(&d, 1e-6 * d.half_perimeter());
            let norm: f64 = g
                .iter()
                .map(|e| e.expect("generic triangles are realizable").powi(2))
                .sum::<f64>()
                .sqrt();
            assert!(norm <= bound, "gradient norm {norm} exceeds {bound}");
        }
    }

    #[test]
    fn flat_triangle_strength_below_half_eps() {
        for l in [1.0, 1e3] {
            for k in 0..20 {
                let eps = l * 10f64.powf(-6.0 + 6.0 * k as f64 / 19.0);
                let r = signed_strength(&flat_triangle(l, eps)).unwrap();
                assert!(
                    r.sigma <= eps / 2.0 * (1.0 + 1e-12),
                    "sigma {} above eps/2 at l={l}, eps={eps}",
                    r.sigma
                );
            }
        }
    }

    #[test]
    fn suites_pass_on_small_runs() {
        for dim in 1..=3 {
            let cfg = small_cfg(dim, 500);
            assert!(
                run_lipschitz_suite(&cfg).unwrap().pass,
                "lipschitz dim {dim}"
            );
            assert!(run_lemma_suite(&cfg).unwrap().pass, "lemma dim {dim}");
            assert!(
                run_invariance_suite(&cfg).unwrap().pass,
                "invariance dim {dim}"
            );
        }
    }

    #[test]
    fn reports_are_deterministic() {
        let cfg = small_cfg(2, 400);
        assert_eq!(
            run_lipschitz_suite(&cfg).unwrap(),
            run_lipschitz_suite(&cfg).unwrap()
        );
        assert_eq!(
            run_lemma_suite(&cfg).unwrap(),
            run_lemma_suite(&cfg).unwrap()
        );
        assert_eq!(
            run_invariance_suite(&cfg).unwrap(),
            run_invariance_suite(&cfg).unwrap()
        );
    }

    #[cfg(feature = "parallel")]
    #[test]
    fn parallel_and_sequential_reports_agree() {
        let cfg = small_cfg(3, 400);
        assert_eq!(
            run_lipschitz_suite_with(&cfg, Execution::Parallel).unwrap(),
            run_lipschitz_suite_with(&cfg, Execution::Sequential).unwrap()
        );
        assert_eq!(
            run_lemma_suite_with(&cfg, Execution::Parallel).unwrap(),
            run_lemma_suite_with(&cfg, Execution::Sequential).unwrap()
        );
        assert_eq!(
            run_invariance_suite_with(&cfg, Execution::Parallel).unwrap(),
            run_invariance_suite_with(&cfg, Execution::Sequential).unwrap()
        );
    }

    #[test]
    fn lipschitz_holds_in_the_tiny_epsilon_limit() {
        // eps = 1e-12 * scale: the difference bound shrinks with eps and the
        // slack still absorbs the strength evaluations' rounding.
        let cfg = TrialConfig {
            epsilon_range: (1e-12, 1e-12),
            ..small_cfg(2, 500)
        };
        let report = run_lipschitz_suite(&cfg).unwrap();
        assert!(report.pass);
        assert_eq!(report.violations(), 0);
    }

    #[test]
    fn equilateral_edge_ratio_is_two_thirds() {
        let d = DistanceMatrix::triangle(1.0, 1.0, 1.0).unwrap();
        let p = d.half_perimeter();
        assert_eq!(d.get(0, 1) / p, 2.0 / 3.0);
    }

    #[test]
    fn lipschitz_suite_covers_sign_crossings() {
        let cfg = TrialConfig {
            near_degenerate_fraction: 0.5,
            ..small_cfg(2, 2_000)
        };
        let report = run_lipschitz_suite(&cfg).unwrap();
        assert!(report.counter("sign_crossings") > 0);
        assert!(report.counter("near_degenerate_trials") > 0);
    }

    #[test]
    fn worst_trial_replays_to_max_observed() {
        let cfg = small_cfg(2, 300);
        let report = run_lipschitz_suite(&cfg).unwrap();
        let check = report.check("sigma_lipschitz").unwrap();
        let worst = check.worst_trial.unwrap();
        let sample = lipschitz_trial(&cfg, worst);
        assert_eq!(
            sample.sigma_delta / (2.0 * sample.epsilon),
            check.max_observed
        );
    }

    #[test]
    fn lemma_suite_dim1_det_ratio_is_exactly_eight() {
        let report = run_lemma_suite(&small_cfg(1, 2_000)).unwrap();
        let det = report.check("det_ratio").unwrap();
        assert_eq!(det.max_observed, 8.0);
        assert_eq!(det.violations, 0);
        // Edge ratio and derivative ratio also sit exactly on their bounds.
        assert_eq!(report.check("edge_ratio").unwrap().max_observed, 2.0);
        assert_eq!(report.check("derivative_ratio").unwrap().max_observed, 8.0);
    }

    #[test]
    fn invariance_suite_checks_are_tight() {
        let report = run_invariance_suite(&small_cfg(3, 300)).unwrap();
        assert!(report.pass);
        assert_eq!(report.check("identity_bitwise").unwrap().max_observed, 0.0);
        assert_eq!(report.check("reflection_sigma").unwrap().max_observed, 0.0);
        assert_eq!(report.check("reflection_signed").unwrap().max_observed, 0.0);
    }

    #[test]
    fn rotation_matrices_are_special_orthogonal() {
        let mut rng = trial_rng(17, 3, 0);
        for n in 1..=4 {
            let q = random_rotation(n, &mut rng);
            let mut copy = q.clone();
            let det = crate::mat::determinant_in_place(&mut copy, n);
            assert_relative_eq!(det, 1.0, max_relative = 1e-10);
            for i in 0..n {
                for j in 0..n {
                    let dot: f64 = (0..n).map(|r| q[r * n + i] * q[r * n + j]).sum();
                    let expect = if i == j { 1.0 } else { 0.0 };
                    assert!((dot - expect).abs() < 1e-10);
                }
            }
        }
    }
}
