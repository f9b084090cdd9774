//! Quenched and annealed Lyapunov exponent estimators along lattice directions.
//!
//! Both estimators are derived from a shared [`LadderRun`]: for every `n` in the
//! ladder and every replica `r`, the field `e(0, n·x)` is solved in the replica
//! environment seeded by `replica_seed(seed, r)`. Replicas are coupled across
//! `n` and across laws because site potentials are counter-based in the seed.
//!
//! The point estimate is the value at the largest `n`, not the minimum over the
//! curve, since a minimum of noisy means is biased low.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dist::DistSpec;
use crate::error::{Error, Result};
use crate::lattice::Site;
use crate::solver::{cost_of, replica_seed, solve_with_policy, BoxPolicy, SolveOptions, UNDERFLOW};
use crate::stats::MeanStd;

/// Standard errors used for the reported confidence interval.
pub const CI_SIGMAS: f64 = 3.0;

/// Parameters shared by ladder runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LadderParams {
    pub d: usize,
    #[serde(default = "default_n_list")]
    pub n_list: Vec<usize>,
    #[serde(default = "default_replicas")]
    pub replicas: usize,
    #[serde(default)]
    pub policy: BoxPolicy,
    #[serde(default = "default_tol")]
    pub tol: f64,
}

fn default_n_list() -> Vec<usize> {
    vec![1, 2, 4, 6, 8, 10, 12]
}

fn default_replicas() -> usize {
    100
}

fn default_tol() -> f64 {
    SolveOptions::default().tol
}

impl LadderParams {
    pub fn new(d: usize, n_list: Vec<usize>, replicas: usize, policy: BoxPolicy) -> Self {
        LadderParams { d, n_list, replicas, policy, tol: default_tol() }
    }

    pub fn solve_options(&self) -> SolveOptions {
        SolveOptions { tol: self.tol, ..SolveOptions::default() }
    }

    fn validate(&self, x: &Site) -> Result<()> {
        if x.dim() != self.d {
            return Err(Error::Config(format!("direction {x} does not have dimension {}", self.d)));
        }
        if x.is_origin() {
            return Err(Error::Config("direction must be nonzero".into()));
        }
        if self.n_list.is_empty() || self.n_list.windows(2).any(|w| w[0] >= w[1]) || self.n_list[0] == 0 {
            return Err(Error::Config("n_list must be nonempty, positive and strictly increasing".into()));
        }
        if self.replicas < 2 {
            return Err(Error::Config(format!("replicas must be >= 2, got {}", self.replicas)));
        }
        Ok(())
    }
}

/// Survival values `e(0, n·x, ω_r)` over a replica ladder.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LadderRun {
    pub dist: DistSpec,
    pub x: Site,
    pub seed: u64,
    pub params: LadderParams,
    /// `e[i][r]` for `n = n_list[i]` and replica `r`.
    pub e: Vec<Vec<f64>>,
    /// Box radius used for each cell.
    pub radii: Vec<Vec<usize>>,
}

/// Solves every `(n, replica)` cell of a ladder.
pub fn ladder_run(dist: &DistSpec, x: &Site, seed: u64, params: &LadderParams) -> Result<LadderRun> {
    dist.validate()?;
    params.validate(x)?;
    let m = params.replicas;
    let opts = params.solve_options();
    let jobs: Vec<(usize, usize)> =
        (0..params.n_list.len()).flat_map(|i| (0..m).map(move |r| (i, r))).collect();
    let solved: Vec<Result<(f64, usize)>> = jobs
        .par_iter()
        .map(|&(i, r)| {
            let y = x.scaled(params.n_list[i] as i64);
            let f = solve_with_policy(dist, params.d, replica_seed(seed, r), &y, params.policy, opts)?;
            Ok((f.e0(), f.env.box_spec.radius))
        })
        .collect();
    let solved = solved.into_iter().collect::<Result<Vec<_>>>()?;
    let e = solved.chunks(m).map(|c| c.iter().map(|s| s.0).collect()).collect();
    let radii = solved.chunks(m).map(|c| c.iter().map(|s| s.1).collect()).collect();
    Ok(LadderRun { dist: dist.clone(), x: x.clone(), seed, params: params.clone(), e, radii })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimateKind {
    Quenched,
    Annealed,
}

impl EstimateKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EstimateKind::Quenched => "quenched",
            EstimateKind::Annealed => "annealed",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LyapunovRecord {
    pub n: usize,
    /// `a_n / n` or `b_n / n`.
    pub value: f64,
    pub stderr: f64,
    /// Replicas contributing to the value.
    pub replicas: usize,
    /// Largest box radius used at this `n`.
    pub radius: usize,
    /// Replicas excluded because their cost was infinite.
    pub infinite: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LyapunovEstimate {
    pub kind: EstimateKind,
    pub dist: DistSpec,
    pub d: usize,
    pub x: Site,
    pub records: Vec<LyapunovRecord>,
    pub point: f64,
    pub ci: (f64, f64),
}

impl LyapunovEstimate {
    pub fn dist_id(&self) -> String {
        self.dist.id()
    }

    pub fn last(&self) -> &LyapunovRecord {
        self.records.last().expect("records are nonempty")
    }

    fn from_records(kind: EstimateKind, run: &LadderRun, records: Vec<LyapunovRecord>) -> Self {
        let last = *records.last().expect("records are nonempty");
        LyapunovEstimate {
            kind,
            dist: run.dist.clone(),
            d: run.params.d,
            x: run.x.clone(),
            records,
            point: last.value,
            ci: (last.value - CI_SIGMAS * last.stderr, last.value + CI_SIGMAS * last.stderr),
        }
    }
}

impl LadderRun {
    /// Mean of `a(0, n·x)` over finite-cost replicas at ladder index `i`.
    pub fn mean_a(&self, i: usize) -> (MeanStd, usize) {
        let a: Vec<f64> = self.e[i].iter().map(|&e| cost_of(e)).filter(|a| a.is_finite()).collect();
        (MeanStd::of(&a), self.e[i].len() - a.len())
    }

    /// `b(0, n·x) = -ln mean_r e` at ladder index `i`, with its delta-method error.
    pub fn b(&self, i: usize) -> Result<(f64, f64)> {
        let e = MeanStd::of(&self.e[i]);
        if !(e.mean >= UNDERFLOW) {
            return Err(Error::InfiniteCost);
        }
        Ok((-e.mean.ln(), e.stderr / e.mean))
    }

    fn radius(&self, i: usize) -> usize {
        self.radii[i].iter().copied().max().unwrap_or(0)
    }

    pub fn quenched(&self) -> Result<LyapunovEstimate> {
        if !self.dist.in_d1() {
            return Err(Error::Domain(format!(
                "quenched exponent needs a finite-mean law, got {}",
                self.dist.id()
            )));
        }
        let mut records = Vec::new();
        for (i, &n) in self.params.n_list.iter().enumerate() {
            let (a, infinite) = self.mean_a(i);
            if a.n == 0 {
                return Err(Error::InfiniteCost);
            }
            let nf = n as f64;
            records.push(LyapunovRecord {
                n,
                value: a.mean / nf,
                stderr: a.stderr / nf,
                replicas: a.n,
                radius: self.radius(i),
                infinite,
            });
        }
        Ok(LyapunovEstimate::from_records(EstimateKind::Quenched, self, records))
    }

    pub fn annealed(&self) -> Result<LyapunovEstimate> {
        let mut records = Vec::new();
        for (i, &n) in self.params.n_list.iter().enumerate() {
            let (b, se) = self.b(i)?;
            let nf = n as f64;
            records.push(LyapunovRecord {
                n,
                value: b / nf,
                stderr: se / nf,
                replicas: self.e[i].len(),
                radius: self.radius(i),
                infinite: self.e[i].iter().filter(|&&e| !cost_of(e).is_finite()).count(),
            });
        }
        Ok(LyapunovEstimate::from_records(EstimateKind::Annealed, self, records))
    }
}

/// Estimates `α_F(x)` from `n ↦ E[a(0, n·x)] / n`.
pub fn quenched_estimate(dist: &DistSpec, x: &Site, seed: u64, params: &LadderParams) -> Result<LyapunovEstimate> {
    if !dist.in_d1() {
        return Err(Error::Domain(format!("quenched exponent needs a finite-mean law, got {}", dist.id())));
    }
    ladder_run(dist, x, seed, params)?.quenched()
}

/// Estimates `β_F(x)` from `n ↦ b(0, n·x) / n`.
pub fn annealed_estimate(dist: &DistSpec, x: &Site, seed: u64, params: &LadderParams) -> Result<LyapunovEstimate> {
    if !dist.in_d() {
        return Err(Error::Domain(format!("law {} is outside the admissible class", dist.id())));
    }
    ladder_run(dist, x, seed, params)?.annealed()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundViolation {
    pub n: usize,
    pub value: f64,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundsReport {
    pub lower: f64,
    pub upper: f64,
    pub slack: f64,
    pub violations: Vec<BoundViolation>,
}

impl BoundsReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn violations_at(&self, n: usize) -> usize {
        self.violations.iter().filter(|v| v.n == n).count()
    }
}

/// The interval `[-ln L, ln 2d - ln L]` for the per-unit annealed cost, `L` the Laplace value.
pub fn annealed_interval(dist: &DistSpec, d: usize) -> (f64, f64) {
    let ll = -dist.laplace().ln();
    (ll, ((2 * d) as f64).ln() + ll)
}

/// Checks `-ln L ≤ b_n/(n|x|₁) ≤ ln 2d - ln L + slack` for every record.
pub fn bounds_check(est: &LyapunovEstimate, slack: f64) -> BoundsReport {
    let (lower, upper) = annealed_interval(&est.dist, est.d);
    let scale = est.x.l1() as f64;
    let violations = est
        .records
        .iter()
        .filter_map(|r| {
            let v = r.value / scale;
            // the lower bound is exact on every box, up to rounding
            let ok = v >= lower - 1e-12 * lower.abs().max(1.0) && v <= upper + slack;
            (!ok).then_some(BoundViolation { n: r.n, value: v, lower, upper: upper + slack })
        })
        .collect();
    BoundsReport { lower, upper, slack, violations }
}
