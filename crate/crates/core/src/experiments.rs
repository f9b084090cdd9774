//! Pre-packaged experiment drivers. Each compares a measured left-hand side
//! against a bound recomputed from distribution primitives, and records one
//! row per comparison.
//!
//! A checked row passes when `lhs ≤ rhs + slack`, where the slack is
//! `k·stderr + tol` unless the row states otherwise. Diagnostic rows carry a
//! measurement only and never fail.

use std::time::Instant;

use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::dist::DistSpec;
use crate::error::{Error, Result};
use crate::green::{bounded_below_constant, green_constant};
use crate::lattice::Site;
use crate::lyapunov::{ladder_run, LadderParams, LadderRun};
use crate::solver::{
    replica_seed, require_conditional_regime, solve_indicator_weight, solve_time_weight, solve_with_policy,
    SurvivalField, WeightedField, UNDERFLOW,
};
use crate::stats::{compensated_sum, MeanStd};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub label: String,
    pub lhs: f64,
    /// Standard error of the compared difference.
    pub lhs_stderr: f64,
    pub rhs: Option<f64>,
    pub slack: f64,
    /// `rhs + slack - lhs`; negative on failure.
    pub margin: Option<f64>,
    pub pass: bool,
    pub checked: bool,
}

impl ReportRow {
    pub fn with_slack(label: impl Into<String>, lhs: f64, stderr: f64, rhs: f64, slack: f64) -> Self {
        let margin = rhs + slack - lhs;
        ReportRow {
            label: label.into(),
            lhs,
            lhs_stderr: stderr,
            rhs: Some(rhs),
            slack,
            margin: Some(margin),
            pass: margin >= 0.0,
            checked: true,
        }
    }

    /// `lhs ≤ rhs + k·stderr + tol`.
    pub fn bound(label: impl Into<String>, lhs: f64, stderr: f64, rhs: f64, k: f64, tol: f64) -> Self {
        Self::with_slack(label, lhs, stderr, rhs, k * stderr + tol)
    }

    pub fn diagnostic(label: impl Into<String>, value: f64, stderr: f64) -> Self {
        ReportRow {
            label: label.into(),
            lhs: value,
            lhs_stderr: stderr,
            rhs: None,
            slack: 0.0,
            margin: None,
            pass: true,
            checked: false,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub id: String,
    pub config: serde_json::Value,
    pub rows: Vec<ReportRow>,
    /// Master seed followed by the replica environment seeds.
    pub seeds: Vec<u64>,
    pub wall_time_s: f64,
    pub notes: Vec<String>,
}

impl ExperimentReport {
    fn new<C: Serialize>(id: &str, config: &C, seed: u64, replicas: usize) -> Self {
        let mut seeds = vec![seed];
        seeds.extend((0..replicas).map(|r| replica_seed(seed, r)));
        ExperimentReport {
            id: id.to_string(),
            config: serde_json::to_value(config).expect("configs serialize"),
            rows: Vec::new(),
            seeds,
            wall_time_s: 0.0,
            notes: Vec::new(),
        }
    }

    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }

    pub fn failures(&self) -> Vec<&ReportRow> {
        self.rows.iter().filter(|r| !r.pass).collect()
    }

    pub fn row(&self, label: &str) -> Option<&ReportRow> {
        self.rows.iter().find(|r| r.label == label)
    }
}

fn default_k() -> f64 {
    3.0
}

fn default_x() -> Site {
    Site::axis(3, 0, 1)
}

fn combined(a: f64, b: f64) -> f64 {
    (a * a + b * b).sqrt()
}

/// Slack for inequalities that hold exactly per replica on coupled environments.
fn exact_slack(params: &LadderParams) -> f64 {
    10.0 * params.tol
}

/// `(α̂, stderr)` and `(β̂, stderr)` at the last rung, on the `|x|₁` scale of the run.
#[derive(Debug, Clone, Copy)]
struct Point {
    alpha: Option<(f64, f64)>,
    beta: (f64, f64),
}

fn point(run: &LadderRun) -> Result<Point> {
    let last = run.params.n_list.len() - 1;
    let n = *run.params.n_list.last().expect("nonempty") as f64;
    let alpha = if run.dist.in_d1() {
        let (a, _) = run.mean_a(last);
        Some((a.mean / n, a.stderr / n))
    } else {
        None
    };
    let (b, se) = run.b(last)?;
    Ok(Point { alpha, beta: (b / n, se / n) })
}

fn need_alpha(p: &Point, dist: &DistSpec) -> Result<(f64, f64)> {
    p.alpha
        .ok_or_else(|| Error::Domain(format!("quenched exponent needs a finite-mean law, got {}", dist.id())))
}

fn label_num(v: f64) -> String {
    format!("{v}")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContinuityConfig {
    pub dist: DistSpec,
    #[serde(default = "default_x")]
    pub x: Site,
    /// Floor-grid steps, coarse to fine.
    #[serde(default = "default_steps")]
    pub steps: Vec<f64>,
    #[serde(default = "default_cap")]
    pub cap: f64,
    /// Explicit approximating laws; replaces the floor grid when present.
    #[serde(default)]
    pub sequence: Option<Vec<DistSpec>>,
    #[serde(default = "yes")]
    pub quenched: bool,
    #[serde(default = "yes")]
    pub annealed: bool,
    /// Adds ceiling-grid ordering rows.
    #[serde(default = "yes")]
    pub ceil: bool,
    pub ladder: LadderParams,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_k")]
    pub k: f64,
    /// Absolute tolerance for the final gap.
    #[serde(default = "default_gap_tol")]
    pub tol: f64,
}

fn default_steps() -> Vec<f64> {
    vec![0.5, 0.25, 0.125, 0.0625]
}

fn default_cap() -> f64 {
    40.0
}

fn default_gap_tol() -> f64 {
    0.05
}

fn yes() -> bool {
    true
}

/// `|α̂_{F_n} − α̂_F|` and `|β̂_{F_n} − β̂_F|` along an approximating sequence.
pub fn continuity_run(cfg: &ContinuityConfig) -> Result<ExperimentReport> {
    let start = Instant::now();
    let mut rep = ExperimentReport::new("continuity", cfg, cfg.seed, cfg.ladder.replicas);
    if cfg.quenched && !cfg.dist.in_d1() {
        return Err(Error::Domain(format!(
            "quenched continuity needs a finite-mean law, got {}",
            cfg.dist.id()
        )));
    }
    let (labels, laws): (Vec<String>, Vec<DistSpec>) = match &cfg.sequence {
        Some(seq) => (seq.iter().enumerate().map(|(i, _)| format!("n={i}")).collect(), seq.clone()),
        None => {
            let laws = cfg.steps.iter().map(|&s| cfg.dist.discretize_floor(s, cfg.cap)).collect::<Result<_>>()?;
            (cfg.steps.iter().map(|&s| format!("step={}", label_num(s))).collect(), laws)
        }
    };
    if laws.is_empty() {
        return Err(Error::Config("continuity needs at least one approximating law".into()));
    }
    let base = point(&ladder_run(&cfg.dist, &cfg.x, cfg.seed, &cfg.ladder)?)?;
    let points = laws
        .iter()
        .map(|f| ladder_run(f, &cfg.x, cfg.seed, &cfg.ladder).and_then(|r| point(&r)))
        .collect::<Result<Vec<_>>>()?;
    let exact = exact_slack(&cfg.ladder);

    let mut series: Vec<(&str, (f64, f64), Vec<(f64, f64)>)> = Vec::new();
    if cfg.quenched {
        let a = need_alpha(&base, &cfg.dist)?;
        let seq = points.iter().zip(&laws).map(|(p, f)| need_alpha(p, f)).collect::<Result<Vec<_>>>()?;
        series.push(("alpha", a, seq));
    }
    if cfg.annealed {
        series.push(("beta", base.beta, points.iter().map(|p| p.beta).collect()));
    }
    for (name, (v, se), seq) in &series {
        let gaps: Vec<(f64, f64)> = seq.iter().map(|(w, wse)| ((w - v).abs(), combined(*se, *wse))).collect();
        for (i, (g, gse)) in gaps.iter().enumerate() {
            rep.rows.push(ReportRow::diagnostic(format!("{name}_gap {}", labels[i]), *g, *gse));
        }
        for i in 1..gaps.len() {
            rep.rows.push(ReportRow::with_slack(
                format!("{name}_gap_nonincreasing {} -> {}", labels[i - 1], labels[i]),
                gaps[i].0,
                gaps[i].1,
                gaps[i - 1].0,
                exact,
            ));
        }
        let (g, gse) = *gaps.last().expect("nonempty");
        rep.rows.push(ReportRow::with_slack(
            format!("{name}_gap_final {}", labels.last().expect("nonempty")),
            g,
            gse,
            cfg.tol.max(cfg.k * gse),
            0.0,
        ));
    }

    if cfg.ceil && cfg.sequence.is_none() {
        for (i, &s) in cfg.steps.iter().enumerate() {
            let ceil = point(&ladder_run(&cfg.dist.discretize_ceil(s, cfg.cap)?, &cfg.x, cfg.seed, &cfg.ladder)?)?;
            let floor = &points[i];
            let mut order = vec![("beta", ceil.beta, base.beta, floor.beta)];
            if cfg.quenched {
                order.insert(0, ("alpha", need_alpha(&ceil, &cfg.dist)?, need_alpha(&base, &cfg.dist)?, need_alpha(floor, &cfg.dist)?));
            }
            for (name, c, f, fl) in order {
                if name == "beta" && !cfg.annealed {
                    continue;
                }
                rep.rows.push(ReportRow::with_slack(
                    format!("{name}_floor_le_base {}", labels[i]),
                    fl.0,
                    combined(fl.1, f.1),
                    f.0,
                    exact,
                ));
                rep.rows.push(ReportRow::with_slack(
                    format!("{name}_base_le_ceil {}", labels[i]),
                    f.0,
                    combined(f.1, c.1),
                    c.0,
                    exact,
                ));
            }
        }
    }
    rep.wall_time_s = start.elapsed().as_secs_f64();
    Ok(rep)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvolutionConfig {
    pub f: DistSpec,
    pub g: DistSpec,
    #[serde(default = "default_x")]
    pub x: Site,
    pub ladder: LadderParams,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_k")]
    pub k: f64,
    #[serde(default)]
    pub tol: f64,
}

fn killing_rate(dist: &DistSpec) -> Result<f64> {
    let l = dist.laplace();
    if !(l < 1.0) {
        return Err(Error::DegenerateKilling);
    }
    Ok(-l.ln())
}

/// `α̂_{F*G} ≤ α̂_F + c₁(F) f₁(F) mean(G) |x|₁`, with the annealed analogue.
pub fn convolution_bound_run(cfg: &ConvolutionConfig) -> Result<ExperimentReport> {
    let start = Instant::now();
    let mut rep = ExperimentReport::new("convolution_bound", cfg, cfg.seed, cfg.ladder.replicas);
    if !cfg.f.in_d1() {
        return Err(Error::Domain(format!("f must be admissible with finite mean, got {}", cfg.f.id())));
    }
    if !cfg.g.mean().is_finite() {
        return Err(Error::Domain(format!("g must have finite mean, got {}", cfg.g.id())));
    }
    let fg = cfg.f.convolve(&cfg.g)?;
    let dd = green_constant(cfg.ladder.d)?;
    let twod = ((2 * cfg.ladder.d) as f64).ln();
    let f1 = 1.0 / killing_rate(&cfg.f)?;
    let c1 = dd * (twod + cfg.f.mean());
    let shift = cfg.g.mean() * cfg.x.l1() as f64;
    let pf = point(&ladder_run(&cfg.f, &cfg.x, cfg.seed, &cfg.ladder)?)?;
    let pfg = point(&ladder_run(&fg, &cfg.x, cfg.seed, &cfg.ladder)?)?;
    let (af, afse) = need_alpha(&pf, &cfg.f)?;
    let (afg, afgse) = need_alpha(&pfg, &fg)?;
    rep.rows.push(ReportRow::bound("alpha", afg, combined(afse, afgse), af + c1 * f1 * shift, cfg.k, cfg.tol));
    let (bf, bfse) = pf.beta;
    let (bfg, bfgse) = pfg.beta;
    rep.rows.push(ReportRow::bound("beta", bfg, combined(bfse, bfgse), bf + dd * bf * f1 * shift, cfg.k, cfg.tol));
    rep.notes.push(format!("D({}) = {dd}, c1 = {c1}, f1 = {f1}", cfg.ladder.d));
    rep.wall_time_s = start.elapsed().as_secs_f64();
    Ok(rep)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LowPotentialConfig {
    pub dist: DistSpec,
    pub t0: f64,
    #[serde(default = "default_x")]
    pub x: Site,
    /// Targets are `n·x` for `n` in `ladder.n_list`.
    pub ladder: LadderParams,
    /// Further thresholds at which only the bound is reported.
    #[serde(default)]
    pub rhs_t0_grid: Vec<f64>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_k")]
    pub k: f64,
    #[serde(default)]
    pub tol: f64,
}

/// Per-replica `(e(0), w(0))` for every rung of a target ladder.
fn weighted_cells<W>(dist: &DistSpec, x: &Site, seed: u64, ladder: &LadderParams, weight: W) -> Result<Vec<Vec<(f64, f64)>>>
where
    W: Fn(&SurvivalField) -> Result<WeightedField> + Sync,
{
    if ladder.n_list.is_empty() || ladder.replicas < 2 {
        return Err(Error::Config("target ladder needs n_list and at least 2 replicas".into()));
    }
    let m = ladder.replicas;
    let opts = ladder.solve_options();
    let jobs: Vec<(usize, usize)> = (0..ladder.n_list.len()).flat_map(|i| (0..m).map(move |r| (i, r))).collect();
    let cells: Vec<Result<(f64, f64)>> = jobs
        .par_iter()
        .map(|&(i, r)| {
            let y = x.scaled(ladder.n_list[i] as i64);
            let f = solve_with_policy(dist, ladder.d, replica_seed(seed, r), &y, ladder.policy, opts)?;
            let w = weight(&f)?;
            Ok((f.e0(), w.value(&Site::origin(ladder.d)).expect("origin in box")))
        })
        .collect();
    let cells = cells.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(cells.chunks(m).map(|c| c.to_vec()).collect())
}

/// Bound on the conditional time spent at low potential, per unit distance.
pub fn low_potential_bound(dist: &DistSpec, d: usize, t0: f64) -> Result<f64> {
    let c = dist.low_potential_constant(t0)?;
    Ok(green_constant(d)? * (((2 * d) as f64).ln() + dist.mean()) / c)
}

/// Conditional occupation of `{V < t0}` per unit distance against its bound.
pub fn low_potential_run(cfg: &LowPotentialConfig) -> Result<ExperimentReport> {
    let start = Instant::now();
    let mut rep = ExperimentReport::new("low_potential", cfg, cfg.seed, cfg.ladder.replicas);
    if !cfg.dist.in_d1() {
        return Err(Error::Domain(format!("low-potential bound needs a finite-mean law, got {}", cfg.dist.id())));
    }
    let d = cfg.ladder.d;
    let rhs = low_potential_bound(&cfg.dist, d, cfg.t0)?;
    let t0 = cfg.t0;
    let cells = weighted_cells(&cfg.dist, &cfg.x, cfg.seed, &cfg.ladder, |f| {
        solve_indicator_weight(f, |_, v| v < t0)
    })?;
    let last = cells.len() - 1;
    for (i, rung) in cells.iter().enumerate() {
        let n = cfg.ladder.n_list[i];
        let scale = (n as i64 * cfg.x.l1()) as f64;
        let ratios: Vec<f64> = rung.iter().filter(|c| c.0 > 0.0).map(|c| c.1 / c.0 / scale).collect();
        let s = MeanStd::of(&ratios);
        let label = format!("occupation n={n}");
        if i == last {
            rep.rows.push(ReportRow::bound(label, s.mean, s.stderr, rhs, cfg.k, cfg.tol));
        } else {
            rep.rows.push(ReportRow::diagnostic(label, s.mean, s.stderr));
        }
    }
    for &t in &cfg.rhs_t0_grid {
        rep.rows.push(ReportRow::diagnostic(format!("rhs t0={}", label_num(t)), low_potential_bound(&cfg.dist, d, t)?, 0.0));
    }
    rep.notes.push(format!("rhs = {rhs}; box-truncated conditioned measure"));
    rep.wall_time_s = start.elapsed().as_secs_f64();
    Ok(rep)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TruncationConfig {
    pub dist: DistSpec,
    pub t0_ladder: Vec<f64>,
    #[serde(default = "default_x")]
    pub x: Site,
    /// Rows for the lifted law `F^{t0}`.
    #[serde(default = "yes")]
    pub alpha: bool,
    /// Rows for the capped law `^{t0}F`.
    #[serde(default = "yes")]
    pub beta: bool,
    pub ladder: LadderParams,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_k")]
    pub k: f64,
    #[serde(default)]
    pub tol: f64,
}

/// `f₂(t0, F) = t0 / c(t0, F)`, which is 0 when no mass lies below `t0`.
pub fn truncation_f2(dist: &DistSpec, t0: f64) -> Result<f64> {
    if t0 > 0.0 && dist.cdf_left(t0) == 0.0 {
        return Ok(0.0);
    }
    Ok(t0 / dist.low_potential_constant(t0)?)
}

/// Lifting and capping the potential at `t0`.
pub fn truncation_bound_run(cfg: &TruncationConfig) -> Result<ExperimentReport> {
    let start = Instant::now();
    let mut rep = ExperimentReport::new("truncation_bound", cfg, cfg.seed, cfg.ladder.replicas);
    if cfg.t0_ladder.is_empty() || cfg.t0_ladder.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Config("t0_ladder must be nonempty and strictly increasing".into()));
    }
    if cfg.alpha && !cfg.dist.in_d1() {
        return Err(Error::Domain(format!("lifted-law rows need a finite-mean law, got {}", cfg.dist.id())));
    }
    let d = cfg.ladder.d;
    let twod = ((2 * d) as f64).ln();
    let exact = exact_slack(&cfg.ladder);
    let scale = cfg.x.l1() as f64;
    let base = point(&ladder_run(&cfg.dist, &cfg.x, cfg.seed, &cfg.ladder)?)?;

    if cfg.alpha {
        let dd = green_constant(d)?;
        let c2a = dd * (twod + cfg.dist.mean());
        let c2b = dd * (twod + killing_rate(&cfg.dist)?);
        let (a, ase) = need_alpha(&base, &cfg.dist)?;
        for &t0 in &cfg.t0_ladder {
            let lifted = cfg.dist.truncate_below(t0)?;
            let f2 = truncation_f2(&cfg.dist, t0)?;
            let p = point(&ladder_run(&lifted, &cfg.x, cfg.seed, &cfg.ladder)?)?;
            let (al, alse) = need_alpha(&p, &lifted)?;
            let t = label_num(t0);
            rep.rows.push(ReportRow::bound(format!("alpha_gap t0={t}"), (al - a).abs(), combined(ase, alse), c2a * f2 * scale, cfg.k, cfg.tol));
            rep.rows.push(ReportRow::with_slack(format!("alpha_base_le_lifted t0={t}"), a, combined(ase, alse), al, exact));
            let (bl, blse) = p.beta;
            rep.rows.push(ReportRow::bound(
                format!("beta_gap_lifted t0={t}"),
                (bl - base.beta.0).abs(),
                combined(base.beta.1, blse),
                c2b * f2 * scale,
                cfg.k,
                cfg.tol,
            ));
        }
    }

    if cfg.beta {
        let (b, bse) = base.beta;
        let mut prev: Option<(String, f64, f64)> = None;
        for &t0 in &cfg.t0_ladder {
            let capped = cfg.dist.truncate_above(t0)?;
            let (bc, bcse) = point(&ladder_run(&capped, &cfg.x, cfg.seed, &cfg.ladder)?)?.beta;
            let t = label_num(t0);
            rep.rows.push(ReportRow::with_slack(format!("beta_capped_le_base t0={t}"), bc, combined(bse, bcse), b, exact));
            rep.rows.push(ReportRow::diagnostic(format!("beta_capped t0={t}"), bc, bcse));
            if let Some((pt, pb, pse)) = &prev {
                // capping at a larger level raises every potential
                rep.rows.push(ReportRow::with_slack(
                    format!("beta_capped_nondecreasing t0={pt} -> {t}"),
                    *pb,
                    combined(*pse, bcse),
                    bc,
                    exact,
                ));
                rep.rows.push(ReportRow::with_slack(
                    format!("beta_gap_nonincreasing t0={pt} -> {t}"),
                    b - bc,
                    combined(*pse, bcse),
                    b - pb,
                    exact,
                ));
            }
            let upper = cfg.dist.upper_residual(t0).and_then(|u| capped.convolve(&u));
            match upper {
                Ok(sum) => {
                    let (bu, buse) = point(&ladder_run(&sum, &cfg.x, cfg.seed, &cfg.ladder)?)?.beta;
                    rep.rows.push(ReportRow::bound(format!("beta_base_le_split t0={t}"), b, combined(bse, buse), bu, cfg.k, cfg.tol));
                }
                Err(Error::UnsupportedConvolution(_)) => {
                    rep.notes.push(format!("t0={t}: split law not representable, upper sandwich row skipped"));
                }
                Err(e) => return Err(e),
            }
            prev = Some((t, bc, bcse));
        }
    }
    rep.wall_time_s = start.elapsed().as_secs_f64();
    Ok(rep)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BallisticityConfig {
    pub dist: DistSpec,
    #[serde(default = "default_x")]
    pub x: Site,
    /// Targets are `n·x` for `n` in `ladder.n_list`.
    pub ladder: LadderParams,
    /// Lower potential bound, required in `d = 2`.
    #[serde(default)]
    pub lambda: Option<f64>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_k")]
    pub k: f64,
    #[serde(default)]
    pub tol: f64,
}

/// `D(d)` for `d ≥ 3`, or `1/(1 − e^{−λ})` in `d = 2`.
pub fn visit_constant(d: usize, lambda: Option<f64>) -> Result<f64> {
    match (d, lambda) {
        (2, Some(l)) => bounded_below_constant(l),
        _ => green_constant(d),
    }
}

/// The bound `C·(ln 2d − ln L)/(−ln L)` on the annealed conditional hitting time per unit distance.
pub fn ballisticity_bound(dist: &DistSpec, d: usize, lambda: Option<f64>) -> Result<f64> {
    let k = killing_rate(dist)?;
    Ok(visit_constant(d, lambda)? * (((2 * d) as f64).ln() + k) / k)
}

/// Conditional hitting time per unit distance against its bound.
pub fn ballisticity_run(cfg: &BallisticityConfig) -> Result<ExperimentReport> {
    let start = Instant::now();
    let mut rep = ExperimentReport::new("ballisticity", cfg, cfg.seed, cfg.ladder.replicas);
    let d = cfg.ladder.d;
    require_conditional_regime(d, &cfg.dist, cfg.lambda)?;
    let rhs = ballisticity_bound(&cfg.dist, d, cfg.lambda)?;
    let cells = weighted_cells(&cfg.dist, &cfg.x, cfg.seed, &cfg.ladder, solve_time_weight)?;
    for (i, rung) in cells.iter().enumerate() {
        let n = cfg.ladder.n_list[i];
        let scale = (n as i64 * cfg.x.l1()) as f64;
        let quenched: Vec<f64> = rung.iter().filter(|c| c.0 > 0.0).map(|c| c.1 / c.0 / scale).collect();
        let q = MeanStd::of(&quenched);
        rep.rows.push(ReportRow::diagnostic(format!("quenched n={n}"), q.mean, q.stderr));
        let (ratio, se) = ratio_of_means(rung)?;
        rep.rows.push(ReportRow::bound(format!("annealed n={n}"), ratio / scale, se / scale, rhs, cfg.k, cfg.tol));
    }
    rep.notes.push(format!("rhs = {rhs}; box-truncated conditioned measure"));
    rep.wall_time_s = start.elapsed().as_secs_f64();
    Ok(rep)
}

/// `mean(w) / mean(e)` with its delta-method standard error.
fn ratio_of_means(cells: &[(f64, f64)]) -> Result<(f64, f64)> {
    let m = cells.len() as f64;
    let me = compensated_sum(cells.iter().map(|c| c.0)) / m;
    let mw = compensated_sum(cells.iter().map(|c| c.1)) / m;
    if !(me >= UNDERFLOW) {
        return Err(Error::InfiniteCost);
    }
    let r = mw / me;
    let resid: Vec<f64> = cells.iter().map(|c| c.1 - r * c.0).collect();
    let s = MeanStd::of(&resid);
    Ok((r, s.stderr / me))
}

fn parse<C: DeserializeOwned>(json: &str) -> Result<C> {
    serde_json::from_str(json).map_err(|e| Error::Config(e.to_string()))
}

/// Names accepted by [`run_experiment`].
pub const EXPERIMENTS: [&str; 5] = ["continuity", "convolution", "low-potential", "truncation", "ballisticity"];

/// Parses a JSON config for the named experiment, overrides its seed when
/// given, and runs it.
pub fn run_experiment(name: &str, json: &str, seed: Option<u64>) -> Result<ExperimentReport> {
    macro_rules! go {
        ($t:ty, $f:ident) => {{
            let mut cfg: $t = parse(json)?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            $f(&cfg)
        }};
    }
    match name {
        "continuity" => go!(ContinuityConfig, continuity_run),
        "convolution" => go!(ConvolutionConfig, convolution_bound_run),
        "low-potential" => go!(LowPotentialConfig, low_potential_run),
        "truncation" => go!(TruncationConfig, truncation_bound_run),
        "ballisticity" => go!(BallisticityConfig, ballisticity_run),
        other => Err(Error::Config(format!("unknown experiment '{other}', expected one of {EXPERIMENTS:?}"))),
    }
}
