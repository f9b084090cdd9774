//! Survival fields of the killed walk on a finite box.
//!
//! `e(x) = P̆_x(H(y) < ∞)` for the walk killed at rate `1 - e^{-V}` and
//! absorbed on leaving the box solves the first-step system
//!
//! ```text
//! e(y) = 1,   e(x) = e^{-V(x)} (2d)^{-1} Σ_{|u|=1} e(x+u)   (x ≠ y),
//! ```
//!
//! with `e = 0` outside the box. The same kernel with a source term gives the
//! companion fields `w(x) = E_x[H(y) e^{-ΣV}; H(y) < ∞]` (unit time) and
//! `w(x) = E_x[Σ_{m<H(y)} 1{pred(S_m)} e^{-ΣV}; H(y) < ∞]` (site predicate);
//! `w/e` is then the conditional expectation under the Doob transform.
//!
//! Fields are computed by symmetric Gauss-Seidel sweeps from the zero field.
//! The iterates increase monotonically to the solution, so every field is a
//! lower bound of the infinite-volume quantity and grows with the box.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dist::DistSpec;
use crate::error::{Error, Result};
use crate::lattice::{BoxSpec, Environment, Site};
use crate::rng;
use crate::stats::{compensated_sum, MeanStd};

/// Values below this are treated as underflow.
pub const UNDERFLOW: f64 = 1e-300;
const REL_FLOOR: f64 = 1e-290;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    pub tol: f64,
    pub max_sweeps: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions { tol: 1e-10, max_sweeps: 200_000 }
    }
}

/// Box padded by one ghost layer held at zero.
#[derive(Debug, Clone)]
pub struct Grid {
    pub box_spec: BoxSpec,
    len: usize,
    strides: Vec<usize>,
    /// Padded index of each box site, in enumeration order.
    interior: Vec<u32>,
    /// Box index of each padded slot, `u32::MAX` on the ghost layer.
    to_box: Vec<u32>,
    offsets: Vec<isize>,
}

impl Grid {
    pub fn new(box_spec: BoxSpec) -> Self {
        let d = box_spec.d;
        let n = box_spec.side() + 2;
        let len = n.pow(d as u32);
        let mut strides = vec![1usize; d];
        for k in (0..d.saturating_sub(1)).rev() {
            strides[k] = strides[k + 1] * n;
        }
        let r = box_spec.radius as i64;
        let mut interior = Vec::with_capacity(box_spec.site_count());
        let mut to_box = vec![u32::MAX; len];
        for (i, x) in box_spec.sites().enumerate() {
            let p: usize = x.0.iter().zip(&strides).map(|(&c, &s)| (c + r + 1) as usize * s).sum();
            interior.push(p as u32);
            to_box[p] = i as u32;
        }
        let offsets = strides.iter().flat_map(|&s| [-(s as isize), s as isize]).collect();
        Grid { box_spec, len, strides, interior, to_box, offsets }
    }

    pub fn padded_len(&self) -> usize {
        self.len
    }

    pub fn padded_index(&self, x: &Site) -> Option<usize> {
        self.box_spec.index_of(x).map(|i| self.interior[i] as usize)
    }

    /// Box index of a padded slot, `None` on the ghost layer.
    pub fn box_index(&self, p: usize) -> Option<usize> {
        match self.to_box[p] {
            u32::MAX => None,
            i => Some(i as usize),
        }
    }

    pub fn neighbor_offsets(&self) -> &[isize] {
        &self.offsets
    }

    pub fn coords(&self, p: usize) -> Option<Site> {
        self.box_index(p).map(|i| self.box_spec.site_at(i))
    }

    #[inline]
    fn neighbor_sum(&self, v: &[f64], p: usize) -> f64 {
        self.offsets.iter().map(|&o| v[(p as isize + o) as usize]).sum()
    }

    /// Padded copy of box-ordered values, ghost slots set to `ghost`.
    fn pad(&self, values: impl Iterator<Item = f64>, ghost: f64) -> Vec<f64> {
        let mut out = vec![ghost; self.len];
        for (&p, v) in self.interior.iter().zip(values) {
            out[p as usize] = v;
        }
        out
    }

    fn unpad(&self, padded: &[f64]) -> Vec<f64> {
        self.interior.iter().map(|&p| padded[p as usize]).collect()
    }

    /// Strides of the padded layout, last coordinate fastest.
    pub fn strides(&self) -> &[usize] {
        &self.strides
    }
}

struct Relaxed {
    values: Vec<f64>,
    sweeps: usize,
    residual: f64,
    rel_residual: f64,
}

/// Solves `x = K x + s` with `x[pin] = pin_value`, where
/// `(K x)(p) = kill[p] · Σ_u x(p+u)`.
fn relax(
    grid: &Grid,
    kill: &[f64],
    source: &[f64],
    pin: usize,
    pin_value: f64,
    opts: SolveOptions,
) -> Result<Relaxed> {
    let mut x = vec![0.0; grid.len];
    x[pin] = pin_value;
    // sites that never kill-survive keep their source value
    let mut order = Vec::with_capacity(grid.interior.len());
    for &p in &grid.interior {
        let p = p as usize;
        if p == pin {
            continue;
        }
        if kill[p] == 0.0 {
            x[p] = source[p];
        } else {
            order.push(p);
        }
    }
    let update = |x: &mut [f64], p: usize| -> f64 {
        let new = kill[p] * grid.neighbor_sum(x, p) + source[p];
        let change = (new - x[p]).abs() / new.abs().max(REL_FLOOR);
        x[p] = new;
        change
    };
    let mut prev_change = f64::INFINITY;
    let mut sweeps = 0;
    while sweeps < opts.max_sweeps {
        sweeps += 1;
        let mut change = 0.0f64;
        for &p in &order {
            change = change.max(update(&mut x, p));
        }
        for &p in order.iter().rev() {
            change = change.max(update(&mut x, p));
        }
        let rho = change / prev_change;
        prev_change = change;
        let settled = change == 0.0 || (change < opts.tol && rho < 1.0 && change * rho / (1.0 - rho) < opts.tol);
        if settled {
            let (residual, rel_residual) = residual_of(grid, kill, source, pin, &x);
            if residual <= opts.tol && rel_residual <= opts.tol {
                return Ok(Relaxed { values: x, sweeps, residual, rel_residual });
            }
        }
    }
    let (residual, _) = residual_of(grid, kill, source, pin, &x);
    Err(Error::IterationLimit { sweeps, residual })
}

/// Absolute and relative sup of `|x - (Kx + s)|` over unpinned box sites.
fn residual_of(grid: &Grid, kill: &[f64], source: &[f64], pin: usize, x: &[f64]) -> (f64, f64) {
    let mut abs = 0.0f64;
    let mut rel = 0.0f64;
    for &p in &grid.interior {
        let p = p as usize;
        if p == pin {
            continue;
        }
        let r = (x[p] - (kill[p] * grid.neighbor_sum(x, p) + source[p])).abs();
        abs = abs.max(r);
        rel = rel.max(r / x[p].abs().max(REL_FLOOR));
    }
    (abs, rel)
}

/// The solved field `x ↦ e(x, y, ω)` on a box with Dirichlet-zero boundary.
#[derive(Debug, Clone)]
pub struct SurvivalField {
    pub env: Arc<Environment>,
    pub target: Site,
    pub grid: Arc<Grid>,
    target_slot: usize,
    /// `e^{-V(x)} / (2d)` on the padded layout, zero on the ghost layer.
    kill: Vec<f64>,
    values: Vec<f64>,
    pub tol: f64,
    /// Sup-norm residual of the field equation at unpinned sites.
    pub residual: f64,
    pub rel_residual: f64,
    pub sweeps: usize,
}

/// Solves for `e(·, y, ω)`.
pub fn solve_survival(env: Arc<Environment>, y: &Site, opts: SolveOptions) -> Result<SurvivalField> {
    if !(opts.tol > 0.0) {
        return Err(Error::Config(format!("tol = {} must be > 0", opts.tol)));
    }
    let grid = Arc::new(Grid::new(env.box_spec));
    let target_slot = grid.padded_index(y).ok_or_else(|| Error::OutsideBox(y.to_string()))?;
    let two_d = (2 * env.box_spec.d) as f64;
    let kill = grid.pad(env.values.iter().map(|v| (-v).exp() / two_d), 0.0);
    let source = vec![0.0; grid.len];
    let r = relax(&grid, &kill, &source, target_slot, 1.0, opts)?;
    Ok(SurvivalField {
        env,
        target: y.clone(),
        grid,
        target_slot,
        kill,
        values: r.values,
        tol: opts.tol,
        residual: r.residual,
        rel_residual: r.rel_residual,
        sweeps: r.sweeps,
    })
}

impl SurvivalField {
    pub fn value(&self, x: &Site) -> Option<f64> {
        self.grid.padded_index(x).map(|p| self.values[p])
    }

    /// `e(0, y)`.
    pub fn e0(&self) -> f64 {
        self.value(&Site::origin(self.env.box_spec.d)).expect("origin lies in every box")
    }

    /// Values in box enumeration order.
    pub fn box_values(&self) -> Vec<f64> {
        self.grid.unpad(&self.values)
    }

    #[cfg(test)]
    pub(crate) fn padded_values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn padded_values(&self) -> &[f64] {
        &self.values
    }

    pub fn kill_factors(&self) -> &[f64] {
        &self.kill
    }

    pub fn target_slot(&self) -> usize {
        self.target_slot
    }

    /// `a(x, y) = -ln e(x, y)`, `+∞` when `e` underflows.
    pub fn cost_a(&self, x: &Site) -> Result<f64> {
        let e = self.value(x).ok_or_else(|| Error::OutsideBox(x.to_string()))?;
        Ok(cost_of(e))
    }

    /// Residual of the field equation recomputed from the environment and
    /// box geometry alone, without the padded layout used by the solver.
    pub fn certify(&self) -> f64 {
        let b = self.env.box_spec;
        let vals = self.box_values();
        let two_d = (2 * b.d) as f64;
        let y = b.index_of(&self.target).expect("target in box");
        let mut worst = (vals[y] - 1.0).abs();
        for (i, x) in b.sites().enumerate() {
            if i == y {
                continue;
            }
            let mut s = 0.0;
            for k in 0..b.d {
                for step in [-1, 1] {
                    let mut n = x.clone();
                    n.0[k] += step;
                    if let Some(j) = b.index_of(&n) {
                        s += vals[j];
                    }
                }
            }
            let want = (-self.env.values[i]).exp() / two_d * s;
            worst = worst.max((vals[i] - want).abs());
        }
        worst
    }
}

pub fn cost_of(e: f64) -> f64 {
    if e < UNDERFLOW {
        f64::INFINITY
    } else {
        -e.ln()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum WeightKind {
    UnitTime,
    SitePredicate,
}

/// Companion field `w` on the same box and target as its base field.
#[derive(Debug, Clone)]
pub struct WeightedField {
    pub kind: WeightKind,
    pub grid: Arc<Grid>,
    values: Vec<f64>,
    base_values: Vec<f64>,
    pub residual: f64,
    pub rel_residual: f64,
    pub sweeps: usize,
    /// Set when the box carries no killing at all: the conditional hitting
    /// time then depends on the box size, not only on the environment.
    pub l_sensitive: bool,
}

impl WeightedField {
    pub fn value(&self, x: &Site) -> Option<f64> {
        self.grid.padded_index(x).map(|p| self.values[p])
    }

    /// `w(x) / e(x)`, the box-truncated conditional expectation from `x`.
    pub fn ratio(&self, x: &Site) -> Option<f64> {
        self.grid.padded_index(x).map(|p| {
            let e = self.base_values[p];
            if e > 0.0 {
                self.values[p] / e
            } else {
                f64::NAN
            }
        })
    }

    pub fn ratio0(&self) -> f64 {
        self.ratio(&Site::origin(self.grid.box_spec.d)).expect("origin in box")
    }

    pub fn box_values(&self) -> Vec<f64> {
        self.grid.unpad(&self.values)
    }
}

fn l_sensitive(env: &Environment) -> bool {
    env.dist.laplace() >= 1.0 || env.values.iter().all(|&v| v == 0.0)
}

/// Solves `w(x) = e^{-V(x)} (2d)^{-1} Σ_u (e(x+u) + w(x+u))`, `w(y) = 0`.
pub fn solve_time_weight(field: &SurvivalField) -> Result<WeightedField> {
    let g = &field.grid;
    let mut source = vec![0.0; g.len];
    for &p in &g.interior {
        let p = p as usize;
        if p != field.target_slot {
            source[p] = field.kill[p] * g.neighbor_sum(&field.values, p);
        }
    }
    weighted(field, WeightKind::UnitTime, source)
}

/// Solves `w(x) = pred(x) e(x) + e^{-V(x)} (2d)^{-1} Σ_u w(x+u)`, `w(y) = 0`.
///
/// `pred` receives the site and its potential.
pub fn solve_indicator_weight<P>(field: &SurvivalField, pred: P) -> Result<WeightedField>
where
    P: Fn(&Site, f64) -> bool,
{
    let g = &field.grid;
    let mut source = vec![0.0; g.len];
    for (i, x) in g.box_spec.sites().enumerate() {
        let p = g.interior[i] as usize;
        if p != field.target_slot && pred(&x, field.env.values[i]) {
            source[p] = field.values[p];
        }
    }
    weighted(field, WeightKind::SitePredicate, source)
}

fn weighted(field: &SurvivalField, kind: WeightKind, source: Vec<f64>) -> Result<WeightedField> {
    let opts = SolveOptions { tol: field.tol, ..SolveOptions::default() };
    let r = relax(&field.grid, &field.kill, &source, field.target_slot, 0.0, opts)?;
    Ok(WeightedField {
        kind,
        grid: field.grid.clone(),
        values: r.values,
        base_values: field.values.clone(),
        residual: r.residual,
        rel_residual: r.rel_residual,
        sweeps: r.sweeps,
        l_sensitive: l_sensitive(&field.env),
    })
}

/// Refuses conditional-expectation runs outside the supported regime:
/// `d ≥ 3`, or `d = 2` with a configured `λ > 0` such that `P(V < λ) = 0`.
pub fn require_conditional_regime(d: usize, dist: &DistSpec, lambda: Option<f64>) -> Result<()> {
    match (d, lambda) {
        (d, _) if d >= 3 => Ok(()),
        (2, Some(l)) if l > 0.0 && dist.cdf_left(l) == 0.0 => Ok(()),
        (2, Some(l)) => Err(Error::Config(format!(
            "d = 2 needs potentials bounded below by lambda = {l}, but P(V < {l}) = {}",
            dist.cdf_left(l)
        ))),
        (2, None) => Err(Error::Config(
            "d = 2 conditional runs need a lower potential bound lambda > 0".into(),
        )),
        (d, _) => Err(Error::Config(format!("conditional runs are not supported in d = {d}"))),
    }
}

/// How the box around a target is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BoxPolicy {
    Fixed { radius: usize },
    /// Radius `‖y‖∞ + margin`.
    Margin { margin: usize },
    /// Inflation ladder starting at `‖y‖∞ + margin`.
    Inflate { margin: usize, step: usize, tol_box: f64, max_radius: usize },
}

impl Default for BoxPolicy {
    fn default() -> Self {
        BoxPolicy::Margin { margin: 12 }
    }
}

impl BoxPolicy {
    pub fn initial_radius(&self, y: &Site) -> usize {
        let base = (y.linf() as usize).max(1);
        match *self {
            BoxPolicy::Fixed { radius } => radius,
            BoxPolicy::Margin { margin } | BoxPolicy::Inflate { margin, .. } => base + margin,
        }
    }
}

/// Outcome of [`inflate_until_stable`].
#[derive(Debug, Clone)]
pub struct Inflated {
    pub field: SurvivalField,
    /// `(L, e_L(0))` along the ladder.
    pub ladder: Vec<(usize, f64)>,
}

/// Solves on radii `L0 < L0+step < ...` with nested environments until
/// `e_L(0)` moves by less than `tol_box`.
pub fn inflate_until_stable(
    dist: &DistSpec,
    d: usize,
    seed: u64,
    y: &Site,
    opts: SolveOptions,
    start_radius: usize,
    step: usize,
    tol_box: f64,
    max_radius: usize,
) -> Result<Inflated> {
    if !(tol_box > 0.0) || step == 0 {
        return Err(Error::Config("inflation needs tol_box > 0 and step > 0".into()));
    }
    let mut ladder = Vec::new();
    let mut radius = start_radius.max(y.linf() as usize).max(1);
    loop {
        let env = Arc::new(Environment::sample_unchecked(dist, BoxSpec::new(d, radius)?, seed));
        let field = solve_survival(env, y, opts)?;
        let e0 = field.e0();
        if let Some((_, prev)) = ladder.last() {
            let prev: f64 = *prev;
            // Dirichlet monotonicity, up to solver accuracy
            assert!(
                e0 >= prev - 4.0 * opts.tol * prev.max(UNDERFLOW),
                "e_L(0) decreased along the inflation ladder: {prev} -> {e0}"
            );
            if (e0 - prev).abs() < tol_box {
                ladder.push((radius, e0));
                return Ok(Inflated { field, ladder });
            }
        }
        ladder.push((radius, e0));
        if radius + step > max_radius {
            let (lo_radius, lo) = ladder[ladder.len().saturating_sub(2)];
            return Err(Error::BoxLimit { lo_radius, lo, hi_radius: radius, hi: e0 });
        }
        radius += step;
    }
}

/// Solves `e(·, y)` for one replica environment under a box policy.
pub fn solve_with_policy(
    dist: &DistSpec,
    d: usize,
    seed: u64,
    y: &Site,
    policy: BoxPolicy,
    opts: SolveOptions,
) -> Result<SurvivalField> {
    let radius = policy.initial_radius(y);
    match policy {
        BoxPolicy::Fixed { .. } | BoxPolicy::Margin { .. } => {
            let env = Environment::sample(dist, BoxSpec::new(d, radius)?, seed)?;
            solve_survival(Arc::new(env), y, opts)
        }
        BoxPolicy::Inflate { step, tol_box, max_radius, .. } => {
            inflate_until_stable(dist, d, seed, y, opts, radius, step, tol_box, max_radius)
                .map(|r| r.field)
        }
    }
}

/// Environment seed of replica `r` under a master seed.
pub fn replica_seed(seed: u64, r: usize) -> u64 {
    rng::child_seed(seed, r as u64)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AnnealedCost {
    /// `-ln` of the replica mean of `e(0, y)`.
    pub b: f64,
    /// Delta-method standard error of `b`.
    pub stderr: f64,
    /// Replica mean of `a(0, y)` over finite-cost replicas.
    pub mean_a: f64,
    pub a_stderr: f64,
    pub e_values: Vec<f64>,
    pub radii: Vec<usize>,
}

/// `b(0, y) = -ln mean_r e(0, y, ω_r)` over `m` replica environments.
pub fn annealed_cost_b(
    dist: &DistSpec,
    d: usize,
    y: &Site,
    m: usize,
    seed: u64,
    policy: BoxPolicy,
    opts: SolveOptions,
) -> Result<AnnealedCost> {
    if m < 2 {
        return Err(Error::Config(format!("annealed cost needs at least 2 replicas, got {m}")));
    }
    let solved: Vec<Result<(f64, usize)>> = (0..m)
        .into_par_iter()
        .map(|r| {
            let f = solve_with_policy(dist, d, replica_seed(seed, r), y, policy, opts)?;
            Ok((f.e0(), f.env.box_spec.radius))
        })
        .collect();
    let solved = solved.into_iter().collect::<Result<Vec<_>>>()?;
    let e_values: Vec<f64> = solved.iter().map(|s| s.0).collect();
    let radii = solved.iter().map(|s| s.1).collect();
    let es = MeanStd::of(&e_values);
    if es.mean < UNDERFLOW {
        return Err(Error::InfiniteCost);
    }
    let finite_a: Vec<f64> = e_values.iter().map(|&e| cost_of(e)).filter(|a| a.is_finite()).collect();
    let a = MeanStd::of(&finite_a);
    Ok(AnnealedCost {
        b: -es.mean.ln(),
        stderr: es.stderr / es.mean,
        mean_a: a.mean,
        a_stderr: a.stderr,
        e_values,
        radii,
    })
}

/// `-ln mean(e) ≤ mean(-ln e)` evaluated on one replica set.
pub fn jensen_gap(e_values: &[f64]) -> f64 {
    let n = e_values.len() as f64;
    let mean_e = compensated_sum(e_values.iter().copied()) / n;
    let mean_a = compensated_sum(e_values.iter().map(|&e| cost_of(e))) / n;
    mean_a - (-mean_e.ln())
}
