//! Potential laws on `[0, ∞)`.
//!
//! A [`DistSpec`] is a closed description of a distribution function `F`
//! built from a few analytic families and the exact operators needed by the
//! estimators: lower and upper truncation, the upper residual `V·1{V>t0}`,
//! convolution and pointwise CDF envelopes. Exact algebra (convolution,
//! envelopes) runs on the finite-atom representation; continuous families
//! enter it through [`DistSpec::discretize_floor`] / [`DistSpec::discretize_ceil`].
//!
//! Quantiles follow `F^{-1}(u) = inf{v : F(v) > u}` so that
//! `V = F^{-1}(ξ)` with `ξ` uniform on `[0,1)` has law `F`, and CDF-ordered
//! laws give pointwise ordered samples on a common `ξ`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad;

const ATOM_SUM_TOL: f64 = 1e-12;
const QUAD_TOL: f64 = 1e-13;
/// Upper limit for the Laplace integral; the neglected tail is below `e^{-40}`.
const LAPLACE_CUTOFF: f64 = 40.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DistSpec {
    PointMass { value: f64 },
    /// Atoms `(value, probability)` with strictly increasing values.
    FiniteDiscrete { atoms: Vec<(f64, f64)> },
    Exponential { rate: f64 },
    Uniform { lo: f64, hi: f64 },
    Pareto { shape: f64, scale: f64 },
    /// Law of `max(V, t0)`.
    TruncateBelow { t0: f64, base: Box<DistSpec> },
    /// Law of `min(V, t0)`.
    TruncateAbove { t0: f64, base: Box<DistSpec> },
    /// Law of `V·1{V > t0}`.
    UpperResidual { t0: f64, base: Box<DistSpec> },
    /// Law of `V + W` for independent operands.
    Convolution { lhs: Box<DistSpec>, rhs: Box<DistSpec> },
}

/// Result of [`DistSpec::envelopes`].
#[derive(Debug, Clone, PartialEq)]
pub struct Envelopes {
    /// `min(F_n, F)`, stochastically the larger law.
    pub lower_cdf: DistSpec,
    /// `max(F_n, F)`, stochastically the smaller law.
    pub upper_cdf: DistSpec,
}

impl DistSpec {
    pub fn point_mass(value: f64) -> Self {
        DistSpec::PointMass { value }
    }

    pub fn exponential(rate: f64) -> Self {
        DistSpec::Exponential { rate }
    }

    pub fn uniform(lo: f64, hi: f64) -> Self {
        DistSpec::Uniform { lo, hi }
    }

    pub fn pareto(shape: f64, scale: f64) -> Self {
        DistSpec::Pareto { shape, scale }
    }

    /// Validated finite-atom law.
    pub fn finite_discrete(atoms: Vec<(f64, f64)>) -> Result<Self> {
        let d = DistSpec::FiniteDiscrete { atoms };
        d.validate()?;
        Ok(d)
    }

    /// Two atoms of mass ½ at `lo` and `hi`.
    pub fn bernoulli(lo: f64, hi: f64) -> Self {
        DistSpec::FiniteDiscrete { atoms: vec![(lo, 0.5), (hi, 0.5)] }
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let d: DistSpec = serde_json::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        d.validate()?;
        Ok(d)
    }

    /// Compact JSON, used as a stable identifier in outputs.
    pub fn id(&self) -> String {
        serde_json::to_string(self).expect("DistSpec serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidDist(msg));
        match self {
            DistSpec::PointMass { value } => {
                if !(value.is_finite() && *value >= 0.0) {
                    return bad(format!("point mass value {value} must be finite and >= 0"));
                }
            }
            DistSpec::FiniteDiscrete { atoms } => {
                if atoms.is_empty() {
                    return bad("finite_discrete needs at least one atom".into());
                }
                let mut prev = f64::NEG_INFINITY;
                let mut total = 0.0;
                for &(v, p) in atoms {
                    if !(v.is_finite() && v >= 0.0) {
                        return bad(format!("atom value {v} must be finite and >= 0"));
                    }
                    if v <= prev {
                        return bad("atom values must be strictly increasing".into());
                    }
                    if !(p > 0.0 && p <= 1.0) {
                        return bad(format!("atom probability {p} must lie in (0,1]"));
                    }
                    prev = v;
                    total += p;
                }
                if (total - 1.0).abs() > ATOM_SUM_TOL {
                    return bad(format!("atom probabilities sum to {total}"));
                }
            }
            DistSpec::Exponential { rate } => {
                if !(rate.is_finite() && *rate > 0.0) {
                    return bad(format!("exponential rate {rate} must be > 0"));
                }
            }
            DistSpec::Uniform { lo, hi } => {
                if !(lo.is_finite() && hi.is_finite() && *lo >= 0.0 && hi > lo) {
                    return bad(format!("uniform needs 0 <= lo < hi, got [{lo}, {hi}]"));
                }
            }
            DistSpec::Pareto { shape, scale } => {
                if !(shape.is_finite() && scale.is_finite() && *shape > 0.0 && *scale > 0.0) {
                    return bad("pareto shape and scale must be > 0".into());
                }
            }
            DistSpec::TruncateBelow { t0, base }
            | DistSpec::TruncateAbove { t0, base }
            | DistSpec::UpperResidual { t0, base } => {
                if !(t0.is_finite() && *t0 > 0.0) {
                    return bad(format!("t0 = {t0} must be > 0"));
                }
                base.validate()?;
            }
            DistSpec::Convolution { lhs, rhs } => {
                lhs.validate()?;
                rhs.validate()?;
                if shift_form(lhs, rhs).is_none() && (lhs.atoms().is_none() || rhs.atoms().is_none())
                {
                    return Err(Error::UnsupportedConvolution(
                        "convolution needs a point-mass operand or two discrete operands".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    /// The single atom, when the law is deterministic.
    pub fn as_point_mass(&self) -> Option<f64> {
        match self {
            DistSpec::PointMass { value } => Some(*value),
            _ => match self.atoms() {
                Some(a) if a.len() == 1 => Some(a[0].0),
                _ => None,
            },
        }
    }

    /// Finite-atom representation, when the law reduces to one.
    pub fn atoms(&self) -> Option<Vec<(f64, f64)>> {
        match self {
            DistSpec::PointMass { value } => Some(vec![(*value, 1.0)]),
            DistSpec::FiniteDiscrete { atoms } => Some(atoms.clone()),
            DistSpec::Exponential { .. } | DistSpec::Uniform { .. } | DistSpec::Pareto { .. } => None,
            DistSpec::TruncateBelow { t0, base } => {
                base.atoms().map(|a| normalize_atoms(a.into_iter().map(|(v, p)| (v.max(*t0), p))))
            }
            DistSpec::TruncateAbove { t0, base } => {
                base.atoms().map(|a| normalize_atoms(a.into_iter().map(|(v, p)| (v.min(*t0), p))))
            }
            DistSpec::UpperResidual { t0, base } => base.atoms().map(|a| {
                normalize_atoms(a.into_iter().map(|(v, p)| (if v > *t0 { v } else { 0.0 }, p)))
            }),
            DistSpec::Convolution { lhs, rhs } => {
                let (a, b) = (lhs.atoms()?, rhs.atoms()?);
                Some(convolve_atoms(&a, &b))
            }
        }
    }

    /// `F(t) = P(V <= t)`.
    pub fn cdf(&self, t: f64) -> f64 {
        if t < 0.0 {
            return 0.0;
        }
        match self {
            DistSpec::PointMass { value } => {
                if t >= *value {
                    1.0
                } else {
                    0.0
                }
            }
            DistSpec::FiniteDiscrete { atoms } => {
                atoms.iter().take_while(|(v, _)| *v <= t).map(|(_, p)| p).sum::<f64>().min(1.0)
            }
            DistSpec::Exponential { rate } => -(-rate * t).exp_m1(),
            DistSpec::Uniform { lo, hi } => ((t - lo) / (hi - lo)).clamp(0.0, 1.0),
            DistSpec::Pareto { shape, scale } => {
                if t < *scale {
                    0.0
                } else {
                    1.0 - (scale / t).powf(*shape)
                }
            }
            DistSpec::TruncateBelow { t0, base } => {
                if t < *t0 {
                    0.0
                } else {
                    base.cdf(t)
                }
            }
            DistSpec::TruncateAbove { t0, base } => {
                if t >= *t0 {
                    1.0
                } else {
                    base.cdf(t)
                }
            }
            DistSpec::UpperResidual { t0, base } => {
                if t <= *t0 {
                    base.cdf(*t0)
                } else {
                    base.cdf(t)
                }
            }
            DistSpec::Convolution { lhs, rhs } => match shift_form(lhs, rhs) {
                Some((other, c)) => other.cdf(t - c),
                None => discrete_cdf(&self.atoms().expect("validated convolution"), t, false),
            },
        }
    }

    /// Left limit `F(t-) = P(V < t)`.
    pub fn cdf_left(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        match self {
            DistSpec::PointMass { value } => {
                if t > *value {
                    1.0
                } else {
                    0.0
                }
            }
            DistSpec::FiniteDiscrete { atoms } => discrete_cdf(atoms, t, true),
            DistSpec::Exponential { .. } | DistSpec::Uniform { .. } | DistSpec::Pareto { .. } => {
                self.cdf(t)
            }
            DistSpec::TruncateBelow { t0, base } => {
                if t <= *t0 {
                    0.0
                } else {
                    base.cdf_left(t)
                }
            }
            DistSpec::TruncateAbove { t0, base } => {
                if t > *t0 {
                    1.0
                } else {
                    base.cdf_left(t)
                }
            }
            DistSpec::UpperResidual { t0, base } => {
                if t <= *t0 {
                    base.cdf(*t0)
                } else {
                    base.cdf_left(t)
                }
            }
            DistSpec::Convolution { lhs, rhs } => match shift_form(lhs, rhs) {
                Some((other, c)) => other.cdf_left(t - c),
                None => discrete_cdf(&self.atoms().expect("validated convolution"), t, true),
            },
        }
    }

    /// `inf{v : F(v) > u}` for `u` in `[0, 1)`.
    pub fn inverse_cdf(&self, u: f64) -> Result<f64> {
        if !(0.0..1.0).contains(&u) {
            return Err(Error::Domain(format!("inverse_cdf needs u in [0,1), got {u}")));
        }
        Ok(self.quantile(u))
    }

    /// [`DistSpec::inverse_cdf`] without the domain check; `u` must lie in `[0,1)`.
    pub fn quantile(&self, u: f64) -> f64 {
        match self {
            DistSpec::PointMass { value } => *value,
            DistSpec::FiniteDiscrete { atoms } => discrete_quantile(atoms, u),
            DistSpec::Exponential { rate } => -(-u).ln_1p() / rate,
            DistSpec::Uniform { lo, hi } => lo + u * (hi - lo),
            DistSpec::Pareto { shape, scale } => scale * (1.0 - u).powf(-1.0 / shape),
            DistSpec::TruncateBelow { t0, base } => base.quantile(u).max(*t0),
            DistSpec::TruncateAbove { t0, base } => base.quantile(u).min(*t0),
            DistSpec::UpperResidual { t0, base } => {
                if base.cdf(*t0) > u {
                    0.0
                } else {
                    base.quantile(u)
                }
            }
            DistSpec::Convolution { lhs, rhs } => match shift_form(lhs, rhs) {
                Some((other, c)) => other.quantile(u) + c,
                None => discrete_quantile(&self.atoms().expect("validated convolution"), u),
            },
        }
    }

    /// `∫ e^{-t} dF(t) = E e^{-V}`.
    pub fn laplace(&self) -> f64 {
        if let Some(atoms) = self.atoms() {
            return atoms.iter().map(|&(v, p)| p * (-v).exp()).sum();
        }
        match self {
            DistSpec::Exponential { rate } => rate / (rate + 1.0),
            DistSpec::Uniform { lo, hi } => ((-lo).exp() - (-hi).exp()) / (hi - lo),
            // E e^{-V} = ∫_0^∞ e^{-t} F(t) dt
            _ => {
                let body = quad::integrate(
                    |t| (-t).exp() * self.cdf(t),
                    0.0,
                    LAPLACE_CUTOFF,
                    &self.breakpoints(),
                    QUAD_TOL,
                );
                body + (-LAPLACE_CUTOFF).exp() * self.cdf(LAPLACE_CUTOFF)
            }
        }
    }

    /// `∫ t dF(t)`, `+∞` for infinite-mean laws.
    pub fn mean(&self) -> f64 {
        if let Some(atoms) = self.atoms() {
            return atoms.iter().map(|&(v, p)| p * v).sum();
        }
        match self {
            DistSpec::Exponential { rate } => 1.0 / rate,
            DistSpec::Uniform { lo, hi } => 0.5 * (lo + hi),
            DistSpec::Pareto { shape, scale } => {
                if *shape <= 1.0 {
                    f64::INFINITY
                } else {
                    shape * scale / (shape - 1.0)
                }
            }
            // E max(V,t0) = E V + ∫_0^t0 F
            DistSpec::TruncateBelow { t0, base } => base.mean() + base.integral_cdf(*t0),
            // E min(V,t0) = ∫_0^t0 (1 - F)
            DistSpec::TruncateAbove { t0, base } => t0 - base.integral_cdf(*t0),
            // E V 1{V>t0} = E V - (E min(V,t0) - t0 P(V > t0))
            DistSpec::UpperResidual { t0, base } => {
                let m = base.mean();
                if m.is_infinite() {
                    return m;
                }
                let below = t0 - base.integral_cdf(*t0) - t0 * (1.0 - base.cdf(*t0));
                (m - below).max(0.0)
            }
            DistSpec::Convolution { lhs, rhs } => lhs.mean() + rhs.mean(),
            DistSpec::PointMass { .. } | DistSpec::FiniteDiscrete { .. } => unreachable!(),
        }
    }

    /// `∫_0^t F(s) ds`.
    fn integral_cdf(&self, t: f64) -> f64 {
        if let Some(atoms) = self.atoms() {
            return atoms.iter().filter(|(v, _)| *v < t).map(|&(v, p)| p * (t - v)).sum();
        }
        quad::integrate(|s| self.cdf(s), 0.0, t, &self.breakpoints(), QUAD_TOL)
    }

    /// Points where the CDF may jump or kink.
    pub fn breakpoints(&self) -> Vec<f64> {
        match self {
            DistSpec::PointMass { value } => vec![*value],
            DistSpec::FiniteDiscrete { atoms } => atoms.iter().map(|a| a.0).collect(),
            DistSpec::Exponential { .. } => vec![0.0],
            DistSpec::Uniform { lo, hi } => vec![*lo, *hi],
            DistSpec::Pareto { scale, .. } => vec![*scale],
            DistSpec::TruncateBelow { t0, base }
            | DistSpec::TruncateAbove { t0, base }
            | DistSpec::UpperResidual { t0, base } => {
                let mut b = base.breakpoints();
                b.push(*t0);
                b
            }
            DistSpec::Convolution { lhs, rhs } => match shift_form(lhs, rhs) {
                Some((other, c)) => other.breakpoints().into_iter().map(|t| t + c).collect(),
                None => self.atoms().map(|a| a.iter().map(|x| x.0).collect()).unwrap_or_default(),
            },
        }
    }

    /// Membership in 𝒟: no mass below zero (by construction) and `F(0) < 1`.
    pub fn in_d(&self) -> bool {
        self.cdf(0.0) < 1.0
    }

    /// Membership in 𝒟₁: in 𝒟 with finite mean.
    pub fn in_d1(&self) -> bool {
        self.in_d() && self.mean().is_finite()
    }

    /// Law of `V·1{V≥t0} + t0·1{V<t0}`.
    pub fn truncate_below(&self, t0: f64) -> Result<Self> {
        check_t0(t0)?;
        if let Some(atoms) = self.atoms() {
            return Ok(from_atoms(atoms.into_iter().map(|(v, p)| (v.max(t0), p))));
        }
        Ok(DistSpec::TruncateBelow { t0, base: Box::new(self.clone()) })
    }

    /// Law of `min(V, t0)`.
    pub fn truncate_above(&self, t0: f64) -> Result<Self> {
        check_t0(t0)?;
        if let Some(atoms) = self.atoms() {
            return Ok(from_atoms(atoms.into_iter().map(|(v, p)| (v.min(t0), p))));
        }
        Ok(DistSpec::TruncateAbove { t0, base: Box::new(self.clone()) })
    }

    /// Law of `V·1{V > t0}`.
    pub fn upper_residual(&self, t0: f64) -> Result<Self> {
        check_t0(t0)?;
        if let Some(atoms) = self.atoms() {
            return Ok(from_atoms(
                atoms.into_iter().map(|(v, p)| (if v > t0 { v } else { 0.0 }, p)),
            ));
        }
        Ok(DistSpec::UpperResidual { t0, base: Box::new(self.clone()) })
    }

    /// Law of `V + W`, `V ~ self`, `W ~ other` independent.
    pub fn convolve(&self, other: &DistSpec) -> Result<Self> {
        if let (Some(a), Some(b)) = (self.atoms(), other.atoms()) {
            return Ok(from_atoms(convolve_atoms(&a, &b)));
        }
        if shift_form(self, other).is_some() {
            return Ok(DistSpec::Convolution {
                lhs: Box::new(self.clone()),
                rhs: Box::new(other.clone()),
            });
        }
        Err(Error::UnsupportedConvolution(format!(
            "{} * {}: discretize continuous operands first",
            self.id(),
            other.id()
        )))
    }

    /// Pointwise `min` and `max` of the two CDFs.
    pub fn envelopes(&self, other: &DistSpec) -> Result<Envelopes> {
        let (a, b) = match (self.atoms(), other.atoms()) {
            (Some(a), Some(b)) => (a, b),
            _ => {
                return Err(Error::UnsupportedConvolution(
                    "envelopes need operands that reduce to finite atoms".into(),
                ))
            }
        };
        let mut grid: Vec<f64> = a.iter().chain(b.iter()).map(|x| x.0).collect();
        grid.sort_by(|x, y| x.partial_cmp(y).unwrap());
        grid.dedup();
        let fa: Vec<f64> = grid.iter().map(|&g| discrete_cdf(&a, g, false)).collect();
        let fb: Vec<f64> = grid.iter().map(|&g| discrete_cdf(&b, g, false)).collect();
        let lower: Vec<f64> = fa.iter().zip(&fb).map(|(x, y)| x.min(*y)).collect();
        let upper: Vec<f64> = fa.iter().zip(&fb).map(|(x, y)| x.max(*y)).collect();
        Ok(Envelopes {
            lower_cdf: from_step_cdf(&grid, &lower),
            upper_cdf: from_step_cdf(&grid, &upper),
        })
    }

    /// Law of `min(step·⌊V/step⌋, cap)`; its CDF dominates `F`.
    ///
    /// On a common uniform the discretized value never exceeds the original,
    /// and refining a dyadic step never decreases it.
    pub fn discretize_floor(&self, step: f64, cap: f64) -> Result<Self> {
        let k_max = grid_len(step, cap)?;
        let mut atoms = Vec::with_capacity(k_max + 1);
        let mut prev = 0.0;
        for k in 0..k_max {
            let next = self.cdf_left((k + 1) as f64 * step);
            atoms.push((k as f64 * step, next - prev));
            prev = next;
        }
        atoms.push((k_max as f64 * step, 1.0 - prev));
        Ok(from_atoms(atoms))
    }

    /// Law of `step·⌈V/step⌉` with the mass beyond `cap` placed at the last
    /// grid point; its CDF is dominated by `F` below `cap`.
    pub fn discretize_ceil(&self, step: f64, cap: f64) -> Result<Self> {
        let k_max = grid_len(step, cap)?;
        let mut atoms = Vec::with_capacity(k_max + 1);
        let mut prev = self.cdf(0.0);
        atoms.push((0.0, prev));
        for k in 1..=k_max {
            let next = if k == k_max { 1.0 } else { self.cdf(k as f64 * step) };
            atoms.push((k as f64 * step, next - prev));
            prev = next;
        }
        Ok(from_atoms(atoms))
    }

    /// `c(t0, F) = ln((1 - (1-p) e^{-t0}) / p)` with `p = F(t0-)`.
    pub fn low_potential_constant(&self, t0: f64) -> Result<f64> {
        check_t0(t0)?;
        let p = self.cdf_left(t0);
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::DegenerateThreshold(format!(
                "P(V < {t0}) = {p} must lie strictly between 0 and 1"
            )));
        }
        Ok(((1.0 - (1.0 - p) * (-t0).exp()) / p).ln())
    }
}

fn check_t0(t0: f64) -> Result<()> {
    if t0.is_finite() && t0 > 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("t0 = {t0} must be > 0")))
    }
}

fn grid_len(step: f64, cap: f64) -> Result<usize> {
    if !(step > 0.0 && cap > 0.0 && step.is_finite() && cap.is_finite()) {
        return Err(Error::Domain(format!("bad discretization step {step} / cap {cap}")));
    }
    Ok(((cap / step).ceil() as usize).max(1))
}

/// Splits a convolution into `(non-degenerate operand, shift)` when one side
/// is a point mass.
fn shift_form<'a>(lhs: &'a DistSpec, rhs: &'a DistSpec) -> Option<(&'a DistSpec, f64)> {
    if let Some(c) = rhs.as_point_mass() {
        return Some((lhs, c));
    }
    lhs.as_point_mass().map(|c| (rhs, c))
}

fn discrete_cdf(atoms: &[(f64, f64)], t: f64, strict: bool) -> f64 {
    atoms
        .iter()
        .take_while(|(v, _)| if strict { *v < t } else { *v <= t })
        .map(|(_, p)| p)
        .sum::<f64>()
        .min(1.0)
}

fn discrete_quantile(atoms: &[(f64, f64)], u: f64) -> f64 {
    let mut cum = 0.0;
    for &(v, p) in atoms {
        cum += p;
        if cum > u {
            return v;
        }
    }
    atoms.last().expect("non-empty atoms").0
}

/// Sorts, merges equal values and drops empty atoms.
fn normalize_atoms(atoms: impl IntoIterator<Item = (f64, f64)>) -> Vec<(f64, f64)> {
    let mut v: Vec<(f64, f64)> = atoms.into_iter().filter(|a| a.1 > 0.0).collect();
    v.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let mut out: Vec<(f64, f64)> = Vec::with_capacity(v.len());
    for (x, p) in v {
        match out.last_mut() {
            Some(last) if last.0 == x => last.1 += p,
            _ => out.push((x, p)),
        }
    }
    out
}

fn from_atoms(atoms: impl IntoIterator<Item = (f64, f64)>) -> DistSpec {
    let atoms = normalize_atoms(atoms);
    if atoms.len() == 1 {
        DistSpec::PointMass { value: atoms[0].0 }
    } else {
        DistSpec::FiniteDiscrete { atoms }
    }
}

fn from_step_cdf(grid: &[f64], cdf: &[f64]) -> DistSpec {
    let n = grid.len();
    let mut prev = 0.0;
    let mut atoms = Vec::with_capacity(n);
    for i in 0..n {
        let c = if i + 1 == n { 1.0 } else { cdf[i] };
        atoms.push((grid[i], c - prev));
        prev = c;
    }
    from_atoms(atoms)
}

fn convolve_atoms(a: &[(f64, f64)], b: &[(f64, f64)]) -> Vec<(f64, f64)> {
    normalize_atoms(
        a.iter().flat_map(|&(x, p)| b.iter().map(move |&(y, q)| (x + y, p * q))).collect::<Vec<_>>(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn coin() -> DistSpec {
        DistSpec::bernoulli(0.0, 1.0)
    }

    /// Composite Simpson on a fine grid, independent of the adaptive rule.
    fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
        let h = (b - a) / n as f64;
        let mut s = f(a) + f(b);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            s += w * f(a + i as f64 * h);
        }
        s * h / 3.0
    }

    #[test]
    fn cdf_examples() {
        assert_eq!(coin().cdf(0.5), 0.5);
        assert_eq!(DistSpec::exponential(1.0).cdf(0.0), 0.0);
        let tb = DistSpec::exponential(1.0).truncate_below(1.0).unwrap();
        assert_eq!(tb.cdf(0.5), 0.0);
        assert!((tb.cdf(1.0) - (1.0 - (-1.0f64).exp())).abs() < 1e-15);
        assert_eq!(coin().cdf(-1.0), 0.0);
    }

    #[test]
    fn inverse_cdf_examples() {
        assert_eq!(coin().inverse_cdf(0.3).unwrap(), 0.0);
        assert_eq!(coin().inverse_cdf(0.5).unwrap(), 1.0);
        let q = DistSpec::exponential(1.0).inverse_cdf(0.5).unwrap();
        assert!((q - 2f64.ln()).abs() < 1e-15);
        assert!(matches!(coin().inverse_cdf(1.0), Err(Error::Domain(_))));
        assert!(matches!(coin().inverse_cdf(-0.1), Err(Error::Domain(_))));
    }

    #[test]
    fn laplace_examples() {
        assert!((DistSpec::point_mass(1.0).laplace() - (-1.0f64).exp()).abs() < 1e-15);
        assert!((DistSpec::exponential(1.0).laplace() - 0.5).abs() < 1e-15);
        assert!((coin().laplace() - 0.683_939_720_585_721_2).abs() < 1e-15);
    }

    #[test]
    fn laplace_by_quadrature_matches_closed_forms() {
        // route a closed-form family through the generic quadrature path
        let e = DistSpec::exponential(2.0).truncate_below(1e-9).unwrap();
        assert!((e.laplace() - 2.0 / 3.0).abs() < 1e-9);
        let u = DistSpec::uniform(0.5, 2.0);
        let via_quad = DistSpec::TruncateAbove { t0: 100.0, base: Box::new(u.clone()) };
        assert!((via_quad.laplace() - u.laplace()).abs() < 1e-10);
    }

    #[test]
    fn mean_examples() {
        assert_eq!(DistSpec::point_mass(1.0).mean(), 1.0);
        assert_eq!(DistSpec::pareto(0.5, 1.0).mean(), f64::INFINITY);
        assert!(!DistSpec::pareto(0.5, 1.0).in_d1());
        assert!(DistSpec::pareto(0.5, 1.0).in_d());
        let ta = DistSpec::exponential(1.0).truncate_above(2.0).unwrap();
        let oracle = simpson(|t| 1.0 - DistSpec::exponential(1.0).cdf(t), 0.0, 2.0, 2000);
        assert!((ta.mean() - oracle).abs() < 1e-10);
        assert!((ta.mean() - 0.864_664_716_763_387_3).abs() < 1e-10);
    }

    #[test]
    fn truncated_pareto_has_finite_mean() {
        let p = DistSpec::pareto(0.5, 1.0);
        let ta = p.truncate_above(4.0).unwrap();
        // ∫_0^4 (1 - F) = 1 + ∫_1^4 t^{-1/2} dt = 1 + 2(2 - 1) = 3
        let oracle = simpson(|t| 1.0 - p.cdf(t), 1.0, 4.0, 4000) + 1.0;
        assert!((oracle - 3.0).abs() < 1e-9);
        assert!((ta.mean() - oracle).abs() < 1e-9);
        assert!(ta.in_d1());
    }

    #[test]
    fn truncate_below_examples() {
        assert_eq!(DistSpec::point_mass(2.0).truncate_below(1.0).unwrap(), DistSpec::point_mass(2.0));
        let d = DistSpec::bernoulli(0.0, 2.0).truncate_below(1.0).unwrap();
        assert_eq!(d, DistSpec::bernoulli(1.0, 2.0));
    }

    #[test]
    fn truncate_above_examples() {
        assert_eq!(DistSpec::point_mass(2.0).truncate_above(1.0).unwrap(), DistSpec::point_mass(1.0));
        let d = DistSpec::bernoulli(0.0, 2.0).truncate_above(1.0).unwrap();
        assert_eq!(d, DistSpec::bernoulli(0.0, 1.0));
    }

    #[test]
    fn upper_residual_examples() {
        assert_eq!(DistSpec::point_mass(1.0).upper_residual(2.0).unwrap(), DistSpec::point_mass(0.0));
        let d = DistSpec::bernoulli(1.0, 3.0).upper_residual(2.0).unwrap();
        assert_eq!(d, DistSpec::bernoulli(0.0, 3.0));
        let r = DistSpec::exponential(1.0).upper_residual(1.0).unwrap();
        let oracle = DistSpec::exponential(1.0).cdf(1.0)
            + simpson(|t| (-2.0 * t).exp(), 1.0, 60.0, 20_000);
        let closed = 1.0 - (-1.0f64).exp() + (-2.0f64).exp() / 2.0;
        assert!((oracle - closed).abs() < 1e-10);
        assert!((r.laplace() - closed).abs() < 1e-10);
        // atom at zero carries F(t0)
        assert!((r.cdf(0.0) - r.cdf(1.0)).abs() < 1e-15);
        assert_eq!(r.quantile(0.1), 0.0);
    }

    #[test]
    fn convolve_examples() {
        let c = coin().convolve(&coin()).unwrap();
        assert_eq!(
            c,
            DistSpec::FiniteDiscrete { atoms: vec![(0.0, 0.25), (1.0, 0.5), (2.0, 0.25)] }
        );
        let s = DistSpec::exponential(1.0).convolve(&DistSpec::point_mass(0.7)).unwrap();
        for t in [0.0, 0.5, 0.7, 1.0, 3.0] {
            let want = if t >= 0.7 { 1.0 - (-(t - 0.7f64)).exp() } else { 0.0 };
            assert!((s.cdf(t) - want).abs() < 1e-15);
        }
        assert!((s.mean() - 1.7).abs() < 1e-15);
        let err = DistSpec::exponential(1.0).convolve(&DistSpec::uniform(0.0, 1.0));
        assert!(matches!(err, Err(Error::UnsupportedConvolution(_))));
    }

    #[test]
    fn envelope_examples() {
        let f = coin();
        let e = f.envelopes(&f).unwrap();
        assert_eq!(e.lower_cdf, f);
        assert_eq!(e.upper_cdf, f);

        let e = DistSpec::point_mass(0.0).envelopes(&DistSpec::point_mass(1.0)).unwrap();
        assert_eq!(e.lower_cdf, DistSpec::point_mass(1.0));
        assert_eq!(e.upper_cdf, DistSpec::point_mass(0.0));

        let fn_ = DistSpec::finite_discrete(vec![(0.0, 0.3), (2.0, 0.7)]).unwrap();
        let g = DistSpec::point_mass(1.0);
        let e = fn_.envelopes(&g).unwrap();
        for t in [0.0, 1.0, 2.0] {
            let lo = fn_.cdf(t).min(g.cdf(t));
            let hi = fn_.cdf(t).max(g.cdf(t));
            assert!((e.lower_cdf.cdf(t) - lo).abs() < 1e-15);
            assert!((e.upper_cdf.cdf(t) - hi).abs() < 1e-15);
        }
    }

    #[test]
    fn low_potential_constant_examples() {
        let c = coin().low_potential_constant(0.5).unwrap();
        assert!((c - (2.0 - (-0.5f64).exp()).ln()).abs() < 1e-15);
        assert!((c - 0.331_796_6).abs() < 1e-7);
        assert!(matches!(
            DistSpec::point_mass(1.0).low_potential_constant(0.5),
            Err(Error::DegenerateThreshold(_))
        ));
        assert!(matches!(
            DistSpec::point_mass(1.0).low_potential_constant(2.0),
            Err(Error::DegenerateThreshold(_))
        ));
    }

    #[test]
    fn left_limits_respect_atoms() {
        assert_eq!(coin().cdf_left(1.0), 0.5);
        assert_eq!(coin().cdf(1.0), 1.0);
        assert_eq!(DistSpec::point_mass(1.0).cdf_left(1.0), 0.0);
    }

    #[test]
    fn floor_discretization_is_coupled() {
        let f = DistSpec::exponential(1.0);
        let coarse = f.discretize_floor(0.5, 40.0).unwrap();
        let fine = f.discretize_floor(0.0625, 40.0).unwrap();
        for i in 0..1000 {
            let u = (i as f64 + 0.37) / 1000.0;
            let v = f.quantile(u);
            let (vc, vf) = (coarse.quantile(u), fine.quantile(u));
            assert!(vc <= vf && vf <= v, "u={u}: {vc} {vf} {v}");
            assert_eq!(vf, (v / 0.0625).floor() * 0.0625);
        }
        let ceil = f.discretize_ceil(0.25, 40.0).unwrap();
        for i in 0..1000 {
            let u = (i as f64 + 0.37) / 1000.0;
            assert!(ceil.quantile(u) >= f.quantile(u));
        }
    }

    #[test]
    fn json_round_trip() {
        let s = r#"{"kind":"truncate_above","t0":2.0,"base":{"kind":"exponential","rate":1.0}}"#;
        let d = DistSpec::from_json(s).unwrap();
        assert_eq!(d, DistSpec::exponential(1.0).truncate_above(2.0).unwrap());
        assert_eq!(DistSpec::from_json(&d.id()).unwrap(), d);
        assert!(DistSpec::from_json(r#"{"kind":"exponential","rate":-1}"#).is_err());
        assert!(DistSpec::from_json(r#"{"kind":"exponential","rat":1}"#).is_err());
        let fd = r#"{"kind":"finite_discrete","atoms":[[0,0.5],[1,0.4]]}"#;
        assert!(matches!(DistSpec::from_json(fd), Err(Error::InvalidDist(_))));
    }
}
