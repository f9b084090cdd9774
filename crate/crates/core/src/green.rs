//! Expected number of visits to the origin by the simple random walk on `Z^d`,
//! `D(d) = Σ_k P_0(S_k = 0) = 1 / (1 - P_0(return))`.
//!
//! The table below was generated by [`visits_integral`] and is cross-checked
//! in the test suite against a direct summation of return probabilities.

use crate::error::{Error, Result};
use crate::quad::integrate;

/// `(d, D(d))` for `d = 3..=8`.
pub const D_TABLE: [(usize, f64); 6] = [
    (3, 1.516_386_059_151_930),
    (4, 1.239_467_121_848_481),
    (5, 1.156_308_124_840_231),
    (6, 1.116_963_373_226_671),
    (7, 1.093_906_315_587_848),
    (8, 1.078_647_012_016_925),
];

/// Tabulated `D(d)`; the walk is recurrent for `d ≤ 2`.
pub fn green_constant(d: usize) -> Result<f64> {
    D_TABLE
        .iter()
        .find(|(k, _)| *k == d)
        .map(|&(_, v)| v)
        .ok_or_else(|| Error::Domain(format!("D(d) is tabulated for 3 <= d <= 8, got d = {d}")))
}

/// Replacement constant `1 / (1 - e^{-λ})` for `d = 2` with potentials bounded below by `λ`.
pub fn bounded_below_constant(lambda: f64) -> Result<f64> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::Domain(format!("lambda = {lambda} must be positive and finite")));
    }
    Ok(1.0 / (-(-lambda).exp_m1()))
}

/// `e^{-s} I_0(s)`.
pub fn bessel_i0_scaled(s: f64) -> f64 {
    if s < 25.0 {
        let q = 0.25 * s * s;
        let (mut term, mut sum, mut k) = (1.0, 1.0, 0.0);
        while term > 1e-17 * sum {
            k += 1.0;
            term *= q / (k * k);
            sum += term;
        }
        sum * (-s).exp()
    } else {
        // Hankel expansion, error below 1e-14 for s >= 25
        let mut term = 1.0;
        let mut sum = 1.0;
        for k in 1..12 {
            let m = (2 * k - 1) as f64;
            term *= m * m / (8.0 * k as f64 * s);
            sum += term;
        }
        sum / (2.0 * std::f64::consts::PI * s).sqrt()
    }
}

/// `D(d) = d ∫_0^∞ (e^{-s} I_0(s))^d ds`, the continuous-time form of the visit count.
pub fn visits_integral(d: usize) -> Result<f64> {
    if d < 3 {
        return Err(Error::Domain(format!("D(d) diverges for d = {d}")));
    }
    let df = d as f64;
    let f = |s: f64| df * bessel_i0_scaled(s).powi(d as i32);
    let cut = 1e8;
    let breaks = [1.0, 5.0, 25.0, 1e2, 1e3, 1e4, 1e5, 1e6, 1e7];
    let body = integrate(f, 0.0, cut, &breaks, 1e-13);
    // (2πs)^{-d/2} (1 + d/(8s) + ...) integrated beyond the cut
    let c = df * (2.0 * std::f64::consts::PI).powf(-df / 2.0);
    let p = df / 2.0;
    let tail = c * (cut.powf(1.0 - p) / (p - 1.0) + df / 8.0 * cut.powf(-p) / p);
    Ok(body + tail)
}
