//! Return-probability series oracle for the tabulated visit constant.

use lyaplab::green::{green_constant, D_TABLE};

fn ln_factorials(n: usize) -> Vec<f64> {
    let mut v = vec![0.0; n + 1];
    for k in 1..=n {
        v[k] = v[k - 1] + (k as f64).ln();
    }
    v
}

/// `P_0(S_{2k} = 0)` in three dimensions:
/// `C(2k,k) Σ_j C(k,j)² C(2j,j) / 36^k`.
fn p3(k: usize, lf: &[f64]) -> f64 {
    let ln_c = |n: usize, r: usize| lf[n] - lf[r] - lf[n - r];
    let base = ln_c(2 * k, k) - (k as f64) * 36f64.ln();
    let terms: Vec<f64> = (0..=k).map(|j| 2.0 * ln_c(k, j) + ln_c(2 * j, j)).collect();
    let m = terms.iter().cloned().fold(f64::MIN, f64::max);
    (base + m + terms.iter().map(|t| (t - m).exp()).sum::<f64>().ln()).exp()
}

fn series_d3(kmax: usize) -> f64 {
    let lf = ln_factorials(4 * kmax + 2);
    let mut sum = 0.0;
    for k in 0..=kmax {
        sum += p3(k, &lf);
    }
    // tail p_{2k} ≈ A k^{-3/2} (1 - c/k), with c fitted from the last terms
    let a = 2.0 * (3.0 / (4.0 * std::f64::consts::PI)).powf(1.5);
    let r = |k: usize| p3(k, &lf) * (k as f64).powf(1.5) / a;
    let k2 = kmax;
    let c = (1.0 - r(k2)) * k2 as f64;
    let x = kmax as f64 + 0.5;
    let tail = a * (2.0 / x.sqrt() - c * 2.0 / (3.0 * x.powf(1.5)));
    sum + tail
}

#[test]
fn d3_series_agrees_with_table() {
    let s = series_d3(3000);
    let t = green_constant(3).unwrap();
    assert!((s - t).abs() < 2e-5, "series {s} vs table {t}");
    assert!((t - 1.5164).abs() < 5e-4);
}

#[test]
fn table_is_decreasing_towards_one() {
    for w in D_TABLE.windows(2) {
        assert!(w[1].1 < w[0].1);
        assert!(w[1].1 > 1.0);
    }
}
