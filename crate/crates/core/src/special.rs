//! Log-space factorial and Poisson weights.
//!
//! Every magnitude `r^m / m!` in this crate goes through [`log_poisson_weight`],
//! which returns `m ln r - r - ln m!` without ever forming the factorial.
//! The saddle-point form (Stirling remainder plus a deviance term) keeps the
//! result accurate to a few ulps even when `m` and `r` are both ~1e8 and the
//! naive expression would cancel away all significant digits.

use std::f64::consts::PI;

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// `ln m!` computed by direct summation for small `m`.
fn ln_factorial_small(m: u64) -> f64 {
    (2..=m).map(|k| (k as f64).ln()).sum()
}

/// Stirling remainder `ln m! - [(m + 1/2) ln m - m + ln sqrt(2 pi)]`.
pub fn stirling_remainder(m: u64) -> f64 {
    const S0: f64 = 1.0 / 12.0;
    const S1: f64 = 1.0 / 360.0;
    const S2: f64 = 1.0 / 1260.0;
    const S3: f64 = 1.0 / 1680.0;
    const S4: f64 = 1.0 / 1188.0;
    assert!(m > 0, "stirling remainder is undefined at 0");
    let n = m as f64;
    if m <= 15 {
        return ln_factorial_small(m) - (n + 0.5) * n.ln() + n - LN_SQRT_2PI;
    }
    let nn = n * n;
    if m > 500 {
        (S0 - S1 / nn) / n
    } else if m > 80 {
        (S0 - (S1 - S2 / nn) / nn) / n
    } else if m > 35 {
        (S0 - (S1 - (S2 - S3 / nn) / nn) / nn) / n
    } else {
        (S0 - (S1 - (S2 - (S3 - S4 / nn) / nn) / nn) / nn) / n
    }
}

/// Deviance term `x ln(x / mean) + mean - x`, evaluated without cancellation
/// when `x` is close to `mean`.
fn deviance(x: f64, mean: f64) -> f64 {
    if (x - mean).abs() < 0.1 * (x + mean) {
        let mut v = (x - mean) / (x + mean);
        let mut s = (x - mean) * v;
        let mut ej = 2.0 * x * v;
        v *= v;
        for j in 1..1000 {
            ej *= v;
            let next = s + ej / (2 * j + 1) as f64;
            if next == s {
                return next;
            }
            s = next;
        }
        s
    } else {
        x * (x / mean).ln() + mean - x
    }
}

/// `ln m!`.
pub fn ln_factorial(m: u64) -> f64 {
    match m {
        0 | 1 => 0.0,
        2..=15 => ln_factorial_small(m),
        _ => {
            let n = m as f64;
            (n + 0.5) * n.ln() - n + LN_SQRT_2PI + stirling_remainder(m)
        }
    }
}

/// `ln(e^{-r} r^m / m!)`, the log of the Poisson(r) mass at `m`.
///
/// Returns `-inf` for `r == 0` and `m > 0`.
pub fn log_poisson_weight(m: u64, r: f64) -> f64 {
    debug_assert!(r >= 0.0);
    if m == 0 {
        return -r;
    }
    if r == 0.0 {
        return f64::NEG_INFINITY;
    }
    let x = m as f64;
    -stirling_remainder(m) - deviance(x, r) - 0.5 * (2.0 * PI * x).ln()
}

/// `ln(r^m / m!)` without the `e^{-r}` factor.
pub fn log_power_over_factorial(m: u64, r: f64) -> f64 {
    log_poisson_weight(m, r) + r
}

#[cfg(test)]
mod tests {
    use super::*;

    // Reference values computed with 40-digit arithmetic:
    // m ln r - r - lnGamma(m + 1).
    const ORACLE: &[(u64, f64, f64)] = &[
        (8100, 8100.0, -5.418_758_491_600_776),
        (5, 2.5, -2.706_038_083_411_270_7),
        (100, 50.0, -22.537_075_012_748_884),
        (100_000, 99_000.0, -11.708_987_449_167_239),
        (3, 1.0, -2.791_759_469_228_055),
        (0, 3.0, -3.0),
        (50, 1.0, -149.477_766_951_773_03),
        (1_000_000, 1_000_000.0, -7.826_693_895_520_143),
    ];

    #[test]
    fn poisson_weight_matches_high_precision_oracle() {
        for &(m, r, expected) in ORACLE {
            let got = log_poisson_weight(m, r);
            let tol = 1e-13 * expected.abs().max(1.0) * (1.0 + (m.max(1) as f64).log10());
            assert!(
                (got - expected).abs() <= tol,
                "m={m} r={r}: got {got}, expected {expected}"
            );
        }
    }

    #[test]
    fn stirling_single_term_at_one_million() {
        let got = log_poisson_weight(1_000_000, 1e6).exp();
        assert!((got - 3.989_422_471_562_44e-4).abs() < 1e-15);
    }

    #[test]
    fn ln_factorial_agrees_across_branch_boundary() {
        let direct: f64 = (2..=40u64).map(|k| (k as f64).ln()).sum();
        assert!((ln_factorial(40) - direct).abs() < 1e-12);
        assert!((ln_factorial(15) - ln_factorial_small(15)).abs() < 1e-15);
        assert_eq!(ln_factorial(0), 0.0);
    }

    #[test]
    fn zero_radius() {
        assert_eq!(log_poisson_weight(0, 0.0), 0.0);
        assert_eq!(log_poisson_weight(4, 0.0), f64::NEG_INFINITY);
    }
}
