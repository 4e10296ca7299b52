//! Sampling trigonometric polynomials on the unit circle and their `L^p`
//! means under the normalized measure `dt / 2 pi`.
//!
//! Two quadratures live here. [`trapezoid_lp_mean`] is the plain mean over
//! equispaced nodes: exact for `p = 2` once the node count exceeds the
//! bandwidth, and exactly monotone in `p` because it is a power mean of a
//! finite sample. [`accurate_lp_norm`] integrates cell by cell with
//! Gauss-Legendre rules on a locally interpolated profile and splits cells at
//! sign changes, so the kinks of `|h|^p` at zeros of a real profile do not
//! limit the convergence rate.

use std::f64::consts::PI;
use std::sync::OnceLock;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Values `sum_k c_k e^{i k t_j}` at `t_j = 2 pi j / nodes`.
pub fn sample_complex(coefficients: &[Complex64], nodes: usize) -> Vec<Complex64> {
    assert!(nodes > 0);
    let mut buf = vec![Complex64::new(0.0, 0.0); nodes];
    for (k, c) in coefficients.iter().enumerate() {
        buf[k % nodes] += *c;
    }
    let mut planner = FftPlanner::<f64>::new();
    planner.plan_fft_inverse(nodes).process(&mut buf);
    buf
}

pub fn sample_real(coefficients: &[f64], nodes: usize) -> Vec<Complex64> {
    let c: Vec<Complex64> = coefficients.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    sample_complex(&c, nodes)
}

/// Direct Horner evaluation of `sum_k c_k e^{i k t}`.
pub fn eval_at(coefficients: &[f64], t: f64) -> Complex64 {
    let z = Complex64::from_polar(1.0, t);
    coefficients
        .iter()
        .rev()
        .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c)
}

/// `(mean |v|^p)^{1/p}`, or the maximum for `p = inf`.
pub fn power_mean(abs_values: &[f64], p: f64) -> f64 {
    let max = abs_values.iter().copied().fold(0.0, f64::max);
    if max == 0.0 || abs_values.is_empty() {
        return 0.0;
    }
    if p.is_infinite() {
        return max;
    }
    let n = abs_values.len() as f64;
    let mean: f64 = abs_values.iter().map(|v| (v / max).powf(p)).sum::<f64>() / n;
    max * mean.powf(1.0 / p)
}

pub(crate) fn check_exponent(p: f64) -> Result<()> {
    if p.is_nan() || p < 1.0 {
        return Err(Error::invalid("p", format!("{p} is below 1")));
    }
    Ok(())
}

/// Trapezoid-rule `L^p` mean of `h(e^{it}) = sum c_k e^{ikt}` on `node_count`
/// equispaced nodes; `p = inf` gives the sampled maximum.
pub fn trapezoid_lp_mean(coefficients: &[f64], p: f64, node_count: usize) -> Result<f64> {
    check_exponent(p)?;
    if node_count < 4 * coefficients.len().max(1) {
        return Err(Error::invalid(
            "node_count",
            format!(
                "{node_count} nodes for a polynomial of length {} (need at least 4x)",
                coefficients.len()
            ),
        ));
    }
    let values: Vec<f64> = sample_real(coefficients, node_count)
        .iter()
        .map(|z| z.norm())
        .collect();
    Ok(power_mean(&values, p))
}

/// Coefficient `l^2` norm, equal to the `L^2` mean by Parseval.
pub fn parseval_norm(coefficients: &[f64]) -> f64 {
    coefficients.iter().map(|c| c * c).sum::<f64>().sqrt()
}

/// One-sided control on `sup |h|` over the circle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SupNormBounds {
    pub nodes: usize,
    /// Best sampled value after local refinement; a true lower bound.
    pub lower: f64,
    /// Second-order Bernstein upper bound derived from the grid maximum.
    pub upper: f64,
    pub argmax: f64,
    /// Relative change of the refined maximum between the two resolutions.
    pub resolution_rel_err: Option<f64>,
}

fn golden_section_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, iters: usize) -> (f64, f64) {
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = b - ratio * (b - a);
    let mut x2 = a + ratio * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..iters {
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + ratio * (b - a);
            f2 = f(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - ratio * (b - a);
            f1 = f(x1);
        }
    }
    if f1 > f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// `|P|^2` and its first two derivatives in `t` at `e^{it}`.
fn squared_modulus_jet(coefficients: &[f64], t: f64) -> (f64, f64, f64) {
    let z = Complex64::from_polar(1.0, t);
    let zero = Complex64::new(0.0, 0.0);
    let (mut s0, mut s1, mut s2) = (zero, zero, zero);
    for (k, &c) in coefficients.iter().enumerate().rev() {
        let kf = k as f64;
        s0 = s0 * z + c;
        s1 = s1 * z + kf * c;
        s2 = s2 * z + kf * kf * c;
    }
    // P' = i S1, P'' = -S2
    let d1 = Complex64::new(0.0, 1.0) * s1;
    let g1 = 2.0 * (s0.conj() * d1).re;
    let g2 = 2.0 * (d1.norm_sqr() - (s0.conj() * s2).re);
    (s0.norm_sqr(), g1, g2)
}

/// Local maximum of `|P|` near `t0`: Newton on `(|P|^2)' = 0`, falling back
/// to golden-section search when a step leaves the bracket.
fn refine_peak(coefficients: &[f64], t0: f64, step: f64) -> (f64, f64) {
    let mut t = t0;
    for _ in 0..NEWTON_ITERS {
        let (_, g1, g2) = squared_modulus_jet(coefficients, t);
        if !(g2 < 0.0) {
            break;
        }
        let dt = -g1 / g2;
        if (t + dt - t0).abs() > step {
            break;
        }
        t += dt;
        if dt.abs() <= 1e-15 * (1.0 + t.abs()) {
            let (g, _, _) = squared_modulus_jet(coefficients, t);
            return (t, g.sqrt());
        }
    }
    golden_section_max(|t| eval_at(coefficients, t).norm(), t0 - step, t0 + step, GOLDEN_ITERS)
}

const REFINED_PEAKS: usize = 4;
const NEWTON_ITERS: usize = 12;
const GOLDEN_ITERS: usize = 40;

/// `1 - D^2 h^2 / 8`: at the node nearest the peak of a degree-`D`
/// polynomial on a grid of step `h`, `|P(t_j)|^2 >= sup^2` times this.
fn peak_shrink(degree: f64, step: f64) -> f64 {
    1.0 - degree * degree * step * step / 8.0
}

/// Best local maximum found by refining around grid peaks among every
/// `stride`-th of the `nodes` samples: the highest few, or with `exhaustive`
/// every peak that can still hold the sup.
fn refined_max(coefficients: &[f64], samples: &[f64], nodes: usize, stride: usize, exhaustive: bool) -> (f64, f64) {
    let count = nodes / stride;
    let at = |j: usize| samples[(j % count) * stride];
    let step = 2.0 * PI / count as f64;
    let grid_max = (0..count).map(at).fold(0.0, f64::max);
    let shrink = peak_shrink((coefficients.len().max(1) - 1) as f64, step);
    let floor = if shrink > 0.0 { grid_max * shrink.sqrt() } else { 0.0 };
    let mut peaks: Vec<(usize, f64)> = (0..count)
        .map(|j| (j, at(j)))
        .filter(|&(j, v)| v >= at(j + count - 1) && v >= at(j + 1))
        .collect();
    peaks.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    if exhaustive {
        peaks.retain(|p| p.1 >= floor);
    } else {
        peaks.truncate(REFINED_PEAKS);
    }
    let mut best = (0.0, 0.0);
    for (j, v) in peaks {
        let t0 = j as f64 * step;
        let (t, refined) = refine_peak(coefficients, t0, step);
        let cand = if refined > v { (t, refined) } else { (t0, v) };
        if cand.1 > best.1 {
            best = cand;
        }
    }
    (best.0.rem_euclid(2.0 * PI), best.1)
}

/// Brackets the sup norm: refined peak search on `8 L` nodes for the lower
/// bound, a second-order Bernstein bound for the upper.
pub fn sup_norm_bounds(coefficients: &[f64]) -> SupNormBounds {
    sup_norm_search(coefficients, false)
}

/// As [`sup_norm_bounds`] on `32 L` nodes, refining every candidate peak and repeating the
/// search on every other node to report the resolution error.
pub fn sup_norm_bounds_checked(coefficients: &[f64]) -> SupNormBounds {
    sup_norm_search(coefficients, true)
}

fn sup_norm_search(coefficients: &[f64], checked: bool) -> SupNormBounds {
    let len = coefficients.len().max(1);
    let nodes = (if checked { 32 } else { 8 } * len).max(64);
    let samples: Vec<f64> = sample_real(coefficients, nodes).iter().map(|z| z.norm()).collect();
    let grid_max = samples.iter().copied().fold(0.0, f64::max);
    let (argmax, fine) = refined_max(coefficients, &samples, nodes, 1, checked);
    let coarse = checked.then(|| refined_max(coefficients, &samples, nodes, 2, true).1);
    let lower = fine.max(coarse.unwrap_or(0.0));
    let shrink = peak_shrink((len - 1) as f64, 2.0 * PI / nodes as f64);
    let upper = if shrink > 0.0 { grid_max / shrink.sqrt() } else { f64::INFINITY };
    SupNormBounds {
        nodes,
        lower,
        upper: upper.max(lower),
        argmax,
        resolution_rel_err: coarse.map(|c| if lower > 0.0 { (fine - c).abs() / lower } else { 0.0 }),
    }
}

// ---------------------------------------------------------------------------
// Cell-wise Gauss quadrature

const GAUSS_ORDER: usize = 10;
const STENCIL: usize = 12;

fn gauss_legendre() -> &'static [(f64, f64)] {
    static RULE: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    RULE.get_or_init(|| {
        let n = GAUSS_ORDER;
        let mut rule = Vec::with_capacity(n);
        for i in 0..n {
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 1.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let kf = k as f64;
                    let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            // map [-1, 1] -> [0, 1]
            rule.push(((1.0 - x) / 2.0, 1.0 / ((1.0 - x * x) * dp * dp)));
        }
        rule
    })
}

fn barycentric_weights() -> &'static [f64; STENCIL] {
    static W: OnceLock<[f64; STENCIL]> = OnceLock::new();
    W.get_or_init(|| {
        let mut w = [0.0; STENCIL];
        let mut binom = 1.0;
        for (j, wj) in w.iter_mut().enumerate() {
            *wj = if j % 2 == 0 { binom } else { -binom };
            binom = binom * (STENCIL - 1 - j) as f64 / (j + 1) as f64;
        }
        w
    })
}

/// Periodic (or antiperiodic) equispaced samples of a real profile.
struct Samples<'a> {
    values: &'a [f64],
    antiperiodic: bool,
}

impl Samples<'_> {
    fn at(&self, index: isize) -> f64 {
        let m = self.values.len() as isize;
        let v = self.values[index.rem_euclid(m) as usize];
        if self.antiperiodic && index.div_euclid(m) % 2 != 0 {
            -v
        } else {
            v
        }
    }

    /// Local Lagrange interpolation at position `cell + theta`.
    fn interpolate(&self, cell: usize, theta: f64) -> f64 {
        let w = barycentric_weights();
        let first = cell as isize - (STENCIL as isize / 2 - 1);
        let (mut num, mut den) = (0.0, 0.0);
        for (j, wj) in w.iter().enumerate() {
            let d = theta + (STENCIL / 2 - 1) as f64 - j as f64;
            let y = self.at(first + j as isize);
            if d == 0.0 {
                return y;
            }
            let c = wj / d;
            num += c * y;
            den += c;
        }
        num / den
    }
}

enum Profile {
    /// Real `K(t)` with `|h(e^{it})| = |K(t)|`; antiperiodic when the
    /// symmetry center is a half-integer.
    Real(Vec<f64>, bool),
    /// `|h|^2`, a nonnegative trigonometric polynomial.
    Squared(Vec<f64>),
}

fn is_palindromic(c: &[f64]) -> bool {
    c.iter().zip(c.iter().rev()).all(|(a, b)| a == b)
}

fn profile(coefficients: &[f64], cells: usize) -> Profile {
    let samples = sample_real(coefficients, cells);
    if is_palindromic(coefficients) {
        let center = (coefficients.len() as f64 - 1.0) / 2.0;
        let step = 2.0 * PI / cells as f64;
        let antiperiodic = coefficients.len() % 2 == 0;
        Profile::Real(
            samples
                .iter()
                .enumerate()
                .map(|(j, z)| (z * Complex64::from_polar(1.0, -center * step * j as f64)).re)
                .collect(),
            antiperiodic,
        )
    } else {
        Profile::Squared(samples.iter().map(|z| z.norm_sqr()).collect())
    }
}

fn integrate_regular(g: &impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    gauss_legendre()
        .iter()
        .map(|&(x, w)| w * g(a + (b - a) * x))
        .sum::<f64>()
        * (b - a)
}

/// `int_a^b g` where `g` vanishes like a power at `a` (`at_left`) or at `b`.
fn integrate_singular_end(g: &impl Fn(f64) -> f64, a: f64, b: f64, at_left: bool) -> f64 {
    let len = b - a;
    gauss_legendre()
        .iter()
        .map(|&(u, w)| {
            let x = if at_left { a + len * u * u } else { b - len * u * u };
            w * g(x) * 2.0 * len * u
        })
        .sum()
}

fn bisect_root(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let mut fa = f(a);
    for _ in 0..64 {
        let m = 0.5 * (a + b);
        let fm = f(m);
        if fm == 0.0 {
            return m;
        }
        if (fm < 0.0) == (fa < 0.0) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

fn cellwise_mean(coefficients: &[f64], p: f64, cells: usize) -> f64 {
    match profile(coefficients, cells) {
        Profile::Real(values, antiperiodic) => {
            let k = Samples { values: &values, antiperiodic };
            let scale = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            if scale == 0.0 {
                return 0.0;
            }
            let sum: f64 = (0..cells)
                .map(|i| {
                    let g = |theta: f64| (k.interpolate(i, theta).abs() / scale).powf(p);
                    let (y0, y1) = (k.at(i as isize), k.at(i as isize + 1));
                    if y0 * y1 < 0.0 {
                        let root = bisect_root(|t| k.interpolate(i, t), 0.0, 1.0);
                        integrate_singular_end(&g, 0.0, root, false)
                            + integrate_singular_end(&g, root, 1.0, true)
                    } else if y0 == 0.0 && y1 == 0.0 {
                        integrate_singular_end(&g, 0.0, 0.5, true)
                            + integrate_singular_end(&g, 0.5, 1.0, false)
                    } else if y0 == 0.0 {
                        integrate_singular_end(&g, 0.0, 1.0, true)
                    } else if y1 == 0.0 {
                        integrate_singular_end(&g, 0.0, 1.0, false)
                    } else {
                        integrate_regular(&g, 0.0, 1.0)
                    }
                })
                .sum();
            scale * (sum / cells as f64).powf(1.0 / p)
        }
        Profile::Squared(values) => {
            let f = Samples { values: &values, antiperiodic: false };
            let scale = values.iter().fold(0.0f64, |m, v| m.max(*v));
            if scale == 0.0 {
                return 0.0;
            }
            let sum: f64 = (0..cells)
                .map(|i| {
                    let g = |theta: f64| (f.interpolate(i, theta).max(0.0) / scale).powf(p / 2.0);
                    integrate_regular(&g, 0.0, 1.0)
                })
                .sum();
            scale.sqrt() * (sum / cells as f64).powf(1.0 / p)
        }
    }
}

/// High-accuracy `L^p` norm with an error estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LpNorm {
    #[serde(with = "crate::float_serde")]
    pub p: f64,
    pub value: f64,
    /// Relative change between two cell resolutions (0 for `p = 2`, where
    /// Parseval is exact).
    pub quad_rel_err: f64,
}

/// `L^p` norm of `sum c_k e^{ikt}` to near machine precision for `p` in
/// `[1, inf)`; `p = inf` returns the refined sampled sup (lower bound).
pub fn accurate_lp_norm(coefficients: &[f64], p: f64) -> Result<LpNorm> {
    check_exponent(p)?;
    if coefficients.iter().all(|&c| c == 0.0) {
        return Ok(LpNorm { p, value: 0.0, quad_rel_err: 0.0 });
    }
    if p == 2.0 {
        return Ok(LpNorm {
            p,
            value: parseval_norm(coefficients),
            quad_rel_err: 0.0,
        });
    }
    if p.is_infinite() {
        let b = sup_norm_bounds_checked(coefficients);
        return Ok(LpNorm {
            p,
            value: b.lower,
            quad_rel_err: b.resolution_rel_err.unwrap_or(0.0),
        });
    }
    // leading zeros are a unimodular factor z^s, trailing zeros are padding
    let first = coefficients.iter().position(|&c| c != 0.0).unwrap_or(0);
    let last = coefficients.iter().rposition(|&c| c != 0.0).unwrap_or(0);
    let coefficients = &coefficients[first..=last];
    let cells = (16 * coefficients.len()).max(64);
    let coarse = cellwise_mean(coefficients, p, cells);
    let fine = cellwise_mean(coefficients, p, 2 * cells);
    Ok(LpNorm {
        p,
        value: fine,
        quad_rel_err: (fine - coarse).abs() / fine,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_polynomial() {
        for p in [1.0, 1.5, 2.0, f64::INFINITY] {
            assert!((trapezoid_lp_mean(&[1.0], p, 4).unwrap() - 1.0).abs() < 1e-15);
            assert!((accurate_lp_norm(&[1.0], p).unwrap().value - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn one_plus_z() {
        let c = [1.0, 1.0];
        assert!((trapezoid_lp_mean(&c, 2.0, 8).unwrap() - 2f64.sqrt()).abs() < 1e-14);
        // |1 + e^{it}| = 2 |cos(t/2)|; mean = 4 / pi
        let l1 = accurate_lp_norm(&c, 1.0).unwrap();
        assert!((l1.value - 4.0 / PI).abs() < 1e-12, "{l1:?}");
        assert!((sup_norm_bounds(&c).lower - 2.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(trapezoid_lp_mean(&[1.0, 2.0], 0.5, 16).is_err());
        assert!(trapezoid_lp_mean(&[1.0, 2.0], 2.0, 7).is_err());
        assert!(accurate_lp_norm(&[1.0], 0.0).is_err());
    }

    #[test]
    fn accurate_norm_of_fejer_kernel() {
        // Fejer kernel with triangle coefficients is nonnegative, so its L^1
        // mean equals the central coefficient.
        let m = 20usize;
        let c: Vec<f64> = (0..2 * m - 1)
            .map(|j| 1.0 - (j as f64 - (m - 1) as f64).abs() / m as f64)
            .collect();
        let l1 = accurate_lp_norm(&c, 1.0).unwrap();
        assert!((l1.value - 1.0).abs() < 1e-12, "{l1:?}");
    }

    #[test]
    fn accurate_norm_with_sign_changes() {
        // 1 + z + z^2 = e^{it}(1 + 2 cos t) and
        // int_0^{2pi} |1 + 2 cos t| dt = 2 pi / 3 + 4 sqrt 3.
        let c = [1.0, 1.0, 1.0];
        let got = accurate_lp_norm(&c, 1.0).unwrap().value;
        let by_hand = (2.0 * PI / 3.0 + 4.0 * 3f64.sqrt()) / (2.0 * PI);
        assert!((got - by_hand).abs() < 1e-12, "{got} vs {by_hand}");
    }

    #[test]
    fn power_mean_is_monotone_in_p() {
        let v = [0.1, 2.0, 3.5, 0.0, 1.0];
        let ps = [1.0, 1.5, 2.0, 4.0, f64::INFINITY];
        for w in ps.windows(2) {
            assert!(power_mean(&v, w[0]) <= power_mean(&v, w[1]));
        }
    }

    #[test]
    fn sup_bounds_bracket_true_value() {
        let c = [1.0, -0.5, 0.25, 2.0];
        let b = sup_norm_bounds(&c);
        let dense = (0..200_000)
            .map(|j| eval_at(&c, 2.0 * PI * j as f64 / 200_000.0).norm())
            .fold(0.0, f64::max);
        assert!(b.lower <= dense + 1e-9 && dense <= b.upper + 1e-12, "{b:?} {dense}");
        assert!((b.lower - dense).abs() < 1e-8);
    }
}
