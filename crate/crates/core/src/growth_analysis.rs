//! Quantitative checks on the constructed function: the growth exponent,
//! per-block peak bounds, the normalized growth indicator
//! `Gamma(r) = r^alpha e^{-r} M_p(f, r)`, orbit approximation on hitting sets
//! and the weighted density of `T_k`.

use num_rational::BigRational;
use num_traits::Zero;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::block_construction::{hitting_sets, Block, BlockDescriptor, ConstructionConfig};
use crate::circle::sup_norm_bounds;
use crate::error::{Error, Result};
use crate::kernel_polynomials::conjugate;
use crate::sparse_series::{exact_head, log_triangle_bound, QuadSpec, SparseSeries};
use crate::special::log_power_over_factorial;
use crate::target_catalogue::{kernel_len, CatalogueEntry, Regime};
use crate::weighted_density::{
    log_partial_sum, upper_density_scan, DensityScan, SumMode, WeightSpec, DEFAULT_SUMMATION_CAP,
};

/// `1/2 - min(1, 2(1-gamma)) / (2 max(2, q))`; `p = 1` gives `1/2`.
pub fn alpha_exponent(p: f64, gamma: f64) -> Result<f64> {
    if p.is_nan() || p < 1.0 {
        return Err(Error::invalid("p", format!("must be at least 1, got {p}")));
    }
    if !(0.0..=1.0).contains(&gamma) {
        return Err(Error::invalid("gamma", format!("must lie in [0, 1], got {gamma}")));
    }
    let q = conjugate(p);
    Ok(0.5 - (2.0 * (1.0 - gamma)).min(1.0) / (2.0 * q.max(2.0)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeakRecord {
    pub radius: f64,
    pub nu: u64,
    #[serde(with = "crate::float_serde")]
    pub p: f64,
    /// Sampled `log M_p(P_n, nu^2)`.
    pub log_mp: f64,
    /// Certified upper bound on `log M_p(P_n, nu^2)`.
    pub log_mp_upper: f64,
    pub log_bound: f64,
    pub pass: bool,
    pub certified: bool,
    pub retried: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockPeakCheck {
    pub n: u64,
    pub k: u32,
    pub kernel_len: u64,
    pub records: Vec<PeakRecord>,
    pub pass: bool,
}

/// Log of the composite block bound at `nu`:
/// `50 l alpha^{-1/2} e^{nu^2} nu^{-gamma}` for `p >= 2`,
/// `30 l (n^{2(1-gamma)} / alpha)^{1/q} e^{nu^2} nu^{-1}` for `1 < p < 2`.
pub fn log_block_bound(regime: Regime, gamma: f64, n: u64, nu: u64, entry: &CatalogueEntry) -> f64 {
    let l = entry.l_k_f64();
    let alpha = entry.alpha_k as f64;
    let nu_f = nu as f64;
    match regime {
        Regime::AtLeastTwo { .. } => (50.0 * l).ln() - 0.5 * alpha.ln() + nu_f * nu_f - gamma * nu_f.ln(),
        Regime::BelowTwo { .. } => {
            let width = 2.0 * (1.0 - gamma) * (n as f64).ln() - alpha.ln();
            (30.0 * l).ln() + width / regime.q() + nu_f * nu_f - nu_f.ln()
        }
    }
}

/// Checks `M_p(P_n, nu^2)` against the composite bound at `nu = n` and
/// `nu = n + 1`. The `p >= 2` regime is checked at `p = inf`, which implies
/// every finite `p`.
pub fn block_peak_check(block: &Block, cfg: &ConstructionConfig, entry: &CatalogueEntry, quad: &QuadSpec) -> Result<BlockPeakCheck> {
    let d = &block.descriptor;
    let mut out = BlockPeakCheck {
        n: d.n,
        k: d.k.unwrap_or(0),
        kernel_len: d.kernel_len,
        records: Vec::new(),
        pass: true,
    };
    if block.series.is_empty() {
        return Ok(out);
    }
    let p = match cfg.regime {
        Regime::AtLeastTwo { .. } => f64::INFINITY,
        Regime::BelowTwo { p } => p,
    };
    for nu in [d.n, d.n + 1] {
        let radius = (nu * nu) as f64;
        let log_bound = log_block_bound(cfg.regime, cfg.gamma, d.n, nu, entry);
        let mut mean = block.series.mp_mean(radius, p, quad)?;
        let mut retried = false;
        if mean.log_mp > log_bound {
            let finer = QuadSpec {
                min_nodes: quad.min_nodes.max(mean.nodes) * quad.refinement.max(2),
                ..*quad
            };
            mean = block.series.mp_mean(radius, p, &finer)?;
            retried = true;
        }
        let triangle = log_triangle_bound(&block.series, radius);
        let log_mp_upper = if p.is_infinite() {
            mean.log_mp_upper.min(triangle)
        } else {
            // M_p <= M_2 for p <= 2 under the normalized measure
            block.series.parseval_log_m2_all(radius)?.min(triangle)
        };
        let record = PeakRecord {
            radius,
            nu,
            p,
            log_mp: mean.log_mp,
            log_mp_upper,
            log_bound,
            pass: mean.log_mp <= log_bound,
            certified: log_mp_upper <= log_bound,
            retried,
        };
        out.pass &= record.pass;
        out.records.push(record);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrowthRow {
    pub r: f64,
    #[serde(rename = "log_Mp", with = "crate::float_serde")]
    pub log_mp: f64,
    /// `alpha ln r - r + log M_p`.
    #[serde(with = "crate::float_serde")]
    pub log_gamma: f64,
    #[serde(rename = "Gamma")]
    pub indicator: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthReport {
    #[serde(with = "crate::float_serde")]
    pub p: f64,
    pub gamma: f64,
    pub alpha: f64,
    pub rows: Vec<GrowthRow>,
    pub sup_gamma: f64,
    #[serde(with = "crate::float_serde")]
    pub argmax_r: f64,
    pub subseq_rows: Vec<GrowthRow>,
    pub min_subseq_gamma: f64,
}

fn growth_rows(f: &SparseSeries, p: f64, alpha: f64, radii: &[f64], quad: &QuadSpec) -> Result<Vec<GrowthRow>> {
    radii
        .par_iter()
        .map(|&r| {
            let m = f.mp_mean(r, p, quad)?;
            let log_gamma = alpha * r.ln() - r + m.log_mp;
            Ok(GrowthRow {
                r,
                log_mp: m.log_mp,
                log_gamma,
                indicator: log_gamma.exp(),
            })
        })
        .collect()
}

/// `Gamma(r)` on `r_grid` and on the radii `subseq` (normally `n^2` over
/// built blocks).
pub fn growth_profile(f: &SparseSeries, p: f64, gamma: f64, r_grid: &[f64], subseq: &[f64], quad: &QuadSpec) -> Result<GrowthReport> {
    let alpha = alpha_exponent(p, gamma)?;
    if let Some(r) = r_grid.iter().chain(subseq).find(|r| !(**r > 0.0)) {
        return Err(Error::invalid("r_grid", format!("radii must be positive, got {r}")));
    }
    let (rows, subseq_rows) = if f.is_empty() {
        (Vec::new(), Vec::new())
    } else {
        (growth_rows(f, p, alpha, r_grid, quad)?, growth_rows(f, p, alpha, subseq, quad)?)
    };
    let (argmax_r, sup_gamma) = rows
        .iter()
        .map(|row| (row.r, row.indicator))
        .fold((f64::NAN, 0.0), |best, x| if x.1 > best.1 { x } else { best });
    let min_subseq_gamma = subseq_rows.iter().map(|row| row.indicator).fold(f64::INFINITY, f64::min);
    Ok(GrowthReport {
        p,
        gamma,
        alpha,
        rows,
        sup_gamma,
        argmax_r,
        subseq_rows,
        min_subseq_gamma: if min_subseq_gamma.is_finite() { min_subseq_gamma } else { 0.0 },
    })
}

/// `count` geometrically spaced radii from `lo` to `hi`.
pub fn geometric_grid(lo: f64, hi: f64, count: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0 && hi > lo && count >= 2) {
        return Err(Error::invalid("grid", format!("need 0 < lo < hi and count >= 2, got {lo}, {hi}, {count}")));
    }
    let ratio = (hi / lo).ln() / (count - 1) as f64;
    Ok((0..count)
        .map(|i| if i == count - 1 { hi } else { lo * (ratio * i as f64).exp() })
        .collect())
}

pub const WITNESS_TAIL_FRACTION: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimalityWitness {
    /// Minimum of `Gamma` over the last half of the subsequence.
    pub value: f64,
    pub log_value: f64,
    pub tail_start_r: f64,
    pub tail_len: usize,
}

pub fn optimality_witness(report: &GrowthReport) -> Result<OptimalityWitness> {
    let rows = &report.subseq_rows;
    if rows.len() < 3 {
        return Err(Error::Insufficient(format!(
            "the optimality witness needs at least 3 built blocks, got {}",
            rows.len()
        )));
    }
    let tail_len = ((rows.len() as f64 * WITNESS_TAIL_FRACTION).ceil() as usize).max(1);
    let tail = &rows[rows.len() - tail_len..];
    let log_value = tail.iter().map(|r| r.log_gamma).fold(f64::INFINITY, f64::min);
    Ok(OptimalityWitness {
        value: log_value.exp(),
        log_value,
        tail_start_r: tail[0].r,
        tail_len,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrbitCheckRecord {
    pub s: u64,
    pub n: u64,
    pub k: u32,
    /// Sampled sup of `|q_k - f^{(s)}|` on `|z| = l_k`.
    pub sup_err: f64,
    /// Bernstein upper bound on the same sup plus the truncation tail.
    pub sup_err_upper: f64,
    pub tail_bound: f64,
    pub bound: f64,
    pub pass: bool,
    /// `f^{(s)}` restricted to exponents below `alpha_k` equals `q_k` exactly.
    pub identity_exact: Option<bool>,
}

/// Exponent past which `|a| l^e / e!` is negligible and halves at each step.
fn residual_cutoff(l: f64, degree: usize) -> u64 {
    let mut e = ((2.0 * l).ceil() as u64).max(degree as u64 + 1).max(1);
    while log_power_over_factorial(e, l) > -80.0 {
        e += 1;
    }
    e
}

/// `sup_{|z| = l_k} |q_k(z) - f^{(s)}(z)|` for each `s` in `hitting`.
pub fn orbit_check(
    f: &SparseSeries,
    exact: Option<&SparseSeries<BigRational>>,
    entry: &CatalogueEntry,
    block: &BlockDescriptor,
    hitting: &[u64],
) -> Vec<OrbitCheckRecord> {
    let l = entry.l_k_f64();
    let q = entry.q_coeffs_f64();
    let cutoff = residual_cutoff(l, entry.degree);
    let expected_head: Vec<(u64, BigRational)> = entry
        .q_coeffs
        .iter()
        .enumerate()
        .filter(|(_, c)| !c.is_zero())
        .map(|(j, c)| (j as u64, c.clone()))
        .collect();
    hitting
        .par_iter()
        .map(|&s| {
            let weights: Vec<f64> = (0..cutoff).map(|e| log_power_over_factorial(e, l).exp()).collect();
            let mut residual: Vec<f64> = (0..cutoff as usize)
                .map(|e| -q.get(e).copied().unwrap_or(0.0) * weights[e])
                .collect();
            for &(m, a) in f.slice_exponents(s, s + cutoff) {
                residual[(m - s) as usize] += a * weights[(m - s) as usize];
            }
            let a_max = f
                .slice_exponents(s + cutoff, u64::MAX)
                .iter()
                .map(|t| t.1.abs())
                .fold(0.0, f64::max);
            let tail_bound = a_max * 2.0 * log_power_over_factorial(cutoff, l).exp();
            let sup = sup_norm_bounds(&residual);
            let bound = 1.0 / l;
            let identity_exact = exact.map(|x| {
                let head: Vec<(u64, BigRational)> = exact_head(x, s + entry.alpha_k)
                    .into_iter()
                    .filter(|(m, _)| *m >= s)
                    .map(|(m, c)| (m - s, c))
                    .collect();
                head == expected_head
            });
            let sup_err_upper = sup.upper + tail_bound;
            OrbitCheckRecord {
                s,
                n: block.n,
                k: block.k.unwrap_or(0),
                sup_err: sup.lower,
                sup_err_upper,
                tail_bound,
                bound,
                pass: sup_err_upper <= bound && identity_exact != Some(false),
                identity_exact,
            }
        })
        .collect()
}

pub const DEFAULT_DENSITY_SLACK: f64 = 0.5;
pub const MIN_DENSITY_BLOCKS: usize = 5;
pub const RATIO_LIMIT_TOLERANCE: f64 = 0.05;

/// The two partial-sum ratios whose limits drive the density bound, at one `n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatioLimits {
    pub n: u64,
    pub kernel_len: u64,
    /// `sum_{j <= n^2 + floor((N-1)/2)} / sum_{j <= n^2 + floor(n^{2(1-gamma)})}`.
    pub half_ratio: f64,
    /// `e^{-gamma (1/(2 alpha) - 1)}` as stated.
    pub half_limit_stated: f64,
    /// `e^{gamma (1/(2 alpha) - 1)}`, the limit of the integral comparison.
    pub half_limit_corrected: f64,
    pub half_rel_err_stated: f64,
    pub half_rel_err_corrected: f64,
    /// `sum_{j <= n^2 - 1} / sum_{j <= n^2 + floor(n^{2(1-gamma)})}`.
    pub base_ratio: f64,
    pub base_limit: f64,
    pub base_rel_err: f64,
    pub stated_within_tolerance: bool,
    pub corrected_within_tolerance: bool,
}

pub fn ratio_limits(n: u64, kernel_len: u64, alpha: u64, gamma: f64) -> Result<RatioLimits> {
    let spec = WeightSpec::new(gamma)?;
    let base = n * n;
    let width = self::kernel_len(n as u128, gamma, 1);
    let sum = |x: u64| -> Result<f64> { Ok(log_partial_sum(x, &spec, SumMode::Exact, DEFAULT_SUMMATION_CAP)?.value) };
    let top = sum(base + width)?;
    let half_ratio = (sum(base + kernel_len.saturating_sub(1) / 2)? - top).exp();
    let base_ratio = (sum(base - 1)? - top).exp();
    let a = alpha as f64;
    let half_limit_stated = (-gamma * (1.0 / (2.0 * a) - 1.0)).exp();
    let half_limit_corrected = (gamma * (1.0 / (2.0 * a) - 1.0)).exp();
    let base_limit = (-gamma).exp();
    let rel = |x: f64, y: f64| (x - y).abs() / y;
    let half_rel_err_stated = rel(half_ratio, half_limit_stated);
    let half_rel_err_corrected = rel(half_ratio, half_limit_corrected);
    let base_rel_err = rel(base_ratio, base_limit);
    Ok(RatioLimits {
        n,
        kernel_len,
        half_ratio,
        half_limit_stated,
        half_limit_corrected,
        half_rel_err_stated,
        half_rel_err_corrected,
        base_ratio,
        base_limit,
        base_rel_err,
        stated_within_tolerance: half_rel_err_stated <= RATIO_LIMIT_TOLERANCE && base_rel_err <= RATIO_LIMIT_TOLERANCE,
        corrected_within_tolerance: half_rel_err_corrected <= RATIO_LIMIT_TOLERANCE
            && base_rel_err <= RATIO_LIMIT_TOLERANCE,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityCheck {
    pub k: u32,
    pub alpha: u64,
    pub gamma: f64,
    pub blocks: usize,
    pub members: usize,
    pub scan: Option<DensityScan>,
    pub running_max: f64,
    /// `e^{-gamma} (e^{1/(2 alpha)} - 1)`.
    pub bound: f64,
    /// `e^{-gamma} (e^{gamma/(2 alpha)} - 1)`.
    pub corrected_bound: f64,
    pub slack: f64,
    pub enough_blocks: bool,
    /// `None` when there are no blocks.
    pub pass: Option<bool>,
    pub ratio_limits: Option<RatioLimits>,
    pub note: Option<String>,
}

/// Prefix quotients of `T_k` at the block ends `max(B_n)`.
pub fn hitting_density_check(blocks: &[BlockDescriptor], k: u32, entry: &CatalogueEntry, gamma: f64, slack: f64) -> Result<DensityCheck> {
    let class: Vec<&BlockDescriptor> = blocks
        .iter()
        .filter(|b| b.is_built() && b.k == Some(k) && !b.hitting_set.is_empty())
        .collect();
    let a = entry.alpha_k as f64;
    let bound = (-gamma).exp() * (1.0 / (2.0 * a)).exp_m1();
    let corrected_bound = (-gamma).exp() * (gamma / (2.0 * a)).exp_m1();
    let mut out = DensityCheck {
        k,
        alpha: entry.alpha_k,
        gamma,
        blocks: class.len(),
        members: 0,
        scan: None,
        running_max: 0.0,
        bound,
        corrected_bound,
        slack,
        enough_blocks: class.len() >= MIN_DENSITY_BLOCKS,
        pass: None,
        ratio_limits: None,
        note: None,
    };
    if class.is_empty() {
        out.note = Some("no blocks".into());
        return Ok(out);
    }
    let members = hitting_sets(blocks, k);
    let mut grid: Vec<u64> = class.iter().map(|b| *b.hitting_set.last().expect("nonempty")).collect();
    grid.sort_unstable();
    grid.dedup();
    let spec = WeightSpec::new(gamma)?;
    let scan = upper_density_scan(members.iter().copied(), &spec, &grid)?;
    let last = class.iter().max_by_key(|b| b.n).expect("nonempty");
    out.members = members.len();
    out.running_max = scan.running_max;
    out.scan = Some(scan);
    out.pass = Some(out.enough_blocks && out.running_max > slack * bound);
    out.ratio_limits = Some(ratio_limits(last.n, last.kernel_len, entry.alpha_k, gamma)?);
    if !out.enough_blocks {
        out.note = Some(format!("only {} blocks; at least {MIN_DENSITY_BLOCKS} are needed", class.len()));
    }
    Ok(out)
}
