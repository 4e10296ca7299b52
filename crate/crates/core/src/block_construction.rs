//! Blocks `P_n` of the constructed function and their hitting sets.
//!
//! For even `n` in class `k` with `n >= 10 alpha_k`, the block is
//! `P_n = sum_{i < N} sum_{j <= d_k} p_i q_{k,j} z^{n^2 + i alpha_k + j} / (n^2 + i alpha_k + j)!`
//! with `N = floor(n^{2(1-gamma)} / alpha_k)` and `p` the kernel of length `N`
//! (sign kernel for `p >= 2`, bounded kernel for `1 < p < 2`). The hitting set
//! `B_n` collects `n^2 + i alpha_k` for every kernel index with `p_i = 1`.

use std::collections::BTreeMap;

use num_rational::BigRational;
use num_traits::Zero;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel_polynomials::{bounded_kernel, sign_kernel, KernelFamily, KernelPolynomial};
use crate::sparse_series::{BlockMeta, SeriesMeta, SparseSeries};
use crate::target_catalogue::{
    dyadic_class, first_active_n, kernel_len, Catalogue, CatalogueEntry, ConstantsMode, FirstActive,
    ProofConstants, Regime,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlockStatus {
    Built,
    OddIndex,
    BelowPaperThreshold,
    BelowNonemptinessThreshold,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockDescriptor {
    pub n: u64,
    /// Dyadic class; `None` for odd `n`.
    pub k: Option<u32>,
    pub base: u64,
    pub stride: u64,
    pub kernel_len: u64,
    pub degree: usize,
    /// Sorted `n^2 + i alpha_k` over kernel indices `i` with coefficient `+1`.
    pub hitting_set: Vec<u64>,
    pub status: BlockStatus,
}

impl BlockDescriptor {
    pub fn is_built(&self) -> bool {
        self.status == BlockStatus::Built
    }

    /// Largest exponent in the support of `P_n`.
    pub fn max_support(&self) -> u64 {
        self.base + self.stride * self.kernel_len.saturating_sub(1) + self.degree as u64
    }

    pub fn meta(&self) -> BlockMeta {
        BlockMeta {
            n: self.n,
            k: self.k.unwrap_or(0),
            base: self.base,
            stride: self.stride,
            len: self.kernel_len,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstructionConfig {
    pub gamma: f64,
    pub regime: Regime,
    pub constants: ProofConstants,
    pub n_max: u64,
}

impl ConstructionConfig {
    pub fn new(gamma: f64, regime: Regime, constants: ProofConstants, n_max: u64) -> Result<Self> {
        if !(gamma > 0.5 && gamma < 1.0) {
            return Err(Error::invalid(
                "gamma",
                format!("the construction needs gamma in (1/2, 1), got {gamma}"),
            ));
        }
        if constants.mode == ConstantsMode::Paper && !(constants.c > 0.0 && constants.c < 1.0) {
            return Err(Error::invalid("c", "paper mode needs 0 < c < 1"));
        }
        Ok(Self {
            gamma,
            regime,
            constants,
            n_max,
        })
    }

    pub fn thresholds_only(&self) -> bool {
        self.constants.mode == ConstantsMode::Paper
    }
}

/// One block: descriptor, floating series and exact series.
#[derive(Debug, Clone)]
pub struct Block {
    pub descriptor: BlockDescriptor,
    pub series: SparseSeries<f64>,
    pub exact: SparseSeries<BigRational>,
}

fn kernel_for(family: KernelFamily, len: usize) -> Result<KernelPolynomial> {
    match family {
        KernelFamily::Sign => sign_kernel(len),
        KernelFamily::Bounded => bounded_kernel(len),
    }
}

fn empty_block(n: u64, k: Option<u32>, entry: Option<&CatalogueEntry>, kernel_len: u64, status: BlockStatus) -> Block {
    let descriptor = BlockDescriptor {
        n,
        k,
        base: n * n,
        stride: entry.map_or(0, |e| e.alpha_k),
        kernel_len,
        degree: entry.map_or(0, |e| e.degree),
        hitting_set: Vec::new(),
        status,
    };
    Block {
        descriptor,
        series: SparseSeries::empty(),
        exact: SparseSeries::empty(),
    }
}

/// `P_n` for the catalogue entry of class `dyadic_class(n)`.
pub fn build_block(n: u64, cfg: &ConstructionConfig, entry: &CatalogueEntry) -> Result<Block> {
    if n % 2 == 1 {
        return Ok(empty_block(n, None, None, 0, BlockStatus::OddIndex));
    }
    let k = dyadic_class(n)?;
    if k as usize != entry.k {
        return Err(Error::invalid(
            "entry",
            format!("n = {n} lies in class {k} but entry is q_{}", entry.k),
        ));
    }
    let alpha = entry.alpha_k;
    if (n as u128) < 10 * alpha as u128 {
        return Ok(empty_block(n, Some(k), Some(entry), 0, BlockStatus::BelowPaperThreshold));
    }
    let len = kernel_len(n as u128, cfg.gamma, alpha);
    if len == 0 {
        return Ok(empty_block(n, Some(k), Some(entry), 0, BlockStatus::BelowNonemptinessThreshold));
    }
    let base = n
        .checked_mul(n)
        .ok_or_else(|| Error::invalid("n", format!("{n}^2 overflows")))?;
    let kernel = kernel_for(cfg.regime.kernel_family(), len as usize)?;
    let q = entry.q_coeffs_f64();
    let mut terms = Vec::with_capacity(kernel.len() * q.len());
    let mut exact_terms = Vec::with_capacity(kernel.len() * q.len());
    for (i, &p_i) in kernel.coefficients.iter().enumerate() {
        if p_i == 0.0 {
            continue;
        }
        let p_exact = kernel.exact_coefficient(i);
        let offset = base + i as u64 * alpha;
        for (j, (q_j, q_exact)) in q.iter().zip(&entry.q_coeffs).enumerate() {
            if q_exact.is_zero() {
                continue;
            }
            terms.push((offset + j as u64, p_i * q_j));
            exact_terms.push((offset + j as u64, &p_exact * q_exact));
        }
    }
    let hitting_set = kernel.plus_indices().map(|i| base + i as u64 * alpha).collect();
    let descriptor = BlockDescriptor {
        n,
        k: Some(k),
        base,
        stride: alpha,
        kernel_len: len,
        degree: entry.degree,
        hitting_set,
        status: BlockStatus::Built,
    };
    let meta = SeriesMeta {
        blocks: vec![descriptor.meta()],
    };
    Ok(Block {
        series: SparseSeries::new(terms, meta.clone())?,
        exact: SparseSeries::new(exact_terms, meta)?,
        descriptor,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClassSummary {
    pub k: u32,
    pub entry: CatalogueEntry,
    pub first_active: FirstActive,
}

/// The assembled function `f = sum_n P_n` over even `n <= n_max` of class
/// at most `k_max`.
#[derive(Debug, Clone)]
pub struct Assembly {
    pub series: SparseSeries<f64>,
    pub exact: SparseSeries<BigRational>,
    /// Built blocks in increasing `n`.
    pub blocks: Vec<Block>,
    pub classes: Vec<ClassSummary>,
    pub blocks_empty: usize,
    pub warnings: Vec<String>,
}

impl Assembly {
    pub fn descriptors(&self) -> Vec<BlockDescriptor> {
        self.blocks.iter().map(|b| b.descriptor.clone()).collect()
    }

    pub fn support_range(&self) -> Option<(u64, u64)> {
        Some((self.series.min_exponent()?, self.series.max_exponent()?))
    }

    pub fn entry(&self, k: u32) -> Option<&CatalogueEntry> {
        self.classes.iter().find(|c| c.k == k).map(|c| &c.entry)
    }

    pub fn report(&self) -> BuildReport {
        BuildReport {
            blocks_built: self.blocks.len(),
            blocks_empty: self.blocks_empty,
            first_active_n: self
                .classes
                .iter()
                .map(|c| (c.k.to_string(), c.first_active))
                .collect(),
            support_range: self.support_range(),
            terms: self.series.len(),
            warnings: self.warnings.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BuildReport {
    pub blocks_built: usize,
    pub blocks_empty: usize,
    pub first_active_n: BTreeMap<String, FirstActive>,
    pub support_range: Option<(u64, u64)>,
    pub terms: usize,
    pub warnings: Vec<String>,
}

/// Catalogue entries `1..=k_max` with their activation thresholds.
pub fn class_summaries(cfg: &ConstructionConfig, k_max: u32) -> Result<Vec<ClassSummary>> {
    if k_max == 0 {
        return Err(Error::invalid("k_max", "at least one class is needed"));
    }
    let mut catalogue = Catalogue::new(cfg.constants);
    (1..=k_max)
        .map(|k| {
            let entry = catalogue.entry(k as usize)?.clone();
            let first_active = first_active_n(&entry, k, cfg.gamma)?;
            Ok(ClassSummary { k, entry, first_active })
        })
        .collect()
}

pub fn assemble(cfg: &ConstructionConfig, k_max: u32) -> Result<Assembly> {
    let classes = class_summaries(cfg, k_max)?;
    let mut warnings = Vec::new();
    let reachable = classes
        .iter()
        .any(|c| c.first_active.first_active_n.is_some_and(|n| n <= cfg.n_max as u128));
    if cfg.thresholds_only() {
        warnings.push("paper-mode: thresholds only".to_string());
    } else if !reachable {
        warnings.push(format!(
            "n_max = {} is below every activation threshold; the series is zero",
            cfg.n_max
        ));
    }
    if cfg.thresholds_only() || !reachable {
        return Ok(Assembly {
            series: SparseSeries::empty(),
            exact: SparseSeries::empty(),
            blocks: Vec::new(),
            classes,
            blocks_empty: 0,
            warnings,
        });
    }

    let candidates: Vec<(u64, &CatalogueEntry)> = (2..=cfg.n_max)
        .step_by(2)
        .filter_map(|n| {
            let k = n.trailing_zeros();
            (k <= k_max).then(|| (n, &classes[k as usize - 1].entry))
        })
        .collect();
    let built: Vec<Block> = candidates
        .par_iter()
        .map(|&(n, entry)| build_block(n, cfg, entry))
        .collect::<Result<_>>()?;

    let blocks_empty = built.iter().filter(|b| !b.descriptor.is_built()).count();
    let blocks: Vec<Block> = built.into_iter().filter(|b| b.descriptor.is_built()).collect();
    let mut terms = Vec::new();
    let mut exact_terms = Vec::new();
    for b in &blocks {
        terms.extend_from_slice(b.series.terms());
        exact_terms.extend_from_slice(b.exact.terms());
    }
    let meta = SeriesMeta {
        blocks: blocks.iter().map(|b| b.descriptor.meta()).collect(),
    };
    Ok(Assembly {
        series: SparseSeries::new(terms, meta.clone())?,
        exact: SparseSeries::new(exact_terms, meta)?,
        blocks,
        classes,
        blocks_empty,
        warnings,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StructureReport {
    pub blocks_checked: usize,
    pub terms_checked: usize,
    pub violations: Vec<String>,
}

impl StructureReport {
    pub fn pass(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Disjoint supports, `|a_m| <= l_k`, `max(B_n) <= n^2 + floor(n^{2(1-gamma)})`,
/// the hitting-set cardinality and `supp P_n < (n+1)^2`, over every built block.
pub fn structure_check(assembly: &Assembly, cfg: &ConstructionConfig) -> StructureReport {
    let mut violations = Vec::new();
    let mut terms_checked = 0;
    let family = cfg.regime.kernel_family();
    for (idx, block) in assembly.blocks.iter().enumerate() {
        let d = &block.descriptor;
        let n = d.n;
        let Some(entry) = d.k.and_then(|k| assembly.entry(k)) else {
            violations.push(format!("n={n}: no catalogue entry"));
            continue;
        };
        let l = &entry.l_k;
        for (m, a) in block.exact.terms() {
            terms_checked += 1;
            if num_traits::Signed::abs(a) > *l {
                violations.push(format!("n={n}: |a_{m}| exceeds l_k"));
            }
        }
        if let Some(next) = assembly.blocks.get(idx + 1) {
            if block.series.max_exponent() >= next.series.min_exponent() {
                violations.push(format!("n={n}: support meets block n={}", next.descriptor.n));
            }
        }
        let width = kernel_len(n as u128, cfg.gamma, 1);
        if d.hitting_set.last().is_some_and(|&s| s > n * n + width) {
            violations.push(format!("n={n}: max(B_n) above n^2 + {width}"));
        }
        let required = match family {
            KernelFamily::Sign => d.kernel_len.div_ceil(2),
            KernelFamily::Bounded => d.kernel_len / 4,
        };
        if (d.hitting_set.len() as u64) < required {
            violations.push(format!("n={n}: |B_n| = {} below {required}", d.hitting_set.len()));
        }
        if block.series.max_exponent().is_some_and(|m| m >= (n + 1) * (n + 1)) {
            violations.push(format!("n={n}: support reaches (n+1)^2"));
        }
    }
    StructureReport {
        blocks_checked: assembly.blocks.len(),
        terms_checked,
        violations,
    }
}

/// `T_k`: union of the hitting sets of built class-`k` blocks, sorted.
pub fn hitting_sets(blocks: &[BlockDescriptor], k: u32) -> Vec<u64> {
    let mut t: Vec<u64> = blocks
        .iter()
        .filter(|b| b.is_built() && b.k == Some(k))
        .flat_map(|b| b.hitting_set.iter().copied())
        .collect();
    t.sort_unstable();
    t.dedup();
    t
}
