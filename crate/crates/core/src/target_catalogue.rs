//! The dense family of rational target polynomials `q_k` and their
//! bookkeeping constants `d_k`, `l_k`, `alpha_k`.
//!
//! Enumeration order (frozen): polynomials `q = sum_j q_j z^j / j!` with
//! rational `q_j` and nonzero leading coefficient are ordered by height
//! `deg q + sum_j (|num q_j| + den q_j)`, then by degree, then
//! lexicographically on `(q_0, q_1, ...)` where a single rational is keyed by
//! `(|num| + den, sign (positive first), |num|)`. Zero coefficients cost 1.
//! The sequence starts `1, -1, 1/2, 2, -1/2, -2, ...`.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel_polynomials::{conjugate, KernelFamily};

/// Which kernel family and `alpha_k` exponent the construction uses.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "regime", rename_all = "snake_case")]
pub enum Regime {
    /// `2 <= p <= inf`: sign kernels, exponent 2.
    AtLeastTwo {
        #[serde(with = "crate::float_serde")]
        p: f64,
    },
    /// `1 < p < 2`: bounded kernels, exponent `q`.
    BelowTwo {
        #[serde(with = "crate::float_serde")]
        p: f64,
    },
}

impl Regime {
    pub fn from_p(p: f64) -> Result<Self> {
        if p.is_nan() || p <= 1.0 {
            return Err(Error::invalid("p", format!("the construction needs p > 1, got {p}")));
        }
        Ok(if p >= 2.0 {
            Regime::AtLeastTwo { p }
        } else {
            Regime::BelowTwo { p }
        })
    }

    pub fn p(&self) -> f64 {
        match *self {
            Regime::AtLeastTwo { p } | Regime::BelowTwo { p } => p,
        }
    }

    pub fn q(&self) -> f64 {
        conjugate(self.p())
    }

    /// Exponent `e` in `(C l_k / c)^e`.
    pub fn alpha_exponent(&self) -> f64 {
        match self {
            Regime::AtLeastTwo { .. } => 2.0,
            Regime::BelowTwo { .. } => self.q(),
        }
    }

    pub fn kernel_family(&self) -> KernelFamily {
        match self {
            Regime::AtLeastTwo { .. } => KernelFamily::Sign,
            Regime::BelowTwo { .. } => KernelFamily::Bounded,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Regime::AtLeastTwo { .. } => "p>=2",
            Regime::BelowTwo { .. } => "1<p<2",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConstantsMode {
    Paper,
    Relaxed,
    Custom,
}

/// `C`, `c` and `e` in `alpha_k = 1 + floor(max(2 d_k + 8 l_k, (C l_k / c)^e))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProofConstants {
    pub mode: ConstantsMode,
    pub big_c: f64,
    pub c: f64,
    pub exponent: f64,
}

impl ProofConstants {
    pub const PAPER_BIG_C: f64 = 1e5;
    pub const PAPER_DEFAULT_C: f64 = 0.5;

    /// `C = 1e5` with `0 < c < 1`.
    pub fn paper(c: f64, regime: Regime) -> Result<Self> {
        if !(c > 0.0 && c < 1.0) {
            return Err(Error::invalid("c", format!("paper mode needs 0 < c < 1, got {c}")));
        }
        Ok(Self {
            mode: ConstantsMode::Paper,
            big_c: Self::PAPER_BIG_C,
            c,
            exponent: regime.alpha_exponent(),
        })
    }

    /// `C = 10`, `c = 1`.
    pub fn relaxed(regime: Regime) -> Self {
        Self {
            mode: ConstantsMode::Relaxed,
            big_c: 10.0,
            c: 1.0,
            exponent: regime.alpha_exponent(),
        }
    }

    pub fn custom(big_c: f64, c: f64, exponent: f64) -> Result<Self> {
        if !(big_c > 0.0 && big_c.is_finite()) {
            return Err(Error::invalid("C", format!("must be positive, got {big_c}")));
        }
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::invalid("c", format!("must be positive, got {c}")));
        }
        if !(exponent >= 1.0 && exponent.is_finite()) {
            return Err(Error::invalid("e", format!("must be a finite exponent >= 1, got {exponent}")));
        }
        Ok(Self {
            mode: ConstantsMode::Custom,
            big_c,
            c,
            exponent,
        })
    }

    /// Parses `paper`, `relaxed` or `custom:C,c,e`.
    pub fn parse(s: &str, regime: Regime) -> Result<Self> {
        match s {
            "paper" => Self::paper(Self::PAPER_DEFAULT_C, regime),
            "relaxed" => Ok(Self::relaxed(regime)),
            _ => {
                let body = s
                    .strip_prefix("custom:")
                    .ok_or_else(|| Error::Parse(format!("unknown constants '{s}'")))?;
                let parts: Vec<f64> = body
                    .split(',')
                    .map(|x| x.trim().parse::<f64>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|_| Error::Parse(format!("bad number in '{s}'")))?;
                match parts.as_slice() {
                    [big_c, c, e] => Self::custom(*big_c, *c, *e),
                    [big_c, c] => Self::custom(*big_c, *c, regime.alpha_exponent()),
                    _ => Err(Error::Parse(format!("expected custom:C,c,e, got '{s}'"))),
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CatalogueEntry {
    pub k: usize,
    /// `q_{k,j}` with `q_k = sum_j q_{k,j} z^j / j!`.
    #[serde(with = "rational_vec")]
    pub q_coeffs: Vec<BigRational>,
    pub degree: usize,
    #[serde(with = "rational")]
    pub l1_norm: BigRational,
    #[serde(with = "rational")]
    pub l_k: BigRational,
    pub alpha_k: u64,
}

impl CatalogueEntry {
    pub fn l_k_f64(&self) -> f64 {
        self.l_k.to_f64().unwrap_or(f64::INFINITY)
    }

    pub fn q_coeffs_f64(&self) -> Vec<f64> {
        self.q_coeffs.iter().map(|q| q.to_f64().unwrap_or(f64::NAN)).collect()
    }
}

pub fn format_rational(r: &BigRational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

pub fn parse_rational(s: &str) -> Result<BigRational> {
    let bad = || Error::Parse(format!("bad rational '{s}'"));
    match s.split_once('/') {
        Some((n, d)) => {
            let n: BigInt = n.trim().parse().map_err(|_| bad())?;
            let d: BigInt = d.trim().parse().map_err(|_| bad())?;
            if d.is_zero() {
                return Err(bad());
            }
            Ok(BigRational::new(n, d))
        }
        None => Ok(BigRational::from_integer(s.trim().parse().map_err(|_| bad())?)),
    }
}

mod rational {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(r: &BigRational, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&format_rational(r))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<BigRational, D::Error> {
        let s = String::deserialize(d)?;
        parse_rational(&s).map_err(serde::de::Error::custom)
    }
}

mod rational_vec {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &[BigRational], s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_seq(v.iter().map(format_rational))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<BigRational>, D::Error> {
        let v = Vec::<String>::deserialize(d)?;
        v.iter()
            .map(|s| parse_rational(s).map_err(serde::de::Error::custom))
            .collect()
    }
}

/// Rationals `num/den` in lowest terms with `|num| + den = cost`, in key order.
fn rationals_of_cost(cost: u64) -> Vec<(i64, i64)> {
    if cost == 1 {
        return vec![(0, 1)];
    }
    let positive: Vec<(i64, i64)> = (1..cost)
        .filter(|&num| num.gcd(&(cost - num)) == 1)
        .map(|num| (num as i64, (cost - num) as i64))
        .collect();
    let negative = positive.iter().map(|&(n, d)| (-n, d));
    positive.iter().copied().chain(negative).collect()
}

/// All coefficient vectors of degree `d` and total coefficient cost `budget`,
/// in lexicographic key order.
fn vectors_with_budget(d: usize, budget: u64, out: &mut Vec<Vec<(i64, i64)>>) {
    fn fill(pos: usize, d: usize, budget: u64, prefix: &mut Vec<(i64, i64)>, out: &mut Vec<Vec<(i64, i64)>>) {
        if pos == d {
            if budget >= 2 {
                for r in rationals_of_cost(budget) {
                    prefix.push(r);
                    out.push(prefix.clone());
                    prefix.pop();
                }
            }
            return;
        }
        // remaining positions pos+1..d cost at least 1 each, the leading one at least 2
        let reserve = (d - pos - 1) as u64 + 2;
        if budget < reserve + 1 {
            return;
        }
        for cost in 1..=budget - reserve {
            for r in rationals_of_cost(cost) {
                prefix.push(r);
                fill(pos + 1, d, budget - cost, prefix, out);
                prefix.pop();
            }
        }
    }
    fill(0, d, budget, &mut Vec::new(), out);
}

fn polys_of_height(height: u64) -> Vec<Vec<(i64, i64)>> {
    let mut out = Vec::new();
    let mut d = 0usize;
    // height = d + sum costs >= d + d + 2
    while 2 * d as u64 + 2 <= height {
        vectors_with_budget(d, height - d as u64, &mut out);
        d += 1;
    }
    out
}

/// Lazily extended enumeration of `(q_k)` with `l_k` and `alpha_k`.
#[derive(Debug, Clone)]
pub struct Catalogue {
    constants: ProofConstants,
    entries: Vec<CatalogueEntry>,
    pending: std::collections::VecDeque<Vec<(i64, i64)>>,
    next_height: u64,
}

impl Catalogue {
    pub fn new(constants: ProofConstants) -> Self {
        Self {
            constants,
            entries: Vec::new(),
            pending: Default::default(),
            next_height: 2,
        }
    }

    pub fn constants(&self) -> &ProofConstants {
        &self.constants
    }

    fn next_coeffs(&mut self) -> Vec<(i64, i64)> {
        while self.pending.is_empty() {
            self.pending.extend(polys_of_height(self.next_height));
            self.next_height += 1;
        }
        self.pending.pop_front().expect("refilled above")
    }

    /// The `k`-th entry (1-based).
    pub fn entry(&mut self, k: usize) -> Result<&CatalogueEntry> {
        if k == 0 {
            return Err(Error::invalid("k", "catalogue indices start at 1"));
        }
        while self.entries.len() < k {
            let raw = self.next_coeffs();
            let q_coeffs: Vec<BigRational> = raw
                .iter()
                .map(|&(n, d)| BigRational::new(n.into(), d.into()))
                .collect();
            let degree = q_coeffs.len() - 1;
            let l1_norm = q_coeffs.iter().fold(BigRational::zero(), |acc, q| acc + q.abs());
            let l_k = match self.entries.last() {
                None => l1_norm.clone(),
                Some(prev) => {
                    let next = &prev.l_k + BigRational::from_integer(1.into());
                    if l1_norm > next {
                        l1_norm.clone()
                    } else {
                        next
                    }
                }
            };
            let alpha_k = alpha(degree, &l_k, &self.constants)?;
            self.entries.push(CatalogueEntry {
                k: self.entries.len() + 1,
                q_coeffs,
                degree,
                l1_norm,
                l_k,
                alpha_k,
            });
        }
        Ok(&self.entries[k - 1])
    }

    pub fn entries_up_to(&mut self, k: usize) -> Result<Vec<CatalogueEntry>> {
        self.entry(k)?;
        Ok(self.entries[..k].to_vec())
    }
}

/// `1 + floor(max(2 d + 8 l, (C l / c)^e))`.
pub fn alpha(degree: usize, l_k: &BigRational, constants: &ProofConstants) -> Result<u64> {
    let linear = (BigRational::from_integer((2 * degree).into()) + l_k * BigRational::from_integer(8.into()))
        .floor()
        .to_integer()
        .to_u64()
        .ok_or_else(|| Error::invalid("alpha_k", "2 d_k + 8 l_k overflows"))?;
    let l = l_k.to_f64().unwrap_or(f64::INFINITY);
    let power = (constants.big_c * l / constants.c).powf(constants.exponent).floor();
    if !(power < u64::MAX as f64) {
        return Err(Error::invalid(
            "alpha_k",
            format!("(C l_k / c)^e = {power:e} does not fit in 64 bits"),
        ));
    }
    Ok(1 + linear.max(power as u64))
}

/// `k` with `n` in `A_k = {2^k (2j - 1)}`: the 2-adic valuation of `n`.
pub fn dyadic_class(n: u64) -> Result<u32> {
    if n == 0 || n % 2 == 1 {
        return Err(Error::invalid("n", format!("{n} is not a positive even integer")));
    }
    Ok(n.trailing_zeros())
}

/// `floor(n^{2(1-gamma)} / alpha)`; exact integer comparison when
/// `1 / (2(1-gamma))` is an integer.
pub fn kernel_len(n: u128, gamma: f64, alpha: u64) -> u64 {
    let e = 2.0 * (1.0 - gamma);
    let approx = ((n as f64).powf(e) / alpha as f64).floor();
    let root = 1.0 / e;
    if root.fract() == 0.0 && root <= 8.0 {
        let m = root as u32;
        // largest L with (L alpha)^m <= n, starting from the float guess
        let fits = |l: u128| {
            (l * alpha as u128)
                .checked_pow(m)
                .is_some_and(|v| v <= n)
        };
        let mut l = approx.max(0.0) as u128;
        while l > 0 && !fits(l) {
            l -= 1;
        }
        while fits(l + 1) {
            l += 1;
        }
        return l.min(u64::MAX as u128) as u64;
    }
    approx.clamp(0.0, u64::MAX as f64) as u64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FirstActive {
    /// `10 alpha_k`.
    #[serde(with = "crate::wide_int")]
    pub paper_threshold: u128,
    /// `alpha_k^{1 / (2(1-gamma))}`: below it the kernel is empty.
    pub nonempty_threshold: f64,
    /// Least `n` in `A_k` above both thresholds, if representable.
    #[serde(with = "crate::wide_int::option")]
    pub first_active_n: Option<u128>,
}

pub fn first_active_n(entry: &CatalogueEntry, k: u32, gamma: f64) -> Result<FirstActive> {
    if !(gamma > 0.5 && gamma < 1.0) {
        return Err(Error::invalid("gamma", format!("{gamma} is outside (1/2, 1)")));
    }
    let alpha = entry.alpha_k;
    let paper_threshold = 10 * alpha as u128;
    let nonempty_threshold = (alpha as f64).powf(1.0 / (2.0 * (1.0 - gamma)));
    let step = 1u128 << (k + 1);
    let first_active_n = if nonempty_threshold < 1e36 {
        let start = paper_threshold.max((nonempty_threshold as u128).saturating_sub(2 * step));
        let base = 1u128 << k;
        // least n = base * (2j - 1) >= start
        let mut n = match start.div_ceil(base) {
            0 => base,
            m if m % 2 == 1 => m * base,
            m => (m + 1) * base,
        };
        while n < paper_threshold || kernel_len(n, gamma, alpha) == 0 {
            n += step;
        }
        Some(n)
    } else {
        None
    };
    Ok(FirstActive {
        paper_threshold,
        nonempty_threshold,
        first_active_n,
    })
}
