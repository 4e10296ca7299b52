//! Sparse entire functions `f = sum_m a_m z^m / m!` and their scaled values
//! `e^{-r} f(r e^{it})` at large radii.
//!
//! Every magnitude goes through `ln(e^{-r} r^m / m!)`; factorials are never
//! formed. Values are returned relative to the log of the largest scaled
//! term so that radii far from the support do not underflow.

use std::io::{Read, Write};
use std::path::Path;

use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::circle::{check_exponent, power_mean, sample_real, sup_norm_bounds};
use crate::error::{Error, Result};
use crate::special::log_poisson_weight;
use crate::weighted_density::LogSumExp;

pub const DEFAULT_TAIL_EPS: f64 = 1e-12;

/// One contributing block of a constructed series.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockMeta {
    pub n: u64,
    pub k: u32,
    pub base: u64,
    pub stride: u64,
    pub len: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeriesMeta {
    pub blocks: Vec<BlockMeta>,
}

/// Sorted `(exponent, coefficient)` pairs in the `z^m / m!` frame.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSeries<T = f64> {
    terms: Vec<(u64, T)>,
    pub meta: SeriesMeta,
}

impl<T> Default for SparseSeries<T> {
    fn default() -> Self {
        Self {
            terms: Vec::new(),
            meta: SeriesMeta::default(),
        }
    }
}

impl<T: Clone> SparseSeries<T> {
    /// Fails unless exponents are strictly increasing.
    pub fn new(terms: Vec<(u64, T)>, meta: SeriesMeta) -> Result<Self> {
        if let Some(w) = terms.windows(2).find(|w| w[0].0 >= w[1].0) {
            return Err(Error::OverlappingExponent(w[1].0));
        }
        Ok(Self { terms, meta })
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn terms(&self) -> &[(u64, T)] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn min_exponent(&self) -> Option<u64> {
        self.terms.first().map(|t| t.0)
    }

    pub fn max_exponent(&self) -> Option<u64> {
        self.terms.last().map(|t| t.0)
    }

    pub fn coefficient(&self, m: u64) -> Option<&T> {
        self.terms
            .binary_search_by_key(&m, |t| t.0)
            .ok()
            .map(|i| &self.terms[i].1)
    }

    /// Union of two series with disjoint supports.
    pub fn merge_disjoint(&self, other: &Self) -> Result<Self> {
        let mut terms = Vec::with_capacity(self.len() + other.len());
        let (mut a, mut b) = (self.terms.iter().peekable(), other.terms.iter().peekable());
        loop {
            let next = match (a.peek(), b.peek()) {
                (Some(x), Some(y)) if x.0 == y.0 => return Err(Error::OverlappingExponent(x.0)),
                (Some(x), Some(y)) => {
                    if x.0 < y.0 {
                        a.next()
                    } else {
                        b.next()
                    }
                }
                (Some(_), None) => a.next(),
                (None, Some(_)) => b.next(),
                (None, None) => break,
            };
            terms.push(next.expect("peeked").clone());
        }
        let mut blocks = self.meta.blocks.clone();
        blocks.extend_from_slice(&other.meta.blocks);
        Ok(Self {
            terms,
            meta: SeriesMeta { blocks },
        })
    }

    /// `(d/dz)^order f`: `(m, a) -> (m - order, a)`, dropping `m < order`.
    pub fn derivative_shift(&self, order: u64) -> Self {
        let start = self.terms.partition_point(|t| t.0 < order);
        Self {
            terms: self.terms[start..]
                .iter()
                .map(|(m, a)| (m - order, a.clone()))
                .collect(),
            meta: self.meta.clone(),
        }
    }

    /// Terms with exponent in `lo..hi`.
    pub fn slice_exponents(&self, lo: u64, hi: u64) -> &[(u64, T)] {
        let a = self.terms.partition_point(|t| t.0 < lo);
        let b = self.terms.partition_point(|t| t.0 < hi);
        &self.terms[a..b]
    }
}

impl SparseSeries<BigRational> {
    pub fn to_f64(&self) -> SparseSeries<f64> {
        SparseSeries {
            terms: self
                .terms
                .iter()
                .map(|(m, a)| (*m, a.to_f64().unwrap_or(f64::NAN)))
                .collect(),
            meta: self.meta.clone(),
        }
    }
}

/// `e^{-r} f(r e^{it}) = e^{log_scale} * relative`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaledValue {
    pub log_scale: f64,
    pub relative: Complex64,
    /// Sum of the magnitudes of skipped terms, in the same relative units.
    pub discarded_relative: f64,
    pub active: usize,
}

impl ScaledValue {
    pub fn value(&self) -> Complex64 {
        self.relative * self.log_scale.exp()
    }

    pub fn discarded(&self) -> f64 {
        self.discarded_relative * self.log_scale.exp()
    }
}

/// Terms kept at radius `r`: those whose scaled magnitude is at least
/// `tail_eps * peak / term_count`.
#[derive(Debug, Clone)]
pub struct ActiveWindow {
    pub r: f64,
    /// Log of the largest scaled term magnitude.
    pub log_peak: f64,
    /// `(exponent, signed coefficient * exp(log term - log_peak))`.
    pub relative_terms: Vec<(u64, f64)>,
    pub discarded_relative: f64,
}

impl ActiveWindow {
    pub fn is_empty(&self) -> bool {
        self.relative_terms.is_empty()
    }

    pub fn lowest(&self) -> Option<u64> {
        self.relative_terms.first().map(|t| t.0)
    }

    pub fn bandwidth(&self) -> u64 {
        match (self.relative_terms.first(), self.relative_terms.last()) {
            (Some(a), Some(b)) => b.0 - a.0,
            _ => 0,
        }
    }

    /// Real coefficients of `e^{-i m0 t} e^{-r - log_peak} f(r e^{it})`.
    pub fn dense_profile(&self) -> Vec<f64> {
        let Some(m0) = self.lowest() else {
            return Vec::new();
        };
        let mut dense = vec![0.0; self.bandwidth() as usize + 1];
        for &(m, c) in &self.relative_terms {
            dense[(m - m0) as usize] = c;
        }
        dense
    }
}

fn check_radius(r: f64) -> Result<()> {
    if !(r >= 0.0 && r.is_finite()) {
        return Err(Error::invalid("r", format!("radius must be finite and nonnegative, got {r}")));
    }
    Ok(())
}

fn check_tail_eps(tail_eps: f64) -> Result<()> {
    if !(tail_eps > 0.0 && tail_eps < 1.0) {
        return Err(Error::invalid("tail_eps", format!("must lie in (0, 1), got {tail_eps}")));
    }
    Ok(())
}

impl SparseSeries<f64> {
    /// `ln |a_m| + ln(e^{-r} r^m / m!)` for every nonzero term.
    fn log_terms(&self, r: f64) -> impl Iterator<Item = (u64, f64, f64)> + '_ {
        self.terms
            .iter()
            .filter(|(_, a)| *a != 0.0)
            .map(move |&(m, a)| (m, a, a.abs().ln() + log_poisson_weight(m, r)))
    }

    pub fn active_window(&self, r: f64, tail_eps: f64) -> Result<ActiveWindow> {
        check_radius(r)?;
        check_tail_eps(tail_eps)?;
        let log_peak = self
            .log_terms(r)
            .map(|t| t.2)
            .fold(f64::NEG_INFINITY, f64::max);
        let mut window = ActiveWindow {
            r,
            log_peak,
            relative_terms: Vec::new(),
            discarded_relative: 0.0,
        };
        if log_peak == f64::NEG_INFINITY {
            return Ok(window);
        }
        let cutoff = (tail_eps / self.len() as f64).ln();
        let mut discarded = 0.0;
        for (m, a, log_term) in self.log_terms(r) {
            let rel = log_term - log_peak;
            if rel >= cutoff {
                window.relative_terms.push((m, a.signum() * rel.exp()));
            } else {
                discarded += rel.exp();
            }
        }
        window.discarded_relative = discarded;
        Ok(window)
    }

    /// `e^{-r} f(r e^{it})` summed over the active window.
    pub fn eval_scaled(&self, r: f64, t: f64, tail_eps: f64) -> Result<ScaledValue> {
        let window = self.active_window(r, tail_eps)?;
        let relative = window
            .relative_terms
            .iter()
            .map(|&(m, c)| c * Complex64::from_polar(1.0, (m as f64) * t))
            .sum();
        Ok(ScaledValue {
            log_scale: window.log_peak,
            relative,
            discarded_relative: window.discarded_relative,
            active: window.relative_terms.len(),
        })
    }

    /// `M_p(f, r)` by phase-factored equispaced sampling of the active window.
    pub fn mp_mean(&self, r: f64, p: f64, quad: &QuadSpec) -> Result<MpMean> {
        check_exponent(p)?;
        let window = self.active_window(r, quad.tail_eps)?;
        Ok(mp_mean_of_window(&window, p, quad))
    }

    /// `log M_2(f, r)` from the coefficients alone, over the active window.
    pub fn parseval_log_m2(&self, r: f64, tail_eps: f64) -> Result<f64> {
        let window = self.active_window(r, tail_eps)?;
        let mut acc = LogSumExp::new();
        for &(_, c) in &window.relative_terms {
            acc.push(2.0 * c.abs().ln());
        }
        Ok(window.log_peak + 0.5 * acc.value() + r)
    }

    /// `log M_2(f, r)` over every term, without a cutoff.
    pub fn parseval_log_m2_all(&self, r: f64) -> Result<f64> {
        check_radius(r)?;
        let mut acc = LogSumExp::new();
        for (_, _, lt) in self.log_terms(r) {
            acc.push(2.0 * lt);
        }
        Ok(0.5 * acc.value() + r)
    }

    /// Writes `exponent,coefficient` rows with a header line.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["exponent", "coefficient"]).map_err(csv_error)?;
        for (m, a) in &self.terms {
            w.write_record([m.to_string(), a.to_string()]).map_err(csv_error)?;
        }
        w.flush().map_err(|e| Error::Parse(e.to_string()))?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R, meta: SeriesMeta) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(input);
        let mut terms = Vec::new();
        for row in rdr.deserialize::<(u64, f64)>() {
            terms.push(row.map_err(csv_error)?);
        }
        Self::new(terms, meta)
    }

    /// Series CSV at `path` plus a `<stem>.meta.json` sidecar holding `meta_json`.
    pub fn save(&self, path: &Path, meta_json: &serde_json::Value) -> Result<()> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        std::fs::write(path, buf).map_err(|e| Error::io(path, e))?;
        let sidecar = meta_path(path);
        let text = serde_json::to_string_pretty(meta_json)? + "\n";
        std::fs::write(&sidecar, text).map_err(|e| Error::io(&sidecar, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let sidecar = meta_path(path);
        let meta = match std::fs::read_to_string(&sidecar) {
            Ok(text) => {
                let v: serde_json::Value = serde_json::from_str(&text)?;
                serde_json::from_value(serde_json::json!({ "blocks": v["blocks"] }))?
            }
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => SeriesMeta::default(),
            Err(e) => return Err(Error::io(&sidecar, e)),
        };
        Self::read_csv(file, meta)
    }
}

pub fn meta_path(path: &Path) -> std::path::PathBuf {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("series");
    path.with_file_name(format!("{stem}.meta.json"))
}

fn csv_error(e: csv::Error) -> Error {
    Error::Parse(format!("series csv: {e}"))
}

/// Node policy for [`SparseSeries::mp_mean`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadSpec {
    pub min_nodes: usize,
    pub tail_eps: f64,
    /// Node multiplier for a retried evaluation.
    pub refinement: usize,
}

impl Default for QuadSpec {
    fn default() -> Self {
        Self {
            min_nodes: 64,
            tail_eps: DEFAULT_TAIL_EPS,
            refinement: 8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MpMean {
    pub r: f64,
    #[serde(with = "crate::float_serde")]
    pub p: f64,
    /// `log M_p(f, r)`; `-inf` for an empty window.
    #[serde(with = "crate::float_serde")]
    pub log_mp: f64,
    /// Upper bound on `log M_inf` for `p = inf` (Bernstein bound plus
    /// discarded mass); equal to `log_mp` otherwise.
    #[serde(with = "crate::float_serde")]
    pub log_mp_upper: f64,
    pub nodes: usize,
    pub window_start: u64,
    pub bandwidth: u64,
    pub active: usize,
    pub discarded_relative: f64,
    pub empty: bool,
}

impl MpMean {
    /// `log (e^{-r} M_p)`.
    pub fn log_scaled(&self) -> f64 {
        self.log_mp - self.r
    }
}

pub fn mp_mean_of_window(window: &ActiveWindow, p: f64, quad: &QuadSpec) -> MpMean {
    let mut out = MpMean {
        r: window.r,
        p,
        log_mp: f64::NEG_INFINITY,
        log_mp_upper: f64::NEG_INFINITY,
        nodes: 0,
        window_start: window.lowest().unwrap_or(0),
        bandwidth: window.bandwidth(),
        active: window.relative_terms.len(),
        discarded_relative: window.discarded_relative,
        empty: window.is_empty(),
    };
    if window.is_empty() {
        return out;
    }
    let dense = window.dense_profile();
    let shift = window.log_peak + window.r;
    if p.is_infinite() {
        let bounds = sup_norm_bounds(&dense);
        out.nodes = bounds.nodes;
        out.log_mp = bounds.lower.ln() + shift;
        out.log_mp_upper = (bounds.upper + window.discarded_relative).ln() + shift;
    } else {
        let nodes = (4 * dense.len()).max(quad.min_nodes);
        let values: Vec<f64> = sample_real(&dense, nodes).iter().map(|z| z.norm()).collect();
        out.nodes = nodes;
        out.log_mp = power_mean(&values, p).ln() + shift;
        out.log_mp_upper = out.log_mp;
    }
    out
}

/// `sum |a_m| e^{-r} r^m / m!` in log form: an upper bound for every `M_p`.
pub fn log_triangle_bound(series: &SparseSeries<f64>, r: f64) -> f64 {
    let mut acc = LogSumExp::new();
    for (_, _, lt) in series.log_terms(r) {
        acc.push(lt);
    }
    acc.value() + r
}

/// Exact-arithmetic helper: coefficients with exponent `< bound`, zeros dropped.
pub fn exact_head(series: &SparseSeries<BigRational>, bound: u64) -> Vec<(u64, BigRational)> {
    series
        .slice_exponents(0, bound)
        .iter()
        .filter(|(_, a)| !a.is_zero())
        .cloned()
        .collect()
}
