//! Run configuration: `key = value` lines, flag overrides and validation.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::block_construction::ConstructionConfig;
use crate::error::{Error, Result};
use crate::float_serde::{self, parse_extended};
use crate::sparse_series::{QuadSpec, DEFAULT_TAIL_EPS};
use crate::target_catalogue::{ProofConstants, Regime};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RunMode {
    /// Proof constants `C = 1e5`, `0 < c < 1`: thresholds only.
    Paper,
    /// Desk-scale constants (default `C = 10`, `c = 1`): full construction.
    Relaxed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum OrbitSample {
    All,
    /// `count` hitting indices spread evenly over all blocks.
    Spread(usize),
}

impl From<OrbitSample> for String {
    fn from(s: OrbitSample) -> String {
        match s {
            OrbitSample::All => "all".into(),
            OrbitSample::Spread(n) => n.to_string(),
        }
    }
}

impl TryFrom<String> for OrbitSample {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        match s.trim() {
            "all" => Ok(OrbitSample::All),
            t => match t.parse::<usize>() {
                Ok(n) if n > 0 => Ok(OrbitSample::Spread(n)),
                _ => Err(Error::Parse(format!("orbit_sample must be 'all' or a positive count, got '{s}'"))),
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuiteSelection {
    pub construct: bool,
    pub blocks: bool,
    pub growth: bool,
    pub orbit: bool,
    pub density: bool,
}

impl SuiteSelection {
    pub const ALL: Self = Self {
        construct: true,
        blocks: true,
        growth: true,
        orbit: true,
        density: true,
    };

    pub const NONE: Self = Self {
        construct: false,
        blocks: false,
        growth: false,
        orbit: false,
        density: false,
    };

    pub fn parse(s: &str) -> Result<Self> {
        if s.trim() == "all" {
            return Ok(Self::ALL);
        }
        let mut out = Self::NONE;
        for name in s.split(',').map(str::trim).filter(|x| !x.is_empty()) {
            match name {
                "construct" => out.construct = true,
                "blocks" => out.blocks = true,
                "growth" => out.growth = true,
                "orbit" => out.orbit = true,
                "density" | "tk-density" => out.density = true,
                _ => return Err(Error::Parse(format!("unknown suite '{name}'"))),
            }
        }
        Ok(out)
    }

    pub fn any(&self) -> bool {
        self.construct || self.blocks || self.growth || self.orbit || self.density
    }
}

/// Every knob of a run. Serialized verbatim into each report; the output
/// directory is left out so that identical runs write identical bytes
/// wherever they land.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub gamma: f64,
    #[serde(with = "float_serde")]
    pub p: f64,
    pub mode: RunMode,
    #[serde(rename = "C")]
    pub big_c: Option<f64>,
    pub c: Option<f64>,
    #[serde(rename = "e")]
    pub e_exponent: Option<f64>,
    pub k_max: u32,
    pub n_max: u64,
    pub min_nodes: usize,
    pub refinement: usize,
    pub tail_eps: f64,
    pub suites: SuiteSelection,
    pub grid: String,
    pub subseq: bool,
    pub orbit_k: Option<u32>,
    pub orbit_sample: OrbitSample,
    pub density_k: Option<u32>,
    pub density_slack: f64,
    #[serde(skip)]
    pub output_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            gamma: 0.75,
            p: f64::INFINITY,
            mode: RunMode::Relaxed,
            big_c: None,
            c: None,
            e_exponent: None,
            k_max: 1,
            n_max: 400,
            min_nodes: 64,
            refinement: 8,
            tail_eps: DEFAULT_TAIL_EPS,
            suites: SuiteSelection::ALL,
            grid: "auto".into(),
            subseq: true,
            orbit_k: None,
            orbit_sample: OrbitSample::All,
            density_k: None,
            density_slack: 0.5,
            output_dir: PathBuf::from("out"),
        }
    }
}

/// Validated view of a [`RunConfig`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Resolved {
    pub regime: Regime,
    pub constants: ProofConstants,
    pub construction: ConstructionConfig,
    pub quad: QuadSpec,
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::Parse(format!("{key}: cannot parse '{value}'")))
}

fn parse_float(key: &str, value: &str) -> Result<f64> {
    parse_extended(value).map_err(|e| Error::Parse(format!("{key}: {e}")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value.trim() {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(Error::Parse(format!("{key}: expected true or false, got '{value}'"))),
    }
}

fn parse_optional<T: std::str::FromStr>(key: &str, value: &str) -> Result<Option<T>> {
    match value.trim() {
        "" | "none" | "all" => Ok(None),
        v => parse_num(key, v).map(Some),
    }
}

/// `key = value` pairs from a config file; `#` starts a comment.
pub fn parse_pairs(text: &str) -> Result<Vec<(String, String)>> {
    text.lines()
        .enumerate()
        .filter_map(|(i, line)| {
            let line = line.split('#').next().unwrap_or("").trim();
            (!line.is_empty()).then_some((i + 1, line))
        })
        .map(|(lineno, line)| {
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("line {lineno}: expected key = value, got '{line}'")))?;
            Ok((k.trim().to_string(), v.trim().to_string()))
        })
        .collect()
}

impl RunConfig {
    /// Sets one key; hyphens and underscores are interchangeable.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let norm = key.trim().trim_start_matches("--").replace('-', "_");
        match norm.as_str() {
            "gamma" => self.gamma = parse_float(key, value)?,
            "p" => self.p = parse_float(key, value)?,
            "mode" => {
                self.mode = match value.trim() {
                    "paper" => RunMode::Paper,
                    "relaxed" => RunMode::Relaxed,
                    _ => return Err(Error::Parse(format!("mode must be paper or relaxed, got '{value}'"))),
                }
            }
            "C" => self.big_c = Some(parse_float(key, value)?),
            "c" => self.c = Some(parse_float(key, value)?),
            "e" | "e_exponent" => self.e_exponent = Some(parse_float(key, value)?),
            "k_max" => self.k_max = parse_num(key, value)?,
            "n_max" => self.n_max = parse_num(key, value)?,
            "min_nodes" => self.min_nodes = parse_num(key, value)?,
            "refinement" => self.refinement = parse_num(key, value)?,
            "tail_eps" => self.tail_eps = parse_float(key, value)?,
            "suites" | "suite" => self.suites = SuiteSelection::parse(value)?,
            "grid" => self.grid = value.trim().to_string(),
            "subseq" => self.subseq = parse_bool(key, value)?,
            "orbit_k" => self.orbit_k = parse_optional(key, value)?,
            "orbit_sample" | "sample" => self.orbit_sample = OrbitSample::try_from(value.to_string())?,
            "density_k" => self.density_k = parse_optional(key, value)?,
            "density_slack" | "slack" => self.density_slack = parse_float(key, value)?,
            "out" | "output_dir" => self.output_dir = PathBuf::from(value.trim()),
            _ => return Err(Error::Parse(format!("unknown config key '{key}'"))),
        }
        Ok(())
    }

    pub fn apply_pairs<'a, I>(&mut self, pairs: I) -> Result<()>
    where
        I: IntoIterator<Item = (&'a str, &'a str)>,
    {
        pairs.into_iter().try_for_each(|(k, v)| self.set(k, v))
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        let pairs = parse_pairs(text)?;
        cfg.apply_pairs(pairs.iter().map(|(k, v)| (k.as_str(), v.as_str())))?;
        Ok(cfg)
    }

    pub fn from_file(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text)
    }

    pub fn quad(&self) -> QuadSpec {
        QuadSpec {
            min_nodes: self.min_nodes,
            tail_eps: self.tail_eps,
            refinement: self.refinement,
        }
    }

    pub fn constants(&self, regime: Regime) -> Result<ProofConstants> {
        let mut constants = match self.mode {
            RunMode::Paper => ProofConstants::paper(self.c.unwrap_or(ProofConstants::PAPER_DEFAULT_C), regime)?,
            RunMode::Relaxed => ProofConstants::relaxed(regime),
        };
        if let Some(big_c) = self.big_c {
            constants.big_c = big_c;
        }
        if let (RunMode::Relaxed, Some(c)) = (self.mode, self.c) {
            constants.c = c;
        }
        if !(constants.big_c > 0.0 && constants.big_c.is_finite()) {
            return Err(Error::invalid("C", format!("must be positive, got {}", constants.big_c)));
        }
        if !(constants.c > 0.0 && constants.c.is_finite()) {
            return Err(Error::invalid("c", format!("must be positive, got {}", constants.c)));
        }
        if let Some(e) = self.e_exponent {
            if (e - regime.alpha_exponent()).abs() > 1e-12 {
                return Err(Error::invalid(
                    "e",
                    format!(
                        "exponent {e} does not match the {} regime (expected {})",
                        regime.label(),
                        regime.alpha_exponent()
                    ),
                ));
            }
        }
        Ok(constants)
    }

    pub fn resolve(&self) -> Result<Resolved> {
        let regime = Regime::from_p(self.p)?;
        let constants = self.constants(regime)?;
        let construction = ConstructionConfig::new(self.gamma, regime, constants, self.n_max)?;
        if self.k_max == 0 {
            return Err(Error::invalid("k_max", "must be at least 1"));
        }
        if self.min_nodes == 0 {
            return Err(Error::invalid("min_nodes", "must be positive"));
        }
        if !(self.tail_eps > 0.0 && self.tail_eps < 1.0) {
            return Err(Error::invalid("tail_eps", "must lie in (0, 1)"));
        }
        if !(self.density_slack > 0.0 && self.density_slack <= 1.0) {
            return Err(Error::invalid("density_slack", "must lie in (0, 1]"));
        }
        Ok(Resolved {
            regime,
            constants,
            construction,
            quad: self.quad(),
        })
    }
}

/// Radii from `auto`, `log:lo:hi:count`, `lin:lo:hi:count` or a comma list.
/// `auto` expands to 50 geometric points over `auto_range`.
pub fn parse_real_grid(spec: &str, auto_range: Option<(f64, f64)>) -> Result<Vec<f64>> {
    let spec = spec.trim();
    let spaced = |body: &str, log: bool| -> Result<Vec<f64>> {
        let parts: Vec<&str> = body.split(':').collect();
        let [lo, hi, count] = parts.as_slice() else {
            return Err(Error::Parse(format!("grid '{spec}': expected lo:hi:count")));
        };
        let lo = parse_float("grid", lo)?;
        let hi = parse_float("grid", hi)?;
        let count: usize = parse_num("grid", count)?;
        if log {
            crate::growth_analysis::geometric_grid(lo, hi, count)
        } else {
            if !(hi > lo && count >= 2) {
                return Err(Error::invalid("grid", format!("need lo < hi and count >= 2 in '{spec}'")));
            }
            let step = (hi - lo) / (count - 1) as f64;
            Ok((0..count).map(|i| lo + step * i as f64).collect())
        }
    };
    if spec == "auto" {
        return match auto_range {
            Some((lo, hi)) => crate::growth_analysis::geometric_grid(lo, hi, 50),
            None => Ok(Vec::new()),
        };
    }
    if let Some(body) = spec.strip_prefix("log:") {
        return spaced(body, true);
    }
    if let Some(body) = spec.strip_prefix("lin:") {
        return spaced(body, false);
    }
    let values = spec
        .split(',')
        .map(|x| parse_float("grid", x))
        .collect::<Result<Vec<f64>>>()?;
    if values.is_empty() {
        return Err(Error::invalid("grid", "empty grid"));
    }
    Ok(values)
}

/// Integer grid: the real grid rounded, deduplicated and sorted.
pub fn parse_integer_grid(spec: &str) -> Result<Vec<u64>> {
    let mut out: Vec<u64> = parse_real_grid(spec, None)?
        .into_iter()
        .map(|x| {
            if x >= 1.0 && x.is_finite() {
                Ok(x.round() as u64)
            } else {
                Err(Error::invalid("grid", format!("integer grid points must be >= 1, got {x}")))
            }
        })
        .collect::<Result<_>>()?;
    out.sort_unstable();
    out.dedup();
    Ok(out)
}
