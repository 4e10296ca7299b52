//! Flat kernel polynomials on the unit circle.
//!
//! * [`sign_kernel`]: the length-`N` prefix of the Rudin-Shapiro sequence.
//!   Coefficients are `+-1`, at least half of them `+1`, and the sup norm stays
//!   below `5 sqrt N`.
//! * [`bounded_kernel`]: a causally shifted de la Vallee Poussin (trapezoid)
//!   kernel. Coefficients lie in `[0, 1]`, roughly half equal `1`, and
//!   `||.||_p <= 3 N^{1/q}` on `1 <= p <= 2`.
//!
//! Both constructors validate their guarantees numerically before returning.

use num_bigint::BigInt;
use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use crate::circle::{self, LpNorm, SupNormBounds};
use crate::error::{Error, Result};

pub use crate::circle::trapezoid_lp_mean as circle_lp_norm;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelFamily {
    Sign,
    Bounded,
}

impl std::str::FromStr for KernelFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sign" => Ok(KernelFamily::Sign),
            "bounded" => Ok(KernelFamily::Bounded),
            _ => Err(Error::Parse(format!("unknown kernel family '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
enum Shape {
    Sign,
    /// Ones for `|j - center| <= plateau`, linear decay to zero at `ramp`.
    Trapezoid { plateau: usize, ramp: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelPolynomial {
    pub family: KernelFamily,
    pub coefficients: Vec<f64>,
    pub plus_count: usize,
    shape: Shape,
}

impl KernelPolynomial {
    pub fn len(&self) -> usize {
        self.coefficients.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coefficients.is_empty()
    }

    /// The `i`-th coefficient as an exact rational.
    pub fn exact_coefficient(&self, i: usize) -> BigRational {
        match self.shape {
            Shape::Sign => BigRational::from_integer(BigInt::from(self.coefficients[i] as i64)),
            Shape::Trapezoid { plateau, ramp } => {
                let (num, den) = trapezoid_value(i, plateau, ramp);
                BigRational::new(BigInt::from(num), BigInt::from(den))
            }
        }
    }

    /// Indices whose coefficient is exactly `+1`.
    pub fn plus_indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.coefficients
            .iter()
            .enumerate()
            .filter(|(_, &c)| c == 1.0)
            .map(|(i, _)| i)
    }
}

/// First `count` terms of the Rudin-Shapiro sequence:
/// `(-1)^(number of "11" blocks in the binary expansion of k)`.
pub fn rs_sequence(count: usize) -> Vec<i8> {
    (0..count as u64)
        .map(|k| if (k & (k >> 1)).count_ones() % 2 == 0 { 1 } else { -1 })
        .collect()
}

fn trapezoid_value(i: usize, plateau: usize, ramp: usize) -> (i64, i64) {
    let center = ramp as i64 - 1;
    let d = (i as i64 - center).unsigned_abs() as usize;
    if d <= plateau {
        (1, 1)
    } else if d < ramp {
        ((ramp - d) as i64, (ramp - plateau) as i64)
    } else {
        (0, 1)
    }
}

fn trapezoid(n: usize, plateau: usize, ramp: usize) -> KernelPolynomial {
    let coefficients: Vec<f64> = (0..n)
        .map(|i| {
            let (num, den) = trapezoid_value(i, plateau, ramp);
            num as f64 / den as f64
        })
        .collect();
    let plus_count = coefficients.iter().filter(|&&c| c == 1.0).count();
    KernelPolynomial {
        family: KernelFamily::Bounded,
        coefficients,
        plus_count,
        shape: Shape::Trapezoid { plateau, ramp },
    }
}

/// Conjugate exponent, `q = inf` for `p = 1`.
pub fn conjugate(p: f64) -> f64 {
    if p == 1.0 {
        f64::INFINITY
    } else if p.is_infinite() {
        1.0
    } else {
        p / (p - 1.0)
    }
}

/// `5 sqrt N` (sign family, `p >= 2`) or `3 N^{1/q}` (bounded, `p <= 2`).
pub fn norm_bound(family: KernelFamily, n: usize, p: f64) -> Option<f64> {
    let nf = n as f64;
    match family {
        KernelFamily::Sign if p >= 2.0 => Some(5.0 * nf.sqrt()),
        KernelFamily::Bounded if (1.0..=2.0).contains(&p) => Some(3.0 * nf.powf(1.0 / conjugate(p))),
        _ => None,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormCheck {
    pub norm: LpNorm,
    pub bound: Option<f64>,
    pub ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelValidation {
    pub n: usize,
    pub family: KernelFamily,
    pub plus_count: usize,
    pub required_plus: usize,
    pub coefficients_ok: bool,
    pub sup: Option<SupNormBounds>,
    pub norms: Vec<NormCheck>,
    pub bounds_ok: bool,
}

/// Exponents checked when a kernel is emitted.
pub fn default_check_exponents(family: KernelFamily) -> &'static [f64] {
    match family {
        KernelFamily::Sign => &[f64::INFINITY],
        KernelFamily::Bounded => &[1.0, 1.5, 2.0],
    }
}

/// Checks the coefficient, count and norm guarantees of `kernel` at the
/// exponents `ps`.
pub fn validate(kernel: &KernelPolynomial, ps: &[f64]) -> Result<KernelValidation> {
    let n = kernel.len();
    let (coefficients_ok, required_plus) = match kernel.family {
        KernelFamily::Sign => (
            kernel.coefficients.iter().all(|&c| c == 1.0 || c == -1.0),
            n.div_ceil(2),
        ),
        KernelFamily::Bounded => (kernel.coefficients.iter().all(|c| c.abs() <= 1.0), n / 4),
    };
    let sup = (kernel.family == KernelFamily::Sign).then(|| circle::sup_norm_bounds_checked(&kernel.coefficients));
    let norms = ps
        .iter()
        .map(|&p| {
            let norm = match (p.is_infinite(), sup) {
                (true, Some(s)) => LpNorm {
                    p,
                    value: s.lower,
                    quad_rel_err: s.resolution_rel_err.unwrap_or(0.0),
                },
                _ => circle::accurate_lp_norm(&kernel.coefficients, p)?,
            };
            let bound = norm_bound(kernel.family, n, p);
            let ok = bound.is_none_or(|b| norm.value <= b);
            Ok(NormCheck { norm, bound, ok })
        })
        .collect::<Result<Vec<_>>>()?;
    let bounds_ok = coefficients_ok && kernel.plus_count >= required_plus && norms.iter().all(|c| c.ok);
    Ok(KernelValidation {
        n,
        family: kernel.family,
        plus_count: kernel.plus_count,
        required_plus,
        coefficients_ok,
        sup,
        norms,
        bounds_ok,
    })
}

fn check_len(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::invalid("N", "kernel length must be positive"));
    }
    Ok(())
}

/// Rudin-Shapiro prefix `p_N`, validated.
pub fn sign_kernel(n: usize) -> Result<KernelPolynomial> {
    let kernel = sign_kernel_unchecked(n)?;
    // certified upper bound; `validate` gives the full record
    let sup = circle::sup_norm_bounds(&kernel.coefficients);
    let required_plus = n.div_ceil(2);
    let bound = norm_bound(KernelFamily::Sign, n, f64::INFINITY).unwrap_or(f64::INFINITY);
    if kernel.plus_count < required_plus || sup.upper > bound {
        return Err(Error::KernelValidation(format!(
            "sign kernel N={n}: plus_count {} (need {required_plus}), sup <= {} against {bound}",
            kernel.plus_count, sup.upper
        )));
    }
    Ok(kernel)
}

pub(crate) fn sign_kernel_unchecked(n: usize) -> Result<KernelPolynomial> {
    check_len(n)?;
    let coefficients: Vec<f64> = rs_sequence(n).into_iter().map(f64::from).collect();
    let plus_count = coefficients.iter().filter(|&&c| c == 1.0).count();
    Ok(KernelPolynomial {
        family: KernelFamily::Sign,
        coefficients,
        plus_count,
        shape: Shape::Sign,
    })
}

const BOUNDED_ATTEMPTS: usize = 4;

/// Trapezoid kernel `p*_N`, validated. On a failed validation the plateau is
/// narrowed and the ramps widened, up to a fixed number of attempts.
pub fn bounded_kernel(n: usize) -> Result<KernelPolynomial> {
    check_len(n)?;
    let mut last = None;
    for (plateau, ramp) in bounded_shapes(n) {
        let kernel = trapezoid(n, plateau, ramp);
        let record = validate(&kernel, default_check_exponents(KernelFamily::Bounded))?;
        if record.bounds_ok {
            return Ok(kernel);
        }
        last = Some(record);
    }
    Err(Error::KernelValidation(format!(
        "bounded kernel N={n} failed after {BOUNDED_ATTEMPTS} attempts: {last:?}"
    )))
}

/// Candidate `(plateau, ramp)` pairs. The first is the classical
/// `2 F_{2b} - F_b` shape, whose L^1 norm is at most 3.
fn bounded_shapes(n: usize) -> Vec<(usize, usize)> {
    let b0 = (n + 1) / 4;
    let widest_ramp = n.div_ceil(2).max(1);
    let step = b0.div_ceil(8).max(1);
    (0..BOUNDED_ATTEMPTS)
        .map(|t| {
            if t == 0 {
                (b0, (2 * b0).max(b0 + 1))
            } else {
                let plateau = b0.saturating_sub(t * step);
                (plateau, widest_ramp.max(plateau + 1))
            }
        })
        .collect()
}
