//! Reference values that do not go through rotated contours: closed forms
//! for a single term, a two-term convolution, brute-force characteristic
//! functions, Cauchy transforms and seeded Monte Carlo samples.

use std::f64::consts::{PI, SQRT_2};

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::contour_cf::PowerSumModel;
use crate::error::{Error, Result};
use crate::quadrature::{integrate_segment, QuadConfig};

/// Standard normal variables are ignored beyond this many deviations.
const NORMAL_RANGE: f64 = 9.0;

pub fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / SQRT_2)
}

fn root(x: f64, d: u32) -> f64 {
    x.signum() * x.abs().powf(1.0 / f64::from(d))
}

fn power(u: f64, d: u32) -> f64 {
    u.signum() * u.abs().powi(d as i32)
}

/// `(c + δ)^d − c^d` without cancellation for small `δ`.
fn binomial_excess(c: f64, delta: f64, d: u32) -> f64 {
    let mut coef = 1.0;
    let mut sum = 0.0;
    for k in 1..=d {
        coef *= f64::from(d - k + 1) / f64::from(k);
        sum += coef * c.powi((d - k) as i32) * delta.powi(k as i32);
    }
    sum
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleValue {
    pub value: f64,
    pub error_estimate: f64,
}

fn oracle_cfg(tol: f64) -> QuadConfig {
    QuadConfig {
        abs_tol: tol,
        rel_tol: tol,
        max_subdivisions: 20_000,
        ..QuadConfig::default()
    }
}

/// Density of `Z^d` for standard normal `Z`.
pub fn exact_density_n1(x: f64, d: u32) -> Result<f64> {
    PowerSumModel::new(d, 1)?;
    if x == 0.0 {
        return Err(Error::OracleOrigin);
    }
    if d.is_multiple_of(2) && x < 0.0 {
        return Ok(0.0);
    }
    let u = root(x, d).abs();
    let mult = if d.is_multiple_of(2) { 2.0 } else { 1.0 };
    Ok(mult * normal_pdf(u) / (f64::from(d) * u.powi(d as i32 - 1)))
}

/// `P(Z^d < c)`.
pub fn exact_cdf_n1(c: f64, d: u32) -> Result<f64> {
    PowerSumModel::new(d, 1)?;
    if d % 2 == 1 {
        Ok(normal_cdf(root(c, d)))
    } else if c <= 0.0 {
        Ok(0.0)
    } else {
        Ok(libm::erf(root(c, d) / SQRT_2))
    }
}

/// Density of `Z₁^d + Z₂^d` by direct convolution.
///
/// Written in the root variable `u` of the first term, the integrand is
/// `φ(u) f₁(x − u^d)`, singular like `|u − c|^{1/d − 1}` at `c = x^{1/d}`;
/// the substitution `u = c ± v^d` removes the singularity.
pub fn conv_density_n2(x: f64, d: u32, tol: f64) -> Result<OracleValue> {
    PowerSumModel::new(d, 2)?;
    if x == 0.0 {
        return Err(Error::OracleOrigin);
    }
    let even = d.is_multiple_of(2);
    if even && x < 0.0 {
        return Ok(OracleValue {
            value: 0.0,
            error_estimate: 0.0,
        });
    }
    let cfg = oracle_cfg(tol);
    // evaluated at c^d, within an ulp of x; keeping x − c^d in the second
    // argument would swamp it next to the singularity
    let c = root(x, d);
    let df = f64::from(d);
    let first = |u: f64| {
        if even {
            2.0 * normal_pdf(u)
        } else {
            normal_pdf(u)
        }
    };
    let second = |y: f64| -> f64 {
        if y == 0.0 {
            0.0
        } else {
            exact_density_n1(y, d).unwrap_or(0.0)
        }
    };
    // side = +1: u = c + v^d, side = -1: u = c - v^d
    let side_integral = |side: f64, end: f64| -> Result<(f64, f64)> {
        if end <= c && side > 0.0 || end >= c && side < 0.0 {
            return Ok((0.0, 0.0));
        }
        let vmax = (end - c).abs().powf(1.0 / df);
        let r = integrate_segment(
            |v| {
                let v = v.re;
                let delta = side * v.powi(d as i32);
                let u = c + delta;
                let jac = df * v.powi(d as i32 - 1);
                Complex64::new(first(u) * second(-binomial_excess(c, delta, d)) * jac, 0.0)
            },
            0.0,
            vmax,
            Complex64::new(0.0, 0.0),
            Complex64::new(1.0, 0.0),
            &cfg,
        )?;
        Ok((r.value.re, r.error_estimate))
    };
    let (lo, hi) = if even {
        (0.0, c)
    } else {
        (-NORMAL_RANGE, NORMAL_RANGE)
    };
    let (a, ea) = side_integral(-1.0, lo)?;
    let (b, eb) = if even {
        (0.0, 0.0)
    } else {
        side_integral(1.0, hi)?
    };
    Ok(OracleValue {
        value: a + b,
        error_estimate: ea + eb,
    })
}

/// `E[e^{itZ^d}]` by the trapezoid rule on `[-9, 9]`, doubling the node
/// count until successive values agree to `tol`.
pub fn brute_cf(t: f64, d: u32, tol: f64) -> Result<Complex64> {
    PowerSumModel::new(d, 1)?;
    let f = |x: f64| Complex64::from_polar(normal_pdf(x), t * x.powi(d as i32));
    let (a, b) = (-NORMAL_RANGE, NORMAL_RANGE);
    let mut n = 256usize;
    let mut h = (b - a) / n as f64;
    let mut sum: Complex64 =
        (0..=n).map(|k| f(a + h * k as f64)).sum::<Complex64>() - (f(a) + f(b)) * 0.5;
    let mut prev = sum * h;
    for _ in 0..16 {
        let mid: Complex64 = (0..n).map(|k| f(a + h * (k as f64 + 0.5))).sum();
        sum += mid;
        n *= 2;
        h *= 0.5;
        let next = sum * h;
        if (next - prev).norm() <= tol {
            return Ok(next);
        }
        prev = next;
    }
    Err(Error::InvalidConfig(format!(
        "trapezoid rule did not settle to {tol} for t = {t}"
    )))
}

/// `(1/i) ∫ f₁(x) / (x − z) dx` for the single-term density, `Im z ≠ 0`.
pub fn cauchy_transform_n1(z: Complex64, d: u32, tol: f64) -> Result<Complex64> {
    PowerSumModel::new(d, 1)?;
    if z.im == 0.0 {
        return Err(Error::OutsideDomain {
            re: z.re,
            im: z.im,
            phi: 0.0,
        });
    }
    let even = d.is_multiple_of(2);
    let lo = if even { 0.0 } else { -NORMAL_RANGE };
    let mult = if even { 2.0 } else { 1.0 };
    let r = integrate_segment(
        |u| mult * normal_pdf(u.re) / (power(u.re, d) - z),
        lo,
        NORMAL_RANGE,
        Complex64::new(0.0, 0.0),
        Complex64::new(1.0, 0.0),
        &oracle_cfg(tol),
    )?;
    Ok(r.value / Complex64::i())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct McConfig {
    pub samples: usize,
    pub seed: u64,
}

impl McConfig {
    /// Samples drawn from one RNG stream.
    pub const CHUNK: usize = 65_536;
    pub const RNG_NAME: &'static str =
        "ChaCha20Rng (seed_from_u64, one stream per 65536-sample chunk)";
}

/// Draws `samples` values of `Σ Z_i^d`. Chunk `k` uses stream `k` of a
/// ChaCha20 generator seeded from `seed`, so output is independent of the
/// thread count.
pub fn mc_sample(model: &PowerSumModel, cfg: &McConfig) -> Result<Vec<f64>> {
    if cfg.samples == 0 {
        return Err(Error::EmptySample);
    }
    let (d, n) = (model.d() as i32, model.n());
    let chunks = cfg.samples.div_ceil(McConfig::CHUNK);
    let parts: Vec<Vec<f64>> = (0..chunks)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha20Rng::seed_from_u64(cfg.seed);
            rng.set_stream(k as u64);
            let len = McConfig::CHUNK.min(cfg.samples - k * McConfig::CHUNK);
            (0..len)
                .map(|_| {
                    (0..n)
                        .map(|_| {
                            let z: f64 = StandardNormal.sample(&mut rng);
                            z.powi(d)
                        })
                        .sum()
                })
                .collect()
        })
        .collect();
    Ok(parts.concat())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KsReport {
    pub statistic: f64,
    pub samples: usize,
    /// Asymptotic critical value at the 1% level, `1.628 / √N`.
    pub threshold: f64,
    pub passed: bool,
}

/// One-sample Kolmogorov-Smirnov statistic against a model distribution
/// function.
pub fn ks_compare<F>(samples: &[f64], cdf: F) -> Result<KsReport>
where
    F: Fn(f64) -> f64 + Sync,
{
    if samples.is_empty() {
        return Err(Error::EmptySample);
    }
    let mut sorted = samples.to_vec();
    sorted.par_sort_unstable_by(|a, b| a.total_cmp(b));
    let n = sorted.len() as f64;
    let mut values = Vec::with_capacity(sorted.len());
    sorted
        .par_iter()
        .map(|&x| cdf(x))
        .collect_into_vec(&mut values);
    for (&x, &f) in sorted.iter().zip(&values) {
        if !(0.0..=1.0).contains(&f) {
            return Err(Error::InvalidCdf { x, value: f });
        }
    }
    let statistic = values
        .iter()
        .enumerate()
        .map(|(i, &f)| (f - i as f64 / n).max((i + 1) as f64 / n - f))
        .fold(0.0, f64::max);
    let threshold = 1.628 / n.sqrt();
    Ok(KsReport {
        statistic,
        samples: sorted.len(),
        threshold,
        passed: statistic <= threshold,
    })
}

/// Fraction of `sorted` strictly below `c`.
pub fn ecdf(sorted: &[f64], c: f64) -> f64 {
    sorted.partition_point(|&x| x < c) as f64 / sorted.len() as f64
}
