//! Rotated characteristic function of a single powered Gaussian.
//!
//! `φ_θ(w) = (2π)^{-1/2} ∫_{γ_θ} exp(i w z^d − z²/2) dz` along the ray
//! `γ_θ(t) = t e^{iθ}`. The integral converges on the open half-plane
//! `Im(w e^{iθd}) > 0`, and on its closure when `cos 2θ > 0`. Two angles
//! closer than `π/d` give the same function wherever both converge, which is
//! what [`phi_continued`] exploits to pick a well-conditioned ray.

use std::f64::consts::PI;

use dashmap::DashMap;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{integrate_ray, ComplexValue, QuadConfig, QuadResult, Ray};

/// Relative slack under which `Im(w e^{iθd})` and similar quantities count
/// as lying on a boundary rather than on either side of it.
pub const BOUNDARY_TOL: f64 = 1e-12;

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_677_939_946_059_934_381_87;

/// The pair `(d, n)`: `X = Σ_{i=1}^n X_i^d` with `X_i` standard normal.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PowerSumModel {
    d: u32,
    n: u32,
}

impl PowerSumModel {
    pub fn new(d: u32, n: u32) -> Result<Self> {
        if d < 3 {
            return Err(Error::InvalidModel("d must be at least 3".into()));
        }
        if n < 1 {
            return Err(Error::InvalidModel("n must be at least 1".into()));
        }
        Ok(Self { d, n })
    }

    pub fn d(&self) -> u32 {
        self.d
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn is_odd(&self) -> bool {
        self.d % 2 == 1
    }
}

/// Membership of `w` in the convergence region `e^{-iθd} H` of `φ_θ`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HalfPlaneQuery {
    pub w: ComplexValue,
    pub theta: f64,
    pub d: u32,
}

impl HalfPlaneQuery {
    /// `Im(w e^{iθd})` scaled by `|w|`; zero when `w = 0`.
    fn normalized_im(&self) -> f64 {
        let r = self.w.norm();
        if r == 0.0 {
            return 0.0;
        }
        (self.w * Complex64::from_polar(1.0, self.theta * f64::from(self.d))).im / r
    }

    pub fn is_open(&self) -> bool {
        self.normalized_im() > BOUNDARY_TOL
    }

    pub fn is_closed(&self) -> bool {
        (2.0 * self.theta).cos() > 0.0 && self.normalized_im() >= -BOUNDARY_TOL
    }

    fn require(&self) -> Result<()> {
        if self.is_open() || self.is_closed() {
            return Ok(());
        }
        let predicate = if self.normalized_im() < -BOUNDARY_TOL {
            "Im(w e^{i theta d}) >= 0"
        } else {
            "cos 2 theta > 0"
        };
        Err(Error::OutsideRegion {
            predicate,
            re: self.w.re,
            im: self.w.im,
            theta: self.theta,
        })
    }
}

pub fn converges_open(w: ComplexValue, theta: f64, d: u32) -> bool {
    HalfPlaneQuery { w, theta, d }.is_open()
}

pub fn converges_closed(w: ComplexValue, theta: f64, d: u32) -> bool {
    HalfPlaneQuery { w, theta, d }.is_closed()
}

/// Decay profile of `exp(i w z^d − z²/2)` along the ray at `alpha`.
///
/// Returns `(reach, cost)`: the parameter where the log-magnitude has dropped
/// by 40, and a penalty combining the phase swept before that point with any
/// intermediate growth.
fn ray_profile(w: Complex64, alpha: f64, d: u32) -> (f64, f64) {
    let df = f64::from(d);
    let wr = w * Complex64::from_polar(1.0, alpha * df);
    let a = wr.im;
    let b = (2.0 * alpha).cos();
    let sb = (2.0 * alpha).sin().abs();
    let osc = wr.re.abs();

    let (reach, growth) = if b > 0.0 {
        let tb = (80.0 / b).sqrt();
        let ta = if a > 0.0 {
            (40.0 / a).powf(1.0 / df)
        } else {
            f64::INFINITY
        };
        (ta.min(tb), 0.0)
    } else if a > 0.0 {
        let t_peak = (-b / (a * df)).powf(1.0 / (df - 2.0));
        let growth = -b * t_peak * t_peak / 2.0 - a * t_peak.powf(df);
        let mut t = (40.0 / a).powf(1.0 / df);
        for _ in 0..4 {
            t = ((40.0 - b * t * t / 2.0) / a).powf(1.0 / df);
        }
        (t, growth.max(0.0))
    } else {
        return (f64::INFINITY, f64::INFINITY);
    };
    let cost = osc * reach.powf(df) + sb * reach * reach / 2.0 + 50.0 * growth;
    (reach, cost)
}

fn integrate_along(w: Complex64, alpha: f64, d: u32, cfg: &QuadConfig) -> Result<QuadResult> {
    let (reach, _) = ray_profile(w, alpha, d);
    let local = QuadConfig {
        initial_segment: if reach.is_finite() {
            reach / 4.0
        } else {
            cfg.initial_segment
        },
        ..*cfg
    };
    let i = Complex64::i();
    let di = d as i32;
    let mut r = integrate_ray(
        |z| (i * w * z.powi(di) - z * z / 2.0).exp(),
        Ray::new(alpha)?,
        &local,
    )?;
    r.value *= INV_SQRT_2PI;
    r.error_estimate *= INV_SQRT_2PI;
    Ok(r)
}

/// `φ_θ(w)` integrated literally along `γ_θ`.
pub fn phi_theta(w: ComplexValue, theta: f64, d: u32, cfg: &QuadConfig) -> Result<QuadResult> {
    HalfPlaneQuery { w, theta, d }.require()?;
    integrate_along(w, theta, d, cfg)
}

/// Angle of the ray actually used by [`phi_continued`].
pub fn continuation_angle(w: ComplexValue, theta: f64, d: u32) -> Result<f64> {
    let q = HalfPlaneQuery { w, theta, d };
    q.require()?;
    if w.norm() == 0.0 {
        return Ok(theta);
    }
    let df = f64::from(d);
    let beta = w.arg();
    // branch k with β + θd in [2πk, 2πk + π]
    let k = ((beta + theta * df - PI / 2.0) / (2.0 * PI)).round();
    let lo = ((2.0 * PI * k - beta) / df).max(theta - PI / df);
    let hi = ((2.0 * PI * k + PI - beta) / df).min(theta + PI / df);

    const CANDIDATES: usize = 16;
    let mut best = (theta, f64::INFINITY);
    if q.is_open() {
        best = (theta, ray_profile(w, theta, d).1);
    }
    for j in 0..CANDIDATES {
        let alpha = lo + (hi - lo) * (j as f64 + 0.5) / CANDIDATES as f64;
        let cost = ray_profile(w, alpha, d).1;
        if cost < best.1 {
            best = (alpha, cost);
        }
    }
    Ok(best.0)
}

/// `φ_θ(w)` for `w` in the closed region of `θ`, evaluated along the
/// cheapest equivalent ray within `π/d` of `θ` on which `w` lies in the open
/// region.
pub fn phi_continued(w: ComplexValue, theta: f64, d: u32, cfg: &QuadConfig) -> Result<QuadResult> {
    let alpha = continuation_angle(w, theta, d)?;
    integrate_along(w, alpha, d, cfg)
}

type CacheKey = (u64, u64, u64, u32, u64);

/// Write-once memo of [`phi_continued`] values shared across threads.
///
/// Entries are keyed on the exact bit patterns of `(θ, w, d, cfg)`, so a hit
/// returns precisely what a fresh evaluation would.
#[derive(Debug)]
pub struct PhiCache {
    map: DashMap<CacheKey, QuadResult>,
    capacity: usize,
}

impl Default for PhiCache {
    fn default() -> Self {
        Self::with_capacity(4_000_000)
    }
}

impl PhiCache {
    pub fn with_capacity(capacity: usize) -> Self {
        Self {
            map: DashMap::new(),
            capacity,
        }
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn phi(&self, w: ComplexValue, theta: f64, d: u32, cfg: &QuadConfig) -> Result<QuadResult> {
        if !cfg.memoize {
            return phi_continued(w, theta, d, cfg);
        }
        let key = (
            theta.to_bits(),
            w.re.to_bits(),
            w.im.to_bits(),
            d,
            cfg.fingerprint(),
        );
        if let Some(hit) = self.map.get(&key) {
            return Ok(*hit);
        }
        let value = phi_continued(w, theta, d, cfg)?;
        if self.map.len() < self.capacity {
            self.map.entry(key).or_insert(value);
        }
        Ok(value)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CfValue {
    pub value: ComplexValue,
    pub error_estimate: f64,
    pub converged: bool,
}

/// Characteristic function `E[exp(i t X_1^d)] = φ_0(t) − φ_π(t)`.
pub fn cf_real(t: f64, model: &PowerSumModel, cfg: &QuadConfig) -> Result<CfValue> {
    let w = Complex64::new(t, 0.0);
    let upper = phi_continued(w, 0.0, model.d(), cfg)?;
    let lower = phi_continued(w, PI, model.d(), cfg)?;
    Ok(CfValue {
        value: upper.value - lower.value,
        error_estimate: upper.error_estimate + lower.error_estimate,
        converged: upper.converged && lower.converged,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContinuationReport {
    pub phi_first: ComplexValue,
    pub phi_second: ComplexValue,
    pub difference: f64,
    pub combined_error: f64,
}

/// `|φ_{θ1}(w) − φ_{θ2}(w)|`, both integrated literally along their own rays.
pub fn continuation_check(
    w: ComplexValue,
    theta1: f64,
    theta2: f64,
    model: &PowerSumModel,
    cfg: &QuadConfig,
) -> Result<ContinuationReport> {
    let limit = PI / f64::from(model.d());
    let gap = (theta1 - theta2).abs();
    if !(gap < limit) {
        return Err(Error::ContinuationViolated { gap, limit });
    }
    let first = phi_theta(w, theta1, model.d(), cfg)?;
    let second = phi_theta(w, theta2, model.d(), cfg)?;
    Ok(ContinuationReport {
        phi_first: first.value,
        phi_second: second.value,
        difference: (first.value - second.value).norm(),
        combined_error: first.error_estimate + second.error_estimate,
    })
}
