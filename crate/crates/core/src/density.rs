//! Rotated density integral and the density / distribution function of the
//! powered sum.
//!
//! `ψ(z; θ, θ', φ) = ∫_{γ_φ} e^{-iwz} (φ_θ(w) − φ_{θ'}(w))^n dw`. For real
//! `x ≠ 0` the density is `(ψ(x; T₁) − ψ(x; T₂)) / 2π` for two contour
//! triples fixed by the parity of `d` and the sign of `x`; each triple turns
//! the rays so that `|e^{-iwx}|` decays like `e^{-|x| s sin(εd)}`.
//!
//! The distribution function is integrated in the variable `u` with
//! `x = sign(u)|u|^d`, where `f(x) dx = f(x(u)) d|u|^{d-1} du` is smooth on
//! each side of the origin.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::contour_cf::{PhiCache, PowerSumModel, BOUNDARY_TOL};
use crate::error::{Error, Result};
use crate::quadrature::{
    integrate_ray_sampled, integrate_segment_sampled, ComplexValue, QuadConfig, QuadResult, Ray,
    Sample,
};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContourTriple {
    pub theta: f64,
    pub theta_prime: f64,
    pub phi: f64,
}

impl ContourTriple {
    pub fn new(theta: f64, theta_prime: f64, phi: f64) -> Self {
        Self {
            theta,
            theta_prime,
            phi,
        }
    }
}

/// `Im(e^{i(φ+θd)}) ≥ 0` and `Im(e^{i(φ+θ'd)}) ≥ 0`.
pub fn admissible(triple: &ContourTriple, d: u32) -> bool {
    let df = f64::from(d);
    (triple.phi + triple.theta * df).sin() >= -BOUNDARY_TOL
        && (triple.phi + triple.theta_prime * df).sin() >= -BOUNDARY_TOL
}

/// Rotation angle `ε` of the density formulas, `0 < ε < π/(2d)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpsilonPolicy {
    epsilon: f64,
}

impl EpsilonPolicy {
    pub fn new(epsilon: f64, d: u32) -> Result<Self> {
        let limit = PI / (2.0 * f64::from(d));
        if !(epsilon > 0.0 && epsilon < limit) {
            return Err(Error::InvalidConfig(format!(
                "epsilon must lie in (0, pi/(2d)) = (0, {limit}), got {epsilon}"
            )));
        }
        Ok(Self { epsilon })
    }

    /// `π/(4d)`.
    pub fn default_for(d: u32) -> Self {
        Self {
            epsilon: PI / (4.0 * f64::from(d)),
        }
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Branch {
    OddPositive,
    OddNegative,
    EvenPositive,
    EvenNegative,
}

impl Branch {
    fn of(d: u32, x: f64) -> Self {
        match (d % 2 == 1, x > 0.0) {
            (true, true) => Self::OddPositive,
            (true, false) => Self::OddNegative,
            (false, true) => Self::EvenPositive,
            (false, false) => Self::EvenNegative,
        }
    }
}

/// Which parameterization of the density formula to evaluate.
///
/// `Accepted` is what [`DensityEngine::density`] uses. `Statement` and
/// `Proof` reproduce two published forms verbatim so they can be compared
/// against the oracles: `Statement` carries the same contour triples as
/// `Accepted` but no `1/2π` factor, while `Proof` keeps the factor but uses
/// triples that are inadmissible on three of the four branches.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FormulaVariant {
    Accepted,
    Statement,
    Proof,
}

impl FormulaVariant {
    /// The two triples `(T₁, T₂)` and the prefactor multiplying `ψ(x;T₁) − ψ(x;T₂)`.
    pub fn contours(&self, branch: Branch, eps: f64, d: u32) -> ([ContourTriple; 2], f64) {
        let t = ContourTriple::new;
        let ed = eps * f64::from(d);
        let paired = match (self, branch) {
            (Self::Accepted | Self::Statement, Branch::OddPositive) => {
                [t(eps, PI, -ed), t(-eps, PI, PI + ed)]
            }
            (Self::Accepted | Self::Statement, Branch::OddNegative) => {
                [t(0.0, PI - eps, ed), t(0.0, PI + eps, PI - ed)]
            }
            (Self::Accepted | Self::Statement, Branch::EvenPositive) => {
                [t(eps, PI + eps, -ed), t(-eps, PI - eps, PI + ed)]
            }
            (Self::Accepted | Self::Statement, Branch::EvenNegative) => {
                [t(0.0, PI, ed), t(0.0, PI, PI - ed)]
            }
            (Self::Proof, Branch::OddPositive) => [t(eps, PI, -ed), t(0.0, PI + eps, PI + ed)],
            (Self::Proof, Branch::OddNegative | Branch::EvenNegative) => {
                [t(-eps, PI, ed), t(0.0, PI - eps, PI - ed)]
            }
            (Self::Proof, Branch::EvenPositive) => {
                [t(eps, PI + eps, -ed), t(0.0, PI + eps, PI + ed)]
            }
        };
        let prefactor = match self {
            Self::Statement => 1.0,
            Self::Accepted | Self::Proof => 1.0 / (2.0 * PI),
        };
        (paired, prefactor)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityResult {
    pub x: f64,
    pub value: f64,
    /// Imaginary part of the evaluated formula; zero up to quadrature error.
    pub imag: f64,
    /// Quadrature error plus `|imag|`.
    pub error_estimate: f64,
    /// Quadrature error alone.
    pub quad_error: f64,
    pub converged: bool,
    pub branch: Branch,
    pub variant: FormulaVariant,
    pub contours_used: Vec<ContourTriple>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CdfValue {
    pub value: f64,
    pub error_estimate: f64,
    pub converged: bool,
}

fn powi(z: Complex64, n: u32) -> Complex64 {
    let mut acc = Complex64::new(1.0, 0.0);
    for _ in 0..n {
        acc *= z;
    }
    acc
}

/// Standard normal lower tail `Φ(−z)`.
fn normal_lower_tail(z: f64) -> f64 {
    0.5 * libm::erfc(z / std::f64::consts::SQRT_2)
}

/// Signed real `d`-th root.
pub fn signed_root(x: f64, d: u32) -> f64 {
    x.signum() * x.abs().powf(1.0 / f64::from(d))
}

/// `sign(u)|u|^d`.
pub fn signed_power(u: f64, d: u32) -> f64 {
    u.signum() * u.abs().powi(d as i32)
}

/// Evaluates `ψ`, densities and distribution functions for one model and
/// quadrature configuration, sharing a memo of `φ_θ` values across calls.
#[derive(Debug)]
pub struct DensityEngine {
    model: PowerSumModel,
    cfg: QuadConfig,
    cache: PhiCache,
}

/// Width in `u` of the pieces the distribution function is integrated over.
const CDF_PIECE: f64 = 0.5;

impl DensityEngine {
    pub fn new(model: PowerSumModel, cfg: QuadConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            model,
            cfg,
            cache: PhiCache::default(),
        })
    }

    pub fn model(&self) -> &PowerSumModel {
        &self.model
    }

    pub fn cfg(&self) -> &QuadConfig {
        &self.cfg
    }

    pub fn cache(&self) -> &PhiCache {
        &self.cache
    }

    /// `ψ(z; θ, θ', φ)` by nested quadrature.
    pub fn psi_rotated(&self, z: ComplexValue, triple: ContourTriple) -> Result<QuadResult> {
        let d = self.model.d();
        if !admissible(&triple, d) {
            return Err(Error::Inadmissible {
                theta: triple.theta,
                theta_prime: triple.theta_prime,
                phi: triple.phi,
                d,
            });
        }
        // z must lie in the closure of −e^{-iφ}H; on the boundary the decay
        // check below decides
        let side = (-z * Complex64::from_polar(1.0, triple.phi)).im;
        if side < -BOUNDARY_TOL * z.norm() {
            return Err(Error::OutsideDomain {
                re: z.re,
                im: z.im,
                phi: triple.phi,
            });
        }

        let inner = self.cfg.tightened(1e-3);
        let n = self.model.n();
        let mut inner_ok = true;
        let integrand = |w: Complex64| -> Result<Sample> {
            let a = self.cache.phi(w, triple.theta, d, &inner)?;
            let b = self.cache.phi(w, triple.theta_prime, d, &inner)?;
            inner_ok &= a.converged && b.converged;
            let diff = a.value - b.value;
            let power = powi(diff, n);
            let power_err = f64::from(n)
                * diff.norm().powi(n as i32 - 1)
                * (a.error_estimate + b.error_estimate);
            let kernel = (-Complex64::i() * w * z).exp();
            Ok(Sample {
                value: kernel * power,
                err: kernel.norm() * power_err,
            })
        };
        // |e^{-iwz}| = e^{-s·side}, so the first panel must resolve that
        // scale; powers of two keep the nodes, and the φ memo, shared
        let mut outer = self.cfg;
        if side * outer.initial_segment > 1.0 {
            outer.initial_segment *=
                0.5_f64.powi((side * outer.initial_segment).log2().ceil() as i32);
        }
        let mut r = integrate_ray_sampled(integrand, Ray::new(triple.phi)?, &outer, Some(5))?;
        r.converged &= inner_ok;
        Ok(r)
    }

    /// Defining function of the Fourier image of the characteristic
    /// function: `∫_{-∞}^0 e^{-izt} φ(t)^n dt` above the real axis and
    /// `−∫_0^∞ e^{-izt} φ(t)^n dt` below it. Equals
    /// `(1/i) ∫ f_X(x) / (x − z) dx`.
    pub fn defining_function(&self, z: ComplexValue) -> Result<QuadResult> {
        let phi = if z.im < 0.0 {
            0.0
        } else if z.im > 0.0 {
            PI
        } else {
            return Err(Error::OutsideDomain {
                re: z.re,
                im: z.im,
                phi: 0.0,
            });
        };
        let mut r = self.psi_rotated(z, ContourTriple::new(0.0, PI, phi))?;
        r.value = -r.value;
        Ok(r)
    }

    pub fn density(&self, x: f64, eps: EpsilonPolicy) -> Result<DensityResult> {
        self.density_variant(x, eps, FormulaVariant::Accepted)
    }

    pub fn density_variant(
        &self,
        x: f64,
        eps: EpsilonPolicy,
        variant: FormulaVariant,
    ) -> Result<DensityResult> {
        if x == 0.0 {
            return Err(Error::Origin);
        }
        if !x.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "density argument {x} is not finite"
            )));
        }
        let d = self.model.d();
        let branch = Branch::of(d, x);
        let ([first, second], prefactor) = variant.contours(branch, eps.epsilon(), d);
        let z = Complex64::new(x, 0.0);
        let (a, b) = rayon::join(
            || self.psi_rotated(z, first),
            || self.psi_rotated(z, second),
        );
        let (a, b) = (a?, b?);
        let value = (a.value - b.value) * prefactor;
        let quad_error = (a.error_estimate + b.error_estimate) * prefactor;
        Ok(DensityResult {
            x,
            value: value.re,
            imag: value.im,
            error_estimate: quad_error + value.im.abs(),
            quad_error,
            converged: a.converged && b.converged,
            branch,
            variant,
            contours_used: vec![first, second],
        })
    }

    /// Density of `U = sign(X)|X|^{1/d}`: `f_X(x(u)) · d |u|^{d-1}`.
    pub fn density_in_root(&self, u: f64, eps: EpsilonPolicy) -> Result<(Sample, bool)> {
        let d = self.model.d();
        if !self.model.is_odd() && u < 0.0 {
            return Ok((Sample::exact(Complex64::new(0.0, 0.0)), true));
        }
        let r = self.density(signed_power(u, d), eps)?;
        let jac = f64::from(d) * u.abs().powi(d as i32 - 1);
        let err = r.error_estimate * jac;
        // near the origin f_X is large and its relative target out of reach,
        // but the root-space value is what gets integrated
        Ok((
            Sample {
                value: Complex64::new(r.value * jac, 0.0),
                err,
            },
            r.converged || err <= self.cfg.abs_tol,
        ))
    }

    /// Root-space bound `U` with `P(X < −U^d) ≤ tol` (odd `d`) or
    /// `P(X > U^d) ≤ tol`.
    pub fn tail_root(&self, tol: f64) -> f64 {
        let n = f64::from(self.model.n());
        let sides = if self.model.is_odd() { 1.0 } else { 2.0 };
        // P(Σ X_i^d < −L) ≤ n P(X_1^d < −L/n)
        let (mut lo, mut hi) = (0.0_f64, 40.0_f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if n * sides * normal_lower_tail(mid) > tol {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        n.powf(1.0 / f64::from(self.model.d())) * hi
    }

    /// Bound on the mass outside the root interval `[-u, u]`.
    pub fn tail_mass(&self, u: f64) -> f64 {
        let n = f64::from(self.model.n());
        let z = u / n.powf(1.0 / f64::from(self.model.d()));
        let sides = if self.model.is_odd() { 1.0 } else { 2.0 };
        (n * sides * normal_lower_tail(z)).min(1.0)
    }

    fn integrate_root(&self, a: f64, b: f64, eps: EpsilonPolicy) -> Result<(f64, f64, bool)> {
        if !(a < b) {
            return Ok((0.0, 0.0, true));
        }
        let pieces = ((b - a) / CDF_PIECE).ceil().max(1.0) as usize;
        let h = (b - a) / pieces as f64;
        let parts: Vec<Result<(f64, f64, bool)>> = (0..pieces)
            .into_par_iter()
            .map(|k| {
                let lo = a + h * k as f64;
                let hi = if k + 1 == pieces {
                    b
                } else {
                    a + h * (k + 1) as f64
                };
                let mut ok = true;
                let mut worst = 0.0_f64;
                let r = integrate_segment_sampled(
                    |u| {
                        let (s, c) = self.density_in_root(u.re, eps)?;
                        ok &= c;
                        worst = worst.max(s.err);
                        Ok(Sample::exact(s.value))
                    },
                    lo,
                    hi,
                    Complex64::new(0.0, 0.0),
                    Complex64::new(1.0, 0.0),
                    &self.cfg,
                )?;
                Ok((
                    r.value.re,
                    r.error_estimate + worst * (hi - lo),
                    r.converged && ok,
                ))
            })
            .collect();
        let mut total = (0.0, 0.0, true);
        for p in parts {
            let (v, e, c) = p?;
            total.0 += v;
            total.1 += e;
            total.2 &= c;
        }
        Ok(total)
    }

    /// `F(c) = P(X < c)`.
    pub fn cdf(&self, c: f64, eps: EpsilonPolicy) -> Result<CdfValue> {
        if !c.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "cdf argument {c} is not finite"
            )));
        }
        let d = self.model.d();
        let bound = self.tail_root(self.cfg.abs_tol * 1e-3);
        let tail = self.tail_mass(bound);
        let uc = signed_root(c, d);
        let (value, err, converged) = if self.model.is_odd() {
            if uc <= -bound {
                (0.0, tail, true)
            } else {
                let upper = uc.min(bound);
                let (v1, e1, c1) = self.integrate_root(-bound, upper.min(0.0), eps)?;
                let (v2, e2, c2) = self.integrate_root(0.0, upper, eps)?;
                (v1 + v2, e1 + e2 + 2.0 * tail, c1 && c2)
            }
        } else if c <= 0.0 {
            (0.0, 0.0, true)
        } else {
            let (v, e, ok) = self.integrate_root(0.0, uc.min(bound), eps)?;
            (v, e + tail, ok)
        };
        Ok(CdfValue {
            value: value.clamp(0.0, 1.0),
            error_estimate: err,
            converged,
        })
    }

    /// Total mass of the density over the root interval covering all but
    /// `abs_tol` of the distribution, and a bound on the mass left out.
    pub fn total_mass(&self, eps: EpsilonPolicy) -> Result<(f64, f64)> {
        let bound = self.tail_root(self.cfg.abs_tol * 1e-3);
        let lower = if self.model.is_odd() { -bound } else { 0.0 };
        let (v1, e1, _) = self.integrate_root(lower, 0.0, eps)?;
        let (v2, e2, _) = self.integrate_root(0.0, bound, eps)?;
        Ok((v1 + v2, e1 + e2 + self.tail_mass(bound)))
    }

    /// Piecewise Chebyshev model of `F` for repeated evaluation.
    pub fn cdf_table(&self, eps: EpsilonPolicy) -> Result<CdfTable> {
        CdfTable::build(self, eps)
    }
}

/// Nodes per panel of a [`CdfTable`].
const CHEB_NODES: usize = 16;

/// Halvings of the panels next to the origin.
const GRADED_LEVELS: usize = 10;

#[derive(Clone, Debug)]
struct ChebPanel {
    lo: f64,
    hi: f64,
    /// Chebyshev coefficients of the antiderivative on `[-1, 1]`, zero at −1.
    antideriv: Vec<f64>,
}

impl ChebPanel {
    fn fit(lo: f64, hi: f64, values: &[f64]) -> Self {
        let n = values.len();
        let mut coef = vec![0.0; n];
        for (j, cj) in coef.iter_mut().enumerate() {
            let mut s = 0.0;
            for (k, v) in values.iter().enumerate() {
                s += v * (PI * j as f64 * (k as f64 + 0.5) / n as f64).cos();
            }
            *cj = 2.0 * s / n as f64;
        }
        let at = |j: usize| if j < n { coef[j] } else { 0.0 };
        let mut anti = vec![0.0; n + 1];
        for (k, a) in anti.iter_mut().enumerate().skip(1) {
            *a = (at(k - 1) - at(k + 1)) / (2.0 * k as f64);
        }
        let mut at_minus_one = 0.0;
        for (k, a) in anti.iter().enumerate().skip(1) {
            at_minus_one += if k % 2 == 0 { *a } else { -*a };
        }
        anti[0] = -at_minus_one;
        let half = 0.5 * (hi - lo);
        for a in &mut anti {
            *a *= half;
        }
        Self {
            lo,
            hi,
            antideriv: anti,
        }
    }

    /// `∫_lo^u g`.
    fn partial(&self, u: f64) -> f64 {
        let y = ((2.0 * u - self.lo - self.hi) / (self.hi - self.lo)).clamp(-1.0, 1.0);
        // Clenshaw
        let (mut b1, mut b2) = (0.0, 0.0);
        for &a in self.antideriv.iter().skip(1).rev() {
            let b0 = a + 2.0 * y * b1 - b2;
            b2 = b1;
            b1 = b0;
        }
        self.antideriv[0] + y * b1 - b2
    }
}

/// Distribution function tabulated as integrated Chebyshev interpolants of
/// the root-space density on panels of width 0.5, refined geometrically
/// towards the origin.
#[derive(Clone, Debug)]
pub struct CdfTable {
    d: u32,
    odd: bool,
    lower: f64,
    upper: f64,
    panels: Vec<ChebPanel>,
    cumulative: Vec<f64>,
    /// Mass bound outside `[lower, upper]` plus interpolation and density
    /// error bounds.
    pub error_estimate: f64,
    pub converged: bool,
}

impl CdfTable {
    fn build(engine: &DensityEngine, eps: EpsilonPolicy) -> Result<Self> {
        let model = engine.model();
        let odd = model.is_odd();
        let bound = engine.tail_root(engine.cfg().abs_tol * 1e-3);
        let count_side = (bound / CDF_PIECE).ceil() as usize;
        let upper = count_side as f64 * CDF_PIECE;
        let lower = if odd { -upper } else { 0.0 };

        // panel edges on [0, upper], graded geometrically into the origin
        // where the root-space density may carry |u|^k log|u| terms
        let mut right = vec![0.0];
        // stop grading before the innermost node maps below |x| = 1e-12
        let innermost = 1e-12_f64.powf(1.0 / f64::from(model.d()))
            / (1.0 - (PI / (2.0 * CHEB_NODES as f64)).cos());
        let levels = ((CDF_PIECE / innermost).log2().floor().max(0.0) as usize).min(GRADED_LEVELS);
        for k in (1..=levels).rev() {
            right.push(CDF_PIECE * 0.5_f64.powi(k as i32));
        }
        for p in 1..=count_side {
            right.push(p as f64 * CDF_PIECE);
        }
        let mut edges: Vec<f64> = if odd {
            right[1..].iter().rev().map(|e| -e).collect()
        } else {
            Vec::new()
        };
        edges.extend(right);

        let nodes: Vec<f64> = (0..CHEB_NODES)
            .map(|k| (PI * (k as f64 + 0.5) / CHEB_NODES as f64).cos())
            .collect();
        let points: Vec<f64> = edges
            .windows(2)
            .flat_map(|w| {
                let (mid, half) = (0.5 * (w[0] + w[1]), 0.5 * (w[1] - w[0]));
                nodes.iter().map(move |y| mid + half * y)
            })
            .collect();
        let evaluated: Vec<Result<(Sample, bool)>> = points
            .par_iter()
            .map(|&u| engine.density_in_root(u, eps))
            .collect();

        let total_panels = edges.len() - 1;
        let mut panels = Vec::with_capacity(total_panels);
        let mut cumulative = Vec::with_capacity(total_panels + 1);
        let mut running = 0.0;
        let mut err = engine.tail_mass(upper) * if odd { 2.0 } else { 1.0 };
        let mut converged = true;
        for (p, w) in edges.windows(2).enumerate() {
            let mut values = Vec::with_capacity(CHEB_NODES);
            let mut worst = 0.0_f64;
            for k in 0..CHEB_NODES {
                let (s, ok) = evaluated[p * CHEB_NODES + k].clone()?;
                values.push(s.value.re);
                worst = worst.max(s.err);
                converged &= ok;
            }
            let panel = ChebPanel::fit(w[0], w[1], &values);
            let n = panel.antideriv.len();
            err +=
                worst * (w[1] - w[0]) + panel.antideriv[n - 1].abs() + panel.antideriv[n - 2].abs();
            cumulative.push(running);
            running += panel.partial(w[1]);
            panels.push(panel);
        }
        cumulative.push(running);
        Ok(Self {
            d: model.d(),
            odd,
            lower,
            upper,
            panels,
            cumulative,
            error_estimate: err,
            converged,
        })
    }

    /// Total tabulated mass.
    pub fn mass(&self) -> f64 {
        *self.cumulative.last().unwrap_or(&0.0)
    }

    /// `F(c)`, clamped to `[0, 1]`.
    pub fn eval(&self, c: f64) -> f64 {
        if !self.odd && c <= 0.0 {
            return 0.0;
        }
        let u = signed_root(c, self.d);
        if u <= self.lower {
            return 0.0;
        }
        if u >= self.upper {
            return self.mass().clamp(0.0, 1.0);
        }
        let idx = self
            .panels
            .partition_point(|p| p.hi <= u)
            .min(self.panels.len() - 1);
        (self.cumulative[idx] + self.panels[idx].partial(u)).clamp(0.0, 1.0)
    }
}
