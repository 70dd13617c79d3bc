//! Adaptive Gauss-Kronrod integration of complex-valued integrands along
//! semi-infinite rays `t * e^{i angle}` and along finite straight segments.
//!
//! Rays are covered by geometrically growing panels. Panels are appended
//! until the newest one carries a negligible share of the running total,
//! after which the worst pieces are bisected until the error target holds.
//! Every piece is integrated with the 15-point Kronrod rule; the embedded
//! 7-point Gauss rule supplies the error estimate.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type ComplexValue = Complex64;

#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];

#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// Semi-infinite path `t * e^{i angle}`, `t > 0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ray {
    angle: f64,
}

impl Ray {
    /// Builds a ray, reducing the angle to its representative in `(-pi, pi]`.
    pub fn new(angle: f64) -> Result<Self> {
        if !angle.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "ray angle {angle} is not finite"
            )));
        }
        let mut a = angle.rem_euclid(2.0 * PI);
        if a > PI {
            a -= 2.0 * PI;
        }
        Ok(Self { angle: a })
    }

    pub fn angle(&self) -> f64 {
        self.angle
    }

    pub fn direction(&self) -> Complex64 {
        Complex64::from_polar(1.0, self.angle)
    }

    pub fn point(&self, t: f64) -> Complex64 {
        self.direction() * t
    }
}

/// Tolerances and budgets shared by every quadrature in the crate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadConfig {
    pub abs_tol: f64,
    pub rel_tol: f64,
    /// Upper bound on geometric panels laid along a ray.
    pub max_panels: usize,
    /// Length of the first panel along a ray.
    pub initial_segment: f64,
    pub growth_factor: f64,
    /// A ray is truncated once the newest panel contributes less than this
    /// fraction of the running total.
    pub tail_decay_threshold: f64,
    /// Bisection budget per integral.
    pub max_subdivisions: usize,
    /// Memoize rotated characteristic function values.
    pub memoize: bool,
}

impl Default for QuadConfig {
    fn default() -> Self {
        Self {
            abs_tol: 1e-10,
            rel_tol: 1e-8,
            max_panels: 200,
            initial_segment: 1.0,
            growth_factor: 1.5,
            tail_decay_threshold: 1e-3 * 1e-8,
            max_subdivisions: 2000,
            memoize: true,
        }
    }
}

impl QuadConfig {
    /// Config keyed off a single relative tolerance: `abs_tol = tol * 1e-2`.
    pub fn with_tol(tol: f64) -> Self {
        Self {
            abs_tol: tol * 1e-2,
            rel_tol: tol,
            // relative contributions below machine precision cannot be resolved
            tail_decay_threshold: (1e-3 * tol).max(f64::EPSILON),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidConfig(msg.to_string()));
        if !(self.abs_tol > 0.0) || !(self.rel_tol > 0.0) {
            return bad("tolerances must be positive");
        }
        if !(self.initial_segment > 0.0) || !self.initial_segment.is_finite() {
            return bad("initial_segment must be positive and finite");
        }
        if !(self.growth_factor > 1.0) || !self.growth_factor.is_finite() {
            return bad("growth_factor must exceed 1");
        }
        if !(self.tail_decay_threshold > 0.0) {
            return bad("tail_decay_threshold must be positive");
        }
        if self.max_panels == 0 {
            return bad("max_panels must be at least 1");
        }
        Ok(())
    }

    /// Same budgets with tolerances scaled by `factor`; the relative
    /// tolerance stops at machine epsilon.
    pub fn tightened(&self, factor: f64) -> Self {
        Self {
            abs_tol: self.abs_tol * factor,
            rel_tol: (self.rel_tol * factor).max(f64::EPSILON),
            ..*self
        }
    }

    /// Stable hash of every numeric field, used as part of memo keys.
    pub fn fingerprint(&self) -> u64 {
        let words = [
            self.abs_tol.to_bits(),
            self.rel_tol.to_bits(),
            self.max_panels as u64,
            self.initial_segment.to_bits(),
            self.growth_factor.to_bits(),
            self.tail_decay_threshold.to_bits(),
            self.max_subdivisions as u64,
        ];
        // FNV-1a over the little-endian bytes
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for w in words {
            for b in w.to_le_bytes() {
                h ^= u64::from(b);
                h = h.wrapping_mul(0x0100_0000_01b3);
            }
        }
        h
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadResult {
    pub value: ComplexValue,
    pub error_estimate: f64,
    pub panels_used: usize,
    pub converged: bool,
}

/// An integrand value together with an absolute error bound on it, for
/// integrands that are themselves computed by quadrature.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Sample {
    pub value: Complex64,
    pub err: f64,
}

impl Sample {
    pub fn exact(value: Complex64) -> Self {
        Self { value, err: 0.0 }
    }
}

#[derive(Clone, Copy, Debug)]
struct Piece {
    a: f64,
    b: f64,
    value: Complex64,
    rule_err: f64,
    abs: f64,
    inner_err: f64,
    /// Integrand magnitude at the rightmost node.
    edge_mag: f64,
}

fn rescale_error(err: f64, res_abs: f64, res_asc: f64) -> f64 {
    let mut e = err;
    if res_asc != 0.0 && e != 0.0 {
        let scale = (200.0 * e / res_asc).powf(1.5);
        e = if scale < 1.0 {
            res_asc * scale
        } else {
            res_asc
        };
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        e = e.max(50.0 * f64::EPSILON * res_abs);
    }
    e
}

fn gk15<G>(g: &mut G, a: f64, b: f64) -> Result<Piece>
where
    G: FnMut(f64) -> Result<Sample>,
{
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut eval = |t: f64| -> Result<Sample> {
        let s = g(t)?;
        if !s.value.re.is_finite() || !s.value.im.is_finite() || !s.err.is_finite() {
            return Err(Error::NonFinite { t });
        }
        Ok(s)
    };

    let fc = eval(center)?;
    let mut res_k = fc.value * WGK[7];
    let mut res_g = fc.value * WG[3];
    let mut res_abs = fc.value.norm() * WGK[7];
    let mut inner = fc.err * WGK[7];
    let mut values = [Complex64::new(0.0, 0.0); 14];
    let mut edge_mag = 0.0;

    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = eval(center - dx)?;
        let f2 = eval(center + dx)?;
        if j == 0 {
            edge_mag = f2.value.norm();
        }
        values[2 * j] = f1.value;
        values[2 * j + 1] = f2.value;
        res_k += (f1.value + f2.value) * WGK[j];
        res_abs += (f1.value.norm() + f2.value.norm()) * WGK[j];
        inner += (f1.err + f2.err) * WGK[j];
        if j % 2 == 1 {
            res_g += (f1.value + f2.value) * WG[j / 2];
        }
    }

    let mean = res_k * 0.5;
    let mut res_asc = WGK[7] * (fc.value - mean).norm();
    for j in 0..7 {
        res_asc += WGK[j] * ((values[2 * j] - mean).norm() + (values[2 * j + 1] - mean).norm());
    }

    let width = half.abs();
    let err = rescale_error(
        ((res_k - res_g) * half).norm(),
        res_abs * width,
        res_asc * width,
    );
    Ok(Piece {
        a,
        b,
        value: res_k * half,
        rule_err: err,
        abs: res_abs * width,
        inner_err: inner * width,
        edge_mag,
    })
}

#[derive(PartialEq)]
struct HeapEntry {
    err: f64,
    idx: usize,
}

impl Eq for HeapEntry {}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err
            .total_cmp(&other.err)
            .then_with(|| other.idx.cmp(&self.idx))
    }
}

/// Bisects the worst pieces until the combined error meets the target or
/// the budget runs out. `fixed_err` is error that bisection cannot reduce.
fn refine<G>(g: &mut G, pieces: &mut Vec<Piece>, cfg: &QuadConfig, fixed_err: f64) -> Result<()>
where
    G: FnMut(f64) -> Result<Sample>,
{
    let mut heap: BinaryHeap<HeapEntry> = pieces
        .iter()
        .enumerate()
        .map(|(idx, p)| HeapEntry {
            err: p.rule_err,
            idx,
        })
        .collect();
    let mut total: Complex64 = pieces.iter().map(|p| p.value).sum();
    let mut rule: f64 = pieces.iter().map(|p| p.rule_err).sum();
    let mut splits = 0;

    loop {
        let target = cfg.abs_tol.max(cfg.rel_tol * total.norm());
        if rule + fixed_err <= target || splits >= cfg.max_subdivisions {
            break;
        }
        let Some(HeapEntry { idx, .. }) = heap.pop() else {
            break;
        };
        let p = pieces[idx];
        let mid = 0.5 * (p.a + p.b);
        if !(mid > p.a && mid < p.b) || (p.b - p.a) <= 1e-14 * (p.a.abs() + p.b.abs()) {
            // too narrow to split; leave it out of the heap
            continue;
        }
        let left = gk15(g, p.a, mid)?;
        let right = gk15(g, mid, p.b)?;
        total += left.value + right.value - p.value;
        rule += left.rule_err + right.rule_err - p.rule_err;
        pieces[idx] = left;
        pieces.push(right);
        heap.push(HeapEntry {
            err: left.rule_err,
            idx,
        });
        heap.push(HeapEntry {
            err: right.rule_err,
            idx: pieces.len() - 1,
        });
        splits += 1;
    }
    Ok(())
}

fn summarize(
    pieces: &[Piece],
    cfg: &QuadConfig,
    tail_err: f64,
    tail_ok: bool,
    panels: usize,
) -> QuadResult {
    let mut ordered: Vec<&Piece> = pieces.iter().collect();
    ordered.sort_by(|x, y| x.a.total_cmp(&y.a));
    let value: Complex64 = ordered.iter().map(|p| p.value).sum();
    let rule: f64 = ordered.iter().map(|p| p.rule_err).sum();
    let inner: f64 = ordered.iter().map(|p| p.inner_err).sum();
    let error_estimate = rule + inner + tail_err;
    let target = cfg.abs_tol.max(cfg.rel_tol * value.norm());
    QuadResult {
        value,
        error_estimate,
        panels_used: panels,
        converged: tail_ok && error_estimate <= target,
    }
}

/// `∫_0^∞ f(t e^{iθ}) e^{iθ} dt` for an integrand that decays along the ray.
pub fn integrate_ray<F>(f: F, ray: Ray, cfg: &QuadConfig) -> Result<QuadResult>
where
    F: Fn(Complex64) -> Complex64,
{
    integrate_ray_sampled(|z| Ok(Sample::exact(f(z))), ray, cfg, None)
}

/// Ray integration for integrands that carry their own error bound.
///
/// With `decay_window = Some(k)`, fails with [`Error::NoDecay`] once the
/// integrand magnitude at the panel ends has failed to decrease for `k`
/// panels in a row.
pub fn integrate_ray_sampled<F>(
    mut f: F,
    ray: Ray,
    cfg: &QuadConfig,
    decay_window: Option<usize>,
) -> Result<QuadResult>
where
    F: FnMut(Complex64) -> Result<Sample>,
{
    cfg.validate()?;
    let dir = ray.direction();
    let mut g = |t: f64| -> Result<Sample> {
        let s = f(dir * t)?;
        Ok(Sample {
            value: s.value * dir,
            err: s.err,
        })
    };

    let mut pieces = Vec::with_capacity(32);
    let mut total = Complex64::new(0.0, 0.0);
    let mut total_abs = 0.0;
    let mut start = 0.0;
    let mut len = cfg.initial_segment;
    let mut panels = 0;
    let mut tail_ok = false;
    let mut tail_err = 0.0;
    let mut last_mag = f64::INFINITY;
    let mut rising = 0;

    while panels < cfg.max_panels {
        let end = start + len;
        let p = gk15(&mut g, start, end)?;
        panels += 1;
        if let Some(window) = decay_window {
            if p.edge_mag > 0.0 && p.edge_mag >= last_mag {
                rising += 1;
                if rising >= window {
                    return Err(Error::NoDecay { panels: rising });
                }
            } else {
                rising = 0;
            }
            last_mag = p.edge_mag;
        }
        total += p.value;
        total_abs += p.abs;
        pieces.push(p);
        start = end;
        len *= cfg.growth_factor;

        if panels >= 3 && total_abs == 0.0 {
            tail_ok = true;
            break;
        }
        let floor = if panels >= 3 { 1e-3 * cfg.abs_tol } else { 0.0 };
        if panels >= 2 && p.abs <= (cfg.tail_decay_threshold * total.norm()).max(floor) {
            tail_ok = true;
            tail_err = p.abs;
            break;
        }
    }
    if !tail_ok {
        tail_err = pieces.last().map_or(0.0, |p| p.abs);
    }

    refine(&mut g, &mut pieces, cfg, tail_err)?;
    Ok(summarize(&pieces, cfg, tail_err, tail_ok, panels))
}

/// `∫_a^b f(shift + t·direction)·direction dt` by global adaptive bisection.
pub fn integrate_segment<F>(
    f: F,
    a: f64,
    b: f64,
    shift: Complex64,
    direction: Complex64,
    cfg: &QuadConfig,
) -> Result<QuadResult>
where
    F: Fn(Complex64) -> Complex64,
{
    integrate_segment_sampled(|z| Ok(Sample::exact(f(z))), a, b, shift, direction, cfg)
}

pub fn integrate_segment_sampled<F>(
    mut f: F,
    a: f64,
    b: f64,
    shift: Complex64,
    direction: Complex64,
    cfg: &QuadConfig,
) -> Result<QuadResult>
where
    F: FnMut(Complex64) -> Result<Sample>,
{
    cfg.validate()?;
    if !(a < b) || !a.is_finite() || !b.is_finite() {
        return Err(Error::InvalidConfig(format!(
            "segment requires finite a < b, got [{a}, {b}]"
        )));
    }
    let mut g = |t: f64| -> Result<Sample> {
        let s = f(shift + direction * t)?;
        Ok(Sample {
            value: s.value * direction,
            err: s.err * direction.norm(),
        })
    };
    let mut pieces = vec![gk15(&mut g, a, b)?];
    refine(&mut g, &mut pieces, cfg, 0.0)?;
    let n = pieces.len();
    Ok(summarize(&pieces, cfg, 0.0, true, n))
}
