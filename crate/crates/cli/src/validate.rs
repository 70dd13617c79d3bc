//! The `validate` report: named checks with a measured discrepancy, the
//! bound it is held to and a verdict, plus the comparison of the formula
//! variants against the oracles.

use std::f64::consts::PI;

use num_complex::Complex64;
use powersum_core::contour_cf::{continuation_check, HalfPlaneQuery};
use powersum_core::density::admissible;
use powersum_core::oracles::{
    cauchy_transform_n1, conv_density_n2, exact_cdf_n1, exact_density_n1, ks_compare, mc_sample,
    McConfig,
};
use powersum_core::{ContourTriple, DensityEngine, Error, FormulaVariant};
use rayon::prelude::*;
use serde::Serialize;

use crate::args::Level;
use crate::commands::Setup;
use crate::output::{Cell, Table};
use crate::CliError;

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub point: String,
    pub measured: f64,
    pub bound: f64,
    pub passed: bool,
}

impl Check {
    fn new(name: &str, point: String, measured: f64, bound: f64) -> Self {
        Self {
            name: name.to_string(),
            point,
            measured,
            bound,
            passed: measured <= bound,
        }
    }

    /// A check that some call was refused with the expected error.
    fn rejection(name: &str, point: String, rejected: bool) -> Self {
        Self {
            name: name.to_string(),
            point,
            measured: if rejected { 0.0 } else { 1.0 },
            bound: 0.0,
            passed: rejected,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct VariantValue {
    pub value: Option<f64>,
    pub error_estimate: Option<f64>,
    pub oracle_deviation: Option<f64>,
    /// Set when the variant cannot be evaluated at this point.
    pub error: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Probe {
    pub x: f64,
    pub oracle: Option<f64>,
    pub accepted: VariantValue,
    pub statement: VariantValue,
    pub proof: VariantValue,
    pub statement_over_accepted: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Adjudication {
    pub d: u32,
    pub n: u32,
    pub probes: Vec<Probe>,
    pub relationship: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub checks: Vec<Check>,
    pub adjudication: Adjudication,
}

impl Report {
    pub fn passes(&self) -> Vec<bool> {
        self.checks.iter().map(|c| c.passed).collect()
    }

    pub fn table(&self) -> Table {
        let mut t = Table::new(&["name", "point", "measured", "bound", "passed"]);
        for c in &self.checks {
            t.push(vec![
                Cell::Text(c.name.clone()),
                Cell::Text(c.point.clone()),
                Cell::Num(c.measured),
                Cell::Num(c.bound),
                Cell::Bool(c.passed),
            ]);
        }
        t
    }
}

const ORACLE_POINTS: [f64; 10] = [-4.0, -2.0, -1.0, -0.5, -0.25, 0.25, 0.5, 1.0, 2.0, 4.0];
const CONV_POINTS: [f64; 6] = [-2.0, -1.0, -0.5, 0.5, 1.0, 2.0];
const PROBES: [f64; 3] = [0.5, 1.0, 2.0];
const INVERSION_POINTS: [(f64, f64); 4] = [(0.0, 2.0), (0.0, -2.0), (1.0, 1.0), (-1.0, -2.0)];

fn fmt_z(z: Complex64) -> String {
    format!("{}{:+}i", z.re, z.im)
}

/// Reference density for the model, where one is available.
fn oracle(x: f64, d: u32, n: u32) -> Result<Option<f64>, CliError> {
    Ok(match n {
        1 => Some(exact_density_n1(x, d)?),
        2 => Some(conv_density_n2(x, d, 1e-12)?.value),
        _ => None,
    })
}

fn oracle_bound(n: u32, f: f64) -> f64 {
    if n == 1 {
        1e-5 * f.max(1.0)
    } else {
        1e-4
    }
}

pub fn run(s: &Setup, level: Level, seed: u64) -> Result<Report, CliError> {
    let engine = DensityEngine::new(s.model, s.cfg)?;
    let (d, n) = (s.model.d(), s.model.n());
    let mut checks = Vec::new();

    // oracle agreement
    let points: &[f64] = match n {
        1 => &ORACLE_POINTS,
        2 => &CONV_POINTS,
        _ => &[],
    };
    let evaluated = points
        .par_iter()
        .map(|&x| Ok((x, engine.density(x, s.eps)?, oracle(x, d, n)?)))
        .collect::<Result<Vec<_>, CliError>>()?;
    for (x, r, reference) in evaluated {
        if let Some(f) = reference {
            checks.push(Check::new(
                "oracle_agreement",
                format!("x={x}"),
                (r.value - f).abs(),
                oracle_bound(n, f),
            ));
        }
    }

    // symmetry and vanishing imaginary part on an 11-point grid
    let grid: Vec<f64> = (1..=11).map(|k| f64::from(2 * k - 1) / 5.0).collect();
    let pairs = grid
        .par_iter()
        .map(|&x| Ok((x, engine.density(x, s.eps)?, engine.density(-x, s.eps)?)))
        .collect::<Result<Vec<_>, CliError>>()?;
    for (x, p, m) in &pairs {
        if s.model.is_odd() {
            checks.push(Check::new(
                "symmetry",
                format!("x=±{x}"),
                (p.value - m.value).abs(),
                2.0 * (p.error_estimate + m.error_estimate),
            ));
        }
        for r in [p, m] {
            checks.push(Check::new(
                "imaginary_part",
                format!("x={}", r.x),
                r.imag.abs(),
                10.0 * r.quad_error,
            ));
        }
    }

    checks.extend(continuation_checks(s, level)?);
    checks.extend(path_independence_checks(&engine)?);

    if n == 1 {
        let rows = INVERSION_POINTS
            .par_iter()
            .map(|&(re, im)| {
                let z = Complex64::new(re, im);
                let psi = engine.defining_function(z)?;
                let cauchy = cauchy_transform_n1(z, d, 1e-12)?;
                Ok((z, (psi.value - cauchy).norm() / cauchy.norm()))
            })
            .collect::<Result<Vec<_>, CliError>>()?;
        for (z, rel) in rows {
            checks.push(Check::new(
                "inversion_identity",
                format!("z={}", fmt_z(z)),
                rel,
                1e-5,
            ));
        }
    }

    let (mass, _) = engine.total_mass(s.eps)?;
    checks.push(Check::new(
        "normalization",
        "all x".into(),
        (mass - 1.0).abs(),
        1e-3,
    ));

    let samples = match level {
        Level::Fast => 100_000,
        Level::Full => 1_000_000,
    };
    let mut draws = mc_sample(&s.model, &McConfig { samples, seed })?;
    draws.par_sort_unstable_by(|a, b| a.total_cmp(b));
    let ks = if n == 1 {
        ks_compare(&draws, |c| exact_cdf_n1(c, d).unwrap_or(f64::NAN))?
    } else {
        let table = engine.cdf_table(s.eps)?;
        ks_compare(&draws, |c| table.eval(c))?
    };
    checks.push(Check::new(
        "monte_carlo_ks",
        format!("samples={samples}, seed={seed}"),
        ks.statistic,
        ks.threshold,
    ));

    let adjudication = adjudicate(&engine, s)?;
    for probe in &adjudication.probes {
        if let (Some(dev), Some(f)) = (probe.accepted.oracle_deviation, probe.oracle) {
            checks.push(Check::new(
                "adjudication_accepted_vs_oracle",
                format!("x={}", probe.x),
                dev,
                oracle_bound(n, f),
            ));
        }
    }

    Ok(Report {
        checks,
        adjudication,
    })
}

/// Points with argument strictly inside `(0, 2π/3)`, where both
/// `θ = 0` and `θ = π/(3d)` integrals converge.
fn continuation_points(count: usize) -> Vec<Complex64> {
    const GOLDEN: f64 = 0.618_033_988_749_894_9;
    (0..count)
        .map(|k| {
            let u = (k as f64 + 0.5) / count as f64;
            let v = (0.5 + GOLDEN * k as f64).fract();
            let arg = 2.0 * PI / 3.0 * (0.05 + 0.9 * u);
            Complex64::from_polar(0.3 + 2.7 * v, arg)
        })
        .collect()
}

fn continuation_checks(s: &Setup, level: Level) -> Result<Vec<Check>, CliError> {
    let d = s.model.d();
    let theta2 = PI / (3.0 * f64::from(d));
    let count = match level {
        Level::Fast => 5,
        Level::Full => 20,
    };
    let ws: Vec<Complex64> = continuation_points(count)
        .into_iter()
        .filter(|&w| {
            HalfPlaneQuery { w, theta: 0.0, d }.is_open()
                && HalfPlaneQuery {
                    w,
                    theta: theta2,
                    d,
                }
                .is_open()
        })
        .collect();
    let reports = ws
        .par_iter()
        .map(|&w| Ok((w, continuation_check(w, 0.0, theta2, &s.model, &s.cfg)?)))
        .collect::<Result<Vec<_>, CliError>>()?;
    let mut checks: Vec<Check> = reports
        .into_iter()
        .map(|(w, r)| {
            Check::new(
                "continuation_check",
                format!("w={}, theta=(0, {theta2})", fmt_z(w)),
                r.difference,
                10.0 * r.combined_error,
            )
        })
        .collect();
    let w = Complex64::new(0.0, 1.0);
    let rejected = matches!(
        continuation_check(w, 0.0, PI / 2.0, &s.model, &s.cfg),
        Err(Error::ContinuationViolated { .. })
    );
    checks.push(Check::rejection(
        "continuation_check_rejects",
        format!("w={}, theta=(0, {})", fmt_z(w), PI / 2.0),
        rejected,
    ));
    Ok(checks)
}

/// Closed interval of `φ` admissible with both `0` and `θ'`; the first
/// contour alone already confines `φ` to `[0, π]`.
fn admissible_phi_interval(theta_prime: f64, d: u32) -> Option<(f64, f64)> {
    const STEPS: usize = 3600;
    let ok: Vec<f64> = (0..=STEPS)
        .map(|k| PI * k as f64 / STEPS as f64)
        .filter(|&phi| admissible(&ContourTriple::new(0.0, theta_prime, phi), d))
        .collect();
    Some((*ok.first()?, *ok.last()?))
}

fn path_independence_checks(engine: &DensityEngine) -> Result<Vec<Check>, CliError> {
    let d = engine.model().d();
    let theta = 0.0;
    // the pair (0, π) admits only φ = 0 for odd d, so step just inside
    let theta_prime = PI - PI / (4.0 * f64::from(d));
    let (a, b) = admissible_phi_interval(theta_prime, d)
        .ok_or_else(|| CliError::Usage(format!("no admissible rotation for d = {d}")))?;
    let phis = [a + 2.0 * (b - a) / 3.0, b];
    // both rays converge for arg z in (−π − φ1, −φ2)
    let (lo, hi) = (-PI - phis[0], -phis[1]);
    let zs: Vec<Complex64> = (0..5)
        .map(|k| {
            let arg = lo + (hi - lo) * (f64::from(k) + 0.5) / 5.0;
            Complex64::from_polar(1.0 + 0.4 * f64::from(k), arg)
        })
        .collect();
    let rows = zs
        .par_iter()
        .map(|&z| {
            let first = engine.psi_rotated(z, ContourTriple::new(theta, theta_prime, phis[0]))?;
            let second = engine.psi_rotated(z, ContourTriple::new(theta, theta_prime, phis[1]))?;
            Ok((z, first, second))
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let mut checks: Vec<Check> = rows
        .into_iter()
        .map(|(z, first, second)| {
            Check::new(
                "path_independence",
                format!(
                    "z={}, theta=(0, {theta_prime}), phi=({}, {})",
                    fmt_z(z),
                    phis[0],
                    phis[1]
                ),
                (first.value - second.value).norm(),
                10.0 * (first.error_estimate + second.error_estimate),
            )
        })
        .collect();
    if d % 2 == 1 {
        let literal = ContourTriple::new(0.0, PI, PI / 6.0);
        let z = Complex64::new(0.0, -2.0);
        let rejected = matches!(
            engine.psi_rotated(z, literal),
            Err(Error::Inadmissible { .. })
        );
        checks.push(Check::rejection(
            "path_independence_rejects",
            format!("theta=(0, {PI}), phi={}", PI / 6.0),
            rejected,
        ));
    }
    Ok(checks)
}

fn variant_value(
    engine: &DensityEngine,
    s: &Setup,
    x: f64,
    variant: FormulaVariant,
    reference: Option<f64>,
) -> VariantValue {
    match engine.density_variant(x, s.eps, variant) {
        Ok(r) => VariantValue {
            value: Some(r.value),
            error_estimate: Some(r.error_estimate),
            oracle_deviation: reference.map(|f| (r.value - f).abs()),
            error: None,
        },
        Err(e) => VariantValue {
            value: None,
            error_estimate: None,
            oracle_deviation: None,
            error: Some(e.to_string()),
        },
    }
}

fn adjudicate(engine: &DensityEngine, s: &Setup) -> Result<Adjudication, CliError> {
    let (d, n) = (s.model.d(), s.model.n());
    let probes = PROBES
        .par_iter()
        .map(|&x| {
            let reference = oracle(x, d, n)?;
            let accepted = variant_value(engine, s, x, FormulaVariant::Accepted, reference);
            let statement = variant_value(engine, s, x, FormulaVariant::Statement, reference);
            let proof = variant_value(engine, s, x, FormulaVariant::Proof, reference);
            let statement_over_accepted = match (statement.value, accepted.value) {
                (Some(a), Some(b)) if b != 0.0 => Some(a / b),
                _ => None,
            };
            Ok(Probe {
                x,
                oracle: reference,
                accepted,
                statement,
                proof,
                statement_over_accepted,
            })
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let relationship = describe(&probes);
    Ok(Adjudication {
        d,
        n,
        probes,
        relationship,
    })
}

fn describe(probes: &[Probe]) -> String {
    let ratios: Vec<f64> = probes
        .iter()
        .filter_map(|p| p.statement_over_accepted)
        .collect();
    let mut parts = Vec::new();
    if ratios.len() == probes.len() && !ratios.is_empty() {
        let worst = ratios
            .iter()
            .map(|r| (r / (2.0 * PI) - 1.0).abs())
            .fold(0.0, f64::max);
        if worst < 1e-6 {
            parts.push(format!(
                "statement = 2π × accepted at every probe (largest relative departure from 2π: {worst:.3e})"
            ));
        } else {
            let list: Vec<String> = ratios.iter().map(|r| format!("{r:.12}")).collect();
            parts.push(format!("statement / accepted = [{}]", list.join(", ")));
        }
    }
    let proof_errors: Vec<&str> = probes
        .iter()
        .filter_map(|p| p.proof.error.as_deref())
        .collect();
    if proof_errors.len() == probes.len() {
        parts.push(format!(
            "proof contours are not admissible here ({})",
            proof_errors[0]
        ));
    } else {
        let dev: Vec<String> = probes
            .iter()
            .map(|p| match (p.proof.value, p.accepted.value) {
                (Some(a), Some(b)) => format!("{:.3e}", (a - b).abs()),
                _ => "n/a".into(),
            })
            .collect();
        parts.push(format!("|proof − accepted| = [{}]", dev.join(", ")));
    }
    if let Some(worst) = probes
        .iter()
        .filter_map(|p| p.accepted.oracle_deviation)
        .reduce(f64::max)
    {
        parts.push(format!(
            "accepted deviates from the oracle by at most {worst:.3e}"
        ));
    }
    parts.join("; ")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn continuation_points_lie_in_both_regions() {
        for d in [3, 4, 7] {
            let theta2 = PI / (3.0 * f64::from(d));
            for w in continuation_points(20) {
                assert!(HalfPlaneQuery { w, theta: 0.0, d }.is_open());
                assert!(HalfPlaneQuery {
                    w,
                    theta: theta2,
                    d
                }
                .is_open());
            }
        }
    }

    #[test]
    fn phi_interval_for_cubes() {
        let (a, b) = admissible_phi_interval(PI - PI / 12.0, 3).unwrap();
        assert!(a.abs() < 1e-12);
        assert!((b - PI / 4.0).abs() < 1e-3);
        let phis = [a + 2.0 * (b - a) / 3.0, b];
        assert!((phis[0] - PI / 6.0).abs() < 1e-3);
    }
}
