use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::Parser;
use num_complex::Complex64;
use powersum_core::contour_cf::cf_real;
use powersum_core::oracles::{ecdf, exact_cdf_n1, ks_compare, mc_sample, McConfig};
use powersum_core::{DensityEngine, EpsilonPolicy, PowerSumModel, QuadConfig};
use rayon::prelude::*;

use crate::args::{Against, Cli, Command, Common, Grid};
use crate::manifest::{RunManifest, ShiftedPoint};
use crate::output::{emit, Cell, Table};
use crate::{validate, CliError};

/// Runs a parsed command; `Ok(false)` means it finished but something did
/// not converge or a check failed.
pub fn dispatch(command: Command, argv: &[String]) -> Result<bool, CliError> {
    if let Command::Rerun { manifest, out } = command {
        return rerun(&manifest, out);
    }
    let threads = common_of(&command).and_then(|c| c.threads);
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(t) = threads {
        if t == 0 {
            return Err(CliError::Usage("--threads must be positive".into()));
        }
        pool = pool.num_threads(t);
    }
    let pool = pool
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start worker pool: {e}")))?;
    pool.install(|| execute(command, argv))
}

fn common_of(command: &Command) -> Option<&Common> {
    match command {
        Command::Density { common, .. }
        | Command::Cdf { common, .. }
        | Command::Cf { common, .. }
        | Command::Validate { common, .. }
        | Command::Mc { common, .. } => Some(common),
        Command::Rerun { .. } => None,
    }
}

pub const MIN_TOL: f64 = 1e-13;

/// Model, quadrature config and epsilon resolved from the shared flags.
pub struct Setup {
    pub model: PowerSumModel,
    pub cfg: QuadConfig,
    pub eps: EpsilonPolicy,
}

pub fn setup(common: &Common) -> Result<Setup, CliError> {
    let model = PowerSumModel::new(common.d, common.n)?;
    // the outer contour integrals cannot resolve relative errors much below
    // 1e-13 in double precision, and chasing them exhausts every budget
    if !(MIN_TOL..1.0).contains(&common.tol) {
        return Err(CliError::Usage(format!(
            "--tol must lie in [{MIN_TOL:e}, 1), got {}",
            common.tol
        )));
    }
    let cfg = QuadConfig::with_tol(common.tol);
    let eps = match common.eps {
        Some(e) => EpsilonPolicy::new(e, common.d)?,
        None => EpsilonPolicy::default_for(common.d),
    };
    Ok(Setup { model, cfg, eps })
}

/// Evenly spaced points; with `shift_origin`, a point at 0 moves half a
/// step to the right.
pub fn grid_points(
    grid: &Grid,
    shift_origin: bool,
) -> Result<(Vec<f64>, Vec<ShiftedPoint>), CliError> {
    let Grid { xmin, xmax, points } = *grid;
    if points == 0 {
        return Err(CliError::Usage("--points must be positive".into()));
    }
    if !xmin.is_finite() || !xmax.is_finite() || xmin > xmax {
        return Err(CliError::Usage(format!(
            "grid needs finite xmin <= xmax, got [{xmin}, {xmax}]"
        )));
    }
    if points == 1 && xmin != xmax {
        return Err(CliError::Usage("a single point needs xmin = xmax".into()));
    }
    let step = if points > 1 {
        (xmax - xmin) / (points - 1) as f64
    } else {
        0.0
    };
    let mut shifted = Vec::new();
    let xs = (0..points)
        .map(|k| {
            let x = if k + 1 == points {
                xmax
            } else {
                xmin + step * k as f64
            };
            if shift_origin && x.abs() <= 1e-12 * step.max(f64::MIN_POSITIVE) {
                let used = if step > 0.0 { 0.5 * step } else { f64::EPSILON };
                shifted.push(ShiftedPoint {
                    index: k,
                    requested: x,
                    used,
                });
                used
            } else {
                x
            }
        })
        .collect();
    Ok((xs, shifted))
}

fn finish(
    table: &Table,
    extra: Option<(&str, serde_json::Value)>,
    mut manifest: RunManifest,
    common: &Common,
    started: Instant,
) -> Result<bool, CliError> {
    manifest.duration_seconds = started.elapsed().as_secs_f64();
    emit(
        table,
        extra,
        &manifest,
        common.format,
        common.out.as_deref(),
    )?;
    Ok(manifest.all_converged)
}

fn execute(command: Command, argv: &[String]) -> Result<bool, CliError> {
    let started = Instant::now();
    match command {
        Command::Density {
            common,
            grid,
            variant,
        } => {
            let s = setup(&common)?;
            let (xs, shifted) = grid_points(&grid, true)?;
            let engine = DensityEngine::new(s.model, s.cfg)?;
            let results = xs
                .par_iter()
                .map(|&x| engine.density_variant(x, s.eps, variant.into()))
                .collect::<Result<Vec<_>, _>>()?;
            let mut table = Table::new(&["x", "f", "err_est", "converged"]);
            for r in &results {
                table.push(vec![
                    Cell::Num(r.x),
                    Cell::Num(r.value),
                    Cell::Num(r.error_estimate),
                    Cell::Bool(r.converged),
                ]);
            }
            let mut manifest = RunManifest::new(
                "density",
                s.model.d(),
                s.model.n(),
                s.cfg,
                common.seed,
                argv,
            );
            manifest.epsilon = Some(s.eps.epsilon());
            manifest.shifted_points = shifted;
            manifest.record_convergence(results.iter().map(|r| r.converged).collect());
            finish(&table, None, manifest, &common, started)
        }
        Command::Cdf { common, grid } => {
            let s = setup(&common)?;
            let (cs, _) = grid_points(&grid, false)?;
            let engine = DensityEngine::new(s.model, s.cfg)?;
            let results = cs
                .par_iter()
                .map(|&c| engine.cdf(c, s.eps))
                .collect::<Result<Vec<_>, _>>()?;
            let mut table = Table::new(&["c", "F", "err_est", "converged"]);
            for (c, r) in cs.iter().zip(&results) {
                table.push(vec![
                    Cell::Num(*c),
                    Cell::Num(r.value),
                    Cell::Num(r.error_estimate),
                    Cell::Bool(r.converged),
                ]);
            }
            let mut manifest =
                RunManifest::new("cdf", s.model.d(), s.model.n(), s.cfg, common.seed, argv);
            manifest.epsilon = Some(s.eps.epsilon());
            manifest.record_convergence(results.iter().map(|r| r.converged).collect());
            finish(&table, None, manifest, &common, started)
        }
        Command::Cf {
            common,
            tmin,
            tmax,
            points,
        } => {
            let s = setup(&common)?;
            let (ts, _) = grid_points(
                &Grid {
                    xmin: tmin,
                    xmax: tmax,
                    points,
                },
                false,
            )?;
            let n = s.model.n();
            let results = ts
                .par_iter()
                .map(|&t| cf_real(t, &s.model, &s.cfg))
                .collect::<Result<Vec<_>, _>>()?;
            let mut table = Table::new(&["t", "re", "im", "err_est", "converged"]);
            let mut flags = Vec::with_capacity(ts.len());
            for (t, r) in ts.iter().zip(&results) {
                let mut power = Complex64::new(1.0, 0.0);
                for _ in 0..n {
                    power *= r.value;
                }
                let err = f64::from(n) * r.value.norm().powi(n as i32 - 1) * r.error_estimate;
                table.push(vec![
                    Cell::Num(*t),
                    Cell::Num(power.re),
                    Cell::Num(power.im),
                    Cell::Num(err),
                    Cell::Bool(r.converged),
                ]);
                flags.push(r.converged);
            }
            let mut manifest = RunManifest::new("cf", s.model.d(), n, s.cfg, common.seed, argv);
            manifest.record_convergence(flags);
            finish(&table, None, manifest, &common, started)
        }
        Command::Validate { common, level } => {
            let s = setup(&common)?;
            let report = validate::run(&s, level, common.seed)?;
            let mut manifest = RunManifest::new(
                "validate",
                s.model.d(),
                s.model.n(),
                s.cfg,
                common.seed,
                argv,
            );
            manifest.epsilon = Some(s.eps.epsilon());
            manifest.rng = Some(McConfig::RNG_NAME.to_string());
            manifest.record_convergence(report.passes());
            let mut common = common;
            common.format = crate::args::Format::Json;
            finish(
                &report.table(),
                Some((
                    "adjudication",
                    serde_json::to_value(&report.adjudication).map_err(std::io::Error::other)?,
                )),
                manifest,
                &common,
                started,
            )
        }
        Command::Mc {
            common,
            samples,
            against,
            quantiles,
        } => {
            let s = setup(&common)?;
            let against = against.unwrap_or(if s.model.n() == 1 {
                Against::ExactCdf
            } else {
                Against::EngineCdf
            });
            if against == Against::ExactCdf && s.model.n() != 1 {
                return Err(CliError::Usage("--against exact-cdf needs --n 1".into()));
            }
            if samples == 0 {
                return Err(CliError::Usage("--samples must be positive".into()));
            }
            let mc = McConfig {
                samples,
                seed: common.seed,
            };
            let mut draws = mc_sample(&s.model, &mc)?;
            draws.par_sort_unstable_by(|a, b| a.total_cmp(b));
            let d = s.model.d();
            let (report, table_ok) = match against {
                Against::ExactCdf => (
                    ks_compare(&draws, |c| exact_cdf_n1(c, d).unwrap_or(f64::NAN))?,
                    true,
                ),
                Against::EngineCdf => {
                    let engine = DensityEngine::new(s.model, s.cfg)?;
                    let table = engine.cdf_table(s.eps)?;
                    (ks_compare(&draws, |c| table.eval(c))?, table.converged)
                }
            };
            let table = match quantiles {
                Some(0) => return Err(CliError::Usage("--quantiles must be positive".into())),
                Some(k) => {
                    let mut t = Table::new(&["p", "quantile", "ecdf"]);
                    for i in 1..=k {
                        let p = i as f64 / (k + 1) as f64;
                        let idx =
                            ((p * draws.len() as f64).ceil() as usize).clamp(1, draws.len()) - 1;
                        let q = draws[idx];
                        t.push(vec![Cell::Num(p), Cell::Num(q), Cell::Num(ecdf(&draws, q))]);
                    }
                    t
                }
                None => {
                    let mut t = Table::new(&["statistic", "threshold", "samples", "passed"]);
                    t.push(vec![
                        Cell::Num(report.statistic),
                        Cell::Num(report.threshold),
                        Cell::Int(report.samples as u64),
                        Cell::Bool(report.passed),
                    ]);
                    t
                }
            };
            let mut manifest = RunManifest::new("mc", d, s.model.n(), s.cfg, common.seed, argv);
            manifest.epsilon = Some(s.eps.epsilon());
            manifest.rng = Some(McConfig::RNG_NAME.to_string());
            manifest.record_convergence(vec![table_ok, report.passed]);
            if quantiles.is_some() {
                eprintln!(
                    "ks statistic={:.6e} threshold={:.6e} passed={}",
                    report.statistic, report.threshold, report.passed
                );
            }
            let extra = serde_json::to_value(report).map_err(std::io::Error::other)?;
            finish(&table, Some(("ks", extra)), manifest, &common, started)
        }
        Command::Rerun { .. } => Err(CliError::Usage("rerun cannot be nested".into())),
    }
}

/// Replays the recorded arguments, optionally redirecting the output.
fn rerun(path: &Path, out: Option<PathBuf>) -> Result<bool, CliError> {
    let text = fs::read_to_string(path)?;
    let value: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    // accept a bare manifest or a JSON result that embeds one
    let manifest_value = value.get("manifest").cloned().unwrap_or(value);
    let manifest: RunManifest = serde_json::from_value(manifest_value)
        .map_err(|e| CliError::Usage(format!("{}: not a run manifest: {e}", path.display())))?;
    let mut argv = vec!["powersum".to_string()];
    let mut recorded = manifest.argv.iter();
    while let Some(a) = recorded.next() {
        if out.is_some() && a == "--out" {
            recorded.next();
            continue;
        }
        if out.is_some() && a.starts_with("--out=") {
            continue;
        }
        argv.push(a.clone());
    }
    if let Some(o) = out {
        argv.push("--out".into());
        argv.push(o.to_string_lossy().into_owned());
    }
    let cli = Cli::try_parse_from(&argv)
        .map_err(|e| CliError::Usage(format!("recorded arguments no longer parse: {e}")))?;
    if matches!(cli.command, Command::Rerun { .. }) {
        return Err(CliError::Usage("rerun cannot be nested".into()));
    }
    dispatch(cli.command, &argv)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_shifts_the_origin() {
        let g = Grid {
            xmin: -2.0,
            xmax: 2.0,
            points: 9,
        };
        let (xs, shifted) = grid_points(&g, true).unwrap();
        assert_eq!(xs.len(), 9);
        assert_eq!(shifted.len(), 1);
        assert_eq!(shifted[0].index, 4);
        assert_eq!(xs[4], 0.25);
        let (xs, shifted) = grid_points(&g, false).unwrap();
        assert_eq!(xs[4], 0.0);
        assert!(shifted.is_empty());
    }

    #[test]
    fn grid_without_origin_is_untouched() {
        let g = Grid {
            xmin: -2.0,
            xmax: 2.0,
            points: 8,
        };
        let (xs, shifted) = grid_points(&g, true).unwrap();
        assert!(shifted.is_empty());
        assert_eq!(xs[0], -2.0);
        assert_eq!(xs[7], 2.0);
    }

    #[test]
    fn bad_grids_are_usage_errors() {
        for g in [
            Grid {
                xmin: 1.0,
                xmax: 0.0,
                points: 3,
            },
            Grid {
                xmin: 0.0,
                xmax: 1.0,
                points: 0,
            },
            Grid {
                xmin: 0.0,
                xmax: 1.0,
                points: 1,
            },
            Grid {
                xmin: f64::NAN,
                xmax: 1.0,
                points: 3,
            },
        ] {
            assert!(matches!(grid_points(&g, true), Err(CliError::Usage(_))));
        }
    }
}
