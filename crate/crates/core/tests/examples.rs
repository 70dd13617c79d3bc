//! Per-operation examples against independently computed references.
//!
//! Frozen constants come from 30-digit mpmath quadrature of the defining
//! integrals, never from this crate.

#![allow(clippy::excessive_precision)]

use std::f64::consts::PI;

use num_complex::Complex64;
use powersum_core::contour_cf::{cf_real, continuation_check, phi_theta, HalfPlaneQuery};
use powersum_core::density::{admissible, ContourTriple, EpsilonPolicy, FormulaVariant};
use powersum_core::oracles::{brute_cf, conv_density_n2, exact_cdf_n1, exact_density_n1};
use powersum_core::quadrature::integrate_segment;
use powersum_core::{DensityEngine, Error, PowerSumModel, QuadConfig};

const CF_D3_AT_1: f64 = 0.596_564_968_020_761_8;
const CF_D3_AT_HALF: f64 = 0.721_515_773_666_648_1;
const CF_D3_AT_2: f64 = 0.482_673_998_280_339_3;
const CF_D4_AT_1: (f64, f64) = (0.615_754_412_353_687_0, 0.183_104_587_479_630_06);
const PSI_D3_AT_MINUS_2I: f64 = 0.390_229_783_570_518_2;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn engine(d: u32, n: u32) -> DensityEngine {
    DensityEngine::new(PowerSumModel::new(d, n).unwrap(), QuadConfig::default()).unwrap()
}

#[test]
fn half_plane_predicates() {
    let q = |w, theta| HalfPlaneQuery { w, theta, d: 3 };
    assert!(q(c(0.0, 1.0), 0.0).is_open());
    assert!(!q(c(1.0, 0.0), 0.0).is_open());
    assert!(q(c(1.0, 0.0), PI / 9.0).is_open());
    assert!(q(c(1.0, 0.0), 0.0).is_closed());
    assert!(!q(c(1.0, 0.0), PI / 2.0).is_closed());
    assert!(q(c(-1.0, 0.0), 0.0).is_closed());
}

#[test]
fn rotated_cf_examples() {
    let cfg = QuadConfig::default();
    let at0 = phi_theta(c(0.0, 0.0), 0.0, 3, &cfg).unwrap();
    assert!((at0.value - c(0.5, 0.0)).norm() < 1e-9);
    let atpi = phi_theta(c(0.0, 0.0), PI, 3, &cfg).unwrap();
    assert!((atpi.value - c(-0.5, 0.0)).norm() < 1e-9);
    // dense trapezoid of ∫_0^∞ e^{it³ − t²/2} dt / √(2π), independent of the engine
    let h = 1e-4;
    let f = |t: f64| Complex64::from_polar((-0.5 * t * t).exp(), t * t * t) / (2.0 * PI).sqrt();
    let steps = (12.0 / h) as usize;
    let mut brute = (f(0.0) + f(12.0)) * 0.5;
    for k in 1..steps {
        brute += f(k as f64 * h);
    }
    brute *= h;
    let got = phi_theta(c(1.0, 0.0), 0.0, 3, &cfg).unwrap();
    assert!(
        (got.value - brute).norm() <= 1e-6 * brute.norm(),
        "{} vs {brute}",
        got.value
    );
}

#[test]
fn cf_real_matches_references() {
    let cfg = QuadConfig::default();
    let m3 = PowerSumModel::new(3, 1).unwrap();
    for (t, want) in [(1.0, CF_D3_AT_1), (0.5, CF_D3_AT_HALF), (2.0, CF_D3_AT_2)] {
        let got = cf_real(t, &m3, &cfg).unwrap();
        assert!((got.value - c(want, 0.0)).norm() < 1e-8, "t={t}: {:?}", got);
        let brute = brute_cf(t, 3, 1e-12).unwrap();
        assert!((got.value - brute).norm() < 1e-8);
    }
    let m4 = PowerSumModel::new(4, 1).unwrap();
    let got = cf_real(1.0, &m4, &cfg).unwrap();
    assert!((got.value - c(CF_D4_AT_1.0, CF_D4_AT_1.1)).norm() < 1e-8);
}

#[test]
fn continuation_examples() {
    let cfg = QuadConfig::default();
    let model = PowerSumModel::new(3, 1).unwrap();
    let r = continuation_check(c(0.0, 1.0), 0.0, PI / 9.0, &model, &cfg).unwrap();
    assert!(r.difference <= 1e-7, "{r:?}");
    let r = continuation_check(c(0.5, 0.5), 0.0, PI / 12.0, &model, &cfg).unwrap();
    assert!(r.difference <= 1e-7, "{r:?}");
    assert!(matches!(
        continuation_check(c(0.0, 1.0), 0.0, PI / 2.0, &model, &cfg),
        Err(Error::ContinuationViolated { .. })
    ));
}

#[test]
fn admissibility_examples() {
    let eps = PI / 12.0;
    assert!(admissible(&ContourTriple::new(eps, PI, -3.0 * eps), 3));
    assert!(admissible(&ContourTriple::new(0.0, 0.0, PI / 2.0), 3));
    assert!(!admissible(&ContourTriple::new(0.0, 0.0, -PI / 2.0), 3));
}

#[test]
fn psi_below_the_axis() {
    let e = engine(3, 1);
    let z = c(0.0, -2.0);
    let psi = e.psi_rotated(z, ContourTriple::new(0.0, PI, 0.0)).unwrap();
    assert!((psi.value - c(PSI_D3_AT_MINUS_2I, 0.0)).norm() <= 1e-6 * PSI_D3_AT_MINUS_2I);

    // ∫_0^∞ e^{-izt} φ(t) dt with φ from the trapezoid oracle
    let cfg = QuadConfig {
        abs_tol: 1e-11,
        rel_tol: 1e-10,
        ..QuadConfig::default()
    };
    let brute = integrate_segment(
        |t| (-Complex64::i() * z * t.re).exp() * brute_cf(t.re, 3, 1e-12).unwrap(),
        0.0,
        20.0,
        c(0.0, 0.0),
        c(1.0, 0.0),
        &cfg,
    )
    .unwrap();
    assert!((psi.value - brute.value).norm() <= 1e-6 * brute.value.norm());

    // the defining function carries the opposite sign and equals the
    // Cauchy transform of the density
    let def = e.defining_function(z).unwrap();
    assert!((def.value + psi.value).norm() < 1e-15);
}

#[test]
fn psi_rejects_inadmissible_and_out_of_domain() {
    let e = engine(3, 1);
    assert!(matches!(
        e.psi_rotated(c(0.0, -1.0), ContourTriple::new(0.0, PI, -PI / 2.0)),
        Err(Error::Inadmissible { .. })
    ));
    assert!(matches!(
        e.psi_rotated(c(0.0, 1.0), ContourTriple::new(0.0, PI, 0.0)),
        Err(Error::OutsideDomain { .. })
    ));
}

#[test]
fn density_examples() {
    let e3 = engine(3, 1);
    let eps = EpsilonPolicy::default_for(3);
    let want = exact_density_n1(1.0, 3).unwrap();
    assert!((e3.density(1.0, eps).unwrap().value - 0.080_656_91).abs() < 1e-5);
    assert!((e3.density(-1.0, eps).unwrap().value - want).abs() < 1e-5);
    assert_eq!(e3.density(0.0, eps).unwrap_err(), Error::Origin);

    let e4 = engine(4, 2);
    let neg = e4.density(-1.0, EpsilonPolicy::default_for(4)).unwrap();
    assert!(neg.value.abs() < 1e-5, "{neg:?}");
}

#[test]
fn density_variants() {
    let e = engine(3, 1);
    let eps = EpsilonPolicy::default_for(3);
    let oracle = exact_density_n1(1.0, 3).unwrap();
    let accepted = e
        .density_variant(1.0, eps, FormulaVariant::Accepted)
        .unwrap();
    assert!((accepted.value - oracle).abs() < 1e-8);
    let statement = e
        .density_variant(1.0, eps, FormulaVariant::Statement)
        .unwrap();
    assert!((statement.value / accepted.value - 2.0 * PI).abs() < 1e-9);
    // the second published triple turns the ray out of the convergence region
    assert!(matches!(
        e.density_variant(1.0, eps, FormulaVariant::Proof),
        Err(Error::Inadmissible { .. })
    ));

    let e2 = engine(3, 2);
    let conv = conv_density_n2(1.0, 3, 1e-13).unwrap().value;
    let accepted = e2.density(1.0, eps).unwrap();
    assert!((accepted.value - conv).abs() < 1e-8);
    let statement = e2
        .density_variant(1.0, eps, FormulaVariant::Statement)
        .unwrap();
    assert!((statement.value - 2.0 * PI * conv).abs() < 1e-7);
}

#[test]
fn even_negative_proof_branch_is_admissible_and_agrees() {
    let e = engine(4, 2);
    let eps = EpsilonPolicy::default_for(4);
    let proof = e.density_variant(-1.0, eps, FormulaVariant::Proof).unwrap();
    let accepted = e.density(-1.0, eps).unwrap();
    assert!(proof.value.abs() < 1e-8 && accepted.value.abs() < 1e-8);
}

#[test]
fn cdf_examples() {
    let e = engine(3, 1);
    let eps = EpsilonPolicy::default_for(3);
    assert!((e.cdf(50.0, eps).unwrap().value - 1.0).abs() < 1e-3);
    assert!((e.cdf(0.0, eps).unwrap().value - 0.5).abs() < 1e-3);
    let at1 = e.cdf(1.0, eps).unwrap();
    assert!(
        (at1.value - 0.841_344_746_068_542_9).abs() < 1e-8,
        "{at1:?}"
    );
    assert!(at1.converged);
    assert_eq!(
        engine(4, 1)
            .cdf(-1.0, EpsilonPolicy::default_for(4))
            .unwrap()
            .value,
        0.0
    );
}

#[test]
fn cdf_table_agrees_with_direct_cdf() {
    let e = engine(3, 2);
    let eps = EpsilonPolicy::default_for(3);
    let table = e.cdf_table(eps).unwrap();
    assert!(table.converged);
    for c in [-8.0, -1.0, -0.1, 0.0, 0.3, 2.0, 20.0] {
        let direct = e.cdf(c, eps).unwrap();
        assert!((table.eval(c) - direct.value).abs() < 1e-8, "c={c}");
    }
    let single = engine(5, 1);
    let t1 = single.cdf_table(EpsilonPolicy::default_for(5)).unwrap();
    for c in [-30.0, -1.0, 0.5, 3.0] {
        assert!(
            (t1.eval(c) - exact_cdf_n1(c, 5).unwrap()).abs() < 1e-8,
            "c={c}"
        );
    }
}
