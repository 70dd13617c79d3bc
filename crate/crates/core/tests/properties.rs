use std::f64::consts::PI;

use num_complex::Complex64;
use powersum_core::density::{admissible, Branch, ContourTriple, EpsilonPolicy, FormulaVariant};
use powersum_core::oracles::{cauchy_transform_n1, conv_density_n2, mc_sample, McConfig};
use powersum_core::{DensityEngine, PowerSumModel, QuadConfig};
use proptest::prelude::*;

fn engine(d: u32, n: u32) -> DensityEngine {
    DensityEngine::new(PowerSumModel::new(d, n).unwrap(), QuadConfig::default()).unwrap()
}

#[test]
fn odd_densities_are_symmetric() {
    for (d, n) in [(3, 2), (5, 3)] {
        let e = engine(d, n);
        let eps = EpsilonPolicy::default_for(d);
        for x in [0.3, 1.0, 2.5, 6.0] {
            let p = e.density(x, eps).unwrap();
            let m = e.density(-x, eps).unwrap();
            assert!(
                (p.value - m.value).abs() <= 2.0 * (p.error_estimate + m.error_estimate),
                "d={d} n={n} x={x}: {} vs {}",
                p.value,
                m.value
            );
        }
    }
}

#[test]
fn imaginary_part_vanishes() {
    for (d, n) in [(3, 1), (4, 3), (6, 2)] {
        let e = engine(d, n);
        for x in [-2.0, -0.4, 0.4, 2.0, 9.0] {
            let r = e.density(x, EpsilonPolicy::default_for(d)).unwrap();
            assert!(r.imag.abs() <= 10.0 * r.quad_error.max(1e-15), "{r:?}");
        }
    }
}

#[test]
fn defining_function_is_the_cauchy_transform() {
    let e = engine(3, 1);
    for z in [
        Complex64::new(0.0, 2.0),
        Complex64::new(0.0, -2.0),
        Complex64::new(1.0, 1.0),
        Complex64::new(-1.0, -2.0),
        Complex64::new(3.0, 0.2),
    ] {
        let got = e.defining_function(z).unwrap().value;
        let want = cauchy_transform_n1(z, 3, 1e-13).unwrap();
        assert!(
            (got - want).norm() <= 1e-7 * want.norm(),
            "z={z}: {got} vs {want}"
        );
    }
}

#[test]
fn two_term_density_matches_convolution_for_even_power() {
    let e = engine(4, 2);
    let eps = EpsilonPolicy::default_for(4);
    for x in [0.2, 1.0, 3.0] {
        let want = conv_density_n2(x, 4, 1e-13).unwrap().value;
        let got = e.density(x, eps).unwrap().value;
        assert!((got - want).abs() < 1e-8, "x={x}: {got} vs {want}");
    }
}

#[test]
fn convolution_agrees_with_monte_carlo_bin() {
    // P(0.9 < X < 1.1) for X = Z₁³ + Z₂³ against Simpson on the oracle density
    let samples = mc_sample(
        &PowerSumModel::new(3, 2).unwrap(),
        &McConfig {
            samples: 2_000_000,
            seed: 11,
        },
    )
    .unwrap();
    let hits = samples.iter().filter(|&&x| x > 0.9 && x < 1.1).count() as f64;
    let p_mc = hits / samples.len() as f64;
    let k = 20;
    let h = 0.2 / k as f64;
    let mut p = 0.0;
    for i in 0..=k {
        let w = if i == 0 || i == k {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        };
        p += w * conv_density_n2(0.9 + h * i as f64, 3, 1e-12).unwrap().value;
    }
    p *= h / 3.0;
    let sigma = (p * (1.0 - p) / samples.len() as f64).sqrt();
    assert!((p - p_mc).abs() < 4.0 * sigma, "{p} vs {p_mc}");
}

#[test]
fn mass_is_one() {
    for (d, n) in [(3, 1), (3, 2), (4, 1), (6, 3)] {
        let (mass, err) = engine(d, n)
            .total_mass(EpsilonPolicy::default_for(d))
            .unwrap();
        assert!((mass - 1.0).abs() < 1e-6, "d={d} n={n}: {mass} ± {err}");
    }
}

#[test]
fn cdf_table_is_monotone() {
    let e = engine(3, 3);
    let t = e.cdf_table(EpsilonPolicy::default_for(3)).unwrap();
    let mut prev = 0.0;
    for i in 0..=400 {
        let c = -20.0 + 0.1 * i as f64;
        let f = t.eval(c);
        assert!(f >= prev - 1e-12, "c={c}");
        prev = f;
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn accepted_contours_stay_admissible(d in 3u32..16, frac in 0.01f64..0.99, positive in any::<bool>()) {
        let eps = EpsilonPolicy::new(frac * PI / (2.0 * f64::from(d)), d).unwrap();
        let x = if positive { 1.0 } else { -1.0 };
        let branch = match (d % 2 == 1, positive) {
            (true, true) => Branch::OddPositive,
            (true, false) => Branch::OddNegative,
            (false, true) => Branch::EvenPositive,
            (false, false) => Branch::EvenNegative,
        };
        let (pair, prefactor) = FormulaVariant::Accepted.contours(branch, eps.epsilon(), d);
        prop_assert!((prefactor - 1.0 / (2.0 * PI)).abs() < 1e-16);
        for t in pair {
            prop_assert!(admissible(&t, d));
            prop_assert!((-x * Complex64::from_polar(1.0, t.phi)).im > 0.0);
        }
    }

    #[test]
    fn admissibility_is_periodic(theta in -PI..PI, tp in -PI..PI, phi in -PI..PI, d in 3u32..9) {
        let a = admissible(&ContourTriple::new(theta, tp, phi), d);
        let b = admissible(&ContourTriple::new(theta, tp, phi + 2.0 * PI), d);
        let margin = [(phi + theta * f64::from(d)).sin(), (phi + tp * f64::from(d)).sin()]
            .iter()
            .fold(f64::INFINITY, |m, s| m.min(s.abs()));
        prop_assume!(margin > 1e-9);
        prop_assert_eq!(a, b);
    }
}
