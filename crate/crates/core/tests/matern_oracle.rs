use hpcready_core::special::{bessel_k, gamma};
use hpcready_core::{matern_cov, CovarianceParams64};

mod common;
use common::rel_err;

// K_ν(x) evaluated with mpmath at 50 significant digits.
const BESSEL_K_REFERENCE: &[(f64, f64, f64)] = &[
    (0.3, 0.001, 14.406547529041027961),
    (0.3, 0.05, 3.811966336769110841),
    (0.3, 0.7, 0.68956248975697501701),
    (0.3, 1.999, 0.11618048839092041726),
    (0.3, 2.0, 0.11603697434811925852),
    (0.3, 3.3, 0.024908607983984745884),
    (0.3, 12.0, 2.2087760727335875381e-6),
    (0.3, 40.0, 8.4021932613531396747e-19),
    (0.5, 0.001, 39.593659513116643614),
    (0.5, 0.05, 5.3316325691057586943),
    (0.5, 0.7, 0.74388325232069372992),
    (0.5, 1.999, 0.12008779543145006885),
    (0.5, 2.0, 0.11993777196806144737),
    (0.5, 3.3, 0.025446682920518302269),
    (0.5, 12.0, 2.222979883570349352e-6),
    (0.5, 40.0, 8.4188091949489054135e-19),
    (1.3, 0.001, 8776.6527984511158197),
    (1.3, 0.05, 54.18417298352208706),
    (1.3, 0.7, 1.4232613423144326555),
    (1.3, 1.999, 0.1610451060523914477),
    (1.3, 2.0, 0.16082436361104641615),
    (1.3, 3.3, 0.030803038161789024866),
    (1.3, 12.0, 2.3548917091557472272e-6),
    (1.3, 40.0, 8.5698271348155336334e-19),
    (2.0, 0.001, 1999999.5000009717109),
    (2.0, 0.05, 799.50120706477225032),
    (2.0, 0.7, 3.6613299608091528385),
    (2.0, 1.999, 0.25415373261735666891),
    (2.0, 2.0, 0.25375975456605586294),
    (2.0, 3.3, 0.041651198371728170247),
    (2.0, 12.0, 2.5826183081060227032e-6),
    (2.0, 40.0, 8.8177176978426189663e-19),
    (2.7, 0.001, 631816692.67201520973),
    (2.7, 0.05, 16338.51278596800156),
    (2.7, 0.7, 12.265815446665274297),
    (2.7, 1.999, 0.47407590925862553784),
    (2.7, 2.0, 0.473231920553280038),
    (2.7, 3.3, 0.06342202176339139679),
    (2.7, 12.0, 2.9444644305037979511e-6),
    (2.7, 40.0, 9.1831009509620417394e-19),
    (4.25, 0.001, 443245595064704.89487),
    (4.25, 0.05, 26664806.023019294686),
    (4.25, 0.7, 345.73268368084667737),
    (4.25, 1.999, 3.1046656445449511699),
    (4.25, 2.0, 3.0972164459863448735),
    (4.25, 3.3, 0.23571500910097116721),
    (4.25, 12.0, 4.5108365875975574089e-6),
    (4.25, 40.0, 1.048784572235353687e-18),
];

#[test]
fn bessel_k_matches_arbitrary_precision() {
    for &(nu, x, expected) in BESSEL_K_REFERENCE {
        let got = bessel_k(nu, x);
        assert!(rel_err(got, expected) < 1e-12, "K_{nu}({x}) = {got}, expected {expected}");
    }
}

#[test]
fn matern_non_half_integer_order() {
    // mpmath: 2 · 2^(1-1.3)/Γ(1.3) · (0.75)^1.3 · K_1.3(0.75)
    const EXPECTED: f64 = 1.580922366195739091343742;
    let p = CovarianceParams64::new(2.0, 0.2, 1.3).unwrap();
    let got = matern_cov(0.15, &p).unwrap();
    assert!(rel_err(got, EXPECTED) < 1e-10, "{got}");
}

#[test]
fn matern_half_order_is_exponential() {
    for &beta in &[0.01, 0.1, 0.37, 1.0, 3.0] {
        for i in 0..=40 {
            let d = i as f64 * 0.05;
            let p = CovarianceParams64::new(1.0, beta, 0.5).unwrap();
            let got = matern_cov(d, &p).unwrap();
            let exact = (-d / beta).exp();
            assert!(
                (got - exact).abs() <= 1e-12 * exact.max(1e-300) || (got - exact).abs() < 1e-300,
                "d={d} beta={beta}"
            );
        }
    }
}

#[test]
fn matern_three_halves_closed_form() {
    for &d in &[0.01, 0.1, 0.5, 2.0] {
        let p = CovarianceParams64::new(1.7, 0.3, 1.5).unwrap();
        let x: f64 = d / 0.3;
        let exact = 1.7 * (1.0 + x) * (-x).exp();
        assert!(rel_err(matern_cov(d, &p).unwrap(), exact) < 1e-12);
    }
}

#[test]
fn matern_zero_distance_exact() {
    for &(s, b, nu) in &[(1.0, 0.1, 0.5), (2.5, 0.03, 1.3), (0.2, 1.5, 3.7)] {
        let p = CovarianceParams64::new(s, b, nu).unwrap();
        assert_eq!(matern_cov(0.0, &p).unwrap(), s);
    }
}

#[test]
fn gamma_reference_values() {
    // mpmath
    assert!(rel_err(gamma(2.7), 1.544_685_845_850_593_983_6) < 1e-14);
    assert!(rel_err(gamma(0.3), 2.991_568_987_687_590_744_6) < 1e-14);
    assert!(rel_err(gamma(7.25), 1_155.381_013_919_989_687_2) < 1e-13);
}
