use std::time::Instant;

use hpcready_core::{generate_synthetic, log_likelihood, mle_fit, mle_fit_with, MleOptions, ParamBounds};

mod common;
use common::theta;

#[test]
fn reaches_truth_likelihood() {
    let truth = theta(1.0, 0.1, 0.5);
    let data = generate_synthetic(400, &truth, 42).unwrap();
    let l_true = log_likelihood(&data, &truth).unwrap();
    let start = Instant::now();
    let fit = mle_fit_with(
        &data,
        &theta(0.5, 0.3, 1.0),
        &ParamBounds::default(),
        &MleOptions { max_evals: 500, ..Default::default() },
    )
    .unwrap();
    eprintln!(
        "fit {:?} l={} l_true={} evals={} in {:?}",
        fit.params.theta(),
        fit.log_likelihood,
        l_true,
        fit.evaluations,
        start.elapsed()
    );
    assert!(fit.evaluations <= 500);
    assert!(fit.log_likelihood >= l_true - 1e-6);
    assert!(fit.trace.windows(2).all(|w| w[1].log_likelihood >= w[0].log_likelihood));
    assert!(ParamBounds::default().contains(&fit.params.theta()));
}

#[test]
fn iteration_cap_honoured() {
    let data = generate_synthetic(100, &theta(1.0, 0.1, 0.5), 3).unwrap();
    let init = theta(0.5, 0.3, 1.0);
    let fit = mle_fit(&data, &init, &ParamBounds::default(), 10).unwrap();
    assert!(fit.trace.len() <= 10);
    assert!(fit.log_likelihood >= log_likelihood(&data, &init).unwrap());
}

#[test]
fn zero_tolerances_run_the_full_budget() {
    let data = generate_synthetic(100, &theta(1.0, 0.1, 0.5), 3).unwrap();
    let opts = MleOptions { max_iters: 10, max_evals: 10_000, ftol: 0.0, xtol: 0.0, ..Default::default() };
    let fit = mle_fit_with(&data, &theta(0.5, 0.3, 1.0), &ParamBounds::default(), &opts).unwrap();
    assert_eq!(fit.trace.len(), 10);
    assert!(!fit.converged);
    assert_eq!(fit.warning, None);
}

#[test]
fn restart_from_optimum_is_no_worse() {
    let data = generate_synthetic(100, &theta(1.0, 0.1, 0.5), 4).unwrap();
    let first = mle_fit(&data, &theta(0.5, 0.3, 1.0), &ParamBounds::default(), 1000).unwrap();
    let second = mle_fit(&data, &first.params, &ParamBounds::default(), 1000).unwrap();
    assert!(second.log_likelihood >= first.log_likelihood);
}

#[test]
fn init_outside_bounds_rejected() {
    let data = generate_synthetic(10, &theta(1.0, 0.1, 0.5), 5).unwrap();
    assert!(mle_fit(&data, &theta(50.0, 0.1, 0.5), &ParamBounds::default(), 10).is_err());
    let tlr =
        MleOptions { approximation: hpcready_core::Approximation::Tlr { nb: 3, tol: 1e-9 }, ..Default::default() };
    assert!(mle_fit_with(&data, &theta(0.5, 0.1, 0.5), &ParamBounds::default(), &tlr).is_err());
    assert!(ParamBounds::new([0.0, 0.1, 0.1], [1.0, 1.0, 1.0]).is_err());
}
