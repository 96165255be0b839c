//! Central finite-difference validation of [`backward`](super::backward).

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::graph::Graph;
use crate::spectrum::algebraic_connectivity;

use super::backward::backward;
use super::forward::{predict, Estimates};
use super::params::{Gradients, ModelParams, ReadoutMode};

/// Above this many parameters a seeded subsample of coordinates is checked.
pub const FULL_CHECK_LIMIT: usize = 5_000;
pub const SUBSAMPLE_SIZE: usize = 1_000;

/// Relative error between two derivative estimates, floored at `1e-8`.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / (analytic.abs() + numeric.abs()).max(1e-8)
}

/// Largest relative error between `analytic` and central differences of the
/// loss over every coordinate (or a seeded subsample for large models).
pub fn compare_with_finite_differences(
    params: &ModelParams,
    g: &Graph,
    rounds: usize,
    mode: ReadoutMode,
    target: f64,
    epsilon: f64,
    analytic: &Gradients,
) -> f64 {
    assert!(epsilon > 0.0, "epsilon must be positive");
    let count = params.parameter_count();
    let coords: Vec<usize> = if count <= FULL_CHECK_LIMIT {
        (0..count).collect()
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(count as u64);
        let mut idx = sample(&mut rng, count, SUBSAMPLE_SIZE).into_vec();
        idx.sort_unstable();
        idx
    };

    let mut probe = params.clone();
    let mut worst: f64 = 0.0;
    for i in coords {
        let orig = params.flat_get(i);
        *probe.flat_mut(i) = orig + epsilon;
        let plus = predict(&probe, g, rounds, mode);
        *probe.flat_mut(i) = orig - epsilon;
        let minus = predict(&probe, g, rounds, mode);
        *probe.flat_mut(i) = orig;
        let numeric = loss_difference(&plus, &minus, target) / (2.0 * epsilon);
        worst = worst.max(relative_error(analytic.flat_get(i), numeric));
    }
    worst
}

/// `squared_loss(plus) - squared_loss(minus)`, factored as a difference of
/// squares. Subtracting two nearly equal losses directly loses a few ulps of
/// the loss, which swamps coordinates whose gradient is ~1e-7; the factored
/// form only sees the (small) change in the estimates.
fn loss_difference(plus: &Estimates, minus: &Estimates, target: f64) -> f64 {
    let (p, m) = (plus.as_slice(), minus.as_slice());
    let sum: f64 = p.iter().zip(m).map(|(a, b)| (a - b) * (a + b - 2.0 * target)).sum();
    sum / (2.0 * p.len() as f64)
}

/// Checks the gradient of the loss against the graph's true algebraic
/// connectivity and returns the maximum relative error.
pub fn grad_check(params: &ModelParams, g: &Graph, rounds: usize, mode: ReadoutMode, epsilon: f64) -> f64 {
    grad_check_against(params, g, rounds, mode, algebraic_connectivity(g), epsilon)
}

/// [`grad_check`] with an explicit regression target.
pub fn grad_check_against(
    params: &ModelParams,
    g: &Graph,
    rounds: usize,
    mode: ReadoutMode,
    target: f64,
    epsilon: f64,
) -> f64 {
    let (_, cache) = super::forward::forward(params, g, rounds, mode);
    let (_, grads) = backward(params, g, &cache, target, mode).expect("cache matches graph");
    compare_with_finite_differences(params, g, rounds, mode, target, epsilon, &grads)
}
