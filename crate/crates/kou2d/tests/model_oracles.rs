//! Quadrature oracles for the model layer: expected jump sizes against
//! numerical integration of the jump-size density, and density properties.
#![allow(clippy::needless_range_loop)]

mod common;

use common::{adaptive_simpson, marginal_density};
use kou2d::model::{density, kappa, ParameterSet, SetLabel};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

/// `∫ g(y) dy` over `(0, ∞)`, mapping the tail through `y = 1/u`.
fn integrate_half_line(g: &dyn Fn(f64) -> f64, tol: f64) -> f64 {
    let head = adaptive_simpson(g, 1e-12, 1.0, tol);
    let tail = adaptive_simpson(&|u: f64| g(1.0 / u) / (u * u), 1e-9, 1.0, tol);
    head + tail
}

#[test]
fn kappa_matches_quadrature_of_relative_jump_size_for_all_sets() {
    for label in [SetLabel::Set1, SetLabel::Set2, SetLabel::Set3] {
        let p = ParameterSet::by_label(label).params;
        for (prob, ep, eq) in [(p.p1, p.eta_p1, p.eta_q1), (p.p2, p.eta_p2, p.eta_q2)] {
            let integral = integrate_half_line(
                &|y: f64| (y - 1.0) * marginal_density(y, prob, ep, eq),
                1e-12,
            );
            let k = kappa(prob, ep, eq).unwrap();
            assert!(
                (k - integral).abs() < 1e-8,
                "{label}: kappa {k} vs quadrature {integral}"
            );
        }
    }
}

#[test]
fn density_normalizes_to_one_under_2d_quadrature() {
    let p = ParameterSet::by_label(SetLabel::Set1).params;
    // Integrate the joint density over (0, ∞)² quadrant by quadrant,
    // mapping each tail through y -> 1/u.
    let f = |y1: f64, y2: f64| density(y1, y2, &p).unwrap();
    let inner = |y1: f64, tol: f64| {
        adaptive_simpson(&|y2| f(y1, y2), 1e-12, 1.0, tol)
            + adaptive_simpson(&|u: f64| f(y1, 1.0 / u) / (u * u), 1e-9, 1.0, tol)
    };
    let tol = 1e-10;
    let total = adaptive_simpson(&|y1| inner(y1, tol), 1e-12, 1.0, 1e-9)
        + adaptive_simpson(&|u: f64| inner(1.0 / u, tol) / (u * u), 1e-9, 1.0, 1e-9);
    assert!((total - 1.0).abs() < 1e-8, "density mass {total}");
}

#[test]
fn density_factorizes_into_marginals_at_random_points() {
    let p = ParameterSet::by_label(SetLabel::Set2).params;
    let mut rng = StdRng::seed_from_u64(314);
    for _ in 0..100 {
        // Log-uniform spread across both branches of each marginal.
        let y1 = (rng.gen_range(-3.0..3.0f64)).exp();
        let y2 = (rng.gen_range(-3.0..3.0f64)).exp();
        let joint = density(y1, y2, &p).unwrap();
        let product = marginal_density(y1, p.p1, p.eta_p1, p.eta_q1)
            * marginal_density(y2, p.p2, p.eta_p2, p.eta_q2);
        assert!(
            (joint - product).abs() <= 1e-12 * product.max(1e-300),
            "({y1}, {y2}): joint {joint} vs marginal product {product}"
        );
    }
}

#[test]
fn density_is_nonnegative_on_a_wide_sample() {
    let p = ParameterSet::by_label(SetLabel::Set3).params;
    let mut rng = StdRng::seed_from_u64(7);
    for _ in 0..1000 {
        let y1 = (rng.gen_range(-6.0..6.0f64)).exp();
        let y2 = (rng.gen_range(-6.0..6.0f64)).exp();
        assert!(density(y1, y2, &p).unwrap() >= 0.0);
    }
}
