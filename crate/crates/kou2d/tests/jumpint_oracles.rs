//! Jump-integral oracles: quadrature verification of the closed-form cell
//! coefficients and an independent symbolic recomputation on a toy grid.
#![allow(clippy::needless_range_loop)]

mod common;

use common::adaptive_simpson_2d;
use kou2d::grid::{Grid2d, GridFunction};
use kou2d::jumpint::{apply_jump, apply_jump_naive, precompute};
use kou2d::model::{ParameterSet, SetLabel};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

#[test]
fn cell_kernel_integrals_match_quadrature() {
    // ζ^{00} over interior cells: ∫∫ z1^{ηq1-1} z2^{ηq2-1} dz1 dz2 equals
    // the product of the per-direction power-difference closed forms used
    // by the coefficient build.
    let p = ParameterSet::by_label(SetLabel::Set1).params;
    let grid = Grid2d::build(&p, 12, 12).unwrap();
    for (k, l) in [(1usize, 1usize), (3, 2), (7, 9), (12, 12)] {
        let (x0, x1) = (grid.g1.point(k - 1), grid.g1.point(k));
        let (y0, y1) = (grid.g2.point(l - 1), grid.g2.point(l));
        let closed = (x1.powf(p.eta_q1) - x0.powf(p.eta_q1)) / p.eta_q1
            * ((y1.powf(p.eta_q2) - y0.powf(p.eta_q2)) / p.eta_q2);
        // Tolerance relative to the integral's scale; far-field cells hold
        // enormous kernel mass.
        let quad = adaptive_simpson_2d(
            &|z1, z2| z1.powf(p.eta_q1 - 1.0) * z2.powf(p.eta_q2 - 1.0),
            x0,
            x1,
            y0,
            y1,
            1e-12 * closed.abs(),
        );
        assert!(
            (quad - closed).abs() <= 1e-10 * closed.abs().max(1e-12),
            "cell ({k},{l}): quadrature {quad} vs closed form {closed}"
        );
    }
}

#[test]
fn interpolation_coefficients_match_quadrature_against_linear_weights() {
    // The γ factors are integrals of the kernel against the linear
    // interpolation hat weights; check both legs on a few cells for both
    // kernel types of direction 1.
    let p = ParameterSet::by_label(SetLabel::Set2).params;
    let grid = Grid2d::build(&p, 10, 10).unwrap();
    for k in [2usize, 5, 10] {
        let (s0, s1) = (grid.g1.point(k - 1), grid.g1.point(k));
        let ds = s1 - s0;
        // Downward kernel z^{ηq-1}: closed forms first, quadrature scaled
        // to their magnitude.
        let z0 = (s1.powf(p.eta_q1) - s0.powf(p.eta_q1)) / p.eta_q1;
        let z1 = (s1.powf(1.0 + p.eta_q1) - s0.powf(1.0 + p.eta_q1)) / (1.0 + p.eta_q1);
        let g0 = (s1 * z0 - z1) / ds;
        let g1 = (-s0 * z0 + z1) / ds;
        let quad = |f: &dyn Fn(f64) -> f64, scale: f64| {
            common::adaptive_simpson(f, s0, s1, 1e-12 * scale.abs())
        };
        let g0_quad = quad(&|z: f64| z.powf(p.eta_q1 - 1.0) * (s1 - z) / ds, g0);
        let g1_quad = quad(&|z: f64| z.powf(p.eta_q1 - 1.0) * (z - s0) / ds, g1);
        assert!((g0 - g0_quad).abs() <= 1e-10 * g0_quad.abs());
        assert!((g1 - g1_quad).abs() <= 1e-10 * g1_quad.abs());
        // Upward kernel z^{-ηp-1}.
        let z0 = (s1.powf(-p.eta_p1) - s0.powf(-p.eta_p1)) / -p.eta_p1;
        let z1 = (s1.powf(1.0 - p.eta_p1) - s0.powf(1.0 - p.eta_p1)) / (1.0 - p.eta_p1);
        let g0 = (s1 * z0 - z1) / ds;
        let g0_quad = quad(&|z: f64| z.powf(-p.eta_p1 - 1.0) * (s1 - z) / ds, g0);
        assert!((g0 - g0_quad).abs() <= 1e-10 * g0_quad.abs());
    }
}

#[test]
fn toy_grid_application_matches_symbolic_recomputation() {
    // On a 3×3 grid, expand the full double sums symbolically from the
    // printed coefficient formulas (2D ζ^{ab} power differences, the
    // four-term γ combinations, ψ prefactors) and compare one value.
    let p = ParameterSet::by_label(SetLabel::Set1).params;
    let grid = Grid2d::build(&p, 3, 3).unwrap();
    let coeffs = precompute(&grid, &p).unwrap();
    let mut rng = StdRng::seed_from_u64(21);
    let v = GridFunction::from_fn(&grid, |_, _| rng.gen_range(0.0..2.0));
    let out = apply_jump(&coeffs, &v).unwrap();

    let s1: Vec<f64> = (0..=3).map(|i| grid.g1.point(i)).collect();
    let s2: Vec<f64> = (0..=3).map(|j| grid.g2.point(j)).collect();
    let q1 = 1.0 - p.p1;
    let q2 = 1.0 - p.p2;
    // ζ factors per direction and type, from the printed power forms.
    let zeta = |s: &[f64], k: usize, a: f64, eta: f64| -> f64 {
        (s[k].powf(a + eta) - s[k - 1].powf(a + eta)) / (a + eta)
    };
    let gamma = |s: &[f64], k: usize, eta: f64| -> (f64, f64) {
        let ds = s[k] - s[k - 1];
        let z0 = zeta(s, k, 0.0, eta);
        let z1 = zeta(s, k, 1.0, eta);
        ((s[k] * z0 - z1) / ds, (-s[k - 1] * z0 + z1) / ds)
    };
    // Value at the interior point (i, j) = (2, 2): all four quadrants.
    let (i, j) = (2usize, 2usize);
    let mut total = 0.0;
    // quadrant 1: k≤i, l≤j with kernels (ηq1, ηq2)
    let psi1 = p.lambda
        * (q1 * p.eta_q1 * s1[i].powf(-p.eta_q1))
        * (q2 * p.eta_q2 * s2[j].powf(-p.eta_q2));
    let mut sum = 0.0;
    for k in 1..=i {
        for l in 1..=j {
            let (gx0, gx1) = gamma(&s1, k, p.eta_q1);
            let (gy0, gy1) = gamma(&s2, l, p.eta_q2);
            sum += gx0 * gy0 * v.get(k - 1, l - 1)
                + gx1 * gy0 * v.get(k, l - 1)
                + gx0 * gy1 * v.get(k - 1, l)
                + gx1 * gy1 * v.get(k, l);
        }
    }
    total += psi1 * sum;
    // quadrant 2: k>i, l≤j with kernels (-ηp1, ηq2)
    let psi2 = p.lambda
        * (p.p1 * p.eta_p1 * s1[i].powf(p.eta_p1))
        * (q2 * p.eta_q2 * s2[j].powf(-p.eta_q2));
    let mut sum = 0.0;
    for k in i + 1..=3 {
        for l in 1..=j {
            let (gx0, gx1) = gamma(&s1, k, -p.eta_p1);
            let (gy0, gy1) = gamma(&s2, l, p.eta_q2);
            sum += gx0 * gy0 * v.get(k - 1, l - 1)
                + gx1 * gy0 * v.get(k, l - 1)
                + gx0 * gy1 * v.get(k - 1, l)
                + gx1 * gy1 * v.get(k, l);
        }
    }
    total += psi2 * sum;
    // quadrant 3: k≤i, l>j with kernels (ηq1, -ηp2)
    let psi3 = p.lambda
        * (q1 * p.eta_q1 * s1[i].powf(-p.eta_q1))
        * (p.p2 * p.eta_p2 * s2[j].powf(p.eta_p2));
    let mut sum = 0.0;
    for k in 1..=i {
        for l in j + 1..=3 {
            let (gx0, gx1) = gamma(&s1, k, p.eta_q1);
            let (gy0, gy1) = gamma(&s2, l, -p.eta_p2);
            sum += gx0 * gy0 * v.get(k - 1, l - 1)
                + gx1 * gy0 * v.get(k, l - 1)
                + gx0 * gy1 * v.get(k - 1, l)
                + gx1 * gy1 * v.get(k, l);
        }
    }
    total += psi3 * sum;
    // quadrant 4: k>i, l>j with kernels (-ηp1, -ηp2)
    let psi4 = p.lambda
        * (p.p1 * p.eta_p1 * s1[i].powf(p.eta_p1))
        * (p.p2 * p.eta_p2 * s2[j].powf(p.eta_p2));
    let mut sum = 0.0;
    for k in i + 1..=3 {
        for l in j + 1..=3 {
            let (gx0, gx1) = gamma(&s1, k, -p.eta_p1);
            let (gy0, gy1) = gamma(&s2, l, -p.eta_p2);
            sum += gx0 * gy0 * v.get(k - 1, l - 1)
                + gx1 * gy0 * v.get(k, l - 1)
                + gx0 * gy1 * v.get(k - 1, l)
                + gx1 * gy1 * v.get(k, l);
        }
    }
    total += psi4 * sum;

    let got = out.get(i, j);
    assert!(
        (got - total).abs() <= 1e-12 * total.abs().max(1e-12),
        "symbolic {total} vs fast {got}"
    );
}

#[test]
fn fast_and_naive_paths_agree_across_parameter_sets() {
    for label in [SetLabel::Set1, SetLabel::Set2, SetLabel::Set3] {
        let p = ParameterSet::by_label(label).params;
        let grid = Grid2d::build(&p, 14, 11).unwrap();
        let coeffs = precompute(&grid, &p).unwrap();
        let mut rng = StdRng::seed_from_u64(5000);
        for _ in 0..4 {
            let v = GridFunction::from_fn(&grid, |_, _| rng.gen_range(-1.0..1.0));
            let fast = apply_jump(&coeffs, &v).unwrap();
            let slow = apply_jump_naive(&coeffs, &v).unwrap();
            let scale = slow.as_slice().iter().fold(0.0f64, |a, &b| a.max(b.abs()));
            for idx in 0..grid.num_points() {
                assert!(
                    (fast.as_slice()[idx] - slow.as_slice()[idx]).abs() <= 1e-12 * scale,
                    "{label} idx {idx}"
                );
            }
        }
    }
}
