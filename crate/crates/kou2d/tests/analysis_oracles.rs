//! Analysis oracles: reference self-consistency, the degenerate no-jump
//! cross-scheme check, Greek ridge location and put monotonicity.
#![allow(clippy::needless_range_loop)]

mod common;

use common::params_without_jumps;
use kou2d::analysis::{e_roi, greeks, reference_with_steps, Roi};
use kou2d::grid::{Grid2d, GridFunction};
use kou2d::model::{ParameterSet, SetLabel};
use kou2d::pide::Pide2d;
use kou2d::steppers::{run, Scheme, SchemeSpec};

#[test]
fn reference_is_self_consistent_under_step_refinement() {
    // MCS2 with 1000 vs 1500 steps on a coarse grid: the remaining
    // temporal error is far below the study tolerances.
    let p = ParameterSet::by_label(SetLabel::Set1).params;
    let a = reference_with_steps(&p, 48, 48, 1000, None).unwrap();
    let b = reference_with_steps(&p, 48, 48, 1500, None).unwrap();
    let grid = Grid2d::build(&p, 48, 48).unwrap();
    let roi = Roi::of_strike(p.strike);
    let diff = e_roi(&a, &b, &grid, &roi).unwrap();
    assert!(diff < 1e-6 * p.strike, "reference drift {diff}");
}

#[test]
fn degenerate_no_jump_problem_agrees_across_schemes() {
    // λ = 0 removes the integral part; the MCS2 and MCS references must
    // then agree to tight tolerance.
    let p = params_without_jumps(ParameterSet::by_label(SetLabel::Set1).params);
    let m = 32usize;
    let ref_mcs2 = reference_with_steps(&p, m, m, 1200, None).unwrap();
    let mut problem = Pide2d::new(p, m, m).unwrap();
    let v0 = problem.initial_condition();
    let spec = SchemeSpec::with_steps(Scheme::Mcs, 1200);
    let v = run(&spec, &mut problem, v0.as_slice(), p.maturity).unwrap();
    let v = GridFunction::from_values(&problem.grid, v).unwrap();
    let grid = Grid2d::build(&p, m, m).unwrap();
    let roi = Roi::of_strike(p.strike);
    let diff = e_roi(&ref_mcs2, &v, &grid, &roi).unwrap();
    assert!(diff < 1e-8, "MCS vs MCS2 no-jump gap {diff}");
}

#[test]
fn zero_payoff_gives_zero_solution() {
    let mut p = ParameterSet::by_label(SetLabel::Set1).params;
    p.lambda = 0.3;
    let mut problem = Pide2d::new(p, 12, 12).unwrap();
    let zero = vec![0.0f64; problem.num_points()];
    let v = run(
        &SchemeSpec::new(Scheme::Mcs2, 6),
        &mut problem,
        &zero,
        p.maturity,
    )
    .unwrap();
    assert!(v.iter().all(|&x| x == 0.0));
}

#[test]
fn gamma_ridge_hugs_the_payoff_kink() {
    // The Γ11 surface is highest along a line parallel to s1 + s2 = 2K.
    // At maturity the ridge sits at the forward at-the-money line, a few
    // percent below the spot kink (drift and jump compensation), so the
    // assertion is: small offset relative to the level, and a nearly
    // constant offset across scan lines.
    let p = ParameterSet::by_label(SetLabel::Set1).params;
    let m = 100usize;
    let mut problem = Pide2d::new(p, m, m).unwrap();
    let v0 = problem.initial_condition();
    let spec = SchemeSpec::new(Scheme::Mcs2, 40);
    let v = run(&spec, &mut problem, v0.as_slice(), p.maturity).unwrap();
    let v = GridFunction::from_values(&problem.grid, v).unwrap();
    let g = greeks(&v, &problem.grid);
    let grid = &problem.grid;
    let two_k = 2.0 * p.strike;
    let mut offsets = Vec::new();
    for j in 0..=grid.m2() {
        let s2 = grid.g2.point(j);
        if !(60.0..=140.0).contains(&s2) {
            continue;
        }
        let mut best_i = 0;
        let mut best = f64::NEG_INFINITY;
        for i in 1..grid.m1() {
            let x = g.gamma11.get(i, j);
            if x > best {
                best = x;
                best_i = i;
            }
        }
        offsets.push(grid.g1.point(best_i) + s2 - two_k);
    }
    assert!(offsets.len() > 20);
    let worst = offsets.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
    assert!(
        worst <= 0.06 * two_k,
        "ridge strays {worst} from the kink level {two_k}"
    );
    let spread = offsets.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        - offsets.iter().cloned().fold(f64::INFINITY, f64::min);
    let cell = grid.g1.uniform_spacing();
    assert!(
        spread <= 3.0 * cell + 1e-9,
        "ridge is not parallel to the kink: offset spread {spread} vs cell {cell}"
    );
}

#[test]
fn put_price_is_monotone_along_grid_lines() {
    let p = ParameterSet::by_label(SetLabel::Set2).params;
    let mut problem = Pide2d::new(p, 64, 64).unwrap();
    let v0 = problem.initial_condition();
    let spec = SchemeSpec::new(Scheme::Mcs2, 32);
    let v = run(&spec, &mut problem, v0.as_slice(), p.maturity).unwrap();
    let v = GridFunction::from_values(&problem.grid, v).unwrap();
    let tol = 1e-8 * p.strike;
    for j in 0..=problem.grid.m2() {
        for i in 1..=problem.grid.m1() {
            assert!(
                v.get(i, j) <= v.get(i - 1, j) + tol,
                "not nonincreasing in s1 at ({i},{j})"
            );
        }
    }
    for i in 0..=problem.grid.m1() {
        for j in 1..=problem.grid.m2() {
            assert!(
                v.get(i, j) <= v.get(i, j - 1) + tol,
                "not nonincreasing in s2 at ({i},{j})"
            );
        }
    }
}
