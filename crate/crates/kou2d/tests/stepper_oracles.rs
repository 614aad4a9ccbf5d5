//! Stepper oracles: cross-scheme collapse without jumps, exact CNFI/CNFE
//! identity, the dense startup check and agreement with the amplification
//! formulas on the scalar test equation.
#![allow(clippy::needless_range_loop)]

mod common;

use common::{imex_euler_dense_check, params_without_jumps, scheme_vs_stability_function};
use kou2d::model::{ParameterSet, SetLabel};
use kou2d::pide::Pide2d;
use kou2d::steppers::{run, Scheme, SchemeSpec, SplitSystem};

#[test]
fn without_jumps_all_cn_based_imex_schemes_collapse_to_crank_nicolson() {
    let p = params_without_jumps(ParameterSet::by_label(SetLabel::Set1).params);
    let steps = 8usize;
    let mut outputs = Vec::new();
    for scheme in [Scheme::Cnfe, Scheme::Cnfi, Scheme::Ietr, Scheme::Cnab] {
        let mut problem = Pide2d::new(p, 10, 10).unwrap();
        problem.cn_tol = 5e-14;
        let v0 = problem.initial_condition();
        let spec = SchemeSpec::with_steps(scheme, steps);
        let v = run(&spec, &mut problem, v0.as_slice(), p.maturity).unwrap();
        outputs.push((scheme, v));
    }
    let scale = outputs[0].1.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
    for pair in outputs.windows(2) {
        let (sa, va) = &pair[0];
        let (sb, vb) = &pair[1];
        for k in 0..va.len() {
            assert!(
                (va[k] - vb[k]).abs() <= 1e-12 * scale,
                "{sa} vs {sb} differ at {k}: {} vs {}",
                va[k],
                vb[k]
            );
        }
    }
}

#[test]
fn cnfi_single_sweep_equals_cnfe_on_the_full_problem() {
    let p = ParameterSet::by_label(SetLabel::Set1).params;
    let mut problem = Pide2d::new(p, 8, 8).unwrap();
    let v0 = problem.initial_condition();
    let dt = p.maturity / 10.0;
    problem.factor_cn(0.5 * dt).unwrap();
    let a = kou2d::steppers::step_cnfe(&mut problem, dt, v0.as_slice()).unwrap();
    let b = kou2d::steppers::step_cnfi(&mut problem, dt, 1, v0.as_slice()).unwrap();
    let scale = a.iter().fold(0.0f64, |x, &y| x.max(y.abs()));
    for k in 0..a.len() {
        assert!((a[k] - b[k]).abs() <= 1e-13 * scale, "mismatch at {k}");
    }
}

#[test]
fn imex_euler_startup_matches_dense_direct_evaluation() {
    let p = ParameterSet::by_label(SetLabel::Set1).params;
    let mut problem = Pide2d::new(p, 6, 6).unwrap();
    let dt = p.maturity / 20.0;
    let (v1, v1_dense) = imex_euler_dense_check(&mut problem, dt);
    let scale = v1_dense.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
    for k in 0..v1.len() {
        assert!(
            (v1[k] - v1_dense[k]).abs() <= 1e-9 * scale,
            "entry {k}: {} vs {}",
            v1[k],
            v1_dense[k]
        );
    }
}

#[test]
fn steppers_match_their_amplification_formulas() {
    // Smoke-sized version of the acceptance check.
    for scheme in Scheme::ALL {
        let worst = scheme_vs_stability_function(scheme, 100, 9 + scheme as u64);
        assert!(worst < 1e-13, "{scheme}: worst relative error {worst:.3e}");
    }
}

#[test]
fn two_step_schemes_with_one_total_step_return_the_mcs_startup() {
    let p = ParameterSet::by_label(SetLabel::Set1).params;
    let mut mcs2 = Pide2d::new(p, 8, 8).unwrap();
    let v0 = mcs2.initial_condition();
    let one_step = SchemeSpec::with_steps(Scheme::Mcs2, 1);
    let a = run(&one_step, &mut mcs2, v0.as_slice(), p.maturity).unwrap();
    let mut mcs = Pide2d::new(p, 8, 8).unwrap();
    let mcs_spec = SchemeSpec::with_steps(Scheme::Mcs, 1);
    let b = run(&mcs_spec, &mut mcs, v0.as_slice(), p.maturity).unwrap();
    assert_eq!(a, b, "a single MCS2 step must be the MCS startup step");
}
