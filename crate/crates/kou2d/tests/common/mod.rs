//! Shared oracle machinery for the integration tests: adaptive quadrature,
//! dense operator assembly and the scheme/stability-function consistency
//! driver. Everything here is an independent reference path; none of it is
//! used by the library itself.
#![allow(dead_code)]
#![allow(clippy::needless_range_loop)] // dense oracle assembly reads naturally indexed

use kou2d::grid::GridFunction;
use kou2d::model::KouParams;
use kou2d::pide::Pide2d;
use kou2d::spatial::SpatialOps;
use kou2d::stability::{
    stab_cnab, stab_cnfe, stab_cnfi, stab_ietr, stab_mcs, stab_mcs2, stab_sc2a,
};
use kou2d::steppers::{
    imex_euler_start, step_cnab, step_cnfe, step_cnfi, step_ietr, step_mcs, step_mcs2, step_sc2a,
    ScalarTestEq, Scheme, SplitSystem,
};
use num_complex::Complex64 as C64;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

/// Adaptive Simpson quadrature with interval-doubling error control.
///
/// `tol` is absolute; a machine-precision floor relative to the local
/// subintegral keeps the recursion from chasing unreachable accuracy.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(a: f64, fa: f64, b: f64, fb: f64, fm: f64) -> f64 {
        (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    }
    #[allow(clippy::too_many_arguments)]
    fn rec(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        fm: f64,
        whole: f64,
        tol: f64,
        depth: usize,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = simpson(a, fa, m, fm, flm);
        let right = simpson(m, fm, b, fb, frm);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol.max(1e-14 * whole.abs()) {
            return left + right + delta / 15.0;
        }
        rec(f, a, fa, m, fm, flm, left, 0.5 * tol, depth - 1)
            + rec(f, m, fm, b, fb, frm, right, 0.5 * tol, depth - 1)
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = simpson(a, fa, b, fb, fm);
    rec(f, a, fa, b, fb, fm, whole, tol, 32)
}

/// Nested 2D adaptive quadrature over a rectangle.
pub fn adaptive_simpson_2d(
    f: &dyn Fn(f64, f64) -> f64,
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
    tol: f64,
) -> f64 {
    adaptive_simpson(
        &|x| adaptive_simpson(&|y| f(x, y), y0, y1, tol / (10.0 * (x1 - x0).max(1.0))),
        x0,
        x1,
        tol,
    )
}

/// One-asset double-exponential jump-size density (reference formula,
/// independent of the library's four-branch evaluation).
pub fn marginal_density(y: f64, p_up: f64, eta_p: f64, eta_q: f64) -> f64 {
    let q = 1.0 - p_up;
    if y >= 1.0 {
        p_up * eta_p * y.powf(-eta_p - 1.0)
    } else {
        q * eta_q * y.powf(eta_q - 1.0)
    }
}

/// Dense matrices of the three spatial operators via Kronecker assembly:
/// `A_1 = I ⊗ T_1`, `A_2 = T_2 ⊗ I`, `A^(M) = coeff · (F_2 ⊗ F_1)`.
pub struct DenseOps {
    pub n: usize,
    pub a1: Vec<Vec<f64>>,
    pub a2: Vec<Vec<f64>>,
    pub mixed: Vec<Vec<f64>>,
}

fn band_entry(sub: &[f64], diag: &[f64], sup: &[f64], r: usize, c: usize) -> f64 {
    if c + 1 == r {
        sub[r]
    } else if c == r {
        diag[r]
    } else if c == r + 1 {
        sup[r]
    } else {
        0.0
    }
}

pub fn dense_ops(ops: &SpatialOps<f64>) -> DenseOps {
    let (m1, m2) = (ops.m1, ops.m2);
    let w = m1 + 1;
    let n = w * (m2 + 1);
    let mut a1 = vec![vec![0.0; n]; n];
    let mut a2 = vec![vec![0.0; n]; n];
    let mut mixed = vec![vec![0.0; n]; n];
    for j in 0..=m2 {
        for i in 0..=m1 {
            let r = j * w + i;
            for c_i in 0..=m1 {
                a1[r][j * w + c_i] += band_entry(&ops.a1.sub, &ops.a1.diag, &ops.a1.sup, i, c_i);
            }
            for c_j in 0..=m2 {
                a2[r][c_j * w + i] += band_entry(&ops.a2.sub, &ops.a2.diag, &ops.a2.sup, j, c_j);
            }
            for c_j in 0..=m2 {
                let f2 = band_entry(
                    &ops.mixed.f2.sub,
                    &ops.mixed.f2.diag,
                    &ops.mixed.f2.sup,
                    j,
                    c_j,
                );
                if f2 == 0.0 {
                    continue;
                }
                for c_i in 0..=m1 {
                    let f1 = band_entry(
                        &ops.mixed.f1.sub,
                        &ops.mixed.f1.diag,
                        &ops.mixed.f1.sup,
                        i,
                        c_i,
                    );
                    mixed[r][c_j * w + c_i] += ops.mixed.coeff * f1 * f2;
                }
            }
        }
    }
    DenseOps { n, a1, a2, mixed }
}

/// Dense `A^(J)` by applying the reference jump evaluation to unit vectors.
pub fn dense_jump(problem: &Pide2d<f64>) -> Vec<Vec<f64>> {
    let n = problem.num_points();
    let mut cols = Vec::with_capacity(n);
    for k in 0..n {
        let mut e = GridFunction::zeros(&problem.grid);
        e.as_mut_slice()[k] = 1.0;
        let col = kou2d::jumpint::apply_jump_naive(&problem.jump, &e).unwrap();
        cols.push(col.into_values());
    }
    // transpose columns into rows
    let mut rows = vec![vec![0.0; n]; n];
    for (c, col) in cols.iter().enumerate() {
        for r in 0..n {
            rows[r][c] = col[r];
        }
    }
    rows
}

pub fn mat_vec(m: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
    m.iter()
        .map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum())
        .collect()
}

pub fn params_without_jumps(mut p: KouParams<f64>) -> KouParams<f64> {
    p.lambda = 0.0;
    p
}

/// Runs one main step of `scheme` on the scalar test equation with `Δt = 1`
/// and compares it against the scheme's amplification formula. Returns the
/// worst relative error over `samples` seeded eigenvalue quadruples.
pub fn scheme_vs_stability_function(scheme: Scheme, samples: usize, seed: u64) -> f64 {
    let mut rng = StdRng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    let dt = C64::new(1.0, 0.0);
    for _ in 0..samples {
        // Left-half-plane magnitudes of moderate size; w0 small like λΔt.
        let mut draw = |scale: f64| -> C64 {
            let r = rng.gen_range(1e-2..scale);
            let phi = rng.gen_range(0.5 * std::f64::consts::PI..1.5 * std::f64::consts::PI);
            C64::from_polar(r, phi)
        };
        let (z0, z1, z2) = (draw(10.0), draw(10.0), draw(10.0));
        let w0 = C64::from_polar(
            rng.gen_range(0.0..0.1),
            rng.gen_range(0.0..std::f64::consts::TAU),
        );
        let w = z0 + z1 + z2;
        let mut sys = ScalarTestEq::new(z0, z1, z2, w0);
        let a = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)); // V^{n-2}
        let b = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)); // V^{n-1}
        let (got, expect) = match scheme {
            Scheme::Cnfe => {
                sys.factor_cn(C64::new(0.5, 0.0)).unwrap();
                let v = step_cnfe(&mut sys, dt, &[b]).unwrap()[0];
                (v, stab_cnfe(w, w0).unwrap() * b)
            }
            Scheme::Cnfi => {
                sys.factor_cn(C64::new(0.5, 0.0)).unwrap();
                let v = step_cnfi(&mut sys, dt, 2, &[b]).unwrap()[0];
                (v, stab_cnfi(w, w0, 2).unwrap() * b)
            }
            Scheme::Ietr => {
                sys.factor_cn(C64::new(0.5, 0.0)).unwrap();
                let v = step_ietr(&mut sys, dt, &[b]).unwrap()[0];
                (v, stab_ietr(w, w0).unwrap() * b)
            }
            Scheme::Cnab => {
                sys.factor_cn(C64::new(0.5, 0.0)).unwrap();
                let v = step_cnab(&mut sys, dt, &[b], &[a]).unwrap()[0];
                let pair = stab_cnab(w, w0).unwrap();
                (v, pair.r1 * b + pair.r0 * a)
            }
            Scheme::Mcs => {
                let theta = 1.0 / 3.0;
                sys.factor_dir(C64::new(theta, 0.0)).unwrap();
                let v = step_mcs(&mut sys, dt, theta, &[b]).unwrap()[0];
                (v, stab_mcs(z0, z1, z2, w0, theta).unwrap() * b)
            }
            Scheme::Mcs2 => {
                let theta = 1.0 / 3.0;
                sys.factor_dir(C64::new(theta, 0.0)).unwrap();
                let v = step_mcs2(&mut sys, dt, theta, &[b], &[a]).unwrap()[0];
                let pair = stab_mcs2(z0, z1, z2, w0, theta).unwrap();
                (v, pair.r1 * b + pair.r0 * a)
            }
            Scheme::Sc2a => {
                let theta = 0.75;
                sys.factor_dir(C64::new(theta, 0.0)).unwrap();
                let v = step_sc2a(&mut sys, dt, theta, &[b], &[a]).unwrap()[0];
                let pair = stab_sc2a(z0, z1, z2, w0, theta).unwrap();
                (v, pair.r1 * b + pair.r0 * a)
            }
        };
        let rel = (got - expect).norm() / expect.norm().max(1e-6);
        worst = worst.max(rel);
    }
    worst
}

/// Startup consistency used by a few suites: IMEX Euler against a dense
/// direct evaluation.
pub fn imex_euler_dense_check(problem: &mut Pide2d<f64>, dt: f64) -> (Vec<f64>, Vec<f64>) {
    use kou2d::linsolve::dense_solve;
    let n = problem.num_points();
    let v0 = problem.initial_condition();
    let dense = dense_ops(&problem.ops);
    let jump = dense_jump(problem);
    let mut sys_mat = vec![vec![0.0; n]; n];
    for r in 0..n {
        for c in 0..n {
            sys_mat[r][c] = -0.5 * dt * (dense.a1[r][c] + dense.a2[r][c] + dense.mixed[r][c]);
        }
        sys_mat[r][r] += 1.0;
    }
    let jv = mat_vec(&jump, v0.as_slice());
    let rhs: Vec<f64> = (0..n)
        .map(|k| v0.as_slice()[k] + 0.5 * dt * jv[k])
        .collect();
    let v_half = dense_solve(&sys_mat, &rhs).unwrap();
    let jv = mat_vec(&jump, &v_half);
    let rhs: Vec<f64> = (0..n).map(|k| v_half[k] + 0.5 * dt * jv[k]).collect();
    let v1_dense = dense_solve(&sys_mat, &rhs).unwrap();

    problem.cn_tol = 1e-14;
    problem.factor_cn(0.5 * dt).unwrap();
    let v1 = imex_euler_start(problem, dt, v0.as_slice()).unwrap();
    (v1, v1_dense)
}
