//! The seven IMEX/ADI operator splitting time steppers.
//!
//! Every scheme treats the PDE part implicitly (in full or per direction)
//! and the jump integral explicitly. The stage recurrences are written
//! against [`SplitSystem`], so the same stepping code runs on the assembled
//! two-dimensional problem and on the scalar linear test equation used by
//! the stability checks.

use crate::linsolve::LinsolveError;
use crate::scalar::StageScalar;
use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum StepError {
    #[error("invalid scheme configuration: {0}")]
    InvalidSpec(String),
    #[error(transparent)]
    Linsolve(#[from] LinsolveError),
}

/// Operator actions and implicit solves the steppers need.
///
/// `acc_*` methods accumulate (`out += A v`). The `factor_*` methods fix the
/// shift used by the subsequent solves: `factor_dir(θΔt)` prepares
/// `(I − θΔt A_k)` for both directions, `factor_cn(½Δt)` prepares
/// `(I − ½Δt A^(D))`.
pub trait SplitSystem<T: StageScalar> {
    fn len(&self) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `out += A_1 v`.
    fn acc_dir1(&mut self, v: &[T], out: &mut [T]);
    /// `out += A_2 v`.
    fn acc_dir2(&mut self, v: &[T], out: &mut [T]);
    /// `out += A^(M) v`.
    fn acc_mixed(&mut self, v: &[T], out: &mut [T]);
    /// `out += A^(J) v`.
    fn acc_jump(&mut self, v: &[T], out: &mut [T]);

    fn factor_dir(&mut self, theta_dt: T) -> Result<(), StepError>;
    fn solve_dir1(&mut self, rhs: &mut [T]) -> Result<(), StepError>;
    fn solve_dir2(&mut self, rhs: &mut [T]) -> Result<(), StepError>;
    fn factor_cn(&mut self, half_dt: T) -> Result<(), StepError>;
    /// Solves `(I − ½Δt A^(D)) out = rhs` starting from `guess`.
    fn solve_cn(&mut self, rhs: &[T], guess: &[T], out: &mut [T]) -> Result<(), StepError>;
}

/// The seven operator splitting schemes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    /// Crank–Nicolson PDE part, forward-Euler integral (order 1).
    Cnfe,
    /// Crank–Nicolson with fixed-point iteration on the integral.
    Cnfi,
    /// Implicit-explicit trapezoidal rule.
    Ietr,
    /// Crank–Nicolson with two-step Adams–Bashforth integral.
    Cnab,
    /// Modified Craig–Sneyd ADI scheme, explicit-trapezoidal integral.
    Mcs,
    /// MCS with two-step Adams–Bashforth integral.
    Mcs2,
    /// Stabilizing-correction two-step Adams scheme.
    Sc2a,
}

impl Scheme {
    pub const ALL: [Scheme; 7] = [
        Scheme::Cnfe,
        Scheme::Cnfi,
        Scheme::Ietr,
        Scheme::Cnab,
        Scheme::Mcs,
        Scheme::Mcs2,
        Scheme::Sc2a,
    ];

    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "cnfe" => Some(Self::Cnfe),
            "cnfi" => Some(Self::Cnfi),
            "ietr" => Some(Self::Ietr),
            "cnab" => Some(Self::Cnab),
            "mcs" => Some(Self::Mcs),
            "mcs2" => Some(Self::Mcs2),
            "sc2a" => Some(Self::Sc2a),
            _ => None,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Cnfe => "cnfe",
            Self::Cnfi => "cnfi",
            Self::Ietr => "ietr",
            Self::Cnab => "cnab",
            Self::Mcs => "mcs",
            Self::Mcs2 => "mcs2",
            Self::Sc2a => "sc2a",
        }
    }

    /// ADI schemes solve tridiagonal stages; the rest solve the full
    /// Crank–Nicolson system.
    pub fn is_adi(&self) -> bool {
        matches!(self, Self::Mcs | Self::Mcs2 | Self::Sc2a)
    }

    pub fn is_two_step(&self) -> bool {
        matches!(self, Self::Cnab | Self::Mcs2 | Self::Sc2a)
    }

    /// Default splitting parameter where the scheme has one.
    pub fn default_theta(&self) -> f64 {
        match self {
            Self::Mcs | Self::Mcs2 => 1.0 / 3.0,
            Self::Sc2a => 0.75,
            _ => 0.0,
        }
    }
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Per-scheme step count `N'` for a fair work comparison at base count `N`:
/// schemes with cheaper steps take more of them.
pub fn fair_steps(scheme: Scheme, n: usize) -> usize {
    match scheme {
        Scheme::Cnfi | Scheme::Mcs => n,
        Scheme::Ietr | Scheme::Mcs2 => 3 * n / 2,
        Scheme::Cnfe | Scheme::Cnab | Scheme::Sc2a => 2 * n,
    }
}

/// A scheme together with its splitting parameter, fixed-point iteration
/// count and step counts.
#[derive(Debug, Clone, Copy)]
pub struct SchemeSpec {
    pub scheme: Scheme,
    pub theta: f64,
    /// Fixed-point sweeps of the CNFI scheme.
    pub fp_iters: usize,
    pub n: usize,
    n_prime: usize,
}

impl SchemeSpec {
    /// Applies the fair-comparison rule to the base step count `n`.
    pub fn new(scheme: Scheme, n: usize) -> Self {
        Self {
            scheme,
            theta: scheme.default_theta(),
            fp_iters: 2,
            n,
            n_prime: fair_steps(scheme, n),
        }
    }

    /// Uses exactly `n_prime` steps, bypassing the fair-comparison rule.
    pub fn with_steps(scheme: Scheme, n_prime: usize) -> Self {
        Self {
            scheme,
            theta: scheme.default_theta(),
            fp_iters: 2,
            n: n_prime,
            n_prime,
        }
    }

    pub fn theta(mut self, theta: f64) -> Self {
        self.theta = theta;
        self
    }

    pub fn fp_iters(mut self, l: usize) -> Self {
        self.fp_iters = l;
        self
    }

    pub fn n_prime(&self) -> usize {
        self.n_prime
    }

    fn validate(&self) -> Result<(), StepError> {
        if self.n_prime < 1 {
            return Err(StepError::InvalidSpec(
                "step count must be at least 1".into(),
            ));
        }
        if self.scheme.is_adi() && !(self.theta > 0.0) {
            return Err(StepError::InvalidSpec(format!(
                "theta must be positive, got {}",
                self.theta
            )));
        }
        if self.scheme == Scheme::Cnfi && self.fp_iters < 1 {
            return Err(StepError::InvalidSpec(
                "CNFI needs at least one iteration".into(),
            ));
        }
        Ok(())
    }
}

/// Time grid `t_n = n·Δt` with `Δt = T/N'`.
#[derive(Debug, Clone, Copy)]
pub struct TimeGrid {
    pub dt: f64,
    pub steps: usize,
}

impl TimeGrid {
    pub fn new(horizon: f64, steps: usize) -> Self {
        Self {
            dt: horizon / steps as f64,
            steps,
        }
    }

    pub fn t(&self, n: usize) -> f64 {
        n as f64 * self.dt
    }
}

/// Preallocated stage vectors; nothing below allocates per step.
struct Workspace<T> {
    dird: Vec<T>,
    jumpd: Vec<T>,
    mixd: Vec<T>,
    stage: Vec<T>,
    rhs: Vec<T>,
    delta: Vec<T>,
    t1: Vec<T>,
    t2: Vec<T>,
}

impl<T: StageScalar> Workspace<T> {
    fn new(n: usize) -> Self {
        Self {
            dird: vec![T::zero(); n],
            jumpd: vec![T::zero(); n],
            mixd: vec![T::zero(); n],
            stage: vec![T::zero(); n],
            rhs: vec![T::zero(); n],
            delta: vec![T::zero(); n],
            t1: vec![T::zero(); n],
            t2: vec![T::zero(); n],
        }
    }
}

fn fill_zero<T: StageScalar>(v: &mut [T]) {
    v.fill(T::zero());
}

/// `out = A^(D) v` gathered from the three constituents.
fn apply_d<T: StageScalar, S: SplitSystem<T>>(sys: &mut S, v: &[T], out: &mut [T]) {
    fill_zero(out);
    sys.acc_dir1(v, out);
    sys.acc_dir2(v, out);
    sys.acc_mixed(v, out);
}

/// Startup method of the IMEX schemes: two implicit half steps with the
/// integral taken explicitly,
/// `(I − ½Δt A^(D)) V^{1/2} = V^0 + ½Δt A^(J) V^0` and the same map again.
fn imex_euler_start_into<T: StageScalar, S: SplitSystem<T>>(
    sys: &mut S,
    dt: T,
    v0: &[T],
    ws: &mut Workspace<T>,
    out: &mut [T],
) -> Result<(), StepError> {
    let half_dt = T::from_real(0.5) * dt;
    fill_zero(&mut ws.jumpd);
    sys.acc_jump(v0, &mut ws.jumpd);
    for i in 0..v0.len() {
        ws.rhs[i] = v0[i] + half_dt * ws.jumpd[i];
    }
    let (rhs, stage) = (&ws.rhs, &mut ws.stage);
    sys.solve_cn(rhs, v0, stage)?;
    fill_zero(&mut ws.jumpd);
    sys.acc_jump(&ws.stage, &mut ws.jumpd);
    for i in 0..v0.len() {
        ws.rhs[i] = ws.stage[i] + half_dt * ws.jumpd[i];
    }
    sys.solve_cn(&ws.rhs, &ws.stage, out)?;
    Ok(())
}

/// One CNFE step:
/// `(I − ½Δt A^(D)) V^n = (I + ½Δt A^(D)) V^{n-1} + Δt A^(J) V^{n-1}`.
fn step_cnfe_into<T: StageScalar, S: SplitSystem<T>>(
    sys: &mut S,
    dt: T,
    v_prev: &[T],
    ws: &mut Workspace<T>,
    out: &mut [T],
) -> Result<(), StepError> {
    let half_dt = T::from_real(0.5) * dt;
    apply_d(sys, v_prev, &mut ws.dird);
    fill_zero(&mut ws.jumpd);
    sys.acc_jump(v_prev, &mut ws.jumpd);
    for i in 0..v_prev.len() {
        ws.rhs[i] = v_prev[i] + half_dt * ws.dird[i] + dt * ws.jumpd[i];
    }
    sys.solve_cn(&ws.rhs, v_prev, out)?;
    Ok(())
}

/// One CNFI step: `l` fixed-point sweeps
/// `(I − ½Δt A^(D)) Y_k = (I + ½Δt A^(D)) V^{n-1} + ½Δt A^(J)(Y_{k-1} + V^{n-1})`
/// with `Y_0 = V^{n-1}`; each solve starts from the previous iterate.
fn step_cnfi_into<T: StageScalar, S: SplitSystem<T>>(
    sys: &mut S,
    dt: T,
    l: usize,
    v_prev: &[T],
    ws: &mut Workspace<T>,
    out: &mut [T],
) -> Result<(), StepError> {
    let half_dt = T::from_real(0.5) * dt;
    let n = v_prev.len();
    apply_d(sys, v_prev, &mut ws.dird);
    for i in 0..n {
        ws.stage[i] = v_prev[i] + half_dt * ws.dird[i];
    }
    out.copy_from_slice(v_prev); // Y_0
    for _ in 0..l {
        for i in 0..n {
            ws.delta[i] = out[i] + v_prev[i];
        }
        fill_zero(&mut ws.jumpd);
        sys.acc_jump(&ws.delta, &mut ws.jumpd);
        for i in 0..n {
            ws.rhs[i] = ws.stage[i] + half_dt * ws.jumpd[i];
        }
        sys.solve_cn(&ws.rhs, out, &mut ws.t1)?;
        out.copy_from_slice(&ws.t1);
    }
    Ok(())
}

/// One IETR step: explicit Euler predictor, explicit-trapezoidal integral
/// correction, implicit-trapezoidal PDE correction.
fn step_ietr_into<T: StageScalar, S: SplitSystem<T>>(
    sys: &mut S,
    dt: T,
    v_prev: &[T],
    ws: &mut Workspace<T>,
    out: &mut [T],
) -> Result<(), StepError> {
    let half_dt = T::from_real(0.5) * dt;
    let n = v_prev.len();
    apply_d(sys, v_prev, &mut ws.dird);
    fill_zero(&mut ws.jumpd);
    sys.acc_jump(v_prev, &mut ws.jumpd);
    // Y_0 = V^{n-1} + Δt (A^(D) + A^(J)) V^{n-1}
    for i in 0..n {
        ws.stage[i] = v_prev[i] + dt * (ws.dird[i] + ws.jumpd[i]);
        ws.delta[i] = ws.stage[i] - v_prev[i];
    }
    fill_zero(&mut ws.t1);
    sys.acc_jump(&ws.delta, &mut ws.t1);
    // (I − ½Δt A^(D)) Y_1 = Ŷ_0 − ½Δt A^(D) V^{n-1}
    for i in 0..n {
        ws.rhs[i] = ws.stage[i] + half_dt * ws.t1[i] - half_dt * ws.dird[i];
    }
    sys.solve_cn(&ws.rhs, v_prev, out)?;
    Ok(())
}

/// One CNAB step:
/// `(I − ½Δt A^(D)) V^n = (I + ½Δt A^(D)) V^{n-1} + ½Δt A^(J)(3V^{n-1} − V^{n-2})`.
fn step_cnab_into<T: StageScalar, S: SplitSystem<T>>(
    sys: &mut S,
    dt: T,
    v_prev: &[T],
    v_prev2: &[T],
    ws: &mut Workspace<T>,
    out: &mut [T],
) -> Result<(), StepError> {
    let half_dt = T::from_real(0.5) * dt;
    let three = T::from_real(3.0);
    let n = v_prev.len();
    apply_d(sys, v_prev, &mut ws.dird);
    for i in 0..n {
        ws.delta[i] = three * v_prev[i] - v_prev2[i];
    }
    fill_zero(&mut ws.jumpd);
    sys.acc_jump(&ws.delta, &mut ws.jumpd);
    for i in 0..n {
        ws.rhs[i] = v_prev[i] + half_dt * (ws.dird[i] + ws.jumpd[i]);
    }
    sys.solve_cn(&ws.rhs, v_prev, out)?;
    Ok(())
}

/// One MCS step. The two explicit correction stages are merged, so the
/// integral operator is applied twice per step:
/// `Ỹ_0 = Y_0 + Δt(½ A^(M) + (½−θ)(A_1+A_2) + ½ A^(J)) (Y_2 − V^{n-1})`.
fn step_mcs_into<T: StageScalar, S: SplitSystem<T>>(
    sys: &mut S,
    dt: T,
    theta: f64,
    v_prev: &[T],
    ws: &mut Workspace<T>,
    out: &mut [T],
) -> Result<(), StepError> {
    let n = v_prev.len();
    let th = T::from_real(theta);
    let theta_dt = th * dt;
    let half = T::from_real(0.5);
    let half_minus_theta = T::from_real(0.5 - theta);
    // Y_0 = V + Δt (A^(D) + A^(J)) V
    fill_zero(&mut ws.stage);
    sys.acc_dir1(v_prev, &mut ws.stage);
    sys.acc_dir2(v_prev, &mut ws.stage);
    sys.acc_mixed(v_prev, &mut ws.stage);
    sys.acc_jump(v_prev, &mut ws.stage);
    for i in 0..n {
        ws.stage[i] = v_prev[i] + dt * ws.stage[i];
    }
    // Stabilizing corrections Y_1, Y_2.
    fill_zero(&mut ws.t1);
    sys.acc_dir1(v_prev, &mut ws.t1);
    fill_zero(&mut ws.t2);
    sys.acc_dir2(v_prev, &mut ws.t2);
    for i in 0..n {
        ws.rhs[i] = ws.stage[i] - theta_dt * ws.t1[i];
    }
    sys.solve_dir1(&mut ws.rhs)?;
    for i in 0..n {
        ws.rhs[i] = ws.rhs[i] - theta_dt * ws.t2[i];
    }
    sys.solve_dir2(&mut ws.rhs)?;
    // Merged explicit corrections on d = Y_2 − V.
    for i in 0..n {
        ws.delta[i] = ws.rhs[i] - v_prev[i];
    }
    fill_zero(&mut ws.mixd);
    sys.acc_mixed(&ws.delta, &mut ws.mixd);
    fill_zero(&mut ws.dird);
    sys.acc_dir1(&ws.delta, &mut ws.dird);
    sys.acc_dir2(&ws.delta, &mut ws.dird);
    fill_zero(&mut ws.jumpd);
    sys.acc_jump(&ws.delta, &mut ws.jumpd);
    for i in 0..n {
        ws.stage[i] = ws.stage[i]
            + dt * (half * ws.mixd[i] + half_minus_theta * ws.dird[i] + half * ws.jumpd[i]);
    }
    // Final stabilizing corrections.
    for i in 0..n {
        ws.rhs[i] = ws.stage[i] - theta_dt * ws.t1[i];
    }
    sys.solve_dir1(&mut ws.rhs)?;
    for i in 0..n {
        ws.rhs[i] = ws.rhs[i] - theta_dt * ws.t2[i];
    }
    sys.solve_dir2(&mut ws.rhs)?;
    out.copy_from_slice(&ws.rhs);
    Ok(())
}

/// One MCS2 step: like MCS but the integral enters once, in two-step
/// Adams–Bashforth form `½Δt A^(J)(3V^{n-1} − V^{n-2})`.
fn step_mcs2_into<T: StageScalar, S: SplitSystem<T>>(
    sys: &mut S,
    dt: T,
    theta: f64,
    v_prev: &[T],
    v_prev2: &[T],
    ws: &mut Workspace<T>,
    out: &mut [T],
) -> Result<(), StepError> {
    let n = v_prev.len();
    let th = T::from_real(theta);
    let theta_dt = th * dt;
    let half_dt = T::from_real(0.5) * dt;
    let three = T::from_real(3.0);
    let half_minus_theta = T::from_real(0.5 - theta);
    // X_0 = V + Δt A^(D) V ; Y_0 = X_0 + ½Δt A^(J)(3V − V_prev2)
    apply_d(sys, v_prev, &mut ws.dird);
    for i in 0..n {
        ws.delta[i] = three * v_prev[i] - v_prev2[i];
    }
    fill_zero(&mut ws.jumpd);
    sys.acc_jump(&ws.delta, &mut ws.jumpd);
    for i in 0..n {
        ws.stage[i] = v_prev[i] + dt * ws.dird[i] + half_dt * ws.jumpd[i];
    }
    fill_zero(&mut ws.t1);
    sys.acc_dir1(v_prev, &mut ws.t1);
    fill_zero(&mut ws.t2);
    sys.acc_dir2(v_prev, &mut ws.t2);
    for i in 0..n {
        ws.rhs[i] = ws.stage[i] - theta_dt * ws.t1[i];
    }
    sys.solve_dir1(&mut ws.rhs)?;
    for i in 0..n {
        ws.rhs[i] = ws.rhs[i] - theta_dt * ws.t2[i];
    }
    sys.solve_dir2(&mut ws.rhs)?;
    // Ỹ_0 = Y_0 + θΔt A^(M) d + (½−θ)Δt A^(D) d with d = Y_2 − V.
    for i in 0..n {
        ws.delta[i] = ws.rhs[i] - v_prev[i];
    }
    fill_zero(&mut ws.mixd);
    sys.acc_mixed(&ws.delta, &mut ws.mixd);
    fill_zero(&mut ws.dird);
    sys.acc_dir1(&ws.delta, &mut ws.dird);
    sys.acc_dir2(&ws.delta, &mut ws.dird);
    for i in 0..n {
        let ad = ws.dird[i] + ws.mixd[i];
        ws.stage[i] = ws.stage[i] + theta_dt * ws.mixd[i] + dt * half_minus_theta * ad;
    }
    for i in 0..n {
        ws.rhs[i] = ws.stage[i] - theta_dt * ws.t1[i];
    }
    sys.solve_dir1(&mut ws.rhs)?;
    for i in 0..n {
        ws.rhs[i] = ws.rhs[i] - theta_dt * ws.t2[i];
    }
    sys.solve_dir2(&mut ws.rhs)?;
    out.copy_from_slice(&ws.rhs);
    Ok(())
}

/// One SC2A step: two-step Adams extrapolations feed a single explicit
/// stage, then two stabilizing corrections. Coefficients
/// `(b̂₁, b̂₂) = (3/2, −1/2)` and `(b̌₁, b̌₂) = (3/2−θ, θ−1/2)`.
fn step_sc2a_into<T: StageScalar, S: SplitSystem<T>>(
    sys: &mut S,
    dt: T,
    theta: f64,
    v_prev: &[T],
    v_prev2: &[T],
    ws: &mut Workspace<T>,
    out: &mut [T],
) -> Result<(), StepError> {
    let n = v_prev.len();
    let theta_dt = T::from_real(theta) * dt;
    let (bh1, bh2) = (T::from_real(1.5), T::from_real(-0.5));
    let (bc1, bc2) = (T::from_real(1.5 - theta), T::from_real(theta - 0.5));
    for i in 0..n {
        ws.delta[i] = bh1 * v_prev[i] + bh2 * v_prev2[i];
        ws.rhs[i] = bc1 * v_prev[i] + bc2 * v_prev2[i];
    }
    fill_zero(&mut ws.mixd);
    sys.acc_mixed(&ws.delta, &mut ws.mixd);
    sys.acc_jump(&ws.delta, &mut ws.mixd);
    fill_zero(&mut ws.dird);
    sys.acc_dir1(&ws.rhs, &mut ws.dird);
    sys.acc_dir2(&ws.rhs, &mut ws.dird);
    for i in 0..n {
        ws.stage[i] = v_prev[i] + dt * (ws.mixd[i] + ws.dird[i]);
    }
    fill_zero(&mut ws.t1);
    sys.acc_dir1(v_prev, &mut ws.t1);
    fill_zero(&mut ws.t2);
    sys.acc_dir2(v_prev, &mut ws.t2);
    for i in 0..n {
        ws.rhs[i] = ws.stage[i] - theta_dt * ws.t1[i];
    }
    sys.solve_dir1(&mut ws.rhs)?;
    for i in 0..n {
        ws.rhs[i] = ws.rhs[i] - theta_dt * ws.t2[i];
    }
    sys.solve_dir2(&mut ws.rhs)?;
    out.copy_from_slice(&ws.rhs);
    Ok(())
}

macro_rules! public_step {
    ($(#[$doc:meta])* $name:ident, $inner:ident, ($($arg:ident : $ty:ty),*), ($($pass:expr),*)) => {
        $(#[$doc])*
        pub fn $name<T: StageScalar, S: SplitSystem<T>>(
            sys: &mut S,
            dt: T,
            $($arg: $ty,)*
        ) -> Result<Vec<T>, StepError> {
            let n = sys.len();
            let mut ws = Workspace::new(n);
            let mut out = vec![T::zero(); n];
            $inner(sys, dt, $($pass,)* &mut ws, &mut out)?;
            Ok(out)
        }
    };
}

public_step!(
    /// Startup step `V^0 → V^1` by IMEX Euler. Requires `factor_cn(½Δt)`.
    imex_euler_start, imex_euler_start_into, (v0: &[T]), (v0)
);
public_step!(
    /// One CNFE step. Requires `factor_cn(½Δt)`.
    step_cnfe, step_cnfe_into, (v_prev: &[T]), (v_prev)
);
public_step!(
    /// One CNFI step with `l` fixed-point sweeps. Requires `factor_cn(½Δt)`.
    step_cnfi, step_cnfi_into, (l: usize, v_prev: &[T]), (l, v_prev)
);
public_step!(
    /// One IETR step. Requires `factor_cn(½Δt)`.
    step_ietr, step_ietr_into, (v_prev: &[T]), (v_prev)
);
public_step!(
    /// One CNAB step. Requires `factor_cn(½Δt)`.
    step_cnab, step_cnab_into, (v_prev: &[T], v_prev2: &[T]), (v_prev, v_prev2)
);
public_step!(
    /// One MCS step. Requires `factor_dir(θΔt)`.
    step_mcs, step_mcs_into, (theta: f64, v_prev: &[T]), (theta, v_prev)
);
public_step!(
    /// One MCS2 step. Requires `factor_dir(θΔt)`.
    step_mcs2, step_mcs2_into,
    (theta: f64, v_prev: &[T], v_prev2: &[T]), (theta, v_prev, v_prev2)
);
public_step!(
    /// One SC2A step. Requires `factor_dir(θΔt)`.
    step_sc2a, step_sc2a_into,
    (theta: f64, v_prev: &[T], v_prev2: &[T]), (theta, v_prev, v_prev2)
);

/// Advances `V^0` to `V^{N'}` over `[0, horizon]`.
///
/// The IMEX schemes define `V^1` by IMEX Euler; MCS runs from the first
/// step; MCS2 and SC2A take `V^1` from one MCS step with `θ = 1/3`. Startup
/// consumes one of the `N'` steps.
pub fn run<T: StageScalar, S: SplitSystem<T>>(
    spec: &SchemeSpec,
    sys: &mut S,
    v0: &[T],
    horizon: f64,
) -> Result<Vec<T>, StepError> {
    spec.validate()?;
    let n = sys.len();
    if v0.len() != n {
        return Err(StepError::InvalidSpec(format!(
            "initial vector has {} values, system has {n}",
            v0.len()
        )));
    }
    let n_prime = spec.n_prime();
    let dt = T::from_real(horizon / n_prime as f64);
    let half_dt = T::from_real(0.5) * dt;
    let mut ws = Workspace::new(n);
    let mut prev = v0.to_vec();
    let mut curr = vec![T::zero(); n];
    let mut next = vec![T::zero(); n];

    match spec.scheme {
        Scheme::Cnfe | Scheme::Cnfi | Scheme::Ietr | Scheme::Cnab => {
            sys.factor_cn(half_dt)?;
            imex_euler_start_into(sys, dt, &prev, &mut ws, &mut curr)?;
            for _ in 2..=n_prime {
                match spec.scheme {
                    Scheme::Cnfe => step_cnfe_into(sys, dt, &curr, &mut ws, &mut next)?,
                    Scheme::Cnfi => {
                        step_cnfi_into(sys, dt, spec.fp_iters, &curr, &mut ws, &mut next)?
                    }
                    Scheme::Ietr => step_ietr_into(sys, dt, &curr, &mut ws, &mut next)?,
                    Scheme::Cnab => step_cnab_into(sys, dt, &curr, &prev, &mut ws, &mut next)?,
                    _ => unreachable!(),
                }
                std::mem::swap(&mut prev, &mut curr);
                std::mem::swap(&mut curr, &mut next);
            }
            Ok(curr)
        }
        Scheme::Mcs => {
            sys.factor_dir(T::from_real(spec.theta) * dt)?;
            curr.copy_from_slice(&prev);
            for _ in 1..=n_prime {
                step_mcs_into(sys, dt, spec.theta, &curr, &mut ws, &mut next)?;
                std::mem::swap(&mut curr, &mut next);
            }
            Ok(curr)
        }
        Scheme::Mcs2 | Scheme::Sc2a => {
            let theta_start = 1.0 / 3.0;
            sys.factor_dir(T::from_real(theta_start) * dt)?;
            step_mcs_into(sys, dt, theta_start, &prev, &mut ws, &mut curr)?;
            if n_prime == 1 {
                return Ok(curr);
            }
            sys.factor_dir(T::from_real(spec.theta) * dt)?;
            for _ in 2..=n_prime {
                match spec.scheme {
                    Scheme::Mcs2 => {
                        step_mcs2_into(sys, dt, spec.theta, &curr, &prev, &mut ws, &mut next)?
                    }
                    Scheme::Sc2a => {
                        step_sc2a_into(sys, dt, spec.theta, &curr, &prev, &mut ws, &mut next)?
                    }
                    _ => unreachable!(),
                }
                std::mem::swap(&mut prev, &mut curr);
                std::mem::swap(&mut curr, &mut next);
            }
            Ok(curr)
        }
    }
}

/// The scalar linear test equation `V'(t) = (μ0 + μ1 + μ2 + λ0) V(t)` as a
/// length-1 splitting system, with `μ0, μ1, μ2, λ0` standing in for
/// eigenvalues of `A^(M)`, `A_1`, `A_2`, `A^(J)`.
#[derive(Debug, Clone)]
pub struct ScalarTestEq {
    pub mu0: Complex64,
    pub mu1: Complex64,
    pub mu2: Complex64,
    pub lam0: Complex64,
    den1: Complex64,
    den2: Complex64,
    den_cn: Complex64,
}

impl ScalarTestEq {
    pub fn new(mu0: Complex64, mu1: Complex64, mu2: Complex64, lam0: Complex64) -> Self {
        let one = Complex64::new(1.0, 0.0);
        Self {
            mu0,
            mu1,
            mu2,
            lam0,
            den1: one,
            den2: one,
            den_cn: one,
        }
    }
}

impl SplitSystem<Complex64> for ScalarTestEq {
    fn len(&self) -> usize {
        1
    }

    fn acc_dir1(&mut self, v: &[Complex64], out: &mut [Complex64]) {
        out[0] += self.mu1 * v[0];
    }

    fn acc_dir2(&mut self, v: &[Complex64], out: &mut [Complex64]) {
        out[0] += self.mu2 * v[0];
    }

    fn acc_mixed(&mut self, v: &[Complex64], out: &mut [Complex64]) {
        out[0] += self.mu0 * v[0];
    }

    fn acc_jump(&mut self, v: &[Complex64], out: &mut [Complex64]) {
        out[0] += self.lam0 * v[0];
    }

    fn factor_dir(&mut self, theta_dt: Complex64) -> Result<(), StepError> {
        let one = Complex64::new(1.0, 0.0);
        self.den1 = one - theta_dt * self.mu1;
        self.den2 = one - theta_dt * self.mu2;
        if self.den1.norm() == 0.0 || self.den2.norm() == 0.0 {
            return Err(LinsolveError::ZeroPivot { row: 0 }.into());
        }
        Ok(())
    }

    fn solve_dir1(&mut self, rhs: &mut [Complex64]) -> Result<(), StepError> {
        rhs[0] /= self.den1;
        Ok(())
    }

    fn solve_dir2(&mut self, rhs: &mut [Complex64]) -> Result<(), StepError> {
        rhs[0] /= self.den2;
        Ok(())
    }

    fn factor_cn(&mut self, half_dt: Complex64) -> Result<(), StepError> {
        let one = Complex64::new(1.0, 0.0);
        self.den_cn = one - half_dt * (self.mu0 + self.mu1 + self.mu2);
        if self.den_cn.norm() == 0.0 {
            return Err(LinsolveError::ZeroPivot { row: 0 }.into());
        }
        Ok(())
    }

    fn solve_cn(
        &mut self,
        rhs: &[Complex64],
        _guess: &[Complex64],
        out: &mut [Complex64],
    ) -> Result<(), StepError> {
        out[0] = rhs[0] / self.den_cn;
        Ok(())
    }
}
