//! The assembled semidiscrete problem: grid, spatial operators, jump
//! coefficients and the solvers behind the implicit stages, bundled as a
//! [`SplitSystem`] the steppers can advance.

use crate::grid::{cell_average_payoff, Grid2d, GridError, GridFunction};
use crate::jumpint::{precompute, JumpCoeffs, JumpError};
use crate::linsolve::{tri_factor, CnSystem, LinsolveError, SolveStats, TriFactor};
use crate::model::{KouParams, ModelError};
use crate::scalar::Scalar;
use crate::spatial::{assemble_operators, SpatialError, SpatialOps};
use crate::steppers::{SplitSystem, StepError};
use thiserror::Error;

/// Default relative-residual tolerance of the iterative solver.
pub const DEFAULT_CN_TOL: f64 = 1e-10;
/// Default iteration cap of the iterative solver.
pub const DEFAULT_CN_MAX_ITER: usize = 1000;

#[derive(Debug, Error)]
pub enum BuildError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Spatial(#[from] SpatialError),
    #[error(transparent)]
    Jump(#[from] JumpError),
}

/// Running solver statistics, surfaced by the CLI in verbose mode.
#[derive(Debug, Clone, Copy, Default)]
pub struct SolverLog {
    pub cn_solves: usize,
    pub cn_iterations: usize,
    pub last: SolveStats,
}

/// The two-dimensional semidiscrete problem `V'(t) = (A^(D) + A^(J)) V(t)`.
#[derive(Debug)]
pub struct Pide2d<T: Scalar> {
    pub params: KouParams<T>,
    pub grid: Grid2d<T>,
    pub ops: SpatialOps<T>,
    pub jump: JumpCoeffs,
    /// Iterative-solver tolerance used when a Crank–Nicolson system is
    /// assembled (relative residual, 2-norm).
    pub cn_tol: f64,
    pub cn_max_iter: usize,
    pub log: SolverLog,
    tri1: Option<TriFactor<T>>,
    tri2: Option<TriFactor<T>>,
    cn: Option<CnSystem<T>>,
    scratch: Vec<T>,
}

impl<T: Scalar> Pide2d<T> {
    /// Builds grid, operators and jump coefficients with the default
    /// stretch parameter `d = K/10`.
    pub fn new(params: KouParams<T>, m1: usize, m2: usize) -> Result<Self, BuildError> {
        params.validate()?;
        let grid = Grid2d::build(&params, m1, m2)?;
        Self::from_grid(params, grid)
    }

    pub fn from_grid(params: KouParams<T>, grid: Grid2d<T>) -> Result<Self, BuildError> {
        let ops = assemble_operators(&grid, &params)?;
        let jump = precompute(&grid, &params)?;
        let scratch = vec![T::zero(); grid.num_points()];
        Ok(Self {
            params,
            grid,
            ops,
            jump,
            cn_tol: DEFAULT_CN_TOL,
            cn_max_iter: DEFAULT_CN_MAX_ITER,
            log: SolverLog::default(),
            tri1: None,
            tri2: None,
            cn: None,
            scratch,
        })
    }

    /// The cell-averaged payoff vector `V(0)`.
    pub fn initial_condition(&self) -> GridFunction<T> {
        cell_average_payoff(&self.grid, &self.params)
    }

    pub fn num_points(&self) -> usize {
        self.grid.num_points()
    }
}

impl<T: Scalar> SplitSystem<T> for Pide2d<T> {
    fn len(&self) -> usize {
        self.num_points()
    }

    fn acc_dir1(&mut self, v: &[T], out: &mut [T]) {
        self.ops.acc_a1(v, out);
    }

    fn acc_dir2(&mut self, v: &[T], out: &mut [T]) {
        self.ops.acc_a2(v, out);
    }

    fn acc_mixed(&mut self, v: &[T], out: &mut [T]) {
        self.ops.acc_mixed(v, &mut self.scratch, out);
    }

    fn acc_jump(&mut self, v: &[T], out: &mut [T]) {
        self.jump.accumulate(v, out);
    }

    fn factor_dir(&mut self, theta_dt: T) -> Result<(), StepError> {
        self.tri1 = Some(tri_factor(&self.ops.a1, theta_dt).map_err(StepError::from)?);
        self.tri2 = Some(tri_factor(&self.ops.a2, theta_dt).map_err(StepError::from)?);
        Ok(())
    }

    fn solve_dir1(&mut self, rhs: &mut [T]) -> Result<(), StepError> {
        let f = self.tri1.as_ref().expect("factor_dir before solve_dir1");
        f.solve_axis1(rhs, self.ops.m1, self.ops.m2)
            .map_err(StepError::from)
    }

    fn solve_dir2(&mut self, rhs: &mut [T]) -> Result<(), StepError> {
        let f = self.tri2.as_ref().expect("factor_dir before solve_dir2");
        f.solve_axis2(rhs, self.ops.m1, self.ops.m2)
            .map_err(StepError::from)
    }

    fn factor_cn(&mut self, half_dt: T) -> Result<(), StepError> {
        self.cn = Some(
            CnSystem::assemble(&self.ops, half_dt, self.cn_tol, self.cn_max_iter)
                .map_err(StepError::from)?,
        );
        Ok(())
    }

    fn solve_cn(&mut self, rhs: &[T], guess: &[T], out: &mut [T]) -> Result<(), StepError> {
        let cn = self.cn.as_mut().expect("factor_cn before solve_cn");
        let stats = cn.solve(rhs, guess, out).map_err(StepError::from)?;
        self.log.cn_solves += 1;
        self.log.cn_iterations += stats.iterations;
        self.log.last = stats;
        Ok(())
    }
}

/// Convenience: builds the problem, runs a scheme and returns `V` at the
/// requested horizon together with the problem (for interpolation, Greeks
/// and solver statistics).
pub fn price_surface<T: Scalar>(
    params: KouParams<T>,
    m1: usize,
    m2: usize,
    spec: &crate::steppers::SchemeSpec,
) -> Result<(Pide2d<T>, GridFunction<T>), PriceError> {
    let mut problem = Pide2d::new(params, m1, m2)?;
    let v0 = problem.initial_condition();
    let horizon = params.maturity.wide();
    let values = crate::steppers::run(spec, &mut problem, v0.as_slice(), horizon)?;
    let v = GridFunction::from_values(&problem.grid, values).map_err(BuildError::from)?;
    Ok((problem, v))
}

#[derive(Debug, Error)]
pub enum PriceError {
    #[error(transparent)]
    Build(#[from] BuildError),
    #[error(transparent)]
    Step(#[from] StepError),
}

impl From<LinsolveError> for PriceError {
    fn from(e: LinsolveError) -> Self {
        PriceError::Step(StepError::from(e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ParameterSet, SetLabel};
    use crate::steppers::{Scheme, SchemeSpec};

    #[test]
    fn builds_and_runs_a_small_problem() {
        let p = ParameterSet::by_label(SetLabel::Set1).params;
        let spec = SchemeSpec::new(Scheme::Mcs, 4);
        let (problem, v) = price_surface(p, 12, 12, &spec).unwrap();
        assert_eq!(v.as_slice().len(), problem.num_points());
        for &x in v.as_slice() {
            assert!(x.is_finite());
        }
        // A put surface stays within [0, K] up to the small overshoot a
        // non-positivity-preserving scheme leaves on a coarse grid.
        for &x in v.as_slice() {
            assert!(x >= -1e-3 * p.strike && x <= p.strike * (1.0 + 1e-9));
        }
    }

    #[test]
    fn f32_instantiation_works_end_to_end() {
        let p = ParameterSet::by_label(SetLabel::Set1).params.cast::<f32>();
        let spec = SchemeSpec::new(Scheme::Mcs2, 3);
        let (_, v) = price_surface(p, 10, 10, &spec).unwrap();
        assert!(v.as_slice().iter().all(|x| x.is_finite()));
    }

    #[test]
    fn invalid_params_are_rejected_up_front() {
        let mut p = ParameterSet::by_label(SetLabel::Set1).params;
        p.sigma1 = -1.0;
        assert!(Pide2d::new(p, 8, 8).is_err());
    }
}
