//! Reference solutions, temporal-error measurement, Greeks and off-grid
//! interpolation.
//!
//! Temporal errors are measured in the maximum norm over the grid points
//! strictly inside the region of financial interest `(K/2, 3K/2)²`, against
//! a semidiscrete reference computed by MCS2 with 3000 steps on the same
//! grid (so only the time discretization differs). Greeks come from the
//! same finite-difference weights as the spatial operator; off-grid prices
//! from a tensor-product natural cubic spline.

use crate::grid::{Grid2d, GridFunction};
use crate::model::KouParams;
use crate::pide::{Pide2d, PriceError};
use crate::scalar::Scalar;
use crate::steppers::{run, Scheme, SchemeSpec};
use rayon::prelude::*;
use std::io::{Read, Write};
use std::path::PathBuf;
use thiserror::Error;

/// Step count of the semidiscrete reference solution.
pub const REFERENCE_STEPS: usize = 3000;

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("no grid point lies strictly inside the region of interest")]
    EmptyRoi,
    #[error("spot ({0}, {1}) lies outside the grid domain")]
    OutOfDomain(f64, f64),
    #[error("grid functions live on different grids: {0} vs {1} values")]
    GridMismatch(usize, usize),
    #[error(transparent)]
    Price(#[from] PriceError),
    #[error("reference cache: {0}")]
    Cache(String),
}

/// Open square `(K/2, 3K/2)²` in asset-price space; membership is strict.
#[derive(Debug, Clone, Copy)]
pub struct Roi<T> {
    pub lo: T,
    pub hi: T,
}

impl<T: Scalar> Roi<T> {
    pub fn of_strike(strike: T) -> Self {
        Self {
            lo: T::lit(0.5) * strike,
            hi: T::lit(1.5) * strike,
        }
    }

    #[inline]
    pub fn contains(&self, s1: T, s2: T) -> bool {
        s1 > self.lo && s1 < self.hi && s2 > self.lo && s2 < self.hi
    }
}

/// Maximum absolute difference over grid points strictly inside the ROI.
pub fn e_roi<T: Scalar>(
    v_ref: &GridFunction<T>,
    v: &GridFunction<T>,
    grid: &Grid2d<T>,
    roi: &Roi<T>,
) -> Result<T, AnalysisError> {
    if v_ref.as_slice().len() != v.as_slice().len() {
        return Err(AnalysisError::GridMismatch(
            v_ref.as_slice().len(),
            v.as_slice().len(),
        ));
    }
    let mut best: Option<T> = None;
    for j in 0..=grid.m2() {
        for i in 0..=grid.m1() {
            if roi.contains(grid.g1.point(i), grid.g2.point(j)) {
                let d = (v_ref.get(i, j) - v.get(i, j)).abs();
                best = Some(match best {
                    Some(b) => b.max(d),
                    None => d,
                });
            }
        }
    }
    best.ok_or(AnalysisError::EmptyRoi)
}

/// One entry of a convergence study.
#[derive(Debug, Clone)]
pub struct ConvergenceRecord {
    pub scheme: Scheme,
    pub m: usize,
    pub n: usize,
    pub n_prime: usize,
    pub error: f64,
    pub seconds: f64,
}

/// Least-squares slope of `log error` against `log N` over the records.
pub fn convergence_slope(records: &[ConvergenceRecord]) -> f64 {
    let pts: Vec<(f64, f64)> = records
        .iter()
        .filter(|r| r.error > 0.0)
        .map(|r| ((r.n as f64).ln(), r.error.ln()))
        .collect();
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    -((n * sxy - sx * sy) / (n * sxx - sx * sx))
}

/// Disk cache of reference solutions; 3000-step references are expensive.
///
/// Binary files carry a header `(m1, m2, set-or-hash, scheme, N')` followed
/// by the values as little-endian `f64`.
#[derive(Debug, Clone)]
pub struct ReferenceCache {
    pub dir: PathBuf,
}

const CACHE_MAGIC: &[u8; 8] = b"KOU2DRF1";

impl ReferenceCache {
    /// Honors `KOU2D_CACHE_DIR`, falling back to a per-user temp directory.
    pub fn from_env() -> Self {
        let dir = std::env::var_os("KOU2D_CACHE_DIR")
            .map(PathBuf::from)
            .unwrap_or_else(|| std::env::temp_dir().join("kou2d-cache"));
        Self { dir }
    }

    pub fn at(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into() }
    }

    fn key(params: &KouParams<f64>, m1: usize, m2: usize, scheme: Scheme, steps: usize) -> String {
        // FNV-1a over the parameter bits keeps distinct problems apart.
        let mut h: u64 = 0xcbf29ce484222325;
        let mut eat = |x: f64| {
            for b in x.to_bits().to_le_bytes() {
                h ^= b as u64;
                h = h.wrapping_mul(0x100000001b3);
            }
        };
        for x in [
            params.sigma1,
            params.sigma2,
            params.r,
            params.rho,
            params.lambda,
            params.p1,
            params.p2,
            params.eta_p1,
            params.eta_q1,
            params.eta_p2,
            params.eta_q2,
            params.strike,
            params.maturity,
            params.s_max,
        ] {
            eat(x);
        }
        format!("ref_{h:016x}_m{m1}x{m2}_{}_n{steps}.bin", scheme.as_str())
    }

    fn load(&self, name: &str, expected_len: usize) -> Option<Vec<f64>> {
        let path = self.dir.join(name);
        let mut file = std::fs::File::open(path).ok()?;
        let mut magic = [0u8; 8];
        file.read_exact(&mut magic).ok()?;
        if &magic != CACHE_MAGIC {
            return None;
        }
        let mut head = [0u8; 8];
        file.read_exact(&mut head).ok()?;
        let len = u64::from_le_bytes(head) as usize;
        if len != expected_len {
            return None;
        }
        let mut buf = Vec::with_capacity(len * 8);
        file.read_to_end(&mut buf).ok()?;
        if buf.len() != len * 8 {
            return None;
        }
        Some(
            buf.chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
                .collect(),
        )
    }

    fn store(&self, name: &str, values: &[f64]) -> std::io::Result<()> {
        std::fs::create_dir_all(&self.dir)?;
        let tmp = self.dir.join(format!("{name}.tmp{}", std::process::id()));
        {
            let mut file = std::fs::File::create(&tmp)?;
            file.write_all(CACHE_MAGIC)?;
            file.write_all(&(values.len() as u64).to_le_bytes())?;
            for v in values {
                file.write_all(&v.to_le_bytes())?;
            }
        }
        std::fs::rename(tmp, self.dir.join(name))
    }
}

/// The semidiscrete reference `V(T)` on an `m1 × m2` grid: MCS2 with 3000
/// steps, cached to disk when a cache is supplied.
pub fn reference_solution(
    params: &KouParams<f64>,
    m1: usize,
    m2: usize,
    cache: Option<&ReferenceCache>,
) -> Result<GridFunction<f64>, AnalysisError> {
    reference_with_steps(params, m1, m2, REFERENCE_STEPS, cache)
}

/// Reference with an explicit step count (self-consistency checks).
pub fn reference_with_steps(
    params: &KouParams<f64>,
    m1: usize,
    m2: usize,
    steps: usize,
    cache: Option<&ReferenceCache>,
) -> Result<GridFunction<f64>, AnalysisError> {
    let name = ReferenceCache::key(params, m1, m2, Scheme::Mcs2, steps);
    let expected = (m1 + 1) * (m2 + 1);
    if let Some(c) = cache {
        if let Some(values) = c.load(&name, expected) {
            let grid = Grid2d::build(params, m1, m2)
                .map_err(|e| PriceError::from(crate::pide::BuildError::from(e)))?;
            return GridFunction::from_values(&grid, values)
                .map_err(|e| AnalysisError::Cache(e.to_string()));
        }
    }
    let mut problem = Pide2d::new(*params, m1, m2).map_err(PriceError::from)?;
    let v0 = problem.initial_condition();
    let spec = SchemeSpec::with_steps(Scheme::Mcs2, steps);
    let values =
        run(&spec, &mut problem, v0.as_slice(), params.maturity).map_err(PriceError::from)?;
    if let Some(c) = cache {
        c.store(&name, &values)
            .map_err(|e| AnalysisError::Cache(e.to_string()))?;
    }
    GridFunction::from_values(&problem.grid, values)
        .map_err(|e| AnalysisError::Cache(e.to_string()))
}

/// The five Greek surfaces obtained from one value surface.
#[derive(Debug, Clone)]
pub struct GreekSurfaces<T> {
    pub delta1: GridFunction<T>,
    pub delta2: GridFunction<T>,
    pub gamma11: GridFunction<T>,
    pub gamma22: GridFunction<T>,
    pub gamma12: GridFunction<T>,
}

impl<T: Scalar> GreekSurfaces<T> {
    pub fn by_name(&self, name: &str) -> Option<&GridFunction<T>> {
        match name {
            "delta1" => Some(&self.delta1),
            "delta2" => Some(&self.delta2),
            "gamma11" => Some(&self.gamma11),
            "gamma22" => Some(&self.gamma22),
            "gamma12" => Some(&self.gamma12),
            _ => None,
        }
    }

    pub const NAMES: [&'static str; 5] = ["delta1", "delta2", "gamma11", "gamma22", "gamma12"];
}

/// First derivative along one line: central weights inside, first-order
/// one-sided at both ends.
fn line_first_derivative<T: Scalar>(s: &[T], v: impl Fn(usize) -> T, out: &mut [T]) {
    let m = s.len() - 1;
    out[0] = (v(1) - v(0)) / (s[1] - s[0]);
    for i in 1..m {
        let (hl, hr) = (s[i] - s[i - 1], s[i + 1] - s[i]);
        let wl = -hr / (hl * (hl + hr));
        let w0 = (hr - hl) / (hl * hr);
        let wr = hl / (hr * (hl + hr));
        out[i] = wl * v(i - 1) + w0 * v(i) + wr * v(i + 1);
    }
    out[m] = (v(m) - v(m - 1)) / (s[m] - s[m - 1]);
}

/// Second derivative along one line: central weights inside, the boundary
/// rows reuse the same three-point formula shifted one point inward.
fn line_second_derivative<T: Scalar>(s: &[T], v: impl Fn(usize) -> T, out: &mut [T]) {
    let m = s.len() - 1;
    let two = T::lit(2.0);
    let weights = |hl: T, hr: T| {
        (
            two / (hl * (hl + hr)),
            -two / (hl * hr),
            two / (hr * (hl + hr)),
        )
    };
    for i in 1..m {
        let (wl, w0, wr) = weights(s[i] - s[i - 1], s[i + 1] - s[i]);
        out[i] = wl * v(i - 1) + w0 * v(i) + wr * v(i + 1);
    }
    let (wl, w0, wr) = weights(s[1] - s[0], s[2] - s[1]);
    out[0] = wl * v(0) + w0 * v(1) + wr * v(2);
    let (wl, w0, wr) = weights(s[m - 1] - s[m - 2], s[m] - s[m - 1]);
    out[m] = wl * v(m - 2) + w0 * v(m - 1) + wr * v(m);
}

fn derivative_axis1<T: Scalar>(
    v: &GridFunction<T>,
    grid: &Grid2d<T>,
    second: bool,
) -> GridFunction<T> {
    let mut out = GridFunction::zeros(grid);
    let s = grid.g1.points();
    let mut line = vec![T::zero(); grid.m1() + 1];
    for j in 0..=grid.m2() {
        if second {
            line_second_derivative(s, |i| v.get(i, j), &mut line);
        } else {
            line_first_derivative(s, |i| v.get(i, j), &mut line);
        }
        for (i, &x) in line.iter().enumerate() {
            out.set(i, j, x);
        }
    }
    out
}

fn derivative_axis2<T: Scalar>(
    v: &GridFunction<T>,
    grid: &Grid2d<T>,
    second: bool,
) -> GridFunction<T> {
    let mut out = GridFunction::zeros(grid);
    let s = grid.g2.points();
    let mut line = vec![T::zero(); grid.m2() + 1];
    for i in 0..=grid.m1() {
        if second {
            line_second_derivative(s, |j| v.get(i, j), &mut line);
        } else {
            line_first_derivative(s, |j| v.get(i, j), &mut line);
        }
        for (j, &x) in line.iter().enumerate() {
            out.set(i, j, x);
        }
    }
    out
}

/// Delta and Gamma surfaces by finite differences on the grid values; the
/// cross Gamma composes the two first-derivative operators.
pub fn greeks<T: Scalar>(v: &GridFunction<T>, grid: &Grid2d<T>) -> GreekSurfaces<T> {
    let delta1 = derivative_axis1(v, grid, false);
    let delta2 = derivative_axis2(v, grid, false);
    let gamma11 = derivative_axis1(v, grid, true);
    let gamma22 = derivative_axis2(v, grid, true);
    let gamma12 = derivative_axis2(&delta1, grid, false);
    GreekSurfaces {
        delta1,
        delta2,
        gamma11,
        gamma22,
        gamma12,
    }
}

/// Natural cubic spline through `(x_i, y_i)`: second-derivative end
/// conditions zero; returns the knot second derivatives.
fn spline_second_derivatives(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut m = vec![0.0f64; n];
    if n < 3 {
        return m;
    }
    // Tridiagonal solve, natural rows pinned to zero.
    let mut diag = vec![0.0f64; n];
    let mut rhs = vec![0.0f64; n];
    let mut sup = vec![0.0f64; n];
    diag[0] = 1.0;
    for i in 1..n - 1 {
        let hl = x[i] - x[i - 1];
        let hr = x[i + 1] - x[i];
        let sub = hl / 6.0;
        diag[i] = (hl + hr) / 3.0;
        sup[i] = hr / 6.0;
        rhs[i] = (y[i + 1] - y[i]) / hr - (y[i] - y[i - 1]) / hl;
        // forward elimination against the previous row
        let prev_diag = diag[i - 1];
        let w = if i == 1 { 0.0 } else { sub / prev_diag };
        if i > 1 {
            diag[i] -= w * sup[i - 1];
            rhs[i] -= w * rhs[i - 1];
        }
    }
    diag[n - 1] = 1.0;
    // back substitution (m[0] = m[n-1] = 0)
    m[n - 2] = rhs[n - 2] / diag[n - 2];
    for i in (1..n - 2).rev() {
        m[i] = (rhs[i] - sup[i] * m[i + 1]) / diag[i];
    }
    m
}

fn spline_eval(x: &[f64], y: &[f64], m: &[f64], at: f64) -> f64 {
    let n = x.len();
    let seg = match x.binary_search_by(|p| p.partial_cmp(&at).unwrap()) {
        Ok(i) => i.min(n - 2),
        Err(i) => i.clamp(1, n - 1) - 1,
    };
    let h = x[seg + 1] - x[seg];
    let a = (x[seg + 1] - at) / h;
    let b = (at - x[seg]) / h;
    a * y[seg]
        + b * y[seg + 1]
        + ((a * a * a - a) * m[seg] + (b * b * b - b) * m[seg + 1]) * h * h / 6.0
}

/// Price at an off-grid spot by a tensor-product natural cubic spline:
/// spline along direction 1 on every grid line, then along direction 2
/// through the results.
pub fn interpolate_price<T: Scalar>(
    v: &GridFunction<T>,
    grid: &Grid2d<T>,
    s1: f64,
    s2: f64,
) -> Result<f64, AnalysisError> {
    let x1: Vec<f64> = grid.g1.points().iter().map(|p| p.wide()).collect();
    let x2: Vec<f64> = grid.g2.points().iter().map(|p| p.wide()).collect();
    if !(0.0..=x1[x1.len() - 1]).contains(&s1) || !(0.0..=x2[x2.len() - 1]).contains(&s2) {
        return Err(AnalysisError::OutOfDomain(s1, s2));
    }
    let mut along2 = Vec::with_capacity(x2.len());
    let mut row = vec![0.0f64; x1.len()];
    for j in 0..x2.len() {
        for (i, r) in row.iter_mut().enumerate() {
            *r = v.get(i, j).wide();
        }
        let m = spline_second_derivatives(&x1, &row);
        along2.push(spline_eval(&x1, &row, &m, s1));
    }
    let m = spline_second_derivatives(&x2, &along2);
    Ok(spline_eval(&x2, &along2, &m, s2))
}

/// Which surface a convergence study measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StudyTarget {
    Value,
    Delta1,
    Delta2,
    Gamma11,
    Gamma22,
    Gamma12,
}

impl StudyTarget {
    fn pick<'a, T: Scalar>(
        &self,
        v: &'a GridFunction<T>,
        g: &'a GreekSurfaces<T>,
    ) -> &'a GridFunction<T> {
        match self {
            StudyTarget::Value => v,
            StudyTarget::Delta1 => &g.delta1,
            StudyTarget::Delta2 => &g.delta2,
            StudyTarget::Gamma11 => &g.gamma11,
            StudyTarget::Gamma22 => &g.gamma22,
            StudyTarget::Gamma12 => &g.gamma12,
        }
    }

    fn needs_greeks(&self) -> bool {
        !matches!(self, StudyTarget::Value)
    }
}

/// Temporal-error study: one scheme, fixed grid, a sweep of base counts
/// `N`. Runs fan out across a thread pool; records keep the sweep order.
pub fn temporal_error_study(
    params: &KouParams<f64>,
    scheme: Scheme,
    m: usize,
    n_values: &[usize],
    target: StudyTarget,
    cache: Option<&ReferenceCache>,
) -> Result<Vec<ConvergenceRecord>, AnalysisError> {
    let v_ref = reference_solution(params, m, m, cache)?;
    let grid = Grid2d::build(params, m, m)
        .map_err(|e| PriceError::from(crate::pide::BuildError::from(e)))?;
    let roi = Roi::of_strike(params.strike);
    let ref_greeks = target.needs_greeks().then(|| greeks(&v_ref, &grid));

    let results: Vec<Result<ConvergenceRecord, AnalysisError>> = n_values
        .par_iter()
        .map(|&n| {
            let spec = SchemeSpec::new(scheme, n);
            let t0 = std::time::Instant::now();
            let mut problem = Pide2d::new(*params, m, m).map_err(PriceError::from)?;
            let v0 = problem.initial_condition();
            let values = run(&spec, &mut problem, v0.as_slice(), params.maturity)
                .map_err(PriceError::from)?;
            let seconds = t0.elapsed().as_secs_f64();
            let v = GridFunction::from_values(&problem.grid, values)
                .map_err(|e| AnalysisError::Cache(e.to_string()))?;
            let error = match (&ref_greeks, target.needs_greeks()) {
                (Some(rg), true) => {
                    let g = greeks(&v, &problem.grid);
                    e_roi(
                        target.pick(&v_ref, rg),
                        target.pick(&v, &g),
                        &problem.grid,
                        &roi,
                    )?
                }
                _ => e_roi(&v_ref, &v, &problem.grid, &roi)?,
            };
            Ok(ConvergenceRecord {
                scheme,
                m,
                n,
                n_prime: spec.n_prime(),
                error,
                seconds,
            })
        })
        .collect();
    results.into_iter().collect()
}

/// Temporal-error study of all five Greek surfaces: the same machinery as
/// the value study, applied per surface. Returns `(name, records)` pairs in
/// a fixed order.
pub fn greek_error_study(
    params: &KouParams<f64>,
    scheme: Scheme,
    m: usize,
    n_values: &[usize],
    cache: Option<&ReferenceCache>,
) -> Result<Vec<(&'static str, Vec<ConvergenceRecord>)>, AnalysisError> {
    let targets = [
        ("delta1", StudyTarget::Delta1),
        ("delta2", StudyTarget::Delta2),
        ("gamma11", StudyTarget::Gamma11),
        ("gamma22", StudyTarget::Gamma22),
        ("gamma12", StudyTarget::Gamma12),
    ];
    let mut out = Vec::with_capacity(targets.len());
    for (name, target) in targets {
        out.push((
            name,
            temporal_error_study(params, scheme, m, n_values, target, cache)?,
        ));
    }
    Ok(out)
}
