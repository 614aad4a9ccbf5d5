//! Finite-difference weights and the convection-diffusion-reaction operators.
//!
//! The PDE part splits as `A^(D) = A^(M) + A_1 + A_2`: per-direction
//! tridiagonal operators `A_k` carrying diffusion, convection and half the
//! reaction term each, plus the factored mixed-derivative operator
//! `A^(M) = ρσ₁σ₂ (X₂D₂⁽¹⁾) ⊗ (X₁D₁⁽¹⁾)`. Operators are stored band-wise and
//! applied matrix-free; a 9-point sparse row export exists for the
//! preconditioned iterative solver.

use crate::grid::{Grid1d, Grid2d};
use crate::model::{KouParams, ModelError};
use crate::scalar::Scalar;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SpatialError {
    #[error("mesh widths must be positive, got ({0}, {1})")]
    NonpositiveWidth(f64, f64),
    #[error("shape mismatch: expected {expected} values, got {got}")]
    ShapeMismatch { expected: usize, got: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Central second-order weights for the first derivative on a nonuniform
/// mesh: `(ω₋₁, ω₀, ω₁)` for widths `h_i`, `h_{i+1}` around the point.
pub fn fd_weights_first<T: Scalar>(h_left: T, h_right: T) -> Result<(T, T, T), SpatialError> {
    if !(h_left > T::zero()) || !(h_right > T::zero()) {
        return Err(SpatialError::NonpositiveWidth(
            h_left.wide(),
            h_right.wide(),
        ));
    }
    Ok((
        -h_right / (h_left * (h_left + h_right)),
        (h_right - h_left) / (h_left * h_right),
        h_left / (h_right * (h_left + h_right)),
    ))
}

/// Central second-order weights for the second derivative.
pub fn fd_weights_second<T: Scalar>(h_left: T, h_right: T) -> Result<(T, T, T), SpatialError> {
    if !(h_left > T::zero()) || !(h_right > T::zero()) {
        return Err(SpatialError::NonpositiveWidth(
            h_left.wide(),
            h_right.wide(),
        ));
    }
    let two = T::lit(2.0);
    Ok((
        two / (h_left * (h_left + h_right)),
        -two / (h_left * h_right),
        two / (h_right * (h_left + h_right)),
    ))
}

/// Tridiagonal one-direction operator stored as bands of length `m + 1`.
///
/// `sub[0]` and `sup[m]` are structurally zero: row 0 holds only a diagonal
/// entry (the operator degenerates at `s = 0`) and row `m` uses the two-point
/// backward formula.
#[derive(Debug, Clone)]
pub struct TriDiagOp<T> {
    pub sub: Vec<T>,
    pub diag: Vec<T>,
    pub sup: Vec<T>,
}

impl<T: Scalar> TriDiagOp<T> {
    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    fn zeros(n: usize) -> Self {
        Self {
            sub: vec![T::zero(); n],
            diag: vec![T::zero(); n],
            sup: vec![T::zero(); n],
        }
    }

    /// Band weight at row `i`, offset `di` in {-1, 0, 1}.
    #[inline]
    fn weight(&self, i: usize, di: isize) -> T {
        match di {
            -1 => self.sub[i],
            0 => self.diag[i],
            1 => self.sup[i],
            _ => unreachable!(),
        }
    }
}

/// Factored mixed-derivative operator `coeff · (f2 ⊗ f1)` where `f1`, `f2`
/// are the per-direction first-derivative operators scaled by the diagonal
/// price matrices. Rows with `i = 0` or `j = 0` vanish.
#[derive(Debug, Clone)]
pub struct MixedOp<T> {
    pub coeff: T,
    pub f1: TriDiagOp<T>,
    pub f2: TriDiagOp<T>,
}

/// The assembled spatial operator bundle: the 9-point composite
/// `A^(D) = A^(M) + A_1 + A_2` in factored, matrix-free form.
#[derive(Debug, Clone)]
pub struct SpatialOps<T> {
    pub m1: usize,
    pub m2: usize,
    pub a1: TriDiagOp<T>,
    pub a2: TriDiagOp<T>,
    pub mixed: MixedOp<T>,
}

/// Builds the band of a one-direction operator
/// `½σ²X²D⁽²⁾ + (r−λκ)XD⁽¹⁾ − ½(r+λ)I`.
///
/// Row 0 keeps only the reaction entry; row `m` discretizes the first
/// derivative with the two-point backward formula while the second
/// derivative vanishes under the linear boundary condition.
fn direction_band<T: Scalar>(
    g: &Grid1d<T>,
    sigma: T,
    drift: T,
    reaction_half: T,
) -> Result<TriDiagOp<T>, SpatialError> {
    let m = g.cells();
    let mut op = TriDiagOp::zeros(m + 1);
    let half = T::lit(0.5);
    op.diag[0] = -reaction_half;
    for i in 1..m {
        let (hl, hr) = (g.width(i), g.width(i + 1));
        let (a1, a0, ap) = fd_weights_second(hl, hr)?;
        let (b1, b0, bp) = fd_weights_first(hl, hr)?;
        let s = g.point(i);
        let diff = half * sigma * sigma * s * s;
        let conv = drift * s;
        op.sub[i] = diff * a1 + conv * b1;
        op.diag[i] = diff * a0 + conv * b0 - reaction_half;
        op.sup[i] = diff * ap + conv * bp;
    }
    let s = g.point(m);
    let h = g.width(m);
    op.sub[m] = -drift * s / h;
    op.diag[m] = drift * s / h - reaction_half;
    Ok(op)
}

/// Builds the scaled first-derivative band `X D⁽¹⁾` used by the mixed term.
fn scaled_first_derivative_band<T: Scalar>(g: &Grid1d<T>) -> Result<TriDiagOp<T>, SpatialError> {
    let m = g.cells();
    let mut op = TriDiagOp::zeros(m + 1);
    for i in 1..m {
        let (b1, b0, bp) = fd_weights_first(g.width(i), g.width(i + 1))?;
        let s = g.point(i);
        op.sub[i] = s * b1;
        op.diag[i] = s * b0;
        op.sup[i] = s * bp;
    }
    let s = g.point(m);
    let h = g.width(m);
    op.sub[m] = -s / h;
    op.diag[m] = s / h;
    Ok(op)
}

/// Assembles `(A^(M), A_1, A_2)` for the given grid and parameters.
pub fn assemble_operators<T: Scalar>(
    grid: &Grid2d<T>,
    params: &KouParams<T>,
) -> Result<SpatialOps<T>, SpatialError> {
    let kappa1 = params.kappa1()?;
    let kappa2 = params.kappa2()?;
    let reaction_half = T::lit(0.5) * (params.r + params.lambda);
    let a1 = direction_band(
        &grid.g1,
        params.sigma1,
        params.r - params.lambda * kappa1,
        reaction_half,
    )?;
    let a2 = direction_band(
        &grid.g2,
        params.sigma2,
        params.r - params.lambda * kappa2,
        reaction_half,
    )?;
    let mixed = MixedOp {
        coeff: params.rho * params.sigma1 * params.sigma2,
        f1: scaled_first_derivative_band(&grid.g1)?,
        f2: scaled_first_derivative_band(&grid.g2)?,
    };
    Ok(SpatialOps {
        m1: grid.m1(),
        m2: grid.m2(),
        a1,
        a2,
        mixed,
    })
}

/// `out += band ⊗ v` along direction 1 (contiguous index).
fn acc_band_axis1<T: Scalar>(band: &TriDiagOp<T>, v: &[T], out: &mut [T], m1: usize, m2: usize) {
    let w = m1 + 1;
    for j in 0..=m2 {
        let row = &v[j * w..j * w + w];
        let o = &mut out[j * w..j * w + w];
        o[0] += band.diag[0] * row[0] + band.sup[0] * row[1];
        for i in 1..m1 {
            o[i] += band.sub[i] * row[i - 1] + band.diag[i] * row[i] + band.sup[i] * row[i + 1];
        }
        o[m1] += band.sub[m1] * row[m1 - 1] + band.diag[m1] * row[m1];
    }
}

/// `out += scale · (band ⊗ v)` along direction 2 (strided index).
fn acc_band_axis2_scaled<T: Scalar>(
    band: &TriDiagOp<T>,
    scale: T,
    v: &[T],
    out: &mut [T],
    m1: usize,
    m2: usize,
) {
    let w = m1 + 1;
    for j in 0..=m2 {
        let d = scale * band.diag[j];
        let s = scale * band.sub[j];
        let u = scale * band.sup[j];
        let (lo, hi) = (j * w, j * w + w);
        for i in 0..w {
            let mut acc = d * v[lo + i];
            if j > 0 {
                acc += s * v[lo - w + i];
            }
            if j < m2 {
                acc += u * v[hi + i];
            }
            out[lo + i] += acc;
        }
    }
}

impl<T: Scalar> SpatialOps<T> {
    pub fn num_points(&self) -> usize {
        (self.m1 + 1) * (self.m2 + 1)
    }

    fn check_shape(&self, len: usize) -> Result<(), SpatialError> {
        if len != self.num_points() {
            return Err(SpatialError::ShapeMismatch {
                expected: self.num_points(),
                got: len,
            });
        }
        Ok(())
    }

    /// `out += A_1 v`.
    pub fn acc_a1(&self, v: &[T], out: &mut [T]) {
        acc_band_axis1(&self.a1, v, out, self.m1, self.m2);
    }

    /// `out += A_2 v`.
    pub fn acc_a2(&self, v: &[T], out: &mut [T]) {
        acc_band_axis2_scaled(&self.a2, T::one(), v, out, self.m1, self.m2);
    }

    /// `out += A^(M) v`, using `scratch` for the inner first-derivative pass.
    pub fn acc_mixed(&self, v: &[T], scratch: &mut [T], out: &mut [T]) {
        scratch.fill(T::zero());
        acc_band_axis1(&self.mixed.f1, v, scratch, self.m1, self.m2);
        acc_band_axis2_scaled(
            &self.mixed.f2,
            self.mixed.coeff,
            scratch,
            out,
            self.m1,
            self.m2,
        );
    }

    /// Matrix-free `A^(D) v = (A^(M) + A_1 + A_2) v`.
    pub fn apply_ad(&self, v: &[T], scratch: &mut [T], out: &mut [T]) -> Result<(), SpatialError> {
        self.check_shape(v.len())?;
        self.check_shape(out.len())?;
        self.check_shape(scratch.len())?;
        out.fill(T::zero());
        self.acc_a1(v, out);
        self.acc_a2(v, out);
        self.acc_mixed(v, scratch, out);
        Ok(())
    }

    /// Appends the sparse row of `A^(D)` at grid point `(i, j)` as
    /// `(column, value)` pairs sorted by column, duplicates merged.
    ///
    /// At most nine entries per row; used to assemble the iterative-solver
    /// matrix and its preconditioner.
    pub fn row_entries(&self, i: usize, j: usize, out: &mut Vec<(usize, T)>) {
        out.clear();
        let w = self.m1 + 1;
        let center = j * w + i;
        let di_range = |i: usize, m: usize| -> std::ops::RangeInclusive<isize> {
            let lo = if i == 0 { 0 } else { -1 };
            let hi = if i == m { 0 } else { 1 };
            lo..=hi
        };
        // Always include the diagonal so the shifted system keeps its 1.
        out.push((center, self.a1.diag[i] + self.a2.diag[j]));
        if i > 0 {
            out.push((center - 1, self.a1.sub[i]));
        }
        if i < self.m1 {
            out.push((center + 1, self.a1.sup[i]));
        }
        if j > 0 {
            out.push((center - w, self.a2.sub[j]));
        }
        if j < self.m2 {
            out.push((center + w, self.a2.sup[j]));
        }
        for dj in di_range(j, self.m2) {
            let c2 = self.mixed.f2.weight(j, dj);
            if c2 == T::zero() {
                continue;
            }
            for di in di_range(i, self.m1) {
                let c1 = self.mixed.f1.weight(i, di);
                if c1 == T::zero() {
                    continue;
                }
                let col = (center as isize + dj * w as isize + di) as usize;
                out.push((col, self.mixed.coeff * c1 * c2));
            }
        }
        out.sort_unstable_by_key(|e| e.0);
        let mut merged = 0;
        for k in 1..out.len() {
            if out[k].0 == out[merged].0 {
                let add = out[k].1;
                out[merged].1 += add;
            } else {
                merged += 1;
                out[merged] = out[k];
            }
        }
        out.truncate(merged + 1);
    }
}
