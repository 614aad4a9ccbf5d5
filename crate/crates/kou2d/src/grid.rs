//! Nonuniform spatial meshes and the cell-averaged initial vector.
//!
//! Each direction uses a smooth sinh transformation of a uniform auxiliary
//! grid: the mesh is uniform on `[0, 2K]` and stretches towards `s_max`.
//! The initial vector is the payoff evaluated pointwise except on cells cut
//! by the payoff kink `s1 + s2 = 2K`, where the exact cell average is used.

use crate::model::{payoff, KouParams};
use crate::scalar::Scalar;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GridError {
    #[error("mesh needs at least 2 cells, got {0}")]
    TooFewCells(usize),
    #[error("stretch parameter must be positive, got {0}")]
    NonpositiveStretch(f64),
    #[error("domain bound {s_max} must exceed twice the strike {strike}")]
    DomainTooSmall { s_max: f64, strike: f64 },
    #[error("grid function length {got} does not match grid size {expected}")]
    LengthMismatch { got: usize, expected: usize },
}

/// One-dimensional mesh `0 = s_0 < s_1 < … < s_m = s_max` plus the cell
/// midpoints used for cell averaging.
#[derive(Debug, Clone)]
pub struct Grid1d<T> {
    points: Vec<T>,
    /// `mid[l]` is the half point s_{l-1/2}; index 0 holds s_{-1/2} = -s_{1/2}
    /// and index m+1 holds s_{m+1/2} = s_max.
    mid: Vec<T>,
    uniform_spacing: T,
}

impl<T: Scalar> Grid1d<T> {
    /// Number of cells `m`.
    pub fn cells(&self) -> usize {
        self.points.len() - 1
    }

    /// Number of grid points `m + 1`.
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Grid point `s_i`.
    #[inline]
    pub fn point(&self, i: usize) -> T {
        self.points[i]
    }

    pub fn points(&self) -> &[T] {
        &self.points
    }

    /// Mesh width `h_i = s_i − s_{i−1}` for `1 ≤ i ≤ m`.
    #[inline]
    pub fn width(&self, i: usize) -> T {
        self.points[i] - self.points[i - 1]
    }

    /// Half point `s_{l+1/2}` for `−1 ≤ l ≤ m`; pass `l + 1` as index.
    #[inline]
    pub fn half_point(&self, idx: usize) -> T {
        self.mid[idx]
    }

    /// Cell width `h_{l+1/2} = s_{l+1/2} − s_{l−1/2}` around grid point `l`.
    #[inline]
    pub fn cell_width(&self, l: usize) -> T {
        self.mid[l + 1] - self.mid[l]
    }

    /// Spacing of the uniform region `[0, 2K]`.
    pub fn uniform_spacing(&self) -> T {
        self.uniform_spacing
    }
}

/// Builds the sinh-stretched mesh with `m` cells.
///
/// The auxiliary coordinate runs uniformly over `[0, ξ_max]` with
/// `ξ_int = 2K/d` and `ξ_max = ξ_int + asinh(s_max/d − ξ_int)`; the map is
/// `φ(ξ) = dξ` below `ξ_int` and `2K + d·sinh(ξ − ξ_int)` above. The default
/// stretch parameter used by the engine is `d = K/10`.
pub fn build_mesh<T: Scalar>(m: usize, strike: T, s_max: T, d: T) -> Result<Grid1d<T>, GridError> {
    if m < 2 {
        return Err(GridError::TooFewCells(m));
    }
    if !(d > T::zero()) {
        return Err(GridError::NonpositiveStretch(d.wide()));
    }
    // Mesh arithmetic is carried out in f64 and cast once at the end.
    let k = strike.wide();
    let smax = s_max.wide();
    let dd = d.wide();
    let xi_int = 2.0 * k / dd;
    if smax / dd - xi_int <= 0.0 {
        return Err(GridError::DomainTooSmall {
            s_max: smax,
            strike: k,
        });
    }
    let xi_max = xi_int + (smax / dd - xi_int).asinh();
    let dxi = xi_max / m as f64;

    let mut points = Vec::with_capacity(m + 1);
    for i in 0..=m {
        let xi = i as f64 * dxi;
        let s = if xi <= xi_int {
            dd * xi
        } else {
            2.0 * k + dd * (xi - xi_int).sinh()
        };
        points.push(s);
    }
    // The transformation maps the endpoints exactly; pin them against the
    // last-ulp drift of sinh(asinh(x)).
    points[0] = 0.0;
    points[m] = smax;

    let mut mid = Vec::with_capacity(m + 2);
    mid.push(-0.5 * (points[0] + points[1]));
    for l in 0..m {
        mid.push(0.5 * (points[l] + points[l + 1]));
    }
    mid.push(smax);

    Ok(Grid1d {
        points: points.into_iter().map(T::lit).collect(),
        mid: mid.into_iter().map(T::lit).collect(),
        uniform_spacing: T::lit(dd * dxi),
    })
}

/// Tensor product of two one-dimensional meshes sharing strike and domain.
#[derive(Debug, Clone)]
pub struct Grid2d<T> {
    pub g1: Grid1d<T>,
    pub g2: Grid1d<T>,
}

impl<T: Scalar> Grid2d<T> {
    /// Builds both directions with the default stretch `d = K/10`.
    pub fn build(params: &KouParams<T>, m1: usize, m2: usize) -> Result<Self, GridError> {
        let d = params.strike / T::lit(10.0);
        Self::build_with_stretch(params, m1, m2, d)
    }

    pub fn build_with_stretch(
        params: &KouParams<T>,
        m1: usize,
        m2: usize,
        d: T,
    ) -> Result<Self, GridError> {
        Ok(Self {
            g1: build_mesh(m1, params.strike, params.s_max, d)?,
            g2: build_mesh(m2, params.strike, params.s_max, d)?,
        })
    }

    pub fn m1(&self) -> usize {
        self.g1.cells()
    }

    pub fn m2(&self) -> usize {
        self.g2.cells()
    }

    /// Total number of grid points `(m1+1)(m2+1)`.
    pub fn num_points(&self) -> usize {
        self.g1.len() * self.g2.len()
    }
}

/// A value per grid point in lexicographic order: `index(i, j) = i + j(m1+1)`,
/// so the first asset index varies fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction<T> {
    m1: usize,
    m2: usize,
    values: Vec<T>,
}

impl<T: Scalar> GridFunction<T> {
    pub fn zeros(grid: &Grid2d<T>) -> Self {
        Self {
            m1: grid.m1(),
            m2: grid.m2(),
            values: vec![T::zero(); grid.num_points()],
        }
    }

    pub fn from_fn(grid: &Grid2d<T>, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let (m1, m2) = (grid.m1(), grid.m2());
        let mut values = Vec::with_capacity(grid.num_points());
        for j in 0..=m2 {
            for i in 0..=m1 {
                values.push(f(i, j));
            }
        }
        Self { m1, m2, values }
    }

    pub fn from_values(grid: &Grid2d<T>, values: Vec<T>) -> Result<Self, GridError> {
        if values.len() != grid.num_points() {
            return Err(GridError::LengthMismatch {
                got: values.len(),
                expected: grid.num_points(),
            });
        }
        Ok(Self {
            m1: grid.m1(),
            m2: grid.m2(),
            values,
        })
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        i + j * (self.m1 + 1)
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.values[self.index(i, j)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: T) {
        let idx = self.index(i, j);
        self.values[idx] = v;
    }

    pub fn m1(&self) -> usize {
        self.m1
    }

    pub fn m2(&self) -> usize {
        self.m2
    }

    pub fn as_slice(&self) -> &[T] {
        &self.values
    }

    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }
}

/// Exact integral of the payoff over the rectangle `[x0,x1] × [y0,y1]`.
///
/// The integrand `max(0, K − (x+y)/2)` is linear below the kink line
/// `x + y = 2K`, so the inner integral in `y` is piecewise polynomial in `x`
/// and is integrated exactly, splitting `[x0, x1]` where the kink enters and
/// leaves the rectangle.
fn payoff_cell_integral(x0: f64, x1: f64, y0: f64, y1: f64, k: f64) -> f64 {
    let two_k = 2.0 * k;
    // Antiderivative in x of the full inner integral (kink below y0).
    let full = |x: f64| (k * x - 0.25 * x * x) * (y1 - y0) - 0.25 * (y1 * y1 - y0 * y0) * x;
    // Antiderivative in x of the partial inner integral (kink inside [y0,y1]).
    let partial = |x: f64| {
        let u = two_k - x - y0;
        -u * u * u / 12.0
    };
    let a = two_k - y1; // left of a: the whole y-range pays
    let b = two_k - y0; // right of b: nothing pays
    let mut total = 0.0;
    let fa = x1.min(a);
    if x0 < fa {
        total += full(fa) - full(x0);
    }
    let lo = x0.max(a);
    let hi = x1.min(b);
    if lo < hi {
        total += partial(hi) - partial(lo);
    }
    total
}

/// Initial vector: pointwise payoff, replaced by the exact cell average on
/// cells straddling the kink `s1 + s2 = 2K`.
///
/// A cell straddles iff its lower corner half points sum below `2K` and its
/// upper ones above; boundary-touching cells keep the pointwise value.
pub fn cell_average_payoff<T: Scalar>(grid: &Grid2d<T>, params: &KouParams<T>) -> GridFunction<T> {
    let k = params.strike;
    let two_k = (T::lit(2.0) * k).wide();
    GridFunction::from_fn(grid, |i, j| {
        let lo = grid.g1.half_point(i).wide() + grid.g2.half_point(j).wide();
        let hi = grid.g1.half_point(i + 1).wide() + grid.g2.half_point(j + 1).wide();
        if lo < two_k && hi > two_k {
            let x0 = grid.g1.half_point(i).wide();
            let x1 = grid.g1.half_point(i + 1).wide();
            let y0 = grid.g2.half_point(j).wide();
            let y1 = grid.g2.half_point(j + 1).wide();
            let integral = payoff_cell_integral(x0, x1, y0, y1, k.wide());
            T::lit(integral / ((x1 - x0) * (y1 - y0)))
        } else {
            payoff(grid.g1.point(i), grid.g2.point(j), k)
        }
    })
}
