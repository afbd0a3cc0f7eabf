//! Uniform periodic grids on the circle `[-pi, pi)` and the torus
//! `[-pi, pi)^2`, with the discrete calculus used throughout the crate:
//! midpoint integration, central finite differences, cumulative
//! antiderivatives, circular convolution (direct and spectral) and DFT
//! transforms.
//!
//! Grids are cell-centered with no duplicated endpoint: `n` cells of width
//! `dx = 2*pi/n`, node `i` at `-pi + (i + 1/2) dx`. Periodicity is
//! structural; no wrap cell is stored. 2D fields are stored row-major with
//! axis 0 (x1) fastest.

use std::cell::RefCell;
use std::f64::consts::PI;

use num_complex::Complex;
use rustfft::FftPlanner;

use crate::{Error, Result};

pub const TWO_PI: f64 = 2.0 * PI;

/// Wraps an angle into `[-pi, pi)`.
pub fn wrap_angle(x: f64) -> f64 {
    if (-PI..PI).contains(&x) {
        return x; // already canonical; avoid rem_euclid round-off
    }
    let w = (x + PI).rem_euclid(TWO_PI) - PI;
    // rem_euclid may return exactly 2*pi for tiny negative inputs.
    if w >= PI {
        w - TWO_PI
    } else {
        w
    }
}

/// Relative position of `x` with respect to `y`, wrapped on the circle:
/// the unique representative of `x - y (mod 2*pi)` in `[-pi, pi)`.
pub fn wrap_displacement(x: f64, y: f64) -> f64 {
    wrap_angle(x - y)
}

/// A uniform cell-centered periodic grid, 1D (circle) or 2D (torus).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Grid {
    dim: usize,
    n: usize,
}

impl Grid {
    pub fn circle(n: usize) -> Self {
        assert!(n >= 4, "grid needs at least 4 cells per axis");
        Grid { dim: 1, n }
    }

    pub fn torus(n: usize) -> Self {
        assert!(n >= 4, "grid needs at least 4 cells per axis");
        Grid { dim: 2, n }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Cells per axis.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Cell width per axis; `dx * n = 2*pi`.
    pub fn dx(&self) -> f64 {
        TWO_PI / self.n as f64
    }

    /// Cell measure: `dx` in 1D, `dx^2` in 2D.
    pub fn cell_measure(&self) -> f64 {
        self.dx().powi(self.dim as i32)
    }

    /// Total cell count.
    pub fn len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Coordinate of node `i` along one axis.
    pub fn node(&self, i: usize) -> f64 {
        -PI + (i as f64 + 0.5) * self.dx()
    }

    /// Flat index of the 2D cell `(i1, i2)`; axis 0 fastest.
    pub fn index_2d(&self, i1: usize, i2: usize) -> usize {
        debug_assert_eq!(self.dim, 2);
        i2 * self.n + i1
    }
}

/// Semantic tag carried by a field; operations do not depend on it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum FieldKind {
    Density,
    Velocity,
    #[default]
    Generic,
}

/// A sampled scalar field on a periodic grid.
#[derive(Clone, Debug, PartialEq)]
pub struct Field {
    pub grid: Grid,
    pub values: Vec<f64>,
    pub kind: FieldKind,
}

/// Negative-value tolerance for density fields.
pub const DENSITY_NEG_TOL: f64 = 1e-12;

impl Field {
    pub fn new(grid: Grid, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), grid.len(), "value count must match cell count");
        Field {
            grid,
            values,
            kind: FieldKind::Generic,
        }
    }

    pub fn zeros(grid: Grid) -> Self {
        Field::new(grid, vec![0.0; grid.len()])
    }

    pub fn constant(grid: Grid, c: f64) -> Self {
        Field::new(grid, vec![c; grid.len()])
    }

    /// Samples `f(x)` at the 1D nodes.
    pub fn from_fn_1d(grid: Grid, f: impl Fn(f64) -> f64) -> Self {
        assert_eq!(grid.dim(), 1);
        Field::new(grid, (0..grid.n()).map(|i| f(grid.node(i))).collect())
    }

    /// Samples `f(x1, x2)` at the 2D nodes, axis 0 fastest.
    pub fn from_fn_2d(grid: Grid, f: impl Fn(f64, f64) -> f64) -> Self {
        assert_eq!(grid.dim(), 2);
        let n = grid.n();
        let mut values = Vec::with_capacity(grid.len());
        for i2 in 0..n {
            let x2 = grid.node(i2);
            for i1 in 0..n {
                values.push(f(grid.node(i1), x2));
            }
        }
        Field::new(grid, values)
    }

    pub fn with_kind(mut self, kind: FieldKind) -> Self {
        self.kind = kind;
        self
    }

    /// Checks the density invariants: values above `-DENSITY_NEG_TOL` and
    /// positive total mass.
    pub fn is_valid_density(&self) -> bool {
        self.values.iter().all(|v| *v >= -DENSITY_NEG_TOL) && integrate(self) > 0.0
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn linf_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Discrete L2 norm: `sqrt(sum f_i^2 * cell)`.
    pub fn l2_norm(&self) -> f64 {
        (self.values.iter().map(|v| v * v).sum::<f64>() * self.grid.cell_measure()).sqrt()
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// Pointwise combination with another field on the same grid.
    pub fn zip_with(&self, other: &Field, f: impl Fn(f64, f64) -> f64) -> Result<Field> {
        same_grid(self, other)?;
        Ok(Field::new(
            self.grid,
            self.values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| f(*a, *b))
                .collect(),
        ))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Field {
        Field::new(self.grid, self.values.iter().map(|v| f(*v)).collect())
    }

    pub fn scale(&self, s: f64) -> Field {
        self.map(|v| v * s)
    }

    /// In-place `self += s * other`.
    pub fn axpy(&mut self, s: f64, other: &Field) {
        debug_assert_eq!(self.grid, other.grid);
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += s * b;
        }
    }
}

fn same_grid(a: &Field, b: &Field) -> Result<()> {
    if a.grid != b.grid {
        return Err(Error::GridMismatch(a.grid.len(), b.grid.len()));
    }
    Ok(())
}

/// Midpoint-rule integral over the domain. Exact for trigonometric
/// polynomials below the Nyquist wavenumber.
pub fn integrate(f: &Field) -> f64 {
    f.values.iter().sum::<f64>() * f.grid.cell_measure()
}

/// Central finite difference of the given order (1 or 2) along `axis`,
/// with periodic wraparound. Second-order accurate in `dx`.
pub fn derivative(f: &Field, order: usize, axis: usize) -> Field {
    assert!(order == 1 || order == 2, "order must be 1 or 2");
    assert!(axis < f.grid.dim(), "axis out of range");
    let n = f.grid.n();
    let dx = f.grid.dx();
    let mut out = vec![0.0; f.values.len()];
    let stencil = |fm: f64, f0: f64, fp: f64| -> f64 {
        if order == 1 {
            (fp - fm) / (2.0 * dx)
        } else {
            (fp - 2.0 * f0 + fm) / (dx * dx)
        }
    };
    match f.grid.dim() {
        1 => {
            for (i, o) in out.iter_mut().enumerate() {
                let im = (i + n - 1) % n;
                let ip = (i + 1) % n;
                *o = stencil(f.values[im], f.values[i], f.values[ip]);
            }
        }
        _ => {
            for i2 in 0..n {
                for i1 in 0..n {
                    let (m, p) = if axis == 0 {
                        (
                            f.grid.index_2d((i1 + n - 1) % n, i2),
                            f.grid.index_2d((i1 + 1) % n, i2),
                        )
                    } else {
                        (
                            f.grid.index_2d(i1, (i2 + n - 1) % n),
                            f.grid.index_2d(i1, (i2 + 1) % n),
                        )
                    };
                    let c = f.grid.index_2d(i1, i2);
                    out[c] = stencil(f.values[m], f.values[c], f.values[p]);
                }
            }
        }
    }
    Field::new(f.grid, out)
}

/// Cumulative antiderivative on the circle (1D only), anchored so that
/// `F(first node) = anchor + f(first node) * dx / 2` — i.e. `anchor` is the
/// value of the running integral at the left domain edge `-pi`.
///
/// Returns the antiderivative and a flag that is set when the input mean is
/// not negligible (`|integral| > 1e-8 * l2 norm`); the antiderivative of a
/// nonzero-mean field is not periodic on the circle.
pub fn antiderivative(f: &Field, anchor: f64) -> (Field, bool) {
    assert_eq!(f.grid.dim(), 1, "antiderivative is 1D only");
    let dx = f.grid.dx();
    let mut out = Vec::with_capacity(f.values.len());
    let mut acc = anchor + f.values[0] * dx / 2.0;
    out.push(acc);
    for i in 1..f.values.len() {
        acc += (f.values[i - 1] + f.values[i]) * dx / 2.0;
        out.push(acc);
    }
    let integral = integrate(f);
    let ill_posed = integral.abs() > 1e-8 * f.l2_norm().max(f64::MIN_POSITIVE);
    (Field::new(f.grid, out), ill_posed)
}

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn fft_in_place(buf: &mut [Complex<f64>], inverse: bool) {
    PLANNER.with(|p| {
        let mut planner = p.borrow_mut();
        let fft = if inverse {
            planner.plan_fft_inverse(buf.len())
        } else {
            planner.plan_fft_forward(buf.len())
        };
        fft.process(buf);
    });
}

fn fft_nd(values: &mut [Complex<f64>], grid: Grid, inverse: bool) {
    let n = grid.n();
    match grid.dim() {
        1 => fft_in_place(values, inverse),
        _ => {
            // Rows (axis 0 is contiguous), then columns via a scratch buffer.
            for row in values.chunks_mut(n) {
                fft_in_place(row, inverse);
            }
            let mut col = vec![Complex::default(); n];
            for i1 in 0..n {
                for i2 in 0..n {
                    col[i2] = values[i2 * n + i1];
                }
                fft_in_place(&mut col, inverse);
                for i2 in 0..n {
                    values[i2 * n + i1] = col[i2];
                }
            }
        }
    }
}

/// Unnormalized forward DFT of a real field. In 2D the coefficient layout is
/// row-major, axis 0 fastest, matching the field storage.
pub fn spectral_transform(f: &Field) -> Vec<Complex<f64>> {
    let mut buf: Vec<Complex<f64>> = f.values.iter().map(|v| Complex::new(*v, 0.0)).collect();
    fft_nd(&mut buf, f.grid, false);
    buf
}

/// Inverse of [`spectral_transform`]: divides by the total cell count and
/// returns the real part.
pub fn inverse_spectral_transform(grid: Grid, coeffs: &[Complex<f64>]) -> Field {
    assert_eq!(coeffs.len(), grid.len());
    let mut buf = coeffs.to_vec();
    fft_nd(&mut buf, grid, true);
    let scale = 1.0 / grid.len() as f64;
    Field::new(grid, buf.iter().map(|c| c.re * scale).collect())
}

/// Signed integer wavenumber of DFT bin `i` on an axis with `n` cells.
pub fn wavenumber(i: usize, n: usize) -> i64 {
    if i <= n / 2 {
        i as i64
    } else {
        i as i64 - n as i64
    }
}

/// Circular convolution of a kernel lag table with a field, by direct
/// summation: `(f*g)_i = sum_j lag[(i-j) mod n] g_j * cell`.
///
/// `lag[m]` holds the kernel evaluated at the displacement `m * dx` wrapped
/// on the circle (per axis in 2D, row-major).
pub fn convolve_direct(lag: &[f64], g: &Field) -> Result<Field> {
    if lag.len() != g.grid.len() {
        return Err(Error::GridMismatch(lag.len(), g.grid.len()));
    }
    let n = g.grid.n();
    let cell = g.grid.cell_measure();
    let mut out = vec![0.0; g.values.len()];
    match g.grid.dim() {
        1 => {
            for (i, o) in out.iter_mut().enumerate() {
                let mut acc = 0.0;
                for (j, gj) in g.values.iter().enumerate() {
                    acc += lag[(i + n - j) % n] * gj;
                }
                *o = acc * cell;
            }
        }
        _ => {
            for i2 in 0..n {
                for i1 in 0..n {
                    let mut acc = 0.0;
                    for j2 in 0..n {
                        let l2 = (i2 + n - j2) % n;
                        for j1 in 0..n {
                            let l1 = (i1 + n - j1) % n;
                            acc += lag[l2 * n + l1] * g.values[j2 * n + j1];
                        }
                    }
                    out[i2 * n + i1] = acc * cell;
                }
            }
        }
    }
    Ok(Field::new(g.grid, out))
}

/// Precomputed spectral multiplier for repeated circular convolutions with a
/// fixed kernel lag table.
#[derive(Clone, Debug)]
pub struct Convolver {
    grid: Grid,
    lag_hat: Vec<Complex<f64>>,
}

impl Convolver {
    pub fn new(grid: Grid, lag: &[f64]) -> Self {
        assert_eq!(lag.len(), grid.len());
        let mut lag_hat = spectral_transform(&Field::new(grid, lag.to_vec()));
        let cell = grid.cell_measure();
        for c in &mut lag_hat {
            *c *= cell;
        }
        Convolver { grid, lag_hat }
    }

    /// DFT of the lag table scaled by the cell measure (the convolution
    /// symbol).
    pub fn symbol(&self) -> &[Complex<f64>] {
        &self.lag_hat
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn apply(&self, g: &Field) -> Result<Field> {
        if g.grid != self.grid {
            return Err(Error::GridMismatch(g.grid.len(), self.grid.len()));
        }
        let mut g_hat = spectral_transform(g);
        for (c, l) in g_hat.iter_mut().zip(&self.lag_hat) {
            *c *= l;
        }
        Ok(inverse_spectral_transform(self.grid, &g_hat))
    }
}

/// Circular convolution via the spectral product. Agrees with
/// [`convolve_direct`] to round-off.
pub fn circular_convolve(lag: &[f64], g: &Field) -> Result<Field> {
    if lag.len() != g.grid.len() {
        return Err(Error::GridMismatch(lag.len(), g.grid.len()));
    }
    Convolver::new(g.grid, lag).apply(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn wrap_displacement_examples() {
        assert_eq!(wrap_displacement(0.0, 0.0), 0.0);
        assert_abs_diff_eq!(wrap_displacement(PI - 0.1, -PI + 0.1), -0.2, epsilon = 1e-14);
        assert_abs_diff_eq!(wrap_displacement(1.0, 0.5), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn wrap_stays_in_range() {
        for x in [-7.0, -PI, -1e-17, 0.0, 1.0, PI, 9.42, 1e6] {
            let w = wrap_angle(x);
            assert!((-PI..PI).contains(&w), "wrap({x}) = {w}");
        }
    }

    #[test]
    fn grid_geometry() {
        let g = Grid::circle(500);
        assert_abs_diff_eq!(g.dx() * 500.0, TWO_PI, epsilon = 1e-12);
        assert_abs_diff_eq!(g.node(0), -PI + g.dx() / 2.0, epsilon = 1e-15);
        assert!(g.node(499) < PI);
    }

    #[test]
    fn integrate_constant_and_harmonics() {
        let grid = Grid::circle(500);
        let c = Field::constant(grid, 3.25);
        assert_abs_diff_eq!(integrate(&c), 3.25 * TWO_PI, epsilon = 1e-10);
        let cosx = Field::from_fn_1d(grid, f64::cos);
        assert!(integrate(&cosx).abs() < 1e-12);
        // Every resolvable harmonic integrates to zero.
        for k in [1usize, 2, 17, 101, 249] {
            let h = Field::from_fn_1d(grid, |x| (k as f64 * x).cos());
            assert!(integrate(&h).abs() < 1e-10, "k = {k}");
        }
    }

    #[test]
    fn integrate_von_mises_is_one() {
        // exp(kappa cos x) / (2 pi I0(kappa)) with kappa = 1.8
        let grid = Grid::circle(500);
        let kappa = 1.8;
        let i0 = bessel_i0(kappa);
        let f = Field::from_fn_1d(grid, |x| (kappa * x.cos()).exp() / (TWO_PI * i0));
        assert_abs_diff_eq!(integrate(&f), 1.0, epsilon = 1e-10);
    }

    // Series evaluation of the modified Bessel function I0; test oracle only.
    fn bessel_i0(x: f64) -> f64 {
        let mut term = 1.0;
        let mut sum = 1.0;
        for k in 1..60 {
            term *= (x / 2.0) * (x / 2.0) / ((k * k) as f64);
            sum += term;
        }
        sum
    }

    #[test]
    fn derivative_of_sin_is_cos_within_truncation() {
        let grid = Grid::circle(500);
        let f = Field::from_fn_1d(grid, f64::sin);
        let d = derivative(&f, 1, 0);
        let dx = grid.dx();
        let bound = dx * dx / 6.0;
        for i in 0..grid.n() {
            assert!((d.values[i] - grid.node(i).cos()).abs() <= bound * 1.01);
        }
    }

    #[test]
    fn derivative_of_constant_is_zero() {
        let grid = Grid::circle(64);
        let f = Field::constant(grid, 4.2);
        assert_eq!(derivative(&f, 1, 0).linf_norm(), 0.0);
        assert_eq!(derivative(&f, 2, 0).linf_norm(), 0.0);
    }

    #[test]
    fn second_derivative_of_cos() {
        let grid = Grid::circle(500);
        let f = Field::from_fn_1d(grid, f64::cos);
        let d2 = derivative(&f, 2, 0);
        let dx = grid.dx();
        for i in 0..grid.n() {
            assert!((d2.values[i] + grid.node(i).cos()).abs() <= dx * dx);
        }
    }

    #[test]
    fn derivative_2d_axes() {
        let grid = Grid::torus(64);
        let f = Field::from_fn_2d(grid, |x1, x2| x1.sin() + (2.0 * x2).cos());
        let d1 = derivative(&f, 1, 0);
        let d2 = derivative(&f, 1, 1);
        let dx = grid.dx();
        for i2 in 0..grid.n() {
            for i1 in 0..grid.n() {
                let idx = grid.index_2d(i1, i2);
                assert!((d1.values[idx] - grid.node(i1).cos()).abs() < dx * dx);
                assert!(
                    (d2.values[idx] + 2.0 * (2.0 * grid.node(i2)).sin()).abs() < 4.0 * dx * dx
                );
            }
        }
    }

    #[test]
    fn antiderivative_of_zero_is_anchor() {
        let grid = Grid::circle(100);
        let (f, warn) = antiderivative(&Field::zeros(grid), 2.5);
        assert!(!warn);
        assert!(f.values.iter().all(|v| *v == 2.5));
    }

    #[test]
    fn antiderivative_of_cos_is_sin() {
        let grid = Grid::circle(500);
        let f = Field::from_fn_1d(grid, f64::cos);
        let (mut big_f, warn) = antiderivative(&f, 0.0);
        assert!(!warn);
        // Remove the mean so the comparison is against zero-mean sin(x).
        let m = big_f.mean();
        big_f = big_f.map(|v| v - m);
        let dx = grid.dx();
        for i in 0..grid.n() {
            assert!((big_f.values[i] - grid.node(i).sin()).abs() < dx * dx);
        }
    }

    #[test]
    fn antiderivative_closes_on_circle_for_zero_mean() {
        let grid = Grid::circle(200);
        let f = Field::from_fn_1d(grid, |x| x.sin() + 0.3 * (3.0 * x).cos());
        let (big_f, warn) = antiderivative(&f, 0.0);
        assert!(!warn);
        // Wrap-around closure: one more trapezoid step returns to the start.
        let n = grid.n();
        let closing = big_f.values[n - 1] + (f.values[n - 1] + f.values[0]) * grid.dx() / 2.0;
        assert_abs_diff_eq!(closing, big_f.values[0], epsilon = 1e-10);
    }

    #[test]
    fn antiderivative_flags_nonzero_mean() {
        let grid = Grid::circle(100);
        let f = Field::constant(grid, 1.0);
        let (_, warn) = antiderivative(&f, 0.0);
        assert!(warn);
    }

    #[test]
    fn derivative_of_antiderivative_recovers_zero_mean_input() {
        let grid = Grid::circle(500);
        let f = Field::from_fn_1d(grid, |x| x.sin() - 0.5 * (2.0 * x).cos());
        let (big_f, _) = antiderivative(&f, 0.0);
        let d = derivative(&big_f, 1, 0);
        let dx = grid.dx();
        for i in 0..grid.n() {
            assert!((d.values[i] - f.values[i]).abs() < dx * dx);
        }
    }

    #[test]
    fn spectral_roundtrip_identity() {
        let grid = Grid::circle(128);
        let f = Field::from_fn_1d(grid, |x| (x.sin() * 3.0).exp() * (5.0 * x).cos());
        let back = inverse_spectral_transform(grid, &spectral_transform(&f));
        let diff: f64 = f
            .values
            .iter()
            .zip(&back.values)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        assert!(diff / f.l2_norm() < 1e-12);
    }

    #[test]
    fn spectral_single_harmonic_concentrates() {
        let grid = Grid::circle(64);
        let f = Field::from_fn_1d(grid, |x| (3.0 * x).cos());
        let hat = spectral_transform(&f);
        for (i, c) in hat.iter().enumerate() {
            let k = wavenumber(i, 64).unsigned_abs();
            if k == 3 {
                assert!(c.norm() > 1.0);
            } else {
                assert!(c.norm() < 1e-10, "leakage at bin {i}");
            }
        }
        let constant = Field::constant(grid, 1.5);
        let hat = spectral_transform(&constant);
        assert!(hat[0].norm() > 1.0);
        assert!(hat[1..].iter().all(|c| c.norm() < 1e-10));
    }

    #[test]
    fn convolution_direct_matches_fft() {
        let grid = Grid::circle(128);
        let lag: Vec<f64> = (0..128)
            .map(|m| {
                let d = wrap_angle(m as f64 * grid.dx());
                d.sin() + 0.2 * (2.0 * d).cos()
            })
            .collect();
        let g = Field::from_fn_1d(grid, |x| (x.cos() * 1.3).exp());
        let a = convolve_direct(&lag, &g).unwrap();
        let b = circular_convolve(&lag, &g).unwrap();
        let num: f64 = a
            .values
            .iter()
            .zip(&b.values)
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            .sqrt();
        assert!(num / a.l2_norm().max(1e-300) < 1e-10);
    }

    #[test]
    fn odd_kernel_convolved_with_constant_vanishes() {
        let grid = Grid::circle(200);
        // An odd lag table: lag[m] = sin(m dx) wrapped.
        let lag: Vec<f64> = (0..200)
            .map(|m| wrap_angle(m as f64 * grid.dx()).sin())
            .collect();
        let g = Field::constant(grid, 0.7);
        let out = circular_convolve(&lag, &g).unwrap();
        assert!(out.linf_norm() < 1e-12);
    }

    #[test]
    fn convolution_with_discrete_impulse_shifts_kernel() {
        let grid = Grid::circle(128);
        let lag: Vec<f64> = (0..128)
            .map(|m| wrap_angle(m as f64 * grid.dx()).cos())
            .collect();
        let mass = 2.0;
        let i0 = 40;
        let mut g = Field::zeros(grid);
        g.values[i0] = mass / grid.dx(); // unit-mass-scaled impulse
        let out = circular_convolve(&lag, &g).unwrap();
        for (i, v) in out.values.iter().enumerate() {
            let expected = mass * lag[(i + 128 - i0) % 128];
            assert_abs_diff_eq!(*v, expected, epsilon = 1e-10);
        }
    }

    #[test]
    fn convolution_commutes_for_fields() {
        let grid = Grid::circle(128);
        let f = Field::from_fn_1d(grid, |x| x.cos() + 0.1);
        let g = Field::from_fn_1d(grid, |x| (2.0 * x).cos() - 0.4);
        let fg = circular_convolve(&f.values, &g).unwrap();
        let gf = circular_convolve(&g.values, &f).unwrap();
        for (a, b) in fg.values.iter().zip(&gf.values) {
            assert_abs_diff_eq!(*a, *b, epsilon = 1e-12);
        }
    }

    proptest! {
        #[test]
        fn prop_wrap_is_congruent(x in -50.0f64..50.0, y in -50.0f64..50.0) {
            let w = wrap_displacement(x, y);
            prop_assert!((-PI..PI).contains(&w));
            let k = ((x - y - w) / TWO_PI).round();
            prop_assert!(((x - y - w) - k * TWO_PI).abs() < 1e-9);
        }

        #[test]
        fn prop_convolution_is_bilinear(seed in 0u64..1000) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let grid = Grid::circle(64);
            let rand_field = |rng: &mut rand_chacha::ChaCha8Rng| {
                Field::new(grid, (0..64).map(|_| rng.gen_range(-1.0..1.0)).collect())
            };
            let k = rand_field(&mut rng);
            let g1 = rand_field(&mut rng);
            let g2 = rand_field(&mut rng);
            let (a, b) = (rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
            let combo = g1.scale(a).zip_with(&g2.scale(b), |x, y| x + y).unwrap();
            let lhs = circular_convolve(&k.values, &combo).unwrap();
            let mut rhs = circular_convolve(&k.values, &g1).unwrap().scale(a);
            rhs.axpy(b, &circular_convolve(&k.values, &g2).unwrap());
            for (x, y) in lhs.values.iter().zip(&rhs.values) {
                prop_assert!((x - y).abs() < 1e-12);
            }
        }

        #[test]
        fn prop_spectral_roundtrip(seed in 0u64..1000) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let grid = Grid::circle(32);
            let f = Field::new(grid, (0..32).map(|_| rng.gen_range(-5.0..5.0)).collect());
            let back = inverse_spectral_transform(grid, &spectral_transform(&f));
            let err: f64 = f.values.iter().zip(&back.values)
                .map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
            prop_assert!(err / f.l2_norm().max(1e-12) < 1e-12);
        }
    }
}
