//! Periodized interaction kernels.
//!
//! The 1D repulsive kernel has the closed form
//!
//! ```text
//! f(x) = sgn(x) / (exp(2*pi/L) - 1) * [exp((2*pi - |x|)/L) - exp(|x|/L)]
//! ```
//!
//! which is the periodization of `sgn(x) exp(-|x|/L)` over the circle.
//! Linear combinations of such terms (signed weights) model attractive,
//! repulsive and mixed interactions. In 2D no closed form is available; the
//! kernel is the truncated periodization of the radial exponential
//! `(x/|x|) exp(-|x|/L)`.

use serde::{Deserialize, Serialize};

use crate::field::{wrap_angle, Grid, TWO_PI};

/// One signed exponential component; the weight sign encodes
/// attraction/repulsion.
#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq)]
pub struct KernelComponent {
    pub weight: f64,
    #[serde(rename = "L")]
    pub length: f64,
}

/// Default 2D periodization truncation; checked for convergence at
/// construction.
pub const DEFAULT_TRUNCATION: usize = 10;

/// Parametrization of a periodized odd soft-core interaction kernel.
#[derive(Clone, Debug, PartialEq)]
pub struct KernelSpec {
    components: Vec<KernelComponent>,
    dim: usize,
    truncation: usize,
}

impl KernelSpec {
    /// The single repulsive component of unit weight used throughout the
    /// reference experiments.
    pub fn repulsive_1d(length: f64) -> Self {
        Self::new_1d(vec![KernelComponent {
            weight: 1.0,
            length,
        }])
    }

    pub fn new_1d(components: Vec<KernelComponent>) -> Self {
        assert!(!components.is_empty());
        assert!(components.iter().all(|c| c.length > 0.0));
        KernelSpec {
            components,
            dim: 1,
            truncation: DEFAULT_TRUNCATION,
        }
    }

    pub fn repulsive_2d(length: f64, truncation: usize) -> Self {
        Self::new_2d(
            vec![KernelComponent {
                weight: 1.0,
                length,
            }],
            truncation,
        )
    }

    pub fn new_2d(components: Vec<KernelComponent>, truncation: usize) -> Self {
        assert!(!components.is_empty());
        assert!(components.iter().all(|c| c.length > 0.0));
        assert!(truncation >= 1);
        KernelSpec {
            components,
            dim: 2,
            truncation,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn components(&self) -> &[KernelComponent] {
        &self.components
    }

    pub fn truncation(&self) -> usize {
        self.truncation
    }

    /// The length scale, when the kernel is a single unit-weight repulsive
    /// component — the precondition of the closed-form feasibility and
    /// deconvolution paths.
    pub fn single_repulsive_length(&self) -> Option<f64> {
        match self.components.as_slice() {
            [c] if c.weight == 1.0 => Some(c.length),
            _ => None,
        }
    }

    /// Closed-form evaluation at a wrapped displacement `x` in `[-pi, pi)`.
    pub fn eval_1d(&self, x: f64) -> f64 {
        debug_assert_eq!(self.dim, 1);
        self.components
            .iter()
            .map(|c| c.weight * periodic_repulsive(x, c.length))
            .sum()
    }

    /// The non-periodic base kernel `sum_c w_c sgn(x) exp(-|x|/L_c)`.
    pub fn base_1d(&self, x: f64) -> f64 {
        if x == 0.0 {
            return 0.0; // sgn(0) = 0: soft core
        }
        self.components
            .iter()
            .map(|c| c.weight * x.signum() * (-x.abs() / c.length).exp())
            .sum()
    }

    /// Truncated periodization of the radial exponential in 2D. Returns the
    /// two vector components at a wrapped displacement in `[-pi, pi)^2`.
    pub fn eval_2d(&self, x1: f64, x2: f64) -> [f64; 2] {
        debug_assert_eq!(self.dim, 2);
        self.eval_2d_truncated(x1, x2, self.truncation)
    }

    fn eval_2d_truncated(&self, x1: f64, x2: f64, k_max: usize) -> [f64; 2] {
        if x1 == 0.0 && x2 == 0.0 {
            return [0.0; 2]; // image pairs cancel exactly by symmetry
        }
        let mut out = [0.0; 2];
        let kk = k_max as i64;
        for k1 in -kk..=kk {
            for k2 in -kk..=kk {
                let y1 = x1 + TWO_PI * k1 as f64;
                let y2 = x2 + TWO_PI * k2 as f64;
                let r = (y1 * y1 + y2 * y2).sqrt();
                if r == 0.0 {
                    continue; // soft core: base kernel vanishes at the origin
                }
                for c in &self.components {
                    let mag = c.weight * (-r / c.length).exp() / r;
                    out[0] += mag * y1;
                    out[1] += mag * y2;
                }
            }
        }
        out
    }

    /// Kernel samples at the grid's lag displacements `m * dx`, wrapped; the
    /// layout expected by [`crate::field::circular_convolve`]. 1D kernels
    /// only.
    pub fn lag_table(&self, grid: &Grid) -> Vec<f64> {
        assert_eq!(self.dim, 1);
        assert_eq!(grid.dim(), 1);
        let dx = grid.dx();
        (0..grid.n())
            .map(|m| self.eval_1d(wrap_angle(m as f64 * dx)))
            .collect()
    }

    /// 2D vector kernel samples at the grid's lag displacements, row-major
    /// with axis 0 fastest. Panics if the truncated periodization has not
    /// converged (`K` vs `K+4` probe difference above `1e-6`).
    pub fn lag_table_2d(&self, grid: &Grid) -> [Vec<f64>; 2] {
        assert_eq!(self.dim, 2);
        assert_eq!(grid.dim(), 2);
        let probe = self.eval_2d_truncated(1.0, 1.0, self.truncation);
        let refined = self.eval_2d_truncated(1.0, 1.0, self.truncation + 4);
        let diff = (probe[0] - refined[0]).hypot(probe[1] - refined[1]);
        assert!(
            diff < 1e-6,
            "2D kernel periodization not converged at K = {} (probe diff {diff:e})",
            self.truncation
        );
        let n = grid.n();
        let dx = grid.dx();
        let mut t1 = Vec::with_capacity(n * n);
        let mut t2 = Vec::with_capacity(n * n);
        for m2 in 0..n {
            let d2 = wrap_angle(m2 as f64 * dx);
            for m1 in 0..n {
                let d1 = wrap_angle(m1 as f64 * dx);
                let v = self.eval_2d(d1, d2);
                t1.push(v[0]);
                t2.push(v[1]);
            }
        }
        [t1, t2]
    }
}

/// Closed-form periodized repulsive kernel with unit weight.
pub fn periodic_repulsive(x: f64, length: f64) -> f64 {
    if x == 0.0 {
        return 0.0; // sgn(0) = 0: soft core
    }
    let denom = (TWO_PI / length).exp() - 1.0;
    x.signum() * (((TWO_PI - x.abs()) / length).exp() - (x.abs() / length).exp()) / denom
}

/// Truncated periodization `sum_{k=-K}^{K} base(x + 2*pi*k)` of a
/// non-periodic kernel with exponential decay.
pub fn periodize_series(base: impl Fn(f64) -> f64, x: f64, truncation: usize) -> f64 {
    let kk = truncation as i64;
    (-kk..=kk).map(|k| base(x + TWO_PI * k as f64)).sum()
}
