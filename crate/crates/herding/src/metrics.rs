//! Convergence metrics shared by the macroscopic and agent-based
//! simulators.

use crate::field::Field;

/// Percentage error series: each squared-norm sample normalized by the
/// maximum over the whole history, as a percentage. An all-zero history maps
/// to all zeros.
pub fn percentage_error(sq_norms: &[f64]) -> Vec<f64> {
    assert!(!sq_norms.is_empty(), "empty error history");
    let max = sq_norms.iter().copied().fold(0.0, f64::max);
    if max == 0.0 {
        return vec![0.0; sq_norms.len()];
    }
    sq_norms.iter().map(|v| v / max * 100.0).collect()
}

/// Kullback-Leibler divergence with a floored denominator.
#[derive(Clone, Copy, Debug)]
pub struct KlDivergence {
    pub value: f64,
    /// Cells where the actual density fell below the floor and the ratio was
    /// clamped; nonzero counts indicate a support violation.
    pub floored_cells: usize,
}

/// Divergence floor applied to the actual density inside the log ratio.
pub const KL_FLOOR: f64 = 1e-12;

/// `int ref * log(ref / actual)` by midpoint quadrature. Nonnegative (within
/// round-off) when both densities carry the same mass.
pub fn kl_divergence(reference: &Field, actual: &Field) -> KlDivergence {
    assert_eq!(reference.grid, actual.grid);
    let mut floored = 0;
    let mut acc = 0.0;
    for (r, a) in reference.values.iter().zip(&actual.values) {
        if *r <= 0.0 {
            continue; // lim p->0 of p log p vanishes
        }
        let mut denom = *a;
        if denom < KL_FLOOR {
            denom = KL_FLOOR;
            floored += 1;
        }
        acc += r * (r / denom).ln();
    }
    KlDivergence {
        value: acc * reference.grid.cell_measure(),
        floored_cells: floored,
    }
}

/// Squared discrete L2 norm of the difference of two fields.
pub fn error_sq_norm(reference: &Field, actual: &Field) -> f64 {
    debug_assert_eq!(reference.grid, actual.grid);
    reference
        .values
        .iter()
        .zip(&actual.values)
        .map(|(r, a)| (r - a) * (r - a))
        .sum::<f64>()
        * reference.grid.cell_measure()
}

/// Mean of the last ~10% of a recorded series; the steady-state estimate
/// used by the robustness and ensemble studies.
pub fn steady_value(series: &[f64]) -> f64 {
    assert!(!series.is_empty());
    let tail = (series.len() / 10).max(1);
    let slice = &series[series.len() - tail..];
    slice.iter().sum::<f64>() / slice.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::feasibility::von_mises_1d;
    use crate::field::{Field, Grid, TWO_PI};
    use approx::assert_abs_diff_eq;

    #[test]
    fn percentage_error_peaks_at_hundred() {
        let e = percentage_error(&[4.0, 1.0, 0.25]);
        assert_eq!(e[0], 100.0);
        assert_abs_diff_eq!(e[1], 25.0, epsilon = 1e-12);
        assert!(e.iter().all(|v| (0.0..=100.0).contains(v)));
    }

    #[test]
    fn percentage_error_of_zero_history_is_zero() {
        assert_eq!(percentage_error(&[0.0, 0.0]), vec![0.0, 0.0]);
    }

    #[test]
    fn kl_of_identical_densities_is_zero() {
        let grid = Grid::circle(200);
        let p = von_mises_1d(grid, 1.8, 0.0, 1.0);
        let kl = kl_divergence(&p, &p);
        assert!(kl.value.abs() < 1e-12);
        assert_eq!(kl.floored_cells, 0);
    }

    // Series oracles for the modified Bessel functions; test-only.
    fn bessel_i(nu: usize, x: f64) -> f64 {
        let mut term = (x / 2.0).powi(nu as i32)
            / (1..=nu).map(|k| k as f64).product::<f64>().max(1.0);
        let mut sum = term;
        for k in 1..60 {
            term *= (x / 2.0) * (x / 2.0) / (k as f64 * (k + nu) as f64);
            sum += term;
        }
        sum
    }

    #[test]
    fn kl_von_mises_against_uniform_matches_closed_form() {
        // D_KL = kappa I1(kappa)/I0(kappa) - log I0(kappa)
        let grid = Grid::circle(500);
        let kappa = 1.8;
        let p = von_mises_1d(grid, kappa, 0.0, 1.0);
        let q = Field::constant(grid, 1.0 / TWO_PI);
        let expected =
            kappa * bessel_i(1, kappa) / bessel_i(0, kappa) - bessel_i(0, kappa).ln();
        assert_abs_diff_eq!(expected, 0.5038, epsilon = 1e-4);
        assert_abs_diff_eq!(kl_divergence(&p, &q).value, expected, epsilon = 1e-8);
    }

    #[test]
    fn kl_scales_with_common_mass() {
        let grid = Grid::circle(300);
        let p = von_mises_1d(grid, 1.0, 0.4, 1.0);
        let q = von_mises_1d(grid, 0.5, -0.2, 1.0);
        let base = kl_divergence(&p, &q).value;
        let scaled = kl_divergence(&p.scale(0.4), &q.scale(0.4)).value;
        assert_abs_diff_eq!(scaled, 0.4 * base, epsilon = 1e-12);
        assert!(base >= -1e-10);
    }

    #[test]
    fn kl_flags_support_violation() {
        let grid = Grid::circle(100);
        let p = Field::constant(grid, 1.0 / TWO_PI);
        let mut q = p.clone();
        q.values[3] = 0.0;
        assert_eq!(kl_divergence(&p, &q).floored_cells, 1);
    }

    #[test]
    fn steady_value_averages_the_tail() {
        let series: Vec<f64> = (0..100).map(|i| if i < 90 { 50.0 } else { 2.0 }).collect();
        assert_abs_diff_eq!(steady_value(&series), 2.0, epsilon = 1e-12);
    }
}
