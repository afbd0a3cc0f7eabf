//! Feasibility analysis and steady-state reference synthesis.
//!
//! Given a desired strictly positive followers' density with mass `M_F`, the
//! steady advection velocity that balances diffusion is
//! `v = D rho_x / rho`. A leaders' density producing that velocity through
//! the interaction kernel exists with mass `M_L = 1 - M_F` iff `M_L` exceeds
//! a computable threshold `M̂_L = max_x h(x)`, where `h` is the zero-mean
//! field with `rho_bar_L = (M_L - h) / |domain|`. For the single repulsive
//! kernel `h` has a closed form in the log-density; otherwise it is obtained
//! by spectral deconvolution of the desired velocity.

use std::f64::consts::PI;

use crate::deconvolve::{deconvolve_2d, deconvolve_spectral_1d, ConstantRule};
use crate::field::{derivative, integrate, Field, FieldKind, Grid, TWO_PI};
use crate::kernel::KernelSpec;
use crate::{Error, Result};

/// Desired followers' density plus the physical parameters that determine
/// the steady-state references.
#[derive(Clone, Debug)]
pub struct TargetSpec {
    /// Desired followers' density (strictly positive, mass in (0,1)).
    pub density: Field,
    /// Followers' mass; leaders get `1 - mass_f`.
    pub mass_f: f64,
    /// Followers' diffusivity.
    pub diffusivity: f64,
    pub kernel: KernelSpec,
}

impl TargetSpec {
    pub fn new(density: Field, diffusivity: f64, kernel: KernelSpec) -> Result<Self> {
        assert_eq!(kernel.dim(), density.grid.dim(), "kernel/target dimension mismatch");
        assert!(diffusivity >= 0.0);
        let min = density.min();
        if min <= 0.0 {
            return Err(Error::NonPositiveTarget { min });
        }
        let mass_f = integrate(&density);
        if !(mass_f > 0.0 && mass_f < 1.0) {
            return Err(Error::ConfigParse(format!(
                "followers' mass must lie in (0, 1), got {mass_f}"
            )));
        }
        Ok(TargetSpec {
            density: density.with_kind(FieldKind::Density),
            mass_f,
            diffusivity,
            kernel,
        })
    }

    pub fn mass_l(&self) -> f64 {
        1.0 - self.mass_f
    }

    /// Unit-mass normalization of the target.
    pub fn normalized(&self) -> Field {
        self.density.scale(1.0 / self.mass_f)
    }
}

/// Outcome of the feasibility analysis: the threshold field `h`, the minimum
/// leaders' mass, and the synthesized references.
#[derive(Clone, Debug)]
pub struct FeasibilityReport {
    /// Second derivative (Laplacian in 2D) of the log-normalized target.
    pub g1: Field,
    /// Log of the normalized target.
    pub g2: Field,
    /// Integral of `g2`.
    pub c: f64,
    /// Zero-mean threshold field; `min_leader_mass = max h`.
    pub h: Field,
    /// Minimum leaders' mass that renders the target admissible.
    pub min_leader_mass: f64,
    /// Leaders' mass available (`1 - mass_f`).
    pub mass_l: f64,
    pub feasible: bool,
    /// `2 - ||g1||_inf`; positive margin is the follower-convergence
    /// hypothesis.
    pub stability_margin: f64,
    /// Steady advection velocity `D grad(rho_F) / rho_F`, one field per axis.
    pub velocity_reference: Vec<Field>,
    /// Steady leaders' density (valid only when feasible).
    pub leader_reference: Field,
    /// Additive deconvolution constant used in the assembly.
    pub constant: f64,
}

impl FeasibilityReport {
    pub fn require_feasible(&self) -> Result<()> {
        if self.feasible && self.leader_reference.min() >= -1e-10 {
            return Ok(());
        }
        let volume = TWO_PI.powi(self.leader_reference.grid.dim() as i32);
        Err(if self.leader_reference.grid.dim() == 2 {
            Error::Infeasible2D {
                a2: (self.mass_l - self.min_leader_mass) / volume,
            }
        } else {
            Error::Infeasible {
                required: self.min_leader_mass,
                available: self.mass_l,
            }
        })
    }
}

/// Steady advection velocity for a 1D target: `D rho_x / rho`.
pub fn desired_velocity_1d(target: &TargetSpec) -> Result<Field> {
    let min = target.density.min();
    if min <= 0.0 {
        return Err(Error::NonPositiveTarget { min });
    }
    let dr = derivative(&target.density, 1, 0);
    Ok(dr
        .zip_with(&target.density, |num, den| target.diffusivity * num / den)?
        .with_kind(FieldKind::Velocity))
}

/// Steady advection velocity components for a 2D target.
pub fn desired_velocity_2d(target: &TargetSpec) -> Result<[Field; 2]> {
    let min = target.density.min();
    if min <= 0.0 {
        return Err(Error::NonPositiveTarget { min });
    }
    let mut out = Vec::with_capacity(2);
    for axis in 0..2 {
        let dr = derivative(&target.density, 1, axis);
        out.push(
            dr.zip_with(&target.density, |num, den| target.diffusivity * num / den)?
                .with_kind(FieldKind::Velocity),
        );
    }
    let second = out.pop().unwrap();
    Ok([out.pop().unwrap(), second])
}

/// Dimension-dispatching feasibility analysis.
pub fn analyze(target: &TargetSpec) -> Result<FeasibilityReport> {
    match target.density.grid.dim() {
        1 => feasibility_1d(target),
        _ => feasibility_2d(target),
    }
}

pub fn feasibility_1d(target: &TargetSpec) -> Result<FeasibilityReport> {
    let grid = target.density.grid;
    assert_eq!(grid.dim(), 1);
    let d = target.diffusivity;
    let v_bar = desired_velocity_1d(target)?;
    let g2 = log_density(&target.normalized());
    let g1 = derivative(&g2, 2, 0);
    let c = integrate(&g2);
    let (h, constant) = if let Some(length) = target.kernel.single_repulsive_length() {
        let l2 = length * length;
        // Closed form: h = -pi D g1 + (pi D / L^2) g2 - D C / (2 L^2).
        let h = g1
            .zip_with(&g2, |a, b| -PI * d * a + PI * d / l2 * b)?
            .map(|v| v - d * c / (2.0 * l2));
        (h, (1.0 - target.mass_f + d * c / (2.0 * l2)) / TWO_PI)
    } else {
        // Multi-component kernels have no closed form: deconvolve the
        // desired velocity and read the threshold off the zero-mean part.
        let lag = target.kernel.lag_table(&grid);
        let big_h = deconvolve_spectral_1d(&v_bar, &lag, ConstantRule::ZeroMean)?.field;
        (big_h.scale(-TWO_PI), target.mass_l() / TWO_PI)
    };
    Ok(finish_report(target, vec![v_bar], g1, g2, c, h, constant))
}

pub fn feasibility_2d(target: &TargetSpec) -> Result<FeasibilityReport> {
    let grid = target.density.grid;
    assert_eq!(grid.dim(), 2);
    let v_bar = desired_velocity_2d(target)?;
    let g2 = log_density(&target.normalized());
    let mut g1 = derivative(&g2, 2, 0);
    g1.axpy(1.0, &derivative(&g2, 2, 1));
    let c = integrate(&g2);
    let lag = target.kernel.lag_table_2d(&grid);
    let big_h = deconvolve_2d(&v_bar, &lag, ConstantRule::ZeroMean)?.field;
    let volume = TWO_PI * TWO_PI;
    let h = big_h.scale(-volume);
    let constant = target.mass_l() / volume;
    let [v1, v2] = v_bar;
    Ok(finish_report(target, vec![v1, v2], g1, g2, c, h, constant))
}

/// Leaders' reference density, or an infeasibility error.
pub fn reference_leader_density(target: &TargetSpec) -> Result<Field> {
    let report = analyze(target)?;
    report.require_feasible()?;
    Ok(report.leader_reference)
}

fn log_density(normalized: &Field) -> Field {
    // The floor only guards against overflow; valid targets are strictly
    // positive.
    normalized.map(|v| v.max(1e-300).ln())
}

fn finish_report(
    target: &TargetSpec,
    velocity_reference: Vec<Field>,
    g1: Field,
    g2: Field,
    c: f64,
    h: Field,
    constant: f64,
) -> FeasibilityReport {
    let mass_l = target.mass_l();
    let volume = TWO_PI.powi(target.density.grid.dim() as i32);
    let min_leader_mass = h.max();
    let leader_reference = h
        .map(|v| (mass_l - v) / volume)
        .with_kind(FieldKind::Density);
    FeasibilityReport {
        stability_margin: 2.0 - g1.linf_norm(),
        feasible: min_leader_mass <= mass_l,
        min_leader_mass,
        mass_l,
        g1,
        g2,
        c,
        h,
        velocity_reference,
        leader_reference,
        constant,
    }
}

/// Von Mises density on the circle, numerically normalized to the given
/// mass.
pub fn von_mises_1d(grid: Grid, kappa: f64, mu: f64, mass: f64) -> Field {
    let raw = Field::from_fn_1d(grid, |x| (kappa * (x - mu).cos()).exp());
    let z = integrate(&raw);
    raw.scale(mass / z).with_kind(FieldKind::Density)
}

/// Product of two von Mises factors on the torus, normalized to the given
/// mass.
pub fn von_mises_2d(grid: Grid, k1: f64, k2: f64, mass: f64) -> Field {
    let raw = Field::from_fn_2d(grid, |x1, x2| (k1 * x1.cos() + k2 * x2.cos()).exp());
    let z = integrate(&raw);
    raw.scale(mass / z).with_kind(FieldKind::Density)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::circular_convolve;
    use crate::kernel::KernelComponent;
    use approx::assert_abs_diff_eq;

    fn vm_target(grid: Grid, kappa: f64, mu: f64, mass_f: f64, d: f64, length: f64) -> TargetSpec {
        TargetSpec::new(
            von_mises_1d(grid, kappa, mu, mass_f),
            d,
            KernelSpec::repulsive_1d(length),
        )
        .unwrap()
    }

    #[test]
    fn uniform_target_is_always_feasible() {
        let grid = Grid::circle(500);
        let target = TargetSpec::new(
            Field::constant(grid, 0.6 / TWO_PI),
            0.05,
            KernelSpec::repulsive_1d(PI),
        )
        .unwrap();
        let report = feasibility_1d(&target).unwrap();
        assert!(report.feasible);
        assert!(report.h.linf_norm() < 1e-10);
        assert!(report.min_leader_mass.abs() < 1e-10);
        for v in &report.leader_reference.values {
            assert_abs_diff_eq!(*v, 0.4 / TWO_PI, epsilon = 1e-12);
        }
        assert!(report.velocity_reference[0].linf_norm() < 1e-12);
    }

    #[test]
    fn rejects_nonpositive_target() {
        let grid = Grid::circle(100);
        let density = Field::from_fn_1d(grid, |x| x.cos()); // dips negative
        assert!(matches!(
            TargetSpec::new(density, 0.05, KernelSpec::repulsive_1d(PI)),
            Err(Error::NonPositiveTarget { .. })
        ));
    }

    #[test]
    fn desired_velocity_matches_closed_form_for_von_mises() {
        // v = D (log rho)_x = -D kappa sin(x) for a von Mises target.
        let grid = Grid::circle(500);
        let target = vm_target(grid, 1.8, 0.0, 0.6, 0.05, PI);
        let v = desired_velocity_1d(&target).unwrap();
        let dx = grid.dx();
        for i in 0..grid.n() {
            let expected = -0.05 * 1.8 * grid.node(i).sin();
            assert!((v.values[i] - expected).abs() < 2.0 * dx * dx);
        }
        assert!(integrate(&v).abs() < 1e-8);
    }

    #[test]
    fn zero_diffusivity_needs_no_velocity() {
        let grid = Grid::circle(200);
        let target = vm_target(grid, 1.8, 0.0, 0.6, 0.0, PI);
        let v = desired_velocity_1d(&target).unwrap();
        assert_eq!(v.linf_norm(), 0.0);
    }

    #[test]
    fn min_leader_mass_matches_von_mises_closed_form() {
        // For a von Mises target, max h = pi D (1 + 1/L^2) kappa.
        let grid = Grid::circle(500);
        let (d, kappa, length) = (0.05, 1.8, PI);
        let target = vm_target(grid, kappa, 0.0, 0.6, d, length);
        let report = feasibility_1d(&target).unwrap();
        let expected = PI * d * (1.0 + 1.0 / (length * length)) * kappa;
        assert_abs_diff_eq!(expected, 0.31139, epsilon = 1e-5);
        assert!((report.min_leader_mass - expected).abs() / expected < 2e-4);
        assert!(report.feasible, "M_L = 0.4 admits this target");
        // h is a pure cosine of that amplitude.
        for i in 0..grid.n() {
            let e = expected * grid.node(i).cos();
            assert!((report.h.values[i] - e).abs() < 3e-4);
        }
    }

    #[test]
    fn min_leader_mass_closed_form_across_parameter_grid() {
        let grid = Grid::circle(500);
        for d in [0.01, 0.03, 0.05, 0.08, 0.1] {
            for kappa in [0.5, 1.0, 1.8, 2.5, 3.0] {
                let target = vm_target(grid, kappa, 0.0, 0.6, d, PI);
                let report = feasibility_1d(&target).unwrap();
                let expected = PI * d * (1.0 + 1.0 / (PI * PI)) * kappa;
                assert!(
                    (report.min_leader_mass - expected).abs() / expected < 2e-4,
                    "D = {d}, kappa = {kappa}"
                );
            }
        }
    }

    #[test]
    fn leader_reference_matches_closed_form() {
        // rho_bar_L = -(D kappa / 2)(1 + 1/L^2) cos(x) + M_L / 2 pi.
        let grid = Grid::circle(500);
        let (d, kappa) = (0.05, 1.8);
        let target = vm_target(grid, kappa, 0.0, 0.6, d, PI);
        let rho_l = reference_leader_density(&target).unwrap();
        let amp = d * kappa / 2.0 * (1.0 + 1.0 / (PI * PI));
        let mut err2 = 0.0;
        let mut ref2 = 0.0;
        for i in 0..grid.n() {
            let expected = -amp * grid.node(i).cos() + 0.4 / TWO_PI;
            err2 += (rho_l.values[i] - expected).powi(2);
            ref2 += expected * expected;
        }
        assert!((err2 / ref2).sqrt() < 1e-4);
        // Minimum near x = 0 and mass M_L.
        let near_zero = rho_l.values[grid.n() / 2];
        assert_abs_diff_eq!(near_zero, 0.014102, epsilon = 1e-4);
        assert_abs_diff_eq!(integrate(&rho_l), 0.4, epsilon = 1e-8);
        assert!(rho_l.min() >= -1e-10);
    }

    #[test]
    fn infeasible_when_leaders_too_scarce() {
        let grid = Grid::circle(500);
        // M_F = 0.95 leaves M_L = 0.05 < M_hat ~ 0.311.
        let target = vm_target(grid, 1.8, 0.0, 0.95, 0.05, PI);
        let report = feasibility_1d(&target).unwrap();
        assert!(!report.feasible);
        assert!(matches!(
            reference_leader_density(&target),
            Err(Error::Infeasible { .. })
        ));
    }

    #[test]
    fn threshold_invariant_under_grid_rotations() {
        let grid = Grid::circle(500);
        let base = feasibility_1d(&vm_target(grid, 1.8, 0.0, 0.6, 0.05, PI))
            .unwrap()
            .min_leader_mass;
        for k in [1usize, 17, 133, 250] {
            let mu = k as f64 * grid.dx();
            let rotated = feasibility_1d(&vm_target(grid, 1.8, mu, 0.6, 0.05, PI))
                .unwrap()
                .min_leader_mass;
            assert_abs_diff_eq!(rotated, base, epsilon = 1e-10);
        }
    }

    #[test]
    fn stability_margin_is_two_minus_kappa() {
        // ||g1||_inf = kappa; centering the mode on a node and refining the
        // grid brings the finite-difference sup within 1e-6.
        let grid = Grid::circle(4096);
        let mu = grid.node(1000);
        let report = feasibility_1d(&vm_target(grid, 1.8, mu, 0.6, 0.05, PI)).unwrap();
        assert_abs_diff_eq!(report.stability_margin, 0.2, epsilon = 1e-6);
    }

    #[test]
    fn multi_component_path_agrees_with_closed_form() {
        // Two half-weight components of equal length are the same kernel but
        // take the numerical route.
        let grid = Grid::circle(500);
        let split = KernelSpec::new_1d(vec![
            KernelComponent { weight: 0.5, length: PI },
            KernelComponent { weight: 0.5, length: PI },
        ]);
        assert!(split.single_repulsive_length().is_none());
        let density = von_mises_1d(grid, 1.8, 0.0, 0.6);
        let closed = feasibility_1d(
            &TargetSpec::new(density.clone(), 0.05, KernelSpec::repulsive_1d(PI)).unwrap(),
        )
        .unwrap();
        let numeric =
            feasibility_1d(&TargetSpec::new(density, 0.05, split).unwrap()).unwrap();
        assert!(
            (numeric.min_leader_mass - closed.min_leader_mass).abs()
                / closed.min_leader_mass
                < 1e-3
        );
        let mut err2 = 0.0;
        for (a, b) in numeric
            .leader_reference
            .values
            .iter()
            .zip(&closed.leader_reference.values)
        {
            err2 += (a - b) * (a - b);
        }
        assert!(err2.sqrt() / closed.leader_reference.l2_norm() * grid.dx().sqrt() < 1e-3);
    }

    #[test]
    fn convolving_reference_reproduces_desired_velocity() {
        // Both sides carry O(dx^2) discretization; a fine grid resolves the
        // continuum identity below 1e-6.
        let grid = Grid::circle(8192);
        let target = vm_target(grid, 1.8, 0.0, 0.6, 0.05, PI);
        let report = feasibility_1d(&target).unwrap();
        let lag = target.kernel.lag_table(&grid);
        let v = circular_convolve(&lag, &report.leader_reference).unwrap();
        let mut err2 = 0.0;
        for (a, b) in v.values.iter().zip(&report.velocity_reference[0].values) {
            err2 += (a - b) * (a - b);
        }
        let rel = err2.sqrt() / report.velocity_reference[0]
            .values
            .iter()
            .map(|v| v * v)
            .sum::<f64>()
            .sqrt();
        assert!(rel < 1e-6, "consistency residual = {rel:e}");
    }

    #[test]
    fn uniform_2d_target_feasible_with_uniform_reference() {
        let grid = Grid::torus(16);
        let target = TargetSpec::new(
            Field::constant(grid, 0.6 / (TWO_PI * TWO_PI)),
            0.05,
            KernelSpec::repulsive_2d(PI, 10),
        )
        .unwrap();
        let report = feasibility_2d(&target).unwrap();
        assert!(report.feasible);
        for v in &report.leader_reference.values {
            assert_abs_diff_eq!(*v, 0.4 / (TWO_PI * TWO_PI), epsilon = 1e-10);
        }
    }

    #[test]
    fn bimodal_2d_reference_setup_is_feasible() {
        let grid = Grid::torus(50);
        let target = TargetSpec::new(
            von_mises_2d(grid, 0.5, 0.5, 0.6),
            0.05,
            KernelSpec::repulsive_2d(PI, 10),
        )
        .unwrap();
        let report = feasibility_2d(&target).unwrap();
        assert!(report.feasible, "M_hat = {}", report.min_leader_mass);
        assert!(report.leader_reference.min() >= -1e-10);
        assert_abs_diff_eq!(integrate(&report.leader_reference), 0.4, epsilon = 1e-8);
        for v in &report.velocity_reference {
            assert!(integrate(v).abs() < 1e-8);
        }
    }

    #[test]
    fn peaked_2d_target_with_scarce_leaders_is_infeasible() {
        let grid = Grid::torus(32);
        let target = TargetSpec::new(
            von_mises_2d(grid, 2.0, 2.0, 0.99),
            0.5,
            KernelSpec::repulsive_2d(PI, 10),
        )
        .unwrap();
        let report = feasibility_2d(&target).unwrap();
        assert!(!report.feasible);
        assert!(matches!(
            reference_leader_density(&target),
            Err(Error::Infeasible2D { .. })
        ));
    }
}
