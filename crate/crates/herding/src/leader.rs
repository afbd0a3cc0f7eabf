//! Leaders' velocity control from the flux law.
//!
//! The leaders obey `rho_t + [rho u]_x = 0`. Prescribing the flux divergence
//! as `[rho u]_x = -K_L (ref - rho)` (regulation) or
//! `-ref_dt - K_L (ref - rho)` (tracking) makes the regulation error decay
//! exponentially at rate `K_L`. `u` is recovered by spatial integration in
//! 1D and by a spectral Poisson solve (curl-free flux) in 2D, then divided
//! by the leaders' density with a singularity floor where leaders are
//! absent.

use num_complex::Complex;

use crate::field::{
    antiderivative, integrate, inverse_spectral_transform, spectral_transform, wavenumber, Field,
    FieldKind, TWO_PI,
};
use crate::{Error, Result};

/// Density floor below which `u` is clamped rather than divided; scaled to
/// the uniform leader density.
pub fn singularity_floor(mass_l: f64, dim: usize) -> f64 {
    1e-6 * mass_l / TWO_PI.powi(dim as i32)
}

/// Prescribed flux divergence `[rho u]_x`. Pass `reference_dt` for tracking
/// a time-varying reference; `None` regulates to a static one. The result is
/// zero-mean because the masses agree.
pub fn leader_flux_rhs(
    rho_l: &Field,
    reference: &Field,
    reference_dt: Option<&Field>,
    k_l: f64,
) -> Result<Field> {
    assert!(k_l > 0.0);
    let (m_ref, m_rho) = (integrate(reference), integrate(rho_l));
    if (m_ref - m_rho).abs() > 1e-6 {
        return Err(Error::MassMismatch {
            reference: m_ref,
            actual: m_rho,
        });
    }
    let mut rhs = reference.zip_with(rho_l, |r, x| -k_l * (r - x))?;
    if let Some(dt) = reference_dt {
        rhs.axpy(-1.0, dt);
    }
    Ok(rhs)
}

/// Recovered leader control: the flux `w` whose (discrete) divergence is the
/// prescribed rhs, the velocity `u = w / max(rho, floor)` per axis, and a
/// vacuum flag set when the density fell below the floor anywhere (the
/// velocity is clamped there; the flux is exact regardless).
#[derive(Clone, Debug)]
pub struct RecoveredControl {
    pub u: Vec<Field>,
    pub flux: Vec<Field>,
    pub vacuum: bool,
}

/// Integrate the flux divergence on the circle and divide by the leaders'
/// density.
pub fn recover_u_1d(rho_l: &Field, flux_rhs: &Field, floor: f64) -> Result<RecoveredControl> {
    if rho_l.grid != flux_rhs.grid {
        return Err(Error::GridMismatch(rho_l.grid.len(), flux_rhs.grid.len()));
    }
    debug_assert!(integrate(flux_rhs).abs() <= 1e-8 * flux_rhs.l2_norm().max(1.0));
    let (flux, _) = antiderivative(flux_rhs, 0.0);
    let vacuum = rho_l.min() < floor;
    let u = flux
        .zip_with(rho_l, |f, rho| f / rho.max(floor))?
        .with_kind(FieldKind::Velocity);
    Ok(RecoveredControl {
        u: vec![u],
        flux: vec![flux],
        vacuum,
    })
}

/// Recover the 2D velocity: find the curl-free flux whose (central
/// finite-difference) divergence equals `flux_rhs`, then divide by the
/// density. The spectral solve uses the difference symbols
/// `i sin(k dx)/dx`, so the discrete divergence of the result matches
/// `flux_rhs` to round-off; zero and Nyquist modes are annihilated.
pub fn recover_u_2d(rho_l: &Field, flux_rhs: &Field, floor: f64) -> Result<RecoveredControl> {
    if rho_l.grid != flux_rhs.grid {
        return Err(Error::GridMismatch(rho_l.grid.len(), flux_rhs.grid.len()));
    }
    debug_assert!(integrate(flux_rhs).abs() <= 1e-8 * flux_rhs.l2_norm().max(1.0));
    let grid = flux_rhs.grid;
    let n = grid.n();
    let dx = grid.dx();
    let rhs_hat = spectral_transform(flux_rhs);
    let mut w1_hat = vec![Complex::default(); grid.len()];
    let mut w2_hat = vec![Complex::default(); grid.len()];
    for i2 in 0..n {
        let s2 = Complex::new(0.0, (wavenumber(i2, n) as f64 * dx).sin() / dx);
        for i1 in 0..n {
            let s1 = Complex::new(0.0, (wavenumber(i1, n) as f64 * dx).sin() / dx);
            let power = s1.norm_sqr() + s2.norm_sqr();
            if power == 0.0 {
                continue;
            }
            let idx = grid.index_2d(i1, i2);
            let common = rhs_hat[idx] / power;
            w1_hat[idx] = s1.conj() * common;
            w2_hat[idx] = s2.conj() * common;
        }
    }
    let w1 = inverse_spectral_transform(grid, &w1_hat);
    let w2 = inverse_spectral_transform(grid, &w2_hat);
    let vacuum = rho_l.min() < floor;
    let u1 = w1
        .zip_with(rho_l, |f, rho| f / rho.max(floor))?
        .with_kind(FieldKind::Velocity);
    let u2 = w2
        .zip_with(rho_l, |f, rho| f / rho.max(floor))?
        .with_kind(FieldKind::Velocity);
    Ok(RecoveredControl {
        u: vec![u1, u2],
        flux: vec![w1, w2],
        vacuum,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{derivative, Grid};
    use approx::assert_abs_diff_eq;

    #[test]
    fn zero_error_gives_zero_rhs() {
        let grid = Grid::circle(100);
        let rho = Field::constant(grid, 0.4 / TWO_PI);
        let rhs = leader_flux_rhs(&rho, &rho, None, 2.0).unwrap();
        assert_eq!(rhs.linf_norm(), 0.0);
    }

    #[test]
    fn tracking_with_static_reference_reduces_to_regulation() {
        let grid = Grid::circle(128);
        let rho = Field::from_fn_1d(grid, |x| (0.4 + 0.1 * x.cos()) / TWO_PI);
        let reference = Field::from_fn_1d(grid, |x| (0.4 - 0.1 * x.cos()) / TWO_PI);
        let zeros = Field::zeros(grid);
        let a = leader_flux_rhs(&rho, &reference, None, 1.5).unwrap();
        let b = leader_flux_rhs(&rho, &reference, Some(&zeros), 1.5).unwrap();
        assert_eq!(a.values, b.values);
        assert!(integrate(&a).abs() < 1e-8);
    }

    #[test]
    fn rejects_mass_mismatch() {
        let grid = Grid::circle(64);
        let rho = Field::constant(grid, 0.4 / TWO_PI);
        let reference = Field::constant(grid, 0.5 / TWO_PI);
        assert!(matches!(
            leader_flux_rhs(&rho, &reference, None, 1.0),
            Err(Error::MassMismatch { .. })
        ));
    }

    #[test]
    fn zero_rhs_gives_zero_velocity() {
        let grid = Grid::circle(64);
        let rho = Field::constant(grid, 0.4 / TWO_PI);
        let ctrl = recover_u_1d(&rho, &Field::zeros(grid), 1e-8).unwrap();
        assert_eq!(ctrl.u[0].linf_norm(), 0.0);
        assert!(!ctrl.vacuum);
    }

    #[test]
    fn velocity_over_uniform_density_matches_analytic_antiderivative() {
        // rhs = K eps sin(x); running integral from -pi is -K eps (cos x + 1).
        let grid = Grid::circle(500);
        let (k, eps, mass_l) = (2.0, 0.01, 0.4);
        let rho = Field::constant(grid, mass_l / TWO_PI);
        let rhs = Field::from_fn_1d(grid, |x| k * eps * x.sin());
        let ctrl = recover_u_1d(&rho, &rhs, 1e-9).unwrap();
        assert!(!ctrl.vacuum);
        let u = &ctrl.u[0];
        let dx = grid.dx();
        for i in 0..grid.n() {
            let expected = -k * eps * (grid.node(i).cos() + 1.0) * TWO_PI / mass_l;
            assert!((u.values[i] - expected).abs() < dx * dx * TWO_PI / mass_l);
        }
    }

    #[test]
    fn vacuum_region_is_flagged_and_u_stays_finite() {
        let grid = Grid::circle(200);
        let floor = singularity_floor(0.4, 1);
        // Density with an (invalidly) empty stretch.
        let rho = Field::from_fn_1d(grid, |x| if x.abs() < 1.0 { 0.0 } else { 0.2 });
        let rhs = Field::from_fn_1d(grid, |x| 0.05 * (2.0 * x).sin());
        let ctrl = recover_u_1d(&rho, &rhs, floor).unwrap();
        assert!(ctrl.vacuum);
        assert!(ctrl.u[0].is_finite());
    }

    #[test]
    fn closed_loop_regulation_decays_at_rate_k_l() {
        // Forward-Euler loop against a smooth reference; after t = 1 the
        // error norm must sit at exp(-K_L) within 1%.
        let grid = Grid::circle(500);
        let mass_l = 0.4;
        let k_l = 1.0;
        let dt = 1e-3;
        let reference = Field::from_fn_1d(grid, |x| (mass_l + 0.1 * x.cos()) / TWO_PI);
        let mut rho = Field::constant(grid, mass_l / TWO_PI);
        let floor = singularity_floor(mass_l, 1);
        let e0 = reference.zip_with(&rho, |a, b| a - b).unwrap().l2_norm();
        for _ in 0..1000 {
            let rhs = leader_flux_rhs(&rho, &reference, None, k_l).unwrap();
            let ctrl = recover_u_1d(&rho, &rhs, floor).unwrap();
            let flux = rho.zip_with(&ctrl.u[0], |r, v| r * v).unwrap();
            rho.axpy(-dt, &derivative(&flux, 1, 0));
        }
        let e1 = reference.zip_with(&rho, |a, b| a - b).unwrap().l2_norm();
        let rate = -(e1 / e0).ln();
        assert!((rate - k_l).abs() / k_l < 0.01, "measured rate {rate}");
        assert_abs_diff_eq!(integrate(&rho), mass_l, epsilon = 1e-12);
    }

    #[test]
    fn poisson_recovery_single_harmonic() {
        let grid = Grid::torus(64);
        let mass_l = 0.4;
        let rho = Field::constant(grid, mass_l / (TWO_PI * TWO_PI));
        let rhs = Field::from_fn_2d(grid, |x1, _| x1.cos());
        let ctrl = recover_u_2d(&rho, &rhs, 1e-9).unwrap();
        assert!(!ctrl.vacuum);
        // Reconstructed flux has FD divergence equal to the rhs.
        let flux1 = ctrl.flux[0].clone();
        let flux2 = ctrl.flux[1].clone();
        let mut div = derivative(&flux1, 1, 0);
        div.axpy(1.0, &derivative(&flux2, 1, 1));
        let mut err2 = 0.0;
        for (a, b) in div.values.iter().zip(&rhs.values) {
            err2 += (a - b) * (a - b);
        }
        assert!(err2.sqrt() / rhs.l2_norm() * grid.cell_measure().sqrt() < 1e-6);
        // And the flux itself is close to (sin x1, 0).
        let dx = grid.dx();
        for i2 in 0..grid.n() {
            for i1 in 0..grid.n() {
                let idx = grid.index_2d(i1, i2);
                assert!((flux1.values[idx] - grid.node(i1).sin()).abs() < dx * dx);
                assert!(flux2.values[idx].abs() < 1e-10);
            }
        }
    }
}
