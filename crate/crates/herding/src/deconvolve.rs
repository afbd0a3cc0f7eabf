//! Inversion of the convolution `v = f * rho`: recover a density from a
//! velocity field.
//!
//! For the single-component 1D repulsive kernel the convolution satisfies
//! the pointwise identity `phi_xx = phi / L^2 + 2 rho_x`, so
//!
//! ```text
//! rho = 1/2 * int (phi_xx - phi / L^2) dx + B
//! ```
//!
//! with `B` an arbitrary constant fixed by a [`ConstantRule`]. In 2D (and
//! for multi-component kernels) the inversion is done in spectral space by
//! dividing by the kernel symbol; the zero mode is never invertible (odd
//! kernels have zero-mean images) and is assigned by the same rule.

use num_complex::Complex;

use crate::field::{
    antiderivative, derivative, integrate, spectral_transform, inverse_spectral_transform, Field,
};
use crate::{Error, Result};

/// How the free additive constant of a deconvolution is fixed.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ConstantRule {
    /// Shift so the result integrates to the given mass.
    Mass(f64),
    /// Shift so the result integrates to zero.
    ZeroMean,
    /// Add the given constant to the anchored raw solution.
    Explicit(f64),
}

/// Relative threshold below which a spectral kernel mode is treated as
/// non-invertible and skipped.
pub const ILL_CONDITIONED_REL: f64 = 1e-14;

/// Result of a deconvolution, with the count of spectral modes that were
/// skipped as ill-conditioned (always at least the zero mode on spectral
/// paths).
#[derive(Clone, Debug)]
pub struct Deconvolved {
    pub field: Field,
    pub skipped_modes: usize,
}

fn check_zero_mean(phi: &Field) -> Result<()> {
    let integral = integrate(phi);
    if integral.abs() > 1e-6 * phi.l2_norm().max(1.0) {
        return Err(Error::NonZeroMeanInput { integral });
    }
    Ok(())
}

fn apply_rule(mut f: Field, rule: ConstantRule) -> Field {
    let volume = f.grid.cell_measure() * f.grid.len() as f64;
    let shift = match rule {
        ConstantRule::Mass(mass) => (mass - integrate(&f)) / volume,
        ConstantRule::ZeroMean => -integrate(&f) / volume,
        ConstantRule::Explicit(b) => b,
    };
    for v in &mut f.values {
        *v += shift;
    }
    f
}

/// Closed-form 1D deconvolution for the single repulsive kernel of length
/// scale `length`. `phi` must be zero-mean within `1e-6` (odd kernels only
/// produce zero-mean images; the constant would otherwise be ill-defined on
/// the circle).
pub fn deconvolve_1d(phi: &Field, length: f64, rule: ConstantRule) -> Result<Field> {
    check_zero_mean(phi)?;
    let phi_xx = derivative(phi, 2, 0);
    // One order-2 central difference application, not two first-order passes.
    let integrand = phi_xx.zip_with(phi, |dd, p| 0.5 * (dd - p / (length * length)))?;
    let (raw, _) = antiderivative(&integrand, 0.0);
    Ok(apply_rule(raw, rule))
}

/// Spectral 1D deconvolution: divide by the DFT of the kernel lag samples.
/// Used for multi-component kernels and as an independent cross-check of
/// [`deconvolve_1d`].
pub fn deconvolve_spectral_1d(phi: &Field, lag: &[f64], rule: ConstantRule) -> Result<Deconvolved> {
    check_zero_mean(phi)?;
    if lag.len() != phi.grid.len() {
        return Err(Error::GridMismatch(lag.len(), phi.grid.len()));
    }
    let cell = phi.grid.cell_measure();
    let symbol: Vec<Complex<f64>> = spectral_transform(&Field::new(phi.grid, lag.to_vec()))
        .into_iter()
        .map(|c| c * cell)
        .collect();
    let mut phi_hat = spectral_transform(phi);
    let max_power = symbol.iter().map(|c| c.norm_sqr()).fold(0.0, f64::max);
    let mut skipped = 0;
    for (p, s) in phi_hat.iter_mut().zip(&symbol) {
        if s.norm_sqr() < ILL_CONDITIONED_REL * max_power {
            *p = Complex::default();
            skipped += 1;
        } else {
            *p /= s;
        }
    }
    let field = inverse_spectral_transform(phi.grid, &phi_hat);
    Ok(Deconvolved {
        field: apply_rule(field, rule),
        skipped_modes: skipped,
    })
}

/// 2D spectral deconvolution of a vector velocity field against a vector
/// kernel. Each mode yields an overdetermined 2x1 system (one equation per
/// vector component) solved by least squares; modes where the kernel symbol
/// power falls below [`ILL_CONDITIONED_REL`] of its maximum are skipped.
pub fn deconvolve_2d(
    phi: &[Field; 2],
    lag: &[Vec<f64>; 2],
    rule: ConstantRule,
) -> Result<Deconvolved> {
    let grid = phi[0].grid;
    if phi[1].grid != grid {
        return Err(Error::GridMismatch(phi[1].grid.len(), grid.len()));
    }
    for component in phi {
        check_zero_mean(component)?;
    }
    let cell = grid.cell_measure();
    let symbols: Vec<[Complex<f64>; 2]> = {
        let s1 = spectral_transform(&Field::new(grid, lag[0].clone()));
        let s2 = spectral_transform(&Field::new(grid, lag[1].clone()));
        s1.into_iter()
            .zip(s2)
            .map(|(a, b)| [a * cell, b * cell])
            .collect()
    };
    let phi1_hat = spectral_transform(&phi[0]);
    let phi2_hat = spectral_transform(&phi[1]);
    let max_power = symbols
        .iter()
        .map(|s| s[0].norm_sqr() + s[1].norm_sqr())
        .fold(0.0, f64::max);
    let mut rho_hat = vec![Complex::default(); grid.len()];
    let mut skipped = 0;
    for i in 0..grid.len() {
        let power = symbols[i][0].norm_sqr() + symbols[i][1].norm_sqr();
        if power < ILL_CONDITIONED_REL * max_power {
            skipped += 1;
            continue;
        }
        rho_hat[i] = (symbols[i][0].conj() * phi1_hat[i] + symbols[i][1].conj() * phi2_hat[i])
            / power;
    }
    let field = inverse_spectral_transform(grid, &rho_hat);
    Ok(Deconvolved {
        field: apply_rule(field, rule),
        skipped_modes: skipped,
    })
}
