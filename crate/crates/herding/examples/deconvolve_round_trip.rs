//! Recover a density from its kernel-convolution image, by both the
//! closed-form ODE route and the spectral route.

use std::f64::consts::PI;

use herding::deconvolve::{deconvolve_1d, deconvolve_spectral_1d, ConstantRule};
use herding::field::{circular_convolve, integrate, Field, Grid, TWO_PI};
use herding::kernel::KernelSpec;

fn main() {
    let grid = Grid::circle(500);
    let kernel = KernelSpec::repulsive_1d(PI);
    let lag = kernel.lag_table(&grid);

    let rho = Field::from_fn_1d(grid, |x| {
        0.4 / TWO_PI + 0.05 * x.cos() + 0.02 * (2.0 * x).sin()
    });
    let mass = integrate(&rho);
    let image = circular_convolve(&lag, &rho).unwrap();

    let ode = deconvolve_1d(&image, PI, ConstantRule::Mass(mass)).unwrap();
    let spectral = deconvolve_spectral_1d(&image, &lag, ConstantRule::Mass(mass)).unwrap();

    let rel = |a: &Field| {
        let num: f64 = a
            .values
            .iter()
            .zip(&rho.values)
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            .sqrt();
        num / rho.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    };
    println!("relative recovery error, ODE route:      {:.3e}", rel(&ode));
    println!("relative recovery error, spectral route: {:.3e}", rel(&spectral.field));
    println!("spectral modes skipped (non-invertible): {}", spectral.skipped_modes);
    println!("recovered mass: {:.12}", integrate(&ode));
}
