//! Finite-population loop: densities are estimated from agent positions
//! with a wrapped-Gaussian KDE and the same governor/flux machinery drives
//! individual leaders.

use std::f64::consts::PI;

use herding::agents::{run_trial, DiscreteConfig};
use herding::feasibility::{von_mises_1d, TargetSpec};
use herding::field::Grid;
use herding::kernel::KernelSpec;

fn main() {
    let grid = Grid::circle(500);
    let target = TargetSpec::new(
        von_mises_1d(grid, 1.8, 0.0, 0.6),
        0.05,
        KernelSpec::repulsive_1d(PI),
    )
    .unwrap();
    let mut config = DiscreteConfig::new(target);
    config.n_steps = 20_000; // smoke horizon; the full study uses 150,000
    config.record_every = 500;
    let record = run_trial(&config, 42).unwrap();

    println!(
        "{} leaders, {} followers, seed {}",
        config.n_leaders, config.n_followers, record.seed
    );
    println!("{:>6} {:>10} {:>10} {:>8}", "t", "E_F [%]", "KL_F", "alpha");
    for i in (0..record.times.len()).step_by(4) {
        println!(
            "{:>6.1} {:>10.3} {:>10.3e} {:>8.4}",
            record.times[i], record.e_f[i], record.kl_f[i], record.alpha[i]
        );
    }
    println!("steady E_F = {:.2}%", record.steady_e_f);
}
