//! Reference-governor trial: the leader reference is reshaped online from
//! the measured follower error, with the blending weight kept printable.

use std::f64::consts::PI;

use herding::feasibility::{von_mises_1d, TargetSpec};
use herding::field::Grid;
use herding::governor::AlphaRule;
use herding::kernel::KernelSpec;
use herding::sim::{run, Scheme, SimConfig};

fn main() {
    let grid = Grid::circle(500);
    let target = TargetSpec::new(
        von_mises_1d(grid, 1.8, 0.0, 0.6),
        0.05,
        KernelSpec::repulsive_1d(PI),
    )
    .unwrap();
    let mut config = SimConfig::new(target);
    config.scheme = Scheme::ReferenceGovernor;
    config.alpha_rule = AlphaRule::optimal();
    config.n_steps = 30_000;
    let record = run(&config).unwrap();

    println!("{:>8} {:>10} {:>10} {:>8}", "t", "E_F [%]", "KL_F", "alpha");
    for i in (0..record.times.len()).step_by(20) {
        println!(
            "{:>8.1} {:>10.4} {:>10.3e} {:>8.4}",
            record.times[i], record.e_f[i], record.kl_f[i], record.alpha[i]
        );
    }
    println!("steady E_F = {:.4}%", record.steady_e_f());
}
