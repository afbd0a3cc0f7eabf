//! Structural uncertainty: the plant's interaction kernel is much
//! shorter-ranged than the one the controller was designed with. The
//! governor recovers part of the lost accuracy.

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
        0.02,
        KernelSpec::repulsive_1d(PI),
    )
    .unwrap();
    for (name, scheme) in [
        ("feed-forward", Scheme::FeedForward),
        ("governor", Scheme::ReferenceGovernor),
    ] {
        let mut config = SimConfig::new(target.clone());
        config.plant_kernel = Some(KernelSpec::repulsive_1d(PI / 6.0));
        config.scheme = scheme;
        config.alpha_rule = AlphaRule::Conservative;
        config.n_steps = 60_000;
        let record = run(&config).unwrap();
        println!("{name:>13}: steady E_F = {:5.1}%", record.steady_e_f());
    }
}
