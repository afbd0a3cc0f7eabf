//! Two-dimensional trial on the torus: bimodal-looking von Mises product
//! target, reference-governor loop, spectral flux recovery.

use std::f64::consts::PI;

use herding::feasibility::{analyze, von_mises_2d, TargetSpec};
use herding::field::Grid;
use herding::governor::AlphaRule;
use herding::kernel::KernelSpec;
use herding::sim::{run, Scheme, SimConfig};

fn main() {
    let grid = Grid::torus(50);
    let target = TargetSpec::new(
        von_mises_2d(grid, 0.5, 0.5, 0.6),
        0.05,
        KernelSpec::repulsive_2d(PI, 10),
    )
    .unwrap();
    let report = analyze(&target).unwrap();
    println!(
        "feasible: {} (M_hat = {:.4}, available 0.4)",
        report.feasible, report.min_leader_mass
    );

    let mut config = SimConfig::new(target);
    config.dt = 0.01;
    config.n_steps = 2000; // t = 20; the full study runs to t = 50
    config.record_every = 100;
    config.k_l = 10.0;
    config.scheme = Scheme::ReferenceGovernor;
    config.alpha_rule = AlphaRule::Conservative;
    let record = run(&config).unwrap();

    println!("{:>6} {:>10} {:>10} {:>8}", "t", "E_F [%]", "KL_F", "alpha");
    for i in (0..record.times.len()).step_by(2) {
        println!(
            "{:>6.1} {:>10.4} {:>10.3e} {:>8.4}",
            record.times[i], record.e_f[i], record.kl_f[i], record.alpha[i]
        );
    }
    println!(
        "mass drift: leaders {:.2e}, followers {:.2e}",
        (record.mass_l.last().unwrap() - 0.4f64).abs(),
        (record.mass_f.last().unwrap() - 0.6f64).abs()
    );
}
