//! Feasibility analysis: how much leader mass a von Mises follower target
//! needs, compared against the closed form pi*D*(1 + 1/L^2)*kappa.

use std::f64::consts::PI;

use herding::feasibility::{analyze, von_mises_1d, TargetSpec};
use herding::field::Grid;
use herding::kernel::KernelSpec;

fn main() {
    let grid = Grid::circle(500);
    let length = PI;
    println!("{:>6} {:>6} {:>12} {:>12} {:>9}", "D", "kappa", "M_hat (grid)", "closed form", "feasible");
    for &d in &[0.01, 0.05, 0.1, 0.2] {
        for &kappa in &[0.5, 1.8, 3.0] {
            let target = TargetSpec::new(
                von_mises_1d(grid, kappa, 0.0, 0.6),
                d,
                KernelSpec::repulsive_1d(length),
            )
            .unwrap();
            let report = analyze(&target).unwrap();
            let closed = PI * d * (1.0 + 1.0 / (length * length)) * kappa;
            println!(
                "{d:>6} {kappa:>6} {:>12.6} {closed:>12.6} {:>9}",
                report.min_leader_mass, report.feasible
            );
        }
    }
}
