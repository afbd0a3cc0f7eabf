//! Finite-population counterpart of the macroscopic loop: leader ODEs,
//! follower SDEs, density estimation, and ensemble statistics.
//!
//! Leaders move with the sampled control field, `x_i' = u(x_i)`. Followers
//! obey the pairwise interaction SDE
//!
//! ```text
//! dx_k = 1/N * sum_j f(x_k - x_j^L) dt + sqrt(2 D) dB_k
//! ```
//!
//! (`N` the total population), integrated by Euler-Maruyama. Densities are
//! estimated with a wrapped-Gaussian kernel estimator and fed to the same
//! feasibility/governor/flux machinery as the PDE loop.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use std::f64::consts::PI;

use crate::feasibility::{analyze, TargetSpec};
use crate::field::{circular_convolve, wrap_angle, Field, FieldKind, Grid, TWO_PI};
use crate::governor::{AlphaRule, Governor};
use crate::kernel::KernelSpec;
use crate::leader::{leader_flux_rhs, recover_u_1d, singularity_floor};
use crate::metrics::{kl_divergence, percentage_error, steady_value};
use crate::{Error, Result};

/// Positions of both populations on the circle, wrapped into `[-pi, pi)`.
#[derive(Clone, Debug)]
pub struct AgentState {
    pub leaders: Vec<f64>,
    pub followers: Vec<f64>,
}

impl AgentState {
    /// Independent uniform positions for both populations.
    pub fn uniform(n_leaders: usize, n_followers: usize, rng: &mut impl Rng) -> Self {
        let mut draw = |n: usize| (0..n).map(|_| rng.gen_range(-PI..PI)).collect();
        AgentState {
            leaders: draw(n_leaders),
            followers: draw(n_followers),
        }
    }

    pub fn total(&self) -> usize {
        self.leaders.len() + self.followers.len()
    }
}

/// Kernel-density-estimator bandwidth selection.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Bandwidth {
    Fixed(f64),
    /// `1.06 * sigma_circ * N^(-1/5)`, clamped to `[2 dx, pi/4]`.
    Silverman,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KdeConfig {
    pub bandwidth: Bandwidth,
}

impl Default for KdeConfig {
    fn default() -> Self {
        KdeConfig {
            bandwidth: Bandwidth::Silverman,
        }
    }
}

/// Circular standard deviation `sqrt(-2 ln R)` from the mean resultant
/// length `R`; zero for a point mass, large for near-uniform samples.
pub fn circular_std(positions: &[f64]) -> f64 {
    let n = positions.len() as f64;
    let (c, s) = positions
        .iter()
        .fold((0.0, 0.0), |(c, s), x| (c + x.cos(), s + x.sin()));
    let r = (c * c + s * s).sqrt() / n;
    if r >= 1.0 {
        return 0.0;
    }
    (-2.0 * r.max(1e-300).ln()).sqrt()
}

fn bandwidth(kde: &KdeConfig, positions: &[f64], grid: Grid) -> f64 {
    match kde.bandwidth {
        Bandwidth::Fixed(h) => {
            assert!(h > 0.0);
            h
        }
        Bandwidth::Silverman => {
            let n = positions.len() as f64;
            let h = 1.06 * circular_std(positions) * n.powf(-0.2);
            h.clamp(2.0 * grid.dx(), PI / 4.0)
        }
    }
}

/// Wrapped-Gaussian lag table, normalized so its discrete integral is
/// exactly 1 (the estimator then conserves mass to round-off). Image count
/// covers the `1e-12` tail for any bandwidth.
fn gaussian_lag_table(grid: Grid, h: f64) -> Vec<f64> {
    let n = grid.n();
    let dx = grid.dx();
    let images = ((7.5 * h / TWO_PI).ceil() as i64) + 1;
    let norm = 1.0 / ((2.0 * PI).sqrt() * h);
    let mut table: Vec<f64> = (0..n)
        .map(|m| {
            let d = wrap_angle(m as f64 * dx);
            (-images..=images)
                .map(|k| {
                    let y = d + TWO_PI * k as f64;
                    norm * (-0.5 * y * y / (h * h)).exp()
                })
                .sum()
        })
        .collect();
    let total: f64 = table.iter().sum::<f64>() * dx;
    for v in &mut table {
        *v /= total;
    }
    table
}

/// Cloud-in-cell deposit: each agent splits linearly between its two
/// neighboring cell centers. The result is a density carrying exactly
/// `mass`.
fn deposit(positions: &[f64], mass: f64, grid: Grid) -> Field {
    let n = grid.n();
    let dx = grid.dx();
    let weight = mass / (positions.len() as f64 * dx);
    let mut values = vec![0.0; n];
    for &x in positions {
        // Fractional cell-center coordinate of the wrapped position.
        let s = (wrap_angle(x) + PI) / dx - 0.5;
        let i0 = s.floor();
        let frac = s - i0;
        let i0 = (i0 as i64).rem_euclid(n as i64) as usize;
        let i1 = (i0 + 1) % n;
        values[i0] += weight * (1.0 - frac);
        values[i1] += weight * frac;
    }
    Field::new(grid, values).with_kind(FieldKind::Density)
}

/// Wrapped-Gaussian kernel density estimate normalized to `mass`.
pub fn estimate_density(
    positions: &[f64],
    mass: f64,
    kde: &KdeConfig,
    grid: Grid,
) -> Result<Field> {
    if positions.len() < 2 {
        return Err(Error::TooFewAgents(positions.len()));
    }
    let h = bandwidth(kde, positions, grid);
    let counts = deposit(positions, mass, grid);
    let table = gaussian_lag_table(grid, h);
    Ok(circular_convolve(&table, &counts)?.with_kind(FieldKind::Density))
}

/// Linear periodic interpolation of a 1D field at an arbitrary angle.
pub fn interp_periodic(field: &Field, x: f64) -> f64 {
    let grid = field.grid;
    debug_assert_eq!(grid.dim(), 1);
    let n = grid.n();
    let s = (wrap_angle(x) + PI) / grid.dx() - 0.5;
    let i0 = s.floor();
    let frac = s - i0;
    let i0 = (i0 as i64).rem_euclid(n as i64) as usize;
    let i1 = (i0 + 1) % n;
    field.values[i0] * (1.0 - frac) + field.values[i1] * frac
}

/// Exact pairwise follower velocities `1/N * sum_j f(x_k - x_j^L)` in
/// `O((N_L + N_F) log N_L)` via sorted prefix sums of the exponential
/// factors (no kernel tabulation error). `n_total` is `N_L + N_F`.
pub fn follower_velocities(
    followers: &[f64],
    leaders: &[f64],
    kernel: &KernelSpec,
    n_total: usize,
) -> Vec<f64> {
    assert_eq!(kernel.dim(), 1);
    let mut sorted: Vec<f64> = leaders.iter().map(|&y| wrap_angle(y)).collect();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut out = vec![0.0; followers.len()];
    for c in kernel.components() {
        let inv_l = 1.0 / c.length;
        let big_e = (TWO_PI * inv_l).exp();
        // Prefix sums of exp(+y/L) and exp(-y/L) over sorted leaders.
        let mut pos = Vec::with_capacity(sorted.len() + 1);
        let mut neg = Vec::with_capacity(sorted.len() + 1);
        pos.push(0.0);
        neg.push(0.0);
        for &y in &sorted {
            pos.push(pos.last().unwrap() + (y * inv_l).exp());
            neg.push(neg.last().unwrap() + (-y * inv_l).exp());
        }
        let (pos_all, neg_all) = (*pos.last().unwrap(), *neg.last().unwrap());
        for (k, &xf) in followers.iter().enumerate() {
            let x = wrap_angle(xf);
            // Leaders at y <= x contribute E e^{(y-x)/L} - e^{(x-y)/L};
            // those at y > x contribute e^{(y-x)/L} - E e^{(x-y)/L}.
            let split = sorted.partition_point(|&y| y <= x);
            let (pos_le, neg_le) = (pos[split], neg[split]);
            let (pos_gt, neg_gt) = (pos_all - pos_le, neg_all - neg_le);
            let sum = (-x * inv_l).exp() * (big_e * pos_le + pos_gt)
                - (x * inv_l).exp() * (neg_le + big_e * neg_gt);
            out[k] += c.weight * sum / ((big_e - 1.0) * n_total as f64);
        }
    }
    out
}

/// One Euler(-Maruyama) step: leaders follow the interpolated control field,
/// followers the pairwise interaction plus Brownian noise. Both populations
/// use the pre-step leader positions.
pub fn step_agents(
    state: &AgentState,
    u_field: &Field,
    kernel: &KernelSpec,
    diffusivity: f64,
    dt: f64,
    rng: &mut impl Rng,
) -> AgentState {
    let v = follower_velocities(&state.followers, &state.leaders, kernel, state.total());
    let leaders = state
        .leaders
        .iter()
        .map(|&x| wrap_angle(x + dt * interp_periodic(u_field, x)))
        .collect();
    let noise = (2.0 * diffusivity * dt).sqrt();
    let followers = state
        .followers
        .iter()
        .zip(&v)
        .map(|(&x, &vel)| {
            let xi: f64 = rng.sample(StandardNormal);
            wrap_angle(x + dt * vel + noise * xi)
        })
        .collect();
    AgentState { leaders, followers }
}

/// Configuration of a finite-population ensemble study.
#[derive(Clone, Debug)]
pub struct DiscreteConfig {
    pub target: TargetSpec,
    pub n_leaders: usize,
    pub n_followers: usize,
    pub dt: f64,
    pub n_steps: usize,
    pub record_every: usize,
    /// Density estimation / control recomputation cadence in steps.
    pub control_every: usize,
    pub k_l: f64,
    pub alpha_rule: AlphaRule,
    pub kde: KdeConfig,
    pub n_trials: usize,
    pub master_seed: u64,
}

impl DiscreteConfig {
    /// Paper-scale defaults: 1000 agents at the 0.4/0.6 split, `dt = 1e-3`,
    /// 150,000 steps.
    pub fn new(target: TargetSpec) -> Self {
        DiscreteConfig {
            target,
            n_leaders: 400,
            n_followers: 600,
            dt: 1e-3,
            n_steps: 150_000,
            record_every: 150,
            control_every: 1,
            k_l: 1.0,
            alpha_rule: AlphaRule::Conservative,
            kde: KdeConfig::default(),
            n_trials: 8,
            master_seed: 7,
        }
    }

    fn mass_ratio(&self) -> f64 {
        self.n_leaders as f64 / (self.n_leaders + self.n_followers) as f64
    }
}

/// Recorded series of one trial.
#[derive(Clone, Debug)]
pub struct TrialRecord {
    pub seed: u64,
    pub times: Vec<f64>,
    pub e_f: Vec<f64>,
    pub kl_f: Vec<f64>,
    pub alpha: Vec<f64>,
    pub steady_e_f: f64,
    pub steady_kl_f: f64,
}

/// Ensemble of trial records with steady-state statistics.
#[derive(Clone, Debug)]
pub struct EnsembleRecord {
    pub trials: Vec<TrialRecord>,
    pub mean_steady_e_f: f64,
    pub std_steady_e_f: f64,
    pub mean_steady_kl_f: f64,
    pub std_steady_kl_f: f64,
}

/// Decorrelated per-trial seed from the master seed (splitmix-style).
pub fn trial_seed(master: u64, trial: usize) -> u64 {
    let mut z = master
        .wrapping_add(0x9E3779B97F4A7C15u64.wrapping_mul(trial as u64 + 1));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

/// Run one trial of the discrete loop with the given seed.
pub fn run_trial(config: &DiscreteConfig, seed: u64) -> Result<TrialRecord> {
    let grid = config.target.density.grid;
    if grid.dim() != 1 {
        return Err(Error::ConfigParse(
            "discrete ensembles are one-dimensional".into(),
        ));
    }
    if (config.target.mass_l() - config.mass_ratio()).abs() > 1e-9 {
        return Err(Error::ConfigParse(format!(
            "leader count fraction {} must match the target's leader mass {}",
            config.mass_ratio(),
            config.target.mass_l()
        )));
    }
    let report = analyze(&config.target)?;
    report.require_feasible()?;
    let rho_l_bar = report.leader_reference;
    let lag = config.target.kernel.lag_table(&grid);
    let floor = singularity_floor(config.target.mass_l(), 1);
    let control_every = config.control_every.max(1);
    let record_every = config.record_every.max(1);
    let mut governor = Governor::new(config.alpha_rule, config.dt * control_every as f64);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut state = AgentState::uniform(config.n_leaders, config.n_followers, &mut rng);
    let mass_l = config.target.mass_l();
    let mass_f = config.target.mass_f;

    let mut times = vec![];
    let mut e_f_sq = vec![];
    let mut kl_f = vec![];
    let mut alphas = vec![];
    let mut u = Field::zeros(grid);
    for step in 0..=config.n_steps {
        if step % control_every == 0 {
            let rho_l = estimate_density(&state.leaders, mass_l, &config.kde, grid)?;
            let rho_f = estimate_density(&state.followers, mass_f, &config.kde, grid)?;
            let gov = governor.step_1d(&rho_f, &config.target, &rho_l_bar, &lag)?;
            let rhs = leader_flux_rhs(&rho_l, &gov.rho_hat_l, Some(&gov.rho_hat_l_dt), config.k_l)?;
            u = recover_u_1d(&rho_l, &rhs, floor)?.u.swap_remove(0);
            if step % record_every == 0 {
                let e = config
                    .target
                    .density
                    .zip_with(&rho_f, |a, b| a - b)?
                    .l2_norm();
                times.push(step as f64 * config.dt);
                e_f_sq.push(e * e);
                kl_f.push(kl_divergence(&config.target.density, &rho_f).value);
                alphas.push(gov.alpha);
            }
        }
        if step == config.n_steps {
            break;
        }
        state = step_agents(
            &state,
            &u,
            &config.target.kernel,
            config.target.diffusivity,
            config.dt,
            &mut rng,
        );
    }
    let e_f = percentage_error(&e_f_sq);
    let steady_e_f = steady_value(&e_f);
    let steady_kl_f = steady_value(&kl_f);
    Ok(TrialRecord {
        seed,
        times,
        e_f,
        kl_f,
        alpha: alphas,
        steady_e_f,
        steady_kl_f,
    })
}

/// Run all trials sequentially (each is independent and individually
/// seeded, so the aggregate is order-independent).
pub fn run_discrete(config: &DiscreteConfig) -> Result<EnsembleRecord> {
    assert!(config.n_trials >= 1);
    let mut trials = Vec::with_capacity(config.n_trials);
    for trial in 0..config.n_trials {
        trials.push(run_trial(config, trial_seed(config.master_seed, trial))?);
    }
    let stats = |values: Vec<f64>| {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        (mean, var.sqrt())
    };
    let (mean_e, std_e) = stats(trials.iter().map(|t| t.steady_e_f).collect());
    let (mean_kl, std_kl) = stats(trials.iter().map(|t| t.steady_kl_f).collect());
    Ok(EnsembleRecord {
        trials,
        mean_steady_e_f: mean_e,
        std_steady_e_f: std_e,
        mean_steady_kl_f: mean_kl,
        std_steady_kl_f: std_kl,
    })
}
