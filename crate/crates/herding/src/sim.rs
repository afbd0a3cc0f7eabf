//! Macroscopic closed-loop simulation of the coupled leader/follower PDEs.
//!
//! Leaders: `rho_t + [rho u]_x = 0`, forward Euler in flux form (mass
//! conserved to round-off). Followers: `rho_t + [rho v]_x = D rho_xx` with
//! `v` the convolution of the plant kernel with the leaders' density, plus
//! an optional additive disturbance. The loop supports the feed-forward
//! scheme (static leader reference) and the reference-governor scheme
//! (blended, time-varying reference), with a monitor checking the
//! theoretical decay bound on `||e^F||_2^2` along the trajectory.

use crate::feasibility::{analyze, FeasibilityReport, TargetSpec};
use crate::field::{circular_convolve, derivative, integrate, Convolver, Field, TWO_PI};
use crate::governor::{AlphaRule, Governor};
use crate::kernel::KernelSpec;
use crate::leader::{leader_flux_rhs, recover_u_1d, recover_u_2d, singularity_floor};
use crate::metrics::{error_sq_norm, kl_divergence, percentage_error, steady_value};
use crate::{Error, Result};

/// Additive velocity disturbance on the followers, switched on at a given
/// time.
#[derive(Clone, Copy, Debug)]
pub struct Disturbance {
    pub amplitude: f64,
    pub onset: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scheme {
    FeedForward,
    ReferenceGovernor,
}

#[derive(Clone, Debug)]
pub struct SimConfig {
    pub target: TargetSpec,
    /// Kernel actually driving the followers; defaults to the controller
    /// kernel (set it to model structural uncertainty).
    pub plant_kernel: Option<KernelSpec>,
    pub rho_l0: Field,
    pub rho_f0: Field,
    pub dt: f64,
    pub n_steps: usize,
    pub record_every: usize,
    pub k_l: f64,
    pub scheme: Scheme,
    /// Blending rule used by the reference-governor scheme.
    pub alpha_rule: AlphaRule,
    pub disturbance: Option<Disturbance>,
    /// Run even when the feasibility analysis fails (robustness studies).
    pub allow_infeasible: bool,
}

impl SimConfig {
    /// Defaults: uniform initial densities, `dt = 1e-3`, 150,000 steps,
    /// `K_L = 1`, feed-forward scheme.
    pub fn new(target: TargetSpec) -> Self {
        let grid = target.density.grid;
        let volume = TWO_PI.powi(grid.dim() as i32);
        let rho_l0 = Field::constant(grid, target.mass_l() / volume);
        let rho_f0 = Field::constant(grid, target.mass_f / volume);
        SimConfig {
            target,
            plant_kernel: None,
            rho_l0,
            rho_f0,
            dt: 1e-3,
            n_steps: 150_000,
            record_every: 150,
            k_l: 1.0,
            scheme: Scheme::FeedForward,
            alpha_rule: AlphaRule::Conservative,
            disturbance: None,
            allow_infeasible: false,
        }
    }

    fn effective_rule(&self) -> AlphaRule {
        match self.scheme {
            Scheme::FeedForward => AlphaRule::Off,
            Scheme::ReferenceGovernor => self.alpha_rule,
        }
    }
}

/// Recorded time series plus final fields for one run.
#[derive(Clone, Debug)]
pub struct SimRecord {
    pub times: Vec<f64>,
    /// Percentage errors (normalized squared norms).
    pub e_l: Vec<f64>,
    pub e_f: Vec<f64>,
    pub kl_l: Vec<f64>,
    pub kl_f: Vec<f64>,
    pub alpha: Vec<f64>,
    pub mass_l: Vec<f64>,
    pub mass_f: Vec<f64>,
    pub lyap_residual: Vec<f64>,
    /// `2 - ||g1||_inf`; the decay bound requires it positive.
    pub stability_margin: f64,
    pub monitor_active: bool,
    /// Recorded steps where the decay-bound residual exceeded tolerance.
    pub lyap_violations: usize,
    pub cfl_warnings: usize,
    pub vacuum_events: usize,
    pub final_rho_l: Field,
    pub final_rho_f: Field,
    pub final_rho_hat_l: Field,
}

impl SimRecord {
    /// Mean follower percentage error over the last tenth of the horizon.
    pub fn steady_e_f(&self) -> f64 {
        steady_value(&self.e_f)
    }

    pub fn steady_kl_f(&self) -> f64 {
        steady_value(&self.kl_f)
    }
}

/// A failed run, carrying whatever was recorded before the failure.
#[derive(Debug)]
pub struct SimFailure {
    pub error: Error,
    pub partial: Option<SimRecord>,
}

impl From<Error> for SimFailure {
    fn from(error: Error) -> Self {
        SimFailure {
            error,
            partial: None,
        }
    }
}

/// Relative tolerance for the decay-bound residual.
pub const LYAP_TOL: f64 = 1e-3;

/// Numerical check of the theoretical bound
/// `(V)_t <= (-2D + D||g1||inf) V + gamma e^{-K_L t} V + delta e^{-K_L t} sqrt(V)`
/// with `V = ||e^F||_2^2`, evaluated between recorded samples.
#[derive(Clone, Debug)]
pub struct LyapunovMonitor {
    decay: f64,
    gamma: f64,
    delta: f64,
    k_l: f64,
    /// Magnitude of the bound at `t = 0`; residuals are compared against
    /// `LYAP_TOL` times this.
    pub scale: f64,
}

impl LyapunovMonitor {
    pub fn new(
        report: &FeasibilityReport,
        target: &TargetSpec,
        rho_l0: &Field,
        lag: &[f64],
        k_l: f64,
        v0: f64,
    ) -> Result<Self> {
        let d = target.diffusivity;
        let conv0 = circular_convolve(lag, rho_l0)?;
        let h1 = derivative(&conv0, 1, 0);
        let inner = target
            .density
            .zip_with(&conv0, |bar, c| bar * c)?
            .zip_with(&derivative(&target.density, 1, 0), |a, db| a - d * db)?;
        let h2 = derivative(&inner, 1, 0);
        let g1_inf = report.g1.linf_norm();
        let gamma = h1.linf_norm();
        let delta = 2.0 * h2.l2_norm();
        Ok(LyapunovMonitor {
            decay: -2.0 * d + d * g1_inf,
            gamma,
            delta,
            k_l,
            scale: v0 * (2.0 * d + d * g1_inf + gamma) + delta * v0.sqrt(),
        })
    }

    pub fn bound_rhs(&self, t: f64, v: f64) -> f64 {
        let e = (-self.k_l * t).exp();
        (self.decay + self.gamma * e) * v + self.delta * e * v.max(0.0).sqrt()
    }

    /// `dV/dt` between samples minus the bound at the earlier sample;
    /// nonpositive (within tolerance) when the bound holds.
    pub fn residual(&self, t_prev: f64, v_prev: f64, v_now: f64, dt: f64) -> f64 {
        (v_now - v_prev) / dt - self.bound_rhs(t_prev, v_prev)
    }
}

/// One forward-Euler step of the followers under the given velocity
/// components (one per axis).
pub fn advance_followers(rho_f: &Field, velocity: &[Field], d: f64, dt: f64) -> Result<Field> {
    let grid = rho_f.grid;
    assert_eq!(velocity.len(), grid.dim());
    let mut rhs = Field::zeros(grid);
    for (axis, v) in velocity.iter().enumerate() {
        let flux = rho_f.zip_with(v, |r, vel| r * vel)?;
        rhs.axpy(-1.0, &derivative(&flux, 1, axis));
        if d > 0.0 {
            rhs.axpy(d, &derivative(rho_f, 2, axis));
        }
    }
    let mut out = rho_f.clone();
    out.axpy(dt, &rhs);
    Ok(out)
}

/// One forward-Euler step of the leaders' conservation law.
pub fn advance_leaders(rho_l: &Field, u: &[Field], dt: f64) -> Result<Field> {
    let grid = rho_l.grid;
    assert_eq!(u.len(), grid.dim());
    let flux: Vec<Field> = u
        .iter()
        .map(|v| rho_l.zip_with(v, |r, vel| r * vel))
        .collect::<Result<_>>()?;
    advance_leaders_flux(rho_l, &flux, dt)
}

/// One forward-Euler step of the leaders with a prescribed flux. The control
/// law fixes the flux itself, so stepping with it directly (rather than
/// re-forming `rho * u` with a floored division) keeps the update stable
/// where the density is near vacuum.
pub fn advance_leaders_flux(rho_l: &Field, flux: &[Field], dt: f64) -> Result<Field> {
    let grid = rho_l.grid;
    assert_eq!(flux.len(), grid.dim());
    let mut rhs = Field::zeros(grid);
    for (axis, w) in flux.iter().enumerate() {
        rhs.axpy(-1.0, &derivative(w, 1, axis));
    }
    let mut out = rho_l.clone();
    out.axpy(dt, &rhs);
    Ok(out)
}

enum Lags {
    One(Vec<f64>),
    Two([Vec<f64>; 2]),
}

struct Recorder {
    times: Vec<f64>,
    e_l_sq: Vec<f64>,
    e_f_sq: Vec<f64>,
    kl_l: Vec<f64>,
    kl_f: Vec<f64>,
    alpha: Vec<f64>,
    mass_l: Vec<f64>,
    mass_f: Vec<f64>,
    lyap_residual: Vec<f64>,
    lyap_violations: usize,
}

// The error carries the partial record by design; the failure path is cold.
#[allow(clippy::result_large_err)]
pub fn run(config: &SimConfig) -> std::result::Result<SimRecord, SimFailure> {
    let grid = config.target.density.grid;
    let dim = grid.dim();
    let dt = config.dt;
    let report = analyze(&config.target)?;
    if !config.allow_infeasible {
        report.require_feasible()?;
    }
    let rho_l_bar = report.leader_reference.clone();
    check_mass(&config.rho_l0, config.target.mass_l())?;
    check_mass(&config.rho_f0, config.target.mass_f)?;

    let plant_kernel = config
        .plant_kernel
        .as_ref()
        .unwrap_or(&config.target.kernel);
    let nominal_plant = config.plant_kernel.is_none();
    let (controller_lags, plant_convs) = match dim {
        1 => (
            Lags::One(config.target.kernel.lag_table(&grid)),
            vec![Convolver::new(grid, &plant_kernel.lag_table(&grid))],
        ),
        _ => {
            let lag = plant_kernel.lag_table_2d(&grid);
            (
                Lags::Two(config.target.kernel.lag_table_2d(&grid)),
                vec![Convolver::new(grid, &lag[0]), Convolver::new(grid, &lag[1])],
            )
        }
    };
    let floor = singularity_floor(config.target.mass_l(), dim);
    let mut governor = Governor::new(config.effective_rule(), dt);

    let v0 = error_sq_norm(&config.target.density, &config.rho_f0);
    let monitor = if dim == 1
        && report.feasible
        && report.stability_margin > 0.0
        && config.disturbance.is_none()
        && nominal_plant
    {
        let lag = match &controller_lags {
            Lags::One(lag) => lag.as_slice(),
            Lags::Two(_) => unreachable!(),
        };
        Some(LyapunovMonitor::new(
            &report,
            &config.target,
            &config.rho_l0,
            lag,
            config.k_l,
            v0,
        )?)
    } else {
        None
    };

    let mut rho_l = config.rho_l0.clone();
    let mut rho_f = config.rho_f0.clone();
    let mut rho_hat_l = rho_l_bar.clone();
    let mut rec = Recorder {
        times: vec![],
        e_l_sq: vec![],
        e_f_sq: vec![],
        kl_l: vec![],
        kl_f: vec![],
        alpha: vec![],
        mass_l: vec![],
        mass_f: vec![],
        lyap_residual: vec![],
        lyap_violations: 0,
    };
    let mut cfl_warnings = 0usize;
    let mut vacuum_events = 0usize;
    let record_every = config.record_every.max(1);
    // Densities a million times the initial sup-norm only ever arise from an
    // unstable discretization; fail fast with whatever was recorded.
    let blowup_linf =
        1e6 * (config.rho_l0.linf_norm() + config.rho_f0.linf_norm()).max(1.0);

    let mut step = 0usize;
    let failure = loop {
        let t = step as f64 * dt;
        let gov = match &controller_lags {
            Lags::One(lag) => governor.step_1d(&rho_f, &config.target, &rho_l_bar, lag),
            Lags::Two(lag) => governor.step_2d(&rho_f, &config.target, &rho_l_bar, lag),
        };
        let gov = match gov {
            Ok(g) => g,
            Err(e) => break Some(e),
        };
        rho_hat_l = gov.rho_hat_l.clone();

        if step.is_multiple_of(record_every) || step == config.n_steps {
            let v_now = error_sq_norm(&config.target.density, &rho_f);
            let residual = match (&monitor, rec.times.last()) {
                (Some(m), Some(&t_prev)) => {
                    let v_prev = *rec.e_f_sq.last().unwrap();
                    let r = m.residual(t_prev, v_prev, v_now, t - t_prev);
                    if r > LYAP_TOL * m.scale {
                        rec.lyap_violations += 1;
                    }
                    r
                }
                _ => 0.0,
            };
            rec.times.push(t);
            rec.e_l_sq.push(error_sq_norm(&rho_hat_l, &rho_l));
            rec.e_f_sq.push(v_now);
            rec.kl_l.push(kl_divergence(&rho_hat_l, &rho_l).value);
            rec.kl_f.push(kl_divergence(&config.target.density, &rho_f).value);
            rec.alpha.push(gov.alpha);
            rec.mass_l.push(integrate(&rho_l));
            rec.mass_f.push(integrate(&rho_f));
            rec.lyap_residual.push(residual);
        }
        if step == config.n_steps {
            break None;
        }

        let result = (|| -> Result<()> {
            let flux_rhs =
                leader_flux_rhs(&rho_l, &gov.rho_hat_l, Some(&gov.rho_hat_l_dt), config.k_l)?;
            let ctrl = match dim {
                1 => recover_u_1d(&rho_l, &flux_rhs, floor)?,
                _ => recover_u_2d(&rho_l, &flux_rhs, floor)?,
            };
            if ctrl.vacuum {
                vacuum_events += 1;
            }
            let drift = config
                .disturbance
                .filter(|d| t >= d.onset)
                .map_or(0.0, |d| d.amplitude);
            let mut v_fl = Vec::with_capacity(dim);
            for conv in &plant_convs {
                let mut v = conv.apply(&rho_l)?;
                if drift != 0.0 {
                    // The drift perturbs axis 0 only.
                    if v_fl.is_empty() {
                        v = v.map(|x| x + drift);
                    }
                }
                v_fl.push(v);
            }
            if step.is_multiple_of(record_every) {
                let dx = grid.dx();
                let max_v = v_fl
                    .iter()
                    .chain(&ctrl.u)
                    .map(|f| f.linf_norm())
                    .fold(0.0, f64::max);
                if max_v * dt / dx > 1.0 || config.target.diffusivity * dt / (dx * dx) > 0.5 {
                    cfl_warnings += 1;
                }
            }
            rho_l = advance_leaders_flux(&rho_l, &ctrl.flux, dt)?;
            rho_f = advance_followers(&rho_f, &v_fl, config.target.diffusivity, dt)?;
            if !rho_l.is_finite()
                || !rho_f.is_finite()
                || rho_l.linf_norm() > blowup_linf
                || rho_f.linf_norm() > blowup_linf
            {
                return Err(Error::NumericalBlowup { step });
            }
            Ok(())
        })();
        if let Err(e) = result {
            break Some(e);
        }
        step += 1;
    };

    let record = SimRecord {
        times: rec.times,
        e_l: percentage_error(&rec.e_l_sq),
        e_f: percentage_error(&rec.e_f_sq),
        kl_l: rec.kl_l,
        kl_f: rec.kl_f,
        alpha: rec.alpha,
        mass_l: rec.mass_l,
        mass_f: rec.mass_f,
        lyap_residual: rec.lyap_residual,
        stability_margin: report.stability_margin,
        monitor_active: monitor.is_some(),
        lyap_violations: rec.lyap_violations,
        cfl_warnings,
        vacuum_events,
        final_rho_l: rho_l,
        final_rho_f: rho_f,
        final_rho_hat_l: rho_hat_l,
    };
    match failure {
        None => Ok(record),
        Some(error) => Err(SimFailure {
            error,
            partial: Some(record),
        }),
    }
}

fn check_mass(field: &Field, expected: f64) -> Result<()> {
    let actual = integrate(field);
    if (actual - expected).abs() > 1e-6 {
        return Err(Error::MassMismatch {
            reference: expected,
            actual,
        });
    }
    Ok(())
}
