//! Reference-governor outer loop.
//!
//! From the measured followers' error the governor computes a velocity
//! correction `w = D rho_bar_x e^F / (rho_bar rho^F)`, deconvolves it into a
//! zero-mean leaders'-density correction `W`, picks a blending weight
//! `alpha in [0, 1]` that keeps `rho_bar_L + alpha W` nonnegative, and hands
//! the blended, time-varying leader reference (with its backward-difference
//! time derivative) to the tracking controller.

use crate::deconvolve::{deconvolve_2d, deconvolve_spectral_1d, ConstantRule};
use crate::feasibility::TargetSpec;
use crate::field::{derivative, integrate, Field, FieldKind, TWO_PI};
use crate::{Error, Result};

/// Follower-density floor below which the correction is undefined.
pub const FOLLOWER_FLOOR: f64 = 1e-8;

/// How the blending weight is chosen each step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum AlphaRule {
    /// `alpha = 0`: pure feed-forward.
    Off,
    /// Global-minima bound: `alpha = clamp(-min rho_bar_L / min W)`.
    Conservative,
    /// Pointwise maximal weight `min_x rho_bar_L / max(-W, epsilon)`.
    Optimal { epsilon: f64 },
}

impl AlphaRule {
    pub fn optimal() -> Self {
        AlphaRule::Optimal { epsilon: 0.01 }
    }
}

/// Per-step governor outputs.
#[derive(Clone, Debug)]
pub struct GovernorState {
    /// Velocity correction, one component per axis.
    pub w: Vec<Field>,
    /// Zero-mean density correction (deconvolved `w`).
    pub correction: Field,
    pub alpha: f64,
    /// Blended leader reference `rho_bar_L + alpha * correction`.
    pub rho_hat_l: Field,
    /// Backward-difference time derivative of the blended reference; zero on
    /// the first step.
    pub rho_hat_l_dt: Field,
}

/// Velocity correction from the measured followers' density.
pub fn feedback_correction(rho_f: &Field, target: &TargetSpec) -> Result<Field> {
    let min = rho_f.min();
    if min <= FOLLOWER_FLOOR {
        return Err(Error::VanishingFollowerDensity { min });
    }
    correction_component(rho_f, target, 0)
}

/// One axis of the 2D velocity correction.
pub fn feedback_correction_2d(rho_f: &Field, target: &TargetSpec) -> Result<[Field; 2]> {
    let min = rho_f.min();
    if min <= FOLLOWER_FLOOR {
        return Err(Error::VanishingFollowerDensity { min });
    }
    Ok([
        correction_component(rho_f, target, 0)?,
        correction_component(rho_f, target, 1)?,
    ])
}

fn correction_component(rho_f: &Field, target: &TargetSpec, axis: usize) -> Result<Field> {
    let d = target.diffusivity;
    let dr = derivative(&target.density, 1, axis);
    let mut out = dr.zip_with(&target.density, |grad, bar| d * grad / bar)?;
    out = out.zip_with(rho_f, |num, rho| num / rho)?;
    // Multiply by the error e^F = rho_bar - rho^F last.
    Ok(out
        .zip_with(&target.density.zip_with(rho_f, |bar, rho| bar - rho)?, |a, e| a * e)?
        .with_kind(FieldKind::Velocity))
}

/// Blending weight for a given rule, reference and correction.
pub fn blend_weight(rule: AlphaRule, rho_l_bar: &Field, correction: &Field) -> f64 {
    match rule {
        AlphaRule::Off => 0.0,
        AlphaRule::Conservative => {
            let min_w = correction.min();
            if min_w >= 0.0 {
                1.0 // the positivity constraint is vacuous
            } else {
                (-rho_l_bar.min() / min_w).clamp(0.0, 1.0)
            }
        }
        AlphaRule::Optimal { epsilon } => {
            assert!(epsilon > 0.0);
            rho_l_bar
                .values
                .iter()
                .zip(&correction.values)
                .map(|(r, w)| r.max(0.0) / (-w).max(epsilon))
                .fold(f64::INFINITY, f64::min)
                .clamp(0.0, 1.0)
        }
    }
}

/// Stateful governor; owns the previous blended reference for the backward
/// time difference.
#[derive(Clone, Debug)]
pub struct Governor {
    pub rule: AlphaRule,
    dt: f64,
    prev: Option<Field>,
}

impl Governor {
    pub fn new(rule: AlphaRule, dt: f64) -> Self {
        assert!(dt > 0.0);
        Governor {
            rule,
            dt,
            prev: None,
        }
    }

    pub fn step_1d(
        &mut self,
        rho_f: &Field,
        target: &TargetSpec,
        rho_l_bar: &Field,
        lag: &[f64],
    ) -> Result<GovernorState> {
        let grid = rho_f.grid;
        if self.rule == AlphaRule::Off {
            return Ok(self.finish(vec![Field::zeros(grid)], Field::zeros(grid), rho_l_bar));
        }
        let w = feedback_correction(rho_f, target)?;
        // The raw correction carries a small mean; the deconvolution constant
        // is free (zero-mean rule), so remove it first.
        let mean = integrate(&w) / TWO_PI;
        let w_zm = w.map(|v| v - mean);
        let correction = deconvolve_spectral_1d(&w_zm, lag, ConstantRule::ZeroMean)?.field;
        Ok(self.finish(vec![w], correction, rho_l_bar))
    }

    pub fn step_2d(
        &mut self,
        rho_f: &Field,
        target: &TargetSpec,
        rho_l_bar: &Field,
        lag: &[Vec<f64>; 2],
    ) -> Result<GovernorState> {
        let grid = rho_f.grid;
        if self.rule == AlphaRule::Off {
            return Ok(self.finish(
                vec![Field::zeros(grid), Field::zeros(grid)],
                Field::zeros(grid),
                rho_l_bar,
            ));
        }
        let [w1, w2] = feedback_correction_2d(rho_f, target)?;
        let volume = TWO_PI * TWO_PI;
        let m1 = integrate(&w1) / volume;
        let m2 = integrate(&w2) / volume;
        let w_zm = [w1.map(|v| v - m1), w2.map(|v| v - m2)];
        let correction = deconvolve_2d(&w_zm, lag, ConstantRule::ZeroMean)?.field;
        Ok(self.finish(vec![w1, w2], correction, rho_l_bar))
    }

    fn finish(&mut self, w: Vec<Field>, correction: Field, rho_l_bar: &Field) -> GovernorState {
        let alpha = blend_weight(self.rule, rho_l_bar, &correction);
        let mut rho_hat_l = rho_l_bar.clone();
        rho_hat_l.axpy(alpha, &correction);
        debug_assert!(rho_hat_l.min() >= -1e-10);
        let rho_hat_l_dt = match &self.prev {
            Some(prev) => rho_hat_l.zip_with(prev, |a, b| (a - b) / self.dt).unwrap(),
            None => Field::zeros(rho_hat_l.grid),
        };
        self.prev = Some(rho_hat_l.clone());
        GovernorState {
            w,
            correction,
            alpha,
            rho_hat_l: rho_hat_l.with_kind(FieldKind::Density),
            rho_hat_l_dt,
        }
    }
}
