//! Sampling and density primitives used by the Gibbs sweep: the scaled
//! inverse chi-squared distribution and a univariate slice-sampling step.

use rand::Rng;
use rand_distr::{ChiSquared, Distribution, Exp1};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::Error;

/// Scaled inverse chi-squared distribution Inv-χ²(ν, s²).
///
/// Density f(x; ν, s²) ∝ x^(−ν/2−1) exp(−ν s² / (2x)) on x > 0, with the
/// convention that a draw is ν s² / c for c ~ χ²_ν. Under this
/// parameterization the conjugate variance updates keep the form
/// Inv-χ²(dof + n, weighted scale).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaledInvChiSq {
    dof: f64,
    scale_sq: f64,
}

impl ScaledInvChiSq {
    pub fn new(dof: f64, scale_sq: f64) -> Result<Self, Error> {
        if !dof.is_finite() || !scale_sq.is_finite() || dof <= 0.0 || scale_sq <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "scaled inverse chi-squared needs finite dof > 0 and scale_sq > 0, got ({dof}, {scale_sq})"
            )));
        }
        Ok(Self { dof, scale_sq })
    }

    pub fn dof(&self) -> f64 {
        self.dof
    }

    pub fn scale_sq(&self) -> f64 {
        self.scale_sq
    }

    /// Mean ν s² / (ν − 2); undefined for ν ≤ 2.
    pub fn mean(&self) -> Option<f64> {
        (self.dof > 2.0).then(|| self.dof * self.scale_sq / (self.dof - 2.0))
    }

    /// Mode ν s² / (ν + 2).
    pub fn mode(&self) -> f64 {
        self.dof * self.scale_sq / (self.dof + 2.0)
    }

    /// Draws ν s² / c with c ~ χ²_ν.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let chi = ChiSquared::new(self.dof).expect("dof validated at construction");
        let c: f64 = chi.sample(rng);
        // Tiny-dof gamma samplers can underflow to exactly zero, which would
        // map to infinity; clamp to the smallest positive double instead.
        self.dof * self.scale_sq / c.max(f64::MIN_POSITIVE)
    }

    /// Log density at x, including the normalizing constant
    /// (ν/2)^(ν/2) s^ν / Γ(ν/2).
    pub fn logpdf(&self, x: f64) -> Result<f64, Error> {
        if !x.is_finite() || x <= 0.0 {
            return Err(Error::Domain(format!(
                "scaled inverse chi-squared density is supported on x > 0, got {x}"
            )));
        }
        let half = 0.5 * self.dof;
        Ok(half * (half.ln() + self.scale_sq.ln()) - ln_gamma(half)
            - (half + 1.0) * x.ln()
            - self.dof * self.scale_sq / (2.0 * x))
    }
}

/// Tuning for the stepping-out slice sampler.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SliceConfig {
    /// Initial bracket width w.
    pub initial_width: f64,
    /// Step-out budget m; the bracket is expanded at most m − 1 times.
    pub max_step_out: u32,
}

impl Default for SliceConfig {
    fn default() -> Self {
        Self {
            initial_width: 1.0,
            max_step_out: 100,
        }
    }
}

impl SliceConfig {
    pub fn validate(&self) -> Result<(), Error> {
        if !self.initial_width.is_finite() || self.initial_width <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "slice initial_width must be a positive finite number, got {}",
                self.initial_width
            )));
        }
        if self.max_step_out < 1 {
            return Err(Error::InvalidParameter(
                "slice max_step_out must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// Bracket width below which the shrinkage loop gives up.
const MIN_BRACKET_WIDTH: f64 = 1e-12;

/// One univariate slice-sampling transition targeting `log_density`.
///
/// Draws an auxiliary level under the density at `x0`, brackets the slice
/// with the stepping-out procedure, then samples from the bracket with the
/// shrinkage procedure. The transition leaves the target invariant, and the
/// returned point always satisfies `log_density(x1) >= level`.
pub fn slice_sample_step<R, F>(
    mut log_density: F,
    x0: f64,
    cfg: &SliceConfig,
    rng: &mut R,
) -> Result<f64, Error>
where
    R: Rng + ?Sized,
    F: FnMut(f64) -> f64,
{
    cfg.validate()?;
    let g0 = log_density(x0);
    if !g0.is_finite() {
        return Err(Error::InvalidState(format!(
            "slice sampling needs a finite log-density at the current point, got {g0} at x0 = {x0}"
        )));
    }
    // level = g0 + ln U, drawn as g0 minus an Exp(1) variate.
    let e: f64 = Exp1.sample(rng);
    let level = g0 - e;

    let w = cfg.initial_width;
    let mut left = x0 - w * rng.random::<f64>();
    let mut right = left + w;
    // Split the expansion budget at random between the two directions.
    let mut j = (rng.random::<f64>() * f64::from(cfg.max_step_out)).floor() as u32;
    let mut k = cfg.max_step_out - 1 - j;
    while j > 0 && level < log_density(left) {
        left -= w;
        j -= 1;
    }
    while k > 0 && level < log_density(right) {
        right += w;
        k -= 1;
    }

    loop {
        let x1 = left + rng.random::<f64>() * (right - left);
        if level < log_density(x1) {
            return Ok(x1);
        }
        if x1 < x0 {
            left = x1;
        } else {
            right = x1;
        }
        if right - left < MIN_BRACKET_WIDTH {
            return Err(Error::DegenerateDensity {
                x: x0,
                width: right - left,
            });
        }
    }
}
