//! The Gibbs sweep over the model conditionals, chain execution, and
//! posterior summarization.
//!
//! One sweep updates, in fixed scan order, σ²_sg → α_sg → β_sg → τ²_s →
//! v_s → λ → (ν, φ²₀, φ²₁). The first four blocks have closed-form
//! conditionals; the indicator and mixture weight are Bernoulli/Beta; the
//! hyperparameters are slice-sampled on the log axis. The scan order is a
//! fixed implementation choice so chains are reproducible.
//!
//! Two further moves close out each sweep, both leaving the posterior
//! invariant: a joint rescaling of (τ²_s, β_s) sampled against the data
//! in the non-centered parameterization β = τ β̃, and (mixture variant) a
//! blocked redraw of (v_s, τ²_s) with the set variance integrated out of
//! the indicator conditional. Without them the scan alone moves the
//! variance hierarchy by a slow multiplicative random walk — the τ²
//! conditional sees the data only through β, and β is shrunk by the old
//! τ² — which in practice strands the chain in a near-degenerate corner
//! of the scale hierarchy.

use rand::Rng;
use rand_distr::{Beta as BetaDist, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::distributions::{slice_sample_step, ScaledInvChiSq};
use crate::error::Error;
use crate::model::{
    init_state, BoundProblem, GeneSummary, McmcConfig, ModelState, ModelVariant, PosteriorSummary,
    SetSummary,
};
use crate::stream;

/// Floor for the σ² conditional scale when the residual sum vanishes.
pub const SIGMA_SCALE_FLOOR: f64 = 1e-12;

/// Priors for the blocks whose defaults are improper or hard-coded.
///
/// The production chain uses the improper P(α, σ²) ∝ 1/σ² and untruncated
/// Exp(1) hyperpriors; the proper alternatives exist so that
/// joint-consistency checks can forward-sample the model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Priors {
    /// Variance γ² of a proper N(0, γ²) prior on α; None keeps the flat prior.
    pub alpha_var: Option<f64>,
    /// (dof, scale²) of a proper Inv-χ² prior on σ²; None keeps ∝ 1/σ².
    pub sigma_sq_prior: Option<(f64, f64)>,
    /// Rate of the exponential priors on ν, φ²₀ and φ²₁.
    pub hyper_rate: f64,
    /// Lower truncation point of the ν prior (0 disables truncation).
    pub nu_floor: f64,
}

impl Default for Priors {
    fn default() -> Self {
        Self {
            alpha_var: None,
            sigma_sq_prior: None,
            hyper_rate: 1.0,
            nu_floor: 0.0,
        }
    }
}

/// Counters for conditions that were handled but are worth reporting.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainDiagnostics {
    /// Sweeps in which at least one σ² conditional hit the scale floor.
    pub sigma_scale_floor_hits: u64,
}

/// Draws fresh σ²_sg for every slot from Inv-χ²(n, Σᵢ rᵢ²/n) with
/// rᵢ = yᵢ − α − β xᵢ (plus the proper-prior pseudo-observations when
/// configured). A vanishing residual sum floors the scale and is counted
/// in the diagnostics rather than silently accepted.
pub fn update_sigma_sq<R: Rng + ?Sized>(
    state: &mut ModelState,
    problem: &BoundProblem,
    priors: &Priors,
    rng: &mut R,
    diag: &mut ChainDiagnostics,
) {
    let labels = problem.data().class_labels();
    let n = problem.n_samples() as f64;
    let mut floored = false;
    for slot in 0..problem.n_slots() {
        let alpha = state.alpha[slot];
        let beta = state.beta[slot];
        let mut rss = 0.0;
        for (&y, &t) in problem.values_of_slot(slot).iter().zip(labels) {
            let r = y - alpha - if t { beta } else { 0.0 };
            rss += r * r;
        }
        let (dof, mut scale) = match priors.sigma_sq_prior {
            None => (n, rss / n),
            Some((d0, s0)) => (d0 + n, (d0 * s0 + rss) / (d0 + n)),
        };
        if scale < SIGMA_SCALE_FLOOR {
            scale = SIGMA_SCALE_FLOOR;
            floored = true;
        }
        let dist = ScaledInvChiSq::new(dof, scale).expect("positive dof and floored scale");
        state.sigma_sq[slot] = dist.sample(rng);
    }
    if floored {
        diag.sigma_scale_floor_hits += 1;
    }
}

/// Draws fresh α_sg from N(Σᵢ(yᵢ − β xᵢ)/n, σ²/n), or the corresponding
/// shrunk normal when a proper N(0, γ²) prior is configured.
pub fn update_alpha<R: Rng + ?Sized>(
    state: &mut ModelState,
    problem: &BoundProblem,
    priors: &Priors,
    rng: &mut R,
) {
    let n = problem.n_samples() as f64;
    let n_treat = problem.n_treatment() as f64;
    for slot in 0..problem.n_slots() {
        let sigma_sq = state.sigma_sq[slot];
        // Σᵢ(yᵢ − β xᵢ) = Σᵢ yᵢ − β n₁ because x is binary.
        let sum_resid = problem.sum_y(slot) - state.beta[slot] * n_treat;
        let (mean, var) = match priors.alpha_var {
            None => (sum_resid / n, sigma_sq / n),
            Some(gamma_sq) => {
                let precision = n / sigma_sq + 1.0 / gamma_sq;
                ((sum_resid / sigma_sq) / precision, 1.0 / precision)
            }
        };
        let z: f64 = rng.sample(StandardNormal);
        state.alpha[slot] = mean + var.sqrt() * z;
    }
}

/// Draws fresh β_sg from the normal with precision 1/τ²_s + n₁/σ² and
/// mean (Σᵢ(yᵢ − α)xᵢ/σ²) / precision.
pub fn update_beta<R: Rng + ?Sized>(
    state: &mut ModelState,
    problem: &BoundProblem,
    rng: &mut R,
) -> Result<(), Error> {
    let n_treat = problem.n_treatment() as f64;
    for s in 0..problem.n_sets() {
        let tau_sq = state.tau_sq[s];
        if !(tau_sq > 0.0) || !tau_sq.is_finite() {
            return Err(Error::InvalidState(format!(
                "tau_sq for set {s} must be positive and finite, got {tau_sq}"
            )));
        }
        for slot in problem.set_slots(s) {
            let sigma_sq = state.sigma_sq[slot];
            // Σᵢ(yᵢ − α)xᵢ = Σ_treat yᵢ − α n₁; Σᵢ xᵢ² = Σᵢ xᵢ = n₁.
            let sum_treat_resid = problem.sum_y_treat(slot) - state.alpha[slot] * n_treat;
            let precision = 1.0 / tau_sq + n_treat / sigma_sq;
            let mean = (sum_treat_resid / sigma_sq) / precision;
            let z: f64 = rng.sample(StandardNormal);
            state.beta[slot] = mean + z / precision.sqrt();
        }
    }
    Ok(())
}

/// Draws fresh τ²_s from Inv-χ²(ν + ℓ_s, (ν φ² + Σ_g β²_sg)/(ν + ℓ_s)),
/// with φ² = φ²₀ in the null branch (and always in the simple variant) and
/// φ² = φ²₀ + φ²₁ in the alternative branch.
pub fn update_tau_sq<R: Rng + ?Sized>(
    state: &mut ModelState,
    problem: &BoundProblem,
    variant: ModelVariant,
    rng: &mut R,
) {
    let nu = state.nu;
    for s in 0..problem.n_sets() {
        let ss_beta: f64 = problem.set_slots(s).map(|i| state.beta[i] * state.beta[i]).sum();
        let ell = problem.set_slots(s).len() as f64;
        let phi_sq = match variant {
            ModelVariant::Simple => state.phi0_sq,
            ModelVariant::Mixture => {
                state.phi0_sq + if state.v[s] { state.phi1_sq } else { 0.0 }
            }
        };
        let dof = nu + ell;
        let scale = (nu * phi_sq + ss_beta) / dof;
        let dist = ScaledInvChiSq::new(dof, scale).expect("positive conditional parameters");
        state.tau_sq[s] = dist.sample(rng);
    }
}

/// Draws fresh indicators v_s from their Bernoulli conditionals,
/// P(v_s = 1 | ·) = λ f₁(τ²_s) / ((1−λ) f₀(τ²_s) + λ f₁(τ²_s)), computed in
/// log space. Returns the per-set probabilities so the chain can record
/// them for Rao-Blackwellized estimates.
pub fn update_v<R: Rng + ?Sized>(state: &mut ModelState, rng: &mut R) -> Result<Vec<f64>, Error> {
    let null_dist = ScaledInvChiSq::new(state.nu, state.phi0_sq)?;
    let alt_dist = ScaledInvChiSq::new(state.nu, state.phi0_sq + state.phi1_sq)?;
    let log_lambda = state.lambda.ln();
    let log_one_minus = (1.0 - state.lambda).ln();
    let mut probs = Vec::with_capacity(state.v.len());
    for s in 0..state.v.len() {
        let tau_sq = state.tau_sq[s];
        let log_f0 = null_dist.logpdf(tau_sq)?;
        let log_f1 = alt_dist.logpdf(tau_sq)?;
        if log_f0 == f64::NEG_INFINITY && log_f1 == f64::NEG_INFINITY {
            return Err(Error::InvalidState(format!(
                "both mixture densities underflowed at tau_sq = {tau_sq} for set {s}"
            )));
        }
        let alt = log_lambda + log_f1;
        let null = log_one_minus + log_f0;
        let p1 = if alt == f64::NEG_INFINITY && null == f64::NEG_INFINITY {
            return Err(Error::InvalidState(format!(
                "mixture posterior for set {s} is 0/0 at tau_sq = {tau_sq} with lambda = {}",
                state.lambda
            )));
        } else if alt == f64::NEG_INFINITY {
            0.0
        } else if null == f64::NEG_INFINITY {
            1.0
        } else {
            1.0 / (1.0 + (null - alt).exp())
        };
        state.v[s] = rng.random::<f64>() < p1;
        probs.push(p1);
    }
    Ok(probs)
}

/// Draws a fresh λ from Beta(a + Σ v_s, b + K − Σ v_s).
pub fn update_lambda<R: Rng + ?Sized>(state: &mut ModelState, a: f64, b: f64, rng: &mut R) {
    let k = state.v.len() as f64;
    let s1 = state.v.iter().filter(|&&v| v).count() as f64;
    let dist = BetaDist::new(a + s1, b + k - s1).expect("positive Beta parameters");
    state.lambda = dist.sample(rng);
}

/// Sum of scaled-inv-χ² log densities of the τ² vector under candidate
/// hyperparameters; −∞ for candidates outside the support.
fn tau_sq_loglik(
    tau_sq: &[f64],
    v: &[bool],
    variant: ModelVariant,
    nu: f64,
    phi0_sq: f64,
    phi1_sq: f64,
) -> f64 {
    let null_dist = match ScaledInvChiSq::new(nu, phi0_sq) {
        Ok(d) => d,
        Err(_) => return f64::NEG_INFINITY,
    };
    let alt_dist = if variant == ModelVariant::Mixture {
        match ScaledInvChiSq::new(nu, phi0_sq + phi1_sq) {
            Ok(d) => d,
            Err(_) => return f64::NEG_INFINITY,
        }
    } else {
        null_dist
    };
    let mut acc = 0.0;
    for (s, &t) in tau_sq.iter().enumerate() {
        let dist = if variant == ModelVariant::Mixture && v[s] {
            &alt_dist
        } else {
            &null_dist
        };
        match dist.logpdf(t) {
            Ok(lp) => acc += lp,
            Err(_) => return f64::NEG_INFINITY,
        }
    }
    acc
}

/// Log density of the exponential prior, up to no constant.
fn exp_log_prior(x: f64, rate: f64) -> f64 {
    rate.ln() - rate * x
}

/// Slice-samples ν, φ²₀ and (mixture only) φ²₁ on the log axis with the
/// Jacobian folded into each target. Parameters with a fixed override are
/// skipped. Update order is ν, φ²₀, φ²₁.
pub fn update_hyperparams<R: Rng + ?Sized>(
    state: &mut ModelState,
    cfg: &McmcConfig,
    priors: &Priors,
    rng: &mut R,
) -> Result<(), Error> {
    let variant = cfg.variant;

    if cfg.fixed_nu.is_none() {
        let tau_sq = &state.tau_sq;
        let v = &state.v;
        let (phi0_sq, phi1_sq) = (state.phi0_sq, state.phi1_sq);
        let (rate, floor) = (priors.hyper_rate, priors.nu_floor);
        let target = |u: f64| {
            let nu = u.exp();
            if !nu.is_finite() || nu < floor {
                return f64::NEG_INFINITY;
            }
            exp_log_prior(nu, rate) + tau_sq_loglik(tau_sq, v, variant, nu, phi0_sq, phi1_sq) + u
        };
        let u1 = slice_sample_step(target, state.nu.ln(), &cfg.slice, rng)?;
        state.nu = u1.exp();
    }

    if cfg.fixed_phi0_sq.is_none() {
        let tau_sq = &state.tau_sq;
        let v = &state.v;
        let (nu, phi1_sq) = (state.nu, state.phi1_sq);
        let rate = priors.hyper_rate;
        let target = |u: f64| {
            let phi0_sq = u.exp();
            if !phi0_sq.is_finite() {
                return f64::NEG_INFINITY;
            }
            exp_log_prior(phi0_sq, rate)
                + tau_sq_loglik(tau_sq, v, variant, nu, phi0_sq, phi1_sq)
                + u
        };
        let u1 = slice_sample_step(target, state.phi0_sq.ln(), &cfg.slice, rng)?;
        state.phi0_sq = u1.exp();
    }

    if variant == ModelVariant::Mixture && cfg.fixed_phi1_sq.is_none() {
        let tau_sq = &state.tau_sq;
        let v = &state.v;
        let (nu, phi0_sq) = (state.nu, state.phi0_sq);
        let rate = priors.hyper_rate;
        // Only sets in the alternative component see φ²₁; with none, the
        // conditional reduces to the prior.
        let target = |u: f64| {
            let phi1_sq = u.exp();
            if !phi1_sq.is_finite() {
                return f64::NEG_INFINITY;
            }
            let alt_dist = match ScaledInvChiSq::new(nu, phi0_sq + phi1_sq) {
                Ok(d) => d,
                Err(_) => return f64::NEG_INFINITY,
            };
            let mut acc = exp_log_prior(phi1_sq, rate) + u;
            for (s, &t) in tau_sq.iter().enumerate() {
                if v[s] {
                    match alt_dist.logpdf(t) {
                        Ok(lp) => acc += lp,
                        Err(_) => return f64::NEG_INFINITY,
                    }
                }
            }
            acc
        };
        let u1 = slice_sample_step(target, state.phi1_sq.ln(), &cfg.slice, rng)?;
        state.phi1_sq = u1.exp();
    }

    Ok(())
}

/// Joint rescaling move on (τ²_s, β_s): holds β̃ = β/τ fixed, slice-samples
/// ln τ² against the treatment residuals directly, then restores β = τ β̃.
///
/// In this parameterization the data see τ as the amplitude of the set's
/// class effects, so the set-level variance can traverse its scale range
/// in one step instead of diffusing through the β ↔ τ² feedback. The move
/// leaves the posterior invariant; without it the variance hierarchy can
/// take thousands of sweeps to cross between scale regimes.
pub fn interweave_tau_sq<R: Rng + ?Sized>(
    state: &mut ModelState,
    problem: &BoundProblem,
    cfg: &McmcConfig,
    rng: &mut R,
) -> Result<(), Error> {
    let n_treat = problem.n_treatment() as f64;
    for s in 0..problem.n_sets() {
        let tau_sq = state.tau_sq[s];
        let tau = tau_sq.sqrt();
        let phi_sq = match cfg.variant {
            ModelVariant::Simple => state.phi0_sq,
            ModelVariant::Mixture => {
                state.phi0_sq + if state.v[s] { state.phi1_sq } else { 0.0 }
            }
        };
        let prior = ScaledInvChiSq::new(state.nu, phi_sq)
            .map_err(|e| Error::InvalidState(format!("set {s} scale prior: {e}")))?;
        // Sufficient statistics of the treatment residuals against τ·β̃.
        let mut lin = 0.0;
        let mut quad = 0.0;
        for slot in problem.set_slots(s) {
            let beta_scaled = state.beta[slot] / tau;
            let resid_treat = problem.sum_y_treat(slot) - state.alpha[slot] * n_treat;
            lin += beta_scaled * resid_treat / state.sigma_sq[slot];
            quad += n_treat * beta_scaled * beta_scaled / state.sigma_sq[slot];
        }
        let target = |u: f64| {
            let t_sq = u.exp();
            if !t_sq.is_finite() || t_sq <= 0.0 {
                return f64::NEG_INFINITY;
            }
            match prior.logpdf(t_sq) {
                Ok(lp) => lp + lin * t_sq.sqrt() - 0.5 * quad * t_sq + u,
                Err(_) => f64::NEG_INFINITY,
            }
        };
        let u1 = slice_sample_step(target, tau_sq.ln(), &cfg.slice, rng)?;
        let new_tau_sq = u1.exp();
        let rescale = (new_tau_sq / tau_sq).sqrt();
        state.tau_sq[s] = new_tau_sq;
        for slot in problem.set_slots(s) {
            state.beta[slot] *= rescale;
        }
    }
    Ok(())
}

/// Log marginal density of a set's β vector under one mixture component,
/// with τ² integrated out analytically (dropping β-only constants).
fn log_beta_marginal(ss_beta: f64, ell: f64, nu: f64, scale_sq: f64) -> f64 {
    let half_nu = 0.5 * nu;
    half_nu * (half_nu * scale_sq).ln() - ln_gamma(half_nu) + ln_gamma(half_nu + 0.5 * ell)
        - (half_nu + 0.5 * ell) * (0.5 * (nu * scale_sq + ss_beta)).ln()
}

/// Blocked indicator update: draws each v_s from its conditional given
/// β_s with τ²_s integrated out, so borderline sets can switch components
/// without waiting for τ² to drift across. Must be followed by a fresh
/// τ²_s draw (the old value belongs to the old component). Returns the
/// per-set P(v_s = 1 | ·).
pub fn update_v_collapsed<R: Rng + ?Sized>(
    state: &mut ModelState,
    problem: &BoundProblem,
    rng: &mut R,
) -> Result<Vec<f64>, Error> {
    let log_lambda = state.lambda.ln();
    let log_one_minus = (1.0 - state.lambda).ln();
    let mut probs = Vec::with_capacity(state.v.len());
    for s in 0..problem.n_sets() {
        let ss_beta: f64 = problem
            .set_slots(s)
            .map(|i| state.beta[i] * state.beta[i])
            .sum();
        let ell = problem.set_slots(s).len() as f64;
        let null = log_one_minus + log_beta_marginal(ss_beta, ell, state.nu, state.phi0_sq);
        let alt = log_lambda
            + log_beta_marginal(ss_beta, ell, state.nu, state.phi0_sq + state.phi1_sq);
        let p1 = if alt == f64::NEG_INFINITY && null == f64::NEG_INFINITY {
            return Err(Error::InvalidState(format!(
                "collapsed indicator for set {s} is 0/0 with sum beta^2 = {ss_beta}"
            )));
        } else if alt == f64::NEG_INFINITY {
            0.0
        } else if null == f64::NEG_INFINITY {
            1.0
        } else {
            1.0 / (1.0 + (null - alt).exp())
        };
        state.v[s] = rng.random::<f64>() < p1;
        probs.push(p1);
    }
    Ok(probs)
}

/// One full Gibbs sweep: the fixed scan σ² → α → β → τ² → v → λ →
/// (ν, φ²₀, φ²₁), followed by the rescaling and blocked-indicator moves.
/// Returns the per-set P(v_s = 1 | ·) behind the recorded indicator draws
/// (empty for the simple variant).
pub fn gibbs_sweep<R: Rng + ?Sized>(
    state: &mut ModelState,
    problem: &BoundProblem,
    cfg: &McmcConfig,
    priors: &Priors,
    rng: &mut R,
    diag: &mut ChainDiagnostics,
) -> Result<Vec<f64>, Error> {
    update_sigma_sq(state, problem, priors, rng, diag);
    update_alpha(state, problem, priors, rng);
    update_beta(state, problem, rng)?;
    update_tau_sq(state, problem, cfg.variant, rng);
    if cfg.variant == ModelVariant::Mixture {
        update_v(state, rng)?;
        update_lambda(state, cfg.lambda_prior_a, cfg.lambda_prior_b, rng);
    }
    update_hyperparams(state, cfg, priors, rng)?;
    interweave_tau_sq(state, problem, cfg, rng)?;
    let v_probs = if cfg.variant == ModelVariant::Mixture {
        let probs = update_v_collapsed(state, problem, rng)?;
        update_tau_sq(state, problem, cfg.variant, rng);
        probs
    } else {
        Vec::new()
    };
    Ok(v_probs)
}

/// Retained post-burn-in draws of one chain.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainTrace {
    /// τ²_s per retained iteration.
    pub tau_sq: Vec<Vec<f64>>,
    /// v_s per retained iteration (mixture variant only).
    pub v: Vec<Vec<bool>>,
    /// P(v_s = 1 | ·) per retained iteration (mixture variant only).
    pub v_prob: Vec<Vec<f64>>,
    /// β_sg per retained iteration, in slot order.
    pub beta: Vec<Vec<f64>>,
    pub lambda: Vec<f64>,
    pub nu: Vec<f64>,
    pub phi0_sq: Vec<f64>,
    pub phi1_sq: Vec<f64>,
    pub variant: ModelVariant,
    pub seed: u64,
    pub rao_blackwell: bool,
    pub diagnostics: ChainDiagnostics,
}

impl ChainTrace {
    pub fn retained(&self) -> usize {
        self.tau_sq.len()
    }
}

/// Runs the chain: init from the seed, sweep `n_iterations` times, record
/// everything after `burn_in`. A pure function of (problem, config).
pub fn run_chain(problem: &BoundProblem, cfg: &McmcConfig) -> Result<ChainTrace, Error> {
    cfg.validate()?;
    let retained = cfg.retained();
    let mut rng = stream::from_seed(cfg.seed);
    let mut state = init_state(problem, cfg, &mut rng);
    let mut diag = ChainDiagnostics::default();
    let priors = Priors::default();

    let mixture = cfg.variant == ModelVariant::Mixture;
    let mut trace = ChainTrace {
        tau_sq: Vec::with_capacity(retained),
        v: Vec::with_capacity(if mixture { retained } else { 0 }),
        v_prob: Vec::with_capacity(if mixture { retained } else { 0 }),
        beta: Vec::with_capacity(retained),
        lambda: Vec::with_capacity(retained),
        nu: Vec::with_capacity(retained),
        phi0_sq: Vec::with_capacity(retained),
        phi1_sq: Vec::with_capacity(retained),
        variant: cfg.variant,
        seed: cfg.seed,
        rao_blackwell: cfg.rao_blackwell,
        diagnostics: ChainDiagnostics::default(),
    };

    for iteration in 0..cfg.n_iterations {
        let v_probs = gibbs_sweep(&mut state, problem, cfg, &priors, &mut rng, &mut diag)
            .map_err(|e| Error::ChainAborted {
                iteration,
                source: Box::new(e),
            })?;
        if iteration >= cfg.burn_in {
            trace.tau_sq.push(state.tau_sq.clone());
            trace.beta.push(state.beta.clone());
            if mixture {
                trace.v.push(state.v.clone());
                trace.v_prob.push(v_probs);
            }
            trace.lambda.push(state.lambda);
            trace.nu.push(state.nu);
            trace.phi0_sq.push(state.phi0_sq);
            trace.phi1_sq.push(state.phi1_sq);
        }
    }
    trace.diagnostics = diag;
    Ok(trace)
}

/// Reduces a trace to the per-set and per-gene posterior readouts.
pub fn summarize(trace: &ChainTrace, problem: &BoundProblem) -> Result<PosteriorSummary, Error> {
    let t = trace.retained();
    if t == 0 {
        return Err(Error::EmptyTrace);
    }
    let tf = t as f64;
    let sets = problem.sets();

    let mut set_summaries = Vec::with_capacity(problem.n_sets());
    for s in 0..problem.n_sets() {
        let mean_tau_sq = trace.tau_sq.iter().map(|row| row[s]).sum::<f64>() / tf;
        let prob_null = match trace.variant {
            ModelVariant::Simple => None,
            ModelVariant::Mixture => Some(if trace.rao_blackwell {
                trace.v_prob.iter().map(|row| 1.0 - row[s]).sum::<f64>() / tf
            } else {
                trace.v.iter().filter(|row| !row[s]).count() as f64 / tf
            }),
        };
        set_summaries.push(SetSummary {
            name: sets.name(s).to_string(),
            size: sets.size(s),
            mean_tau_sq,
            prob_null,
        });
    }

    let gene_ids = problem.data().gene_ids();
    let mut gene_summaries = Vec::with_capacity(problem.n_slots());
    for s in 0..problem.n_sets() {
        for slot in problem.set_slots(s) {
            let mut sum = 0.0;
            let mut pos = 0usize;
            let mut neg = 0usize;
            for row in &trace.beta {
                let b = row[slot];
                sum += b;
                if b > 0.0 {
                    pos += 1;
                } else if b < 0.0 {
                    neg += 1;
                }
            }
            gene_summaries.push(GeneSummary {
                set_name: sets.name(s).to_string(),
                gene_id: gene_ids[problem.gene_of_slot(slot)].clone(),
                mean_beta: sum / tf,
                tail_prob: 2.0 * (pos.min(neg) as f64) / tf,
            });
        }
    }

    Ok(PosteriorSummary {
        sets: set_summaries,
        genes: gene_summaries,
        retained: t,
        seed: trace.seed,
        variant: trace.variant,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{validate_and_bind, ExpressionDataset, GeneSetCollection};

    /// One set with two genes, n = 4, labels (0,0,1,1).
    fn tiny_problem(rows: Vec<Vec<f64>>) -> BoundProblem {
        let data = ExpressionDataset::new(
            (0..rows.len()).map(|g| format!("g{g}")).collect(),
            vec!["a".into(), "b".into(), "c".into(), "d".into()],
            vec![false, false, true, true],
            rows,
        )
        .unwrap();
        let sets = GeneSetCollection::new(
            vec!["s".into()],
            vec![(0..data.n_genes()).collect()],
        )
        .unwrap();
        validate_and_bind(data, sets).unwrap()
    }

    fn blank_state(problem: &BoundProblem) -> ModelState {
        ModelState {
            alpha: vec![0.0; problem.n_slots()],
            beta: vec![0.0; problem.n_slots()],
            sigma_sq: vec![1.0; problem.n_slots()],
            tau_sq: vec![1.0; problem.n_sets()],
            v: vec![false; problem.n_sets()],
            lambda: 0.5,
            nu: 1.0,
            phi0_sq: 1.0,
            phi1_sq: 1.0,
        }
    }

    fn mean_and_se(xs: &[f64]) -> (f64, f64) {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        (mean, (var / n).sqrt())
    }

    #[test]
    fn sigma_update_draws_from_the_stated_conditional() {
        // Residuals (1, -1, 1, -1) with alpha = beta = 0 give scale 4/4 = 1,
        // so draws come from Inv-chi^2(4, 1) with mean 2.
        let problem = tiny_problem(vec![vec![1.0, -1.0, 1.0, -1.0], vec![0.5, 0.5, 0.5, 0.5]]);
        let mut rng = crate::stream::from_seed(21);
        let mut diag = ChainDiagnostics::default();
        let priors = Priors::default();
        let mut draws = Vec::with_capacity(200_000);
        let mut state = blank_state(&problem);
        for _ in 0..200_000 {
            state.alpha[0] = 0.0;
            state.beta[0] = 0.0;
            update_sigma_sq(&mut state, &problem, &priors, &mut rng, &mut diag);
            draws.push(state.sigma_sq[0]);
        }
        let (mean, se) = mean_and_se(&draws);
        assert!((mean - 2.0).abs() < 3.0 * se, "mean {mean}, se {se}");
        assert_eq!(diag.sigma_scale_floor_hits, 0);
    }

    #[test]
    fn interpolating_parameters_floor_the_scale_and_flag_it() {
        // alpha = 0, beta = 1 reproduces (0,0,1,1) exactly: zero residuals.
        let problem = tiny_problem(vec![vec![0.0, 0.0, 1.0, 1.0], vec![0.0, 0.0, 1.0, 1.0]]);
        let mut rng = crate::stream::from_seed(22);
        let mut diag = ChainDiagnostics::default();
        let mut state = blank_state(&problem);
        state.beta = vec![1.0, 1.0];
        update_sigma_sq(&mut state, &problem, &Priors::default(), &mut rng, &mut diag);
        assert_eq!(diag.sigma_scale_floor_hits, 1);
        assert!(state.sigma_sq[0] > 0.0 && state.sigma_sq[0] < 1e-9);
    }

    #[test]
    fn alpha_update_centers_on_the_conditional_mean() {
        // beta = 0 and y = (2,2,2,2): conditional is N(2, sigma^2/4).
        let problem = tiny_problem(vec![vec![2.0, 2.0, 2.0, 2.0], vec![0.0; 4]]);
        let mut rng = crate::stream::from_seed(23);
        let mut state = blank_state(&problem);
        let mut draws = Vec::with_capacity(100_000);
        for _ in 0..100_000 {
            update_alpha(&mut state, &problem, &Priors::default(), &mut rng);
            draws.push(state.alpha[0]);
        }
        let (mean, se) = mean_and_se(&draws);
        assert!((mean - 2.0).abs() < 3.0 * se.max(1e-4), "mean {mean}");
        let var = draws.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / 99_999.0;
        assert!((var - 0.25).abs() < 0.01, "var {var}");
    }

    #[test]
    fn alpha_update_subtracts_the_class_effect() {
        // y = (0,0,1,1), x = (0,0,1,1), beta = 1: conditional mean 0.
        let problem = tiny_problem(vec![vec![0.0, 0.0, 1.0, 1.0], vec![0.0; 4]]);
        let mut rng = crate::stream::from_seed(24);
        let mut state = blank_state(&problem);
        let mut draws = Vec::with_capacity(100_000);
        for _ in 0..100_000 {
            state.beta[0] = 1.0;
            update_alpha(&mut state, &problem, &Priors::default(), &mut rng);
            draws.push(state.alpha[0]);
        }
        let (mean, se) = mean_and_se(&draws);
        assert!(mean.abs() < 3.0 * se.max(1e-4), "mean {mean}");
    }

    #[test]
    fn beta_update_limits() {
        let problem = tiny_problem(vec![vec![0.0, 0.0, 2.0, 2.0], vec![0.0; 4]]);
        let mut rng = crate::stream::from_seed(25);
        let mut state = blank_state(&problem);

        // Flat-prior limit: conditional mean approaches the treatment-group
        // mean of (y - alpha) = 2.
        state.tau_sq[0] = 1e12;
        let mut draws = Vec::with_capacity(50_000);
        for _ in 0..50_000 {
            update_beta(&mut state, &problem, &mut rng).unwrap();
            draws.push(state.beta[0]);
        }
        let (mean, se) = mean_and_se(&draws);
        assert!((mean - 2.0).abs() < 3.0 * se, "flat-prior mean {mean}");

        // Infinite-shrinkage limit: draws concentrate at zero.
        state.tau_sq[0] = 1e-12;
        let mut inside = 0usize;
        for _ in 0..10_000 {
            update_beta(&mut state, &problem, &mut rng).unwrap();
            if state.beta[0].abs() < 1e-4 {
                inside += 1;
            }
        }
        assert!(inside as f64 / 10_000.0 > 0.99, "inside {inside}");
    }

    #[test]
    fn beta_update_rejects_nonpositive_tau() {
        let problem = tiny_problem(vec![vec![0.0; 4], vec![0.0; 4]]);
        let mut rng = crate::stream::from_seed(26);
        let mut state = blank_state(&problem);
        state.tau_sq[0] = 0.0;
        assert!(matches!(
            update_beta(&mut state, &problem, &mut rng),
            Err(Error::InvalidState(_))
        ));
    }

    #[test]
    fn tau_update_matches_the_analytic_mean() {
        // 20 genes with beta = 0, nu = 1, phi0 = 1, v = 0: draws come from
        // Inv-chi^2(21, 1/21) with mean (21/21)/19 = 1/19.
        let rows: Vec<Vec<f64>> = (0..20).map(|_| vec![0.0; 4]).collect();
        let problem = tiny_problem(rows);
        let mut rng = crate::stream::from_seed(27);
        let mut state = blank_state(&problem);
        let mut draws = Vec::with_capacity(100_000);
        for _ in 0..100_000 {
            update_tau_sq(&mut state, &problem, ModelVariant::Mixture, &mut rng);
            draws.push(state.tau_sq[0]);
            state.tau_sq[0] = 1.0;
        }
        let (mean, se) = mean_and_se(&draws);
        assert!(
            (mean - 1.0 / 19.0).abs() < 4.0 * se,
            "mean {mean} vs {}",
            1.0 / 19.0
        );
    }

    #[test]
    fn tau_update_alternative_branch_scales_up() {
        // Same chi-squared stream: the v = 1 branch has a strictly larger
        // scale, so its draw is strictly larger, draw by draw.
        let rows: Vec<Vec<f64>> = (0..20).map(|_| vec![0.0; 4]).collect();
        let problem = tiny_problem(rows);
        for seed in 0..20 {
            let mut state0 = blank_state(&problem);
            let mut state1 = blank_state(&problem);
            state1.v[0] = true;
            let mut rng0 = crate::stream::from_seed(1000 + seed);
            let mut rng1 = crate::stream::from_seed(1000 + seed);
            update_tau_sq(&mut state0, &problem, ModelVariant::Mixture, &mut rng0);
            update_tau_sq(&mut state1, &problem, ModelVariant::Mixture, &mut rng1);
            assert!(state1.tau_sq[0] > state0.tau_sq[0]);
        }
    }

    #[test]
    fn tau_update_scale_arithmetic() {
        // Sum of beta^2 = 20 over 20 genes with nu = 1, phi0 = 1 gives
        // scale (1 + 20)/21 = 1, so the long-run mean is 21/19.
        let rows: Vec<Vec<f64>> = (0..20).map(|_| vec![0.0; 4]).collect();
        let problem = tiny_problem(rows);
        let mut rng = crate::stream::from_seed(28);
        let mut state = blank_state(&problem);
        let mut draws = Vec::with_capacity(100_000);
        for _ in 0..100_000 {
            state.beta = vec![1.0; 20];
            update_tau_sq(&mut state, &problem, ModelVariant::Mixture, &mut rng);
            draws.push(state.tau_sq[0]);
        }
        let (mean, se) = mean_and_se(&draws);
        assert!((mean - 21.0 / 19.0).abs() < 4.0 * se, "mean {mean}");
    }

    #[test]
    fn v_update_degenerate_mixture_returns_lambda() {
        let problem = tiny_problem(vec![vec![0.0; 4], vec![0.0; 4]]);
        let mut state = blank_state(&problem);
        state.phi1_sq = 0.0; // both components coincide
        state.lambda = 0.37;
        let mut rng = crate::stream::from_seed(29);
        let probs = update_v(&mut state, &mut rng).unwrap();
        assert!((probs[0] - 0.37).abs() < 1e-12, "p = {}", probs[0]);
    }

    #[test]
    fn v_update_prior_extremes_are_sure() {
        let problem = tiny_problem(vec![vec![0.0; 4], vec![0.0; 4]]);
        let mut rng = crate::stream::from_seed(30);
        let mut state = blank_state(&problem);
        state.lambda = 0.0;
        let probs = update_v(&mut state, &mut rng).unwrap();
        assert_eq!(probs[0], 0.0);
        assert!(!state.v[0]);
        state.lambda = 1.0;
        let probs = update_v(&mut state, &mut rng).unwrap();
        assert_eq!(probs[0], 1.0);
        assert!(state.v[0]);
    }

    #[test]
    fn v_update_matches_direct_density_ratio() {
        let problem = tiny_problem(vec![vec![0.0; 4], vec![0.0; 4]]);
        let mut state = blank_state(&problem);
        state.nu = 2.0;
        state.phi0_sq = 0.1;
        state.phi1_sq = 2.0;
        state.lambda = 0.5;
        state.tau_sq[0] = 1.5;
        let mut rng = crate::stream::from_seed(31);
        let probs = update_v(&mut state, &mut rng).unwrap();
        let f0 = ScaledInvChiSq::new(2.0, 0.1)
            .unwrap()
            .logpdf(1.5)
            .unwrap()
            .exp();
        let f1 = ScaledInvChiSq::new(2.0, 2.1)
            .unwrap()
            .logpdf(1.5)
            .unwrap()
            .exp();
        let expected = 0.5 * f1 / (0.5 * f0 + 0.5 * f1);
        assert!((probs[0] - expected).abs() < 1e-12);
    }

    #[test]
    fn v_update_flags_double_underflow() {
        let problem = tiny_problem(vec![vec![0.0; 4], vec![0.0; 4]]);
        let mut state = blank_state(&problem);
        state.nu = 3.0;
        state.tau_sq[0] = 1e-309; // -nu*s^2/(2 tau^2) overflows to -inf
        let mut rng = crate::stream::from_seed(32);
        assert!(matches!(
            update_v(&mut state, &mut rng),
            Err(Error::InvalidState(_))
        ));
    }

    #[test]
    fn lambda_update_long_run_means() {
        let problem = tiny_problem(vec![vec![0.0; 4], vec![0.0; 4]]);
        let mut state = blank_state(&problem);
        // Pretend 50 sets: widen v by hand.
        state.v = vec![true; 50];
        state.tau_sq = vec![1.0; 50];
        let mut rng = crate::stream::from_seed(33);
        let mut draws = Vec::with_capacity(100_000);
        for _ in 0..100_000 {
            update_lambda(&mut state, 1.0, 1.0, &mut rng);
            state.v = vec![true; 50];
            draws.push(state.lambda);
        }
        let (mean, _) = mean_and_se(&draws);
        assert!((mean - 51.0 / 52.0).abs() < 3e-4, "mean {mean}");

        state.v = vec![false; 50];
        let mut draws = Vec::with_capacity(100_000);
        for _ in 0..100_000 {
            update_lambda(&mut state, 1.0, 1.0, &mut rng);
            state.v = vec![false; 50];
            draws.push(state.lambda);
        }
        let (mean, _) = mean_and_se(&draws);
        assert!((mean - 1.0 / 52.0).abs() < 3e-4, "mean {mean}");

        // Symmetric occupancy keeps the conditional mean at 1/2.
        state.v = (0..50).map(|i| i < 25).collect();
        let mut draws = Vec::with_capacity(100_000);
        for _ in 0..100_000 {
            update_lambda(&mut state, 1.0, 1.0, &mut rng);
            state.v = (0..50).map(|i| i < 25).collect();
            draws.push(state.lambda);
        }
        let (mean, _) = mean_and_se(&draws);
        assert!((mean - 0.5).abs() < 1e-3, "mean {mean}");
    }

    #[test]
    fn phi1_with_no_alternative_sets_follows_its_prior() {
        // All v = 0 and fixed nu, phi0: the phi1 conditional is Exp(1), so
        // the chained slice draws should average 1.
        let problem = tiny_problem(vec![vec![0.0; 4], vec![0.0; 4]]);
        let mut cfg = McmcConfig::new(10, 1, 0, ModelVariant::Mixture).unwrap();
        cfg.fixed_nu = Some(1.0);
        cfg.fixed_phi0_sq = Some(1.0);
        let priors = Priors::default();
        let mut state = blank_state(&problem);
        let mut rng = crate::stream::from_seed(34);
        let mut sum = 0.0;
        let n = 100_000usize;
        for _ in 0..n {
            update_hyperparams(&mut state, &cfg, &priors, &mut rng).unwrap();
            sum += state.phi1_sq;
        }
        let mean = sum / n as f64;
        assert!((mean - 1.0).abs() < 0.03, "mean {mean}");
    }

    #[test]
    fn phi0_concentrates_near_the_generating_scale() {
        // 50 tau^2 values drawn from Inv-chi^2(4, 0.7): the phi0 posterior
        // should recover the generating scale within 20%.
        let mut rng = crate::stream::from_seed(35);
        let gen = ScaledInvChiSq::new(4.0, 0.7).unwrap();
        let tau_sq: Vec<f64> = (0..50).map(|_| gen.sample(&mut rng)).collect();
        let problem = tiny_problem(vec![vec![0.0; 4], vec![0.0; 4]]);
        let mut state = blank_state(&problem);
        state.tau_sq = tau_sq;
        state.v = vec![false; 50];
        state.nu = 4.0;
        let mut cfg = McmcConfig::new(10, 1, 0, ModelVariant::Mixture).unwrap();
        cfg.fixed_nu = Some(4.0);
        cfg.fixed_phi1_sq = Some(1.0);
        let priors = Priors::default();
        let mut sum = 0.0;
        let n = 20_000usize;
        for _ in 0..n {
            update_hyperparams(&mut state, &cfg, &priors, &mut rng).unwrap();
            sum += state.phi0_sq;
        }
        let mean = sum / n as f64;
        assert!(
            (mean - 0.7).abs() / 0.7 < 0.2,
            "posterior mean {mean} vs generating 0.7"
        );
    }

    #[test]
    fn hyperparam_slice_returns_points_in_the_slice() {
        // The returned state always has a finite full-conditional value.
        let problem = tiny_problem(vec![vec![0.0; 4], vec![0.0; 4]]);
        let cfg = McmcConfig::new(10, 1, 0, ModelVariant::Mixture).unwrap();
        let priors = Priors::default();
        let mut state = blank_state(&problem);
        let mut rng = crate::stream::from_seed(36);
        for _ in 0..200 {
            update_hyperparams(&mut state, &cfg, &priors, &mut rng).unwrap();
            let ll = tau_sq_loglik(
                &state.tau_sq,
                &state.v,
                ModelVariant::Mixture,
                state.nu,
                state.phi0_sq,
                state.phi1_sq,
            );
            assert!(ll.is_finite());
        }
    }

    fn small_bound_problem(seed: u64, shifted: bool) -> BoundProblem {
        // 10 sets of 20 genes, n = 30; optionally shift set 0 fully by 1.
        let mut rng = crate::stream::from_seed(seed);
        let n_genes = 200;
        let n = 30;
        let mut rows = Vec::with_capacity(n_genes);
        for g in 0..n_genes {
            let mut row: Vec<f64> = (0..n)
                .map(|_| rng.sample::<f64, _>(StandardNormal))
                .collect();
            if shifted && g < 20 {
                for i in 15..30 {
                    row[i] += 1.0;
                }
            }
            rows.push(row);
        }
        let data = ExpressionDataset::new(
            (0..n_genes).map(|g| format!("g{g}")).collect(),
            (0..n).map(|i| format!("s{i}")).collect(),
            (0..n).map(|i| i >= 15).collect(),
            rows,
        )
        .unwrap();
        let sets = GeneSetCollection::new(
            (0..10).map(|s| format!("set{s}")).collect(),
            (0..10).map(|s| (s * 20..(s + 1) * 20).collect()).collect(),
        )
        .unwrap();
        validate_and_bind(data, sets).unwrap()
    }

    #[test]
    fn null_tau_means_sit_below_shifted_tau_means() {
        for seed in 0..3 {
            let null = small_bound_problem(40 + seed, false);
            let shifted = small_bound_problem(40 + seed, true);
            let cfg = McmcConfig::new(600, 100, 7 + seed, ModelVariant::Simple).unwrap();
            let null_trace = run_chain(&null, &cfg).unwrap();
            let shifted_trace = run_chain(&shifted, &cfg).unwrap();
            let mean_tau = |tr: &ChainTrace, s: usize| {
                tr.tau_sq.iter().map(|row| row[s]).sum::<f64>() / tr.retained() as f64
            };
            let shifted_set = mean_tau(&shifted_trace, 0);
            for s in 0..10 {
                assert!(
                    mean_tau(&null_trace, s) < shifted_set,
                    "seed {seed}: null set {s} mean tau^2 not below the shifted set"
                );
            }
        }
    }

    #[test]
    fn interweave_preserves_the_effect_ratios() {
        // The rescaling move multiplies every beta in a set by the same
        // factor, so beta ratios are invariant and tau^2 matches the square
        // of that factor.
        let problem = tiny_problem(vec![vec![0.0, 0.1, 1.0, 1.2], vec![0.3, 0.0, 0.8, 0.9]]);
        let cfg = McmcConfig::new(10, 1, 0, ModelVariant::Mixture).unwrap();
        let mut state = blank_state(&problem);
        state.beta = vec![0.8, 0.4];
        let mut rng = crate::stream::from_seed(61);
        let before_ratio = state.beta[0] / state.beta[1];
        let before_tau = state.tau_sq[0];
        let before_beta = state.beta.clone();
        interweave_tau_sq(&mut state, &problem, &cfg, &mut rng).unwrap();
        let after_ratio = state.beta[0] / state.beta[1];
        assert!((before_ratio - after_ratio).abs() < 1e-12);
        let rescale = (state.tau_sq[0] / before_tau).sqrt();
        for (b, a) in before_beta.iter().zip(&state.beta) {
            assert!((b * rescale - a).abs() < 1e-12);
        }
    }

    #[test]
    fn interweave_matches_conditional_on_a_grid() {
        // With everything else clamped, repeated rescaling draws of tau^2
        // should follow prior(tau^2) * exp(lin*tau - quad*tau^2/2).
        let problem = tiny_problem(vec![vec![0.0, 0.0, 1.0, 1.0], vec![0.0, 0.0, -0.5, -0.5]]);
        let cfg = McmcConfig::new(10, 1, 0, ModelVariant::Mixture).unwrap();
        let mut rng = crate::stream::from_seed(62);
        let mut state = blank_state(&problem);
        state.beta = vec![1.0, -0.5];
        let base = state.clone();

        // Chaining the move keeps beta/tau fixed, so the slice chain has
        // exactly the written conditional as its stationary law.
        let n_draws = 100_000;
        let mut draws = Vec::with_capacity(n_draws);
        for _ in 0..n_draws {
            interweave_tau_sq(&mut state, &problem, &cfg, &mut rng).unwrap();
            draws.push(state.tau_sq[0]);
        }

        // Density on a log grid from the same sufficient statistics.
        let prior = ScaledInvChiSq::new(1.0, 1.0).unwrap();
        let tau0 = base.tau_sq[0].sqrt();
        let n_treat = 2.0;
        let mut lin = 0.0;
        let mut quad = 0.0;
        for slot in 0..2 {
            let bt = base.beta[slot] / tau0;
            let resid = problem.sum_y_treat(slot) - base.alpha[slot] * n_treat;
            lin += bt * resid / base.sigma_sq[slot];
            quad += n_treat * bt * bt / base.sigma_sq[slot];
        }
        let logpdf = |u: f64| {
            let t_sq = u.exp();
            prior.logpdf(t_sq).unwrap() + lin * t_sq.sqrt() - 0.5 * quad * t_sq + u
        };
        let (lo, hi, m) = (-14.0, 6.0, 8000usize);
        let h = (hi - lo) / m as f64;
        let dens: Vec<f64> = (0..=m).map(|i| logpdf(lo + h * i as f64).exp()).collect();
        let total: f64 = dens.iter().sum::<f64>() * h;
        // Equal-mass bins from the grid CDF, then a TV check.
        let bins = 40usize;
        let mut edges = Vec::with_capacity(bins - 1);
        let mut acc = 0.0;
        for (i, d) in dens.iter().enumerate() {
            acc += d * h / total;
            if acc > (edges.len() + 1) as f64 / bins as f64 && edges.len() < bins - 1 {
                edges.push((lo + h * i as f64).exp());
            }
        }
        let mut counts = vec![0usize; bins];
        for &t in &draws {
            counts[edges.partition_point(|&e| e < t)] += 1;
        }
        let tv: f64 = counts
            .iter()
            .map(|&c| (c as f64 / n_draws as f64 - 1.0 / bins as f64).abs())
            .sum::<f64>()
            / 2.0;
        assert!(tv < 0.02, "TV distance {tv}");
    }

    #[test]
    fn collapsed_v_matches_the_marginal_likelihood_ratio() {
        // Independent route: the Bernoulli probability equals the ratio of
        // quadrature marginals of the beta vector under each component.
        let problem = tiny_problem(vec![vec![0.0; 4], vec![0.0; 4]]);
        let mut state = blank_state(&problem);
        state.nu = 1.7;
        state.phi0_sq = 0.05;
        state.phi1_sq = 1.3;
        state.lambda = 0.37;
        state.beta = vec![0.9, -0.4];
        let mut rng = crate::stream::from_seed(63);
        let probs = update_v_collapsed(&mut state, &problem, &mut rng).unwrap();

        let quad_marginal = |scale_sq: f64| {
            let prior = ScaledInvChiSq::new(state.nu, scale_sq).unwrap();
            let (lo, hi, m) = (-20.0f64, 12.0f64, 40_000usize);
            let h = (hi - lo) / m as f64;
            let mut acc = 0.0;
            for i in 0..=m {
                let u = lo + h * i as f64;
                let t_sq = u.exp();
                let mut lp = prior.logpdf(t_sq).unwrap() + u;
                for &b in &state.beta {
                    lp += -0.5 * (2.0 * std::f64::consts::PI * t_sq).ln() - b * b / (2.0 * t_sq);
                }
                acc += lp.exp() * h;
            }
            acc
        };
        let m0 = quad_marginal(state.phi0_sq);
        let m1 = quad_marginal(state.phi0_sq + state.phi1_sq);
        let expected = state.lambda * m1 / ((1.0 - state.lambda) * m0 + state.lambda * m1);
        assert!(
            (probs[0] - expected).abs() < 1e-6,
            "collapsed {} vs quadrature {expected}",
            probs[0]
        );
    }

    #[test]
    fn chain_respects_boundary_config_and_determinism() {
        let problem = small_bound_problem(50, false);
        let cfg = McmcConfig::new(6, 5, 3, ModelVariant::Mixture).unwrap();
        let trace = run_chain(&problem, &cfg).unwrap();
        assert_eq!(trace.retained(), 1);

        let cfg = McmcConfig::new(50, 10, 3, ModelVariant::Mixture).unwrap();
        let a = run_chain(&problem, &cfg).unwrap();
        let b = run_chain(&problem, &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn summarize_counts_and_tails() {
        let problem = tiny_problem(vec![vec![0.0; 4], vec![0.0; 4]]);
        let trace = ChainTrace {
            tau_sq: vec![vec![1.0], vec![2.0], vec![3.0], vec![2.0]],
            v: vec![vec![false], vec![false], vec![true], vec![false]],
            v_prob: vec![vec![0.1], vec![0.2], vec![0.9], vec![0.2]],
            beta: vec![
                vec![1.0, -1.0],
                vec![-1.0, -2.0],
                vec![1.0, -0.5],
                vec![-1.0, -3.0],
            ],
            lambda: vec![0.5; 4],
            nu: vec![1.0; 4],
            phi0_sq: vec![1.0; 4],
            phi1_sq: vec![1.0; 4],
            variant: ModelVariant::Mixture,
            seed: 0,
            rao_blackwell: false,
            diagnostics: ChainDiagnostics::default(),
        };
        let summary = summarize(&trace, &problem).unwrap();
        assert_eq!(summary.sets[0].prob_null, Some(0.75));
        assert_eq!(summary.sets[0].mean_tau_sq, 2.0);
        // Symmetric beta trace: tail probability 2*min(2/4, 2/4) = 1.
        assert_eq!(summary.genes[0].tail_prob, 1.0);
        // One-sided beta trace: tail probability 0.
        assert_eq!(summary.genes[1].tail_prob, 0.0);
        assert_eq!(summary.retained, 4);
    }

    #[test]
    fn summarize_rao_blackwell_uses_probabilities() {
        let problem = tiny_problem(vec![vec![0.0; 4], vec![0.0; 4]]);
        let trace = ChainTrace {
            tau_sq: vec![vec![1.0], vec![1.0]],
            v: vec![vec![false], vec![true]],
            v_prob: vec![vec![0.25], vec![0.75]],
            beta: vec![vec![0.0, 0.0], vec![0.0, 0.0]],
            lambda: vec![0.5; 2],
            nu: vec![1.0; 2],
            phi0_sq: vec![1.0; 2],
            phi1_sq: vec![1.0; 2],
            variant: ModelVariant::Mixture,
            seed: 0,
            rao_blackwell: true,
            diagnostics: ChainDiagnostics::default(),
        };
        let summary = summarize(&trace, &problem).unwrap();
        // mean of (1 - 0.25, 1 - 0.75) = 0.5
        assert_eq!(summary.sets[0].prob_null, Some(0.5));
    }

    #[test]
    fn summarize_rejects_empty_trace() {
        let problem = tiny_problem(vec![vec![0.0; 4], vec![0.0; 4]]);
        let trace = ChainTrace {
            tau_sq: vec![],
            v: vec![],
            v_prob: vec![],
            beta: vec![],
            lambda: vec![],
            nu: vec![],
            phi0_sq: vec![],
            phi1_sq: vec![],
            variant: ModelVariant::Simple,
            seed: 0,
            rao_blackwell: false,
            diagnostics: ChainDiagnostics::default(),
        };
        assert!(matches!(
            summarize(&trace, &problem),
            Err(Error::EmptyTrace)
        ));
    }
}
