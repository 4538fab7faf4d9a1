//! Monte-Carlo simulation of the measurement cycle.
//!
//! Each run loads and cools a particle (summarized by the trap occupancy),
//! releases it for a time `t`, measures its position along the cavity axis
//! and recaptures it. Runs are independent, so a campaign is a set of
//! normal draws per grid time with the model variance plus noise terms.
//! Run `(i, j)` at grid time `i` draws from its own ChaCha stream derived from
//! `(seed, i, j)`, which makes serial and parallel execution identical.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::decoherence::{total_budget, ChannelToggles, CslParams, DecoherenceBudget};
use crate::dynamics::{evolve_free, initial_state, validate_time_grid, GaussianState};
use crate::error::{Error, Result};
use crate::materials::{Environment, Particle, DEFAULT_TRAP_FREQUENCY};

/// Physical model of one experiment: particle, surroundings and decoherence channels.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub particle: Particle,
    pub env: Environment,
    pub csl: CslParams,
    pub toggles: ChannelToggles,
    /// Trap angular frequency before release, rad/s.
    pub trap_frequency: f64,
}

impl Scenario {
    /// 120 nm fused silica at 400 K in the given environment, CSL at
    /// λ = 10⁻¹³ Hz and a = 100 nm, default trap.
    pub fn reference(env: Environment, toggles: ChannelToggles) -> Self {
        Scenario {
            particle: Particle::reference(),
            env,
            csl: CslParams::reference(),
            toggles,
            trap_frequency: DEFAULT_TRAP_FREQUENCY,
        }
    }

    pub fn budget(&self) -> Result<DecoherenceBudget> {
        total_budget(&self.particle, &self.env, &self.csl, self.toggles)
    }

    pub fn initial_state(&self, occupancy: f64) -> Result<GaussianState> {
        initial_state(&self.particle, self.trap_frequency, occupancy)
    }

    /// Model position variance `⟨x²⟩(t)` at every grid time.
    pub fn x_vars(&self, occupancy: f64, times: &[f64]) -> Result<Vec<f64>> {
        let lambda = self.budget()?.total;
        let start = self.initial_state(occupancy)?;
        let mass = self.particle.mass();
        times.iter().map(|&t| evolve_free(&start, mass, lambda, t).map(|s| s.x_var())).collect()
    }

    /// Same scenario with CSL switched on at rate `lambda_rate`.
    pub fn with_csl_rate(&self, lambda_rate: f64) -> Result<Self> {
        let mut s = self.clone();
        s.csl = self.csl.with_lambda(lambda_rate)?;
        s.toggles.csl = true;
        Ok(s)
    }

    /// Same scenario without the CSL channel.
    pub fn standard(&self) -> Self {
        let mut s = self.clone();
        s.toggles.csl = false;
        s
    }
}

/// Whether independent runs may be spread over threads.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Serial,
    #[default]
    Parallel,
}

/// Readout noise of the `realistic` error model: nanometre-level cavity
/// position detection, m.
pub const REALISTIC_MEASUREMENT_NOISE: f64 = 1.0e-9;
/// Residual release-velocity spread of the `realistic` error model, m/s.
pub const REALISTIC_DRIFT_VELOCITY_STD: f64 = 1.0e-10;
/// Mean phonon number at release in the `realistic` error model.
pub const REALISTIC_OCCUPANCY: f64 = 1.0;

/// Measurement plan for a campaign.
#[derive(Debug, Clone, PartialEq)]
pub struct CampaignConfig {
    /// Free-expansion times, s.
    pub time_grid: Vec<f64>,
    /// Repetitions N at every grid time.
    pub runs_per_time: usize,
    /// Position-readout standard deviation, m.
    pub measurement_noise: f64,
    /// Mean phonon number at release.
    pub occupancy: f64,
    pub rng_seed: u64,
    /// Run-to-run spread of the residual center-of-mass velocity, m/s.
    pub drift_velocity_std: f64,
}

impl CampaignConfig {
    /// Ideal campaign: no readout noise, no drift, ground-state preparation.
    pub fn ideal(time_grid: Vec<f64>, runs_per_time: usize, rng_seed: u64) -> Self {
        CampaignConfig {
            time_grid,
            runs_per_time,
            measurement_noise: 0.0,
            occupancy: 0.0,
            rng_seed,
            drift_velocity_std: 0.0,
        }
    }

    /// Campaign with the non-ideal error model: readout noise, release drift
    /// and one phonon of residual occupancy.
    pub fn realistic(time_grid: Vec<f64>, runs_per_time: usize, rng_seed: u64) -> Self {
        CampaignConfig {
            measurement_noise: REALISTIC_MEASUREMENT_NOISE,
            occupancy: REALISTIC_OCCUPANCY,
            drift_velocity_std: REALISTIC_DRIFT_VELOCITY_STD,
            ..Self::ideal(time_grid, runs_per_time, rng_seed)
        }
    }

    pub fn validate(&self) -> Result<()> {
        validate_time_grid(&self.time_grid)?;
        if self.runs_per_time < 2 {
            return Err(Error::domain(format!(
                "at least 2 runs per time are needed to estimate a width, got {}",
                self.runs_per_time
            )));
        }
        if self.runs_per_time > u32::MAX as usize || self.time_grid.len() > u32::MAX as usize {
            return Err(Error::domain("campaign too large for per-run random streams"));
        }
        for (name, v) in [
            ("measurement noise", self.measurement_noise),
            ("occupancy", self.occupancy),
            ("drift velocity spread", self.drift_velocity_std),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::domain(format!("{name} must be >= 0, got {v}")));
            }
        }
        Ok(())
    }

    /// Variance added on top of the quantum state by drift and readout noise.
    pub fn noise_variance(&self, t: f64) -> f64 {
        let drift = self.drift_velocity_std * t;
        drift * drift + self.measurement_noise * self.measurement_noise
    }
}

/// Positions measured at one grid time.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSamples {
    pub t: f64,
    pub positions: Vec<f64>,
    /// Model width `sqrt(⟨x²⟩(t))` of the quantum state, without noise terms.
    pub true_sigma: f64,
}

/// Raw output of a campaign, one entry per grid time.
#[derive(Debug, Clone, PartialEq)]
pub struct PositionSamples {
    pub times: Vec<TimeSamples>,
}

/// Width estimate at one grid time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WidthEstimate {
    pub t: f64,
    pub sigma_hat: f64,
    pub standard_error: f64,
    pub sample_count: usize,
}

fn run_rng(seed: u64, time_index: usize, run_index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((time_index as u64) << 32) | run_index as u64);
    rng
}

/// Standard-normal deviates for every run at one grid time.
pub(crate) fn standard_draws(seed: u64, time_index: usize, runs: usize, execution: Execution) -> Vec<f64> {
    let draw = |j: usize| -> f64 { StandardNormal.sample(&mut run_rng(seed, time_index, j)) };
    match execution {
        Execution::Serial => (0..runs).map(draw).collect(),
        Execution::Parallel => (0..runs).into_par_iter().map(draw).collect(),
    }
}

/// Simulate a full campaign in parallel.
pub fn run_campaign(config: &CampaignConfig, scenario: &Scenario) -> Result<PositionSamples> {
    run_campaign_with(config, scenario, Execution::Parallel)
}

/// Simulate a full campaign with the chosen execution strategy.
pub fn run_campaign_with(
    config: &CampaignConfig,
    scenario: &Scenario,
    execution: Execution,
) -> Result<PositionSamples> {
    config.validate()?;
    let x_vars = scenario.x_vars(config.occupancy, &config.time_grid)?;
    let times = config
        .time_grid
        .iter()
        .zip(&x_vars)
        .enumerate()
        .map(|(i, (&t, &x_var))| {
            let sd = (x_var + config.noise_variance(t)).sqrt();
            let positions = standard_draws(config.rng_seed, i, config.runs_per_time, execution)
                .into_iter()
                .map(|z| sd * z)
                .collect();
            TimeSamples { t, positions, true_sigma: x_var.sqrt() }
        })
        .collect();
    Ok(PositionSamples { times })
}

/// Unbiased sample variance (two-pass).
pub fn sample_variance(xs: &[f64]) -> Result<f64> {
    if xs.len() < 2 {
        return Err(Error::domain(format!("need at least 2 samples, got {}", xs.len())));
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    Ok(xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0))
}

/// Sample width and its Gaussian-theory standard error.
pub fn estimate_width(t: f64, positions: &[f64]) -> Result<WidthEstimate> {
    let var = sample_variance(positions)?;
    let n = positions.len();
    let sigma_hat = var.sqrt();
    Ok(WidthEstimate {
        t,
        sigma_hat,
        standard_error: sigma_hat * (1.0 / (2.0 * (n as f64 - 1.0))).sqrt(),
        sample_count: n,
    })
}

/// Width estimates for every grid time of a campaign.
pub fn estimate_widths(samples: &PositionSamples) -> Result<Vec<WidthEstimate>> {
    samples.times.iter().map(|s| estimate_width(s.t, &s.positions)).collect()
}

/// Run a campaign and reduce it to width estimates with error bars.
pub fn campaign_curve(config: &CampaignConfig, scenario: &Scenario) -> Result<Vec<WidthEstimate>> {
    estimate_widths(&run_campaign(config, scenario)?)
}
