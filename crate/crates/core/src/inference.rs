//! Minimum detectable CSL collapse rate.
//!
//! CSL adds `(2/3)·ħ²·Λ_CSL(λ)·t³/m²` to the position variance, linearly in
//! λ. A campaign with N runs per grid time measures the variance at time t
//! with standard error `v(t)·sqrt(2/(N−1))`, where `v(t)` is the variance
//! expected from standard physics plus drift and readout noise. Detection
//! means the excess reaches `z` standard errors, either at the single most
//! sensitive time or with all times combined.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::decoherence::{lambda_csl_per_rate, CslParams, LAMBDA_GRW};
use crate::error::{Error, Result};
use crate::materials::{Particle, HBAR};
use crate::protocol::{sample_variance, standard_draws, CampaignConfig, Execution, Scenario};

/// How per-time z-scores are combined into one detection statistic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Aggregation {
    /// Test only at the grid time with the highest sensitivity.
    #[default]
    BestTime,
    /// Combine all grid times: the per-time z-scores weighted by their
    /// expected signal-to-noise, so the squared expected statistic is the
    /// sum of the squared per-time expectations.
    ChiSquareSum,
}

impl Aggregation {
    pub fn as_str(&self) -> &'static str {
        match self {
            Aggregation::BestTime => "best-time",
            Aggregation::ChiSquareSum => "chi-square-sum",
        }
    }
}

impl fmt::Display for Aggregation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Aggregation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "best-time" => Ok(Aggregation::BestTime),
            "chi-square-sum" => Ok(Aggregation::ChiSquareSum),
            other => {
                Err(Error::Config(format!("unknown aggregation `{other}` (expected best-time or chi-square-sum)")))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectionConfig {
    /// Detection threshold in standard errors.
    pub confidence_z: f64,
    pub aggregation: Aggregation,
}

impl Default for DetectionConfig {
    fn default() -> Self {
        DetectionConfig { confidence_z: 3.0, aggregation: Aggregation::BestTime }
    }
}

impl DetectionConfig {
    pub fn validate(&self) -> Result<()> {
        if self.confidence_z.is_finite() && self.confidence_z > 0.0 {
            Ok(())
        } else {
            Err(Error::domain(format!("confidence z must be > 0, got {}", self.confidence_z)))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectionResult {
    pub lambda_min: f64,
    pub lambda_min_grw: f64,
    /// Grid time with the highest single-time sensitivity, s.
    pub best_time: f64,
    pub n_per_time: usize,
}

impl DetectionResult {
    fn new(lambda_min: f64, best_time: f64, n_per_time: usize) -> Self {
        DetectionResult { lambda_min, lambda_min_grw: lambda_min / LAMBDA_GRW, best_time, n_per_time }
    }
}

/// CSL-induced addition to `⟨x²⟩` after free expansion for `t` seconds at rate `lambda_rate`.
/// Only the geometry of `csl` (a, m₀) is used.
pub fn variance_excess(lambda_rate: f64, t: f64, particle: &Particle, csl: &CslParams) -> f64 {
    excess_per_rate(t, particle, csl) * lambda_rate
}

/// ∂(variance excess)/∂λ, m²/Hz.
pub fn excess_per_rate(t: f64, particle: &Particle, csl: &CslParams) -> f64 {
    let m = particle.mass();
    (2.0 / 3.0) * HBAR * HBAR * lambda_csl_per_rate(particle, csl) * t.powi(3) / (m * m)
}

/// Per grid time: null-model variance, its standard error and the excess per unit λ.
#[derive(Debug, Clone, Copy, PartialEq)]
struct TimeSensitivity {
    /// Position in the campaign grid.
    index: usize,
    t: f64,
    null_variance: f64,
    standard_error: f64,
    slope: f64,
}

impl TimeSensitivity {
    /// λ at which the expected excess equals `z` standard errors.
    fn threshold(&self, z: f64) -> f64 {
        z * self.standard_error / self.slope
    }

    /// Expected signal-to-noise per unit λ.
    fn weight(&self) -> f64 {
        self.slope / self.standard_error
    }
}

fn sensitivities(config: &CampaignConfig, scenario: &Scenario) -> Result<Vec<TimeSensitivity>> {
    config.validate()?;
    let standard = scenario.standard();
    let x_vars = standard.x_vars(config.occupancy, &config.time_grid)?;
    let se_factor = (2.0 / (config.runs_per_time as f64 - 1.0)).sqrt();
    let out: Vec<TimeSensitivity> = config
        .time_grid
        .iter()
        .zip(x_vars)
        .enumerate()
        .map(|(index, (&t, x_var))| {
            let null_variance = x_var + config.noise_variance(t);
            TimeSensitivity {
                index,
                t,
                null_variance,
                standard_error: null_variance * se_factor,
                slope: excess_per_rate(t, &scenario.particle, &scenario.csl),
            }
        })
        .filter(|s| s.slope > 0.0)
        .collect();
    if out.is_empty() {
        return Err(Error::domain("time grid has no sensitivity to CSL (all times are zero)"));
    }
    Ok(out)
}

fn best(sens: &[TimeSensitivity], z: f64) -> TimeSensitivity {
    *sens.iter().min_by(|a, b| a.threshold(z).total_cmp(&b.threshold(z))).expect("sensitivities are non-empty")
}

/// Closed-form smallest λ whose variance excess reaches the detection threshold.
///
/// `config.runs_per_time` is N; the scenario's CSL rate and toggle are ignored,
/// only its CSL geometry and standard channels enter.
pub fn min_detectable_lambda(
    config: &CampaignConfig,
    scenario: &Scenario,
    detection: &DetectionConfig,
) -> Result<DetectionResult> {
    detection.validate()?;
    let sens = sensitivities(config, scenario)?;
    let z = detection.confidence_z;
    let best = best(&sens, z);
    let lambda_min = match detection.aggregation {
        Aggregation::BestTime => best.threshold(z),
        Aggregation::ChiSquareSum => z / sens.iter().map(|s| s.weight().powi(2)).sum::<f64>().sqrt(),
    };
    Ok(DetectionResult::new(lambda_min, best.t, config.runs_per_time))
}

/// Bisection on the expected detection statistic, as a check on [`min_detectable_lambda`].
pub fn min_detectable_lambda_bisect(
    config: &CampaignConfig,
    scenario: &Scenario,
    detection: &DetectionConfig,
) -> Result<f64> {
    detection.validate()?;
    let sens = sensitivities(config, scenario)?;
    let z = detection.confidence_z;
    let best = best(&sens, z);
    let particle = &scenario.particle;
    let csl = &scenario.csl;
    let expected_statistic = |lambda: f64| -> f64 {
        let z_at = |s: &TimeSensitivity| variance_excess(lambda, s.t, particle, csl) / s.standard_error;
        match detection.aggregation {
            Aggregation::BestTime => z_at(&best),
            Aggregation::ChiSquareSum => {
                let w2: f64 = sens.iter().map(|s| s.weight().powi(2)).sum();
                sens.iter().map(|s| s.weight() * z_at(s)).sum::<f64>() / w2.sqrt()
            }
        }
    };
    let (mut lo, mut hi) = (1e-40_f64, 1e10_f64);
    if expected_statistic(hi) < z {
        return Err(Error::Numerical("no detectable rate below 1e10 Hz".into()));
    }
    for _ in 0..200 {
        let mid = (lo * hi).sqrt();
        if expected_statistic(mid) >= z {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi / lo < 1.0 + 1e-12 {
            break;
        }
    }
    Ok(hi)
}

/// Outcome of the Monte-Carlo power bisection.
#[derive(Debug, Clone, PartialEq)]
pub struct McBisection {
    /// Smallest λ found with detection power ≥ 50%, Hz.
    pub lambda_min: f64,
    /// `(λ, power)` for every rate evaluated, in evaluation order.
    pub power_curve: Vec<(f64, f64)>,
    /// Detection rate of the paired λ = 0 campaigns.
    pub false_positive_rate: f64,
}

/// Monte-Carlo campaigns sharing seeds, evaluated at any λ.
///
/// Every seed fixes the standard-normal draws of one campaign; the campaign at
/// rate λ scales them by `sqrt(v(t) + excess(λ, t))`, so campaigns at different
/// λ (including λ = 0) are paired through common random numbers. The sample
/// variance of scaled draws is the squared scale times that of the unit draws,
/// which is cached per seed and grid time.
pub struct PowerEstimator<'a> {
    sens: Vec<TimeSensitivity>,
    best_index: usize,
    detection: DetectionConfig,
    scenario: &'a Scenario,
    unit_variances: Vec<Vec<f64>>,
    execution: Execution,
}

impl<'a> PowerEstimator<'a> {
    pub fn new(
        config: &'a CampaignConfig,
        scenario: &'a Scenario,
        detection: &DetectionConfig,
        seeds: &'a [u64],
        execution: Execution,
    ) -> Result<Self> {
        detection.validate()?;
        if seeds.is_empty() {
            return Err(Error::domain("at least one seed is required"));
        }
        let sens = sensitivities(config, scenario)?;
        let z = detection.confidence_z;
        let best_index = (0..sens.len())
            .min_by(|&a, &b| sens[a].threshold(z).total_cmp(&sens[b].threshold(z)))
            .expect("sensitivities are non-empty");
        let needed: Vec<usize> = match detection.aggregation {
            Aggregation::BestTime => vec![best_index],
            Aggregation::ChiSquareSum => (0..sens.len()).collect(),
        };
        let unit = |seed: u64| -> Result<Vec<f64>> {
            let mut v = vec![f64::NAN; sens.len()];
            for &k in &needed {
                let draws = standard_draws(seed, sens[k].index, config.runs_per_time, Execution::Serial);
                v[k] = sample_variance(&draws)?;
            }
            Ok(v)
        };
        let unit_variances = match execution {
            Execution::Serial => seeds.iter().map(|&s| unit(s)).collect::<Result<_>>()?,
            Execution::Parallel => seeds.par_iter().map(|&s| unit(s)).collect::<Result<_>>()?,
        };
        Ok(PowerEstimator { sens, best_index, detection: *detection, scenario, unit_variances, execution })
    }

    fn detects(&self, unit: &[f64], lambda: f64) -> bool {
        let z_score = |k: usize| -> f64 {
            let s = &self.sens[k];
            let var = s.null_variance + variance_excess(lambda, s.t, &self.scenario.particle, &self.scenario.csl);
            (var * unit[k] - s.null_variance) / s.standard_error
        };
        let statistic = match self.detection.aggregation {
            Aggregation::BestTime => z_score(self.best_index),
            Aggregation::ChiSquareSum => {
                let w2: f64 = self.sens.iter().map(|s| s.weight().powi(2)).sum();
                let acc: f64 = (0..self.sens.len()).map(|k| self.sens[k].weight() * z_score(k)).sum();
                acc / w2.sqrt()
            }
        };
        statistic >= self.detection.confidence_z
    }

    /// Fraction of seeded campaigns at rate `lambda` that pass the detection threshold.
    pub fn power(&self, lambda: f64) -> Result<f64> {
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(Error::domain(format!("CSL rate must be finite and non-negative, got {lambda}")));
        }
        let hits = match self.execution {
            Execution::Serial => self.unit_variances.iter().filter(|u| self.detects(u, lambda)).count(),
            Execution::Parallel => self.unit_variances.par_iter().filter(|u| self.detects(u, lambda)).count(),
        };
        Ok(hits as f64 / self.unit_variances.len() as f64)
    }
}

/// Relative bracket width at which the Monte-Carlo bisection stops.
pub const MC_BISECTION_TOLERANCE: f64 = 0.01;

/// Smallest λ with ≥ 50% detection power over the seeded campaigns, by
/// bisection in log λ inside `bracket`.
pub fn bisect_lambda_mc(
    config: &CampaignConfig,
    scenario: &Scenario,
    detection: &DetectionConfig,
    seeds: &[u64],
    bracket: (f64, f64),
    execution: Execution,
) -> Result<McBisection> {
    let estimator = PowerEstimator::new(config, scenario, detection, seeds, execution)?;
    let (mut lo, mut hi) = bracket;
    if !(lo > 0.0 && hi > lo && hi.is_finite()) {
        return Err(Error::domain(format!("invalid bracket [{lo}, {hi}]")));
    }
    let mut power_curve = Vec::new();
    let eval = |lambda: f64, curve: &mut Vec<(f64, f64)>| -> Result<f64> {
        let p = estimator.power(lambda)?;
        curve.push((lambda, p));
        Ok(p)
    };
    let p_lo = eval(lo, &mut power_curve)?;
    let p_hi = eval(hi, &mut power_curve)?;
    if p_lo >= 0.5 || p_hi < 0.5 {
        return Err(Error::NotBracketed {
            message: format!("power {p_lo} at {lo:e} Hz and {p_hi} at {hi:e} Hz"),
            power_curve,
        });
    }
    while hi / lo > 1.0 + MC_BISECTION_TOLERANCE {
        let mid = (lo * hi).sqrt();
        if eval(mid, &mut power_curve)? >= 0.5 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let false_positive_rate = estimator.power(0.0)?;
    Ok(McBisection { lambda_min: hi, power_curve, false_positive_rate })
}
