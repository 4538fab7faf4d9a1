//! Pipelines behind the `waxsim` subcommands. Each returns its CSV text plus
//! any model-validity warnings, leaving I/O and exit codes to the binary.

use crate::config::RunConfig;
use crate::csv::{self, FeasibilityRow};
use crate::decoherence::ModelWarning;
use crate::dynamics::expansion_curve;
use crate::error::{Error, Result};
use crate::inference::{bisect_lambda_mc, min_detectable_lambda, DetectionResult};
use crate::materials::drop_distance;
use crate::protocol::{estimate_widths, run_campaign_with, Execution};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct CommandOutput {
    pub csv: String,
    /// Raw per-run positions, when requested.
    pub samples_csv: Option<String>,
    pub warnings: Vec<String>,
}

fn to_string(write: impl FnOnce(&mut Vec<u8>) -> std::io::Result<()>) -> String {
    let mut buf = Vec::new();
    write(&mut buf).expect("writing to a Vec cannot fail");
    String::from_utf8(buf).expect("CSV output is UTF-8")
}

fn warnings(ws: &[ModelWarning]) -> Vec<String> {
    ws.iter().map(|w| w.to_string()).collect()
}

/// Decoherence budget, one row per channel plus the total.
pub fn rates(cfg: &RunConfig) -> Result<CommandOutput> {
    let budget = cfg.scenario()?.budget()?;
    Ok(CommandOutput {
        csv: to_string(|w| csv::write_budget(w, &budget)),
        samples_csv: None,
        warnings: warnings(&budget.warnings),
    })
}

/// Wave-packet width over the configured time grid.
pub fn expand(cfg: &RunConfig) -> Result<CommandOutput> {
    let s = cfg.scenario()?;
    let curve = expansion_curve(&s.particle, &s.env, &s.csl, s.toggles, &cfg.trap, &cfg.times)?;
    Ok(CommandOutput {
        csv: to_string(|w| csv::write_curve(w, &curve)),
        samples_csv: None,
        warnings: warnings(&curve.warnings),
    })
}

/// Seeded measurement campaign reduced to width estimates.
pub fn campaign(cfg: &RunConfig, execution: Execution, dump_samples: bool) -> Result<CommandOutput> {
    let s = cfg.scenario()?;
    let samples = run_campaign_with(&cfg.campaign(), &s, execution)?;
    let estimates = estimate_widths(&samples)?;
    Ok(CommandOutput {
        csv: to_string(|w| csv::write_campaign(w, &estimates)),
        samples_csv: dump_samples.then(|| to_string(|w| csv::write_samples(w, &samples))),
        warnings: warnings(&s.budget()?.warnings),
    })
}

/// Closed-form minimum detectable λ for every N in the sweep. With
/// `check_oracle`, each row is also bisected by Monte-Carlo power and a
/// warning is emitted when the two disagree by more than a factor of 2.
pub fn bound(cfg: &RunConfig, check_oracle: bool, execution: Execution) -> Result<CommandOutput> {
    let s = cfg.scenario()?;
    if cfg.n_sweep.is_empty() {
        return Err(Error::Config("detection.n_sweep is empty".into()));
    }
    let mut rows: Vec<DetectionResult> = Vec::with_capacity(cfg.n_sweep.len());
    let mut notes = warnings(&s.budget()?.warnings);
    let seeds: Vec<u64> = (0..cfg.oracle_seeds as u64).map(|i| cfg.seed.wrapping_add(i)).collect();
    for &n in &cfg.n_sweep {
        let mut campaign = cfg.campaign();
        campaign.runs_per_time = n;
        let row = min_detectable_lambda(&campaign, &s, &cfg.detection)?;
        if check_oracle {
            let bracket = (row.lambda_min / 1e3, row.lambda_min * 1e3);
            let mc = bisect_lambda_mc(&campaign, &s, &cfg.detection, &seeds, bracket, execution)?;
            let ratio = mc.lambda_min / row.lambda_min;
            if !(0.5..=2.0).contains(&ratio) {
                notes.push(format!(
                    "oracle check failed for n_per_time = {n}: Monte-Carlo {:e} Hz vs closed form {:e} Hz (ratio {ratio:.3})",
                    mc.lambda_min, row.lambda_min
                ));
            }
        }
        rows.push(row);
    }
    Ok(CommandOutput { csv: to_string(|w| csv::write_bound(w, &rows)), samples_csv: None, warnings: notes })
}

/// Drop distance at every grid time and whether the configured platform fits it.
pub fn feasibility(cfg: &RunConfig) -> Result<CommandOutput> {
    if cfg.times.is_empty() {
        return Err(Error::Config("campaign.times is empty".into()));
    }
    let rows = cfg
        .times
        .iter()
        .map(|&t| {
            let drop = drop_distance(t)?;
            Ok(FeasibilityRow {
                t,
                drop,
                platform: cfg.platform.clone(),
                platform_height: cfg.platform_height,
                fits: drop <= cfg.platform_height,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CommandOutput { csv: to_string(|w| csv::write_feasibility(w, &rows)), ..Default::default() })
}
