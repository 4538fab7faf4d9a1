//! CSV output. Dot decimal separator, `\n` line endings, floats in shortest
//! round-trip exponent form.

use std::io::{self, Write};

use crate::decoherence::DecoherenceBudget;
use crate::dynamics::ExpansionCurve;
use crate::inference::DetectionResult;
use crate::protocol::{PositionSamples, WidthEstimate};

pub const BUDGET_HEADER: &str = "channel,lambda_m2s";
pub const CURVE_HEADER: &str = "t_s,sigma_m,lambda_total_m2s";
pub const CAMPAIGN_HEADER: &str = "t_s,sigma_hat_m,sigma_err_m,n_samples";
pub const SAMPLES_HEADER: &str = "t_s,run_index,x_m";
pub const BOUND_HEADER: &str = "n_per_time,lambda_min_hz,lambda_min_grw,best_time_s";
pub const FEASIBILITY_HEADER: &str = "t_s,drop_m,platform,platform_height_m,fits";

pub fn write_budget<W: Write>(mut w: W, budget: &DecoherenceBudget) -> io::Result<()> {
    writeln!(w, "{BUDGET_HEADER}")?;
    for (name, rate) in budget.channels() {
        writeln!(w, "{name},{rate:e}")?;
    }
    Ok(())
}

pub fn write_curve<W: Write>(mut w: W, curve: &ExpansionCurve) -> io::Result<()> {
    writeln!(w, "{CURVE_HEADER}")?;
    for &(t, sigma) in &curve.samples {
        writeln!(w, "{t:e},{sigma:e},{:e}", curve.budget.total)?;
    }
    Ok(())
}

pub fn write_campaign<W: Write>(mut w: W, estimates: &[WidthEstimate]) -> io::Result<()> {
    writeln!(w, "{CAMPAIGN_HEADER}")?;
    for e in estimates {
        writeln!(w, "{:e},{:e},{:e},{}", e.t, e.sigma_hat, e.standard_error, e.sample_count)?;
    }
    Ok(())
}

pub fn write_samples<W: Write>(mut w: W, samples: &PositionSamples) -> io::Result<()> {
    writeln!(w, "{SAMPLES_HEADER}")?;
    for ts in &samples.times {
        for (j, x) in ts.positions.iter().enumerate() {
            writeln!(w, "{:e},{j},{x:e}", ts.t)?;
        }
    }
    Ok(())
}

pub fn write_bound<W: Write>(mut w: W, rows: &[DetectionResult]) -> io::Result<()> {
    writeln!(w, "{BOUND_HEADER}")?;
    for r in rows {
        writeln!(w, "{},{:e},{:e},{:e}", r.n_per_time, r.lambda_min, r.lambda_min_grw, r.best_time)?;
    }
    Ok(())
}

/// One row of the drop-distance report.
#[derive(Debug, Clone, PartialEq)]
pub struct FeasibilityRow {
    pub t: f64,
    pub drop: f64,
    pub platform: String,
    pub platform_height: f64,
    pub fits: bool,
}

pub fn write_feasibility<W: Write>(mut w: W, rows: &[FeasibilityRow]) -> io::Result<()> {
    writeln!(w, "{FEASIBILITY_HEADER}")?;
    for r in rows {
        writeln!(w, "{:e},{:e},{},{:e},{}", r.t, r.drop, r.platform, r.platform_height, r.fits)?;
    }
    Ok(())
}
