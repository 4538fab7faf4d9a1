//! Gaussian center-of-mass dynamics during free expansion.
//!
//! For a free particle of mass `m` with a localization term `−Λ[x,[x,ρ]]`
//! the second moments obey
//!
//! ```text
//! d⟨p²⟩/dt        = 2ħ²Λ
//! d(⟨xp+px⟩/2)/dt = ⟨p²⟩/m
//! d⟨x²⟩/dt        = ⟨xp+px⟩/m
//! ```
//!
//! which [`evolve_free`] solves in closed form and [`evolve_numeric`]
//! integrates with a fixed-step RK4 scheme.

use crate::decoherence::{total_budget, ChannelToggles, CslParams, DecoherenceBudget, ModelWarning};
use crate::error::{Error, Result};
use crate::materials::{Environment, Particle, DEFAULT_TRAP_FREQUENCY, HBAR};

/// Relative slack allowed on the Heisenberg bound.
pub const HEISENBERG_TOLERANCE: f64 = 1e-9;

/// Second moments of a centered Gaussian state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianState {
    x_var: f64,
    xp_cov: f64,
    p_var: f64,
}

impl GaussianState {
    /// `x_var` in m², `xp_cov = ⟨xp+px⟩/2` in kg·m²/s, `p_var` in kg²·m²/s².
    pub fn new(x_var: f64, xp_cov: f64, p_var: f64) -> Result<Self> {
        if !(x_var.is_finite() && x_var > 0.0 && p_var.is_finite() && p_var > 0.0 && xp_cov.is_finite()) {
            return Err(Error::domain(format!(
                "variances must be positive and finite (x_var = {x_var}, p_var = {p_var})"
            )));
        }
        let state = GaussianState { x_var, xp_cov, p_var };
        let bound = 0.25 * HBAR * HBAR;
        if state.uncertainty_determinant() < bound * (1.0 - HEISENBERG_TOLERANCE) {
            return Err(Error::domain(format!(
                "state violates the uncertainty bound: det = {:e} < ħ²/4 = {bound:e}",
                state.uncertainty_determinant()
            )));
        }
        Ok(state)
    }

    pub fn x_var(&self) -> f64 {
        self.x_var
    }

    pub fn xp_cov(&self) -> f64 {
        self.xp_cov
    }

    pub fn p_var(&self) -> f64 {
        self.p_var
    }

    /// Wave-packet width `sqrt(⟨x²⟩)`.
    pub fn sigma(&self) -> f64 {
        self.x_var.sqrt()
    }

    /// `⟨x²⟩⟨p²⟩ − cov²`, bounded below by ħ²/4.
    pub fn uncertainty_determinant(&self) -> f64 {
        self.x_var * self.p_var - self.xp_cov * self.xp_cov
    }
}

/// Trap used to prepare the state before release.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Trap {
    /// Angular frequency, rad/s.
    pub frequency: f64,
    /// Mean phonon number at release.
    pub occupancy: f64,
}

impl Default for Trap {
    fn default() -> Self {
        Trap { frequency: DEFAULT_TRAP_FREQUENCY, occupancy: 0.0 }
    }
}

/// Thermal state of the trap with mean occupancy `occupancy`.
pub fn initial_state(particle: &Particle, trap_frequency: f64, occupancy: f64) -> Result<GaussianState> {
    if !(trap_frequency.is_finite() && trap_frequency > 0.0) {
        return Err(Error::domain(format!("trap frequency must be > 0, got {trap_frequency}")));
    }
    if !(occupancy.is_finite() && occupancy >= 0.0) {
        return Err(Error::domain(format!("occupancy must be >= 0, got {occupancy}")));
    }
    let m = particle.mass();
    let thermal = 2.0 * occupancy + 1.0;
    Ok(GaussianState {
        x_var: thermal * HBAR / (2.0 * m * trap_frequency),
        xp_cov: 0.0,
        p_var: thermal * HBAR * m * trap_frequency / 2.0,
    })
}

fn check_evolution_inputs(mass: f64, lambda: f64, t: f64) -> Result<()> {
    if !(mass.is_finite() && mass > 0.0) {
        return Err(Error::domain(format!("mass must be > 0, got {mass}")));
    }
    if !(lambda.is_finite() && lambda >= 0.0) {
        return Err(Error::domain(format!("localization rate must be >= 0, got {lambda}")));
    }
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::domain(format!("evolution time must be >= 0, got {t}")));
    }
    Ok(())
}

/// Closed-form free evolution for time `t` under localization rate `lambda`.
pub fn evolve_free(state: &GaussianState, mass: f64, lambda: f64, t: f64) -> Result<GaussianState> {
    check_evolution_inputs(mass, lambda, t)?;
    let diffusion = HBAR * HBAR * lambda;
    let (x0, c0, p0) = (state.x_var, state.xp_cov, state.p_var);
    Ok(GaussianState {
        p_var: p0 + 2.0 * diffusion * t,
        xp_cov: c0 + p0 * t / mass + diffusion * t * t / mass,
        x_var: x0
            + 2.0 * c0 * t / mass
            + p0 * t * t / (mass * mass)
            + (2.0 / 3.0) * diffusion * t * t * t / (mass * mass),
    })
}

/// Position variance with no decoherence, `⟨x²⟩₀ + 2cov₀·t/m + ⟨p²⟩₀·t²/m²`.
pub fn ballistic_x_var(state: &GaussianState, mass: f64, t: f64) -> f64 {
    state.x_var + 2.0 * state.xp_cov * t / mass + state.p_var * t * t / (mass * mass)
}

/// Classic fixed-step fourth-order Runge-Kutta.
pub fn rk4<const N: usize, F>(f: F, y0: [f64; N], t0: f64, t1: f64, steps: usize) -> [f64; N]
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
{
    let h = (t1 - t0) / steps as f64;
    let axpy = |y: &[f64; N], k: &[f64; N], s: f64| -> [f64; N] {
        let mut out = *y;
        for i in 0..N {
            out[i] += s * k[i];
        }
        out
    };
    let mut y = y0;
    for i in 0..steps {
        let t = t0 + i as f64 * h;
        let k1 = f(t, &y);
        let k2 = f(t + 0.5 * h, &axpy(&y, &k1, 0.5 * h));
        let k3 = f(t + 0.5 * h, &axpy(&y, &k2, 0.5 * h));
        let k4 = f(t + h, &axpy(&y, &k3, h));
        for j in 0..N {
            y[j] += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
        }
    }
    y
}

/// Integrate the moment equations numerically with `step_count` RK4 steps.
pub fn evolve_numeric(
    state: &GaussianState,
    mass: f64,
    lambda: f64,
    t: f64,
    step_count: usize,
) -> Result<GaussianState> {
    check_evolution_inputs(mass, lambda, t)?;
    if step_count == 0 {
        return Err(Error::domain("step count must be at least 1"));
    }
    let diffusion = 2.0 * HBAR * HBAR * lambda;
    // y = [x_var, xp_cov, p_var]
    let rhs = |_t: f64, y: &[f64; 3]| [2.0 * y[1] / mass, y[2] / mass, diffusion];
    let [x_var, xp_cov, p_var] = rk4(rhs, [state.x_var, state.xp_cov, state.p_var], 0.0, t, step_count);
    Ok(GaussianState { x_var, xp_cov, p_var })
}

/// Numerical evolution together with a step-halving convergence check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NumericEvolution {
    pub state: GaussianState,
    /// Relative change in σ between `step_count` and `2·step_count` steps.
    pub halving_change: f64,
    pub converged: bool,
}

/// [`evolve_numeric`] at `step_count` and `2·step_count`, flagging non-convergence
/// when σ moves by more than `tolerance` (relative).
pub fn evolve_numeric_checked(
    state: &GaussianState,
    mass: f64,
    lambda: f64,
    t: f64,
    step_count: usize,
    tolerance: f64,
) -> Result<NumericEvolution> {
    let coarse = evolve_numeric(state, mass, lambda, t, step_count)?;
    let fine = evolve_numeric(state, mass, lambda, t, 2 * step_count)?;
    let halving_change = ((fine.sigma() - coarse.sigma()) / fine.sigma()).abs();
    Ok(NumericEvolution { state: fine, halving_change, converged: halving_change <= tolerance })
}

/// Check that a time grid is non-empty, non-negative and strictly increasing.
pub fn validate_time_grid(times: &[f64]) -> Result<()> {
    if times.is_empty() {
        return Err(Error::domain("time grid is empty"));
    }
    if times.iter().any(|t| !t.is_finite() || *t < 0.0) {
        return Err(Error::domain("time grid must contain finite non-negative times"));
    }
    if times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::domain("time grid must be strictly increasing"));
    }
    Ok(())
}

/// Sampled wave-packet width σ(t).
#[derive(Debug, Clone, PartialEq)]
pub struct ExpansionCurve {
    /// `(t, σ)` pairs in s and m.
    pub samples: Vec<(f64, f64)>,
    pub budget: DecoherenceBudget,
    /// Budget warnings plus any CSL width warning raised along the curve.
    pub warnings: Vec<ModelWarning>,
}

impl ExpansionCurve {
    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        self.samples.iter().map(|s| s.0)
    }

    pub fn sigmas(&self) -> impl Iterator<Item = f64> + '_ {
        self.samples.iter().map(|s| s.1)
    }
}

/// Width of the released wave packet at every grid time.
pub fn expansion_curve(
    particle: &Particle,
    env: &Environment,
    csl: &CslParams,
    toggles: ChannelToggles,
    trap: &Trap,
    time_grid: &[f64],
) -> Result<ExpansionCurve> {
    validate_time_grid(time_grid)?;
    let budget = total_budget(particle, env, csl, toggles)?;
    let start = initial_state(particle, trap.frequency, trap.occupancy)?;
    let mass = particle.mass();

    let mut samples = Vec::with_capacity(time_grid.len());
    let mut warnings = budget.warnings.clone();
    let mut width_flagged = false;
    let a = csl.correlation_length();
    for &t in time_grid {
        let sigma = evolve_free(&start, mass, budget.total, t)?.sigma();
        if budget.csl > 0.0 && !width_flagged && sigma > a / 3.0 {
            warnings.push(ModelWarning::CslWidth { t, sigma, correlation_length: a });
            width_flagged = true;
        }
        samples.push((t, sigma));
    }
    Ok(ExpansionCurve { samples, budget, warnings })
}
