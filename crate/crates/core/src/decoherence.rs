//! Position-localization rates Λ (m⁻² s⁻¹) for each decoherence channel.
//!
//! Every channel enters the center-of-mass master equation as a term
//! `−Λ [x, [x, ρ]]`, so rates from independent sources add. The closed forms
//! used here are:
//!
//! ```text
//! blackbody scattering   Λ_sc = 8!·8ζ(9)·c·R⁶ / (9π) · (k_B T_env / ħc)⁹ · Re[(ε−1)/(ε+2)]²
//! blackbody absorption   Λ_ab = 16π⁵·c·R³ / 189     · (k_B T_env / ħc)⁶ · Im[(ε−1)/(ε+2)]
//! blackbody emission     Λ_em = 16π⁵·c·R³ / 189     · (k_B T_int / ħc)⁶ · Im[(ε−1)/(ε+2)]
//! gas collisions         Λ_gas = 8·n·sqrt(2π m_g)·R²·(k_B T_gas)^{3/2} / (3ħ²),  n = P / (k_B T_gas)
//! CSL                    Λ_csl = λ·(M/m₀)² / (4a²) · f(R/a)
//!                        f(x)  = 6/x⁴ · [1 − 2/x² + (1 + 2/x²)·e^{−x²}]
//! ```
//!
//! with ε the thermal-band permittivity of the sphere. The blackbody forms
//! are the long-wavelength (Rayleigh) limit and are flagged when the thermal
//! photon wavelength `2πħc / k_B T` is less than ten radii. The gas form
//! assumes the molecular de Broglie wavelength is much shorter than R.

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::materials::{Environment, Particle, AMU, C_LIGHT, HBAR, K_B};

/// Historical GRW collapse rate, the unit in which detectable rates are reported.
pub const LAMBDA_GRW: f64 = 1.0e-16;

/// Minimum ratio of thermal photon wavelength to radius for the point-particle forms.
pub const BLACKBODY_VALIDITY_FACTOR: f64 = 10.0;

/// Riemann ζ(9).
const ZETA_9: f64 = 1.002_008_392_826_082_2;

/// A condition under which a closed form is being used outside its regime.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelWarning {
    /// Thermal wavelength is not long compared with the radius.
    BlackbodyWavelength { temperature: f64, thermal_wavelength: f64, radius: f64 },
    /// Wave packet is wider than a third of the CSL correlation length, where the
    /// quadratic localization term overestimates CSL.
    CslWidth { t: f64, sigma: f64, correlation_length: f64 },
}

impl fmt::Display for ModelWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelWarning::BlackbodyWavelength { temperature, thermal_wavelength, radius } => write!(
                f,
                "outside model validity: thermal wavelength {thermal_wavelength:e} m at {temperature} K \
                 is less than {BLACKBODY_VALIDITY_FACTOR}x the radius {radius:e} m"
            ),
            ModelWarning::CslWidth { t, sigma, correlation_length } => write!(
                f,
                "outside model validity: sigma {sigma:e} m at t = {t} s exceeds a/3 \
                 (a = {correlation_length:e} m); CSL localization is overestimated"
            ),
        }
    }
}

/// CSL model parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CslParams {
    lambda_rate: f64,
    correlation_length: f64,
    reference_mass: f64,
}

impl CslParams {
    pub fn new(lambda_rate: f64, correlation_length: f64, reference_mass: f64) -> Result<Self> {
        if !(lambda_rate.is_finite() && lambda_rate >= 0.0) {
            return Err(Error::domain(format!("CSL rate must be >= 0, got {lambda_rate}")));
        }
        if !(correlation_length.is_finite() && correlation_length > 0.0) {
            return Err(Error::domain(format!("CSL correlation length must be > 0, got {correlation_length}")));
        }
        if !(reference_mass.is_finite() && reference_mass > 0.0) {
            return Err(Error::domain(format!("CSL reference mass must be > 0, got {reference_mass}")));
        }
        Ok(CslParams { lambda_rate, correlation_length, reference_mass })
    }

    /// Rate λ and length a with the nucleon reference mass.
    pub fn with_amu(lambda_rate: f64, correlation_length: f64) -> Result<Self> {
        CslParams::new(lambda_rate, correlation_length, AMU)
    }

    /// λ = 10⁻¹³ Hz, a = 100 nm.
    pub fn reference() -> Self {
        CslParams::with_amu(1.0e-13, 100e-9).expect("reference CSL parameters are valid")
    }

    pub fn lambda_rate(&self) -> f64 {
        self.lambda_rate
    }

    pub fn correlation_length(&self) -> f64 {
        self.correlation_length
    }

    pub fn reference_mass(&self) -> f64 {
        self.reference_mass
    }

    pub fn with_lambda(&self, lambda_rate: f64) -> Result<Self> {
        CslParams::new(lambda_rate, self.correlation_length, self.reference_mass)
    }
}

/// Which channels contribute to the budget.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ChannelToggles {
    pub blackbody: bool,
    pub gas: bool,
    pub csl: bool,
}

impl ChannelToggles {
    pub const ALL: ChannelToggles = ChannelToggles { blackbody: true, gas: true, csl: true };
    pub const NONE: ChannelToggles = ChannelToggles { blackbody: false, gas: false, csl: false };
    /// Standard decoherence only (blackbody and gas).
    pub const STANDARD: ChannelToggles = ChannelToggles { blackbody: true, gas: true, csl: false };
}

impl Default for ChannelToggles {
    fn default() -> Self {
        ChannelToggles::ALL
    }
}

/// Blackbody localization rates with any validity warnings.
#[derive(Debug, Clone, PartialEq)]
pub struct BlackbodyRates {
    pub scattering: f64,
    pub absorption: f64,
    pub emission: f64,
    pub warnings: Vec<ModelWarning>,
}

impl BlackbodyRates {
    pub fn is_valid(&self) -> bool {
        self.warnings.is_empty()
    }

    pub fn sum(&self) -> f64 {
        self.scattering + self.absorption + self.emission
    }
}

/// Per-channel localization rates and their total.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DecoherenceBudget {
    pub blackbody_scattering: f64,
    pub blackbody_absorption: f64,
    pub blackbody_emission: f64,
    pub gas_collisions: f64,
    pub csl: f64,
    pub total: f64,
    pub warnings: Vec<ModelWarning>,
}

impl DecoherenceBudget {
    /// `(name, rate)` rows in a fixed order, ending with the total.
    pub fn channels(&self) -> [(&'static str, f64); 6] {
        [
            ("blackbody_scattering", self.blackbody_scattering),
            ("blackbody_absorption", self.blackbody_absorption),
            ("blackbody_emission", self.blackbody_emission),
            ("gas_collisions", self.gas_collisions),
            ("csl", self.csl),
            ("total", self.total),
        ]
    }

    /// Standard-physics part of the total (everything except CSL).
    pub fn standard_total(&self) -> f64 {
        self.blackbody_scattering + self.blackbody_absorption + self.blackbody_emission + self.gas_collisions
    }
}

/// Clausius-Mossotti factor (ε−1)/(ε+2).
fn polarizability_factor(eps: Complex64) -> Complex64 {
    (eps - 1.0) / (eps + 2.0)
}

/// Thermal photon wavelength `2πħc / k_B T`, m. Infinite at T = 0.
pub fn thermal_wavelength(temperature: f64) -> f64 {
    if temperature == 0.0 {
        f64::INFINITY
    } else {
        2.0 * PI * HBAR * C_LIGHT / (K_B * temperature)
    }
}

/// Thermal wavenumber `k_B T / ħc`, m⁻¹.
fn thermal_wavenumber(temperature: f64) -> f64 {
    K_B * temperature / (HBAR * C_LIGHT)
}

fn scattering_rate(radius: f64, alpha: Complex64, temperature: f64) -> f64 {
    const FACT_8: f64 = 40_320.0;
    let prefactor = FACT_8 * 8.0 * ZETA_9 * C_LIGHT * radius.powi(6) / (9.0 * PI);
    prefactor * thermal_wavenumber(temperature).powi(9) * alpha.re * alpha.re
}

fn absorption_emission_rate(radius: f64, alpha: Complex64, temperature: f64) -> f64 {
    let prefactor = 16.0 * PI.powi(5) * C_LIGHT * radius.powi(3) / 189.0;
    prefactor * thermal_wavenumber(temperature).powi(6) * alpha.im
}

/// Blackbody scattering, absorption and emission rates in the point-particle limit.
pub fn lambda_blackbody(particle: &Particle, env: &Environment) -> BlackbodyRates {
    let radius = particle.radius();
    let alpha = polarizability_factor(particle.thermal_permittivity());
    let t_env = env.env_temperature();
    let t_int = particle.internal_temperature();

    let mut warnings = Vec::new();
    let mut check = |temperature: f64| {
        let wl = thermal_wavelength(temperature);
        if wl < BLACKBODY_VALIDITY_FACTOR * radius {
            warnings.push(ModelWarning::BlackbodyWavelength { temperature, thermal_wavelength: wl, radius });
        }
    };
    check(t_env);
    if t_int != t_env {
        check(t_int);
    }

    BlackbodyRates {
        scattering: scattering_rate(radius, alpha, t_env),
        absorption: absorption_emission_rate(radius, alpha, t_env),
        emission: absorption_emission_rate(radius, alpha, t_int),
        warnings,
    }
}

/// Localization rate from diffuse collisions with residual gas molecules.
pub fn lambda_gas(particle: &Particle, env: &Environment) -> Result<f64> {
    let pressure = env.gas_pressure();
    if pressure == 0.0 {
        return Ok(0.0);
    }
    let m_gas = env.gas_particle_mass();
    let t_gas = env.gas_temperature();
    if m_gas <= 0.0 || t_gas <= 0.0 {
        return Err(Error::domain(format!(
            "gas mass and temperature must be positive at nonzero pressure (m = {m_gas}, T = {t_gas})"
        )));
    }
    let kt = K_B * t_gas;
    let density = pressure / kt;
    let r = particle.radius();
    Ok(8.0 * density * (2.0 * PI * m_gas).sqrt() * r * r * kt.powf(1.5) / (3.0 * HBAR * HBAR))
}

/// Geometry factor of a homogeneous sphere of radius `x·a` relative to a point mass.
///
/// Equals 1 at `x = 0` and falls off as `6/x⁴` for `x ≫ 1`.
pub fn csl_sphere_factor(x: f64) -> f64 {
    if x < 0.5 {
        // f = 6 Σ_{j≥2} (−1)^j (j−1)/(j+1)! · y^{j−2},  y = x²
        let y = x * x;
        let mut sum = 0.0;
        let mut y_pow = 1.0;
        let mut fact = 6.0; // (j+1)! at j = 2
        for j in 2..20 {
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            sum += sign * (j as f64 - 1.0) / fact * y_pow;
            y_pow *= y;
            fact *= j as f64 + 2.0;
        }
        6.0 * sum
    } else {
        let y = x * x;
        6.0 / (y * y) * (1.0 - 2.0 / y + (1.0 + 2.0 / y) * (-y).exp())
    }
}

/// CSL localization rate of a homogeneous sphere.
pub fn lambda_csl(particle: &Particle, csl: &CslParams) -> f64 {
    lambda_csl_per_rate(particle, csl) * csl.lambda_rate()
}

/// Λ_CSL per unit collapse rate, m⁻² s⁻¹ Hz⁻¹. Λ_CSL is linear in λ.
pub fn lambda_csl_per_rate(particle: &Particle, csl: &CslParams) -> f64 {
    let a = csl.correlation_length();
    let n = particle.mass() / csl.reference_mass();
    n * n / (4.0 * a * a) * csl_sphere_factor(particle.radius() / a)
}

/// Assemble the decoherence budget for the selected channels.
pub fn total_budget(
    particle: &Particle,
    env: &Environment,
    csl: &CslParams,
    toggles: ChannelToggles,
) -> Result<DecoherenceBudget> {
    let mut budget = DecoherenceBudget::default();
    if toggles.blackbody {
        let bb = lambda_blackbody(particle, env);
        budget.blackbody_scattering = bb.scattering;
        budget.blackbody_absorption = bb.absorption;
        budget.blackbody_emission = bb.emission;
        budget.warnings.extend(bb.warnings);
    }
    if toggles.gas {
        budget.gas_collisions = lambda_gas(particle, env)?;
    }
    if toggles.csl {
        budget.csl = lambda_csl(particle, csl);
    }
    budget.total = budget.standard_total() + budget.csl;
    Ok(budget)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::materials::{Preset, N2_MASS};

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    fn env_at(t_env: f64, pressure: f64) -> Environment {
        Environment::new(t_env, pressure, N2_MASS, t_env.max(1.0), Preset::Custom).unwrap()
    }

    #[test]
    fn blackbody_reference_goldens() {
        // 30-digit evaluation of the closed forms above, R = 120 nm, ε = 2.1 + 0.6i
        let p = Particle::reference();
        let bb = lambda_blackbody(&p, &env_at(300.0, 0.0));
        assert!(rel(bb.scattering, 9.360_177_010_561_553e15) < 1e-9);
        assert!(rel(bb.absorption, 7.114_104_412_067_935e18) < 1e-9);
        assert!(rel(bb.emission, 3.997_170_325_353_945e19) < 1e-9);
        assert!(bb.is_valid());
    }

    #[test]
    fn blackbody_cold_limits() {
        let p = Particle::reference();
        let bb = lambda_blackbody(&p, &env_at(0.0, 0.0));
        assert_eq!(bb.scattering, 0.0);
        assert_eq!(bb.absorption, 0.0);
        assert!(bb.emission > 0.0);
        let cold = p.with_internal_temperature(0.0).unwrap();
        assert_eq!(lambda_blackbody(&cold, &env_at(300.0, 0.0)).emission, 0.0);
    }

    #[test]
    fn blackbody_temperature_exponents() {
        let p = Particle::reference();
        let a = lambda_blackbody(&p, &env_at(150.0, 0.0));
        let b = lambda_blackbody(&p, &env_at(300.0, 0.0));
        assert!(rel(b.scattering / a.scattering, 512.0) < 1e-6);
        assert!(rel(b.absorption / a.absorption, 64.0) < 1e-6);
        let hot = p.with_internal_temperature(800.0).unwrap();
        let c = lambda_blackbody(&hot, &env_at(300.0, 0.0));
        assert!(rel(c.emission / b.emission, 64.0) < 1e-6);
    }

    #[test]
    fn blackbody_flags_large_spheres() {
        let big = Particle::fused_silica(10e-6, 400.0).unwrap();
        let bb = lambda_blackbody(&big, &env_at(300.0, 0.0));
        assert!(!bb.is_valid());
        assert_eq!(bb.warnings.len(), 2);
        assert!(bb.scattering.is_finite() && bb.scattering > 0.0);
        assert!(bb.warnings[0].to_string().contains("outside model validity"));
    }

    #[test]
    fn gas_rate_reference_and_linearity() {
        let p = Particle::reference();
        let ground = Environment::ground();
        let g = lambda_gas(&p, &ground).unwrap();
        assert!(rel(g, 1.201_087_563_176_177_7e27) < 1e-9);
        let doubled = ground.with_gas_pressure(2e-5).unwrap();
        assert!(rel(lambda_gas(&p, &doubled).unwrap(), 2.0 * g) < 1e-14);
        assert_eq!(lambda_gas(&p, &ground.with_gas_pressure(0.0).unwrap()).unwrap(), 0.0);
        let space = lambda_gas(&p, &Environment::space()).unwrap();
        assert!(g / space >= 1e7);
    }

    #[test]
    fn gas_rejects_zero_temperature_at_pressure() {
        let p = Particle::reference();
        let env = Environment::new(300.0, 1e-5, N2_MASS, 0.0, Preset::Custom).unwrap();
        assert!(lambda_gas(&p, &env).is_err());
    }

    #[test]
    fn csl_factor_limits_and_branches() {
        assert_eq!(csl_sphere_factor(0.0), 1.0);
        // series and closed form agree where they meet
        let x: f64 = 0.5;
        let y = x * x;
        let closed = 6.0 / (y * y) * (1.0 - 2.0 / y + (1.0 + 2.0 / y) * (-y).exp());
        assert!(rel(csl_sphere_factor(0.499_999_999), closed) < 1e-8);
        assert!(rel(csl_sphere_factor(1.2), 0.512_457_179_676_446) < 1e-13);
        assert!(rel(csl_sphere_factor(5.0), 0.008_832_000_000_144) < 1e-12);
        assert!(rel(csl_sphere_factor(100.0), 6.0 / 1e8 * (1.0 - 2e-4)) < 1e-12);
    }

    #[test]
    fn csl_point_limit_and_zero_rate() {
        let csl = CslParams::reference();
        let tiny = Particle::fused_silica(1e-12, 300.0).unwrap();
        let n = tiny.mass() / AMU;
        let point = 1e-13 * n * n / (4.0 * 1e-14);
        assert!(rel(lambda_csl(&tiny, &csl), point) < 1e-9);
        assert_eq!(lambda_csl(&Particle::reference(), &csl.with_lambda(0.0).unwrap()), 0.0);
    }

    #[test]
    fn csl_quadratic_in_mass() {
        let csl = CslParams::reference();
        let p = Particle::reference();
        let heavy = p.with_density(4400.0).unwrap();
        assert!(rel(lambda_csl(&heavy, &csl), 4.0 * lambda_csl(&p, &csl)) < 1e-9);
    }

    #[test]
    fn budget_toggles() {
        let p = Particle::reference();
        let env = Environment::ground();
        let csl = CslParams::reference();
        let none = total_budget(&p, &env, &csl, ChannelToggles::NONE).unwrap();
        assert_eq!(none.total, 0.0);
        let bb_only = ChannelToggles { blackbody: true, gas: false, csl: false };
        let b = total_budget(&p, &env, &csl, bb_only).unwrap();
        assert_eq!(b.gas_collisions, 0.0);
        assert_eq!(b.total, lambda_blackbody(&p, &env).sum());
        let csl_only = ChannelToggles { blackbody: false, gas: false, csl: true };
        let c = total_budget(&p, &env, &csl, csl_only).unwrap();
        assert_eq!(c.total, c.csl);
        let all = total_budget(&p, &env, &csl, ChannelToggles::ALL).unwrap();
        let sum: f64 = all.channels()[..5].iter().map(|(_, v)| v).sum();
        assert_eq!(all.total, sum);
    }

    #[test]
    fn csl_params_validation() {
        assert!(CslParams::with_amu(-1.0, 1e-7).is_err());
        assert!(CslParams::with_amu(1e-13, 0.0).is_err());
        assert!(CslParams::new(1e-13, 1e-7, 0.0).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn budget_entries_finite_non_negative(
                r in 1e-9f64..1e-6,
                t_env in 0.0f64..500.0,
                t_int in 0.0f64..1000.0,
                p in 0.0f64..1e-3,
                lam in 0.0f64..1e-6,
                a in 1e-8f64..1e-5,
            ) {
                let particle = Particle::fused_silica(r, t_int).unwrap();
                let env = Environment::new(t_env, p, N2_MASS, t_env.max(1.0), Preset::Custom).unwrap();
                let csl = CslParams::with_amu(lam, a).unwrap();
                let b = total_budget(&particle, &env, &csl, ChannelToggles::ALL).unwrap();
                for (_, v) in b.channels() {
                    prop_assert!(v.is_finite() && v >= 0.0);
                }
            }

            #[test]
            fn csl_monotone_in_rate(l1 in 0.0f64..1e-8, l2 in 0.0f64..1e-8) {
                let p = Particle::reference();
                let (lo, hi) = if l1 <= l2 { (l1, l2) } else { (l2, l1) };
                let a = lambda_csl(&p, &CslParams::with_amu(lo, 1e-7).unwrap());
                let b = lambda_csl(&p, &CslParams::with_amu(hi, 1e-7).unwrap());
                prop_assert!(a <= b);
            }

            #[test]
            fn gas_monotone_in_pressure(p1 in 0.0f64..1e-2, p2 in 0.0f64..1e-2) {
                let particle = Particle::reference();
                let (lo, hi) = if p1 <= p2 { (p1, p2) } else { (p2, p1) };
                let a = lambda_gas(&particle, &env_at(300.0, lo)).unwrap();
                let b = lambda_gas(&particle, &env_at(300.0, hi)).unwrap();
                prop_assert!(a <= b);
            }

            #[test]
            fn csl_factor_in_unit_interval(x in 0.0f64..50.0) {
                let f = csl_sphere_factor(x);
                prop_assert!(f > 0.0 && f <= 1.0);
            }
        }
    }
}
