//! Physical constants, particle and environment descriptions.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Fundamental constants in SI units (CODATA 2018).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Constants {
    /// Reduced Planck constant, J·s.
    pub hbar: f64,
    /// Boltzmann constant, J/K.
    pub k_b: f64,
    /// Speed of light, m/s.
    pub c: f64,
    /// Standard surface gravity, m/s².
    pub g: f64,
    /// CSL reference mass (one atomic mass unit), kg.
    pub m0: f64,
}

pub const CONSTANTS: Constants =
    Constants { hbar: 1.054_571_817e-34, k_b: 1.380_649e-23, c: 299_792_458.0, g: 9.81, m0: AMU };

/// Atomic mass unit, kg.
pub const AMU: f64 = 1.660_539_066_60e-27;

pub const HBAR: f64 = CONSTANTS.hbar;
pub const K_B: f64 = CONSTANTS.k_b;
pub const C_LIGHT: f64 = CONSTANTS.c;

/// Fused-silica defaults.
pub mod fused_silica {
    use num_complex::Complex64;

    pub const DENSITY: f64 = 2200.0;
    /// Relative permittivity at 1064 nm.
    pub const OPTICAL_PERMITTIVITY: Complex64 = Complex64::new(2.1, 0.0);
    /// Effective relative permittivity over the thermal infrared band.
    pub const THERMAL_PERMITTIVITY: Complex64 = Complex64::new(2.1, 0.6);
}

/// Radius of the reference nanosphere, m.
pub const DEFAULT_RADIUS: f64 = 120e-9;
/// Internal temperature of the reference nanosphere, K.
pub const DEFAULT_INTERNAL_TEMPERATURE: f64 = 400.0;
/// Default trap angular frequency, 2π·100 kHz.
pub const DEFAULT_TRAP_FREQUENCY: f64 = 2.0 * PI * 1.0e5;
/// Mass of an N₂ molecule, the default residual gas.
pub const N2_MASS: f64 = 28.0 * AMU;

fn require_positive(name: &str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("{name} must be positive and finite, got {value}")))
    }
}

fn require_non_negative(name: &str, value: f64) -> Result<()> {
    if value.is_finite() && value >= 0.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("{name} must be non-negative and finite, got {value}")))
    }
}

/// Mass of a homogeneous sphere, kg.
pub fn sphere_mass(radius: f64, density: f64) -> Result<f64> {
    require_positive("radius", radius)?;
    require_positive("density", density)?;
    Ok(density * (4.0 / 3.0) * PI * radius.powi(3))
}

/// Position spread of the trap ground state, `sqrt(ħ / 2mω)`.
pub fn ground_state_width(mass: f64, trap_frequency: f64) -> Result<f64> {
    require_positive("mass", mass)?;
    require_positive("trap frequency", trap_frequency)?;
    Ok((HBAR / (2.0 * mass * trap_frequency)).sqrt())
}

/// Distance fallen from rest in surface gravity after `free_fall_time` seconds.
pub fn drop_distance(free_fall_time: f64) -> Result<f64> {
    require_non_negative("free-fall time", free_fall_time)?;
    Ok(0.5 * CONSTANTS.g * free_fall_time * free_fall_time)
}

/// Longest free-fall time that fits inside a drop of `height` metres.
pub fn free_fall_time(height: f64) -> Result<f64> {
    require_non_negative("drop height", height)?;
    Ok((2.0 * height / CONSTANTS.g).sqrt())
}

/// A homogeneous dielectric nanosphere.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Particle {
    radius: f64,
    mass_density: f64,
    mass: f64,
    optical_permittivity: Complex64,
    thermal_permittivity: Complex64,
    internal_temperature: f64,
}

impl Particle {
    pub fn new(
        radius: f64,
        mass_density: f64,
        optical_permittivity: Complex64,
        thermal_permittivity: Complex64,
        internal_temperature: f64,
    ) -> Result<Self> {
        let mass = sphere_mass(radius, mass_density)?;
        require_non_negative("internal temperature", internal_temperature)?;
        for (name, eps) in [("optical", optical_permittivity), ("thermal", thermal_permittivity)] {
            if !(eps.re.is_finite() && eps.im.is_finite()) || eps.im < 0.0 {
                return Err(Error::domain(format!(
                    "{name} permittivity must be finite with non-negative imaginary part, got {eps}"
                )));
            }
        }
        Ok(Particle { radius, mass_density, mass, optical_permittivity, thermal_permittivity, internal_temperature })
    }

    /// Fused-silica sphere of the given radius at the given internal temperature.
    pub fn fused_silica(radius: f64, internal_temperature: f64) -> Result<Self> {
        Particle::new(
            radius,
            fused_silica::DENSITY,
            fused_silica::OPTICAL_PERMITTIVITY,
            fused_silica::THERMAL_PERMITTIVITY,
            internal_temperature,
        )
    }

    /// 120 nm fused-silica sphere held at 400 K.
    pub fn reference() -> Self {
        Particle::fused_silica(DEFAULT_RADIUS, DEFAULT_INTERNAL_TEMPERATURE).expect("reference particle is valid")
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn mass_density(&self) -> f64 {
        self.mass_density
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn optical_permittivity(&self) -> Complex64 {
        self.optical_permittivity
    }

    pub fn thermal_permittivity(&self) -> Complex64 {
        self.thermal_permittivity
    }

    pub fn internal_temperature(&self) -> f64 {
        self.internal_temperature
    }

    pub fn with_internal_temperature(&self, internal_temperature: f64) -> Result<Self> {
        Particle::new(
            self.radius,
            self.mass_density,
            self.optical_permittivity,
            self.thermal_permittivity,
            internal_temperature,
        )
    }

    pub fn with_density(&self, mass_density: f64) -> Result<Self> {
        Particle::new(
            self.radius,
            mass_density,
            self.optical_permittivity,
            self.thermal_permittivity,
            self.internal_temperature,
        )
    }
}

/// Named environment bundles.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    /// Room-temperature laboratory, high vacuum.
    Ground,
    /// Thermally shielded optical bench radiating directly to space.
    Space,
    Custom,
}

impl Preset {
    pub fn as_str(&self) -> &'static str {
        match self {
            Preset::Ground => "ground",
            Preset::Space => "space",
            Preset::Custom => "custom",
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "ground" => Ok(Preset::Ground),
            "space" => Ok(Preset::Space),
            "custom" => Ok(Preset::Custom),
            other => {
                Err(Error::Config(format!("unknown environment preset `{other}` (expected ground, space or custom)")))
            }
        }
    }
}

pub const GROUND_TEMPERATURE: f64 = 300.0;
pub const GROUND_PRESSURE: f64 = 1.0e-5;
pub const SPACE_TEMPERATURE: f64 = 35.0;
pub const SPACE_PRESSURE: f64 = 1.0e-12;
pub const SPACE_TEMPERATURE_RANGE: (f64, f64) = (30.0, 40.0);

/// Thermal and vacuum conditions around the particle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Environment {
    env_temperature: f64,
    gas_pressure: f64,
    gas_particle_mass: f64,
    gas_temperature: f64,
    preset: Preset,
}

impl Environment {
    pub fn new(
        env_temperature: f64,
        gas_pressure: f64,
        gas_particle_mass: f64,
        gas_temperature: f64,
        preset: Preset,
    ) -> Result<Self> {
        require_non_negative("environment temperature", env_temperature)?;
        require_non_negative("gas pressure", gas_pressure)?;
        require_positive("gas particle mass", gas_particle_mass)?;
        require_non_negative("gas temperature", gas_temperature)?;
        match preset {
            Preset::Space => {
                let (lo, hi) = SPACE_TEMPERATURE_RANGE;
                if !(lo..=hi).contains(&env_temperature) || gas_pressure > SPACE_PRESSURE {
                    return Err(Error::domain(format!(
                        "space preset requires {lo}-{hi} K and at most {SPACE_PRESSURE} Pa, \
                         got {env_temperature} K and {gas_pressure} Pa"
                    )));
                }
            }
            Preset::Ground => {
                if env_temperature != GROUND_TEMPERATURE {
                    return Err(Error::domain(format!(
                        "ground preset requires {GROUND_TEMPERATURE} K, got {env_temperature} K"
                    )));
                }
            }
            Preset::Custom => {}
        }
        Ok(Environment { env_temperature, gas_pressure, gas_particle_mass, gas_temperature, preset })
    }

    /// 300 K laboratory at 10⁻⁵ Pa of N₂.
    pub fn ground() -> Self {
        Environment::new(GROUND_TEMPERATURE, GROUND_PRESSURE, N2_MASS, GROUND_TEMPERATURE, Preset::Ground)
            .expect("ground preset is valid")
    }

    /// 35 K shielded bench at 10⁻¹² Pa.
    pub fn space() -> Self {
        Environment::new(SPACE_TEMPERATURE, SPACE_PRESSURE, N2_MASS, SPACE_TEMPERATURE, Preset::Space)
            .expect("space preset is valid")
    }

    pub fn from_preset(preset: Preset) -> Self {
        match preset {
            Preset::Ground => Environment::ground(),
            Preset::Space => Environment::space(),
            Preset::Custom => {
                let g = Environment::ground();
                Environment { preset: Preset::Custom, ..g }
            }
        }
    }

    /// Same conditions relabelled as `custom`, so any field may be changed.
    pub fn to_custom(&self) -> Self {
        Environment { preset: Preset::Custom, ..*self }
    }

    pub fn env_temperature(&self) -> f64 {
        self.env_temperature
    }

    pub fn gas_pressure(&self) -> f64 {
        self.gas_pressure
    }

    pub fn gas_particle_mass(&self) -> f64 {
        self.gas_particle_mass
    }

    pub fn gas_temperature(&self) -> f64 {
        self.gas_temperature
    }

    pub fn preset(&self) -> Preset {
        self.preset
    }

    pub fn with_env_temperature(&self, t: f64) -> Result<Self> {
        Environment::new(t, self.gas_pressure, self.gas_particle_mass, self.gas_temperature, self.preset)
    }

    pub fn with_gas_pressure(&self, p: f64) -> Result<Self> {
        Environment::new(self.env_temperature, p, self.gas_particle_mass, self.gas_temperature, self.preset)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn sphere_mass_reference() {
        // 30-digit evaluation of 2200·(4/3)π·(120 nm)³
        let m = sphere_mass(120e-9, 2200.0).unwrap();
        assert!(rel(m, 1.592_410_484_251_594_4e-17) < 1e-14);
    }

    #[test]
    fn sphere_mass_unit_volume_factor() {
        let m = sphere_mass(1.0, 3.0 / (4.0 * PI)).unwrap();
        assert!((m - 1.0).abs() < 1e-15);
    }

    #[test]
    fn sphere_mass_rejects_bad_inputs() {
        assert!(sphere_mass(1e-7, 0.0).is_err());
        assert!(sphere_mass(0.0, 2200.0).is_err());
        assert!(sphere_mass(-1e-7, 2200.0).is_err());
        assert!(sphere_mass(f64::NAN, 2200.0).is_err());
    }

    #[test]
    fn ground_state_width_reference() {
        let m = sphere_mass(120e-9, 2200.0).unwrap();
        let s = ground_state_width(m, DEFAULT_TRAP_FREQUENCY).unwrap();
        assert!(rel(s, 2.295_649_783_314_159_5e-12) < 1e-12);
    }

    #[test]
    fn ground_state_width_scaling() {
        let s = ground_state_width(1e-17, 1e5).unwrap();
        assert!(rel(ground_state_width(4e-17, 1e5).unwrap(), s / 2.0) < 1e-14);
        assert!(rel(ground_state_width(1e-17, 4e5).unwrap(), s / 2.0) < 1e-14);
        assert!(ground_state_width(0.0, 1e5).is_err());
        assert!(ground_state_width(1e-17, -1.0).is_err());
    }

    #[test]
    fn drop_distances() {
        assert!((drop_distance(10.0).unwrap() - 490.5).abs() < 1e-9);
        assert!((drop_distance(100.0).unwrap() - 49_050.0).abs() < 1e-7);
        assert_eq!(drop_distance(0.0).unwrap(), 0.0);
        assert!(drop_distance(-1.0).is_err());
        let t = free_fall_time(100.0).unwrap();
        assert!((t - 4.515).abs() < 1e-3);
    }

    #[test]
    fn presets_satisfy_invariants() {
        let g = Environment::ground();
        assert_eq!(g.env_temperature(), 300.0);
        assert_eq!(g.preset(), Preset::Ground);
        let s = Environment::space();
        assert!((30.0..=40.0).contains(&s.env_temperature()));
        assert!(s.gas_pressure() <= 1e-12);
        assert!(Environment::new(300.0, 1e-12, N2_MASS, 300.0, Preset::Space).is_err());
        assert!(Environment::new(35.0, 1e-10, N2_MASS, 35.0, Preset::Space).is_err());
        assert!(Environment::new(4.0, 1e-10, N2_MASS, 4.0, Preset::Ground).is_err());
        assert!(Environment::new(4.0, 1e-10, 0.0, 4.0, Preset::Custom).is_err());
    }

    #[test]
    fn particle_validation() {
        let p = Particle::reference();
        assert_eq!(p.mass(), sphere_mass(120e-9, 2200.0).unwrap());
        let bad = Complex64::new(2.0, -0.1);
        assert!(Particle::new(1e-7, 2200.0, bad, bad, 300.0).is_err());
        assert!(p.with_internal_temperature(-1.0).is_err());
        assert!("moon".parse::<Preset>().is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn mass_is_cubic_in_radius(r in 1e-9f64..1e-3, rho in 1.0f64..2e4) {
                let m1 = sphere_mass(r, rho).unwrap();
                let m2 = sphere_mass(2.0 * r, rho).unwrap();
                prop_assert!(((m2 / m1) - 8.0).abs() / 8.0 < 1e-12);
            }

            #[test]
            fn drop_is_quadratic(t in 0.001f64..1e4) {
                let d1 = drop_distance(t).unwrap();
                let d2 = drop_distance(2.0 * t).unwrap();
                prop_assert!(((d2 / d1) - 4.0).abs() / 4.0 < 1e-12);
            }

            #[test]
            fn ground_width_saturates(m in 1e-25f64..1e-10, w in 1.0f64..1e8) {
                let s = ground_state_width(m, w).unwrap();
                prop_assert!((s * s * (2.0 * m * w / HBAR) - 1.0).abs() < 1e-12);
            }
        }
    }
}
