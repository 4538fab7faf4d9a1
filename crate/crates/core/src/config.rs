//! Run configuration in line-oriented `section.key = value` form.
//!
//! The same key set is accepted from a config file and from `--section.key value`
//! command-line flags. All values are SI. Environment presets are applied
//! before any explicit `environment.*` key, whatever the order of appearance,
//! so explicit keys refine a preset.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use num_complex::Complex64;

use crate::decoherence::{ChannelToggles, CslParams};
use crate::dynamics::Trap;
use crate::error::{Error, Result};
use crate::inference::DetectionConfig;
use crate::materials::{
    fused_silica, Environment, Particle, Preset, AMU, DEFAULT_INTERNAL_TEMPERATURE, DEFAULT_RADIUS,
};
use crate::protocol::{CampaignConfig, Scenario};

/// Description of one configuration key.
#[derive(Debug, Clone, Copy)]
pub struct KeySpec {
    pub key: &'static str,
    pub unit: &'static str,
    pub help: &'static str,
}

const fn key(key: &'static str, unit: &'static str, help: &'static str) -> KeySpec {
    KeySpec { key, unit, help }
}

/// Every accepted key, in canonical print order.
pub const KEYS: &[KeySpec] = &[
    key("particle.radius", "m", "sphere radius"),
    key("particle.density", "kg/m^3", "mass density"),
    key("particle.eps_optical_re", "1", "real part of permittivity at the trap wavelength"),
    key("particle.eps_optical_im", "1", "imaginary part of permittivity at the trap wavelength"),
    key("particle.eps_thermal_re", "1", "real part of effective thermal-band permittivity"),
    key("particle.eps_thermal_im", "1", "imaginary part of effective thermal-band permittivity"),
    key("particle.internal_temperature", "K", "internal temperature of the sphere"),
    key("environment.preset", "ground|space|custom", "named environment; applied before other environment keys"),
    key("environment.temperature", "K", "temperature of the radiation environment"),
    key("environment.pressure", "Pa", "residual gas pressure"),
    key("environment.gas_mass", "kg", "mass of one gas molecule"),
    key("environment.gas_temperature", "K", "gas temperature (defaults to environment.temperature)"),
    key("trap.frequency", "rad/s", "trap angular frequency before release"),
    key("trap.occupancy", "1", "mean phonon number at release"),
    key("csl.lambda", "Hz", "CSL collapse rate"),
    key("csl.a", "m", "CSL correlation length"),
    key("csl.reference_mass", "kg", "CSL reference mass"),
    key("toggles.blackbody", "bool", "include blackbody scattering, absorption and emission"),
    key("toggles.gas", "bool", "include gas collisions"),
    key("toggles.csl", "bool", "include CSL"),
    key("campaign.times", "s,s,...", "free-expansion times (comma separated, increasing)"),
    key("campaign.runs", "count", "runs per grid time (N >= 2)"),
    key("campaign.noise", "m", "position readout standard deviation"),
    key("campaign.drift", "m/s", "run-to-run residual velocity spread"),
    key("campaign.seed", "u64", "random seed"),
    key("detection.z", "1", "detection threshold in standard errors"),
    key("detection.aggregation", "best-time|chi-square-sum", "how grid times are combined"),
    key("detection.n_sweep", "count,count,...", "runs-per-time values for the bound sweep"),
    key("detection.oracle_seeds", "count", "seeded campaigns per power estimate in the Monte-Carlo check"),
    key("feasibility.platform", "name", "drop platform label"),
    key("feasibility.height", "m", "usable drop height of the platform"),
];

fn is_known(k: &str) -> bool {
    KEYS.iter().any(|s| s.key == k)
}

/// Fully resolved run configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub radius: f64,
    pub density: f64,
    pub eps_optical: Complex64,
    pub eps_thermal: Complex64,
    pub internal_temperature: f64,

    pub preset: Preset,
    pub env_temperature: f64,
    pub pressure: f64,
    pub gas_mass: f64,
    pub gas_temperature: Option<f64>,

    pub trap: Trap,

    pub csl_lambda: f64,
    pub csl_a: f64,
    pub csl_reference_mass: f64,

    pub toggles: ChannelToggles,

    pub times: Vec<f64>,
    pub runs: usize,
    pub noise: f64,
    pub drift: f64,
    pub seed: u64,

    pub detection: DetectionConfig,
    pub n_sweep: Vec<usize>,
    pub oracle_seeds: usize,

    pub platform: String,
    pub platform_height: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        let env = Environment::ground();
        RunConfig {
            radius: DEFAULT_RADIUS,
            density: fused_silica::DENSITY,
            eps_optical: fused_silica::OPTICAL_PERMITTIVITY,
            eps_thermal: fused_silica::THERMAL_PERMITTIVITY,
            internal_temperature: DEFAULT_INTERNAL_TEMPERATURE,
            preset: env.preset(),
            env_temperature: env.env_temperature(),
            pressure: env.gas_pressure(),
            gas_mass: env.gas_particle_mass(),
            gas_temperature: None,
            trap: Trap::default(),
            csl_lambda: 1e-13,
            csl_a: 100e-9,
            csl_reference_mass: AMU,
            toggles: ChannelToggles::ALL,
            times: (0..=10).map(|i| 10.0 * i as f64).collect(),
            runs: 1000,
            noise: 0.0,
            drift: 0.0,
            seed: 1,
            detection: DetectionConfig::default(),
            n_sweep: vec![10, 100, 1000, 10_000, 100_000],
            oracle_seeds: 400,
            platform: "drop-tower".into(),
            platform_height: 100.0,
        }
    }
}

fn parse_f64(key: &str, v: &str) -> Result<f64> {
    let x: f64 = v.trim().parse().map_err(|_| Error::Config(format!("{key}: `{v}` is not a number")))?;
    if !x.is_finite() {
        return Err(Error::Config(format!("{key}: `{v}` is not finite")));
    }
    Ok(x)
}

fn parse_usize(key: &str, v: &str) -> Result<usize> {
    v.trim().parse().map_err(|_| Error::Config(format!("{key}: `{v}` is not a non-negative integer")))
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v.trim() {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        _ => Err(Error::Config(format!("{key}: `{v}` is not a boolean"))),
    }
}

fn parse_list<T>(key: &str, v: &str, item: impl Fn(&str, &str) -> Result<T>) -> Result<Vec<T>> {
    if v.trim().is_empty() {
        return Ok(Vec::new());
    }
    v.split(',').map(|s| item(key, s)).collect()
}

/// Parse `section.key = value` lines. `#` starts a comment.
pub fn parse_lines(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected `section.key = value`", lineno + 1)))?;
        out.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

/// Parse toggle shorthand: `none`, `all`, or a comma list of channel names.
pub fn parse_toggle_set(v: &str) -> Result<ChannelToggles> {
    match v.trim() {
        "none" => return Ok(ChannelToggles::NONE),
        "all" => return Ok(ChannelToggles::ALL),
        _ => {}
    }
    let mut t = ChannelToggles::NONE;
    for name in v.split(',') {
        match name.trim() {
            "blackbody" => t.blackbody = true,
            "gas" => t.gas = true,
            "csl" => t.csl = true,
            other => {
                return Err(Error::Config(format!(
                    "unknown channel `{other}` (expected blackbody, gas, csl, none or all)"
                )))
            }
        }
    }
    Ok(t)
}

impl RunConfig {
    /// Build a configuration from ordered key/value pairs; later pairs win.
    pub fn from_pairs<I, K, V>(pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (K, V)>,
        K: AsRef<str>,
        V: AsRef<str>,
    {
        let mut map: BTreeMap<String, String> = BTreeMap::new();
        for (k, v) in pairs {
            let k = k.as_ref().trim();
            if !is_known(k) {
                return Err(Error::Config(format!("unknown key `{k}`")));
            }
            map.insert(k.to_string(), v.as_ref().to_string());
        }

        let mut cfg = RunConfig::default();
        if let Some(p) = map.get("environment.preset") {
            let preset: Preset = p.parse()?;
            let env = Environment::from_preset(preset);
            cfg.preset = preset;
            cfg.env_temperature = env.env_temperature();
            cfg.pressure = env.gas_pressure();
            cfg.gas_mass = env.gas_particle_mass();
        }
        for (k, v) in &map {
            cfg.set(k, v)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn parse_str(text: &str) -> Result<Self> {
        RunConfig::from_pairs(parse_lines(text)?)
    }

    fn set(&mut self, k: &str, v: &str) -> Result<()> {
        match k {
            "particle.radius" => self.radius = parse_f64(k, v)?,
            "particle.density" => self.density = parse_f64(k, v)?,
            "particle.eps_optical_re" => self.eps_optical.re = parse_f64(k, v)?,
            "particle.eps_optical_im" => self.eps_optical.im = parse_f64(k, v)?,
            "particle.eps_thermal_re" => self.eps_thermal.re = parse_f64(k, v)?,
            "particle.eps_thermal_im" => self.eps_thermal.im = parse_f64(k, v)?,
            "particle.internal_temperature" => self.internal_temperature = parse_f64(k, v)?,
            "environment.preset" => {}
            "environment.temperature" => self.env_temperature = parse_f64(k, v)?,
            "environment.pressure" => self.pressure = parse_f64(k, v)?,
            "environment.gas_mass" => self.gas_mass = parse_f64(k, v)?,
            "environment.gas_temperature" => self.gas_temperature = Some(parse_f64(k, v)?),
            "trap.frequency" => self.trap.frequency = parse_f64(k, v)?,
            "trap.occupancy" => self.trap.occupancy = parse_f64(k, v)?,
            "csl.lambda" => self.csl_lambda = parse_f64(k, v)?,
            "csl.a" => self.csl_a = parse_f64(k, v)?,
            "csl.reference_mass" => self.csl_reference_mass = parse_f64(k, v)?,
            "toggles.blackbody" => self.toggles.blackbody = parse_bool(k, v)?,
            "toggles.gas" => self.toggles.gas = parse_bool(k, v)?,
            "toggles.csl" => self.toggles.csl = parse_bool(k, v)?,
            "campaign.times" => self.times = parse_list(k, v, parse_f64)?,
            "campaign.runs" => self.runs = parse_usize(k, v)?,
            "campaign.noise" => self.noise = parse_f64(k, v)?,
            "campaign.drift" => self.drift = parse_f64(k, v)?,
            "campaign.seed" => {
                self.seed = v.trim().parse().map_err(|_| Error::Config(format!("{k}: `{v}` is not a u64")))?
            }
            "detection.z" => self.detection.confidence_z = parse_f64(k, v)?,
            "detection.aggregation" => self.detection.aggregation = v.parse()?,
            "detection.n_sweep" => self.n_sweep = parse_list(k, v, parse_usize)?,
            "detection.oracle_seeds" => self.oracle_seeds = parse_usize(k, v)?,
            "feasibility.platform" => self.platform = v.trim().to_string(),
            "feasibility.height" => self.platform_height = parse_f64(k, v)?,
            other => return Err(Error::Config(format!("unknown key `{other}`"))),
        }
        Ok(())
    }

    /// Check every section can be turned into valid model objects.
    /// The time grid and run count are checked by the commands that use them.
    pub fn validate(&self) -> Result<()> {
        let as_config = |e: Error| match e {
            Error::Domain(m) => Error::Config(m),
            other => other,
        };
        self.particle().map_err(as_config)?;
        self.environment().map_err(as_config)?;
        self.csl().map_err(as_config)?;
        if self.trap.frequency.is_nan()
            || self.trap.frequency <= 0.0
            || self.trap.occupancy.is_nan()
            || self.trap.occupancy < 0.0
        {
            return Err(Error::Config("trap.frequency must be > 0 and trap.occupancy >= 0".into()));
        }
        self.detection.validate().map_err(as_config)?;
        if self.platform_height < 0.0 {
            return Err(Error::Config("feasibility.height must be >= 0".into()));
        }
        if self.platform.is_empty() || self.platform.contains(['#', '\n', ',']) {
            return Err(Error::Config("feasibility.platform must be a non-empty name without `#` or `,`".into()));
        }
        Ok(())
    }

    pub fn particle(&self) -> Result<Particle> {
        Particle::new(self.radius, self.density, self.eps_optical, self.eps_thermal, self.internal_temperature)
    }

    pub fn environment(&self) -> Result<Environment> {
        Environment::new(
            self.env_temperature,
            self.pressure,
            self.gas_mass,
            self.gas_temperature.unwrap_or(self.env_temperature),
            self.preset,
        )
    }

    pub fn csl(&self) -> Result<CslParams> {
        CslParams::new(self.csl_lambda, self.csl_a, self.csl_reference_mass)
    }

    pub fn scenario(&self) -> Result<Scenario> {
        Ok(Scenario {
            particle: self.particle()?,
            env: self.environment()?,
            csl: self.csl()?,
            toggles: self.toggles,
            trap_frequency: self.trap.frequency,
        })
    }

    pub fn campaign(&self) -> CampaignConfig {
        CampaignConfig {
            time_grid: self.times.clone(),
            runs_per_time: self.runs,
            measurement_noise: self.noise,
            occupancy: self.trap.occupancy,
            rng_seed: self.seed,
            drift_velocity_std: self.drift,
        }
    }

    /// Canonical text form; parses back to an identical configuration.
    pub fn to_canonical(&self) -> String {
        let mut s = String::new();
        let mut line = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        let f = fmt_f64;
        let b = |x: bool| x.to_string();
        let join_f = |xs: &[f64]| xs.iter().map(|x| fmt_f64(*x)).collect::<Vec<_>>().join(",");
        let join_u = |xs: &[usize]| xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
        line("particle.radius", f(self.radius));
        line("particle.density", f(self.density));
        line("particle.eps_optical_re", f(self.eps_optical.re));
        line("particle.eps_optical_im", f(self.eps_optical.im));
        line("particle.eps_thermal_re", f(self.eps_thermal.re));
        line("particle.eps_thermal_im", f(self.eps_thermal.im));
        line("particle.internal_temperature", f(self.internal_temperature));
        line("environment.preset", self.preset.to_string());
        line("environment.temperature", f(self.env_temperature));
        line("environment.pressure", f(self.pressure));
        line("environment.gas_mass", f(self.gas_mass));
        if let Some(t) = self.gas_temperature {
            line("environment.gas_temperature", f(t));
        }
        line("trap.frequency", f(self.trap.frequency));
        line("trap.occupancy", f(self.trap.occupancy));
        line("csl.lambda", f(self.csl_lambda));
        line("csl.a", f(self.csl_a));
        line("csl.reference_mass", f(self.csl_reference_mass));
        line("toggles.blackbody", b(self.toggles.blackbody));
        line("toggles.gas", b(self.toggles.gas));
        line("toggles.csl", b(self.toggles.csl));
        line("campaign.times", join_f(&self.times));
        line("campaign.runs", self.runs.to_string());
        line("campaign.noise", f(self.noise));
        line("campaign.drift", f(self.drift));
        line("campaign.seed", self.seed.to_string());
        line("detection.z", f(self.detection.confidence_z));
        line("detection.aggregation", self.detection.aggregation.to_string());
        line("detection.n_sweep", join_u(&self.n_sweep));
        line("detection.oracle_seeds", self.oracle_seeds.to_string());
        line("feasibility.platform", self.platform.clone());
        line("feasibility.height", f(self.platform_height));
        s
    }
}

/// Shortest round-trip decimal form, switching to exponent notation for very
/// large or small magnitudes.
pub fn fmt_f64(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || (1e-3..1e6).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::materials::DEFAULT_TRAP_FREQUENCY;

    #[test]
    fn defaults_are_valid() {
        let c = RunConfig::default();
        c.validate().unwrap();
        assert_eq!(c.trap.frequency, DEFAULT_TRAP_FREQUENCY);
        assert_eq!(c.scenario().unwrap().particle, Particle::reference());
    }

    #[test]
    fn parses_file_text() {
        let text = "# comment\nparticle.radius = 1e-7\n\ncsl.lambda = 0 # off\ntoggles.gas = false\n";
        let c = RunConfig::parse_str(text).unwrap();
        assert_eq!(c.radius, 1e-7);
        assert_eq!(c.csl_lambda, 0.0);
        assert!(!c.toggles.gas);
    }

    #[test]
    fn rejects_unknown_and_malformed() {
        assert!(matches!(RunConfig::parse_str("particle.color = red"), Err(Error::Config(_))));
        assert!(matches!(RunConfig::parse_str("particle.radius 1e-7"), Err(Error::Config(_))));
        assert!(matches!(RunConfig::parse_str("particle.radius = big"), Err(Error::Config(_))));
        assert!(matches!(RunConfig::parse_str("particle.radius = -1"), Err(Error::Config(_))));
        assert!(matches!(RunConfig::parse_str("toggles.gas = maybe"), Err(Error::Config(_))));
    }

    #[test]
    fn preset_applies_before_explicit_keys() {
        let c = RunConfig::from_pairs([("environment.pressure", "5e-13"), ("environment.preset", "space")]).unwrap();
        assert_eq!(c.env_temperature, 35.0);
        assert_eq!(c.pressure, 5e-13);
        assert!(RunConfig::from_pairs([("environment.preset", "space"), ("environment.temperature", "300")]).is_err());
        let custom =
            RunConfig::from_pairs([("environment.preset", "custom"), ("environment.temperature", "77")]).unwrap();
        assert_eq!(custom.environment().unwrap().gas_temperature(), 77.0);
    }

    #[test]
    fn canonical_round_trip() {
        let c = RunConfig::from_pairs([
            ("environment.preset", "space"),
            ("campaign.times", "0,0.5,1e2"),
            ("csl.lambda", "3.3e-15"),
            ("detection.aggregation", "chi-square-sum"),
            ("environment.gas_temperature", "20"),
        ])
        .unwrap();
        let again = RunConfig::parse_str(&c.to_canonical()).unwrap();
        assert_eq!(c, again);
        assert_eq!(RunConfig::parse_str(&RunConfig::default().to_canonical()).unwrap(), RunConfig::default());
    }

    #[test]
    fn toggle_sets() {
        assert_eq!(parse_toggle_set("none").unwrap(), ChannelToggles::NONE);
        assert_eq!(parse_toggle_set("all").unwrap(), ChannelToggles::ALL);
        let t = parse_toggle_set("blackbody,csl").unwrap();
        assert!(t.blackbody && t.csl && !t.gas);
        assert!(parse_toggle_set("photons").is_err());
    }

    #[test]
    fn empty_time_list_parses_to_empty_grid() {
        let c = RunConfig::from_pairs([("campaign.times", "")]).unwrap();
        assert!(c.times.is_empty());
    }
}
