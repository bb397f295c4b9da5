use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::kind::{GenerativeModel, SensorKind};

/// Lower bound applied to λ(t) for Poisson categories.
pub const POISSON_LAMBDA_FLOOR: f64 = 0.01;

/// Inclusive physical range of a category.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClampRange {
    pub min: f64,
    pub max: f64,
}

impl ClampRange {
    pub const fn new(min: f64, max: f64) -> Self {
        Self { min, max }
    }

    pub fn clamp(&self, v: f64) -> f64 {
        v.clamp(self.min, self.max)
    }

    pub fn contains(&self, v: f64) -> bool {
        v >= self.min && v <= self.max
    }
}

/// Shape of the time-of-day profile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum DiurnalShape {
    /// `amplitude * sin(2π (hour - phase) / 24)`.
    Sine,
    /// Two raised-cosine peaks of height `amplitude` centred on the given hours.
    RushHour {
        morning: f64,
        evening: f64,
        sharpness: u32,
    },
}

/// Parameters of one category's generative model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeneratorConfig {
    pub mu_base: f64,
    pub sigma: f64,
    pub amplitude: f64,
    /// Hours.
    pub phase: f64,
    pub profile: DiurnalShape,
    pub bernoulli_p: f64,
    pub clamp: ClampRange,
}

impl GeneratorConfig {
    pub fn validate(&self, kind: SensorKind) -> Result<(), String> {
        let name = kind.name();
        if !(self.sigma > 0.0) || !self.sigma.is_finite() {
            return Err(format!("{name}: sigma must be positive, got {}", self.sigma));
        }
        if !(0.0..=1.0).contains(&self.bernoulli_p) {
            return Err(format!("{name}: bernoulli_p must be in [0,1], got {}", self.bernoulli_p));
        }
        if !(self.clamp.min < self.clamp.max) {
            return Err(format!(
                "{name}: clamp range [{}, {}] is empty",
                self.clamp.min, self.clamp.max
            ));
        }
        let mean = if kind.is_binary() { self.bernoulli_p } else { self.mu_base };
        if !self.clamp.contains(mean) {
            return Err(format!(
                "{name}: clamp range [{}, {}] excludes the mean {mean}",
                self.clamp.min, self.clamp.max
            ));
        }
        Ok(())
    }

    /// Standard deviation of the normal-regime noise at the given mean.
    pub fn noise_scale(&self, kind: SensorKind, mean: f64) -> f64 {
        match kind.model() {
            GenerativeModel::GaussianDiurnal | GenerativeModel::GaussianStationary => self.sigma,
            GenerativeModel::PoissonDiurnal | GenerativeModel::PoissonConstant => mean.sqrt(),
            GenerativeModel::Bernoulli => {
                (self.bernoulli_p * (1.0 - self.bernoulli_p)).sqrt().max(f64::EPSILON)
            }
        }
    }

    /// Default parameters for a category. These are declared config, not
    /// measured values.
    pub fn default_for(kind: SensorKind) -> Self {
        use SensorKind::*;
        let sine = |mu, sigma, amp, phase, min, max| GeneratorConfig {
            mu_base: mu,
            sigma,
            amplitude: amp,
            phase,
            profile: DiurnalShape::Sine,
            bernoulli_p: 0.0,
            clamp: ClampRange::new(min, max),
        };
        let rush = |mu, sigma, amp, morning, evening, max| GeneratorConfig {
            mu_base: mu,
            sigma,
            amplitude: amp,
            phase: 0.0,
            profile: DiurnalShape::RushHour {
                morning,
                evening,
                sharpness: 4,
            },
            bernoulli_p: 0.0,
            clamp: ClampRange::new(0.0, max),
        };
        let bern = |p| GeneratorConfig {
            mu_base: p,
            sigma: 1.0,
            amplitude: 0.0,
            phase: 0.0,
            profile: DiurnalShape::Sine,
            bernoulli_p: p,
            clamp: ClampRange::new(0.0, 1.0),
        };
        match kind {
            // Peak at 15h.
            Temperature => sine(18.0, 1.5, 6.0, 9.0, -10.0, 40.0),
            // Peak at 03h, opposite temperature.
            Humidity => sine(60.0, 3.0, 12.0, 21.0, 0.0, 100.0),
            AirQuality => sine(70.0, 6.0, 20.0, 2.0, 0.0, 500.0),
            NoiseLevel => sine(58.0, 2.5, 8.0, 8.0, 20.0, 130.0),
            VehicleCount => rush(20.0, 7.0, 100.0, 8.0, 18.0, 2000.0),
            PedestrianCount => rush(10.0, 5.5, 60.0, 8.5, 17.5, 2000.0),
            BicycleCount => sine(12.0, 3.5, 8.0, 8.0, 0.0, 1000.0),
            CctvObjectCount => sine(25.0, 5.0, 15.0, 8.0, 0.0, 500.0),
            CctvPersonCount => sine(8.0, 2.8, 0.0, 0.0, 0.0, 500.0),
            CctvMotionIndex => sine(35.0, 4.0, 0.0, 0.0, 0.0, 100.0),
            Vibration => sine(2.0, 0.3, 0.0, 0.0, 0.0, 50.0),
            WaterPressure => sine(4.0, 0.2, 0.0, 0.0, 0.0, 16.0),
            // Evening peak at 19h.
            PowerLoad => sine(220.0, 10.0, 40.0, 13.0, 0.0, 1000.0),
            ValveState => bern(0.95),
            EmergencyAlert => bern(0.001),
        }
    }
}

/// Maps discrete steps onto wall-clock time of day.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Clock {
    pub interval_seconds: u64,
}

impl Default for Clock {
    fn default() -> Self {
        Self { interval_seconds: 300 }
    }
}

impl Clock {
    pub fn new(interval_seconds: u64) -> Self {
        Self { interval_seconds }
    }

    /// Hour of day in `[0, 24)`.
    pub fn hour(&self, t: u64) -> f64 {
        let secs = (t * self.interval_seconds) % 86_400;
        secs as f64 / 3600.0
    }

    pub fn steps_per_day(&self) -> u64 {
        86_400 / self.interval_seconds
    }

    pub fn steps_per_hour(&self) -> f64 {
        3600.0 / self.interval_seconds as f64
    }

    pub fn day(&self, t: u64) -> u64 {
        t / self.steps_per_day()
    }
}

/// Deterministic mean of the profile at a given hour of day.
pub fn diurnal_mean_at_hour(cfg: &GeneratorConfig, hour: f64) -> f64 {
    match cfg.profile {
        DiurnalShape::Sine => {
            cfg.mu_base + cfg.amplitude * (2.0 * PI * (hour - cfg.phase) / 24.0).sin()
        }
        DiurnalShape::RushHour {
            morning,
            evening,
            sharpness,
        } => {
            let bump = |centre: f64| {
                let c = (PI * (hour - centre) / 24.0).cos();
                c.powi(2 * sharpness as i32)
            };
            cfg.mu_base + cfg.amplitude * (bump(morning) + bump(evening))
        }
    }
}

/// μ(t) for Gaussian categories, λ(t) before flooring for Poisson ones.
pub fn diurnal_mean(cfg: &GeneratorConfig, clock: &Clock, t: u64) -> f64 {
    diurnal_mean_at_hour(cfg, clock.hour(t))
}

/// The model's expected value for `kind` at step `t`, including model-specific
/// adjustments (flat means for stationary models, λ floor, Bernoulli rate).
pub fn expected_value(kind: SensorKind, cfg: &GeneratorConfig, clock: &Clock, t: u64) -> f64 {
    expected_value_at_hour(kind, cfg, clock.hour(t))
}

pub fn expected_value_at_hour(kind: SensorKind, cfg: &GeneratorConfig, hour: f64) -> f64 {
    match kind.model() {
        GenerativeModel::GaussianDiurnal => diurnal_mean_at_hour(cfg, hour),
        GenerativeModel::GaussianStationary => cfg.mu_base,
        GenerativeModel::PoissonDiurnal => diurnal_mean_at_hour(cfg, hour).max(POISSON_LAMBDA_FLOOR),
        GenerativeModel::PoissonConstant => cfg.mu_base.max(POISSON_LAMBDA_FLOOR),
        GenerativeModel::Bernoulli => cfg.bernoulli_p,
    }
}
