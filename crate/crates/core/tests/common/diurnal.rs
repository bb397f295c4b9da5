//! The diurnal mean written out from its definition.

use std::f64::consts::PI;

use urbanedge_core::sensorgen::{DiurnalShape, GeneratorConfig};

/// Hour of day at step `t` of a five-minute clock.
pub fn hour(t: u64) -> f64 {
    ((t * 300) % 86_400) as f64 / 3600.0
}

pub fn profile(g: &GeneratorConfig, h: f64) -> f64 {
    match g.profile {
        DiurnalShape::Sine => g.mu_base + g.amplitude * (2.0 * PI * (h - g.phase) / 24.0).sin(),
        DiurnalShape::RushHour {
            morning,
            evening,
            sharpness,
        } => {
            let bump = |c: f64| (PI * (h - c) / 24.0).cos().powi(2 * sharpness as i32);
            g.mu_base + g.amplitude * (bump(morning) + bump(evening))
        }
    }
}
