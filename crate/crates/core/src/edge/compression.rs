use serde::{Deserialize, Serialize};

use crate::sensorgen::{Family, SensorKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataClass {
    CctvMetadata,
    Scalar,
}

impl DataClass {
    pub fn of(kind: SensorKind) -> Self {
        if kind.family() == Family::CctvMetadata {
            DataClass::CctvMetadata
        } else {
            DataClass::Scalar
        }
    }
}

/// `CR = clip(base · (bw_ref/bw)^a · (lat/lat_ref)^b · (1 − c·score), floor, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CompressionModel {
    pub base_cctv: f64,
    pub base_scalar: f64,
    pub bandwidth_exponent: f64,
    pub latency_exponent: f64,
    pub importance_gain: f64,
    pub floor: f64,
    /// Bytes per step at which the bandwidth factor is 1.
    pub bandwidth_ref: f64,
    /// Steps at which the latency factor is 1.
    pub latency_ref: f64,
}

impl Default for CompressionModel {
    fn default() -> Self {
        Self {
            base_cctv: 0.3,
            base_scalar: 0.6,
            bandwidth_exponent: 0.5,
            latency_exponent: 0.25,
            importance_gain: 0.5,
            floor: 0.05,
            bandwidth_ref: 65_536.0,
            latency_ref: 1.0,
        }
    }
}

impl CompressionModel {
    pub fn base(&self, class: DataClass) -> f64 {
        match class {
            DataClass::CctvMetadata => self.base_cctv,
            DataClass::Scalar => self.base_scalar,
        }
    }

    pub fn ratio(&self, class: DataClass, bandwidth: f64, latency: f64, score: f64) -> Result<f64, String> {
        if !(bandwidth > 0.0) {
            return Err(format!("bandwidth must be positive, got {bandwidth}"));
        }
        let cr = self.base(class)
            * (self.bandwidth_ref / bandwidth).powf(self.bandwidth_exponent)
            * (latency.max(0.0) / self.latency_ref).powf(self.latency_exponent)
            * (1.0 - self.importance_gain * score);
        Ok(cr.clamp(self.floor, 1.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn neutral_point_is_base() {
        let m = CompressionModel::default();
        assert_eq!(m.ratio(DataClass::CctvMetadata, 65_536.0, 1.0, 0.0).unwrap(), 0.3);
        assert_eq!(m.ratio(DataClass::Scalar, 65_536.0, 1.0, 0.0).unwrap(), 0.6);
    }

    #[test]
    fn full_importance_halves_scalar() {
        let m = CompressionModel::default();
        assert!((m.ratio(DataClass::Scalar, 65_536.0, 1.0, 1.0).unwrap() - 0.30).abs() < 1e-12);
    }

    #[test]
    fn floor_and_rejection() {
        let m = CompressionModel::default();
        assert_eq!(m.ratio(DataClass::Scalar, 1e15, 1.0, 0.0).unwrap(), 0.05);
        assert!(m.ratio(DataClass::Scalar, 0.0, 1.0, 0.0).is_err());
        assert_eq!(m.ratio(DataClass::Scalar, 1.0, 1.0, 0.0).unwrap(), 1.0);
    }
}
