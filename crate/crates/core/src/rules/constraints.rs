use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::sensorgen::{CategorySet, CategoryTable, ClampRange, GeneratorConfig, SensorKind, CATEGORY_COUNT};

/// Limits one category imposes on accepted rules.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CategoryConstraint {
    pub min: f64,
    pub max: f64,
    /// Largest admissible |rate-of-change| per step.
    pub max_rate: f64,
    #[serde(default)]
    pub required_transmit: bool,
}

impl CategoryConstraint {
    pub fn bounds(&self) -> ClampRange {
        ClampRange::new(self.min, self.max)
    }

    fn from_clamp(kind: SensorKind, clamp: ClampRange) -> Self {
        Self {
            min: clamp.min,
            max: clamp.max,
            max_rate: (clamp.max - clamp.min) / 10.0,
            required_transmit: kind == SensorKind::EmergencyAlert,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhysicsConstraints {
    categories: [CategoryConstraint; CATEGORY_COUNT],
    /// Locations a `location` literal may name, when known.
    pub locations: Option<u32>,
}

impl Default for PhysicsConstraints {
    fn default() -> Self {
        Self::from_generators(&CategoryTable::all_default())
    }
}

#[derive(Debug, Deserialize, Serialize)]
struct ConstraintsFile {
    #[serde(default)]
    locations: Option<u32>,
    #[serde(default)]
    categories: BTreeMap<String, CategoryConstraint>,
}

impl PhysicsConstraints {
    /// Bounds equal to the generator clamp ranges; emergency alerts are
    /// required-transmit.
    pub fn from_generators(table: &CategoryTable) -> Self {
        let categories = SensorKind::ALL.map(|k| CategoryConstraint::from_clamp(k, table.get_or_default(k).clamp));
        Self {
            categories,
            locations: None,
        }
    }

    pub fn get(&self, kind: SensorKind) -> &CategoryConstraint {
        &self.categories[kind.index()]
    }

    pub fn set(&mut self, kind: SensorKind, c: CategoryConstraint) {
        self.categories[kind.index()] = c;
    }

    pub fn required(&self) -> CategorySet {
        SensorKind::ALL
            .into_iter()
            .filter(|k| self.get(*k).required_transmit)
            .collect()
    }

    /// Checks every bound lies inside its generator's clamp range.
    pub fn check_against(&self, table: &CategoryTable) -> Result<(), String> {
        for k in SensorKind::ALL {
            let c = self.get(k);
            let clamp = table.get(k).copied().unwrap_or_else(|| GeneratorConfig::default_for(k)).clamp;
            if !(c.min < c.max) {
                return Err(format!("{}: empty bounds [{}, {}]", k.name(), c.min, c.max));
            }
            if c.min < clamp.min || c.max > clamp.max {
                return Err(format!(
                    "{}: bounds [{}, {}] are looser than the clamp range [{}, {}]",
                    k.name(),
                    c.min,
                    c.max,
                    clamp.min,
                    clamp.max
                ));
            }
            if !(c.max_rate >= 0.0) {
                return Err(format!("{}: max_rate must be nonnegative", k.name()));
            }
        }
        Ok(())
    }

    /// Reads overrides from TOML; categories not listed keep `self`'s values.
    ///
    /// ```toml
    /// locations = 100
    /// [categories.temperature]
    /// min = -10.0
    /// max = 40.0
    /// max_rate = 5.0
    /// ```
    pub fn with_overrides(mut self, text: &str, table: &CategoryTable) -> Result<Self, String> {
        let file: ConstraintsFile = toml::from_str(text).map_err(|e| e.to_string())?;
        for (name, c) in file.categories {
            let kind = SensorKind::from_name(&name).ok_or_else(|| format!("unknown category `{name}`"))?;
            self.set(kind, c);
        }
        if file.locations.is_some() {
            self.locations = file.locations;
        }
        self.check_against(table)?;
        Ok(self)
    }

    pub fn to_toml(&self) -> String {
        let file = ConstraintsFile {
            locations: self.locations,
            categories: SensorKind::ALL.iter().map(|k| (k.name().to_string(), *self.get(*k))).collect(),
        };
        toml::to_string(&file).expect("constraints serialize")
    }
}
