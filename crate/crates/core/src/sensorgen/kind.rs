use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Sensor families used for reporting and context summaries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Environmental,
    Traffic,
    CctvMetadata,
    Infrastructure,
    Emergency,
}

impl Family {
    pub const ALL: [Family; 5] = [
        Family::Environmental,
        Family::Traffic,
        Family::CctvMetadata,
        Family::Infrastructure,
        Family::Emergency,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Family::Environmental => "environmental",
            Family::Traffic => "traffic",
            Family::CctvMetadata => "cctv_metadata",
            Family::Infrastructure => "infrastructure",
            Family::Emergency => "emergency",
        }
    }

    pub fn from_name(name: &str) -> Option<Family> {
        Family::ALL.into_iter().find(|f| f.name() == name)
    }

    pub fn kinds(self) -> impl Iterator<Item = SensorKind> {
        SensorKind::ALL.into_iter().filter(move |k| k.family() == self)
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Probabilistic model a category is drawn from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GenerativeModel {
    GaussianDiurnal,
    PoissonDiurnal,
    PoissonConstant,
    GaussianStationary,
    Bernoulli,
}

impl GenerativeModel {
    pub fn is_gaussian(self) -> bool {
        matches!(self, GenerativeModel::GaussianDiurnal | GenerativeModel::GaussianStationary)
    }

    pub fn is_poisson(self) -> bool {
        matches!(self, GenerativeModel::PoissonDiurnal | GenerativeModel::PoissonConstant)
    }

    pub fn is_diurnal(self) -> bool {
        matches!(self, GenerativeModel::GaussianDiurnal | GenerativeModel::PoissonDiurnal)
    }
}

/// The fifteen sensor categories.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SensorKind {
    Temperature,
    Humidity,
    AirQuality,
    NoiseLevel,
    VehicleCount,
    PedestrianCount,
    BicycleCount,
    CctvObjectCount,
    CctvPersonCount,
    CctvMotionIndex,
    Vibration,
    WaterPressure,
    PowerLoad,
    ValveState,
    EmergencyAlert,
}

pub const CATEGORY_COUNT: usize = 15;

impl SensorKind {
    pub const ALL: [SensorKind; CATEGORY_COUNT] = [
        SensorKind::Temperature,
        SensorKind::Humidity,
        SensorKind::AirQuality,
        SensorKind::NoiseLevel,
        SensorKind::VehicleCount,
        SensorKind::PedestrianCount,
        SensorKind::BicycleCount,
        SensorKind::CctvObjectCount,
        SensorKind::CctvPersonCount,
        SensorKind::CctvMotionIndex,
        SensorKind::Vibration,
        SensorKind::WaterPressure,
        SensorKind::PowerLoad,
        SensorKind::ValveState,
        SensorKind::EmergencyAlert,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<SensorKind> {
        SensorKind::ALL.get(i).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            SensorKind::Temperature => "temperature",
            SensorKind::Humidity => "humidity",
            SensorKind::AirQuality => "air_quality",
            SensorKind::NoiseLevel => "noise_level",
            SensorKind::VehicleCount => "vehicle_count",
            SensorKind::PedestrianCount => "pedestrian_count",
            SensorKind::BicycleCount => "bicycle_count",
            SensorKind::CctvObjectCount => "cctv_object_count",
            SensorKind::CctvPersonCount => "cctv_person_count",
            SensorKind::CctvMotionIndex => "cctv_motion_index",
            SensorKind::Vibration => "vibration",
            SensorKind::WaterPressure => "water_pressure",
            SensorKind::PowerLoad => "power_load",
            SensorKind::ValveState => "valve_state",
            SensorKind::EmergencyAlert => "emergency_alert",
        }
    }

    pub fn from_name(name: &str) -> Option<SensorKind> {
        SensorKind::ALL.into_iter().find(|k| k.name() == name)
    }

    pub fn family(self) -> Family {
        use SensorKind::*;
        match self {
            Temperature | Humidity | AirQuality | NoiseLevel => Family::Environmental,
            VehicleCount | PedestrianCount | BicycleCount => Family::Traffic,
            CctvObjectCount | CctvPersonCount | CctvMotionIndex => Family::CctvMetadata,
            Vibration | WaterPressure | PowerLoad | ValveState => Family::Infrastructure,
            EmergencyAlert => Family::Emergency,
        }
    }

    pub fn model(self) -> GenerativeModel {
        use SensorKind::*;
        match self {
            Temperature | Humidity | AirQuality | NoiseLevel | PowerLoad => {
                GenerativeModel::GaussianDiurnal
            }
            VehicleCount | PedestrianCount | BicycleCount | CctvObjectCount => {
                GenerativeModel::PoissonDiurnal
            }
            CctvPersonCount => GenerativeModel::PoissonConstant,
            CctvMotionIndex | Vibration | WaterPressure => GenerativeModel::GaussianStationary,
            ValveState | EmergencyAlert => GenerativeModel::Bernoulli,
        }
    }

    pub fn unit(self) -> &'static str {
        use SensorKind::*;
        match self {
            Temperature => "degC",
            Humidity => "pct",
            AirQuality => "aqi",
            NoiseLevel => "dB",
            VehicleCount => "vehicles",
            PedestrianCount | CctvPersonCount => "persons",
            BicycleCount => "bicycles",
            CctvObjectCount => "objects",
            CctvMotionIndex => "index",
            Vibration => "mm/s",
            WaterPressure => "bar",
            PowerLoad => "kW",
            ValveState => "state",
            EmergencyAlert => "event",
        }
    }

    /// True for count-valued categories whose values are integers.
    pub fn is_discrete(self) -> bool {
        self.model().is_poisson() || self.model() == GenerativeModel::Bernoulli
    }

    pub fn is_binary(self) -> bool {
        self.model() == GenerativeModel::Bernoulli
    }
}

impl fmt::Display for SensorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SensorKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        SensorKind::from_name(s).ok_or_else(|| format!("unknown sensor category `{s}`"))
    }
}

/// A set of categories packed into a bitmask.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CategorySet(u16);

impl CategorySet {
    pub const EMPTY: CategorySet = CategorySet(0);
    pub const ALL: CategorySet = CategorySet((1 << CATEGORY_COUNT) - 1);

    pub fn single(kind: SensorKind) -> Self {
        CategorySet(1 << kind.index())
    }

    pub fn family(family: Family) -> Self {
        family.kinds().fold(CategorySet::EMPTY, |s, k| s.with(k))
    }

    pub fn with(self, kind: SensorKind) -> Self {
        CategorySet(self.0 | (1 << kind.index()))
    }

    pub fn contains(self, kind: SensorKind) -> bool {
        self.0 & (1 << kind.index()) != 0
    }

    pub fn intersect(self, other: CategorySet) -> Self {
        CategorySet(self.0 & other.0)
    }

    pub fn union(self, other: CategorySet) -> Self {
        CategorySet(self.0 | other.0)
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn iter(self) -> impl Iterator<Item = SensorKind> {
        SensorKind::ALL.into_iter().filter(move |k| self.contains(*k))
    }
}

impl FromIterator<SensorKind> for CategorySet {
    fn from_iter<I: IntoIterator<Item = SensorKind>>(iter: I) -> Self {
        iter.into_iter().fold(CategorySet::EMPTY, |s, k| s.with(k))
    }
}
