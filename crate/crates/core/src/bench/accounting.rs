//! Linear energy and cost accounting over run volumes.
//!
//! Every line item is a coefficient times one volume driver, normalised to a
//! day (energy) or a 30-day month (cost). Coefficients are calibrated so a
//! reference run reproduces a target column, then applied unchanged to the
//! other runs.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::metrics::ByteTotals;
use crate::edge::EdgeWork;

pub const DAYS_PER_MONTH: f64 = 30.0;

#[derive(Debug, Error, PartialEq)]
pub enum AccountingError {
    #[error("coefficient {0} must be finite and non-negative")]
    Negative(&'static str),
    #[error("cannot calibrate {0}: the reference run has zero volume")]
    ZeroVolume(&'static str),
    #[error("run covers no time")]
    NoDuration,
}

/// Relative cost of the edge activities, in reading-equivalents.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WorkWeights {
    pub reading: f64,
    pub check: f64,
    pub context: f64,
    pub generated: f64,
}

impl Default for WorkWeights {
    fn default() -> Self {
        Self {
            reading: 1.0,
            check: 0.01,
            context: 0.01,
            generated: 1.0,
        }
    }
}

impl WorkWeights {
    pub fn weigh(&self, w: &EdgeWork) -> f64 {
        self.reading * w.readings as f64
            + self.check * w.checks as f64
            + self.context * w.context as f64
            + self.generated * w.generated as f64
    }
}

/// Energy per unit of each driver.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnergyCoefficients {
    /// Per weighted reading processed at the edge.
    pub edge: f64,
    /// Per wire byte handed to the channel.
    pub network: f64,
    /// Per wire byte delivered.
    pub central: f64,
    /// Per raw byte stored.
    pub storage: f64,
}

/// Currency per unit of each driver; `energy` is a price per energy unit.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CostCoefficients {
    pub compute: f64,
    pub storage: f64,
    pub bandwidth: f64,
    pub maintenance: f64,
    pub energy: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AccountingModel {
    pub energy: EnergyCoefficients,
    pub cost: CostCoefficients,
    pub work: WorkWeights,
}

impl AccountingModel {
    pub fn validate(&self) -> Result<(), AccountingError> {
        let e = &self.energy;
        let c = &self.cost;
        let w = &self.work;
        let all = [
            ("energy.edge", e.edge),
            ("energy.network", e.network),
            ("energy.central", e.central),
            ("energy.storage", e.storage),
            ("cost.compute", c.compute),
            ("cost.storage", c.storage),
            ("cost.bandwidth", c.bandwidth),
            ("cost.maintenance", c.maintenance),
            ("cost.energy", c.energy),
            ("work.reading", w.reading),
            ("work.check", w.check),
            ("work.context", w.context),
            ("work.generated", w.generated),
        ];
        match all.into_iter().find(|(_, v)| !(v.is_finite() && *v >= 0.0)) {
            Some((name, _)) => Err(AccountingError::Negative(name)),
            None => Ok(()),
        }
    }
}

/// The volume drivers of one run.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RunVolumes {
    pub work: EdgeWork,
    pub bytes_transmitted: u64,
    pub bytes_delivered: u64,
    pub bytes_stored: u64,
    pub days: f64,
}

impl RunVolumes {
    pub fn new(work: EdgeWork, bytes: &ByteTotals, days: f64) -> Self {
        Self {
            work,
            bytes_transmitted: bytes.transmitted,
            bytes_delivered: bytes.delivered,
            bytes_stored: bytes.stored,
            days,
        }
    }

    fn per_day(&self, v: f64) -> f64 {
        if self.days > 0.0 {
            v / self.days
        } else {
            0.0
        }
    }
}

/// Energy units per day.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EnergyBreakdown {
    pub edge: f64,
    pub network: f64,
    pub central: f64,
    pub storage: f64,
    pub total: f64,
}

/// Currency per month.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CostBreakdown {
    pub compute: f64,
    pub storage: f64,
    pub bandwidth: f64,
    pub maintenance: f64,
    pub energy: f64,
    pub total: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Accounting {
    pub energy: EnergyBreakdown,
    pub cost: CostBreakdown,
}

pub fn account(v: &RunVolumes, m: &AccountingModel) -> Accounting {
    let work = v.per_day(m.work.weigh(&v.work));
    let transmitted = v.per_day(v.bytes_transmitted as f64);
    let delivered = v.per_day(v.bytes_delivered as f64);
    let stored = v.per_day(v.bytes_stored as f64);
    let e = &m.energy;
    let mut energy = EnergyBreakdown {
        edge: e.edge * work,
        network: e.network * transmitted,
        central: e.central * delivered,
        storage: e.storage * stored,
        total: 0.0,
    };
    energy.total = energy.edge + energy.network + energy.central + energy.storage;
    let c = &m.cost;
    let mut cost = CostBreakdown {
        compute: c.compute * delivered * DAYS_PER_MONTH,
        storage: c.storage * stored * DAYS_PER_MONTH,
        bandwidth: c.bandwidth * transmitted * DAYS_PER_MONTH,
        maintenance: c.maintenance * work * DAYS_PER_MONTH,
        energy: c.energy * energy.total * DAYS_PER_MONTH,
        total: 0.0,
    };
    cost.total = cost.compute + cost.storage + cost.bandwidth + cost.maintenance + cost.energy;
    Accounting { energy, cost }
}

/// Target line items for the reference run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CalibrationTargets {
    pub energy: EnergyCoefficients,
    pub cost: CostCoefficients,
}

impl Default for CalibrationTargets {
    /// The published centralized column: energy per day, cost per month.
    fn default() -> Self {
        Self {
            energy: EnergyCoefficients {
                edge: 12.4,
                network: 45.7,
                central: 89.3,
                storage: 23.6,
            },
            cost: CostCoefficients {
                compute: 15_420.0,
                storage: 8_760.0,
                bandwidth: 12_340.0,
                maintenance: 4_580.0,
                energy: 2_130.0,
            },
        }
    }
}

/// Solves the coefficients that make `reference` reproduce `targets` exactly.
pub fn calibrate(
    reference: &RunVolumes,
    targets: &CalibrationTargets,
    work: WorkWeights,
) -> Result<AccountingModel, AccountingError> {
    if reference.days <= 0.0 {
        return Err(AccountingError::NoDuration);
    }
    let solve = |target: f64, volume: f64, name: &'static str| {
        if volume > 0.0 {
            Ok(target / volume)
        } else if target == 0.0 {
            Ok(0.0)
        } else {
            Err(AccountingError::ZeroVolume(name))
        }
    };
    let w = reference.per_day(work.weigh(&reference.work));
    let tx = reference.per_day(reference.bytes_transmitted as f64);
    let dl = reference.per_day(reference.bytes_delivered as f64);
    let st = reference.per_day(reference.bytes_stored as f64);
    let te = &targets.energy;
    let energy = EnergyCoefficients {
        edge: solve(te.edge, w, "edge work")?,
        network: solve(te.network, tx, "transmitted bytes")?,
        central: solve(te.central, dl, "delivered bytes")?,
        storage: solve(te.storage, st, "stored bytes")?,
    };
    let energy_total = te.edge + te.network + te.central + te.storage;
    let tc = &targets.cost;
    let m = DAYS_PER_MONTH;
    let cost = CostCoefficients {
        compute: solve(tc.compute, dl * m, "delivered bytes")?,
        storage: solve(tc.storage, st * m, "stored bytes")?,
        bandwidth: solve(tc.bandwidth, tx * m, "transmitted bytes")?,
        maintenance: solve(tc.maintenance, w * m, "edge work")?,
        energy: solve(tc.energy, energy_total * m, "energy")?,
    };
    let model = AccountingModel { energy, cost, work };
    model.validate()?;
    Ok(model)
}
