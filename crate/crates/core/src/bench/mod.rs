//! Metrics, accounting, scalability sweep and report files.

mod accounting;
mod metrics;
mod report;
mod sweep;

pub use self::accounting::*;
pub use self::metrics::*;
pub use self::report::*;
pub use self::sweep::*;
