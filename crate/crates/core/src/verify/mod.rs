//! Experiments assembled from the other modules: trace ratios, ρ-scans,
//! sharpness runs, the critical-case contrast and the duality identity.

mod critical;
mod duality;
mod report;
mod scan;
mod sharpness;
mod trace;

pub use critical::{critical_comparison, wedge_trace_norm_radial, CriticalReport, CriticalRow, CRITICAL_RESOLUTION};
pub use duality::{duality_check, DualityOptions, DualityReport, DualityRow, TimeProfile};
pub use report::{write_csv, CsvRow};
pub use scan::{fit_exponent, rho_scan, ExponentFit};
pub use sharpness::{sharpness_run, SharpnessRun};
pub use trace::{trace_bound, trace_norm, trace_ratio, FieldRef, TraceRatio, TraceReport, TraceRow};
