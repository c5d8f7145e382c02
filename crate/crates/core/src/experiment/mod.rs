//! Detection-probability experiments: configuration, design strategies,
//! Monte Carlo sweeps and CSV output.

pub mod config;
pub mod output;
pub mod sweep;
pub mod variants;

pub use config::{ExperimentConfig, DEFAULT_RCS_REFERENCE_DB, SCHEMA_VERSION};
pub use output::{emit_csv, emit_trace_csv, fmt_float, write_csv, CSV_COLUMNS, TRACE_COLUMNS};
pub use sweep::{
    run_pd_sweep, select_realization, PointResult, Realization, RealizationInputs, RealizationRecord, SweepResult, VariantResult,
    VariantRun,
};
pub use variants::{baseline_random_ris_equal_power, Design, DesignContext, Optimized, RandomEqualPower, Variant, VariantRegistry};
