//! SCNR-maximizing joint design of power allocation and RIS phases.

pub mod ao;
pub mod forms;
pub mod power;
pub mod ris;

pub use ao::{alternating_optimize, AoConfig, AoProblem, AoState, AoTraceRow, StopReason};
pub use forms::{diag_lift_quadratic_forms, psd_split, transmit_signal, PsdSplit, ScnrForms, SensingParams, Symbols};
pub use power::{
    assemble_power_socs, assemble_sinr_socs, feasible_interior_point, solve_power_allocation, CcpReport,
};
pub use ris::{solve_ris_phases, MmReport};
