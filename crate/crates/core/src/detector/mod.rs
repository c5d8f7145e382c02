//! Clutter modeling and GLRT target detection at the receive APs.

pub mod clutter;
pub mod glrt;

pub use clutter::{clutter_subspace, gauss_hermite, local_scattering_covariance, ClutterConfig, ClutterModel};
pub use glrt::{
    build_detector, calibrate_threshold, detection_probability, glrt_statistic, threshold_from_null, Calibration,
    DetectionEstimate, GlrtDetector, ObservationModel, SensingObservation, SignalModel,
};
