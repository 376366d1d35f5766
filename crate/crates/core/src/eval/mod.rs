//! Measurements on generated clips and plans.

pub mod audit;
pub mod study;
pub mod track;

pub use audit::{audit_distributions, AuditError, AuditReport, FieldAudit, FieldTest};
pub use study::{mass_study, ForceDistanceCurve, MassStudyConfig, MassStudyReport, StudyError};
pub use track::{distance_traveled, track_centroid, SampleSource, TrackError, TrackOptions, TrajectorySample};
