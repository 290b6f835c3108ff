//! Hand-use outcome measures from egocentric hand-detection records.
//!
//! This library turns per-frame hand detections (bounding box, confidence,
//! contact state, object offset) into validated measures of hand function:
//!
//! 1. [`ingest`] parses and validates detection streams, session manifests,
//!    frame annotations, clinical scores and participant dominance.
//! 2. [`classify`] builds per-hand binary interaction profiles, by the
//!    contact-state rule or the [`neural`] classifier, optionally smoothed
//!    with majority-vote temporal pooling.
//! 3. [`measures`] extracts interaction events and computes Perc (fraction
//!    of time interacting), Dur (mean event duration) and Num (events per
//!    hour), per hand and bilaterally.
//! 4. [`eval`] scores classifiers against frame annotations (per-participant
//!    F1, cohort summaries, leave-one-subject-out splits, method selection).
//! 5. [`stats`] provides the nonparametric machinery: Wilcoxon signed-rank,
//!    Friedman with Dunn-Šidák post-hoc, Spearman correlation.
//! 6. [`report`] assembles the correlation matrices and dominance tables and
//!    serializes them deterministically.
//! 7. [`synth`] generates seeded synthetic cohorts with exactly known
//!    planted measures for end-to-end verification.
//!
//! The companion `handuse` CLI wires these stages into batch commands.

pub mod classify;
pub mod error;
pub mod eval;
pub mod ingest;
pub mod measures;
pub mod neural;
pub mod report;
pub mod stats;
pub mod synth;
/// Reference oracles for tests; not part of the processing pipeline.
pub mod test_utils;

pub use classify::{InteractionProfile, Method, PoolingConfig, TiePolicy};
pub use error::{Error, Result};
pub use ingest::{
    AnnotationRecord, ClinicalRecord, DetectionRecord, HandSide, ParticipantProfile,
    SessionManifest,
};
pub use measures::{BilateralMeasures, HandUseMeasures, InteractionEvent, ParticipantMeasures};
pub use neural::{FeatureVector, MlpModel, TrainConfig};
pub use stats::{CorrelationCell, PosthocResult, TestResult};
