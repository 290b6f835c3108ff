//! `handuse synth` — write a generated cohort as a pipeline-ready file tree:
//!
//! ```text
//! out/
//!   manifests/<participant>_<session>.manifest
//!   detections/<participant>_<session>.det
//!   annotations.csv
//!   clinical.csv
//!   participants.csv
//!   truth.json
//! ```

use std::fs;

use handuse::error::{Error, Result};
use handuse::ingest::{
    serialize_annotations, serialize_clinical, serialize_detection, serialize_manifest,
    serialize_participants,
};
use handuse::synth::{generate, SynthConfig};

use super::ensure_dir;
use crate::SynthArgs;

pub fn run(args: SynthArgs) -> Result<()> {
    let cfg = SynthConfig {
        participants: args.participants,
        sessions_per_participant: args.sessions,
        session_minutes: args.minutes,
        fps: args.fps,
        label_noise: args.label_noise,
        clinical_noise: args.clinical_noise,
        missing_rate: args.missing_rate,
        perc_range: (args.perc_min, args.perc_max),
        perc_gap: args.perc_gap,
        seed: args.seed,
    };
    let cohort = generate(&cfg)?;

    ensure_dir(&args.out)?;
    let manifests_dir = args.out.join("manifests");
    let detections_dir = args.out.join("detections");
    ensure_dir(&manifests_dir)?;
    ensure_dir(&detections_dir)?;

    for session in &cohort.sessions {
        let stem = format!(
            "{}_{}",
            session.manifest.participant_id, session.manifest.session_id
        );
        fs::write(
            manifests_dir.join(format!("{stem}.manifest")),
            serialize_manifest(&session.manifest),
        )?;
        let mut lines = String::new();
        for record in &session.records {
            lines.push_str(&serialize_detection(record));
            lines.push('\n');
        }
        fs::write(detections_dir.join(format!("{stem}.det")), lines)?;
    }
    fs::write(
        args.out.join("annotations.csv"),
        serialize_annotations(&cohort.annotations),
    )?;
    fs::write(
        args.out.join("clinical.csv"),
        serialize_clinical(&cohort.clinical),
    )?;
    fs::write(
        args.out.join("participants.csv"),
        serialize_participants(&cohort.participants),
    )?;
    let truth = serde_json::to_string_pretty(&cohort.truth)
        .map_err(|e| Error::Numeric(format!("cannot encode truth sidecar: {e}")))?;
    fs::write(args.out.join("truth.json"), truth + "\n")?;

    log::info!(
        "synthetic cohort written: {} participants, {} sessions",
        cohort.participants.len(),
        cohort.sessions.len()
    );
    Ok(())
}
