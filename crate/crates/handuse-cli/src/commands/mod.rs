//! Command implementations and the I/O plumbing they share.

pub mod correlate;
pub mod evaluate;
pub mod measures;
pub mod profile;
pub mod synth;

use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use handuse::error::{Error, Result};
use handuse::ingest::{self, DetectionRecord, HandSide, SessionManifest};

/// One loaded session: parsed manifest, deduped records, and a content hash
/// over the raw input bytes for cache keying.
pub struct LoadedSession {
    pub manifest: SessionManifest,
    pub records: Vec<DetectionRecord>,
    pub content_hash: u64,
}

/// FNV-1a over a sequence of byte chunks. Not cryptographic; used only as a
/// cache key for detecting changed inputs.
pub fn fnv1a64(chunks: &[&[u8]]) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for chunk in chunks {
        for &byte in *chunk {
            hash ^= byte as u64;
            hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }
    hash
}

/// Load every session under `manifests_dir` (files named `*.manifest`,
/// processed in sorted order) with its detection stream
/// `<participant>_<session>.det` from `detections_dir`. Sessions are parsed
/// in a worker pool and returned sorted by (participant, session).
pub fn load_sessions(manifests_dir: &Path, detections_dir: &Path) -> Result<Vec<LoadedSession>> {
    let mut manifest_paths: Vec<PathBuf> = fs::read_dir(manifests_dir)?
        .collect::<std::io::Result<Vec<_>>>()?
        .into_iter()
        .map(|e| e.path())
        .filter(|p| p.extension().is_some_and(|e| e == "manifest"))
        .collect();
    manifest_paths.sort();
    if manifest_paths.is_empty() {
        return Err(Error::Config(format!(
            "no *.manifest files in {}",
            manifests_dir.display()
        )));
    }
    let mut sessions = manifest_paths
        .par_iter()
        .map(|path| load_one_session(path, detections_dir))
        .collect::<Result<Vec<_>>>()?;
    sessions.sort_by(|a, b| {
        (&a.manifest.participant_id, &a.manifest.session_id)
            .cmp(&(&b.manifest.participant_id, &b.manifest.session_id))
    });
    Ok(sessions)
}

fn load_one_session(manifest_path: &Path, detections_dir: &Path) -> Result<LoadedSession> {
    let manifest_bytes = fs::read(manifest_path)?;
    let manifest = ingest::parse_manifest(&manifest_bytes[..])?;
    let detections_path = detections_dir.join(format!(
        "{}_{}.det",
        manifest.participant_id, manifest.session_id
    ));
    if !detections_path.is_file() {
        return Err(Error::Config(format!(
            "missing detections file {}",
            detections_path.display()
        )));
    }
    let detection_bytes = fs::read(&detections_path)?;
    let records = ingest::parse_detections(BufReader::new(&detection_bytes[..]), &manifest)?;
    let records = ingest::dedupe_per_frame(records);
    let content_hash = fnv1a64(&[&manifest_bytes, &detection_bytes]);
    Ok(LoadedSession {
        manifest,
        records,
        content_hash,
    })
}

pub fn ensure_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path)?;
    Ok(())
}

pub fn profile_filename(participant: &str, session: &str, hand: HandSide) -> String {
    format!("{participant}_{session}_{hand}.rle")
}
