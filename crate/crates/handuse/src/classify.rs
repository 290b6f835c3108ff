//! Frame-level interaction classification and temporal pooling.
//!
//! Turns per-frame detection records into per-hand binary interaction
//! profiles. The rule-based path marks a frame as interacting when the
//! contact state is an object contact (non-portable or portable); the
//! optional majority-vote pooling smooths every window of consecutive frames
//! to its majority label. Neural classification lives in [`crate::neural`]
//! and is dispatched from [`classify_session`].

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{ContactState, DetectionRecord, HandSide, SessionManifest};
use crate::neural::MlpModel;

/// Interaction-detection algorithm selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    /// Contact-state rule, frame by frame.
    StateFrame,
    /// Contact-state rule followed by majority-vote pooling.
    StatePool,
    /// Neural classifier over the nine detection features.
    Neural,
    /// Neural classifier followed by majority-vote pooling.
    NeuralPool,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::StateFrame => "state-frame",
            Method::StatePool => "state-pool",
            Method::Neural => "ann",
            Method::NeuralPool => "ann-pool",
        }
    }

    pub fn parse(s: &str) -> Option<Method> {
        match s {
            "state-frame" => Some(Method::StateFrame),
            "state-pool" => Some(Method::StatePool),
            "ann" => Some(Method::Neural),
            "ann-pool" => Some(Method::NeuralPool),
            _ => None,
        }
    }

    pub fn is_pooled(self) -> bool {
        matches!(self, Method::StatePool | Method::NeuralPool)
    }

    pub fn needs_model(self) -> bool {
        matches!(self, Method::Neural | Method::NeuralPool)
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// What a pooled block becomes when ones and zeros tie exactly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TiePolicy {
    ZeroOnTie,
    OneOnTie,
}

/// Majority-vote pooling configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoolingConfig {
    /// Block length in frames.
    pub window: usize,
    pub tie_policy: TiePolicy,
}

impl Default for PoolingConfig {
    fn default() -> Self {
        PoolingConfig {
            window: 30,
            tie_policy: TiePolicy::ZeroOnTie,
        }
    }
}

impl PoolingConfig {
    pub fn validate(&self) -> Result<()> {
        if self.window == 0 {
            return Err(Error::Argument("pooling window must be >= 1".to_string()));
        }
        Ok(())
    }
}

/// Per-hand binary time series at fixed fps — the pipeline's central
/// intermediate. `bits[f]` is 1 when the hand is interacting in frame `f`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InteractionProfile {
    pub participant_id: String,
    pub session_id: String,
    pub hand: HandSide,
    pub fps: f64,
    pub bits: Vec<u8>,
}

impl InteractionProfile {
    pub fn frame_count(&self) -> usize {
        self.bits.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.bits.iter().any(|&b| b > 1) {
            return Err(Error::Validation {
                field: "bits".to_string(),
                message: "profile bits must be 0 or 1".to_string(),
            });
        }
        if !self.fps.is_finite() || self.fps <= 0.0 {
            return Err(Error::Validation {
                field: "fps".to_string(),
                message: format!("{} must be > 0", self.fps),
            });
        }
        Ok(())
    }
}

/// 1 iff the contact state is an object contact (non-portable or portable).
pub fn classify_frame_by_state(state: ContactState) -> u8 {
    u8::from(state.code() >= 3)
}

/// Build one hand's interaction profile from deduped records of one session.
///
/// Frames without a detection for the hand score 0. Records must carry the
/// manifest's identity keys and stay inside its frame range. If duplicates
/// for a frame slip through, their classifications combine by OR, which
/// keeps the output independent of record order.
pub fn build_profile(
    records: &[DetectionRecord],
    manifest: &SessionManifest,
    side: HandSide,
) -> Result<InteractionProfile> {
    let mut bits = vec![0u8; manifest.frame_count];
    for record in records {
        if record.participant_id != manifest.participant_id
            || record.session_id != manifest.session_id
        {
            return Err(Error::Validation {
                field: "session_id".to_string(),
                message: format!(
                    "record ({}, {}) does not belong to session ({}, {})",
                    record.participant_id,
                    record.session_id,
                    manifest.participant_id,
                    manifest.session_id
                ),
            });
        }
        if record.hand_side != side {
            continue;
        }
        if record.frame_index >= manifest.frame_count {
            return Err(Error::Range(format!(
                "frame_index {} >= frame_count {}",
                record.frame_index, manifest.frame_count
            )));
        }
        bits[record.frame_index] |= classify_frame_by_state(record.contact_state);
    }
    Ok(InteractionProfile {
        participant_id: manifest.participant_id.clone(),
        session_id: manifest.session_id.clone(),
        hand: side,
        fps: manifest.fps,
        bits,
    })
}

/// Replace every block of `cfg.window` consecutive frames by the block's
/// majority label, re-expanded to per-frame resolution. The final block may
/// be shorter and takes the majority over its actual length; exact ties
/// follow the tie policy. Output length always equals input length.
pub fn pool_majority(profile: &InteractionProfile, cfg: &PoolingConfig) -> InteractionProfile {
    debug_assert!(cfg.window >= 1);
    let mut bits = Vec::with_capacity(profile.bits.len());
    for block in profile.bits.chunks(cfg.window.max(1)) {
        let ones: usize = block.iter().map(|&b| b as usize).sum();
        let label = match (2 * ones).cmp(&block.len()) {
            std::cmp::Ordering::Greater => 1,
            std::cmp::Ordering::Less => 0,
            std::cmp::Ordering::Equal => match cfg.tie_policy {
                TiePolicy::ZeroOnTie => 0,
                TiePolicy::OneOnTie => 1,
            },
        };
        bits.resize(bits.len() + block.len(), label);
    }
    InteractionProfile {
        bits,
        ..profile.clone()
    }
}

/// Run one detection algorithm over a session and return the left and right
/// profiles. Neural methods require a trained model.
pub fn classify_session(
    records: &[DetectionRecord],
    manifest: &SessionManifest,
    method: Method,
    model: Option<&MlpModel>,
    cfg: &PoolingConfig,
) -> Result<(InteractionProfile, InteractionProfile)> {
    cfg.validate()?;
    match method {
        Method::StateFrame | Method::StatePool => {
            let left = build_profile(records, manifest, HandSide::Left)?;
            let right = build_profile(records, manifest, HandSide::Right)?;
            if method.is_pooled() {
                Ok((pool_majority(&left, cfg), pool_majority(&right, cfg)))
            } else {
                Ok((left, right))
            }
        }
        Method::Neural | Method::NeuralPool => {
            let model = model.ok_or_else(|| {
                Error::Config(format!("method '{method}' requires a trained model"))
            })?;
            crate::neural::predict_session(model, records, manifest, method.is_pooled(), cfg)
        }
    }
}

// --- run-length profile files -------------------------------------------------

const PROFILE_MAGIC: &str = "handuse-profile v1";

/// Write a profile in its run-length text format: a magic line, `key=value`
/// header lines, then one `value,length` run per line. `extra_header`
/// entries (e.g. a cache key) are emitted after the standard header.
pub fn write_profile<W: Write>(
    writer: &mut W,
    profile: &InteractionProfile,
    extra_header: &[(String, String)],
) -> Result<()> {
    profile.validate()?;
    writeln!(writer, "{PROFILE_MAGIC}")?;
    writeln!(writer, "participant_id={}", profile.participant_id)?;
    writeln!(writer, "session_id={}", profile.session_id)?;
    writeln!(writer, "hand={}", profile.hand)?;
    writeln!(writer, "fps={}", profile.fps)?;
    writeln!(writer, "frame_count={}", profile.frame_count())?;
    for (key, value) in extra_header {
        writeln!(writer, "{key}={value}")?;
    }
    writeln!(writer, "runs:")?;
    let mut i = 0;
    while i < profile.bits.len() {
        let value = profile.bits[i];
        let mut j = i + 1;
        while j < profile.bits.len() && profile.bits[j] == value {
            j += 1;
        }
        writeln!(writer, "{},{}", value, j - i)?;
        i = j;
    }
    Ok(())
}

/// Read a run-length profile file. Returns the profile plus any
/// non-standard header entries.
pub fn read_profile<R: BufRead>(reader: R) -> Result<(InteractionProfile, Vec<(String, String)>)> {
    let mut lines = reader.lines().enumerate();
    let (_, first) = lines.next().ok_or_else(|| Error::Parse {
        line: 1,
        message: "empty profile file".to_string(),
    })?;
    let first = first?;
    if first != PROFILE_MAGIC {
        return Err(Error::Parse {
            line: 1,
            message: format!("expected '{PROFILE_MAGIC}', found '{first}'"),
        });
    }
    let mut header: Vec<(String, String)> = Vec::new();
    let mut in_runs = false;
    let mut bits: Vec<u8> = Vec::new();
    for (idx, line) in lines {
        let line = line?;
        let line_no = idx + 1;
        if line.is_empty() {
            continue;
        }
        if !in_runs {
            if line == "runs:" {
                in_runs = true;
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
                line: line_no,
                message: format!("expected key=value, found '{line}'"),
            })?;
            header.push((key.to_string(), value.to_string()));
            continue;
        }
        let (value, length) = line.split_once(',').ok_or_else(|| Error::Parse {
            line: line_no,
            message: format!("expected value,length, found '{line}'"),
        })?;
        let value: u8 = value.parse().map_err(|_| Error::Parse {
            line: line_no,
            message: format!("bad run value '{value}'"),
        })?;
        if value > 1 {
            return Err(Error::Parse {
                line: line_no,
                message: format!("run value {value} must be 0 or 1"),
            });
        }
        let length: usize = length.parse().map_err(|_| Error::Parse {
            line: line_no,
            message: format!("bad run length '{length}'"),
        })?;
        bits.resize(bits.len() + length, value);
    }
    let mut take = |key: &str| -> Result<String> {
        let pos = header
            .iter()
            .position(|(k, _)| k == key)
            .ok_or_else(|| Error::Validation {
                field: key.to_string(),
                message: "missing from profile header".to_string(),
            })?;
        Ok(header.remove(pos).1)
    };
    let participant_id = take("participant_id")?;
    let session_id = take("session_id")?;
    let hand = take("hand")?;
    let hand = HandSide::parse(&hand).ok_or_else(|| Error::Validation {
        field: "hand".to_string(),
        message: format!("expected left|right, found '{hand}'"),
    })?;
    let fps: f64 = take("fps")?.parse().map_err(|_| Error::Validation {
        field: "fps".to_string(),
        message: "cannot parse".to_string(),
    })?;
    let frame_count: usize = take("frame_count")?
        .parse()
        .map_err(|_| Error::Validation {
            field: "frame_count".to_string(),
            message: "cannot parse".to_string(),
        })?;
    if bits.len() != frame_count {
        return Err(Error::Validation {
            field: "frame_count".to_string(),
            message: format!("runs sum to {} but header says {}", bits.len(), frame_count),
        });
    }
    let profile = InteractionProfile {
        participant_id,
        session_id,
        hand,
        fps,
        bits,
    };
    profile.validate()?;
    Ok((profile, header))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{BoundingBox, Offset};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn manifest(frame_count: usize) -> SessionManifest {
        SessionManifest {
            participant_id: "P01".to_string(),
            session_id: "S1".to_string(),
            fps: 30.0,
            frame_count,
            frame_width: 720,
            frame_height: 405,
        }
    }

    fn record(frame: usize, side: HandSide, state: u8) -> DetectionRecord {
        DetectionRecord {
            participant_id: "P01".to_string(),
            session_id: "S1".to_string(),
            frame_index: frame,
            hand_side: side,
            bbox: BoundingBox {
                x1: 0.1,
                y1: 0.1,
                x2: 0.4,
                y2: 0.5,
            },
            confidence: 0.9,
            contact_state: ContactState::from_code(state).unwrap(),
            offset: Offset {
                dx: 0.0,
                dy: 0.0,
                magnitude: 0.0,
            },
        }
    }

    fn profile_from_bits(bits: Vec<u8>) -> InteractionProfile {
        InteractionProfile {
            participant_id: "P01".to_string(),
            session_id: "S1".to_string(),
            hand: HandSide::Left,
            fps: 30.0,
            bits,
        }
    }

    #[test]
    fn state_rule_thresholds_at_object_contact() {
        assert_eq!(classify_frame_by_state(ContactState::PortableObject), 1);
        assert_eq!(classify_frame_by_state(ContactState::NonPortableObject), 1);
        assert_eq!(classify_frame_by_state(ContactState::OtherPerson), 0);
        assert_eq!(classify_frame_by_state(ContactState::SelfContact), 0);
        assert_eq!(classify_frame_by_state(ContactState::NoContact), 0);
    }

    #[test]
    fn build_profile_fills_absent_frames_with_zero() {
        let records = vec![record(0, HandSide::Left, 4), record(2, HandSide::Left, 3)];
        let profile = build_profile(&records, &manifest(4), HandSide::Left).unwrap();
        assert_eq!(profile.bits, vec![1, 0, 1, 0]);
    }

    #[test]
    fn build_profile_no_records_is_all_zero() {
        let profile = build_profile(&[], &manifest(5), HandSide::Right).unwrap();
        assert_eq!(profile.bits, vec![0; 5]);
    }

    #[test]
    fn build_profile_all_object_contact_is_all_ones() {
        let records: Vec<_> = (0..6).map(|f| record(f, HandSide::Left, 4)).collect();
        let profile = build_profile(&records, &manifest(6), HandSide::Left).unwrap();
        assert_eq!(profile.bits, vec![1; 6]);
    }

    #[test]
    fn build_profile_rejects_out_of_range_frame() {
        let records = vec![record(10, HandSide::Left, 4)];
        let err = build_profile(&records, &manifest(4), HandSide::Left).unwrap_err();
        assert!(matches!(err, Error::Range(_)));
    }

    #[test]
    fn pooling_strict_majority_wins() {
        let mut bits = vec![0u8; 30];
        bits[..16].fill(1);
        let pooled = pool_majority(&profile_from_bits(bits), &PoolingConfig::default());
        assert_eq!(pooled.bits, vec![1; 30]);
    }

    #[test]
    fn pooling_exact_tie_follows_policy() {
        let mut bits = vec![0u8; 30];
        bits[..15].fill(1);
        let profile = profile_from_bits(bits);
        let zero = pool_majority(&profile, &PoolingConfig::default());
        assert_eq!(zero.bits, vec![0; 30]);
        let one = pool_majority(
            &profile,
            &PoolingConfig {
                window: 30,
                tie_policy: TiePolicy::OneOnTie,
            },
        );
        assert_eq!(one.bits, vec![1; 30]);
    }

    #[test]
    fn pooling_matches_block_count_oracle_on_random_profile() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let bits: Vec<u8> = (0..97).map(|_| rng.random_range(0..=1)).collect();
        let profile = profile_from_bits(bits.clone());
        let cfg = PoolingConfig::default();
        let pooled = pool_majority(&profile, &cfg);
        let expected = crate::test_utils::pool_majority_brute_force(&bits, cfg.window, false);
        assert_eq!(pooled.bits, expected);
    }

    #[test]
    fn state_pool_composes_rule_and_pooling() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut records = Vec::new();
        for f in 0..200 {
            if rng.random_bool(0.8) {
                let state = rng.random_range(0..=4);
                records.push(record(f, HandSide::Left, state));
            }
        }
        let m = manifest(200);
        let cfg = PoolingConfig::default();
        let (frame_left, _) =
            classify_session(&records, &m, Method::StateFrame, None, &cfg).unwrap();
        let (pool_left, _) = classify_session(&records, &m, Method::StatePool, None, &cfg).unwrap();
        assert_eq!(pool_left, pool_majority(&frame_left, &cfg));
    }

    #[test]
    fn neural_method_without_model_is_config_error() {
        let err = classify_session(
            &[],
            &manifest(4),
            Method::Neural,
            None,
            &PoolingConfig::default(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }

    #[test]
    fn profile_round_trips_through_rle_file() {
        let profile = profile_from_bits(vec![0, 0, 1, 1, 1, 0, 1, 0, 0, 0, 1, 1]);
        let mut buf = Vec::new();
        write_profile(
            &mut buf,
            &profile,
            &[("source_hash".to_string(), "abc".to_string())],
        )
        .unwrap();
        let (parsed, extra) = read_profile(&buf[..]).unwrap();
        assert_eq!(parsed, profile);
        assert_eq!(extra, vec![("source_hash".to_string(), "abc".to_string())]);
    }

    proptest! {
        #[test]
        fn pooling_is_idempotent(
            bits in prop::collection::vec(0u8..=1, 0..300),
            window in 1usize..50,
        ) {
            let cfg = PoolingConfig { window, tie_policy: TiePolicy::ZeroOnTie };
            let profile = profile_from_bits(bits);
            let once = pool_majority(&profile, &cfg);
            let twice = pool_majority(&once, &cfg);
            prop_assert_eq!(once, twice);
        }

        #[test]
        fn pooling_preserves_length_and_unanimous_blocks(
            blocks in prop::collection::vec(0u8..=1, 1..20),
            window in 1usize..40,
        ) {
            // A profile made of unanimous blocks must come back unchanged.
            let bits: Vec<u8> = blocks.iter().flat_map(|&b| vec![b; window]).collect();
            let profile = profile_from_bits(bits.clone());
            let cfg = PoolingConfig { window, tie_policy: TiePolicy::ZeroOnTie };
            let pooled = pool_majority(&profile, &cfg);
            prop_assert_eq!(pooled.bits.len(), bits.len());
            prop_assert_eq!(pooled.bits, bits);
        }

        #[test]
        fn build_profile_is_order_invariant(
            frames in prop::collection::vec((0usize..50, 0u8..=4), 0..60),
            rotate in 0usize..60,
        ) {
            let records: Vec<_> = frames
                .iter()
                .map(|&(f, s)| record(f, HandSide::Left, s))
                .collect();
            let mut rotated = records.clone();
            if !rotated.is_empty() {
                let len = rotated.len();
                rotated.rotate_left(rotate % len);
            }
            let m = manifest(50);
            let a = build_profile(&records, &m, HandSide::Left).unwrap();
            let b = build_profile(&rotated, &m, HandSide::Left).unwrap();
            prop_assert_eq!(a, b);
        }

        #[test]
        fn rle_round_trip(bits in prop::collection::vec(0u8..=1, 1..400)) {
            let profile = profile_from_bits(bits);
            let mut buf = Vec::new();
            write_profile(&mut buf, &profile, &[]).unwrap();
            let (parsed, extra) = read_profile(&buf[..]).unwrap();
            prop_assert_eq!(parsed, profile);
            prop_assert!(extra.is_empty());
        }
    }
}
