//! Seeded synthetic cohort generator.
//!
//! Plants per-hand interaction patterns with exactly known measures, then
//! emits every input the pipeline consumes: detection streams whose contact
//! states realize the planted profiles, session manifests, frame-level
//! annotations (optionally with label-flip noise), participant dominance,
//! and clinical scores generated as monotone functions of the planted
//! measures (optionally jittered, optionally with missing cells). A truth
//! sidecar records the exact planted values.
//!
//! Construction: each hand gets `event_count` events of a fixed
//! `event_len_frames` length, evenly spaced with at least one empty frame
//! between events, identically in every session. All randomness (detection
//! geometry, decoy contact states, duplicates, noise) flows from the single
//! seed, so generation is byte-deterministic.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::SessionRecords;
use crate::ingest::{
    AnnotationRecord, BoundingBox, ClinicalRecord, ContactState, DetectionRecord, GrasspScores,
    HandSide, Offset, ParticipantProfile, SessionManifest,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub participants: usize,
    pub sessions_per_participant: usize,
    pub session_minutes: f64,
    pub fps: f64,
    /// Probability of flipping an annotation label (annotations only; the
    /// detections still realize the planted profile).
    pub label_noise: f64,
    /// Uniform jitter amplitude (score units) added to clinical scores.
    pub clinical_noise: f64,
    /// Probability of blanking selected optional clinical fields.
    pub missing_rate: f64,
    /// Target dominant-hand perc range, spread across the cohort.
    pub perc_range: (f64, f64),
    /// Non-dominant target = dominant target - gap.
    pub perc_gap: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            participants: 20,
            sessions_per_participant: 1,
            session_minutes: 2.0,
            fps: 30.0,
            label_noise: 0.0,
            clinical_noise: 0.0,
            missing_rate: 0.0,
            perc_range: (0.35, 0.8),
            perc_gap: 0.12,
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.participants == 0 {
            return Err(Error::Argument("need at least one participant".to_string()));
        }
        if self.sessions_per_participant == 0 {
            return Err(Error::Argument("need at least one session".to_string()));
        }
        if !(self.session_minutes.is_finite() && self.session_minutes > 0.0) {
            return Err(Error::Argument("session length must be > 0".to_string()));
        }
        if !(self.fps.is_finite() && self.fps > 0.0) {
            return Err(Error::Argument("fps must be > 0".to_string()));
        }
        for (name, v) in [
            ("label_noise", self.label_noise),
            ("missing_rate", self.missing_rate),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Argument(format!("{name} {v} outside [0,1]")));
            }
        }
        if !(self.clinical_noise.is_finite() && self.clinical_noise >= 0.0) {
            return Err(Error::Argument(format!(
                "clinical_noise {} must be >= 0",
                self.clinical_noise
            )));
        }
        let (lo, hi) = self.perc_range;
        if !(0.0 < lo && lo <= hi && hi <= 1.0) {
            return Err(Error::Argument(format!(
                "perc range ({lo}, {hi}) must satisfy 0 < lo <= hi <= 1"
            )));
        }
        if !(0.0..1.0).contains(&self.perc_gap) {
            return Err(Error::Argument("perc gap must be in [0,1)".to_string()));
        }
        Ok(())
    }
}

/// Exact planted values for one hand (per session; sessions are identical).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HandTruth {
    pub side: HandSide,
    pub perc: f64,
    pub dur_s: f64,
    pub num_per_hour: f64,
    pub event_count: usize,
    pub event_len_frames: usize,
}

/// Ground truth for one participant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthRecord {
    pub participant_id: String,
    pub sessions: usize,
    pub frames_per_session: usize,
    pub fps: f64,
    pub dominant: HandTruth,
    pub nondominant: HandTruth,
}

/// A complete generated cohort, ready to serialize or feed to the pipeline.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthCohort {
    pub sessions: Vec<SessionRecords>,
    pub annotations: Vec<AnnotationRecord>,
    pub clinical: Vec<ClinicalRecord>,
    pub participants: Vec<ParticipantProfile>,
    pub truth: Vec<TruthRecord>,
}

struct PlantedHand {
    bits: Vec<u8>,
    truth: HandTruth,
}

/// Lay out `count` events of `len` frames over `frames` slots, evenly
/// spaced. Requires count*(len+1) <= frames so every pair of events is
/// separated by at least one empty frame.
fn plant_bits(frames: usize, count: usize, len: usize) -> Vec<u8> {
    let mut bits = vec![0u8; frames];
    let stride = frames as f64 / count as f64;
    for event in 0..count {
        let start = (event as f64 * stride).floor() as usize;
        bits[start..start + len].fill(1);
    }
    bits
}

fn plant_hand(
    side: HandSide,
    target_perc: f64,
    event_len: usize,
    frames: usize,
    fps: f64,
) -> Result<PlantedHand> {
    if target_perc > 1.0 {
        return Err(Error::Argument(format!(
            "target perc {target_perc} > 1 is infeasible"
        )));
    }
    let count = ((target_perc * frames as f64 / event_len as f64).round() as usize).max(1);
    if count * (event_len + 1) > frames {
        return Err(Error::Argument(format!(
            "target perc {target_perc} with {event_len}-frame events does not fit in {frames} frames"
        )));
    }
    // The definitional formulas over the construction integers; the pipeline
    // recovers these values exactly.
    let interaction_frames = count * event_len;
    let perc = interaction_frames as f64 / frames as f64;
    let total_time_s = frames as f64 / fps;
    let dur_s = (interaction_frames as f64 / count as f64) / fps;
    let num_per_hour = count as f64 / (total_time_s / 3600.0);
    Ok(PlantedHand {
        bits: plant_bits(frames, count, event_len),
        truth: HandTruth {
            side,
            perc,
            dur_s,
            num_per_hour,
            event_count: count,
            event_len_frames: event_len,
        },
    })
}

fn random_detection(
    rng: &mut ChaCha8Rng,
    participant_id: &str,
    session_id: &str,
    frame: usize,
    side: HandSide,
    interacting: bool,
) -> DetectionRecord {
    let state = if interacting {
        if rng.random_bool(0.5) {
            ContactState::PortableObject
        } else {
            ContactState::NonPortableObject
        }
    } else {
        ContactState::from_code(rng.random_range(0..=2)).unwrap()
    };
    let x1 = rng.random_range(0.0..0.5);
    let y1 = rng.random_range(0.0..0.5);
    DetectionRecord {
        participant_id: participant_id.to_string(),
        session_id: session_id.to_string(),
        frame_index: frame,
        hand_side: side,
        bbox: BoundingBox {
            x1,
            y1,
            x2: x1 + rng.random_range(0.05..0.45),
            y2: y1 + rng.random_range(0.05..0.45),
        },
        confidence: rng.random_range(0.5..1.0),
        contact_state: state,
        offset: Offset {
            dx: rng.random_range(-1.0..1.0),
            dy: rng.random_range(-1.0..1.0),
            magnitude: rng.random_range(0.0..0.5),
        },
    }
}

/// 0-based ranks by ascending value; ties broken by position (values are
/// engineered distinct under default configs).
fn rank_positions(values: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap().then(a.cmp(&b)));
    let mut ranks = vec![0; values.len()];
    for (rank, &idx) in order.iter().enumerate() {
        ranks[idx] = rank;
    }
    ranks
}

/// Generate a full cohort. Byte-deterministic for a fixed config.
pub fn generate(cfg: &SynthConfig) -> Result<SynthCohort> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let frames = (cfg.session_minutes * 60.0 * cfg.fps).round() as usize;
    if frames == 0 {
        return Err(Error::Argument(
            "session too short for one frame".to_string(),
        ));
    }
    let p = cfg.participants;
    let (lo, hi) = cfg.perc_range;

    let mut participants = Vec::with_capacity(p);
    let mut planted: Vec<(PlantedHand, PlantedHand)> = Vec::with_capacity(p); // (dominant, nondominant)
    for i in 0..p {
        let participant_id = format!("P{:02}", i + 1);
        let dominant_side = if i % 2 == 0 {
            HandSide::Right
        } else {
            HandSide::Left
        };
        let pre_injury_side = if i % 3 == 0 {
            dominant_side.other()
        } else {
            dominant_side
        };
        participants.push(ParticipantProfile {
            participant_id,
            dominant_side_post_injury: dominant_side,
            dominant_side_pre_injury: pre_injury_side,
        });
        let spread = if p > 1 {
            i as f64 / (p - 1) as f64
        } else {
            0.0
        };
        let dom_target = lo + (hi - lo) * spread;
        let nondom_target = (dom_target - cfg.perc_gap).max(0.02);
        let dom = plant_hand(dominant_side, dom_target, 15 + 2 * i, frames, cfg.fps)?;
        let nondom = plant_hand(
            dominant_side.other(),
            nondom_target,
            10 + 2 * i,
            frames,
            cfg.fps,
        )?;
        planted.push((dom, nondom));
    }

    let mut sessions = Vec::with_capacity(p * cfg.sessions_per_participant);
    let mut annotations = Vec::new();
    for (profile, (dom, nondom)) in participants.iter().zip(&planted) {
        let (left, right) = match profile.dominant_side_post_injury {
            HandSide::Left => (dom, nondom),
            HandSide::Right => (nondom, dom),
        };
        for session in 0..cfg.sessions_per_participant {
            let session_id = format!("S{}", session + 1);
            let manifest = SessionManifest {
                participant_id: profile.participant_id.clone(),
                session_id: session_id.clone(),
                fps: cfg.fps,
                frame_count: frames,
                frame_width: 720,
                frame_height: 405,
            };
            let mut records = Vec::new();
            for frame in 0..frames {
                for (side, bits) in [(HandSide::Left, &left.bits), (HandSide::Right, &right.bits)] {
                    let interacting = bits[frame] == 1;
                    let emit = interacting || rng.random_bool(0.75);
                    if emit {
                        records.push(random_detection(
                            &mut rng,
                            &profile.participant_id,
                            &session_id,
                            frame,
                            side,
                            interacting,
                        ));
                        // Occasional duplicate with the same classification
                        // class, exercising the dedupe path.
                        if rng.random_bool(0.04) {
                            records.push(random_detection(
                                &mut rng,
                                &profile.participant_id,
                                &session_id,
                                frame,
                                side,
                                interacting,
                            ));
                        }
                    }
                    let mut label = bits[frame];
                    if rng.random_bool(cfg.label_noise) {
                        label ^= 1;
                    }
                    annotations.push(AnnotationRecord {
                        participant_id: profile.participant_id.clone(),
                        session_id: session_id.clone(),
                        frame_index: frame,
                        hand_side: side,
                        label,
                    });
                }
            }
            sessions.push(SessionRecords { manifest, records });
        }
    }

    // Clinical scores: monotone rank-based links to the planted measures.
    let perc_dom: Vec<f64> = planted.iter().map(|(d, _)| d.truth.perc).collect();
    let perc_nondom: Vec<f64> = planted.iter().map(|(_, n)| n.truth.perc).collect();
    let num_dom: Vec<f64> = planted.iter().map(|(d, _)| d.truth.num_per_hour).collect();
    let num_nondom: Vec<f64> = planted.iter().map(|(_, n)| n.truth.num_per_hour).collect();
    let num_bi: Vec<f64> = num_dom
        .iter()
        .zip(&num_nondom)
        .map(|(a, b)| a + b)
        .collect();
    let r_perc_dom = rank_positions(&perc_dom);
    let r_perc_nondom = rank_positions(&perc_nondom);
    let r_num_dom = rank_positions(&num_dom);
    let r_num_nondom = rank_positions(&num_nondom);
    let r_num_bi = rank_positions(&num_bi);

    let mut clinical = Vec::with_capacity(p);
    for (i, profile) in participants.iter().enumerate() {
        let mut jitter = |amplitude: f64| -> f64 {
            let draw = rng.random_range(-1.0..1.0);
            (draw * amplitude).round()
        };
        let scale = |rank: usize, span: f64| -> f64 {
            if p > 1 {
                span * rank as f64 / (p - 1) as f64
            } else {
                0.0
            }
        };
        let uems_dom = (6.0 + scale(r_perc_dom[i], 19.0) + jitter(cfg.clinical_noise))
            .clamp(0.0, 25.0)
            .round();
        let uems_nondom = (4.0 + scale(r_perc_nondom[i], 19.0) + jitter(cfg.clinical_noise))
            .clamp(0.0, 25.0)
            .round();
        let grassp = |r_perc: usize, r_num: usize, rng_jitter: &mut dyn FnMut(f64) -> f64| {
            let strength = (20.0 + scale(r_perc, 30.0) + rng_jitter(cfg.clinical_noise)).max(0.0);
            let dorsal = (4.0 + scale(r_num, 8.0) + rng_jitter(cfg.clinical_noise)).max(0.0);
            let palmar = (3.0 + scale(r_num, 9.0) + rng_jitter(cfg.clinical_noise)).max(0.0);
            let pa = (6.0 + scale(r_perc, 6.0) + rng_jitter(cfg.clinical_noise)).max(0.0);
            let pp = (10.0 + scale(r_perc, 20.0) + rng_jitter(cfg.clinical_noise)).max(0.0);
            GrasspScores {
                strength: Some(strength),
                sens_dorsal: Some(dorsal),
                sens_palmar: Some(palmar),
                sens_total: Some(dorsal + palmar),
                prehension_ability: Some(pa),
                prehension_performance: Some(pp),
                total: Some(strength + dorsal + palmar + pa + pp),
            }
        };
        let grassp_dominant = grassp(r_perc_dom[i], r_num_dom[i], &mut jitter);
        let grassp_nondominant = grassp(r_perc_nondom[i], r_num_nondom[i], &mut jitter);
        let scim_s = (5.0 + scale(r_perc_dom[i], 15.0) + jitter(cfg.clinical_noise))
            .clamp(0.0, 20.0)
            .round();
        let scim_rs = (10.0 + scale(r_num_bi[i], 28.0) + jitter(cfg.clinical_noise))
            .clamp(0.0, 40.0)
            .round();
        let scim_m = (8.0 + scale(r_num_bi[i], 30.0) + jitter(cfg.clinical_noise))
            .clamp(0.0, 40.0)
            .round();
        let mut record = ClinicalRecord {
            participant_id: profile.participant_id.clone(),
            uems_dominant: Some(uems_dom),
            uems_nondominant: Some(uems_nondom),
            uems_total: Some(uems_dom + uems_nondom),
            grassp_dominant,
            grassp_nondominant,
            scim_selfcare: Some(scim_s),
            scim_respiration_sphincter: Some(scim_rs),
            scim_mobility: Some(scim_m),
            scim_total: Some(scim_s + scim_rs + scim_m),
        };
        if rng.random_bool(cfg.missing_rate) {
            record.uems_nondominant = None;
        }
        if rng.random_bool(cfg.missing_rate) {
            record.grassp_dominant.prehension_performance = None;
        }
        if rng.random_bool(cfg.missing_rate) {
            record.grassp_nondominant.sens_palmar = None;
            record.grassp_nondominant.sens_total = None;
        }
        if rng.random_bool(cfg.missing_rate) {
            record.scim_respiration_sphincter = None;
        }
        record.validate()?;
        clinical.push(record);
    }

    let truth = participants
        .iter()
        .zip(&planted)
        .map(|(profile, (dom, nondom))| TruthRecord {
            participant_id: profile.participant_id.clone(),
            sessions: cfg.sessions_per_participant,
            frames_per_session: frames,
            fps: cfg.fps,
            dominant: dom.truth.clone(),
            nondominant: nondom.truth.clone(),
        })
        .collect();

    Ok(SynthCohort {
        sessions,
        annotations,
        clinical,
        participants,
        truth,
    })
}
