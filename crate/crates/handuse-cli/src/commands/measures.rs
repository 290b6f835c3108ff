//! `handuse measures` — the per-participant outcome-measure table.
//!
//! Runs either staged (over `profile` outputs) or one-shot (classifying
//! detections internally); both paths produce identical tables. Sessions
//! aggregate by concatenation, so the table has one dom/nondom/bilateral
//! row triple per participant.

use std::collections::BTreeMap;
use std::fs;
use std::io::BufReader;

use handuse::classify::{classify_session, read_profile, InteractionProfile, Method};
use handuse::error::{Error, Result};
use handuse::ingest::{self, HandSide, ParticipantProfile};
use handuse::measures::{
    aggregate_participant, bilateral, compute_session_measures, write_measures_csv,
    ParticipantMeasures,
};

use super::{ensure_dir, load_sessions};
use crate::MeasuresArgs;

type SessionPair = (Option<InteractionProfile>, Option<InteractionProfile>);

pub fn run(args: MeasuresArgs) -> Result<()> {
    let participants =
        ingest::parse_participants(BufReader::new(fs::File::open(&args.participants)?))?;
    let dominance: BTreeMap<&str, &ParticipantProfile> = participants
        .iter()
        .map(|p| (p.participant_id.as_str(), p))
        .collect();

    // participant -> session -> (left, right)
    let mut grouped: BTreeMap<String, BTreeMap<String, SessionPair>> = BTreeMap::new();
    let mut insert = |profile: InteractionProfile| {
        let entry = grouped
            .entry(profile.participant_id.clone())
            .or_default()
            .entry(profile.session_id.clone())
            .or_insert((None, None));
        match profile.hand {
            HandSide::Left => entry.0 = Some(profile),
            HandSide::Right => entry.1 = Some(profile),
        }
    };

    match (&args.profiles, &args.detections, &args.manifests) {
        (Some(profiles_dir), None, None) => {
            let mut paths: Vec<_> = fs::read_dir(profiles_dir)?
                .collect::<std::io::Result<Vec<_>>>()?
                .into_iter()
                .map(|e| e.path())
                .filter(|p| p.extension().is_some_and(|e| e == "rle"))
                .collect();
            paths.sort();
            if paths.is_empty() {
                return Err(Error::Config(format!(
                    "no *.rle profiles in {}",
                    profiles_dir.display()
                )));
            }
            for path in paths {
                let (profile, _) = read_profile(BufReader::new(fs::File::open(&path)?))?;
                insert(profile);
            }
        }
        (None, Some(detections), Some(manifests)) => {
            let method: Method = args.classifier.method.into();
            let pool = args.classifier.pooling();
            pool.validate()?;
            let model = super::profile::load_model_if_needed(&args.classifier, method)?;
            for session in load_sessions(manifests, detections)? {
                let (left, right) = classify_session(
                    &session.records,
                    &session.manifest,
                    method,
                    model.as_ref(),
                    &pool,
                )?;
                insert(left);
                insert(right);
            }
        }
        _ => {
            return Err(Error::Config(
                "pass either --profiles or both --detections and --manifests".to_string(),
            ))
        }
    }

    let mut rows: Vec<ParticipantMeasures> = Vec::new();
    for (participant_id, sessions) in &grouped {
        let Some(profile) = dominance.get(participant_id.as_str()) else {
            log::warn!("no participant profile for '{participant_id}'; row omitted");
            continue;
        };
        let mut dom_sessions = Vec::with_capacity(sessions.len());
        let mut nondom_sessions = Vec::with_capacity(sessions.len());
        for (session_id, (left, right)) in sessions {
            let (Some(left), Some(right)) = (left, right) else {
                return Err(Error::Validation {
                    field: "hand".to_string(),
                    message: format!(
                        "session '{session_id}' of '{participant_id}' is missing one hand's profile"
                    ),
                });
            };
            let (dom, nondom, _) = compute_session_measures(left, right, profile)?;
            dom_sessions.push(dom);
            nondom_sessions.push(nondom);
        }
        let dominant = aggregate_participant(&dom_sessions)?;
        let nondominant = aggregate_participant(&nondom_sessions)?;
        rows.push(ParticipantMeasures {
            participant_id: participant_id.clone(),
            bilateral: bilateral(&dominant, &nondominant),
            dominant,
            nondominant,
        });
    }
    for p in &participants {
        if !grouped.contains_key(&p.participant_id) {
            log::warn!(
                "participant '{}' has no profiles; row omitted",
                p.participant_id
            );
        }
    }

    ensure_dir(&args.out)?;
    fs::write(args.out.join("measures.csv"), write_measures_csv(&rows))?;
    log::info!("measures written for {} participants", rows.len());
    Ok(())
}
