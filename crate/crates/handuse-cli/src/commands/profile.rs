//! `handuse profile` — classify sessions into run-length profile files.
//!
//! Outputs are cached by input content: each profile header carries a
//! `source_hash` key derived from the manifest and detection bytes plus the
//! classifier configuration, and a session whose outputs already exist with
//! a matching key is skipped. `--no-cache` recomputes everything and omits
//! the key.

use std::fs;
use std::io::BufReader;

use rayon::prelude::*;

use handuse::classify::{classify_session, read_profile, write_profile, Method};
use handuse::error::{Error, Result};
use handuse::neural::MlpModel;

use super::{ensure_dir, fnv1a64, load_sessions, profile_filename, LoadedSession};
use crate::{ClassifierArgs, ProfileArgs};

pub fn load_model_if_needed(args: &ClassifierArgs, method: Method) -> Result<Option<MlpModel>> {
    if !method.needs_model() {
        return Ok(None);
    }
    let path = args
        .model
        .as_ref()
        .ok_or_else(|| Error::Config(format!("method '{method}' requires --model <checkpoint>")))?;
    let file = fs::File::open(path)?;
    Ok(Some(MlpModel::load(BufReader::new(file))?))
}

pub fn run(args: ProfileArgs) -> Result<()> {
    let pool = args.classifier.pooling();
    pool.validate()?;
    let method: Method = args.classifier.method.into();
    let model = load_model_if_needed(&args.classifier, method)?;
    let model_hash = match &args.classifier.model {
        Some(path) if method.needs_model() => fnv1a64(&[&fs::read(path)?]),
        _ => 0,
    };
    ensure_dir(&args.out)?;
    let sessions = load_sessions(&args.manifests, &args.detections)?;

    let outputs = sessions
        .par_iter()
        .map(|session| emit_session(session, method, model.as_ref(), &args, model_hash, &pool))
        .collect::<Result<Vec<_>>>()?;

    let mut written = 0usize;
    let mut cached = 0usize;
    for files in outputs {
        match files {
            Some(files) => {
                for (name, bytes) in files {
                    fs::write(args.out.join(name), bytes)?;
                    written += 1;
                }
            }
            None => cached += 2,
        }
    }
    log::info!("profiles written: {written}, reused from cache: {cached}");
    Ok(())
}

type SessionFiles = Option<Vec<(String, Vec<u8>)>>;

fn emit_session(
    session: &LoadedSession,
    method: Method,
    model: Option<&MlpModel>,
    args: &ProfileArgs,
    model_hash: u64,
    pool: &handuse::classify::PoolingConfig,
) -> Result<SessionFiles> {
    let config_tag = format!(
        "{}:{}:{:?}:{model_hash:016x}",
        method, pool.window, pool.tie_policy
    );
    let key = format!(
        "{:016x}",
        fnv1a64(&[&session.content_hash.to_be_bytes(), config_tag.as_bytes()])
    );
    let manifest = &session.manifest;
    let names = [
        profile_filename(
            &manifest.participant_id,
            &manifest.session_id,
            handuse::HandSide::Left,
        ),
        profile_filename(
            &manifest.participant_id,
            &manifest.session_id,
            handuse::HandSide::Right,
        ),
    ];
    if !args.no_cache && names.iter().all(|name| cache_hit(args, name, &key)) {
        return Ok(None);
    }
    let (left, right) = classify_session(&session.records, manifest, method, model, pool)?;
    let header: Vec<(String, String)> = if args.no_cache {
        Vec::new()
    } else {
        vec![("source_hash".to_string(), key)]
    };
    let mut files = Vec::with_capacity(2);
    for (name, profile) in names.into_iter().zip([left, right]) {
        let mut bytes = Vec::new();
        write_profile(&mut bytes, &profile, &header)?;
        files.push((name, bytes));
    }
    Ok(Some(files))
}

fn cache_hit(args: &ProfileArgs, name: &str, key: &str) -> bool {
    let path = args.out.join(name);
    let Ok(file) = fs::File::open(&path) else {
        return false;
    };
    match read_profile(BufReader::new(file)) {
        Ok((_, extras)) => extras.iter().any(|(k, v)| k == "source_hash" && v == key),
        Err(_) => false,
    }
}
