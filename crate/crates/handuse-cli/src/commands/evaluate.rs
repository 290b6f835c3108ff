//! `handuse evaluate` — method comparison against frame annotations.
//!
//! Writes the per-participant F1 matrix, per-method cohort summaries with
//! the selection flag, the Friedman omnibus result, and (when the omnibus
//! test is significant at --alpha) the Dunn-Šidák pairwise comparisons.

use std::fs;
use std::io::BufReader;

use handuse::classify::Method;
use handuse::error::{Error, Result};
use handuse::eval::{compare_methods, train_fold_models, EvalDataset, SessionRecords};
use handuse::ingest;
use handuse::neural::TrainConfig;
use handuse::report::fmt_sig6;
use handuse::stats::{dunn_sidak, friedman};

use super::{ensure_dir, load_sessions};
use crate::EvaluateArgs;

pub fn run(args: EvaluateArgs) -> Result<()> {
    if !(0.0..=1.0).contains(&args.alpha) {
        return Err(Error::Config(format!(
            "--alpha {} outside [0,1]",
            args.alpha
        )));
    }
    let pool = handuse::classify::PoolingConfig {
        window: args.window,
        tie_policy: args.tie_policy.into(),
    };
    pool.validate()?;
    let methods: Vec<Method> = args.methods.iter().map(|&m| m.into()).collect();
    let annotations =
        ingest::parse_annotations(BufReader::new(fs::File::open(&args.annotations)?))?;
    let sessions = load_sessions(&args.manifests, &args.detections)?
        .into_iter()
        .map(|s| SessionRecords {
            manifest: s.manifest,
            records: s.records,
        })
        .collect();
    let dataset = EvalDataset {
        sessions,
        annotations,
    };
    let train_cfg = TrainConfig {
        learning_rate: args.learning_rate,
        batch_size: args.batch_size,
        max_epochs: args.epochs,
        patience: args.patience,
        seed: args.seed,
        ..TrainConfig::default()
    };

    let fold_models = if methods.iter().any(|m| m.needs_model()) {
        let models = train_fold_models(&dataset, &train_cfg)?;
        if let Some(dir) = &args.save_models {
            ensure_dir(dir)?;
            for fold in &models {
                let mut bytes = Vec::new();
                fold.model.save(&mut bytes)?;
                fs::write(dir.join(format!("{}.model.json", fold.held_out)), bytes)?;
            }
        }
        Some(models)
    } else {
        None
    };

    let cmp = compare_methods(
        &dataset,
        &methods,
        &pool,
        &train_cfg,
        fold_models.as_deref(),
    )?;
    ensure_dir(&args.out)?;

    // Per-participant F1 matrix, full precision (Friedman input downstream).
    let mut f1_csv = String::from("participant_id");
    for method in &cmp.methods {
        f1_csv.push(',');
        f1_csv.push_str(method.as_str());
    }
    f1_csv.push('\n');
    for (participant, row) in cmp.participant_ids.iter().zip(&cmp.f1_matrix) {
        f1_csv.push_str(participant);
        for f1 in row {
            f1_csv.push_str(&format!(",{f1}"));
        }
        f1_csv.push('\n');
    }
    fs::write(args.out.join("f1_per_participant.csv"), f1_csv)?;

    let mut summary_csv = String::from("method,median,q1,q3,fraction_above_0_8,n,selected\n");
    for (i, (method, summary)) in cmp.methods.iter().zip(&cmp.summaries).enumerate() {
        summary_csv.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            method,
            fmt_sig6(summary.median),
            fmt_sig6(summary.q1),
            fmt_sig6(summary.q3),
            fmt_sig6(summary.fraction_above_0_8),
            summary.f1_scores.len(),
            i == cmp.selected
        ));
    }
    fs::write(args.out.join("cohort_summary.csv"), summary_csv)?;

    let mut friedman_csv = String::from("statistic,df,p,n,alpha,significant\n");
    let mut posthoc_csv =
        String::from("method_i,method_j,mean_rank_diff,z,p_raw,p_adjusted,significant\n");
    if cmp.methods.len() >= 2 && cmp.participant_ids.len() >= 2 {
        let omnibus = friedman(&cmp.f1_matrix)?;
        let significant = omnibus.p < args.alpha;
        friedman_csv.push_str(&format!(
            "{},{},{},{},{},{}\n",
            fmt_sig6(omnibus.statistic),
            omnibus.df.unwrap_or(0),
            fmt_sig6(omnibus.p),
            omnibus.n_effective,
            fmt_sig6(args.alpha),
            significant
        ));
        if significant {
            for result in dunn_sidak(&cmp.f1_matrix, args.alpha)? {
                posthoc_csv.push_str(&format!(
                    "{},{},{},{},{},{},{}\n",
                    cmp.methods[result.pair.0],
                    cmp.methods[result.pair.1],
                    fmt_sig6(result.mean_rank_diff),
                    fmt_sig6(result.z),
                    fmt_sig6(result.p_raw),
                    fmt_sig6(result.p_adjusted),
                    result.significant
                ));
            }
        } else {
            log::info!(
                "omnibus test not significant at alpha {}; post-hoc skipped",
                args.alpha
            );
        }
    } else {
        log::warn!("need >= 2 methods and >= 2 participants for the omnibus test");
    }
    fs::write(args.out.join("friedman.csv"), friedman_csv)?;
    fs::write(args.out.join("posthoc.csv"), posthoc_csv)?;

    log::info!("selected method: {}", cmp.methods[cmp.selected]);
    Ok(())
}
