//! Classifier evaluation against frame-level annotations.
//!
//! Scoring pools both hands of a participant into one confusion count
//! (positive class = interaction) and reports one F1 per participant. Cohort
//! summaries give the median and quartiles (linear interpolation) plus the
//! fraction of participants with F1 strictly above 0.8, which doubles as the
//! tie-breaker when methods share the same median.

use std::collections::{HashMap, HashSet};

use crate::classify::{classify_session, InteractionProfile, Method, PoolingConfig};
use crate::error::{Error, Result};
use crate::ingest::{AnnotationRecord, DetectionRecord, HandSide, SessionManifest};
use crate::neural::{build_sample_set, train, FoldModel, MlpModel, TrainConfig};
use crate::stats::quantile;

/// Frame-level confusion counts; the positive class is "interaction".
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ConfusionCounts {
    pub true_pos: u64,
    pub false_pos: u64,
    pub false_neg: u64,
    pub true_neg: u64,
}

impl ConfusionCounts {
    pub fn add(&mut self, prediction: u8, label: u8) {
        match (prediction, label) {
            (1, 1) => self.true_pos += 1,
            (1, 0) => self.false_pos += 1,
            (0, 1) => self.false_neg += 1,
            _ => self.true_neg += 1,
        }
    }

    pub fn merge(&mut self, other: &ConfusionCounts) {
        self.true_pos += other.true_pos;
        self.false_pos += other.false_pos;
        self.false_neg += other.false_neg;
        self.true_neg += other.true_neg;
    }

    pub fn total(&self) -> u64 {
        self.true_pos + self.false_pos + self.false_neg + self.true_neg
    }

    /// True when the F1 denominator is zero (no positives anywhere), in
    /// which case [`f1`](Self::f1) reports 0 by convention.
    pub fn is_degenerate(&self) -> bool {
        2 * self.true_pos + self.false_pos + self.false_neg == 0
    }

    /// F1 = 2tp / (2tp + fp + fn); 0 when the denominator is 0.
    pub fn f1(&self) -> f64 {
        let denom = 2 * self.true_pos + self.false_pos + self.false_neg;
        if denom == 0 {
            0.0
        } else {
            2.0 * self.true_pos as f64 / denom as f64
        }
    }
}

/// Score one participant: accumulate confusion counts over both hands and
/// every annotated frame, against the given prediction profiles.
pub fn score_participant(
    predictions: &[&InteractionProfile],
    annotations: &[AnnotationRecord],
) -> Result<ConfusionCounts> {
    let mut by_key: HashMap<(&str, HandSide), &InteractionProfile> = HashMap::new();
    for profile in predictions {
        by_key.insert((profile.session_id.as_str(), profile.hand), profile);
    }
    let mut counts = ConfusionCounts::default();
    for ann in annotations {
        let profile = by_key
            .get(&(ann.session_id.as_str(), ann.hand_side))
            .ok_or_else(|| Error::Validation {
                field: "session_id".to_string(),
                message: format!(
                    "no prediction profile for session '{}' hand '{}'",
                    ann.session_id, ann.hand_side
                ),
            })?;
        if ann.participant_id != profile.participant_id {
            return Err(Error::Argument(format!(
                "annotation for '{}' scored against profile of '{}'",
                ann.participant_id, profile.participant_id
            )));
        }
        if ann.frame_index >= profile.frame_count() {
            return Err(Error::Range(format!(
                "annotation references frame {} beyond profile length {}",
                ann.frame_index,
                profile.frame_count()
            )));
        }
        counts.add(profile.bits[ann.frame_index], ann.label);
    }
    Ok(counts)
}

/// Per-participant F1 scores with median, quartiles and the F1 > 0.8
/// participant fraction.
#[derive(Debug, Clone, PartialEq)]
pub struct CohortSummary {
    pub f1_scores: Vec<f64>,
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
    pub fraction_above_0_8: f64,
}

pub fn summarize_cohort(f1_scores: &[f64]) -> Result<CohortSummary> {
    if f1_scores.is_empty() {
        return Err(Error::Argument("empty cohort".to_string()));
    }
    let above = f1_scores.iter().filter(|&&f| f > 0.8).count();
    Ok(CohortSummary {
        f1_scores: f1_scores.to_vec(),
        median: quantile(f1_scores, 0.5)?,
        q1: quantile(f1_scores, 0.25)?,
        q3: quantile(f1_scores, 0.75)?,
        fraction_above_0_8: above as f64 / f1_scores.len() as f64,
    })
}

/// One leave-one-subject-out fold.
#[derive(Debug, Clone, PartialEq)]
pub struct LosoFold {
    pub held_out: String,
    pub training: Vec<String>,
}

/// Ordered folds whose held-out sets are disjoint singletons covering the
/// cohort.
#[derive(Debug, Clone, PartialEq)]
pub struct LosoSplit {
    pub folds: Vec<LosoFold>,
}

/// One fold per participant, in input order.
pub fn make_loso(participant_ids: &[String]) -> Result<LosoSplit> {
    if participant_ids.len() < 2 {
        return Err(Error::Argument(format!(
            "leave-one-subject-out needs at least 2 participants, got {}",
            participant_ids.len()
        )));
    }
    let unique: HashSet<&String> = participant_ids.iter().collect();
    if unique.len() != participant_ids.len() {
        return Err(Error::Argument(
            "duplicate participant ids in cohort".to_string(),
        ));
    }
    let folds = participant_ids
        .iter()
        .map(|held| LosoFold {
            held_out: held.clone(),
            training: participant_ids
                .iter()
                .filter(|p| *p != held)
                .cloned()
                .collect(),
        })
        .collect();
    Ok(LosoSplit { folds })
}

/// Verify a split against the participants present in a dataset: held-out
/// sets must be disjoint singletons whose union is exactly the cohort, and
/// every training list must be the cohort minus its held-out participant.
pub fn verify_loso(split: &LosoSplit, dataset_participants: &[String]) -> Result<()> {
    let cohort: HashSet<&str> = dataset_participants.iter().map(String::as_str).collect();
    let mut seen: HashSet<&str> = HashSet::new();
    for fold in &split.folds {
        if !seen.insert(fold.held_out.as_str()) {
            return Err(Error::SplitIntegrity(format!(
                "participant '{}' is held out by more than one fold",
                fold.held_out
            )));
        }
        if !cohort.contains(fold.held_out.as_str()) {
            return Err(Error::SplitIntegrity(format!(
                "held-out participant '{}' is not in the dataset",
                fold.held_out
            )));
        }
        let training: HashSet<&str> = fold.training.iter().map(String::as_str).collect();
        if training.contains(fold.held_out.as_str()) {
            return Err(Error::SplitIntegrity(format!(
                "training set of fold '{}' contains the held-out participant",
                fold.held_out
            )));
        }
        if training.len() != fold.training.len() {
            return Err(Error::SplitIntegrity(format!(
                "training set of fold '{}' has duplicates",
                fold.held_out
            )));
        }
        if training.len() != cohort.len() - 1 || !training.iter().all(|p| cohort.contains(p)) {
            return Err(Error::SplitIntegrity(format!(
                "training set of fold '{}' is not the cohort minus the held-out participant",
                fold.held_out
            )));
        }
    }
    if seen.len() != cohort.len() {
        return Err(Error::SplitIntegrity(format!(
            "folds hold out {} participants but the dataset has {}",
            seen.len(),
            cohort.len()
        )));
    }
    Ok(())
}

/// One session's manifest plus its (deduped) detection records.
#[derive(Debug, Clone, PartialEq)]
pub struct SessionRecords {
    pub manifest: SessionManifest,
    pub records: Vec<DetectionRecord>,
}

/// Everything needed to evaluate classifiers: sessions and the frame-level
/// annotations.
#[derive(Debug, Clone, Default)]
pub struct EvalDataset {
    pub sessions: Vec<SessionRecords>,
    pub annotations: Vec<AnnotationRecord>,
}

impl EvalDataset {
    /// Unique annotated participant ids, sorted.
    pub fn annotated_participants(&self) -> Vec<String> {
        let mut ids: Vec<String> = self
            .annotations
            .iter()
            .map(|a| a.participant_id.clone())
            .collect::<HashSet<_>>()
            .into_iter()
            .collect();
        ids.sort();
        ids
    }
}

/// Output of a method comparison: the participants x methods F1 matrix
/// (Friedman-ready), per-method cohort summaries, and the selected method.
#[derive(Debug, Clone)]
pub struct MethodComparison {
    pub methods: Vec<Method>,
    pub participant_ids: Vec<String>,
    /// `f1_matrix[participant][method]`.
    pub f1_matrix: Vec<Vec<f64>>,
    pub summaries: Vec<CohortSummary>,
    /// Index into `methods` of the winner under the selection rule.
    pub selected: usize,
}

/// Selection rule: highest median F1, ties broken by the fraction of
/// participants with F1 > 0.8, remaining ties by list order.
pub fn select_best(summaries: &[CohortSummary]) -> usize {
    let mut best = 0;
    for (i, s) in summaries.iter().enumerate().skip(1) {
        let b = &summaries[best];
        if s.median > b.median
            || (s.median == b.median && s.fraction_above_0_8 > b.fraction_above_0_8)
        {
            best = i;
        }
    }
    best
}

/// Train one model per leave-one-subject-out fold over the annotated
/// participants of a dataset.
pub fn train_fold_models(dataset: &EvalDataset, train_cfg: &TrainConfig) -> Result<Vec<FoldModel>> {
    let participant_ids = dataset.annotated_participants();
    let samples = build_sample_set(
        dataset
            .sessions
            .iter()
            .map(|s| (&s.manifest, s.records.as_slice())),
        &dataset.annotations,
    )?;
    let split = make_loso(&participant_ids)?;
    verify_loso(&split, &participant_ids)?;
    train(&samples, &split, train_cfg)
}

/// Evaluate every method on the same annotated frames and apply the
/// selection rule. Neural methods use `pretrained` fold models when given,
/// otherwise they are trained here per leave-one-subject-out fold (one
/// shared training run serves both the plain and pooled variant); each
/// participant is predicted by the fold that held them out.
pub fn compare_methods(
    dataset: &EvalDataset,
    methods: &[Method],
    pool_cfg: &PoolingConfig,
    train_cfg: &TrainConfig,
    pretrained: Option<&[FoldModel]>,
) -> Result<MethodComparison> {
    if methods.is_empty() {
        return Err(Error::Argument("no methods to compare".to_string()));
    }
    pool_cfg.validate()?;
    let participant_ids = dataset.annotated_participants();
    if participant_ids.is_empty() {
        return Err(Error::Argument("dataset has no annotations".to_string()));
    }

    let fold_models: Option<HashMap<String, MlpModel>> = if methods.iter().any(|m| m.needs_model())
    {
        let folds = match pretrained {
            Some(folds) => folds.to_vec(),
            None => train_fold_models(dataset, train_cfg)?,
        };
        Some(folds.into_iter().map(|f| (f.held_out, f.model)).collect())
    } else {
        None
    };

    let mut annotations_by_participant: HashMap<&str, Vec<&AnnotationRecord>> = HashMap::new();
    for ann in &dataset.annotations {
        annotations_by_participant
            .entry(ann.participant_id.as_str())
            .or_default()
            .push(ann);
    }

    let mut f1_matrix: Vec<Vec<f64>> = Vec::with_capacity(participant_ids.len());
    let mut evaluated_pairs: Vec<Vec<u64>> = Vec::with_capacity(participant_ids.len());
    for participant in &participant_ids {
        let sessions: Vec<&SessionRecords> = dataset
            .sessions
            .iter()
            .filter(|s| &s.manifest.participant_id == participant)
            .collect();
        let annotations: Vec<AnnotationRecord> = annotations_by_participant
            .get(participant.as_str())
            .map(|v| v.iter().map(|&a| a.clone()).collect())
            .unwrap_or_default();
        let mut row = Vec::with_capacity(methods.len());
        let mut totals = Vec::with_capacity(methods.len());
        for method in methods {
            let model = if method.needs_model() {
                Some(
                    fold_models
                        .as_ref()
                        .and_then(|m| m.get(participant))
                        .ok_or_else(|| {
                            Error::Config(format!("no fold model for participant '{participant}'"))
                        })?,
                )
            } else {
                None
            };
            let mut profiles: Vec<InteractionProfile> = Vec::new();
            for session in &sessions {
                let (left, right) = classify_session(
                    &session.records,
                    &session.manifest,
                    *method,
                    model,
                    pool_cfg,
                )?;
                profiles.push(left);
                profiles.push(right);
            }
            let refs: Vec<&InteractionProfile> = profiles.iter().collect();
            let counts = score_participant(&refs, &annotations)?;
            totals.push(counts.total());
            row.push(counts.f1());
        }
        if totals.windows(2).any(|w| w[0] != w[1]) {
            return Err(Error::Protocol(format!(
                "methods evaluated different frame counts for '{participant}': {totals:?}"
            )));
        }
        evaluated_pairs.push(totals);
        f1_matrix.push(row);
    }

    let summaries: Vec<CohortSummary> = (0..methods.len())
        .map(|m| {
            let column: Vec<f64> = f1_matrix.iter().map(|row| row[m]).collect();
            summarize_cohort(&column)
        })
        .collect::<Result<_>>()?;
    let selected = select_best(&summaries);
    Ok(MethodComparison {
        methods: methods.to_vec(),
        participant_ids,
        f1_matrix,
        summaries,
        selected,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{BoundingBox, ContactState, Offset};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn f1_direct_cases() {
        let perfect = ConfusionCounts {
            true_pos: 10,
            ..Default::default()
        };
        assert_eq!(perfect.f1(), 1.0);
        let all_wrong = ConfusionCounts {
            false_pos: 3,
            false_neg: 4,
            ..Default::default()
        };
        assert_eq!(all_wrong.f1(), 0.0);
        assert!(!all_wrong.is_degenerate());
        // 2*8 / (16 + 2 + 2) = 0.8
        let mixed = ConfusionCounts {
            true_pos: 8,
            false_pos: 2,
            false_neg: 2,
            true_neg: 5,
        };
        assert_eq!(mixed.f1(), 0.8);
        let empty = ConfusionCounts {
            true_neg: 9,
            ..Default::default()
        };
        assert_eq!(empty.f1(), 0.0);
        assert!(empty.is_degenerate());
    }

    fn profile(session: &str, hand: HandSide, bits: Vec<u8>) -> InteractionProfile {
        InteractionProfile {
            participant_id: "P01".to_string(),
            session_id: session.to_string(),
            hand,
            fps: 30.0,
            bits,
        }
    }

    fn annotation(session: &str, frame: usize, hand: HandSide, label: u8) -> AnnotationRecord {
        AnnotationRecord {
            participant_id: "P01".to_string(),
            session_id: session.to_string(),
            frame_index: frame,
            hand_side: hand,
            label,
        }
    }

    #[test]
    fn perfect_predictions_give_f1_one() {
        let bits = vec![1, 0, 1, 1, 0];
        let p = profile("S1", HandSide::Left, bits.clone());
        let anns: Vec<AnnotationRecord> = bits
            .iter()
            .enumerate()
            .map(|(f, &b)| annotation("S1", f, HandSide::Left, b))
            .collect();
        let counts = score_participant(&[&p], &anns).unwrap();
        assert_eq!(counts.f1(), 1.0);
        assert_eq!(counts.total(), 5);
    }

    #[test]
    fn all_missed_gives_f1_zero() {
        let p = profile("S1", HandSide::Left, vec![0; 5]);
        let anns: Vec<AnnotationRecord> = (0..5)
            .map(|f| annotation("S1", f, HandSide::Left, 1))
            .collect();
        let counts = score_participant(&[&p], &anns).unwrap();
        assert_eq!(counts.f1(), 0.0);
    }

    #[test]
    fn score_matches_frame_by_frame_tally_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let left_bits: Vec<u8> = (0..200).map(|_| rng.random_range(0..=1)).collect();
        let right_bits: Vec<u8> = (0..200).map(|_| rng.random_range(0..=1)).collect();
        let left = profile("S1", HandSide::Left, left_bits.clone());
        let right = profile("S1", HandSide::Right, right_bits.clone());
        let mut anns = Vec::new();
        let mut tp = 0u64;
        let mut fp = 0u64;
        let mut fn_count = 0u64;
        let mut tn = 0u64;
        for f in 0..200 {
            for (hand, bits) in [(HandSide::Left, &left_bits), (HandSide::Right, &right_bits)] {
                if !rng.random_bool(0.7) {
                    continue; // annotate a subset only
                }
                let label = rng.random_range(0..=1u8);
                anns.push(annotation("S1", f, hand, label));
                match (bits[f], label) {
                    (1, 1) => tp += 1,
                    (1, 0) => fp += 1,
                    (0, 1) => fn_count += 1,
                    _ => tn += 1,
                }
            }
        }
        // Scoring must be order-independent over evaluated pairs.
        anns.reverse();
        let counts = score_participant(&[&left, &right], &anns).unwrap();
        assert_eq!(counts.true_pos, tp);
        assert_eq!(counts.false_pos, fp);
        assert_eq!(counts.false_neg, fn_count);
        assert_eq!(counts.true_neg, tn);
    }

    #[test]
    fn annotation_beyond_profile_is_range_error() {
        let p = profile("S1", HandSide::Left, vec![0; 5]);
        let err = score_participant(&[&p], &[annotation("S1", 5, HandSide::Left, 1)]).unwrap_err();
        assert!(matches!(err, Error::Range(_)));
    }

    #[test]
    fn summary_quartiles_and_strict_fraction() {
        let s = summarize_cohort(&[0.8, 0.8, 0.8]).unwrap();
        assert_eq!(s.median, 0.8);
        assert_eq!(s.q1, 0.8);
        assert_eq!(s.q3, 0.8);
        assert_eq!(s.fraction_above_0_8, 0.0);

        let s = summarize_cohort(&[1.0]).unwrap();
        assert_eq!(s.median, 1.0);
        assert_eq!(s.fraction_above_0_8, 1.0);

        assert!(matches!(summarize_cohort(&[]), Err(Error::Argument(_))));
    }

    #[test]
    fn summary_matches_sort_interpolate_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        for _ in 0..100 {
            let n = rng.random_range(1..30);
            let scores: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
            let s = summarize_cohort(&scores).unwrap();
            // Independent sort-and-interpolate route.
            let mut sorted = scores.clone();
            sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let interp = |q: f64| {
                let pos = q * (sorted.len() - 1) as f64;
                let lo = pos.floor() as usize;
                let hi = pos.ceil() as usize;
                sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
            };
            assert!((s.median - interp(0.5)).abs() < 1e-12);
            assert!((s.q1 - interp(0.25)).abs() < 1e-12);
            assert!((s.q3 - interp(0.75)).abs() < 1e-12);
        }
    }

    #[test]
    fn loso_folds_cover_cohort() {
        let ids: Vec<String> = ["A", "B", "C"].iter().map(|s| s.to_string()).collect();
        let split = make_loso(&ids).unwrap();
        assert_eq!(split.folds.len(), 3);
        assert_eq!(split.folds[0].held_out, "A");
        assert_eq!(
            split.folds[0].training,
            vec!["B".to_string(), "C".to_string()]
        );
        verify_loso(&split, &ids).unwrap();
    }

    #[test]
    fn loso_rejects_duplicates_and_small_cohorts() {
        let dup: Vec<String> = ["A", "A"].iter().map(|s| s.to_string()).collect();
        assert!(matches!(make_loso(&dup), Err(Error::Argument(_))));
        let single: Vec<String> = vec!["A".to_string()];
        assert!(matches!(make_loso(&single), Err(Error::Argument(_))));
    }

    #[test]
    fn tampered_split_fails_verification() {
        let ids: Vec<String> = ["A", "B", "C"].iter().map(|s| s.to_string()).collect();
        let mut split = make_loso(&ids).unwrap();
        split.folds[0].training.push("A".to_string());
        let err = verify_loso(&split, &ids).unwrap_err();
        assert!(matches!(err, Error::SplitIntegrity(_)));
    }

    #[test]
    fn selection_rule_median_then_fraction_then_order() {
        let mk = |scores: &[f64]| summarize_cohort(scores).unwrap();
        // Clear median winner.
        let s = vec![mk(&[0.5, 0.6, 0.7]), mk(&[0.8, 0.85, 0.9])];
        assert_eq!(select_best(&s), 1);
        // Equal medians, second has more participants above 0.8.
        let s = vec![mk(&[0.7, 0.8, 0.8, 0.9]), mk(&[0.6, 0.75, 0.85, 0.85])];
        assert_eq!(s[0].median, s[1].median);
        assert_eq!(select_best(&s), 1);
        // Full tie: first listed wins.
        let s = vec![mk(&[0.7, 0.9]), mk(&[0.7, 0.9])];
        assert_eq!(select_best(&s), 0);
    }

    fn record(p: &str, s: &str, frame: usize, side: HandSide, state: u8) -> DetectionRecord {
        DetectionRecord {
            participant_id: p.to_string(),
            session_id: s.to_string(),
            frame_index: frame,
            hand_side: side,
            bbox: BoundingBox {
                x1: 0.1,
                y1: 0.1,
                x2: 0.6,
                y2: 0.7,
            },
            confidence: 0.9,
            contact_state: ContactState::from_code(state).unwrap(),
            offset: Offset {
                dx: 0.1,
                dy: 0.1,
                magnitude: 0.2,
            },
        }
    }

    /// Dataset where annotations equal the contact-state rule, so StateFrame
    /// is exact by construction.
    fn rule_perfect_dataset() -> EvalDataset {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let mut sessions = Vec::new();
        let mut annotations = Vec::new();
        for pid in ["A", "B", "C"] {
            let manifest = SessionManifest {
                participant_id: pid.to_string(),
                session_id: "S1".to_string(),
                fps: 30.0,
                frame_count: 120,
                frame_width: 720,
                frame_height: 405,
            };
            let mut records = Vec::new();
            for f in 0..120 {
                for side in [HandSide::Left, HandSide::Right] {
                    let state = rng.random_range(0..=4u8);
                    records.push(record(pid, "S1", f, side, state));
                    annotations.push(AnnotationRecord {
                        participant_id: pid.to_string(),
                        session_id: "S1".to_string(),
                        frame_index: f,
                        hand_side: side,
                        label: u8::from(state >= 3),
                    });
                }
            }
            sessions.push(SessionRecords { manifest, records });
        }
        EvalDataset {
            sessions,
            annotations,
        }
    }

    #[test]
    fn single_method_comparison_selects_it() {
        let dataset = rule_perfect_dataset();
        let cmp = compare_methods(
            &dataset,
            &[Method::StateFrame],
            &PoolingConfig::default(),
            &TrainConfig::default(),
            None,
        )
        .unwrap();
        assert_eq!(cmp.selected, 0);
        assert_eq!(cmp.f1_matrix.len(), 3);
        for row in &cmp.f1_matrix {
            assert_eq!(row, &vec![1.0]);
        }
        assert_eq!(cmp.summaries[0].median, 1.0);
    }

    #[test]
    fn identical_methods_tie_and_first_listed_wins() {
        let dataset = rule_perfect_dataset();
        let cmp = compare_methods(
            &dataset,
            &[Method::StateFrame, Method::StateFrame],
            &PoolingConfig::default(),
            &TrainConfig::default(),
            None,
        )
        .unwrap();
        assert_eq!(cmp.selected, 0);
        for row in &cmp.f1_matrix {
            assert_eq!(row[0], row[1]);
        }
        // Identical columns rank fully tied within every participant, so
        // the omnibus test over the matrix is exactly zero.
        let omnibus = crate::stats::friedman(&cmp.f1_matrix).unwrap();
        assert_eq!(omnibus.statistic, 0.0);
        assert_eq!(omnibus.p, 1.0);
    }

    /// Sessions whose contact states alternate dense and sparse 30-frame
    /// blocks, so the pooled rule output has both labels and differs from
    /// the raw rule output.
    fn block_structured_dataset() -> EvalDataset {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut sessions = Vec::new();
        for pid in ["A", "B", "C"] {
            let manifest = SessionManifest {
                participant_id: pid.to_string(),
                session_id: "S1".to_string(),
                fps: 30.0,
                frame_count: 300,
                frame_width: 720,
                frame_height: 405,
            };
            let mut records = Vec::new();
            for f in 0..300 {
                let dense = (f / 30) % 2 == 0;
                let p_object = if dense { 0.8 } else { 0.2 };
                for side in [HandSide::Left, HandSide::Right] {
                    let state = if rng.random_bool(p_object) {
                        rng.random_range(3..=4u8)
                    } else {
                        rng.random_range(0..=2u8)
                    };
                    records.push(record(pid, "S1", f, side, state));
                }
            }
            sessions.push(SessionRecords { manifest, records });
        }
        EvalDataset {
            sessions,
            annotations: Vec::new(),
        }
    }

    #[test]
    fn constructed_winner_is_selected() {
        // Annotations equal the *pooled* rule output: StatePool must win.
        let mut dataset = block_structured_dataset();
        let cfg = PoolingConfig::default();
        for session in &dataset.sessions {
            for side in [HandSide::Left, HandSide::Right] {
                let (left, right) = classify_session(
                    &session.records,
                    &session.manifest,
                    Method::StatePool,
                    None,
                    &cfg,
                )
                .unwrap();
                let pooled = if side == HandSide::Left {
                    &left
                } else {
                    &right
                };
                for (f, &bit) in pooled.bits.iter().enumerate() {
                    dataset.annotations.push(AnnotationRecord {
                        participant_id: session.manifest.participant_id.clone(),
                        session_id: session.manifest.session_id.clone(),
                        frame_index: f,
                        hand_side: side,
                        label: bit,
                    });
                }
            }
        }
        let cmp = compare_methods(
            &dataset,
            &[Method::StateFrame, Method::StatePool],
            &cfg,
            &TrainConfig::default(),
            None,
        )
        .unwrap();
        assert_eq!(cmp.methods[cmp.selected], Method::StatePool);
        assert_eq!(cmp.summaries[1].median, 1.0);
        assert!(cmp.summaries[0].median < 1.0);
    }

    #[test]
    fn matrix_columns_independent_of_method_order() {
        let dataset = rule_perfect_dataset();
        let cfg = PoolingConfig::default();
        let ab = compare_methods(
            &dataset,
            &[Method::StateFrame, Method::StatePool],
            &cfg,
            &TrainConfig::default(),
            None,
        )
        .unwrap();
        let ba = compare_methods(
            &dataset,
            &[Method::StatePool, Method::StateFrame],
            &cfg,
            &TrainConfig::default(),
            None,
        )
        .unwrap();
        for (row_ab, row_ba) in ab.f1_matrix.iter().zip(&ba.f1_matrix) {
            assert_eq!(row_ab[0], row_ba[1]);
            assert_eq!(row_ab[1], row_ba[0]);
        }
    }
}
