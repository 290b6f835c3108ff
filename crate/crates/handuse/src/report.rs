//! Correlation matrices between outcome measures and clinical scores,
//! dominant-vs-nondominant comparisons, and deterministic serialization.
//!
//! Five blocks are assembled. Bilateral measures correlate against the
//! bilateral clinical scores (UEMS total plus SCIM total and subscores);
//! each hand's unilateral measures correlate against both the bilateral
//! scores and that hand's own UEMS and GRASSP scores. Cells with fewer than
//! three joined participants, or with a constant input, are emitted with an
//! explicit marker instead of being dropped.
//!
//! CSV and heatmap outputs format numbers to 6 significant digits; the
//! json-lines format keeps full precision and round-trips exactly.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::ingest::ClinicalRecord;
use crate::measures::ParticipantMeasures;
use crate::stats::{
    quantile, spearman_with_missing, wilcoxon_signed_rank, CorrelationCell, Stars, Strength,
    TestResult,
};

/// Which measure rows meet which clinical columns.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlockTag {
    BilateralVsBilateral,
    DominantVsBilateral,
    NondominantVsBilateral,
    DominantVsUnilateral,
    NondominantVsUnilateral,
}

impl BlockTag {
    pub const ALL: [BlockTag; 5] = [
        BlockTag::BilateralVsBilateral,
        BlockTag::DominantVsBilateral,
        BlockTag::NondominantVsBilateral,
        BlockTag::DominantVsUnilateral,
        BlockTag::NondominantVsUnilateral,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            BlockTag::BilateralVsBilateral => "bilateral-vs-bilateral",
            BlockTag::DominantVsBilateral => "dominant-vs-bilateral",
            BlockTag::NondominantVsBilateral => "nondominant-vs-bilateral",
            BlockTag::DominantVsUnilateral => "dominant-vs-unilateral",
            BlockTag::NondominantVsUnilateral => "nondominant-vs-unilateral",
        }
    }

    pub fn parse(s: &str) -> Option<BlockTag> {
        BlockTag::ALL.into_iter().find(|b| b.as_str() == s)
    }

    fn uses_bilateral_scores(self) -> bool {
        matches!(
            self,
            BlockTag::BilateralVsBilateral
                | BlockTag::DominantVsBilateral
                | BlockTag::NondominantVsBilateral
        )
    }
}

const BILATERAL_SCORES: [&str; 5] = ["UEMS_tot", "SCIM_TOT", "SCIM_S", "SCIM_RS", "SCIM_M"];
const UNILATERAL_SCORES: [&str; 8] = [
    "UEMS",
    "GR-Str",
    "GR-Sens (dorsal)",
    "GR-Sens (palmar)",
    "GR-Sens",
    "GR-PA",
    "GR-PP",
    "GR-tot",
];
const MEASURE_ROWS: [&str; 3] = ["Perc", "Dur", "Num"];

/// One grid cell: a correlation, or a marker explaining its absence.
#[derive(Debug, Clone, PartialEq)]
pub enum MatrixCell {
    Value(CorrelationCell),
    /// Fewer than 3 joined participants had both values.
    InsufficientN {
        n: usize,
    },
    /// The correlation is undefined (a constant input vector).
    Undefined {
        n: usize,
    },
}

/// One correlation block in Fig.-3 shape.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix {
    pub block: BlockTag,
    pub row_labels: Vec<String>,
    pub col_labels: Vec<String>,
    /// `cells[row][col]`, dimensions matching the label vectors.
    pub cells: Vec<Vec<MatrixCell>>,
}

fn measure_values(m: &ParticipantMeasures, block: BlockTag) -> [f64; 3] {
    match block {
        BlockTag::BilateralVsBilateral => [
            m.bilateral.perc_bi,
            m.bilateral.dur_bi_s,
            m.bilateral.num_bi_per_hour,
        ],
        BlockTag::DominantVsBilateral | BlockTag::DominantVsUnilateral => {
            [m.dominant.perc, m.dominant.dur_s, m.dominant.num_per_hour]
        }
        BlockTag::NondominantVsBilateral | BlockTag::NondominantVsUnilateral => [
            m.nondominant.perc,
            m.nondominant.dur_s,
            m.nondominant.num_per_hour,
        ],
    }
}

fn clinical_value(record: &ClinicalRecord, block: BlockTag, column: usize) -> Option<f64> {
    if block.uses_bilateral_scores() {
        match column {
            0 => record.uems_total,
            1 => record.scim_total,
            2 => record.scim_selfcare,
            3 => record.scim_respiration_sphincter,
            4 => record.scim_mobility,
            _ => unreachable!(),
        }
    } else {
        let (uems, grassp) = match block {
            BlockTag::DominantVsUnilateral => (record.uems_dominant, &record.grassp_dominant),
            BlockTag::NondominantVsUnilateral => {
                (record.uems_nondominant, &record.grassp_nondominant)
            }
            _ => unreachable!(),
        };
        match column {
            0 => uems,
            1 => grassp.strength,
            2 => grassp.sens_dorsal,
            3 => grassp.sens_palmar,
            4 => grassp.sens_total,
            5 => grassp.prehension_ability,
            6 => grassp.prehension_performance,
            7 => grassp.total,
            _ => unreachable!(),
        }
    }
}

/// Build one correlation block. Participants join on id; missing clinical
/// values are dropped pairwise per cell.
pub fn correlate_block(
    measures: &[ParticipantMeasures],
    clinical: &[ClinicalRecord],
    block: BlockTag,
) -> Result<CorrelationMatrix> {
    let clinical_by_id: HashMap<&str, &ClinicalRecord> = clinical
        .iter()
        .map(|c| (c.participant_id.as_str(), c))
        .collect();
    let joined: Vec<(&ParticipantMeasures, &ClinicalRecord)> = measures
        .iter()
        .filter_map(|m| {
            clinical_by_id
                .get(m.participant_id.as_str())
                .map(|c| (m, *c))
        })
        .collect();
    let col_labels: Vec<String> = if block.uses_bilateral_scores() {
        BILATERAL_SCORES.iter().map(|s| s.to_string()).collect()
    } else {
        UNILATERAL_SCORES.iter().map(|s| s.to_string()).collect()
    };
    let mut cells = Vec::with_capacity(MEASURE_ROWS.len());
    for row in 0..MEASURE_ROWS.len() {
        let mut row_cells = Vec::with_capacity(col_labels.len());
        for col in 0..col_labels.len() {
            let xs: Vec<Option<f64>> = joined
                .iter()
                .map(|(m, _)| Some(measure_values(m, block)[row]))
                .collect();
            let ys: Vec<Option<f64>> = joined
                .iter()
                .map(|(_, c)| clinical_value(c, block, col))
                .collect();
            let n = xs
                .iter()
                .zip(&ys)
                .filter(|(a, b)| a.is_some() && b.is_some())
                .count();
            let cell = if n < 3 {
                MatrixCell::InsufficientN { n }
            } else {
                match spearman_with_missing(&xs, &ys) {
                    Ok(cell) => MatrixCell::Value(cell),
                    Err(Error::UndefinedCorrelation(_)) => MatrixCell::Undefined { n },
                    Err(other) => return Err(other),
                }
            };
            row_cells.push(cell);
        }
        cells.push(row_cells);
    }
    Ok(CorrelationMatrix {
        block,
        row_labels: MEASURE_ROWS.iter().map(|s| s.to_string()).collect(),
        col_labels,
        cells,
    })
}

/// Per-measure outcome of the dominant vs non-dominant comparison.
#[derive(Debug, Clone, PartialEq)]
pub enum DominanceOutcome {
    Test(TestResult),
    /// All paired differences were zero.
    Degenerate,
}

/// One row of the dominance table: medians and quartiles per hand plus the
/// signed-rank result.
#[derive(Debug, Clone, PartialEq)]
pub struct DominanceRow {
    pub measure: String,
    pub dom_median: f64,
    pub dom_q1: f64,
    pub dom_q3: f64,
    pub nondom_median: f64,
    pub nondom_q1: f64,
    pub nondom_q3: f64,
    pub n: usize,
    pub outcome: DominanceOutcome,
}

/// Compare dominant and non-dominant hands on Perc, Dur and Num with the
/// Wilcoxon signed-rank test (positive Z when the dominant hand is larger).
pub fn dominance_comparison(measures: &[ParticipantMeasures]) -> Result<Vec<DominanceRow>> {
    if measures.len() < 2 {
        return Err(Error::Argument(format!(
            "dominance comparison needs at least 2 participants, got {}",
            measures.len()
        )));
    }
    type HandPair = fn(&ParticipantMeasures) -> (f64, f64);
    let extract: [(&str, HandPair); 3] = [
        ("Perc", |m| (m.dominant.perc, m.nondominant.perc)),
        ("Dur", |m| (m.dominant.dur_s, m.nondominant.dur_s)),
        ("Num", |m| {
            (m.dominant.num_per_hour, m.nondominant.num_per_hour)
        }),
    ];
    let mut rows = Vec::with_capacity(3);
    for (name, f) in extract {
        let (dom, nondom): (Vec<f64>, Vec<f64>) = measures.iter().map(f).unzip();
        let outcome = match wilcoxon_signed_rank(&dom, &nondom) {
            Ok(result) => DominanceOutcome::Test(result),
            Err(Error::DegenerateSample(_)) => DominanceOutcome::Degenerate,
            Err(other) => return Err(other),
        };
        rows.push(DominanceRow {
            measure: name.to_string(),
            dom_median: quantile(&dom, 0.5)?,
            dom_q1: quantile(&dom, 0.25)?,
            dom_q3: quantile(&dom, 0.75)?,
            nondom_median: quantile(&nondom, 0.5)?,
            nondom_q1: quantile(&nondom, 0.25)?,
            nondom_q3: quantile(&nondom, 0.75)?,
            n: measures.len(),
            outcome,
        });
    }
    Ok(rows)
}

// --- serialization ----------------------------------------------------------------

/// Output encodings for matrices and tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EmitFormat {
    /// Wide grid (one row per measure), rho values only.
    Csv,
    /// One JSON object per line, full precision, round-trips exactly.
    JsonLines,
    /// Long-form rows for plotting tools.
    HeatmapData,
}

impl EmitFormat {
    pub fn parse(s: &str) -> Option<EmitFormat> {
        match s {
            "csv" => Some(EmitFormat::Csv),
            "json-lines" => Some(EmitFormat::JsonLines),
            "heatmap-data" => Some(EmitFormat::HeatmapData),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            EmitFormat::Csv => "csv",
            EmitFormat::JsonLines => "json-lines",
            EmitFormat::HeatmapData => "heatmap-data",
        }
    }
}

/// Format a float to 6 significant digits, positional where reasonable,
/// scientific otherwise, trailing zeros stripped. Deterministic for a given
/// input.
pub fn fmt_sig6(value: f64) -> String {
    debug_assert!(value.is_finite());
    if value == 0.0 {
        return "0".to_string();
    }
    let formatted = format!("{:.5e}", value);
    let (mantissa, exponent) = formatted.split_once('e').expect("exponential format");
    let exponent: i32 = exponent.parse().expect("exponent");
    let negative = mantissa.starts_with('-');
    let digits: String = mantissa.chars().filter(|c| c.is_ascii_digit()).collect();
    debug_assert_eq!(digits.len(), 6);
    let body = if (-4..=8).contains(&exponent) {
        let mut s = String::new();
        if exponent >= 0 {
            let point = exponent as usize + 1;
            s.push_str(&digits[..point.min(6)]);
            if point > 6 {
                s.push_str(&"0".repeat(point - 6));
            }
            if point < 6 {
                s.push('.');
                s.push_str(&digits[point..]);
            }
        } else {
            s.push_str("0.");
            s.push_str(&"0".repeat((-exponent - 1) as usize));
            s.push_str(&digits);
        }
        trim_fraction(s)
    } else {
        let trimmed = trim_fraction(format!("{}.{}", &digits[..1], &digits[1..]));
        format!("{trimmed}e{exponent}")
    };
    if negative {
        format!("-{body}")
    } else {
        body
    }
}

fn trim_fraction(mut s: String) -> String {
    if s.contains('.') {
        while s.ends_with('0') {
            s.pop();
        }
        if s.ends_with('.') {
            s.pop();
        }
    }
    s
}

pub const HEATMAP_HEADER: &str = "row_label,col_label,rho,p,n,stars,strength";

/// Serialize a correlation matrix.
pub fn emit_matrix(matrix: &CorrelationMatrix, format: EmitFormat) -> Result<Vec<u8>> {
    let mut out = String::new();
    match format {
        EmitFormat::Csv => {
            out.push_str("measure");
            for col in &matrix.col_labels {
                out.push(',');
                out.push_str(col);
            }
            out.push('\n');
            for (row_label, row) in matrix.row_labels.iter().zip(&matrix.cells) {
                out.push_str(row_label);
                for cell in row {
                    out.push(',');
                    match cell {
                        MatrixCell::Value(c) => out.push_str(&fmt_sig6(c.rho)),
                        MatrixCell::InsufficientN { .. } => out.push_str("NA(n<3)"),
                        MatrixCell::Undefined { .. } => out.push_str("NA(undefined)"),
                    }
                }
                out.push('\n');
            }
        }
        EmitFormat::HeatmapData => {
            out.push_str(HEATMAP_HEADER);
            out.push('\n');
            for (row_label, row) in matrix.row_labels.iter().zip(&matrix.cells) {
                for (col_label, cell) in matrix.col_labels.iter().zip(row) {
                    let line = match cell {
                        MatrixCell::Value(c) => format!(
                            "{},\"{}\",{},{},{},{},{}\n",
                            row_label,
                            col_label,
                            fmt_sig6(c.rho),
                            fmt_sig6(c.p),
                            c.n,
                            c.stars.as_str(),
                            c.strength.as_str()
                        ),
                        MatrixCell::InsufficientN { n } => {
                            format!("{row_label},\"{col_label}\",NA,NA,{n},,insufficient-n\n")
                        }
                        MatrixCell::Undefined { n } => {
                            format!("{row_label},\"{col_label}\",NA,NA,{n},,undefined\n")
                        }
                    };
                    out.push_str(&line);
                }
            }
        }
        EmitFormat::JsonLines => {
            let header = serde_json::json!({
                "type": "matrix",
                "block": matrix.block.as_str(),
                "rows": matrix.row_labels,
                "cols": matrix.col_labels,
            });
            out.push_str(&header.to_string());
            out.push('\n');
            for (row_label, row) in matrix.row_labels.iter().zip(&matrix.cells) {
                for (col_label, cell) in matrix.col_labels.iter().zip(row) {
                    let value = match cell {
                        MatrixCell::Value(c) => serde_json::json!({
                            "type": "cell",
                            "row": row_label,
                            "col": col_label,
                            "status": "ok",
                            "rho": c.rho,
                            "p": c.p,
                            "n": c.n,
                            "stars": c.stars.as_str(),
                            "strength": c.strength.as_str(),
                        }),
                        MatrixCell::InsufficientN { n } => serde_json::json!({
                            "type": "cell",
                            "row": row_label,
                            "col": col_label,
                            "status": "insufficient-n",
                            "n": n,
                        }),
                        MatrixCell::Undefined { n } => serde_json::json!({
                            "type": "cell",
                            "row": row_label,
                            "col": col_label,
                            "status": "undefined",
                            "n": n,
                        }),
                    };
                    out.push_str(&value.to_string());
                    out.push('\n');
                }
            }
        }
    }
    Ok(out.into_bytes())
}

/// Parse a matrix back from its json-lines form. Exact inverse of
/// [`emit_matrix`] with [`EmitFormat::JsonLines`].
pub fn parse_matrix_json_lines(bytes: &[u8]) -> Result<CorrelationMatrix> {
    let text = std::str::from_utf8(bytes).map_err(|e| Error::Parse {
        line: 0,
        message: e.to_string(),
    })?;
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or_else(|| Error::Parse {
        line: 1,
        message: "empty json-lines matrix".to_string(),
    })?;
    let header: serde_json::Value = serde_json::from_str(header).map_err(|e| Error::Parse {
        line: 1,
        message: e.to_string(),
    })?;
    let block = header["block"]
        .as_str()
        .and_then(BlockTag::parse)
        .ok_or_else(|| Error::Parse {
            line: 1,
            message: "missing or unknown block tag".to_string(),
        })?;
    let labels = |key: &str| -> Result<Vec<String>> {
        header[key]
            .as_array()
            .map(|a| {
                a.iter()
                    .filter_map(|v| v.as_str().map(str::to_string))
                    .collect()
            })
            .ok_or_else(|| Error::Parse {
                line: 1,
                message: format!("missing '{key}' labels"),
            })
    };
    let row_labels = labels("rows")?;
    let col_labels = labels("cols")?;
    let mut cells =
        vec![vec![MatrixCell::InsufficientN { n: 0 }; col_labels.len()]; row_labels.len()];
    for (idx, line) in lines {
        if line.is_empty() {
            continue;
        }
        let v: serde_json::Value = serde_json::from_str(line).map_err(|e| Error::Parse {
            line: idx + 1,
            message: e.to_string(),
        })?;
        let find = |labels: &[String], key: &str| -> Result<usize> {
            let name = v[key].as_str().unwrap_or_default();
            labels
                .iter()
                .position(|l| l == name)
                .ok_or_else(|| Error::Parse {
                    line: idx + 1,
                    message: format!("unknown {key} label '{name}'"),
                })
        };
        let row = find(&row_labels, "row")?;
        let col = find(&col_labels, "col")?;
        let n = v["n"].as_u64().unwrap_or(0) as usize;
        let cell = match v["status"].as_str() {
            Some("ok") => {
                let rho = v["rho"].as_f64().ok_or_else(|| Error::Parse {
                    line: idx + 1,
                    message: "missing rho".to_string(),
                })?;
                let p = v["p"].as_f64().ok_or_else(|| Error::Parse {
                    line: idx + 1,
                    message: "missing p".to_string(),
                })?;
                let stars =
                    v["stars"]
                        .as_str()
                        .and_then(Stars::parse)
                        .ok_or_else(|| Error::Parse {
                            line: idx + 1,
                            message: "bad stars".to_string(),
                        })?;
                let strength = v["strength"]
                    .as_str()
                    .and_then(Strength::parse)
                    .ok_or_else(|| Error::Parse {
                        line: idx + 1,
                        message: "bad strength".to_string(),
                    })?;
                MatrixCell::Value(CorrelationCell {
                    rho,
                    p,
                    n,
                    strength,
                    stars,
                })
            }
            Some("insufficient-n") => MatrixCell::InsufficientN { n },
            Some("undefined") => MatrixCell::Undefined { n },
            other => {
                return Err(Error::Parse {
                    line: idx + 1,
                    message: format!("unknown cell status {other:?}"),
                })
            }
        };
        cells[row][col] = cell;
    }
    Ok(CorrelationMatrix {
        block,
        row_labels,
        col_labels,
        cells,
    })
}

pub const DOMINANCE_HEADER: &str =
    "measure,dom_median,dom_q1,dom_q3,nondom_median,nondom_q1,nondom_q3,z,p,n,status";

/// Serialize the dominance table. The heatmap format only applies to
/// matrices and is rejected here.
pub fn emit_dominance(rows: &[DominanceRow], format: EmitFormat) -> Result<Vec<u8>> {
    let mut out = String::new();
    match format {
        EmitFormat::HeatmapData => {
            return Err(Error::Argument(
                "heatmap-data applies to correlation matrices only".to_string(),
            ))
        }
        EmitFormat::Csv => {
            out.push_str(DOMINANCE_HEADER);
            out.push('\n');
            for row in rows {
                let (z, p, status) = match &row.outcome {
                    DominanceOutcome::Test(t) => {
                        (fmt_sig6(t.statistic), fmt_sig6(t.p), "ok".to_string())
                    }
                    DominanceOutcome::Degenerate => {
                        ("NA".to_string(), "NA".to_string(), "degenerate".to_string())
                    }
                };
                out.push_str(&format!(
                    "{},{},{},{},{},{},{},{},{},{},{}\n",
                    row.measure,
                    fmt_sig6(row.dom_median),
                    fmt_sig6(row.dom_q1),
                    fmt_sig6(row.dom_q3),
                    fmt_sig6(row.nondom_median),
                    fmt_sig6(row.nondom_q1),
                    fmt_sig6(row.nondom_q3),
                    z,
                    p,
                    row.n,
                    status
                ));
            }
        }
        EmitFormat::JsonLines => {
            for row in rows {
                let value = match &row.outcome {
                    DominanceOutcome::Test(t) => serde_json::json!({
                        "type": "dominance",
                        "measure": row.measure,
                        "dom": {"median": row.dom_median, "q1": row.dom_q1, "q3": row.dom_q3},
                        "nondom": {"median": row.nondom_median, "q1": row.nondom_q1, "q3": row.nondom_q3},
                        "z": t.statistic,
                        "p": t.p,
                        "n": row.n,
                        "status": "ok",
                    }),
                    DominanceOutcome::Degenerate => serde_json::json!({
                        "type": "dominance",
                        "measure": row.measure,
                        "dom": {"median": row.dom_median, "q1": row.dom_q1, "q3": row.dom_q3},
                        "nondom": {"median": row.nondom_median, "q1": row.nondom_q1, "q3": row.nondom_q3},
                        "n": row.n,
                        "status": "degenerate",
                    }),
                };
                out.push_str(&value.to_string());
                out.push('\n');
            }
        }
    }
    Ok(out.into_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::GrasspScores;
    use crate::measures::{BilateralMeasures, HandUseMeasures};
    use crate::stats::stars_for_p;

    fn hand_measures(perc: f64, dur_s: f64, num: f64) -> HandUseMeasures {
        HandUseMeasures {
            perc,
            dur_s,
            num_per_hour: num,
            event_count: 10,
            total_time_s: 3600.0,
            interaction_time_s: perc * 3600.0,
            empty: false,
        }
    }

    fn participant(id: &str, perc_dom: f64, perc_nondom: f64) -> ParticipantMeasures {
        let dominant = hand_measures(perc_dom, 20.0 + perc_dom * 10.0, 90.0 + perc_dom * 40.0);
        let nondominant = hand_measures(
            perc_nondom,
            15.0 + perc_nondom * 10.0,
            100.0 + perc_nondom * 40.0,
        );
        ParticipantMeasures {
            participant_id: id.to_string(),
            bilateral: BilateralMeasures {
                perc_bi: (dominant.perc + nondominant.perc) / 2.0,
                dur_bi_s: dominant.dur_s + nondominant.dur_s,
                num_bi_per_hour: dominant.num_per_hour + nondominant.num_per_hour,
            },
            dominant,
            nondominant,
        }
    }

    fn clinical(id: &str, uems_total: f64) -> ClinicalRecord {
        let grassp = GrasspScores {
            strength: Some(uems_total),
            sens_dorsal: Some(10.0),
            sens_palmar: Some(8.0),
            sens_total: Some(18.0),
            prehension_ability: Some(9.0),
            prehension_performance: Some(20.0),
            total: Some(uems_total + 47.0),
        };
        ClinicalRecord {
            participant_id: id.to_string(),
            uems_dominant: Some(uems_total / 2.0),
            uems_nondominant: Some(uems_total / 2.0),
            uems_total: Some(uems_total),
            grassp_dominant: grassp,
            grassp_nondominant: grassp,
            scim_selfcare: Some(12.0),
            scim_respiration_sphincter: Some(25.0),
            scim_mobility: Some(uems_total / 2.0 + 1.0),
            scim_total: Some(38.0 + uems_total / 2.0),
        }
    }

    fn cohort(n: usize) -> (Vec<ParticipantMeasures>, Vec<ClinicalRecord>) {
        let measures: Vec<ParticipantMeasures> = (0..n)
            .map(|i| {
                let perc = 0.3 + 0.05 * i as f64;
                participant(&format!("P{i:02}"), perc, perc - 0.1)
            })
            .collect();
        let clinical: Vec<ClinicalRecord> = (0..n)
            .map(|i| clinical(&format!("P{i:02}"), 20.0 + 2.0 * i as f64))
            .collect();
        (measures, clinical)
    }

    #[test]
    fn bilateral_block_is_3_by_5() {
        let (measures, clin) = cohort(8);
        let matrix = correlate_block(&measures, &clin, BlockTag::BilateralVsBilateral).unwrap();
        assert_eq!(matrix.row_labels, vec!["Perc", "Dur", "Num"]);
        assert_eq!(matrix.col_labels.len(), 5);
        assert_eq!(matrix.cells.len(), 3);
        assert!(matrix.cells.iter().all(|r| r.len() == 5));
    }

    #[test]
    fn unilateral_blocks_are_3_by_8() {
        let (measures, clin) = cohort(8);
        for block in [
            BlockTag::DominantVsUnilateral,
            BlockTag::NondominantVsUnilateral,
        ] {
            let matrix = correlate_block(&measures, &clin, block).unwrap();
            assert_eq!(matrix.col_labels.len(), 8);
            assert_eq!(matrix.cells.len(), 3);
            assert!(matrix.cells.iter().all(|r| r.len() == 8));
        }
    }

    #[test]
    fn monotone_link_gives_rho_one() {
        // Perc rises strictly with UEMS_tot across the cohort by
        // construction, so that cell must be exactly 1 with p = 0.
        let (measures, clin) = cohort(10);
        let matrix = correlate_block(&measures, &clin, BlockTag::BilateralVsBilateral).unwrap();
        match &matrix.cells[0][0] {
            MatrixCell::Value(cell) => {
                assert_eq!(cell.rho, 1.0);
                assert_eq!(cell.p, 0.0);
                assert_eq!(cell.stars, Stars::Three);
                assert_eq!(cell.n, 10);
            }
            other => panic!("expected value cell, got {other:?}"),
        }
    }

    #[test]
    fn sparse_column_marks_insufficient_n() {
        let (measures, mut clin) = cohort(6);
        for record in clin.iter_mut().skip(2) {
            record.uems_total = None;
        }
        let matrix = correlate_block(&measures, &clin, BlockTag::BilateralVsBilateral).unwrap();
        match &matrix.cells[0][0] {
            MatrixCell::InsufficientN { n } => assert_eq!(*n, 2),
            other => panic!("expected insufficient-n cell, got {other:?}"),
        }
        // Other columns remain intact.
        assert!(matches!(matrix.cells[0][1], MatrixCell::Value(_)));
    }

    #[test]
    fn constant_column_marks_undefined() {
        let (measures, mut clin) = cohort(6);
        for record in clin.iter_mut() {
            record.uems_total = Some(30.0);
        }
        let matrix = correlate_block(&measures, &clin, BlockTag::BilateralVsBilateral).unwrap();
        assert!(matches!(matrix.cells[0][0], MatrixCell::Undefined { n: 6 }));
    }

    #[test]
    fn cell_depends_only_on_its_column() {
        let (measures, clin) = cohort(7);
        let before = correlate_block(&measures, &clin, BlockTag::BilateralVsBilateral).unwrap();
        let mut perturbed = clin.clone();
        for record in perturbed.iter_mut() {
            record.scim_mobility = record.scim_mobility.map(|v| v + 7.0);
        }
        let after = correlate_block(&measures, &perturbed, BlockTag::BilateralVsBilateral).unwrap();
        // UEMS_tot column untouched by the SCIM_M perturbation.
        assert_eq!(before.cells[0][0], after.cells[0][0]);
        assert_eq!(before.cells[1][0], after.cells[1][0]);
        assert_eq!(before.cells[2][0], after.cells[2][0]);
    }

    #[test]
    fn dominance_table_shape_and_direction() {
        // Dominant perc = nondominant perc + 0.1 across 8 participants.
        let measures: Vec<ParticipantMeasures> = (0..8)
            .map(|i| {
                let perc = 0.3 + 0.04 * i as f64;
                participant(&format!("P{i:02}"), perc + 0.1, perc)
            })
            .collect();
        let rows = dominance_comparison(&measures).unwrap();
        assert_eq!(rows.len(), 3);
        assert_eq!(rows[0].measure, "Perc");
        match &rows[0].outcome {
            DominanceOutcome::Test(t) => {
                assert!(t.statistic > 0.0);
                // Exact p for a constant positive shift: 2 / 2^8.
                assert!(t.p < 0.05);
                assert!((t.p - 2.0 / 256.0).abs() < 1e-12);
            }
            other => panic!("expected test outcome, got {other:?}"),
        }
        assert!(rows[0].dom_median > rows[0].nondom_median);
    }

    #[test]
    fn identical_hands_surface_degenerate_per_measure() {
        let measures: Vec<ParticipantMeasures> = (0..5)
            .map(|i| {
                let perc = 0.3 + 0.05 * i as f64;
                participant(&format!("P{i:02}"), perc, perc)
            })
            .collect();
        // Force both hands identical on every measure.
        let measures: Vec<ParticipantMeasures> = measures
            .into_iter()
            .map(|mut m| {
                m.nondominant = m.dominant.clone();
                m
            })
            .collect();
        let rows = dominance_comparison(&measures).unwrap();
        for row in rows {
            assert_eq!(row.outcome, DominanceOutcome::Degenerate);
        }
    }

    #[test]
    fn heatmap_emits_one_row_per_cell() {
        let (measures, clin) = cohort(6);
        let matrix = correlate_block(&measures, &clin, BlockTag::BilateralVsBilateral).unwrap();
        let bytes = emit_matrix(&matrix, EmitFormat::HeatmapData).unwrap();
        let text = String::from_utf8(bytes).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], HEATMAP_HEADER);
        assert_eq!(lines.len() - 1, 15);
    }

    #[test]
    fn json_lines_round_trip_is_identity() {
        let (measures, mut clin) = cohort(6);
        // Mix in marker cells.
        for record in clin.iter_mut().skip(2) {
            record.scim_selfcare = None;
        }
        for record in clin.iter_mut() {
            record.scim_mobility = Some(9.0);
        }
        for block in BlockTag::ALL {
            let matrix = correlate_block(&measures, &clin, block).unwrap();
            let bytes = emit_matrix(&matrix, EmitFormat::JsonLines).unwrap();
            let parsed = parse_matrix_json_lines(&bytes).unwrap();
            assert_eq!(parsed, matrix);
        }
    }

    #[test]
    fn emission_is_deterministic() {
        let (measures, clin) = cohort(6);
        let matrix = correlate_block(&measures, &clin, BlockTag::DominantVsUnilateral).unwrap();
        for format in [
            EmitFormat::Csv,
            EmitFormat::JsonLines,
            EmitFormat::HeatmapData,
        ] {
            assert_eq!(
                emit_matrix(&matrix, format).unwrap(),
                emit_matrix(&matrix, format).unwrap()
            );
        }
    }

    #[test]
    fn dominance_rejects_heatmap_format() {
        let measures: Vec<ParticipantMeasures> = (0..4)
            .map(|i| participant(&format!("P{i}"), 0.5 + 0.01 * i as f64, 0.4))
            .collect();
        let rows = dominance_comparison(&measures).unwrap();
        assert!(matches!(
            emit_dominance(&rows, EmitFormat::HeatmapData),
            Err(Error::Argument(_))
        ));
        assert!(emit_dominance(&rows, EmitFormat::Csv).is_ok());
    }

    #[test]
    fn stars_render_at_thresholds() {
        assert_eq!(stars_for_p(0.0005).as_str(), "***");
        assert_eq!(stars_for_p(0.005).as_str(), "**");
        assert_eq!(stars_for_p(0.02).as_str(), "*");
        assert_eq!(stars_for_p(0.2).as_str(), "");
    }

    #[test]
    fn sig6_formatting() {
        assert_eq!(fmt_sig6(0.0), "0");
        assert_eq!(fmt_sig6(1.0), "1");
        assert_eq!(fmt_sig6(0.5), "0.5");
        assert_eq!(fmt_sig6(-0.654321), "-0.654321");
        assert_eq!(fmt_sig6(0.1234564), "0.123456");
        assert_eq!(fmt_sig6(123456.7), "123457");
        assert_eq!(fmt_sig6(0.000523), "0.000523");
        assert_eq!(fmt_sig6(5.23e-7), "5.23e-7");
        assert_eq!(fmt_sig6(3.0e9), "3e9");
        assert_eq!(fmt_sig6(2.0 / 3.0), "0.666667");
    }
}
