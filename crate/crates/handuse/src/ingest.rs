//! Parsing and validation of all external inputs.
//!
//! Four file formats come in: per-session detection records (line-delimited,
//! fixed field order), session manifests (key=value lines), frame-level
//! annotations and clinical scores (CSV with header). Everything is validated
//! against the domain invariants on the way in and never altered beyond that;
//! missing clinical fields stay missing.
//!
//! The exact grammars live in `docs/formats.md` together with sample
//! fixtures.

use std::collections::HashMap;
use std::fmt;
use std::io::BufRead;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which hand a record refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum HandSide {
    Left,
    Right,
}

impl HandSide {
    pub fn as_str(self) -> &'static str {
        match self {
            HandSide::Left => "left",
            HandSide::Right => "right",
        }
    }

    pub fn parse(s: &str) -> Option<HandSide> {
        match s {
            "left" => Some(HandSide::Left),
            "right" => Some(HandSide::Right),
            _ => None,
        }
    }

    pub fn other(self) -> HandSide {
        match self {
            HandSide::Left => HandSide::Right,
            HandSide::Right => HandSide::Left,
        }
    }
}

impl fmt::Display for HandSide {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// The upstream detector's five-way contact label for a detected hand.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ContactState {
    NoContact = 0,
    SelfContact = 1,
    OtherPerson = 2,
    NonPortableObject = 3,
    PortableObject = 4,
}

impl ContactState {
    pub fn from_code(code: u8) -> Option<ContactState> {
        match code {
            0 => Some(ContactState::NoContact),
            1 => Some(ContactState::SelfContact),
            2 => Some(ContactState::OtherPerson),
            3 => Some(ContactState::NonPortableObject),
            4 => Some(ContactState::PortableObject),
            _ => None,
        }
    }

    pub fn code(self) -> u8 {
        self as u8
    }
}

/// Hand bounding box, normalized to [0,1] by the frame dimensions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub x1: f64,
    pub y1: f64,
    pub x2: f64,
    pub y2: f64,
}

/// Hand-to-object offset predicted by the detector. `magnitude` is a
/// fraction of the frame diagonal; `dx`/`dy` are dimensionless direction
/// components.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Offset {
    pub dx: f64,
    pub dy: f64,
    pub magnitude: f64,
}

/// One hand observation in one frame: the nine detector features plus
/// identity keys.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionRecord {
    pub participant_id: String,
    pub session_id: String,
    pub frame_index: usize,
    pub hand_side: HandSide,
    pub bbox: BoundingBox,
    pub confidence: f64,
    pub contact_state: ContactState,
    pub offset: Offset,
}

impl DetectionRecord {
    /// Check every field-level invariant. Returns the offending field name
    /// on failure.
    pub fn validate(&self) -> Result<()> {
        validate_id("participant_id", &self.participant_id)?;
        validate_id("session_id", &self.session_id)?;
        let b = &self.bbox;
        for (name, v) in [("x1", b.x1), ("y1", b.y1), ("x2", b.x2), ("y2", b.y2)] {
            if !v.is_finite() || !(0.0..=1.0).contains(&v) {
                return Err(invalid(name, format!("{v} is outside [0,1]")));
            }
        }
        if b.x1 >= b.x2 {
            return Err(invalid("x2", format!("x1={} must be < x2={}", b.x1, b.x2)));
        }
        if b.y1 >= b.y2 {
            return Err(invalid("y2", format!("y1={} must be < y2={}", b.y1, b.y2)));
        }
        if !self.confidence.is_finite() || !(0.0..=1.0).contains(&self.confidence) {
            return Err(invalid(
                "confidence",
                format!("{} is outside [0,1]", self.confidence),
            ));
        }
        if !self.offset.dx.is_finite() || !self.offset.dy.is_finite() {
            return Err(invalid("offset", "dx/dy must be finite".to_string()));
        }
        if !self.offset.magnitude.is_finite() || self.offset.magnitude < 0.0 {
            return Err(invalid(
                "magnitude",
                format!("{} must be >= 0", self.offset.magnitude),
            ));
        }
        Ok(())
    }
}

/// Recording metadata for one session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionManifest {
    pub participant_id: String,
    pub session_id: String,
    pub fps: f64,
    pub frame_count: usize,
    pub frame_width: u32,
    pub frame_height: u32,
}

pub const DEFAULT_FPS: f64 = 30.0;
pub const DEFAULT_FRAME_WIDTH: u32 = 720;
pub const DEFAULT_FRAME_HEIGHT: u32 = 405;

impl SessionManifest {
    pub fn validate(&self) -> Result<()> {
        validate_id("participant_id", &self.participant_id)?;
        validate_id("session_id", &self.session_id)?;
        if !self.fps.is_finite() || self.fps <= 0.0 {
            return Err(invalid("fps", format!("{} must be > 0", self.fps)));
        }
        if self.frame_count == 0 {
            return Err(invalid("frame_count", "must be > 0".to_string()));
        }
        if self.frame_width == 0 || self.frame_height == 0 {
            return Err(invalid("frame_width", "dimensions must be > 0".to_string()));
        }
        Ok(())
    }
}

/// Hand-dominance metadata for one participant. Both the post-injury and
/// pre-injury dominant sides are carried explicitly; all measures use the
/// post-injury side.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParticipantProfile {
    pub participant_id: String,
    pub dominant_side_post_injury: HandSide,
    pub dominant_side_pre_injury: HandSide,
}

/// A manually annotated frame: 1 = functional hand-object interaction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotationRecord {
    pub participant_id: String,
    pub session_id: String,
    pub frame_index: usize,
    pub hand_side: HandSide,
    pub label: u8,
}

/// Per-hand GRASSP subscores. All optional; maxima are not validated because
/// the subscale ranges are instrument-specific — only nonnegativity and the
/// sensation-sum identity are enforced.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct GrasspScores {
    pub strength: Option<f64>,
    pub sens_dorsal: Option<f64>,
    pub sens_palmar: Option<f64>,
    pub sens_total: Option<f64>,
    pub prehension_ability: Option<f64>,
    pub prehension_performance: Option<f64>,
    pub total: Option<f64>,
}

/// Clinical assessment scores for one participant. Missing fields are
/// preserved as `None` and excluded pairwise from downstream correlations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClinicalRecord {
    pub participant_id: String,
    pub uems_dominant: Option<f64>,
    pub uems_nondominant: Option<f64>,
    pub uems_total: Option<f64>,
    pub grassp_dominant: GrasspScores,
    pub grassp_nondominant: GrasspScores,
    pub scim_selfcare: Option<f64>,
    pub scim_respiration_sphincter: Option<f64>,
    pub scim_mobility: Option<f64>,
    pub scim_total: Option<f64>,
}

const SUM_TOLERANCE: f64 = 1e-9;

impl ClinicalRecord {
    pub fn validate(&self) -> Result<()> {
        validate_id("participant_id", &self.participant_id)?;
        check_score_range("uems_dominant", self.uems_dominant, 25.0)?;
        check_score_range("uems_nondominant", self.uems_nondominant, 25.0)?;
        check_score_range("uems_total", self.uems_total, 50.0)?;
        if let (Some(d), Some(n), Some(t)) =
            (self.uems_dominant, self.uems_nondominant, self.uems_total)
        {
            if (d + n - t).abs() > SUM_TOLERANCE {
                return Err(invalid(
                    "uems_total",
                    format!("{t} != uems_dominant {d} + uems_nondominant {n}"),
                ));
            }
        }
        for (hand, g) in [
            ("dom", &self.grassp_dominant),
            ("nondom", &self.grassp_nondominant),
        ] {
            for (name, v) in [
                ("gr_str", g.strength),
                ("gr_sens_dorsal", g.sens_dorsal),
                ("gr_sens_palmar", g.sens_palmar),
                ("gr_sens", g.sens_total),
                ("gr_pa", g.prehension_ability),
                ("gr_pp", g.prehension_performance),
                ("gr_tot", g.total),
            ] {
                check_nonnegative(&format!("{name}_{hand}"), v)?;
            }
            if let (Some(d), Some(p), Some(t)) = (g.sens_dorsal, g.sens_palmar, g.sens_total) {
                if (d + p - t).abs() > SUM_TOLERANCE {
                    return Err(invalid(
                        &format!("gr_sens_{hand}"),
                        format!("{t} != dorsal {d} + palmar {p}"),
                    ));
                }
            }
        }
        check_nonnegative("scim_s", self.scim_selfcare)?;
        check_nonnegative("scim_rs", self.scim_respiration_sphincter)?;
        check_nonnegative("scim_m", self.scim_mobility)?;
        check_score_range("scim_total", self.scim_total, 100.0)?;
        Ok(())
    }
}

fn invalid(field: &str, message: String) -> Error {
    Error::Validation {
        field: field.to_string(),
        message,
    }
}

fn check_nonnegative(field: &str, v: Option<f64>) -> Result<()> {
    if let Some(v) = v {
        if !v.is_finite() || v < 0.0 {
            return Err(invalid(field, format!("{v} must be >= 0")));
        }
    }
    Ok(())
}

fn check_score_range(field: &str, v: Option<f64>, max: f64) -> Result<()> {
    if let Some(v) = v {
        if !v.is_finite() || v < 0.0 || v > max {
            return Err(invalid(field, format!("{v} is outside [0,{max}]")));
        }
    }
    Ok(())
}

/// Identifiers appear in file names and CSV cells, so the charset is locked
/// down: ASCII alphanumeric plus `-`, starting alphanumeric.
pub fn validate_id(field: &str, id: &str) -> Result<()> {
    let mut chars = id.chars();
    let ok = match chars.next() {
        Some(c) if c.is_ascii_alphanumeric() => {
            chars.all(|c| c.is_ascii_alphanumeric() || c == '-')
        }
        _ => false,
    };
    if ok {
        Ok(())
    } else {
        Err(invalid(
            field,
            format!("'{id}' must match [A-Za-z0-9][A-Za-z0-9-]*"),
        ))
    }
}

// --- detections ------------------------------------------------------------

pub const DETECTION_FIELDS: usize = 13;

/// Parse a line-delimited detection stream for one session.
///
/// Each line holds, comma-separated:
/// `participant_id,session_id,frame_index,hand_side,x1,y1,x2,y2,confidence,contact_state,dx,dy,magnitude`
///
/// Every record is invariant-checked, must belong to the manifest's session,
/// and must have `frame_index < manifest.frame_count`. Empty lines are
/// skipped, so an empty stream yields an empty sequence.
pub fn parse_detections<R: BufRead>(
    reader: R,
    manifest: &SessionManifest,
) -> Result<Vec<DetectionRecord>> {
    let mut records = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if line.is_empty() {
            continue;
        }
        let record = parse_detection_line(&line, idx + 1)?;
        record.validate()?;
        if record.participant_id != manifest.participant_id {
            return Err(invalid(
                "participant_id",
                format!(
                    "line {}: '{}' does not match manifest '{}'",
                    idx + 1,
                    record.participant_id,
                    manifest.participant_id
                ),
            ));
        }
        if record.session_id != manifest.session_id {
            return Err(invalid(
                "session_id",
                format!(
                    "line {}: '{}' does not match manifest '{}'",
                    idx + 1,
                    record.session_id,
                    manifest.session_id
                ),
            ));
        }
        if record.frame_index >= manifest.frame_count {
            return Err(Error::Range(format!(
                "line {}: frame_index {} >= frame_count {}",
                idx + 1,
                record.frame_index,
                manifest.frame_count
            )));
        }
        records.push(record);
    }
    Ok(records)
}

fn parse_detection_line(line: &str, line_no: usize) -> Result<DetectionRecord> {
    let parts: Vec<&str> = line.split(',').collect();
    if parts.len() != DETECTION_FIELDS {
        return Err(Error::Parse {
            line: line_no,
            message: format!("expected {DETECTION_FIELDS} fields, found {}", parts.len()),
        });
    }
    let num = |i: usize, name: &str| -> Result<f64> {
        parts[i].parse::<f64>().map_err(|_| Error::Parse {
            line: line_no,
            message: format!("field '{name}': cannot parse '{}' as a number", parts[i]),
        })
    };
    let frame_index: usize = parts[2].parse().map_err(|_| Error::Parse {
        line: line_no,
        message: format!(
            "field 'frame_index': cannot parse '{}' as an integer",
            parts[2]
        ),
    })?;
    let hand_side = HandSide::parse(parts[3]).ok_or_else(|| Error::Parse {
        line: line_no,
        message: format!(
            "field 'hand_side': expected left|right, found '{}'",
            parts[3]
        ),
    })?;
    let state_code: u8 = parts[9].parse().map_err(|_| Error::Parse {
        line: line_no,
        message: format!(
            "field 'contact_state': cannot parse '{}' as an integer",
            parts[9]
        ),
    })?;
    let contact_state = ContactState::from_code(state_code).ok_or_else(|| {
        invalid(
            "contact_state",
            format!("line {line_no}: {state_code} is outside 0..=4"),
        )
    })?;
    Ok(DetectionRecord {
        participant_id: parts[0].to_string(),
        session_id: parts[1].to_string(),
        frame_index,
        hand_side,
        bbox: BoundingBox {
            x1: num(4, "x1")?,
            y1: num(5, "y1")?,
            x2: num(6, "x2")?,
            y2: num(7, "y2")?,
        },
        confidence: num(8, "confidence")?,
        contact_state,
        offset: Offset {
            dx: num(10, "dx")?,
            dy: num(11, "dy")?,
            magnitude: num(12, "magnitude")?,
        },
    })
}

/// Serialize one detection record to its line format. Floats use Rust's
/// shortest round-trip representation, so `parse(serialize(x)) == x`.
pub fn serialize_detection(r: &DetectionRecord) -> String {
    format!(
        "{},{},{},{},{},{},{},{},{},{},{},{},{}",
        r.participant_id,
        r.session_id,
        r.frame_index,
        r.hand_side,
        r.bbox.x1,
        r.bbox.y1,
        r.bbox.x2,
        r.bbox.y2,
        r.confidence,
        r.contact_state.code(),
        r.offset.dx,
        r.offset.dy,
        r.offset.magnitude
    )
}

/// Keep at most one record per (frame, hand): the one with maximal
/// confidence, ties broken by first occurrence in input order. Output
/// preserves the first-occurrence order of each (frame, hand) key.
pub fn dedupe_per_frame(records: Vec<DetectionRecord>) -> Vec<DetectionRecord> {
    let mut slot: HashMap<(usize, HandSide), usize> = HashMap::new();
    let mut kept: Vec<DetectionRecord> = Vec::with_capacity(records.len());
    for record in records {
        let key = (record.frame_index, record.hand_side);
        match slot.get(&key) {
            Some(&i) => {
                if record.confidence > kept[i].confidence {
                    kept[i] = record;
                }
            }
            None => {
                slot.insert(key, kept.len());
                kept.push(record);
            }
        }
    }
    kept
}

// --- manifest ---------------------------------------------------------------

/// Parse a session manifest: one `key=value` per line.
///
/// Required keys: `participant_id`, `session_id`, `frame_count`. Optional:
/// `fps` (default 30), `frame_width` (default 720), `frame_height`
/// (default 405).
pub fn parse_manifest<R: BufRead>(reader: R) -> Result<SessionManifest> {
    let mut values: HashMap<String, String> = HashMap::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
            line: idx + 1,
            message: format!("expected key=value, found '{line}'"),
        })?;
        if !matches!(
            key,
            "participant_id"
                | "session_id"
                | "fps"
                | "frame_count"
                | "frame_width"
                | "frame_height"
        ) {
            return Err(Error::Parse {
                line: idx + 1,
                message: format!("unknown key '{key}'"),
            });
        }
        if values.insert(key.to_string(), value.to_string()).is_some() {
            return Err(Error::Parse {
                line: idx + 1,
                message: format!("duplicate key '{key}'"),
            });
        }
    }
    let required = |key: &str| -> Result<String> {
        values
            .get(key)
            .cloned()
            .ok_or_else(|| invalid(key, "missing from manifest".to_string()))
    };
    let parse_num = |key: &str, raw: &str| -> Result<f64> {
        raw.parse::<f64>()
            .map_err(|_| invalid(key, format!("cannot parse '{raw}' as a number")))
    };
    let manifest = SessionManifest {
        participant_id: required("participant_id")?,
        session_id: required("session_id")?,
        fps: match values.get("fps") {
            Some(raw) => parse_num("fps", raw)?,
            None => DEFAULT_FPS,
        },
        frame_count: {
            let raw = required("frame_count")?;
            raw.parse::<usize>()
                .map_err(|_| invalid("frame_count", format!("cannot parse '{raw}'")))?
        },
        frame_width: match values.get("frame_width") {
            Some(raw) => raw
                .parse::<u32>()
                .map_err(|_| invalid("frame_width", format!("cannot parse '{raw}'")))?,
            None => DEFAULT_FRAME_WIDTH,
        },
        frame_height: match values.get("frame_height") {
            Some(raw) => raw
                .parse::<u32>()
                .map_err(|_| invalid("frame_height", format!("cannot parse '{raw}'")))?,
            None => DEFAULT_FRAME_HEIGHT,
        },
    };
    manifest.validate()?;
    Ok(manifest)
}

pub fn serialize_manifest(m: &SessionManifest) -> String {
    format!(
        "participant_id={}\nsession_id={}\nfps={}\nframe_count={}\nframe_width={}\nframe_height={}\n",
        m.participant_id, m.session_id, m.fps, m.frame_count, m.frame_width, m.frame_height
    )
}

// --- annotations -------------------------------------------------------------

#[derive(Debug, Deserialize)]
struct RawAnnotation {
    participant_id: String,
    session_id: String,
    frame_index: usize,
    hand_side: String,
    label: u8,
}

/// Parse the annotation CSV: header
/// `participant_id,session_id,frame_index,hand_side,label`.
pub fn parse_annotations<R: std::io::Read>(reader: R) -> Result<Vec<AnnotationRecord>> {
    let mut csv_reader = csv::Reader::from_reader(reader);
    let mut records = Vec::new();
    for (idx, row) in csv_reader.deserialize::<RawAnnotation>().enumerate() {
        let line = idx + 2; // header is line 1
        let raw = row.map_err(|e| Error::Parse {
            line,
            message: e.to_string(),
        })?;
        validate_id("participant_id", &raw.participant_id)?;
        validate_id("session_id", &raw.session_id)?;
        let hand_side = HandSide::parse(&raw.hand_side).ok_or_else(|| {
            invalid(
                "hand_side",
                format!(
                    "line {line}: expected left|right, found '{}'",
                    raw.hand_side
                ),
            )
        })?;
        if raw.label > 1 {
            return Err(invalid(
                "label",
                format!("line {line}: {} is not binary", raw.label),
            ));
        }
        records.push(AnnotationRecord {
            participant_id: raw.participant_id,
            session_id: raw.session_id,
            frame_index: raw.frame_index,
            hand_side,
            label: raw.label,
        });
    }
    Ok(records)
}

pub const ANNOTATION_HEADER: &str = "participant_id,session_id,frame_index,hand_side,label";

pub fn serialize_annotations(records: &[AnnotationRecord]) -> String {
    let mut out = String::from(ANNOTATION_HEADER);
    out.push('\n');
    for r in records {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.participant_id, r.session_id, r.frame_index, r.hand_side, r.label
        ));
    }
    out
}

// --- clinical scores ----------------------------------------------------------

#[derive(Debug, Deserialize, Serialize)]
struct RawClinical {
    participant_id: String,
    uems_dom: Option<f64>,
    uems_nondom: Option<f64>,
    uems_total: Option<f64>,
    gr_str_dom: Option<f64>,
    gr_sens_dorsal_dom: Option<f64>,
    gr_sens_palmar_dom: Option<f64>,
    gr_sens_dom: Option<f64>,
    gr_pa_dom: Option<f64>,
    gr_pp_dom: Option<f64>,
    gr_tot_dom: Option<f64>,
    gr_str_nondom: Option<f64>,
    gr_sens_dorsal_nondom: Option<f64>,
    gr_sens_palmar_nondom: Option<f64>,
    gr_sens_nondom: Option<f64>,
    gr_pa_nondom: Option<f64>,
    gr_pp_nondom: Option<f64>,
    gr_tot_nondom: Option<f64>,
    scim_s: Option<f64>,
    scim_rs: Option<f64>,
    scim_m: Option<f64>,
    scim_total: Option<f64>,
}

pub const CLINICAL_HEADER: &str = "participant_id,uems_dom,uems_nondom,uems_total,\
gr_str_dom,gr_sens_dorsal_dom,gr_sens_palmar_dom,gr_sens_dom,gr_pa_dom,gr_pp_dom,gr_tot_dom,\
gr_str_nondom,gr_sens_dorsal_nondom,gr_sens_palmar_nondom,gr_sens_nondom,gr_pa_nondom,\
gr_pp_nondom,gr_tot_nondom,scim_s,scim_rs,scim_m,scim_total";

/// Parse the clinical-score CSV. Empty cells become `None`; see
/// [`CLINICAL_HEADER`] for the column order.
pub fn parse_clinical<R: std::io::Read>(reader: R) -> Result<Vec<ClinicalRecord>> {
    let mut csv_reader = csv::Reader::from_reader(reader);
    let mut records = Vec::new();
    for (idx, row) in csv_reader.deserialize::<RawClinical>().enumerate() {
        let raw = row.map_err(|e| Error::Parse {
            line: idx + 2,
            message: e.to_string(),
        })?;
        let record = ClinicalRecord {
            participant_id: raw.participant_id,
            uems_dominant: raw.uems_dom,
            uems_nondominant: raw.uems_nondom,
            uems_total: raw.uems_total,
            grassp_dominant: GrasspScores {
                strength: raw.gr_str_dom,
                sens_dorsal: raw.gr_sens_dorsal_dom,
                sens_palmar: raw.gr_sens_palmar_dom,
                sens_total: raw.gr_sens_dom,
                prehension_ability: raw.gr_pa_dom,
                prehension_performance: raw.gr_pp_dom,
                total: raw.gr_tot_dom,
            },
            grassp_nondominant: GrasspScores {
                strength: raw.gr_str_nondom,
                sens_dorsal: raw.gr_sens_dorsal_nondom,
                sens_palmar: raw.gr_sens_palmar_nondom,
                sens_total: raw.gr_sens_nondom,
                prehension_ability: raw.gr_pa_nondom,
                prehension_performance: raw.gr_pp_nondom,
                total: raw.gr_tot_nondom,
            },
            scim_selfcare: raw.scim_s,
            scim_respiration_sphincter: raw.scim_rs,
            scim_mobility: raw.scim_m,
            scim_total: raw.scim_total,
        };
        record.validate()?;
        records.push(record);
    }
    Ok(records)
}

pub fn serialize_clinical(records: &[ClinicalRecord]) -> String {
    fn cell(v: Option<f64>) -> String {
        v.map(|v| v.to_string()).unwrap_or_default()
    }
    let mut out = String::from(CLINICAL_HEADER);
    out.push('\n');
    for r in records {
        let gd = &r.grassp_dominant;
        let gn = &r.grassp_nondominant;
        let fields = [
            r.participant_id.clone(),
            cell(r.uems_dominant),
            cell(r.uems_nondominant),
            cell(r.uems_total),
            cell(gd.strength),
            cell(gd.sens_dorsal),
            cell(gd.sens_palmar),
            cell(gd.sens_total),
            cell(gd.prehension_ability),
            cell(gd.prehension_performance),
            cell(gd.total),
            cell(gn.strength),
            cell(gn.sens_dorsal),
            cell(gn.sens_palmar),
            cell(gn.sens_total),
            cell(gn.prehension_ability),
            cell(gn.prehension_performance),
            cell(gn.total),
            cell(r.scim_selfcare),
            cell(r.scim_respiration_sphincter),
            cell(r.scim_mobility),
            cell(r.scim_total),
        ];
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}

// --- participants ---------------------------------------------------------------

#[derive(Debug, Deserialize)]
struct RawParticipant {
    participant_id: String,
    dominant_side_post_injury: String,
    dominant_side_pre_injury: String,
}

pub const PARTICIPANT_HEADER: &str =
    "participant_id,dominant_side_post_injury,dominant_side_pre_injury";

/// Parse the participant-dominance CSV.
pub fn parse_participants<R: std::io::Read>(reader: R) -> Result<Vec<ParticipantProfile>> {
    let mut csv_reader = csv::Reader::from_reader(reader);
    let mut records = Vec::new();
    for (idx, row) in csv_reader.deserialize::<RawParticipant>().enumerate() {
        let line = idx + 2;
        let raw = row.map_err(|e| Error::Parse {
            line,
            message: e.to_string(),
        })?;
        validate_id("participant_id", &raw.participant_id)?;
        let parse_side = |field: &str, s: &str| {
            HandSide::parse(s).ok_or_else(|| {
                invalid(
                    field,
                    format!("line {line}: expected left|right, found '{s}'"),
                )
            })
        };
        records.push(ParticipantProfile {
            dominant_side_post_injury: parse_side(
                "dominant_side_post_injury",
                &raw.dominant_side_post_injury,
            )?,
            dominant_side_pre_injury: parse_side(
                "dominant_side_pre_injury",
                &raw.dominant_side_pre_injury,
            )?,
            participant_id: raw.participant_id,
        });
    }
    Ok(records)
}

pub fn serialize_participants(records: &[ParticipantProfile]) -> String {
    let mut out = String::from(PARTICIPANT_HEADER);
    out.push('\n');
    for r in records {
        out.push_str(&format!(
            "{},{},{}\n",
            r.participant_id, r.dominant_side_post_injury, r.dominant_side_pre_injury
        ));
    }
    out
}
