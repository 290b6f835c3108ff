//! `handuse correlate` — correlation matrices and the dominance table.
//!
//! Emits one file per correlation block (all five blocks) in the chosen
//! format, plus `dominance.csv` (and `dominance.jsonl` under json-lines).

use std::fs;
use std::io::BufReader;

use handuse::error::Result;
use handuse::ingest;
use handuse::measures::read_measures_csv;
use handuse::report::{
    correlate_block, dominance_comparison, emit_dominance, emit_matrix, BlockTag, EmitFormat,
};

use super::ensure_dir;
use crate::CorrelateArgs;

pub fn run(args: CorrelateArgs) -> Result<()> {
    let measures = read_measures_csv(BufReader::new(fs::File::open(&args.measures)?))?;
    let clinical = ingest::parse_clinical(BufReader::new(fs::File::open(&args.clinical)?))?;
    let format: EmitFormat = args.format.into();
    ensure_dir(&args.out)?;

    for block in BlockTag::ALL {
        let matrix = correlate_block(&measures, &clinical, block)?;
        let name = match format {
            EmitFormat::Csv => format!("correlations_{}.matrix.csv", block.as_str()),
            EmitFormat::HeatmapData => format!("correlations_{}.heatmap.csv", block.as_str()),
            EmitFormat::JsonLines => format!("correlations_{}.jsonl", block.as_str()),
        };
        fs::write(args.out.join(name), emit_matrix(&matrix, format)?)?;
    }

    let dominance = dominance_comparison(&measures)?;
    fs::write(
        args.out.join("dominance.csv"),
        emit_dominance(&dominance, EmitFormat::Csv)?,
    )?;
    if format == EmitFormat::JsonLines {
        fs::write(
            args.out.join("dominance.jsonl"),
            emit_dominance(&dominance, EmitFormat::JsonLines)?,
        )?;
    }
    log::info!(
        "correlation blocks and dominance table written for {} participants",
        measures.len()
    );
    Ok(())
}
