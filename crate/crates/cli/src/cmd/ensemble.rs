use std::path::PathBuf;

use anyhow::{Context, Result};
use mfpart_core::ensemble::{align_members, annealed_tau, quenched_tau, MemberAnalysis};
use mfpart_core::mfcore::AnalyzeParams;
use mfpart_core::report::{AnalysisDocument, EnsembleDocument};
use mfpart_core::MfError;

use crate::util::{read_json, write_doc};
use crate::EnsembleArgs;

pub fn run(args: &EnsembleArgs) -> Result<i32> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(&args.analyses)
        .with_context(|| format!("listing {}", args.analyses.display()))?
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| p.is_file() && p.extension().is_some_and(|e| e == "json"))
        .collect();
    paths.sort();

    let mut members = Vec::new();
    for path in &paths {
        let Ok(doc) = read_json::<AnalysisDocument>(path) else {
            continue; // summaries and other documents live alongside analyses
        };
        members.push(MemberAnalysis {
            id: doc.instrument_id,
            q_values: doc.grid.q_values,
            box_sizes: doc.grid.box_sizes,
            analyzed_length: doc.grid.analyzed_length,
            ln_chi: doc.ln_chi,
        });
    }
    if members.is_empty() {
        return Err(MfError::EmptyInput(format!(
            "no analysis documents in {}",
            args.analyses.display()
        ))
        .into());
    }

    let table = align_members(members, args.quorum)?;
    // only the scaling-fit knobs matter here; the q grid is inherited
    // from the member documents
    let params = AnalyzeParams {
        min_scales: args.min_scales,
        jump_threshold: args.jump_threshold,
        ..AnalyzeParams::default()
    };
    params.validate()?;
    let quenched = quenched_tau(&table, &params)?;
    let annealed = annealed_tau(&table, &params)?;

    let config = serde_json::json!({
        "command": "ensemble",
        "analyses": args.analyses,
        "quorum": args.quorum,
        "min_scales": args.min_scales,
        "jump_threshold": args.jump_threshold,
    });
    let doc = EnsembleDocument::new(config, table, quenched, annealed);
    write_doc(&args.out, &doc)?;
    Ok(0)
}
