use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use mfpart_core::pmodel::{build_histogram, fit_pmodel, HIST_BIN_WIDTH};
use mfpart_core::report::{
    AnalysisDocument, BatchFailure, PModelBatchDocument, PModelBatchEntry, PModelDocument, VERSION,
};
use mfpart_core::MfError;

use crate::util::{read_json, write_doc};
use crate::PmodelArgs;

pub fn run(args: &PmodelArgs) -> Result<i32> {
    if args.tau.is_dir() {
        run_batch(args)
    } else {
        let doc: AnalysisDocument = read_json(&args.tau)?;
        let fit = fit_pmodel(&doc.grid.q_values, &doc.scaling.tau)?;
        let out = PModelDocument::new(
            config_echo(&args.tau),
            &doc.instrument_id,
            doc.grid.q_values.clone(),
            fit,
        );
        write_doc(&args.out, &out)?;
        Ok(0)
    }
}

fn config_echo(tau: &Path) -> serde_json::Value {
    serde_json::json!({ "command": "pmodel", "tau": tau })
}

/// Fit every parseable analysis document in the directory; files that are
/// not analysis documents (summaries, fits) are skipped silently, fit
/// failures are reported but do not stop the batch.
fn run_batch(args: &PmodelArgs) -> Result<i32> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(&args.tau)
        .with_context(|| format!("listing {}", args.tau.display()))?
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| p.is_file() && p.extension().is_some_and(|e| e == "json"))
        .collect();
    paths.sort();

    let mut fits = Vec::new();
    let mut failures: Vec<BatchFailure> = Vec::new();
    for path in &paths {
        let Ok(doc) = read_json::<AnalysisDocument>(path) else {
            continue;
        };
        match fit_pmodel(&doc.grid.q_values, &doc.scaling.tau) {
            Ok(fit) => fits.push(PModelBatchEntry { instrument_id: doc.instrument_id, fit }),
            Err(e) => failures.push(BatchFailure {
                input: path.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default(),
                error: e.to_string(),
            }),
        }
    }
    if fits.is_empty() {
        return Err(MfError::EmptyInput(format!(
            "no analysis documents with fittable tau in {}",
            args.tau.display()
        ))
        .into());
    }
    fits.sort_by(|a, b| a.instrument_id.cmp(&b.instrument_id));
    failures.sort_by(|a, b| a.input.cmp(&b.input));

    let ps: Vec<f64> = fits.iter().map(|f| f.fit.p).collect();
    let histogram = build_histogram(&ps, HIST_BIN_WIDTH)?;
    let partial = !failures.is_empty();
    let doc = PModelBatchDocument {
        version: VERSION.to_string(),
        config: config_echo(&args.tau),
        fits,
        failures,
        histogram,
    };
    write_doc(&args.out, &doc)?;
    Ok(if partial { 1 } else { 0 })
}
