use std::collections::HashSet;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use mfpart_core::ingest::SessionCalendar;
use mfpart_core::mfcore::{analyze, AnalyzeParams};
use mfpart_core::pmodel::fit_pmodel;
use mfpart_core::report::{
    AnalysisDocument, BatchFailure, BatchRow, BatchSummaryDocument, VERSION,
};
use mfpart_core::stats::{bootstrap_test, BootstrapParams};
use mfpart_core::MfError;
use rayon::prelude::*;

use crate::util::{file_stem, load_series, write_doc};
use crate::{AnalyzeArgs, GridArgs};

pub fn params_from(grid: &GridArgs) -> AnalyzeParams {
    AnalyzeParams {
        q_min: grid.qmin,
        q_max: grid.qmax,
        q_step: grid.qstep,
        min_scales: grid.min_scales,
        jump_threshold: grid.jump_threshold,
    }
}

fn config_echo(args: &AnalyzeArgs, vol: &Path) -> serde_json::Value {
    serde_json::json!({
        "command": "analyze",
        "vol": vol,
        "qmin": args.grid.qmin,
        "qmax": args.grid.qmax,
        "qstep": args.grid.qstep,
        "min_scales": args.grid.min_scales,
        "jump_threshold": args.grid.jump_threshold,
        "calendar": args.calendar,
    })
}

pub fn run(args: &AnalyzeArgs) -> Result<i32> {
    let params = params_from(&args.grid);
    params.validate()?;
    let calendar = SessionCalendar::from_spec(&args.calendar)?;
    if args.vol.is_dir() {
        run_batch(args, &params, &calendar)
    } else {
        let series = load_series(&args.vol, &calendar)?;
        let analysis = analyze(&series.values, &params)?;
        let doc =
            AnalysisDocument::new(config_echo(args, &args.vol), &series.instrument_id, analysis);
        write_doc(&args.out, &doc)?;
        Ok(0)
    }
}

/// Everything in the directory except JSON documents is an input; files
/// that cannot be read or analyzed become failure entries without
/// stopping the rest of the batch.
fn run_batch(args: &AnalyzeArgs, params: &AnalyzeParams, calendar: &SessionCalendar) -> Result<i32> {
    if args.bootstrap_n > 0 && !(args.level > 0.0 && args.level < 1.0) {
        return Err(MfError::InvalidParameter {
            name: "level",
            reason: format!("significance level must lie in (0, 1), got {}", args.level),
        }
        .into());
    }
    let mut inputs: Vec<PathBuf> = std::fs::read_dir(&args.vol)
        .with_context(|| format!("listing {}", args.vol.display()))?
        .filter_map(|e| e.ok())
        .filter(|e| e.file_type().map(|t| t.is_file()).unwrap_or(false))
        .map(|e| e.path())
        .filter(|p| p.extension().map_or(true, |ext| ext != "json"))
        .collect();
    inputs.sort();
    if inputs.is_empty() {
        return Err(MfError::EmptyInput(format!(
            "no input files in {}",
            args.vol.display()
        ))
        .into());
    }
    std::fs::create_dir_all(&args.out)
        .with_context(|| format!("creating {}", args.out.display()))?;

    // identical stems would race on the same output file
    let mut seen = HashSet::new();
    let mut failures: Vec<BatchFailure> = Vec::new();
    let mut work = Vec::new();
    for path in inputs {
        if seen.insert(file_stem(&path)) {
            work.push(path);
        } else {
            failures.push(BatchFailure {
                input: display_name(&path),
                error: format!("duplicate instrument stem `{}`", file_stem(&path)),
            });
        }
    }

    let results: Vec<std::result::Result<BatchRow, BatchFailure>> = work
        .par_iter()
        .map(|path| {
            process_one(path, args, params, calendar).map_err(|e| BatchFailure {
                input: display_name(path),
                error: format!("{e:#}"),
            })
        })
        .collect();

    let mut rows = Vec::new();
    for r in results {
        match r {
            Ok(row) => rows.push(row),
            Err(f) => failures.push(f),
        }
    }
    rows.sort_by(|a, b| a.instrument_id.cmp(&b.instrument_id));
    failures.sort_by(|a, b| a.input.cmp(&b.input));

    let mut config = config_echo(args, &args.vol);
    config["bootstrap_n"] = args.bootstrap_n.into();
    config["level"] = args.level.into();
    config["seed"] = args.seed.into();
    let summary = BatchSummaryDocument {
        version: VERSION.to_string(),
        config,
        rows,
        failures: failures.clone(),
    };
    write_doc(&args.out.join("summary.json"), &summary)?;
    Ok(if failures.is_empty() { 0 } else { 1 })
}

fn process_one(
    path: &Path,
    args: &AnalyzeArgs,
    params: &AnalyzeParams,
    calendar: &SessionCalendar,
) -> Result<BatchRow> {
    let series = load_series(path, calendar)?;
    let analysis = analyze(&series.values, params)?;
    let mut warnings = analysis.scaling.warnings.clone();

    let (p_fit, rss) = match fit_pmodel(&analysis.table.grid.q_values, &analysis.scaling.tau) {
        Ok(fit) => (Some(fit.p), Some(fit.rss)),
        Err(e) => {
            warnings.push(format!("p-model fit failed: {e}"));
            (None, None)
        }
    };

    let (p1, p2) = if args.bootstrap_n > 0 {
        let bp = BootstrapParams {
            n: args.bootstrap_n,
            level: args.level,
            master_seed: args.seed,
        };
        match bootstrap_test(&series.values, &analysis.table.grid, params, &bp) {
            Ok(report) => {
                warnings.extend(report.warnings.iter().cloned());
                (Some(report.p1), Some(report.p2))
            }
            Err(e) => {
                warnings.push(format!("bootstrap failed: {e}"));
                (None, None)
            }
        }
    } else {
        (None, None)
    };

    let row = BatchRow {
        instrument_id: series.instrument_id.clone(),
        input: display_name(path),
        delta_alpha: Some(analysis.scaling.delta_alpha),
        f_stat: Some(analysis.scaling.f_stat),
        p_fit,
        rss,
        p1,
        p2,
        warnings,
    };
    let doc = AnalysisDocument::new(config_echo(args, path), &series.instrument_id, analysis);
    let out = args.out.join(format!("{}.analysis.json", file_stem(path)));
    write_doc(&out, &doc)?;
    Ok(row)
}

fn display_name(path: &Path) -> String {
    path.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}
