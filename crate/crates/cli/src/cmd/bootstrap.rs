use anyhow::Result;
use mfpart_core::ingest::SessionCalendar;
use mfpart_core::mfcore::AnalysisGrid;
use mfpart_core::report::BootstrapDocument;
use mfpart_core::stats::{bootstrap_test, BootstrapParams};

use crate::cmd::analyze::params_from;
use crate::util::{load_series, write_doc};
use crate::BootstrapArgs;

pub fn run(args: &BootstrapArgs) -> Result<i32> {
    let params = params_from(&args.grid);
    params.validate()?;
    let calendar = SessionCalendar::from_spec(&args.calendar)?;
    let series = load_series(&args.vol, &calendar)?;
    let grid = AnalysisGrid::from_length(series.values.len(), &params)?;
    let bp = BootstrapParams { n: args.n, level: args.level, master_seed: args.seed };
    let report = bootstrap_test(&series.values, &grid, &params, &bp)?;

    let config = serde_json::json!({
        "command": "bootstrap",
        "vol": args.vol,
        "qmin": args.grid.qmin,
        "qmax": args.grid.qmax,
        "qstep": args.grid.qstep,
        "min_scales": args.grid.min_scales,
        "jump_threshold": args.grid.jump_threshold,
        "calendar": args.calendar,
        "n": args.n,
        "level": args.level,
        "seed": args.seed,
    });
    let doc = BootstrapDocument::new(config, &series.instrument_id, report);
    write_doc(&args.out, &doc)?;
    Ok(0)
}
