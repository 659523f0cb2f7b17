use anyhow::Result;
use mfpart_core::formats::{open_maybe_gz, write_vol_binary, write_vol_csv};
use mfpart_core::ingest::{ingest, SessionCalendar, TickSchema};
use mfpart_core::report::{IngestMetaDocument, VERSION};

use crate::util::{file_stem, write_doc};
use crate::IngestArgs;

pub fn run(args: &IngestArgs) -> Result<i32> {
    let calendar = SessionCalendar::from_spec(&args.calendar)?;
    let fallback = args.instrument.clone().unwrap_or_else(|| file_stem(&args.ticks));
    let reader = open_maybe_gz(&args.ticks)?;
    let (series, report) = ingest(reader, &TickSchema::default(), &calendar, &fallback)?;

    let is_csv = args.out.extension().is_some_and(|e| e == "csv");
    if is_csv {
        write_vol_csv(&args.out, &series, Some(&calendar))?;
    } else {
        write_vol_binary(&args.out, &series)?;
    }

    let meta = IngestMetaDocument {
        version: VERSION.to_string(),
        config: serde_json::json!({
            "command": "ingest",
            "ticks": args.ticks,
            "calendar": args.calendar,
            "instrument": fallback,
        }),
        instrument_id: series.instrument_id.clone(),
        report,
    };
    let meta_path = args.out.with_extension(format!(
        "{}meta.json",
        args.out
            .extension()
            .map(|e| format!("{}.", e.to_string_lossy()))
            .unwrap_or_default()
    ));
    write_doc(&meta_path, &meta)?;
    Ok(0)
}
