use std::path::Path;

use anyhow::{Context, Result};
use mfpart_core::formats::{open_maybe_gz, read_vol_auto, sniff_kind, InputKind};
use mfpart_core::ingest::{ingest, SessionCalendar, TickSchema, VolatilitySeries};

pub fn file_stem(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

/// Load any supported input as a volatility series; tick CSV goes through
/// the full session-filter + aggregation pipeline.
pub fn load_series(path: &Path, calendar: &SessionCalendar) -> Result<VolatilitySeries> {
    let kind = sniff_kind(path, "price")
        .with_context(|| format!("classifying {}", path.display()))?;
    let series = match kind {
        InputKind::VolBinary | InputKind::VolCsv => read_vol_auto(path, &file_stem(path))?,
        InputKind::TickCsv => {
            let reader = open_maybe_gz(path)?;
            ingest(reader, &TickSchema::default(), calendar, &file_stem(path))?.0
        }
    };
    Ok(series)
}

pub fn write_doc<T: serde::Serialize>(path: &Path, doc: &T) -> Result<()> {
    let text = mfpart_core::report::to_json_pretty(doc)?;
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))?;
    let doc = serde_json::from_str(&text)
        .with_context(|| format!("parsing {}", path.display()))?;
    Ok(doc)
}
