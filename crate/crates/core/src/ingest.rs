//! Tick parsing, session filtering, event-time returns and 1-minute
//! volatility aggregation.
//!
//! Returns are log price ratios between consecutive ticks of the same
//! trading day; the overnight close-to-open ratio is dropped. Volatility
//! in a bin is the sum of |r| over the bin's left-open interval
//! (t - 1min, t]; minutes with no trades hold v = 0, which is what makes
//! zero boxes possible downstream.

use std::collections::BTreeSet;
use std::io::Read;
use std::path::Path;

use chrono::{NaiveDate, NaiveDateTime, NaiveTime, Timelike};
use serde::{Deserialize, Serialize};

use crate::error::{MfError, Result};

pub const BIN_SECONDS: u64 = 60;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tick {
    pub timestamp: NaiveDateTime,
    pub price: f64,
}

#[derive(Clone, Debug)]
pub struct TickSeries {
    pub instrument_id: String,
    pub ticks: Vec<Tick>,
}

/// Column names in the tick CSV header.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TickSchema {
    /// Optional: when the column is absent the caller's fallback id is used.
    pub instrument: Option<String>,
    pub timestamp: String,
    pub price: String,
}

impl Default for TickSchema {
    fn default() -> Self {
        Self {
            instrument: Some("instrument".into()),
            timestamp: "timestamp".into(),
            price: "price".into(),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParseStats {
    pub rows: usize,
    pub dropped_bad_price: usize,
    pub dropped_unparsable: usize,
}

/// Continuous-trading windows of one exchange day. Windows are [start, end)
/// at whole-minute boundaries; bins are counted across windows in order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionCalendar {
    pub windows: Vec<(NaiveTime, NaiveTime)>,
    /// None accepts any calendar date carrying in-window ticks.
    #[serde(default)]
    pub trading_days: Option<BTreeSet<NaiveDate>>,
}

impl SessionCalendar {
    /// Shanghai/Shenzhen continuous double auction: [09:30, 11:30) and
    /// [13:00, 15:00), 240 one-minute bins per day.
    pub fn cn_a_share() -> Self {
        let t = |h, m| NaiveTime::from_hms_opt(h, m, 0).unwrap();
        Self {
            windows: vec![(t(9, 30), t(11, 30)), (t(13, 0), t(15, 0))],
            trading_days: None,
        }
    }

    /// `builtin:cn-a-share` or a path to a JSON calendar file.
    pub fn from_spec(spec: &str) -> Result<Self> {
        let cal = match spec {
            "builtin:cn-a-share" => Self::cn_a_share(),
            s if s.starts_with("builtin:") => {
                return Err(MfError::InvalidParameter {
                    name: "calendar",
                    reason: format!("unknown builtin calendar `{s}`"),
                })
            }
            path => {
                let text = std::fs::read_to_string(Path::new(path))?;
                serde_json::from_str(&text)?
            }
        };
        cal.validate()?;
        Ok(cal)
    }

    pub fn validate(&self) -> Result<()> {
        if self.windows.is_empty() {
            return Err(MfError::InvalidParameter {
                name: "calendar",
                reason: "no session windows".into(),
            });
        }
        for (i, &(start, end)) in self.windows.iter().enumerate() {
            if start >= end {
                return Err(MfError::InvalidParameter {
                    name: "calendar",
                    reason: format!("window {i} has start >= end"),
                });
            }
            let dur = (end - start).num_seconds();
            if start.second() != 0
                || end.second() != 0
                || dur % BIN_SECONDS as i64 != 0
            {
                return Err(MfError::InvalidParameter {
                    name: "calendar",
                    reason: format!("window {i} is not aligned to whole minutes"),
                });
            }
            if i > 0 && self.windows[i - 1].1 > start {
                return Err(MfError::InvalidParameter {
                    name: "calendar",
                    reason: "session windows overlap or are out of order".into(),
                });
            }
        }
        Ok(())
    }

    pub fn bins_per_day(&self) -> usize {
        self.windows
            .iter()
            .map(|&(a, b)| ((b - a).num_seconds() as u64 / BIN_SECONDS) as usize)
            .sum()
    }

    fn day_ok(&self, date: NaiveDate) -> bool {
        self.trading_days.as_ref().map_or(true, |set| set.contains(&date))
    }

    pub fn in_session(&self, ts: NaiveDateTime) -> bool {
        self.day_ok(ts.date()) && self.window_index(ts.time()).is_some()
    }

    pub fn window_index(&self, t: NaiveTime) -> Option<usize> {
        self.windows.iter().position(|&(a, b)| t >= a && t < b)
    }

    /// Day-level bin index for an in-session timestamp: bin k covers the
    /// left-open interval (start + k min, start + (k+1) min], with the
    /// window-open instant folded into bin 0.
    pub fn bin_index(&self, ts: NaiveDateTime) -> Option<usize> {
        if !self.day_ok(ts.date()) {
            return None;
        }
        let w = self.window_index(ts.time())?;
        let offset: usize = self.windows[..w]
            .iter()
            .map(|&(a, b)| ((b - a).num_seconds() as u64 / BIN_SECONDS) as usize)
            .sum();
        let secs = (ts.time() - self.windows[w].0).num_seconds() as u64;
        let bin = if secs == 0 { 0 } else { (secs - 1) / BIN_SECONDS } as usize;
        Some(offset + bin)
    }

    /// Left edge of a day-level bin, for labelling exported series.
    pub fn bin_start(&self, date: NaiveDate, mut bin: usize) -> Option<NaiveDateTime> {
        for &(a, b) in &self.windows {
            let bins = ((b - a).num_seconds() as u64 / BIN_SECONDS) as usize;
            if bin < bins {
                let t = a + chrono::Duration::seconds((bin as u64 * BIN_SECONDS) as i64);
                return Some(NaiveDateTime::new(date, t));
            }
            bin -= bins;
        }
        None
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct VolatilitySeries {
    pub instrument_id: String,
    pub values: Vec<f64>,
    pub bin_seconds: u64,
    /// Index where each trading day starts; empty for synthetic series.
    pub day_boundaries: Vec<usize>,
    pub days: Vec<NaiveDate>,
    /// Days where some session window saw no returns at all (halts or
    /// gaps); retained in the series but flagged.
    pub flagged_days: Vec<NaiveDate>,
}

impl VolatilitySeries {
    pub fn synthetic(instrument_id: impl Into<String>, values: Vec<f64>) -> Self {
        Self {
            instrument_id: instrument_id.into(),
            values,
            bin_seconds: BIN_SECONDS,
            day_boundaries: Vec::new(),
            days: Vec::new(),
            flagged_days: Vec::new(),
        }
    }
}

/// Parse tick CSV. Rows with unparsable fields or non-positive prices are
/// counted and dropped; output is stably sorted by timestamp.
pub fn parse_ticks(reader: impl Read, schema: &TickSchema) -> Result<(TickSeries, ParseStats)> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| MfError::Format(format!("malformed header: {e}")))?
        .clone();
    let find = |name: &str| headers.iter().position(|h| h == name);
    let ts_idx = find(&schema.timestamp).ok_or_else(|| {
        MfError::Format(format!("header lacks timestamp column `{}`", schema.timestamp))
    })?;
    let price_idx = find(&schema.price).ok_or_else(|| {
        MfError::Format(format!("header lacks price column `{}`", schema.price))
    })?;
    let inst_idx = schema.instrument.as_deref().and_then(find);

    let mut stats = ParseStats::default();
    let mut ticks = Vec::new();
    let mut instrument: Option<String> = None;
    for record in rdr.records() {
        stats.rows += 1;
        let record = match record {
            Ok(r) => r,
            Err(_) => {
                stats.dropped_unparsable += 1;
                continue;
            }
        };
        let (Some(ts_raw), Some(price_raw)) = (record.get(ts_idx), record.get(price_idx)) else {
            stats.dropped_unparsable += 1;
            continue;
        };
        let Some(timestamp) = parse_timestamp(ts_raw) else {
            stats.dropped_unparsable += 1;
            continue;
        };
        let Ok(price) = price_raw.parse::<f64>() else {
            stats.dropped_unparsable += 1;
            continue;
        };
        if !(price > 0.0) || !price.is_finite() {
            stats.dropped_bad_price += 1;
            continue;
        }
        if let Some(idx) = inst_idx {
            let id = record.get(idx).unwrap_or("");
            match &instrument {
                None => instrument = Some(id.to_string()),
                Some(existing) if existing != id => {
                    return Err(MfError::Format(format!(
                        "mixed instruments in one file: `{existing}` and `{id}`"
                    )));
                }
                _ => {}
            }
        }
        ticks.push(Tick { timestamp, price });
    }
    if ticks.is_empty() {
        return Err(MfError::EmptyInput("no valid tick rows".into()));
    }
    ticks.sort_by_key(|t| t.timestamp); // stable: equal timestamps keep input order
    Ok((
        TickSeries { instrument_id: instrument.unwrap_or_default(), ticks },
        stats,
    ))
}

fn parse_timestamp(raw: &str) -> Option<NaiveDateTime> {
    NaiveDateTime::parse_from_str(raw, "%Y-%m-%dT%H:%M:%S")
        .or_else(|_| NaiveDateTime::parse_from_str(raw, "%Y-%m-%d %H:%M:%S"))
        .ok()
}

/// Keep only ticks inside continuous-trading windows.
pub fn filter_sessions(series: &TickSeries, calendar: &SessionCalendar) -> Result<TickSeries> {
    calendar.validate()?;
    let ticks: Vec<Tick> = series
        .ticks
        .iter()
        .filter(|t| calendar.in_session(t.timestamp))
        .cloned()
        .collect();
    if ticks.is_empty() {
        return Err(MfError::EmptyInput(
            "no ticks remain inside the session windows".into(),
        ));
    }
    Ok(TickSeries { instrument_id: series.instrument_id.clone(), ticks })
}

/// Event-time log returns between consecutive same-day ticks. The first
/// tick of each day anchors prices but yields no return.
pub fn compute_returns(series: &TickSeries) -> Result<Vec<(NaiveDateTime, f64)>> {
    let mut out = Vec::with_capacity(series.ticks.len().saturating_sub(1));
    let mut prev: Option<&Tick> = None;
    for tick in &series.ticks {
        if let Some(p) = prev {
            if p.timestamp.date() == tick.timestamp.date() {
                out.push((tick.timestamp, tick.price.ln() - p.price.ln()));
            }
        }
        prev = Some(tick);
    }
    if out.is_empty() {
        return Err(MfError::EmptyInput(
            "no trading day contains two or more ticks".into(),
        ));
    }
    Ok(out)
}

/// Bin |r| into 1-minute volatility, zero-filling quiet minutes; every
/// observed day contributes a full day of bins.
pub fn aggregate_volatility(
    returns: &[(NaiveDateTime, f64)],
    instrument_id: &str,
    calendar: &SessionCalendar,
) -> Result<VolatilitySeries> {
    calendar.validate()?;
    if returns.is_empty() {
        return Err(MfError::EmptyInput("no returns to aggregate".into()));
    }
    let bins_per_day = calendar.bins_per_day();
    let n_windows = calendar.windows.len();
    let mut per_day: std::collections::BTreeMap<NaiveDate, (Vec<f64>, Vec<usize>)> =
        std::collections::BTreeMap::new();
    for &(ts, r) in returns {
        let bin = calendar.bin_index(ts).ok_or_else(|| MfError::InvalidParameter {
            name: "returns",
            reason: format!("timestamp {ts} is outside the session windows"),
        })?;
        let w = calendar.window_index(ts.time()).unwrap();
        let entry = per_day
            .entry(ts.date())
            .or_insert_with(|| (vec![0.0; bins_per_day], vec![0; n_windows]));
        entry.0[bin] += r.abs();
        entry.1[w] += 1;
    }

    let mut values = Vec::with_capacity(per_day.len() * bins_per_day);
    let mut day_boundaries = Vec::with_capacity(per_day.len());
    let mut days = Vec::with_capacity(per_day.len());
    let mut flagged_days = Vec::new();
    for (date, (bins, window_counts)) in per_day {
        day_boundaries.push(values.len());
        days.push(date);
        if window_counts.iter().any(|&c| c == 0) {
            flagged_days.push(date);
        }
        values.extend_from_slice(&bins);
    }
    Ok(VolatilitySeries {
        instrument_id: instrument_id.to_string(),
        values,
        bin_seconds: BIN_SECONDS,
        day_boundaries,
        days,
        flagged_days,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IngestReport {
    pub parse: ParseStats,
    pub ticks_in_session: usize,
    pub returns: usize,
    pub days: usize,
    pub flagged_days: Vec<NaiveDate>,
    pub bins: usize,
}

/// Full tick-to-volatility pipeline.
pub fn ingest(
    reader: impl Read,
    schema: &TickSchema,
    calendar: &SessionCalendar,
    fallback_id: &str,
) -> Result<(VolatilitySeries, IngestReport)> {
    let (mut series, parse) = parse_ticks(reader, schema)?;
    if series.instrument_id.is_empty() {
        series.instrument_id = fallback_id.to_string();
    }
    let filtered = filter_sessions(&series, calendar)?;
    let ticks_in_session = filtered.ticks.len();
    let returns = compute_returns(&filtered)?;
    let vol = aggregate_volatility(&returns, &filtered.instrument_id, calendar)?;
    let report = IngestReport {
        parse,
        ticks_in_session,
        returns: returns.len(),
        days: vol.days.len(),
        flagged_days: vol.flagged_days.clone(),
        bins: vol.values.len(),
    };
    Ok((vol, report))
}
