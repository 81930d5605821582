//! CSV and JSONL trace files.
//!
//! Both formats carry the same ten fields. Timestamps are integer epoch
//! seconds or RFC 3339 text; the first parseable timestamp fixes the form
//! for the whole file.

use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use chrono::DateTime;
use edgeplace_core::TraceRecord;
use serde::Deserialize;

/// Column order of CSV traces.
pub const CSV_HEADER: [&str; 10] = [
    "timestamp",
    "user_id",
    "lat",
    "lon",
    "operator",
    "cell_id",
    "lac",
    "app",
    "bytes_up",
    "bytes_down",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TraceFormat {
    Csv,
    Jsonl,
}

impl TraceFormat {
    /// `.jsonl` and `.ndjson` are JSONL; anything else is CSV.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext)
                if ext.eq_ignore_ascii_case("jsonl") || ext.eq_ignore_ascii_case("ndjson") =>
            {
                TraceFormat::Jsonl
            }
            _ => TraceFormat::Csv,
        }
    }

    pub fn extension(self) -> &'static str {
        match self {
            TraceFormat::Csv => "csv",
            TraceFormat::Jsonl => "jsonl",
        }
    }
}

/// A skipped input line.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Diagnostic {
    /// 1-based line number.
    pub line: u64,
    pub message: String,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Parsed {
    pub records: Vec<TraceRecord>,
    pub diagnostics: Vec<Diagnostic>,
}

#[derive(Debug, thiserror::Error)]
pub enum ParseError {
    #[error("read failed: {0}")]
    Io(#[from] std::io::Error),
    #[error("input is not valid UTF-8 near line {0}")]
    Utf8(u64),
    #[error("bad CSV header: expected `{}`, found `{found}`", CSV_HEADER.join(","))]
    Header { found: String },
    #[error("line {line}: {found} timestamp in a file of {expected} timestamps")]
    MixedTimestamps {
        line: u64,
        expected: &'static str,
        found: &'static str,
    },
    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum TimeForm {
    Epoch,
    Rfc3339,
}

impl TimeForm {
    fn name(self) -> &'static str {
        match self {
            TimeForm::Epoch => "epoch-seconds",
            TimeForm::Rfc3339 => "RFC 3339",
        }
    }
}

/// Tracks the file's timestamp form.
#[derive(Default)]
struct TimeParser {
    form: Option<TimeForm>,
}

impl TimeParser {
    /// `Ok(Err(msg))` is a per-line problem; `Err` is fatal.
    fn parse(&mut self, raw: RawTime<'_>, line: u64) -> Result<Result<i64, String>, ParseError> {
        let (form, value) = match raw {
            RawTime::Int(v) => (TimeForm::Epoch, Some(v)),
            RawTime::Text(t) => {
                let t = t.trim();
                if let Ok(v) = t.parse::<i64>() {
                    (TimeForm::Epoch, Some(v))
                } else if let Ok(dt) = DateTime::parse_from_rfc3339(t) {
                    (TimeForm::Rfc3339, Some(dt.timestamp()))
                } else {
                    return Ok(Err(format!("unparseable timestamp `{t}`")));
                }
            }
            RawTime::Other => {
                return Ok(Err("timestamp must be an integer or RFC 3339 text".into()))
            }
        };
        match self.form {
            None => self.form = Some(form),
            Some(expected) if expected != form => {
                return Err(ParseError::MixedTimestamps {
                    line,
                    expected: expected.name(),
                    found: form.name(),
                })
            }
            Some(_) => {}
        }
        Ok(value.ok_or_else(|| "timestamp out of range".to_string()))
    }
}

enum RawTime<'a> {
    Int(i64),
    Text(&'a str),
    Other,
}

fn finish(rec: TraceRecord, line: u64, out: &mut Parsed) {
    match rec.validate() {
        Ok(()) => out.records.push(rec),
        Err(e) => out.diagnostics.push(Diagnostic {
            line,
            message: e.to_string(),
        }),
    }
}

pub fn parse_records<R: Read>(input: R, format: TraceFormat) -> Result<Parsed, ParseError> {
    match format {
        TraceFormat::Csv => parse_csv(input),
        TraceFormat::Jsonl => parse_jsonl(input),
    }
}

fn parse_csv<R: Read>(input: R) -> Result<Parsed, ParseError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(input);
    let mut out = Parsed::default();
    let mut times = TimeParser::default();
    let mut header_seen = false;

    for row in reader.byte_records() {
        let row = match row {
            Ok(row) => row,
            Err(e) => match e.kind() {
                csv::ErrorKind::Io(_) => return Err(e.into()),
                _ => {
                    let line = e.position().map_or(0, |p| p.line());
                    out.diagnostics.push(Diagnostic {
                        line,
                        message: e.to_string(),
                    });
                    continue;
                }
            },
        };
        let line = row.position().map_or(0, |p| p.line());
        let row = csv::StringRecord::from_byte_record(row).map_err(|_| ParseError::Utf8(line))?;
        if !header_seen {
            let found: Vec<&str> = row.iter().map(str::trim).collect();
            if found != CSV_HEADER {
                return Err(ParseError::Header {
                    found: found.join(","),
                });
            }
            header_seen = true;
            continue;
        }
        if row.len() == 1 && row[0].trim().is_empty() {
            continue;
        }
        if row.len() != CSV_HEADER.len() {
            out.diagnostics.push(Diagnostic {
                line,
                message: format!("expected {} fields, found {}", CSV_HEADER.len(), row.len()),
            });
            continue;
        }
        let timestamp = match times.parse(RawTime::Text(&row[0]), line)? {
            Ok(t) => t,
            Err(message) => {
                out.diagnostics.push(Diagnostic { line, message });
                continue;
            }
        };
        match csv_fields(&row, timestamp) {
            Ok(rec) => finish(rec, line, &mut out),
            Err(message) => out.diagnostics.push(Diagnostic { line, message }),
        }
    }
    Ok(out)
}

fn csv_fields(row: &csv::StringRecord, timestamp: i64) -> Result<TraceRecord, String> {
    let float = |i: usize| {
        row[i]
            .trim()
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| format!("{} is not a number", CSV_HEADER[i]))
    };
    let bytes = |i: usize| {
        row[i]
            .trim()
            .parse::<u64>()
            .map_err(|_| format!("{} must be a non-negative integer", CSV_HEADER[i]))
    };
    Ok(TraceRecord {
        timestamp,
        user_id: row[1].to_string(),
        lat: float(2)?,
        lon: float(3)?,
        operator: row[4].to_string(),
        cell_id: row[5].to_string(),
        lac: row[6].to_string(),
        app: row[7].to_string(),
        bytes_up: bytes(8)?,
        bytes_down: bytes(9)?,
    })
}

#[derive(Deserialize)]
struct JsonRecord {
    timestamp: serde_json::Value,
    user_id: String,
    lat: f64,
    lon: f64,
    operator: String,
    cell_id: String,
    lac: String,
    app: String,
    bytes_up: u64,
    bytes_down: u64,
}

fn parse_jsonl<R: Read>(input: R) -> Result<Parsed, ParseError> {
    let mut out = Parsed::default();
    let mut times = TimeParser::default();
    let mut reader = BufReader::new(input);
    let mut buf = Vec::new();
    let mut line = 0u64;
    loop {
        buf.clear();
        if reader.read_until(b'\n', &mut buf)? == 0 {
            break;
        }
        line += 1;
        let text = std::str::from_utf8(&buf).map_err(|_| ParseError::Utf8(line))?;
        if text.trim().is_empty() {
            continue;
        }
        let raw: JsonRecord = match serde_json::from_str(text) {
            Ok(raw) => raw,
            Err(e) => {
                out.diagnostics.push(Diagnostic {
                    line,
                    message: e.to_string(),
                });
                continue;
            }
        };
        let stamp = match &raw.timestamp {
            serde_json::Value::Number(n) => n.as_i64().map_or(RawTime::Other, RawTime::Int),
            serde_json::Value::String(s) => RawTime::Text(s),
            _ => RawTime::Other,
        };
        let timestamp = match times.parse(stamp, line)? {
            Ok(t) => t,
            Err(message) => {
                out.diagnostics.push(Diagnostic { line, message });
                continue;
            }
        };
        let rec = TraceRecord {
            timestamp,
            user_id: raw.user_id,
            lat: raw.lat,
            lon: raw.lon,
            operator: raw.operator,
            cell_id: raw.cell_id,
            lac: raw.lac,
            app: raw.app,
            bytes_up: raw.bytes_up,
            bytes_down: raw.bytes_down,
        };
        finish(rec, line, &mut out);
    }
    Ok(out)
}

/// Writes records with epoch-second timestamps.
pub fn write_records<W: Write>(
    out: W,
    records: &[TraceRecord],
    format: TraceFormat,
) -> std::io::Result<()> {
    match format {
        TraceFormat::Csv => {
            let mut w = csv::Writer::from_writer(out);
            w.write_record(CSV_HEADER)?;
            for r in records {
                w.write_record([
                    r.timestamp.to_string(),
                    r.user_id.clone(),
                    r.lat.to_string(),
                    r.lon.to_string(),
                    r.operator.clone(),
                    r.cell_id.clone(),
                    r.lac.clone(),
                    r.app.clone(),
                    r.bytes_up.to_string(),
                    r.bytes_down.to_string(),
                ])?;
            }
            w.flush()
        }
        TraceFormat::Jsonl => {
            let mut out = std::io::BufWriter::new(out);
            for r in records {
                let obj = serde_json::json!({
                    "timestamp": r.timestamp,
                    "user_id": r.user_id,
                    "lat": r.lat,
                    "lon": r.lon,
                    "operator": r.operator,
                    "cell_id": r.cell_id,
                    "lac": r.lac,
                    "app": r.app,
                    "bytes_up": r.bytes_up,
                    "bytes_down": r.bytes_down,
                });
                serde_json::to_writer(&mut out, &obj)?;
                out.write_all(b"\n")?;
            }
            out.flush()
        }
    }
}
