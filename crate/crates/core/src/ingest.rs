//! Wireshark packet-list CSV exports.
//!
//! The expected layout is the default "Export Packet Dissections → As CSV"
//! output: seven columns `No.`, `Time`, `Source`, `Destination`, `Protocol`,
//! `Length`, `Info`, comma separated, every field double-quoted. Numbers use
//! C-locale notation: digits, an optional `.` fraction, no grouping.

use std::fmt;
use std::io::{Read, Write};

use serde::Serialize;
use thiserror::Error;

pub const COLUMNS: [&str; 7] = [
    "No.",
    "Time",
    "Source",
    "Destination",
    "Protocol",
    "Length",
    "Info",
];

/// One row of a packet-list export.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PacketRecord {
    pub no: u64,
    /// Seconds since capture start.
    pub time: f64,
    pub source: String,
    pub destination: String,
    pub protocol: String,
    /// Frame length in bytes.
    pub length: u32,
    pub info: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SourceFile {
    pub name: String,
    pub records: usize,
}

/// Records from one or more export files, in file order.
#[derive(Debug, Clone, PartialEq)]
pub struct CaptureBatch {
    pub label: String,
    pub records: Vec<PacketRecord>,
    pub source_files: Vec<SourceFile>,
}

impl CaptureBatch {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum HeaderMode {
    /// Treat the first row as a header when its first cell is not a number.
    #[default]
    Auto,
    Present,
    Absent,
}

#[derive(Debug, Clone)]
pub struct ParseOptions {
    pub delimiter: u8,
    pub header: HeaderMode,
    /// Drop malformed rows and report them instead of failing.
    pub skip_malformed: bool,
}

impl Default for ParseOptions {
    fn default() -> Self {
        Self {
            delimiter: b',',
            header: HeaderMode::Auto,
            skip_malformed: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MalformedRow {
    pub line: u64,
    pub reason: String,
}

impl fmt::Display for MalformedRow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.reason)
    }
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("input is empty")]
    EmptyInput,
    #[error("{} malformed row(s); first at {}", .0.len(), .0[0])]
    Malformed(Vec<MalformedRow>),
    #[error("no batches to merge")]
    NoBatches,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Result of a parse: the batch plus any rows dropped under `skip_malformed`.
#[derive(Debug, Clone)]
pub struct Parsed {
    pub batch: CaptureBatch,
    pub skipped: Vec<MalformedRow>,
}

fn is_plain_integer(s: &str) -> bool {
    !s.is_empty() && s.bytes().all(|b| b.is_ascii_digit())
}

fn is_plain_decimal(s: &str) -> bool {
    match s.split_once('.') {
        Some((int, frac)) => is_plain_integer(int) && is_plain_integer(frac),
        None => is_plain_integer(s),
    }
}

fn valid_token(s: &str) -> bool {
    !s.is_empty() && !s.chars().any(|c| c.is_whitespace() || c.is_control())
}

fn parse_row(fields: &csv::StringRecord) -> Result<PacketRecord, String> {
    if fields.len() != COLUMNS.len() {
        return Err(format!(
            "expected {} columns, found {}",
            COLUMNS.len(),
            fields.len()
        ));
    }
    let get = |i: usize| fields.get(i).unwrap_or("");

    let no = get(0);
    if !is_plain_integer(no) {
        return Err(format!("No. is not an integer: {no:?}"));
    }
    let no: u64 = no.parse().map_err(|e| format!("No. {no:?}: {e}"))?;
    if no == 0 {
        return Err("No. must be positive".into());
    }

    let time = get(1);
    if !is_plain_decimal(time) {
        return Err(format!("Time is not a plain decimal: {time:?}"));
    }
    let time: f64 = time.parse().map_err(|e| format!("Time {time:?}: {e}"))?;

    for (i, name) in [(2, "Source"), (3, "Destination"), (4, "Protocol")] {
        if !valid_token(get(i)) {
            return Err(format!("{name} is empty or contains whitespace: {:?}", get(i)));
        }
    }

    let length = get(5);
    if !is_plain_integer(length) {
        return Err(format!("Length is not an integer: {length:?}"));
    }
    let length: u32 = length
        .parse()
        .map_err(|e| format!("Length {length:?}: {e}"))?;
    if length == 0 {
        return Err("Length must be at least 1".into());
    }

    Ok(PacketRecord {
        no,
        time,
        source: get(2).to_string(),
        destination: get(3).to_string(),
        protocol: get(4).to_string(),
        length,
        info: get(6).to_string(),
    })
}

fn looks_like_header(fields: &csv::StringRecord) -> bool {
    fields
        .get(0)
        .map(|f| !is_plain_integer(f.trim()))
        .unwrap_or(false)
}

/// Parse one packet-list export.
///
/// Every data row becomes exactly one record, in file order. Malformed rows
/// are collected; unless `skip_malformed` is set the parse fails with all of
/// them listed.
pub fn parse_capture_csv<R: Read>(
    input: R,
    source_name: &str,
    label: &str,
    options: &ParseOptions,
) -> Result<Parsed, IngestError> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(options.delimiter)
        .has_headers(false)
        .flexible(true)
        .from_reader(input);

    let mut records = Vec::new();
    let mut malformed = Vec::new();
    let mut raw = csv::StringRecord::new();
    let mut first = true;
    let mut saw_any = false;

    loop {
        let line = reader.position().line();
        match reader.read_record(&mut raw) {
            Ok(false) => break,
            Ok(true) => {}
            Err(e) => {
                let line = e.position().map(|p| p.line()).unwrap_or(line);
                if let csv::ErrorKind::Io(_) = e.kind() {
                    return Err(IngestError::Io(std::io::Error::other(e.to_string())));
                }
                saw_any = true;
                first = false;
                malformed.push(MalformedRow {
                    line,
                    reason: e.to_string(),
                });
                continue;
            }
        }
        saw_any = true;
        let line = raw.position().map(|p| p.line()).unwrap_or(line);
        if first {
            first = false;
            let header = match options.header {
                HeaderMode::Present => true,
                HeaderMode::Absent => false,
                HeaderMode::Auto => looks_like_header(&raw),
            };
            if header {
                continue;
            }
        }
        match parse_row(&raw) {
            Ok(rec) => records.push(rec),
            Err(reason) => malformed.push(MalformedRow { line, reason }),
        }
    }

    if !saw_any {
        return Err(IngestError::EmptyInput);
    }
    if !malformed.is_empty() && !options.skip_malformed {
        return Err(IngestError::Malformed(malformed));
    }
    let count = records.len();
    Ok(Parsed {
        batch: CaptureBatch {
            label: label.to_string(),
            records,
            source_files: vec![SourceFile {
                name: source_name.to_string(),
                records: count,
            }],
        },
        skipped: malformed,
    })
}

/// Concatenate batches in argument order.
pub fn merge_batches(batches: Vec<CaptureBatch>, label: &str) -> Result<CaptureBatch, IngestError> {
    if batches.is_empty() {
        return Err(IngestError::NoBatches);
    }
    let total = batches.iter().map(CaptureBatch::len).sum();
    let mut records = Vec::with_capacity(total);
    let mut source_files = Vec::new();
    for b in batches {
        records.extend(b.records);
        source_files.extend(b.source_files);
    }
    Ok(CaptureBatch {
        label: label.to_string(),
        records,
        source_files,
    })
}

/// Write a batch back out in the export dialect (header row, all fields quoted).
pub fn write_capture_csv<W: Write>(batch: &CaptureBatch, sink: W) -> Result<(), IngestError> {
    let mut w = csv::WriterBuilder::new()
        .quote_style(csv::QuoteStyle::Always)
        .from_writer(sink);
    let map = |e: csv::Error| IngestError::Io(std::io::Error::other(e.to_string()));
    w.write_record(COLUMNS).map_err(map)?;
    for r in &batch.records {
        w.write_record([
            r.no.to_string(),
            r.time.to_string(),
            r.source.clone(),
            r.destination.clone(),
            r.protocol.clone(),
            r.length.to_string(),
            r.info.clone(),
        ])
        .map_err(map)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEADER: &str = "\"No.\",\"Time\",\"Source\",\"Destination\",\"Protocol\",\"Length\",\"Info\"\n";

    fn parse(text: &str) -> Result<Parsed, IngestError> {
        parse_capture_csv(text.as_bytes(), "t.csv", "t", &ParseOptions::default())
    }

    #[test]
    fn quic_row_with_embedded_comma() {
        let text = format!(
            "{HEADER}21591,218.572138,172.21.2.156,74.125.68.93,QUIC,576,\"Payload (Encrypted), PK0: 13\"\n"
        );
        let p = parse(&text).unwrap();
        assert_eq!(p.batch.records.len(), 1);
        let r = &p.batch.records[0];
        assert_eq!(r.no, 21591);
        assert_eq!(r.time, 218.572138);
        assert_eq!(r.source, "172.21.2.156");
        assert_eq!(r.destination, "74.125.68.93");
        assert_eq!(r.protocol, "QUIC");
        assert_eq!(r.length, 576);
        assert_eq!(r.info, "Payload (Encrypted), PK0: 13");
    }

    #[test]
    fn header_only_gives_empty_batch() {
        let p = parse(HEADER).unwrap();
        assert!(p.batch.is_empty());
        assert_eq!(p.batch.source_files[0].records, 0);
    }

    #[test]
    fn empty_input_is_an_error() {
        assert!(matches!(parse(""), Err(IngestError::EmptyInput)));
    }

    #[test]
    fn six_columns_is_malformed_at_that_line() {
        let text = format!("{HEADER}1,0.0,a,b,TCP,60,x\n2,0.1,a,b,TCP,60\n");
        match parse(&text) {
            Err(IngestError::Malformed(rows)) => {
                assert_eq!(rows.len(), 1);
                assert_eq!(rows[0].line, 3);
                assert!(rows[0].reason.contains("columns"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn skip_malformed_reports_and_keeps_the_rest() {
        let text = format!("{HEADER}1,0.0,a,b,TCP,60,x\n2,0,1,a,b,TCP,60,x\n3,0.2,a,b,UDP,70,y\n");
        let opts = ParseOptions {
            skip_malformed: true,
            ..Default::default()
        };
        let p = parse_capture_csv(text.as_bytes(), "t.csv", "t", &opts).unwrap();
        assert_eq!(p.batch.records.len(), 2);
        assert_eq!(p.skipped.len(), 1);
        assert_eq!(p.skipped[0].line, 3);
    }

    #[test]
    fn locale_numbers_are_rejected() {
        for bad in [
            "1,218,5,a,b,TCP,60,x",
            "1,\"218,5\",a,b,TCP,60,x",
            "1,0.5,a,b,TCP,\"1.514\",x",
            "1,-0.5,a,b,TCP,60,x",
            "1,1e3,a,b,TCP,60,x",
            "1,0.5,a,b,TCP,0,x",
            "1,0.5,a,b,,60,x",
            "1,0.5,a,b,T CP,60,x",
        ] {
            let text = format!("{HEADER}{bad}\n");
            assert!(
                matches!(parse(&text), Err(IngestError::Malformed(_))),
                "accepted {bad}"
            );
        }
    }

    #[test]
    fn headerless_input_is_detected() {
        let p = parse("7,1.5,a,b,ARP,42,Who has\n").unwrap();
        assert_eq!(p.batch.records[0].no, 7);
    }

    #[test]
    fn merge_keeps_order_and_counts() {
        let a = parse(&format!("{HEADER}1,0,a,b,TCP,60,x\n2,0,a,b,TCP,61,x\n3,0,a,b,TCP,62,x\n"))
            .unwrap()
            .batch;
        let b = parse(&format!("{HEADER}1,0,c,d,UDP,70,y\n2,0,c,d,UDP,71,y\n"))
            .unwrap()
            .batch;
        let m = merge_batches(vec![a.clone(), b], "w1").unwrap();
        assert_eq!(m.len(), 5);
        assert_eq!(m.label, "w1");
        let lengths: Vec<u32> = m.records.iter().map(|r| r.length).collect();
        assert_eq!(lengths, [60, 61, 62, 70, 71]);
        assert_eq!(m.source_files.len(), 2);

        let single = merge_batches(vec![a.clone()], "w1").unwrap();
        assert_eq!(single.records, a.records);
        assert!(matches!(merge_batches(vec![], "w"), Err(IngestError::NoBatches)));
    }

    #[test]
    fn writer_output_reparses() {
        let text = format!(
            "{HEADER}1,0.000001,a,b,TCP,60,\"say \"\"hi\"\", ok\"\n2,218.1742348,f688::1c8b,ff02::1:13,LLMNR,95,\n"
        );
        let batch = parse(&text).unwrap().batch;
        let mut out = Vec::new();
        write_capture_csv(&batch, &mut out).unwrap();
        let again = parse(std::str::from_utf8(&out).unwrap()).unwrap().batch;
        assert_eq!(again.records, batch.records);
    }
}
