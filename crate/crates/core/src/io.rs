//! Sequence and prediction files.
//!
//! Sequence files are JSON Lines: a header object
//! `{"format":"metahmm-sequences","version":1}` followed by one
//! `{"id":..,"task":..,"symbols":[..]}` object per sequence.
//!
//! Prediction files come in two encodings with identical content:
//!
//! * binary, little-endian: magic `MHMM`, `version: u32`, `symbols: u32`,
//!   then records of `sequence_id: u64`, `t: u32`, `symbols` x `f32`;
//! * JSON Lines: header `{"format":"metahmm-predictions","version":1,"symbols":V}`
//!   then `{"sequence_id":..,"t":..,"probs":[..]}` per record.
//!
//! `t` is the 0-based position, i.e. the number of preceding symbols the
//! prediction conditions on. Readers validate every vector (finite,
//! non-negative, mass within 1e-6 of one) and name the offending record.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::NORM_TOL;

pub const FORMAT_VERSION: u32 = 1;
pub const MAGIC: &[u8; 4] = b"MHMM";
const SEQUENCE_FORMAT: &str = "metahmm-sequences";
const PREDICTION_FORMAT: &str = "metahmm-predictions";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SequenceRecord {
    pub id: u64,
    pub task: u64,
    pub symbols: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub sequence_id: u64,
    pub t: u32,
    pub probs: Vec<f32>,
}

impl PredictionRecord {
    pub fn from_f64(sequence_id: u64, t: u32, probs: &[f64]) -> Self {
        Self { sequence_id, t, probs: probs.iter().map(|&p| p as f32).collect() }
    }

    pub fn validate(&self) -> Result<()> {
        let ctx = |msg: String| Error::Validation(format!("sequence {} position {}: {msg}", self.sequence_id, self.t));
        if let Some(x) = self.probs.iter().find(|x| !x.is_finite() || **x < 0.0) {
            return Err(ctx(format!("probability {x} is negative or non-finite")));
        }
        let sum: f64 = self.probs.iter().map(|&x| x as f64).sum();
        if (sum - 1.0).abs() > NORM_TOL {
            return Err(ctx(format!("probabilities sum to {sum}")));
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct Header {
    format: String,
    version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    symbols: Option<u32>,
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(|e| Error::io(path, e))
}

pub fn write_sequences(path: &Path, records: &[SequenceRecord]) -> Result<()> {
    let mut out = create(path)?;
    let header = Header { format: SEQUENCE_FORMAT.into(), version: FORMAT_VERSION, symbols: None };
    let mut write_line = |value: String| -> std::io::Result<()> {
        out.write_all(value.as_bytes())?;
        out.write_all(b"\n")
    };
    write_line(serde_json::to_string(&header).expect("header serializes")).map_err(|e| Error::io(path, e))?;
    for record in records {
        write_line(serde_json::to_string(record).expect("record serializes")).map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

fn check_header(path: &Path, line: &str, format: &str) -> Result<Header> {
    let header: Header =
        serde_json::from_str(line).map_err(|e| Error::format(path, format!("line 1: bad header: {e}")))?;
    if header.format != format {
        return Err(Error::format(path, format!("line 1: expected format {format}, found {}", header.format)));
    }
    if header.version != FORMAT_VERSION {
        return Err(Error::format(
            path,
            format!("unsupported format version {} (expected {FORMAT_VERSION})", header.version),
        ));
    }
    Ok(header)
}

pub fn read_sequences(path: &Path) -> Result<Vec<SequenceRecord>> {
    let mut lines = open(path)?.lines();
    let first = lines.next().ok_or_else(|| Error::format(path, "empty file"))?.map_err(|e| Error::io(path, e))?;
    check_header(path, &first, SEQUENCE_FORMAT)?;
    let mut records = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let record: SequenceRecord =
            serde_json::from_str(&line).map_err(|e| Error::format(path, format!("line {}: {e}", i + 2)))?;
        records.push(record);
    }
    Ok(records)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PredictionFormat {
    Bin,
    Jsonl,
}

pub struct PredictionWriter {
    path: PathBuf,
    out: BufWriter<File>,
    format: PredictionFormat,
    symbols: usize,
}

impl PredictionWriter {
    pub fn create(path: &Path, format: PredictionFormat, symbols: usize) -> Result<Self> {
        let mut out = create(path)?;
        let io = |e| Error::io(path, e);
        match format {
            PredictionFormat::Bin => {
                out.write_all(MAGIC).map_err(io)?;
                out.write_all(&FORMAT_VERSION.to_le_bytes()).map_err(io)?;
                out.write_all(&(symbols as u32).to_le_bytes()).map_err(io)?;
            }
            PredictionFormat::Jsonl => {
                let header =
                    Header { format: PREDICTION_FORMAT.into(), version: FORMAT_VERSION, symbols: Some(symbols as u32) };
                writeln!(out, "{}", serde_json::to_string(&header).expect("header serializes")).map_err(io)?;
            }
        }
        Ok(Self { path: path.to_path_buf(), out, format, symbols })
    }

    pub fn write(&mut self, record: &PredictionRecord) -> Result<()> {
        if record.probs.len() != self.symbols {
            return Err(Error::Validation(format!(
                "sequence {} position {}: {} probabilities for {} symbols",
                record.sequence_id,
                record.t,
                record.probs.len(),
                self.symbols
            )));
        }
        let io = |e| Error::io(&self.path, e);
        match self.format {
            PredictionFormat::Bin => {
                self.out.write_all(&record.sequence_id.to_le_bytes()).map_err(io)?;
                self.out.write_all(&record.t.to_le_bytes()).map_err(io)?;
                for p in &record.probs {
                    self.out.write_all(&p.to_le_bytes()).map_err(io)?;
                }
            }
            PredictionFormat::Jsonl => {
                let line = serde_json::to_string(record).expect("record serializes");
                writeln!(self.out, "{line}").map_err(io)?;
            }
        }
        Ok(())
    }

    pub fn finish(mut self) -> Result<()> {
        self.out.flush().map_err(|e| Error::io(&self.path, e))
    }
}

pub fn write_predictions(
    path: &Path,
    format: PredictionFormat,
    symbols: usize,
    records: &[PredictionRecord],
) -> Result<()> {
    let mut writer = PredictionWriter::create(path, format, symbols)?;
    for record in records {
        writer.write(record)?;
    }
    writer.finish()
}

enum Source {
    Bin { reader: BufReader<File>, offset: u64 },
    Jsonl { lines: std::io::Lines<BufReader<File>>, line: usize },
}

/// Streaming reader over either prediction encoding; the encoding is
/// detected from the first bytes.
pub struct PredictionReader {
    path: PathBuf,
    source: Source,
    symbols: usize,
    format: PredictionFormat,
    index: u64,
    failed: bool,
}

impl PredictionReader {
    pub fn open(path: &Path) -> Result<Self> {
        let mut reader = open(path)?;
        let head = reader.fill_buf().map_err(|e| Error::io(path, e))?;
        if head.starts_with(MAGIC) {
            let mut header = [0u8; 12];
            reader.read_exact(&mut header).map_err(|_| Error::format(path, "truncated header"))?;
            let version = u32::from_le_bytes(header[4..8].try_into().unwrap());
            if version != FORMAT_VERSION {
                return Err(Error::format(
                    path,
                    format!("unsupported format version {version} (expected {FORMAT_VERSION})"),
                ));
            }
            let symbols = u32::from_le_bytes(header[8..12].try_into().unwrap()) as usize;
            Ok(Self {
                path: path.to_path_buf(),
                source: Source::Bin { reader, offset: 12 },
                symbols,
                format: PredictionFormat::Bin,
                index: 0,
                failed: false,
            })
        } else if head.first() == Some(&b'{') {
            let mut lines = reader.lines();
            let first =
                lines.next().ok_or_else(|| Error::format(path, "empty file"))?.map_err(|e| Error::io(path, e))?;
            let header = check_header(path, &first, PREDICTION_FORMAT)?;
            let symbols =
                header.symbols.ok_or_else(|| Error::format(path, "line 1: header lacks symbol count"))? as usize;
            Ok(Self {
                path: path.to_path_buf(),
                source: Source::Jsonl { lines, line: 1 },
                symbols,
                format: PredictionFormat::Jsonl,
                index: 0,
                failed: false,
            })
        } else {
            Err(Error::format(path, "not a prediction file (bad magic)"))
        }
    }

    pub fn symbols(&self) -> usize {
        self.symbols
    }

    pub fn format(&self) -> PredictionFormat {
        self.format
    }

    fn read_next(&mut self) -> Result<Option<PredictionRecord>> {
        let path = &self.path;
        let record = match &mut self.source {
            Source::Bin { reader, offset } => {
                let len = 12 + 4 * self.symbols;
                let mut buf = vec![0u8; len];
                let mut filled = 0;
                while filled < len {
                    let n = reader.read(&mut buf[filled..]).map_err(|e| Error::io(path, e))?;
                    if n == 0 {
                        break;
                    }
                    filled += n;
                }
                if filled == 0 {
                    return Ok(None);
                }
                if filled < len {
                    return Err(Error::format(
                        path,
                        format!("record {} truncated at byte {}", self.index, *offset + filled as u64),
                    ));
                }
                *offset += len as u64;
                let probs = buf[12..].chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap())).collect();
                PredictionRecord {
                    sequence_id: u64::from_le_bytes(buf[0..8].try_into().unwrap()),
                    t: u32::from_le_bytes(buf[8..12].try_into().unwrap()),
                    probs,
                }
            }
            Source::Jsonl { lines, line } => loop {
                let Some(text) = lines.next() else { return Ok(None) };
                let text = text.map_err(|e| Error::io(path, e))?;
                *line += 1;
                if text.trim().is_empty() {
                    continue;
                }
                let record: PredictionRecord =
                    serde_json::from_str(&text).map_err(|e| Error::format(path, format!("line {line}: {e}")))?;
                if record.probs.len() != self.symbols {
                    return Err(Error::format(
                        path,
                        format!(
                            "line {line}: sequence {} position {} has {} probabilities, expected {}",
                            record.sequence_id,
                            record.t,
                            record.probs.len(),
                            self.symbols
                        ),
                    ));
                }
                break record;
            },
        };
        record.validate().map_err(|e| Error::format(path, e.to_string()))?;
        self.index += 1;
        Ok(Some(record))
    }
}

impl Iterator for PredictionReader {
    type Item = Result<PredictionRecord>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.failed {
            return None;
        }
        let item = self.read_next().transpose();
        if matches!(item, Some(Err(_))) {
            self.failed = true;
        }
        item
    }
}

/// Reads a whole prediction file. Returns the symbol count with the records.
pub fn read_predictions(path: &Path) -> Result<(usize, Vec<PredictionRecord>)> {
    let reader = PredictionReader::open(path)?;
    let symbols = reader.symbols();
    let records = reader.collect::<Result<Vec<_>>>()?;
    Ok((symbols, records))
}
