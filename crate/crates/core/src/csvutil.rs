use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use crate::{Error, Result};

pub(crate) fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
    }
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

pub(crate) fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::io(path, e))
}

pub(crate) fn writer(path: &Path) -> Result<csv::Writer<BufWriter<File>>> {
    Ok(csv::WriterBuilder::new()
        .terminator(csv::Terminator::CRLF)
        .from_writer(create(path)?))
}

pub(crate) fn reader(path: &Path) -> Result<csv::Reader<BufReader<File>>> {
    Ok(csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(open(path)?))
}

/// Parses a CSV field as `f64`, reporting the record position on failure.
pub(crate) fn parse_f64(path: &Path, record: &csv::StringRecord, idx: usize) -> Result<f64> {
    let line = record.position().map_or(0, |p| p.line() as usize);
    let field = record
        .get(idx)
        .ok_or_else(|| Error::parse(path.display(), line, format!("missing column {idx}")))?;
    field
        .parse::<f64>()
        .map_err(|_| Error::parse(path.display(), line, format!("not a number: `{field}`")))
}
