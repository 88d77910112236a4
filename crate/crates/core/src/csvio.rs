//! Small CSV helpers shared by the stage readers and writers.
//!
//! All floating point output goes through [`fmt_f64`], which rounds to six
//! decimals so files are byte-stable across platforms.

use std::io::{Read, Write};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CsvError {
    #[error("{path}: {source}")]
    Csv {
        path: String,
        #[source]
        source: csv::Error,
    },
    #[error("{path}: expected header `{expected}`, found `{found}`")]
    Header {
        path: String,
        expected: String,
        found: String,
    },
    #[error("{path}:{line}: {reason}")]
    Field {
        path: String,
        line: u64,
        reason: String,
    },
}

/// Formats a float with six decimals; `-0.000000` is normalised to `0.000000`.
pub fn fmt_f64(x: f64) -> String {
    let s = format!("{x:.6}");
    if s.starts_with('-') && s[1..].bytes().all(|b| b == b'0' || b == b'.') {
        s[1..].to_owned()
    } else {
        s
    }
}

pub fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

/// Streams the records of a headed CSV file after checking the exact header.
///
/// The callback receives the 1-based line number of the record and its fields.
pub fn read_records<R: Read>(
    reader: R,
    path: &str,
    header: &[&str],
    mut on_record: impl FnMut(u64, &csv::StringRecord) -> Result<(), String>,
) -> Result<(), CsvError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let found = rdr
        .headers()
        .map_err(|source| CsvError::Csv {
            path: path.to_owned(),
            source,
        })?
        .clone();
    if found.iter().ne(header.iter().copied()) {
        return Err(CsvError::Header {
            path: path.to_owned(),
            expected: header.join(","),
            found: found.iter().collect::<Vec<_>>().join(","),
        });
    }
    let mut record = csv::StringRecord::new();
    loop {
        match rdr.read_record(&mut record) {
            Ok(false) => break,
            Ok(true) => {
                let line = record.position().map(|p| p.line()).unwrap_or(0);
                on_record(line, &record).map_err(|reason| CsvError::Field {
                    path: path.to_owned(),
                    line,
                    reason,
                })?;
            }
            Err(source) => {
                return Err(CsvError::Csv {
                    path: path.to_owned(),
                    source,
                })
            }
        }
    }
    Ok(())
}

pub fn parse_f64(field: &str, name: &str) -> Result<f64, String> {
    let v: f64 = field
        .parse()
        .map_err(|_| format!("{name}: not a number: `{field}`"))?;
    if !v.is_finite() {
        return Err(format!("{name}: non-finite value `{field}`"));
    }
    Ok(v)
}

pub fn parse_u64(field: &str, name: &str) -> Result<u64, String> {
    field
        .parse()
        .map_err(|_| format!("{name}: not a nonnegative integer: `{field}`"))
}

/// Writes rows through a plain comma joiner. Fields produced by this crate
/// never contain commas except ids, which are quoted by [`quote_field`].
pub struct RowWriter<W: Write> {
    out: W,
}

impl<W: Write> RowWriter<W> {
    pub fn new(mut out: W, header: &[&str]) -> std::io::Result<Self> {
        writeln!(out, "{}", header.join(","))?;
        Ok(Self { out })
    }

    pub fn row<S: AsRef<str>>(&mut self, fields: &[S]) -> std::io::Result<()> {
        let mut first = true;
        for f in fields {
            if !first {
                self.out.write_all(b",")?;
            }
            first = false;
            self.out.write_all(quote_field(f.as_ref()).as_bytes())?;
        }
        self.out.write_all(b"\n")
    }

    pub fn finish(mut self) -> std::io::Result<W> {
        self.out.flush()?;
        Ok(self.out)
    }
}

pub fn quote_field(s: &str) -> std::borrow::Cow<'_, str> {
    if s.contains([',', '"', '\n', '\r']) {
        std::borrow::Cow::Owned(format!("\"{}\"", s.replace('"', "\"\"")))
    } else {
        std::borrow::Cow::Borrowed(s)
    }
}
