//! On-disk formats: streamed matrix inputs (MatrixMarket coordinate and a
//! plain `col:value` format), dense sketch CSV and metrics CSV.
//!
//! Readers only need [`BufRead`]; they never seek, so every input is read in
//! a single forward pass.

mod mtx;
mod plain;

use std::io::{BufRead, Read, Write};

use serde::{Deserialize, Serialize};

use crate::bench::MetricsRow;
use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::sketch::Algo;
use crate::sparse::{SparseBuffer, SparseRow};

pub use mtx::{write_mtx, write_mtx_buffer, MtxReader};
pub use plain::{write_plain, write_plain_buffer, PlainReader};

pub(crate) fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        line,
        msg: msg.into(),
    }
}

/// Line iterator that tracks 1-based line numbers and strips line endings.
pub(crate) struct LineReader<R> {
    inner: R,
    line_no: usize,
    buf: String,
}

impl<R: BufRead> LineReader<R> {
    pub(crate) fn new(inner: R) -> Self {
        LineReader {
            inner,
            line_no: 0,
            buf: String::new(),
        }
    }

    pub(crate) fn line_no(&self) -> usize {
        self.line_no
    }

    pub(crate) fn next_line(&mut self) -> Result<Option<String>> {
        self.buf.clear();
        if self.inner.read_line(&mut self.buf)? == 0 {
            return Ok(None);
        }
        self.line_no += 1;
        let l = self.buf.trim_end_matches(['\n', '\r']);
        Ok(Some(l.to_string()))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Mtx,
    Plain,
}

impl std::str::FromStr for Format {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mtx" => Ok(Format::Mtx),
            "plain" => Ok(Format::Plain),
            other => Err(Error::invalid(format!(
                "unknown format '{other}' (expected mtx or plain)"
            ))),
        }
    }
}

impl std::fmt::Display for Format {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Format::Mtx => "mtx",
            Format::Plain => "plain",
        })
    }
}

/// A row stream in either input format, chosen by peeking at the first bytes.
pub enum RowReader<R> {
    Mtx(MtxReader<R>),
    Plain(PlainReader<R>),
}

impl<R: BufRead> RowReader<R> {
    /// `dim` is only consulted for plain input without a shape header.
    pub fn open(mut inner: R, dim: Option<usize>) -> Result<Self> {
        let head = inner.fill_buf()?;
        if head.starts_with(b"%%MatrixMarket") || head.starts_with(b"%%matrixmarket") {
            Ok(RowReader::Mtx(MtxReader::new(inner)?))
        } else {
            Ok(RowReader::Plain(PlainReader::new(inner, dim)?))
        }
    }

    pub fn format(&self) -> Format {
        match self {
            RowReader::Mtx(_) => Format::Mtx,
            RowReader::Plain(_) => Format::Plain,
        }
    }

    pub fn cols(&self) -> usize {
        match self {
            RowReader::Mtx(r) => r.cols(),
            RowReader::Plain(r) => r.cols(),
        }
    }

    pub fn next_row(&mut self) -> Result<Option<SparseRow>> {
        match self {
            RowReader::Mtx(r) => r.next_row(),
            RowReader::Plain(r) => r.next_row(),
        }
    }

    /// Collects the remaining rows.
    pub fn read_all(mut self) -> Result<SparseBuffer> {
        let mut a = SparseBuffer::new(self.cols());
        while let Some(r) = self.next_row()? {
            a.append_row(&r)?;
        }
        Ok(a)
    }
}

impl<R: BufRead> Iterator for RowReader<R> {
    type Item = Result<SparseRow>;

    fn next(&mut self) -> Option<Self::Item> {
        self.next_row().transpose()
    }
}

/// Forward-only byte counter around a reader. It implements [`Read`] but
/// not `Seek`, so anything reading through it is single-pass by construction.
pub struct ForwardOnly<R> {
    inner: R,
    bytes: u64,
}

impl<R: Read> ForwardOnly<R> {
    pub fn new(inner: R) -> Self {
        ForwardOnly { inner, bytes: 0 }
    }

    pub fn bytes_read(&self) -> u64 {
        self.bytes
    }
}

impl<R: Read> Read for ForwardOnly<R> {
    fn read(&mut self, buf: &mut [u8]) -> std::io::Result<usize> {
        let n = self.inner.read(buf)?;
        self.bytes += n as u64;
        Ok(n)
    }
}

/// Writes a sketch as ℓ CSV lines with 17 significant digits per value.
pub fn write_sketch<W: Write>(mut w: W, b: &DenseMatrix) -> Result<()> {
    for r in b.row_iter() {
        let mut first = true;
        for v in r {
            if !first {
                w.write_all(b",")?;
            }
            write!(w, "{v:.16e}")?;
            first = false;
        }
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_sketch<R: Read>(r: R) -> Result<DenseMatrix> {
    let mut rd = csv::ReaderBuilder::new().has_headers(false).from_reader(r);
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, rec) in rd.records().enumerate() {
        let rec = rec?;
        let row = rec
            .iter()
            .map(|t| {
                t.trim()
                    .parse::<f64>()
                    .map_err(|_| parse_err(i + 1, format!("bad sketch value '{t}'")))
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    let b = DenseMatrix::from_rows(&rows)?;
    if !b.is_finite() {
        return Err(Error::NonFinite("sketch file"));
    }
    Ok(b)
}

pub const METRICS_HEADER: [&str; 10] = [
    "algo",
    "n",
    "d",
    "ell",
    "z",
    "k",
    "proj_err",
    "cov_err",
    "wall_seconds",
    "seed",
];

/// Spelling of an undefined metric in CSV output.
pub const NA: &str = "NA";

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| NA.to_string(), |x| x.to_string())
}

pub fn write_metrics<W: Write>(w: W, rows: &[MetricsRow]) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(METRICS_HEADER)?;
    for r in rows {
        wr.write_record([
            r.algo.tag().to_string(),
            r.n.to_string(),
            r.d.to_string(),
            r.ell.to_string(),
            r.z.to_string(),
            r.k.to_string(),
            opt(r.proj_err),
            opt(r.cov_err),
            opt(Some(r.wall_seconds).filter(|w| w.is_finite())),
            r.seed.to_string(),
        ])?;
    }
    wr.flush()?;
    Ok(())
}

pub fn read_metrics<R: Read>(r: R) -> Result<Vec<MetricsRow>> {
    let mut rd = csv::Reader::from_reader(r);
    if rd.headers()?.iter().ne(METRICS_HEADER) {
        return Err(parse_err(
            1,
            format!("metrics header must be {}", METRICS_HEADER.join(",")),
        ));
    }
    let mut out = Vec::new();
    for (i, rec) in rd.records().enumerate() {
        let rec = rec?;
        let line = i + 2;
        let field = |j: usize| rec.get(j).ok_or_else(|| parse_err(line, "short record"));
        let int = |j: usize| -> Result<usize> {
            field(j)?
                .parse()
                .map_err(|_| parse_err(line, format!("bad {}", METRICS_HEADER[j])))
        };
        let real = |j: usize| -> Result<Option<f64>> {
            let t = field(j)?;
            if t == NA {
                return Ok(None);
            }
            t.parse()
                .map(Some)
                .map_err(|_| parse_err(line, format!("bad {}", METRICS_HEADER[j])))
        };
        out.push(MetricsRow {
            algo: field(0)?.parse::<Algo>()?,
            n: int(1)?,
            d: int(2)?,
            ell: int(3)?,
            z: int(4)?,
            k: int(5)?,
            proj_err: real(6)?,
            cov_err: real(7)?,
            wall_seconds: real(8)?.unwrap_or(f64::NAN),
            seed: field(9)?.parse().map_err(|_| parse_err(line, "bad seed"))?,
        });
    }
    Ok(out)
}
