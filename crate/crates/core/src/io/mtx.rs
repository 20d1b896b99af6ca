use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::sparse::{SparseBuffer, SparseRow};

use super::{parse_err, LineReader};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Field {
    Real,
    Pattern,
}

/// Streaming reader for MatrixMarket coordinate files whose entries are
/// grouped by row in nondecreasing row order.
pub struct MtxReader<R> {
    lines: LineReader<R>,
    field: Field,
    rows: usize,
    cols: usize,
    nnz: usize,
    read: usize,
    emitted: usize,
    pending: Option<(usize, usize, f64)>,
}

impl<R: BufRead> MtxReader<R> {
    pub fn new(inner: R) -> Result<Self> {
        let mut lines = LineReader::new(inner);
        let header = lines
            .next_line()?
            .ok_or_else(|| parse_err(1, "empty input, expected a MatrixMarket header"))?;
        let field = parse_banner(&header, lines.line_no())?;
        let size = loop {
            match lines.next_line()? {
                None => return Err(parse_err(lines.line_no(), "missing size line")),
                Some(l) if l.trim_start().starts_with('%') || l.trim().is_empty() => continue,
                Some(l) => break l,
            }
        };
        let nums: Vec<usize> = size
            .split_whitespace()
            .map(|t| t.parse::<usize>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| parse_err(lines.line_no(), format!("bad size line: {e}")))?;
        let [rows, cols, nnz] = nums[..] else {
            return Err(parse_err(
                lines.line_no(),
                "size line must hold rows, columns and entries",
            ));
        };
        Ok(MtxReader {
            lines,
            field,
            rows,
            cols,
            nnz,
            read: 0,
            emitted: 0,
            pending: None,
        })
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn declared_nnz(&self) -> usize {
        self.nnz
    }

    /// Next `(row, col, value)` with 0-based indices.
    fn entry(&mut self) -> Result<Option<(usize, usize, f64)>> {
        if let Some(e) = self.pending.take() {
            return Ok(Some(e));
        }
        let line = loop {
            match self.lines.next_line()? {
                None => return Ok(None),
                Some(l) if l.trim().is_empty() || l.trim_start().starts_with('%') => continue,
                Some(l) => break l,
            }
        };
        let at = self.lines.line_no();
        let mut tok = line.split_whitespace();
        let mut index = |what: &str, limit: usize| -> Result<usize> {
            let t = tok
                .next()
                .ok_or_else(|| parse_err(at, format!("missing {what} index")))?;
            let v: usize = t
                .parse()
                .map_err(|_| parse_err(at, format!("bad {what} index '{t}'")))?;
            if v == 0 || v > limit {
                return Err(parse_err(
                    at,
                    format!("{what} index {v} outside 1..={limit}"),
                ));
            }
            Ok(v - 1)
        };
        let i = index("row", self.rows)?;
        let j = index("column", self.cols)?;
        let v = match self.field {
            Field::Pattern => 1.0,
            Field::Real => {
                let t = tok.next().ok_or_else(|| parse_err(at, "missing value"))?;
                let v: f64 = t
                    .parse()
                    .map_err(|_| parse_err(at, format!("bad value '{t}'")))?;
                if !v.is_finite() {
                    return Err(parse_err(at, format!("non-finite value '{t}'")));
                }
                v
            }
        };
        if tok.next().is_some() {
            return Err(parse_err(at, "trailing tokens after entry"));
        }
        self.read += 1;
        if self.read > self.nnz {
            return Err(parse_err(
                at,
                format!("more entries than the declared {}", self.nnz),
            ));
        }
        Ok(Some((i, j, v)))
    }

    pub fn next_row(&mut self) -> Result<Option<SparseRow>> {
        if self.emitted == self.rows {
            if let Some((i, _, _)) = self.entry()? {
                return Err(parse_err(
                    self.lines.line_no(),
                    format!("entry for row {} after the last row", i + 1),
                ));
            }
            if self.read != self.nnz {
                return Err(parse_err(
                    self.lines.line_no(),
                    format!("declared {} entries, found {}", self.nnz, self.read),
                ));
            }
            return Ok(None);
        }
        let target = self.emitted;
        let mut pairs = Vec::new();
        while let Some(e) = self.entry()? {
            if e.0 == target {
                pairs.push((e.1, e.2));
            } else if e.0 > target {
                self.pending = Some(e);
                break;
            } else {
                return Err(parse_err(
                    self.lines.line_no(),
                    format!(
                        "entries must be grouped by row in nondecreasing order (row {} after row {})",
                        e.0 + 1,
                        target + 1
                    ),
                ));
            }
        }
        self.emitted += 1;
        let at = self.lines.line_no();
        SparseRow::from_pairs(pairs)
            .map(Some)
            .map_err(|e| parse_err(at, format!("row {}: {e}", target + 1)))
    }
}

fn parse_banner(line: &str, at: usize) -> Result<Field> {
    let t: Vec<String> = line
        .split_whitespace()
        .map(|s| s.to_ascii_lowercase())
        .collect();
    if t.len() != 5 || t[0] != "%%matrixmarket" || t[1] != "matrix" {
        return Err(parse_err(
            at,
            "expected '%%MatrixMarket matrix coordinate <field> general'",
        ));
    }
    if t[2] != "coordinate" {
        return Err(parse_err(
            at,
            format!("only coordinate format is supported, got '{}'", t[2]),
        ));
    }
    let field = match t[3].as_str() {
        "real" | "integer" => Field::Real,
        "pattern" => Field::Pattern,
        other => return Err(parse_err(at, format!("unsupported field '{other}'"))),
    };
    if t[4] != "general" {
        return Err(parse_err(
            at,
            format!("only general symmetry is supported, got '{}'", t[4]),
        ));
    }
    Ok(field)
}

/// Writes a row-grouped MatrixMarket file. `nnz` must match the rows given.
pub fn write_mtx<W, I>(mut w: W, rows: usize, cols: usize, nnz: usize, iter: I) -> Result<()>
where
    W: Write,
    I: IntoIterator<Item = SparseRow>,
{
    writeln!(w, "%%MatrixMarket matrix coordinate real general")?;
    writeln!(w, "{rows} {cols} {nnz}")?;
    let (mut seen, mut written) = (0, 0);
    for (i, r) in iter.into_iter().enumerate() {
        for (&j, &v) in r.indices().iter().zip(r.values()) {
            writeln!(w, "{} {} {}", i + 1, j + 1, v)?;
        }
        written += r.nnz();
        seen += 1;
    }
    if seen != rows || written != nnz {
        return Err(Error::dims(format!(
            "header says {rows} rows / {nnz} entries, wrote {seen} / {written}"
        )));
    }
    w.flush()?;
    Ok(())
}

pub fn write_mtx_buffer<W: Write>(w: W, a: &SparseBuffer) -> Result<()> {
    write_mtx(
        w,
        a.rows(),
        a.cols(),
        a.nnz(),
        (0..a.rows()).map(|i| a.sparse_row(i)),
    )
}
