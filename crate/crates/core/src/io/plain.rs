use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::sparse::{SparseBuffer, SparseRow};

use super::{parse_err, LineReader};

const MAGIC: &str = "sfd-stream";

/// Streaming reader for the plain row format: one row per line as
/// space-separated `col:value` pairs with 0-based columns. Lines starting
/// with `#` are comments; a `# sfd-stream d=<d> n=<n>` comment before the
/// first row declares the shape.
pub struct PlainReader<R> {
    lines: LineReader<R>,
    cols: usize,
    declared_rows: Option<usize>,
    emitted: usize,
    lookahead: Option<String>,
}

impl<R: BufRead> PlainReader<R> {
    /// `dim` supplies the column count when the input has no header; when
    /// both are present they must agree.
    pub fn new(inner: R, dim: Option<usize>) -> Result<Self> {
        let mut lines = LineReader::new(inner);
        let mut header: Option<(usize, Option<usize>)> = None;
        let mut lookahead = None;
        while let Some(l) = lines.next_line()? {
            let t = l.trim();
            match t.strip_prefix('#') {
                Some(c) if header.is_none() && c.trim_start().starts_with(MAGIC) => {
                    header = Some(parse_header(c, lines.line_no())?);
                }
                Some(_) => {}
                None => {
                    lookahead = Some(l);
                    break;
                }
            }
        }
        let cols =
            match (header.map(|h| h.0), dim) {
                (Some(h), Some(d)) if h != d => {
                    return Err(Error::invalid(format!(
                        "header declares d={h} but d={d} was requested"
                    )));
                }
                (Some(h), _) => h,
                (None, Some(d)) => d,
                (None, None) => return Err(Error::invalid(
                    "plain input needs a '# sfd-stream d=<d>' header or an explicit column count",
                )),
            };
        Ok(PlainReader {
            lines,
            cols,
            declared_rows: header.and_then(|h| h.1),
            emitted: 0,
            lookahead,
        })
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn declared_rows(&self) -> Option<usize> {
        self.declared_rows
    }

    pub fn next_row(&mut self) -> Result<Option<SparseRow>> {
        let line = loop {
            let l = match self.lookahead.take() {
                Some(l) => l,
                None => match self.lines.next_line()? {
                    Some(l) => l,
                    None => {
                        if let Some(n) = self.declared_rows {
                            if n != self.emitted {
                                return Err(parse_err(
                                    self.lines.line_no(),
                                    format!("header declares {n} rows, found {}", self.emitted),
                                ));
                            }
                        }
                        return Ok(None);
                    }
                },
            };
            if !l.trim_start().starts_with('#') {
                break l;
            }
        };
        let at = self.lines.line_no();
        let mut pairs = Vec::new();
        for tok in line.split_whitespace() {
            let (c, v) = tok
                .split_once(':')
                .ok_or_else(|| parse_err(at, format!("expected col:value, got '{tok}'")))?;
            let c: usize = c
                .parse()
                .map_err(|_| parse_err(at, format!("bad column '{c}'")))?;
            let v: f64 = v
                .parse()
                .map_err(|_| parse_err(at, format!("bad value '{v}'")))?;
            if c >= self.cols {
                return Err(parse_err(
                    at,
                    format!("column {c} outside 0..{}", self.cols),
                ));
            }
            if !v.is_finite() {
                return Err(parse_err(at, format!("non-finite value in '{tok}'")));
            }
            pairs.push((c, v));
        }
        self.emitted += 1;
        SparseRow::from_pairs(pairs)
            .map(Some)
            .map_err(|e| parse_err(at, e.to_string()))
    }
}

fn parse_header(body: &str, at: usize) -> Result<(usize, Option<usize>)> {
    let mut d = None;
    let mut n = None;
    for tok in body.split_whitespace().skip(1) {
        let (k, v) = tok
            .split_once('=')
            .ok_or_else(|| parse_err(at, format!("bad header field '{tok}'")))?;
        let v: usize = v
            .parse()
            .map_err(|_| parse_err(at, format!("bad header value '{tok}'")))?;
        match k {
            "d" => d = Some(v),
            "n" => n = Some(v),
            _ => return Err(parse_err(at, format!("unknown header field '{k}'"))),
        }
    }
    let d = d.ok_or_else(|| parse_err(at, "header lacks d=<columns>"))?;
    Ok((d, n))
}

/// Writes rows in the plain format with a shape header.
pub fn write_plain<W, I>(mut w: W, rows: usize, cols: usize, iter: I) -> Result<()>
where
    W: Write,
    I: IntoIterator<Item = SparseRow>,
{
    writeln!(w, "# {MAGIC} d={cols} n={rows}")?;
    let mut seen = 0;
    for r in iter {
        let mut first = true;
        for (&j, &v) in r.indices().iter().zip(r.values()) {
            if !first {
                w.write_all(b" ")?;
            }
            write!(w, "{j}:{v}")?;
            first = false;
        }
        w.write_all(b"\n")?;
        seen += 1;
    }
    if seen != rows {
        return Err(Error::dims(format!(
            "header says {rows} rows, wrote {seen}"
        )));
    }
    w.flush()?;
    Ok(())
}

pub fn write_plain_buffer<W: Write>(w: W, a: &SparseBuffer) -> Result<()> {
    write_plain(
        w,
        a.rows(),
        a.cols(),
        (0..a.rows()).map(|i| a.sparse_row(i)),
    )
}
