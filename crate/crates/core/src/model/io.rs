//! On-disk formats.
//!
//! Dataset (`TRDS`): magic `TRDS`, version byte `0x01`, little-endian `u32`
//! `m1`, `m2`, `total_count`, then per sample one `f64` response followed by
//! the `m1·m2` design entries row-major. Matrix (`TRMX`): magic `TRMX`,
//! version `0x01`, `u32` rows and cols, then `f64` entries row-major.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::model::Dataset;

pub const DATASET_MAGIC: &[u8; 4] = b"TRDS";
pub const MATRIX_MAGIC: &[u8; 4] = b"TRMX";
pub const FORMAT_VERSION: u8 = 0x01;

const HEADER_LEN: u64 = 4 + 1 + 12;

pub fn encode_dataset(d: &Dataset) -> Vec<u8> {
    let per = 1 + d.m1() * d.m2();
    let mut buf = Vec::with_capacity(HEADER_LEN as usize + d.len() * per * 8);
    buf.extend_from_slice(DATASET_MAGIC);
    buf.push(FORMAT_VERSION);
    for v in [d.m1(), d.m2(), d.len()] {
        buf.extend_from_slice(&(v as u32).to_le_bytes());
    }
    for i in 0..d.len() {
        buf.extend_from_slice(&d.response(i).to_le_bytes());
        for x in d.design(i) {
            buf.extend_from_slice(&x.to_le_bytes());
        }
    }
    buf
}

pub fn decode_dataset(bytes: &[u8]) -> Result<Dataset> {
    let mut cur = Cursor::new(bytes);
    cur.magic(DATASET_MAGIC)?;
    let m1 = cur.u32()? as usize;
    let m2 = cur.u32()? as usize;
    let count_at = cur.pos;
    let total = cur.u32()? as usize;
    if m1 == 0 || m2 == 0 {
        return Err(cur.error_at(5, "design dimensions must be positive"));
    }
    if total == 0 || !total.is_multiple_of(2) {
        return Err(cur.error_at(
            count_at,
            format!("sample count must be a positive even number, got {total}"),
        ));
    }
    let d = m1 * m2;
    let needed = total as u64 * (d as u64 + 1) * 8;
    let remaining = (bytes.len() - cur.pos) as u64;
    if remaining < needed {
        return Err(cur.error_at(
            bytes.len(),
            format!("truncated payload: expected {needed} bytes, found {remaining}"),
        ));
    }
    if remaining > needed {
        return Err(cur.error_at(cur.pos + needed as usize, "trailing bytes after payload"));
    }
    let mut x = Vec::with_capacity(total * d);
    let mut y = Vec::with_capacity(total);
    for _ in 0..total {
        y.push(cur.f64()?);
        for _ in 0..d {
            x.push(cur.f64()?);
        }
    }
    Dataset::new(m1, m2, x, y).map_err(|e| Error::Format {
        offset: HEADER_LEN,
        message: e.to_string(),
    })
}

pub fn write_dataset(d: &Dataset, path: &Path) -> Result<()> {
    write_bytes(path, &encode_dataset(d))
}

pub fn read_dataset(path: &Path) -> Result<Dataset> {
    decode_dataset(&read_bytes(path)?)
}

pub fn encode_matrix(m: &Matrix) -> Vec<u8> {
    let mut buf = Vec::with_capacity(13 + m.as_slice().len() * 8);
    buf.extend_from_slice(MATRIX_MAGIC);
    buf.push(FORMAT_VERSION);
    buf.extend_from_slice(&(m.rows() as u32).to_le_bytes());
    buf.extend_from_slice(&(m.cols() as u32).to_le_bytes());
    for v in m.as_slice() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    buf
}

pub fn decode_matrix(bytes: &[u8]) -> Result<Matrix> {
    let mut cur = Cursor::new(bytes);
    cur.magic(MATRIX_MAGIC)?;
    let rows = cur.u32()? as usize;
    let cols = cur.u32()? as usize;
    if rows == 0 || cols == 0 {
        return Err(cur.error_at(5, "matrix dimensions must be positive"));
    }
    let needed = rows as u64 * cols as u64 * 8;
    let remaining = (bytes.len() - cur.pos) as u64;
    if remaining != needed {
        return Err(cur.error_at(
            bytes.len().min(cur.pos + needed as usize),
            format!("expected {needed} payload bytes, found {remaining}"),
        ));
    }
    let data = (0..rows * cols)
        .map(|_| cur.f64())
        .collect::<Result<Vec<_>>>()?;
    Matrix::new(rows, cols, data).map_err(|e| Error::Format {
        offset: 13,
        message: e.to_string(),
    })
}

pub fn write_matrix(m: &Matrix, path: &Path) -> Result<()> {
    write_bytes(path, &encode_matrix(m))
}

pub fn read_matrix(path: &Path) -> Result<Matrix> {
    decode_matrix(&read_bytes(path)?)
}

/// CSV variant: header `y,x_0_0,...,x_{m1-1}_{m2-1}`, one sample per line.
/// Values use the shortest representation that parses back to the same
/// `f64`.
pub fn write_dataset_csv(d: &Dataset, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let mut header = String::from("y");
    for i in 0..d.m1() {
        for j in 0..d.m2() {
            header.push_str(&format!(",x_{i}_{j}"));
        }
    }
    let io = |e| Error::io(path, e);
    writeln!(w, "{header}").map_err(io)?;
    for k in 0..d.len() {
        let mut line = format!("{:?}", d.response(k));
        for x in d.design(k) {
            line.push(',');
            line.push_str(&format!("{x:?}"));
        }
        writeln!(w, "{line}").map_err(io)?;
    }
    w.flush().map_err(io)
}

pub fn read_dataset_csv(path: &Path) -> Result<Dataset> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut lines = BufReader::new(file).lines();
    let header = match lines.next() {
        Some(line) => line.map_err(|e| Error::io(path, e))?,
        None => {
            return Err(Error::Format {
                offset: 0,
                message: "empty CSV".into(),
            })
        }
    };
    let (m1, m2) = parse_csv_header(&header)?;
    let mut offset = header.len() as u64 + 1;
    let mut x = Vec::new();
    let mut y = Vec::new();
    for line in lines {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            offset += line.len() as u64 + 1;
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 1 + m1 * m2 {
            return Err(Error::Format {
                offset,
                message: format!("expected {} fields, found {}", 1 + m1 * m2, fields.len()),
            });
        }
        for (k, f) in fields.iter().enumerate() {
            let v: f64 = f.trim().parse().map_err(|_| Error::Format {
                offset,
                message: format!("field {k} is not a number: {f:?}"),
            })?;
            if k == 0 {
                y.push(v);
            } else {
                x.push(v);
            }
        }
        offset += line.len() as u64 + 1;
    }
    Dataset::new(m1, m2, x, y).map_err(|e| Error::Format {
        offset,
        message: e.to_string(),
    })
}

fn parse_csv_header(header: &str) -> Result<(usize, usize)> {
    let fields: Vec<&str> = header.trim().split(',').collect();
    let bad = |msg: &str| Error::Format {
        offset: 0,
        message: format!("bad CSV header: {msg}"),
    };
    if fields.first() != Some(&"y") || fields.len() < 2 {
        return Err(bad("must start with `y` followed by design columns"));
    }
    let last = fields[fields.len() - 1];
    let parts: Vec<&str> = last.split('_').collect();
    if parts.len() != 3 || parts[0] != "x" {
        return Err(bad("last column must be x_<i>_<j>"));
    }
    let m1 = parts[1].parse::<usize>().map_err(|_| bad("row index"))? + 1;
    let m2 = parts[2].parse::<usize>().map_err(|_| bad("column index"))? + 1;
    if fields.len() != 1 + m1 * m2 {
        return Err(bad("column count does not match x_<m1-1>_<m2-1>"));
    }
    let mut k = 1;
    for i in 0..m1 {
        for j in 0..m2 {
            if fields[k] != format!("x_{i}_{j}") {
                return Err(bad(&format!("column {k} should be x_{i}_{j}")));
            }
            k += 1;
        }
    }
    Ok((m1, m2))
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    w.write_all(bytes).map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    File::open(path)
        .and_then(|mut f| f.read_to_end(&mut buf))
        .map_err(|e| Error::io(path, e))?;
    Ok(buf)
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn new(bytes: &'a [u8]) -> Self {
        Self { bytes, pos: 0 }
    }

    fn error_at(&self, offset: usize, message: impl Into<String>) -> Error {
        Error::Format {
            offset: offset as u64,
            message: message.into(),
        }
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.bytes.len() {
            return Err(self.error_at(
                self.bytes.len(),
                format!("unexpected end of input reading {n} bytes"),
            ));
        }
        let out = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    fn magic(&mut self, expected: &[u8; 4]) -> Result<()> {
        let got = self.take(4)?;
        if got != expected {
            return Err(self.error_at(
                0,
                format!(
                    "bad magic {:?}, expected {:?}",
                    String::from_utf8_lossy(got),
                    String::from_utf8_lossy(expected)
                ),
            ));
        }
        let version = self.take(1)?[0];
        if version != FORMAT_VERSION {
            return Err(self.error_at(4, format!("unsupported version {version:#04x}")));
        }
        Ok(())
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}
