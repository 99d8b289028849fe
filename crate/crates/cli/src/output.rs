//! Artifact writers and readers. Every float goes through [`fmt_f64`].

use std::fs;
use std::io;
use std::path::Path;

use ndarray::Array2;
use netmanifold::format::fmt_f64;
use netmanifold::{Error, ManifoldMatrix, Result};
use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};

/// Pretty JSON whose numbers carry 17 significant digits.
struct PreciseFormatter(PrettyFormatter<'static>);

impl Formatter for PreciseFormatter {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        writer.write_all(fmt_f64(value).as_bytes())
    }
    fn begin_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }
    fn end_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }
    fn begin_array_value<W: ?Sized + io::Write>(
        &mut self,
        w: &mut W,
        first: bool,
    ) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }
    fn end_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }
    fn begin_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }
    fn end_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }
    fn begin_object_key<W: ?Sized + io::Write>(
        &mut self,
        w: &mut W,
        first: bool,
    ) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }
    fn begin_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }
    fn end_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser =
        serde_json::Serializer::with_formatter(&mut buf, PreciseFormatter(PrettyFormatter::new()));
    value.serialize(&mut ser)?;
    buf.push(b'\n');
    Ok(String::from_utf8(buf).expect("serde_json emits UTF-8"))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    fs::write(path, to_json(value)?)?;
    Ok(())
}

/// CSV with a header line; `rows` are already split into fields.
pub fn write_csv(
    path: &Path,
    header: &[&str],
    rows: impl IntoIterator<Item = Vec<String>>,
) -> Result<()> {
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        out.push_str(&row.join(","));
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}

/// Square matrix labelled by ids: header `id,<ids...>`, first column the row id.
pub fn write_labelled_matrix(path: &Path, ids: &[String], matrix: &Array2<f64>) -> Result<()> {
    let mut header = vec!["id"];
    header.extend(ids.iter().map(String::as_str));
    let rows = ids.iter().zip(matrix.rows()).map(|(id, row)| {
        let mut fields = vec![id.clone()];
        fields.extend(row.iter().map(|&v| fmt_f64(v)));
        fields
    });
    write_csv(path, &header, rows)
}

fn parse_error(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::ParseError {
        path: path.display().to_string(),
        line,
        message: message.into(),
    }
}

/// Reads a matrix written by [`write_labelled_matrix`].
pub fn read_labelled_matrix(path: &Path) -> Result<(Vec<String>, Array2<f64>)> {
    if !path.is_file() {
        return Err(Error::MissingFile(path.to_path_buf()));
    }
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| parse_error(path, 1, "empty file"))?;
    let ids: Vec<String> = header.split(',').skip(1).map(str::to_string).collect();
    let m = ids.len();
    let mut matrix = Array2::zeros((m, m));
    let mut count = 0;
    for (i, line) in lines.enumerate() {
        let lineno = i + 2;
        if line.trim().is_empty() {
            continue;
        }
        if count == m {
            return Err(parse_error(path, lineno, "more rows than ids"));
        }
        let mut fields = line.split(',');
        let id = fields.next().unwrap_or_default();
        if id != ids[count] {
            return Err(parse_error(
                path,
                lineno,
                format!("row id `{id}` does not match header"),
            ));
        }
        let values: Vec<&str> = fields.collect();
        if values.len() != m {
            return Err(parse_error(
                path,
                lineno,
                format!("expected {m} values, found {}", values.len()),
            ));
        }
        for (j, v) in values.iter().enumerate() {
            matrix[[count, j]] = v
                .trim()
                .parse()
                .map_err(|_| parse_error(path, lineno, format!("bad number `{v}`")))?;
        }
        count += 1;
    }
    if count != m {
        return Err(parse_error(
            path,
            count + 2,
            format!("expected {m} rows, found {count}"),
        ));
    }
    Ok((ids, matrix))
}

pub fn read_manifold(path: &Path) -> Result<ManifoldMatrix> {
    let (ids, matrix) = read_labelled_matrix(path)?;
    ManifoldMatrix::precomputed(matrix, ids)
}

/// `id,x,y[,z]`.
pub fn write_embedding(path: &Path, ids: &[String], coords: &Array2<f64>) -> Result<()> {
    let names = ["x", "y", "z"];
    let mut header = vec!["id"];
    header.extend(names.iter().take(coords.ncols()));
    let rows = ids.iter().zip(coords.rows()).map(|(id, row)| {
        let mut fields = vec![id.clone()];
        fields.extend(row.iter().map(|&v| fmt_f64(v)));
        fields
    });
    write_csv(path, &header, rows)
}

/// Reads `id,x,y[,z]` back into ids and coordinates.
pub fn read_embedding(path: &Path) -> Result<(Vec<String>, Array2<f64>)> {
    if !path.is_file() {
        return Err(Error::MissingFile(path.to_path_buf()));
    }
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines();
    let dims = lines
        .next()
        .map_or(0, |h| h.split(',').count().saturating_sub(1));
    let mut ids = Vec::new();
    let mut values = Vec::new();
    for (i, line) in lines.enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let mut fields = line.split(',');
        ids.push(fields.next().unwrap_or_default().to_string());
        let row: Vec<&str> = fields.collect();
        if row.len() != dims {
            return Err(parse_error(
                path,
                i + 2,
                format!("expected {dims} coordinates"),
            ));
        }
        for v in row {
            values.push(
                v.parse::<f64>()
                    .map_err(|_| parse_error(path, i + 2, format!("bad number `{v}`")))?,
            );
        }
    }
    let coords = Array2::from_shape_vec((ids.len(), dims), values).expect("row lengths checked");
    Ok((ids, coords))
}
