//! Word2vec text format: `|V| d` header, then one `word v1 ... vd` line
//! per word. Values are printed with shortest round-trip formatting, so
//! re-reading a written file reproduces the vectors bit-exactly.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use ndarray::Array2;

use crate::error::{Error, Result};

pub fn write_text<'a, I>(path: &Path, dim: usize, rows: I) -> Result<()>
where
    I: IntoIterator<Item = (&'a str, &'a [f64])>,
{
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    let rows: Vec<(&str, &[f64])> = rows.into_iter().collect();
    writeln!(out, "{} {}", rows.len(), dim).map_err(|e| Error::io(path, e))?;
    for (word, vector) in rows {
        debug_assert_eq!(vector.len(), dim);
        write!(out, "{word}").map_err(|e| Error::io(path, e))?;
        for v in vector {
            write!(out, " {v}").map_err(|e| Error::io(path, e))?;
        }
        writeln!(out).map_err(|e| Error::io(path, e))?;
    }
    Ok(())
}

pub fn read_text(path: &Path) -> Result<(Vec<String>, Array2<f64>)> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = BufReader::new(file);
    let mut header = String::new();
    reader
        .read_line(&mut header)
        .map_err(|e| Error::io(path, e))?;
    let mut parts = header.split_whitespace();
    let rows: usize = parts
        .next()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| Error::parse(path, "bad header"))?;
    let dim: usize = parts
        .next()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| Error::parse(path, "bad header"))?;

    let mut words = Vec::with_capacity(rows);
    let mut matrix = Array2::zeros((rows, dim));
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.is_empty() {
            continue;
        }
        if i >= rows {
            return Err(Error::parse(path, "more rows than the header declares"));
        }
        let mut fields = line.split_whitespace();
        let word = fields
            .next()
            .ok_or_else(|| Error::parse(path, format!("row {i}: empty line")))?;
        words.push(word.to_string());
        for c in 0..dim {
            let value: f64 = fields
                .next()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| Error::parse(path, format!("row {i}: expected {dim} values")))?;
            matrix[[i, c]] = value;
        }
    }
    if words.len() != rows {
        return Err(Error::parse(path, "fewer rows than the header declares"));
    }
    Ok((words, matrix))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_shape_and_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("vec.txt");
        let a = [0.25, -1.5, 3.0000001];
        let b = [1e-17, 2.0, -std::f64::consts::FRAC_1_SQRT_2];
        write_text(&path, 3, [("alpha", &a[..]), ("beta", &b[..])]).unwrap();

        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().count(), 3);
        assert_eq!(text.lines().next().unwrap(), "2 3");

        let (words, matrix) = read_text(&path).unwrap();
        assert_eq!(words, vec!["alpha", "beta"]);
        for (c, &v) in a.iter().enumerate() {
            assert_eq!(matrix[[0, c]], v, "shortest round-trip formatting");
        }
        for (c, &v) in b.iter().enumerate() {
            assert_eq!(matrix[[1, c]], v);
        }
    }
}
