//! Headered text matrices.
//!
//! After the header line each block is a shape line (`rows cols`, optionally
//! preceded by a name) followed by `rows * cols` values in row-major order.
//! Writers emit one matrix row per line; readers accept any whitespace layout.

use std::fmt::Write as _;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

pub const FEAT_HEADER: &str = "#glyphforge-feat v1";

#[derive(Debug, Clone, PartialEq)]
pub struct NamedMatrix {
    pub name: Option<String>,
    pub matrix: DMatrix<f64>,
}

fn check_header<'a>(text: &'a str, header: &str) -> Result<impl Iterator<Item = (usize, &'a str)>> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    match lines.next() {
        Some((_, first)) if first.trim_end() == header => Ok(lines),
        _ => Err(Error::MalformedLine {
            line: 1,
            reason: format!("expected header {header:?}"),
        }),
    }
}

fn parse_usize(tok: (usize, &str)) -> Result<usize> {
    tok.1.parse().map_err(|_| Error::MalformedLine {
        line: tok.0,
        reason: format!("expected a dimension, found {:?}", tok.1),
    })
}

fn parse_value(tok: (usize, &str)) -> Result<f64> {
    let v: f64 = tok.1.parse().map_err(|_| Error::MalformedLine {
        line: tok.0,
        reason: format!("non-numeric value {:?}", tok.1),
    })?;
    if !v.is_finite() {
        return Err(Error::NonFinite(format!("line {}", tok.0)));
    }
    Ok(v)
}

/// Parse every block after `header`. With `named`, each shape line starts
/// with a name token.
pub fn parse_blocks(text: &str, header: &str, named: bool) -> Result<Vec<NamedMatrix>> {
    let mut toks = check_header(text, header)?
        .filter(|(_, l)| {
            let t = l.trim();
            !t.is_empty() && !t.starts_with('#')
        })
        .flat_map(|(n, l)| l.split_whitespace().map(move |tok| (n, tok)))
        .peekable();
    let mut blocks = Vec::new();
    while let Some(&(line, _)) = toks.peek() {
        let shape_len = if named { 3 } else { 2 };
        let shape: Vec<(usize, &str)> = toks.by_ref().take(shape_len).collect();
        if shape.len() != shape_len || shape.iter().any(|t| t.0 != line) {
            return Err(Error::MalformedLine {
                line,
                reason: format!("expected a shape line with {shape_len} fields"),
            });
        }
        let name = named.then(|| shape[0].1.to_string());
        let rows = parse_usize(shape[shape_len - 2])?;
        let cols = parse_usize(shape[shape_len - 1])?;
        let want = rows * cols;
        let values = toks
            .by_ref()
            .take(want)
            .map(parse_value)
            .collect::<Result<Vec<f64>>>()?;
        if values.len() != want {
            return Err(Error::MalformedLine {
                line,
                reason: format!("block needs {want} values, found {}", values.len()),
            });
        }
        blocks.push(NamedMatrix {
            name,
            matrix: DMatrix::from_row_slice(rows, cols, &values),
        });
    }
    Ok(blocks)
}

pub fn write_block(out: &mut String, name: Option<&str>, m: &DMatrix<f64>) {
    match name {
        Some(n) => {
            let _ = writeln!(out, "{n} {} {}", m.nrows(), m.ncols());
        }
        None => {
            let _ = writeln!(out, "{} {}", m.nrows(), m.ncols());
        }
    }
    for r in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|c| m[(r, c)].to_string()).collect();
        let _ = writeln!(out, "{}", row.join(" "));
    }
}

/// A feature batch file holds one unnamed matrix, one feature per row.
pub fn parse_features(text: &str) -> Result<DMatrix<f64>> {
    let mut blocks = parse_blocks(text, FEAT_HEADER, false)?;
    if blocks.len() != 1 {
        return Err(Error::ShapeMismatch(format!(
            "feature file must hold exactly one matrix, found {}",
            blocks.len()
        )));
    }
    Ok(blocks.remove(0).matrix)
}

pub fn serialize_features(m: &DMatrix<f64>) -> String {
    let mut out = format!("{FEAT_HEADER}\n");
    write_block(&mut out, None, m);
    out
}
