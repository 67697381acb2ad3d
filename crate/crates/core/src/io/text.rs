//! Line-oriented helpers shared by the dataset and model file formats.

use std::path::Path;

use crate::error::{Error, Result};
use crate::schema::Schema;

/// Shortest representation that parses back to the same `f64`.
pub fn format_f64(x: f64) -> String {
    let mut buf = ryu::Buffer::new();
    buf.format(x).to_owned()
}

pub(crate) fn read_to_string(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub(crate) fn write_string(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}

/// A cursor over LF-terminated lines with 1-based line numbers for errors.
pub(crate) struct Lines<'a> {
    file: String,
    lines: Vec<&'a str>,
    pos: usize,
}

impl<'a> Lines<'a> {
    /// Every line, including the last, must end in `\n`; `\r` is rejected.
    pub fn new(file: impl Into<String>, contents: &'a str) -> Result<Self> {
        let file = file.into();
        let mut lines: Vec<&str> = contents.split('\n').collect();
        // split leaves one trailing empty piece after the final LF
        match lines.pop() {
            Some("") => {}
            Some(_) => return Err(Error::parse(&file, lines.len() + 1, "missing final newline")),
            None => unreachable!("split yields at least one piece"),
        }
        if let Some(i) = lines.iter().position(|l| l.contains('\r')) {
            return Err(Error::parse(
                &file,
                i + 1,
                "carriage return in line (LF endings required)",
            ));
        }
        Ok(Lines { file, lines, pos: 0 })
    }

    pub fn len(&self) -> usize {
        self.lines.len()
    }

    /// Line number of the line most recently returned by `next`.
    pub fn line_no(&self) -> usize {
        self.pos
    }

    pub fn next(&mut self) -> Result<(usize, &'a str)> {
        let line = self
            .lines
            .get(self.pos)
            .ok_or_else(|| Error::parse(&self.file, self.pos + 1, "unexpected end of file"))?;
        self.pos += 1;
        Ok((self.pos, line))
    }

    pub fn is_done(&self) -> bool {
        self.pos >= self.lines.len()
    }

    pub fn finish(&self) -> Result<()> {
        if !self.is_done() {
            return Err(Error::parse(&self.file, self.pos + 1, "unexpected trailing content"));
        }
        Ok(())
    }

    pub fn error(&self, line: usize, message: impl Into<String>) -> Error {
        Error::parse(&self.file, line, message)
    }
}

/// Space-separated tokens; empty tokens (double or trailing spaces) are errors.
pub(crate) fn tokens<'a>(lines: &Lines<'_>, line_no: usize, line: &'a str) -> Result<Vec<&'a str>> {
    if line.is_empty() {
        return Ok(Vec::new());
    }
    let toks: Vec<&str> = line.split(' ').collect();
    if toks.iter().any(|t| t.is_empty()) {
        return Err(lines.error(line_no, "empty token (extra or trailing space)"));
    }
    Ok(toks)
}

pub(crate) fn parse_usize(lines: &Lines<'_>, line_no: usize, tok: &str, what: &str) -> Result<usize> {
    if tok.is_empty() || !tok.bytes().all(|b| b.is_ascii_digit()) {
        return Err(lines.error(line_no, format!("invalid {what} {tok:?}")));
    }
    tok.parse()
        .map_err(|_| lines.error(line_no, format!("invalid {what} {tok:?}")))
}

pub(crate) fn parse_f64(lines: &Lines<'_>, line_no: usize, tok: &str, what: &str) -> Result<f64> {
    let x: f64 = tok
        .parse()
        .map_err(|_| lines.error(line_no, format!("invalid {what} {tok:?}")))?;
    if !x.is_finite() {
        return Err(lines.error(line_no, format!("{what} must be finite, got {tok:?}")));
    }
    Ok(x)
}

/// Expects `keyword` followed by exactly `n` more tokens.
pub(crate) fn keyed<'a>(lines: &mut Lines<'a>, keyword: &str, n: usize) -> Result<(usize, Vec<&'a str>)> {
    let (no, line) = lines.next()?;
    let toks = tokens(lines, no, line)?;
    if toks.first() != Some(&keyword) || toks.len() != n + 1 {
        return Err(lines.error(no, format!("expected `{keyword}` line with {n} fields, got {line:?}")));
    }
    Ok((no, toks[1..].to_vec()))
}

pub(crate) fn schema_to_text(schema: &Schema) -> String {
    let mut out = format!("modes {} views {}\n", schema.num_modes(), schema.num_views());
    for (m, d) in schema.mode_dims().iter().enumerate() {
        out.push_str(&format!("mode {m} {d}\n"));
    }
    for (v, modes) in schema.views().iter().enumerate() {
        out.push_str(&format!("view {v}"));
        for m in modes {
            out.push_str(&format!(" {m}"));
        }
        out.push('\n');
    }
    out
}

pub(crate) fn parse_schema(lines: &mut Lines<'_>) -> Result<Schema> {
    let (no, line) = lines.next()?;
    let toks = tokens(lines, no, line)?;
    if toks.len() != 4 || toks[0] != "modes" || toks[2] != "views" {
        return Err(lines.error(no, format!("expected `modes M views V`, got {line:?}")));
    }
    let num_modes = parse_usize(lines, no, toks[1], "mode count")?;
    let num_views = parse_usize(lines, no, toks[3], "view count")?;

    let mut dims = Vec::with_capacity(num_modes);
    for m in 0..num_modes {
        let (no, f) = keyed(lines, "mode", 2)?;
        if parse_usize(lines, no, f[0], "mode index")? != m {
            return Err(lines.error(no, format!("expected mode {m}")));
        }
        dims.push(parse_usize(lines, no, f[1], "mode dimension")?);
    }
    let mut views = Vec::with_capacity(num_views);
    for v in 0..num_views {
        let (no, line) = lines.next()?;
        let toks = tokens(lines, no, line)?;
        if toks.len() < 2 || toks[0] != "view" {
            return Err(lines.error(no, format!("expected `view {v} <modes...>`, got {line:?}")));
        }
        if parse_usize(lines, no, toks[1], "view index")? != v {
            return Err(lines.error(no, format!("expected view {v}")));
        }
        let modes = toks[2..]
            .iter()
            .map(|t| parse_usize(lines, no, t, "mode index"))
            .collect::<Result<Vec<_>>>()?;
        views.push(modes);
    }
    Schema::new(dims, views).map_err(|e| lines.error(lines.line_no(), e.to_string()))
}
