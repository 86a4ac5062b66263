//! Shared CSV output conventions: a `#`-prefixed header block followed by
//! RFC-4180 records with full double precision.

use std::io::Write;

use crate::error::Result;

pub const TOOL_VERSION: &str = concat!("vecfekete ", env!("CARGO_PKG_VERSION"));

/// 17 significant digits, `.` decimal separator.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Key/value lines written before the CSV records.
#[derive(Debug, Clone, Default)]
pub struct HeaderBlock {
    pub entries: Vec<(String, String)>,
}

impl HeaderBlock {
    pub fn new() -> Self {
        let mut h = HeaderBlock::default();
        h.push("tool", TOOL_VERSION);
        h
    }

    pub fn push(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.entries.push((key.to_string(), value.to_string()));
        self
    }

    pub fn with(mut self, key: &str, value: impl ToString) -> Self {
        self.push(key, value);
        self
    }

    pub fn write<W: Write>(&self, w: &mut W) -> Result<()> {
        for (k, v) in &self.entries {
            writeln!(w, "# {k}: {}", v.replace('\n', " "))?;
        }
        Ok(())
    }
}

/// Writes the header block, the column names and then the rows.
pub fn write_table<W: Write>(
    mut w: W,
    header: &HeaderBlock,
    columns: &[&str],
    rows: &[Vec<String>],
) -> Result<()> {
    header.write(&mut w)?;
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(columns)?;
    for row in rows {
        wr.write_record(row)?;
    }
    wr.flush()?;
    Ok(())
}

/// Reads a table written by [`write_table`], skipping the header block.
pub fn read_table(text: &str) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let body: String = text
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| format!("{l}\n"))
        .collect();
    let mut rd = csv::Reader::from_reader(body.as_bytes());
    let cols = rd.headers()?.iter().map(str::to_string).collect();
    let mut rows = Vec::new();
    for rec in rd.records() {
        rows.push(rec?.iter().map(str::to_string).collect());
    }
    Ok((cols, rows))
}
