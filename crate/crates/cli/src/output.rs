use std::fs;
use std::io::{self, Write};
use std::path::Path;

use crisis_core::fmt_sig;
use serde::Serialize;
use serde_json::Value;

use crate::exit::{CmdResult, Failure};
use crate::Format;

/// One command report in all three renderings.
pub struct Report {
    pub text: String,
    pub json: Value,
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Report {
    pub fn new<T: Serialize>(json: &T) -> Self {
        Report {
            text: String::new(),
            json: serde_json::to_value(json).expect("report types serialize"),
            header: Vec::new(),
            rows: Vec::new(),
        }
    }

    pub fn line(&mut self, label: &str, value: impl AsRef<str>) -> &mut Self {
        self.text.push_str(&format!("{label:<24}{}\n", value.as_ref()));
        self
    }

    pub fn table(&mut self, header: Vec<&'static str>) -> &mut Self {
        self.header = header;
        self
    }

    pub fn row(&mut self, row: Vec<String>) -> &mut Self {
        self.rows.push(row);
        self
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Text => self.text.clone(),
            Format::Json => json_text(&self.json),
            Format::Csv => csv_text(&self.header, &self.rows),
        }
    }
}

pub fn json_text<T: Serialize + ?Sized>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report types serialize");
    s.push('\n');
    s
}

pub fn csv_text(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(r).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv is utf-8")
}

/// Writes `content` to `path`, or to standard output when `path` is `None`.
pub fn emit(path: Option<&Path>, content: &str) -> CmdResult {
    match path {
        Some(p) => fs::write(p, content).map_err(|e| Failure::Write(format!("{}: {e}", p.display()))),
        None => {
            let mut out = io::stdout().lock();
            out.write_all(content.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|e| Failure::Write(format!("standard output: {e}")))
        }
    }
}

pub fn num(v: f64) -> String {
    fmt_sig(v)
}

pub fn pair(v: [f64; 2]) -> String {
    format!("{}, {}", fmt_sig(v[0]), fmt_sig(v[1]))
}

pub fn flag(b: bool) -> String {
    if b { "yes" } else { "no" }.to_string()
}
