use std::fmt::Write as _;

use crate::config::Format;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Num(v) => format!("{v:.12e}"),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }

    /// JSON numbers carry the same fixed formatting as CSV cells, as strings,
    /// so both outputs are byte-stable and infinities survive.
    fn json(&self) -> serde_json::Value {
        match self {
            Cell::Num(_) => serde_json::Value::String(self.csv()),
            Cell::Int(v) => serde_json::Value::from(*v),
            Cell::Text(s) => serde_json::Value::String(s.clone()),
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

/// A table plus summary fields; `passed` is set by commands that assert.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Report {
    pub title: String,
    pub passed: Option<bool>,
    pub summary: Vec<(String, Cell)>,
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
    /// First failing assertion, if any.
    pub failure: Option<String>,
}

impl Report {
    pub fn new(title: &str, header: &[&str]) -> Self {
        Self { title: title.into(), header: header.iter().map(|s| s.to_string()).collect(), ..Self::default() }
    }

    pub fn field(&mut self, key: &str, value: impl Into<Cell>) {
        self.summary.push((key.into(), value.into()));
    }

    pub fn row(&mut self, cells: Vec<Cell>) {
        self.rows.push(cells);
    }

    /// Records a check; the first failure is kept for the exit message.
    pub fn check(&mut self, ok: bool, what: impl FnOnce() -> String) {
        if !ok && self.failure.is_none() {
            self.failure = Some(what());
        }
        self.passed = Some(self.passed.unwrap_or(true) && ok);
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => self.csv(),
            Format::Json => self.json(),
        }
    }

    /// The table only; summary fields go to the JSON form or to stderr.
    fn csv(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for r in &self.rows {
            let line: Vec<String> = r.iter().map(Cell::csv).collect();
            let _ = writeln!(out, "{}", line.join(","));
        }
        out
    }

    fn json(&self) -> String {
        let mut summary = serde_json::Map::new();
        for (k, v) in &self.summary {
            summary.insert(k.clone(), v.json());
        }
        let rows: Vec<serde_json::Value> = self
            .rows
            .iter()
            .map(|r| {
                let mut m = serde_json::Map::new();
                for (h, c) in self.header.iter().zip(r) {
                    m.insert(h.clone(), c.json());
                }
                serde_json::Value::Object(m)
            })
            .collect();
        let mut top = serde_json::Map::new();
        top.insert("title".into(), self.title.clone().into());
        top.insert("passed".into(), self.passed.map_or(serde_json::Value::Null, serde_json::Value::Bool));
        top.insert("summary".into(), serde_json::Value::Object(summary));
        top.insert("rows".into(), serde_json::Value::Array(rows));
        let mut s = serde_json::to_string_pretty(&serde_json::Value::Object(top)).expect("JSON values serialize");
        s.push('\n');
        s
    }

    pub fn summary_text(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.summary {
            let _ = writeln!(out, "{k}: {}", v.csv());
        }
        out
    }
}
