use serde::Serialize;
use serde_json::{json, Map, Value};

use super::tail::TailReport;

/// Named constant echoed in a report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Param {
    pub name: String,
    pub value: f64,
}

impl Param {
    pub fn new(name: impl Into<String>, value: f64) -> Self {
        Self { name: name.into(), value }
    }
}

/// 17 significant digits, enough to round-trip any `f64`.
pub fn format_number(x: f64) -> String {
    format!("{x:.16e}")
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(u64),
    Text(String),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Num(x) => format_number(*x),
            Cell::Int(i) => i.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Num(x) => json!(x),
            Cell::Int(i) => json!(i),
            Cell::Text(s) => json!(s),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<u64> for Cell {
    fn from(i: u64) -> Self {
        Cell::Int(i)
    }
}

impl From<usize> for Cell {
    fn from(i: usize) -> Self {
        Cell::Int(i as u64)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Text(s)
    }
}

/// Column table with run metadata, rendered as commented CSV or JSON.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub family: String,
    /// Run metadata such as seed, sample count and method.
    pub meta: Vec<(String, Cell)>,
    pub params: Vec<Param>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(family: impl Into<String>, columns: &[&str]) -> Self {
        Self {
            family: family.into(),
            meta: Vec::new(),
            params: Vec::new(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn meta(mut self, key: &str, value: impl Into<Cell>) -> Self {
        self.meta.push((key.to_string(), value.into()));
        self
    }

    pub fn param(mut self, name: &str, value: f64) -> Self {
        self.params.push(Param::new(name, value));
        self
    }

    pub fn push_row(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    /// Metadata as `# key=value` comment lines, then a header and one line
    /// per row.
    pub fn to_csv(&self) -> String {
        let mut out = format!("# concentra {}\n# family={}\n", crate::VERSION, self.family);
        for (k, v) in &self.meta {
            out.push_str(&format!("# {k}={}\n", v.render()));
        }
        for p in &self.params {
            out.push_str(&format!("# {}={}\n", p.name, format_number(p.value)));
        }
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.columns).expect("in-memory write");
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::render)).expect("in-memory write");
        }
        out.push_str(&String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8"));
        out
    }

    /// Same content as JSON; `extra` entries (e.g. wall time) are appended
    /// to the metadata.
    pub fn to_json(&self, extra: &[(&str, Value)]) -> String {
        let mut meta = Map::new();
        for (k, v) in &self.meta {
            meta.insert(k.clone(), v.json());
        }
        for (k, v) in extra {
            meta.insert(k.to_string(), v.clone());
        }
        let params: Map<String, Value> = self.params.iter().map(|p| (p.name.clone(), json!(p.value))).collect();
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|r| Value::Object(self.columns.iter().cloned().zip(r.iter().map(Cell::json)).collect()))
            .collect();
        let doc = json!({
            "tool": "concentra",
            "version": crate::VERSION,
            "family": self.family,
            "meta": meta,
            "params": params,
            "rows": rows,
        });
        serde_json::to_string_pretty(&doc).expect("serializable") + "\n"
    }
}

impl TailReport {
    pub fn to_table(&self) -> Table {
        let mut t =
            Table::new(self.family.clone(), &["threshold", "bound", "empirical", "ci_low", "ci_high", "violation"])
                .meta("method", self.method.as_str());
        if let Some(seed) = self.seed {
            t = t.meta("seed", seed);
        }
        t = t.meta("samples", self.sample_count).meta("confidence", self.confidence);
        t.params = self.params.clone();
        for r in &self.rows {
            t.push_row(vec![
                r.threshold.into(),
                r.bound.into(),
                r.empirical.into(),
                r.ci_low.into(),
                r.ci_high.into(),
                r.violation.as_str().into(),
            ]);
        }
        t
    }
}
