use std::fs::File;
use std::io::{self, Write};

use serde::Serialize;
use serde_json::{json, Value};

/// Version of the JSON output layout.
pub const SCHEMA: u32 = 1;

/// Result of one subcommand: a JSON document and its tabular view.
pub struct Report {
    pub command: &'static str,
    pub body: Value,
    pub headers: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
    /// Print `body` as is, without the schema envelope.
    pub raw: bool,
}

impl Report {
    pub fn new(command: &'static str, body: impl Serialize) -> Self {
        Report {
            command,
            body: serde_json::to_value(body).expect("report values serialize"),
            headers: Vec::new(),
            rows: Vec::new(),
            raw: false,
        }
    }

    pub fn table(mut self, headers: Vec<&'static str>, rows: Vec<Vec<String>>) -> Self {
        self.headers = headers;
        self.rows = rows;
        self
    }

    fn json(&self) -> String {
        if self.raw {
            return serde_json::to_string(&self.body).expect("json values serialize");
        }
        let doc = json!({ "schema": SCHEMA, "command": self.command, "result": self.body });
        serde_json::to_string_pretty(&doc).expect("json values serialize")
    }

    /// JSON to stdout, or CSV to `path` (`-` for stdout).
    pub fn emit(&self, csv_path: Option<&str>) -> io::Result<()> {
        match csv_path {
            None => {
                let mut out = io::stdout().lock();
                writeln!(out, "{}", self.json())
            }
            Some("-") => self.write_csv(io::stdout().lock()),
            Some(path) => self.write_csv(File::create(path)?),
        }
    }

    fn write_csv(&self, sink: impl Write) -> io::Result<()> {
        let mut w = csv::Writer::from_writer(sink);
        w.write_record(&self.headers)?;
        for row in &self.rows {
            w.write_record(row)?;
        }
        w.flush()
    }
}

pub fn num(x: f64) -> String {
    x.to_string()
}
