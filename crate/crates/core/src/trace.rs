//! Per-iteration convergence records and their CSV form.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const CSV_HEADER: [&str; 5] = ["t", "E", "phi", "rounded_cost", "elapsed_s"];

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub t: usize,
    #[serde(rename = "E")]
    pub error: f64,
    pub phi: f64,
    pub rounded_cost: Option<f64>,
    #[serde(rename = "elapsed_s")]
    pub elapsed: f64,
}

/// Records with strictly increasing iteration indices.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ConvergenceTrace {
    records: Vec<TraceRecord>,
}

impl ConvergenceTrace {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, record: TraceRecord) -> Result<()> {
        if let Some(last) = self.records.last() {
            if record.t <= last.t {
                return Err(Error::TraceOrder(record.t, last.t));
            }
        }
        self.records.push(record);
        Ok(())
    }

    pub fn records(&self) -> &[TraceRecord] {
        &self.records
    }

    pub fn last(&self) -> Option<&TraceRecord> {
        self.records.last()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// First iteration whose rounded cost is at or below `target`.
    pub fn first_reaching_cost(&self, target: f64) -> Option<usize> {
        self.records
            .iter()
            .find(|r| r.rounded_cost.is_some_and(|c| c <= target))
            .map(|r| r.t)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(writer);
        w.write_record(CSV_HEADER)?;
        for rec in &self.records {
            w.serialize(rec)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv output is utf-8")
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(reader);
        let headers = rdr.headers()?.clone();
        if headers.iter().ne(CSV_HEADER) {
            return Err(Error::Parse(format!("unexpected trace header {headers:?}")));
        }
        let mut trace = ConvergenceTrace::new();
        for rec in rdr.deserialize() {
            trace.push(rec?)?;
        }
        Ok(trace)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(t: usize, cost: Option<f64>) -> TraceRecord {
        TraceRecord { t, error: 0.5 / (t + 1) as f64, phi: -1.25, rounded_cost: cost, elapsed: 0.01 }
    }

    #[test]
    fn rejects_non_increasing_indices() {
        let mut trace = ConvergenceTrace::new();
        trace.push(rec(0, None)).unwrap();
        trace.push(rec(3, None)).unwrap();
        assert!(matches!(trace.push(rec(3, None)), Err(Error::TraceOrder(3, 3))));
    }

    #[test]
    fn csv_header_and_round_trip() {
        let mut trace = ConvergenceTrace::new();
        trace.push(rec(0, Some(0.75))).unwrap();
        trace.push(rec(1, None)).unwrap();
        let text = trace.to_csv_string();
        assert!(text.starts_with("t,E,phi,rounded_cost,elapsed_s\n"));
        assert!(text.contains("1,0.25,-1.25,,0.01"));
        let back = ConvergenceTrace::read_csv(text.as_bytes()).unwrap();
        assert_eq!(back, trace);
    }

    #[test]
    fn first_reaching_cost_skips_missing() {
        let mut trace = ConvergenceTrace::new();
        trace.push(rec(0, Some(2.0))).unwrap();
        trace.push(rec(1, None)).unwrap();
        trace.push(rec(2, Some(0.9))).unwrap();
        assert_eq!(trace.first_reaching_cost(1.0), Some(2));
        assert_eq!(trace.first_reaching_cost(0.1), None);
    }
}
