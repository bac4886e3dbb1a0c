use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// State of a run after one completed generation (generation 0 is the
/// initial population).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationRecord {
    pub gen: usize,
    /// Best quality objective in the archive so far.
    pub best_q: f64,
    /// Normalized archive hypervolume, filled in once the run's bounds are known.
    pub hv: f64,
    pub mu: usize,
    pub lambda: usize,
    pub cross_rate: f64,
    pub mut_rate: f64,
    pub max_depth: usize,
    pub elapsed_s: Option<f64>,
    /// Individuals evaluated in this generation.
    #[serde(skip)]
    pub evaluations: usize,
}

/// Per-generation history of a run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunTrace {
    pub records: Vec<GenerationRecord>,
}

pub const TRACE_COLUMNS: [&str; 9] = [
    "gen",
    "best_q",
    "hv",
    "mu",
    "lambda",
    "cross_rate",
    "mut_rate",
    "max_depth",
    "elapsed_s",
];

impl RunTrace {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn hv(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.hv).collect()
    }

    pub fn best_q(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.best_q).collect()
    }

    pub fn final_hv(&self) -> Option<f64> {
        self.records.last().map(|r| r.hv)
    }

    /// CSV with one row per generation. With `with_timing` false the
    /// `elapsed_s` column is left empty, which keeps the file reproducible.
    pub fn write_csv<W: Write>(&self, writer: W, with_timing: bool) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let err = |e: csv::Error| Error::Csv(e.to_string());
        w.write_record(TRACE_COLUMNS).map_err(err)?;
        for r in &self.records {
            let elapsed = match (with_timing, r.elapsed_s) {
                (true, Some(t)) => format!("{t:.6}"),
                _ => String::new(),
            };
            w.write_record([
                r.gen.to_string(),
                r.best_q.to_string(),
                r.hv.to_string(),
                r.mu.to_string(),
                r.lambda.to_string(),
                r.cross_rate.to_string(),
                r.mut_rate.to_string(),
                r.max_depth.to_string(),
                elapsed,
            ])
            .map_err(err)?;
        }
        w.flush().map_err(|e| Error::Csv(e.to_string()))
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(reader);
        let mut records = Vec::new();
        for row in rdr.records() {
            let row = row.map_err(|e| Error::Csv(e.to_string()))?;
            let field = |i: usize| row.get(i).unwrap_or("");
            let num = |i: usize| -> Result<f64> {
                field(i)
                    .parse()
                    .map_err(|_| Error::Csv(format!("bad value {:?} in column {}", field(i), TRACE_COLUMNS[i])))
            };
            records.push(GenerationRecord {
                gen: num(0)? as usize,
                best_q: num(1)?,
                hv: num(2)?,
                mu: num(3)? as usize,
                lambda: num(4)? as usize,
                cross_rate: num(5)?,
                mut_rate: num(6)?,
                max_depth: num(7)? as usize,
                elapsed_s: if field(8).is_empty() { None } else { Some(num(8)?) },
                evaluations: 0,
            });
        }
        Ok(Self { records })
    }
}
