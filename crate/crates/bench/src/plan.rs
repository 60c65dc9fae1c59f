use std::fmt;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::BenchError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Operation {
    Generation,
    Modeling,
    Prediction,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Dense,
    #[serde(alias = "TLR")]
    Tlr,
}

impl Operation {
    pub fn as_str(self) -> &'static str {
        match self {
            Operation::Generation => "generation",
            Operation::Modeling => "modeling",
            Operation::Prediction => "prediction",
        }
    }
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Dense => "dense",
            Mode::Tlr => "tlr",
        }
    }
}

impl fmt::Display for Operation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One benchmark cell. `ts` is the tile size; dense cells ignore it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PlanCell {
    pub operation: Operation,
    pub mode: Mode,
    pub n: usize,
    pub ts: usize,
}

impl PlanCell {
    pub fn new(operation: Operation, mode: Mode, n: usize, ts: usize) -> Self {
        Self { operation, mode, n, ts }
    }
}

impl fmt::Display for PlanCell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{} n={} ts={}", self.operation, self.mode, self.n, self.ts)
    }
}

/// Reads a plan CSV with header `operation,mode,n,ts`.
pub fn read_plan<R: Read>(reader: R) -> Result<Vec<PlanCell>, BenchError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers().map_err(|e| BenchError::Plan(e.to_string()))?.clone();
    if headers.iter().collect::<Vec<_>>() != ["operation", "mode", "n", "ts"] {
        return Err(BenchError::Plan(format!(
            "expected header operation,mode,n,ts, got {}",
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut cells = Vec::new();
    for row in rdr.deserialize() {
        let cell: PlanCell = row.map_err(|e| BenchError::Plan(e.to_string()))?;
        if cells.contains(&cell) {
            return Err(BenchError::Plan(format!("duplicate cell {cell}")));
        }
        cells.push(cell);
    }
    Ok(cells)
}

pub fn write_plan<W: Write>(cells: &[PlanCell], writer: W) -> Result<(), BenchError> {
    let mut w = csv::Writer::from_writer(writer);
    for c in cells {
        w.serialize(c).map_err(|e| BenchError::Plan(e.to_string()))?;
    }
    w.flush().map_err(|e| BenchError::Plan(e.to_string()))
}
