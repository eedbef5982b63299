use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::io::fmt_f64;

/// The full trajectory of an iteration `x_{t+1} = map(x_t)`.
///
/// `iterates[0]` is the starting point; `residuals[t]` is `‖x_{t+1} − x_t‖`,
/// so `residuals.len() == iterates.len() − 1 == iterations_used`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationTrace {
    pub iterates: Vec<Vec<f64>>,
    pub residuals: Vec<f64>,
    pub converged: bool,
    pub iterations_used: usize,
    /// Free-form flags raised during the run, e.g. a sign tie-break.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl IterationTrace {
    pub fn start(x0: Vec<f64>) -> Self {
        Self { iterates: vec![x0], residuals: Vec::new(), converged: false, iterations_used: 0, notes: Vec::new() }
    }

    pub fn push(&mut self, x: Vec<f64>, residual: f64) {
        self.iterates.push(x);
        self.residuals.push(residual);
        self.iterations_used += 1;
    }

    pub fn last(&self) -> &[f64] {
        self.iterates.last().expect("trace always holds the starting point")
    }

    pub fn dim(&self) -> usize {
        self.iterates[0].len()
    }

    /// Appends another trace's steps (skipping its starting point, which must equal our last iterate).
    pub fn extend_with(&mut self, other: &IterationTrace) {
        for (x, r) in other.iterates.iter().skip(1).zip(&other.residuals) {
            self.push(x.clone(), *r);
        }
        self.converged = other.converged;
        self.notes.extend(other.notes.iter().cloned());
    }

    /// CSV with header `t,x0,...,x{k-1},residual`; the residual cell of row 0 is empty.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["t".to_string()];
        header.extend((0..self.dim()).map(|j| format!("x{j}")));
        header.push("residual".into());
        w.write_record(&header)?;
        for (t, x) in self.iterates.iter().enumerate() {
            let mut rec = vec![t.to_string()];
            rec.extend(x.iter().map(|v| fmt_f64(*v)));
            rec.push(if t == 0 { String::new() } else { fmt_f64(self.residuals[t - 1]) });
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_layout() {
        let mut tr = IterationTrace::start(vec![0.0, 1.0]);
        tr.push(vec![0.5, 1.0], 0.5);
        let mut buf = Vec::new();
        tr.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], "t,x0,x1,residual");
        assert!(lines[1].starts_with("0,") && lines[1].ends_with(','));
        assert_eq!(lines.len(), 3);
        let parsed: f64 = lines[2].split(',').nth(1).unwrap().parse().unwrap();
        assert_eq!(parsed, 0.5);
    }
}
