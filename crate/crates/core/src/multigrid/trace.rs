use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::linalg::SolveReport;
use crate::Result;

/// One member on one level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    /// Coarse index of the member's starting eigenpair.
    pub target: usize,
    pub member: usize,
    pub level: usize,
    pub dof: usize,
    /// Shift of the level solve; absent on the coarse level.
    pub shift: Option<f64>,
    pub lambda: f64,
    /// `‖S u − λ M u‖ / ‖u‖` with `‖u‖_a = 1`.
    pub a_norm_residual: f64,
    /// `‖S u − λ M u‖ / ‖M u‖`.
    pub residual: f64,
    /// `‖B u‖ / ‖u‖`.
    pub divergence: f64,
    pub solve: Option<SolveReport>,
    pub wall_seconds: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct IterationTrace {
    pub records: Vec<TraceRecord>,
}

impl IterationTrace {
    /// Records of one member, coarse level first.
    pub fn member(&self, member: usize) -> impl Iterator<Item = &TraceRecord> {
        self.records.iter().filter(move |r| r.member == member)
    }

    /// Records of one level.
    pub fn level(&self, level: usize) -> impl Iterator<Item = &TraceRecord> {
        self.records.iter().filter(move |r| r.level == level)
    }

    /// One JSON object per line.
    pub fn write_jsonl<W: Write>(&self, mut w: W) -> Result<()> {
        for r in &self.records {
            serde_json::to_writer(&mut w, r)?;
            writeln!(w)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jsonl_round_trips() {
        let rec = |level| TraceRecord {
            target: 0,
            member: 0,
            level,
            dof: 10,
            shift: if level == 0 { None } else { Some(19.5) },
            lambda: 19.7,
            a_norm_residual: 1e-3,
            residual: 1e-4,
            divergence: 1e-12,
            solve: None,
            wall_seconds: 0.1,
        };
        let t = IterationTrace {
            records: vec![rec(0), rec(1)],
        };
        let mut buf = Vec::new();
        t.write_jsonl(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let back: Vec<TraceRecord> = text
            .lines()
            .map(|l| serde_json::from_str(l).unwrap())
            .collect();
        assert_eq!(back, t.records);
        assert_eq!(t.level(1).count(), 1);
        assert_eq!(t.member(0).count(), 2);
    }
}
