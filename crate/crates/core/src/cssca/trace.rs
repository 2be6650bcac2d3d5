use std::io::Write;

use crate::error::Result;

/// What replaced the subproblem minimizer in an iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fallback {
    None,
    /// The constraint models had no common feasible point; the step went
    /// towards the minimizer of the largest one.
    Feasibility,
    /// The subsolver did not converge; the iterate was kept.
    NullStep,
}

impl Fallback {
    /// CSV code: 0, 1 or 2.
    pub fn code(self) -> u8 {
        match self {
            Fallback::None => 0,
            Fallback::Feasibility => 1,
            Fallback::NullStep => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRecord {
    pub t: usize,
    /// Running estimate of the penalized objective, money units.
    pub objective: f64,
    /// Largest running constraint estimate above zero, in money for profit
    /// constraints and bps/Hz for rate floors.
    pub max_constraint_residual: f64,
    pub step_norm: f64,
    pub fallback: Fallback,
    pub wall_ms: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct CsscaTrace {
    pub records: Vec<TraceRecord>,
}

impl CsscaTrace {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn objectives(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.objective).collect()
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "t,objective,max_constraint_residual,step_norm,fallback_flag,wall_ms")?;
        for r in &self.records {
            writeln!(
                out,
                "{},{},{},{},{},{:.3}",
                r.t,
                r.objective,
                r.max_constraint_residual,
                r.step_norm,
                r.fallback.code(),
                r.wall_ms
            )?;
        }
        Ok(())
    }
}
