use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::rate_analysis::McEstimate;

pub const CSV_HEADER: &str = "sweep_param,sweep_value,metric,mean,stderr,n";

#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub sweep_param: String,
    pub sweep_value: f64,
    /// Base metric name, optionally followed by a series label in brackets,
    /// e.g. `buyer_profit[num_buyers=2]`.
    pub metric: String,
    pub mean: f64,
    /// Zero when `n == 1`.
    pub stderr: f64,
    pub n: usize,
}

impl ResultRow {
    /// Metric name without the series label.
    pub fn base_metric(&self) -> &str {
        split_metric(&self.metric).0
    }

    pub fn series(&self) -> &str {
        split_metric(&self.metric).1
    }
}

pub fn metric_name(base: &str, series: &str) -> String {
    if series.is_empty() {
        base.to_string()
    } else {
        format!("{base}[{series}]")
    }
}

fn split_metric(metric: &str) -> (&str, &str) {
    match metric.find('[') {
        Some(i) if metric.ends_with(']') => (&metric[..i], &metric[i + 1..metric.len() - 1]),
        _ => (metric, ""),
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ResultTable {
    pub rows: Vec<ResultRow>,
}

impl ResultTable {
    pub fn push(&mut self, sweep_param: &str, sweep_value: f64, metric: String, est: McEstimate) {
        debug_assert!(!metric.contains(',') && !sweep_param.contains(','));
        self.rows.push(ResultRow {
            sweep_param: sweep_param.to_string(),
            sweep_value,
            metric,
            mean: est.mean,
            stderr: est.stderr,
            n: est.n,
        });
    }

    pub fn extend(&mut self, other: ResultTable) {
        self.rows.extend(other.rows);
    }

    /// Metric names in order of first appearance.
    pub fn metrics(&self) -> Vec<&str> {
        let mut seen: Vec<&str> = Vec::new();
        for r in &self.rows {
            if !seen.contains(&r.metric.as_str()) {
                seen.push(&r.metric);
            }
        }
        seen
    }

    /// Rows of one metric in table order.
    pub fn column(&self, metric: &str) -> Vec<&ResultRow> {
        self.rows.iter().filter(|r| r.metric == metric).collect()
    }

    pub fn get(&self, metric: &str, sweep_value: f64) -> Option<&ResultRow> {
        self.rows.iter().find(|r| r.metric == metric && r.sweep_value == sweep_value)
    }

    /// True when the table has infeasibility rows and every one of them
    /// reports all replications infeasible.
    pub fn infeasible_everywhere(&self) -> bool {
        let rows: Vec<_> = self.rows.iter().filter(|r| r.base_metric() == "infeasible").collect();
        !rows.is_empty() && rows.iter().all(|r| r.mean >= 1.0)
    }

    /// Floats use the shortest representation that round-trips, so equal
    /// tables give identical bytes.
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(64 * (self.rows.len() + 1));
        out.push_str(CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                r.sweep_param, r.sweep_value, r.metric, r.mean, r.stderr, r.n
            );
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        if lines.next() != Some(CSV_HEADER) {
            return Err(Error::invalid("unexpected CSV header"));
        }
        let mut rows = Vec::new();
        for (i, line) in lines.enumerate() {
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 6 {
                return Err(Error::invalid(format!("line {}: expected 6 fields", i + 2)));
            }
            let num = |s: &str| s.parse::<f64>().map_err(|_| Error::invalid(format!("line {}: bad number `{s}`", i + 2)));
            rows.push(ResultRow {
                sweep_param: f[0].to_string(),
                sweep_value: num(f[1])?,
                metric: f[2].to_string(),
                mean: num(f[3])?,
                stderr: num(f[4])?,
                n: f[5].parse().map_err(|_| Error::invalid(format!("line {}: bad count", i + 2)))?,
            });
        }
        Ok(ResultTable { rows })
    }
}
