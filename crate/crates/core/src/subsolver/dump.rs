//! Plain-text dump of a [`SubproblemSpec`] for offline inspection.
//!
//! ```text
//! subproblem <n> <quadratic constraints> <linear constraints>
//! center <n values>
//! lower <n values>
//! upper <n values>
//! objective <value> <curvature>
//! gradient <n values>
//! constraint <value> <curvature>      (repeated, each followed by a gradient line)
//! gradient <n values>
//! linear <rhs> <index>:<coeff> ...    (repeated)
//! ```
//!
//! Numbers use Rust's shortest round-trip formatting; bounds may be `inf`.

use std::fmt::Write as _;
use std::io::Write;

use super::{LinearConstraint, QuadraticModel, SubproblemSpec};
use crate::error::{Error, Result};

fn join(v: &[f64]) -> String {
    let mut s = String::new();
    for (i, x) in v.iter().enumerate() {
        if i > 0 {
            s.push(' ');
        }
        let _ = write!(s, "{x:?}");
    }
    s
}

pub fn write_spec<W: Write>(spec: &SubproblemSpec, mut out: W) -> Result<()> {
    let mut s = String::new();
    let _ = writeln!(s, "subproblem {} {} {}", spec.dim(), spec.constraints.len(), spec.linear.len());
    let _ = writeln!(s, "center {}", join(&spec.center));
    let _ = writeln!(s, "lower {}", join(&spec.lower));
    let _ = writeln!(s, "upper {}", join(&spec.upper));
    let _ = writeln!(s, "objective {:?} {:?}", spec.objective.value, spec.objective.curvature);
    let _ = writeln!(s, "gradient {}", join(&spec.objective.gradient));
    for q in &spec.constraints {
        let _ = writeln!(s, "constraint {:?} {:?}", q.value, q.curvature);
        let _ = writeln!(s, "gradient {}", join(&q.gradient));
    }
    for lc in &spec.linear {
        let _ = write!(s, "linear {:?}", lc.rhs);
        for (i, a) in &lc.terms {
            let _ = write!(s, " {i}:{a:?}");
        }
        s.push('\n');
    }
    out.write_all(s.as_bytes())?;
    Ok(())
}

fn bad(line: usize, msg: impl std::fmt::Display) -> Error {
    Error::invalid(format!("subproblem dump line {}: {msg}", line + 1))
}

fn numbers(line: usize, words: &[&str]) -> Result<Vec<f64>> {
    words.iter().map(|w| w.parse::<f64>().map_err(|_| bad(line, format!("bad number {w:?}")))).collect()
}

struct Reader<'a> {
    lines: std::vec::IntoIter<(usize, Vec<&'a str>)>,
    n: usize,
}

impl<'a> Reader<'a> {
    fn next(&mut self, tag: &str) -> Result<(usize, Vec<&'a str>)> {
        let (i, words) = self.lines.next().ok_or_else(|| Error::invalid(format!("subproblem dump ends before {tag:?}")))?;
        if words[0] != tag {
            return Err(bad(i, format!("expected {tag:?}, found {:?}", words[0])));
        }
        Ok((i, words[1..].to_vec()))
    }

    fn vector(&mut self, tag: &str) -> Result<Vec<f64>> {
        let (i, w) = self.next(tag)?;
        let v = numbers(i, &w)?;
        if v.len() != self.n {
            return Err(bad(i, format!("expected {} values", self.n)));
        }
        Ok(v)
    }

    fn model(&mut self, tag: &str) -> Result<QuadraticModel> {
        let (i, w) = self.next(tag)?;
        let head = numbers(i, &w)?;
        if head.len() != 2 {
            return Err(bad(i, "expected value and curvature"));
        }
        let gradient = self.vector("gradient")?;
        Ok(QuadraticModel::new(head[0], gradient, head[1]))
    }
}

pub fn read_spec(text: &str) -> Result<SubproblemSpec> {
    let lines: Vec<(usize, Vec<&str>)> = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i, l.split_whitespace().collect::<Vec<_>>()))
        .filter(|(_, w)| !w.is_empty())
        .collect();
    let mut r = Reader { lines: lines.into_iter(), n: 0 };
    let (i, head) = r.next("subproblem")?;
    let dims: Vec<usize> = head
        .iter()
        .map(|w| w.parse::<usize>().map_err(|_| bad(i, "bad header")))
        .collect::<Result<_>>()?;
    if dims.len() != 3 {
        return Err(bad(i, "header needs three counts"));
    }
    let (nq, nl) = (dims[1], dims[2]);
    r.n = dims[0];
    let center = r.vector("center")?;
    let lower = r.vector("lower")?;
    let upper = r.vector("upper")?;
    let objective = r.model("objective")?;
    let constraints = (0..nq).map(|_| r.model("constraint")).collect::<Result<Vec<_>>>()?;
    let mut linear = Vec::with_capacity(nl);
    for _ in 0..nl {
        let (i, w) = r.next("linear")?;
        let rhs_word = w.first().ok_or_else(|| bad(i, "missing right-hand side"))?;
        let rhs = numbers(i, &[rhs_word])?[0];
        let terms = w[1..]
            .iter()
            .map(|t| {
                let (idx, coef) = t.split_once(':').ok_or_else(|| bad(i, format!("bad term {t:?}")))?;
                Ok((
                    idx.parse::<usize>().map_err(|_| bad(i, format!("bad index {idx:?}")))?,
                    coef.parse::<f64>().map_err(|_| bad(i, format!("bad coefficient {coef:?}")))?,
                ))
            })
            .collect::<Result<Vec<_>>>()?;
        linear.push(LinearConstraint { terms, rhs });
    }
    if let Some((i, w)) = r.lines.next() {
        return Err(bad(i, format!("unexpected trailing line {:?}", w[0])));
    }
    let spec = SubproblemSpec { center, objective, constraints, linear, lower, upper };
    spec.validate()?;
    Ok(spec)
}
