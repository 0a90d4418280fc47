//! Plain-text LP/MILP dump format used by the `solve-lp` debug command.
//!
//! ```text
//! # comment
//! min: -1*x0 - 2*x1
//! 1*x0 + 1*x1 <= 1
//! x0 in [0, inf]
//! bin: x2 x3
//! ```
//!
//! Variables not mentioned in a bounds line default to `[0, inf)`. The
//! variable count is one past the largest index used anywhere.

use std::fmt::Write as _;

use thiserror::Error;

use super::{LpProblem, MilpProblem, Sense};

#[derive(Debug, Clone, PartialEq, Error)]
#[error("line {line}: {message}")]
pub struct DumpError {
    pub line: usize,
    pub message: String,
}

fn err(line: usize, message: impl Into<String>) -> DumpError {
    DumpError { line, message: message.into() }
}

fn parse_var(tok: &str, line: usize) -> Result<usize, DumpError> {
    tok.strip_prefix('x')
        .and_then(|d| d.parse().ok())
        .ok_or_else(|| err(line, format!("expected a variable like x3, found `{tok}`")))
}

fn parse_number(tok: &str, line: usize) -> Result<f64, DumpError> {
    match tok.trim() {
        "inf" | "+inf" => Ok(f64::INFINITY),
        "-inf" => Ok(f64::NEG_INFINITY),
        t => t
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| err(line, format!("invalid number `{t}`"))),
    }
}

/// Parses `2*x0 - x1 + 3.5e-1*x4` into coefficient pairs.
fn parse_expr(text: &str, line: usize) -> Result<Vec<(usize, f64)>, DumpError> {
    let compact: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    if compact.is_empty() {
        return Ok(Vec::new());
    }
    // Split before every sign that is not part of an exponent.
    let bytes = compact.as_bytes();
    let mut terms = Vec::new();
    let mut start = 0;
    for i in 1..bytes.len() {
        let c = bytes[i];
        if (c == b'+' || c == b'-') && !matches!(bytes[i - 1], b'e' | b'E' | b'*' | b'+' | b'-') {
            terms.push(&compact[start..i]);
            start = i;
        }
    }
    terms.push(&compact[start..]);

    let mut out = Vec::new();
    for term in terms {
        let (sign, body) = match term.as_bytes().first() {
            Some(b'-') => (-1.0, &term[1..]),
            Some(b'+') => (1.0, &term[1..]),
            _ => (1.0, term),
        };
        let (coef, var) = match body.split_once('*') {
            Some((c, v)) => (parse_number(c, line)?, v),
            None => (1.0, body),
        };
        out.push((parse_var(var, line)?, sign * coef));
    }
    Ok(out)
}

pub fn parse(text: &str) -> Result<MilpProblem, DumpError> {
    let mut objective: Vec<(usize, f64)> = Vec::new();
    let mut rows: Vec<(Vec<(usize, f64)>, Sense, f64)> = Vec::new();
    let mut bounds: Vec<(usize, f64, f64)> = Vec::new();
    let mut binaries: Vec<usize> = Vec::new();
    let mut max_index: Option<usize> = None;
    let mut seen = |j: usize| max_index = Some(max_index.map_or(j, |m: usize| m.max(j)));

    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(rest) = content.strip_prefix("min:") {
            objective = parse_expr(rest, line)?;
            objective.iter().for_each(|&(j, _)| seen(j));
        } else if let Some(rest) = content.strip_prefix("bin:") {
            for tok in rest.split_whitespace() {
                let j = parse_var(tok, line)?;
                seen(j);
                binaries.push(j);
            }
        } else if let Some((var, range)) = content.split_once(" in ") {
            let j = parse_var(var.trim(), line)?;
            seen(j);
            let inner = range
                .trim()
                .strip_prefix('[')
                .and_then(|r| r.strip_suffix(']'))
                .ok_or_else(|| err(line, "bounds must look like [lo, hi]"))?;
            let (lo, hi) = inner.split_once(',').ok_or_else(|| err(line, "bounds need two values"))?;
            bounds.push((j, parse_number(lo, line)?, parse_number(hi, line)?));
        } else {
            let (lhs, sense, rhs) = ["<=", ">=", "="]
                .iter()
                .find_map(|op| content.split_once(op).map(|(l, r)| (l, *op, r)))
                .ok_or_else(|| err(line, "expected a constraint with <=, = or >="))?;
            let sense = match sense {
                "<=" => Sense::Le,
                ">=" => Sense::Ge,
                _ => Sense::Eq,
            };
            let coeffs = parse_expr(lhs, line)?;
            coeffs.iter().for_each(|&(j, _)| seen(j));
            let rhs = parse_number(rhs, line)?;
            if !rhs.is_finite() {
                return Err(err(line, "right-hand side must be finite"));
            }
            rows.push((coeffs, sense, rhs));
        }
    }

    let n = max_index.map_or(0, |m| m + 1);
    let mut lp = LpProblem::new(n);
    for (j, c) in objective {
        lp.objective[j] += c;
    }
    for (coeffs, sense, rhs) in rows {
        lp.add_constraint(coeffs, sense, rhs);
    }
    for (j, lo, hi) in bounds {
        lp.bounds[j] = (lo, hi);
    }
    Ok(MilpProblem::new(lp, binaries))
}

fn fmt_num(v: f64) -> String {
    if v == f64::INFINITY {
        "inf".into()
    } else if v == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{v:?}")
    }
}

/// Writes a problem in the dump format. `parse(&write(p))` reproduces `p`
/// up to merged duplicate objective terms.
pub fn write(problem: &MilpProblem) -> String {
    let lp = &problem.base;
    let mut out = String::new();
    let terms = |coeffs: &[(usize, f64)]| -> String {
        let mut s = String::new();
        for (k, &(j, a)) in coeffs.iter().enumerate() {
            if k > 0 {
                s.push_str(" + ");
            }
            let _ = write!(s, "{}*x{}", fmt_num(a), j);
        }
        s
    };
    let obj: Vec<(usize, f64)> =
        lp.objective.iter().enumerate().filter(|(_, &c)| c != 0.0).map(|(j, &c)| (j, c)).collect();
    let _ = writeln!(out, "min: {}", terms(&obj));
    for row in &lp.constraints {
        let _ = writeln!(out, "{} {} {}", terms(&row.coeffs), row.sense.symbol(), fmt_num(row.rhs));
    }
    for (j, &(lo, hi)) in lp.bounds.iter().enumerate() {
        let _ = writeln!(out, "x{} in [{}, {}]", j, fmt_num(lo), fmt_num(hi));
    }
    if !problem.binary_vars.is_empty() {
        let names: Vec<String> = problem.binary_vars.iter().map(|j| format!("x{j}")).collect();
        let _ = writeln!(out, "bin: {}", names.join(" "));
    }
    out
}
