//! CPLEX-LP and MPS text for mixed-integer programs, plus an MPS reader.

use std::collections::HashMap;
use std::fmt::Write as _;

use thiserror::Error;

use super::milp::Milp;
use super::rational::Rational;
use super::simplex::{LinearProgram, Relation};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("unknown row {0}")]
    UnknownRow(String),
    #[error("unknown column {0}")]
    UnknownColumn(String),
}

pub struct Names<'a> {
    pub vars: &'a [String],
    pub rows: &'a [String],
}

fn is_binary(lp: &LinearProgram, j: usize) -> bool {
    lp.lower[j] == Rational::ZERO && lp.upper[j] == Some(Rational::ONE)
}

fn term(first: bool, coef: &Rational, name: &str) -> String {
    let sign = if coef.is_negative() {
        "-"
    } else if first {
        ""
    } else {
        "+"
    };
    let mag = coef.abs();
    let sep = if first && sign.is_empty() { "" } else { " " };
    if mag == Rational::ONE {
        format!("{sign}{sep}{name}")
    } else {
        format!("{sign}{sep}{mag} {name}")
    }
}

fn linear(coeffs: &[(usize, Rational)], names: &[String]) -> String {
    let parts: Vec<String> = coeffs
        .iter()
        .filter(|(_, c)| !c.is_zero())
        .enumerate()
        .map(|(k, (j, c))| term(k == 0, c, &names[*j]))
        .collect();
    if parts.is_empty() {
        "0".into()
    } else {
        parts.join(" ")
    }
}

/// CPLEX LP format. Integer variables with bounds `[0, 1]` go under
/// `Binaries`, other integers under `General`.
pub fn write_lp(milp: &Milp, names: &Names, comment: &str) -> String {
    let lp = &milp.lp;
    let mut out = String::new();
    for line in comment.lines() {
        let _ = writeln!(out, "\\ {line}");
    }
    let obj: Vec<(usize, Rational)> = lp.objective.iter().cloned().enumerate().collect();
    let _ = writeln!(out, "Maximize\n obj: {}", linear(&obj, names.vars));
    let _ = writeln!(out, "Subject To");
    for (c, name) in lp.constraints.iter().zip(names.rows) {
        let op = match c.relation {
            Relation::Le => "<=",
            Relation::Ge => ">=",
            Relation::Eq => "=",
        };
        let _ = writeln!(out, " {name}: {} {op} {}", linear(&c.coeffs, names.vars), c.rhs);
    }
    let _ = writeln!(out, "Bounds");
    for j in 0..lp.num_vars() {
        if milp.integer[j] && is_binary(lp, j) {
            continue;
        }
        let name = &names.vars[j];
        match &lp.upper[j] {
            Some(u) if *u == lp.lower[j] => {
                let _ = writeln!(out, " {name} = {u}");
            }
            Some(u) => {
                let _ = writeln!(out, " {} <= {name} <= {u}", lp.lower[j]);
            }
            None => {
                let _ = writeln!(out, " {name} >= {}", lp.lower[j]);
            }
        }
    }
    let binaries: Vec<&str> = (0..lp.num_vars())
        .filter(|&j| milp.integer[j] && is_binary(lp, j))
        .map(|j| names.vars[j].as_str())
        .collect();
    let generals: Vec<&str> = (0..lp.num_vars())
        .filter(|&j| milp.integer[j] && !is_binary(lp, j))
        .map(|j| names.vars[j].as_str())
        .collect();
    if !binaries.is_empty() {
        let _ = writeln!(out, "Binaries\n {}", binaries.join(" "));
    }
    if !generals.is_empty() {
        let _ = writeln!(out, "General\n {}", generals.join(" "));
    }
    out.push_str("End\n");
    out
}

/// Free-format MPS with an `OBJSENSE MAX` section.
pub fn write_mps(milp: &Milp, names: &Names, model_name: &str) -> String {
    let lp = &milp.lp;
    let mut out = String::new();
    let _ = writeln!(out, "NAME {model_name}\nOBJSENSE\n    MAX\nROWS\n N  obj");
    for (c, name) in lp.constraints.iter().zip(names.rows) {
        let t = match c.relation {
            Relation::Le => 'L',
            Relation::Ge => 'G',
            Relation::Eq => 'E',
        };
        let _ = writeln!(out, " {t}  {name}");
    }
    // column-major view
    let mut cols: Vec<Vec<(&str, &Rational)>> = vec![Vec::new(); lp.num_vars()];
    for (j, c) in lp.objective.iter().enumerate() {
        if !c.is_zero() {
            cols[j].push(("obj", c));
        }
    }
    for (c, name) in lp.constraints.iter().zip(names.rows) {
        for (j, a) in &c.coeffs {
            if !a.is_zero() {
                cols[*j].push((name.as_str(), a));
            }
        }
    }
    let _ = writeln!(out, "COLUMNS");
    let mut in_int = false;
    for (j, entries) in cols.iter().enumerate() {
        if milp.integer[j] != in_int {
            let tag = if milp.integer[j] { "INTORG" } else { "INTEND" };
            let _ = writeln!(out, "    MARKER 'MARKER' '{tag}'");
            in_int = milp.integer[j];
        }
        if entries.is_empty() {
            // keep the column declared
            let _ = writeln!(out, "    {} obj 0", names.vars[j]);
        }
        for (row, a) in entries {
            let _ = writeln!(out, "    {} {row} {a}", names.vars[j]);
        }
    }
    if in_int {
        let _ = writeln!(out, "    MARKER 'MARKER' 'INTEND'");
    }
    let _ = writeln!(out, "RHS");
    for (c, name) in lp.constraints.iter().zip(names.rows) {
        if !c.rhs.is_zero() {
            let _ = writeln!(out, "    RHS {name} {}", c.rhs);
        }
    }
    let _ = writeln!(out, "BOUNDS");
    for j in 0..lp.num_vars() {
        let name = &names.vars[j];
        let lo = &lp.lower[j];
        match &lp.upper[j] {
            _ if milp.integer[j] && is_binary(lp, j) => {
                let _ = writeln!(out, " BV BND {name}");
            }
            Some(u) if u == lo => {
                let _ = writeln!(out, " FX BND {name} {u}");
            }
            Some(u) => {
                if !lo.is_zero() {
                    let _ = writeln!(out, " LO BND {name} {lo}");
                }
                let _ = writeln!(out, " UP BND {name} {u}");
            }
            None => {
                if !lo.is_zero() {
                    let _ = writeln!(out, " LO BND {name} {lo}");
                }
            }
        }
    }
    out.push_str("ENDATA\n");
    out
}

fn parse_number(tok: &str, line: usize) -> Result<Rational, ParseError> {
    let err = || ParseError::Syntax {
        line,
        msg: format!("bad number {tok:?}"),
    };
    match tok.split_once('/') {
        Some((n, d)) => {
            let n: i64 = n.parse().map_err(|_| err())?;
            let d: i64 = d.parse().map_err(|_| err())?;
            if d == 0 {
                return Err(err());
            }
            Ok(Rational::new(n, d))
        }
        None => tok.parse::<i64>().map(Rational::integer).map_err(|_| err()),
    }
}

/// A parsed MPS model with its names.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedModel {
    pub milp: Milp,
    pub var_names: Vec<String>,
    pub row_names: Vec<String>,
}

/// Read free-format MPS as written by [`write_mps`] (integer or `p/q`
/// coefficients; `MAX` or `MIN` sense; bound types `UP LO FX BV MI PL`).
pub fn read_mps(text: &str) -> Result<ParsedModel, ParseError> {
    #[derive(PartialEq)]
    enum Sec {
        None,
        Sense,
        Rows,
        Columns,
        Rhs,
        Bounds,
    }
    let mut sec = Sec::None;
    let mut minimize = false;
    let mut obj_row = String::new();
    let mut rows: Vec<(String, Relation)> = Vec::new();
    let mut row_index: HashMap<String, usize> = HashMap::new();
    let mut lp = LinearProgram::new();
    let mut var_names: Vec<String> = Vec::new();
    let mut var_index: HashMap<String, usize> = HashMap::new();
    let mut integer: Vec<bool> = Vec::new();
    let mut row_coeffs: Vec<Vec<(usize, Rational)>> = Vec::new();
    let mut rhs: Vec<Rational> = Vec::new();
    let mut in_int = false;
    let mut binaries: Vec<usize> = Vec::new();

    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let toks: Vec<&str> = raw.split_whitespace().collect();
        if toks.is_empty() || raw.starts_with('*') {
            continue;
        }
        let syntax = |msg: &str| ParseError::Syntax {
            line,
            msg: msg.to_string(),
        };
        if !raw.starts_with(' ') && !raw.starts_with('\t') {
            sec = match toks[0] {
                "NAME" => Sec::None,
                "OBJSENSE" => {
                    if let Some(s) = toks.get(1) {
                        minimize = *s == "MIN" || *s == "MINIMIZE";
                    }
                    Sec::Sense
                }
                "ROWS" => Sec::Rows,
                "COLUMNS" => Sec::Columns,
                "RHS" => Sec::Rhs,
                "BOUNDS" => Sec::Bounds,
                "ENDATA" => break,
                other => return Err(syntax(&format!("unknown section {other}"))),
            };
            continue;
        }
        match sec {
            Sec::None => return Err(syntax("data outside a section")),
            Sec::Sense => minimize = matches!(toks[0], "MIN" | "MINIMIZE"),
            Sec::Rows => {
                let [kind, name] = toks[..] else {
                    return Err(syntax("expected row type and name"));
                };
                let rel = match kind {
                    "N" => {
                        obj_row = name.to_string();
                        continue;
                    }
                    "L" => Relation::Le,
                    "G" => Relation::Ge,
                    "E" => Relation::Eq,
                    _ => return Err(syntax("unknown row type")),
                };
                row_index.insert(name.to_string(), rows.len());
                rows.push((name.to_string(), rel));
                row_coeffs.push(Vec::new());
                rhs.push(Rational::ZERO);
            }
            Sec::Columns => {
                if toks.len() == 3 && toks[1] == "'MARKER'" {
                    in_int = toks[2] == "'INTORG'";
                    continue;
                }
                if toks.len() < 3 || toks.len().is_multiple_of(2) {
                    return Err(syntax("expected column, row, value pairs"));
                }
                let col = toks[0];
                let j = match var_index.get(col) {
                    Some(&j) => j,
                    None => {
                        let j = lp.add_var(Rational::ZERO, None, Rational::ZERO);
                        var_index.insert(col.to_string(), j);
                        var_names.push(col.to_string());
                        integer.push(in_int);
                        j
                    }
                };
                for pair in toks[1..].chunks(2) {
                    let v = parse_number(pair[1], line)?;
                    if pair[0] == obj_row {
                        lp.objective[j] = &lp.objective[j] + &v;
                    } else {
                        let r = *row_index
                            .get(pair[0])
                            .ok_or_else(|| ParseError::UnknownRow(pair[0].to_string()))?;
                        if !v.is_zero() {
                            row_coeffs[r].push((j, v));
                        }
                    }
                }
            }
            Sec::Rhs => {
                if toks.len() < 3 || toks.len().is_multiple_of(2) {
                    return Err(syntax("expected set name, row, value pairs"));
                }
                for pair in toks[1..].chunks(2) {
                    let r = *row_index
                        .get(pair[0])
                        .ok_or_else(|| ParseError::UnknownRow(pair[0].to_string()))?;
                    rhs[r] = parse_number(pair[1], line)?;
                }
            }
            Sec::Bounds => {
                if toks.len() < 3 {
                    return Err(syntax("expected bound type, set name, column"));
                }
                let j = *var_index
                    .get(toks[2])
                    .ok_or_else(|| ParseError::UnknownColumn(toks[2].to_string()))?;
                let value = || -> Result<Rational, ParseError> {
                    parse_number(toks.get(3).ok_or_else(|| syntax("missing bound value"))?, line)
                };
                match toks[0] {
                    "UP" => lp.upper[j] = Some(value()?),
                    "LO" => lp.lower[j] = value()?,
                    "FX" => {
                        let v = value()?;
                        lp.lower[j] = v.clone();
                        lp.upper[j] = Some(v);
                    }
                    "BV" => binaries.push(j),
                    "PL" => lp.upper[j] = None,
                    _ => return Err(syntax("unsupported bound type")),
                }
            }
        }
    }
    for j in binaries {
        lp.lower[j] = Rational::ZERO;
        lp.upper[j] = Some(Rational::ONE);
        integer[j] = true;
    }
    if minimize {
        for c in lp.objective.iter_mut() {
            *c = -&*c;
        }
    }
    for ((coeffs, r), (_, rel)) in row_coeffs.into_iter().zip(rhs).zip(&rows) {
        lp.add_constraint(coeffs, *rel, r);
    }
    Ok(ParsedModel {
        milp: Milp {
            lp,
            integer,
            branch_order: Vec::new(),
        },
        var_names,
        row_names: rows.into_iter().map(|(n, _)| n).collect(),
    })
}
