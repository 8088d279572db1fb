//! Text formats. Every file starts with the line `trizero-format 1`; blank
//! lines and `#` comments are ignored elsewhere.
//!
//! * params: `a = 1`, `beta = 0`
//! * polynomial: one or more lines of terms in `z1`, `z2` (summed)
//! * nonlinearity pair: lines `F = <poly>` and `G = <poly>`
//! * normal form / target: lines `A[2,0] = 1.0`
//! * trajectory: CSV after the header

use crate::error::{Error, Result};
use crate::homological::WLabel;
use crate::linear::{locus, OscillatorParams};
use crate::poly::{format_poly, parse_terms, HomoPoly};
use crate::reduction::{FGSeries, NFSeries};
use crate::verify::Trajectory;
use std::collections::BTreeMap;
use std::fmt::Write as _;

pub const HEADER: &str = "trizero-format 1";

/// Non-empty, non-comment lines after the header, with 1-based line numbers.
fn body_lines(text: &str) -> Result<Vec<(usize, &str)>> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
    let header = lines.by_ref().find(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    match header {
        Some((_, l)) if l == HEADER => {}
        Some((n, l)) => return Err(Error::parse(n, format!("expected header '{HEADER}', found '{l}'"))),
        None => return Err(Error::parse(1, format!("missing header '{HEADER}'"))),
    }
    Ok(lines
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
        .map(|(n, l)| (n, l.split('#').next().unwrap_or("").trim()))
        .collect())
}

fn key_value(n: usize, line: &str) -> Result<(&str, &str)> {
    line.split_once('=')
        .map(|(k, v)| (k.trim(), v.trim()))
        .ok_or_else(|| Error::parse(n, format!("expected 'key = value', found '{line}'")))
}

fn number(n: usize, s: &str) -> Result<f64> {
    let v: f64 = s.parse().map_err(|_| Error::parse(n, format!("bad number '{s}'")))?;
    if !v.is_finite() {
        return Err(Error::parse(n, format!("non-finite number '{s}'")));
    }
    Ok(v)
}

/// Reads `a` and `beta`. Returns the raw pair; use [`parse_params`] for the locus.
pub fn parse_params_raw(text: &str) -> Result<(f64, f64)> {
    let mut a = None;
    let mut beta = None;
    for (n, line) in body_lines(text)? {
        let (k, v) = key_value(n, line)?;
        let slot = match k {
            "a" => &mut a,
            "beta" => &mut beta,
            _ => return Err(Error::parse(n, format!("unknown parameter '{k}' (expected a, beta)"))),
        };
        if slot.is_some() {
            return Err(Error::parse(n, format!("parameter '{k}' given twice")));
        }
        *slot = Some(number(n, v)?);
    }
    match (a, beta) {
        (Some(a), Some(beta)) => Ok((a, beta)),
        (None, _) => Err(Error::parse(0, "missing parameter 'a'")),
        (_, None) => Err(Error::parse(0, "missing parameter 'beta'")),
    }
}

pub fn parse_params(text: &str) -> Result<OscillatorParams> {
    let (a, beta) = parse_params_raw(text)?;
    locus(a, beta)
}

pub fn write_params(a: f64, beta: f64) -> String {
    format!("{HEADER}\na = {a:?}\nbeta = {beta:?}\n")
}

fn add_terms(series: &mut FGSeries, is_f: bool, n: usize, expr: &str) -> Result<()> {
    let (terms, _) = parse_terms(expr).map_err(|m| Error::parse(n, m))?;
    for t in terms {
        if t.exps[2] != 0 {
            return Err(Error::parse(n, "nonlinearities depend on two variables (z1, z2) only"));
        }
        let d = t.degree();
        if d < 2 {
            return Err(Error::parse(
                n,
                format!("term of degree {d}; nonlinearities start at degree 2"),
            ));
        }
        let exps = [t.exps[0], t.exps[1], 0];
        let mut p = if d <= series.max_degree() {
            if is_f { series.f(d) } else { series.g(d) }.clone()
        } else {
            HomoPoly::zero(2, d)
        };
        p.add_term(&exps, t.coef).map_err(|e| Error::parse(n, e.to_string()))?;
        if is_f {
            series.set_f(d, p)?;
        } else {
            series.set_g(d, p)?;
        }
    }
    Ok(())
}

/// A single polynomial in `z1`, `z2`, graded into homogeneous parts.
/// Returned as the `F` half of a series.
pub fn parse_poly_file(text: &str) -> Result<FGSeries> {
    let mut s = FGSeries::zero(2);
    for (n, line) in body_lines(text)? {
        add_terms(&mut s, true, n, line)?;
    }
    Ok(s)
}

pub fn parse_fg(text: &str) -> Result<FGSeries> {
    let mut s = FGSeries::zero(2);
    for (n, line) in body_lines(text)? {
        let (k, v) = key_value(n, line)?;
        match k {
            "F" => add_terms(&mut s, true, n, v)?,
            "G" => add_terms(&mut s, false, n, v)?,
            _ => return Err(Error::parse(n, format!("expected 'F = ...' or 'G = ...', found '{k}'"))),
        }
    }
    Ok(s)
}

/// Combines separately read `F` and `G` polynomial files.
pub fn combine_fg(f: &FGSeries, g: &FGSeries) -> FGSeries {
    let top = f.max_degree().max(g.max_degree());
    let mut out = FGSeries::zero(top);
    for j in 2..=top {
        if j <= f.max_degree() {
            out.set_f(j, f.f(j).clone()).expect("degree matches");
        }
        if j <= g.max_degree() {
            out.set_g(j, g.f(j).clone()).expect("degree matches");
        }
    }
    out
}

/// Sum of the homogeneous parts of one half of a series (exact round trip).
pub fn format_series_half(fg: &FGSeries, f_half: bool) -> String {
    let parts: Vec<String> = (2..=fg.max_degree())
        .map(|j| if f_half { fg.f(j) } else { fg.g(j) })
        .filter(|p| !p.is_zero())
        .map(|p| format_poly(p, "z"))
        .collect();
    if parts.is_empty() {
        return "0".into();
    }
    let mut out = parts[0].clone();
    for p in &parts[1..] {
        match p.strip_prefix('-') {
            Some(rest) => write!(out, " - {rest}").unwrap(),
            None => write!(out, " + {p}").unwrap(),
        }
    }
    out
}

pub fn write_fg(fg: &FGSeries) -> String {
    format!(
        "{HEADER}\nF = {}\nG = {}\n",
        format_series_half(fg, true),
        format_series_half(fg, false)
    )
}

/// Labeled coefficients. Every label must belong to its `W_j`; absent labels
/// are zero. The series order is `order` if given, otherwise the highest
/// degree present (at least 2).
pub fn parse_nf(text: &str, order: Option<usize>) -> Result<NFSeries> {
    let mut values: BTreeMap<WLabel, (usize, f64)> = BTreeMap::new();
    for (n, line) in body_lines(text)? {
        let (k, v) = key_value(n, line)?;
        let label: WLabel = k.parse().map_err(|m: String| Error::parse(n, m))?;
        label.validate().map_err(|e| match e {
            Error::Validation(m) => Error::parse(n, m),
            other => other,
        })?;
        let value = number(n, v)?;
        if values.insert(label, (n, value)).is_some() {
            return Err(Error::parse(n, format!("{label} given twice")));
        }
    }
    let top = values.keys().map(|l| l.degree).max().unwrap_or(2);
    let order = match order {
        Some(o) => {
            if let Some((label, (n, _))) = values.iter().find(|(l, _)| l.degree > o) {
                return Err(Error::parse(*n, format!("{label} exceeds order {o}")));
            }
            o
        }
        None => top,
    };
    let mut nf = NFSeries::zero(order);
    for (label, (_, v)) in values {
        nf.set(label, v)?;
    }
    Ok(nf)
}

/// All coefficients, grouped by degree, in exponent notation with 17
/// significant digits.
pub fn write_nf(nf: &NFSeries) -> String {
    let mut out = format!("{HEADER}\n");
    out.push_str(&nf_lines(nf));
    out
}

pub(crate) fn nf_lines(nf: &NFSeries) -> String {
    let mut out = String::new();
    let mut last = 0;
    for (label, v) in nf.entries() {
        if label.degree != last {
            writeln!(out, "# degree {}", label.degree).unwrap();
            last = label.degree;
        }
        writeln!(out, "{label} = {v:.16e}").unwrap();
    }
    out
}

pub fn write_trajectory(traj: &Trajectory, projection: Option<&[[f64; 3]]>) -> String {
    let mut out = format!("{HEADER}\n");
    out.push_str(if projection.is_some() {
        "t,x,y,u1,u2,u3\n"
    } else {
        "t,x,y\n"
    });
    for (k, (t, z)) in traj.times.iter().zip(&traj.states).enumerate() {
        write!(out, "{t:.15e},{:.15e},{:.15e}", z[0], z[1]).unwrap();
        if let Some(u) = projection {
            write!(out, ",{:.15e},{:.15e},{:.15e}", u[k][0], u[k][1], u[k][2]).unwrap();
        }
        out.push('\n');
    }
    out
}

/// One tolerance-checked quantity.
#[derive(Debug, Clone, PartialEq)]
pub struct Residual {
    pub name: String,
    pub value: f64,
    pub bound: f64,
    /// `true` when the check is `value >= bound` rather than `value <= bound`.
    pub lower: bool,
}

impl Residual {
    pub fn at_most(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Self {
            name: name.into(),
            value,
            bound,
            lower: false,
        }
    }

    pub fn at_least(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Self {
            name: name.into(),
            value,
            bound,
            lower: true,
        }
    }

    pub fn passed(&self) -> bool {
        if self.lower {
            self.value >= self.bound
        } else {
            self.value <= self.bound
        }
    }
}

/// Structured report: `[inputs]`, `[derived]`, `[result]` and `[residuals]`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Report {
    pub command: String,
    pub inputs: Vec<(String, String)>,
    pub derived: Vec<(String, String)>,
    pub result: Vec<String>,
    pub residuals: Vec<Residual>,
}

pub fn num(v: f64) -> String {
    format!("{v:.15e}")
}

impl Report {
    pub fn new(command: &str) -> Self {
        Self {
            command: command.into(),
            ..Self::default()
        }
    }

    pub fn input(&mut self, key: &str, value: impl Into<String>) {
        self.inputs.push((key.into(), value.into()));
    }

    pub fn derived(&mut self, key: &str, value: f64) {
        self.derived.push((key.into(), num(value)));
    }

    pub fn derived_text(&mut self, key: &str, value: impl Into<String>) {
        self.derived.push((key.into(), value.into()));
    }

    pub fn line(&mut self, line: impl Into<String>) {
        self.result.push(line.into());
    }

    pub fn check(&mut self, r: Residual) {
        self.residuals.push(r);
    }

    pub fn failures(&self) -> Vec<&Residual> {
        self.residuals.iter().filter(|r| !r.passed()).collect()
    }

    pub fn render(&self) -> String {
        let mut out = format!("{HEADER}\n# command: {}\n", self.command);
        out.push_str("[inputs]\n");
        for (k, v) in &self.inputs {
            writeln!(out, "{k} = {v}").unwrap();
        }
        out.push_str("[derived]\n");
        for (k, v) in &self.derived {
            writeln!(out, "{k} = {v}").unwrap();
        }
        out.push_str("[result]\n");
        for l in &self.result {
            writeln!(out, "{l}").unwrap();
        }
        out.push_str("[residuals]\n");
        for r in &self.residuals {
            writeln!(
                out,
                "{} = {} {} {} {}",
                r.name,
                num(r.value),
                if r.lower { ">=" } else { "<=" },
                num(r.bound),
                if r.passed() { "PASS" } else { "FAIL" }
            )
            .unwrap();
        }
        out
    }
}
