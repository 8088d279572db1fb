//! Plain-text polynomial notation: `1.0*u1^2 - 0.5*u1*u3`.
//!
//! Variables are `u1..u3` (state variables) or `z1..z3` (arguments of the
//! oracle nonlinearities); a single expression uses one prefix.

use super::{enumerate_monomials, Exponents, HomoPoly};

#[derive(Debug, Clone, PartialEq)]
pub struct ParsedTerm {
    pub coef: f64,
    pub exps: Exponents,
}

impl ParsedTerm {
    pub fn degree(&self) -> usize {
        self.exps.iter().sum()
    }
}

fn fmt_coef(c: f64) -> String {
    format!("{c:?}")
}

/// Renders a polynomial with variables `{prefix}1`, `{prefix}2`, ....
/// Zero coefficients are omitted; the zero polynomial renders as `0`.
pub fn format_poly(p: &HomoPoly, prefix: &str) -> String {
    format_terms(
        enumerate_monomials(p.nvars(), p.degree())
            .into_iter()
            .zip(p.coeffs().iter().copied()),
        prefix,
    )
}

pub(crate) fn format_terms(terms: impl IntoIterator<Item = (Exponents, f64)>, prefix: &str) -> String {
    let mut out = String::new();
    for (e, c) in terms {
        if c == 0.0 {
            continue;
        }
        if out.is_empty() {
            if c < 0.0 {
                out.push('-');
            }
        } else {
            out.push_str(if c < 0.0 { " - " } else { " + " });
        }
        out.push_str(&fmt_coef(c.abs()));
        for (i, &k) in e.iter().enumerate() {
            match k {
                0 => {}
                1 => out.push_str(&format!("*{prefix}{}", i + 1)),
                _ => out.push_str(&format!("*{prefix}{}^{k}", i + 1)),
            }
        }
    }
    if out.is_empty() {
        out.push('0');
    }
    out
}

fn split_terms(s: &str) -> Vec<(f64, &str)> {
    let bytes = s.as_bytes();
    let mut pieces = Vec::new();
    let mut start = 0;
    let mut sign = 1.0;
    let mut i = 0;
    while i < bytes.len() {
        let ch = bytes[i];
        if (ch == b'+' || ch == b'-') && i > 0 {
            let prev = bytes[i - 1];
            let exponent_sign =
                (prev == b'e' || prev == b'E') && i >= 2 && (bytes[i - 2].is_ascii_digit() || bytes[i - 2] == b'.');
            if start == i {
                if ch == b'-' {
                    sign = -sign;
                }
                start = i + 1;
            } else if !exponent_sign && prev != b'*' && prev != b'^' {
                pieces.push((sign, &s[start..i]));
                sign = if ch == b'-' { -1.0 } else { 1.0 };
                start = i + 1;
            }
        } else if (ch == b'+' || ch == b'-') && i == 0 {
            sign = if ch == b'-' { -1.0 } else { 1.0 };
            start = 1;
        }
        i += 1;
    }
    pieces.push((sign, &s[start..]));
    pieces
}

/// Parses a polynomial expression into terms. Returns the terms and the
/// variable prefix used (if any variable appears).
pub fn parse_terms(text: &str) -> Result<(Vec<ParsedTerm>, Option<char>), String> {
    let compact: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    if compact.is_empty() {
        return Err("empty polynomial".into());
    }
    if compact == "0" {
        return Ok((Vec::new(), None));
    }
    let mut prefix: Option<char> = None;
    let mut terms = Vec::new();
    for (sign, body) in split_terms(&compact) {
        if body.is_empty() {
            return Err("dangling sign".into());
        }
        let mut coef = sign;
        let mut exps = [0usize; 3];
        for factor in body.split('*') {
            let mut chars = factor.chars();
            match chars.next() {
                Some(c @ ('u' | 'z')) => {
                    match prefix {
                        None => prefix = Some(c),
                        Some(p) if p != c => return Err(format!("mixed variable prefixes '{p}' and '{c}'")),
                        _ => {}
                    }
                    let rest = chars.as_str();
                    let (var, power) = match rest.split_once('^') {
                        Some((v, k)) => (
                            v,
                            k.parse::<usize>().map_err(|_| format!("bad exponent in '{factor}'"))?,
                        ),
                        None => (rest, 1),
                    };
                    let idx: usize = var.parse().map_err(|_| format!("bad variable in '{factor}'"))?;
                    if !(1..=3).contains(&idx) {
                        return Err(format!("variable index {idx} out of range in '{factor}'"));
                    }
                    exps[idx - 1] += power;
                }
                Some(_) => {
                    let v: f64 = factor.parse().map_err(|_| format!("bad coefficient '{factor}'"))?;
                    coef *= v;
                }
                None => return Err(format!("empty factor in '{body}'")),
            }
        }
        terms.push(ParsedTerm { coef, exps });
    }
    Ok((terms, prefix))
}
