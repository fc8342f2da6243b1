//! Molpro-style FCIDUMP reader and writer.
//!
//! Integral lines are `value i j k l` with 1-based orbital indices:
//! all four nonzero is `(ij|kl)`, `k = l = 0` is `h_ij`, all zero is the core
//! energy, and `i > 0, j = k = l = 0` (orbital energies) is ignored.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::DMatrix;

use super::{symmetric_slots, unique_quartets, ActiveSpaceHamiltonian};
use crate::error::{Error, Result};

/// Values at or below this magnitude are not written.
const WRITE_THRESHOLD: f64 = 0.0;

pub fn read_fcidump(path: impl AsRef<Path>) -> Result<ActiveSpaceHamiltonian> {
    let text = std::fs::read_to_string(path)?;
    parse_fcidump(&text)
}

struct Header {
    norb: usize,
    nelec: usize,
    ms2: i64,
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

/// Parses the namelist header; returns it with the index of the first data line.
fn parse_header(lines: &[&str]) -> Result<(Header, usize)> {
    let start = lines
        .iter()
        .position(|l| !l.trim().is_empty())
        .ok_or_else(|| parse_err(1, "empty input"))?;
    if !lines[start].trim_start().to_ascii_uppercase().starts_with("&FCI") {
        return Err(parse_err(start + 1, "expected `&FCI` namelist header"));
    }

    // (token, 1-based line)
    let mut tokens: Vec<(String, usize)> = Vec::new();
    let mut end = None;
    for (i, raw) in lines.iter().enumerate().skip(start) {
        let upper = raw.to_ascii_uppercase();
        let mut body = upper.as_str();
        if i == start {
            body = body.trim_start().trim_start_matches("&FCI");
        }
        let mut done = false;
        if let Some(pos) = body.find("&END") {
            body = &body[..pos];
            done = true;
        } else if let Some(pos) = body.find('/') {
            body = &body[..pos];
            done = true;
        }
        let spaced = body.replace(',', " ").replace('=', " = ");
        tokens.extend(spaced.split_whitespace().map(|t| (t.to_string(), i + 1)));
        if done {
            end = Some(i + 1);
            break;
        }
    }
    let end = end.ok_or_else(|| parse_err(start + 1, "unterminated header (missing `&END` or `/`)"))?;

    let mut norb = None;
    let mut nelec = None;
    let mut ms2 = 0i64;
    let mut i = 0;
    while i < tokens.len() {
        let (key, line) = &tokens[i];
        if tokens.get(i + 1).map(|t| t.0.as_str()) != Some("=") {
            return Err(parse_err(*line, format!("expected `KEY=` in header, found `{key}`")));
        }
        let mut j = i + 2;
        let mut values = Vec::new();
        while j < tokens.len() && tokens.get(j + 1).map(|t| t.0.as_str()) != Some("=") {
            values.push(&tokens[j]);
            j += 1;
        }
        let first = |what: &str| -> Result<i64> {
            let (v, l) = values
                .first()
                .ok_or_else(|| parse_err(*line, format!("{what} has no value")))?;
            v.parse::<i64>()
                .map_err(|_| parse_err(*l, format!("{what} value `{v}` is not an integer")))
        };
        match key.as_str() {
            "NORB" => {
                let v = first("NORB")?;
                if v <= 0 {
                    return Err(parse_err(*line, "NORB must be positive"));
                }
                norb = Some(v as usize);
            }
            "NELEC" => {
                let v = first("NELEC")?;
                if v < 0 {
                    return Err(parse_err(*line, "NELEC must be non-negative"));
                }
                nelec = Some(v as usize);
            }
            "MS2" => ms2 = first("MS2")?,
            // ORBSYM, ISYM, UHF and friends carry no information we use.
            _ => {}
        }
        i = j;
    }
    let norb = norb.ok_or_else(|| parse_err(start + 1, "header lacks NORB"))?;
    let nelec = nelec.ok_or_else(|| parse_err(start + 1, "header lacks NELEC"))?;
    Ok((Header { norb, nelec, ms2 }, end))
}

/// Parses FCIDUMP text into a Hamiltonian with every symmetry-equivalent entry filled.
pub fn parse_fcidump(text: &str) -> Result<ActiveSpaceHamiltonian> {
    let lines: Vec<&str> = text.lines().collect();
    let (header, data_start) = parse_header(&lines)?;
    let n = header.norb;
    if n > 31 {
        return Err(Error::validation(format!("NORB = {n} exceeds supported 31")));
    }
    let ms2 = header.ms2;
    let nelec = header.nelec as i64;
    if (nelec + ms2) % 2 != 0 || ms2.abs() > nelec {
        return Err(Error::validation(format!(
            "inconsistent NELEC = {nelec}, MS2 = {ms2}"
        )));
    }
    let n_alpha = ((nelec + ms2) / 2) as usize;
    let n_beta = ((nelec - ms2) / 2) as usize;

    let mut h1 = DMatrix::zeros(n, n);
    let mut h2 = vec![0.0; n.pow(4)];
    let mut e_core = 0.0;

    for (offset, raw) in lines[data_start..].iter().enumerate() {
        let line_no = data_start + offset + 1;
        let fields: Vec<&str> = raw.split_whitespace().collect();
        if fields.is_empty() {
            continue;
        }
        if fields.len() != 5 {
            return Err(parse_err(
                line_no,
                format!("expected `value i j k l`, found {} fields", fields.len()),
            ));
        }
        let value: f64 = fields[0]
            .replace(['D', 'd'], "E")
            .parse()
            .map_err(|_| parse_err(line_no, format!("non-numeric value `{}`", fields[0])))?;
        let mut idx = [0usize; 4];
        for (slot, f) in idx.iter_mut().zip(&fields[1..]) {
            let v: i64 = f
                .parse()
                .map_err(|_| parse_err(line_no, format!("non-integer index `{f}`")))?;
            if v < 0 || v as usize > n {
                return Err(Error::validation(format!(
                    "line {line_no}: orbital index {v} outside 0..={n}"
                )));
            }
            *slot = v as usize;
        }
        match idx {
            [0, 0, 0, 0] => e_core = value,
            [i, j, 0, 0] if i > 0 && j > 0 => {
                h1[(i - 1, j - 1)] = value;
                h1[(j - 1, i - 1)] = value;
            }
            [i, 0, 0, 0] if i > 0 => {}
            [i, j, k, l] if i > 0 && j > 0 && k > 0 && l > 0 => {
                for slot in symmetric_slots(n, i - 1, j - 1, k - 1, l - 1) {
                    h2[slot] = value;
                }
            }
            _ => {
                return Err(Error::validation(format!(
                    "line {line_no}: unsupported index pattern {idx:?}"
                )))
            }
        }
    }

    ActiveSpaceHamiltonian::new(n, n_alpha, n_beta, h1, h2, e_core)
}

/// Serializes unique integrals; values round-trip exactly through [`parse_fcidump`].
pub fn write_fcidump(h: &ActiveSpaceHamiltonian) -> String {
    let n = h.n_orbitals();
    let mut out = String::new();
    let orbsym = vec!["1"; n].join(",");
    let ms2 = h.n_alpha() as i64 - h.n_beta() as i64;
    writeln!(out, " &FCI NORB={n},NELEC={},MS2={ms2},", h.n_electrons()).unwrap();
    writeln!(out, "  ORBSYM={orbsym},").unwrap();
    writeln!(out, "  ISYM=1,").unwrap();
    writeln!(out, " &END").unwrap();
    for (p, q, r, s) in unique_quartets(n) {
        let v = h.eri(p, q, r, s);
        if v.abs() > WRITE_THRESHOLD {
            writeln!(out, "{v:>25.17e} {:>3} {:>3} {:>3} {:>3}", p + 1, q + 1, r + 1, s + 1).unwrap();
        }
    }
    for p in 0..n {
        for q in 0..=p {
            let v = h.one_body(p, q);
            if v.abs() > WRITE_THRESHOLD {
                writeln!(out, "{v:>25.17e} {:>3} {:>3} {:>3} {:>3}", p + 1, q + 1, 0, 0).unwrap();
            }
        }
    }
    writeln!(out, "{:>25.17e} {:>3} {:>3} {:>3} {:>3}", h.e_core(), 0, 0, 0, 0).unwrap();
    out
}
