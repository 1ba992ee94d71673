use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::integrals::Eri;
use crate::linalg::RMat;
use crate::orbital_space::MOIntegrals;

/// Reads an FCIDUMP file (Knowles–Handy layout, 1-based indices).
pub fn load_fcidump(path: impl AsRef<Path>) -> Result<MOIntegrals> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_fcidump(&text)
}

fn parse_float(tok: &str) -> Option<f64> {
    tok.replace(['D', 'd'], "E").parse().ok()
}

fn parse_header(header: &str) -> Result<HashMap<String, Vec<String>>> {
    let body = header.trim_start();
    let body = body
        .strip_prefix("&FCI")
        .or_else(|| body.strip_prefix("&fci"))
        .ok_or_else(|| Error::format("header", "expected &FCI namelist"))?;
    let mut fields: HashMap<String, Vec<String>> = HashMap::new();
    let mut current: Option<String> = None;
    for tok in body.split(|c: char| c == ',' || c.is_whitespace()).filter(|t| !t.is_empty()) {
        if let Some((k, v)) = tok.split_once('=') {
            let key = k.trim().to_ascii_uppercase();
            let entry = fields.entry(key.clone()).or_default();
            if !v.is_empty() {
                entry.push(v.to_string());
            }
            current = Some(key);
        } else if let Some(key) = &current {
            fields.get_mut(key).expect("key inserted").push(tok.to_string());
        } else {
            return Err(Error::format("header", format!("unexpected token {tok:?}")));
        }
    }
    Ok(fields)
}

fn header_usize(fields: &HashMap<String, Vec<String>>, key: &str) -> Result<usize> {
    let v = fields
        .get(key)
        .and_then(|v| v.first())
        .ok_or_else(|| Error::format("header", format!("missing {key}")))?;
    v.parse()
        .map_err(|_| Error::format("header", format!("{key} is not a non-negative integer: {v:?}")))
}

/// Parses FCIDUMP text.
pub fn parse_fcidump(text: &str) -> Result<MOIntegrals> {
    let mut header = String::new();
    let mut lines = text.lines();
    let mut closed = false;
    for line in lines.by_ref() {
        let t = line.trim();
        if t.eq_ignore_ascii_case("&END") || t == "/" {
            closed = true;
            break;
        }
        if let Some(pre) = t.strip_suffix("&END").or_else(|| t.strip_suffix("/")) {
            header.push_str(pre);
            closed = true;
            break;
        }
        header.push_str(t);
        header.push(' ');
    }
    if !closed {
        return Err(Error::format("header", "namelist not terminated by &END"));
    }
    let fields = parse_header(&header)?;
    let n = header_usize(&fields, "NORB")?;
    let n_elec = header_usize(&fields, "NELEC")?;
    let mut h = RMat::zeros(n, n);
    let mut eri = Eri::zeros(n);
    let mut e0 = 0.0;
    for (lineno, line) in lines.enumerate() {
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.is_empty() {
            continue;
        }
        let bad = || Error::format("record", format!("malformed integral record {:?}", line.trim()));
        if toks.len() != 5 {
            return Err(bad());
        }
        let value = parse_float(toks[0]).ok_or_else(bad)?;
        let mut idx = [0usize; 4];
        for k in 0..4 {
            idx[k] = toks[k + 1].parse().map_err(|_| bad())?;
            if idx[k] > n {
                return Err(Error::format(
                    "record",
                    format!("index {} out of range 1..={n} on data line {}", idx[k], lineno + 1),
                ));
            }
        }
        match idx {
            [0, 0, 0, 0] => e0 = value,
            [p, r, 0, 0] if p > 0 && r > 0 => {
                h[(p - 1, r - 1)] = value;
                h[(r - 1, p - 1)] = value;
            }
            [p, r, q, s] if p > 0 && r > 0 && q > 0 && s > 0 => {
                eri.set(p - 1, r - 1, q - 1, s - 1, value);
            }
            // orbital-energy records (p 0 0 0) carry no Hamiltonian content
            [_, 0, 0, 0] => {}
            _ => return Err(bad()),
        }
    }
    Ok(MOIntegrals {
        e0,
        h,
        eri,
        n_elec,
        restricted: true,
    })
}

/// Serializes `mo` as FCIDUMP text. Values use the shortest representation
/// that round-trips exactly.
pub fn format_fcidump(mo: &MOIntegrals) -> String {
    let n = mo.n_orb();
    let mut out = String::new();
    let _ = writeln!(out, " &FCI NORB={n},NELEC={},MS2=0,", mo.n_elec);
    let _ = writeln!(out, "  ORBSYM={}", "1,".repeat(n));
    let _ = writeln!(out, "  ISYM=1,");
    let _ = writeln!(out, " &END");
    for p in 0..n {
        for r in 0..=p {
            for q in 0..=p {
                let smax = if q == p { r } else { q };
                for s in 0..=smax {
                    let v = mo.eri.get(p, r, q, s);
                    if v != 0.0 {
                        let _ = writeln!(out, "{v:e} {} {} {} {}", p + 1, r + 1, q + 1, s + 1);
                    }
                }
            }
        }
    }
    for p in 0..n {
        for r in 0..=p {
            let v = mo.h[(p, r)];
            if v != 0.0 {
                let _ = writeln!(out, "{v:e} {} {} 0 0", p + 1, r + 1);
            }
        }
    }
    let _ = writeln!(out, "{:e} 0 0 0 0", mo.e0);
    out
}

pub fn write_fcidump(mo: &MOIntegrals, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, format_fcidump(mo)).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_orbital_echo() {
        let text = " &FCI NORB=1,NELEC=1,MS2=1,\n  ORBSYM=1,\n  ISYM=1,\n &END\n 0.625 1 1 1 1\n -0.5 1 1 0 0\n 0.0 0 0 0 0\n";
        let mo = parse_fcidump(text).unwrap();
        assert_eq!(mo.n_orb(), 1);
        assert_eq!(mo.n_elec, 1);
        assert_eq!(mo.h[(0, 0)], -0.5);
        assert_eq!(mo.eri.get(0, 0, 0, 0), 0.625);
        assert_eq!(mo.e0, 0.0);
    }

    #[test]
    fn fortran_exponents_and_slash_terminator() {
        let text = "&FCI NORB=1, NELEC=2 /\n 1.5D-01 1 1 1 1\n";
        let mo = parse_fcidump(text).unwrap();
        assert_eq!(mo.eri.get(0, 0, 0, 0), 0.15);
    }

    #[test]
    fn out_of_range_index() {
        let text = "&FCI NORB=1,NELEC=2,\n&END\n 1.0 2 1 1 1\n";
        let err = parse_fcidump(text).unwrap_err().to_string();
        assert!(err.contains("out of range"), "{err}");
    }

    #[test]
    fn malformed_header() {
        assert!(parse_fcidump("NORB=1\n1.0 1 1 1 1\n").is_err());
        assert!(parse_fcidump("&FCI NELEC=2,\n&END\n").unwrap_err().to_string().contains("NORB"));
    }
}
