//! Gaussian94-format basis set files.

use std::collections::BTreeMap;

use crate::basis::geometry::canonical_symbol;
use crate::error::{Error, Result};

/// One contracted shell of a single angular momentum.
#[derive(Clone, Debug, PartialEq)]
pub struct Shell {
    pub l: u32,
    pub exponents: Vec<f64>,
    pub coeffs: Vec<f64>,
}

/// Shells per canonical element symbol, in file order.
pub type BasisLibrary = BTreeMap<String, Vec<Shell>>;

fn number(tok: &str, line: usize) -> Result<f64> {
    tok.replace(['D', 'd'], "E")
        .parse::<f64>()
        .map_err(|_| Error::Parse { line, msg: format!("bad number `{tok}`") })
}

fn shell_l(letter: &str, line: usize) -> Result<Vec<u32>> {
    Ok(match letter.to_ascii_uppercase().as_str() {
        "S" => vec![0],
        "P" => vec![1],
        "D" => vec![2],
        "F" => vec![3],
        "G" => vec![4],
        "SP" | "L" => vec![0, 1],
        other => {
            return Err(Error::Parse { line, msg: format!("unknown shell type `{other}`") });
        }
    })
}

/// Parse Gaussian94 text. SP shells become an S and a P shell.
pub fn parse_gaussian94(text: &str) -> Result<BasisLibrary> {
    let mut lib = BasisLibrary::new();
    let lines: Vec<(usize, &str)> = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('!'))
        .collect();
    let mut i = 0;
    while i < lines.len() {
        let (ln, header) = lines[i];
        if header == "****" {
            i += 1;
            continue;
        }
        let toks: Vec<&str> = header.split_whitespace().collect();
        if toks.len() != 2 || toks[1].parse::<i64>().is_err() {
            return Err(Error::Parse { line: ln, msg: format!("expected element header, got `{header}`") });
        }
        let el = canonical_symbol(toks[0])?.to_string();
        i += 1;
        let mut shells = Vec::new();
        loop {
            let Some(&(ln, line)) = lines.get(i) else {
                return Err(Error::Parse { line: ln, msg: format!("block for {el} not closed by ****") });
            };
            i += 1;
            if line == "****" {
                break;
            }
            let toks: Vec<&str> = line.split_whitespace().collect();
            if toks.len() < 2 {
                return Err(Error::Parse { line: ln, msg: format!("bad shell header `{line}`") });
            }
            let ls = shell_l(toks[0], ln)?;
            let n: usize = toks[1]
                .parse()
                .map_err(|_| Error::Parse { line: ln, msg: format!("bad primitive count `{}`", toks[1]) })?;
            let scale = match toks.get(2) {
                Some(t) => number(t, ln)?,
                None => 1.0,
            };
            let mut exps = Vec::with_capacity(n);
            let mut cols: Vec<Vec<f64>> = vec![Vec::with_capacity(n); ls.len()];
            for _ in 0..n {
                let Some(&(pl, row)) = lines.get(i) else {
                    return Err(Error::Parse { line: ln, msg: "primitive count exceeds rows".into() });
                };
                let vals: Vec<&str> = row.split_whitespace().collect();
                if vals.len() != 1 + ls.len() || vals[0] == "****" {
                    return Err(Error::Parse {
                        line: pl,
                        msg: format!("expected {} columns, got `{row}`", 1 + ls.len()),
                    });
                }
                exps.push(number(vals[0], pl)? * scale * scale);
                for (c, v) in cols.iter_mut().zip(&vals[1..]) {
                    c.push(number(v, pl)?);
                }
                i += 1;
            }
            for (l, coeffs) in ls.into_iter().zip(cols) {
                shells.push(Shell { l, exponents: exps.clone(), coeffs });
            }
        }
        lib.insert(el, shells);
    }
    Ok(lib)
}
