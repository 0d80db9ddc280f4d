//! Plain-text channel container.
//!
//! ```text
//! irsmec-channels 1
//! antennas <M>
//! users <K>
//! elements <N>
//! noise_power <σ²>
//! tx_power <q_1> … <q_K>
//! G <row> <re> <im> …            (M lines, N pairs each)
//! h_r <k> <re> <im> …            (K lines, N pairs each)
//! h_d <k> <re> <im> …            (K lines, M pairs each)
//! end
//! ```
//!
//! Numbers use the shortest representation that round-trips, so a save/load
//! cycle is bit-exact.

use std::fmt::{self, Write as _};
use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use nalgebra::Complex;

use super::ChannelSet;
use crate::error::Result;
use crate::scalar::{CMat, CVec, Real};

const MAGIC: &str = "irsmec-channels";
const VERSION: &str = "1";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    /// 1-based line number, or the line after the last one for truncation.
    pub line: usize,
    /// Field that failed, e.g. `"h_r[2]"`.
    pub field: String,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}, field `{}`: {}", self.line, self.field, self.message)
    }
}

impl std::error::Error for ParseError {}

pub fn write_channels<T: Real, W: Write>(set: &ChannelSet<T>, mut out: W) -> Result<()> {
    set.validate()?;
    let mut s = String::new();
    let _ = writeln!(s, "{MAGIC} {VERSION}");
    let _ = writeln!(s, "antennas {}", set.antennas());
    let _ = writeln!(s, "users {}", set.users());
    let _ = writeln!(s, "elements {}", set.elements());
    let _ = writeln!(s, "noise_power {:e}", set.noise_power);
    s.push_str("tx_power");
    for q in &set.tx_power {
        let _ = write!(s, " {q:e}");
    }
    s.push('\n');
    for (r, row) in set.irs_to_ap.row_iter().enumerate() {
        push_vector(&mut s, "G", r, row.iter());
    }
    for (k, h) in set.user_to_irs.iter().enumerate() {
        push_vector(&mut s, "h_r", k, h.iter());
    }
    for (k, h) in set.user_to_ap.iter().enumerate() {
        push_vector(&mut s, "h_d", k, h.iter());
    }
    s.push_str("end\n");
    out.write_all(s.as_bytes())?;
    Ok(())
}

fn push_vector<'a, T: Real>(
    s: &mut String,
    tag: &str,
    index: usize,
    entries: impl Iterator<Item = &'a Complex<T>>,
) {
    let _ = write!(s, "{tag} {index}");
    for z in entries {
        let _ = write!(s, " {:e} {:e}", z.re, z.im);
    }
    s.push('\n');
}

pub fn save_channels<T: Real>(set: &ChannelSet<T>, path: impl AsRef<Path>) -> Result<()> {
    let mut buf = Vec::new();
    write_channels(set, &mut buf)?;
    fs::write(path, buf)?;
    Ok(())
}

pub fn read_channels<T: Real, R: Read>(mut input: R) -> Result<ChannelSet<T>> {
    let mut text = String::new();
    input.read_to_string(&mut text)?;
    Ok(parse(&text)?)
}

pub fn load_channels<T: Real>(path: impl AsRef<Path>) -> Result<ChannelSet<T>> {
    read_channels(fs::File::open(path)?)
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    last: usize,
}

impl<'a> Lines<'a> {
    /// Next line whose first token is `key`; returns its line number and the
    /// remaining tokens.
    fn expect(&mut self, key: &str, field: &str) -> Result<(usize, Vec<&'a str>), ParseError> {
        let (i, line) = self.inner.next().ok_or_else(|| ParseError {
            line: self.last + 1,
            field: field.to_string(),
            message: "unexpected end of file".into(),
        })?;
        self.last = i + 1;
        let mut tokens = line.split_whitespace();
        match tokens.next() {
            Some(k) if k == key => Ok((i + 1, tokens.collect())),
            other => Err(ParseError {
                line: i + 1,
                field: field.to_string(),
                message: format!("expected `{key}`, found `{}`", other.unwrap_or("")),
            }),
        }
    }
}

fn number<T: Real>(token: &str, line: usize, field: &str) -> Result<T, ParseError> {
    token.parse::<T>().map_err(|_| ParseError {
        line,
        field: field.to_string(),
        message: format!("invalid number `{token}`"),
    })
}

fn count(tokens: &[&str], line: usize, field: &str) -> Result<usize, ParseError> {
    match tokens {
        [t] => t.parse().map_err(|_| ParseError {
            line,
            field: field.to_string(),
            message: format!("invalid count `{t}`"),
        }),
        _ => Err(ParseError {
            line,
            field: field.to_string(),
            message: "expected a single count".into(),
        }),
    }
}

fn vector<T: Real>(
    lines: &mut Lines<'_>,
    tag: &str,
    index: usize,
    len: usize,
) -> Result<CVec<T>, ParseError> {
    let field = format!("{tag}[{index}]");
    let (line, tokens) = lines.expect(tag, &field)?;
    let err = |message: String| ParseError {
        line,
        field: field.clone(),
        message,
    };
    let (idx, values) = tokens
        .split_first()
        .ok_or_else(|| err("missing row index".into()))?;
    if idx.parse::<usize>().ok() != Some(index) {
        return Err(err(format!("expected index {index}, found `{idx}`")));
    }
    if values.len() != 2 * len {
        return Err(err(format!(
            "expected {} numbers ({len} complex entries), found {}",
            2 * len,
            values.len()
        )));
    }
    let mut out = CVec::zeros(len);
    for (j, pair) in values.chunks(2).enumerate() {
        out[j] = Complex::new(
            number(pair[0], line, &field)?,
            number(pair[1], line, &field)?,
        );
    }
    Ok(out)
}

fn parse<T: Real>(text: &str) -> Result<ChannelSet<T>, ParseError> {
    let mut lines = Lines {
        inner: text.lines().enumerate(),
        last: 0,
    };
    let (line, v) = lines.expect(MAGIC, "header")?;
    if v != [VERSION] {
        return Err(ParseError {
            line,
            field: "header".into(),
            message: format!("unsupported version `{}`", v.join(" ")),
        });
    }
    let (line, t) = lines.expect("antennas", "antennas")?;
    let m = count(&t, line, "antennas")?;
    let (line, t) = lines.expect("users", "users")?;
    let k = count(&t, line, "users")?;
    let (line, t) = lines.expect("elements", "elements")?;
    let n = count(&t, line, "elements")?;
    let (line, t) = lines.expect("noise_power", "noise_power")?;
    let noise_power = match t.as_slice() {
        [x] => number::<T>(x, line, "noise_power")?,
        _ => {
            return Err(ParseError {
                line,
                field: "noise_power".into(),
                message: "expected one number".into(),
            })
        }
    };
    let (line, t) = lines.expect("tx_power", "tx_power")?;
    if t.len() != k {
        return Err(ParseError {
            line,
            field: "tx_power".into(),
            message: format!("expected {k} powers, found {}", t.len()),
        });
    }
    let tx_power = t
        .iter()
        .map(|x| number::<T>(x, line, "tx_power"))
        .collect::<Result<Vec<_>, _>>()?;

    let mut g = CMat::zeros(m, n);
    for r in 0..m {
        let row = vector::<T>(&mut lines, "G", r, n)?;
        g.set_row(r, &row.transpose());
    }
    let user_to_irs = (0..k)
        .map(|i| vector(&mut lines, "h_r", i, n))
        .collect::<Result<Vec<_>, _>>()?;
    let user_to_ap = (0..k)
        .map(|i| vector(&mut lines, "h_d", i, m))
        .collect::<Result<Vec<_>, _>>()?;
    let (line, rest) = lines.expect("end", "end")?;
    if !rest.is_empty() || lines.inner.any(|(_, l)| !l.trim().is_empty()) {
        return Err(ParseError {
            line,
            field: "end".into(),
            message: "trailing content after `end`".into(),
        });
    }

    let set = ChannelSet {
        irs_to_ap: g,
        user_to_irs,
        user_to_ap,
        tx_power,
        noise_power,
    };
    set.validate().map_err(|e| ParseError {
        line,
        field: "channel set".into(),
        message: e.to_string(),
    })?;
    Ok(set)
}
