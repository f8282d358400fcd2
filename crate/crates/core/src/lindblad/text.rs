//! Plain-text model format.
//!
//! One directive per line, tokens separated by whitespace, `#` starts a comment.
//!
//! ```text
//! dim 2
//! hbar 1
//! H 1 1 1+0i          # row col value; unlisted entries are zero
//! bath B              # opens a bath; beta and mu apply to it
//! beta 0.5
//! mu 0
//! channel             # opens a channel in the current bath
//! omega 1
//! rate 1
//! L 0 1 1
//! ```
//!
//! Complex values use the `re+imi` form (`0.5-2i`, `3`, `1e-3+0i`).

use std::fmt::Write as _;
use std::path::Path;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::matrix::{CMatrix, ZERO};

use super::model::{Bath, JumpChannel, LindbladModel};

/// A tokenized non-empty line.
#[derive(Debug, Clone, PartialEq)]
pub struct Directive {
    pub line: usize,
    pub key: String,
    pub args: Vec<String>,
}

/// Splits text into directives, dropping blank lines and comments.
pub fn directives(text: &str) -> Vec<Directive> {
    text.lines()
        .enumerate()
        .filter_map(|(idx, raw)| {
            let body = raw.split('#').next().unwrap_or("");
            let mut tokens = body.split_whitespace().map(str::to_string);
            let key = tokens.next()?;
            Some(Directive {
                line: idx + 1,
                key,
                args: tokens.collect(),
            })
        })
        .collect()
}

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

impl Directive {
    fn expect_args(&self, n: usize) -> Result<()> {
        if self.args.len() != n {
            return Err(parse_err(
                self.line,
                format!("`{}` takes {n} argument(s), got {}", self.key, self.args.len()),
            ));
        }
        Ok(())
    }

    pub fn f64_arg(&self, i: usize) -> Result<f64> {
        let tok = &self.args[i];
        tok.parse::<f64>()
            .map_err(|_| parse_err(self.line, format!("`{tok}` is not a number")))
    }

    fn usize_arg(&self, i: usize) -> Result<usize> {
        let tok = &self.args[i];
        tok.parse::<usize>()
            .map_err(|_| parse_err(self.line, format!("`{tok}` is not an index")))
    }

    fn complex_arg(&self, i: usize) -> Result<Complex64> {
        let tok = &self.args[i];
        tok.parse::<Complex64>()
            .map_err(|_| parse_err(self.line, format!("`{tok}` is not a complex number")))
    }

    fn entry(&self, dim: usize) -> Result<(usize, usize, Complex64)> {
        self.expect_args(3)?;
        let (r, col) = (self.usize_arg(0)?, self.usize_arg(1)?);
        if r >= dim || col >= dim {
            return Err(parse_err(
                self.line,
                format!("entry ({r}, {col}) outside dimension {dim}"),
            ));
        }
        Ok((r, col, self.complex_arg(2)?))
    }
}

#[derive(Default)]
struct PendingChannel {
    line: usize,
    omega: Option<f64>,
    rate: Option<f64>,
    op: Option<CMatrix>,
}

struct PendingBath {
    label: String,
    beta: Option<f64>,
    mu: f64,
    line: usize,
    channels: Vec<PendingChannel>,
}

/// Parses a model from the text format.
pub fn from_text(text: &str) -> Result<LindbladModel> {
    let mut dim: Option<usize> = None;
    let mut hbar = 1.0;
    let mut h: Option<CMatrix> = None;
    let mut baths: Vec<PendingBath> = Vec::new();
    for d in directives(text) {
        let need_dim = || dim.ok_or_else(|| parse_err(d.line, "`dim` must come first"));
        match d.key.as_str() {
            "dim" => {
                d.expect_args(1)?;
                if dim.is_some() {
                    return Err(parse_err(d.line, "`dim` given twice"));
                }
                let n = d.usize_arg(0)?;
                if n == 0 {
                    return Err(parse_err(d.line, "dimension must be positive"));
                }
                dim = Some(n);
                h = Some(CMatrix::zeros(n, n));
            }
            "hbar" => {
                d.expect_args(1)?;
                hbar = d.f64_arg(0)?;
            }
            "H" => {
                let (r, col, z) = d.entry(need_dim()?)?;
                h.as_mut().expect("allocated with dim")[(r, col)] = z;
            }
            "bath" => {
                d.expect_args(1)?;
                baths.push(PendingBath {
                    label: d.args[0].clone(),
                    beta: None,
                    mu: 0.0,
                    line: d.line,
                    channels: Vec::new(),
                });
            }
            "beta" | "mu" => {
                d.expect_args(1)?;
                let v = d.f64_arg(0)?;
                let bath = baths
                    .last_mut()
                    .ok_or_else(|| parse_err(d.line, format!("`{}` outside a bath", d.key)))?;
                if d.key == "beta" {
                    bath.beta = Some(v);
                } else {
                    bath.mu = v;
                }
            }
            "channel" => {
                d.expect_args(0)?;
                let n = need_dim()?;
                let bath = baths
                    .last_mut()
                    .ok_or_else(|| parse_err(d.line, "`channel` outside a bath"))?;
                bath.channels.push(PendingChannel {
                    line: d.line,
                    op: Some(CMatrix::zeros(n, n)),
                    ..PendingChannel::default()
                });
            }
            "omega" | "rate" | "L" => {
                let n = need_dim()?;
                let ch = baths
                    .last_mut()
                    .and_then(|b| b.channels.last_mut())
                    .ok_or_else(|| parse_err(d.line, format!("`{}` outside a channel", d.key)))?;
                match d.key.as_str() {
                    "omega" => {
                        d.expect_args(1)?;
                        ch.omega = Some(d.f64_arg(0)?);
                    }
                    "rate" => {
                        d.expect_args(1)?;
                        ch.rate = Some(d.f64_arg(0)?);
                    }
                    _ => {
                        let (r, col, z) = d.entry(n)?;
                        ch.op.as_mut().expect("allocated with channel")[(r, col)] = z;
                    }
                }
            }
            other => return Err(parse_err(d.line, format!("unknown key `{other}`"))),
        }
    }
    let h = h.ok_or_else(|| parse_err(0, "missing `dim`"))?;
    let mut built = Vec::with_capacity(baths.len());
    for b in baths {
        let beta = b
            .beta
            .ok_or_else(|| parse_err(b.line, format!("bath `{}` lacks `beta`", b.label)))?;
        let mut channels = Vec::with_capacity(b.channels.len());
        for ch in b.channels {
            let omega = ch.omega.ok_or_else(|| parse_err(ch.line, "channel lacks `omega`"))?;
            let rate = ch.rate.ok_or_else(|| parse_err(ch.line, "channel lacks `rate`"))?;
            channels.push(JumpChannel::new(omega, rate, ch.op.expect("allocated"))?);
        }
        built.push(Bath::new(b.label, beta, b.mu, channels)?);
    }
    LindbladModel::with_hbar(hbar, h, built)
}

fn write_entries(out: &mut String, key: &str, m: &CMatrix) {
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            let z = m[(i, j)];
            if z != ZERO {
                let _ = writeln!(out, "{key} {i} {j} {z}");
            }
        }
    }
}

/// Serializes a model; `from_text(&to_text(m))` reproduces it exactly.
pub fn to_text(model: &LindbladModel) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "dim {}", model.dim());
    let _ = writeln!(out, "hbar {}", model.hbar());
    write_entries(&mut out, "H", model.hamiltonian());
    for bath in model.baths() {
        let _ = writeln!(out, "bath {}", bath.label());
        let _ = writeln!(out, "beta {}", bath.beta());
        let _ = writeln!(out, "mu {}", bath.mu());
        for ch in bath.channels() {
            out.push_str("channel\n");
            let _ = writeln!(out, "omega {}", ch.omega());
            let _ = writeln!(out, "rate {}", ch.rate());
            write_entries(&mut out, "L", ch.op());
        }
    }
    out
}

pub fn read_model(path: impl AsRef<Path>) -> Result<LindbladModel> {
    from_text(&std::fs::read_to_string(path)?)
}

pub fn write_model(path: impl AsRef<Path>, model: &LindbladModel) -> Result<()> {
    std::fs::write(path, to_text(model))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = "\
# qubit
dim 2
H 1 1 1
bath B
beta 0.5
channel
omega 1
rate 1
L 0 1 1
channel
omega -1
rate 0.6065306597126334
L 1 0 1+0i
";

    #[test]
    fn parses_sample() {
        let model = from_text(SAMPLE).unwrap();
        assert_eq!(model.dim(), 2);
        assert_eq!(model.baths()[0].channels().len(), 2);
        assert_eq!(model.baths()[0].beta(), 0.5);
        assert_eq!(model.hamiltonian()[(1, 1)], Complex64::new(1.0, 0.0));
    }

    #[test]
    fn round_trip_is_exact() {
        let model_text = SAMPLE.replace("H 1 1 1", "H 1 1 1\nH 0 1 0.1-0.3i\nH 1 0 0.1+0.3i");
        let model = from_text(&model_text).unwrap();
        let again = from_text(&to_text(&model)).unwrap();
        assert_eq!(model.hamiltonian(), again.hamiltonian());
        for (a, b) in model.baths()[0].channels().iter().zip(again.baths()[0].channels()) {
            assert_eq!(a.op(), b.op());
            assert_eq!(a.rate(), b.rate());
            assert_eq!(a.omega(), b.omega());
        }
    }

    #[test]
    fn reports_line_of_bad_value() {
        let bad = SAMPLE.replace("rate 1\n", "rate x\n");
        match from_text(&bad) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 8),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_out_of_range_entry() {
        let bad = SAMPLE.replace("H 1 1 1", "H 2 1 1");
        assert!(matches!(from_text(&bad), Err(Error::Parse { line: 3, .. })));
    }

    #[test]
    fn rejects_channel_outside_bath() {
        assert!(from_text("dim 1\nchannel\n").is_err());
    }
}
