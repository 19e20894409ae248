//! Text format for trace sets.
//!
//! ```text
//! model=prob-bitflip:0.6666666666666666,0.3333333333333333 w=8 boundary=23 row=b col=0 off=0 seed=1 trials=46080
//! 000102030405060708090a0b0c0d0e0f
//! ```
//!
//! Each nonce line is the 16 nonce bytes (words `n0..n3`, little-endian) in hex.

use std::fmt::Write;

use super::inject::{FaultLocation, FaultSpec, TraceSet};
use crate::gimli::{Nonce, NONCE_BYTES};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("trace file line {line}: {msg}")]
pub struct TraceSetError {
    pub line: usize,
    pub msg: String,
}

fn err(line: usize, msg: impl Into<String>) -> TraceSetError {
    TraceSetError {
        line,
        msg: msg.into(),
    }
}

pub fn header_line(set: &TraceSet) -> String {
    format!("{} seed={} trials={}", set.spec, set.seed, set.trials)
}

pub fn write_trace_set(set: &TraceSet) -> String {
    let mut out = header_line(set);
    out.push('\n');
    for n in &set.nonces {
        let _ = writeln!(out, "{}", hex::encode(n.to_bytes()));
    }
    out
}

fn parse_header(line: &str) -> Result<(FaultSpec, u64, u64), TraceSetError> {
    const KEYS: [&str; 8] = [
        "model", "w", "boundary", "row", "col", "off", "seed", "trials",
    ];
    let mut vals: [Option<&str>; 8] = [None; 8];
    for field in line.split_whitespace() {
        let (k, v) = field
            .split_once('=')
            .ok_or_else(|| err(1, format!("expected key=value, got `{field}`")))?;
        let idx = KEYS
            .iter()
            .position(|&x| x == k)
            .ok_or_else(|| err(1, format!("unknown header field `{k}`")))?;
        if vals[idx].replace(v).is_some() {
            return Err(err(1, format!("duplicate header field `{k}`")));
        }
    }
    let get =
        |i: usize| vals[i].ok_or_else(|| err(1, format!("missing header field `{}`", KEYS[i])));
    fn num<T: std::str::FromStr>(name: &str, v: &str) -> Result<T, TraceSetError> {
        v.parse()
            .map_err(|_| err(1, format!("bad value `{v}` for `{name}`")))
    }
    let model = get(0)?.parse().map_err(|e| err(1, format!("{e}")))?;
    let spec = FaultSpec::new(
        model,
        num("w", get(1)?)?,
        FaultLocation {
            boundary: num("boundary", get(2)?)?,
            row: get(3)?.parse().map_err(|e| err(1, format!("{e}")))?,
            col: num("col", get(4)?)?,
            offset: num("off", get(5)?)?,
        },
    )
    .map_err(|e| err(1, e.to_string()))?;
    Ok((spec, num("seed", get(6)?)?, num("trials", get(7)?)?))
}

pub fn parse_trace_set(text: &str) -> Result<TraceSet, TraceSetError> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or_else(|| err(1, "empty trace file"))?;
    let (spec, seed, trials) = parse_header(header)?;
    let mut nonces = Vec::new();
    for (i, line) in lines {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let bytes = hex::decode(line).map_err(|e| err(i + 1, format!("bad nonce hex: {e}")))?;
        let bytes: [u8; NONCE_BYTES] = bytes.try_into().map_err(|v: Vec<u8>| {
            err(i + 1, format!("nonce has {} bytes, expected 16", v.len()))
        })?;
        nonces.push(Nonce::from_bytes(&bytes));
    }
    if nonces.len() as u64 > trials {
        return Err(err(
            1,
            format!("{} nonces but only {trials} trials", nonces.len()),
        ));
    }
    Ok(TraceSet {
        spec,
        seed,
        trials,
        nonces,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fault::FaultModel;
    use crate::gimli::Row;
    use proptest::prelude::*;

    fn sample(nonces: Vec<Nonce>) -> TraceSet {
        TraceSet {
            spec: FaultSpec::new(
                FaultModel::BIASED_BITFLIP,
                8,
                FaultLocation {
                    boundary: 23,
                    row: Row::B,
                    col: 0,
                    offset: 0,
                },
            )
            .unwrap(),
            seed: 77,
            trials: 1000,
            nonces,
        }
    }

    #[test]
    fn header_format() {
        let t = sample(vec![Nonce([
            0x03020100, 0x07060504, 0x0b0a0908, 0x0f0e0d0c,
        ])]);
        let text = write_trace_set(&t);
        assert_eq!(
            text,
            "model=prob-bitflip:0.6666666666666666,0.3333333333333333 w=8 boundary=23 row=b col=0 off=0 seed=77 trials=1000\n000102030405060708090a0b0c0d0e0f\n"
        );
    }

    #[test]
    fn errors_carry_line_numbers() {
        let mut text = write_trace_set(&sample(vec![Nonce([1, 2, 3, 4]); 3]));
        text = text.replacen("01000000", "0100000g", 1);
        assert_eq!(parse_trace_set(&text).unwrap_err().line, 2);
        let text = write_trace_set(&sample(vec![])).replace("w=8", "w=x");
        assert_eq!(parse_trace_set(&text).unwrap_err().line, 1);
        assert!(parse_trace_set("").is_err());
        let short = write_trace_set(&sample(vec![])) + "0011\n";
        assert_eq!(parse_trace_set(&short).unwrap_err().line, 2);
    }

    proptest! {
        #[test]
        fn round_trip(ns in proptest::collection::vec(proptest::array::uniform4(any::<u32>()), 0..50)) {
            let t = sample(ns.into_iter().map(Nonce).collect());
            prop_assert_eq!(parse_trace_set(&write_trace_set(&t)).unwrap(), t);
        }
    }
}
