//! `ElementFile` JSON codec.
//!
//! ```json
//! {
//!   "version": 1,
//!   "space": "circle",
//!   "points": [
//!     {"x": [0, 0], "y": [1, 1]},
//!     {"x": [1, 0], "y": [3, 1]}
//!   ]
//! }
//! ```
//!
//! Each coordinate is `[m, k]` for `m / 2^k`. Numerators at or beyond 2^53
//! in magnitude are written as decimal strings.

use std::fmt::Write as _;
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use num_bigint::BigInt;
use num_traits::ToPrimitive;
use serde::Deserialize;
use serde_json::Value;
use thompson_approx::{Dyadic, PLMap, PlError, Point, Space};

pub const VERSION: u64 = 1;

const SAFE_INTEGER: i64 = 1 << 53;

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFile {
    version: u64,
    space: String,
    points: Vec<RawPoint>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPoint {
    x: (Value, u64),
    y: (Value, u64),
}

/// Parsed but not yet validated contents of an element file.
#[derive(Debug, Clone)]
pub struct ElementFile {
    pub space: Space,
    pub points: Vec<Point>,
}

fn numerator(v: &Value) -> Result<BigInt> {
    match v {
        Value::Number(n) => n
            .as_i64()
            .map(BigInt::from)
            .ok_or_else(|| anyhow!("numerator {n} is not an integer")),
        Value::String(s) => BigInt::from_str(s).map_err(|_| anyhow!("numerator {s:?} is not a decimal integer")),
        other => bail!("numerator must be a number or a decimal string, found {other}"),
    }
}

fn parse_space(s: &str) -> Result<Space> {
    match s {
        "interval" => Ok(Space::Interval),
        "circle" => Ok(Space::CircleLift),
        other => bail!("unknown space {other:?} (expected \"interval\" or \"circle\")"),
    }
}

pub fn space_name(space: Space) -> &'static str {
    match space {
        Space::Interval => "interval",
        Space::CircleLift => "circle",
    }
}

impl ElementFile {
    pub fn parse(text: &str) -> Result<Self> {
        let raw: RawFile = serde_json::from_str(text).context("malformed element file")?;
        if raw.version != VERSION {
            bail!("unsupported element file version {}", raw.version);
        }
        let space = parse_space(&raw.space)?;
        let points = raw
            .points
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let x = Dyadic::new(numerator(&p.x.0).with_context(|| format!("point {i}, x"))?, p.x.1);
                let y = Dyadic::new(numerator(&p.y.0).with_context(|| format!("point {i}, y"))?, p.y.1);
                Ok(Point::new(x, y))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(ElementFile { space, points })
    }

    pub fn into_map(self) -> Result<PLMap, PlError> {
        PLMap::new(self.space, self.points)
    }
}

fn write_coordinate(out: &mut String, d: &Dyadic) {
    let m = d.numerator();
    match m.to_i64() {
        Some(v) if v.abs() < SAFE_INTEGER => write!(out, "[{v}, {}]", d.exponent()).unwrap(),
        _ => write!(out, "[\"{m}\", {}]", d.exponent()).unwrap(),
    }
}

/// Canonical serialization: one point per line, trailing newline.
pub fn to_json(g: &PLMap) -> String {
    let mut out = String::new();
    writeln!(
        out,
        "{{\n  \"version\": {VERSION},\n  \"space\": \"{}\",\n  \"points\": [",
        space_name(g.space())
    )
    .unwrap();
    let last = g.points().len() - 1;
    for (i, p) in g.points().iter().enumerate() {
        out.push_str("    {\"x\": ");
        write_coordinate(&mut out, &p.x);
        out.push_str(", \"y\": ");
        write_coordinate(&mut out, &p.y);
        out.push_str(if i == last { "}\n" } else { "},\n" });
    }
    out.push_str("  ]\n}\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn big_numerators_become_strings() {
        let big = Dyadic::new(BigInt::from(1u64 << 60) + 1, 61);
        let g = PLMap::new(
            Space::Interval,
            vec![
                Point::new(Dyadic::zero(), Dyadic::zero()),
                Point::new(big.clone(), big),
                Point::new(Dyadic::one(), Dyadic::one()),
            ],
        )
        .unwrap();
        // collinear middle point is stripped
        assert_eq!(g.points().len(), 2);

        let mut s = String::new();
        write_coordinate(&mut s, &Dyadic::new(BigInt::from(1u64 << 60) + 1, 61));
        assert_eq!(s, "[\"1152921504606846977\", 61]");
        let mut s = String::new();
        write_coordinate(&mut s, &Dyadic::new(-3, 2));
        assert_eq!(s, "[-3, 2]");
    }

    #[test]
    fn round_trip_is_byte_stable() {
        let text = r#"{"version": 1, "space": "circle", "points": [
            {"x": [0, 0], "y": [2, 2]}, {"x": [1, 1], "y": [3, 2]},
            {"x": [3, 2], "y": ["1", 0]}, {"x": [1, 0], "y": [3, 1]}]}"#;
        let g = ElementFile::parse(text).unwrap().into_map().unwrap();
        let once = to_json(&g);
        let twice = to_json(&ElementFile::parse(&once).unwrap().into_map().unwrap());
        assert_eq!(once, twice);
        assert!(once.contains("{\"x\": [0, 0], \"y\": [1, 1]}"));
    }

    #[test]
    fn rejects_bad_input() {
        assert!(ElementFile::parse("{}").is_err());
        assert!(ElementFile::parse(r#"{"version": 2, "space": "interval", "points": []}"#).is_err());
        assert!(ElementFile::parse(r#"{"version": 1, "space": "disk", "points": []}"#).is_err());
        assert!(
            ElementFile::parse(r#"{"version": 1, "space": "interval", "points": [{"x": [0.5, 0], "y": [0, 0]}]}"#)
                .is_err()
        );
    }
}
