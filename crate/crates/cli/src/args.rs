//! Value syntax for the command line: complex numbers, levels and counts.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

/// A level given either as a decimal or relative to the critical value,
/// `t0`, `t0-1e-4`, `t0+0.05`. Resolved once `r` is known.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Level {
    Abs(f64),
    Critical(f64),
}

impl Level {
    pub fn resolve(self, t0: f64) -> f64 {
        match self {
            Level::Abs(t) => t,
            Level::Critical(0.0) => t0,
            Level::Critical(off) => t0 + off,
        }
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Level::Abs(t) => write!(f, "{t}"),
            Level::Critical(off) if *off == 0.0 => write!(f, "t0"),
            Level::Critical(off) if *off > 0.0 => write!(f, "t0+{off}"),
            Level::Critical(off) => write!(f, "t0{off}"),
        }
    }
}

fn finite(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("not a number: {s:?}"))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("not finite: {s:?}"))
    }
}

impl FromStr for Level {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let s = s.trim();
        match s.strip_prefix("t0") {
            Some("") => Ok(Level::Critical(0.0)),
            Some(rest) if rest.starts_with('+') || rest.starts_with('-') => {
                let off = finite(rest.strip_prefix('+').unwrap_or(rest))?;
                Ok(Level::Critical(off))
            }
            Some(_) => Err(format!("bad level {s:?}: expected t0, t0+x or t0-x")),
            None => finite(s).map(Level::Abs),
        }
    }
}

/// `lo:hi`, each side a [`Level`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Band {
    pub lo: Level,
    pub hi: Level,
}

impl FromStr for Band {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let (lo, hi) = s
            .split_once(':')
            .ok_or_else(|| format!("bad band {s:?}: expected lo:hi"))?;
        Ok(Band {
            lo: lo.parse()?,
            hi: hi.parse()?,
        })
    }
}

impl fmt::Display for Band {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.lo, self.hi)
    }
}

/// Parses `a+bi`, `a-bi`, `a`, `bi`, `i` and `-i`, with no spaces.
pub fn parse_complex(s: &str) -> Result<Complex64, String> {
    let err = || format!("bad complex number {s:?}: expected a+bi");
    if s.is_empty() || s.contains(char::is_whitespace) {
        return Err(err());
    }
    let Some(body) = s.strip_suffix('i') else {
        return finite(s).map(|re| Complex64::new(re, 0.0)).map_err(|_| err());
    };
    // The sign that separates the parts is the last one not following an
    // exponent marker.
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&k| (bytes[k] == b'+' || bytes[k] == b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
    let imag = |t: &str| -> Result<f64, String> {
        match t {
            "" | "+" => Ok(1.0),
            "-" => Ok(-1.0),
            _ => finite(t).map_err(|_| err()),
        }
    };
    match split {
        Some(k) => {
            let re = finite(&body[..k]).map_err(|_| err())?;
            Ok(Complex64::new(re, imag(&body[k..])?))
        }
        None => Ok(Complex64::new(0.0, imag(body)?)),
    }
}

/// A non-negative integer, also accepted in float syntax such as `1e7`.
pub fn parse_count(s: &str) -> Result<u64, String> {
    if let Ok(n) = s.parse::<u64>() {
        return Ok(n);
    }
    let v = finite(s)?;
    if v >= 0.0 && v.fract() == 0.0 && v <= u64::MAX as f64 {
        Ok(v as u64)
    } else {
        Err(format!("not a non-negative integer: {s:?}"))
    }
}

pub fn parse_positive(s: &str) -> Result<f64, String> {
    let v = finite(s)?;
    if v > 0.0 {
        Ok(v)
    } else {
        Err(format!("must be positive: {s:?}"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complex_forms() {
        let c = |re, im| Ok(Complex64::new(re, im));
        assert_eq!(parse_complex("1+0i"), c(1.0, 0.0));
        assert_eq!(parse_complex("-0.5-2i"), c(-0.5, -2.0));
        assert_eq!(parse_complex("3"), c(3.0, 0.0));
        assert_eq!(parse_complex("-2.5i"), c(0.0, -2.5));
        assert_eq!(parse_complex("i"), c(0.0, 1.0));
        assert_eq!(parse_complex("-i"), c(0.0, -1.0));
        assert_eq!(parse_complex("1e-3+2E+2i"), c(1e-3, 200.0));
        assert_eq!(parse_complex("1+i"), c(1.0, 1.0));
        assert!(parse_complex("1 + 2i").is_err());
        assert!(parse_complex("1+2j").is_err());
        assert!(parse_complex("").is_err());
        assert!(parse_complex("nan").is_err());
    }

    #[test]
    fn levels() {
        let t0 = -1.0 / 9.0;
        assert_eq!("t0".parse::<Level>().unwrap().resolve(t0), t0);
        assert_eq!("t0-1e-4".parse::<Level>().unwrap().resolve(t0), t0 - 1e-4);
        assert_eq!("t0+0.05".parse::<Level>().unwrap().resolve(t0), t0 + 0.05);
        assert_eq!("-0.2".parse::<Level>().unwrap(), Level::Abs(-0.2));
        assert!("t1".parse::<Level>().is_err());
        assert!("t0x".parse::<Level>().is_err());
        let b: Band = "-0.12111:t0".parse().unwrap();
        assert_eq!(b.lo, Level::Abs(-0.12111));
        assert_eq!(b.hi, Level::Critical(0.0));
        assert_eq!(b.to_string(), "-0.12111:t0");
        assert!("-0.1".parse::<Band>().is_err());
    }

    #[test]
    fn counts() {
        assert_eq!(parse_count("1e7"), Ok(10_000_000));
        assert_eq!(parse_count("42"), Ok(42));
        assert!(parse_count("1.5").is_err());
        assert!(parse_count("-3").is_err());
        assert!(parse_positive("0").is_err());
    }
}
