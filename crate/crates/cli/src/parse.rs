//! Flag value parsers: suffixed durations, duty-cycles, ranges and scheme names.

use std::fmt;
use std::str::FromStr;

/// Duration in seconds parsed from `<number><ns|us|ms|s>`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Secs(pub f64);

impl FromStr for Secs {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let s = s.trim();
        let split = s.find(|c: char| c.is_ascii_alphabetic() || c == 'µ').ok_or_else(|| {
            format!("'{s}': missing time unit (use ns, us, ms or s)")
        })?;
        let (num, unit) = s.split_at(split);
        let v: f64 = num.trim().parse().map_err(|_| format!("'{s}': bad number"))?;
        let scale = match unit {
            "ns" => 1e-9,
            "us" | "µs" => 1e-6,
            "ms" => 1e-3,
            "s" => 1.0,
            _ => return Err(format!("'{s}': unknown unit '{unit}' (use ns, us, ms or s)")),
        };
        if !(v.is_finite() && v >= 0.0) {
            return Err(format!("'{s}': must be a non-negative finite duration"));
        }
        Ok(Secs(v * scale))
    }
}

/// Duty-cycle from a fraction in (0, 1) or a percentage with an explicit `%`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Duty(pub f64);

impl FromStr for Duty {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let s = s.trim();
        let v = if let Some(p) = s.strip_suffix('%') {
            p.trim().parse::<f64>().map_err(|_| format!("'{s}': bad percentage"))? / 100.0
        } else {
            let v: f64 = s.parse().map_err(|_| format!("'{s}': bad duty-cycle"))?;
            if v >= 1.0 {
                return Err(format!("'{s}': ambiguous; give a fraction below 1 or append '%'"));
            }
            v
        };
        if !(v > 0.0 && v < 1.0) {
            return Err(format!("'{s}': duty-cycle must lie in (0, 1)"));
        }
        Ok(Duty(v))
    }
}

/// `lo:hi:n` (n evenly spaced points) or a single duty-cycle.
#[derive(Debug, Clone, PartialEq)]
pub struct DutyRange(pub Vec<f64>);

impl FromStr for DutyRange {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        match parts.as_slice() {
            [one] => Ok(DutyRange(vec![one.parse::<Duty>()?.0])),
            [lo, hi, n] => {
                let (lo, hi) = (lo.parse::<Duty>()?.0, hi.parse::<Duty>()?.0);
                let n: usize = n.parse().map_err(|_| format!("'{n}': bad point count"))?;
                if n == 0 || hi < lo || (n == 1 && hi != lo) {
                    return Err(format!("'{s}': need lo <= hi and n >= 1 (n = 1 only when lo = hi)"));
                }
                if n == 1 {
                    return Ok(DutyRange(vec![lo]));
                }
                Ok(DutyRange((0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()))
            }
            _ => Err(format!("'{s}': expected a duty-cycle or lo:hi:n")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SchemeArg {
    SingleInt,
    /// SingleInt with M + 1 next to 2/eta.
    SingleIntBound,
    MultiInt(u32),
    /// M = 2 MultiInt with blocking compensation.
    MultiIntBc,
}

impl FromStr for SchemeArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let l = s.to_ascii_lowercase();
        match l.as_str() {
            "singleint" => return Ok(SchemeArg::SingleInt),
            "singleint-bound" => return Ok(SchemeArg::SingleIntBound),
            "multiint-bc" | "multiint2-bc" => return Ok(SchemeArg::MultiIntBc),
            _ => {}
        }
        if let Some(m) = l.strip_prefix("multiint") {
            let m: u32 = m.parse().map_err(|_| format!("'{s}': expected multiint<M>, e.g. multiint2"))?;
            if m == 0 {
                return Err(format!("'{s}': M must be >= 1"));
            }
            return Ok(SchemeArg::MultiInt(m));
        }
        Err(format!("'{s}': unknown scheme (singleint, singleint-bound, multiint<M>, multiint2-bc)"))
    }
}

impl fmt::Display for SchemeArg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SchemeArg::SingleInt => f.write_str("singleint"),
            SchemeArg::SingleIntBound => f.write_str("singleint-bound"),
            SchemeArg::MultiInt(m) => write!(f, "multiint{m}"),
            SchemeArg::MultiIntBc => f.write_str("multiint2-bc"),
        }
    }
}
