//! Plain-text dataset format.
//!
//! ```text
//! # comment
//! ODOM <from> <to> <n> <dx1> <dy1> <dth1> ... <dxn> <dyn> <dthn> <sxy> <sth>
//! LOOP <from> <to> <dx> <dy> <dth> <sxy> <sth>
//! ```

use std::fmt::{self, Write as _};
use std::path::Path;

use super::SlamError;

/// Relative motion `(dx, dy, dtheta)` in the frame of the earlier pose.
pub type Motion = [f64; 3];

#[derive(Clone, Debug, PartialEq)]
pub enum DatasetEntry {
    /// Odometry with one or more hypotheses; a discrete mode selects one.
    Odometry { from: u64, to: u64, hypotheses: Vec<Motion>, sigma_xy: f64, sigma_theta: f64 },
    /// Loop closure switched on or off by a binary mode.
    LoopClosure { from: u64, to: u64, measured: Motion, sigma_xy: f64, sigma_theta: f64 },
}

impl DatasetEntry {
    pub fn from(&self) -> u64 {
        match self {
            DatasetEntry::Odometry { from, .. } | DatasetEntry::LoopClosure { from, .. } => *from,
        }
    }

    pub fn to(&self) -> u64 {
        match self {
            DatasetEntry::Odometry { to, .. } | DatasetEntry::LoopClosure { to, .. } => *to,
        }
    }

    /// True when the entry introduces a discrete mode.
    pub fn is_hybrid(&self) -> bool {
        match self {
            DatasetEntry::Odometry { hypotheses, .. } => hypotheses.len() > 1,
            DatasetEntry::LoopClosure { .. } => true,
        }
    }

    fn validate(&self) -> Result<(), String> {
        let (sxy, sth) = match self {
            DatasetEntry::Odometry { hypotheses, sigma_xy, sigma_theta, .. } => {
                if hypotheses.is_empty() {
                    return Err("odometry needs at least one hypothesis".into());
                }
                if hypotheses.iter().flatten().any(|v| !v.is_finite()) {
                    return Err("non-finite motion".into());
                }
                (*sigma_xy, *sigma_theta)
            }
            DatasetEntry::LoopClosure { from, to, measured, sigma_xy, sigma_theta } => {
                if from >= to {
                    return Err(format!("loop closure requires from < to, got {from} {to}"));
                }
                if measured.iter().any(|v| !v.is_finite()) {
                    return Err("non-finite motion".into());
                }
                (*sigma_xy, *sigma_theta)
            }
        };
        if !(sxy > 0.0 && sth > 0.0 && sxy.is_finite() && sth.is_finite()) {
            return Err(format!("sigmas must be positive, got {sxy} {sth}"));
        }
        Ok(())
    }
}

// `{}` on f64 prints the shortest string that parses back to the same value.
impl fmt::Display for DatasetEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DatasetEntry::Odometry { from, to, hypotheses, sigma_xy, sigma_theta } => {
                write!(f, "ODOM {from} {to} {}", hypotheses.len())?;
                for [dx, dy, dth] in hypotheses {
                    write!(f, " {dx} {dy} {dth}")?;
                }
                write!(f, " {sigma_xy} {sigma_theta}")
            }
            DatasetEntry::LoopClosure { from, to, measured: [dx, dy, dth], sigma_xy, sigma_theta } => {
                write!(f, "LOOP {from} {to} {dx} {dy} {dth} {sigma_xy} {sigma_theta}")
            }
        }
    }
}

fn parse_line(line: &str) -> Result<Option<DatasetEntry>, String> {
    let content = line.split('#').next().unwrap_or("");
    let mut tokens = content.split_whitespace();
    let Some(tag) = tokens.next() else {
        return Ok(None);
    };
    let rest: Vec<&str> = tokens.collect();
    let int = |i: usize, what: &str| -> Result<i64, String> {
        rest.get(i)
            .ok_or_else(|| format!("missing {what}"))?
            .parse::<i64>()
            .map_err(|e| format!("bad {what} {:?}: {e}", rest[i]))
    };
    let index = |i: usize, what: &str| -> Result<u64, String> {
        u64::try_from(int(i, what)?).map_err(|_| format!("{what} must be nonnegative"))
    };
    let real = |i: usize| -> Result<f64, String> {
        rest.get(i)
            .ok_or_else(|| "missing value".to_string())?
            .parse::<f64>()
            .map_err(|e| format!("bad number {:?}: {e}", rest[i]))
    };
    let entry = match tag {
        "ODOM" => {
            let (from, to) = (index(0, "from")?, index(1, "to")?);
            let n = int(2, "hypothesis count")?;
            if n <= 0 {
                return Err(format!("hypothesis count must be positive, got {n}"));
            }
            let n = n as usize;
            let expected = 3 + 3 * n + 2;
            if rest.len() != expected {
                return Err(format!("expected {expected} fields after ODOM, found {}", rest.len()));
            }
            let hypotheses = (0..n)
                .map(|h| Ok([real(3 + 3 * h)?, real(4 + 3 * h)?, real(5 + 3 * h)?]))
                .collect::<Result<_, String>>()?;
            DatasetEntry::Odometry { from, to, hypotheses, sigma_xy: real(3 + 3 * n)?, sigma_theta: real(4 + 3 * n)? }
        }
        "LOOP" => {
            if rest.len() != 7 {
                return Err(format!("expected 7 fields after LOOP, found {}", rest.len()));
            }
            DatasetEntry::LoopClosure {
                from: index(0, "from")?,
                to: index(1, "to")?,
                measured: [real(2)?, real(3)?, real(4)?],
                sigma_xy: real(5)?,
                sigma_theta: real(6)?,
            }
        }
        other => return Err(format!("unknown record type {other:?}")),
    };
    entry.validate()?;
    Ok(Some(entry))
}

/// Parses dataset text; errors carry the 1-based line number.
pub fn parse_dataset_str(text: &str) -> Result<Vec<DatasetEntry>, SlamError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        match parse_line(line) {
            Ok(Some(e)) => out.push(e),
            Ok(None) => {}
            Err(message) => return Err(SlamError::Parse { line: i + 1, message }),
        }
    }
    Ok(out)
}

pub fn parse_dataset(path: &Path) -> Result<Vec<DatasetEntry>, SlamError> {
    let text = std::fs::read_to_string(path).map_err(|e| SlamError::io(path, e))?;
    parse_dataset_str(&text)
}

pub fn format_dataset(entries: &[DatasetEntry]) -> String {
    let mut s = String::new();
    for e in entries {
        writeln!(s, "{e}").expect("writing to a String");
    }
    s
}

pub fn write_dataset(path: &Path, entries: &[DatasetEntry]) -> Result<(), SlamError> {
    std::fs::write(path, format_dataset(entries)).map_err(|e| SlamError::io(path, e))
}
