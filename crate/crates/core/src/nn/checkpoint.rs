//! Plain-text parameter checkpoints.
//!
//! ```text
//! glove-params 1
//! <count>
//! <name> <rows> <cols>
//! <rows*cols values, space separated, shortest round-trip decimal>
//! ...
//! ```

use std::fmt::Write as _;
use std::path::Path;

use super::params::ParamSet;
use super::tensor::Tensor;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

const MAGIC: &str = "glove-params 1";

pub fn to_text<T: Scalar>(params: &ParamSet<T>) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{MAGIC}");
    let _ = writeln!(out, "{}", params.len());
    for p in params.iter() {
        let _ = writeln!(out, "{} {} {}", p.name, p.value.rows(), p.value.cols());
        let line: Vec<String> = p.value.data().iter().map(|v| v.to_string()).collect();
        let _ = writeln!(out, "{}", line.join(" "));
    }
    out
}

pub fn from_text<T: Scalar>(text: &str) -> Result<ParamSet<T>> {
    let bad = |msg: String| Error::Checkpoint(msg);
    let mut lines = text.lines();
    if lines.next() != Some(MAGIC) {
        return Err(bad("missing header".into()));
    }
    let count: usize = lines
        .next()
        .and_then(|l| l.trim().parse().ok())
        .ok_or_else(|| bad("missing parameter count".into()))?;
    let mut params = ParamSet::new();
    for idx in 0..count {
        let head = lines
            .next()
            .ok_or_else(|| bad(format!("truncated at parameter {idx}")))?;
        let fields: Vec<&str> = head.split_whitespace().collect();
        let [name, rows, cols] = fields[..] else {
            return Err(bad(format!("malformed header line `{head}`")));
        };
        let rows: usize = rows
            .parse()
            .map_err(|_| bad(format!("bad rows for {name}")))?;
        let cols: usize = cols
            .parse()
            .map_err(|_| bad(format!("bad cols for {name}")))?;
        let body = lines
            .next()
            .ok_or_else(|| bad(format!("missing values for {name}")))?;
        let data = body
            .split_whitespace()
            .map(|v| {
                v.parse::<T>()
                    .map_err(|_| bad(format!("bad value `{v}` in {name}")))
            })
            .collect::<Result<Vec<T>>>()?;
        let value = Tensor::from_vec(rows, cols, data)
            .map_err(|_| bad(format!("wrong value count for {name}")))?;
        params.add(name, value);
    }
    Ok(params)
}

pub fn save<T: Scalar>(params: &ParamSet<T>, path: &Path) -> Result<()> {
    std::fs::write(path, to_text(params)).map_err(|e| Error::io(path, e))
}

pub fn load<T: Scalar>(path: &Path) -> Result<ParamSet<T>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    from_text(&text)
}
