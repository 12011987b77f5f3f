//! CSV and JSON serialization of sweep results.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{ExperimentError, Result, SweepResult};

/// Output format.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

impl std::str::FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(format!("unknown format `{other}` (expected csv or json)")),
        }
    }
}

/// `x` rounded to 12 significant digits.
pub fn round12(x: f64) -> f64 {
    format!("{x:.11e}").parse().expect("formatted float parses")
}

fn fmt12(x: f64) -> String {
    format!("{}", round12(x))
}

fn check(result: &SweepResult) -> Result<()> {
    if result.axis.is_empty() || result.series.is_empty() {
        return Err(ExperimentError::config("series", "nothing to emit: the result has no data"));
    }
    if result.series.iter().any(|s| s.values.len() != result.axis.len()) {
        return Err(ExperimentError::config("series", "series length differs from the axis length"));
    }
    Ok(())
}

/// Header `axis,<series…>,unit`, then one row per axis point.
pub fn to_csv(result: &SweepResult) -> Result<String> {
    check(result)?;
    let mut out = String::from("axis");
    for s in &result.series {
        out.push(',');
        out.push_str(&s.name);
    }
    out.push_str(",unit\n");
    for (i, a) in result.axis.iter().enumerate() {
        out.push_str(&fmt12(*a));
        for s in &result.series {
            out.push(',');
            out.push_str(&fmt12(s.values[i]));
        }
        out.push(',');
        out.push_str(&result.unit);
        out.push('\n');
    }
    Ok(out)
}

/// The result with every float rounded to 12 significant digits.
pub fn to_json(result: &SweepResult) -> Result<String> {
    check(result)?;
    let mut r = result.clone();
    r.axis.iter_mut().for_each(|v| *v = round12(*v));
    for s in &mut r.series {
        s.values.iter_mut().for_each(|v| *v = round12(*v));
    }
    let mut text = serde_json::to_string_pretty(&r).map_err(|e| ExperimentError::Io(e.to_string()))?;
    text.push('\n');
    Ok(text)
}

pub fn render(result: &SweepResult, format: Format) -> Result<String> {
    match format {
        Format::Csv => to_csv(result),
        Format::Json => to_json(result),
    }
}

/// Writes `result` to `path`.
pub fn emit(result: &SweepResult, path: &Path, format: Format) -> Result<()> {
    let text = render(result, format)?;
    std::fs::write(path, text).map_err(|e| ExperimentError::Io(format!("{}: {e}", path.display())))
}
