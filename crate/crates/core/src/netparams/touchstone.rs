//! Touchstone v1 reader and writer (S and Z parameters only).
//!
//! Impedance data are read and written in ohms.

use std::fmt::Write as _;
use std::path::Path;

use super::{FrequencyGrid, NetParamsError, NetworkParams, ParamKind, Result};
use crate::matrixkit::{CMat, C64};

#[derive(Debug, Clone, Copy)]
enum DataFormat {
    RealImag,
    MagAngle,
    DbAngle,
}

struct OptionLine {
    unit: f64,
    kind: ParamKind,
    format: DataFormat,
    z_ref: f64,
}

fn syntax(line: usize, reason: impl Into<String>) -> NetParamsError {
    NetParamsError::Syntax { line, reason: reason.into() }
}

fn parse_option_line(body: &str, line: usize) -> Result<OptionLine> {
    let mut opt = OptionLine { unit: 1e9, kind: ParamKind::Scattering, format: DataFormat::MagAngle, z_ref: 50.0 };
    let mut tokens = body.split_whitespace();
    while let Some(tok) = tokens.next() {
        match tok.to_ascii_uppercase().as_str() {
            "HZ" => opt.unit = 1.0,
            "KHZ" => opt.unit = 1e3,
            "MHZ" => opt.unit = 1e6,
            "GHZ" => opt.unit = 1e9,
            "S" => opt.kind = ParamKind::Scattering,
            "Z" => opt.kind = ParamKind::Impedance,
            p @ ("Y" | "G" | "H") => {
                return Err(NetParamsError::UnsupportedFormat(format!("{p}-parameters")));
            }
            "RI" => opt.format = DataFormat::RealImag,
            "MA" => opt.format = DataFormat::MagAngle,
            "DB" => opt.format = DataFormat::DbAngle,
            "R" => {
                let v = tokens.next().ok_or_else(|| syntax(line, "missing reference impedance after R"))?;
                opt.z_ref = v
                    .parse::<f64>()
                    .ok()
                    .filter(|z| z.is_finite() && *z > 0.0)
                    .ok_or_else(|| syntax(line, format!("invalid reference impedance '{v}'")))?;
            }
            other => return Err(syntax(line, format!("unknown option '{other}'"))),
        }
    }
    Ok(opt)
}

fn decode(format: DataFormat, a: f64, b: f64) -> C64 {
    match format {
        DataFormat::RealImag => C64::new(a, b),
        DataFormat::MagAngle => C64::from_polar(a, b.to_radians()),
        DataFormat::DbAngle => C64::from_polar(10f64.powf(a / 20.0), b.to_radians()),
    }
}

/// Number of ports implied by a `.sNp` file name, if any.
fn ports_from_name(path: &Path) -> Option<usize> {
    let ext = path.extension()?.to_str()?.to_ascii_lowercase();
    let digits = ext.strip_prefix('s')?.strip_suffix('p')?;
    digits.parse().ok().filter(|&n| n > 0)
}

/// Reads a Touchstone file; a `.sNp` extension fixes the port count.
pub fn read_touchstone(path: &Path) -> Result<NetworkParams> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| NetParamsError::Io { path: path.display().to_string(), reason: e.to_string() })?;
    match ports_from_name(path) {
        Some(n) => parse_touchstone_with_ports(&text, n),
        None => parse_touchstone(&text),
    }
}

/// Parses Touchstone text, inferring the port count from the line layout.
pub fn parse_touchstone(text: &str) -> Result<NetworkParams> {
    parse(text, None)
}

/// Parses Touchstone text with a known port count.
pub fn parse_touchstone_with_ports(text: &str, n_ports: usize) -> Result<NetworkParams> {
    if n_ports == 0 {
        return Err(NetParamsError::InvalidArgument("port count must be positive".into()));
    }
    parse(text, Some(n_ports))
}

fn parse(text: &str, n_ports: Option<usize>) -> Result<NetworkParams> {
    let mut option: Option<OptionLine> = None;
    // (line number, values) for every data line.
    let mut rows: Vec<(usize, Vec<f64>)> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let body = raw.split('!').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        if body.starts_with('[') {
            return Err(NetParamsError::UnsupportedFormat(format!("keyword line '{body}' (version 2 syntax)")));
        }
        if let Some(rest) = body.strip_prefix('#') {
            if option.is_some() {
                return Err(syntax(line, "second option line"));
            }
            if !rows.is_empty() {
                return Err(syntax(line, "option line after data"));
            }
            option = Some(parse_option_line(rest, line)?);
            continue;
        }
        if option.is_none() {
            return Err(syntax(line, "data before option line"));
        }
        let values = body
            .split_whitespace()
            .map(|t| {
                t.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| syntax(line, format!("invalid number '{t}'")))
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push((line, values));
    }
    let option = option.ok_or_else(|| syntax(text.lines().count().max(1), "missing option line"))?;
    if rows.is_empty() {
        return Err(syntax(text.lines().count().max(1), "no data"));
    }
    let n = match n_ports {
        Some(n) => n,
        None => infer_ports(&rows)?,
    };
    let per_record = 1 + 2 * n * n;

    let mut freqs = Vec::new();
    let mut mats = Vec::new();
    let mut pending: Vec<f64> = Vec::with_capacity(per_record);
    let mut start_line = rows[0].0;
    for (line, values) in &rows {
        if pending.is_empty() {
            start_line = *line;
        }
        pending.extend_from_slice(values);
        if pending.len() > per_record {
            return Err(syntax(*line, format!("record exceeds {per_record} values for {n} ports")));
        }
        if pending.len() == per_record {
            let f = pending[0] * option.unit;
            if let Some(&prev) = freqs.last() {
                if f <= prev {
                    return Err(NetParamsError::NonMonotoneFrequency { line: start_line, freq: f });
                }
            }
            if f <= 0.0 {
                return Err(syntax(start_line, format!("frequency {f} Hz is not positive")));
            }
            let pairs: Vec<C64> = pending[1..].chunks(2).map(|p| decode(option.format, p[0], p[1])).collect();
            mats.push(CMat::from_fn(n, n, |i, j| {
                // Two-port files list S11 S21 S12 S22.
                let k = if n == 2 { j * n + i } else { i * n + j };
                pairs[k]
            }));
            freqs.push(f);
            pending.clear();
        }
    }
    if !pending.is_empty() {
        return Err(syntax(start_line, format!("incomplete record: {} of {per_record} values", pending.len())));
    }
    let grid = FrequencyGrid::new(freqs)?;
    NetworkParams::new(option.kind, option.z_ref, grid, mats)
}

fn infer_ports(rows: &[(usize, Vec<f64>)]) -> Result<usize> {
    let (line, first) = (&rows[0].0, rows[0].1.len());
    let next = rows.get(1).map(|r| r.1.len());
    if first >= 3 && first % 2 == 1 {
        let per_row = (first - 1) / 2;
        if per_row >= 3 && next == Some(first - 1) {
            return Ok(per_row);
        }
        if let Some(n) = (1..=per_row).find(|&n| 1 + 2 * n * n == first) {
            return Ok(n);
        }
        if per_row >= 3 && next.is_none() {
            return Ok(per_row);
        }
    }
    Err(syntax(*line, format!("cannot infer port count from {first} values")))
}

fn push_pair(out: &mut String, z: C64) {
    let _ = write!(out, " {} {}", z.re, z.im);
}

/// Writes Touchstone text in Hz with real/imaginary data. Matrices of three or
/// more ports are written one matrix row per line.
pub fn write_touchstone(params: &NetworkParams) -> String {
    let n = params.n_ports();
    let mut out = String::new();
    let _ = writeln!(out, "! {n}-port {} parameters", params.kind());
    let _ = writeln!(out, "# Hz {} RI R {}", params.kind(), params.z_ref());
    for (f, m) in params.grid().points().iter().zip(params.matrices()) {
        let _ = write!(out, "{f}");
        if n <= 2 {
            // Column-major, which gives S11 S21 S12 S22 for two ports.
            for z in m.vec() {
                push_pair(&mut out, z);
            }
            out.push('\n');
        } else {
            for i in 0..n {
                if i > 0 {
                    out.push_str("   ");
                }
                for &z in m.row(i) {
                    push_pair(&mut out, z);
                }
                out.push('\n');
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn zero_reflection_one_port() {
        let p = parse_touchstone("# GHz S RI R 50\n1.0 0 0\n").unwrap();
        assert_eq!(p.kind(), ParamKind::Scattering);
        assert_eq!(p.z_ref(), 50.0);
        assert_eq!(p.grid().points(), &[1e9]);
        assert_eq!(p.matrices()[0][(0, 0)], c(0.0, 0.0));
    }

    #[test]
    fn magnitude_angle_impedance() {
        let p = parse_touchstone("! comment\n# MHz Z MA R 50\n100 50 0\n").unwrap();
        assert_eq!(p.kind(), ParamKind::Impedance);
        assert_eq!(p.grid().points(), &[1e8]);
        assert_eq!(p.matrices()[0][(0, 0)], c(50.0, 0.0));
    }

    #[test]
    fn db_angle_decoding() {
        let p = parse_touchstone("# Hz S DB R 50\n10 -20 90\n").unwrap();
        assert!((p.matrices()[0][(0, 0)] - c(0.0, 0.1)).norm() < 1e-15);
    }

    #[test]
    fn two_port_column_order() {
        let p = parse_touchstone("# Hz S RI R 50\n1 11 0 21 0 12 0 22 0\n").unwrap();
        let m = &p.matrices()[0];
        assert_eq!(m[(1, 0)], c(21.0, 0.0));
        assert_eq!(m[(0, 1)], c(12.0, 0.0));
    }

    #[test]
    fn multi_line_records() {
        let text =
            "# Hz S RI R 50\n1 1 0 2 0 3 0\n 4 0 5 0 6 0\n 7 0 8 0 9 0\n2 1 1 2 1 3 1\n 4 1 5 1 6 1\n 7 1 8 1 9 1\n";
        let p = parse_touchstone(text).unwrap();
        assert_eq!(p.n_ports(), 3);
        assert_eq!(p.matrices()[1][(2, 1)], c(8.0, 1.0));
        let four = "# Hz S RI R 50\n1 1 0 2 0 3 0 4 0\n 1 0 2 0 3 0 4 0\n 1 0 2 0 3 0 4 0\n 1 0 2 0 3 0 4 0\n";
        assert_eq!(parse_touchstone(four).unwrap().n_ports(), 4);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(parse_touchstone("# Hz Y RI R 50\n1 0 0\n"), Err(NetParamsError::UnsupportedFormat(_))));
        assert!(matches!(
            parse_touchstone("[Version] 2.0\n# Hz S RI R 50\n"),
            Err(NetParamsError::UnsupportedFormat(_))
        ));
        assert!(matches!(
            parse_touchstone("# Hz S RI R 50\n2 0 0\n1 0 0\n"),
            Err(NetParamsError::NonMonotoneFrequency { line: 3, .. })
        ));
        assert!(matches!(parse_touchstone("# Hz S RI R 50\n1 0 x\n"), Err(NetParamsError::Syntax { line: 2, .. })));
        assert!(matches!(parse_touchstone("1 0 0\n"), Err(NetParamsError::Syntax { line: 1, .. })));
        assert!(matches!(
            parse_touchstone("# Hz S RI R 50\n# Hz S RI R 50\n1 0 0\n"),
            Err(NetParamsError::Syntax { line: 2, .. })
        ));
        assert!(matches!(parse_touchstone("# Hz S RI R 50\n1 0 0 0\n"), Err(NetParamsError::Syntax { .. })));
    }

    #[test]
    fn write_parse_fixed_point() {
        let text =
            "# Hz S RI R 50\n1 0.1 -0.2 0.01 0.02 0.01 0.02 -0.3 0.4\n2 0.15 -0.25 0.03 0.02 0.03 0.02 -0.35 0.45\n";
        let p = parse_touchstone(text).unwrap();
        let w = write_touchstone(&p);
        let q = parse_touchstone(&w).unwrap();
        assert_eq!(p, q);
        assert_eq!(write_touchstone(&q), w);
    }
}
