//! CSV emission for experiment results.

use std::fs;
use std::path::Path;

use super::SeResult;
use crate::error::{Error, Result};

pub const HEADER: &str = "sweep,sim_se,ci,analytic_se,samples";

/// `x` with 9 significant digits, shortest form (like C's `%.9g`).
pub fn format_sig9(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.8e}");
    let (mantissa, exp) = sci.split_once('e').unwrap_or((&sci, "0"));
    let exp: i32 = exp.parse().unwrap_or(0);
    let trim = |s: &str| -> String {
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s.to_string()
        }
    };
    if (-5..9).contains(&exp) {
        trim(&format!("{:.*}", (8 - exp).max(0) as usize, x))
    } else {
        format!("{}e{exp}", trim(mantissa))
    }
}

pub fn format_csv(results: &[SeResult]) -> String {
    let mut out = String::from(HEADER);
    out.push('\n');
    for r in results {
        let analytic = r.analytic_se.unwrap_or(f64::NAN);
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            format_sig9(r.sweep),
            format_sig9(r.sim_se),
            format_sig9(r.ci),
            format_sig9(analytic),
            r.samples
        ));
    }
    out
}

/// Writes `results` to `path` with LF line endings.
pub fn emit_csv(results: &[SeResult], path: &Path) -> Result<()> {
    fs::write(path, format_csv(results)).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Parses text written by [`format_csv`]. Error rows come back with
/// `error: Some("")`, since the message is not stored.
pub fn parse_csv(text: &str) -> Result<Vec<SeResult>> {
    let mut lines = text.lines();
    if lines.next() != Some(HEADER) {
        return Err(Error::Config("missing or unexpected CSV header".into()));
    }
    lines
        .filter(|l| !l.is_empty())
        .map(|line| {
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 5 {
                return Err(Error::Config(format!("malformed row `{line}`")));
            }
            let num = |s: &str| {
                s.parse::<f64>()
                    .map_err(|_| Error::Config(format!("bad number `{s}`")))
            };
            let samples: usize = f[4]
                .parse()
                .map_err(|_| Error::Config(format!("bad count `{}`", f[4])))?;
            let analytic = num(f[3])?;
            Ok(SeResult {
                sweep: num(f[0])?,
                sim_se: num(f[1])?,
                ci: num(f[2])?,
                analytic_se: (!analytic.is_nan()).then_some(analytic),
                samples,
                error: (samples == 0).then(String::new),
            })
        })
        .collect()
}
