pub mod bench;
pub mod free_bvp;
pub mod linear;
pub mod mizohata;
pub mod picard;
pub mod verify;

use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use serde::Serialize;

use schro_core::estimates::{EstimateReport, Verdict};
use schro_core::scenario::ScenarioConfig;

use crate::output::OutDir;
use crate::{OutArgs, Status};

pub const DEFAULT_OUT_DIR: &str = "out";

#[derive(Clone, Debug, Serialize)]
pub struct Versions {
    pub schro: &'static str,
}

impl Versions {
    pub fn current() -> Self {
        Self {
            schro: env!("CARGO_PKG_VERSION"),
        }
    }
}

pub fn out_dir(args: &OutArgs, scenario: Option<&Path>) -> Result<OutDir> {
    let root = args
        .out_dir
        .clone()
        .or_else(|| scenario.map(Path::to_path_buf))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR));
    OutDir::create(&root)
}

/// A preset name or a JSON scenario path, with the directory that relative
/// data paths resolve against.
pub fn load_scenario(spec: &str) -> Result<(ScenarioConfig, Option<PathBuf>)> {
    ScenarioConfig::load(spec).with_context(|| format!("scenario {spec}"))
}

/// Comma-separated numbers; `a/b` fractions are accepted.
pub fn parse_numbers(text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(parse_number)
        .collect()
}

pub fn parse_number(s: &str) -> Result<f64> {
    let v = match s.split_once('/') {
        Some((a, b)) => {
            let (a, b): (f64, f64) = (a.trim().parse()?, b.trim().parse()?);
            if b == 0.0 {
                bail!("zero denominator in {s:?}");
            }
            a / b
        }
        None => s.parse::<f64>().map_err(|e| anyhow!("bad number {s:?}: {e}"))?,
    };
    Ok(v)
}

/// `a,b;c,d` pairs.
pub fn parse_pairs<T: std::str::FromStr>(text: &str) -> Result<Vec<(T, T)>>
where
    T::Err: std::fmt::Display,
{
    text.split(';')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|p| {
            let (a, b) = p
                .split_once(',')
                .ok_or_else(|| anyhow!("expected a pair like 0,1, got {p:?}"))?;
            let a = a.trim().parse::<T>().map_err(|e| anyhow!("bad entry {a:?}: {e}"))?;
            let b = b.trim().parse::<T>().map_err(|e| anyhow!("bad entry {b:?}: {e}"))?;
            Ok((a, b))
        })
        .collect()
}

pub fn status_of(reports: &[EstimateReport]) -> Status {
    if reports.iter().any(|r| r.verdict == Verdict::Fail) {
        Status::EstimateFailure
    } else {
        Status::Pass
    }
}

pub fn write_estimates(out: &OutDir, reports: &[EstimateReport]) -> Result<()> {
    out.write_json("estimates.json", reports)?;
    let mut text = String::from("name,lhs,rhs,ratio,slack,verdict\n");
    for r in reports {
        let ratio = r.ratio.map_or(String::new(), |v| format!("{v:.16e}"));
        let verdict = match r.verdict {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::NotApplicable => "not_applicable",
        };
        text.push_str(&format!(
            "{},{:.16e},{:.16e},{ratio},{},{verdict}\n",
            r.name, r.lhs, r.rhs, r.slack
        ));
    }
    out.write_bytes("estimates.csv", text.as_bytes())?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn number_lists() {
        assert_eq!(parse_numbers("1, 2.5,4/2").unwrap(), vec![1.0, 2.5, 2.0]);
        assert!((parse_numbers("4/3").unwrap()[0] - 4.0 / 3.0).abs() < 1e-15);
        assert!(parse_numbers("1/0").is_err());
        assert!(parse_numbers("x").is_err());
        assert_eq!(parse_pairs::<u32>("0,1;1,1").unwrap(), vec![(0, 1), (1, 1)]);
        assert!(parse_pairs::<u32>("0;1").is_err());
    }

    #[test]
    fn failing_report_sets_status() {
        let ok = EstimateReport::judged("a", 1.0, 2.0, 0.05, Default::default());
        let bad = EstimateReport::judged("b", 3.0, 2.0, 0.05, Default::default());
        assert_eq!(status_of(std::slice::from_ref(&ok)), Status::Pass);
        assert_eq!(status_of(&[ok, bad]), Status::EstimateFailure);
        assert_eq!(status_of(&[]), Status::Pass);
    }
}
