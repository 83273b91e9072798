use std::str::FromStr;

use volfied_core::sim::SimConfig;

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Param {
    K,
    M,
    NumAds,
    Epsilon,
    DMax,
    Cache,
    Detection,
}

impl Param {
    pub fn name(self) -> &'static str {
        match self {
            Param::K => "k",
            Param::M => "m",
            Param::NumAds => "num_ads",
            Param::Epsilon => "epsilon",
            Param::DMax => "d_max",
            Param::Cache => "cache",
            Param::Detection => "detection",
        }
    }

    /// Whether the value changes the generated scenario, not only the run.
    pub fn affects_scenario(self) -> bool {
        self == Param::NumAds
    }
}

impl FromStr for Param {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.trim() {
            "k" => Param::K,
            "m" => Param::M,
            "num_ads" | "num-ads" => Param::NumAds,
            "epsilon" => Param::Epsilon,
            "d_max" | "d-max" => Param::DMax,
            "cache" => Param::Cache,
            "detection" => Param::Detection,
            other => {
                return Err(CliError::Usage(format!(
                    "unknown sweep parameter `{other}` (expected k, m, num_ads, epsilon, d_max, cache or detection)"
                )))
            }
        })
    }
}

/// One value of a sweep, kept with its spelling for file names.
#[derive(Debug, Clone)]
pub struct Point {
    pub param: Param,
    pub token: String,
    value: f64,
}

impl Point {
    pub fn apply(&self, config: &mut SimConfig) {
        let v = self.value;
        match self.param {
            Param::K => config.k = v as usize,
            Param::M => config.m = v as usize,
            Param::NumAds => config.num_ads = v as usize,
            Param::Cache => config.cache_capacity = v as usize,
            Param::Epsilon => config.epsilon = v,
            Param::DMax => config.d_max = v,
            Param::Detection => config.detection_accuracy = v,
        }
    }

    /// File-name suffix, e.g. `_k4` or `_detection0.3`.
    pub fn suffix(&self) -> String {
        format!("_{}{}", self.param.name(), self.token)
    }
}

/// Parses `PARAM=V1,V2,...`.
pub fn parse(text: &str) -> Result<Vec<Point>> {
    let (name, values) =
        text.split_once('=').ok_or_else(|| CliError::Usage(format!("sweep `{text}` is not of the form PARAM=V1,V2,...")))?;
    let param: Param = name.parse()?;
    let integral = matches!(param, Param::K | Param::M | Param::NumAds | Param::Cache);
    let mut points = Vec::new();
    for token in values.split(',').map(str::trim) {
        let bad = || CliError::Usage(format!("sweep value `{token}` is not valid for {}", param.name()));
        let value = if integral {
            token.parse::<usize>().map_err(|_| bad())? as f64
        } else {
            let v = token.parse::<f64>().map_err(|_| bad())?;
            if !v.is_finite() {
                return Err(bad());
            }
            v
        };
        if points.iter().any(|p: &Point| p.token == token) {
            return Err(CliError::Usage(format!("sweep value `{token}` is repeated")));
        }
        points.push(Point { param, token: token.to_string(), value });
    }
    if points.is_empty() || points.iter().any(|p| p.token.is_empty()) {
        return Err(CliError::Usage(format!("sweep `{text}` has an empty value")));
    }
    Ok(points)
}
