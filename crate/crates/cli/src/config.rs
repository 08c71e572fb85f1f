//! Experiment configuration: `key = value` files overridden by flags.

use bisobolev::linalg2::NormKind;
use bisobolev::maps::parse_number;
use bisobolev::mesh::{GradingParams, Polygon};
use bisobolev::pipeline::{ApproxParams, ClassifyParams};
use bisobolev::quadrature::QuadratureParams;
use bisobolev::verify::SuiteParams;
use serde::Serialize;
use std::path::PathBuf;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub map: String,
    pub domain: Option<String>,
    pub r: f64,
    pub r_schedule: Vec<f64>,
    pub eta: Option<f64>,
    pub norm: NormKind,
    pub tau_j: f64,
    pub eps_res: f64,
    pub samples: usize,
    pub eps: f64,
    pub boundary_depth: u32,
    pub max_depth: u32,
    pub quad_order: usize,
    pub quad_level: u32,
    pub quad_tol: f64,
    pub base_resolution: usize,
    pub seed: u64,
    pub injectivity_samples: usize,
    #[serde(skip)]
    pub threads: Option<usize>,
    #[serde(skip)]
    pub out_dir: Option<PathBuf>,
    #[serde(skip)]
    pub svg: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let a = ApproxParams::default();
        let s = SuiteParams::default();
        Self {
            map: "identity".into(),
            domain: None,
            r: 0.0625,
            r_schedule: s.r_list,
            eta: None,
            norm: a.norm,
            tau_j: a.classify.tau_j,
            eps_res: a.classify.eps_res,
            samples: a.classify.samples,
            eps: s.eps,
            boundary_depth: a.grading.boundary_depth,
            max_depth: a.grading.max_depth,
            quad_order: a.quad.order,
            quad_level: a.quad.level,
            quad_tol: a.quad.tol,
            base_resolution: a.quad.base_resolution,
            seed: a.seed,
            injectivity_samples: a.injectivity_samples,
            threads: None,
            out_dir: None,
            svg: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("bad value for `{key}`: {message}")]
    BadValue { key: String, message: String },
}

fn bad(key: &str, message: impl ToString) -> ConfigError {
    ConfigError::BadValue { key: key.into(), message: message.to_string() }
}

fn number(key: &str, v: &str) -> Result<f64, ConfigError> {
    parse_number(v).map_err(|e| bad(key, e))
}

fn integer<T: std::str::FromStr>(key: &str, v: &str) -> Result<T, ConfigError>
where
    T::Err: ToString,
{
    v.parse::<T>().map_err(|e| bad(key, e))
}

/// Radii separated by commas, spaces or semicolons; rationals allowed.
pub fn parse_schedule(key: &str, v: &str) -> Result<Vec<f64>, ConfigError> {
    let rs = v
        .split(|c: char| c == ',' || c == ';' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(|t| number(key, t))
        .collect::<Result<Vec<_>, _>>()?;
    if rs.is_empty() {
        return Err(bad(key, "empty schedule"));
    }
    Ok(rs)
}

impl ExperimentConfig {
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let v = value.trim();
        let k = key.trim().replace('-', "_");
        match k.as_str() {
            "map" => self.map = v.into(),
            "domain" => self.domain = Some(v.into()),
            "r" => self.r = number(&k, v)?,
            "r_schedule" => self.r_schedule = parse_schedule(&k, v)?,
            "eta" => self.eta = Some(number(&k, v)?),
            "norm" => self.norm = v.parse().map_err(|e: String| bad(&k, e))?,
            "tau_j" => self.tau_j = number(&k, v)?,
            "eps_res" => self.eps_res = number(&k, v)?,
            "samples" => self.samples = integer(&k, v)?,
            "eps" => self.eps = number(&k, v)?,
            "boundary_depth" => self.boundary_depth = integer(&k, v)?,
            "max_depth" => self.max_depth = integer(&k, v)?,
            "quad_order" => self.quad_order = integer(&k, v)?,
            "quad_level" => self.quad_level = integer(&k, v)?,
            "quad_tol" => self.quad_tol = number(&k, v)?,
            "base_resolution" => self.base_resolution = integer(&k, v)?,
            "seed" => self.seed = integer(&k, v)?,
            "injectivity_samples" => self.injectivity_samples = integer(&k, v)?,
            "threads" => self.threads = Some(integer(&k, v)?),
            "out_dir" => self.out_dir = Some(v.into()),
            "svg" => self.svg = Some(v.into()),
            _ => return Err(ConfigError::UnknownKey(key.trim().into())),
        }
        Ok(())
    }

    /// Applies `key = value` lines; `#` starts a comment.
    pub fn apply_text(&mut self, text: &str) -> Result<(), ConfigError> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| ConfigError::Syntax { line: i + 1, message: format!("expected `key = value`, got `{line}`") })?;
            self.set(k, v).map_err(|e| match e {
                ConfigError::Syntax { .. } => e,
                other => ConfigError::Syntax { line: i + 1, message: other.to_string() },
            })?;
        }
        Ok(())
    }

    pub fn domain_polygon(&self) -> Result<Option<Polygon>, bisobolev::mesh::MeshError> {
        self.domain.as_deref().map(str::parse).transpose()
    }

    pub fn approx_params(&self) -> ApproxParams {
        ApproxParams {
            classify: ClassifyParams { tau_j: self.tau_j, eps_res: self.eps_res, samples: self.samples },
            grading: GradingParams { boundary_depth: self.boundary_depth, max_depth: self.max_depth },
            quad: QuadratureParams {
                order: self.quad_order,
                level: self.quad_level,
                tol: self.quad_tol,
                base_resolution: self.base_resolution,
            },
            norm: self.norm,
            seed: self.seed,
            injectivity_samples: self.injectivity_samples,
        }
    }

    pub fn suite_params(&self) -> SuiteParams {
        SuiteParams { r_list: self.r_schedule.clone(), eps: self.eps, approx: self.approx_params() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_then_override() {
        let mut c = ExperimentConfig::default();
        c.apply_text("# sine run\nmap = sine_warp:a=0.1\nr-schedule = 1/8, 1/16\nnorm = operator\n").unwrap();
        assert_eq!(c.map, "sine_warp:a=0.1");
        assert_eq!(c.r_schedule, vec![0.125, 0.0625]);
        assert_eq!(c.norm, NormKind::Operator);
        c.set("norm", "frobenius").unwrap();
        assert_eq!(c.norm, NormKind::Frobenius);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let mut c = ExperimentConfig::default();
        assert_eq!(
            c.apply_text("map = identity\nnonsense\n"),
            Err(ConfigError::Syntax { line: 2, message: "expected `key = value`, got `nonsense`".into() })
        );
        assert!(matches!(c.apply_text("colour = red"), Err(ConfigError::Syntax { line: 1, .. })));
        assert!(c.set("r", "abc").is_err());
    }

    #[test]
    fn params_round_trip_defaults() {
        let c = ExperimentConfig::default();
        assert_eq!(c.approx_params(), ApproxParams::default());
        assert_eq!(c.suite_params(), SuiteParams::default());
    }
}
