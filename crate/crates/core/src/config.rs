//! TOML run configuration.
//!
//! ```toml
//! [model]
//! kind = "qubit"          # qubit | lz | ising | gaussian
//! alpha = "pi/4"
//! beta = "3*pi/8"
//! lambda1 = 0.5
//! lambda2 = 0.5
//!
//! [scan]
//! axis1 = { name = "alpha", lo = 0, hi = "pi", steps = 101 }
//! axis2 = { name = "beta", lo = 0, hi = "2*pi", steps = 101, endpoint = false }
//!
//! [scaling]
//! lengths = [4, 5, 6, 7, 8, 9, 10]
//!
//! [bayes]
//! total_shots = 10000
//! gamma = "auto"
//! seed = 1
//! prior_width1 = "pi/5"
//! prior_width2 = "pi/5"
//! order = "first1_then2"
//! ```
//!
//! Real-valued fields take a number or a product/quotient of numbers, `pi`
//! and `sqrt(x)`, e.g. `"-3*pi/8"` or `"2*sqrt(2)"`.

use serde::Deserialize;

use crate::bayes::{BayesConfig, MeasurementOrder};
use crate::bounds::optimal_se;
use crate::error::{Error, Result};
use crate::fisher::{evaluate_qfim, ParamPoint};
use crate::scan::{ModelKind, ModelSetup, ScanAxis, ScanSpec};

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum Real {
    Number(f64),
    Expr(String),
}

impl Real {
    pub fn value(&self) -> Result<f64> {
        match self {
            Real::Number(x) => Ok(*x),
            Real::Expr(s) => parse_real(s),
        }
    }
}

fn parse_factor(token: &str) -> Result<f64> {
    let t = token.trim();
    if t == "pi" {
        return Ok(std::f64::consts::PI);
    }
    if let Some(inner) = t.strip_prefix("sqrt(").and_then(|r| r.strip_suffix(')')) {
        return Ok(parse_factor(inner)?.sqrt());
    }
    t.parse::<f64>()
        .map_err(|_| Error::Config(format!("cannot read {token:?} as a number")))
}

fn parse_product(term: &str) -> Result<f64> {
    term.split('*')
        .map(parse_factor)
        .try_fold(1.0, |acc, f| Ok(acc * f?))
}

/// Evaluates `[-]a*b*.../c/...` where each factor is a number, `pi` or `sqrt(x)`.
pub fn parse_real(expr: &str) -> Result<f64> {
    let s = expr.trim();
    let (sign, body) = match s.strip_prefix('-') {
        Some(rest) => (-1.0, rest),
        None => (1.0, s),
    };
    let mut parts = body.split('/');
    let mut value = parse_product(parts.next().unwrap_or(""))?;
    for divisor in parts {
        value /= parse_product(divisor)?;
    }
    if !value.is_finite() {
        return Err(Error::Config(format!("{expr:?} is not a finite number")));
    }
    Ok(sign * value)
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub kind: ModelKind,
    pub alpha: Option<Real>,
    pub beta: Option<Real>,
    pub lambda0: Option<Real>,
    pub length: Option<usize>,
    pub alpha_re: Option<Real>,
    pub alpha_im: Option<Real>,
    #[serde(alias = "phi")]
    pub lambda1: Option<Real>,
    #[serde(alias = "r")]
    pub lambda2: Option<Real>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisSection {
    pub name: String,
    pub lo: Real,
    pub hi: Real,
    #[serde(default = "default_steps")]
    pub steps: usize,
    pub endpoint: Option<bool>,
}

fn default_steps() -> usize {
    101
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanSection {
    pub axis1: AxisSection,
    pub axis2: AxisSection,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScalingSection {
    pub lengths: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BayesSection {
    pub total_shots: u64,
    /// A fraction in (0, 1), or `"auto"` for the optimal budget of the chosen
    /// order at the true point.
    pub gamma: Real,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_grid_points")]
    pub grid_points: usize,
    pub prior_width1: Real,
    pub prior_width2: Real,
    #[serde(default = "default_order")]
    pub order: MeasurementOrder,
    #[serde(default = "default_batch")]
    pub batch_size: u64,
}

fn default_grid_points() -> usize {
    BayesConfig::DEFAULT_GRID_POINTS
}

fn default_order() -> MeasurementOrder {
    MeasurementOrder::First1Then2
}

fn default_batch() -> u64 {
    1
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub model: ModelSection,
    pub scan: Option<ScanSection>,
    pub scaling: Option<ScalingSection>,
    pub bayes: Option<BayesSection>,
}

fn opt(value: &Option<Real>, fallback: f64) -> Result<f64> {
    value.as_ref().map_or(Ok(fallback), Real::value)
}

impl Config {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))
    }

    pub fn setup(&self) -> Result<ModelSetup> {
        let m = &self.model;
        let base = ModelSetup::new(m.kind);
        Ok(ModelSetup {
            kind: m.kind,
            alpha: opt(&m.alpha, base.alpha)?,
            beta: opt(&m.beta, base.beta)?,
            lambda0: opt(&m.lambda0, base.lambda0)?,
            length: m.length.unwrap_or(base.length),
            alpha_re: opt(&m.alpha_re, base.alpha_re)?,
            alpha_im: opt(&m.alpha_im, base.alpha_im)?,
            point: ParamPoint::new(
                opt(&m.lambda1, base.point.lambda1)?,
                opt(&m.lambda2, base.point.lambda2)?,
            ),
        })
    }

    pub fn scan_spec(&self) -> Result<ScanSpec> {
        let scan = self
            .scan
            .as_ref()
            .ok_or_else(|| Error::Config("missing [scan] section".into()))?;
        let axis = |a: &AxisSection| -> Result<ScanAxis> {
            let axis = ScanAxis {
                name: a.name.clone(),
                lo: a.lo.value()?,
                hi: a.hi.value()?,
                steps: a.steps,
                endpoint: a.endpoint.unwrap_or(a.name != "beta"),
            };
            axis.validate()?;
            Ok(axis)
        };
        Ok(ScanSpec {
            setup: self.setup()?,
            axis1: axis(&scan.axis1)?,
            axis2: axis(&scan.axis2)?,
        })
    }

    /// Chain lengths and the point at which they are evaluated.
    pub fn scaling(&self) -> Result<(Vec<usize>, ParamPoint)> {
        if self.model.kind != ModelKind::Ising {
            return Err(Error::Config("scaling needs model kind \"ising\"".into()));
        }
        let section = self
            .scaling
            .as_ref()
            .ok_or_else(|| Error::Config("missing [scaling] section".into()))?;
        Ok((section.lengths.clone(), self.setup()?.point))
    }

    /// The Bayesian run with `gamma = "auto"` resolved; the true point is the model point.
    pub fn bayes_config(&self) -> Result<(ModelSetup, BayesConfig)> {
        let b = self
            .bayes
            .as_ref()
            .ok_or_else(|| Error::Config("missing [bayes] section".into()))?;
        let setup = self.setup()?;
        let model = setup
            .state_model()?
            .ok_or_else(|| Error::Config("the gaussian probe has no measurement model".into()))?;
        let gamma = match &b.gamma {
            Real::Expr(s) if s.trim() == "auto" => {
                let q = evaluate_qfim(|p| model.sample(p), setup.point)?.qfim;
                let se = optimal_se(&q)?;
                match b.order {
                    MeasurementOrder::First1Then2 => se.gamma_prime,
                    MeasurementOrder::First2Then1 => se.gamma_dblprime,
                }
            }
            other => other.value()?,
        };
        let cfg = BayesConfig {
            total_shots: b.total_shots,
            gamma,
            seed: b.seed,
            grid_points: b.grid_points,
            true_point: setup.point,
            prior_width1: b.prior_width1.value()?,
            prior_width2: b.prior_width2.value()?,
            order: b.order,
            batch_size: b.batch_size,
        };
        cfg.validate()?;
        Ok((setup, cfg))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn real_expressions() {
        assert_eq!(parse_real("pi").unwrap(), PI);
        assert_eq!(parse_real("3*pi/8").unwrap(), 3.0 * PI / 8.0);
        assert_eq!(parse_real("-pi/2").unwrap(), -PI / 2.0);
        assert_eq!(parse_real("2*sqrt(2)").unwrap(), 2.0 * 2f64.sqrt());
        assert_eq!(parse_real(" 0.25 ").unwrap(), 0.25);
        assert!(parse_real("pie").is_err());
        assert!(parse_real("1/0").is_err());
    }

    #[test]
    fn full_config() {
        let text = r#"
            [model]
            kind = "qubit"
            alpha = "pi/4"
            lambda1 = 1

            [scan]
            axis1 = { name = "alpha", lo = 0, hi = "pi", steps = 3 }
            axis2 = { name = "beta", lo = 0, hi = "2*pi", steps = 4 }

            [bayes]
            total_shots = 100
            gamma = "auto"
            prior_width1 = "pi/5"
            prior_width2 = 0.5
        "#;
        let cfg = Config::parse(text).unwrap();
        let setup = cfg.setup().unwrap();
        assert_eq!(setup.alpha, PI / 4.0);
        assert_eq!(setup.beta, 3.0 * PI / 8.0);
        assert_eq!(setup.point, ParamPoint::new(1.0, 0.5));
        let spec = cfg.scan_spec().unwrap();
        assert!(spec.axis1.endpoint && !spec.axis2.endpoint);
        let (_, bayes) = cfg.bayes_config().unwrap();
        assert!(bayes.gamma > 0.0 && bayes.gamma < 1.0);
        assert_eq!(bayes.grid_points, 1000);
        assert_eq!(bayes.batch_size, 1);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(Config::parse("[model]\nkind = \"qutrit\"").is_err());
        assert!(Config::parse("[model]\nkind = \"lz\"\nfoo = 1").is_err());
        let cfg = Config::parse("[model]\nkind = \"gaussian\"\n[bayes]\ntotal_shots = 10\ngamma = 0.5\nprior_width1 = 1\nprior_width2 = 1").unwrap();
        assert!(cfg.bayes_config().is_err());
        let cfg = Config::parse("[model]\nkind = \"qubit\"\n[scaling]\nlengths = [4]").unwrap();
        assert!(cfg.scaling().is_err());
        assert!(cfg.scan_spec().is_err());
    }
}
