//! Parameter-grid scans and chain-length sweeps over the probe models.

use rayon::prelude::*;

use crate::bounds::{classify_region, hcrb_d_invariant, BoundsReport, Region};
use crate::error::{Error, Result};
use crate::fisher::{evaluate_qfim, ParamPoint, Qfim};
use crate::models::{
    gaussian_qfim, GaussianConfig, IsingConfig, LzConfig, QubitProbeConfig, StateModel,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Qubit,
    Lz,
    Ising,
    Gaussian,
}

impl ModelKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ModelKind::Qubit => "qubit",
            ModelKind::Lz => "lz",
            ModelKind::Ising => "ising",
            ModelKind::Gaussian => "gaussian",
        }
    }
}

/// A model with all of its settings and the parameter point `(lambda1, lambda2)`.
///
/// For the Gaussian probe the point is `(phi, r)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelSetup {
    pub kind: ModelKind,
    pub alpha: f64,
    pub beta: f64,
    pub lambda0: f64,
    pub length: usize,
    pub alpha_re: f64,
    pub alpha_im: f64,
    pub point: ParamPoint,
}

impl ModelSetup {
    pub fn new(kind: ModelKind) -> Self {
        let (lambda1, lambda2) = match kind {
            ModelKind::Gaussian => (0.0, 1.0),
            _ => (0.5, 0.5),
        };
        Self {
            kind,
            alpha: std::f64::consts::FRAC_PI_4,
            beta: 3.0 * std::f64::consts::FRAC_PI_8,
            lambda0: 2.0,
            length: 6,
            alpha_re: 1.0,
            alpha_im: 0.0,
            point: ParamPoint::new(lambda1, lambda2),
        }
    }

    pub fn with_point(mut self, point: ParamPoint) -> Self {
        self.point = point;
        self
    }

    /// Names accepted by [`ModelSetup::set`] for this model.
    pub fn axis_names(&self) -> &'static [&'static str] {
        match self.kind {
            ModelKind::Qubit => &["alpha", "beta", "lambda1", "lambda2"],
            ModelKind::Lz => &["lambda0", "lambda1", "lambda2"],
            ModelKind::Ising => &["lambda1", "lambda2"],
            ModelKind::Gaussian => &["alpha_re", "alpha_im", "phi", "r", "lambda1", "lambda2"],
        }
    }

    /// Overrides one continuous setting by name.
    pub fn set(&mut self, name: &str, value: f64) -> Result<()> {
        if !self.axis_names().contains(&name) {
            return Err(Error::Config(format!(
                "model {} has no scannable quantity {name:?} (expected one of {:?})",
                self.kind.as_str(),
                self.axis_names()
            )));
        }
        match name {
            "alpha" => self.alpha = value,
            "beta" => self.beta = value,
            "lambda0" => self.lambda0 = value,
            "alpha_re" => self.alpha_re = value,
            "alpha_im" => self.alpha_im = value,
            "lambda1" | "phi" => self.point.lambda1 = value,
            _ => self.point.lambda2 = value,
        }
        Ok(())
    }

    /// The state model, or `None` for the Gaussian probe (analytic QFIM only).
    pub fn state_model(&self) -> Result<Option<Box<dyn StateModel>>> {
        Ok(match self.kind {
            ModelKind::Qubit => Some(Box::new(QubitProbeConfig::new(self.alpha, self.beta)?)),
            ModelKind::Lz => Some(Box::new(LzConfig::new(self.lambda0)?)),
            ModelKind::Ising => Some(Box::new(IsingConfig::new(self.length)?)),
            ModelKind::Gaussian => None,
        })
    }

    pub fn evaluate(&self) -> Result<PointEvaluation> {
        if !self.point.is_finite() {
            return Err(Error::InvalidParameter("non-finite parameter point".into()));
        }
        let (qfim, delta, degenerate) = match self.state_model()? {
            Some(model) => {
                let e = evaluate_qfim(|p| model.sample(p), self.point)?;
                (e.qfim, Some(e.delta), e.degenerate)
            }
            None => {
                let cfg = GaussianConfig::new(self.alpha_re, self.alpha_im)?;
                (gaussian_qfim(&cfg, self.point.lambda2), None, false)
            }
        };
        Ok(PointEvaluation {
            qfim,
            delta,
            degenerate,
            report: classify_region(&qfim),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointEvaluation {
    pub qfim: Qfim,
    /// Uhlmann curvature; `None` when the model has no state representation.
    pub delta: Option<f64>,
    pub degenerate: bool,
    pub report: BoundsReport,
}

impl PointEvaluation {
    /// D-invariant Holevo bound, when the curvature is known and the QFIM invertible.
    pub fn hcrb(&self) -> Option<f64> {
        self.delta
            .and_then(|d| hcrb_d_invariant(&self.qfim, d).ok())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanAxis {
    pub name: String,
    pub lo: f64,
    pub hi: f64,
    pub steps: usize,
    /// Whether `hi` itself is sampled; periodic angles leave it out.
    pub endpoint: bool,
}

impl ScanAxis {
    pub fn new(name: &str, lo: f64, hi: f64, steps: usize) -> Self {
        Self {
            name: name.to_string(),
            lo,
            hi,
            steps,
            endpoint: true,
        }
    }

    pub fn open(mut self) -> Self {
        self.endpoint = false;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.steps < 2 {
            return Err(Error::Config(format!(
                "axis {} needs steps >= 2",
                self.name
            )));
        }
        if !(self.lo < self.hi) || !self.lo.is_finite() || !self.hi.is_finite() {
            return Err(Error::Config(format!("axis {} needs lo < hi", self.name)));
        }
        Ok(())
    }

    pub fn values(&self) -> Vec<f64> {
        let intervals = if self.endpoint {
            self.steps - 1
        } else {
            self.steps
        };
        (0..self.steps)
            .map(|k| self.lo + (self.hi - self.lo) * k as f64 / intervals as f64)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanSpec {
    pub setup: ModelSetup,
    pub axis1: ScanAxis,
    pub axis2: ScanAxis,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanRow {
    pub axis1: f64,
    pub axis2: f64,
    pub eval: PointEvaluation,
}

fn thread_pool(threads: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))
}

/// Evaluates every grid point, axis 1 outer and axis 2 inner.
pub fn run_scan(spec: &ScanSpec, threads: usize) -> Result<Vec<ScanRow>> {
    spec.axis1.validate()?;
    spec.axis2.validate()?;
    if spec.axis1.name == spec.axis2.name {
        return Err(Error::Config("scan axes must differ".into()));
    }
    // Surfaces unknown axis names and budget violations before any work.
    let mut probe = spec.setup;
    probe.set(&spec.axis1.name, spec.axis1.lo)?;
    probe.set(&spec.axis2.name, spec.axis2.lo)?;
    probe.state_model()?;

    let grid: Vec<(f64, f64)> = spec
        .axis1
        .values()
        .into_iter()
        .flat_map(|a| spec.axis2.values().into_iter().map(move |b| (a, b)))
        .collect();
    thread_pool(threads)?.install(|| {
        grid.par_iter()
            .map(|&(a, b)| {
                let mut setup = spec.setup;
                setup.set(&spec.axis1.name, a)?;
                setup.set(&spec.axis2.name, b)?;
                Ok(ScanRow {
                    axis1: a,
                    axis2: b,
                    eval: setup.evaluate()?,
                })
            })
            .collect()
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingRow {
    pub length: usize,
    pub mu: f64,
    pub mu_tilde: f64,
    pub gamma_opt: f64,
    pub region: Region,
}

/// Bounds of the Ising probe at one point for each chain length.
pub fn run_scaling(
    lengths: &[usize],
    point: ParamPoint,
    threads: usize,
) -> Result<Vec<ScalingRow>> {
    if lengths.is_empty() {
        return Err(Error::Config("scaling needs at least one length".into()));
    }
    for &l in lengths {
        IsingConfig::new(l)?;
    }
    thread_pool(threads)?.install(|| {
        lengths
            .par_iter()
            .map(|&length| {
                let mut setup = ModelSetup::new(ModelKind::Ising).with_point(point);
                setup.length = length;
                let r = setup.evaluate()?.report;
                Ok(ScalingRow {
                    length,
                    mu: r.mu,
                    mu_tilde: r.mu_tilde,
                    gamma_opt: r.gamma_opt,
                    region: r.region,
                })
            })
            .collect()
    })
}

/// Least-squares slope of `ln y` against `ln x` over the finite, positive pairs.
pub fn log_log_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = xs
        .iter()
        .zip(ys)
        .filter(|(x, y)| **x > 0.0 && **y > 0.0 && x.is_finite() && y.is_finite())
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    if pts.len() < 2 {
        return f64::NAN;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = pts.iter().map(|(x, _)| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// `(slope of mu, slope of mu_tilde)` against chain length.
pub fn scaling_slopes(rows: &[ScalingRow]) -> (f64, f64) {
    let ls: Vec<f64> = rows.iter().map(|r| r.length as f64).collect();
    let mu: Vec<f64> = rows.iter().map(|r| r.mu).collect();
    let mt: Vec<f64> = rows.iter().map(|r| r.mu_tilde).collect();
    (log_log_slope(&ls, &mu), log_log_slope(&ls, &mt))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn axis_values() {
        assert_eq!(
            ScanAxis::new("a", 0.0, 1.0, 3).values(),
            vec![0.0, 0.5, 1.0]
        );
        assert_eq!(
            ScanAxis::new("a", 0.0, 1.0, 4).open().values(),
            vec![0.0, 0.25, 0.5, 0.75]
        );
        assert!(ScanAxis::new("a", 0.0, 1.0, 1).validate().is_err());
        assert!(ScanAxis::new("a", 1.0, 1.0, 5).validate().is_err());
    }

    #[test]
    fn unknown_axis_is_a_config_error() {
        let spec = ScanSpec {
            setup: ModelSetup::new(ModelKind::Ising),
            axis1: ScanAxis::new("alpha", 0.0, 1.0, 2),
            axis2: ScanAxis::new("lambda2", 0.0, 1.0, 2),
        };
        assert!(matches!(run_scan(&spec, 1), Err(Error::Config(_))));
    }

    #[test]
    fn chain_budget_is_checked() {
        let mut setup = ModelSetup::new(ModelKind::Ising);
        setup.length = 13;
        let spec = ScanSpec {
            setup,
            axis1: ScanAxis::new("lambda1", 0.0, 1.0, 2),
            axis2: ScanAxis::new("lambda2", 0.0, 1.0, 2),
        };
        assert!(matches!(
            run_scan(&spec, 1),
            Err(Error::DimensionBudget { length: 13 })
        ));
        assert!(run_scaling(&[4, 2], ParamPoint::new(1.0, 1.0), 1).is_err());
    }

    #[test]
    fn rows_are_row_major_and_thread_independent() {
        let spec = ScanSpec {
            setup: ModelSetup::new(ModelKind::Qubit),
            axis1: ScanAxis::new("alpha", 0.1, 3.0, 4),
            axis2: ScanAxis::new("beta", 0.0, 6.0, 5).open(),
        };
        let serial = run_scan(&spec, 1).unwrap();
        assert_eq!(serial.len(), 20);
        assert_eq!((serial[1].axis1, serial[1].axis2), (0.1, 1.2));
        assert_eq!(serial[5].axis1, spec.axis1.values()[1]);
        assert_eq!(serial, run_scan(&spec, 3).unwrap());
    }

    #[test]
    fn gaussian_point_uses_r() {
        let mut setup = ModelSetup::new(ModelKind::Gaussian);
        setup.alpha_re = 1.0;
        setup.alpha_im = 0.0;
        let e = setup.evaluate().unwrap();
        assert!(e.delta.is_none() && e.qfim.q12 == 0.0);
        assert_eq!(e.report.region, Region::III);
        setup.set("r", 0.0).unwrap();
        assert_eq!(setup.evaluate().unwrap().qfim, Qfim::new(8.0, 0.0, 8.0));
    }

    #[test]
    fn slopes_of_power_laws() {
        let xs = [4.0, 5.0, 8.0, 10.0];
        let ys: Vec<f64> = xs.iter().map(|x: &f64| 3.0 * x.powf(-1.8)).collect();
        assert!((log_log_slope(&xs, &ys) + 1.8).abs() < 1e-12);
        assert!(log_log_slope(&[1.0], &[1.0]).is_nan());
    }
}
