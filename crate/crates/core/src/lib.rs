//! Quantum Fisher information, joint versus stepwise estimation bounds, probe
//! models and a two-phase Bayesian estimator for two-parameter pure-state
//! problems.

pub mod bayes;
pub mod bounds;
pub mod config;
pub mod error;
pub mod fisher;
pub mod models;
pub mod quantum;
pub mod report;
pub mod scan;

pub use bayes::{BayesAbort, BayesConfig, BayesTrace, MeasurementOrder, PosteriorGrid, TraceRow};
pub use bounds::{BoundsReport, OptimalSe, Region, Strategy};
pub use error::{Error, Result};
pub use fisher::{ParamPoint, Qfim, QfimEvaluation, StateSample};
pub use models::{
    GaussianConfig, IsingConfig, LzConfig, Measurement, QubitProbeConfig, StateModel,
};
pub use quantum::{HermitianOperator, Povm, PureState, C64};
pub use scan::{ModelKind, ModelSetup, PointEvaluation, ScalingRow, ScanAxis, ScanRow, ScanSpec};
