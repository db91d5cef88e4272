//! State derivatives, the pure-state QFIM, the Uhlmann curvature scalar and
//! the classical Fisher information of a fixed measurement.
//!
//! Derivatives are central differences with one Richardson step. Every
//! stencil state is phase-aligned to the center state first so that the
//! eigensolver's phase convention cannot leak into the difference quotient.

use crate::error::{Error, Result};
use crate::quantum::{phase_align, CVector, PureState, C64, NEGATIVE_PROB_TOL};

/// Default relative differentiation step: `h_i = DEFAULT_STEP * max(1, |lambda_i|)`.
pub const DEFAULT_STEP: f64 = 1e-5;
/// Relative gap below which a ground state counts as degenerate.
pub const DEGENERACY_TOL: f64 = 1e-8;
/// Outcomes with center probability below this do not contribute to the FIM.
pub const MIN_OUTCOME_PROB: f64 = 1e-12;
const DIAGONAL_CLAMP: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ParamPoint {
    pub lambda1: f64,
    pub lambda2: f64,
}

impl ParamPoint {
    pub fn new(lambda1: f64, lambda2: f64) -> Self {
        Self { lambda1, lambda2 }
    }

    pub fn is_finite(&self) -> bool {
        self.lambda1.is_finite() && self.lambda2.is_finite()
    }

    pub fn get(&self, index: usize) -> f64 {
        match index {
            0 => self.lambda1,
            _ => self.lambda2,
        }
    }

    /// Moves coordinate `index` (0 or 1) by `delta`.
    pub fn shifted(&self, index: usize, delta: f64) -> Self {
        let mut p = *self;
        match index {
            0 => p.lambda1 += delta,
            _ => p.lambda2 += delta,
        }
        p
    }
}

/// A model state at one parameter point, with the eigensolver's degeneracy verdict.
#[derive(Debug, Clone, PartialEq)]
pub struct StateSample {
    pub state: PureState,
    pub degenerate: bool,
}

impl StateSample {
    pub fn regular(state: PureState) -> Self {
        Self {
            state,
            degenerate: false,
        }
    }
}

/// The 2x2 quantum Fisher information matrix `[[q11, q12], [q12, q22]]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Qfim {
    pub q11: f64,
    pub q12: f64,
    pub q22: f64,
}

impl Qfim {
    pub fn new(q11: f64, q12: f64, q22: f64) -> Self {
        Self { q11, q12, q22 }
    }

    pub fn diagonal(q11: f64, q22: f64) -> Self {
        Self::new(q11, 0.0, q22)
    }

    pub fn det(&self) -> f64 {
        self.q11 * self.q22 - self.q12 * self.q12
    }

    pub fn trace(&self) -> f64 {
        self.q11 + self.q22
    }

    pub fn eigenvalues(&self) -> (f64, f64) {
        let mean = 0.5 * (self.q11 + self.q22);
        let half_diff = 0.5 * (self.q11 - self.q22);
        let radius = half_diff.hypot(self.q12);
        (mean - radius, mean + radius)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues().0
    }

    /// `lambda_max / lambda_min`; infinite when the smaller eigenvalue is not positive.
    pub fn condition_number(&self) -> f64 {
        let (lo, hi) = self.eigenvalues();
        if lo > 0.0 {
            hi / lo
        } else {
            f64::INFINITY
        }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self::new(self.q11 * factor, self.q12 * factor, self.q22 * factor)
    }

    /// Exchanges the roles of the two parameters.
    pub fn swapped(&self) -> Self {
        Self::new(self.q22, self.q12, self.q11)
    }

    pub fn is_finite(&self) -> bool {
        self.q11.is_finite() && self.q12.is_finite() && self.q22.is_finite()
    }

    /// `Q - other` is positive semidefinite down to `-tol` on its smallest eigenvalue.
    pub fn dominates(&self, other: &Qfim, tol: f64) -> bool {
        Qfim::new(
            self.q11 - other.q11,
            self.q12 - other.q12,
            self.q22 - other.q22,
        )
        .min_eigenvalue()
            >= -tol
    }
}

/// `psi(point)` and its two partial derivatives.
#[derive(Debug, Clone, PartialEq)]
pub struct DerivativeBundle {
    pub psi: PureState,
    pub dpsi1: CVector,
    pub dpsi2: CVector,
    pub degenerate_flag: bool,
    /// Base step `h` of the finite-difference stencil for each direction.
    pub step_used: [f64; 2],
}

/// Finite-difference scheme used by [`state_derivatives_with`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DifferenceScheme {
    /// Plain central difference with step `h`.
    Central,
    /// `(4 D_{h/2} - D_h) / 3`.
    Richardson,
}

/// Per-direction absolute steps for a relative base step.
pub fn absolute_steps(point: ParamPoint, step: f64) -> [f64; 2] {
    [
        step * point.lambda1.abs().max(1.0),
        step * point.lambda2.abs().max(1.0),
    ]
}

/// Derivatives of a state map with the default Richardson scheme.
pub fn state_derivatives<F>(model: F, point: ParamPoint, step: f64) -> Result<DerivativeBundle>
where
    F: Fn(ParamPoint) -> Result<StateSample>,
{
    state_derivatives_with(model, point, step, DifferenceScheme::Richardson)
}

pub fn state_derivatives_with<F>(
    model: F,
    point: ParamPoint,
    step: f64,
    scheme: DifferenceScheme,
) -> Result<DerivativeBundle>
where
    F: Fn(ParamPoint) -> Result<StateSample>,
{
    if !(step > 0.0) || !step.is_finite() {
        return Err(Error::InvalidParameter(format!("step {step} must be > 0")));
    }
    if !point.is_finite() {
        return Err(Error::InvalidParameter("non-finite parameter point".into()));
    }
    let eval = |p: ParamPoint| {
        model(p).map_err(|e| Error::StencilFailure {
            lambda1: p.lambda1,
            lambda2: p.lambda2,
            reason: e.to_string(),
        })
    };

    let center = eval(point)?;
    let mut degenerate = center.degenerate;
    let steps = absolute_steps(point, step);
    let dim = center.state.dim();

    let mut derivative = |index: usize| -> Result<CVector> {
        let h = steps[index];
        let scales: &[f64] = match scheme {
            DifferenceScheme::Central => &[1.0],
            DifferenceScheme::Richardson => &[1.0, 0.5],
        };
        // One central quotient per stencil scale; None when a side could not be aligned.
        let mut quotients: Vec<Option<CVector>> = Vec::with_capacity(scales.len());
        let mut one_sided: Option<CVector> = None;
        for &scale in scales {
            let s = h * scale;
            let plus = eval(point.shifted(index, s))?;
            let minus = eval(point.shifted(index, -s))?;
            degenerate |= plus.degenerate || minus.degenerate;
            let plus = phase_align(&center.state, &plus.state).ok();
            let minus = phase_align(&center.state, &minus.state).ok();
            match (plus, minus) {
                (Some(p), Some(m)) => {
                    quotients.push(Some((p.amplitudes() - m.amplitudes()).unscale(2.0 * s)));
                }
                (p, m) => {
                    degenerate = true;
                    if one_sided.is_none() {
                        one_sided = match (p, m) {
                            (Some(p), None) => {
                                Some((p.amplitudes() - center.state.amplitudes()).unscale(s))
                            }
                            (None, Some(m)) => {
                                Some((center.state.amplitudes() - m.amplitudes()).unscale(s))
                            }
                            _ => None,
                        };
                    }
                    quotients.push(None);
                }
            }
        }
        let d = match quotients.as_slice() {
            [Some(d)] => d.clone(),
            [Some(coarse), Some(fine)] => (fine.scale(4.0) - coarse).unscale(3.0),
            [Some(d), None] | [None, Some(d)] => d.clone(),
            _ => one_sided.clone().unwrap_or_else(|| CVector::zeros(dim)),
        };
        Ok(d)
    };

    let dpsi1 = derivative(0)?;
    let dpsi2 = derivative(1)?;
    Ok(DerivativeBundle {
        psi: center.state,
        dpsi1,
        dpsi2,
        degenerate_flag: degenerate,
        step_used: steps,
    })
}

/// `Q_ij = 4 Re(<d_i psi|d_j psi> - <d_i psi|psi><psi|d_j psi>)`
pub fn qfim_pure(bundle: &DerivativeBundle) -> Qfim {
    let psi = bundle.psi.amplitudes();
    let d = [&bundle.dpsi1, &bundle.dpsi2];
    let connection: [C64; 2] = [psi.dotc(d[0]), psi.dotc(d[1])];
    let entry = |i: usize, j: usize| {
        let value = d[i].dotc(d[j]) - connection[i].conj() * connection[j];
        4.0 * value.re
    };
    let clamp = |x: f64| {
        if (-DIAGONAL_CLAMP..0.0).contains(&x) {
            0.0
        } else {
            x
        }
    };
    Qfim::new(clamp(entry(0, 0)), entry(0, 1), clamp(entry(1, 1)))
}

/// Uhlmann curvature `delta = 4 Im(<d1 psi|d2 psi> - <d1 psi|psi><psi|d2 psi>)`.
///
/// The connection term makes the value independent of a parameter-dependent
/// global phase on the model states.
pub fn uhlmann_delta(bundle: &DerivativeBundle) -> f64 {
    let psi = bundle.psi.amplitudes();
    let a1 = psi.dotc(&bundle.dpsi1);
    let a2 = psi.dotc(&bundle.dpsi2);
    let value = bundle.dpsi1.dotc(&bundle.dpsi2) - a1.conj() * a2;
    4.0 * value.im
}

/// Everything the bounds need from a pure-state model at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QfimEvaluation {
    pub qfim: Qfim,
    pub delta: f64,
    pub degenerate: bool,
}

pub fn evaluate_qfim<F>(model: F, point: ParamPoint) -> Result<QfimEvaluation>
where
    F: Fn(ParamPoint) -> Result<StateSample>,
{
    let bundle = state_derivatives(model, point, DEFAULT_STEP)?;
    Ok(QfimEvaluation {
        qfim: qfim_pure(&bundle),
        delta: uhlmann_delta(&bundle),
        degenerate: bundle.degenerate_flag,
    })
}

/// `F_ij = sum_mu p_mu (d_i ln p_mu)(d_j ln p_mu)` with Richardson-extrapolated
/// central differences of the outcome probabilities.
pub fn classical_fim<F>(probabilities: F, point: ParamPoint, step: f64) -> Result<Qfim>
where
    F: Fn(ParamPoint) -> Result<Vec<f64>>,
{
    if !(step > 0.0) || !step.is_finite() {
        return Err(Error::InvalidParameter(format!("step {step} must be > 0")));
    }
    let eval = |p: ParamPoint| -> Result<Vec<f64>> {
        let probs = probabilities(p)?;
        if let Some(&bad) = probs
            .iter()
            .find(|&&x| x < -NEGATIVE_PROB_TOL || x.is_nan())
        {
            return Err(Error::NegativeProbability { value: bad });
        }
        Ok(probs)
    };
    let center = eval(point)?;
    let steps = absolute_steps(point, step);

    let derivative = |index: usize| -> Result<Vec<f64>> {
        let h = steps[index];
        let quotient = |s: f64| -> Result<Vec<f64>> {
            let plus = eval(point.shifted(index, s))?;
            let minus = eval(point.shifted(index, -s))?;
            if plus.len() != center.len() || minus.len() != center.len() {
                return Err(Error::DimensionMismatch {
                    expected: center.len(),
                    found: plus.len().max(minus.len()),
                });
            }
            Ok(plus
                .iter()
                .zip(&minus)
                .map(|(p, m)| (p - m) / (2.0 * s))
                .collect())
        };
        let coarse = quotient(h)?;
        let fine = quotient(0.5 * h)?;
        Ok(fine
            .iter()
            .zip(&coarse)
            .map(|(f, c)| (4.0 * f - c) / 3.0)
            .collect())
    };
    let d1 = derivative(0)?;
    let d2 = derivative(1)?;

    let mut fim = Qfim::new(0.0, 0.0, 0.0);
    for (k, &p) in center.iter().enumerate() {
        if p < MIN_OUTCOME_PROB {
            continue;
        }
        fim.q11 += d1[k] * d1[k] / p;
        fim.q12 += d1[k] * d2[k] / p;
        fim.q22 += d2[k] * d2[k] / p;
    }
    Ok(fim)
}
