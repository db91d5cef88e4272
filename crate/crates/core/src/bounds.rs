//! Scalar precision bounds for two-parameter estimation and the choice
//! between joint (JE) and stepwise (SE) strategies.
//!
//! All bounds are per measurement round: the variance sum after `M` rounds is
//! bounded by `bound / M`. Stepwise bounds spend a fraction `gamma` of the
//! rounds on the first parameter (with the other one unknown) and the rest on
//! the second parameter (with the first one fixed to its estimate).

use std::fmt;

use crate::error::{Error, Result};
use crate::fisher::Qfim;

/// Relative determinant threshold below which a QFIM is treated as singular.
pub const SINGULAR_TOL: f64 = 1e-12;
/// Relative tolerance for comparing SE and JE bounds; ties go to JE.
pub const REGION_TOL: f64 = 1e-9;
/// Relative tolerance under which the two SE orders count as tied.
pub const ORDER_TIE_TOL: f64 = 1e-12;

/// `2 sqrt(2) - 2`, the correlation threshold above which SE beats JE.
pub fn eq7_threshold() -> f64 {
    2.0 * std::f64::consts::SQRT_2 - 2.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Strategy {
    First1Then2,
    First2Then1,
    Joint,
}

impl Strategy {
    pub fn as_str(&self) -> &'static str {
        match self {
            Strategy::First1Then2 => "first1then2",
            Strategy::First2Then1 => "first2then1",
            Strategy::Joint => "joint",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Region {
    /// SE measuring lambda1 first wins.
    I,
    /// SE measuring lambda2 first wins.
    II,
    /// JE wins (or ties).
    III,
}

impl Region {
    pub fn as_str(&self) -> &'static str {
        match self {
            Region::I => "I",
            Region::II => "II",
            Region::III => "III",
        }
    }
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

fn check_invertible(q: &Qfim) -> Result<f64> {
    let det = q.det();
    let scale = q.q11 * q.q22;
    if q.is_finite() && q.q11 > 0.0 && q.q22 > 0.0 && det > SINGULAR_TOL * scale {
        Ok(det)
    } else {
        Err(Error::SingularQfim {
            det,
            condition: q.condition_number(),
        })
    }
}

fn check_gamma(gamma: f64) -> Result<()> {
    if gamma > 0.0 && gamma < 1.0 {
        Ok(())
    } else {
        Err(Error::GammaOutOfRange(gamma))
    }
}

/// JE bound `mu = Tr[Q^-1] = (Q11 + Q22) / det Q`.
pub fn je_bound(q: &Qfim) -> Result<f64> {
    let det = check_invertible(q)?;
    Ok(q.trace() / det)
}

/// SE bound measuring lambda1 first: `(Q22/det)/gamma + 1/((1-gamma) Q22)`.
pub fn se_bound_lambda1_first(q: &Qfim, gamma: f64) -> Result<f64> {
    check_gamma(gamma)?;
    let det = check_invertible(q)?;
    Ok(q.q22 / det / gamma + 1.0 / ((1.0 - gamma) * q.q22))
}

/// SE bound measuring lambda2 first: `(Q11/det)/gamma + 1/((1-gamma) Q11)`.
pub fn se_bound_lambda2_first(q: &Qfim, gamma: f64) -> Result<f64> {
    se_bound_lambda1_first(&q.swapped(), gamma)
}

/// Minimum of `a/gamma + b/(1-gamma)` over `gamma in (0, 1)`.
fn budget_optimum(a: f64, b: f64) -> (f64, f64) {
    let (sa, sb) = (a.sqrt(), b.sqrt());
    ((sa + sb).powi(2), sa / (sa + sb))
}

/// Optimally budgeted stepwise bounds for both measurement orders.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimalSe {
    pub mu_tilde: f64,
    pub gamma_opt: f64,
    /// Winning order; never `Joint`.
    pub strategy: Strategy,
    pub mu_prime: f64,
    pub gamma_prime: f64,
    pub mu_dblprime: f64,
    pub gamma_dblprime: f64,
}

pub fn optimal_se(q: &Qfim) -> Result<OptimalSe> {
    let det = check_invertible(q)?;
    let (mu_prime, gamma_prime) = budget_optimum(q.q22 / det, 1.0 / q.q22);
    let (mu_dblprime, gamma_dblprime) = budget_optimum(q.q11 / det, 1.0 / q.q11);
    let tied = (mu_prime - mu_dblprime).abs() < ORDER_TIE_TOL * mu_prime.max(mu_dblprime);
    let (mu_tilde, gamma_opt, strategy) = if tied || mu_prime <= mu_dblprime {
        (mu_prime, gamma_prime, Strategy::First1Then2)
    } else {
        (mu_dblprime, gamma_dblprime, Strategy::First2Then1)
    };
    Ok(OptimalSe {
        mu_tilde,
        gamma_opt,
        strategy,
        mu_prime,
        gamma_prime,
        mu_dblprime,
        gamma_dblprime,
    })
}

/// Normalized correlation `Q12^2 / (Q11 Q22)` and whether it exceeds `2 sqrt 2 - 2`.
pub fn eq7_sufficiency(q: &Qfim) -> Result<(bool, f64)> {
    if !(q.q11 > 0.0 && q.q22 > 0.0) {
        return Err(Error::DegenerateDiagonal {
            q11: q.q11,
            q22: q.q22,
        });
    }
    let value = q.q12 * q.q12 / (q.q11 * q.q22);
    Ok((value > eq7_threshold(), value))
}

fn check_delta(q: &Qfim, delta: f64) -> Result<()> {
    let limit = (q.q11 * q.q22).sqrt();
    if delta.is_finite() && delta.abs() <= limit * (1.0 + 1e-8) {
        Ok(())
    } else {
        Err(Error::DeltaTooLarge {
            delta: delta.abs(),
            limit,
        })
    }
}

/// Holevo bound of a D-invariant model: `(Q11 + Q22 + 2|delta|) / det Q`.
pub fn hcrb_d_invariant(q: &Qfim, delta: f64) -> Result<f64> {
    let det = check_invertible(q)?;
    check_delta(q, delta)?;
    Ok((q.trace() + 2.0 * delta.abs()) / det)
}

/// Maximum over `gamma` of the near-diagonal comparison function
///
/// `f(gamma) = (1-2g)(Q11-Q22) - [g^2 Q22 + (1-g)^2 Q11] + 2g(1-g)|delta| + g Q12^2 Q11 / det`,
///
/// with the parameters ordered so that `Q11 >= Q22`. `f` is a concave
/// parabola in `gamma`; the value returned is its stationary maximum
/// `[Q11^2 Q12^4 + 4 Q11 det Q12^2 (Q22 + |delta|) + 4 det^2 (delta^2 - Q11 Q22)]
///  / [4 det^2 (Q11 + Q22 + 2|delta|)]`,
/// which is the maximum over `(0, 1)` whenever the stationary point lies inside.
pub fn fmax_theorem2(q: &Qfim, delta: f64) -> Result<f64> {
    let q = if q.q11 >= q.q22 { *q } else { q.swapped() };
    let det = check_invertible(&q)?;
    let d = delta.abs();
    let q12_sq = q.q12 * q.q12;
    let numerator = q.q11 * q.q11 * q12_sq * q12_sq
        + 4.0 * q.q11 * det * q12_sq * (q.q22 + d)
        + 4.0 * det * det * (d * d - q.q11 * q.q22);
    Ok(numerator / (4.0 * det * det * (2.0 * d + q.q11 + q.q22)))
}

/// Location of the stationary maximum of `f(gamma)` (see [`fmax_theorem2`]).
pub fn fmax_argmax(q: &Qfim, delta: f64) -> Result<f64> {
    let q = if q.q11 >= q.q22 { *q } else { q.swapped() };
    let det = check_invertible(&q)?;
    let d = delta.abs();
    let slope = 2.0 * q.q22 + 2.0 * d + q.q12 * q.q12 * q.q11 / det;
    Ok(slope / (2.0 * (q.q11 + q.q22 + 2.0 * d)))
}

/// Necessary condition for SE to beat the D-invariant Holevo bound:
/// `Q12^2/(Q11 Q22) >= (1 - delta^2/(Q11 Q22)) / (1 + |delta|/Q22)`.
///
/// Returns `(satisfied, lhs, rhs)`.
pub fn se_beats_hcrb_necessary(q: &Qfim, delta: f64) -> Result<(bool, f64, f64)> {
    if !(q.q11 > 0.0 && q.q22 > 0.0) {
        return Err(Error::DegenerateDiagonal {
            q11: q.q11,
            q22: q.q22,
        });
    }
    let prod = q.q11 * q.q22;
    let lhs = q.q12 * q.q12 / prod;
    let rhs = (1.0 - delta * delta / prod) / (1.0 + delta.abs() / q.q22);
    Ok((lhs >= rhs, lhs, rhs))
}

/// All bounds and the strategy verdict at one parameter point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundsReport {
    pub mu: f64,
    pub mu_prime: f64,
    pub mu_dblprime: f64,
    pub mu_tilde: f64,
    pub gamma_opt: f64,
    pub strategy: Strategy,
    pub region: Region,
    pub ratio: f64,
    pub eq7_satisfied: bool,
    pub eq7_value: f64,
    pub singular: bool,
}

impl BoundsReport {
    fn singular(q: &Qfim) -> Self {
        let eq7_value = eq7_sufficiency(q).map(|(_, v)| v).unwrap_or(f64::NAN);
        Self {
            mu: f64::INFINITY,
            mu_prime: f64::INFINITY,
            mu_dblprime: f64::INFINITY,
            mu_tilde: f64::INFINITY,
            gamma_opt: f64::NAN,
            strategy: Strategy::Joint,
            region: Region::III,
            ratio: f64::NAN,
            // The sufficiency theorem needs an invertible QFIM.
            eq7_satisfied: false,
            eq7_value,
            singular: true,
        }
    }
}

/// Assembles the full report; singular matrices yield `singular = true`.
pub fn classify_region(q: &Qfim) -> BoundsReport {
    let (Ok(mu), Ok(se)) = (je_bound(q), optimal_se(q)) else {
        return BoundsReport::singular(q);
    };
    let (eq7_satisfied, eq7_value) =
        eq7_sufficiency(q).expect("invertible QFIM has positive diagonal");
    let se_wins = se.mu_tilde < mu * (1.0 - REGION_TOL);
    let (strategy, region) = match (se_wins, se.strategy) {
        (true, Strategy::First1Then2) => (Strategy::First1Then2, Region::I),
        (true, Strategy::First2Then1) => (Strategy::First2Then1, Region::II),
        _ => (Strategy::Joint, Region::III),
    };
    BoundsReport {
        mu,
        mu_prime: se.mu_prime,
        mu_dblprime: se.mu_dblprime,
        mu_tilde: se.mu_tilde,
        gamma_opt: se.gamma_opt,
        strategy,
        region,
        ratio: se.mu_tilde / mu,
        eq7_satisfied,
        eq7_value,
        singular: false,
    }
}
