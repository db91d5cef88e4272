//! Dense complex linear algebra for small Hilbert spaces.
//!
//! Everything here works on explicit `d x d` matrices. The largest space the
//! probe models need is `2^12`, where a dense Hermitian eigensolver is still
//! the simplest correct choice.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// Entrywise tolerance for `A == A^dagger`.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Tolerance on the Euclidean norm of a state.
pub const NORM_TOL: f64 = 1e-12;
/// POVM effects may dip this far below zero and the sum may miss the identity by this much.
pub const POVM_TOL: f64 = 1e-10;
/// Roundoff window for negative Born-rule probabilities; anything lower is an error.
pub const NEGATIVE_PROB_TOL: f64 = 1e-12;
/// Overlaps below this magnitude cannot be phase-aligned.
pub const ORTHOGONAL_TOL: f64 = 1e-14;

/// A normalized state vector `|psi>`.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    amplitudes: CVector,
}

impl PureState {
    /// Wraps amplitudes that are already normalized.
    pub fn new(amplitudes: CVector) -> Result<Self> {
        if amplitudes.len() < 2 {
            return Err(Error::InvalidState(format!(
                "dimension {} < 2",
                amplitudes.len()
            )));
        }
        let norm = amplitudes.norm();
        if !norm.is_finite() || (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidState(format!("norm {norm} is not 1")));
        }
        Ok(Self { amplitudes })
    }

    /// Normalizes an arbitrary nonzero vector.
    pub fn normalized(amplitudes: CVector) -> Result<Self> {
        let norm = amplitudes.norm();
        if !norm.is_finite() || norm == 0.0 {
            return Err(Error::InvalidState("zero or non-finite vector".into()));
        }
        Self::new(amplitudes.unscale(norm))
    }

    pub fn from_slice(amplitudes: &[C64]) -> Result<Self> {
        Self::normalized(CVector::from_column_slice(amplitudes))
    }

    pub fn from_real(amplitudes: &[f64]) -> Result<Self> {
        Self::normalized(CVector::from_iterator(
            amplitudes.len(),
            amplitudes.iter().map(|&x| C64::new(x, 0.0)),
        ))
    }

    /// Computational basis state `|index>`.
    pub fn basis(dim: usize, index: usize) -> Result<Self> {
        if index >= dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: index + 1,
            });
        }
        let mut v = CVector::zeros(dim);
        v[index] = C64::new(1.0, 0.0);
        Self::new(v)
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> CVector {
        self.amplitudes
    }

    /// `<self|other>`
    pub fn inner(&self, other: &PureState) -> C64 {
        self.amplitudes.dotc(&other.amplitudes)
    }

    /// Multiplies by a global phase `e^{i theta}`.
    pub fn with_phase(&self, theta: f64) -> PureState {
        PureState {
            amplitudes: self.amplitudes.map(|a| a * C64::from_polar(1.0, theta)),
        }
    }

    /// `|<self|other>|^2`
    pub fn fidelity(&self, other: &PureState) -> f64 {
        self.inner(other).norm_sqr()
    }

    /// True when all imaginary parts are below `tol`.
    pub fn is_real(&self, tol: f64) -> bool {
        self.amplitudes.iter().all(|a| a.im.abs() < tol)
    }
}

/// A Hermitian `d x d` operator.
///
/// Real symmetric operators keep real storage so the large spin-chain
/// Hamiltonians use half the memory and the faster real eigensolver.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianOperator {
    entries: Entries,
}

#[derive(Debug, Clone, PartialEq)]
enum Entries {
    Real(DMatrix<f64>),
    Complex(CMatrix),
}

impl HermitianOperator {
    pub fn new(entries: CMatrix) -> Result<Self> {
        if !entries.is_square() {
            return Err(Error::DimensionMismatch {
                expected: entries.nrows(),
                found: entries.ncols(),
            });
        }
        let deviation = hermitian_deviation(&entries);
        if !(deviation <= HERMITIAN_TOL) {
            return Err(Error::NonHermitianInput {
                max_deviation: deviation,
            });
        }
        if entries.iter().all(|z| z.im == 0.0) {
            return Ok(Self {
                entries: Entries::Real(entries.map(|z| z.re)),
            });
        }
        Ok(Self {
            entries: Entries::Complex(entries),
        })
    }

    pub fn from_real(entries: DMatrix<f64>) -> Result<Self> {
        if !entries.is_square() {
            return Err(Error::DimensionMismatch {
                expected: entries.nrows(),
                found: entries.ncols(),
            });
        }
        let n = entries.nrows();
        let mut deviation = 0.0f64;
        for i in 0..n {
            for j in i + 1..n {
                let d = (entries[(i, j)] - entries[(j, i)]).abs();
                deviation = if d.is_nan() {
                    f64::NAN
                } else {
                    deviation.max(d)
                };
            }
        }
        if !(deviation <= HERMITIAN_TOL) || entries.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonHermitianInput {
                max_deviation: deviation,
            });
        }
        Ok(Self {
            entries: Entries::Real(entries),
        })
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            entries: Entries::Real(DMatrix::zeros(dim, dim)),
        }
    }

    pub fn dim(&self) -> usize {
        match &self.entries {
            Entries::Real(m) => m.nrows(),
            Entries::Complex(m) => m.nrows(),
        }
    }

    /// Complex copy of the matrix.
    pub fn to_complex(&self) -> CMatrix {
        match &self.entries {
            Entries::Real(m) => m.map(|x| C64::new(x, 0.0)),
            Entries::Complex(m) => m.clone(),
        }
    }

    /// The matrix when every entry is real.
    pub fn as_real(&self) -> Option<&DMatrix<f64>> {
        match &self.entries {
            Entries::Real(m) => Some(m),
            Entries::Complex(_) => None,
        }
    }

    pub fn scale(&self, factor: f64) -> HermitianOperator {
        let entries = match &self.entries {
            Entries::Real(m) => Entries::Real(m.scale(factor)),
            Entries::Complex(m) => Entries::Complex(m.scale(factor)),
        };
        HermitianOperator { entries }
    }

    pub fn add(&self, other: &HermitianOperator) -> Result<HermitianOperator> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        let entries = match (&self.entries, &other.entries) {
            (Entries::Real(a), Entries::Real(b)) => Entries::Real(a + b),
            _ => Entries::Complex(self.to_complex() + other.to_complex()),
        };
        Ok(HermitianOperator { entries })
    }

    pub fn apply(&self, state: &PureState) -> CVector {
        match &self.entries {
            Entries::Real(m) => {
                let re = m * state.amplitudes().map(|z| z.re);
                let im = m * state.amplitudes().map(|z| z.im);
                re.zip_map(&im, C64::new)
            }
            Entries::Complex(m) => m * state.amplitudes(),
        }
    }
}

fn hermitian_deviation(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            let d = (m[(i, j)] - m[(j, i)].conj()).norm();
            if d.is_nan() {
                return f64::NAN;
            }
            worst = worst.max(d);
        }
    }
    worst
}

/// Pauli matrices as operators.
pub mod pauli {
    use super::*;

    pub fn x() -> HermitianOperator {
        HermitianOperator::from_real(DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]))
            .expect("sigma_x is Hermitian")
    }

    pub fn y() -> HermitianOperator {
        let i = C64::new(0.0, 1.0);
        HermitianOperator::new(CMatrix::from_row_slice(
            2,
            2,
            &[C64::new(0.0, 0.0), -i, i, C64::new(0.0, 0.0)],
        ))
        .expect("sigma_y is Hermitian")
    }

    pub fn z() -> HermitianOperator {
        HermitianOperator::from_real(DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]))
            .expect("sigma_z is Hermitian")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenPair {
    pub value: f64,
    pub vector: PureState,
}

/// Full spectrum in ascending order with phase-fixed eigenvectors.
///
/// Each vector is rotated so that its largest-magnitude component is real and
/// positive; among components of equal magnitude the lowest index is used.
pub fn eigendecompose(op: &HermitianOperator) -> Result<Vec<EigenPair>> {
    let dim = op.dim();
    let (values, vectors): (Vec<f64>, Vec<CVector>) = if let Some(real) = op.as_real() {
        let eig = real.clone().symmetric_eigen();
        let vecs = (0..dim)
            .map(|k| eig.eigenvectors.column(k).map(|x| C64::new(x, 0.0)))
            .collect();
        (eig.eigenvalues.iter().copied().collect(), vecs)
    } else {
        let eig = op.to_complex().symmetric_eigen();
        let vecs = (0..dim)
            .map(|k| eig.eigenvectors.column(k).into_owned())
            .collect();
        (eig.eigenvalues.iter().copied().collect(), vecs)
    };

    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));

    order
        .into_iter()
        .map(|k| {
            let vector = PureState::normalized(fix_phase(vectors[k].clone()))?;
            Ok(EigenPair {
                value: values[k],
                vector,
            })
        })
        .collect()
}

pub(crate) fn fix_phase(mut v: CVector) -> CVector {
    let max = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if max == 0.0 {
        return v;
    }
    let pivot = v
        .iter()
        .position(|z| z.norm() >= max * (1.0 - 1e-10))
        .unwrap_or(0);
    let phase = v[pivot].conj() / v[pivot].norm();
    v.apply(|z| *z *= phase);
    // The pivot is now real positive up to roundoff; make it exact.
    v[pivot] = C64::new(v[pivot].norm(), 0.0);
    v
}

/// Lowest eigenpair of an operator together with its spectral gap.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundState {
    pub energy: f64,
    pub state: PureState,
    /// Second-lowest minus lowest eigenvalue, never negative.
    pub gap: f64,
    /// Highest minus lowest eigenvalue.
    pub spectral_range: f64,
}

impl GroundState {
    /// Gap below `rel_tol` times the spectral range.
    pub fn is_degenerate(&self, rel_tol: f64) -> bool {
        self.gap < rel_tol * self.spectral_range.max(f64::MIN_POSITIVE)
    }
}

pub fn ground_state(op: &HermitianOperator) -> Result<GroundState> {
    let mut pairs = eigendecompose(op)?;
    let top = pairs.last().map(|p| p.value).unwrap_or(0.0);
    let second = pairs.get(1).map(|p| p.value).unwrap_or(pairs[0].value);
    let lowest = pairs.swap_remove(0);
    Ok(GroundState {
        energy: lowest.value,
        gap: (second - lowest.value).max(0.0),
        spectral_range: top - lowest.value,
        state: lowest.vector,
    })
}

/// `exp(-i G)` through the spectral decomposition of `G`.
pub fn unitary_from_generator(generator: &HermitianOperator) -> Result<CMatrix> {
    let pairs = eigendecompose(generator)?;
    let dim = generator.dim();
    let mut u = CMatrix::zeros(dim, dim);
    for pair in &pairs {
        let v = pair.vector.amplitudes();
        let phase = C64::from_polar(1.0, -pair.value);
        u += (v * v.adjoint()) * phase;
    }
    Ok(u)
}

/// Applies a `d x d` matrix to a state and renormalizes away roundoff.
pub fn evolve(unitary: &CMatrix, state: &PureState) -> Result<PureState> {
    if unitary.ncols() != state.dim() {
        return Err(Error::DimensionMismatch {
            expected: unitary.ncols(),
            found: state.dim(),
        });
    }
    PureState::normalized(unitary * state.amplitudes())
}

/// A generalized measurement `{E_k}` with outcome labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Povm {
    effects: Vec<CMatrix>,
    labels: Vec<String>,
}

impl Povm {
    pub fn new(effects: Vec<CMatrix>, labels: Vec<String>) -> Result<Self> {
        let Some(first) = effects.first() else {
            return Err(Error::InvalidPovm("no effects".into()));
        };
        if labels.len() != effects.len() {
            return Err(Error::InvalidPovm(format!(
                "{} labels for {} effects",
                labels.len(),
                effects.len()
            )));
        }
        let dim = first.nrows();
        let mut total = CMatrix::zeros(dim, dim);
        for (k, e) in effects.iter().enumerate() {
            if e.nrows() != dim || e.ncols() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: e.nrows(),
                });
            }
            if hermitian_deviation(e) > POVM_TOL {
                return Err(Error::InvalidPovm(format!("effect {k} is not Hermitian")));
            }
            let min_eig = e
                .clone()
                .symmetric_eigenvalues()
                .iter()
                .copied()
                .fold(f64::INFINITY, f64::min);
            if min_eig < -POVM_TOL {
                return Err(Error::InvalidPovm(format!(
                    "effect {k} has eigenvalue {min_eig:e}"
                )));
            }
            total += e;
        }
        let identity = CMatrix::identity(dim, dim);
        let miss = (total - identity)
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        if miss > POVM_TOL {
            return Err(Error::InvalidPovm(format!(
                "effects sum to identity only within {miss:e}"
            )));
        }
        Ok(Self { effects, labels })
    }

    /// Rank-one projectors onto the (normalized) given vectors.
    pub fn projective(vectors: &[CVector], labels: Vec<String>) -> Result<Self> {
        let effects = vectors
            .iter()
            .map(|v| {
                let n = v.norm();
                if n == 0.0 {
                    return Err(Error::InvalidPovm("zero vector".into()));
                }
                let u = v.unscale(n);
                Ok(&u * u.adjoint())
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(effects, labels)
    }

    pub fn dim(&self) -> usize {
        self.effects[0].nrows()
    }

    pub fn len(&self) -> usize {
        self.effects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.effects.is_empty()
    }

    pub fn effects(&self) -> &[CMatrix] {
        &self.effects
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }
}

/// `p_k = <psi|E_k|psi>`, with roundoff negatives clamped and the result renormalized.
pub fn born_probabilities(state: &PureState, povm: &Povm) -> Result<Vec<f64>> {
    if state.dim() != povm.dim() {
        return Err(Error::DimensionMismatch {
            expected: povm.dim(),
            found: state.dim(),
        });
    }
    let psi = state.amplitudes();
    let raw = povm
        .effects
        .iter()
        .map(|e| psi.dotc(&(e * psi)).re)
        .collect();
    clean_probabilities(raw)
}

/// Clamps roundoff negatives to zero and renormalizes.
pub fn clean_probabilities(mut probs: Vec<f64>) -> Result<Vec<f64>> {
    for p in probs.iter_mut() {
        if *p < -NEGATIVE_PROB_TOL || p.is_nan() {
            return Err(Error::NegativeProbability { value: *p });
        }
        if *p < 0.0 {
            *p = 0.0;
        }
    }
    let sum: f64 = probs.iter().sum();
    if !(sum > 0.0) || !sum.is_finite() {
        return Err(Error::UnnormalizedProbs { sum });
    }
    probs.iter_mut().for_each(|p| *p /= sum);
    Ok(probs)
}

/// Rotates `state` by the global phase that makes `<reference|state>` real and positive.
pub fn phase_align(reference: &PureState, state: &PureState) -> Result<PureState> {
    if reference.dim() != state.dim() {
        return Err(Error::DimensionMismatch {
            expected: reference.dim(),
            found: state.dim(),
        });
    }
    let overlap = reference.inner(state);
    let magnitude = overlap.norm();
    if magnitude <= ORTHOGONAL_TOL {
        return Err(Error::OrthogonalStates { overlap: magnitude });
    }
    let phase = overlap.conj() / magnitude;
    Ok(PureState {
        amplitudes: state.amplitudes.map(|a| a * phase),
    })
}
