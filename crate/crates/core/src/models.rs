//! Probe models: a qubit under a two-axis rotation, the ground state of a
//! three-level Landau-Zener Hamiltonian, the ground state of a periodic mixed
//! Ising chain, and a squeezed coherent state known only through its QFIM.
//!
//! Each state model also carries the pair of fixed measurements used to
//! estimate `lambda1` and `lambda2` in the sequential Bayesian protocol.

use std::f64::consts::PI;
use std::sync::OnceLock;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::fisher::{ParamPoint, Qfim, StateSample, DEGENERACY_TOL};
use crate::quantum::{
    born_probabilities, clean_probabilities, evolve, fix_phase, ground_state, pauli,
    unitary_from_generator, CMatrix, CVector, GroundState, HermitianOperator, Povm, PureState, C64,
};

/// A pure-state probe `lambda -> |psi(lambda)>` with its two measurement settings.
pub trait StateModel: Sync {
    fn sample(&self, point: ParamPoint) -> Result<StateSample>;

    /// Measurement used to learn `lambda1`.
    fn measurement1(&self) -> Measurement;

    /// Measurement used to learn `lambda2`.
    fn measurement2(&self) -> Measurement;
}

/// Initial qubit state `cos(alpha/2)|0> + e^{i beta} sin(alpha/2)|1>`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QubitProbeConfig {
    alpha: f64,
    beta: f64,
}

impl QubitProbeConfig {
    /// Folds the angles onto `alpha in [0, pi]`, `beta in [0, 2 pi)`. The folded
    /// state equals the requested one up to a global phase.
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !alpha.is_finite() || !beta.is_finite() {
            return Err(Error::InvalidParameter("non-finite Bloch angles".into()));
        }
        let mut alpha = alpha.rem_euclid(2.0 * PI);
        let mut beta = beta;
        if alpha > PI {
            alpha = 2.0 * PI - alpha;
            beta += PI;
        }
        let mut beta = beta.rem_euclid(2.0 * PI);
        if beta >= 2.0 * PI {
            beta = 0.0;
        }
        Ok(Self { alpha, beta })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn initial_state(&self) -> PureState {
        let (s, c) = (0.5 * self.alpha).sin_cos();
        PureState::from_slice(&[C64::new(c, 0.0), C64::from_polar(s, self.beta)])
            .expect("Bloch vector is normalized")
    }
}

/// `exp(-i(lambda1 sigma_x + lambda2 sigma_z)) |psi0>`
pub fn qubit_state(cfg: &QubitProbeConfig, point: ParamPoint) -> Result<PureState> {
    let generator = pauli::x()
        .scale(point.lambda1)
        .add(&pauli::z().scale(point.lambda2))?;
    let u = unitary_from_generator(&generator)?;
    evolve(&u, &cfg.initial_state())
}

impl StateModel for QubitProbeConfig {
    fn sample(&self, point: ParamPoint) -> Result<StateSample> {
        Ok(StateSample::regular(qubit_state(self, point)?))
    }

    fn measurement1(&self) -> Measurement {
        Measurement::Povm(qubit_measurements().0)
    }

    fn measurement2(&self) -> Measurement {
        Measurement::Povm(qubit_measurements().1)
    }
}

/// Three-level Landau-Zener probe with fixed bias `lambda0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LzConfig {
    pub lambda0: f64,
}

impl LzConfig {
    pub fn new(lambda0: f64) -> Result<Self> {
        if !lambda0.is_finite() {
            return Err(Error::InvalidParameter("non-finite lambda0".into()));
        }
        Ok(Self { lambda0 })
    }
}

impl Default for LzConfig {
    fn default() -> Self {
        Self { lambda0: 2.0 }
    }
}

/// `[[l0, l1, 0], [l1, 0, l2], [0, l2, -l0]]`; the `|0> <-> |2>` element is always zero.
pub fn lz_hamiltonian(cfg: &LzConfig, point: ParamPoint) -> HermitianOperator {
    let (l0, l1, l2) = (cfg.lambda0, point.lambda1, point.lambda2);
    HermitianOperator::from_real(DMatrix::from_row_slice(
        3,
        3,
        &[l0, l1, 0.0, l1, 0.0, l2, 0.0, l2, -l0],
    ))
    .expect("LZ Hamiltonian is symmetric")
}

pub fn lz_state(cfg: &LzConfig, point: ParamPoint) -> Result<GroundState> {
    ground_state(&lz_hamiltonian(cfg, point))
}

impl StateModel for LzConfig {
    fn sample(&self, point: ParamPoint) -> Result<StateSample> {
        let gs = lz_state(self, point)?;
        Ok(StateSample {
            degenerate: gs.is_degenerate(DEGENERACY_TOL),
            state: gs.state,
        })
    }

    fn measurement1(&self) -> Measurement {
        Measurement::Povm(lz_measurements().0)
    }

    fn measurement2(&self) -> Measurement {
        Measurement::Povm(lz_measurements().1)
    }
}

pub const MIN_CHAIN_LENGTH: usize = 3;
pub const MAX_CHAIN_LENGTH: usize = 12;

fn check_chain_length(length: usize) -> Result<()> {
    if (MIN_CHAIN_LENGTH..=MAX_CHAIN_LENGTH).contains(&length) {
        Ok(())
    } else {
        Err(Error::DimensionBudget { length })
    }
}

/// Periodic mixed-field Ising chain of `length` spins with unit exchange coupling.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IsingConfig {
    length: usize,
}

impl IsingConfig {
    pub fn new(length: usize) -> Result<Self> {
        check_chain_length(length)?;
        Ok(Self { length })
    }

    pub fn length(&self) -> usize {
        self.length
    }

    pub fn dim(&self) -> usize {
        1 << self.length
    }
}

/// `H = sum_i sigma^x_i sigma^x_{i+1} - sum_i (lambda1 sigma^x_i + lambda2 sigma^z_i)`
/// with periodic boundary. Bit `i` of a basis index is spin `i`; bit value 0
/// is the `sigma^z = +1` state.
pub fn ising_hamiltonian(cfg: &IsingConfig, point: ParamPoint) -> HermitianOperator {
    let (l, dim) = (cfg.length, cfg.dim());
    let (hx, hz) = (point.lambda1, point.lambda2);
    let mut h = DMatrix::<f64>::zeros(dim, dim);
    for idx in 0..dim {
        let up = l as i64 - 2 * i64::from(idx.count_ones());
        h[(idx, idx)] = -hz * up as f64;
        for i in 0..l {
            let bond = (1usize << i) | (1usize << ((i + 1) % l));
            h[(idx ^ bond, idx)] += 1.0;
            h[(idx ^ (1 << i), idx)] -= hx;
        }
    }
    HermitianOperator::from_real(h).expect("Ising Hamiltonian is symmetric")
}

/// Translation orbits of the computational basis: an orthonormal basis of the
/// zero-momentum sector, `|a> = N_a^{-1/2} sum_{s in orbit a} |s>`.
#[derive(Debug)]
struct MomentumSector {
    reps: Vec<usize>,
    sizes: Vec<usize>,
    orbit_of: Vec<usize>,
}

impl MomentumSector {
    fn build(l: usize) -> Self {
        let dim = 1usize << l;
        let mask = dim - 1;
        let mut orbit_of = vec![usize::MAX; dim];
        let (mut reps, mut sizes) = (Vec::new(), Vec::new());
        for s in 0..dim {
            if orbit_of[s] != usize::MAX {
                continue;
            }
            let id = reps.len();
            let (mut t, mut size) = (s, 0);
            while orbit_of[t] == usize::MAX {
                orbit_of[t] = id;
                size += 1;
                t = ((t << 1) | (t >> (l - 1))) & mask;
            }
            reps.push(s);
            sizes.push(size);
        }
        Self {
            reps,
            sizes,
            orbit_of,
        }
    }

    fn get(l: usize) -> &'static MomentumSector {
        static SECTORS: [OnceLock<MomentumSector>; MAX_CHAIN_LENGTH + 1] =
            [const { OnceLock::new() }; MAX_CHAIN_LENGTH + 1];
        SECTORS[l].get_or_init(|| Self::build(l))
    }

    fn len(&self) -> usize {
        self.reps.len()
    }
}

/// Block of the chain Hamiltonian on the zero-momentum sector:
/// `<b|H|a> = sqrt(N_a / N_b) sum_{t in b} H_{t, s_a}`.
fn ising_sector_block(l: usize, sector: &MomentumSector, point: ParamPoint) -> DMatrix<f64> {
    let (hx, hz) = (point.lambda1, point.lambda2);
    let n = sector.len();
    let mut block = DMatrix::<f64>::zeros(n, n);
    for (a, &s) in sector.reps.iter().enumerate() {
        let na = sector.sizes[a] as f64;
        let mut add = |t: usize, value: f64| {
            let b = sector.orbit_of[t];
            block[(b, a)] += (na / sector.sizes[b] as f64).sqrt() * value;
        };
        add(s, -hz * (l as f64 - 2.0 * f64::from(s.count_ones())));
        for i in 0..l {
            add(s ^ (1 << i) ^ (1 << ((i + 1) % l)), 1.0);
            add(s ^ (1 << i), -hx);
        }
    }
    block
}

/// Ground-state degeneracy of the `lambda2 = 0` chain, which is classical in
/// the x basis: `E(s) = sum s_i s_{i+1} - lambda1 sum s_i`.
fn zero_field_degenerate(l: usize, hx: f64) -> bool {
    let energies: Vec<f64> = (0..1usize << l)
        .map(|s| {
            let spin = |i: usize| if s >> (i % l) & 1 == 0 { 1.0 } else { -1.0 };
            (0..l).map(|i| spin(i) * spin(i + 1) - hx * spin(i)).sum()
        })
        .collect();
    let min = energies.iter().copied().fold(f64::INFINITY, f64::min);
    let tol = 1e-12 * (l as f64) * (1.0 + hx.abs());
    energies.iter().filter(|e| **e - min <= tol).count() > 1
}

/// Ground state of [`ising_hamiltonian`].
///
/// In the x basis the Hamiltonian has nonpositive off-diagonal entries and,
/// for `lambda2 != 0`, is irreducible, so its ground state is unique and
/// translation invariant. It is found by diagonalizing the zero-momentum
/// block only; `gap` is the gap inside that block. At `lambda2 = 0` the
/// reported gap is zero whenever the full ground level is degenerate.
pub fn ising_state(cfg: &IsingConfig, point: ParamPoint) -> Result<GroundState> {
    if !point.is_finite() {
        return Err(Error::InvalidParameter("non-finite Ising fields".into()));
    }
    let l = cfg.length;
    let sector = MomentumSector::get(l);
    let eig = ising_sector_block(l, sector, point).symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let (lowest, highest) = (
        eig.eigenvalues[order[0]],
        eig.eigenvalues[order[order.len() - 1]],
    );
    let mut gap = (eig.eigenvalues[order[1]] - lowest).max(0.0);
    if point.lambda2 == 0.0 && zero_field_degenerate(l, point.lambda1) {
        gap = 0.0;
    }
    let coeffs = eig.eigenvectors.column(order[0]);
    let amps = CVector::from_iterator(
        cfg.dim(),
        sector
            .orbit_of
            .iter()
            .map(|&a| C64::new(coeffs[a] / (sector.sizes[a] as f64).sqrt(), 0.0)),
    );
    Ok(GroundState {
        energy: lowest,
        state: PureState::normalized(fix_phase(amps))?,
        gap,
        spectral_range: highest - lowest,
    })
}

impl StateModel for IsingConfig {
    fn sample(&self, point: ParamPoint) -> Result<StateSample> {
        let gs = ising_state(self, point)?;
        Ok(StateSample {
            degenerate: gs.is_degenerate(DEGENERACY_TOL),
            state: gs.state,
        })
    }

    /// `lambda1 = h_x` is read from the x magnetization.
    fn measurement1(&self) -> Measurement {
        Measurement::Magnetization(MagnetizationPovm {
            length: self.length,
            axis: Axis::X,
        })
    }

    /// `lambda2 = h_z` is read from the z magnetization.
    fn measurement2(&self) -> Measurement {
        Measurement::Magnetization(MagnetizationPovm {
            length: self.length,
            axis: Axis::Z,
        })
    }
}

/// Coherent state `|alpha>` squeezed by `r` and rotated by `phi`; parameters `(phi, r)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianConfig {
    pub alpha_re: f64,
    pub alpha_im: f64,
}

impl GaussianConfig {
    pub fn new(alpha_re: f64, alpha_im: f64) -> Result<Self> {
        if !alpha_re.is_finite() || !alpha_im.is_finite() {
            return Err(Error::InvalidParameter("non-finite displacement".into()));
        }
        Ok(Self { alpha_re, alpha_im })
    }
}

/// Analytic QFIM for `(phi, r)`; it does not depend on `phi`.
pub fn gaussian_qfim(cfg: &GaussianConfig, r: f64) -> Qfim {
    let (a, b) = (cfg.alpha_re, cfg.alpha_im);
    let q11 = 8.0 * (a * a + b * b) + 2.0 * (4.0 * r).tanh().powi(2);
    let q12 = -16.0 * a * b * (2.0 * r).cosh();
    let q22 = 8.0 * (4.0 * r).exp() * a * a + 8.0 * (-4.0 * r).exp() * b * b;
    Qfim::new(q11, q12, q22)
}

fn basis_povm(vectors: &[[f64; 3]]) -> Povm {
    let vs: Vec<CVector> = vectors
        .iter()
        .map(|v| CVector::from_iterator(3, v.iter().map(|&x| C64::new(x, 0.0))))
        .collect();
    let labels = (0..vs.len()).map(|k| k.to_string()).collect();
    Povm::projective(&vs, labels).expect("orthogonal basis forms a POVM")
}

/// `({|+>, |->}, {|0>, |1>})`
pub fn qubit_measurements() -> (Povm, Povm) {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let v = |a: f64, b: f64| CVector::from_vec(vec![C64::new(a, 0.0), C64::new(b, 0.0)]);
    let x = Povm::projective(&[v(s, s), v(s, -s)], vec!["+".into(), "-".into()])
        .expect("x basis forms a POVM");
    let z = Povm::projective(&[v(1.0, 0.0), v(0.0, 1.0)], vec!["0".into(), "1".into()])
        .expect("z basis forms a POVM");
    (x, z)
}

/// Projective measurements in the bases `{(1,1,0), (1,-1,0), (0,0,1)}` and
/// `{(0,1,1), (0,1,-1), (1,0,0)}`.
pub fn lz_measurements() -> (Povm, Povm) {
    (
        basis_povm(&[[1.0, 1.0, 0.0], [1.0, -1.0, 0.0], [0.0, 0.0, 1.0]]),
        basis_povm(&[[0.0, 1.0, 1.0], [0.0, 1.0, -1.0], [1.0, 0.0, 0.0]]),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Z,
}

/// Total magnetization `sum_i sigma^axis_i` of a chain, resolved into its
/// `L + 1` eigenvalues `m = -L, -L + 2, ..., L` (outcome `k` is `m = -L + 2k`).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MagnetizationPovm {
    length: usize,
    axis: Axis,
}

/// Largest Hilbert-space dimension for which explicit projectors are built.
pub const MAX_EXPLICIT_DIM: usize = 256;

pub fn magnetization_povm(length: usize, axis: Axis) -> Result<MagnetizationPovm> {
    check_chain_length(length)?;
    Ok(MagnetizationPovm { length, axis })
}

impl MagnetizationPovm {
    pub fn length(&self) -> usize {
        self.length
    }

    pub fn axis(&self) -> Axis {
        self.axis
    }

    pub fn num_outcomes(&self) -> usize {
        self.length + 1
    }

    pub fn eigenvalues(&self) -> Vec<i64> {
        let l = self.length as i64;
        (0..=l).map(|k| -l + 2 * k).collect()
    }

    /// Outcome index for a z-basis index: `m = L - 2 * popcount`.
    fn outcome_of(&self, idx: usize) -> usize {
        self.length - idx.count_ones() as usize
    }

    /// Probabilities by regrouping amplitudes; the x axis first applies a
    /// Hadamard to every spin.
    pub fn probabilities(&self, state: &PureState) -> Result<Vec<f64>> {
        let dim = 1usize << self.length;
        if state.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: state.dim(),
            });
        }
        let mut amps: Vec<C64> = state.amplitudes().iter().copied().collect();
        if self.axis == Axis::X {
            hadamard_all(&mut amps);
        }
        let mut probs = vec![0.0; self.num_outcomes()];
        for (idx, a) in amps.iter().enumerate() {
            probs[self.outcome_of(idx)] += a.norm_sqr();
        }
        clean_probabilities(probs)
    }

    /// Explicit projectors; only for `2^L <= 256`.
    pub fn to_povm(&self) -> Result<Povm> {
        let dim = 1usize << self.length;
        if dim > MAX_EXPLICIT_DIM {
            return Err(Error::DimensionBudget {
                length: self.length,
            });
        }
        let mut effects = vec![CMatrix::zeros(dim, dim); self.num_outcomes()];
        for idx in 0..dim {
            let mut v = vec![C64::new(0.0, 0.0); dim];
            v[idx] = C64::new(1.0, 0.0);
            if self.axis == Axis::X {
                // Rows of the (real, self-inverse) Hadamard transform.
                hadamard_all(&mut v);
            }
            let v = CVector::from_vec(v);
            effects[self.outcome_of(idx)] += &v * v.adjoint();
        }
        let labels = self.eigenvalues().iter().map(|m| m.to_string()).collect();
        Povm::new(effects, labels)
    }
}

/// In-place normalized Walsh-Hadamard transform over all qubits.
fn hadamard_all(amps: &mut [C64]) {
    let n = amps.len();
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut half = 1;
    while half < n {
        for block in (0..n).step_by(2 * half) {
            for i in block..block + half {
                let (a, b) = (amps[i], amps[i + half]);
                amps[i] = (a + b) * s;
                amps[i + half] = (a - b) * s;
            }
        }
        half *= 2;
    }
}

/// A measurement setting: either an explicit POVM or a chain magnetization.
#[derive(Debug, Clone, PartialEq)]
pub enum Measurement {
    Povm(Povm),
    Magnetization(MagnetizationPovm),
}

impl Measurement {
    pub fn probabilities(&self, state: &PureState) -> Result<Vec<f64>> {
        match self {
            Measurement::Povm(p) => born_probabilities(state, p),
            Measurement::Magnetization(m) => m.probabilities(state),
        }
    }

    pub fn num_outcomes(&self) -> usize {
        match self {
            Measurement::Povm(p) => p.len(),
            Measurement::Magnetization(m) => m.num_outcomes(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fisher::{evaluate_qfim, state_derivatives, uhlmann_delta, DEFAULT_STEP};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn qubit_identity_encoding() {
        let cfg = QubitProbeConfig::new(1.1, 2.3).unwrap();
        let psi = qubit_state(&cfg, ParamPoint::new(0.0, 0.0)).unwrap();
        assert!((psi.amplitudes() - cfg.initial_state().amplitudes()).norm() < 1e-14);
    }

    #[test]
    fn qubit_half_rotation() {
        let cfg = QubitProbeConfig::new(0.0, 0.0).unwrap();
        let psi = qubit_state(&cfg, ParamPoint::new(PI / 2.0, 0.0)).unwrap();
        assert!((psi.amplitudes()[0]).norm() < 1e-14);
        assert!((psi.amplitudes()[1] - c(0.0, -1.0)).norm() < 1e-14);
    }

    #[test]
    fn qubit_angles_are_folded() {
        let cfg = QubitProbeConfig::new(-0.5, 7.0).unwrap();
        assert!((0.0..=PI).contains(&cfg.alpha()));
        assert!((0.0..2.0 * PI).contains(&cfg.beta()));
        let raw = {
            let (s, co) = (-0.25f64).sin_cos();
            PureState::from_slice(&[c(co, 0.0), C64::from_polar(s, 7.0)]).unwrap()
        };
        assert!((raw.fidelity(&cfg.initial_state()) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn lz_hamiltonian_structure() {
        let cfg = LzConfig::default();
        let h = lz_hamiltonian(&cfg, ParamPoint::new(0.0, 0.0));
        let m = h.as_real().unwrap();
        assert_eq!(
            *m,
            DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![2.0, 0.0, -2.0]))
        );
        for point in [ParamPoint::new(1.3, -0.2), ParamPoint::new(-4.0, 9.0)] {
            let h = lz_hamiltonian(&cfg, point);
            assert_eq!(h.as_real().unwrap()[(0, 2)], 0.0);
            assert_eq!(h.as_real().unwrap()[(2, 0)], 0.0);
        }
    }

    #[test]
    fn lz_ground_state_at_origin() {
        let gs = lz_state(&LzConfig::default(), ParamPoint::new(0.0, 0.0)).unwrap();
        assert_eq!(gs.energy, -2.0);
        assert!((gs.state.amplitudes()[2] - c(1.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn lz_gap_closes() {
        let gs = lz_state(
            &LzConfig::default(),
            ParamPoint::new(2.0 * 2f64.sqrt(), 0.0),
        )
        .unwrap();
        assert!(gs.gap < 1e-10, "gap = {}", gs.gap);
        assert!((gs.energy + 2.0).abs() < 1e-12);
        assert!(gs.is_degenerate(DEGENERACY_TOL));
    }

    #[test]
    fn lz_states_are_real_with_zero_curvature() {
        let cfg = LzConfig::default();
        let point = ParamPoint::new(3.5, 1.25);
        let gs = lz_state(&cfg, point).unwrap();
        assert!(gs.state.is_real(1e-12));
        let eval = evaluate_qfim(|p| cfg.sample(p), point).unwrap();
        assert!(eval.qfim.is_finite() && !eval.degenerate);
        assert!(eval.delta.abs() < 1e-10);
    }

    fn zero_field_spectrum(l: usize) -> Vec<f64> {
        let cfg = IsingConfig::new(l).unwrap();
        let h = ising_hamiltonian(&cfg, ParamPoint::new(0.0, 0.0));
        assert!(h.as_real().unwrap().trace().abs() < 1e-14);
        let mut e: Vec<f64> = h
            .as_real()
            .unwrap()
            .clone()
            .symmetric_eigenvalues()
            .iter()
            .copied()
            .collect();
        e.sort_by(f64::total_cmp);
        e
    }

    #[test]
    fn ising_zero_field_spectrum() {
        // Odd rings are frustrated: six states at -1, two at +3.
        let e = zero_field_spectrum(3);
        assert!(e[..6].iter().all(|x| (x + 1.0).abs() < 1e-12));
        assert!(e[6..].iter().all(|x| (x - 3.0).abs() < 1e-12));
        for l in [4, 6] {
            let e = zero_field_spectrum(l);
            let n = e.len();
            for k in 0..n {
                assert!((e[k] + e[n - 1 - k]).abs() < 1e-12, "L={l}");
            }
        }
    }

    #[test]
    fn ising_sector_matches_dense_spectrum() {
        let points = [
            (0.7, -1.3),
            (1.5, 0.1),
            (1.9, 0.28),
            (0.05, 0.02),
            (3.0, -2.0),
        ];
        for l in [3, 4, 5, 6] {
            let cfg = IsingConfig::new(l).unwrap();
            for &(a, b) in &points {
                let point = ParamPoint::new(a, b);
                let dense = ground_state(&ising_hamiltonian(&cfg, point)).unwrap();
                let sector = ising_state(&cfg, point).unwrap();
                assert!(
                    (dense.energy - sector.energy).abs() < 1e-10,
                    "L={l} {point:?}"
                );
                if !dense.is_degenerate(1e-6) {
                    assert!(
                        dense.state.fidelity(&sector.state) > 1.0 - 1e-10,
                        "L={l} {point:?}"
                    );
                }
                assert!(sector.gap >= dense.gap - 1e-10);
            }
        }
    }

    #[test]
    fn ising_zero_longitudinal_field_degeneracy() {
        // Even rings at weak transverse field have two Neel ground states.
        let cfg = IsingConfig::new(4).unwrap();
        assert!(ising_state(&cfg, ParamPoint::new(0.3, 0.0))
            .unwrap()
            .is_degenerate(DEGENERACY_TOL));
        assert!(!ising_state(&cfg, ParamPoint::new(3.0, 0.0))
            .unwrap()
            .is_degenerate(DEGENERACY_TOL));
        assert!(!ising_state(&cfg, ParamPoint::new(0.3, 0.2))
            .unwrap()
            .is_degenerate(DEGENERACY_TOL));
    }

    #[test]
    fn ising_commutes_with_translation() {
        let cfg = IsingConfig::new(5).unwrap();
        let h = ising_hamiltonian(&cfg, ParamPoint::new(0.7, -1.3));
        let h = h.as_real().unwrap();
        let dim = cfg.dim();
        let l = cfg.length();
        let mut t = DMatrix::<f64>::zeros(dim, dim);
        for idx in 0..dim {
            let shifted = ((idx << 1) | (idx >> (l - 1))) & (dim - 1);
            t[(shifted, idx)] = 1.0;
        }
        let comm = h * &t - &t * h;
        assert!(comm.amax() < 1e-10);
    }

    #[test]
    fn ising_strong_field_ground_state() {
        for l in [3, 4, 6] {
            let cfg = IsingConfig::new(l).unwrap();
            let gs = ising_state(&cfg, ParamPoint::new(0.0, 10.0)).unwrap();
            let aligned = PureState::basis(cfg.dim(), 0).unwrap();
            // Each bond mixes in a flipped pair with amplitude J / (4 hz).
            let fidelity = gs.state.fidelity(&aligned);
            assert!(fidelity > 0.99, "L={l}");
            assert!(
                (fidelity - (1.0 - l as f64 / 1600.0)).abs() < 5e-4,
                "L={l}: {fidelity}"
            );
            if l == 4 {
                // Second-order correction: each of the L bonds lowers the energy by ~ J^2 / (4 hz).
                let expected = -40.0 - 4.0 / 40.0;
                assert!((gs.energy - expected).abs() < 2e-3, "{}", gs.energy);
            }
        }
    }

    #[test]
    fn ising_budget() {
        assert!(matches!(
            IsingConfig::new(2),
            Err(Error::DimensionBudget { .. })
        ));
        assert!(matches!(
            IsingConfig::new(13),
            Err(Error::DimensionBudget { .. })
        ));
        assert!(magnetization_povm(2, Axis::Z).is_err());
    }

    #[test]
    fn gaussian_qfim_structure() {
        let q = gaussian_qfim(&GaussianConfig::new(1.3, 0.0).unwrap(), 0.7);
        assert_eq!(q.q12, 0.0);
        let q = gaussian_qfim(&GaussianConfig::new(0.0, 0.0).unwrap(), 0.0);
        assert_eq!(q, Qfim::new(0.0, 0.0, 0.0));
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let q = gaussian_qfim(&GaussianConfig::new(s, s).unwrap(), 0.0);
        assert!((q.q11 - 8.0).abs() < 1e-14);
        assert!((q.q12 + 8.0).abs() < 1e-14);
        assert!((q.q22 - 8.0).abs() < 1e-14);
        assert!(q.det().abs() < 1e-12);
    }

    fn check_povm(p: &Povm) {
        let dim = p.dim();
        let mut total = CMatrix::zeros(dim, dim);
        for e in p.effects() {
            let min = e.clone().symmetric_eigenvalues().min();
            assert!(min > -1e-10);
            // Projectors: E^2 = E.
            assert!((e * e - e).iter().all(|z| z.norm() < 1e-12));
            total += e;
        }
        assert!((total - CMatrix::identity(dim, dim))
            .iter()
            .all(|z| z.norm() < 1e-12));
    }

    #[test]
    fn measurement_settings_are_valid() {
        let (a, b) = qubit_measurements();
        check_povm(&a);
        check_povm(&b);
        let (a, b) = lz_measurements();
        check_povm(&a);
        check_povm(&b);
        for axis in [Axis::X, Axis::Z] {
            check_povm(&magnetization_povm(4, axis).unwrap().to_povm().unwrap());
        }
        assert!(magnetization_povm(9, Axis::Z).unwrap().to_povm().is_err());
    }

    #[test]
    fn magnetization_ranks_and_probabilities() {
        let m = magnetization_povm(3, Axis::Z).unwrap();
        let povm = m.to_povm().unwrap();
        let ranks: Vec<usize> = povm
            .effects()
            .iter()
            .map(|e| e.trace().re.round() as usize)
            .collect();
        assert_eq!(ranks, vec![1, 3, 3, 1]);
        assert_eq!(m.eigenvalues(), vec![-3, -1, 1, 3]);

        let up = PureState::basis(8, 0).unwrap();
        assert_eq!(m.probabilities(&up).unwrap(), vec![0.0, 0.0, 0.0, 1.0]);

        let m4 = magnetization_povm(4, Axis::Z).unwrap();
        let uniform = PureState::from_real(&[1.0; 16]).unwrap();
        let p = m4.probabilities(&uniform).unwrap();
        for (got, want) in p.iter().zip([1.0, 4.0, 6.0, 4.0, 1.0]) {
            assert!((got - want / 16.0).abs() < 1e-14);
        }
        // The uniform state is the all-plus state: x magnetization is +L with certainty.
        let px = magnetization_povm(4, Axis::X)
            .unwrap()
            .probabilities(&uniform)
            .unwrap();
        assert!((px[4] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn regrouping_matches_explicit_projectors() {
        let cfg = IsingConfig::new(5).unwrap();
        let gs = ising_state(&cfg, ParamPoint::new(0.8, 0.6)).unwrap();
        for axis in [Axis::X, Axis::Z] {
            let m = magnetization_povm(5, axis).unwrap();
            let fast = m.probabilities(&gs.state).unwrap();
            let slow = born_probabilities(&gs.state, &m.to_povm().unwrap()).unwrap();
            for (a, b) in fast.iter().zip(&slow) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn qubit_curvature_is_bounded_by_qfim() {
        let cfg = QubitProbeConfig::new(PI / 4.0, 3.0 * PI / 8.0).unwrap();
        let b =
            state_derivatives(|p| cfg.sample(p), ParamPoint::new(0.5, 0.5), DEFAULT_STEP).unwrap();
        let q = crate::fisher::qfim_pure(&b);
        let delta = uhlmann_delta(&b);
        assert!(delta.abs() <= (q.q11 * q.q22).sqrt() + 1e-8);
    }
}
