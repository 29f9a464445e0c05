//! Exact statevector simulation of the game circuit and density-operator
//! checks for the reduced participant views.
//!
//! The device circuit is fixed: starting from a GHZ-family state, each qubit
//! `j` receives the phase gate `S = diag(1, i)` when its input bit is set,
//! then a Hadamard, then a computational-basis measurement. The phase gate is
//! conditional on the input bit (an unconditional `S` breaks the perfect-win
//! property).
//!
//! States are dense complex vectors capped at [`MAX_QUBITS`] qubits — every
//! check needed here fits comfortably, and partial traces stay trivial.
//! Values are immutable after construction; evolution returns new states.
//!
//! Basis convention: qubit 0 is the most significant bit of the basis index,
//! so the index of `|y⟩` equals `y.word()` for a [`BitString`] `y`.

use std::collections::BTreeMap;
use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use thiserror::Error;

use crate::bitcore::BitString;

/// Desk-scale cap on qubit count (`2^12` amplitudes).
pub const MAX_QUBITS: usize = 12;

/// Tolerance for all norm and matrix comparisons. Double precision on
/// `≤ 2^12`-dimensional objects stays well under this bound.
pub const TOL: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum QuantumError {
    #[error("qubit count {0} exceeds the supported maximum {MAX_QUBITS}")]
    TooManyQubits(usize),
    #[error("amplitude vector length {0} is not a power of two")]
    NotPowerOfTwo(usize),
    #[error("state norm² deviates from 1 by {0:.3e}")]
    NotNormalized(f64),
    #[error("GHZ base must have its first bit clear, got {0}")]
    NonCanonicalBase(BitString),
    #[error("input length {input} does not match qubit count {qubits}")]
    InputLengthMismatch { input: usize, qubits: usize },
    #[error("keep set is empty")]
    EmptyKeepSet,
    #[error("keep set must be strictly increasing and within 0..{qubits}")]
    InvalidKeepSet { qubits: usize },
    #[error("partition index j = {0} outside 1..=5")]
    PartitionIndexOutOfRange(usize),
}

/// Sign of the second branch of a GHZ-family state.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sign::Plus => "+",
            Sign::Minus => "-",
        })
    }
}

/// Label of one state in the GHZ basis: `(|a⟩ ± |ā⟩)/√2` with the canonical
/// representative `a` having its first bit clear.
///
/// For `n` qubits the labels enumerate exactly `2^n` distinct states
/// (`2^{n-1}` bases × 2 signs).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct GhzLabel {
    base: BitString,
    sign: Sign,
}

impl GhzLabel {
    pub fn new(base: BitString, sign: Sign) -> Result<Self, QuantumError> {
        if base.len() > MAX_QUBITS {
            return Err(QuantumError::TooManyQubits(base.len()));
        }
        if base.bit(0) != 0 {
            return Err(QuantumError::NonCanonicalBase(base));
        }
        Ok(Self { base, sign })
    }

    /// The target state of the protocol: all-zero base with plus sign,
    /// `(|0…0⟩ + |1…1⟩)/√2`.
    pub fn ideal(n: usize) -> Result<Self, QuantumError> {
        Self::new(BitString::zeros(n), Sign::Plus)
    }

    /// All `2^n` labels, bases ascending, plus before minus.
    pub fn enumerate(n: usize) -> Result<Vec<Self>, QuantumError> {
        if n > MAX_QUBITS {
            return Err(QuantumError::TooManyQubits(n));
        }
        let mut out = Vec::with_capacity(1 << n);
        for base in 0..(1u32 << (n - 1)) {
            let b = BitString::new(base, n).expect("base fits");
            out.push(Self { base: b, sign: Sign::Plus });
            out.push(Self { base: b, sign: Sign::Minus });
        }
        Ok(out)
    }

    pub fn base(&self) -> BitString {
        self.base
    }

    pub fn sign(&self) -> Sign {
        self.sign
    }

    pub fn qubits(&self) -> usize {
        self.base.len()
    }
}

impl fmt::Display for GhzLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ghz({}{})", self.sign, self.base)
    }
}

/// Dense state of `n ≤ 12` qubits: `2^n` complex amplitudes, unit norm.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    amps: Vec<Complex64>,
    qubits: usize,
}

impl StateVector {
    /// Wraps an amplitude vector, validating the power-of-two length, the
    /// qubit cap, and unit norm (within [`TOL`]).
    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<Self, QuantumError> {
        let len = amps.len();
        if !len.is_power_of_two() || len == 0 {
            return Err(QuantumError::NotPowerOfTwo(len));
        }
        let qubits = len.trailing_zeros() as usize;
        if qubits > MAX_QUBITS {
            return Err(QuantumError::TooManyQubits(qubits));
        }
        let state = Self { amps, qubits };
        let err = (state.norm_sqr() - 1.0).abs();
        if err > TOL {
            return Err(QuantumError::NotNormalized(err));
        }
        Ok(state)
    }

    /// Computational basis state `|b⟩`.
    pub fn basis_state(b: &BitString) -> Result<Self, QuantumError> {
        if b.len() > MAX_QUBITS {
            return Err(QuantumError::TooManyQubits(b.len()));
        }
        let mut amps = vec![Complex64::ZERO; 1 << b.len()];
        amps[b.word() as usize] = Complex64::ONE;
        Ok(Self { amps, qubits: b.len() })
    }

    pub fn qubit_count(&self) -> usize {
        self.qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    /// Amplitude of the basis state `|y⟩`.
    pub fn amplitude(&self, y: &BitString) -> Complex64 {
        assert_eq!(y.len(), self.qubits, "basis label length mismatch");
        self.amps[y.word() as usize]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Measurement distribution over all `2^n` outcomes, keyed by bitstring.
    pub fn output_distribution(&self) -> BTreeMap<BitString, f64> {
        self.amps
            .iter()
            .enumerate()
            .map(|(b, a)| {
                (
                    BitString::new(b as u32, self.qubits).expect("index fits"),
                    a.norm_sqr(),
                )
            })
            .collect()
    }

    /// Basis states with amplitude magnitude above `tol`.
    pub fn support(&self, tol: f64) -> Vec<BitString> {
        self.amps
            .iter()
            .enumerate()
            .filter(|(_, a)| a.norm() > tol)
            .map(|(b, _)| BitString::new(b as u32, self.qubits).expect("index fits"))
            .collect()
    }

    /// Draws one measurement outcome. Deterministic given the rng state.
    pub fn sample_output<R: Rng>(&self, rng: &mut R) -> BitString {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut last = 0usize;
        for (b, a) in self.amps.iter().enumerate() {
            let p = a.norm_sqr();
            if p > 0.0 {
                last = b;
            }
            acc += p;
            if u < acc {
                return BitString::new(b as u32, self.qubits).expect("index fits");
            }
        }
        // u landed in the rounding slack past the final cumulative sum.
        BitString::new(last as u32, self.qubits).expect("index fits")
    }
}

/// Prepares the GHZ-family state `(|a⟩ + sign·|ā⟩)/√2` for a label.
pub fn prepare_ghz(label: &GhzLabel) -> StateVector {
    let n = label.qubits();
    let mut amps = vec![Complex64::ZERO; 1 << n];
    let amp = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    amps[label.base().word() as usize] = amp;
    amps[label.base().complement().word() as usize] = amp * label.sign().value();
    StateVector { amps, qubits: n }
}

/// Applies the device circuit for input `x`: the phase gate `S` on every
/// qubit whose input bit is set, then a Hadamard on all qubits.
///
/// Basis state `|b⟩` picks up the phase `i^{x·b}`; the Hadamard layer is an
/// in-place Walsh–Hadamard butterfly scaled by `2^{-n/2}`. Norm is preserved.
pub fn apply_inputs(state: &StateVector, x: &BitString) -> Result<StateVector, QuantumError> {
    let n = state.qubit_count();
    if x.len() != n {
        return Err(QuantumError::InputLengthMismatch { input: x.len(), qubits: n });
    }
    let mut amps = state.amps.clone();
    for (b, a) in amps.iter_mut().enumerate() {
        *a *= phase_i_pow((x.word() & b as u32).count_ones());
    }
    walsh_hadamard(&mut amps);
    let scale = (1.0 / amps.len() as f64).sqrt();
    for a in amps.iter_mut() {
        *a *= scale;
    }
    Ok(StateVector { amps, qubits: n })
}

/// `i^k` for integer `k`.
fn phase_i_pow(k: u32) -> Complex64 {
    match k % 4 {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    }
}

/// Unnormalized fast Walsh–Hadamard transform over all qubit axes.
fn walsh_hadamard(amps: &mut [Complex64]) {
    let len = amps.len();
    let mut h = 1;
    while h < len {
        let mut start = 0;
        while start < len {
            for i in start..start + h {
                let a = amps[i];
                let b = amps[i + h];
                amps[i] = a + b;
                amps[i + h] = a - b;
            }
            start += 2 * h;
        }
        h *= 2;
    }
}

/// Dense density operator on `k` qubits.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityOperator {
    mat: DMatrix<Complex64>,
    qubits: usize,
}

impl DensityOperator {
    /// `|ψ⟩⟨ψ|` of a pure state.
    pub fn from_state(state: &StateVector) -> Self {
        let dim = state.amps.len();
        let mat = DMatrix::from_fn(dim, dim, |r, c| state.amps[r] * state.amps[c].conj());
        Self { mat, qubits: state.qubit_count() }
    }

    pub fn qubit_count(&self) -> usize {
        self.qubits
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.mat
    }

    pub fn trace(&self) -> Complex64 {
        self.mat.diagonal().iter().sum()
    }

    /// Largest entrywise deviation from `ρ = ρ†`.
    pub fn hermiticity_error(&self) -> f64 {
        let mut worst = 0.0f64;
        for r in 0..self.dim() {
            for c in 0..self.dim() {
                worst = worst.max((self.mat[(r, c)] - self.mat[(c, r)].conj()).norm());
            }
        }
        worst
    }

    /// Smallest eigenvalue of the (Hermitian) operator.
    pub fn min_eigenvalue(&self) -> f64 {
        let eig = nalgebra::linalg::SymmetricEigen::new(self.mat.clone());
        eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Frobenius distance `‖ρ − σ‖_F`; infinite when dimensions differ.
    pub fn frobenius_distance(&self, other: &Self) -> f64 {
        if self.dim() != other.dim() {
            return f64::INFINITY;
        }
        (&self.mat - &other.mat).norm()
    }
}

/// Partial trace keeping the listed qubits (strictly increasing indices).
/// The complement is traced out; the total trace is preserved.
pub fn partial_trace(
    rho: &DensityOperator,
    keep: &[usize],
) -> Result<DensityOperator, QuantumError> {
    let k = rho.qubit_count();
    if keep.is_empty() {
        return Err(QuantumError::EmptyKeepSet);
    }
    let increasing = keep.windows(2).all(|w| w[0] < w[1]);
    if !increasing || *keep.last().unwrap() >= k {
        return Err(QuantumError::InvalidKeepSet { qubits: k });
    }
    let traced: Vec<usize> = (0..k).filter(|q| !keep.contains(q)).collect();
    let kd = keep.len();
    let td = traced.len();
    // Scatter a reduced index over the kept qubit positions (qubit 0 = MSB).
    let scatter = |bits: usize, positions: &[usize]| -> usize {
        let mut full = 0usize;
        for (r, &q) in positions.iter().enumerate() {
            if (bits >> (positions.len() - 1 - r)) & 1 == 1 {
                full |= 1 << (k - 1 - q);
            }
        }
        full
    };
    let mut out = DMatrix::from_element(1 << kd, 1 << kd, Complex64::ZERO);
    for row in 0..1usize << kd {
        for col in 0..1usize << kd {
            let mut acc = Complex64::ZERO;
            for t in 0..1usize << td {
                let env = scatter(t, &traced);
                acc += rho.mat[(scatter(row, keep) | env, scatter(col, keep) | env)];
            }
            out[(row, col)] = acc;
        }
    }
    Ok(DensityOperator { mat: out, qubits: kd })
}

/// Tests whether the two participants' reduced states coincide when the
/// seven qubits are split `(1, j, 6−j)`.
///
/// Builds the ideal 7-qubit GHZ density operator, reduces onto qubits
/// `1..=j` and `j+1..=6`, and compares dimension and Frobenius distance
/// (threshold [`TOL`]). Only `j = 3` gives indistinguishable views.
pub fn reduced_views_equal(j: usize) -> Result<bool, QuantumError> {
    if !(1..=5).contains(&j) {
        return Err(QuantumError::PartitionIndexOutOfRange(j));
    }
    let ghz = prepare_ghz(&GhzLabel::ideal(7)?);
    let rho = DensityOperator::from_state(&ghz);
    let first: Vec<usize> = (1..=j).collect();
    let second: Vec<usize> = (j + 1..=6).collect();
    let rho_b = partial_trace(&rho, &first)?;
    let rho_c = partial_trace(&rho, &second)?;
    Ok(rho_b.dim() == rho_c.dim() && rho_b.frobenius_distance(&rho_c) < TOL)
}
