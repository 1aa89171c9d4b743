//! Simulation of the strongly entangling ansatz in three fidelity modes:
//! exact statevector, shot-sampled, and density matrix with depolarizing
//! noise plus readout flips.
//!
//! Conventions fixed here and relied on everywhere else:
//!
//! * Wire 0 is the top wire and the **most significant bit** of basis
//!   indices, so basis index 2 on two qubits is |10⟩ with qubit 0 = 1.
//! * Each layer applies a three-angle rotation Rot(a, b, c) = RZ(a)·RY(b)·RZ(c)
//!   to every qubit (RZ(c) acts first), then CNOT entanglers in ring order
//!   with control (q+1) mod n and target q. For two qubits that is
//!   CNOT(control 1 → target 0) followed by CNOT(control 0 → target 1).
//! * Sampling draws one pseudo-random stream per (group, evaluation), derived
//!   from the mode seed with [`derive_seed`], so runs are bit-reproducible
//!   and independent of group evaluation order.

use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::matrix::{C64, CMatrix};
use crate::pauli::{Pauli, PauliHamiltonian, PauliString, QwcGroup};

/// Stateless seed derivation (splitmix64 finalizer over a salted master).
pub fn derive_seed(master: u64, salt: u64) -> u64 {
    let mut z = master ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, thiserror::Error)]
pub enum CircuitError {
    #[error("angle count {got} does not match 3·n_qubits·n_layers = {expected}")]
    AngleCount { got: usize, expected: usize },
    #[error("angle {0} is not finite")]
    NonFiniteAngle(usize),
    #[error("basis index {index} out of range for {n_qubits} qubits")]
    BasisIndexOutOfRange { index: usize, n_qubits: usize },
    #[error("state dimension {0} is not a power of two")]
    BadDimension(usize),
    #[error("state norm {0} deviates from 1 beyond 1e-10")]
    NotNormalized(f64),
    #[error("noise probability {name} = {value} outside [0, 1]")]
    BadProbability { name: &'static str, value: f64 },
    #[error("shots must be at least 1")]
    ZeroShots,
    #[error("group {group} references term {term} outside the Hamiltonian")]
    BadGroup { group: usize, term: usize },
}

/// Rotation angles of the layered ansatz: 3 angles per qubit per layer.
#[derive(Debug, Clone, PartialEq)]
pub struct AnsatzParams {
    n_qubits: usize,
    n_layers: usize,
    angles: Vec<f64>,
}

impl AnsatzParams {
    pub fn new(n_qubits: usize, n_layers: usize, angles: Vec<f64>) -> Result<Self, CircuitError> {
        let expected = 3 * n_qubits * n_layers;
        if angles.len() != expected {
            return Err(CircuitError::AngleCount {
                got: angles.len(),
                expected,
            });
        }
        if let Some(i) = angles.iter().position(|a| !a.is_finite()) {
            return Err(CircuitError::NonFiniteAngle(i));
        }
        Ok(Self {
            n_qubits,
            n_layers,
            angles,
        })
    }

    pub fn zeros(n_qubits: usize, n_layers: usize) -> Self {
        Self {
            n_qubits,
            n_layers,
            angles: vec![0.0; 3 * n_qubits * n_layers],
        }
    }

    /// Uniform angles in [−π, π].
    pub fn random<R: Rng + ?Sized>(n_qubits: usize, n_layers: usize, rng: &mut R) -> Self {
        let angles = (0..3 * n_qubits * n_layers)
            .map(|_| rng.random_range(-std::f64::consts::PI..=std::f64::consts::PI))
            .collect();
        Self {
            n_qubits,
            n_layers,
            angles,
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn n_layers(&self) -> usize {
        self.n_layers
    }

    pub fn angles(&self) -> &[f64] {
        &self.angles
    }

    fn angle(&self, layer: usize, qubit: usize, slot: usize) -> f64 {
        self.angles[3 * (layer * self.n_qubits + qubit) + slot]
    }
}

/// Normalized pure state over 2ⁿ amplitudes.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amps: Vec<C64>,
}

impl StateVector {
    pub fn basis(n_qubits: usize, index: usize) -> Result<Self, CircuitError> {
        let dim = 1usize << n_qubits;
        if index >= dim {
            return Err(CircuitError::BasisIndexOutOfRange {
                index,
                n_qubits,
            });
        }
        let mut amps = vec![C64::new(0.0, 0.0); dim];
        amps[index] = C64::new(1.0, 0.0);
        Ok(Self { n_qubits, amps })
    }

    pub fn from_amplitudes(amps: Vec<C64>) -> Result<Self, CircuitError> {
        if !amps.len().is_power_of_two() {
            return Err(CircuitError::BadDimension(amps.len()));
        }
        let n_qubits = amps.len().trailing_zeros() as usize;
        let state = Self { n_qubits, amps };
        let norm = state.norm();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(CircuitError::NotNormalized(norm));
        }
        Ok(state)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    /// ⟨self|other⟩.
    pub fn inner(&self, other: &StateVector) -> C64 {
        self.amps
            .iter()
            .zip(other.amps.iter())
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }
}

/// Mixed state as a dense 2ⁿ×2ⁿ matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    n_qubits: usize,
    rho: CMatrix,
}

impl DensityMatrix {
    pub fn from_pure(state: &StateVector) -> Self {
        let dim = state.dim();
        let mut rho = CMatrix::zeros(dim);
        for i in 0..dim {
            for j in 0..dim {
                rho[(i, j)] = state.amps[i] * state.amps[j].conj();
            }
        }
        Self {
            n_qubits: state.n_qubits,
            rho,
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.rho
    }

    pub fn trace(&self) -> f64 {
        self.rho.trace().re
    }

    /// Tr(ρ²); 1 for pure states, 1/2ⁿ for the maximally mixed state.
    pub fn purity(&self) -> f64 {
        let n = self.rho.dim();
        let mut sum = 0.0;
        for i in 0..n {
            for j in 0..n {
                sum += self.rho[(i, j)].norm_sqr();
            }
        }
        sum
    }

    /// Diagonal as a clamped, renormalized probability vector.
    pub fn probabilities(&self) -> Vec<f64> {
        let n = self.rho.dim();
        let mut probs: Vec<f64> = (0..n).map(|i| self.rho[(i, i)].re.max(0.0)).collect();
        let total: f64 = probs.iter().sum();
        if total > 0.0 {
            for p in &mut probs {
                *p /= total;
            }
        }
        probs
    }
}

/// Gate-level depolarizing and readout error rates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseConfig {
    /// Depolarizing probability after each single-qubit rotation block.
    pub p_depol_1q: f64,
    /// Depolarizing probability on both qubits after each entangler.
    pub p_depol_2q: f64,
    /// Classical per-qubit bit-flip probability applied to sampled bits.
    pub p_readout_flip: f64,
}

impl NoiseConfig {
    pub fn new(p_depol_1q: f64, p_depol_2q: f64, p_readout_flip: f64) -> Result<Self, CircuitError> {
        for (name, value) in [
            ("p_depol_1q", p_depol_1q),
            ("p_depol_2q", p_depol_2q),
            ("p_readout_flip", p_readout_flip),
        ] {
            if !(0.0..=1.0).contains(&value) {
                return Err(CircuitError::BadProbability { name, value });
            }
        }
        Ok(Self {
            p_depol_1q,
            p_depol_2q,
            p_readout_flip,
        })
    }

    pub fn noiseless() -> Self {
        Self {
            p_depol_1q: 0.0,
            p_depol_2q: 0.0,
            p_readout_flip: 0.0,
        }
    }
}

/// How expectation values are evaluated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EvalMode {
    /// Exact statevector arithmetic.
    Exact,
    /// Shot sampling in QWC measurement bases.
    Sampled { shots: u64, seed: u64 },
    /// Density-matrix evolution with depolarizing noise, then shot sampling
    /// with readout flips.
    Noisy {
        noise: NoiseConfig,
        shots: u64,
        seed: u64,
    },
}

impl EvalMode {
    pub fn is_stochastic(&self) -> bool {
        !matches!(self, EvalMode::Exact)
    }

    pub fn validate(&self) -> Result<(), CircuitError> {
        match self {
            EvalMode::Exact => Ok(()),
            EvalMode::Sampled { shots, .. } => {
                if *shots == 0 {
                    Err(CircuitError::ZeroShots)
                } else {
                    Ok(())
                }
            }
            EvalMode::Noisy { noise, shots, .. } => {
                if *shots == 0 {
                    return Err(CircuitError::ZeroShots);
                }
                NoiseConfig::new(noise.p_depol_1q, noise.p_depol_2q, noise.p_readout_flip)?;
                Ok(())
            }
        }
    }

    /// Same mode with its embedded seed replaced by a derived one; used to
    /// give every evaluation its own stream.
    pub fn reseeded(&self, salt: u64) -> EvalMode {
        match *self {
            EvalMode::Exact => EvalMode::Exact,
            EvalMode::Sampled { shots, seed } => EvalMode::Sampled {
                shots,
                seed: derive_seed(seed, salt),
            },
            EvalMode::Noisy { noise, shots, seed } => EvalMode::Noisy {
                noise,
                shots,
                seed: derive_seed(seed, salt),
            },
        }
    }
}

// ---------------------------------------------------------------------------
// Statevector gates
// ---------------------------------------------------------------------------

fn apply_1q(state: &mut StateVector, qubit: usize, u: &[[C64; 2]; 2]) {
    let n = state.n_qubits;
    let stride = 1usize << (n - 1 - qubit);
    let dim = state.amps.len();
    let mut base = 0;
    while base < dim {
        for offset in 0..stride {
            let i0 = base + offset;
            let i1 = i0 + stride;
            let a0 = state.amps[i0];
            let a1 = state.amps[i1];
            state.amps[i0] = u[0][0] * a0 + u[0][1] * a1;
            state.amps[i1] = u[1][0] * a0 + u[1][1] * a1;
        }
        base += 2 * stride;
    }
}

fn rz_matrix(theta: f64) -> [[C64; 2]; 2] {
    let half = theta / 2.0;
    [
        [Complex64::from_polar(1.0, -half), C64::new(0.0, 0.0)],
        [C64::new(0.0, 0.0), Complex64::from_polar(1.0, half)],
    ]
}

fn ry_matrix(theta: f64) -> [[C64; 2]; 2] {
    let (s, c) = (theta / 2.0).sin_cos();
    [
        [C64::new(c, 0.0), C64::new(-s, 0.0)],
        [C64::new(s, 0.0), C64::new(c, 0.0)],
    ]
}

fn hadamard_matrix() -> [[C64; 2]; 2] {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    [
        [C64::new(h, 0.0), C64::new(h, 0.0)],
        [C64::new(h, 0.0), C64::new(-h, 0.0)],
    ]
}

fn s_dagger_matrix() -> [[C64; 2]; 2] {
    [
        [C64::new(1.0, 0.0), C64::new(0.0, 0.0)],
        [C64::new(0.0, 0.0), C64::new(0.0, -1.0)],
    ]
}

fn apply_cnot(state: &mut StateVector, control: usize, target: usize) {
    let n = state.n_qubits;
    let cbit = 1usize << (n - 1 - control);
    let tbit = 1usize << (n - 1 - target);
    for i in 0..state.amps.len() {
        if i & cbit != 0 && i & tbit == 0 {
            state.amps.swap(i, i | tbit);
        }
    }
}

/// CNOT order of one entangling layer: control (q+1) mod n onto target q.
fn entangler_pairs(n_qubits: usize) -> Vec<(usize, usize)> {
    if n_qubits < 2 {
        return Vec::new();
    }
    (0..n_qubits).map(|q| ((q + 1) % n_qubits, q)).collect()
}

/// Runs the ansatz on an arbitrary initial state.
pub fn apply_ansatz_to(params: &AnsatzParams, initial: &StateVector) -> StateVector {
    assert_eq!(params.n_qubits, initial.n_qubits, "qubit count mismatch");
    let mut state = initial.clone();
    for layer in 0..params.n_layers {
        for q in 0..params.n_qubits {
            // Rot(a, b, c) = RZ(a)·RY(b)·RZ(c): rightmost factor first.
            apply_1q(&mut state, q, &rz_matrix(params.angle(layer, q, 2)));
            apply_1q(&mut state, q, &ry_matrix(params.angle(layer, q, 1)));
            apply_1q(&mut state, q, &rz_matrix(params.angle(layer, q, 0)));
        }
        for (control, target) in entangler_pairs(params.n_qubits) {
            apply_cnot(&mut state, control, target);
        }
    }
    state
}

/// Runs the ansatz from the computational basis state |basis_index⟩.
pub fn apply_ansatz(params: &AnsatzParams, basis_index: usize) -> Result<StateVector, CircuitError> {
    let initial = StateVector::basis(params.n_qubits, basis_index)?;
    Ok(apply_ansatz_to(params, &initial))
}

// ---------------------------------------------------------------------------
// Exact expectation
// ---------------------------------------------------------------------------

/// ⟨ψ|H|ψ⟩ by direct Pauli-string action on the statevector.
pub fn expectation_exact(state: &StateVector, h: &PauliHamiltonian) -> f64 {
    assert_eq!(state.n_qubits, h.n_qubits(), "qubit count mismatch");
    let mut total = 0.0;
    for (string, coeff) in h.terms() {
        let mut acc = C64::new(0.0, 0.0);
        for row in 0..state.dim() {
            let (col, phase) = string.row_action(row);
            acc += state.amps[row].conj() * phase * state.amps[col];
        }
        total += coeff * acc.re;
    }
    total
}

// ---------------------------------------------------------------------------
// Sampled expectation
// ---------------------------------------------------------------------------

fn validate_groups(h: &PauliHamiltonian, groups: &[QwcGroup]) -> Result<(), CircuitError> {
    let mut seen = vec![false; h.terms().len()];
    for (gi, g) in groups.iter().enumerate() {
        for &m in &g.members {
            if m >= seen.len() || seen[m] {
                return Err(CircuitError::BadGroup { group: gi, term: m });
            }
            seen[m] = true;
        }
    }
    if seen.iter().all(|&s| s) {
        Ok(())
    } else {
        Err(CircuitError::BadGroup {
            group: groups.len(),
            term: seen.iter().position(|&s| !s).unwrap(),
        })
    }
}

fn rotate_to_basis_state(state: &mut StateVector, basis: &[Pauli]) {
    for (q, &b) in basis.iter().enumerate() {
        match b {
            Pauli::X => apply_1q(state, q, &hadamard_matrix()),
            Pauli::Y => {
                apply_1q(state, q, &s_dagger_matrix());
                apply_1q(state, q, &hadamard_matrix());
            }
            _ => {}
        }
    }
}

/// ±1 parity of `outcome` restricted to the non-identity positions of `string`.
fn parity(outcome: usize, string: &PauliString, n_qubits: usize) -> f64 {
    let mut p = 1.0;
    for (q, &letter) in string.letters().iter().enumerate() {
        if letter != Pauli::I {
            let bit = (outcome >> (n_qubits - 1 - q)) & 1;
            if bit == 1 {
                p = -p;
            }
        }
    }
    p
}

/// Multinomial shot counts over `probs`, drawn as a chain of binomials in
/// fixed outcome order so the result is a deterministic function of the
/// stream. Distributionally identical to drawing `shots` outcomes one by one.
fn sample_counts<R: Rng>(probs: &[f64], shots: u64, rng: &mut R) -> Vec<u64> {
    let mut counts = vec![0u64; probs.len()];
    let mut remaining = shots;
    let mut rem_p: f64 = probs.iter().sum();
    for (i, &p) in probs.iter().enumerate() {
        if remaining == 0 {
            break;
        }
        if i + 1 == probs.len() || rem_p <= 0.0 {
            counts[i] = remaining;
            remaining = 0;
            break;
        }
        let q = (p / rem_p).clamp(0.0, 1.0);
        let dist = Binomial::new(remaining, q).expect("clamped probability");
        let c = dist.sample(rng);
        counts[i] = c;
        remaining -= c;
        rem_p -= p;
    }
    counts
}

/// Spreads sampled counts over readout bit-flip patterns: every shot flips
/// each bit independently with probability `p_flip`.
fn apply_readout_flips<R: Rng>(counts: &mut [u64], n_qubits: usize, p_flip: f64, rng: &mut R) {
    if p_flip <= 0.0 {
        return;
    }
    let dim = counts.len();
    let patterns = 1usize << n_qubits;
    let mut pattern_probs = vec![0.0f64; patterns];
    for (pattern, q) in pattern_probs.iter_mut().enumerate() {
        let flips = pattern.count_ones() as i32;
        *q = p_flip.powi(flips) * (1.0 - p_flip).powi(n_qubits as i32 - flips);
    }
    let mut flipped = vec![0u64; dim];
    for source in 0..dim {
        if counts[source] == 0 {
            continue;
        }
        let spread = sample_counts(&pattern_probs, counts[source], rng);
        for (pattern, &c) in spread.iter().enumerate() {
            flipped[source ^ pattern] += c;
        }
    }
    counts.copy_from_slice(&flipped);
}

fn group_estimate(
    h: &PauliHamiltonian,
    group: &QwcGroup,
    counts: Option<&[u64]>,
    shots: u64,
    n_qubits: usize,
) -> f64 {
    let mut total = 0.0;
    for &m in &group.members {
        let (string, coeff) = &h.terms()[m];
        if string.is_identity() {
            // Identity is measured classically; no variance, no shots.
            total += coeff;
            continue;
        }
        let counts = counts.expect("non-identity member requires samples");
        let mut mean = 0.0;
        for (outcome, &c) in counts.iter().enumerate() {
            if c > 0 {
                mean += c as f64 * parity(outcome, string, n_qubits);
            }
        }
        total += coeff * mean / shots as f64;
    }
    total
}

/// Shot-sampled estimate of ⟨ψ|H|ψ⟩ using one measurement basis per QWC
/// group. Group `g` uses the stream seeded by `derive_seed(seed, g)`.
pub fn expectation_sampled(
    state: &StateVector,
    h: &PauliHamiltonian,
    groups: &[QwcGroup],
    shots: u64,
    seed: u64,
) -> Result<f64, CircuitError> {
    if shots == 0 {
        return Err(CircuitError::ZeroShots);
    }
    validate_groups(h, groups)?;
    let n = state.n_qubits;
    let mut total = 0.0;
    for (gi, group) in groups.iter().enumerate() {
        let needs_sampling = group
            .members
            .iter()
            .any(|&m| !h.terms()[m].0.is_identity());
        if !needs_sampling {
            total += group_estimate(h, group, None, shots, n);
            continue;
        }
        let mut rotated = state.clone();
        rotate_to_basis_state(&mut rotated, &group.basis);
        let probs = rotated.probabilities();
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, gi as u64));
        let counts = sample_counts(&probs, shots, &mut rng);
        total += group_estimate(h, group, Some(&counts), shots, n);
    }
    Ok(total)
}

// ---------------------------------------------------------------------------
// Density-matrix evolution with noise
// ---------------------------------------------------------------------------

fn apply_1q_dm(rho: &mut CMatrix, n_qubits: usize, qubit: usize, u: &[[C64; 2]; 2]) {
    let dim = rho.dim();
    let stride = 1usize << (n_qubits - 1 - qubit);
    // Rows: ρ <- U ρ
    for col in 0..dim {
        let mut base = 0;
        while base < dim {
            for offset in 0..stride {
                let i0 = base + offset;
                let i1 = i0 + stride;
                let a0 = rho[(i0, col)];
                let a1 = rho[(i1, col)];
                rho[(i0, col)] = u[0][0] * a0 + u[0][1] * a1;
                rho[(i1, col)] = u[1][0] * a0 + u[1][1] * a1;
            }
            base += 2 * stride;
        }
    }
    // Columns: ρ <- ρ U†
    for row in 0..dim {
        let mut base = 0;
        while base < dim {
            for offset in 0..stride {
                let j0 = base + offset;
                let j1 = j0 + stride;
                let a0 = rho[(row, j0)];
                let a1 = rho[(row, j1)];
                rho[(row, j0)] = a0 * u[0][0].conj() + a1 * u[0][1].conj();
                rho[(row, j1)] = a0 * u[1][0].conj() + a1 * u[1][1].conj();
            }
            base += 2 * stride;
        }
    }
}

fn apply_cnot_dm(rho: &mut CMatrix, n_qubits: usize, control: usize, target: usize) {
    let dim = rho.dim();
    let cbit = 1usize << (n_qubits - 1 - control);
    let tbit = 1usize << (n_qubits - 1 - target);
    let map = |i: usize| if i & cbit != 0 { i ^ tbit } else { i };
    let mut out = CMatrix::zeros(dim);
    for i in 0..dim {
        for j in 0..dim {
            out[(map(i), map(j))] = rho[(i, j)];
        }
    }
    *rho = out;
}

/// ρ → (1−p)·ρ + p·(I/2^|S| ⊗ Tr_S ρ): full depolarization replaces the
/// touched qubits by the maximally mixed state.
fn depolarize(rho: &mut CMatrix, n_qubits: usize, qubits: &[usize], p: f64) {
    if p == 0.0 {
        return;
    }
    let dim = rho.dim();
    let masks: Vec<usize> = qubits.iter().map(|&q| 1usize << (n_qubits - 1 - q)).collect();
    let union: usize = masks.iter().fold(0, |acc, m| acc | m);
    let sub = 1usize << qubits.len();
    let mut mixed = CMatrix::zeros(dim);
    for i in 0..dim {
        for j in 0..dim {
            if (i & union) != (j & union) {
                continue;
            }
            let mut acc = C64::new(0.0, 0.0);
            for s in 0..sub {
                let mut ii = i & !union;
                let mut jj = j & !union;
                for (b, &mask) in masks.iter().enumerate() {
                    if (s >> b) & 1 == 1 {
                        ii |= mask;
                        jj |= mask;
                    }
                }
                acc += rho[(ii, jj)];
            }
            mixed[(i, j)] = acc / sub as f64;
        }
    }
    for i in 0..dim {
        for j in 0..dim {
            let v = rho[(i, j)];
            rho[(i, j)] = v * (1.0 - p) + mixed[(i, j)] * p;
        }
    }
}

/// Evolves ρ = |initial⟩⟨initial| through the ansatz with a depolarizing
/// channel after each rotation block and each entangler.
pub fn evolve_noisy_from(
    params: &AnsatzParams,
    initial: &StateVector,
    noise: &NoiseConfig,
) -> DensityMatrix {
    assert_eq!(params.n_qubits, initial.n_qubits(), "qubit count mismatch");
    let n = params.n_qubits;
    let mut dm = DensityMatrix::from_pure(initial);
    for layer in 0..params.n_layers {
        for q in 0..n {
            apply_1q_dm(&mut dm.rho, n, q, &rz_matrix(params.angle(layer, q, 2)));
            apply_1q_dm(&mut dm.rho, n, q, &ry_matrix(params.angle(layer, q, 1)));
            apply_1q_dm(&mut dm.rho, n, q, &rz_matrix(params.angle(layer, q, 0)));
            depolarize(&mut dm.rho, n, &[q], noise.p_depol_1q);
        }
        for (control, target) in entangler_pairs(n) {
            apply_cnot_dm(&mut dm.rho, n, control, target);
            depolarize(&mut dm.rho, n, &[control, target], noise.p_depol_2q);
        }
    }
    dm
}

pub fn evolve_noisy(
    params: &AnsatzParams,
    basis_index: usize,
    noise: &NoiseConfig,
) -> Result<DensityMatrix, CircuitError> {
    let initial = StateVector::basis(params.n_qubits, basis_index)?;
    Ok(evolve_noisy_from(params, &initial, noise))
}

/// Tr(ρH), the deterministic density-matrix expectation.
pub fn expectation_density_exact(dm: &DensityMatrix, h: &PauliHamiltonian) -> f64 {
    assert_eq!(dm.n_qubits, h.n_qubits(), "qubit count mismatch");
    let dim = dm.rho.dim();
    let mut total = 0.0;
    for (string, coeff) in h.terms() {
        let mut tr = C64::new(0.0, 0.0);
        for row in 0..dim {
            let (col, phase) = string.row_action(row);
            tr += phase * dm.rho[(col, row)];
        }
        total += coeff * tr.re;
    }
    total
}

/// Shot-sampled estimate over an evolved density matrix. The measurement
/// basis rotations pick up the same single-qubit depolarizing noise as the
/// ansatz gates; readout flips are applied to each sampled bit.
pub fn expectation_noisy(
    dm: &DensityMatrix,
    h: &PauliHamiltonian,
    groups: &[QwcGroup],
    noise: &NoiseConfig,
    shots: u64,
    seed: u64,
) -> Result<f64, CircuitError> {
    if shots == 0 {
        return Err(CircuitError::ZeroShots);
    }
    validate_groups(h, groups)?;
    let n = dm.n_qubits;
    let mut total = 0.0;
    for (gi, group) in groups.iter().enumerate() {
        let needs_sampling = group
            .members
            .iter()
            .any(|&m| !h.terms()[m].0.is_identity());
        if !needs_sampling {
            total += group_estimate(h, group, None, shots, n);
            continue;
        }
        let mut rotated = dm.rho.clone();
        for (q, &b) in group.basis.iter().enumerate() {
            match b {
                Pauli::X => {
                    apply_1q_dm(&mut rotated, n, q, &hadamard_matrix());
                    depolarize(&mut rotated, n, &[q], noise.p_depol_1q);
                }
                Pauli::Y => {
                    apply_1q_dm(&mut rotated, n, q, &s_dagger_matrix());
                    apply_1q_dm(&mut rotated, n, q, &hadamard_matrix());
                    depolarize(&mut rotated, n, &[q], noise.p_depol_1q);
                }
                _ => {}
            }
        }
        let probs: Vec<f64> = {
            let tmp = DensityMatrix {
                n_qubits: n,
                rho: rotated,
            };
            tmp.probabilities()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, gi as u64));
        let mut counts = vec![0u64; probs.len()];
        for _ in 0..shots {
            let u: f64 = rng.random();
            let mut acc = 0.0;
            let mut outcome = probs.len() - 1;
            for (i, &p) in probs.iter().enumerate() {
                acc += p;
                if u < acc {
                    outcome = i;
                    break;
                }
            }
            if noise.p_readout_flip > 0.0 {
                for q in 0..n {
                    if rng.random::<f64>() < noise.p_readout_flip {
                        outcome ^= 1 << (n - 1 - q);
                    }
                }
            }
            counts[outcome] += 1;
        }
        total += group_estimate(h, group, Some(&counts), shots, n);
    }
    Ok(total)
}

/// Runs the ansatz on `initial` and evaluates ⟨H⟩ in the requested mode.
pub fn evaluate(
    params: &AnsatzParams,
    initial: &StateVector,
    h: &PauliHamiltonian,
    groups: &[QwcGroup],
    mode: &EvalMode,
) -> Result<f64, CircuitError> {
    match mode {
        EvalMode::Exact => Ok(expectation_exact(&apply_ansatz_to(params, initial), h)),
        EvalMode::Sampled { shots, seed } => {
            expectation_sampled(&apply_ansatz_to(params, initial), h, groups, *shots, *seed)
        }
        EvalMode::Noisy { noise, shots, seed } => {
            let dm = evolve_noisy_from(params, initial, noise);
            expectation_noisy(&dm, h, groups, noise, *shots, *seed)
        }
    }
}
